"""
Static equilibria of loaded beams: J q = -F by BiCGSTAB with an incomplete
LU preconditioner, for patch networks and for the full-width reference beam.
"""
import logging
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, bicgstab, spilu

from src.elastic_micro import BodyForce, MaterialField, MicroGridSpec
from src.patch_net import MacroBC, PatchNetwork, PatchScheme
from src.solvers import SolverError
from src.solvers.jacobian import assemble_jacobian

logger = logging.getLogger(__name__)


@dataclass
class EquilibriumResult:
    q: np.ndarray
    residual: float
    iterations: int
    preconditioned: bool
    wall_time: float


def _ilu_operator(matrix: sp.csc_matrix, drop_tol: float, fill_factor: float) -> LinearOperator | None:
    try:
        factor = spilu(matrix, drop_tol=drop_tol, fill_factor=fill_factor)
    except RuntimeError as e:
        logger.warning(f"Incomplete LU broke down ({e}); iterating without a preconditioner")
        return None
    return LinearOperator(matrix.shape, factor.solve)


def equilibrium(
    jac: np.ndarray | sp.spmatrix,
    forcing: np.ndarray,
    rtol: float = 1e-9,
    maxiter: int | None = None,
    preconditioner: str = "ilu",
    drop_tol: float = 1e-6,
    fill_factor: float = 10.0,
    restarts: int = 3,
) -> EquilibriumResult:
    """Solves J q = -F; the relative residual ||J q + F|| / ||F|| meets rtol or SolverError is raised."""
    matrix = sp.csc_matrix(jac, dtype=float)
    rhs = -np.asarray(forcing, dtype=float)
    if matrix.shape[0] != matrix.shape[1] or matrix.shape[0] != rhs.shape[0]:
        raise ValueError(f"Jacobian {matrix.shape} and forcing {rhs.shape} do not match")
    if preconditioner not in ("ilu", "none"):
        raise ValueError(f"unknown preconditioner {preconditioner!r}")

    start = time.perf_counter()
    scale = np.linalg.norm(rhs)
    if scale == 0.0:
        return EquilibriumResult(np.zeros_like(rhs), 0.0, 0, False, 0.0)

    # 1. Preconditioner
    operator = _ilu_operator(matrix, drop_tol, fill_factor) if preconditioner == "ilu" else None

    # 2. Krylov iteration, restarted from the last iterate while the true residual is too large
    count = 0

    def tally(_):
        nonlocal count
        count += 1

    q = np.zeros_like(rhs)
    residual = 1.0
    for attempt in range(restarts + 1):
        before, start_q = count, q.copy()
        q, info = bicgstab(matrix, rhs, x0=q, rtol=rtol, atol=0.0, maxiter=maxiter, M=operator, callback=tally)
        # scipy skips the callback when it converges half way through an iteration
        if info == 0 and count == before and not np.array_equal(q, start_q):
            count += 1
        residual = float(np.linalg.norm(matrix @ q - rhs) / scale)
        if info < 0:
            raise SolverError(f"BiCGSTAB breakdown (info={info}) at relative residual {residual:.3e}")
        if residual <= rtol:
            break
        logger.debug(f"BiCGSTAB attempt {attempt + 1}: info={info}, residual {residual:.3e}")
    else:
        raise SolverError(f"BiCGSTAB did not reach rtol={rtol:g}: relative residual {residual:.3e} "
                          f"after {count} iterations")

    elapsed = time.perf_counter() - start
    logger.info(f"Equilibrium of {len(rhs)} unknowns: {count} iterations, residual {residual:.2e}, "
                f"{elapsed:.2f}s{'' if operator is not None else ' (unpreconditioned)'}")
    return EquilibriumResult(q=q, residual=residual, iterations=count,
                             preconditioned=operator is not None, wall_time=elapsed)


def scheme_equilibrium(scheme: PatchScheme, **options) -> EquilibriumResult:
    """Equilibrium of a forced patch scheme: J from the unforced scheme, F = f(0)."""
    jac = assemble_jacobian(scheme.unforced(), scheme.dim, vectorized=True, sparse=True)
    return equilibrium(jac, scheme.forcing_vector(), **options)


def full_domain_reference(
    grid: MicroGridSpec,
    length: float,
    macro_bc: MacroBC | str,
    material: MaterialField,
    force: BodyForce,
    kappa: float = 0.0,
    **options,
) -> tuple[PatchNetwork, EquilibriumResult]:
    """The same equilibrium machinery on one patch spanning the whole beam."""
    net = PatchNetwork.full_domain(grid, length, macro_bc, material)
    logger.info(f"Full-domain reference: {grid.nx} interior columns, {net.dim} unknowns")
    return net, scheme_equilibrium(PatchScheme(net, [force], kappa), **options)
