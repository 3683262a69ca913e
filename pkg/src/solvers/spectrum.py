"""
Eigenvalues of the assembled Jacobian, their classification into rigid,
macroscale and sub-patch modes, and compression / bending branch labels.
"""
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigs

from src.solvers import SolverError

logger = logging.getLogger(__name__)

RIGID = "rigid"
MACRO = "macro"
SUBPATCH = "subpatch"


@dataclass(frozen=True)
class SpectrumThresholds:
    zero_tol: float = 1e-5
    macro_imag_max: float = 3.0
    macro_real_min: float = -0.02


@dataclass
class Spectrum:
    eigenvalues: np.ndarray                       # complex (n,)
    eigenvectors: np.ndarray | None = None        # columns, complex (dim, n)
    residuals: np.ndarray | None = None
    classes: np.ndarray | None = None             # str per eigenvalue
    branches: np.ndarray | None = None            # compression / bending / ambiguous / "" per eigenvalue
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.eigenvalues)

    def select(self, cls: str) -> np.ndarray:
        if self.classes is None:
            raise ValueError("spectrum has not been classified")
        return self.eigenvalues[self.classes == cls]

    def max_real(self, exclude_rigid: bool = True) -> float:
        values = self.eigenvalues
        if exclude_rigid and self.classes is not None:
            values = values[self.classes != RIGID]
        return float(values.real.max()) if len(values) else float("-inf")

    def max_abs_real(self) -> float:
        return float(np.abs(self.eigenvalues.real).max())


def spectrum(jac: np.ndarray, vectors: bool = True) -> Spectrum:
    """All eigenvalues of a dense real matrix (LAPACK geev: balancing, Hessenberg, shifted QR)."""
    jac = np.asarray(jac)
    if jac.ndim != 2 or jac.shape[0] != jac.shape[1]:
        raise ValueError(f"Jacobian must be square, got shape {jac.shape}")
    if not np.all(np.isfinite(jac)):
        raise ValueError("Jacobian has non-finite entries")

    start = time.perf_counter()
    try:
        if vectors:
            values, vecs = scipy.linalg.eig(jac, check_finite=False)
        else:
            values, vecs = scipy.linalg.eigvals(jac, check_finite=False), None
    except scipy.linalg.LinAlgError as e:
        raise SolverError(f"dense eigensolve did not converge: {e}") from e

    residuals = None
    if vecs is not None:
        norm = np.linalg.norm(jac, "fro") or 1.0
        residuals = np.linalg.norm(jac @ vecs - vecs * values, axis=0) / norm

    order = np.lexsort((values.imag, values.real, np.abs(values.imag)))
    values = values[order]
    if vecs is not None:
        vecs, residuals = vecs[:, order], residuals[order]
    logger.info(f"Dense eigensolve of {jac.shape[0]} unknowns in {time.perf_counter() - start:.2f}s")
    return Spectrum(eigenvalues=values, eigenvectors=vecs, residuals=residuals)


def classify(spec: Spectrum, thresholds: SpectrumThresholds = SpectrumThresholds()) -> Spectrum:
    lam = spec.eigenvalues
    classes = np.full(len(lam), SUBPATCH, dtype=object)
    macro = (np.abs(lam.imag) < thresholds.macro_imag_max) & (lam.real > thresholds.macro_real_min)
    classes[macro] = MACRO
    classes[np.abs(lam) < thresholds.zero_tol] = RIGID
    spec.classes = classes
    spec.meta["thresholds"] = thresholds
    return spec


def label_branches(
    spec: Spectrum,
    mean_norms: Callable[[np.ndarray], tuple[float, float]],
    dominance: float = 2.0,
) -> Spectrum:
    """
    Macro modes dominated by the cross-beam mean of u are compression,
    by the mean of v bending. Ratios within `dominance` are ambiguous.
    """
    if spec.classes is None:
        raise ValueError("classify the spectrum before labelling branches")
    if spec.eigenvectors is None:
        raise ValueError("branch labels need eigenvectors")

    branches = np.full(len(spec), "", dtype=object)
    for index in np.flatnonzero(spec.classes == MACRO):
        ubar, vbar = mean_norms(spec.eigenvectors[:, index])
        if ubar > dominance * vbar:
            branches[index] = "compression"
        elif vbar > dominance * ubar:
            branches[index] = "bending"
        else:
            branches[index] = "ambiguous"
            logger.warning(f"Ambiguous branch for eigenvalue {spec.eigenvalues[index]:.6g} "
                           f"(|ubar|={ubar:.3g}, |vbar|={vbar:.3g})")
    spec.branches = branches
    return spec


def conjugate_pairing_error(values: np.ndarray) -> float:
    """Largest distance from an eigenvalue to the nearest conjugate of another (or itself if real)."""
    values = np.asarray(values)
    if len(values) == 0:
        return 0.0
    conj = np.conj(values)
    worst = 0.0
    unmatched = np.ones(len(values), dtype=bool)
    for lam in values:
        candidates = np.flatnonzero(unmatched)
        distance = np.abs(conj[candidates] - lam)
        best = candidates[np.argmin(distance)]
        worst = max(worst, float(distance.min()) / max(1.0, abs(lam)))
        unmatched[best] = False
    return worst


def eigenvalues_near(
    jac: np.ndarray | sp.spmatrix,
    targets: Sequence[complex],
    count: int = 1,
    tol: float = 1e-12,
) -> np.ndarray:
    """
    Shift-invert Arnoldi: the `count` eigenvalues closest to each target.
    Returns an array of shape (len(targets), count), nearest first.
    """
    matrix = sp.csc_matrix(jac, dtype=complex)
    results = []
    for target in targets:
        target = complex(target)
        # an exact eigenvalue as shift makes the factorisation singular
        sigma = target + 1e-4 * (1 + 1j) * max(abs(target), 1e-3)
        try:
            values = eigs(matrix, k=count, sigma=sigma, which="LM", tol=tol, return_eigenvectors=False)
        except ArpackNoConvergence as e:
            raise SolverError(f"shift-invert Arnoldi did not converge near {target:.6g}") from e
        except RuntimeError as e:
            raise SolverError(f"shift-invert factorisation failed near {target:.6g}: {e}") from e
        results.append(values[np.argsort(np.abs(values - target))])
    return np.array(results)


def branch_rows(spec: Spectrum, group_tol: float = 1e-3) -> list[dict]:
    """
    One row per macro eigenvalue with Im >= 0: (branch, wavenumber, re, im),
    sorted by |Im|. Wavenumber counts distinct |Im| levels within a branch.
    """
    if spec.branches is None:
        raise ValueError("spectrum has no branch labels")
    rows = []
    for branch in ("compression", "bending", "ambiguous"):
        mask = (spec.branches == branch) & (spec.eigenvalues.imag >= 0)
        values = spec.eigenvalues[mask]
        values = values[np.argsort(np.abs(values.imag), kind="stable")]
        level, last = 0, None
        for lam in values:
            if last is None or abs(lam.imag) - last > group_tol * max(1.0, last):
                level += 1
                last = abs(lam.imag)
            rows.append({"branch": branch, "wavenumber": level, "re": float(lam.real), "im": float(lam.imag)})
    rows.sort(key=lambda row: (abs(row["im"]), row["branch"]))
    return rows
