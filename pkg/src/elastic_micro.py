"""
Microscale staggered-grid visco-elasticity for one patch of a 2D beam.

Index conventions (all arrays x-major, last two axes are (x, y); any leading
axes are patch / batch axes and broadcast untouched):

    u[a, b]      <->  u_{a+1/2, b+1/2}     a = 0..nx+1, b = 0..ny   (b = 0, ny ghost rows)
    v[a, b]      <->  v_{a, b+1}           a = 0..nx+1, b = 0..ny-1
    normal[c, b] <->  sigma^{c+1, b+1/2}   c = 0..nx,   b = 0..ny   (b = 0, ny ghost rows)
    shear[c, b]  <->  sigma^{c+1/2, b+1}   c = 0..nx,   b = 0..ny-1

Columns a = 0 and a = nx+1 of u and v are patch edges supplied from outside.
"""
import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MicroGridSpec:
    nx: int
    ny: int
    dx: float
    dy: float

    def __post_init__(self):
        if self.nx < 3:
            raise ValueError(f"nx must be >= 3, got {self.nx}")
        if self.ny < 4:
            raise ValueError(f"ny must be >= 4, got {self.ny}")
        if not (self.dx > 0 and self.dy > 0):
            raise ValueError(f"grid spacings must be positive, got dx={self.dx}, dy={self.dy}")

    @property
    def h(self) -> float:
        """Patch length: one heterogeneity period, equal to the coupling offset."""
        return self.nx * self.dx

    @property
    def width(self) -> float:
        return (self.ny - 1) * self.dy

    @property
    def u_shape(self) -> tuple[int, int]:
        return (self.nx + 2, self.ny + 1)

    @property
    def v_shape(self) -> tuple[int, int]:
        return (self.nx + 2, self.ny)

    @property
    def normal_shape(self) -> tuple[int, int]:
        return (self.nx + 1, self.ny - 1)

    @property
    def shear_shape(self) -> tuple[int, int]:
        return (self.nx + 1, self.ny)

    @property
    def u_interior_shape(self) -> tuple[int, int]:
        return (self.nx, self.ny - 1)

    @property
    def v_interior_shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    # Local coordinates, origin at the patch centre and the beam mid-line.
    def x_of_index(self, index) -> np.ndarray:
        return (np.asarray(index, dtype=float) - (self.nx + 1) / 2) * self.dx

    def y_of_index(self, index) -> np.ndarray:
        return (np.asarray(index, dtype=float) - (self.ny + 1) / 2) * self.dy

    def u_interior_coords(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.x_of_index(np.arange(1, self.nx + 1) + 0.5)
        y = self.y_of_index(np.arange(1, self.ny) + 0.5)
        return np.meshgrid(x, y, indexing="ij")

    def v_interior_coords(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.x_of_index(np.arange(1, self.nx + 1))
        y = self.y_of_index(np.arange(1, self.ny + 1))
        return np.meshgrid(x, y, indexing="ij")

    def normal_coords(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.x_of_index(np.arange(1, self.nx + 2))
        y = self.y_of_index(np.arange(1, self.ny) + 0.5)
        return np.meshgrid(x, y, indexing="ij")

    def shear_coords(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.x_of_index(np.arange(0, self.nx + 1) + 0.5)
        y = self.y_of_index(np.arange(1, self.ny + 1))
        return np.meshgrid(x, y, indexing="ij")


@dataclass(slots=True)
class StaggeredField:
    u: np.ndarray
    v: np.ndarray
    udot: np.ndarray
    vdot: np.ndarray

    @classmethod
    def zeros(cls, grid: MicroGridSpec, lead: tuple[int, ...] = ()) -> "StaggeredField":
        return cls(
            u=np.zeros(lead + grid.u_shape),
            v=np.zeros(lead + grid.v_shape),
            udot=np.zeros(lead + grid.u_shape),
            vdot=np.zeros(lead + grid.v_shape),
        )

    def copy(self) -> "StaggeredField":
        return StaggeredField(self.u.copy(), self.v.copy(), self.udot.copy(), self.vdot.copy())


@dataclass(slots=True)
class MaterialField:
    lambda_n: np.ndarray
    mu_n: np.ndarray
    lambda_s: np.ndarray
    mu_s: np.ndarray

    @classmethod
    def homogeneous(cls, grid: MicroGridSpec, lam: float, mu: float) -> "MaterialField":
        return cls(
            lambda_n=np.full(grid.normal_shape, float(lam)),
            mu_n=np.full(grid.normal_shape, float(mu)),
            lambda_s=np.full(grid.shear_shape, float(lam)),
            mu_s=np.full(grid.shear_shape, float(mu)),
        )

    def is_elliptic(self) -> bool:
        return bool(
            np.all(self.mu_n > 0) and np.all(self.mu_s > 0)
            and np.all(self.lambda_n + 2 * self.mu_n > 0)
            and np.all(self.lambda_s + 2 * self.mu_s > 0)
        )


@dataclass(slots=True)
class StressField:
    sxx: np.ndarray
    syy: np.ndarray
    sxy: np.ndarray


@dataclass(slots=True)
class BodyForce:
    fx: np.ndarray
    fy: np.ndarray

    @classmethod
    def zeros(cls, grid: MicroGridSpec, lead: tuple[int, ...] = ()) -> "BodyForce":
        return cls(np.zeros(lead + grid.u_interior_shape), np.zeros(lead + grid.v_interior_shape))


def lame_from_engineering(E, nu):
    """
    Plane-strain (3D) Lame constants from Young's modulus and Poisson ratio.
    Accepts scalars or arrays; returns (lambda, mu).
    """
    E = np.asarray(E, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if np.any(E <= 0):
        raise ValueError("Young's modulus must be positive")
    if np.any(nu >= 0.5) or np.any(nu <= -1.0):
        raise ValueError("Poisson ratio must lie in (-1, 0.5)")

    mu = E / (2.0 * (1.0 + nu))
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    if lam.ndim == 0:
        return float(lam), float(mu)
    return lam, mu


def _check_trailing(name: str, array: np.ndarray, shape: tuple[int, int]):
    if array.shape[-2:] != shape:
        raise ValueError(f"{name} has trailing shape {array.shape[-2:]}, expected {shape}")


def _check_state(state: StaggeredField, grid: MicroGridSpec):
    _check_trailing("u", state.u, grid.u_shape)
    _check_trailing("udot", state.udot, grid.u_shape)
    _check_trailing("v", state.v, grid.v_shape)
    _check_trailing("vdot", state.vdot, grid.v_shape)


def _check_material(mat: MaterialField, grid: MicroGridSpec):
    _check_trailing("lambda_n", mat.lambda_n, grid.normal_shape)
    _check_trailing("mu_n", mat.mu_n, grid.normal_shape)
    _check_trailing("lambda_s", mat.lambda_s, grid.shear_shape)
    _check_trailing("mu_s", mat.mu_s, grid.shear_shape)


def ghost_rows(u: np.ndarray, v: np.ndarray, grid: MicroGridSpec) -> np.ndarray:
    """Returns a copy of u whose top/bottom ghost rows enforce zero shear traction."""
    nx, ny = grid.nx, grid.ny
    ratio = grid.dy / grid.dx
    u = u.copy()
    u[..., 0:nx + 1, 0] = u[..., 0:nx + 1, 1] + ratio * (v[..., 1:nx + 2, 0] - v[..., 0:nx + 1, 0])
    u[..., 0:nx + 1, ny] = u[..., 0:nx + 1, ny - 1] - ratio * (v[..., 1:nx + 2, ny - 1] - v[..., 0:nx + 1, ny - 1])
    return u


def compute_stresses(state: StaggeredField, mat: MaterialField, grid: MicroGridSpec) -> StressField:
    """
    Normal and shear stresses from centred differences of displacement.
    The sigma_yy ghost rows are left at zero; apply_ghost_bcs fills them.
    """
    _check_state(state, grid)
    _check_material(mat, grid)
    nx, ny = grid.nx, grid.ny
    u, v = state.u, state.v

    # 1. Strains at normal nodes (interior rows only)
    exx = (u[..., 1:nx + 2, 1:ny] - u[..., 0:nx + 1, 1:ny]) / grid.dx
    eyy = (v[..., 1:nx + 2, 1:ny] - v[..., 1:nx + 2, 0:ny - 1]) / grid.dy

    # 2. Hooke's law with heterogeneous Lame constants
    lam, mu = mat.lambda_n, mat.mu_n
    lead = np.broadcast_shapes(exx.shape, lam.shape)[:-2]
    dtype = np.result_type(exx, lam)
    sxx = np.zeros(lead + (nx + 1, ny + 1), dtype=dtype)
    syy = np.zeros(lead + (nx + 1, ny + 1), dtype=dtype)
    sxx[..., 1:ny] = (lam + 2 * mu) * exx + lam * eyy
    syy[..., 1:ny] = lam * exx + (lam + 2 * mu) * eyy

    # 3. Shear, centred on (i+1/2, k); needs the u ghost rows
    shear_strain = (
        (u[..., 0:nx + 1, 1:ny + 1] - u[..., 0:nx + 1, 0:ny]) / grid.dy
        + (v[..., 1:nx + 2, :] - v[..., 0:nx + 1, :]) / grid.dx
    )
    sxy = mat.mu_s * shear_strain
    return StressField(sxx=sxx, syy=syy, sxy=sxy)


def apply_ghost_bcs(state: StaggeredField, stress: StressField, grid: MicroGridSpec) -> tuple[StaggeredField, StressField]:
    """Stress-free top and bottom: refreshes u ghost rows and sigma_yy ghost rows."""
    _check_state(state, grid)
    ny = grid.ny
    state = StaggeredField(ghost_rows(state.u, state.v, grid), state.v, state.udot, state.vdot)

    syy = stress.syy.copy()
    syy[..., 0] = -syy[..., 1]
    syy[..., ny] = -syy[..., ny - 1]
    return state, StressField(sxx=stress.sxx, syy=syy, sxy=stress.sxy)


def _viscous_laplacian_u(udot: np.ndarray, vdot: np.ndarray, grid: MicroGridSpec) -> np.ndarray:
    nx, ny = grid.nx, grid.ny
    # velocity ghost rows obey the same shear-free rule as u
    ud = ghost_rows(udot, vdot, grid)
    centre = ud[..., 1:nx + 1, 1:ny]
    return (
        (ud[..., 0:nx, 1:ny] - 2 * centre + ud[..., 2:nx + 2, 1:ny]) / grid.dx**2
        + (ud[..., 1:nx + 1, 0:ny - 1] - 2 * centre + ud[..., 1:nx + 1, 2:ny + 1]) / grid.dy**2
    )


def _viscous_laplacian_v(vdot: np.ndarray, grid: MicroGridSpec) -> np.ndarray:
    nx, ny = grid.nx, grid.ny
    centre = vdot[..., 1:nx + 1, :]
    # v rows sit on the surfaces: mirror the next row across them
    below = np.concatenate([centre[..., 1:2], centre[..., 0:ny - 1]], axis=-1)
    above = np.concatenate([centre[..., 1:ny], centre[..., ny - 2:ny - 1]], axis=-1)
    return (
        (vdot[..., 0:nx, :] - 2 * centre + vdot[..., 2:nx + 2, :]) / grid.dx**2
        + (below - 2 * centre + above) / grid.dy**2
    )


def acceleration(
    state: StaggeredField,
    stress: StressField,
    force: BodyForce,
    kappa: float,
    grid: MicroGridSpec,
) -> tuple[np.ndarray, np.ndarray]:
    """Newton's second law on the interior nodes, with optional viscous damping."""
    _check_state(state, grid)
    if kappa < 0:
        raise ValueError(f"viscosity must be non-negative, got {kappa}")
    _check_trailing("fx", force.fx, grid.u_interior_shape)
    _check_trailing("fy", force.fy, grid.v_interior_shape)
    nx, ny = grid.nx, grid.ny
    sxx, syy, sxy = stress.sxx, stress.syy, stress.sxy

    uddot = (
        (sxx[..., 1:nx + 1, 1:ny] - sxx[..., 0:nx, 1:ny]) / grid.dx
        + (sxy[..., 1:nx + 1, 1:ny] - sxy[..., 1:nx + 1, 0:ny - 1]) / grid.dy
        + force.fx
    )
    vddot = (
        (sxy[..., 1:nx + 1, :] - sxy[..., 0:nx, :]) / grid.dx
        + (syy[..., 0:nx, 1:ny + 1] - syy[..., 0:nx, 0:ny]) / grid.dy
        + force.fy
    )

    if kappa > 0:
        uddot = uddot + kappa * _viscous_laplacian_u(state.udot, state.vdot, grid)
        vddot = vddot + kappa * _viscous_laplacian_v(state.vdot, grid)

    return uddot, vddot


class MicroModel:
    """What the patch scheme needs from a microscale code: accelerations given edge values."""

    grid: MicroGridSpec

    def accelerations(self, field: StaggeredField) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError


class StaggeredElasticity(MicroModel):
    def __init__(self, grid: MicroGridSpec, material: MaterialField, force: BodyForce | None = None, kappa: float = 0.0):
        _check_material(material, grid)
        if not material.is_elliptic():
            raise ValueError("material field violates mu > 0, lambda + 2 mu > 0")
        self.grid = grid
        self.material = material
        self.force = force if force is not None else BodyForce.zeros(grid)
        self.kappa = float(kappa)

    def accelerations(self, field: StaggeredField) -> tuple[np.ndarray, np.ndarray]:
        # 1. Ghost u rows, 2. stresses, 3. sigma_yy ghost rows, 4. Newton
        field = StaggeredField(ghost_rows(field.u, field.v, self.grid), field.v, field.udot, field.vdot)
        stress = compute_stresses(field, self.material, self.grid)
        field, stress = apply_ghost_bcs(field, stress, self.grid)
        return acceleration(field, stress, self.force, self.kappa, self.grid)
