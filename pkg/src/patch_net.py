"""
Patch scheme wrapper: places patches along the beam, couples them by
interpolating next-to-edge columns to the opposite edges of neighbouring
patches, imposes the macroscale end conditions, and exposes q' = f(q).

The microscale code is only reached through MicroModel.accelerations; the
wrapper never touches its stencils.

Global state layout, patch by patch (I = 0..N-1), each block x-major:
    [ u (nx, ny-1) | v (nx, ny) | udot (nx, ny-1) | vdot (nx, ny) ]
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.interpolate import BarycentricInterpolator

from src.elastic_micro import (
    BodyForce,
    MaterialField,
    MicroGridSpec,
    MicroModel,
    StaggeredElasticity,
    StaggeredField,
)

logger = logging.getLogger(__name__)


class CouplingError(ValueError):
    pass


class MacroBC(str, Enum):
    PERIODIC = "periodic"
    FIXED_FIXED = "fixed-fixed"
    FIXED_FREE = "fixed-free"


@dataclass(frozen=True)
class CouplingSpec:
    mode: str = "spectral"
    order: int = 4

    def __post_init__(self):
        if self.mode not in ("polynomial", "spectral"):
            raise CouplingError(f"unknown coupling mode {self.mode!r}")
        if self.mode == "polynomial" and (self.order < 2 or self.order % 2):
            raise CouplingError(f"polynomial order must be even and >= 2, got {self.order}")

    @property
    def label(self) -> str:
        return "spectral" if self.mode == "spectral" else f"P{self.order}"


def edge_offset(grid: MicroGridSpec) -> float:
    """
    Distance from a donor next-to-edge column to the receiving edge column
    of the same patch: u_{3/2} -> u_{nx+3/2} and v_1 -> v_{nx+1} are both nx*dx.
    """
    return grid.h


def interpolation_weights(centres: np.ndarray, offset: float, order: int, period: float | None = None) -> np.ndarray:
    """
    (N, N) matrix W with edge_I = sum_J W[I, J] * donor_J: Lagrange
    interpolation of order P through patches I-P/2..I+P/2, evaluated at
    X_I + offset. Bounded domains shift the stencil inwards near the ends.
    """
    centres = np.asarray(centres, dtype=float)
    n = len(centres)
    half = order // 2
    if n < order + 1:
        raise CouplingError(f"order {order} coupling needs at least {order + 1} patches, got {n}")

    weights = np.zeros((n, n))
    for patch in range(n):
        if period is not None:
            index = patch + np.arange(-half, half + 1)
            nodes = centres[index % n] + period * np.floor_divide(index, n)
        else:
            start = min(max(patch - half, 0), n - 1 - order)
            index = np.arange(start, start + order + 1)
            nodes = centres[index]
        basis = BarycentricInterpolator(nodes, np.eye(order + 1))(centres[patch] + offset)
        np.add.at(weights[patch], index % n, np.ravel(basis))
    return weights


def spectral_shift(donors: np.ndarray, offset: float, period: float) -> np.ndarray:
    """Shifting theorem along the patch axis (-2): samples of f(X_I) -> f(X_I + offset)."""
    n = donors.shape[-2]
    wavenumber = np.fft.fftfreq(n, d=1.0 / n)
    phase = np.exp(2j * np.pi * wavenumber * offset / period)
    if n % 2 == 0:
        # Nyquist mode stays real
        phase[n // 2] = np.cos(np.pi * n * offset / period)

    shifted = np.fft.ifft(np.fft.fft(donors, axis=-2) * phase[:, None], axis=-2)
    return shifted.real if np.isrealobj(donors) else shifted


def edge_values(
    next_to_edge: np.ndarray,
    coupling: CouplingSpec,
    side: str,
    *,
    centres: np.ndarray,
    offset: float,
    period: float | None = None,
) -> np.ndarray:
    """
    Receiver edge values for every patch from donor next-to-edge values.
    next_to_edge has the patch axis at -2 (or is 1D over patches).
    side='right' reads left next-to-edge donors and shifts by +offset,
    side='left' reads right next-to-edge donors and shifts by -offset.
    """
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    values = np.asarray(next_to_edge)
    flat = values.ndim == 1
    if flat:
        values = values[:, None]
    if not np.all(np.isfinite(values)):
        raise ValueError("donor values must be finite")

    shift = offset if side == "right" else -offset
    if coupling.mode == "spectral":
        if period is None:
            raise CouplingError("spectral coupling requires a periodic macroscale domain")
        result = spectral_shift(values, shift, period)
    else:
        if period is not None and coupling.order // 2 > (len(centres) - 1) / 2:
            raise CouplingError(f"order {coupling.order} stencil is wider than {len(centres)} periodic patches")
        weights = interpolation_weights(centres, shift, coupling.order, period)
        result = np.einsum("ij,...jr->...ir", weights, values)
    return result[:, 0] if flat else result


class PatchCoupler:
    """Caches the interpolation operators of one network."""

    def __init__(self, centres: np.ndarray, offset: float, coupling: CouplingSpec, period: float | None):
        self.coupling = coupling
        self.offset = offset
        self.period = period
        if coupling.mode == "spectral":
            if period is None:
                raise CouplingError("spectral coupling requires a periodic macroscale domain")
            self._weights = None
        else:
            if period is not None and coupling.order // 2 > (len(centres) - 1) / 2:
                raise CouplingError(f"order {coupling.order} stencil is wider than {len(centres)} periodic patches")
            self._weights = {
                "right": interpolation_weights(centres, offset, coupling.order, period),
                "left": interpolation_weights(centres, -offset, coupling.order, period),
            }

    def __call__(self, donors: np.ndarray, side: str) -> np.ndarray:
        if self._weights is None:
            return spectral_shift(donors, self.offset if side == "right" else -self.offset, self.period)
        return np.einsum("ij,...jr->...ir", self._weights[side], donors)


def _stack_materials(materials: MaterialField | Sequence[MaterialField], n_patches: int) -> MaterialField:
    if isinstance(materials, MaterialField):
        materials = [materials] * n_patches
    if len(materials) != n_patches:
        raise ValueError(f"expected {n_patches} material fields, got {len(materials)}")
    return MaterialField(
        lambda_n=np.stack([m.lambda_n for m in materials]),
        mu_n=np.stack([m.mu_n for m in materials]),
        lambda_s=np.stack([m.lambda_s for m in materials]),
        mu_s=np.stack([m.mu_s for m in materials]),
    )


@dataclass
class CrossBeamStats:
    x: np.ndarray      # (N, nx) v-column positions
    ubar: np.ndarray   # (..., N, nx)
    vbar: np.ndarray
    ustd: np.ndarray
    vstd: np.ndarray


class PatchNetwork:
    def __init__(
        self,
        grid: MicroGridSpec,
        centres: Sequence[float],
        length: float,
        coupling: CouplingSpec,
        macro_bc: MacroBC | str,
        materials: MaterialField | Sequence[MaterialField],
        offsets_cells: Sequence[int] | None = None,
    ):
        self.grid = grid
        self.centres = np.asarray(centres, dtype=float)
        self.n_patches = len(self.centres)
        self.length = float(length)
        self.coupling = coupling
        self.macro_bc = MacroBC(macro_bc)
        self.materials = _stack_materials(materials, self.n_patches)
        self.offsets_cells = None if offsets_cells is None else np.asarray(offsets_cells, dtype=int)

        if not self.materials.is_elliptic():
            raise ValueError("material fields violate mu > 0, lambda + 2 mu > 0")
        if self.n_patches == 1:
            if self.macro_bc is MacroBC.PERIODIC:
                raise ValueError("a single patch needs physical end conditions")
            self._coupler = None
        else:
            if self.n_patches < 3:
                raise ValueError(f"need at least 3 patches, got {self.n_patches}")
            footprint = (grid.nx + 1) * grid.dx
            gaps = np.diff(self.centres)
            if self.is_periodic:
                gaps = np.append(gaps, self.centres[0] + self.length - self.centres[-1])
            if np.any(gaps < footprint - 1e-12):
                raise ValueError(f"patches overlap: minimum spacing {gaps.min():.6g} < footprint {footprint:.6g}")
            self._coupler = PatchCoupler(
                self.centres, edge_offset(grid), coupling, self.length if self.is_periodic else None
            )

        self.n_u = grid.nx * (grid.ny - 1)
        self.n_v = grid.nx * grid.ny
        self.per_patch = 2 * (self.n_u + self.n_v)
        self.dim = self.n_patches * self.per_patch

    @classmethod
    def periodic(cls, grid: MicroGridSpec, n_patches: int, length: float, coupling: CouplingSpec,
                 materials: MaterialField | Sequence[MaterialField]) -> "PatchNetwork":
        spacing = length / n_patches
        centres = (np.arange(n_patches) + 0.5) * spacing
        return cls(grid, centres, length, coupling, MacroBC.PERIODIC, materials)

    @staticmethod
    def bounded_offsets(grid: MicroGridSpec, n_patches: int, length: float) -> np.ndarray:
        """
        Micro-grid column of each patch's v_0 column. The extreme patches put
        their outer v edge columns on x = 0 and x = L; the rest are spread as
        evenly as the micro-grid allows.
        """
        cells = length / grid.dx
        total = int(round(cells))
        if abs(cells - total) > 1e-6:
            raise ValueError(f"length {length} is not a whole number of micro-cells dx={grid.dx}")
        span = (total - 1) - grid.nx
        if span < 0:
            raise ValueError(f"beam of {total} cells is shorter than one patch")
        if n_patches == 1:
            if span != 0:
                raise ValueError("a single bounded patch must span the whole beam")
            return np.zeros(1, dtype=int)
        return np.rint(np.arange(n_patches) * span / (n_patches - 1)).astype(int)

    @classmethod
    def bounded(cls, grid: MicroGridSpec, n_patches: int, length: float, coupling: CouplingSpec,
                macro_bc: MacroBC | str, materials: MaterialField | Sequence[MaterialField]) -> "PatchNetwork":
        if MacroBC(macro_bc) is MacroBC.PERIODIC:
            raise ValueError("bounded placement needs fixed-fixed or fixed-free ends")
        offsets = cls.bounded_offsets(grid, n_patches, length)
        centres = (offsets + (grid.nx + 1) / 2) * grid.dx
        return cls(grid, centres, length, coupling, macro_bc, materials, offsets_cells=offsets)

    @classmethod
    def full_domain(cls, grid: MicroGridSpec, length: float, macro_bc: MacroBC | str,
                    material: MaterialField) -> "PatchNetwork":
        """The whole beam as one patch; both ends physical."""
        return cls.bounded(grid, 1, length, CouplingSpec("polynomial", 2), macro_bc, material)

    @property
    def is_periodic(self) -> bool:
        return self.macro_bc is MacroBC.PERIODIC

    @property
    def spacing(self) -> float:
        if self.is_periodic:
            return self.length / self.n_patches
        if self.n_patches == 1:
            return self.length
        return (self.centres[-1] - self.centres[0]) / (self.n_patches - 1)

    @property
    def ratio(self) -> float:
        return self.grid.h / self.spacing

    def describe(self) -> dict:
        return {
            "patches": self.n_patches,
            "length": self.length,
            "spacing": self.spacing,
            "patch_ratio": self.ratio,
            "coupling": self.coupling.label,
            "macro_bc": self.macro_bc.value,
            "dof": self.dim,
            "grid": {"nx": self.grid.nx, "ny": self.grid.ny, "dx": self.grid.dx, "dy": self.grid.dy},
        }

    # --- state layout -----------------------------------------------------

    def unpack(self, q: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        q = np.asarray(q)
        if q.shape[-1] != self.dim:
            raise ValueError(f"state has length {q.shape[-1]}, network expects {self.dim}")
        blocks = q.reshape(q.shape[:-1] + (self.n_patches, self.per_patch))
        cuts = np.cumsum([self.n_u, self.n_v, self.n_u])
        u, v, udot, vdot = np.split(blocks, cuts, axis=-1)
        u_shape, v_shape = self.grid.u_interior_shape, self.grid.v_interior_shape
        lead = blocks.shape[:-1]
        return (
            u.reshape(lead + u_shape), v.reshape(lead + v_shape),
            udot.reshape(lead + u_shape), vdot.reshape(lead + v_shape),
        )

    def pack(self, u: np.ndarray, v: np.ndarray, udot: np.ndarray, vdot: np.ndarray) -> np.ndarray:
        lead = u.shape[:-2]
        parts = [a.reshape(lead + (-1,)) for a in (u, v, udot, vdot)]
        return np.concatenate(parts, axis=-1).reshape(lead[:-1] + (self.dim,))

    def embed(self, q: np.ndarray) -> StaggeredField:
        """Interior values in place; edge columns and ghost rows zero."""
        u, v, udot, vdot = self.unpack(q)
        nx, ny = self.grid.nx, self.grid.ny
        lead = u.shape[:-2]
        dtype = np.result_type(np.asarray(q).dtype, float)
        field = StaggeredField(
            u=np.zeros(lead + self.grid.u_shape, dtype=dtype),
            v=np.zeros(lead + self.grid.v_shape, dtype=dtype),
            udot=np.zeros(lead + self.grid.u_shape, dtype=dtype),
            vdot=np.zeros(lead + self.grid.v_shape, dtype=dtype),
        )
        field.u[..., 1:nx + 1, 1:ny] = u
        field.v[..., 1:nx + 1, :] = v
        field.udot[..., 1:nx + 1, 1:ny] = udot
        field.vdot[..., 1:nx + 1, :] = vdot
        return field

    # --- geometry ---------------------------------------------------------

    def u_coords(self) -> tuple[np.ndarray, np.ndarray]:
        x, y = self.grid.u_interior_coords()
        return self.centres[:, None, None] + x[None], np.broadcast_to(y, (self.n_patches,) + y.shape)

    def v_coords(self) -> tuple[np.ndarray, np.ndarray]:
        x, y = self.grid.v_interior_coords()
        return self.centres[:, None, None] + x[None], np.broadcast_to(y, (self.n_patches,) + y.shape)

    def column_positions(self) -> np.ndarray:
        return self.centres[:, None] + self.grid.x_of_index(np.arange(1, self.grid.nx + 1))[None, :]


def apply_macro_bc(field: StaggeredField, net: PatchNetwork) -> StaggeredField:
    """Overrides the edge columns that sit on a physical beam end."""
    if net.is_periodic:
        return field
    nx, ny = net.grid.nx, net.grid.ny
    field = field.copy()

    # fixed left end on the first patch
    for arr in (field.u, field.udot, field.v, field.vdot):
        arr[..., 0, 0, :] = 0.0

    if net.macro_bc is MacroBC.FIXED_FIXED:
        for arr in (field.u, field.udot, field.v, field.vdot):
            arr[..., -1, nx + 1, :] = 0.0
        return field

    # free right end: sigma_xy = 0 fixes the v edge column, then sigma_xx = 0 fixes u
    lam = net.materials.lambda_n[-1, nx, :]
    mu = net.materials.mu_n[-1, nx, :]
    ratio = net.grid.dx / net.grid.dy
    for u, v in ((field.u, field.v), (field.udot, field.vdot)):
        u_next = u[..., -1, nx, :]
        v_next = v[..., -1, nx, :]
        v_edge = np.empty_like(v_next)
        v_edge[..., 1:ny - 1] = v_next[..., 1:ny - 1] - ratio * (u_next[..., 2:ny] - u_next[..., 1:ny - 1])
        # corner rows: shear condition is vacuous there, carry the neighbouring jump
        v_edge[..., 0] = v_next[..., 0] + (v_edge[..., 1] - v_next[..., 1])
        v_edge[..., ny - 1] = v_next[..., ny - 1] + (v_edge[..., ny - 2] - v_next[..., ny - 2])
        v[..., -1, nx + 1, :] = v_edge
        u[..., -1, nx + 1, 1:ny] = u_next[..., 1:ny] - lam / (lam + 2 * mu) * ratio * (v_edge[..., 1:] - v_edge[..., :-1])
    return field


def couple_patches(q: np.ndarray, net: PatchNetwork) -> StaggeredField:
    """Embeds the interior state and fills every edge column, then imposes macro_bc."""
    q = np.asarray(q)
    if not np.all(np.isfinite(q)):
        raise ValueError("global state must be finite")
    field = net.embed(q)
    if net._coupler is not None:
        nx, ny = net.grid.nx, net.grid.ny
        for arr, rows in ((field.u, slice(1, ny)), (field.udot, slice(1, ny)),
                          (field.v, slice(0, ny)), (field.vdot, slice(0, ny))):
            arr[..., nx + 1, rows] = net._coupler(arr[..., 1, rows], "right")
            arr[..., 0, rows] = net._coupler(arr[..., nx, rows], "left")
    return apply_macro_bc(field, net)


def _stack_force(force: BodyForce | Sequence[BodyForce] | None, net: PatchNetwork) -> BodyForce:
    if force is None:
        return BodyForce.zeros(net.grid, (net.n_patches,))
    if isinstance(force, BodyForce):
        return force
    return BodyForce(np.stack([f.fx for f in force]), np.stack([f.fy for f in force]))


class PatchScheme:
    """
    The coupled patch system q' = f(q) bound to one forcing and viscosity.
    Accepts batches: q of shape (..., dim).
    """

    vectorized = True

    def __init__(self, net: PatchNetwork, force: BodyForce | Sequence[BodyForce] | None = None,
                 kappa: float = 0.0, micro: MicroModel | None = None):
        self.net = net
        self.force = _stack_force(force, net)
        self.kappa = float(kappa)
        self.micro = micro if micro is not None else StaggeredElasticity(net.grid, net.materials, self.force, kappa)

    @property
    def dim(self) -> int:
        return self.net.dim

    def __call__(self, q: np.ndarray) -> np.ndarray:
        _, _, udot, vdot = self.net.unpack(q)
        field = couple_patches(q, self.net)
        uddot, vddot = self.micro.accelerations(field)
        return self.net.pack(udot, vdot, uddot, vddot)

    def ode(self, t: float, q: np.ndarray) -> np.ndarray:
        return self(q)

    def unforced(self) -> "PatchScheme":
        return PatchScheme(self.net, None, self.kappa)

    def forcing_vector(self) -> np.ndarray:
        """F with f(q) = J q + F."""
        return self(np.zeros(self.net.dim))


def global_rhs(q: np.ndarray, net: PatchNetwork, force: BodyForce | Sequence[BodyForce] | None = None,
               kappa: float = 0.0) -> np.ndarray:
    return PatchScheme(net, force, kappa)(q)


def cross_beam_statistics(states: np.ndarray, net: PatchNetwork) -> CrossBeamStats:
    """Means and standard deviations across the beam at every interior v column."""
    nx, ny = net.grid.nx, net.grid.ny
    field = couple_patches(states, net)
    u_mid = 0.5 * (field.u[..., 0:nx, 1:ny] + field.u[..., 1:nx + 1, 1:ny])
    v_int = field.v[..., 1:nx + 1, :]
    return CrossBeamStats(
        x=net.column_positions(),
        ubar=u_mid.mean(axis=-1), vbar=v_int.mean(axis=-1),
        ustd=u_mid.std(axis=-1), vstd=v_int.std(axis=-1),
    )


def mean_displacement_norms(vector: np.ndarray, net: PatchNetwork) -> tuple[float, float]:
    """Norms of the cross-beam mean u and v of a (possibly complex) state vector."""
    u, v, _, _ = net.unpack(vector)
    return float(np.linalg.norm(u.mean(axis=-1))), float(np.linalg.norm(v.mean(axis=-1)))


def restrict_to_patches(q_full: np.ndarray, full_net: PatchNetwork, net: PatchNetwork) -> tuple[np.ndarray, np.ndarray]:
    """Full-beam interior displacements over each patch's interior footprint."""
    if full_net.n_patches != 1 or net.offsets_cells is None:
        raise ValueError("restriction needs a single-patch full beam and a bounded patch network")
    if full_net.grid.ny != net.grid.ny or not np.isclose(full_net.grid.dx, net.grid.dx):
        raise ValueError("full beam and patches use different micro-grids")
    u_full, v_full, _, _ = full_net.unpack(q_full)
    nx = net.grid.nx
    if net.offsets_cells.max() + nx > full_net.grid.nx:
        raise ValueError("patch footprints fall outside the full beam")
    u = np.stack([u_full[0, s:s + nx] for s in net.offsets_cells])
    v = np.stack([v_full[0, s:s + nx] for s in net.offsets_cells])
    return u, v
