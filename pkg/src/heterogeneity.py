"""
Heterogeneous Lame fields sampled onto the staggered stress nodes of a patch.
"""
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from src.elastic_micro import MaterialField, MicroGridSpec, lame_from_engineering

logger = logging.getLogger(__name__)

MATERIAL_CSV_COLUMNS = ["family", "i", "j", "x", "y", "lambda", "mu"]


@dataclass(frozen=True)
class RandomElasticitySpec:
    seed: int
    period_x: float
    logE_range: tuple[float, float] = (-1.0, 1.0)
    nu_range: tuple[float, float] = (0.2, 0.4)

    def period_cells(self, dx: float) -> int:
        cells = int(round(self.period_x / dx))
        if cells < 1 or abs(cells * dx - self.period_x) > 1e-9 * max(1.0, self.period_x):
            raise ValueError(f"period_x={self.period_x} is not an integer multiple of dx={dx}")
        return cells


@dataclass(frozen=True)
class InclusionSpec:
    E_in: float
    nu_in: float
    length_cells: int = 4
    width_cells: int = 2


def _generator(seed: int) -> np.random.Generator:
    # counter-based, so realisations are platform independent
    return np.random.Generator(np.random.Philox(int(seed)))


def random_periodic_field(spec: RandomElasticitySpec, grid: MicroGridSpec, offset_cells: int = 0) -> MaterialField:
    """
    E = exp(U1), nu = U2 with U1, U2 iid uniform on the configured ranges,
    drawn once per stress node of one period and tiled along x.

    offset_cells is the global micro-grid column of the patch's column 0, so
    patches cut from one beam see the same realisation as the full beam.
    """
    period = spec.period_cells(grid.dx)
    lo_e, hi_e = spec.logE_range
    lo_nu, hi_nu = spec.nu_range
    if hi_e < lo_e or hi_nu < lo_nu:
        raise ValueError("sampling ranges must be ordered (low, high)")

    # 1. One period of draws, fixed draw order
    rng = _generator(spec.seed)
    log_e_normal = rng.uniform(lo_e, hi_e, size=(period, grid.ny - 1))
    nu_normal = rng.uniform(lo_nu, hi_nu, size=(period, grid.ny - 1))
    log_e_shear = rng.uniform(lo_e, hi_e, size=(period, grid.ny))
    nu_shear = rng.uniform(lo_nu, hi_nu, size=(period, grid.ny))

    # 2. Tile onto the patch: normal node columns are i = 1..nx+1, shear columns i+1/2 for i = 0..nx
    normal_phase = (offset_cells + np.arange(1, grid.nx + 2)) % period
    shear_phase = (offset_cells + np.arange(0, grid.nx + 1)) % period

    lambda_n, mu_n = lame_from_engineering(np.exp(log_e_normal[normal_phase]), nu_normal[normal_phase])
    lambda_s, mu_s = lame_from_engineering(np.exp(log_e_shear[shear_phase]), nu_shear[shear_phase])
    return MaterialField(lambda_n=lambda_n, mu_n=mu_n, lambda_s=lambda_s, mu_s=mu_s)


def homogeneous_field(E: float, nu: float, grid: MicroGridSpec) -> MaterialField:
    lam, mu = lame_from_engineering(E, nu)
    return MaterialField.homogeneous(grid, lam, mu)


def inclusion_mask(spec: InclusionSpec, grid: MicroGridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Boolean masks of normal and shear nodes strictly inside the centred l x w rectangle."""
    if spec.length_cells < 0 or spec.width_cells < 0:
        raise ValueError("inclusion size must be non-negative")
    if spec.length_cells >= grid.nx - 2 or spec.width_cells >= grid.ny - 1:
        raise ValueError(
            f"inclusion {spec.length_cells}x{spec.width_cells} cells does not fit inside "
            f"a patch interior of {grid.nx - 2}x{grid.ny - 1} cells"
        )
    half_l = spec.length_cells * grid.dx / 2
    half_w = spec.width_cells * grid.dy / 2
    tol = 1e-9 * min(grid.dx, grid.dy)

    masks = []
    for x, y in (grid.normal_coords(), grid.shear_coords()):
        masks.append((np.abs(x) < half_l - tol) & (np.abs(y) < half_w - tol))
    return masks[0], masks[1]


def inclusion_field(spec: InclusionSpec, matrix_E: float, matrix_nu: float, grid: MicroGridSpec) -> MaterialField:
    inside_n, inside_s = inclusion_mask(spec, grid)
    lam_m, mu_m = lame_from_engineering(matrix_E, matrix_nu)
    lam_i, mu_i = lame_from_engineering(spec.E_in, spec.nu_in)

    field = MaterialField(
        lambda_n=np.where(inside_n, lam_i, lam_m),
        mu_n=np.where(inside_n, mu_i, mu_m),
        lambda_s=np.where(inside_s, lam_i, lam_m),
        mu_s=np.where(inside_s, mu_i, mu_m),
    )
    logger.debug(f"Inclusion covers {int(inside_n.sum())} normal and {int(inside_s.sum())} shear nodes")
    return field


def material_to_frame(mat: MaterialField, grid: MicroGridSpec) -> pd.DataFrame:
    frames = []
    for family, (x, y), lam, mu in (
        ("normal", grid.normal_coords(), mat.lambda_n, mat.mu_n),
        ("shear", grid.shear_coords(), mat.lambda_s, mat.mu_s),
    ):
        i, j = np.meshgrid(np.arange(x.shape[0]), np.arange(x.shape[1]), indexing="ij")
        frames.append(pd.DataFrame({
            "family": family,
            "i": i.ravel(),
            "j": j.ravel(),
            "x": x.ravel(),
            "y": y.ravel(),
            "lambda": lam.ravel(),
            "mu": mu.ravel(),
        }))
    return pd.concat(frames, ignore_index=True)[MATERIAL_CSV_COLUMNS]


def export_material_csv(mat: MaterialField, grid: MicroGridSpec, path: str | Path):
    material_to_frame(mat, grid).to_csv(path, index=False, float_format="%.17g", lineterminator="\n")


def import_material_csv(path: str | Path, grid: MicroGridSpec) -> MaterialField:
    df = pd.read_csv(path, float_precision="round_trip")
    missing = set(MATERIAL_CSV_COLUMNS) - set(df.columns)
    if missing:
        raise ValueError(f"material CSV {path} lacks columns {sorted(missing)}")

    arrays = {}
    for family, shape in (("normal", grid.normal_shape), ("shear", grid.shear_shape)):
        rows = df[df["family"] == family]
        if len(rows) != shape[0] * shape[1]:
            raise ValueError(f"material CSV {path}: expected {shape[0] * shape[1]} {family} rows, found {len(rows)}")
        lam = np.empty(shape)
        mu = np.empty(shape)
        lam[rows["i"].to_numpy(), rows["j"].to_numpy()] = rows["lambda"].to_numpy()
        mu[rows["i"].to_numpy(), rows["j"].to_numpy()] = rows["mu"].to_numpy()
        arrays[family] = (lam, mu)

    return MaterialField(
        lambda_n=arrays["normal"][0], mu_n=arrays["normal"][1],
        lambda_s=arrays["shear"][0], mu_s=arrays["shear"][1],
    )
