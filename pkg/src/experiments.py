"""
Scenario runners: wire grid, material, patch network and solvers together
for each named experiment and collect CSV tables, figures and a summary.
"""
import asyncio
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import pandas as pd
import uvloop

from src import __version__, reports
from src.config import ConfigError, ScenarioConfig
from src.elastic_micro import BodyForce, MaterialField, MicroGridSpec
from src.expressions import Expression, ExpressionError
from src.heterogeneity import (
    InclusionSpec,
    RandomElasticitySpec,
    homogeneous_field,
    inclusion_field,
    random_periodic_field,
)
from src.patch_net import (
    CouplingError,
    CouplingSpec,
    PatchNetwork,
    PatchScheme,
    cross_beam_statistics,
    mean_displacement_norms,
    restrict_to_patches,
)
from src.solvers import SolverError, worker_count
from src.solvers.equilibrium import EquilibriumResult, full_domain_reference, scheme_equilibrium
from src.solvers.integrate import Trajectory, integrate, sample_times
from src.solvers.jacobian import assemble_jacobian
from src.solvers.spectrum import (
    MACRO,
    RIGID,
    Spectrum,
    SpectrumThresholds,
    branch_rows,
    classify,
    conjugate_pairing_error,
    eigenvalues_near,
    label_branches,
    spectrum,
)

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = ["t", "patch", "x", "ubar", "vbar", "ustd", "vstd"]
SPECTRUM_COLUMNS = ["re", "im", "class", "branch", "residual"]
BRANCH_COLUMNS = ["branch", "wavenumber", "re", "im"]


@dataclass
class ResultBundle:
    scenario: str
    config: dict
    tables: dict[str, pd.DataFrame] = field(default_factory=dict)
    figures: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def write(self, out_dir: str | Path, plots: bool = True) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name in sorted(self.tables):
            self.tables[name].to_csv(out / f"{name}.csv", index=False, float_format="%.12g", lineterminator="\n")
        metadata = {
            "scenario": self.scenario,
            "version": __version__,
            "wall_time": round(self.wall_time, 3),
            "config": self.config,
            "summary": self.summary,
        }
        (out / "metadata.json").write_text(json.dumps(_jsonable(metadata), indent=2, sort_keys=True) + "\n")
        for name, fig in (self.figures.items() if plots else ()):
            reports.write_figure(fig, out / name)
        logger.info(f"Wrote {len(self.tables)} tables to {out}")
        return out


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, np.generic):
        return _jsonable(value.item())
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


# --- building blocks ----------------------------------------------------------

def build_grid(cfg: ScenarioConfig, nx: int | None = None) -> MicroGridSpec:
    g = cfg.geometry
    return MicroGridSpec(nx=nx or g.nx, ny=g.ny, dx=g.dx, dy=g.dy)


def build_material(cfg: ScenarioConfig, grid: MicroGridSpec, offset_cells: int = 0,
                   kind: str | None = None, E_in: float | None = None) -> MaterialField:
    m = cfg.material
    kind = kind or m.kind
    if kind == "homogeneous":
        return homogeneous_field(m.E, m.nu, grid)
    if kind == "random":
        spec = RandomElasticitySpec(seed=cfg.seed, period_x=cfg.period_x,
                                    logE_range=tuple(m.logE_range), nu_range=tuple(m.nu_range))
        return random_periodic_field(spec, grid, offset_cells)
    spec = InclusionSpec(E_in=m.E_in if E_in is None else E_in, nu_in=m.nu_in,
                         length_cells=m.inclusion_length, width_cells=m.inclusion_width)
    return inclusion_field(spec, m.E, m.nu, grid)


def build_coupling(cfg: ScenarioConfig, order: int | None = None, mode: str | None = None) -> CouplingSpec:
    return CouplingSpec(mode=mode or cfg.coupling.mode, order=order or cfg.coupling.order)


def build_bounded_network(cfg: ScenarioConfig, grid: MicroGridSpec, patches: int, coupling: CouplingSpec) -> PatchNetwork:
    offsets = PatchNetwork.bounded_offsets(grid, patches, cfg.geometry.length)
    materials = [build_material(cfg, grid, int(s)) for s in offsets]
    return PatchNetwork.bounded(grid, patches, cfg.geometry.length, coupling, cfg.macro_bc, materials)


def build_full_network_inputs(cfg: ScenarioConfig) -> tuple[MicroGridSpec, MaterialField]:
    cells = int(round(cfg.geometry.length / cfg.geometry.dx))
    grid = build_grid(cfg, nx=cells - 1)
    return grid, build_material(cfg, grid, 0)


def _evaluate(cfg: ScenarioConfig, key: str, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    section, name = key.split(".")
    try:
        return Expression(getattr(getattr(cfg, section), name))(x, y)
    except ExpressionError as e:
        raise ConfigError([f"{key}: {e}"]) from e


def build_force(cfg: ScenarioConfig, net: PatchNetwork) -> list[BodyForce]:
    fx_values = _evaluate(cfg, "forcing.fx", *net.u_coords())
    fy_values = _evaluate(cfg, "forcing.fy", *net.v_coords())
    return [BodyForce(fx_values[i], fy_values[i]) for i in range(net.n_patches)]


def initial_state(cfg: ScenarioConfig, net: PatchNetwork) -> np.ndarray:
    u_at, v_at = net.u_coords(), net.v_coords()
    return net.pack(
        _evaluate(cfg, "dynamics.u0", *u_at), _evaluate(cfg, "dynamics.v0", *v_at),
        _evaluate(cfg, "dynamics.udot0", *u_at), _evaluate(cfg, "dynamics.vdot0", *v_at),
    )


def thresholds_of(cfg: ScenarioConfig) -> SpectrumThresholds:
    s = cfg.spectrum
    return SpectrumThresholds(zero_tol=s.zero_tol, macro_imag_max=s.macro_imag_max, macro_real_min=s.macro_real_min)


def solver_options(cfg: ScenarioConfig) -> dict:
    s = cfg.solver
    return {
        "rtol": s.rtol, "maxiter": s.maxiter or None, "preconditioner": s.preconditioner,
        "drop_tol": s.drop_tol, "fill_factor": s.fill_factor,
    }


def run_sweep(jobs: Sequence[Callable], workers: int | None = None) -> list:
    """Runs independent sweep points on a thread pool driven by a uvloop event loop; keeps job order."""
    workers = worker_count(workers)

    async def gather():
        loop = asyncio.get_running_loop()
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return await asyncio.gather(*(loop.run_in_executor(pool, job) for job in jobs))

    return list(uvloop.run(gather()))


# --- analysis ---------------------------------------------------------------

def error_table(patch_values: Sequence[np.ndarray], reference_values: Sequence[np.ndarray]) -> float:
    """Mean |patch - reference| over all compared nodes divided by mean |reference|."""
    if len(patch_values) != len(reference_values):
        raise ValueError("patch and reference results list different fields")
    diffs, refs = [], []
    for patch, ref in zip(patch_values, reference_values):
        patch, ref = np.asarray(patch), np.asarray(ref)
        if patch.shape != ref.shape:
            raise ValueError(f"footprints differ: patch {patch.shape} vs reference {ref.shape}")
        diffs.append(np.abs(patch - ref).ravel())
        refs.append(np.abs(ref).ravel())
    diff, ref = np.concatenate(diffs), np.concatenate(refs)
    if ref.size == 0:
        raise ValueError("no nodes to compare")
    scale = ref.mean()
    if scale == 0.0:
        if diff.max() == 0.0:
            return 0.0
        raise ValueError("reference field is identically zero")
    return float(diff.mean() / scale)


def analyse_spectrum(jac: np.ndarray, net: PatchNetwork, cfg: ScenarioConfig) -> Spectrum:
    spec = classify(spectrum(jac), thresholds_of(cfg))
    return label_branches(spec, lambda vec: mean_displacement_norms(vec, net), cfg.spectrum.dominance)


def eigen_branch_report(spec: Spectrum) -> pd.DataFrame:
    return pd.DataFrame(branch_rows(spec), columns=BRANCH_COLUMNS)


def spectrum_frame(spec: Spectrum) -> pd.DataFrame:
    n = len(spec)
    return pd.DataFrame({
        "re": spec.eigenvalues.real,
        "im": spec.eigenvalues.imag,
        "class": spec.classes if spec.classes is not None else [""] * n,
        "branch": spec.branches if spec.branches is not None else [""] * n,
        "residual": spec.residuals if spec.residuals is not None else np.full(n, np.nan),
    })[SPECTRUM_COLUMNS]


def spectrum_summary(spec: Spectrum) -> dict:
    non_rigid = spec.eigenvalues[spec.classes != RIGID]
    summary = {
        "eigenvalues": len(spec),
        "rigid_modes": int(np.sum(spec.classes == RIGID)),
        "macro_modes": int(np.sum(spec.classes == MACRO)),
        "max_real_excluding_rigid": spec.max_real(exclude_rigid=True),
        "max_abs_real": float(np.abs(non_rigid.real).max()) if len(non_rigid) else 0.0,
        "conjugate_pairing_error": conjugate_pairing_error(spec.eigenvalues),
        "max_residual": float(spec.residuals.max()) if spec.residuals is not None else None,
    }
    for branch in ("compression", "bending"):
        lead = leading_branch_eigenvalue(spec, branch)
        summary[f"{branch}_k1"] = lead
    return summary


def leading_branch_eigenvalue(spec: Spectrum, branch: str) -> complex | None:
    """Lowest-frequency macro eigenvalue of a branch, Im > 0."""
    mask = (spec.branches == branch) & (spec.eigenvalues.imag > 0)
    if not np.any(mask):
        return None
    values = spec.eigenvalues[mask]
    return complex(values[np.argmin(values.imag)])


def trajectory_frame(traj: Trajectory, net: PatchNetwork) -> pd.DataFrame:
    stats = traj.stats
    n_t, n_p, n_x = stats.ubar.shape
    return pd.DataFrame({
        "t": np.repeat(traj.times, n_p * n_x),
        "patch": np.tile(np.repeat(np.arange(n_p), n_x), n_t),
        "x": np.tile(stats.x.ravel(), n_t),
        "ubar": stats.ubar.ravel(),
        "vbar": stats.vbar.ravel(),
        "ustd": stats.ustd.ravel(),
        "vstd": stats.vstd.ravel(),
    })[TRAJECTORY_COLUMNS]


def mode_amplitudes(traj: Trajectory, length: float) -> tuple[np.ndarray, np.ndarray]:
    """Projections of ubar onto sin(2 pi x/L) and vbar onto cos(2 pi x/L)."""
    stats = traj.stats
    phase = 2 * np.pi * stats.x / length
    sin, cos = np.sin(phase), np.cos(phase)
    a = np.einsum("tpx,px->t", stats.ubar, sin) / np.sum(sin**2)
    b = np.einsum("tpx,px->t", stats.vbar, cos) / np.sum(cos**2)
    return a, b


def standing_wave_period(times: np.ndarray, signal: np.ndarray) -> float:
    """Twice the mean spacing of linearly interpolated zero crossings; nan with fewer than two."""
    times, signal = np.asarray(times, dtype=float), np.asarray(signal, dtype=float)
    change = np.flatnonzero(np.signbit(signal[:-1]) != np.signbit(signal[1:]))
    if len(change) < 2:
        return float("nan")
    t0, t1 = times[change], times[change + 1]
    s0, s1 = signal[change], signal[change + 1]
    crossings = t0 - s0 * (t1 - t0) / (s1 - s0)
    return float(2 * np.mean(np.diff(crossings)))


# --- scenarios --------------------------------------------------------------

def _periodic_network(cfg: ScenarioConfig, grid: MicroGridSpec, material: MaterialField,
                      patches: int | None = None, coupling: CouplingSpec | None = None) -> PatchNetwork:
    return PatchNetwork.periodic(grid, patches or cfg.geometry.patches, cfg.geometry.length,
                                 coupling or build_coupling(cfg), material)


def _run_dynamics(cfg: ScenarioConfig, scheme: PatchScheme, bundle: ResultBundle):
    net = scheme.net
    d = cfg.dynamics
    q0 = initial_state(cfg, net)
    traj = integrate(scheme, q0, d.t_end, d.rel_tol, d.abs_tol, t_eval=sample_times(d.t_end, d.sample_dt))
    traj.stats = cross_beam_statistics(traj.states, net)

    a, b = mode_amplitudes(traj, net.length)
    bundle.tables["trajectory"] = trajectory_frame(traj, net)
    bundle.tables["modes"] = pd.DataFrame({"t": traj.times, "compression": a, "bending": b})
    bundle.summary["compression_period"] = standing_wave_period(traj.times, a)
    bundle.summary["bending_period"] = standing_wave_period(traj.times, b)
    bundle.summary["rhs_evaluations"] = traj.n_evaluations
    bundle.figures["trajectory"] = reports.trajectory_figure(bundle.tables["trajectory"])
    bundle.figures["modes"] = reports.modes_figure(bundle.tables["modes"])
    logger.info(f"Standing-wave periods: compression {bundle.summary['compression_period']:.4g}, "
                f"bending {bundle.summary['bending_period']:.4g}")


def _run_periodic(cfg: ScenarioConfig, bundle: ResultBundle):
    grid = build_grid(cfg)
    material = build_material(cfg, grid)
    net = _periodic_network(cfg, grid, material)
    scheme = PatchScheme(net, build_force(cfg, net), cfg.kappa)
    bundle.summary["network"] = net.describe()
    logger.info(f"{net.n_patches} patches, {net.dim} unknowns, patch ratio {net.ratio:.3g}")

    if cfg.scenario in ("spectrum", "undamped"):
        jac = assemble_jacobian(scheme.unforced(), net.dim, vectorized=True)
        spec = analyse_spectrum(jac, net, cfg)
        bundle.tables["spectrum"] = spectrum_frame(spec)
        bundle.tables["branches"] = eigen_branch_report(spec)
        bundle.summary.update(spectrum_summary(spec))
        bundle.figures["spectrum"] = reports.spectrum_figure(bundle.tables["spectrum"])

    if cfg.dynamics.enabled:
        _run_dynamics(cfg, scheme, bundle)


def run_inclusions(cfg: ScenarioConfig, bundle: ResultBundle):
    grid = build_grid(cfg)

    def network(E_in: float) -> PatchNetwork:
        return _periodic_network(cfg, grid, build_material(cfg, grid, kind="inclusion", E_in=E_in))

    def job(E_in):
        def run():
            net = network(E_in)
            jac = assemble_jacobian(PatchScheme(net, None, cfg.kappa), net.dim, vectorized=True)
            return analyse_spectrum(jac, net, cfg)
        return run

    values = [float(v) for v in cfg.material.E_in_values]
    E_dynamics = float(cfg.material.E_in)
    sweep = values + ([E_dynamics] if cfg.dynamics.enabled and E_dynamics not in values else [])
    spectra = dict(zip(sweep, run_sweep([job(E_in) for E_in in sweep])))

    spectra_frames, branch_frames, rows = [], [], []
    for E_in in values:
        spec = spectra[E_in]
        spectra_frames.append(spectrum_frame(spec).assign(E_in=E_in))
        branch_frames.append(eigen_branch_report(spec).assign(E_in=E_in))
        compression = leading_branch_eigenvalue(spec, "compression")
        bending = leading_branch_eigenvalue(spec, "bending")
        rows.append({
            "E_in": E_in,
            "compression_re": compression.real if compression is not None else np.nan,
            "compression_im": compression.imag if compression is not None else np.nan,
            "bending_re": bending.real if bending is not None else np.nan,
            "bending_im": bending.imag if bending is not None else np.nan,
            "max_real": spec.max_real(exclude_rigid=True),
        })
    bundle.tables["spectrum"] = pd.concat(spectra_frames, ignore_index=True)[["E_in"] + SPECTRUM_COLUMNS]
    bundle.tables["branches"] = pd.concat(branch_frames, ignore_index=True)[["E_in"] + BRANCH_COLUMNS]
    table = pd.DataFrame(rows)
    bundle.tables["inclusions"] = table
    bundle.summary["max_real_excluding_rigid"] = float(table["max_real"].max())
    bundle.summary["compression_im_non_increasing"] = bool(np.all(np.diff(table["compression_im"]) <= 1e-12))
    bundle.figures["inclusions"] = reports.inclusion_figure(table)

    if not cfg.dynamics.enabled:
        return

    # standing waves of one composite beam, measured against its eigenvalues
    net = network(E_dynamics)
    _run_dynamics(cfg, PatchScheme(net, build_force(cfg, net), cfg.kappa), bundle)
    frequencies = []
    for branch in ("compression", "bending"):
        period = bundle.summary[f"{branch}_period"]
        measured = 2 * np.pi / period if np.isfinite(period) else np.nan
        lead = leading_branch_eigenvalue(spectra[E_dynamics], branch)
        frequencies.append({
            "E_in": E_dynamics,
            "branch": branch,
            "measured_period": period,
            "measured_frequency": measured,
            "eigen_frequency": lead.imag if lead is not None else np.nan,
            "eigen_re": lead.real if lead is not None else np.nan,
        })
        bundle.summary[f"{branch}_frequency"] = measured
    bundle.summary["dynamics_E_in"] = E_dynamics
    bundle.tables["frequencies"] = pd.DataFrame(frequencies)
    logger.info(f"E_in={E_dynamics:g}: measured frequencies compression "
                f"{bundle.summary['compression_frequency']:.4g}, bending {bundle.summary['bending_frequency']:.4g}")


def _reference_targets(cfg: ScenarioConfig, grid: MicroGridSpec, material: MaterialField, patches: int) -> dict:
    """Compression and bending k=1 eigenvalues of the smallest spectral network, by dense eigensolve."""
    net = _periodic_network(cfg, grid, material, patches, CouplingSpec("spectral"))
    jac = assemble_jacobian(PatchScheme(net, None, cfg.kappa), net.dim, vectorized=True)
    spec = analyse_spectrum(jac, net, cfg)
    targets = {}
    for branch in ("compression", "bending"):
        lead = leading_branch_eigenvalue(spec, branch)
        if lead is None:
            raise SolverError(f"no {branch} eigenvalue found in the spectral reference")
        targets[branch] = lead
    return targets


def run_convergence(cfg: ScenarioConfig, bundle: ResultBundle):
    grid = build_grid(cfg)
    st = cfg.study
    counts = sorted(int(n) for n in st.patch_counts)

    def job(material: MaterialField, patches: int, targets: dict):
        def run():
            rows = []
            reference = {}
            net = _periodic_network(cfg, grid, material, patches, CouplingSpec("spectral"))
            jac = assemble_jacobian(PatchScheme(net, None, cfg.kappa), net.dim, vectorized=True, sparse=True)
            for branch, target in targets.items():
                reference[branch] = eigenvalues_near(jac, [target])[0, 0]
            for order in st.orders:
                try:
                    net = _periodic_network(cfg, grid, material, patches, CouplingSpec("polynomial", order))
                except CouplingError as e:
                    logger.warning(f"Skipping P={order}, N={patches}: {e}")
                    continue
                jac = assemble_jacobian(PatchScheme(net, None, cfg.kappa), net.dim, vectorized=True, sparse=True)
                for branch, ref in reference.items():
                    lam = eigenvalues_near(jac, [ref])[0, 0]
                    rows.append({
                        "branch": branch, "order": order, "patches": patches,
                        "re": lam.real, "im": lam.imag, "ref_re": ref.real, "ref_im": ref.imag,
                        "rel_error": abs(lam - ref) / abs(ref),
                    })
            logger.debug(f"Convergence point N={patches} done")
            return reference, rows
        return run

    error_rows, spectral_rows = [], []
    for kind in st.materials:
        material = build_material(cfg, grid, kind=kind)
        targets = _reference_targets(cfg, grid, material, counts[0])
        results = run_sweep([job(material, n, targets) for n in counts])
        for patches, (reference, rows) in zip(counts, results):
            for branch, ref in reference.items():
                spectral_rows.append({"material": kind, "branch": branch, "patches": patches,
                                      "re": ref.real, "im": ref.imag})
            error_rows.extend({"material": kind, **row} for row in rows)

    errors = pd.DataFrame(error_rows)
    spectral = pd.DataFrame(spectral_rows)
    bundle.tables["convergence"] = errors
    bundle.tables["spectral_invariance"] = spectral
    bundle.tables["slopes"] = convergence_slopes(errors)

    spread = spectral.groupby(["material", "branch"])[["re", "im"]].agg(lambda s: s.max() - s.min())
    bundle.summary["spectral_max_spread"] = float(spread.to_numpy().max())
    bundle.figures["convergence"] = reports.convergence_figure(errors)


def convergence_slopes(errors: pd.DataFrame, floor: float = 1e-13) -> pd.DataFrame:
    """Least-squares slope of log(error) against log(N), ignoring round-off level points."""
    rows = []
    if errors.empty:
        return pd.DataFrame(columns=["material", "branch", "order", "slope", "points"])
    for (kind, branch, order), group in errors.groupby(["material", "branch", "order"], sort=True):
        usable = group[group["rel_error"] > floor]
        slope = np.nan
        if len(usable) >= 2:
            slope = np.polyfit(np.log(usable["patches"]), np.log(usable["rel_error"]), 1)[0]
        rows.append({"material": kind, "branch": branch, "order": order, "slope": slope, "points": len(usable)})
    return pd.DataFrame(rows)


def _patch_equilibrium(cfg: ScenarioConfig, grid: MicroGridSpec, patches: int,
                       order: int) -> tuple[PatchNetwork, EquilibriumResult]:
    net = build_bounded_network(cfg, grid, patches, build_coupling(cfg, order=order))
    result = scheme_equilibrium(PatchScheme(net, build_force(cfg, net), cfg.kappa), **solver_options(cfg))
    return net, result


def _full_reference(cfg: ScenarioConfig) -> tuple[PatchNetwork, EquilibriumResult]:
    grid, material = build_full_network_inputs(cfg)
    whole = PatchNetwork.full_domain(grid, cfg.geometry.length, cfg.macro_bc, material)
    force = build_force(cfg, whole)[0]
    return full_domain_reference(grid, cfg.geometry.length, cfg.macro_bc, material, force, cfg.kappa,
                                 **solver_options(cfg))


def deflection_frame(net: PatchNetwork, q: np.ndarray) -> pd.DataFrame:
    stats = cross_beam_statistics(q, net)
    return pd.DataFrame({
        "patch": np.repeat(np.arange(net.n_patches), net.grid.nx),
        "x": stats.x.ravel(),
        "ubar": stats.ubar.ravel(),
        "vbar": stats.vbar.ravel(),
    })


def _compare(net: PatchNetwork, q: np.ndarray, full_net: PatchNetwork, q_full: np.ndarray) -> float:
    u, v, _, _ = net.unpack(q)
    u_ref, v_ref = restrict_to_patches(q_full, full_net, net)
    return error_table([u, v], [u_ref, v_ref])


def run_fixed_fixed(cfg: ScenarioConfig, bundle: ResultBundle):
    grid = build_grid(cfg)
    full_net, full = _full_reference(cfg)

    points = []
    for order in cfg.study.orders:
        for patches in cfg.study.patch_counts:
            if patches < order + 1:
                logger.warning(f"Skipping P={order}, N={patches}: stencil needs {order + 1} patches")
                continue
            points.append((order, patches))

    def job(order, patches):
        def run():
            net, result = _patch_equilibrium(cfg, grid, patches, order)
            return net, result, _compare(net, result.q, full_net, full.q)
        return run

    results = run_sweep([job(o, n) for o, n in points])
    rows = []
    for (order, patches), (net, result, err) in zip(points, results):
        rows.append({"order": order, "patches": patches, "patch_ratio": net.ratio, "error": err,
                     "iterations": result.iterations, "residual": result.residual})
        if order == cfg.coupling.order and patches == cfg.geometry.patches:
            bundle.tables["deflection"] = deflection_frame(net, result.q)

    bundle.tables["errors"] = pd.DataFrame(rows)
    bundle.tables["reference"] = deflection_frame(full_net, full.q)
    bundle.summary["reference_max_deflection"] = float(np.abs(bundle.tables["reference"]["vbar"]).max())
    bundle.figures["errors"] = reports.error_figure(bundle.tables["errors"])
    if "deflection" in bundle.tables:
        bundle.figures["deflection"] = reports.deflection_figure(bundle.tables["deflection"], bundle.tables["reference"])


def run_full_domain(cfg: ScenarioConfig, bundle: ResultBundle):
    full_net, full = _full_reference(cfg)
    bundle.tables["reference"] = deflection_frame(full_net, full.q)
    bundle.summary["dof"] = full_net.dim
    bundle.summary["iterations"] = full.iterations
    bundle.summary["residual"] = full.residual
    bundle.summary["max_deflection"] = float(np.abs(bundle.tables["reference"]["vbar"]).max())
    bundle.figures["reference"] = reports.deflection_figure(None, bundle.tables["reference"])


def tip_deflection(frame: pd.DataFrame) -> float:
    return float(frame.loc[frame["x"].idxmax(), "vbar"])


def run_fixed_free(cfg: ScenarioConfig, bundle: ResultBundle):
    grid = build_grid(cfg)
    net, result = _patch_equilibrium(cfg, grid, cfg.geometry.patches, cfg.coupling.order)
    frame = deflection_frame(net, result.q)
    bundle.tables["deflection"] = frame
    bundle.summary.update({
        "network": net.describe(), "iterations": result.iterations,
        "residual": result.residual, "tip_deflection": tip_deflection(frame),
        "wall_time_patches": result.wall_time,
    })
    reference = None
    if cfg.study.compare_full:
        full_net, full = _full_reference(cfg)
        reference = deflection_frame(full_net, full.q)
        bundle.tables["reference"] = reference
        bundle.summary["error"] = _compare(net, result.q, full_net, full.q)
        bundle.summary["reference_tip_deflection"] = tip_deflection(reference)
        bundle.summary["wall_time_full"] = full.wall_time
    logger.info(f"Tip deflection {bundle.summary['tip_deflection']:.6g}")
    bundle.figures["deflection"] = reports.deflection_figure(frame, reference)


SCENARIOS: dict[str, Callable[[ScenarioConfig, ResultBundle], None]] = {
    "periodic-dynamics": _run_periodic,
    "spectrum": _run_periodic,
    "undamped": _run_periodic,
    "convergence-study": run_convergence,
    "inclusions": run_inclusions,
    "fixed-fixed-equilibrium": run_fixed_fixed,
    "fixed-free-equilibrium": run_fixed_free,
    "full-domain-reference": run_full_domain,
}


def run_scenario(cfg: ScenarioConfig) -> ResultBundle:
    bundle = ResultBundle(scenario=cfg.scenario, config=cfg.to_dict())
    logger.info(f"Running scenario {cfg.scenario} (seed {cfg.seed})")
    start = time.perf_counter()
    try:
        SCENARIOS[cfg.scenario](cfg, bundle)
    except SolverError as e:
        raise SolverError(f"{cfg.scenario}: {e}") from e
    bundle.wall_time = time.perf_counter() - start
    logger.info(f"Scenario {cfg.scenario} finished in {bundle.wall_time:.1f}s")
    return bundle
