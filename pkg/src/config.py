"""
Scenario configuration: TOML files merged over per-scenario defaults,
validated into a dataclass tree.

Merge order: scenario defaults < config file < --seed < --override key=value.
"""
import copy
import logging
import math

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Iterable

from src.expressions import Expression, ExpressionError

logger = logging.getLogger(__name__)

SCENARIO_NAMES = (
    "periodic-dynamics",
    "spectrum",
    "convergence-study",
    "undamped",
    "inclusions",
    "fixed-fixed-equilibrium",
    "fixed-free-equilibrium",
    "full-domain-reference",
)
PERIODIC_SCENARIOS = ("periodic-dynamics", "spectrum", "convergence-study", "undamped", "inclusions")
SWEEP_SCENARIOS = ("convergence-study", "fixed-fixed-equilibrium")
MATERIAL_KINDS = ("homogeneous", "random", "inclusion")
MACRO_BCS = ("periodic", "fixed-fixed", "fixed-free")


class ConfigError(ValueError):
    def __init__(self, messages: Iterable[str]):
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


@dataclass
class GeometryConfig:
    length: float = 2 * math.pi
    nx: int = 5
    ny: int = 9
    dx: float = 0.05
    dy: float = 0.05
    patches: int = 7

    @property
    def width(self) -> float:
        return (self.ny - 1) * self.dy

    @property
    def patch_length(self) -> float:
        return self.nx * self.dx


@dataclass
class MaterialConfig:
    kind: str = "random"
    E: float = 1.0
    nu: float = 0.3
    # 0 means one patch length, nx * dx
    period_x: float = 0.0
    logE_range: tuple = (-1.0, 1.0)
    nu_range: tuple = (0.2, 0.4)
    E_in: float = 1.0
    nu_in: float = 0.3
    inclusion_length: int = 4
    inclusion_width: int = 2
    E_in_values: tuple = (1.0, 0.1, 0.01, 0.001)


@dataclass
class CouplingConfig:
    mode: str = "spectral"
    order: int = 4


@dataclass
class ForcingConfig:
    fx: str = "0"
    fy: str = "0"


@dataclass
class DynamicsConfig:
    enabled: bool = True
    t_end: float = 120.0
    sample_dt: float = 0.5
    u0: str = "0.2*sin(x) + 0.2*y"
    v0: str = "0.2*cos(x) + 0.2*y"
    udot0: str = "0"
    vdot0: str = "0"
    rel_tol: float = 1e-6
    abs_tol: float = 1e-9


@dataclass
class SpectrumConfig:
    zero_tol: float = 1e-5
    macro_imag_max: float = 3.0
    macro_real_min: float = -0.02
    dominance: float = 2.0


@dataclass
class SolverConfig:
    rtol: float = 1e-9
    # 0 lets scipy choose
    maxiter: int = 0
    preconditioner: str = "ilu"
    drop_tol: float = 1e-6
    fill_factor: float = 10.0


@dataclass
class StudyConfig:
    orders: tuple = (4, 6, 8)
    patch_counts: tuple = (5, 10, 20, 40)
    materials: tuple = ("homogeneous", "random")
    compare_full: bool = False


@dataclass
class OutputConfig:
    dir: str = ""
    plots: bool = True


@dataclass
class ScenarioConfig:
    scenario: str = "periodic-dynamics"
    seed: int = 2024
    kappa: float = 1e-3
    macro_bc: str = "periodic"
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    material: MaterialConfig = field(default_factory=MaterialConfig)
    coupling: CouplingConfig = field(default_factory=CouplingConfig)
    forcing: ForcingConfig = field(default_factory=ForcingConfig)
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    spectrum: SpectrumConfig = field(default_factory=SpectrumConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    study: StudyConfig = field(default_factory=StudyConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    @property
    def period_x(self) -> float:
        return self.material.period_x or self.geometry.patch_length

    @property
    def out_dir(self) -> Path:
        return Path(self.output.dir or f"results/{self.scenario}")

    def to_dict(self) -> dict:
        return asdict(self)


_SECTIONS = {
    "geometry": GeometryConfig,
    "material": MaterialConfig,
    "coupling": CouplingConfig,
    "forcing": ForcingConfig,
    "dynamics": DynamicsConfig,
    "spectrum": SpectrumConfig,
    "solver": SolverConfig,
    "study": StudyConfig,
    "output": OutputConfig,
}
_TOP_LEVEL = ("scenario", "seed", "kappa", "macro_bc")

_FIXED_FIXED = {
    "kappa": 0.0,
    "macro_bc": "fixed-fixed",
    "geometry": {"length": 1.0, "nx": 8, "ny": 5, "dx": 1 / 201, "dy": 0.005, "patches": 17},
    "material": {"kind": "random", "period_x": 6 / 201, "logE_range": [math.log(0.6), math.log(1.6)]},
    "coupling": {"mode": "polynomial", "order": 4},
    "forcing": {"fy": "exp(2*x)*sin(x)/1000"},
    "dynamics": {"enabled": False},
    "study": {"orders": [4, 6, 8], "patch_counts": [5, 9, 17], "materials": ["random"]},
}

SCENARIO_DEFAULTS: dict[str, dict] = {
    "periodic-dynamics": {},
    "spectrum": {"dynamics": {"enabled": False}},
    "convergence-study": {
        "geometry": {"dx": math.pi / 200, "dy": 0.025, "nx": 5, "ny": 9, "patches": 5},
        "material": {"kind": "homogeneous"},
        "dynamics": {"enabled": False},
    },
    "undamped": {
        "kappa": 0.0,
        "geometry": {"dx": 0.025, "dy": 0.025, "nx": 5, "ny": 9},
        "dynamics": {"t_end": 240.0, "sample_dt": 1.0},
    },
    "inclusions": {
        "geometry": {"nx": 9, "ny": 7, "dx": 0.2 / 6, "dy": 0.2 / 6},
        "material": {"kind": "inclusion", "E_in": 0.1},
        "dynamics": {"t_end": 240.0, "sample_dt": 1.0},
    },
    "fixed-fixed-equilibrium": _FIXED_FIXED,
    "full-domain-reference": _FIXED_FIXED,
    "fixed-free-equilibrium": {
        "kappa": 0.0,
        "macro_bc": "fixed-free",
        "geometry": {"length": 1.0, "nx": 7, "ny": 26, "dx": 0.005, "dy": 0.005, "patches": 5},
        "material": {"kind": "random", "period_x": 0.025},
        "coupling": {"mode": "polynomial", "order": 4},
        "forcing": {"fy": "1e-3"},
        "dynamics": {"enabled": False},
        "study": {"orders": [4], "patch_counts": [5], "materials": ["random"]},
    },
}


def deep_merge(base: dict, update: dict) -> dict:
    merged = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def parse_override(text: str) -> tuple[list[str], Any]:
    """'geometry.nx=9' -> (['geometry', 'nx'], 9); values are TOML literals, else strings."""
    if "=" not in text:
        raise ConfigError([f"override {text!r}: expected key=value"])
    key, raw = text.split("=", 1)
    path = [part.strip() for part in key.strip().split(".")]
    if not all(path):
        raise ConfigError([f"override {text!r}: malformed key"])
    try:
        value = tomllib.loads(f"value = {raw.strip()}")["value"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return path, value


def apply_override(data: dict, path: list[str], value: Any) -> dict:
    nested = value
    for part in reversed(path):
        nested = {part: nested}
    return deep_merge(data, nested)


def _coerce(name: str, default: Any, value: Any, errors: list[str]) -> Any:
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
    elif isinstance(default, int):
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        if isinstance(value, float) and value.is_integer():
            return int(value)
    elif isinstance(default, float):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
    elif isinstance(default, str):
        if isinstance(value, str):
            return value
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return str(value)
    elif isinstance(default, tuple):
        if isinstance(value, (list, tuple)):
            return tuple(value)
    errors.append(f"{name}: expected {type(default).__name__}, got {type(value).__name__}")
    return default


def _build_section(cls, data: Any, prefix: str, errors: list[str]):
    if not isinstance(data, dict):
        errors.append(f"{prefix}: expected a table")
        return cls()
    known = {f.name: f for f in fields(cls)}
    for key in data:
        if key not in known:
            errors.append(f"{prefix}.{key}: unknown key")
    defaults = cls()
    values = {
        name: _coerce(f"{prefix}.{name}", getattr(defaults, name), data[name], errors)
        for name in known if name in data
    }
    return cls(**values)


def _validate(cfg: ScenarioConfig, errors: list[str]):
    g, m = cfg.geometry, cfg.material
    if cfg.scenario not in SCENARIO_NAMES:
        errors.append(f"scenario: unknown scenario {cfg.scenario!r}, expected one of {list(SCENARIO_NAMES)}")
    if cfg.macro_bc not in MACRO_BCS:
        errors.append(f"macro_bc: expected one of {list(MACRO_BCS)}, got {cfg.macro_bc!r}")
    elif cfg.scenario in PERIODIC_SCENARIOS and cfg.macro_bc != "periodic":
        errors.append(f"macro_bc: scenario {cfg.scenario} needs a periodic beam")
    elif cfg.scenario not in PERIODIC_SCENARIOS and cfg.macro_bc == "periodic":
        errors.append(f"macro_bc: scenario {cfg.scenario} needs physical beam ends")
    if cfg.kappa < 0:
        errors.append("kappa: must be >= 0")
    if cfg.seed < 0:
        errors.append("seed: must be >= 0")

    # geometry
    if g.nx < 3:
        errors.append("geometry.nx: must be >= 3")
    if g.ny < 4:
        errors.append("geometry.ny: must be >= 4")
    for name in ("length", "dx", "dy"):
        if getattr(g, name) <= 0:
            errors.append(f"geometry.{name}: must be > 0")
    if g.patches < 1:
        errors.append("geometry.patches: must be >= 1")
    if errors:
        return

    counts = {g.patches}
    if cfg.scenario in SWEEP_SCENARIOS:
        counts |= set(cfg.study.patch_counts)
    footprint = (g.nx + 1) * g.dx
    if cfg.macro_bc == "periodic":
        for n in counts:
            if n < 3:
                errors.append(f"geometry.patches: periodic beams need >= 3 patches, got {n}")
            elif footprint > g.length / n + 1e-12:
                errors.append(f"geometry: {n} patches of footprint {footprint:.6g} overlap on length {g.length:.6g}")
    else:
        cells = g.length / g.dx
        if abs(cells - round(cells)) > 1e-6:
            errors.append("geometry.length: must be a whole number of micro-cells dx")
        elif round(cells) - 1 < g.nx:
            errors.append("geometry.length: shorter than one patch")
        elif cfg.scenario != "full-domain-reference":
            span = round(cells) - 1 - g.nx
            for n in sorted(counts):
                if n == 2:
                    errors.append("geometry.patches: bounded beams need 1 or >= 3 patches, got 2")
                elif n == 1 and span:
                    errors.append("geometry.patches: a single bounded patch must span the whole beam")
                elif n > 2:
                    # same placement as PatchNetwork.bounded_offsets
                    starts = [round(i * span / (n - 1)) for i in range(n)]
                    gap = min(b - a for a, b in zip(starts, starts[1:]))
                    if gap < g.nx + 1:
                        errors.append(f"geometry: {n} patches of {g.nx + 1} cells overlap on a beam of "
                                      f"{round(cells)} cells")

    # material
    if m.kind not in MATERIAL_KINDS:
        errors.append(f"material.kind: expected one of {list(MATERIAL_KINDS)}, got {m.kind!r}")
    for name in ("E", "E_in"):
        if getattr(m, name) <= 0:
            errors.append(f"material.{name}: must be > 0")
    for name in ("nu", "nu_in"):
        if not -1.0 < getattr(m, name) < 0.5:
            errors.append(f"material.{name}: must lie in (-1, 0.5)")
    for name in ("logE_range", "nu_range"):
        pair = getattr(m, name)
        if len(pair) != 2 or not all(isinstance(v, (int, float)) for v in pair) or pair[0] > pair[1]:
            errors.append(f"material.{name}: expected an ordered pair [low, high]")
    if len(m.nu_range) == 2 and not (-1.0 < m.nu_range[0] and m.nu_range[1] < 0.5):
        errors.append("material.nu_range: must lie in (-1, 0.5)")
    if m.kind == "random":
        cells = cfg.period_x / g.dx
        if cfg.period_x <= 0 or abs(cells - round(cells)) > 1e-9 * max(1.0, cells) or round(cells) < 1:
            errors.append("material.period_x: must be a positive multiple of geometry.dx")
        elif cfg.macro_bc == "periodic" and g.nx % round(cells):
            # edge columns repeat the donor column material
            errors.append(f"material.period_x: must divide the patch length nx * dx = {g.patch_length:.6g}")
    if m.kind == "inclusion":
        if not 0 <= m.inclusion_length < g.nx - 2:
            errors.append(f"material.inclusion_length: must lie in [0, {g.nx - 2})")
        if not 0 <= m.inclusion_width < g.ny - 1:
            errors.append(f"material.inclusion_width: must lie in [0, {g.ny - 1})")
        if not m.E_in_values or any(not isinstance(v, (int, float)) or v <= 0 for v in m.E_in_values):
            errors.append("material.E_in_values: must be a non-empty list of positive numbers")

    # coupling
    c = cfg.coupling
    if c.mode not in ("polynomial", "spectral"):
        errors.append(f"coupling.mode: expected 'polynomial' or 'spectral', got {c.mode!r}")
    elif c.mode == "spectral" and cfg.macro_bc != "periodic":
        errors.append("coupling.mode: spectral coupling needs a periodic beam")
    orders = set(cfg.study.orders) | {c.order}
    for order in orders:
        if not isinstance(order, int) or order < 2 or order % 2:
            errors.append(f"coupling.order: orders must be even integers >= 2, got {order!r}")

    # expressions
    for section, names in (("forcing", ("fx", "fy")), ("dynamics", ("u0", "v0", "udot0", "vdot0"))):
        for name in names:
            try:
                Expression(getattr(getattr(cfg, section), name))
            except ExpressionError as e:
                errors.append(f"{section}.{name}: {e}")

    d = cfg.dynamics
    if d.t_end <= 0:
        errors.append("dynamics.t_end: must be > 0")
    if d.sample_dt <= 0:
        errors.append("dynamics.sample_dt: must be > 0")
    if d.rel_tol <= 0 or d.abs_tol <= 0:
        errors.append("dynamics: tolerances must be > 0")

    s = cfg.spectrum
    if s.zero_tol <= 0 or s.macro_imag_max <= 0 or s.dominance <= 1:
        errors.append("spectrum: zero_tol and macro_imag_max must be > 0, dominance > 1")

    sv = cfg.solver
    if sv.rtol <= 0:
        errors.append("solver.rtol: must be > 0")
    if sv.maxiter < 0:
        errors.append("solver.maxiter: must be >= 0")
    if sv.preconditioner not in ("ilu", "none"):
        errors.append(f"solver.preconditioner: expected 'ilu' or 'none', got {sv.preconditioner!r}")

    st = cfg.study
    if not st.patch_counts or any(not isinstance(n, int) or n < 1 for n in st.patch_counts):
        errors.append("study.patch_counts: must be a non-empty list of positive integers")
    if any(kind not in ("homogeneous", "random") for kind in st.materials):
        errors.append("study.materials: entries must be 'homogeneous' or 'random'")


def config_from_dict(data: dict) -> ScenarioConfig:
    errors: list[str] = []
    for key in data:
        if key not in _SECTIONS and key not in _TOP_LEVEL:
            errors.append(f"{key}: unknown key")

    defaults = ScenarioConfig()
    top = {
        name: _coerce(name, getattr(defaults, name), data[name], errors)
        for name in _TOP_LEVEL if name in data
    }
    sections = {
        name: _build_section(cls, data[name], name, errors)
        for name, cls in _SECTIONS.items() if name in data
    }
    cfg = ScenarioConfig(**top, **sections)
    if not errors:
        _validate(cfg, errors)
    if errors:
        raise ConfigError(errors)
    return cfg


def resolve(data: dict, seed: int | None = None, overrides: Iterable[str] = ()) -> ScenarioConfig:
    parsed = [parse_override(text) for text in overrides]
    scenario = data.get("scenario")
    for path, value in parsed:
        if path == ["scenario"]:
            scenario = value
    if scenario is None:
        raise ConfigError(["scenario: missing"])
    if scenario not in SCENARIO_DEFAULTS:
        raise ConfigError([f"scenario: unknown scenario {scenario!r}, expected one of {list(SCENARIO_NAMES)}"])

    merged = deep_merge(SCENARIO_DEFAULTS[scenario], data)
    if seed is not None:
        merged["seed"] = seed
    for path, value in parsed:
        merged = apply_override(merged, path, value)
    return config_from_dict(merged)


def load_config(path: str | Path, seed: int | None = None, overrides: Iterable[str] = ()) -> ScenarioConfig:
    path = Path(path)
    try:
        with path.open("rb") as f:
            data = tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError([f"{path}: no such config file"])
    except tomllib.TOMLDecodeError as e:
        raise ConfigError([f"{path}: {e}"])
    cfg = resolve(data, seed, overrides)
    logger.debug(f"Loaded {cfg.scenario} config from {path}")
    return cfg
