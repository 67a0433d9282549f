"""Plain-text run configuration: flat dotted keys, strict schema.

Format, one assignment per line::

    # monomer side
    experiment = simulate
    model.production = 2400
    model.clearance = 4
    model.conversion.shape = bell
    model.conversion.base = 0.001
    model.conversion.amplitude = 0.01
    model.conversion.center = 2
    model.conversion.width_sq = 0.1
    simulate.t_end = 200

Comments start with '#'.  Lists are comma-separated.  Unknown keys are
rejected; every violation is collected and reported with its line number
rather than stopping at the first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .coefficients import Affine, Bell, CoefficientSet, CoefficientShape, Constant, ScaledBell
from .grid import SizeGrid

__all__ = ["RunConfig", "ConfigError", "parse_config", "default_xmax"]

EXPERIMENTS = ("eigen", "steady", "simulate", "sweep", "validate")
SWEEP_AXES = ("bell_amplitude", "frag_slope", "tightness", "peak_center", "dose")
SHAPE_PARAMS = {
    "constant": ("value",),
    "affine": ("intercept", "slope"),
    "bell": ("base", "amplitude", "center", "width_sq"),
    "scaled_bell": ("base", "tightness", "center"),
}

# key -> (type tag, default); shapes handled separately
_SCALAR_KEYS = {
    "experiment": ("enum:experiment", None),
    "model.production": ("float", 2400.0),
    "model.clearance": ("float", 4.0),
    "model.x0": ("float", 0.0),
    "model.kernel": ("str", "uniform"),
    "grid.xmax": ("float", None),
    "grid.n": ("int", 800),
    "grid.spacing": ("enum:spacing", "uniform"),
    "grid.ratio": ("float", 1.01),
    "eigen.v_values": ("floatlist", None),
    "eigen.tol": ("float", 1e-10),
    "steady.v_max": ("float", None),
    "simulate.t_end": ("float", 200.0),
    "simulate.v_init": ("float", None),
    "simulate.seed_scale": ("float", 1.0),
    "simulate.record_every": ("int", 1),
    "simulate.snapshot_times": ("floatlist", (96.0,)),
    "simulate.fit_start": ("float", 15.0),
    "simulate.fit_end": ("float", 40.0),
    "simulate.threshold_ratio": ("float", 1e3),
    "simulate.dt_max": ("float", None),
    "sweep.axis": ("enum:axis", None),
    "sweep.values": ("floatlist", None),
    "sweep.t_end": ("float", 200.0),
    "sweep.probe_time": ("float", 96.0),
    "sweep.v_eval": ("float", None),
    "sweep.threshold_ratio": ("float", 1e3),
    "sweep.record_every": ("int", 4),
    "output.dir": ("str", "out"),
    "output.timings": ("bool", False),
    "seed": ("int", 0),
    "threads": ("int", 1),
}

_SHAPE_PREFIXES = ("model.conversion", "model.fragmentation", "model.decay")

_DEFAULT_SHAPES = {
    "model.conversion": Constant(0.001),
    "model.fragmentation": Affine(0.0, 0.03),
    "model.decay": Constant(0.05),
}


class ConfigError(ValueError):
    """All schema violations found in one pass, each tagged with its line."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


def default_xmax(coeffs: CoefficientSet) -> float:
    """Domain size covering the equilibrium profile tail.

    For constant decay with a linear-growth splitting rate the
    equilibrium density decays like exp(-(x*slope/decay0)**2/2); ten mean
    sizes leave less than 1e-8 of the mass outside.  Other shape classes
    fall back to a wide fixed domain.
    """
    if isinstance(coeffs.decay, Constant) and isinstance(coeffs.fragmentation, Affine) \
            and coeffs.fragmentation.slope > 0.0:
        return 10.0 * coeffs.decay.value / coeffs.fragmentation.slope
    return 60.0


@dataclass
class RunConfig:
    """Validated run description; see module docstring for the file format."""

    experiment: str
    coeffs: CoefficientSet
    xmax: float
    n: int = 800
    spacing: str = "uniform"
    ratio: float = 1.01
    eigen_v_values: Optional[tuple] = None
    eigen_tol: float = 1e-10
    steady_v_max: Optional[float] = None
    t_end: float = 200.0
    v_init: Optional[float] = None
    seed_scale: float = 1.0
    record_every: int = 1
    snapshot_times: tuple = (96.0,)
    fit_start: float = 15.0
    fit_end: float = 40.0
    threshold_ratio: float = 1e3
    dt_max: Optional[float] = None
    sweep_axis: Optional[str] = None
    sweep_values: Optional[tuple] = None
    sweep_t_end: float = 200.0
    probe_time: float = 96.0
    sweep_v_eval: Optional[float] = None
    sweep_threshold_ratio: float = 1e3
    sweep_record_every: int = 4
    out_dir: str = "out"
    timings: bool = False
    seed: int = 0
    threads: int = 1
    source_text: str = field(default="", repr=False)

    @property
    def vbar(self) -> float:
        if self.coeffs.clearance == 0.0:
            return float("inf")
        return self.coeffs.production / self.coeffs.clearance

    def make_grid(self) -> SizeGrid:
        if self.spacing == "geometric":
            return SizeGrid.geometric(self.xmax, self.n, x0=self.coeffs.x0,
                                      ratio=self.ratio)
        return SizeGrid.uniform(self.xmax, self.n, x0=self.coeffs.x0)


def _parse_value(tag: str, raw: str, key: str, line_no: int, errors: list):
    raw = raw.strip()
    try:
        if tag == "float":
            return float(raw)
        if tag == "int":
            return int(raw)
        if tag == "bool":
            if raw.lower() in ("true", "yes", "1"):
                return True
            if raw.lower() in ("false", "no", "0"):
                return False
            raise ValueError(raw)
        if tag == "floatlist":
            return tuple(float(p) for p in raw.split(",") if p.strip() != "")
        if tag == "str":
            return raw
        if tag == "enum:experiment":
            if raw not in EXPERIMENTS:
                raise ValueError("must be one of %s" % (", ".join(EXPERIMENTS)))
            return raw
        if tag == "enum:spacing":
            if raw not in ("uniform", "geometric"):
                raise ValueError("must be uniform or geometric")
            return raw
        if tag == "enum:axis":
            if raw not in SWEEP_AXES:
                raise ValueError("must be one of %s" % (", ".join(SWEEP_AXES)))
            return raw
    except ValueError as exc:
        detail = str(exc) if str(exc) != raw else "cannot parse %r as %s" % (raw, tag)
        errors.append("line %d: %s: %s" % (line_no, key, detail))
        return None
    errors.append("line %d: %s: unhandled value type %s" % (line_no, key, tag))
    return None


def _build_shape(prefix: str, entries: dict, errors: list) -> Optional[CoefficientShape]:
    """entries: param name -> (line_no, raw value)."""
    if not entries:
        return _DEFAULT_SHAPES[prefix]
    if "shape" not in entries:
        ln = min(ln for ln, _ in entries.values())
        errors.append("line %d: %s.*: shape parameters given without %s.shape"
                      % (ln, prefix, prefix))
        return None
    ln, shape_name = entries.pop("shape")
    if shape_name not in SHAPE_PARAMS:
        errors.append("line %d: %s.shape: unknown shape %r (one of %s)"
                      % (ln, prefix, shape_name, ", ".join(sorted(SHAPE_PARAMS))))
        return None
    wanted = SHAPE_PARAMS[shape_name]
    params = {}
    ok = True
    for name, (pln, raw) in entries.items():
        if name not in wanted:
            errors.append("line %d: %s.%s: not a parameter of shape %r"
                          " (takes: %s)"
                          % (pln, prefix, name, shape_name,
                             ", ".join(sorted(wanted))))
            ok = False
            continue
        val = _parse_value("float", raw, "%s.%s" % (prefix, name), pln, errors)
        if val is None:
            ok = False
        else:
            params[name] = val
    for name in wanted:
        if name not in params and ok:
            errors.append("line %d: %s.%s missing for shape %r"
                          % (ln, prefix, name, shape_name))
            ok = False
    if not ok:
        return None
    cls = {"constant": Constant, "affine": Affine, "bell": Bell,
           "scaled_bell": ScaledBell}[shape_name]
    return cls(**params)


def parse_config(text: str) -> RunConfig:
    """Parse and validate; raises ConfigError listing every problem found."""
    errors: list = []
    scalars: dict = {}
    shapes = {p: {} for p in _SHAPE_PREFIXES}

    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            errors.append("line %d: expected 'key = value', got %r" % (line_no, stripped))
            continue
        key, raw = (part.strip() for part in stripped.split("=", 1))
        owner = next((p for p in _SHAPE_PREFIXES if key.startswith(p + ".")), None)
        if owner is not None:
            param = key[len(owner) + 1:]
            if param in shapes[owner]:
                errors.append("line %d: %s set twice" % (line_no, key))
            shapes[owner][param] = (line_no, raw)
            continue
        if key not in _SCALAR_KEYS:
            errors.append("line %d: unknown key %r" % (line_no, key))
            continue
        if key in scalars:
            errors.append("line %d: %s set twice" % (line_no, key))
            continue
        tag, _ = _SCALAR_KEYS[key]
        val = _parse_value(tag, raw, key, line_no, errors)
        if val is not None:
            scalars[key] = val

    built_shapes = {p: _build_shape(p, dict(v), errors) for p, v in shapes.items()}

    def get(key):
        return scalars.get(key, _SCALAR_KEYS[key][1])

    if "experiment" not in scalars:
        errors.append("config: missing required key 'experiment'")

    for key, label in (("model.production", "production"), ("model.clearance", "clearance"),
                       ("model.x0", "x0")):
        if get(key) is not None and get(key) < 0.0:
            errors.append("config: %s must be nonnegative, got %g" % (label, get(key)))
    if get("grid.n") < 2:
        errors.append("config: grid.n must be at least 2, got %d" % get("grid.n"))
    if get("model.kernel") != "uniform":
        errors.append("config: model.kernel must be 'uniform', got %r" % get("model.kernel"))
    exp = scalars.get("experiment")
    if exp == "eigen" and get("eigen.v_values") is None:
        errors.append("config: experiment 'eigen' requires eigen.v_values")
    if exp == "sweep":
        if get("sweep.axis") is None:
            errors.append("config: experiment 'sweep' requires sweep.axis")
        if get("sweep.values") is None:
            errors.append("config: experiment 'sweep' requires sweep.values")
    if errors:
        raise ConfigError(errors)

    coeffs = CoefficientSet(
        production=get("model.production"), clearance=get("model.clearance"),
        x0=get("model.x0"), conversion=built_shapes["model.conversion"],
        fragmentation=built_shapes["model.fragmentation"],
        decay=built_shapes["model.decay"], kernel=get("model.kernel"))

    xmax = get("grid.xmax")
    if xmax is None:
        xmax = default_xmax(coeffs)
    if xmax <= coeffs.x0:
        raise ConfigError(["config: grid.xmax (%g) must exceed model.x0 (%g)"
                           % (xmax, coeffs.x0)])

    return RunConfig(
        experiment=exp, coeffs=coeffs, xmax=xmax, n=get("grid.n"),
        spacing=get("grid.spacing"), ratio=get("grid.ratio"),
        eigen_v_values=get("eigen.v_values"), eigen_tol=get("eigen.tol"),
        steady_v_max=get("steady.v_max"), t_end=get("simulate.t_end"),
        v_init=get("simulate.v_init"), seed_scale=get("simulate.seed_scale"),
        record_every=get("simulate.record_every"),
        snapshot_times=tuple(get("simulate.snapshot_times")),
        fit_start=get("simulate.fit_start"), fit_end=get("simulate.fit_end"),
        threshold_ratio=get("simulate.threshold_ratio"),
        dt_max=get("simulate.dt_max"), sweep_axis=get("sweep.axis"),
        sweep_values=get("sweep.values"), sweep_t_end=get("sweep.t_end"),
        probe_time=get("sweep.probe_time"), sweep_v_eval=get("sweep.v_eval"),
        sweep_threshold_ratio=get("sweep.threshold_ratio"),
        sweep_record_every=get("sweep.record_every"),
        out_dir=get("output.dir"), timings=get("output.timings"),
        seed=get("seed"), threads=get("threads"), source_text=text)
