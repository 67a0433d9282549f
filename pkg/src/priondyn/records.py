"""Experiment records and deterministic serialization.

Output bytes must be reproducible run-to-run: JSON is emitted with sorted
keys and every float printed as %.17g (enough digits to round-trip a
double exactly), CSV with the same float format.  Wall-clock timings are
kept out of serialized output unless explicitly requested, since they
would break byte-identity.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .grid import SizeGrid

__all__ = [
    "PACKAGE_VERSION",
    "ExperimentRecord",
    "grid_hash",
    "shape_echo",
    "config_echo",
    "canonical_json",
    "write_csv",
]

PACKAGE_VERSION = "0.1.0"


def grid_hash(grid: SizeGrid) -> str:
    """Stable fingerprint of a grid's geometry."""
    hsh = hashlib.sha256()
    hsh.update(grid.centers.tobytes())
    hsh.update(grid.widths.tobytes())
    hsh.update(grid.spacing.encode())
    return hsh.hexdigest()[:16]


def shape_echo(shape) -> dict:
    """Rate shape as a plain dict for config echoes."""
    name = type(shape).__name__
    snake = "".join("_" + c.lower() if c.isupper() and i else c.lower()
                    for i, c in enumerate(name))
    out = {"shape": snake}
    out.update(dataclasses.asdict(shape))
    return out


def config_echo(cfg) -> dict:
    """Flatten a run configuration into a serializable dict.

    Duck-typed on the RunConfig attributes so this module stays free of a
    config import; every value lands in the canonical form used for
    output hashing.
    """
    c = cfg.coeffs
    echo = {
        "experiment": cfg.experiment,
        "model": {
            "production": c.production, "clearance": c.clearance,
            "x0": c.x0, "kernel": c.kernel,
            "conversion": shape_echo(c.conversion),
            "fragmentation": shape_echo(c.fragmentation),
            "decay": shape_echo(c.decay),
        },
        "grid": {"xmax": cfg.xmax, "n": cfg.n, "spacing": cfg.spacing},
        "seed": cfg.seed,
    }
    if cfg.spacing == "geometric":
        echo["grid"]["ratio"] = cfg.ratio
    scoped = {
        "eigen": (("v_values", "eigen_v_values"), ("tol", "eigen_tol")),
        "steady": (("v_max", "steady_v_max"),),
        "simulate": (("t_end", "t_end"), ("v_init", "v_init"),
                     ("seed_scale", "seed_scale"),
                     ("record_every", "record_every"),
                     ("snapshot_times", "snapshot_times"),
                     ("fit_start", "fit_start"), ("fit_end", "fit_end"),
                     ("threshold_ratio", "threshold_ratio"),
                     ("dt_max", "dt_max")),
        "sweep": (("axis", "sweep_axis"), ("values", "sweep_values"),
                  ("t_end", "sweep_t_end"), ("probe_time", "probe_time"),
                  ("v_eval", "sweep_v_eval"),
                  ("threshold_ratio", "sweep_threshold_ratio"),
                  ("record_every", "sweep_record_every")),
    }
    section = {}
    for name, key in scoped.get(cfg.experiment, ()):
        val = getattr(cfg, key, None)
        if val is not None:
            section[name] = val
    if section:
        echo[cfg.experiment] = section
    return echo


def _fmt_float(x: float) -> str:
    if x != x or x in (float("inf"), float("-inf")):
        return "null"
    return "%.17g" % x


def _canon(obj, parts: list, drop_keys=()):
    if obj is None:
        parts.append("null")
    elif obj is True:
        parts.append("true")
    elif obj is False:
        parts.append("false")
    elif isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        parts.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        parts.append(_fmt_float(float(obj)))
    elif isinstance(obj, str):
        parts.append(json.dumps(obj))
    elif isinstance(obj, np.ndarray):
        _canon(obj.tolist(), parts, drop_keys)
    elif isinstance(obj, (list, tuple)):
        parts.append("[")
        for i, item in enumerate(obj):
            if i:
                parts.append(",")
            _canon(item, parts, drop_keys)
        parts.append("]")
    elif isinstance(obj, dict):
        parts.append("{")
        first = True
        for key in sorted(obj):
            if key in drop_keys:
                continue
            if not first:
                parts.append(",")
            first = False
            parts.append(json.dumps(str(key)))
            parts.append(":")
            _canon(obj[key], parts, drop_keys)
        parts.append("}")
    else:
        raise TypeError("cannot serialize %r" % type(obj).__name__)


def canonical_json(obj, drop_keys=()) -> str:
    """Deterministic JSON text: sorted keys, %.17g floats, no whitespace."""
    parts: list = []
    _canon(obj, parts, drop_keys=tuple(drop_keys))
    return "".join(parts)


def write_csv(path, header, columns) -> None:
    """Columns of equal length to CSV with %.17g floats, '.' decimal."""
    columns = [np.asarray(c) for c in columns]
    n = len(columns[0])
    if any(len(c) != n for c in columns):
        raise ValueError("columns have unequal lengths")
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(n):
            cells = []
            for c in columns:
                val = c[i]
                if isinstance(val, (float, np.floating)):
                    cells.append(_fmt_float(float(val)))
                else:
                    cells.append(str(val))
            fh.write(",".join(cells) + "\n")


@dataclass
class ExperimentRecord:
    """One experiment's inputs, outputs and health indicators.

    diagnostics may carry a "timings" entry; it is dropped at
    serialization unless include_timings is set, keeping output bytes
    deterministic.
    """

    experiment: str
    config_echo: dict
    results: dict
    diagnostics: dict = dc_field(default_factory=dict)
    provenance: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if not self.provenance:
            self.provenance = {"version": PACKAGE_VERSION}

    def to_json(self, include_timings: bool = False) -> str:
        payload = {
            "experiment": self.experiment,
            "config": self.config_echo,
            "results": self.results,
            "diagnostics": self.diagnostics,
            "provenance": self.provenance,
        }
        drop = () if include_timings else ("timings",)
        return canonical_json(payload, drop_keys=drop)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentRecord":
        data = json.loads(text)
        return cls(experiment=data["experiment"], config_echo=data["config"],
                   results=data["results"], diagnostics=data["diagnostics"],
                   provenance=data["provenance"])
