"""Command-line harness: files out, exit codes, reproducible bytes."""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from priondyn.cli import main

FAST_EIGEN = "\n".join([
    "experiment = eigen",
    "eigen.v_values = 0, 100, 600",
    "grid.xmax = 30.0",
    "grid.n = 200",
    "",
])

FAST_STEADY = "\n".join([
    "experiment = steady",
    "grid.xmax = 30.0",
    "grid.n = 200",
    "",
])

FAST_SIMULATE = "\n".join([
    "experiment = simulate",
    "simulate.t_end = 6.0",
    "simulate.seed_scale = 0.001",
    "simulate.snapshot_times = 3.0",
    "simulate.fit_start = 2.0",
    "simulate.fit_end = 5.0",
    "simulate.record_every = 4",
    "grid.xmax = 60.0",
    "grid.n = 150",
    "",
])

FAST_SWEEP = "\n".join([
    "experiment = sweep",
    "sweep.axis = tightness",
    "sweep.values = 0.05, 0.2, 0.8",
    "sweep.v_eval = 600.0",
    "model.conversion.shape = scaled_bell",
    "model.conversion.base = 0.001",
    "model.conversion.tightness = 0.1",
    "model.conversion.center = 8.0",
    "grid.xmax = 60.0",
    "grid.n = 150",
    "",
])


def _run(tmp_path, name, body, *extra):
    cfg = tmp_path / (name + ".cfg")
    cfg.write_text(body)
    out = tmp_path / (name + "-out")
    code = main([name, "--config", str(cfg), "--out", str(out), *extra])
    return code, out


# --- one pass per subcommand -----------------------------------------------

def test_eigen_outputs(tmp_path):
    code, out = _run(tmp_path, "eigen", FAST_EIGEN)
    assert code == 0
    files = {p.name for p in out.iterdir()}
    tag = next(n for n in files if n.startswith("eigen-") and n.endswith(".json"))
    payload = json.loads((out / tag).read_text())
    assert payload["results"]["v_values"] == [0.0, 100.0, 600.0]
    assert payload["results"]["decreasing"] is True
    assert payload["results"]["sign_at_largest"] == -1
    # one vector file per non-degenerate level
    vecs = [n for n in files if "-v" in n and n.endswith(".csv")]
    assert len(vecs) == 2


def test_steady_outputs(tmp_path):
    code, out = _run(tmp_path, "steady", FAST_STEADY)
    assert code == 0
    js = next(p for p in out.iterdir() if p.suffix == ".json")
    payload = json.loads(js.read_text())
    assert payload["results"]["exists"] is True
    assert payload["results"]["v_inf"] == pytest.approx(83.33, rel=1e-2)
    assert payload["results"]["n_modes"] == 1
    profiles = [p for p in out.iterdir() if p.name.endswith("profile.csv")]
    assert len(profiles) == 1


def test_simulate_outputs(tmp_path):
    code, out = _run(tmp_path, "simulate", FAST_SIMULATE)
    assert code == 0
    names = sorted(p.name for p in out.iterdir())
    assert any(n.endswith("-trajectory.csv") for n in names)
    assert any("-snap-" in n for n in names)
    js = next(n for n in names if n.endswith(".json") and "-snap" not in n)
    payload = json.loads((out / js).read_text())
    assert payload["results"]["t_end"] == 6.0
    assert payload["results"]["v_final"] > 0.0
    header = (out / next(n for n in names if n.endswith("-trajectory.csv"))
              ).read_text().splitlines()[0]
    assert header == "t,v,polymer_count,polymer_mass,conservation_residual"


def test_sweep_outputs(tmp_path):
    code, out = _run(tmp_path, "sweep", FAST_SWEEP)
    assert code == 0
    names = sorted(p.name for p in out.iterdir())
    items = [n for n in names if "-item-" in n]
    assert len(items) == 3
    summary = json.loads((out / next(
        n for n in names if n.endswith(".json") and "-item-" not in n)).read_text())
    assert summary["results"]["axis"] == "tightness"
    assert summary["results"]["n_failed"] == 0
    assert "argmax_value" in summary["results"]


def test_validate_passes(tmp_path):
    out = tmp_path / "val"
    code = main(["validate", "--out", str(out)])
    assert code == 0
    payload = json.loads(next(out.glob("validate-*.json")).read_text())
    checks = {c["name"]: c["passed"] for c in payload["results"]["checks"]}
    assert checks["kernel-moment-laws"]
    assert checks["adjoint-duality"]
    assert checks["eigen-closed-form"]
    assert checks["conservation-books"]
    assert all(checks.values())


def test_validate_dump_operator(tmp_path):
    out = tmp_path / "vald"
    code = main(["validate", "--out", str(out), "--dump-operator"])
    assert code == 0
    dumped = list(out.glob("operator-*.csv"))
    assert len(dumped) == 1
    assert dumped[0].stat().st_size > 0


# --- failure paths ----------------------------------------------------------

def test_config_error_exits_2_with_error_file(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("experiment = eigen\nbogus = 1\n")
    out = tmp_path / "bad-out"
    code = main(["eigen", "--config", str(cfg), "--out", str(out)])
    assert code == 2
    err = json.loads((out / "error-eigen.json").read_text())
    assert err["error_type"] == "ConfigError"
    assert any("bogus" in e for e in err["errors"])


def test_success_clears_stale_error_file(tmp_path):
    # a failed attempt leaves error-<cmd>.json; a later good run into the
    # same directory must not leave it lying around as a false alarm
    bad = tmp_path / "bad.cfg"
    bad.write_text("experiment = eigen\nbogus = 1\n")
    out = tmp_path / "shared-out"
    assert main(["eigen", "--config", str(bad), "--out", str(out)]) == 2
    assert (out / "error-eigen.json").exists()
    good = tmp_path / "good.cfg"
    good.write_text(FAST_EIGEN)
    assert main(["eigen", "--config", str(good), "--out", str(out)]) == 0
    assert not (out / "error-eigen.json").exists()


def test_experiment_subcommand_mismatch(tmp_path):
    cfg = tmp_path / "mix.cfg"
    cfg.write_text(FAST_STEADY)
    out = tmp_path / "mix-out"
    code = main(["eigen", "--config", str(cfg), "--out", str(out)])
    assert code == 2
    err = json.loads((out / "error-eigen.json").read_text())
    assert "does not match" in err["errors"][0]


def test_missing_config_is_a_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["eigen", "--out", str(tmp_path / "x")])
    assert exc.value.code == 2


# --- determinism -----------------------------------------------------------

def _tree_bytes(root: Path) -> dict:
    return {p.name: p.read_bytes() for p in sorted(root.iterdir())}


def test_byte_identical_reruns(tmp_path):
    _, out1 = _run(tmp_path, "simulate", FAST_SIMULATE)
    cfg = tmp_path / "simulate.cfg"
    out2 = tmp_path / "rerun-out"
    main(["simulate", "--config", str(cfg), "--out", str(out2)])
    assert _tree_bytes(out1) == _tree_bytes(out2)


def test_sweep_bytes_independent_of_threads(tmp_path):
    cfg = tmp_path / "sw.cfg"
    cfg.write_text(FAST_SWEEP)
    out1 = tmp_path / "sw1"
    out2 = tmp_path / "sw2"
    assert main(["sweep", "--config", str(cfg), "--out", str(out1)]) == 0
    assert main(["sweep", "--config", str(cfg), "--out", str(out2),
                 "--threads", "3"]) == 0
    assert _tree_bytes(out1) == _tree_bytes(out2)


def test_console_script_runs():
    import shutil
    exe = shutil.which("priondyn")
    cmd = [exe, "--help"] if exe else [sys.executable, "-m", "priondyn.cli",
                                       "--help"]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    # argparse prints usage and exits 0 on --help
    assert proc.returncode == 0
    assert "eigen" in proc.stdout and "validate" in proc.stdout
