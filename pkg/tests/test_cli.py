"""Command-line driver: exit codes, artifacts, reproducibility."""
import json
import math

import numpy as np
import pytest

from flatconv import FlatKernel, SampledFunction
from flatconv.cli import ExperimentConfig, _json_safe, main

P15_INLINE = '{"model": "p_dirichlet", "p": 1.5, "dim": 1}'
QUAD_INLINE = '{"model": "quadratic", "dim": 1}'


def test_json_safe_strips_non_finite():
    src = {"a": math.nan, "b": [1.0, math.inf, {"c": -math.inf}],
           "d": "text", "e": 3, "f": None}
    out = _json_safe(src)
    assert out == {"a": None, "b": [1.0, None, {"c": None}],
                   "d": "text", "e": 3, "f": None}
    json.dumps(out)


def test_config_load_bundled_and_missing(tmp_path):
    cfg = ExperimentConfig.load("p15_1d")
    assert cfg.name == "p15_1d"
    assert cfg.shapes == ((401,),)
    assert cfg.diameter == 1.0
    with pytest.raises(FileNotFoundError):
        ExperimentConfig.load("no_such_config")
    with pytest.raises(ValueError, match="unknown data id"):
        ExperimentConfig.from_json_dict({
            "seed": 0, "hamiltonian": {"model": "quadratic", "dim": 1},
            "box": {"lo": [0.0], "hi": [1.0]}, "shape": [11],
            "boundary": "not_a_thing"})


def test_pipeline_runs_are_byte_identical(tmp_path, capsys):
    out1, out2 = tmp_path / "run1", tmp_path / "run2"
    assert main(["pipeline", "--config", "p15_1d", "--outdir", str(out1)]) == 0
    assert main(["pipeline", "--config", "p15_1d", "--outdir", str(out2)]) == 0
    for name in ("summary.json", "kernel.json", "solution_401.csv",
                 "jets_401.json"):
        b1 = (out1 / name).read_bytes()
        assert b1 == (out2 / name).read_bytes()
        assert b1  # non-empty
    summary = json.loads((out1 / "summary.json").read_text())
    assert summary["passed"] is True
    assert all(v for v in summary["checks"].values())
    out = capsys.readouterr().out
    assert "[PASS]" in out and "[FAIL]" not in out


def test_report_subcommand(tmp_path, capsys):
    out = tmp_path / "run"
    main(["pipeline", "--config", "p15_1d", "--outdir", str(out)])
    capsys.readouterr()
    assert main(["report", "--summary", str(out / "summary.json")]) == 0
    text = capsys.readouterr().out
    assert "p15_1d" in text
    assert "PASS" in text


def test_verify_exit_codes(tmp_path, capsys):
    ramp = SampledFunction.from_callable(lambda x: 0.2 + 0.5 * x,
                                         (0.0,), (1.0,), (101,))
    ramp_csv = tmp_path / "ramp.csv"
    ramp.to_csv(ramp_csv)
    assert main(["verify", "--input", str(ramp_csv),
                 "--hamiltonian", P15_INLINE]) == 0
    # x^2 is strictly subharmonic, so the quadratic model must reject it
    par = SampledFunction.from_callable(lambda x: x ** 2, (-1.0,), (1.0,), (201,))
    par_csv = tmp_path / "parabola.csv"
    par.to_csv(par_csv)
    rep_path = tmp_path / "verdict.json"
    assert main(["verify", "--input", str(par_csv), "--hamiltonian",
                 QUAD_INLINE, "--out", str(rep_path)]) == 1
    verdict = json.loads(rep_path.read_text())
    assert verdict["clean"] is False and verdict["n_fail"] > 0
    assert "[FAIL]" in capsys.readouterr().out


def test_pipeline_bad_config_exits_2(tmp_path, capsys):
    assert main(["pipeline", "--config", "no_such_config",
                 "--outdir", str(tmp_path)]) == 2
    assert "error:" in capsys.readouterr().err


def test_flatness_subcommand_writes_kernel(tmp_path, capsys):
    kpath = tmp_path / "k.json"
    rpath = tmp_path / "ident.json"
    code = main(["flatness", "--hamiltonian", P15_INLINE, "--diam", "2.0",
                 "--resolution", "8192", "--out", str(kpath),
                 "--report", str(rpath)])
    assert code == 0
    kernel = FlatKernel.load(kpath)
    assert kernel.flat
    ident = json.loads(rpath.read_text())
    assert ident["passed"] is True
    assert "[PASS] kernel identities" in capsys.readouterr().out


def test_supconv_subcommand_single_check(tmp_path, capsys):
    u = SampledFunction.from_callable(lambda x: np.sin(np.pi * x),
                                      (-1.0,), (1.0,), (201,))
    csv = tmp_path / "sine.csv"
    u.to_csv(csv)
    out = tmp_path / "checks.json"
    code = main(["supconv", "--input", str(csv), "--kernel", "classical",
                 "--eps", "0.1", "--check", "semiconvexity",
                 "--out", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["kernel_flat"] is False
    assert payload["checks"][0]["name"] == "semiconvexity"
    # flatness needs a flat kernel: the mismatch surfaces as a usage error
    assert main(["supconv", "--input", str(csv), "--kernel", "classical",
                 "--eps", "0.1", "--check", "flatness"]) == 2
    assert "error:" in capsys.readouterr().err


def test_minimize_subcommand_with_log_and_report(tmp_path, capsys):
    cfg = {
        "name": "tiny_ramp",
        "seed": 7,
        "hamiltonian": {"model": "p_dirichlet", "p": 1.5, "dim": 1},
        "box": {"lo": [0.0], "hi": [1.0]},
        "shape": [41],
        "boundary": "ramp",
        "options": {"grad_tol": 1e-9},
    }
    cfg_path = tmp_path / "tiny.json"
    cfg_path.write_text(json.dumps(cfg))
    sol = tmp_path / "sol.csv"
    log = tmp_path / "iters.csv"
    rep = tmp_path / "rep.json"
    code = main(["minimize", "--problem", str(cfg_path), "--out", str(sol),
                 "--log", str(log), "--report", str(rep)])
    assert code == 0
    u = SampledFunction.from_csv(sol)
    assert np.max(np.abs(u.values - np.linspace(0.0, 1.0, 41))) < 1e-12
    assert log.read_text().startswith("stage_delta,iteration,energy,grad_max,step")
    report = json.loads(rep.read_text())
    assert report["converged"] is True
    assert report["config_name"] == "tiny_ramp"
    assert "[PASS] minimize converged" in capsys.readouterr().out
