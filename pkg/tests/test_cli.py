import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from slowfast.cli import DEFAULTS, load_config, main

FAST = {"grid": {"n_points": 51}, "integrator": {"T": 1.0, "dt": 0.01, "snapshots": 3}}


def write(tmp_path, cfg, name="run.yaml"):
    path = tmp_path / name
    path.write_text(cfg if isinstance(cfg, str) else yaml.safe_dump(cfg))
    return str(path)


def merged(*parts):
    out = {}
    for part in parts:
        for k, v in part.items():
            out[k] = {**out.get(k, {}), **v} if isinstance(v, dict) else v
    return out


def read_csv(path):
    lines = open(path).read().splitlines()
    meta = [l for l in lines if l.startswith("#")]
    header = next(l for l in lines if not l.startswith("#"))
    data = np.loadtxt(path, delimiter=",", comments="#", skiprows=len(meta) + 1, ndmin=2)
    return meta, header.split(","), data


def test_simulate_row_count_and_header(tmp_path):
    out = tmp_path / "a.csv"
    assert main(["simulate", write(tmp_path, FAST), "-o", str(out)]) == 0
    meta, header, data = read_csv(out)
    assert header == ["t", "x", "i", "j", "eta"]
    assert data.shape == (3 * 51, 5)
    np.testing.assert_allclose(np.unique(data[:, 0]), [0.0, 0.5, 1.0])
    assert any(l.startswith("# config_sha256:") for l in meta)
    i, j, eta = data[:, 2], data[:, 3], data[:, 4]
    np.testing.assert_allclose(eta, j - i / (i + 0.5), atol=1e-15)


def test_simulate_is_byte_identical(tmp_path):
    cfg = write(tmp_path, merged(FAST, {"initial": {"i": {"kind": "random", "mean": 0.5, "amplitude": 0.2}}}))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["simulate", cfg, "-o", str(a)]) == 0
    assert main(["simulate", cfg, "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_seed_changes_random_data(tmp_path):
    base = merged(FAST, {"initial": {"i": {"kind": "random", "mean": 0.5, "amplitude": 0.2}}})
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["simulate", write(tmp_path, base, "1.yaml"), "-o", str(a)])
    main(["simulate", write(tmp_path, {**base, "seed": 5}, "2.yaml"), "-o", str(b)])
    assert a.read_bytes() != b.read_bytes()


def test_two_dimensional_csv(tmp_path):
    cfg = merged(FAST, {"grid": {"dim": 2, "n_points": 21}, "kernel": {"preset": "smooth_bump", "params": {"radius": 0.3}}})
    out = tmp_path / "a.csv"
    assert main(["simulate", write(tmp_path, cfg), "-o", str(out)]) == 0
    _, header, data = read_csv(out)
    assert header == ["t", "x", "y", "i", "j", "eta"] and data.shape == (3 * 441, 6)


def test_limit_constant_data_stay_constant(tmp_path):
    cfg = merged(FAST, {"initial": {"i": {"kind": "constant", "value": 0.3}}})
    out = tmp_path / "a.csv"
    assert main(["limit", write(tmp_path, cfg), "-o", str(out)]) == 0
    _, _, data = read_csv(out)
    for t in np.unique(data[:, 0]):
        col = data[data[:, 0] == t, 2]
        assert np.ptp(col) == 0.0
    np.testing.assert_allclose(data[:, 3], data[:, 2] / (data[:, 2] + 0.5), rtol=1e-15)
    assert np.all(data[:, 4] == 0.0)


def test_limit_zero_data(tmp_path):
    cfg = merged(FAST, {"initial": {"i": {"kind": "constant", "value": 0.0}}})
    out = tmp_path / "a.csv"
    assert main(["limit", write(tmp_path, cfg), "-o", str(out)]) == 0
    _, _, data = read_csv(out)
    assert np.all(data[:, 2:] == 0.0)


def test_limit_long_run_reaches_endemic_level(tmp_path):
    cfg = {"grid": {"n_points": 51}, "integrator": {"T": 200.0, "dt": 0.05, "snapshots": 1}}
    out = tmp_path / "a.csv"
    assert main(["limit", write(tmp_path, cfg), "-o", str(out)]) == 0
    _, _, data = read_csv(out)
    assert data.shape[0] == 51
    assert np.max(np.abs(data[:, 1 + 1] - 0.7)) <= 1e-4


def test_converge_default_study(tmp_path, capsys):
    cfg = write(tmp_path, {"output": {"report": str(tmp_path / "rep.json")}})
    assert main(["converge", cfg]) == 0
    rep = json.loads((tmp_path / "rep.json").read_text())
    assert 0.45 <= rep["study"]["fit"]["order"] <= 1.5
    assert all(rep["invariants"].values())
    assert rep["validation"]["verdicts"]["H_C"] and not rep["validation"]["verdicts"]["contraction"]
    assert len(rep["study"]["diagnostics"]["eta_plateaus"]) == 5
    assert "fitted order" in capsys.readouterr().out


def test_converge_report_is_byte_identical(tmp_path):
    cfg = write(tmp_path, {"integrator": {"T": 0.5}, "study": {"eps_list": [0.1, 0.05, 0.02, 0.01], "dt": 0.005}})
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["converge", cfg, "-o", str(a)])
    main(["converge", cfg, "-o", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_converge_asymmetric_kernel_fails(tmp_path):
    cfg = {
        "kernel": {"preset": "table", "params": {"table": [0, 0, 0, 50, 50, 0, 0]}},
        "integrator": {"T": 0.5},
        "study": {"eps_list": [0.1, 0.05, 0.02, 0.01], "dt": 0.005},
    }
    out = tmp_path / "r.json"
    assert main(["converge", write(tmp_path, cfg), "-o", str(out)]) == 3
    rep = json.loads(out.read_text())
    assert rep["invariants"]["kernel_valid"] is False
    assert rep["validation"]["kernel"]["symmetry"]["passed"] is False


def test_converge_decay_refusal_is_a_validation_error(tmp_path, capsys):
    cfg = {"study": {"kind": "decay"}, "integrator": {"T": 0.5}}
    assert main(["converge", write(tmp_path, cfg)]) == 1
    assert "contraction condition" in capsys.readouterr().err


def test_converge_decay_study(tmp_path):
    cfg = {
        "model": {"alpha_h": 0.1, "beta_h": 1.0, "alpha_v": 0.1, "beta_v": 1.0},
        "integrator": {"T": 20.0},
        "study": {"kind": "decay", "eps_list": [0.1, 0.01, 0.001, 0.0001], "dt": 0.01},
    }
    out = tmp_path / "r.json"
    assert main(["converge", write(tmp_path, cfg), "-o", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["invariants"]["decay_envelope"] and rep["study"]["diagnostics"]["decay_rate"] > 0


def test_validate_defaults(tmp_path, capsys):
    assert main(["validate", write(tmp_path, {})]) == 0
    out = capsys.readouterr().out
    assert "R0 = 8" in out and "i* = 0.7" in out
    for name in ("H_J", "H_fg", "H_m", "H_inf"):
        assert f"{name:6s} pass" in out
    assert "H_C    holds" in out


def test_validate_subcritical_has_no_endemic_root(tmp_path, capsys):
    assert main(["validate", write(tmp_path, {"model": {"beta_h": 2.0, "beta_v": 1.0}})]) == 0
    out = capsys.readouterr().out
    assert "H_C    does not hold" in out and "i* = none" in out


def test_validate_tent_kernel_warns(tmp_path, capsys):
    out = tmp_path / "r.json"
    cfg = {"kernel": {"preset": "tent", "params": {"radius": 0.2}}}
    assert main(["validate", write(tmp_path, cfg), "-o", str(out)]) == 0
    assert "warning: kernel is not C1" in capsys.readouterr().err
    rep = json.loads(out.read_text())
    assert rep["kernel"]["c1"] is False and rep["warnings"]


INVALID = [
    ({"grid": {"dim": 3}}, "grid.dim"),
    ({"grid": {"n_points": 2}}, "grid.n_points"),
    ({"grid": {"extent": -1.0}}, "grid.extent"),
    ({"grid": 5}, "grid"),
    ({"kernel": {"preset": "cauchy"}}, "kernel.preset"),
    ({"kernel": {"preset": "smooth_bump", "params": {}}}, "kernel.params.radius"),
    ({"kernel": {"preset": "tent", "params": {"radius": 0.005}}}, "kernel.params"),
    ({"kernel": {"preset": "smooth_bump", "params": {"radius": 0.6}}}, "kernel.params"),
    ({"kernel": {"preset": "gaussian_truncated", "params": {"sigma": 0.05, "truncation": 2}}}, "kernel.params.truncation"),
    ({"kernel": {"preset": "table", "params": {"table": [1, 1]}}}, "kernel.params.table"),
    ({"kernel": {"preset": "table", "params": {"table": "abc"}}}, "kernel.params.table"),
    ({"model": {"eps": 0}}, "model.eps"),
    ({"model": {"eps": 2}}, "model.eps"),
    ({"model": {"alpha_h": "abc"}}, "model.alpha_h"),
    ({"model": {"d2": -1}}, "model.d2"),
    ({"model": {"gamma": 1}}, "model.gamma"),
    ({"integrator": {"dt": 0}}, "integrator.dt"),
    ({"integrator": {"dt": 10.0}}, "integrator.dt"),
    ({"integrator": {"T": -1}}, "integrator.T"),
    ({"integrator": {"scheme": "rk4"}}, "integrator.scheme"),
    ({"integrator": {"limit_scheme": "imex"}}, "integrator.limit_scheme"),
    ({"integrator": {"snapshots": 0}}, "integrator.snapshots"),
    ({"integrator": {"snapshots": 2.5}}, "integrator.snapshots"),
    ({"integrator": {"strategy": "gpu"}}, "integrator.strategy"),
    ({"initial": {"i": {"kind": "gaussian"}}}, "initial.i.kind"),
    ({"initial": {"i": {"kind": "constant", "value": 1.5}}}, "initial.i"),
    ({"initial": {"i": {"kind": "on_manifold"}}}, "initial.i.kind"),
    ({"initial": {"j": {"kind": "constant", "value": 0.5, "slope": 1}}}, "initial.j.slope"),
    ({"initial": {"k": {"kind": "constant", "value": 0.5}}}, "initial.k"),
    ({"study": {"eps_list": [0.1, 0.01]}}, "study.eps_list"),
    ({"study": {"eps_list": 0.1}}, "study.eps_list"),
    ({"study": {"eps_list": [0.1, 0.2, 0.01, 0.001]}}, "study.eps_list"),
    ({"study": {"kind": "sweep"}}, "study.kind"),
    ({"study": {"rho": 0}}, "study.rho"),
    ({"study": {"dt": 100.0}}, "study.dt"),
    ({"study": {"limit_initial": {"kind": "constant", "value": -1}}}, "study.limit_initial"),
    ({"output": {"path": 3}}, "output.path"),
    ({"seed": "x"}, "seed"),
    ({"colour": "red"}, "colour"),
]


@pytest.mark.parametrize("cfg, where", INVALID, ids=[w for _, w in INVALID])
def test_invalid_configs_name_their_field(tmp_path, capsys, cfg, where):
    assert main(["simulate", write(tmp_path, cfg)]) == 1
    err = capsys.readouterr().err
    assert f"error: {where}:" in err


@pytest.mark.parametrize("text", ["[1, 2]", "grid: {dim: [", ""])
def test_malformed_files(tmp_path, capsys, text):
    path = write(tmp_path, text)
    code = main(["validate", path])
    if text == "":
        assert code == 0  # empty file means all defaults
    else:
        assert code == 1 and "error: config" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    assert main(["simulate", str(tmp_path / "nope.yaml")]) == 1


def test_defaults_are_not_mutated():
    before = json.dumps(DEFAULTS, sort_keys=True)
    load_config({"grid": {"n_points": 31}, "kernel": {"preset": "tent", "params": {"radius": 0.2}}})
    assert json.dumps(DEFAULTS, sort_keys=True) == before


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "slowfast", "validate", write(tmp_path, {})], capture_output=True, text=True
    )
    assert proc.returncode == 0 and "R0 = 8" in proc.stdout
