from __future__ import annotations

import csv
import json
import math

import pytest

from coalesce import cli, spectra
from coalesce.cli import canonical_configs, fmt, run
from coalesce.config import JobConfig, load_schema, validate
from coalesce.numkit import EigenSolverError


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


RING12 = {"model": {"family": "ring_with_hop", "N_half": 6, "l0": 1, "r": 1, "kappa": 0.5}}
SSH = {"model": {"family": "ssh_chain", "N_cells": 20, "delta": 0.1, "kappa": 0.5}}
SMALL_CYL = {
    "model": {"family": "ssh_cylinder", "M_rows": 8, "N_cells": 10, "delta": 0.1, "J_inter": 1.0, "kappa": 0.5},
    "job": {
        "kind": "evolve",
        "times": [0.0, 1.0, 2.0, 5.0],
        "snapshot_times": [0.0, 5.0],
        "initial_state": {"kind": "stripe", "rows": "even", "row_phase": "staggered"},
        "target": {"kind": "cylinder_L_o"},
    },
}


# -- validation --------------------------------------------------------------------


def test_schema_file_is_valid_json_schema():
    from jsonschema import Draft202012Validator

    Draft202012Validator.check_schema(load_schema())


def test_delta_out_of_range():
    res = validate({"model": {"family": "ssh_chain", "N_cells": 4, "delta": 1.5}, "job": {"kind": "spectrum"}})
    assert [(i.path, i.message) for i in res] == [("$.model.delta", "must be in (0,1)")]


def test_odd_rows():
    res = validate({"model": {"family": "ssh_cylinder", "M_rows": 7, "N_cells": 4, "delta": 0.1}}, kind="spectrum")
    assert [(i.path, i.message) for i in res] == [("$.model.M_rows", "must be even")]


def test_every_violation_reported():
    doc = {"model": {"family": "ssh_cylinder", "M_rows": 7, "N_cells": 0, "delta": 1.5, "colour": "red"},
           "job": {"kind": "spectrum", "tol_cluster": -1}}
    paths = {i.path for i in validate(doc)}
    assert paths == {"$.model.M_rows", "$.model.N_cells", "$.model.delta", "$.model.colour", "$.job.tol_cluster"}


def test_unknown_job_key():
    res = validate({**RING12, "job": {"kind": "spectrum", "outfile": "x"}})
    assert [(i.path, i.message) for i in res] == [("$.job.outfile", "unknown key")]


def test_fig4_defaults_echoed():
    doc = canonical_configs()["fig4.json"]
    cfg = validate(json.dumps(doc))
    assert isinstance(cfg, JobConfig)
    job = cfg.to_dict()["job"]
    assert job["method"] == "FIXED_STEP_RK4"
    assert job["dt"] is None
    assert job["renormalize_internally"] is False
    assert cfg.to_dict()["model"]["bond_scale"] == 1.0


def test_bad_json_text():
    res = validate("{not json")
    assert res[0].path == "$"


def test_kind_mismatch():
    res = validate({**RING12, "job": {"kind": "evolve"}}, kind="spectrum")
    assert res[0].path == "$.job.kind"


def test_selector_family_check():
    doc = {**RING12, "job": {"kind": "evolve", "times": [1.0], "initial_state": {"kind": "ssh_L"}}}
    assert validate(doc)[0].path == "$.job.initial_state.kind"


def test_model_build_errors_surface_as_issues():
    doc = {"model": {"family": "ring_with_hop", "N_half": 6, "l0": 13, "r": 1}, "job": {"kind": "spectrum"}}
    assert validate(doc)[0].path == "$.model"


def test_infinite_series_only_analytic():
    doc = {"model": {"family": "ladder", "N_rungs": 8, "J": 1.0, "n_max": "INFINITE"}}
    assert validate(doc, kind="spectrum")[0].path == "$.model.n_max"
    assert isinstance(validate(doc, kind="ladder-analytic"), JobConfig)


# -- jobs -------------------------------------------------------------------------


def test_spectrum_ring12(tmp_path):
    cfg = write(tmp_path, "ring12.json", RING12)
    out = tmp_path / "spec.csv"
    assert run(["spectrum", "--config", str(cfg), "--out", str(out)]) == 0
    rows = read_csv(out)
    eps = [r for r in rows if r["class"] == "EP"]
    assert len(eps) == 1
    assert abs(float(eps[0]["re_lambda"])) < 1e-6


def test_theorem_check_ssh(tmp_path, capsys):
    cfg = write(tmp_path, "ssh.json", SSH)
    assert run(["theorem-check", "--config", str(cfg)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["report"]["verdict"] == "HOLDS_ASYMPTOTICALLY"
    assert doc["tool"].startswith("coalesce ")
    assert doc["config"]["model"]["family"] == "ssh_chain"


def test_evolve_outputs(tmp_path):
    cfg = write(tmp_path, "cyl.json", SMALL_CYL)
    assert run(["evolve", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 0
    fid = read_csv(tmp_path / "fidelity.csv")
    assert [float(r["t"]) for r in fid] == [0.0, 1.0, 2.0, 5.0]
    assert float(fid[0]["fidelity"]) == 0.0
    snaps = read_csv(tmp_path / "snapshots.csv")
    assert len(snaps) == 2 * 8 * 20
    assert list(snaps[0]) == ["t", "row", "col", "probability"]
    total = sum(float(r["probability"]) for r in snaps if r["t"] == "5.0")
    assert total == pytest.approx(1.0)
    summary = json.loads((tmp_path / "summary.json").read_text())
    rho = -0.9 / 1.1
    want = math.sqrt((1 - rho**2) / (1 - rho**20))
    assert summary["summary"]["initial_overlaps"]["L_e_staggered"] == pytest.approx(want, rel=1e-12)


def test_ep_scan(tmp_path):
    doc = {**RING12, "job": {"kind": "ep-scan", "kappa_values": [0.0, 0.5, 2.0], "track": [0.0]}}
    cfg = write(tmp_path, "scan.json", doc)
    out = tmp_path / "scan.csv"
    assert run(["ep-scan", "--config", str(cfg), "--out", str(out)]) == 0
    assert [r["class"] for r in read_csv(out)] == ["DP", "EP", "EP"]


def test_ladder_analytic(tmp_path):
    doc = {"model": {"family": "ladder", "N_rungs": 16, "J": 4 / math.pi, "n_max": "INFINITE"},
           "job": {"kind": "ladder-analytic", "k_points": 20, "json": str(tmp_path / "gap.json")}}
    cfg = write(tmp_path, "ladder.json", doc)
    out = tmp_path / "ladder.csv"
    assert run(["ladder-analytic", "--config", str(cfg), "--out", str(out)]) == 0
    assert len(read_csv(out)) == 40
    assert json.loads((tmp_path / "gap.json").read_text())["min_gap"] == 0.0


def test_overrides(tmp_path):
    cfg = write(tmp_path, "ring12.json", RING12)
    out = tmp_path / "spec.csv"
    assert run(["spectrum", "--config", str(cfg), "--out", str(out), "--set", "model.kappa=0"]) == 0
    assert not [r for r in read_csv(out) if r["class"] == "EP"]


def test_make_figures_configs_validate(tmp_path):
    assert run(["make-figures", "--out-dir", str(tmp_path)]) == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["fig4.json", "ladder_gap.json", "ring_scan.json", "ssh_theorem.json"]
    for p in tmp_path.iterdir():
        assert isinstance(validate(p.read_text()), JobConfig), p.name


# -- exit codes and atomicity ----------------------------------------------------------


def test_validation_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, "bad.json", {"model": {"family": "ssh_chain", "N_cells": 4, "delta": 1.5}})
    assert run(["spectrum", "--config", str(cfg)]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "config"
    assert err["issues"][0]["path"] == "$.model.delta"


def test_validate_subcommand(tmp_path, capsys):
    cfg = write(tmp_path, "ring12.json", RING12)
    assert run(["validate", "--config", str(cfg), "--kind", "spectrum"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["config"]["job"]["tol_cluster"] == 1e-6


def test_missing_config_file(tmp_path):
    assert run(["spectrum", "--config", str(tmp_path / "nope.json")]) == 2


def test_unknown_subcommand():
    assert run(["plot"]) == 2


def test_numerical_failure_exit_code(tmp_path, capsys, monkeypatch):
    def boom(A):
        raise EigenSolverError(1.0, 99, A.shape[0])

    monkeypatch.setattr(spectra, "eig_full", boom)
    cfg = write(tmp_path, "ring12.json", RING12)
    out = tmp_path / "spec.csv"
    assert run(["spectrum", "--config", str(cfg), "--out", str(out)]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "numerical" and err["type"] == "EigenSolverError"
    assert not out.exists()


def test_no_partial_outputs(tmp_path):
    (tmp_path / "blocker").write_text("a file, not a directory")
    doc = json.loads(json.dumps(SMALL_CYL))
    doc["job"]["snapshots_csv"] = str(tmp_path / "blocker" / "snaps.csv")
    doc["job"]["fidelity_csv"] = str(tmp_path / "fid.csv")
    doc["job"]["summary_json"] = str(tmp_path / "summary.json")
    cfg = write(tmp_path, "cyl.json", doc)
    assert run(["evolve", "--config", str(cfg)]) == 1
    assert sorted(p.name for p in tmp_path.iterdir()) == ["blocker", "cyl.json"]


def test_byte_identical_reruns(tmp_path):
    cfg = write(tmp_path, "cyl.json", SMALL_CYL)
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(["evolve", "--config", str(cfg), "--out-dir", str(d)]) == 0
    for name in ("fidelity.csv", "snapshots.csv", "summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


# -- formatting ------------------------------------------------------------------------


def test_float_format_round_trips():
    for x in (0.1, 1 / 3, math.pi, 1e-300, -2.5e17, 5e-324):
        s = fmt(x)
        assert float(s) == x
        digits = s.lower().split("e")[0].replace("-", "").replace(".", "").lstrip("0")
        assert len(digits) <= 17
    assert fmt(3) == "3" and fmt(None) == "" and fmt("EP") == "EP"


def test_csv_header_always_present():
    assert cli.csv_text(("a", "b"), []) == "a,b\n"
