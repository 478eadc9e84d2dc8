import csv
import json
import logging
from pathlib import Path

import pytest

from lognls_lab import cli
from lognls_lab import config as cfg
from lognls_lab.spectral import SolverError, SplitStepSolver

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write(tmp_path, doc, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def run(command, config, out, *extra):
    return cli.main([command, "--config", str(config), "--out", str(out), *extra])


@pytest.fixture
def superpose_doc():
    return {"lambda": 1.0, "grid": {"L": 16.0, "n": 256}, "dt": 0.005, "t_end": 0.5,
            "packets": [{"shape_re": [[1.0]], "center": [-4.0]}, {"shape_re": [[1.0]], "center": [4.0]}],
            "snapshots": 0.25, "error_floor": 1e-4}


def test_period_command_is_deterministic(tmp_path):
    assert run("period", CONFIGS / "period.json", tmp_path / "a") == 0
    assert run("period", CONFIGS / "period.json", tmp_path / "b") == 0
    a = (tmp_path / "a" / "period_table.csv").read_bytes()
    assert a == (tmp_path / "b" / "period_table.csv").read_bytes()
    rows = list(csv.reader(a.decode().splitlines()))
    assert len(rows) == 5 and rows[0][:4] == ["E", "T_quadrature", "T_oracle", "T_asymptotic"]
    summary = json.loads((tmp_path / "a" / "period_summary.json").read_text())
    assert summary["reference_small_oscillation"] == pytest.approx(4.4428829, abs=1e-7)
    assert len(summary["alphas"]) == 2


def test_period_invalid_entries_listed_and_run_continues(tmp_path):
    doc = {"energies": [2.0, 0.5, "x", 3.0, 1.0], "oracle": False}
    assert run("period", write(tmp_path, doc), tmp_path / "o") == cli.EXIT_VALIDATION
    summary = json.loads((tmp_path / "o" / "period_summary.json").read_text())
    assert len(summary["errors"]) == 3
    assert any(e.startswith("energies[1]") for e in summary["errors"])
    assert [r["E"] for r in summary["rows"]] == [2.0, 3.0]


def test_breather_command(tmp_path):
    assert run("breather", CONFIGS / "breather.json", tmp_path) == 0
    s = json.loads((tmp_path / "breather_summary.json").read_text())
    assert s["energy_ok"] and s["confined"]
    assert s["period_physical"] == pytest.approx(2.98488613, rel=1e-8)
    assert (tmp_path / "trajectory.csv").exists()


def test_evolve_command(tmp_path):
    assert run("evolve", CONFIGS / "evolve.json", tmp_path) == 0
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["snapshot_times"] == [0.0, 0.5, 1.0]
    assert m["mass_relative_drift"] < 1e-12
    assert all(s["error_vs_exact"] < 1e-5 for s in m["snapshots"])
    assert len(list(tmp_path.glob("snapshot_*.csv"))) == 3


def test_superpose_single_packet_config(tmp_path):
    assert run("superpose", CONFIGS / "superpose_single.json", tmp_path) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["admissible"] and rep["dominated_by_c_d"]
    rows = list(csv.DictReader(open(tmp_path / "series.csv")))
    assert max(float(r["measured_error"]) for r in rows) < 1e-4


def test_superpose_two_packets(tmp_path, superpose_doc):
    assert run("superpose", write(tmp_path, superpose_doc), tmp_path / "o") == 0
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["separation"]["epsilon"] == pytest.approx(0.125)


def test_superpose_inadmissible_is_property_violation(tmp_path, superpose_doc):
    superpose_doc["packets"][1]["center"] = [-3.0]
    assert run("superpose", write(tmp_path, superpose_doc), tmp_path / "o") == cli.EXIT_PROPERTY


def test_superpose_solver_failure(tmp_path, superpose_doc, monkeypatch):
    def boom(self, u, dt=None):
        raise SolverError("non-finite values after the nonlinear phase substep")

    monkeypatch.setattr(SplitStepSolver, "step", boom)
    assert run("superpose", write(tmp_path, superpose_doc), tmp_path / "o") == cli.EXIT_NUMERICAL
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["completed"] is False and "nonlinear phase" in rep["failure"]


def test_malformed_packet_names_the_entry(tmp_path, superpose_doc, caplog):
    superpose_doc["dimension"] = 2
    superpose_doc["grid"]["n"] = 64
    superpose_doc["packets"] = [{"shape_re": [[1.0, 0.3], [0.2, 1.0]]}]
    with caplog.at_level(logging.ERROR, logger="lognls_lab"):
        assert run("superpose", write(tmp_path, superpose_doc), tmp_path / "o") == cli.EXIT_VALIDATION
    assert "packets[0].shape_re[0][1]" in caplog.text


def test_lemmas_seeded(tmp_path):
    doc = {"samples": 5000, "tail_checks": 30}
    c = write(tmp_path, doc)
    assert run("lemmas", c, tmp_path / "a", "--seed", "3") == 0
    assert run("lemmas", c, tmp_path / "b", "--seed", "3") == 0
    for name in ("lemmas_summary.json", "tail_checks.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    s = json.loads((tmp_path / "a" / "lemmas_summary.json").read_text())
    assert all(v >= -1e-12 for v in s["min_gaps"].values())
    assert not (tmp_path / "a" / "counterexamples.json").exists()


def test_environment_defaults(tmp_path, monkeypatch):
    c = write(tmp_path, {"samples": 1000, "tail_checks": 2})
    monkeypatch.setenv("LOGNLS_CONFIG", c)
    monkeypatch.setenv("LOGNLS_OUT", str(tmp_path / "env"))
    monkeypatch.setenv("LOGNLS_SEED", "11")
    assert cli.main(["lemmas"]) == 0
    assert json.loads((tmp_path / "env" / "lemmas_summary.json").read_text())["seed"] == 11


@pytest.mark.parametrize("content", [None, "{not json"])
def test_missing_or_broken_config(tmp_path, content):
    path = tmp_path / "c.json"
    if content is not None:
        path.write_text(content)
    assert run("period", path, tmp_path / "o") == cli.EXIT_VALIDATION


def test_no_config_and_bad_threads(tmp_path, monkeypatch):
    monkeypatch.delenv("LOGNLS_CONFIG", raising=False)
    assert cli.main(["period", "--out", str(tmp_path)]) == cli.EXIT_VALIDATION
    assert run("period", CONFIGS / "period.json", tmp_path, "--threads", "0") == cli.EXIT_VALIDATION


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert run("period", CONFIGS / "period.json", blocker / "sub") == cli.EXIT_VALIDATION


@pytest.mark.parametrize("patch,path", [
    ({"grid": {"L": 16.0, "n": 100}}, "grid"),
    ({"dt": 0.5}, "dt"),
    ({"lambda": -1.0}, "lambda"),
    ({"t_end": -1.0}, "t_end"),
    ({"snapshots": [0.1, 9.0]}, "snapshots"),
    ({"dimension": 3}, "dimension"),
])
def test_superpose_config_validation(superpose_doc, patch, path):
    superpose_doc.update(patch)
    with pytest.raises(cfg.ConfigError, match=rf"^{path}"):
        cfg.parse_superpose(superpose_doc)


def test_packet_validation_paths(superpose_doc):
    superpose_doc["packets"][1]["velocity"] = [0.5]
    with pytest.raises(cfg.ConfigError, match=r"packets\[1\]\.velocity"):
        cfg.parse_superpose(superpose_doc)
    superpose_doc["packets"][1] = {"shape_re": [[1.0]], "center": [1.0, 2.0]}
    with pytest.raises(cfg.ConfigError, match=r"packets\[1\]\.center"):
        cfg.parse_superpose(superpose_doc)
    superpose_doc["packets"][1] = {"shape_re": [[-1.0]]}
    with pytest.raises(cfg.ConfigError, match=r"packets\[1\].*positive definite"):
        cfg.parse_superpose(superpose_doc)


def test_breather_param_config():
    p = cfg.parse_breather({"alpha_r": 35.0, "lambda": 0.5})["param"]
    assert (p.alpha_r, p.alpha_i, p.lam) == (35.0, 0.0, 0.5)
    with pytest.raises(cfg.ConfigError, match="gamma"):
        cfg.parse_breather({"gamma": [-1.0, 0.0], "lambda": 1.0})
    with pytest.raises(cfg.ConfigError, match="lambda"):
        cfg.parse_breather({"alpha_r": 1.0})


def test_all_committed_configs_parse():
    parsers = {"period": cfg.parse_period, "breather": cfg.parse_breather, "evolve": cfg.parse_evolve,
               "superpose": cfg.parse_superpose, "lemmas": cfg.parse_lemmas}
    for path in CONFIGS.glob("*.json"):
        parsers[path.stem.split("_")[0]](cfg.load_json(path))
