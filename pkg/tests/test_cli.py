import csv
import json

import pytest

from mehlerlab import cli
from mehlerlab.mehler import QuadratureError


def run(tmp_path, *args):
    return cli.main([*args, "--out", str(tmp_path), "--no-timestamp"])


def read_csv(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def test_check_hsigma_example(tmp_path, capsys):
    code = run(tmp_path, "check-hsigma", "--set", "noise.gamma1=-0.2", "--set", "noise.gamma2=-1.5")
    assert code == 0
    rep = json.loads((tmp_path / "hsigma.json").read_text())
    assert rep["result"]["feasible"] is True
    w = rep["result"]["witness"]
    assert set(w) == {"a", "p"}
    assert "witness" in capsys.readouterr().out


def test_invalid_alpha_exit_one(tmp_path, capsys):
    code = run(tmp_path, "check-hsigma", "--set", "noise.alpha=2.5")
    assert code == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "validation" and err["key"].endswith("alpha")
    assert json.loads((tmp_path / "error.json").read_text()) == err


def test_malformed_yaml(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("model: [unclosed\n")
    assert run(tmp_path, "spectrum", "--config", str(bad)) == 1
    assert json.loads(capsys.readouterr().err)["key"] == "<config>"


def test_numerical_failure_exit_two(tmp_path, capsys, monkeypatch):
    def boom(*a, **k):
        raise QuadratureError("quadrature tolerance not met", 1.0)

    monkeypatch.setattr(cli, "m2_test", boom)
    assert run(tmp_path, "m2-test") == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "numerical" and err["key"]


def test_stale_error_record_removed(tmp_path):
    run(tmp_path, "spectrum", "--set", "model.N=0")
    assert (tmp_path / "error.json").exists()
    assert run(tmp_path, "spectrum") == 0
    assert not (tmp_path / "error.json").exists()


def test_m2_default_residuals(tmp_path):
    assert run(tmp_path, "m2-test") == 0
    rows = read_csv(tmp_path / "m2_test.csv")
    assert len(rows) == 100 and max(float(r["residual"]) for r in rows) <= 1e-12
    assert list(rows[0]) == ["t", "s", "xi_id", "residual"]


def test_headers_carry_hash_and_seed(tmp_path):
    assert run(tmp_path, "cf-test", "--set", "run.n_samples=2000", "--set", "run.seed=17") == 0
    head = (tmp_path / "cf_test.csv").read_text().splitlines()
    assert any(ln.startswith("# config_sha256=") for ln in head[:5])
    assert "# seed=17" in head
    assert not any("generated" in ln for ln in head)
    assert list(read_csv(tmp_path / "cf_test.csv")[0]) == ["t", "xi_id", "analytic", "empirical",
                                                          "stderr"]


def test_timestamp_by_default(tmp_path):
    assert cli.main(["spectrum", "--out", str(tmp_path)]) == 0
    meta = json.loads((tmp_path / "weyl.json").read_text())["meta"]
    assert "generated" in meta


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
    assert cli.main(["check-hs", "--no-timestamp"]) == 0
    assert (tmp_path / "env" / "hs.json").exists()


def test_simulate_outputs(tmp_path):
    assert run(tmp_path, "simulate", "--set", "model.N=8") == 0
    rows = read_csv(tmp_path / "path.csv")
    assert list(rows[0]) == ["t", "k", "coef"] and len(rows) == 21 * 8
    assert "max_jump" in json.loads((tmp_path / "regularity.json").read_text())["result"]


def test_simulate_window_must_divide(tmp_path, capsys):
    assert run(tmp_path, "simulate", "--set", "run.simulate.window=3") == 1
    assert json.loads(capsys.readouterr().err)["key"] == "run.simulate.window"


@pytest.mark.parametrize("sub", ["resolvent", "excessive", "balayage", "polar", "nest"])
def test_potlab_subcommands(tmp_path, sub):
    assert run(tmp_path, "potlab", sub, "--set", "run.potlab.n_paths=500") == 0
    data = json.loads((tmp_path / f"potlab_{sub}.json").read_text())
    assert data["meta"]["command"] == f"potlab {sub}"


def test_potlab_balayage_two_state(tmp_path):
    run(tmp_path, "potlab", "balayage", "--set", "run.potlab.n_paths=500")
    res = json.loads((tmp_path / "potlab_balayage.json").read_text())["result"]
    assert res["lp"]["values"] == pytest.approx([0.5, 1.0], abs=1e-10)
    assert res["lp"]["method"] == "LP" and res["hitting"]["method"] == "HittingSystem"


def test_potlab_bad_state(tmp_path, capsys):
    assert run(tmp_path, "potlab", "polar", "--set", "run.potlab.A=[5]") == 1
    assert json.loads(capsys.readouterr().err)["key"] == "run.potlab.A[0]"


def test_potlab_chain_from_csv(tmp_path):
    q = tmp_path / "q.csv"
    q.write_text("-1,1,0\n0.5,-1,0.5\n0,1,-1\n")
    assert run(tmp_path, "potlab", "resolvent", "--set", "run.potlab.chain.kind=csv",
               "--set", f"run.potlab.chain.path={q}") == 0


def test_workers_validated(tmp_path):
    assert cli.main(["spectrum", "--workers", "0", "--out", str(tmp_path)]) == 1
