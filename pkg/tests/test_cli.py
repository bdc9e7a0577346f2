"""End-to-end tests for the specflow command line."""

import json

import pytest

from specflow.birkhoff import LAMBDA_COUNT
from specflow.cli import EXIT_CONFIG, EXIT_PLAN, _lambdas, main
from specflow.cohomology import DISCRETE, WM_SINGLE
from specflow.config import ExperimentConfig


def _config(tmp_path, **data):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(data))
    return str(path)


def _report(tmp_path, command):
    return json.loads((tmp_path / f"{command}.json").read_text())


class TestClassify:
    def test_golden_dyadic(self, tmp_path):
        assert main(["--out", str(tmp_path), "classify"]) == 0
        report = _report(tmp_path, "classify")
        assert report["schema_version"] == 1
        assert report["command"] == "classify"
        assert report["results"]["verdict"]["outcome"] == "DiscreteL2Conjugate"
        assert report["results"]["cohomology_residual"]["within_bound"] is True
        assert (tmp_path / "classify.timings.json").exists()

    def test_single_frequency(self, tmp_path):
        cfg = _config(tmp_path, alpha={"kind": "rule", "rule": "two_pow_q"})
        assert main(["--config", cfg, "--out", str(tmp_path), "classify"]) == 10

    def test_csv_tables(self, tmp_path):
        assert main(["--out", str(tmp_path), "--emit", "csv", "classify"]) == 0
        assert (tmp_path / "classify_transfer.csv").exists()
        assert not (tmp_path / "classify.json").exists()


class TestCommands:
    def test_alpha(self, tmp_path):
        assert main(["--out", str(tmp_path), "alpha"]) == 0
        results = _report(tmp_path, "alpha")["results"]
        assert [row["q"] for row in results["convergents"][:5]] == [1, 1, 2, 3, 5]
        assert [m["m"] for m in results["class_M"]] == [0, 1]

    def test_hypcheck(self, tmp_path):
        assert main(["--out", str(tmp_path), "hypcheck"]) == 0
        hyp = _report(tmp_path, "hypcheck")["results"]["hypotheses"]
        assert hyp["h2"]["m0"] == 3

    def test_hypcheck_violator(self, tmp_path):
        cfg = _config(tmp_path, roof={"kind": "table", "entries": [[0, 1.0], [2, 0.1], [4, 0.05]]})
        assert main(["--config", cfg, "--out", str(tmp_path), "hypcheck"]) == 1

    def test_wmtest_discrete_refutes(self, tmp_path):
        assert main(["--out", str(tmp_path), "wmtest"]) == 1
        results = _report(tmp_path, "wmtest")["results"]
        assert results["plan"]["kind"] == "return"
        assert results["certificate"]["status"] == "REFUTED"
        assert len(results["phase_defect"]) == len(results["plan"]["steps"])

    def test_wmtest_single_frequency_passes(self, tmp_path):
        cfg = _config(tmp_path, alpha={"kind": "rule", "rule": "two_pow_q"}, lambdas=[16.0, 64.0, 256.0])
        assert main(["--config", cfg, "--out", str(tmp_path), "wmtest"]) == 0
        results = _report(tmp_path, "wmtest")["results"]
        assert results["plan"]["kind"] == "single_frequency"
        assert results["lambda_threshold"] is not None
        cert = results["certificate"]
        assert cert["status"] == "PASS"
        integrals = [p["integral"] for c in cert["per_lambda"] for p in c["points"]]
        assert integrals
        assert min(integrals) >= 0.05

    def test_wmtest_multi_frequency_pair(self, tmp_path):
        cfg = _config(tmp_path, alpha={"kind": "rule", "rule": "power", "seed": [0, 2]},
                      roof={"kind": "resonant", "indices": [1, 2, 3, 4, 5]}, horizon=1 << 94,
                      plan={"variance_target": 0.12, "slack": 0.5, "start": 2}, lambdas=[16.0])
        assert main(["--config", cfg, "--out", str(tmp_path), "wmtest"]) in (0, 20)
        results = _report(tmp_path, "wmtest")["results"]
        assert results["plan"]["kind"] == "multi_frequency"
        assert [s["window"] for s in results["plan"]["steps"]] == [[2, 2], [3, 4]]
        assert len(results["delta_n"]) == 2
        assert "lacunary_rows" in results

    def test_clt(self, tmp_path):
        cfg = _config(tmp_path, clt={"sizes": [8, 16]}, samples=2000)
        assert main(["--config", cfg, "--out", str(tmp_path), "clt"]) == 0
        rows = _report(tmp_path, "clt")["results"]["rows"]
        assert [r["u"] for r in rows] == [8, 16]
        assert all(r["cosine_product_t1"] < 1e-12 for r in rows)

    def test_no_command(self, capsys):
        assert main([]) == 0
        assert "specflow" in capsys.readouterr().out

    def test_version(self):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0


class TestErrors:
    def test_unknown_rule(self, tmp_path):
        cfg = _config(tmp_path, alpha={"kind": "rule", "rule": "nope"})
        assert main(["--config", cfg, "--out", str(tmp_path), "classify"]) == EXIT_CONFIG

    def test_missing_config(self, tmp_path):
        assert main(["--config", str(tmp_path / "missing.json"), "alpha"]) == EXIT_CONFIG

    def test_bad_precision(self, tmp_path):
        assert main(["--precision", "16", "--out", str(tmp_path), "alpha"]) == EXIT_CONFIG

    def test_constant_roof_has_no_plan(self, tmp_path, capsys):
        cfg = _config(tmp_path, roof={"kind": "constant", "c0": 2.0})
        assert main(["--config", cfg, "--out", str(tmp_path), "wmtest"]) == EXIT_PLAN
        assert "hint" in capsys.readouterr().err


class TestLambdaGrid:
    def test_default_grid_from_threshold(self):
        lams = _lambdas(ExperimentConfig(), WM_SINGLE, 1.0, threshold=100.0)
        assert len(lams) == LAMBDA_COUNT
        assert lams[0] == pytest.approx(100.0)
        assert lams[-1] == pytest.approx(1600.0)

    def test_default_grid_floor(self):
        lams = _lambdas(ExperimentConfig(), WM_SINGLE, 1.0)
        assert len(lams) == LAMBDA_COUNT
        assert lams[0] == pytest.approx(16.0)
        assert lams[-1] == pytest.approx(256.0)

    def test_configured_grid_count(self):
        assert len(_lambdas(ExperimentConfig(lambdas={"min": 8}), WM_SINGLE, 1.0)) == LAMBDA_COUNT

    def test_discrete_eigenvalues(self):
        assert _lambdas(ExperimentConfig(), DISCRETE, 2.0) == pytest.approx([0.5, 1.0, 1.5, 2.0])
