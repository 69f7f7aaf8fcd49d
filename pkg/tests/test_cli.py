import json
import shutil
import subprocess

import numpy as np
import pytest

from qnnlab.cli import EXIT_FAILURE, EXIT_USAGE, main
from qnnlab.experiments import read_rows


def run(capsys, *argv):
    code = main(list(map(str, argv)))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


def dump(path, obj):
    path.write_text(json.dumps(obj))
    return path


class TestGenData:
    @pytest.mark.parametrize("kind,rows,d", [("sinc", 300, 1), ("square_wave", 400, 1), ("bivariate", 400, 2),
                                             ("iris", 100, 4)])
    def test_kinds(self, capsys, tmp_path, kind, rows, d):
        code, out, _ = run(capsys, "gen-data", "--kind", kind, "--out", tmp_path / "d.csv")
        assert code == 0 and out["rows"] == rows and out["d"] == d

    def test_bad_kind_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as e:
            main(["gen-data", "--kind", "mnist", "--out", "x.csv"])
        assert e.value.code == 2


class TestSynthesize:
    def test_named_target(self, capsys):
        code, out, _ = run(capsys, "synthesize", "--target", "sinc", "--order", "8")
        assert code == 0
        assert out["angles"]["ansatz"] == "WZW"
        assert out["sup_error"] <= out["bound"] + 1e-6

    def test_series_file(self, capsys, tmp_path):
        p = dump(tmp_path / "s.json", {"coeffs": [[-1, 0.2, 0], [0, 0.1, 0], [1, 0.2, 0]], "period": 2 * np.pi})
        code, out, err = run(capsys, "synthesize", "--series", p, "--ansatz", "YZY", "--out", tmp_path / "a.json")
        assert code == 0, err
        saved = json.loads((tmp_path / "a.json").read_text())
        assert saved["sup_error"] < 1e-6

    def test_odd_series_rejected_for_yzy(self, capsys):
        code, _, err = run(capsys, "synthesize", "--target", "sin", "--ansatz", "YZY")
        assert code == EXIT_USAGE and json.loads(err)["error"] == "InvalidArgument"


class TestTrainEval:
    def test_train_then_eval(self, capsys, tmp_path):
        data = tmp_path / "sinc.csv"
        assert run(capsys, "gen-data", "--kind", "sinc", "--n-points", 30, "--out", data)[0] == 0
        tmpl = dump(tmp_path / "t.json", {"ansatz": "WZW", "layers": 2})
        tc = dump(tmp_path / "tc.json", {"iterations": 5, "instances": 2})
        code, out, err = run(capsys, "train", "--template", tmpl, "--data", data, "--train-config", tc,
                             "--out", tmp_path / "tr")
        assert code == 0, err
        report = tmp_path / "tr" / "report.json"
        header, rows = read_rows(tmp_path / "tr" / "loss_curve.csv")
        assert header == ["iteration", "instance", "loss"] and rows.shape == (10, 3)

        code, out, _ = run(capsys, "eval", "--template", report, "--params", report, "--x", "0.1", "0.2")
        assert code == 0 and len(out["predictions"]) == 2
        code, _, _ = run(capsys, "eval", "--template", tmpl, "--params", report, "--data", data,
                         "--out", tmp_path / "pred.csv")
        header, rows = read_rows(tmp_path / "pred.csv")
        assert header == ["x", "target", "prediction"] and rows.shape == (30, 3)

    def test_train_with_config(self, capsys, tmp_path):
        cfg = dump(tmp_path / "c.json", {"experiment": "sinc", "options": {"layers": [1], "n_points": 12},
                                         "grid_size": 10})
        code, out, err = run(capsys, "train", "--config", cfg, "--iterations", 2, "--instances", 1,
                             "--out", tmp_path / "o")
        assert code == 0, err
        assert (tmp_path / "o" / "summary.json").exists()

    def test_wrong_param_count(self, capsys, tmp_path):
        tmpl = dump(tmp_path / "t.json", {"ansatz": "YZY", "layers": 2})
        params = dump(tmp_path / "p.json", [0.1, 0.2])
        code, _, err = run(capsys, "eval", "--template", tmpl, "--params", params, "--x", "0")
        assert code == EXIT_USAGE and "expected 3 parameters" in json.loads(err)["message"]

    def test_missing_inputs(self, capsys):
        code, _, err = run(capsys, "train")
        assert code == EXIT_USAGE

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "eval", "--template", tmp_path / "none.json", "--params", "p", "--x", "0")
        assert code == EXIT_USAGE and json.loads(err)["error"] == "FileNotFoundError"


class TestSpectrum:
    def test_template_params(self, capsys, tmp_path):
        tmpl = dump(tmp_path / "t.json", {"ansatz": "MULTIVARIATE_UZU", "layers": 4, "d": 2})
        params = dump(tmp_path / "p.json", list(np.random.default_rng(0).uniform(0, 6, 15)))
        code, out, err = run(capsys, "spectrum", "--template", tmpl, "--params", params, "--grid-size", 16,
                             "--out", tmp_path / "s.csv")
        assert code == 0, err
        assert out["spectrum_size"] == 25 and out["dof"] == 15 and out["max_outside"] < 1e-8
        header, _ = read_rows(tmp_path / "s.csv")
        assert header == ["n1", "n2", "magnitude"]

    def test_config(self, capsys, tmp_path):
        cfg = dump(tmp_path / "c.json", {"experiment": "spectrum_demo", "template": {"layers": 2},
                                         "options": {"n_points": 20}, "grid_size": 8,
                                         "output_dir": str(tmp_path / "o")})
        code, out, err = run(capsys, "spectrum", "--config", cfg, "--iterations", 2)
        assert code == 0, err
        assert out["max_outside"] < 1e-8

    def test_wrong_experiment_config(self, capsys, tmp_path):
        cfg = dump(tmp_path / "c.json", {"experiment": "sinc"})
        assert run(capsys, "spectrum", "--config", cfg)[0] == EXIT_USAGE


class TestClassify:
    def test_train_and_apply(self, capsys, tmp_path):
        code, out, err = run(capsys, "classify", "--n-samples", 30, "--iterations", 2, "--instances", 1,
                             "--out", tmp_path / "c")
        assert code == 0, err
        report = tmp_path / "c" / "report.json"
        code, out, err = run(capsys, "classify", "--template", report, "--params", report)
        assert code == 0, err
        assert len(out["predictions"]) == 150 and 0 <= out["accuracy"] <= 1

    def test_custom_csv_with_pca(self, capsys, tmp_path):
        rng = np.random.default_rng(1)
        lines = ["a,b,c,d,e,label"] + [",".join(f"{v:.4f}" for v in rng.normal(size=5)) + f",{'pq'[i % 2]}"
                                       for i in range(40)]
        (tmp_path / "t.csv").write_text("\n".join(lines) + "\n")
        code, out, err = run(capsys, "classify", "--csv", tmp_path / "t.csv", "--label-column", "label",
                             "--pca-dim", 2, "--n-samples", 20, "--iterations", 2, "--instances", 1,
                             "--out", tmp_path / "o")
        assert code == 0, err
        assert out["classes"] == ["p", "q"] and out["n_test"] == 4


class TestRunAndValidate:
    def test_run(self, capsys, tmp_path):
        code, out, err = run(capsys, "run", "--experiment", "synth_demo", "--out", tmp_path / "s", "--seed", 3)
        assert code == 0, err
        assert out["within_bound"]
        assert json.loads((tmp_path / "s" / "summary.json").read_text())["config"]["seed"] == 3

    def test_run_needs_experiment(self, capsys):
        assert run(capsys, "run")[0] == EXIT_USAGE

    def test_env_out_dir(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("QNNLAB_OUT_DIR", str(tmp_path))
        code, out, _ = run(capsys, "run", "--experiment", "synth_demo")
        assert code == 0 and (tmp_path / "synth_demo" / "angles.json").exists()

    def test_validate(self, capsys, tmp_path):
        cfg = dump(tmp_path / "c.json", {"experiment": "iris", "output_dir": str(tmp_path / "x")})
        code, out, _ = run(capsys, "validate-config", "--config", cfg)
        assert code == 0 and out == {"valid": True, "experiment": "iris", "output_dir": str(tmp_path / "x")}

    def test_validate_rejects(self, capsys, tmp_path):
        cfg = dump(tmp_path / "c.json", {"experiment": "iris", "train": {"batch_size": 0}})
        code, _, err = run(capsys, "validate-config", "--config", cfg)
        assert code == EXIT_USAGE and "batch_size" in json.loads(err)["message"]

    def test_bad_json(self, capsys, tmp_path):
        (tmp_path / "c.json").write_text("{not json")
        assert run(capsys, "validate-config", "--config", tmp_path / "c.json")[0] == EXIT_USAGE

    def test_runtime_failure_exit_code(self, capsys, monkeypatch):
        import qnnlab.cli as cli
        monkeypatch.setattr(cli, "run_experiment", lambda cfg: (_ for _ in ()).throw(RuntimeError("x")))
        code, _, err = run(capsys, "run", "--experiment", "sinc")
        assert code == EXIT_FAILURE and json.loads(err) == {"error": "RuntimeError", "message": "x"}


@pytest.mark.skipif(shutil.which("qnnlab") is None, reason="console script not installed")
def test_console_script(tmp_path):
    res = subprocess.run(["qnnlab", "gen-data", "--kind", "sinc", "--out", str(tmp_path / "d.csv")],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and json.loads(res.stdout)["rows"] == 300
