import json

import numpy as np
import pytest

from panelseg.cli import main
from panelseg.panel_core import load_csv


@pytest.fixture
def noisy_csv(tmp_path):
    g = np.random.default_rng(12)
    X = g.standard_normal((6, 60))
    X[:3, 30:] += 2.0
    path = tmp_path / "x.csv"
    np.savetxt(path, X, delimiter=",", fmt="%.17g")
    return path


class TestDetect:
    def test_constant_data(self, tmp_path, capsys):
        f = tmp_path / "flat.csv"
        f.write_text("1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1\n2,2,2,2,2,2,2,2,2,2,2,2,2,2,2,2\n")
        assert main(["detect", "--input", str(f), "--seed", "1"]) == 0
        assert json.loads(capsys.readouterr().out)["change_points"] == []

    def test_missing_input(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["detect"])
        assert exc.value.code == 2
        assert "--input" in capsys.readouterr().err

    def test_byte_identical(self, noisy_csv, tmp_path):
        outs = []
        for i, threads in enumerate(["1", "3"]):
            out = tmp_path / f"r{i}.json"
            args = ["detect", "--input", str(noisy_csv), "--mode", "phi=0.5", "--seed", "7", "--boot-reps", "10",
                    "--threads", threads, "--output", str(out)]
            assert main(args) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
        report = json.loads(outs[0])
        assert report["config"]["mode"] == "phi=0.5"
        assert 30 in [c["eta"] for c in report["change_points"]]

    def test_dump_boot(self, noisy_csv, tmp_path):
        dump = tmp_path / "boot.csv"
        assert main(["detect", "--input", str(noisy_csv), "--boot-reps", "4", "--dump-boot", str(dump),
                     "--output", str(tmp_path / "r.json")]) == 0
        lines = dump.read_text().splitlines()
        assert lines[0] == "window_len,replicate,stat"
        assert any(line.startswith("60,") for line in lines[1:])

    def test_bad_cell(self, tmp_path, capsys):
        f = tmp_path / "bad.csv"
        f.write_text("1,2,x\n")
        assert main(["detect", "--input", str(f)]) == 2
        assert "(1,3)" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["detect", "--input", str(tmp_path / "nope.csv")]) == 2

    def test_degenerate(self, tmp_path, capsys):
        X = np.zeros((2, 40))
        X[0] = np.random.default_rng(0).standard_normal(40)
        X[1, 20:] = 1.0
        f = tmp_path / "d.csv"
        np.savetxt(f, X, delimiter=",")
        assert main(["detect", "--input", str(f), "--boot-reps", "3"]) == 1
        assert "series 2" in capsys.readouterr().err

    def test_bad_mode(self, noisy_csv):
        with pytest.raises(SystemExit) as exc:
            main(["detect", "--input", str(noisy_csv), "--mode", "phi=3"])
        assert exc.value.code == 2


class TestThreshold:
    def test_window_len(self, noisy_csv, capsys):
        assert main(["threshold", "--input", str(noisy_csv), "--boot-reps", "5", "--window-len", "30"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["window_len"] == 30 and out["threshold"] > 0


class TestSimulate:
    def test_shape(self, tmp_path):
        out = tmp_path / "p.csv"
        assert main(["simulate", "--model", "n1", "--rho", "0.2", "--n", "20", "--T", "50", "--seed", "3",
                     "--out", str(out)]) == 0
        p = load_csv(out)
        assert (p.n, p.T) == (20, 50)

    def test_with_change(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["simulate", "--n", "5", "--T", "40", "--seed", "3", "--out", str(a)])
        main(["simulate", "--n", "5", "--T", "40", "--seed", "3", "--change", "0.5,1,1", "--out", str(b)])
        diff = load_csv(b).values - load_csv(a).values
        assert np.all(diff[:, :20] == 0) and np.all(np.abs(diff[:, 20:]) >= 0.75 - 1e-12)

    def test_bad_change(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--n", "5", "--T", "40", "--change", "0.5,1", "--out", str(tmp_path / "x.csv")])
        assert exc.value.code == 2


class TestBenchmark:
    def test_plan_file(self, tmp_path):
        plan = tmp_path / "plan.txt"
        plan.write_text("name = tiny\nn = 6\nT = 40\nreps = 2\nB = 4\nd_T = 3\ndetectors = combined; eh\n"
                        "change = 0.5, 0.5, 2.0\n")
        out = tmp_path / "m.csv"
        assert main(["benchmark", "--plan", str(plan), "--seed", "2", "--out", str(out)]) == 0
        rows = out.read_text().splitlines()
        assert rows[0].startswith("detector,type1") and len(rows) == 3
        assert json.loads(out.with_suffix(".json").read_text())["plan"]["name"] == "tiny"

    def test_malformed_plan(self, tmp_path, capsys):
        plan = tmp_path / "plan.txt"
        plan.write_text("n = 6\nthis is wrong\n")
        assert main(["benchmark", "--plan", str(plan)]) == 2
        assert "line 2" in capsys.readouterr().err

    def test_needs_source(self):
        assert main(["benchmark"]) == 2


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0 and "panelseg" in capsys.readouterr().out
