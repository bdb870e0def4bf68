import numpy as np

from civr.cli import EXIT_CONFIG, EXIT_OK, main
from civr.datasets import ingest_returns_csv


class TestRunCommand:
    def test_tiny_experiment(self, tmp_path, capsys):
        out = tmp_path / "out"
        cfg = tmp_path / "cfg.txt"
        cfg.write_text(
            "problem = portfolio\n"
            "algorithm = civr\n"
            f"outdir = {out}\n"
            "returns_rows = 50\n"
            "returns_assets = 3\n"
            "epochs = 2\n"
            "eta = 0.1\n"
            "reg = l1\n"
            "reg_param = 0.01\n"
            "seeds = [1]\n",
            encoding="utf-8",
        )
        assert main(["run", str(cfg)]) == EXIT_OK
        assert (out / "run_s1r0.csv").exists()
        assert (out / "mean_curve.csv").exists()
        assert (out / "summary.txt").exists()

    def test_bad_config_exit_code(self, tmp_path):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("problem = lending\nalgorithm = civr\noutdir = x\n", encoding="utf-8")
        assert main(["run", str(cfg)]) == EXIT_CONFIG

    def test_missing_file_exit_code(self, tmp_path):
        assert main(["run", str(tmp_path / "none.txt")]) == EXIT_CONFIG


class TestVerifyCommand:
    def test_prox_selector_passes(self, capsys):
        assert main(["verify", "prox"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "PASS prox/optimality" in out
        assert "checks passed" in out


class TestIngestCommand:
    def test_roundtrip_through_cli(self, tmp_path, capsys):
        src = tmp_path / "raw.csv"
        src.write_text("header junk\n20000101,1.0,2.0\n20000102,-99.99,3.0\n", encoding="utf-8")
        out = tmp_path / "clean.csv"
        assert main(["ingest", str(src), "--scale", "raw", "-o", str(out)]) == EXIT_OK
        ds = ingest_returns_csv(out, scale="raw")
        assert ds.n_periods == 1
        assert np.array_equal(ds.matrix, [[1.0, 2.0]])

    def test_unparsable_returns_config_error(self, tmp_path):
        src = tmp_path / "bad.csv"
        src.write_text("no data at all\n", encoding="utf-8")
        assert main(["ingest", str(src)]) == EXIT_CONFIG


class TestScheduleCommand:
    def test_prints_resolved_triples(self, capsys):
        assert main(["schedule", "constant-finite", "--n", "100", "--epochs", "3", "--eta", "0.1"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "t,tau,B,S" in out
        assert "1,10,full,10" in out

    def test_expectation_preset_budget(self, capsys):
        code = main(
            ["schedule", "constant-expectation", "--eps", "0.01", "--sigma0-sq", "1.0", "--eta", "0.1"]
        )
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "epochs=10" in out
        assert "1,10,100,10" in out

    def test_missing_parameter_is_config_error(self):
        assert main(["schedule", "constant-finite", "--eta", "0.1"]) == EXIT_CONFIG
