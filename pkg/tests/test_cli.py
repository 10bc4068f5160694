import json

import numpy as np
import pytest

from fdareg.cli import main
from fdareg.dataio import load_dataset, load_model, write_dataset
from fdareg.selection import cross_validate
from fdareg.simulate import SyntheticDesign, generate_sample


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out.strip()
    return code, (json.loads(out) if out else None)


@pytest.fixture
def dataset(tmp_path):
    data = generate_sample(
        SyntheticDesign(n_points=40, interval=(0.0, 1.0), n_terms=6,
                        eigen_scale=2.0, error_model="i", seed=5),
        24,
    )
    path = tmp_path / "data.csv"
    write_dataset(data.sample, path)
    return path


class TestFitPredict:
    def test_fit_cv_then_predict_reproduces_fitted_values(
        self, tmp_path, capsys, dataset
    ):
        model = tmp_path / "model.json"
        code, summary = run_cli(
            capsys, "fit", "--data", str(dataset), "--out", str(model),
            "--cv", "--rmax", "2", "--kmax", "2",
        )
        assert code == 0
        assert summary["cross_validated"] is True

        preds = tmp_path / "preds.csv"
        code, psummary = run_cli(
            capsys, "predict", "--model", str(model), "--data", str(dataset),
            "--out", str(preds),
        )
        assert code == 0 and psummary["n"] == 24

        sample = load_dataset(dataset)
        pipeline = load_model(model)
        expected = pipeline.predict_values(sample.curve_values)
        rows = preds.read_text().strip().splitlines()[1:]
        got = np.array([float(line.split(",")[1]) for line in rows])
        np.testing.assert_allclose(got, expected, rtol=0, atol=0)

    def test_fixed_truncations_do_not_need_cv(self, tmp_path, capsys, dataset):
        model = tmp_path / "model.json"
        code, summary = run_cli(
            capsys, "fit", "--data", str(dataset), "--out", str(model),
            "--r", "1", "--k", "1", "--variant", "check",
        )
        assert code == 0
        assert summary["r"] == 1 and summary["variant"] == "check"

    def test_missing_truncations_fail(self, tmp_path, capsys, dataset):
        model = tmp_path / "model.json"
        with pytest.raises(SystemExit):
            main(["fit", "--data", str(dataset), "--out", str(model)])

    def test_bad_data_path_returns_error_code(self, tmp_path, capsys):
        code = main(["fit", "--data", str(tmp_path / "missing.csv"),
                     "--out", str(tmp_path / "m.json"), "--r", "1", "--k", "1"])
        assert code == 1
        assert "fdareg fit" in capsys.readouterr().err


class TestSimulate:
    def test_same_seed_gives_byte_identical_files(self, tmp_path, capsys):
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for path in paths:
            code, _ = run_cli(
                capsys, "simulate", "--n", "16", "--seed", "7",
                "--model", "i", "--grid-points", "30", "--out", str(path),
            )
            assert code == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_truth_and_slope_files(self, tmp_path, capsys):
        code, summary = run_cli(
            capsys, "simulate", "--n", "10", "--seed", "1", "--grid-points", "25",
            "--out", str(tmp_path / "d.csv"),
            "--truth-out", str(tmp_path / "t.csv"),
            "--slope-out", str(tmp_path / "b.csv"),
        )
        assert code == 0
        truth_lines = (tmp_path / "t.csv").read_text().strip().splitlines()
        assert truth_lines[0] == "index,mu" and len(truth_lines) == 11
        slope_lines = (tmp_path / "b.csv").read_text().strip().splitlines()
        assert slope_lines[0] == "t,beta" and len(slope_lines) == 26


class TestSplitEval:
    def test_synthetic_design_summary(self, tmp_path, capsys):
        code, summary = run_cli(
            capsys, "split-eval", "--n", "24", "--B", "2", "--seed", "3",
            "--grid-points", "30", "--n-terms", "6", "--eigen-scale", "2.0",
            "--variants", "tilde", "--rmax", "2", "--kmax", "2",
            "--out-json", str(tmp_path / "rep.json"),
            "--out-csv", str(tmp_path / "rep.csv"),
        )
        assert code == 0
        assert summary["summary"]["target"] == "mu"
        assert "tilde" in summary["summary"]
        assert (tmp_path / "rep.json").exists()
        assert (tmp_path / "rep.csv").exists()

    def test_real_data_mode_targets_y(self, tmp_path, capsys, dataset):
        code, summary = run_cli(
            capsys, "split-eval", "--data", str(dataset), "--B", "2",
            "--seed", "2", "--variants", "tilde", "--rmax", "1", "--kmax", "1",
        )
        assert code == 0
        assert summary["summary"]["target"] == "y"


class TestAmseCheck:
    def test_summary_fields(self, capsys):
        code, summary = run_cli(
            capsys, "amse-check", "--n", "120", "--replications", "40",
            "--seed", "1", "--sigma2-const", "0.5", "--sigma2-coef", "0.5",
            "--sigma2-index", "1", "--tau-like-sigma", "--r", "2",
        )
        assert code == 0
        assert summary["theoretical_ratio"] <= 1.0
        assert summary["replications"] == 40

    def test_mismatched_spec_flags_fail(self, capsys):
        with pytest.raises(SystemExit):
            main(["amse-check", "--sigma2-coef", "0.5"])


class TestCvTable:
    def test_table_matches_in_process_cv(self, tmp_path, capsys, dataset):
        out = tmp_path / "table.csv"
        code, summary = run_cli(
            capsys, "cv-table", "--data", str(dataset), "--out", str(out),
            "--rmax", "2", "--kmax", "1",
        )
        assert code == 0
        result = cross_validate(load_dataset(dataset), 2, 1, "tilde")
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "r,k,w"
        table = {}
        for line in lines[1:]:
            r, k, w = line.split(",")
            table[(int(r), int(k))] = float(w)
        for (r, k), value in result.as_dict().items():
            assert table[(r, k)] == pytest.approx(value, rel=1e-12)
        assert tuple(summary["chosen"]) == result.chosen


class TestUsageErrors:
    def test_unknown_command(self):
        with pytest.raises(SystemExit) as exc:
            main(["conjure"])
        assert exc.value.code == 2

    def test_unknown_flag(self):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--frobnicate", "1", "--out", "x.csv"])
        assert exc.value.code == 2
