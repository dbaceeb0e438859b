import csv
import json

import numpy as np
import pytest

from tspca.cli import main
from tspca.segmentation import SegmentationResult
from tspca.simulation import EXAMPLE5, generate
from tspca.timeseries import save_csv


@pytest.fixture
def example5_csv(tmp_path):
    Y, _, _ = generate(EXAMPLE5, 1500, 2024)
    path = tmp_path / "y.csv"
    save_csv(path, Y)
    return path


def test_segment_outputs(example5_csv, tmp_path, capsys):
    out = tmp_path / "seg"
    assert main(["segment", str(example5_csv), "--out", str(out)]) == 0
    doc = json.loads((out / "segmentation.json").read_text())
    assert doc["schema_version"] == 1
    assert sorted(len(g) for g in doc["groups"]) == [1, 2, 3]
    assert doc["omega"]["y"] == pytest.approx(doc["omega"]["x"], abs=1e-6)
    res = SegmentationResult.from_json((out / "segmentation.json").read_text())
    assert res.to_dict() == doc
    xhat = np.loadtxt(out / "xhat.csv", delimiter=",", skiprows=1)
    assert xhat.shape == (1500, 6)
    with (out / "corr_stats.csv").open() as fh:
        rows = list(csv.reader(fh))
    m = doc["m"]
    assert rows[0] == ["i", "j", "h", "rho"] and len(rows) - 1 == 15 * (2 * m + 1)
    assert "3 groups" in capsys.readouterr().out


def test_segment_single_series(tmp_path):
    y = np.random.default_rng(0).standard_normal((200, 1)) * 3
    save_csv(tmp_path / "one.csv", y)
    assert main(["segment", str(tmp_path / "one.csv"), "--out", str(tmp_path / "o")]) == 0
    doc = json.loads((tmp_path / "o" / "segmentation.json").read_text())
    assert doc["groups"] == [[0]]
    sigma = np.sqrt(np.mean((y - y.mean()) ** 2))
    assert doc["transform_B"][0][0] == pytest.approx(1 / sigma)


def test_segment_malformed_csv(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n3,x\n")
    assert main(["segment", str(bad), "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "row" in err and "column" in err


def test_segment_singular_is_numerical(tmp_path, capsys):
    y = np.random.default_rng(0).standard_normal(300)
    save_csv(tmp_path / "dup.csv", np.c_[y, y])
    assert main(["segment", str(tmp_path / "dup.csv"), "--out", str(tmp_path)]) == 3
    assert "standardize" in capsys.readouterr().err


def test_segment_bad_flags(example5_csv, tmp_path):
    assert main(["segment", str(example5_csv), "--threshold", "oops", "--out", str(tmp_path)]) == 2
    assert main(["segment", str(tmp_path / "missing.csv"), "--out", str(tmp_path)]) == 2


def test_config_file(example5_csv, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"method": "fdr", "k0": 3, "m": 7}))
    out = tmp_path / "c"
    assert main(["segment", str(example5_csv), "--config", str(cfg), "--k0", "4", "--out", str(out)]) == 0
    doc = json.loads((out / "segmentation.json").read_text())
    # command-line flags override the file
    assert doc["config"]["method"] == "fdr" and doc["config"]["k0"] == 4 and doc["m"] == 7
    cfg.write_text(json.dumps({"nonsense": 1}))
    assert main(["segment", str(example5_csv), "--config", str(cfg), "--out", str(out)]) == 2


def test_simulate_example5(tmp_path):
    out = tmp_path / "sim"
    assert main(["simulate", "--design", "example5", "--n", "1500", "--reps", "200", "--out", str(out)]) == 0
    rows = list(csv.reader((out / "table.csv").open()))
    assert rows[0] == ["n", "1500"]
    correct = float(rows[1][1])
    assert 0.90 <= correct <= 1.0
    detail = json.loads((out / "detail.json").read_text())
    assert detail["schema_version"] == 1 and len(detail["runs"][0]["outcomes"]) == 200


def test_simulate_example6(tmp_path):
    out = tmp_path / "sim6"
    assert main(["simulate", "--design", "example6", "--n", "400", "--reps", "200",
                 "--jobs", "2", "--out", str(out)]) == 0
    correct = float(list(csv.reader((out / "table.csv").open()))[1][1])
    assert 0.02 <= correct <= 0.15


def test_simulate_single_rep_and_errors(tmp_path):
    out = tmp_path / "one"
    assert main(["simulate", "--n", "300", "--reps", "1", "--out", str(out)]) == 0
    detail = json.loads((out / "detail.json").read_text())
    assert len(detail["runs"]) == 1 and len(detail["runs"][0]["outcomes"]) == 1
    assert main(["simulate", "--design", "nope", "--out", str(out)]) == 2
    assert main(["simulate", "--n", "10x", "--out", str(out)]) == 2


def test_forecast_outputs_and_determinism(tmp_path):
    Y, _, _ = generate(EXAMPLE5, 400, 5)
    save_csv(tmp_path / "y.csv", Y)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["forecast", str(tmp_path / "y.csv"), "--holdout", "4", "--out", str(a)]) == 0
    assert main(["forecast", str(tmp_path / "y.csv"), "--holdout", "4", "--out", str(b)]) == 0
    assert (a / "report.csv").read_bytes() == (b / "report.csv").read_bytes()
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    rows = list(csv.reader((a / "report.csv").open()))
    assert "segmentation_h1" in rows[0]
    assert all(np.isfinite(float(v)) for row in rows[1:] for v in row[1:])
    assert json.loads((a / "report.json").read_text())["schema_version"] == 1


def test_forecast_holdout_too_large(tmp_path, capsys):
    save_csv(tmp_path / "y.csv", np.random.default_rng(1).standard_normal((40, 2)))
    assert main(["forecast", str(tmp_path / "y.csv"), "--holdout", "21", "--out", str(tmp_path)]) == 2
    assert "holdout" in capsys.readouterr().err


def test_forecast_seasonal_flag(tmp_path):
    t = np.arange(240)
    rng = np.random.default_rng(2)
    Y = np.c_[np.sin(2 * np.pi * t / 12), np.cos(2 * np.pi * t / 12)] * 5 + 0.1 * rng.standard_normal((240, 2))
    save_csv(tmp_path / "s.csv", Y)
    out = tmp_path / "s"
    assert main(["forecast", str(tmp_path / "s.csv"), "--holdout", "6", "--seasonal-diff", "12",
                 "--methods", "var", "--out", str(out)]) == 0
    rows = list(csv.reader((out / "report.csv").open()))
    assert float(rows[3][1]) < 0.5  # mean one-step MSE in levels


def test_volatility_iid_mostly_singletons(tmp_path):
    singles = 0
    for s in range(10):
        save_csv(tmp_path / "v.csv", np.random.default_rng(s).standard_normal((600, 3)))
        assert main(["volatility", str(tmp_path / "v.csv"), "--out", str(tmp_path / "v")]) == 0
        doc = json.loads((tmp_path / "v" / "segmentation.json").read_text())
        singles += len(doc["groups"]) == 3
        assert doc["flavor"] == "volatility"
    assert singles >= 6


def test_volatility_trivial_and_range(tmp_path):
    save_csv(tmp_path / "one.csv", np.random.default_rng(0).standard_normal((100, 1)))
    assert main(["volatility", str(tmp_path / "one.csv"), "--out", str(tmp_path / "o")]) == 0
    doc = json.loads((tmp_path / "o" / "segmentation.json").read_text())
    assert doc["groups"] == [[0]]
    save_csv(tmp_path / "short.csv", np.random.default_rng(0).standard_normal((5, 2)))
    assert main(["volatility", str(tmp_path / "short.csv"), "--k0", "5", "--out", str(tmp_path)]) == 2
