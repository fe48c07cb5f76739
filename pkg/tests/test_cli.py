import json

import numpy as np
import pytest

from ifdetect import cli
from ifdetect.simkit import EXAMPLE_COV, EXAMPLE_DIRECTION, EXAMPLE_MEAN, gen_gaussian_stream
from ifdetect.stat_core import GaussianModel

FAULT = [
    "--xi", ",".join(str(v) for v in EXAMPLE_DIRECTION),
    "--f", "4", "--tau-on", "10", "--tau-off-prev", "10", "--tau-off-next", "10", "--lower-bounds",
]


@pytest.fixture
def model_path(tmp_path):
    path = tmp_path / "model.json"
    cli.save_model(path, GaussianModel.from_moments(EXAMPLE_MEAN, EXAMPLE_COV, 5000))
    return path


def test_model_round_trip(tmp_path):
    x = gen_gaussian_stream(EXAMPLE_MEAN, EXAMPLE_COV, 300, 2)
    cli.write_stream_csv(tmp_path / "train.csv", x)
    assert cli.main(["train", str(tmp_path / "train.csv"), "-o", str(tmp_path / "m.json")]) == 0
    m = cli.load_model(tmp_path / "m.json")
    assert m.n_train == 300
    np.testing.assert_array_equal(m.mean_hat, x.mean(axis=0))
    np.testing.assert_array_equal(m.cov_hat, np.cov(x, rowvar=False))
    cli.save_model(tmp_path / "m2.json", m)
    assert (tmp_path / "m.json").read_text() == (tmp_path / "m2.json").read_text()


def test_train_rejects_identical_rows(tmp_path, capsys):
    (tmp_path / "t.csv").write_text("a,b\n1,2\n1,2\n1,2\n")
    assert cli.main(["train", str(tmp_path / "t.csv"), "-o", str(tmp_path / "m.json")]) == cli.EXIT_MODEL
    assert "model error" in capsys.readouterr().err


def test_missing_column_named(tmp_path, capsys):
    (tmp_path / "t.csv").write_text("a,b\n1,2\n3,5\n")
    rc = cli.main(["train", str(tmp_path / "t.csv"), "-o", str(tmp_path / "m.json"), "--columns", "a,zeta"])
    assert rc == cli.EXIT_PARSE
    assert "zeta" in capsys.readouterr().err


def test_bad_cell_names_row_and_column(tmp_path):
    (tmp_path / "t.csv").write_text("a,b\n1,2\n3,oops\n")
    with pytest.raises(cli.ParseError, match=r"row 3, column 'b'"):
        cli.read_csv(tmp_path / "t.csv")


def test_bad_model_document(tmp_path):
    (tmp_path / "m.json").write_text('{"format": "other"}')
    assert cli.main(["detectability", str(tmp_path / "m.json")] + FAULT) == cli.EXIT_PARSE


def test_detectability_exit_codes(model_path, capsys):
    assert cli.main(["detectability", str(model_path), "--json"] + FAULT) == cli.EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["admissible_windows"] == [7, 10] and doc["w_star"] == 7 and doc["w_sharp"] == 10
    weak = [a if a != "4" else "0.5" for a in FAULT]
    assert cli.main(["detectability", str(model_path)] + weak) == cli.EXIT_VERDICT


def test_missing_fault_parameter_is_usage_error(model_path):
    assert cli.main(["detectability", str(model_path), "--f", "4"]) == cli.EXIT_USAGE
    assert cli.main(["no-such-command"]) == cli.EXIT_USAGE


def test_monitor_fault_free_constant_stream(tmp_path, model_path):
    cli.write_stream_csv(tmp_path / "s.csv", np.tile(EXAMPLE_MEAN, (300, 1)))
    rc = cli.main(["monitor", str(model_path), str(tmp_path / "s.csv"), "--report", str(tmp_path / "r.json")] + FAULT)
    assert rc == 0
    doc = json.loads((tmp_path / "r.json").read_text())
    assert doc["episodes"] == [] and doc["n_samples"] == 300


def test_monitor_truncated_stream_unconfirmed(tmp_path, model_path):
    x = np.tile(np.asarray(EXAMPLE_MEAN, dtype=float), (215, 1))
    x[200:] += 4.0 * np.asarray(EXAMPLE_DIRECTION)
    cli.write_stream_csv(tmp_path / "s.csv", x)
    rc = cli.main(["monitor", str(model_path), str(tmp_path / "s.csv"), "--report", str(tmp_path / "r.json")] + FAULT)
    assert rc == 0
    eps = json.loads((tmp_path / "r.json").read_text())["episodes"]
    assert len(eps) == 1 and not eps[0]["confirmed"]
    assert "open_alarm" in eps[0]["flags"]


def test_config_file_and_flag_precedence(tmp_path, model_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# fault description\n"
        "xi = 0.2425,0.9701\nf = 0.5\ntau-on = 10\ntau_off_prev = 10\ntau-off-next = 10\n"
        "lower-bounds = yes\n"
    )
    assert cli.main(["--config", str(cfg), "detectability", str(model_path)]) == cli.EXIT_VERDICT
    assert cli.main(["--config", str(cfg), "detectability", str(model_path), "--f", "4"]) == cli.EXIT_OK
    cfg.write_text("bogus = 1\n")
    assert cli.main(["--config", str(cfg), "detectability", str(model_path)]) == cli.EXIT_PARSE
    assert "bogus" in capsys.readouterr().err


def test_series_csv(tmp_path, model_path):
    cli.write_stream_csv(tmp_path / "s.csv", gen_gaussian_stream(EXAMPLE_MEAN, EXAMPLE_COV, 50, 1))
    rc = cli.main(
        ["monitor", str(model_path), str(tmp_path / "s.csv"), "--report", str(tmp_path / "r.json"),
         "--series", str(tmp_path / "series.csv"), "--windows", "7,10"] + FAULT
    )
    assert rc == 0
    rows = (tmp_path / "series.csv").read_text().splitlines()
    assert rows[0] == "k,W,T2,limit,alarm"
    assert len(rows) == 1 + (50 - 6) + (50 - 9)
    assert rows[1].startswith("7,7,")


def test_simulate_and_report(tmp_path, capsys):
    out = tmp_path / "run"
    assert cli.main(["simulate", "numerical", "--seed", "3", "--out-dir", str(out)]) == 0
    assert cli.main(["train", str(out / "train.csv"), "-o", str(out / "m.json")]) == 0
    rc = cli.main(
        ["monitor", str(out / "m.json"), str(out / "test.csv"), "--report", str(out / "r.json"),
         "--order", "exclude-first"] + FAULT
    )
    assert rc == 0
    capsys.readouterr()
    assert cli.main(["report", str(out / "r.json"), "--truth", str(out / "truth.csv")]) == 0
    text = capsys.readouterr().out
    assert "true episodes contained" in text
    assert len(cli.read_truth_csv(out / "truth.csv")) == 7
