import json

import numpy as np
import pytest

from pspp.cli import EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC, EXIT_OK, main
from pspp.io import ingest_csv


def test_simulate_then_filter(tmp_path, capsys):
    out = tmp_path / "sim"
    rc = main(["simulate", "--family", "LL", "--length", "80", "--n-series", "2",
               "--index", "1", "--format", "both", "--out", str(out)])
    assert rc == EXIT_OK
    report = json.loads((tmp_path / "sim.json").read_text())
    assert list(report) == ["config", "seed", "metrics", "snapshots", "series"]
    obs = ingest_csv(tmp_path / "sim.csv", time_column="t")
    assert np.array_equal(obs.values[:, 0], report["series"]["y1"])

    cfg = tmp_path / "f.toml"
    cfg.write_text('[model]\ndata = "sim.csv"\ntime_column = "t"\nw = [[1.0, 0.0], [0.0, 1.0]]\n'
                   '[output]\npath = "filtered"\nformat = "both"\n')
    assert main(["filter", "--config", str(cfg), "--out", str(tmp_path / "filt")]) == EXIT_OK
    rep = json.loads((tmp_path / "filt.json").read_text())
    assert rep["metrics"]["n_rows"] == 80
    assert len(rep["series"]["corr12"]) == 80


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('[run]\ncases = 5\nseed = 1\n')
    assert main(["sop-compare", "--config", str(cfg), "--cases", "7",
                 "--out", str(tmp_path / "s")]) == EXIT_OK
    rep = json.loads((tmp_path / "s.json").read_text())
    assert rep["metrics"]["cases"] == 7 and rep["seed"] == 1
    assert rep["metrics"]["max"]["cov_rel"] < 1e-12


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text('[model]\ndiscounts = [1.3, 0.4]\n')
    assert main(["filter", "--config", str(bad)]) == EXIT_CONFIG
    assert "discount out of (0,1]" in capsys.readouterr().err

    data = tmp_path / "d.csv"
    data.write_text("a,b\n1,2\n3,\n")
    assert main(["filter", "--data", str(data), "--discounts", "0.9,0.9"]) == EXIT_DATA

    data.write_text("a,b\n1,2\n3,4\n")
    assert main(["filter", "--data", str(data)]) == EXIT_CONFIG
    assert main(["filter", "--data", str(data), "--discounts", "0.9,0.9",
                 "--b", "[[1.0, 0.0, 0.0]]"]) == EXIT_CONFIG

    # V0 tiny and P0 singular make the first forecast covariance singular
    assert main(["filter", "--data", str(data), "--w", "[[0.0, 0.0], [0.0, 0.0]]",
                 "--p0", "[[0.0, 0.0], [0.0, 0.0]]", "--v0", "[[1e-300, 0.0], [0.0, 1.0]]",
                 "--out", str(tmp_path / "x")]) == EXIT_NUMERIC


def test_reproduce_tables_small(tmp_path, capsys):
    rc = main(["reproduce-tables", "--families", "LL", "--n-series", "3", "--length", "100",
               "--snapshot-times", "50,100", "--out", str(tmp_path / "t"), "--format", "both"])
    assert rc == EXIT_OK
    rep = json.loads((tmp_path / "t.json").read_text())
    assert len(rep["metrics"]["rows"]) == 2 and len(rep["snapshots"]["rows"]) == 3
    assert (tmp_path / "t.metrics.csv").exists()


def test_postulate_check_small(tmp_path):
    rc = main(["postulate-check", "--draws", "20000", "--cases", "25",
               "--out", str(tmp_path / "p")])
    assert rc == EXIT_OK
    rep = json.loads((tmp_path / "p.json").read_text())
    assert rep["metrics"]["theorem1"]["equivalent"] == 25
    assert rep["metrics"]["wishart"]["abs_diff"] < 1e-9


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as info:
        main(["simulate", "--length", "abc"])
    assert info.value.code == 2
