"""Command line interface: config parsing, CSV output, exit codes."""

import json

import pytest

from sbcc.cli import (
    CSV_HEADER,
    MODEL_HEADER,
    ConfigError,
    main,
    parse_config_file,
)

FAST = ["--T", "16", "--L", "4", "--frames", "2", "--w", "2", "--i2", "3",
        "--seed", "5"]


def test_config_file_parsing(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text(
        "# comment line\n"
        "T = 32\n"
        "snr = 1.0, 2.0   # trailing comment\n"
        "gamma = none\n"
        "noiseless = false\n"
        "mode = winext\n"
        "\n"
    )
    cfg = parse_config_file(str(p))
    assert cfg == {"T": 32, "snr": [1.0, 2.0], "gamma": None,
                   "noiseless": False, "mode": "winext"}


def test_config_file_unknown_key(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("T = 32\nwindow = 3\n")
    with pytest.raises(ConfigError, match=r"bad\.cfg:2.*unknown key 'window'"):
        parse_config_file(str(p))


def test_config_file_bad_value(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("T = many\n")
    with pytest.raises(ConfigError, match=r"bad\.cfg:1"):
        parse_config_file(str(p))


def test_config_file_missing_equals(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("just words\n")
    with pytest.raises(ConfigError, match="key=value"):
        parse_config_file(str(p))


def test_simulate_csv_output(tmp_path):
    out = tmp_path / "run.csv"
    rc = main(["simulate", *FAST, "--snr", "2.0", "-o", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 2
    row = lines[1].split(",")
    assert row[0] == "2" and row[1] == "eb" and row[2] == "2"
    assert len(row) == len(CSV_HEADER.split(","))


def test_simulate_deterministic_bytes(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["simulate", *FAST, "--snr", "1.5,2.5"]
    assert main([*argv, "-o", str(a)]) == 0
    assert main([*argv, "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) == 3


def test_simulate_noiseless_row(tmp_path):
    out = tmp_path / "clean.csv"
    rc = main(["simulate", *FAST, "--noiseless", "-o", str(out)])
    assert rc == 0
    row = out.read_text().splitlines()[1].split(",")
    assert row[0] == "nan"
    assert float(row[3]) == 0.0  # ber
    assert float(row[12]) == pytest.approx(1 / 3)  # throughput


def test_simulate_flag_overrides_config(tmp_path, capsys):
    p = tmp_path / "run.cfg"
    p.write_text("T = 16\nL = 4\nframes = 2\nw = 2\ni2 = 3\nseed = 5\n"
                 "snr = 9.0\n")
    rc = main(["simulate", "--config", str(p), "--snr", "2.0"])
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[1].split(",")[0] == "2"


def test_simulate_requires_snr():
    assert main(["simulate", *FAST]) == 2


def test_w_alias_conflict(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("w = 2\nw_init = 3\n")
    rc = main(["simulate", "--config", str(p), "--snr", "2.0",
               "--T", "16", "--L", "4", "--frames", "1"])
    assert rc == 2


def test_bad_output_path_is_io_error(tmp_path):
    rc = main(["simulate", *FAST, "--snr", "2.0",
               "-o", str(tmp_path / "missing" / "out.csv")])
    assert rc == 3


def test_model_output(tmp_path):
    out = tmp_path / "model.csv"
    rc = main(["model", "--p", "0.01", "--q", "0.001", "--L", "10,100",
               "--frames", "20000", "--seed", "1", "-o", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == MODEL_HEADER
    assert len(lines) == 3
    for line in lines[1:]:
        cells = line.split(",")
        assert cells[0] == "0.01" and cells[3] == "20000"
        assert cells[7] == "1"  # within 3 sigma


def test_model_rejects_empty_L():
    assert main(["model", "--p", "0.1", "--q", "0.1", "--L", ","]) == 2


def test_diagnose_json_lines(tmp_path):
    out = tmp_path / "diag.jsonl"
    rc = main(["diagnose", *FAST, "--noiseless", "--frame", "1",
               "--blocks", "0,2", "-o", str(out)])
    assert rc == 0
    recs = [json.loads(line) for line in out.read_text().splitlines()]
    assert recs[0]["type"] == "frame"
    assert [r["block"] for r in recs[1:]] == [0, 1, 2, 3]
    assert all(r["frame_seed"] == 1 for r in recs)
    assert "decision_llrs" in recs[1]["data"]
    assert "decision_llrs" not in recs[2]["data"]


def test_diagnose_block_out_of_range():
    rc = main(["diagnose", *FAST, "--noiseless", "--blocks", "4"])
    assert rc == 2


def test_diagnose_needs_snr_or_noiseless():
    assert main(["diagnose", *FAST]) == 2
