# tests/test_main_app.py

import numpy as np
import pytest

from main_app import build_parser, cli_main, exit_code_for
from mathematical_functions.errors import ConfigError, FileAccessError, IntegrationBlowUpError
from utils.series_io import read_manifest, read_series, read_series_footer

SMALL_RUN = ["--n", "64", "--amplitude", "2", "--t-end", "20", "--h", "0.1", "--samples-per-decade", "10"]


@pytest.fixture
def small_run(tmp_path):
    out_dir = tmp_path / "run"
    assert cli_main(["run", *SMALL_RUN, "--out", str(out_dir), "-q"]) == 0
    return out_dir

# --- Argument handling ---

def test_no_arguments_is_a_usage_error():
    assert cli_main([]) == 2

def test_version_exits_cleanly(capsys):
    assert cli_main(["--version"]) == 0
    assert "fpu-lab" in capsys.readouterr().out

def test_amplitude_and_energy_are_exclusive():
    assert cli_main(["run", "--amplitude", "2", "--energy", "1"]) == 2

def test_invalid_chain_length(tmp_path, capsys):
    assert cli_main(["run", "--n", "500", "--out", str(tmp_path)]) == 2
    assert "power of two" in capsys.readouterr().err

def test_parser_keeps_flag_values_as_text():
    args = build_parser().parse_args(["run", "--t-end", "1e3"])
    assert args.t_end == "1e3"
    assert args.command == "run"

def test_exit_code_mapping():
    assert exit_code_for(ConfigError("n", "bad")) == 2
    assert exit_code_for(FileAccessError("x.csv", "missing")) == 3
    assert exit_code_for(IntegrationBlowUpError("overflow")) == 4

# --- run ---

def test_run_writes_outputs(small_run, capsys):
    assert {p.name for p in small_run.iterdir()} == {"series.csv", "spectra.csv", "manifest.txt"}
    frame = read_series(str(small_run / "series.csv"))
    assert frame["t"].iloc[0] == 0.0
    assert frame["t"].iloc[-1] == 20.0
    assert "max_drift" in read_series_footer(str(small_run / "series.csv"))
    assert read_manifest(str(small_run / "manifest.txt"))["n"] == "64"

def test_run_prints_summary(tmp_path, capsys):
    assert cli_main(["run", *SMALL_RUN, "--out", str(tmp_path)]) == 0
    assert "T_eq inst" in capsys.readouterr().out

def test_rerun_from_manifest_is_identical(small_run, tmp_path):
    again = tmp_path / "again"
    assert cli_main(["run", "--config", str(small_run / "manifest.txt"), "--out", str(again), "-q"]) == 0
    first = read_series(str(small_run / "series.csv"))
    second = read_series(str(again / "series.csv"))
    for column in first.columns:
        np.testing.assert_array_equal(first[column].to_numpy(), second[column].to_numpy())

def test_output_path_that_is_a_file(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("", encoding="utf-8")
    assert cli_main(["run", *SMALL_RUN, "--out", str(blocker), "-q"]) == 3

def test_blow_up_exit_code_keeps_partial_series(tmp_path):
    with np.errstate(all="ignore"):
        code = cli_main(["run", "--n", "32", "--amplitude", "1e6", "--h", "0.5", "--t-end", "1000",
                         "--out", str(tmp_path), "-q"])
    assert code == 4
    footer = read_series_footer(str(tmp_path / "series.csv"))
    assert footer["failure"]

# --- estimate ---

def test_estimate_reproduces_series(small_run, tmp_path):
    code = cli_main(["estimate", "--spectra", str(small_run / "spectra.csv"),
                     "--series", str(small_run / "series.csv"), "--out", str(tmp_path), "-q"])
    assert code == 0
    assert (tmp_path / "estimate.csv").exists()

def test_estimate_detects_mismatch(small_run, tmp_path):
    code = cli_main(["estimate", "--spectra", str(small_run / "spectra.csv"), "--packet-size", "4",
                     "--series", str(small_run / "series.csv"), "--out", str(tmp_path), "-q"])
    assert code == 5

def test_estimate_missing_spectra(tmp_path):
    assert cli_main(["estimate", "--spectra", str(tmp_path / "absent.csv"), "--out", str(tmp_path)]) == 3

# --- sweep ---

def test_sweep_writes_one_series_per_amplitude(tmp_path, capsys):
    code = cli_main(["sweep", "--n", "32", "--t-end", "5", "--h", "0.1", "--samples-per-decade", "5",
                     "--amplitudes", "1,2.5", "--out", str(tmp_path)])
    assert code == 0
    names = {p.name for p in tmp_path.iterdir()}
    assert {"series_A1.csv", "series_A2p5.csv", "spectra_A1.csv", "spectra_A2p5.csv",
            "sweep_summary.csv", "manifest.txt"} <= names
    assert capsys.readouterr().out.count("T_eq inst") == 2

def test_sweep_rejects_single_amplitude(tmp_path):
    assert cli_main(["sweep", "--amplitude", "2", "--out", str(tmp_path)]) == 2

def test_sweep_with_failing_entry(tmp_path):
    with np.errstate(all="ignore"):
        code = cli_main(["sweep", "--n", "32", "--t-end", "1000", "--h", "0.5", "--amplitudes", "1,1e6",
                         "--out", str(tmp_path), "-q"])
    assert code == 4
    assert (tmp_path / "sweep_summary.csv").exists()

# --- check ---

def test_check_passes(capsys):
    assert cli_main(["check", "-q"]) == 0
    output = capsys.readouterr().out
    assert "FAIL" not in output

# --- Desk-scale run ---

@pytest.mark.slow
def test_reference_run_summary(tmp_path, capsys):
    assert cli_main(["run", "--amplitude", "40", "--t-end", "1e4", "--out", str(tmp_path)]) == 0
    summary = [line for line in capsys.readouterr().out.splitlines() if "T_eq inst" in line]
    assert len(summary) == 1
    footer = read_series_footer(str(tmp_path / "series.csv"))
    assert footer["max_drift"] <= 1e-3
    assert footer["t_eq_inst"] is None
    assert summary[0].startswith("T_eq inst = none, T_eq packets = ")
    assert "max drift = " in summary[0]
    assert "FAILED" not in summary[0]
    assert float(read_manifest(str(tmp_path / "manifest.txt"))["amplitude"]) == 40.0
