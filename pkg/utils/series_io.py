# fpu_lab/utils/series_io.py

import logging
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import pandas as pd

from config import APP_VERSION, FLOAT_FORMAT, SERIES_COLUMNS, SWEEP_SUMMARY_COLUMNS
from mathematical_functions.errors import FileAccessError
from mathematical_functions.experiment_runner import RelaxationRecord
from mathematical_functions.mode_transform import EnergySpectrum
from utils.helper_functions import (
    MISSING_VALUE, format_amplitude_tag, format_optional_real, format_real, parse_optional_real
)

logger = logging.getLogger(__name__)
if not logger.handlers:
    logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')

FOOTER_KEYS = ("t_eq_inst", "t_eq_packet", "max_drift")


@dataclass
class RunManifest:
    """Everything needed to repeat a run: the configuration, the program version and the files it wrote."""
    config: dict
    started: str
    finished: str
    outputs: list[str] = field(default_factory=list)
    version: str = APP_VERSION


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(parent, exist_ok=True)
    except OSError as e:
        raise FileAccessError(parent, f"cannot create directory ({e.strerror or e})") from e


def _write_csv(frame: pd.DataFrame, path: str, footer: Sequence[str] = ()) -> None:
    _ensure_parent(path)
    try:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            frame.to_csv(handle, index=False, float_format=FLOAT_FORMAT, na_rep=MISSING_VALUE, lineterminator="\n")
            for line in footer:
                handle.write(f"# {line}\n")
    except OSError as e:
        raise FileAccessError(path, f"cannot write ({e.strerror or e})") from e
    logger.info(f"Wrote {len(frame)} row(s) to {path}.")


def _read_csv(path: str) -> pd.DataFrame:
    try:
        return pd.read_csv(path, comment="#", float_precision="round_trip", na_values=[MISSING_VALUE])
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise FileAccessError(path, f"cannot read CSV ({e})") from e


# --- Time series ---

def series_frame(record: RelaxationRecord) -> pd.DataFrame:
    return pd.DataFrame({
        "t": record.times,
        "n_eff_inst": record.n_eff_inst,
        "n_eff_packet": record.n_eff_packet,
        "e_total": record.energies,
        "drift": record.drifts,
    }, columns=list(SERIES_COLUMNS))


def series_footer(record: RelaxationRecord) -> list[str]:
    lines = [
        f"t_eq_inst={format_optional_real(record.t_eq_instantaneous)}",
        f"t_eq_packet={format_optional_real(record.t_eq_packet)}",
        f"max_drift={format_real(record.max_energy_drift)}",
    ]
    if record.failure:
        lines.append(f"failure={record.failure}")
    return lines


def write_series(record: RelaxationRecord, path: str) -> None:
    """
    Writes the sampled history as CSV: header "t,n_eff_inst,n_eff_packet,e_total,drift",
    one row per sample in time order, every real at 17 significant digits, then
    '#' footer lines with the T_eq values and the maximum drift.

    Raises:
        FileAccessError: If the destination cannot be written.
    """
    _write_csv(series_frame(record), path, series_footer(record))


def read_series_footer(path: str) -> dict[str, float | None | str]:
    """Parses the '# key=value' footer of a series file; absent T_eq values come back as None."""
    footer = {}
    try:
        with open(path, encoding="utf-8") as handle:
            for line in handle:
                if not line.startswith("#") or "=" not in line:
                    continue
                key, value = line[1:].strip().split("=", 1)
                footer[key] = parse_optional_real(value) if key in FOOTER_KEYS else value
    except OSError as e:
        raise FileAccessError(path, f"cannot read ({e.strerror or e})") from e
    return footer


def read_series(path: str) -> pd.DataFrame:
    """
    Reads a series CSV back. Values are bit-identical to the written record.

    Raises:
        FileAccessError: If the file is unreadable or lacks the series columns.
    """
    frame = _read_csv(path)
    missing = [c for c in SERIES_COLUMNS if c not in frame.columns]
    if missing:
        raise FileAccessError(path, f"not a series file, missing column(s) {', '.join(missing)}")
    return frame


# --- Spectra ---

def spectra_columns(n_sites: int) -> list[str]:
    return ["t"] + [f"E_{k}" for k in range(n_sites)]


def write_spectra(spectra: Sequence[EnergySpectrum], path: str) -> None:
    """
    Writes one row per sample time: t, then the N standing-wave mode energies.

    Raises:
        ValueError: If the spectra differ in length.
        FileAccessError: If the destination cannot be written.
    """
    if not spectra:
        frame = pd.DataFrame(columns=["t"])
    else:
        sizes = {s.energies.shape[0] for s in spectra}
        if len(sizes) != 1:
            raise ValueError(f"Spectra have inconsistent lengths: {sorted(sizes)}.")
        n_sites = sizes.pop()
        data = np.column_stack([[s.t for s in spectra], np.vstack([s.energies for s in spectra])])
        frame = pd.DataFrame(data, columns=spectra_columns(n_sites))
    _write_csv(frame, path)


def read_spectra(path: str) -> list[EnergySpectrum]:
    """
    Reads a spectra CSV back into EnergySpectrum objects (entry 0 is the zero mode).

    Raises:
        FileAccessError: If the file is unreadable or is not a spectra file.
    """
    frame = _read_csv(path)
    energy_columns = [c for c in frame.columns if c != "t"]
    if "t" not in frame.columns or energy_columns != spectra_columns(len(energy_columns))[1:]:
        raise FileAccessError(path, "not a spectra file, expected columns t,E_0,...,E_{N-1}")
    times = frame["t"].to_numpy(dtype=float)
    energies = frame[energy_columns].to_numpy(dtype=float)
    return [EnergySpectrum(energies=row, t=float(t)) for t, row in zip(times, energies)]


# --- Sweep output ---

def sweep_file_name(prefix: str, amplitude: float) -> str:
    return f"{prefix}_{format_amplitude_tag(amplitude)}.csv"


def sweep_summary_frame(records: Sequence[RelaxationRecord]) -> pd.DataFrame:
    rows = [{
        "amplitude": r.config.initial_amplitude,
        "t_eq_inst": r.t_eq_instantaneous,
        "t_eq_packet": r.t_eq_packet,
        "max_drift": r.max_energy_drift,
    } for r in records]
    return pd.DataFrame(rows, columns=list(SWEEP_SUMMARY_COLUMNS))


def write_sweep_summary(records: Sequence[RelaxationRecord], path: str) -> None:
    """Writes "amplitude,t_eq_inst,t_eq_packet,max_drift", one row per sweep entry in input order."""
    _write_csv(sweep_summary_frame(records), path)


def write_sweep(records: Sequence[RelaxationRecord], out_dir: str) -> list[str]:
    """
    Writes one series file and one spectra file per amplitude, plus the summary.

    Returns:
        list[str]: Paths written, summary last.
    """
    paths = []
    for record in records:
        amplitude = record.config.initial_amplitude
        series_path = os.path.join(out_dir, sweep_file_name("series", amplitude))
        spectra_path = os.path.join(out_dir, sweep_file_name("spectra", amplitude))
        write_series(record, series_path)
        write_spectra(record.spectra, spectra_path)
        paths.extend([series_path, spectra_path])
    summary_path = os.path.join(out_dir, "sweep_summary.csv")
    write_sweep_summary(records, summary_path)
    paths.append(summary_path)
    return paths


# --- Manifest ---

def _render_manifest_value(value) -> str:
    if isinstance(value, float):
        return format_real(value)
    if isinstance(value, (list, tuple)):
        return ",".join(_render_manifest_value(v) for v in value)
    return str(value)


def write_manifest(manifest: RunManifest, path: str) -> None:
    """
    Writes the manifest as key=value lines. The configuration keys are the ones
    `--config` accepts, so the file can be fed back to repeat the run.
    """
    lines = [f"# {os.path.basename(path)}", f"# version={manifest.version}",
             f"# started={manifest.started}", f"# finished={manifest.finished}"]
    lines += [f"# output={p}" for p in manifest.outputs]
    lines += [f"{key}={_render_manifest_value(value)}" for key, value in manifest.config.items()]
    _ensure_parent(path)
    try:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write("\n".join(lines) + "\n")
    except OSError as e:
        raise FileAccessError(path, f"cannot write ({e.strerror or e})") from e
    logger.info(f"Wrote manifest to {path}.")


def read_manifest(path: str) -> dict[str, str]:
    """Reads both the config lines and the '#'-prefixed metadata lines of a manifest."""
    entries = {}
    try:
        with open(path, encoding="utf-8") as handle:
            for line in handle:
                line = line.strip().lstrip("#").strip()
                if "=" in line:
                    key, value = line.split("=", 1)
                    if key == "output":
                        entries.setdefault("outputs", []).append(value)
                    else:
                        entries[key] = value
    except OSError as e:
        raise FileAccessError(path, f"cannot read ({e.strerror or e})") from e
    return entries
