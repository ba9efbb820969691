# fpu_lab/main_app.py

import argparse
import logging
import os
import sys
from datetime import datetime, timezone

import numpy as np
import pandas as pd

import config
from mathematical_functions.errors import (
    ConfigError, FileAccessError, FpuLabError, IntegrationBlowUpError, StepSizeError
)
from mathematical_functions.estimators import EstimatorVariant, n_eff
from mathematical_functions.experiment_runner import detect_equilibrium, run_experiment, sweep
from mathematical_functions.invariant_checks import run_invariant_checks
from utils.helper_functions import format_number
from utils.run_config import merge_settings, parse_config, parse_sweep_settings, resolve_output_dir
from utils.series_io import (
    RunManifest, read_series, read_spectra, write_manifest, write_series, write_spectra, write_sweep
)
from utils.validation import validate_positive_integer_input

logger = logging.getLogger(__name__)

# Most specific class first.
EXIT_CODES = (
    (ConfigError, config.EXIT_USAGE),
    (StepSizeError, config.EXIT_USAGE),
    (FileAccessError, config.EXIT_IO),
    (IntegrationBlowUpError, config.EXIT_BLOWUP),
    (FpuLabError, config.EXIT_USAGE),
)

EXPERIMENT_FLAGS = (
    "n", "alpha", "beta", "mode", "amplitude", "energy", "integrator",
    "h", "t_end", "samples_per_decade", "packet_size",
)


def exit_code_for(error: Exception) -> int:
    for error_class, code in EXIT_CODES:
        if isinstance(error, error_class):
            return code
    return config.EXIT_USAGE


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def setup_logging(verbose: bool = False, quiet: bool = False) -> None:
    """Diagnostics go to stderr; data only ever goes to files."""
    level = logging.DEBUG if verbose else logging.WARNING if quiet else getattr(logging, config.LOGGING_LEVEL)
    logging.basicConfig(level=level, format=config.LOGGING_FORMAT, stream=sys.stderr, force=True)


# --- Argument parsing ---

def _experiment_arguments() -> argparse.ArgumentParser:
    # Values stay strings here; parse_config validates them and names the offending key.
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group("experiment")
    group.add_argument("--n", help=f"chain length, a power of two (default {config.DEFAULT_N_SITES})")
    group.add_argument("--alpha", help=f"cubic coupling (default {config.DEFAULT_ALPHA})")
    group.add_argument("--beta", help=f"quartic coupling, leap-frog only (default {config.DEFAULT_BETA})")
    group.add_argument("--mode", help=f"initially excited mode (default {config.DEFAULT_INITIAL_MODE})")
    excitation = group.add_mutually_exclusive_group()
    excitation.add_argument("--amplitude", help=f"initial mode amplitude (default {config.DEFAULT_AMPLITUDE})")
    excitation.add_argument("--energy", help="initial harmonic energy of the mode, instead of --amplitude")
    group.add_argument("--integrator", help="leapfrog or spectral (default leapfrog)")
    group.add_argument("--h", help=f"step size (default {config.DEFAULT_STEP_LEAPFROG} leap-frog, "
                                   f"{config.DEFAULT_STEP_SPECTRAL} spectral)")
    group.add_argument("--t-end", dest="t_end", help=f"integration time (default {config.DEFAULT_T_END:g})")
    group.add_argument("--samples-per-decade", dest="samples_per_decade",
                       help=f"log-spaced samples per decade (default {config.DEFAULT_SAMPLES_PER_DECADE})")
    group.add_argument("--packet-size", dest="packet_size",
                       help=f"modes per energy packet (default {config.DEFAULT_PACKET_SIZE})")
    group.add_argument("--config", help="key=value file; flags override its values")
    group.add_argument("--out", help=f"output directory (default ${config.OUTPUT_DIR_ENV_VAR} or ./fpu_lab_output)")
    return parent


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="log every sample")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="log warnings and errors only")

    parser = argparse.ArgumentParser(
        prog=config.APP_NAME,
        description="Relaxation to equipartition in the alpha-FPU chain.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {config.APP_VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    experiment = _experiment_arguments()
    subparsers.add_parser("run", parents=[common, experiment], help="run a single experiment")

    sweep_parser = subparsers.add_parser("sweep", parents=[common, experiment], help="run one experiment per amplitude")
    sweep_parser.add_argument("--amplitudes", help="comma-separated amplitudes (default 5,10,20,30,35,40)")
    sweep_parser.add_argument("--workers", help="parallel worker processes (default 1)")

    estimate = subparsers.add_parser("estimate", parents=[common],
                                     help="recompute both estimators from a saved spectra file")
    estimate.add_argument("--spectra", required=True, help="spectra CSV written by run or sweep")
    estimate.add_argument("--series", help="series CSV to compare the recomputed columns against")
    estimate.add_argument("--packet-size", dest="packet_size", default=str(config.DEFAULT_PACKET_SIZE),
                          help=f"modes per energy packet (default {config.DEFAULT_PACKET_SIZE})")
    estimate.add_argument("--out", help="output directory")

    subparsers.add_parser("check", parents=[common], help="run the built-in invariant suite")
    return parser


def _overrides(args: argparse.Namespace, keys) -> dict:
    return {key: getattr(args, key, None) for key in keys}


# --- Subcommands ---

def _report(record, label: str = "") -> None:
    prefix = f"{label}: " if label else ""
    status = f" FAILED ({record.failure})" if record.failure else ""
    print(f"{prefix}T_eq inst = {format_number(record.t_eq_instantaneous)}, "
          f"T_eq packets = {format_number(record.t_eq_packet)}, "
          f"max drift = {format_number(record.max_energy_drift, 3)}{status}")


def command_run(args: argparse.Namespace) -> int:
    settings = merge_settings(_overrides(args, EXPERIMENT_FLAGS + ("out",)), args.config)
    experiment = parse_config(settings)
    out_dir = resolve_output_dir(settings)
    series_path = os.path.join(out_dir, "series.csv")
    spectra_path = os.path.join(out_dir, "spectra.csv")
    manifest_path = os.path.join(out_dir, "manifest.txt")

    started = _timestamp()
    try:
        record = run_experiment(experiment)
    except IntegrationBlowUpError as e:
        if e.partial_record is not None:
            write_series(e.partial_record, series_path)
            write_spectra(e.partial_record.spectra, spectra_path)
            logger.error(f"Partial record written to {series_path}.")
        raise

    write_series(record, series_path)
    write_spectra(record.spectra, spectra_path)
    write_manifest(RunManifest(config=experiment.as_dict(), started=started, finished=_timestamp(),
                               outputs=[series_path, spectra_path]), manifest_path)
    _report(record)
    return config.EXIT_OK


def command_sweep(args: argparse.Namespace) -> int:
    settings = merge_settings(_overrides(args, EXPERIMENT_FLAGS + ("amplitudes", "workers", "out")), args.config)
    if "amplitude" in settings or "energy" in settings:
        raise ConfigError("amplitude", "sweep takes --amplitudes, not a single amplitude or energy")
    base = parse_config(settings)
    amplitudes, workers = parse_sweep_settings(settings)
    out_dir = resolve_output_dir(settings)

    started = _timestamp()
    records = sweep(base, amplitudes, workers=workers)
    outputs = write_sweep(records, out_dir)
    manifest_config = base.as_dict()
    manifest_config.pop("amplitude")
    manifest_config["amplitudes"] = [float(a) for a in amplitudes]
    manifest_config["workers"] = workers
    write_manifest(RunManifest(config=manifest_config, started=started, finished=_timestamp(), outputs=outputs),
                   os.path.join(out_dir, "manifest.txt"))

    for record in records:
        _report(record, label=f"A = {format_number(record.config.initial_amplitude)}")
    failed = [r for r in records if r.failure]
    if failed:
        logger.error(f"{len(failed)} of {len(records)} sweep entries failed.")
        return config.EXIT_BLOWUP
    return config.EXIT_OK


def command_estimate(args: argparse.Namespace) -> int:
    is_valid, packet_size = validate_positive_integer_input(args.packet_size, "packet_size")
    if not is_valid:
        raise ConfigError("packet_size", packet_size)
    spectra = read_spectra(args.spectra)
    if not spectra:
        raise FileAccessError(args.spectra, "contains no samples")
    n_sites = spectra[0].energies.shape[0]
    if n_sites % packet_size != 0:
        raise ConfigError("packet_size", f"must divide the spectrum length {n_sites}, got {packet_size}")

    instantaneous = EstimatorVariant.instantaneous()
    packets = EstimatorVariant.packets(packet_size)
    frame = pd.DataFrame({
        "t": [s.t for s in spectra],
        "n_eff_inst": [n_eff(s, instantaneous).n_eff for s in spectra],
        "n_eff_packet": [n_eff(s, packets).n_eff for s in spectra],
    })
    out_dir = resolve_output_dir({"out": args.out} if args.out else {})
    estimate_path = os.path.join(out_dir, "estimate.csv")
    os.makedirs(out_dir, exist_ok=True)
    try:
        frame.to_csv(estimate_path, index=False, float_format=config.FLOAT_FORMAT, lineterminator="\n")
    except OSError as e:
        raise FileAccessError(estimate_path, f"cannot write ({e.strerror or e})") from e
    logger.info(f"Wrote {len(frame)} estimate(s) to {estimate_path}.")

    times = frame["t"].to_numpy()
    print(f"T_eq inst = {format_number(detect_equilibrium(times, frame['n_eff_inst'].to_numpy()))}, "
          f"T_eq packets = {format_number(detect_equilibrium(times, frame['n_eff_packet'].to_numpy()))}")

    if args.series:
        stored = read_series(args.series)
        matches = (len(stored) == len(frame)
                   and all(np.array_equal(stored[c].to_numpy(), frame[c].to_numpy())
                           for c in ("t", "n_eff_inst", "n_eff_packet")))
        if not matches:
            logger.error(f"Recomputed estimators differ from {args.series}.")
            return config.EXIT_CHECK_FAILED
        logger.info(f"Recomputed estimators match {args.series} exactly.")
    return config.EXIT_OK


def command_check(args: argparse.Namespace) -> int:
    results = run_invariant_checks()
    for result in results:
        print(f"{'ok  ' if result['passed'] else 'FAIL'} {result['name']}: {result['detail']}")
    if all(r['passed'] for r in results):
        return config.EXIT_OK
    return config.EXIT_CHECK_FAILED


COMMANDS = {
    "run": command_run,
    "sweep": command_sweep,
    "estimate": command_estimate,
    "check": command_check,
}


def cli_main(argv: list[str] | None = None) -> int:
    """
    Entry point of `fpu-lab run|sweep|estimate|check`.

    Returns:
        int: 0 on success, 2 usage error, 3 I/O error, 4 numerical blow-up, 5 failed check.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 0 for --help/--version and 2 for bad usage.
        return config.EXIT_OK if not e.code else config.EXIT_USAGE

    setup_logging(verbose=args.verbose, quiet=args.quiet)
    try:
        return COMMANDS[args.command](args)
    except FpuLabError as e:
        code = exit_code_for(e)
        logger.error(f"{args.command} failed: {e}")
        print(f"{config.APP_NAME}: error: {e}", file=sys.stderr)
        return code
    except OSError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"{config.APP_NAME}: error: {e}", file=sys.stderr)
        return config.EXIT_IO


if __name__ == "__main__":
    sys.exit(cli_main())
