# fpu_lab/utils/run_config.py

import logging
import os
from typing import Mapping

from config import (
    DEFAULT_N_SITES, DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_INITIAL_MODE, DEFAULT_AMPLITUDE,
    DEFAULT_INTEGRATOR, DEFAULT_STEP_LEAPFROG, DEFAULT_STEP_SPECTRAL, DEFAULT_T_END,
    DEFAULT_SAMPLES_PER_DECADE, DEFAULT_PACKET_SIZE, DEFAULT_SWEEP_AMPLITUDES, DEFAULT_SWEEP_WORKERS,
    OUTPUT_DIR_ENV_VAR, DEFAULT_OUTPUT_DIR
)
from mathematical_functions.errors import ConfigError, FileAccessError
from mathematical_functions.experiment_runner import ExperimentConfig
from mathematical_functions.integrators import IntegratorKind
from mathematical_functions.lattice_core import ModelParams
from mathematical_functions.mode_transform import amplitude_from_energy
from utils.validation import (
    validate_positive_numeric_input, validate_non_negative_numeric_input,
    validate_positive_integer_input, validate_power_of_two_input, validate_choice_input,
    validate_positive_list_input
)

logger = logging.getLogger(__name__)
if not logger.handlers:
    logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')

EXPERIMENT_KEYS = (
    "n", "alpha", "beta", "mode", "amplitude", "energy", "integrator",
    "h", "t_end", "samples_per_decade", "packet_size",
)
SWEEP_KEYS = ("amplitudes", "workers")
OUTPUT_KEYS = ("out",)
KNOWN_KEYS = EXPERIMENT_KEYS + SWEEP_KEYS + OUTPUT_KEYS

INTEGRATOR_CHOICES = ("leapfrog", "spectral", "spectral_split")


def normalize_key(key: str) -> str:
    """'--t-end', 't-end' and 't_end' all name the same setting."""
    return key.strip().lstrip("-").lower().replace("-", "_")


def read_config_file(path: str) -> dict[str, str]:
    """
    Reads a flat key=value file. Blank lines and lines starting with '#' are skipped.

    Raises:
        FileAccessError: If the file cannot be read.
        ConfigError: If a line is malformed or names an unknown key.
    """
    try:
        with open(path, encoding="utf-8") as handle:
            lines = handle.readlines()
    except OSError as e:
        raise FileAccessError(path, f"cannot read config file ({e.strerror or e})") from e

    settings = {}
    for line_number, raw_line in enumerate(lines, start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_number}", f"expected 'key = value', got '{line}'")
        key, value = line.split("=", 1)
        key = normalize_key(key)
        if key not in KNOWN_KEYS:
            raise ConfigError(key, f"unknown key in {path} (line {line_number})")
        settings[key] = value.strip()
    logger.info(f"Read {len(settings)} setting(s) from {path}.")
    return settings


def merge_settings(overrides: Mapping[str, str | None] | None = None, config_file: str | None = None) -> dict[str, str]:
    """
    Combines config-file values with flag values; flags win. `None` flag values are ignored.

    Raises:
        ConfigError: For unknown keys.
    """
    merged = read_config_file(config_file) if config_file else {}
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        key = normalize_key(key)
        if key not in KNOWN_KEYS:
            raise ConfigError(key, "unknown setting")
        merged[key] = str(value)
    return merged


def _take(settings: Mapping[str, str], key: str, validator, default, *extra):
    if key not in settings:
        return default
    is_valid, value = validator(settings[key], *extra, key) if extra else validator(settings[key], key)
    if not is_valid:
        raise ConfigError(key, value)
    return value


def parse_config(overrides: Mapping[str, str | None] | None = None, config_file: str | None = None) -> ExperimentConfig:
    """
    Builds the experiment configuration from flags and an optional key=value file.

    Defaults: N=512, alpha=0.25, beta=0, mode 1, amplitude 40, leap-frog with h=0.02
    (spectral: h=1.0), t_end=1e4, 20 samples per decade, packets of 8 modes.
    `energy` may replace `amplitude`: the harmonic energy placed on the initial mode.

    Args:
        overrides (Mapping[str, str | None]): Flag values keyed by setting name.
        config_file (str, optional): Path to a key=value file.

    Returns:
        ExperimentConfig: The validated configuration.

    Raises:
        ConfigError: Naming the offending key for unknown keys, non-numeric values or violated invariants.
        FileAccessError: If the config file cannot be read.
    """
    settings = merge_settings(overrides, config_file)

    n_sites = _take(settings, "n", validate_power_of_two_input, DEFAULT_N_SITES)
    alpha = _take(settings, "alpha", validate_non_negative_numeric_input, DEFAULT_ALPHA)
    beta = _take(settings, "beta", validate_non_negative_numeric_input, DEFAULT_BETA)
    mode = _take(settings, "mode", validate_positive_integer_input, DEFAULT_INITIAL_MODE)
    integrator_name = _take(settings, "integrator", validate_choice_input, DEFAULT_INTEGRATOR, INTEGRATOR_CHOICES)
    integrator = IntegratorKind.parse(integrator_name)
    default_h = DEFAULT_STEP_LEAPFROG if integrator is IntegratorKind.LEAPFROG else DEFAULT_STEP_SPECTRAL
    h = _take(settings, "h", validate_positive_numeric_input, default_h)
    t_end = _take(settings, "t_end", validate_positive_numeric_input, DEFAULT_T_END)
    samples_per_decade = _take(settings, "samples_per_decade", validate_positive_integer_input, DEFAULT_SAMPLES_PER_DECADE)
    packet_size = _take(settings, "packet_size", validate_positive_integer_input, DEFAULT_PACKET_SIZE)

    if "energy" in settings and "amplitude" in settings:
        raise ConfigError("energy", "cannot be combined with amplitude; give one of them")
    if "energy" in settings:
        energy = _take(settings, "energy", validate_positive_numeric_input, None)
        if mode > n_sites // 2:
            raise ConfigError("mode", f"must be an integer in [1, {n_sites // 2}], got {mode}")
        amplitude = amplitude_from_energy(mode, energy, n_sites)
        logger.info(f"Initial energy {energy} on mode {mode} corresponds to amplitude {amplitude!r}.")
    else:
        amplitude = _take(settings, "amplitude", validate_positive_numeric_input, DEFAULT_AMPLITUDE)

    try:
        params = ModelParams(n_sites, alpha=alpha, beta=beta)
    except ValueError as e:
        raise ConfigError("n", str(e)) from None
    return ExperimentConfig(
        params=params,
        integrator=integrator,
        h=h,
        t_end=t_end,
        initial_mode=mode,
        initial_amplitude=amplitude,
        samples_per_decade=samples_per_decade,
        packet_size=packet_size,
    )


def parse_sweep_settings(settings: Mapping[str, str]) -> tuple[list[float], int]:
    """
    Amplitude list and worker count for `sweep`.

    Raises:
        ConfigError: If the amplitude list or the worker count is invalid.
    """
    amplitudes = _take(settings, "amplitudes", validate_positive_list_input, list(DEFAULT_SWEEP_AMPLITUDES))
    workers = _take(settings, "workers", validate_positive_integer_input, DEFAULT_SWEEP_WORKERS)
    return amplitudes, workers


def resolve_output_dir(settings: Mapping[str, str]) -> str:
    """--out first, then the FPU_LAB_OUT environment variable, then the default directory."""
    if settings.get("out"):
        return settings["out"]
    return os.environ.get(OUTPUT_DIR_ENV_VAR) or DEFAULT_OUTPUT_DIR
