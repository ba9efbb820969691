# mathematical_functions/experiment_runner.py

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.stats import linregress

from config import (
    DEFAULT_INITIAL_MODE, DEFAULT_AMPLITUDE, DEFAULT_PACKET_SIZE, DEFAULT_SAMPLES_PER_DECADE,
    EQUILIBRIUM_THRESHOLD_FRACTION, EQUILIBRIUM_MIN_SPAN_DECADES,
    LEAPFROG_DRIFT_TOLERANCE, SPECTRAL_DRIFT_TOLERANCE, DEFAULT_SWEEP_WORKERS
)
from mathematical_functions.errors import ConfigError, FpuLabError, IntegrationBlowUpError, StepSizeError
from mathematical_functions.estimators import EstimatorVariant, n_eff, equilibrium_asymptote
from mathematical_functions.integrators import IntegratorKind, StepSize, integrate
from mathematical_functions.lattice_core import ChainState, ModelParams, is_power_of_two, total_energy
from mathematical_functions.mode_transform import EnergySpectrum, excite_mode, standing_wave_energies, to_modes

logger = logging.getLogger(__name__)
if not logger.handlers:
    logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Everything a relaxation run depends on. Runs are fully deterministic (no seed).

    Raises:
        ConfigError: Naming the offending field when an invariant is violated.
    """
    params: ModelParams
    integrator: IntegratorKind
    h: float
    t_end: float
    initial_mode: int = DEFAULT_INITIAL_MODE
    initial_amplitude: float = DEFAULT_AMPLITUDE
    samples_per_decade: int = DEFAULT_SAMPLES_PER_DECADE
    packet_size: int = DEFAULT_PACKET_SIZE

    def __post_init__(self):
        n = self.params.n_sites
        if not is_power_of_two(n):
            raise ConfigError("n", f"number of sites must be a power of two, got {n}")
        if not isinstance(self.integrator, IntegratorKind):
            try:
                object.__setattr__(self, "integrator", IntegratorKind.parse(self.integrator))
            except ValueError as e:
                raise ConfigError("integrator", str(e)) from None
        try:
            StepSize(self.h).check_stability(self.integrator)
        except StepSizeError as e:
            raise ConfigError("h", str(e)) from None
        if self.integrator is IntegratorKind.SPECTRAL_SPLIT and self.params.beta != 0:
            raise ConfigError("beta", "the spectral integrator handles the alpha chain only (beta must be 0)")
        if not math.isfinite(self.t_end) or self.t_end <= 0:
            raise ConfigError("t_end", f"must be a positive finite time, got {self.t_end!r}")
        if not isinstance(self.initial_mode, (int, np.integer)) or not (1 <= self.initial_mode <= n // 2):
            raise ConfigError("mode", f"must be an integer in [1, {n // 2}], got {self.initial_mode!r}")
        if not math.isfinite(self.initial_amplitude) or self.initial_amplitude <= 0:
            raise ConfigError("amplitude", f"must be a positive finite number, got {self.initial_amplitude!r}")
        if not isinstance(self.samples_per_decade, (int, np.integer)) or self.samples_per_decade < 1:
            raise ConfigError("samples_per_decade", f"must be a positive integer, got {self.samples_per_decade!r}")
        if not isinstance(self.packet_size, (int, np.integer)) or self.packet_size < 1 or n % self.packet_size != 0:
            raise ConfigError("packet_size", f"must be a positive divisor of {n}, got {self.packet_size!r}")

    @property
    def drift_tolerance(self) -> float:
        if self.integrator is IntegratorKind.LEAPFROG:
            return LEAPFROG_DRIFT_TOLERANCE
        return SPECTRAL_DRIFT_TOLERANCE

    def as_dict(self) -> dict:
        return {
            'n': self.params.n_sites,
            'alpha': self.params.alpha,
            'beta': self.params.beta,
            'mode': self.initial_mode,
            'amplitude': self.initial_amplitude,
            'integrator': self.integrator.value,
            'h': self.h,
            't_end': self.t_end,
            'samples_per_decade': self.samples_per_decade,
            'packet_size': self.packet_size,
        }


@dataclass(frozen=True)
class RelaxationSample:
    t: float
    n_eff_inst: float
    n_eff_packet: float
    total_energy: float


@dataclass
class RelaxationRecord:
    """
    Sampled history of one run. Absent T_eq values mean the plateau was not
    sustained before t_end. `failure` is set for runs that blew up (partial record).
    """
    config: ExperimentConfig
    samples: list[RelaxationSample] = field(default_factory=list)
    spectra: list[EnergySpectrum] = field(default_factory=list)
    t_eq_instantaneous: float | None = None
    t_eq_packet: float | None = None
    max_energy_drift: float = 0.0
    energy_drift_slope: float = 0.0
    failure: str | None = None

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def n_eff_inst(self) -> np.ndarray:
        return np.array([s.n_eff_inst for s in self.samples])

    @property
    def n_eff_packet(self) -> np.ndarray:
        return np.array([s.n_eff_packet for s in self.samples])

    @property
    def energies(self) -> np.ndarray:
        return np.array([s.total_energy for s in self.samples])

    @property
    def drifts(self) -> np.ndarray:
        return relative_drift(self.energies)


def relative_drift(energies: np.ndarray) -> np.ndarray:
    """|E(t) - E(0)| / |E(0)| per sample (absolute difference when E(0) = 0)."""
    energies = np.asarray(energies, dtype=float)
    if energies.size == 0:
        return energies
    e0 = energies[0]
    scale = abs(e0) if e0 != 0 else 1.0
    return np.abs(energies - e0) / scale


# --- Sampling schedule ---

def sample_schedule(t_end: float, samples_per_decade: int, h: float) -> list[float]:
    """
    Log-spaced sample times from h to t_end, rounded to whole steps.

    Always starts at 0 and ends at t_end; duplicates after rounding are dropped.
    For t_end < h only the initial time is returned.

    Args:
        t_end (float): Final time.
        samples_per_decade (int): Grid density in log10 t.
        h (float): Integration step; every time except possibly t_end is a multiple of h.

    Returns:
        list[float]: Strictly increasing sample times.
    """
    if samples_per_decade < 1:
        raise ValueError("samples_per_decade must be a positive integer.")
    if h <= 0 or not math.isfinite(h):
        raise ValueError("Step h must be positive and finite.")
    n_end = t_end / h
    if n_end < 1.0 - 1e-9:
        return [0.0]
    last_whole = int(math.floor(n_end + 1e-9))
    n_points = int(math.ceil(samples_per_decade * math.log10(max(n_end, 1.0)) - 1e-9)) + 1
    grid = np.rint(np.logspace(0.0, math.log10(max(n_end, 1.0)), n_points)).astype(np.int64)
    steps = np.unique(np.clip(grid, 1, last_whole))
    times = [0.0] + [float(n) * h for n in steps]
    if abs(times[-1] - t_end) <= 1e-9 * max(h, t_end):
        times[-1] = float(t_end)
    else:
        times.append(float(t_end))
    return times


# --- Equilibrium detection ---

def detect_equilibrium(times: Sequence[float], values: Sequence[float], asymptote: float | None = None,
                       fraction: float = EQUILIBRIUM_THRESHOLD_FRACTION,
                       min_span_decades: float = EQUILIBRIUM_MIN_SPAN_DECADES) -> float | None:
    """
    Earliest sample time after which the series stays at or above fraction * asymptote.

    The run of qualifying samples must reach at least `min_span_decades` decades past
    its first time (a run starting at t = 0 always qualifies).

    Args:
        times (Sequence[float]): Increasing sample times.
        values (Sequence[float]): n_eff at those times.
        asymptote (float, optional): Plateau value; defaults to exp(-1/2).

    Returns:
        float | None: T_eq, or None if the threshold is never sustained.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size == 0 or times.size != values.size:
        raise ValueError("Equilibrium detection needs non-empty times and values of equal length.")
    asymptote = equilibrium_asymptote() if asymptote is None else asymptote
    threshold = fraction * asymptote

    below = np.flatnonzero(values < threshold)
    start = 0 if below.size == 0 else int(below[-1]) + 1
    if start >= times.size:
        return None
    t_star = float(times[start])
    if t_star > 0 and times[-1] < t_star * 10.0 ** min_span_decades:
        return None
    return t_star


# --- Runs ---

class _SpectrumSampler:
    """Computes both estimators and the total energy at every scheduled time."""

    def __init__(self, config: ExperimentConfig, sample_times: list[float]):
        self.config = config
        self.sample_times = sample_times
        self.instantaneous = EstimatorVariant.instantaneous()
        self.packets = EstimatorVariant.packets(config.packet_size)
        self.samples: list[RelaxationSample] = []
        self.spectra: list[EnergySpectrum] = []

    def __call__(self, state: ChainState) -> None:
        spectrum = standing_wave_energies(to_modes(state), self.config.params.n_sites)
        energy = total_energy(state, self.config.params)
        # Positions can stay finite while their squares overflow.
        if not (np.all(np.isfinite(spectrum.energies)) and math.isfinite(energy)):
            raise IntegrationBlowUpError(f"Energies overflowed at t = {state.t!r}.", time=state.t)
        sample = RelaxationSample(
            t=state.t,
            n_eff_inst=n_eff(spectrum, self.instantaneous).n_eff,
            n_eff_packet=n_eff(spectrum, self.packets).n_eff,
            total_energy=energy,
        )
        self.samples.append(sample)
        self.spectra.append(spectrum)
        logger.debug("t = %g: n_eff inst %.4f, packets %.4f.", sample.t, sample.n_eff_inst, sample.n_eff_packet)


def _finish_record(config: ExperimentConfig, sampler: _SpectrumSampler, failure: str | None = None) -> RelaxationRecord:
    record = RelaxationRecord(config=config, samples=list(sampler.samples), spectra=list(sampler.spectra), failure=failure)
    if not record.samples:
        return record
    times = record.times
    drifts = record.drifts
    record.max_energy_drift = float(np.max(drifts))
    if np.unique(times).size >= 2:
        record.energy_drift_slope = float(linregress(times, record.energies).slope)
    if failure is None:
        record.t_eq_instantaneous = detect_equilibrium(times, record.n_eff_inst)
        record.t_eq_packet = detect_equilibrium(times, record.n_eff_packet)
    return record


def run_experiment(config: ExperimentConfig) -> RelaxationRecord:
    """
    Runs one relaxation experiment from a single excited mode.

    At every scheduled time the state is transformed to normal modes, both estimator
    variants are computed on the same standing-wave spectrum, and the total energy is
    recorded. T_eq is then detected for each variant.

    Returns:
        RelaxationRecord: The sampled history.

    Raises:
        IntegrationBlowUpError: With `partial_record` holding the samples taken so far.
    """
    params = config.params
    state = excite_mode(config.initial_mode, config.initial_amplitude, params.n_sites)
    schedule = sample_schedule(config.t_end, config.samples_per_decade, config.h)
    sampler = _SpectrumSampler(config, schedule)
    logger.info("Run: N=%d alpha=%g beta=%g A=%g %s h=%g t_end=%g (%d samples).",
                params.n_sites, params.alpha, params.beta, config.initial_amplitude,
                config.integrator.value, config.h, config.t_end, len(schedule))
    try:
        integrate(state, params, config.integrator, config.h, config.t_end, sampler)
    except IntegrationBlowUpError as e:
        logger.error("Run with amplitude %g blew up: %s", config.initial_amplitude, e)
        e.partial_record = _finish_record(config, sampler, failure=str(e))
        raise

    record = _finish_record(config, sampler)
    logger.info("T_eq instantaneous = %s, packets = %s, max drift = %.3e.",
                record.t_eq_instantaneous, record.t_eq_packet, record.max_energy_drift)
    if record.max_energy_drift > config.drift_tolerance:
        logger.warning("Energy drift %.3e exceeds the %.0e tolerance of the %s scheme.",
                       record.max_energy_drift, config.drift_tolerance, config.integrator.value)
    return record


def _run_sweep_entry(config: ExperimentConfig) -> RelaxationRecord:
    try:
        return run_experiment(config)
    except IntegrationBlowUpError as e:
        return e.partial_record
    except FpuLabError as e:
        logger.error("Sweep entry with amplitude %g failed: %s", config.initial_amplitude, e)
        return RelaxationRecord(config=config, failure=str(e))


def sweep(base: ExperimentConfig, amplitudes: Sequence[float], workers: int = DEFAULT_SWEEP_WORKERS) -> list[RelaxationRecord]:
    """
    Runs `base` once per initial amplitude.

    Entries are independent; with workers > 1 they run in separate processes.
    Records come back in input order, and failed runs are returned as records
    with `failure` set rather than aborting the sweep.

    Raises:
        ValueError: If the amplitude list is empty.
        ConfigError: If an amplitude is invalid.
    """
    if not amplitudes:
        raise ValueError("Sweep needs at least one amplitude.")
    configs = [replace(base, initial_amplitude=float(a)) for a in amplitudes]
    logger.info("Sweep over %d amplitudes with %d worker(s).", len(configs), workers)
    if workers <= 1 or len(configs) == 1:
        return [_run_sweep_entry(c) for c in configs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_sweep_entry, configs))
