# mathematical_functions/mode_transform.py

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import fft

from config import HERMITIAN_TOLERANCE
from mathematical_functions.errors import InvalidModeStateError
from mathematical_functions.lattice_core import ChainState, is_power_of_two

logger = logging.getLogger(__name__)
if not logger.handlers:
    logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')


@dataclass(frozen=True, eq=False)
class ModeState:
    """
    Normal-mode amplitudes A_k and momenta pi_k, k = 0..N-1.

    Real chain states map to Hermitian-symmetric arrays: A_k = conj(A_{N-k}).
    """
    amplitudes: np.ndarray
    momenta: np.ndarray
    t: float = 0.0

    @property
    def n_sites(self) -> int:
        return self.amplitudes.shape[0]


@dataclass(frozen=True, eq=False)
class EnergySpectrum:
    """
    Harmonic energies at one sample time.

    `includes_zero_mode` marks spectra whose entry 0 is the translation mode;
    the instantaneous estimator leaves that entry out.
    """
    energies: np.ndarray
    t: float = 0.0
    includes_zero_mode: bool = True

    def __post_init__(self):
        object.__setattr__(self, "energies", np.asarray(self.energies, dtype=float))

    def __len__(self) -> int:
        return self.energies.shape[0]


def _require_power_of_two(n_sites: int) -> None:
    if not is_power_of_two(n_sites):
        raise ValueError(f"The mode transform requires a power-of-two number of sites, got {n_sites}.")


# --- Dispersion ---

def mode_frequency(k: int, n_sites: int) -> float:
    """
    Frequency omega_k = 2 sin(pi k / N) of normal mode k.

    Args:
        k (int): Mode index, 0 <= k < N.
        n_sites (int): Chain length N.

    Returns:
        float: omega_k >= 0.

    Raises:
        ValueError: If k is outside [0, N).
    """
    if not isinstance(k, (int, np.integer)) or not (0 <= k < n_sites):
        raise ValueError(f"Mode index k must be an integer in [0, {n_sites}), got {k!r}.")
    return 2.0 * math.sin(math.pi * k / n_sites)


@lru_cache(maxsize=16)
def _frequency_table(n_sites: int) -> np.ndarray:
    # min(k, N-k) keeps omega_k and omega_{N-k} bitwise equal.
    k = np.arange(n_sites)
    table = 2.0 * np.sin(np.pi * np.minimum(k, n_sites - k) / n_sites)
    table.setflags(write=False)
    return table


def mode_frequencies(n_sites: int) -> np.ndarray:
    """Read-only array of omega_k for k = 0..N-1."""
    return _frequency_table(n_sites)


# --- Transforms ---

def to_modes(state: ChainState) -> ModeState:
    """
    Unitary discrete Fourier transform of (q, p):
    A_k = N^(-1/2) sum_j q_j exp(2 pi i k j / N), and likewise for pi_k.

    Raises:
        ValueError: If N is not a power of two.
    """
    _require_power_of_two(state.n_sites)
    # scipy's inverse transform carries the +i kernel; "ortho" gives the 1/sqrt(N) factor.
    amplitudes = fft.ifft(state.q, norm="ortho")
    momenta = fft.ifft(state.p, norm="ortho")
    return ModeState(amplitudes, momenta, state.t)


def hermitian_defect(values: np.ndarray) -> float:
    """Largest |v_k - conj(v_{N-k})|, relative to max |v| (0 for an all-zero array)."""
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    if scale == 0.0:
        return 0.0
    mirrored = np.conj(np.roll(values[::-1], 1))
    return float(np.max(np.abs(values - mirrored))) / scale


def from_modes(modes: ModeState) -> ChainState:
    """
    Inverse of `to_modes`. The imaginary residue of the inverse transform is discarded.

    Raises:
        InvalidModeStateError: If A or pi is not Hermitian-symmetric within tolerance.
        ValueError: If N is not a power of two.
    """
    _require_power_of_two(modes.n_sites)
    for name, values in (("amplitudes", modes.amplitudes), ("momenta", modes.momenta)):
        defect = hermitian_defect(values)
        if defect > HERMITIAN_TOLERANCE:
            logger.warning("Mode %s violate Hermitian symmetry (relative defect %.3e).", name, defect)
            raise InvalidModeStateError(f"Mode {name} are not Hermitian-symmetric (relative defect {defect:.3e}).")
    q = fft.fft(modes.amplitudes, norm="ortho").real
    p = fft.fft(modes.momenta, norm="ortho").real
    return ChainState(q, p, modes.t)


# --- Mode energies ---

def mode_energies(modes: ModeState, n_sites: int | None = None) -> EnergySpectrum:
    """
    Harmonic energy of every complex mode index, E_k = (|pi_k|^2 + omega_k^2 |A_k|^2) / 2.

    The entries sum to the quadratic energy of the real-space state (Parseval),
    and E_k = E_{N-k} for real states.
    """
    n_sites = modes.n_sites if n_sites is None else n_sites
    omega = mode_frequencies(n_sites)
    energies = 0.5 * (np.abs(modes.momenta) ** 2 + (omega * np.abs(modes.amplitudes)) ** 2)
    return EnergySpectrum(energies, modes.t, includes_zero_mode=True)


def standing_wave_energies(modes: ModeState, n_sites: int | None = None) -> EnergySpectrum:
    """
    Harmonic energies in the real (standing-wave) normal-mode basis, ordered by frequency.

    For 1 <= k < N/2 the degenerate pair (k, N-k) is split into its cosine and sine
    standing waves, Re(pi_k)^2 + omega_k^2 Re(A_k)^2 and Im(pi_k)^2 + omega_k^2 Im(A_k)^2.
    The layout is [E_0, E_1c, E_1s, E_2c, E_2s, ..., E_{N/2}], N entries in total,
    summing to the same value as `mode_energies`.

    Unlike the complex-index spectrum, a pure cosine excitation of one mode
    occupies a single entry, and at thermal equilibrium every entry except the
    zero mode is exponentially distributed.
    """
    n_sites = modes.n_sites if n_sites is None else n_sites
    _require_power_of_two(n_sites)
    half = n_sites // 2
    omega = mode_frequencies(n_sites)
    a, pi = modes.amplitudes, modes.momenta

    energies = np.empty(n_sites)
    energies[0] = 0.5 * (pi[0].real ** 2 + (omega[0] * a[0].real) ** 2)
    energies[n_sites - 1] = 0.5 * (pi[half].real ** 2 + (omega[half] * a[half].real) ** 2)
    w = omega[1:half]
    energies[1:n_sites - 1:2] = pi[1:half].real ** 2 + (w * a[1:half].real) ** 2
    energies[2:n_sites - 1:2] = pi[1:half].imag ** 2 + (w * a[1:half].imag) ** 2
    return EnergySpectrum(energies, modes.t, includes_zero_mode=True)


# --- Initial conditions ---

def _check_excitable_mode(k: int, n_sites: int) -> None:
    if not isinstance(k, (int, np.integer)) or not (1 <= k <= n_sites // 2):
        raise ValueError(f"Excited mode k must be an integer in [1, {n_sites // 2}], got {k!r}.")


def excite_mode(k: int, amplitude: float, n_sites: int) -> ChainState:
    """
    Builds the chain state carrying only the standing wave of mode k, at rest.

    q_j = c cos(2 pi k j / N), p = 0, with c chosen so that the total harmonic
    energy equals omega_k^2 * amplitude^2 / 2.

    Args:
        k (int): Mode index, 1 <= k <= N/2.
        amplitude (float): Mode amplitude A_k (may be 0).
        n_sites (int): Chain length N (power of two).

    Returns:
        ChainState: The initial condition at t = 0.

    Raises:
        ValueError: If k is out of range, the amplitude is non-finite, or N is not a power of two.
    """
    _require_power_of_two(n_sites)
    _check_excitable_mode(k, n_sites)
    if not math.isfinite(amplitude):
        raise ValueError(f"Amplitude must be finite, got {amplitude!r}.")
    # The N/2 mode is its own partner, so its energy is not split over a pair.
    if 2 * k == n_sites:
        c = amplitude / math.sqrt(n_sites)
    else:
        c = amplitude * math.sqrt(2.0 / n_sites)
    j = np.arange(n_sites)
    q = c * np.cos(2.0 * np.pi * k * j / n_sites)
    logger.debug("Excited mode %d with amplitude %g (profile height %g).", k, amplitude, c)
    return ChainState(q, np.zeros(n_sites), 0.0)


def amplitude_from_energy(k: int, energy: float, n_sites: int) -> float:
    """
    Amplitude that places harmonic energy `energy` on mode k, sqrt(2 E) / omega_k.

    Raises:
        ValueError: If k is out of range or the energy is negative or non-finite.
    """
    _check_excitable_mode(k, n_sites)
    if not math.isfinite(energy) or energy < 0:
        raise ValueError(f"Initial energy must be a finite non-negative number, got {energy!r}.")
    return math.sqrt(2.0 * energy) / mode_frequency(k, n_sites)
