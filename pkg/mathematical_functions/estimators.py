# mathematical_functions/estimators.py

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import digamma

from mathematical_functions.errors import DegenerateSpectrumError, InvalidDistributionError
from mathematical_functions.mode_transform import EnergySpectrum

logger = logging.getLogger(__name__)
if not logger.handlers:
    logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')


@dataclass(frozen=True)
class EstimatorVariant:
    """
    Which energies feed the entropy: every mode (`packet_size` None) or
    packets of `packet_size` consecutive modes.
    """
    packet_size: int | None = None

    def __post_init__(self):
        if self.packet_size is not None and (not isinstance(self.packet_size, (int, np.integer)) or self.packet_size < 1):
            raise ValueError(f"Packet size must be a positive integer, got {self.packet_size!r}.")

    @classmethod
    def instantaneous(cls) -> "EstimatorVariant":
        return cls(None)

    @classmethod
    def packets(cls, n_per_packet: int) -> "EstimatorVariant":
        return cls(n_per_packet)

    @property
    def is_packets(self) -> bool:
        return self.packet_size is not None


@dataclass(frozen=True)
class NeffSample:
    t: float
    n_eff: float
    entropy: float
    n_entries: int


def normalize_energies(spectrum: "EnergySpectrum | np.ndarray") -> np.ndarray:
    """
    Returns e_i = E_i / sum E.

    Raises:
        DegenerateSpectrumError: If no entry is strictly positive.
        InvalidDistributionError: If an entry is negative or non-finite.
    """
    energies = spectrum.energies if isinstance(spectrum, EnergySpectrum) else np.asarray(spectrum, dtype=float)
    if energies.size == 0 or not np.all(np.isfinite(energies)):
        raise InvalidDistributionError("Energies must be a non-empty array of finite values.")
    if np.any(energies < 0):
        raise InvalidDistributionError("Energies cannot be negative.")
    total = float(np.sum(energies))
    if total <= 0:
        raise DegenerateSpectrumError("Energy spectrum is all zero and cannot be normalized.")
    return energies / total


def spectral_entropy(e: np.ndarray) -> float:
    """
    Shannon entropy S = -sum e_i ln e_i of a normalized distribution, with 0 ln 0 = 0.

    Raises:
        InvalidDistributionError: If an entry is negative or the entries do not sum to 1 within 1e-9.
    """
    e = np.asarray(e, dtype=float)
    if np.any(e < 0):
        raise InvalidDistributionError("Normalized energies cannot be negative.")
    if abs(float(np.sum(e)) - 1.0) > 1e-9:
        raise InvalidDistributionError(f"Normalized energies must sum to 1, got {float(np.sum(e))!r}.")
    positive = e[e > 0]
    entropy = -float(np.sum(positive * np.log(positive)))
    # Rounding can push a one-hot distribution a hair below zero.
    return max(entropy, 0.0)


def packet_energies(energies: np.ndarray, n_per_packet: int, average: bool = False) -> np.ndarray:
    """
    Sums (or averages) contiguous blocks of `n_per_packet` energies.

    Raises:
        ValueError: If the block size does not divide the number of energies.
    """
    energies = np.asarray(energies, dtype=float)
    if energies.size % n_per_packet != 0:
        raise ValueError(f"Packet size {n_per_packet} does not divide the {energies.size} spectrum entries.")
    blocks = energies.reshape(-1, n_per_packet)
    return blocks.mean(axis=1) if average else blocks.sum(axis=1)


def estimator_entries(spectrum: EnergySpectrum, variant: EstimatorVariant) -> np.ndarray:
    """
    The energies the entropy is taken over.

    Instantaneous: every entry except the translation mode (when the spectrum has one).
    Packets: block sums over the whole spectrum, so N0 = N / n packets.
    """
    if variant.is_packets:
        return packet_energies(spectrum.energies, variant.packet_size)
    if spectrum.includes_zero_mode:
        return spectrum.energies[1:]
    return spectrum.energies


def n_eff(spectrum: EnergySpectrum, variant: EstimatorVariant = EstimatorVariant()) -> NeffSample:
    """
    Effective fraction of modes sharing the energy, n_eff = exp(S) / n_entries.

    Args:
        spectrum (EnergySpectrum): Energies at one sample time.
        variant (EstimatorVariant): instantaneous (default) or packets.

    Returns:
        NeffSample: n_eff in [1/n_entries, 1] together with S and n_entries.

    Raises:
        DegenerateSpectrumError: If the selected entries are all zero.
        ValueError: If the packet size does not divide the spectrum length.
    """
    entries = estimator_entries(spectrum, variant)
    e = normalize_energies(entries)
    entropy = spectral_entropy(e)
    count = int(entries.size)
    value = min(math.exp(entropy) / count, 1.0)
    return NeffSample(t=spectrum.t, n_eff=value, entropy=entropy, n_entries=count)


def equilibrium_asymptote(exact: bool = False) -> float:
    """
    Plateau of n_eff at equipartition.

    The default is the second-order fluctuation estimate exp(-1/2) ~= 0.6065, obtained
    from S ~= ln N - N <de^2> / (2 e_bar) with <de^2> = e_bar^2. With `exact=True` the
    expectation is taken for exponentially distributed energies (the same variance law)
    without truncating the logarithm: exp(-psi(2)) = exp(gamma - 1) ~= 0.6552.
    Neither value depends on N once N is large.
    """
    if exact:
        return math.exp(-float(digamma(2.0)))
    return math.exp(-0.5)
