# mathematical_functions/lattice_core.py

import logging
import math
from dataclasses import dataclass

import numpy as np

from config import DEFAULT_ALPHA, DEFAULT_BETA
from mathematical_functions.errors import InvalidStateError

logger = logging.getLogger(__name__)
if not logger.handlers:
    logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')


def is_power_of_two(n: int) -> bool:
    return isinstance(n, (int, np.integer)) and n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class ModelParams:
    """
    Size and couplings of the periodic FPU chain.

    Attributes:
        n_sites (int): Number of particles N (= number of bonds), at least 3. The mode
            transform and the experiment runner additionally need a power of two.
        alpha (float): Cubic coupling of the bond potential V(r) = r^2/2 + alpha r^3/3 + beta r^4/4.
        beta (float): Quartic coupling. 0 gives the alpha-FPU chain.
    """
    n_sites: int
    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA

    def __post_init__(self):
        if not isinstance(self.n_sites, (int, np.integer)) or self.n_sites < 3:
            raise ValueError(f"Number of sites (n_sites) must be an integer of at least 3, got {self.n_sites!r}.")
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if not isinstance(value, (int, float, np.floating)) or not math.isfinite(value) or value < 0:
                raise ValueError(f"Coupling '{name}' must be a finite non-negative number, got {value!r}.")


@dataclass(frozen=True, eq=False)
class ChainState:
    """
    Positions and momenta of the chain at time t. Site indices are taken modulo N.
    """
    q: np.ndarray
    p: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        p = np.asarray(self.p, dtype=float)
        if q.ndim != 1 or q.shape != p.shape:
            raise InvalidStateError(f"Positions and momenta must be 1-D arrays of equal length, got shapes {q.shape} and {p.shape}.")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "t", float(self.t))

    @property
    def n_sites(self) -> int:
        return self.q.shape[0]

    @classmethod
    def zeros(cls, n_sites: int, t: float = 0.0) -> "ChainState":
        return cls(np.zeros(n_sites), np.zeros(n_sites), t)

    def with_time(self, t: float) -> "ChainState":
        return ChainState(self.q, self.p, t)


def validate_state(state: ChainState, params: ModelParams) -> None:
    """
    Checks that `state` belongs to the chain described by `params`.

    Raises:
        InvalidStateError: If the length differs from n_sites or any entry is non-finite.
    """
    if state.n_sites != params.n_sites:
        raise InvalidStateError(f"State has {state.n_sites} sites but the model has {params.n_sites}.")
    if not (np.all(np.isfinite(state.q)) and np.all(np.isfinite(state.p)) and math.isfinite(state.t)):
        logger.warning("Rejected chain state with non-finite entries at t = %r.", state.t)
        raise InvalidStateError("Chain state contains non-finite positions, momenta or time.")


def bond_stretches(q: np.ndarray) -> np.ndarray:
    """Returns dq_k = q_k - q_{k-1} for every bond, with q_{-1} = q_{N-1}."""
    return q - np.roll(q, 1)


# --- Hamiltonian pieces ---

def kinetic_energy(state: ChainState) -> float:
    return 0.5 * float(np.dot(state.p, state.p))


def quadratic_energy(state: ChainState) -> float:
    """Harmonic part H_2 = sum p^2/2 + sum dq^2/2."""
    dq = bond_stretches(state.q)
    return kinetic_energy(state) + 0.5 * float(np.dot(dq, dq))


def cubic_energy(state: ChainState, params: ModelParams) -> float:
    """Cubic potential V_3 = alpha * sum dq^3 / 3."""
    if params.alpha == 0:
        return 0.0
    dq = bond_stretches(state.q)
    return params.alpha * float(np.sum(dq ** 3)) / 3.0


def quartic_energy(state: ChainState, params: ModelParams) -> float:
    """Quartic potential V_4 = beta * sum dq^4 / 4."""
    if params.beta == 0:
        return 0.0
    dq = bond_stretches(state.q)
    return params.beta * float(np.sum(dq ** 4)) / 4.0


def total_energy(state: ChainState, params: ModelParams) -> float:
    """
    Evaluates the full Hamiltonian of the periodic chain.

    E = sum p_k^2/2 + sum dq_k^2/2 + alpha sum dq_k^3/3 + beta sum dq_k^4/4,
    with dq_k = q_k - q_{k-1} over all N bonds.

    Args:
        state (ChainState): Positions and momenta.
        params (ModelParams): Chain size and couplings.

    Returns:
        float: The total energy.

    Raises:
        InvalidStateError: If the state is non-finite or does not match params.
    """
    validate_state(state, params)
    return quadratic_energy(state) + cubic_energy(state, params) + quartic_energy(state, params)


# --- Forces ---

def force(state: ChainState, params: ModelParams) -> np.ndarray:
    """
    Returns F_k = -dH/dq_k for every site.

    With V'(r) = r + alpha r^2 + beta r^3 the force is V'(dq_{k+1}) - V'(dq_k),
    i.e. (q_{k+1} - 2 q_k + q_{k-1}) + alpha[(q_{k+1} - q_k)^2 - (q_k - q_{k-1})^2] (+ quartic).
    The components sum to zero (translation invariance).

    Raises:
        InvalidStateError: If the state is non-finite or does not match params.
    """
    validate_state(state, params)
    return _bond_force(state.q, params.alpha, params.beta)


def cubic_force(state: ChainState, params: ModelParams) -> np.ndarray:
    """
    Nonlinear-only force -dV_3/dq_k = alpha[(q_{k+1} - q_k)^2 - (q_k - q_{k-1})^2].

    Raises:
        InvalidStateError: If the state is non-finite or does not match params.
    """
    validate_state(state, params)
    return _cubic_bond_force(state.q, params.alpha)


def _bond_force(q: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    dq = bond_stretches(q)
    tension = dq
    if alpha != 0:
        tension = tension + alpha * dq * dq
    if beta != 0:
        tension = tension + beta * dq * dq * dq
    return np.roll(tension, -1) - tension


def _cubic_bond_force(q: np.ndarray, alpha: float) -> np.ndarray:
    if alpha == 0:
        return np.zeros_like(q)
    dq2 = bond_stretches(q) ** 2
    return alpha * (np.roll(dq2, -1) - dq2)
