# mathematical_functions/integrators.py

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Protocol, Sequence, runtime_checkable

import numpy as np
from scipy import fft

from config import LEAPFROG_MAX_STEP
from mathematical_functions.errors import IntegrationBlowUpError, StepSizeError
from mathematical_functions.lattice_core import (
    ChainState, ModelParams, validate_state, _bond_force, _cubic_bond_force, cubic_force
)
from mathematical_functions.mode_transform import (
    ModeState, to_modes, from_modes, mode_frequencies
)

logger = logging.getLogger(__name__)
if not logger.handlers:
    logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')


class IntegratorKind(str, Enum):
    LEAPFROG = "leapfrog"
    SPECTRAL_SPLIT = "spectral_split"

    @classmethod
    def parse(cls, name: str) -> "IntegratorKind":
        """Accepts 'leapfrog', 'spectral' or 'spectral_split' (case-insensitive)."""
        key = str(name).strip().lower().replace("-", "_")
        if key == "spectral":
            key = cls.SPECTRAL_SPLIT.value
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"Unknown integrator '{name}'. Choose 'leapfrog' or 'spectral'.") from None


@dataclass(frozen=True)
class StepSize:
    """
    Positive, finite integration step. For leap-frog, h * omega_max < 2 with omega_max = 2.
    """
    h: float

    def __post_init__(self):
        if not isinstance(self.h, (int, float, np.floating)) or not math.isfinite(self.h) or self.h <= 0:
            raise StepSizeError(f"Integration step h must be a positive finite number, got {self.h!r}.")

    def check_stability(self, kind: IntegratorKind) -> "StepSize":
        if kind is IntegratorKind.LEAPFROG:
            check_leapfrog_stability(self.h)
        return self


def check_leapfrog_stability(h: float) -> None:
    """
    Raises:
        StepSizeError: If |h| >= 1, where leap-frog loses linear stability on the harmonic band.
    """
    if not math.isfinite(h) or abs(h) >= LEAPFROG_MAX_STEP:
        raise StepSizeError(
            f"Leap-frog is unstable for |h| >= {LEAPFROG_MAX_STEP} (h * omega_max must stay below 2), got h = {h!r}."
        )


def _step_value(h: "float | StepSize") -> float:
    return float(h.h) if isinstance(h, StepSize) else float(h)


def _check_finite(q: np.ndarray, p: np.ndarray) -> None:
    if not (np.isfinite(q).all() and np.isfinite(p).all()):
        raise IntegrationBlowUpError("Integration produced non-finite positions or momenta.")


# --- Array kernels (shared by the public steppers and the integration loop) ---

def _leapfrog_kernel(q, p, f, alpha, beta, h):
    """Kick-drift-kick. `f` is the force at q; returns (q', p', force at q')."""
    p_half = p + (0.5 * h) * f
    q_new = q + h * p_half
    f_new = _bond_force(q_new, alpha, beta)
    p_new = p_half + (0.5 * h) * f_new
    return q_new, p_new, f_new


def _rotation_table(n_sites: int, h: float):
    omega = mode_frequencies(n_sites)
    cos_wh = np.cos(omega * h)
    sin_wh = np.sin(omega * h)
    # Zero mode (omega = 0) moves freely: A' = A + h pi.
    sin_over_omega = np.empty(n_sites)
    sin_over_omega[0] = h
    sin_over_omega[1:] = sin_wh[1:] / omega[1:]
    omega_sin = omega * sin_wh
    return cos_wh, sin_over_omega, omega_sin


@lru_cache(maxsize=32)
def _rotation_coefficients(n_sites: int, h: float):
    table = _rotation_table(n_sites, h)
    for arr in table:
        arr.setflags(write=False)
    return table


def _rotate(amplitudes, momenta, n_sites, h, cached=True):
    cos_wh, sin_over_omega, omega_sin = (_rotation_coefficients(n_sites, float(h)) if cached
                                         else _rotation_table(n_sites, float(h)))
    new_amplitudes = amplitudes * cos_wh + momenta * sin_over_omega
    new_momenta = momenta * cos_wh - amplitudes * omega_sin
    return new_amplitudes, new_momenta


def _cubic_mode_force(amplitudes, alpha):
    """Cubic force at the positions encoded by `amplitudes`, transformed to mode space."""
    q = fft.fft(amplitudes, norm="ortho").real
    return fft.ifft(_cubic_bond_force(q, alpha), norm="ortho")


def _spectral_split_kernel(amplitudes, momenta, kick, alpha, h):
    """
    Strang step on mode variables. `kick` is the transformed cubic force at `amplitudes`;
    returns (A', pi', kick at A'). The variables stay in mode space between steps.
    """
    half_h = 0.5 * h
    momenta = momenta + half_h * kick
    amplitudes, momenta = _rotate(amplitudes, momenta, amplitudes.shape[0], h)
    kick = _cubic_mode_force(amplitudes, alpha)
    momenta = momenta + half_h * kick
    return amplitudes, momenta, kick


def _require_cubic_only(params: ModelParams) -> None:
    if params.beta != 0:
        raise ValueError("The spectral split scheme only handles the cubic (alpha) chain; use leap-frog for beta != 0.")


# --- Public steppers ---

def leapfrog_step(state: ChainState, params: ModelParams, h: "float | StepSize") -> ChainState:
    """
    One velocity-Verlet step: p_half = p + (h/2) F(q); q' = q + h p_half; p' = p_half + (h/2) F(q').

    Args:
        state (ChainState): Current state.
        params (ModelParams): Chain couplings.
        h (float | StepSize): Step; negative values integrate backwards.

    Returns:
        ChainState: State at t + h.

    Raises:
        StepSizeError: If |h| >= 1.
        IntegrationBlowUpError: If the new state is non-finite.
    """
    h = _step_value(h)
    check_leapfrog_stability(h)
    validate_state(state, params)
    f = _bond_force(state.q, params.alpha, params.beta)
    q, p, _ = _leapfrog_kernel(state.q, state.p, f, params.alpha, params.beta, h)
    _check_finite(q, p)
    return ChainState(q, p, state.t + h)


def cubic_kick(state: ChainState, params: ModelParams, h: float) -> ChainState:
    """
    Exact flow of the cubic potential for time h: q unchanged, p' = p + h * cubic_force(q).

    The time stamp is left untouched; the kick is a sub-step of a composition.
    """
    return ChainState(state.q, state.p + h * cubic_force(state, params), state.t)


def linear_flow(modes: ModeState, n_sites: int, h: float) -> ModeState:
    """
    Exact harmonic flow for time h, mode by mode:

        A'_k  = A_k cos(w_k h) + (pi_k / w_k) sin(w_k h)
        pi'_k = pi_k cos(w_k h) - w_k A_k sin(w_k h)

    The zero mode moves freely (A'_0 = A_0 + h pi_0). Every mode energy is conserved.
    """
    amplitudes, momenta = _rotate(modes.amplitudes, modes.momenta, n_sites, h)
    return ModeState(amplitudes, momenta, modes.t + h)


def spectral_split_step(state: ChainState, params: ModelParams, h: "float | StepSize") -> ChainState:
    """
    Strang splitting: half cubic kick, exact harmonic flow in mode space, half cubic kick.

    The harmonic part is solved exactly, so there is no stability bound on h.

    Raises:
        ValueError: If params.beta != 0.
        IntegrationBlowUpError: If the new state is non-finite.
    """
    h = _step_value(h)
    _require_cubic_only(params)
    validate_state(state, params)
    kicked = cubic_kick(state, params, 0.5 * h)
    rotated = from_modes(linear_flow(to_modes(kicked), params.n_sites, h))
    _check_finite(rotated.q, rotated.p)
    result = cubic_kick(rotated, params, 0.5 * h)
    _check_finite(result.q, result.p)
    return ChainState(result.q, result.p, state.t + h)


STEPPERS: dict[IntegratorKind, Callable[[ChainState, ModelParams, float], ChainState]] = {
    IntegratorKind.LEAPFROG: leapfrog_step,
    IntegratorKind.SPECTRAL_SPLIT: spectral_split_step,
}


# --- Integration loop ---

@runtime_checkable
class Sampler(Protocol):
    """Callback invoked with the current state at each of its `sample_times`."""
    sample_times: Sequence[float]

    def __call__(self, state: ChainState) -> None: ...


def integrate(state: ChainState, params: ModelParams, kind: IntegratorKind, h: "float | StepSize",
              t_end: float, sampler: "Sampler | Callable[[ChainState], None] | None" = None) -> ChainState:
    """
    Steps `state` from state.t to t_end with the chosen scheme.

    Time is tracked as t0 + n*h; if t_end - t0 is not a whole number of steps the last
    step is shortened to land on t_end exactly. The sampler is called at the step
    nearest each of its sample_times (which are expected to be multiples of h), or at
    the start and the end if it declares no sample times.

    The spectral scheme keeps its variables in mode space between steps; for the
    harmonic chain (alpha = 0) every requested state is one exact rotation of the
    initial modes by the elapsed time.

    Args:
        state (ChainState): Initial state.
        params (ModelParams): Chain size and couplings.
        kind (IntegratorKind): leapfrog or spectral_split.
        h (float | StepSize): Positive step.
        t_end (float): Final time, t_end >= state.t.
        sampler: Optional sampling callback.

    Returns:
        ChainState: State at t_end.

    Raises:
        StepSizeError: If h is invalid for the scheme.
        ValueError: If t_end < state.t.
        IntegrationBlowUpError: With step_index and time of the first non-finite step.
    """
    kind = IntegratorKind.parse(kind) if not isinstance(kind, IntegratorKind) else kind
    h = StepSize(_step_value(h)).check_stability(kind).h
    validate_state(state, params)
    if kind is IntegratorKind.SPECTRAL_SPLIT:
        _require_cubic_only(params)
    t0 = state.t
    if not math.isfinite(t_end) or t_end < t0:
        raise ValueError(f"t_end must be finite and not earlier than the state time {t0!r}, got {t_end!r}.")

    span = t_end - t0
    n_full = int(math.floor(span / h + 1e-9))
    while n_full > 0 and n_full * h > span:
        n_full -= 1
    remainder = span - n_full * h
    if remainder <= 1e-9 * h:
        remainder = 0.0

    sample_steps, sample_at_end = _resolve_sample_steps(sampler, t0, h, n_full, t_end, remainder)
    logger.info("Integrating %s from t = %g to t = %g with h = %g (%d steps).", kind.value, t0, t_end, h, n_full)

    carry = _make_carry(kind, state, params)
    pending = iter(sample_steps)
    next_sample = next(pending, None)
    n = 0
    while True:
        if next_sample == n:
            q, p = carry.positions()
            sampler(ChainState(q, p, t_end if (n == n_full and remainder == 0.0) else t0 + n * h))
            next_sample = next(pending, None)
        if n == n_full:
            break
        carry.advance(h)
        n += 1
        if not carry.is_finite():
            logger.error("Non-finite state after step %d (t = %g).", n, t0 + n * h)
            raise IntegrationBlowUpError("Integration produced non-finite positions or momenta.", n, t0 + n * h)

    if remainder > 0.0:
        carry.advance(remainder)
        if not carry.is_finite():
            logger.error("Non-finite state after the final partial step (t = %g).", t_end)
            raise IntegrationBlowUpError("Integration produced non-finite positions or momenta.", n_full + 1, t_end)

    q, p = carry.positions()
    final = ChainState(q, p, t_end)
    if sample_at_end:
        sampler(ChainState(q.copy(), p.copy(), t_end))
    return final


# --- Loop carries: the variables each scheme holds between steps ---

class _LeapfrogCarry:
    """Positions, momenta and the force at the current positions."""

    def __init__(self, state: ChainState, params: ModelParams):
        self.alpha, self.beta = params.alpha, params.beta
        self.q, self.p = state.q, state.p
        self.force = _bond_force(self.q, self.alpha, self.beta)

    def advance(self, h: float) -> None:
        self.q, self.p, self.force = _leapfrog_kernel(self.q, self.p, self.force, self.alpha, self.beta, h)

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.q).all() and np.isfinite(self.p).all())

    def positions(self):
        return self.q.copy(), self.p.copy()


class _SpectralCarry:
    """
    Mode amplitudes, mode momenta and the transformed cubic kick. Real-space
    arrays are only formed when a sample or the final state is requested.
    """

    def __init__(self, state: ChainState, params: ModelParams):
        self.alpha = params.alpha
        modes = to_modes(state)
        self.amplitudes, self.momenta = modes.amplitudes, modes.momenta
        self.kick = _cubic_mode_force(self.amplitudes, self.alpha)

    def advance(self, h: float) -> None:
        self.amplitudes, self.momenta, self.kick = _spectral_split_kernel(
            self.amplitudes, self.momenta, self.kick, self.alpha, h
        )

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.amplitudes).all() and np.isfinite(self.momenta).all())

    def positions(self):
        q = fft.fft(self.amplitudes, norm="ortho").real
        p = fft.fft(self.momenta, norm="ortho").real
        return q, p


class _HarmonicCarry:
    """
    alpha = 0: the kicks vanish and steps compose to one rotation by the elapsed
    time, so each requested state is a single rotation of the initial modes.
    """

    def __init__(self, state: ChainState, params: ModelParams):
        modes = to_modes(state)
        self.amplitudes, self.momenta = modes.amplitudes, modes.momenta
        self.n_sites = params.n_sites
        self.steps: dict[float, int] = {}

    def advance(self, h: float) -> None:
        self.steps[h] = self.steps.get(h, 0) + 1

    def elapsed(self) -> float:
        return math.fsum(count * h for h, count in self.steps.items())

    def is_finite(self) -> bool:
        return True

    def positions(self):
        elapsed = self.elapsed()
        amplitudes, momenta = self.amplitudes, self.momenta
        if elapsed != 0.0:
            amplitudes, momenta = _rotate(amplitudes, momenta, self.n_sites, elapsed, cached=False)
        q = fft.fft(amplitudes, norm="ortho").real
        p = fft.fft(momenta, norm="ortho").real
        return q, p


def _make_carry(kind: IntegratorKind, state: ChainState, params: ModelParams):
    if kind is IntegratorKind.LEAPFROG:
        return _LeapfrogCarry(state, params)
    if params.alpha == 0:
        return _HarmonicCarry(state, params)
    return _SpectralCarry(state, params)


def _resolve_sample_steps(sampler, t0, h, n_full, t_end, remainder):
    """Maps the sampler's times to sorted unique step indices, plus a flag for t_end."""
    if sampler is None:
        return [], False
    times = getattr(sampler, "sample_times", None)
    if times is None:
        times = [t0, t_end]
    steps = set()
    at_end = False
    tol = 1e-9 * max(h, abs(t_end))
    for ts in times:
        if ts < t0 - tol or ts > t_end + tol:
            logger.warning("Ignoring sample time %g outside [%g, %g].", ts, t0, t_end)
            continue
        if remainder > 0.0 and abs(ts - t_end) <= tol:
            at_end = True
            continue
        steps.add(min(int(round((ts - t0) / h)), n_full))
    return sorted(steps), at_end
