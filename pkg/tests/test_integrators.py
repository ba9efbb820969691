# tests/test_integrators.py

import math

import numpy as np
import pytest

from mathematical_functions.errors import IntegrationBlowUpError, StepSizeError
from mathematical_functions.integrators import (
    IntegratorKind, StepSize, cubic_kick, integrate, leapfrog_step, linear_flow, spectral_split_step
)
from mathematical_functions.invariant_checks import splitting_convergence_ratio
from mathematical_functions.lattice_core import ChainState, ModelParams, total_energy
from mathematical_functions.mode_transform import excite_mode, from_modes, mode_energies, mode_frequency, to_modes

ALPHA = 0.25


class RecordingSampler:
    def __init__(self, sample_times=None):
        if sample_times is not None:
            self.sample_times = sample_times
        self.states = []

    def __call__(self, state):
        self.states.append(state)


def small_state(n_sites, rng, scale=0.1):
    return ChainState(scale * rng.standard_normal(n_sites), scale * rng.standard_normal(n_sites))

# --- IntegratorKind / StepSize ---

def test_integrator_kind_parse():
    assert IntegratorKind.parse("leapfrog") is IntegratorKind.LEAPFROG
    assert IntegratorKind.parse("Spectral") is IntegratorKind.SPECTRAL_SPLIT
    assert IntegratorKind.parse("spectral-split") is IntegratorKind.SPECTRAL_SPLIT
    with pytest.raises(ValueError, match="Unknown integrator"):
        IntegratorKind.parse("rk4")

@pytest.mark.parametrize("h", [0.0, -0.1, math.inf, math.nan])
def test_step_size_must_be_positive_and_finite(h):
    with pytest.raises(StepSizeError):
        StepSize(h)

def test_leapfrog_stability_bound():
    assert StepSize(0.99).check_stability(IntegratorKind.LEAPFROG).h == 0.99
    with pytest.raises(StepSizeError, match="unstable"):
        StepSize(1.0).check_stability(IntegratorKind.LEAPFROG)
    # The spectral split has no harmonic stability bound.
    assert StepSize(1.5).check_stability(IntegratorKind.SPECTRAL_SPLIT).h == 1.5

def test_leapfrog_step_rejects_large_step():
    with pytest.raises(StepSizeError):
        leapfrog_step(ChainState.zeros(8), ModelParams(8), 1.5)

# --- Leap-frog ---

def test_leapfrog_zero_state_is_fixed_point():
    state = leapfrog_step(ChainState.zeros(8), ModelParams(8, alpha=ALPHA), 0.5)
    np.testing.assert_array_equal(state.q, np.zeros(8))
    np.testing.assert_array_equal(state.p, np.zeros(8))
    assert state.t == 0.5

def test_leapfrog_harmonic_energy_has_no_drift():
    n_sites = 512
    params = ModelParams(n_sites, alpha=0.0)
    state = excite_mode(1, 40.0, n_sites)
    e0 = total_energy(state, params)
    worst = 0.0
    for _ in range(100):
        state = integrate(state, params, IntegratorKind.LEAPFROG, 0.02, state.t + 2.0)
        worst = max(worst, abs(total_energy(state, params) - e0) / e0)
    assert worst < 1e-6

@pytest.mark.parametrize("kind", [IntegratorKind.LEAPFROG, IntegratorKind.SPECTRAL_SPLIT])
def test_steppers_are_time_reversible(kind, rng):
    params = ModelParams(16, alpha=ALPHA)
    start = small_state(16, rng)
    step = leapfrog_step if kind is IntegratorKind.LEAPFROG else spectral_split_step
    state = start
    for _ in range(1000):
        state = step(state, params, 0.02)
    for _ in range(1000):
        state = step(state, params, -0.02)
    np.testing.assert_allclose(state.q, start.q, rtol=0, atol=1e-8)
    np.testing.assert_allclose(state.p, start.p, rtol=0, atol=1e-8)

@pytest.mark.parametrize("kind", [IntegratorKind.LEAPFROG, IntegratorKind.SPECTRAL_SPLIT])
def test_total_momentum_is_conserved(kind, rng):
    params = ModelParams(32, alpha=ALPHA)
    state = small_state(32, rng, scale=0.3)
    momentum = np.sum(state.p)
    h = 0.1 if kind is IntegratorKind.LEAPFROG else 0.5
    step = leapfrog_step if kind is IntegratorKind.LEAPFROG else spectral_split_step
    for _ in range(50):
        state = step(state, params, h)
        assert abs(np.sum(state.p) - momentum) < 1e-12

def test_leapfrog_supports_quartic_coupling(rng):
    params = ModelParams(16, alpha=ALPHA, beta=0.5)
    state = small_state(16, rng, scale=0.3)
    e0 = total_energy(state, params)
    final = integrate(state, params, IntegratorKind.LEAPFROG, 0.01, 10.0)
    assert total_energy(final, params) == pytest.approx(e0, rel=1e-3)

def test_blow_up_reports_step(rng):
    params = ModelParams(16, alpha=ALPHA)
    state = ChainState(100.0 * rng.standard_normal(16), np.zeros(16))
    with np.errstate(all="ignore"):
        with pytest.raises(IntegrationBlowUpError) as info:
            integrate(state, params, IntegratorKind.LEAPFROG, 0.5, 1000.0)
    assert info.value.step_index is not None and info.value.step_index >= 1
    assert "step" in str(info.value)

# --- Splitting pieces ---

def test_cubic_kick_hand_example():
    params = ModelParams(3, alpha=ALPHA)
    state = ChainState([1.0, 0.0, 0.0], [0.0, 0.0, 0.0])
    kicked = cubic_kick(state, params, 1.0)
    np.testing.assert_array_equal(kicked.q, state.q)
    np.testing.assert_allclose(kicked.p, [0.0, -0.25, 0.25], atol=1e-15)

def test_cubic_kick_identities(rng):
    state = small_state(8, rng)
    np.testing.assert_array_equal(cubic_kick(state, ModelParams(8, alpha=0.0), 0.7).p, state.p)
    np.testing.assert_array_equal(cubic_kick(state, ModelParams(8, alpha=ALPHA), 0.0).p, state.p)

def test_linear_flow_zero_step_is_identity(rng):
    modes = to_modes(small_state(8, rng))
    flowed = linear_flow(modes, 8, 0.0)
    np.testing.assert_array_equal(flowed.amplitudes, modes.amplitudes)
    np.testing.assert_array_equal(flowed.momenta, modes.momenta)

def test_linear_flow_full_period_returns_mode(rng):
    n_sites = 8
    modes = to_modes(ChainState(rng.standard_normal(n_sites), rng.standard_normal(n_sites)))
    period = 2.0 * math.pi / mode_frequency(2, n_sites)
    flowed = linear_flow(modes, n_sites, period)
    assert flowed.amplitudes[2] == pytest.approx(modes.amplitudes[2], abs=1e-12)
    assert flowed.momenta[2] == pytest.approx(modes.momenta[2], abs=1e-12)

def test_linear_flow_conserves_every_mode_energy(rng):
    n_sites = 8
    modes = to_modes(ChainState(rng.standard_normal(n_sites), rng.standard_normal(n_sites)))
    before = mode_energies(modes).energies
    after = mode_energies(linear_flow(modes, n_sites, 0.7)).energies
    np.testing.assert_allclose(after, before, rtol=1e-13)

def test_linear_flow_moves_zero_mode_freely():
    modes = to_modes(ChainState(np.zeros(8), np.full(8, 0.5)))
    flowed = linear_flow(modes, 8, 3.0)
    assert flowed.amplitudes[0] == pytest.approx(modes.amplitudes[0] + 3.0 * modes.momenta[0])
    assert flowed.momenta[0] == pytest.approx(modes.momenta[0])

def test_spectral_split_rejects_quartic_coupling():
    with pytest.raises(ValueError, match="beta"):
        spectral_split_step(ChainState.zeros(8), ModelParams(8, alpha=ALPHA, beta=0.1), 1.0)

@pytest.mark.parametrize("seed", [20150401, 12345, 1, 2, 3])
def test_spectral_split_is_exact_for_harmonic_chain(seed):
    rng = np.random.default_rng(seed)
    n_sites = 64
    params = ModelParams(n_sites, alpha=0.0)
    p = rng.standard_normal(n_sites)
    # Zero total momentum keeps the chain from drifting far from the origin over 1e4 time units.
    state = ChainState(rng.standard_normal(n_sites), p - np.mean(p))
    before = mode_energies(to_modes(state)).energies
    final = integrate(state, params, IntegratorKind.SPECTRAL_SPLIT, 1.0, 1.0e4)
    after = mode_energies(to_modes(final)).energies
    relative = np.abs(after[1:] - before[1:]) / before[1:]
    assert np.max(relative) <= 1e-12
    assert total_energy(final, params) == pytest.approx(total_energy(state, params), rel=1e-12)

def test_harmonic_chain_samples_are_exact_rotations(rng):
    params = ModelParams(16, alpha=0.0)
    p = rng.standard_normal(16)
    state = ChainState(rng.standard_normal(16), p - np.mean(p))
    sampler = RecordingSampler(sample_times=[0.0, 500.0, 1000.0])
    integrate(state, params, IntegratorKind.SPECTRAL_SPLIT, 0.5, 1000.0, sampler)
    expected = from_modes(linear_flow(to_modes(state), 16, 1000.0))
    assert [s.t for s in sampler.states] == [0.0, 500.0, 1000.0]
    np.testing.assert_allclose(sampler.states[-1].q, expected.q, rtol=0, atol=1e-12)
    np.testing.assert_allclose(sampler.states[-1].p, expected.p, rtol=0, atol=1e-12)

def test_spectral_integrate_matches_repeated_steps(rng):
    params = ModelParams(8, alpha=ALPHA)
    state = small_state(8, rng)
    expected = state
    for _ in range(100):
        expected = spectral_split_step(expected, params, 0.1)
    final = integrate(state, params, IntegratorKind.SPECTRAL_SPLIT, 0.1, 10.0)
    np.testing.assert_allclose(final.q, expected.q, rtol=0, atol=1e-12)
    np.testing.assert_allclose(final.p, expected.p, rtol=0, atol=1e-12)

def test_spectral_split_second_order_convergence(rng):
    params = ModelParams(8, alpha=ALPHA)
    ratio = splitting_convergence_ratio(small_state(8, rng), params, h=0.2, t_end=10.0)
    assert 3.4 <= ratio <= 4.6

def test_integrators_agree_at_small_step(rng):
    params = ModelParams(8, alpha=ALPHA)
    state = small_state(8, rng)
    leapfrog = integrate(state, params, IntegratorKind.LEAPFROG, 1e-3, 10.0)
    split = integrate(state, params, IntegratorKind.SPECTRAL_SPLIT, 1e-3, 10.0)
    np.testing.assert_allclose(leapfrog.q, split.q, rtol=0, atol=1e-4)
    np.testing.assert_allclose(leapfrog.p, split.p, rtol=0, atol=1e-4)

# --- Integration loop ---

def test_integrate_to_start_time_samples_once(rng):
    state = small_state(8, rng).with_time(3.0)
    sampler = RecordingSampler()
    final = integrate(state, ModelParams(8), IntegratorKind.LEAPFROG, 0.02, 3.0, sampler)
    assert final.t == 3.0
    np.testing.assert_array_equal(final.q, state.q)
    assert [s.t for s in sampler.states] == [3.0]

def test_integrate_time_bookkeeping(rng):
    sampler = RecordingSampler(sample_times=[0.0, 1.0, 2.0])
    final = integrate(small_state(8, rng), ModelParams(8, alpha=ALPHA), IntegratorKind.LEAPFROG, 0.02, 2.0, sampler)
    assert final.t == 2.0
    assert [s.t for s in sampler.states] == [0.0, 1.0, 2.0]

def test_integrate_matches_repeated_steps(rng):
    params = ModelParams(8, alpha=ALPHA)
    state = small_state(8, rng)
    expected = state
    for _ in range(100):
        expected = leapfrog_step(expected, params, 0.02)
    final = integrate(state, params, IntegratorKind.LEAPFROG, 0.02, 2.0)
    np.testing.assert_allclose(final.q, expected.q, rtol=0, atol=1e-14)
    np.testing.assert_allclose(final.p, expected.p, rtol=0, atol=1e-14)

def test_integrate_shortens_final_step(rng):
    params = ModelParams(8, alpha=ALPHA)
    state = small_state(8, rng)
    sampler = RecordingSampler(sample_times=[0.0, 0.05])
    final = integrate(state, params, IntegratorKind.LEAPFROG, 0.02, 0.05, sampler)
    expected = leapfrog_step(leapfrog_step(state, params, 0.02), params, 0.02)
    expected = leapfrog_step(expected, params, 0.05 - 2 * 0.02)
    assert final.t == 0.05
    assert [s.t for s in sampler.states] == [0.0, 0.05]
    np.testing.assert_allclose(final.q, expected.q, rtol=0, atol=1e-15)

def test_integrate_is_deterministic(rng):
    params = ModelParams(16, alpha=ALPHA)
    state = small_state(16, rng)
    first = integrate(state, params, IntegratorKind.SPECTRAL_SPLIT, 0.5, 50.0)
    second = integrate(state, params, IntegratorKind.SPECTRAL_SPLIT, 0.5, 50.0)
    np.testing.assert_array_equal(first.q, second.q)
    np.testing.assert_array_equal(first.p, second.p)

def test_integrate_rejects_end_before_start(rng):
    with pytest.raises(ValueError, match="t_end"):
        integrate(small_state(8, rng).with_time(5.0), ModelParams(8), IntegratorKind.LEAPFROG, 0.02, 1.0)
