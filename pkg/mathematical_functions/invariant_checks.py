# mathematical_functions/invariant_checks.py

import logging

import numpy as np

from mathematical_functions.integrators import IntegratorKind, integrate
from mathematical_functions.lattice_core import (
    ChainState, ModelParams, force, cubic_force, total_energy, cubic_energy
)
from mathematical_functions.mode_transform import to_modes, from_modes, mode_energies

logger = logging.getLogger(__name__)
if not logger.handlers:
    logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')

CHECK_SEED = 20150401


def random_state(n_sites: int, rng: np.random.Generator, scale: float = 1.0) -> ChainState:
    return ChainState(scale * rng.standard_normal(n_sites), scale * rng.standard_normal(n_sites))


def direct_dft(values: np.ndarray) -> np.ndarray:
    """O(N^2) unitary transform with the +i kernel, the reference for `to_modes`."""
    n = values.shape[0]
    k = np.arange(n)
    kernel = np.exp(2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)
    return kernel @ values


def finite_difference_gradient(energy, state: ChainState, step: float = 1e-6) -> np.ndarray:
    """Central differences of energy(state) with respect to each position."""
    grad = np.empty(state.n_sites)
    for i in range(state.n_sites):
        q_plus = state.q.copy()
        q_minus = state.q.copy()
        q_plus[i] += step
        q_minus[i] -= step
        grad[i] = (energy(ChainState(q_plus, state.p)) - energy(ChainState(q_minus, state.p))) / (2 * step)
    return grad


def check_transform_round_trip(rng: np.random.Generator) -> dict:
    worst_round_trip = 0.0
    worst_dft = 0.0
    for n in (8, 64, 512):
        state = random_state(n, rng)
        back = from_modes(to_modes(state))
        worst_round_trip = max(worst_round_trip, float(np.max(np.abs(back.q - state.q))),
                               float(np.max(np.abs(back.p - state.p))))
        if n <= 64:
            worst_dft = max(worst_dft, float(np.max(np.abs(to_modes(state).amplitudes - direct_dft(state.q)))))
    passed = worst_round_trip <= 1e-12 and worst_dft <= 1e-10
    return {'name': 'transform round trip', 'passed': passed,
            'detail': f"round-trip error {worst_round_trip:.2e}, direct-DFT error {worst_dft:.2e}"}


def check_parseval(rng: np.random.Generator, n_states: int = 1000) -> dict:
    params = ModelParams(64, alpha=0.0, beta=0.0)
    worst = 0.0
    for _ in range(n_states):
        state = random_state(64, rng)
        spectrum_total = float(np.sum(mode_energies(to_modes(state)).energies))
        reference = total_energy(state, params)
        worst = max(worst, abs(spectrum_total - reference) / reference)
    return {'name': 'Parseval', 'passed': worst <= 1e-10, 'detail': f"worst relative error {worst:.2e}"}


def check_force_gradient(rng: np.random.Generator, n_states: int = 100) -> dict:
    worst = 0.0
    for n in (3, 8, 32):
        params = ModelParams(n, alpha=0.25, beta=0.0)
        for _ in range(n_states):
            state = random_state(n, rng, scale=0.5)
            pairs = (
                (force(state, params), -finite_difference_gradient(lambda s: total_energy(s, params), state)),
                (cubic_force(state, params), -finite_difference_gradient(lambda s: cubic_energy(s, params), state)),
            )
            for analytic, numeric in pairs:
                scale = max(1.0, float(np.max(np.abs(analytic))))
                worst = max(worst, float(np.max(np.abs(analytic - numeric))) / scale)
    return {'name': 'force gradient', 'passed': worst <= 1e-6, 'detail': f"worst relative error {worst:.2e}"}


def check_linear_flow_exactness(rng: np.random.Generator, n_steps: int = 10_000, h: float = 1.0) -> dict:
    params = ModelParams(64, alpha=0.0, beta=0.0)
    state = random_state(64, rng)
    state = ChainState(state.q, state.p - np.mean(state.p))
    after_state = integrate(state, params, IntegratorKind.SPECTRAL_SPLIT, h, n_steps * h)
    worst = worst_mode_energy_change(state, after_state)
    return {'name': 'exact linear flow', 'passed': worst <= 1e-12, 'detail': f"worst relative mode-energy change {worst:.2e}"}


def worst_mode_energy_change(before: ChainState, after: ChainState) -> float:
    """max over k >= 1 of |E_k(after) - E_k(before)| / E_k(before); the zero mode is skipped."""
    e_before = mode_energies(to_modes(before)).energies[1:]
    e_after = mode_energies(to_modes(after)).energies[1:]
    return float(np.max(np.abs(e_after - e_before) / e_before))


def splitting_convergence_ratio(state: ChainState, params: ModelParams, h: float, t_end: float,
                                kind: IntegratorKind = IntegratorKind.SPECTRAL_SPLIT) -> float:
    """Global error at h over global error at h/2, both against an h/16 reference."""
    reference = integrate(state, params, kind, h / 16, t_end)
    coarse = integrate(state, params, kind, h, t_end)
    fine = integrate(state, params, kind, h / 2, t_end)

    def error(result: ChainState) -> float:
        return float(np.sqrt(np.sum((result.q - reference.q) ** 2 + (result.p - reference.p) ** 2)))

    return error(coarse) / error(fine)


def check_splitting_order(rng: np.random.Generator) -> dict:
    params = ModelParams(8, alpha=0.25, beta=0.0)
    state = random_state(8, rng, scale=0.1)
    ratio = splitting_convergence_ratio(state, params, h=0.2, t_end=10.0)
    return {'name': 'splitting order', 'passed': 3.4 <= ratio <= 4.6, 'detail': f"error ratio {ratio:.3f}"}


def run_invariant_checks(seed: int = CHECK_SEED) -> list[dict]:
    """
    Runs the built-in invariant suite.

    Returns:
        list[dict]: One entry per check with keys 'name', 'passed', 'detail'.
    """
    rng = np.random.default_rng(seed)
    results = []
    for check in (check_transform_round_trip, check_parseval, check_force_gradient,
                  check_linear_flow_exactness, check_splitting_order):
        result = check(rng)
        log = logger.info if result['passed'] else logger.error
        log("%s: %s (%s)", result['name'], "ok" if result['passed'] else "FAILED", result['detail'])
        results.append(result)
    return results
