"""Tests for backtracking, candidate stepsizes and budget sequences."""

import math

import numpy as np
import pytest
from scipy.special import zeta

from datos.sim.problems import LeastSquaresRidge, SmoothOracle
from datos.sim.stepsize import (
    BudgetKind,
    BudgetSpec,
    BudgetState,
    LineSearchError,
    LineSearchParams,
    backtrack,
    budget_next,
    candidate_alpha_global,
    candidate_alpha_local,
    descent_gap,
    linesearch,
    summability_bound,
)


def _square():
    """f(x) = x^2 as a ridge term with no data (L = 2)."""
    return LeastSquaresRidge(np.zeros((1, 1)), np.zeros(1), gamma=2.0)


def test_linesearch_on_quadratic():
    """Gradient step on x^2 passes iff alpha <= delta/2: 1, 0.5 fail and 0.25 passes."""
    f = _square()
    x1 = np.array([1.0])
    result = linesearch(1.0, x1, x1, -f.grad(x1), f, LineSearchParams())
    assert result.alpha == pytest.approx(0.25)
    assert result.trials == 3
    np.testing.assert_allclose(result.point, [0.5])


def test_linesearch_accepts_first_trial_when_small():
    """A stepsize already below delta/L is accepted without shrinking."""
    f = _square()
    x1 = np.array([3.0])
    result = linesearch(0.1, x1, x1, -f.grad(x1), f, LineSearchParams())
    assert result.trials == 1
    assert result.alpha == 0.1


def test_linesearch_failure_carries_context():
    """Exhausting max_trials raises with the last alpha and the trial count."""
    f = _square()
    x1 = np.array([1.0])
    with pytest.raises(LineSearchError) as info:
        linesearch(1.0, x1, x1, -f.grad(x1), f, LineSearchParams(max_trials=2))
    assert info.value.trials == 2
    assert info.value.alpha == pytest.approx(0.5)
    located = info.value.located(3, 17)
    assert located.agent == 3 and located.round == 17
    assert "agent 3, round 17" in str(located)


class _Walled(SmoothOracle):
    """x^2 to the right of x = -0.6, +inf to the left."""

    def value(self, x):
        return float(x @ x) if x[0] > -0.6 else np.inf

    def grad(self, x):
        return 2.0 * x

    @property
    def lipschitz(self):
        return 2.0


def test_backtrack_rejects_points_outside_domain():
    """Trial points at -3 and -1 are outside the domain; 0 passes the test."""
    f = _Walled()
    x1 = np.array([1.0])
    calls = []

    def trial(alpha):
        calls.append(alpha)
        return x1 - 4.0 * alpha

    result = backtrack(1.0, x1, trial, f, LineSearchParams())
    assert calls == [1.0, 0.5, 0.25]
    assert result.alpha == pytest.approx(0.25)
    np.testing.assert_allclose(result.point, [0.0])


def test_descent_gap_sign():
    """Nonpositive exactly when the quadratic upper model holds."""
    f = _square()
    x1 = np.array([1.0])
    g = f.grad(x1)
    good = x1 - 0.25 * g
    bad = x1 - 0.5 * g
    assert descent_gap(f.value(good), f.value(x1), g, good, x1, 0.25, 0.9) <= 0.0
    assert descent_gap(f.value(bad), f.value(x1), g, bad, x1, 0.5, 0.9) > 0.0
    assert descent_gap(np.inf, 1.0, g, bad, x1, 0.5, 0.9) == np.inf


def test_line_search_params_validation():
    """Parameters outside their ranges are rejected."""
    for kwargs in ({"eta": 1.0}, {"delta": 0.0}, {"max_trials": 0}, {"slack": -1.0}):
        with pytest.raises(ValueError):
            LineSearchParams(**kwargs)


def test_candidate_alpha_global():
    """sqrt(alpha^2 + min(ratio, n)) with 0/0 read as +inf."""
    z = np.zeros(1)
    assert candidate_alpha_global(1.0, z, z, z, z, z, 1 / 3, 0.25, 0.9) == pytest.approx(math.sqrt(1.25))
    cand = candidate_alpha_global(
        1.0, np.array([2.0]), z, np.array([1.0]), z, z, 1 / 3, 1.0, 0.9
    )
    assert cand == pytest.approx(math.sqrt(1.1))
    t = np.array([1.5])
    cand = candidate_alpha_global(1.0, np.array([2.0]), z, np.array([1.0]), z, t, 1 / 3, 1.0, 0.9)
    assert cand == pytest.approx(math.sqrt(1.0 + 0.1 / 2.5))


def test_candidate_alpha_local():
    """Budget-only growth."""
    assert candidate_alpha_local(3.0, 16.0) == pytest.approx(5.0)
    with pytest.raises(ValueError):
        candidate_alpha_local(1.0, -1.0)


def test_fixed_budget_sequence():
    """n^k = beta / (k+1)^p regardless of drops."""
    state = BudgetState.start(BudgetSpec(kind=BudgetKind.FIXED, beta=2.0, p=3.0), 1.0)
    values = []
    for alpha in (1.0, 0.1, 0.1):
        n, state = budget_next(state, alpha)
        values.append(n)
    assert values == pytest.approx([2.0, 2.0 / 8, 2.0 / 27])
    assert state.drops == 0


def test_drop_reset_budget():
    """A drop resets the epoch clock and bumps the drop counter."""
    state = BudgetState.start(BudgetSpec(), 1.0)
    assert state.peek() == pytest.approx(0.25)

    n0, state = budget_next(state, 0.5)  # 0.5 <= 0.7 * 1.0
    assert state.drops == 1 and state.last_drop == 0
    assert n0 == pytest.approx(1.0 / (4 * 1))

    assert state.peek() == pytest.approx(1.0 / (4 * 4))
    n1, state = budget_next(state, 0.5)
    assert n1 == pytest.approx(1.0 / 16)
    assert state.drops == 1


def test_per_agent_drop_detection():
    """With per-agent minima, one agent's drop resets the shared counter."""
    state = BudgetState.start(BudgetSpec(), [1.0, 0.2])
    _, state = budget_next(state, [0.9, 0.2])
    assert state.drops == 0
    _, state = budget_next(state, [0.9, 0.1])
    assert state.drops == 1
    assert state.running_min == (0.9, 0.1)


def test_budget_is_summable_on_random_histories():
    """Total allowance never exceeds beta * zeta(p) * zeta(q)."""
    spec = BudgetSpec(beta=1.5, p=2.0, q=2.5)
    bound = summability_bound(spec)
    assert bound == pytest.approx(1.5 * zeta(2.0) * zeta(2.5))
    rng = np.random.default_rng(0)
    for _ in range(200):
        state = BudgetState.start(spec, 1.0)
        total = 0.0
        alpha = 1.0
        for _ in range(300):
            alpha *= float(rng.choice([0.3, 0.9, 1.0, 1.1]))
            n, state = budget_next(state, alpha)
            total += n
        assert total <= bound + 1e-9


def test_budget_spec_validation():
    """p, q must exceed 1; beta positive; eta_prime in (0, 1)."""
    for kwargs in ({"p": 1.0}, {"q": 0.5}, {"beta": 0.0}, {"eta_prime": 1.0}):
        with pytest.raises(ValueError):
            BudgetSpec(**kwargs)
    with pytest.raises(ValueError):
        budget_next(BudgetState.start(BudgetSpec(), 1.0), 0.0)
