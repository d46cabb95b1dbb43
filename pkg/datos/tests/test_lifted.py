"""Tests for the lifted recursion and its agreement with the network engine."""

import numpy as np
import pytest

from datos.harness import check_lifted, check_uniform_stepsize
from datos.sim.engine import SolverConfig, SolverState, datos_round
from datos.sim.gossip import GossipChannel
from datos.sim.lifted import (
    LiftedState,
    companion_lyapunov,
    lifted_lyapunov,
    lifted_round,
    lifted_trajectory,
    matrix_roots,
)
from datos.sim.metrics import ReferencePoint
from datos.sim.netgraph import generate_erdos_renyi, lazy_mix, metropolis_weights
from datos.sim.problems import elastic_net
from datos.sim.refsolver import prox_grad_reference
from datos.sim.stepsize import BudgetState


def test_network_matches_lifted_recursion():
    """Same stepsizes, same X and S; L T = Y - Y0 along the way."""
    assert check_lifted() == []


def test_uniform_stepsize_reduces_local_to_global():
    assert check_uniform_stepsize() == []


def test_matrix_roots():
    g = generate_erdos_renyi(7, 0.5, seed=1)
    gossip = lazy_mix(metropolis_weights(g), 1.0 / 3.0)
    L, M = matrix_roots(gossip.w)
    np.testing.assert_allclose(L @ L, np.eye(7) - gossip.w, atol=1e-12)
    np.testing.assert_allclose(M @ M, gossip.w, atol=1e-12)
    np.testing.assert_allclose(L @ np.ones(7), 0.0, atol=1e-12)


def test_lifted_round_keeps_dual_in_range():
    """Y stays orthogonal to the consensus direction, so D = L Y sums to zero."""
    prob = elastic_net(0, 5, 10, 4, lam=0.05)
    gossip = lazy_mix(metropolis_weights(generate_erdos_renyi(5, 0.6, 0)), 1.0 / 3.0)
    rng = np.random.default_rng(0)
    state = LiftedState.initial(rng.standard_normal((5, 4)), rng.standard_normal((5, 4)), gossip)
    for alpha in (1.0, 0.5, 0.5, 0.25):
        state = lifted_round(state, prob, alpha)
    np.testing.assert_allclose(state.Y.sum(axis=0), 0.0, atol=1e-10)
    np.testing.assert_allclose(state.D.sum(axis=0), 0.0, atol=1e-10)
    np.testing.assert_array_equal(state.Xt, 0.0)
    with pytest.raises(ValueError):
        lifted_round(state, prob, 0.0)


def test_merit_functions():
    ref = ReferencePoint(x_star=np.zeros(2), u_star=0.0, s_star_rows=np.zeros((1, 2)))
    gossip = lazy_mix(np.eye(1), 0.25)
    state = LiftedState.initial(np.array([[1.0, 1.0]]), np.array([[0.0, 1.0]]), gossip)
    # primal 2, dual 1 scaled by alpha^2 = 4
    assert lifted_lyapunov(state, 2.0, ref) == pytest.approx(6.0)
    value = companion_lyapunov(6.0, np.ones((1, 2)), np.zeros((1, 2)), 0.9, dual_spread_sq=1.0, budget_spent=0.5)
    assert value == pytest.approx(6.0 + 0.05 * 2.0 - 1.0)


def _lifted_curvature(prob, state, nxt):
    """2 * Bregman distance of F from X^k to A^{k+1} over the squared lifted step."""
    step = nxt.A - state.X
    norm_sq = float(np.sum(step ** 2) + np.sum((nxt.At - state.Xt) ** 2))
    if norm_sq == 0.0:
        return 0.0
    bregman = float(np.sum(prob.f_values(nxt.A)) - np.sum(prob.f_values(state.X)))
    bregman -= float(np.sum(prob.grad_F(state.X) * step))
    return 2.0 * bregman / norm_sq


def test_companion_merit_decreases_along_datos_stepsizes():
    """
    Stepsizes and allowances from network DATOS drive the lifted recursion; on
    every round whose stepsize sits under delta / L^k the companion merit does
    not increase.
    """
    prob = elastic_net(0, 5, 10, 4, lam=0.05)
    graph = generate_erdos_renyi(5, 0.6, 0)
    gossip = lazy_mix(metropolis_weights(graph), 1.0 / 3.0)
    cfg = SolverConfig()
    state = SolverState.initial(prob, cfg)
    X0, S0 = state.X, state.S
    budget = BudgetState.start(cfg.budget, cfg.alpha_init)
    channel = GossipChannel(graph, gossip)
    alphas, allowances = [], []
    for _ in range(2000):
        state, budget, report = datos_round(state, prob, channel, cfg, budget)
        alphas.append(report.alpha_min)
        allowances.append(report.budget)

    lifted = lifted_trajectory(prob, gossip, X0, S0, alphas)
    x_star = prox_grad_reference(prob, tol=1e-12).x_star
    final = lifted[-1]
    np.testing.assert_allclose(final.X, np.tile(x_star, (prob.m, 1)), atol=1e-9)
    ref = ReferencePoint(x_star=x_star, u_star=prob.objective(x_star), s_star_rows=final.S)
    spread = float(np.sum((S0 - final.S) ** 2) + np.sum(final.St ** 2))

    def companion(k):
        cur, prev = lifted[k], lifted[k - 1]
        merit = lifted_lyapunov(cur, alphas[k - 1], ref, st_star=final.St)
        return companion_lyapunov(
            merit,
            np.vstack([cur.A, cur.At]),
            np.vstack([prev.X, prev.Xt]),
            cfg.delta,
            dual_spread_sq=spread,
            budget_spent=sum(allowances[:k]),
        )

    values = [companion(k) for k in range(1, 402)]
    tol = 1e-8 * (1.0 + abs(values[0]))
    checked = 0
    for k in range(1, 401):
        if alphas[k] * _lifted_curvature(prob, lifted[k], lifted[k + 1]) > cfg.delta:
            continue
        checked += 1
        assert values[k] <= values[k - 1] + tol, f"companion merit grew at round {k}"
    assert checked >= 200
