"""Tests for the centralized reference solver."""

import numpy as np
import pytest

from datos.sim.engine import SolverConfig
from datos.sim.netgraph import generate_erdos_renyi, lazy_mix, metropolis_weights
from datos.sim.problems import (
    LeastSquaresRidge,
    LogDetLoss,
    elastic_net,
    logistic_l1,
    single_agent,
    synthetic_classification,
)
from datos.sim.proxops import ProxSpec, soft_threshold
from datos.sim.refsolver import ReferenceSolverError, certify, dual_certificate, prox_grad_reference
from datos.sim.symflat import sym_flatten, sym_size


def _coordinate_descent(prob, sweeps=5000):
    """Exact minimizer of the aggregate elastic net by cyclic coordinate descent."""
    Q = np.zeros((prob.d, prob.d))
    c = np.zeros(prob.d)
    for f in prob.smooth:
        Q += f.A.T @ f.A / f.n + 0.5 * f.gamma * np.eye(prob.d)
        c += f.A.T @ f.b / f.n
    tau = sum(r.lam for r in prob.nonsmooth) / 2.0
    x = np.zeros(prob.d)
    for _ in range(sweeps):
        for j in range(prob.d):
            rest = c[j] - Q[j] @ x + Q[j, j] * x[j]
            x[j] = soft_threshold(np.array([rest]), tau)[0] / Q[j, j]
    return x


def test_matches_coordinate_descent_on_elastic_net():
    prob = elastic_net(0, 5, 10, 4, lam=0.05)
    report = prox_grad_reference(prob, tol=1e-11)
    np.testing.assert_allclose(report.x_star, _coordinate_descent(prob), atol=1e-8)
    assert report.residual <= 1e-11
    assert report.u_star == pytest.approx(prob.objective(report.x_star))


def test_ridge_only_matches_normal_equations():
    prob = elastic_net(2, 3, 8, 3, lam=0.0)
    report = prox_grad_reference(prob, tol=1e-11)
    H = sum(2.0 * f.A.T @ f.A / f.n + f.gamma * np.eye(3) for f in prob.smooth)
    g = sum(2.0 * f.A.T @ f.b / f.n for f in prob.smooth)
    np.testing.assert_allclose(report.x_star, np.linalg.solve(H, g), atol=1e-9)


def test_covariance_with_identity_sample():
    """-log det X + trace(X) over the spectral box is minimized at I."""
    oracle = LogDetLoss(np.eye(3), n=1)
    prob = single_agent(oracle, ProxSpec.spectral_box(0.1, 10.0, 3), d=sym_size(3), family="covariance")
    report = prox_grad_reference(prob, tol=1e-10)
    np.testing.assert_allclose(report.x_star, sym_flatten(np.eye(3)), atol=1e-8)
    assert report.u_star == pytest.approx(3.0)


def test_certify_separates_optimum_from_perturbation():
    prob = elastic_net(1, 4, 10, 5, lam=0.05)
    report = prox_grad_reference(prob, tol=1e-11)
    assert certify(prob, report.x_star) <= 1e-11
    assert certify(prob, report.x_star + 0.1) > 1e-3
    with pytest.raises(ValueError):
        certify(prob, report.x_star, alpha=0.0)


def test_failures_raise_reference_errors():
    prob = elastic_net(0, 3, 6, 2, lam=0.05)
    mixed = prob.with_nonsmooth([ProxSpec.l1(0.05), ProxSpec.l1(0.05), ProxSpec.l1(0.5)])
    with pytest.raises(ReferenceSolverError):
        prox_grad_reference(mixed)
    with pytest.raises(ReferenceSolverError) as info:
        prox_grad_reference(prob, tol=1e-14, max_iter=1)
    assert info.value.iterations == 1
    assert info.value.residual > 1e-14


def test_reference_point_view():
    prob = single_agent(LeastSquaresRidge(np.eye(2), np.array([1.0, -1.0])), ProxSpec.zero(), d=2)
    report = prox_grad_reference(prob, tol=1e-12)
    ref = report.reference(s_star_rows=np.zeros((1, 2)))
    np.testing.assert_allclose(ref.x_star, [1.0, -1.0], atol=1e-10)
    assert ref.s_star_rows.shape == (1, 2)
    assert ref.residual == report.residual


@pytest.mark.parametrize(
    "build",
    [
        lambda: elastic_net(0, 20, 20, 50),
        lambda: logistic_l1(synthetic_classification(0, 10, 30, 40)),
    ],
    ids=["elastic_net", "logistic"],
)
def test_default_tolerance_on_desk_instances(build):
    prob = build()
    report = prox_grad_reference(prob)
    assert report.residual <= 1e-12
    assert certify(prob, report.x_star) <= 1e-12


def _small_network():
    prob = elastic_net(0, 5, 10, 4, lam=0.05)
    graph = generate_erdos_renyi(5, 0.6, 0)
    gossip = lazy_mix(metropolis_weights(graph), 1.0 / 3.0)
    return prob, graph, gossip


def test_dual_certificate_rows_are_subgradients_at_x_star():
    prob, graph, gossip = _small_network()
    x_star = prox_grad_reference(prob, tol=1e-12).x_star
    S = dual_certificate(prob, graph, gossip, SolverConfig(), x_star, rounds=3000)
    assert S.shape == (prob.m, prob.d)
    for i, spec in enumerate(prob.nonsmooth):
        assert spec.inclusion_residual(x_star, S[i]) <= 1e-8
    # with D summing to zero, the rows balance the aggregate gradient
    np.testing.assert_allclose(S.sum(axis=0), -prob.smooth_grad_total(x_star), atol=1e-6)


def test_dual_certificate_rejects_a_wrong_primal_point():
    prob, graph, gossip = _small_network()
    x_star = prox_grad_reference(prob, tol=1e-12).x_star
    with pytest.raises(ReferenceSolverError) as info:
        dual_certificate(prob, graph, gossip, SolverConfig(), x_star + 10.0, rounds=500)
    assert info.value.iterations == 500
    assert info.value.residual > 1e-8
    with pytest.raises(ValueError):
        dual_certificate(prob, graph, gossip, SolverConfig(), x_star, rounds=0)
