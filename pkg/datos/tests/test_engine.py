"""Tests for the network solvers and the run loop."""

import numpy as np
import pytest

from datos.sim.engine import (
    Algorithm,
    EngineError,
    InitKind,
    Runner,
    SolverConfig,
    SolverState,
    datos_round,
    local_datos_round,
    run,
)
from datos.sim.gossip import ConsensusMode, GossipChannel
from datos.sim.lifted import adaptive_dys
from datos.sim.metrics import linear_rate_fit, sublinear_trace_check
from datos.sim.netgraph import generate_erdos_renyi, lazy_mix, metropolis_weights, path_graph
from datos.sim.problems import (
    LeastSquaresRidge,
    covariance_mle,
    elastic_net,
    logistic_l1,
    synthetic_classification,
)
from datos.sim.proxops import ProxSpec
from datos.sim.refsolver import prox_grad_reference
from datos.sim.stepsize import BudgetSpec, BudgetState, LineSearchParams


def _network(seed=0, m=5, d=4):
    prob = elastic_net(seed, m, 10, d, lam=0.05)
    graph = generate_erdos_renyi(m, 0.6, seed)
    gossip = lazy_mix(metropolis_weights(graph), 1.0 / 3.0)
    return prob, graph, gossip


@pytest.fixture(scope="module")
def tiny():
    prob, graph, gossip = _network()
    ref = prox_grad_reference(prob, tol=1e-11).reference()
    return prob, graph, gossip, ref


def _rounds(round_fn, prob, graph, gossip, cfg, rounds):
    state = SolverState.initial(prob, cfg)
    alphas = cfg.alphas_for(prob.m)
    budget = BudgetState.start(cfg.budget, alphas if round_fn is local_datos_round else float(alphas.min()))
    channel = GossipChannel(graph, gossip)
    reports = []
    for _ in range(rounds):
        state, budget, report = round_fn(state, prob, channel, cfg, budget)
        reports.append(report)
    return state, reports, channel


def test_solver_config_validation():
    with pytest.raises(ValueError, match=r"open interval \(0, 1/2\)"):
        SolverConfig(c=0.5)
    with pytest.raises(ValueError):
        SolverConfig(alpha_init=0.0)
    with pytest.raises(ValueError):
        SolverConfig(delta=1.0)
    with pytest.raises(ValueError):
        SolverConfig(alpha_init=(1.0, 2.0)).alphas_for(3)


def test_datos_message_accounting(tiny):
    """Two vector exchanges plus one broadcast per agent each round."""
    prob, graph, gossip, _ = tiny
    _, reports, channel = _rounds(datos_round, prob, graph, gossip, SolverConfig(), 5)
    edges = len(graph.edges)
    for report in reports:
        assert report.messages.vector_msgs == 4 * edges
        assert report.messages.scalar_msgs == 0
        assert report.messages.broadcast_msgs == prob.m
    assert channel.accessed_pairs <= set(graph.edges)


def test_datos_flooding_consensus(tiny):
    prob, graph, gossip, _ = tiny
    cfg = SolverConfig(consensus=ConsensusMode.FLOODING)
    _, reports, _ = _rounds(datos_round, prob, graph, gossip, cfg, 3)
    for report in reports:
        assert report.messages.scalar_msgs == graph.diameter * 2 * len(graph.edges)
        assert report.messages.broadcast_msgs == 0


def test_local_datos_stays_on_edges(tiny):
    """Neighbor consensus only: no broadcasts, and only graph edges carry data."""
    prob, graph, gossip, _ = tiny
    state, reports, channel = _rounds(local_datos_round, prob, graph, gossip, SolverConfig(), 20)
    edges = len(graph.edges)
    for report in reports:
        assert report.messages.vector_msgs == 4 * edges
        assert report.messages.scalar_msgs == 4 * edges
        assert report.messages.broadcast_msgs == 0
    assert channel.accessed_pairs <= set(graph.edges)
    np.testing.assert_array_equal(state.T, 0.0)


@pytest.mark.parametrize("round_fn", [datos_round, local_datos_round])
def test_dual_tracking_sums_to_zero(tiny, round_fn):
    """Column sums of D stay at zero."""
    prob, graph, gossip, _ = tiny
    state, _, _ = _rounds(round_fn, prob, graph, gossip, SolverConfig(), 50)
    scale = 1.0 + np.max(np.abs(state.D))
    np.testing.assert_allclose(state.D.sum(axis=0), 0.0, atol=1e-10 * scale)


def test_datos_stepsize_budget_and_floor(tiny):
    """Growth never exceeds the round's allowance; the stepsize stays above the smoothness floor."""
    prob, graph, gossip, _ = tiny
    cfg = SolverConfig(alpha_init=10.0)
    _, reports, _ = _rounds(datos_round, prob, graph, gossip, cfg, 200)
    floor = min(10.0, cfg.eta * cfg.delta / prob.metadata.lipschitz_max)
    prev = 10.0
    for report in reports:
        alpha = report.alpha_min
        assert report.alpha_max == alpha
        assert alpha ** 2 <= prev ** 2 + report.budget + 1e-12
        assert alpha >= floor * (1.0 - 1e-12)
        assert np.all(report.accepted <= report.candidates)
        prev = alpha


def test_local_stepsizes_respect_neighbors(tiny):
    """Each agent's stepsize is no larger than any neighbor's accepted one."""
    prob, graph, gossip, _ = tiny
    _, reports, _ = _rounds(local_datos_round, prob, graph, gossip, SolverConfig(), 30)
    for report in reports:
        for i in range(prob.m):
            assert report.alphas[i] == min(report.accepted[j] for j in graph.closed_neighborhood(i))


@pytest.mark.parametrize("algorithm", [Algorithm.DATOS, Algorithm.LOCAL_DATOS])
def test_adaptive_variants_converge(tiny, algorithm):
    prob, graph, gossip, ref = tiny
    trace = run(prob, graph, gossip, algorithm, SolverConfig(k_max=2000), reference=ref)
    dist = trace.series("dist_sq")
    assert dist[-1] <= 1e-4 * dist[0]
    assert trace.last.consensus_err <= 1e-2
    assert np.all(trace.series("gap_surrogate") >= -1e-9)


def test_pg_extra_converges(tiny):
    """Fixed stepsize 1/max L_i, one vector exchange per round."""
    prob, graph, gossip, ref = tiny
    trace = run(prob, graph, gossip, Algorithm.PG_EXTRA, SolverConfig(k_max=3000), reference=ref)
    assert trace.rows[1].vec_msgs == 2 * len(graph.edges)
    assert trace.rows[1].alpha_min == pytest.approx(1.0 / prob.metadata.lipschitz_max)
    dist = trace.series("dist_sq")
    assert dist[-1] <= 1e-2 * dist[0]


def test_pg_extra_needs_a_stepsize_without_smoothness():
    prob = covariance_mle(seed=0, m=3, n=20, dim=2)
    graph = path_graph(3)
    gossip = lazy_mix(metropolis_weights(graph), 0.25)
    runner = Runner(prob, graph, gossip, Algorithm.PG_EXTRA, SolverConfig())
    with pytest.raises(EngineError, match="fixed_alpha"):
        runner.initialize()


def test_adaptive_dys_on_scalar_problem():
    """(x - 3)^2 + |x| is minimized at 2.5."""
    params = LineSearchParams()
    stream = adaptive_dys(
        np.zeros(1),
        np.zeros(1),
        LeastSquaresRidge(np.ones((1, 1)), np.array([3.0])),
        ProxSpec.l1(1.0),
        ProxSpec.zero(),
        params,
        10.0,
        BudgetState.start(BudgetSpec(), 10.0),
    )
    for it in stream:
        if it.k == 500:
            break
    np.testing.assert_allclose(it.x, [2.5], atol=1e-8)
    assert it.alpha > 0.0


def test_centralized_runner_reports_no_messages(tiny):
    prob, graph, gossip, ref = tiny
    trace = run(prob, graph, gossip, Algorithm.ADAPTIVE_DYS, SolverConfig(k_max=1500), reference=ref)
    assert all(r.vec_msgs == 0 and r.broadcast_msgs == 0 for r in trace.rows)
    assert trace.last.consensus_err <= 1e-12
    assert trace.last.dist_sq <= 1e-4 * trace.rows[0].dist_sq


def test_runs_are_deterministic(tiny):
    prob, graph, gossip, ref = tiny
    cfg = SolverConfig(k_max=30, seed=3)
    first = run(prob, graph, gossip, Algorithm.DATOS, cfg, reference=ref)
    second = run(prob, graph, gossip, Algorithm.DATOS, cfg, reference=ref)
    assert [r.to_csv_fields() for r in first.rows] == [r.to_csv_fields() for r in second.rows]


def test_worker_pool_matches_sequential(tiny):
    prob, graph, gossip, _ = tiny
    seq = run(prob, graph, gossip, Algorithm.LOCAL_DATOS, SolverConfig(k_max=25))
    par = run(prob, graph, gossip, Algorithm.LOCAL_DATOS, SolverConfig(k_max=25, workers=3))
    np.testing.assert_array_equal(seq.final_state["X"], par.final_state["X"])


def test_trace_shape_and_stop_rule(tiny):
    prob, graph, gossip, ref = tiny
    trace = run(prob, graph, gossip, Algorithm.DATOS, SolverConfig(k_max=40), reference=ref)
    assert len(trace) == 41
    assert [r.k for r in trace.rows] == list(range(41))
    assert trace.rows[0].vec_msgs == 0

    stopped = run(prob, graph, gossip, Algorithm.DATOS, SolverConfig(k_max=2000, stop=1e-2), reference=ref)
    assert stopped.rounds < 2000
    last = stopped.last
    assert last.consensus_err + abs(last.gap_surrogate) <= 1e-2


def test_line_search_failure_is_reported_with_round(tiny):
    prob, graph, gossip, _ = tiny
    cfg = SolverConfig(alpha_init=1e6, max_trials=1)
    runner = Runner(prob, graph, gossip, Algorithm.DATOS, cfg)
    runner.initialize()
    with pytest.raises(EngineError) as info:
        runner.step()
    assert info.value.round == 0
    assert "agent" in str(info.value)


@pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
def test_local_stepsizes_agree_from_a_finite_round(p):
    """Some round K <= 500 exists after which every agent holds the same stepsize."""
    for seed in range(5):
        prob = elastic_net(seed, 6, 10, 4, lam=0.05)
        graph = generate_erdos_renyi(6, p, seed)
        gossip = lazy_mix(metropolis_weights(graph), 1.0 / 3.0)
        trace = run(prob, graph, gossip, Algorithm.LOCAL_DATOS, SolverConfig(k_max=1000, seed=seed))
        disagree = [k for k, a in enumerate(trace.alpha_history) if float(np.ptp(a)) > 0.0]
        K = disagree[-1] + 1 if disagree else 0
        assert K <= 500, f"p={p}, seed {seed}: stepsizes still differ at round {K - 1}"


def test_local_stepsize_growth_respects_budget(tiny):
    """Every agent's squared stepsize grows by at most the round's allowance."""
    prob, graph, gossip, _ = tiny
    cfg = SolverConfig(alpha_init=10.0)
    _, reports, _ = _rounds(local_datos_round, prob, graph, gossip, cfg, 300)
    prev = cfg.alphas_for(prob.m)
    for report in reports:
        growth = report.alphas ** 2 - prev ** 2
        assert growth.max() <= report.budget + 1e-12, f"round {report.k}"
        prev = report.alphas


DESK_SCALE = {
    "logistic": lambda: logistic_l1(synthetic_classification(0, 10, 30, 40)),
    "elastic_net": lambda: elastic_net(0, 20, 20, 50),
    "covariance": lambda: covariance_mle(0, 10, 100, 5),
}


@pytest.fixture(scope="module", params=sorted(DESK_SCALE))
def desk(request):
    prob = DESK_SCALE[request.param]()
    graph = generate_erdos_renyi(prob.m, 0.5, 0)
    gossip = lazy_mix(metropolis_weights(graph), 1.0 / 3.0)
    ref = prox_grad_reference(prob).reference()
    init = InitKind.FEASIBLE if request.param == "covariance" else InitKind.NORMAL
    return prob, graph, gossip, ref, init


@pytest.mark.parametrize("algorithm", [Algorithm.DATOS, Algorithm.LOCAL_DATOS])
def test_desk_scale_runs_reach_tolerance(desk, algorithm):
    prob, graph, gossip, ref, init = desk
    cfg = SolverConfig(k_max=20_000, stop=1e-8, init=init)
    trace = run(prob, graph, gossip, algorithm, cfg, reference=ref)
    assert trace.rounds < 20_000
    last = trace.last
    assert last.consensus_err <= 1e-8
    assert abs(last.gap_surrogate) <= 1e-8
    D = trace.final_state["D"]
    np.testing.assert_allclose(D.sum(axis=0), 0.0, atol=1e-9 * (1.0 + np.max(np.abs(D))))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_logistic_ergodic_gap_decays_like_one_over_k(seed):
    prob = logistic_l1(synthetic_classification(seed, 10, 30, 40))
    graph = generate_erdos_renyi(prob.m, 0.5, seed)
    gossip = lazy_mix(metropolis_weights(graph), 1.0 / 3.0)
    ref = prox_grad_reference(prob).reference()
    trace = run(prob, graph, gossip, Algorithm.DATOS, SolverConfig(k_max=2000, seed=seed), reference=ref)
    c_hat, ok = sublinear_trace_check(trace)
    assert np.isfinite(c_hat) and c_hat > 0.0
    assert ok



def test_support_identification_and_linear_rate(tiny):
    prob, graph, gossip, ref = tiny
    runner = Runner(prob, graph, gossip, Algorithm.DATOS, SolverConfig(k_max=1500), reference=ref)
    runner.initialize()
    trace = runner.run()
    assert runner.tracker.settled
    assert not runner.tracker.reverted
    dist = trace.series("dist_sq")
    window = dist[100:600]
    assert np.all(window > 0.0)
    rho, _ = linear_rate_fit(window, window=len(window))
    assert rho < 1.0
