"""
Experiment orchestration: build problem and network from a config, obtain the
reference point, run algorithms and write their outputs. Also hosts the fast
invariant suite behind `datos validate`.
"""

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional
import logging

import numpy as np

from .config import ExperimentConfig
from .data.cache import ReferenceCache, config_hash
from .data.libsvm import read_libsvm, split_dataset
from .data.models import ReferenceRow, RunTrace
from .data.traces import write_compare, write_metric_files, write_trace
from .sim.engine import Algorithm, Runner, RoundResult, SolverConfig, SolverState, datos_round, exchange, local_datos_update
from .sim.gossip import GossipChannel
from .sim.lifted import lifted_trajectory
from .sim.metrics import ReferencePoint
from .sim.netgraph import (
    GossipMatrix,
    NetworkGraph,
    complete_graph,
    generate_erdos_renyi,
    lazy_mix,
    metropolis_weights,
    path_graph,
    read_edge_list,
    star_graph,
    validate_gossip,
)
from .sim.problems import (
    LeastSquaresRidge,
    LogDetLoss,
    LogisticLoss,
    ProblemInstance,
    covariance_mle,
    elastic_net,
    logistic_l1,
    synthetic_classification,
)
from .sim.proxops import ProxSpec, l1_inclusion_residual, soft_threshold
from .sim.refsolver import dual_certificate, prox_grad_reference
from .sim.stepsize import BudgetState
from .sim.symflat import sym_flatten, sym_unflatten

logger = logging.getLogger(__name__)


# Building blocks

def build_graph(cfg: ExperimentConfig) -> tuple[NetworkGraph, GossipMatrix]:
    g = cfg.graph
    if g.kind == "erdos_renyi":
        graph = generate_erdos_renyi(g.m, g.p, cfg.graph_seed)
    elif g.kind == "path":
        graph = path_graph(g.m)
    elif g.kind == "star":
        graph = star_graph(g.m)
    elif g.kind == "complete":
        graph = complete_graph(g.m)
    else:
        graph = read_edge_list(g.edges)
        if graph.m != g.m:
            raise ValueError(f"edge list has m={graph.m}, config says graph.m = {g.m}")
    return graph, lazy_mix(metropolis_weights(graph), cfg.solver.c)


def build_problem(cfg: ExperimentConfig) -> ProblemInstance:
    p, m, seed = cfg.problem, cfg.graph.m, cfg.problem_seed
    if p.family == "elastic_net":
        return elastic_net(seed, m, p.n, p.d, lam=p.lam, gamma=p.gamma)
    if p.family == "covariance":
        return covariance_mle(seed, m, p.n, p.dim, a=p.box[0], b=p.box[1], trace_sign=p.trace_sign)
    if p.libsvm:
        shards = split_dataset(read_libsvm(p.libsvm, p.d, limit=p.limit, rule=cfg.label_rule), m)
    else:
        shards = synthetic_classification(seed, m, p.n, p.d, density=p.density, flip=p.flip)
    return logistic_l1(shards, lam=p.lam)


def reference_for(
    cfg: ExperimentConfig,
    prob: ProblemInstance,
    graph: Optional[NetworkGraph] = None,
    gossip: Optional[GossipMatrix] = None,
) -> Optional[ReferencePoint]:
    """
    Reference point from the cache when configured, otherwise a fresh solve.

    When the merit metric is requested and the network is given, certified
    dual rows S* from a long DATOS run are attached.
    """
    if not cfg.metrics.reference:
        return None
    ref = _primal_reference(cfg, prob)
    if "merit" in cfg.metrics.plots and graph is not None and gossip is not None:
        s_star = dual_certificate(
            prob,
            graph,
            gossip,
            cfg.solver_config(),
            ref.x_star,
            rounds=cfg.metrics.certificate_rounds,
            tol=cfg.metrics.certificate_tol,
        )
        ref = replace(ref, s_star_rows=s_star)
    return ref


def _primal_reference(cfg: ExperimentConfig, prob: ProblemInstance) -> ReferencePoint:
    tol, max_iter = cfg.metrics.ref_tol, cfg.metrics.ref_max_iter
    if cfg.output.cache is None:
        return prox_grad_reference(prob, tol=tol, max_iter=max_iter).reference()

    key = config_hash(cfg.problem_key(), tol)
    with ReferenceCache(cfg.output.cache) as cache:
        row = cache.get(key)
        if row is None:
            report = prox_grad_reference(prob, tol=tol, max_iter=max_iter)
            row = ReferenceRow(
                config_hash=key,
                x_star=report.x_star,
                u_star=report.u_star,
                residual=report.residual,
                iterations=report.iterations,
            )
            cache.save(row)
    return ReferencePoint(x_star=row.x_star, u_star=row.u_star, residual=row.residual)


@dataclass
class Experiment:
    """Everything a run needs, built once from a config."""
    cfg: ExperimentConfig
    prob: ProblemInstance
    graph: NetworkGraph
    gossip: GossipMatrix
    reference: Optional[ReferencePoint]
    solver: SolverConfig

    @classmethod
    def build(cls, cfg: ExperimentConfig) -> "Experiment":
        graph, gossip = build_graph(cfg)
        prob = build_problem(cfg)
        logger.info("built %s problem: m=%d d=%d, graph diameter %d", prob.metadata.family, prob.m, prob.d, graph.diameter)
        return cls(
            cfg=cfg,
            prob=prob,
            graph=graph,
            gossip=gossip,
            reference=reference_for(cfg, prob, graph, gossip),
            solver=cfg.solver_config(),
        )

    def run(self, algorithm: Algorithm, narrator: Optional[Callable[[RoundResult], None]] = None) -> RunTrace:
        runner = Runner(
            self.prob, self.graph, self.gossip, algorithm, self.solver, reference=self.reference, narrator=narrator
        )
        runner.initialize()
        return runner.run()


def write_run(trace: RunTrace, out_dir: Path, metrics: list[str]) -> Path:
    path = write_trace(trace, out_dir / "trace.csv")
    write_metric_files(trace, out_dir / "plots", metrics)
    return path


def run_experiment(cfg: ExperimentConfig, narrator=None) -> RunTrace:
    exp = Experiment.build(cfg)
    trace = exp.run(cfg.algorithm(), narrator=narrator)
    write_run(trace, Path(cfg.output.dir), cfg.metrics.plots)
    return trace


def compare_experiment(cfg: ExperimentConfig, narrator=None) -> list[RunTrace]:
    """One trace per algorithm under <out>/<algorithm>/ plus <out>/compare.csv."""
    exp = Experiment.build(cfg)
    out = Path(cfg.output.dir)
    traces = []
    for algorithm in cfg.algorithms():
        trace = exp.run(algorithm, narrator=narrator)
        write_run(trace, out / algorithm.value, cfg.metrics.plots)
        traces.append(trace)
    write_compare(traces, out / "compare.csv")
    return traces


# Invariant suite

@dataclass
class GroupResult:
    name: str
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def check_gossip(graphs: int = 100, m: int = 20) -> list[str]:
    failures = []
    for p in (0.1, 0.5, 0.9):
        for seed in range(graphs):
            g = generate_erdos_renyi(m, p, seed)
            issues = validate_gossip(lazy_mix(metropolis_weights(g), 1.0 / 3.0), g)
            failures.extend(f"G({m}, {p}) seed {seed}: {issue}" for issue in issues)
    return failures


def _fd_error(oracle, x: np.ndarray, h: float = 1e-6) -> float:
    grad = oracle.grad(x)
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(5):
        v = rng.standard_normal(x.shape)
        v /= np.linalg.norm(v)
        fd = (oracle.value(x + h * v) - oracle.value(x - h * v)) / (2.0 * h)
        worst = max(worst, abs(fd - float(grad @ v)) / (1.0 + abs(fd)))
    return worst


def check_gradients(tol: float = 1e-5) -> list[str]:
    rng = np.random.default_rng(0)
    A = rng.standard_normal((15, 6))
    labels = np.where(rng.random(15) < 0.5, -1.0, 1.0)
    y = np.cov(rng.standard_normal((4, 30)))
    oracles = {
        "logistic": (LogisticLoss(A, labels), rng.standard_normal(6)),
        "ridge": (LeastSquaresRidge(A, rng.standard_normal(15), 0.3), rng.standard_normal(6)),
        "logdet": (LogDetLoss(y, 30), sym_flatten(np.eye(4) + 0.1 * np.diag(np.arange(4.0)))),
    }
    failures = []
    for name, (oracle, x) in oracles.items():
        err = _fd_error(oracle, x)
        if err > tol:
            failures.append(f"{name}: finite-difference mismatch {err:.2e}")
    return failures


def check_prox(tol: float = 1e-12) -> list[str]:
    failures = []
    rng = np.random.default_rng(2)
    v = rng.standard_normal(20) * 3.0
    lam, alpha = 0.7, 1.3
    x = soft_threshold(v, alpha * lam)
    residual = l1_inclusion_residual(x, (v - x) / alpha, lam)
    if residual > tol:
        failures.append(f"soft-threshold optimality residual {residual:.2e}")

    box = ProxSpec.box(-0.5, 0.5)
    p = box.prox(v, alpha)
    if np.any(p < -0.5) or np.any(p > 0.5) or not np.allclose(p, np.clip(v, -0.5, 0.5)):
        failures.append("box projection leaves the box")

    sbox = ProxSpec.spectral_box(0.1, 10.0, 4)
    raw = rng.standard_normal((4, 4)) * 20.0
    eigs = np.linalg.eigvalsh(sym_unflatten(sbox.prox(sym_flatten(raw + raw.T), alpha), 4))
    if eigs.min() < 0.1 - 1e-10 or eigs.max() > 10.0 + 1e-10:
        failures.append(f"spectral box projection eigenvalues {eigs.min():.3e}..{eigs.max():.3e}")

    if not np.array_equal(ProxSpec.zero().prox(v, alpha), v):
        failures.append("zero prox is not the identity")
    return failures


def _tiny_network(seed: int, m: int = 5, d: int = 4):
    prob = elastic_net(seed, m, 10, d, lam=0.05)
    graph = generate_erdos_renyi(m, 0.6, seed)
    gossip = lazy_mix(metropolis_weights(graph), 1.0 / 3.0)
    return prob, graph, gossip


def check_lifted(instances: int = 10, rounds: int = 50, tol: float = 1e-10) -> list[str]:
    """Network recursion against the lifted recursion driven by the same stepsizes."""
    failures = []
    for seed in range(instances):
        prob, graph, gossip = _tiny_network(seed)
        cfg = SolverConfig(seed=seed)
        state = SolverState.initial(prob, cfg)
        X0, S0 = state.X, state.S
        budget = BudgetState.start(cfg.budget, cfg.alpha_init)
        channel = GossipChannel(graph, gossip)
        states, alphas = [state], []
        for _ in range(rounds):
            state, budget, report = datos_round(state, prob, channel, cfg, budget)
            states.append(state)
            alphas.append(report.alpha_min)

        lifted = lifted_trajectory(prob, gossip, X0, S0, alphas)
        for k, (net, lif) in enumerate(zip(states, lifted)):
            err = max(np.max(np.abs(net.X - lif.X)), np.max(np.abs(net.S - lif.S)))
            if err > tol:
                failures.append(f"instance {seed}, round {k}: lifted mismatch {err:.2e}")
                break
            gap = np.max(np.abs(lif.L_mat @ net.T - (lif.Y - lifted[0].Y)))
            if gap > 1e-9:
                failures.append(f"instance {seed}, round {k}: L T != Y - Y0 ({gap:.2e})")
                break
    return failures


def check_uniform_stepsize(instances: int = 3, rounds: int = 100, tol: float = 1e-12) -> list[str]:
    """Neighbor-consensus updates forced onto the global stepsize reproduce DATOS."""
    failures = []
    for seed in range(instances):
        prob, graph, gossip = _tiny_network(seed)
        cfg = SolverConfig(seed=seed)
        glob = SolverState.initial(prob, cfg)
        local = glob
        budget = BudgetState.start(cfg.budget, cfg.alpha_init)
        channel = GossipChannel(graph, gossip)
        for k in range(rounds):
            ex_local = exchange(local, prob, channel)
            glob, budget, report = datos_round(glob, prob, channel, cfg, budget)
            local = local_datos_update(local, prob, channel, np.full(prob.m, report.alpha_min), ex_local)
            err = max(np.max(np.abs(glob.X - local.X)), np.max(np.abs(glob.S - local.S)))
            if err > tol * (1.0 + np.max(np.abs(glob.X))):
                failures.append(f"instance {seed}, round {k}: deviation {err:.2e}")
                break
    return failures


VALIDATION_GROUPS: dict[str, Callable[[], list[str]]] = {
    "gossip": check_gossip,
    "gradients": check_gradients,
    "prox": check_prox,
    "lifted": check_lifted,
    "uniform_stepsize": check_uniform_stepsize,
}


def run_validation(groups: Optional[list[str]] = None) -> list[GroupResult]:
    results = []
    for name in groups or list(VALIDATION_GROUPS):
        try:
            failures = VALIDATION_GROUPS[name]()
        except Exception as e:  # a crashing group is a failing group
            failures = [f"{type(e).__name__}: {e}"]
        results.append(GroupResult(name=name, failures=failures))
    return results
