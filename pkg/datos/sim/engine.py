"""Main solver engine for DATOS Lab."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Callable, Iterator, NamedTuple, Optional
import logging

import numpy as np

from ..data.models import RunTrace, TraceRow
from .gossip import ConsensusMode, GossipChannel, MessageLedger
from .lifted import DysIterate, adaptive_dys
from .metrics import (
    ErgodicAverage,
    ReferencePoint,
    SupportTracker,
    consensus_error,
    distance_sq,
    lyapunov_value,
    optimality_gap,
    support_sets,
)
from .netgraph import GossipMatrix, NetworkGraph
from .problems import AggregateLoss, ProblemInstance, aggregate_nonsmooth, is_l1
from .proxops import ProxSpec, prox_rowwise
from .stepsize import (
    BudgetSpec,
    BudgetState,
    LineSearchError,
    LineSearchParams,
    budget_next,
    candidate_alpha_global,
    candidate_alpha_local,
    descent_gap,
    linesearch,
)

logger = logging.getLogger(__name__)


# Support threshold used when no reference point is available
DEFAULT_SUPPORT_TOL = 1e-9


class Algorithm(Enum):
    DATOS = "datos"
    LOCAL_DATOS = "local_datos"
    ADAPTIVE_DYS = "adaptive_dys"
    PG_EXTRA = "pg_extra"


class InitKind(Enum):
    """How X0 is drawn: standard normal rows, or those rows pushed through each prox."""
    NORMAL = "normal"
    FEASIBLE = "feasible"


class EngineError(RuntimeError):
    """A run could not continue; carries the round it stopped in."""

    def __init__(self, message: str, round: Optional[int] = None):
        super().__init__(message)
        self.round = round


@dataclass(frozen=True)
class SolverConfig:
    """Everything that shapes one run besides the problem and the network."""
    alpha_init: float | tuple[float, ...] = 10.0
    delta: float = 0.9
    eta: float = 0.5
    max_trials: int = 60
    slack: float = 1e-12
    c: float = 1.0 / 3.0
    budget: BudgetSpec = field(default_factory=BudgetSpec)
    k_max: int = 1000
    stop: float = 0.0
    seed: int = 0
    consensus: ConsensusMode = ConsensusMode.BROADCAST
    init: InitKind = InitKind.NORMAL
    fixed_alpha: Optional[float] = None  # PG-EXTRA stepsize; defaults to 1/max L_i
    workers: int = 1

    def __post_init__(self):
        init = np.atleast_1d(np.asarray(self.alpha_init, dtype=float))
        if np.any(init <= 0.0):
            raise ValueError(f"alpha_init must be positive, got {self.alpha_init}")
        if not 0.0 < self.c < 0.5:
            raise ValueError(f"c must lie in the open interval (0, 1/2), got c={self.c}")
        if self.k_max < 0:
            raise ValueError(f"k_max must be nonnegative, got {self.k_max}")
        if self.stop < 0.0:
            raise ValueError(f"stop must be nonnegative, got {self.stop}")
        if self.fixed_alpha is not None and self.fixed_alpha <= 0.0:
            raise ValueError(f"fixed_alpha must be positive, got {self.fixed_alpha}")
        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")
        self.line_search  # validates delta, eta, max_trials, slack

    @property
    def line_search(self) -> LineSearchParams:
        return LineSearchParams(
            eta=self.eta, delta=self.delta, max_trials=self.max_trials, slack=self.slack
        )

    def alphas_for(self, m: int) -> np.ndarray:
        init = np.atleast_1d(np.asarray(self.alpha_init, dtype=float))
        if init.size not in (1, m):
            raise ValueError(f"alpha_init has {init.size} entries for {m} agents")
        return np.broadcast_to(init, (m,)).astype(float)

    def echo(self) -> dict[str, Any]:
        """Flat, printable view of the configuration."""
        return {
            "alpha_init": self.alpha_init,
            "delta": self.delta,
            "eta": self.eta,
            "max_trials": self.max_trials,
            "slack": self.slack,
            "c": self.c,
            "budget.kind": self.budget.kind.value,
            "budget.beta": self.budget.beta,
            "budget.p": self.budget.p,
            "budget.q": self.budget.q,
            "budget.eta_prime": self.budget.eta_prime,
            "k_max": self.k_max,
            "stop": self.stop,
            "seed": self.seed,
            "consensus": self.consensus.value,
            "init": self.init.value,
            "fixed_alpha": self.fixed_alpha,
            "workers": self.workers,
        }


def initial_rows(prob: ProblemInstance, cfg: SolverConfig) -> tuple[np.ndarray, np.ndarray]:
    """Seeded standard-normal X0 and S0 (X0 optionally made feasible)."""
    rng = np.random.default_rng(cfg.seed)
    X0 = rng.standard_normal((prob.m, prob.d))
    S0 = rng.standard_normal((prob.m, prob.d))
    if cfg.init is InitKind.FEASIBLE:
        X0 = prox_rowwise(X0, 1.0, prob.nonsmooth)
    return X0, S0


@dataclass(frozen=True)
class SolverState:
    """Stacked agent variables of the network algorithms."""
    X: np.ndarray
    S: np.ndarray
    D: np.ndarray
    T: np.ndarray
    A: np.ndarray
    X_prev: np.ndarray
    S0: np.ndarray
    alphas: np.ndarray
    k: int = 0

    @classmethod
    def initial(cls, prob: ProblemInstance, cfg: SolverConfig) -> "SolverState":
        X0, S0 = initial_rows(prob, cfg)
        return cls.from_rows(X0, S0, cfg.alphas_for(prob.m))

    @classmethod
    def from_rows(cls, X0: np.ndarray, S0: np.ndarray, alphas: np.ndarray) -> "SolverState":
        """X^{-1} = A^0 = D^0 = T^0 = 0."""
        zeros = np.zeros_like(X0, dtype=float)
        return cls(
            X=np.array(X0, dtype=float),
            S=np.array(S0, dtype=float),
            D=zeros,
            T=zeros,
            A=zeros,
            X_prev=zeros,
            S0=np.array(S0, dtype=float),
            alphas=np.array(alphas, dtype=float),
        )


class Exchange(NamedTuple):
    """Gradients and the two mixed quantities every round starts with."""
    grad: np.ndarray
    X_half: np.ndarray
    D_half: np.ndarray
    f_x: np.ndarray


@dataclass
class RoundReport:
    """What happened in round k."""
    k: int
    alphas: np.ndarray
    candidates: np.ndarray
    accepted: np.ndarray
    trials: np.ndarray
    budget: float
    drop: bool
    descent_violation: float
    messages: MessageLedger

    @property
    def alpha_min(self) -> float:
        return float(self.alphas.min())

    @property
    def alpha_max(self) -> float:
        return float(self.alphas.max())


AgentMap = Callable[[Callable[[int], Any], range], list]


def sequential_map(fn: Callable[[int], Any], agents: range) -> list:
    return [fn(i) for i in agents]


def exchange(
    state: SolverState,
    prob: ProblemInstance,
    channel: GossipChannel,
    agent_map: AgentMap = sequential_map,
) -> Exchange:
    """Local gradients, then X^{1/2} = W X and D^{1/2} = W (grad F + S + D)."""
    f_x = np.array(agent_map(lambda i: prob.smooth[i].value(state.X[i]), range(prob.m)))
    if not np.all(np.isfinite(f_x)):
        bad = int(np.flatnonzero(~np.isfinite(f_x))[0])
        raise EngineError(f"round {state.k}: agent {bad} iterate left the loss domain", round=state.k)
    grad = np.vstack(agent_map(lambda i: prob.smooth[i].grad(state.X[i]), range(prob.m)))
    X_half = channel.mix(state.X)
    D_half = channel.mix(grad + state.S + state.D)
    return Exchange(grad=grad, X_half=X_half, D_half=D_half, f_x=f_x)


def _local_searches(
    state: SolverState,
    prob: ProblemInstance,
    ex: Exchange,
    candidates: np.ndarray,
    params: LineSearchParams,
    agent_map: AgentMap,
) -> tuple[np.ndarray, np.ndarray]:
    def search(i: int):
        try:
            return linesearch(
                candidates[i],
                state.X[i],
                ex.X_half[i],
                -ex.D_half[i],
                prob.smooth[i],
                params,
                f_x1=ex.f_x[i],
                grad_x1=ex.grad[i],
            )
        except LineSearchError as e:
            raise e.located(i, state.k) from None

    results = agent_map(search, range(prob.m))
    return (
        np.array([r.alpha for r in results]),
        np.array([r.trials for r in results], dtype=int),
    )


def descent_violation(
    prob: ProblemInstance, state: SolverState, ex: Exchange, A_new: np.ndarray, alphas: np.ndarray, delta: float
) -> float:
    """Largest row-wise excess of the backtracking test at the agreed stepsizes."""
    worst = -np.inf
    for i, f in enumerate(prob.smooth):
        gap = descent_gap(f.value(A_new[i]), ex.f_x[i], ex.grad[i], A_new[i], state.X[i], alphas[i], delta)
        worst = max(worst, gap)
    return float(worst)


# DATOS with global min-consensus

def datos_stepsizes(
    state: SolverState,
    prob: ProblemInstance,
    ex: Exchange,
    cfg: SolverConfig,
    allowance: float,
    agent_map: AgentMap = sequential_map,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-agent candidates and backtracked stepsizes, before consensus."""
    candidates = np.array([
        candidate_alpha_global(
            state.alphas[i],
            state.A[i],
            state.X_prev[i],
            state.S[i],
            state.S0[i],
            state.T[i],
            cfg.c,
            allowance,
            cfg.delta,
        )
        for i in range(prob.m)
    ])
    accepted, trials = _local_searches(state, prob, ex, candidates, cfg.line_search, agent_map)
    return candidates, accepted, trials


def datos_update(state: SolverState, prob: ProblemInstance, alpha: float, ex: Exchange) -> SolverState:
    """Primal, dual and tracking updates at the agreed stepsize."""
    X, S, D, T = state.X, state.S, state.D, state.T
    A_new = ex.X_half - alpha * ex.D_half
    X_new = prox_rowwise(A_new + alpha * S, alpha, prob.nonsmooth)
    S_new = S + (A_new - X_new) / alpha
    D_new = ex.D_half - ex.grad - S + (X - ex.X_half) / alpha
    T_new = T - S - D - ex.grad + X / alpha
    return replace(
        state,
        X=X_new,
        S=S_new,
        D=D_new,
        T=T_new,
        A=A_new,
        X_prev=X,
        alphas=np.full(prob.m, alpha),
        k=state.k + 1,
    )


def datos_round(
    state: SolverState,
    prob: ProblemInstance,
    channel: GossipChannel,
    cfg: SolverConfig,
    budget: BudgetState,
    agent_map: AgentMap = sequential_map,
) -> tuple[SolverState, BudgetState, RoundReport]:
    before = channel.ledger.snapshot()
    ex = exchange(state, prob, channel, agent_map)
    candidates, accepted, trials = datos_stepsizes(state, prob, ex, cfg, budget.peek(), agent_map)
    alpha = channel.global_min(accepted, cfg.consensus)
    n_k, advanced = budget_next(budget, alpha)

    new = datos_update(state, prob, alpha, ex)
    report = RoundReport(
        k=state.k,
        alphas=new.alphas,
        candidates=candidates,
        accepted=accepted,
        trials=trials,
        budget=n_k,
        drop=advanced.drops > budget.drops,
        descent_violation=descent_violation(prob, state, ex, new.A, new.alphas, cfg.delta),
        messages=channel.ledger.since(before),
    )
    return new, advanced, report


# DATOS with neighbor min-consensus

def local_datos_update(
    state: SolverState,
    prob: ProblemInstance,
    channel: GossipChannel,
    alphas: np.ndarray,
    ex: Exchange,
) -> SolverState:
    """Updates with per-agent stepsizes Lambda = diag(alphas); no tracking variable."""
    alphas = np.asarray(alphas, dtype=float)
    lam = alphas[:, None]
    S = state.S
    D_lam = channel.laplacian_scaled(state.X, alphas)
    A_new = ex.X_half - lam * ex.D_half
    X_new = prox_rowwise(A_new + lam * S, alphas, prob.nonsmooth)
    S_new = S + (A_new - X_new) / lam
    D_new = ex.D_half + D_lam - ex.grad - S
    return replace(
        state,
        X=X_new,
        S=S_new,
        D=D_new,
        A=A_new,
        X_prev=state.X,
        alphas=alphas.copy(),
        k=state.k + 1,
    )


def local_datos_round(
    state: SolverState,
    prob: ProblemInstance,
    channel: GossipChannel,
    cfg: SolverConfig,
    budget: BudgetState,
    agent_map: AgentMap = sequential_map,
) -> tuple[SolverState, BudgetState, RoundReport]:
    before = channel.ledger.snapshot()
    ex = exchange(state, prob, channel, agent_map)
    allowance = budget.peek()
    candidates = np.array([candidate_alpha_local(a, allowance) for a in state.alphas])
    accepted, trials = _local_searches(state, prob, ex, candidates, cfg.line_search, agent_map)
    alphas = channel.neighborhood_min(accepted)
    n_k, advanced = budget_next(budget, alphas)

    new = local_datos_update(state, prob, channel, alphas, ex)
    report = RoundReport(
        k=state.k,
        alphas=new.alphas,
        candidates=candidates,
        accepted=accepted,
        trials=trials,
        budget=n_k,
        drop=advanced.drops > budget.drops,
        descent_violation=descent_violation(prob, state, ex, new.A, new.alphas, cfg.delta),
        messages=channel.ledger.since(before),
    )
    return new, advanced, report


# PG-EXTRA baseline

@dataclass(frozen=True)
class ExtraState:
    X: np.ndarray
    Z: np.ndarray
    X_prev: Optional[np.ndarray] = None
    WX_prev: Optional[np.ndarray] = None
    grad_prev: Optional[np.ndarray] = None
    k: int = 0


def pg_extra_round(
    state: ExtraState,
    prob: ProblemInstance,
    channel: GossipChannel,
    alpha: float,
) -> tuple[ExtraState, RoundReport]:
    """One fixed-stepsize round with W_bar = (I + W)/2; one vector exchange."""
    before = channel.ledger.snapshot()
    grad = prob.grad_F(state.X)
    WX = channel.mix(state.X)
    if state.k == 0:
        Z = WX - alpha * grad
    else:
        wbar_prev = 0.5 * (state.X_prev + state.WX_prev)
        Z = state.Z + WX - wbar_prev - alpha * (grad - state.grad_prev)
    X_new = prox_rowwise(Z, alpha, prob.nonsmooth)

    new = ExtraState(X=X_new, Z=Z, X_prev=state.X, WX_prev=WX, grad_prev=grad, k=state.k + 1)
    alphas = np.full(prob.m, alpha)
    report = RoundReport(
        k=state.k,
        alphas=alphas,
        candidates=alphas,
        accepted=alphas,
        trials=np.zeros(prob.m, dtype=int),
        budget=0.0,
        drop=False,
        descent_violation=0.0,
        messages=channel.ledger.since(before),
    )
    return new, report


# Run loop

@dataclass
class RoundResult:
    """Results of a single round, as handed to narrators."""
    algorithm: Algorithm
    report: RoundReport
    row: TraceRow


class Runner:
    """Drives one algorithm on one problem over one network and records the trace."""

    def __init__(
        self,
        prob: ProblemInstance,
        graph: NetworkGraph,
        gossip: GossipMatrix,
        algorithm: Algorithm,
        cfg: SolverConfig,
        reference: Optional[ReferencePoint] = None,
        narrator: Optional[Callable[[RoundResult], None]] = None,
    ):
        if graph.m != prob.m:
            raise ValueError(f"graph has {graph.m} agents, problem has {prob.m}")
        self.prob = prob
        self.graph = graph
        self.gossip = gossip
        self.algorithm = algorithm
        self.cfg = cfg
        self.reference = reference
        self.narrator = narrator

        self.channel: Optional[GossipChannel] = None
        self.state: Any = None
        self.budget: Optional[BudgetState] = None
        self.trace: Optional[RunTrace] = None
        self.current_round = 0

        self._ergodic = ErgodicAverage()
        self._tracker: Optional[SupportTracker] = None
        self._support_tol = DEFAULT_SUPPORT_TOL
        self._pool: Optional[ThreadPoolExecutor] = None
        self._dys: Optional[Iterator[DysIterate]] = None
        self._fixed_alpha: Optional[float] = None
        self._dys_drops = 0

    # Setup

    def initialize(self) -> None:
        """Draw the initial point and write the k = 0 row."""
        prob, cfg = self.prob, self.cfg
        self.channel = GossipChannel(self.graph, self.gossip)
        self.current_round = 0
        self._ergodic = ErgodicAverage()

        if cfg.workers > 1:
            self._pool = ThreadPoolExecutor(max_workers=cfg.workers)

        if self.reference is not None and is_l1(prob):
            self._tracker = SupportTracker(self.reference)
            self._support_tol = self._tracker.tol

        X0, S0 = initial_rows(prob, cfg)
        alphas = cfg.alphas_for(prob.m)

        if self.algorithm is Algorithm.LOCAL_DATOS:
            self.state = SolverState.from_rows(X0, S0, alphas)
            self.budget = BudgetState.start(cfg.budget, alphas)
        elif self.algorithm is Algorithm.DATOS:
            alpha = float(alphas.min())
            self.state = SolverState.from_rows(X0, S0, np.full(prob.m, alpha))
            self.budget = BudgetState.start(cfg.budget, alpha)
        elif self.algorithm is Algorithm.PG_EXTRA:
            self._fixed_alpha = self._pg_extra_alpha()
            self.state = ExtraState(X=X0, Z=np.zeros_like(X0))
            alphas = np.full(prob.m, self._fixed_alpha)
        else:
            alpha = float(alphas.min())
            r1 = aggregate_nonsmooth(prob)
            self._dys = adaptive_dys(
                X0[0],
                S0[0],
                AggregateLoss(prob),
                r1,
                ProxSpec.zero(),
                cfg.line_search,
                alpha,
                BudgetState.start(cfg.budget, alpha),
            )
            self.state = np.tile(X0[0], (prob.m, 1))
            alphas = np.full(prob.m, alpha)

        self.trace = RunTrace(algorithm=self.algorithm.value, config=cfg.echo())
        first = self._row(0, self._iterate(), alphas, trials=0, messages=MessageLedger(), drops=0)
        self.trace.rows.append(first)
        self.trace.alpha_history.append(np.array(alphas, dtype=float))

    def _pg_extra_alpha(self) -> float:
        if self.cfg.fixed_alpha is not None:
            return self.cfg.fixed_alpha
        lip = self.prob.metadata.lipschitz_max
        if not lip:
            raise EngineError("pg_extra needs solver.fixed_alpha when no smoothness constant is known", round=0)
        return 1.0 / lip

    def _agent_map(self) -> AgentMap:
        if self._pool is None:
            return sequential_map
        pool = self._pool
        return lambda fn, agents: list(pool.map(fn, agents))

    def _iterate(self) -> np.ndarray:
        if self.algorithm in (Algorithm.DATOS, Algorithm.LOCAL_DATOS, Algorithm.PG_EXTRA):
            return self.state.X
        return self.state

    # Rounds

    def step(self) -> RoundResult:
        """Execute one round."""
        k = self.current_round
        try:
            report, weight_iter = self._advance()
        except EngineError:
            raise
        except (LineSearchError, ValueError, FloatingPointError, np.linalg.LinAlgError) as e:
            raise EngineError(f"round {k}: {e}", round=k) from e

        self.current_round += 1
        A_like, S_like = weight_iter
        self._ergodic.update(A_like, S_like, report.alpha_min)

        drops = self.budget.drops if self.budget is not None else self._dys_drops
        row = self._row(
            self.current_round,
            self._iterate(),
            report.alphas,
            trials=int(report.trials.sum()),
            messages=report.messages,
            drops=drops,
        )
        self.trace.rows.append(row)
        self.trace.alpha_history.append(np.array(report.alphas, dtype=float))

        result = RoundResult(algorithm=self.algorithm, report=report, row=row)
        if self.narrator:
            self.narrator(result)
        return result

    def _advance(self) -> tuple[RoundReport, tuple[np.ndarray, np.ndarray]]:
        prob, cfg = self.prob, self.cfg
        if self.algorithm is Algorithm.DATOS:
            self.state, self.budget, report = datos_round(
                self.state, prob, self.channel, cfg, self.budget, self._agent_map()
            )
            return report, (self.state.A, self.state.S)
        if self.algorithm is Algorithm.LOCAL_DATOS:
            self.state, self.budget, report = local_datos_round(
                self.state, prob, self.channel, cfg, self.budget, self._agent_map()
            )
            return report, (self.state.A, self.state.S)
        if self.algorithm is Algorithm.PG_EXTRA:
            self.state, report = pg_extra_round(self.state, prob, self.channel, self._fixed_alpha)
            return report, (self.state.X, np.zeros_like(self.state.X))

        it = next(self._dys)
        self._dys_drops = it.drops
        self.state = np.tile(it.x, (prob.m, 1))
        alphas = np.full(prob.m, it.alpha)
        report = RoundReport(
            k=it.k,
            alphas=alphas,
            candidates=alphas,
            accepted=alphas,
            trials=np.array([it.trials]),
            budget=it.budget,
            drop=False,
            descent_violation=0.0,
            messages=MessageLedger(),
        )
        return report, (np.tile(it.a, (prob.m, 1)), np.tile(it.s, (prob.m, 1)))

    def _row(
        self,
        k: int,
        X: np.ndarray,
        alphas: np.ndarray,
        trials: int,
        messages: MessageLedger,
        drops: int,
    ) -> TraceRow:
        prob, ref = self.prob, self.reference
        gap = optimality_gap(X, prob, ref) if ref is not None else None
        dist = distance_sq(X, ref) if ref is not None else None
        ergodic_gap = None
        if ref is not None and self._ergodic.has_rounds:
            A_bar, _ = self._ergodic.value()
            ergodic_gap = optimality_gap(A_bar, prob, ref)

        support_size = None
        identified = None
        if is_l1(prob):
            support_size = len(support_sets(X.mean(axis=0), self._support_tol)[0])
            if self._tracker is not None:
                identified = self._tracker.observe(k, X)

        merit = None
        if ref is not None and ref.s_star_rows is not None and self.algorithm in (Algorithm.DATOS, Algorithm.LOCAL_DATOS):
            merit = lyapunov_value(X, self.state.S, float(np.min(alphas)), ref)

        return TraceRow(
            k=k,
            alpha_min=float(np.min(alphas)),
            alpha_max=float(np.max(alphas)),
            ls_trials_total=trials,
            gap_surrogate=gap,
            consensus_err=consensus_error(X),
            support_size=support_size,
            vec_msgs=messages.vector_msgs,
            scalar_msgs=messages.scalar_msgs,
            broadcast_msgs=messages.broadcast_msgs,
            dist_sq=dist,
            ergodic_gap=ergodic_gap,
            drops=drops,
            identified=identified,
            merit=merit,
        )

    def should_stop(self) -> bool:
        if self.cfg.stop <= 0.0:
            return False
        row = self.trace.last
        measure = row.consensus_err + (abs(row.gap_surrogate) if row.gap_surrogate is not None else 0.0)
        return measure <= self.cfg.stop

    def run(self, rounds: Optional[int] = None) -> RunTrace:
        """Run up to `rounds` (default k_max) rounds or until the stop rule fires."""
        if self.trace is None:
            self.initialize()
        rounds = self.cfg.k_max if rounds is None else rounds
        try:
            for _ in range(rounds):
                if self.should_stop():
                    logger.info("%s: stop rule met at round %d", self.algorithm.value, self.current_round)
                    break
                self.step()
        finally:
            self.shutdown()
        self.trace.final_state = self.final_state()
        return self.trace

    def final_state(self) -> dict[str, np.ndarray]:
        out = {"X": np.array(self._iterate())}
        if isinstance(self.state, SolverState):
            out.update(S=self.state.S, D=self.state.D, T=self.state.T, alphas=self.state.alphas)
        return out

    @property
    def tracker(self) -> Optional[SupportTracker]:
        return self._tracker

    def shutdown(self) -> None:
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None


def run(
    prob: ProblemInstance,
    graph: NetworkGraph,
    gossip: GossipMatrix,
    algorithm: Algorithm,
    cfg: SolverConfig,
    reference: Optional[ReferencePoint] = None,
    narrator: Optional[Callable[[RoundResult], None]] = None,
) -> RunTrace:
    """One complete run; deterministic for a fixed configuration and seed."""
    runner = Runner(prob, graph, gossip, algorithm, cfg, reference=reference, narrator=narrator)
    runner.initialize()
    return runner.run()
