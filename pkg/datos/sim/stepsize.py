"""Backtracking line-search, candidate stepsizes and summable budget sequences."""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional, Sequence
import logging
import math

import numpy as np
from scipy.special import zeta

from .problems import SmoothOracle

logger = logging.getLogger(__name__)


class LineSearchError(RuntimeError):
    """Backtracking ran out of trials."""

    def __init__(
        self,
        message: str,
        alpha: float,
        trials: int,
        agent: Optional[int] = None,
        round: Optional[int] = None,
    ):
        super().__init__(message)
        self.alpha = alpha
        self.trials = trials
        self.agent = agent
        self.round = round

    def located(self, agent: int, round: int) -> "LineSearchError":
        """Same failure tagged with the agent and round it happened in."""
        return LineSearchError(
            f"agent {agent}, round {round}: {self}",
            alpha=self.alpha,
            trials=self.trials,
            agent=agent,
            round=round,
        )


@dataclass(frozen=True)
class LineSearchParams:
    """Shrink factor, curvature margin, trial cap and descent-test slack."""
    eta: float = 0.5
    delta: float = 0.9
    max_trials: int = 60
    slack: float = 1e-12

    def __post_init__(self):
        if not 0.0 < self.eta < 1.0:
            raise ValueError(f"eta must lie in (0, 1), got {self.eta}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.max_trials < 1:
            raise ValueError(f"max_trials must be at least 1, got {self.max_trials}")
        if self.slack < 0.0:
            raise ValueError(f"slack must be nonnegative, got {self.slack}")


@dataclass(frozen=True)
class LineSearchResult:
    alpha: float
    trials: int
    point: np.ndarray = field(repr=False)
    value: float


def descent_gap(
    f_plus: float,
    f_x1: float,
    grad_x1: np.ndarray,
    x_plus: np.ndarray,
    x1: np.ndarray,
    alpha: float,
    delta: float,
) -> float:
    """LHS minus RHS of the local backtracking test (<= 0 means it holds)."""
    if not np.isfinite(f_plus):
        return np.inf
    step = x_plus - x1
    rhs = f_x1 + float(grad_x1 @ step) + delta / (2.0 * alpha) * float(step @ step)
    return f_plus - rhs


def backtrack(
    alpha0: float,
    x1: np.ndarray,
    trial_point: Callable[[float], np.ndarray],
    oracle: SmoothOracle,
    params: LineSearchParams,
    f_x1: Optional[float] = None,
    grad_x1: Optional[np.ndarray] = None,
) -> LineSearchResult:
    """
    Shrink alpha geometrically from alpha0 until the point trial_point(alpha)
    passes the descent test anchored at x1. One f-evaluation per trial.
    """
    if alpha0 <= 0.0:
        raise ValueError(f"initial stepsize must be positive, got {alpha0}")
    if f_x1 is None:
        f_x1 = oracle.value(x1)
    if not np.isfinite(f_x1):
        raise ValueError("line-search anchor lies outside the loss domain")
    if grad_x1 is None:
        grad_x1 = oracle.grad(x1)

    tolerance = params.slack * (1.0 + abs(f_x1))
    alpha = alpha0
    for trial in range(1, params.max_trials + 1):
        point = trial_point(alpha)
        value = oracle.value(point)
        if descent_gap(value, f_x1, grad_x1, point, x1, alpha, params.delta) <= tolerance:
            return LineSearchResult(alpha=alpha, trials=trial, point=point, value=value)
        if trial < params.max_trials:
            alpha *= params.eta

    raise LineSearchError(
        f"no acceptable stepsize after {params.max_trials} trials (last alpha={alpha:.3e})",
        alpha=alpha,
        trials=params.max_trials,
    )


def linesearch(
    alpha0: float,
    x1: np.ndarray,
    x2: np.ndarray,
    direction: np.ndarray,
    oracle: SmoothOracle,
    params: LineSearchParams,
    f_x1: Optional[float] = None,
    grad_x1: Optional[np.ndarray] = None,
) -> LineSearchResult:
    """Backtracking along the ray x2 + alpha*direction."""
    return backtrack(
        alpha0, x1, lambda a: x2 + a * direction, oracle, params, f_x1=f_x1, grad_x1=grad_x1
    )


# Candidate stepsizes

def candidate_alpha_global(
    alpha_prev: float,
    a_i: np.ndarray,
    x_prev_i: np.ndarray,
    s_i: np.ndarray,
    s0_i: np.ndarray,
    t_i: np.ndarray,
    c: float,
    n_k: float,
    delta: float,
) -> float:
    """Largest stepsize the merit-function analysis allows before backtracking; 0/0 counts as +inf."""
    num = 0.25 * (1.0 - delta) * float(np.sum((a_i - x_prev_i) ** 2))
    den = float(np.sum((s_i - s0_i) ** 2)) + 2.0 * c * float(np.sum(t_i ** 2))
    ratio = num / den if den > 0.0 else np.inf
    return math.sqrt(alpha_prev ** 2 + min(ratio, n_k))


def candidate_alpha_local(alpha_prev: float, m_k: float) -> float:
    """Budget-only growth used by the neighbor-consensus variant."""
    if m_k < 0.0:
        raise ValueError(f"budget must be nonnegative, got {m_k}")
    return math.sqrt(alpha_prev ** 2 + m_k)


# Budget sequences

class BudgetKind(Enum):
    FIXED = "fixed"
    DROP_RESET = "drop_reset"


@dataclass(frozen=True)
class BudgetSpec:
    """Parameters of a summable growth allowance."""
    kind: BudgetKind = BudgetKind.DROP_RESET
    beta: float = 1.0
    p: float = 2.0
    q: float = 2.0
    eta_prime: float = 0.7

    def __post_init__(self):
        if self.beta <= 0.0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.p <= 1.0:
            raise ValueError(f"p must exceed 1, got {self.p}")
        if self.q <= 1.0:
            raise ValueError(f"q must exceed 1, got {self.q}")
        if not 0.0 < self.eta_prime < 1.0:
            raise ValueError(f"eta_prime must lie in (0, 1), got {self.eta_prime}")


@dataclass(frozen=True)
class BudgetState:
    """
    Position in the budget sequence.

    `running_min` holds one entry per tracked stepsize: a single entry for the
    global variant, one per agent for the neighbor variant (which still shares
    the drop counter). `last_drop` is -1 before the first drop.
    """
    spec: BudgetSpec
    k: int = 0
    running_min: tuple[float, ...] = (np.inf,)
    drops: int = 0
    last_drop: int = -1

    @classmethod
    def start(cls, spec: BudgetSpec, alpha_init: float | Sequence[float]) -> "BudgetState":
        init = np.atleast_1d(np.asarray(alpha_init, dtype=float))
        if np.any(init <= 0.0):
            raise ValueError("initial stepsizes must be positive")
        return cls(spec=spec, running_min=tuple(float(a) for a in init))

    @property
    def since_last_drop(self) -> int:
        """Rounds elapsed since the last drop, counted at the upcoming round."""
        return self.k - self.last_drop

    def _allowance(self, drops: int, since: int) -> float:
        spec = self.spec
        if spec.kind is BudgetKind.FIXED:
            return spec.beta / (self.k + 1) ** spec.p
        return spec.beta / ((drops + 1) ** spec.q * (since + 1) ** spec.p)

    def peek(self) -> float:
        """Allowance for the upcoming round assuming no drop occurs in it."""
        return self._allowance(self.drops, self.since_last_drop)


def budget_next(state: BudgetState, alpha_k: float | Sequence[float]) -> tuple[float, BudgetState]:
    """
    Consume one round: detect a drop from the observed stepsize(s), return the
    round's allowance and the advanced state.
    """
    alphas = np.atleast_1d(np.asarray(alpha_k, dtype=float))
    if np.any(alphas <= 0.0):
        raise ValueError("observed stepsizes must be positive")
    mins = np.broadcast_to(np.asarray(state.running_min), alphas.shape)
    spec = state.spec

    drops, last_drop = state.drops, state.last_drop
    if spec.kind is BudgetKind.DROP_RESET and np.any(alphas <= spec.eta_prime * mins):
        drops += 1
        last_drop = state.k
        logger.debug("budget reset at round %d (drop #%d)", state.k, drops)

    n = state._allowance(drops, state.k - last_drop)
    advanced = replace(
        state,
        k=state.k + 1,
        running_min=tuple(float(v) for v in np.minimum(mins, alphas)),
        drops=drops,
        last_drop=last_drop,
    )
    return n, advanced


def summability_bound(spec: BudgetSpec) -> float:
    """beta * zeta(p) * zeta(q), an upper bound on the total allowance."""
    if spec.kind is BudgetKind.FIXED:
        return float(spec.beta * zeta(spec.p))
    return float(spec.beta * zeta(spec.p) * zeta(spec.q))
