"""Convergence diagnostics for decentralized runs."""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..data.models import RunTrace
from .problems import ProblemInstance

# Rounds a support must hold before it counts as identified for good
IDENTIFICATION_STREAK = 50


@dataclass(frozen=True)
class ReferencePoint:
    """Consensual optimum x*, optimal value u*, optional dual rows S*."""
    x_star: np.ndarray
    u_star: float
    s_star_rows: Optional[np.ndarray] = None
    residual: float = 0.0

    def stacked(self, m: int) -> np.ndarray:
        """1 (x*)^T."""
        return np.tile(self.x_star, (m, 1))

    def default_support_tol(self) -> float:
        return 1e-9 * (1.0 + float(np.max(np.abs(self.x_star), initial=0.0)))


def optimality_gap(X: np.ndarray, prob: ProblemInstance, ref: ReferencePoint) -> float:
    """(1/m) sum_i u(x_i) - u*."""
    values = [prob.objective(X[i]) for i in range(X.shape[0])]
    return float(np.mean(values)) - ref.u_star


def consensus_error(X: np.ndarray) -> float:
    """Frobenius distance of X to its row-average consensual projection."""
    return float(np.linalg.norm(X - X.mean(axis=0, keepdims=True)))


def distance_sq(X: np.ndarray, ref: ReferencePoint) -> float:
    """||X - 1 (x*)^T||^2."""
    return float(np.sum((X - ref.x_star[None, :]) ** 2))


def lyapunov_value(X: np.ndarray, S: np.ndarray, alpha_prev: float, ref: ReferencePoint) -> float:
    """Primal and dual network blocks of the merit function."""
    if ref.s_star_rows is None:
        raise ValueError("the merit function needs dual rows S* in the reference point")
    return distance_sq(X, ref) + alpha_prev ** 2 * float(np.sum((S - ref.s_star_rows) ** 2))


class ErgodicAverage:
    """Stepsize-weighted running means of A and S (weight alpha^{t-1} for round t)."""

    def __init__(self):
        self.theta = 0.0
        self._a_sum: Optional[np.ndarray] = None
        self._s_sum: Optional[np.ndarray] = None

    def update(self, A: np.ndarray, S: np.ndarray, alpha: float) -> None:
        if alpha <= 0.0:
            raise ValueError(f"weights must be positive, got {alpha}")
        if self._a_sum is None:
            self._a_sum = np.zeros_like(A, dtype=float)
            self._s_sum = np.zeros_like(S, dtype=float)
        self._a_sum += alpha * A
        self._s_sum += alpha * S
        self.theta += alpha

    @property
    def has_rounds(self) -> bool:
        return self.theta > 0.0

    def value(self) -> tuple[np.ndarray, np.ndarray]:
        if self._a_sum is None:
            raise ValueError("no rounds averaged yet")
        return self._a_sum / self.theta, self._s_sum / self.theta


def ergodic_average(
    iterates: Sequence[tuple[np.ndarray, np.ndarray, float]],
) -> tuple[np.ndarray, np.ndarray]:
    """Batch form: iterates are (A^t, S^t, alpha^{t-1}) triples."""
    if not iterates:
        raise ValueError("need at least one round")
    avg = ErgodicAverage()
    for A, S, alpha in iterates:
        avg.update(A, S, alpha)
    return avg.value()


def support_sets(X: np.ndarray, tol: float) -> list[frozenset[int]]:
    return [frozenset(np.flatnonzero(np.abs(row) > tol).tolist()) for row in np.atleast_2d(X)]


def support_tracker(
    X: np.ndarray, ref: ReferencePoint, tol: Optional[float] = None
) -> tuple[list[frozenset[int]], bool]:
    """Per-agent supports and whether all of them equal the support of x*."""
    tol = ref.default_support_tol() if tol is None else tol
    target = support_sets(ref.x_star, tol)[0]
    sets = support_sets(X, tol)
    return sets, all(s == target for s in sets)


@dataclass
class SupportTracker:
    """
    Follows support identification round by round.

    `identified_at` is the first round of the current unbroken identified streak;
    `reverted` flips once a streak of IDENTIFICATION_STREAK rounds is broken.
    """
    ref: ReferencePoint
    tol: Optional[float] = None
    streak: int = 0
    identified_at: Optional[int] = None
    reverted: bool = False

    def __post_init__(self):
        if self.tol is None:
            self.tol = self.ref.default_support_tol()

    def observe(self, k: int, X: np.ndarray) -> bool:
        _, identified = support_tracker(X, self.ref, self.tol)
        if identified:
            if self.streak == 0:
                self.identified_at = k
            self.streak += 1
        else:
            if self.streak >= IDENTIFICATION_STREAK:
                self.reverted = True
            self.streak = 0
            self.identified_at = None
        return identified

    @property
    def settled(self) -> bool:
        return self.streak >= IDENTIFICATION_STREAK


def linear_rate_fit(series: Sequence[float], window: int) -> tuple[float, float]:
    """Least-squares fit of log e_k over the trailing window: (exp(slope), r^2)."""
    if window < 10:
        raise ValueError(f"window must be at least 10, got {window}")
    tail = np.asarray(series, dtype=float)[-window:]
    if tail.size < 2:
        raise ValueError("series shorter than two points")
    if np.any(tail <= 0.0):
        raise ValueError("linear_rate_fit needs positive entries")
    ks = np.arange(tail.size, dtype=float)
    logs = np.log(tail)
    slope, intercept = np.polyfit(ks, logs, 1)
    fitted = slope * ks + intercept
    ss_res = float(np.sum((logs - fitted) ** 2))
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(np.exp(slope)), r2


def sublinear_bound_check(
    gaps: Sequence[float],
    ks: Optional[Sequence[int]] = None,
    head: float = 0.2,
    rtol: float = 1e-2,
) -> tuple[float, bool]:
    """
    Empirical O(1/k) certificate on an ergodic gap series.

    C_hat is the largest k*gap. The series passes when that maximum sits in the
    leading `head` fraction of rounds and the window maxima of the product over
    the remaining rounds never increase by more than rtol * C_hat.

    ks defaults to 1..len(gaps); pass it when rows were skipped.
    sublinear_trace_check does so for a RunTrace.
    """
    gaps = np.asarray(gaps, dtype=float)
    ks = np.arange(1, gaps.size + 1, dtype=float) if ks is None else np.asarray(ks, dtype=float)
    if gaps.size == 0:
        return 0.0, True
    prod = ks * np.maximum(gaps, 0.0)
    c_hat = float(prod.max())
    cut = max(1, int(np.ceil(head * prod.size)))
    head_max = float(prod[:cut].max())
    tail = prod[cut:]
    if tail.size == 0:
        return c_hat, True
    slack = rtol * c_hat
    bounded = float(tail.max()) <= head_max + slack
    maxima = np.array([w.max() for w in np.array_split(tail, min(10, tail.size))])
    nonincreasing = bool(np.all(np.diff(maxima) <= slack))
    return c_hat, bounded and nonincreasing


def sublinear_trace_check(trace: RunTrace, **kwargs) -> tuple[float, bool]:
    """sublinear_bound_check on the ergodic gap column of a run (rows without one are skipped)."""
    rows = [r for r in trace.rows if r.ergodic_gap is not None]
    if not rows:
        raise ValueError(f"{trace.algorithm} trace has no ergodic gap; run it with a reference point")
    return sublinear_bound_check([r.ergodic_gap for r in rows], ks=[r.k for r in rows], **kwargs)
