"""
Lifted-form splitting recursion and the centralized adaptive Davis-Yin solver.

The lifted recursion keeps the explicit slack blocks (Xt, St, At) and the dual
variable Y that the network algorithm eliminates. Driven with the same stepsizes,
it reproduces the network iterates, with D = L Y and L T = Y - Y0.
"""

from dataclasses import dataclass, replace
from typing import Iterator, Optional, Sequence

import numpy as np
from scipy import linalg

from .metrics import ReferencePoint
from .netgraph import GossipMatrix
from .problems import ProblemInstance, SmoothOracle
from .proxops import ProxSpec, prox_rowwise
from .stepsize import (
    BudgetState,
    LineSearchParams,
    backtrack,
    budget_next,
    candidate_alpha_global,
)


# Spectral slack below which an eigenvalue of I - W counts as the consensus direction
ROOT_TOL = 1e-12


def matrix_roots(w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(L, M) with L = (I - W)^{1/2} and M = W^{1/2}; eigenvalues within ROOT_TOL of 0 are snapped to 0."""
    eigs, vecs = linalg.eigh(np.asarray(w, dtype=float))
    lap = 1.0 - eigs
    lap[np.abs(lap) < ROOT_TOL] = 0.0
    root_w = np.sqrt(np.clip(eigs, 0.0, None))
    root_lap = np.sqrt(np.clip(lap, 0.0, None))
    M = (vecs * root_w) @ vecs.T
    L = (vecs * root_lap) @ vecs.T
    return 0.5 * (L + L.T), 0.5 * (M + M.T)


@dataclass(frozen=True)
class LiftedState:
    X: np.ndarray
    S: np.ndarray
    A: np.ndarray
    Xt: np.ndarray
    St: np.ndarray
    At: np.ndarray
    Y: np.ndarray
    L_mat: np.ndarray
    M_mat: np.ndarray
    k: int = 0

    @classmethod
    def initial(cls, X0: np.ndarray, S0: np.ndarray, gossip: GossipMatrix) -> "LiftedState":
        """Y0 = 0 so that D0 = L Y0 = 0; slack blocks start at zero."""
        L, M = matrix_roots(gossip.w)
        zeros = np.zeros_like(X0, dtype=float)
        return cls(
            X=np.array(X0, dtype=float),
            S=np.array(S0, dtype=float),
            A=zeros,
            Xt=zeros,
            St=zeros,
            At=zeros,
            Y=zeros,
            L_mat=L,
            M_mat=M,
        )

    @property
    def D(self) -> np.ndarray:
        """Network-form dual variable L Y."""
        return self.L_mat @ self.Y


def lifted_round(state: LiftedState, prob: ProblemInstance, alpha: float) -> LiftedState:
    """One step of the lifted primal-dual recursion at stepsize alpha."""
    if alpha <= 0.0:
        raise ValueError(f"stepsize must be positive, got {alpha}")
    L, M = state.L_mat, state.M_mat
    X, S = state.X, state.S
    grad = prob.grad_F(X)

    Y_new = state.Y + (1.0 / alpha) * (L @ (X - alpha * S - alpha * (L @ state.Y) - alpha * grad))
    A_new = X - alpha * S - alpha * grad - alpha * (L @ Y_new)
    At_new = state.Xt - alpha * state.St - alpha * (M @ Y_new)

    X_new = prox_rowwise(A_new + alpha * S, alpha, prob.nonsmooth)
    Xt_new = np.zeros_like(state.Xt)
    S_new = S + (A_new - X_new) / alpha
    St_new = state.St + (At_new - Xt_new) / alpha

    return replace(
        state,
        X=X_new,
        S=S_new,
        A=A_new,
        Xt=Xt_new,
        St=St_new,
        At=At_new,
        Y=Y_new,
        k=state.k + 1,
    )


def lifted_trajectory(
    prob: ProblemInstance,
    gossip: GossipMatrix,
    X0: np.ndarray,
    S0: np.ndarray,
    alphas: Sequence[float],
) -> list[LiftedState]:
    """States 0..len(alphas) of the lifted recursion driven by a stepsize sequence."""
    states = [LiftedState.initial(X0, S0, gossip)]
    for alpha in alphas:
        states.append(lifted_round(states[-1], prob, float(alpha)))
    return states


def lifted_lyapunov(
    state: LiftedState,
    alpha_prev: float,
    ref: ReferencePoint,
    st_star: Optional[np.ndarray] = None,
) -> float:
    """Full merit function including the slack blocks (Xt* = 0)."""
    if ref.s_star_rows is None:
        raise ValueError("the merit function needs dual rows S* in the reference point")
    st_star = np.zeros_like(state.St) if st_star is None else st_star
    primal = float(np.sum((state.X - ref.x_star[None, :]) ** 2) + np.sum(state.Xt ** 2))
    dual = float(np.sum((state.S - ref.s_star_rows) ** 2) + np.sum((state.St - st_star) ** 2))
    return primal + alpha_prev ** 2 * dual


def companion_lyapunov(
    merit: float,
    A: np.ndarray,
    X_prev: np.ndarray,
    delta: float,
    dual_spread_sq: float,
    budget_spent: float,
) -> float:
    """
    Merit shifted by the residual ||A^k - X^{k-1}||^2 and discounted by the
    budget consumed so far; nonincreasing along accepted rounds.

    dual_spread_sq is ||S^0 - S*||^2 over all dual blocks.
    """
    shift = 0.5 * (1.0 - delta) * float(np.sum((A - X_prev) ** 2))
    return merit + shift - 2.0 * dual_spread_sq * budget_spent


# Centralized adaptive Davis-Yin splitting

@dataclass(frozen=True)
class DysIterate:
    k: int
    x: np.ndarray
    s: np.ndarray
    a: np.ndarray
    alpha: float
    trials: int
    budget: float
    drops: int = 0


def adaptive_dys(
    x0: np.ndarray,
    s0: np.ndarray,
    oracle: SmoothOracle,
    r1: ProxSpec,
    r2: ProxSpec,
    params: LineSearchParams,
    alpha_init: float,
    budget: BudgetState,
) -> Iterator[DysIterate]:
    """
    Endless stream of iterates of min f + r1 + r2:

        a  = prox_{alpha r2}(x - alpha s - alpha grad f(x))   (alpha by backtracking)
        x+ = prox_{alpha r1}(a + alpha s)
        s+ = s + (a - x+) / alpha
    """
    x = np.array(x0, dtype=float)
    s = np.array(s0, dtype=float)
    s_init = s.copy()
    zeros = np.zeros_like(x)
    a_prev, x_prev = zeros, zeros
    alpha_prev = float(alpha_init)

    k = 0
    while True:
        cand = candidate_alpha_global(
            alpha_prev, a_prev, x_prev, s, s_init, zeros, 0.0, budget.peek(), params.delta
        )
        g = oracle.grad(x)
        fx = oracle.value(x)
        result = backtrack(
            cand,
            x,
            lambda t: r2.prox(x - t * s - t * g, t),
            oracle,
            params,
            f_x1=fx,
            grad_x1=g,
        )
        alpha, a = result.alpha, result.point
        x_new = r1.prox(a + alpha * s, alpha)
        s_new = s + (a - x_new) / alpha
        n_k, budget = budget_next(budget, alpha)

        yield DysIterate(
            k=k, x=x_new, s=s_new, a=a, alpha=alpha, trials=result.trials, budget=n_k, drops=budget.drops
        )

        x_prev, a_prev = x, a
        x, s, alpha_prev = x_new, s_new, alpha
        k += 1
