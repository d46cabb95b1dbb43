"""Proximal operators and projections used by the nonsmooth oracles."""

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from scipy import linalg

from .symflat import sym_flatten, sym_unflatten


class ProxKind(Enum):
    """Families of nonsmooth terms with closed-form proximal maps."""
    ZERO = "zero"
    L1 = "l1"
    BOX = "box"
    SPECTRAL_BOX = "spectral_box"


@dataclass(frozen=True)
class ProxSpec:
    """A nonsmooth term r together with its parameters."""
    kind: ProxKind
    lam: float = 0.0
    lo: float = -np.inf
    hi: float = np.inf
    a: float = 0.0
    b: float = np.inf
    dim: int = 0  # matrix side for spectral boxes

    def __post_init__(self):
        if self.kind is ProxKind.L1 and self.lam < 0.0:
            raise ValueError(f"l1 weight must be nonnegative, got {self.lam}")
        if self.kind is ProxKind.BOX and self.lo > self.hi:
            raise ValueError(f"box requires lo <= hi, got ({self.lo}, {self.hi})")
        if self.kind is ProxKind.SPECTRAL_BOX:
            if not 0.0 < self.a <= self.b:
                raise ValueError(f"spectral box requires 0 < a <= b, got ({self.a}, {self.b})")
            if self.dim < 1:
                raise ValueError("spectral box needs the matrix side `dim`")

    @classmethod
    def zero(cls) -> "ProxSpec":
        return cls(ProxKind.ZERO)

    @classmethod
    def l1(cls, lam: float) -> "ProxSpec":
        return cls(ProxKind.L1, lam=float(lam))

    @classmethod
    def box(cls, lo: float, hi: float) -> "ProxSpec":
        return cls(ProxKind.BOX, lo=float(lo), hi=float(hi))

    @classmethod
    def spectral_box(cls, a: float, b: float, dim: int) -> "ProxSpec":
        return cls(ProxKind.SPECTRAL_BOX, a=float(a), b=float(b), dim=int(dim))

    def value(self, x: np.ndarray) -> float:
        """r(x); indicators return 0 inside their set and +inf outside."""
        if self.kind is ProxKind.ZERO:
            return 0.0
        if self.kind is ProxKind.L1:
            return self.lam * float(np.abs(x).sum())
        if self.kind is ProxKind.BOX:
            inside = np.all(x >= self.lo) and np.all(x <= self.hi)
            return 0.0 if inside else np.inf
        eigs = linalg.eigh(sym_unflatten(x, self.dim), eigvals_only=True)
        tol = 1e-10 * max(1.0, self.b)
        inside = eigs.min() >= self.a - tol and eigs.max() <= self.b + tol
        return 0.0 if inside else np.inf

    def prox(self, v: np.ndarray, alpha: float) -> np.ndarray:
        """prox_{alpha r}(v)."""
        if alpha <= 0.0:
            raise ValueError(f"prox stepsize must be positive, got {alpha}")
        if self.kind is ProxKind.ZERO:
            return np.array(v, dtype=float)
        if self.kind is ProxKind.L1:
            return soft_threshold(v, alpha * self.lam)
        if self.kind is ProxKind.BOX:
            return np.clip(v, self.lo, self.hi)
        return project_spectral_box(v, self.a, self.b)

    def inclusion_residual(self, x: np.ndarray, s: np.ndarray) -> float:
        """How far s is from the subdifferential of r at x (0 when s is a subgradient)."""
        if self.kind is ProxKind.L1:
            return l1_inclusion_residual(x, s, self.lam)
        x = np.asarray(x, dtype=float)
        return float(np.max(np.abs(x - self.prox(x + np.asarray(s, dtype=float), 1.0)), initial=0.0))

    def scaled(self, count: int) -> "ProxSpec":
        """The term obtained by summing `count` copies of this one."""
        if self.kind is ProxKind.L1:
            return ProxSpec.l1(self.lam * count)
        return self


def soft_threshold(v: np.ndarray, tau: float) -> np.ndarray:
    """Componentwise sign(v) * max(|v| - tau, 0)."""
    if tau < 0.0:
        raise ValueError(f"threshold must be nonnegative, got {tau}")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def project_spectral_box(x: np.ndarray, a: float, b: float) -> np.ndarray:
    """Frobenius projection of a flat symmetric matrix onto {aI ⪯ X ⪯ bI}."""
    if not 0.0 < a <= b:
        raise ValueError(f"spectral box requires 0 < a <= b, got ({a}, {b})")
    mat = sym_unflatten(x)
    eigs, vecs = linalg.eigh(mat)
    clamped = (vecs * np.clip(eigs, a, b)) @ vecs.T
    return sym_flatten(0.5 * (clamped + clamped.T))


def prox_rowwise(X: np.ndarray, alphas: np.ndarray | float, specs: Sequence[ProxSpec]) -> np.ndarray:
    """Row i of the result is prox_{alpha_i r_i}(X[i])."""
    X = np.asarray(X, dtype=float)
    alphas = np.broadcast_to(np.asarray(alphas, dtype=float), (X.shape[0],))
    if np.any(alphas <= 0.0):
        raise ValueError("prox stepsizes must be positive")
    if len(specs) != X.shape[0]:
        raise ValueError(f"expected {X.shape[0]} prox specs, got {len(specs)}")
    return np.vstack([spec.prox(X[i], alphas[i]) for i, spec in enumerate(specs)])


def l1_inclusion_residual(x: np.ndarray, s: np.ndarray, lam: float) -> float:
    """
    Distance of s from the subdifferential of lam*||.||_1 at x.

    On the support the subgradient is lam*sign(x_j); off the support it is the
    interval [-lam, lam].
    """
    x = np.asarray(x, dtype=float)
    s = np.asarray(s, dtype=float)
    on = x != 0.0
    res_on = np.abs(s[on] - lam * np.sign(x[on]))
    res_off = np.maximum(np.abs(s[~on]) - lam, 0.0)
    return float(max(res_on.max(initial=0.0), res_off.max(initial=0.0)))

