"""Problem families: per-agent smooth losses paired with nonsmooth regularizers."""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Optional, Sequence
import logging

import numpy as np
from scipy import linalg
from scipy.special import expit

from ..data.libsvm import Dataset, Shards
from .proxops import ProxKind, ProxSpec
from .symflat import sym_flatten, sym_size, sym_unflatten

logger = logging.getLogger(__name__)


# Default sizes for the three families
DEFAULT_LAMBDA = 1e-5
DEFAULT_SPECTRAL_BOX = (0.1, 10.0)
DEFAULT_COVARIANCE_DECAY = 0.5


def gamma_schedule(m: int) -> np.ndarray:
    """Strong-convexity weights 0.1, 0.2, ..., 0.1*m."""
    return 0.1 + 0.1 * np.arange(m)


# Smooth oracles

class SmoothOracle(ABC):
    """A smooth convex loss with value and gradient."""

    @abstractmethod
    def value(self, x: np.ndarray) -> float:
        """f(x); +inf outside the open domain."""

    @abstractmethod
    def grad(self, x: np.ndarray) -> np.ndarray:
        """Gradient of f at a point of the domain."""

    @property
    def lipschitz(self) -> Optional[float]:
        """Global smoothness constant when one exists."""
        return None

    @property
    def strong_convexity(self) -> float:
        return 0.0


class LogisticLoss(SmoothOracle):
    """f(x) = (1/n) sum_j log(1 + exp(-b_j <x, a_j>))."""

    def __init__(self, features: np.ndarray, labels: np.ndarray):
        self.features = np.asarray(features, dtype=float)
        self.labels = np.asarray(labels, dtype=float)
        self.n = self.features.shape[0]

    def value(self, x: np.ndarray) -> float:
        if self.n == 0:
            return 0.0
        margins = self.labels * (self.features @ x)
        return float(np.logaddexp(0.0, -margins).mean())

    def grad(self, x: np.ndarray) -> np.ndarray:
        if self.n == 0:
            return np.zeros_like(x, dtype=float)
        margins = self.labels * (self.features @ x)
        weights = self.labels * expit(-margins)
        return -(self.features.T @ weights) / self.n

    @property
    def lipschitz(self) -> float:
        if self.n == 0:
            return 0.0
        top = linalg.svdvals(self.features)[0] if self.features.size else 0.0
        return float(top ** 2 / (4.0 * self.n))


class LeastSquaresRidge(SmoothOracle):
    """f(x) = (1/n)||Ax - b||^2 + (gamma/2)||x||^2 (n = rows of A)."""

    def __init__(self, A: np.ndarray, b: np.ndarray, gamma: float = 0.0):
        self.A = np.asarray(A, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.gamma = float(gamma)
        self.n = max(self.A.shape[0], 1)
        sv = linalg.svdvals(self.A) if self.A.size else np.zeros(1)
        self._sq_top = float(sv[0] ** 2)
        self._sq_bottom = float(sv[-1] ** 2) if self.A.shape[0] >= self.A.shape[1] else 0.0

    def value(self, x: np.ndarray) -> float:
        resid = self.A @ x - self.b
        return float(resid @ resid / self.n + 0.5 * self.gamma * (x @ x))

    def grad(self, x: np.ndarray) -> np.ndarray:
        return (2.0 / self.n) * (self.A.T @ (self.A @ x - self.b)) + self.gamma * x

    @property
    def lipschitz(self) -> float:
        return 2.0 * self._sq_top / self.n + self.gamma

    @property
    def strong_convexity(self) -> float:
        return 2.0 * self._sq_bottom / self.n + self.gamma


class LogDetLoss(SmoothOracle):
    """
    Gaussian negative log-likelihood over flat symmetric matrices:
    f(X) = -n log det X + sign * trace(X Y), +inf unless X is positive definite.
    """

    def __init__(self, y: np.ndarray, n: int, trace_sign: int = 1):
        if trace_sign not in (1, -1):
            raise ValueError(f"trace_sign must be +1 or -1, got {trace_sign}")
        self.y = np.asarray(y, dtype=float)
        self.dim = self.y.shape[0]
        self.n = n
        self.trace_sign = trace_sign
        self._y_flat = sym_flatten(self.y)

    def value(self, x: np.ndarray) -> float:
        mat = sym_unflatten(x, self.dim)
        try:
            chol = linalg.cholesky(mat, lower=True)
        except linalg.LinAlgError:
            return np.inf
        logdet = 2.0 * float(np.log(np.diag(chol)).sum())
        return -self.n * logdet + self.trace_sign * float(x @ self._y_flat)

    def grad(self, x: np.ndarray) -> np.ndarray:
        mat = sym_unflatten(x, self.dim)
        inv = linalg.inv(mat)
        return sym_flatten(-self.n * 0.5 * (inv + inv.T)) + self.trace_sign * self._y_flat


# Problem instances

@dataclass(frozen=True)
class ProblemMetadata:
    """What is known about an instance beyond its oracles."""
    family: str
    lipschitz: Optional[tuple[float, ...]] = None
    strong_convexity: Optional[tuple[float, ...]] = None
    gammas: Optional[tuple[float, ...]] = None
    x_true: Optional[np.ndarray] = field(default=None, compare=False)
    matrix_dim: Optional[int] = None
    dropped_rows: int = 0

    @property
    def lipschitz_max(self) -> Optional[float]:
        return max(self.lipschitz) if self.lipschitz else None

    @property
    def condition_number(self) -> Optional[float]:
        """sum L_i / sum mu_i, the conditioning of the aggregate loss."""
        if not self.lipschitz or not self.strong_convexity:
            return None
        mu = sum(self.strong_convexity)
        return float(sum(self.lipschitz) / mu) if mu > 0 else np.inf


@dataclass(frozen=True)
class ProblemInstance:
    """m local smooth oracles and m local nonsmooth terms over R^d."""
    smooth: tuple[SmoothOracle, ...]
    nonsmooth: tuple[ProxSpec, ...]
    d: int
    metadata: ProblemMetadata

    def __post_init__(self):
        if len(self.smooth) != len(self.nonsmooth):
            raise ValueError(
                f"need one nonsmooth term per agent: {len(self.smooth)} losses vs {len(self.nonsmooth)} terms"
            )
        if not self.smooth:
            raise ValueError("a problem needs at least one agent")

    @property
    def m(self) -> int:
        return len(self.smooth)

    def f_values(self, X: np.ndarray) -> np.ndarray:
        """Row i holds f_i(x_i)."""
        return np.array([f.value(X[i]) for i, f in enumerate(self.smooth)])

    def grad_F(self, X: np.ndarray) -> np.ndarray:
        """Stacked gradients: row i is grad f_i(x_i)."""
        return np.vstack([f.grad(X[i]) for i, f in enumerate(self.smooth)])

    def smooth_total(self, x: np.ndarray) -> float:
        return float(sum(f.value(x) for f in self.smooth))

    def smooth_grad_total(self, x: np.ndarray) -> np.ndarray:
        return np.sum([f.grad(x) for f in self.smooth], axis=0)

    def nonsmooth_total(self, x: np.ndarray) -> float:
        return float(sum(r.value(x) for r in self.nonsmooth))

    def objective(self, x: np.ndarray) -> float:
        """u(x) = sum_j f_j(x) + sum_j r_j(x)."""
        f = self.smooth_total(x)
        if not np.isfinite(f):
            return np.inf
        return f + self.nonsmooth_total(x)

    def uniform_nonsmooth(self) -> bool:
        first = self.nonsmooth[0]
        return all(r == first for r in self.nonsmooth)

    def with_nonsmooth(self, specs: Sequence[ProxSpec]) -> "ProblemInstance":
        return ProblemInstance(smooth=self.smooth, nonsmooth=tuple(specs), d=self.d, metadata=self.metadata)


def _metadata_from(family: str, oracles: Sequence[SmoothOracle], **extra) -> ProblemMetadata:
    lip = [o.lipschitz for o in oracles]
    return ProblemMetadata(
        family=family,
        lipschitz=tuple(lip) if all(v is not None for v in lip) else None,
        strong_convexity=tuple(o.strong_convexity for o in oracles),
        **extra,
    )


# Families

def logistic_l1(data: Sequence[Dataset], lam: float = DEFAULT_LAMBDA) -> ProblemInstance:
    """Binary logistic regression, each agent owning one shard, with lam*||x||_1 everywhere."""
    if lam < 0.0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    shards = list(data)
    if not shards:
        raise ValueError("need at least one shard")
    for i, shard in enumerate(shards):
        if not shard.is_binary():
            raise ValueError(f"agent {i}: labels must lie in {{-1, +1}}")

    oracles = tuple(LogisticLoss(s.features, s.labels) for s in shards)
    spec = ProxSpec.l1(lam) if lam > 0.0 else ProxSpec.zero()
    dropped = data.dropped if isinstance(data, Shards) else 0
    return ProblemInstance(
        smooth=oracles,
        nonsmooth=tuple(spec for _ in oracles),
        d=shards[0].d,
        metadata=_metadata_from("logistic", oracles, dropped_rows=dropped),
    )


def synthetic_classification(
    seed: int,
    m: int,
    n: int,
    d: int,
    density: float = 0.1,
    flip: float = 0.1,
) -> Shards:
    """
    Gaussian features labelled by a sparse ground-truth separator, with each label
    flipped independently with probability `flip` so the data are not separable.
    """
    if not 0.0 < density <= 1.0:
        raise ValueError(f"density must lie in (0, 1], got {density}")
    if not 0.0 <= flip < 0.5:
        raise ValueError(f"flip must lie in [0, 1/2), got {flip}")

    rng = np.random.default_rng(seed)
    truth = np.zeros(d)
    nnz = max(1, int(round(density * d)))
    truth[rng.choice(d, size=nnz, replace=False)] = rng.standard_normal(nnz)

    shards = []
    for _ in range(m):
        features = rng.standard_normal((n, d))
        labels = np.where(features @ truth >= 0.0, 1.0, -1.0)
        flips = rng.random(n) < flip
        labels[flips] *= -1.0
        shards.append(Dataset(features=features, labels=labels))
    return Shards(shards=shards, dropped=0)


def elastic_net(
    seed: int,
    m: int,
    n: int,
    d: int,
    lam: float = DEFAULT_LAMBDA,
    gamma: Optional[Sequence[float]] = None,
) -> ProblemInstance:
    """
    Ridge-regularized least squares per agent with a shared l1 term.

    A_i and b_i are drawn i.i.d. standard normal from numpy's PCG64 generator
    seeded with `seed`, agent by agent (A_i then b_i).
    """
    if min(m, n, d) < 1:
        raise ValueError(f"sizes must be positive, got m={m}, n={n}, d={d}")
    gammas = gamma_schedule(m) if gamma is None else np.asarray(gamma, dtype=float)
    if gammas.shape != (m,):
        raise ValueError(f"need {m} gamma values, got {gammas.shape[0]}")

    rng = np.random.default_rng(seed)
    oracles = []
    for i in range(m):
        A = rng.standard_normal((n, d))
        b = rng.standard_normal(n)
        oracles.append(LeastSquaresRidge(A, b, gammas[i]))
    oracles = tuple(oracles)

    spec = ProxSpec.l1(lam) if lam > 0.0 else ProxSpec.zero()
    return ProblemInstance(
        smooth=oracles,
        nonsmooth=tuple(spec for _ in oracles),
        d=d,
        metadata=_metadata_from("elastic_net", oracles, gammas=tuple(float(g) for g in gammas)),
    )


def default_covariance(dim: int, decay: float = DEFAULT_COVARIANCE_DECAY) -> np.ndarray:
    """Toeplitz covariance with entries decay^|i-j|."""
    idx = np.arange(dim)
    return decay ** np.abs(idx[:, None] - idx[None, :])


def covariance_mle(
    seed: int,
    m: int,
    n: int,
    dim: int,
    a: float = DEFAULT_SPECTRAL_BOX[0],
    b: float = DEFAULT_SPECTRAL_BOX[1],
    sigma: Optional[np.ndarray] = None,
    trace_sign: int = 1,
) -> ProblemInstance:
    """
    Covariance estimation from n Gaussian samples per agent, constrained to the
    spectral box aI <= X <= bI. Variables live in flat symmetric coordinates.
    """
    if not 0.0 < a <= b:
        raise ValueError(f"spectral box requires 0 < a <= b, got ({a}, {b})")
    sigma = default_covariance(dim) if sigma is None else np.asarray(sigma, dtype=float)
    if sigma.shape != (dim, dim) or not np.allclose(sigma, sigma.T):
        raise ValueError("sigma must be a symmetric dim x dim matrix")
    try:
        chol = linalg.cholesky(sigma, lower=True)
    except linalg.LinAlgError:
        raise ValueError("sigma is not positive definite") from None

    rng = np.random.default_rng(seed)
    oracles = []
    for _ in range(m):
        samples = rng.standard_normal((n, dim)) @ chol.T
        y = samples.T @ samples / n
        oracles.append(LogDetLoss(y, n, trace_sign=trace_sign))
    oracles = tuple(oracles)

    spec = ProxSpec.spectral_box(a, b, dim)
    return ProblemInstance(
        smooth=oracles,
        nonsmooth=tuple(spec for _ in oracles),
        d=sym_size(dim),
        metadata=ProblemMetadata(family="covariance", matrix_dim=dim),
    )


def single_agent(oracle: SmoothOracle, spec: ProxSpec, d: int, family: str = "custom") -> ProblemInstance:
    """Wrap one loss and one regularizer as a one-agent instance."""
    return ProblemInstance(
        smooth=(oracle,),
        nonsmooth=(spec,),
        d=d,
        metadata=_metadata_from(family, (oracle,)),
    )


def is_l1(prob: ProblemInstance) -> bool:
    return all(r.kind is ProxKind.L1 for r in prob.nonsmooth)


class AggregateLoss(SmoothOracle):
    """f = sum_i f_i of an instance, seen as one centralized loss."""

    def __init__(self, prob: ProblemInstance):
        self.prob = prob

    def value(self, x: np.ndarray) -> float:
        return self.prob.smooth_total(x)

    def grad(self, x: np.ndarray) -> np.ndarray:
        return self.prob.smooth_grad_total(x)

    @property
    def lipschitz(self) -> Optional[float]:
        lip = self.prob.metadata.lipschitz
        return float(sum(lip)) if lip else None


def aggregate_nonsmooth(prob: ProblemInstance) -> ProxSpec:
    """The single term equal to sum_i r_i; needs identical terms across agents."""
    if not prob.uniform_nonsmooth():
        raise ValueError("nonsmooth terms differ across agents; their sum has no closed-form prox")
    return prob.nonsmooth[0].scaled(prob.m)
