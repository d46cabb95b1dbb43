"""Experiment configuration: TOML files with dotted keys validated by pydantic."""

from pathlib import Path
from typing import Any, Literal, Optional
import tomllib

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .data.libsvm import LabelRule
from .data.models import row_field_names
from .data.traces import PLOT_METRICS
from .sim.engine import Algorithm, InitKind, SolverConfig
from .sim.gossip import ConsensusMode
from .sim.problems import DEFAULT_LAMBDA, DEFAULT_SPECTRAL_BOX
from .sim.stepsize import BudgetKind, BudgetSpec


class ConfigError(ValueError):
    """An experiment configuration failed validation."""


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ProblemSection(_Section):
    """Which problem family to build, and its sizes."""
    family: Literal["logistic", "elastic_net", "covariance"] = "elastic_net"
    seed: Optional[int] = None  # defaults to the top-level seed
    n: int = Field(default=20, ge=1)
    d: int = Field(default=50, ge=1)
    lam: float = Field(default=DEFAULT_LAMBDA, ge=0.0)
    gamma: Optional[list[float]] = None

    # logistic
    libsvm: Optional[str] = None
    label_rule: Literal["parity", "sign"] = "parity"
    limit: Optional[int] = Field(default=None, ge=1)
    density: float = Field(default=0.1, gt=0.0, le=1.0)
    flip: float = Field(default=0.1, ge=0.0, lt=0.5)

    # covariance
    dim: int = Field(default=5, ge=1)
    box: tuple[float, float] = DEFAULT_SPECTRAL_BOX
    trace_sign: Literal[-1, 1] = 1

    @field_validator("box")
    @classmethod
    def _box_ordered(cls, v: tuple[float, float]) -> tuple[float, float]:
        if not 0.0 < v[0] <= v[1]:
            raise ValueError(f"box must satisfy 0 < a <= b, got {list(v)}")
        return v


class GraphSection(_Section):
    kind: Literal["erdos_renyi", "path", "star", "complete", "edge_list"] = "erdos_renyi"
    m: int = Field(default=20, ge=1)
    p: float = Field(default=0.5, gt=0.0, le=1.0)
    seed: Optional[int] = None
    edges: Optional[str] = None

    @model_validator(mode="after")
    def _edge_file_present(self) -> "GraphSection":
        if self.kind == "edge_list" and not self.edges:
            raise ValueError("graph.kind = 'edge_list' needs graph.edges")
        return self


class BudgetSection(_Section):
    kind: Literal["fixed", "drop_reset"] = "drop_reset"
    beta: float = Field(default=1.0, gt=0.0)
    p: float = Field(default=2.0, gt=1.0)
    q: float = Field(default=2.0, gt=1.0)
    eta_prime: float = Field(default=0.7, gt=0.0, lt=1.0)


class SolverSection(_Section):
    algorithm: Literal["datos", "local_datos", "adaptive_dys", "pg_extra"] = "datos"
    algorithms: list[Literal["datos", "local_datos", "adaptive_dys", "pg_extra"]] = Field(
        default_factory=lambda: ["datos", "local_datos", "pg_extra"]
    )
    alpha_init: float | list[float] = 10.0
    delta: float = Field(default=0.9, gt=0.0, lt=1.0)
    eta: float = Field(default=0.5, gt=0.0, lt=1.0)
    c: float = 1.0 / 3.0
    max_trials: int = Field(default=60, ge=1)
    slack: float = Field(default=1e-12, ge=0.0)
    k_max: int = Field(default=1000, ge=0)
    stop: float = Field(default=0.0, ge=0.0)
    consensus: Literal["broadcast", "flooding"] = "broadcast"
    init: Literal["normal", "feasible"] = "normal"
    fixed_alpha: Optional[float] = Field(default=None, gt=0.0)
    workers: int = Field(default=1, ge=1)
    budget: BudgetSection = Field(default_factory=BudgetSection)

    @field_validator("c")
    @classmethod
    def _c_open_interval(cls, v: float) -> float:
        if not 0.0 < v < 0.5:
            raise ValueError(f"c must lie in the open interval (0, 1/2), got c={v}")
        return v

    @field_validator("alpha_init")
    @classmethod
    def _alpha_positive(cls, v):
        values = v if isinstance(v, list) else [v]
        if not values or any(a <= 0.0 for a in values):
            raise ValueError("alpha_init must be positive")
        return v

    @field_validator("algorithms")
    @classmethod
    def _algorithms_nonempty(cls, v: list) -> list:
        if not v:
            raise ValueError("need at least one algorithm to compare")
        if len(set(v)) != len(v):
            raise ValueError("algorithms must be distinct")
        return v


class MetricsSection(_Section):
    plots: list[str] = Field(default_factory=lambda: list(PLOT_METRICS))
    reference: bool = True
    ref_tol: float = Field(default=1e-12, gt=0.0)
    ref_max_iter: int = Field(default=200_000, ge=1)
    certificate_rounds: int = Field(default=5000, ge=1)
    certificate_tol: float = Field(default=1e-8, gt=0.0)

    @field_validator("plots")
    @classmethod
    def _known_metrics(cls, v: list[str]) -> list[str]:
        known = set(row_field_names()) - {"k", "identified"}
        unknown = [name for name in v if name not in known]
        if unknown:
            raise ValueError(f"unknown metrics {unknown}; choose from {sorted(known)}")
        return v


class OutputSection(_Section):
    dir: str = "out"
    cache: Optional[str] = None  # SQLite reference cache; disabled when unset


class ExperimentConfig(_Section):
    """A complete experiment: problem, network, solver, metrics and output."""
    seed: int = Field(default=0, ge=0)
    problem: ProblemSection = Field(default_factory=ProblemSection)
    graph: GraphSection = Field(default_factory=GraphSection)
    solver: SolverSection = Field(default_factory=SolverSection)
    metrics: MetricsSection = Field(default_factory=MetricsSection)
    output: OutputSection = Field(default_factory=OutputSection)

    @model_validator(mode="after")
    def _cross_checks(self) -> "ExperimentConfig":
        m = self.graph.m
        alpha = self.solver.alpha_init
        if isinstance(alpha, list) and len(alpha) not in (1, m):
            raise ValueError(f"solver.alpha_init has {len(alpha)} entries for graph.m = {m}")
        if self.problem.gamma is not None and len(self.problem.gamma) != m:
            raise ValueError(f"problem.gamma has {len(self.problem.gamma)} entries for graph.m = {m}")
        if "merit" in self.metrics.plots and not self.metrics.reference:
            raise ValueError("metrics.plots asks for merit, which needs metrics.reference = true")
        return self

    @property
    def problem_seed(self) -> int:
        return self.seed if self.problem.seed is None else self.problem.seed

    @property
    def graph_seed(self) -> int:
        return self.seed if self.graph.seed is None else self.graph.seed

    @property
    def label_rule(self) -> LabelRule:
        return LabelRule(self.problem.label_rule)

    def algorithm(self) -> Algorithm:
        return Algorithm(self.solver.algorithm)

    def algorithms(self) -> list[Algorithm]:
        return [Algorithm(a) for a in self.solver.algorithms]

    def solver_config(self) -> SolverConfig:
        s = self.solver
        alpha = tuple(s.alpha_init) if isinstance(s.alpha_init, list) else s.alpha_init
        return SolverConfig(
            alpha_init=alpha,
            delta=s.delta,
            eta=s.eta,
            max_trials=s.max_trials,
            slack=s.slack,
            c=s.c,
            budget=BudgetSpec(
                kind=BudgetKind(s.budget.kind),
                beta=s.budget.beta,
                p=s.budget.p,
                q=s.budget.q,
                eta_prime=s.budget.eta_prime,
            ),
            k_max=s.k_max,
            stop=s.stop,
            seed=self.seed,
            consensus=ConsensusMode(s.consensus),
            init=InitKind(s.init),
            fixed_alpha=s.fixed_alpha,
            workers=s.workers,
        )

    def problem_key(self) -> dict[str, Any]:
        """Everything the problem instance depends on."""
        return {
            "problem": self.problem.model_dump(),
            "m": self.graph.m,
            "seed": self.problem_seed,
        }


def _format_errors(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        path = ".".join(str(part) for part in e["loc"]) or "<root>"
        lines.append(f"{path}: {e['msg']}")
    return "invalid configuration:\n  " + "\n  ".join(lines)


def parse_config(data: dict[str, Any], seed: Optional[int] = None, out: Optional[str] = None) -> ExperimentConfig:
    """Validate a decoded document, applying --seed / --out overrides."""
    data = dict(data)
    if seed is not None:
        data["seed"] = seed
    if out is not None:
        data["output"] = {**data.get("output", {}), "dir": out}
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(_format_errors(e)) from None


def load_config(path: str | Path, seed: Optional[int] = None, out: Optional[str] = None) -> ExperimentConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from None
    return parse_config(data, seed=seed, out=out)
