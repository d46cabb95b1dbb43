"""Solver logic for DATOS Lab."""

from .engine import (
    Algorithm,
    EngineError,
    InitKind,
    RoundReport,
    RoundResult,
    Runner,
    SolverConfig,
    SolverState,
    run,
)
from .gossip import ConsensusMode, GossipChannel, MessageLedger
from .metrics import ReferencePoint, SupportTracker
from .narration import Narrator, VerboseNarrator
from .netgraph import GossipMatrix, GraphGenerationError, NetworkGraph
from .problems import ProblemInstance
from .proxops import ProxKind, ProxSpec
from .refsolver import ReferenceSolverError, SolveReport, certify, prox_grad_reference
from .stepsize import BudgetKind, BudgetSpec, BudgetState, LineSearchError, LineSearchParams

__all__ = [
    "Algorithm",
    "EngineError",
    "InitKind",
    "RoundReport",
    "RoundResult",
    "Runner",
    "SolverConfig",
    "SolverState",
    "run",
    "ConsensusMode",
    "GossipChannel",
    "MessageLedger",
    "ReferencePoint",
    "SupportTracker",
    "Narrator",
    "VerboseNarrator",
    "GossipMatrix",
    "GraphGenerationError",
    "NetworkGraph",
    "ProblemInstance",
    "ProxKind",
    "ProxSpec",
    "ReferenceSolverError",
    "SolveReport",
    "certify",
    "prox_grad_reference",
    "BudgetKind",
    "BudgetSpec",
    "BudgetState",
    "LineSearchError",
    "LineSearchParams",
]
