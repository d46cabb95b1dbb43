"""Simulated synchronous network exchanges with message accounting."""

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .netgraph import GossipMatrix, NetworkGraph


class ConsensusMode(Enum):
    """How the network-wide stepsize minimum is reached."""
    BROADCAST = "broadcast"  # one scalar broadcast per agent
    FLOODING = "flooding"    # diameter rounds of neighbor min


@dataclass
class MessageLedger:
    """Running totals of messages sent over the simulated network."""
    vector_msgs: int = 0
    scalar_msgs: int = 0
    broadcast_msgs: int = 0

    def snapshot(self) -> "MessageLedger":
        return replace(self)

    def since(self, earlier: "MessageLedger") -> "MessageLedger":
        """Messages sent after `earlier` was taken."""
        return MessageLedger(
            vector_msgs=self.vector_msgs - earlier.vector_msgs,
            scalar_msgs=self.scalar_msgs - earlier.scalar_msgs,
            broadcast_msgs=self.broadcast_msgs - earlier.broadcast_msgs,
        )


@dataclass
class GossipChannel:
    """
    The only path by which agents exchange data.

    Every neighbor exchange sends one message per edge per direction. Pairs
    that carried data are recorded in `accessed_pairs` (as sorted tuples).
    """
    graph: NetworkGraph
    gossip: GossipMatrix
    ledger: MessageLedger = field(default_factory=MessageLedger)
    accessed_pairs: set[tuple[int, int]] = field(default_factory=set)

    def __post_init__(self):
        if self.graph.m != self.gossip.m:
            raise ValueError(f"graph has {self.graph.m} agents but the gossip matrix is {self.gossip.m}x{self.gossip.m}")
        w = self.gossip.w
        rows, cols = np.nonzero(w)
        self._mix_pairs = {(int(i), int(j)) for i, j in zip(rows, cols) if i < j}

    @property
    def m(self) -> int:
        return self.graph.m

    @property
    def exchange_cost(self) -> int:
        return 2 * len(self.graph.edges)

    def _touch(self, pairs) -> None:
        self.accessed_pairs.update(pairs)

    def mix(self, Z: np.ndarray) -> np.ndarray:
        """W Z: each agent averages the rows its neighbors send it."""
        self.ledger.vector_msgs += self.exchange_cost
        self._touch(self._mix_pairs)
        return self.gossip.w @ Z

    def laplacian_scaled(self, X: np.ndarray, alphas: np.ndarray) -> np.ndarray:
        """
        (I - W) diag(1/alpha) X from rows already held by neighbors; only the
        stepsize scalars travel.
        """
        self.ledger.scalar_msgs += self.exchange_cost
        self._touch(self._mix_pairs)
        scaled = X / np.asarray(alphas, dtype=float)[:, None]
        return scaled - self.gossip.w @ scaled

    def neighborhood_min(self, values: np.ndarray) -> np.ndarray:
        """Entry i becomes the minimum over {i} and its neighbors."""
        values = np.asarray(values, dtype=float)
        self.ledger.scalar_msgs += self.exchange_cost
        self._touch(self.graph.edges)
        return np.array([values[list(self.graph.closed_neighborhood(i))].min() for i in range(self.m)])

    def broadcast_min(self, values: np.ndarray) -> float:
        """Every agent broadcasts its scalar to the whole network."""
        self.ledger.broadcast_msgs += self.m
        return float(np.min(values))

    def flooding_min(self, values: np.ndarray) -> float:
        """Neighbor min repeated diameter times; exact on a connected graph."""
        current = np.asarray(values, dtype=float)
        for _ in range(self.graph.diameter):
            current = self.neighborhood_min(current)
        return float(current[0]) if current.size else np.inf

    def global_min(self, values: np.ndarray, mode: ConsensusMode) -> float:
        if mode is ConsensusMode.FLOODING:
            return self.flooding_min(values)
        return self.broadcast_min(values)
