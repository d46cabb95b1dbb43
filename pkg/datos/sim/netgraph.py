"""Communication graphs and gossip matrices for DATOS Lab."""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional
import logging

import networkx as nx
import numpy as np
from scipy import linalg

logger = logging.getLogger(__name__)


# Redraw cap for connectivity enforcement
MAX_REDRAWS = 10_000

# Tolerance for gossip invariant checks
GOSSIP_TOL = 1e-12


class GraphGenerationError(RuntimeError):
    """Raised when a connected graph could not be drawn within the redraw cap."""


def _canonical_edges(edges: Iterable[tuple[int, int]]) -> frozenset[tuple[int, int]]:
    """Store each undirected edge once as (min, max), dropping self-loops."""
    return frozenset((min(i, j), max(i, j)) for i, j in edges if i != j)


@dataclass(frozen=True)
class NetworkGraph:
    """Undirected connected communication graph over agents 0..m-1."""
    m: int
    edges: frozenset[tuple[int, int]]
    degrees: tuple[int, ...]
    diameter: int
    redraws: int = 0  # connectivity redraws spent by the generator
    _neighbors: tuple[tuple[int, ...], ...] = field(default=(), repr=False, compare=False)

    @classmethod
    def from_edges(cls, m: int, edges: Iterable[tuple[int, int]], redraws: int = 0) -> "NetworkGraph":
        """Build a graph from an edge iterable; rejects disconnected inputs."""
        if m < 1:
            raise ValueError(f"agent count must be positive, got m={m}")
        canon = _canonical_edges(edges)
        for i, j in canon:
            if not (0 <= i < m and 0 <= j < m):
                raise ValueError(f"edge ({i}, {j}) out of range for m={m}")

        g = nx.Graph()
        g.add_nodes_from(range(m))
        g.add_edges_from(canon)
        if not nx.is_connected(g):
            raise ValueError("graph is not connected")

        neighbors = tuple(tuple(sorted(g.neighbors(i))) for i in range(m))
        return cls(
            m=m,
            edges=canon,
            degrees=tuple(len(n) for n in neighbors),
            diameter=graph_diameter_nx(g),
            redraws=redraws,
            _neighbors=neighbors,
        )

    def neighbors(self, i: int) -> tuple[int, ...]:
        """Neighbors of agent i, excluding i itself."""
        return self._neighbors[i]

    def closed_neighborhood(self, i: int) -> tuple[int, ...]:
        """{i} together with its neighbors, ascending."""
        return tuple(sorted((i, *self._neighbors[i])))

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges

    def adjacency_matrix(self) -> np.ndarray:
        """0/1 symmetric adjacency matrix with zero diagonal."""
        adj = np.zeros((self.m, self.m))
        for i, j in self.edges:
            adj[i, j] = adj[j, i] = 1.0
        return adj

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.m))
        g.add_edges_from(self.edges)
        return g


def graph_diameter_nx(g: nx.Graph) -> int:
    """Exact hop diameter of a connected networkx graph (all-pairs BFS)."""
    if g.number_of_nodes() <= 1:
        return 0
    return int(nx.diameter(g))


def graph_diameter(g: NetworkGraph) -> int:
    """Exact hop diameter via all-pairs BFS."""
    return graph_diameter_nx(g.to_networkx())


def generate_erdos_renyi(
    m: int,
    p: float,
    seed: int,
    max_redraws: int = MAX_REDRAWS,
) -> NetworkGraph:
    """
    Sample a connected Erdős–Rényi graph G(m, p).

    Pairs are drawn by networkx's G(n, p) sampler (Python's Mersenne Twister,
    seeded with `seed + redraw`). Disconnected draws are discarded and redrawn
    with the next sub-seed until a connected graph appears.
    """
    if m < 1:
        raise ValueError(f"agent count must be positive, got m={m}")
    if not 0.0 < p <= 1.0:
        raise ValueError(f"edge probability must lie in (0, 1], got p={p}")

    for redraw in range(max_redraws + 1):
        g = nx.gnp_random_graph(m, p, seed=seed + redraw)
        if nx.is_connected(g):
            if redraw:
                logger.debug("G(%d, %.3f) seed=%d connected after %d redraws", m, p, seed, redraw)
            return NetworkGraph.from_edges(m, g.edges(), redraws=redraw)

    raise GraphGenerationError(
        f"no connected G({m}, {p}) within {max_redraws} redraws; p is too small for m"
    )


def path_graph(m: int) -> NetworkGraph:
    return NetworkGraph.from_edges(m, [(i, i + 1) for i in range(m - 1)])


def star_graph(m: int) -> NetworkGraph:
    """Hub 0 connected to leaves 1..m-1."""
    return NetworkGraph.from_edges(m, [(0, i) for i in range(1, m)])


def complete_graph(m: int) -> NetworkGraph:
    return NetworkGraph.from_edges(m, [(i, j) for i in range(m) for j in range(i + 1, m)])


# Edge-list serialization

def write_edge_list(g: NetworkGraph, path: str | Path) -> None:
    """Write `m=<int>` then one `i j` pair per line (0-based, sorted)."""
    lines = [f"m={g.m}"] + [f"{i} {j}" for i, j in sorted(g.edges)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path: str | Path) -> NetworkGraph:
    """Parse the edge-list format written by `write_edge_list`."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("m="):
        raise ValueError(f"{path}: missing 'm=<int>' header")
    m = int(lines[0][2:])
    edges = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}: malformed edge at line {lineno}: {line!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return NetworkGraph.from_edges(m, edges)


# Gossip matrices

@dataclass(frozen=True)
class GossipMatrix:
    """Base matrix W̃, mixing scalar c and the lazy matrix W = (1-c)I + cW̃."""
    w_tilde: np.ndarray
    c: float
    w: np.ndarray

    @property
    def m(self) -> int:
        return self.w.shape[0]

    def laplacian(self) -> np.ndarray:
        """I - W."""
        return np.eye(self.m) - self.w


def metropolis_weights(g: NetworkGraph) -> np.ndarray:
    """Metropolis–Hastings weights: 1/(1 + max(deg_i, deg_j)) on edges."""
    w = np.zeros((g.m, g.m))
    for i, j in g.edges:
        w[i, j] = w[j, i] = 1.0 / (1.0 + max(g.degrees[i], g.degrees[j]))
    for i in range(g.m):
        w[i, i] = 1.0 - (w[i].sum() - w[i, i])
    return w


def lazy_mix(w_tilde: np.ndarray, c: float) -> GossipMatrix:
    """Form W = (1-c)I + cW̃ for c in the open interval (0, 1/2)."""
    if not 0.0 < c < 0.5:
        raise ValueError(f"c must lie in the open interval (0, 1/2), got c={c}")
    w_tilde = np.array(w_tilde, dtype=float)
    w = (1.0 - c) * np.eye(w_tilde.shape[0]) + c * w_tilde
    w_tilde.setflags(write=False)
    w.setflags(write=False)
    return GossipMatrix(w_tilde=w_tilde, c=float(c), w=w)


def second_eigenvalue(w_tilde: np.ndarray) -> float:
    """Second-largest eigenvalue of a symmetric stochastic matrix (1 when m = 1)."""
    w_tilde = np.asarray(w_tilde, dtype=float)
    if w_tilde.shape[0] < 2:
        return 1.0
    eigs = linalg.eigh(w_tilde, eigvals_only=True)
    return float(np.sort(eigs)[-2])


def contraction_bound(gossip: GossipMatrix) -> float:
    """sqrt(c (1 - λ₂(W̃))), the network factor in the linear-rate bounds."""
    gap = max(0.0, 1.0 - second_eigenvalue(gossip.w_tilde))
    return float(np.sqrt(gossip.c * gap))


def validate_gossip(gossip: GossipMatrix, g: Optional[NetworkGraph] = None, tol: float = GOSSIP_TOL) -> list[str]:
    """Return the list of violated gossip invariants (empty when valid)."""
    problems = []
    ones = np.ones(gossip.m)
    for name, mat in (("w_tilde", gossip.w_tilde), ("w", gossip.w)):
        if np.max(np.abs(mat - mat.T)) > tol:
            problems.append(f"{name} is not symmetric")
        if np.max(np.abs(mat @ ones - ones)) > tol:
            problems.append(f"{name} rows do not sum to 1")
        if np.any(mat < -tol):
            problems.append(f"{name} has negative entries")
        if np.any(np.diag(mat) <= 0.0):
            problems.append(f"{name} has a nonpositive diagonal entry")

    if g is not None:
        pattern = g.adjacency_matrix() + np.eye(g.m)
        for name, mat in (("w_tilde", gossip.w_tilde), ("w", gossip.w)):
            if not np.array_equal(mat > 0.0, pattern > 0.0):
                problems.append(f"{name} sparsity differs from the closed adjacency pattern")

    lam_min = float(linalg.eigh(gossip.w, eigvals_only=True).min())
    if lam_min < 1.0 - 2.0 * gossip.c - 1e-10 or lam_min <= 0.0:
        problems.append(f"lambda_min(W) = {lam_min:.3e} violates the 1 - 2c bound")
    return problems
