"""2-D lattice social networks with optional small-world rewiring.

Agents sit on a rows x cols grid (node index = row * cols + col) joined to
their first-order neighbors: orthogonal only (von Neumann, interior degree 4)
or orthogonal plus diagonal (Moore, interior degree 8). Boundaries are not
periodic, so edge and corner nodes have fewer neighbors. Rewiring detaches a
Bernoulli-selected subset of lattice edges at one endpoint and reattaches
them to uniformly random nodes, preserving the total edge count.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra


class Neighborhood(enum.Enum):
    VON_NEUMANN = "von_neumann"
    MOORE = "moore"


@dataclass(frozen=True)
class LatticeSpec:
    """Lattice geometry: rows x cols grid with a neighborhood rule."""

    rows: int
    cols: int
    neighborhood: Neighborhood

    def __post_init__(self) -> None:
        if self.rows < 2 or self.cols < 2:
            raise ValueError(
                f"lattice must be at least 2x2, got {self.rows}x{self.cols}"
            )
        if not isinstance(self.neighborhood, Neighborhood):
            raise ValueError(f"invalid neighborhood: {self.neighborhood!r}")

    @property
    def node_count(self) -> int:
        return self.rows * self.cols


class SocialNetwork:
    """Immutable undirected network over lattice nodes.

    Stores edges canonically (smaller index first, sorted lexicographically)
    plus a CSR neighbor table for fast per-node queries. All arrays are
    read-only; rewiring produces a new instance.

    Attributes:
        node_count: number of agents.
        base_spec: lattice geometry the network was built from.
        rewire_prob: probability used when this network was rewired (0 for a
            pure lattice).
        indptr, indices: CSR neighbor table; neighbors of node i are
            indices[indptr[i]:indptr[i+1]], sorted ascending.
    """

    def __init__(self, edges: np.ndarray, base_spec: LatticeSpec, rewire_prob: float):
        n = base_spec.node_count
        edges = np.asarray(edges, dtype=np.int32)
        if edges.ndim != 2 or edges.shape[1] != 2:
            raise ValueError("edges must be an (E, 2) array")
        # canonical storage: smaller endpoint first, rows sorted
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        order = np.lexsort((hi, lo))
        self._edges = np.column_stack((lo[order], hi[order]))
        self._edges.setflags(write=False)

        directed_src = np.concatenate((self._edges[:, 0], self._edges[:, 1]))
        directed_dst = np.concatenate((self._edges[:, 1], self._edges[:, 0]))
        order = np.lexsort((directed_dst, directed_src))
        self.indices = directed_dst[order]
        self.indices.setflags(write=False)
        self.indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(directed_src, minlength=n), out=self.indptr[1:])
        self.indptr.setflags(write=False)

        self.node_count = n
        self.base_spec = base_spec
        self.rewire_prob = float(rewire_prob)

    @property
    def edge_count(self) -> int:
        return self._edges.shape[0]

    @property
    def edges(self) -> np.ndarray:
        """(E, 2) array, smaller index first, lexicographically sorted."""
        return self._edges

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, node: int) -> np.ndarray:
        """Sorted neighbor indices of one node (read-only view)."""
        return self.indices[self.indptr[node] : self.indptr[node + 1]]

    @property
    def adjacency(self) -> list[np.ndarray]:
        """Per-node neighbor sequences (read-only views)."""
        return [self.neighbors(i) for i in range(self.node_count)]

    def to_csr(self) -> csr_matrix:
        data = np.ones(len(self.indices), dtype=np.int8)
        return csr_matrix(
            (data, self.indices, self.indptr),
            shape=(self.node_count, self.node_count),
        )


@dataclass(frozen=True)
class NetworkStats:
    """Diagnostic summary; unreached_pairs counts sampled (source, target)
    pairs with no connecting path (excluded from the mean)."""

    mean_degree: float
    mean_path_length: float
    clustering_coefficient: float
    unreached_pairs: int


@lru_cache(maxsize=8)
def _lattice_edges(rows: int, cols: int, neighborhood: Neighborhood) -> np.ndarray:
    idx = np.arange(rows * cols, dtype=np.int32).reshape(rows, cols)
    pairs = [
        np.column_stack((idx[:, :-1].ravel(), idx[:, 1:].ravel())),  # east
        np.column_stack((idx[:-1, :].ravel(), idx[1:, :].ravel())),  # south
    ]
    if neighborhood is Neighborhood.MOORE:
        pairs.append(
            np.column_stack((idx[:-1, :-1].ravel(), idx[1:, 1:].ravel()))  # southeast
        )
        pairs.append(
            np.column_stack((idx[:-1, 1:].ravel(), idx[1:, :-1].ravel()))  # southwest
        )
    edges = np.concatenate(pairs)
    lo = np.minimum(edges[:, 0], edges[:, 1])
    hi = np.maximum(edges[:, 0], edges[:, 1])
    order = np.lexsort((hi, lo))
    out = np.column_stack((lo[order], hi[order]))
    out.setflags(write=False)
    return out


@lru_cache(maxsize=8)
def build_lattice(spec: LatticeSpec) -> SocialNetwork:
    """Regular (non-toroidal) lattice for the given geometry.

    Cached: lattices are immutable and shared freely across runs.
    """
    edges = _lattice_edges(spec.rows, spec.cols, spec.neighborhood)
    return SocialNetwork(edges, spec, rewire_prob=0.0)


def rewire(net: SocialNetwork, p_r: float, rng: np.random.Generator) -> SocialNetwork:
    """Small-world rewiring of a pure lattice.

    Each lattice edge is independently selected with probability p_r, in
    canonical edge order. A selected edge keeps its smaller endpoint and moves
    the other to a node drawn uniformly from all nodes; draws producing a
    self-loop or duplicating an existing edge are rejected and resampled, so
    the edge count is exactly preserved.

    Args:
        net: a pure lattice (rewire_prob == 0); rewiring is applied once.
        p_r: rewiring probability in [0, 1].
        rng: random stream; a fixed seed yields a fixed network.

    Returns:
        A new immutable network with rewire_prob = p_r.
    """
    if not 0.0 <= p_r <= 1.0:
        raise ValueError(f"p_r must be in [0, 1], got {p_r}")
    if net.rewire_prob != 0.0:
        raise ValueError("network was already rewired; start from a pure lattice")
    edges = np.array(net.edges, dtype=np.int64)
    if p_r > 0.0:
        n = net.node_count
        selected = np.flatnonzero(rng.random(len(edges)) < p_r)
        keys = set((edges[:, 0] * n + edges[:, 1]).tolist())
        for i in selected:
            u, v = int(edges[i, 0]), int(edges[i, 1])
            keys.discard(u * n + v)
            while True:
                w = int(rng.integers(n))
                if w == u:
                    continue
                a, b = (u, w) if u < w else (w, u)
                key = a * n + b
                if key not in keys:
                    break
            keys.add(key)
            edges[i, 0], edges[i, 1] = a, b
    return SocialNetwork(edges, net.base_spec, rewire_prob=p_r)


def network_stats(
    net: SocialNetwork,
    sample_size: int,
    rng: np.random.Generator | None = None,
) -> NetworkStats:
    """Mean degree, BFS-sampled mean path length, mean local clustering.

    Path lengths are averaged over all (source, target) pairs reachable from
    `sample_size` uniformly sampled sources (every node when sample_size >=
    node_count, in which case no rng is needed). Clustering is the mean local
    coefficient over all nodes; nodes with degree < 2 contribute 0.
    """
    if sample_size < 1:
        raise ValueError(f"sample_size must be >= 1, got {sample_size}")
    n = net.node_count
    mean_degree = 2.0 * net.edge_count / n

    adj = net.to_csr()
    # triangles per node: (A @ A) restricted to existing edges counts, for
    # each i, paths i->j->k with k adjacent to i; each triangle twice
    paths2 = (adj @ adj).multiply(adj)
    triangles = np.asarray(paths2.sum(axis=1)).ravel() / 2.0
    deg = net.degrees.astype(float)
    possible = deg * (deg - 1.0) / 2.0
    with np.errstate(invalid="ignore", divide="ignore"):
        local = np.where(possible > 0, triangles / np.maximum(possible, 1e-300), 0.0)
    clustering = float(local.mean())

    if sample_size >= n:
        sources = np.arange(n)
    else:
        if rng is None:
            raise ValueError("rng is required when sampling fewer sources than nodes")
        sources = np.sort(rng.choice(n, size=sample_size, replace=False))
    dist = dijkstra(adj, unweighted=True, indices=sources)
    finite = np.isfinite(dist)
    unreached = int((~finite).sum())
    total = dist[finite].sum()  # self-distances contribute 0
    pair_count = finite.sum() - len(sources)  # exclude source-to-self pairs
    mean_path = float(total / pair_count) if pair_count > 0 else float("nan")

    return NetworkStats(
        mean_degree=mean_degree,
        mean_path_length=mean_path,
        clustering_coefficient=clustering,
        unreached_pairs=unreached,
    )


def write_edge_csv(net: SocialNetwork, path) -> None:
    """Export one undirected edge per line, smaller index first."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["src", "dst"])
        writer.writerows(net.edges.tolist())


def read_edge_csv(path, base_spec: LatticeSpec, rewire_prob: float = 0.0) -> SocialNetwork:
    """Rebuild a network from an edge-list CSV written by write_edge_csv."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["src", "dst"]:
            raise ValueError(f"expected header src,dst, got {header}")
        edges = [(int(a), int(b)) for a, b in reader]
    return SocialNetwork(np.array(edges, dtype=np.int32), base_spec, rewire_prob)
