"""Directed simple graphs: ingestion, degrees, random walks, exact PageRank."""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field

import numpy as np


class EdgeListParseError(ValueError):
    """Raised when an edge-list line cannot be parsed; carries the line number."""

    def __init__(self, message, line_number):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class PageRankDivergenceError(RuntimeError):
    """Power iteration exceeded max_iter; carries the last residual."""

    def __init__(self, residual, max_iter):
        super().__init__(
            f"PageRank did not converge after {max_iter} iterations "
            f"(last residual {residual:.3e})"
        )
        self.residual = residual


@dataclass(frozen=True)
class Graph:
    """Immutable directed simple graph with dense node ids 0..N-1.

    Adjacency is stored in compressed sparse form (``out_indptr``/``out_indices``
    and the in-direction mirror) with sorted neighbor lists, so edge membership
    is a binary search. ``original_ids`` records the pre-remap labels when the
    graph came from a loader that had to densify ids.
    """

    num_nodes: int
    edges: np.ndarray           # (M, 2) int64, lexicographically sorted, unique
    out_indptr: np.ndarray
    out_indices: np.ndarray
    in_indptr: np.ndarray
    in_indices: np.ndarray
    out_degree: np.ndarray
    in_degree: np.ndarray
    original_ids: np.ndarray | None = field(default=None, compare=False)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def out_neighbors(self, node: int) -> np.ndarray:
        return self.out_indices[self.out_indptr[node]:self.out_indptr[node + 1]]

    def in_neighbors(self, node: int) -> np.ndarray:
        return self.in_indices[self.in_indptr[node]:self.in_indptr[node + 1]]

    def has_edge(self, i: int, j: int) -> bool:
        row = self.out_neighbors(i)
        pos = np.searchsorted(row, j)
        return pos < len(row) and row[pos] == j

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.num_nodes == other.num_nodes and np.array_equal(self.edges, other.edges)


def _csr_from_edges(src, dst, num_nodes):
    order = np.lexsort((dst, src))
    indptr = np.zeros(num_nodes + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, dst[order].astype(np.int64)


def from_edges(num_nodes: int, edges, symmetrize: bool = False,
               original_ids=None) -> Graph:
    """Build a simple directed Graph, dropping self-loops and duplicate edges.

    With ``symmetrize`` every surviving edge (i, j) also inserts (j, i), turning
    the input into the directed encoding of an undirected graph.
    """
    if num_nodes < 1:
        raise ValueError("graph needs at least one node")
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if len(edges):
        if edges.min() < 0 or edges.max() >= num_nodes:
            raise IndexError(
                f"edge endpoint out of range for num_nodes={num_nodes}"
            )
        edges = edges[edges[:, 0] != edges[:, 1]]          # no self-loops
        if symmetrize and len(edges):
            edges = np.vstack([edges, edges[:, ::-1]])
        edges = np.unique(edges, axis=0)                   # dedup + lexsort
    else:
        edges = edges.reshape(0, 2)

    src, dst = edges[:, 0], edges[:, 1]
    out_indptr, out_indices = _csr_from_edges(src, dst, num_nodes)
    in_indptr, in_indices = _csr_from_edges(dst, src, num_nodes)
    out_degree = np.diff(out_indptr)
    in_degree = np.diff(in_indptr)
    assert out_degree.sum() == in_degree.sum() == len(edges)
    return Graph(
        num_nodes=num_nodes,
        edges=edges,
        out_indptr=out_indptr,
        out_indices=out_indices,
        in_indptr=in_indptr,
        in_indices=in_indices,
        out_degree=out_degree,
        in_degree=in_degree,
        original_ids=None if original_ids is None else np.asarray(original_ids),
    )


def load_edge_list(source, format: str = "tsv", symmetrize: bool = False,
                   num_nodes: int | None = None) -> Graph:
    """Parse an edge list from a path, text stream, or byte stream.

    Lines hold two integer node ids separated by whitespace (``tsv``) or a
    comma (``csv``); ``#``-prefixed lines and blank lines are ignored.

    When ``num_nodes`` is given, ids must already lie in [0, num_nodes) and are
    kept verbatim (ids >= num_nodes raise IndexError).  Otherwise the observed
    ids are remapped onto dense 0..N-1 in sorted order and the mapping is kept
    on the returned graph's ``original_ids``.
    """
    if format not in ("tsv", "csv"):
        raise ValueError(f"unknown edge-list format {format!r}")
    sep = "," if format == "csv" else None

    if isinstance(source, (str, os.PathLike)):
        fh = open(source, "r")
        close = True
    elif isinstance(source, bytes):
        fh = io.StringIO(source.decode("utf-8"))
        close = False
    elif isinstance(source, io.TextIOBase):
        fh, close = source, False
    else:  # binary stream
        fh, close = io.TextIOWrapper(source, encoding="utf-8"), False

    pairs = []
    try:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(sep)
            if len(parts) != 2:
                raise EdgeListParseError(
                    f"expected two node ids, got {line!r}", lineno)
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise EdgeListParseError(
                    f"non-integer node id in {line!r}", lineno) from None
            pairs.append((u, v))
    finally:
        if close:
            fh.close()

    raw = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    original_ids = None
    if num_nodes is None:
        ids = np.unique(raw) if len(raw) else np.empty(0, dtype=np.int64)
        if len(ids) == 0:
            raise ValueError("edge list contains no edges and no declared node count")
        remap = {int(old): new for new, old in enumerate(ids)}
        raw = np.vectorize(remap.__getitem__, otypes=[np.int64])(raw) if len(raw) else raw
        num_nodes = len(ids)
        original_ids = ids
    elif len(raw) and (raw.min() < 0 or raw.max() >= num_nodes):
        raise IndexError(f"node id outside declared range [0, {num_nodes})")

    return from_edges(num_nodes, raw, symmetrize=symmetrize,
                      original_ids=original_ids)


def write_edge_list(g: Graph, path, format: str = "tsv") -> None:
    """Write the graph's edges (dense ids) one ``src<TAB>dst`` pair per line."""
    sep = "," if format == "csv" else "\t"
    with open(path, "w") as fh:
        fh.write(f"# nodes: {g.num_nodes}\n")
        for u, v in g.edges:
            fh.write(f"{u}{sep}{v}\n")


def write_id_map(g: Graph, path) -> None:
    """Persist the dense-id to original-id mapping as two-column CSV."""
    with open(path, "w") as fh:
        fh.write("node_id,original_id\n")
        ids = g.original_ids
        if ids is None:
            ids = np.arange(g.num_nodes)
        for new, old in enumerate(ids):
            fh.write(f"{new},{old}\n")


@dataclass(frozen=True)
class WalkBatch:
    """Node pairs traversed by random walks plus the nominal pair budget.

    ``batch_size`` is the a-priori pair count ``len(starts) * r_wn * (r_wl - 1)``;
    it equals ``len(pairs)`` only when no walk terminated early at a node with
    out-degree zero.  The privacy calibration always uses the nominal count.
    """

    pairs: np.ndarray        # (B_actual, 2) int64
    batch_size: int          # nominal |E_B|
    starts: np.ndarray       # the walk start nodes, in order


def generate_walk_batch(g: Graph, node_list, r_wn: int, r_wl: int,
                        rng: np.random.Generator) -> WalkBatch:
    """Run ``r_wn`` random walks of up to ``r_wl`` nodes from every start node.

    Walks step uniformly over out-neighbors and emit each traversed edge as an
    ordered pair.  A walk reaching a node with no out-neighbors stops early.
    Each (start, replicate) walk runs on its own generator seeded from one
    upfront draw on ``rng``, so the batch is deterministic for a fixed master
    seed no matter how walks would be scheduled, and the parent generator's
    state stays checkpointable.
    """
    starts = np.asarray(node_list, dtype=np.int64)
    if starts.size == 0:
        raise ValueError("node_list must not be empty")
    if len(starts) and (starts.min() < 0 or starts.max() >= g.num_nodes):
        raise IndexError("walk start node out of range")
    if r_wn < 1:
        raise ValueError("r_wn must be >= 1")
    if r_wl < 2:
        raise ValueError("r_wl must be >= 2")

    walk_seeds = rng.integers(np.iinfo(np.int64).max, size=len(starts) * r_wn)
    pairs = []
    k = 0
    for start in starts:
        for _ in range(r_wn):
            sub = np.random.default_rng(int(walk_seeds[k]))
            k += 1
            u = int(start)
            for _ in range(r_wl - 1):
                nbrs = g.out_neighbors(u)
                if len(nbrs) == 0:
                    break
                v = int(nbrs[sub.integers(len(nbrs))])
                pairs.append((u, v))
                u = v

    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    return WalkBatch(pairs=pairs,
                     batch_size=len(starts) * r_wn * (r_wl - 1),
                     starts=starts)


def pagerank_exact(g: Graph, gamma: float = 0.85, tol: float = 1e-10,
                   max_iter: int = 1000) -> np.ndarray:
    """Exact PageRank by power iteration.

    Solves PR_j = gamma * sum_{i in P_j} PR_i / d_i^out + (1 - gamma) / N at a
    fixed point, measured in the infinity norm between successive iterates.
    Rank mass sitting on dangling nodes (out-degree 0) is redistributed
    uniformly over all nodes each sweep, which keeps the iteration stochastic
    and the total mass exactly 1.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError("damping factor must lie in (0, 1)")
    n = g.num_nodes
    src, dst = g.edges[:, 0], g.edges[:, 1]
    inv_out = np.zeros(n)
    nonzero = g.out_degree > 0
    inv_out[nonzero] = 1.0 / g.out_degree[nonzero]
    dangling = ~nonzero

    pr = np.full(n, 1.0 / n)
    residual = np.inf
    for _ in range(max_iter):
        flow = np.bincount(dst, weights=pr[src] * inv_out[src], minlength=n)
        loose = pr[dangling].sum()
        new = gamma * (flow + loose / n) + (1.0 - gamma) / n
        residual = np.abs(new - pr).max()
        pr = new
        if residual < tol:
            return pr
    raise PageRankDivergenceError(residual, max_iter)
