"""Reconstruct a simple undirected graph from the accumulated transition-score
matrix. Pure post-processing: consumes only the score matrix and config."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .graph import Graph, from_edges

log = logging.getLogger(__name__)


def _score_array(scores) -> np.ndarray:
    """Accept a raw array or anything exposing ``.counts`` (ScoreMatrix)."""
    arr = np.asarray(getattr(scores, "counts", scores), dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError("score matrix must be square")
    if (arr < 0).any():
        raise ValueError("score matrix entries must be nonnegative")
    return arr


def symmetrize_scores(scores) -> np.ndarray:
    """Elementwise max with the transpose, diagonal forced to zero."""
    s = _score_array(scores)
    s_sym = np.maximum(s, s.T)
    np.fill_diagonal(s_sym, 0.0)
    return s_sym


@dataclass(frozen=True)
class EdgeModel:
    """Edge-independent model: symmetric nonnegative matrix summing to 1."""

    a_tilde: np.ndarray
    s_dagger: np.ndarray


def score_to_edge_model(scores) -> EdgeModel:
    """Symmetrize by elementwise max with the transpose, then normalize
    globally so the entries sum to 1."""
    s_dagger = symmetrize_scores(scores)
    total = s_dagger.sum()
    if total == 0.0:
        raise ValueError("score matrix is all zero; edge model is degenerate")
    return EdgeModel(a_tilde=s_dagger / total, s_dagger=s_dagger)


def default_target_edges(scores) -> int:
    """Edge budget from thresholding the standardized scores at sigmoid 0.5.

    The positive upper-triangle entries of the symmetrized matrix are
    standardized to z-scores; entries with z > 0 (sigmoid above 0.5) count
    toward the budget. Raw counts are scale-dependent, so without
    standardization any positive count would pass the threshold and the rule
    would be vacuous. Pairs never observed carry no evidence and are excluded.
    Zero variance falls back to counting the positive entries.

    The result is clamped to [N-1, N(N-1)/2]: the coverage phase of
    :func:`sample_graph` can need up to N-1 edges to reach every node, so a
    lower default would make the no-isolated-node guarantee unsatisfiable on
    uneven supports.
    """
    s_sym = symmetrize_scores(scores)
    n = s_sym.shape[0]
    iu = np.triu_indices(n, k=1)
    vals = s_sym[iu]
    pos = vals[vals > 0]
    if pos.size == 0:
        raise ValueError("score matrix is all zero; no edge budget derivable")
    std = pos.std()
    if std == 0.0:
        count = int(pos.size)
    else:
        count = int(np.sum((pos - pos.mean()) / std > 0))
    lo = max(n - 1, 1)
    hi = n * (n - 1) // 2
    return int(min(max(count, lo), hi))


def sample_edges_without_replacement(s_sym: np.ndarray, count: int,
                                     rng: np.random.Generator,
                                     existing=()) -> list:
    """Draw ``count`` distinct undirected edges with p_ij proportional to the
    symmetrized score of the pair, skipping ``existing``.

    Implemented as rounds of i.i.d. categorical draws with duplicates
    discarded, which is distributionally identical to sequential draws from
    the renormalized remainder; between rounds the distribution is rebuilt
    over the still-unused support, so the loop always terminates. Raises when
    the positive support is exhausted before ``count`` edges exist.
    """
    n = s_sym.shape[0]
    iu_r, iu_c = np.triu_indices(n, k=1)
    weights = s_sym[iu_r, iu_c].copy()
    support = weights > 0
    iu_r, iu_c, weights = iu_r[support], iu_c[support], weights[support]
    pair_index = {(int(u), int(v)): k for k, (u, v) in enumerate(zip(iu_r, iu_c))}
    unused = np.ones(len(weights), dtype=bool)
    for e in existing:
        k = pair_index.get((min(e), max(e)))
        if k is not None:
            unused[k] = False
    if count > int(unused.sum()):
        raise RuntimeError(
            f"score support holds only {int(unused.sum())} unused pairs, "
            f"cannot sample {count} more edges")

    picked = []
    while len(picked) < count:
        live = np.flatnonzero(unused)
        probs = weights[live] / weights[live].sum()
        cdf = np.cumsum(probs)
        cdf[-1] = 1.0
        need = count - len(picked)
        draws = live[np.searchsorted(cdf, rng.random(max(64, 2 * need)))]
        for d in draws:
            if unused[d]:
                unused[d] = False
                picked.append((int(iu_r[d]), int(iu_c[d])))
                if len(picked) == count:
                    break
    return picked


def _coverage_edges(s_sym: np.ndarray, rng: np.random.Generator) -> list:
    """Phase 1: guarantee every node at least one incident edge.

    Nodes are visited in order; a node already covered by an earlier edge is
    skipped, so the phase adds the minimum number of edges the sampled
    partners allow. An all-zero row falls back to a uniform random partner.
    """
    n = s_sym.shape[0]
    covered = np.zeros(n, dtype=bool)
    edges = []
    for i in range(n):
        if covered[i]:
            continue
        row = s_sym[i]
        total = row.sum()
        if total > 0:
            j = int(rng.choice(n, p=row / total))
        else:
            log.warning("node %d has an all-zero score row; sampling a uniform partner", i)
            j = int(rng.integers(n - 1))
            if j >= i:
                j += 1
        edges.append((min(i, j), max(i, j)))
        covered[i] = covered[j] = True
    return edges


def sample_graph(scores, target_edges: int | None = None,
                 rng: np.random.Generator | None = None) -> Graph:
    """Sample an undirected simple graph with exactly ``target_edges`` edges
    and no isolated nodes from the symmetrized score matrix.

    Phase 1 covers every node with one sampled edge (partner j with
    probability proportional to the score row). Phase 2 keeps sampling
    distinct edges, with pair probability proportional to its score over the
    global score mass, until the target is reached. The original graph is
    never consulted; the target must be supplied or derived from the scores.
    """
    if rng is None:
        rng = np.random.default_rng()
    s_sym = symmetrize_scores(scores)
    n = s_sym.shape[0]
    if n < 2:
        raise ValueError("need at least two nodes to synthesize a graph")
    if not s_sym.any():
        raise ValueError("score matrix is all zero; nothing to sample from")
    if target_edges is None:
        target_edges = default_target_edges(scores)
    min_edges = math.ceil(n / 2)
    max_edges = n * (n - 1) // 2
    if target_edges < min_edges:
        raise ValueError(
            f"target_edges={target_edges} cannot cover {n} nodes without "
            f"isolates; need at least {min_edges}")
    if target_edges > max_edges:
        raise ValueError(f"target_edges={target_edges} exceeds the {max_edges} "
                         "possible undirected edges")

    edges = _coverage_edges(s_sym, rng)
    if len(edges) > target_edges:
        raise RuntimeError(
            f"covering all nodes required {len(edges)} edges, more than "
            f"target_edges={target_edges}; raise the target")
    edges += sample_edges_without_replacement(
        s_sym, target_edges - len(edges), rng, existing=edges)

    arr = np.asarray(edges, dtype=np.int64)
    return from_edges(n, arr, symmetrize=True)
