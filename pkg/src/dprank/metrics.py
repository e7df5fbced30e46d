"""Structural graph statistics, error aggregation, and the two downstream
tasks (link-prediction AUC and node-classification Micro-F1).

All structural metrics are computed on the undirected simplification of the
graph; path-based metrics (CPL, diameter) are restricted to the largest
connected component so that disconnected graphs stay comparable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .graph import Graph

STAT_NAMES = ("triangle_count", "wedge_count", "claw_count", "rede",
              "cpl", "diameter", "lcc_size")


def undirected_edges(g: Graph) -> np.ndarray:
    """Unique undirected edges as (min, max) pairs."""
    if g.num_edges == 0:
        return np.empty((0, 2), dtype=np.int64)
    lo = np.minimum(g.edges[:, 0], g.edges[:, 1])
    hi = np.maximum(g.edges[:, 0], g.edges[:, 1])
    return np.unique(np.stack([lo, hi], axis=1), axis=0)


def undirected_degrees(g: Graph) -> np.ndarray:
    und = undirected_edges(g)
    deg = np.zeros(g.num_nodes, dtype=np.int64)
    if len(und):
        np.add.at(deg, und[:, 0], 1)
        np.add.at(deg, und[:, 1], 1)
    return deg


def _undirected_csr(g: Graph, und=None):
    und = undirected_edges(g) if und is None else und
    n = g.num_nodes
    rows = np.concatenate([und[:, 0], und[:, 1]])
    cols = np.concatenate([und[:, 1], und[:, 0]])
    return csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))


@dataclass(frozen=True)
class GraphStats:
    """The structural statistics compared between original and synthetic
    graphs. Path metrics and entropy are None when undefined (no edges)."""

    triangle_count: int
    wedge_count: int
    claw_count: int
    rede: float | None
    cpl: float | None
    diameter: int | None
    lcc_size: int
    degree_sequence: np.ndarray

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in STAT_NAMES}


def _triangles(und: np.ndarray, n: int) -> int:
    """Exact triangle count via sorted-adjacency intersection: a triangle
    u < v < w is counted once, at its lowest edge (u, v)."""
    adj = [[] for _ in range(n)]
    for u, v in und:
        adj[u].append(v)
        adj[v].append(u)
    adj = [np.sort(np.asarray(a, dtype=np.int64)) for a in adj]
    total = 0
    for u, v in und:
        common = np.intersect1d(adj[u], adj[v], assume_unique=True)
        total += int(np.sum(common > v))
    return total


def compute_stats(g: Graph) -> GraphStats:
    n = g.num_nodes
    und = undirected_edges(g)
    deg = undirected_degrees(g)
    m = len(und)

    wedges = int(np.sum(deg * (deg - 1) // 2))
    claws = int(np.sum(deg * (deg - 1) * (deg - 2) // 6))
    triangles = _triangles(und, n) if m else 0

    rede = None
    if m > 0 and n > 1:
        p = deg[deg > 0] / (2.0 * m)
        rede = float(np.sum(-p * np.log(p)) / np.log(n))

    cpl = None
    diameter = None
    lcc_size = 1 if n else 0
    if m > 0:
        csr = _undirected_csr(g, und)
        n_comp, labels = connected_components(csr, directed=False)
        sizes = np.bincount(labels)
        lcc_label = int(np.argmax(sizes))
        lcc_size = int(sizes[lcc_label])
        members = np.flatnonzero(labels == lcc_label)
        if lcc_size > 1:
            sub = csr[members][:, members]
            dist = shortest_path(sub, method="D", unweighted=True, directed=False)
            off = dist[~np.eye(lcc_size, dtype=bool)]
            cpl = float(off.mean())
            diameter = int(off.max())

    return GraphStats(triangle_count=triangles, wedge_count=wedges,
                      claw_count=claws, rede=rede, cpl=cpl, diameter=diameter,
                      lcc_size=lcc_size, degree_sequence=np.sort(deg))


def mre(true_value: float, estimates) -> float:
    """Mean absolute relative error of the estimates against the true value."""
    estimates = np.asarray(estimates, dtype=np.float64)
    if estimates.size == 0:
        raise ValueError("need at least one estimate")
    if true_value == 0:
        raise ValueError("relative error is undefined for a zero true value")
    return float(np.mean(np.abs((estimates - true_value) / true_value)))


def degree_ks(g1: Graph, g2: Graph) -> float:
    """Kolmogorov-Smirnov distance between the two degree distributions:
    max_d |F(d) - F'(d)| over the union of observed degree values."""
    d1 = np.sort(undirected_degrees(g1))
    d2 = np.sort(undirected_degrees(g2))
    values = np.union1d(d1, d2)
    f1 = np.searchsorted(d1, values, side="right") / len(d1)
    f2 = np.searchsorted(d2, values, side="right") / len(d2)
    return float(np.abs(f1 - f2).max())


def _auc_from_scores(pos_scores, neg_scores) -> float:
    """Rank-based AUC (Mann-Whitney) with average ranks on ties."""
    scores = np.concatenate([pos_scores, neg_scores])
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores))
    ranks[order] = np.arange(1, len(scores) + 1)
    # average the ranks within tied groups
    sorted_scores = scores[order]
    start = 0
    for stop in range(1, len(scores) + 1):
        if stop == len(scores) or sorted_scores[stop] != sorted_scores[start]:
            ranks[order[start:stop]] = 0.5 * (start + 1 + stop)
            start = stop
    n_pos, n_neg = len(pos_scores), len(neg_scores)
    rank_sum = ranks[:n_pos].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def _sample_non_edges(g: Graph, count: int, rng: np.random.Generator):
    existing = {(min(u, v), max(u, v)) for u, v in g.edges}
    n = g.num_nodes
    out = []
    attempts = 0
    while len(out) < count:
        attempts += 1
        if attempts > 1000 * count + 1000:
            raise RuntimeError("could not find enough non-edges to sample")
        u = int(rng.integers(n))
        v = int(rng.integers(n))
        if u == v:
            continue
        e = (min(u, v), max(u, v))
        if e in existing:
            continue
        existing.add(e)
        out.append(e)
    return np.asarray(out, dtype=np.int64)


def link_prediction_auc(g: Graph, embeddings: np.ndarray,
                        split_ratio: float = 0.8,
                        rng: np.random.Generator | None = None,
                        scorer: str = "embedding",
                        synthetic: Graph | None = None) -> float:
    """AUC of distinguishing held-out edges from sampled non-edges.

    A (1 - split_ratio) fraction of the undirected edges becomes the positive
    test set, matched by an equal number of uniformly sampled non-edges. The
    default scorer is the sigmoid of the embedding inner product; the
    ``common_neighbors`` scorer instead counts shared neighbors in a supplied
    synthetic graph, as a structure-only alternative.
    """
    if rng is None:
        rng = np.random.default_rng()
    und = undirected_edges(g)
    n_test = int(round((1.0 - split_ratio) * len(und)))
    if n_test < 1 or len(und) - n_test < 1:
        raise ValueError(f"graph with {len(und)} undirected edges is too small "
                         f"to split at ratio {split_ratio}")
    test_idx = rng.choice(len(und), size=n_test, replace=False)
    positives = und[test_idx]
    negatives = _sample_non_edges(g, n_test, rng)

    if scorer == "embedding":
        def score(pairs):
            dots = np.sum(embeddings[pairs[:, 0]] * embeddings[pairs[:, 1]], axis=1)
            return 1.0 / (1.0 + np.exp(-dots))
    elif scorer == "common_neighbors":
        if synthetic is None:
            raise ValueError("common_neighbors scorer needs the synthetic graph")
        adj = _undirected_csr(synthetic)

        def score(pairs):
            return np.asarray([(adj[int(u)].multiply(adj[int(v)])).sum()
                               for u, v in pairs], dtype=np.float64)
    else:
        raise ValueError(f"unknown scorer {scorer!r}")

    return _auc_from_scores(score(positives), score(negatives))


def micro_f1(y_true, y_pred) -> float:
    """Micro-averaged F1 over classes; equals accuracy for single-label data."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    classes = np.union1d(y_true, y_pred)
    tp = fp = fn = 0
    for c in classes:
        tp += int(np.sum((y_pred == c) & (y_true == c)))
        fp += int(np.sum((y_pred == c) & (y_true != c)))
        fn += int(np.sum((y_pred != c) & (y_true == c)))
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def node_classification_f1(embeddings: np.ndarray, labels,
                           train_frac: float = 0.9,
                           rng: np.random.Generator | None = None,
                           epochs: int = 500, lr: float = 0.1,
                           max_retries: int = 20) -> float:
    """Micro-F1 of one-vs-rest logistic regression on the embedding rows.

    Plain full-batch gradient descent, fixed epoch count, no regularization;
    an intercept column is appended to the features. Splits that leave fewer
    than two classes in the training set are redrawn a bounded number of times.
    """
    if rng is None:
        rng = np.random.default_rng()
    labels = np.asarray(labels)
    n = len(labels)
    if embeddings.shape[0] != n:
        raise ValueError("one label per embedding row required")
    n_train = int(round(train_frac * n))
    if n_train < 1 or n - n_train < 1:
        raise ValueError("split leaves an empty train or test set")

    for _ in range(max_retries):
        perm = rng.permutation(n)
        train_idx, test_idx = perm[:n_train], perm[n_train:]
        if len(np.unique(labels[train_idx])) >= 2:
            break
    else:
        raise RuntimeError("could not draw a training split with two classes")

    classes = np.unique(labels[train_idx])
    x = np.hstack([embeddings, np.ones((n, 1))])
    x_train = x[train_idx]
    y_onehot = (labels[train_idx][:, None] == classes[None, :]).astype(np.float64)

    w = np.zeros((x.shape[1], len(classes)))
    for _ in range(epochs):
        p = 1.0 / (1.0 + np.exp(-(x_train @ w)))
        w -= lr * x_train.T @ (p - y_onehot) / len(train_idx)

    pred = classes[np.argmax(x[test_idx] @ w, axis=1)]
    return micro_f1(labels[test_idx], pred)


@dataclass
class EvalReport:
    """Original-vs-synthetic comparison: per-run statistic values, MRE per
    metric, degree KS per run, and optional downstream-task scores."""

    original: dict
    synthetic_runs: list
    mre_per_metric: dict
    ks_per_run: list
    auc: tuple | None = None
    micro_f1_score: tuple | None = None
    warnings: list = None

    def to_dict(self) -> dict:
        payload = {
            "original": self.original,
            "synthetic_runs": self.synthetic_runs,
            "mre": self.mre_per_metric,
            "ks_per_run": self.ks_per_run,
            "ks_mean": float(np.mean(self.ks_per_run)) if self.ks_per_run else None,
            "warnings": self.warnings or [],
        }
        payload["auc"] = (None if self.auc is None
                          else {"mean": self.auc[0], "std": self.auc[1]})
        payload["micro_f1"] = (None if self.micro_f1_score is None
                               else {"mean": self.micro_f1_score[0],
                                     "std": self.micro_f1_score[1]})
        return payload


def build_report(original_stats: GraphStats, synthetic_stats: list,
                 ks_values: list, auc_values=None, f1_values=None) -> EvalReport:
    """Aggregate per-run statistics into MRE-per-metric plus downstream means.

    Metrics undefined on the original graph (zero or null true value) are
    skipped with a warning entry rather than failing the whole report.
    """
    notes = []
    orig = original_stats.as_dict()
    runs = [s.as_dict() for s in synthetic_stats]
    mre_per_metric = {}
    for name in STAT_NAMES:
        true_value = orig[name]
        estimates = [r[name] for r in runs if r[name] is not None]
        if len(estimates) < len(runs):
            notes.append(f"{name}: undefined on {len(runs) - len(estimates)} run(s)")
        if true_value in (None, 0):
            notes.append(f"{name}: undefined on the original graph, MRE skipped")
            mre_per_metric[name] = None
        elif not estimates:
            mre_per_metric[name] = None
        else:
            mre_per_metric[name] = mre(true_value, estimates)

    def mean_std(values):
        if values is None:
            return None
        arr = np.asarray(values, dtype=np.float64)
        return (float(arr.mean()), float(arr.std()))

    return EvalReport(original=orig, synthetic_runs=runs,
                      mre_per_metric=mre_per_metric,
                      ks_per_run=[float(k) for k in ks_values],
                      auc=mean_std(auc_values),
                      micro_f1_score=mean_std(f1_values),
                      warnings=notes)
