"""Independent brute-force oracles used to check the package implementations.

Everything here is deliberately written from scratch against the definitions
(dense linear algebra, triple enumeration, pure-python BFS) and stays
independent of the code paths under test.
"""

import itertools
from collections import deque

import numpy as np


def pagerank_dense(num_nodes, edges, gamma, iters=200):
    """Dense power iteration on the explicit Google-style matrix with uniform
    redistribution of dangling mass."""
    n = num_nodes
    p = np.zeros((n, n))
    out_deg = np.zeros(n)
    for u, _ in edges:
        out_deg[u] += 1
    for u, v in edges:
        p[v, u] += 1.0 / out_deg[u]
    for u in range(n):
        if out_deg[u] == 0:
            p[:, u] = 1.0 / n
    pr = np.full(n, 1.0 / n)
    for _ in range(iters):
        pr = gamma * (p @ pr) + (1.0 - gamma) / n
    return pr


def undirected_simplify(edges):
    """Directed edge list to a set of unordered pairs, self-loops dropped."""
    return {(min(u, v), max(u, v)) for u, v in edges if u != v}


def brute_degrees(num_nodes, und_edges):
    deg = [0] * num_nodes
    for u, v in und_edges:
        deg[u] += 1
        deg[v] += 1
    return deg


def brute_triangles(num_nodes, und_edges):
    es = set(und_edges)
    count = 0
    for a, b, c in itertools.combinations(range(num_nodes), 3):
        if (a, b) in es and (a, c) in es and (b, c) in es:
            count += 1
    return count


def brute_wedges(num_nodes, und_edges):
    """Paths of length two, counted as center-choose-2."""
    deg = brute_degrees(num_nodes, und_edges)
    return sum(d * (d - 1) // 2 for d in deg)


def brute_claws(num_nodes, und_edges):
    deg = brute_degrees(num_nodes, und_edges)
    return sum(d * (d - 1) * (d - 2) // 6 for d in deg)


def brute_rede(num_nodes, und_edges):
    deg = brute_degrees(num_nodes, und_edges)
    m = len(und_edges)
    if m == 0 or num_nodes < 2:
        return None
    total = 0.0
    for d in deg:
        if d > 0:
            frac = d / (2.0 * m)
            total -= frac * np.log(frac)
    return total / np.log(num_nodes)


def _bfs_dists(adj, source, num_nodes):
    dist = [-1] * num_nodes
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if dist[w] < 0:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def brute_components(num_nodes, und_edges):
    adj = [[] for _ in range(num_nodes)]
    for u, v in und_edges:
        adj[u].append(v)
        adj[v].append(u)
    seen = [False] * num_nodes
    comps = []
    for start in range(num_nodes):
        if seen[start]:
            continue
        comp = []
        queue = deque([start])
        seen[start] = True
        while queue:
            u = queue.popleft()
            comp.append(u)
            for w in adj[u]:
                if not seen[w]:
                    seen[w] = True
                    queue.append(w)
        comps.append(comp)
    return comps, adj


def brute_path_stats(num_nodes, und_edges):
    """(cpl, diameter, lcc_size) with paths restricted to the largest
    component; cpl/diameter are None when the LCC is a single node."""
    comps, adj = brute_components(num_nodes, und_edges)
    lcc = max(comps, key=len)
    if len(lcc) < 2:
        return None, None, len(lcc)
    dists = []
    for s in lcc:
        d = _bfs_dists(adj, s, num_nodes)
        dists.extend(d[t] for t in lcc if t != s)
    return float(np.mean(dists)), int(max(dists)), len(lcc)


def brute_ks(seq1, seq2):
    """KS distance from explicit CDF tables over the union of values."""
    s1, s2 = sorted(seq1), sorted(seq2)
    values = sorted(set(s1) | set(s2))
    best = 0.0
    for v in values:
        f1 = sum(1 for x in s1 if x <= v) / len(s1)
        f2 = sum(1 for x in s2 if x <= v) / len(s2)
        best = max(best, abs(f1 - f2))
    return best


def edge_loss_reference(fi, fj, d_out_i, d_in_j, gamma, n):
    """Second, independent transcription of the per-edge objective."""
    diff = fi / d_out_i - fj / (d_in_j * gamma)
    first = d_in_j * gamma**2 * diff**2
    second = diff * 2.0 * gamma * (1.0 - gamma) / n
    third = (1.0 - gamma) ** 2 / (d_in_j * n**2)
    return first + second + third


def auc_pairwise(pos_scores, neg_scores):
    """Quadratic-time AUC: P(pos > neg) + 0.5 P(tie)."""
    wins = 0.0
    for p in pos_scores:
        for q in neg_scores:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(pos_scores) * len(neg_scores))


def micro_f1_confusion(y_true, y_pred):
    """Micro-F1 from explicitly accumulated per-class confusion counts."""
    classes = sorted(set(y_true) | set(y_pred))
    tp = {c: 0 for c in classes}
    fp = {c: 0 for c in classes}
    fn = {c: 0 for c in classes}
    for t, p in zip(y_true, y_pred):
        if t == p:
            tp[t] += 1
        else:
            fp[p] += 1
            fn[t] += 1
    tp_sum = sum(tp.values())
    fp_sum = sum(fp.values())
    fn_sum = sum(fn.values())
    if tp_sum == 0:
        return 0.0
    prec = tp_sum / (tp_sum + fp_sum)
    rec = tp_sum / (tp_sum + fn_sum)
    return 2 * prec * rec / (prec + rec)


def walk_pair_budget(num_starts, r_wn, r_wl):
    """Independent count of the maximum node pairs a walk batch can emit."""
    total = 0
    for _ in range(num_starts):
        for _ in range(r_wn):
            total += r_wl - 1
    return total
