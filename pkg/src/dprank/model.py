"""Deep PageRank network: parameters, spectral-norm weight normalization,
forward evaluation, per-edge loss, full objective, analytic gradients, Adam."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .graph import Graph, WalkBatch

THETA_FORMAT_VERSION = 1


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _sigmoid_grad(x):
    s = _sigmoid(x)
    return s * (1.0 - s)


# Activation tags map to (function, derivative-of-preactivation). Sigmoid is
# the contract default; the output layer must stay bounded below 1 for the
# gradient-norm analysis to apply.
ACTIVATIONS = {
    "sigmoid": (_sigmoid, _sigmoid_grad),
}


@dataclass
class Theta:
    """Learnable parameters: embeddings V (N x r) and weights W_1..W_{L+1}.

    Weight shapes are r x d, then L-1 square d x d blocks, then d x 1.
    """

    v: np.ndarray
    w: list
    activation: str = "sigmoid"

    @property
    def num_hidden_layers(self) -> int:
        return len(self.w) - 1

    @property
    def embed_dim(self) -> int:
        return self.v.shape[1]

    def copy(self) -> "Theta":
        return Theta(self.v.copy(), [w.copy() for w in self.w], self.activation)

    def validate_shapes(self):
        n, r = self.v.shape
        d = self.w[0].shape[1]
        expected = [(r, d)] + [(d, d)] * (len(self.w) - 2) + [(d, 1)]
        got = [w.shape for w in self.w]
        if got != expected:
            raise ValueError(f"weight shapes {got} do not match {expected}")


def init_params(n: int, r: int, d: int, num_layers: int, scale: float,
                rng: np.random.Generator, activation: str = "sigmoid") -> Theta:
    """Draw all parameters i.i.d. uniform on [-scale, scale]."""
    if min(n, r, d, num_layers) < 1:
        raise ValueError("all dimensions must be >= 1")
    if activation not in ACTIVATIONS:
        raise ValueError(f"unknown activation {activation!r}")
    shapes = [(r, d)] + [(d, d)] * (num_layers - 1) + [(d, 1)]
    v = rng.uniform(-scale, scale, size=(n, r))
    w = [rng.uniform(-scale, scale, size=s) for s in shapes]
    return Theta(v=v, w=w, activation=activation)


def _power_iteration(w, u0=None, iters: int = 50, tol: float = 1e-9,
                     rng: np.random.Generator | None = None):
    """Largest singular value of ``w`` with the matching left vector.

    Returns (sigma, u).  ``u0`` warm-starts the iteration, which converges in
    a step or two when ``w`` changed only slightly since the last call.
    """
    w = np.asarray(w, dtype=np.float64)
    if not np.any(w):
        return 0.0, None
    m = w.shape[0]
    gen = rng if rng is not None else np.random.default_rng(0)
    if u0 is not None and u0.shape == (m,):
        u = u0
    else:
        u = gen.standard_normal(m)
    u = u / np.linalg.norm(u)
    sigma = 0.0
    for _ in range(iters):
        v = w.T @ u
        nv = np.linalg.norm(v)
        if nv == 0.0:
            # u landed in the left null space; restart off a fresh draw
            u = gen.standard_normal(m)
            u /= np.linalg.norm(u)
            continue
        v /= nv
        u_new = w @ v
        sigma_new = np.linalg.norm(u_new)
        u = u_new / sigma_new
        if abs(sigma_new - sigma) <= tol * max(sigma_new, 1e-300):
            sigma = sigma_new
            break
        sigma = sigma_new
    return float(sigma), u


def spectral_norm(w, iters: int = 50, tol: float = 1e-9,
                  rng: np.random.Generator | None = None) -> float:
    """Largest singular value via power iteration; 0 for an all-zero matrix."""
    sigma, _ = _power_iteration(w, iters=iters, tol=tol, rng=rng)
    return sigma


def weight_normalize(w, s: float, iters: int = 50, tol: float = 1e-9,
                     rng: np.random.Generator | None = None) -> np.ndarray:
    """Rescale ``w`` to W / (s * ||W||_2), i.e. spectral norm exactly 1/s."""
    if s <= 1.0:
        raise ValueError("normalization scale s must exceed 1")
    sigma = spectral_norm(w, iters=iters, tol=tol, rng=rng)
    if sigma == 0.0:
        raise ValueError("cannot normalize an all-zero weight matrix")
    return np.asarray(w, dtype=np.float64) / (s * sigma)


class WeightNormalizer:
    """Applies spectral-norm normalization to every layer of a Theta in place,
    keeping per-layer left vectors so successive calls warm-start."""

    def __init__(self, s: float, iters: int = 50, tol: float = 1e-9, seed: int = 0):
        if s <= 1.0:
            raise ValueError("normalization scale s must exceed 1")
        self.s = s
        self.iters = iters
        self.tol = tol
        self._rng = np.random.default_rng(seed)
        self._u = {}

    def normalize_(self, theta: Theta) -> Theta:
        for idx, w in enumerate(theta.w):
            sigma, u = _power_iteration(w, self._u.get(idx), self.iters,
                                        self.tol, self._rng)
            if sigma == 0.0:
                raise ValueError(f"layer {idx} weight is all zero")
            self._u[idx] = u
            theta.w[idx] = w / (self.s * sigma)
        return theta

    def state_arrays(self):
        return {f"u{idx}": u for idx, u in self._u.items() if u is not None}

    def load_state_arrays(self, arrays):
        self._u = {int(k[1:]): np.asarray(v) for k, v in arrays.items()}


def _forward_cached(theta: Theta, nodes):
    """Forward pass for a batch of node indices, keeping pre-activations."""
    act, _ = ACTIVATIONS[theta.activation]
    a = theta.v[nodes]
    pre, post = [], [a]
    for w in theta.w:
        z = a @ w
        a = act(z)
        pre.append(z)
        post.append(a)
    return a[:, 0], pre, post


def forward(theta: Theta, node: int) -> float:
    """Evaluate f(v_node; Theta). Sigmoid output lies strictly in (0, 1)."""
    n = theta.v.shape[0]
    if not 0 <= node < n:
        raise IndexError(f"node {node} out of range for N={n}")
    out, _, _ = _forward_cached(theta, np.asarray([node]))
    return float(out[0])


def forward_many(theta: Theta, nodes) -> np.ndarray:
    nodes = np.asarray(nodes, dtype=np.int64)
    out, _, _ = _forward_cached(theta, nodes)
    return out


def edge_loss(theta: Theta, i: int, j: int, g: Graph, gamma: float) -> float:
    """Per-edge objective for edge (i, j).

    With u = f(v_i)/d_i^out - f(v_j)/(d_j^in * gamma), the loss is
    d_j^in * gamma^2 * u^2 + u * 2*gamma*(1-gamma)/N + (1-gamma)^2/(d_j^in * N^2).
    """
    if not g.has_edge(i, j):
        raise ValueError(f"({i}, {j}) is not an edge; edge_loss is defined on edges only")
    n = g.num_nodes
    d_out = g.out_degree[i]
    d_in = g.in_degree[j]
    fi = forward(theta, i)
    fj = forward(theta, j)
    u = fi / d_out - fj / (d_in * gamma)
    return float(d_in * gamma**2 * u**2
                 + u * 2.0 * gamma * (1.0 - gamma) / n
                 + (1.0 - gamma)**2 / (d_in * n**2))


def full_objective(theta: Theta, g: Graph, gamma: float) -> float:
    """Whole-graph objective: sum_j (gamma * sum_{i in P_j} f_i/d_i^out
    + (1-gamma)/N - f_j)^2 over every node j."""
    n = g.num_nodes
    f = forward_many(theta, np.arange(n))
    src, dst = g.edges[:, 0], g.edges[:, 1]
    incoming = np.bincount(dst, weights=(f / np.maximum(g.out_degree, 1))[src],
                           minlength=n)
    pred = gamma * incoming + (1.0 - gamma) / n
    return float(np.sum((pred - f) ** 2))


def _loss_and_gradients(theta: Theta, batch: WalkBatch, g: Graph, gamma: float):
    """Batch loss plus exact analytic gradients wrt V and every W_l.

    Gradients are taken through the currently stored (already normalized)
    weights. Work is grouped by unique node: the loss touches node u only
    through f(v_u), so a single weighted backward pass per unique node gives
    both the V rows and the summed weight gradients.
    """
    _, dact = ACTIVATIONS[theta.activation]
    n, r = theta.v.shape
    grad_v = np.zeros((n, r))
    grad_w = [np.zeros_like(w) for w in theta.w]
    pairs = batch.pairs
    if len(pairs) == 0:
        return 0.0, grad_v, grad_w

    i_idx, j_idx = pairs[:, 0], pairs[:, 1]
    nodes, inverse = np.unique(pairs.ravel(), return_inverse=True)
    inv_i, inv_j = inverse[0::2], inverse[1::2]

    f, pre, post = _forward_cached(theta, nodes)
    fi, fj = f[inv_i], f[inv_j]

    d_out = g.out_degree[i_idx].astype(np.float64)
    d_in = g.in_degree[j_idx].astype(np.float64)
    u = fi / d_out - fj / (d_in * gamma)
    loss = float(np.sum(d_in * gamma**2 * u**2
                        + u * 2.0 * gamma * (1.0 - gamma) / n
                        + (1.0 - gamma)**2 / (d_in * n**2)))

    # dL/df for each edge endpoint, scattered into a per-unique-node weight
    c = 2.0 * d_in * gamma**2 * u + 2.0 * gamma * (1.0 - gamma) / n
    coef = np.zeros(len(nodes))
    np.add.at(coef, inv_i, c / d_out)
    np.add.at(coef, inv_j, -c / (d_in * gamma))

    # weighted reverse pass shared by all edges
    delta = coef[:, None] * dact(pre[-1])
    for layer in range(len(theta.w) - 1, -1, -1):
        grad_w[layer] = post[layer].T @ delta
        if layer > 0:
            delta = (delta @ theta.w[layer].T) * dact(pre[layer - 1])
    grad_rows = delta @ theta.w[0].T
    grad_v[nodes] = grad_rows
    return loss, grad_v, grad_w


def batch_gradients(theta: Theta, batch: WalkBatch, g: Graph, gamma: float):
    """Exact gradients of the summed per-edge loss over ``batch``.

    Returns (grad_V, [grad_W_1, ..., grad_W_{L+1}]); grad_V is nonzero only on
    rows of nodes appearing in the batch. An empty batch yields zeros.
    """
    _, grad_v, grad_w = _loss_and_gradients(theta, batch, g, gamma)
    return grad_v, grad_w


@dataclass
class AdamState:
    """First/second moment accumulators for a fixed list of parameter tensors."""

    m: list
    v: list
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params, beta1: float = 0.9, beta2: float = 0.999,
                   eps: float = 1e-8) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params],
                   beta1=beta1, beta2=beta2, eps=eps)


def adam_step(state: AdamState, params, grads, eta: float):
    """One bias-corrected Adam update. Mutates ``state``, returns new params."""
    if len(params) != len(state.m) or len(grads) != len(params):
        raise ValueError("parameter/gradient count does not match optimizer state")
    for p, g_arr, m in zip(params, grads, state.m):
        if p.shape != g_arr.shape or p.shape != m.shape:
            raise ValueError(f"shape mismatch: param {p.shape}, grad {g_arr.shape}")
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    out = []
    for k, (p, g_arr) in enumerate(zip(params, grads)):
        state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g_arr
        state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g_arr**2
        m_hat = state.m[k] / bc1
        v_hat = state.v[k] / bc2
        out.append(p - eta * m_hat / (np.sqrt(v_hat) + state.eps))
    return out


def save_theta(theta: Theta, path, extra: dict | None = None) -> None:
    """Versioned checkpoint; float64 arrays round-trip exactly through npz."""
    meta = {
        "format_version": THETA_FORMAT_VERSION,
        "activation": theta.activation,
        "num_hidden_layers": theta.num_hidden_layers,
        "shapes": {"v": list(theta.v.shape),
                   "w": [list(w.shape) for w in theta.w]},
    }
    if extra:
        meta.update(extra)
    arrays = {"v": theta.v}
    arrays.update({f"w{k}": w for k, w in enumerate(theta.w)})
    np.savez(path, __meta__=np.frombuffer(
        json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8), **arrays)


def load_theta(path) -> tuple[Theta, dict]:
    with np.load(path) as data:
        meta = json.loads(bytes(data["__meta__"]).decode())
        if meta.get("format_version") != THETA_FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta.get('format_version')}")
        n_w = len(meta["shapes"]["w"])
        theta = Theta(v=data["v"],
                      w=[data[f"w{k}"] for k in range(n_w)],
                      activation=meta["activation"])
    theta.validate_shapes()
    return theta, meta
