"""End-to-end training loop: per-iteration walk batches, weight
normalization, non-private weight updates, private embedding updates, and
transition-score accumulation.

The iteration count T = n_epochs * floor(N / batch_nodes) is fixed before the
loop starts and the loop body runs exactly T times; the budget ledger is the
runtime witness. The score matrix counts only synthetic walks sampled from
the (privately trained) embedding inner products, never the data walks:
counting real walks would route raw graph information around the noise.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .graph import Graph, WalkBatch, generate_walk_batch
from .model import (AdamState, Theta, WeightNormalizer, _loss_and_gradients,
                    adam_step, init_params)
from .privacy import PrivacyLedger, PrivacySpec, perturb_gradient

CHECKPOINT_VERSION = 1


class TrainingDivergedError(RuntimeError):
    """Loss or gradients became non-finite; carries where it happened."""

    def __init__(self, epoch, iteration, loss):
        super().__init__(
            f"non-finite loss/gradient at epoch {epoch}, iteration {iteration} "
            f"(loss={loss})")
        self.epoch = epoch
        self.iteration = iteration
        self.loss = loss


@dataclass
class TrainConfig:
    """Hyperparameters; the defaults are the reference experimental settings."""

    gamma: float = 0.85
    n_epochs: int = 5
    batch_nodes: int = 16         # walk starts per iteration
    r_wn: int = 2                 # walks per start node
    r_wl: int = 16                # nodes per walk
    r: int = 128                  # embedding dimension
    d: int = 64                   # hidden width
    s: float = 8.0                # weight-normalization scale
    s_nabla: float = 5.0          # preset sensitivity
    eta: float = 1e-3
    epsilon: float = 3.2
    delta: float = 1e-5
    master_seed: int = 0
    shuffle_nodes: bool = True
    init_scale: float = 0.1
    score_temperature: float = 1.0
    activation: str = "sigmoid"

    def validate(self):
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if min(self.n_epochs, self.batch_nodes, self.r_wn, self.r, self.d) < 1:
            raise ValueError("counts and dimensions must be >= 1")
        if self.r_wl < 2:
            raise ValueError("walk length must be >= 2")
        if self.s <= 1:
            raise ValueError("normalization scale must exceed 1")
        if self.s_nabla <= 0 or self.eta <= 0 or self.score_temperature <= 0:
            raise ValueError("s_nabla, eta, and temperature must be positive")
        if self.epsilon <= 0 or not 0 < self.delta < 1:
            raise ValueError("invalid privacy budget")

    def iterations(self, num_nodes: int) -> int:
        return self.n_epochs * (num_nodes // self.batch_nodes)

    def nominal_batch_pairs(self) -> int:
        return self.batch_nodes * self.r_wn * (self.r_wl - 1)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ScoreMatrix:
    """N x N nonnegative accumulator of synthetic-walk transition counts.
    The diagonal stays zero (the synthesis target is a simple graph)."""

    counts: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "ScoreMatrix":
        return cls(counts=np.zeros((n, n)))


def accumulate_scores(v: np.ndarray, batch: WalkBatch, scores: ScoreMatrix,
                      rng: np.random.Generator, walk_length: int,
                      temperature: float = 1.0) -> ScoreMatrix:
    """Count transitions of synthetic walks driven by embedding similarity.

    One walk per start node of the batch, ``walk_length`` nodes long. From
    node u the step distribution is the softmax of row u of V V^T (diagonal
    masked out), computed on demand so the N x N product is never
    materialized. Every sampled transition (u, w) increments the score entry.
    Walkers advance in lockstep so the inner products batch into one matmul
    per step.
    """
    n = v.shape[0]
    if scores.counts.shape != (n, n):
        raise ValueError("score matrix shape does not match the embeddings")
    if n < 2 or walk_length < 2:
        return scores
    current = np.array(batch.starts, dtype=np.int64)
    for _ in range(walk_length - 1):
        logits = (v[current] @ v.T) / temperature
        logits[np.arange(len(current)), current] = -np.inf
        logits -= logits.max(axis=1, keepdims=True)
        probs = np.exp(logits)
        cdf = np.cumsum(probs, axis=1)
        u = rng.random(len(current)) * cdf[:, -1]
        nxt = (cdf < u[:, None]).sum(axis=1)
        np.add.at(scores.counts, (current, nxt), 1.0)
        current = nxt
    return scores


@dataclass
class TrainResult:
    theta: Theta
    scores: ScoreMatrix
    ledger: PrivacyLedger
    privacy: PrivacySpec
    depth: int


@dataclass
class _LoopState:
    theta: Theta
    scores: ScoreMatrix
    ledger: PrivacyLedger
    adam_w: AdamState
    adam_v: AdamState
    normalizer: WeightNormalizer
    rng_walk: np.random.Generator
    rng_noise: np.random.Generator
    rng_score: np.random.Generator
    rng_shuffle: np.random.Generator
    epochs_done: int = 0


def _purpose_rngs(master_seed: int):
    init, walk, noise, score, shuffle = np.random.SeedSequence(master_seed).spawn(5)
    return (np.random.default_rng(init), np.random.default_rng(walk),
            np.random.default_rng(noise), np.random.default_rng(score),
            np.random.default_rng(shuffle))


def train(g: Graph, cfg: TrainConfig, run_dir=None, trace=None) -> TrainResult:
    """Run the full private training loop on ``g``.

    Per inner iteration: build the node list, generate the walk batch,
    normalize every weight to spectral norm 1/s, Adam-update the weights on
    the exact batch gradients, perturb the summed embedding gradient with
    calibrated Gaussian noise and Adam-update the embeddings, record the
    budget split, and accumulate synthetic-walk transitions.

    ``run_dir`` enables an end-of-epoch checkpoint from which
    :func:`resume_train` can continue. ``trace`` is an optional callable
    receiving event names, used by audits of the iteration order.
    """
    cfg.validate()
    n = g.num_nodes
    per_epoch = n // cfg.batch_nodes
    if per_epoch < 1:
        raise ValueError(f"batch_nodes={cfg.batch_nodes} exceeds the node count {n}")
    t_total = cfg.iterations(n)
    pspec = PrivacySpec.derive(
        epsilon=cfg.epsilon, delta=cfg.delta, s=cfg.s, s_nabla=cfg.s_nabla,
        t=t_total, num_nodes=n, gamma=cfg.gamma,
        batch_pairs=cfg.nominal_batch_pairs())

    rng_init, rng_walk, rng_noise, rng_score, rng_shuffle = _purpose_rngs(cfg.master_seed)
    theta = init_params(n, cfg.r, cfg.d, pspec.min_depth, cfg.init_scale,
                        rng_init, activation=cfg.activation)
    state = _LoopState(
        theta=theta,
        scores=ScoreMatrix.zeros(n),
        ledger=PrivacyLedger(cfg.epsilon, cfg.delta, t_total),
        adam_w=AdamState.for_params(theta.w),
        adam_v=AdamState.for_params([theta.v]),
        normalizer=WeightNormalizer(cfg.s),
        rng_walk=rng_walk, rng_noise=rng_noise, rng_score=rng_score,
        rng_shuffle=rng_shuffle)
    return _run_epochs(g, cfg, state, pspec, run_dir, trace)


def _run_epochs(g, cfg, state, pspec, run_dir, trace) -> TrainResult:
    def emit(event):
        if trace is not None:
            trace(event)

    n = g.num_nodes
    per_epoch = n // cfg.batch_nodes
    eps_t = cfg.epsilon / pspec.t
    delta_t = cfg.delta / pspec.t
    b_nominal = cfg.nominal_batch_pairs()

    for epoch in range(state.epochs_done, cfg.n_epochs):
        order = (state.rng_shuffle.permutation(n) if cfg.shuffle_nodes
                 else np.arange(n))
        for it in range(per_epoch):
            starts = order[it * cfg.batch_nodes:(it + 1) * cfg.batch_nodes]
            batch = generate_walk_batch(g, starts, cfg.r_wn, cfg.r_wl,
                                        state.rng_walk)
            state.normalizer.normalize_(state.theta)
            emit("weights_normalized")
            loss, grad_v_sum, grad_w = _loss_and_gradients(
                state.theta, batch, g, cfg.gamma)
            emit("gradients_computed")
            if not (np.isfinite(loss)
                    and np.isfinite(grad_v_sum).all()
                    and all(np.isfinite(gw).all() for gw in grad_w)):
                raise TrainingDivergedError(epoch, it, loss)

            state.theta.w = adam_step(state.adam_w, state.theta.w,
                                      [gw / b_nominal for gw in grad_w], cfg.eta)
            emit("w_updated")
            noisy_grad_v = perturb_gradient(grad_v_sum, cfg.s_nabla, pspec.sigma,
                                            b_nominal, state.rng_noise)
            emit("v_grad_perturbed")
            # only the perturbed gradient ever reaches the embedding optimizer
            (state.theta.v,) = adam_step(state.adam_v, [state.theta.v],
                                         [noisy_grad_v], cfg.eta)
            emit("v_updated")
            state.ledger.record(eps_t, delta_t)
            accumulate_scores(state.theta.v, batch, state.scores,
                              state.rng_score, walk_length=cfg.r_wl,
                              temperature=cfg.score_temperature)
        state.epochs_done = epoch + 1
        if run_dir is not None:
            save_checkpoint(Path(run_dir), cfg, state, pspec)

    state.ledger.verify()
    return TrainResult(theta=state.theta, scores=state.scores,
                       ledger=state.ledger, privacy=pspec,
                       depth=pspec.min_depth)


def _rng_state(gen: np.random.Generator) -> str:
    return json.dumps(gen.bit_generator.state)


def _restore_rng(payload: str) -> np.random.Generator:
    gen = np.random.default_rng()
    gen.bit_generator.state = json.loads(payload)
    return gen


def save_checkpoint(run_dir: Path, cfg: TrainConfig, state: _LoopState,
                    pspec: PrivacySpec) -> Path:
    run_dir.mkdir(parents=True, exist_ok=True)
    path = run_dir / f"checkpoint_epoch{state.epochs_done}.npz"
    meta = {
        "version": CHECKPOINT_VERSION,
        "epochs_done": state.epochs_done,
        "config": cfg.to_dict(),
        "privacy": pspec.to_dict(),
        "ledger": state.ledger.to_dict(),
        "adam_step_w": state.adam_w.step,
        "adam_step_v": state.adam_v.step,
        "rng": {name: _rng_state(getattr(state, name))
                for name in ("rng_walk", "rng_noise", "rng_score", "rng_shuffle")},
    }
    arrays = {"v": state.theta.v, "scores": state.scores.counts}
    for k, w in enumerate(state.theta.w):
        arrays[f"w{k}"] = w
    for k, m in enumerate(state.adam_w.m):
        arrays[f"adam_w_m{k}"] = m
        arrays[f"adam_w_v{k}"] = state.adam_w.v[k]
    arrays["adam_v_m0"] = state.adam_v.m[0]
    arrays["adam_v_v0"] = state.adam_v.v[0]
    for name, u in state.normalizer.state_arrays().items():
        arrays[f"norm_{name}"] = u
    np.savez(path, __meta__=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8),
             **arrays)
    return path


def resume_train(g: Graph, cfg: TrainConfig, run_dir, trace=None) -> TrainResult:
    """Continue training from the latest epoch checkpoint in ``run_dir``.

    The restored ledger must be consistent with the completed epoch count
    (one entry per finished iteration, totals on budget), otherwise resuming
    refuses to run.
    """
    cfg.validate()
    run_dir = Path(run_dir)
    ckpts = sorted(run_dir.glob("checkpoint_epoch*.npz"),
                   key=lambda p: int(p.stem.rsplit("epoch", 1)[1]))
    if not ckpts:
        raise FileNotFoundError(f"no checkpoints under {run_dir}")
    path = ckpts[-1]

    with np.load(path) as data:
        meta = json.loads(bytes(data["__meta__"]).decode())
        if meta["version"] != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta['version']}")
        if meta["config"] != cfg.to_dict():
            raise ValueError("checkpoint was produced under a different config")
        n = g.num_nodes
        t_total = cfg.iterations(n)
        pspec = PrivacySpec(**meta["privacy"])
        ledger = PrivacyLedger.from_dict(meta["ledger"])
        per_epoch = n // cfg.batch_nodes
        expected = meta["epochs_done"] * per_epoch
        if len(ledger.entries) != expected:
            raise ValueError(
                f"ledger holds {len(ledger.entries)} entries but "
                f"{meta['epochs_done']} finished epochs imply {expected}")
        eps_spent, delta_spent = ledger.spent()
        if eps_spent > cfg.epsilon * (1 + 1e-12):
            raise ValueError("checkpoint ledger already exceeds the budget")

        n_w = 2 + (pspec.min_depth - 1)
        theta = Theta(v=data["v"].copy(),
                      w=[data[f"w{k}"].copy() for k in range(n_w)],
                      activation=cfg.activation)
        adam_w = AdamState(m=[data[f"adam_w_m{k}"].copy() for k in range(n_w)],
                           v=[data[f"adam_w_v{k}"].copy() for k in range(n_w)],
                           step=meta["adam_step_w"])
        adam_v = AdamState(m=[data["adam_v_m0"].copy()],
                           v=[data["adam_v_v0"].copy()],
                           step=meta["adam_step_v"])
        normalizer = WeightNormalizer(cfg.s)
        normalizer.load_state_arrays(
            {k[len("norm_"):]: data[k] for k in data.files if k.startswith("norm_")})
        state = _LoopState(
            theta=theta,
            scores=ScoreMatrix(counts=data["scores"].copy()),
            ledger=ledger, adam_w=adam_w, adam_v=adam_v, normalizer=normalizer,
            rng_walk=_restore_rng(meta["rng"]["rng_walk"]),
            rng_noise=_restore_rng(meta["rng"]["rng_noise"]),
            rng_score=_restore_rng(meta["rng"]["rng_score"]),
            rng_shuffle=_restore_rng(meta["rng"]["rng_shuffle"]),
            epochs_done=meta["epochs_done"])
    return _run_epochs(g, cfg, state, pspec, run_dir, trace)
