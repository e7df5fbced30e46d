import numpy as np
import pytest

import dprank.training as training
from dprank.graph import WalkBatch, from_edges
from dprank.model import adam_step
from dprank.privacy import perturb_gradient
from dprank.training import (ScoreMatrix, TrainConfig, TrainingDivergedError,
                             accumulate_scores, resume_train, train)


def tiny_config(**overrides):
    base = dict(n_epochs=2, batch_nodes=4, r_wn=1, r_wl=4, r=6, d=4,
                s=2.0, s_nabla=5.0, epsilon=3.2, delta=1e-5, master_seed=11)
    base.update(overrides)
    return TrainConfig(**base)


def ring_graph(n):
    return from_edges(n, [(i, (i + 1) % n) for i in range(n)], symmetrize=True)


# ----------------------------------------------------------- end to end

def test_train_deterministic():
    g = ring_graph(20)
    cfg = tiny_config()
    a = train(g, cfg)
    b = train(g, cfg)
    assert np.array_equal(a.theta.v, b.theta.v)
    assert all(np.array_equal(x, y) for x, y in zip(a.theta.w, b.theta.w))
    assert np.array_equal(a.scores.counts, b.scores.counts)


def test_train_runs_exactly_t_iterations():
    g = ring_graph(20)
    cfg = tiny_config()
    events = []
    result = train(g, cfg, trace=events.append)
    t = cfg.iterations(20)
    assert t == 2 * (20 // 4)
    assert len(result.ledger.entries) == t
    assert events.count("v_updated") == t
    result.ledger.verify()


def test_train_drops_leftover_nodes():
    g = ring_graph(10)
    cfg = tiny_config(batch_nodes=3, n_epochs=2)
    result = train(g, cfg)
    # floor(10/3) = 3 iterations per epoch, the tenth node is dropped
    assert len(result.ledger.entries) == 6


def test_train_iteration_event_order():
    g = ring_graph(12)
    cfg = tiny_config(n_epochs=1)
    events = []
    train(g, cfg, trace=events.append)
    per_iter = ["weights_normalized", "gradients_computed", "w_updated",
                "v_grad_perturbed", "v_updated"]
    assert events == per_iter * (12 // 4)


def test_train_depth_comes_from_sensitivity_rule():
    g = ring_graph(20)
    cfg = tiny_config()
    result = train(g, cfg)
    assert result.depth == result.privacy.min_depth
    assert len(result.theta.w) == result.depth + 1
    lhs = (result.privacy.batch_pairs * result.privacy.m_const
           * (1.0 / cfg.s) ** (result.depth + 1))
    assert lhs <= cfg.s_nabla / result.privacy.t


def test_optimizer_only_sees_perturbed_v_gradient(monkeypatch):
    g = ring_graph(12)
    cfg = tiny_config(n_epochs=1)
    perturbed_ids = []
    consumed_ids = []

    def spy_perturb(grad, s_nabla, sigma, batch_size, rng):
        out = perturb_gradient(grad, s_nabla, sigma, batch_size, rng)
        perturbed_ids.append(id(out))
        return out

    def spy_adam(state, params, grads, eta):
        # V updates pass exactly one gradient matrix shaped like V
        if len(grads) == 1 and grads[0].shape == (12, cfg.r):
            consumed_ids.append(id(grads[0]))
        return adam_step(state, params, grads, eta)

    monkeypatch.setattr(training, "perturb_gradient", spy_perturb)
    monkeypatch.setattr(training, "adam_step", spy_adam)
    train(g, cfg)
    assert consumed_ids == perturbed_ids


def test_train_aborts_on_nonfinite(monkeypatch):
    g = ring_graph(12)
    cfg = tiny_config(n_epochs=1)

    def bad_loss(theta, batch, graph, gamma):
        gv = np.zeros_like(theta.v)
        gw = [np.zeros_like(w) for w in theta.w]
        return float("nan"), gv, gw

    monkeypatch.setattr(training, "_loss_and_gradients", bad_loss)
    with pytest.raises(TrainingDivergedError) as err:
        train(g, cfg)
    assert err.value.epoch == 0 and err.value.iteration == 0


def test_train_rejects_oversized_batch():
    g = ring_graph(6)
    with pytest.raises(ValueError):
        train(g, tiny_config(batch_nodes=7))


def test_score_matrix_stays_clean():
    g = ring_graph(16)
    result = train(g, tiny_config())
    counts = result.scores.counts
    assert (counts >= 0).all()
    assert not np.diag(counts).any()
    assert counts.sum() > 0


def test_train_handles_dangling_nodes():
    # every edge points at node 0, so most walks stop after one hop and
    # batches starting at node 0 are empty; the loop must still run all T
    # iterations on pure-noise updates
    g = from_edges(12, [(i, 0) for i in range(1, 12)])
    cfg = tiny_config(n_epochs=2, batch_nodes=6)
    result = train(g, cfg)
    assert len(result.ledger.entries) == cfg.iterations(12)
    assert np.isfinite(result.theta.v).all()
    assert result.scores.counts.sum() > 0


# ------------------------------------------------------ score accumulation

def batch_with_starts(starts):
    return WalkBatch(pairs=np.empty((0, 2), dtype=np.int64), batch_size=0,
                     starts=np.asarray(starts, dtype=np.int64))


def test_accumulate_two_nodes_off_diagonal(rng):
    v = rng.standard_normal((2, 3))
    scores = ScoreMatrix.zeros(2)
    accumulate_scores(v, batch_with_starts([0, 1]), scores, rng, walk_length=6)
    assert not np.diag(scores.counts).any()
    assert scores.counts.sum() == 2 * 5  # two walks, five transitions each


def test_accumulate_zero_embeddings_uniform(rng):
    # softmax of zeros is uniform over the two non-masked targets
    v = np.zeros((3, 4))
    scores = ScoreMatrix.zeros(3)
    trials = 4000
    for _ in range(trials):
        accumulate_scores(v, batch_with_starts([0]), scores, rng, walk_length=2)
    counts = scores.counts[0]
    assert counts.sum() == trials
    # 3-sigma binomial band around p = 1/2
    sigma = np.sqrt(trials * 0.25)
    assert abs(counts[1] - trials / 2) < 3 * sigma
    assert abs(counts[2] - trials / 2) < 3 * sigma


def test_accumulate_dominant_pair_chisquare(rng):
    # one strong inner product: sampled frequencies must match the softmax
    v = np.array([[2.0, 0.0], [1.2, 0.0], [0.0, 0.4], [-0.5, 0.3]])
    logits = v @ v[0]
    logits[0] = -np.inf
    probs = np.exp(logits - logits.max())
    probs /= probs.sum()
    scores = ScoreMatrix.zeros(4)
    trials = 10_000
    for _ in range(trials):
        accumulate_scores(v, batch_with_starts([0]), scores, rng, walk_length=2)
    observed = scores.counts[0]
    expected = probs * trials
    chi2 = np.sum((observed[1:] - expected[1:]) ** 2 / expected[1:])
    # chi-square with 2 dof, 1% critical value
    assert chi2 < 9.21
    assert observed.argmax() == 1


def test_accumulate_temperature_sharpens(rng):
    v = np.array([[1.5, 0.0], [1.0, 0.0], [-1.0, 0.0]])
    sharp = ScoreMatrix.zeros(3)
    flat = ScoreMatrix.zeros(3)
    for _ in range(2000):
        accumulate_scores(v, batch_with_starts([0]), sharp, rng,
                          walk_length=2, temperature=0.25)
        accumulate_scores(v, batch_with_starts([0]), flat, rng,
                          walk_length=2, temperature=4.0)
    assert sharp.counts[0, 1] > flat.counts[0, 1]


# ------------------------------------------------------------ checkpoints

def test_checkpoint_resume_matches_uninterrupted(tmp_path):
    g = ring_graph(20)
    cfg = tiny_config(n_epochs=3)
    full = train(g, cfg, run_dir=tmp_path / "full")

    partial_dir = tmp_path / "partial"
    train(g, cfg, run_dir=partial_dir)
    # drop the later checkpoints, keeping only epoch 1, then resume
    for ckpt in sorted(partial_dir.glob("checkpoint_epoch*.npz"))[1:]:
        ckpt.unlink()
    resumed = resume_train(g, cfg, partial_dir)

    assert np.array_equal(resumed.theta.v, full.theta.v)
    assert all(np.array_equal(a, b)
               for a, b in zip(resumed.theta.w, full.theta.w))
    assert np.array_equal(resumed.scores.counts, full.scores.counts)
    assert resumed.ledger.entries == full.ledger.entries


def test_resume_rejects_config_mismatch(tmp_path):
    g = ring_graph(20)
    cfg = tiny_config(n_epochs=2)
    train(g, cfg, run_dir=tmp_path)
    other = tiny_config(n_epochs=2, eta=0.5)
    with pytest.raises(ValueError):
        resume_train(g, other, tmp_path)


def test_resume_without_checkpoints(tmp_path):
    g = ring_graph(20)
    with pytest.raises(FileNotFoundError):
        resume_train(g, tiny_config(), tmp_path / "empty")


# ---------------------------------------------------------------- config

def test_config_validation():
    with pytest.raises(ValueError):
        tiny_config(gamma=1.0).validate()
    with pytest.raises(ValueError):
        tiny_config(r_wl=1).validate()
    with pytest.raises(ValueError):
        tiny_config(s=1.0).validate()
    with pytest.raises(ValueError):
        tiny_config(epsilon=0.0).validate()
    tiny_config().validate()


def test_config_iteration_arithmetic():
    cfg = TrainConfig()
    assert cfg.iterations(2708) == 845
    assert cfg.nominal_batch_pairs() == 16 * 2 * 15
