"""Config-driven experiment runner: synthesis runs, evaluation reports, and
privacy-budget sweeps with reproducible, auditable outputs.

Every output directory carries a manifest (config echo, derived seeds, file
hashes, code version) sufficient to reproduce the run bit for bit. Nothing in
the outputs depends on wall-clock time.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .graph import Graph, load_edge_list, write_edge_list, write_id_map
from .metrics import (EvalReport, build_report, compute_stats, degree_ks,
                      link_prediction_auc, node_classification_f1)
from .model import save_theta
from .synthesis import default_target_edges, sample_graph
from .training import TrainConfig, train

MANIFEST_NAME = "manifest.json"
SWEEP_SCHEMA = "sweep/v1"
SWEEP_COLUMNS = ("epsilon", "metric", "run", "value", "original_value",
                 "relative_error")
EVAL_COLUMNS = ("epsilon", "run", "metric", "original", "synthetic")


class ConfigError(ValueError):
    """Invalid experiment configuration; carries every problem found."""

    def __init__(self, problems):
        super().__init__("invalid config:\n  " + "\n  ".join(problems))
        self.problems = list(problems)


@dataclass
class ExperimentConfig:
    dataset: str
    epsilons: list = field(default_factory=lambda: [3.2])
    run_count: int = 5
    master_seed: int = 0
    symmetrize: bool = True
    labels: str | None = None
    target_edges: int | None = None
    downstream: bool = False
    out_dir: str = "runs/experiment"
    threads: int = 1
    train: dict = field(default_factory=dict)

    def validate(self):
        problems = []
        if not Path(self.dataset).exists():
            problems.append(f"dataset path does not exist: {self.dataset}")
        if self.labels is not None and not Path(self.labels).exists():
            problems.append(f"labels path does not exist: {self.labels}")
        if not self.epsilons:
            problems.append("epsilons list must not be empty")
        if any(e <= 0 for e in self.epsilons):
            problems.append("every epsilon must be positive")
        if self.run_count < 1:
            problems.append("run_count must be >= 1")
        if self.threads < 1:
            problems.append("threads must be >= 1")
        if self.target_edges is not None and self.target_edges < 1:
            problems.append("target_edges override must be positive")
        known = {f.name for f in dataclasses.fields(TrainConfig)}
        unknown = set(self.train) - known
        if unknown:
            problems.append(f"unknown train config keys: {sorted(unknown)}")
        try:
            self.train_config(0).validate()
        except (ValueError, TypeError) as exc:
            problems.append(f"train config rejected: {exc}")
        if problems:
            raise ConfigError(problems)

    def train_config(self, seed: int, epsilon: float | None = None) -> TrainConfig:
        overrides = dict(self.train)
        overrides["master_seed"] = seed
        if epsilon is not None:
            overrides["epsilon"] = epsilon
        return TrainConfig(**overrides)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            payload = json.load(fh)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ConfigError([f"unknown config keys: {sorted(unknown)}"])
        return cls(**payload)


def derive_seed(master_seed: int, run_index: int, purpose: str) -> int:
    """Stable per-run seed from (master, run index, purpose)."""
    digest = hashlib.sha256(
        f"{master_seed}:{run_index}:{purpose}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _json_dump(payload, path: Path):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_dataset(cfg: ExperimentConfig) -> Graph:
    fmt = "csv" if str(cfg.dataset).endswith(".csv") else "tsv"
    return load_edge_list(cfg.dataset, format=fmt, symmetrize=cfg.symmetrize)


def _eps_tag(epsilon: float) -> str:
    return f"eps_{epsilon:g}"


def synth_one_run(cfg: ExperimentConfig, epsilon: float, run_index: int,
                  flat_index: int, out_dir: Path) -> dict:
    """Train once, synthesize once, persist every artifact for the run."""
    g = load_dataset(cfg)
    train_seed = derive_seed(cfg.master_seed, flat_index, "train")
    synth_seed = derive_seed(cfg.master_seed, flat_index, "synthesis")
    tcfg = cfg.train_config(train_seed, epsilon=epsilon)

    run_dir = out_dir / _eps_tag(epsilon) / f"run_{run_index}"
    ckpt_dir = run_dir / "checkpoints"
    ckpt_dir.mkdir(parents=True, exist_ok=True)

    result = train(g, tcfg, run_dir=ckpt_dir)
    target = cfg.target_edges
    if target is None:
        target = default_target_edges(result.scores)
    synthetic = sample_graph(result.scores, target_edges=target,
                             rng=np.random.default_rng(synth_seed))

    edges_path = run_dir / "synthetic_edges.tsv"
    write_edge_list(synthetic, edges_path)
    np.save(run_dir / "embeddings.npy", result.theta.v)
    save_theta(result.theta, ckpt_dir / "final_theta.npz",
               extra={"train_seed": train_seed})
    _json_dump(result.ledger.to_dict(), run_dir / "ledger.json")
    sidecar = {
        "epsilon": epsilon,
        "run_index": run_index,
        "train_seed": train_seed,
        "synthesis_seed": synth_seed,
        "target_edges": int(target),
        "num_nodes": synthetic.num_nodes,
        "privacy_spec": result.privacy.to_dict(),
        "depth": result.depth,
    }
    _json_dump(sidecar, run_dir / "sidecar.json")
    return {
        "epsilon": epsilon,
        "run": run_index,
        "dir": str(run_dir.relative_to(out_dir)),
        "train_seed": train_seed,
        "synthesis_seed": synth_seed,
        "target_edges": int(target),
        "edges_sha256": _sha256(edges_path),
    }


def _synth_worker(args):
    cfg_dict, epsilon, run_index, flat_index, out_dir = args
    cfg = ExperimentConfig(**cfg_dict)
    return synth_one_run(cfg, epsilon, run_index, flat_index, Path(out_dir))


def run_synth(cfg: ExperimentConfig, out_dir=None) -> Path:
    """Train and synthesize run_count times per epsilon; write the manifest."""
    cfg.validate()
    out_dir = Path(out_dir if out_dir is not None else cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    g = load_dataset(cfg)
    write_id_map(g, out_dir / "id_map.csv")

    jobs = []
    flat = 0
    for epsilon in cfg.epsilons:
        for run_index in range(cfg.run_count):
            jobs.append((cfg.to_dict(), epsilon, run_index, flat, str(out_dir)))
            flat += 1

    if cfg.threads > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            records = list(pool.map(_synth_worker, jobs))
    else:
        records = [_synth_worker(job) for job in jobs]

    records.sort(key=lambda rec: (rec["epsilon"], rec["run"]))
    manifest = {
        "kind": "synthesis",
        "version": __version__,
        "config": cfg.to_dict(),
        "num_nodes": g.num_nodes,
        "num_edges": g.num_edges,
        "runs": records,
    }
    _json_dump(manifest, out_dir / MANIFEST_NAME)
    return out_dir


def load_labels(path, g: Graph) -> np.ndarray:
    """Two-column node-id/class-id CSV, remapped onto dense ids when the graph
    was loaded through an id remap."""
    raw = {}
    with open(path) as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                raw[int(row[0])] = int(row[1])
            except ValueError:
                continue  # header line
    ids = g.original_ids if g.original_ids is not None else np.arange(g.num_nodes)
    labels = np.empty(g.num_nodes, dtype=np.int64)
    missing = 0
    for dense, original in enumerate(ids):
        if int(original) in raw:
            labels[dense] = raw[int(original)]
        else:
            missing += 1
            labels[dense] = -1
    if missing:
        raise ValueError(f"{missing} nodes have no label in {path}")
    return labels


def run_eval(original_path, synthetic_dir, out_dir=None,
             downstream: bool | None = None, labels_path=None) -> EvalReport:
    """Evaluate every synthetic run in ``synthetic_dir`` against the original.

    Reads graphs, sidecars, and embeddings; model checkpoints are never
    touched. Missing runs reduce the aggregate and are reported as warnings
    instead of failing.
    """
    synthetic_dir = Path(synthetic_dir)
    manifest = json.loads((synthetic_dir / MANIFEST_NAME).read_text())
    cfg = ExperimentConfig(**manifest["config"])
    if downstream is None:
        downstream = cfg.downstream
    if labels_path is None:
        labels_path = cfg.labels

    fmt = "csv" if str(original_path).endswith(".csv") else "tsv"
    original = load_edge_list(original_path, format=fmt,
                              symmetrize=cfg.symmetrize)
    original_stats = compute_stats(original)
    labels = (load_labels(labels_path, original)
              if downstream and labels_path else None)

    rows = []
    gaps = []
    per_eps = {}
    privacy_specs = {}
    for rec in manifest["runs"]:
        run_dir = synthetic_dir / rec["dir"]
        edges_path = run_dir / "synthetic_edges.tsv"
        if not edges_path.exists():
            gaps.append(f"missing run output: {rec['dir']}")
            continue
        sidecar_path = run_dir / "sidecar.json"
        if rec["epsilon"] not in privacy_specs and sidecar_path.exists():
            privacy_specs[rec["epsilon"]] = json.loads(
                sidecar_path.read_text())["privacy_spec"]
        synthetic = load_edge_list(edges_path, num_nodes=original.num_nodes)
        stats = compute_stats(synthetic)
        ks = degree_ks(original, synthetic)
        entry = per_eps.setdefault(rec["epsilon"],
                                   {"stats": [], "ks": [], "auc": [], "f1": []})
        entry["stats"].append(stats)
        entry["ks"].append(ks)
        for name, value in stats.as_dict().items():
            rows.append((rec["epsilon"], rec["run"], name,
                         original_stats.as_dict()[name], value))
        rows.append((rec["epsilon"], rec["run"], "degree_ks", 0.0, ks))
        if downstream:
            emb_path = run_dir / "embeddings.npy"
            if emb_path.exists():
                emb = np.load(emb_path)
                eval_seed = derive_seed(cfg.master_seed, rec["run"], "evaluation")
                rng = np.random.default_rng(eval_seed)
                entry["auc"].append(link_prediction_auc(original, emb, rng=rng))
                if labels is not None:
                    entry["f1"].append(
                        node_classification_f1(emb, labels, rng=rng))
            else:
                gaps.append(f"missing embeddings for downstream: {rec['dir']}")

    if not per_eps:
        raise FileNotFoundError(f"no synthetic runs found under {synthetic_dir}")

    reports = {}
    for epsilon, entry in sorted(per_eps.items()):
        report = build_report(original_stats, entry["stats"], entry["ks"],
                              auc_values=entry["auc"] or None,
                              f1_values=entry["f1"] or None)
        report.warnings = (report.warnings or []) + gaps
        reports[epsilon] = report

    out_dir = Path(out_dir if out_dir is not None else synthetic_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    per_epsilon = {}
    for eps, rep in reports.items():
        entry = rep.to_dict()
        entry["privacy_spec"] = privacy_specs.get(eps)
        per_epsilon[str(eps)] = entry
    payload = {
        "kind": "evaluation",
        "version": __version__,
        "original_dataset": str(original_path),
        "per_epsilon": per_epsilon,
        "gaps": gaps,
    }
    _json_dump(payload, out_dir / "eval_report.json")
    with open(out_dir / "eval_report.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(EVAL_COLUMNS)
        for row in sorted(rows, key=lambda r: (r[0], r[1], r[2])):
            writer.writerow(row)

    # single-epsilon callers get the report directly; sweeps read the dict
    if len(reports) == 1:
        return next(iter(reports.values()))
    return reports


def run_sweep(cfg: ExperimentConfig, out_dir=None) -> Path:
    """Synthesize and evaluate across the epsilon list, consolidating into a
    long-format CSV with one row per (epsilon, metric, run)."""
    cfg.validate()
    if len(cfg.epsilons) < 2:
        raise ConfigError(["a sweep needs at least two epsilon values"])
    out_dir = run_synth(cfg, out_dir)
    run_eval(cfg.dataset, out_dir, downstream=cfg.downstream,
             labels_path=cfg.labels)

    eval_payload = json.loads((out_dir / "eval_report.json").read_text())
    rows = []
    for eps_str, report in eval_payload["per_epsilon"].items():
        epsilon = float(eps_str)
        original = report["original"]
        for run_idx, run_stats in enumerate(report["synthetic_runs"]):
            for metric, value in run_stats.items():
                orig = original.get(metric)
                rel = (abs((value - orig) / orig)
                       if value is not None and orig not in (None, 0) else "")
                rows.append((epsilon, metric, run_idx,
                             "" if value is None else value,
                             "" if orig is None else orig, rel))
        for run_idx, ks in enumerate(report["ks_per_run"]):
            rows.append((epsilon, "degree_ks", run_idx, ks, "", ""))

    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    sweep_path = out_dir / "sweep.csv"
    with open(sweep_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        writer.writerows(rows)
    manifest = json.loads((out_dir / MANIFEST_NAME).read_text())
    manifest["sweep_schema"] = SWEEP_SCHEMA
    manifest["sweep_csv"] = sweep_path.name
    _json_dump(manifest, out_dir / MANIFEST_NAME)
    return out_dir


def summarize(directory) -> str:
    """Human-readable digest of an eval report or sweep directory."""
    directory = Path(directory)
    report_path = directory / "eval_report.json"
    if not report_path.exists():
        raise FileNotFoundError(f"no eval_report.json under {directory}")
    payload = json.loads(report_path.read_text())
    lines = [f"evaluation of {payload['original_dataset']}"]
    for eps_str, report in sorted(payload["per_epsilon"].items(),
                                  key=lambda kv: float(kv[0])):
        lines.append(f"epsilon = {eps_str}")
        lines.append(f"  {'metric':<16}{'original':>14}{'MRE':>12}")
        for metric, value in report["mre"].items():
            orig = report["original"][metric]
            mre_text = "n/a" if value is None else f"{value:.4f}"
            orig_text = "n/a" if orig is None else f"{orig:.4f}" \
                if isinstance(orig, float) else str(orig)
            lines.append(f"  {metric:<16}{orig_text:>14}{mre_text:>12}")
        lines.append(f"  {'degree_ks':<16}{'':>14}{report['ks_mean']:>12.4f}")
        if report.get("auc"):
            lines.append(f"  AUC: {report['auc']['mean']:.4f} "
                         f"(std {report['auc']['std']:.4f})")
        if report.get("micro_f1"):
            lines.append(f"  Micro-F1: {report['micro_f1']['mean']:.4f} "
                         f"(std {report['micro_f1']['std']:.4f})")
        if report["warnings"]:
            lines.append("  warnings: " + "; ".join(report["warnings"]))
    return "\n".join(lines)
