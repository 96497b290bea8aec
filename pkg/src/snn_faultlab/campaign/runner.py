"""End-to-end campaigns: baseline training, attack sweeps, detector reports."""
from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from snn_faultlab import circuit, mnist
from snn_faultlab.campaign.config import CampaignConfig, dump_config
from snn_faultlab.campaign.results import BASELINE, ResultRow, format_csv, parse_csv
from snn_faultlab.campaign.snapshot import load_model, save_model
from snn_faultlab.circuit import DefenseVariant, NeuronKind
from snn_faultlab.faults import AttackKind, AttackSpec, build_fault_plan, sweep
from snn_faultlab.snn.network import NetworkConfig, TrainedModel, evaluate, train

log = logging.getLogger(__name__)

# the evaluation subset is drawn from the test split with a seed offset so it
# never coincides with the training draw
EVAL_SEED_OFFSET = 1000
PARTIAL_CSV = "results.partial.csv"
RESUME_MARKER = "resume.json"


@dataclass(frozen=True)
class Split:
    train_images: np.ndarray
    train_labels: np.ndarray
    eval_images: np.ndarray
    eval_labels: np.ndarray


def load_split_for_seed(data_dir: Path, seed: int, train_size: int, eval_size: int) -> Split:
    tr_i, tr_l = mnist.load_split(data_dir, "train")
    te_i, te_l = mnist.load_split(data_dir, "test")
    a, b = mnist.select_subset(tr_i, tr_l, train_size, seed)
    c, d = mnist.select_subset(te_i, te_l, eval_size, seed + EVAL_SEED_OFFSET)
    return Split(a.pixels, b.labels, c.pixels, d.labels)


def model_path(out_dir: Path, seed: int) -> Path:
    return Path(out_dir) / "models" / f"baseline-seed{seed}.snfl"


def train_baseline(config: NetworkConfig, split: Split, seed: int) -> TrainedModel:
    return train(config, split.train_images, split.train_labels, seed)


def baseline_row(seed: int, accuracy: float) -> ResultRow:
    return ResultRow.make(BASELINE, "none", 0.0, circuit.NOMINAL_VDD, 0.0, "none", seed, accuracy, accuracy)


def spec_row(spec: AttackSpec, accuracy: float, baseline: float) -> ResultRow:
    vdd_attack = spec.kind is AttackKind.GlobalVdd
    return ResultRow.make(
        spec.kind.value,
        spec.kind.layer,
        None if vdd_attack else spec.delta,
        spec.v_dd if vdd_attack else None,
        spec.fraction_affected,
        spec.defense_label,
        spec.seed,
        accuracy,
        baseline,
    )


def attack_accuracy(model: TrainedModel, split: Split, spec: AttackSpec) -> float:
    """Accuracy under ``spec``; retrains under the plan when it is active in training.

    An identity plan reuses the baseline model, since training under it would
    reproduce that model exactly.
    """
    cfg = model.config
    plan = build_fault_plan(spec, cfg.n_exc, cfg.n_inh)
    if plan.phase.train and not plan.is_identity:
        model = train(cfg, split.train_images, split.train_labels, model.seed, plan=plan)
    return evaluate(model, split.eval_images, split.eval_labels, plan=plan, seed=model.seed)


def _job(args) -> float:
    model, split, spec = args
    return attack_accuracy(model, split, spec)


def _fingerprint(cfg: CampaignConfig) -> str:
    return hashlib.sha256(dump_config(cfg).encode()).hexdigest()[:16]


def _flush_partial(out_dir: Path, cfg: CampaignConfig, rows: Sequence[ResultRow]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / PARTIAL_CSV).write_text(format_csv(rows), encoding="utf-8")
    marker = {"config": _fingerprint(cfg), "completed": len(rows)}
    (out_dir / RESUME_MARKER).write_text(json.dumps(marker) + "\n", encoding="utf-8")


def _load_partial(out_dir: Path, cfg: CampaignConfig) -> list[ResultRow]:
    marker = out_dir / RESUME_MARKER
    if not marker.exists():
        return []
    info = json.loads(marker.read_text())
    if info.get("config") != _fingerprint(cfg):
        log.warning("resume marker belongs to a different config; starting over")
        return []
    rows = parse_csv((out_dir / PARTIAL_CSV).read_text(encoding="utf-8"))
    return rows[: info["completed"]]


def run_campaign(
    cfg: CampaignConfig,
    resume: bool = False,
    progress: Callable[[str], None] | None = None,
    models: dict[int, TrainedModel] | None = None,
) -> list[ResultRow]:
    """Baseline rows (one per seed) followed by every sweep point in sweep order.

    Baselines are snapshotted under ``out_dir/models``. If a point fails, the
    rows finished so far are written to ``results.partial.csv`` with a resume
    marker; ``resume=True`` continues from there.
    """
    out_dir = Path(cfg.out_dir)
    done = _load_partial(out_dir, cfg) if resume else []
    specs = sweep(cfg.sweep_grid()) if cfg.grid.kinds else []
    splits = {
        s: load_split_for_seed(cfg.data_dir, s, cfg.train_size, cfg.eval_size) for s in cfg.seeds
    }
    models = dict(models or {})
    rows: list[ResultRow] = []
    baselines: dict[int, float] = {}
    try:
        for seed in cfg.seeds:
            if seed not in models:
                path = model_path(out_dir, seed)
                cached = load_model(path) if resume and path.exists() else None
                if cached is not None and cached.config == cfg.network and cached.seed == seed:
                    models[seed] = cached
                else:
                    models[seed] = train_baseline(cfg.network, splits[seed], seed)
                    save_model(models[seed], path)
            split = splits[seed]
            acc = evaluate(models[seed], split.eval_images, split.eval_labels, seed=seed)
            baselines[seed] = acc
            rows.append(baseline_row(seed, acc))
            if progress:
                progress(f"baseline seed {seed}: accuracy {acc:.4f}")
        skip = max(0, len(done) - len(rows))
        rows.extend(done[len(rows):len(rows) + skip])
        todo = specs[skip:]
        jobs = [(models[s.seed], splits[s.seed], s) for s in todo]
        if cfg.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(cfg.workers) as pool:
                results: Iterable[float] = pool.map(_job, jobs)
                _collect(todo, results, baselines, rows, progress)
        else:
            _collect(todo, map(_job, jobs), baselines, rows, progress)
    except BaseException:
        _flush_partial(out_dir, cfg, rows)
        raise
    for name in (PARTIAL_CSV, RESUME_MARKER):
        (out_dir / name).unlink(missing_ok=True)
    return rows


def _collect(specs, results, baselines, rows, progress):
    # results arrive in submission order, so rows keep sweep order
    for spec, acc in zip(specs, results):
        rows.append(spec_row(spec, acc, baselines[spec.seed]))
        if progress:
            r = rows[-1]
            progress(
                f"{spec.kind.value} delta={spec.delta:+.2f} vdd={spec.v_dd:.2f} "
                f"fraction={spec.fraction_affected:.1f} [{spec.defense_label}] seed {spec.seed}: "
                f"accuracy {r.accuracy:.4f} (degradation {r.relative_degradation:+.3f})"
            )


@dataclass(frozen=True)
class DetectorRow:
    layer: str
    v_dd: float
    count: int
    baseline: int
    deviation: float
    flag: bool


DETECTOR_HEADER = ("layer", "vdd", "count", "baseline", "deviation", "flag")
DETECTOR_WINDOW = 0.1  # s


def detector_report(
    v_dds: Sequence[float],
    kind: NeuronKind = NeuronKind.AxonHillock,
    defense: DefenseVariant = DefenseVariant.NoDefense,
    layers: Sequence[str] = ("EL", "IL"),
    window: float = DETECTOR_WINDOW,
) -> list[DetectorRow]:
    """One dummy sentinel per monitored layer, compared to its nominal-supply count."""
    rows = []
    for v in v_dds:
        lo, hi = circuit.VDD_RANGE
        if not lo <= v <= hi:
            raise circuit.CalibrationDomainError(f"VDD {v} V outside calibrated range [{lo}, {hi}] V")
    base = circuit.dummy_spike_count(circuit.NOMINAL_VDD, window, kind, defense).count
    for layer in layers:
        for v in v_dds:
            count = circuit.dummy_spike_count(v, window, kind, defense).count
            dev = (count - base) / base
            rows.append(DetectorRow(layer, float(v), count, base, dev, circuit.detect_vdd_anomaly(count, base)))
    return rows


def format_detector_csv(rows: Sequence[DetectorRow]) -> str:
    lines = [",".join(DETECTOR_HEADER)]
    for r in rows:
        lines.append(f"{r.layer},{r.v_dd:.6f},{r.count},{r.baseline},{r.deviation:.6f},{int(r.flag)}")
    return "\n".join(lines) + "\n"
