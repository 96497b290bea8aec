"""Command-line entry point: ``snn-faultlab <command> [options]``."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

from snn_faultlab import circuit
from snn_faultlab.campaign import config as cfgmod
from snn_faultlab.campaign.plotting import emit_plot_svg
from snn_faultlab.campaign.results import BASELINE, read_csv, write_csv
from snn_faultlab.campaign.runner import (
    detector_report,
    format_detector_csv,
    load_split_for_seed,
    run_campaign,
    train_baseline,
)
from snn_faultlab.campaign.snapshot import load_model, save_model
from snn_faultlab.circuit import DefenseVariant, NeuronKind
from snn_faultlab.faults import build_fault_plan
from snn_faultlab.snn.network import evaluate

log = logging.getLogger("snn_faultlab")


def _global_options(parser: argparse.ArgumentParser, suppress: bool) -> None:
    # subcommands accept the same flags; SUPPRESS keeps them from overriding
    # values given before the subcommand
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", type=Path, default=default, help="campaign config file")
    parser.add_argument("--seed", type=int, default=default, help="run a single seed")
    parser.add_argument("--out-dir", type=Path, default=default, help="output directory")
    parser.add_argument("--data-dir", type=Path, default=default, help="MNIST IDX directory")
    parser.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS if suppress else 0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snn-faultlab",
        description="Supply-voltage fault campaigns on an unsupervised spiking MNIST classifier.",
    )
    _global_options(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        _global_options(p, suppress=True)
        return p

    p = add("train", "train a baseline model and save a snapshot")
    p.add_argument("--model", type=Path, help="snapshot path (default OUT/models/baseline-seedN.snfl)")

    p = add("evaluate", "evaluate a snapshot, optionally under one attack")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--attack", type=Path, help="file with an [attack] section")

    p = add("attack-sweep", "run the configured sweep; writes results.csv and SVG plots")
    p.add_argument("--model", type=Path, action="append", default=[],
                   help="reuse a baseline snapshot (repeatable, matched by seed)")
    p.add_argument("--workers", type=int, help="parallel worker processes")
    p.add_argument("--resume", action="store_true", help="continue an interrupted sweep")
    p.add_argument("--no-plot", action="store_true", help="skip SVG output")

    p = add("circuit-sim", "behavioral circuit model: first-spike times and calibration anchors")
    p.add_argument("--dump-calibration", action="store_true", help="print calibration anchors as CSV")
    p.add_argument("--kind", type=NeuronKind, default=NeuronKind.AxonHillock,
                   choices=list(NeuronKind), metavar="{AxonHillock,VoltageAmpIF}")
    p.add_argument("--vdd", type=float, nargs="+", default=[0.8, 1.0, 1.2])

    p = add("detect", "dummy-neuron supply monitor report")
    p.add_argument("--vdd", type=float, nargs="+", default=[0.8, 1.0, 1.2])
    p.add_argument("--kind", type=NeuronKind, default=NeuronKind.AxonHillock,
                   choices=list(NeuronKind), metavar="{AxonHillock,VoltageAmpIF}")
    p.add_argument("--defense", type=DefenseVariant, default=DefenseVariant.NoDefense,
                   choices=list(DefenseVariant), metavar="DEFENSE")

    p = add("plot", "render SVG charts from a results CSV")
    p.add_argument("results", type=Path)
    return parser


def _campaign_config(args) -> cfgmod.CampaignConfig:
    if args.config is not None:
        cfg = cfgmod.load_config(args.config, check_files=args.data_dir is None)
    else:
        data = args.data_dir or os.environ.get(cfgmod.DATA_ENV)
        if not data:
            raise cfgmod.ConfigError(f"no dataset: pass --config, --data-dir or set ${cfgmod.DATA_ENV}")
        cfg = cfgmod.CampaignConfig(data_dir=Path(data))
    changes = {}
    if args.data_dir is not None:
        changes["data_dir"] = args.data_dir
    if args.seed is not None:
        changes["seeds"] = (args.seed,)
    if args.out_dir is not None:
        changes["out_dir"] = args.out_dir
    if getattr(args, "workers", None):
        changes["workers"] = args.workers
    return dataclasses.replace(cfg, **changes)


def cmd_train(args) -> int:
    cfg = _campaign_config(args)
    for seed in cfg.seeds:
        split = load_split_for_seed(cfg.data_dir, seed, cfg.train_size, cfg.eval_size)
        model = train_baseline(cfg.network, split, seed)
        path = args.model if args.model and len(cfg.seeds) == 1 else None
        path = path or Path(cfg.out_dir) / "models" / f"baseline-seed{seed}.snfl"
        save_model(model, path)
        acc = evaluate(model, split.eval_images, split.eval_labels, seed=seed)
        print(f"seed {seed}: held-out accuracy {acc:.4f}; saved {path}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _campaign_config(args)
    model = load_model(args.model)
    split = load_split_for_seed(cfg.data_dir, model.seed, cfg.train_size, cfg.eval_size)
    plan = None
    if args.attack:
        spec = cfgmod.parse_attack(args.attack.read_text(encoding="utf-8"))
        plan = build_fault_plan(spec, model.config.n_exc, model.config.n_inh)
    acc = evaluate(model, split.eval_images, split.eval_labels, plan=plan, seed=model.seed)
    print(f"{acc:.6f}")
    return 0


def cmd_attack_sweep(args) -> int:
    cfg = _campaign_config(args)
    models = {}
    for path in args.model:
        m = load_model(path)
        if m.config != cfg.network:
            raise cfgmod.ConfigError(f"{path}: snapshot was trained with a different network config")
        models[m.seed] = m
    rows = run_campaign(cfg, resume=args.resume, progress=log.info, models=models)
    out = Path(cfg.out_dir)
    csv_path = write_csv(rows, out / "results.csv")
    print(f"wrote {csv_path}")
    if not args.no_plot:
        for path in _plot_rows(rows, out):
            print(f"wrote {path}")
    return 0


def _plot_rows(rows, out: Path) -> list[Path]:
    kinds = sorted({r.attack for r in rows if r.attack != BASELINE})
    base = [r for r in rows if r.attack == BASELINE]
    return [
        emit_plot_svg(base + [r for r in rows if r.attack == k], out / f"{k}.svg")
        for k in kinds
    ]


def cmd_circuit_sim(args) -> int:
    if args.dump_calibration:
        print("channel,vdd,relative_shift,value")
        for row in circuit.calibration_table():
            value = "" if row.value is None else f"{row.value:.6e}"
            print(f"{row.channel},{row.v_dd:.2f},{row.relative_shift:.6f},{value}")
        return 0
    neuron = circuit.neuron_params(args.kind)
    drive = circuit.nominal_drive(args.kind)
    nominal = circuit.time_to_first_spike(drive, neuron)
    print("vdd,driver_current_nA,threshold_shift,time_to_first_spike_s,relative_change")
    for v in args.vdd:
        amp = circuit.driver_current(v)
        shift = circuit.threshold_shift(v, args.kind)
        t = circuit.time_to_first_spike(drive.with_amplitude(amp), neuron.with_threshold_shift(shift))
        print(f"{v:.3f},{amp * 1e9:.3f},{shift:.6f},{t:.6e},{(t - nominal) / nominal:+.6f}")
    return 0


def cmd_detect(args) -> int:
    rows = detector_report(args.vdd, args.kind, args.defense)
    text = format_detector_csv(rows)
    sys.stdout.write(text)
    if args.out_dir is not None:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        (args.out_dir / "detector.csv").write_text(text, encoding="utf-8")
    return 0


def cmd_plot(args) -> int:
    rows = read_csv(args.results)
    out = args.out_dir or args.results.parent
    for path in _plot_rows(rows, Path(out)):
        print(f"wrote {path}")
    return 0


COMMANDS = {
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "attack-sweep": cmd_attack_sweep,
    "circuit-sim": cmd_circuit_sim,
    "detect": cmd_detect,
    "plot": cmd_plot,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (cfgmod.ConfigError, circuit.CalibrationDomainError, circuit.DefenseConfigError,
            FileNotFoundError, ValueError) as exc:
        print(f"snn-faultlab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
