"""Campaign configuration: INI-style sections with a fixed key list.

Example::

    [data]
    dir = data/mnist
    train_size = 1000
    eval_size = 1000

    [network]
    n_exc = 100
    lr_pre = 0.0004

    [sweep]
    kinds = ILThreshold, BothThreshold
    deltas = -0.2, 0.2
    defenses = none, RobustDriver+BandgapThreshold

    [campaign]
    seeds = 0, 1, 2
    out_dir = results

Unknown sections or keys are errors. Relative paths resolve against the
config file's directory. When ``[data] dir`` is absent the
``SNN_FAULTLAB_DATA`` environment variable is used.
"""
from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from snn_faultlab import mnist
from snn_faultlab.circuit import DefenseVariant, NeuronKind
from snn_faultlab.faults import (
    DEFAULT_DELTAS,
    DEFAULT_FRACTIONS,
    AttackKind,
    AttackSpec,
    MaskMode,
    Phase,
    SweepGrid,
)
from snn_faultlab.snn.encoding import EncodeParams
from snn_faultlab.snn.network import NetworkConfig

DATA_ENV = "SNN_FAULTLAB_DATA"


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in _items(text))


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in _items(text))


def _items(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _defense_set(text: str) -> frozenset[DefenseVariant]:
    text = text.strip()
    if text in ("", "none", "NoDefense"):
        return frozenset()
    return frozenset(DefenseVariant(x.strip()) for x in text.split("+"))


def defense_set_label(defs) -> str:
    return "+".join(sorted(d.value for d in defs)) or "none"


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (tuple, list)):
        return ", ".join(_fmt(v) for v in value)
    if isinstance(value, (AttackKind, NeuronKind, Phase, MaskMode)):
        return value.value
    return repr(value) if isinstance(value, float) else str(value)


_NETWORK_KEYS: dict[str, Callable[[str], object]] = {
    "n_exc": int,
    "n_inh": int,
    "w_max": float,
    "w_init_max": float,
    "norm": float,
    "w_exc_inh": float,
    "w_inh_exc": float,
    "lr_pre": float,
    "lr_post": float,
    "batch_size": int,
    "trace_tc": float,
    "stdp_rule": str,
    "additive_traces": _bool,
    "one_spike": _bool,
    "threshold_reference": str,
}
_ENCODING_KEYS = {"duration": float, "dt": float, "intensity": float}
_SCHEMA = {
    "data": {"dir", "train_size", "eval_size"},
    "network": set(_NETWORK_KEYS),
    "encoding": set(_ENCODING_KEYS),
    "sweep": {"kinds", "deltas", "fractions", "v_dds", "defenses", "neuron_kind", "phase", "mask_mode"},
    "campaign": {"seeds", "out_dir", "workers"},
    "attack": {"kind", "delta", "v_dd", "fraction", "neuron_kind", "defenses", "phase", "seed", "mask_mode"},
}


@dataclass(frozen=True)
class CampaignConfig:
    data_dir: Path
    network: NetworkConfig = field(default_factory=NetworkConfig)
    grid: SweepGrid = field(default_factory=lambda: SweepGrid(kinds=()))
    seeds: tuple[int, ...] = (0,)
    out_dir: Path = Path("results")
    train_size: int = 1000
    eval_size: int = 1000
    workers: int = 1

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("seeds must not be empty")
        if self.train_size <= 0 or self.eval_size <= 0:
            raise ConfigError("train_size and eval_size must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

    def sweep_grid(self) -> SweepGrid:
        return dataclasses.replace(self.grid, seeds=self.seeds)


def _check_data(path: Path) -> None:
    try:
        for stem in (mnist.TRAIN_IMAGES, mnist.TRAIN_LABELS, mnist.TEST_IMAGES, mnist.TEST_LABELS):
            mnist.resolve_idx(path, stem)
    except FileNotFoundError as exc:
        raise ConfigError(str(exc)) from exc


def _read(text: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        unknown = set(parser[section]) - _SCHEMA[section]
        if unknown:
            raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")
    return parser


def parse_config(text: str, base_dir: Path | str = ".", check_files: bool = True) -> CampaignConfig:
    parser = _read(text)
    base_dir = Path(base_dir)

    def get(section, key, conv, default):
        if not parser.has_option(section, key):
            return default
        raw = parser.get(section, key)
        try:
            return conv(raw)
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from exc

    data_dir = get("data", "dir", str, None) or os.environ.get(DATA_ENV)
    if not data_dir:
        raise ConfigError(f"no dataset directory: set [data] dir or ${DATA_ENV}")
    data_dir = (base_dir / data_dir).resolve()
    if check_files:
        _check_data(data_dir)

    net_kw = {k: get("network", k, conv, None) for k, conv in _NETWORK_KEYS.items()}
    enc_kw = {k: get("encoding", k, conv, None) for k, conv in _ENCODING_KEYS.items()}
    try:
        encode = EncodeParams(**{k: v for k, v in enc_kw.items() if v is not None})
        network = NetworkConfig(encode=encode, **{k: v for k, v in net_kw.items() if v is not None})
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    grid = SweepGrid(
        kinds=get("sweep", "kinds", lambda t: tuple(AttackKind(x) for x in _items(t)), ()),
        deltas=get("sweep", "deltas", _floats, DEFAULT_DELTAS),
        fractions=get("sweep", "fractions", _floats, DEFAULT_FRACTIONS),
        v_dds=get("sweep", "v_dds", _floats, (0.8, 0.9, 1.1, 1.2)),
        defense_sets=get(
            "sweep", "defenses", lambda t: tuple(_defense_set(x) for x in t.split(",")), (frozenset(),)
        ),
        neuron_kind=get("sweep", "neuron_kind", NeuronKind, NeuronKind.AxonHillock),
        phase=get("sweep", "phase", Phase, Phase.TrainAndTest),
        mask_mode=get("sweep", "mask_mode", MaskMode, MaskMode.Random),
    )
    out_dir = Path(get("campaign", "out_dir", str, "results"))
    if not out_dir.is_absolute():
        out_dir = (base_dir / out_dir).resolve()
    return CampaignConfig(
        data_dir=data_dir,
        network=network,
        grid=grid,
        seeds=get("campaign", "seeds", _ints, (0,)),
        out_dir=out_dir,
        train_size=get("data", "train_size", int, 1000),
        eval_size=get("data", "eval_size", int, 1000),
        workers=get("campaign", "workers", int, 1),
    )


def load_config(path: Path | str, check_files: bool = True) -> CampaignConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(encoding="utf-8"), path.parent, check_files)


def dump_config(cfg: CampaignConfig) -> str:
    """Serialize every key explicitly, so the text fully describes the run."""
    net = cfg.network
    g = cfg.grid
    lines = [
        "[data]",
        f"dir = {cfg.data_dir}",
        f"train_size = {cfg.train_size}",
        f"eval_size = {cfg.eval_size}",
        "",
        "[network]",
    ]
    lines += [f"{k} = {_fmt(getattr(net, k))}" for k in _NETWORK_KEYS]
    lines += ["", "[encoding]"]
    lines += [f"{k} = {_fmt(getattr(net.encode, k))}" for k in _ENCODING_KEYS]
    lines += [
        "",
        "[sweep]",
        f"kinds = {_fmt(tuple(g.kinds))}",
        f"deltas = {_fmt(tuple(g.deltas))}",
        f"fractions = {_fmt(tuple(g.fractions))}",
        f"v_dds = {_fmt(tuple(g.v_dds))}",
        f"defenses = {', '.join(defense_set_label(d) for d in g.defense_sets)}",
        f"neuron_kind = {_fmt(g.neuron_kind)}",
        f"phase = {_fmt(g.phase)}",
        f"mask_mode = {_fmt(g.mask_mode)}",
        "",
        "[campaign]",
        f"seeds = {_fmt(tuple(cfg.seeds))}",
        f"out_dir = {cfg.out_dir}",
        f"workers = {cfg.workers}",
        "",
    ]
    return "\n".join(lines)


def dump_attack(spec: AttackSpec) -> str:
    return "\n".join(
        [
            "[attack]",
            f"kind = {spec.kind.value}",
            f"delta = {spec.delta!r}",
            f"v_dd = {spec.v_dd!r}",
            f"fraction = {spec.fraction_affected!r}",
            f"neuron_kind = {spec.neuron_kind.value}",
            f"defenses = {spec.defense_label}",
            f"phase = {spec.phase.value}",
            f"seed = {spec.seed}",
            f"mask_mode = {spec.mask_mode.value}",
            "",
        ]
    )


def parse_attack(text: str) -> AttackSpec:
    parser = _read(text)
    if not parser.has_section("attack"):
        raise ConfigError("missing [attack] section")
    sec = parser["attack"]
    if "kind" not in sec:
        raise ConfigError("[attack] needs a kind")
    try:
        return AttackSpec(
            kind=AttackKind(sec["kind"].strip()),
            delta=float(sec.get("delta", "0")),
            v_dd=float(sec.get("v_dd", "1.0")),
            fraction_affected=float(sec.get("fraction", "1.0")),
            neuron_kind=NeuronKind(sec.get("neuron_kind", "AxonHillock").strip()),
            defenses=_defense_set(sec.get("defenses", "none")),
            phase=Phase(sec.get("phase", "TrainAndTest").strip()),
            seed=int(sec.get("seed", "0")),
            mask_mode=MaskMode(sec.get("mask_mode", "random").strip()),
        )
    except ValueError as exc:
        raise ConfigError(f"bad [attack] value: {exc}") from exc
