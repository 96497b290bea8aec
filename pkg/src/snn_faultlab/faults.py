"""Attack descriptions and their resolution into per-neuron fault plans.

Five attack kinds are supported:

==================== ====================================================
InputSpikeCorruption input current drivers only; scales per-spike drive
ELThreshold          a fraction of excitatory neurons, threshold change
ILThreshold          a fraction of inhibitory neurons, threshold change
BothThreshold        every neuron in both layers, threshold change
GlobalVdd            shared supply; both channels derived from VDD
==================== ====================================================
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from snn_faultlab import circuit
from snn_faultlab.circuit import DefenseVariant, NeuronKind

DELTA_RANGE = (-0.20, 0.20)
DEFAULT_DELTAS = (-0.20, -0.10, 0.10, 0.20)
DEFAULT_FRACTIONS = tuple(round(0.1 * i, 1) for i in range(11))


class AttackKind(enum.Enum):
    InputSpikeCorruption = "InputSpikeCorruption"
    ELThreshold = "ELThreshold"
    ILThreshold = "ILThreshold"
    BothThreshold = "BothThreshold"
    GlobalVdd = "GlobalVdd"

    @property
    def layer(self) -> str:
        return {
            AttackKind.InputSpikeCorruption: "input",
            AttackKind.ELThreshold: "EL",
            AttackKind.ILThreshold: "IL",
            AttackKind.BothThreshold: "EL+IL",
            AttackKind.GlobalVdd: "all",
        }[self]


class Phase(enum.Enum):
    TrainAndTest = "TrainAndTest"
    TestOnly = "TestOnly"
    TrainOnly = "TrainOnly"

    @property
    def train(self) -> bool:
        return self is not Phase.TestOnly

    @property
    def test(self) -> bool:
        return self is not Phase.TrainOnly


class MaskMode(enum.Enum):
    Random = "random"
    Contiguous = "contiguous"


@dataclass(frozen=True)
class AttackSpec:
    kind: AttackKind
    delta: float = 0.0
    v_dd: float = circuit.NOMINAL_VDD
    fraction_affected: float = 1.0
    neuron_kind: NeuronKind = NeuronKind.AxonHillock
    defenses: frozenset[DefenseVariant] = frozenset()
    phase: Phase = Phase.TrainAndTest
    seed: int = 0
    mask_mode: MaskMode = MaskMode.Random

    def __post_init__(self):
        object.__setattr__(self, "defenses", frozenset(self.defenses))
        lo, hi = DELTA_RANGE
        if not lo - 1e-12 <= self.delta <= hi + 1e-12:
            raise ValueError(f"delta {self.delta} outside calibrated range [{lo}, {hi}]")
        if not 0.0 <= self.fraction_affected <= 1.0:
            raise ValueError("fraction_affected must lie in [0, 1]")
        if self.kind is AttackKind.GlobalVdd:
            vlo, vhi = circuit.VDD_RANGE
            if not vlo <= self.v_dd <= vhi:
                raise circuit.CalibrationDomainError(
                    f"VDD {self.v_dd} V outside calibrated range [{vlo}, {vhi}] V"
                )

    @property
    def defense_label(self) -> str:
        return "+".join(sorted(d.value for d in self.defenses)) or "none"


@dataclass(frozen=True)
class FaultPlan:
    """Resolved per-neuron effect of an attack.

    Threshold multipliers scale each neuron's threshold; ``psp_scale`` scales
    the input-to-excitatory drive.
    """

    el_threshold_multipliers: np.ndarray
    il_threshold_multipliers: np.ndarray
    psp_scale: float = 1.0
    phase: Phase = Phase.TrainAndTest

    def __post_init__(self):
        for arr in (self.el_threshold_multipliers, self.il_threshold_multipliers):
            arr.setflags(write=False)

    @classmethod
    def identity(cls, n_exc: int = 100, n_inh: int = 100, phase: Phase = Phase.TrainAndTest):
        return cls(np.ones(n_exc), np.ones(n_inh), 1.0, phase)

    @property
    def el_mask(self) -> np.ndarray:
        return self.el_threshold_multipliers != 1.0

    @property
    def il_mask(self) -> np.ndarray:
        return self.il_threshold_multipliers != 1.0

    @property
    def is_identity(self) -> bool:
        return (
            self.psp_scale == 1.0
            and not self.el_mask.any()
            and not self.il_mask.any()
        )

    def active_in(self, training: bool) -> bool:
        return self.phase.train if training else self.phase.test


def affected_mask(n: int, fraction: float, seed: int, mode: MaskMode = MaskMode.Random) -> np.ndarray:
    """Boolean mask with exactly ``floor(fraction * n)`` neurons set."""
    k = math.floor(fraction * n + 1e-9)
    mask = np.zeros(n, dtype=bool)
    if k == 0:
        return mask
    rng = np.random.default_rng(seed)
    if mode is MaskMode.Contiguous:
        start = int(rng.integers(0, n))
        mask[(start + np.arange(k)) % n] = True
    else:
        mask[rng.choice(n, size=k, replace=False)] = True
    return mask


def vdd_effects(
    v_dd: float, kind: NeuronKind, defenses: Iterable[DefenseVariant] = ()
) -> tuple[float, float]:
    """(psp_scale, threshold_shift) seen by the whole network at supply ``v_dd``."""
    defenses = set(defenses)
    amp = circuit.driver_current(v_dd, circuit.amplitude_defense(defenses))
    shift = circuit.threshold_shift(
        v_dd, kind, circuit.effective_threshold_defense(kind, defenses)
    )
    return circuit.amplitude_to_psp_scale(amp), shift


def build_fault_plan(spec: AttackSpec, n_exc: int = 100, n_inh: int = 100) -> FaultPlan:
    el = np.ones(n_exc)
    il = np.ones(n_inh)
    psp = 1.0
    kind = spec.kind
    if kind is AttackKind.InputSpikeCorruption:
        psp = 1.0 + spec.delta
    elif kind is AttackKind.ELThreshold:
        el[affected_mask(n_exc, spec.fraction_affected, spec.seed, spec.mask_mode)] = 1.0 + spec.delta
    elif kind is AttackKind.ILThreshold:
        il[affected_mask(n_inh, spec.fraction_affected, spec.seed, spec.mask_mode)] = 1.0 + spec.delta
    elif kind is AttackKind.BothThreshold:
        el[:] = 1.0 + spec.delta
        il[:] = 1.0 + spec.delta
    elif kind is AttackKind.GlobalVdd:
        psp, shift = vdd_effects(spec.v_dd, spec.neuron_kind, spec.defenses)
        el[:] = 1.0 + shift
        il[:] = 1.0 + shift
    return FaultPlan(el, il, psp, spec.phase)


@dataclass(frozen=True)
class SweepGrid:
    kinds: Sequence[AttackKind]
    deltas: Sequence[float] = DEFAULT_DELTAS
    fractions: Sequence[float] = DEFAULT_FRACTIONS
    defense_sets: Sequence[frozenset[DefenseVariant]] = (frozenset(),)
    seeds: Sequence[int] = (0,)
    v_dds: Sequence[float] = (0.8, 0.9, 1.1, 1.2)
    neuron_kind: NeuronKind = NeuronKind.AxonHillock
    phase: Phase = Phase.TrainAndTest
    mask_mode: MaskMode = MaskMode.Random


def sweep(grid: SweepGrid) -> list[AttackSpec]:
    """Cartesian product ordered by (kind, delta|v_dd, fraction, defenses, seed).

    GlobalVdd sweeps ``v_dds`` in place of ``deltas``. Kinds that always hit
    whole layers (InputSpikeCorruption, BothThreshold, GlobalVdd) take a single
    fraction of 1.0.
    """
    if not grid.kinds:
        raise ValueError("sweep needs at least one attack kind")
    for name in ("deltas", "fractions", "defense_sets", "seeds"):
        if len(getattr(grid, name)) == 0:
            raise ValueError(f"sweep axis '{name}' is empty")
    specs = []
    for kind in grid.kinds:
        if kind is AttackKind.GlobalVdd:
            if not grid.v_dds:
                raise ValueError("sweep axis 'v_dds' is empty")
            levels = [("v_dd", v) for v in grid.v_dds]
        else:
            levels = [("delta", d) for d in grid.deltas]
        fractions = (
            grid.fractions
            if kind in (AttackKind.ELThreshold, AttackKind.ILThreshold)
            else (1.0,)
        )
        for (axis, level), frac, defs, seed in itertools.product(
            levels, fractions, grid.defense_sets, grid.seeds
        ):
            specs.append(
                AttackSpec(
                    kind=kind,
                    fraction_affected=frac,
                    neuron_kind=grid.neuron_kind,
                    defenses=frozenset(defs),
                    phase=grid.phase,
                    seed=seed,
                    mask_mode=grid.mask_mode,
                    **{axis: level},
                )
            )
    return specs
