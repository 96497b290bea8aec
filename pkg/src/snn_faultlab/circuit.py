"""Behavioral models of the analog neuron circuits and their supply sensitivity.

Two integrate-and-fire circuits are modeled at the level of charge balance:
an Axon Hillock neuron (inverter-pair amplifier, no explicit refractory
period) and a voltage-amplifier I&F neuron (explicit comparator threshold
and refractory period). Supply-voltage manipulation reaches the network
through two channels:

* the current driver, whose spike amplitude tracks VDD, and
* the membrane threshold, which shifts with VDD for each neuron kind.

Both channels are piecewise-linear calibration curves over 0.8-1.2 V.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

NOMINAL_VDD = 1.0
VDD_RANGE = (0.8, 1.2)
NOMINAL_DRIVE_AMPLITUDE = 200e-9  # A

# Bandgap reference output variation; documented only, modeled as zero shift.
BANDGAP_RESIDUAL = 0.0056

# relative float slack for ceil/floor on quantities that should be integral
_EPS = 1e-9


class CalibrationDomainError(ValueError):
    """Supply voltage outside the calibrated range."""


class DefenseConfigError(ValueError):
    """Defense variant that does not apply to the requested neuron kind."""


class NeverSpikesError(ValueError):
    """Net charge per drive period is not positive."""


class NeuronKind(enum.Enum):
    AxonHillock = "AxonHillock"
    VoltageAmpIF = "VoltageAmpIF"


class DefenseVariant(enum.Enum):
    NoDefense = "NoDefense"
    RobustDriver = "RobustDriver"
    BandgapThreshold = "BandgapThreshold"
    SizedW32 = "SizedW32"
    Comparator = "Comparator"


THRESHOLD_DEFENSES = {
    NeuronKind.AxonHillock: (DefenseVariant.SizedW32, DefenseVariant.Comparator),
    NeuronKind.VoltageAmpIF: (DefenseVariant.BandgapThreshold,),
}


@dataclass(frozen=True)
class TransductionCurve:
    """Piecewise-linear VDD -> relative parameter shift.

    Evaluation outside the anchor span raises :class:`CalibrationDomainError`.
    """

    anchors: tuple[tuple[float, float], ...]
    name: str = ""

    def __post_init__(self):
        vs = [v for v, _ in self.anchors]
        if len(vs) < 2 or any(b <= a for a, b in zip(vs, vs[1:])):
            raise ValueError("anchor voltages must be strictly increasing")
        if (NOMINAL_VDD, 0.0) not in self.anchors:
            raise ValueError("curve must pass through the nominal anchor (1.0, 0.0)")
        if vs[0] > VDD_RANGE[0] or vs[-1] < VDD_RANGE[1]:
            raise ValueError(f"curve must span at least {VDD_RANGE}")

    @property
    def span(self) -> tuple[float, float]:
        return self.anchors[0][0], self.anchors[-1][0]

    def __call__(self, v_dd: float) -> float:
        lo, hi = self.span
        if not lo <= v_dd <= hi:
            raise CalibrationDomainError(
                f"VDD {v_dd} V outside calibrated range [{lo}, {hi}] V"
            )
        for v, shift in self.anchors:
            if v_dd == v:
                return shift
        xs, ys = zip(*self.anchors)
        return float(np.interp(v_dd, xs, ys))

    @classmethod
    def flat(cls, name: str = "") -> TransductionCurve:
        return cls(((VDD_RANGE[0], 0.0), (NOMINAL_VDD, 0.0), (VDD_RANGE[1], 0.0)), name)


# Driver amplitude: 136 nA at 0.8 V, 200 nA at 1.0 V, 264 nA at 1.2 V.
DRIVER_CURVE = TransductionCurve(((0.8, -0.32), (1.0, 0.0), (1.2, 0.32)), "driver")

THRESHOLD_CURVES: dict[tuple[NeuronKind, DefenseVariant], TransductionCurve] = {
    (NeuronKind.AxonHillock, DefenseVariant.NoDefense): TransductionCurve(
        ((0.8, -0.1791), (1.0, 0.0), (1.2, 0.1676)), "AxonHillock/NoDefense"
    ),
    (NeuronKind.VoltageAmpIF, DefenseVariant.NoDefense): TransductionCurve(
        ((0.8, -0.1801), (1.0, 0.0), (1.2, 0.1714)), "VoltageAmpIF/NoDefense"
    ),
    (NeuronKind.AxonHillock, DefenseVariant.SizedW32): TransductionCurve(
        ((0.8, -0.0523), (1.0, 0.0), (1.2, 0.032)), "AxonHillock/SizedW32"
    ),
    (NeuronKind.AxonHillock, DefenseVariant.Comparator): TransductionCurve.flat(
        "AxonHillock/Comparator"
    ),
    (NeuronKind.VoltageAmpIF, DefenseVariant.BandgapThreshold): TransductionCurve.flat(
        "VoltageAmpIF/BandgapThreshold"
    ),
}


@dataclass(frozen=True)
class CircuitParams:
    c_mem: float  # F
    v_thr: float  # V
    v_dd_nominal: float = NOMINAL_VDD
    leak_current: float = 0.0  # A
    refractory_offset: float = 0.0  # s

    def __post_init__(self):
        if self.c_mem <= 0:
            raise ValueError("c_mem must be positive")
        if not 0 < self.v_thr < self.v_dd_nominal:
            raise ValueError("v_thr must lie strictly between 0 and v_dd_nominal")
        if self.leak_current < 0 or self.refractory_offset < 0:
            raise ValueError("leak_current and refractory_offset must be non-negative")

    def with_threshold_shift(self, shift: float) -> CircuitParams:
        return CircuitParams(
            self.c_mem,
            self.v_thr * (1.0 + shift),
            self.v_dd_nominal,
            self.leak_current,
            self.refractory_offset,
        )


@dataclass(frozen=True)
class DriveParams:
    amplitude: float  # A
    pulse_width: float  # s
    period: float  # s

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")
        if not 0 < self.pulse_width <= self.period:
            raise ValueError("need 0 < pulse_width <= period")

    def with_amplitude(self, amplitude: float) -> DriveParams:
        return DriveParams(amplitude, self.pulse_width, self.period)


# 40 MHz spike rate with 25 ns width: back-to-back pulses.
AXON_HILLOCK_DRIVE = DriveParams(NOMINAL_DRIVE_AMPLITUDE, 25e-9, 25e-9)
# 25 ns pulses separated by 25 ns gaps.
VOLTAGE_AMP_DRIVE = DriveParams(NOMINAL_DRIVE_AMPLITUDE, 25e-9, 50e-9)
# Dummy detector neuron: 100 ns pulses every 200 ns.
DUMMY_DRIVE = DriveParams(NOMINAL_DRIVE_AMPLITUDE, 100e-9, 200e-9)

IF_REFRACTORY_FACTOR = 2.6


def _ceil(x: float) -> int:
    return math.ceil(x - abs(x) * _EPS)


def _floor(x: float) -> int:
    return math.floor(x + abs(x) * _EPS)


def net_charge_per_period(drive: DriveParams, neuron: CircuitParams) -> float:
    return drive.amplitude * drive.pulse_width - neuron.leak_current * drive.period


def integration_time(drive: DriveParams, neuron: CircuitParams) -> float:
    """Whole drive periods needed to charge the membrane to threshold, in seconds."""
    q = net_charge_per_period(drive, neuron)
    if q <= 0:
        raise NeverSpikesError(
            f"net charge per period {q:.3e} C is not positive; the neuron never spikes"
        )
    n = _ceil(neuron.v_thr * neuron.c_mem / q)
    return n * drive.period


def time_to_first_spike(drive: DriveParams, neuron: CircuitParams) -> float:
    """Ideal-integrator time from rest to the first output spike.

    ``ceil(v_thr * c_mem / q) * period + refractory_offset`` where ``q`` is the
    net charge delivered per drive period.
    """
    return integration_time(drive, neuron) + neuron.refractory_offset


def axon_hillock_params() -> CircuitParams:
    return CircuitParams(c_mem=1e-12, v_thr=0.5)


def voltage_amp_params(drive: DriveParams = VOLTAGE_AMP_DRIVE) -> CircuitParams:
    """I&F neuron whose reset/refractory dynamics add a fixed offset.

    The offset is 2.6x the nominal integration time under ``drive``.
    """
    base = CircuitParams(c_mem=10e-12, v_thr=0.5)
    offset = IF_REFRACTORY_FACTOR * integration_time(drive, base)
    return CircuitParams(c_mem=10e-12, v_thr=0.5, refractory_offset=offset)


def neuron_params(kind: NeuronKind) -> CircuitParams:
    if kind is NeuronKind.AxonHillock:
        return axon_hillock_params()
    return voltage_amp_params()


def nominal_drive(kind: NeuronKind) -> DriveParams:
    return AXON_HILLOCK_DRIVE if kind is NeuronKind.AxonHillock else VOLTAGE_AMP_DRIVE


def _check_vdd(v_dd: float):
    lo, hi = VDD_RANGE
    if not lo <= v_dd <= hi:
        raise CalibrationDomainError(f"VDD {v_dd} V outside calibrated range [{lo}, {hi}] V")


def driver_current(v_dd: float, defense: DefenseVariant = DefenseVariant.NoDefense) -> float:
    """Current-driver spike amplitude in amperes at supply ``v_dd``.

    Threshold-only defenses leave the driver unprotected.
    """
    _check_vdd(v_dd)
    if defense is DefenseVariant.RobustDriver:
        return NOMINAL_DRIVE_AMPLITUDE
    # computed in nA so the anchors round to the nearest double exactly
    return (200.0 + 200.0 * DRIVER_CURVE(v_dd)) / 1e9


def threshold_shift(
    v_dd: float, kind: NeuronKind, defense: DefenseVariant = DefenseVariant.NoDefense
) -> float:
    """Relative membrane-threshold change at supply ``v_dd``.

    ``RobustDriver`` only protects the amplitude channel, so the threshold
    follows the undefended curve. Pairing a threshold defense with the wrong
    neuron kind raises :class:`DefenseConfigError`.
    """
    _check_vdd(v_dd)
    if defense in (DefenseVariant.NoDefense, DefenseVariant.RobustDriver):
        curve = THRESHOLD_CURVES[(kind, DefenseVariant.NoDefense)]
    else:
        try:
            curve = THRESHOLD_CURVES[(kind, defense)]
        except KeyError:
            raise DefenseConfigError(
                f"{defense.value} does not apply to {kind.value} neurons"
            ) from None
    return curve(v_dd)


def effective_threshold_defense(
    kind: NeuronKind, defenses: Iterable[DefenseVariant]
) -> DefenseVariant:
    """Pick the threshold-channel defense in force for ``kind``.

    A comparator replaces the inverter whose sizing SizedW32 changes, so it
    takes precedence when both are present.
    """
    defenses = set(defenses)
    for d in defenses:
        if d in (DefenseVariant.BandgapThreshold, DefenseVariant.SizedW32, DefenseVariant.Comparator):
            if d not in THRESHOLD_DEFENSES[kind]:
                raise DefenseConfigError(f"{d.value} does not apply to {kind.value} neurons")
    for d in (DefenseVariant.Comparator, DefenseVariant.BandgapThreshold, DefenseVariant.SizedW32):
        if d in defenses:
            return d
    return DefenseVariant.NoDefense


def amplitude_defense(defenses: Iterable[DefenseVariant]) -> DefenseVariant:
    return (
        DefenseVariant.RobustDriver
        if DefenseVariant.RobustDriver in set(defenses)
        else DefenseVariant.NoDefense
    )


def amplitude_to_psp_scale(amplitude: float) -> float:
    """Per-spike membrane increment relative to the nominal 200 nA drive."""
    if amplitude < 0:
        raise ValueError("amplitude must be non-negative")
    return amplitude / NOMINAL_DRIVE_AMPLITUDE


@dataclass(frozen=True)
class DummyCount:
    count: int
    never_spikes: bool = False


def dummy_neuron_state(
    v_dd: float,
    kind: NeuronKind,
    defense: DefenseVariant = DefenseVariant.NoDefense,
    drive: DriveParams = DUMMY_DRIVE,
) -> tuple[DriveParams, CircuitParams]:
    """Dummy neuron and its drive as seen under supply ``v_dd``."""
    neuron = neuron_params(kind).with_threshold_shift(threshold_shift(v_dd, kind, defense))
    return drive.with_amplitude(driver_current(v_dd, defense)), neuron


def mean_interspike_interval(drive: DriveParams, neuron: CircuitParams) -> float:
    """Long-run output spike interval of a continuously driven neuron.

    Reset is instantaneous and the drive keeps flowing through it, so no input
    charge is lost: the interval is threshold charge over mean net current,
    plus any refractory offset.
    """
    mean_current = net_charge_per_period(drive, neuron) / drive.period
    if mean_current <= 0:
        raise NeverSpikesError("mean net current is not positive; the neuron never spikes")
    return neuron.v_thr * neuron.c_mem / mean_current + neuron.refractory_offset


def dummy_spike_count(
    v_dd: float,
    window: float,
    kind: NeuronKind,
    defense: DefenseVariant = DefenseVariant.NoDefense,
) -> DummyCount:
    """Output spikes of the detector neuron over a sampling ``window`` (s)."""
    if window <= 0:
        raise ValueError("window must be positive")
    drive, neuron = dummy_neuron_state(v_dd, kind, defense)
    try:
        isi = mean_interspike_interval(drive, neuron)
    except NeverSpikesError:
        return DummyCount(0, never_spikes=True)
    return DummyCount(_floor(window / isi))


def detect_vdd_anomaly(observed: float, baseline: float, threshold_frac: float = 0.10) -> bool:
    """True iff ``observed`` deviates from ``baseline`` by at least ``threshold_frac``."""
    if baseline <= 0:
        raise ValueError("baseline count must be positive")
    return abs(observed - baseline) / baseline >= threshold_frac


@dataclass(frozen=True)
class CalibrationRow:
    channel: str
    v_dd: float
    relative_shift: float
    value: float | None = field(default=None)


def calibration_table() -> list[CalibrationRow]:
    """All calibration anchors, driver first, then threshold curves."""
    rows = [
        CalibrationRow("driver", v, s, driver_current(v)) for v, s in DRIVER_CURVE.anchors
    ]
    for curve in THRESHOLD_CURVES.values():
        rows.extend(CalibrationRow(curve.name, v, s) for v, s in curve.anchors)
    return rows
