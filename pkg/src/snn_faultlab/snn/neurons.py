"""Leaky integrate-and-fire neuron updates.

State arrays may carry any leading batch shape; updates are elementwise.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


@dataclass(frozen=True)
class LifParams:
    v_rest: float = -60.0  # mV
    v_reset: float = -45.0
    v_thresh: float = -40.0
    tc_decay: float = 10.0  # ms
    refrac: float = 2.0  # ms

    def __post_init__(self):
        # inhibitory defaults reset above rest, so reset is only bounded by threshold
        if not (self.v_rest < self.v_thresh and self.v_reset < self.v_thresh):
            raise ValueError("need v_rest < v_thresh and v_reset < v_thresh")
        if self.tc_decay <= 0 or self.refrac < 0:
            raise ValueError("tc_decay must be positive and refrac non-negative")

    @property
    def margin(self) -> float:
        return self.v_thresh - self.v_rest


@dataclass(frozen=True)
class AdaptiveLifParams(LifParams):
    v_rest: float = -65.0
    v_reset: float = -60.0
    v_thresh: float = -52.0
    tc_decay: float = 100.0
    refrac: float = 5.0
    theta_plus: float = 0.05  # mV per spike
    tc_theta_decay: float = 1e7  # ms

    def __post_init__(self):
        super().__post_init__()
        if self.theta_plus < 0 or self.tc_theta_decay <= 0:
            raise ValueError("theta_plus must be non-negative and tc_theta_decay positive")


class LifState(NamedTuple):
    v: np.ndarray
    refrac_count: np.ndarray


class AdaptiveLifState(NamedTuple):
    v: np.ndarray
    refrac_count: np.ndarray
    theta: np.ndarray


def lif_init(shape, params: LifParams) -> LifState:
    return LifState(np.full(shape, params.v_rest), np.zeros(shape))


def adaptive_lif_init(shape, params: AdaptiveLifParams, theta=None) -> AdaptiveLifState:
    theta = np.zeros(shape) if theta is None else np.broadcast_to(theta, shape).copy()
    return AdaptiveLifState(np.full(shape, params.v_rest), np.zeros(shape), theta)


def _integrate(v, refrac_count, input_current, params: LifParams, dt, threshold):
    decay = np.exp(-dt / params.tc_decay)
    v = params.v_rest + (v - params.v_rest) * decay
    open_ = refrac_count <= 0
    v = v + np.where(open_, input_current, 0.0)
    refrac_count = refrac_count - dt
    spiked = (v >= threshold) & (refrac_count <= 0)
    return v, refrac_count, spiked


def _fire(v, refrac_count, spiked, params: LifParams):
    v = np.where(spiked, params.v_reset, v)
    refrac_count = np.where(spiked, params.refrac, refrac_count)
    return v, refrac_count


def lif_step(
    state: LifState,
    input_current,
    params: LifParams,
    dt: float = 1.0,
    threshold=None,
) -> tuple[LifState, np.ndarray]:
    """One Euler step: decay toward rest, integrate unless refractory, fire.

    ``threshold`` overrides ``params.v_thresh`` (per neuron) for fault overlays.
    The crossing test is inclusive.
    """
    thr = params.v_thresh if threshold is None else threshold
    v, rc, spiked = _integrate(state.v, state.refrac_count, input_current, params, dt, thr)
    v, rc = _fire(v, rc, spiked, params)
    return LifState(v, rc), spiked


def adaptive_lif_step(
    state: AdaptiveLifState,
    input_current,
    params: AdaptiveLifParams,
    dt: float = 1.0,
    threshold=None,
    adapt: bool = True,
    winner_take_all: bool = False,
) -> tuple[AdaptiveLifState, np.ndarray]:
    """LIF step against ``threshold + theta``; theta adapts only when ``adapt``.

    With ``winner_take_all`` at most one neuron per row (last axis) fires: the
    one furthest above its threshold, lowest index on ties. Losers keep their
    potential.
    """
    thr = params.v_thresh if threshold is None else threshold
    theta = state.theta
    if adapt:
        theta = theta * np.exp(-dt / params.tc_theta_decay)
    v, rc, spiked = _integrate(state.v, state.refrac_count, input_current, params, dt, thr + theta)
    if winner_take_all and spiked.ndim and np.count_nonzero(spiked) > 1:
        spiked = _single_winner(spiked, v - (thr + theta))
    v, rc = _fire(v, rc, spiked, params)
    if adapt:
        theta = theta + params.theta_plus * spiked
    return AdaptiveLifState(v, rc, theta), spiked


def _single_winner(spiked: np.ndarray, excess: np.ndarray) -> np.ndarray:
    score = np.where(spiked, excess, -np.inf)
    win = np.argmax(score, axis=-1)
    out = np.zeros_like(spiked)
    np.put_along_axis(out, win[..., None], True, axis=-1)
    return out & spiked
