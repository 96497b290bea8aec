"""Pre/post STDP with spike traces, and input-weight normalization."""
from __future__ import annotations

import numpy as np

TRACE_TC = 20.0  # ms
STDP_RULES = ("additive", "weight_dependent")


def decay_trace(
    trace: np.ndarray,
    spikes: np.ndarray,
    dt: float = 1.0,
    tc: float = TRACE_TC,
    additive: bool = False,
):
    """Exponential spike memory: decays each step; a spike sets it to 1, or adds 1."""
    trace = trace * np.exp(-dt / tc)
    if additive:
        return trace + spikes
    return np.where(spikes, 1.0, trace)


def stdp_update(
    weights: np.ndarray,
    pre_trace: np.ndarray,
    post_trace: np.ndarray,
    pre_spikes: np.ndarray,
    post_spikes: np.ndarray,
    lr_pre: float,
    lr_post: float,
    w_max: float = 1.0,
    inplace: bool = False,
    rule: str = "additive",
) -> np.ndarray:
    """Return updated ``weights`` (n_pre, n_post), clamped to [0, w_max].

    A presynaptic spike depresses its row by ``lr_pre * post_trace``; a
    postsynaptic spike potentiates its column by ``lr_post * pre_trace``.
    With ``rule="weight_dependent"`` depression is further scaled by ``w`` and
    potentiation by ``w_max - w`` (soft bounds). Only touched rows and columns
    are clamped.
    """
    if rule not in STDP_RULES:
        raise ValueError(f"unknown STDP rule {rule!r}")
    pre = np.flatnonzero(pre_spikes)
    post = np.flatnonzero(post_spikes)
    if pre.size == 0 and post.size == 0:
        return weights
    if not inplace:
        weights = weights.copy()
    soft = rule == "weight_dependent"
    if pre.size:
        rows = weights[pre]
        dw = lr_pre * post_trace * (rows if soft else 1.0)
        weights[pre] = np.clip(rows - dw, 0.0, w_max)
    if post.size:
        cols = weights[:, post]
        dw = lr_post * pre_trace[:, None] * ((w_max - cols) if soft else 1.0)
        weights[:, post] = np.clip(cols + dw, 0.0, w_max)
    return weights


def normalize_weights(weights: np.ndarray, norm: float) -> np.ndarray:
    """Rescale each postsynaptic column to sum to ``norm``; zero columns stay zero."""
    sums = weights.sum(axis=0)
    scale = np.divide(norm, sums, out=np.ones_like(sums), where=sums > 0)
    return weights * scale
