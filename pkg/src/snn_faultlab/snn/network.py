"""Three-layer excitatory/inhibitory spiking network with STDP.

Topology: every input pixel projects to every excitatory neuron through
learned weights; each excitatory neuron drives its own inhibitory partner;
each inhibitory neuron inhibits every excitatory neuron except its partner.
Learning is unsupervised; neurons are labelled afterwards by the class they
respond to most.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from snn_faultlab.faults import FaultPlan
from snn_faultlab.mnist import N_CLASSES
from snn_faultlab.snn.encoding import EncodeParams, encode_poisson, sample_rng
from snn_faultlab.snn.learning import STDP_RULES, decay_trace, normalize_weights, stdp_update
from snn_faultlab.snn.neurons import (
    AdaptiveLifParams,
    LifParams,
    adaptive_lif_init,
    adaptive_lif_step,
    lif_init,
    lif_step,
)

log = logging.getLogger(__name__)

# independent RNG streams per purpose
STREAM_TRAIN = 0
STREAM_ASSIGN = 1
STREAM_EVAL = 2

THRESHOLD_REFERENCES = ("rest", "zero")


@dataclass(frozen=True)
class NetworkConfig:
    n_input: int = 784
    n_exc: int = 100
    n_inh: int = 100
    w_max: float = 1.0
    w_init_max: float = 0.3
    norm: float = 78.4
    w_exc_inh: float = 22.5
    w_inh_exc: float = -120.0
    lr_pre: float = 0.0004
    lr_post: float = 0.0002
    batch_size: int = 32
    trace_tc: float = 20.0
    # soft-bounded STDP with summing traces; the hard-bounded rule with these
    # rates is depression-dominated and does not learn
    stdp_rule: str = "weight_dependent"
    additive_traces: bool = True
    exc: AdaptiveLifParams = field(default_factory=AdaptiveLifParams)
    inh: LifParams = field(default_factory=LifParams)
    encode: EncodeParams = field(default_factory=EncodeParams)
    one_spike: bool = False
    # "zero": fault multipliers scale the threshold potential itself (mV from
    # 0), so a 0.8 multiplier moves a negative threshold away from rest.
    # "rest": they scale the margin above rest.
    threshold_reference: str = "zero"

    def __post_init__(self):
        for name in ("n_input", "n_exc", "n_inh", "batch_size"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.n_exc != self.n_inh:
            raise ValueError("excitatory and inhibitory layers are paired one-to-one")
        if self.lr_pre < 0 or self.lr_post < 0:
            raise ValueError("learning rates must be non-negative")
        if not self.w_inh_exc < 0 < self.w_exc_inh:
            raise ValueError("need w_inh_exc < 0 < w_exc_inh")
        if self.w_max <= 0 or self.norm <= 0 or self.w_init_max < 0:
            raise ValueError("w_max and norm must be positive, w_init_max non-negative")
        if self.stdp_rule not in STDP_RULES:
            raise ValueError(f"stdp_rule must be one of {STDP_RULES}")
        if self.threshold_reference not in THRESHOLD_REFERENCES:
            raise ValueError(f"threshold_reference must be one of {THRESHOLD_REFERENCES}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> NetworkConfig:
        data = dict(data)
        nested = {"exc": AdaptiveLifParams, "inh": LifParams, "encode": EncodeParams}
        for key, typ in nested.items():
            if key in data and isinstance(data[key], dict):
                data[key] = typ(**data[key])
        return cls(**data)

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class Network:
    """Mutable simulation parameters: input weights and adaptive offsets."""

    config: NetworkConfig
    weights: np.ndarray  # (n_input, n_exc)
    theta: np.ndarray  # (n_exc,) mV

    @classmethod
    def initialize(cls, config: NetworkConfig, seed: int) -> Network:
        rng = np.random.default_rng(seed)
        w = rng.uniform(0.0, config.w_init_max, size=(config.n_input, config.n_exc))
        return cls(config, w, np.zeros(config.n_exc))

    def copy(self) -> Network:
        return Network(self.config, self.weights.copy(), self.theta.copy())


@dataclass(frozen=True)
class TrainedModel:
    config: NetworkConfig
    weights: np.ndarray
    theta: np.ndarray
    assignments: np.ndarray  # (n_exc,) int class labels
    seed: int

    def __post_init__(self):
        for arr in (self.weights, self.theta, self.assignments):
            arr.setflags(write=False)

    @property
    def fingerprint(self) -> str:
        return self.config.fingerprint()

    def network(self) -> Network:
        return Network(self.config, self.weights.copy(), self.theta.copy())


class FaultedView(NamedTuple):
    """Non-destructive overlay of a fault plan on a network."""

    weights: np.ndarray
    theta: np.ndarray
    exc_threshold: np.ndarray  # (n_exc,) mV, before adding theta
    inh_threshold: np.ndarray  # (n_inh,) mV
    psp_scale: float
    config: NetworkConfig


def scaled_threshold(params: LifParams, multipliers: np.ndarray, reference: str) -> np.ndarray:
    if reference == "rest":
        return params.v_rest + multipliers * params.margin
    return params.v_thresh * multipliers


def apply_fault_plan(network: Network, plan: FaultPlan | None) -> FaultedView:
    cfg = network.config
    if plan is None:
        plan = FaultPlan.identity(cfg.n_exc, cfg.n_inh)
    if plan.el_threshold_multipliers.shape != (cfg.n_exc,) or plan.il_threshold_multipliers.shape != (cfg.n_inh,):
        raise ValueError("fault plan dimensions do not match the network")
    return FaultedView(
        network.weights,
        network.theta,
        scaled_threshold(cfg.exc, plan.el_threshold_multipliers, cfg.threshold_reference),
        scaled_threshold(cfg.inh, plan.il_threshold_multipliers, cfg.threshold_reference),
        plan.psp_scale,
        cfg,
    )


class LayerCounts(NamedTuple):
    exc: np.ndarray
    inh: np.ndarray


def simulate(view: FaultedView, trains: np.ndarray) -> LayerCounts:
    """Inference over a batch of spike trains shaped (batch, T, n_input).

    Learning and threshold adaptation are off. Returns per-sample spike counts.
    """
    cfg = view.config
    batch, steps, n_in = trains.shape
    if n_in != cfg.n_input or view.weights.shape != (cfg.n_input, cfg.n_exc):
        raise ValueError("spike train width does not match the network input")
    dt = cfg.encode.dt
    exc = adaptive_lif_init((batch, cfg.n_exc), cfg.exc, view.theta)
    inh = lif_init((batch, cfg.n_inh), cfg.inh)
    s_exc = np.zeros((batch, cfg.n_exc), dtype=bool)
    s_inh = np.zeros((batch, cfg.n_inh), dtype=bool)
    n_exc = np.zeros((batch, cfg.n_exc), dtype=np.int64)
    n_inh = np.zeros((batch, cfg.n_inh), dtype=np.int64)
    w = view.weights * view.psp_scale
    for t in range(steps):
        x = trains[:, t, :]
        drive = x @ w if x.any() else 0.0
        # lateral inhibition from every inhibitory neuron except the partner
        inhib = cfg.w_inh_exc * (s_inh.sum(axis=1, keepdims=True) - s_inh)
        exc_in = drive + inhib
        inh_in = cfg.w_exc_inh * s_exc
        exc, s_exc_new = adaptive_lif_step(
            exc, exc_in, cfg.exc, dt, view.exc_threshold, adapt=False,
            winner_take_all=cfg.one_spike,
        )
        inh, s_inh = lif_step(inh, inh_in, cfg.inh, dt, view.inh_threshold)
        s_exc = s_exc_new
        n_exc += s_exc
        n_inh += s_inh
    return LayerCounts(n_exc, n_inh)


def run_sample(
    network: Network,
    train: np.ndarray,
    plan: FaultPlan | None = None,
    learning: bool = False,
) -> LayerCounts:
    """Simulate one spike train (T, n_input); with ``learning`` update ``network`` in place.

    Learning applies STDP every step and adapts thresholds; input weights are
    normalized before the sample.
    """
    cfg = network.config
    if not learning:
        counts = simulate(apply_fault_plan(network, plan), train[None])
        return LayerCounts(counts.exc[0], counts.inh[0])
    if train.ndim != 2 or train.shape[1] != cfg.n_input:
        raise ValueError("spike train width does not match the network input")
    network.weights = normalize_weights(network.weights, cfg.norm)
    view = apply_fault_plan(network, plan)
    dt = cfg.encode.dt
    exc = adaptive_lif_init(cfg.n_exc, cfg.exc, network.theta)
    inh = lif_init(cfg.n_inh, cfg.inh)
    s_exc = np.zeros(cfg.n_exc, dtype=bool)
    s_inh = np.zeros(cfg.n_inh, dtype=bool)
    x_pre = np.zeros(cfg.n_input)
    x_post = np.zeros(cfg.n_exc)
    n_exc = np.zeros(cfg.n_exc, dtype=np.int64)
    n_inh = np.zeros(cfg.n_inh, dtype=np.int64)
    w = network.weights
    for t in range(train.shape[0]):
        x = train[t]
        drive = (x @ w) * view.psp_scale if x.any() else 0.0
        inhib = cfg.w_inh_exc * (s_inh.sum() - s_inh)
        exc, s_exc_new = adaptive_lif_step(
            exc, drive + inhib, cfg.exc, dt, view.exc_threshold, adapt=True,
            winner_take_all=cfg.one_spike,
        )
        inh, s_inh = lif_step(inh, cfg.w_exc_inh * s_exc, cfg.inh, dt, view.inh_threshold)
        s_exc = s_exc_new
        x_pre = decay_trace(x_pre, x, dt, cfg.trace_tc, cfg.additive_traces)
        x_post = decay_trace(x_post, s_exc, dt, cfg.trace_tc, cfg.additive_traces)
        stdp_update(w, x_pre, x_post, x, s_exc, cfg.lr_pre, cfg.lr_post, cfg.w_max,
                    inplace=True, rule=cfg.stdp_rule)
        n_exc += s_exc
        n_inh += s_inh
    network.theta = exc.theta
    return LayerCounts(n_exc, n_inh)


def encode_batch(images: np.ndarray, params: EncodeParams, seed: int, stream: int, offset: int = 0) -> np.ndarray:
    return np.stack(
        [
            encode_poisson(img, params, sample_rng(seed, stream, offset + i)).steps
            for i, img in enumerate(images)
        ]
    )


def infer_counts(
    network: Network,
    images: np.ndarray,
    plan: FaultPlan | None,
    seed: int,
    stream: int = STREAM_EVAL,
    chunk: int = 200,
) -> np.ndarray:
    """Excitatory spike counts (n_samples, n_exc) for ``images`` (n_samples, 784)."""
    view = apply_fault_plan(network, plan)
    out = []
    for start in range(0, len(images), chunk):
        trains = encode_batch(images[start:start + chunk], network.config.encode, seed, stream, start)
        out.append(simulate(view, trains).exc)
    if not out:
        return np.zeros((0, network.config.n_exc), dtype=np.int64)
    return np.concatenate(out)


def assign_from_counts(counts: np.ndarray, labels: np.ndarray, n_classes: int = N_CLASSES) -> np.ndarray:
    """Label each neuron with the class of highest mean response; ties -> lowest class."""
    labels = np.asarray(labels)
    rates = np.zeros((n_classes, counts.shape[1]))
    for c in range(n_classes):
        members = labels == c
        if members.any():
            rates[c] = counts[members].mean(axis=0)
    return np.argmax(rates, axis=0)


def assign_labels(
    network: Network, images: np.ndarray, labels: np.ndarray, seed: int, plan: FaultPlan | None = None
) -> np.ndarray:
    counts = infer_counts(network, images, plan, seed, STREAM_ASSIGN)
    return assign_from_counts(counts, labels)


def classify(assignments: np.ndarray, el_spike_counts: np.ndarray, n_classes: int = N_CLASSES):
    """Class with the highest mean count over its assigned neurons.

    Accepts one count vector or a (n_samples, n_exc) matrix. Classes with no
    assigned neurons score 0; ties go to the lowest class index.
    """
    counts = np.asarray(el_spike_counts, dtype=np.float64)
    single = counts.ndim == 1
    counts = np.atleast_2d(counts)
    scores = np.zeros((counts.shape[0], n_classes))
    for c in range(n_classes):
        members = assignments == c
        if members.any():
            scores[:, c] = counts[:, members].mean(axis=1)
    pred = np.argmax(scores, axis=1)
    return int(pred[0]) if single else pred


def evaluate(
    model: TrainedModel,
    images: np.ndarray,
    labels: np.ndarray,
    plan: FaultPlan | None = None,
    seed: int = 0,
) -> float:
    """Fraction of samples classified correctly under ``plan``."""
    if len(images) == 0:
        raise ValueError("empty evaluation set")
    if plan is not None and not plan.phase.test:
        plan = None
    counts = infer_counts(model.network(), images, plan, seed, STREAM_EVAL)
    pred = classify(model.assignments, counts)
    return float(np.mean(pred == np.asarray(labels)))


def train(
    config: NetworkConfig,
    images: np.ndarray,
    labels: np.ndarray,
    seed: int,
    plan: FaultPlan | None = None,
    progress: Callable[[int, int], None] | None = None,
) -> TrainedModel:
    """Single pass of unsupervised learning followed by neuron labelling.

    Samples are consumed in batches of ``config.batch_size`` for progress
    reporting; weights and thresholds update sample by sample.
    """
    if len(images) == 0:
        raise ValueError("empty training set")
    if plan is not None and not plan.phase.train:
        plan = None
    net = Network.initialize(config, seed)
    n = len(images)
    for start in range(0, n, config.batch_size):
        stop = min(start + config.batch_size, n)
        for i in range(start, stop):
            spikes = encode_poisson(images[i], config.encode, sample_rng(seed, STREAM_TRAIN, i)).steps
            run_sample(net, spikes, plan, learning=True)
        if progress is not None:
            progress(stop, n)
        log.debug("trained %d/%d samples", stop, n)
    net.weights = normalize_weights(net.weights, config.norm)
    assignments = assign_labels(net, images, labels, seed, plan)
    return TrainedModel(config, net.weights, net.theta, assignments.astype(np.int64), seed)
