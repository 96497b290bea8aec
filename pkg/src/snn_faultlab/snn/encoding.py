"""Poisson rate coding of pixel intensities."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EncodeParams:
    duration: float = 250.0  # ms
    dt: float = 1.0  # ms
    intensity: float = 128.0  # Hz at pixel value 255

    def __post_init__(self):
        steps = self.duration / self.dt
        if steps <= 0 or abs(steps - round(steps)) > 1e-9:
            raise ValueError("duration/dt must be a positive integer")
        if self.intensity <= 0:
            raise ValueError("intensity must be positive")

    @property
    def steps(self) -> int:
        return int(round(self.duration / self.dt))

    def spike_probability(self, pixels: np.ndarray) -> np.ndarray:
        rate_hz = np.asarray(pixels, dtype=np.float64) * (self.intensity / 255.0)
        return rate_hz * (self.dt / 1000.0)


@dataclass(frozen=True)
class SpikeTrain:
    steps: np.ndarray  # (T, n) bool
    dt: float

    @property
    def duration(self) -> float:
        return self.steps.shape[0] * self.dt


def encode_poisson(image: np.ndarray, params: EncodeParams, rng: np.random.Generator) -> SpikeTrain:
    """Independent Bernoulli spikes per pixel and time step."""
    p = params.spike_probability(np.ravel(image))
    if np.any(p > 1):
        raise ValueError("rate * dt exceeds one spike per step; lower intensity or dt")
    spikes = rng.random((params.steps, p.size)) < p
    return SpikeTrain(spikes, params.dt)


def sample_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    """Generator for one sample's encoding, independent of batching and order."""
    return np.random.default_rng([seed, stream, index])
