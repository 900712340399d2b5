"""Discrete-time Poisson channel with inter-symbol interference.

The transmitter releases molecules at rate ``x_t`` during slot ``t`` of
duration ``T_s``.  A molecule released in slot ``t`` is absorbed in slot
``t + k`` with probability ``p_k`` (``k = 0..K``); the receiver is fully
absorbing, so the ``p_k`` sum to one.  On top of the absorbed signal the
detector sees a constant dark-current rate.  The slot-``t`` count is then
Poisson with mean

    mu_t = lambda_0 + T_s * sum_k p_k * x_{t-k},

independent across slots given the K most recent inputs.  A block of n
input slots produces n + K output slots (the tail flushes the memory).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .seeding import spawn

PROB_SUM_TOL = 1e-12


@dataclass(frozen=True)
class ChannelParams:
    """Channel description: memory, hit probabilities, slot length, dark rate.

    ``hit_probs`` has ``memory + 1`` entries, each in [0, 1], summing to one.
    """

    memory: int
    hit_probs: np.ndarray
    slot_duration: float = 1.0
    dark_rate: float = 0.0

    def __post_init__(self):
        probs = np.asarray(self.hit_probs, dtype=float)
        object.__setattr__(self, "hit_probs", probs)
        if self.memory < 0:
            raise ValueError("memory must be nonnegative")
        if probs.ndim != 1 or probs.size != self.memory + 1:
            raise ValueError(
                f"hit_probs must have memory+1={self.memory + 1} entries, got {probs.size}"
            )
        if np.any(probs < 0) or np.any(probs > 1):
            raise ValueError("hit probabilities must lie in [0, 1]")
        if abs(probs.sum() - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"hit probabilities must sum to 1, got {probs.sum()!r}")
        if self.slot_duration <= 0:
            raise ValueError("slot_duration must be positive")
        if self.dark_rate < 0:
            raise ValueError("dark_rate must be nonnegative")


@dataclass(frozen=True)
class PowerConstraints:
    """Peak and average release-rate limits."""

    peak: float
    average: float

    def __post_init__(self):
        if self.peak <= 0 or self.average <= 0:
            raise ValueError("peak and average limits must be positive")


def _as_codeword(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("codeword must be a nonempty 1-D sequence of release rates")
    if np.any(x < 0):
        raise ValueError("release rates must be nonnegative")
    return x


def effective_intensity(x, params: ChannelParams) -> np.ndarray:
    """Per-slot Poisson means for input ``x``, length ``n + memory``.

    Slots before the block start and after slot n carry zero input, so the
    convolution is plain full-mode: the last ``memory`` slots hold the ISI
    tail of the final releases plus dark current.
    """
    x = _as_codeword(x)
    signal = np.convolve(x, params.hit_probs, mode="full") * params.slot_duration
    return signal + params.dark_rate


def log_likelihood(y, x, params: ChannelParams) -> float:
    """Natural log of the product Poisson law of counts ``y`` given input ``x``.

    Returns -inf when some slot has zero mean but a positive count.
    """
    x = _as_codeword(x)
    y = np.asarray(y)
    if y.ndim != 1 or y.size != x.size + params.memory:
        raise ValueError(
            f"output length must be n+memory={x.size + params.memory}, got {y.size}"
        )
    if np.any(y < 0) or not np.all(np.equal(np.mod(y, 1), 0)):
        raise ValueError("counts must be nonnegative integers")
    y = y.astype(float)
    mu = effective_intensity(x, params)
    if np.any((mu == 0) & (y > 0)):
        return float("-inf")
    # 0*log(0) = 0 for the empty slots.
    ylogmu = np.where(y > 0, y * np.log(np.where(mu > 0, mu, 1.0)), 0.0)
    return float(np.sum(-mu + ylogmu - gammaln(y + 1)))


def sample_output(x, params: ChannelParams, seed: int) -> np.ndarray:
    """Draw one output block: independent Poisson counts at the effective means.

    Deterministic for a fixed ``seed``; uses a hash-derived stream so the
    result does not depend on what else was sampled from the same master seed.
    """
    mu = effective_intensity(x, params)
    return sample_intensity(mu, spawn(seed, "channel"))


def sample_intensity(mu: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Poisson counts at the given per-slot means, from an explicit stream."""
    return rng.poisson(mu)


def validate_power(x, constraints: PowerConstraints) -> bool:
    """True iff every rate is at most the peak and the sum at most n * average."""
    x = _as_codeword(x)
    budget = x.size * constraints.average
    slack = 1e-12 * max(1.0, budget)
    return bool(np.all(x <= constraints.peak + 1e-12 * constraints.peak)
                and x.sum() <= budget + slack)
