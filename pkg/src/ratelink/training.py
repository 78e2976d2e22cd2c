"""Randomized pilot placement and training-based channel estimation.

Each transmitted chunk of length b carries t pilot symbols at positions
chosen uniformly without replacement (via common randomness) and split
evenly across the input alphabet; the remaining b - t positions carry
code symbols in order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .info import Channel


@dataclass(frozen=True)
class TrainingPlan:
    """Pilot positions for one chunk, partitioned by pilot symbol."""

    chunk_len: int
    positions_by_symbol: tuple  # one sorted int array per input symbol
    code_positions: np.ndarray  # complement, ascending

    @property
    def x_size(self) -> int:
        return len(self.positions_by_symbol)

    @property
    def training_count(self) -> int:
        return sum(p.size for p in self.positions_by_symbol)

    def serialize(self) -> str:
        parts = [f"b={self.chunk_len}", f"t={self.training_count}", f"x_size={self.x_size}"]
        for x, pos in enumerate(self.positions_by_symbol):
            parts.append(f"T{x}=" + ",".join(str(int(i)) for i in pos))
        return " ".join(parts)


def select_training_plan(
    chunk_len: int, train_count: int, x_size: int, rng: np.random.Generator
) -> TrainingPlan:
    """Draw t pilot positions uniformly without replacement and split them.

    The t positions are a uniform subset of [0, b); the random draw order
    already gives a uniform partition into x_size equal groups, which are
    then sorted for canonical serialization.
    """
    if x_size < 1:
        raise ValueError("x_size must be at least 1")
    if train_count % x_size != 0:
        raise ValueError(
            f"training count {train_count} must be divisible by alphabet size {x_size}"
        )
    if not 0 <= train_count < chunk_len:
        raise ValueError("training count must satisfy 0 <= t < b")
    shuffled = rng.permutation(chunk_len)
    chosen = shuffled[:train_count]
    per = train_count // x_size
    groups = tuple(
        np.sort(chosen[x * per : (x + 1) * per]).astype(np.int64) for x in range(x_size)
    )
    mask = np.ones(chunk_len, dtype=bool)
    mask[chosen] = False
    code_positions = np.flatnonzero(mask).astype(np.int64)
    return TrainingPlan(chunk_len, groups, code_positions)


def interleave_chunk(code_chunk, plan: TrainingPlan) -> np.ndarray:
    """Build the transmitted chunk: pilots at their positions, code in order."""
    code = np.asarray(code_chunk)
    if code.size != plan.code_positions.size:
        raise ValueError(
            f"code chunk has {code.size} symbols, plan expects {plan.code_positions.size}"
        )
    out = np.empty(plan.chunk_len, dtype=np.int64)
    for x, pos in enumerate(plan.positions_by_symbol):
        out[pos] = x
    out[plan.code_positions] = code
    return out


def deinterleave_chunk(received, plan: TrainingPlan) -> np.ndarray:
    """Recover the code-position symbols of a received chunk, in order."""
    ya = np.asarray(received)
    if ya.size != plan.chunk_len:
        raise ValueError(f"received chunk has {ya.size} symbols, expected {plan.chunk_len}")
    return ya[plan.code_positions]


@dataclass(frozen=True)
class ChannelEstimate:
    """A training-based channel estimate and its per-input sample count."""

    matrix: Channel
    samples_per_input: int


def estimate_chunk_channel(received, plan: TrainingPlan, y_size: int) -> ChannelEstimate:
    """Estimate W(y|x) from pilot outputs: row x is the empirical output
    frequency over the positions that carried pilot symbol x."""
    ya = np.asarray(received)
    if ya.size != plan.chunk_len:
        raise ValueError(f"received chunk has {ya.size} symbols, expected {plan.chunk_len}")
    per = plan.training_count // plan.x_size
    rows = np.empty((plan.x_size, y_size), dtype=np.float64)
    for x, pos in enumerate(plan.positions_by_symbol):
        rows[x] = np.bincount(ya[pos], minlength=y_size) / per
    return ChannelEstimate(Channel(rows), per)


def estimate_round_channel(chunk_estimates) -> ChannelEstimate:
    """Entrywise mean of per-chunk estimates; pools the sample counts."""
    estimates = list(chunk_estimates)
    if not estimates:
        raise ValueError("need at least one chunk estimate")
    first = estimates[0].matrix.matrix
    acc = np.zeros_like(first)
    samples = 0
    for est in estimates:
        m = est.matrix.matrix
        if m.shape != first.shape:
            raise ValueError("chunk estimates must share dimensions")
        acc += m
        samples += est.samples_per_input
    return ChannelEstimate(Channel(acc / len(estimates)), samples)
