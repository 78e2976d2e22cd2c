"""Method-of-types utilities: sequence types and fixed-composition sets.

A composition fixes the exact number of occurrences of each symbol in a
sequence.  The set of all length-n sequences with a given composition is
counted exactly (in the log domain, via log-gamma) and sampled uniformly
(by shuffling the multiset).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .info import Distribution

LOG2E = float(np.log2(np.e))


@dataclass(frozen=True)
class CompositionSpec:
    """Occurrence counts per symbol for sequences of a fixed length."""

    counts: tuple

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if len(counts) < 1:
            raise ValueError("composition needs at least one symbol")
        if any(c < 0 for c in counts):
            raise ValueError("composition counts must be nonnegative")
        if sum(counts) < 1:
            raise ValueError("composition length must be at least 1")
        object.__setattr__(self, "counts", counts)

    @property
    def alphabet_size(self) -> int:
        return len(self.counts)

    @property
    def length(self) -> int:
        return sum(self.counts)

    def fractions(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.float64) / self.length

    def distribution(self) -> Distribution:
        return Distribution(self.fractions())

    def repeated(self, times: int) -> "CompositionSpec":
        """The composition of ``times`` concatenated copies."""
        return CompositionSpec(tuple(c * times for c in self.counts))

    @classmethod
    def uniform(cls, alphabet_size: int, length: int) -> "CompositionSpec":
        if length % alphabet_size != 0:
            raise ValueError("alphabet size must divide length for a uniform composition")
        return cls((length // alphabet_size,) * alphabet_size)


def type_of(seq, alphabet_size: int) -> CompositionSpec:
    """The composition (type) of a symbol sequence."""
    arr = np.asarray(seq)
    if arr.size < 1:
        raise ValueError("sequence must be nonempty")
    if arr.min() < 0 or arr.max() >= alphabet_size:
        raise ValueError("sequence contains symbols outside the alphabet")
    counts = np.bincount(arr, minlength=alphabet_size)
    return CompositionSpec(tuple(int(c) for c in counts))


def composition_count(spec: CompositionSpec) -> int:
    """Exact number of sequences with the given composition (multinomial)."""
    import math

    n = spec.length
    total = math.factorial(n)
    for c in spec.counts:
        total //= math.factorial(c)
    return total


def log_composition_set_size(spec: CompositionSpec) -> float:
    """log2 of the multinomial coefficient n! / prod_x counts[x]!."""
    n = spec.length
    val = gammaln(n + 1) - sum(gammaln(c + 1) for c in spec.counts)
    return float(val) * LOG2E


def sample_fixed_composition(spec: CompositionSpec, rng: np.random.Generator) -> np.ndarray:
    """A uniform draw from the set of sequences with exactly this composition.

    Shuffling the multiset of symbols is exactly uniform over the set.
    """
    base = np.repeat(
        np.arange(spec.alphabet_size, dtype=np.uint8),
        np.asarray(spec.counts, dtype=np.int64),
    )
    return rng.permutation(base)


def sample_piecewise_composition(
    num_chunks: int, chunk_spec: CompositionSpec, rng: np.random.Generator
) -> np.ndarray:
    """Concatenation of independent uniform fixed-composition chunks."""
    if num_chunks < 1:
        raise ValueError("num_chunks must be at least 1")
    return np.concatenate(
        [sample_fixed_composition(chunk_spec, rng) for _ in range(num_chunks)]
    )


def concatenated_set_log_ratio(spec: CompositionSpec, num_blocks: int) -> float:
    """log2(|T_n(P)|^M / |T_{Mn}(P)|) for M concatenated length-n blocks.

    Computed from exact multinomials in the log domain, so large n and M
    are safe from overflow.
    """
    if num_blocks < 1:
        raise ValueError("num_blocks must be at least 1")
    single = log_composition_set_size(spec)
    whole = log_composition_set_size(spec.repeated(num_blocks))
    return num_blocks * single - whole


def enumerate_compositions(spec: CompositionSpec):
    """Yield every sequence with the given composition, as tuples.

    Intended for small-n oracles only; the set size is multinomial(n).
    """

    def rec(counts, prefix):
        if sum(counts) == 0:
            yield tuple(prefix)
            return
        for s, c in enumerate(counts):
            if c > 0:
                counts[s] -= 1
                prefix.append(s)
                yield from rec(counts, prefix)
                prefix.pop()
                counts[s] += 1

    yield from rec(list(spec.counts), [])
