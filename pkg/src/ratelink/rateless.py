"""Randomized rateless codes with piecewise constant composition.

A code with parameters (max_chunks M*, code_len c, message_bits k) has
2^k codewords of M*-by-c symbols; every c-aligned chunk of every codeword
has the same exact composition.  Decoding at chunk M picks the codeword
whose joint empirical type with the received M*c symbols has maximum
mutual information (MMI), ties broken toward the lowest index.

Two implementations share that contract:

* :class:`RatelessCodebook` materializes all 2^k codewords (small k).
* :class:`VirtualRatelessCode` supports k far beyond anything that can be
  materialized (e.g. k = 512).  It generates only the transmitted
  codeword and samples the decoder outcome from its exact conditional
  law given the transmitted codeword and the received sequence: for
  binary alphabets a competitor's MMI score depends only on its overlap
  count with the received sequence, whose distribution is a sum of
  per-chunk hypergeometrics.  The codebook is redrawn independently each
  round, so this per-decode sampling is distribution-exact.
"""

from __future__ import annotations

import hashlib
import math
import struct

import numpy as np
from scipy.special import gammaln

from .composition import CompositionSpec, sample_piecewise_composition

# Scores closer than this are treated as exact MMI ties.
TIE_TOL = 1e-12
# Virtual decodes whose screened error bound falls below this are taken as
# correct without the exact tail computation.
SCREEN_NEGLIGIBLE = 1e-9
# Chunk counts above which the Chernoff screen runs before exact tails.
SCREEN_MIN_CHUNKS = 64


def joint_counts(x_seq, y_seq, x_size: int, y_size: int) -> np.ndarray:
    """Joint occurrence counts of (x, y) pairs, shape (x_size, y_size)."""
    xa = np.asarray(x_seq)
    ya = np.asarray(y_seq)
    if xa.size != ya.size:
        raise ValueError(f"length mismatch: {xa.size} vs {ya.size}")
    if xa.size < 1:
        raise ValueError("sequences must be nonempty")
    flat = np.bincount(xa.astype(np.int64) * y_size + ya, minlength=x_size * y_size)
    return flat.reshape(x_size, y_size)


def mi_from_joint(counts) -> float:
    """Mutual information (bits) of the distribution counts / counts.sum()."""
    c = np.asarray(counts, dtype=np.float64)
    total = c.sum()
    if total <= 0:
        raise ValueError("joint counts must have positive total")
    p = c / total
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    mask = p > 0
    val = np.sum(p[mask] * np.log2(p[mask] / (px @ py)[mask]))
    return max(0.0, float(val))


def empirical_mutual_information(x_seq, y_seq, x_size: int, y_size: int) -> float:
    """MMI decoder score: mutual information of the joint type of (x, y)."""
    return mi_from_joint(joint_counts(x_seq, y_seq, x_size, y_size))


def binary_overlap_scores(total: int, x_ones: int, y_ones: int) -> np.ndarray:
    """MMI scores for binary pairs as a function of the overlap count.

    Entry K is the joint-type mutual information when K positions carry
    (x=1, y=1), given sequence length ``total`` with ``x_ones`` ones in x
    and ``y_ones`` ones in y.  Infeasible K get -inf.
    """
    k = np.arange(x_ones + 1, dtype=np.float64)
    n11 = k
    n10 = x_ones - k
    n01 = y_ones - k
    n00 = total - x_ones - y_ones + k
    cells = np.stack([n00, n01, n10, n11], axis=1)
    valid = np.all(cells >= 0, axis=1)
    rows = np.stack([n00 + n01, n00 + n01, n10 + n11, n10 + n11], axis=1)
    cols = np.stack([n00 + n10, n01 + n11, n00 + n10, n01 + n11], axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = cells * np.log2(cells * float(total) / (rows * cols))
    terms[cells <= 0] = 0.0
    scores = terms.sum(axis=1) / total
    scores[~valid] = -np.inf
    return np.maximum(scores, np.where(valid, 0.0, -np.inf))


def binary_score_table(length: int, x_ones: int) -> np.ndarray:
    """Score lookup table over (overlap K, received ones n1).

    Shape (x_ones + 1, length + 1); infeasible combinations get -inf.
    Useful for scoring many received sequences against a constant-
    composition binary codebook with a single fancy index.
    """
    table = np.empty((x_ones + 1, length + 1), dtype=np.float64)
    for n1 in range(length + 1):
        table[:, n1] = binary_overlap_scores(length, x_ones, n1)
    return table


def _count_times(count: int, factor: float) -> float:
    """count * factor for arbitrarily large nonnegative int counts."""
    if count == 0 or factor == 0.0:
        return 0.0
    if count < (1 << 52):
        return count * factor
    lg = math.log(count) + math.log(abs(factor))
    if lg > 700.0:
        return math.inf if factor > 0 else -math.inf
    return math.copysign(math.exp(lg), factor)


def _count_times_log1p(count: int, delta: float) -> float:
    """count * log1p(delta) without overflowing on huge counts.

    ``delta`` is in [-1, 0]; returns -inf when delta = -1 and count > 0.
    """
    if count == 0:
        return 0.0
    if delta <= -1.0:
        return -math.inf
    return _count_times(count, math.log1p(delta))


def hypergeom_pmf(pop: int, good: int, draws: int) -> np.ndarray:
    """PMF of the hypergeometric overlap count, over k = 0..draws.

    Number of "good" items among ``draws`` taken without replacement from
    a population of ``pop`` with ``good`` good items.  Computed in the log
    domain, exact up to rounding; zero outside the support.
    """
    k = np.arange(draws + 1)
    lo = max(0, draws + good - pop)
    hi = min(draws, good)
    pmf = np.zeros(draws + 1, dtype=np.float64)
    if lo > hi:
        return pmf
    ks = k[lo : hi + 1].astype(np.float64)
    logp = (
        gammaln(good + 1)
        - gammaln(ks + 1)
        - gammaln(good - ks + 1)
        + gammaln(pop - good + 1)
        - gammaln(draws - ks + 1)
        - gammaln(pop - good - draws + ks + 1)
        - (gammaln(pop + 1) - gammaln(draws + 1) - gammaln(pop - draws + 1))
    )
    pmf[lo : hi + 1] = np.exp(logp)
    return pmf


class RatelessCodebook:
    """A fully materialized rateless codebook (2^k codewords)."""

    def __init__(self, max_chunks, code_len, message_bits, composition, seed, codewords):
        self.max_chunks = int(max_chunks)
        self.code_len = int(code_len)
        self.message_bits = int(message_bits)
        self.composition = composition
        self.seed = seed
        self.codewords = codewords

    @property
    def num_codewords(self) -> int:
        return self.codewords.shape[0]

    @property
    def alphabet_size(self) -> int:
        return self.composition.alphabet_size

    def codeword(self, m: int) -> np.ndarray:
        return self.codewords[m]

    def encode_chunk(self, m: int, n: int) -> np.ndarray:
        """Symbols [(n-1)c, nc) of codeword m (chunks are 1-indexed)."""
        if not 1 <= n <= self.max_chunks:
            raise ValueError(f"chunk index {n} out of range 1..{self.max_chunks}")
        c = self.code_len
        return self.codewords[m, (n - 1) * c : n * c]

    def dump(self, target) -> None:
        """Binary dump: header then packed codeword symbols (bit-exact)."""
        closing = False
        if isinstance(target, (str, bytes)):
            target = open(target, "wb")
            closing = True
        try:
            seed = self.seed if isinstance(self.seed, int) else 0
            header = struct.pack(
                "<4sIIIIQI",
                b"RLCB",
                1,
                self.max_chunks,
                self.code_len,
                self.message_bits,
                seed & 0xFFFFFFFFFFFFFFFF,
                self.alphabet_size,
            )
            target.write(header)
            target.write(
                struct.pack(f"<{self.alphabet_size}Q", *self.composition.counts)
            )
            target.write(np.ascontiguousarray(self.codewords, dtype=np.uint8).tobytes())
        finally:
            if closing:
                target.close()

    @classmethod
    def load(cls, source) -> "RatelessCodebook":
        closing = False
        if isinstance(source, (str, bytes)):
            source = open(source, "rb")
            closing = True
        try:
            head = source.read(struct.calcsize("<4sIIIIQI"))
            if len(head) != struct.calcsize("<4sIIIIQI"):
                raise ValueError("not a codebook file")
            magic, version, m_star, c, k, seed, a_size = struct.unpack("<4sIIIIQI", head)
            if magic != b"RLCB" or version != 1:
                raise ValueError("not a codebook file")
            counts = struct.unpack(
                f"<{a_size}Q", source.read(8 * a_size)
            )
            comp = CompositionSpec(counts)
            n_cw = 1 << k
            data = source.read(n_cw * m_star * c)
            codewords = np.frombuffer(data, dtype=np.uint8).reshape(n_cw, m_star * c).copy()
            return cls(m_star, c, k, comp, int(seed), codewords)
        finally:
            if closing:
                source.close()


def build_codebook(
    max_chunks: int,
    code_len: int,
    message_bits: int,
    composition: CompositionSpec,
    seed,
    max_message_bits: int = 20,
) -> RatelessCodebook:
    """Draw 2^k codewords iid from the piecewise fixed-composition set.

    Deterministic given ``seed``.  ``max_message_bits`` guards against
    accidentally materializing an impossible codebook; use
    :class:`VirtualRatelessCode` beyond it.
    """
    if message_bits < 1:
        raise ValueError("message_bits must be at least 1")
    if message_bits > max_message_bits:
        raise ValueError(
            f"message_bits={message_bits} exceeds the materialization guard "
            f"({max_message_bits}); use VirtualRatelessCode for large messages"
        )
    if max_chunks < 1:
        raise ValueError("max_chunks must be at least 1")
    if composition.length != code_len:
        raise ValueError(
            f"composition length {composition.length} must equal code_len {code_len}"
        )
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    n_cw = 1 << message_bits
    codewords = np.empty((n_cw, max_chunks * code_len), dtype=np.uint8)
    for m in range(n_cw):
        codewords[m] = sample_piecewise_composition(max_chunks, composition, rng)
    return RatelessCodebook(max_chunks, code_len, message_bits, composition, seed, codewords)


def mmi_decode(cb: RatelessCodebook, y_received, num_chunks: int) -> int:
    """Maximum mutual information decoding over the first ``num_chunks`` chunks.

    Returns the lowest codeword index achieving the maximal joint-type
    mutual information with the received sequence.
    """
    if not 1 <= num_chunks <= cb.max_chunks:
        raise ValueError(f"num_chunks {num_chunks} out of range 1..{cb.max_chunks}")
    ya = np.asarray(y_received, dtype=np.int64)
    span = num_chunks * cb.code_len
    if ya.size != span:
        raise ValueError(f"received length {ya.size} != {num_chunks} chunks of {cb.code_len}")
    words = cb.codewords[:, :span]
    if cb.alphabet_size == 2 and ya.max(initial=0) <= 1:
        x_ones = num_chunks * cb.composition.counts[1]
        overlaps = words.astype(np.int64) @ ya
        scores = binary_overlap_scores(span, x_ones, int(ya.sum()))[overlaps]
        # scores within TIE_TOL are mathematical ties (e.g. mirrored
        # overlaps); the lowest index among them wins.
        return int(np.flatnonzero(scores >= scores.max() - TIE_TOL)[0])
    y_size = int(ya.max()) + 1
    best_idx = 0
    best = -np.inf
    for m in range(cb.num_codewords):
        s = empirical_mutual_information(words[m], ya, cb.alphabet_size, y_size)
        if s > best + TIE_TOL:
            best = s
            best_idx = m
    return best_idx


class VirtualRatelessCode:
    """Large-k randomized rateless code over binary alphabets.

    Only the transmitted codeword is ever generated; chunk n of codeword m
    is a deterministic function of (seed, m, n) with the same distribution
    as an explicit codebook draw.  :meth:`decode_outcome` samples the MMI
    decoder result from its exact conditional distribution given the
    transmitted codeword and the received sequence.
    """

    def __init__(self, max_chunks, code_len, message_bits, composition, seed):
        if composition.alphabet_size != 2:
            raise ValueError("VirtualRatelessCode requires a binary input alphabet")
        if composition.length != code_len:
            raise ValueError(
                f"composition length {composition.length} must equal code_len {code_len}"
            )
        if message_bits < 1:
            raise ValueError("message_bits must be at least 1")
        self.max_chunks = int(max_chunks)
        self.code_len = int(code_len)
        self.message_bits = int(message_bits)
        self.composition = composition
        self.seed = seed
        self._pmf_cache = {}
        self._msg_key_cache = {}

    @property
    def alphabet_size(self) -> int:
        return 2

    @property
    def num_codewords(self) -> int:
        return 1 << self.message_bits

    def _message_key(self, m: int) -> tuple:
        # Seeding directly with a multi-thousand-bit message index is slow;
        # a fixed 128-bit digest keeps chunk generation deterministic and fast.
        key = self._msg_key_cache.get(m)
        if key is None:
            nbytes = max(1, (self.message_bits + 7) // 8)
            digest = hashlib.blake2b(
                int(m).to_bytes(nbytes, "little"), digest_size=16
            ).digest()
            key = (
                int.from_bytes(digest[:8], "little"),
                int.from_bytes(digest[8:], "little"),
            )
            self._msg_key_cache[m] = key
        return key

    def encode_chunk(self, m: int, n: int) -> np.ndarray:
        if not 1 <= n <= self.max_chunks:
            raise ValueError(f"chunk index {n} out of range 1..{self.max_chunks}")
        seq = np.random.SeedSequence(self._entropy() + self._message_key(m) + (n,))
        rng = np.random.Generator(np.random.PCG64(seq))
        from .composition import sample_fixed_composition

        return sample_fixed_composition(self.composition, rng)

    def _entropy(self) -> tuple:
        return self.seed if isinstance(self.seed, tuple) else (self.seed,)

    def _chunk_pmf(self, y_ones: int) -> np.ndarray:
        pmf = self._pmf_cache.get(y_ones)
        if pmf is None:
            pmf = hypergeom_pmf(self.code_len, y_ones, self.composition.counts[1])
            self._pmf_cache[y_ones] = pmf
        return pmf

    def _overlap_pmf(self, chunk_ones) -> np.ndarray:
        pmf = self._chunk_pmf(int(chunk_ones[0]))
        for n1 in chunk_ones[1:]:
            pmf = np.convolve(pmf, self._chunk_pmf(int(n1)))
        return pmf

    def _chernoff_log_tail(self, chunk_ones, threshold: int, upper: bool) -> float:
        """log of a Chernoff bound on P(K >= threshold) or P(K <= threshold).

        Uses the binomial moment bound for sampling without replacement,
        so the bound is valid for the hypergeometric sum.
        """
        c1 = self.composition.counts[1]
        q = np.asarray(chunk_ones, dtype=np.float64) / self.code_len
        lam = np.linspace(0.01, 30.0, 120) if upper else -np.linspace(0.01, 30.0, 120)
        with np.errstate(over="ignore"):
            mgf = c1 * np.log1p(np.clip(q[:, None] * np.expm1(lam[None, :]), -1.0, None)).sum(axis=0)
        return float(np.min(mgf - lam * threshold))

    def decode_outcome(self, y_code, num_chunks, message_index, x_code, rng):
        """Sample (decoded_index, correct) from the conditional decode law.

        ``x_code`` and ``y_code`` are the code-position symbols actually
        sent/received over the first ``num_chunks`` chunks.  The 2^k - 1
        competitor codewords are iid uniform piecewise-composition draws
        independent of everything observed, so the probability that the
        transmitted codeword survives MMI decoding (ties to lowest index)
        is (1-p_gt)^(2^k-1-m) * (1-p_gt-p_eq)^m, with p_gt / p_eq the
        per-competitor probabilities of a strictly better / equal score.
        """
        ya = np.asarray(y_code, dtype=np.int64)
        xa = np.asarray(x_code, dtype=np.int64)
        span = num_chunks * self.code_len
        if ya.size != span or xa.size != span:
            raise ValueError("x/y length must equal num_chunks * code_len")
        chunk_ones = ya.reshape(num_chunks, self.code_len).sum(axis=1)
        x_ones = num_chunks * self.composition.counts[1]
        y_ones = int(chunk_ones.sum())
        scores = binary_overlap_scores(span, x_ones, y_ones)
        own = int(xa @ ya)
        s = scores[own]

        ln_correct = self._ln_survival(chunk_ones, scores, s, message_index)
        u = rng.random()
        correct = math.log(u) < ln_correct if ln_correct > -np.inf else False
        if correct:
            return message_index, True
        wrong = self._random_wrong_index(message_index, rng)
        return wrong, False

    def _ln_survival(self, chunk_ones, scores, s, message_index) -> float:
        n_above = (1 << self.message_bits) - 1 - message_index
        n_below = message_index
        if len(chunk_ones) >= SCREEN_MIN_CHUNKS:
            bound = self._screened_bound(chunk_ones, scores, s)
            expected_beats = _count_times(n_above + n_below, bound)
            if expected_beats < SCREEN_NEGLIGIBLE:
                return -expected_beats
        pmf = self._overlap_pmf(chunk_ones)
        p_gt = float(pmf[scores > s + TIE_TOL].sum())
        p_eq = float(pmf[np.abs(scores - s) <= TIE_TOL].sum())
        q_hi = min(max(p_gt, 0.0), 1.0)
        q_all = min(max(p_gt + p_eq, 0.0), 1.0)
        return _count_times_log1p(n_above, -q_hi) + _count_times_log1p(n_below, -q_all)

    def _screened_bound(self, chunk_ones, scores, s):
        """Chernoff upper bound on a single competitor scoring >= s - tie."""
        x_ones = scores.size - 1
        y_ones = int(np.sum(chunk_ones))
        span = len(chunk_ones) * self.code_len
        independence = x_ones * y_ones / span if span else 0.0
        mask = scores >= s - TIE_TOL
        ks = np.flatnonzero(mask)
        if ks.size == 0:
            return 0.0
        total = 0.0
        hi = ks[ks > independence]
        if hi.size:
            total += math.exp(self._chernoff_log_tail(chunk_ones, int(hi.min()), upper=True))
        lo = ks[ks <= independence]
        if lo.size:
            total += math.exp(self._chernoff_log_tail(chunk_ones, int(lo.max()), upper=False))
        return min(total, 1.0)

    def _random_wrong_index(self, message_index: int, rng) -> int:
        bits = rng.integers(0, 2, size=self.message_bits)
        idx = 0
        for b in bits:
            idx = (idx << 1) | int(b)
        if idx == message_index:
            idx ^= 1
        return idx
