"""Entropy, mutual information, and capacity for finite-alphabet channels.

All information quantities are in bits (base-2 logarithms), with the usual
convention 0*log(0) = 0.  Probabilities below ``ZERO_CLIP`` are treated as
exact zeros inside entropy sums.
"""

from __future__ import annotations

import io

import numpy as np

# Entries smaller than this are treated as exact zeros in log sums.
ZERO_CLIP = 1e-15
# Tolerance for "sums to one" validation of probability vectors.
PROB_TOL = 1e-12


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver exhausts its iteration budget."""


def _as_probs(p) -> np.ndarray:
    return np.asarray(getattr(p, "probs", p), dtype=np.float64)


def _as_matrix(w) -> np.ndarray:
    return np.asarray(getattr(w, "matrix", w), dtype=np.float64)


class Distribution:
    """A probability vector over a finite alphabet.

    Entries must be nonnegative and sum to one within ``PROB_TOL``.
    Instances are immutable once constructed.
    """

    __slots__ = ("probs",)

    def __init__(self, probs):
        arr = np.array(probs, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("distribution must be a nonempty 1-D vector")
        if np.any(arr < 0):
            raise ValueError("distribution entries must be nonnegative")
        total = arr.sum()
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"distribution sums to {total!r}, not 1")
        arr.flags.writeable = False
        object.__setattr__(self, "probs", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Distribution is immutable")

    @property
    def size(self) -> int:
        return self.probs.size

    @classmethod
    def uniform(cls, n: int) -> "Distribution":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def point_mass(cls, index: int, n: int) -> "Distribution":
        v = np.zeros(n)
        v[index] = 1.0
        return cls(v)

    def __eq__(self, other):
        if not isinstance(other, Distribution):
            return NotImplemented
        return self.probs.shape == other.probs.shape and np.all(
            np.abs(self.probs - other.probs) <= PROB_TOL
        )

    def __repr__(self):
        return f"Distribution({self.probs.tolist()})"


class Channel:
    """A row-stochastic transition matrix W(y|x).

    Row x is the output distribution given input x.  Immutable.
    """

    __slots__ = ("matrix",)

    def __init__(self, matrix):
        arr = np.array(matrix, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("channel must be a nonempty 2-D matrix")
        if np.any(arr < 0):
            raise ValueError("channel entries must be nonnegative")
        sums = arr.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > PROB_TOL):
            raise ValueError("every channel row must sum to 1")
        arr.flags.writeable = False
        object.__setattr__(self, "matrix", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Channel is immutable")

    @property
    def num_inputs(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_outputs(self) -> int:
        return self.matrix.shape[1]

    def row(self, x: int) -> Distribution:
        return Distribution(self.matrix[x])

    @classmethod
    def bsc(cls, p: float) -> "Channel":
        """Binary symmetric channel with crossover probability p."""
        return cls([[1.0 - p, p], [p, 1.0 - p]])

    @classmethod
    def identity(cls, n: int) -> "Channel":
        return cls(np.eye(n))

    def __eq__(self, other):
        if not isinstance(other, Channel):
            return NotImplemented
        return self.matrix.shape == other.matrix.shape and np.all(
            np.abs(self.matrix - other.matrix) <= PROB_TOL
        )

    def __repr__(self):
        return f"Channel({self.matrix.tolist()})"


def entropy(p) -> float:
    """Shannon entropy of a probability vector, in bits."""
    v = _as_probs(p)
    v = v[v > ZERO_CLIP]
    return float(-np.sum(v * np.log2(v)))


def binary_entropy(p: float) -> float:
    """Entropy of a (p, 1-p) coin, in bits."""
    if p <= ZERO_CLIP or p >= 1.0 - ZERO_CLIP:
        return 0.0
    return float(-(p * np.log2(p) + (1.0 - p) * np.log2(1.0 - p)))


def mutual_information(p, w) -> float:
    """I(P, W) in bits for input distribution p and channel w.

    Computed as H(output) - sum_x P(x) H(W(.|x)); exactly 0 when all rows
    of w are identical and p is a point mass on any input.
    """
    pv = _as_probs(p)
    wm = _as_matrix(w)
    if pv.size != wm.shape[0]:
        raise ValueError(
            f"input distribution has {pv.size} entries but channel has "
            f"{wm.shape[0]} inputs"
        )
    out = pv @ wm
    cond = 0.0
    for x in range(wm.shape[0]):
        if pv[x] > ZERO_CLIP:
            cond += pv[x] * entropy(wm[x])
    return max(0.0, entropy(out) - cond)


def channel_capacity(w, tol: float = 1e-9, max_iter: int = 10**5):
    """Capacity of a channel via Blahut-Arimoto, with an achieving input.

    Iterates until the duality gap (max_x D(W(.|x) || q_Y) minus the
    current mutual information) falls below ``tol``.  Returns
    ``(capacity_bits, Distribution)``.  Raises :class:`ConvergenceError`
    if the gap does not close within ``max_iter`` iterations.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    wm = _as_matrix(w)
    nx = wm.shape[0]
    r = np.full(nx, 1.0 / nx)
    logw = np.where(wm > ZERO_CLIP, np.log2(np.maximum(wm, ZERO_CLIP)), 0.0)
    for _ in range(int(max_iter)):
        qy = r @ wm
        logq = np.where(qy > ZERO_CLIP, np.log2(np.maximum(qy, ZERO_CLIP)), 0.0)
        # d[x] = D(W(.|x) || q_Y) in bits; rows never place mass where qy = 0
        # for any x with r[x] > 0, and exact zeros contribute nothing.
        d = np.sum(wm * (logw - logq[None, :]), axis=1)
        lower = float(r @ d)
        upper = float(d.max())
        if upper - lower <= tol:
            return max(0.0, lower), Distribution(r / r.sum())
        r = r * np.exp2(d - d.max())
        r /= r.sum()
    raise ConvergenceError(
        f"Blahut-Arimoto did not reach duality gap {tol} in {max_iter} iterations"
    )


def entropy_continuity_bound(eps: float, alphabet_size: int) -> float:
    """Bound on |H(P) - H(Q)| when |P(s) - Q(s)| <= eps for every s.

    Equals (A-1) h_b(eps) + (A-1) log2(A-1) eps for alphabet size A.
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must be in [0, 1]")
    if alphabet_size < 2:
        raise ValueError("alphabet_size must be at least 2")
    a = alphabet_size - 1
    return a * binary_entropy(eps) + a * np.log2(max(a, 1)) * eps


def mi_continuity_bound(eps: float, output_size: int) -> float:
    """Bound on |I(P,W) - I(P,V)| when the channels are entrywise eps-close.

    Twice :func:`entropy_continuity_bound` with the output alphabet size.
    """
    return 2.0 * entropy_continuity_bound(eps, output_size)


def save_matrix_text(target, matrix) -> None:
    """Write a matrix in plain text: one row per line, whitespace-separated."""
    arr = np.atleast_2d(_as_matrix(matrix))
    closing = False
    if isinstance(target, (str, bytes)):
        target = open(target, "w")
        closing = True
    try:
        for row in arr:
            target.write(" ".join(repr(float(v)) for v in row) + "\n")
    finally:
        if closing:
            target.close()


def load_matrix_text(source) -> np.ndarray:
    """Read a matrix written by :func:`save_matrix_text`."""
    if isinstance(source, (str, bytes)):
        with open(source) as fh:
            return load_matrix_text(fh)
    rows = []
    for line in source:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        rows.append([float(v) for v in line.split()])
    if not rows:
        raise ValueError("no matrix rows found")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError("ragged matrix rows")
    return np.array(rows, dtype=np.float64)
