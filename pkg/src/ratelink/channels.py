"""Channel families indexed by a state symbol, and state-sequence tools.

The forward channel applies W(y_i | x_i, z_i) independently per symbol for
a fixed but unknown state sequence z.  Built-in families cover the binary
modulo-additive (XOR) channel and the binary OR channel whose state
average is a Z-channel.
"""

from __future__ import annotations

import numpy as np

from .info import Channel, Distribution, binary_entropy, load_matrix_text, save_matrix_text


class ChannelFamily:
    """A finite set of channels {W(.|., z) : z in Z} sharing alphabets."""

    def __init__(self, name: str, matrices):
        arr = np.array(matrices, dtype=np.float64)
        if arr.ndim != 3:
            raise ValueError("matrices must have shape (z_size, x_size, y_size)")
        self.name = name
        self.matrices = arr
        # validate each state's matrix
        for z in range(arr.shape[0]):
            Channel(arr[z])
        self.matrices.flags.writeable = False
        # cumulative rows for fast sampling, last column clamped to 1
        cum = np.cumsum(arr, axis=2)
        cum[:, :, -1] = 1.0
        self._cum = cum

    @property
    def z_size(self) -> int:
        return self.matrices.shape[0]

    @property
    def x_size(self) -> int:
        return self.matrices.shape[1]

    @property
    def y_size(self) -> int:
        return self.matrices.shape[2]

    def channel_for_state(self, z: int) -> Channel:
        return Channel(self.matrices[z])

    def max_rate(self) -> float:
        """log2 min(|X|, |Y|), the largest capacity any state can offer."""
        return float(np.log2(min(self.x_size, self.y_size)))

    def save(self, target) -> None:
        """Text format: header 'x_size y_size z_size', then one matrix per state."""
        closing = False
        if isinstance(target, (str, bytes)):
            target = open(target, "w")
            closing = True
        try:
            target.write(f"{self.x_size} {self.y_size} {self.z_size}\n")
            for z in range(self.z_size):
                save_matrix_text(target, self.matrices[z])
        finally:
            if closing:
                target.close()

    @classmethod
    def load(cls, source, name: str = "file") -> "ChannelFamily":
        if isinstance(source, (str, bytes)):
            with open(source) as fh:
                return cls.load(fh, name=name)
        header = source.readline().split()
        if len(header) != 3:
            raise ValueError("family file must start with 'x_size y_size z_size'")
        x_size, y_size, z_size = (int(v) for v in header)
        flat = load_matrix_text(source)
        if flat.shape != (z_size * x_size, y_size):
            raise ValueError(
                f"expected {z_size} matrices of shape ({x_size}, {y_size})"
            )
        return cls(name, flat.reshape(z_size, x_size, y_size))


def family_mod_additive() -> ChannelFamily:
    """Binary channel y = x XOR z; state 1 flips the input bit."""
    return ChannelFamily(
        "mod-additive",
        [
            [[1.0, 0.0], [0.0, 1.0]],  # z = 0: identity
            [[0.0, 1.0], [1.0, 0.0]],  # z = 1: flip
        ],
    )


def family_z_or() -> ChannelFamily:
    """Binary channel y = x OR z; state 1 forces the output to 1."""
    return ChannelFamily(
        "z-or",
        [
            [[1.0, 0.0], [0.0, 1.0]],  # z = 0: identity
            [[0.0, 1.0], [0.0, 1.0]],  # z = 1: constant 1
        ],
    )


BUILTIN_FAMILIES = {
    "mod-additive": family_mod_additive,
    "z-or": family_z_or,
}


def state_averaged_channel(family: ChannelFamily, states) -> Channel:
    """The per-symbol average (1/N) sum_i W(.|., z_i).

    Depends on the state sequence only through its type.
    """
    z = np.asarray(states)
    if z.size < 1:
        raise ValueError("state sequence must be nonempty")
    if z.min() < 0 or z.max() >= family.z_size:
        raise ValueError("state sequence contains unknown state symbols")
    counts = np.bincount(z, minlength=family.z_size).astype(np.float64)
    avg = np.tensordot(counts / z.size, family.matrices, axes=(0, 0))
    return Channel(avg)


def channel_from_state_type(family: ChannelFamily, q) -> Channel:
    """The channel sum_z W(.|., z) q(z) for a state distribution q."""
    qv = np.asarray(getattr(q, "probs", q), dtype=np.float64)
    if qv.size != family.z_size:
        raise ValueError(
            f"state distribution has {qv.size} entries, family has {family.z_size} states"
        )
    avg = np.tensordot(qv, family.matrices, axes=(0, 0))
    return Channel(avg)


def z_channel(q: float) -> Channel:
    """Binary Z-channel: input 0 flips to 1 with probability q, input 1 is stuck."""
    return Channel([[1.0 - q, q], [0.0, 1.0]])


def z_channel_mi(p_one: float, q: float) -> float:
    """Closed-form I(P, W) for the Z-channel with P(X=1) = p_one.

    For a channel where symbol 1 is stuck (W(1|1) = 1) and symbol 0 flips
    with probability q: with a the weight on the transparent symbol,
    I = h(a) - (1 - a + a q) h(a q / (1 - a + a q)).
    """
    a = 1.0 - p_one
    s = 1.0 - a + a * q
    if s <= 0.0:
        return 0.0
    return binary_entropy(a) - s * binary_entropy(a * q / s)


def generate_state_sequence(kind: str, params, length: int, rng=None) -> np.ndarray:
    """Generate a length-N state sequence.

    kinds:
      - ``iid``: params is a distribution over Z; needs ``rng``.
      - ``piecewise``: params is a list of segments ``(fraction, z)`` with a
        constant state, or ``(fraction, dist)`` sampled iid inside the
        segment; fractions must sum to 1.  Segment boundaries fall at
        ceil(N * cumulative_fraction).
      - ``periodic``: params is a pattern tiled to length N.
      - ``exact_type``: params is a distribution; the output is the sorted
        sequence whose counts are the largest-remainder rounding of N*Q.
      - ``file``: params is a path; see :func:`load_state_sequence`.
    """
    if length < 1:
        raise ValueError("length must be at least 1")
    if kind == "iid":
        q = np.asarray(getattr(params, "probs", params), dtype=np.float64)
        Distribution(q)
        if rng is None:
            raise ValueError("iid state generation needs an rng")
        return rng.choice(q.size, size=length, p=q).astype(np.int64)
    if kind == "piecewise":
        fracs = [seg[0] for seg in params]
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ValueError("piecewise segment fractions must sum to 1")
        out = np.empty(length, dtype=np.int64)
        start = 0
        cum = 0.0
        for frac, val in params:
            cum += frac
            end = min(length, int(np.ceil(length * cum - 1e-9)))
            if np.isscalar(val) or isinstance(val, (int, np.integer)):
                out[start:end] = int(val)
            else:
                q = np.asarray(getattr(val, "probs", val), dtype=np.float64)
                if rng is None:
                    raise ValueError("iid piecewise segment needs an rng")
                out[start:end] = rng.choice(q.size, size=end - start, p=q)
            start = end
        out[start:] = out[start - 1] if start > 0 else 0
        return out
    if kind == "periodic":
        pattern = np.asarray(params, dtype=np.int64)
        if pattern.size < 1:
            raise ValueError("periodic pattern must be nonempty")
        reps = int(np.ceil(length / pattern.size))
        return np.tile(pattern, reps)[:length]
    if kind == "exact_type":
        q = np.asarray(getattr(params, "probs", params), dtype=np.float64)
        Distribution(q)
        counts = largest_remainder_counts(q, length)
        return np.repeat(np.arange(q.size, dtype=np.int64), counts)
    if kind == "file":
        z = load_state_sequence(params)
        if z.size < length:
            raise ValueError(f"state file has {z.size} symbols, need {length}")
        return z[:length]
    raise ValueError(f"unknown state sequence kind {kind!r}")


def largest_remainder_counts(q, total: int) -> np.ndarray:
    """Apportion ``total`` into integer counts proportional to q.

    Floors N*q then hands the remaining units to the largest remainders
    (ties to the lower index), so counts are within one of N*q.
    """
    qv = np.asarray(getattr(q, "probs", q), dtype=np.float64)
    raw = qv * total
    counts = np.floor(raw).astype(np.int64)
    short = total - counts.sum()
    if short > 0:
        remainders = raw - counts
        order = np.lexsort((np.arange(qv.size), -remainders))
        counts[order[:short]] += 1
    return counts


def save_state_sequence(target, states, run_length: bool = False) -> None:
    """One symbol per line, or 'count symbol' pairs when run_length is set."""
    closing = False
    if isinstance(target, (str, bytes)):
        target = open(target, "w")
        closing = True
    try:
        z = np.asarray(states, dtype=np.int64)
        if not run_length:
            for v in z:
                target.write(f"{int(v)}\n")
            return
        boundaries = np.flatnonzero(np.diff(z)) + 1
        starts = np.concatenate(([0], boundaries))
        ends = np.concatenate((boundaries, [z.size]))
        for s, e in zip(starts, ends):
            target.write(f"{e - s} {int(z[s])}\n")
    finally:
        if closing:
            target.close()


def load_state_sequence(source) -> np.ndarray:
    """Read a state sequence file (one symbol per line or 'count symbol')."""
    if isinstance(source, (str, bytes)):
        with open(source) as fh:
            return load_state_sequence(fh)
    chunks = []
    for lineno, line in enumerate(source, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) == 1:
            chunks.append(np.array([int(parts[0])], dtype=np.int64))
        elif len(parts) == 2:
            count, symbol = int(parts[0]), int(parts[1])
            if count < 1:
                raise ValueError(f"line {lineno}: run length must be positive")
            chunks.append(np.full(count, symbol, dtype=np.int64))
        else:
            raise ValueError(f"line {lineno}: expected 'symbol' or 'count symbol'")
    if not chunks:
        raise ValueError("empty state sequence file")
    return np.concatenate(chunks)


class ChannelSession:
    """Streaming access to the forward channel for one blocklength.

    Single consumer; the cursor only advances.  Sampling uses the provided
    generator so replays with the same seed are identical.
    """

    def __init__(self, family: ChannelFamily, states, rng: np.random.Generator):
        self.family = family
        self.states = np.asarray(states, dtype=np.int64)
        if self.states.size < 1:
            raise ValueError("state sequence must be nonempty")
        if self.states.min() < 0 or self.states.max() >= family.z_size:
            raise ValueError("state sequence contains unknown state symbols")
        self.rng = rng
        self.cursor = 0

    @property
    def total_len(self) -> int:
        return self.states.size

    @property
    def remaining(self) -> int:
        return self.states.size - self.cursor

    def transmit(self, x) -> np.ndarray:
        """Send symbols through W(.|x_i, z_i) at the current cursor."""
        xa = np.asarray(x, dtype=np.int64)
        if xa.size > self.remaining:
            raise ValueError(
                f"blocklength exhausted: {xa.size} symbols requested, "
                f"{self.remaining} remaining"
            )
        z = self.states[self.cursor : self.cursor + xa.size]
        cum = self.family._cum[z, xa]  # (len, y_size)
        u = self.rng.random(xa.size)
        y = (u[:, None] < cum).argmax(axis=1)
        self.cursor += xa.size
        return y.astype(np.int64)
