"""Exhaustive small-instance verifiers for the core primitives.

Each oracle re-derives an answer by brute force along an independent code
path and reports any disagreement with the library implementation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .composition import (
    CompositionSpec,
    composition_count,
    enumerate_compositions,
    log_composition_set_size,
    sample_fixed_composition,
    type_of,
)
from .info import Channel, channel_capacity, mutual_information
from .channels import z_channel
from .rateless import build_codebook, mmi_decode


@dataclass
class OracleReport:
    name: str
    checks: int = 0
    disagreements: int = 0
    details: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.disagreements == 0

    def record(self, ok: bool, detail: str = "") -> None:
        self.checks += 1
        if not ok:
            self.disagreements += 1
            self.details.append(detail)

    def __str__(self) -> str:
        status = "ok" if self.ok else "FAIL"
        lines = [f"oracle {self.name}: {status} ({self.checks} checks, {self.disagreements} disagreements)"]
        lines.extend("  " + d for d in self.details[:20])
        return "\n".join(lines)


def _brute_mmi_score(x_seq, y_seq) -> float:
    """Joint-type MI via H(X) + H(Y) - H(X,Y), counted with plain dicts."""
    n = len(x_seq)
    cx, cy, cxy = {}, {}, {}
    for a, b in zip(x_seq, y_seq):
        cx[a] = cx.get(a, 0) + 1
        cy[b] = cy.get(b, 0) + 1
        cxy[(a, b)] = cxy.get((a, b), 0) + 1

    def ent(counts):
        total = sum(counts.values())
        return -sum((c / total) * math.log2(c / total) for c in counts.values())

    return ent(cx) + ent(cy) - ent(cxy)


def oracle_mmi(seed: int = 1) -> OracleReport:
    """Cross-check mmi_decode against a brute-force scorer on all outputs.

    For every codebook instance with message_bits <= 3, code_len <= 6 and
    a single chunk, every possible binary received sequence is decoded
    both ways; the selected indices must agree.
    """
    report = OracleReport("mmi")
    instances = [
        (2, 4, CompositionSpec((2, 2))),
        (3, 6, CompositionSpec((3, 3))),
        (3, 6, CompositionSpec((4, 2))),
    ]
    for bits, c, comp in instances:
        cb = build_codebook(1, c, bits, comp, seed=(seed, bits, c))
        for y_int in range(2**c):
            y = np.array([(y_int >> i) & 1 for i in range(c)], dtype=np.int64)
            got = mmi_decode(cb, y, 1)
            best_idx, best = 0, -1.0
            for m in range(cb.num_codewords):
                s = _brute_mmi_score(cb.codeword(m).tolist(), y.tolist())
                if s > best + 1e-12:
                    best, best_idx = s, m
            report.record(
                got == best_idx,
                f"k={bits} c={c} y={y_int}: decode {got} vs brute {best_idx}",
            )
    return report


def oracle_capacity(resolution: float = 1e-3) -> OracleReport:
    """Cross-check Blahut-Arimoto against a 1-D input-distribution grid.

    Applies to binary-input channels: the grid walks P(X=1) over [0, 1]
    at the given resolution and the grid maximum must match the iterative
    capacity within the resolution.
    """
    report = OracleReport("capacity")
    channels = [
        ("bsc_0.11", Channel.bsc(0.11)),
        ("bsc_0.3", Channel.bsc(0.3)),
        ("z_0.1", z_channel(0.1)),
        ("z_0.3", z_channel(0.3)),
        ("identity", Channel.identity(2)),
        ("asym_3out", Channel([[0.7, 0.2, 0.1], [0.05, 0.15, 0.8]])),
    ]
    grid = np.arange(0.0, 1.0 + resolution / 2, resolution)
    for name, ch in channels:
        if ch.num_inputs != 2:
            raise ValueError("capacity oracle handles binary-input channels")
        best = max(mutual_information([1.0 - p, p], ch) for p in grid)
        val, _ = channel_capacity(ch, tol=1e-9)
        report.record(
            abs(val - best) <= resolution,
            f"{name}: iterative {val:.6f} vs grid {best:.6f}",
        )
    return report


def oracle_types(max_n: int = 12, draws: int = 100_000, seed: int = 7) -> OracleReport:
    """Enumerate small composition sets; verify counting and sampling.

    Counting: the enumeration size must equal the exact multinomial and
    2**log_composition_set_size.  Sampling: a chi-square test over the
    fully enumerated (2,2) set with 1e5 draws must not reject uniformity
    at the 0.001 level; every draw's type must equal the spec.
    """
    from scipy.stats import chisquare

    report = OracleReport("types")
    specs = [
        CompositionSpec((2, 2)),
        CompositionSpec((3, 3)),
        CompositionSpec((5, 1)),
        CompositionSpec((4, 4, 4)),
        CompositionSpec((2, 2, 2)),
        CompositionSpec((6, 6)),
    ]
    for spec in specs:
        if spec.length > max_n:
            continue
        seqs = list(enumerate_compositions(spec))
        exact = composition_count(spec)
        report.record(
            len(seqs) == exact,
            f"{spec.counts}: enumerated {len(seqs)} vs multinomial {exact}",
        )
        report.record(
            len(set(seqs)) == len(seqs), f"{spec.counts}: enumeration has duplicates"
        )
        log_size = log_composition_set_size(spec)
        report.record(
            abs(log_size - math.log2(exact)) < 1e-9,
            f"{spec.counts}: log size {log_size} vs log2({exact})",
        )

    spec = CompositionSpec((2, 2))
    seqs = {s: i for i, s in enumerate(enumerate_compositions(spec))}
    rng = np.random.Generator(np.random.PCG64(seed))
    counts = np.zeros(len(seqs), dtype=np.int64)
    type_ok = True
    for _ in range(draws):
        s = sample_fixed_composition(spec, rng)
        type_ok &= type_of(s, 2) == spec
        counts[seqs[tuple(int(v) for v in s)]] += 1
    report.record(type_ok, "sample_fixed_composition produced a wrong type")
    pvalue = chisquare(counts).pvalue
    report.record(pvalue > 0.001, f"uniformity chi-square p={pvalue:.5f} <= 0.001")
    return report


def run_all() -> list:
    return [oracle_mmi(), oracle_capacity(), oracle_types()]
