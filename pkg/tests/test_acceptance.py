"""Acceptance gate: every pinned criterion at its stated tolerance.

Criteria 1-3 run the desk-scale operating point (payload 512 bits, chunk
1024, 64 pilots, margin 0.08, give-up 0.05, N = 2e6, 50 trials) against
fixed targets; 4-9 are structural and statistical suites over the same
transcripts plus brute-force verifiers.  Each test prints one
"CRITERION n: PASS/FAIL" line with the measured values before asserting,
so a red criterion still leaves a complete report.

Note on expectations: criteria 1-3 pin both the operating point and the
targets.  At this operating point the round length quantizes to two
chunks (the per-round payload is only ~0.53 of one chunk's code capacity),
which caps T/N near 0.25, and the 64-pilot estimate is noisy enough to
fire premature decodes; the measured rate and decode-error frequencies
therefore miss these targets, and the suite reports that honestly.  The
same strategy at the blocklength-scaled operating point passes the same
targets (see TestTheoremRegimeEvidence in test_protocol.py).

Run with `pytest tests/test_acceptance.py -v -s` to see the report lines.
"""

import math
import time

import numpy as np
import pytest

from estimation_suites import chunk_estimate_suite, contiguous_run_suite, round_mi_suite
from ratelink.channels import state_averaged_channel, z_channel_mi
from ratelink.experiment import ExperimentConfig, run_experiment
from ratelink.info import (
    binary_entropy,
    channel_capacity,
    entropy,
    entropy_continuity_bound,
    mi_continuity_bound,
    mutual_information,
)
from ratelink.oracles import oracle_capacity, oracle_mmi, oracle_types
from ratelink.protocol import FeedbackMessage, _generator, max_round_chunks, min_decode_chunks

pytestmark = pytest.mark.acceptance

SEED = 20260809
TRIALS = 50
N = 2_000_000

OPERATING_POINT = dict(
    total_len=N,
    trials=TRIALS,
    seed=SEED,
    mode="direct",
    bits_per_round=512,
    chunk_len=1024,
    train_per_chunk=64,
    decode_margin=0.08,
    giveup_threshold=0.05,
)

BSC_TARGET_MI = 1.0 - binary_entropy(0.11)  # = 0.500084...


def report(num: int, ok: bool, detail: str) -> None:
    print(f"CRITERION {num}: {'PASS' if ok else 'FAIL'} - {detail}")


@pytest.fixture(scope="module")
def out_root(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


@pytest.fixture(scope="module")
def crit1(out_root):
    cfg = ExperimentConfig(
        name="accept_bsc011",
        family="mod-additive",
        state_kind="iid",
        state_params=(0.89, 0.11),
        target_rate=0.35,
        out_dir=str(out_root / "crit1"),
        **OPERATING_POINT,
    )
    return run_experiment(cfg, keep_transcripts=True)


@pytest.fixture(scope="module")
def crit2(out_root):
    cfg = ExperimentConfig(
        name="accept_piecewise",
        family="mod-additive",
        state_kind="piecewise",
        state_params=[(0.5, 0), (0.5, 1)],
        target_rate=0.35,
        out_dir=str(out_root / "crit2"),
        **OPERATING_POINT,
    )
    return run_experiment(cfg, keep_transcripts=True)


@pytest.fixture(scope="module")
def crit3(out_root):
    results = {}
    for q in (0.1, 0.3):
        cfg = ExperimentConfig(
            name=f"accept_zchan_q{q:0.1f}".replace(".", "_"),
            family="z-or",
            state_kind="iid",
            state_params=(1.0 - q, q),
            target_rate=0.35,
            out_dir=str(out_root / "crit3"),
            **OPERATING_POINT,
        )
        results[q] = run_experiment(cfg, keep_transcripts=True)
    return results


def all_results(crit1, crit2, crit3):
    return [crit1, crit2] + list(crit3.values())


def test_criterion_1_bsc_rate_adaptation(crit1):
    stats = crit1.stats
    ok = (
        stats.mean_rate >= BSC_TARGET_MI - 0.15
        and stats.eps_dec_hat <= 0.05
        and stats.eps_ach_hat <= 0.05
    )
    report(
        1,
        ok,
        f"flip fraction 0.11: mean rate {stats.mean_rate:.4f} (target >= {BSC_TARGET_MI - 0.15:.3f}), "
        f"eps_dec_hat {stats.eps_dec_hat:.3f} (<= 0.05), eps_ach_hat {stats.eps_ach_hat:.3f} (<= 0.05)",
    )
    assert stats.mean_rate >= BSC_TARGET_MI - 0.15
    assert stats.eps_dec_hat <= 0.05
    assert stats.eps_ach_hat <= 0.05


def test_criterion_2_piecewise_beats_empirical_capacity(crit2):
    fam = crit2.config.load_family()
    states = crit2.config.state_sequence()
    cap, _ = channel_capacity(state_averaged_channel(fam, states), tol=1e-9)
    stats = crit2.stats
    ok = stats.mean_rate >= 0.6 and cap <= 1e-9
    report(
        2,
        ok,
        f"half-clean/half-flipped: mean rate {stats.mean_rate:.4f} (target >= 0.6) while "
        f"whole-sequence capacity {cap:.2e} (= 0 within 1e-9)",
    )
    assert cap <= 1e-9
    assert stats.mean_rate >= 0.6


def test_criterion_3_z_channel_tracking(crit3):
    os_ok = True
    details = []
    for q, res in crit3.items():
        target = z_channel_mi(0.5, q)
        stats = res.stats
        part_ok = stats.mean_rate >= target - 0.15 and stats.eps_dec_hat <= 0.05
        os_ok &= part_ok
        details.append(
            f"q={q}: mean rate {stats.mean_rate:.4f} (target >= {target - 0.15:.4f}), "
            f"eps_dec_hat {stats.eps_dec_hat:.3f}"
        )
    report(3, os_ok, "; ".join(details))
    for q, res in crit3.items():
        target = z_channel_mi(0.5, q)
        assert res.stats.mean_rate >= target - 0.15
        assert res.stats.eps_dec_hat <= 0.05


def test_criterion_4_feedback_rate_bound(crit1, crit2, crit3):
    checked = 0
    violations = 0
    for res in all_results(crit1, crit2, crit3):
        b = res.params.chunk_len
        n = res.params.total_len
        for tr in res.transcripts:
            checked += 1
            # integer form of feedback_bits / N <= 2 / b, equality allowed
            if tr.feedback_bits_used * b > 2 * n:
                violations += 1
    ok = violations == 0 and checked == 4 * TRIALS
    report(
        4,
        ok,
        f"{checked} transcripts, {violations} above 2/b = {2 / 1024:.5f} bits/use",
    )
    assert violations == 0
    assert checked == 4 * TRIALS


def test_criterion_5_round_length_bounds(crit1, crit2, crit3):
    rounds = 0
    violations = 0
    for res in all_results(crit1, crit2, crit3):
        cap = max_round_chunks(res.params)
        floor = math.ceil(min_decode_chunks(res.params, 1.0))  # binary alphabets
        for tr in res.transcripts:
            for rec in tr.records:
                rounds += 1
                if rec.chunks_used > cap:
                    violations += 1
                if rec.outcome is FeedbackMessage.DECODED and rec.chunks_used < floor:
                    violations += 1
    ok = violations == 0
    report(5, ok, f"{rounds} rounds checked against the chunk-count bounds, {violations} violations")
    assert violations == 0


def test_criterion_6_information_bound_suites():
    rng = _generator(606)
    tol = 1e-9
    violations = {"entropy": 0, "mi": 0, "concavity": 0, "convexity": 0}
    for _ in range(10_000):
        size = int(rng.integers(2, 6))
        p = rng.dirichlet(np.ones(size))
        lam = rng.uniform(0, 0.5)
        q = (1 - lam) * p + lam * rng.dirichlet(np.ones(size))
        eps = np.abs(p - q).max()
        if abs(entropy(p) - entropy(q)) > entropy_continuity_bound(eps, size) + tol:
            violations["entropy"] += 1
    for _ in range(10_000):
        nx = int(rng.integers(2, 4))
        ny = int(rng.integers(2, 5))
        p = rng.dirichlet(np.ones(nx))
        w = rng.dirichlet(np.ones(ny), size=nx)
        lam = rng.uniform(0, 0.5)
        v = (1 - lam) * w + lam * rng.dirichlet(np.ones(ny), size=nx)
        eps = np.abs(w - v).max()
        if abs(mutual_information(p, w) - mutual_information(p, v)) > mi_continuity_bound(eps, ny) + tol:
            violations["mi"] += 1
    for _ in range(10_000):
        x = rng.uniform(0, 0.5)
        eps = rng.uniform(0, 0.5 - x)
        if binary_entropy(x + eps) - binary_entropy(x) > binary_entropy(eps) + tol:
            violations["concavity"] += 1
    for _ in range(10_000):
        nx = int(rng.integers(2, 4))
        ny = int(rng.integers(2, 4))
        p = rng.dirichlet(np.ones(nx))
        w = rng.dirichlet(np.ones(ny), size=nx)
        v = rng.dirichlet(np.ones(ny), size=nx)
        lam = rng.uniform()
        mixed = mutual_information(p, lam * w + (1 - lam) * v)
        if mixed > lam * mutual_information(p, w) + (1 - lam) * mutual_information(p, v) + tol:
            violations["convexity"] += 1
    ok = all(v == 0 for v in violations.values())
    report(6, ok, f"10^4 instances per suite, violations {violations}")
    assert all(v == 0 for v in violations.values())


def test_criterion_7_oracle_equivalence():
    start = time.time()
    reports = [oracle_mmi(), oracle_capacity(resolution=1e-3), oracle_types(max_n=12)]
    elapsed = time.time() - start
    disagreements = sum(r.disagreements for r in reports)
    ok = disagreements == 0 and elapsed <= 120
    report(
        7,
        ok,
        f"mmi/capacity/types: {sum(r.checks for r in reports)} checks, "
        f"{disagreements} disagreements in {elapsed:.1f}s (<= 120s)",
    )
    assert disagreements == 0
    assert elapsed <= 120


def test_criterion_8_estimation_concentration():
    # Chunk-level pilot estimates, iid and adversarial contiguous noise.
    chunk_bound = 1 - 4 * math.exp(-2 * 500 * 0.05**2)
    freq_whole, freq_code, freq_pos = chunk_estimate_suite(
        trials=10_000, chunk_len=16_000, train_count=1000, flip_prob=0.11,
        rng=_generator(801),
    )
    adv_pos, adv_est = contiguous_run_suite(
        trials=10_000, chunk_len=16_000, train_count=1000, flip_frac=0.11,
        rng=_generator(802),
    )
    # Round-level estimation error event at the pinned sizes.
    viol_code, viol_whole, chain = round_mi_suite(
        rounds=10_000, chunks_per_round=8, chunk_len=8192, train_count=512,
        rng=_generator(803),
    )
    adv_code, adv_whole, adv_chain = round_mi_suite(
        rounds=10_000, chunks_per_round=8, chunk_len=8192, train_count=512,
        rng=_generator(804), adversarial=True,
    )
    ok = (
        min(freq_whole, freq_code, freq_pos, adv_pos, adv_est) >= chunk_bound
        and max(viol_code, viol_whole, adv_code, adv_whole) <= 0.01
        and chain == 0
        and adv_chain == 0
    )
    report(
        8,
        ok,
        f"chunk est ok-freqs {freq_whole:.4f}/{freq_code:.4f}/{freq_pos:.4f} "
        f"adv {adv_pos:.4f}/{adv_est:.4f} (>= {chunk_bound:.4f}); "
        f"round MI viol {viol_code:.4f}/{viol_whole:.4f} adv {adv_code:.4f}/{adv_whole:.4f} "
        f"(<= 0.01); continuity-chain violations {chain + adv_chain}",
    )
    assert freq_whole >= chunk_bound and freq_code >= chunk_bound and freq_pos >= chunk_bound
    assert adv_pos >= chunk_bound and adv_est >= chunk_bound
    assert viol_code <= 0.01 and viol_whole <= 0.01
    assert adv_code <= 0.01 and adv_whole <= 0.01
    assert chain == 0 and adv_chain == 0


def test_criterion_9_deterministic_reproduction(crit1, out_root):
    cfg = ExperimentConfig(
        name="accept_bsc011",
        family="mod-additive",
        state_kind="iid",
        state_params=(0.89, 0.11),
        target_rate=0.35,
        out_dir=str(out_root / "crit9"),
        **OPERATING_POINT,
    )
    rerun = run_experiment(cfg)
    first = open(crit1.csv_path, "rb").read()
    second = open(rerun.csv_path, "rb").read()
    ok = first == second
    report(9, ok, f"repeated run CSV bytes identical: {ok} ({len(first)} bytes)")
    assert first == second
