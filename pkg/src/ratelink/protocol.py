"""Round-based limited-feedback strategy and its rate/error accounting.

The encoder sends one k-bit payload per round as successive chunks of a
randomized rateless codeword with interleaved pilots.  After each chunk
the decoder sends one of three 2-bit feedback messages; rounds end on
DECODED (payload delivered, next k bits follow) or BAD NOISE (payload
retried next round), or are truncated when the blocklength runs out.

The encoder and decoder share only a master seed: per-round codebooks,
per-chunk pilot plans, and decode-outcome sampling all derive their
generators from (master_seed, round, purpose[, chunk]).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .channels import ChannelFamily, ChannelSession
from .composition import CompositionSpec
from .info import mutual_information
from .rateless import RatelessCodebook, VirtualRatelessCode, build_codebook, mmi_decode
from .training import (
    ChannelEstimate,
    estimate_chunk_channel,
    estimate_round_channel,
    interleave_chunk,
    deinterleave_chunk,
    select_training_plan,
)

FEEDBACK_BITS_PER_CHUNK = 2

# Sub-seed purposes under (master_seed, round_index, purpose, ...).
_PURPOSE_CODEBOOK = 0
_PURPOSE_TRAINING = 1
_PURPOSE_DECODE = 2


class FeedbackMessage(Enum):
    """The three feedback messages and their fixed 2-bit wire codes."""

    BAD_NOISE = "00"
    DECODED = "01"
    KEEP_GOING = "10"

    @property
    def wire(self) -> str:
        return self.value


@dataclass(frozen=True)
class ProtocolParams:
    """Operating point of one session.

    ``input_composition`` is the exact per-chunk code composition over the
    input alphabet; its length must equal ``chunk_len - train_per_chunk``.
    """

    total_len: int
    bits_per_round: int
    chunk_len: int
    train_per_chunk: int
    decode_margin: float
    giveup_threshold: float
    input_composition: CompositionSpec
    master_seed: object = 0
    codebook_mode: str = "auto"  # "explicit", "virtual", or "auto"
    max_explicit_bits: int = 14

    def __post_init__(self):
        if not self.train_per_chunk < self.chunk_len <= self.total_len:
            raise ValueError("need train_per_chunk < chunk_len <= total_len")
        if self.bits_per_round < 1:
            raise ValueError("bits_per_round must be at least 1")
        x_size = self.input_composition.alphabet_size
        if self.train_per_chunk % x_size != 0:
            raise ValueError("alphabet size must divide train_per_chunk")
        if self.input_composition.length != self.code_len:
            raise ValueError(
                f"input composition length {self.input_composition.length} must "
                f"equal chunk_len - train_per_chunk = {self.code_len}"
            )
        if self.decode_margin <= 0:
            raise ValueError("decode_margin must be positive")
        if self.giveup_threshold <= 0:
            raise ValueError("giveup_threshold must be positive")
        if self.codebook_mode not in ("explicit", "virtual", "auto"):
            raise ValueError("codebook_mode must be explicit, virtual, or auto")

    @property
    def code_len(self) -> int:
        return self.chunk_len - self.train_per_chunk

    @property
    def x_size(self) -> int:
        return self.input_composition.alphabet_size

    def input_fractions(self) -> np.ndarray:
        return self.input_composition.fractions()

    def uses_explicit_codebook(self) -> bool:
        if self.codebook_mode == "explicit":
            return True
        if self.codebook_mode == "virtual":
            return False
        return self.bits_per_round <= self.max_explicit_bits


def max_round_chunks(params: ProtocolParams) -> int:
    """Hard cap on chunks per round: ceil(k / (code_len * giveup_threshold)).

    Once the per-chunk empirical rate falls to the give-up threshold the
    round must have ended one way or the other.
    """
    import math

    return max(1, math.ceil(params.bits_per_round / (params.code_len * params.giveup_threshold)))


def min_decode_chunks(params: ProtocolParams, max_rate: float) -> float:
    """Lower bound on the chunk count of any decoded round.

    ``max_rate`` is log2 min(|X|, |Y|); no estimate can exceed it, so a
    decode after M chunks requires k / (code_len * M) < max_rate.
    """
    if max_rate <= 0:
        raise ValueError("max_rate must be positive")
    return params.bits_per_round / (params.code_len * max_rate)


def _decide(mi_estimate: float, chunks_so_far: int, params: ProtocolParams) -> FeedbackMessage:
    gap = mi_estimate - params.decode_margin
    empirical_rate = params.bits_per_round / (params.code_len * chunks_so_far)
    # Both comparisons strict; the decode branch wins where they overlap.
    if gap > empirical_rate:
        return FeedbackMessage.DECODED
    if gap < params.giveup_threshold:
        return FeedbackMessage.BAD_NOISE
    return FeedbackMessage.KEEP_GOING


def decoder_decision(
    round_estimate: ChannelEstimate, chunks_so_far: int, params: ProtocolParams
) -> FeedbackMessage:
    """Decode / give up / keep going, from the round channel estimate."""
    if chunks_so_far < 1:
        raise ValueError("chunks_so_far must be at least 1")
    mi = mutual_information(params.input_fractions(), round_estimate.matrix)
    return _decide(mi, chunks_so_far, params)


@dataclass(frozen=True, slots=True)
class RoundRecord:
    """Everything observable about one round."""

    index: int
    chunks_used: int
    outcome: object  # FeedbackMessage or None for a truncated round
    mi_estimate: float
    decoded_index: object  # int or None
    correct: object  # bool or None
    start: int
    end: int
    wire: str  # comma-separated 2-bit feedback codes, one per chunk


@dataclass(slots=True)
class Transcript:
    """Session result: per-round records plus rate/error accounting."""

    records: list
    decoded_bits: int  # the decoding threshold T
    message_estimate: np.ndarray
    feedback_bits_used: int
    total_len: int
    truncated_tail: int

    @property
    def achieved_rate(self) -> float:
        return self.decoded_bits / self.total_len

    @property
    def bad_noise_rounds(self) -> int:
        return sum(1 for r in self.records if r.outcome is FeedbackMessage.BAD_NOISE)

    @property
    def decode_errors(self) -> int:
        return sum(1 for r in self.records if r.correct is False)

    def any_decode_error(self) -> bool:
        return any(r.correct is False for r in self.records)

    def to_text(self) -> str:
        lines = []
        for r in self.records:
            outcome = r.outcome.name if r.outcome is not None else "TRUNCATED"
            idx = str(r.decoded_index) if r.decoded_index is not None else "-"
            corr = "-" if r.correct is None else ("1" if r.correct else "0")
            lines.append(
                f"round r={r.index} M={r.chunks_used} outcome={outcome} "
                f"wire={r.wire} mi_estimate={r.mi_estimate:.9g} "
                f"decoded_index={idx} correct={corr} start={r.start} end={r.end}"
            )
        lines.append(
            f"summary T={self.decoded_bits} rate={self.achieved_rate:.9g} "
            f"feedback_bits={self.feedback_bits_used} rounds={len(self.records)} "
            f"bad_noise_rounds={self.bad_noise_rounds} truncated_tail={self.truncated_tail}"
        )
        return "\n".join(lines) + "\n"


def _entropy_tuple(seed) -> tuple:
    return seed if isinstance(seed, tuple) else (seed,)


def _generator(*entropy) -> np.random.Generator:
    flat = []
    for part in entropy:
        flat.extend(_entropy_tuple(part))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(tuple(flat))))


def code_for_round(params: ProtocolParams, round_index: int):
    """The round's rateless code, drawn via common randomness."""
    seed = tuple(_entropy_tuple(params.master_seed)) + (round_index, _PURPOSE_CODEBOOK)
    m_star = max_round_chunks(params)
    if params.uses_explicit_codebook():
        return build_codebook(
            m_star,
            params.code_len,
            params.bits_per_round,
            params.input_composition,
            seed,
        )
    return VirtualRatelessCode(
        m_star, params.code_len, params.bits_per_round, params.input_composition, seed
    )


def bits_to_index(bits) -> int:
    arr = np.asarray(bits).astype(np.uint8)
    return int("".join("1" if b else "0" for b in arr), 2) if arr.size else 0


def index_to_bits(index: int, width: int) -> np.ndarray:
    out = np.empty(width, dtype=np.uint8)
    for i in range(width - 1, -1, -1):
        out[i] = index & 1
        index >>= 1
    return out


def run_round(code, message_index: int, session: ChannelSession, params: ProtocolParams,
              round_index: int):
    """Run one round; returns its :class:`RoundRecord`.

    Loops chunks until the decision rule fires, the chunk budget is
    exhausted (forced BAD NOISE, keeping the round-length cap a hard
    invariant), or the blocklength runs out (truncated, no decode).
    """
    b = params.chunk_len
    y_size = session.family.y_size
    m_star = max_round_chunks(params)
    start = session.cursor
    estimates = []
    x_chunks = []
    y_chunks = []
    wire = []
    outcome = None
    mi = float("nan")
    chunks = 0
    for n in range(1, m_star + 1):
        if session.remaining < b:
            break  # truncated round: no decode, remainder stays unsent
        plan_rng = _generator(params.master_seed, round_index, _PURPOSE_TRAINING, n)
        plan = select_training_plan(b, params.train_per_chunk, params.x_size, plan_rng)
        code_chunk = code.encode_chunk(message_index, n)
        y = session.transmit(interleave_chunk(code_chunk, plan))
        estimates.append(estimate_chunk_channel(y, plan, y_size))
        x_chunks.append(code_chunk)
        y_chunks.append(deinterleave_chunk(y, plan))
        chunks = n
        round_est = estimate_round_channel(estimates)
        mi = mutual_information(params.input_fractions(), round_est.matrix)
        msg = _decide(mi, n, params)
        if msg is FeedbackMessage.KEEP_GOING and n == m_star:
            msg = FeedbackMessage.BAD_NOISE
        wire.append(msg.wire)
        if msg is not FeedbackMessage.KEEP_GOING:
            outcome = msg
            break

    decoded_index = None
    correct = None
    if outcome is FeedbackMessage.DECODED:
        y_code = np.concatenate(y_chunks)
        if isinstance(code, RatelessCodebook):
            decoded_index = mmi_decode(code, y_code, chunks)
            correct = decoded_index == message_index
        else:
            decode_rng = _generator(params.master_seed, round_index, _PURPOSE_DECODE)
            decoded_index, correct = code.decode_outcome(
                y_code, chunks, message_index, np.concatenate(x_chunks), decode_rng
            )
    return RoundRecord(
        index=round_index,
        chunks_used=chunks,
        outcome=outcome,
        mi_estimate=mi,
        decoded_index=decoded_index,
        correct=correct,
        start=start,
        end=session.cursor,
        wire=",".join(wire),
    )


def run_session(
    params: ProtocolParams,
    family: ChannelFamily,
    states,
    message_bits,
    noise_seed,
) -> Transcript:
    """Send as much of ``message_bits`` as the state sequence allows.

    The first k bits are retried until a round decodes, then the next k,
    and so on.  ``noise_seed`` drives only the channel; all shared
    randomness derives from ``params.master_seed``.
    """
    z = np.asarray(states, dtype=np.int64)
    if z.size != params.total_len:
        raise ValueError(f"state sequence length {z.size} != total_len {params.total_len}")
    bits = np.asarray(message_bits).astype(np.uint8)
    required = int(np.floor(params.total_len * family.max_rate()))
    if bits.size < required:
        raise ValueError(f"message needs at least {required} bits, got {bits.size}")
    session = ChannelSession(family, z, _generator(noise_seed))
    k = params.bits_per_round
    records = []
    estimate_blocks = []
    sent = 0  # decoded bits so far (the threshold T)
    round_index = 1
    while session.remaining >= params.chunk_len:
        message_index = bits_to_index(bits[sent : sent + k])
        code = code_for_round(params, round_index)
        record = run_round(code, message_index, session, params, round_index)
        records.append(record)
        if record.outcome is None:
            break  # mid-round truncation
        if record.outcome is FeedbackMessage.DECODED:
            estimate_blocks.append(index_to_bits(record.decoded_index, k))
            sent += k
        round_index += 1
    feedback_bits = FEEDBACK_BITS_PER_CHUNK * sum(r.chunks_used for r in records)
    estimate = (
        np.concatenate(estimate_blocks) if estimate_blocks else np.zeros(0, dtype=np.uint8)
    )
    return Transcript(
        records=records,
        decoded_bits=sent,
        message_estimate=estimate,
        feedback_bits_used=feedback_bits,
        total_len=params.total_len,
        truncated_tail=session.remaining,
    )


@dataclass
class ErrorStats:
    """Monte Carlo estimates over shared randomness and channel noise."""

    trials: int
    eps_dec_hat: float
    eps_ach_hat: float
    mean_rate: float
    min_rate: float
    max_rate: float
    target_rate: float
    per_trial: list  # dicts: trial, rate, errors, feedback_bits, rounds, ...
    transcripts: list  # populated when keep_transcripts is set


_TRIAL_COMMON = 0
_TRIAL_NOISE = 1
_TRIAL_MESSAGE = 2


def _run_trial(params, family, states, seed, trial, target_rate, keep_transcript):
    # One integer seed per trial keeps the result independent of scheduling.
    trial_seed = int(seed) + trial
    trial_params = dataclasses.replace(params, master_seed=(trial_seed, _TRIAL_COMMON))
    noise_seed = (trial_seed, _TRIAL_NOISE)
    msg_rng = _generator(trial_seed, _TRIAL_MESSAGE)
    n_bits = int(np.floor(params.total_len * family.max_rate()))
    message = msg_rng.integers(0, 2, size=n_bits, dtype=np.uint8)
    transcript = run_session(trial_params, family, states, message, noise_seed)
    mismatch = transcript.any_decode_error()
    row = {
        "trial": trial,
        "seed": trial_seed,
        "rate": transcript.achieved_rate,
        "decoded_bits": transcript.decoded_bits,
        "errors": transcript.decode_errors,
        "mismatch": mismatch,
        "ach_fail": bool(mismatch and target_rate >= transcript.achieved_rate),
        "feedback_bits": transcript.feedback_bits_used,
        "rounds": len(transcript.records),
        "bad_noise_rounds": transcript.bad_noise_rounds,
    }
    return row, (transcript if keep_transcript else None)


_POOL_CTX = {}


def _pool_init(params, family, states, seed, target_rate, keep):
    _POOL_CTX.update(
        params=params, family=family, states=states, seed=seed,
        target_rate=target_rate, keep=keep,
    )


def _pool_trial(trial):
    c = _POOL_CTX
    return _run_trial(
        c["params"], c["family"], c["states"], c["seed"], trial, c["target_rate"], c["keep"]
    )


def default_workers() -> int:
    import os

    env = os.environ.get("RATELINK_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def estimate_error_probs(
    params: ProtocolParams,
    family: ChannelFamily,
    states,
    trials: int,
    seed,
    target_rate: float = 0.0,
    keep_transcripts: bool = False,
    workers: int = None,
) -> ErrorStats:
    """Monte Carlo decode-error and achievability-error frequencies.

    Each trial redraws the shared randomness, the channel noise, and a
    uniform message; the state sequence stays fixed.  ``eps_dec_hat`` is
    the fraction of trials with any wrongly decoded round;
    ``eps_ach_hat`` additionally requires the achieved rate not to exceed
    ``target_rate``.  Trials run in parallel but results are merged in
    trial order, so the output is schedule-independent.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if workers is None:
        workers = min(default_workers(), trials)
    results = []
    if workers <= 1:
        for trial in range(trials):
            results.append(
                _run_trial(params, family, states, seed, trial, target_rate, keep_transcripts)
            )
    else:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(
            max_workers=workers,
            initializer=_pool_init,
            initargs=(params, family, states, seed, target_rate, keep_transcripts),
        ) as pool:
            results = list(pool.map(_pool_trial, range(trials), chunksize=1))
    rows = [r for r, _ in results]
    transcripts = [t for _, t in results if t is not None]
    rates = np.array([r["rate"] for r in rows])
    eps_dec = float(np.mean([r["mismatch"] for r in rows]))
    eps_ach = float(np.mean([r["ach_fail"] for r in rows]))
    return ErrorStats(
        trials=trials,
        eps_dec_hat=eps_dec,
        eps_ach_hat=eps_ach,
        mean_rate=float(rates.mean()),
        min_rate=float(rates.min()),
        max_rate=float(rates.max()),
        target_rate=target_rate,
        per_trial=rows,
        transcripts=transcripts,
    )
