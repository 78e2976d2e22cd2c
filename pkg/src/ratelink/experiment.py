"""Experiment configuration, parameter derivation, and metrics emission.

A configuration names a channel family, a state sequence, an operating
point (given directly or derived from the blocklength by power laws), a
trial budget, and optional pass/fail thresholds.  Running it produces a
per-trial CSV and a key=value summary with deterministic bytes for fixed
seeds.
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .channels import (
    BUILTIN_FAMILIES,
    ChannelFamily,
    generate_state_sequence,
    state_averaged_channel,
)
from .composition import CompositionSpec
from .info import mutual_information
from .protocol import (
    ErrorStats,
    ProtocolParams,
    _generator,
    estimate_error_probs,
    max_round_chunks,
)

_STATE_SEED_TAG = 3

CSV_COLUMNS = ("trial", "seed", "T", "rate", "errors", "feedback_bits", "rounds", "bad_noise_rounds")


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one experiment."""

    name: str = "experiment"
    family: str = "mod-additive"  # builtin name or "file:<path>"
    state_kind: str = "iid"
    state_params: object = (0.5, 0.5)
    total_len: int = 100_000
    trials: int = 10
    seed: int = 0
    mode: str = "direct"  # "direct" or "asymptotic"
    # direct mode operating point
    bits_per_round: int = 64
    chunk_len: int = 256
    train_per_chunk: int = 32
    # asymptotic mode exponents/scales: k ~ N^(2 g1), b ~ N^g2, t ~ N^g3
    g1: float = 0.35
    g2: float = 0.4
    g3: float = 0.2
    kappa1: float = 1.0
    kappa2: float = 1.0
    kappa3: float = 1.0
    decode_margin: float = 0.08
    giveup_threshold: float = 0.05
    input_composition: object = None  # counts tuple; default uniform over X
    target_rate: float = 0.0
    max_feedback_rate: float = None  # optional cap to check 2/b against
    # optional acceptance thresholds; exit status reflects them when set
    min_mean_rate: float = None
    max_eps_dec: float = None
    max_eps_ach: float = None
    out_dir: str = "results"
    workers: int = None

    def load_family(self) -> ChannelFamily:
        if self.family.startswith("file:"):
            return ChannelFamily.load(self.family[5:])
        try:
            return BUILTIN_FAMILIES[self.family]()
        except KeyError:
            raise ValueError(
                f"unknown family {self.family!r}; builtins: {sorted(BUILTIN_FAMILIES)}"
            ) from None

    def state_sequence(self) -> np.ndarray:
        """The experiment's fixed state sequence (shared by all trials)."""
        rng = _generator(self.seed, _STATE_SEED_TAG)
        return generate_state_sequence(self.state_kind, self.state_params, self.total_len, rng)


def parse_config(text: str, **overrides) -> ExperimentConfig:
    """Parse a flat key=value config (one pair per line, # comments)."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value")
        key, raw = (part.strip() for part in line.split("=", 1))
        values[key] = raw
    values.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_dict(values)


def load_config(path: str, **overrides) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read(), **overrides)


_INT_KEYS = {"total_len", "trials", "seed", "bits_per_round", "chunk_len", "train_per_chunk", "workers"}
_FLOAT_KEYS = {
    "g1", "g2", "g3", "kappa1", "kappa2", "kappa3", "decode_margin",
    "giveup_threshold", "target_rate", "max_feedback_rate", "min_mean_rate",
    "max_eps_dec", "max_eps_ach",
}


def config_from_dict(values: dict) -> ExperimentConfig:
    kwargs = {}
    valid = {f.name for f in dataclasses.fields(ExperimentConfig)}
    for key, raw in values.items():
        if key not in valid:
            raise ValueError(f"unknown config key {key!r}")
        if key == "state_params" and isinstance(raw, str):
            kwargs[key] = raw  # parsed lazily against state_kind below
        elif key == "input_composition" and isinstance(raw, str):
            kwargs[key] = tuple(int(v) for v in raw.split(","))
        elif key in _INT_KEYS and isinstance(raw, str):
            kwargs[key] = int(raw)
        elif key in _FLOAT_KEYS and isinstance(raw, str):
            kwargs[key] = float(raw)
        else:
            kwargs[key] = raw
    cfg = ExperimentConfig(**kwargs)
    if isinstance(cfg.state_params, str):
        cfg.state_params = parse_state_params(cfg.state_kind, cfg.state_params)
    return cfg


def parse_state_params(kind: str, text: str):
    """Textual state parameters.

    iid / exact_type: "0.89,0.11"; periodic: "0,1,1";
    piecewise: segments "0.5@0;0.5@1" (constant state) or "0.5@0.2,0.8"
    (iid inside the segment); file: a path.
    """
    if kind in ("iid", "exact_type"):
        return tuple(float(v) for v in text.split(","))
    if kind == "periodic":
        return tuple(int(v) for v in text.split(","))
    if kind == "piecewise":
        segments = []
        for part in text.split(";"):
            frac, val = part.split("@", 1)
            if "," in val:
                segments.append((float(frac), tuple(float(v) for v in val.split(","))))
            else:
                segments.append((float(frac), int(val)))
        return segments
    if kind == "file":
        return text
    raise ValueError(f"unknown state kind {kind!r}")


def derive_params(config: ExperimentConfig) -> ProtocolParams:
    """Build the session operating point from a configuration.

    Direct mode passes the configured values through (validating them);
    asymptotic mode derives k, b, t from the blocklength power laws and
    applies divisibility fixups: t is rounded up to a multiple of |X| and
    b is grown until |X| divides b - t so the uniform composition exists.
    """
    family = config.load_family()
    x_size = family.x_size
    n = config.total_len
    if config.mode == "direct":
        k, b, t = config.bits_per_round, config.chunk_len, config.train_per_chunk
    elif config.mode == "asymptotic":
        # Growth exponents live in (0, 1/2); pilots must thin out relative
        # to chunks (g3 < g2) and the per-round payload k ~ N^(2 g1) must
        # stay sublinear.  The default (0.35, 0.4, 0.2) gives k = N^0.7,
        # b = N^0.4, t = N^0.2.
        if not (0 < config.g3 < config.g2 < 0.5 and 0 < config.g1 < 0.5):
            raise ValueError("asymptotic mode needs g1, g2, g3 in (0, 1/2) with g3 < g2")
        k = math.ceil(config.kappa1 * n ** (2 * config.g1))
        b = math.ceil(config.kappa2 * n ** config.g2)
        t = x_size * math.ceil(config.kappa3 * n ** config.g3 / x_size)
        while (b - t) % x_size != 0 or b <= t:
            b += 1
    else:
        raise ValueError("mode must be 'direct' or 'asymptotic'")
    if k < 1 or t >= b:
        raise ValueError(f"infeasible parameters: k={k}, b={b}, t={t}")
    if config.input_composition is not None:
        comp = CompositionSpec(tuple(config.input_composition))
    else:
        if (b - t) % x_size != 0:
            raise ValueError(
                f"code length {b - t} not divisible by alphabet size {x_size}; "
                "adjust chunk_len/train_per_chunk or give input_composition"
            )
        comp = CompositionSpec.uniform(x_size, b - t)
    return ProtocolParams(
        total_len=n,
        bits_per_round=k,
        chunk_len=b,
        train_per_chunk=t,
        decode_margin=config.decode_margin,
        giveup_threshold=config.giveup_threshold,
        input_composition=comp,
        master_seed=config.seed,
    )


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    params: ProtocolParams
    stats: ErrorStats
    summary: dict
    csv_path: str
    summary_path: str
    thresholds_met: bool
    transcripts: list = field(default_factory=list)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def run_experiment(config: ExperimentConfig, keep_transcripts: bool = False) -> ExperimentResult:
    """Run the configured trials and write the per-trial CSV and summary.

    The state sequence is generated once from the seed and shared by all
    trials; trials vary the shared randomness, the channel noise, and the
    message.  Output bytes are a deterministic function of the config.
    """
    family = config.load_family()
    params = derive_params(config)
    states = config.state_sequence()
    stats = estimate_error_probs(
        params,
        family,
        states,
        trials=config.trials,
        seed=config.seed,
        target_rate=config.target_rate,
        keep_transcripts=keep_transcripts,
        workers=config.workers,
    )
    state_mi = mutual_information(
        params.input_fractions(), state_averaged_channel(family, states)
    )
    feedback_rate_bound = 2.0 / params.chunk_len
    summary = {
        "name": config.name,
        "family": family.name,
        "state_kind": config.state_kind,
        "total_len": config.total_len,
        "trials": config.trials,
        "seed": config.seed,
        "bits_per_round": params.bits_per_round,
        "chunk_len": params.chunk_len,
        "train_per_chunk": params.train_per_chunk,
        "decode_margin": params.decode_margin,
        "giveup_threshold": params.giveup_threshold,
        "max_chunks_per_round": max_round_chunks(params),
        "mean_rate": stats.mean_rate,
        "min_rate": stats.min_rate,
        "max_rate": stats.max_rate,
        "eps_dec_hat": stats.eps_dec_hat,
        "eps_ach_hat": stats.eps_ach_hat,
        "target_rate": config.target_rate,
        "state_mi": state_mi,
        "mi_gap": state_mi - stats.mean_rate,
        "feedback_rate_bound": feedback_rate_bound,
    }
    if config.max_feedback_rate is not None:
        summary["feedback_rate_ok"] = feedback_rate_bound < config.max_feedback_rate
    ok = True
    if config.min_mean_rate is not None:
        ok &= stats.mean_rate >= config.min_mean_rate
    if config.max_eps_dec is not None:
        ok &= stats.eps_dec_hat <= config.max_eps_dec
    if config.max_eps_ach is not None:
        ok &= stats.eps_ach_hat <= config.max_eps_ach
    summary["thresholds_met"] = ok

    os.makedirs(config.out_dir, exist_ok=True)
    csv_path = os.path.join(config.out_dir, f"{config.name}_trials.csv")
    with open(csv_path, "w") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in stats.per_trial:
            fh.write(
                ",".join(
                    _fmt(v)
                    for v in (
                        row["trial"],
                        row["seed"],
                        row["decoded_bits"],
                        row["rate"],
                        row["errors"],
                        row["feedback_bits"],
                        row["rounds"],
                        row["bad_noise_rounds"],
                    )
                )
                + "\n"
            )
    summary_path = os.path.join(config.out_dir, f"{config.name}_summary.txt")
    with open(summary_path, "w") as fh:
        for key, value in summary.items():
            fh.write(f"{key}={_fmt(value)}\n")
    return ExperimentResult(
        config=config,
        params=params,
        stats=stats,
        summary=summary,
        csv_path=csv_path,
        summary_path=summary_path,
        thresholds_met=ok,
        transcripts=stats.transcripts,
    )


def preset_configs(preset: str, seed: int = 20260809, trials: int = None,
                   out_dir: str = "results", workers: int = None) -> list:
    """Named experiment groups; each returns a list of configs to run.

    ``bsc-sweep``: flip-fraction grid {0, 0.05, 0.10, 0.11, 0.15, ..., 0.30}
    on the modulo-additive family (0.11 carries the acceptance thresholds).
    ``piecewise-demo``: half clean / half flipped states.
    ``zchannel-sweep``: OR-channel state rates q in {0.1, 0.3}.
    """
    base = dict(
        total_len=2_000_000,
        trials=50 if trials is None else trials,
        seed=seed,
        mode="direct",
        bits_per_round=512,
        chunk_len=1024,
        train_per_chunk=64,
        decode_margin=0.08,
        giveup_threshold=0.05,
        out_dir=out_dir,
        workers=workers,
    )
    if preset == "bsc-sweep":
        configs = []
        for p in (0.0, 0.05, 0.10, 0.11, 0.15, 0.20, 0.25, 0.30):
            cfg = ExperimentConfig(
                name=f"bsc_p{p:0.2f}".replace(".", "_"),
                family="mod-additive",
                state_kind="iid",
                state_params=(1.0 - p, p),
                target_rate=0.35,
                **base,
            )
            if abs(p - 0.11) < 1e-12:
                cfg.min_mean_rate = 0.35
                cfg.max_eps_dec = 0.05
                cfg.max_eps_ach = 0.05
            configs.append(cfg)
        return configs
    if preset == "piecewise-demo":
        return [
            ExperimentConfig(
                name="piecewise_half",
                family="mod-additive",
                state_kind="piecewise",
                state_params=[(0.5, 0), (0.5, 1)],
                target_rate=0.35,
                min_mean_rate=0.6,
                **base,
            )
        ]
    if preset == "zchannel-sweep":
        configs = []
        for q in (0.1, 0.3):
            configs.append(
                ExperimentConfig(
                    name=f"zchan_q{q:0.1f}".replace(".", "_"),
                    family="z-or",
                    state_kind="iid",
                    state_params=(1.0 - q, q),
                    target_rate=0.35,
                    max_eps_dec=0.05,
                    **base,
                )
            )
        return configs
    raise ValueError(
        f"unknown preset {preset!r}; choose bsc-sweep, piecewise-demo, or zchannel-sweep"
    )


def run_sweep(configs, keep_transcripts: bool = False):
    """Run several configs and write one summary row per config."""
    results = [run_experiment(cfg, keep_transcripts=keep_transcripts) for cfg in configs]
    if results:
        out_dir = results[0].config.out_dir
        path = os.path.join(out_dir, "sweep_summary.csv")
        cols = ("name", "state_kind", "mean_rate", "eps_dec_hat", "eps_ach_hat", "state_mi", "thresholds_met")
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for res in results:
                fh.write(",".join(_fmt(res.summary[c]) for c in cols) + "\n")
    return results
