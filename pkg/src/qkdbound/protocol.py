"""Monte Carlo simulation of a BB84 session under an individual attack.

Each signal ``i`` draws its randomness from counter-based Philox streams
keyed by ``(seed, stream)`` at counter position ``i``, so a signal's fate
does not depend on how the run is chunked or parallelized. Later stages
(sampling, reconciliation shuffles, hash seeds) get their own streams.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

import numpy as np
from scipy.signal import fftconvolve

from . import bounds, metrics
from .attacks import AttackStrategy, strategy_to_kraus
from .quantum import PROB_TOL, KrausSet, signal_stack

INSECURE = "insecure channel"
OK = "ok"

_STREAMS = {
    "alice_basis": 1,
    "alice_bit": 2,
    "loss": 3,
    "eve": 4,
    "bob_basis": 5,
    "bob_outcome": 6,
    "sample": 7,
    "reconcile": 8,
    "hash": 9,
}
_MASK64 = (1 << 64) - 1


class EmptyKeyError(ValueError):
    """No signal survived sifting, so there is no key to work with."""


class ECMode(str, Enum):
    ORACLE = "oracle"
    BLOCK_PARITY = "block-parity"


def _philox(seed: int, stream: str) -> np.random.Philox:
    return np.random.Philox(key=[int(seed) & _MASK64, _STREAMS[stream]])


def signal_uniforms(seed: int, stream: str, start: int, stop: int) -> np.ndarray:
    """Uniform draws for signal indices ``start .. stop - 1`` of one stream.

    Philox emits four 64-bit words per counter step and each double uses one
    word, so index ``i`` sits at counter ``i // 4``, lane ``i % 4``.
    """
    bg = _philox(seed, stream)
    skip, lane = divmod(int(start), 4)
    if skip:
        bg.advance(skip)
    return np.random.Generator(bg).random(lane + stop - start)[lane:]


def stage_rng(seed: int, stream: str) -> np.random.Generator:
    return np.random.Generator(_philox(seed, stream))


AttackLike = Union[AttackStrategy, KrausSet, None]


@dataclass(frozen=True)
class ProtocolConfig:
    n_signals: int
    attack: AttackLike = None
    seed: int = 0
    sample_fraction: float = 0.1
    ec_mode: ECMode = ECMode.ORACLE
    security_param: int = 0
    loss_prob: float = 0.0
    delayed_tau1: bool = False
    block_size: int = 16
    max_rounds: int = 8
    chunk_size: int = 1 << 16
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "ec_mode", ECMode(self.ec_mode))
        if int(self.n_signals) < 1:
            raise ValueError("n_signals must be at least 1")
        if not 0.0 < self.sample_fraction < 1.0:
            raise ValueError("sample_fraction must lie in (0, 1)")
        if not 0.0 <= self.loss_prob < 1.0:
            raise ValueError("loss_prob must lie in [0, 1)")
        if self.security_param < 0:
            raise ValueError("security_param must be nonnegative")
        if self.block_size < 2 or self.max_rounds < 1 or self.chunk_size < 1:
            raise ValueError("block_size >= 2, max_rounds >= 1 and chunk_size >= 1 required")


@dataclass
class SiftedPairs:
    """Rounds kept after sifting, in signal order."""

    index: np.ndarray
    basis: np.ndarray
    sender: np.ndarray
    receiver: np.ndarray
    eve_outcome: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.index)

    def take(self, sel) -> "SiftedPairs":
        eve = None if self.eve_outcome is None else self.eve_outcome[sel]
        return SiftedPairs(self.index[sel], self.basis[sel], self.sender[sel], self.receiver[sel], eve)


@dataclass
class CorrectionResult:
    sender_key: np.ndarray
    receiver_key: np.ndarray
    consumed_bits: int = 0
    residual_errors: int = 0
    rounds: int = 0


@dataclass
class SessionResult:
    n_signals: int
    seed: int
    status: str
    detected: int
    sifted_length: int
    sample_size: int
    measured_error_rate: float
    error_rate_std: float
    corrected_key: np.ndarray
    receiver_corrected_key: np.ndarray
    consumed_parity_bits: int
    residual_errors: int
    tau1_applied: float
    security_param: int
    final_key_length: int
    final_key: np.ndarray
    receiver_final_key: np.ndarray
    sifted_key: np.ndarray
    eve_outcome_log: np.ndarray  # rows (outcome k, basis index), aligned with sifted_key
    transcript: dict = field(default_factory=dict, repr=False)

    @property
    def corrected_length(self) -> int:
        return len(self.corrected_key)

    @property
    def keys_agree(self) -> bool:
        return bool(np.array_equal(self.final_key, self.receiver_final_key))

    def to_dict(self) -> dict:
        return {
            "n_signals": self.n_signals,
            "seed": self.seed,
            "status": self.status,
            "detected": self.detected,
            "sifted_length": self.sifted_length,
            "sample_size": self.sample_size,
            "measured_error_rate": self.measured_error_rate,
            "error_rate_std": self.error_rate_std,
            "corrected_length": self.corrected_length,
            "corrected_key": bits_to_str(self.corrected_key),
            "consumed_parity_bits": self.consumed_parity_bits,
            "residual_errors": self.residual_errors,
            "tau1_applied": self.tau1_applied,
            "security_param": self.security_param,
            "final_key_length": self.final_key_length,
            "final_key": bits_to_str(self.final_key),
            "keys_agree": self.keys_agree,
            "sifted_key": bits_to_str(self.sifted_key),
            "eve_outcome_log": self.eve_outcome_log.tolist(),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def bits_to_str(bits) -> str:
    return (np.asarray(bits, dtype=np.uint8) + ord("0")).tobytes().decode("ascii")


def bits_from_str(text: str) -> np.ndarray:
    return np.frombuffer(text.encode("ascii"), dtype=np.uint8) - ord("0") if text else np.zeros(0, np.uint8)


# --- signal transmission --------------------------------------------------------


@dataclass(frozen=True)
class _AttackTables:
    cum_prob: np.ndarray   # [signal s, outcome k], s = 2 * alpha + psi
    bob_zero: np.ndarray   # [s, k, bob basis]: probability Bob reads 0
    n_outcomes: int


def _as_kraus(attack: AttackLike) -> Optional[KrausSet]:
    if attack is None:
        return None
    if isinstance(attack, AttackStrategy):
        return strategy_to_kraus(attack)
    if isinstance(attack, KrausSet):
        return attack
    raise TypeError(f"unsupported attack type {type(attack).__name__}")


def _attack_tables(kraus: Optional[KrausSet]) -> _AttackTables:
    rhos = signal_stack().reshape(4, 2, 2)
    analyser = signal_stack()[:, 0]  # bit-0 projector of each basis
    if kraus is None:
        cum = np.ones((4, 1))
        bob0 = np.einsum("bij,sji->sb", analyser, rhos)[:, None, :]
        return _AttackTables(cum, bob0, 1)
    effects = kraus.effects()
    probs = np.einsum("sij,kji->sk", rhos, effects)
    probs = np.clip(probs, 0.0, None)
    bob0 = np.full((4, kraus.n_outcomes, 2), 0.5)
    for s in range(4):
        for k, cell in enumerate(kraus.partition):
            if probs[s, k] <= PROB_TOL:
                continue
            ops = kraus.operators[list(cell)]
            post = np.einsum("lij,jk,lmk->im", ops, rhos[s], ops) / probs[s, k]
            bob0[s, k] = np.einsum("bij,ji->b", analyser, post)
    cum = np.cumsum(probs, axis=1)
    cum /= cum[:, -1:]
    return _AttackTables(cum, np.clip(bob0, 0.0, 1.0), kraus.n_outcomes)


def _transmit_chunk(cfg: ProtocolConfig, tables: _AttackTables, start: int, stop: int) -> dict:
    u = {name: signal_uniforms(cfg.seed, name, start, stop)
         for name in ("alice_basis", "alice_bit", "loss", "eve", "bob_basis", "bob_outcome")}
    alpha = (u["alice_basis"] >= 0.5).astype(np.uint8)
    psi = (u["alice_bit"] >= 0.5).astype(np.uint8)
    detected = u["loss"] >= cfg.loss_prob
    s = 2 * alpha + psi
    if tables.n_outcomes == 1:
        k = np.zeros(stop - start, dtype=np.int64)
    else:
        cum = tables.cum_prob[s]
        k = np.minimum((u["eve"][:, None] >= cum).sum(axis=1), tables.n_outcomes - 1)
    beta = (u["bob_basis"] >= 0.5).astype(np.uint8)
    p0 = tables.bob_zero[s, k, beta]
    bob = (u["bob_outcome"] >= p0).astype(np.uint8)
    keep = detected & (alpha == beta)
    idx = np.arange(start, stop)[keep]
    return {
        "detected": int(detected.sum()),
        "index": idx,
        "alpha": alpha[keep],
        "beta": beta[keep],
        "psi": psi[keep],
        "bob": bob[keep],
        "k": k[keep],
    }


def transmit(cfg: ProtocolConfig) -> tuple[SiftedPairs, int]:
    """Send all signals through the attack and sift; returns pairs and detection count."""
    tables = _attack_tables(_as_kraus(cfg.attack))
    bounds_ = [(a, min(a + cfg.chunk_size, cfg.n_signals)) for a in range(0, cfg.n_signals, cfg.chunk_size)]
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            chunks = list(pool.map(lambda ab: _transmit_chunk(cfg, tables, *ab), bounds_))
    else:
        chunks = [_transmit_chunk(cfg, tables, a, b) for a, b in bounds_]
    cat = {key: np.concatenate([c[key] for c in chunks]) for key in ("index", "alpha", "beta", "psi", "bob", "k")}
    pairs = sift(cat["alpha"], cat["beta"], cat["bob"], cat["psi"], index=cat["index"])
    pairs.eve_outcome = None if cfg.attack is None else cat["k"]
    return pairs, sum(c["detected"] for c in chunks)


def sift(sender_bases, receiver_bases, receiver_bits, sender_bits, index=None) -> SiftedPairs:
    """Keep the rounds where sender and receiver used the same basis."""
    sb, rb = np.asarray(sender_bases), np.asarray(receiver_bases)
    rbits, sbits = np.asarray(receiver_bits, dtype=np.uint8), np.asarray(sender_bits, dtype=np.uint8)
    if not (len(sb) == len(rb) == len(rbits) == len(sbits)):
        raise ValueError("sifting inputs must have equal lengths")
    idx = np.arange(len(sb)) if index is None else np.asarray(index)
    keep = sb == rb
    return SiftedPairs(idx[keep], sb[keep].astype(np.uint8), sbits[keep], rbits[keep])


# --- classical post-processing ----------------------------------------------------


def estimate_error(pairs: SiftedPairs, sample_fraction: float, rng: np.random.Generator):
    """Publicly compare a random sample of the sifted key and drop it.

    Returns ``(error_rate, remaining_pairs, sample_size)``.
    """
    n = len(pairs)
    m = max(1, int(round(sample_fraction * n)))
    if n - m < 1:
        raise ValueError(f"sampling {m} of {n} sifted bits leaves no key")
    chosen = np.zeros(n, dtype=bool)
    chosen[rng.choice(n, size=m, replace=False)] = True
    sample = pairs.take(chosen)
    rate = float(np.mean(sample.sender != sample.receiver))
    return rate, pairs.take(~chosen), m


def _parity(bits) -> int:
    return int(np.bitwise_xor.reduce(bits)) if len(bits) else 0


def bisect_error(sender_block, receiver_block) -> tuple[int, int]:
    """Locate one error in a block with mismatched parity.

    Returns ``(position, parity_comparisons)``; a block of 16 takes 4.
    """
    a, b = np.asarray(sender_block), np.asarray(receiver_block)
    lo, hi, comps = 0, len(a), 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        comps += 1
        if _parity(a[lo:mid]) != _parity(b[lo:mid]):
            hi = mid
        else:
            lo = mid
    return lo, comps


def _block_parity(sender, receiver, rng, block_size, max_rounds) -> CorrectionResult:
    a = np.asarray(sender, dtype=np.uint8)
    b = np.asarray(receiver, dtype=np.uint8).copy()
    n = len(a)
    consumed, rounds = 0, 0
    for r in range(max_rounds):
        order = np.arange(n) if r == 0 else rng.permutation(n)
        n_blocks = -(-n // block_size)
        pad = n_blocks * block_size - n
        pa = np.concatenate([a[order], np.zeros(pad, np.uint8)]).reshape(n_blocks, block_size)
        pb = np.concatenate([b[order], np.zeros(pad, np.uint8)]).reshape(n_blocks, block_size)
        bad = np.flatnonzero(np.bitwise_xor.reduce(pa ^ pb, axis=1))
        consumed += n_blocks
        rounds += 1
        for blk in bad:
            lo = blk * block_size
            members = order[lo: lo + block_size]
            pos, comps = bisect_error(a[members], b[members])
            consumed += comps
            b[members[pos]] ^= 1
        if len(bad) == 0:
            break
    return CorrectionResult(a.copy(), b, consumed, int(np.count_nonzero(a != b)), rounds)


def correct_errors(pairs: SiftedPairs, ec_mode=ECMode.ORACLE, rng=None, block_size: int = 16,
                   max_rounds: int = 8) -> CorrectionResult:
    """Idealized error correction.

    ``oracle`` drops every erroneous position (leak-free correction);
    ``block-parity`` runs parity comparison with bisection and reshuffles,
    counting the compared parities as consumed shared secret.
    """
    mode = ECMode(ec_mode)
    if mode is ECMode.ORACLE:
        ok = pairs.sender == pairs.receiver
        return CorrectionResult(pairs.sender[ok].copy(), pairs.receiver[ok].copy())
    rng = rng if rng is not None else np.random.default_rng(0)
    return _block_parity(pairs.sender, pairs.receiver, rng, block_size, max_rounds)


def final_length(n: int, tau1: float, s: int) -> int:
    return max(0, math.floor(n * (1.0 - tau1)) - int(s))


def toeplitz_hash(key, seed_bits, m: int) -> np.ndarray:
    """``T @ key mod 2`` for the ``m x n`` Toeplitz matrix ``T[i, j] = seed[i - j + n - 1]``."""
    x = np.asarray(key, dtype=np.uint8)
    t = np.asarray(seed_bits, dtype=np.uint8)
    n = len(x)
    if len(t) != m + n - 1:
        raise ValueError(f"seed must have {m + n - 1} bits, got {len(t)}")
    if m == 0:
        return np.zeros(0, dtype=np.uint8)
    if n * m <= 1 << 22:
        full = np.convolve(t.astype(np.int64), x.astype(np.int64))
    else:
        full = np.rint(fftconvolve(t.astype(float), x.astype(float)))
    return (full[n - 1: n - 1 + m].astype(np.int64) & 1).astype(np.uint8)


def privacy_amplify(key, tau1: float, s: int, rng: np.random.Generator) -> np.ndarray:
    """Compress ``key`` to ``floor(len * (1 - tau1)) - s`` bits with a random Toeplitz hash."""
    x = np.asarray(key, dtype=np.uint8)
    if len(x) == 0:
        raise ValueError("cannot amplify an empty key")
    m = final_length(len(x), tau1, s)
    if m == 0:
        return np.zeros(0, dtype=np.uint8)
    seed_bits = rng.integers(0, 2, size=m + len(x) - 1, dtype=np.uint8)
    return toeplitz_hash(x, seed_bits, m)


# --- full session ---------------------------------------------------------------------


def run_session(cfg: ProtocolConfig) -> SessionResult:
    """Run transmission, sifting, error estimation, correction and privacy amplification."""
    pairs, detected = transmit(cfg)
    if len(pairs) == 0:
        raise EmptyKeyError("no rounds survived sifting")
    error_rate, remaining, m = estimate_error(pairs, cfg.sample_fraction, stage_rng(cfg.seed, "sample"))
    corr = correct_errors(remaining, cfg.ec_mode, stage_rng(cfg.seed, "reconcile"), cfg.block_size, cfg.max_rounds)

    if error_rate >= 1.0 / 3.0:
        status, tau1 = INSECURE, 1.0
    else:
        status = OK
        tau1 = bounds.delayed_tau1_bound(error_rate) if cfg.delayed_tau1 else bounds.tau1_bound(error_rate)

    if len(corr.sender_key) == 0 or status == INSECURE:
        final_a = final_b = np.zeros(0, dtype=np.uint8)
    else:
        # both parties derive the hash from the same public randomness
        final_a = privacy_amplify(corr.sender_key, tau1, cfg.security_param, stage_rng(cfg.seed, "hash"))
        final_b = privacy_amplify(corr.receiver_key, tau1, cfg.security_param, stage_rng(cfg.seed, "hash"))

    if pairs.eve_outcome is None:
        log = np.zeros((0, 2), dtype=np.int64)
    else:
        log = np.stack([pairs.eve_outcome, pairs.basis.astype(np.int64)], axis=1)

    sampled = ~np.isin(pairs.index, remaining.index)
    transcript = {
        "index": pairs.index,
        "basis": pairs.basis,
        "sender_bit": pairs.sender,
        "receiver_bit": pairs.receiver,
        "eve_outcome": pairs.eve_outcome if pairs.eve_outcome is not None else np.full(len(pairs), -1),
        "sampled": sampled.astype(np.uint8),
    }
    return SessionResult(
        n_signals=int(cfg.n_signals),
        seed=int(cfg.seed),
        status=status,
        detected=int(detected),
        sifted_length=len(pairs),
        sample_size=m,
        measured_error_rate=error_rate,
        error_rate_std=math.sqrt(error_rate * (1.0 - error_rate) / m),
        corrected_key=corr.sender_key,
        receiver_corrected_key=corr.receiver_key,
        consumed_parity_bits=corr.consumed_bits,
        residual_errors=corr.residual_errors,
        tau1_applied=float(tau1),
        security_param=int(cfg.security_param),
        final_key_length=len(final_a),
        final_key=final_a,
        receiver_final_key=final_b,
        sifted_key=pairs.sender,
        eve_outcome_log=log,
        transcript=transcript,
    )


def write_transcript(session: SessionResult, path) -> None:
    """Per-sifted-round CSV: index, basis, sender_bit, receiver_bit, eve_outcome, sampled."""
    cols = ["index", "basis", "sender_bit", "receiver_bit", "eve_outcome", "sampled"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        w.writerows(zip(*(session.transcript[c].tolist() for c in cols)))


@dataclass(frozen=True)
class EveReport:
    empirical_information: float
    analytic_information: float
    sharp_bound: float
    rounds: int


def empirical_information(bits, outcomes, bases) -> float:
    """Plug-in mutual information (bits) between key bits and Eve's ``(outcome, basis)``."""
    bits = np.asarray(bits, dtype=np.int64)
    if len(bits) == 0:
        return 0.0
    k = np.asarray(outcomes, dtype=np.int64)
    a = np.asarray(bases, dtype=np.int64)
    n_k = int(k.max()) + 1
    counts = np.bincount((bits * 2 + a) * n_k + k, minlength=4 * n_k).reshape(2, 2, n_k)
    p = counts / counts.sum()
    return max(0.0, float(metrics.h(p.sum(axis=(1, 2))).sum() + metrics.h(p.sum(axis=0)).sum()
                          - metrics.h(p).sum()))


def eve_accounting(session: SessionResult, attack: AttackLike) -> EveReport:
    """Compare Eve's empirical information on the sifted key with the analytic value."""
    bound = bounds.shannon_sharp_bound(min(max(session.measured_error_rate, 0.0), 1.0))
    if attack is None:
        return EveReport(0.0, 0.0, bound, session.sifted_length)
    log = session.eve_outcome_log
    emp = empirical_information(session.sifted_key, log[:, 0], log[:, 1])
    return EveReport(emp, metrics.shannon_information(_as_kraus(attack)), bound, len(log))
