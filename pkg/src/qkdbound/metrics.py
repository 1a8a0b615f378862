"""Information and disturbance functionals of an attack.

All functions take a :class:`~qkdbound.quantum.KrausSet` (or an
:class:`~qkdbound.attacks.AttackStrategy`, which is materialized first) and
assume uniform priors: each bit and each basis with probability 1/2.
Signal indices follow :func:`~qkdbound.quantum.all_signal_states`, so the
reference states for the overlaps are ``rho_1 = (linear, 0)`` and
``rho_3 = (circular, 0)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .attacks import AttackStrategy, CanonicalAttackOp, StrategyKind, strategy_to_kraus
from .quantum import ALGEBRA_TOL, KrausSet, projector, rotation, signal_stack, signal_state


def _kraus(attack) -> KrausSet:
    if isinstance(attack, AttackStrategy):
        return strategy_to_kraus(attack)
    if isinstance(attack, KrausSet):
        return attack
    raise TypeError(f"expected KrausSet or AttackStrategy, got {type(attack).__name__}")


def h(x):
    """``-x log2 x`` with ``h(0) = 0``; works elementwise on arrays."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = -x[pos] * np.log2(x[pos])
    return out if out.ndim else float(out)


def binary_entropy(p: float) -> float:
    return float(h(p) + h(1.0 - p))


@dataclass(frozen=True)
class JointDistribution:
    """Table ``p(psi, alpha, k)`` over bit, basis and Eve's outcome.

    ``table`` has shape ``(2, 2, n_outcomes)``, indexed ``[psi, alpha, k]``.
    """

    table: np.ndarray

    @property
    def p_bit(self) -> np.ndarray:
        return self.table.sum(axis=(1, 2))

    @property
    def p_outcome(self) -> np.ndarray:
        """``p(k_alpha)`` indexed ``[alpha, k]``, basis prior included."""
        return self.table.sum(axis=0)

    @property
    def entries(self) -> dict[tuple[int, int, int], float]:
        return {idx: float(v) for idx, v in np.ndenumerate(self.table)}


@dataclass(frozen=True)
class DisturbanceReport:
    d_fid: float
    per_signal_overlaps: tuple[float, float, float, float]


@dataclass(frozen=True)
class CollisionReport:
    per_bit_collision: float
    tau1: float


def _signal_array() -> np.ndarray:
    # shape (4, 2, 2) in the order (lin,0), (lin,1), (circ,0), (circ,1)
    return signal_stack().reshape(4, 2, 2)


def disturbance_fid(attack) -> DisturbanceReport:
    """Average error on deterministic signals, ``1 - mean_i Tr(rho_i rho~_i)``."""
    ops = _kraus(attack).operators
    rhos = _signal_array()
    out = np.einsum("lij,sjk,lmk->sim", ops, rhos, ops)
    overlaps = np.einsum("sij,sji->s", rhos, out)
    return DisturbanceReport(float(1.0 - overlaps.mean()), tuple(float(o) for o in overlaps))


def disturbance_fid_expanded(strategy: AttackStrategy) -> float:
    """Disturbance of a canonical strategy from its ``(a, b, O, P)`` parameters.

    Independent of :func:`disturbance_fid`: never forms the operators
    ``A_k``, and evaluates the per-operator expansion with the analyser
    effects equal to the signal states.
    """
    if strategy.kind is not StrategyKind.SHANNON_CANONICAL:
        raise ValueError("expanded disturbance needs a shannon-canonical strategy")
    rhos = _signal_array()
    total = 0.0
    for rho in rhos:
        e = rho
        term = 0.25 * np.trace(rho @ e)
        for op in strategy.ops:
            o = rotation(op.phi)
            p = projector(op.theta)
            q = np.eye(2) - p
            coef = (np.sqrt(op.b) - np.sqrt(op.a)) ** 2 / 2.0
            # each pair member contributes the same amount, hence the factor 2
            for _ in range(2):
                term -= 0.25 * np.sqrt(op.a * op.b) * np.trace(o @ rho @ o.T @ e)
                term -= 0.25 * coef * (
                    np.trace(o @ p @ rho @ p @ o.T @ e) + np.trace(o @ q @ rho @ q @ o.T @ e)
                )
        total += term
    return float(total)


def eve_joint_distribution(attack) -> JointDistribution:
    """Joint law of the bit, the announced basis and Eve's outcome."""
    effects = _kraus(attack).effects()
    rhos = signal_stack()  # [alpha, psi]
    table = 0.25 * np.einsum("apij,kji->pak", rhos, effects)
    return JointDistribution(table)


def shannon_information(attack) -> float:
    """Eve's Shannon information on the key bit, in bits per signal."""
    joint = eve_joint_distribution(attack)
    val = h(joint.p_bit).sum() + h(joint.p_outcome).sum() - h(joint.table).sum()
    return max(float(val), 0.0)


def overlaps(theta: float) -> tuple[float, float]:
    """``(c, d) = (Tr(rho_1 P), Tr(rho_3 P))`` for the projector at angle ``theta``."""
    p = projector(theta)
    c = float(np.trace(signal_state("linear", 0).matrix.entries @ p))
    d = float(np.trace(signal_state("circular", 0).matrix.entries @ p))
    return c, d


def _xlog2x(x: float) -> float:
    return float(x * np.log2(x)) if x > 0 else 0.0


def shannon_closed_form(
    weights: Sequence[float], etas: Sequence[float], cs: Sequence[float], ds: Sequence[float]
) -> float:
    """Shannon information from per-operator ``(weight, eta, c, d)``.

    ``weights`` are the ``(a_k + b_k)/2`` of each materialized operator,
    partners included, and must sum to one.
    """
    w = np.asarray(weights, dtype=float)
    eta = np.asarray(etas, dtype=float)
    c = np.asarray(cs, dtype=float)
    d = np.asarray(ds, dtype=float)
    if not (len(w) == len(eta) == len(c) == len(d)) or len(w) == 0:
        raise ValueError("parameter lists must be nonempty and of equal length")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise ValueError(f"weights must be nonnegative and sum to 1, got {w.sum()!r}")
    if np.any(eta < -ALGEBRA_TOL) or np.any(eta > 1 + ALGEBRA_TOL):
        raise ValueError("eta must lie in [0, 1]")
    if np.any((c - 0.5) ** 2 + (d - 0.5) ** 2 > 0.25 + 1e-9):
        raise ValueError("overlaps lie outside the admissible circle")

    total = 0.0
    for wk, ek, ck, dk in zip(w, eta, c, d):
        e2 = ek * ek
        braces = (
            _xlog2x(e2 + ck - e2 * ck)
            + _xlog2x(1 - ck + e2 * ck)
            + _xlog2x(e2 + dk - e2 * dk)
            + _xlog2x(1 - dk + e2 * dk)
        )
        total += wk * (1.0 - np.log2(1.0 + e2) + braces / (2.0 * (1.0 + e2)))
    return float(total)


def closed_form_parameters(strategy: AttackStrategy):
    """Per-operator ``(weights, etas, cs, ds)`` of a canonical strategy.

    The partner operator uses the complementary projector, whose overlaps
    are ``(1 - c, 1 - d)``.
    """
    if strategy.kind is not StrategyKind.SHANNON_CANONICAL:
        raise ValueError("closed form needs a shannon-canonical strategy")
    weights, etas, cs, ds = [], [], [], []
    for op in strategy.ops:
        c, d = overlaps(op.theta)
        for cc, dd in ((c, d), (1.0 - c, 1.0 - d)):
            weights.append(op.weight)
            etas.append(op.eta)
            cs.append(cc)
            ds.append(dd)
    return weights, etas, cs, ds


def collision_table(attack) -> np.ndarray:
    """Unnormalized ``Tr(A_k rho A_k^T rho)`` indexed ``[psi, alpha, k]``."""
    kraus = _kraus(attack)
    rhos = signal_stack()
    per_op = np.einsum("lij,apjk,lmk,apmi->pal", kraus.operators, rhos, kraus.operators, rhos)
    return np.stack([per_op[..., list(cell)].sum(axis=-1) for cell in kraus.partition], axis=-1)


def collision_corrected(attack) -> CollisionReport:
    """Per-bit collision probability of the corrected key and the resulting ``tau1``."""
    table = collision_table(attack)
    table = table / table.sum()
    marginal = table.sum(axis=0)
    num = table**2
    mask = np.broadcast_to(marginal > 0, num.shape)
    ratio = np.where(mask, num / np.where(marginal > 0, marginal, 1.0), 0.0)
    pc = float(ratio.sum())
    return CollisionReport(pc, float(1.0 + np.log2(pc)))
