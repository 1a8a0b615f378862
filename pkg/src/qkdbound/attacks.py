"""Eavesdropping strategies materialized as Kraus sets.

Two operator families are supported. Canonical operators

    A = sqrt(a) O + (sqrt(b) - sqrt(a)) O P,     A~ = same with P -> 1 - P,

with ``O`` a rotation and ``P`` a rank-1 projector, parametrize the
Shannon-information analysis. Symmetric operators

    A(+/-) = sqrt(a) 1 - (sqrt(a) +/- sqrt(b)) P,  A~(+/-) = same with P -> 1 - P,

(and antisymmetric ones, multiples of the 90 degree rotation) parametrize
the collision-probability analysis. Every operator comes with its partner,
so each pair contributes ``(a + b) * 1`` to the completeness sum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence, Union

import numpy as np

from .quantum import (
    ALGEBRA_TOL,
    KrausSet,
    all_signal_states,
    channel,
    completeness_defect,
    projector,
    rotation,
)

_J = np.array([[0.0, 1.0], [-1.0, 0.0]])


class NormalizationError(ValueError):
    """Attack weights do not form a complete measurement."""


class Sign(str, Enum):
    PLUS = "plus"
    MINUS = "minus"
    ANTISYMMETRIC = "antisymmetric"


class StrategyKind(str, Enum):
    SHANNON_CANONICAL = "shannon-canonical"
    COLLISION_SYMMETRIC = "collision-symmetric"
    RAW_KRAUS = "raw-kraus"


def _check_ab(a: float, b: float) -> None:
    if b <= 0:
        raise ValueError("b must be positive")
    if a < 0 or a > b * (1 + ALGEBRA_TOL):
        raise ValueError(f"need 0 <= a <= b, got a={a!r}, b={b!r}")


def weights_from_eta(eta: float, total: float = 1.0) -> tuple[float, float]:
    """``(a, b)`` with ``a/b = eta**2`` and ``a + b = total``."""
    b = total / (1.0 + eta * eta)
    return total - b, b


@dataclass(frozen=True)
class CanonicalAttackOp:
    a: float
    b: float
    phi: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        _check_ab(self.a, self.b)

    @classmethod
    def from_eta(cls, eta: float, phi: float = 0.0, theta: float = 0.0, total: float = 1.0):
        if not 0.0 <= eta <= 1.0:
            raise ValueError("canonical eta must lie in [0, 1]")
        a, b = weights_from_eta(eta, total)
        return cls(a, b, phi, theta)

    @property
    def eta(self) -> float:
        return float(np.sqrt(min(self.a / self.b, 1.0)))

    @property
    def weight(self) -> float:
        """``(a + b) / 2``: probability mass of each operator of the pair."""
        return 0.5 * (self.a + self.b)


@dataclass(frozen=True)
class SymmetricAttackOp:
    a: float
    b: float
    sign: Sign = Sign.MINUS
    theta: float = 0.0

    def __post_init__(self):
        _check_ab(self.a, self.b)
        object.__setattr__(self, "sign", Sign(self.sign))

    @classmethod
    def from_eta(cls, eta: float, theta: float = 0.0, total: float = 1.0):
        """Symmetric pair with signed ``eta`` in [-1, 1]; the sign picks the branch."""
        if not -1.0 <= eta <= 1.0:
            raise ValueError("symmetric eta must lie in [-1, 1]")
        a, b = weights_from_eta(eta, total)
        return cls(a, b, Sign.MINUS if eta >= 0 else Sign.PLUS, theta)

    @property
    def eta(self) -> float:
        """Signed characteristic parameter; positive on the ``minus`` branch."""
        mag = float(np.sqrt(min(self.a / self.b, 1.0)))
        return -mag if self.sign is Sign.PLUS else mag

    @property
    def weight(self) -> float:
        return 0.5 * (self.a + self.b)


def materialize_canonical(op: CanonicalAttackOp) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(A, A~)`` for a canonical operator."""
    _check_ab(op.a, op.b)
    o = rotation(op.phi)
    p = projector(op.theta)
    sa, sb = np.sqrt(op.a), np.sqrt(op.b)
    a_k = sa * o + (sb - sa) * (o @ p)
    a_tilde = sa * o + (sb - sa) * (o @ (np.eye(2) - p))
    return a_k, a_tilde


def materialize_symmetric(op: SymmetricAttackOp) -> tuple[np.ndarray, np.ndarray]:
    """Return the pair for a symmetric or antisymmetric operator.

    The antisymmetric pair is ``(sqrt(a) J, sqrt(b) J)`` with ``J`` the 90
    degree rotation, the only real antisymmetric 2x2 direction; ``theta`` is
    unused there.
    """
    _check_ab(op.a, op.b)
    sa, sb = np.sqrt(op.a), np.sqrt(op.b)
    if op.sign is Sign.ANTISYMMETRIC:
        return sa * _J, sb * _J
    p = projector(op.theta)
    q = np.eye(2) - p
    coef = sa + sb if op.sign is Sign.PLUS else sa - sb
    return sa * np.eye(2) - coef * p, sa * np.eye(2) - coef * q


AttackOp = Union[CanonicalAttackOp, SymmetricAttackOp]


@dataclass(frozen=True)
class AttackStrategy:
    """Collection of attack operators, each materialized with its partner.

    For ``kind="raw-kraus"`` the operators are given directly in ``kraus``
    and ``ops`` is empty.
    """

    ops: tuple = ()
    kind: StrategyKind = StrategyKind.SHANNON_CANONICAL
    kraus: KrausSet | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        object.__setattr__(self, "kind", StrategyKind(self.kind))
        if self.kind is StrategyKind.RAW_KRAUS:
            if self.kraus is None:
                raise ValueError("raw-kraus strategies need a KrausSet")
        elif self.kind is StrategyKind.SHANNON_CANONICAL:
            if not all(isinstance(o, CanonicalAttackOp) for o in self.ops):
                raise TypeError("shannon-canonical strategies take CanonicalAttackOp entries")
        elif not all(isinstance(o, SymmetricAttackOp) for o in self.ops):
            raise TypeError("collision-symmetric strategies take SymmetricAttackOp entries")

    @classmethod
    def canonical(cls, *ops: CanonicalAttackOp) -> "AttackStrategy":
        return cls(ops, StrategyKind.SHANNON_CANONICAL)

    @classmethod
    def symmetric(cls, *ops: SymmetricAttackOp) -> "AttackStrategy":
        return cls(ops, StrategyKind.COLLISION_SYMMETRIC)

    @classmethod
    def raw(cls, kraus: KrausSet) -> "AttackStrategy":
        return cls((), StrategyKind.RAW_KRAUS, kraus)

    def total_weight(self) -> float:
        """Sum of ``(a + b)/2`` over every materialized operator."""
        return float(sum(o.a + o.b for o in self.ops))

    def materialize(self) -> np.ndarray:
        if self.kind is StrategyKind.RAW_KRAUS:
            return np.array(self.kraus.operators)
        mat = materialize_canonical if self.kind is StrategyKind.SHANNON_CANONICAL else materialize_symmetric
        return np.array([m for o in self.ops for m in mat(o)])


def strategy_to_kraus(strategy: AttackStrategy) -> KrausSet:
    """Materialize a strategy with one outcome per operator.

    Raises
    ------
    NormalizationError
        If the operators do not sum to a complete measurement.
    """
    if strategy.kind is StrategyKind.RAW_KRAUS:
        kraus = KrausSet(strategy.kraus.operators)
    else:
        if not strategy.ops:
            raise NormalizationError("strategy has no operators")
        weight = strategy.total_weight()
        if abs(weight - 1.0) > ALGEBRA_TOL:
            raise NormalizationError(
                f"operator weights sum to {weight:.15g}, defect {weight - 1.0:+.3g}"
            )
        kraus = KrausSet(strategy.materialize())
    defect = completeness_defect(kraus)
    if defect > ALGEBRA_TOL:
        raise NormalizationError(f"completeness defect {defect:.3g} exceeds {ALGEBRA_TOL}")
    return kraus


@dataclass(frozen=True)
class DelayedAttack:
    """Two Kraus descriptions of one channel, for linear and circular signals."""

    linear_strategy: KrausSet
    circular_strategy: KrausSet
    coefficients: np.ndarray


def build_delayed(base: KrausSet, coefficients) -> DelayedAttack:
    """Mix ``base`` operators with an orthogonal matrix: ``B_l = sum_k c_lk A_k``."""
    c = np.asarray(coefficients, dtype=float)
    n = len(base)
    if c.shape != (n, n):
        raise ValueError(f"coefficients must be {n}x{n}, got {c.shape}")
    if np.abs(c @ c.T - np.eye(n)).max() > ALGEBRA_TOL:
        raise ValueError("coefficient matrix is not orthogonal")
    mixed = np.einsum("lk,kij->lij", c, base.operators)
    return DelayedAttack(base, KrausSet(mixed), c)


def verify_delayed(d: DelayedAttack) -> float:
    """Max-entry channel mismatch between the two strategies.

    Checking the four signal states is enough: they span the real symmetric
    2x2 matrices and both channels are linear.
    """
    worst = 0.0
    for s in all_signal_states():
        rho = s.matrix.entries
        diff = channel(d.linear_strategy.operators, rho) - channel(d.circular_strategy.operators, rho)
        worst = max(worst, float(np.abs(diff).max()))
    return worst


def intercept_resend(basis="linear") -> AttackStrategy:
    """Projective measurement in one of the signal bases, resending the result."""
    theta = 0.0 if str(getattr(basis, "value", basis)) == "linear" else np.pi / 4
    return AttackStrategy.canonical(CanonicalAttackOp(0.0, 1.0, 0.0, theta))


def breidbart() -> AttackStrategy:
    """Projective measurement midway between the two signal bases."""
    return AttackStrategy.canonical(CanonicalAttackOp(0.0, 1.0, 0.0, np.pi / 8))


def canonical_pair(eta: float, phi: float = 0.0, theta: float = 0.0) -> AttackStrategy:
    """Single canonical pair with ``a + b = 1``; ``phi = theta = 0`` is optimal for information."""
    return AttackStrategy.canonical(CanonicalAttackOp.from_eta(eta, phi, theta))


def symmetric_pair(eta: float, theta: float = np.pi / 8) -> AttackStrategy:
    """Single symmetric pair with ``a + b = 1``; ``theta = pi/8`` is optimal for collisions."""
    return AttackStrategy.symmetric(SymmetricAttackOp.from_eta(eta, theta))


def mixture(parts: Sequence[tuple[float, AttackStrategy]]) -> AttackStrategy:
    """Weighted combination of strategies of the same kind."""
    kinds = {s.kind for _, s in parts}
    if len(kinds) != 1 or StrategyKind.RAW_KRAUS in kinds:
        raise ValueError("can only mix canonical or symmetric strategies of one kind")
    ops = []
    for w, s in parts:
        for o in s.ops:
            if isinstance(o, CanonicalAttackOp):
                ops.append(CanonicalAttackOp(w * o.a, w * o.b, o.phi, o.theta))
            else:
                ops.append(SymmetricAttackOp(w * o.a, w * o.b, o.sign, o.theta))
    return AttackStrategy(tuple(ops), kinds.pop())
