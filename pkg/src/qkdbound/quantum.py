"""Real-representation qubit states and generalized measurements.

Everything here lives on a single polarisation qubit, written as real 2x2
matrices. The two BB84 bases are represented by the rectilinear pair
{(1, 0), (0, 1)} ("linear") and the diagonal pair {(1, 1)/sqrt2, (1, -1)/sqrt2}
("circular"); the latter is unitarily equivalent to circular polarisation
and keeps every quantity real.

A measurement is a :class:`KrausSet`: operators ``A_l`` with
``sum_l A_l^T A_l = 1`` and a partition of their indices into outcomes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

ALGEBRA_TOL = 1e-12
PROB_TOL = 1e-9


class Basis(str, Enum):
    LINEAR = "linear"
    CIRCULAR = "circular"

    @property
    def index(self) -> int:
        return 0 if self is Basis.LINEAR else 1

    @classmethod
    def coerce(cls, value) -> "Basis":
        if isinstance(value, Basis):
            return value
        if value in (0, 1) and not isinstance(value, str):
            return (cls.LINEAR, cls.CIRCULAR)[int(value)]
        return cls(str(value).lower())


class ZeroProbabilityOutcome(ValueError):
    """Raised when a selective post-state is requested for an impossible outcome."""


def _as_matrix(m) -> np.ndarray:
    arr = np.asarray(m, dtype=float)
    if arr.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class DensityMatrix:
    """Trace-one, symmetric, positive semidefinite real 2x2 matrix."""

    entries: np.ndarray

    def __post_init__(self):
        m = _as_matrix(self.entries).copy()
        if abs(m[0, 1] - m[1, 0]) > ALGEBRA_TOL:
            raise ValueError("density matrix must be symmetric")
        if abs(np.trace(m) - 1.0) > ALGEBRA_TOL:
            raise ValueError(f"density matrix must have unit trace, got {np.trace(m)!r}")
        if np.linalg.eigvalsh(m).min() < -ALGEBRA_TOL:
            raise ValueError("density matrix must be positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    @property
    def purity(self) -> float:
        return float(np.trace(self.entries @ self.entries))

    def overlap(self, other) -> float:
        """``Tr(rho sigma)``."""
        return float(np.trace(self.entries @ _as_matrix(other)))

    def __eq__(self, other):
        if not isinstance(other, DensityMatrix):
            return NotImplemented
        return bool(np.array_equal(self.entries, other.entries))

    def __hash__(self):
        return hash(self.entries.tobytes())


def as_density(rho) -> DensityMatrix:
    return rho if isinstance(rho, DensityMatrix) else DensityMatrix(np.asarray(rho, dtype=float))


_SIGNAL_VECTORS = {
    (Basis.LINEAR, 0): np.array([1.0, 0.0]),
    (Basis.LINEAR, 1): np.array([0.0, 1.0]),
    (Basis.CIRCULAR, 0): np.array([1.0, 1.0]) / np.sqrt(2.0),
    (Basis.CIRCULAR, 1): np.array([1.0, -1.0]) / np.sqrt(2.0),
}


@dataclass(frozen=True)
class SignalState:
    basis: Basis
    bit: int
    matrix: DensityMatrix


def signal_state(basis, bit: int) -> SignalState:
    """Return the BB84 signal state for ``(basis, bit)``.

    Bit 0 is horizontal (linear) or the ``(1, 1)/sqrt2`` diagonal
    (circular); bit 1 is the orthogonal partner.
    """
    b = Basis.coerce(basis)
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit!r}")
    v = _SIGNAL_VECTORS[(b, int(bit))]
    m = np.outer(v, v)
    # exact entries for the diagonal basis (0.5 instead of 0.5000000000000001)
    m = np.round(m * 2.0) / 2.0
    return SignalState(b, int(bit), DensityMatrix(m))


def all_signal_states() -> list[SignalState]:
    """The four signal states ordered (lin,0), (lin,1), (circ,0), (circ,1)."""
    return [signal_state(b, bit) for b in Basis for bit in (0, 1)]


def signal_stack() -> np.ndarray:
    """Signal matrices stacked into shape ``(2 bases, 2 bits, 2, 2)``."""
    return np.array([[signal_state(b, bit).matrix.entries for bit in (0, 1)] for b in Basis])


@dataclass(frozen=True)
class AnalyserEffect:
    """Projector of the receiver's analyser; equals the matching signal state."""

    basis: Basis
    bit: int
    projector: DensityMatrix

    @classmethod
    def for_signal(cls, basis, bit: int) -> "AnalyserEffect":
        s = signal_state(basis, bit)
        return cls(s.basis, s.bit, s.matrix)


def projector(theta: float) -> np.ndarray:
    """Rank-1 projector onto ``(cos theta, sin theta)``."""
    v = np.array([np.cos(theta), np.sin(theta)])
    return np.outer(v, v)


def rotation(phi: float) -> np.ndarray:
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class KrausSet:
    """Finite set of measurement operators with an outcome partition.

    Parameters
    ----------
    operators : array_like, shape (L, 2, 2)
        The operators ``A_l``.
    partition : sequence of sequences of int, optional
        Disjoint index cells covering ``range(L)``. Defaults to one
        outcome per operator.
    """

    operators: np.ndarray
    partition: tuple[tuple[int, ...], ...] = field(default=None)

    def __post_init__(self):
        ops = np.asarray(self.operators, dtype=float)
        if ops.ndim == 2:
            ops = ops[None]
        if ops.ndim != 3 or ops.shape[1:] != (2, 2) or len(ops) == 0:
            raise ValueError(f"operators must have shape (L, 2, 2), got {ops.shape}")
        ops = ops.copy()
        ops.setflags(write=False)
        object.__setattr__(self, "operators", ops)

        if self.partition is None:
            cells = tuple((i,) for i in range(len(ops)))
        else:
            cells = tuple(tuple(int(i) for i in cell) for cell in self.partition)
        seen = [i for cell in cells for i in cell]
        if any(len(cell) == 0 for cell in cells):
            raise ValueError("partition cells must be nonempty")
        if len(seen) != len(set(seen)):
            raise ValueError("partition cells must be disjoint")
        if sorted(seen) != list(range(len(ops))):
            raise ValueError("partition must cover every operator index exactly once")
        object.__setattr__(self, "partition", cells)

    @classmethod
    def from_operators(cls, operators: Iterable, partition: Sequence[Sequence[int]] | None = None):
        return cls(np.array([_as_matrix(a) for a in operators]), partition)

    def __len__(self) -> int:
        return len(self.operators)

    @property
    def n_outcomes(self) -> int:
        return len(self.partition)

    def effects(self) -> np.ndarray:
        """POVM elements ``sum_{l in K_k} A_l^T A_l``, shape ``(n_outcomes, 2, 2)``."""
        per_op = np.einsum("lji,ljk->lik", self.operators, self.operators)
        return np.array([per_op[list(cell)].sum(axis=0) for cell in self.partition])

    def __eq__(self, other):
        if not isinstance(other, KrausSet):
            return NotImplemented
        return self.partition == other.partition and np.array_equal(self.operators, other.operators)

    def __hash__(self):
        return hash((self.operators.tobytes(), self.partition))


def identity_measurement() -> KrausSet:
    return KrausSet(np.eye(2)[None])


def projective_measurement(theta: float = 0.0) -> KrausSet:
    """Von Neumann measurement in the basis rotated by ``theta`` from linear."""
    p = projector(theta)
    return KrausSet(np.array([p, np.eye(2) - p]))


def completeness_defect(kraus: KrausSet) -> float:
    """Max-entry deviation of ``sum_l A_l^T A_l`` from the identity."""
    total = np.einsum("lji,ljk->ik", kraus.operators, kraus.operators)
    return float(np.abs(total - np.eye(2)).max())


def _check_outcome(kraus: KrausSet, k: int) -> None:
    if not isinstance(k, (int, np.integer)) or not 0 <= k < kraus.n_outcomes:
        raise IndexError(f"outcome index {k!r} out of range for {kraus.n_outcomes} outcomes")


def outcome_probability(kraus: KrausSet, rho, k: int) -> float:
    """Probability ``Tr(rho sum_{l in K_k} A_l^T A_l)`` of outcome ``k``."""
    _check_outcome(kraus, k)
    r = np.asarray(as_density(rho))
    return float(np.trace(r @ kraus.effects()[k]))


def outcome_probabilities(kraus: KrausSet, rho) -> np.ndarray:
    r = np.asarray(as_density(rho))
    return np.einsum("ij,kji->k", r, kraus.effects())


def _unnormalized(kraus: KrausSet, rho: np.ndarray, indices) -> np.ndarray:
    ops = kraus.operators[list(indices)]
    return np.einsum("lij,jk,lmk->im", ops, rho, ops)


def post_state_selective(kraus: KrausSet, rho, k: int) -> DensityMatrix:
    """Normalized state selected by outcome ``k``.

    Raises
    ------
    ZeroProbabilityOutcome
        If outcome ``k`` has probability at most 1e-9 for ``rho``.
    """
    _check_outcome(kraus, k)
    r = np.asarray(as_density(rho))
    out = _unnormalized(kraus, r, kraus.partition[k])
    p = float(np.trace(out))
    if p <= PROB_TOL:
        raise ZeroProbabilityOutcome(f"outcome {k} has probability {p:.3g}")
    out = out / p
    out = 0.5 * (out + out.T)
    return DensityMatrix(out / np.trace(out))


def post_state_nonselective(kraus: KrausSet, rho) -> DensityMatrix:
    """Ensemble state ``sum_l A_l rho A_l^T`` over all outcomes."""
    r = np.asarray(as_density(rho))
    out = _unnormalized(kraus, r, range(len(kraus)))
    return DensityMatrix(0.5 * (out + out.T))


def channel(operators: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Unvalidated ``sum_l A_l rho A_l^T`` on raw arrays (may be trace-deficient)."""
    ops = np.asarray(operators, dtype=float)
    return np.einsum("lij,jk,lmk->im", ops, np.asarray(rho, dtype=float), ops)
