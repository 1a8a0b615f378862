import numpy as np
import pytest

from qkdbound.quantum import KrausSet


def random_kraus(rng, n_ops=None, n_outcomes=None) -> KrausSet:
    """Random complete Kraus set: ``M_l S^{-1/2}`` with ``S = sum M_l^T M_l``."""
    n_ops = n_ops or int(rng.integers(1, 6))
    m = rng.normal(size=(n_ops, 2, 2))
    s = np.einsum("lji,ljk->ik", m, m)
    w, v = np.linalg.eigh(s)
    inv_sqrt = v @ np.diag(w**-0.5) @ v.T
    ops = m @ inv_sqrt
    if n_outcomes is None:
        n_outcomes = int(rng.integers(1, n_ops + 1))
    labels = np.concatenate([np.arange(n_outcomes), rng.integers(0, n_outcomes, n_ops - n_outcomes)])
    rng.shuffle(labels)
    partition = [tuple(np.flatnonzero(labels == k)) for k in range(n_outcomes)]
    return KrausSet(ops, partition)


def random_density(rng) -> np.ndarray:
    v = rng.normal(size=(2, 2))
    r = v @ v.T
    return r / np.trace(r)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
