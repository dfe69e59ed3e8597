"""Shared fixtures-by-hand for the test suite: Paulis, named states, RNG."""

import numpy as np

from nonclassicality.core import DensityMatrix, SystemDims, kron

I2 = np.eye(2)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
KET_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
KET_MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)

# Two-qubit maximally entangled pairs
PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
PSI_PLUS = np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2)


def dm(mat, dims, labels):
    return DensityMatrix(np.asarray(mat, dtype=complex), SystemDims(tuple(dims), tuple(labels)))


def pure(vec, dims, labels):
    v = np.asarray(vec, dtype=complex)
    v = v / np.linalg.norm(v)
    return dm(np.outer(v, v.conj()), dims, labels)


def random_herm(dim, rng, scale=1.0):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * (g + g.conj().T) / 2


def random_unitary(dim, rng):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_state(dim, rng, rank=None):
    r = dim if rank is None else rank
    g = rng.normal(size=(dim, r)) + 1j * rng.normal(size=(dim, r))
    w = g @ g.conj().T
    return w / np.real(np.trace(w))


def two_body(op_first, op_second, where, dims=(2, 2, 2)):
    """Embed a two-site operator into a chain of qubits; `where` picks sites."""
    facs = [np.eye(d) for d in dims]
    facs[where[0]] = op_first
    facs[where[1]] = op_second
    return kron(*facs)
