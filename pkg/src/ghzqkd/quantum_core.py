"""Dense complex linear algebra for one to three qubits.

Matrices and state vectors are plain ``numpy`` complex arrays. Qubit order
inside every tensor product is A (most significant bit), B, C (least
significant bit), so basis index ``i`` of the 8-dim space is the binary
number ``abc``: |000>, |001>, |010>, ..., |111>.

Some texts list the three-qubit basis as |000>, |001>, |100>, |101>, |010>,
|011>, |110>, |111>. That ordering swaps the A and B bits of the index. It
changes only where an amplitude is stored, never a trace or expectation value,
so everything here uses plain binary order.
"""

from __future__ import annotations

import numpy as np

ALGEBRA_TOL = 1e-12
CHAIN_TOL = 1e-9
PSD_TOL = 1e-10


class ConsistencyError(RuntimeError):
    """An internal invariant failed (a pipeline bug, not bad user input)."""


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {a.shape}")
    return a


def tensor(a, b) -> np.ndarray:
    """Kronecker product ``a ⊗ b``; ``a`` holds the more significant qubits."""
    return np.kron(as_matrix(a), as_matrix(b))


def tensor_all(*ms) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for m in ms:
        out = tensor(out, m)
    return out


def dagger(m) -> np.ndarray:
    return as_matrix(m).conj().T


def trace(m) -> complex:
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"trace of non-square matrix with shape {a.shape}")
    return complex(np.trace(a))


def ket(bits: str) -> np.ndarray:
    """Computational basis vector for a bit string such as ``"010"``."""
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1.0
    return v


def check_state(v, tol: float = ALGEBRA_TOL) -> np.ndarray:
    a = np.asarray(v, dtype=complex)
    norm = np.linalg.norm(a)
    if abs(norm - 1.0) > tol:
        raise ValueError(f"state vector is not normalized (norm={norm!r})")
    return a


def outer(v) -> np.ndarray:
    """Rank-1 projector |v><v| of a normalized vector."""
    a = check_state(v)
    return np.outer(a, a.conj())


def is_unitary(u, tol: float = ALGEBRA_TOL) -> bool:
    a = as_matrix(u)
    return bool(np.allclose(dagger(a) @ a, np.eye(a.shape[0]), rtol=0.0, atol=tol))


def is_hermitian(m, tol: float = ALGEBRA_TOL) -> bool:
    a = as_matrix(m)
    return a.shape[0] == a.shape[1] and bool(np.allclose(a, dagger(a), rtol=0.0, atol=tol))


def min_eigenvalue(m) -> float:
    # eigvalsh only reads one triangle; hermiticity is checked separately.
    return float(np.linalg.eigvalsh(as_matrix(m)).min())


def check_density(rho, tol: float = ALGEBRA_TOL) -> np.ndarray:
    """Validate Hermiticity, unit trace and positivity; return the matrix.

    Raises
    ------
    ConsistencyError
        If any of the three density-matrix invariants is violated.
    """
    a = as_matrix(rho)
    if not is_hermitian(a, tol):
        raise ConsistencyError("density matrix is not Hermitian")
    tr = trace(a)
    if abs(tr - 1.0) > tol:
        raise ConsistencyError(f"density matrix trace is {tr!r}, expected 1")
    lam = min_eigenvalue(a)
    if lam < -PSD_TOL:
        raise ConsistencyError(f"density matrix has negative eigenvalue {lam!r}")
    return a


def density(v) -> np.ndarray:
    return check_density(outer(v))
