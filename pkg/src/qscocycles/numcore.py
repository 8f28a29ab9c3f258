"""Dense complex linear algebra with explicit tolerances.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  Every routine
that makes a yes/no decision takes a :class:`Tolerances` so that floating
point noise cannot flip a verdict.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (DimensionMismatch, NonHermitian, NonSquare, NotPSD,
                     NotPSDBlock, ShapeMismatch, SingularBeyondCutoff)


@dataclass(frozen=True)
class Tolerances:
    """Slack used by the positivity and equality tests.

    ``eig_tol`` is relative: a matrix ``M`` counts as PSD when its smallest
    eigenvalue is at least ``-eig_tol * (1 + ||M||)``.
    """

    eig_tol: float = 1e-9
    eq_tol: float = 1e-9
    pinv_tol: float = 1e-10

    def __post_init__(self):
        for name in ("eig_tol", "eq_tol", "pinv_tol"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and nonnegative, got {v}")


DEFAULT_TOL = Tolerances()


def as_cmatrix(M) -> np.ndarray:
    A = np.asarray(M, dtype=complex)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    elif A.ndim == 1:
        A = A.reshape(-1, 1)
    if A.ndim != 2:
        raise ShapeMismatch(f"expected a matrix, got shape {A.shape}")
    return A


def adjoint(M) -> np.ndarray:
    return as_cmatrix(M).conj().T


def _require_square(M):
    if M.shape[0] != M.shape[1]:
        raise NonSquare(f"matrix of shape {M.shape} is not square")


def hermitian_defect(M) -> float:
    M = as_cmatrix(M)
    _require_square(M)
    return float(np.linalg.norm(M - M.conj().T, 2)) if M.size else 0.0


def herm_eig(M, tol: Tolerances = DEFAULT_TOL):
    """Eigen-decompose a (numerically) Hermitian matrix.

    Returns ascending eigenvalues and a unitary whose columns are the
    eigenvectors.  The input is symmetrised first; a Hermitian defect larger
    than ``tol.eq_tol * (1 + ||M||)`` raises :class:`NonHermitian`.
    """
    M = as_cmatrix(M)
    _require_square(M)
    scale = 1.0 + (np.linalg.norm(M, 2) if M.size else 0.0)
    if hermitian_defect(M) > tol.eq_tol * scale:
        raise NonHermitian(f"hermitian defect {hermitian_defect(M):.3e}")
    H = 0.5 * (M + M.conj().T)
    w, U = np.linalg.eigh(H)
    return w, U


def min_eig(M) -> float:
    """Smallest eigenvalue of the Hermitian part of ``M``."""
    M = as_cmatrix(M)
    _require_square(M)
    if M.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(0.5 * (M + M.conj().T))[0])


def psd_violation(M) -> float:
    """How far ``M`` is from the PSD cone, in units that ignore the slack.

    Zero when ``M`` is Hermitian and PSD; otherwise the larger of the
    Hermitian defect and the negative part of the smallest eigenvalue.
    """
    M = as_cmatrix(M)
    _require_square(M)
    return max(hermitian_defect(M), -min_eig(M), 0.0)


def psd_slack(M, tol: Tolerances = DEFAULT_TOL) -> float:
    M = as_cmatrix(M)
    norm = np.linalg.norm(M, 2) if M.size else 0.0
    return tol.eig_tol * (1.0 + norm)


def is_psd(M, tol: Tolerances = DEFAULT_TOL) -> bool:
    M = as_cmatrix(M)
    _require_square(M)
    if M.size == 0:
        return True
    scale = 1.0 + np.linalg.norm(M, 2)
    if hermitian_defect(M) > tol.eq_tol * scale:
        return False
    return bool(min_eig(M) >= -tol.eig_tol * scale)


def psd_sqrt(M, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    if not is_psd(M, tol):
        raise NotPSD(f"min eigenvalue {min_eig(M):.3e}")
    w, U = herm_eig(M, tol)
    w = np.clip(w, 0.0, None)
    return (U * np.sqrt(w)) @ U.conj().T


def psd_inv_sqrt(M, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    if not is_psd(M, tol):
        raise NotPSD(f"min eigenvalue {min_eig(M):.3e}")
    w, U = herm_eig(M, tol)
    if w[0] <= tol.pinv_tol:
        raise SingularBeyondCutoff(f"min eigenvalue {w[0]:.3e} <= {tol.pinv_tol:.1e}")
    return (U / np.sqrt(w)) @ U.conj().T


def op_norm(M) -> float:
    M = as_cmatrix(M)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def expm(M) -> np.ndarray:
    M = as_cmatrix(M)
    _require_square(M)
    return scipy.linalg.expm(M)


def schur_product(A, B) -> np.ndarray:
    """Entrywise product, or blockwise scaling when ``B`` is the smaller factor.

    If ``A`` is an ``n x n`` block matrix and ``B`` an ``n x n`` scalar
    matrix, block ``(i, j)`` of ``A`` is multiplied by ``B[i, j]``.
    """
    A = as_cmatrix(A)
    B = as_cmatrix(B)
    if A.shape == B.shape:
        return A * B
    n = B.shape[0]
    if B.shape[0] != B.shape[1] or A.shape[0] % n or A.shape[1] % n:
        raise ShapeMismatch(f"cannot Schur-multiply shapes {A.shape} and {B.shape}")
    p, q = A.shape[0] // n, A.shape[1] // n
    return A * np.kron(B, np.ones((p, q)))


def chi(u, v) -> complex:
    """chi(u, v) = (|u|^2 + |v|^2) / 2 - <u, v>, conjugate-linear in ``u``."""
    u = np.atleast_1d(np.asarray(u, dtype=complex))
    v = np.atleast_1d(np.asarray(v, dtype=complex))
    if u.shape != v.shape:
        raise DimensionMismatch(f"{u.shape} vs {v.shape}")
    return complex(0.5 * (np.vdot(u, u).real + np.vdot(v, v).real) - np.vdot(u, v))


def gram_matrix(x, t: float) -> np.ndarray:
    """The Grammian ``[exp(-t chi(x_i, x_j))]`` of the coherent vectors of ``x_i 1_[0,t)``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    xs = [np.atleast_1d(np.asarray(xi, dtype=complex)) for xi in x]
    n = len(xs)
    G = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            G[i, j] = np.exp(-t * chi(xs[i], xs[j]))
    return G


def box(n: int) -> np.ndarray:
    """The all-ones ``n x n`` matrix."""
    return np.ones((n, n), dtype=complex)


def _support_pinv_sqrt(A, tol: Tolerances):
    w, U = herm_eig(A, tol)
    cutoff = tol.pinv_tol * max(1.0, float(w[-1]) if w.size else 1.0)
    keep = w > cutoff
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / np.sqrt(w[keep])
    sq = np.sqrt(np.clip(w, 0.0, None))
    return (U * inv) @ U.conj().T, (U * sq) @ U.conj().T, (U[:, keep] @ U[:, keep].conj().T)


def block_psd_factor(A, B, D, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Contraction ``R`` with ``B = A^{1/2} R D^{1/2}`` for a PSD block matrix.

    Singular corners are handled with pseudo-inverses; ``R`` is confined to
    the supports of ``A`` and ``D``.  Raises :class:`NotPSDBlock` carrying the
    negative eigenvalue when ``[[A, B], [B*, D]]`` is not PSD.
    """
    A, B, D = as_cmatrix(A), as_cmatrix(B), as_cmatrix(D)
    _require_square(A)
    _require_square(D)
    if B.shape != (A.shape[0], D.shape[0]):
        raise ShapeMismatch(f"B has shape {B.shape}, expected {(A.shape[0], D.shape[0])}")
    M = np.block([[A, B], [B.conj().T, D]])
    if not is_psd(M, tol):
        w, U = np.linalg.eigh(0.5 * (M + M.conj().T))
        raise NotPSDBlock(w[0], U[:, 0])
    Ai, _, PA = _support_pinv_sqrt(A, tol)
    Di, _, PD = _support_pinv_sqrt(D, tol)
    return PA @ (Ai @ B @ Di) @ PD
