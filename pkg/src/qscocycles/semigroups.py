"""One-parameter semigroups and indexed families of them.

A family is stored through its generators; every time evaluation goes
through the matrix exponential, so the semigroup law holds by construction
up to ``expm`` rounding.  The index set ``T`` is an ordered array of noise
vectors whose row 0 is the zero vector, so component ``(0, 0)`` is always
the expectation semigroup.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import numcore
from .errors import IndexNotInT, NegativeTime, NotUnitalCP, ShapeMismatch, ValueNotInT
from .numcore import DEFAULT_TOL, Tolerances
from .opspace import (OperatorSpace, SuperMap, check_cp_sampled, full_algebra, ket_space,
                      matrix_space, tilde_system)


@dataclass(eq=False)
class Generator:
    space: OperatorSpace
    coord_matrix: np.ndarray

    def __post_init__(self):
        self.coord_matrix = np.asarray(self.coord_matrix, dtype=complex)
        if self.coord_matrix.shape != (self.space.dim, self.space.dim):
            raise ShapeMismatch(f"generator shape {self.coord_matrix.shape} vs dim {self.space.dim}")


def evolve(L: Generator, t: float) -> SuperMap:
    if t < 0:
        raise NegativeTime(f"t = {t} < 0")
    return SuperMap(L.space, L.space, numcore.expm(t * L.coord_matrix))


def _as_index_set(T) -> np.ndarray:
    T = np.asarray(T, dtype=complex)
    if T.ndim == 1:
        T = T.reshape(-1, 1)
    if T.shape[0] == 0 or np.any(np.abs(T[0]) > 0):
        raise ValueError("T[0] must be the zero vector")
    for i in range(len(T)):
        for j in range(i):
            if np.allclose(T[i], T[j], atol=1e-12, rtol=0):
                raise ValueError(f"T has repeated entries at {j} and {i}")
    return T


class _Memo:
    """Get-or-compute table; equal keys always produce equal values, so races are harmless."""

    def __init__(self):
        self._data = {}
        self._lock = threading.Lock()

    def get(self, key, compute):
        try:
            return self._data[key]
        except KeyError:
            value = compute()
            with self._lock:
                return self._data.setdefault(key, value)

    def __len__(self):
        return len(self._data)


class _IndexedFamily:
    T: np.ndarray
    gens: dict

    @property
    def d(self) -> int:
        return self.T.shape[1]

    @property
    def size(self) -> int:
        return self.T.shape[0]

    def index_of(self, x, atol: float = 1e-12) -> int:
        x = np.atleast_1d(np.asarray(x, dtype=complex))
        if x.shape != (self.d,):
            raise ValueNotInT(f"vector of shape {x.shape} in a family with d = {self.d}")
        hits = np.nonzero(np.all(np.abs(self.T - x) <= atol, axis=1))[0]
        if hits.size == 0:
            raise ValueNotInT(f"{x} is not in T")
        return int(hits[0])

    def _check_index(self, i):
        if not (isinstance(i, (int, np.integer)) and 0 <= i < self.size):
            raise IndexNotInT(f"index {i!r} outside 0..{self.size - 1}")
        return int(i)

    def chi(self, i: int, j: int) -> complex:
        return numcore.chi(self.T[i], self.T[j])

    def gram(self, x, t: float) -> np.ndarray:
        return numcore.gram_matrix([self.T[i] for i in x], t)

    def _exp(self, i, j, t):
        if t < 0:
            raise NegativeTime(f"t = {t} < 0")
        i, j = self._check_index(i), self._check_index(j)
        return self._memo.get((i, j, float(t)), lambda: scipy.linalg.expm(t * self.gens[i, j]))

    def _validate(self, k):
        n = self.size
        for i in range(n):
            for j in range(n):
                if (i, j) not in self.gens:
                    raise ValueError(f"missing generator for pair {(i, j)}")
                self.gens[i, j] = np.asarray(self.gens[i, j], dtype=complex)
                if self.gens[i, j].shape != (k, k):
                    raise ShapeMismatch(f"generator {(i, j)} has shape {self.gens[i, j].shape}")


@dataclass(eq=False)
class AssociatedFamily(_IndexedFamily):
    """Semigroups ``P^{x,y}`` on ``space`` for ``x, y`` ranging over ``T``."""

    space: OperatorSpace
    T: np.ndarray
    gens: dict
    label: str = ""
    _memo: _Memo = field(default_factory=_Memo, repr=False)

    def __post_init__(self):
        self.T = _as_index_set(self.T)
        self.gens = dict(self.gens)
        self._validate(self.space.dim)

    def generator(self, i: int, j: int) -> Generator:
        return Generator(self.space, self.gens[self._check_index(i), self._check_index(j)])

    def semigroup_coords(self, i: int, j: int, t: float) -> np.ndarray:
        return self._exp(i, j, t)

    def semigroup(self, i: int, j: int, t: float) -> SuperMap:
        return SuperMap(self.space, self.space, self._exp(i, j, t))


@dataclass(eq=False)
class OperatorFamily(_IndexedFamily):
    """Operator semigroups ``T^{x,y}_t = exp(t G^{x,y})`` on ``C^m``.

    ``metadata`` may carry ``weyl_c`` when the family comes from a Weyl
    cocycle, which gives verifiers an exact action on coherent spans.
    """

    hilbert_dim: int
    T: np.ndarray
    gens: dict
    label: str = ""
    metadata: dict = field(default_factory=dict)
    _memo: _Memo = field(default_factory=_Memo, repr=False)

    def __post_init__(self):
        self.T = _as_index_set(self.T)
        self.gens = dict(self.gens)
        self._validate(self.hilbert_dim)

    def op(self, i: int, j: int, t: float) -> np.ndarray:
        return self._exp(i, j, t)

    def block(self, x, t: float) -> np.ndarray:
        """``[T^{x_i, x_j}_t]`` assembled as an ``nm x nm`` matrix."""
        m = self.hilbert_dim
        n = len(x)
        out = np.zeros((n * m, n * m), dtype=complex)
        for a in range(n):
            for b in range(n):
                out[a * m:(a + 1) * m, b * m:(b + 1) * m] = self.op(x[a], x[b], t)
        return out


def _block_diag_coords(F: AssociatedFamily, x, t):
    n = len(x)
    k = F.space.dim
    C = np.zeros((n * n * k, n * n * k), dtype=complex)
    for a in range(n):
        for b in range(n):
            s = (a * n + b) * k
            C[s:s + k, s:s + k] = F.semigroup_coords(x[a], x[b], t)
    return C


def schur_tuple(F: AssociatedFamily, x, t: float) -> SuperMap:
    """Schur-action map on ``Mat_n(V)`` whose ``(i, j)`` component is ``P^{x_i, x_j}_t``.

    ``x`` is a sequence of indices into ``F.T``.
    """
    x = [F._check_index(i) for i in x]
    W = matrix_space(F.space, len(x))
    return SuperMap(W, W, _block_diag_coords(F, x, t))


def global_semigroup(F: AssociatedFamily, gamma, t: float) -> SuperMap:
    """``[P^{gamma(a), gamma(b)}_t]`` on ``Mat_I(V)`` for an index map ``gamma: I -> T``."""
    return schur_tuple(F, gamma, t)


def global_generator(F: AssociatedFamily, gamma=None) -> Generator:
    """Generator of the global semigroup (``gamma`` defaults to the identity on ``T``)."""
    gamma = list(range(F.size)) if gamma is None else [F._check_index(i) for i in gamma]
    n = len(gamma)
    k = F.space.dim
    C = np.zeros((n * n * k, n * n * k), dtype=complex)
    for a in range(n):
        for b in range(n):
            s = (a * n + b) * k
            C[s:s + k, s:s + k] = F.gens[gamma[a], gamma[b]]
    return Generator(matrix_space(F.space, n), C)


def tilde_family(F: AssociatedFamily) -> AssociatedFamily:
    """Family on the Paulsen system: corners decay by ``exp(-t chi(x, y))``.

    Component ``(x, y)`` acts as ``P^{x,y}`` on the upper right corner and
    as ``(P^{y,x})^dagger`` on the lower left one.
    """
    k = F.space.dim
    gens = {}
    for (i, j), G in F.gens.items():
        c = -F.chi(i, j)
        gens[i, j] = scipy.linalg.block_diag(np.array([[c]]), np.array([[c]]), G,
                                             np.conj(F.gens[j, i]))
        assert gens[i, j].shape == (2 + 2 * k, 2 + 2 * k)
    return AssociatedFamily(tilde_system(F.space), F.T, gens, label=f"tilde({F.label})")


def trivial_family(V: OperatorSpace, T) -> AssociatedFamily:
    """``P^{x,y}_t = exp(-t chi(x, y)) id``: the family of the cocycle ``a -> a (x) I``."""
    T = _as_index_set(T)
    k = V.dim
    gens = {(i, j): -numcore.chi(T[i], T[j]) * np.eye(k)
            for i in range(len(T)) for j in range(len(T))}
    return AssociatedFamily(V, T, gens, label="trivial")


def lindblad_generator(m: int, hamiltonian=None, jumps=()) -> Generator:
    """Heisenberg-picture Lindblad generator on ``Mat_m``.

    ``L(a) = i[H, a] + sum_k (K_k* a K_k - {K_k* K_k, a} / 2)``; it kills the
    identity, so ``exp(tL)`` is unital and completely positive.
    """
    V = full_algebra(m)
    H = np.zeros((m, m)) if hamiltonian is None else numcore.as_cmatrix(hamiltonian)
    Ks = [numcore.as_cmatrix(K) for K in jumps]

    def L(a):
        out = 1j * (H @ a - a @ H)
        for K in Ks:
            KK = K.conj().T @ K
            out += K.conj().T @ a @ K - 0.5 * (KK @ a + a @ KK)
        return out

    cols = [L(b).ravel() for b in V.basis]
    return Generator(V, np.array(cols).T)


def dephasing_generator() -> Generator:
    """``L(a) = sigma_z a sigma_z - a`` on ``Mat_2``."""
    return lindblad_generator(2, jumps=[np.diag([1.0, -1.0])])


def is_unital_cp_generator(S: Generator, rng=None, t_grid=(0.1, 0.5, 1.0, 2.0),
                           tol: Tolerances = DEFAULT_TOL) -> bool:
    V = S.space
    if not V.is_system:
        return False
    if numcore.op_norm(V.recon(S.coord_matrix @ V.identity_coords())) > tol.eq_tol:
        return False
    rng = np.random.default_rng(0) if rng is None else rng
    return all(check_cp_sampled(evolve(S, t), rng, n_max=2, samples=10, tol=tol).passed
               for t in t_grid)


def product_family(S: Generator, T, check: bool = True, tol: Tolerances = DEFAULT_TOL) -> AssociatedFamily:
    """``P^{x,y}_t = exp(-t chi(x, y)) S_t`` for a unital CP semigroup ``S``."""
    if check and not is_unital_cp_generator(S, tol=tol):
        raise NotUnitalCP("generator does not produce a unital completely positive semigroup")
    T = _as_index_set(T)
    k = S.space.dim
    gens = {(i, j): S.coord_matrix - numcore.chi(T[i], T[j]) * np.eye(k)
            for i in range(len(T)) for j in range(len(T))}
    return AssociatedFamily(S.space, T, gens, label="product")


def contraction_scaled(F, c):
    """Multiply every component by ``exp(-c t)``.

    ``c >= 0`` gives strict contractions; negative ``c`` builds deliberate
    violators.  A complex ``c`` multiplies by a phase as well.
    """
    if isinstance(F, AssociatedFamily):
        k = F.space.dim
        gens = {key: G - c * np.eye(k) for key, G in F.gens.items()}
        return AssociatedFamily(F.space, F.T, gens, label=f"scaled({F.label}, {c})")
    m = F.hilbert_dim
    gens = {key: G - c * np.eye(m) for key, G in F.gens.items()}
    return OperatorFamily(m, F.T, gens, label=f"scaled({F.label}, {c})")


def counterexample_family(c: float = 0.5):
    """Unital CP semigroup on ``Mat_2(C)`` without Schur-action.

    The generator is ``c Psi`` with ``Psi(A) = Phi(A) - A`` and
    ``Phi([[a, b], [c, d]]) = [[d, 0], [0, a]]``; ``V = C`` and ``T = {0, 1}``.
    Off-diagonal entries decay as ``exp(-c t)`` and the difference of the
    diagonal entries as ``exp(-2 c t)``, so ``c = 1/2`` reproduces the
    Grammian ``[[1, e^{-t/2}], [e^{-t/2}, 1]]`` on the all-ones matrix.

    Returns ``(generator, metadata)``.
    """
    V = full_algebra(1)
    W = matrix_space(V, 2)
    psi = np.array([[-1, 0, 0, 1],
                    [0, -1, 0, 0],
                    [0, 0, -1, 0],
                    [1, 0, 0, -1]], dtype=complex)
    meta = {
        "V": V,
        "T": np.array([[0.0], [1.0]], dtype=complex),
        "c": c,
        "box_image": lambda t: np.array([[1, np.exp(-c * t)], [np.exp(-c * t), 1]], dtype=complex),
        "p0_image": lambda t: np.diag([(1 + np.exp(-2 * c * t)) / 2, (1 - np.exp(-2 * c * t)) / 2]).astype(complex),
    }
    return Generator(W, c * psi), meta


def trivial_operator_family(m: int, T) -> OperatorFamily:
    """``T^{x,y}_t = exp(-t chi(x, y)) I_m``."""
    T = _as_index_set(T)
    gens = {(i, j): -numcore.chi(T[i], T[j]) * np.eye(m)
            for i in range(len(T)) for j in range(len(T))}
    return OperatorFamily(m, T, gens, label="trivial-operator")


def weyl_scalar_family(c, T) -> OperatorFamily:
    """Associated semigroups of the unitary left cocycle ``X_t = W(c 1_[0,t))``.

    ``T^{x,y}_t = exp(t (-i Im<c, y> - chi(x, c + y)))``.
    """
    T = _as_index_set(T)
    c = np.atleast_1d(np.asarray(c, dtype=complex))
    if c.shape != (T.shape[1],):
        raise ShapeMismatch(f"c has shape {c.shape}, noise dimension is {T.shape[1]}")
    gens = {}
    for i, x in enumerate(T):
        for j, y in enumerate(T):
            rate = -1j * np.vdot(c, y).imag - numcore.chi(x, c + y)
            gens[i, j] = np.array([[rate]])
    return OperatorFamily(1, T, gens, label="weyl", metadata={"weyl_c": c})


def ket_family(F: OperatorFamily) -> AssociatedFamily:
    """Map family on column vectors ``|u> -> |T^{x,y}_t u>``.

    Left operator cocycles correspond to cocycles on the ket space, and the
    composition order of maps matches the operator product order.
    """
    V = ket_space(F.hilbert_dim)
    return AssociatedFamily(V, F.T, dict(F.gens), label=f"ket({F.label})")
