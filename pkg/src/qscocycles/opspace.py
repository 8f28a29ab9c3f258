"""Operator spaces realised as subspaces of rectangular matrices, and linear maps between them.

An :class:`OperatorSpace` is the span of a list of ``m_out x m_in`` matrices.
Linear maps (:class:`SuperMap`) are stored as coordinate matrices with
respect to the bases of their domain and codomain.  Matrix levels
``Mat_n(V)`` are spaces of ``n x n`` block matrices with blocks in ``V``;
their basis is ``E_ij (x) b_k`` in ``(i, j, k)`` order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import numcore
from .errors import (AlreadyUnital, NotASystem, NotFullAlgebra, ShapeMismatch)
from .numcore import DEFAULT_TOL, Tolerances


@dataclass(eq=False)
class OperatorSpace:
    basis: np.ndarray
    is_adjoint_closed: bool = False
    is_system: bool = False
    is_full_algebra: bool = False
    lifted_from: tuple | None = None
    standard: bool = False
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def m_out(self) -> int:
        return self.basis.shape[1]

    @property
    def m_in(self) -> int:
        return self.basis.shape[2]

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def shape(self):
        return self.basis.shape[1:]

    def _pinv(self):
        if "pinv" not in self._cache:
            B = self.basis.reshape(self.dim, -1).T
            self._cache["pinv"] = np.linalg.pinv(B)
        return self._cache["pinv"]

    def coords_batch(self, blocks) -> np.ndarray:
        blocks = np.asarray(blocks, dtype=complex)
        N = blocks.shape[0]
        if self.standard:
            return blocks.reshape(N, -1).copy()
        if self.lifted_from is not None:
            parent, n = self.lifted_from
            sub = blocks.reshape(N, n, parent.m_out, n, parent.m_in).transpose(0, 1, 3, 2, 4)
            c = parent.coords_batch(sub.reshape(N * n * n, parent.m_out, parent.m_in))
            return c.reshape(N, -1)
        return blocks.reshape(N, -1) @ self._pinv().T

    def coords(self, M) -> np.ndarray:
        M = numcore.as_cmatrix(M)
        if M.shape != self.shape:
            raise ShapeMismatch(f"matrix of shape {M.shape} does not fit a space of shape {self.shape}")
        return self.coords_batch(M[None])[0]

    def recon(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=complex)
        if self.lifted_from is not None:
            parent, n = self.lifted_from
            blocks = np.tensordot(c.reshape(n, n, parent.dim), parent.basis, axes=(2, 0))
            return blocks.transpose(0, 2, 1, 3).reshape(self.shape)
        return np.tensordot(c, self.basis, axes=(0, 0))

    def project(self, M) -> np.ndarray:
        return self.recon(self.coords(M))

    def identity_coords(self) -> np.ndarray:
        if self.m_out != self.m_in:
            raise NotASystem("identity needs square matrices")
        return self.coords(np.eye(self.m_out))

    def __repr__(self):
        kind = "system" if self.is_system else ("full" if self.is_full_algebra else "space")
        return f"OperatorSpace({kind}, dim={self.dim}, shape={self.shape})"


def membership(V: OperatorSpace, M, tol: float = 1e-9):
    """Least-squares membership test: ``(residual <= tol * (1 + ||M||), residual)``."""
    M = numcore.as_cmatrix(M)
    if M.shape != V.shape:
        raise ShapeMismatch(f"{M.shape} vs {V.shape}")
    residual = float(np.linalg.norm(M - V.project(M)))
    return residual <= tol * (1.0 + np.linalg.norm(M)), residual


def _detect_flags(basis, tol):
    k, mo, mi = basis.shape
    V = OperatorSpace(basis)
    full = k == mo * mi
    adj = full and mo == mi
    if not full and mo == mi:
        adj = all(membership(V, b.conj().T, tol)[0] for b in basis)
    system = adj and mo == mi and membership(V, np.eye(mo), tol)[0]
    return adj, system, full


def operator_space(basis, tol: Tolerances = DEFAULT_TOL) -> OperatorSpace:
    """Build a space from a list of matrices, detecting the structural flags."""
    basis = np.array([numcore.as_cmatrix(b) for b in basis], dtype=complex)
    if basis.ndim != 3:
        raise ShapeMismatch("basis matrices must share one shape")
    flat = basis.reshape(basis.shape[0], -1)
    s = np.linalg.svd(flat, compute_uv=False)
    if s.size and s[-1] <= tol.pinv_tol * max(1.0, s[0]):
        raise ValueError("basis is linearly dependent")
    adj, system, full = _detect_flags(basis, tol.eq_tol)
    return OperatorSpace(basis, is_adjoint_closed=adj, is_system=system, is_full_algebra=full)


def full_algebra(m_out: int, m_in: int | None = None) -> OperatorSpace:
    """All ``m_out x m_in`` matrices with the standard basis in row-major order."""
    m_in = m_out if m_in is None else m_in
    basis = np.eye(m_out * m_in, dtype=complex).reshape(m_out * m_in, m_out, m_in)
    square = m_out == m_in
    return OperatorSpace(basis, is_adjoint_closed=square, is_system=square,
                         is_full_algebra=True, standard=True)


def ket_space(m: int) -> OperatorSpace:
    """Column vectors ``B(C; C^m)``."""
    return full_algebra(m, 1)


def matrix_space(V: OperatorSpace, n: int) -> OperatorSpace:
    """``Mat_n(V)``; the same object is returned on repeated calls."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return V
    key = ("lift", n)
    if key not in V._cache:
        k = V.dim
        basis = np.zeros((n * n * k, n * V.m_out, n * V.m_in), dtype=complex)
        idx = 0
        for i in range(n):
            for j in range(n):
                for b in V.basis:
                    basis[idx, i * V.m_out:(i + 1) * V.m_out, j * V.m_in:(j + 1) * V.m_in] = b
                    idx += 1
        V._cache[key] = OperatorSpace(basis, is_adjoint_closed=V.is_adjoint_closed,
                                      is_system=V.is_system, is_full_algebra=V.is_full_algebra,
                                      lifted_from=(V, n))
    return V._cache[key]


def block_count(V: OperatorSpace) -> int:
    return V.lifted_from[1] if V.lifted_from is not None else 1


def adjoint_space(V: OperatorSpace) -> OperatorSpace:
    if "adjoint" not in V._cache:
        if V.lifted_from is not None:
            parent, n = V.lifted_from
            W = matrix_space(adjoint_space(parent), n)
        else:
            W = OperatorSpace(V.basis.conj().transpose(0, 2, 1).copy(),
                              is_adjoint_closed=V.is_adjoint_closed, is_system=V.is_system,
                              is_full_algebra=V.is_full_algebra)
        V._cache["adjoint"] = W
        W._cache["adjoint"] = V
    return V._cache["adjoint"]


def hermitian_basis(V: OperatorSpace, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Real basis of the Hermitian elements of an adjoint-closed space."""
    if not V.is_adjoint_closed:
        raise NotASystem("hermitian basis needs an adjoint-closed space")
    if "herm" not in V._cache:
        cands = []
        for b in V.basis:
            cands.append(b + b.conj().T)
            cands.append(1j * (b - b.conj().T))
        cands = np.array(cands)
        real = np.concatenate([cands.real.reshape(len(cands), -1),
                               cands.imag.reshape(len(cands), -1)], axis=1)
        U, s, Vt = np.linalg.svd(real, full_matrices=False)
        r = int(np.sum(s > tol.pinv_tol * max(1.0, s[0])))
        half = V.m_out * V.m_in
        rows = Vt[:r]
        H = (rows[:, :half] + 1j * rows[:, half:]).reshape(r, V.m_out, V.m_in)
        V._cache["herm"] = 0.5 * (H + H.conj().transpose(0, 2, 1))
    return V._cache["herm"]


@dataclass(eq=False)
class SuperMap:
    """A linear map ``domain -> codomain`` in basis coordinates."""

    domain: OperatorSpace
    codomain: OperatorSpace
    coord_matrix: np.ndarray

    def __post_init__(self):
        self.coord_matrix = np.asarray(self.coord_matrix, dtype=complex)
        if self.coord_matrix.shape != (self.codomain.dim, self.domain.dim):
            raise ShapeMismatch(
                f"coord matrix {self.coord_matrix.shape} vs dims {(self.codomain.dim, self.domain.dim)}")

    def __call__(self, M) -> np.ndarray:
        return self.codomain.recon(self.coord_matrix @ self.domain.coords(M))

    apply = __call__

    def compose(self, other: "SuperMap") -> "SuperMap":
        """``self o other``."""
        return SuperMap(other.domain, self.codomain, self.coord_matrix @ other.coord_matrix)

    def __matmul__(self, other):
        return self.compose(other)


def identity_map(V: OperatorSpace) -> SuperMap:
    return SuperMap(V, V, np.eye(V.dim, dtype=complex))


def map_from_function(func, domain: OperatorSpace, codomain: OperatorSpace | None = None) -> SuperMap:
    codomain = domain if codomain is None else codomain
    cols = [codomain.coords(func(b)) for b in (domain.recon(e) for e in np.eye(domain.dim))]
    return SuperMap(domain, codomain, np.array(cols).T)


def adjoint_map(phi: SuperMap) -> SuperMap:
    # phi(b_k) = sum_l C_lk c_l  implies  phi(b_k)* = sum_l conj(C_lk) c_l*
    return SuperMap(adjoint_space(phi.domain), adjoint_space(phi.codomain), phi.coord_matrix.conj())


def tilde_system(V: OperatorSpace) -> OperatorSpace:
    """Paulsen's operator system ``[[alpha I, a], [b, beta I]]``, ``a in V``, ``b in V^dagger``.

    Basis order: the two corner projections, then ``V``'s basis in the upper
    right corner, then the adjoint basis in the lower left corner.
    """
    if "tilde" not in V._cache:
        mo, mi, k = V.m_out, V.m_in, V.dim
        N = mo + mi
        basis = np.zeros((2 + 2 * k, N, N), dtype=complex)
        basis[0, :mo, :mo] = np.eye(mo)
        basis[1, mo:, mo:] = np.eye(mi)
        for idx, b in enumerate(V.basis):
            basis[2 + idx, :mo, mo:] = b
            basis[2 + k + idx, mo:, :mo] = b.conj().T
        W = OperatorSpace(basis, is_adjoint_closed=True, is_system=True,
                          is_full_algebra=(2 + 2 * k == N * N))
        W._cache["tilde_of"] = V
        V._cache["tilde"] = W
    return V._cache["tilde"]


def tilde_map(phi: SuperMap) -> SuperMap:
    k_in, k_out = phi.domain.dim, phi.codomain.dim
    C = np.zeros((2 + 2 * k_out, 2 + 2 * k_in), dtype=complex)
    C[0, 0] = C[1, 1] = 1.0
    C[2:2 + k_out, 2:2 + k_in] = phi.coord_matrix
    C[2 + k_out:, 2 + k_in:] = phi.coord_matrix.conj()
    return SuperMap(tilde_system(phi.domain), tilde_system(phi.codomain), C)


def amplify(phi: SuperMap, n: int) -> SuperMap:
    if n == 1:
        return phi
    return SuperMap(matrix_space(phi.domain, n), matrix_space(phi.codomain, n),
                    np.kron(np.eye(n * n), phi.coord_matrix))


def choi(phi: SuperMap) -> np.ndarray:
    """``sum_ij E_ij (x) phi(E_ij)``; only meaningful on full square algebras."""
    V = phi.domain
    if not V.is_full_algebra or V.m_out != V.m_in:
        raise NotFullAlgebra("Choi matrix needs a full square matrix algebra as domain")
    m = V.m_out
    out = []
    for i in range(m):
        row = []
        for j in range(m):
            E = np.zeros((m, m), dtype=complex)
            E[i, j] = 1.0
            row.append(phi(E))
        out.append(row)
    return np.block(out)


def sample_hermitian(V: OperatorSpace, n: int, rng) -> np.ndarray:
    """Random Hermitian element of ``Mat_n(V)`` (real coefficients on a Hermitian basis)."""
    H = hermitian_basis(V)
    k = H.shape[0]
    mo = V.m_out
    out = np.zeros((n * mo, n * mo), dtype=complex)
    for i in range(n):
        for j in range(i, n):
            if i == j:
                blk = np.tensordot(rng.standard_normal(k), H, axes=(0, 0))
            else:
                z = rng.standard_normal(k) + 1j * rng.standard_normal(k)
                blk = np.tensordot(z, H, axes=(0, 0))
            out[i * mo:(i + 1) * mo, j * mo:(j + 1) * mo] = blk
            if i != j:
                out[j * mo:(j + 1) * mo, i * mo:(i + 1) * mo] = blk.conj().T
    return out


def sample_positive(V: OperatorSpace, n: int, rng, boundary: bool = False) -> np.ndarray:
    """Random positive element of ``Mat_n(V)``.

    The default draw is ``H + (||H|| + eps) I`` with ``eps ~ U[0, 1]``.  With
    ``boundary=True`` the shift is ``-lambda_min(H)`` instead, so the sample
    is singular and sits on the boundary of the positive cone.
    """
    if not V.is_system:
        raise NotASystem("positive sampling needs an operator system")
    H = sample_hermitian(V, n, rng)
    eye = np.eye(H.shape[0])
    if boundary:
        return H - numcore.min_eig(H) * eye
    return H + (numcore.op_norm(H) + rng.uniform()) * eye


def sample_element(V: OperatorSpace, n: int, rng) -> np.ndarray:
    """Random element of ``Mat_n(V)`` with operator norm one."""
    W = matrix_space(V, n)
    c = rng.standard_normal(W.dim) + 1j * rng.standard_normal(W.dim)
    A = W.recon(c)
    return A / numcore.op_norm(A)


def block_projection(n: int, i: int, m: int) -> np.ndarray:
    P = np.zeros((n * m, n * m), dtype=complex)
    P[i * m:(i + 1) * m, i * m:(i + 1) * m] = np.eye(m)
    return P


def schur_action_defect(theta: SuperMap, n: int | None = None) -> float:
    """``max ||theta(p_i A p_j) - p_i theta(A) p_j||`` over basis elements ``A`` and ``i, j``."""
    V = theta.domain
    n = block_count(V) if n is None else n
    mo, mi = V.m_out // n, V.m_in // n
    co, ci = theta.codomain.m_out // n, theta.codomain.m_in // n
    left = [block_projection(n, i, mo) for i in range(n)]
    right = [block_projection(n, j, mi) for j in range(n)]
    left_c = [block_projection(n, i, co) for i in range(n)]
    right_c = [block_projection(n, j, ci) for j in range(n)]
    worst = 0.0
    for e in np.eye(V.dim):
        A = V.recon(e)
        TA = theta(A)
        for i in range(n):
            for j in range(n):
                d = theta(left[i] @ A @ right[j]) - left_c[i] @ TA @ right_c[j]
                worst = max(worst, numcore.op_norm(d))
    return worst


@dataclass
class Verdict:
    passed: bool
    worst_violation: float
    witness: dict | None = None
    samples_used: int = 0
    inconclusive: bool = False

    def to_dict(self) -> dict:
        from .serial import to_jsonable
        return {"passed": bool(self.passed), "worst_violation": float(self.worst_violation),
                "witness": to_jsonable(self.witness), "samples_used": int(self.samples_used),
                "inconclusive": bool(self.inconclusive)}


class WorstCase:
    """Running maximum of a violation measure together with its witness."""

    def __init__(self, tol: float):
        self.tol = tol
        self.worst = 0.0
        self.witness = None
        self.count = 0
        self.inconclusive = False

    def update(self, violation: float, witness=None):
        self.count += 1
        if self.witness is None or violation > self.worst:
            self.worst = float(violation)
            self.witness = witness if witness is not None else {}

    def verdict(self) -> Verdict:
        worst = max(self.worst, 0.0)
        return Verdict(worst <= self.tol, worst, self.witness, self.count, self.inconclusive)


def check_cp_sampled(theta: SuperMap, rng, n_max: int = 4, samples: int = 20,
                     tol: Tolerances = DEFAULT_TOL) -> Verdict:
    """Complete positivity: Choi test on full algebras, sampled positivity otherwise."""
    wc = WorstCase(tol.eig_tol)
    if theta.domain.is_full_algebra and theta.domain.m_out == theta.domain.m_in:
        C = choi(theta)
        wc.update(numcore.psd_violation(C) / (1 + numcore.op_norm(C)), {"route": "choi"})
        return wc.verdict()
    for n in range(1, n_max + 1):
        amp = amplify(theta, n)
        for s in range(samples):
            A = sample_positive(theta.domain, n, rng, boundary=bool(s % 2))
            out = amp(A)
            wc.update(numcore.psd_violation(out) / (1 + numcore.op_norm(A)), {"n": n, "input": A})
    return wc.verdict()


def sampled_cb_norm(theta: SuperMap, rng, n_max: int = 4, samples: int = 20) -> tuple[float, int]:
    """Sampled lower bound on the cb-norm; returns ``(bound, amplification level)``."""
    best, level = 0.0, 1
    for n in range(1, n_max + 1):
        amp = amplify(theta, n)
        for _ in range(samples):
            v = numcore.op_norm(amp(sample_element(theta.domain, n, rng)))
            if v > best:
                best, level = v, n
    return best, level


def check_prop_F(theta: SuperMap, rng, n: int | None = None, samples: int = 20, n_max: int = 2,
                 tol: Tolerances = DEFAULT_TOL) -> Verdict:
    """Empirical check of: fixes every ``p_i`` and CPC  implies  unital with Schur-action.

    Fails only when all premises hold on the samples and a conclusion does
    not; the witness records which premises held.
    """
    V = theta.domain
    if not V.is_system:
        raise NotASystem("check_prop_F needs an operator system")
    n = block_count(V) if n is None else n
    m = V.m_out // n
    fixes = max(numcore.op_norm(theta(block_projection(n, i, m)) - block_projection(n, i, m))
                for i in range(n))
    cp = check_cp_sampled(theta, rng, n_max=n_max, samples=samples, tol=tol)
    contraction = numcore.op_norm(theta(np.eye(V.m_out)))
    for _ in range(samples):
        contraction = max(contraction, numcore.op_norm(theta(sample_element(V, 1, rng))))
    premises = {"fixes_projections": fixes <= tol.eq_tol, "completely_positive": cp.passed,
                "contractive": contraction <= 1 + tol.eq_tol}
    defect = schur_action_defect(theta, n)
    unital_err = numcore.op_norm(theta(np.eye(V.m_out)) - np.eye(V.m_out))
    conclusion = max(defect, unital_err)
    witness = {"premises": premises, "projection_defect": fixes, "schur_action_defect": defect,
               "unital_defect": unital_err, "premises_hold": all(premises.values())}
    if all(premises.values()):
        return Verdict(conclusion <= tol.eq_tol, conclusion, witness, samples)
    return Verdict(True, 0.0, witness, samples)


def ket_map_of_operator_family(T) -> SuperMap:
    """The map ``|u> -> |T u>`` on column vectors."""
    T = numcore.as_cmatrix(T)
    if T.shape[0] != T.shape[1]:
        raise ShapeMismatch("operator must be square")
    K = ket_space(T.shape[0])
    return SuperMap(K, K, T)


def unitise(C: OperatorSpace, tol: Tolerances = DEFAULT_TOL) -> OperatorSpace:
    """``C + C I`` for an adjoint-closed ``C`` that does not contain the identity."""
    if C.m_out != C.m_in:
        raise NotASystem("unitisation needs square matrices")
    if membership(C, np.eye(C.m_out), tol.eq_tol)[0]:
        raise AlreadyUnital("identity already lies in the span")
    basis = np.concatenate([C.basis, np.eye(C.m_out, dtype=complex)[None]], axis=0)
    U = OperatorSpace(basis, is_adjoint_closed=C.is_adjoint_closed, is_system=C.is_adjoint_closed,
                      is_full_algebra=False)
    U._cache["unitised_from"] = C
    return U


def extend_cp(phi: SuperMap, C: float, tol: Tolerances = DEFAULT_TOL) -> SuperMap:
    """``a + z 1 -> phi(a) + z C I`` on the unitisation of ``phi``'s domain."""
    dom = unitise(phi.domain, tol)
    cod = phi.codomain
    if not membership(cod, np.eye(cod.m_out), tol.eq_tol)[0]:
        cod = unitise(cod, tol)
    cols = [cod.coords(phi(b)) for b in phi.domain.basis]
    cols.append(cod.coords(C * np.eye(cod.m_out)))
    return SuperMap(dom, cod, np.array(cols).T)
