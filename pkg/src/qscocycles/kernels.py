"""Step functions, coherent spans and cocycle kernels.

Fock space is never truncated.  A vector is a finite sum
``sum_i u_i (x) w(f_i)`` of initial-space vectors tensored with normalised
exponential vectors of step functions, and every pairing is computed from
``<w(f), w(g)> = exp(-chi(f, g))`` exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import numcore
from .errors import DimensionMismatch, NegativeTime, ShapeMismatch
from .numcore import DEFAULT_TOL, Tolerances
from .opspace import WorstCase, sample_positive
from .semigroups import AssociatedFamily, OperatorFamily, _Memo, ket_family

TIE_TOL = 1e-12
ILL_CONDITIONED = 1e12


class StepFunction:
    """Right-continuous step function ``[0, inf) -> C^d``.

    ``values[0]`` holds on ``[0, breakpoints[0])``, ``values[i]`` on
    ``[breakpoints[i-1], breakpoints[i])`` and ``tail`` from the last
    breakpoint on.  Instances are kept in normal form: no zero-length pieces
    and no two adjacent pieces with equal values.
    """

    __slots__ = ("breakpoints", "values", "tail", "_key")

    def __init__(self, breakpoints, values, tail):
        bp = np.asarray(breakpoints, dtype=float).reshape(-1)
        tail = np.atleast_1d(np.asarray(tail, dtype=complex))
        vals = np.asarray(values, dtype=complex).reshape(len(bp), -1) if len(bp) else \
            np.zeros((0, tail.size), dtype=complex)
        if vals.shape[1] != tail.size:
            raise DimensionMismatch(f"values of dimension {vals.shape[1]}, tail of dimension {tail.size}")
        if np.any(bp < -TIE_TOL) or np.any(np.diff(bp) < -TIE_TOL):
            raise ValueError("breakpoints must be nonnegative and increasing")
        starts = np.concatenate([[0.0], bp])
        pieces = list(vals) + [tail]
        # drop pieces of (numerically) zero length; the later value wins
        keep_s, keep_v = [], []
        for k in range(len(starts)):
            if k + 1 < len(starts) and starts[k + 1] - starts[k] <= TIE_TOL:
                continue
            keep_s.append(starts[k])
            keep_v.append(pieces[k])
        keep_s[0] = 0.0
        s2, v2 = [keep_s[0]], [keep_v[0]]
        for s, v in zip(keep_s[1:], keep_v[1:]):
            if np.array_equal(v, v2[-1]):
                continue
            s2.append(s)
            v2.append(v)
        self.breakpoints = np.array(s2[1:], dtype=float)
        self.values = np.array(v2[:-1], dtype=complex).reshape(len(s2) - 1, tail.size)
        self.tail = np.array(v2[-1], dtype=complex)
        self._key = None

    @classmethod
    def constant(cls, x) -> "StepFunction":
        return cls([], [], x)

    @classmethod
    def indicator(cls, x, t: float) -> "StepFunction":
        """``x 1_[0, t)``."""
        x = np.atleast_1d(np.asarray(x, dtype=complex))
        return cls([t], [x], np.zeros_like(x))

    @classmethod
    def from_pieces(cls, pieces) -> "StepFunction":
        """From ``[(start, value), ...]``; the first start is 0 and the last piece never ends."""
        starts = [float(s) for s, _ in pieces]
        if not pieces or abs(starts[0]) > TIE_TOL:
            raise ValueError("first piece must start at 0")
        vals = [v for _, v in pieces]
        return cls(starts[1:], vals[:-1], vals[-1])

    @property
    def d(self) -> int:
        return self.tail.size

    def key(self):
        if self._key is None:
            self._key = (self.breakpoints.tobytes(), self.values.tobytes(), self.tail.tobytes())
        return self._key

    def __eq__(self, other):
        return isinstance(other, StepFunction) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"StepFunction(breakpoints={self.breakpoints.tolist()}, values={self.values.tolist()}, tail={self.tail.tolist()})"

    def __call__(self, s: float) -> np.ndarray:
        k = int(np.searchsorted(self.breakpoints, s, side="right"))
        return self.tail if k == len(self.breakpoints) else self.values[k]

    def starts(self) -> np.ndarray:
        return np.concatenate([[0.0], self.breakpoints])

    def piece_values(self) -> np.ndarray:
        return np.concatenate([self.values, self.tail[None]], axis=0)

    def _binary(self, other, op) -> "StepFunction":
        if other.d != self.d:
            raise DimensionMismatch(f"{self.d} vs {other.d}")
        pts = merge_points([self.breakpoints, other.breakpoints])
        probes = _midpoints(pts)
        vals = [op(self(p), other(p)) for p in probes]
        return StepFunction(pts, vals, op(self.tail, other.tail))

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __neg__(self):
        return StepFunction(self.breakpoints, -self.values, -self.tail)

    def scale(self, z) -> "StepFunction":
        return StepFunction(self.breakpoints, z * self.values, z * self.tail)

    def to_json(self) -> dict:
        from .serial import encode_vector
        return {"breakpoints": self.breakpoints.tolist(),
                "values": [encode_vector(v) for v in self.values],
                "tail": encode_vector(self.tail)}

    @classmethod
    def from_json(cls, obj) -> "StepFunction":
        from .serial import decode_vector
        return cls(obj.get("breakpoints", []), [decode_vector(v) for v in obj.get("values", [])],
                   decode_vector(obj["tail"]))


def merge_points(point_sets, lo: float = 0.0, hi: float = np.inf) -> np.ndarray:
    """Sorted union of breakpoints strictly inside ``(lo, hi)`` with ties merged."""
    pts = np.sort(np.concatenate([np.asarray(p, dtype=float).reshape(-1) for p in point_sets] + [np.zeros(0)]))
    out = []
    for p in pts:
        if p <= lo + TIE_TOL or p >= hi - TIE_TOL:
            continue
        if out and p - out[-1] <= TIE_TOL:
            continue
        out.append(p)
    return np.array(out, dtype=float)


def _midpoints(pts):
    edges = np.concatenate([[0.0], pts])
    ends = np.concatenate([pts, [edges[-1] + 1.0]])
    return 0.5 * (edges + ends)[:len(pts)]


def partition(fs, t: float, refinement=()) -> np.ndarray:
    """Points ``0 = s_0 < ... < s_{n+1} = t`` containing every jump of ``fs`` in ``(0, t)``."""
    if t < 0:
        raise NegativeTime(f"t = {t} < 0")
    inner = merge_points([f.breakpoints for f in fs] + [np.asarray(refinement, dtype=float)], 0.0, t)
    return np.concatenate([[0.0], inner, [t]]) if t > 0 else np.array([0.0])


def segments(fs, t: float, refinement=()):
    """``[(duration, [f(s) for f in fs]), ...]`` over the common partition of ``[0, t)``."""
    pts = partition(fs, t, refinement)
    out = []
    for a, b in zip(pts[:-1], pts[1:]):
        mid = 0.5 * (a + b)
        out.append((b - a, [f(mid) for f in fs]))
    return out


def shift_restrict(f: StepFunction, r: float) -> StepFunction:
    """``s -> f(s + r)``."""
    if r < 0:
        raise NegativeTime(f"r = {r} < 0")
    pts = f.breakpoints[f.breakpoints > r + TIE_TOL]
    vals = [f(r + 2 * TIE_TOL)] + [f(p) for p in pts[:-1]] if len(pts) else []
    return StepFunction(pts - r, vals, f.tail)


def time_reverse(f: StepFunction, t: float) -> StepFunction:
    """``s -> f(t - s)`` on ``[0, t)``, unchanged on ``[t, inf)``; right-continuous representative."""
    if t < 0:
        raise NegativeTime(f"t = {t} < 0")
    if t == 0:
        return f
    segs = segments([f], t)
    pieces, s = [], 0.0
    for dt, (v,) in reversed(segs):
        pieces.append((s, v))
        s += dt
    after = f.breakpoints[f.breakpoints > t + TIE_TOL]
    pieces.append((t, f(t + 2 * TIE_TOL)))
    pieces += [(p, f(p)) for p in after]
    return StepFunction.from_pieces(pieces)


def chi_path(f: StepFunction, g: StepFunction, t: float) -> complex:
    """``chi(f 1_[0,t), g 1_[0,t))`` as an exact sum over the common partition."""
    if f.d != g.d:
        raise DimensionMismatch(f"{f.d} vs {g.d}")
    return complex(sum(dt * numcore.chi(a, b) for dt, (a, b) in segments([f, g], t)))


def support_end(f: StepFunction) -> float:
    if np.any(f.tail != 0):
        return np.inf
    return float(f.breakpoints[-1]) if len(f.breakpoints) else 0.0


def chi_full(f: StepFunction, g: StepFunction) -> complex:
    """``chi(f, g)`` over the whole half-line; both functions need compact support."""
    end = max(support_end(f), support_end(g))
    if not np.isfinite(end):
        raise ValueError("full-line pairings need step functions with zero tail")
    return chi_path(f, g, end)


def inner_full(f: StepFunction, g: StepFunction) -> complex:
    """``<f, g>`` in ``L^2(R_+; C^d)``, conjugate-linear in ``f``."""
    end = min(support_end(f), support_end(g))
    if not np.isfinite(end):
        raise ValueError("full-line pairings need one step function with zero tail")
    return complex(sum(dt * np.vdot(a, b) for dt, (a, b) in segments([f, g], end)))


def exp_gram(fs, t: float) -> np.ndarray:
    """``[exp(-chi_path(f_i, f_j, t))]``: Gram matrix of the coherent vectors of ``f_i 1_[0,t)``."""
    n = len(fs)
    G = np.empty((n, n), dtype=complex)
    for i in range(n):
        G[i, i] = 1.0
        for j in range(i + 1, n):
            G[i, j] = np.exp(-chi_path(fs[i], fs[j], t))
            G[j, i] = np.conj(G[i, j])
    return G


@dataclass
class CoherentSpanElement:
    """``sum_i u_i (x) w(f_i)`` with ``w`` the normalised exponential vector."""

    terms: list = field(default_factory=list)

    def __post_init__(self):
        self.terms = [(np.atleast_1d(np.asarray(u, dtype=complex)), f) for u, f in self.terms]
        dims = {u.size for u, _ in self.terms}
        if len(dims) > 1:
            raise DimensionMismatch(f"initial vectors of sizes {sorted(dims)}")

    @property
    def m(self) -> int:
        return self.terms[0][0].size if self.terms else 0

    def __add__(self, other):
        return CoherentSpanElement(self.terms + other.terms)

    def scale(self, z):
        return CoherentSpanElement([(z * u, f) for u, f in self.terms])

    def merged(self, atol: float = 0.0) -> "CoherentSpanElement":
        """Combine terms whose step functions agree to within ``atol``."""
        out = []
        for u, f in self.terms:
            for k, (v, g) in enumerate(out):
                if f == g or (atol > 0 and _close(f, g, atol)):
                    out[k] = (v + u, g)
                    break
            else:
                out.append((u.copy(), f))
        return CoherentSpanElement(out)


def _close(f: StepFunction, g: StepFunction, atol: float) -> bool:
    if f.breakpoints.shape != g.breakpoints.shape or f.d != g.d:
        return False
    scale = 1.0 + max(np.max(np.abs(f.piece_values())), np.max(np.abs(g.piece_values())))
    return bool(np.all(np.abs(f.breakpoints - g.breakpoints) <= TIE_TOL)
                and np.all(np.abs(f.piece_values() - g.piece_values()) <= atol * scale))


def pairing(xi: CoherentSpanElement, eta: CoherentSpanElement) -> complex:
    """``<xi, eta>``, conjugate-linear in ``xi``."""
    total = 0j
    for u, f in xi.terms:
        for v, g in eta.terms:
            total += np.vdot(u, v) * np.exp(-chi_full(f, g))
    return complex(total)


def weyl_apply(c: StepFunction, xi: CoherentSpanElement) -> CoherentSpanElement:
    """``I (x) W(c)`` with ``W(c) w(f) = exp(-i Im<c, f>) w(c + f)``."""
    return CoherentSpanElement([(np.exp(-1j * inner_full(c, f).imag) * u, c + f) for u, f in xi.terms])


def weyl_kernel(c, t: float, xi: CoherentSpanElement) -> CoherentSpanElement:
    """``W(c 1_[0,t))`` applied to ``xi``."""
    return weyl_apply(StepFunction.indicator(c, t), xi)


def span_difference(a: CoherentSpanElement, b: CoherentSpanElement) -> float:
    """Largest coefficient difference after merging equal exponential vectors.

    Exponential vectors of distinct functions are linearly independent, so
    zero here means ``a == b``.  Functions agreeing to rounding level are
    identified, since sums of step functions are not exactly associative.
    """
    diff = (a + b.scale(-1.0)).merged(atol=1e-12)
    return max((float(np.linalg.norm(u)) for u, _ in diff.terms), default=0.0)


def ccr_residual(f: StepFunction, g: StepFunction, xi: CoherentSpanElement) -> float:
    """``W(f) W(g) xi`` against ``exp(-i Im<f, g>) W(f + g) xi``."""
    lhs = weyl_apply(f, weyl_apply(g, xi))
    rhs = weyl_apply(f + g, xi).scale(np.exp(-1j * inner_full(f, g).imag))
    return span_difference(lhs, rhs)


def weyl_gram_identity_defect(x, lam, t: float) -> float:
    """``F* (lam (x) I) F`` against ``gram_matrix(x, t) * lam`` for ``F e_j = e_j (x) W(x_j 1_[0,t)) w(0)``."""
    xs = [np.atleast_1d(np.asarray(v, dtype=complex)) for v in x]
    n = len(xs)
    lam = numcore.as_cmatrix(lam)
    if lam.shape != (n, n):
        raise ShapeMismatch(f"lambda has shape {lam.shape}, expected {(n, n)}")
    vac = StepFunction.constant(np.zeros_like(xs[0]))
    cols = [weyl_kernel(xs[j], t, CoherentSpanElement([(np.eye(n)[j], vac)])) for j in range(n)]
    lhs = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            image = CoherentSpanElement([(lam @ u, f) for u, f in cols[j].terms])
            lhs[i, j] = pairing(cols[i], image)
    return numcore.op_norm(lhs - numcore.gram_matrix(xs, t) * lam)


def weyl_direct_kernel(c, f: StepFunction, g: StepFunction, t: float) -> complex:
    """``<w(f 1_[0,t)), W(c 1_[0,t)) w(g 1_[0,t))>`` from the Weyl action alone."""
    ft, gt = restrict(f, t), restrict(g, t)
    xi = weyl_kernel(c, t, CoherentSpanElement([(np.ones(1), gt)]))
    return pairing(CoherentSpanElement([(np.ones(1), ft)]), xi)


def restrict(f: StepFunction, t: float) -> StepFunction:
    """``f 1_[0, t)``."""
    pts = f.breakpoints[f.breakpoints < t - TIE_TOL]
    vals = [f(0.0)] + [f(p) for p in pts]
    return StepFunction(list(pts) + [t], vals, np.zeros(f.d))


class CocycleKernel:
    """``k^{f,g}_t`` from the semigroup decomposition of a family.

    For an operator family the kernel acts on column vectors, so that
    ``eval(f, g, t, u) = X^{f,g}_t u``; ``side`` selects left (earliest
    factor leftmost) or right cocycles (earliest factor rightmost).
    """

    def __init__(self, family, side: str = "left"):
        if side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        self.operator_family = family if isinstance(family, OperatorFamily) else None
        self.family: AssociatedFamily = ket_family(family) if self.operator_family is not None else family
        self.side = side
        self._memo = _Memo()

    @property
    def space(self):
        return self.family.space

    def factors(self, f: StepFunction, g: StepFunction, t: float, refinement=()):
        """``[(x_k index, y_k index, duration), ...]`` in time order."""
        F = self.family
        return [(F.index_of(a), F.index_of(b), float(dt)) for dt, (a, b) in segments([f, g], t, refinement)]

    def coords(self, f: StepFunction, g: StepFunction, t: float, refinement=()) -> np.ndarray:
        fac = tuple(self.factors(f, g, t, refinement))
        return self._memo.get((fac, self.side), lambda: self._compose(fac))

    def _compose(self, fac):
        C = np.eye(self.space.dim, dtype=complex)
        seq = fac if self.side == "left" else reversed(fac)
        for i, j, dt in seq:
            C = C @ self.family.semigroup_coords(i, j, dt)
        return C

    def eval(self, f, g, t, a, refinement=()) -> np.ndarray:
        V = self.space
        return V.recon(self.coords(f, g, t, refinement) @ V.coords(a))

    def operator(self, f, g, t, refinement=()) -> np.ndarray:
        if self.operator_family is None:
            raise TypeError("operator kernels need an OperatorFamily")
        return self.coords(f, g, t, refinement)


def eval_kernel(K: CocycleKernel, f: StepFunction, g: StepFunction, t: float, a, refinement=()) -> np.ndarray:
    return K.eval(f, g, t, a, refinement)


def operator_kernel(F: OperatorFamily, f: StepFunction, g: StepFunction, t: float, side: str = "left") -> np.ndarray:
    return CocycleKernel(F, side).operator(f, g, t)


def partition_invariance_defect(K: CocycleKernel, f, g, t, a, refinement) -> float:
    a = numcore.as_cmatrix(a)
    return numcore.op_norm(K.eval(f, g, t, a) - K.eval(f, g, t, a, refinement))


def cocycle_identity_defect(K: CocycleKernel, f, g, r: float, t: float, a) -> float:
    """``k^{f,g}_{r+t}`` against ``k^{f,g}_r o k^{s_r f, s_r g}_t``."""
    a = numcore.as_cmatrix(a)
    inner = K.eval(shift_restrict(f, r), shift_restrict(g, r), t, a)
    return numcore.op_norm(K.eval(f, g, r + t, a) - K.eval(f, g, r, inner))


def _span_data(data):
    us = [np.atleast_1d(np.asarray(u, dtype=complex)) for u, _ in data]
    fs = [f for _, f in data]
    return us, fs


def form_matrix(K: CocycleKernel, data, t: float, A) -> np.ndarray:
    """``[<u_i, k^{f_i,f_j}_t(A_ij) u_j>]`` for ``A`` in ``Mat_N(V)``."""
    us, fs = _span_data(data)
    N = len(us)
    V = K.space
    if V.m_out != V.m_in:
        raise ShapeMismatch("form matrices need square blocks")
    m = V.m_out
    A = numcore.as_cmatrix(A)
    if A.shape != (N * m, N * m):
        raise ShapeMismatch(f"A has shape {A.shape}, expected {(N * m, N * m)}")
    out = np.empty((N, N), dtype=complex)
    for i in range(N):
        for j in range(N):
            blk = A[i * m:(i + 1) * m, j * m:(j + 1) * m]
            out[i, j] = np.vdot(us[i], K.eval(fs[i], fs[j], t, blk) @ us[j])
    return out


def span_norm_form(data, t: float) -> np.ndarray:
    """``[<u_i, u_j> exp(-chi_path(f_i, f_j, t))]``; its entry sum is ``||xi||^2``."""
    us, fs = _span_data(data)
    U = np.array([[np.vdot(a, b) for b in us] for a in us], dtype=complex)
    return U * exp_gram(fs, t)


def random_step_function(T, rng, max_jumps: int = 3, horizon: float = 2.5) -> StepFunction:
    """Step function with at most ``max_jumps`` breakpoints, valued in the rows of ``T``."""
    T = np.asarray(T, dtype=complex)
    k = int(rng.integers(0, max_jumps + 1))
    bp = np.sort(rng.uniform(0.0, horizon, size=k))
    idx = rng.integers(0, len(T), size=k + 1)
    return StepFunction(bp, [T[i] for i in idx[:-1]], T[idx[-1]])


def random_span(T, m: int, rng, n_terms: int, max_jumps: int = 3, horizon: float = 2.5):
    """``[(u_i, f_i)]`` with pairwise distinct ``f_i``."""
    fs = []
    while len(fs) < n_terms:
        f = random_step_function(T, rng, max_jumps, horizon)
        if f not in fs:
            fs.append(f)
    return [(rng.standard_normal(m) + 1j * rng.standard_normal(m), f) for f in fs]


def _kernel_trials(K: CocycleKernel, rng, trials, n_max, t_grid, max_jumps):
    m = K.space.m_in
    horizon = max(max(t_grid), 0.5) * 1.25
    for _ in range(trials):
        N = int(rng.integers(1, min(n_max, 4) + 1))
        t = float(t_grid[int(rng.integers(0, len(t_grid)))])
        data = random_span(K.family.T, m, rng, N, max_jumps, horizon)
        G = exp_gram([f for _, f in data], t)
        yield data, t, np.linalg.cond(G) > ILL_CONDITIONED


def kernel_positivity(K: CocycleKernel, rng, trials: int = 200, n_max: int = 4,
                      t_grid=(0.0, 0.25, 0.5, 1.0, 2.0), max_jumps: int = 3, tol: Tolerances = DEFAULT_TOL):
    """Form matrices of sampled positive ``A`` in ``Mat_N(V)`` must be PSD."""
    wc = WorstCase(tol.eig_tol)
    for data, t, ill in _kernel_trials(K, rng, trials, n_max, t_grid, max_jumps):
        A = sample_positive(K.space, len(data), rng, boundary=bool(rng.integers(0, 2)))
        M = form_matrix(K, data, t, A)
        v = numcore.psd_violation(M) / (1 + numcore.op_norm(M))
        if ill and v > tol.eig_tol:
            wc.inconclusive = True
            continue
        wc.update(v, {"t": t, "span": _span_json(data), "A": A})
    return wc.verdict()


def _unit_box(K, N):
    return np.kron(np.ones((N, N)), np.eye(K.space.m_out))


def kernel_contractivity(K: CocycleKernel, rng, trials: int = 200, n_max: int = 4,
                         t_grid=(0.0, 0.25, 0.5, 1.0, 2.0), max_jumps: int = 3, tol: Tolerances = DEFAULT_TOL):
    """``span_norm_form - form_matrix(I (x) box)`` must be PSD."""
    wc = WorstCase(tol.eig_tol)
    for data, t, ill in _kernel_trials(K, rng, trials, n_max, t_grid, max_jumps):
        D = span_norm_form(data, t) - form_matrix(K, data, t, _unit_box(K, len(data)))
        v = numcore.psd_violation(D) / (1 + numcore.op_norm(span_norm_form(data, t)))
        if ill and v > tol.eig_tol:
            wc.inconclusive = True
            continue
        wc.update(v, {"t": t, "span": _span_json(data), "min_eig": numcore.min_eig(D)})
    return wc.verdict()


def kernel_unitality(K: CocycleKernel, rng, trials: int = 200, n_max: int = 4,
                     t_grid=(0.0, 0.25, 0.5, 1.0, 2.0), max_jumps: int = 3, tol: Tolerances = DEFAULT_TOL):
    """``form_matrix(I (x) box) == span_norm_form``."""
    wc = WorstCase(tol.eq_tol)
    for data, t, _ in _kernel_trials(K, rng, trials, n_max, t_grid, max_jumps):
        S = span_norm_form(data, t)
        D = S - form_matrix(K, data, t, _unit_box(K, len(data)))
        wc.update(numcore.op_norm(D) / (1 + numcore.op_norm(S)), {"t": t, "span": _span_json(data)})
    return wc.verdict()


def _span_json(data):
    return [{"u": u, "f": f.to_json()} for u, f in data]
