"""Pencils of quadratic forms over a finite field: invariants and normal shapes.

The three pencil ranks are r (max member rank over the closure), R (least
number of variables carrying every member) and r_min (min member rank over the
closure).  r is computed as the generic rank of x*M(q1) + y*M(q2) over the
rational function field with the characteristic-2 semilinear correction, which
agrees with the vanishing/non-vanishing of the generalized minors (ordinary
minors, with central odd-size minors read as half-determinants in char 2).
"""

import itertools
from dataclasses import dataclass, field

from . import gf, linalg
from .errors import PreconditionViolated, ZeroForm
from .quadform import (
    QuadForm,
    coeff_index,
    perm_rows,
    tri,
)


@dataclass
class Pencil:
    q1: QuadForm
    q2: QuadForm
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.q1.ctx != self.q2.ctx or self.q1.n != self.q2.n:
            raise PreconditionViolated("pencil forms must share context and arity")

    @property
    def ctx(self):
        return self.q1.ctx

    @property
    def n(self):
        return self.q1.n

    def member(self, a, b):
        return self.q1.scale(a).add(self.q2.scale(b))

    def apply_U(self, U):
        """Base change: new pair (U11 q1 + U12 q2, U21 q1 + U22 q2)."""
        nq1 = self.member(U[0][0], U[0][1])
        nq2 = self.member(U[1][0], U[1][1])
        return Pencil(nq1, nq2)

    def apply_T(self, T):
        return Pencil(self.q1.transform(T), self.q2.transform(T))

    @property
    def r(self):
        if "r" not in self._cache:
            self._cache["r"] = small_r(self)
        return self._cache["r"]

    @property
    def R(self):
        if "R" not in self._cache:
            self._cache["R"] = big_R(self)
        return self._cache["R"]

    @property
    def r_min(self):
        if "r_min" not in self._cache:
            self._cache["r_min"] = r_min(self)
        return self._cache["r_min"]

    @property
    def F(self):
        if "F" not in self._cache:
            self._cache["F"] = pencil_F(self)
        return self._cache["F"]


def _pencil_poly_matrix(P):
    """t*M(q1) + M(q2) as a matrix of polynomials in t."""
    ctx = P.ctx
    M1 = P.q1.matrix()
    M2 = P.q2.matrix()
    n = P.n
    A = []
    for i in range(n):
        row = []
        for j in range(n):
            row.append(gf.poly_trim(ctx, (M2[i][j], M1[i][j])))
        A.append(row)
    return A


def _form_eval_poly(ctx, q, vec):
    """q evaluated at a vector of polynomials (result: polynomial in t)."""
    acc = ()
    k = 0
    n = q.n
    for i in range(n):
        for j in range(i, n):
            c = q.coeffs[k]
            k += 1
            if c != ctx.zero and vec[i] and vec[j]:
                term = gf.poly_scale(ctx, c, gf.poly_mul(ctx, vec[i], vec[j]))
                acc = gf.poly_add(ctx, acc, term)
    return acc


def _generic_rank_data(P):
    """(matrix generic rank, delta, kernel vectors, witness minor, s-polys)."""
    key = "_grd"
    if key in P._cache:
        return P._cache[key]
    ctx = P.ctx
    A = _pencil_poly_matrix(P)
    k0, kernel, minor = linalg.poly_mat_rank_kernel(ctx, A)
    delta = 0
    spolys = []
    if ctx.p == 2 and k0 < P.n:
        for v in kernel:
            s1 = _form_eval_poly(ctx, P.q1, v)
            s2 = _form_eval_poly(ctx, P.q2, v)
            # member t*q1 + q2 evaluated on the kernel vector
            s = gf.poly_add(ctx, gf.poly_mul(ctx, (ctx.zero, ctx.one), s1), s2)
            spolys.append(s)
            if s:
                delta = 1
    P._cache[key] = (k0, delta, kernel, minor, spolys)
    return P._cache[key]


def small_r(P):
    """Max rank of a pencil member over the algebraic closure."""
    k0, delta, _, _, _ = _generic_rank_data(P)
    return k0 + delta


def big_R(P):
    """n minus the dimension of the pencil's common vertex space."""
    return P.n - len(pencil_vertex_basis(P))


def pencil_vertex_basis(P):
    ctx = P.ctx
    stacked = P.q1.matrix() + P.q2.matrix()
    ker = linalg.kernel_basis(ctx, stacked)
    if ctx.p != 2 or not ker:
        return ker
    rows = []
    for q in (P.q1, P.q2):
        rows.append([ctx.sqrt(q.evaluate(v)) for v in ker])
    if all(s == ctx.zero for row in rows for s in row):
        return ker
    combo = linalg.kernel_basis(ctx, rows)
    out = []
    for c in combo:
        vec = [ctx.zero] * P.n
        for ci, v in zip(c, ker):
            if ci != ctx.zero:
                vec = [ctx.add(a, ctx.mul(ci, b)) for a, b in zip(vec, v)]
        out.append(vec)
    return out


def _member_rank_at(P, fld, a, b):
    """Rank of a*q1 + b*q2 with coefficients embedded into fld (ctx or ExtCtx)."""
    ctx = P.ctx
    if fld is ctx:
        return P.member(a, b).rank()
    emb = fld.embed
    cs = tuple(
        fld.add(fld.mul(a, emb(c1)), fld.mul(b, emb(c2)))
        for c1, c2 in zip(P.q1.coeffs, P.q2.coeffs)
    )
    return QuadForm(fld, P.n, cs).rank()


def r_min(P):
    """Min rank of a pencil member over the algebraic closure.

    Candidate rank-drop points are the roots of a nonzero maximal minor of the
    pencil matrix (plus, in char 2, the common roots of the kernel values), all
    of degree <= n, examined over their minimal fields of definition.
    """
    ctx = P.ctx
    k0, delta, kernel, minor, spolys = _generic_rank_data(P)
    generic = k0 + delta
    best = generic
    candidates = [(ctx, P.q1.ctx.one, ctx.zero), (ctx, ctx.zero, ctx.one)]
    polys = []
    if minor and len(minor) > 1:
        polys.append(minor)
    if delta == 1:
        g = ()
        for s in spolys:
            g = gf.poly_gcd(ctx, g, s) if g else s
        if g and len(g) > 1:
            polys.append(g)
    for f in polys:
        for g, _mult in gf.poly_factor(ctx, f):
            dg = len(g) - 1
            if dg == 0:
                continue
            if dg == 1:
                t0 = ctx.neg(ctx.mul(g[0], ctx.inv(g[1])))
                candidates.append((ctx, t0, ctx.one))
            else:
                ext = gf.ExtCtx(ctx, gf.poly_monic(ctx, g))
                candidates.append((ext, ext.gen(), ext.one))
    for fld, a, b in candidates:
        rk = _member_rank_at(P, fld, a, b)
        if rk < best:
            best = rk
    return best


def pencil_F(P):
    """Coefficients (c_0..c_n) of F(x,y) = det(x M1 + y M2), c_i on x^i y^(n-i).

    In characteristic 2 with n odd the ordinary determinant vanishes
    identically and the half-determinant binary form (via a precision-2
    Galois-ring lift) is returned instead.
    """
    ctx = P.ctx
    n = P.n
    if ctx.p != 2 or n % 2 == 0:
        A = _pencil_poly_matrix(P)
        f = linalg.poly_mat_det(ctx, A)
        return tuple(f[i] if i < len(f) else ctx.zero for i in range(n + 1))
    return _half_det_form(P.q1, P.q2)


def _ring_poly_mul(rctx, f, g):
    if not f or not g:
        return ()
    out = [rctx.zero] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        if a != rctx.zero:
            for j, b in enumerate(g):
                if b != rctx.zero:
                    out[i + j] = rctx.add(out[i + j], rctx.mul(a, b))
    while out and out[-1] == rctx.zero:
        out.pop()
    return tuple(out)


def _ring_poly_det(rctx, A):
    """Division-free determinant of a matrix of polynomials over a ring."""
    n = len(A)
    D = {0: (rctx.one,)}
    for r in range(n):
        ND = {}
        row = A[r]
        for mask, val in D.items():
            for j in range(n):
                bit = 1 << j
                if mask & bit or not row[j]:
                    continue
                term = _ring_poly_mul(rctx, val, row[j])
                if not term:
                    continue
                if bin(mask >> (j + 1)).count("1") & 1:
                    term = tuple(rctx.neg(c) for c in term)
                nm = mask | bit
                if nm in ND:
                    cur = list(ND[nm])
                    L = max(len(cur), len(term))
                    cur += [rctx.zero] * (L - len(cur))
                    for k, c in enumerate(term):
                        cur[k] = rctx.add(cur[k], c)
                    while cur and cur[-1] == rctx.zero:
                        cur.pop()
                    ND[nm] = tuple(cur)
                else:
                    ND[nm] = term
        D = ND
        if not D:
            return ()
    return D.get((1 << n) - 1, ())


def _half_det_form(q1, q2, prec=2):
    """Half-determinant of x*q1 + y*q2 as a binary form (char 2, odd size)."""
    ctx = q1.ctx
    n = q1.n
    rctx = gf.RingCtx(2, ctx.m, ctx.modulus, prec + 1)
    L1 = QuadForm(rctx, n, tuple(rctx.lift(c) for c in q1.coeffs))
    L2 = QuadForm(rctx, n, tuple(rctx.lift(c) for c in q2.coeffs))
    M1 = L1.matrix()
    M2 = L2.matrix()
    A = []
    for i in range(n):
        row = []
        for j in range(n):
            e = [M2[i][j], M1[i][j]]
            while e and e[-1] == rctx.zero:
                e.pop()
            row.append(tuple(e))
        A.append(row)
    f = _ring_poly_det(rctx, A)
    out = []
    for i in range(n + 1):
        c = f[i] if i < len(f) else rctx.zero
        out.append(rctx.reduce(rctx.pi_div(c, 1)))
    return tuple(out)


def small_r_minors(P):
    """Reference implementation of r by generalized-minor enumeration (small n).

    A k x k minor with row set I and column set J is the ordinary determinant
    unless I = J, k is odd and the characteristic is 2, in which case it is the
    half-determinant binary form of the restricted pencil.
    """
    ctx = P.ctx
    n = P.n
    A = _pencil_poly_matrix(P)
    for k in range(n, 0, -1):
        for I in itertools.combinations(range(n), k):
            for J in itertools.combinations(range(n), k):
                central = I == J
                if ctx.p == 2 and central and k % 2 == 1:
                    sub1 = P.q1.subform(list(I))
                    sub2 = P.q2.subform(list(I))
                    hd = _half_det_form(sub1, sub2)
                    if any(c != ctx.zero for c in hd):
                        return k
                else:
                    sub = [[A[i][j] for j in J] for i in I]
                    if linalg.poly_mat_det(ctx, sub):
                        return k
    return 0


# ---------------------------------------------------------------------------
# shape normal forms
# ---------------------------------------------------------------------------


@dataclass
class ShapeReport:
    kind: str  # shape1 | shape2a | shape2b | shape2c
    U: tuple  # 2x2 pencil basis change applied first
    T: tuple  # variable change applied to the new basis
    q1p: QuadForm  # the transformed first form (function of the first r vars)
    q2p: QuadForm  # the transformed second form
    r: int
    R: int


def _rank_r_basis(P, r):
    """Smallest x (canonical order) with rank(q1 + x q2) = r, else swap to q2."""
    ctx = P.ctx
    for x in ctx.elements():
        cand = P.member(ctx.one, x)
        if cand.rank() == r:
            U = ((ctx.one, x), (ctx.zero, ctx.one))
            return Pencil(cand, P.q2), U
    if P.q2.rank() == r:
        U = ((ctx.zero, ctx.one), (ctx.one, ctx.zero))
        return Pencil(P.q2, P.q1), U
    raise PreconditionViolated("no rank-r member defined over the base field")


def _compress_to_big_R(P):
    """Variable change placing the whole pencil in the first R variables."""
    ctx = P.ctx
    vert = pencil_vertex_basis(P)
    if not vert:
        return linalg.identity(ctx, P.n)
    M = linalg.complete_basis(ctx, vert, P.n)
    cols = linalg.transpose(M)
    comp = cols[len(vert):]
    return linalg.transpose(comp + vert)


def _compress_form_front(q, within):
    """Transform on the variables `within` making q a function of the leading ones.

    Returns a full-size matrix acting as identity outside `within`.
    """
    ctx = q.ctx
    sub = q.subform(within)
    vert = sub.vertex_space()
    if not vert:
        return linalg.identity(ctx, q.n)
    M = linalg.complete_basis(ctx, vert, len(within))
    cols = linalg.transpose(M)
    comp = cols[len(vert):]
    W = linalg.transpose(comp + vert)
    full = linalg.identity(ctx, q.n)
    for i, vi in enumerate(within):
        for j, vj in enumerate(within):
            full[vi][vj] = W[i][j]
    return full


def _linear_to_coordinate(ctx, n, coeffs, within, slot):
    """Full-size transform making the linear form sum(coeffs[i] X_within[i])
    become the coordinate X_slot (slot must belong to `within`)."""
    k = len(within)
    ker = linalg.kernel_basis(ctx, [list(coeffs)])
    w = None
    for e in range(k):
        if coeffs[e] != ctx.zero:
            w = [ctx.zero] * k
            w[e] = ctx.inv(coeffs[e])
            break
    pos = within.index(slot)
    cols = []
    ki = 0
    for i in range(k):
        if i == pos:
            cols.append(w)
        else:
            cols.append(ker[ki])
            ki += 1
    W = linalg.transpose(cols)
    full = linalg.identity(ctx, n)
    for i, vi in enumerate(within):
        for j, vj in enumerate(within):
            full[vi][vj] = W[i][j]
    return full


def _decompose_q2(q2, r, R):
    """q2 (supported on first R vars) as (q3 on first r, ells, q4 on [r, R))."""
    ctx = q2.ctx
    q3 = q2.subform(list(range(r)))
    q4 = q2.subform(list(range(r, R)))
    ells = {}
    for i in range(r, R):
        ell = [ctx.zero] * r
        for j in range(r):
            ell[j] = q2.coeff(j, i)
        ells[i] = ell
    return q3, ells, q4


def _apply(P, T):
    return Pencil(P.q1.substitute(T), P.q2.substitute(T))


def normalize_shape1(P):
    """Basis and variable change to q1 = q1'(X_1..X_r),
    q2 = q2'(X_1..X_{R-1}) + X_r X_R (odd characteristic, or r even)."""
    ctx = P.ctx
    n = P.n
    r, R = P.r, P.R
    if ctx.order < n:
        raise PreconditionViolated("field too small for the shape normalization")
    if r >= R:
        raise PreconditionViolated("shape normalization needs r < R")
    if ctx.p == 2 and r % 2 == 1:
        raise PreconditionViolated("char 2 with odd r: use normalize_shape2")
    base, U = _rank_r_basis(P, r)
    T = _compress_to_big_R(base)
    cur = _apply(base, T)
    T2 = _compress_form_front(cur.q1, list(range(R)))
    T = linalg.mat_mul(ctx, T, T2)
    cur = _apply(base, T)
    assert cur.q1.rank() == r and all(v < r for v in cur.q1.support())
    q3, ells, q4 = _decompose_q2(cur.q2, r, R)
    assert q4.is_zero_form, "tail block must vanish in shape1"
    i0 = max((i for i, e in ells.items() if any(c != ctx.zero for c in e)), default=None)
    if i0 is None:
        raise PreconditionViolated("R(pencil) computation inconsistent")
    if i0 != R - 1:
        perm = list(range(n))
        perm[i0], perm[R - 1] = perm[R - 1], perm[i0]
        T = linalg.mat_mul(ctx, T, perm_rows(ctx, perm))
        cur = _apply(base, T)
        q3, ells, q4 = _decompose_q2(cur.q2, r, R)
    T6 = _linear_to_coordinate(ctx, n, ells[R - 1], list(range(r)), r - 1)
    T = linalg.mat_mul(ctx, T, T6)
    cur = _apply(base, T)
    rep = ShapeReport(
        "shape1",
        tuple(tuple(row) for row in U),
        tuple(tuple(row) for row in T),
        cur.q1,
        cur.q2,
        r,
        R,
    )
    _verify_shape(P, rep)
    return rep


def normalize_shape2(P):
    """Char-2 analogue for odd r: one of the three shapes
    (a) q2'(X_1..X_{R-1}) + X_r X_R, (b) q2'(X_1..X_r) + X_{r+1}^2,
    (c) q2'(X_1..X_r) + X_{r+1}^2 + X_r X_{r+1}."""
    ctx = P.ctx
    n = P.n
    r, R = P.r, P.R
    if ctx.p != 2 or r % 2 == 0 or r >= R:
        raise PreconditionViolated("normalize_shape2 needs char 2, odd r < R")
    if ctx.order < n:
        raise PreconditionViolated("field too small for the shape normalization")
    base, U = _rank_r_basis(P, r)
    T = _compress_to_big_R(base)
    cur = _apply(base, T)
    T2 = _compress_form_front(cur.q1, list(range(R)))
    T = linalg.mat_mul(ctx, T, T2)
    cur = _apply(base, T)
    assert cur.q1.rank() == r and all(v < r for v in cur.q1.support())
    q3, ells, q4 = _decompose_q2(cur.q2, r, R)
    for i in range(r, R):
        for j in range(i + 1, R):
            assert cur.q2.coeff(i, j) == ctx.zero, "off-diagonal tail term in shape2"
    # q4 is diagonal: a perfect square of a linear form; move it onto X_{r+1}
    diag = [cur.q2.coeff(i, i) for i in range(r, R)]
    if any(c != ctx.zero for c in diag):
        ell = [ctx.sqrt(c) for c in diag]
        Tq4 = _linear_to_coordinate(ctx, n, ell, list(range(r, R)), r)
        T = linalg.mat_mul(ctx, T, Tq4)
        cur = _apply(base, T)
        q3, ells, q4 = _decompose_q2(cur.q2, r, R)
        diag = [cur.q2.coeff(i, i) for i in range(r, R)]
        assert diag[0] == ctx.one and all(c == ctx.zero for c in diag[1:])
        has_c = True
    else:
        has_c = False
    live = [
        i
        for i, e in ells.items()
        if any(c != ctx.zero for c in e) and (not has_c or i != r)
    ]
    if not has_c or live:
        # shape (a): same finish as shape1, pivoting on a live linear form
        if not live:
            live = [i for i, e in ells.items() if any(c != ctx.zero for c in e)]
        if not live:
            raise PreconditionViolated("R(pencil) computation inconsistent")
        i0 = max(live)
        if i0 != R - 1:
            perm = list(range(n))
            perm[i0], perm[R - 1] = perm[R - 1], perm[i0]
            T = linalg.mat_mul(ctx, T, perm_rows(ctx, perm))
            cur = _apply(base, T)
            q3, ells, q4 = _decompose_q2(cur.q2, r, R)
        T6 = _linear_to_coordinate(ctx, n, ells[R - 1], list(range(r)), r - 1)
        T = linalg.mat_mul(ctx, T, T6)
        cur = _apply(base, T)
        kind = "shape2a"
    else:
        # only X_{r} (0-based) carries the tail: R = r + 1 is forced
        assert R == r + 1, "tail variables beyond the square slot cannot vanish"
        ell_r = ells[r]
        if all(c == ctx.zero for c in ell_r):
            kind = "shape2b"
        else:
            T6 = _linear_to_coordinate(ctx, n, ell_r, list(range(r)), r - 1)
            T = linalg.mat_mul(ctx, T, T6)
            cur = _apply(base, T)
            kind = "shape2c"
    rep = ShapeReport(
        kind,
        tuple(tuple(row) for row in U),
        tuple(tuple(row) for row in T),
        cur.q1,
        cur.q2,
        r,
        R,
    )
    _verify_shape(P, rep)
    return rep


def _verify_shape(P, rep):
    ctx = P.ctx
    n = P.n
    r, R = rep.r, rep.R
    base = P.apply_U(rep.U)
    got1 = base.q1.substitute([list(row) for row in rep.T])
    got2 = base.q2.substitute([list(row) for row in rep.T])
    if got1.coeffs != rep.q1p.coeffs or got2.coeffs != rep.q2p.coeffs:
        raise AssertionError("shape transform replay mismatch")
    if any(v >= r for v in got1.support()):
        raise AssertionError("q1 not confined to its rank-many variables")
    if got1.rank() != r:
        raise AssertionError("q1 rank changed by normalization")
    sup2 = got2.support()
    if rep.kind in ("shape1", "shape2a"):
        if got2.coeff(r - 1, R - 1) != ctx.one:
            raise AssertionError("missing X_r X_R unit term")
        for v in sup2:
            if v >= R:
                raise AssertionError("q2 leaks outside the first R variables")
        for j in range(n):
            if j != r - 1 and got2.coeff(min(j, R - 1), max(j, R - 1)) != ctx.zero:
                raise AssertionError("X_R occurs outside the X_r X_R term")
    elif rep.kind == "shape2b":
        if got2.coeff(r, r) != ctx.one:
            raise AssertionError("missing X_{r+1}^2 term")
        for v in sup2:
            if v > r:
                raise AssertionError("q2 leaks beyond X_{r+1}")
        for j in range(r):
            if got2.coeff(j, r) != ctx.zero:
                raise AssertionError("mixed X_{r+1} term in shape2b")
    elif rep.kind == "shape2c":
        if got2.coeff(r, r) != ctx.one or got2.coeff(r - 1, r) != ctx.one:
            raise AssertionError("shape2c terms missing")
        for j in range(r - 1):
            if got2.coeff(j, r) != ctx.zero:
                raise AssertionError("extra mixed X_{r+1} term in shape2c")


@dataclass
class PeelReport:
    U: tuple
    T: tuple
    q3: QuadForm  # in R-2 variables
    q4: QuadForm  # in R-2 variables
    ell: tuple  # coefficients of ell(X_1..X_{R-1})
    r: int
    R: int


def peel_r2(P):
    """Change of variables to q1 = q3(X_1..X_{R-2}) + X_{R-1} ell(X_1..X_{R-1}),
    q2 = q4(X_1..X_{R-2}) + X_{R-1} X_R with rank(q3) = r(q3,q4) = r - 2."""
    ctx = P.ctx
    n = P.n
    r, R = P.r, P.R
    if not (r < R and (r % 2 == 0 or r <= R - 2)):
        raise PreconditionViolated("peel needs r < R with r even or r <= R - 2")
    if ctx.p == 2 and r % 2 == 1:
        rep = normalize_shape2(P)
        if rep.kind != "shape2a":
            raise PreconditionViolated("expected the hyperbolic-tail shape")
    else:
        rep = normalize_shape1(P)
    base = P.apply_U(rep.U)
    T = [list(row) for row in rep.T]
    cur = _apply(base, T)
    # remove the X_{R-1}-part of q2 other than X_{r-1} X_{R-1}
    ell2 = [ctx.zero] * n
    for j in range(R - 1):
        if j != r - 1:
            ell2[j] = cur.q2.coeff(j, R - 1)
    shift = linalg.identity(ctx, n)
    for j in range(n):
        if ell2[j] != ctx.zero:
            shift[R - 1][j] = ctx.neg(ell2[j])
    T = linalg.mat_mul(ctx, T, shift)
    cur = _apply(base, T)
    perm = list(range(n))
    perm[r - 1], perm[R - 2] = perm[R - 2], perm[r - 1]
    T = linalg.mat_mul(ctx, T, perm_rows(ctx, perm))
    cur = _apply(base, T)
    q3 = cur.q1.subform(list(range(R - 2)))
    q4 = cur.q2.subform(list(range(R - 2)))
    ell = tuple(cur.q1.coeff(j, R - 2) for j in range(R - 1))
    _verify_peel(cur, q3, q4, ell, r, R)
    return PeelReport(
        rep.U, tuple(tuple(row) for row in T), q3, q4, ell, r, R
    )


def _verify_peel(cur, q3, q4, ell, r, R):
    ctx = cur.ctx
    n = cur.n
    for v in cur.q1.support():
        if v >= R - 1:
            raise AssertionError("q1 leaks beyond X_{R-1} after peel")
    if cur.q2.coeff(R - 2, R - 1) != ctx.one:
        raise AssertionError("missing X_{R-1} X_R term after peel")
    for j in range(n):
        if j != R - 2 and cur.q2.coeff(min(j, R - 1), max(j, R - 1)) != ctx.zero:
            raise AssertionError("q2 X_R column not clean after peel")
    for v in cur.q2.support():
        if v >= R:
            raise AssertionError("q2 leaks beyond X_R after peel")
    sub = Pencil(q3, q4)
    if q3.rank() != r - 2 or small_r(sub) != r - 2:
        raise AssertionError("peeled pencil rank contract failed")
    if not (R - 3 <= big_R(sub) <= R - 2):
        raise AssertionError("peeled pencil span contract failed")
    if r == 2 and not (q3.is_zero_form and q4.is_zero_form):
        raise AssertionError("r = 2 peel must vanish entirely")


# ---------------------------------------------------------------------------
# singular common zeros in four variables
# ---------------------------------------------------------------------------


def gradients_proportional(q1, q2, x):
    ctx = q1.ctx
    g1 = q1.gradient(x)
    g2 = q2.gradient(x)
    n = len(g1)
    for i in range(n):
        for j in range(i + 1, n):
            d = ctx.sub(ctx.mul(g1[i], g2[j]), ctx.mul(g1[j], g2[i]))
            if d != ctx.zero:
                return False
    return True


def is_singular_common_zero(q1, q2, x):
    ctx = q1.ctx
    return (
        any(c != ctx.zero for c in x)
        and q1.evaluate(x) == ctx.zero
        and q2.evaluate(x) == ctx.zero
        and gradients_proportional(q1, q2, x)
    )


def _exhaustive_singular_zero(q1, q2):
    ctx = q1.ctx
    n = q1.n
    for idx in range(1, ctx.order**n):
        x = []
        k = idx
        for _ in range(n):
            k, rdig = divmod(k, ctx.order)
            x.append(ctx.from_index(rdig))
        if is_singular_common_zero(q1, q2, x):
            return x
    return None


def singular_common_zero_4(P):
    """For a 4-variable pencil with r < 4, a singular common zero; else ('rank4', r).

    Follows the constructive shape analysis when the field is large enough for
    it (#F >= 4) and falls back to exhaustive search over tiny fields.
    Returns ("zero", x) or ("rank4", r).
    """
    ctx = P.ctx
    if P.n != 4:
        raise PreconditionViolated("singular_common_zero_4 needs n = 4")
    r = P.r
    if r >= 4:
        return ("rank4", r)
    if ctx.order < 4:
        x = _exhaustive_singular_zero(P.q1, P.q2)
        if x is None:
            raise AssertionError("no singular common zero found (r < 4, tiny field)")
        return ("zero", x)
    R = P.R
    if R <= 3:
        v = pencil_vertex_basis(P)[0]
        assert is_singular_common_zero(P.q1, P.q2, v)
        return ("zero", v)
    if ctx.p != 2 or r % 2 == 0 or r <= R - 2:
        rep = (
            normalize_shape1(P)
            if (ctx.p != 2 or r % 2 == 0)
            else normalize_shape2(P)
        )
        if rep.kind in ("shape1", "shape2a"):
            e4 = [ctx.zero, ctx.zero, ctx.zero, ctx.one]
            x = linalg.mat_vec(ctx, [list(row) for row in rep.T], e4)
            assert is_singular_common_zero(P.q1, P.q2, x)
            return ("zero", x)
        x = _char2_shape_zero(P, rep)
        return ("zero", x)
    rep = normalize_shape2(P)
    if rep.kind == "shape2a":
        e4 = [ctx.zero, ctx.zero, ctx.zero, ctx.one]
        x = linalg.mat_vec(ctx, [list(row) for row in rep.T], e4)
        assert is_singular_common_zero(P.q1, P.q2, x)
        return ("zero", x)
    x = _char2_shape_zero(P, rep)
    return ("zero", x)


def _char2_shape_zero(P, rep):
    """Singular common zero for the char-2 shapes (b) and (c) with r = 3, n = 4."""
    ctx = P.ctx
    n = 4
    base = P.apply_U(rep.U)
    T = [list(row) for row in rep.T]
    cur = _apply(base, T)
    q1, q2 = cur.q1, cur.q2
    if rep.kind == "shape2b":
        # q2 = q2'(X0,X1,X2) + X3^2: kill the X2-cross part of q2'
        sub = q2.subform([0, 1, 2])
        ker = linalg.kernel_basis(ctx, sub.matrix())
        v = ker[0]
        W3 = linalg.complete_basis(ctx, [v], 3)
        cols = linalg.transpose(W3)
        W3 = linalg.transpose([cols[1], cols[2], cols[0]])  # v last
        W = linalg.identity(ctx, n)
        for i in range(3):
            for j in range(3):
                W[i][j] = W3[i][j]
        T = linalg.mat_mul(ctx, T, W)
        cur = _apply(base, T)
        q1, q2 = cur.q1, cur.q2
        c = q2.coeff(2, 2)
        d = ctx.sqrt(c)
        shift = linalg.identity(ctx, n)
        shift[3][2] = d
        T = linalg.mat_mul(ctx, T, shift)
        cur = _apply(base, T)
        q1, q2 = cur.q1, cur.q2
        assert q2.coeff(2, 2) == ctx.zero and q2.coeff(3, 3) == ctx.one
        if q1.evaluate([ctx.zero, ctx.zero, ctx.one, ctx.zero]) == ctx.zero:
            y = [ctx.zero, ctx.zero, ctx.one, ctx.zero]
        else:
            e = q1.coeff(2, 2)
            ell = [q1.coeff(0, 2), q1.coeff(1, 2)]
            ker = linalg.kernel_basis(ctx, [ell])
            x0, x1 = ker[0]
            q4v = q1.subform([0, 1]).evaluate([x0, x1])
            x2 = ctx.sqrt(ctx.div(q4v, e))
            q3v = q2.subform([0, 1]).evaluate([x0, x1])
            x3 = ctx.sqrt(q3v)
            y = [x0, x1, x2, x3]
    else:  # shape2c
        ell3 = [ctx.sqrt(q1.coeff(0, 0)), ctx.sqrt(q1.coeff(1, 1))]
        ell4 = [ctx.sqrt(q2.coeff(0, 0)), ctx.sqrt(q2.coeff(1, 1))]
        assert q1.coeff(0, 1) == ctx.zero and q2.coeff(0, 1) == ctx.zero, (
            "rank <= 1 binary blocks expected in shape (c)"
        )
        ker = linalg.kernel_basis(ctx, [ell3])
        x0, x1 = ker[0]
        x3 = ctx.add(ctx.mul(ell4[0], x0), ctx.mul(ell4[1], x1))
        y = [x0, x1, ctx.zero, x3]
    x = linalg.mat_vec(ctx, T, y)
    assert is_singular_common_zero(P.q1, P.q2, x), "constructed zero failed checks"
    return x


# ---------------------------------------------------------------------------
# binary pencils
# ---------------------------------------------------------------------------


def classify_binary_member(ctx, a, b, c):
    """'h' (hyperbolic plane), 'a' (anisotropic rank 2) or 'r' (repeated/rank<=1)."""
    if ctx.p != 2:
        disc = ctx.sub(ctx.mul(b, b), ctx.mul(ctx.el(4), ctx.mul(a, c)))
        if disc == ctx.zero:
            return "r"
        return "h" if ctx.is_square(disc) else "a"
    if b == ctx.zero:
        return "r"
    if a == ctx.zero or c == ctx.zero:
        return "h"
    t = ctx.div(ctx.mul(a, c), ctx.mul(b, b))
    return "h" if gf.abs_trace2(ctx, t) == ctx.zero else "a"


def classify_binary_pencil(s1, s2):
    """Counts (N_h, N_a, N_r) of member types over all nonzero (a, b)."""
    ctx = s1.ctx
    if s1.n != 2 or s2.n != 2:
        raise PreconditionViolated("binary classifier needs 2-variable forms")
    q = ctx.order
    counts = {"h": 0, "a": 0, "r": 0}
    c1 = s1.coeffs
    c2 = s2.coeffs
    # projective members (1 : b) and (0 : 1); each stands for q-1 scaled pairs
    for b in ctx.elements():
        m = tuple(ctx.add(x, ctx.mul(b, y)) for x, y in zip(c1, c2))
        counts[classify_binary_member(ctx, *m)] += 1
    counts[classify_binary_member(ctx, *c2)] += 1
    return tuple(counts[k] * (q - 1) for k in ("h", "a", "r"))


# ---------------------------------------------------------------------------
# planted low-rank pencils (test and generator machinery)
# ---------------------------------------------------------------------------


def _random_form(ctx, n, rng, vars_used=None):
    vars_used = n if vars_used is None else vars_used
    q = QuadForm(
        ctx,
        vars_used,
        tuple(ctx.from_index(rng.randrange(ctx.order)) for _ in range(tri(vars_used))),
    )
    return q.embed(n) if vars_used < n else q


def _random_gl(ctx, n, rng):
    while True:
        T = [
            [ctx.from_index(rng.randrange(ctx.order)) for _ in range(n)]
            for _ in range(n)
        ]
        if linalg.matrix_rank(ctx, T) == n:
            return T


def plant_pencil(ctx, r, R, n, rng, tries=600, conjugate=True):
    """A random pencil with small_r = r and big_R = R in n variables, or None.

    Built by inverting the peel construction; infeasible (r, R) profiles (the
    peel chain bottoms out) return None.
    """
    assert 0 <= r <= R <= n
    for _ in range(tries):
        made = _plant_attempt(ctx, r, R, n, rng)
        if made is None:
            continue
        q1, q2 = made
        P = Pencil(q1, q2)
        if P.r == r and P.R == R:
            if not conjugate:
                return P
            T = _random_gl(ctx, n, rng)
            return Pencil(q1.transform(T), q2.transform(T))
    return None


def _plant_attempt(ctx, r, R, n, rng):
    if r == 0:
        if R != 0:
            return None
        return QuadForm.zero(ctx, n), QuadForm.zero(ctx, n)
    if r == R:
        return _random_form(ctx, n, rng, r), _random_form(ctx, n, rng, r)
    if r == 1:
        if ctx.p != 2 or R != 2:
            return None
        a = ctx.from_index(1 + rng.randrange(ctx.order - 1))
        b = ctx.from_index(1 + rng.randrange(ctx.order - 1))
        return (
            QuadForm.from_entries(ctx, n, {(0, 0): a}),
            QuadForm.from_entries(ctx, n, {(1, 1): b}),
        )
    for Rp in (R - 2, R - 3):
        if Rp < max(r - 2, 0) or (r - 2 == 0 and Rp != 0):
            continue
        sub = _plant_attempt(ctx, r - 2, Rp, max(Rp, 1), rng)
        if sub is None:
            continue
        q3, q4 = sub
        if Rp >= 1:
            P3 = Pencil(q3, q4)
            if not (P3.r == r - 2 and P3.R == Rp):
                continue
        q1 = q3.embed(n)
        q2 = q4.embed(n)
        ell = {}
        for j in range(R - 1):
            c = ctx.from_index(rng.randrange(ctx.order))
            if c != ctx.zero:
                ell[(min(j, R - 2), max(j, R - 2))] = c
        if Rp == R - 3:
            ell[(R - 3, R - 2)] = ctx.one
        q1 = q1.add(QuadForm.from_entries(ctx, n, ell))
        q2 = q2.add(QuadForm.from_entries(ctx, n, {(R - 2, R - 1): ctx.one}))
        return q1, q2
    return None


def binary_forms_coprime(s1, s2):
    """No common factor over the closure (resultant of the two binary quadratics)."""
    ctx = s1.ctx
    a1, b1, c1 = s1.coeffs
    a2, b2, c2 = s2.coeffs
    # Res of a1 x^2 + b1 x y + c1 y^2 and a2 x^2 + b2 x y + c2 y^2
    t1 = ctx.sub(ctx.mul(a1, c2), ctx.mul(a2, c1))
    t2 = ctx.sub(ctx.mul(a1, b2), ctx.mul(a2, b1))
    t3 = ctx.sub(ctx.mul(b1, c2), ctx.mul(b2, c1))
    res = ctx.sub(ctx.mul(t1, t1), ctx.mul(t2, t3))
    if res != ctx.zero:
        return True
    # degenerate (e.g. one form zero or proportional): a common factor exists
    # unless both are nonzero constants, impossible for quadratics
    return False
