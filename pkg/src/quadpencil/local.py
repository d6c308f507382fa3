"""Pairs of quadratic forms over the unramified local ring at precision N.

Elements of the ring are canonical residues mod pi^N; the discriminant-type
invariant Delta and all determinant valuations are computed on exact integer
lifts (Z or Z[theta] with the lifted modulus), so a valuation is certified
exactly whenever it is below the working precision and reported as
InsufficientPrecision otherwise.

Transforms that involve negative powers of pi are stored as ScaledMatrix
(an integral matrix together with a pi-power denominator), which keeps every
verified identity integral.
"""

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction

from . import gf, linalg
from .errors import (
    GenerationExhausted,
    InsufficientPrecision,
    NonIntegralResult,
    PreconditionViolated,
    SearchExhausted,
    ShapeViolation,
    SingularTransform,
    SquareDeterminant,
)
from .pencil import Pencil, plant_pencil
from .quadform import QuadForm, coeff_index, tri
from . import quadform as qf


# ---------------------------------------------------------------------------
# exact integer lifts: Z[theta] with the (monic) lifted modulus
# ---------------------------------------------------------------------------


class ZExt:
    """Exact arithmetic in Z[theta]; m = 1 degenerates to plain integers."""

    def __init__(self, modulus):
        self.mod = None if modulus is None else tuple(int(c) for c in modulus)
        self.m = 1 if self.mod is None else len(self.mod) - 1
        self.zero = 0 if self.m == 1 else (0,) * self.m
        self.one = 1 if self.m == 1 else (1,) + (0,) * (self.m - 1)

    def from_ring(self, rctx, x):
        cs = rctx.coeffs(x)
        return cs[0] if self.m == 1 else tuple(cs)

    def from_int(self, k):
        return k if self.m == 1 else (k,) + (0,) * (self.m - 1)

    def add(self, a, b):
        if self.m == 1:
            return a + b
        return tuple(x + y for x, y in zip(a, b))

    def sub(self, a, b):
        if self.m == 1:
            return a - b
        return tuple(x - y for x, y in zip(a, b))

    def neg(self, a):
        if self.m == 1:
            return -a
        return tuple(-x for x in a)

    def mul(self, a, b):
        if self.m == 1:
            return a * b
        m = self.m
        conv = [0] * (2 * m - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    if y:
                        conv[i + j] += x * y
        mod = self.mod
        for k in range(2 * m - 2, m - 1, -1):
            c = conv[k]
            if c:
                conv[k] = 0
                for j in range(m):
                    conv[k - m + j] -= c * mod[j]
        return tuple(conv[:m])

    def scale_int(self, k, a):
        if self.m == 1:
            return k * a
        return tuple(k * x for x in a)

    def iszero(self, a):
        return a == self.zero

    def valuation(self, a, p):
        """v_p, or None for the exact zero (infinite valuation)."""
        coords = (a,) if self.m == 1 else a
        best = None
        for c in coords:
            if c:
                v = 0
                while c % p == 0:
                    c //= p
                    v += 1
                best = v if best is None else min(best, v)
        return best


class QExt:
    """Fraction field of Z[theta] (tuples of Fractions)."""

    def __init__(self, zext):
        self.z = zext
        self.m = zext.m
        self.zero = Fraction(0) if self.m == 1 else (Fraction(0),) * self.m
        one = [Fraction(0)] * self.m
        one[0] = Fraction(1)
        self.one = Fraction(1) if self.m == 1 else tuple(one)

    def from_z(self, a):
        if self.m == 1:
            return Fraction(a)
        return tuple(Fraction(c) for c in a)

    def add(self, a, b):
        if self.m == 1:
            return a + b
        return tuple(x + y for x, y in zip(a, b))

    def sub(self, a, b):
        if self.m == 1:
            return a - b
        return tuple(x - y for x, y in zip(a, b))

    def neg(self, a):
        if self.m == 1:
            return -a
        return tuple(-x for x in a)

    def mul(self, a, b):
        if self.m == 1:
            return a * b
        m = self.m
        conv = [Fraction(0)] * (2 * m - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    if y:
                        conv[i + j] += x * y
        mod = self.z.mod
        for k in range(2 * m - 2, m - 1, -1):
            c = conv[k]
            if c:
                conv[k] = Fraction(0)
                for j in range(m):
                    conv[k - m + j] -= c * mod[j]
        return tuple(conv[:m])

    def scale(self, r, a):
        if self.m == 1:
            return r * a
        return tuple(r * x for x in a)

    def iszero(self, a):
        if self.m == 1:
            return a == 0
        return all(x == 0 for x in a)

    def inv(self, a):
        if self.m == 1:
            return Fraction(1) / a
        # extended euclid of a (as a poly in theta) against the modulus over Q
        f = [Fraction(c) for c in self.z.mod]
        g = list(a)
        s0, s1 = [Fraction(0)], [Fraction(1)]

        def pdiv(u, v):
            u = u[:]
            q = [Fraction(0)] * max(1, len(u) - len(v) + 1)
            while len(u) >= len(v) and any(u):
                while u and u[-1] == 0:
                    u.pop()
                if len(u) < len(v):
                    break
                c = u[-1] / v[-1]
                k = len(u) - len(v)
                q[k] += c
                for i in range(len(v)):
                    u[k + i] -= c * v[i]
                while u and u[-1] == 0:
                    u.pop()
            return q, u

        def padd(u, v):
            L = max(len(u), len(v))
            return [
                (u[i] if i < len(u) else 0) + (v[i] if i < len(v) else 0)
                for i in range(L)
            ]

        def pmulq(u, v):
            out = [Fraction(0)] * (len(u) + len(v) - 1) if u and v else []
            for i, x in enumerate(u):
                if x:
                    for j, y in enumerate(v):
                        out[i + j] += x * y
            return out

        r0, r1 = f, g
        while True:
            while r1 and r1[-1] == 0:
                r1.pop()
            if len(r1) == 1:
                c = r1[0]
                inv_poly = [x / c for x in s1]
                out = [Fraction(0)] * self.m
                for i, x in enumerate(inv_poly[: self.m]):
                    out[i] = x
                return tuple(out)
            q, r = pdiv(r0, r1)
            s = padd(s0, [-c for c in pmulq(q, s1)])
            r0, s0 = r1, s1
            r1, s1 = r, s

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def is_integral(self, a):
        coords = (a,) if self.m == 1 else a
        return all(x.denominator == 1 for x in coords)

    def to_z(self, a):
        if self.m == 1:
            return int(a)
        return tuple(int(x) for x in a)


def _zext_for(rctx):
    return ZExt(rctx.modulus)


def _exact_det(zext, M):
    """Division-free determinant of a matrix of ZExt elements."""
    n = len(M)
    D = {0: zext.one}
    for r in range(n):
        ND = {}
        row = M[r]
        for mask, val in D.items():
            if zext.iszero(val):
                continue
            for j in range(n):
                bit = 1 << j
                if mask & bit:
                    continue
                a = row[j]
                if zext.iszero(a):
                    continue
                term = zext.mul(val, a)
                if bin(mask >> (j + 1)).count("1") & 1:
                    term = zext.neg(term)
                nm = mask | bit
                ND[nm] = zext.add(ND[nm], term) if nm in ND else term
        D = ND
        if not D:
            return zext.zero
    return D.get((1 << n) - 1, zext.zero)


def _exact_matrix(zext, rctx, q):
    """M(q) with exact integer entries from the canonical residues."""
    n = q.n
    M = [[zext.zero] * n for _ in range(n)]
    k = 0
    for i in range(n):
        for j in range(i, n):
            c = zext.from_ring(rctx, q.coeffs[k])
            k += 1
            if i == j:
                M[i][i] = zext.scale_int(2, c)
            else:
                M[i][j] = c
                M[j][i] = c
    return M


_VANDER_INV = {}


def _vander_inv(npts):
    if npts not in _VANDER_INV:
        V = [[Fraction(t**i) for i in range(npts)] for t in range(npts)]
        # invert over Q
        n = npts
        aug = [V[i] + [Fraction(1 if i == j else 0) for j in range(n)] for i in range(n)]
        for c in range(n):
            pr = next(i for i in range(c, n) if aug[i][c] != 0)
            aug[c], aug[pr] = aug[pr], aug[c]
            pivinv = Fraction(1) / aug[c][c]
            aug[c] = [x * pivinv for x in aug[c]]
            for i in range(n):
                if i != c and aug[i][c] != 0:
                    f = aug[i][c]
                    aug[i] = [x - f * y for x, y in zip(aug[i], aug[c])]
        _VANDER_INV[npts] = [row[n:] for row in aug]
    return _VANDER_INV[npts]


def exact_pencil_form(LP):
    """Exact lift of the degree-n binary form det(x M(Q1) + y M(Q2)).

    Returns a list of n+1 ZExt coefficients, c_i on x^i y^(n-i), computed by
    integer interpolation at x = 0..n (exact over Q, so any points work).
    """
    rctx = LP.rctx
    zext = _zext_for(rctx)
    n = LP.Q1.n
    M1 = _exact_matrix(zext, rctx, LP.Q1)
    M2 = _exact_matrix(zext, rctx, LP.Q2)
    vals = []
    for t in range(n + 1):
        Mt = [
            [zext.add(zext.scale_int(t, M1[i][j]), M2[i][j]) for j in range(n)]
            for i in range(n)
        ]
        vals.append(_exact_det(zext, Mt))
    Vinv = _vander_inv(n + 1)
    qext = QExt(zext)
    qvals = [qext.from_z(v) for v in vals]
    out = []
    for i in range(n + 1):
        acc = qext.zero
        for j in range(n + 1):
            acc = qext.add(acc, qext.scale(Vinv[i][j], qvals[j]))
        assert qext.is_integral(acc), "interpolation must return integers"
        out.append(qext.to_z(acc))
    return out


def _qext_poly_resultant(qext, A, B):
    """Resultant of two polynomials with QExt coefficients (iterative Euclid
    with primitive rescaling to control growth)."""

    def deg(f):
        return len(f) - 1

    def trim(f):
        f = list(f)
        while f and qext.iszero(f[-1]):
            f.pop()
        return f

    def content(f):
        nums = []
        dens = []
        for c in f:
            coords = (c,) if qext.m == 1 else c
            for x in coords:
                if x:
                    nums.append(abs(x.numerator))
                    dens.append(x.denominator)
        if not nums:
            return Fraction(1)
        from math import gcd, lcm

        g = 0
        for v in nums:
            g = gcd(g, v)
        l = 1
        for v in dens:
            l = lcm(l, v)
        return Fraction(g, l)

    A, B = trim(A), trim(B)
    res = qext.one
    extra = Fraction(1)
    sign = 1
    while True:
        if not B:
            return qext.zero if deg(A) > 0 else _finish(qext, res, extra, sign, A)
        if deg(B) == 0:
            res = qext.mul(res, _qext_pow(qext, B[0], deg(A)))
            return _finish(qext, res, extra, sign, None)
        if deg(A) < deg(B):
            if (deg(A) * deg(B)) % 2 == 1:
                sign = -sign
            A, B = B, A
            continue
        # remainder of A by B
        R = list(A)
        lb = B[-1]
        lbinv = qext.inv(lb)
        while len(R) >= len(B) and R:
            R = trim(R)
            if len(R) < len(B):
                break
            c = qext.mul(R[-1], lbinv)
            k = len(R) - len(B)
            for i in range(len(B)):
                R[k + i] = qext.sub(R[k + i], qext.mul(c, B[i]))
            R = R[:-1]
        R = trim(R)
        dr = deg(R) if R else -1
        res = qext.mul(res, _qext_pow(qext, lb, deg(A) - (dr if dr >= 0 else 0)))
        if (deg(A) * deg(B)) % 2 == 1:
            sign = -sign
        if R:
            cont = content(R)
            if cont != 1:
                inv = Fraction(1) / cont
                R = [qext.scale(inv, c) for c in R]
                extra *= cont ** deg(B)
        A, B = B, R


def _qext_pow(qext, a, e):
    r = qext.one
    for _ in range(e):
        r = qext.mul(r, a)
    return r


def _finish(qext, res, extra, sign, Aconst):
    if Aconst is not None:
        if not Aconst:
            return qext.zero
        res = qext.mul(res, Aconst[0])
    out = qext.scale(extra, res)
    if sign < 0:
        out = qext.neg(out)
    return out


def exact_delta(LP):
    """Exact lift of Delta: Res_x(dF/dx(x,1), dF/dy(x,1)) for the pencil form F."""
    zext = _zext_for(LP.rctx)
    qext = QExt(zext)
    F = exact_pencil_form(LP)
    n = len(F) - 1
    Fx = [qext.from_z(zext.scale_int(i, F[i])) for i in range(1, n + 1)]
    Fy = [qext.from_z(zext.scale_int(n - i, F[i])) for i in range(0, n)]
    res = _qext_poly_resultant(qext, Fx, Fy)
    if qext.iszero(res):
        return zext.zero
    assert qext.is_integral(res)
    return qext.to_z(res)


# ---------------------------------------------------------------------------
# local pairs, scaled transforms and the (U, T) action
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScaledMatrix:
    """pi^{-e} times an integral matrix (rows of ring elements)."""

    num: tuple
    e: int = 0

    @classmethod
    def identity(cls, rctx, n):
        return cls(tuple(tuple(r) for r in linalg.identity(rctx, n)), 0)

    @classmethod
    def integral(cls, M):
        return cls(tuple(tuple(r) for r in M), 0)

    def size(self):
        return len(self.num)

    def mul(self, rctx, other):
        prod = linalg.mat_mul(rctx, [list(r) for r in self.num], [list(r) for r in other.num])
        return ScaledMatrix(tuple(tuple(r) for r in prod), self.e + other.e)

    def normalized(self, rctx):
        """Pull out common pi factors of the numerator where possible."""
        e = self.e
        M = [list(r) for r in self.num]
        while e > 0:
            if all(rctx.valuation(x) >= 1 for row in M for x in row):
                M = [[rctx.pi_div(x, 1) for x in row] for row in M]
                e -= 1
            else:
                break
        return ScaledMatrix(tuple(tuple(r) for r in M), e)

    def det_valuation(self, rctx):
        zext = _zext_for(rctx)
        M = [[zext.from_ring(rctx, x) for x in row] for row in self.num]
        d = _exact_det(zext, M)
        v = zext.valuation(d, rctx.p)
        if v is None or v >= rctx.N:
            raise SingularTransform("transform determinant vanishes at precision")
        return v - self.size() * self.e


@dataclass(frozen=True)
class TransformPair:
    U: ScaledMatrix  # 2 x 2
    T: ScaledMatrix  # n x n

    @classmethod
    def identity(cls, rctx, n):
        return cls(ScaledMatrix.identity(rctx, 2), ScaledMatrix.identity(rctx, n))

    def compose(self, rctx, later):
        """The action `self` followed by `later`."""
        return TransformPair(later.U.mul(rctx, self.U), self.T.mul(rctx, later.T))

    def det_valuations(self, rctx):
        return self.U.det_valuation(rctx), self.T.det_valuation(rctx)


@dataclass
class LocalPair:
    Q1: QuadForm
    Q2: QuadForm
    prec: int = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.Q1.ctx != self.Q2.ctx or self.Q1.n != self.Q2.n:
            raise PreconditionViolated("pair forms must share ring context and arity")
        if self.prec is None:
            self.prec = self.Q1.ctx.N
        if self.prec < 1:
            raise InsufficientPrecision("pair has no remaining precision")

    @property
    def rctx(self):
        return self.Q1.ctx

    @property
    def n(self):
        return self.Q1.n

    def reduce(self):
        return reduce_pair(self)

    def delta_valuation(self):
        return delta_valuation(self)


def reduce_pair(LP):
    """Coefficientwise reduction mod pi onto the residue field."""
    rctx = LP.rctx
    F = rctx.field
    q1 = QuadForm(F, LP.n, tuple(rctx.reduce(c) for c in LP.Q1.coeffs))
    q2 = QuadForm(F, LP.n, tuple(rctx.reduce(c) for c in LP.Q2.coeffs))
    return Pencil(q1, q2)


def delta_valuation(LP):
    if "delta_v" not in LP._cache:
        zext = _zext_for(LP.rctx)
        d = exact_delta(LP)
        v = zext.valuation(d, LP.rctx.p)
        LP._cache["delta_v"] = v
    v = LP._cache["delta_v"]
    if v is None or v >= LP.prec:
        raise InsufficientPrecision(
            "Delta vanishes at working precision; raise N or supply exact data"
        )
    return v


def act(LP, W, expect_markers=False):
    """(Q1, Q2)^U_T with integrality checking and precision bookkeeping."""
    rctx = LP.rctx
    U, T = W.U, W.T
    div = U.e + 2 * T.e
    if div >= LP.prec:
        raise InsufficientPrecision("action denominator exceeds remaining precision")
    combos = []
    for i in range(2):
        Qi = LP.Q1.scale(U.num[i][0]).add(LP.Q2.scale(U.num[i][1]))
        Qi = Qi.substitute([list(r) for r in T.num])
        if div:
            try:
                Qi = QuadForm(
                    rctx, Qi.n, tuple(rctx.pi_div(c, div) for c in Qi.coeffs)
                )
            except NonIntegralResult:
                raise NonIntegralResult(
                    "transformed pair is not integral at the given scaling"
                )
        combos.append(Qi)
    out = LocalPair(combos[0], combos[1], LP.prec - div)
    if "delta_v" in LP._cache and LP._cache["delta_v"] is not None:
        vU, vT = W.det_valuations(rctx)
        n = LP.n
        out._cache["delta_v"] = (
            LP._cache["delta_v"] + n * (n - 1) * vU + 4 * (n - 1) * vT
        )
    return out


# ---------------------------------------------------------------------------
# Hensel lifting of hyperbolic splittings
# ---------------------------------------------------------------------------


def hensel_split(Q, s, prec=None):
    """T in GL_n(o_v) with Q(T X) = X1X2 + ... + X_{2s-1}X_{2s} + Q0(rest).

    Requires the reduction of Q to be exactly (hyperbolic block) + (tail form):
    every coefficient touching the first 2s variables must reduce to the
    hyperbolic pattern.  Q0 = Q-tail mod pi^2 is preserved.
    """
    rctx = Q.ctx
    n = Q.n
    prec = rctx.N if prec is None else prec
    if s < 1 or 2 * s > n:
        raise ShapeViolation("invalid hyperbolic block size")
    for i in range(2 * s):
        for j in range(i, n):
            c = Q.coeff(i, j)
            want_unit = j == i + 1 and i % 2 == 0 and j < 2 * s
            v = rctx.valuation(rctx.sub(c, rctx.one) if want_unit else c)
            if v < 1:
                raise ShapeViolation(
                    "reduction is not hyperbolic-plus-tail in the first block"
                )
    T = linalg.identity(rctx, n)
    cur = Q
    qtilde = Q.subform(list(range(2 * s, n))) if n > 2 * s else None
    for _ in range(prec + 1):
        err = {}
        h = prec
        for i in range(2 * s):
            for j in range(i, n):
                c = cur.coeff(i, j)
                if j == i + 1 and i % 2 == 0 and j < 2 * s:
                    c = rctx.sub(c, rctx.one)
                v = rctx.valuation(c)
                if v < prec:
                    err[(i, j)] = c
                    h = min(h, v)
        if not err:
            break
        L = [[rctx.zero] * n for _ in range(2 * s)]
        for (i, j), c in err.items():
            L[i][j] = rctx.add(L[i][j], c)
        S = linalg.identity(rctx, n)
        for i in range(2 * s):
            partner = i + 1 if i % 2 == 0 else i - 1
            for j in range(n):
                if L[i][j] != rctx.zero:
                    S[partner][j] = rctx.sub(S[partner][j], L[i][j])
        cur = cur.substitute(S)
        T = linalg.mat_mul(rctx, T, S)
        nh = prec
        for i in range(2 * s):
            for j in range(i, n):
                c = cur.coeff(i, j)
                if j == i + 1 and i % 2 == 0 and j < 2 * s:
                    c = rctx.sub(c, rctx.one)
                nh = min(nh, rctx.valuation(c))
        if nh <= h:
            raise ShapeViolation("hyperbolic lifting made no progress")
    Q0 = cur.subform(list(range(2 * s, n))) if n > 2 * s else None
    if Q0 is not None and qtilde is not None:
        for a, b in zip(Q0.coeffs, qtilde.coeffs):
            if rctx.valuation(rctx.sub(a, b)) < min(2, prec):
                raise ShapeViolation("tail drifted mod pi^2 during lifting")
    return T, Q0


def lift_smooth_zero(Q, x, prec=None):
    """Newton-refine x (a residue-level nonsingular zero) to Q(x) = 0 mod pi^prec."""
    rctx = Q.ctx
    prec = rctx.N if prec is None else prec
    x = list(x)
    g = Q.gradient(x)
    j = next((k for k, c in enumerate(g) if rctx.is_unit(c)), None)
    if j is None:
        raise ShapeViolation("zero is not smooth: gradient has no unit coordinate")
    for _ in range(prec + 2):
        val = Q.evaluate(x)
        if rctx.valuation(val) >= prec:
            return x
        g = Q.gradient(x)
        x[j] = rctx.sub(x[j], rctx.div(val, g[j]))
    raise InsufficientPrecision("Newton refinement failed to converge")


def smooth_local_zero(LP, budget=200000, seed=None):
    """Primitive x with Q1(x) = Q2(x) = 0 mod pi^prec via a residue search plus
    a rank-2 Jacobian Newton iteration; None when the budget is exhausted."""
    rctx = LP.rctx
    F = rctx.field
    n = LP.n
    red = LP.reduce()
    rng = random.Random(
        seed if seed is not None else hash(("slz", LP.Q1.coeffs)) & 0x7FFFFFFF
    )
    q1b, q2b = red.q1, red.q2
    total = F.order**n
    cand = None
    if total <= 1 << 18:
        for idx in range(1, total):
            x = []
            k = idx
            for _ in range(n):
                k, r = divmod(k, F.order)
                x.append(F.from_index(r))
            if q1b.evaluate(x) == F.zero and q2b.evaluate(x) == F.zero:
                if _jacobian_rank2(q1b, q2b, x):
                    cand = x
                    break
    else:
        for _ in range(budget):
            x = [F.from_index(rng.randrange(F.order)) for _ in range(n)]
            if all(c == F.zero for c in x):
                continue
            if q1b.evaluate(x) == F.zero and q2b.evaluate(x) == F.zero:
                if _jacobian_rank2(q1b, q2b, x):
                    cand = x
                    break
    if cand is None:
        return None
    x = [rctx.lift(c) for c in cand]
    return _newton_pair(LP, x)


def _jacobian_rank2(q1, q2, x):
    ctx = q1.ctx
    g1 = q1.gradient(x)
    g2 = q2.gradient(x)
    return linalg.matrix_rank(ctx, [g1, g2]) == 2


def _newton_pair(LP, x):
    rctx = LP.rctx
    prec = LP.prec
    n = LP.n
    # choose coordinates (j, k) with a unit 2x2 Jacobian minor
    g1 = LP.Q1.gradient(x)
    g2 = LP.Q2.gradient(x)
    pick = None
    for j in range(n):
        for k in range(j + 1, n):
            d = rctx.sub(rctx.mul(g1[j], g2[k]), rctx.mul(g1[k], g2[j]))
            if rctx.is_unit(d):
                pick = (j, k)
                break
        if pick:
            break
    if pick is None:
        raise ShapeViolation("common zero is not smooth at the residue level")
    j, k = pick
    for _ in range(prec + 2):
        v1 = LP.Q1.evaluate(x)
        v2 = LP.Q2.evaluate(x)
        if rctx.valuation(v1) >= prec and rctx.valuation(v2) >= prec:
            return x
        g1 = LP.Q1.gradient(x)
        g2 = LP.Q2.gradient(x)
        det = rctx.sub(rctx.mul(g1[j], g2[k]), rctx.mul(g1[k], g2[j]))
        dinv = rctx.inv(det)
        dj = rctx.mul(dinv, rctx.sub(rctx.mul(g2[k], v1), rctx.mul(g1[k], v2)))
        dk = rctx.mul(dinv, rctx.sub(rctx.mul(g1[j], v2), rctx.mul(g2[j], v1)))
        x = list(x)
        x[j] = rctx.sub(x[j], dj)
        x[k] = rctx.sub(x[k], dk)
    raise InsufficientPrecision("pair Newton iteration failed to converge")


# ---------------------------------------------------------------------------
# split certificates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SplitCertificate:
    a: object
    b: object
    T: ScaledMatrix
    residual: QuadForm  # 2 variables over the ring
    prec: int

    def scaled_member(self, LP):
        return LP.Q1.scale(self.a).add(LP.Q2.scale(self.b))


def certificate_holds(Q1, Q2, cert):
    """Pure re-evaluation check of (a Q1 + b Q2)(T X) = H3 + Q' at the claimed
    precision (both sides scaled by pi^{2e} to stay integral)."""
    rctx = Q1.ctx
    n = Q1.n
    if n != 8:
        return False, "certificates are for 8-variable pairs"
    if cert.prec < 2 * cert.T.e + 2:
        return False, "claimed precision cannot certify the hyperbolic block"
    va = rctx.valuation(cert.a)
    vb = rctx.valuation(cert.b)
    if min(va, vb) > 0:
        return False, "combination (a, b) is not primitive"
    try:
        cert.T.det_valuation(rctx)
    except SingularTransform:
        return False, "transform is singular at working precision"
    G = Q1.scale(cert.a).add(Q2.scale(cert.b))
    lhs = G.substitute([list(r) for r in cert.T.num])
    scale = rctx.pi_mul(rctx.one, 2 * cert.T.e) if cert.T.e else rctx.one
    rhs = [rctx.zero] * tri(n)
    for i in range(3):
        rhs[coeff_index(n, 2 * i, 2 * i + 1)] = scale
    res = cert.residual
    rhs[coeff_index(n, 6, 6)] = rctx.mul(scale, res.coeff(0, 0))
    rhs[coeff_index(n, 6, 7)] = rctx.mul(scale, res.coeff(0, 1))
    rhs[coeff_index(n, 7, 7)] = rctx.mul(scale, res.coeff(1, 1))
    for got, want in zip(lhs.coeffs, rhs):
        if rctx.valuation(rctx.sub(got, want)) < min(cert.prec, rctx.N):
            return False, "certificate identity fails at claimed precision"
    return True, "ok"


def _max_verified_precision(Q1, Q2, a, b, T, residual, floor):
    """Largest precision at which the certificate identity holds."""
    rctx = Q1.ctx
    n = Q1.n
    G = Q1.scale(a).add(Q2.scale(b))
    lhs = G.substitute([list(r) for r in T.num])
    scale = rctx.pi_mul(rctx.one, 2 * T.e) if T.e else rctx.one
    rhs = [rctx.zero] * tri(n)
    for i in range(3):
        rhs[coeff_index(n, 2 * i, 2 * i + 1)] = scale
    rhs[coeff_index(n, 6, 6)] = rctx.mul(scale, residual.coeff(0, 0))
    rhs[coeff_index(n, 6, 7)] = rctx.mul(scale, residual.coeff(0, 1))
    rhs[coeff_index(n, 7, 7)] = rctx.mul(scale, residual.coeff(1, 1))
    best = rctx.N
    for got, want in zip(lhs.coeffs, rhs):
        best = min(best, rctx.valuation(rctx.sub(got, want)))
    if best < floor:
        raise InsufficientPrecision(
            f"certificate only verifies to pi^{best}, below the floor {floor}"
        )
    return best


def make_certificate(LP, a, b, T, residual, normalize=True):
    """Assemble and self-verify a certificate against the pair."""
    rctx = LP.rctx
    va = rctx.valuation(a)
    vb = rctx.valuation(b)
    k = min(va, vb)
    if normalize and k > 0:
        a = rctx.pi_div(a, k)
        b = rctx.pi_div(b, k)
        # the member shrank by pi^k, so the right side carries pi^{-k}
        T, residual = _rescale_rhs(rctx, T, residual, -k)
    floor = 2 * T.e + 2
    prec = _max_verified_precision(LP.Q1, LP.Q2, a, b, T, residual, floor)
    cert = SplitCertificate(a, b, T, residual, min(prec, LP.prec))
    ok, why = certificate_holds(LP.Q1, LP.Q2, cert)
    if not ok:
        raise AssertionError(f"internal certificate verification failed: {why}")
    return cert


def _rescale_rhs(rctx, T, residual, s):
    """Given G(T X) = pi^s (H3 + Q'), return (T2, Q'') with G(T2 X) = H3 + Q''.

    For s >= 0 the even columns absorb pi^{-s} (raising the denominator) and
    the residual becomes pi^s Q'; for s < 0 the odd columns and the residual
    block absorb pi^{|s|} integrally.
    """
    n = T.size()
    if s == 0:
        return T, residual
    if s > 0:
        D = linalg.identity(rctx, n)
        for col in (0, 2, 4, 6, 7):
            D[col][col] = rctx.pi_mul(rctx.one, s)
        num = linalg.mat_mul(rctx, [list(r) for r in T.num], D)
        res = QuadForm(rctx, 2, tuple(rctx.pi_mul(c, s) for c in residual.coeffs))
        return ScaledMatrix(tuple(tuple(r) for r in num), T.e + s).normalized(rctx), res
    t = -s
    D = linalg.identity(rctx, n)
    for col in (1, 3, 5, 6, 7):
        D[col][col] = rctx.pi_mul(rctx.one, t)
    num = linalg.mat_mul(rctx, [list(r) for r in T.num], D)
    res = QuadForm(rctx, 2, tuple(rctx.pi_mul(c, t) for c in residual.coeffs))
    return ScaledMatrix(tuple(tuple(r) for r in num), T.e).normalized(rctx), res


def pullback_certificate(LP_orig, W, cert):
    """Transfer a certificate for (Q1,Q2)^W back to the original pair.

    The acted forms are pi^{-(eU + 2 eT)} (U-combination) o T_num, so the
    composite uses the integral numerators and the division shows up as a
    pi^{shift} scale on the certificate's right-hand side.
    """
    rctx = LP_orig.rctx
    U, Tact = W.U, W.T
    a = rctx.add(rctx.mul(cert.a, U.num[0][0]), rctx.mul(cert.b, U.num[1][0]))
    b = rctx.add(rctx.mul(cert.a, U.num[0][1]), rctx.mul(cert.b, U.num[1][1]))
    num = linalg.mat_mul(
        rctx, [list(r) for r in Tact.num], [list(r) for r in cert.T.num]
    )
    Ttot = ScaledMatrix(tuple(tuple(r) for r in num), cert.T.e)
    shift = U.e + 2 * Tact.e
    T2, res2 = _rescale_rhs(rctx, Ttot, cert.residual, shift)
    return make_certificate(LP_orig, a, b, T2, res2)


# ---------------------------------------------------------------------------
# isotropic vectors and the nonsquare-determinant splitter
# ---------------------------------------------------------------------------


def ring_det_exact(Q):
    """Exact-lift det(M(Q)) as a ZExt element."""
    rctx = Q.ctx
    zext = _zext_for(rctx)
    return _exact_det(zext, _exact_matrix(zext, rctx, Q))


def form_is_nonsquare_det(Q, prec=None):
    """True when det(Q) is certified a nonsquare in k_v, False when certified
    square; raises InsufficientPrecision when undecidable at precision."""
    rctx = Q.ctx
    prec = rctx.N if prec is None else prec
    zext = _zext_for(rctx)
    d = ring_det_exact(Q)
    v = zext.valuation(d, rctx.p)
    if v is None or v >= prec:
        raise InsufficientPrecision("determinant vanishes at working precision")
    if v % 2 == 1:
        return True
    # reduce the exact unit part into the ring and run the unit-square test
    coords = (d,) if zext.m == 1 else d
    unit = rctx.from_coeffs(c // rctx.p**v for c in coords)
    return not gf.ring_is_square(rctx, unit, prec=prec - v)


def _compress_reduction_front(Q):
    """Ring transform making the reduction a function of its leading variables."""
    rctx = Q.ctx
    F = rctx.field
    red = QuadForm(F, Q.n, tuple(rctx.reduce(c) for c in Q.coeffs))
    vert = red.vertex_space()
    if not vert:
        return linalg.identity(rctx, Q.n), Q.n
    M = linalg.complete_basis(F, vert, Q.n)
    cols = linalg.transpose(M)
    comp = cols[len(vert):]
    W = linalg.transpose(comp + vert)
    return linalg.lift_matrix(rctx, W), Q.n - len(vert)


def isotropic_smooth_vector(Q, prec, seed=None):
    """(Snum, sdiv, G, z): Q(Snum X) = pi^sdiv * G(X) with z a smooth isotropic
    vector of G (its reduction is a nonsingular zero of the reduction of G)."""
    rctx = Q.ctx
    F = rctx.field
    n = Q.n
    Snum = linalg.identity(rctx, n)
    sdiv = 0
    cur = Q
    for _ in range(4 * prec + 8):
        if sdiv >= prec - 1:
            raise InsufficientPrecision("isotropic descent exhausted the precision")
        red = QuadForm(F, n, tuple(rctx.reduce(c) for c in cur.coeffs))
        zbar = qf.nonsingular_zero(red, seed=seed)
        if zbar is not None:
            z = [rctx.lift(c) for c in zbar]
            z = lift_smooth_zero(cur, z, prec - sdiv)
            return Snum, sdiv, cur, z
        if red.is_zero_form:
            cur = QuadForm(rctx, n, tuple(rctx.pi_div(c, 1) for c in cur.coeffs))
            sdiv += 1
            continue
        C, k = _compress_reduction_front(cur)
        moved = cur.substitute(C)
        D = linalg.identity(rctx, n)
        for i in range(k):
            D[i][i] = rctx.pi_mul(rctx.one, 1)
        moved = moved.substitute(D)
        cur = QuadForm(rctx, n, tuple(rctx.pi_div(c, 1) for c in moved.coeffs))
        Snum = linalg.mat_mul(rctx, Snum, linalg.mat_mul(rctx, C, D))
        sdiv += 1
    raise SearchExhausted("isotropic descent did not terminate")


def split_planes(Q, k, prec, seed=None):
    """Extract k hyperbolic planes from Q (over k_v): returns (Snum, scales, rest)
    with Q(Snum X) = sum_i pi^{sigma_i} X_{2i-1} X_{2i} + pi^{sigma_k} rest(tail),
    where sigma_i are the nondecreasing accumulated descent scales."""
    rctx = Q.ctx
    n = Q.n
    if k == 0:
        return linalg.identity(rctx, n), [], Q
    Snum, sdiv, G, z = isotropic_smooth_vector(Q, prec, seed=seed)
    W = qf.hyperbolic_complete(G, z)
    GW = G.substitute(W)
    rest = GW.subform(list(range(2, n)))
    Sub, scales, tail = split_planes(rest, k - 1, prec - sdiv, seed=seed)
    full = linalg.identity(rctx, n)
    for i in range(n - 2):
        for j in range(n - 2):
            full[2 + i][2 + j] = Sub[i][j]
    total = linalg.mat_mul(rctx, Snum, linalg.mat_mul(rctx, W, full))
    return total, [sdiv] + [sdiv + s for s in scales], tail


def split_by_nonsquare_det(Q, prec=None, seed=None):
    """Three-plane certificate for a single 8-variable form whose determinant is
    not a square in k_v (returned with the trivial combination (1, 0))."""
    rctx = Q.ctx
    prec = rctx.N if prec is None else prec
    if Q.n != 8:
        raise PreconditionViolated("nonsquare-determinant splitting needs 8 variables")
    if not form_is_nonsquare_det(Q, prec):
        raise SquareDeterminant("determinant is a square in k_v")
    Snum, scales, rest = split_planes(Q, 3, prec, seed=seed)
    sigma3 = scales[-1]
    # absorb the per-plane descent scales: pair column 2i gets pi^{-sigma_i},
    # realized integrally as pi^{-E} * diag(pi^{E - sigma_i} / pi^{E})
    E = max(scales)
    diag = [E, E - scales[0], E, E - scales[1], E, E - scales[2], E, E]
    Dm = linalg.identity(rctx, 8)
    for j in range(8):
        Dm[j][j] = rctx.pi_mul(rctx.one, diag[j])
    num = linalg.mat_mul(rctx, Snum, Dm)
    T = ScaledMatrix(tuple(tuple(r) for r in num), E).normalized(rctx)
    residual = QuadForm(
        rctx, 2, tuple(rctx.pi_mul(c, sigma3) for c in rest.coeffs)
    )
    LP = LocalPair(Q, QuadForm.zero(rctx, 8), prec)
    return make_certificate(LP, rctx.one, rctx.zero, T, residual)


def certificate_from_split_reduction(LP, a, b, seed=None):
    """Certificate via Hensel lifting when the reduction of a*q1 + b*q2 visibly
    splits three hyperbolic planes."""
    rctx = LP.rctx
    F = rctx.field
    G = LP.Q1.scale(a).add(LP.Q2.scale(b))
    red = QuadForm(F, 8, tuple(rctx.reduce(c) for c in G.coeffs))
    dec = qf.split_hyperbolic(red, seed=seed)
    if dec.s < 3:
        raise PreconditionViolated("reduction does not split three planes")
    That = linalg.lift_matrix(rctx, [list(r) for r in dec.T])
    moved = G.substitute(That)
    T2, Q0 = hensel_split(moved, 3, LP.prec)
    T = ScaledMatrix.integral(linalg.mat_mul(rctx, That, T2))
    return make_certificate(LP, a, b, T, Q0)


# ---------------------------------------------------------------------------
# non-minimality witnesses and greedy minimization
# ---------------------------------------------------------------------------


def _diag_pi(rctx, n, positions, k=1):
    D = linalg.identity(rctx, n)
    for i in positions:
        D[i][i] = rctx.pi_mul(rctx.one, k)
    return D


def _umove(rctx, num, e):
    return ScaledMatrix(tuple(tuple(r) for r in num), e)


def _hyperplane_in_zero_set(member):
    """Basis (n-1 vectors) of a hyperplane contained in {member = 0}, for a
    nonzero isotropic form of rank <= 2; None when no such hyperplane exists."""
    ctx = member.ctx
    r = member.rank()
    if member.is_zero_form or r > 2:
        return None
    vert = member.vertex_space()
    if r == 1:
        return vert
    z = qf.nonsingular_zero(member)
    if z is None:
        return None
    return vert + [z]


def _totally_zero_subspace(q1, q2, dim, rng, budget=4000):
    """Greedy flag search for a subspace of the given dimension on which both
    forms vanish identically (with all pairwise bilinear products zero)."""
    ctx = q1.ctx
    n = q1.n
    total = ctx.order**n
    exhaustive = total <= 1 << 16

    def extend(basis):
        conds = []
        for b in basis:
            conds.append(q1.gradient(b))
            conds.append(q2.gradient(b))
        space = linalg.kernel_basis(ctx, conds) if conds else linalg.identity(ctx, n)
        # search inside `space` for a common zero extending the basis
        dims = len(space)
        if dims == 0:
            return None
        limit = ctx.order**dims
        idxs = range(1, limit) if exhaustive or limit <= 4096 else None
        trials = idxs if idxs is not None else range(2000)
        for t in trials:
            if idxs is not None:
                kk = t
                coeffs = []
                for _ in range(dims):
                    kk, rdig = divmod(kk, ctx.order)
                    coeffs.append(ctx.from_index(rdig))
            else:
                coeffs = [ctx.from_index(rng.randrange(ctx.order)) for _ in range(dims)]
            v = [ctx.zero] * n
            for c, w in zip(coeffs, space):
                if c != ctx.zero:
                    v = [ctx.add(a, ctx.mul(c, b)) for a, b in zip(v, w)]
            if all(c == ctx.zero for c in v):
                continue
            if q1.evaluate(v) != ctx.zero or q2.evaluate(v) != ctx.zero:
                continue
            cand = basis + [v]
            if linalg.matrix_rank(ctx, cand) == len(cand):
                return cand
        return None

    for _ in range(max(1, budget // 200)):
        basis = []
        ok = True
        while len(basis) < dim:
            ext = extend(basis)
            if ext is None:
                ok = False
                break
            basis = ext
        if ok:
            return basis
    return None


def _common_zero(q1, q2, rng, budget=60000):
    """A common nonzero zero of two forms over the residue field, or None."""
    ctx = q1.ctx
    n = q1.n
    total = ctx.order**n
    if total <= 1 << 18:
        for idx in range(1, total):
            x = []
            k = idx
            for _ in range(n):
                k, rdig = divmod(k, ctx.order)
                x.append(ctx.from_index(rdig))
            if q1.evaluate(x) == ctx.zero and q2.evaluate(x) == ctx.zero:
                return x
        return None
    for _ in range(budget):
        x = [ctx.from_index(rng.randrange(ctx.order)) for _ in range(n)]
        if all(c == ctx.zero for c in x):
            continue
        if q1.evaluate(x) == ctx.zero and q2.evaluate(x) == ctx.zero:
            return x
    return None


def nonmin_witness(LP, seed=None):
    """A transform pair witnessing non-minimality (integral image and
    |det U|^2 |det T| > 1), or None when the catalog finds no move."""
    rctx = LP.rctx
    F = rctx.field
    n = LP.n
    red = LP.reduce()
    q1b, q2b = red.q1, red.q2
    rng = random.Random(
        seed if seed is not None else hash(("witness", LP.Q1.coeffs)) & 0x7FFFFFFF
    )
    I8 = ScaledMatrix.identity(rctx, n)
    # (scaling moves) a reduction vanishes identically
    if q1b.is_zero_form and q2b.is_zero_form:
        return TransformPair(_umove(rctx, linalg.identity(rctx, 2), 1), I8)
    for idx, qb in ((0, q1b), (1, q2b)):
        if qb.is_zero_form:
            num = linalg.identity(rctx, 2)
            num[idx][idx] = rctx.one
            num[1 - idx][1 - idx] = rctx.pi_mul(rctx.one, 1)
            return TransformPair(_umove(rctx, num, 1), I8)
    # (rank <= 2 isotropic member) the move from the anisotropic-normalization
    for a, b in _projective_points(F):
        member = q1b.scale(a).add(q2b.scale(b))
        if member.is_zero_form:
            continue
        hyp = _hyperplane_in_zero_set(member)
        if hyp is None:
            continue
        # base change putting the member second, then divide that slot by pi
        if b != F.zero:
            row0 = [rctx.one, rctx.zero]
        else:
            row0 = [rctx.zero, rctx.one]
        row1 = [rctx.lift(a), rctx.lift(b)]
        comp = linalg.complete_basis(F, hyp, n)
        cols = linalg.transpose(comp)
        w = cols[len(hyp):]
        Tbar = linalg.transpose(w + hyp)
        Tnum = linalg.lift_matrix(rctx, Tbar)
        Tnum = linalg.mat_mul(rctx, Tnum, _diag_pi(rctx, n, [0]))
        U = _umove(rctx, [[rctx.pi_mul(c, 1) for c in row0], row1], 1)
        W = TransformPair(U, ScaledMatrix.integral(Tnum))
        if _witness_applies(LP, W):
            return W
    # (totally zero 5-space) including the R <= 3 vertex case
    vert = _pencil_vertex(red)
    basis = vert if len(vert) >= 5 else None
    if basis is None:
        basis = _totally_zero_subspace(q1b, q2b, 5, rng)
    if basis is not None:
        basis = basis[:5]
        d = n - len(basis)
        comp = linalg.complete_basis(F, basis, n)
        cols = linalg.transpose(comp)
        w = cols[len(basis):]
        Tbar = linalg.transpose(w + basis)
        Tnum = linalg.lift_matrix(rctx, Tbar)
        Tnum = linalg.mat_mul(rctx, Tnum, _diag_pi(rctx, n, list(range(d))))
        W = TransformPair(_umove(rctx, linalg.identity(rctx, 2), 1), ScaledMatrix.integral(Tnum))
        if _witness_applies(LP, W):
            return W
    # (x8 move) tail forms at the pi level share a zero
    R = red.R
    if R <= 7:
        W = _x8_move(LP, red, rng)
        if W is not None:
            return W
    # (interior R = 4 move)
    if R == 4:
        W = _r4_interior_move(LP, red, rng)
        if W is not None:
            return W
    return None


def _projective_points(F):
    for b in F.elements():
        yield (F.one, b)
    yield (F.zero, F.one)


def _pencil_vertex(red):
    from .pencil import pencil_vertex_basis

    return pencil_vertex_basis(red)


def _compress_pair_front(LP, red):
    """Ring transform putting the reductions inside their first R variables."""
    rctx = LP.rctx
    F = rctx.field
    vert = _pencil_vertex(red)
    if not vert:
        return linalg.identity(rctx, LP.n), LP.n
    M = linalg.complete_basis(F, vert, LP.n)
    cols = linalg.transpose(M)
    comp = cols[len(vert):]
    Tbar = linalg.transpose(comp + vert)
    return linalg.lift_matrix(rctx, Tbar), LP.n - len(vert)


def _x8_move(LP, red, rng):
    rctx = LP.rctx
    F = rctx.field
    n = LP.n
    T1, R = _compress_pair_front(LP, red)
    if R > 7:
        return None
    moved1 = LP.Q1.substitute(T1)
    moved2 = LP.Q2.substitute(T1)
    tail = list(range(R, n))
    H = []
    for M in (moved1, moved2):
        sub = M.subform(tail)
        try:
            Hi = QuadForm(
                rctx, len(tail), tuple(rctx.pi_div(c, 1) for c in sub.coeffs)
            )
        except NonIntegralResult:  # pragma: no cover - reduction is R-supported
            return None
        H.append(QuadForm(F, len(tail), tuple(rctx.reduce(c) for c in Hi.coeffs)))
    z = _common_zero(H[0], H[1], rng)
    if z is None:
        return None
    comp = linalg.complete_basis(F, [z], len(tail))
    cols = linalg.transpose(comp)
    Wbar = linalg.transpose(cols[1:] + [z])  # z last
    Wfull = linalg.identity(rctx, n)
    lifted = linalg.lift_matrix(rctx, Wbar)
    for i in range(len(tail)):
        for j in range(len(tail)):
            Wfull[R + i][R + j] = lifted[i][j]
    Tnum = linalg.mat_mul(rctx, T1, Wfull)
    Tnum = linalg.mat_mul(rctx, Tnum, _diag_pi(rctx, n, list(range(n - 1))))
    W = TransformPair(
        _umove(rctx, linalg.identity(rctx, 2), 2), ScaledMatrix.integral(Tnum)
    )
    return W if _witness_applies(LP, W) else None


def _r4_interior_move(LP, red, rng):
    rctx = LP.rctx
    F = rctx.field
    n = LP.n
    T1, R = _compress_pair_front(LP, red)
    if R != 4:
        return None
    g1 = red.q1.transform(
        [[rctx.reduce(x) for x in row] for row in T1]
    ).subform([0, 1, 2, 3])
    g2 = red.q2.transform(
        [[rctx.reduce(x) for x in row] for row in T1]
    ).subform([0, 1, 2, 3])
    z = _common_zero(g1, g2, rng)
    if z is None:
        return None
    comp = linalg.complete_basis(F, [z], 4)
    Wfull = linalg.identity(rctx, n)
    lifted = linalg.lift_matrix(rctx, comp)
    for i in range(4):
        for j in range(4):
            Wfull[i][j] = lifted[i][j]
    Tnum = linalg.mat_mul(rctx, T1, Wfull)
    Tnum = linalg.mat_mul(rctx, Tnum, _diag_pi(rctx, n, [1, 2, 3]))
    W = TransformPair(
        _umove(rctx, linalg.identity(rctx, 2), 1), ScaledMatrix.integral(Tnum)
    )
    return W if _witness_applies(LP, W) else None


def _witness_applies(LP, W):
    rctx = LP.rctx
    try:
        act(LP, W)
    except (NonIntegralResult, InsufficientPrecision):
        return False
    vU, vT = W.det_valuations(rctx)
    return 2 * vU + vT < 0


def minimize(LP, seed=None):
    """Greedy catalog minimization: returns (W_total, minimized pair, move log)."""
    v0 = delta_valuation(LP)
    rctx = LP.rctx
    cur = LP
    total = TransformPair.identity(rctx, LP.n)
    log = []
    cap = v0 // 28 + 4
    for _ in range(cap + 1):
        W = nonmin_witness(cur, seed=seed)
        if W is None:
            break
        vU, vT = W.det_valuations(rctx)
        gain = 2 * vU + vT
        assert gain < 0, "catalog returned a non-improving move"
        log.append({"vU": vU, "vT": vT, "delta_gain": 56 * vU + 28 * vT})
        cur = act(cur, W)
        total = total.compose(rctx, W)
    else:
        raise AssertionError("minimization exceeded its theoretical move bound")
    return total, cur, log


# ---------------------------------------------------------------------------
# pair generation
# ---------------------------------------------------------------------------


def plant_pair(rctx, profile, seed=0, n=8, tries=400):
    """Seeded random pair with the requested reduction invariants.

    profile keys: r, R (reduction pencil ranks), zero (plant an exact common
    zero), nonsingular (require Delta != 0 at working precision).
    """
    rng = random.Random(("plant", seed, profile.get("r"), profile.get("R")).__repr__())
    F = rctx.field
    r = profile.get("r", n)
    R = profile.get("R", n)
    want_zero = profile.get("zero", True)
    want_nonsing = profile.get("nonsingular", True)
    if R < r or R > n:
        raise GenerationExhausted("infeasible profile: need r <= R <= n")
    for _ in range(tries):
        P = plant_pencil(F, r, R, n, rng, tries=60)
        if P is None:
            raise GenerationExhausted(f"could not plant reduction profile r={r}, R={R}")
        Q1 = QuadForm(rctx, n, tuple(rctx.lift(c) for c in P.q1.coeffs))
        Q2 = QuadForm(rctx, n, tuple(rctx.lift(c) for c in P.q2.coeffs))
        noise1 = [rng.randrange(rctx.p) for _ in range(tri(n))]
        noise2 = [rng.randrange(rctx.p) for _ in range(tri(n))]
        Q1 = QuadForm(
            rctx,
            n,
            tuple(
                rctx.add(c, rctx.pi_mul(rctx.el(k), 1))
                for c, k in zip(Q1.coeffs, noise1)
            ),
        )
        Q2 = QuadForm(
            rctx,
            n,
            tuple(
                rctx.add(c, rctx.pi_mul(rctx.el(k), 1))
                for c, k in zip(Q2.coeffs, noise2)
            ),
        )
        if want_zero:
            z = _common_zero(P.q1, P.q2, rng)
            if z is None:
                continue
            x = [rctx.lift(c) for c in z]
            j = next(k for k, c in enumerate(x) if rctx.is_unit(c))
            inv2 = rctx.inv(rctx.mul(x[j], x[j]))
            adj = []
            for Q in (Q1, Q2):
                val = Q.evaluate(x)
                delta = rctx.neg(rctx.mul(val, inv2))
                cs = list(Q.coeffs)
                idx = coeff_index(n, j, j)
                cs[idx] = rctx.add(cs[idx], delta)
                adj.append(QuadForm(rctx, n, tuple(cs)))
            Q1, Q2 = adj
            if not (
                rctx.valuation(Q1.evaluate(x)) >= rctx.N
                and rctx.valuation(Q2.evaluate(x)) >= rctx.N
            ):  # pragma: no cover
                continue
        LP = LocalPair(Q1, Q2)
        red = LP.reduce()
        if red.r != r or red.R != R:
            continue
        if want_nonsing:
            try:
                delta_valuation(LP)
            except InsufficientPrecision:
                continue
        if want_zero:
            LP._cache["planted_zero"] = x
        return LP
    raise GenerationExhausted("pair generation budget exhausted for this profile")
