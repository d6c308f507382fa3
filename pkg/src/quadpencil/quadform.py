"""Quadratic forms over field or Galois-ring contexts.

A form in n variables is stored by its upper-triangular coefficients q_ij,
i <= j, row-major: (1,1),(1,2),...,(1,n),(2,2),...,(n,n).  Everything is exact;
transforms are polynomial substitutions so no characteristic-2 information is
lost.  Normal-form operations re-verify their claimed identities before
returning.
"""

import random
from dataclasses import dataclass

from . import gf, linalg
from .errors import (
    DimensionMismatch,
    SearchExhausted,
    SingularPoint,
    SingularTransform,
)


def tri(n):
    return n * (n + 1) // 2


def coeff_index(n, i, j):
    """Index of q_ij (0-based, i <= j) in the coefficient tuple."""
    return i * n - i * (i - 1) // 2 + (j - i)


@dataclass(frozen=True)
class QuadForm:
    ctx: object
    n: int
    coeffs: tuple

    def __post_init__(self):
        if self.n < 1:
            raise DimensionMismatch("a form needs at least one variable")
        if len(self.coeffs) != tri(self.n):
            raise DimensionMismatch(
                f"expected {tri(self.n)} coefficients, got {len(self.coeffs)}"
            )

    # -- construction ------------------------------------------------------

    @classmethod
    def zero(cls, ctx, n):
        return cls(ctx, n, (ctx.zero,) * tri(n))

    @classmethod
    def from_ints(cls, ctx, n, ints):
        return cls(ctx, n, tuple(ctx.el(c) for c in ints))

    @classmethod
    def from_entries(cls, ctx, n, entries):
        """entries: {(i, j): coefficient} with 0-based i <= j."""
        cs = [ctx.zero] * tri(n)
        for (i, j), c in entries.items():
            if not 0 <= i <= j < n:
                raise DimensionMismatch(f"bad index pair {(i, j)}")
            cs[coeff_index(n, i, j)] = c
        return cls(ctx, n, tuple(cs))

    def coeff(self, i, j):
        if j < i:
            i, j = j, i
        return self.coeffs[coeff_index(self.n, i, j)]

    @property
    def is_zero_form(self):
        return all(c == self.ctx.zero for c in self.coeffs)

    def support(self):
        """Variables that actually occur."""
        used = set()
        k = 0
        for i in range(self.n):
            for j in range(i, self.n):
                if self.coeffs[k] != self.ctx.zero:
                    used.add(i)
                    used.add(j)
                k += 1
        return sorted(used)

    # -- basic operations ----------------------------------------------------

    def evaluate(self, x):
        if len(x) != self.n:
            raise DimensionMismatch(f"vector length {len(x)} != {self.n}")
        ctx = self.ctx
        acc = ctx.zero
        k = 0
        for i in range(self.n):
            xi = x[i]
            for j in range(i, self.n):
                c = self.coeffs[k]
                k += 1
                if c != ctx.zero and xi != ctx.zero and x[j] != ctx.zero:
                    acc = ctx.add(acc, ctx.mul(c, ctx.mul(xi, x[j])))
        return acc

    def matrix(self):
        """M(q): q_ij off the diagonal, 2*q_ii on it; grad q(X) = M(q) X."""
        ctx = self.ctx
        n = self.n
        M = [[ctx.zero] * n for _ in range(n)]
        k = 0
        two = ctx.add(ctx.one, ctx.one)
        for i in range(n):
            for j in range(i, n):
                c = self.coeffs[k]
                k += 1
                if i == j:
                    M[i][i] = ctx.mul(two, c)
                else:
                    M[i][j] = c
                    M[j][i] = c
        return M

    def gradient(self, x):
        return linalg.mat_vec(self.ctx, self.matrix(), x)

    def bilinear(self, x, y):
        """B(x, y) = q(x+y) - q(x) - q(y) = x^t M(q) y."""
        ctx = self.ctx
        g = self.gradient(x)
        acc = ctx.zero
        for a, b in zip(g, y):
            if a != ctx.zero and b != ctx.zero:
                acc = ctx.add(acc, ctx.mul(a, b))
        return acc

    def det(self):
        M = self.matrix()
        if getattr(self.ctx, "is_field", False):
            return linalg.field_det(self.ctx, M)
        return linalg.det_division_free(self.ctx, M)

    def half_det(self):
        """Characteristic-2 substitute for det (odd variable count): the
        reduction of det(lift)/2 for any lift to GR(2^2, m)."""
        ctx = self.ctx
        if ctx.p != 2 or not getattr(ctx, "is_field", False):
            raise ValueError("half_det is defined over characteristic-2 fields")
        if self.n % 2 == 0:
            raise ValueError("half_det needs an odd number of variables")
        rctx = gf.RingCtx(2, ctx.m, ctx.modulus, 2)
        lifted = QuadForm(rctx, self.n, tuple(rctx.lift(c) for c in self.coeffs))
        d = linalg.det_division_free(rctx, lifted.matrix())
        half = rctx.pi_div(d, 1)
        return rctx.reduce(half)

    # -- rank and vertex space ------------------------------------------------

    def rank(self):
        ctx = self.ctx
        M = self.matrix()
        mr = linalg.matrix_rank(ctx, M)
        if ctx.p != 2:
            return mr
        for v in linalg.kernel_basis(ctx, M):
            if self.evaluate(v) != ctx.zero:
                return mr + 1
        return mr

    def vertex_space(self):
        """Basis of {x : M(q) x = 0 and q(x) = 0} (the cone's vertex space)."""
        ctx = self.ctx
        ker = linalg.kernel_basis(ctx, self.matrix())
        if ctx.p != 2 or not ker:
            return ker
        svals = [ctx.sqrt(self.evaluate(v)) for v in ker]
        if all(s == ctx.zero for s in svals):
            return ker
        combo = linalg.kernel_basis(ctx, [svals])
        out = []
        for c in combo:
            vec = [ctx.zero] * self.n
            for ci, v in zip(c, ker):
                if ci != ctx.zero:
                    vec = [ctx.add(a, ctx.mul(ci, b)) for a, b in zip(vec, v)]
            out.append(vec)
        return out

    # -- substitutions ---------------------------------------------------------

    def substitute(self, T):
        """q(T X) without an invertibility check (T given by rows)."""
        ctx = self.ctx
        n = self.n
        out = [ctx.zero] * tri(n)
        k = 0
        for i in range(n):
            for j in range(i, n):
                c = self.coeffs[k]
                k += 1
                if c == ctx.zero:
                    continue
                ri, rj = T[i], T[j]
                for a in range(n):
                    ra = ri[a]
                    if ra == ctx.zero:
                        continue
                    for b in range(n):
                        rb = rj[b]
                        if rb == ctx.zero:
                            continue
                        term = ctx.mul(c, ctx.mul(ra, rb))
                        if a <= b:
                            idx = coeff_index(n, a, b)
                        else:
                            idx = coeff_index(n, b, a)
                        out[idx] = ctx.add(out[idx], term)
        return QuadForm(ctx, n, tuple(out))

    def transform(self, T):
        """q(T X) for invertible T; raises SingularTransform otherwise."""
        ctx = self.ctx
        if getattr(ctx, "is_field", False):
            if linalg.matrix_rank(ctx, T) != self.n:
                raise SingularTransform("transform matrix is singular")
        else:
            red = [[ctx.reduce(x) for x in row] for row in T]
            if linalg.matrix_rank(ctx.field, red) != self.n:
                raise SingularTransform("transform matrix is not in GL over the ring")
        return self.substitute(T)

    def permute(self, perm):
        """Relabel variables: new variable i is old variable perm[i]."""
        return self.substitute(perm_rows(self.ctx, perm))

    def add(self, other):
        ctx = self.ctx
        return QuadForm(
            ctx, self.n, tuple(ctx.add(a, b) for a, b in zip(self.coeffs, other.coeffs))
        )

    def scale(self, c):
        ctx = self.ctx
        return QuadForm(ctx, self.n, tuple(ctx.mul(c, a) for a in self.coeffs))

    def subform(self, variables):
        """Restriction to the given variables (others set to zero), reindexed."""
        ctx = self.ctx
        m = len(variables)
        pos = {v: i for i, v in enumerate(variables)}
        cs = [ctx.zero] * tri(m)
        k = 0
        for i in range(self.n):
            for j in range(i, self.n):
                c = self.coeffs[k]
                k += 1
                if c != ctx.zero and i in pos and j in pos:
                    a, b = pos[i], pos[j]
                    if a > b:
                        a, b = b, a
                    cs[coeff_index(m, a, b)] = ctx.add(cs[coeff_index(m, a, b)], c)
        return QuadForm(ctx, m, tuple(cs))

    def embed(self, n_new, offset=0):
        """The same form viewed in n_new >= n variables at the given offset."""
        ctx = self.ctx
        cs = [ctx.zero] * tri(n_new)
        k = 0
        for i in range(self.n):
            for j in range(i, self.n):
                c = self.coeffs[k]
                k += 1
                if c != ctx.zero:
                    cs[coeff_index(n_new, i + offset, j + offset)] = c
        return QuadForm(ctx, n_new, tuple(cs))


def perm_rows(ctx, perm):
    """Rows of the substitution matrix for X_i -> X_perm[i] in q(T X).

    With T = perm_rows(perm), (T X)_i = X_perm[i]: the new form's variable
    perm[i]-slot data moves to slot i.
    """
    n = len(perm)
    T = [[ctx.zero] * n for _ in range(n)]
    for i, j in enumerate(perm):
        T[i][j] = ctx.one
    return T


def apply_transform(q, T):
    return q.transform(T)


def evaluate(q, x):
    return q.evaluate(x)


def matrix_of(q):
    return q.matrix()


def det_of(q):
    return q.det()


def half_det(q):
    return q.half_det()


def rank_of(q):
    return q.rank()


def vertex_space(q):
    return q.vertex_space()


# ---------------------------------------------------------------------------
# zeros and splitting (finite fields)
# ---------------------------------------------------------------------------

_EXHAUSTIVE_LIMIT = 1 << 24


def binary_root(ctx, a, b, c):
    """A nontrivial zero (x, y) of a X^2 + b XY + c Y^2, or None if anisotropic."""
    if a == ctx.zero and b == ctx.zero and c == ctx.zero:
        return (ctx.one, ctx.zero)
    if a == ctx.zero:
        return (ctx.one, ctx.zero)
    if c == ctx.zero:
        return (ctx.zero, ctx.one)
    if ctx.p != 2:
        two = ctx.el(2)
        disc = ctx.sub(ctx.mul(b, b), ctx.mul(ctx.el(4), ctx.mul(a, c)))
        if disc == ctx.zero:
            x = ctx.neg(ctx.div(b, ctx.mul(two, a)))
            return (x, ctx.one)
        if not ctx.is_square(disc):
            return None
        s = ctx.sqrt(disc)
        x = ctx.div(ctx.add(ctx.neg(b), s), ctx.mul(two, a))
        return (x, ctx.one)
    # characteristic 2
    if b == ctx.zero:
        # (sqrt(a) X + sqrt(c) Y)^2
        return (ctx.sqrt(c), ctx.sqrt(a))
    target = ctx.div(ctx.mul(a, c), ctx.mul(b, b))
    w = gf.artin_schreier_root(ctx, target)
    if w is None:
        return None
    t = ctx.div(ctx.mul(b, w), a)
    return (t, ctx.one)


def binary_is_isotropic(ctx, a, b, c):
    return binary_root(ctx, a, b, c) is not None


def anisotropic_binary(ctx):
    """A canonical binary form with no nontrivial zero over the finite field."""
    if ctx.p != 2:
        d = next(a for a in ctx.elements() if a != ctx.zero and not ctx.is_square(a))
        return QuadForm(ctx, 2, (ctx.one, ctx.zero, ctx.neg(d)))
    c = next(
        a
        for a in ctx.elements()
        if gf.abs_trace2(ctx, a) == ctx.one
    )
    return QuadForm(ctx, 2, (ctx.one, ctx.one, c))


def _stable_seed(*parts):
    return hash(repr(parts)) & 0x7FFFFFFF


def nonsingular_zero(q, seed=None, budget=200000):
    """x != 0 with q(x) = 0 and grad q(x) != 0, or None when provably none exists.

    Rank >= 3 guarantees existence (finite fields); rank <= 2 is decided
    algebraically, so None is always a proof.  The random search (used when the
    space exceeds the exhaustive limit) raises SearchExhausted on budget end.
    """
    ctx = q.ctx
    n = q.n
    r = q.rank()
    if r <= 1:
        return None
    if r == 2:
        ker = linalg.kernel_basis(ctx, q.matrix())
        basis = _complement_basis(ctx, q, ker)
        b1, b2 = basis[0], basis[1]
        root = binary_root(
            ctx, q.evaluate(b1), q.bilinear(b1, b2), q.evaluate(b2)
        )
        if root is None:
            return None
        x, y = root
        z = [ctx.add(ctx.mul(x, a), ctx.mul(y, b)) for a, b in zip(b1, b2)]
        return z
    total = ctx.order**n
    if total <= _EXHAUSTIVE_LIMIT:
        for idx in range(1, total):
            x = _decode_vec(ctx, n, idx)
            if q.evaluate(x) == ctx.zero and any(
                g != ctx.zero for g in q.gradient(x)
            ):
                return x
        return None  # pragma: no cover - rank >= 3 always yields a zero
    rng = random.Random(seed if seed is not None else _stable_seed("nz", q.coeffs))
    for _ in range(budget):
        x = [ctx.from_index(rng.randrange(ctx.order)) for _ in range(n)]
        if all(c == ctx.zero for c in x):
            continue
        if q.evaluate(x) == ctx.zero and any(g != ctx.zero for g in q.gradient(x)):
            return x
    raise SearchExhausted("nonsingular zero search budget exceeded")


def _decode_vec(ctx, n, idx):
    out = []
    for _ in range(n):
        idx, r = divmod(idx, ctx.order)
        out.append(ctx.from_index(r))
    return out


def _complement_basis(ctx, q, ker):
    """Vectors completing ker to a basis, in the front."""
    n = q.n
    M = linalg.complete_basis(ctx, ker, n) if ker else linalg.identity(ctx, n)
    # complete_basis puts ker first; we want the complement
    cols = linalg.transpose(M)
    comp = cols[len(ker):]
    return comp


def hyperbolic_complete(q, z):
    """Invertible W (columns) with q(W X) = X1 X2 + (form in the rest).

    Needs q(z) = 0 and an invertible coordinate in grad q(z); exact over fields
    and over the local ring (unit gradient coordinate).
    """
    ctx = q.ctx
    n = q.n
    g = q.gradient(z)
    is_field = getattr(ctx, "is_field", False)

    def invertible(c):
        return c != ctx.zero if is_field else ctx.is_unit(c)

    j = next((k for k, c in enumerate(g) if invertible(c)), None)
    if j is None:
        raise SingularPoint("gradient has no invertible coordinate")
    inv = ctx.inv(g[j])
    y = [ctx.mul(inv, ctx.one) if k == j else ctx.zero for k in range(n)]
    qy = q.evaluate(y)
    y = [ctx.sub(a, ctx.mul(qy, b)) for a, b in zip(y, z)]
    cols = [list(z), y]
    gy = q.gradient(y)
    gz = g
    for k in range(n):
        e = [ctx.one if i == k else ctx.zero for i in range(n)]
        bey = gy[k]
        bez = gz[k]
        c = [
            ctx.sub(ctx.sub(a, ctx.mul(bey, b)), ctx.mul(bez, d))
            for a, b, d in zip(e, z, y)
        ]
        cand = cols + [c]
        if is_field:
            ok = linalg.matrix_rank(ctx, cand) == len(cand)
        else:
            red = [[ctx.reduce(x) for x in v] for v in cand]
            ok = linalg.matrix_rank(ctx.field, red) == len(cand)
        if ok:
            cols.append(c)
        if len(cols) == n:
            break
    if len(cols) != n:
        raise SingularTransform("hyperbolic completion failed")
    return linalg.transpose(cols)


@dataclass(frozen=True)
class SplitDecomposition:
    T: tuple
    s: int
    tail: object  # QuadForm in n - 2s variables, or None when empty

    def plane_count(self):
        return self.s


def split_hyperbolic(q, seed=None):
    """Maximal Witt decomposition q(T X) = X1X2 + ... + X_{2s-1}X_{2s} + tail.

    The tail is canonical: empty (None), zero, c*X^2, or anisotropic binary;
    the claimed identity is re-verified before returning.
    """
    ctx = q.ctx
    n = q.n
    T = linalg.identity(ctx, n)
    s = 0
    while n - 2 * s >= 1:
        rest_vars = list(range(2 * s, n))
        cur = q.substitute(T)
        rest = cur.subform(rest_vars)
        z = nonsingular_zero(rest, seed=seed)
        if z is None:
            break
        if n - 2 * s >= 2:
            W = hyperbolic_complete(rest, z)
            Wfull = _block_embed(ctx, n, W, 2 * s)
            T = linalg.mat_mul(ctx, T, Wfull)
            s += 1
        else:  # pragma: no cover - a 1-variable form has no nonsingular zero path
            break
    # canonicalize the tail
    cur = q.substitute(T)
    m = n - 2 * s
    tail = None
    if m >= 1:
        rest = cur.subform(list(range(2 * s, n)))
        V = _tail_canonical_transform(rest)
        if V is not None:
            T = linalg.mat_mul(ctx, T, _block_embed(ctx, n, V, 2 * s))
            cur = q.substitute(T)
            rest = cur.subform(list(range(2 * s, n)))
        tail = rest
    dec = SplitDecomposition(tuple(tuple(r) for r in T), s, tail)
    _verify_split(q, dec)
    return dec


def _block_embed(ctx, n, W, offset):
    m = len(W)
    M = linalg.identity(ctx, n)
    for i in range(m):
        for j in range(m):
            M[offset + i][offset + j] = W[i][j]
    return M


def _tail_canonical_transform(rest):
    """Compress a no-nonsingular-zero form onto its leading variables."""
    ctx = rest.ctx
    ker = linalg.kernel_basis(ctx, rest.matrix())
    r = rest.rank()
    if r == 0:
        return None
    vert = rest.vertex_space()
    comp = _complement_basis(ctx, rest, vert)
    cols = comp + vert
    return linalg.transpose(cols)


def _verify_split(q, dec):
    ctx = q.ctx
    n = q.n
    got = q.substitute([list(r) for r in dec.T])
    expect = [ctx.zero] * tri(n)
    for i in range(dec.s):
        expect[coeff_index(n, 2 * i, 2 * i + 1)] = ctx.one
    if dec.tail is not None:
        k = 0
        m = dec.tail.n
        for i in range(m):
            for j in range(i, m):
                c = dec.tail.coeffs[k]
                k += 1
                expect[coeff_index(n, 2 * dec.s + i, 2 * dec.s + j)] = c
    if tuple(expect) != got.coeffs:
        raise AssertionError("hyperbolic split identity failed verification")
    if dec.tail is not None and not dec.tail.is_zero_form:
        tr = dec.tail.rank()
        if tr > 2:
            raise AssertionError("split tail is not maximal")
        if tr == 2:
            vert = dec.tail.vertex_space()
            comp = _complement_basis(ctx, dec.tail, vert)
            b1, b2 = comp[0], comp[1]
            if binary_is_isotropic(
                ctx,
                dec.tail.evaluate(b1),
                dec.tail.bilinear(b1, b2),
                dec.tail.evaluate(b2),
            ):
                raise AssertionError("split tail is isotropic; s not maximal")


def tangent_restrict(q, P):
    """Restrict q to its tangent hyperplane at the nonsingular zero P.

    Result has n-1 variables and rank exactly rank(q) - 2.
    """
    ctx = q.ctx
    if q.evaluate(P) != ctx.zero:
        raise SingularPoint("P is not a zero of q")
    g = q.gradient(P)
    if all(c == ctx.zero for c in g):
        raise SingularPoint("P is a singular point of q")
    basis = linalg.kernel_basis(ctx, [g])
    M = linalg.complete_basis(ctx, basis, q.n)
    moved = q.substitute(M)
    return moved.subform(list(range(q.n - 1)))
