"""Exact dense linear algebra over field/ring contexts and over ctx[t].

Matrices are lists of row lists of context elements.  Field routines use
Gaussian elimination; ring routines either require unit pivots (GL over the
local ring) or avoid division entirely (subset-DP determinants).
"""

from .errors import SingularTransform
from . import gf


def identity(ctx, n):
    return [[ctx.one if i == j else ctx.zero for j in range(n)] for i in range(n)]


def mat_mul(ctx, A, B):
    n, k, m = len(A), len(B), len(B[0])
    out = [[ctx.zero] * m for _ in range(n)]
    for i in range(n):
        Ai = A[i]
        for t in range(k):
            a = Ai[t]
            if a == ctx.zero:
                continue
            Bt = B[t]
            row = out[i]
            for j in range(m):
                b = Bt[j]
                if b != ctx.zero:
                    row[j] = ctx.add(row[j], ctx.mul(a, b))
    return out

def mat_vec(ctx, A, v):
    out = []
    for row in A:
        acc = ctx.zero
        for a, x in zip(row, v):
            if a != ctx.zero and x != ctx.zero:
                acc = ctx.add(acc, ctx.mul(a, x))
        out.append(acc)
    return out


def transpose(A):
    return [list(col) for col in zip(*A)]


def copy_mat(A):
    return [list(r) for r in A]


def scalar_mat(ctx, n, c):
    return [[c if i == j else ctx.zero for j in range(n)] for i in range(n)]


def perm_matrix(ctx, perm):
    """Matrix P with (P.X)_i = X_perm[i]; q(PX) relabels variable perm[i] -> i."""
    n = len(perm)
    M = [[ctx.zero] * n for _ in range(n)]
    for i, j in enumerate(perm):
        M[i][j] = ctx.one
    return M


def row_reduce(ctx, A):
    """Reduced row echelon form over a field; returns (R, pivots)."""
    R = copy_mat(A)
    rows = len(R)
    cols = len(R[0]) if rows else 0
    pivots = []
    r = 0
    for c in range(cols):
        pr = None
        for i in range(r, rows):
            if R[i][c] != ctx.zero:
                pr = i
                break
        if pr is None:
            continue
        R[r], R[pr] = R[pr], R[r]
        inv = ctx.inv(R[r][c])
        R[r] = [ctx.mul(inv, x) for x in R[r]]
        for i in range(rows):
            if i != r and R[i][c] != ctx.zero:
                f = R[i][c]
                R[i] = [ctx.sub(x, ctx.mul(f, y)) for x, y in zip(R[i], R[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return R, pivots


def matrix_rank(ctx, A):
    return len(row_reduce(ctx, A)[1])


def kernel_basis(ctx, A):
    """Basis of {x : A x = 0} over a field."""
    rows = len(A)
    cols = len(A[0]) if rows else 0
    R, pivots = row_reduce(ctx, A)
    pivset = set(pivots)
    free = [c for c in range(cols) if c not in pivset]
    basis = []
    for fc in free:
        v = [ctx.zero] * cols
        v[fc] = ctx.one
        for r, pc in enumerate(pivots):
            v[pc] = ctx.neg(R[r][fc])
        basis.append(v)
    return basis


def solve(ctx, A, b):
    """One solution of A x = b over a field, or None."""
    rows = len(A)
    cols = len(A[0])
    aug = [list(A[i]) + [b[i]] for i in range(rows)]
    R, pivots = row_reduce(ctx, aug)
    for r in range(len(pivots)):
        if pivots[r] == cols:
            return None
    # rows of R beyond pivots are zero
    x = [ctx.zero] * cols
    for r, pc in enumerate(pivots):
        x[pc] = R[r][cols]
    return x


def field_inverse(ctx, A):
    n = len(A)
    aug = [list(A[i]) + identity(ctx, n)[i] for i in range(n)]
    R, pivots = row_reduce(ctx, aug)
    if pivots != list(range(n)):
        raise SingularTransform("matrix is singular over the field")
    return [row[n:] for row in R]


def field_det(ctx, A):
    n = len(A)
    M = copy_mat(A)
    det = ctx.one
    for c in range(n):
        pr = None
        for i in range(c, n):
            if M[i][c] != ctx.zero:
                pr = i
                break
        if pr is None:
            return ctx.zero
        if pr != c:
            M[c], M[pr] = M[pr], M[c]
            det = ctx.neg(det)
        det = ctx.mul(det, M[c][c])
        inv = ctx.inv(M[c][c])
        for i in range(c + 1, n):
            if M[i][c] != ctx.zero:
                f = ctx.mul(M[i][c], inv)
                M[i] = [ctx.sub(x, ctx.mul(f, y)) for x, y in zip(M[i], M[c])]
    return det


def det_division_free(ctx, A):
    """Determinant over any commutative context (subset dynamic programming)."""
    n = len(A)
    if n == 0:
        return ctx.one
    D = {0: ctx.one}
    for r in range(n):
        ND = {}
        row = A[r]
        for mask, val in D.items():
            if val == ctx.zero:
                continue
            for j in range(n):
                bit = 1 << j
                if mask & bit:
                    continue
                a = row[j]
                if a == ctx.zero:
                    continue
                above = bin(mask >> (j + 1)).count("1")
                term = ctx.mul(val, a)
                if above & 1:
                    term = ctx.neg(term)
                nm = mask | bit
                if nm in ND:
                    ND[nm] = ctx.add(ND[nm], term)
                else:
                    ND[nm] = term
        D = ND
        if not D:
            return ctx.zero
    return D.get((1 << n) - 1, ctx.zero)


def ring_inverse(rctx, A):
    """Inverse of a matrix in GL_n(o_v): every pivot must be a unit after row swaps."""
    n = len(A)
    M = [list(A[i]) + identity(rctx, n)[i] for i in range(n)]
    for c in range(n):
        pr = None
        for i in range(c, n):
            if rctx.is_unit(M[i][c]):
                pr = i
                break
        if pr is None:
            raise SingularTransform("matrix is not invertible over the local ring")
        M[c], M[pr] = M[pr], M[c]
        inv = rctx.inv(M[c][c])
        M[c] = [rctx.mul(inv, x) for x in M[c]]
        for i in range(n):
            if i != c and M[i][c] != rctx.zero:
                f = M[i][c]
                M[i] = [rctx.sub(x, rctx.mul(f, y)) for x, y in zip(M[i], M[c])]
    return [row[n:] for row in M]


def lift_matrix(rctx, Abar):
    """Canonical lift of a residue-field matrix into the ring."""
    return [[rctx.lift(x) for x in row] for row in Abar]


def reduce_matrix(rctx, A):
    return [[rctx.reduce(x) for x in row] for row in A]


def complete_basis(ctx, vecs, n):
    """Extend independent vectors to a basis; returns an invertible matrix whose
    FIRST columns are the given vectors."""
    cols = [list(v) for v in vecs]
    for e in range(n):
        if len(cols) == n:
            break
        cand = [ctx.one if i == e else ctx.zero for i in range(n)]
        test = cols + [cand]
        if matrix_rank(ctx, transpose(test)) == len(test):
            cols.append(cand)
    if len(cols) != n:
        raise SingularTransform("could not complete to a basis")
    return transpose(cols)


def complete_basis_ring(rctx, vecs, n):
    """Same over the local ring: independence is checked on the reductions."""
    F = rctx.field
    cols = [list(v) for v in vecs]
    for e in range(n):
        if len(cols) == n:
            break
        cand = [rctx.one if i == e else rctx.zero for i in range(n)]
        test = cols + [cand]
        red = [[rctx.reduce(x) for x in v] for v in test]
        if matrix_rank(F, transpose(red)) == len(test):
            cols.append(cand)
    if len(cols) != n:
        raise SingularTransform("could not complete to a ring basis")
    return transpose(cols)


# ---------------------------------------------------------------------------
# matrices of univariate polynomials over a field context
# ---------------------------------------------------------------------------


class _Frac:
    __slots__ = ("num", "den")

    def __init__(self, num, den):
        self.num = num
        self.den = den


def _frac_norm(ctx, num, den):
    if not num:
        return _Frac((), (ctx.one,))
    g = gf.poly_gcd(ctx, num, den)
    if len(g) > 1:
        num = gf.poly_divmod(ctx, num, g)[0]
        den = gf.poly_divmod(ctx, den, g)[0]
    # monic denominator
    lc = den[-1]
    if lc != ctx.one:
        inv = ctx.inv(lc)
        num = gf.poly_scale(ctx, inv, num)
        den = gf.poly_scale(ctx, inv, den)
    return _Frac(num, den)


class PolyFracField:
    """Rational functions over ctx[t], with just enough protocol for row_reduce."""

    is_field = True

    def __init__(self, ctx):
        self.ctx = ctx
        self.zero = _Frac((), (ctx.one,))
        self.one = _Frac((ctx.one,), (ctx.one,))
        self.p = ctx.p

    def from_poly(self, f):
        return _Frac(gf.poly_trim(self.ctx, f), (self.ctx.one,))

    def add(self, a, b):
        c = self.ctx
        num = gf.poly_add(
            c, gf.poly_mul(c, a.num, b.den), gf.poly_mul(c, b.num, a.den)
        )
        return _frac_norm(c, num, gf.poly_mul(c, a.den, b.den))

    def neg(self, a):
        return _Frac(gf.poly_neg(self.ctx, a.num), a.den)

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        c = self.ctx
        return _frac_norm(
            c, gf.poly_mul(c, a.num, b.num), gf.poly_mul(c, a.den, b.den)
        )

    def inv(self, a):
        if not a.num:
            raise ZeroDivisionError("inverse of zero rational function")
        return _frac_norm(self.ctx, a.den, a.num)

    def div(self, a, b):
        return self.mul(a, self.inv(b))


def _frac_eq_zero(a):
    return not a.num


def poly_mat_rank_kernel(ctx, A):
    """Rank over ctx(t) and a polynomial kernel basis for an n x n matrix of polys.

    Returns (rank, kernel_vectors, witness_minor) where kernel_vectors are lists
    of polynomials with cleared denominators spanning the generic kernel, and
    witness_minor is a nonzero rank x rank minor of A as a polynomial in t
    (zero-poly when rank = 0).
    """
    K = PolyFracField(ctx)
    n = len(A)
    F = [[K.from_poly(e) for e in row] for row in A]
    # Gauss-Jordan over the rational function field
    R = [row[:] for row in F]
    pivots = []
    r = 0
    for c in range(n):
        pr = None
        for i in range(r, n):
            if not _frac_eq_zero(R[i][c]):
                pr = i
                break
        if pr is None:
            continue
        R[r], R[pr] = R[pr], R[r]
        inv = K.inv(R[r][c])
        R[r] = [K.mul(inv, x) for x in R[r]]
        for i in range(n):
            if i != r and not _frac_eq_zero(R[i][c]):
                f = R[i][c]
                R[i] = [K.sub(x, K.mul(f, y)) for x, y in zip(R[i], R[r])]
        pivots.append(c)
        r += 1
        if r == n:
            break
    rank = len(pivots)
    pivset = set(pivots)
    free = [c for c in range(n) if c not in pivset]
    kernel = []
    for fc in free:
        entries = [K.zero] * n
        entries[fc] = K.one
        for rr, pc in enumerate(pivots):
            entries[pc] = K.neg(R[rr][fc])
        # clear denominators
        lcm = (ctx.one,)
        for e in entries:
            if e.num:
                g = gf.poly_gcd(ctx, lcm, e.den)
                extra = gf.poly_divmod(ctx, e.den, g)[0]
                lcm = gf.poly_mul(ctx, lcm, extra)
        vec = []
        for e in entries:
            if not e.num:
                vec.append(())
            else:
                mulby = gf.poly_divmod(ctx, lcm, e.den)[0]
                vec.append(gf.poly_mul(ctx, e.num, mulby))
        kernel.append(vec)
    minor = _rank_witness_minor(ctx, A, pivots) if rank else ()
    return rank, kernel, minor


def _rank_witness_minor(ctx, A, pivot_cols):
    """A nonzero rank x rank minor of A(t): rows are chosen greedily."""
    k = len(pivot_cols)
    # choose k rows making the pivot-column submatrix nonsingular over ctx(t):
    # greedy by rank growth
    rows = []
    cur = []
    for i in range(len(A)):
        cand = cur + [[A[i][c] for c in pivot_cols]]
        if _poly_submatrix_rank(ctx, cand) == len(cand):
            cur = cand
            rows.append(i)
            if len(rows) == k:
                break
    sub = [[A[i][c] for c in pivot_cols] for i in rows]
    return poly_mat_det(ctx, sub)


def _poly_submatrix_rank(ctx, rows):
    K = PolyFracField(ctx)
    F = [[K.from_poly(e) for e in row] for row in rows]
    m = len(F)
    n = len(F[0]) if m else 0
    r = 0
    for c in range(n):
        pr = None
        for i in range(r, m):
            if not _frac_eq_zero(F[i][c]):
                pr = i
                break
        if pr is None:
            continue
        F[r], F[pr] = F[pr], F[r]
        inv = K.inv(F[r][c])
        F[r] = [K.mul(inv, x) for x in F[r]]
        for i in range(r + 1, m):
            if not _frac_eq_zero(F[i][c]):
                f = F[i][c]
                F[i] = [K.sub(x, K.mul(f, y)) for x, y in zip(F[i], F[r])]
        r += 1
        if r == m:
            break
    return r


def poly_mat_det(ctx, A):
    """Determinant of a matrix of polynomials via fraction-free Bareiss."""
    n = len(A)
    if n == 0:
        return (ctx.one,)
    M = [[gf.poly_trim(ctx, e) for e in row] for row in A]
    sign = False
    prev = (ctx.one,)
    for k in range(n - 1):
        if not M[k][k]:
            pr = None
            for i in range(k + 1, n):
                if M[i][k]:
                    pr = i
                    break
            if pr is None:
                return ()
            M[k], M[pr] = M[pr], M[k]
            sign = not sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = gf.poly_sub(
                    ctx,
                    gf.poly_mul(ctx, M[k][k], M[i][j]),
                    gf.poly_mul(ctx, M[i][k], M[k][j]),
                )
                if num:
                    q, rem = gf.poly_divmod(ctx, num, prev)
                    assert not rem, "Bareiss division must be exact"
                    M[i][j] = q
                else:
                    M[i][j] = ()
            M[i][k] = ()
        prev = M[k][k]
    d = M[n - 1][n - 1]
    return gf.poly_neg(ctx, d) if sign else d
