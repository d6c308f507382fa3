"""Exact arithmetic for prime fields GF(p), extensions GF(p^m), and Galois rings GR(p^N, m).

Field elements are canonical integers in [0, p^m): the base-p digits, constant
term first, are the coefficients on the polynomial basis.  Extension-of-extension
fields (used internally when hunting roots over the algebraic closure) represent
elements as tuples over the base field.  Galois ring elements are integers mod
p^N (m = 1) or length-m tuples of such integers.

All contexts are immutable after construction and expose the same arithmetic
protocol (add/sub/neg/mul/inv/div/pow_el/is_square/sqrt/el/elements), so the
quadratic-form machinery is generic over them.
"""

import random
from math import prod

from .errors import (
    ContextMismatch,
    NotASquare,
    NotPrime,
    ReducibleModulus,
    ZeroForm,
)

_TABLE_LIMIT = 1 << 12
_ADD_TABLE_LIMIT = 1 << 10

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n):
    if n < 2:
        return False
    for q in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _factor_int(n):
    """Prime factors of n (trial division; n stays desk-scale here)."""
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out.append(n)
    return out


class FieldCtx:
    """GF(p^m) in polynomial basis; elements are ints in [0, p^m)."""

    is_field = True

    def __init__(self, p, m=1, modulus=None, _skip_checks=False):
        if not _skip_checks and not is_prime(p):
            raise NotPrime(f"{p} is not prime")
        self.p = p
        self.m = m
        self.order = p**m
        self.zero = 0
        self.one = 1 % self.order
        self._ppows = tuple(p**i for i in range(m + 1))
        if m == 1:
            self.modulus = None
        else:
            if modulus is None:
                modulus = _search_modulus(p, m)
            modulus = tuple(int(c) % p for c in modulus)
            if len(modulus) != m + 1 or modulus[-1] != 1:
                raise ReducibleModulus(
                    f"modulus must be monic of degree {m} (constant term first)"
                )
            if not _skip_checks and not _modulus_irreducible(p, modulus):
                raise ReducibleModulus(f"modulus {modulus} is reducible over GF({p})")
            self.modulus = modulus
        self._exp = None
        self._log = None
        self._addtab = None

    # -- representation helpers -------------------------------------------

    def coeffs(self, a):
        """Digits of a, constant term first (length m)."""
        p = self.p
        out = []
        for _ in range(self.m):
            a, r = divmod(a, p)
            out.append(r)
        return tuple(out)

    def from_coeffs(self, cs):
        p = self.p
        a = 0
        for c in reversed(tuple(cs)):
            a = a * p + (int(c) % p)
        return a

    def el(self, k):
        """Image of the integer k under Z -> GF(p^m) (lands in the prime subfield)."""
        return int(k) % self.p

    def from_index(self, i):
        return i

    def to_index(self, a):
        return a

    def elements(self):
        return range(self.order)

    def __eq__(self, other):
        return (
            isinstance(other, FieldCtx)
            and (self.p, self.m, self.modulus) == (other.p, other.m, other.modulus)
        )

    def __hash__(self):
        return hash((self.p, self.m, self.modulus))

    def __repr__(self):
        if self.m == 1:
            return f"GF({self.p})"
        return f"GF({self.p}^{self.m})"

    # -- arithmetic --------------------------------------------------------

    def add(self, a, b):
        p = self.p
        if self.m == 1:
            return (a + b) % p
        if p == 2:
            return a ^ b
        tab = self._addtab
        if tab is None and self.order <= _ADD_TABLE_LIMIT:
            tab = self._build_addtab()
        if tab is not None:
            return tab[a][b]
        return self._add_slow(a, b)

    def _add_slow(self, a, b):
        p = self.p
        out = 0
        for pw in self._ppows[: self.m]:
            da = (a // pw) % p
            db = (b // pw) % p
            out += ((da + db) % p) * pw
        return out

    def _build_addtab(self):
        self._addtab = [
            [self._add_slow(a, b) for b in range(self.order)]
            for a in range(self.order)
        ]
        return self._addtab

    def neg(self, a):
        p = self.p
        if self.m == 1:
            return (-a) % p
        if p == 2:
            return a
        out = 0
        for pw in self._ppows[: self.m]:
            d = (a // pw) % p
            out += ((-d) % p) * pw
        return out

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        if self.m == 1:
            return a * b % self.p
        if a == 0 or b == 0:
            return 0
        if self._exp is None and self.order <= _TABLE_LIMIT:
            self._build_tables()
        if self._exp is not None:
            q1 = self.order - 1
            return self._exp[(self._log[a] + self._log[b]) % q1]
        return self._mul_poly(a, b)

    def _mul_poly(self, a, b):
        p, m = self.p, self.m
        da = self.coeffs(a)
        db = self.coeffs(b)
        conv = [0] * (2 * m - 1)
        for i, x in enumerate(da):
            if x:
                for j, y in enumerate(db):
                    if y:
                        conv[i + j] = (conv[i + j] + x * y) % p
        mod = self.modulus
        for k in range(2 * m - 2, m - 1, -1):
            c = conv[k]
            if c:
                conv[k] = 0
                for j in range(m):
                    conv[k - m + j] = (conv[k - m + j] - c * mod[j]) % p
        return self.from_coeffs(conv[:m])

    def _build_tables(self):
        q = self.order
        g = self._find_generator()
        exp = [1] * (q - 1)
        cur = 1
        for i in range(1, q - 1):
            cur = self._mul_poly(cur, g)
            exp[i] = cur
        log = [0] * q
        for i, v in enumerate(exp):
            log[v] = i
        self._exp = exp
        self._log = log

    def _find_generator(self):
        q1 = self.order - 1
        primes = _factor_int(q1)
        for g in range(2, self.order):
            if all(self._pow_poly(g, q1 // ell) != 1 for ell in primes):
                return g
        raise ArithmeticError("no generator found")  # pragma: no cover

    def _pow_poly(self, a, e):
        r = 1
        while e:
            if e & 1:
                r = self._mul_poly(r, a)
            a = self._mul_poly(a, a)
            e >>= 1
        return r

    def pow_el(self, a, e):
        if self.m == 1:
            return pow(a, e, self.p) if e >= 0 else pow(self.inv(a), -e, self.p)
        if e < 0:
            a, e = self.inv(a), -e
        r = 1
        while e:
            if e & 1:
                r = self.mul(r, a)
            a = self.mul(a, a)
            e >>= 1
        return r

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError("field inverse of zero")
        if self.m == 1:
            return pow(a, -1, self.p)
        if self._exp is None and self.order <= _TABLE_LIMIT:
            self._build_tables()
        if self._exp is not None:
            q1 = self.order - 1
            return self._exp[(q1 - self._log[a]) % q1]
        return self.pow_el(a, self.order - 2)

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def frobenius(self, a):
        return self.pow_el(a, self.p)

    # -- squares and traces --------------------------------------------------

    def is_square(self, a):
        if self.p == 2 or a == 0:
            return True
        if self._exp is None and self.order <= _TABLE_LIMIT:
            self._build_tables()
        if self._log is not None:
            return self._log[a] % 2 == 0
        return self.pow_el(a, (self.order - 1) // 2) == 1

    def sqrt(self, a):
        """Deterministic square root: the unique root in char 2, else the root
        with the smaller canonical integer encoding."""
        if self.p == 2:
            return self.pow_el(a, self.order // 2)
        if a == 0:
            return 0
        if not self.is_square(a):
            raise NotASquare(f"{a} is not a square in {self!r}")
        if self._log is not None:
            q1 = self.order - 1
            r = self._exp[(self._log[a] // 2) if self._log[a] % 2 == 0 else 0]
            if self._log[a] % 2:  # pragma: no cover - excluded by is_square
                raise NotASquare(str(a))
        else:
            r = _tonelli(self, a)
        return min(r, self.neg(r))

    def abs_trace(self, a):
        """Trace down to the prime field, returned as an int in [0, p)."""
        acc = a
        t = a
        for _ in range(self.m - 1):
            t = self.pow_el(t, self.p)
            acc = self.add(acc, t)
        return acc  # lies in [0, p): prime-subfield elements are their own digit


def _tonelli(ctx, a):
    """Tonelli-Shanks over an arbitrary odd-characteristic field context."""
    q = ctx.order
    if ctx.pow_el(a, (q - 1) // 2) != ctx.one:
        raise NotASquare(str(a))
    s, e = q - 1, 0
    while s % 2 == 0:
        s //= 2
        e += 1
    n = None
    for cand_i in range(ctx.order):
        cand = ctx.from_index(cand_i)
        if cand != ctx.zero and ctx.pow_el(cand, (q - 1) // 2) != ctx.one:
            n = cand
            break
    x = ctx.pow_el(a, (s + 1) // 2)
    b = ctx.pow_el(a, s)
    g = ctx.pow_el(n, s)
    r = e
    while True:
        t = b
        mm = 0
        while t != ctx.one:
            t = ctx.mul(t, t)
            mm += 1
        if mm == 0:
            return x
        gs = ctx.pow_el(g, 1 << (r - mm - 1))
        g = ctx.mul(gs, gs)
        x = ctx.mul(x, gs)
        b = ctx.mul(b, g)
        r = mm


class ExtCtx:
    """GF(q^d) built as base[t]/(g) over an existing field context.

    Used internally for computations over the algebraic closure; elements are
    length-d tuples of base elements, constant term first.
    """

    is_field = True

    def __init__(self, base, modulus):
        self.base = base
        self.p = base.p
        g = tuple(modulus)
        d = len(g) - 1
        if d < 1 or g[-1] != base.one:
            raise ReducibleModulus("extension modulus must be monic of degree >= 1")
        self.deg = d
        self.modulus = g
        self.order = base.order**d
        self.zero = (base.zero,) * d
        self.one = tuple([base.one] + [base.zero] * (d - 1))
        self.m = None  # not a plain GF(p^m) context

    def embed(self, a):
        return tuple([a] + [self.base.zero] * (self.deg - 1))

    def gen(self):
        b = self.base
        if self.deg == 1:
            return self.embed(b.neg(self.modulus[0]))
        return tuple(
            [b.zero, b.one] + [b.zero] * (self.deg - 2)
        )

    def el(self, k):
        return self.embed(self.base.el(k))

    def from_index(self, i):
        q = self.base.order
        out = []
        for _ in range(self.deg):
            i, r = divmod(i, q)
            out.append(self.base.from_index(r))
        return tuple(out)

    def to_index(self, a):
        q = self.base.order
        i = 0
        for c in reversed(a):
            i = i * q + self.base.to_index(c)
        return i

    def elements(self):
        return (self.from_index(i) for i in range(self.order))

    def __eq__(self, other):
        return (
            isinstance(other, ExtCtx)
            and self.base == other.base
            and self.modulus == other.modulus
        )

    def __hash__(self):
        return hash((self.base, self.modulus))

    def __repr__(self):
        return f"Ext({self.base!r}, deg={self.deg})"

    def add(self, a, b):
        bb = self.base
        return tuple(bb.add(x, y) for x, y in zip(a, b))

    def sub(self, a, b):
        bb = self.base
        return tuple(bb.sub(x, y) for x, y in zip(a, b))

    def neg(self, a):
        bb = self.base
        return tuple(bb.neg(x) for x in a)

    def mul(self, a, b):
        bb = self.base
        d = self.deg
        conv = [bb.zero] * (2 * d - 1)
        for i, x in enumerate(a):
            if x != bb.zero:
                for j, y in enumerate(b):
                    if y != bb.zero:
                        conv[i + j] = bb.add(conv[i + j], bb.mul(x, y))
        g = self.modulus
        for k in range(2 * d - 2, d - 1, -1):
            c = conv[k]
            if c != bb.zero:
                conv[k] = bb.zero
                for j in range(d):
                    conv[k - d + j] = bb.sub(conv[k - d + j], bb.mul(c, g[j]))
        return tuple(conv[:d])

    def pow_el(self, a, e):
        if e < 0:
            a, e = self.inv(a), -e
        r = self.one
        while e:
            if e & 1:
                r = self.mul(r, a)
            a = self.mul(a, a)
            e >>= 1
        return r

    def inv(self, a):
        if a == self.zero:
            raise ZeroDivisionError("field inverse of zero")
        return self.pow_el(a, self.order - 2)

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def frobenius(self, a):
        return self.pow_el(a, self.p)

    def is_square(self, a):
        if self.p == 2 or a == self.zero:
            return True
        return self.pow_el(a, (self.order - 1) // 2) == self.one

    def sqrt(self, a):
        if self.p == 2:
            return self.pow_el(a, self.order // 2)
        if a == self.zero:
            return a
        r = _tonelli(self, a)
        rn = self.neg(r)
        return r if self.to_index(r) <= self.to_index(rn) else rn


def abs_trace2(ctx, a):
    """Absolute trace down to GF(2) for a char-2 field context (0 or 1 as ctx element)."""
    k = ctx.order.bit_length() - 1
    acc = a
    t = a
    for _ in range(k - 1):
        t = ctx.mul(t, t)
        acc = ctx.add(acc, t)
    return acc


def artin_schreier_root(ctx, c):
    """Solve w^2 + w = c over a char-2 field context; None when no root exists."""
    if abs_trace2(ctx, c) != ctx.zero:
        return None
    k = ctx.order.bit_length() - 1
    if k % 2 == 1:
        # half-trace
        w = c
        t = c
        for _ in range((k - 1) // 2):
            t = ctx.mul(t, t)
            t = ctx.mul(t, t)
            w = ctx.add(w, t)
        return w
    for i in range(ctx.order):  # small even-degree fields only
        w = ctx.from_index(i)
        if ctx.add(ctx.mul(w, w), w) == c:
            return w
    return None  # pragma: no cover


# ---------------------------------------------------------------------------
# dense polynomial utilities over an arbitrary field context
# ---------------------------------------------------------------------------
# Polynomials are tuples of ctx elements, constant term first, no trailing zeros.


def poly_trim(ctx, cs):
    cs = list(cs)
    while cs and cs[-1] == ctx.zero:
        cs.pop()
    return tuple(cs)


def poly_deg(f):
    return len(f) - 1


def poly_add(ctx, f, g):
    n = max(len(f), len(g))
    out = []
    for i in range(n):
        a = f[i] if i < len(f) else ctx.zero
        b = g[i] if i < len(g) else ctx.zero
        out.append(ctx.add(a, b))
    return poly_trim(ctx, out)


def poly_neg(ctx, f):
    return tuple(ctx.neg(c) for c in f)


def poly_sub(ctx, f, g):
    return poly_add(ctx, f, poly_neg(ctx, g))


def poly_scale(ctx, c, f):
    if c == ctx.zero:
        return ()
    return tuple(ctx.mul(c, x) for x in f)


def poly_mul(ctx, f, g):
    if not f or not g:
        return ()
    out = [ctx.zero] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        if a != ctx.zero:
            for j, b in enumerate(g):
                if b != ctx.zero:
                    out[i + j] = ctx.add(out[i + j], ctx.mul(a, b))
    return poly_trim(ctx, out)


def poly_divmod(ctx, f, g):
    if not g:
        raise ZeroDivisionError("polynomial division by zero")
    f = list(f)
    dg = len(g) - 1
    inv_lead = ctx.inv(g[-1])
    q = [ctx.zero] * max(0, len(f) - dg)
    while len(f) - 1 >= dg and f:
        c = ctx.mul(f[-1], inv_lead)
        k = len(f) - 1 - dg
        q[k] = c
        for i in range(dg + 1):
            f[k + i] = ctx.sub(f[k + i], ctx.mul(c, g[i]))
        while f and f[-1] == ctx.zero:
            f.pop()
    return poly_trim(ctx, q), poly_trim(ctx, f)


def poly_mod(ctx, f, g):
    return poly_divmod(ctx, f, g)[1]


def poly_monic(ctx, f):
    if not f:
        return f
    return poly_scale(ctx, ctx.inv(f[-1]), f)


def poly_gcd(ctx, f, g):
    while g:
        f, g = g, poly_mod(ctx, f, g)
    return poly_monic(ctx, f)


def poly_powmod(ctx, f, e, mod):
    r = (ctx.one,)
    f = poly_mod(ctx, f, mod)
    while e:
        if e & 1:
            r = poly_mod(ctx, poly_mul(ctx, r, f), mod)
        f = poly_mod(ctx, poly_mul(ctx, f, f), mod)
        e >>= 1
    return r


def poly_deriv(ctx, f):
    out = []
    for i in range(1, len(f)):
        c = f[i]
        k = i % ctx.p
        acc = ctx.zero
        if k:
            kk = ctx.el(k)
            acc = ctx.mul(kk, c)
        out.append(acc)
    return poly_trim(ctx, out)


def poly_eval(ctx, f, x):
    acc = ctx.zero
    for c in reversed(f):
        acc = ctx.add(ctx.mul(acc, x), c)
    return acc


def _poly_pth_root(ctx, f):
    """p-th root of f(x) = g(x^p) over a perfect field."""
    p = ctx.p
    q = ctx.order
    out = []
    for i in range(0, len(f), p):
        out.append(ctx.pow_el(f[i], q // p))
    return poly_trim(ctx, out)


def squarefree_decomposition(ctx, f):
    """Monic f -> list of (monic squarefree factor, multiplicity)."""
    p = ctx.p
    out = {}

    def rec(f, scale):
        fp = poly_deriv(ctx, f)
        if not fp:
            if len(f) == 1:
                return
            rec(_poly_pth_root(ctx, f), scale * p)
            return
        c = poly_gcd(ctx, f, fp)
        w = poly_divmod(ctx, f, c)[0]
        i = 1
        while len(w) > 1:
            y = poly_gcd(ctx, w, c)
            z = poly_divmod(ctx, w, y)[0]
            if len(z) > 1:
                key = z
                out[key] = out.get(key, 0) + i * scale
            i += 1
            w = y
            c = poly_divmod(ctx, c, y)[0]
        if len(c) > 1:
            rec(_poly_pth_root(ctx, c), scale * p)

    rec(poly_monic(ctx, f), 1)
    return sorted(out.items(), key=lambda kv: (len(kv[0]), [_key(ctx, c) for c in kv[0]]))


def _key(ctx, c):
    return ctx.to_index(c) if not isinstance(c, int) else c


def _distinct_degree(ctx, f):
    """Squarefree monic f -> list of (product-of-irreducibles, degree)."""
    q = ctx.order
    out = []
    x = poly_trim(ctx, [ctx.zero, ctx.one])
    h = x
    g = f
    d = 0
    while len(g) - 1 >= 2 * (d + 1):
        d += 1
        h = poly_powmod(ctx, h, q, g)
        fac = poly_gcd(ctx, poly_sub(ctx, h, x), g)
        if len(fac) > 1:
            out.append((fac, d))
            g = poly_divmod(ctx, g, fac)[0]
            h = poly_mod(ctx, h, g)
    if len(g) > 1:
        out.append((g, len(g) - 1))
    return out


def _equal_degree_split(ctx, f, d, rng):
    """Split a squarefree product of degree-d irreducibles (Cantor-Zassenhaus)."""
    n = len(f) - 1
    if n == d:
        return [f]
    q = ctx.order
    while True:
        r = poly_trim(
            ctx, [ctx.from_index(rng.randrange(q)) for _ in range(n)]
        )
        if len(r) < 1:
            continue
        if ctx.p == 2:
            k = q.bit_length() - 1
            t = poly_mod(ctx, r, f)
            acc = t
            for _ in range(k * d - 1):
                t = poly_powmod(ctx, t, 2, f)
                acc = poly_add(ctx, acc, t)
            g = poly_gcd(ctx, acc, f)
        else:
            s = poly_powmod(ctx, r, (q**d - 1) // 2, f)
            g = poly_gcd(ctx, poly_sub(ctx, s, (ctx.one,)), f)
        if 0 < len(g) - 1 < n:
            rest = poly_divmod(ctx, f, g)[0]
            return _equal_degree_split(ctx, g, d, rng) + _equal_degree_split(
                ctx, rest, d, rng
            )


def poly_factor(ctx, f, seed=0x5EED):
    """Factor f over ctx into monic irreducibles with multiplicity (deterministic)."""
    f = poly_trim(ctx, f)
    if len(f) <= 1:
        raise ZeroForm("cannot factor a constant polynomial")
    rng = random.Random((seed, ctx.order, tuple(_key(ctx, c) for c in f)).__repr__())
    out = []
    for sqf, mult in squarefree_decomposition(ctx, f):
        for block, d in _distinct_degree(ctx, sqf):
            for irr in _equal_degree_split(ctx, block, d, rng):
                out.append((irr, mult))
    out.sort(key=lambda km: (len(km[0]), [_key(ctx, c) for c in km[0]]))
    return out


def poly_roots(ctx, f):
    """Roots of f in ctx, with multiplicities."""
    out = []
    for g, mult in poly_factor(ctx, f):
        if len(g) == 2:
            out.append((ctx.neg(ctx.mul(g[0], ctx.inv(g[1]))), mult))
    return out


def poly_is_irreducible(ctx, f):
    f = poly_trim(ctx, f)
    d = len(f) - 1
    if d < 1:
        return False
    if d == 1:
        return True
    q = ctx.order
    f = poly_monic(ctx, f)
    x = poly_trim(ctx, [ctx.zero, ctx.one])
    if poly_powmod(ctx, x, q**d, f) != poly_mod(ctx, x, f):
        return False
    for ell in _factor_int(d):
        h = poly_powmod(ctx, x, q ** (d // ell), f)
        if len(poly_gcd(ctx, poly_sub(ctx, h, x), f)) - 1 != 0:
            return False
    return True


def irreducible_poly(ctx, d):
    """First monic irreducible of degree d over ctx in counting order of coefficients."""
    q = ctx.order
    for k in range(q**d):
        cs = []
        kk = k
        for _ in range(d):
            kk, r = divmod(kk, q)
            cs.append(ctx.from_index(r))
        cs.append(ctx.one)
        f = tuple(cs)
        if poly_is_irreducible(ctx, f):
            return f
    raise ArithmeticError("no irreducible found")  # pragma: no cover


def _search_modulus(p, m):
    base = FieldCtx(p, 1, _skip_checks=True)
    return irreducible_poly(base, m)


def _modulus_irreducible(p, modulus):
    base = FieldCtx(p, 1, _skip_checks=True)
    return poly_is_irreducible(base, tuple(c % p for c in modulus))


def make_field(p, m=1, modulus=None):
    """Build GF(p^m); a deterministic modulus is searched when omitted and m > 1."""
    return FieldCtx(int(p), int(m), modulus)


def extension_field(ctx, d):
    """GF(q^d) over ctx with the deterministic degree-d modulus (d=1 returns ctx)."""
    if d == 1:
        return ctx
    return ExtCtx(ctx, irreducible_poly(ctx, d))


def ff_is_square(ctx, a):
    return ctx.is_square(a)


def ff_sqrt(ctx, a):
    return ctx.sqrt(a)


def binary_form_roots(ctx, fcoeffs, max_ext=None):
    """All projective roots of F(x,y) = sum f_i x^i y^(d-i) over the closure.

    Returns a list of (degree, field, (a, b), multiplicity): the field is ctx for
    degree 1 and an ExtCtx of that degree otherwise; conjugate roots are all
    listed.  Root counting with multiplicity totals deg F.
    """
    f = list(fcoeffs)
    d = len(f) - 1
    if all(c == ctx.zero for c in f):
        raise ZeroForm("binary form is identically zero")
    if max_ext is None:
        max_ext = d if d >= 1 else 1
    out = []
    # root at (1 : 0) iff y divides F, i.e. the x^d coefficient chain
    fx = poly_trim(ctx, f)  # F(x, 1)
    inf_mult = d - (len(fx) - 1)
    if inf_mult > 0:
        out.append((1, ctx, (ctx.one, ctx.zero), inf_mult))
    if len(fx) - 1 >= 1:
        for g, mult in poly_factor(ctx, fx):
            dg = len(g) - 1
            if dg > max_ext:
                continue
            if dg == 1:
                root = ctx.neg(ctx.mul(g[0], ctx.inv(g[1])))
                out.append((1, ctx, (root, ctx.one), mult))
            else:
                ext = ExtCtx(ctx, poly_monic(ctx, g))
                r = ext.gen()
                for _ in range(dg):
                    out.append((dg, ext, (r, ext.one), mult))
                    r = ext.pow_el(r, ctx.order)
    return out


# ---------------------------------------------------------------------------
# Galois rings GR(p^N, m): the unramified local ring truncated at precision N
# ---------------------------------------------------------------------------


class RingCtx:
    """GR(p^N, m) = (Z/p^N)[x]/(modulus); elements are ints (m = 1) or m-tuples."""

    is_field = False

    def __init__(self, p, m=1, modulus=None, N=1):
        if N < 1:
            raise ValueError("precision must be >= 1")
        self.field = make_field(p, m, modulus)
        self.p = p
        self.m = m
        self.N = N
        self.P = p**N
        self.modulus = self.field.modulus
        if m == 1:
            self.zero = 0
            self.one = 1 % self.P
        else:
            self.zero = (0,) * m
            self.one = tuple([1] + [0] * (m - 1))

    def __eq__(self, other):
        return isinstance(other, RingCtx) and (
            self.p,
            self.m,
            self.modulus,
            self.N,
        ) == (other.p, other.m, other.modulus, other.N)

    def __hash__(self):
        return hash((self.p, self.m, self.modulus, self.N))

    def __repr__(self):
        if self.m == 1:
            return f"GR({self.p}^{self.N})"
        return f"GR({self.p}^{self.N}, {self.m})"

    def el(self, k):
        k = int(k) % self.P
        if self.m == 1:
            return k
        return tuple([k] + [0] * (self.m - 1))

    def coeffs(self, a):
        return (a,) if self.m == 1 else tuple(a)

    def from_coeffs(self, cs):
        cs = tuple(int(c) % self.P for c in cs)
        return cs[0] if self.m == 1 else cs

    def elements(self):
        if self.m == 1:
            return range(self.P)
        import itertools

        return itertools.product(range(self.P), repeat=self.m)

    def add(self, a, b):
        if self.m == 1:
            return (a + b) % self.P
        P = self.P
        return tuple((x + y) % P for x, y in zip(a, b))

    def sub(self, a, b):
        if self.m == 1:
            return (a - b) % self.P
        P = self.P
        return tuple((x - y) % P for x, y in zip(a, b))

    def neg(self, a):
        if self.m == 1:
            return (-a) % self.P
        P = self.P
        return tuple((-x) % P for x in a)

    def mul(self, a, b):
        P = self.P
        if self.m == 1:
            return a * b % P
        m = self.m
        conv = [0] * (2 * m - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    if y:
                        conv[i + j] = (conv[i + j] + x * y) % P
        mod = self.modulus
        for k in range(2 * m - 2, m - 1, -1):
            c = conv[k]
            if c:
                conv[k] = 0
                for j in range(m):
                    conv[k - m + j] = (conv[k - m + j] - c * mod[j]) % P
        return tuple(conv[:m])

    def pow_el(self, a, e):
        r = self.one
        while e:
            if e & 1:
                r = self.mul(r, a)
            a = self.mul(a, a)
            e >>= 1
        return r

    def is_unit(self, a):
        return self.reduce(a) != self.field.zero

    def inv(self, a):
        """Inverse of a unit (Newton lift of the residue-field inverse)."""
        fa = self.reduce(a)
        if fa == self.field.zero:
            raise ZeroDivisionError("ring inverse of a non-unit")
        x = self.lift(self.field.inv(fa))
        two = self.el(2)
        k = 1
        while k < self.N:
            x = self.mul(x, self.sub(two, self.mul(a, x)))
            k *= 2
        return x

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def valuation(self, a):
        """pi-adic valuation in {0,...,N}; N means zero at working precision."""
        cs = self.coeffs(a)
        if all(c == 0 for c in cs):
            return self.N
        best = self.N
        for c in cs:
            if c:
                v = 0
                while c % self.p == 0:
                    c //= self.p
                    v += 1
                best = min(best, v)
        return best

    def pi_mul(self, a, k=1):
        pk = self.p**k
        if self.m == 1:
            return a * pk % self.P
        return tuple(x * pk % self.P for x in self.coeffs(a))

    def pi_div(self, a, k=1):
        """Exact division by pi^k; raises when not divisible."""
        from .errors import NonIntegralResult

        pk = self.p**k
        cs = self.coeffs(a)
        if any(c % pk for c in cs):
            raise NonIntegralResult(f"element not divisible by pi^{k}")
        return self.from_coeffs(c // pk for c in cs)

    def reduce(self, a):
        p = self.p
        cs = self.coeffs(a)
        return self.field.from_coeffs(c % p for c in cs)

    def lift(self, fe):
        return self.from_coeffs(self.field.coeffs(fe))

    def with_precision(self, N):
        return RingCtx(self.p, self.m, self.modulus, N)


def gr_lift(fctx, rctx, a):
    """Canonical lift of a field element into the Galois ring (digits in [0, p))."""
    if (fctx.p, fctx.m, fctx.modulus) != (rctx.p, rctx.m, rctx.modulus):
        raise ContextMismatch("field and ring contexts do not match")
    return rctx.lift(a)


def gr_reduce(rctx, x, fctx=None):
    """Reduction mod pi onto the residue field."""
    if fctx is not None and (fctx.p, fctx.m, fctx.modulus) != (
        rctx.p,
        rctx.m,
        rctx.modulus,
    ):
        raise ContextMismatch("field and ring contexts do not match")
    return rctx.reduce(x)


def ring_is_square(rctx, x, prec=None):
    """Is x a square in the fraction field of the (untruncated) local ring?

    Decides via the valuation parity and the unit-part criterion: for odd p a
    unit is a square iff its residue is; for p = 2 iff y^2 = u is solvable mod 8
    (then Hensel finishes).  Raises InsufficientPrecision when the input does
    not determine the answer at the working precision.
    """
    from .errors import InsufficientPrecision

    prec = rctx.N if prec is None else prec
    v = rctx.valuation(x)
    if v >= prec:
        raise InsufficientPrecision("valuation not determined at working precision")
    if v % 2 == 1:
        return False
    u = rctx.pi_div(x, v)
    F = rctx.field
    ubar = rctx.reduce(u)
    if rctx.p != 2:
        return F.is_square(ubar)
    if prec - v < 3:
        raise InsufficientPrecision("need 3 pi-digits of the unit part when p = 2")
    y0 = rctx.lift(F.sqrt(ubar))
    diff = rctx.sub(u, rctx.mul(y0, y0))
    if rctx.valuation(diff) < 2:  # pragma: no cover - y0^2 = u mod 2 by construction
        return False
    c = rctx.reduce(rctx.pi_div(diff, 2))
    ybar = rctx.reduce(y0)
    target = F.mul(c, F.inv(F.mul(ybar, ybar)))
    return abs_trace2(F, target) == F.zero
