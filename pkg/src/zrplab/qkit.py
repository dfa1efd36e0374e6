"""Exact scalars, q-combinatorics, multi-index enumeration and truncated series.

Everything downstream (R matrices, transfer matrices, Fock operators) is built
on the helpers in this module.  The exact backend is the big rational ``mpq``
from gmpy2; q, lambda, mu, z, ... are concrete rationals, never formal symbols.
"""

from __future__ import annotations

import math

from gmpy2 import mpq

Q0 = mpq(0)
Q1 = mpq(1)


def rat(x) -> mpq:
    """Parse an exact rational.  Accepts ints, mpq and strings like '3/7'.

    Floats are rejected: the exact backend must never see rounded input.
    """
    if isinstance(x, float):
        raise TypeError(f"exact backend rejects float {x!r}; pass a 'p/q' string")
    try:
        return mpq(x)
    except ZeroDivisionError as exc:
        raise ValueError(f"zero denominator in {x!r}") from exc


# ---------------------------------------------------------------------------
# q-combinatorics
# ---------------------------------------------------------------------------

def qpoch(z, q, m: int):
    """q-shifted factorial (z; q)_m = prod_{j=0}^{m-1} (1 - z q^j).

    z may be any ring element (rational, Laurent polynomial, truncated
    series); q must be an exact rational."""
    if m < 0:
        raise ValueError("qpoch order must be nonnegative")
    out = Q1
    zq = mpq(z) if isinstance(z, (int, str, type(Q1))) else z
    q = mpq(q)
    for _ in range(m):
        out = out * (1 - zq)
        zq = zq * q
    return out


def qbinom(m: int, k: int, q):
    """Gaussian binomial [m choose k]_q; zero outside 0 <= k <= m."""
    if k < 0 or k > m:
        return Q0
    q = mpq(q)
    if q == 1:
        return mpq(math.comb(m, k))
    num, den = Q1, Q1
    # (q)_m / ((q)_k (q)_{m-k}) telescoped to avoid large intermediate products
    for j in range(min(k, m - k)):
        num *= 1 - q ** (m - j)
        den *= 1 - q ** (j + 1)
    return num / den


def phi_exp(alpha, beta) -> int:
    """Cross term sum_{i<j} alpha_i * beta_j for equal-length integer arrays."""
    if len(alpha) != len(beta):
        raise ValueError("phi_exp arguments must have equal length")
    total = 0
    tail = sum(beta)
    for a, b in zip(alpha, beta):
        tail -= b
        total += a * tail
    return total


def weight(alpha) -> int:
    return sum(alpha)


def leq(alpha, beta) -> bool:
    """Componentwise partial order: alpha <= beta iff beta - alpha >= 0."""
    return all(a <= b for a, b in zip(alpha, beta))


def add_idx(alpha, beta):
    return tuple(a + b for a, b in zip(alpha, beta))


def sub_idx(alpha, beta):
    return tuple(a - b for a, b in zip(alpha, beta))


# ---------------------------------------------------------------------------
# basis enumeration
# ---------------------------------------------------------------------------

def enumerate_Bl(n: int, l: int) -> list[tuple[int, ...]]:
    """All length-(n+1) compositions of l, lexicographically descending.

    The order is fixed: index maps into matrices and golden files rely on it.
    """
    if n < 0 or l < 0:
        raise ValueError("n and l must be nonnegative")
    return _compositions(n + 1, l, None)


def _compositions(length: int, total: int, caps) -> list[tuple[int, ...]]:
    if length == 0:
        return [()] if total == 0 else []
    cap = total if caps is None else min(total, caps[0])
    rest = None if caps is None else caps[1:]
    out = []
    for first in range(cap, -1, -1):
        for tail in _compositions(length - 1, total - first, rest):
            out.append((first,) + tail)
    return out


def enumerate_eps_basis(eps, l: int) -> list[tuple[int, ...]]:
    """Compositions of l with hard-core slots: entry in {0,1} where eps_i = 1.

    Empty when the capacity is exceeded (all slots hard-core and l too big).
    """
    if l < 0:
        raise ValueError("l must be nonnegative")
    caps = tuple(1 if e else l for e in eps)
    return _compositions(len(eps), l, caps)


def enumerate_multi_upto(n: int, bound) -> list[tuple[int, ...]]:
    """All alpha in Z_{>=0}^n with alpha <= bound componentwise."""
    caps = tuple(bound)
    return _compositions_upto(n, caps)


def _compositions_upto(length: int, caps) -> list[tuple[int, ...]]:
    if length == 0:
        return [()]
    out = []
    for first in range(caps[0] + 1):
        for tail in _compositions_upto(length - 1, caps[1:]):
            out.append((first,) + tail)
    return out


# ---------------------------------------------------------------------------
# operator q-exponentials
# ---------------------------------------------------------------------------

def qexp_series(nilpotency: int, z, q, sign: str) -> list:
    """Coefficients c_j with (zA; q)_inf = sum_j c_j A^j for nilpotent A.

    sign='pochhammer' gives c_j = (-1)^j q^{j(j-1)/2} z^j / (q)_j,
    sign='inverse' gives the reciprocal series c_j = z^j / (q)_j.
    The lists terminate at the nilpotency order, so operator q-Pochhammers
    on truncated Fock spaces are evaluated by a finite exact sum.
    """
    z = mpq(z)
    q = mpq(q)
    coeffs = [Q1]
    zpow = Q1
    den = Q1
    for j in range(1, nilpotency + 1):
        zpow *= z
        den *= 1 - q ** j
        if sign == "pochhammer":
            coeffs.append((-1) ** j * q ** (j * (j - 1) // 2) * zpow / den)
        elif sign == "inverse":
            coeffs.append(zpow / den)
        else:
            raise ValueError(f"unknown sign {sign!r}")
    return coeffs


# ---------------------------------------------------------------------------
# Laurent polynomials in one symbol (used for symbolic q^c dependence)
# ---------------------------------------------------------------------------

class LaurentPoly:
    """Laurent polynomial sum_m a_m Y^m with exact rational coefficients."""

    __slots__ = ("c",)

    def __init__(self, coeffs=None):
        self.c = {}
        if coeffs:
            for e, v in coeffs.items():
                v = mpq(v)
                if v:
                    self.c[e] = v

    @classmethod
    def const(cls, v):
        return cls({0: v})

    @classmethod
    def term(cls, v, e):
        return cls({e: v})

    def __bool__(self):
        return bool(self.c)

    def __eq__(self, other):
        if isinstance(other, LaurentPoly):
            return self.c == other.c
        return self.c == LaurentPoly.const(mpq(other)).c

    def __add__(self, other):
        if not isinstance(other, LaurentPoly):
            other = LaurentPoly.const(other)
        out = dict(self.c)
        for e, v in other.c.items():
            w = out.get(e, Q0) + v
            if w:
                out[e] = w
            else:
                out.pop(e, None)
        res = LaurentPoly()
        res.c = out
        return res

    __radd__ = __add__

    def __neg__(self):
        res = LaurentPoly()
        res.c = {e: -v for e, v in self.c.items()}
        return res

    def __sub__(self, other):
        return self + (-other if isinstance(other, LaurentPoly) else -mpq(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, LaurentPoly):
            v = mpq(other)
            if not v:
                return LaurentPoly()
            res = LaurentPoly()
            res.c = {e: w * v for e, w in self.c.items()}
            return res
        out = {}
        for e1, v1 in self.c.items():
            for e2, v2 in other.c.items():
                e = e1 + e2
                w = out.get(e, Q0) + v1 * v2
                if w:
                    out[e] = w
                else:
                    out.pop(e, None)
        res = LaurentPoly()
        res.c = out
        return res

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("LaurentPoly power must be nonnegative")
        out = LaurentPoly.const(Q1)
        for _ in range(k):
            out = out * self
        return out

    def eval(self, y):
        y = mpq(y)
        return sum((v * y ** e for e, v in self.c.items()), Q0)

    def terms(self):
        return sorted(self.c.items())

    def __repr__(self):
        return "LaurentPoly(%s)" % dict(self.terms())


# ---------------------------------------------------------------------------
# truncated power series (exact modulo u^{prec})
# ---------------------------------------------------------------------------

class TruncatedSeries:
    """One-variable series with exact coefficients, truncated at u^prec.

    Supports a (possibly negative) valuation so that removable singularities
    like (1 - z)/(1 - z) at z -> 1 cancel exactly.  Arithmetic is exact modulo
    u^prec; inversion needs a nonzero leading coefficient.
    """

    __slots__ = ("v", "c", "prec")

    def __init__(self, coeffs, valuation=0, prec=None):
        c = [mpq(x) for x in coeffs]
        if prec is None:
            prec = valuation + len(c)
        # strip leading zeros to keep the valuation canonical
        while c and not c[0]:
            c.pop(0)
            valuation += 1
        if not c:
            valuation = prec
        self.v = valuation
        self.c = c[: max(0, prec - valuation)]
        self.prec = prec

    @classmethod
    def const(cls, x, prec):
        return cls([mpq(x)], 0, prec)

    @classmethod
    def var(cls, prec):
        """The series u itself."""
        return cls([Q1], 1, prec)

    def coeff(self, k):
        if k >= self.prec:
            raise ValueError(f"coefficient u^{k} beyond truncation order {self.prec}")
        if self.v <= k < self.v + len(self.c):
            return self.c[k - self.v]
        return Q0

    def _coerced(self, other):
        if isinstance(other, TruncatedSeries):
            return other
        return TruncatedSeries([mpq(other)], 0, self.prec)

    def __add__(self, other):
        other = self._coerced(other)
        prec = min(self.prec, other.prec)
        if not self.c:
            return TruncatedSeries(other.c, other.v, prec)
        if not other.c:
            return TruncatedSeries(self.c, self.v, prec)
        v = min(self.v, other.v)
        out = [Q0] * (prec - v)
        for i, x in enumerate(self.c):
            if self.v + i < prec:
                out[self.v + i - v] += x
        for i, x in enumerate(other.c):
            if other.v + i < prec:
                out[other.v + i - v] += x
        return TruncatedSeries(out, v, prec)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries([-x for x in self.c], self.v, self.prec)

    def __sub__(self, other):
        return self + (-self._coerced(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerced(other)
        if not self.c or not other.c:
            prec = min(self.v + other.prec, other.v + self.prec)
            return TruncatedSeries([], prec, prec)
        v = self.v + other.v
        prec = min(self.v + other.prec, other.v + self.prec)
        out = [Q0] * (prec - v)
        for i, x in enumerate(self.c):
            for j, y in enumerate(other.c):
                k = i + j
                if v + k < prec:
                    out[k] += x * y
        return TruncatedSeries(out, v, prec)

    __rmul__ = __mul__

    def inverse(self):
        if not self.c:
            raise ZeroDivisionError("cannot invert a series that is zero to this order")
        lead = self.c[0]
        n = self.prec - self.v
        a = self.c + [Q0] * (n - len(self.c))
        inv = [Q0] * n
        inv[0] = 1 / lead
        for k in range(1, n):
            s = Q0
            for j in range(1, k + 1):
                s += a[j] * inv[k - j]
            inv[k] = -s / lead
        return TruncatedSeries(inv, -self.v, -self.v + n)

    def __truediv__(self, other):
        return self * self._coerced(other).inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = TruncatedSeries.const(Q1, self.prec - self.v + max(self.v, 0))
        out = TruncatedSeries([Q1], 0, self.prec + (k - 1) * self.v if k else self.prec)
        base = self
        # simple square-and-multiply; exponents here are tiny
        for _ in range(k):
            out = out * base
        return out

    def __eq__(self, other):
        other = self._coerced(other)
        prec = min(self.prec, other.prec)
        return all(self.coeff(k) == other.coeff(k)
                   for k in range(min(self.v, other.v), prec))

    def __repr__(self):
        return f"TruncatedSeries(v={self.v}, c={self.c}, prec={self.prec})"


def poly_mul_trunc(a: list, b: list, order: int) -> list:
    """Product of coefficient lists modulo u^{order+1}; generic coefficients."""
    out = [0] * (order + 1)
    for i, x in enumerate(a):
        if i > order or not x:
            continue
        for j, y in enumerate(b):
            if i + j > order:
                break
            out[i + j] = out[i + j] + x * y
    return out
