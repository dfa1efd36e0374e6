"""Matrix-product machinery over truncated q-boson Fock spaces.

The stationary probabilities of the periodic process admit the form
Tr(X_{s_1}(mu_1) ... X_{s_L}(mu_L)) where the X operators satisfy a quadratic
exchange (Zamolodchikov-Faddeev) algebra whose structure function is the
stochastic vertex weight.  Everything is exact rational arithmetic on Fock
spaces truncated at a cutoff N; the creation operator drops the top level, so
comparisons only trust matrix elements a safe margin below the cutoff, and
traces carry a doubling-based convergence certificate.
"""

from __future__ import annotations

import itertools
import warnings

from gmpy2 import mpq

from . import stoch
from .linop import SparseOperator
from .qkit import (
    Q0,
    Q1,
    TruncatedSeries,
    phi_exp,
    qpoch,
    rat,
    weight,
)


def qpoch_inf(z, q, tail=mpq(1, 10 ** 40)):
    """(z; q)_infinity as an exact product truncated once |z q^i| < tail."""
    z, q = rat(z), rat(q)
    val = Q1
    t = z
    while abs(t) >= tail:
        val *= 1 - t
        t *= q
    return val


class FockAlgebra:
    """f-fold tensor power of the q-boson Fock space, levels 0..N each."""

    def __init__(self, factors, N, q):
        self.f = int(factors)
        self.N = int(N)
        self.q = rat(q)
        self.states = [tuple(s) for s in
                       itertools.product(range(self.N + 1), repeat=self.f)]

    def ident(self):
        return SparseOperator.identity(self.states)

    def _single(self, pos, images):
        """Operator acting on one tensor factor: images(m) -> (m', coeff)."""
        op = SparseOperator()
        for s in self.states:
            out = images(s[pos])
            if out is None:
                continue
            m2, v = out
            if not (0 <= m2 <= self.N) or v == 0:
                continue
            op.add(s[:pos] + (m2,) + s[pos + 1:], s, v)
        return op

    def b(self, pos=0):
        return self._single(pos, lambda m: (m + 1, Q1))

    def c(self, pos=0):
        return self._single(pos, lambda m: (m - 1, 1 - self.q ** m))

    def k(self, pos=0, r=1):
        return self._single(pos, lambda m: (m, self.q ** (r * m)))

    def power(self, op, r):
        out = self.ident()
        for _ in range(r):
            out = op @ out
        return out

    def qexp_inf(self, x, op):
        """(x op)_infinity by the q-exponential series; op must be nilpotent
        on the truncation (contain a raising or lowering factor)."""
        total = self.ident()
        term = self.ident()
        j = 0
        while True:
            j += 1
            term = op @ term
            if term.nnz() == 0:
                return total
            if j > self.f * self.N + 1:
                raise ValueError("operator argument is not nilpotent")
            coef = (self.q ** (j * (j - 1) // 2) / qpoch(self.q, self.q, j)
                    * (-1) ** j * x ** j)
            total = total + term.scaled(coef)

    def qexp_inv(self, x, op):
        """Inverse of (x op)_infinity for nilpotent op."""
        total = self.ident()
        term = self.ident()
        j = 0
        while True:
            j += 1
            term = op @ term
            if term.nnz() == 0:
                return total
            if j > self.f * self.N + 1:
                raise ValueError("operator argument is not nilpotent")
            total = total + term.scaled(x ** j / qpoch(self.q, self.q, j))

    def diag(self, fn):
        """Diagonal operator with entry fn(state)."""
        op = SparseOperator()
        for s in self.states:
            v = fn(s)
            if v:
                op.add(s, s, v)
        return op

    def trace(self, op):
        """Pairing-weighted trace: the weights cancel against the matrix
        convention, leaving the plain diagonal sum."""
        return sum((op.entry(s, s) for s in self.states), Q0)

    def window(self, margin):
        """States all of whose levels sit at least margin below the cutoff."""
        return [s for s in self.states if max(s, default=0) <= self.N - margin]


def protected_margin(alg, bound=0):
    """Margin below the cutoff inside which matrix elements of bounded-
    content expressions are unaffected by the truncation.  Multi-factor
    expressions shuttle excitations between factors, so the safe region
    shrinks to roughly half the cutoff; a single factor only overshoots by
    the content bound."""
    if alg.f <= 1:
        return max(2 * bound, 1)
    return (alg.N + 1) // 2 + bound


def compare_protected(A, B, alg, margin):
    """Entrywise comparison restricted to the protected window."""
    win = set(alg.window(margin))
    witness = []
    for inp in win:
        ca, cb = A.column(inp), B.column(inp)
        for out in set(ca) | set(cb):
            if out not in win:
                continue
            va, vb = ca.get(out, Q0), cb.get(out, Q0)
            if va != vb:
                witness.append({"entry": repr((out, inp)),
                                "lhs": str(va), "rhs": str(vb)})
    return {"pass": not witness, "witness": witness[:5]}


def _apply_cols(op, vec):
    """Image of a dict-vector under a sparse operator."""
    out = {}
    for s, coef in vec.items():
        for o, v in op.column(s).items():
            w = out.get(o, Q0) + coef * v
            if w:
                out[o] = w
            else:
                del out[o]
    return out


def _compare_vectors(lhs, rhs, win, inp, witness):
    for out in set(lhs) | set(rhs):
        if out not in win:
            continue
        va, vb = lhs.get(out, Q0), rhs.get(out, Q0)
        if va != vb:
            witness.append({"entry": repr((out, inp)),
                            "lhs": str(va), "rhs": str(vb)})


# ---------------------------------------------------------------------------
# the matrix-product operators
# ---------------------------------------------------------------------------

def g_weight(alpha, zeta, q):
    """Scalar prefactor zeta^{-|a|} (zeta; q)_{|a|} / prod (q; q)_{a_i}."""
    w = weight(alpha)
    val = zeta ** (-w) * qpoch(zeta, q, w)
    for a in alpha:
        val /= qpoch(q, q, a)
    return val


def K_op(alpha, alg, offset=0):
    """prod_i k^{a_i^+} c^{a_i} on factors offset .. offset+n-2, where
    a_i^+ = a_{i+1} + ... + a_n."""
    n = len(alpha)
    op = alg.ident()
    for i in range(n - 1):
        plus = sum(alpha[i + 1:])
        op = op @ alg.k(offset + i, plus) @ alg.power(alg.c(offset + i),
                                                      alpha[i])
    return op


def _pos(i, j):
    """Factor index of the (i, j) copy, 1 <= i <= j, in the triangular
    ordering (1,1), (1,2), (2,2), (1,3), ..."""
    return j * (j - 1) // 2 + i - 1


def _A_op(i, j, alg):
    """k_{1,j-1} ... k_{i-1,j-1} c_{i,j-1} b_{i,j}, with the convention that
    the c factor is absent when i = j."""
    op = alg.b(_pos(i, j))
    if i < j:
        op = alg.c(_pos(i, j - 1)) @ op
    for r in range(1, i):
        op = alg.k(_pos(r, j - 1)) @ op
    return op


def Z_closed(alpha, zeta, alg):
    """Closed form: Z_{0^n} = Y_2 ... Y_n followed by the K tail."""
    n = len(alpha)
    if alg.f != n * (n - 1) // 2:
        raise ValueError("algebra has the wrong number of factors")
    zeta = zeta if isinstance(zeta, TruncatedSeries) else rat(zeta)
    zinv = zeta ** (-1)
    Z = alg.ident()
    for j in range(2, n + 1):
        A = [_A_op(i, j - 1, alg) for i in range(1, j)]
        Y = alg.ident()
        for op in A:
            Y = Y @ alg.qexp_inf(Q1, op)
        for op in reversed(A):
            Y = Y @ alg.qexp_inv(zinv, op)
        Z = Z @ Y
    return Z @ K_op(alpha, alg, offset=(n - 1) * (n - 2) // 2)


def Z_recursive(alpha, zeta, alg):
    """Rank recursion: Z_{a_1..a_n} = sum_l X_l tensor
    b^{l_1} k^{a_1^+} c^{a_1} tensor ... tensor b^{l_{n-1}} k^{a_{n-1}^+} c^{a_{n-1}}."""
    n = len(alpha)
    if alg.f != n * (n - 1) // 2:
        raise ValueError("algebra has the wrong number of factors")
    zeta = zeta if isinstance(zeta, TruncatedSeries) else rat(zeta)
    if n == 1:
        return alg.ident()
    sub = FockAlgebra((n - 1) * (n - 2) // 2, alg.N, alg.q)
    total = SparseOperator()
    tail_cache = {}

    def tail_factor(i, li):
        key = (i, li)
        if key not in tail_cache:
            plus = sum(alpha[i + 1:])
            pos = sub.f + i
            op = (alg.power(alg.b(pos), li) @ alg.k(pos, plus)
                  @ alg.power(alg.c(pos), alpha[i]))
            tail_cache[key] = op
        return tail_cache[key]

    for l in itertools.product(range(alg.N + 1), repeat=n - 1):
        Xl = g_weight(l, zeta, alg.q)
        head = Z_recursive(l, zeta, sub) if sub.f else None
        tail = alg.ident()
        for i in range(n - 1):
            tail = tail @ tail_factor(i, l[i])
        if tail.nnz() == 0:
            continue
        if head is None:
            total = total + tail.scaled(Xl)
        else:
            total = total + _embed_head(head, sub, alg) @ tail.scaled(Xl)
    return total


def _embed_head(op, sub, alg):
    """Extend an operator on the first sub.f factors by the identity."""
    out = SparseOperator()
    rest = itertools.product(range(alg.N + 1), repeat=alg.f - sub.f)
    rest = list(rest)
    for o, i, v in op.items():
        for r in rest:
            out.add(o + r, i + r, v)
    return out


def X_op(alpha, zeta, alg, closed=True):
    build = Z_closed if closed else Z_recursive
    return build(alpha, zeta, alg).scaled(g_weight(alpha, zeta, alg.q))


# ---------------------------------------------------------------------------
# exchange-algebra verification
# ---------------------------------------------------------------------------

def _multi_upto(n, bound):
    return [a for a in itertools.product(range(bound + 1), repeat=n)
            if weight(a) <= bound]


def zf_check(n, lam, mu, q, N, bound) -> dict:
    """X_a(mu) X_b(lam) = sum_{g <= a} Phi_q(b | a+b-g; lam, mu)
    X_g(lam) X_{a+b-g}(mu), entrywise in the protected window."""
    lam, mu, q = rat(lam), rat(mu), rat(q)
    alg = FockAlgebra(n * (n - 1) // 2, N, q)
    cache = {}

    def X(a, z):
        if (a, z) not in cache:
            cache[(a, z)] = X_op(a, z, alg)
        return cache[(a, z)]

    witness = []
    margin = protected_margin(alg, bound)
    win = set(alg.window(margin))
    for a in _multi_upto(n, bound):
        for b in _multi_upto(n, bound):
            terms = []
            for g in stoch._down_set(a):
                rest = tuple(x + y - z for x, y, z in zip(a, b, g))
                coef = stoch.phi_weight(b, rest, q, lam, mu)
                if coef:
                    terms.append((coef, g, rest))
            for inp in win:
                lhs = _apply_cols(X(a, mu), X(b, lam).column(inp))
                rhs = {}
                for coef, g, rest in terms:
                    img = _apply_cols(X(g, lam), X(rest, mu).column(inp))
                    for o, v in img.items():
                        w = rhs.get(o, Q0) + coef * v
                        if w:
                            rhs[o] = w
                        else:
                            del rhs[o]
                _compare_vectors(lhs, rhs, win, inp, witness)
            if witness:
                break
        if witness:
            break
    return {"check": "zf-exchange", "n": n, "bound": bound, "cutoff": N,
            "pass": not witness, "witness": witness[:5]}


def hat_check(n, mu, q, N, bound, prec=4) -> dict:
    """Cancellation mechanism: h[X(mu) tensor X(mu)] = X X' - X' X, with h the
    spectral derivative of the braided vertex weight at coinciding points."""
    mu, q = rat(mu), rat(q)
    alg = FockAlgebra(n * (n - 1) // 2, N, q)
    lam = TruncatedSeries([mu, Q1], 0, prec)
    jets = {}

    def jet(a):
        if a not in jets:
            jets[a] = X_op(a, lam, alg)
        return jets[a]

    def split(a):
        val, der = SparseOperator(), SparseOperator()
        for o, i, v in jet(a).items():
            if isinstance(v, TruncatedSeries):
                c0, c1 = v.coeff(0), v.coeff(1)
            else:
                c0, c1 = v, Q0
            if c0:
                val.add(o, i, c0)
            if c1:
                der.add(o, i, c1)
        return val, der

    witness = []
    margin = protected_margin(alg, bound)
    win = set(alg.window(margin))
    for a in _multi_upto(n, bound):
        for b in _multi_upto(n, bound):
            # sum over inputs (g, d) of the coefficient with which the
            # braided derivative maps |g, d> onto |a, b>: that forces
            # g = a - t, d = b + t and the coefficient is the spectral
            # derivative of Phi(b | d) at coinciding points
            terms = []
            for t in stoch._down_set(a):
                g = tuple(x - y for x, y in zip(a, t))
                d = tuple(x + y for x, y in zip(b, t))
                v = stoch.phi_weight(b, d, q, lam, mu)
                c1 = v.coeff(1) if isinstance(v, TruncatedSeries) else Q0
                if c1:
                    terms.append((c1, g, d))
            Xa, dXa = split(a)
            Xb, dXb = split(b)
            for inp in win:
                lhs = {}
                for c1, g, d in terms:
                    Xg, _ = split(g)
                    Xd, _ = split(d)
                    img = _apply_cols(Xg, Xd.column(inp))
                    for o, v in img.items():
                        w = lhs.get(o, Q0) + c1 * v
                        if w:
                            lhs[o] = w
                        else:
                            del lhs[o]
                rhs = _apply_cols(Xa, dXb.column(inp))
                for o, v in _apply_cols(dXa, Xb.column(inp)).items():
                    w = rhs.get(o, Q0) - v
                    if w:
                        rhs[o] = w
                    else:
                        del rhs[o]
                _compare_vectors(lhs, rhs, win, inp, witness)
    return {"check": "hat-relation", "n": n, "bound": bound,
            "pass": not witness, "witness": witness[:5]}


# ---------------------------------------------------------------------------
# traces, probabilities and normalization constants
# ---------------------------------------------------------------------------

def trace_product(sigmas, mus, q, N):
    """Tr(X_{s_1}(mu_1) ... X_{s_L}(mu_L)) at cutoff N, exact rational."""
    n = len(sigmas[0])
    alg = FockAlgebra(n * (n - 1) // 2, N, q)
    cache = {}
    prod = alg.ident()
    for s, m in zip(sigmas, mus):
        key = (tuple(s), rat(m))
        if key not in cache:
            cache[key] = X_op(tuple(s), rat(m), alg)
        prod = prod @ cache[key]
    return alg.trace(prod)


def stationary_mpf(sigmas, mus, q, N) -> dict:
    """Matrix-product stationary weight with a doubling convergence
    certificate: value at N, at 2N, and the relative gap."""
    k = tuple(sum(c) for c in zip(*sigmas))
    if not all(x >= 1 for x in k):
        warnings.warn(f"sector {k} is not basic; convergence not guaranteed")
    v1 = trace_product(sigmas, mus, q, N)
    v2 = trace_product(sigmas, mus, q, 2 * N)
    gap = abs(float(v2 - v1) / float(v2)) if v2 else (0.0 if v1 == v2
                                                      else float("inf"))
    return {"value": v1, "value_2N": v2, "cutoff": N, "relative_gap": gap}


def G_k(k, mus, q, N):
    """Normalization constant: sum of the matrix-product weights over the
    sector of content k."""
    k = tuple(int(x) for x in k)
    L, n = len(mus), len(k)
    total = Q0
    alg = FockAlgebra(n * (n - 1) // 2, N, q)
    cache = {}

    def X(a, m):
        if (a, m) not in cache:
            cache[(a, m)] = X_op(a, rat(m), alg)
        return cache[(a, m)]

    def rec(i, rem, prod):
        nonlocal total
        if i == L - 1:
            total += alg.trace(prod @ X(rem, mus[-1]))
            return
        for s in stoch._down_set(rem):
            rec(i + 1, tuple(r - x for r, x in zip(rem, s)),
                prod @ X(s, mus[i]))

    rec(0, k, alg.ident())
    return total


def gen_function_A(lam, w, q, N, form="closed"):
    """Generating operator A(lam|w) = sum_a X_a(lam) w^a for two species.

    form "closed": (b)_inf/(lam^-1 b)_inf Gamma(x/lam, y/lam)^-1 Gamma(x, y)
    with Gamma(x, y) = (x c)_inf (y k)_inf; form "direct": the partially
    resummed series with exact diagonal k-Pochhammer ratios.  Both use
    infinite scalar products truncated far below rational precision."""
    lam, q = rat(lam), rat(q)
    x, y = (rat(v) for v in w)
    alg = FockAlgebra(1, N, q)
    prefix = alg.qexp_inf(Q1, alg.b()) @ alg.qexp_inv(1 / lam, alg.b())
    if form == "closed":
        gamma = (alg.qexp_inf(x, alg.c())
                 @ alg.diag(lambda s: qpoch_inf(y * q ** s[0], q)))
        gamma_inv = (alg.diag(lambda s: 1 / qpoch_inf(y / lam * q ** s[0], q))
                     @ alg.qexp_inv(x / lam, alg.c()))
        return prefix @ gamma_inv @ gamma
    if form == "direct":
        total = SparseOperator()
        cm = alg.ident()
        for m in range(N + 1):
            diag = alg.diag(lambda s, m=m:
                            qpoch_inf(q ** m * y * q ** s[0], q)
                            / qpoch_inf(y / lam * q ** s[0], q))
            coef = (x / lam) ** m * qpoch(lam, q, m) / qpoch(q, q, m)
            total = total + (diag @ cm).scaled(coef)
            cm = alg.c() @ cm
        return prefix @ total
    raise ValueError(f"unknown form {form!r}")
