"""Stochastic R matrices: the gauged S(z), the parameter family on W (x) W,
their 0/1-restricted versions, factorization formulas, and identity verifiers
(Yang-Baxter, sum-to-unity).
"""

from __future__ import annotations

import random

from gmpy2 import mpq

from . import tetra
from .linop import SparseOperator, apply_embedded
from .qkit import (
    Q0,
    Q1,
    TruncatedSeries,
    add_idx,
    enumerate_Bl,
    enumerate_eps_basis,
    leq,
    phi_exp,
    qbinom,
    qpoch,
    rat,
    sub_idx,
    weight,
)


# ---------------------------------------------------------------------------
# the vertex weight Phi and the stochastic matrices built from it
# ---------------------------------------------------------------------------

def phi_weight(gamma, beta, q, lam, mu):
    """Phi weight of moving gamma out of beta; zero unless gamma <= beta.

    lam may be a truncated series (for exact derivatives in lam); q, mu are
    exact rationals."""
    if len(gamma) != len(beta):
        raise ValueError("gamma and beta must have equal length")
    if not leq(gamma, beta):
        return Q0
    q, mu = rat(q), rat(mu)
    if not isinstance(lam, TruncatedSeries):
        lam = rat(lam)
    den = qpoch(mu, q, weight(beta))
    if den == 0:
        raise ValueError(f"pole: (mu; q)_{weight(beta)} vanishes at mu={mu}")
    g = weight(gamma)
    lam_inv = lam ** (-1) if g or weight(beta) > g else Q1
    val = (q ** phi_exp(sub_idx(beta, gamma), gamma)
           * mu ** g * lam ** (-g)
           * qpoch(lam, q, g) * qpoch(mu * lam_inv, q, weight(beta) - g) / den)
    for bi, gi in zip(beta, gamma):
        val = val * qbinom(bi, gi, q)
    return val


def script_S_column(alpha, beta, q, lam, mu, eps=None):
    """Image of |alpha> (x) |beta> under the stochastic matrix on W (x) W.

    Returns {(gamma, delta): value}.  With eps given, restricts both output
    factors to the hard-core-admissible states (the 0/1 sign restriction)."""
    out = {}
    for gamma in _down_set(beta):
        delta = add_idx(sub_idx(alpha, gamma), beta)
        if eps is not None and any(e and d > 1 for e, d in zip(eps, delta)):
            continue
        v = phi_weight(gamma, beta, q, lam, mu)
        if v:
            out[(gamma, delta)] = v
    return out


def _down_set(beta):
    if not beta:
        return [()]
    return [(g,) + rest for g in range(beta[0] + 1) for rest in _down_set(beta[1:])]


def script_S(lam, mu, q, n, weight_block):
    """Block of the stochastic matrix on pairs with gamma + delta = weight_block."""
    op = SparseOperator()
    for alpha, beta in _pair_block(weight_block):
        for key, v in script_S_column(alpha, beta, q, lam, mu).items():
            op.add(key, (alpha, beta), v)
    return op


def script_S_eps(eps, lam, mu, q, weight_block):
    """Restriction of the stochastic matrix to the 0/1-constrained state space."""
    eps = tuple(int(e) for e in eps)
    op = SparseOperator()
    for alpha, beta in _pair_block(weight_block):
        if any(e and a > 1 for e, a in zip(eps, alpha)):
            continue
        if any(e and b > 1 for e, b in zip(eps, beta)):
            continue
        for key, v in script_S_column(alpha, beta, q, lam, mu, eps=eps).items():
            op.add(key, (alpha, beta), v)
    return op


def _pair_block(weight_block):
    wb = tuple(weight_block)
    for alpha in _down_set(wb):
        yield alpha, sub_idx(wb, alpha)


def s_gauge(l, m, z, q, n):
    """Stochastic gauge S(z) = q^eta R(z) of the trace-built R matrix."""
    q = rat(q)
    R = tetra.build_R((0,) * (n + 1), l, m, z, q)
    op = SparseOperator()
    for (gamma, delta), (alpha, beta), v in R.items():
        eta = phi_exp(delta, gamma) - phi_exp(alpha, beta)
        op.add((gamma, delta), (alpha, beta), q ** eta * v)
    return op


# ---------------------------------------------------------------------------
# factorization formulas at the special spectral point
# ---------------------------------------------------------------------------

def factorized_S(l, m, q, n):
    """Closed form of S^{l,m} at z = q^{l-m} (requires l <= m)."""
    if l > m:
        raise ValueError("factorized form needs l <= m")
    q = rat(q)
    p = q * q
    op = SparseOperator()
    for alpha in enumerate_Bl(n, l):
        for beta in enumerate_Bl(n, m):
            for gamma in enumerate_Bl(n, l):
                delta = sub_idx(add_idx(alpha, beta), gamma)
                if any(d < 0 for d in delta):
                    continue
                v = phi_weight(gamma[:-1], beta[:-1], p, p ** (-l), p ** (-m))
                if v:
                    op.add((gamma, delta), (alpha, beta), v)
    return op


def factorized_R_eps(eps, l, m, q):
    """Closed form of the eps-family R matrix at z = q^{l-m}.

    Only valid for sign sequences of the shape (1,...,1,0,...,0) with l <= m;
    other shapes are rejected rather than extrapolated."""
    eps = tuple(int(e) for e in eps)
    if l > m:
        raise ValueError("factorized form needs l <= m")
    kappa = sum(eps)
    if eps != (1,) * kappa + (0,) * (len(eps) - kappa):
        raise ValueError(f"eps={eps} is not of the form (1^k, 0^(n+1-k))")
    q = rat(q)
    p = q * q
    np1 = len(eps)
    all_ones = kappa == np1
    bas_l = enumerate_eps_basis(eps, l)
    bas_m = enumerate_eps_basis(eps, m)
    if not bas_l or not bas_m:
        raise ValueError(f"no states of weight {l} or {m} for eps={eps}")
    op = SparseOperator()
    for alpha in bas_l:
        for beta in bas_m:
            for gamma in bas_l:
                delta = sub_idx(add_idx(alpha, beta), gamma)
                if any(d < 0 for d in delta):
                    continue
                if any(e and d > 1 for e, d in zip(eps, delta)):
                    continue
                if not leq(gamma, beta):
                    continue
                psi = phi_exp(alpha, sub_idx(beta, gamma)) + phi_exp(sub_idx(beta, gamma), gamma)
                v = q ** psi
                if all_ones:
                    v *= q ** (l * (l - m))
                else:
                    v /= qbinom(m, l, p)
                for bi, gi in zip(beta, gamma):
                    v *= qbinom(bi, gi, p)
                if v:
                    op.add((gamma, delta), (alpha, beta), v)
    return op


# ---------------------------------------------------------------------------
# verifiers
# ---------------------------------------------------------------------------

def _rand_q(rng, lo=1, hi=9):
    num = rng.randint(lo, hi)
    den = rng.randint(num + 1, hi + 3)
    return mpq(num, den)


def _ybe_ops_hold(R_ab, R_ac, R_bc, triples):
    """Entrywise braided triple product equality on the given 3-site states."""
    order_l = ((R_bc, (1, 2)), (R_ac, (0, 2)), (R_ab, (0, 1)))
    order_r = ((R_ab, (0, 1)), (R_ac, (0, 2)), (R_bc, (1, 2)))
    for st in triples:
        lhs = {st: Q1}
        for op, pos in order_l:
            lhs = apply_embedded(op, pos, lhs)
        rhs = {st: Q1}
        for op, pos in order_r:
            rhs = apply_embedded(op, pos, rhs)
        if lhs != rhs:
            return st
    return None


def verify_ybe(family, n, q=None, *, sizes=(2, 2, 2), max_weight=None,
               eps=None, trials=3, seed=0):
    """Yang-Baxter check for one of the operator families.

    family: 'S' (gauged difference family on V_k,V_l,V_m), 'sS' (parameter
    family on W blocks), or 'Reps' (trace-built R for a sign sequence).
    Parameters are drawn deterministically from the seed; q may be pinned.
    Returns a machine-readable report."""
    rng = random.Random(seed)
    params_used = []
    witness = None
    for _ in range(trials):
        qq = rat(q) if q is not None else _rand_q(rng)
        if family == "S":
            k, l, m = sizes
            x, y = _rand_q(rng), _rand_q(rng)
            R_ab = s_gauge(k, l, x, qq, n)
            R_ac = s_gauge(k, m, x * y, qq, n)
            R_bc = s_gauge(l, m, y, qq, n)
            triples = [(a, b, c) for a in enumerate_Bl(n, k)
                       for b in enumerate_Bl(n, l) for c in enumerate_Bl(n, m)]
            params_used.append({"q": str(qq), "x": str(x), "y": str(y)})
            witness = _ybe_ops_hold(R_ab, R_ac, R_bc, triples)
        elif family == "sS":
            nus = sorted({_rand_q(rng) for _ in range(8)})[:3]
            n1, n2, n3 = nus
            params_used.append({"q": str(qq), "nu": [str(v) for v in nus]})
            witness = _ybe_scriptS(n, qq, n1, n2, n3, max_weight or (1,) * n, eps)
        elif family == "Reps":
            l, m, k = sizes
            x, y = _rand_q(rng), _rand_q(rng)
            e = tuple(int(b) for b in eps)
            R_ab = tetra.build_R(e, k, l, x, qq)
            R_ac = tetra.build_R(e, k, m, x * y, qq)
            R_bc = tetra.build_R(e, l, m, y, qq)
            triples = [(a, b, c) for a in enumerate_eps_basis(e, k)
                       for b in enumerate_eps_basis(e, l)
                       for c in enumerate_eps_basis(e, m)]
            params_used.append({"q": str(qq), "x": str(x), "y": str(y), "eps": list(e)})
            witness = _ybe_ops_hold(R_ab, R_ac, R_bc, triples)
        else:
            raise ValueError(f"unknown family {family!r}")
        if witness is not None:
            break
    return {"check": "ybe", "family": family, "n": n, "params": params_used,
            "pass": witness is None,
            "witness": None if witness is None else repr(witness)}


def _ybe_scriptS(n, q, nu1, nu2, nu3, max_weight, eps):
    def apply_s(lam, mu, pos, vec):
        out = {}
        for st, coef in vec.items():
            a, b = st[pos[0]], st[pos[1]]
            for (g, d), v in script_S_column(a, b, q, lam, mu, eps=eps).items():
                ns = list(st)
                ns[pos[0]], ns[pos[1]] = g, d
                t = tuple(ns)
                w = out.get(t, 0) + coef * v
                if w:
                    out[t] = w
                else:
                    del out[t]
        return out

    states = _down_set(tuple(max_weight))
    if eps is not None:
        states = [s for s in states if all(not (e and x > 1) for e, x in zip(eps, s))]
    for a in states:
        for b in states:
            for c in states:
                st = (a, b, c)
                lhs = apply_s(nu2, nu3, (1, 2), {st: Q1})
                lhs = apply_s(nu1, nu3, (0, 2), lhs)
                lhs = apply_s(nu1, nu2, (0, 1), lhs)
                rhs = apply_s(nu1, nu2, (0, 1), {st: Q1})
                rhs = apply_s(nu1, nu3, (0, 2), rhs)
                rhs = apply_s(nu2, nu3, (1, 2), rhs)
                if lhs != rhs:
                    return st
    return None


def verify_stu(op: SparseOperator):
    """Check that every column of op sums to exactly 1."""
    bad = []
    for inp in op.in_states():
        s = op.column_sum(inp)
        if s != 1:
            bad.append({"column": repr(inp), "sum": str(s)})
    return {"check": "sum-to-unity", "pass": not bad, "witness": bad[:5]}


def inversion_probe(lam, mu, q, weight_block):
    """Exploratory check whether braided S(mu,lam) S(lam,mu) = id on a block.

    Not an asserted identity; the precise normalization of the inversion
    relation is unspecified, so this only reports what holds."""
    sw = SparseOperator()
    for (g, d), (a, b), v in script_S(lam, mu, q, len(weight_block), weight_block).items():
        sw.add((d, g), (a, b), v)  # braided version: swap the output pair
    sw2 = SparseOperator()
    for (g, d), (a, b), v in script_S(mu, lam, q, len(weight_block), weight_block).items():
        sw2.add((d, g), (a, b), v)
    prod = sw2.compose(sw)
    ident = SparseOperator.identity(list(prod.in_states()))
    return {"check": "inversion-probe", "identity": prod == ident,
            "block": repr(tuple(weight_block))}
