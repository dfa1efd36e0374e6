"""Exact stationary states of the sector-restricted Markov dynamics.

The stationary vector of the stochastic transfer matrix (or of the
continuous-time generator) on a content sector is computed by exact rational
elimination; uniqueness is asserted, and independence of the spectral
parameter follows from commutativity and is checked in tests.
"""

from __future__ import annotations

import random

from gmpy2 import mpq

from . import transfer
from .linop import SparseOperator
from .qkit import Q0, Q1, qpoch, rat, weight


def _nullspace(rows, dim):
    """Kernel basis of a dense rational matrix given as list of rows."""
    mat = [list(r) for r in rows]
    piv_cols = []
    r = 0
    for c in range(dim):
        piv = next((i for i in range(r, len(mat)) if mat[i][c] != 0), None)
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        inv = 1 / mat[r][c]
        mat[r] = [x * inv for x in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        piv_cols.append(c)
        r += 1
        if r == len(mat):
            break
    free = [c for c in range(dim) if c not in piv_cols]
    basis = []
    for fc in free:
        v = [Q0] * dim
        v[fc] = Q1
        for ri, pc in enumerate(piv_cols):
            v[pc] = -mat[ri][fc]
        basis.append(v)
    return basis


def solve_stationary(op: SparseOperator, kind: str) -> dict:
    """Unique stationary distribution of a stochastic matrix (kind
    "discrete": op P = P) or generator (kind "continuous": op P = 0),
    normalized to total mass one."""
    if kind not in ("discrete", "continuous"):
        raise ValueError(f"unknown kind {kind!r}")
    states = sorted(op.in_states())
    index = {s: i for i, s in enumerate(states)}
    dim = len(states)
    rows = [[Q0] * dim for _ in range(dim)]
    for out, inp, v in op.items():
        rows[index[out]][index[inp]] += v
    if kind == "discrete":
        for i in range(dim):
            rows[i][i] -= Q1
    kernel = _nullspace(rows, dim)
    if len(kernel) != 1:
        raise ValueError(f"stationary space has dimension {len(kernel)}, "
                         "expected 1")
    vec = kernel[0]
    total = sum(vec, Q0)
    if total == 0:
        raise ValueError("stationary vector has zero total mass")
    return {s: v / total for s, v in zip(states, vec) if v}


def stationary_state(spec: transfer.ChainSpec, k, lam=None) -> dict:
    """Stationary distribution of the parameter-family transfer matrix on
    the sector of content k.  Any lam in the stochastic regime gives the
    same vector; default lam is the geometric midpoint guard (max mu_i + 1)/2
    clipped into (max mu_i, 1)."""
    if lam is None:
        top = max(spec.params)
        lam = (top + 1) / 2
    T = transfer.periodic_scriptT(rat(lam), spec, k)
    return solve_stationary(T, "discrete")


def g_factor(alpha, mu, q):
    """Single-site stationary weight: mu^{-|a|} (mu; q)_{|a|} / prod (q; q)_{a_i}."""
    mu, q = rat(mu), rat(q)
    w = weight(alpha)
    val = mu ** (-w) * qpoch(mu, q, w)
    for a in alpha:
        val /= qpoch(q, q, a)
    return val


def product_measure(spec: transfer.ChainSpec, k) -> dict:
    """Sector-normalized product of single-site weights.  For one species
    this is the exact stationary state; for several it is generally not."""
    out = {}
    total = Q0
    for state in transfer.enumerate_sector(spec, k):
        v = Q1
        for sigma, mu in zip(state, spec.params):
            v *= g_factor(sigma, mu, spec.q)
        out[state] = v
        total += v
    return {s: v / total for s, v in out.items()}


def probe_positivity(n, L, k, trials, seed) -> dict:
    """Randomized evidence that stationary vectors are strictly positive in
    the stochastic regime.  Not a proof."""
    rng = random.Random(seed)
    failures = []
    for t in range(trials):
        q = mpq(rng.randint(1, 30), 31)
        mus = tuple(mpq(rng.randint(1, 20), 21 + rng.randint(0, 10))
                    for _ in range(L))
        spec = transfer.ChainSpec(n, mus, q)
        top = max(mus)
        lam = (top + 1) / 2
        P = stationary_state(spec, k, lam)
        basis = transfer.enumerate_sector(spec, k)
        if any(P.get(s, Q0) <= 0 for s in basis):
            failures.append({"q": str(q), "mus": [str(m) for m in mus]})
    return {"check": "stationary-positivity", "trials": trials,
            "pass": not failures, "witness": failures[:5]}
