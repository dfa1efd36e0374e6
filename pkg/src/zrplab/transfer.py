"""Transfer matrices of the multispecies zero range process and the
continuous-time generators derived from them.

Four families: the periodic row transfer matrix over a finite auxiliary space
(T), its analog over the unbounded single-site space (script T), and the two
mixed-boundary variants with a fixed auxiliary state on the left and a free
(summed) one on the right.  All matrix elements are exact rationals; the
spectral variable may be a truncated series, which yields exact derivatives
for the local Hamiltonians h_r, h_l, h_tilde and h(m).
"""

from __future__ import annotations

from dataclasses import dataclass

from gmpy2 import mpq

from . import stoch, tetra
from .linop import SparseOperator
from .qkit import (
    Q0,
    Q1,
    TruncatedSeries,
    add_idx,
    enumerate_Bl,
    phi_exp,
    qbinom,
    qpoch,
    rat,
    sub_idx,
    weight,
)


# ---------------------------------------------------------------------------
# chain descriptions and sectors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChainSpec:
    """A ring or segment of L sites.

    caps: per-site capacities m_i for bounded sites, or None for the
    unbounded multispecies site space; params: inhomogeneities (w_i for the
    bounded family, mu_i for the unbounded one)."""
    n: int
    params: tuple
    q: object
    caps: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(rat(p) for p in self.params))
        object.__setattr__(self, "q", rat(self.q))
        if self.caps is not None:
            object.__setattr__(self, "caps", tuple(int(c) for c in self.caps))
            if len(self.caps) != len(self.params):
                raise ValueError("caps and params must have equal length")
        if not self.params:
            raise ValueError("chain must have at least one site")

    @property
    def L(self):
        return len(self.params)


def enumerate_sector(spec: ChainSpec, k) -> list:
    """All site-state tuples with total content k.

    Bounded chains use length-(n+1) occupation tuples per site; unbounded
    chains use length-n species counts."""
    k = tuple(int(x) for x in k)
    if spec.caps is not None:
        if len(k) != spec.n + 1:
            raise ValueError("sector key must have n+1 components")
        if weight(k) > sum(spec.caps):
            return []
        site_bases = [enumerate_Bl(spec.n, m) for m in spec.caps]
        out = []

        def rec(i, rem, acc):
            if i == spec.L:
                if all(r == 0 for r in rem):
                    out.append(tuple(acc))
                return
            for s in site_bases[i]:
                if weight(s) != spec.caps[i]:
                    continue
                ns = sub_idx(rem, s)
                if any(x < 0 for x in ns):
                    continue
                acc.append(s)
                rec(i + 1, ns, acc)
                acc.pop()

        rec(0, k, [])
        return out
    if len(k) != spec.n:
        raise ValueError("sector key must have n components")
    out = []

    def rec(i, rem, acc):
        if i == spec.L - 1:
            out.append(tuple(acc) + (rem,))
            return
        for s in stoch._down_set(rem):
            acc.append(s)
            rec(i + 1, sub_idx(rem, s), acc)
            acc.pop()

    rec(0, k, [])
    return out


def is_basic_sector(k) -> bool:
    """Whether every species is present, so no relabeling reduces the sector."""
    return all(x >= 1 for x in k)


# ---------------------------------------------------------------------------
# the four transfer-matrix families
# ---------------------------------------------------------------------------

def _trace_columns(vertex_columns, beta, starts, closed):
    """Contract the auxiliary line left to right.

    vertex_columns(i, aux_in, beta_i) -> {(aux_out, alpha_i): value}.
    starts: iterable of initial auxiliary states.  closed: require the final
    auxiliary state to equal the initial one (trace) or sum freely.
    Returns {alpha_tuple: value}."""
    out = {}
    for g0 in starts:
        partial = {g0: {(): Q1}}
        for i, b in enumerate(beta):
            nxt = {}
            for g, alphas in partial.items():
                col = vertex_columns(i, g, b)
                for (g2, a), v in col.items():
                    slot = nxt.setdefault(g2, {})
                    for prefix, coef in alphas.items():
                        w = slot.get(prefix + (a,), 0) + coef * v
                        if w:
                            slot[prefix + (a,)] = w
                        else:
                            del slot[prefix + (a,)]
            partial = nxt
        for g, alphas in partial.items():
            if closed and g != g0:
                continue
            for alpha, coef in alphas.items():
                w = out.get(alpha, 0) + coef
                if w:
                    out[alpha] = w
                else:
                    del out[alpha]
    return out


def periodic_T(l, z, spec: ChainSpec, k) -> SparseOperator:
    """Row transfer matrix with auxiliary weight l on the sector of content k."""
    if spec.caps is None:
        raise ValueError("periodic_T needs a bounded chain (caps set)")
    basis = enumerate_sector(spec, k)
    gauged = {}
    for m, w in set(zip(spec.caps, spec.params)):
        gauged[(m, w)] = stoch.s_gauge(l, m, z / w, spec.q, spec.n)

    def columns(i, g, b):
        return gauged[(spec.caps[i], spec.params[i])].column((g, b))

    aux = enumerate_Bl(spec.n, l)
    op = SparseOperator()
    for beta in basis:
        for alpha, v in _trace_columns(columns, beta, aux, True).items():
            op.add(alpha, beta, v)
    return op


def periodic_scriptT(lam, spec: ChainSpec, k) -> SparseOperator:
    """Transfer matrix of the parameter family on the sector of content k.

    lam may be a truncated series for exact derivative extraction."""
    if spec.caps is not None:
        raise ValueError("periodic_scriptT needs an unbounded chain")
    basis = enumerate_sector(spec, k)

    def columns(i, g, b):
        return stoch.script_S_column(g, b, spec.q, lam, spec.params[i])

    op = SparseOperator()
    for beta in basis:
        starts = stoch._down_set(beta[-1])
        for alpha, v in _trace_columns(columns, beta, starts, True).items():
            op.add(alpha, beta, v)
    return op


def mixed_T(i_species, l, z, spec: ChainSpec) -> SparseOperator:
    """Mixed-boundary transfer matrix: auxiliary state l*e_i injected on the
    left, free sum on the right.  Acts on the full (finite) chain space."""
    if spec.caps is None:
        raise ValueError("mixed_T needs a bounded chain (caps set)")
    gauged = {}
    for m, w in set(zip(spec.caps, spec.params)):
        gauged[(m, w)] = stoch.s_gauge(l, m, z / w, spec.q, spec.n)

    def columns(i, g, b):
        return gauged[(spec.caps[i], spec.params[i])].column((g, b))

    start = tuple(l if j == i_species else 0 for j in range(spec.n + 1))
    basis = [()]
    for m in spec.caps:
        basis = [pre + (s,) for pre in basis for s in enumerate_Bl(spec.n, m)]
    op = SparseOperator()
    for beta in basis:
        for alpha, v in _trace_columns(columns, beta, [start], False).items():
            op.add(alpha, beta, v)
    return op


def mixed_scriptT(lam, spec: ChainSpec, bound) -> SparseOperator:
    """Mixed-boundary transfer matrix of the parameter family.

    The auxiliary line starts empty and exits freely, so particles can only
    leave; the operator is closed on the truncation of all states with
    sitewise content summing to at most `bound` componentwise."""
    if spec.caps is not None:
        raise ValueError("mixed_scriptT needs an unbounded chain")
    bound = tuple(int(x) for x in bound)

    def columns(i, g, b):
        return stoch.script_S_column(g, b, spec.q, lam, spec.params[i])

    zero = (0,) * spec.n
    op = SparseOperator()
    for k in stoch._down_set(bound):
        for beta in enumerate_sector(spec, k):
            for alpha, v in _trace_columns(columns, beta, [zero], False).items():
                op.add(alpha, beta, v)
    return op


def markov_gate(op: SparseOperator, kind: str):
    """Check the discrete (stochastic matrix) or continuous (generator
    matrix) Markov conditions entrywise; returns a report with violations."""
    bad_neg, bad_sum = [], []
    for inp in op.in_states():
        total = Q0
        for out, v in op.column(inp).items():
            total += v
            if v < 0 and (kind == "discrete" or out != inp):
                bad_neg.append({"entry": repr((out, inp)), "value": str(v)})
        target = 1 if kind == "discrete" else 0
        if total != target:
            bad_sum.append({"column": repr(inp), "sum": str(total)})
    if kind not in ("discrete", "continuous"):
        raise ValueError(f"unknown gate kind {kind!r}")
    return {"check": f"markov-{kind}", "pass": not bad_neg and not bad_sum,
            "negativity": bad_neg[:5], "column_sums": bad_sum[:5]}


# ---------------------------------------------------------------------------
# local Hamiltonians
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HamiltonianParams:
    n: int
    q: object
    mu: object
    sign: int = 1

    def __post_init__(self):
        object.__setattr__(self, "q", rat(self.q))
        object.__setattr__(self, "mu", rat(self.mu))
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def markov_regime(self):
        q, mu, e = self.q, self.mu, self.sign
        return 0 < q ** e < 1 and 0 < mu ** e < 1


def _check_poles(p: HamiltonianParams, max_weight: int):
    for i in range(max_weight):
        if p.mu * p.q ** i == 1:
            raise ValueError(f"pole: mu q^{i} = 1 at mu={p.mu}, q={p.q}")


def _out_rate(p, alpha, gamma):
    """Rate of the content gamma leaving a site with content alpha."""
    wa, wg = weight(alpha), weight(gamma)
    val = (p.q ** phi_exp(sub_idx(alpha, gamma), gamma)
           * p.mu ** (wg - 1) * qpoch(p.q, p.q, wg - 1)
           / qpoch(p.mu * p.q ** (wa - wg), p.q, wg))
    for ai, gi in zip(alpha, gamma):
        val *= qbinom(ai, gi, p.q)
    return val


def _in_rate(p, beta, gamma):
    """Rate of the content gamma leaving site beta towards the left."""
    wb, wg = weight(beta), weight(gamma)
    val = (p.q ** phi_exp(gamma, sub_idx(beta, gamma))
           * qpoch(p.q, p.q, wg - 1)
           / qpoch(p.mu * p.q ** (wb - wg), p.q, wg))
    for bi, gi in zip(beta, gamma):
        val *= qbinom(bi, gi, p.q)
    return val


def h_column(kind: str, p: HamiltonianParams, alpha, beta=None) -> dict:
    """Image of a local basis state under h_r, h_l (pairs) or h_tilde (one site)."""
    eps = p.sign
    out = {}
    if kind == "r" or kind == "tilde":
        _check_poles(p, weight(alpha))
        for gamma in stoch._down_set(alpha):
            if weight(gamma) == 0:
                continue
            v = eps * _out_rate(p, alpha, gamma)
            if not v:
                continue
            if kind == "r":
                key = (sub_idx(alpha, gamma), add_idx(beta, gamma))
            else:
                key = (sub_idx(alpha, gamma),)
            out[key] = out.get(key, 0) + v
        diag = -eps * sum((p.q ** i / (1 - p.mu * p.q ** i)
                           for i in range(weight(alpha))), Q0)
        key = (alpha, beta) if kind == "r" else (alpha,)
        if diag:
            out[key] = out.get(key, 0) + diag
    elif kind == "l":
        _check_poles(p, weight(beta))
        for gamma in stoch._down_set(beta):
            if weight(gamma) == 0:
                continue
            v = eps * _in_rate(p, beta, gamma)
            if not v:
                continue
            key = (add_idx(alpha, gamma), sub_idx(beta, gamma))
            out[key] = out.get(key, 0) + v
        diag = -eps * sum((1 / (1 - p.mu * p.q ** i)
                           for i in range(weight(beta))), Q0)
        if diag:
            out[(alpha, beta)] = out.get((alpha, beta), 0) + diag
    else:
        raise ValueError(f"unknown local Hamiltonian kind {kind!r}")
    return {k: v for k, v in out.items() if v}


def h_local(kind: str, p: HamiltonianParams, weight_block) -> SparseOperator:
    """Local Hamiltonian block on pair states with fixed total content
    (kinds r, l) or on single-site states of that content (kind tilde)."""
    wb = tuple(weight_block)
    op = SparseOperator()
    if kind == "tilde":
        for alpha in stoch._down_set(wb):
            for key, v in h_column("tilde", p, alpha).items():
                op.add(key, (alpha,), v)
        return op
    for alpha, beta in stoch._pair_block(wb):
        for key, v in h_column(kind, p, alpha, beta).items():
            op.add(key, (alpha, beta), v)
    return op


def assemble_H(kind: str, p: HamiltonianParams, L: int, k) -> SparseOperator:
    """Chain Hamiltonian: periodic sum of local terms (r, l) on the sector of
    content k, or the open-chain variant with a boundary exit term (tilde)
    on the truncation with content at most k."""
    op = SparseOperator()
    if kind in ("r", "l"):
        spec_states = enumerate_sector(ChainSpec(p.n, (Q1,) * L, p.q), k)
        for state in spec_states:
            for i in range(L):
                j = (i + 1) % L
                for (na, nb), v in h_column(kind, p, state[i], state[j]).items():
                    ns = list(state)
                    ns[i], ns[j] = na, nb
                    op.add(tuple(ns), state, v)
        return op
    if kind != "tilde":
        raise ValueError(f"unknown Hamiltonian kind {kind!r}")
    bound = tuple(k)
    states = []
    for kk in stoch._down_set(bound):
        states.extend(enumerate_sector(ChainSpec(p.n, (Q1,) * L, p.q), kk))
    for state in states:
        for i in range(L - 1):
            for (na, nb), v in h_column("r", p, state[i], state[i + 1]).items():
                ns = list(state)
                ns[i], ns[i + 1] = na, nb
                op.add(tuple(ns), state, v)
        for (na,), v in h_column("tilde", p, state[L - 1]).items():
            ns = list(state)
            ns[L - 1] = na
            op.add(tuple(ns), state, v)
    return op


def mixed_H(a, b, p: HamiltonianParams, L: int, k) -> SparseOperator:
    """Superposition a*H_r + b*H_l of the commuting right/left generators."""
    return (assemble_H("r", p, L, k).scaled(rat(a))
            + assemble_H("l", p, L, k).scaled(rat(b)))


# ---------------------------------------------------------------------------
# Hamiltonians from transfer-matrix derivatives
# ---------------------------------------------------------------------------

def transfer_derivative(spec: ChainSpec, k, at, prec=4) -> tuple:
    """(value, derivative) of the parameter-family transfer matrix in lam at
    the point `at`, both as exact sparse operators."""
    lam = TruncatedSeries([rat(at), Q1], 0, prec)
    jet = periodic_scriptT(lam, spec, k)
    val, der = SparseOperator(), SparseOperator()
    for out, inp, v in jet.items():
        if isinstance(v, TruncatedSeries):
            val.add(out, inp, v.coeff(0))
            der.add(out, inp, v.coeff(1))
        else:
            val.add(out, inp, v)
    return val, der


def h_from_S(m: int, q, n: int, sign: int) -> SparseOperator:
    """Local generator +-d/dz S^{m,m}(z)|_{z=1}, with the output pair swapped
    (the transfer matrix at z=1 is a translation, so the logarithmic
    derivative localizes to transposition times this derivative)."""
    q = rat(q)
    prec = 2 * (n + 1 + 2 * m + 4)
    zz = TruncatedSeries([Q1, Q1], 0, prec)
    eps = (0,) * (n + 1)
    bas = tetra.enumerate_eps_basis(eps, m)
    raw = tetra._build(eps, m, m, zz, q, bas, bas, extract=False)
    op = SparseOperator()
    for (g, d), (a, b), v in raw.items():
        eta = phi_exp(d, g) - phi_exp(a, b)
        dv = (q ** eta) * v.coeff(1)
        if dv:
            op.add((d, g), (a, b), sign * dv)
    return op
