"""Generalized quantum group for a 0/1 sign sequence: its defining relations
(including the cubic and quartic Serre-type ones) checked in the spectral
representations, and the intertwining property characterizing the R matrix.

Generator indices live in Z_{n+1}; index 0 is the affine node carrying the
spectral parameter.  States are occupation tuples of length n+1; slot j of a
state pairs with generator index j+1 (cyclically), matching pi(e_i) moving a
particle from slot i to slot i+1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from gmpy2 import mpq

from .linop import SparseOperator
from .qkit import Q0, Q1, enumerate_eps_basis, rat


@dataclass(frozen=True)
class RepContext:
    """Spectral representation pi^l_x on the weight-l states for eps."""
    eps: tuple
    l: int
    x: object
    q: object
    basis: tuple = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "eps", tuple(int(e) for e in self.eps))
        object.__setattr__(self, "x", rat(self.x))
        object.__setattr__(self, "q", rat(self.q))
        object.__setattr__(self, "basis", tuple(enumerate_eps_basis(self.eps, self.l)))
        if not self.basis:
            raise ValueError(f"no states of weight {self.l} for eps={self.eps}")

    @property
    def nodes(self):
        return len(self.eps)

    def q_slot(self, j):
        """Deformation parameter attached to slot j (cyclic, 1-based label)."""
        return self.q if self.eps[(j - 1) % self.nodes] == 0 else -1 / self.q

    def box(self, u):
        """Symmetric integer bracket [u]."""
        q = self.q
        return (q ** u - q ** (-u)) / (q - 1 / q)

    def admissible(self, state):
        return all(v >= 0 and (not e or v <= 1) for e, v in zip(self.eps, state))


def _slots(i, np1):
    """(source, target) 0-based slots of generator i: moves slot i -> i+1."""
    return (i - 1) % np1, i % np1


def rep_apply(ctx: RepContext, g, vec: dict) -> dict:
    """Apply a generator g = (kind, i), kind in {e, f, k, kinv}, to a state."""
    kind, i = g
    np1 = ctx.nodes
    i %= np1
    src, tgt = _slots(i, np1)
    out = {}
    for state, coef in vec.items():
        if kind in ("k", "kinv"):
            val = (ctx.q_slot(i) ** (-state[src])
                   * ctx.q_slot(i + 1) ** state[tgt])
            if kind == "kinv":
                val = 1 / val
            _acc(out, state, coef * val)
            continue
        if kind == "e":
            amp = ctx.box(state[src]) * (ctx.x if i == 0 else 1)
            ns = list(state)
            ns[src] -= 1
            ns[tgt] += 1
        elif kind == "f":
            amp = ctx.box(state[tgt]) * (1 / ctx.x if i == 0 else 1)
            ns = list(state)
            ns[src] += 1
            ns[tgt] -= 1
        else:
            raise ValueError(f"unknown generator kind {kind!r}")
        ns = tuple(ns)
        if amp and ctx.admissible(ns):
            _acc(out, ns, coef * amp)
    return out


def _acc(out, state, v):
    if not v:
        return
    w = out.get(state, 0) + v
    if w:
        out[state] = w
    else:
        del out[state]


def _op(ctx, word):
    """Operator of a product of generators, rightmost factor acting first."""
    op = SparseOperator()
    for s in ctx.basis:
        vec = {s: Q1}
        for g in reversed(word):
            vec = rep_apply(ctx, g, vec)
        for t, v in vec.items():
            op.add(t, s, v)
    return op


def cartan_factor(ctx, i, j):
    """Conjugation eigenvalue D_ij of k_i on e_j."""
    np1 = ctx.nodes
    d = Q1
    if (j - i) % np1 == 0:
        d *= ctx.q_slot(i) * ctx.q_slot(i + 1)
    if (j - (i - 1)) % np1 == 0:
        d /= ctx.q_slot(i)
    if (j - (i + 1)) % np1 == 0:
        d /= ctx.q_slot(i + 1)
    return d


def check_relations(ctx: RepContext):
    """Verify all defining relations in the representation; returns a report."""
    np1 = ctx.nodes
    q = ctx.q
    failures = []

    def expect_zero(tag, op):
        if not op.is_zero():
            failures.append(tag)

    ident = SparseOperator.identity(ctx.basis)
    for i in range(np1):
        k = _op(ctx, [("k", i)])
        kinv = _op(ctx, [("kinv", i)])
        expect_zero(f"k{i} kinv{i} != 1", k @ kinv - ident)
        for j in range(np1):
            d = cartan_factor(ctx, i, j)
            e_j = _op(ctx, [("e", j)])
            f_j = _op(ctx, [("f", j)])
            expect_zero(f"k{i} e{j} kinv{i} != D e{j}",
                        k @ e_j @ kinv - e_j.scaled(d))
            expect_zero(f"k{i} f{j} kinv{i} != D^-1 f{j}",
                        k @ f_j @ kinv - f_j.scaled(1 / d))
            ef = _op(ctx, [("e", i)]).commutator(f_j)
            if i == j:
                ef = ef - (k - kinv).scaled(1 / (q - 1 / q))
            expect_zero(f"[e{i}, f{j}] wrong", ef)

    for sym in ("e", "f"):
        ops = {i: _op(ctx, [(sym, i)]) for i in range(np1)}
        for i in range(np1):
            ei, ei1 = ctx.eps[(i - 1) % np1], ctx.eps[i % np1]
            sgn = -1 if ei else 1
            if ei != ei1:
                expect_zero(f"{sym}{i}^2 != 0", ops[i] @ ops[i])
            for j in range(np1):
                gap = (j - i) % np1
                if gap in (0, 1, np1 - 1):
                    continue
                expect_zero(f"[{sym}{i}, {sym}{j}] != 0", ops[i].commutator(ops[j]))
            # the higher Serre-type relations presuppose that the nodes they
            # couple are genuinely distinct neighbours on the cycle: the cubic
            # needs j and i distinct in both directions (length >= 3), the
            # quartic needs i-1 and i+1 non-adjacent (length >= 4); on shorter
            # cycles they fail in every spectral representation
            if np1 >= 3 and ei == ei1:
                for j in ((i - 1) % np1, (i + 1) % np1):
                    lhs = (ops[i] @ ops[i] @ ops[j]
                           - (ops[i] @ ops[j] @ ops[i]).scaled(sgn * ctx.box(2))
                           + ops[j] @ ops[i] @ ops[i])
                    expect_zero(f"cubic {sym}: ({i},{j})", lhs)
            if np1 >= 4 and ei != ei1:
                a, b = ops[(i - 1) % np1], ops[(i + 1) % np1]
                c = ops[i]
                lhs = (c @ a @ c @ b
                       + (c @ a @ b @ c).scaled(sgn * ctx.box(2))
                       - c @ b @ c @ a
                       - a @ c @ b @ c
                       + b @ c @ a @ c)
                expect_zero(f"quartic {sym}: node {i}", lhs)

    return {"check": "group-relations", "eps": ctx.eps, "l": ctx.l,
            "x": str(ctx.x), "q": str(ctx.q),
            "pass": not failures, "witness": failures[:5]}


# ---------------------------------------------------------------------------
# coproducts and the intertwining property
# ---------------------------------------------------------------------------

def _pair_op(ctx_l, ctx_m, terms):
    """Operator on the pair basis from a list of (g_left, g_right) words."""
    op = SparseOperator()
    for a in ctx_l.basis:
        for b in ctx_m.basis:
            for gl, gr in terms:
                va = {a: Q1}
                for g in reversed(gl):
                    va = rep_apply(ctx_l, g, va)
                vb = {b: Q1}
                for g in reversed(gr):
                    vb = rep_apply(ctx_m, g, vb)
                for ta, x in va.items():
                    for tb, y in vb.items():
                        op.add((ta, tb), (a, b), x * y)
    return op


def coproduct_terms(kind, i, flipped):
    if kind == "e":
        terms = [([], [("e", i)]), ([("e", i)], [("k", i)])]
    elif kind == "f":
        terms = [([("f", i)], []), ([("kinv", i)], [("f", i)])]
    elif kind in ("k", "kinv"):
        terms = [([(kind, i)], [(kind, i)])]
    else:
        raise ValueError(f"unknown generator kind {kind!r}")
    if flipped:
        terms = [(gr, gl) for gl, gr in terms]
    return terms


def check_intertwiner(R: SparseOperator, ctx_l: RepContext, ctx_m: RepContext):
    """Verify Delta^op(g) R = R Delta(g) for every generator g."""
    if ctx_l.eps != ctx_m.eps or ctx_l.q != ctx_m.q:
        raise ValueError("representations must share eps and q")
    failures = []
    for kind in ("e", "f", "k"):
        for i in range(ctx_l.nodes):
            lhs = _pair_op(ctx_l, ctx_m, coproduct_terms(kind, i, True)) @ R
            rhs = R @ _pair_op(ctx_l, ctx_m, coproduct_terms(kind, i, False))
            if lhs != rhs:
                failures.append(f"{kind}{i}")
    return {"check": "intertwiner", "eps": ctx_l.eps,
            "l": ctx_l.l, "m": ctx_m.l,
            "x": str(ctx_l.x), "y": str(ctx_m.x), "q": str(ctx_l.q),
            "pass": not failures, "witness": failures}
