import warnings

import pytest
from gmpy2 import mpq

from zrplab import mpf, stationary, transfer
from zrplab.mpf import FockAlgebra, K_op, X_op, Z_closed, Z_recursive
from zrplab.qkit import phi_exp, qpoch

Q = mpq(1, 3)


def max_window_diff(A, B, alg, margin):
    win = set(alg.window(margin))
    mx = mpq(0)
    for inp in win:
        ca, cb = A.column(inp), B.column(inp)
        for out in set(ca) | set(cb):
            if out in win:
                mx = max(mx, abs(ca.get(out, mpq(0)) - cb.get(out, mpq(0))))
    return mx


# ---------------------------------------------------------------------------
# q-boson basics
# ---------------------------------------------------------------------------

def test_qboson_relations():
    alg = FockAlgebra(1, 8, Q)
    b, c = alg.b(), alg.c()
    bc, cb = b @ c, c @ b
    assert all(bc.entry(s, s) == 1 - Q ** s[0] for s in alg.states)
    assert all(cb.entry(s, s) == 1 - Q * Q ** s[0] for s in alg.window(1))
    assert not c.column((0,))  # annihilates the vacuum


def test_trace_values():
    N, r = 8, 2
    alg = FockAlgebra(1, N, Q)
    assert alg.trace(alg.k(0, r)) == (1 - Q ** (r * (N + 1))) / (1 - Q ** r)
    assert alg.trace(alg.b()) == 0
    assert alg.trace(alg.k(0, 3) @ alg.power(alg.b(), 2)) == 0


def test_K_algebra():
    alg = FockAlgebra(2, 6, Q)
    a, b = (1, 0, 2), (0, 1, 1)
    ab = tuple(x + y for x, y in zip(a, b))
    lhs = K_op(a, alg) @ K_op(b, alg)
    rhs = K_op(ab, alg).scaled(Q ** phi_exp(a, b))
    assert max_window_diff(lhs, rhs, alg, 0) == 0
    assert K_op((0, 0, 0), alg) == alg.ident()


# ---------------------------------------------------------------------------
# the matrix-product operators
# ---------------------------------------------------------------------------

def test_two_species_closed_form():
    # X = z^{-a1-a2} (z)_{a1+a2} / ((q)_{a1}(q)_{a2}) (b)inf/(z^-1 b)inf k^{a2} c^{a1}
    alg = FockAlgebra(1, 8, Q)
    z, a1, a2 = mpq(2, 7), 1, 2
    ref = (alg.qexp_inf(mpq(1), alg.b()) @ alg.qexp_inv(1 / z, alg.b())
           @ alg.k(0, a2) @ alg.power(alg.c(), a1))
    pref = z ** (-a1 - a2) * qpoch(z, Q, a1 + a2) / (qpoch(Q, Q, a1)
                                                     * qpoch(Q, Q, a2))
    X = X_op((a1, a2), z, alg)
    assert max_window_diff(X, ref.scaled(pref), alg, 0) == 0


def test_three_species_closed_matches_factored_form():
    # Z_{000} = (Z_{00} x 1 x 1) (c x b x 1)inf (k x 1 x b)inf/(z^-1 k x 1 x b)inf
    #           / (z^-1 c x b x 1)inf  -- regrouped as V(1) V(z)^{-1} pairs
    alg = FockAlgebra(3, 5, Q)
    z = mpq(2, 7)
    A12 = alg.c(0) @ alg.b(1)
    A22 = alg.k(0) @ alg.b(2)
    head = alg.qexp_inf(mpq(1), alg.b(0)) @ alg.qexp_inv(1 / z, alg.b(0))
    ref = (head @ alg.qexp_inf(mpq(1), A12) @ alg.qexp_inf(mpq(1), A22)
           @ alg.qexp_inv(1 / z, A22) @ alg.qexp_inv(1 / z, A12))
    Z = Z_closed((0, 0, 0), z, alg)
    assert max_window_diff(Z, ref, alg, 0) == 0


@pytest.mark.parametrize("alpha", [(0, 0), (1, 2)])
def test_recursive_equals_closed_two_species(alpha):
    alg = FockAlgebra(1, 8, Q)
    z = mpq(2, 7)
    assert max_window_diff(Z_recursive(alpha, z, alg),
                           Z_closed(alpha, z, alg), alg, 0) == 0


@pytest.mark.parametrize("alpha", [(0, 0, 0), (1, 0, 1)])
def test_recursive_equals_closed_three_species(alpha):
    alg = FockAlgebra(3, 5, Q)
    z = mpq(2, 7)
    m = mpf.protected_margin(alg)
    assert max_window_diff(Z_recursive(alpha, z, alg),
                           Z_closed(alpha, z, alg), alg, m) == 0


def test_vacuum_operators_commute():
    for n, N in ((2, 10), (3, 5)):
        alg = FockAlgebra(n * (n - 1) // 2, N, Q)
        Za = Z_closed((0,) * n, mpq(2, 7), alg)
        Zb = Z_closed((0,) * n, mpq(3, 5), alg)
        m = mpf.protected_margin(alg)
        assert max_window_diff(Za @ Zb, Zb @ Za, alg, m) == 0


# ---------------------------------------------------------------------------
# exchange algebra
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("lam,mu", [(mpq(4, 7), mpq(2, 5)),
                                    (mpq(3, 5), mpq(1, 4))])
def test_zf_two_species(lam, mu):
    rep = mpf.zf_check(2, lam, mu, Q, 10, 2)
    assert rep["pass"], rep["witness"]


def test_zf_three_species():
    rep = mpf.zf_check(3, mpq(4, 7), mpq(2, 5), Q, 6, 2)
    assert rep["pass"], rep["witness"]


def test_hat_relation():
    rep = mpf.hat_check(2, mpq(2, 5), Q, 10, 2)
    assert rep["pass"], rep["witness"]


# ---------------------------------------------------------------------------
# traces and stationary weights
# ---------------------------------------------------------------------------

MUS = (mpq(1, 5), mpq(1, 7), mpq(2, 9))


@pytest.mark.parametrize("L", [2, 3])
def test_traces_reproduce_stationary_state(L):
    spec = transfer.ChainSpec(2, MUS[:L], Q)
    basis = transfer.enumerate_sector(spec, (1, 1))
    P = stationary.stationary_state(spec, (1, 1))
    vals = {st: mpf.stationary_mpf(st, MUS[:L], Q, 24) for st in basis}
    tot = sum(r["value"] for r in vals.values())
    for st in basis:
        rel = abs(float(vals[st]["value"] / tot - P[st]) / float(P[st]))
        assert rel < 1e-9
        assert vals[st]["relative_gap"] < 1e-10


def test_gap_certificate_decreases():
    st = ((1, 0), (0, 1))
    g12 = mpf.stationary_mpf(st, MUS[:2], Q, 12)["relative_gap"]
    g24 = mpf.stationary_mpf(st, MUS[:2], Q, 24)["relative_gap"]
    assert g24 < g12 * float(max(Q, max(MUS[:2])))


def test_non_basic_sector_warns():
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        mpf.stationary_mpf(((0, 1), (0, 1)), MUS[:2], Q, 6)
    assert any("basic" in str(x.message) for x in w)


def test_G_k_symmetric_and_matches_normalization():
    g = mpf.G_k((1, 1), MUS, Q, 16)
    assert g == mpf.G_k((1, 1), (MUS[1], MUS[2], MUS[0]), Q, 16)
    assert g == mpf.G_k((1, 1), (MUS[2], MUS[1], MUS[0]), Q, 16)
    spec = transfer.ChainSpec(2, MUS, Q)
    total = sum(mpf.stationary_mpf(st, MUS, Q, 16)["value"]
                for st in transfer.enumerate_sector(spec, (1, 1)))
    assert g == total


def test_G_k_polynomial_in_inverse_mu():
    # a degree-3 fit in 1/mu_1 through four sample points predicts a fifth
    # exactly, so the truncated value is already polynomial of that degree
    pts = [mpq(1, j) for j in (5, 6, 7, 8, 9)]
    vals = [mpf.G_k((1, 1), (m, MUS[1]), Q, 20) for m in pts]
    xs = [1 / m for m in pts[:4]]
    pred = mpq(0)
    x = 1 / pts[-1]
    for i, xi in enumerate(xs):
        li = mpq(1)
        for j, xj in enumerate(xs):
            if i != j:
                li *= (x - xj) / (xi - xj)
        pred += vals[i] * li
    assert pred == vals[-1]


# ---------------------------------------------------------------------------
# generating function
# ---------------------------------------------------------------------------

def test_gen_function_forms_agree():
    N = 10
    alg = FockAlgebra(1, N, Q)
    lam, w = mpq(4, 7), (mpq(1, 6), mpq(1, 8))
    Ac = mpf.gen_function_A(lam, w, Q, N, form="closed")
    Ad = mpf.gen_function_A(lam, w, Q, N, form="direct")
    win = set(alg.window(2))
    for out, inp, v in Ac.items():
        if out in win and inp in win:
            assert abs(float(v - Ad.entry(out, inp))) < 1e-25
    with pytest.raises(ValueError):
        mpf.gen_function_A(lam, w, Q, N, form="sideways")


def test_gen_function_at_zero_fugacity():
    N = 10
    alg = FockAlgebra(1, N, Q)
    lam = mpq(4, 7)
    A0 = mpf.gen_function_A(lam, (mpq(0), mpq(0)), Q, N)
    X0 = X_op((0, 0), lam, alg)
    assert max(abs(float(A0.entry(o, i) - v)) for o, i, v in X0.items()) == 0


def test_gen_function_commutator_shrinks():
    # the fugacity series has unbounded lowering degree, so commutativity
    # only emerges in the infinite-cutoff limit; monitor the decay
    lam, mu, w = mpq(4, 7), mpq(2, 5), (mpq(1, 6), mpq(1, 8))
    rel = []
    for N in (12, 20, 28):
        alg = FockAlgebra(1, N, Q)
        Ac = mpf.gen_function_A(lam, w, Q, N)
        Am = mpf.gen_function_A(mu, w, Q, N)
        P1 = Ac @ Am
        C = P1 + (Am @ Ac).scaled(mpq(-1))
        win = set(alg.window(N - 4))
        mx = max([abs(float(v)) for o, i, v in C.items()
                  if o in win and i in win], default=0.0)
        sc = max(abs(float(v)) for o, i, v in P1.items()
                 if o in win and i in win)
        rel.append(mx / sc)
    assert rel[2] < rel[1] < rel[0]
    assert rel[2] < 1e-3
