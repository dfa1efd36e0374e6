"""End-to-end acceptance gate: every contract-level property of the library
is exercised here at its stated scale and tolerance.  Individual module
suites cover the same ground in more detail; this file is the single place
that asserts the full grid."""

import random

from gmpy2 import mpq

from test_stationary import golden_three_site, golden_two_site
from test_tetra import golden_110
from zrplab import dyn, mpf, stationary, stoch, tetra, transfer, uqa
from zrplab.mpf import FockAlgebra, Z_closed, Z_recursive
from zrplab.qkit import enumerate_multi_upto
from zrplab.transfer import ChainSpec, HamiltonianParams


def rand_unit(rng):
    den = rng.randint(3, 19)
    num = rng.randint(1, den - 1)
    return mpq(num, den)


def rand_regime(rng, n_mu):
    """q and n_mu distinct site parameters, all strictly inside (0, 1)."""
    q = rand_unit(rng)
    mus = []
    while len(mus) < n_mu:
        m = rand_unit(rng)
        if m not in mus:
            mus.append(m)
    return q, tuple(mus)


# ---------------------------------------------------------------------------
# 1. exact two- and three-site stationary polynomials at random regime points
# ---------------------------------------------------------------------------

def test_01_stationary_golden_polynomials_random_points():
    rng = random.Random(42)
    for _ in range(5):
        q, mus = rand_regime(rng, 2)
        spec = ChainSpec(2, mus, q)
        assert (stationary.stationary_state(spec, (1, 1))
                == golden_two_site(list(mus), q))
    for _ in range(5):
        q, mus = rand_regime(rng, 3)
        spec = ChainSpec(2, mus, q)
        assert (stationary.stationary_state(spec, (1, 1))
                == golden_three_site(list(mus), q))


# ---------------------------------------------------------------------------
# 2. matrix-product traces against the exact null-space solver
# ---------------------------------------------------------------------------

def test_02_matrix_product_matches_null_space():
    q = mpq(1, 3)
    mus = (mpq(1, 5), mpq(1, 7), mpq(2, 9))
    for L in (2, 3):
        spec = ChainSpec(2, mus[:L], q)
        basis = transfer.enumerate_sector(spec, (1, 1))
        exact = stationary.stationary_state(spec, (1, 1))
        vals = {st: mpf.stationary_mpf(st, mus[:L], q, 24) for st in basis}
        total = sum(r["value"] for r in vals.values())
        for st in basis:
            rel = abs(float(vals[st]["value"] / total - exact[st])
                      / float(exact[st]))
            assert rel < 1e-9
            assert vals[st]["relative_gap"] < 1e-10


# ---------------------------------------------------------------------------
# 3. Yang-Baxter suites for all three operator families
# ---------------------------------------------------------------------------

def test_03_ybe_parameter_family():
    for n in (1, 2):
        rep = stoch.verify_ybe("sS", n, max_weight=(2,) * n,
                               trials=3, seed=31 + n)
        assert rep["pass"], rep


def test_03_ybe_gauged_difference_family():
    for n in (1, 2):
        rep = stoch.verify_ybe("S", n, sizes=(2, 2, 2), trials=3, seed=7 + n)
        assert rep["pass"], rep


def test_03_ybe_trace_built_family():
    for i, eps in enumerate([(0, 0, 0), (1, 0, 0), (1, 1, 0), (1, 1, 1)]):
        rep = stoch.verify_ybe("Reps", len(eps) - 1, sizes=(2, 2, 2),
                               eps=eps, trials=3, seed=100 + i)
        assert rep["pass"], rep


# ---------------------------------------------------------------------------
# 4. sum-to-unity, including the documented hard-core deficit
# ---------------------------------------------------------------------------

def test_04_sum_to_unity_and_deficit():
    q = mpq(2, 5)
    lam, mu = mpq(2, 3), mpq(1, 3)
    for n, block in ((1, (2,)), (2, (2, 2))):
        assert stoch.verify_stu(stoch.script_S(lam, mu, q, n, block))["pass"]
    for l in (1, 2):
        for m in (1, 2):
            assert stoch.verify_stu(stoch.s_gauge(l, m, mpq(3, 7), q,
                                                  1))["pass"]
    op = stoch.script_S_eps((1,), lam, mu, q, (2,))
    assert not stoch.verify_stu(op)["pass"]
    assert (op.column_sum(((1,), (1,)))
            == 1 - (lam - mu) / (lam * (1 - mu)))


# ---------------------------------------------------------------------------
# 5. factorization at the special spectral point
# ---------------------------------------------------------------------------

def test_05_factorization_gauged_family():
    q = mpq(2, 5)
    for n in (1, 2):
        for l in range(1, 4):
            for m in range(l, 4):
                assert (stoch.s_gauge(l, m, q ** (l - m), q, n)
                        == stoch.factorized_S(l, m, q, n))


def test_05_factorization_step_shapes():
    q = mpq(2, 5)
    for np1 in (2, 3):
        for kappa in range(np1 + 1):
            eps = (1,) * kappa + (0,) * (np1 - kappa)
            top = min(3, kappa) if kappa == np1 else 3
            for l in range(1, top + 1):
                for m in range(l, top + 1):
                    F = stoch.factorized_R_eps(eps, l, m, q)
                    R = tetra.build_R(eps, l, m, q ** (l - m), q)
                    assert R == F, (eps, l, m)


# ---------------------------------------------------------------------------
# 6. golden matrix elements of the two-hard-core-slot R
# ---------------------------------------------------------------------------

def test_06_golden_matrix_elements():
    points = [(mpq(3, 7), mpq(2, 5)), (mpq(5, 2), mpq(1, 3)),
              (mpq(7, 9), mpq(4, 7))]
    for l, m in ((2, 2), (2, 3), (3, 3)):
        for z, q in points:
            R = tetra.build_R((1, 1, 0), l, m, z, q)
            golden = golden_110(l, m, z, q)
            for inp, col in golden.items():
                assert R.column(inp) == {k: v for k, v in col.items() if v}
            assert set(golden) == set(R.in_states())


# ---------------------------------------------------------------------------
# 7. tetrahedron equation on all states with indices up to four
# ---------------------------------------------------------------------------

def test_07_tetrahedron_equation():
    q = mpq(2, 7)
    for eps_bit in (0, 1):
        rep = tetra.check_tetrahedron(eps_bit, 4, q)
        assert rep["pass"], rep


# ---------------------------------------------------------------------------
# 8. Hamiltonian suite
# ---------------------------------------------------------------------------

Q8, MU8 = mpq(2, 5), mpq(1, 3)


def test_08_generators_sum_to_zero_and_nonnegative_in_regime():
    p = HamiltonianParams(2, Q8, MU8, 1)
    for kind, k in (("r", (2, 1)), ("l", (2, 1)), ("tilde", (1, 1))):
        H = transfer.assemble_H(kind, p, 3, k)
        assert transfer.markov_gate(H, "continuous")["pass"], kind


def test_08_right_and_left_generators_commute():
    p = HamiltonianParams(2, Q8, MU8, 1)
    for L in (2, 3):
        for k in ((1, 1), (2, 1), (2, 2)):
            Hr = transfer.assemble_H("r", p, L, k)
            Hl = transfer.assemble_H("l", p, L, k)
            assert Hr.commutator(Hl).is_zero(), (L, k)


def test_08_parity_conjugation():
    L, k = 3, (1, 2)
    a, b = mpq(2, 7), mpq(5, 6)
    Hm = transfer.mixed_H(a, b, HamiltonianParams(2, 1 / Q8, 1 / MU8, -1),
                          L, k)
    Hp = transfer.mixed_H(MU8 * b, MU8 * a,
                          HamiltonianParams(2, Q8, MU8, 1), L, k)
    from zrplab.linop import SparseOperator
    P = SparseOperator()
    for st in transfer.enumerate_sector(ChainSpec(2, (MU8,) * L, Q8), k):
        P.add(st[::-1], st, mpq(1))
    assert (Hm @ P) == (P @ Hp)


def test_08_degenerate_limits():
    # mu -> 0: q-boson departure rates for a single species
    p0 = HamiltonianParams(2, Q8, mpq(0), 1)
    alpha = (2, 1)
    col = transfer.h_column("r", p0, alpha, (0, 0))
    for a in range(2):
        g = tuple(1 if i == a else 0 for i in range(2))
        key = (tuple(x - y for x, y in zip(alpha, g)), g)
        assert col[key] == Q8 ** sum(alpha[:a]) * (1 - Q8 ** alpha[a]) \
            / (1 - Q8)
    # (mu, q) -> (0, 0): priority rule with unit rates
    p00 = HamiltonianParams(2, mpq(0), mpq(0), 1)
    beta = (2, 1)
    col = transfer.h_column("l", p00, (0, 0), beta)
    moves = {tuple(b - r for b, r in zip(beta, rem))
             for (_, rem), v in col.items() if v > 0}
    assert moves == {(0, 1), (1, 1), (2, 1)}
    assert all(v == 1 for k, v in col.items() if k != ((0, 0), beta))


def test_08_capacity_family_generators():
    # capacity one: the multispecies asymmetric exclusion with rates 1 : q^2
    h = transfer.h_from_S(1, Q8, 1, 1)
    fwd = h.entry(((0, 1), (1, 0)), ((1, 0), (0, 1)))
    bwd = h.entry(((1, 0), (0, 1)), ((0, 1), (1, 0)))
    assert bwd / fwd == Q8 ** 2
    assert transfer.markov_gate(h, "continuous")["pass"]
    # capacity two: negative off-diagonal under either sign, zero column sums
    for sign in (1, -1):
        rep = transfer.markov_gate(transfer.h_from_S(2, Q8, 1, sign),
                                   "continuous")
        assert rep["negativity"] and not rep["column_sums"]


# ---------------------------------------------------------------------------
# 9. transfer matrices commute within each family; mixed Markov gates
# ---------------------------------------------------------------------------

def test_09_transfer_commutativity_and_gates():
    mus = (mpq(1, 3), mpq(1, 4), mpq(2, 7))
    spec = ChainSpec(2, mus, Q8)
    Ta = transfer.periodic_scriptT(mpq(3, 8), spec, (1, 1))
    Tb = transfer.periodic_scriptT(mpq(5, 9), spec, (1, 1))
    assert Ta.commutator(Tb).is_zero()

    spec2 = ChainSpec(2, mus[:2], Q8)
    Ma = transfer.mixed_scriptT(mpq(3, 8), spec2, (1, 1))
    Mb = transfer.mixed_scriptT(mpq(5, 9), spec2, (1, 1))
    assert Ma.commutator(Mb).is_zero()
    assert transfer.markov_gate(transfer.mixed_scriptT(mpq(1, 2), spec2,
                                                       (1, 1)),
                                "discrete")["pass"]

    caps = (2, 1, 2)
    specc = ChainSpec(1, (mpq(3, 7), mpq(5, 9), mpq(4, 11)), Q8, caps=caps)
    Ca = transfer.periodic_T(1, mpq(5, 13), specc, (2, 3))
    Cb = transfer.periodic_T(2, mpq(7, 10), specc, (2, 3))
    assert Ca.commutator(Cb).is_zero()

    capm = (2, 1)
    specm = ChainSpec(1, (mpq(3, 7), mpq(5, 9)), Q8, caps=capm)
    Na = transfer.mixed_T(0, 1, mpq(3, 8), specm)
    Nb = transfer.mixed_T(0, 1, mpq(2, 9), specm)
    assert Na.commutator(Nb).is_zero()
    specg = ChainSpec(1, tuple(Q8 ** m for m in capm), Q8, caps=capm)
    assert transfer.markov_gate(transfer.mixed_T(0, 1, Q8, specg),
                                "discrete")["pass"]


# ---------------------------------------------------------------------------
# 10. quantum-group relations and intertwining property
# ---------------------------------------------------------------------------

def test_10_relations_and_intertwiners():
    q = mpq(2, 7)
    for eps in ((0, 0, 0), (1, 1, 0), (1, 1, 1)):
        for l in (1, 2):
            ctx = uqa.RepContext(eps, l, mpq(3, 5), q)
            assert uqa.check_relations(ctx)["pass"], (eps, l)
    for eps in ((0, 0, 0), (1, 0, 0), (1, 1, 0), (1, 1, 1)):
        for l, m in ((1, 1), (1, 2), (2, 2)):
            x, y = mpq(3, 5), mpq(5, 11)
            R = tetra.build_R(eps, l, m, x / y, q)
            rep = uqa.check_intertwiner(R, uqa.RepContext(eps, l, x, q),
                                        uqa.RepContext(eps, m, y, q))
            assert rep["pass"], rep


# ---------------------------------------------------------------------------
# 11. Zamolodchikov-Faddeev exchange algebra and the recursion cross-oracle
# ---------------------------------------------------------------------------

def test_11_zf_exchange_two_species():
    rng = random.Random(11)
    for _ in range(3):
        q, (mu, lam) = rand_regime(rng, 2)
        if mu > lam:
            lam, mu = mu, lam
        rep = mpf.zf_check(2, lam, mu, q, 10, 2)
        assert rep["pass"], rep


def test_11_zf_exchange_three_species():
    rng = random.Random(13)
    for _ in range(3):
        q, (mu, lam) = rand_regime(rng, 2)
        if mu > lam:
            lam, mu = mu, lam
        rep = mpf.zf_check(3, lam, mu, q, 6, 2)
        assert rep["pass"], rep


def test_11_recursive_equals_closed():
    z, q = mpq(2, 7), mpq(1, 3)
    for n, N in ((2, 8), (3, 5)):
        alg = FockAlgebra(n * (n - 1) // 2, N, q)
        margin = mpf.protected_margin(alg)
        win = set(alg.window(margin))
        for alpha in enumerate_multi_upto(n, (2,) * n):
            if sum(alpha) > 2:
                continue
            A = Z_recursive(alpha, z, alg)
            B = Z_closed(alpha, z, alg)
            for inp in win:
                ca, cb = A.column(inp), B.column(inp)
                assert all(ca.get(o, 0) == cb.get(o, 0)
                           for o in set(ca) | set(cb) if o in win), alpha


# ---------------------------------------------------------------------------
# 12. seeded Gillespie histogram against the exact stationary state
# ---------------------------------------------------------------------------

def test_12_gillespie_total_variation():
    q, mu = mpq(2, 5), mpq(1, 3)
    p = HamiltonianParams(2, q, mu, 1)
    spec = ChainSpec(2, (mu, mu), q)
    exact = stationary.stationary_state(spec, (1, 1))
    hist = dyn.gillespie_histogram([(1, 0), (0, 1)], p, 10 ** 6,
                                   dyn.RngStream(2024))
    assert dyn.total_variation(hist, exact) < 0.02


# ---------------------------------------------------------------------------
# 13. normalization: exact permutation symmetry and polynomiality evidence
# ---------------------------------------------------------------------------

def test_13_normalization_symmetry_and_polynomiality():
    q = mpq(1, 3)
    mus = (mpq(1, 5), mpq(1, 7), mpq(2, 9))
    g = mpf.G_k((1, 1), mus, q, 16)
    assert g == mpf.G_k((1, 1), (mus[1], mus[2], mus[0]), q, 16)
    assert g == mpf.G_k((1, 1), (mus[2], mus[1], mus[0]), q, 16)
    # on two sites a cubic interpolation in 1/mu_1 through four points
    # predicts a fifth sample exactly
    pts = [mpq(1, j) for j in (5, 6, 7, 8, 9)]
    vals = [mpf.G_k((1, 1), (m, mus[1]), q, 20) for m in pts]
    xs = [1 / m for m in pts[:4]]
    x, pred = 1 / pts[-1], mpq(0)
    for i, xi in enumerate(xs):
        li = mpq(1)
        for j, xj in enumerate(xs):
            if i != j:
                li *= (x - xj) / (xi - xj)
        pred += vals[i] * li
    assert pred == vals[-1]
