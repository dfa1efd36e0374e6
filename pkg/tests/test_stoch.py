import random

import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from zrplab import stoch, tetra
from zrplab.qkit import add_idx, enumerate_Bl, phi_exp, sub_idx

Q = mpq(1, 3)


# ---------------------------------------------------------------------------
# the basic vertex weight
# ---------------------------------------------------------------------------

def test_phi_weight_support_and_poles():
    assert stoch.phi_weight((2, 0), (1, 3), Q, mpq(1, 2), mpq(1, 4)) == 0
    with pytest.raises(ValueError):
        stoch.phi_weight((0, 0), (1, 1), Q, mpq(1, 2), 1)  # (mu; q)_2 = 0 at mu=1
    with pytest.raises(ValueError):
        stoch.phi_weight((0,), (1, 1), Q, mpq(1, 2), mpq(1, 4))


def test_phi_weight_degenerations():
    mu = mpq(1, 4)
    for beta in enumerate_Bl(1, 3):
        for gamma in enumerate_Bl(1, 3) + enumerate_Bl(1, 1):
            if len(gamma) != len(beta):
                continue
            # lam = 1 concentrates on gamma = 0
            v1 = stoch.phi_weight(gamma, beta, Q, 1, mu)
            assert v1 == (1 if sum(gamma) == 0 else 0)
            # lam = mu concentrates on gamma = beta
            v2 = stoch.phi_weight(gamma, beta, Q, mu, mu)
            assert v2 == (1 if gamma == beta else 0)


def test_phi_weight_normalization():
    # total weight over admissible gamma is exactly 1
    lam, mu = mpq(2, 3), mpq(1, 5)
    for beta in enumerate_Bl(2, 3):
        tot = sum(stoch.phi_weight(g, beta, Q, lam, mu)
                  for g in stoch._down_set(beta))
        assert tot == 1


# ---------------------------------------------------------------------------
# stochasticity
# ---------------------------------------------------------------------------

def test_sum_to_unity_parameter_family():
    op = stoch.script_S(mpq(2, 3), mpq(1, 3), Q, 2, (2, 1))
    rep = stoch.verify_stu(op)
    assert rep["pass"], rep


def test_sum_to_unity_gauged_family():
    # columns of the gauged difference family sum to 1 identically in z
    for z in (mpq(3, 7), mpq(9, 2)):
        rep = stoch.verify_stu(stoch.s_gauge(2, 2, z, Q, 1))
        assert rep["pass"], rep


def test_restricted_family_loses_mass_by_known_deficit():
    # with a hard-core slot, the column of a doubly occupied input sums to
    # less than one; the missing mass is (lam - mu) / (lam (1 - mu))
    lam, mu = mpq(2, 3), mpq(1, 3)
    op = stoch.script_S_eps((1,), lam, mu, Q, (2,))
    rep = stoch.verify_stu(op)
    assert not rep["pass"]
    deficit = (lam - mu) / (lam * (1 - mu))
    assert op.column_sum(((1,), (1,))) == 1 - deficit
    # columns of singly occupied blocks still sum to one
    op1 = stoch.script_S_eps((1,), lam, mu, Q, (1,))
    assert stoch.verify_stu(op1)["pass"]


# ---------------------------------------------------------------------------
# dependence on both parameters, not only their ratio
# ---------------------------------------------------------------------------

def test_parameter_family_is_not_a_difference_family():
    lam, mu, c = mpq(1, 2), mpq(1, 5), mpq(3, 2)
    a = stoch.script_S(lam, mu, Q, 1, (1, 1))
    b = stoch.script_S(c * lam, c * mu, Q, 1, (1, 1))
    assert a != b


# ---------------------------------------------------------------------------
# factorization at the special spectral point
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2])
def test_gauged_family_factorizes(n):
    for l in range(1, 4):
        for m in range(l, 4):
            S = stoch.s_gauge(l, m, Q ** (l - m), Q, n)
            assert S == stoch.factorized_S(l, m, Q, n)


def test_factorized_special_point_all_shapes():
    # all step sign sequences of length <= 3, l <= m <= 3
    for np1 in (2, 3):
        for kappa in range(np1 + 1):
            eps = (1,) * kappa + (0,) * (np1 - kappa)
            top = min(3, kappa) if kappa == np1 else 3
            for l in range(1, top + 1):
                for m in range(l, top + 1):
                    F = stoch.factorized_R_eps(eps, l, m, Q)
                    R = tetra.build_R(eps, l, m, Q ** (l - m), Q)
                    assert R == F, (eps, l, m)


def test_factorized_rejects_bad_shapes():
    with pytest.raises(ValueError):
        stoch.factorized_R_eps((0, 1), 1, 1, Q)
    with pytest.raises(ValueError):
        stoch.factorized_R_eps((1, 0), 2, 1, Q)


# ---------------------------------------------------------------------------
# exponent difference identities behind the factorized form
# ---------------------------------------------------------------------------

def _psi(alpha, beta, gamma):
    bg = sub_idx(beta, gamma)
    return phi_exp(alpha, bg) + phi_exp(bg, gamma)


def _hat(i, np1):
    v = [0] * np1
    v[(i - 1) % np1] += 1
    v[i % np1] -= 1
    return tuple(v)


@settings(max_examples=80)
@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 2),
       st.randoms(use_true_random=False))
def test_exponent_difference_identities(l, m, i, rnd):
    np1 = 3

    def comp(w):
        cuts = sorted(rnd.randint(0, w) for _ in range(np1 - 1))
        return tuple(b - a for a, b in zip((0,) + tuple(cuts), tuple(cuts) + (w,)))

    alpha, gamma, beta = comp(l), comp(l), comp(m)
    h = _hat(i, np1)
    gi, gi1 = (i - 1) % np1, i % np1
    d0 = l - m if i == 0 else 0
    base = _psi(alpha, beta, gamma)
    assert (_psi(alpha, beta, sub_idx(gamma, h)) - base
            == gamma[gi1] - alpha[gi] + beta[gi] - gamma[gi] + 1 + d0)
    assert _psi(add_idx(alpha, h), beta, gamma) - base == beta[gi1] - gamma[gi1] + d0
    assert _psi(alpha, add_idx(beta, h), gamma) - base == gamma[gi1] - alpha[gi]


# ---------------------------------------------------------------------------
# Yang-Baxter across the three families
# ---------------------------------------------------------------------------

def test_ybe_gauged_difference_family():
    rep = stoch.verify_ybe("S", 1, sizes=(1, 2, 2), trials=3)
    assert rep["pass"], rep
    assert len(rep["params"]) == 3


def test_ybe_parameter_family():
    rep = stoch.verify_ybe("sS", 2, max_weight=(1, 1), trials=3)
    assert rep["pass"], rep


def test_ybe_parameter_family_restricted():
    rep = stoch.verify_ybe("sS", 2, max_weight=(1, 1), eps=(1, 0), trials=2)
    assert rep["pass"], rep


@pytest.mark.parametrize("eps", [(0, 0), (1, 0), (1, 1, 0)])
def test_ybe_trace_built_family(eps):
    rep = stoch.verify_ybe("Reps", len(eps) - 1, sizes=(1, 1, 2), eps=eps, trials=2)
    assert rep["pass"], rep


def test_ybe_unknown_family_rejected():
    with pytest.raises(ValueError):
        stoch.verify_ybe("bogus", 1)


# ---------------------------------------------------------------------------
# exploratory probes
# ---------------------------------------------------------------------------

def test_inversion_probe_reports_identity_on_small_block():
    rep = stoch.inversion_probe(mpq(2, 3), mpq(1, 5), mpq(1, 4), (1, 1))
    assert rep["identity"]
