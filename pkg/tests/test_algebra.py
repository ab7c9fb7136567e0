"""Exact algebra layer: wedge, Clifford actions, supertrace, Berezin."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torsionlab import algebra as al


# ---------------------------------------------------------------------------
# independent oracles
# ---------------------------------------------------------------------------

def brute_force_wedge_sign(letters):
    """Sign of sorting a letter sequence (family, index) into canonical order.

    Counts inversions of the concatenation directly; duplicates give zero.
    Families: 0 = plain, 1 = hatted; canonical order is plain block before
    hatted block, each ascending.
    """
    if len(set(letters)) != len(letters):
        return 0
    sign = 1
    seq = list(letters)
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def monomial_letters(plain, hatted):
    return [(0, i) for i in plain] + [(1, j) for j in hatted]


@st.composite
def bigraded_elements(draw, n=3, max_terms=3, start=1):
    terms = {}
    idx = list(range(start, start + n))
    for _ in range(draw(st.integers(0, max_terms))):
        p = tuple(sorted(draw(st.sets(st.sampled_from(idx), max_size=n))))
        h = tuple(sorted(draw(st.sets(st.sampled_from(idx), max_size=n))))
        coeff = Fraction(draw(st.integers(-6, 6)), draw(st.integers(1, 4)))
        if coeff:
            terms[(p, h)] = terms.get((p, h), Fraction(0)) + coeff
    return al.BiGradedElement(n, {k: v for k, v in terms.items() if v}, start=start)


# ---------------------------------------------------------------------------
# wedge
# ---------------------------------------------------------------------------

def test_wedge_repeated_generator_vanishes():
    e1 = al.BiGradedElement.generator(3, 1)
    assert al.wedge(e1, e1).is_zero()


def test_wedge_antisymmetry():
    e1 = al.BiGradedElement.generator(3, 1)
    e2 = al.BiGradedElement.generator(3, 2)
    assert al.wedge(e1, e2) == al.wedge(e2, e1).scale(Fraction(-1))


def test_wedge_against_permutation_sign_oracle():
    n = 4
    cases = [
        (((1,), (2,)), ((3,), (4,))),
        (((1, 3), ()), ((2,), (1, 4))),
        (((2,), (1, 3)), ((1, 4), (2,))),
        (((), (1, 2)), ((1, 2), ())),
    ]
    for (p1, h1), (p2, h2) in cases:
        a = al.BiGradedElement.monomial(n, p1, h1, 1)
        b = al.BiGradedElement.monomial(n, p2, h2, 1)
        out = al.wedge(a, b)
        letters = monomial_letters(p1, h1) + monomial_letters(p2, h2)
        sign = brute_force_wedge_sign(letters)
        if sign == 0:
            assert out.is_zero()
        else:
            merged_p = tuple(sorted(p1 + p2))
            merged_h = tuple(sorted(h1 + h2))
            assert out == al.BiGradedElement.monomial(n, merged_p, merged_h, sign)


@settings(max_examples=40, deadline=None)
@given(bigraded_elements(), bigraded_elements(), bigraded_elements())
def test_wedge_associative_distributive(a, b, c):
    assert al.wedge(al.wedge(a, b), c) == al.wedge(a, al.wedge(b, c))
    assert al.wedge(a, b + c) == al.wedge(a, b) + al.wedge(a, c)


@settings(max_examples=40, deadline=None)
@given(bigraded_elements(), bigraded_elements())
def test_wedge_graded_commutativity(a, b):
    # check homogeneous pieces: ab = (-1)^{|a||b|} ba
    for (pa, ha) in list(a.terms):
        for (pb, hb) in list(b.terms):
            am = al.BiGradedElement.monomial(3, pa, ha, a.terms[(pa, ha)])
            bm = al.BiGradedElement.monomial(3, pb, hb, b.terms[(pb, hb)])
            sign = (-1) ** ((len(pa) + len(ha)) * (len(pb) + len(hb)))
            assert al.wedge(am, bm) == al.wedge(bm, am).scale(Fraction(sign))


def test_wedge_dimension_and_mode_errors():
    a = al.BiGradedElement.generator(2, 1)
    b = al.BiGradedElement.generator(3, 1)
    with pytest.raises(al.DimensionMismatch):
        al.wedge(a, b)
    c = al.BiGradedElement.generator(2, 1, mode=al.FLOAT)
    with pytest.raises(al.ScalarModeMismatch):
        al.wedge(a, c)


# ---------------------------------------------------------------------------
# Clifford action and product
# ---------------------------------------------------------------------------

def test_clifford_apply_on_constant():
    one = al.ExteriorForm.one(3)
    c1 = al.CliffordElement.generator(3, 1)
    assert al.clifford_apply(c1, one) == al.ExteriorForm(3, {(1,): Fraction(1)})


def test_clifford_squares():
    n = 3
    omega = al.ExteriorForm(n, {(1,): Fraction(2), (2, 3): Fraction(-1), (): Fraction(1)})
    c1c1 = al.clifford_product(al.CliffordElement.generator(n, 1),
                               al.CliffordElement.generator(n, 1))
    assert al.clifford_apply(c1c1, omega) == omega.scale(Fraction(-1))
    h1h1 = al.clifford_product(al.CliffordElement.generator(n, 1, hatted=True),
                               al.CliffordElement.generator(n, 1, hatted=True))
    assert al.clifford_apply(h1h1, omega) == omega


def test_all_three_relations_up_to_n6():
    for n in (1, 2, 3, 6):
        for i in (1, n):
            for j in (1, n):
                ci = al.CliffordElement.generator(n, i)
                cj = al.CliffordElement.generator(n, j)
                hi = al.CliffordElement.generator(n, i, hatted=True)
                hj = al.CliffordElement.generator(n, j, hatted=True)
                delta = Fraction(1 if i == j else 0)
                assert (al.clifford_product(ci, cj) + al.clifford_product(cj, ci)
                        == al.CliffordElement.identity(n).scale(-2 * delta))
                assert (al.clifford_product(hi, hj) + al.clifford_product(hj, hi)
                        == al.CliffordElement.identity(n).scale(2 * delta))
                assert (al.clifford_product(ci, hj) + al.clifford_product(hj, ci)).is_zero()


def test_identity_times_word():
    w = al.CliffordElement.word(3, (1, 2), (3,), Fraction(5, 2))
    assert al.clifford_product(al.CliffordElement.identity(3), w) == w
    assert al.clifford_product(w, al.CliffordElement.identity(3)) == w


def _random_clifford(rng, n, terms=3):
    out = {}
    idx = list(range(1, n + 1))
    for _ in range(terms):
        p = tuple(sorted(rng.choice(idx, size=rng.integers(0, n + 1), replace=False)))
        h = tuple(sorted(rng.choice(idx, size=rng.integers(0, n + 1), replace=False)))
        out[(p, h)] = out.get((p, h), Fraction(0)) + Fraction(int(rng.integers(-5, 6)))
    return al.CliffordElement(n, {k: v for k, v in out.items() if v})


def test_clifford_product_matches_matrix_algebra_500_pairs():
    rng = np.random.default_rng(11)
    plan = [(1, 50), (2, 150), (3, 200), (4, 100)]
    for n, count in plan:
        for _ in range(count):
            a = _random_clifford(rng, n)
            b = _random_clifford(rng, n)
            ab = al.clifford_product(a, b)
            ma, _ = al.endomorphism_matrix(a)
            mb, _ = al.endomorphism_matrix(b)
            mab, _ = al.endomorphism_matrix(ab)
            dim = len(ma)
            prod = [[sum(ma[i][k] * mb[k][j] for k in range(dim))
                     for j in range(dim)] for i in range(dim)]
            assert prod == mab


# ---------------------------------------------------------------------------
# supertrace
# ---------------------------------------------------------------------------

def test_supertrace_full_monomial_values():
    for n in range(1, 7):
        w = al.CliffordElement.identity(n)
        for i in range(1, n + 1):
            w = al.clifford_product(w, al.CliffordElement.generator(n, i))
            w = al.clifford_product(w, al.CliffordElement.generator(n, i, hatted=True))
        assert al.supertrace(w) == Fraction((-2) ** n)


def test_supertrace_identity_vanishes():
    for n in (1, 2, 5):
        assert al.supertrace(al.CliffordElement.identity(n)) == 0


def test_supertrace_all_subwords_vanish_and_match_matrix():
    n = 3
    for p in al.form_basis(n):
        for h in al.form_basis(n):
            w = al.CliffordElement.word(n, p, h)
            st_rule = al.supertrace(w)
            assert st_rule == al.matrix_supertrace(w)
            if not (len(p) == n and len(h) == n):
                assert st_rule == 0


# ---------------------------------------------------------------------------
# symbol / quantize
# ---------------------------------------------------------------------------

def test_quantize_examples():
    b = al.BiGradedElement.monomial(3, (1,), (2,))
    assert al.quantize(b) == al.CliffordElement.word(3, (1,), (2,))
    # curvature-weight shape: coefficients transported verbatim
    b2 = al.BiGradedElement(3, {((1, 2), (1, 2)): Fraction(1, 8),
                                ((1, 3), (2, 3)): Fraction(-3, 8)})
    q = al.quantize(b2)
    assert q.coefficient((1, 2), (1, 2)) == Fraction(1, 8)
    assert q.coefficient((1, 3), (2, 3)) == Fraction(-3, 8)


@settings(max_examples=100, deadline=None)
@given(bigraded_elements(n=4))
def test_symbol_quantize_round_trip(x):
    assert al.symbol(al.quantize(x)) == x


def test_quantize_symbol_identity_on_words():
    w = al.CliffordElement.word(4, (1, 3), (2,), Fraction(7, 3))
    assert al.quantize(al.symbol(w)) == w


# ---------------------------------------------------------------------------
# Berezin integral and exponential
# ---------------------------------------------------------------------------

def test_berezin_low_hatted_degree_vanishes():
    a = al.BiGradedElement(3, {((1,), (1, 2)): Fraction(5)})
    assert al.berezin(a).is_zero()
    assert al.berezin_raw(a).is_zero()


def test_berezin_gauss_bonnet_sphere():
    # unit round 2-sphere: R_1212 = 1; integral of the density over the area 4pi is 2
    from torsionlab.tensors import CurvatureTensor

    curv = CurvatureTensor(2, mode=al.EXACT, start=1)
    curv.set_entry(1, 2, 1, 2, 1)
    density = al.berezin(al.nilpotent_exp(curv.curvature_weight().scale(Fraction(-1))))
    total = float(density.coefficient((1, 2))) * 4 * math.pi
    assert abs(total - 2.0) < 1e-14


def test_berezin_parity_rule():
    # any element whose hatted degree differs from n mod 2 integrates to zero
    n = 3
    for h_deg in (0, 1, 2):
        if h_deg % 2 == n % 2:
            continue
        subsets = [s for s in al.form_basis(n) if len(s) == h_deg]
        for h in subsets:
            a = al.BiGradedElement.monomial(n, (), h, Fraction(3))
            assert al.berezin(a).is_zero()


def test_berezin_normalization_values():
    assert al.berezin_normalization(2) == pytest.approx(-1 / math.pi)
    assert al.berezin_normalization(4) == pytest.approx(1 / math.pi ** 2)
    assert al.berezin_normalization(3, odd_sign=-1) == -al.berezin_normalization(3)


def test_nilpotent_exp_basics():
    n = 2
    zero = al.BiGradedElement.zero(n)
    assert al.nilpotent_exp(zero) == al.BiGradedElement.one(n)
    r = al.BiGradedElement.monomial(n, (1, 2), (1, 2), Fraction(2, 3))
    e_minus = al.nilpotent_exp(r.scale(Fraction(-1)))
    assert e_minus == al.BiGradedElement.one(n) - r
    assert al.wedge(e_minus, al.nilpotent_exp(r)) == al.BiGradedElement.one(n)


def test_nilpotent_exp_rejects_scalar_part():
    bad = al.BiGradedElement.one(2) + al.BiGradedElement.generator(2, 1)
    with pytest.raises(al.AlgebraError):
        al.nilpotent_exp(bad)


@settings(max_examples=30, deadline=None)
@given(st.integers(-5, 5), st.integers(1, 4))
def test_exp_inverse_for_degree22(num, den):
    r = al.BiGradedElement(3, {((1, 2), (1, 2)): Fraction(num, den),
                               ((1, 3), (1, 2)): Fraction(num, den + 1)})
    prod = al.wedge(al.nilpotent_exp(r), al.nilpotent_exp(r.scale(Fraction(-1))))
    assert prod == al.BiGradedElement.one(3)


# ---------------------------------------------------------------------------
# collar projections and contraction
# ---------------------------------------------------------------------------

def test_projections_are_complementary():
    n = 3
    for p in al.form_basis(n, 0):
        for h in al.form_basis(n, 0):
            v = al.BiGradedElement.monomial(n, p, h, 1, start=0)
            t = al.tangential_projection(v)
            m = al.normal_projection(v)
            assert t + m == v
            assert al.tangential_projection(t) == t
            assert al.normal_projection(m) == m
            assert al.tangential_projection(m).is_zero()
            expected = m if 0 in p else t
            assert expected == v


def test_contract_is_antiderivation():
    n = 3
    a = al.BiGradedElement.monomial(n, (0, 1), (2,), 1, start=0)
    b = al.BiGradedElement.monomial(n, (2,), (0,), 1, start=0)
    lhs = al.contract(al.wedge(a, b), 0)
    sign = Fraction((-1) ** a.max_total_degree())
    rhs = al.wedge(al.contract(a, 0), b) + al.wedge(a, al.contract(b, 0)).scale(sign)
    assert lhs == rhs


def test_quantized_idempotents_match_projections():
    # 1/2 (1 -+ c_0 ch_0) acting on forms realizes the two collar projections
    n = 2
    half = Fraction(1, 2)
    c0h0 = al.CliffordElement.word(n, (0,), (0,), 1, start=0)
    p_tan = al.CliffordElement.identity(n, start=0).scale(half) - c0h0.scale(half)
    p_nor = al.CliffordElement.identity(n, start=0).scale(half) + c0h0.scale(half)
    assert al.clifford_product(p_tan, p_tan) == p_tan
    assert al.clifford_product(p_nor, p_nor) == p_nor
    assert al.clifford_product(p_tan, p_nor).is_zero()
    for subset in al.form_basis(n, 0):
        omega = al.ExteriorForm(n, {subset: Fraction(1)}, start=0)
        tan = al.clifford_apply(p_tan, omega)
        assert tan == (omega if 0 not in subset else al.ExteriorForm.zero(n, start=0))
