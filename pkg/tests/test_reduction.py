"""
Packing polynomial construction and sampling tests.
"""
from fractions import Fraction

import pytest
from mpmath import mpf, pi

from sos.poly import degree_profile, group_degree, parse
from sos.reduction import (
    E_VARIABLES,
    L_VARIABLES,
    P_VARIABLES,
    build_L,
    build_L_decomposition,
    build_L_from_expanded_form,
    build_L_from_grouped_form,
    build_M,
    build_P,
    build_packing_polynomials,
    check_invariance_P,
    e_identity_sides,
    lemma1_condition,
    lemma2_sides,
    lemma3_sides,
    packing_certificate,
    sample_decomposition,
    sample_lemma2,
    sample_nonnegativity,
    sample_theorem1,
    theorem1_sides,
    verify_E_identity,
)
from sos.verify import verify_identity


def test_L_transcriptions_agree():
    """Test the grouped and expanded forms of L are equal."""
    assert build_L_from_grouped_form() == build_L_from_expanded_form()
    assert build_L().variables == L_VARIABLES


def test_M_is_an_involution():
    """Test swapping (alpha, beta) with (gamma, delta) twice gives L back."""
    l_poly = build_L()
    m_poly = build_M(l_poly)
    assert m_poly != l_poly
    assert build_M(m_poly) == l_poly


def test_L_vanishes_on_diagonal():
    """Test L at alpha = beta, gamma = delta = 0."""
    point = {"alpha": Fraction(1, 3), "beta": Fraction(1, 3), "gamma": 0, "delta": 0}
    assert build_L().evaluate(point) == 0


def test_L_decomposition_sums_to_L():
    """Test L = L1 + L2 + L3."""
    l1, l2, l3 = build_L_decomposition()
    assert l1 + l2 + l3 == build_L()


def test_lemma1_condition():
    """Test the two worked choices of f."""
    assert abs(lemma1_condition("sine", mpf("0.7"))) < 1e-12
    assert abs(lemma1_condition("sine", pi / 3)) < 1e-12
    assert lemma1_condition("reciprocal", 2) == mpf(-5) / 32
    with pytest.raises(ValueError):
        lemma1_condition("cosine", 1)


def test_inequality_sides_at_a_point():
    """Test the left sides do not exceed the right sides at one point."""
    args = [mpf(v) for v in ("0.5", "2", "1.5", "0.25", "3", "0.75")]
    lhs, rhs = theorem1_sides(*args)
    assert lhs <= rhs
    lhs, rhs = lemma2_sides(*args)
    assert lhs <= rhs


def test_sampling_inequalities():
    """Test sampled slack is nonnegative and the report is reproducible."""
    first = sample_theorem1(200, seed=3)
    assert first.passed
    assert first.count == 200
    assert len(first.worst) == 6
    assert sample_theorem1(200, seed=3).min_slack == first.min_slack
    assert sample_lemma2(200, seed=3).passed


def test_sampling_zero_count():
    """Test a zero count skips sampling."""
    report = sample_theorem1(0, seed=1)
    assert report.min_slack is None
    assert report.passed
    assert sample_decomposition(0, seed=1).count == 0


def test_sampling_decomposition():
    """Test L1, L2, L3 stay nonnegative on the cube and the region."""
    assert sample_decomposition(500, seed=5, region="cube").passed
    assert sample_decomposition(500, seed=5, region="region").passed
    with pytest.raises(ValueError):
        sample_decomposition(10, seed=5, region="sphere")


def test_invariance_check_fails_on_asymmetric_polynomial():
    """Test the swap and sign check on a polynomial without them."""
    result = check_invariance_P(parse("x^2 + y", P_VARIABLES))
    assert not result.passed
    assert not result.detail["swap"]
    assert result.detail["failing_signs"]


@pytest.mark.slow
def test_E_identity():
    """Test the six-variable factorization identity."""
    result = verify_E_identity(points=5)
    assert result.passed


@pytest.mark.slow
def test_lemma3_difference_matches_E():
    """Test the rational difference times its denominator equals E*D."""
    point = {
        "R": Fraction(2), "S": Fraction(3, 2),
        "alpha": Fraction(1, 2), "beta": Fraction(1, 3),
        "gamma": Fraction(1, 4), "delta": Fraction(2, 5),
    }
    lhs, rhs = lemma3_sides(point)
    e_lhs, e_rhs = e_identity_sides()
    assert e_lhs.evaluate(point) == e_rhs.evaluate(point)
    denominators = [
        parse(text, E_VARIABLES).evaluate(point)
        for text in (
            "(1 - gamma^2)*R + (1 - alpha^2)*S",
            "(1 - delta^2)*R + (1 - beta^2)*S",
            "(R*(1 - gamma*delta) + S*(1 - alpha*beta))^2",
        )
    ]
    product = denominators[0] * denominators[1] * denominators[2]
    assert (lhs - rhs) * product == e_lhs.evaluate(point)


@pytest.mark.slow
def test_P_statistics():
    """Test the size, degrees and symmetries of P."""
    p_poly = build_P()
    assert len(p_poly) == 123
    assert degree_profile(p_poly).total == 20
    assert group_degree(p_poly, ("x", "y")) == 12
    assert group_degree(p_poly, ("z", "w")) == 8
    assert check_invariance_P(p_poly).passed


@pytest.mark.slow
def test_packing_certificate():
    """Test P = A^2 (z^2 + w^2 + 2 z^2 w^2) + B^2 + C^2 exactly."""
    p_poly = build_P()
    report = verify_identity(p_poly, packing_certificate(p_poly))
    assert report.verified
    assert report.square_count == 3
    assert report.plain_square_count == 5


@pytest.mark.slow
def test_packing_polynomials_checks():
    """Test the identities tying L, M, P and the squares together."""
    polys = build_packing_polynomials()
    assert [check.name for check in polys.checks()] == [
        "m_is_swap_of_l", "l_decomposition", "p_certificate"
    ]
    assert all(check.passed for check in polys.checks())


@pytest.mark.slow
def test_P_nonnegative_at_samples():
    """Test sampled values of P are nonnegative up to rounding."""
    assert sample_nonnegativity(build_P(), 2000, seed=9).passed
