"""
Monomial basis and Gram constraint tests.
"""
import random
from fractions import Fraction
from itertools import product

import pytest

from core.exceptions import InfeasibleBasis, NotSOSCandidate
from sos.gram import MonomialBasis, build_gram_problem, candidate_basis, dense_basis
from sos.poly import Polynomial, parse
from utils.exact_lp import in_convex_hull, is_feasible

XY = ("x", "y")
QUARTIC = "2*x^4 + 2*x^3*y - x^2*y^2 + 5*y^4"
MOTZKIN = "x^4*y^2 + x^2*y^4 - 3*x^2*y^2 + 1"


def test_candidate_basis_quartic():
    """Test the half-polytope basis of the quartic in canonical order."""
    basis = candidate_basis(parse(QUARTIC, XY))
    assert basis.monomials == ((2, 0), (1, 1), (0, 2))
    assert basis.index_of((1, 1)) == 1
    assert (0, 2) in basis


def test_candidate_basis_motzkin():
    """Test the Newton polytope keeps 1, x*y, x^2*y and x*y^2 for Motzkin."""
    basis = candidate_basis(parse(MOTZKIN, XY))
    assert set(basis) == {(0, 0), (1, 1), (2, 1), (1, 2)}


def test_dense_basis():
    """Test the dense basis holds every monomial up to half degree."""
    assert len(dense_basis(parse(QUARTIC, XY))) == 6


def test_basis_rejects_odd_degree():
    """Test odd total or per-variable degree raises NotSOSCandidate."""
    with pytest.raises(NotSOSCandidate):
        candidate_basis(parse("x^3 + 1", XY))
    with pytest.raises(NotSOSCandidate) as info:
        candidate_basis(parse("x^4 + x*y^3", XY))
    assert info.value.exit_code == 4
    assert info.value.details["variables"] == ["y"]


def test_zero_polynomial_basis():
    """Test the zero polynomial has an empty basis."""
    assert len(candidate_basis(parse("0", XY))) == 0


def test_gram_constraints_quartic():
    """Test one constraint per product monomial with weights 1 and 2."""
    problem = build_gram_problem(parse(QUARTIC, XY), candidate_basis(parse(QUARTIC, XY)))
    assert problem.size == 3
    assert problem.constraint_count == 5
    middle = problem.constraint_for((2, 2))
    assert middle.entries == ((0, 2, 2), (1, 1, 1))
    assert middle.rhs == -1
    assert problem.constraint_for((1, 3)).rhs == 0
    assert [c.monomial for c in problem.constraints] == [
        (4, 0), (3, 1), (2, 2), (1, 3), (0, 4)
    ]


def test_gram_expand_and_residuals():
    """Test u^T Q u reproduces the target for a feasible Q."""
    target = parse(QUARTIC, XY)
    problem = build_gram_problem(target, candidate_basis(target))
    Q = [[2, 1, -3], [1, 5, 0], [-3, 0, 5]]
    assert problem.expand(Q) == target
    assert problem.residuals(Q) == [Fraction(0)] * 5
    assert "# constraints (5)" in problem.to_text()


def test_gram_infeasible_basis():
    """Test a basis that cannot reach the support."""
    target = parse(QUARTIC, XY)
    with pytest.raises(InfeasibleBasis):
        build_gram_problem(target, MonomialBasis(((2, 0), (0, 2)), 2))
    with pytest.raises(InfeasibleBasis):
        build_gram_problem(target, MonomialBasis((), 2))


def test_convex_hull_membership():
    """Test exact hull membership on a triangle."""
    triangle = [(0, 0), (4, 2), (2, 4)]
    assert in_convex_hull((2, 2), triangle)
    assert in_convex_hull((3, 3), triangle)
    assert not in_convex_hull((2, 0), triangle)
    assert not in_convex_hull((1, 3), [(0, 0), (4, 4)])


def test_is_feasible():
    """Test the exact feasibility check."""
    one = Fraction(1)
    assert is_feasible([[one, one]], [one])
    assert not is_feasible([[one, one]], [-one])
    assert is_feasible([], [])
    two = Fraction(2)
    assert is_feasible([[one, -one], [one, one]], [one / 2, two])
    assert not is_feasible([[one, 0], [0, one], [one, one]], [one, one, one])


@pytest.mark.slow
def test_packing_polynomial_basis():
    """Test the sparse basis and constraint count of the packing polynomial."""
    from sos.reduction import build_P

    p_poly = build_P()
    basis = candidate_basis(p_poly)
    assert len(basis) == 137
    assert build_gram_problem(p_poly, basis).constraint_count == 1329


def test_candidate_basis_keeps_used_monomials():
    """Test pruning never drops a monomial of a known decomposition."""
    rng = random.Random(29)
    names = ("x", "y", "z")
    for case in range(200):
        variables = names[: rng.randint(1, 3)]
        monomials = [e for e in product(range(4), repeat=len(variables)) if sum(e) <= 3]
        used = set()
        target = Polynomial.zero(variables)
        for _ in range(rng.randint(1, 3)):
            chosen = rng.sample(monomials, rng.randint(1, 4))
            q = Polynomial(variables, {e: rng.choice([-2, -1, 1, 2]) for e in chosen})
            used |= set(q.support)
            target = target + q * q
        basis = candidate_basis(target)
        assert used <= set(basis), case
        assert set(basis) <= set(dense_basis(target)), case
