"""
Rounding, exact PSD decision and square extraction tests.
"""
import random
from fractions import Fraction

import numpy as np
import pytest

from core.config import settings
from core.exceptions import CertificateError, RetryWithLargerDenominator
from sos.gram import build_gram_problem, candidate_basis
from sos.poly import parse
from sos.rationalize import (
    RationalMatrix,
    extract_sos,
    is_psd_exact,
    normalize_square,
    reduce_face,
    round_and_project,
)
from sos.symmetry import trivial_blocking

XY = ("x", "y")
QUARTIC = "2*x^4 + 2*x^3*y - x^2*y^2 + 5*y^4"
# Gram matrix of QUARTIC over [x^2, x*y, y^2]
GRAM = ((2, 1, -3), (1, 5, 0), (-3, 0, 5))


def quartic_problem():
    target = parse(QUARTIC, XY)
    return build_gram_problem(target, candidate_basis(target))


def test_rational_matrix_validation():
    """Test non-square and non-symmetric input is rejected."""
    with pytest.raises(ValueError):
        RationalMatrix(((1, 2),))
    with pytest.raises(ValueError):
        RationalMatrix(((1, 2), (3, 1)))
    assert RationalMatrix.zeros(3).dimension == 3


def test_is_psd_exact_pivots():
    """Test the LDL^T pivots of the quartic Gram matrix."""
    result = is_psd_exact(RationalMatrix(GRAM))
    assert result.is_psd
    assert result.pivots == [Fraction(5), Fraction(5)]
    assert result.rank == 2
    assert [p for p, _, _ in result.steps] == [1, 2]


def test_is_psd_exact_negative_witness():
    """Test an indefinite matrix gives a witness with negative value."""
    Q = RationalMatrix(((1, 2), (2, 1)))
    result = is_psd_exact(Q)
    assert not result
    assert result.witness == [Fraction(-2), Fraction(1)]
    assert Q.quadratic_form(result.witness) == -3


def test_is_psd_exact_zero_diagonal_witness():
    """Test a zero diagonal facing a nonzero off-diagonal entry."""
    Q = RationalMatrix(((0, 1), (1, 0)))
    result = is_psd_exact(Q)
    assert not result
    assert Q.quadratic_form(result.witness) == -2


def test_is_psd_exact_hidden_negative_diagonal():
    """Test a negative diagonal is found when the largest diagonal is zero."""
    Q = RationalMatrix(((0, 0), (0, -1)))
    result = is_psd_exact(Q)
    assert not result
    assert Q.quadratic_form(result.witness) < 0


def test_is_psd_exact_zero_matrix():
    """Test the zero matrix is PSD with rank zero."""
    result = is_psd_exact(RationalMatrix.zeros(4))
    assert result.is_psd
    assert result.rank == 0


def test_normalize_square():
    """Test roots become primitive integer polynomials with a positive lead."""
    c, root = normalize_square(Fraction(5), parse("-3/5*x^2 + y^2", XY))
    assert root == parse("3*x^2 - 5*y^2", XY)
    assert c == Fraction(1, 5)


def test_round_and_project_recovers_exact_matrix():
    """Test a slightly perturbed Gram matrix rounds back exactly."""
    problem = quartic_problem()
    noisy = np.array(GRAM, dtype=float) + 1e-9 * np.array(
        [[1, -1, 2], [-1, 3, 0], [2, 0, -2]]
    )
    Q = round_and_project(noisy, problem, 2**20)
    assert Q == RationalMatrix(GRAM)


def test_round_and_project_projects_onto_constraints():
    """Test the projected matrix satisfies every constraint exactly."""
    problem = quartic_problem()
    moved = np.array(GRAM, dtype=float)
    moved[1, 1] += 0.3
    with pytest.raises(RetryWithLargerDenominator):
        round_and_project(moved, problem, 2**20)
    Q = round_and_project(
        moved, problem, 2**20, settings.with_overrides(projection_max_shift=1.0)
    )
    assert not any(problem.residuals(Q.rows))


def test_extract_sos_quartic():
    """Test the squares read off the quartic Gram matrix."""
    problem = quartic_problem()
    cert = extract_sos(RationalMatrix(GRAM), problem.basis, problem.target)
    assert cert.square_count == 2
    assert cert.expand() == problem.target
    roots = {term.square_root.serialize(): term.coefficient for term in cert.terms}
    assert roots == {
        "x^2 + 5*x*y": Fraction(1, 5),
        "3*x^2 - 5*y^2": Fraction(1, 5),
    }


def test_extract_sos_rejects_wrong_matrix():
    """Test a PSD matrix that misses the target is refused."""
    problem = quartic_problem()
    identity = tuple(tuple(1 if i == j else 0 for j in range(3)) for i in range(3))
    with pytest.raises(CertificateError):
        extract_sos(RationalMatrix(identity), problem.basis, problem.target)


def test_extract_sos_rejects_indefinite_matrix():
    """Test an indefinite Gram matrix is refused."""
    problem = quartic_problem()
    indefinite = RationalMatrix(((1, 0, 0), (0, -1, 0), (0, 0, 1)))
    with pytest.raises(CertificateError):
        extract_sos(indefinite, problem.basis, problem.target)


def test_reduce_face_removes_kernel():
    """Test a rank-one block is restricted to its range."""
    blocking = trivial_blocking(quartic_problem())
    v = np.array([1.0, 1.0, 0.0])
    reduced, removed = reduce_face(blocking, [np.outer(v, v)])
    assert removed == 2
    assert reduced.blocks[0].dimension == 1
    assert reduced.blocks[0].copies[0][0] == ((0, Fraction(1)), (1, Fraction(1)))


def test_reduce_face_leaves_definite_block():
    """Test a positive definite block is kept as is."""
    blocking = trivial_blocking(quartic_problem())
    reduced, removed = reduce_face(blocking, [np.eye(3)])
    assert removed == 0
    assert reduced.blocks == blocking.blocks


def test_is_psd_exact_agrees_with_eigenvalues():
    """Test the exact decision against float eigenvalues on random matrices."""
    rng = random.Random(23)
    for case in range(1000):
        n = rng.randint(1, 5)
        B = np.array([[rng.randint(-3, 3) for _ in range(n)] for _ in range(rng.randint(1, n))])
        shift = Fraction(rng.randint(-4, 2), rng.choice([1, 2, 3]))
        rows = [
            [Fraction(int(v)) + (shift if i == j else 0) for j, v in enumerate(row)]
            for i, row in enumerate(B.T @ B)
        ]
        result = is_psd_exact(RationalMatrix(rows))
        smallest = np.linalg.eigvalsh(np.array(rows, dtype=float)).min()
        if result:
            assert smallest > -1e-9, case
            assert result.witness is None
        else:
            assert smallest < 1e-9, case
            assert RationalMatrix(rows).quadratic_form(result.witness) < 0, case
