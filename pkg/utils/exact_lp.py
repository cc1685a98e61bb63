"""
Exact linear feasibility over the rationals.

Used to decide Newton-polytope membership without floating-point
boundary errors.
"""

from fractions import Fraction
from typing import Sequence

from sympy import Rational
from sympy.solvers.simplex import InfeasibleLPError, linprog


def _q(value) -> Rational:
    value = Fraction(value)
    return Rational(value.numerator, value.denominator)


def is_feasible(A: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> bool:
    """
    Decide whether {x >= 0 : A x = b} is nonempty.

    Solved as a zero-objective LP with sympy's rational simplex.
    """
    if not A:
        return True
    cols = len(A[0])
    if cols == 0:
        return all(v == 0 for v in b)
    A_eq = [[_q(a) for a in row] for row in A]
    b_eq = [_q(v) for v in b]
    try:
        # linprog needs an inequality block; 0 <= 0 is always satisfied
        _, x = linprog([0] * cols, A=[[0] * cols], b=[0], A_eq=A_eq, b_eq=b_eq)
    except InfeasibleLPError:
        return False
    return all(v >= 0 for v in x) and all(
        sum(a * v for a, v in zip(row, x)) == rhs for row, rhs in zip(A_eq, b_eq)
    )


def in_convex_hull(point: Sequence[int], points: Sequence[Sequence[int]]) -> bool:
    """
    Exact test of ``point`` against the convex hull of ``points``.

    Args:
        point: integer (or rational) coordinates.
        points: hull generators, all of the same length as ``point``.

    Returns:
        True iff ``point`` is a convex combination of ``points``.
    """
    if not points:
        return False
    point = tuple(point)
    if point in {tuple(p) for p in points}:
        return True
    n = len(point)
    for i in range(n):
        coords = [p[i] for p in points]
        if point[i] < min(coords) or point[i] > max(coords):
            return False
    A = [[p[i] for p in points] for i in range(n)]
    A.append([1] * len(points))
    b = list(point) + [1]
    return is_feasible(A, b)
