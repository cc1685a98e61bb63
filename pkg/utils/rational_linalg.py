"""
Exact rational linear algebra helpers.

Matrix work goes through sympy's ``DomainMatrix`` over QQ, in its sparse
form where the input is sparse; row selection is done directly on
``Fraction`` dictionaries.
"""

import logging
from fractions import Fraction
from typing import Dict, List, Mapping, Sequence, Tuple

from sympy import QQ
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.exceptions import DMNonInvertibleMatrixError

from core.exceptions import InfeasibleBasis

logger = logging.getLogger(__name__)


def _qq(value) -> object:
    value = Fraction(value)
    return QQ(int(value.numerator), int(value.denominator))


def to_domain_matrix(rows: Sequence[Sequence[Fraction]], ncols: int) -> DomainMatrix:
    entries = [[_qq(v) for v in row] for row in rows]
    return DomainMatrix(entries, (len(rows), ncols), QQ)


def sparse_domain_matrix(
    rows: Sequence[Mapping[int, Fraction]], ncols: int
) -> DomainMatrix:
    entries = {
        r: {k: _qq(v) for k, v in row.items() if v} for r, row in enumerate(rows)
    }
    return DomainMatrix({r: row for r, row in entries.items() if row}, (len(rows), ncols), QQ)


def from_domain_matrix(matrix: DomainMatrix) -> List[List[Fraction]]:
    m = matrix.to_Matrix()
    return [
        [Fraction(int(m[i, j].p), int(m[i, j].q)) for j in range(m.cols)]
        for i in range(m.rows)
    ]


def rref(
    rows: Sequence[Sequence[Fraction]], ncols: int
) -> Tuple[List[List[Fraction]], Tuple[int, ...]]:
    """Reduced row echelon form and pivot columns."""
    if not rows:
        return [], ()
    reduced, pivots = to_domain_matrix(rows, ncols).rref()
    return from_domain_matrix(reduced)[: len(pivots)], tuple(pivots)


def nullspace(rows: Sequence[Sequence[Fraction]], ncols: int) -> List[List[Fraction]]:
    """
    Basis of {v : M v = 0}, one vector per free column.

    Each vector has a 1 in its free column and is read off the RREF.
    """
    reduced, pivots = rref(rows, ncols)
    free = [j for j in range(ncols) if j not in pivots]
    basis = []
    for f in free:
        vector = [Fraction(0)] * ncols
        vector[f] = Fraction(1)
        for row, p in zip(reduced, pivots):
            vector[p] = -row[f]
        basis.append(vector)
    return basis


def solve(matrix: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> List[Fraction]:
    """
    Solve a square nonsingular system exactly.

    Raises:
        ValueError: If the matrix is singular.
    """
    n = len(matrix)
    augmented = [list(row) + [rhs[i]] for i, row in enumerate(matrix)]
    reduced, pivots = rref(augmented, n + 1)
    if pivots != tuple(range(n)):
        raise ValueError("Singular system")
    return [reduced[i][n] for i in range(n)]


def independent_rows(
    rows: Sequence[Mapping[int, Fraction]], rhs: Sequence[Fraction]
) -> List[int]:
    """
    Indices of a maximal linearly independent subset of sparse rows.

    Rows are kept in their original order. A dependent row whose
    right-hand side does not follow from the kept rows makes the system
    inconsistent.

    Raises:
        InfeasibleBasis: If the system has no solution.
    """
    pivots: List[Tuple[int, Dict[int, Fraction], Fraction]] = []
    kept = []
    for index, (row, value) in enumerate(zip(rows, rhs)):
        work = {k: Fraction(v) for k, v in row.items() if v}
        value = Fraction(value)
        for col, prow, pval in pivots:
            factor = work.get(col)
            if factor:
                for k, v in prow.items():
                    updated = work.get(k, 0) - factor * v
                    if updated:
                        work[k] = updated
                    else:
                        work.pop(k, None)
                value -= factor * pval
        if not work:
            if value:
                raise InfeasibleBasis(
                    "Gram constraints are inconsistent",
                    {"row": index, "residual": str(value)},
                )
            continue
        col = min(work)
        lead = work[col]
        pivots.append((col, {k: v / lead for k, v in work.items()}, value / lead))
        kept.append(index)
    logger.debug("Kept %d of %d constraint rows", len(kept), len(rows))
    return kept


def min_norm_correction(
    rows: Sequence[Mapping[int, Fraction]],
    ncols: int,
    residual: Sequence[Fraction],
) -> Dict[int, Fraction]:
    """
    Smallest change d with A d = r, for A of full row rank.

    Solves the normal equations (A A^T) y = r exactly and returns
    d = A^T y as a sparse dict.

    Raises:
        ValueError: If the rows are dependent.
    """
    if not rows:
        return {}
    by_column: Dict[int, List[Tuple[int, Fraction]]] = {}
    for r, row in enumerate(rows):
        for k, v in row.items():
            by_column.setdefault(k, []).append((r, Fraction(v)))
    gram: List[Dict[int, Fraction]] = [dict() for _ in rows]
    for entries in by_column.values():
        for r, a in entries:
            for s, b in entries:
                gram[r][s] = gram[r].get(s, Fraction(0)) + a * b
    lhs = sparse_domain_matrix(gram, len(rows))
    rhs = sparse_domain_matrix([{0: v} for v in residual], 1)
    try:
        y = from_domain_matrix(lhs.lu_solve(rhs))
    except (DMNonInvertibleMatrixError, ZeroDivisionError) as exc:
        raise ValueError("Constraint rows are dependent") from exc
    correction: Dict[int, Fraction] = {}
    for k, entries in by_column.items():
        value = sum((a * y[r][0] for r, a in entries), Fraction(0))
        if value:
            correction[k] = value
    if ncols and any(k >= ncols for k in correction):
        raise ValueError("Constraint row references a missing column")
    return correction
