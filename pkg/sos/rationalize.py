"""
From a numerical Gram solution to an exact rational certificate.

Rounding uses power-of-two denominators, so every float rounds without
representation error; the rounded point is then moved exactly onto the
constraint subspace. PSD-ness is decided by an exact LDL^T with
symmetric pivoting, and the same factorization yields the squares.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.config import Settings, settings
from core.exceptions import (
    CertificateError,
    FaceReductionError,
    RetryWithLargerDenominator,
)
from sos.certificate import Certificate, make_certificate
from sos.gram import GramProblem, MonomialBasis
from sos.poly import Polynomial
from sos.sdp import SdpInstance
from sos.symmetry import Block, SymmetryBlocking, triu_pairs
from sos.verify import verify_identity
from utils.rational_linalg import independent_rows, min_norm_correction, nullspace

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RationalMatrix:
    """Dense symmetric matrix of Fractions."""

    rows: Tuple[Tuple[Fraction, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(Fraction(v) for v in row) for row in self.rows)
        n = len(rows)
        if any(len(row) != n for row in rows):
            raise ValueError("Matrix is not square")
        for i in range(n):
            for j in range(i + 1, n):
                if rows[i][j] != rows[j][i]:
                    raise ValueError(f"Matrix is not symmetric at ({i}, {j})")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def zeros(cls, n: int) -> "RationalMatrix":
        return cls(tuple((Fraction(0),) * n for _ in range(n)))

    @property
    def dimension(self) -> int:
        return len(self.rows)

    def __getitem__(self, i: int) -> Tuple[Fraction, ...]:
        return self.rows[i]

    def to_numpy(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.rows]).reshape(
            self.dimension, self.dimension
        )

    def quadratic_form(self, v: Sequence[Fraction]) -> Fraction:
        n = self.dimension
        return sum(
            (v[i] * self.rows[i][j] * v[j] for i in range(n) for j in range(n)),
            Fraction(0),
        )


def _round(value: float, bound: int) -> Fraction:
    return Fraction(round(float(value) * bound), bound)


def round_and_project_vector(
    x: Sequence[float],
    rows: Sequence[Dict[int, Fraction]],
    rhs: Sequence[Fraction],
    bound: int,
    max_shift: float,
) -> List[Fraction]:
    """
    Round x to denominators dividing ``bound``, then apply the smallest
    exact correction that satisfies every row.

    Raises:
        RetryWithLargerDenominator: If the correction is larger than max_shift.
    """
    rounded = [_round(v, bound) for v in x]
    residual = [
        Fraction(value) - sum((a * rounded[k] for k, a in row.items()), Fraction(0))
        for row, value in zip(rows, rhs)
    ]
    if not any(residual):
        return rounded
    correction = min_norm_correction(rows, len(rounded), residual)
    shift = max((abs(float(v)) for v in correction.values()), default=0.0)
    logger.debug("Projection shift %.3e at denominator %d", shift, bound)
    if shift > max_shift:
        raise RetryWithLargerDenominator(shift, bound)
    for k, v in correction.items():
        rounded[k] += v
    return rounded


def round_and_project(
    Qfloat,
    problem: GramProblem,
    bound: int,
    config: Optional[Settings] = None,
) -> RationalMatrix:
    """
    Exactly feasible rational Gram matrix near ``Qfloat``.

    Args:
        Qfloat: approximately feasible symmetric matrix.
        problem: Gram constraints to satisfy.
        bound: power-of-two rounding denominator.
        config: supplies ``projection_max_shift``.

    Returns:
        A RationalMatrix with zero exact residual.

    Raises:
        RetryWithLargerDenominator: If rounding was too coarse.
    """
    cfg = config or settings
    n = problem.size
    Qfloat = np.asarray(Qfloat, dtype=float)
    pairs = triu_pairs(n)
    position = {pair: pos for pos, pair in enumerate(pairs)}
    rows = []
    for constraint in problem.constraints:
        rows.append({position[(i, j)]: Fraction(c) for i, j, c in constraint.entries})
    rhs = [c.rhs for c in problem.constraints]
    # symmetrize so the upper triangle carries the mean of both halves
    x = [(Qfloat[i, j] + Qfloat[j, i]) / 2 for i, j in pairs]
    kept = independent_rows(rows, rhs)
    values = round_and_project_vector(
        x, [rows[r] for r in kept], [rhs[r] for r in kept], bound, cfg.projection_max_shift
    )
    Q = [[Fraction(0)] * n for _ in range(n)]
    for (i, j), v in zip(pairs, values):
        Q[i][j] = Q[j][i] = v
    return RationalMatrix(tuple(tuple(row) for row in Q))


def round_and_project_blocks(
    instance: SdpInstance,
    block_matrices: Sequence,
    bound: int,
    config: Optional[Settings] = None,
) -> List[RationalMatrix]:
    """Blocked counterpart of ``round_and_project`` over an SDP instance."""
    cfg = config or settings
    x = instance.vector_from_matrices([np.asarray(B, dtype=float) for B in block_matrices])
    values = round_and_project_vector(
        x, instance.rows, instance.rhs, bound, cfg.projection_max_shift
    )
    mats = []
    for b, d in enumerate(instance.dimensions):
        M = [[Fraction(0)] * d for _ in range(d)]
        for pos, (k, l) in enumerate(triu_pairs(d)):
            M[k][l] = M[l][k] = values[instance.offsets[b] + pos]
        mats.append(RationalMatrix(tuple(tuple(row) for row in M)))
    return mats


@dataclass
class PsdResult:
    """
    Outcome of the exact PSD decision.

    ``steps`` holds (pivot index, pivot value, pivot column) per
    elimination step; the column maps remaining indices to entries and
    includes the pivot itself. ``witness`` is set only when not PSD.
    """

    is_psd: bool
    steps: List[Tuple[int, Fraction, Dict[int, Fraction]]] = field(default_factory=list)
    witness: Optional[List[Fraction]] = None

    def __bool__(self) -> bool:
        return self.is_psd

    @property
    def pivots(self) -> List[Fraction]:
        return [d for _, d, _ in self.steps]

    @property
    def rank(self) -> int:
        return len(self.steps)


def _back_substitute(steps, x: List[Fraction]) -> List[Fraction]:
    for p, d, column in reversed(steps):
        x[p] = -sum((a * x[j] for j, a in column.items() if j != p), Fraction(0)) / d
    return x


def is_psd_exact(Q) -> PsdResult:
    """
    Decide Q >= 0 exactly.

    Pivots on the largest remaining diagonal entry, ties to the smallest
    index. A negative diagonal, or a zero diagonal facing a nonzero
    off-diagonal entry, yields a witness v with v^T Q v < 0.
    """
    rows = Q.rows if isinstance(Q, RationalMatrix) else Q
    n = len(rows)
    S = [[Fraction(v) for v in row] for row in rows]
    active = list(range(n))
    steps: List[Tuple[int, Fraction, Dict[int, Fraction]]] = []

    while active:
        p = max(active, key=lambda i: (S[i][i], -i))
        d = S[p][p]
        if d == 0:
            p = min(active, key=lambda i: (S[i][i], i))
            d = S[p][p]
        if d < 0:
            x = [Fraction(0)] * n
            x[p] = Fraction(1)
            return PsdResult(False, steps, _back_substitute(steps, x))
        if d == 0:
            for i in active:
                for j in active:
                    if i < j and S[i][j]:
                        x = [Fraction(0)] * n
                        x[i] = Fraction(1)
                        x[j] = Fraction(-1) if S[i][j] > 0 else Fraction(1)
                        return PsdResult(False, steps, _back_substitute(steps, x))
            break
        column = {j: S[p][j] for j in active if S[p][j]}
        steps.append((p, d, column))
        active.remove(p)
        for i in active:
            a = S[i][p]
            if not a:
                continue
            factor = a / d
            for j in active:
                if S[p][j]:
                    S[i][j] -= factor * S[p][j]
    return PsdResult(True, steps)


def normalize_square(coefficient: Fraction, root: Polynomial) -> Tuple[Fraction, Polynomial]:
    """
    Rewrite c * s^2 with s primitive over the integers and a positive
    leading coefficient in canonical order.
    """
    lcm = 1
    g = 0
    for _, v in root.terms():
        lcm = lcm * v.denominator // math.gcd(lcm, v.denominator)
    for _, v in root.terms():
        g = math.gcd(g, int(v * lcm))
    factor = Fraction(lcm, g)
    if root.leading_term()[1] < 0:
        factor = -factor
    return coefficient / (factor * factor), root.scale(factor)


def _steps_to_terms(steps, vectors, polys, one) -> list:
    """
    One (coefficient, 1, root) term per step; ``vectors`` maps block
    coordinates to sparse combinations of basis monomials.
    """
    terms = []
    for _, d, column in steps:
        combined: Dict[int, Fraction] = {}
        for k, a in column.items():
            for i, v in vectors[k].items():
                combined[i] = combined.get(i, Fraction(0)) + a / d * v
        root = Polynomial.zero(one.variables)
        for i, v in combined.items():
            if v:
                root = root + polys[i].scale(v)
        if root.is_zero():
            continue
        c, root = normalize_square(d, root)
        terms.append((c, one, root))
    return terms


def _checked(target: Polynomial, terms) -> Certificate:
    cert = make_certificate(target, terms)
    report = verify_identity(target, cert)
    if not report.verified:
        raise CertificateError(
            details={"exit_code": report.exit_code, "difference": report.difference}
        )
    return cert


def extract_sos(Q, basis: MonomialBasis, target: Polynomial) -> Certificate:
    """
    Certificate sum of d_k (l_k . u)^2 read off the exact LDL^T of Q.

    Raises:
        CertificateError: If Q is not PSD or the squares miss the target.
    """
    result = is_psd_exact(Q)
    if not result:
        raise CertificateError("Gram matrix is not positive semidefinite")
    polys = basis.polynomials(target.variables)
    one = Polynomial.constant(target.variables, 1)
    units = [{i: Fraction(1)} for i in range(len(basis))]
    terms = _steps_to_terms(result.steps, units, polys, one)
    logger.info("Extracted %d squares", len(terms))
    return _checked(target, terms)


def extract_sos_blocked(
    blocking: SymmetryBlocking,
    block_matrices: Sequence,
    basis: MonomialBasis,
    target: Polynomial,
) -> Certificate:
    """
    Per-block extraction; each copy of a block contributes its own squares.

    Raises:
        CertificateError: If a block is not PSD or the squares miss the target.
    """
    polys = basis.polynomials(target.variables)
    one = Polynomial.constant(target.variables, 1)
    terms = []
    for block, matrix in zip(blocking.blocks, block_matrices):
        result = is_psd_exact(matrix)
        if not result:
            raise CertificateError(
                "Block is not positive semidefinite", {"block": block.label}
            )
        for rows in block.copies:
            terms += _steps_to_terms(result.steps, [dict(row) for row in rows], polys, one)
    logger.info("Extracted %d squares from %d blocks", len(terms), len(blocking.blocks))
    return _checked(target, terms)


def _float_rref(K: np.ndarray, tol: float) -> np.ndarray:
    K = K.copy()
    rows, cols = K.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        pivot = r + int(np.argmax(np.abs(K[r:, c])))
        if abs(K[pivot, c]) <= tol:
            continue
        K[[r, pivot]] = K[[pivot, r]]
        K[r] /= K[r, c]
        for i in range(rows):
            if i != r:
                K[i] -= K[i, c] * K[r]
        r += 1
    return K[:r]


def _block_kernel(
    matrix: np.ndarray, cfg: Settings
) -> Optional[List[List[Fraction]]]:
    """
    Rational basis of the numerical kernel of one block, or None.

    None means no kernel, or no clear gap between kernel and range.
    """
    eigenvalues, eigenvectors = np.linalg.eigh(matrix)
    scale = max(1.0, float(eigenvalues[-1]))
    k = int(np.sum(eigenvalues <= cfg.kernel_tol * scale))
    if k == 0:
        return None
    if k < len(eigenvalues):
        below = max(float(eigenvalues[k - 1]), np.finfo(float).tiny)
        if eigenvalues[k] < cfg.kernel_gap * below:
            logger.debug("Ambiguous eigenvalue gap, kernel size %d skipped", k)
            return None
    reduced = _float_rref(eigenvectors[:, :k].T, math.sqrt(cfg.kernel_tol))
    kernel = [
        [Fraction(float(v)).limit_denominator(cfg.kernel_denominator) for v in row]
        for row in reduced
    ]
    check = matrix @ np.array([[float(v) for v in row] for row in kernel]).T
    if np.max(np.abs(check)) > math.sqrt(cfg.kernel_tol) * scale:
        raise FaceReductionError(
            details={"residual": float(np.max(np.abs(check))), "kernel_size": k}
        )
    return kernel


def reduce_face(
    blocking: SymmetryBlocking,
    block_matrices: Sequence,
    config: Optional[Settings] = None,
) -> Tuple[SymmetryBlocking, int]:
    """
    Restrict every block to the complement of its numerical kernel.

    Returns:
        The new blocking and the number of dimensions removed per copy.

    Raises:
        FaceReductionError: If a kernel basis does not survive rationalization.
    """
    cfg = config or settings
    blocks: List[Block] = []
    removed = 0
    for block, matrix in zip(blocking.blocks, block_matrices):
        kernel = _block_kernel(np.asarray(matrix, dtype=float), cfg)
        if kernel is None:
            blocks.append(block)
            continue
        complement = nullspace(kernel, block.dimension)
        removed += block.dimension - len(complement)
        if complement:
            blocks.append(block.restrict(complement))
        logger.info(
            "Block %s: dimension %d -> %d", block.label, block.dimension, len(complement)
        )
    return blocking.with_blocks(blocks), removed
