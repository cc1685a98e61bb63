"""
End-to-end certificate search: basis, Gram problem, symmetry blocks,
numerical solve, exact rounding and verification.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from core.config import Settings, settings
from core.exceptions import (
    DimensionLimitExceeded,
    FaceReductionError,
    IdentityFailure,
    InfeasibleBasis,
    RationalizationError,
    RetryWithLargerDenominator,
    SolverError,
    SymmetryError,
)
from middlewares.logger import StageLogger
from schemas.reports import BlockRow, FindReport, SdpSummary
from sos.certificate import Certificate, make_certificate
from sos.gram import GramProblem, build_gram_problem, candidate_basis, dense_basis
from sos.poly import Polynomial
from sos.rationalize import (
    RationalMatrix,
    extract_sos_blocked,
    is_psd_exact,
    reduce_face,
    round_and_project_blocks,
)
from sos.sdp import SdpInstance, SdpSolution, solve
from sos.symmetry import (
    SwapSymmetry,
    SymmetryBlocking,
    block_decompose,
    detect_sign_symmetries,
    detect_swap,
    find_swap,
    lift_solution,
    trivial_blocking,
)
from sos.verify import verify_identity

logger = logging.getLogger(__name__)

BOUND_GROWTH = 16
TOLERANCE_LADDER = (1.0, 0.1, 10.0, 100.0)


@dataclass
class FindOptions:
    symmetry: bool = True
    dense: bool = False
    swap: Optional[Tuple[int, ...]] = None
    trace_path: Optional[Path] = None
    config: Settings = field(default_factory=lambda: settings)


@dataclass
class FindResult:
    certificate: Certificate
    report: FindReport
    problem: Optional[GramProblem] = None
    blocking: Optional[SymmetryBlocking] = None


def block_rows(blocking: SymmetryBlocking) -> List[BlockRow]:
    return [
        BlockRow(index=i, label=b.label, multiplicity=b.multiplicity, dimension=b.dimension)
        for i, b in enumerate(blocking.blocks, start=1)
    ]


def lifted_residual(problem: GramProblem, Q) -> float:
    """Max float residual of the full Gram constraints at Q."""
    worst = 0.0
    for constraint in problem.constraints:
        total = math.fsum(
            [c * float(Q[i][j]) for i, j, c in constraint.entries] + [-float(constraint.rhs)]
        )
        worst = max(worst, abs(total))
    return worst


def _symmetry(
    target: Polynomial, problem: GramProblem, options: FindOptions, report: FindReport
) -> SymmetryBlocking:
    if not options.symmetry:
        return trivial_blocking(problem)
    signs = detect_sign_symmetries(target)
    if options.swap is not None:
        if not detect_swap(target, options.swap):
            raise SymmetryError(
                "Polynomial is not fixed by the requested swap", {"perm": list(options.swap)}
            )
        swap = SwapSymmetry(tuple(options.swap))
    else:
        swap = find_swap(target)
    report.sign_group_order = signs.order
    report.swap = list(swap.perm) if swap else None
    blocking = block_decompose(problem, signs, swap)
    report.group_order = blocking.group_order
    return blocking


def _acceptable(solution: Optional[SdpSolution], cfg: Settings) -> bool:
    return (
        solution is not None
        and solution.residual <= cfg.accept_residual
        and solution.t >= -cfg.infeasibility_margin
    )


def _solve(instance: SdpInstance, options: FindOptions) -> SdpSolution:
    """
    Solve, retrying at neighbouring interior-point tolerances on a breakdown.

    A failed solve whose iterate still meets ``accept_residual`` is used as is.
    """
    cfg = options.config
    failure: Optional[SolverError] = None
    for factor in TOLERANCE_LADDER:
        tolerance = cfg.solver_tol * factor
        try:
            solution = solve(
                instance, cfg, trace=options.trace_path is not None, tolerance=tolerance
            )
            break
        except SolverError as exc:
            solution = getattr(exc, "solution", None)
            if _acceptable(solution, cfg):
                logger.warning(
                    "Accepting %s iterate: residual %.3e, t %.3e",
                    solution.status,
                    solution.residual,
                    solution.t,
                )
                break
            failure = exc
            logger.warning(
                "Solver failed at tolerance %.0e (%s); retrying", tolerance, exc.details
            )
    else:
        raise failure
    if options.trace_path is not None:
        solution.write_trace(options.trace_path)
    return solution


def _bounds(cfg: Settings) -> List[int]:
    bounds = []
    bound = cfg.denominator_bound
    while bound <= cfg.max_denominator_bound:
        bounds.append(bound)
        bound *= BOUND_GROWTH
    return bounds


def _round_psd(
    instance: SdpInstance, blocks: Sequence, cfg: Settings, report: FindReport
) -> Optional[List[RationalMatrix]]:
    """
    Exactly feasible PSD block matrices, trying ever larger denominators.

    Returns None when every bound projects but some block stays non-PSD.

    Raises:
        RetryWithLargerDenominator: If even the largest bound rounds too coarsely.
    """
    last_error = None
    projected = False
    for bound in _bounds(cfg):
        try:
            mats = round_and_project_blocks(instance, blocks, bound, cfg)
        except RetryWithLargerDenominator as exc:
            last_error = exc
            continue
        projected = True
        report.denominator_bound = bound
        failing = [b for b, M in enumerate(mats) if not is_psd_exact(M)]
        if not failing:
            return mats
        logger.info("Denominator %d: %d blocks not PSD", bound, len(failing))
    if not projected and last_error is not None:
        raise last_error
    return None


def find_certificate(
    target: Polynomial,
    options: Optional[FindOptions] = None,
    report: Optional[FindReport] = None,
) -> FindResult:
    """
    Search for an exact SOS certificate of ``target``.

    ``report`` is filled in stage by stage, so a caller that catches an
    error still holds everything computed before it.

    Raises:
        AppException: Subclass named by the failing stage; ``details["stage"]`` is set.
    """
    options = options or FindOptions()
    cfg = options.config
    if report is None:
        report = FindReport(
            variables=list(target.variables),
            target_terms=len(target),
            symmetry=options.symmetry,
        )

    if target.is_zero():
        cert = make_certificate(target, [])
        report.verified = verify_identity(target, cert).verified
        return FindResult(cert, report)

    with StageLogger("basis"):
        basis = dense_basis(target) if options.dense else candidate_basis(target)
        if options.dense and len(basis) > cfg.dense_limit:
            raise DimensionLimitExceeded(len(basis), cfg.dense_limit)
        report.basis_size = len(basis)

    with StageLogger("gram"):
        problem = build_gram_problem(target, basis)
        report.constraint_count = problem.constraint_count

    with StageLogger("symmetry"):
        blocking = _symmetry(target, problem, options, report)
        report.blocks = block_rows(blocking)

    mats = None
    for face_round in range(cfg.max_face_rounds + 1):
        with StageLogger("instance"):
            try:
                instance = SdpInstance.from_blocking(problem, blocking)
            except InfeasibleBasis as exc:
                if face_round == 0:
                    raise
                raise FaceReductionError(
                    "Reduced face is inconsistent with the constraints", exc.details
                ) from exc

        with StageLogger("solve"):
            solution = _solve(instance, options)
            residual = lifted_residual(problem, lift_solution(blocking, solution.blocks))
            report.sdp = SdpSummary(
                status=solution.status,
                t=solution.t,
                residual=max(residual, solution.residual),
                iterations=solution.iterations,
                min_eigenvalue=solution.min_eigenvalue,
            )

        last_round = face_round == cfg.max_face_rounds
        near_singular = solution.min_eigenvalue <= cfg.kernel_tol * max(
            1.0, max((float(abs(B).max()) for B in solution.blocks if len(B)), default=1.0)
        )
        if near_singular and not last_round:
            with StageLogger("face"):
                reduced, removed = reduce_face(blocking, solution.blocks, cfg)
            if removed:
                blocking = reduced
                report.face_rounds += 1
                report.blocks = block_rows(blocking)
                continue

        with StageLogger("round"):
            mats = _round_psd(instance, solution.blocks, cfg, report)
        if mats is not None:
            break
        if last_round:
            break
        with StageLogger("face"):
            reduced, removed = reduce_face(blocking, solution.blocks, cfg)
        if not removed:
            break
        blocking = reduced
        report.face_rounds += 1
        report.blocks = block_rows(blocking)

    if mats is None:
        raise RationalizationError(
            "No exactly PSD rounding found",
            {"stage": "round", "face_rounds": report.face_rounds},
        )

    with StageLogger("extract"):
        cert = extract_sos_blocked(blocking, mats, basis, target)
        report.square_count = cert.square_count

    with StageLogger("verify"):
        verdict = verify_identity(target, cert)
        report.verified = verdict.verified
        if not verdict.verified:
            raise IdentityFailure(details={"difference": verdict.difference})

    logger.info(
        "Certificate found: %d squares, denominator %s, %d face rounds",
        cert.square_count,
        report.denominator_bound,
        report.face_rounds,
    )
    return FindResult(cert, report, problem, blocking)
