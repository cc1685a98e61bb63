"""
Command implementations behind the CLI.

Each command returns its report and the process exit code; the caller
decides where the JSON goes.
"""

import logging
import re
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

from core.config import Settings, settings
from core.exceptions import (
    AppException,
    PolynomialError,
    ReconstructionCheckFailure,
    create_error_report,
)
from middlewares.logger import StageLogger
from schemas.reports import (
    BlockRow,
    CheckResult,
    FindReport,
    PackingDemoReport,
    VerifyReport,
)
from sos.certificate import read_certificate, write_certificate
from sos.gram import build_gram_problem, candidate_basis
from sos.pipeline import FindOptions, block_rows, find_certificate
from sos.poly import Polynomial, degree_profile, group_degree, parse
from sos.reduction import (
    PUBLISHED_BLOCK_PROFILE,
    build_L_decomposition,
    build_L_from_expanded_form,
    build_L_from_grouped_form,
    build_M,
    build_P,
    check_invariance_P,
    packing_certificate,
    sample_decomposition,
    sample_lemma2,
    sample_nonnegativity,
    sample_theorem1,
    verify_E_identity,
)
from sos.symmetry import SwapSymmetry, block_decompose, detect_sign_symmetries
from sos.verify import verify_identity, verify_region_claim_L

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

P_TERMS = 123
P_TOTAL_DEGREE = 20
P_GROUP_DEGREES = {"x,y": 12, "z,w": 8}
P_SWAP = (1, 0, 3, 2)
SIGN_GROUP_ORDER = 16
GROUP_ORDER = 32
FLOAT_SAMPLE_CAP = 10_000

_IDENTIFIER = re.compile(r"[^\W\d]\w*")


def load_polynomial(path: PathLike, variables: Optional[Sequence[str]] = None) -> Polynomial:
    """
    Read a polynomial file.

    Lines starting with ``#`` are comments. An optional ``variables: x, y``
    line fixes the variable order; otherwise ``variables`` is used, and
    failing that the names in order of first appearance.

    Raises:
        PolynomialError: If the file cannot be read or does not parse.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise PolynomialError(
            "Cannot read polynomial file", {"path": str(path), "reason": str(exc)}
        ) from exc
    header = None
    body: List[str] = []
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.lower().startswith("variables:"):
            header = [v.strip() for v in stripped.split(":", 1)[1].split(",") if v.strip()]
            continue
        body.append(stripped)
    expression = " ".join(body)
    if header is not None:
        names = tuple(header)
    elif variables is not None:
        names = tuple(variables)
    else:
        names = tuple(dict.fromkeys(_IDENTIFIER.findall(expression)))
    return parse(expression, names)


def cmd_find(
    input_path: PathLike,
    out: Optional[PathLike] = None,
    options: Optional[FindOptions] = None,
) -> Tuple[FindReport, int]:
    """
    Search for a certificate of the polynomial in ``input_path``.

    Writes the certificate to ``out`` when one is found.
    """
    options = options or FindOptions()
    target = load_polynomial(input_path)
    report = FindReport(
        variables=list(target.variables),
        target_terms=len(target),
        symmetry=options.symmetry,
    )
    try:
        result = find_certificate(target, options, report)
    except AppException as exc:
        report.error = create_error_report(exc)
        return report, exc.exit_code
    if out is not None:
        write_certificate(result.certificate, out)
        report.certificate_path = str(out)
    return report, 0


def cmd_verify(target_path: PathLike, certificate_path: PathLike) -> Tuple[VerifyReport, int]:
    """
    Check a certificate file against a target polynomial file.

    Exit codes: 0 verified, 1 identity failure, 2 structural failure.
    """
    try:
        cert = read_certificate(certificate_path)
        target = load_polynomial(target_path, cert.variables)
    except AppException as exc:
        report = VerifyReport(verified=False, exit_code=exc.exit_code)
        report.error = create_error_report(exc)
        return report, exc.exit_code
    report = verify_identity(target, cert)
    return report, report.exit_code


def _require(report: PackingDemoReport, check: CheckResult) -> None:
    report.checks.append(check)
    logger.info("Check %s: %s", check.name, "ok" if check.passed else "FAILED")
    if not check.passed:
        raise ReconstructionCheckFailure(
            f"Check {check.name} failed", {"check": check.name, "detail": check.detail}
        )


def _reconstruct(report: PackingDemoReport, out: Optional[PathLike]) -> Polynomial:
    with StageLogger("L and M"):
        l_poly = build_L_from_grouped_form()
        expanded = build_L_from_expanded_form()
        _require(
            report,
            CheckResult(
                name="l_transcription",
                passed=l_poly == expanded,
                detail={
                    "terms": len(l_poly),
                    "difference_terms": len(l_poly - expanded),
                },
            ),
        )
        m_poly = build_M(l_poly)
        _require(
            report,
            CheckResult(
                name="m_involution",
                passed=build_M(m_poly) == l_poly,
                detail={"terms": len(m_poly)},
            ),
        )

    with StageLogger("E identity"):
        _require(report, verify_E_identity())

    with StageLogger("P"):
        p_poly = build_P(l_poly)
        profile = degree_profile(p_poly)
        report.p_terms = len(p_poly)
        report.p_total_degree = int(profile.total)
        report.p_per_variable_degrees = [int(d) for d in profile.per_variable]
        report.p_group_degrees = {
            "x,y": int(group_degree(p_poly, ("x", "y"))),
            "z,w": int(group_degree(p_poly, ("z", "w"))),
        }
        _require(
            report,
            CheckResult(
                name="p_statistics",
                passed=report.p_terms == P_TERMS
                and report.p_total_degree == P_TOTAL_DEGREE
                and report.p_group_degrees == P_GROUP_DEGREES,
                detail={
                    "terms": report.p_terms,
                    "total_degree": report.p_total_degree,
                    "group_degrees": report.p_group_degrees,
                },
            ),
        )
        _require(report, check_invariance_P(p_poly))

    with StageLogger("packing certificate"):
        cert = packing_certificate(p_poly)
        verdict = verify_identity(p_poly, cert)
        _require(
            report,
            CheckResult(
                name="packing_certificate",
                passed=verdict.verified,
                detail={
                    "squares": verdict.square_count,
                    "plain_squares": verdict.plain_square_count,
                    "difference": verdict.difference,
                },
            ),
        )
        if out is not None:
            write_certificate(cert, out)

    with StageLogger("L decomposition"):
        l1, l2, l3 = build_L_decomposition()
        _require(
            report,
            CheckResult(name="l_decomposition", passed=l1 + l2 + l3 == l_poly),
        )
        _require(report, verify_region_claim_L())
    return p_poly


def _sparse_statistics(report: PackingDemoReport, p_poly: Polynomial) -> None:
    with StageLogger("sparse reduction"):
        basis = candidate_basis(p_poly)
        problem = build_gram_problem(p_poly, basis)
        report.basis_size = len(basis)
        report.constraint_count = problem.constraint_count
        if report.constraint_count != report.published_constraint_count:
            logger.info(
                "Sparse reduction gives %d constraints; the published count is %d",
                report.constraint_count,
                report.published_constraint_count,
            )
        _require(
            report,
            CheckResult(
                name="sparse_reduction",
                passed=report.basis_size == report.expected_basis_size
                and report.constraint_count == report.expected_constraint_count,
                detail={
                    "basis_size": report.basis_size,
                    "constraint_count": report.constraint_count,
                    "published_constraint_count": report.published_constraint_count,
                    "note": "one constraint per distinct product monomial u_i*u_j; "
                    "this count is one above the published figure",
                },
            ),
        )

    with StageLogger("symmetry"):
        signs = detect_sign_symmetries(p_poly)
        blocking = block_decompose(problem, signs, SwapSymmetry(P_SWAP))
        report.sign_group_order = signs.order
        report.group_order = blocking.group_order
        report.block_total = blocking.total_dimension
        report.block_profile = block_rows(blocking)
        report.published_profile = [
            BlockRow(index=i, label=f"irrep{i}", multiplicity=m, dimension=d)
            for i, (m, d) in enumerate(PUBLISHED_BLOCK_PROFILE, start=1)
        ]
        logger.info("Block profile\n%s", blocking.report_table(PUBLISHED_BLOCK_PROFILE))
        _require(
            report,
            CheckResult(
                name="symmetry_accounting",
                passed=signs.order == SIGN_GROUP_ORDER
                and blocking.group_order == GROUP_ORDER
                and blocking.total_dimension == len(basis),
                detail={
                    "sign_group_order": signs.order,
                    "group_order": blocking.group_order,
                    "block_total": blocking.total_dimension,
                    "basis_size": len(basis),
                },
            ),
        )


def cmd_packing_demo(
    samples: int = 0,
    seed: Optional[int] = None,
    rediscover: bool = False,
    out: Optional[PathLike] = None,
    rediscover_out: Optional[PathLike] = None,
    config: Optional[Settings] = None,
) -> Tuple[PackingDemoReport, int]:
    """
    Rebuild the packing polynomial and check every exact identity.

    Args:
        samples: points per sampling check; 0 skips sampling.
        seed: sampling seed; defaults to the configured seed.
        rediscover: also search for a fresh certificate of P.
        out: where to write the five-square certificate of P.
        rediscover_out: where to write the rediscovered certificate.
        config: settings for sampling and the search.

    Returns:
        The report and exit code 0, or 10 when a check fails.
    """
    cfg = config or settings
    seed = cfg.seed if seed is None else seed
    report = PackingDemoReport()
    try:
        p_poly = _reconstruct(report, out)
        _sparse_statistics(report, p_poly)

        if samples > 0:
            with StageLogger("sampling"):
                float_count = min(samples, FLOAT_SAMPLE_CAP)
                report.samples = [
                    sample_theorem1(samples, seed, cfg),
                    sample_lemma2(samples, seed, cfg),
                    sample_nonnegativity(p_poly, float_count, seed),
                    sample_decomposition(float_count, seed, "region"),
                ]
            failing = [s.name for s in report.samples if not s.passed]
            if failing:
                raise ReconstructionCheckFailure(
                    "Sampling found a negative slack", {"samples": failing}
                )
        else:
            logger.info("Sampling skipped")

        if rediscover:
            found = FindReport(
                variables=list(p_poly.variables), target_terms=len(p_poly)
            )
            report.rediscovery = found
            result = find_certificate(p_poly, FindOptions(config=cfg), found)
            if rediscover_out is not None:
                write_certificate(result.certificate, rediscover_out)
                found.certificate_path = str(rediscover_out)
            _require(
                report,
                CheckResult(
                    name="rediscovery",
                    passed=found.verified,
                    detail={"squares": found.square_count},
                ),
            )
    except AppException as exc:
        report.error = create_error_report(exc)
        return report, exc.exit_code
    return report, 0
