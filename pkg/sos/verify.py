"""
Exact, independent checking of certificates.

Nothing on this path touches floating point.
"""

import logging
from typing import Optional, Sequence

from schemas.reports import CheckResult, VerifyReport
from sos.certificate import Certificate, is_manifestly_nonnegative
from sos.poly import Polynomial, parse
from sos.reduction import L_VARIABLES, build_L, l_decomposition_forms

logger = logging.getLogger(__name__)

DIFFERENCE_TERMS = 5


def _structural_errors(target: Polynomial, cert: Certificate) -> list:
    errors = []
    for index, term in enumerate(cert.terms, start=1):
        if term.coefficient < 0:
            errors.append(f"term {index}: negative coefficient {term.coefficient}")
        if not is_manifestly_nonnegative(term.multiplier):
            errors.append(
                f"term {index}: multiplier {term.multiplier} is not manifestly nonnegative"
            )
        for role, poly in (("multiplier", term.multiplier), ("square root", term.square_root)):
            if poly.variables != target.variables:
                errors.append(
                    f"term {index}: {role} uses variables {list(poly.variables)}, "
                    f"target uses {list(target.variables)}"
                )
    return errors


def verify_identity(target: Polynomial, cert: Certificate) -> VerifyReport:
    """
    Check target == sum of c * m * s^2 exactly.

    Structural problems (negative weight, non-manifest multiplier, foreign
    variables) are reported with exit code 2 and the identity is not
    expanded. A nonzero difference gives exit code 1 and its leading terms.
    """
    if cert.target != target:
        logger.debug("Certificate header target differs from the supplied target")
    errors = _structural_errors(target, cert)
    if errors:
        logger.warning("Certificate rejected: %d structural errors", len(errors))
        return VerifyReport(
            verified=False,
            exit_code=2,
            square_count=cert.square_count,
            structural_errors=errors,
        )
    difference = target - cert.expand()
    if difference.is_zero():
        logger.info("Certificate verified: %d squares", cert.square_count)
        return VerifyReport(
            verified=True,
            exit_code=0,
            square_count=cert.square_count,
            plain_square_count=cert.plain_square_count,
        )
    leading = [
        Polynomial.monomial(target.variables, e, c).serialize()
        for e, c in list(difference.terms())[:DIFFERENCE_TERMS]
    ]
    logger.warning("Certificate identity fails on %d terms", len(difference))
    return VerifyReport(
        verified=False,
        exit_code=1,
        square_count=cert.square_count,
        plain_square_count=cert.plain_square_count,
        difference=leading,
    )


def _region_polynomials(variables: Sequence[str]):
    return (
        parse("gamma + delta", variables),
        parse("(1 - gamma)*(1 - delta)", variables),
    )


def verify_region_claim_L(forms: Optional[Sequence] = None) -> CheckResult:
    """
    Audit L = L1 + L2 + L3 as a nonnegativity proof on the region
    gamma + delta >= 0, (1 - gamma)(1 - delta) >= 0.

    Each part must be a region factor times at least one square, and the
    parts must sum to L. Nothing is claimed outside the region.
    """
    forms = tuple(forms) if forms is not None else l_decomposition_forms()
    allowed = _region_polynomials(L_VARIABLES)
    audit = {}
    passed = True
    for form in forms:
        region = Polynomial.constant(L_VARIABLES, 1)
        for factor in form.region_factors:
            region = region * factor
        region_ok = region in allowed
        squares_ok = bool(form.squared_factors)
        audit[form.name] = {
            "region": region.serialize(),
            "region_ok": region_ok,
            "squares": len(form.squared_factors),
        }
        passed = passed and region_ok and squares_ok
    total = Polynomial.zero(L_VARIABLES)
    for form in forms:
        total = total + form.expand()
    sums_to_L = total == build_L()
    audit["sums_to_L"] = sums_to_L
    passed = passed and sums_to_L
    return CheckResult(name="l_region", passed=passed, detail=audit)
