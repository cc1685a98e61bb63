"""
End-to-end certificate search tests.
"""
import random
from itertools import product

import pytest

from core.config import settings
from core.exceptions import (
    DimensionLimitExceeded,
    NumericalFailure,
    NotSOSCandidate,
    SdpInfeasible,
    SymmetryError,
)
from schemas.reports import FindReport
from sos.pipeline import FindOptions, find_certificate
from sos.poly import Polynomial, parse
from sos.verify import verify_identity

XY = ("x", "y")
QUARTIC = "2*x^4 + 2*x^3*y - x^2*y^2 + 5*y^4"


@pytest.mark.parametrize("symmetry", [True, False])
def test_find_quartic(symmetry):
    """Test a verified certificate is found with and without symmetry."""
    target = parse(QUARTIC, XY)
    result = find_certificate(target, FindOptions(symmetry=symmetry))
    assert result.report.verified
    assert result.report.basis_size == 3
    assert result.report.constraint_count == 5
    assert verify_identity(target, result.certificate).verified
    assert result.report.sdp.t > 0


def test_find_symmetric_quartic_uses_blocks():
    """Test the swap-invariant quartic splits into three blocks."""
    target = parse("x^4 + x^2*y^2 + y^4", XY)
    result = find_certificate(target)
    assert result.report.verified
    assert result.report.swap == [1, 0]
    assert result.report.group_order == 8
    assert len(result.report.blocks) == 3


def test_find_zero_polynomial():
    """Test the zero polynomial has the empty certificate."""
    result = find_certificate(parse("0", XY))
    assert result.certificate.square_count == 0
    assert result.report.verified


def test_find_odd_degree():
    """Test odd degree stops at the basis stage."""
    with pytest.raises(NotSOSCandidate) as info:
        find_certificate(parse("x^3 + y^4", XY))
    assert info.value.details["stage"] == "basis"


def test_find_not_sos():
    """Test -x^2 is reported infeasible at the solve stage."""
    report = FindReport(variables=list(XY), target_terms=1)
    with pytest.raises(SdpInfeasible) as info:
        find_certificate(parse("-x^2", XY), FindOptions(), report)
    assert info.value.details["stage"] == "solve"
    assert report.basis_size == 1


def test_find_motzkin_is_infeasible():
    """Test the Motzkin polynomial has no Gram certificate."""
    with pytest.raises(SdpInfeasible):
        find_certificate(parse("x^4*y^2 + x^2*y^4 - 3*x^2*y^2 + 1", XY))


def test_find_rejects_wrong_swap():
    """Test an explicit swap that does not fix the target."""
    with pytest.raises(SymmetryError):
        find_certificate(parse(QUARTIC, XY), FindOptions(swap=(1, 0)))


def test_dense_limit():
    """Test the dense basis guard."""
    options = FindOptions(dense=True, config=settings.with_overrides(dense_limit=4))
    with pytest.raises(DimensionLimitExceeded) as info:
        find_certificate(parse(QUARTIC, XY), options)
    assert info.value.exit_code == 11


def test_trace_written(tmp_path):
    """Test the solver trace file is written."""
    path = tmp_path / "trace.txt"
    result = find_certificate(parse(QUARTIC, XY), FindOptions(trace_path=path))
    assert result.report.verified
    assert path.read_text().splitlines()[-1].startswith("# status=")


def random_sos(rng, variables, half_degree):
    """A sum of random integer squares plus every monomial square up to half_degree."""
    monomials = [
        e for e in product(range(half_degree + 1), repeat=len(variables)) if sum(e) <= half_degree
    ]
    total = sum(
        (Polynomial.monomial(variables, e) ** 2 for e in monomials), Polynomial.zero(variables)
    )
    for _ in range(rng.randint(1, 3)):
        chosen = rng.sample(monomials, rng.randint(1, len(monomials)))
        q = Polynomial(variables, {e: rng.randint(-3, 3) for e in chosen})
        total = total + q * q
    return total


@pytest.mark.parametrize("symmetry", [True, False])
def test_find_univariate_octic(symmetry):
    """Test an octic whose solve broke down at tight interior-point tolerances."""
    target = parse(
        "5*x^8 - 6*x^7 + 18*x^6 - 18*x^5 + 10*x^4 - 6*x^3 + 18*x^2 - 18*x + 5", ("x",)
    )
    result = find_certificate(target, FindOptions(symmetry=symmetry))
    assert result.report.verified
    assert verify_identity(target, result.certificate).verified


def test_solver_breakdown_is_retried(monkeypatch):
    """Test a numerical failure is retried at the next tolerance."""
    import sos.pipeline

    real_solve = sos.pipeline.solve
    tolerances = []

    def flaky_solve(instance, config=None, trace=False, tolerance=None):
        tolerances.append(tolerance)
        if len(tolerances) == 1:
            raise NumericalFailure({"reason": "breakdown"})
        return real_solve(instance, config, trace=trace, tolerance=tolerance)

    monkeypatch.setattr(sos.pipeline, "solve", flaky_solve)
    result = find_certificate(parse(QUARTIC, XY), FindOptions(symmetry=False))
    assert result.report.verified
    assert tolerances[:2] == [settings.solver_tol, settings.solver_tol * 0.1]


def test_solver_breakdown_everywhere_raises(monkeypatch):
    """Test the last failure surfaces once every tolerance has failed."""
    import sos.pipeline

    def broken_solve(instance, config=None, trace=False, tolerance=None):
        raise NumericalFailure({"tolerance": tolerance})

    monkeypatch.setattr(sos.pipeline, "solve", broken_solve)
    with pytest.raises(NumericalFailure) as info:
        find_certificate(parse(QUARTIC, XY))
    assert info.value.exit_code == 7
    assert info.value.details["stage"] == "solve"
    assert info.value.details["tolerance"] == settings.solver_tol * 100.0


@pytest.mark.slow
@pytest.mark.parametrize("symmetry", [True, False])
def test_find_random_sos(symmetry):
    """Test fifty random sums of squares in up to three variables are certified."""
    rng = random.Random(31)
    names = ("x", "y", "z")
    for case in range(50):
        nvars = rng.randint(1, 3)
        half_degree = rng.randint(1, 4 if nvars < 3 else 3)
        target = random_sos(rng, names[:nvars], half_degree)
        result = find_certificate(target, FindOptions(symmetry=symmetry))
        assert result.report.verified, case
        assert verify_identity(target, result.certificate).verified, case
