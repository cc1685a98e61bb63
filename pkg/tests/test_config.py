"""
Settings, error report and stage logging tests.
"""
from fractions import Fraction

import pytest
from pydantic import ValidationError

from core.config import Settings, settings
from core.exceptions import (
    AppException,
    InfeasibleBasis,
    ParseError,
    RetryWithLargerDenominator,
    create_error_report,
)
from middlewares.logger import StageLogger
from utils.rational_linalg import independent_rows, min_norm_correction, nullspace, solve


def test_default_settings():
    """Test default settings."""
    assert settings.app_name == "sos-certify"
    assert settings.denominator_bound & (settings.denominator_bound - 1) == 0
    assert settings.sample_precision_bits >= 80


def test_overrides_are_validated():
    """Test CLI overrides go through the validators."""
    updated = settings.with_overrides(denominator_bound=2**24, feas_tol=None)
    assert updated.denominator_bound == 2**24
    assert updated.feas_tol == settings.feas_tol
    with pytest.raises(ValidationError):
        settings.with_overrides(denominator_bound=1000)
    with pytest.raises(ValidationError):
        Settings(sample_precision_bits=64)
    with pytest.raises(ValidationError):
        Settings(environment="testing")


def test_log_level_normalized():
    """Test log level names are upper-cased."""
    assert Settings(log_level="debug").log_level == "DEBUG"


def test_settings_read_environment(monkeypatch):
    """Test SOS_* environment variables populate and validate settings."""
    monkeypatch.setenv("SOS_DENOMINATOR_BOUND", "4096")
    monkeypatch.setenv("SOS_LOG_LEVEL", "warning")
    monkeypatch.setenv("SOS_SOLVER_TOL", "1e-6")
    loaded = Settings()
    assert loaded.denominator_bound == 4096
    assert loaded.log_level == "WARNING"
    assert loaded.solver_tol == 1e-6
    monkeypatch.setenv("SOS_DENOMINATOR_BOUND", "1000")
    with pytest.raises(ValidationError):
        Settings()


def test_tolerances_must_be_fractions():
    """Test solver tolerances outside (0, 1) are rejected."""
    with pytest.raises(ValidationError):
        Settings(solver_tol=0)
    with pytest.raises(ValidationError):
        settings.with_overrides(feas_tol=2.0)


def test_error_report():
    """Test the error object carries name, exit code and JSON-safe details."""
    exc = RetryWithLargerDenominator(0.5, 2**20)
    exc.details["value"] = Fraction(1, 3)
    report = create_error_report(exc)
    assert report["error"] == "RetryWithLargerDenominator"
    assert report["exit_code"] == 9
    assert report["details"]["value"] == "1/3"
    assert create_error_report(ParseError("Unexpected '$'", 4))["details"]["position"] == 4


def test_stage_logger_tags_failures():
    """Test an AppException leaving a stage is tagged with its name."""
    with pytest.raises(AppException) as info:
        with StageLogger("gram"):
            raise InfeasibleBasis()
    assert info.value.details["stage"] == "gram"
    with StageLogger("basis") as stage:
        pass
    assert stage.elapsed >= 0


def test_nullspace_and_solve():
    """Test exact kernel and linear solve."""
    one = Fraction(1)
    kernel = nullspace([[one, -one, 0], [0, 0, one]], 3)
    assert kernel == [[1, 1, 0]]
    assert solve([[2, 1], [1, 3]], [3, 5]) == [Fraction(4, 5), Fraction(7, 5)]
    with pytest.raises(ValueError):
        solve([[1, 2], [2, 4]], [1, 2])


def test_independent_rows():
    """Test dependent rows are dropped and inconsistent ones raise."""
    rows = [{0: Fraction(1), 1: Fraction(1)}, {0: Fraction(2), 1: Fraction(2)}, {1: Fraction(1)}]
    assert independent_rows(rows, [1, 2, 0]) == [0, 2]
    with pytest.raises(InfeasibleBasis):
        independent_rows(rows, [1, 3, 0])


def test_min_norm_correction():
    """Test the correction solves the rows with the smallest norm."""
    rows = [{0: Fraction(2), 1: Fraction(1)}]
    correction = min_norm_correction(rows, 2, [Fraction(1)])
    assert correction == {0: Fraction(2, 5), 1: Fraction(1, 5)}
    with pytest.raises(ValueError):
        min_norm_correction(rows + rows, 2, [Fraction(1), Fraction(1)])
