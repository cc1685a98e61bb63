"""
Report schemas for command output.
"""
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class SampleReport(BaseModel):
    """Result of a random sampling check of an inequality."""
    name: str
    count: int
    seed: int
    min_slack: Optional[float] = None
    worst: Optional[List[float]] = None
    tolerance: float = 1e-12

    @property
    def passed(self) -> bool:
        return self.min_slack is None or self.min_slack >= -self.tolerance


class BlockRow(BaseModel):
    """One row of the block profile table."""
    index: int
    label: str
    multiplicity: int
    dimension: int


class SdpSummary(BaseModel):
    """Numerical solve summary."""
    status: str
    t: float
    residual: float
    iterations: int
    min_eigenvalue: float


class CheckResult(BaseModel):
    """Outcome of one exact check."""
    name: str
    passed: bool
    detail: Dict[str, Any] = Field(default_factory=dict)


class FindReport(BaseModel):
    """Report of the find command."""
    command: str = "find"
    variables: List[str]
    target_terms: int
    basis_size: int = 0
    constraint_count: int = 0
    symmetry: bool = True
    sign_group_order: int = 1
    swap: Optional[List[int]] = None
    group_order: int = 1
    blocks: List[BlockRow] = Field(default_factory=list)
    sdp: Optional[SdpSummary] = None
    denominator_bound: Optional[int] = None
    face_rounds: int = 0
    square_count: int = 0
    verified: bool = False
    certificate_path: Optional[str] = None
    error: Optional[Dict[str, Any]] = None


class VerifyReport(BaseModel):
    """Report of the verify command."""
    command: str = "verify"
    verified: bool
    exit_code: int
    square_count: int = 0
    plain_square_count: int = 0
    structural_errors: List[str] = Field(default_factory=list)
    difference: List[str] = Field(default_factory=list)
    error: Optional[Dict[str, Any]] = None


class PackingDemoReport(BaseModel):
    """Report of the paper-demo command."""
    command: str = "paper-demo"
    checks: List[CheckResult] = Field(default_factory=list)
    p_terms: int = 0
    p_total_degree: int = 0
    p_per_variable_degrees: List[int] = Field(default_factory=list)
    p_group_degrees: Dict[str, int] = Field(default_factory=dict)
    basis_size: int = 0
    expected_basis_size: int = 137
    constraint_count: int = 0
    expected_constraint_count: int = 1329
    published_constraint_count: int = 1328
    sign_group_order: int = 0
    group_order: int = 0
    block_total: int = 0
    block_profile: List[BlockRow] = Field(default_factory=list)
    published_profile: List[BlockRow] = Field(default_factory=list)
    samples: List[SampleReport] = Field(default_factory=list)
    rediscovery: Optional[FindReport] = None
    error: Optional[Dict[str, Any]] = None

    @property
    def passed(self) -> bool:
        return (
            self.error is None
            and all(check.passed for check in self.checks)
            and all(sample.passed for sample in self.samples)
        )
