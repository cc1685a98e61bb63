"""
Numerical solve of the block-diagonal Gram problem with cvxopt.

Maximizes t subject to B_b - t I being PSD for every block and the
affine constraints holding. Dependent constraint rows are removed
exactly before any float conversion.
"""

import contextlib
import io
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from cvxopt import matrix, solvers

from core.config import Settings, settings
from core.exceptions import MaxIterError, NumericalFailure, SdpInfeasible
from sos.gram import GramProblem
from sos.symmetry import SymmetryBlocking, block_constraints, block_offsets, triu_pairs
from utils.rational_linalg import independent_rows

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SdpInstance:
    """
    Blocks with their upper-triangular entries as variables.

    Variable ``offsets[b] + pos`` is entry ``triu_pairs(dimensions[b])[pos]``
    of block b. Rows are linearly independent.
    """

    dimensions: Tuple[int, ...]
    rows: Tuple[Dict[int, Fraction], ...]
    rhs: Tuple[Fraction, ...]
    offsets: Tuple[int, ...] = field(init=False)

    def __post_init__(self):
        offsets = [0]
        for d in self.dimensions:
            offsets.append(offsets[-1] + d * (d + 1) // 2)
        object.__setattr__(self, "offsets", tuple(offsets))
        for row in self.rows:
            if any(k < 0 or k >= offsets[-1] for k in row):
                raise ValueError("Constraint row references a missing variable")

    @classmethod
    def from_blocking(cls, problem: GramProblem, blocking: SymmetryBlocking) -> "SdpInstance":
        """
        Constraint rows in block coordinates, dependent rows removed.

        Raises:
            InfeasibleBasis: If the rows are inconsistent.
        """
        rows, rhs = block_constraints(problem, blocking)
        kept = independent_rows(rows, rhs)
        dims = tuple(b.dimension for b in blocking.blocks)
        logger.info(
            "SDP instance: %d blocks, %d variables, %d of %d rows independent",
            len(dims),
            block_offsets(blocking)[-1],
            len(kept),
            len(rows),
        )
        return cls(dims, tuple(rows[i] for i in kept), tuple(rhs[i] for i in kept))

    @property
    def nvars(self) -> int:
        return self.offsets[-1]

    def dense_rows(self) -> Tuple[np.ndarray, np.ndarray]:
        A = np.zeros((len(self.rows), self.nvars))
        for r, row in enumerate(self.rows):
            for k, v in row.items():
                A[r, k] = float(v)
        b = np.array([float(v) for v in self.rhs])
        return A, b

    def matrices_from_vector(self, x: Sequence) -> List[np.ndarray]:
        mats = []
        for b, d in enumerate(self.dimensions):
            M = np.zeros((d, d))
            for pos, (k, l) in enumerate(triu_pairs(d)):
                M[k, l] = M[l, k] = x[self.offsets[b] + pos]
            mats.append(M)
        return mats

    def vector_from_matrices(self, mats: Sequence) -> list:
        x = [0] * self.nvars
        for b, d in enumerate(self.dimensions):
            for pos, (k, l) in enumerate(triu_pairs(d)):
                x[self.offsets[b] + pos] = mats[b][k][l]
        return x


@dataclass
class SdpSolution:
    blocks: List[np.ndarray]
    t: float
    residual: float
    min_eigenvalue: float
    iterations: int
    status: str
    gap: Optional[float] = None
    trace: List[str] = field(default_factory=list)

    def write_trace(self, path: Union[str, Path]) -> None:
        """Solver progress lines, then a summary line."""
        lines = list(self.trace)
        lines.append(
            f"# status={self.status} iterations={self.iterations} t={self.t:.6e} "
            f"residual={self.residual:.3e} gap={self.gap}"
        )
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def residual_check(instance: SdpInstance, blocks: Sequence) -> Tuple[float, float]:
    """
    Max constraint residual and min block eigenvalue, recomputed from scratch.

    Sums use math.fsum.
    """
    x = instance.vector_from_matrices(blocks)
    residual = 0.0
    for row, value in zip(instance.rows, instance.rhs):
        total = math.fsum([float(v) * float(x[k]) for k, v in row.items()] + [-float(value)])
        residual = max(residual, abs(total))
    eigenvalues = [
        float(np.linalg.eigvalsh(np.asarray(B, dtype=float)).min())
        for B in blocks
        if len(B)
    ]
    return residual, min(eigenvalues) if eigenvalues else 0.0


def _polish(A: np.ndarray, b: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Least-squares projection of x onto {A x = b}."""
    if not len(b):
        return x
    correction, *_ = np.linalg.lstsq(A, A @ x - b, rcond=None)
    return x - correction


def solve(
    instance: SdpInstance,
    config: Optional[Settings] = None,
    trace: bool = False,
    tolerance: Optional[float] = None,
) -> SdpSolution:
    """
    Maximize the smallest block eigenvalue over the affine constraints.

    Args:
        instance: blocks and independent constraint rows.
        config: tolerances and iteration cap; defaults to global settings.
        trace: keep the solver's progress lines on the solution.
        tolerance: interior-point stopping tolerance; defaults to
            ``solver_tol``. The equality residual is held to ``feas_tol``
            separately, after polishing.

    Returns:
        The solution with status ``Optimal``.

    Raises:
        SdpInfeasible: If the best t is below -infeasibility_margin.
        MaxIterError: Iteration cap hit; ``exc.solution`` holds the last iterate.
        NumericalFailure: Solver breakdown, or a polished solution whose
            residual exceeds ``feas_tol`` or whose smallest eigenvalue falls
            below t; ``exc.solution`` holds the iterate when there is one.
    """
    cfg = config or settings
    tol = cfg.solver_tol if tolerance is None else tolerance
    nv = instance.nvars
    n = nv + 1
    c = np.zeros(n)
    c[-1] = -1.0

    Gs, hs = [], []
    for b, d in enumerate(instance.dimensions):
        G = np.zeros((d * d, n))
        for pos, (k, l) in enumerate(triu_pairs(d)):
            var = instance.offsets[b] + pos
            G[k + l * d, var] = -1.0
            G[l + k * d, var] = -1.0
        for k in range(d):
            G[k + k * d, nv] = 1.0
        Gs.append(matrix(G))
        hs.append(matrix(np.zeros((d, d))))

    # t <= 1 keeps the objective bounded when the affine set is unbounded.
    Gl = np.zeros((1, n))
    Gl[0, nv] = 1.0
    hl = np.ones(1)

    A, b = instance.dense_rows()
    kwargs = {}
    if len(b):
        kwargs["A"] = matrix(np.hstack([A, np.zeros((len(b), 1))]))
        kwargs["b"] = matrix(b)

    options = {
        "show_progress": trace,
        "maxiters": cfg.max_iterations,
        "abstol": tol,
        "reltol": tol,
        "feastol": tol,
    }
    captured = io.StringIO()
    try:
        with contextlib.redirect_stdout(captured):
            sol = solvers.sdp(
                matrix(c), Gl=matrix(Gl), hl=matrix(hl), Gs=Gs, hs=hs, options=options, **kwargs
            )
    except (ArithmeticError, ValueError) as exc:
        raise NumericalFailure({"reason": str(exc), "tolerance": tol}) from exc

    status = sol["status"]
    iterations = int(sol.get("iterations", 0) or 0)
    logger.debug("cvxopt status %s after %d iterations", status, iterations)
    if status == "primal infeasible":
        raise SdpInfeasible(details={"solver_status": status})
    if sol["x"] is None:
        raise NumericalFailure({"solver_status": status})

    x = np.array(sol["x"]).ravel()
    t = float(x[-1])
    blocks = instance.matrices_from_vector(_polish(A, b, x[:-1]))
    residual, min_eig = residual_check(instance, blocks)
    solution = SdpSolution(
        blocks=blocks,
        t=t,
        residual=residual,
        min_eigenvalue=min_eig,
        iterations=iterations,
        status="Optimal",
        gap=sol.get("gap"),
        trace=captured.getvalue().splitlines(),
    )
    logger.info("SDP t=%.3e residual=%.3e min eig=%.3e", t, residual, min_eig)

    if status != "optimal":
        details = {"solver_status": status, "t": t, "residual": residual}
        if iterations >= cfg.max_iterations:
            exc = MaxIterError(details)
        else:
            exc = NumericalFailure(details)
        solution.status = "MaxIter" if isinstance(exc, MaxIterError) else "NumericalFailure"
        exc.solution = solution
        raise exc

    if t < -cfg.infeasibility_margin:
        raise SdpInfeasible(details={"t": t, "residual": residual})

    scale = max(1.0, max((float(np.abs(B).max()) for B in blocks if len(B)), default=1.0))
    if residual > cfg.feas_tol or min_eig < t - cfg.eigen_tol * scale:
        solution.status = "NumericalFailure"
        exc = NumericalFailure(
            {"t": t, "residual": residual, "min_eigenvalue": min_eig, "tolerance": tol}
        )
        exc.solution = solution
        raise exc
    return solution
