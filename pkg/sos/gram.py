"""
Gram-matrix formulation: monomial basis and affine constraints.
"""

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, List, Sequence, Tuple

from core.exceptions import InfeasibleBasis, NotSOSCandidate
from sos.poly import Exponent, Polynomial, add_exponents, degree_profile, monomial_key
from utils.exact_lp import in_convex_hull

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MonomialBasis:
    """Ordered monomials u with p = u^T Q u."""

    monomials: Tuple[Exponent, ...]
    nvars: int
    _index: Dict[Exponent, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(set(self.monomials)) != len(self.monomials):
            raise ValueError("Basis contains duplicate monomials")
        object.__setattr__(
            self, "_index", {m: i for i, m in enumerate(self.monomials)}
        )

    def __len__(self) -> int:
        return len(self.monomials)

    def __iter__(self) -> Iterator[Exponent]:
        return iter(self.monomials)

    def __getitem__(self, i: int) -> Exponent:
        return self.monomials[i]

    def __contains__(self, m) -> bool:
        return tuple(m) in self._index

    def index_of(self, m: Sequence[int]) -> int:
        return self._index[tuple(m)]

    def polynomials(self, variables: Sequence[str]) -> List[Polynomial]:
        return [Polynomial.monomial(variables, m) for m in self.monomials]


def _sorted_basis(monomials, nvars: int) -> MonomialBasis:
    return MonomialBasis(tuple(sorted(set(monomials), key=monomial_key)), nvars)


def _check_even(p: Polynomial):
    profile = degree_profile(p)
    if profile.total % 2:
        raise NotSOSCandidate(
            "Odd total degree", {"total_degree": profile.total}
        )
    odd = [p.variables[i] for i, d in enumerate(profile.per_variable) if d % 2]
    if odd:
        raise NotSOSCandidate("Odd degree in some variables", {"variables": odd})
    return profile


def _hull_member(point: Exponent, support: List[Exponent], support_set, pair_sums) -> bool:
    if point in support_set:
        return True
    if tuple(2 * k for k in point) in pair_sums:
        return True
    return in_convex_hull(point, support)


def candidate_basis(p: Polynomial) -> MonomialBasis:
    """
    Half-Newton-polytope basis with diagonal-consistency pruning.

    Candidates m satisfy 2m inside the per-variable degree box and the
    total-degree range of p, and 2m in the convex hull of support(p).
    Then any m whose 2m is neither in the support nor a sum of two
    distinct remaining candidates is removed, until nothing changes.

    Raises:
        NotSOSCandidate: On odd degrees or an empty basis for nonzero p.
    """
    n = p.nvars
    if p.is_zero():
        return MonomialBasis((), n)
    profile = _check_even(p)
    support = sorted(p.support, key=monomial_key)
    support_set = set(support)
    low_total = min(sum(e) for e in support)
    low = [min(e[i] for e in support) for i in range(n)]
    ranges = [
        range((low[i] + 1) // 2, profile.per_variable[i] // 2 + 1) for i in range(n)
    ]
    pair_sums = {add_exponents(a, b) for a, b in itertools.combinations(support, 2)}

    candidates = []
    for m in itertools.product(*ranges):
        total = 2 * sum(m)
        if total < low_total or total > profile.total:
            continue
        doubled = tuple(2 * k for k in m)
        if _hull_member(doubled, support, support_set, pair_sums):
            candidates.append(m)
    logger.debug("%d half-polytope candidates", len(candidates))

    while True:
        sums = {add_exponents(a, b) for a, b in itertools.combinations(candidates, 2)}
        kept = [
            m
            for m in candidates
            if tuple(2 * k for k in m) in support_set
            or tuple(2 * k for k in m) in sums
        ]
        if len(kept) == len(candidates):
            break
        candidates = kept

    if not candidates:
        raise NotSOSCandidate("Empty monomial basis", {"terms": len(p)})
    basis = _sorted_basis(candidates, n)
    logger.info("Candidate basis has %d monomials", len(basis))
    return basis


def dense_basis(p: Polynomial) -> MonomialBasis:
    """All monomials of total degree at most deg(p)/2."""
    n = p.nvars
    if p.is_zero():
        return MonomialBasis((), n)
    half = _check_even(p).total // 2
    monomials = [
        m for m in itertools.product(range(half + 1), repeat=n) if sum(m) <= half
    ]
    return _sorted_basis(monomials, n)


@dataclass(frozen=True)
class GramConstraint:
    """sum of c * Q[i][j] over entries equals rhs; c is 1 on the diagonal, 2 off it."""

    monomial: Exponent
    entries: Tuple[Tuple[int, int, int], ...]
    rhs: Fraction


@dataclass(frozen=True)
class GramProblem:
    basis: MonomialBasis
    constraints: Tuple[GramConstraint, ...]
    target: Polynomial
    _index: Dict[Exponent, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(
            self, "_index", {c.monomial: r for r, c in enumerate(self.constraints)}
        )

    @property
    def size(self) -> int:
        return len(self.basis)

    @property
    def constraint_count(self) -> int:
        return len(self.constraints)

    def constraint_for(self, monomial: Sequence[int]) -> GramConstraint:
        return self.constraints[self._index[tuple(monomial)]]

    def row_of(self, monomial: Sequence[int]) -> int:
        return self._index[tuple(monomial)]

    def expand(self, Q) -> Polynomial:
        """u^T Q u for a symmetric matrix given as rows."""
        terms = {}
        for constraint in self.constraints:
            value = sum(
                Fraction(c) * Fraction(Q[i][j]) for i, j, c in constraint.entries
            )
            if value:
                terms[constraint.monomial] = value
        return Polynomial(self.target.variables, terms)

    def residuals(self, Q) -> List[Fraction]:
        """Exact constraint residuals sum(c * Q[i][j]) - rhs."""
        return [
            sum(Fraction(c) * Fraction(Q[i][j]) for i, j, c in constraint.entries)
            - constraint.rhs
            for constraint in self.constraints
        ]

    def to_text(self) -> str:
        variables = self.target.variables
        lines = [f"# basis ({self.size})"]
        lines += [Polynomial.monomial(variables, m).serialize() for m in self.basis]
        lines.append(f"# constraints ({self.constraint_count})")
        for constraint in self.constraints:
            mono = Polynomial.monomial(variables, constraint.monomial).serialize()
            entries = ", ".join(f"({i},{j},{c})" for i, j, c in constraint.entries)
            lines.append(f"{mono} : [{entries}] = {constraint.rhs}")
        return "\n".join(lines) + "\n"


def build_gram_problem(p: Polynomial, basis: MonomialBasis) -> GramProblem:
    """
    Equate coefficients of u^T Q u with those of p.

    Raises:
        InfeasibleBasis: If a support monomial of p is not a basis product.
    """
    if not len(basis):
        raise InfeasibleBasis("Empty basis")
    if basis.nvars != p.nvars:
        raise InfeasibleBasis(
            "Basis and polynomial differ in variable count",
            {"basis": basis.nvars, "polynomial": p.nvars},
        )
    products: Dict[Exponent, List[Tuple[int, int, int]]] = {}
    for i, mi in enumerate(basis):
        for j in range(i, len(basis)):
            mu = add_exponents(mi, basis[j])
            products.setdefault(mu, []).append((i, j, 1 if i == j else 2))
    missing = [e for e in p.support if e not in products]
    if missing:
        raise InfeasibleBasis(
            "Support monomials outside the product span",
            {"monomials": [list(e) for e in sorted(missing, key=monomial_key)[:5]]},
        )
    constraints = tuple(
        GramConstraint(mu, tuple(products[mu]), p.coefficient(mu))
        for mu in sorted(products, key=monomial_key)
    )
    logger.info(
        "Gram problem: %d x %d, %d constraints", len(basis), len(basis), len(constraints)
    )
    return GramProblem(basis, constraints, p)
