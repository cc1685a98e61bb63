"""
Concrete polynomials of the circle-packing inequality and their checks.

Builds L, its swap image M, the six-variable factorization identity for
the difference E of the two sides of the rational inequality, the
cleared polynomial P, the five-square certificate of P, the
L = L1 + L2 + L3 decomposition, and numeric sampling of the
trigonometric and reciprocal-root inequalities the chain starts from.
"""

import itertools
import logging
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from operator import mul
from typing import Callable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from mpmath import asin, cos, mp, mpf, sin, sqrt

from core.config import Settings, settings
from core.exceptions import TranscriptionMismatch
from schemas.reports import CheckResult, SampleReport
from sos.certificate import Certificate, make_certificate
from sos.poly import Polynomial, RationalFunctionSubstitution, parse, substitute_and_clear

logger = logging.getLogger(__name__)

L_VARIABLES = ("alpha", "beta", "gamma", "delta")
P_VARIABLES = ("x", "y", "z", "w")
E_VARIABLES = ("R", "S") + L_VARIABLES

# L written with the two braces grouped by (alpha*delta, beta*gamma).
L_GROUPED = (
    "alpha^2*beta^2*(alpha - beta)^2 + (alpha - beta)^2*gamma^3*delta^3"
    " + ((alpha*delta)^2*(1 - alpha*beta)*(1 + alpha*beta - 2*beta^2)"
    " - (alpha*delta)*(beta*gamma)*(2 - 4*alpha*beta + beta*alpha^3 + alpha*beta^3)"
    " + (beta*gamma)^2*(1 - alpha*beta)*(1 + alpha*beta - 2*alpha^2))"
    " + (gamma^2*beta*(1 - alpha*beta)*(2*alpha - beta - alpha*beta^2)"
    " - gamma*delta*(alpha^2 + beta^2 + 2*alpha^3*beta^3 - 4*alpha^2*beta^2)"
    " + delta^2*alpha*(1 - alpha*beta)*(2*beta - alpha - alpha^2*beta))*gamma*delta"
)

# L as a polynomial in gamma and delta.
L_EXPANDED = (
    "alpha^2*beta^2*(alpha - beta)^2"
    " + beta^2*(1 - alpha*beta)*(1 + alpha*beta - 2*alpha^2)*gamma^2"
    " + alpha^2*(1 - alpha*beta)*(1 + alpha*beta - 2*beta^2)*delta^2"
    " - alpha*beta*(2 + alpha*beta^3 - 4*alpha*beta + beta*alpha^3)*gamma*delta"
    " + beta*(1 - alpha*beta)*(2*alpha - beta - alpha*beta^2)*gamma^3*delta"
    " - (alpha^2 + beta^2 + 2*alpha^3*beta^3 - 4*alpha^2*beta^2)*gamma^2*delta^2"
    " + alpha*(1 - alpha*beta)*(2*beta - alpha - alpha^2*beta)*gamma*delta^3"
    " + (alpha - beta)^2*gamma^3*delta^3"
)

SQUARE_A = (
    "-y^2*z^2 - y^4*z^2 + x^2*w^2 + 2*x^2*y^2*w^2 - 2*x^2*y^2*z^2 - x^2*y^4"
    " - 2*x^2*y^4*z^2 + x^4*w^2 + x^4*y^2 + 2*x^4*y^2*w^2"
)
SQUARE_B = (
    "(1 + x^2 + y^2)*(-x^2*w^2 - x^2*z^2*w^2 - x^2*y^2*w^2 + x^2*y^2*z^2"
    " + y^2*z^2 + y^2*z^2*w^2)"
)
SQUARE_C = (
    "(x - y)*(x + y)*(-x^2*z^2*w^2 + x^2*y^2 + x^2*y^2*w^2 + x^2*y^2*z^2"
    " - z^2*w^2 - y^2*z^2*w^2)"
)
WEIGHT = "z^2 + w^2 + 2*z^2*w^2"

L1_BASE = (
    "-alpha^2*beta + alpha*beta^2 - alpha*delta + beta*gamma - beta*gamma*delta"
    " + alpha*delta*gamma - alpha*beta^2*gamma + alpha^2*beta*delta"
)

# Table of the published symmetry-adapted block sizes: (multiplicity, dimension).
PUBLISHED_BLOCK_PROFILE = (
    (1, 9), (1, 6), (1, 6), (1, 4), (1, 8), (1, 5), (1, 3), (1, 2),
    (2, 11), (2, 7), (2, 8), (2, 7), (2, 8), (2, 6),
)


def build_L_from_grouped_form(variables: Sequence[str] = L_VARIABLES) -> Polynomial:
    return parse(L_GROUPED, variables)


def build_L_from_expanded_form(variables: Sequence[str] = L_VARIABLES) -> Polynomial:
    return parse(L_EXPANDED, variables)


def build_L(variables: Sequence[str] = L_VARIABLES) -> Polynomial:
    """
    Build L and cross-check both transcriptions.

    Args:
        variables: context containing alpha, beta, gamma and delta.

    Raises:
        TranscriptionMismatch: If the two forms differ.
    """
    grouped = build_L_from_grouped_form(variables)
    expanded = build_L_from_expanded_form(variables)
    if grouped != expanded:
        raise TranscriptionMismatch((grouped - expanded).serialize()[:300])
    logger.debug("L has %d terms", len(expanded))
    return expanded


def _swap_permutation(variables: Sequence[str]) -> Tuple[int, ...]:
    index = {name: i for i, name in enumerate(variables)}
    perm = list(range(len(variables)))
    for a, b in (("alpha", "gamma"), ("beta", "delta")):
        perm[index[a]], perm[index[b]] = index[b], index[a]
    return tuple(perm)


def build_M(l_poly: Optional[Polynomial] = None) -> Polynomial:
    """M(alpha, beta, gamma, delta) = L(gamma, delta, alpha, beta)."""
    if l_poly is None:
        l_poly = build_L()
    return l_poly.permute(_swap_permutation(l_poly.variables))


def _e_parts():
    v = E_VARIABLES
    return {
        "N1": parse("alpha^2*(1 - gamma^2)*R + gamma^2*(1 - alpha^2)*S", v),
        "D1": parse("(1 - gamma^2)*R + (1 - alpha^2)*S", v),
        "N2": parse("beta^2*(1 - delta^2)*R + delta^2*(1 - beta^2)*S", v),
        "D2": parse("(1 - delta^2)*R + (1 - beta^2)*S", v),
        "N3": parse("R*alpha*beta*(1 - gamma*delta) + S*gamma*delta*(1 - alpha*beta)", v),
        "D3": parse("R*(1 - gamma*delta) + S*(1 - alpha*beta)", v),
    }


def e_identity_sides() -> Tuple[Polynomial, Polynomial]:
    """
    Both sides of E*D = RS(R+S)[(1-gamma*delta)*L*R + (1-alpha*beta)*M*S].

    E is the difference of the two sides of the rational inequality and
    D = D1*D2*D3^2 its common denominator, so E*D = N1*N2*D3^2 - N3^2*D1*D2.
    """
    parts = _e_parts()
    v = E_VARIABLES
    lhs = (
        parts["N1"] * parts["N2"] * parts["D3"] ** 2
        - parts["N3"] ** 2 * parts["D1"] * parts["D2"]
    )
    l_poly = build_L(v)
    m_poly = build_M(l_poly)
    r_var = Polynomial.variable(v, "R")
    s_var = Polynomial.variable(v, "S")
    rhs = (
        r_var
        * s_var
        * (r_var + s_var)
        * (
            parse("1 - gamma*delta", v) * l_poly * r_var
            + parse("1 - alpha*beta", v) * m_poly * s_var
        )
    )
    return lhs, rhs


def lemma3_sides(point: Mapping[str, Fraction]) -> Tuple[Fraction, Fraction]:
    """Exact values of the product side and the squared side at a point."""
    values = {k: v.evaluate(point) for k, v in _e_parts().items()}
    lhs = values["N1"] / values["D1"] * values["N2"] / values["D2"]
    rhs = (values["N3"] / values["D3"]) ** 2
    return lhs, rhs


def verify_E_identity(points: int = 50, seed: int = 0) -> CheckResult:
    """
    Check the six-variable factorization identity exactly.

    Random rational points are tried first; the full coefficient
    comparison runs only if they all agree.
    """
    lhs, rhs = e_identity_sides()
    rng = random.Random(seed)
    for _ in range(points):
        point = {
            name: Fraction(rng.randint(-9, 9), rng.randint(1, 9)) for name in E_VARIABLES
        }
        if lhs.evaluate(point) != rhs.evaluate(point):
            logger.error("E identity fails at %s", point)
            return CheckResult(
                name="e_identity",
                passed=False,
                detail={"point": {k: str(v) for k, v in point.items()}},
            )
    difference = lhs - rhs
    detail = {"terms": len(lhs)}
    if difference:
        detail["difference"] = [
            f"{c}*{list(e)}" for e, c in itertools.islice(difference.terms(), 5)
        ]
    return CheckResult(name="e_identity", passed=not difference, detail=detail)


def packing_substitution() -> RationalFunctionSubstitution:
    images = {}
    for source, target in zip(L_VARIABLES, P_VARIABLES):
        square = Polynomial.variable(P_VARIABLES, target) ** 2
        images[source] = (square, square + 1)
    return RationalFunctionSubstitution(images)


def clearing_factor() -> Polynomial:
    x, y, z, w = (Polynomial.variable(P_VARIABLES, v) for v in P_VARIABLES)
    return (1 + x**2) ** 4 * (1 + y**2) ** 4 * (1 + z**2) ** 3 * (1 + w**2) ** 3


def build_P(l_poly: Optional[Polynomial] = None) -> Polynomial:
    """P = L(x^2/(1+x^2), ..., w^2/(1+w^2)) * (1+x^2)^4 (1+y^2)^4 (1+z^2)^3 (1+w^2)^3."""
    if l_poly is None:
        l_poly = build_L()
    p_poly = substitute_and_clear(l_poly, packing_substitution(), clearing_factor())
    logger.info("P has %d terms", len(p_poly))
    return p_poly


def packing_certificate(p_poly: Optional[Polynomial] = None) -> Certificate:
    """P = A^2 (z^2 + w^2 + 2 z^2 w^2) + B^2 + C^2."""
    if p_poly is None:
        p_poly = build_P()
    one = Polynomial.constant(P_VARIABLES, 1)
    return make_certificate(
        p_poly,
        [
            (1, parse(WEIGHT, P_VARIABLES), parse(SQUARE_A, P_VARIABLES)),
            (1, one, parse(SQUARE_B, P_VARIABLES)),
            (1, one, parse(SQUARE_C, P_VARIABLES)),
        ],
    )


@dataclass(frozen=True)
class ProductForm:
    """Region factors times squared factors, kept unexpanded."""

    name: str
    region_factors: Tuple[Polynomial, ...]
    squared_factors: Tuple[Polynomial, ...]

    def expand(self) -> Polynomial:
        factors = list(self.region_factors) + [f * f for f in self.squared_factors]
        return reduce(mul, factors)


def l_decomposition_forms() -> Tuple[ProductForm, ProductForm, ProductForm]:
    v = L_VARIABLES

    def p(text):
        return parse(text, v)

    return (
        ProductForm("L1", (p("gamma + delta"),), (p(L1_BASE),)),
        ProductForm(
            "L2",
            (p("1 - gamma"), p("1 - delta")),
            (p("alpha*beta - 1"), p("alpha*delta - beta*gamma")),
        ),
        ProductForm(
            "L3",
            (p("1 - gamma"), p("1 - delta")),
            (p("alpha - beta"), p("alpha*beta - gamma*delta")),
        ),
    )


def build_L_decomposition() -> Tuple[Polynomial, Polynomial, Polynomial]:
    l1, l2, l3 = (form.expand() for form in l_decomposition_forms())
    return l1, l2, l3


@dataclass(frozen=True)
class PackingPolynomials:
    """Every concrete polynomial of the packing argument."""

    L: Polynomial
    M: Polynomial
    P: Polynomial
    A: Polynomial
    B: Polynomial
    C: Polynomial
    weight: Polynomial
    L1: Polynomial
    L2: Polynomial
    L3: Polynomial

    def checks(self) -> List[CheckResult]:
        """The three exact identities tying the parts together."""
        swap = self.L.permute(_swap_permutation(self.L.variables))
        certificate = self.A * self.A * self.weight + self.B * self.B + self.C * self.C
        return [
            CheckResult(name="m_is_swap_of_l", passed=self.M == swap),
            CheckResult(name="l_decomposition", passed=self.L1 + self.L2 + self.L3 == self.L),
            CheckResult(name="p_certificate", passed=certificate == self.P),
        ]


def build_packing_polynomials() -> PackingPolynomials:
    l_poly = build_L()
    l1, l2, l3 = build_L_decomposition()
    return PackingPolynomials(
        L=l_poly,
        M=build_M(l_poly),
        P=build_P(l_poly),
        A=parse(SQUARE_A, P_VARIABLES),
        B=parse(SQUARE_B, P_VARIABLES),
        C=parse(SQUARE_C, P_VARIABLES),
        weight=parse(WEIGHT, P_VARIABLES),
        L1=l1,
        L2=l2,
        L3=l3,
    )


def check_invariance_P(p_poly: Polynomial) -> CheckResult:
    """Swap (x,y,z,w) -> (y,x,w,z) and all sixteen sign patterns."""
    swap_ok = p_poly.permute((1, 0, 3, 2)) == p_poly
    failing = [
        list(signs)
        for signs in itertools.product((1, -1), repeat=p_poly.nvars)
        if p_poly.flip_signs(signs) != p_poly
    ]
    return CheckResult(
        name="p_invariance",
        passed=swap_ok and not failing,
        detail={"swap": swap_ok, "failing_signs": failing},
    )


@dataclass(frozen=True)
class QuarticExample:
    """Two-variable quartic with a published Gram matrix and decomposition."""

    target: Polynomial
    basis: Tuple[Tuple[int, int], ...]
    gram: Tuple[Tuple[Fraction, ...], ...]
    certificate: Certificate


def quartic_example() -> QuarticExample:
    v = ("x", "y")
    target = parse("2*x^4 + 2*x^3*y - x^2*y^2 + 5*y^4", v)
    gram = tuple(
        tuple(Fraction(c) for c in row) for row in ((2, -3, 1), (-3, 5, 0), (1, 0, 5))
    )
    one = Polynomial.constant(v, 1)
    certificate = make_certificate(
        target,
        [
            (Fraction(1, 2), one, parse("2*x^2 - 3*y^2 + x*y", v)),
            (Fraction(1, 2), one, parse("y^2 + 3*x*y", v)),
        ],
    )
    return QuarticExample(target, ((2, 0), (0, 2), (1, 1)), gram, certificate)


# Numeric sampling


def _clamp(value):
    if value < 0:
        return mpf(0)
    if value > 1:
        return mpf(1)
    return value


def _arc(u, v, r):
    return asin(_clamp(sqrt(u * v / ((r + u) * (r + v)))))


def theorem1_sides(a, b, c, d, R, S):
    """Both sides of the arcsine inequality; the left side is the smaller."""
    lhs = R * _arc(a, b, R) + S * _arc(c, d, S)
    rhs = (R + S) * _arc(a + c, b + d, R + S)
    return lhs, rhs


def _root(u, v, r):
    return _clamp(sqrt(u * v / ((r + u) * (r + v))))


def lemma2_sides(a, b, c, d, R, S):
    """Both sides of the reciprocal-root inequality."""
    total = R + S
    lhs = (R / total) / (1 - _root(a, b, R)) + (S / total) / (1 - _root(c, d, S))
    rhs = 1 / (1 - _root(a + c, b + d, total))
    return lhs, rhs


def lemma1_condition(case: str, x):
    """
    f''(1 - f^2) + f (f')^2 for the two worked choices of f.

    ``sine`` is identically zero on [0, pi/2]; ``reciprocal`` (f = 1 - 1/x)
    equals 1/x^5 - 3/x^4, negative on [1, inf).
    """
    x = mpf(x)
    if case == "sine":
        f, f1, f2 = sin(x), cos(x), -sin(x)
    elif case == "reciprocal":
        f, f1, f2 = 1 - 1 / x, 1 / x**2, -2 / x**3
    else:
        raise ValueError(f"Unknown case {case!r}")
    return f2 * (1 - f**2) + f * f1**2


def _sample(
    name: str,
    sides: Callable,
    count: int,
    seed: int,
    config: Settings,
    tolerance: float = 1e-12,
) -> SampleReport:
    if count <= 0:
        return SampleReport(name=name, count=0, seed=seed, tolerance=tolerance)
    shards = math.ceil(count / config.shard_size)
    children = np.random.SeedSequence(seed).spawn(shards)
    best = None
    worst = None
    with mp.workprec(config.sample_precision_bits):
        for index, child in enumerate(children):
            rng = np.random.default_rng(child)
            size = min(config.shard_size, count - index * config.shard_size)
            draws = 10.0 ** rng.uniform(-3.0, 3.0, size=(size, 6))
            for row in draws:
                lhs, rhs = sides(*(mpf(float(v)) for v in row))
                slack = rhs - lhs
                if best is None or slack < best:
                    best, worst = slack, row
            logger.debug("%s shard %d done, min slack %s", name, index, best)
    logger.info("%s: %d samples, min slack %.3e", name, count, float(best))
    return SampleReport(
        name=name,
        count=count,
        seed=seed,
        min_slack=float(best),
        worst=[float(v) for v in worst],
        tolerance=tolerance,
    )


def sample_theorem1(count: int, seed: int, config: Optional[Settings] = None) -> SampleReport:
    """Sample (a, b, c, d, R, S) log-uniformly in [1e-3, 1e3] and report min(rhs - lhs)."""
    return _sample("theorem1", theorem1_sides, count, seed, config or settings)


def sample_lemma2(count: int, seed: int, config: Optional[Settings] = None) -> SampleReport:
    return _sample("lemma2", lemma2_sides, count, seed, config or settings)


def evaluate_float(p: Polynomial, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Evaluate at many float points at once.

    Returns:
        Values and the matching sums of absolute term values, the scale
        for relative tolerances.
    """
    exponents = np.array([e for e in p.coefficients], dtype=float)
    coeffs = np.array([float(c) for c in p.coefficients.values()])
    monomials = np.prod(points[:, None, :] ** exponents[None, :, :], axis=2)
    terms = monomials * coeffs[None, :]
    return terms.sum(axis=1), np.abs(terms).sum(axis=1)


def sample_nonnegativity(
    p: Polynomial, count: int, seed: int, tolerance: float = 1e-9
) -> SampleReport:
    """Relative slack p(pt) / sum|terms(pt)| at standard-normal points."""
    if count <= 0:
        return SampleReport(name="p_nonnegativity", count=0, seed=seed, tolerance=tolerance)
    rng = np.random.default_rng(seed)
    points = rng.standard_normal(size=(count, p.nvars))
    values, scale = evaluate_float(p, points)
    relative = values / np.where(scale > 0, scale, 1.0)
    worst = int(np.argmin(relative))
    return SampleReport(
        name="p_nonnegativity",
        count=count,
        seed=seed,
        min_slack=float(relative[worst]),
        worst=[float(v) for v in points[worst]],
        tolerance=tolerance,
    )


def sample_decomposition(count: int, seed: int, region: str = "cube") -> SampleReport:
    """
    Minimum of L1, L2, L3 at random points.

    ``cube`` draws from (0,1)^4; ``region`` draws alpha, beta from a
    normal law and (gamma, delta) from {gamma + delta >= 0,
    (1 - gamma)(1 - delta) >= 0} by rejection.
    """
    if count <= 0:
        return SampleReport(name=f"l_decomposition_{region}", count=0, seed=seed, tolerance=1e-9)
    rng = np.random.default_rng(seed)
    if region == "cube":
        points = rng.uniform(0.0, 1.0, size=(count, 4))
    elif region == "region":
        chunks = []
        have = 0
        while have < count:
            gd = rng.uniform(-3.0, 3.0, size=(2 * count, 2))
            keep = (gd[:, 0] + gd[:, 1] >= 0) & ((1 - gd[:, 0]) * (1 - gd[:, 1]) >= 0)
            chunks.append(gd[keep])
            have += int(keep.sum())
        gd = np.concatenate(chunks)[:count]
        ab = rng.standard_normal(size=(count, 2))
        points = np.hstack([ab, gd])
    else:
        raise ValueError(f"Unknown region {region!r}")
    minima = np.full(count, np.inf)
    for part in build_L_decomposition():
        values, scale = evaluate_float(part, points)
        relative = values / np.where(scale > 0, scale, 1.0)
        minima = np.minimum(minima, relative)
    worst = int(np.argmin(minima))
    return SampleReport(
        name=f"l_decomposition_{region}",
        count=count,
        seed=seed,
        min_slack=float(minima[worst]),
        worst=[float(v) for v in points[worst]],
        tolerance=1e-9,
    )
