"""
Polynomial arithmetic, parsing and substitution tests.
"""
import random
from fractions import Fraction

import pytest
import sympy

from core.exceptions import (
    MissingValueError,
    ParseError,
    PolynomialError,
    ResidualDenominatorError,
    UnknownVariableError,
    VariableMismatchError,
)
from sos.poly import (
    Polynomial,
    RationalFunctionSubstitution,
    degree_profile,
    divide_exact,
    evaluate,
    group_degree,
    parse,
    power,
    substitute_and_clear,
)

XY = ("x", "y")
XYZ = ("x", "y", "z")


def random_polynomial(rng, variables, terms=4, degree=3):
    coefficients = {}
    for _ in range(terms):
        exponent = tuple(rng.randint(0, degree) for _ in variables)
        coefficients[exponent] = Fraction(rng.randint(-9, 9), rng.randint(1, 4))
    return Polynomial(variables, coefficients)


def as_sympy(p):
    symbols = sympy.symbols(" ".join(p.variables))
    namespace = dict(zip(p.variables, symbols))
    return sympy.expand(sympy.sympify(p.serialize().replace("^", "**"), locals=namespace))


def test_parse_canonical_order():
    """Test serialization in descending graded-lex order."""
    p = parse("5*y^4 - x^2*y^2 + 2*x^3*y + 2*x^4", XY)
    assert p.serialize() == "2*x^4 + 2*x^3*y - x^2*y^2 + 5*y^4"
    assert len(p) == 4


def test_parse_expands_products_and_powers():
    """Test parenthesised products and powers are expanded."""
    p = parse("(x + y)^2 - (x - y)*(x + y)", XY)
    assert p == parse("2*x*y + 2*y^2", XY)


def test_parse_rationals_and_unicode_minus():
    """Test rational literals and the unicode minus sign."""
    p = parse("1/2*x − 3/4", XY)
    assert p.coefficient((1, 0)) == Fraction(1, 2)
    assert p.coefficient((0, 0)) == Fraction(-3, 4)


def test_parse_coefficient_without_star():
    """Test a rational coefficient may be followed directly by a factor."""
    assert parse("2x^2 + 3 y", XY) == parse("2*x^2 + 3*y", XY)
    assert parse("2(x+y)^2", XY) == parse("2*x^2 + 4*x*y + 2*y^2", XY)
    assert parse("1/2x*y", XY) == parse("1/2*x*y", XY)


def test_parse_serialize_round_trip():
    """Test parse(serialize(p)) returns p."""
    rng = random.Random(7)
    for _ in range(50):
        p = random_polynomial(rng, XYZ)
        assert parse(p.serialize(), XYZ) == p


@pytest.mark.parametrize(
    "text",
    ["x**2", "2 3", "x y", "2x y", "x^1.5", "1/0", "(x + y", "x +", "0.5*x", "x^2/3", ""],
)
def test_parse_errors(text):
    """Test malformed input raises ParseError."""
    with pytest.raises(ParseError):
        parse(text, XY)


def test_parse_error_position():
    """Test the error reports where parsing stopped."""
    with pytest.raises(ParseError) as info:
        parse("x + y $", XY)
    assert info.value.position == 6
    assert info.value.exit_code == 3


def test_unknown_variable():
    """Test identifiers outside the context are rejected."""
    with pytest.raises(UnknownVariableError):
        parse("x + z", XY)


def test_zero_polynomial():
    """Test the zero polynomial."""
    zero = parse("x - x", XY)
    assert zero.is_zero()
    assert zero.serialize() == "0"
    profile = degree_profile(zero)
    assert profile.total == float("-inf")
    assert all(d == float("-inf") for d in profile.per_variable)


def test_degree_profile():
    """Test total and per-variable degrees."""
    profile = degree_profile(parse("x^3*y + y^5 + x", XY))
    assert profile.total == 5
    assert profile.per_variable == (3, 5)


def test_group_degree():
    """Test joint degree over a subset of variables."""
    p = parse("x^2*y^2*z + x^3*z^4", XYZ)
    assert group_degree(p, ("x", "y")) == 4
    assert group_degree(p, ("z",)) == 4
    with pytest.raises(UnknownVariableError):
        group_degree(p, ("w",))


def test_ring_laws():
    """Test commutativity, associativity and distributivity on random inputs."""
    rng = random.Random(11)
    for _ in range(1000):
        p, q, r = (random_polynomial(rng, XYZ) for _ in range(3))
        assert p + q == q + p
        assert p * q == q * p
        assert (p + q) + r == p + (q + r)
        assert (p * q) * r == p * (q * r)
        assert p * (q + r) == p * q + p * r
        assert p - p == 0


def test_evaluation_is_a_homomorphism():
    """Test evaluate(p*q) == evaluate(p)*evaluate(q) at rational points."""
    rng = random.Random(13)
    for _ in range(1000):
        p, q = random_polynomial(rng, XYZ), random_polynomial(rng, XYZ)
        point = {v: Fraction(rng.randint(-5, 5), rng.randint(1, 5)) for v in XYZ}
        assert evaluate(p * q, point) == evaluate(p, point) * evaluate(q, point)
        assert evaluate(p + q, point) == evaluate(p, point) + evaluate(q, point)


def test_multiplication_matches_sympy():
    """Test products against sympy expansion."""
    rng = random.Random(17)
    for _ in range(25):
        p, q = random_polynomial(rng, XYZ), random_polynomial(rng, XYZ)
        assert sympy.expand(as_sympy(p * q) - as_sympy(p) * as_sympy(q)) == 0


def test_power():
    """Test repeated squaring against repeated multiplication."""
    p = parse("x - 2*y + 1", XY)
    assert power(p, 0) == 1
    assert power(p, 5) == p * p * p * p * p
    with pytest.raises(PolynomialError):
        power(p, -1)


def test_evaluate_sequence_and_missing():
    """Test evaluation by sequence and the missing-value error."""
    p = parse("x^2 + 1/2*y", XY)
    assert p.evaluate([Fraction(1, 3), 4]) == Fraction(1, 9) + 2
    with pytest.raises(MissingValueError):
        p.evaluate({"x": 1})


def test_variable_mismatch():
    """Test arithmetic across contexts is refused."""
    with pytest.raises(VariableMismatchError):
        parse("x", XY) + parse("x", XYZ)


def test_permute_flip_rename():
    """Test variable permutation, sign flips and renaming."""
    p = parse("x^2*y + 3*y", XY)
    assert p.permute((1, 0)) == parse("y^2*x + 3*x", XY)
    assert p.flip_signs((1, -1)) == -p
    assert p.flip_signs((-1, 1)) == p
    assert p.rename(("a", "b")) == parse("a^2*b + 3*b", ("a", "b"))


def test_divide_exact():
    """Test exact division and the not-divisible error."""
    x2y2 = parse("x^2 - y^2", XY)
    assert divide_exact(x2y2, parse("x - y", XY)) == parse("x + y", XY)
    with pytest.raises(PolynomialError) as info:
        divide_exact(parse("x^2 + 1", XY), parse("x", XY))
    assert "residual" in info.value.details


def test_substitute_and_clear():
    """Test a^2 + 1 at a = x^2/(1+x^2), cleared by (1+x^2)^2."""
    x = Polynomial.variable(("x",), "x")
    subst = RationalFunctionSubstitution({"a": (x**2, 1 + x**2)})
    result = substitute_and_clear(parse("a^2 + 1", ("a",)), subst, (1 + x**2) ** 2)
    assert result == parse("2*x^4 + 2*x^2 + 1", ("x",))


def test_substitute_and_clear_insufficient_factor():
    """Test a clearing factor that leaves a denominator."""
    x = Polynomial.variable(("x",), "x")
    subst = RationalFunctionSubstitution({"a": (x**2, 1 + x**2)})
    with pytest.raises(ResidualDenominatorError):
        substitute_and_clear(parse("a", ("a",)), subst, Polynomial.constant(("x",), 1))


def test_substitute_and_clear_matches_evaluation():
    """Test random substitutions against evaluation of the rational function."""
    rng = random.Random(19)
    x, y = (Polynomial.variable(XY, v) for v in XY)
    subst = RationalFunctionSubstitution(
        {"a": (x**2, 1 + x**2), "b": (y**2 - x, 1 + y**2)}
    )
    clearing = (1 + x**2) ** 3 * (1 + y**2) ** 3
    for _ in range(100):
        p = random_polynomial(rng, ("a", "b"))
        result = substitute_and_clear(p, subst, clearing)
        x0 = Fraction(rng.randint(-7, 7), rng.randint(1, 5))
        y0 = Fraction(rng.randint(-7, 7), rng.randint(1, 5))
        a0 = x0**2 / (1 + x0**2)
        b0 = (y0**2 - x0) / (1 + y0**2)
        expected = clearing.evaluate([x0, y0]) * p.evaluate([a0, b0])
        assert result.evaluate([x0, y0]) == expected
