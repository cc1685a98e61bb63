"""
Exact sparse multivariate polynomials over the rationals.

A ``Polynomial`` is an immutable map from exponent tuples to nonzero
``Fraction`` coefficients inside an explicit, ordered variable context.
Canonical order is graded-lexicographic, highest term first.
"""

from __future__ import annotations

import logging
import operator
import re
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Dict, Iterator, Mapping, Optional, Sequence, Tuple, Union

from core.exceptions import (
    MissingValueError,
    ParseError,
    PolynomialError,
    ResidualDenominatorError,
    UnknownVariableError,
    VariableMismatchError,
)

logger = logging.getLogger(__name__)

Exponent = Tuple[int, ...]
Scalar = Union[int, Fraction]

NEG_INF = float("-inf")


def monomial_key(exponent: Exponent) -> tuple:
    """Sort key putting exponents in descending graded-lex order."""
    return (-sum(exponent), tuple(-k for k in exponent))


def add_exponents(a: Exponent, b: Exponent) -> Exponent:
    return tuple(map(operator.add, a, b))


class Polynomial:
    """Sparse polynomial with rational coefficients."""

    __slots__ = ("_variables", "_terms", "_hash")

    def __init__(
        self,
        variables: Sequence[str],
        terms: Optional[Mapping[Sequence[int], Scalar]] = None,
    ):
        variables = tuple(variables)
        if len(set(variables)) != len(variables):
            raise PolynomialError(
                "Duplicate variable names", {"variables": list(variables)}
            )
        n = len(variables)
        clean: Dict[Exponent, Fraction] = {}
        for exponent, coeff in (terms or {}).items():
            exponent = tuple(int(k) for k in exponent)
            if len(exponent) != n or any(k < 0 for k in exponent):
                raise PolynomialError(
                    "Exponent does not fit the variable context",
                    {"exponent": list(exponent), "variables": list(variables)},
                )
            coeff = Fraction(coeff)
            if coeff:
                clean[exponent] = clean.get(exponent, Fraction(0)) + coeff
        self._variables = variables
        self._terms = {e: c for e, c in clean.items() if c}
        self._hash = None

    @classmethod
    def _make(cls, variables: Tuple[str, ...], terms: Dict[Exponent, Fraction]):
        # Trusted constructor: exponents valid, no zero coefficients.
        poly = object.__new__(cls)
        poly._variables = variables
        poly._terms = terms
        poly._hash = None
        return poly

    # Constructors

    @classmethod
    def zero(cls, variables: Sequence[str]) -> "Polynomial":
        return cls(variables)

    @classmethod
    def constant(cls, variables: Sequence[str], value: Scalar) -> "Polynomial":
        variables = tuple(variables)
        return cls(variables, {(0,) * len(variables): value})

    @classmethod
    def variable(cls, variables: Sequence[str], name: str) -> "Polynomial":
        variables = tuple(variables)
        if name not in variables:
            raise UnknownVariableError(name, variables)
        exponent = tuple(1 if v == name else 0 for v in variables)
        return cls(variables, {exponent: 1})

    @classmethod
    def monomial(
        cls, variables: Sequence[str], exponent: Sequence[int], coeff: Scalar = 1
    ) -> "Polynomial":
        return cls(variables, {tuple(exponent): coeff})

    @classmethod
    def from_text(cls, text: str, variables: Sequence[str]) -> "Polynomial":
        return parse(text, variables)

    # Accessors

    @property
    def variables(self) -> Tuple[str, ...]:
        return self._variables

    @property
    def nvars(self) -> int:
        return len(self._variables)

    @property
    def coefficients(self) -> Mapping[Exponent, Fraction]:
        return MappingProxyType(self._terms)

    @property
    def support(self) -> frozenset:
        return frozenset(self._terms)

    def coefficient(self, exponent: Sequence[int]) -> Fraction:
        return self._terms.get(tuple(exponent), Fraction(0))

    def terms(self) -> Iterator[Tuple[Exponent, Fraction]]:
        """Terms in canonical (descending graded-lex) order."""
        for exponent in sorted(self._terms, key=monomial_key):
            yield exponent, self._terms[exponent]

    def is_zero(self) -> bool:
        return not self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def leading_term(self) -> Tuple[Exponent, Fraction]:
        if not self._terms:
            raise PolynomialError("Zero polynomial has no leading term")
        exponent = min(self._terms, key=monomial_key)
        return exponent, self._terms[exponent]

    # Arithmetic

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other._variables != self._variables:
                raise VariableMismatchError(self._variables, other._variables)
            return other
        if isinstance(other, (int, Fraction)):
            return Polynomial.constant(self._variables, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self._terms)
        for exponent, coeff in other._terms.items():
            value = terms.get(exponent, 0) + coeff
            if value:
                terms[exponent] = value
            else:
                terms.pop(exponent, None)
        return Polynomial._make(self._variables, terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._make(
            self._variables, {e: -c for e, c in self._terms.items()}
        )

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms: Dict[Exponent, Fraction] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                exponent = add_exponents(e1, e2)
                terms[exponent] = terms.get(exponent, 0) + c1 * c2
        return Polynomial._make(
            self._variables, {e: c for e, c in terms.items() if c}
        )

    def __rmul__(self, other):
        return self.__mul__(other)

    def scale(self, factor: Scalar) -> "Polynomial":
        factor = Fraction(factor)
        if not factor:
            return Polynomial.zero(self._variables)
        return Polynomial._make(
            self._variables, {e: c * factor for e, c in self._terms.items()}
        )

    def __pow__(self, k: int) -> "Polynomial":
        if not isinstance(k, int) or k < 0:
            raise PolynomialError("Exponent must be a nonnegative integer", {"k": k})
        result = Polynomial.constant(self._variables, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return (
                self._variables == other._variables and self._terms == other._terms
            )
        if isinstance(other, (int, Fraction)):
            return self._terms == Polynomial.constant(self._variables, other)._terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self._variables, frozenset(self._terms.items())))
        return self._hash

    # Evaluation and transformations

    def evaluate(self, point):
        """
        Evaluate at a point.

        Args:
            point: mapping from variable name to value, or a sequence in
                variable order. Values may be ints, Fractions or floats.

        Returns:
            The value, exact when the point is rational.

        Raises:
            MissingValueError: If a variable has no value.
        """
        if isinstance(point, Mapping):
            missing = [v for v in self._variables if v not in point]
            if missing:
                raise MissingValueError(missing)
            values = [point[v] for v in self._variables]
        else:
            values = list(point)
            if len(values) != len(self._variables):
                raise MissingValueError(list(self._variables[len(values):]))
        total = 0
        for exponent, coeff in self._terms.items():
            term = coeff
            for value, k in zip(values, exponent):
                if k:
                    term = term * value**k
            total = total + term
        return total

    def permute(self, perm: Sequence[int]) -> "Polynomial":
        """
        Return p(x_{perm[0]}, ..., x_{perm[n-1]}).

        Variable i of ``self`` is replaced by variable ``perm[i]``.
        """
        perm = tuple(perm)
        if sorted(perm) != list(range(self.nvars)):
            raise PolynomialError("Not a permutation", {"perm": list(perm)})
        terms = {}
        for exponent, coeff in self._terms.items():
            image = [0] * self.nvars
            for i, k in enumerate(exponent):
                image[perm[i]] = k
            terms[tuple(image)] = coeff
        return Polynomial._make(self._variables, terms)

    def flip_signs(self, signs: Sequence[int]) -> "Polynomial":
        """Return p(s_0 x_0, ..., s_{n-1} x_{n-1}) for signs s_i in {1, -1}."""
        signs = tuple(signs)
        if len(signs) != self.nvars or any(s not in (1, -1) for s in signs):
            raise PolynomialError("Signs must be +1 or -1 per variable", {"signs": list(signs)})
        terms = {}
        for exponent, coeff in self._terms.items():
            odd = sum(k for s, k in zip(signs, exponent) if s < 0) % 2
            terms[exponent] = -coeff if odd else coeff
        return Polynomial._make(self._variables, terms)

    def rename(self, names: Sequence[str]) -> "Polynomial":
        """Same coefficients in a new variable context of equal size."""
        names = tuple(names)
        if len(names) != self.nvars:
            raise VariableMismatchError(self._variables, names)
        return Polynomial(names, self._terms)

    def substitute(self, images: Mapping[str, "Polynomial"]) -> "Polynomial":
        """Polynomial composition; unnamed variables must be absent."""
        targets = {img.variables for img in images.values()}
        if len(targets) != 1:
            raise PolynomialError("Images must share one variable context")
        target = targets.pop()
        missing = [v for v in self._variables if v not in images]
        used = {v for e in self._terms for v, k in zip(self._variables, e) if k}
        if used & set(missing):
            raise MissingValueError(sorted(used & set(missing)))
        powers: Dict[Tuple[str, int], Polynomial] = {}
        result = Polynomial.zero(target)
        for exponent, coeff in self._terms.items():
            term = Polynomial.constant(target, coeff)
            for name, k in zip(self._variables, exponent):
                if k:
                    key = (name, k)
                    if key not in powers:
                        powers[key] = images[name] ** k
                    term = term * powers[key]
            result = result + term
        return result

    def serialize(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for exponent, coeff in self.terms():
            mono = "*".join(
                name if k == 1 else f"{name}^{k}"
                for name, k in zip(self._variables, exponent)
                if k
            )
            magnitude = abs(coeff)
            if not mono:
                body = str(magnitude)
            elif magnitude == 1:
                body = mono
            else:
                body = f"{magnitude}*{mono}"
            if not parts:
                parts.append(f"-{body}" if coeff < 0 else body)
            else:
                parts.append(f"- {body}" if coeff < 0 else f"+ {body}")
        return " ".join(parts)

    def __str__(self) -> str:
        return self.serialize()

    def __repr__(self) -> str:
        return f"Polynomial({list(self._variables)!r}, {self.serialize()!r})"


# Module-level operations


def add(p: Polynomial, q: Polynomial) -> Polynomial:
    return p + q


def mul(p: Polynomial, q: Polynomial) -> Polynomial:
    return p * q


def power(p: Polynomial, k: int) -> Polynomial:
    return p**k


def evaluate(p: Polynomial, point):
    return p.evaluate(point)


@dataclass(frozen=True)
class DegreeProfile:
    total: Union[int, float]
    per_variable: Tuple[Union[int, float], ...]


def degree_profile(p: Polynomial) -> DegreeProfile:
    """Total and per-variable degrees; -inf for the zero polynomial."""
    if p.is_zero():
        return DegreeProfile(NEG_INF, (NEG_INF,) * p.nvars)
    support = p.support
    total = max(sum(e) for e in support)
    per_variable = tuple(max(e[i] for e in support) for i in range(p.nvars))
    return DegreeProfile(total, per_variable)


def group_degree(p: Polynomial, names: Sequence[str]) -> Union[int, float]:
    """Joint degree in a subset of the variables."""
    unknown = [n for n in names if n not in p.variables]
    if unknown:
        raise UnknownVariableError(unknown[0], p.variables)
    if p.is_zero():
        return NEG_INF
    idx = [p.variables.index(n) for n in names]
    return max(sum(e[i] for i in idx) for e in p.support)


def divide_exact(p: Polynomial, q: Polynomial) -> Polynomial:
    """
    Exact quotient p / q.

    Raises:
        PolynomialError: If q does not divide p; details carry the residual.
    """
    if p.variables != q.variables:
        raise VariableMismatchError(p.variables, q.variables)
    if q.is_zero():
        raise PolynomialError("Division by the zero polynomial")
    lead_e, lead_c = q.leading_term()
    remainder = dict(p.coefficients)
    quotient: Dict[Exponent, Fraction] = {}
    while remainder:
        r_e = min(remainder, key=monomial_key)
        shift = tuple(a - b for a, b in zip(r_e, lead_e))
        if any(k < 0 for k in shift):
            residual = Polynomial._make(p.variables, remainder)
            raise PolynomialError(
                "Polynomial is not divisible",
                {"residual": residual.serialize()[:200]},
            )
        factor = remainder[r_e] / lead_c
        quotient[shift] = quotient.get(shift, 0) + factor
        for e, c in q.coefficients.items():
            target = add_exponents(e, shift)
            value = remainder.get(target, 0) - factor * c
            if value:
                remainder[target] = value
            else:
                remainder.pop(target, None)
    return Polynomial._make(p.variables, {e: c for e, c in quotient.items() if c})


@dataclass(frozen=True)
class RationalFunctionSubstitution:
    """Per-variable images num/den, all in one target variable context."""

    images: Mapping[str, Tuple[Polynomial, Polynomial]]

    def __post_init__(self):
        contexts = set()
        for name, (num, den) in self.images.items():
            if den.is_zero():
                raise PolynomialError(
                    "Substitution denominator is zero", {"variable": name}
                )
            contexts.add(num.variables)
            contexts.add(den.variables)
        if len(contexts) > 1:
            raise PolynomialError("Substitution images use different contexts")

    @property
    def target_variables(self) -> Tuple[str, ...]:
        num, _ = next(iter(self.images.values()))
        return num.variables


def substitute_and_clear(
    p: Polynomial,
    subst: RationalFunctionSubstitution,
    clearing_factor: Polynomial,
) -> Polynomial:
    """
    Return p∘subst × clearing_factor as an exact polynomial.

    The substitution is carried out over a common denominator
    D = Π den_i^{deg_i(p)}; the result is clearing_factor·N / D.

    Raises:
        ResidualDenominatorError: If D does not divide out.
    """
    target = subst.target_variables
    if clearing_factor.variables != target:
        raise VariableMismatchError(target, clearing_factor.variables)
    missing = [v for v in p.variables if v not in subst.images]
    if missing:
        raise MissingValueError(missing)
    if p.is_zero():
        return Polynomial.zero(target)

    profile = degree_profile(p)
    nums = [subst.images[v][0] for v in p.variables]
    dens = [subst.images[v][1] for v in p.variables]

    cache: Dict[Tuple[int, int, int], Polynomial] = {}

    def pw(which: int, i: int, k: int) -> Polynomial:
        key = (which, i, k)
        if key not in cache:
            base = nums[i] if which == 0 else dens[i]
            cache[key] = base**k
        return cache[key]

    common = Polynomial.constant(target, 1)
    for i, top in enumerate(profile.per_variable):
        common = common * pw(1, i, top)

    numerator = Polynomial.zero(target)
    for exponent, coeff in p.coefficients.items():
        term = Polynomial.constant(target, coeff)
        for i, k in enumerate(exponent):
            top = profile.per_variable[i]
            if k:
                term = term * pw(0, i, k)
            if top - k:
                term = term * pw(1, i, top - k)
        numerator = numerator + term

    try:
        return divide_exact(clearing_factor, common) * numerator
    except PolynomialError:
        logger.debug("Clearing factor not a multiple of the denominator; dividing product")
    try:
        return divide_exact(clearing_factor * numerator, common)
    except PolynomialError as exc:
        raise ResidualDenominatorError(
            exc.details.get("residual", ""),
            {"denominator": common.serialize()[:200]},
        ) from exc


# Parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?)|(?P<name>[^\W\d]\w*)|(?P<op>[-+*/^()−]))"
)


class _Parser:
    """Recursive-descent parser for the polynomial text grammar."""

    def __init__(self, text: str, variables: Tuple[str, ...]):
        self.text = text
        self.variables = variables
        self.tokens = self._tokenize(text)
        self.pos = 0

    def _tokenize(self, text):
        tokens = []
        i = 0
        while i < len(text):
            if text[i].isspace():
                i += 1
                continue
            match = _TOKEN.match(text, i)
            if not match or match.end() == i:
                raise ParseError(f"Unexpected character {text[i]!r}", i, text)
            kind = match.lastgroup
            value = match.group(kind)
            if value == "−":
                value = "-"
            tokens.append((kind, value, match.start(kind)))
            i = match.end()
        tokens.append(("end", "", len(text)))
        return tokens

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def expect_op(self, op):
        kind, value, at = self.take()
        if kind != "op" or value != op:
            raise ParseError(f"Expected {op!r}", at, self.text)

    def parse(self) -> Polynomial:
        poly = self.expression()
        kind, value, at = self.peek()
        if kind != "end":
            raise ParseError(f"Unexpected {value!r}", at, self.text)
        return poly

    def expression(self) -> Polynomial:
        sign = 1
        kind, value, _ = self.peek()
        if kind == "op" and value in "+-":
            self.take()
            sign = -1 if value == "-" else 1
        result = self.term().scale(sign)
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.take()
                term = self.term()
                result = result + term if value == "+" else result - term
            else:
                return result

    def term(self) -> Polynomial:
        start = self.pos
        result = self.factor()
        # "2x^2" and "2(x+y)": a bare rational may be followed by a factor directly
        coefficient = all(
            kind == "num" or value == "/" for kind, value, _ in self.tokens[start:self.pos]
        )
        kind, value, _ = self.peek()
        if coefficient and (kind == "name" or (kind == "op" and value == "(")):
            result = result * self.factor()
        while True:
            kind, value, at = self.peek()
            if kind == "op" and value == "*":
                self.take()
                result = result * self.factor()
            elif kind == "op" and value == "/":
                raise ParseError("Division is only allowed inside a rational", at, self.text)
            elif kind in ("name", "num") or (kind == "op" and value == "("):
                raise ParseError("Missing '*' between factors", at, self.text)
            else:
                return result

    def factor(self) -> Polynomial:
        kind, value, at = self.take()
        if kind == "num":
            if "." in value:
                raise ParseError("Decimal literal; write a rational p/q", at, self.text)
            number = Fraction(int(value))
            nk, nv, _ = self.peek()
            if nk == "op" and nv == "/":
                self.take()
                dk, dv, dat = self.take()
                if dk != "num" or "." in dv or int(dv) == 0:
                    raise ParseError("Denominator must be a positive integer", dat, self.text)
                number = number / int(dv)
            base = Polynomial.constant(self.variables, number)
        elif kind == "name":
            if value not in self.variables:
                raise UnknownVariableError(value, self.variables, at)
            base = Polynomial.variable(self.variables, value)
        elif kind == "op" and value == "(":
            base = self.expression()
            self.expect_op(")")
        else:
            raise ParseError(f"Unexpected {value or 'end of input'!r}", at, self.text)
        nk, nv, _ = self.peek()
        if nk == "op" and nv == "^":
            self.take()
            ek, ev, eat = self.take()
            if ek != "num" or "." in ev:
                raise ParseError("Exponent must be a positive integer", eat, self.text)
            after_kind, after_value, after_at = self.peek()
            if after_kind == "op" and after_value == "/":
                raise ParseError("Exponent must be a positive integer", after_at, self.text)
            k = int(ev)
            if k == 0:
                raise ParseError("Exponent must be a positive integer", eat, self.text)
            base = base**k
        return base


def parse(text: str, variables: Sequence[str]) -> Polynomial:
    """
    Parse a polynomial expression over the given ordered variables.

    Raises:
        ParseError: On syntax errors, with the character position.
        UnknownVariableError: On identifiers outside ``variables``.
    """
    variables = tuple(variables)
    return _Parser(text, variables).parse()
