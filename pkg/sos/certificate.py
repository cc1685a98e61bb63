"""
Sum-of-squares certificates and their text file format.

File layout::

    # comment lines are ignored
    variables: x, y
    target: 2*x^4 + 2*x^3*y - x^2*y^2 + 5*y^4
    1/2 ; 1 ; 2*x^2 + x*y - 3*y^2
    1/2 ; 1 ; 3*x*y + y^2

Each term line is ``coefficient ; multiplier ; square_root``.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence, Tuple, Union

from core.exceptions import PolynomialError, StructuralFailure
from sos.poly import Polynomial, parse

logger = logging.getLogger(__name__)


def is_manifestly_nonnegative(p: Polynomial) -> bool:
    """Even exponents and nonnegative coefficients only."""
    return all(
        coeff >= 0 and all(k % 2 == 0 for k in exponent)
        for exponent, coeff in p.coefficients.items()
    )


@dataclass(frozen=True)
class CertificateTerm:
    coefficient: Fraction
    multiplier: Polynomial
    square_root: Polynomial

    def expand(self) -> Polynomial:
        return (self.multiplier * self.square_root * self.square_root).scale(
            self.coefficient
        )


@dataclass(frozen=True)
class Certificate:
    """Weighted sum of squares claimed to equal ``target``."""

    target: Polynomial
    terms: Tuple[CertificateTerm, ...]

    @property
    def variables(self) -> Tuple[str, ...]:
        return self.target.variables

    @property
    def square_count(self) -> int:
        return len(self.terms)

    @property
    def plain_square_count(self) -> int:
        """
        Squares after splitting each manifest multiplier into its monomials.

        A multiplier c*m^2 times s^2 is the plain square c*(m*s)^2.
        """
        count = 0
        for term in self.terms:
            if is_manifestly_nonnegative(term.multiplier):
                count += len(term.multiplier)
            else:
                count += 1
        return count

    def expand(self) -> Polynomial:
        total = Polynomial.zero(self.variables)
        for term in self.terms:
            total = total + term.expand()
        return total


def certificate_to_text(cert: Certificate) -> str:
    lines = [
        "# sum-of-squares certificate",
        "variables: " + ", ".join(cert.variables),
        "target: " + cert.target.serialize(),
    ]
    for term in cert.terms:
        lines.append(
            f"{term.coefficient} ; {term.multiplier.serialize()} ; "
            f"{term.square_root.serialize()}"
        )
    return "\n".join(lines) + "\n"


def certificate_from_text(text: str) -> Certificate:
    """
    Parse the certificate file format.

    Raises:
        StructuralFailure: On a malformed header or term line.
    """
    variables = None
    target_text = None
    term_lines = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("variables:"):
            variables = tuple(
                name.strip() for name in line.split(":", 1)[1].split(",") if name.strip()
            )
        elif line.startswith("target:"):
            target_text = line.split(":", 1)[1].strip()
        else:
            term_lines.append((number, line))
    if not variables or target_text is None:
        raise StructuralFailure("Certificate header needs 'variables:' and 'target:'")

    try:
        target = parse(target_text, variables)
    except PolynomialError as exc:
        raise StructuralFailure(
            "Certificate target does not parse", {"reason": exc.message}
        ) from exc

    terms = []
    for number, line in term_lines:
        parts = [part.strip() for part in line.split(";")]
        if len(parts) != 3:
            raise StructuralFailure(
                "Term line needs 'coefficient ; multiplier ; square_root'",
                {"line": number},
            )
        try:
            coefficient = Fraction(parts[0])
            multiplier = parse(parts[1], variables)
            square_root = parse(parts[2], variables)
        except (ValueError, ZeroDivisionError, PolynomialError) as exc:
            raise StructuralFailure(
                "Term line does not parse", {"line": number, "reason": str(exc)}
            ) from exc
        terms.append(CertificateTerm(coefficient, multiplier, square_root))
    logger.debug("Read certificate with %d terms", len(terms))
    return Certificate(target, tuple(terms))


def write_certificate(cert: Certificate, path: Union[str, Path]) -> None:
    Path(path).write_text(certificate_to_text(cert), encoding="utf-8")
    logger.info("Certificate written to %s", path)


def read_certificate(path: Union[str, Path]) -> Certificate:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise StructuralFailure(
            "Cannot read certificate file", {"path": str(path), "reason": str(exc)}
        ) from exc
    return certificate_from_text(text)


def make_certificate(
    target: Polynomial,
    terms: Sequence[Tuple[Union[int, Fraction], Polynomial, Polynomial]],
) -> Certificate:
    return Certificate(
        target,
        tuple(CertificateTerm(Fraction(c), m, s) for c, m, s in terms),
    )
