"""
Sign and swap symmetries of a polynomial and the block structure they
induce on its Gram problem.

Sign flips form a subgroup of (Z/2)^n described by the parity lattice
W = span(support mod 2): s is a symmetry iff s.w is even for all w in W.
Basis monomials whose parities agree modulo W form a parity class;
invariant Gram matrices have no entries across classes.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.exceptions import SymmetryError
from sos.gram import GramProblem
from sos.poly import Exponent, Polynomial, add_exponents

logger = logging.getLogger(__name__)

SparseRow = Tuple[Tuple[int, Fraction], ...]


def _parity_mask(exponent: Sequence[int]) -> int:
    return sum(1 << i for i, k in enumerate(exponent) if k % 2)


@dataclass(frozen=True)
class SignSymmetryGroup:
    """Sign flips fixing a polynomial, held as an echelon basis of W."""

    nvars: int
    lattice: Tuple[int, ...]

    @classmethod
    def from_vectors(cls, nvars: int, masks) -> "SignSymmetryGroup":
        basis: List[int] = []
        for mask in masks:
            for b in basis:
                if mask & (1 << (b.bit_length() - 1)):
                    mask ^= b
            if mask:
                basis.append(mask)
                basis.sort(reverse=True)
        return cls(nvars, tuple(basis))

    @property
    def order(self) -> int:
        return 2 ** (self.nvars - len(self.lattice))

    def reduce(self, mask: int) -> int:
        for b in self.lattice:
            if mask & (1 << (b.bit_length() - 1)):
                mask ^= b
        return mask

    def class_of(self, exponent: Sequence[int]) -> int:
        """Canonical representative of the parity class of a monomial."""
        return self.reduce(_parity_mask(exponent))

    def contains(self, flips: int) -> bool:
        return all(bin(flips & w).count("1") % 2 == 0 for w in self.lattice)

    def elements(self) -> List[Tuple[int, ...]]:
        """All group elements as sign tuples, identity first."""
        return [
            tuple(-1 if flips >> i & 1 else 1 for i in range(self.nvars))
            for flips in range(2**self.nvars)
            if self.contains(flips)
        ]


@dataclass(frozen=True)
class SwapSymmetry:
    """An involutive variable permutation."""

    perm: Tuple[int, ...]

    def __post_init__(self):
        perm = tuple(self.perm)
        if sorted(perm) != list(range(len(perm))):
            raise SymmetryError("Not a permutation", {"perm": list(perm)})
        if any(perm[perm[i]] != i for i in range(len(perm))):
            raise SymmetryError("Permutation is not an involution", {"perm": list(perm)})
        object.__setattr__(self, "perm", perm)

    def apply(self, exponent: Sequence[int]) -> Exponent:
        image = [0] * len(self.perm)
        for i, k in enumerate(exponent):
            image[self.perm[i]] = k
        return tuple(image)

    @property
    def transpositions(self) -> int:
        return sum(1 for i, j in enumerate(self.perm) if i < j)


def detect_sign_symmetries(p: Polynomial) -> SignSymmetryGroup:
    return SignSymmetryGroup.from_vectors(
        p.nvars, (_parity_mask(e) for e in p.support)
    )


def detect_swap(p: Polynomial, perm: Sequence[int]) -> bool:
    """True iff p is fixed by the involution ``perm``."""
    swap = SwapSymmetry(tuple(perm))
    return p.permute(swap.perm) == p


def _involutions(n: int):
    def build(remaining, perm):
        if not remaining:
            yield tuple(perm)
            return
        i = remaining[0]
        rest = remaining[1:]
        perm[i] = i
        yield from build(rest, perm)
        for j in rest:
            perm[i], perm[j] = j, i
            yield from build([k for k in rest if k != j], perm)
            perm[j] = j
        perm[i] = i

    yield from build(list(range(n)), list(range(n)))


def find_swap(p: Polynomial, max_vars: int = 8) -> Optional[SwapSymmetry]:
    """
    Non-trivial involution fixing p with the most transpositions.

    Ties go to the lexicographically smallest permutation.
    """
    if p.nvars > max_vars:
        logger.warning("Skipping swap search over %d variables", p.nvars)
        return None
    best = None
    for perm in sorted(_involutions(p.nvars)):
        swap = SwapSymmetry(perm)
        if swap.transpositions == 0:
            continue
        if best is not None and swap.transpositions <= best.transpositions:
            continue
        if p.permute(perm) == p:
            best = swap
    if best:
        logger.info("Detected swap %s", best.perm)
    return best


@dataclass(frozen=True)
class Block:
    """
    One Gram block shared by its copies.

    Each copy is a list of rows; row k is the vector v_k with
    (V u)_k = sum v_k[i] u_i. The Gram matrix gets V^T B V per copy.
    """

    label: str
    copies: Tuple[Tuple[SparseRow, ...], ...]

    @property
    def multiplicity(self) -> int:
        return len(self.copies)

    @property
    def dimension(self) -> int:
        return len(self.copies[0])

    def restrict(self, transform: Sequence[Sequence[Fraction]]) -> "Block":
        """Replace rows V by transform @ V in every copy."""
        copies = []
        for rows in self.copies:
            new_rows = []
            for coeffs in transform:
                acc: Dict[int, Fraction] = {}
                for c, row in zip(coeffs, rows):
                    if c:
                        for i, a in row:
                            acc[i] = acc.get(i, Fraction(0)) + c * a
                new_rows.append(tuple(sorted((i, a) for i, a in acc.items() if a)))
            copies.append(tuple(new_rows))
        return Block(self.label, tuple(copies))

    def vectors(self, basis_polys: Sequence[Polynomial]) -> List[List[Polynomial]]:
        """The polynomials V u, one list per copy."""
        variables = basis_polys[0].variables
        out = []
        for rows in self.copies:
            out.append(
                [
                    sum(
                        (basis_polys[i].scale(a) for i, a in row),
                        Polynomial.zero(variables),
                    )
                    for row in rows
                ]
            )
        return out


@dataclass(frozen=True)
class SymmetryBlocking:
    blocks: Tuple[Block, ...]
    basis_size: int
    sign_group: Optional[SignSymmetryGroup] = None
    swap: Optional[SwapSymmetry] = None

    @property
    def group_order(self) -> int:
        order = self.sign_group.order if self.sign_group else 1
        return order * (2 if self.swap else 1)

    @property
    def total_dimension(self) -> int:
        return sum(b.dimension * b.multiplicity for b in self.blocks)

    def profile(self) -> List[Tuple[int, int]]:
        return [(b.multiplicity, b.dimension) for b in self.blocks]

    def with_blocks(self, blocks: Sequence[Block]) -> "SymmetryBlocking":
        return SymmetryBlocking(tuple(blocks), self.basis_size, self.sign_group, self.swap)

    def report_table(self, published: Optional[Sequence[Tuple[int, int]]] = None) -> str:
        """Block index, multiplicity and dimension, optionally beside a reference profile."""
        lines = ["block  label        mult  dim"]
        for index, block in enumerate(self.blocks, start=1):
            lines.append(
                f"{index:>5}  {block.label:<11}  {block.multiplicity:>4}  {block.dimension:>3}"
            )
        lines.append(f"total (with multiplicity): {self.total_dimension}")
        if published:
            lines.append("reference profile: " + ", ".join(f"{m}x{d}" for m, d in published))
            lines.append(
                f"reference total: {sum(m * d for m, d in published)}"
            )
        return "\n".join(lines)


def _unit(i: int) -> SparseRow:
    return ((i, Fraction(1)),)


def trivial_blocking(problem: GramProblem) -> SymmetryBlocking:
    """A single block over the whole basis."""
    rows = tuple(_unit(i) for i in range(problem.size))
    return SymmetryBlocking((Block("all", (rows,)),), problem.size)


def _check_invariance(p: Polynomial, signs: SignSymmetryGroup, swap: Optional[SwapSymmetry]):
    for element in signs.elements():
        if p.flip_signs(element) != p:
            raise SymmetryError(
                "Polynomial is not fixed by a sign flip", {"signs": list(element)}
            )
    if swap and p.permute(swap.perm) != p:
        raise SymmetryError("Polynomial is not fixed by the swap", {"perm": list(swap.perm)})


def block_decompose(
    problem: GramProblem,
    signs: SignSymmetryGroup,
    swap: Optional[SwapSymmetry] = None,
) -> SymmetryBlocking:
    """
    Split the basis by parity class, then by swap parity.

    A class fixed by the swap gives a + block (fixed monomials and sums
    u_m + u_pm) and a - block (differences u_m - u_pm). Two classes
    exchanged by the swap give one block of multiplicity 2 whose second
    copy is the swap image of the first.

    Raises:
        SymmetryError: If the target or the basis is not invariant.
    """
    basis = problem.basis
    _check_invariance(problem.target, signs, swap)
    if swap:
        missing = [m for m in basis if swap.apply(m) not in basis]
        if missing:
            raise SymmetryError(
                "Basis is not closed under the swap", {"monomial": list(missing[0])}
            )

    classes: Dict[int, List[int]] = {}
    for i, m in enumerate(basis):
        classes.setdefault(signs.class_of(m), []).append(i)

    blocks = []
    done = set()
    for number, (rep, members) in enumerate(classes.items(), start=1):
        if rep in done:
            continue
        done.add(rep)
        if swap is None:
            blocks.append(Block(f"c{number}", (tuple(_unit(i) for i in members),)))
            continue
        image_rep = signs.class_of(swap.apply(basis[members[0]]))
        if image_rep != rep:
            done.add(image_rep)
            first = tuple(_unit(i) for i in members)
            second = tuple(_unit(basis.index_of(swap.apply(basis[i]))) for i in members)
            blocks.append(Block(f"c{number}~", (first, second)))
            continue
        plus: List[SparseRow] = []
        minus: List[SparseRow] = []
        seen = set()
        for i in members:
            if i in seen:
                continue
            j = basis.index_of(swap.apply(basis[i]))
            seen.update((i, j))
            if i == j:
                plus.append(_unit(i))
            else:
                a, b = min(i, j), max(i, j)
                plus.append(((a, Fraction(1)), (b, Fraction(1))))
                minus.append(((a, Fraction(1)), (b, Fraction(-1))))
        if plus:
            blocks.append(Block(f"c{number}+", (tuple(plus),)))
        if minus:
            blocks.append(Block(f"c{number}-", (tuple(minus),)))

    blocking = SymmetryBlocking(tuple(blocks), len(basis), signs, swap)
    if blocking.total_dimension != len(basis):
        raise SymmetryError(
            "Block dimensions do not add up to the basis size",
            {"total": blocking.total_dimension, "basis": len(basis)},
        )
    logger.info(
        "Blocking: %d blocks, group order %d, profile %s",
        len(blocks),
        blocking.group_order,
        blocking.profile(),
    )
    return blocking


def triu_pairs(d: int) -> List[Tuple[int, int]]:
    return [(k, l) for k in range(d) for l in range(k, d)]


def block_offsets(blocking: SymmetryBlocking) -> List[int]:
    offsets = []
    total = 0
    for block in blocking.blocks:
        offsets.append(total)
        total += block.dimension * (block.dimension + 1) // 2
    offsets.append(total)
    return offsets


def block_constraints(
    problem: GramProblem, blocking: SymmetryBlocking
) -> Tuple[List[Dict[int, Fraction]], List[Fraction]]:
    """
    Gram constraints in block coordinates.

    Variables are the upper-triangular entries of every block, in block
    order; row r is the constraint of ``problem.constraints[r]``.
    """
    basis = problem.basis
    rows: List[Dict[int, Fraction]] = [dict() for _ in problem.constraints]
    offsets = block_offsets(blocking)
    for b, block in enumerate(blocking.blocks):
        for pos, (k, l) in enumerate(triu_pairs(block.dimension)):
            var = offsets[b] + pos
            weight = 1 if k == l else 2
            for copy in block.copies:
                for i, a in copy[k]:
                    for j, c in copy[l]:
                        r = problem.row_of(add_exponents(basis[i], basis[j]))
                        rows[r][var] = rows[r].get(var, Fraction(0)) + weight * a * c
    rows = [{k: v for k, v in row.items() if v} for row in rows]
    rhs = [c.rhs for c in problem.constraints]
    return rows, rhs


def lift_solution(blocking: SymmetryBlocking, block_matrices: Sequence) -> np.ndarray:
    """
    Assemble the full Gram matrix sum over copies of V^T B V.

    Raises:
        SymmetryError: On a block count or dimension mismatch.
    """
    if len(block_matrices) != len(blocking.blocks):
        raise SymmetryError(
            "Block count mismatch",
            {"expected": len(blocking.blocks), "got": len(block_matrices)},
        )
    n = blocking.basis_size
    Q = np.zeros((n, n))
    for block, matrix in zip(blocking.blocks, block_matrices):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape != (block.dimension, block.dimension):
            raise SymmetryError(
                "Block dimension mismatch",
                {"label": block.label, "expected": block.dimension, "got": list(matrix.shape)},
            )
        for rows in block.copies:
            V = np.zeros((block.dimension, n))
            for k, row in enumerate(rows):
                for i, a in row:
                    V[k, i] = float(a)
            Q += V.T @ matrix @ V
    return Q


def lift_exact(blocking: SymmetryBlocking, block_matrices: Sequence) -> List[List[Fraction]]:
    """Exact counterpart of ``lift_solution`` for rational block matrices."""
    n = blocking.basis_size
    Q = [[Fraction(0)] * n for _ in range(n)]
    for block, matrix in zip(blocking.blocks, block_matrices):
        for rows in block.copies:
            for k, row_k in enumerate(rows):
                for l, row_l in enumerate(rows):
                    value = Fraction(matrix[k][l])
                    if not value:
                        continue
                    for i, a in row_k:
                        for j, c in row_l:
                            Q[i][j] += value * a * c
    return Q


def group_action_permutation(
    problem: GramProblem, signs: Tuple[int, ...], swap: Optional[SwapSymmetry]
) -> List[Tuple[int, int]]:
    """
    Action of (signs, swap) on basis indices: u_i -> sign * u_{target}.

    Returns pairs (target index, sign) per basis index.
    """
    basis = problem.basis
    action = []
    for m in basis:
        image = swap.apply(m) if swap else m
        sign = -1 if sum(k for s, k in zip(signs, m) if s < 0) % 2 else 1
        action.append((basis.index_of(image), sign))
    return action
