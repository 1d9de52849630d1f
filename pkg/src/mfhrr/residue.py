"""Grothendieck residues for denominator ideals supported at the origin.

The base case is pure monomial denominators: the residue of
g dx_1...dx_n over (x_1^{a_1}, ..., x_n^{a_n}) picks out the coefficient
of x^{a - (1,...,1)} in g.  Everything else reduces to that case by the
transformation law: whenever x_i^{a_i} = sum_j c_ij g_j, the residue
over (g_1, ..., g_n) of g equals the residue over the pure powers of
g * det(c).  The cofactor matrices come out of the Groebner engine with
exact membership certificates, and the final value is independent of
which cover was chosen (this is exercised in the test suite rather than
assumed).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .groebner import (
    IsolatedSingularityError,
    NotZeroDimensionalError,
    buchberger,
    check_isolated,
    member_with_cofactors,
    normal_form,
    quotient_basis,
)
from .polyring import Poly


def res_monomial(numerator: Poly, exponents) -> Fraction:
    """Residue of numerator dx over the pure powers x_i^{exponents[i]}.

    Linear in the numerator; a monomial x^b contributes its coefficient
    exactly when b_i = exponents[i] - 1 for every i.
    """
    a = tuple(exponents)
    if len(a) != len(numerator.vars):
        raise ValueError(
            f"{len(a)} denominator exponents for {len(numerator.vars)} variables")
    if any((not isinstance(e, int)) or e <= 0 for e in a):
        raise ValueError(f"denominator exponents must be positive integers: {a}")
    target = tuple(e - 1 for e in a)
    return numerator.terms.get(target, Fraction(0))


@dataclass(frozen=True)
class DenominatorCover:
    """Pure-power cover of a denominator ideal.

    exponents[i] and cofactors[i] certify x_i^{exponents[i]} =
    sum_j cofactors[i][j] * g_j for the generators g the cover was
    built from.
    """

    exponents: tuple
    cofactors: tuple

    def det(self) -> Poly:
        return _det([list(row) for row in self.cofactors])

    def jsonable(self) -> dict:
        return {
            "exponents": list(self.exponents),
            "cofactors": [[str(c) for c in row] for row in self.cofactors],
            "det": str(self.det()),
        }


def _det(rows) -> Poly:
    n = len(rows)
    variables = rows[0][0].vars
    if n == 1:
        return rows[0][0]
    acc = Poly.zero(variables)
    # Laplace along the first row; the matrices here are tiny
    for j in range(n):
        entry = rows[0][j]
        if entry.is_zero():
            continue
        minor = [[rows[i][k] for k in range(n) if k != j] for i in range(1, n)]
        term = entry * _det(minor)
        acc = acc + term if j % 2 == 0 else acc - term
    return acc


def _pure_power(variables, i, k) -> Poly:
    return Poly.monomial(variables, tuple(k if j == i else 0 for j in range(len(variables))))


def _build_cover(denominators, gb, exponents, bound, order) -> DenominatorCover:
    """Minimal (or caller-chosen) pure-power exponents plus cofactors."""
    variables = denominators[0].vars
    n = len(variables)
    if exponents is None:
        found = []
        for i in range(n):
            k = 1
            while not normal_form(_pure_power(variables, i, k), gb).is_zero():
                k += 1
                if k > bound:
                    raise AssertionError(
                        f"no power of {variables[i]} up to {bound} in the ideal "
                        "(validation should have caught this)")
            found.append(k)
        exponents = tuple(found)
    else:
        exponents = tuple(exponents)
        if len(exponents) != n or any((not isinstance(e, int)) or e <= 0 for e in exponents):
            raise ValueError(f"bad cover exponents {exponents}")
    rows = []
    for i in range(n):
        cof = member_with_cofactors(_pure_power(variables, i, exponents[i]),
                                    denominators, order)
        rows.append(tuple(cof))
    return DenominatorCover(exponents, tuple(rows))


def jacobian_cover(f: Poly, exponents=None, order: str = "degrevlex") -> DenominatorCover:
    """Pure-power cover of the Jacobian ideal of f.

    With exponents=None the minimal exponents are found by raising each
    variable until its normal form vanishes.  Passing explicit exponents
    builds a (possibly non-minimal) cover instead; membership failures
    propagate from the Groebner engine.
    """
    report = check_isolated(f, order)
    partials = [f.partial(i) for i in range(len(f.vars))]
    return _build_cover(partials, report.jacobian_gb, exponents, report.milnor, order)


class ResidueProblem:
    """Numerator (coefficient of dx_1...dx_n) over n validated denominators.

    Validation at construction: n denominators over the n ring variables,
    finite quotient algebra, and every variable nilpotent in it, i.e. the
    ideal is supported at the origin alone.
    """

    __slots__ = ("numerator", "denominators", "gb", "quotient_monomials", "order")

    def __init__(self, numerator: Poly, denominators, order: str = "degrevlex"):
        denominators = list(denominators)
        if not denominators:
            raise ValueError("no denominators given")
        variables = denominators[0].vars
        if numerator.vars != variables or any(g.vars != variables for g in denominators):
            raise ValueError("numerator and denominators over different variable lists")
        if any(numerator.laurent) or any(any(g.laurent) for g in denominators):
            raise ValueError("residue problems take ordinary polynomials")
        if len(denominators) != len(variables):
            raise ValueError(
                f"{len(denominators)} denominators over {len(variables)} variables")
        if any(g.is_zero() for g in denominators):
            raise IsolatedSingularityError("zero denominator generator")
        self.numerator = numerator
        self.denominators = denominators
        self.order = order
        self.gb = buchberger(denominators, order)
        try:
            self.quotient_monomials = quotient_basis(self.gb)
        except NotZeroDimensionalError as e:
            raise IsolatedSingularityError(
                f"denominator ideal is not supported at a point: {e}") from None
        mu = len(self.quotient_monomials)
        for i in range(len(variables)):
            if not normal_form(_pure_power(variables, i, mu), self.gb).is_zero():
                raise IsolatedSingularityError(
                    f"denominator ideal is not supported at the origin: "
                    f"{variables[i]}^{mu} has a nonzero normal form")

    def cover(self, exponents=None) -> DenominatorCover:
        return _build_cover(self.denominators, self.gb, exponents,
                            len(self.quotient_monomials), self.order)

    def __repr__(self):
        gens = ", ".join(str(g) for g in self.denominators)
        return f"ResidueProblem({self.numerator} dx / ({gens}))"


def groth_residue(prob: ResidueProblem, cover: DenominatorCover | None = None) -> Fraction:
    """Residue of the validated problem, through a pure-power cover.

    A caller-supplied cover is checked against the problem's own
    denominators before use, so a cover built for a different ideal
    fails loudly instead of producing a wrong number.
    """
    if cover is None:
        cover = prob.cover()
    else:
        variables = prob.numerator.vars
        for i, (e, row) in enumerate(zip(cover.exponents, cover.cofactors)):
            acc = Poly.zero(variables)
            for c, g in zip(row, prob.denominators):
                acc = acc + c * g
            if acc != _pure_power(variables, i, e):
                raise ValueError(
                    f"cover row {i} does not certify {variables[i]}^{e} "
                    "over these denominators")
    return res_monomial(prob.numerator * cover.det(), cover.exponents)
