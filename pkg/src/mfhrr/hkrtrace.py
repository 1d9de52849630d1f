"""Supertrace from Hochschild chains to twisted de Rham forms.

The connection is always the flat entrywise derivative on a free module, so
its curvature vanishes and the only matrix insertion is the primed
differential of the factorization.  A word a0[a1|...|an] is sent to

    sum_J (-1)^J / (n+J)! sum_{j0+...+jn=J} str(A0 R^j0 A1' R^j1 ... An' R^jn)

where R is the primed delta, the prime is the entrywise exterior derivative
twisted by the row-plus-column parity, and str is the supertrace.  Each R or
primed letter carries form degree one, so the J-sum stops at the number of
variables and everything is exact over the rationals.

The same engine gives Chern forms (the value on 1[]), the classical HKR map
(the J = 0 part), the degree twist gamma, and the superdeterminant Todd
series.  Chains tagged with Cech indices keep their tags; the residue of the
fully-tagged top component is what the local duality tests consume.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

from .hochschild import Chain, ChainError, UChain
from .polyring import DEFAULT_SERIES_ORDER, DiffForm, FormSeries, Poly


# -- form-valued matrices --------------------------------------------------


class MatrixForm:
    """Square matrix of differential forms acting on a parity-graded module.

    Multiplication moves the form factor of the left entry past the graded
    endomorphism of the right one, so the odd-form-degree part of each left
    entry picks up the sign of the right entry's row-plus-column parity.
    Without that sign the supertrace would not be cyclic and none of the
    chain-level identities below would close.
    """

    __slots__ = ("vars", "parities", "entries")

    def __init__(self, variables, parities, entries=None):
        self.vars = tuple(variables)
        self.parities = tuple(parities)
        clean = {}
        if entries:
            for (r, s), form in entries.items():
                if form.vars != self.vars:
                    raise ValueError("entry over the wrong variable list")
                if not form.is_zero():
                    clean[(r, s)] = form
        self.entries = clean

    @classmethod
    def zero(cls, variables, parities):
        return cls(variables, parities)

    @classmethod
    def identity(cls, variables, parities):
        one = DiffForm.from_poly(Poly.one(variables))
        return cls(variables, parities,
                   {(i, i): one for i in range(len(parities))})

    @classmethod
    def from_polys(cls, variables, parities, rows, laurent=None):
        entries = {}
        for r, row in enumerate(rows):
            for s, p in enumerate(row):
                if not isinstance(p, Poly):
                    p = Poly.const(variables, p, laurent)
                elif laurent is not None:
                    p = p.with_laurent(laurent)
                if p:
                    entries[(r, s)] = DiffForm.from_poly(p)
        return cls(variables, parities, entries)

    @classmethod
    def block_diag(cls, first, second):
        if first.vars != second.vars:
            raise ValueError("blocks over different variable lists")
        shift = len(first.parities)
        entries = dict(first.entries)
        for (r, s), form in second.entries.items():
            entries[(r + shift, s + shift)] = form
        return cls(first.vars, first.parities + second.parities, entries)

    def _check(self, other):
        if self.vars != other.vars or self.parities != other.parities:
            raise ValueError("matrix shape mismatch")

    def __add__(self, other):
        self._check(other)
        entries = dict(self.entries)
        for pos, form in other.entries.items():
            entries[pos] = entries.get(pos, DiffForm.zero(self.vars)) + form
        return MatrixForm(self.vars, self.parities, entries)

    def scale(self, c):
        return MatrixForm(self.vars, self.parities,
                          {pos: form.scale(c) for pos, form in self.entries.items()})

    def mul(self, other):
        self._check(other)
        by_row = {}
        for (j, k), form in other.entries.items():
            by_row.setdefault(j, []).append((k, form))
        out = {}
        for (i, j), left in self.entries.items():
            cols = by_row.get(j)
            if not cols:
                continue
            even, odd = left.split_by_parity()
            for k, right in cols:
                term = even.wedge(right) if not even.is_zero() else None
                if not odd.is_zero():
                    piece = odd.wedge(right)
                    if (self.parities[j] + self.parities[k]) % 2:
                        piece = -piece
                    term = piece if term is None else term + piece
                if term is None or term.is_zero():
                    continue
                key = (i, k)
                out[key] = out.get(key, DiffForm.zero(self.vars)) + term
        return MatrixForm(self.vars, self.parities, out)

    def supertrace(self):
        total = DiffForm.zero(self.vars)
        for (i, j), form in self.entries.items():
            if i != j:
                continue
            total = total + (-form if self.parities[i] else form)
        return total

    def prime(self):
        """[nabla, -] for the flat connection: entrywise d with the parity sign."""
        entries = {}
        for (r, s), form in self.entries.items():
            df = form.d()
            if (self.parities[r] + self.parities[s]) % 2:
                df = -df
            entries[(r, s)] = df
        return MatrixForm(self.vars, self.parities, entries)

    def is_zero(self):
        return not self.entries

    def __eq__(self, other):
        if not isinstance(other, MatrixForm):
            return NotImplemented
        return (self.vars == other.vars and self.parities == other.parities
                and self.entries == other.entries)

    def __repr__(self):
        n = len(self.parities)
        return f"<{n}x{n} form matrix, {len(self.entries)} entries>"


# -- the trace map ----------------------------------------------------------


def _laurent_flags(pres):
    return tuple(i in pres.laurent for i in range(len(pres.variables)))


def _letter_matrix(pres, atom, flags):
    mono, idx = atom
    scale = Poly.monomial(pres.variables, mono, 1, flags)
    entries = {}
    for r, row in enumerate(pres.basis[idx]):
        for s, c in enumerate(row):
            if c:
                entries[(r, s)] = DiffForm.from_poly(scale * c)
    return MatrixForm(pres.variables, pres.module_parities, entries)


def _curvature_powers(pres):
    """Powers of the primed ambient differential, up to the form-degree cap."""
    nv = len(pres.variables)
    parities = pres.module_parities
    if pres.source is not None:
        flags = _laurent_flags(pres)
        delta = MatrixForm.from_polys(pres.variables, parities,
                                      pres.source.delta_full(), flags)
        R = delta.prime()
    elif len(parities or ()) == 1:
        R = MatrixForm.zero(pres.variables, parities)
    else:
        raise ChainError(
            f"algebra {pres.label} has no ambient factorization to trace against")
    powers = [MatrixForm.identity(pres.variables, parities)]
    for _ in range(nv):
        nxt = powers[-1].mul(R)
        if nxt.is_zero():
            break
        powers.append(nxt)
    return powers


def _compositions(total, slots):
    if slots == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, slots - 1):
            yield (head,) + rest


def _word_trace(pres, atoms, rpow, jcap):
    nv = len(pres.variables)
    n = len(atoms) - 1
    total = DiffForm.zero(pres.variables)
    if n > nv:
        return total
    flags = _laurent_flags(pres)
    head = _letter_matrix(pres, atoms[0], flags)
    primes = [_letter_matrix(pres, a, flags).prime() for a in atoms[1:]]
    if any(p.is_zero() for p in primes):
        return total
    jmax = min(nv - n, jcap)
    for J in range(jmax + 1):
        weight = Fraction((-1) ** J, math.factorial(n + J))
        for comp in _compositions(J, n + 1):
            if any(j >= len(rpow) for j in comp):
                continue
            acc = head
            if comp[0]:
                acc = acc.mul(rpow[comp[0]])
            for t in range(n):
                acc = acc.mul(primes[t])
                if comp[t + 1]:
                    acc = acc.mul(rpow[comp[t + 1]])
            tr = acc.supertrace()
            if not tr.is_zero():
                total = total + tr.scale(weight)
    return total


def _as_parts(chain):
    if isinstance(chain, UChain):
        return chain.pres, list(enumerate(chain.parts))
    if isinstance(chain, Chain):
        return chain.pres, [(0, chain)]
    raise ChainError(f"cannot trace a {type(chain).__name__}")


def _trace_components(chain, order, jcap):
    pres, parts = _as_parts(chain)
    if pres.module_parities is None:
        raise ChainError(
            f"algebra {pres.label} does not act on a graded module")
    rpow = _curvature_powers(pres)
    nv = len(pres.variables)
    buckets = {}
    for upow, part in parts:
        if upow >= order:
            break
        for (alphas, atoms), coeff in part.terms.items():
            value = _word_trace(pres, atoms, rpow, jcap)
            if value.is_zero():
                continue
            forms = buckets.setdefault(
                alphas, [DiffForm.zero(pres.variables) for _ in range(order)])
            forms[upow] = forms[upow] + value.scale(coeff)
    out = {}
    for alphas, forms in buckets.items():
        if any(not f.is_zero() for f in forms):
            out[alphas] = FormSeries(pres.variables, forms, order)
    return out


def tr_nabla(chain, *, order=DEFAULT_SERIES_ORDER) -> FormSeries:
    """The supertrace of a chain or u-chain, as a form series in u.

    Chains carrying Cech tags have componentwise traces; call tr_nabla_cech
    for those.
    """
    pres, _ = _as_parts(chain)
    comps = _trace_components(chain, order, jcap=len(pres.variables))
    stray = [a for a in comps if a]
    if stray:
        raise ChainError("chain carries Cech indices; use tr_nabla_cech")
    return comps.get(frozenset(), FormSeries.zero(pres.variables, order))


def tr_nabla_cech(chain, *, order=DEFAULT_SERIES_ORDER) -> dict:
    """Componentwise trace of a Cech-tagged chain: alpha set -> form series."""
    pres, _ = _as_parts(chain)
    return _trace_components(chain, order, jcap=len(pres.variables))


def classical_hkr(chain, *, order=DEFAULT_SERIES_ORDER) -> FormSeries:
    """str(a0 da1 ... dan)/n!: the trace with no curvature insertions."""
    pres, _ = _as_parts(chain)
    comps = _trace_components(chain, order, jcap=0)
    stray = [a for a in comps if a]
    if stray:
        raise ChainError("chain carries Cech indices; use tr_nabla_cech")
    return comps.get(frozenset(), FormSeries.zero(pres.variables, order))


def cech_residue(components, full=None) -> dict:
    """Residues by u-power of the fully-tagged top component.

    Takes the output of tr_nabla_cech; reads off the coefficient of the
    all-exponents-minus-one monomial in the top form of the component tagged
    with every Cech index.  Zero residues are dropped.
    """
    if not components:
        return {}
    variables = next(iter(components.values())).vars
    nv = len(variables)
    if full is None:
        full = frozenset(range(nv))
    series = components.get(frozenset(full))
    if series is None:
        return {}
    pole = (-1,) * nv
    out = {}
    for k in range(series.order):
        c = series.coeffs[k].top().terms.get(pole, Fraction(0))
        if c:
            out[k] = c
    return out


# -- Chern forms -------------------------------------------------------------


class ChernForm:
    """Trace of the bare identity word: the Chern character form of P.

    Only even form degrees appear (the supertrace of an odd endomorphism
    vanishes), which the constructor enforces.
    """

    __slots__ = ("f", "series")

    def __init__(self, f, series):
        for k in range(series.order):
            for idx in series.coeffs[k].comps:
                if len(idx) % 2:
                    raise ValueError(
                        f"odd-degree component dx{idx} in a Chern form")
        self.f = f
        self.series = series

    def degree_component(self, j: int) -> DiffForm:
        return self.series.u0().degree_part(j)

    def top(self) -> Poly:
        """Coefficient of dx_0 ... dx_{n-1} at u^0."""
        return self.series.u0().top()

    def __add__(self, other):
        if self.f != other.f:
            raise ValueError("Chern forms for different potentials")
        return ChernForm(self.f, self.series + other.series)

    def __eq__(self, other):
        if not isinstance(other, ChernForm):
            return NotImplemented
        return self.f == other.f and self.series == other.series

    def jsonable(self) -> dict:
        out = {}
        for k in range(self.series.order):
            form = self.series.coeffs[k]
            if form.is_zero():
                continue
            by_degree = {}
            for idx in sorted(form.comps, key=lambda t: (len(t), t)):
                names = [self.series.vars[i] for i in idx]
                by_degree.setdefault(str(len(idx)), []).append(
                    [names, str(form.comps[idx])])
            out[f"u^{k}"] = by_degree
        return out

    def __repr__(self):
        return f"ChernForm({self.series.u0()})"


def chern_form(P, *, order=DEFAULT_SERIES_ORDER) -> ChernForm:
    """sum_J (-1)^J str(R^J)/J! for the primed differential of P."""
    variables = P.vars
    parities = P.parities()
    R = MatrixForm.from_polys(variables, parities, P.delta_full()).prime()
    total = DiffForm.from_poly(Poly.const(variables, P.rank0 - P.rank1))
    power = MatrixForm.identity(variables, parities)
    for J in range(1, len(variables) + 1):
        power = power.mul(R)
        if power.is_zero():
            break
        tr = power.supertrace()
        if not tr.is_zero():
            total = total + tr.scale(Fraction((-1) ** J, math.factorial(J)))
    return ChernForm(P.f, FormSeries.of_form(total, order))


# -- the degree twist ---------------------------------------------------------


def gamma_twist(series: FormSeries) -> FormSeries:
    """Sign twist exchanging the complexes twisted by f and by -f.

    Multiplies the form-degree-j coefficient of u^k by (-1)^(j+k).  The
    u-power must enter the sign: the -df wedge and the u d parts of the
    twisted differential change form degree the same way but u-degree
    differently, and flipping on form degree alone would only intertwine the
    df halves.
    """
    out = []
    for k in range(series.order):
        form = series.coeffs[k]
        comps = {idx: (p if (len(idx) + k) % 2 == 0 else -p)
                 for idx, p in form.comps.items()}
        out.append(DiffForm(series.vars, comps))
    return FormSeries(series.vars, out, series.order)


# -- Todd series --------------------------------------------------------------


@lru_cache(maxsize=None)
def _bernoulli(k: int) -> Fraction:
    if k == 0:
        return Fraction(1)
    total = Fraction(0)
    for j in range(k):
        total += math.comb(k + 1, j) * _bernoulli(j)
    return -total / (k + 1)


def _exp_form(form: DiffForm, nv: int) -> DiffForm:
    total = DiffForm.from_poly(Poly.one(form.vars))
    power = total
    for m in range(1, nv + 1):
        power = power.wedge(form)
        if power.is_zero():
            break
        total = total + power.scale(Fraction(1, math.factorial(m)))
    return total


def todd_sdet(R: MatrixForm, order: int = DEFAULT_SERIES_ORDER) -> FormSeries:
    """sdet of -R/(1 - exp R), the Bernoulli series t/(e^t - 1) applied to R.

    R must be nilpotent; entries of positive form degree guarantee that and
    are what the callers produce, so constant entries are rejected.
    The superdeterminant itself is exp of the supertrace of log.
    """
    nv = len(R.vars)
    for form in R.entries.values():
        if () in form.comps:
            raise ValueError("todd_sdet needs a nilpotent matrix of forms; "
                             "constant entries present")
    # N = g(R) - 1 with g the Bernoulli generating series.
    N = MatrixForm.zero(R.vars, R.parities)
    power = MatrixForm.identity(R.vars, R.parities)
    for k in range(1, nv + 1):
        power = power.mul(R)
        if power.is_zero():
            break
        N = N + power.scale(_bernoulli(k) / math.factorial(k))
    # str(log(1 + N)), then exp.
    logtrace = DiffForm.zero(R.vars)
    power = MatrixForm.identity(R.vars, R.parities)
    for m in range(1, nv + 1):
        power = power.mul(N)
        if power.is_zero():
            break
        sign = Fraction(1, m) if m % 2 else Fraction(-1, m)
        logtrace = logtrace + power.supertrace().scale(sign)
    return FormSeries.of_form(_exp_form(logtrace, nv), order)
