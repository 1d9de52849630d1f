"""Groebner bases for ideals and submodules of free modules over Q[x].

The engine works on sparse vectors: dicts mapping (component, exponent
tuple) to Fraction.  Module terms are compared position-over-term: lower
component wins, ties broken by the ring order (degrevlex by default).
Ideals are rank-one modules.

Cofactor certificates and syzygies both come from one construction: run
Buchberger on the graph module {(g_k, e_k)} in F_r (+) F_s with the tag
block ordered below the main block.  Basis elements with zero main part
carry syzygies in their tags; normal forms of (p, 0) carry membership
certificates.
"""

from __future__ import annotations

import heapq
import os
from dataclasses import dataclass
from fractions import Fraction

from .polyring import Poly, degrevlex_key

DEFAULT_MAX_SPAIRS = 10**6
ENV_MAX_SPAIRS = "MFHRR_MAX_SPAIRS"


class GroebnerLimitError(RuntimeError):
    """The S-pair budget was exhausted before the basis stabilized."""


class NotInIdealError(ValueError):
    """Membership certificate requested for a non-member."""


class NotZeroDimensionalError(ValueError):
    """quotient_basis called on a quotient of infinite rational dimension."""


class NonContainmentError(ValueError):
    """A claimed submodule generator is not contained in the larger module."""


class InfiniteDimensionError(ValueError):
    """A subquotient has infinite rational dimension."""


class IsolatedSingularityError(ValueError):
    """The critical locus is not a finite scheme concentrated at the origin."""


# -- term orders -------------------------------------------------------------

def lex_key(mono):
    return tuple(mono)


RING_KEYS = {"degrevlex": degrevlex_key, "lex": lex_key}


def term_key(order: str):
    ring = RING_KEYS[order]

    def key(term):
        comp, mono = term
        return (-comp, ring(mono))

    return key


def _mono_mul(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _mono_divides(a, b):
    return all(x <= y for x, y in zip(a, b))


def _mono_div(a, b):
    return tuple(x - y for x, y in zip(a, b))


def _mono_lcm(a, b):
    return tuple(max(x, y) for x, y in zip(a, b))


# -- sparse vectors ----------------------------------------------------------
# Vec = dict[(comp, mono)] -> Fraction, zero coefficients never stored.

def v_sub_scaled(v, c, mono, g):
    """v - c * x^mono * g, in place on a copy."""
    out = dict(v)
    for (comp, m), a in g.items():
        t = (comp, _mono_mul(mono, m))
        b = out.get(t, Fraction(0)) - c * a
        if b:
            out[t] = b
        elif t in out:
            del out[t]
    return out

def v_lead(v, key):
    return max(v, key=key)


class _Basis:
    """Working basis with leading-term bookkeeping."""

    def __init__(self, order: str):
        self.key = term_key(order)
        self.elems: list[dict] = []
        self.leads: list[tuple] = []

    def add(self, v):
        self.elems.append(v)
        self.leads.append(v_lead(v, self.key))
        return len(self.elems) - 1

    def find_reducer(self, term):
        comp, mono = term
        for i, (lc, lm) in enumerate(self.leads):
            if lc == comp and _mono_divides(lm, mono):
                return i
        return None


def _reduce_full(v, basis: _Basis, want_quotients=False):
    """Fully reduce v against the basis.  Returns (remainder, quotients)
    where quotients[i] is a ring-poly dict with
    v = sum_i quotients[i] * basis[i] + remainder."""
    key = basis.key
    rem = dict(v)
    quot: dict[int, dict] = {}
    # repeatedly reduce the largest still-reducible term
    pending = sorted(rem, key=key, reverse=True)
    while pending:
        t = pending.pop(0)
        c = rem.get(t)
        if not c:
            continue
        i = basis.find_reducer(t)
        if i is None:
            continue
        lc_comp, lc_mono = basis.leads[i]
        g = basis.elems[i]
        shift = _mono_div(t[1], lc_mono)
        ratio = c / g[basis.leads[i]]
        rem = v_sub_scaled(rem, ratio, shift, g)
        if want_quotients:
            q = quot.setdefault(i, {})
            q[shift] = q.get(shift, Fraction(0)) + ratio
            if not q[shift]:
                del q[shift]
        # new terms may have appeared strictly below t
        pending = sorted((s for s in rem if key(s) <= key(t)), key=key, reverse=True)
    return rem, quot


def _max_spairs(limit):
    if limit is not None:
        return limit
    env = os.environ.get(ENV_MAX_SPAIRS)
    if env:
        try:
            return int(env)
        except ValueError:
            raise ValueError(f"{ENV_MAX_SPAIRS} must be an integer, got {env!r}")
    return DEFAULT_MAX_SPAIRS


def _buchberger_raw(vectors, order: str, use_product_criterion: bool, limit=None):
    """Reduced Groebner basis of the module generated by the vectors.

    Returns (basis_elements, stats).  Elements are monic and sorted by
    leading term, smallest first.
    """
    max_pairs = _max_spairs(limit)
    key = term_key(order)
    basis = _Basis(order)
    processed = 0

    for v in vectors:
        if v:
            basis.add(dict(v))

    # pair queue keyed by the order key of the lcm term (normal strategy)
    pairs: list = []
    counter = 0

    def push_pairs(j):
        nonlocal counter
        cj, mj = basis.leads[j]
        for i in range(j):
            ci, mi = basis.leads[i]
            if ci != cj:
                continue
            lcm = _mono_lcm(mi, mj)
            if use_product_criterion and lcm == _mono_mul(mi, mj):
                continue
            counter += 1
            heapq.heappush(pairs, (key((ci, lcm)), counter, i, j, lcm))

    for j in range(len(basis.elems)):
        push_pairs(j)

    done_lcms: dict[tuple[int, int], tuple] = {}
    while pairs:
        _, _, i, j, lcm = heapq.heappop(pairs)
        ci = basis.leads[i][0]
        # chain criterion: some k with LT(k) | lcm and both (i,k), (j,k) done
        skip = False
        for k, (ck, mk) in enumerate(basis.leads):
            if k in (i, j) or ck != ci or not _mono_divides(mk, lcm):
                continue
            a = done_lcms.get((min(i, k), max(i, k)))
            b = done_lcms.get((min(j, k), max(j, k)))
            if a is not None and b is not None and a != lcm and b != lcm:
                skip = True
                break
        done_lcms[(i, j)] = lcm
        if skip:
            continue
        processed += 1
        if processed > max_pairs:
            raise GroebnerLimitError(
                f"S-pair budget exhausted ({max_pairs}); "
                f"set {ENV_MAX_SPAIRS} to raise the cap")
        gi, gj = basis.elems[i], basis.elems[j]
        li, lj = basis.leads[i], basis.leads[j]
        si = _mono_div(lcm, li[1])
        sj = _mono_div(lcm, lj[1])
        # s-vector: normalize both shifts to coefficient 1 at the lcm term
        s: dict = {}
        lci = gi[li]
        for (c, m), a in gi.items():
            t = (c, _mono_mul(si, m))
            s[t] = s.get(t, Fraction(0)) + a / lci
        s = v_sub_scaled(s, Fraction(1) / gj[lj], sj, gj)
        rem, _ = _reduce_full(s, basis)
        if rem:
            push_pairs(basis.add(rem))

    # minimalize: drop elements whose lead is divisible by another's
    order_idx = sorted(range(len(basis.elems)), key=lambda i: key(basis.leads[i]))
    kept: list[int] = []
    for i in order_idx:
        ci, mi = basis.leads[i]
        if any(basis.leads[k][0] == ci and _mono_divides(basis.leads[k][1], mi)
               for k in kept):
            continue
        kept.append(i)

    minimal = _Basis(order)
    for i in kept:
        minimal.add(basis.elems[i])

    # tail-reduce each against the others, then make monic
    reduced: list[dict] = []
    for pos in range(len(minimal.elems)):
        v = minimal.elems[pos]
        lead = minimal.leads[pos]
        others = _Basis(order)
        omap = [k for k in range(len(minimal.elems)) if k != pos]
        for k in omap:
            others.add(minimal.elems[k])
        tail = dict(v)
        del tail[lead]
        tail, _ = _reduce_full(tail, others)
        tail[lead] = v[lead]
        lc = tail[lead]
        reduced.append({t: a / lc for t, a in tail.items()})

    reduced.sort(key=lambda w: key(v_lead(w, key)))
    stats = {"spairs": processed, "basis_size": len(reduced)}
    return reduced, stats


# -- public interface --------------------------------------------------------

@dataclass
class GroebnerBasis:
    vars: tuple
    order: str
    ncomp: int
    elements: list        # list of Vec dicts, monic, sorted
    stats: dict

    def lead_terms(self):
        key = term_key(self.order)
        return [v_lead(v, key) for v in self.elements]


def _to_vec(g, ncomp) -> dict:
    """Accept a Poly (rank 1) or a sequence of Poly."""
    if isinstance(g, Poly):
        g = (g,)
    if len(g) != ncomp:
        raise ValueError(f"vector of length {len(g)} in a rank-{ncomp} module")
    vec = {}
    for comp, p in enumerate(g):
        for mono, c in p.terms.items():
            vec[(comp, mono)] = c
    return vec


def _from_vec(vec, variables, ncomp):
    comps = [dict() for _ in range(ncomp)]
    for (comp, mono), c in vec.items():
        comps[comp][mono] = c
    return tuple(Poly(variables, t) for t in comps)


def _gens_info(gens):
    gens = list(gens)
    if not gens:
        raise ValueError("no generators given")
    first = gens[0]
    if isinstance(first, Poly):
        return gens, first.vars, 1
    return gens, first[0].vars, len(first)


def buchberger(gens, order: str = "degrevlex", max_spairs=None) -> GroebnerBasis:
    """Reduced Groebner basis of the ideal or submodule generated by gens.

    gens: list of Poly (ideal) or list of equal-length Poly tuples (module).
    """
    gens, variables, ncomp = _gens_info(gens)
    vectors = [_to_vec(g, ncomp) for g in gens]
    elems, stats = _buchberger_raw(vectors, order, ncomp == 1, max_spairs)
    return GroebnerBasis(tuple(variables), order, ncomp, elems, stats)


def normal_form(p, gb: GroebnerBasis):
    """Canonical remainder of p modulo the reduced basis."""
    basis = _Basis(gb.order)
    for e in gb.elements:
        basis.add(e)
    rem, _ = _reduce_full(_to_vec(p, gb.ncomp), basis, want_quotients=False)
    out = _from_vec(rem, gb.vars, gb.ncomp)
    return out[0] if isinstance(p, Poly) and gb.ncomp == 1 else out


def quotient_basis(gb: GroebnerBasis):
    """Monomial basis of the quotient by the lead-term module.

    Returns exponent tuples for ideals, (component, exponent) pairs for
    modules.  Raises NotZeroDimensionalError when infinite.
    """
    nvars = len(gb.vars)
    by_comp: dict[int, list] = {c: [] for c in range(gb.ncomp)}
    for comp, mono in gb.lead_terms():
        by_comp[comp].append(mono)
    # Dickson criterion: finite iff every component sees a pure power of
    # every variable among its leading monomials
    for comp in range(gb.ncomp):
        monos = by_comp[comp]
        if any(all(e == 0 for e in m) for m in monos):
            continue  # the whole component dies
        for i in range(nvars):
            if not any(m[i] > 0 and all(e == 0 for k, e in enumerate(m) if k != i)
                       for m in monos):
                raise NotZeroDimensionalError(
                    f"component {comp} has no pure power of {gb.vars[i]} "
                    "among the leading terms")
    out = []
    for comp in range(gb.ncomp):
        monos = by_comp[comp]
        seen = set()
        stack = [(0,) * nvars]
        while stack:
            m = stack.pop()
            if m in seen or any(_mono_divides(g, m) for g in monos):
                continue
            seen.add(m)
            for i in range(nvars):
                up = list(m)
                up[i] += 1
                stack.append(tuple(up))
        out.extend((comp, m) for m in seen)
    out.sort(key=lambda t: (t[0], degrevlex_key(t[1])))
    if gb.ncomp == 1:
        return [m for _, m in out]
    return out


# -- graph-module constructions ----------------------------------------------

def _graph_basis(gens, order, max_spairs=None):
    """Groebner basis of {(g_k, e_k)} with tags ordered below the mains.

    Returns (basis_elems, variables, main_ncomp, total_ncomp).
    """
    gens, variables, ncomp = _gens_info(gens)
    s = len(gens)
    total = ncomp + s
    zero_m = (0,) * len(variables)
    vectors = []
    for k, g in enumerate(gens):
        vec = dict(_to_vec(g, ncomp))
        vec[(ncomp + k, zero_m)] = Fraction(1)
        vectors.append(vec)
    elems, stats = _buchberger_raw(vectors, order, False, max_spairs)
    return elems, tuple(variables), ncomp, total, stats


def _split_main_tag(vec, ncomp):
    main = {t: c for t, c in vec.items() if t[0] < ncomp}
    tag = {(t[0] - ncomp, t[1]): c for t, c in vec.items() if t[0] >= ncomp}
    return main, tag


def member_with_cofactors(p, gens, order: str = "degrevlex", max_spairs=None):
    """Certificate p = sum_k c_k * gens[k]; raises NotInIdealError otherwise.

    Returns the list of cofactor polynomials c_k.  The certificate is
    re-verified exactly before returning.
    """
    gens = list(gens)
    elems, variables, ncomp, total, _ = _graph_basis(gens, order, max_spairs)
    basis = _Basis(order)
    for e in elems:
        basis.add(e)
    target = dict(_to_vec(p, ncomp))
    rem, _ = _reduce_full(target, basis)
    main, tag = _split_main_tag(rem, ncomp)
    if main:
        raise NotInIdealError("polynomial is not in the span of the generators")
    s = len(gens)
    cof_vec = _from_vec({(c, m): -a for (c, m), a in tag.items()}, variables, s)
    # exact re-check
    if isinstance(p, Poly):
        acc = Poly.zero(variables)
        for c_k, g_k in zip(cof_vec, gens):
            acc = acc + c_k * g_k
        if acc != p:
            raise AssertionError("internal error: invalid membership certificate")
    else:
        n = len(p)
        acc = [Poly.zero(variables) for _ in range(n)]
        for c_k, g_k in zip(cof_vec, gens):
            for i in range(n):
                acc[i] = acc[i] + c_k * g_k[i]
        if tuple(acc) != tuple(p):
            raise AssertionError("internal error: invalid membership certificate")
    return list(cof_vec)


def syzygies(gens, order: str = "degrevlex", max_spairs=None):
    """Generators of the syzygy module {c : sum c_k gens[k] = 0}.

    Each syzygy is a tuple of Poly of length len(gens).  Every returned
    vector is verified exactly.
    """
    gens = list(gens)
    elems, variables, ncomp, total, _ = _graph_basis(gens, order, max_spairs)
    s = len(gens)
    out = []
    for e in elems:
        main, tag = _split_main_tag(e, ncomp)
        if main:
            continue
        syz = _from_vec(tag, variables, s)
        out.append(syz)
    # exact verification
    for syz in out:
        if isinstance(gens[0], Poly):
            acc = Poly.zero(variables)
            for c_k, g_k in zip(syz, gens):
                acc = acc + c_k * g_k
            assert acc.is_zero()
        else:
            for i in range(ncomp):
                acc = Poly.zero(variables)
                for c_k, g_k in zip(syz, gens):
                    acc = acc + c_k * g_k[i]
                assert acc.is_zero()
    return out


def module_kernel(matrix, order: str = "degrevlex", max_spairs=None):
    """Kernel generators of the map F_s -> F_r given by a r x s Poly matrix.

    Returns a list of length-s tuples of Poly spanning the kernel.
    """
    r = len(matrix)
    if r == 0:
        raise ValueError("matrix with no rows")
    s = len(matrix[0])
    if any(len(row) != s for row in matrix):
        raise ValueError("ragged matrix")
    if s == 0:
        return []
    cols = [tuple(matrix[i][j] for i in range(r)) for j in range(s)]
    return syzygies(cols, order, max_spairs)


def subquotient_dim(ker_gens, im_gens, order: str = "degrevlex", max_spairs=None) -> int:
    """Rational dimension of (span ker_gens) / (span im_gens).

    Raises NonContainmentError if some im generator is outside the span of
    the ker generators, InfiniteDimensionError if the quotient is not
    finite dimensional.
    """
    ker_gens = list(ker_gens)
    im_gens = list(im_gens)
    if not ker_gens:
        for i, v in enumerate(im_gens):
            polys = (v,) if isinstance(v, Poly) else v
            if any(not p.is_zero() for p in polys):
                raise NonContainmentError(f"generator {i} lies outside the zero module")
        return 0
    _, variables, ncomp = _gens_info(ker_gens)
    s = len(ker_gens)
    elems, _, _, _, _ = _graph_basis(ker_gens, order, max_spairs)
    basis = _Basis(order)
    for e in elems:
        basis.add(e)

    relations = list(syzygies(ker_gens, order, max_spairs))
    zero_s = tuple(Poly.zero(variables) for _ in range(s))
    for idx, v in enumerate(im_gens):
        rem, _ = _reduce_full(_to_vec(v, ncomp), basis)
        main, tag = _split_main_tag(rem, ncomp)
        if main:
            raise NonContainmentError(
                f"generator {idx} of the submodule is not contained in the module")
        lift = _from_vec({(c, m): -a for (c, m), a in tag.items()}, variables, s)
        if lift != zero_s:
            relations.append(lift)

    if not relations:
        relations = [zero_s]
    nonzero = [rel for rel in relations if any(not p.is_zero() for p in rel)]
    if not nonzero:
        # quotient is free of rank s: finite only if s == 0
        raise InfiniteDimensionError("subquotient contains a free module")
    gb = buchberger(nonzero, order, max_spairs)
    try:
        qb = quotient_basis(gb)
    except NotZeroDimensionalError as e:
        raise InfiniteDimensionError(str(e)) from None
    return len(qb)


# -- isolated singularity validation ------------------------------------------

@dataclass
class IsolatedReport:
    milnor: int
    jacobian_gb: GroebnerBasis
    monomial_basis: list


def check_isolated(f: Poly, order: str = "degrevlex", max_spairs=None) -> IsolatedReport:
    """Validate that f has an isolated critical point at the origin only.

    Checks: f and all partials vanish at 0; the Milnor algebra
    Q[x]/(df/dx_1, ..., df/dx_n) is finite dimensional; every variable is
    nilpotent in it (so the critical scheme is concentrated at 0).
    """
    n = len(f.vars)
    if f.constant_term():
        raise IsolatedSingularityError("f does not vanish at the origin")
    partials = [f.partial(i) for i in range(n)]
    for i, p in enumerate(partials):
        if p.constant_term():
            raise IsolatedSingularityError(
                f"the origin is not a critical point: d/d{f.vars[i]} has a constant term")
    if all(p.is_zero() for p in partials):
        raise IsolatedSingularityError("f has identically vanishing gradient")
    gb = buchberger(partials, order, max_spairs)
    try:
        qb = quotient_basis(gb)
    except NotZeroDimensionalError as e:
        raise IsolatedSingularityError(
            f"critical locus is not finite: {e}") from None
    mu = len(qb)
    if mu == 0:
        raise IsolatedSingularityError("f is nonsingular (empty critical scheme)")
    for i in range(n):
        power = Poly.monomial(f.vars, tuple(mu if j == i else 0 for j in range(n)))
        if not normal_form(power, gb).is_zero():
            raise IsolatedSingularityError(
                f"critical locus is not concentrated at the origin: "
                f"{f.vars[i]}^{mu} is not in the jacobian ideal")
    return IsolatedReport(mu, gb, qb)
