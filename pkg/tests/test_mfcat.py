from __future__ import annotations

import random
from fractions import Fraction

import pytest

from mfhrr.mfcat import (
    GradedMatrixForm,
    MFValidationError,
    MatrixFactorization,
    Z2Complex,
    d_entrywise,
    delta_form_matrix,
    dual_mf,
    hom_complex,
    koszul_mf,
    mat_mul,
    mf_from_json,
    mf_new,
    mf_to_json,
    shift_mf,
    supertrace,
    tensor_mf,
)
from mfhrr.polyring import DiffForm, Poly, parse_poly

XY = ("x", "y")


def P(s, variables=XY):
    return parse_poly(s, variables)


def K_xy():
    return koszul_mf(XY, [P("x")], [P("y")])


# -- construction and validation -----------------------------------------------

def test_koszul_rank_one():
    K = K_xy()
    assert K.ranks() == (1, 1)
    assert K.delta0 == ((P("y"),),)
    assert K.delta1 == ((P("x"),),)
    assert K.f == P("x*y")


def test_koszul_two_rows():
    a = [P("x"), P("y")]
    b = [P("x"), P("y^2")]
    K = koszul_mf(XY, a, b)
    assert K.f == P("x^2 + y^3")
    assert K.ranks() == (2, 2)
    # frozen basis order: evens [{}, {1,2}], odds [{1}, {2}]
    assert K.delta0 == ((P("x"), P("-y")), (P("y^2"), P("x")))
    assert K.delta1 == ((P("x"), P("y")), (P("-y^2"), P("x")))


def test_mf_new_validation_reports_entry():
    with pytest.raises(MFValidationError) as e:
        mf_new(XY, P("x*y"), [[P("y")]], [[P("x + 1")]])
    assert "(0,0)" in str(e.value)


def test_mf_new_shape_validation():
    with pytest.raises(MFValidationError):
        mf_new(XY, P("x*y"), [[P("y"), P("0")]], [[P("x")]])


def test_delta_full_squares_to_f():
    K = koszul_mf(XY, [P("x"), P("y")], [P("x"), P("y^2")])
    D = K.delta_full()
    sq = mat_mul(D, D, XY)
    for i in range(4):
        for j in range(4):
            assert sq[i][j] == (K.f if i == j else Poly.zero(XY))


# -- functors ---------------------------------------------------------------------

def test_dual_negates_potential():
    K = K_xy()
    D = dual_mf(K)
    assert D.f == -K.f
    assert D.delta0 == ((P("x"),),)
    assert D.delta1 == ((P("-y"),),)


def test_dual_dual_negates_deltas():
    K = koszul_mf(XY, [P("x"), P("y")], [P("x"), P("y^2")])
    DD = dual_mf(dual_mf(K))
    assert DD.f == K.f
    for got, want in ((DD.delta0, K.delta0), (DD.delta1, K.delta1)):
        for r1, r2 in zip(got, want):
            for a, b in zip(r1, r2):
                assert a == -b


def test_shift_involution():
    K = koszul_mf(XY, [P("x"), P("y")], [P("x"), P("y^2")])
    S = shift_mf(K)
    assert S.f == K.f
    assert S.rank0 == K.rank1
    assert shift_mf(S) == K


def test_tensor():
    V4 = ("x1", "x2", "x3", "x4")
    A = koszul_mf(V4, [parse_poly("x1", V4)], [parse_poly("x2", V4)])
    B = koszul_mf(V4, [parse_poly("x3", V4)], [parse_poly("x4", V4)])
    T = tensor_mf(A, B)
    assert T.f == parse_poly("x1*x2 + x3*x4", V4)
    assert T.ranks() == (2, 2)
    K = koszul_mf(V4, [parse_poly("x1", V4), parse_poly("x3", V4)],
                  [parse_poly("x2", V4), parse_poly("x4", V4)])
    assert T.f == K.f


# -- hom complexes ------------------------------------------------------------------

def test_hom_complex_koszul_xy():
    K = K_xy()
    C = hom_complex(K, K)
    assert (C.rank0, C.rank1) == (2, 2)
    assert C.d0 == ((P("y"), P("-y")), (P("-x"), P("x")))
    assert C.d1 == ((P("x"), P("y")), (P("x"), P("y")))


def test_hom_complex_requires_same_potential():
    K = K_xy()
    with pytest.raises(MFValidationError):
        hom_complex(K, dual_mf(K))


def test_hom_complex_larger():
    K = koszul_mf(XY, [P("x"), P("y")], [P("x"), P("y^2")])
    C = hom_complex(K, K)  # constructor verifies d.d = 0
    assert (C.rank0, C.rank1) == (8, 8)


def test_z2complex_rejects_nonsquare_zero():
    with pytest.raises(MFValidationError):
        Z2Complex(XY, [[P("x")]], [[P("y")]])


# -- graded form matrices --------------------------------------------------------------

def test_supertrace_frozen_chern_square():
    K = K_xy()
    dd = d_entrywise(delta_form_matrix(K))
    sq = dd @ dd
    want = DiffForm(XY, {(0, 1): P("-2")})
    assert supertrace(sq) == want


def _random_form(rng, variables, degrees):
    comps = {}
    n = len(variables)
    from itertools import combinations
    for k in degrees:
        for idx in combinations(range(n), k):
            terms = {}
            for _ in range(2):
                mono = tuple(rng.randrange(0, 3) for _ in range(n))
                c = rng.randrange(-3, 4)
                if c:
                    terms[mono] = terms.get(mono, Fraction(0)) + c
            p = Poly(variables, terms)
            if p:
                comps[idx] = comps.get(idx, Poly.zero(variables)) + p
    return DiffForm(variables, comps)


def _random_graded_matrix(rng, variables, parities, total_parity):
    n = len(parities)
    rows = []
    top = len(variables)
    for i in range(n):
        row = []
        for j in range(n):
            want = (total_parity + parities[i] + parities[j]) % 2
            degrees = [k for k in range(top + 1) if k % 2 == want]
            row.append(_random_form(rng, variables, degrees))
        rows.append(row)
    return GradedMatrixForm(variables, parities, rows)


def test_super_product_associative_and_supersymmetric():
    rng = random.Random(7)
    parities = (0, 1, 1)
    for _ in range(12):
        ta, tb = rng.randrange(2), rng.randrange(2)
        A = _random_graded_matrix(rng, XY, parities, ta)
        B = _random_graded_matrix(rng, XY, parities, tb)
        C = _random_graded_matrix(rng, XY, parities, rng.randrange(2))
        assert ((A @ B) @ C).entries == (A @ (B @ C)).entries
        lhs = supertrace(A @ B)
        rhs = supertrace(B @ A)
        if (ta * tb) % 2:
            rhs = -rhs
        assert lhs == rhs


def test_identity_neutral():
    rng = random.Random(3)
    parities = (0, 0, 1)
    A = _random_graded_matrix(rng, XY, parities, 1)
    I = GradedMatrixForm.identity(XY, parities)
    assert (A @ I).entries == A.entries
    assert (I @ A).entries == A.entries


# -- serialization ------------------------------------------------------------------------

def test_json_round_trip():
    K = koszul_mf(XY, [P("x"), P("y")], [P("x"), P("y^2")])
    data = mf_to_json(K)
    assert data["f"] == "y^3 + x^2"
    assert mf_from_json(data) == K


def test_json_rejects_bad_square():
    data = {"vars": ["x", "y"], "f": "x*y", "delta0": [["y"]], "delta1": [["y"]]}
    with pytest.raises(MFValidationError):
        mf_from_json(data)


def test_json_missing_field():
    with pytest.raises(MFValidationError):
        mf_from_json({"vars": ["x"], "f": "x"})
