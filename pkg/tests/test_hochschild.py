import random
from fractions import Fraction

import pytest

from mfhrr.hochschild import (
    AlgebraPresentation,
    B_op,
    Chain,
    ChainError,
    UChain,
    alpha_op,
    b_op,
    cech_differential,
    chain_parity,
    cyclic_sh_op,
    endomorphism_presentation,
    eta_construct,
    euler_trace,
    koszul_generator_matrices,
    kunneth_product,
    local_model_presentation,
    mixed_differential,
    phi_construct,
    polynomial_presentation,
    psi_op,
    random_chain,
    sh_op,
    tensor_presentation,
    y_power,
)
from mfhrr.mfcat import dual_mf, koszul_mf
from mfhrr.polyring import Poly, parse_poly


def kmf(variables, a, b):
    return koszul_mf(variables,
                     [parse_poly(a, variables)],
                     [parse_poly(b, variables)])


X = ("x",)
XY = ("x", "y")


@pytest.fixture(scope="module")
def model():
    return local_model_presentation()


@pytest.fixture(scope="module")
def end_x2():
    return endomorphism_presentation(
        kmf(X, "x", "x"), extra_names=koszul_generator_matrices(X))


@pytest.fixture(scope="module")
def end_xy():
    return endomorphism_presentation(
        kmf(XY, "x", "y"), extra_names=koszul_generator_matrices(XY))


# ---- frozen differential anchors over the local model -------------------------

def test_b_kills_the_y_cycle(model):
    assert b_op(model.chain("1", ["e*"])).is_zero()


def test_b_of_e_estar(model):
    got = b_op(model.chain("e", ["e*"]))
    want = model.chain("1", ["e*"], coeff=1).mul_mono((1,)) - model.chain("1")
    assert got == want


def test_b_of_estar_e_e_needs_module_mode(model):
    got = b_op(model.chain("e*", ["e", "e"]))
    assert got == model.chain("1", ["e"]).scale(-1)


def test_b_omega_j_recurrence(model):
    # b(e[e*^j]) = x 1[e*^j] - 1[e*^(j-1)]
    for j in (1, 2, 3):
        got = b_op(model.chain("e", ["e*"] * j))
        want = (model.chain("1", ["e*"] * j).mul_mono((1,))
                - model.chain("1", ["e*"] * (j - 1)))
        assert got == want


def test_connes_operator_small_words(model):
    assert B_op(model.chain("e")) == model.chain("1", ["e"])
    assert B_op(model.chain("1", ["e"])).is_zero()
    got = B_op(model.chain("e*", ["e"]))
    assert got == model.chain("1", ["e*", "e"]) + model.chain("1", ["e", "e*"])


def test_zeta_identities(model):
    see = model.chain("e*", ["e", "e"])
    zeta = model.zero()
    for pos in range(4):
        entries = ["e"] * 4
        entries[pos] = "e*"
        zeta = zeta + model.chain("e*", entries)
    zeta = zeta.scale(-1)
    assert B_op(see) == b_op(zeta)
    mixed = model.chain("1", ["e*", "e"]) + model.chain("1", ["e", "e*"])
    assert zeta.scale(-3) == sh_op(see, mixed)


def test_module_mode_collects_monomials(model):
    spread = Chain(model, {(frozenset(), (((0,), 3), ((2,), 2))): Fraction(1)})
    packed = model.chain("e", ["e*"]).mul_mono((2,))
    assert spread == packed


def test_scalar_mode_keeps_slot_monomials(end_x2):
    spread = Chain(end_x2, {(frozenset(), (((0,), 3), ((2,), 2))): Fraction(1)})
    packed = end_x2.chain("e", ["e*"]).mul_mono((2,))
    assert spread != packed


def test_normalization_kills_identity_entries(model, end_x2):
    # module mode: any monomial multiple of the identity dies
    assert model.chain("e", [("1", (3,))]).is_zero()
    # scalar mode: only the constant identity dies
    assert end_x2.chain("e", [("1", (3,))]).terms
    assert end_x2.chain("e", ["1"]).is_zero()


# ---- the mixed complex axioms --------------------------------------------------

def _presentations():
    curved = polynomial_presentation(XY, parse_poly("x^2 + y^3", XY))
    module = endomorphism_presentation(kmf(X, "x", "x"),
                                       normalization="module")
    return [
        endomorphism_presentation(kmf(X, "x", "x")),
        endomorphism_presentation(kmf(XY, "x", "y")),
        module,
        curved,
    ]


def test_mixed_complex_axioms_random():
    rng = random.Random(20260817)
    for pres in _presentations():
        for _ in range(30):
            c = random_chain(pres, rng, max_len=4, max_exp=2, nterms=3)
            assert b_op(b_op(c)).is_zero()
            assert B_op(B_op(c)).is_zero()
            assert (b_op(B_op(c)) + B_op(b_op(c))).is_zero()


def test_curvature_insertion_anchor():
    curved = polynomial_presentation(X, parse_poly("x^2", X))
    got = b_op(curved.chain("1"))
    assert got == curved.chain("1", [("1", (2,))])


def test_curved_square_zero_needs_the_curvature_terms():
    # with the curvature declared, b^2 = 0 even on words with entries
    curved = polynomial_presentation(X, parse_poly("x^2", X))
    w = curved.chain("1", [("1", (1,)), ("1", (3,))])
    assert not b_op(w).is_zero()
    assert b_op(b_op(w)).is_zero()


# ---- shuffle products ------------------------------------------------------------

def _tensor_pair():
    A = endomorphism_presentation(kmf(XY, "x", "x"), label="sh-left")
    B = endomorphism_presentation(kmf(XY, "x", "y"), label="sh-right")
    return A, B


def _single_word(pres, rng, max_len=3):
    for _ in range(40):
        c = random_chain(pres, rng, max_len=max_len, max_exp=1, nterms=1)
        if c.terms:
            return c
    raise AssertionError("could not sample a nonzero word")


def test_shuffle_counts_and_prefactor(end_x2):
    x = end_x2.chain("e", ["e*"])
    y = end_x2.chain("e*", ["e"])
    prod = sh_op(x, y)
    # internal product: leading letters multiply (e e* = E11), entries interleave
    assert all(len(atoms) == 3 for _, atoms in prod.terms)
    assert sum(abs(c) for c in prod.terms.values()) == 2
    assert sh_op(x, x).is_zero()


def test_shuffle_is_a_chain_map_externally():
    A, B = _tensor_pair()
    rng = random.Random(99)
    for _ in range(40):
        wx = _single_word(A, rng)
        wy = _single_word(B, rng)
        sgn = (-1) ** chain_parity(wx)
        lhs = b_op(sh_op(wx, wy))
        rhs = sh_op(b_op(wx), wy) + sh_op(wx, b_op(wy)).scale(sgn)
        assert (lhs - rhs).is_zero()


def test_connes_shuffle_exchange():
    A, B = _tensor_pair()
    rng = random.Random(101)
    for _ in range(40):
        x = random_chain(A, rng, max_len=3, max_exp=1, nterms=2)
        y = random_chain(B, rng, max_len=3, max_exp=1, nterms=2)
        assert (B_op(sh_op(x, B_op(y))) - sh_op(B_op(x), B_op(y))).is_zero()


def test_cyclic_shuffle_admissible_reading():
    A, B = _tensor_pair()
    zero2 = (0, 0)
    x = Chain(A, {(frozenset(), ((zero2, 3),)): Fraction(1)})
    y = Chain(B, {(frozenset(), ((zero2, 3),)): Fraction(1)})
    prod = cyclic_sh_op(x, y)
    # one admissible interleaving: the x-letter stays ahead of the y-letter,
    # with the prefactor (-1)^{|a0|}
    assert len(prod.terms) == 1
    ((coeff),) = prod.terms.values()
    assert coeff == -1
    ((_, atoms),) = prod.terms.keys()
    assert len(atoms) == 3
    nb = len(B.parity)
    assert [idx for _, idx in atoms] == [0, 3 * nb + 0, 0 * nb + 3]


def test_kunneth_commutation_all_u_levels():
    A, B = _tensor_pair()
    rng = random.Random(2024)
    for _ in range(25):
        wx = _single_word(A, rng, max_len=2)
        wy = _single_word(B, rng, max_len=2)
        sgn = (-1) ** chain_parity(wx)
        # u^1: B sh + b Sh = sh(Bx,y) +- sh(x,By) + Sh(bx,y) +- Sh(x,by)
        lhs1 = B_op(sh_op(wx, wy)) + b_op(cyclic_sh_op(wx, wy))
        rhs1 = (sh_op(B_op(wx), wy) + sh_op(wx, B_op(wy)).scale(sgn)
                + cyclic_sh_op(b_op(wx), wy)
                + cyclic_sh_op(wx, b_op(wy)).scale(sgn))
        assert (lhs1 - rhs1).is_zero()
        # u^2: B Sh = Sh(Bx,y) +- Sh(x,By)
        lhs2 = B_op(cyclic_sh_op(wx, wy))
        rhs2 = (cyclic_sh_op(B_op(wx), wy)
                + cyclic_sh_op(wx, B_op(wy)).scale(sgn))
        assert (lhs2 - rhs2).is_zero()


def test_kunneth_product_chain_map_on_u_series():
    A, B = _tensor_pair()
    rng = random.Random(7)
    U = 4
    for _ in range(10):
        wx = _single_word(A, rng, max_len=2)
        wy = _single_word(B, rng, max_len=2)
        sgn = (-1) ** chain_parity(wx)
        ux = UChain.from_chain(wx, U)
        uy = UChain.from_chain(wy, U)
        lhs = mixed_differential(kunneth_product(ux, uy))
        rhs = (kunneth_product(mixed_differential(ux), uy)
               + kunneth_product(ux, mixed_differential(uy)).scale(sgn))
        assert (lhs - rhs).is_zero()


def test_shuffle_refuses_cech_words(model):
    word = model.chain("e").with_alpha(0)
    with pytest.raises(ChainError):
        sh_op(word, model.chain("e"))


# ---- duality ---------------------------------------------------------------------

def test_psi_point_examples(end_x2):
    P = kmf(X, "x", "x")
    ED = endomorphism_presentation(dual_mf(P),
                                   extra_names=koszul_generator_matrices(X))
    assert psi_op(end_x2.chain("1"), ED) == ED.chain("1")
    assert psi_op(end_x2.chain("e"), ED) == ED.chain("e*")
    # length one picks up the sign (-1)^1
    got = psi_op(end_x2.chain("e", ["e"]), ED)
    assert got == ED.chain("e*", ["e*"]).scale(-1)
    got2 = psi_op(end_x2.chain("1", ["e"]), ED)
    assert got2 == ED.chain("1", ["e*"]).scale(-1)


def test_psi_b_commutes_B_anticommutes(end_x2):
    P = kmf(X, "x", "x")
    ED = endomorphism_presentation(dual_mf(P))
    rng = random.Random(31)
    for _ in range(50):
        ch = random_chain(end_x2, rng, max_len=4, max_exp=2, nterms=3)
        assert (psi_op(b_op(ch), ED) - b_op(psi_op(ch, ED))).is_zero()
        assert (psi_op(B_op(ch), ED) + B_op(psi_op(ch, ED))).is_zero()


def test_psi_reverses_entry_order(end_x2):
    P = kmf(X, "x", "x")
    ED = endomorphism_presentation(dual_mf(P),
                                   extra_names=koszul_generator_matrices(X))
    got = psi_op(end_x2.chain("1", ["e", "E11"]), ED)
    ((_, atoms),) = got.terms.keys()
    names = [ED.display[idx] for _, idx in atoms]
    assert names == ["1", "E11", "e*"]


# ---- the phi tower and the Cech classes -------------------------------------------

def test_phi_zero_leading_terms(model):
    phi = phi_construct(0, 3)
    assert phi.parts[0] == model.chain("e")
    assert phi.parts[1] == model.chain("e*", ["e", "e"])
    expected2 = model.zero()
    for pos in range(4):
        entries = ["e"] * 4
        entries[pos] = "e*"
        expected2 = expected2 + model.chain("e*", entries)
    assert phi.parts[2] == expected2


def test_phi_defining_identity(model):
    for j in (0, 1, 2):
        phi = phi_construct(j, 5)
        target = UChain.from_chain(b_op(phi.parts[0]), 5)
        assert (mixed_differential(phi) - target).is_zero()


def test_phi_term_growth(model):
    phi = phi_construct(1, 4)
    assert [len(p.terms) for p in phi.parts] == [1, 3, 10, 35]


def test_eta_is_closed(model):
    for j in (0, 1, 2):
        eta = eta_construct(j, 4)
        assert cech_differential(eta).is_zero()


def test_eta_zero_leading_part(model):
    eta = eta_construct(0, 3)
    want = model.chain("1") + model.chain("e", alphas=(0,)).mul_mono((-1,))
    assert eta.parts[0] == want


def test_alpha_squares_to_zero(model):
    c = model.chain("e", ["e*"])
    assert alpha_op(alpha_op(c)).is_zero()


def test_euler_trace_of_y_powers(model):
    values = [euler_trace(y_power(j)) for j in range(5)]
    assert values == [1, 0, 0, 0, 0]


def test_euler_trace_ignores_positive_monomials(model):
    assert euler_trace(model.chain("1").mul_mono((2,))) == 0
    assert euler_trace(model.chain(("1", (0,)))) == 1
    with pytest.raises(ChainError):
        euler_trace(model.chain("1").mul_mono((-1,)))


# ---- presentation plumbing ---------------------------------------------------------

def test_local_model_tables(model):
    # d(e) = x . id, d(e*) = 0, e e* + e* e = id, e^2 = 0
    e_idx = model.names["e"][0][0]
    estar_idx = model.names["e*"][0][0]
    assert model.diff[e_idx] == (((1,), 0, Fraction(1)),)
    assert model.diff[estar_idx] == ()
    assert model.mult[(e_idx, e_idx)] == ()
    ee = dict(model.mult[(e_idx, estar_idx)])
    se = dict(model.mult[(estar_idx, e_idx)])
    total = {k: ee.get(k, 0) + se.get(k, 0) for k in set(ee) | set(se)}
    assert {k: v for k, v in total.items() if v} == {0: Fraction(1)}


def test_tensor_presentation_is_cached_and_checked():
    A, B = _tensor_pair()
    assert tensor_presentation(A, B) is tensor_presentation(A, B)
    other = polynomial_presentation(X)
    with pytest.raises(ChainError):
        tensor_presentation(A, other)


def test_chain_repr_round_trips_visually(model):
    c = model.chain("e", ["e*"], coeff=Fraction(-3, 2)).mul_mono((2,))
    assert repr(c) == "-3/2*x^2*e[e*]"
