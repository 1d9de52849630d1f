"""Acceptance gate: the ten end-to-end checks, each printing one verdict line.

Run with `pytest -v -s tests/test_acceptance.py` to see the lines; each test
also enforces its wall-clock budget where one is part of the contract.
"""

from __future__ import annotations

import json
import random
import subprocess
import time
from fractions import Fraction

from mfhrr.groebner import quotient_basis
from mfhrr.homalg import ext_dims, ext_dims_truncated
from mfhrr.pairing import (
    default_corpus,
    local_residue_suite,
    mixed_axioms_suite,
    phi_eta_suite,
    run_corpus,
    shuffle_suite,
    trace_chain_map_suite,
)
from mfhrr.pairing import _load_entry_mf
from mfhrr.polyring import Poly, parse_poly
from mfhrr.residue import ResidueProblem, groth_residue, jacobian_cover, res_monomial

XY = ("x", "y")


def _stamp(label, started, bound=None):
    elapsed = time.perf_counter() - started
    if bound is not None:
        assert elapsed < bound, f"{label}: {elapsed:.1f}s over the {bound}s budget"
    print(f"{label}: PASS ({elapsed:.1f}s)")


def test_criterion_01_mixed_complex_axioms():
    started = time.perf_counter()
    rep = mixed_axioms_suite(count=200, seed=20260817)
    assert rep["pass"] and rep["chains"] >= 200 and rep["failures"] == 0
    _stamp("criterion 1, mixed complex axioms", started, 10)


def test_criterion_02_shuffle_identities():
    started = time.perf_counter()
    rep = shuffle_suite(count=100, seed=2024, utrunc=4)
    assert rep["pass"] and rep["pairs"] >= 100 and rep["failures"] == 0
    _stamp("criterion 2, shuffle identities", started, 30)


def test_criterion_03_tower_construction():
    started = time.perf_counter()
    rep = phi_eta_suite(jmax=4, order=6)
    assert rep["pass"] and rep["phi"] and rep["eta"]
    _stamp("criterion 3, phi tower and eta closure", started, 30)


def test_criterion_04_residue_vs_trace():
    started = time.perf_counter()
    rep = local_residue_suite(jmax=4, order=3)
    assert rep["pass"]
    for row in rep["values"]:
        if row["j"] == 0:
            assert row["res"] == {"0": "-1"} and row["trace"] == "1"
        else:
            assert row["res"] == {} and row["trace"] == "0"
    _stamp("criterion 4, residue against operator trace", started, 10)


def test_criterion_05_trace_chain_map():
    started = time.perf_counter()
    rep = trace_chain_map_suite(count=100, seed=424242)
    assert rep["pass"] and rep["chains"] >= 100 and rep["failures"] == 0
    _stamp("criterion 5, trace chain map", started, 30)


def test_criterion_06_residue_engine():
    started = time.perf_counter()
    # monomial table
    assert res_monomial(Poly.one(("x",)), (1,)) == 1
    assert res_monomial(Poly.one(XY), (1, 1)) == 1
    assert res_monomial(Poly.one(("x",)), (2,)) == 0
    assert res_monomial(parse_poly("x", ("x",)), (2,)) == 1
    # cover independence on two distinct covers
    f = parse_poly("x^2 + y^3", XY)
    partials = [f.partial(0), f.partial(1)]
    base = ResidueProblem(Poly.one(XY), partials)
    small, big = base.cover(), base.cover((2, 2))
    assert small.exponents != big.exponents
    rng = random.Random(6401)
    for _ in range(20):
        terms = {tuple(rng.randrange(4) for _ in XY): Fraction(rng.randrange(-5, 6))
                 for _ in range(4)}
        g = Poly(XY, terms)
        prob = ResidueProblem(g, partials)
        assert groth_residue(prob, small) == groth_residue(prob, big)
    # vanishing on Jacobian multiples
    for fs, vs in (("x*y", XY), ("x^2 + y^3", XY), ("x^4", ("x",))):
        h = parse_poly(fs, vs)
        hparts = [h.partial(i) for i in range(len(vs))]
        for i in range(len(vs)):
            g = parse_poly("1", vs) + Poly.monomial(vs, (1,) * len(vs))
            assert groth_residue(ResidueProblem(g * h.partial(i), hparts)) == 0
    # Milnor pairing nondegeneracy
    for fs in ("x*y", "x^2 + y^3"):
        g = parse_poly(fs, XY)
        gparts = [g.partial(0), g.partial(1)]
        cov = jacobian_cover(g)
        monos = quotient_basis(ResidueProblem(Poly.one(XY), gparts).gb)
        basis = [Poly.monomial(XY, m) for m in monos]
        gram = [[groth_residue(ResidueProblem(p * q, gparts), cov) for q in basis]
                for p in basis]
        assert _rank(gram) == len(basis)
    _stamp("criterion 6, residue engine", started, 30)


def _rank(matrix):
    rows = [list(r) for r in matrix]
    r = 0
    for col in range(len(rows[0]) if rows else 0):
        piv = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                c = rows[i][col] / rows[r][col]
                rows[i] = [a - c * b for a, b in zip(rows[i], rows[r])]
        r += 1
    return r


def test_criterion_07_index_identity_corpus():
    started = time.perf_counter()
    report = run_corpus(default_corpus(), suites=False, only_checks=("hrr",))
    assert report["summary"]["pass"] is True
    by_name = {e["name"]: e for e in report["entries"]}
    for d in range(2, 7):
        assert all(r["chi_ext"] == 0 and r["chi_residue"] == "0"
                   for r in by_name[f"x^{d}"]["hrr"])
    xy_diag = [r for r in by_name["x*y"]["hrr"] if r["p"] == r["q"]]
    assert all(r["chi_ext"] == 1 and r["chi_residue"] == "1" for r in xy_diag)
    for name in ("x^2 + y^3", "x^2 + y^4", "x^2 + y^2 + z^2"):
        assert all(r["pass"] for r in by_name[name]["hrr"])
    _stamp("criterion 7, index identity over the corpus", started, 300)


def test_criterion_08_symmetry_laws():
    started = time.perf_counter()
    report = run_corpus(default_corpus(), suites=False,
                        only_checks=("symmetry", "shift", "sum"))
    assert report["summary"]["pass"] is True
    for e in report["entries"]:
        assert e["symmetry"]["pass"] and e["shift"]["pass"]
    _stamp("criterion 8, symmetry and shift laws", started)


def test_criterion_09_ext_oracle_equivalence():
    started = time.perf_counter()
    for entry in default_corpus():
        variables = tuple(entry["vars"])
        mfs = [_load_entry_mf(s, variables) for s in entry["mfs"]]
        for P in mfs:
            for Q in mfs:
                rep = ext_dims(P, Q)
                assert (rep.dim_ext0, rep.dim_ext1) == ext_dims_truncated(P, Q)
    _stamp("criterion 9, two independent Ext computations agree", started)


def test_criterion_10_deterministic_reports():
    started = time.perf_counter()
    argv = ["mfhrr", "corpus", "--seed", "11"]
    first = subprocess.run(argv, capture_output=True)
    second = subprocess.run(argv, capture_output=True)
    assert first.returncode == 0 and second.returncode == 0
    assert first.stdout == second.stdout
    assert b"seconds" not in first.stdout
    report = json.loads(first.stdout)
    assert report["summary"]["pass"] is True and report["summary"]["seed"] == 11
    _stamp("criterion 10, byte-identical reports", started)
