from fractions import Fraction
from math import comb

import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from ginvnet.invariants import (
    BENCHMARK_NAMES,
    CandidateExplosion,
    Monomial,
    PolynomialFeatures,
    benchmark_group,
    benchmark_polynomial,
    enumerate_monomials,
    eval_poly,
    generating_candidates,
    is_invariant,
    monomial_count,
    reynolds_symmetrize,
)
from ginvnet.permgroup import Permutation, named_group, parse_group, trivial_group

X = sympy.symbols("x1:6")

# the benchmark formulas typed independently as sympy expressions
SYMPY_BENCHMARKS = {
    "PZ5": X[0] * X[1]**2 + X[1] * X[2]**2 + X[2] * X[3]**2 + X[3] * X[4]**2 + X[4] * X[0]**2,
    "PZ3": X[0] * X[1]**2 + X[1] * X[2]**2 + X[2] * X[0]**2 + 2 * X[3] + X[4],
    "PS3": X[0] * X[1] * X[2] + 2 * X[3] + X[4],
    "PS3xS2": X[0] * X[1] * X[2] + X[3] + X[4],
    "PD8": (X[0] * X[1]**2 + X[1] * X[2]**2 + X[2] * X[3]**2 + X[3] * X[0]**2
            + X[1] * X[0]**2 + X[2] * X[1]**2 + X[3] * X[2]**2 + X[0] * X[3]**2 + X[4]),
    "PA4": (X[0] * X[1] + X[2] * X[3] + X[0] * X[2] + X[1] * X[3] + X[0] * X[3] + X[1] * X[2]
            + X[0] * X[1] * X[2] + X[0] * X[1] * X[3] + X[0] * X[2] * X[3] + X[1] * X[2] * X[3] + X[4]),
    "PS4": X[0] * X[1] * X[2] * X[3] + X[4],
}


def to_sympy(p):
    xs = sympy.symbols(f"x1:{p.n_vars + 1}")
    return sympy.expand(sum(sympy.Rational(c.numerator, c.denominator) * sympy.Mul(
        *[x**e for x, e in zip(xs, m.exponents)]) for c, m in p.terms))


@pytest.mark.parametrize("name", BENCHMARK_NAMES)
def test_benchmarks_match_independent_formulas(name):
    assert sympy.expand(to_sympy(benchmark_polynomial(name)) - SYMPY_BENCHMARKS[name]) == 0


def test_benchmark_values():
    assert eval_poly(benchmark_polynomial("PZ5"), np.ones(5)) == 5.0
    assert eval_poly(benchmark_polynomial("PZ5"), np.arange(1.0, 6.0)) == 175.0
    assert eval_poly(benchmark_polynomial("PS4"), np.arange(1.0, 6.0)) == 29.0


@pytest.mark.parametrize("name", BENCHMARK_NAMES)
def test_benchmarks_invariant_under_their_group(name):
    x = np.random.default_rng(0).uniform(size=(20, 5))
    assert is_invariant(benchmark_polynomial(name), benchmark_group(name), x)


def test_pz3_not_s3_invariant():
    p = benchmark_polynomial("PZ3")
    x = np.array([1.0, 2.0, 3.0, 0.0, 0.0])
    assert eval_poly(p, x) == 25.0
    assert eval_poly(p, x[[1, 0, 2, 3, 4]]) == 23.0
    assert not is_invariant(p, benchmark_group("PS3"), x[None])


def test_benchmark_group_orders():
    orders = {k: benchmark_group(k).order for k in BENCHMARK_NAMES}
    assert orders == {"PZ5": 5, "PZ3": 3, "PS3": 6, "PS3xS2": 12, "PD8": 8, "PA4": 12, "PS4": 24}


def test_unknown_benchmark():
    with pytest.raises(KeyError):
        benchmark_polynomial("PQ7")


def test_enumerate_monomials():
    ms = enumerate_monomials(2, 2)
    assert [m.exponents for m in ms] == [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    assert len(enumerate_monomials(5, 5)) == monomial_count(5, 5) == comb(10, 5) - 1 == 251
    assert [m.exponents for m in enumerate_monomials(3, 1)] == [(1, 0, 0), (0, 1, 0), (0, 0, 1)]


def test_monomial_format_and_permute():
    m = Monomial((1, 2, 0))
    assert m.format() == "x1*x2^2"
    assert m.permuted(Permutation((1, 2, 0))).exponents == (0, 1, 2)


def test_symmetrize_examples():
    s2 = named_group("symmetric", 2)
    assert reynolds_symmetrize(Monomial((1, 0)), s2).format() == "x1 + x2"
    z3 = named_group("cyclic", 3)
    got = to_sympy(reynolds_symmetrize(Monomial((1, 2, 0)), z3))
    x1, x2, x3 = sympy.symbols("x1:4")
    assert sympy.expand(got - (x1 * x2**2 + x2 * x3**2 + x3 * x1**2)) == 0
    assert reynolds_symmetrize(Monomial((1, 1)), s2).terms == ((Fraction(2), Monomial((1, 1))),)
    z4 = named_group("cyclic", 4)
    assert reynolds_symmetrize(Monomial((1, 1, 1, 1)), z4).terms == ((Fraction(4), Monomial((1, 1, 1, 1))),)


def _sympy_orbit_sums(group, max_degree):
    """Distinct orbit sums via sympy substitution (independent of the package code)."""
    n = group.degree
    xs = sympy.symbols(f"x1:{n + 1}")
    seen = set()
    for d in range(1, max_degree + 1):
        for mono in sympy.polys.monomials.itermonomials(xs, d, d):
            s = sympy.expand(sum(mono.subs({xs[i]: xs[g(i)] for i in range(n)}, simultaneous=True)
                                 for g in group.elements))
            lead = sympy.Poly(s, *xs).coeffs()[0]
            seen.add(sympy.expand(s / lead))
    return seen


@pytest.mark.parametrize("spec,degree", [("S2", 2), ("Z3", 3), ("D8", 3), ("S3", 3)])
def test_candidates_match_sympy_orbit_sums(spec, degree):
    g = parse_group(spec)
    ours = generating_candidates(g, max_degree=degree)
    oracle = _sympy_orbit_sums(g, degree)
    assert len(ours) == len(oracle)
    assert {sympy.expand(to_sympy(p) / to_sympy(p).as_poly().coeffs()[0]) for p in ours} == oracle


def test_candidates_s2_example():
    got = [p.format() for p in generating_candidates(named_group("symmetric", 2), 2, 2)]
    assert sorted(got) == sorted(["x1 + x2", "x1^2 + x2^2", "x1*x2"])


def test_candidates_trivial_group_are_monomials():
    polys = generating_candidates(trivial_group(3), max_degree=2)
    assert [p.terms[0][1] for p in polys] == enumerate_monomials(3, 2)


def test_candidates_default_degree_is_group_order():
    g = named_group("cyclic", 3)
    assert max(p.degree for p in generating_candidates(g)) == 3


def test_candidate_cap():
    with pytest.raises(CandidateExplosion):
        generating_candidates(named_group("cyclic", 5), max_degree=5, cap=10)


def test_polynomial_features_match_single_evaluation():
    polys = generating_candidates(named_group("dihedral", 4), max_degree=4)
    x = np.random.default_rng(0).uniform(-1, 1, size=(7, 4))
    feats = PolynomialFeatures(polys)(x)
    expected = np.stack([eval_poly(p, x) for p in polys], axis=1)
    np.testing.assert_allclose(feats, expected, rtol=1e-12)


@given(st.lists(st.integers(-3, 3), min_size=4, max_size=4))
def test_features_exactly_invariant_on_integers(vals):
    g = named_group("alternating", 4)
    feats = PolynomialFeatures(generating_candidates(g))
    x = np.array(vals, dtype=np.float64)
    base = feats(x)
    for h in g:
        np.testing.assert_array_equal(feats(x[list(h.mapping)]), base)
