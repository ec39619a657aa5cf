"""Invariant polynomials: benchmark targets, orbit sums and candidate generators.

Coefficients are exact (``fractions.Fraction``); evaluation casts to float.
Terms are kept in graded-lex order: by total degree, then by exponent
vector in decreasing lexicographic order (``x1^2, x1*x2, x2^2``).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .permgroup import Permutation, PermutationGroup, parse_group

DEFAULT_CANDIDATE_CAP = 20_000


class CandidateExplosion(RuntimeError):
    pass


@dataclass(frozen=True, order=True)
class Monomial:
    exponents: tuple[int, ...]

    @property
    def degree(self) -> int:
        return sum(self.exponents)

    @property
    def n_vars(self) -> int:
        return len(self.exponents)

    def permuted(self, p: Permutation) -> "Monomial":
        """Exponents of ``psi(g(x))``: variable ``i`` moves to ``p(i)``."""
        e = [0] * len(self.exponents)
        for i, b in enumerate(self.exponents):
            e[p(i)] = b
        return Monomial(tuple(e))

    def format(self) -> str:
        parts = []
        for i, b in enumerate(self.exponents):
            if b == 1:
                parts.append(f"x{i + 1}")
            elif b > 1:
                parts.append(f"x{i + 1}^{b}")
        return "*".join(parts) or "1"


def grlex_key(m: Monomial):
    return (m.degree, tuple(-b for b in m.exponents))


@dataclass(frozen=True)
class InvariantPolynomial:
    terms: tuple[tuple[Fraction, Monomial], ...]
    n_vars: int
    group: str = ""

    @classmethod
    def from_terms(cls, terms, n_vars: int, group: str = "") -> "InvariantPolynomial":
        acc: dict[Monomial, Fraction] = {}
        for c, m in terms:
            if m.n_vars != n_vars:
                raise ValueError(f"monomial over {m.n_vars} variables, expected {n_vars}")
            acc[m] = acc.get(m, Fraction(0)) + Fraction(c)
        ordered = sorted((m for m, c in acc.items() if c != 0), key=grlex_key)
        return cls(tuple((acc[m], m) for m in ordered), n_vars, group)

    @property
    def degree(self) -> int:
        return max((m.degree for _, m in self.terms), default=0)

    def scaled(self, factor) -> "InvariantPolynomial":
        f = Fraction(factor)
        return InvariantPolynomial(tuple((c * f, m) for c, m in self.terms), self.n_vars, self.group)

    def normalized(self) -> "InvariantPolynomial":
        """Scale so the first graded-lex coefficient is 1."""
        if not self.terms:
            return self
        return self.scaled(1 / self.terms[0][0])

    def __call__(self, x):
        return eval_poly(self, x)

    def format(self) -> str:
        return format_poly(self)


def format_poly(p: InvariantPolynomial) -> str:
    if not p.terms:
        return "0"
    parts = []
    for c, m in p.terms:
        if not m.degree:
            parts.append(str(c))
        elif c == 1:
            parts.append(m.format())
        else:
            parts.append(f"{c}*{m.format()}")
    return " + ".join(parts)


def eval_poly(p: InvariantPolynomial, x, dtype=np.float64):
    """Evaluate on a vector or on a batch ``(..., n_vars)``."""
    x = np.asarray(x, dtype=dtype)
    if x.shape[-1] != p.n_vars:
        raise ValueError(f"expected {p.n_vars} variables, got {x.shape[-1]}")
    out = np.zeros(x.shape[:-1], dtype=dtype)
    for c, m in p.terms:
        term = np.ones(x.shape[:-1], dtype=dtype)
        for i, b in enumerate(m.exponents):
            if b:
                term = term * x[..., i] ** b
        out = out + float(c) * term
    return out


def _poly_from_spec(spec: Sequence[tuple[int, Sequence[int]]], group: str) -> InvariantPolynomial:
    # spec: (coefficient, 1-based variable indices with multiplicity)
    terms = []
    for c, idx in spec:
        e = [0] * 5
        for i in idx:
            e[i - 1] += 1
        terms.append((c, Monomial(tuple(e))))
    return InvariantPolynomial.from_terms(terms, 5, group)


# target polynomials on five variables, with the group each is invariant under
_BENCHMARKS = {
    "PZ5": ("Z5", [(1, (1, 2, 2)), (1, (2, 3, 3)), (1, (3, 4, 4)), (1, (4, 5, 5)), (1, (5, 1, 1))]),
    "PZ3": ("Z3xE2", [(1, (1, 2, 2)), (1, (2, 3, 3)), (1, (3, 1, 1)), (2, (4,)), (1, (5,))]),
    "PS3": ("S3xE2", [(1, (1, 2, 3)), (2, (4,)), (1, (5,))]),
    "PS3xS2": ("S3xS2", [(1, (1, 2, 3)), (1, (4,)), (1, (5,))]),
    "PD8": (
        "D8xE1",
        [(1, (1, 2, 2)), (1, (2, 3, 3)), (1, (3, 4, 4)), (1, (4, 1, 1)),
         (1, (2, 1, 1)), (1, (3, 2, 2)), (1, (4, 3, 3)), (1, (1, 4, 4)), (1, (5,))],
    ),
    "PA4": (
        "A4xE1",
        [(1, (1, 2)), (1, (3, 4)), (1, (1, 3)), (1, (2, 4)), (1, (1, 4)), (1, (2, 3)),
         (1, (1, 2, 3)), (1, (1, 2, 4)), (1, (1, 3, 4)), (1, (2, 3, 4)), (1, (5,))],
    ),
    "PS4": ("S4xE1", [(1, (1, 2, 3, 4)), (1, (5,))]),
}

BENCHMARK_NAMES = tuple(_BENCHMARKS)


def benchmark_polynomial(name: str) -> InvariantPolynomial:
    key = name.replace("_", "").replace("×", "x")
    if key not in _BENCHMARKS:
        raise KeyError(f"unknown benchmark polynomial {name!r}; choose from {', '.join(_BENCHMARKS)}")
    label, spec = _BENCHMARKS[key]
    return _poly_from_spec(spec, label)


def benchmark_group(name: str) -> PermutationGroup:
    """The symmetry group of a benchmark polynomial, acting on all 5 variables."""
    return parse_group(benchmark_polynomial(name).group)


def enumerate_monomials(n_vars: int, max_degree: int) -> list[Monomial]:
    if max_degree < 1:
        raise ValueError("max_degree must be >= 1")
    out = []
    for d in range(1, max_degree + 1):
        for combo in itertools.combinations_with_replacement(range(n_vars), d):
            e = [0] * n_vars
            for i in combo:
                e[i] += 1
            out.append(Monomial(tuple(e)))
    return out


def monomial_count(n_vars: int, max_degree: int) -> int:
    return math.comb(n_vars + max_degree, max_degree) - 1


def reynolds_symmetrize(m: Monomial, group: PermutationGroup) -> InvariantPolynomial:
    """Orbit sum ``sum_g psi(g(x))`` with like terms merged."""
    if m.n_vars != group.degree:
        raise ValueError(f"monomial over {m.n_vars} variables, group degree {group.degree}")
    return InvariantPolynomial.from_terms(
        [(1, m.permuted(g)) for g in group.elements], m.n_vars, group.label
    )


def generating_candidates(
    group: PermutationGroup,
    n_vars: int | None = None,
    max_degree: int | None = None,
    cap: int = DEFAULT_CANDIDATE_CAP,
) -> list[InvariantPolynomial]:
    """Normalised orbit sums of every monomial up to ``max_degree`` (default |G|).

    Polynomials equal up to a scalar factor appear once; each is scaled so its
    first graded-lex coefficient is 1.
    """
    n_vars = group.degree if n_vars is None else n_vars
    if n_vars != group.degree:
        raise ValueError(f"n_vars={n_vars} must equal the group degree {group.degree}")
    max_degree = group.order if max_degree is None else max_degree
    out: list[InvariantPolynomial] = []
    covered: set[Monomial] = set()
    keys: set = set()
    for m in enumerate_monomials(n_vars, max_degree):
        if m in covered:
            continue
        p = reynolds_symmetrize(m, group).normalized()
        covered.update(t for _, t in p.terms)
        key = p.terms
        if key in keys:
            continue
        keys.add(key)
        out.append(p)
        if len(out) > cap:
            raise CandidateExplosion(
                f"more than {cap} invariant candidates for {group.label or 'group'} "
                f"up to degree {max_degree}"
            )
    return out


class PolynomialFeatures:
    """Evaluate many polynomials at once via a shared monomial table."""

    def __init__(self, polys: Sequence[InvariantPolynomial]):
        if not polys:
            raise ValueError("need at least one polynomial")
        self.n_vars = polys[0].n_vars
        monos: dict[Monomial, int] = {}
        for p in polys:
            for _, m in p.terms:
                monos.setdefault(m, len(monos))
        self.exponents = np.array([m.exponents for m in monos], dtype=np.int64)
        coef = np.zeros((len(monos), len(polys)))
        for k, p in enumerate(polys):
            for c, m in p.terms:
                coef[monos[m], k] = float(c)
        self.coefficients = coef
        self.polys = list(polys)

    @property
    def n_features(self) -> int:
        return self.coefficients.shape[1]

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        lead = x.shape[:-1]
        x2 = x.reshape(-1, self.n_vars)
        mono = np.ones((x2.shape[0], len(self.exponents)))
        for i in range(self.n_vars):
            e = self.exponents[:, i]
            if e.any():
                mono *= x2[:, i:i + 1] ** e[None, :]
        return (mono @ self.coefficients).reshape(lead + (self.n_features,))


def is_invariant(p: InvariantPolynomial, group: PermutationGroup, x, rtol: float = 1e-9) -> bool:
    x = np.asarray(x, dtype=np.float64)
    base = eval_poly(p, x)
    for g in group.elements:
        gx = x[..., list(g.mapping)]
        if not np.allclose(eval_poly(p, gx), base, rtol=rtol, atol=rtol):
            return False
    return True


__all__ = [
    "BENCHMARK_NAMES",
    "CandidateExplosion",
    "InvariantPolynomial",
    "Monomial",
    "PolynomialFeatures",
    "benchmark_group",
    "benchmark_polynomial",
    "enumerate_monomials",
    "eval_poly",
    "format_poly",
    "generating_candidates",
    "is_invariant",
    "monomial_count",
    "reynolds_symmetrize",
]
