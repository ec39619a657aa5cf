"""Permutations and small finite permutation groups.

Permutations are 0-based index maps: ``p.mapping[i] == p(i)``. Composition
``compose(p, q)`` applies ``q`` first, then ``p``.

Acting on data rows is a gather, ``act_on_rows(p, x)[i] == x[p(i)]``, so

    act_on_rows(p, act_on_rows(q, x)) == act_on_rows(compose(q, p), x)
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

DEFAULT_MAX_ORDER = 50_000


class GroupError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Permutation:
    mapping: tuple[int, ...]

    def __post_init__(self):
        mapping = tuple(int(i) for i in self.mapping)
        if sorted(mapping) != list(range(len(mapping))):
            raise GroupError(f"not a permutation of 0..{len(mapping) - 1}: {mapping}")
        object.__setattr__(self, "mapping", mapping)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def from_cycles(cls, cycles: Iterable[Sequence[int]], n: int) -> "Permutation":
        """Build from 0-based cycles; ``(0, 1, 2)`` sends 0->1, 1->2, 2->0."""
        mapping = list(range(n))
        seen: set[int] = set()
        for cyc in cycles:
            for a in cyc:
                if not 0 <= a < n or a in seen:
                    raise GroupError(f"bad cycle {tuple(cyc)} for degree {n}")
                seen.add(a)
            for a, b in zip(cyc, list(cyc[1:]) + [cyc[0]]):
                mapping[a] = b
        return cls(tuple(mapping))

    @property
    def degree(self) -> int:
        return len(self.mapping)

    def __call__(self, i: int) -> int:
        return self.mapping[i]

    def is_identity(self) -> bool:
        return all(i == j for i, j in enumerate(self.mapping))

    def cycles(self) -> list[tuple[int, ...]]:
        """Disjoint cycles of length > 1, each starting at its smallest index."""
        out, seen = [], set()
        for start in range(self.degree):
            if start in seen:
                continue
            cyc = [start]
            seen.add(start)
            j = self.mapping[start]
            while j != start:
                cyc.append(j)
                seen.add(j)
                j = self.mapping[j]
            if len(cyc) > 1:
                out.append(tuple(cyc))
        return out

    def cycle_notation(self, one_based: bool = True) -> str:
        off = 1 if one_based else 0
        cyc = self.cycles()
        if not cyc:
            return "()"
        return "".join("(" + " ".join(str(i + off) for i in c) + ")" for c in cyc)

    def sign(self) -> int:
        return -1 if sum(len(c) - 1 for c in self.cycles()) % 2 else 1

    def __repr__(self):
        return f"Permutation({list(self.mapping)})"


def compose(p: Permutation, q: Permutation) -> Permutation:
    """Return ``p o q``: apply ``q`` first, then ``p``."""
    if p.degree != q.degree:
        raise GroupError(f"degree mismatch: {p.degree} vs {q.degree}")
    pm = p.mapping
    return Permutation(tuple(pm[j] for j in q.mapping))


def inverse(p: Permutation) -> Permutation:
    inv = [0] * p.degree
    for i, j in enumerate(p.mapping):
        inv[j] = i
    return Permutation(tuple(inv))


@dataclass(frozen=True)
class PermutationGroup:
    degree: int
    elements: tuple[Permutation, ...]
    generators: tuple[Permutation, ...] = ()
    label: str = ""
    _index: dict = field(default=None, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {p: k for k, p in enumerate(self.elements)})

    @property
    def order(self) -> int:
        return len(self.elements)

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, p: Permutation) -> bool:
        return p in self._index

    def index_array(self) -> np.ndarray:
        """Element mappings stacked into an ``(order, degree)`` int array."""
        return np.array([p.mapping for p in self.elements], dtype=np.intp).reshape(
            self.order, self.degree
        )

    def is_subgroup_of(self, other: "PermutationGroup") -> bool:
        return self.degree == other.degree and all(p in other for p in self.elements)

    def __repr__(self):
        return f"PermutationGroup({self.label or '?'}, degree={self.degree}, order={self.order})"


def closure(
    generators: Sequence[Permutation],
    degree: int | None = None,
    max_order: int = DEFAULT_MAX_ORDER,
    label: str = "",
) -> PermutationGroup:
    """Breadth-first closure of ``generators`` starting from the identity.

    Elements are ordered by BFS level; within a level, lexicographically by
    mapping. The ordering depends only on the generator set.
    """
    gens = tuple(generators)
    if degree is None:
        if not gens:
            raise GroupError("degree is required when no generators are given")
        degree = gens[0].degree
    for g in gens:
        if g.degree != degree:
            raise GroupError(f"generator degree {g.degree} != {degree}")

    ident = Permutation.identity(degree)
    order = [ident]
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = set()
        for p in frontier:
            for g in gens:
                q = compose(g, p)
                if q not in seen:
                    nxt.add(q)
        level = sorted(nxt)
        seen.update(level)
        order.extend(level)
        if len(order) > max_order:
            raise GroupError(f"group too large: more than {max_order} elements")
        frontier = level
    return PermutationGroup(degree, tuple(order), gens, label)


def trivial_group(n: int) -> PermutationGroup:
    return closure([], degree=n, label=f"E{n}")


def named_group(kind: str, n: int, max_order: int = DEFAULT_MAX_ORDER) -> PermutationGroup:
    """Cyclic, dihedral, symmetric or alternating group acting on ``n`` points.

    Labels follow the usual convention where the dihedral group on ``n``
    points is written ``D{2n}``.
    """
    if n < 1:
        raise GroupError("degree must be >= 1")
    kind = kind.lower()
    rot = Permutation(tuple((i + 1) % n for i in range(n)))
    if kind == "cyclic":
        return closure([rot], n, max_order, f"Z{n}")
    if kind == "dihedral":
        refl = Permutation(tuple(n - 1 - i for i in range(n)))
        return closure([rot, refl], n, max_order, f"D{2 * n}")
    if kind == "symmetric":
        if math.factorial(n) > max_order:
            raise GroupError(f"group too large: S{n} has {math.factorial(n)} elements")
        gens = [rot, Permutation.from_cycles([(0, 1)], n)] if n > 1 else []
        return closure(gens, n, max_order, f"S{n}")
    if kind == "alternating":
        if math.factorial(n) // 2 > max_order:
            raise GroupError(f"group too large: A{n} has {math.factorial(n) // 2} elements")
        gens = [Permutation.from_cycles([(i, i + 1, i + 2)], n) for i in range(n - 2)]
        return closure(gens, n, max_order, f"A{n}")
    raise GroupError(f"unsupported group kind: {kind!r}")


def direct_product(g: PermutationGroup, h: PermutationGroup) -> PermutationGroup:
    """``g`` on the first ``g.degree`` indices, ``h`` on the block after it."""
    off = g.degree
    elems = [
        Permutation(a.mapping + tuple(off + j for j in b.mapping))
        for a in g.elements
        for b in h.elements
    ]
    gens = [Permutation(a.mapping + tuple(range(off, off + h.degree))) for a in g.generators]
    gens += [Permutation(tuple(range(off)) + tuple(off + j for j in b.mapping)) for b in h.generators]
    return PermutationGroup(off + h.degree, tuple(elems), tuple(gens), f"{g.label}x{h.label}")


def extend_identity(g: PermutationGroup, extra: int) -> PermutationGroup:
    """Act as ``g`` on the first indices and fix ``extra`` trailing indices."""
    if extra == 0:
        return g
    out = direct_product(g, trivial_group(extra))
    return PermutationGroup(out.degree, out.elements, out.generators, g.label)


def lift(g: PermutationGroup, block: int) -> PermutationGroup:
    """Action on the flattened ``(degree, block)`` array, moving whole rows."""
    elems = tuple(
        Permutation(tuple(p(i) * block + c for i in range(g.degree) for c in range(block)))
        for p in g.elements
    )
    gens = tuple(
        Permutation(tuple(p(i) * block + c for i in range(g.degree) for c in range(block)))
        for p in g.generators
    )
    return PermutationGroup(g.degree * block, elems, gens, g.label)


def is_rotation_subgroup(g: PermutationGroup) -> bool:
    """True when every element is a power of the index cycle (0 1 ... n-1)."""
    n = g.degree
    rots = {Permutation(tuple((i + k) % n for i in range(n))) for k in range(n)}
    return all(p in rots for p in g.elements)


def act_on_rows(p: Permutation, x):
    """Gather rows: ``out[i] = x[p(i)]``. Tensors stay differentiable."""
    from .tensor import Tensor, take

    if isinstance(x, Tensor):
        if x.shape[0] != p.degree:
            raise GroupError(f"expected {p.degree} rows, got shape {x.shape}")
        return take(x, np.array(p.mapping), axis=0)
    x = np.asarray(x)
    if x.shape[0] != p.degree:
        raise GroupError(f"expected {p.degree} rows, got shape {x.shape}")
    return x[list(p.mapping)]


_CYCLE_RE = re.compile(r"\(([^()]*)\)")


def parse_group(spec: str, max_order: int = DEFAULT_MAX_ORDER) -> PermutationGroup:
    """Parse ``Z5``, ``D8``, ``S4``, ``A4``, ``E2``, ``S3xS2`` or ``gen:(1 2 3 4)(...)``.

    ``gen:`` takes 1-based cycle notation; ``;`` separates generators, e.g.
    ``gen:(1 2 3 4);(1 3)``. A ``/n`` suffix fixes the degree.
    """
    spec = spec.strip()
    if spec.startswith("gen:"):
        body = spec[4:]
        degree = None
        if "/" in body:
            body, deg = body.rsplit("/", 1)
            degree = int(deg)
        gens_cycles = []
        for part in body.split(";"):
            cycs = [[int(t) - 1 for t in c.split()] for c in _CYCLE_RE.findall(part)]
            cycs = [c for c in cycs if c]
            gens_cycles.append(cycs)
        top = max((max(c) for cs in gens_cycles for c in cs), default=-1) + 1
        degree = degree or top
        if degree < 1:
            raise GroupError(f"cannot infer degree from {spec!r}")
        gens = [Permutation.from_cycles(cs, degree) for cs in gens_cycles]
        return closure(gens, degree, max_order, spec)

    if not spec:
        raise GroupError("empty group spec")
    parts = re.split(r"[x×]", spec)
    groups = []
    for part in parts:
        m = re.fullmatch(r"([ZDSAE])(\d+)", part)
        if not m:
            raise GroupError(f"cannot parse group {part!r}")
        kind, k = m.group(1), int(m.group(2))
        if kind == "D":
            if k % 2:
                raise GroupError(f"dihedral label must be even (D2n): {part!r}")
            groups.append(named_group("dihedral", k // 2, max_order))
        elif kind == "E":
            groups.append(trivial_group(k))
        else:
            kinds = {"Z": "cyclic", "S": "symmetric", "A": "alternating"}
            groups.append(named_group(kinds[kind], k, max_order))
    out = groups[0]
    for g in groups[1:]:
        out = direct_product(out, g)
    return PermutationGroup(out.degree, out.elements, out.generators, spec)
