"""Finite subsets of GF(q): set operations, representation functions,
structured families, and graph-restricted (partial) operations.

An FSet stores deduplicated canonical encodings in strictly increasing
order, so every set-valued result is deterministic and reports are
reproducible byte for byte.  Zero exclusion is enforced only where an
operation actually inverts (ratio sets, reciprocals), not globally.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence

from .errors import (
    FieldMismatch,
    InvalidParams,
    ZeroDilation,
    ZeroInDenominator,
)
from .field import FieldSpec, default_modulus


@dataclass(frozen=True)
class FSet:
    """A finite subset of a field, canonically ordered."""

    field: FieldSpec
    elems: tuple[int, ...]

    @staticmethod
    def of(field: FieldSpec, items: Iterable[int]) -> "FSet":
        enc = sorted({int(x) for x in items})
        for x in enc:
            if not 0 <= x < field.q:
                raise InvalidParams(f"encoding {x} outside {field!r}")
        return FSet(field, tuple(enc))

    def __len__(self) -> int:
        return len(self.elems)

    def __iter__(self) -> Iterator[int]:
        return iter(self.elems)

    def __contains__(self, x: int) -> bool:
        return x in set(self.elems)

    def as_set(self) -> set[int]:
        return set(self.elems)

    @property
    def has_zero(self) -> bool:
        return bool(self.elems) and self.elems[0] == 0

    def without_zero(self) -> "FSet":
        return FSet(self.field, tuple(x for x in self.elems if x != 0))

    def descriptor(self) -> dict:
        return {"size": len(self.elems), "elems": list(self.elems)}

    def __repr__(self):
        inner = ",".join(map(str, self.elems[:8]))
        tail = ",..." if len(self.elems) > 8 else ""
        return f"FSet({self.field!r}, {{{inner}{tail}}})"


def _require_same_field(A: FSet, B: FSet) -> FieldSpec:
    if A.field != B.field:
        raise FieldMismatch(f"{A.field!r} vs {B.field!r}")
    return A.field


# ---------------------------------------------------------------------------
# Elementwise set operations
# ---------------------------------------------------------------------------

def sumset(A: FSet, B: FSet) -> FSet:
    F = _require_same_field(A, B)
    return FSet.of(F, {F.add(a, b) for a in A for b in B})


def difference_set(A: FSet, B: FSet) -> FSet:
    F = _require_same_field(A, B)
    return FSet.of(F, {F.sub(a, b) for a in A for b in B})


def product_set(A: FSet, B: FSet) -> FSet:
    F = _require_same_field(A, B)
    return FSet.of(F, {F.mul(a, b) for a in A for b in B})


def ratio_set(A: FSet, B: FSet) -> FSet:
    F = _require_same_field(A, B)
    if B.has_zero:
        raise ZeroInDenominator("0 in B for A/B")
    inv = {b: F.inv(b) for b in B}
    return FSet.of(F, {F.mul(a, inv[b]) for a in A for b in B})


def inverse_set(A: FSet) -> FSet:
    """The set 1/A = {a^-1 : a in A}."""
    if A.has_zero:
        raise ZeroInDenominator("0 in A for 1/A")
    F = A.field
    return FSet.of(F, {F.inv(a) for a in A})


def dilate_translate(A: FSet, c: int, d: int = 0) -> FSet:
    """The set cA + d; c must be nonzero so cardinality is preserved."""
    F = A.field
    if F.m == 1:
        c, d = c % F.p, d % F.p
    if c == 0:
        raise ZeroDilation("dilation by 0")
    return FSet.of(F, {F.add(F.mul(c, a), d) for a in A})


def quotient_set(X: FSet) -> FSet:
    """R(X) = {(x1-x2)/(x3-x4) : x_i in X, x3 != x4}; contains 0 and 1."""
    if len(X) < 2:
        raise InvalidParams("quotient set needs |X| >= 2")
    F = X.field
    diffs = {F.sub(x, y) for x in X for y in X}
    nz = [d for d in diffs if d != 0]
    inv = {d: F.inv(d) for d in nz}
    out = {F.mul(d1, inv[d2]) for d1 in diffs for d2 in nz}
    return FSet.of(F, out)


def rep_function(X: FSet, Y: FSet, kind: str) -> Counter:
    """Representation counts r_{XY}(z) over pairs (x, y) in X x Y.

    kind: "sum" z = x+y, "difference" z = x-y, "product" z = xy,
    "ratio" z = y/x (the denominator is the first coordinate, so the
    ratio kind requires 0 not in X).  Always sums to |X||Y|.
    """
    F = _require_same_field(X, Y)
    r: Counter = Counter()
    if kind == "sum":
        for x in X:
            for y in Y:
                r[F.add(x, y)] += 1
    elif kind == "difference":
        for x in X:
            for y in Y:
                r[F.sub(x, y)] += 1
    elif kind == "product":
        for x in X:
            for y in Y:
                r[F.mul(x, y)] += 1
    elif kind == "ratio":
        if X.has_zero:
            raise ZeroInDenominator("ratio kind requires 0 not in X")
        for x in X:
            ix = F.inv(x)
            for y in Y:
                r[F.mul(y, ix)] += 1
    else:
        raise InvalidParams(f"unknown rep-function kind {kind!r}")
    return r


def rep_function_mult(X: FSet, Y: FSet) -> Counter:
    return rep_function(X, Y, "product")


def rep_function_add(X: FSet, Y: FSet) -> Counter:
    return rep_function(X, Y, "sum")


# ---------------------------------------------------------------------------
# Pair graphs and partial operations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PairGraph:
    """A subset of X x Y, stored as sorted index pairs into the two sets."""

    X: FSet
    Y: FSet
    pairs: tuple[tuple[int, int], ...]

    @staticmethod
    def of(X: FSet, Y: FSet, pairs: Iterable[tuple[int, int]]) -> "PairGraph":
        _require_same_field(X, Y)
        ps = sorted(set(pairs))
        for i, j in ps:
            if not (0 <= i < len(X) and 0 <= j < len(Y)):
                raise InvalidParams(f"pair index ({i},{j}) out of range")
        return PairGraph(X, Y, tuple(ps))

    @staticmethod
    def full(X: FSet, Y: FSet) -> "PairGraph":
        return PairGraph.of(X, Y, ((i, j) for i in range(len(X)) for j in range(len(Y))))

    @staticmethod
    def from_predicate(X: FSet, Y: FSet, pred: Callable[[int, int], bool]) -> "PairGraph":
        """Edges are element pairs (x, y) with pred(x, y) true."""
        return PairGraph.of(
            X, Y,
            ((i, j) for i, x in enumerate(X.elems) for j, y in enumerate(Y.elems) if pred(x, y)),
        )

    def __len__(self) -> int:
        return len(self.pairs)

    def elem_pairs(self) -> Iterator[tuple[int, int]]:
        for i, j in self.pairs:
            yield self.X.elems[i], self.Y.elems[j]

    def degrees_x(self) -> Counter:
        d: Counter = Counter()
        for i, _ in self.pairs:
            d[i] += 1
        return d

    def degrees_y(self) -> Counter:
        d: Counter = Counter()
        for _, j in self.pairs:
            d[j] += 1
        return d


def partial_op(G: PairGraph, kind: str) -> FSet:
    """Image of the pair set under sum/difference/product/ratio."""
    F = G.X.field
    out = set()
    if kind == "ratio":
        for x, y in G.elem_pairs():
            if y == 0:
                raise ZeroInDenominator("zero second coordinate in ratio graph")
            out.add(F.div(x, y))
    elif kind == "sum":
        out = {F.add(x, y) for x, y in G.elem_pairs()}
    elif kind == "difference":
        out = {F.sub(x, y) for x, y in G.elem_pairs()}
    elif kind == "product":
        out = {F.mul(x, y) for x, y in G.elem_pairs()}
    else:
        raise InvalidParams(f"unknown partial-op kind {kind!r}")
    return FSet.of(F, out)


# ---------------------------------------------------------------------------
# Structured families
# ---------------------------------------------------------------------------

FAMILY_KINDS = (
    "subfield_coset",
    "interval",
    "arithmetic_progression",
    "multiplicative_subgroup",
    "random_uniform",
    "union",
)


@dataclass(frozen=True)
class FamilySpec:
    """A reproducible recipe for a structured set: kind + params + seed."""

    kind: str
    params: tuple[tuple[str, object], ...]
    seed: int = 0

    @staticmethod
    def of(kind: str, params: dict | None = None, seed: int = 0) -> "FamilySpec":
        params = params or {}
        return FamilySpec(kind, tuple(sorted(params.items())), seed)

    def param_dict(self) -> dict:
        return dict(self.params)

    def label(self) -> str:
        ps = ",".join(f"{k}={v}" for k, v in self.params)
        core = f"{self.kind}:{ps}" if ps else self.kind
        return f"{core}@{self.seed}" if self.kind in ("random_uniform", "union") else core

    def descriptor(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params), "seed": self.seed}


def _draw_distinct(rng: random.Random, q: int, n: int, forbidden: set[int]) -> list[int]:
    # randrange-based rejection sampling: stable across Python versions,
    # unlike random.sample's internal algorithm.
    if n > q - len(forbidden):
        raise InvalidParams(f"cannot draw {n} distinct elements from {q - len(forbidden)}")
    out: set[int] = set()
    while len(out) < n:
        x = rng.randrange(q)
        if x not in forbidden and x not in out:
            out.add(x)
    return sorted(out)


def generate_family(field: FieldSpec, spec: FamilySpec) -> FSet:
    """Instantiate a structured family deterministically from its spec."""
    kind, params, seed = spec.kind, spec.param_dict(), spec.seed
    q = field.q
    if kind == "interval":
        n = int(params.get("n", 0))
        lo = int(params.get("lo", 1))
        if n < 1 or lo + n > q:
            raise InvalidParams(f"interval lo={lo}, n={n} does not fit in q={q}")
        return FSet.of(field, range(lo, lo + n))
    if kind == "arithmetic_progression":
        n = int(params.get("n", 0))
        start = int(params.get("start", 0))
        step = int(params.get("step", 1))
        if n < 1 or step % q == 0:
            raise InvalidParams("arithmetic progression needs n >= 1 and step != 0")
        out, x = [], start
        for _ in range(n):
            out.append(x)
            x = field.add(x, step)
        if len(set(out)) != n:
            raise InvalidParams("arithmetic progression wraps onto itself")
        return FSet.of(field, out)
    if kind == "multiplicative_subgroup":
        n = int(params.get("order", 0))
        if n < 1 or (q - 1) % n != 0:
            raise InvalidParams(f"subgroup order {n} must divide q-1 = {q - 1}")
        g = field.generator()
        h = field.pow_(g, (q - 1) // n)
        out, x = [], 1
        for _ in range(n):
            out.append(x)
            x = field.mul(x, h)
        return FSet.of(field, out)
    if kind == "subfield_coset":
        d = int(params.get("d", 1))
        c = int(params.get("c", 1))
        shift = int(params.get("shift", 0))
        if field.m % d != 0:
            raise InvalidParams(f"subfield degree {d} does not divide m={field.m}")
        if c == 0:
            raise InvalidParams("coset dilation c must be nonzero")
        G = field.subfield(d)
        return FSet.of(field, (field.add(field.mul(c, g), shift) for g in G.elements))
    if kind == "random_uniform":
        n = int(params.get("n", 0))
        if n < 1:
            raise InvalidParams("random_uniform needs n >= 1")
        forbidden = set() if params.get("allow_zero", True) else {0}
        rng = random.Random(seed)
        return FSet.of(field, _draw_distinct(rng, q, n, forbidden))
    if kind == "union":
        parts = params.get("parts")
        if not parts:
            raise InvalidParams("union needs a nonempty parts list")
        acc: set[int] = set()
        for i, sub in enumerate(parts):
            sub_spec = FamilySpec.of(sub["kind"], sub.get("params"), sub.get("seed", seed * 1000003 + i))
            acc |= generate_family(field, sub_spec).as_set()
        return FSet.of(field, acc)
    raise InvalidParams(f"unknown family kind {kind!r}")


# ---------------------------------------------------------------------------
# Set file format: first line "field: <p> <m>", then one encoding per line.
# ---------------------------------------------------------------------------

def save_set(A: FSet, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(f"field: {A.field.p} {A.field.m}\n")
        for x in A.elems:
            fh.write(f"{x}\n")


def load_set(path: str) -> FSet:
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("field:"):
            raise InvalidParams(f"{path}: missing 'field: <p> <m>' header")
        parts = header.split()
        if len(parts) != 3:
            raise InvalidParams(f"{path}: malformed header {header!r}")
        p, m = int(parts[1]), int(parts[2])
        field = FieldSpec(p, m, default_modulus(p, m))
        elems = [int(line) for line in fh if line.strip()]
    return FSet.of(field, elems)
