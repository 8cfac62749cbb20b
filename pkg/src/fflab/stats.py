"""Exact counters for point-line incidences, k-rich incidences, spanned
lines, collinear triples T(A,B) / T*(A,B), and additive/multiplicative
energies.

Every statistic has at least two independent routes: a brute-force oracle
that evaluates the defining equation directly, and an optimized counter.
All counts are exact Python integers (arbitrary precision), so nothing
overflows even at the |A|^3|B|^3 scale of triple counts.

The fast triple counter never materializes the spanned-line set.  Writing
u = (a3-a1)/(a2-a1) for an ordered triple of distinct abscissae, the
ordered non-vertical collinear triples with pairwise distinct points
decompose as sum_u W_A(u) * (W_B(u) + |B|), where W_X(u) counts ordered
pairs x1 != x2 in X with x1 + u (x2-x1) in X.  Both W-histograms come from
one |X|^3 pass, which is a single vectorized bincount on prime fields.
"""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, field as dc_field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    FieldMismatch,
    InvalidParams,
    OracleTooLarge,
    TooFewPoints,
)
from .field import FieldSpec
from .sets import FSet, rep_function

ORACLE_CAP = 400          # |A||B| cap for the sextuple oracle
_NP_CHUNK = 3 * 10**7     # max elements per broadcast chunk


@dataclass(frozen=True)
class Line:
    """Canonical line: x = b when vertical, else y = a*x + b."""

    vertical: bool
    a: int  # slope; 0 when vertical
    b: int  # intercept, or the x-coordinate when vertical

    @staticmethod
    def slope_intercept(a: int, b: int) -> "Line":
        return Line(False, a, b)

    @staticmethod
    def vertical_at(c: int) -> "Line":
        return Line(True, 0, c)

    def contains(self, pt: tuple[int, int], F: FieldSpec) -> bool:
        x, y = pt
        if self.vertical:
            return x == self.b
        return y == F.add(F.mul(self.a, x), self.b)

    def __repr__(self):
        return f"Line(x={self.b})" if self.vertical else f"Line(y={self.a}x+{self.b})"


def all_lines(F: FieldSpec) -> list[Line]:
    """All q^2 + q lines of the affine plane over F."""
    out = [Line.slope_intercept(a, b) for a in range(F.q) for b in range(F.q)]
    out.extend(Line.vertical_at(c) for c in range(F.q))
    return out


def line_through(p1: tuple[int, int], p2: tuple[int, int], F: FieldSpec) -> Line:
    """The unique line through two distinct points, in canonical form."""
    (x1, y1), (x2, y2) = p1, p2
    if p1 == p2:
        raise InvalidParams("two distinct points required")
    if x1 == x2:
        return Line.vertical_at(x1)
    s = F.div(F.sub(y2, y1), F.sub(x2, x1))
    t = F.sub(y1, F.mul(s, x1))
    return Line.slope_intercept(s, t)


class PointSet:
    """A set of points in the plane: a Cartesian product A x B, or explicit."""

    __slots__ = ("field", "A", "B", "pts")

    def __init__(self, field: FieldSpec, A: FSet | None, B: FSet | None,
                 pts: tuple[tuple[int, int], ...] | None):
        self.field = field
        self.A = A
        self.B = B
        self.pts = pts

    @staticmethod
    def cartesian(A: FSet, B: FSet) -> "PointSet":
        if A.field != B.field:
            raise FieldMismatch("A and B live in different fields")
        return PointSet(A.field, A, B, None)

    @staticmethod
    def explicit(field: FieldSpec, pts: Iterable[tuple[int, int]]) -> "PointSet":
        dedup = tuple(sorted(set((int(x), int(y)) for x, y in pts)))
        return PointSet(field, None, None, dedup)

    @property
    def is_cartesian(self) -> bool:
        return self.pts is None

    def __len__(self) -> int:
        if self.is_cartesian:
            return len(self.A) * len(self.B)
        return len(self.pts)

    def points(self) -> Iterator[tuple[int, int]]:
        if self.is_cartesian:
            for a in self.A:
                for b in self.B:
                    yield (a, b)
        else:
            yield from self.pts

    def x_values(self) -> FSet:
        if self.is_cartesian:
            return self.A
        return FSet.of(self.field, (x for x, _ in self.pts))

    def descriptor(self) -> dict:
        if self.is_cartesian:
            return {"kind": "cartesian", "A": self.A.descriptor(), "B": self.B.descriptor()}
        return {"kind": "explicit", "size": len(self.pts)}


# ---------------------------------------------------------------------------
# Incidences
# ---------------------------------------------------------------------------

def line_point_count(P: PointSet, line: Line) -> int:
    """Number of points of P on the line; O(|A|) on Cartesian products."""
    F = P.field
    if P.is_cartesian:
        if line.vertical:
            return len(P.B) if line.b in P.A.as_set() else 0
        bset = P.B.as_set()
        return sum(1 for a in P.A if F.add(F.mul(line.a, a), line.b) in bset)
    if line.vertical:
        return sum(1 for x, _ in P.pts if x == line.b)
    return sum(1 for x, y in P.pts if y == F.add(F.mul(line.a, x), line.b))


def incidences(P: PointSet, L: Sequence[Line], method: str = "fast") -> int:
    """I(P, L): number of incident (point, line) pairs.

    "fast" counts per line via set membership; "oracle" is the full
    double loop over P x L evaluating the on-line predicate.
    """
    if method == "oracle":
        F = P.field
        return sum(1 for pt in P.points() for l in L if l.contains(pt, F))
    if method != "fast":
        raise InvalidParams(f"unknown incidence method {method!r}")
    if not P.is_cartesian:
        pset = set(P.pts)
        xs = sorted({x for x, _ in P.pts})
        F = P.field
        total = 0
        for l in L:
            if l.vertical:
                total += sum(1 for x, _ in P.pts if x == l.b)
            else:
                total += sum(1 for x in xs if (x, F.add(F.mul(l.a, x), l.b)) in pset)
        return total
    return sum(line_point_count(P, l) for l in L)


def k_rich_incidences(P: PointSet, L: Sequence[Line], k: int) -> int:
    """I_k(P, L) = sum over lines of n_l^k, for k in {1, 2, 3, 4}."""
    if k not in (1, 2, 3, 4):
        raise InvalidParams("k must be in {1, 2, 3, 4}")
    return sum(line_point_count(P, l) ** k for l in L)


# ---------------------------------------------------------------------------
# Spanned lines
# ---------------------------------------------------------------------------

def lines_spanned(P: PointSet) -> tuple[int, list[Line]]:
    """L(P): the distinct lines containing at least two points of P."""
    pts = list(P.points())
    if len(pts) < 2:
        raise TooFewPoints("L(P) needs at least two points")
    F = P.field
    if F.m == 1 and len(pts) >= 64:
        return _lines_spanned_prime_np(F, pts)
    seen: set[Line] = set()
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            seen.add(line_through(pts[i], pts[j], F))
    lines = sorted(seen, key=lambda l: (l.vertical, l.a, l.b))
    return len(lines), lines


def _lines_spanned_prime_np(F: FieldSpec, pts: list[tuple[int, int]]) -> tuple[int, list[Line]]:
    p = F.p
    xs = np.array([x for x, _ in pts], dtype=np.int64)
    ys = np.array([y for _, y in pts], dtype=np.int64)
    i, j = np.triu_indices(len(pts), k=1)
    dx = (xs[j] - xs[i]) % p
    dy = (ys[j] - ys[i]) % p
    F._build_inv_table()
    vert_mask = dx == 0
    keys = set()
    s = (dy[~vert_mask] * F._inv_t[dx[~vert_mask]]) % p
    t = (ys[i][~vert_mask] - s * xs[i][~vert_mask]) % p
    for key in np.unique(s * p + t):
        keys.add(Line.slope_intercept(int(key) // p, int(key) % p))
    for c in np.unique(xs[i][vert_mask]):
        keys.add(Line.vertical_at(int(c)))
    lines = sorted(keys, key=lambda l: (l.vertical, l.a, l.b))
    return len(lines), lines


def spanned_degree(P: PointSet, lines: Sequence[Line]) -> Counter:
    """deg(p): number of the given lines passing through each point of P."""
    F = P.field
    deg: Counter = Counter()
    for pt in P.points():
        deg[pt] = 0
    for l in lines:
        if P.is_cartesian:
            if l.vertical:
                if l.b in P.A.as_set():
                    for b in P.B:
                        deg[(l.b, b)] += 1
            else:
                bset = P.B.as_set()
                for a in P.A:
                    y = F.add(F.mul(l.a, a), l.b)
                    if y in bset:
                        deg[(a, y)] += 1
        else:
            for pt in P.pts:
                if l.contains(pt, F):
                    deg[pt] += 1
    return deg


# ---------------------------------------------------------------------------
# Collinear triples
# ---------------------------------------------------------------------------

def _np_encode_args(F: FieldSpec, A: FSet, B: FSet):
    return np.array(A.elems, dtype=np.int64), np.array(B.elems, dtype=np.int64)


def collinear_triples_oracle(A: FSet, B: FSet) -> int:
    """T(A,B) by direct evaluation of the sextuple equation.

    (a2-a1)(b3-b1) = (a3-a1)(b2-b1) over all of A^3 x B^3; capped at
    |A||B| <= 400 because the grid has |A|^3 |B|^3 cells.
    """
    F = A.field
    if A.field != B.field:
        raise FieldMismatch("A and B live in different fields")
    if len(A) * len(B) > ORACLE_CAP:
        raise OracleTooLarge(f"|A||B| = {len(A) * len(B)} > {ORACLE_CAP}")
    if len(A) == 0 or len(B) == 0:
        return 0
    lhs, rhs = _sextuple_sides(F, A, B)
    return int(np.count_nonzero(lhs == rhs))


def nontrivial_collinear_triples_oracle(A: FSet, B: FSet) -> int:
    """T*(A,B): sextuples where the common product value is nonzero."""
    F = A.field
    if A.field != B.field:
        raise FieldMismatch("A and B live in different fields")
    if len(A) * len(B) > ORACLE_CAP:
        raise OracleTooLarge(f"|A||B| = {len(A) * len(B)} > {ORACLE_CAP}")
    if len(A) == 0 or len(B) == 0:
        return 0
    lhs, rhs = _sextuple_sides(F, A, B)
    return int(np.count_nonzero((lhs == rhs) & (lhs != 0)))


def _sextuple_sides(F: FieldSpec, A: FSet, B: FSet):
    a, b = _np_encode_args(F, A, B)
    a1 = a[:, None, None, None, None, None]
    a2 = a[None, :, None, None, None, None]
    a3 = a[None, None, :, None, None, None]
    b1 = b[None, None, None, :, None, None]
    b2 = b[None, None, None, None, :, None]
    b3 = b[None, None, None, None, None, :]
    lhs = F.np_mul(F.np_sub(a2, a1), F.np_sub(b3, b1))
    rhs = F.np_mul(F.np_sub(a3, a1), F.np_sub(b2, b1))
    return lhs, rhs


def _ratio_triple_histogram(X: FSet) -> dict[int, int] | np.ndarray:
    """W_X(u) = #{(x1, x2, x3) in X^3 : x1 != x2, x3 - x1 = u (x2 - x1)}.

    Returns a dense numpy histogram of length q when vector kernels are
    available, otherwise a dict.  u = 0 and u = 1 entries correspond to
    x3 = x1 and x3 = x2 and are kept; callers drop them as needed.
    """
    F = X.field
    n = len(X)
    q = F.q
    use_np = F.m == 1 or q <= 2**16
    if use_np and n >= 3:
        xs = np.array(X.elems, dtype=np.int64)
        x1 = xs[:, None]
        x2 = xs[None, :]
        d = F.np_sub(x2, x1)
        mask = d != 0
        d_safe = np.where(mask, d, 1)
        dinv = F.np_inv(d_safe.ravel()).reshape(d.shape)
        u = F.np_mul(F.np_sub(xs[None, None, :], x1[:, :, None]), dinv[:, :, None])
        flat = u[mask, :].ravel()
        return np.bincount(flat, minlength=q)
    hist: dict[int, int] = {}
    for x1 in X:
        for x2 in X:
            if x2 == x1:
                continue
            dinv = F.inv(F.sub(x2, x1))
            for x3 in X:
                u = F.mul(F.sub(x3, x1), dinv)
                hist[u] = hist.get(u, 0) + 1
    return hist


def collinear_triples_aggregate(A: FSet, B: FSet) -> int:
    """T(A,B) by line aggregation, grouped by slope ratio.

    Exact decomposition: degenerate triples (two or three equal points)
    contribute 3|P|^2 - 2|P|; vertical lines contribute
    |A| |B|(|B|-1)(|B|-2); triples of pairwise-distinct points on
    non-vertical lines contribute sum_u W_A(u) (W_B(u) + |B|) over
    u outside {0, 1}.
    """
    if A.field != B.field:
        raise FieldMismatch("A and B live in different fields")
    na, nb = len(A), len(B)
    if na == 0 or nb == 0:
        return 0
    npts = na * nb
    total = 3 * npts * npts - 2 * npts
    total += na * nb * (nb - 1) * (nb - 2)
    if na < 3:
        return total  # no triples with pairwise-distinct abscissae
    wa = _ratio_triple_histogram(A)
    wb = wa if A.elems == B.elems else (_ratio_triple_histogram(B) if nb >= 2 else None)
    if isinstance(wa, np.ndarray) and (wb is None or isinstance(wb, np.ndarray)):
        wa = wa.copy()
        wa[0] = 0
        wa[1] = 0
        if wb is None:
            total += int(wa.sum()) * nb
        elif na**3 * nb**3 < 2**62:  # dot product provably fits in int64
            total += int(np.dot(wa, wb)) + nb * int(wa.sum())
        else:
            nz = np.nonzero(wa)[0]
            total += sum(int(wa[u]) * (int(wb[u]) + nb) for u in nz)
        return total
    wa_items = wa.items() if isinstance(wa, dict) else enumerate(wa.tolist())
    for u, w in wa_items:
        if u in (0, 1) or w == 0:
            continue
        if wb is None:
            wb_u = 0
        elif isinstance(wb, np.ndarray):
            wb_u = int(wb[u])
        else:
            wb_u = wb.get(u, 0)
        total += w * (wb_u + nb)
    return total


def collinear_triples_energy(A: FSet, B: FSet) -> int:
    """T(A,B) = sum over base points (a,b) of E_x(A - a, B - b).

    The difference convention is the one that matches the sextuple
    equation exactly; see energy_identity_check for the comparison with
    the plus convention.
    """
    if A.field != B.field:
        raise FieldMismatch("A and B live in different fields")
    F = A.field
    total = 0
    for a in A:
        Xa = [F.sub(x, a) for x in A]
        for b in B:
            Yb = [F.sub(y, b) for y in B]
            r: Counter = Counter()
            for x in Xa:
                for y in Yb:
                    r[F.mul(x, y)] += 1
            total += sum(v * v for v in r.values())
    return total


def collinear_triples_energy_plus(A: FSet, B: FSet) -> int:
    """The rejected plus convention: sum_{a,b} E_x(A + a, B + b)."""
    F = A.field
    total = 0
    for a in A:
        Xa = [F.add(x, a) for x in A]
        for b in B:
            Yb = [F.add(y, b) for y in B]
            r: Counter = Counter()
            for x in Xa:
                for y in Yb:
                    r[F.mul(x, y)] += 1
            total += sum(v * v for v in r.values())
    return total


def collinear_triples(A: FSet, B: FSet, mode: str = "line_aggregate") -> int:
    """T(A,B): sextuples in A^3 x B^3 with (a2-a1)(b3-b1) = (a3-a1)(b2-b1)."""
    if mode == "oracle":
        return collinear_triples_oracle(A, B)
    if mode == "line_aggregate":
        return collinear_triples_aggregate(A, B)
    if mode == "energy_decomposition":
        return collinear_triples_energy(A, B)
    raise InvalidParams(f"unknown triples mode {mode!r}")


def degenerate_triple_classes(A: FSet, B: FSet) -> dict[str, int]:
    """Closed-form breakdown of the zero-product sextuples T - T*.

    Zero product means (a2 = a1 or b3 = b1) and (a3 = a1 or b2 = b1);
    inclusion-exclusion gives size-only formulas.
    """
    na, nb = len(A), len(B)
    classes = {
        "a2=a1,a3=a1": na * nb**3,
        "a2=a1,b2=b1": na**2 * nb**2,
        "b3=b1,a3=a1": na**2 * nb**2,
        "b3=b1,b2=b1": na**3 * nb,
        "-a2=a1,b3=b1,a3=a1": -(na * nb**2),
        "-a2=a1,b3=b1,b2=b1": -(na**2 * nb),
        "-a2=a1,a3=a1,b2=b1": -(na * nb**2),
        "-b3=b1,a3=a1,b2=b1": -(na**2 * nb),
        "+all": na * nb,
    }
    return classes


def nontrivial_collinear_triples(A: FSet, B: FSet, mode: str = "derived") -> int:
    """T*(A,B): collinear sextuples with nonzero common product."""
    if mode == "oracle":
        return nontrivial_collinear_triples_oracle(A, B)
    if mode != "derived":
        raise InvalidParams(f"unknown T* mode {mode!r}")
    z = sum(degenerate_triple_classes(A, B).values())
    return collinear_triples(A, B) - z


def collinear_triples_points(P: PointSet) -> int:
    """T(P) for an arbitrary point set, via spanned-line aggregation."""
    n = len(P)
    if n < 2:
        return n  # a single point yields the lone degenerate sextuple
    _, lines = lines_spanned(P)
    total = 3 * n * n - 2 * n
    for l in lines:
        c = line_point_count(P, l)
        total += c * (c - 1) * (c - 2)
    return total


# ---------------------------------------------------------------------------
# Energies
# ---------------------------------------------------------------------------

def additive_energy(A: FSet, B: FSet) -> int:
    """E_+(A,B) = #{(a1,a2,b1,b2): a1 + b1 = a2 + b2} = sum_z r_+(z)^2."""
    r = rep_function(A, B, "sum")
    return sum(v * v for v in r.values())


def multiplicative_energy(A: FSet, B: FSet) -> int:
    """E_x(A,B) = #{(a1,a2,b1,b2): a1 b1 = a2 b2} = sum_z r_x(z)^2."""
    r = rep_function(A, B, "product")
    return sum(v * v for v in r.values())


def energy_oracle(A: FSet, B: FSet, kind: str) -> int:
    """Quadruple-scan oracle for E_+ / E_x, independent of rep counting."""
    F = A.field
    if len(A) * len(B) > ORACLE_CAP:
        raise OracleTooLarge(f"|A||B| = {len(A) * len(B)} > {ORACLE_CAP}")
    a, b = _np_encode_args(F, A, B)
    a1 = a[:, None, None, None]
    a2 = a[None, :, None, None]
    b1 = b[None, None, :, None]
    b2 = b[None, None, None, :]
    if kind == "additive":
        lhs, rhs = F.np_add(a1, b1), F.np_add(a2, b2)
    elif kind == "multiplicative":
        lhs, rhs = F.np_mul(a1, b1), F.np_mul(a2, b2)
    else:
        raise InvalidParams(f"unknown energy kind {kind!r}")
    return int(np.count_nonzero(lhs == rhs))


# ---------------------------------------------------------------------------
# Stat reports
# ---------------------------------------------------------------------------

@dataclass
class StatReport:
    """Exact statistics for one instance, plus algorithm tags and timings."""

    instance: dict
    stats: dict
    algorithm: dict = dc_field(default_factory=dict)
    timings_ms: dict = dc_field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "instance": self.instance,
            "stats": dict(self.stats),
            "algorithm": self.algorithm,
            "timings_ms": self.timings_ms,
        }


STAT_NAMES = ("I", "I2", "I3", "I4", "L", "T", "T*", "E+", "Ex")


def compute_stats(A: FSet, B: FSet, which: Sequence[str] = STAT_NAMES,
                  lines: Sequence[Line] | None = None,
                  triples_mode: str = "line_aggregate",
                  seed: int | None = None) -> StatReport:
    """Compute the requested statistics for the Cartesian instance A x B."""
    F = A.field
    P = PointSet.cartesian(A, B)
    stats: dict = {}
    algo: dict = {}
    timings: dict = {}
    spanned = None

    def _timed(name, fn):
        t0 = time.perf_counter()
        val = fn()
        timings[name] = round((time.perf_counter() - t0) * 1000.0, 3)
        return val

    for name in which:
        if name in ("I", "I2", "I3", "I4"):
            if lines is None:
                if spanned is None:
                    spanned = _timed("L(P)", lambda: lines_spanned(P))
                use = spanned[1]
                algo[name] = "fast/spanned-lines"
            else:
                use = lines
                algo[name] = "fast/user-lines"
            k = 1 if name == "I" else int(name[1])
            stats[name] = _timed(name, lambda k=k, use=use: k_rich_incidences(P, use, k))
        elif name == "L":
            if spanned is None:
                spanned = _timed("L(P)", lambda: lines_spanned(P))
            stats["L"] = spanned[0]
            algo["L"] = "pair-enumeration"
        elif name == "T":
            stats["T"] = _timed("T", lambda: collinear_triples(A, B, triples_mode))
            algo["T"] = triples_mode
        elif name == "T*":
            stats["T*"] = _timed("T*", lambda: nontrivial_collinear_triples(A, B))
            algo["T*"] = "derived"
        elif name == "E+":
            stats["E+"] = _timed("E+", lambda: additive_energy(A, B))
            algo["E+"] = "rep-squares"
        elif name == "Ex":
            stats["Ex"] = _timed("Ex", lambda: multiplicative_energy(A, B))
            algo["Ex"] = "rep-squares"
        else:
            raise InvalidParams(f"unknown statistic {name!r}")
    inst = {
        "field": F.descriptor(),
        "A": A.descriptor(),
        "B": B.descriptor(),
    }
    if seed is not None:
        inst["seed"] = seed
    return StatReport(instance=inst, stats=stats, algorithm=algo, timings_ms=timings)
