"""Betti numbers of bounded cubical sets from boundary-matrix ranks."""
from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from typing import Literal

from .cubes import CubicalSet, ElementaryCube, primary_faces
from .errors import ClosureError, TorsionAlarm

__all__ = [
    "BoundaryMatrix",
    "BettiVector",
    "build_boundary_matrix",
    "rank_gf2",
    "rank_rational",
    "betti",
    "euler_characteristic",
    "compare_fields",
]

Field = Literal["gf2", "rational"]


@dataclass(frozen=True)
class BoundaryMatrix:
    """Sparse boundary matrix; ``columns[j]`` lists ``(row, sign)`` for column cube ``cols[j]``."""

    rows: tuple[ElementaryCube, ...]
    cols: tuple[ElementaryCube, ...]
    columns: tuple[tuple[tuple[int, int], ...], ...]

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.cols)

    @classmethod
    def from_dense(cls, dense) -> "BoundaryMatrix":
        """Wrap a dense integer matrix (list of rows); rows/cols are left anonymous."""
        nrows = len(dense)
        ncols = len(dense[0]) if nrows else 0
        cols = tuple(
            tuple((i, int(dense[i][j])) for i in range(nrows) if dense[i][j])
            for j in range(ncols)
        )
        return cls((None,) * nrows, (None,) * ncols, cols)

    def to_dense(self) -> list[list[int]]:
        m, n = self.shape
        out = [[0] * n for _ in range(m)]
        for j, col in enumerate(self.columns):
            for i, s in col:
                out[i][j] = s
        return out


@dataclass(frozen=True)
class BettiVector:
    values: tuple[int, ...]
    coefficient_field: str

    def __getitem__(self, k: int) -> int:
        if 0 <= k < len(self.values):
            return self.values[k]
        return 0

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)


def _matrix(by_dim: list[list[ElementaryCube]], index: list[dict], k: int, d: int) -> BoundaryMatrix:
    if k < 1 or k > d:
        rows = tuple(by_dim[k - 1]) if 0 <= k - 1 <= d else ()
        cols = tuple(by_dim[k]) if 0 <= k <= d else ()
        return BoundaryMatrix(rows, cols, tuple(() for _ in cols))
    rows, cols = by_dim[k - 1], by_dim[k]
    rindex = index[k - 1]
    columns = []
    for q in cols:
        col = []
        for s, f in primary_faces(q):
            r = rindex.get(f)
            if r is None:
                raise ClosureError(f"face {f} of {q} is missing")
            col.append((r, s))
        columns.append(tuple(col))
    return BoundaryMatrix(tuple(rows), tuple(cols), tuple(columns))


def _split(X: CubicalSet):
    d = X.ambient_dim
    by_dim: list[list[ElementaryCube]] = [[] for _ in range(d + 1)]
    for q in X.cubes:
        by_dim[q.dim].append(q)
    for lst in by_dim:
        lst.sort(key=lambda q: q.doubled)
    index = [{q: i for i, q in enumerate(lst)} for lst in by_dim]
    return by_dim, index


def build_boundary_matrix(X: CubicalSet, k: int) -> BoundaryMatrix:
    by_dim, index = _split(X)
    return _matrix(by_dim, index, k, X.ambient_dim)


def rank_gf2(M: BoundaryMatrix) -> int:
    # columns become int bitsets over the row index; XOR basis keyed by leading bit
    basis: dict[int, int] = {}
    for col in M.columns:
        v = 0
        for i, s in col:
            if s & 1:
                v ^= 1 << i
        while v:
            h = v.bit_length() - 1
            b = basis.get(h)
            if b is None:
                basis[h] = v
                break
            v ^= b
    return len(basis)


def rank_rational(M: BoundaryMatrix) -> int:
    """Exact rank over Q by fraction-free sparse elimination.

    A column is reduced against stored pivots with ``c <- a*c - b*p`` and then
    divided by its content, so entries stay integral and small.
    """
    pivots: dict[int, dict[int, int]] = {}
    for col in M.columns:
        c = {}
        for i, s in col:
            if s:
                c[i] = c.get(i, 0) + s
        c = {i: v for i, v in c.items() if v}
        while c:
            r = max(c)
            p = pivots.get(r)
            if p is None:
                pivots[r] = c
                break
            a, b = p[r], c[r]
            g = gcd(a, b)
            a, b = a // g, b // g
            new = {i: a * v for i, v in c.items()}
            for i, v in p.items():
                w = new.get(i, 0) - b * v
                if w:
                    new[i] = w
                else:
                    new.pop(i, None)
            g = 0
            for v in new.values():
                g = gcd(g, v)
                if g == 1:
                    break
            c = {i: v // g for i, v in new.items()} if g > 1 else new
    return len(pivots)


_RANK = {"gf2": rank_gf2, "rational": rank_rational}


def betti(X: CubicalSet, field: Field = "rational") -> BettiVector:
    """Betti numbers ``beta_0 .. beta_d`` over GF(2) or Q."""
    if field not in _RANK:
        raise ValueError(f"unknown field {field!r}")
    rank = _RANK[field]
    d = X.ambient_dim
    by_dim, index = _split(X)
    ranks = [0] * (d + 2)
    for k in range(1, d + 1):
        ranks[k] = rank(_matrix(by_dim, index, k, d))
    values = tuple(len(by_dim[k]) - ranks[k] - ranks[k + 1] for k in range(d + 1))
    assert values[d] == 0, f"top Betti number {values[d]} != 0 in R^{d}"
    assert min(values) >= 0
    return BettiVector(values, field)


def euler_characteristic(X: CubicalSet) -> int:
    return sum((-1) ** k * c for k, c in enumerate(X.counts()))


def compare_fields(X: CubicalSet, raise_on_mismatch: bool = False) -> tuple[BettiVector, BettiVector, bool]:
    """Betti numbers over both fields and whether they disagree."""
    b2, bq = betti(X, "gf2"), betti(X, "rational")
    alarm = b2.values != bq.values
    if alarm and raise_on_mismatch:
        raise TorsionAlarm(f"GF(2) {b2.values} vs Q {bq.values}")
    return b2, bq, alarm
