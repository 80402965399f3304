"""Sublevel filtrations of configurations, Betti curves, persistence and lifetime sums.

A cube ``P`` lies in ``X(t)`` as soon as some cube containing it has value
``<= t``, so its birth is the minimum value over its supercubes.  Births of the
cubes of ``[-n, n]^d`` only look one step outward, which is why configurations
are sampled on ``[-(n+1), n+1]^d``.

Betti curves are computed without matrix reduction where topology allows it:
``beta_0`` by union-find over vertices and edges, ``beta_{d-1}`` by union-find
on the complement (Alexander duality: it equals the number of bounded
complementary components), and for ``d == 3`` ``beta_1`` from the Euler
characteristic.  Other degrees fall back to the persistence reduction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Iterable, Iterator, Mapping

import numpy as np

from . import lattice
from .cubes import CubicalSet, ElementaryCube, Window, supercubes
from .errors import ClosureError, MissingValueError, OutOfRegionError

if TYPE_CHECKING:
    from .models import ModelSpec

__all__ = [
    "Configuration",
    "Filtration",
    "BettiCurve",
    "PersistenceDiagram",
    "LifetimeSum",
    "birth_time",
    "build_filtration",
    "betti_curve",
    "betti_curves",
    "persistence_diagram",
    "lifetime_sum_from_diagram",
    "lifetime_sum_from_curve",
]


# --------------------------------------------------------------------------- configuration


@dataclass(frozen=True, eq=False)
class Configuration:
    """Values in [0, 1] for every cube of ``region``, held on the doubled grid.

    Missing values are NaN.  ``model`` records the sampler, when known; origin
    resampling needs it.
    """

    region: Window
    values: np.ndarray
    model: "ModelSpec | None" = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != self.region.grid_shape:
            raise ValueError(f"values grid {vals.shape} does not match region {self.region.grid_shape}")
        finite = vals[~np.isnan(vals)]
        if finite.size and (finite.min() < 0.0 or finite.max() > 1.0):
            raise ValueError("configuration values must lie in [0, 1]")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def ambient_dim(self) -> int:
        return self.region.ambient_dim

    @classmethod
    def from_mapping(cls, values: Mapping[ElementaryCube, float], region: Window | None = None,
                     model=None) -> "Configuration":
        if region is None:
            if not values:
                raise ValueError("cannot infer a region from an empty mapping")
            d = next(iter(values)).ambient_dim
            m = max(max(max(abs(a), abs(a + e)) for a, e in zip(q.anchor, q.extent)) for q in values)
            region = Window(max(m, 1), d)
        grid = np.full(region.grid_shape, np.nan)
        for q, v in values.items():
            if not region.contains(q):
                raise OutOfRegionError(f"{q} is outside the region [-{region.n},{region.n}]^{region.ambient_dim}")
            grid[lattice.cube_index(region, q)] = float(v)
        return cls(region, grid, model)

    def value(self, q: ElementaryCube) -> float:
        if not self.region.contains(q):
            raise MissingValueError(f"{q} is outside the sampling region")
        v = self.values[lattice.cube_index(self.region, q)]
        if np.isnan(v):
            raise MissingValueError(f"no value for {q}")
        return float(v)

    __getitem__ = value

    def items(self) -> Iterator[tuple[ElementaryCube, float]]:
        flat = self.values.ravel()
        for i in np.flatnonzero(~np.isnan(flat)):
            yield lattice.flat_to_cube(self.region, int(i)), float(flat[i])

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.region == other.region and np.array_equal(self.values, other.values, equal_nan=True)

    def __hash__(self):
        return hash((self.region, self.values.tobytes()))


def birth_time(p: ElementaryCube, omega: Configuration) -> float:
    """Smallest value over the cubes of the sampling region that contain ``p``."""
    if not omega.region.contains(p):
        raise MissingValueError(f"{p} is outside the sampling region")
    return min(omega.value(q) for q in supercubes(p, omega.region))


# --------------------------------------------------------------------------- filtration


@dataclass(frozen=True, eq=False)
class Filtration:
    """Cells of a window with their birth times, in filtration order.

    ``flat`` indexes the window's doubled grid; cells are sorted by
    ``(birth, dim, lexicographic doubled coordinates)``.  Cells absent from the
    filtration have birth ``inf`` in ``birth_grid``.
    """

    window: Window
    flat: np.ndarray
    births: np.ndarray
    dims: np.ndarray
    birth_grid: np.ndarray = field(repr=False)

    @classmethod
    def from_birth_grid(cls, window: Window, grid: np.ndarray) -> "Filtration":
        grid = np.asarray(grid, dtype=np.float64)
        if grid.shape != window.grid_shape:
            raise ValueError("birth grid does not match window")
        b = grid.ravel()
        dims = lattice.dim_grid(window).ravel()
        present = np.flatnonzero(np.isfinite(b))
        order = present[np.lexsort((present, dims[present], b[present]))]
        grid = grid.copy()
        grid.setflags(write=False)
        return cls(window, order, b[order], dims[order], grid)

    @classmethod
    def from_cells(cls, cells: Iterable[tuple[ElementaryCube, float]], window: Window | None = None) -> "Filtration":
        """Hand-built filtration; every face must be born no later than its cofaces."""
        cells = list(cells)
        if window is None:
            d = cells[0][0].ambient_dim
            m = max(max(max(abs(a), abs(a + e)) for a, e in zip(q.anchor, q.extent)) for q, _ in cells)
            window = Window(max(m, 1), d)
        grid = np.full(window.grid_shape, np.inf)
        for q, t in cells:
            if not window.contains(q):
                raise OutOfRegionError(f"{q} is outside the window")
            grid[lattice.cube_index(window, q)] = float(t)
        f = cls.from_birth_grid(window, grid)
        if not f.is_monotone():
            raise ClosureError("a cube is born before one of its faces")
        return f

    def __len__(self):
        return len(self.flat)

    @property
    def ambient_dim(self) -> int:
        return self.window.ambient_dim

    @property
    def cells(self) -> list[tuple[ElementaryCube, float]]:
        coords = lattice.flat_to_doubled(self.window, self.flat)
        return [(ElementaryCube.from_doubled(c), float(b)) for c, b in zip(coords.tolist(), self.births)]

    def birth_of(self, q: ElementaryCube) -> float:
        return float(self.birth_grid[lattice.cube_index(self.window, q)])

    def sublevel(self, t: float) -> CubicalSet:
        k = int(np.searchsorted(self.births, t, side="right"))
        coords = lattice.flat_to_doubled(self.window, self.flat[:k])
        return CubicalSet((ElementaryCube.from_doubled(c) for c in coords.tolist()), self.ambient_dim)

    def sublevel_size(self, t: float) -> int:
        return int(np.searchsorted(self.births, t, side="right"))

    def is_monotone(self) -> bool:
        g = self.birth_grid
        odd = lattice.axis_coords(self.window) & 1
        for ax in range(self.ambient_dim):
            shape = [1] * self.ambient_dim
            shape[ax] = -1
            mask = np.broadcast_to(odd.reshape(shape).astype(bool), g.shape)
            for step in (-1, 1):
                face = lattice.shifted(g, ax, step, -np.inf)
                if np.any(mask & (face > g)):
                    return False
        return True

    def distinct_times(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct birth values and the last filtration position of each."""
        times = np.unique(self.births)
        ends = np.searchsorted(self.births, times, side="right") - 1
        return times, ends

    def _coords(self) -> np.ndarray:
        return lattice.flat_to_doubled(self.window, self.flat)


def build_filtration(omega: Configuration, w: Window) -> Filtration:
    """Filtration of ``X(t) ∩ w`` from the configuration's values."""
    if omega.ambient_dim != w.ambient_dim:
        raise ValueError("configuration and window dimensions differ")
    outer = w.grow(1)
    if omega.region.n < outer.n:
        raise MissingValueError(
            f"sampling region radius {omega.region.n} is too small for window {w.n} (needs {outer.n})")
    v = lattice.crop(omega.values, omega.region, outer)
    if np.isnan(v).any():
        raise MissingValueError("configuration has missing values inside the sampling region")
    b = np.array(v, dtype=np.float64)
    odd = lattice.axis_coords(outer) & 1
    for ax in range(w.ambient_dim):
        shape = [1] * w.ambient_dim
        shape[ax] = -1
        even = np.broadcast_to((odd == 0).reshape(shape), b.shape)
        lo = lattice.shifted(b, ax, -1, np.inf)
        hi = lattice.shifted(b, ax, 1, np.inf)
        b = np.where(even, np.minimum(b, np.minimum(lo, hi)), b)
    return Filtration.from_birth_grid(w, lattice.crop(b, outer, w))


# --------------------------------------------------------------------------- curves and diagrams


@dataclass(frozen=True, eq=False)
class BettiCurve:
    """Right-continuous step function; ``values[i]`` holds on ``[times[i], times[i+1])``.

    Before ``times[0]`` the value is 0 (the sublevel set is empty).
    """

    q: int
    times: np.ndarray
    values: np.ndarray

    @property
    def breakpoints(self) -> list[tuple[float, int]]:
        return list(zip(self.times.tolist(), self.values.tolist()))

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=np.float64)
        if not len(self.values):
            out = np.zeros(t_arr.shape, dtype=np.int64)
        else:
            idx = np.searchsorted(self.times, t_arr, side="right") - 1
            out = np.where(idx >= 0, self.values[np.maximum(idx, 0)], 0)
        return int(out) if out.ndim == 0 else out

    def integral(self) -> float:
        """Float integral over [0, 1]; see :func:`lifetime_sum_from_curve` for the exact one."""
        if not len(self.times):
            return 0.0
        right = np.append(self.times[1:], 1.0)
        return float(np.dot(self.values.astype(np.float64), right - self.times))

    def max(self) -> int:
        return int(self.values.max()) if len(self.values) else 0


@dataclass(frozen=True, eq=False)
class PersistenceDiagram:
    """Intervals ``[birth, death)``; essential classes carry death 1.0 and ``essential=True``."""

    q: int
    births: np.ndarray
    deaths: np.ndarray
    essential: np.ndarray
    zero_length: int = 0

    @property
    def intervals(self) -> list[tuple[float, float]]:
        return list(zip(self.births.tolist(), self.deaths.tolist()))

    def __len__(self):
        return len(self.births)

    def betti_at(self, t):
        """Number of classes alive at ``t``; essential classes stay alive at t = 1."""
        t_arr = np.asarray(t, dtype=np.float64)
        born = np.searchsorted(np.sort(self.births), t_arr, side="right")
        finite = np.sort(self.deaths[~self.essential])
        dead = np.searchsorted(finite, t_arr, side="right")
        out = born - dead
        return int(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LifetimeSum:
    q: int
    value: Fraction

    def __float__(self):
        return float(self.value)


def _face_offsets(coords: np.ndarray, strides: np.ndarray):
    """Per cell: list of flat offsets of its primary faces."""
    odd = (coords & 1).astype(bool)
    return [strides[row].tolist() for row in odd]


def _reduce_columns(cols: list[int], pivots: dict[int, int]) -> list[int]:
    """Standard GF(2) column reduction; returns reduced columns, updates ``pivots`` (low -> index)."""
    out = []
    for j, v in enumerate(cols):
        while v:
            low = v.bit_length() - 1
            k = pivots.get(low)
            if k is None:
                pivots[low] = j
                break
            v ^= out[k]
        out.append(v)
    return out


def persistence_diagram(F: Filtration, q: int) -> PersistenceDiagram:
    """Degree-q intervals by GF(2) column reduction with clearing."""
    d = F.ambient_dim
    if not 0 <= q <= d:
        raise ValueError(f"q must be in [0, {d}]")
    n = len(F)
    pos = np.full(int(np.prod(F.window.grid_shape)), -1, dtype=np.int64)
    pos[F.flat] = np.arange(n)
    strides = lattice.strides(F.window)
    coords = F._coords()

    def columns(k):
        idx = np.flatnonzero(F.dims == k)
        cols = []
        for p, offs in zip(idx.tolist(), _face_offsets(coords[idx], strides)):
            f = int(F.flat[p])
            v = 0
            for s in offs:
                a, b = pos[f - s], pos[f + s]
                if a < 0 or b < 0:
                    raise ClosureError("filtration is not face-closed")
                v |= (1 << int(a)) | (1 << int(b))
            cols.append(v)
        return idx, cols

    births, deaths = [], []
    zero = 0
    paired = set()
    if q + 1 <= d:
        hi_idx, hi_cols = columns(q + 1)
        piv: dict[int, int] = {}
        _reduce_columns(hi_cols, piv)
        for low, j in piv.items():
            paired.add(low)
            b, dd = F.births[low], F.births[hi_idx[j]]
            if b == dd:
                zero += 1
            else:
                births.append(b)
                deaths.append(dd)
    q_idx = np.flatnonzero(F.dims == q)
    if q == 0:
        positive = q_idx.tolist()
    else:
        lo_idx, lo_cols = columns(q)
        keep = [i for i, p in enumerate(lo_idx.tolist()) if p not in paired]
        reduced = _reduce_columns([lo_cols[i] for i in keep], {})
        positive = [int(lo_idx[keep[i]]) for i, v in enumerate(reduced) if v == 0]
        positive += [p for p in lo_idx.tolist() if p in paired]
    n_fin = len(births)
    for p in positive:
        if p not in paired:
            births.append(F.births[p])
            deaths.append(1.0)
    essential = np.zeros(len(births), dtype=bool)
    essential[n_fin:] = True
    order = np.lexsort((np.array(deaths), np.array(births))) if births else np.array([], dtype=np.int64)
    return PersistenceDiagram(
        q,
        np.asarray(births, dtype=np.float64)[order],
        np.asarray(deaths, dtype=np.float64)[order],
        essential[order],
        zero,
    )


# --------------------------------------------------------------------------- fast Betti curves


def _find(parent: list[int], x: int) -> int:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def _delta_beta0(F: Filtration) -> np.ndarray:
    n = len(F)
    delta = np.zeros(n, dtype=np.int64)
    sel = np.flatnonzero(F.dims <= 1)
    if not sel.size:
        return delta
    coords = lattice.flat_to_doubled(F.window, F.flat[sel])
    strides = lattice.strides(F.window)
    step = ((coords & 1) * strides).sum(axis=1)  # 0 for vertices
    flat = F.flat[sel]
    parent = list(range(int(np.prod(F.window.grid_shape))))
    d0 = []
    for f, s in zip(flat.tolist(), step.tolist()):
        if s == 0:
            d0.append(1)
            continue
        ra, rb = _find(parent, f - s), _find(parent, f + s)
        if ra != rb:
            parent[ra] = rb
            d0.append(-1)
        else:
            d0.append(0)
    delta[sel] = d0
    return delta


def _delta_top_dual(F: Filtration) -> np.ndarray:
    """Increments of beta_{d-1}, from union-find on complementary top cells run backwards."""
    d, w = F.ambient_dim, F.window
    n = len(F)
    delta = np.zeros(n, dtype=np.int64)
    size = int(np.prod(w.grid_shape))
    outside = size
    parent = list(range(size + 1))
    strides = lattice.strides(w)
    lim = 2 * w.n

    def cofaces(flat_ids: np.ndarray):
        coords = lattice.flat_to_doubled(w, flat_ids)
        even = (coords & 1) == 0
        ax = np.argmax(even, axis=1)
        c = coords[np.arange(len(ax)), ax]
        s = strides[ax]
        lo = np.where(c == -lim, outside, flat_ids - s)
        hi = np.where(c == lim, outside, flat_ids + s)
        return lo.tolist(), hi.tolist()

    # cells never born stay in the complement throughout
    g = F.birth_grid.ravel()
    dims_all = lattice.dim_grid(w).ravel()
    absent = np.flatnonzero(~np.isfinite(g) & (dims_all == d - 1))
    if absent.size:
        for a, b in zip(*cofaces(absent)):
            ra, rb = _find(parent, a), _find(parent, b)
            if ra != rb:
                parent[ra] = rb

    sel = np.flatnonzero(F.dims == d - 1)
    lo, hi = cofaces(F.flat[sel]) if sel.size else ([], [])
    merged = np.zeros(len(sel), dtype=np.int64)
    # reverse filtration order; top cells are only activated, so they need no work here
    for i in range(len(sel) - 1, -1, -1):
        ra, rb = _find(parent, lo[i]), _find(parent, hi[i])
        if ra != rb:
            parent[ra] = rb
            merged[i] = 1
    delta[sel] = merged
    delta[F.dims == d] = -1
    return delta


def _delta_euler(F: Filtration) -> np.ndarray:
    return np.where(F.dims % 2 == 0, 1, -1).astype(np.int64)


def _curve_from_delta(F: Filtration, q: int, delta: np.ndarray) -> BettiCurve:
    times, ends = F.distinct_times()
    values = np.cumsum(delta)[ends] if len(F) else np.zeros(0, dtype=np.int64)
    return BettiCurve(q, times, values.astype(np.int64))


def betti_curves(F: Filtration, qs: Iterable[int] | None = None) -> dict[int, BettiCurve]:
    """Betti curves for several degrees, sharing the union-find passes."""
    d = F.ambient_dim
    qs = list(range(d)) if qs is None else list(qs)
    for q in qs:
        if not 0 <= q <= d:
            raise ValueError(f"q must be in [0, {d}], got {q}")
    cache: dict[str, np.ndarray] = {}

    def get(name, fn):
        if name not in cache:
            cache[name] = fn(F)
        return cache[name]

    out = {}
    for q in qs:
        if q == d:
            # bounded sets in R^d have no top-degree homology
            times, _ = F.distinct_times()
            out[q] = BettiCurve(q, times, np.zeros(len(times), dtype=np.int64))
            continue
        if q == 0:
            delta = get("b0", _delta_beta0)
        elif q == d - 1:
            delta = get("top", _delta_top_dual)
        elif d == 3 and q == 1:
            delta = get("b0", _delta_beta0) + get("top", _delta_top_dual) - get("chi", _delta_euler)
        else:
            times, _ = F.distinct_times()
            D = persistence_diagram(F, q)
            out[q] = BettiCurve(q, times, np.asarray(D.betti_at(times), dtype=np.int64))
            continue
        out[q] = _curve_from_delta(F, q, delta)
    return out


def betti_curve(F: Filtration, q: int) -> BettiCurve:
    return betti_curves(F, [q])[q]


# --------------------------------------------------------------------------- lifetime sums


def _dyadic(xs: Iterable[float]) -> tuple[list[int], int]:
    """Integers ``k_i`` and a common denominator ``D`` with ``x_i == k_i / D`` exactly."""
    pairs = [float(x).as_integer_ratio() for x in xs]
    den = max((b for _, b in pairs), default=1)
    return [a * (den // b) for a, b in pairs], den


def lifetime_sum_from_diagram(D: PersistenceDiagram) -> LifetimeSum:
    ints, den = _dyadic(np.concatenate([D.births, D.deaths]).tolist())
    k = len(D.births)
    total = sum(ints[k:]) - sum(ints[:k])
    return LifetimeSum(D.q, Fraction(total, den))


def lifetime_sum_from_curve(B: BettiCurve) -> LifetimeSum:
    """Exact integral of the step function over [0, 1]."""
    if not len(B.times):
        return LifetimeSum(B.q, Fraction(0))
    ints, den = _dyadic(B.times.tolist() + [1.0])
    vals = B.values.tolist()
    total = sum(v * (ints[i + 1] - ints[i]) for i, v in enumerate(vals))
    return LifetimeSum(B.q, Fraction(total, den))
