"""Elementary cubes, integer chains, the cubical product and the boundary operator.

A cube is stored as an anchor (the minimum corner) and an extent bit per axis:
extent 1 is the interval ``[a, a+1]``, extent 0 the point ``[a]``.  Most bulk
code works with *doubled coordinates* ``c = 2*a + e``; a cube is a single grid
cell in that lattice and its dimension is the number of odd coordinates.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .errors import DegenerateCubeError, DimensionMismatchError

__all__ = [
    "ElementaryCube",
    "Chain",
    "Window",
    "CubicalSet",
    "dim_cube",
    "primary_faces",
    "boundary",
    "cubical_product",
    "scalar_product",
    "faces_all",
    "supercubes",
    "enumerate_cubes",
    "parse_cube",
    "format_cube",
    "parse_chain",
    "format_chain",
]


@dataclass(frozen=True, slots=True)
class ElementaryCube:
    anchor: tuple[int, ...]
    extent: tuple[int, ...]

    def __post_init__(self):
        if len(self.anchor) != len(self.extent) or not self.anchor:
            raise ValueError("anchor and extent must be non-empty and of equal length")
        if any(e not in (0, 1) for e in self.extent):
            raise DegenerateCubeError(f"extent bits must be 0 or 1, got {self.extent}")

    @classmethod
    def from_intervals(cls, *intervals: tuple[int, ...]) -> "ElementaryCube":
        """Build from intervals written as ``(l,)`` or ``(l, l+1)``."""
        anchor, extent = [], []
        for iv in intervals:
            if len(iv) == 1:
                anchor.append(int(iv[0]))
                extent.append(0)
            elif len(iv) == 2 and iv[1] == iv[0] + 1:
                anchor.append(int(iv[0]))
                extent.append(1)
            else:
                raise DegenerateCubeError(f"not an elementary interval: {iv}")
        return cls(tuple(anchor), tuple(extent))

    @classmethod
    def from_doubled(cls, coords: Iterable[int]) -> "ElementaryCube":
        coords = tuple(int(c) for c in coords)
        return cls(tuple(c >> 1 for c in coords), tuple(c & 1 for c in coords))

    @property
    def ambient_dim(self) -> int:
        return len(self.anchor)

    @property
    def dim(self) -> int:
        return sum(self.extent)

    @property
    def doubled(self) -> tuple[int, ...]:
        return tuple(2 * a + e for a, e in zip(self.anchor, self.extent))

    def intervals(self) -> tuple[tuple[int, ...], ...]:
        return tuple((a, a + 1) if e else (a,) for a, e in zip(self.anchor, self.extent))

    def __mul__(self, other: "ElementaryCube") -> "ElementaryCube":
        return ElementaryCube(self.anchor + other.anchor, self.extent + other.extent)

    def translate(self, x: Iterable[int]) -> "ElementaryCube":
        return ElementaryCube(tuple(a + int(s) for a, s in zip(self.anchor, x)), self.extent)

    def contains(self, other: "ElementaryCube") -> bool:
        """Point-set inclusion ``other ⊆ self``."""
        for a, e, b, f in zip(self.anchor, self.extent, other.anchor, other.extent):
            lo, hi = b, b + f
            if lo < a or hi > a + e:
                return False
        return True

    def __str__(self) -> str:
        parts = [f"[{a},{a + 1}]" if e else f"[{a}]" for a, e in zip(self.anchor, self.extent)]
        return "x".join(parts)


def dim_cube(q: ElementaryCube) -> int:
    return q.dim


def primary_faces(q: ElementaryCube) -> list[tuple[int, ElementaryCube]]:
    """Signed codimension-one faces, ordered by nondegenerate axis.

    For the j-th nondegenerate axis the upper face comes with sign
    ``(-1)**(j-1)`` and the lower face with the opposite sign.
    """
    if q.dim == 0:
        raise DegenerateCubeError(f"{q} has no primary faces")
    out = []
    sign = 1
    for i, e in enumerate(q.extent):
        if not e:
            continue
        ext = q.extent[:i] + (0,) + q.extent[i + 1:]
        upper = q.anchor[:i] + (q.anchor[i] + 1,) + q.anchor[i + 1:]
        out.append((sign, ElementaryCube(upper, ext)))
        out.append((-sign, ElementaryCube(q.anchor, ext)))
        sign = -sign
    return out


def faces_all(q: ElementaryCube) -> set[ElementaryCube]:
    """Every elementary cube contained in ``q``, including ``q`` itself."""
    choices = []
    for a, e in zip(q.anchor, q.extent):
        choices.append([(a, 1), (a, 0), (a + 1, 0)] if e else [(a, 0)])
    return {
        ElementaryCube(tuple(c[0] for c in combo), tuple(c[1] for c in combo))
        for combo in itertools.product(*choices)
    }


# --------------------------------------------------------------------------- windows


@dataclass(frozen=True, slots=True)
class Window:
    """The box ``[-n, n]^d``."""

    n: int
    ambient_dim: int

    def __post_init__(self):
        if self.n < 1 or self.ambient_dim < 1:
            raise ValueError(f"window needs n >= 1 and d >= 1, got n={self.n}, d={self.ambient_dim}")

    @property
    def volume(self) -> int:
        return (2 * self.n) ** self.ambient_dim

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return (4 * self.n + 1,) * self.ambient_dim

    def contains(self, q: ElementaryCube) -> bool:
        if q.ambient_dim != self.ambient_dim:
            return False
        return all(-self.n <= a and a + e <= self.n for a, e in zip(q.anchor, q.extent))

    def grow(self, k: int = 1) -> "Window":
        return Window(self.n + k, self.ambient_dim)


def supercubes(p: ElementaryCube, region: Window | None = None) -> set[ElementaryCube]:
    """All elementary cubes containing ``p``; restricted to cubes inside ``region`` if given."""
    choices = []
    for a, e in zip(p.anchor, p.extent):
        choices.append([(a, 1)] if e else [(a, 0), (a - 1, 1), (a, 1)])
    out = set()
    for combo in itertools.product(*choices):
        q = ElementaryCube(tuple(c[0] for c in combo), tuple(c[1] for c in combo))
        if region is None or region.contains(q):
            out.add(q)
    return out


def enumerate_cubes(w: Window, k: int) -> list[ElementaryCube]:
    """All k-cubes inside the window, in lexicographic order of doubled coordinates."""
    d, n = w.ambient_dim, w.n
    if not 0 <= k <= d:
        raise ValueError(f"k must be in [0, {d}]")
    coords = range(-2 * n, 2 * n + 1)
    return [
        ElementaryCube.from_doubled(c)
        for c in itertools.product(coords, repeat=d)
        if sum(x & 1 for x in c) == k
    ]


# --------------------------------------------------------------------------- chains


@dataclass(frozen=True)
class Chain:
    """A finite integer combination of elementary cubes of one dimension.

    ``ambient_dim`` is only needed to type the zero chain; it is inferred from
    the terms otherwise.
    """

    dim: int
    terms: Mapping[ElementaryCube, int] = field(default_factory=dict)
    ambient_dim: int | None = None

    def __post_init__(self):
        clean = {}
        amb = self.ambient_dim
        for q, c in self.terms.items():
            if q.dim != self.dim:
                raise DimensionMismatchError(f"{q} has dim {q.dim}, chain has dim {self.dim}")
            if amb is None:
                amb = q.ambient_dim
            elif q.ambient_dim != amb:
                raise DimensionMismatchError("mixed ambient dimensions in one chain")
            c = int(c)
            if c:
                clean[q] = c
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "ambient_dim", amb)

    @classmethod
    def elementary(cls, q: ElementaryCube, coef: int = 1) -> "Chain":
        return cls(q.dim, {q: coef})

    @classmethod
    def zero(cls, dim: int, ambient_dim: int | None = None) -> "Chain":
        return cls(dim, {}, ambient_dim)

    def is_zero(self) -> bool:
        return not self.terms

    def __len__(self):
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple[ElementaryCube, int]]:
        return iter(sorted(self.terms.items(), key=lambda kv: kv[0].doubled))

    def coefficient(self, q: ElementaryCube) -> int:
        return self.terms.get(q, 0)

    def _check(self, other: "Chain"):
        if self.dim != other.dim and not (self.is_zero() or other.is_zero()):
            raise DimensionMismatchError(f"chain dims {self.dim} and {other.dim} differ")

    def __add__(self, other: "Chain") -> "Chain":
        self._check(other)
        out = dict(self.terms)
        for q, c in other.terms.items():
            out[q] = out.get(q, 0) + c
        dim = self.dim if self.terms or not other.terms else other.dim
        return Chain(dim, out, self.ambient_dim or other.ambient_dim)

    def __neg__(self) -> "Chain":
        return Chain(self.dim, {q: -c for q, c in self.terms.items()}, self.ambient_dim)

    def __sub__(self, other: "Chain") -> "Chain":
        return self + (-other)

    def __rmul__(self, k: int) -> "Chain":
        return Chain(self.dim, {q: k * c for q, c in self.terms.items()}, self.ambient_dim)

    def __eq__(self, other):
        if not isinstance(other, Chain):
            return NotImplemented
        if self.is_zero() and other.is_zero():
            return True
        return self.dim == other.dim and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        body = " + ".join(f"{c}*{q}" for q, c in self) or "0"
        return f"Chain(dim={self.dim}: {body})"


def boundary(c: Chain) -> Chain:
    """Linear extension of the primary-face formula; the boundary of a 0-chain is zero."""
    if c.dim <= 0:
        return Chain.zero(c.dim - 1, c.ambient_dim)
    out: dict[ElementaryCube, int] = {}
    for q, coef in c.terms.items():
        for s, face in primary_faces(q):
            out[face] = out.get(face, 0) + s * coef
    return Chain(c.dim - 1, out, c.ambient_dim)


def cubical_product(c1: Chain, c2: Chain) -> Chain:
    amb = None
    if c1.ambient_dim is not None and c2.ambient_dim is not None:
        amb = c1.ambient_dim + c2.ambient_dim
    out: dict[ElementaryCube, int] = {}
    for p, a in c1.terms.items():
        for q, b in c2.terms.items():
            pq = p * q
            out[pq] = out.get(pq, 0) + a * b
    return Chain(c1.dim + c2.dim, out, amb)


def scalar_product(c1: Chain, c2: Chain) -> int:
    if c1.dim != c2.dim:
        raise DimensionMismatchError(f"scalar product of {c1.dim}- and {c2.dim}-chains")
    small, big = (c1, c2) if len(c1.terms) <= len(c2.terms) else (c2, c1)
    return sum(a * big.terms.get(q, 0) for q, a in small.terms.items())


# --------------------------------------------------------------------------- cubical sets


@dataclass(frozen=True)
class CubicalSet:
    """A finite set of elementary cubes, meant to be face-closed.

    Use :meth:`closure` to build one from arbitrary generators; the plain
    constructor does not check closure (``missing_faces`` does).
    """

    cubes: frozenset[ElementaryCube]
    ambient_dim: int

    def __init__(self, cubes: Iterable[ElementaryCube], ambient_dim: int | None = None):
        cubes = frozenset(cubes)
        if ambient_dim is None:
            if not cubes:
                raise ValueError("ambient_dim is required for an empty cubical set")
            ambient_dim = next(iter(cubes)).ambient_dim
        if any(q.ambient_dim != ambient_dim for q in cubes):
            raise DimensionMismatchError("cubes with different ambient dimensions")
        object.__setattr__(self, "cubes", cubes)
        object.__setattr__(self, "ambient_dim", ambient_dim)

    @classmethod
    def closure(cls, generators: Iterable[ElementaryCube], ambient_dim: int | None = None) -> "CubicalSet":
        out: set[ElementaryCube] = set()
        for q in generators:
            if q not in out:
                out |= faces_all(q)
        return cls(out, ambient_dim)

    @classmethod
    def full(cls, w: Window) -> "CubicalSet":
        return cls(
            (ElementaryCube.from_doubled(c)
             for c in itertools.product(range(-2 * w.n, 2 * w.n + 1), repeat=w.ambient_dim)),
            w.ambient_dim,
        )

    def __len__(self):
        return len(self.cubes)

    def __contains__(self, q):
        return q in self.cubes

    def __iter__(self):
        return iter(self.cubes)

    def __le__(self, other: "CubicalSet") -> bool:
        return self.cubes <= other.cubes

    def of_dim(self, k: int) -> list[ElementaryCube]:
        return sorted((q for q in self.cubes if q.dim == k), key=lambda q: q.doubled)

    def counts(self) -> list[int]:
        out = [0] * (self.ambient_dim + 1)
        for q in self.cubes:
            out[q.dim] += 1
        return out

    def missing_faces(self) -> list[tuple[ElementaryCube, ElementaryCube]]:
        """(cube, face) pairs where a primary face is absent."""
        bad = []
        for q in self.cubes:
            if q.dim:
                for _, f in primary_faces(q):
                    if f not in self.cubes:
                        bad.append((q, f))
        return bad

    def is_face_closed(self) -> bool:
        return not self.missing_faces()


# --------------------------------------------------------------------------- text formats


def format_cube(q: ElementaryCube) -> str:
    return f"{q.ambient_dim};{','.join(map(str, q.anchor))};{','.join(map(str, q.extent))}"


def parse_cube(text: str) -> ElementaryCube:
    try:
        d_s, a_s, e_s = text.strip().split(";")
        d = int(d_s)
        anchor = tuple(int(x) for x in a_s.split(","))
        extent = tuple(int(x) for x in e_s.split(","))
    except ValueError as exc:
        raise ValueError(f"bad cube text {text!r}; expected 'd;a1,...,ad;e1,...,ed'") from exc
    if len(anchor) != d or len(extent) != d:
        raise ValueError(f"bad cube text {text!r}: expected {d} coordinates")
    return ElementaryCube(anchor, extent)


def format_chain(c: Chain) -> str:
    return "".join(f"{coef} {format_cube(q)}\n" for q, coef in c)


def parse_chain(text: str, dim: int | None = None, ambient_dim: int | None = None) -> Chain:
    terms: dict[ElementaryCube, int] = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        coef_s, cube_s = line.split(None, 1)
        q = parse_cube(cube_s)
        terms[q] = terms.get(q, 0) + int(coef_s)
        if dim is None:
            dim = q.dim
    if dim is None:
        raise ValueError("empty chain text needs an explicit dim")
    return Chain(dim, terms, ambient_dim)
