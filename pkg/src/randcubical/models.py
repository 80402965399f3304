"""Samplers for random cubical set models.

Each cube's value is a pure function of ``(seed, stream, cube)``: a
SplitMix64-style hash of the seed, the stream integers and the cube's doubled
coordinates is turned into a uniform on [0, 1).  Values are therefore
reproducible, independent of sampling order, and coherent under translation
(the same cube gets the same value in every window).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from math import comb
from typing import Callable

import numpy as np

from . import lattice
from .cubes import Window
from .errors import InvalidModelError, NonProductModelError, OutOfRegionError
from .filtration import Configuration

__all__ = [
    "ModelSpec",
    "SampleSeed",
    "sample_configuration",
    "marginal_cdf",
    "translate_configuration",
    "resample_origin",
    "uniforms",
    "presence_probability",
]

_M64 = (1 << 64) - 1


def _mix(x: np.ndarray) -> np.ndarray:
    x = x + np.uint64(0x9E3779B97F4A7C15)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


@dataclass(frozen=True)
class SampleSeed:
    """Root seed plus a stream path, e.g. ``(window_n, sample_index)``."""

    seed: int
    stream: tuple[int, ...] = ()

    def child(self, *path: int) -> "SampleSeed":
        return SampleSeed(self.seed, self.stream + tuple(int(p) for p in path))

    def key(self) -> np.uint64:
        with np.errstate(over="ignore"):
            h = _mix(np.array(self.seed & _M64, dtype=np.uint64))
            for s in self.stream:
                h = _mix(h ^ _mix(np.array(int(s) & _M64, dtype=np.uint64)))
        return h


def uniforms(seed: SampleSeed | np.ndarray, coords: list[np.ndarray]) -> np.ndarray:
    """Uniforms in [0, 1) for cubes given by broadcastable doubled-coordinate arrays.

    ``seed`` may also be an array of precomputed keys (see :meth:`SampleSeed.key`)
    that broadcasts against the coordinates.
    """
    key = seed.key() if isinstance(seed, SampleSeed) else np.asarray(seed, dtype=np.uint64)
    with np.errstate(over="ignore"):
        h = key
        for ax, c in enumerate(coords):
            cu = np.asarray(c, dtype=np.int64).astype(np.uint64)
            h = _mix(h ^ _mix(cu + np.uint64(ax) * np.uint64(0xD1B54A32D192ED03)))
        return (h >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


# --------------------------------------------------------------------------- models


@dataclass(frozen=True)
class ModelSpec:
    """One of ``bernoulli`` (random births in dimension k only), ``uniform`` (all
    cubes uniform) or ``costafarber`` (binary, cube present with probability
    ``p[dim]`` once its boundary is present)."""

    variant: str
    ambient_dim: int
    k: int | None = None
    p: tuple[float, ...] | None = None

    def __post_init__(self):
        d = self.ambient_dim
        if d < 1:
            raise InvalidModelError("ambient dimension must be >= 1")
        if self.variant == "bernoulli":
            if self.k is None or not 0 <= self.k <= d:
                raise InvalidModelError(f"bernoulli needs 0 <= k <= {d}, got k={self.k}")
        elif self.variant == "uniform":
            pass
        elif self.variant == "costafarber":
            if self.p is None or len(self.p) != d + 1:
                raise InvalidModelError(f"costafarber needs {d + 1} probabilities p_0..p_{d}")
            if any(not 0.0 <= x <= 1.0 for x in self.p):
                raise InvalidModelError("costafarber probabilities must lie in [0, 1]")
            object.__setattr__(self, "p", tuple(float(x) for x in self.p))
        else:
            raise InvalidModelError(f"unknown model variant {self.variant!r}")

    @classmethod
    def bernoulli(cls, d: int, k: int) -> "ModelSpec":
        return cls("bernoulli", d, k=k)

    @classmethod
    def uniform(cls, d: int) -> "ModelSpec":
        return cls("uniform", d)

    @classmethod
    def costafarber(cls, d: int, p) -> "ModelSpec":
        return cls("costafarber", d, p=tuple(p))

    @classmethod
    def parse(cls, text: str) -> "ModelSpec":
        """Parse ``bernoulli:d=3,k=2``, ``uniform:d=2`` or ``costafarber:d=2,p=1.0,0.5,0.25``."""
        m = re.fullmatch(r"\s*(\w+)\s*:\s*(.*?)\s*", text)
        if not m:
            raise InvalidModelError(f"bad model string {text!r}")
        variant = m.group(1).lower()
        params: dict[str, list[str]] = {}
        current = None
        for tok in m.group(2).split(","):
            tok = tok.strip()
            if "=" in tok:
                current, val = (s.strip() for s in tok.split("=", 1))
                params[current] = [val]
            elif current is not None and tok:
                params[current].append(tok)
            else:
                raise InvalidModelError(f"bad model string {text!r}")
        try:
            d = int(params.pop("d")[0])
            k = int(params.pop("k")[0]) if "k" in params else None
            p = tuple(float(x) for x in params.pop("p")) if "p" in params else None
        except (KeyError, ValueError) as exc:
            raise InvalidModelError(f"bad model string {text!r}") from exc
        if params:
            raise InvalidModelError(f"unknown model parameters {sorted(params)}")
        return cls(variant, d, k=k, p=p)

    def __str__(self) -> str:
        if self.variant == "bernoulli":
            return f"bernoulli:d={self.ambient_dim},k={self.k}"
        if self.variant == "uniform":
            return f"uniform:d={self.ambient_dim}"
        return f"costafarber:d={self.ambient_dim},p=" + ",".join(repr(x) for x in self.p)

    @property
    def is_product(self) -> bool:
        # a deterministic Costa-Farber model is a product of point masses
        return self.variant in ("bernoulli", "uniform") or self.is_deterministic

    @property
    def is_deterministic(self) -> bool:
        if self.variant == "costafarber":
            return all(x in (0.0, 1.0) for x in self.p)
        return False

    def has_continuous_marginals(self) -> bool:
        """True when every non-degenerate marginal is continuous.

        Point masses (Bernoulli's fixed 0/1 values) carry no randomness and
        are allowed; Costa-Farber's two-point marginals are not.
        """
        if self.variant == "costafarber":
            return all(x in (0.0, 1.0) for x in self.p)
        return True

    def draw(self, u: np.ndarray, dims: np.ndarray) -> np.ndarray:
        """Product-model value from a uniform ``u`` for cubes of dimension ``dims``."""
        if self.variant == "uniform":
            return np.broadcast_to(u, np.broadcast(u, dims).shape).astype(np.float64)
        if self.variant == "bernoulli":
            return np.where(dims < self.k, 0.0, np.where(dims == self.k, u, 1.0))
        if self.is_deterministic:
            present = np.array([presence_probability(self, k) == 1.0 for k in range(self.ambient_dim + 1)])
            return np.broadcast_to(np.where(present[dims], 0.0, 1.0), np.broadcast(u, dims).shape).astype(np.float64)
        raise NonProductModelError("costafarber values are not drawn cube by cube")


# --------------------------------------------------------------------------- sampling


def sample_configuration(m: ModelSpec, region: Window, s: SampleSeed) -> Configuration:
    if region.ambient_dim != m.ambient_dim:
        raise InvalidModelError(f"model is {m.ambient_dim}-dimensional, region is {region.ambient_dim}-dimensional")
    u = uniforms(s, lattice.coord_grids(region))
    dims = lattice.dim_grid(region)
    if m.is_product:
        return Configuration(region, m.draw(u, dims), m)
    present = np.zeros(region.grid_shape, dtype=bool)
    odd = lattice.axis_coords(region) & 1
    for k in range(m.ambient_dim + 1):
        eligible = dims == k
        for ax in range(m.ambient_dim):
            shape = [1] * m.ambient_dim
            shape[ax] = -1
            axis_odd = np.broadcast_to(odd.reshape(shape).astype(bool), present.shape)
            for step in (-1, 1):
                face = lattice.shifted(present, ax, step, False)
                eligible &= ~axis_odd | face
        present |= eligible & (u < m.p[k])
    return Configuration(region, np.where(present, 0.0, 1.0), m)


def presence_probability(m: ModelSpec, k: int) -> float:
    """P(a k-cube is present) for the Costa-Farber model: every face's coin must succeed."""
    out = 1.0
    for j in range(k + 1):
        out *= m.p[j] ** (comb(k, j) * 2 ** (k - j))
    return out


def marginal_cdf(m: ModelSpec, k: int) -> Callable[[float], float]:
    """``t -> P(omega_Q <= t)`` for a k-cube Q."""
    d = m.ambient_dim
    if not 0 <= k <= d:
        raise ValueError(f"k must be in [0, {d}]")
    if m.variant == "uniform":
        return lambda t: min(max(float(t), 0.0), 1.0)
    if m.variant == "bernoulli":
        if k < m.k:
            return lambda t: 1.0 if t >= 0 else 0.0
        if k == m.k:
            return lambda t: min(max(float(t), 0.0), 1.0)
        return lambda t: 1.0 if t >= 1 else 0.0
    pk = presence_probability(m, k)
    return lambda t: 0.0 if t < 0 else (pk if t < 1 else 1.0)


def translate_configuration(omega: Configuration, x) -> Configuration:
    """``(tau_x omega)_Q = omega_{Q - x}``, re-windowed to the largest centered
    box whose preimage lies in the original region."""
    x = tuple(int(v) for v in x)
    if len(x) != omega.ambient_dim:
        raise ValueError("translation vector has the wrong dimension")
    shift = max((abs(v) for v in x), default=0)
    new_n = omega.region.n - shift
    if new_n < 1:
        raise OutOfRegionError(f"translation by {x} leaves no covered window")
    new = Window(new_n, omega.ambient_dim)
    sl = tuple(slice(2 * (shift - v), 2 * (shift - v) + 4 * new_n + 1) for v in x)
    return Configuration(new, omega.values[sl], omega.model)


def resample_origin(omega: Configuration, s: SampleSeed) -> Configuration:
    """Redraw the ``2^d`` cubes anchored at the origin from the same product model."""
    m = omega.model
    if m is None:
        raise InvalidModelError("configuration has no model to resample from")
    if not m.is_product:
        raise NonProductModelError(f"{m} is not a product measure")
    d = omega.ambient_dim
    region = omega.region
    vals = np.array(omega.values)
    ext = np.array(np.meshgrid(*([[0, 1]] * d), indexing="ij")).reshape(d, -1).T
    u = uniforms(s, [ext[:, ax] for ax in range(d)])
    new = m.draw(u, ext.sum(axis=1))
    for e, v in zip(ext.tolist(), new.tolist()):
        vals[tuple(c + 2 * region.n for c in e)] = v
    return Configuration(region, vals, m)
