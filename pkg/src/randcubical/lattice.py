"""Doubled-coordinate grids.

Every elementary cube inside ``[-m, m]^d`` is one cell of a ``(4m+1)^d`` grid;
the cell at index ``i`` along an axis has doubled coordinate ``i - 2m``.
"""
from __future__ import annotations

import numpy as np

from .cubes import ElementaryCube, Window


def axis_coords(w: Window) -> np.ndarray:
    return np.arange(-2 * w.n, 2 * w.n + 1, dtype=np.int64)


def coord_grids(w: Window) -> list[np.ndarray]:
    """Broadcastable per-axis doubled coordinates (``np.ix_`` style)."""
    c = axis_coords(w)
    return list(np.ix_(*([c] * w.ambient_dim)))


def dim_grid(w: Window) -> np.ndarray:
    odd = (axis_coords(w) & 1).astype(np.int8)
    out = np.zeros(w.grid_shape, dtype=np.int8)
    for ax in range(w.ambient_dim):
        shape = [1] * w.ambient_dim
        shape[ax] = -1
        out += odd.reshape(shape)
    return out


def strides(w: Window) -> np.ndarray:
    side = 4 * w.n + 1
    d = w.ambient_dim
    return np.array([side ** (d - 1 - ax) for ax in range(d)], dtype=np.int64)


def cube_index(w: Window, q: ElementaryCube) -> tuple[int, ...]:
    return tuple(c + 2 * w.n for c in q.doubled)


def flat_to_doubled(w: Window, flat: np.ndarray) -> np.ndarray:
    """Rows of doubled coordinates for flat grid indices."""
    idx = np.unravel_index(np.asarray(flat), w.grid_shape)
    return np.stack(idx, axis=-1) - 2 * w.n


def flat_to_cube(w: Window, flat: int) -> ElementaryCube:
    return ElementaryCube.from_doubled(flat_to_doubled(w, np.array([flat]))[0].tolist())


def crop(grid: np.ndarray, outer: Window, inner: Window) -> np.ndarray:
    """Sub-grid of ``inner`` (centered) from a grid over ``outer``."""
    off = 2 * (outer.n - inner.n)
    if off < 0:
        raise ValueError("inner window is larger than outer window")
    sl = slice(off, off + 4 * inner.n + 1)
    return grid[(sl,) * outer.ambient_dim]


def shifted(grid: np.ndarray, axis: int, step: int, fill) -> np.ndarray:
    """``out[i] = grid[i + step]`` along ``axis``; out-of-range cells get ``fill``."""
    out = np.full_like(grid, fill)
    n = grid.shape[axis]
    src = [slice(None)] * grid.ndim
    dst = [slice(None)] * grid.ndim
    if step >= 0:
        src[axis] = slice(step, n)
        dst[axis] = slice(0, n - step)
    else:
        src[axis] = slice(0, n + step)
        dst[axis] = slice(-step, n)
    out[tuple(dst)] = grid[tuple(src)]
    return out
