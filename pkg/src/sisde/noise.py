"""Brownian sample paths on uniform grids, dyadic bridge refinement and
polygonal evaluation.

Every Gaussian draw is a pure function of ``(seed, stream, index)``: the
stream is a Philox4x64 counter-based generator keyed by ``(seed, stream)``
and the ``index``-th raw 64-bit word is mapped through the inverse normal
CDF. Stream 0 holds the base increments, stream ``level + 1`` the midpoints
inserted when refining a path from ``level`` to ``level + 1``. Refinement
order and worker count therefore never change a path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtri

__all__ = [
    "TimeGrid",
    "BrownianPath",
    "counter_normals",
    "sample_path",
    "sample_values",
    "refine_bridge",
    "polygonal_eval",
    "cell_slope",
    "parse_seed",
    "path_seed",
]

_MASK64 = (1 << 64) - 1


def parse_seed(seed) -> int:
    """Accept an int, a decimal string or a ``0x`` hex string; return a uint64."""
    if isinstance(seed, str):
        s = seed.strip().lower()
        value = int(s, 16) if s.startswith("0x") else int(s, 10)
    else:
        value = int(seed)
    if not 0 <= value <= _MASK64:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {seed!r}")
    return value


def path_seed(base_seed: int, index: int) -> int:
    """Seed of path ``index`` in an ensemble, a splittable hash of (base_seed, index)."""
    ss = np.random.SeedSequence([parse_seed(base_seed), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def counter_normals(seed: int, stream: int, n: int) -> np.ndarray:
    """Standard normals ``z[0..n-1]`` where ``z[k]`` depends only on (seed, stream, k)."""
    bg = np.random.Philox(key=np.array([parse_seed(seed), stream], dtype=np.uint64))
    raw = bg.random_raw(n)
    # 53 high bits, centred in their bin: u in (0, 1) strictly
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform partition of ``[0, t_end]`` into ``n_cells`` cells."""

    t_end: float
    n_cells: int

    def __post_init__(self):
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ValueError(f"t_end must be positive, got {self.t_end!r}")
        if int(self.n_cells) != self.n_cells or self.n_cells < 1:
            raise ValueError(f"n_cells must be a positive integer, got {self.n_cells!r}")
        object.__setattr__(self, "t_end", float(self.t_end))
        object.__setattr__(self, "n_cells", int(self.n_cells))

    @property
    def dt(self) -> float:
        return self.t_end / self.n_cells

    @property
    def knots(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.n_cells + 1)

    def refined(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.t_end, self.n_cells * factor)


@dataclass(frozen=True, eq=False)
class BrownianPath:
    """Brownian motion sampled at the knots of ``grid``.

    ``values[k]`` is B(t_k); between knots the path is represented by its
    polygonal (linear) interpolation.
    """

    grid: TimeGrid
    values: np.ndarray = field(repr=False)
    seed: int
    level: int = 0

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.shape != (self.grid.n_cells + 1,):
            raise ValueError(
                f"values must have length n_cells + 1 = {self.grid.n_cells + 1}, got {v.shape}")
        if v[0] != 0.0:
            raise ValueError("a Brownian path starts at 0")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values)

    @property
    def slopes(self) -> np.ndarray:
        """Derivative of the polygonal path on each cell."""
        return self.increments / self.grid.dt

    def restrict(self, n_cells: int) -> np.ndarray:
        """Values at the knots of a coarser nested grid with ``n_cells`` cells."""
        step, rem = divmod(self.grid.n_cells, n_cells)
        if rem or step < 1:
            raise ValueError(f"{n_cells} cells is not a coarsening of {self.grid.n_cells}")
        return self.values[::step]

    def to_csv(self, fh) -> None:
        fh.write("t,B\n")
        for t, b in zip(self.grid.knots.tolist(), self.values.tolist()):
            fh.write(f"{t!r},{b!r}\n")


def sample_values(grid: TimeGrid, seeds: Sequence[int]) -> np.ndarray:
    """Knot values for several seeds at once, shape ``(n_cells + 1, len(seeds))``.

    Column ``j`` is bit-identical to ``sample_path(grid, seeds[j]).values``.
    """
    out = np.zeros((grid.n_cells + 1, len(seeds)))
    scale = math.sqrt(grid.dt)
    for j, s in enumerate(seeds):
        np.cumsum(counter_normals(s, 0, grid.n_cells) * scale, out=out[1:, j])
    return out


def sample_path(grid: TimeGrid, seed) -> BrownianPath:
    """Brownian path with independent N(0, dt) increments, fixed by (grid, seed)."""
    seed = parse_seed(seed)
    return BrownianPath(grid, sample_values(grid, [seed])[:, 0], seed, 0)


def refine_bridge(path: BrownianPath) -> BrownianPath:
    """Halve every cell, drawing each midpoint from the Brownian bridge law.

    The midpoint of cell ``k`` is ``(B_k + B_{k+1})/2 + sqrt(dt/4) z`` with
    ``z`` keyed by ``(seed, level + 1, k)``. Existing knots are copied, not
    recomputed.
    """
    n = path.grid.n_cells
    z = counter_normals(path.seed, path.level + 1, n)
    v = path.values
    out = np.empty(2 * n + 1)
    out[0::2] = v
    out[1::2] = 0.5 * (v[:-1] + v[1:]) + math.sqrt(path.grid.dt / 4) * z
    return BrownianPath(path.grid.refined(2), out, path.seed, path.level + 1)


def polygonal_eval(path: BrownianPath, t):
    """Polygonal approximation B^pi(t); exact at knots. Accepts scalars or arrays."""
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < 0) or np.any(t_arr > path.grid.t_end) or np.any(np.isnan(t_arr)):
        raise ValueError(f"t outside [0, {path.grid.t_end}]")
    n = path.grid.n_cells
    knots = path.grid.knots
    k = np.clip(np.searchsorted(knots, t_arr, side="right") - 1, 0, n - 1)
    w = (t_arr - knots[k]) / (knots[k + 1] - knots[k])
    v = path.values
    res = np.where(w == 0.0, v[k], (1 - w) * v[k] + w * v[k + 1])
    res = np.where(w == 1.0, v[k + 1], res)
    return float(res) if res.ndim == 0 else res


def cell_slope(path: BrownianPath, k: int) -> float:
    """Slope of B^pi on cell ``k``: (B_{k+1} - B_k) / dt."""
    if not 0 <= k < path.grid.n_cells:
        raise IndexError(f"cell {k} outside 0..{path.grid.n_cells - 1}")
    return float((path.values[k + 1] - path.values[k]) / path.grid.dt)
