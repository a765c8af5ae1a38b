"""Discretized Brownian driving paths on uniform grids.

Every experiment in this package is a functional of one or more Brownian
paths sampled on a uniform grid.  Streams are derived from a single
experiment seed through numpy's splittable ``SeedSequence`` keyed on
``(seed, replicate, refinement level)`` and fed to the counter-based
Philox generator, so

* regenerating a path with the same key is bit-identical on any number
  of workers, and
* Brownian-bridge refinement never shares randomness with base sampling
  or with replication.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np

from .errors import ConfigurationError, DomainError

__all__ = [
    "TimeGrid",
    "StreamId",
    "BrownianPath",
    "PathEnsemble",
    "sample_path",
    "refine",
    "running_max",
]

_REL_TOL = 1e-9


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_k = k*dt, k = 0..n, with n*dt = horizon."""

    horizon: float
    dt: float

    def __post_init__(self):
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ConfigurationError(f"dt must be finite and positive, got {self.dt}")
        if not (self.horizon > 0.0 and math.isfinite(self.horizon)):
            raise ConfigurationError(
                f"horizon must be finite and positive, got {self.horizon}"
            )
        ratio = self.horizon / self.dt
        if abs(ratio - round(ratio)) > _REL_TOL * max(1.0, ratio) or round(ratio) < 1:
            raise ConfigurationError(
                f"horizon {self.horizon} is not an integer multiple of dt {self.dt}"
            )

    @property
    def n(self) -> int:
        """Number of steps; the grid has n + 1 nodes."""
        return int(round(self.horizon / self.dt))

    def times(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.dt

    def index_of(self, t: float) -> int:
        """Node index of a grid-aligned time; raises if t is off the grid."""
        k = round(t / self.dt)
        if k < 0 or k > self.n or abs(k * self.dt - t) > _REL_TOL * max(1.0, abs(t)):
            raise DomainError(f"time {t} is not a node of grid (dt={self.dt})")
        return int(k)

    def refined(self) -> "TimeGrid":
        return TimeGrid(self.horizon, self.dt / 2.0)


@dataclass(frozen=True)
class StreamId:
    """Key of the random stream a path was drawn from."""

    seed: int
    replicate: int
    level: int = 0


def _generator(stream: StreamId) -> np.random.Generator:
    seq = np.random.SeedSequence(
        entropy=stream.seed, spawn_key=(stream.replicate, stream.level)
    )
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class BrownianPath:
    """One sampled driving path W on a grid; immutable after creation."""

    grid: TimeGrid
    values: np.ndarray
    stream: StreamId

    def __post_init__(self):
        if self.values.shape != (self.grid.n + 1,):
            raise ConfigurationError(
                f"path has {self.values.shape[0]} nodes, grid wants {self.grid.n + 1}"
            )
        if self.values[0] != 0.0:
            raise ConfigurationError("Brownian path must start at 0")
        self.values.setflags(write=False)

    def increments(self) -> np.ndarray:
        return np.diff(self.values)

    def value_at(self, t: float) -> float:
        return float(self.values[self.grid.index_of(t)])


def sample_path(grid: TimeGrid, seed: int, replicate: int) -> BrownianPath:
    """Draw the level-0 path of stream (seed, replicate) on ``grid``."""
    stream = StreamId(seed, replicate, 0)
    rng = _generator(stream)
    values = np.empty(grid.n + 1)
    values[0] = 0.0
    np.cumsum(rng.normal(0.0, math.sqrt(grid.dt), grid.n), out=values[1:])
    return BrownianPath(grid, values, stream)


def refine(path: BrownianPath) -> BrownianPath:
    """Halve the step of ``path`` by Brownian-bridge midpoints.

    Even-indexed nodes of the result equal the input values; odd nodes are
    drawn conditionally with mean (W_k + W_{k+1})/2 and variance dt/4, from
    the next refinement level of the same stream.
    """
    coarse = path.values
    n = path.grid.n
    new_stream = replace(path.stream, level=path.stream.level + 1)
    rng = _generator(new_stream)
    mids = 0.5 * (coarse[:-1] + coarse[1:]) + rng.normal(
        0.0, math.sqrt(path.grid.dt / 4.0), n
    )
    values = np.empty(2 * n + 1)
    values[0::2] = coarse
    values[1::2] = mids
    return BrownianPath(path.grid.refined(), values, new_stream)


def running_max(path: BrownianPath) -> float:
    """Maximum of W over the grid nodes (>= 0 since W_0 = 0)."""
    return float(path.values.max())


@dataclass(frozen=True)
class PathEnsemble:
    """M replicate paths sharing one grid, generated lazily on demand.

    Replicate i is fully determined by (seed, i, level); nothing is stored,
    so ensembles of any size are cheap to pass around and safe to consume
    from parallel workers.
    """

    base_grid: TimeGrid
    size: int
    seed: int
    level: int = 0

    def __post_init__(self):
        if self.size < 1:
            raise ConfigurationError(f"ensemble size must be >= 1, got {self.size}")
        if self.level < 0:
            raise ConfigurationError("refinement level must be >= 0")

    @property
    def grid(self) -> TimeGrid:
        g = self.base_grid
        for _ in range(self.level):
            g = g.refined()
        return g

    def path(self, replicate: int) -> BrownianPath:
        if not 0 <= replicate < self.size:
            raise ConfigurationError(
                f"replicate {replicate} outside 0..{self.size - 1}"
            )
        p = sample_path(self.base_grid, self.seed, replicate)
        for _ in range(self.level):
            p = refine(p)
        return p

    def refined(self) -> "PathEnsemble":
        return replace(self, level=self.level + 1)

    def __len__(self) -> int:
        return self.size

    def __iter__(self) -> Iterator[BrownianPath]:
        return (self.path(i) for i in range(self.size))
