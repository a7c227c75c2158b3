"""Brownian motion on the dual group and its radial part.

A three-dimensional Brownian driver ``(X, Y, Z)`` gives the process with
coordinates ``H = X`` and ``F = exp(r X / 2) I / 2``, where
``I_t = int_0^t exp(-r X_s) d(Y_s + i Z_s)``. Its radial part has the law of
a Bessel-3 process for every ``r``; it tends to ``|(X, Y, Z)|`` as
``r -> 0`` and to the Pitman transform of ``X`` as ``r -> infinity``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import _accel
from . import rng as _rng
from .orbit import DualGroupElement
from .stats import Ecdf, ks_distance, ks_threshold, ks_two_sample

__all__ = [
    "DriverPath",
    "RadialPath",
    "sample_driver",
    "coarsen",
    "stochastic_integral",
    "bj_state_path",
    "lambda_path",
    "norm_path",
    "pitman_path",
    "bessel3_marginal_cdf",
    "terminal_radial_samples",
    "r_invariance_experiment",
    "pairwise_r_invariance",
    "pathwise_limit_trends",
]


@dataclass(frozen=True, eq=False)
class DriverPath:
    """Brownian paths on the grid ``k dt``; arrays have shape ``(..., m + 1)``."""

    dt: float
    X: np.ndarray
    Y: np.ndarray
    Z: np.ndarray

    @property
    def T(self) -> float:
        return self.dt * (self.X.shape[-1] - 1)

    @property
    def steps(self) -> int:
        return self.X.shape[-1] - 1

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.steps + 1)


@dataclass(frozen=True, eq=False)
class RadialPath:
    dt: float
    values: np.ndarray


def _n_steps(T: float, dt: float) -> int:
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if T < dt * (1 - 1e-12):
        raise ValueError("T must be at least dt")
    return int(math.floor(T / dt + 1e-9))


def sample_driver(T: float, dt: float, rng: np.random.Generator, n_paths: int | None = None) -> DriverPath:
    """Three independent Brownian motions started at 0."""
    m = _n_steps(T, dt)
    shape = (3, m) if n_paths is None else (3, n_paths, m)
    inc = rng.standard_normal(shape) * math.sqrt(dt)
    pad = [(0, 0)] * (inc.ndim - 1) + [(1, 0)]
    X, Y, Z = np.pad(np.cumsum(inc, axis=-1), pad)
    return DriverPath(dt, X, Y, Z)


def coarsen(d: DriverPath, factor: int) -> DriverPath:
    """Keep every ``factor``-th grid point of the same paths."""
    if factor < 1 or d.steps % factor:
        raise ValueError("factor must divide the number of steps")
    sl = (..., slice(None, None, factor))
    return DriverPath(d.dt * factor, d.X[sl], d.Y[sl], d.Z[sl])


def stochastic_integral(d: DriverPath, r: float) -> np.ndarray:
    """Left-point sums ``I_k = sum_{j<k} exp(-r X_j) (dY_j + i dZ_j)``."""
    if r < 0:
        raise ValueError("r must be >= 0")
    db = np.diff(d.Y, axis=-1) + 1j * np.diff(d.Z, axis=-1)
    if r == 0:
        terms = db
    else:
        terms = np.exp(-r * d.X[..., :-1]) * db
    pad = [(0, 0)] * (terms.ndim - 1) + [(1, 0)]
    return np.pad(np.cumsum(terms, axis=-1), pad)


def bj_state_path(d: DriverPath, r: float) -> DualGroupElement:
    """Group-valued path: ``H = X``, ``F = exp(r X / 2) I / 2``."""
    if not r > 0:
        raise ValueError("r must be > 0")
    I = stochastic_integral(d, r)
    return DualGroupElement(r, d.X, 0.5 * np.exp(0.5 * r * d.X) * I)


def norm_path(d: DriverPath) -> np.ndarray:
    return np.sqrt(d.X ** 2 + d.Y ** 2 + d.Z ** 2)


def pitman_path(d: DriverPath) -> np.ndarray:
    """``X - 2 min_{s <= t} X_s`` on the driver grid."""
    return d.X - 2 * np.minimum.accumulate(d.X, axis=-1)


def lambda_path(d: DriverPath, r: float) -> RadialPath:
    """Radial part along the path, overflow-free for large ``r``.

    ``r = 0`` returns the norm of the driver, the flat limit.
    """
    if r < 0:
        raise ValueError("r must be >= 0")
    if r == 0:
        return RadialPath(d.dt, norm_path(d))
    X = np.atleast_2d(d.X)
    dY = np.diff(np.atleast_2d(d.Y), axis=-1)
    dZ = np.diff(np.atleast_2d(d.Z), axis=-1)
    vals = _accel.bj_lambda(X, dY, dZ, float(r))
    return RadialPath(d.dt, vals.reshape(d.X.shape))


def bessel3_marginal_cdf(x, t: float):
    """CDF of the Bessel-3 process at time ``t`` started from 0 (Maxwell law)."""
    if not t > 0:
        raise ValueError("t must be > 0")
    x = np.asarray(x, dtype=float)
    xp = np.maximum(x, 0.0)
    val = special.erf(xp / math.sqrt(2 * t)) - math.sqrt(2 / (math.pi * t)) * xp * np.exp(-xp ** 2 / (2 * t))
    val = np.where(x > 0, np.clip(val, 0.0, 1.0), 0.0)
    return float(val) if val.ndim == 0 else val


def terminal_radial_samples(r_grid, T: float, dt: float, N: int, seed=None, threads: int | None = None,
                            chunk: int = 1024) -> np.ndarray:
    """Radial part at time ``T`` for each ``r`` in ``r_grid``, shape ``(len(r_grid), N)``.

    All columns share the same drivers (common random numbers).
    """
    r_grid = [float(r) for r in r_grid]
    m = _n_steps(T, dt)

    def work(g, n):
        d = sample_driver(m * dt, dt, g, n)
        return np.stack([lambda_path(d, r).values[:, -1] for r in r_grid])

    return np.concatenate(_rng.map_chunks(work, N, seed, tag=31, chunk=chunk, threads=threads), axis=1)


def r_invariance_experiment(r_grid, T: float = 1.0, dt: float = 1e-3, N: int = 20000, seed=None,
                            threads: int | None = None, chunk: int = 1024) -> list[dict]:
    """KS distance of the terminal radial law to the Bessel-3 marginal, per ``r``.

    Returns
    -------
    list of dict
        Keys ``r, ks, ks_threshold, N, dt, T, seed``.
    """
    seed = _rng.resolve_seed(seed)
    samples = terminal_radial_samples(r_grid, T, dt, N, seed, threads, chunk)
    t_end = _n_steps(T, dt) * dt
    rows = []
    for r, col in zip(r_grid, samples):
        ks = ks_distance(Ecdf(col), lambda x: bessel3_marginal_cdf(x, t_end))
        rows.append(dict(r=float(r), ks=ks, ks_threshold=ks_threshold(N), N=N, dt=dt, T=t_end, seed=seed))
    return rows


def pairwise_r_invariance(r_grid, T: float = 1.0, dt: float = 1e-3, N: int = 20000, seed=None,
                          threads: int | None = None, chunk: int = 1024) -> list[dict]:
    """Two-sample KS distances between the terminal laws of every pair of ``r`` values.

    Each ``r`` gets independent drivers so the two-sample threshold applies.
    """
    seed = _rng.resolve_seed(seed)
    cols = []
    for i, r in enumerate(r_grid):
        sub = int(np.random.SeedSequence([seed, 97, i]).generate_state(1, np.uint64)[0])
        cols.append(terminal_radial_samples([r], T, dt, N, sub, threads, chunk)[0])
    rows = []
    for i in range(len(r_grid)):
        for j in range(i + 1, len(r_grid)):
            rows.append(dict(r1=float(r_grid[i]), r2=float(r_grid[j]), ks=ks_two_sample(cols[i], cols[j]),
                             ks_threshold=ks_threshold(N, N), N=N, dt=dt, seed=seed))
    return rows


def pathwise_limit_trends(n_paths: int = 200, T: float = 1.0, dt: float = 1e-3, seed=None,
                          small_r=(0.01, 0.1, 1.0), large_r=(5.0, 20.0, 80.0)) -> dict:
    """Sup-distances of the radial path to its flat and crystal limits, path by path.

    ``err_flat[i, j] = sup_k |Lambda^{small_r[j]}_k - |B_k||`` and
    ``err_crystal[i, j] = sup_k |Lambda^{large_r[j]}_k - Pitman(X)_k|``.
    The fractions count paths on which the error decreases strictly toward
    the limit (``r`` decreasing for the flat limit, increasing for the
    crystal one).
    """
    g = _rng.chunk_rng(_rng.resolve_seed(seed), 41, 0)
    d = sample_driver(T, dt, g, n_paths)
    nrm, pit = norm_path(d), pitman_path(d)
    err_flat = np.stack([np.abs(lambda_path(d, r).values - nrm).max(axis=-1) for r in small_r], axis=1)
    err_cry = np.stack([np.abs(lambda_path(d, r).values - pit).max(axis=-1) for r in large_r], axis=1)
    flat_ok = np.all(np.diff(err_flat, axis=1) > 0, axis=1)
    cry_ok = np.all(np.diff(err_cry, axis=1) < 0, axis=1)
    return dict(small_r=tuple(small_r), large_r=tuple(large_r), err_flat=err_flat, err_crystal=err_cry,
                frac_flat=float(flat_ok.mean()), frac_crystal=float(cry_ok.mean()), n_paths=n_paths)
