"""The dual Poisson-Lie group of SU(2) at curvature ``r``.

A point is stored by its coordinates ``(H, F)`` and stands for the lower
triangular matrix::

    [[exp(r H / 2),  0            ],
     [2 r F,         exp(-r H / 2)]]

Dressing orbits are the level sets of the radial part
``(1/r) arccosh(cosh(r H) + 2 r^2 |F|^2)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from . import rng as _rng
from .stats import mean_stderr

__all__ = [
    "DualGroupElement",
    "OrbitParams",
    "identity",
    "sample_orbit",
    "orbit_point",
    "multiply",
    "inverse",
    "radial_part",
    "radial_from_logs",
    "log_sinh",
    "group_exp",
    "group_log",
    "log_group_law",
    "spherical_function",
    "mc_convolution_expectation",
    "crystal_limit_functional",
    "ISEstimate",
    "archimedes_projection_sample",
    "orbit_log_density",
]


@dataclass(frozen=True, eq=False)
class DualGroupElement:
    """One point, or an array of points sharing ``r``."""

    r: float
    H: np.ndarray
    F: np.ndarray

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"r must be > 0, got {self.r}")
        H = np.asarray(self.H, dtype=float)
        F = np.asarray(self.F, dtype=complex)
        H, F = np.broadcast_arrays(H, F)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "F", F)

    @property
    def E(self) -> np.ndarray:
        return np.conj(self.F)

    def __len__(self):
        return self.H.shape[0] if self.H.ndim else 1

    def __getitem__(self, idx) -> "DualGroupElement":
        return DualGroupElement(self.r, self.H[idx], self.F[idx])

    def to_matrix(self) -> np.ndarray:
        """Matrices with shape ``H.shape + (2, 2)``."""
        m = np.zeros(self.H.shape + (2, 2), dtype=complex)
        m[..., 0, 0] = np.exp(0.5 * self.r * self.H)
        m[..., 1, 0] = 2 * self.r * self.F
        m[..., 1, 1] = np.exp(-0.5 * self.r * self.H)
        return m

    @classmethod
    def from_matrix(cls, m, r: float) -> "DualGroupElement":
        m = np.asarray(m)
        H = 2.0 * np.log(m[..., 0, 0].real) / r
        return cls(r, H, m[..., 1, 0] / (2 * r))

    def trace_gg_dagger(self) -> np.ndarray:
        """Half the trace of ``g g^dagger``: ``cosh(r H) + 2 r^2 |F|^2``."""
        return np.cosh(self.r * self.H) + 2 * self.r ** 2 * np.abs(self.F) ** 2


@dataclass(frozen=True)
class OrbitParams:
    """Dressing orbit with radial label ``lam`` at curvature ``r``."""

    lam: float
    r: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"orbit label must be > 0, got {self.lam}")
        if not self.r > 0:
            raise ValueError(f"r must be > 0, got {self.r}")


def identity(r: float) -> DualGroupElement:
    return DualGroupElement(r, 0.0, 0.0)


def log_sinh(y):
    """``log(sinh(y))`` for ``y >= 0``; ``-inf`` at 0."""
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore"):
        return y + np.log(-np.expm1(-2.0 * y)) - math.log(2.0)


def _check_same_r(g1, g2):
    if not math.isclose(g1.r, g2.r, rel_tol=1e-14):
        raise ValueError(f"curvature mismatch: {g1.r} vs {g2.r}")


def multiply(g1: DualGroupElement, g2: DualGroupElement) -> DualGroupElement:
    """Group law: ``H = H1 + H2``, ``F = F1 exp(r H2 / 2) + exp(-r H1 / 2) F2``."""
    _check_same_r(g1, g2)
    r = g1.r
    F = g1.F * np.exp(0.5 * r * g2.H) + np.exp(-0.5 * r * g1.H) * g2.F
    return DualGroupElement(r, g1.H + g2.H, F)


def inverse(g: DualGroupElement) -> DualGroupElement:
    return DualGroupElement(g.r, -g.H, -g.F)


def radial_from_logs(r: float, H, log_abs_2rF):
    """Radial part from ``H`` and ``log |2 r F|``.

    Uses ``arccosh(1 + d)`` with ``d = 2 sinh(r H / 2)^2 + |2 r F|^2 / 2``,
    through ``log1p`` for small ``d`` and through ``log d`` when ``d`` would
    overflow.
    """
    H = np.asarray(H, dtype=float)
    lf = np.asarray(log_abs_2rF, dtype=float)
    y = 0.5 * r * np.abs(H)
    log_a = math.log(2.0) + 2.0 * log_sinh(y)
    log_b = 2.0 * lf - math.log(2.0)
    log_d = np.logaddexp(log_a, log_b)
    small = log_d < 30.0
    with np.errstate(over="ignore", invalid="ignore"):
        d = np.exp(np.where(small, log_d, 0.0))
        val_small = np.log1p(d + np.sqrt(d * (d + 2.0)))
        log_x = log_d + np.log1p(np.exp(-log_d))
        val_big = log_x + np.log1p(np.sqrt(-np.expm1(-2.0 * log_x)))
    out = np.where(small, val_small, val_big) / r
    return float(out) if out.ndim == 0 else out


def radial_part(g: DualGroupElement):
    """``(1/r) arccosh(cosh(r H) + 2 r^2 |F|^2)``."""
    with np.errstate(divide="ignore"):
        lf = np.log(2 * g.r * np.abs(g.F))
    return radial_from_logs(g.r, g.H, lf)


def orbit_log_density(mu, o: OrbitParams):
    """Log density of ``H`` on the orbit: ``r exp(r mu) / (2 sinh(r lam))`` on ``[-lam, lam]``."""
    mu = np.asarray(mu, dtype=float)
    r, lam = o.r, o.lam
    return math.log(r) + r * mu - (math.log(2.0) + float(log_sinh(r * lam)))


def orbit_point(o: OrbitParams, mu, theta) -> DualGroupElement:
    """Orbit point with ``H = mu`` and phase ``theta``."""
    mu = np.clip(np.asarray(mu, dtype=float), -o.lam, o.lam)
    r, lam = o.r, o.lam
    log_mod = 0.5 * (math.log(4.0) + log_sinh(0.5 * r * (lam + mu)) + log_sinh(0.5 * r * (lam - mu)))
    F = np.exp(log_mod) / (2 * r) * np.exp(1j * np.asarray(theta, dtype=float))
    return DualGroupElement(r, mu, F)


def sample_orbit(o: OrbitParams, rng: np.random.Generator, size=None) -> DualGroupElement:
    """Sample the invariant measure on the orbit.

    ``exp(r H)`` is uniform on ``[exp(-r lam), exp(r lam)]`` and the phase of
    ``F`` is uniform and independent.
    """
    u = rng.random(size)
    theta = rng.uniform(0.0, 2 * math.pi, size)
    r, lam = o.r, o.lam
    with np.errstate(divide="ignore"):
        mu = lam + np.logaddexp(np.log(u), np.log1p(-u) - 2 * r * lam) / r
    return orbit_point(o, mu, theta)


def group_exp(H, F, r: float) -> DualGroupElement:
    """Exponential of the algebra element with coordinates ``(H, F)``."""
    H = np.asarray(H, dtype=float)
    y = 0.5 * r * H
    return DualGroupElement(r, H, np.asarray(F) * _sinhc(y))


def _sinhc(y):
    """``sinh(y) / y`` with its series near 0."""
    y = np.asarray(y, dtype=float)
    small = np.abs(y) < 1e-4
    safe = np.where(small, 1.0, y)
    return np.where(small, 1.0 + y * y / 6.0, np.sinh(safe) / safe)


def group_log(g: DualGroupElement):
    """Inverse of :func:`group_exp`, returns ``(H, F)``."""
    return g.H.copy(), g.F / _sinhc(0.5 * g.r * g.H)


def log_group_law(X1, X2, r: float):
    """``(1/r) log(exp(r X1) exp(r X2))`` on coordinates ``(H, F)``."""
    g = multiply(group_exp(*X1, r=r), group_exp(*X2, r=r))
    return group_log(g)


def spherical_function(z, lam, r: float):
    """``sinh(z r lam) / (z sinh(r lam))``, with value ``r lam / sinh(r lam)`` at ``z = 0``."""
    x = r * np.asarray(lam, dtype=float)
    z = np.asarray(z, dtype=complex)
    z, x = np.broadcast_arrays(z, x)
    out = np.empty(z.shape, dtype=complex)
    zero = z == 0
    out[zero] = x[zero] / np.sinh(x[zero])
    out[~zero] = np.sinh(z[~zero] * x[~zero]) / (z[~zero] * np.sinh(x[~zero]))
    return complex(out) if out.ndim == 0 else out


def _sample_product(o1, o2, rng, n):
    g = sample_orbit(o1, rng, n)
    if o2 is not None:
        g = multiply(g, sample_orbit(o2, rng, n))
    return g


def mc_convolution_expectation(o1: OrbitParams, o2: OrbitParams | None,
                               f: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray],
                               N: int, rng=None, threads: int | None = None,
                               chunk: int = _rng.DEFAULT_CHUNK):
    """Monte Carlo mean of ``f(H, F, Lambda)`` at ``g1 g2`` (or ``g1`` when ``o2`` is None).

    Parameters
    ----------
    rng : int or Generator, optional
        Seed material for the chunked streams.

    Returns
    -------
    mean, stderr
    """
    if N <= 0:
        raise ValueError("N must be positive")
    if o2 is not None and not math.isclose(o1.r, o2.r, rel_tol=1e-14):
        raise ValueError("orbits use different curvature")

    def work(g_rng, n):
        g = _sample_product(o1, o2, g_rng, n)
        return np.asarray(f(g.H, g.F, radial_part(g)))

    vals = np.concatenate(_rng.map_chunks(work, N, rng, tag=11, chunk=chunk, threads=threads))
    m, se = mean_stderr(vals)
    if np.iscomplexobj(vals):
        return complex(m), se
    return float(m), se


class ISEstimate(NamedTuple):
    mean: float
    stderr: float
    ess: float
    low_ess: bool


def crystal_limit_functional(o1: OrbitParams, o2: OrbitParams, phi, psi, N: int, rng=None,
                             proposal: str = "uniform", threads: int | None = None,
                             chunk: int = _rng.DEFAULT_CHUNK, min_ess: float = 100.0) -> ISEstimate:
    """Self-normalized estimate of ``E[w phi(Lambda) psi(H)] / E[w]``, ``w = exp(-r H(g1 g2))``.

    Parameters
    ----------
    phi, psi : sequence of float
        Polynomial coefficients, constant term first.
    proposal : {"uniform", "orbit"}
        ``"orbit"`` samples both factors from the orbit measure and weights by
        ``w``. ``"uniform"`` samples ``H`` of each factor uniformly and
        carries the orbit density ratio in the weight; since the orbit density
        of ``H`` is proportional to ``exp(r H)`` the weights become constant,
        which keeps the estimator usable at large ``r``.

    Returns
    -------
    ISEstimate
        ``low_ess`` is set (and a warning issued) when the effective sample
        size is below ``min_ess``.
    """
    if N <= 0:
        raise ValueError("N must be positive")
    if not math.isclose(o1.r, o2.r, rel_tol=1e-14):
        raise ValueError("orbits use different curvature")
    if proposal not in ("uniform", "orbit"):
        raise ValueError(f"unknown proposal {proposal!r}")
    r = o1.r
    P = np.polynomial.polynomial

    def work(g_rng, n):
        if proposal == "orbit":
            g1, g2 = sample_orbit(o1, g_rng, n), sample_orbit(o2, g_rng, n)
            logw = -r * (g1.H + g2.H)
        else:
            mu1 = g_rng.uniform(-o1.lam, o1.lam, n)
            mu2 = g_rng.uniform(-o2.lam, o2.lam, n)
            t1 = g_rng.uniform(0.0, 2 * math.pi, n)
            t2 = g_rng.uniform(0.0, 2 * math.pi, n)
            g1, g2 = orbit_point(o1, mu1, t1), orbit_point(o2, mu2, t2)
            logw = (orbit_log_density(mu1, o1) + orbit_log_density(mu2, o2) - r * (mu1 + mu2)
                    + math.log(2 * o1.lam) + math.log(2 * o2.lam))
        g = multiply(g1, g2)
        vals = P.polyval(radial_part(g), phi) * P.polyval(g.H, psi)
        return logw, vals

    logw, vals = _rng.concat(_rng.map_chunks(work, N, rng, tag=13, chunk=chunk, threads=threads))
    w = np.exp(logw - logw.max())
    sw = w.sum()
    est = float(np.dot(w, vals) / sw)
    se = float(np.sqrt(np.sum((w * (vals - est)) ** 2)) / sw)
    ess = float(sw ** 2 / np.sum(w * w))
    low = ess < min_ess
    if low:
        warnings.warn(f"effective sample size {ess:.1f} below {min_ess}", RuntimeWarning, stacklevel=2)
    return ISEstimate(est, se, ess, low)


def archimedes_projection_sample(rng: np.random.Generator, size=None):
    """First coordinate of a uniform point on the unit sphere."""
    shape = (3,) if size is None else (np.atleast_1d(size).tolist() + [3])
    v = rng.standard_normal(shape)
    x = v[..., 0] / np.linalg.norm(v, axis=-1)
    return float(x) if size is None else x
