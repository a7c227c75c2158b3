"""Empirical distribution tests, moment estimators and 2-d quadrature."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special, stats as _sst

__all__ = [
    "Ecdf",
    "ks_distance",
    "ks_two_sample",
    "ks_threshold",
    "mean_stderr",
    "chi2_test",
    "gauss_legendre",
    "quad2d",
]


class Ecdf:
    """Empirical CDF of a one-dimensional sample (right-continuous)."""

    def __init__(self, sample):
        x = np.sort(np.asarray(sample, dtype=float).ravel())
        if x.size == 0:
            raise ValueError("empty sample")
        if np.isnan(x).any():
            raise ValueError("sample contains NaN")
        self.sample = x
        self.sample.setflags(write=False)

    def __len__(self):
        return self.sample.size

    def __call__(self, x):
        return np.searchsorted(self.sample, x, side="right") / self.sample.size


def ks_distance(e: Ecdf | np.ndarray, cdf: Callable) -> float:
    """Kolmogorov-Smirnov distance ``sup |F_n - F|``.

    Both one-sided gaps are evaluated at every jump of ``F_n``, using the
    left limit of ``cdf`` as well so reference laws with atoms are handled.
    """
    if not isinstance(e, Ecdf):
        e = Ecdf(e)
    x = e.sample
    n = x.size
    u, first = np.unique(x, return_index=True)
    last = np.r_[first[1:], n]
    fn_right = last / n
    fn_left = first / n
    f_right = np.asarray(cdf(u), dtype=float)
    f_left = np.asarray(cdf(np.nextafter(u, -np.inf)), dtype=float)
    return float(max(np.abs(fn_right - f_right).max(), np.abs(fn_left - f_left).max()))


def ks_two_sample(x, y) -> float:
    """Two-sample KS statistic."""
    return float(_sst.ks_2samp(np.ravel(x), np.ravel(y)).statistic)


def ks_threshold(n: int, m: int | None = None, coef: float = 1.36) -> float:
    """Asymptotic 5% critical value, one or two samples."""
    if m is None:
        return coef / np.sqrt(n)
    return coef * np.sqrt((n + m) / (n * m))


def mean_stderr(values) -> tuple:
    """Sample mean and its standard error; complex samples pool both parts."""
    v = np.asarray(values).ravel()
    n = v.size
    if n == 0:
        raise ValueError("no samples")
    m = v.mean()
    if n == 1:
        return m, float("inf")
    if np.iscomplexobj(v):
        var = v.real.var(ddof=1) + v.imag.var(ddof=1)
    else:
        var = v.var(ddof=1)
    return m, float(np.sqrt(var / n))


@dataclass(frozen=True)
class Chi2Result:
    statistic: float
    dof: int
    pvalue: float


def chi2_test(observed, expected_probs, min_expected: float = 5.0) -> Chi2Result:
    """Pearson chi-square goodness of fit.

    Cells whose expected count is below ``min_expected`` are pooled. A count
    in a cell of zero expected probability gives ``pvalue = 0``.
    """
    obs = np.asarray(observed, dtype=float).ravel()
    prob = np.asarray(expected_probs, dtype=float).ravel()
    if obs.shape != prob.shape:
        raise ValueError("observed and expected have different shapes")
    if np.any(prob < 0):
        raise ValueError("negative expected probability")
    n = obs.sum()
    if n <= 0:
        raise ValueError("no observations")
    if np.any(obs[prob == 0] > 0):
        return Chi2Result(float("inf"), max(int((prob > 0).sum()) - 1, 0), 0.0)
    obs, prob = obs[prob > 0], prob[prob > 0] / prob[prob > 0].sum()
    exp = n * prob
    small = exp < min_expected
    if small.any():
        o = list(obs[~small]) + [obs[small].sum()]
        e = list(exp[~small]) + [exp[small].sum()]
        if e[-1] < min_expected and len(e) > 1:
            j = int(np.argmin(e[:-1]))
            o[j] += o.pop()
            e[j] += e.pop()
        obs, exp = np.array(o), np.array(e)
    dof = obs.size - 1
    if dof < 1:
        raise ValueError("chi-square test needs at least two cells after pooling")
    stat = float(((obs - exp) ** 2 / exp).sum())
    return Chi2Result(stat, dof, float(special.gammaincc(dof / 2.0, stat / 2.0)))


def gauss_legendre(a: float, b: float, n: int, panels: int = 1):
    """Composite Gauss-Legendre nodes and weights on ``[a, b]``."""
    t, w = np.polynomial.legendre.leggauss(n)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def quad2d(f: Callable, a1: float, b1: float, a2: float, b2: float, n_nodes: int = 20,
           diagonal: float | None = None, panels: int = 1) -> float:
    """Integrate ``f(x1, x2)`` over ``[a1, b1] x [a2, b2]``.

    Parameters
    ----------
    f : callable
        Vectorized in both arguments.
    diagonal : float, optional
        If given, ``f`` may have a kink along ``x1 + x2 = diagonal``; the
        rectangle is split along that line and each smooth piece gets its
        own Gauss-Legendre rule.
    panels : int
        Composite panels per direction on each piece.
    """
    if not (b1 > a1 and b2 > a2):
        raise ValueError("quad2d needs a1 < b1 and a2 < b2")
    if n_nodes < 1 or panels < 1:
        raise ValueError("n_nodes and panels must be positive")
    if diagonal is None:
        x1, w1 = gauss_legendre(a1, b1, n_nodes, panels)
        x2, w2 = gauss_legendre(a2, b2, n_nodes, panels)
        X1, X2 = np.meshgrid(x1, x2, indexing="ij")
        return float(np.sum(w1[:, None] * w2[None, :] * f(X1, X2)))
    c = float(diagonal)
    breaks = sorted({a1, b1, *(v for v in (c - b2, c - a2) if a1 < v < b1)})
    total = 0.0
    for u, v in zip(breaks[:-1], breaks[1:]):
        x1, w1 = gauss_legendre(u, v, n_nodes, panels)
        s = np.clip(c - x1, a2, b2)
        for lo, hi in ((np.full_like(s, a2), s), (s, np.full_like(s, b2))):
            half = 0.5 * (hi - lo)
            if not np.any(half > 0):
                continue
            tt, ww = gauss_legendre(-1.0, 1.0, n_nodes, panels)
            x2 = 0.5 * (hi + lo)[:, None] + half[:, None] * tt[None, :]
            vals = f(np.broadcast_to(x1[:, None], x2.shape), x2)
            total += float(np.sum(w1[:, None] * half[:, None] * ww[None, :] * vals))
    return total
