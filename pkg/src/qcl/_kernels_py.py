"""Reference numpy implementations of the hot loops.

Each function loops over time and vectorizes across paths. The compiled
module ``qcl._kernels`` provides the same functions with the same
signatures; integer walks agree exactly between the two.
"""

from __future__ import annotations

import math

import numpy as np


def radial_walk(u, up, lam0: int, keep_path: bool = True):
    """Birth-death walk on N driven by uniforms.

    Parameters
    ----------
    u : (N, n) float64
        One uniform per step; the walk steps up when ``u < up[lam]``.
    up : (L,) float64
        Up-probability by state; must cover every reachable state.
    """
    u = np.ascontiguousarray(u, dtype=np.float64)
    up = np.ascontiguousarray(up, dtype=np.float64)
    N, n = u.shape
    lam = np.full(N, lam0, dtype=np.int64)
    path = np.empty((N, n + 1), dtype=np.int64) if keep_path else None
    if keep_path:
        path[:, 0] = lam
    for k in range(n):
        lam += np.where(u[:, k] < up[lam], 1, -1)
        if keep_path:
            path[:, k + 1] = lam
    return path if keep_path else lam


# move order shared with the compiled kernels and chains._JOINT_MOVES
_D_OMEGA = np.array([1, -1, 1, -1], dtype=np.int64)
_D_LAM = np.array([1, 1, -1, -1], dtype=np.int64)


def joint_walk(u, cum, omega0: int, lam0: int, omega_offset: int, keep_path: bool = True):
    """Walk on ``(omega, lam)`` driven by uniforms.

    Parameters
    ----------
    cum : (L, W, 4) float64
        Cumulative move probabilities indexed by ``lam`` and
        ``omega + omega_offset``; the first move ``j`` with
        ``u < cum[..., j]`` is taken.
    """
    u = np.ascontiguousarray(u, dtype=np.float64)
    cum = np.ascontiguousarray(cum, dtype=np.float64)
    N, n = u.shape
    om = np.full(N, omega0, dtype=np.int64)
    lam = np.full(N, lam0, dtype=np.int64)
    path = np.empty((N, n + 1, 2), dtype=np.int64) if keep_path else None
    if keep_path:
        path[:, 0, 0] = om
        path[:, 0, 1] = lam
    for k in range(n):
        c = cum[lam, om + omega_offset]
        j = np.minimum((u[:, k, None] >= c).sum(axis=1), 3)
        om += _D_OMEGA[j]
        lam += _D_LAM[j]
        if keep_path:
            path[:, k + 1, 0] = om
            path[:, k + 1, 1] = lam
    if keep_path:
        return path
    return np.stack([om, lam], axis=1)


_LOG2 = math.log(2.0)


def _log_sinh(y):
    with np.errstate(divide="ignore"):
        return y + np.log(-np.expm1(-2.0 * y)) - _LOG2


def _radial(r, x, log_abs_2rf):
    y = 0.5 * r * np.abs(x)
    log_a = _LOG2 + 2.0 * _log_sinh(y)
    log_b = 2.0 * log_abs_2rf - _LOG2
    log_d = np.logaddexp(log_a, log_b)
    small = log_d < 30.0
    with np.errstate(over="ignore", invalid="ignore"):
        d = np.exp(np.where(small, log_d, 0.0))
        val_small = np.log1p(d + np.sqrt(d * (d + 2.0)))
        log_x = log_d + np.log1p(np.exp(-log_d))
        val_big = log_x + np.log1p(np.sqrt(-np.expm1(-2.0 * log_x)))
    return np.where(small, val_small, val_big) / r


def bj_lambda(X, dY, dZ, r: float):
    """Radial part along driver paths, evaluated without overflow.

    ``I_k = sum_{j<k} exp(-r X_j) (dY_j + i dZ_j)`` is carried as
    ``J_k = exp(r m_k) I_k`` with ``m_k = min_{j<k} X_j``.

    Returns
    -------
    (N, n + 1) float64
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    dY = np.ascontiguousarray(dY, dtype=np.float64)
    dZ = np.ascontiguousarray(dZ, dtype=np.float64)
    N, n1 = X.shape
    out = np.empty((N, n1), dtype=np.float64)
    out[:, 0] = np.abs(X[:, 0])
    jr = np.zeros(N)
    ji = np.zeros(N)
    m = X[:, 0].copy()
    log_r = math.log(r)
    for k in range(n1 - 1):
        xk = X[:, k]
        m_new = np.minimum(m, xk)
        decay = np.exp(r * (m_new - m))
        step = np.exp(-r * (xk - m_new))
        jr = decay * jr + step * dY[:, k]
        ji = decay * ji + step * dZ[:, k]
        m = m_new
        x1 = X[:, k + 1]
        with np.errstate(divide="ignore"):
            lf = log_r + 0.5 * r * x1 + 0.5 * np.log(jr * jr + ji * ji) - r * m
        out[:, k + 1] = _radial(r, x1, lf)
    return out
