"""Markov chains on the highest-weight lattice and on weight/highest-weight pairs.

States are integers (``lam``) for the radial chain and pairs
``(omega, lam)`` for the joint chains, both in units of ``hbar``.
Distributions are plain dicts ``state -> mass``; with exact kernels the
masses are :class:`fractions.Fraction`.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Callable, Hashable

import numpy as np

from . import _accel
from . import rng as _rng

__all__ = [
    "Kernel",
    "JOINT_MOVES",
    "pitman_transform",
    "kernel_radial",
    "kernel_joint_q",
    "kernel_joint_flat",
    "evolve",
    "evolve_history",
    "marginal",
    "simulate",
    "conditional_law",
    "row_sums",
    "radial_rescaled_sample",
]

# order of the four moves (d_omega, d_lam) used by tables and compiled walks
JOINT_MOVES = ((1, 1), (-1, 1), (1, -1), (-1, -1))


@dataclass(frozen=True)
class Kernel:
    """Transition kernel given by a row function.

    Attributes
    ----------
    transitions : callable
        ``state -> list of (next_state, probability)``; zero entries omitted.
    kind : str
        ``"radial"`` (integer states), ``"joint"`` (pairs) or ``"generic"``.
    exact : bool
        Whether probabilities are Fractions.
    flipped : bool
        Joint kernels only: the omega coordinate is negated.
    """

    name: str
    transitions: Callable[[Hashable], list] = field(repr=False)
    kind: str = "generic"
    exact: bool = False
    flipped: bool = False

    def row(self, state) -> list:
        return self.transitions(state)

    def prob(self, state, nxt) -> float:
        for s, p in self.transitions(state):
            if s == nxt:
                return p
        return 0


def pitman_transform(path):
    """``X_n - 2 min_{k <= n} X_k`` along the last axis.

    Raises
    ------
    ValueError
        If a path does not start at 0.
    """
    x = np.asarray(path)
    if x.shape[-1] == 0:
        return x.copy()
    if np.any(x[..., 0] != 0):
        raise ValueError("paths must start at 0")
    return x - 2 * np.minimum.accumulate(x, axis=-1)


def _num(v, exact):
    return Fraction(v) if exact else float(v)


def kernel_radial(exact: bool = False) -> Kernel:
    """``lam -> lam + 1`` w.p. ``(lam + 2) / (2 (lam + 1))``, ``lam -> lam - 1`` w.p. ``lam / (2 (lam + 1))``."""

    def trans(lam):
        lam = int(lam)
        if lam < 0:
            raise ValueError("radial states are nonnegative")
        up = Fraction(lam + 2, 2 * (lam + 1))
        out = [(lam + 1, _num(up, exact))]
        if lam > 0:
            out.append((lam - 1, _num(1 - up, exact)))
        return out

    return Kernel("radial", trans, "radial", exact)


def _check_joint(state):
    om, lam = (int(v) for v in state)
    if lam < 0 or abs(om) > lam or (lam - om) % 2:
        raise ValueError(f"invalid joint state {state}")
    return om, lam


def _q_row(om: int, lam: int, q):
    """The four probabilities of the q-kernel in JOINT_MOVES order (``0**0 == 1``)."""
    d = lam - om
    top = q ** (2 * lam + 2)
    den = 2 * (1 - top)
    return (
        (q ** d - top) / den,
        (1 - q ** (d + 2)) / den,
        (1 - q ** d) / den,
        (q ** (d + 2) - top) / den,
    )


def kernel_joint_q(q, flip_sign: bool = False) -> Kernel:
    """Joint chain with deformation parameter ``q`` in ``[0, 1)``.

    Parameters
    ----------
    q : float or Fraction
        ``q = 0`` is allowed (with ``0**0 = 1``) and gives the crystal chain.
        A Fraction makes the kernel exact.
    flip_sign : bool
        Use ``-omega`` as the state coordinate. With this option ``lam`` is
        the Pitman transform of ``omega`` at ``q = 0``; without it, of ``-omega``.
    """
    exact = isinstance(q, Rational)
    if exact:
        q = Fraction(q)
    else:
        q = float(q)
    if not (0 <= q < 1):
        raise ValueError(f"q must lie in [0, 1), got {q}")

    def trans(state):
        om, lam = _check_joint(state)
        src = -om if flip_sign else om
        out = []
        for (dw, dl), p in zip(JOINT_MOVES, _q_row(src, lam, q)):
            if p != 0:
                out.append((((om - dw) if flip_sign else (om + dw), lam + dl), p))
        return out

    name = f"joint_q(q={q}{', flipped' if flip_sign else ''})"
    return Kernel(name, trans, "joint", exact, flip_sign)


def kernel_joint_flat(exact: bool = False, flip_sign: bool = False) -> Kernel:
    """The ``q -> 1`` limit: ``(lam+om+2, lam-om+2, lam-om, lam+om) / (4 (lam+1))``."""

    def trans(state):
        om, lam = _check_joint(state)
        src = -om if flip_sign else om
        den = 4 * (lam + 1)
        nums = (lam + src + 2, lam - src + 2, lam - src, lam + src)
        out = []
        for (dw, dl), a in zip(JOINT_MOVES, nums):
            if a:
                out.append((((om - dw) if flip_sign else (om + dw), lam + dl), _num(Fraction(a, den), exact)))
        return out

    return Kernel("joint_flat" + (" flipped" if flip_sign else ""), trans, "joint", exact, flip_sign)


def row_sums(k: Kernel, states) -> list:
    return [sum(p for _, p in k.row(s)) for s in states]


def evolve(k: Kernel, d0: dict, n: int) -> dict:
    """Push ``d0`` forward ``n`` steps exactly (sparse)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    d = dict(d0)
    for _ in range(n):
        nxt: dict = defaultdict(int)
        for s, m in d.items():
            if m == 0:
                continue
            for t, p in k.row(s):
                nxt[t] += m * p
        d = dict(nxt)
    return d


def evolve_history(k: Kernel, d0: dict, n: int) -> list[dict]:
    """Distributions at steps ``0..n``."""
    out = [dict(d0)]
    for _ in range(n):
        out.append(evolve(k, out[-1], 1))
    return out


def marginal(d: dict, index: int) -> dict:
    """Marginal of a joint distribution on coordinate ``index`` (0 = omega, 1 = lam)."""
    out: dict = defaultdict(int)
    for s, m in d.items():
        out[s[index]] += m
    return dict(out)


def _radial_table(lam_max: int) -> np.ndarray:
    lam = np.arange(lam_max + 1, dtype=float)
    return (lam + 2) / (2 * (lam + 1))


def _joint_table(k: Kernel, omega0: int, lam0: int, n: int):
    lam_max = lam0 + n
    off = lam_max
    cum = np.ones((lam_max + 1, 2 * lam_max + 1, 4))
    for lam in range(lam_max + 1):
        for om in range(-lam, lam + 1, 2):
            probs = dict(k.row((om, lam)))
            row = [float(probs.get((om + dw, lam + dl), 0.0)) for dw, dl in JOINT_MOVES]
            c = np.cumsum(row)
            # the last possible move absorbs rounding so u < 1 never picks an impossible one
            c[max(j for j, v in enumerate(row) if v > 0):] = 1.0
            cum[lam, om + off] = c
    return cum, off


def simulate(k: Kernel, start, n: int, rng=None, size: int | None = None, keep_path: bool = True,
             threads: int | None = None, chunk: int = _rng.DEFAULT_CHUNK):
    """Sample trajectories of length ``n`` from ``start``.

    Lattice kernels use precomputed tables and the compiled walks; each
    chunk of paths has its own stream, so results do not depend on
    ``threads``.

    Returns
    -------
    ndarray
        Radial: ``(size, n + 1)``; joint: ``(size, n + 1, 2)``. Without
        ``size`` a single trajectory; with ``keep_path=False`` only the
        final states.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    total = 1 if size is None else int(size)
    if k.kind == "radial":
        lam0 = int(start)
        up = _radial_table(lam0 + n)

        def work(g, m):
            return _accel.radial_walk(g.random((m, n)), up, lam0, keep_path)
    elif k.kind == "joint":
        om0, lam0 = _check_joint(start)
        cum, off = _joint_table(k, om0, lam0, n)

        def work(g, m):
            return _accel.joint_walk(g.random((m, n)), cum, om0, lam0, off, keep_path)
    else:
        def work(g, m):
            out = []
            for _ in range(m):
                s = start
                traj = [s]
                for _ in range(n):
                    row = k.row(s)
                    idx = g.choice(len(row), p=[float(p) for _, p in row])
                    s = row[idx][0]
                    traj.append(s)
                out.append(traj if keep_path else traj[-1])
            return np.asarray(out)
    res = np.concatenate(_rng.map_chunks(work, total, rng, tag=21, chunk=chunk, threads=threads))
    return res[0] if size is None else res


def conditional_law(k: Kernel, n: int, lam: int, start=(0, 0)) -> dict:
    """Law of ``omega`` given ``lam_n = lam`` for a joint kernel started at ``start``."""
    d = evolve(k, {tuple(start): Fraction(1) if k.exact else 1.0}, n)
    sel = {om: m for (om, l), m in d.items() if l == lam and m != 0}
    total = sum(sel.values())
    if total == 0:
        raise ValueError(f"lam={lam} has zero probability at step {n}")
    return {om: m / total for om, m in sorted(sel.items())}


def radial_rescaled_sample(hbar: float, t: float, N: int, rng=None, threads: int | None = None,
                           chunk: int = 1024) -> np.ndarray:
    """``hbar * lam_{floor(t / hbar^2)}`` under the radial kernel from 0, ``N`` samples."""
    n = int(np.floor(t / hbar ** 2 + 1e-9))
    lam = simulate(kernel_radial(), 0, n, rng, size=N, keep_path=False, threads=threads, chunk=chunk)
    return hbar * lam.astype(float)
