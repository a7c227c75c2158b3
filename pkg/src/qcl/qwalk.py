"""Quantum random walk built from iterated coproducts.

``M_1(g)`` is the two-dimensional representation; ``M_k(g)`` is obtained
from ``M_{k-1}`` by applying the coproduct to the newest leg, so it acts on
``(C^2)^{(x) k}`` and as the identity on later legs. The state is the
normalized trace.

At each time ``k`` the pair ``(M_k(H), M_k(Lambda))`` commutes, giving joint
spectral projectors ``Pi_k(omega, lam)``. The law of a trajectory
``((omega_1, lam_1), ..., (omega_n, lam_n))`` is the time-ordered
expression ``tau(Pi_1 Pi_2 ... Pi_n)``. Restricted to ``lam`` alone the
projectors commute and this is the trace of the joint projector.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .chains import Kernel, kernel_joint_flat, kernel_joint_q
from .rep import (HighestWeight, Irrep, Params, TensorRep, _raising_coefficients, build_irrep, casimir_matrix,
                  coproduct_matrices, flat_lambda_matrix)

__all__ = [
    "MAX_STEPS",
    "MeasurementFamily",
    "TrajectoryLaw",
    "build_measurements",
    "casimir_family",
    "pad",
    "joint_trajectory_law",
    "lambda_trajectory_law",
    "lr_trajectory_probability",
    "radial_dynamics_r_independence",
    "matching_kernel",
    "qwalk_oracle",
    "omega_marginal",
]

MAX_STEPS = 12


@dataclass(frozen=True, eq=False)
class MeasurementFamily:
    """``M_k`` for ``k = 1..n``; ``levels[k - 1]`` is the representation on ``k`` legs."""

    n: int
    params: Params
    levels: tuple = field(repr=False)

    def level(self, k: int) -> Irrep | TensorRep:
        if not 1 <= k <= self.n:
            raise IndexError(f"level {k} outside 1..{self.n}")
        return self.levels[k - 1]

    def matrix(self, name: str, k: int, padded: bool = True) -> np.ndarray:
        """``M_k`` of ``"K_half"``, ``"E"``, ``"F"`` or ``"H"``."""
        rep = self.level(k)
        m = rep.dense(name) if name != "H" else np.diag(rep.weights)
        return pad(m, self.n - k) if padded else m


def pad(m: np.ndarray, extra_legs: int) -> np.ndarray:
    """``m (x) identity`` on ``extra_legs`` additional two-dimensional legs."""
    if extra_legs == 0:
        return np.asarray(m)
    return np.kron(m, np.eye(2 ** extra_legs))


def build_measurements(n: int, p: Params, cap: int = MAX_STEPS) -> MeasurementFamily:
    """Measurement operators for ``n`` steps on the leg ``V(hbar)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > cap:
        raise ValueError(f"n={n} exceeds the cap {cap} (dense 2^n matrices)")
    leg = build_irrep(HighestWeight(1, p.hbar), p)
    levels = [leg]
    for _ in range(n - 1):
        levels.append(coproduct_matrices(levels[-1], leg, p))
    return MeasurementFamily(n, p, tuple(levels))


def casimir_family(mf: MeasurementFamily, padded: bool = False, check: bool = True) -> list[np.ndarray]:
    """``M_k(C)`` for ``k = 1..n`` (``M_k(Lambda)`` at ``r = 0``).

    Parameters
    ----------
    padded : bool
        Return ``2^n`` matrices instead of native ``2^k`` ones.
    check : bool
        Verify pairwise commutation (relative to the norms, 1e-10).
    """
    p = mf.params
    fn = flat_lambda_matrix if p.flat else casimir_matrix
    mats = [fn(mf.level(k), p) for k in range(1, mf.n + 1)]
    if check:
        full = [pad(m, mf.n - k) for k, m in enumerate(mats, start=1)]
        H = mf.matrix("H", mf.n)
        for i, a in enumerate(full):
            na = np.linalg.norm(a, 2)
            for b in full[i + 1:] + [H]:
                rel = np.linalg.norm(a @ b - b @ a, 2) / max(1.0, na * np.linalg.norm(b, 2))
                if rel > 1e-10:
                    raise RuntimeError(f"measured operators fail to commute (relative {rel:.3g})")
    if padded:
        return [pad(m, mf.n - k) for k, m in enumerate(mats, start=1)]
    return mats


@dataclass(frozen=True, eq=False)
class TrajectoryLaw:
    """Probabilities of trajectories, each a tuple of states.

    States are ``(omega, lam)`` pairs in units of ``hbar`` for joint laws
    and plain ``lam`` integers for radial laws.
    """

    probs: dict
    n: int
    joint: bool = True

    def total(self) -> float:
        return float(sum(self.probs.values()))

    def __len__(self):
        return len(self.probs)

    def __getitem__(self, traj):
        return self.probs.get(tuple(traj), 0.0)

    def lambda_marginal(self) -> "TrajectoryLaw":
        if not self.joint:
            return self
        out: dict = defaultdict(float)
        for traj, pr in self.probs.items():
            out[tuple(s[1] for s in traj)] += pr
        return TrajectoryLaw(dict(out), self.n, joint=False)

    def time_marginal(self, k: int) -> dict:
        """Law of the state at time ``k`` (1-based)."""
        out: dict = defaultdict(float)
        for traj, pr in self.probs.items():
            out[traj[k - 1]] += pr
        return dict(out)

    def prefix_law(self) -> dict:
        """Probabilities of all prefixes (including the empty one)."""
        out: dict = defaultdict(float)
        for traj, pr in self.probs.items():
            for k in range(self.n + 1):
                out[traj[:k]] += pr
        return dict(out)

    def markov_deviation(self, kernel: Kernel, start=(0, 0), min_prefix: float = 0.0) -> dict:
        """Compare the law with a Markov chain run by ``kernel`` from ``start``.

        Returns
        -------
        dict
            ``joint``: max over prefixes and next states of
            ``|P(prefix, s') - P(prefix) K(s, s')|``;
            ``conditional``: max of ``|P(s' | prefix) - K(s, s')|`` over
            prefixes with probability at least ``min_prefix``;
            ``count``: number of transitions compared.
        """
        pref = self.prefix_law()
        children: dict = defaultdict(dict)
        for pre, pr in pref.items():
            if pre:
                children[pre[:-1]][pre[-1]] = pr
        joint_dev = cond_dev = 0.0
        count = 0
        for pre, pr in pref.items():
            if len(pre) == self.n:
                continue
            s = pre[-1] if pre else start
            row = dict(kernel.row(s))
            kids = children.get(pre, {})
            for t in set(row) | set(kids):
                kp = float(row.get(t, 0.0))
                got = kids.get(t, 0.0)
                joint_dev = max(joint_dev, abs(got - pr * kp))
                if pr >= min_prefix and pr > 0:
                    cond_dev = max(cond_dev, abs(got / pr - kp))
                count += 1
        return dict(joint=joint_dev, conditional=cond_dev, count=count)

    def rows(self):
        """``(trajectory string, probability)`` pairs in sorted order."""
        for traj in sorted(self.probs):
            yield " ".join(f"{s[0]}:{s[1]}" if self.joint else str(s) for s in traj), self.probs[traj]


def _ef_value(lam: int, w: int, p: Params, cache: dict) -> float:
    """Eigenvalue of ``EF`` on the weight-``w`` vector of the irrep ``lam`` (units of ``hbar``)."""
    key = (lam, w)
    if key not in cache:
        i = (w + lam) // 2
        cache[key] = float(_raising_coefficients(lam, p)[i - 1] ** 2) if i > 0 else 0.0
    return cache[key]


def _embed(U: np.ndarray, b: int) -> np.ndarray:
    """``U (x) e_b`` with the new leg as the fastest index."""
    out = np.zeros((U.shape[0], 2, U.shape[1]))
    out[:, b, :] = U
    return out.reshape(2 * U.shape[0], U.shape[1])


def _refine(mf: MeasurementFamily, tol: float = 1e-8) -> list[dict]:
    """Joint eigenspaces ``(omega, lam) -> orthonormal columns`` for every level.

    Level ``k`` spaces are found inside ``(level k - 1 space) (x) C^2``,
    where only ``lam + 1`` and ``lam - 1`` can occur. The split uses the
    Gram matrix of ``F`` on that small space, whose eigenvalues are the
    ``EF`` values of the two candidate irreps. This stays accurate when the
    Casimir spectrum spans many orders of magnitude.
    """
    p = mf.params
    cache: dict = {}
    levels = [{(-1, 1): np.array([[1.0], [0.0]]), (1, 1): np.array([[0.0], [1.0]])}]
    for k in range(2, mf.n + 1):
        F = mf.level(k).F
        prev = levels[-1]
        parents = sorted({lam for _, lam in prev})
        cur: dict = {}
        for lam in parents:
            for w in range(-lam - 1, lam + 2, 2):
                cols = []
                if (w - 1, lam) in prev:
                    cols.append(_embed(prev[(w - 1, lam)], 1))
                if (w + 1, lam) in prev:
                    cols.append(_embed(prev[(w + 1, lam)], 0))
                W = np.hstack(cols)
                G = np.asarray(F @ W)
                vals, vecs = np.linalg.eigh(G.T @ G)
                cands = [l for l in (lam + 1, lam - 1) if l >= abs(w)]
                pred = {l: _ef_value(l, w, p, cache) for l in cands}
                scale = max(1.0, *pred.values())
                assign = []
                for v in vals:
                    l = min(cands, key=lambda c: abs(v - pred[c]))
                    if abs(v - pred[l]) > tol * scale:
                        raise RuntimeError(
                            f"level {k}, weight {w}, parent {lam}: eigenvalue {v:.6g} matches no "
                            f"candidate {pred} (tolerance {tol:g} relative)")
                    assign.append(l)
                assign = np.asarray(assign)
                for l in cands:
                    sel = assign == l
                    if sel.any():
                        cur.setdefault((w, l), []).append(W @ vecs[:, sel])
        levels.append({s: np.hstack(v) for s, v in cur.items()})
    return levels


def _projectors(mf: MeasurementFamily, joint: bool):
    """Per level: dict state -> orthonormal basis of the joint eigenspace."""
    out = []
    for level in _refine(mf):
        if joint:
            out.append(level)
            continue
        merged: dict = {}
        for (w, lam), V in sorted(level.items()):
            merged.setdefault(lam, []).append(V)
        out.append({lam: np.hstack(v) for lam, v in merged.items()})
    return out


def _adjacent(s, t, joint):
    if joint:
        return abs(t[0] - s[0]) == 1 and abs(t[1] - s[1]) == 1
    return abs(t - s) == 1


def _time_ordered_law(mf: MeasurementFamily, joint: bool) -> TrajectoryLaw:
    proj = _projectors(mf, joint)
    n = mf.n
    probs: dict = {}
    # transfer tensors between consecutive levels: T[r, b, s] = sum_c V_k[c, r] V_{k+1}[(c, b), s]
    transfer: dict = {}

    def get_transfer(k, s, t):
        key = (k, s, t)
        if key not in transfer:
            Vk = proj[k][s]
            Vn = proj[k + 1][t]
            transfer[key] = np.einsum("cr,cbs->rbs", Vk, Vn.reshape(Vk.shape[0], 2, -1))
        return transfer[key]

    def rec(k, traj, S):
        # S = (Pi_1 ... Pi_{k-1} (x) I) V_k for the current prefix, shape (2^{k+1}, rank)
        s = traj[-1]
        if k == n - 1:
            Vn = proj[k][s]
            probs[tuple(traj)] = float(np.sum(Vn * S)) / 2 ** n
            return
        for t in proj[k + 1]:
            if not _adjacent(s, t, joint):
                continue
            T = get_transfer(k, s, t)
            S2 = np.einsum("ar,rbs->abs", S, T).reshape(-1, T.shape[2])
            rec(k + 1, traj + [t], S2)

    for s, V in proj[0].items():
        rec(0, [s], V)
    return TrajectoryLaw(probs, n, joint)


def joint_trajectory_law(mf: MeasurementFamily) -> TrajectoryLaw:
    """Law of ``((omega_k, lam_k))_{k <= n}`` under the time-ordered product of projectors."""
    return _time_ordered_law(mf, joint=True)


def lambda_trajectory_law(mf: MeasurementFamily) -> TrajectoryLaw:
    """Law of ``(lam_k)_{k <= n}``: the normalized trace of the joint spectral projector."""
    return _time_ordered_law(mf, joint=False)


def lr_trajectory_probability(seq: Sequence[int]) -> Fraction:
    """``(lam_n + 1) / 2^n`` for an admissible sequence ``lam_1 = 1, lam_{k+1} = lam_k +- 1 >= 0``."""
    seq = [int(v) for v in seq]
    if not seq or seq[0] != 1:
        raise ValueError("sequences start at lam_1 = 1")
    for a, b in zip(seq, seq[1:]):
        if abs(a - b) != 1 or b < 0:
            raise ValueError(f"inadmissible step {a} -> {b}")
    return Fraction(seq[-1] + 1, 2 ** len(seq))


def radial_dynamics_r_independence(n: int, p1: Params, p2: Params) -> float:
    """Largest difference between the ``lam``-trajectory laws at two curvatures (same ``hbar``)."""
    if not math.isclose(p1.hbar, p2.hbar, rel_tol=1e-12):
        raise ValueError("both parameter sets must share hbar")
    a = lambda_trajectory_law(build_measurements(n, p1)).probs
    b = lambda_trajectory_law(build_measurements(n, p2)).probs
    return float(max(abs(a.get(t, 0.0) - b.get(t, 0.0)) for t in set(a) | set(b)))


def matching_kernel(p: Params) -> Kernel:
    """Classical kernel reproduced by the walk.

    With the coproduct ``E (x) A + A^{-1} (x) E`` the walk follows the
    ``q``-kernel at ``q = exp(-r hbar)`` with the weight coordinate negated;
    at ``r = 0`` the flat kernel.
    """
    if p.flat:
        return kernel_joint_flat(flip_sign=True)
    return kernel_joint_q(math.exp(-p.r * p.hbar), flip_sign=True)


def qwalk_oracle(n: int, p: Params, min_prefix: float = 1e-6) -> dict:
    """Check the walk against :func:`matching_kernel` and the radial formula.

    Returns
    -------
    dict
        ``markov_joint``, ``markov_conditional`` (see
        :meth:`TrajectoryLaw.markov_deviation`), ``total`` (sum of the
        law), ``radial_formula`` (max deviation of the ``lam`` law from
        ``(lam_n + 1) / 2^n``) and ``law``.
    """
    mf = build_measurements(n, p)
    law = joint_trajectory_law(mf)
    dev = law.markov_deviation(matching_kernel(p), start=(0, 0), min_prefix=min_prefix)
    lam_law = lambda_trajectory_law(mf)
    rad = max(abs(pr - float(lr_trajectory_probability(t))) for t, pr in lam_law.probs.items())
    marg = law.lambda_marginal().probs
    rad = max(rad, max(abs(marg.get(t, 0.0) - pr) for t, pr in lam_law.probs.items()))
    return dict(markov_joint=dev["joint"], markov_conditional=dev["conditional"], transitions=dev["count"],
                total=law.total(), radial_formula=rad, law=law)


def omega_marginal(n: int) -> dict[int, Fraction]:
    """Law of the weight after ``n`` steps: a recentred Binomial(n, 1/2)."""
    return {2 * j - n: Fraction(math.comb(n, j), 2 ** n) for j in range(n + 1)}
