"""Crystal bases of sl2 modules and the tensor-product rule.

Weights are kept as integers in units of ``hbar`` so the combinatorics is
exact; real values appear only at the boundary.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .rep import HighestWeight

__all__ = [
    "CrystalElement",
    "CrystalTensorElement",
    "crystal_basis",
    "tensor_rule",
    "tensor_rule_steps",
    "decompose_tensor",
    "crystal_expectation",
    "trop_log_sum",
]


@dataclass(frozen=True)
class CrystalElement:
    """Element of ``B(Lambda)`` with weight ``wt_steps * hbar``."""

    component_hw: HighestWeight
    wt_steps: int

    def __post_init__(self):
        lam = self.component_hw.steps
        if abs(self.wt_steps) > lam or (lam - self.wt_steps) % 2:
            raise ValueError(f"weight {self.wt_steps} is not in B({lam})")

    @property
    def wt(self) -> float:
        return self.wt_steps * self.component_hw.hbar

    @property
    def hbar(self) -> float:
        return self.component_hw.hbar


@dataclass(frozen=True)
class CrystalTensorElement:
    b1: CrystalElement
    b2: CrystalElement

    def hw_wt(self) -> tuple[float, float]:
        return tensor_rule(self.b1, self.b2)


def crystal_basis(hw: HighestWeight) -> list[CrystalElement]:
    """Elements of ``B(hw)`` by increasing weight."""
    lam = hw.steps
    return [CrystalElement(hw, k) for k in range(-lam, lam + 1, 2)]


def tensor_rule_steps(lam1: int, wt1: int, lam2: int, wt2: int) -> tuple[int, int]:
    """Integer version of :func:`tensor_rule`. Works elementwise on arrays."""
    return np.maximum(lam1 + wt2, lam2 - wt1), wt1 + wt2


def tensor_rule(b1: CrystalElement, b2: CrystalElement) -> tuple[float, float]:
    """Highest weight and weight of ``b1 (x) b2``.

    ``hw = max(Lambda1 + wt(b2), -wt(b1) + Lambda2)``, ``wt = wt(b1) + wt(b2)``.
    """
    if not math.isclose(b1.hbar, b2.hbar, rel_tol=1e-12):
        raise ValueError("crystal elements use different hbar")
    hw, wt = tensor_rule_steps(b1.component_hw.steps, b1.wt_steps, b2.component_hw.steps, b2.wt_steps)
    return float(hw) * b1.hbar, float(wt) * b1.hbar


def _pair_grid(lam1: int, lam2: int):
    w1 = np.arange(-lam1, lam1 + 1, 2)
    w2 = np.arange(-lam2, lam2 + 1, 2)
    W1, W2 = np.meshgrid(w1, w2, indexing="ij")
    return tensor_rule_steps(lam1, W1, lam2, W2)


def decompose_tensor(hw1: HighestWeight, hw2: HighestWeight) -> list[HighestWeight]:
    """Irreducible components of ``B(hw1) (x) B(hw2)`` as a sorted multiset (largest first)."""
    if not math.isclose(hw1.hbar, hw2.hbar, rel_tol=1e-12):
        raise ValueError("highest weights use different hbar")
    hw, _ = _pair_grid(hw1.steps, hw2.steps)
    out = []
    for lam, count in sorted(Counter(hw.ravel().tolist()).items(), reverse=True):
        mult, rem = divmod(count, lam + 1)
        if rem:
            raise RuntimeError(f"level set of hw={lam} has {count} elements, not a multiple of {lam + 1}")
        out.extend([HighestWeight(lam, hw1.hbar)] * mult)
    if sum(h.dim for h in out) != hw1.dim * hw2.dim:
        raise RuntimeError("tensor decomposition does not preserve dimension")
    return out


def crystal_expectation(hw1: HighestWeight, hw2: HighestWeight, phi, psi) -> float:
    """Average of ``phi(hw) psi(wt)`` over ``B(hw1) (x) B(hw2)``.

    Parameters
    ----------
    phi, psi : sequence of float
        Polynomial coefficients, constant term first.
    """
    h = hw1.hbar
    hw, wt = _pair_grid(hw1.steps, hw2.steps)
    P = np.polynomial.polynomial
    vals = P.polyval(hw * h, phi) * P.polyval(wt * h, psi)
    return float(vals.mean())


def trop_log_sum(a, b, r: float):
    """``(1/r) log(exp(r a) + exp(r b))`` evaluated without overflow."""
    if r <= 0:
        raise ValueError("r must be > 0")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.maximum(a, b) + np.log1p(np.exp(-r * np.abs(a - b))) / r
    return float(out) if out.ndim == 0 else out
