"""Matrix representations of the two-parameter quantum sl2.

The algebra is generated by ``E``, ``F`` and a diagonal Cartan element ``H``
with ``K = exp(-r H)``. Relations::

    [H, E] = 2 hbar E,   [H, F] = -2 hbar F,
    E F - F E = hbar (exp(r H) - exp(-r H)) / (2 r)      (hbar H when r = 0)

Irreducible modules are labelled by a highest weight that is a nonnegative
integer multiple of ``hbar``. Basis vectors are ordered by weight: index
``i`` carries weight ``hbar * (-lam + 2 i)`` where ``lam = Lambda / hbar``.

All matrices are real in this basis and the dagger (``E^dagger = F``,
``K^dagger = K``) is the transpose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Params",
    "HighestWeight",
    "Irrep",
    "TensorRep",
    "build_irrep",
    "coproduct_matrices",
    "tensor_power",
    "verify_relations",
    "casimir_matrix",
    "casimir_constant",
    "casimir_commutator_residual",
    "lambda_from_casimir",
    "flat_lambda_matrix",
    "lambda_matrix",
    "character_ratio",
    "standard_irrep",
    "map_from_standard_presentation",
    "casimir_blocks",
    "highest_weight_multiset",
    "normalized_trace_functional",
]


class RepresentationError(ValueError):
    """Raised for invalid representation data or parameters."""


@dataclass(frozen=True)
class Params:
    """Curvature ``r >= 0`` and Planck constant ``hbar > 0``."""

    r: float
    hbar: float

    def __post_init__(self):
        r, hbar = float(self.r), float(self.hbar)
        if not math.isfinite(r) or r < 0:
            raise RepresentationError(f"r must be finite and >= 0, got {self.r}")
        if not math.isfinite(hbar) or hbar <= 0:
            raise RepresentationError(f"hbar must be finite and > 0, got {self.hbar}")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "hbar", hbar)

    @property
    def q(self) -> float:
        return math.exp(-self.r)

    @property
    def flat(self) -> bool:
        return self.r == 0.0


@dataclass(frozen=True)
class HighestWeight:
    """Highest weight ``steps * hbar`` with ``steps`` a nonnegative integer."""

    steps: int
    hbar: float

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 0:
            raise RepresentationError(f"steps must be a nonnegative integer, got {self.steps}")
        if not self.hbar > 0:
            raise RepresentationError(f"hbar must be > 0, got {self.hbar}")
        object.__setattr__(self, "steps", int(self.steps))
        object.__setattr__(self, "hbar", float(self.hbar))

    @classmethod
    def from_value(cls, value: float, hbar: float, exact: bool = True) -> "HighestWeight":
        """Build from a real weight.

        With ``exact=True`` the value must be an integer multiple of ``hbar``
        (relative tolerance 1e-9); otherwise it is floored onto the lattice.
        """
        if hbar <= 0:
            raise RepresentationError(f"hbar must be > 0, got {hbar}")
        if value < 0:
            raise RepresentationError(f"highest weight must be >= 0, got {value}")
        ratio = value / hbar
        nearest = round(ratio)
        if abs(ratio - nearest) <= 1e-9 * max(1.0, abs(ratio)):
            return cls(int(nearest), hbar)
        if exact:
            raise RepresentationError(
                f"highest weight {value} is not an integer multiple of hbar={hbar}")
        return cls(int(math.floor(ratio)), hbar)

    @property
    def value(self) -> float:
        return self.steps * self.hbar

    @property
    def dim(self) -> int:
        return self.steps + 1


def _sinhc_scaled(x, r):
    """``2 sinh(r x / 2) / r``, equal to ``x`` at ``r = 0``."""
    x = np.asarray(x, dtype=float)
    if r == 0:
        return x
    return 2.0 * np.sinh(0.5 * r * x) / r


def _raising_coefficients(lam: int, p: Params) -> np.ndarray:
    """Entries ``E[i+1, i]`` of the irrep with highest weight ``lam * hbar``."""
    h = p.hbar
    big = lam * h
    k = -lam + 2 * np.arange(lam)
    a = big + h + h * (k + 1)
    b = big + h - h * (k + 1)
    sq = h * _sinhc_scaled(a, p.r) * _sinhc_scaled(b, p.r) / (2.0 * _sinhc_scaled(2 * h, p.r))
    return np.sqrt(np.maximum(sq, 0.0))


class _RepBase:
    """Shared helpers for irreducible and tensor representations."""

    params: Params
    weights: np.ndarray
    K_half: object
    E: object
    F: object

    @property
    def dim(self) -> int:
        return int(self.weights.shape[0])

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.E)

    @property
    def H(self):
        return _diag_like(self.weights, self.is_sparse)

    def cartan_exp(self, t: float):
        """Represented ``exp(t r H)`` as a diagonal matrix."""
        return _diag_like(np.exp(t * self.params.r * self.weights), self.is_sparse)

    def dense(self, name: str) -> np.ndarray:
        m = getattr(self, name)
        return m.toarray() if sp.issparse(m) else np.asarray(m)


def _diag_like(values, sparse):
    return sp.diags(values, format="csr") if sparse else np.diag(values)


@dataclass(frozen=True, eq=False)
class Irrep(_RepBase):
    """Irreducible module of highest weight ``hw``.

    ``K_half`` is the represented ``exp(-r H / 2)``.
    """

    hw: HighestWeight
    params: Params
    K_half: np.ndarray = field(repr=False)
    E: np.ndarray = field(repr=False)
    F: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class TensorRep(_RepBase):
    """Tensor product built by the coproduct, factors listed left to right."""

    factors: tuple
    params: Params
    K_half: object = field(repr=False)
    E: object = field(repr=False)
    F: object = field(repr=False)
    weights: np.ndarray = field(repr=False)


def build_irrep(hw: HighestWeight, p: Params) -> Irrep:
    """Irreducible representation with highest weight ``hw``.

    Parameters
    ----------
    hw : HighestWeight
        Must share ``hbar`` with ``p``.
    p : Params
        ``r = 0`` gives the flat (undeformed) module.

    Returns
    -------
    Irrep
        ``E`` raises the weight by ``2 hbar``; ``F`` is its transpose.
    """
    if not isinstance(hw, HighestWeight):
        hw = HighestWeight.from_value(float(hw), p.hbar)
    if not math.isclose(hw.hbar, p.hbar, rel_tol=1e-12):
        raise RepresentationError(f"highest weight hbar={hw.hbar} differs from params hbar={p.hbar}")
    lam = hw.steps
    weights = p.hbar * (-lam + 2 * np.arange(lam + 1, dtype=float))
    E = np.zeros((lam + 1, lam + 1))
    if lam:
        idx = np.arange(lam)
        E[idx + 1, idx] = _raising_coefficients(lam, p)
    K_half = np.diag(np.exp(-0.5 * p.r * weights))
    for m in (E, K_half):
        m.setflags(write=False)
    F = E.T.copy()
    F.setflags(write=False)
    weights.setflags(write=False)
    return Irrep(hw=hw, params=p, K_half=K_half, E=E, F=F, weights=weights)


def coproduct_matrices(a: Irrep | TensorRep, b: Irrep | TensorRep, p: Params | None = None,
                       sparse: bool | None = None) -> TensorRep:
    """Tensor product ``a (x) b`` through the coproduct.

    ``E -> E (x) A + A^{-1} (x) E`` with ``A = exp(r H / 2)``, the same for
    ``F``, and ``A`` group-like. At ``r = 0`` this is the primitive coproduct.

    Parameters
    ----------
    sparse : bool, optional
        Store CSR matrices. Defaults to the storage of ``a``.
    """
    if p is None:
        p = a.params
    if a.params != p or b.params != p:
        raise RepresentationError("coproduct factors were built with different parameters")
    if sparse is None:
        sparse = a.is_sparse or b.is_sparse
    r = p.r
    A_a = np.exp(0.5 * r * a.weights)
    A_b = np.exp(0.5 * r * b.weights)
    if sparse:
        Ea, Eb = sp.csr_matrix(a.E), sp.csr_matrix(b.E)
        Fa, Fb = sp.csr_matrix(a.F), sp.csr_matrix(b.F)
        Da, Db = sp.diags(1.0 / A_a), sp.diags(A_b)
        E = (sp.kron(Ea, Db) + sp.kron(Da, Eb)).tocsr()
        F = (sp.kron(Fa, Db) + sp.kron(Da, Fb)).tocsr()
        K_half = sp.kron(sp.csr_matrix(a.K_half), sp.csr_matrix(b.K_half)).tocsr()
    else:
        Ea, Eb, Fa, Fb = (np.asarray(_todense(m)) for m in (a.E, b.E, a.F, b.F))
        Da, Db = np.diag(1.0 / A_a), np.diag(A_b)
        E = np.kron(Ea, Db) + np.kron(Da, Eb)
        F = np.kron(Fa, Db) + np.kron(Da, Fb)
        K_half = np.kron(_todense(a.K_half), _todense(b.K_half))
    weights = np.add.outer(a.weights, b.weights).ravel()
    weights.setflags(write=False)
    factors = _factors(a) + _factors(b)
    return TensorRep(factors=factors, params=p, K_half=K_half, E=E, F=F, weights=weights)


def _factors(rep) -> tuple:
    return rep.factors if isinstance(rep, TensorRep) else (rep,)


def _todense(m):
    return m.toarray() if sp.issparse(m) else m


def tensor_power(irrep: Irrep, n: int, sparse: bool = False) -> Irrep | TensorRep:
    """``irrep`` tensored with itself ``n`` times, new legs appended on the right."""
    if n < 1:
        raise RepresentationError("tensor power needs n >= 1")
    rep = irrep
    for _ in range(n - 1):
        rep = coproduct_matrices(rep, irrep, sparse=sparse)
    return rep


def _opnorm(m) -> float:
    """Spectral norm for moderate dense matrices, Frobenius (an upper bound) otherwise."""
    if sp.issparse(m):
        return float(sp.linalg.norm(m))
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    if m.shape[0] <= 1100:
        return float(np.linalg.norm(m, 2))
    return float(np.linalg.norm(m))


def _rel(residual, *scales) -> float:
    return _opnorm(residual) / max(1.0, *(_opnorm(s) for s in scales))


def verify_relations(rep: Irrep | TensorRep, p: Params | None = None) -> float:
    """Largest relation residual, relative to the size of the terms involved.

    Each residual norm is divided by ``max(1, norms of the terms)``, so the
    value is an absolute residual for matrices of order one and a relative
    one when ``exp(r H)`` is large.
    """
    p = p or rep.params
    w = rep.weights
    E, F = rep.E, rep.F
    h = p.hbar
    if rep.is_sparse:
        Hd = sp.diags(w)
        hE = Hd @ E - E @ Hd
        hF = Hd @ F - F @ Hd
    else:
        hE = w[:, None] * E - E * w[None, :]
        hF = w[:, None] * F - F * w[None, :]
    res = [_rel(hE - 2 * h * E, hE, E), _rel(hF + 2 * h * F, hF, F)]
    EF, FE = E @ F, F @ E
    if p.flat:
        rhs = _diag_like(h * w, rep.is_sparse)
    else:
        rhs = _diag_like(h * np.sinh(p.r * w) / p.r, rep.is_sparse)
    res.append(_rel(EF - FE - rhs, EF, FE, rhs))
    return float(max(res))


def casimir_constant(hw: HighestWeight | float, p: Params) -> float:
    """Scalar by which the Casimir acts on the irrep of highest weight ``hw``."""
    if p.flat:
        raise RepresentationError("the Casimir is defined for r > 0; use flat_lambda_matrix at r = 0")
    value = hw.value if isinstance(hw, HighestWeight) else float(hw)
    x = p.r * p.hbar
    return float(x / math.sinh(x) * math.cosh(p.r * (value + p.hbar)))


def casimir_matrix(rep: Irrep | TensorRep, p: Params | None = None) -> np.ndarray:
    """Dense Casimir ``(4 r^2 E F + (e^{r hbar} K + e^{-r hbar} K^{-1}) r hbar / sinh(r hbar)) / 2``."""
    p = p or rep.params
    if p.flat:
        raise RepresentationError("the Casimir is defined for r > 0; use flat_lambda_matrix at r = 0")
    r, h = p.r, p.hbar
    EF = _todense(rep.E @ rep.F)
    diag = (np.exp(-r * (rep.weights - h)) + np.exp(r * (rep.weights - h))) * (r * h / math.sinh(r * h))
    C = 2.0 * r * r * np.asarray(EF)
    C[np.diag_indices_from(C)] += 0.5 * diag
    return C


def casimir_commutator_residual(rep: Irrep | TensorRep, p: Params | None = None) -> float:
    """Largest ``||[C, g]|| / max(1, ||C|| ||g||)`` over ``g`` in ``E, F, K_half``."""
    p = p or rep.params
    C = casimir_matrix(rep, p)
    nC = _opnorm(C)
    out = 0.0
    for name in ("E", "F", "K_half"):
        g = rep.dense(name)
        comm = C @ g - g @ C
        out = max(out, _opnorm(comm) / max(1.0, nC * _opnorm(g)))
    return out


def lambda_from_casimir(c, p: Params, tol: float = 1e-9):
    """Invert :func:`casimir_constant`.

    Parameters
    ----------
    c : float or array_like
        Casimir value(s).
    tol : float
        Slack, relative to ``hbar``, before a slightly negative result is
        reported as below the lattice.

    Raises
    ------
    ValueError
        If the arccosh argument is below 1 or the result is below 0.
    """
    if p.flat:
        raise RepresentationError("lambda_from_casimir needs r > 0")
    x = p.r * p.hbar
    arg = np.asarray(c, dtype=float) * (math.sinh(x) / x)
    if np.any(~np.isfinite(arg)) or np.any(arg < 1.0 - 1e-14):
        raise ValueError("Casimir value outside the domain of arccosh")
    lam = np.arccosh(np.maximum(arg, 1.0)) / p.r - p.hbar
    if np.any(lam < -tol * p.hbar):
        raise ValueError("Casimir value corresponds to a weight below the lattice")
    lam = np.maximum(lam, 0.0)
    return float(lam) if lam.ndim == 0 else lam


def _hermitian_apply(M: np.ndarray, fn) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if not np.allclose(M, M.T, rtol=0, atol=1e-9 * max(1.0, np.abs(M).max(initial=0.0))):
        raise RuntimeError("operator is not symmetric; functional calculus undefined")
    vals, vecs = np.linalg.eigh(0.5 * (M + M.T))
    return (vecs * fn(vals)) @ vecs.T


def flat_lambda_matrix(rep: Irrep | TensorRep, p: Params | None = None) -> np.ndarray:
    """``sqrt(2EF + 2FE + H^2 + hbar^2) - hbar`` for a module built at ``r = 0``."""
    p = p or rep.params
    if not p.flat:
        raise RepresentationError("flat_lambda_matrix expects a module built at r = 0")
    E, F = rep.dense("E"), rep.dense("F")
    inner = 2 * E @ F + 2 * F @ E
    inner[np.diag_indices_from(inner)] += rep.weights ** 2 + p.hbar ** 2
    out = _hermitian_apply(inner, lambda v: np.sqrt(np.maximum(v, 0.0)))
    out[np.diag_indices_from(out)] -= p.hbar
    return out


def lambda_matrix(rep: Irrep | TensorRep, p: Params | None = None) -> np.ndarray:
    """Highest-weight operator: spectral inverse of the Casimir, or the flat formula at ``r = 0``."""
    p = p or rep.params
    if p.flat:
        return flat_lambda_matrix(rep, p)
    C = casimir_matrix(rep, p)
    x = p.r * p.hbar

    def inv(vals):
        arg = np.maximum(vals * (math.sinh(x) / x), 1.0)
        return np.arccosh(arg) / p.r - p.hbar

    return _hermitian_apply(C, inv)


def casimir_blocks(rep: Irrep | TensorRep, p: Params | None = None, snap_tol: float = 1e-8):
    """Spectral decomposition of the highest-weight operator inside each weight space.

    The Casimir commutes with ``H``, and ``H`` is diagonal, so each weight
    space is invariant. Eigenvalues are mapped to highest weights and snapped
    to the lattice ``hbar * N``.

    Returns
    -------
    list of tuple
        ``(weight_steps, lambda_steps, vectors)`` where ``vectors`` has
        orthonormal columns spanning the joint eigenspace inside the full
        space (rows index the basis of ``rep``).

    Raises
    ------
    RuntimeError
        If an eigenvalue is farther than ``snap_tol * hbar`` from the lattice
        or the parity does not match the weight.
    """
    p = p or rep.params
    h = p.hbar
    steps = np.rint(rep.weights / h).astype(np.int64)
    EF = rep.E @ rep.F
    if p.flat:
        FE = rep.F @ rep.E
    out = []
    for w in np.unique(steps):
        idx = np.flatnonzero(steps == w)
        if p.flat:
            blk = 2 * _todense(EF[np.ix_(idx, idx)] + FE[np.ix_(idx, idx)])
            blk = np.asarray(blk, dtype=float)
            blk[np.diag_indices_from(blk)] += (w * h) ** 2 + h ** 2
            vals, vecs = np.linalg.eigh(0.5 * (blk + blk.T))
            lam_real = np.sqrt(np.maximum(vals, 0.0)) - h
        else:
            blk = 2.0 * p.r ** 2 * np.asarray(_todense(EF[np.ix_(idx, idx)]), dtype=float)
            x = p.r * h
            shift = 0.5 * (x / math.sinh(x)) * 2 * math.cosh(p.r * (w * h - h))
            vals, vecs = np.linalg.eigh(0.5 * (blk + blk.T))
            c = vals + shift
            arg = np.maximum(c * (math.sinh(x) / x), 1.0)
            lam_real = np.arccosh(arg) / p.r - h
        lam_steps = np.rint(lam_real / h).astype(np.int64)
        err = np.abs(lam_real / h - lam_steps)
        if err.size and err.max() > snap_tol:
            raise RuntimeError(
                f"highest-weight eigenvalue off the lattice by {err.max():.3g} hbar in weight block {w}")
        if np.any((lam_steps - w) % 2) or np.any(lam_steps < abs(w)):
            raise RuntimeError(f"inconsistent highest weight in weight block {w}")
        for lam in np.unique(lam_steps):
            cols = vecs[:, lam_steps == lam]
            full = np.zeros((rep.dim, cols.shape[1]))
            full[idx] = cols
            out.append((int(w), int(lam), full))
    return out


def highest_weight_multiset(rep: Irrep | TensorRep, p: Params | None = None) -> dict[int, int]:
    """Multiplicity of each irreducible component, keyed by ``Lambda / hbar``.

    Read off from the zero (or ``hbar``) weight space, which meets each
    component of matching parity exactly once, so no eigenvector data are needed.
    """
    p = p or rep.params
    counts: dict[int, int] = {}
    for w, lam, vecs in casimir_blocks(rep, p):
        if w in (0, 1):
            counts[lam] = counts.get(lam, 0) + vecs.shape[1]
    return dict(sorted(counts.items(), reverse=True))


def character_ratio(rep: Irrep | TensorRep, monomial: Sequence[int], p: Params | None = None) -> float:
    """``Tr(exp(r H) E^a F^b H^c) / Tr(exp(r H))``.

    Parameters
    ----------
    monomial : (a, b, c)
        Nonnegative exponents.
    """
    p = p or rep.params
    if p.flat:
        raise RepresentationError("character_ratio needs r > 0")
    a, b, c = (int(v) for v in monomial)
    if min(a, b, c) < 0:
        raise RepresentationError("monomial exponents must be nonnegative")
    w = rep.weights
    logw = p.r * w
    dens = np.exp(logw - logw.max())
    if a != b:
        # E^a F^b shifts the weight by 2 hbar (a - b): its diagonal vanishes
        return 0.0
    if a == 0:
        d = np.ones_like(w)
    else:
        M = rep.E
        for _ in range(a - 1):
            M = M @ rep.E
        for _ in range(b):
            M = M @ rep.F
        d = np.asarray(M.diagonal()).ravel()
    return float(np.sum(dens * d * w ** c) / np.sum(dens))


def normalized_trace_functional(rep: Irrep | TensorRep, phi, psi, p: Params | None = None) -> float:
    """``Tr(phi(Lambda) psi(H)) / dim`` with polynomial ``phi, psi`` (coefficients, low degree first)."""
    p = p or rep.params
    total = 0.0
    for w, lam, vecs in casimir_blocks(rep, p):
        total += vecs.shape[1] * np.polynomial.polynomial.polyval(lam * p.hbar, phi) \
            * np.polynomial.polynomial.polyval(w * p.hbar, psi)
    return float(total / rep.dim)


def standard_irrep(lam: int, Q: float):
    """Irrep of the one-parameter quantum sl2 with parameter ``Q``.

    Uses the q-integer form ``E e_k = sqrt([(lam-k)/2]_Q [(lam+k)/2 + 1]_Q) e_{k+2}``
    and ``K e_k = Q^k e_k``, basis ordered by ``k = -lam, ..., lam``.

    Returns
    -------
    K, E, F : ndarray
    """
    if lam < 0 or int(lam) != lam:
        raise RepresentationError("lam must be a nonnegative integer")
    if not (0 < Q and Q != 1):
        raise RepresentationError("Q must be positive and different from 1")
    lam = int(lam)

    def qint(m):
        return (Q ** m - Q ** (-m)) / (Q - 1.0 / Q)

    ks = -lam + 2 * np.arange(lam + 1)
    E = np.zeros((lam + 1, lam + 1))
    for i, k in enumerate(ks[:-1]):
        E[i + 1, i] = math.sqrt(qint((lam - k) // 2) * qint((lam + k) // 2 + 1))
    K = np.diag(Q ** ks.astype(float))
    return K, E, E.T.copy()


def map_from_standard_presentation(stdK, stdE, stdF, p: Params, tol: float = 1e-10) -> Irrep:
    """Carry a module of the one-parameter algebra at ``Q = exp(-r hbar)`` to the two-parameter one.

    ``H = -log(K) / r``, ``E`` and ``F`` are divided by
    ``sqrt(2 r / (hbar (exp(r hbar) - exp(-r hbar))))``.

    Raises
    ------
    RepresentationError
        If ``stdK`` is not diagonal positive or the input violates the
        one-parameter relations beyond ``tol`` (relative).
    """
    if p.flat:
        raise RepresentationError("the presentation map needs r > 0")
    K = np.asarray(stdK, dtype=float)
    E = np.asarray(stdE, dtype=float)
    F = np.asarray(stdF, dtype=float)
    d = np.diag(K)
    if np.any(K - np.diag(d)) or np.any(d <= 0):
        raise RepresentationError("K must be diagonal with positive entries")
    Q = math.exp(-p.r * p.hbar)
    Kinv = np.diag(1.0 / d)
    res = max(
        _rel(K @ E @ Kinv - Q ** 2 * E, E),
        _rel(K @ F @ Kinv - Q ** -2 * F, F),
        _rel(E @ F - F @ E - (K - Kinv) / (Q - 1.0 / Q), E @ F, F @ E, K, Kinv),
    )
    if res > tol:
        raise RepresentationError(f"input violates the one-parameter relations (residual {res:.3g})")
    weights = -np.log(d) / p.r
    order = np.argsort(weights)
    if np.any(order != np.arange(len(order))):
        raise RepresentationError("basis must be ordered by increasing weight")
    lam = HighestWeight.from_value(float(max(weights.max(), 0.0)), p.hbar)
    scale = math.sqrt(2 * p.r / (p.hbar * 2 * math.sinh(p.r * p.hbar)))
    weights = lam.hbar * np.rint(weights / lam.hbar)
    En, Fn = E / scale, F / scale
    K_half = np.diag(np.sqrt(d))
    for m in (En, Fn, K_half, weights):
        m.setflags(write=False)
    return Irrep(hw=lam, params=p, K_half=K_half, E=En, F=Fn, weights=weights)
