"""Experiment drivers shared by the command line and the acceptance tests.

Every driver returns an :class:`Outcome`: a table of rows (dicts with
scalar values), a pass flag for its built-in threshold check (``None``
when the experiment has no check) and a small summary.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import chains, crystal, orbit, qwalk, rep, sde
from . import rng as _rng
from .stats import Ecdf, ks_distance, quad2d

__all__ = [
    "Outcome",
    "irrep_report",
    "tensor_report",
    "static_limit",
    "crystal_limit",
    "chain_distribution",
    "chain_rescaled",
    "qwalk_report",
    "sde_report",
    "r_invariance_report",
    "spherical_report",
    "default_monomials",
]


@dataclass
class Outcome:
    rows: list
    passed: bool | None = None
    summary: dict = field(default_factory=dict)


def irrep_report(lam: float = 1.0, r: float = 1.0, hbar: float = 0.25) -> Outcome:
    """Build one irrep, check the relations and list its Casimir spectrum."""
    p = rep.Params(r, hbar)
    v = rep.build_irrep(rep.HighestWeight.from_value(lam, hbar), p)
    resid = rep.verify_relations(v, p)
    if p.flat:
        M = rep.flat_lambda_matrix(v, p)
        comm = max(float(np.linalg.norm(M @ X - X @ M)) / max(1.0, float(np.linalg.norm(M) * np.linalg.norm(X)))
                   for X in (v.dense("E"), v.dense("F"), np.diag(v.weights)))
    else:
        comm = rep.casimir_commutator_residual(v, p)
    if p.flat:
        vals = np.linalg.eigvalsh(rep.flat_lambda_matrix(v, p))
        lams = vals
        expected = np.full_like(vals, v.hw.value)
    else:
        vals = np.linalg.eigvalsh(rep.casimir_matrix(v, p))
        lams = rep.lambda_from_casimir(vals, p, tol=1e-6)
        expected = np.full_like(vals, rep.casimir_constant(v.hw, p))
    dev = float(np.max(np.abs(vals - expected) / np.maximum(1.0, np.abs(expected))))
    rows = [dict(index=i, weight=float(w), casimir=float(c), lam=float(l))
            for i, (w, c, l) in enumerate(zip(v.weights, vals, lams))]
    ok = resid < 1e-10 and comm < 1e-10 and dev < 1e-10
    return Outcome(rows, ok, dict(relations=resid, commutator=comm, spectrum_dev=dev, dim=v.dim))


def _crystal_power_multiset(n: int, hbar: float) -> dict[int, int]:
    leg = rep.HighestWeight(1, hbar)
    counts = {1: 1}
    for _ in range(n - 1):
        nxt: dict = {}
        for lam, m in counts.items():
            for hw in crystal.decompose_tensor(rep.HighestWeight(lam, hbar), leg):
                nxt[hw.steps] = nxt.get(hw.steps, 0) + m
        counts = nxt
    return dict(sorted(counts.items(), reverse=True))


def tensor_report(n: int = 6, r_values=(0.5, 2.0), hbar: float = 1.0) -> Outcome:
    """Multiplicities of ``V(hbar)^{(x) n}`` from the Casimir spectrum versus the crystal rule."""
    cryst = _crystal_power_multiset(n, hbar)
    quantum = {}
    for r in r_values:
        p = rep.Params(r, hbar)
        quantum[r] = rep.highest_weight_multiset(rep.tensor_power(rep.build_irrep(rep.HighestWeight(1, hbar), p), n), p)
    rows = []
    for lam in sorted(set(cryst).union(*[set(q) for q in quantum.values()]), reverse=True):
        row = dict(lam=lam, crystal=cryst.get(lam, 0))
        for r in r_values:
            row[f"quantum_r{r:g}"] = quantum[r].get(lam, 0)
        rows.append(row)
    ok = all(q == cryst for q in quantum.values())
    return Outcome(rows, ok, dict(n=n, dim=2 ** n))


def default_monomials(max_a: int = 2, max_c: int = 2) -> list[tuple[int, int, int]]:
    return [(a, a, c) for a, c in itertools.product(range(max_a + 1), range(max_c + 1))]


def static_limit(lam: float = 1.0, r: float = 1.0, hbars=(0.1, 0.05, 0.025), monomials=None,
                 N: int = 1_000_000, seed=None, two_orbit: bool = False, threads: int | None = None,
                 abs_tol: float = 0.01) -> Outcome:
    """Character ratios against orbit Monte Carlo as ``hbar`` shrinks.

    The observable for ``(a, b, c)`` is ``conj(F)^a F^b H^c`` at a sample of
    the orbit (or of the product of two independent orbit samples). The
    check asks for strictly decreasing gaps and a final gap below
    ``max(3 sigma, abs_tol)`` for every monomial.
    """
    monomials = [tuple(int(v) for v in m) for m in (monomials or default_monomials())]
    hbars = sorted((float(h) for h in hbars), reverse=True)
    seed = _rng.resolve_seed(seed)
    o = orbit.OrbitParams(lam, r)
    reps = []
    for h in hbars:
        p = rep.Params(r, h)
        v = rep.build_irrep(rep.HighestWeight.from_value(lam, h), p)
        reps.append(rep.coproduct_matrices(v, v, p, sparse=True) if two_orbit else v)
    rows = []
    ok = True
    worst = 0.0
    for m in monomials:
        a, b, c = m

        def f(H, F, Lam, a=a, b=b, c=c):
            return np.conj(F) ** a * F ** b * H ** c

        mean, se = orbit.mc_convolution_expectation(o, o if two_orbit else None, f, N, seed, threads)
        mean = float(np.real(mean))
        gaps = []
        prev = None
        for h, R in zip(hbars, reps):
            val = rep.character_ratio(R, m)
            gap = abs(val - mean)
            gaps.append(gap)
            extra = 2 * val - prev if prev is not None else float("nan")
            rows.append(dict(a=a, b=b, c=c, hbar=h, quantum=val, orbit_mean=mean, orbit_stderr=float(se),
                             gap=gap, extrapolated=extra))
            prev = val
        final_ok = gaps[-1] < max(3 * se, abs_tol)
        mono_ok = all(g2 < g1 for g1, g2 in zip(gaps, gaps[1:])) or gaps[-1] < max(3 * se, 1e-12)
        ok = ok and final_ok and mono_ok
        worst = max(worst, gaps[-1])
    return Outcome(rows, ok, dict(worst_final_gap=worst, N=N, seed=seed, two_orbit=two_orbit))


def _crystal_oracle(lam1, lam2, phi, psi):
    P = np.polynomial.polynomial

    def f(m1, m2):
        return P.polyval(np.maximum(lam1 + m2, -m1 + lam2), phi) * P.polyval(m1 + m2, psi)

    return quad2d(f, -lam1, lam1, -lam2, lam2, n_nodes=20, diagonal=lam2 - lam1) / (4 * lam1 * lam2)


def crystal_limit(lam1: float = 1.0, lam2: float = 1.0, r: float = 20.0, hbar: float = 0.01,
                  phi=(0.0, 1.0), psi=(1.0,), N: int = 200_000, seed=None, threads: int | None = None,
                  r_quantum: float = 1.0, hbar_quantum: float = 0.1) -> Outcome:
    """The four corners of the crystal-limit square for one ``(phi, psi)``.

    Corners: quantum normalized trace on ``V(lam1) (x) V(lam2)`` at
    ``(r_quantum, hbar_quantum)``, crystal average at ``hbar``, the
    importance-sampled orbit functional at ``r``, and the quadrature of the
    tropical limit. The check compares the orbit corner (within
    ``max(3 sigma, 0.05)``) and the crystal corner (within 0.02) with the
    quadrature value, and the quantum corner with the crystal average at the
    same ``hbar`` (1e-10).
    """
    seed = _rng.resolve_seed(seed)
    target = _crystal_oracle(lam1, lam2, phi, psi)
    cr = crystal.crystal_expectation(rep.HighestWeight.from_value(lam1, hbar),
                                     rep.HighestWeight.from_value(lam2, hbar), phi, psi)
    pq = rep.Params(r_quantum, hbar_quantum)
    h1 = rep.HighestWeight.from_value(lam1, hbar_quantum)
    h2 = rep.HighestWeight.from_value(lam2, hbar_quantum)
    tensor = rep.coproduct_matrices(rep.build_irrep(h1, pq), rep.build_irrep(h2, pq), pq)
    qv = rep.normalized_trace_functional(tensor, phi, psi, pq)
    qcr = crystal.crystal_expectation(h1, h2, phi, psi)
    est = orbit.crystal_limit_functional(orbit.OrbitParams(lam1, r), orbit.OrbitParams(lam2, r), phi, psi, N,
                                         seed, threads=threads)
    rows = [
        dict(corner="quantum", r=r_quantum, hbar=hbar_quantum, value=qv, stderr=0.0),
        dict(corner="crystal", r=math.inf, hbar=hbar, value=cr, stderr=0.0),
        dict(corner="orbit", r=r, hbar=0.0, value=est.mean, stderr=est.stderr),
        dict(corner="tropical", r=math.inf, hbar=0.0, value=target, stderr=0.0),
    ]
    orbit_ok = abs(est.mean - target) < max(3 * est.stderr, 0.05)
    crystal_ok = abs(cr - target) < 0.02
    quantum_ok = abs(qv - qcr) < 1e-10
    return Outcome(rows, orbit_ok and crystal_ok and quantum_ok,
                   dict(target=target, ess=est.ess, low_ess=est.low_ess, orbit_ok=orbit_ok,
                        crystal_ok=crystal_ok, quantum_ok=quantum_ok, seed=seed))


def _make_kernel(kernel: str, q=None, exact: bool = False, flip: bool = False) -> chains.Kernel:
    if kernel == "radial":
        return chains.kernel_radial(exact)
    if kernel == "joint-flat":
        return chains.kernel_joint_flat(exact, flip)
    if kernel == "joint-q":
        if q is None:
            raise ValueError("kernel joint-q needs q")
        return chains.kernel_joint_q(Fraction(q).limit_denominator(10 ** 12) if exact else float(q), flip)
    raise ValueError(f"unknown kernel {kernel!r}")


def chain_distribution(kernel: str = "radial", steps: int = 10, exact: bool = False, q=None,
                       flip: bool = False) -> Outcome:
    """Exact law after ``steps`` steps from the origin."""
    k = _make_kernel(kernel, q, exact, flip)
    start = 0 if k.kind == "radial" else (0, 0)
    one = Fraction(1) if exact else 1.0
    d = chains.evolve(k, {start: one}, steps)
    rows = []
    for s in sorted(d):
        m = d[s]
        row = dict(lam=s) if k.kind == "radial" else dict(omega=s[0], lam=s[1])
        row["probability"] = float(m)
        if exact:
            row["exact"] = str(m)
        rows.append(row)
    total = sum(d.values())
    ok = total == 1 if exact else abs(total - 1) < 1e-12
    return Outcome(rows, ok, dict(total=str(total) if exact else float(total), steps=steps))


def chain_rescaled(hbar: float = 0.02, t: float = 1.0, N: int = 100_000, seed=None, threads: int | None = None,
                   tol: float = 0.02) -> Outcome:
    """KS distance of ``hbar * lam_{floor(t / hbar^2)}`` to the Maxwell law at ``t``.

    Reports the sampled KS distance and the exact one computed from the
    evolved distribution (no sampling noise).
    """
    seed = _rng.resolve_seed(seed)
    n = int(math.floor(t / hbar ** 2 + 1e-9))
    x = chains.radial_rescaled_sample(hbar, t, N, seed, threads)
    cdf = lambda v: sde.bessel3_marginal_cdf(v, t)
    ks = ks_distance(Ecdf(x), cdf)
    d = chains.evolve(chains.kernel_radial(), {0: 1.0}, n)
    lam = np.array(sorted(d))
    cum = np.cumsum([d[v] for v in lam])
    pts = hbar * lam
    exact = float(max(np.max(np.abs(cum - cdf(pts))), np.max(np.abs(np.concatenate([[0.0], cum[:-1]]) - cdf(pts)))))
    rows = [dict(hbar=hbar, t=t, steps=n, N=N, ks=ks, ks_exact=exact, tol=tol, seed=seed)]
    return Outcome(rows, ks < tol, dict(ks=ks, ks_exact=exact, steps=n))


def qwalk_report(n: int = 8, r: float = 1.0, hbar: float = 1.0, tol: float = 1e-10,
                 min_prefix: float = 1e-8) -> Outcome:
    """Joint trajectory law of the walk and its comparison with the matching kernel.

    Conditional transition probabilities are compared on prefixes of mass at
    least ``min_prefix``; below that the ratio of two traces is dominated by
    rounding (the absolute joint deviation is checked on every prefix).
    """
    p = rep.Params(r, hbar)
    res = qwalk.qwalk_oracle(n, p, min_prefix=min_prefix)
    law = res["law"]
    k = qwalk.matching_kernel(p)
    rows = []
    for traj in sorted(law.probs):
        prob = 1.0
        s = (0, 0)
        for t in traj:
            prob *= float(k.prob(s, t))
            s = t
        rows.append(dict(trajectory=" ".join(f"{w}:{l}" for w, l in traj), probability=law.probs[traj],
                         kernel_probability=prob))
    ok = (res["markov_conditional"] < tol and res["markov_joint"] < tol and res["radial_formula"] < tol and abs(res["total"] - 1) < tol)
    summary = {key: res[key] for key in ("markov_joint", "markov_conditional", "radial_formula", "total",
                                         "transitions")}
    summary["q"] = math.exp(-r * hbar)
    return Outcome(rows, ok, summary)


def sde_report(mode: str = "ks", r_grid=(0.1, 1.0, 10.0), T: float = 1.0, dt: float = 1e-3, N: int = 20000,
               seed=None, threads: int | None = None, n_paths: int = 200, small_r=(0.01, 0.1, 1.0),
               large_r=(5.0, 20.0, 80.0), tol: float = 0.015, min_fraction: float = 0.95) -> Outcome:
    """Radial process experiments.

    ``mode="ks"``: terminal law against the Bessel-3 marginal for each ``r``
    (check: KS below ``tol``). ``mode="trend"``: pathwise distances to the
    flat and crystal limits (check: monotone on at least ``min_fraction`` of
    paths). ``mode="dump"``: radial paths for ``N`` drivers on the grid.
    """
    seed = _rng.resolve_seed(seed)
    if mode == "ks":
        rows = sde.r_invariance_experiment(r_grid, T, dt, N, seed, threads)
        ok = all(row["ks"] < tol for row in rows)
        return Outcome(rows, ok, dict(max_ks=max(row["ks"] for row in rows)))
    if mode == "trend":
        res = sde.pathwise_limit_trends(n_paths, T, dt, seed, tuple(small_r), tuple(large_r))
        rows = []
        for i in range(n_paths):
            row = dict(path=i)
            for j, r in enumerate(res["small_r"]):
                row[f"err_flat_r{r:g}"] = float(res["err_flat"][i, j])
            for j, r in enumerate(res["large_r"]):
                row[f"err_crystal_r{r:g}"] = float(res["err_crystal"][i, j])
            rows.append(row)
        ok = res["frac_flat"] >= min_fraction and res["frac_crystal"] >= min_fraction
        return Outcome(rows, ok, dict(frac_flat=res["frac_flat"], frac_crystal=res["frac_crystal"]))
    if mode == "dump":
        g = _rng.chunk_rng(seed, 51, 0)
        d = sde.sample_driver(T, dt, g, N)
        rows = []
        times = d.times
        for r in r_grid:
            vals = sde.lambda_path(d, r).values
            for i in range(N):
                for k, tk in enumerate(times):
                    rows.append(dict(r=float(r), path=i, t=float(tk), value=float(vals[i, k])))
        return Outcome(rows, None, dict(paths=N, steps=d.steps))
    raise ValueError(f"unknown sde mode {mode!r}")


def r_invariance_report(r_grid=(0.1, 1.0, 10.0), T: float = 1.0, dt: float = 1e-3, N: int = 20000, seed=None,
                        threads: int | None = None) -> Outcome:
    """Two-sample KS distances between terminal radial laws, for every pair of ``r``."""
    rows = sde.pairwise_r_invariance(r_grid, T, dt, N, seed, threads)
    ok = all(row["ks"] < row["ks_threshold"] for row in rows)
    return Outcome(rows, ok, dict(max_ks=max(row["ks"] for row in rows)))


def spherical_report(lam: float = 1.0, r: float = 1.0, z_values=(0, 0.5, 1, 2j), N: int = 200_000, seed=None,
                     threads: int | None = None, grid_size: int = 25) -> Outcome:
    """Rescaling identity on a grid and Monte Carlo of ``E[exp(r (z - 1) H)]`` on one orbit."""
    seed = _rng.resolve_seed(seed)
    zs = np.array([complex(v) for v in (0.25, 0.5, 1.5, 2.0, 0.5 + 1j, 2j)])
    lams = np.linspace(0.1, 3.0, grid_size)
    rs = np.array([0.3, 1.0, 2.5])
    ident = 0.0
    for rr in rs:
        a = orbit.spherical_function(zs[:, None], lams[None, :], rr)
        b = orbit.spherical_function(zs[:, None], rr * lams[None, :], 1.0)
        ident = max(ident, float(np.max(np.abs(a - b))))
    o = orbit.OrbitParams(lam, r)
    rows = []
    ok = ident < 1e-12
    for i, z in enumerate(complex(v) for v in z_values):
        def f(H, F, Lam, z=z):
            return np.exp(r * (z - 1) * H)

        mean, se = orbit.mc_convolution_expectation(o, None, f, N, _rng.chunk_rng(seed, 61, i).integers(2 ** 62),
                                                    threads)
        mean = complex(mean)
        exact = orbit.spherical_function(z, lam, r)
        gap = abs(mean - exact)
        within = gap <= 3 * se or gap < 1e-12
        ok = ok and within
        rows.append(dict(z_re=z.real, z_im=z.imag, mc_re=mean.real, mc_im=mean.imag, stderr=float(se),
                         exact_re=exact.real, exact_im=exact.imag, within_3sigma=bool(within)))
    return Outcome(rows, ok, dict(identity_max_error=ident))
