"""Nonsmooth, nonconvex minimization (BFGS with a weak Wolfe line search,
then gradient sampling) and the two controller-design objectives."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg
import scipy.optimize

from ._linalg import null_vectors
from .errors import DdaeError, GuardViolatedAtStart
from .norm import strong_hinf_norm
from .spectrum import (
    CLUSTER_TOL,
    _DifferenceOperator,
    difference_peak,
    robust_spectral_abscissa,
)
from .system import ParameterizedSystem, instantiate, partition
from .transfer import char_matrix, dT_dp_all

__all__ = [
    "Evaluation",
    "Objective",
    "TraceEntry",
    "OptimizerReport",
    "minimize",
    "min_norm_element",
    "grad_strong_norm",
    "grad_robust_abscissa",
    "strong_norm_objective",
    "robust_abscissa_objective",
]

ARMIJO = 1e-4
CURVATURE = 0.5
GS_RADII = (1e-4, 1e-5, 1e-6)


@dataclass(frozen=True, eq=False)
class Evaluation:
    """Objective value with gradient; ``smooth`` is False near a kink.

    ``feasible`` is False outside the domain guard, where ``value`` is
    ``+inf``.
    """

    value: float
    gradient: np.ndarray
    smooth: bool = True
    feasible: bool = True
    info: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class Objective:
    fun: Callable[[np.ndarray], Evaluation]
    n_p: int
    name: str = "objective"

    def __call__(self, p) -> Evaluation:
        p = np.asarray(p, dtype=float)
        if not np.all(np.isfinite(p)):
            return Evaluation(np.inf, np.full(self.n_p, np.nan), False, False)
        try:
            ev = self.fun(p)
        except DdaeError as exc:
            # numerical breakdown (e.g. singular algebraic part) is outside the domain
            return Evaluation(np.inf, np.full(self.n_p, np.nan), False, False, {"error": str(exc)})
        if ev.feasible and np.size(ev.gradient) != self.n_p:
            raise ValueError(f"gradient has length {np.size(ev.gradient)}, expected {self.n_p}")
        return ev


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    phase: str
    value: float
    step: float
    grad_norm: float
    armijo: bool
    curvature: bool


@dataclass(frozen=True, eq=False)
class OptimizerReport:
    p: np.ndarray
    value: float
    trace: list
    phase: str
    reason: str
    n_evals: int
    runs: list = field(default_factory=list)


class _Counter:
    def __init__(self, obj):
        self.obj = obj
        self.n = 0

    def __call__(self, p):
        self.n += 1
        return self.obj(p)


def _weak_wolfe(f, x, fx, gx, d, maxit=40):
    """Bisection/expansion line search for the weak Wolfe conditions.

    Returns ``(t, evaluation, armijo_ok, curvature_ok)``; ``t == 0`` when no
    step with sufficient decrease was found.
    """
    slope = float(gx @ d)
    lo, hi, t = 0.0, np.inf, 1.0
    best = (0.0, None, False, False)
    for _ in range(maxit):
        ev = f(x + t * d)
        armijo = ev.feasible and np.isfinite(ev.value) and ev.value <= fx + ARMIJO * t * slope
        if not armijo:
            hi = t
        else:
            curv = float(ev.gradient @ d) >= CURVATURE * slope
            best = (t, ev, True, curv)
            if curv:
                return best
            lo = t
        t = 0.5 * (lo + hi) if np.isfinite(hi) else 2.0 * lo
        if np.isfinite(hi) and hi - lo <= 1e-16 * max(1.0, hi):
            break
    return best


def min_norm_element(G):
    """Minimum-norm element of the convex hull of the rows of ``G``."""
    G = np.atleast_2d(np.asarray(G, dtype=float))
    k = G.shape[0]
    if k == 1:
        return G[0].copy()
    scale = np.abs(G).max()
    if scale == 0.0:
        return np.zeros(G.shape[1])
    Q = (G / scale) @ (G / scale).T
    res = scipy.optimize.minimize(
        lambda w: w @ Q @ w,
        np.full(k, 1.0 / k),
        jac=lambda w: 2 * Q @ w,
        bounds=[(0.0, 1.0)] * k,
        constraints=[{"type": "eq", "fun": lambda w: w.sum() - 1.0, "jac": lambda w: np.ones(k)}],
        method="SLSQP",
        options={"ftol": 1e-15, "maxiter": 200},
    )
    w = np.clip(res.x, 0.0, None)
    w /= w.sum()
    best = w @ G
    # SLSQP is only accurate to ~sqrt(eps); vertices and edges are exact candidates
    Gs = G / scale
    for i in range(k):
        for j in range(i, k):
            e = Gs[j] - Gs[i]
            ee = e @ e
            t = 0.0 if ee == 0.0 else min(max(-(Gs[i] @ e) / ee, 0.0), 1.0)
            cand = G[i] + t * (G[j] - G[i])
            if cand @ cand < best @ best:
                best = cand
    return best


def _bfgs(f, x, ev, maxit, tol, trace):
    n = x.size
    H = np.eye(n)
    g = ev.gradient
    reason = "max iterations"
    first = True
    for it in range(maxit):
        gn = float(np.linalg.norm(g))
        if gn <= tol:
            return x, ev, "gradient tolerance"
        d = -H @ g
        if g @ d >= 0:
            H = np.eye(n)
            d = -g
        t, new, armijo, curv = _weak_wolfe(f, x, ev.value, g, d)
        if new is None:
            reason = "line search failed"
            break
        s = t * d
        y = new.gradient - g
        sy = float(s @ y)
        if first and sy > 0:
            H = (sy / float(y @ y)) * np.eye(n)
            first = False
        if sy > 1e-16 * np.linalg.norm(s) * np.linalg.norm(y):
            r = 1.0 / sy
            V = np.eye(n) - r * np.outer(s, y)
            H = V @ H @ V.T + r * np.outer(s, s)
        trace.append(TraceEntry(it, "bfgs", new.value, t, float(np.linalg.norm(new.gradient)), armijo, curv))
        dec = ev.value - new.value
        x, ev, g = x + s, new, new.gradient
        if dec <= 1e-15 * max(1.0, abs(ev.value)) and not curv:
            reason = "stagnation"
            break
    return x, ev, reason


def _gradient_sampling(f, x, ev, rng, n_samples, maxit, tol, trace):
    it = 0
    for radius in GS_RADII:
        eps = radius * (1.0 + np.linalg.norm(x))
        for _ in range(maxit):
            G = [ev.gradient]
            for _ in range(n_samples):
                u = rng.standard_normal(x.size)
                u *= eps * rng.random() ** (1.0 / x.size) / np.linalg.norm(u)
                e = f(x + u)
                if e.feasible and np.all(np.isfinite(e.gradient)):
                    G.append(e.gradient)
            d = min_norm_element(np.array(G))
            dn = float(np.linalg.norm(d))
            if dn <= tol:
                break
            t, moved = 1.0, False
            for _ in range(50):
                e = f(x - t * d)
                if e.feasible and e.value < ev.value - ARMIJO * t * dn**2:
                    moved = True
                    break
                t *= 0.5
            if not moved:
                break
            x, ev = x - t * d, e
            trace.append(TraceEntry(it, "gradient-sampling", ev.value, t, dn, True, False))
            it += 1
    return x, ev


def _run(obj, p0, maxit, tol, gradient_sampling, n_samples, gs_maxit, seed):
    f = _Counter(obj)
    trace = []
    ev0 = f(p0)
    x, ev = np.array(p0, dtype=float), ev0
    if ev0.feasible and x.size:
        x, ev, reason = _bfgs(f, x, ev0, maxit, tol, trace)
        phase = "bfgs"
        if gradient_sampling and not (reason == "gradient tolerance" and ev.smooth):
            rng = np.random.default_rng(seed)
            x2, ev2 = _gradient_sampling(f, x, ev, rng, n_samples or 2 * x.size, gs_maxit, tol, trace)
            phase = "gradient-sampling"
            if ev2.value < ev.value:
                x, ev = x2, ev2
            reason = reason + "; sampling radius exhausted"
    else:
        reason = "infeasible start" if not ev0.feasible else "no parameters"
        phase = "bfgs"
    return OptimizerReport(x, float(ev.value), trace, phase, reason, f.n)


def minimize(
    obj: Objective,
    p0,
    *,
    maxit: int = 200,
    tol: float = 1e-8,
    gradient_sampling: bool = True,
    n_samples: int | None = None,
    gs_maxit: int = 20,
    restarts: int = 3,
    restart_scale: float = 0.1,
    seed: int = 0,
    jobs: int = 1,
) -> OptimizerReport:
    """Minimize a possibly nonsmooth objective.

    Runs BFGS with a weak Wolfe line search, then a gradient-sampling phase
    (minimum-norm element of gradients sampled in shrinking balls).  The
    first run starts at ``p0``; ``restarts - 1`` more start from ``p0``
    plus seeded Gaussian perturbations.  The best point over all runs is
    returned, never worse than ``p0``.
    """
    p0 = np.asarray(p0, dtype=float).ravel()
    if p0.size != obj.n_p:
        raise ValueError(f"p0 has length {p0.size}, expected {obj.n_p}")
    ev0 = obj(p0)
    if not ev0.feasible or not np.isfinite(ev0.value):
        raise GuardViolatedAtStart(f"{obj.name} is not defined at the starting point")
    rng = np.random.default_rng(seed)
    starts = [p0]
    for _ in range(max(restarts, 1) - 1):
        starts.append(p0 + restart_scale * (1.0 + np.linalg.norm(p0)) * rng.standard_normal(p0.size))
    seeds = rng.integers(0, 2**32, size=len(starts))
    args = [(obj, s, maxit, tol, gradient_sampling, n_samples, gs_maxit, int(sd)) for s, sd in zip(starts, seeds)]
    if jobs > 1 and len(args) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            runs = list(ex.map(lambda a: _run(*a), args))
    else:
        runs = [_run(*a) for a in args]
    best = min(runs, key=lambda r: r.value)
    if best.value > ev0.value:
        best = OptimizerReport(p0, float(ev0.value), [], "bfgs", "no improvement", 1)
    return OptimizerReport(best.p, best.value, best.trace, best.phase, best.reason, sum(r.n_evals for r in runs), runs)


def _dTa_dp(part, psys, phases, u, v):
    """``Re(u^* dT_a/dp_k v)`` with the delay phases frozen at ``phases``."""
    U, V = part.U, part.V
    ph = np.r_[1.0, phases]
    A22 = part.A22_at(phases)
    lu = scipy.linalg.lu_factor(A22)
    x = scipy.linalg.lu_solve(lu, part.B2 @ v)
    y = scipy.linalg.lu_solve(lu, part.C2.T @ u.conj(), trans=1)
    g = np.empty(psys.n_p)
    for k in range(psys.n_p):
        dA22 = U.T @ np.tensordot(ph, psys.dA[k], axes=1) @ V
        dC2 = psys.dC[k] @ V
        dB2 = U.T @ psys.dB[k]
        val = -(u.conj() @ (dC2 @ x)) + y @ (dA22 @ x) - y @ (dB2 @ v)
        g[k] = val.real
    return g


def grad_strong_norm(psys: ParameterizedSystem, p, **norm_opts) -> Evaluation:
    """Strong H-infinity norm of the instantiated system and its gradient.

    Outside the strongly stable region the value is ``+inf`` and the
    evaluation is flagged infeasible.
    """
    sys = instantiate(psys, p)
    part = partition(sys)
    rep = robust_spectral_abscissa(sys, part=part)
    if not rep.strongly_stable:
        return Evaluation(np.inf, np.full(psys.n_p, np.nan), False, False, {"robust_abscissa": rep.robust_abscissa})
    res = strong_hinf_norm(sys, check_stability=False, part=part, **norm_opts)
    info = {"branch": res.branch, "omega": res.omega, "theta": res.theta, "robust_abscissa": rep.robust_abscissa}
    if res.value == 0.0:
        return Evaluation(0.0, np.zeros(psys.n_p), False, True, info)
    if res.branch == "finite-frequency":
        g = dT_dp_all(sys, psys, 1j * res.omega, res.u, res.v)
        gap = res.finite.gap
        tie = abs(res.finite.value - res.asymptotic.value) <= 1e-8 * res.value
    else:
        g = _dTa_dp(part, psys, res.asymptotic.phases(sys.m), res.u, res.v)
        gap = res.asymptotic.gap
        tie = False
    smooth = gap >= 1e-8 * res.value and not tie
    return Evaluation(float(res.value), g, bool(smooth), True, info)


def _abscissa_gradient(sys, psys, lam):
    cm = char_matrix(sys, lam)
    x, y, _ = null_vectors(cm.M)
    denom = np.vdot(y, cm.M_lam @ x)
    e = np.exp(-lam * np.asarray(sys.delays))
    g = np.empty(psys.n_p)
    for k in range(psys.n_p):
        dM = -np.tensordot(e, psys.dA[k], axes=1)
        g[k] = (-np.vdot(y, dM @ x) / denom).real
    return g


def _difference_gradient(part, psys, c):
    peak = difference_peak(part, c)
    op = _DifferenceOperator(part, peak.indices)
    mu, x, y = peak.mu, peak.x, peak.y
    w = np.exp(-c * op.tau + 1j * peak.theta)
    denom = np.vdot(y, x)
    s = np.conj(mu) / abs(mu)
    dXc = np.tensordot(-op.tau * w, op.F, axes=1)
    dgc = (s * np.vdot(y, dXc @ x) / denom).real
    A0inv = np.linalg.inv(part.A22[0])
    S = np.tensordot(w, np.array([part.A22[i] for i in peak.indices]), axes=1)
    U, V = part.U, part.V
    g = np.empty(psys.n_p)
    for k in range(psys.n_p):
        d0 = U.T @ psys.dA[k][0] @ V
        dS = np.tensordot(w, np.array([U.T @ psys.dA[k][i] @ V for i in peak.indices]), axes=1)
        dX = A0inv @ d0 @ A0inv @ S - A0inv @ dS
        dgp = (s * np.vdot(y, dX @ x) / denom).real
        g[k] = -dgp / dgc
    return g


def grad_robust_abscissa(psys: ParameterizedSystem, p, r_min=-1.0, cluster_tol=CLUSTER_TOL) -> Evaluation:
    """Robust spectral abscissa of the instantiated system and its gradient.

    The gradient follows the active branch: the rightmost characteristic
    root (eigenvalue sensitivity through the left/right null vectors of the
    characteristic matrix) or the difference-equation bound ``c_D``
    (implicit differentiation of ``gamma(c) = 1``).
    """
    sys = instantiate(psys, p)
    part = partition(sys)
    rep = robust_spectral_abscissa(sys, r_min=r_min, part=part, cluster_tol=cluster_tol)
    value = rep.robust_abscissa
    info = {"alpha": rep.alpha, "c_D": rep.c_D, "branch": rep.branch}
    if not np.isfinite(value):
        return Evaluation(float(value), np.zeros(psys.n_p), False, True, info)
    scale = max(1.0, abs(value))
    tie = abs(rep.alpha - rep.c_D) <= 1e-6 * scale
    if rep.branch == "spectral":
        spec = rep.spectrum
        lam = spec.roots[0]
        # distinct rightmost roots up to conjugation
        near = spec.roots[np.abs(spec.roots.real - lam.real) <= cluster_tol * scale]
        near = near[near.imag >= 0]
        info["multiplicity"] = int(spec.multiplicity[0])
        smooth = near.size == 1 and spec.multiplicity[0] == 1
        g = _abscissa_gradient(sys, psys, complex(near[np.argmax(near.real)] if near.size else lam))
    else:
        g = _difference_gradient(part, psys, rep.c_D)
        smooth = True
    return Evaluation(float(value), g, bool(smooth and not tie), True, info)


def robust_abscissa_objective(psys: ParameterizedSystem, **kw) -> Objective:
    return Objective(lambda p: grad_robust_abscissa(psys, p, **kw), psys.n_p, "robust spectral abscissa")


def strong_norm_objective(psys: ParameterizedSystem, **kw) -> Objective:
    return Objective(lambda p: grad_strong_norm(psys, p, **kw), psys.n_p, "strong H-infinity norm")
