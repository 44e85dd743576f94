"""Strong H-infinity norm of a DDAE.

Two steps: the asymptotic transfer function is maximized over the torus
(delay-independent), then a level-set iteration on a spectral
discretization, corrected on the true transfer function, looks for a
higher finite-frequency peak.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize

from ._linalg import top_singular
from ._torus import torus_maximize
from .errors import EigSolverFailure, NotStronglyStable
from .spectral import Discretization, discretize
from .spectrum import ORDERS, StrongStabilityReport, effective_delays, robust_spectral_abscissa
from .system import DdaeSystem, PartitionedSystem, partition
from .transfer import eval_dT, eval_T, sigma_T_batch, sigma_Ta_batch

__all__ = [
    "TorusPeak",
    "FrequencyPeak",
    "StrongNormResult",
    "effective_delays",
    "strong_norm_Ta",
    "hinf_norm_Ta_at_delays",
    "level_crossings",
    "hinf_norm_T",
    "strong_hinf_norm",
    "torus_gradient",
]

AXIS_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class TorusPeak:
    """Maximizer of the largest singular value of the asymptotic transfer on the torus.

    ``theta`` holds one angle per entry of ``indices`` (the effective
    delays); ``grad_norm`` is the stationarity residual after correction.
    """

    theta: np.ndarray
    indices: np.ndarray
    value: float
    u: np.ndarray
    v: np.ndarray
    grad_norm: float
    grid_max: float
    gap: float

    def phases(self, m):
        """Complex factors ``exp(-j theta_i)`` for all ``m`` delayed terms."""
        ph = np.ones(m, complex)
        ph[self.indices - 1] = np.exp(-1j * self.theta)
        return ph


@dataclass(frozen=True, eq=False)
class FrequencyPeak:
    """Peak of ``sigma_1(T(j omega))``; ``omega`` is ``None`` when no peak above
    the start level was found."""

    value: float
    omega: float | None
    u: np.ndarray | None
    v: np.ndarray | None
    order: int
    gap: float = np.inf
    slope: float = 0.0


@dataclass(frozen=True, eq=False)
class StrongNormResult:
    value: float
    branch: str
    omega: float | None
    theta: np.ndarray | None
    u: np.ndarray
    v: np.ndarray
    asymptotic: TorusPeak
    finite: FrequencyPeak
    stability: StrongStabilityReport | None = None

    def __post_init__(self):
        if self.branch not in ("finite-frequency", "asymptotic"):
            raise ValueError(f"unknown branch {self.branch!r}")


def _Ta_and_solves(part, phases):
    A22 = part.A22_at(phases)
    lu = scipy.linalg.lu_factor(A22)
    X = scipy.linalg.lu_solve(lu, part.B2.astype(complex))
    return -part.C2 @ X, lu, X


def torus_gradient(part: PartitionedSystem, indices, theta, u, v):
    """``d sigma_1 / d theta_k = Re(u^* dT_a/dtheta_k v)`` for the effective angles."""
    ph = np.ones(part.sys.m, complex)
    ph[np.asarray(indices) - 1] = np.exp(-1j * np.asarray(theta))
    _, lu, _ = _Ta_and_solves(part, ph)
    x = scipy.linalg.lu_solve(lu, part.B2 @ v)
    y = scipy.linalg.lu_solve(lu, part.C2.T @ u.conj(), trans=1)
    g = np.empty(len(indices))
    for k, i in enumerate(indices):
        dA = -1j * part.A22[i] * ph[i - 1]
        g[k] = (y @ (dA @ x)).real
    return g


def strong_norm_Ta(part: PartitionedSystem, grid_density: int = 24, corrector_tol: float = 1e-12) -> TorusPeak:
    """Maximum of ``sigma_1`` of the asymptotic transfer function over the torus.

    The result does not depend on the delay values.  Raises
    :class:`SingularOnTorus` if the algebraic part is singular somewhere on
    the torus (the strong norm is then unbounded).
    """
    idx = effective_delays(part)
    m = part.sys.m
    nz, nw = part.sys.n_z, part.sys.n_w

    def phases(T):
        T = np.atleast_2d(T)
        ph = np.ones((T.shape[0], m), complex)
        ph[:, idx - 1] = np.exp(-1j * T)
        return ph

    if part.nu == 0 or not np.any(part.C2) or not np.any(part.B2):
        return TorusPeak(np.zeros(idx.size), idx, 0.0, np.zeros(nz, complex), np.zeros(nw, complex), 0.0, 0.0, 0.0)

    def point(theta):
        Ta, _, _ = _Ta_and_solves(part, phases(theta)[0])
        return top_singular(Ta)

    fun = lambda th: point(th)[0]

    def grad(th):
        s, u, v, _ = point(th)
        return torus_gradient(part, idx, th, u, v)

    sigma_batch = lambda T: sigma_Ta_batch(part, phases(T))
    sigma_batch(np.zeros((1, idx.size)))  # singularity check at theta = 0
    theta, value, gn, gmax = torus_maximize(sigma_batch, fun, grad, idx.size, grid_density, tol=corrector_tol)
    s, u, v, gap = point(theta)
    return TorusPeak(np.asarray(theta, float), idx, float(s), u, v, float(gn), gmax, gap)


def hinf_norm_Ta_at_delays(part: PartitionedSystem, delays=None, omega_cap: float = 1e4, points_per_period: int = 40):
    """Supremum of ``sigma_1(T_a(j omega))`` over ``[0, omega_cap]`` at fixed delays.

    Diagnostic only: dense sweep with local refinement of the best samples.
    """
    tau = np.asarray(part.delays[1:] if delays is None else delays, dtype=float)
    if tau.size != part.sys.m:
        raise ValueError(f"expected {part.sys.m} delays")
    if part.nu == 0:
        return 0.0
    idx = effective_delays(part)
    if idx.size == 0:
        return float(sigma_Ta_batch(part, np.ones((1, part.sys.m)))[0])
    t_eff = tau[idx - 1]
    step = 2 * np.pi / (points_per_period * t_eff.max())
    num = int(min(4e6, np.ceil(omega_cap / step) + 1))
    w = np.linspace(0.0, omega_cap, num)
    f = lambda om: sigma_Ta_batch(part, np.exp(-1j * np.outer(np.atleast_1d(om), tau)))
    vals = np.empty(num)
    for s in range(0, num, 200000):
        vals[s : s + 200000] = f(w[s : s + 200000])
    best = float(vals.max())
    h = w[1] - w[0]
    for i in np.argsort(vals)[::-1][:10]:
        r = scipy.optimize.minimize_scalar(
            lambda om: -f(om)[0], bounds=(max(0.0, w[i] - h), min(omega_cap, w[i] + h)), method="bounded",
            options={"xatol": 1e-12},
        )
        best = max(best, -float(r.fun))
    return best


def level_crossings(disc: Discretization, gamma: float, omega_max: float | None = None) -> np.ndarray:
    """Frequencies ``omega >= 0`` where a singular value of the discretized
    transfer function equals ``gamma``.

    These are the imaginary eigenvalues ``j omega`` of the pencil
    ``lam diag(E, E^T) - [[A, B B^T / gamma], [-C^T C / gamma, -A^T]]``.
    """
    if not gamma > 0:
        raise ValueError("level must be positive")
    E, A, B, C = disc.E, disc.A, disc.B, disc.C
    n = E.shape[0]
    H = np.block([[A, (B @ B.T) / gamma], [-(C.T @ C) / gamma, -A.T]])
    EE = np.zeros((2 * n, 2 * n))
    EE[:n, :n] = E
    EE[n:, n:] = E.T
    try:
        ev = scipy.linalg.eigvals(H, EE, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigSolverFailure(str(exc)) from exc
    ev = ev[np.isfinite(ev)]
    on_axis = (np.abs(ev.real) <= AXIS_TOL * (1 + np.abs(ev.imag))) & (ev.imag >= 0)
    w = np.sort(ev[on_axis].imag)
    if omega_max is not None:
        w = w[w <= omega_max]
    if w.size:
        # collapse the numerically duplicated eigenvalues of a tangency
        keep = np.r_[True, np.diff(w) > 1e-9 * (1 + w[1:])]
        w = w[keep]
    return w


def _sigma_at(sys, w):
    s, u, v, gap = top_singular(eval_T(sys, 1j * w))
    return s, u, v, gap


def _slope(sys, w, u, v):
    """``d sigma_1(T(j omega)) / d omega``."""
    return float((u.conj() @ (1j * eval_dT(sys, 1j * w)) @ v).real)


def _correct_peak(sys, w0, tol=1e-10, maxit=50):
    """Newton on ``d sigma / d omega = 0`` from ``w0``, keeping sigma increasing."""
    w = abs(float(w0))
    s, u, v, gap = _sigma_at(sys, w)
    g = _slope(sys, w, u, v)
    for _ in range(maxit):
        if abs(g) <= tol * s or (w == 0.0 and g <= 0):
            break
        h = 1e-6 * max(1.0, w)
        wp = w + h
        wm = max(w - h, 0.0)
        gp = _slope(sys, wp, *_sigma_at(sys, wp)[1:3])
        gm = _slope(sys, wm, *_sigma_at(sys, wm)[1:3])
        curv = (gp - gm) / (wp - wm)
        step = -g / curv if curv < 0 else np.sign(g) * h * 10
        t = 1.0
        moved = False
        for _ in range(40):
            wc = abs(w + t * step)
            sc, uc, vc, gc = _sigma_at(sys, wc)
            if sc >= s:
                moved = True
                break
            t *= 0.5
        if not moved:
            break
        w, s, u, v, gap = wc, sc, uc, vc, gc
        g = _slope(sys, w, u, v)
    if gap < 1e-8 * s:
        # coalescing singular values: no derivative, refine by bracketing
        h = 1e-3 * max(1.0, w)
        r = scipy.optimize.minimize_scalar(
            lambda om: -_sigma_at(sys, abs(om))[0], bounds=(max(0.0, w - h), w + h), method="bounded",
            options={"xatol": 1e-13 * max(1.0, w)},
        )
        if -r.fun > s:
            w = abs(float(r.x))
            s, u, v, gap = _sigma_at(sys, w)
    return w, s, u, v, gap, g


def _test_frequencies(disc: Discretization, omega_max):
    ev = scipy.linalg.eigvals(disc.A, disc.E, check_finite=False)
    ev = ev[np.isfinite(ev)]
    w = np.abs(ev.imag)
    w = w[w < 1e8]
    if omega_max is not None:
        w = w[w <= omega_max]
    return np.unique(np.r_[0.0, w])


def _level_set(sys, disc, level, best_w, rel_tol, omega_max, maxit=100):
    """Bruinsma-Steinbuch iteration: crossings from the discretization,
    midpoint values from the true transfer function."""
    for _ in range(maxit):
        gamma = (1.0 + rel_tol) * level if level > 0 else np.finfo(float).tiny ** 0.5
        w = level_crossings(disc, gamma, omega_max)
        if w.size == 0:
            break
        pts = np.r_[w[0] / 2, 0.5 * (w[1:] + w[:-1])] if w.size > 1 else np.r_[w[0] / 2, w[0]]
        vals = sigma_T_batch(sys, pts)
        vals = np.where(np.isnan(vals), -np.inf, vals)
        i = int(np.argmax(vals))
        if vals[i] <= gamma:
            break
        level, best_w = float(vals[i]), float(pts[i])
    return level, best_w


def hinf_norm_T(
    sys: DdaeSystem,
    start_level: float = 0.0,
    rel_tol: float = 1e-6,
    order: int | None = None,
    omega_max: float | None = None,
    check_stability: bool = True,
) -> FrequencyPeak:
    """H-infinity norm of ``T`` by a predictor-corrector level-set method.

    The predictor runs the level-set iteration on a spectral
    discretization; the corrector removes the discretization error with
    Newton's method on the true transfer function.  With ``order=None`` the
    discretization order is doubled from 20 (up to 320) until the predicted
    peak frequency moves by less than ``1e-3`` relative.  Returns a peak with
    ``omega=None`` if nothing exceeds ``start_level``.
    """
    if start_level < 0:
        raise ValueError("start level must be nonnegative")
    if check_stability:
        rep = robust_spectral_abscissa(sys)
        if not rep.strongly_stable:
            raise NotStronglyStable(
                f"system is not strongly stable (robust abscissa {rep.robust_abscissa:.6g})",
                rep.robust_abscissa,
            )
    if sys.n_w == 0 or sys.n_z == 0 or not np.any(sys.B) or not np.any(sys.C):
        return FrequencyPeak(float(start_level), None, None, None, 0)
    orders = (int(order),) if order is not None else ORDERS
    level = 0.0
    best_w = None
    prev_w = None
    N = orders[0]
    for N in orders:
        disc = discretize(sys, N, reduced=True)
        tw = _test_frequencies(disc, omega_max)
        tv = sigma_T_batch(sys, tw)
        tv = np.where(np.isnan(tv), -np.inf, tv)
        i = int(np.argmax(tv))
        if tv[i] > level:
            level, best_w = float(tv[i]), float(tw[i])
        level, best_w = _level_set(sys, disc, max(level, start_level), best_w, rel_tol, omega_max)
        if best_w is not None:
            # corrector between orders keeps the warm-start level a true lower bound
            w, s, *_ = _correct_peak(sys, best_w)
            if s > level and (omega_max is None or w <= omega_max):
                level, best_w = s, w
        if prev_w is not None and best_w is not None and abs(best_w - prev_w) <= 1e-3 * max(abs(best_w), 1e-12):
            break
        if prev_w is None and best_w is None and order is None and N >= 40:
            break
        prev_w = best_w
    if best_w is None or level <= start_level:
        return FrequencyPeak(float(start_level), None, None, None, N)
    w, s, u, v, gap, g = _correct_peak(sys, best_w)
    if s < level:
        w, (s, u, v, gap) = best_w, _sigma_at(sys, best_w)
        g = _slope(sys, w, u, v)
    if s <= start_level:
        return FrequencyPeak(float(start_level), None, None, None, N)
    return FrequencyPeak(float(s), float(w), u, v, N, float(gap), float(g))


def strong_hinf_norm(
    sys: DdaeSystem,
    grid_density: int = 24,
    rel_tol: float = 1e-6,
    order: int | None = None,
    omega_max: float | None = None,
    check_stability: bool = True,
    part: PartitionedSystem | None = None,
) -> StrongNormResult:
    """Strong H-infinity norm ``max(||T||_inf, max over the torus of sigma_1(T_a))``.

    Raises :class:`NotStronglyStable` if the robust spectral abscissa is
    nonnegative.
    """
    part = partition(sys) if part is None else part
    rep = None
    if check_stability:
        rep = robust_spectral_abscissa(sys, part=part)
        if not rep.strongly_stable:
            raise NotStronglyStable(
                f"system is not strongly stable (robust abscissa {rep.robust_abscissa:.6g})",
                rep.robust_abscissa,
            )
    ta = strong_norm_Ta(part, grid_density)
    fp = hinf_norm_T(sys, start_level=ta.value, rel_tol=rel_tol, order=order, omega_max=omega_max, check_stability=False)
    if fp.omega is not None and fp.value > ta.value:
        return StrongNormResult(fp.value, "finite-frequency", fp.omega, None, fp.u, fp.v, ta, fp, rep)
    return StrongNormResult(ta.value, "asymptotic", None, ta.theta, ta.u, ta.v, ta, fp, rep)
