"""Characteristic roots, spectral abscissa and the robust (strong) stability test."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._linalg import null_vectors
from ._torus import torus_maximize
from .errors import EigSolverFailure, NonConvergence
from .spectral import discretize
from .system import DdaeSystem, PartitionedSystem, partition
from .transfer import char_matrix

__all__ = [
    "RootCorrection",
    "SpectrumResult",
    "StrongStabilityReport",
    "DifferencePeak",
    "char_roots",
    "correct_root",
    "spectral_abscissa",
    "difference_abscissa",
    "difference_peak",
    "robust_spectral_abscissa",
    "is_strongly_stable",
    "effective_delays",
]

ORDERS = (20, 40, 80, 160, 320)
MERGE_TOL = 1e-6
CLUSTER_TOL = 1e-4


@dataclass(frozen=True)
class RootCorrection:
    lam: complex
    x: np.ndarray
    residual: float
    converged: bool


def correct_root(sys: DdaeSystem, lam0: complex, tol=1e-10, maxit=50, raise_on_failure=False):
    """Newton refinement of an approximate characteristic root.

    Solves ``M(lam) x = 0, c^* x = 1`` for ``(x, lam)`` starting from the
    smallest singular vector of ``M(lam0)``.  The reported residual is
    ``sigma_min(M(lam))``; convergence means residual ``<= tol * ||M_lam||``.
    """
    lam = complex(lam0)
    n = sys.n
    cm = char_matrix(sys, lam)
    x, _, s = null_vectors(cm.M)
    c = x / np.vdot(x, x)
    best = (lam, x, s[-1], s[-1] <= tol * max(1.0, np.linalg.norm(cm.M_lam, 2)))
    if best[3]:
        return RootCorrection(*best)
    J = np.zeros((n + 1, n + 1), complex)
    for _ in range(maxit):
        J[:n, :n] = cm.M
        J[:n, n] = cm.M_lam @ x
        J[n, :n] = c.conj()
        F = np.r_[cm.M @ x, np.vdot(c, x) - 1.0]
        try:
            d = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            break
        x = x + d[:n]
        lam = lam + d[n]
        if not np.isfinite(lam) or abs(lam) > 1e12:
            break
        with np.errstate(over="ignore", invalid="ignore"):
            cm = char_matrix(sys, lam)
        if not np.all(np.isfinite(cm.M)) or not np.all(np.isfinite(x)):
            break
        s_min = np.linalg.svd(cm.M, compute_uv=False)[-1]
        ok = s_min <= tol * max(1.0, np.linalg.norm(cm.M_lam, 2))
        if s_min < best[2] or ok:
            best = (lam, x / np.linalg.norm(x), s_min, ok)
        if ok or abs(d[n]) <= 1e-15 * max(1.0, abs(lam)):
            break
    if not best[3] and raise_on_failure:
        raise NonConvergence(f"root correction from {lam0} did not converge (residual {best[2]:.2e})")
    return RootCorrection(*best)


def _clusters(roots, tol):
    """Single-linkage clusters of ``roots``; returns a label per root."""
    k = roots.size
    labels = np.arange(k)
    for i in range(k):
        for j in range(i + 1, k):
            if abs(roots[i] - roots[j]) <= tol and labels[j] != labels[i]:
                labels[labels == labels[j]] = labels[i]
    return labels


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    """Corrected characteristic roots with real part at least ``r_min``.

    Roots are sorted by decreasing real part and stored once each.
    ``multiplicity[i]`` counts, with multiplicity, the roots of the cluster
    (roots within ``cluster_tol``) containing root ``i``; a multiple root
    that the correction collapses to a single point still counts fully.
    """

    roots: np.ndarray
    residuals: np.ndarray
    multiplicity: np.ndarray
    r_min: float
    order: int
    order_converged: bool
    cluster_tol: float = CLUSTER_TOL

    @property
    def abscissa(self) -> float:
        return float(self.roots.real.max()) if self.roots.size else -np.inf

    @property
    def rightmost(self):
        """Roots in the rightmost cluster."""
        if not self.roots.size:
            return self.roots
        return self.roots[self.multiplicity_labels == self.multiplicity_labels[0]]

    @property
    def multiplicity_labels(self):
        return _clusters(self.roots, self.cluster_tol)

    def clusters(self):
        """``(center, multiplicity)`` per cluster, rightmost first."""
        labels = self.multiplicity_labels
        out = []
        for lab in dict.fromkeys(labels):
            members = self.roots[labels == lab]
            out.append((complex(members.mean()), int(self.multiplicity[labels == lab][0])))
        return out


def _disc_eigs(sys, N):
    d = discretize(sys, N, reduced=True)
    try:
        ev = scipy.linalg.eigvals(d.A, d.E, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigSolverFailure(str(exc)) from exc
    return ev[np.isfinite(ev) & (np.abs(ev) < 1e12)]


def _corrected(sys, cand, r_min, near):
    """Newton-corrected roots in the closed upper half plane plus a count per root.

    Raw eigenvalues that correct onto an already found root add to its count
    when they started within ``near`` of it (a split multiple root); complex
    roots only count candidates from the upper half plane.
    """
    roots, res, count = [], [], []
    for lam0 in cand[np.argsort(-cand.real)]:
        if lam0.imag < -near * max(1.0, abs(lam0)):
            continue  # mirrored from the upper half plane
        rc = correct_root(sys, lam0)
        lam = rc.lam
        if not rc.converged or lam.real < r_min:
            continue
        if abs(lam.imag) <= 1e-10 * max(1.0, abs(lam)):
            lam = complex(lam.real, 0.0)
        if lam.imag < 0:
            lam = lam.conjugate()
        lower = lam0.imag < -1e-12
        hit = [k for k, r in enumerate(roots) if abs(lam - r) <= MERGE_TOL * max(1.0, abs(lam))]
        if hit:
            k = hit[0]
            start = lam0.conjugate() if lower else lam0
            if (not lower or roots[k].imag == 0.0) and abs(start - roots[k]) <= near * max(1.0, abs(lam)):
                count[k] += 1
            continue
        if lower and lam.imag != 0.0:
            continue  # its conjugate is reached from the upper half plane
        roots.append(lam)
        res.append(rc.residual)
        count.append(1)
    full, fres, fcount = [], [], []
    for lam, r, c in zip(roots, res, count):
        full.append(lam)
        fres.append(r)
        fcount.append(c)
        if lam.imag != 0.0:
            full.append(lam.conjugate())
            fres.append(r)
            fcount.append(c)
    full = np.array(full, complex)
    idx = np.lexsort((-full.imag, -full.real))
    return full[idx], np.array(fres)[idx], np.array(fcount, dtype=int)[idx]


def _same_roots(a, b, tol):
    if a.size != b.size:
        return False
    return all(np.min(np.abs(b - x)) <= tol * max(1.0, abs(x)) for x in a)


def char_roots(
    sys: DdaeSystem, r_min: float = -1.0, order=None, cluster_tol=CLUSTER_TOL, rightmost_only=False
) -> SpectrumResult:
    """Characteristic roots with ``Re >= r_min``.

    Eigenvalues of the spectral discretization are corrected by Newton's
    method on the delay system itself.  With ``order=None`` the
    discretization order is doubled (20 .. 320) until the corrected root
    set stops changing (only the rightmost root if ``rightmost_only``).
    """
    if not np.isfinite(r_min):
        raise ValueError("r_min must be finite")
    margin = 0.1 * (1.0 + abs(r_min))
    orders = (int(order),) if order is not None else ORDERS
    prev = None
    converged = order is not None
    for N in orders:
        ev = _disc_eigs(sys, N)
        roots, res, counts = _corrected(sys, ev[ev.real >= r_min - margin], r_min, max(cluster_tol, 1e-3))
        if rightmost_only:
            same = prev is not None and prev.size == roots.size == 0
            if prev is not None and prev.size and roots.size:
                same = abs(prev[0].real - roots[0].real) <= MERGE_TOL * max(1.0, abs(roots[0]))
        else:
            same = prev is not None and _same_roots(roots, prev, max(MERGE_TOL, cluster_tol))
        if same:
            converged = True
            break
        prev = roots
    labels = _clusters(roots, cluster_tol)
    mult = np.array([np.sum(counts[labels == lab]) for lab in labels], dtype=int)
    return SpectrumResult(roots, res, mult, float(r_min), N, converged, cluster_tol)


def spectral_abscissa(sys: DdaeSystem, r_min=-1.0, floor=-10.0, order=None, cluster_tol=CLUSTER_TOL):
    """Rightmost root; ``r_min`` is lowered (doubling) until a root is found.

    Returns the :class:`SpectrumResult`; its ``abscissa`` is ``-inf`` if no
    root lies right of ``floor``.
    """
    while True:
        spec = char_roots(sys, r_min, order=order, cluster_tol=cluster_tol, rightmost_only=True)
        if spec.roots.size or r_min <= floor:
            return spec
        r_min = max(2.0 * r_min, floor)


def effective_delays(part: PartitionedSystem, tol=None) -> np.ndarray:
    """Indices ``i >= 1`` whose delayed term couples the algebraic part to itself."""
    out = []
    for i in range(1, len(part.A22)):
        A22 = part.A22[i]
        if not A22.size:
            continue
        thr = (1e3 * np.finfo(float).eps if tol is None else tol) * max(np.linalg.norm(part.sys.A[i], 2), 1e-300)
        if np.max(np.abs(A22)) > thr:
            out.append(i)
    return np.array(out, dtype=int)


@dataclass(frozen=True)
class DifferencePeak:
    """Maximizer of the spectral radius of the delay-difference operator at ``c``."""

    c: float
    gamma: float
    theta: np.ndarray
    indices: np.ndarray
    mu: complex
    x: np.ndarray
    y: np.ndarray


class _DifferenceOperator:
    """``X(c, theta) = -(U^T A_0 V)^{-1} sum_i U^T A_i V e^{-c tau_i} e^{j theta_i}``.

    The first effective angle is pinned to zero since a common phase does
    not change the spectral radius.
    """

    def __init__(self, part, idx):
        self.idx = idx
        A0inv = np.linalg.inv(part.A22[0])
        self.F = np.array([-A0inv @ part.A22[i] for i in idx])
        self.tau = np.array([part.delays[i] for i in idx])

    def matrix(self, c, theta_free):
        theta = np.r_[0.0, theta_free]
        w = np.exp(-c * self.tau + 1j * theta)
        return np.tensordot(w, self.F, axes=1)

    def batch(self, c, thetas):
        thetas = np.column_stack([np.zeros(len(thetas)), thetas])
        w = np.exp(-c * self.tau)[None, :] * np.exp(1j * thetas)
        X = np.einsum("ki,iab->kab", w, self.F)
        return np.max(np.abs(np.linalg.eigvals(X)), axis=-1)

    def dominant(self, c, theta_free):
        X = self.matrix(c, theta_free)
        mu, yl, xr = scipy.linalg.eig(X, left=True, right=True)
        k = int(np.argmax(np.abs(mu)))
        return mu[k], xr[:, k], yl[:, k]

    def drho_dc(self, c, theta_free):
        """Derivative of the spectral radius in ``c`` at fixed angles."""
        mu, x, y = self.dominant(c, theta_free)
        w = np.exp(-c * self.tau + 1j * np.r_[0.0, theta_free])
        dX = np.tensordot(-self.tau * w, self.F, axes=1)
        dmu = np.vdot(y, dX @ x) / np.vdot(y, x)
        return float((np.conj(mu) * dmu).real / max(abs(mu), 1e-300))

    def rho(self, c, theta_free):
        return float(np.max(np.abs(np.linalg.eigvals(self.matrix(c, theta_free)))))

    def grad_theta(self, c, theta_free):
        mu, x, y = self.dominant(c, theta_free)
        theta = np.r_[0.0, theta_free]
        w = np.exp(-c * self.tau + 1j * theta)
        denom = np.vdot(y, x)
        g = np.empty(theta_free.size)
        for k in range(1, len(self.idx)):
            dmu = np.vdot(y, 1j * w[k] * self.F[k] @ x) / denom
            g[k - 1] = (np.conj(mu) * dmu).real / max(abs(mu), 1e-300)
        return g

    def peak(self, c, density):
        d = len(self.idx) - 1
        th, val, _, _ = torus_maximize(
            lambda T: self.batch(c, T),
            lambda t: self.rho(c, t),
            lambda t: self.grad_theta(c, t),
            d,
            density,
        )
        return th, val


def difference_peak(part: PartitionedSystem, c: float, density=24, indices=None) -> DifferencePeak:
    """Torus maximum of the spectral radius of the difference operator at ``c``."""
    idx = effective_delays(part) if indices is None else np.asarray(indices, dtype=int)
    if idx.size == 0:
        return DifferencePeak(c, 0.0, np.zeros(0), idx, 0j, np.zeros(0), np.zeros(0))
    op = _DifferenceOperator(part, idx)
    th, val = op.peak(c, density)
    mu, x, y = op.dominant(c, th)
    return DifferencePeak(float(c), float(val), np.r_[0.0, th], idx, complex(mu), x, y)


def difference_abscissa(part: PartitionedSystem, density=24, tol=1e-6) -> float:
    """Exponential growth bound ``c_D`` of the delay-difference part.

    ``c_D`` solves ``gamma(c) = 1`` where ``gamma(c)`` is the torus maximum
    of the spectral radius of the difference operator with weights
    ``exp(-c tau_i)``; ``gamma`` is decreasing in ``c``.  Bisection to
    ``tol`` is followed by safeguarded Newton steps, so the root is
    accurate to rounding level.  Returns ``-inf``
    when there is no delayed algebraic coupling.
    """
    idx = effective_delays(part)
    if idx.size == 0:
        return -np.inf
    op = _DifferenceOperator(part, idx)
    gamma = lambda c: op.peak(c, density)[1]
    c_floor = -700.0 / op.tau.max()
    lo, hi = -1.0, 1.0
    g_hi = gamma(hi)
    while g_hi >= 1.0:
        lo, hi = hi, 2.0 * hi + 1.0
        g_hi = gamma(hi)
    g_lo = gamma(lo)
    while g_lo <= 1.0:
        if lo <= c_floor:
            return -np.inf
        hi = lo
        lo = max(2.0 * lo - 1.0, c_floor)
        g_lo = gamma(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gamma(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    # safeguarded Newton on gamma(c) = 1; d gamma / dc is the c-derivative at the maximizer
    c = 0.5 * (lo + hi)
    for _ in range(30):
        th, val = op.peak(c, density)
        if abs(val - 1.0) <= 4 * np.finfo(float).eps:
            break
        if val > 1.0:
            lo = c
        else:
            hi = c
        d = op.drho_dc(c, th)
        step = (val - 1.0) / d if d < 0 else np.inf
        c_new = c - step
        if not lo < c_new < hi:
            c_new = 0.5 * (lo + hi)
        if abs(c_new - c) <= 1e-15 * max(1.0, abs(c)) or hi - lo <= 1e-15 * max(1.0, abs(c)):
            c = c_new
            break
        c = c_new
    return c


@dataclass(frozen=True, eq=False)
class StrongStabilityReport:
    alpha: float
    c_D: float
    spectrum: SpectrumResult

    @property
    def robust_abscissa(self) -> float:
        return max(self.alpha, self.c_D)

    @property
    def strongly_stable(self) -> bool:
        return self.robust_abscissa < 0

    @property
    def branch(self) -> str:
        return "difference" if self.c_D >= self.alpha else "spectral"


def robust_spectral_abscissa(sys: DdaeSystem, r_min=-1.0, order=None, part=None, cluster_tol=CLUSTER_TOL):
    """``max(spectral abscissa, c_D)``; negative iff strongly exponentially stable."""
    part = partition(sys) if part is None else part
    c_D = difference_abscissa(part)
    spec = spectral_abscissa(sys, r_min=r_min, order=order, cluster_tol=cluster_tol)
    return StrongStabilityReport(spec.abscissa, c_D, spec)


def is_strongly_stable(sys: DdaeSystem, **kw) -> bool:
    return robust_spectral_abscissa(sys, **kw).strongly_stable
