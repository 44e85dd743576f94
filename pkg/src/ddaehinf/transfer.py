"""Evaluation of the transfer function, the asymptotic transfer function and
their derivatives; singular-value sweeps along the imaginary axis."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._linalg import SINGULAR_RCOND, rcond, sigma_max
from .errors import DimensionMismatch, SingularAtFrequency, SingularOnTorus
from .system import DdaeSystem, ParameterizedSystem, PartitionedSystem, instantiate

__all__ = [
    "CharacteristicMatrixEval",
    "FrequencyResponse",
    "char_matrix",
    "eval_T",
    "eval_T_blocks",
    "eval_Ta_torus",
    "eval_Ta_lambda",
    "eval_dT",
    "eval_dT_dp",
    "sigma_sweep",
    "sigma_T_batch",
    "sigma_Ta_batch",
    "default_grid",
]

_CHUNK = 20000


@dataclass(frozen=True, eq=False)
class CharacteristicMatrixEval:
    lam: complex
    M: np.ndarray
    M_lam: np.ndarray


def char_matrix(sys: DdaeSystem, lam: complex) -> CharacteristicMatrixEval:
    """``M(lam) = lam E - sum_i A_i exp(-lam tau_i)`` and its lambda-derivative."""
    lam = complex(lam)
    M = lam * sys.E.astype(complex)
    M_lam = sys.E.astype(complex)
    for A, tau in zip(sys.A, sys.delays):
        e = np.exp(-lam * tau)
        M = M - A * e
        M_lam = M_lam + tau * A * e
    return CharacteristicMatrixEval(lam, M, M_lam)


def _factor(M, lam):
    if M.shape[0] and rcond(M) < SINGULAR_RCOND:
        raise SingularAtFrequency(f"characteristic matrix singular at lambda={lam}", lam)
    return scipy.linalg.lu_factor(M, check_finite=False)


def eval_T(sys: DdaeSystem, lam: complex) -> np.ndarray:
    """``T(lam) = C M(lam)^{-1} B``."""
    cm = char_matrix(sys, lam)
    lu = _factor(cm.M, lam)
    return sys.C @ scipy.linalg.lu_solve(lu, sys.B.astype(complex))


def eval_T_blocks(part: PartitionedSystem, lam: complex) -> np.ndarray:
    """Same as :func:`eval_T` but through the partitioned block form."""
    lam = complex(lam)
    e = np.exp(-lam * np.asarray(part.delays))
    Akl = lambda blocks: sum(b * ei for b, ei in zip(blocks, e))
    top = np.hstack([lam * part.E11 - Akl(part.A11), -Akl(part.A12)])
    bot = np.hstack([-Akl(part.A21), -Akl(part.A22)])
    M = np.vstack([top, bot])
    rhs = np.vstack([part.B1, part.B2]).astype(complex)
    lu = _factor(M, lam)
    return np.hstack([part.C1, part.C2]) @ scipy.linalg.lu_solve(lu, rhs)


def _Ta_from_A22(part: PartitionedSystem, A22):
    if part.nu == 0:
        return np.zeros((part.sys.n_z, part.sys.n_w), complex)
    if rcond(A22) < SINGULAR_RCOND:
        raise SingularOnTorus("algebraic part singular: asymptotic transfer unbounded")
    return -part.C2 @ np.linalg.solve(A22, part.B2.astype(complex))


def eval_Ta_torus(part: PartitionedSystem, theta) -> np.ndarray:
    """Asymptotic transfer function with the delay phases replaced by free angles.

    ``theta`` has one entry per delayed term.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.size != part.sys.m:
        raise DimensionMismatch(f"need {part.sys.m} angles, got {theta.size}")
    try:
        return _Ta_from_A22(part, part.A22_at(np.exp(-1j * theta)))
    except SingularOnTorus as exc:
        exc.theta = theta
        raise


def eval_Ta_lambda(part: PartitionedSystem, lam: complex) -> np.ndarray:
    """``T_a(lam) = -C V (U^T A_0 V + sum_i U^T A_i V e^{-lam tau_i})^{-1} U^T B``."""
    tau = np.asarray(part.delays[1:])
    return _Ta_from_A22(part, part.A22_at(np.exp(-complex(lam) * tau)))


def eval_dT(sys: DdaeSystem, lam: complex) -> np.ndarray:
    """Derivative of ``T`` with respect to ``lam``: ``-C M^{-1} M_lam M^{-1} B``."""
    cm = char_matrix(sys, lam)
    lu = _factor(cm.M, lam)
    X = scipy.linalg.lu_solve(lu, sys.B.astype(complex))
    Y = scipy.linalg.lu_solve(lu, cm.M_lam @ X)
    return -sys.C @ Y


def eval_dT_dp(psys: ParameterizedSystem, p, lam: complex, k: int) -> np.ndarray:
    """Derivative of ``T(lam; p)`` with respect to the parameter ``p_k``."""
    if not 0 <= k < psys.n_p:
        raise IndexError(f"parameter index {k} out of range (n_p={psys.n_p})")
    sys = instantiate(psys, p)
    lam = complex(lam)
    cm = char_matrix(sys, lam)
    lu = _factor(cm.M, lam)
    dA = sum(dAi * np.exp(-lam * tau) for dAi, tau in zip(psys.dA[k], sys.delays))
    X = scipy.linalg.lu_solve(lu, sys.B.astype(complex))
    out = psys.dC[k] @ X
    out = out + sys.C @ scipy.linalg.lu_solve(lu, dA @ X)
    out = out + sys.C @ scipy.linalg.lu_solve(lu, psys.dB[k].astype(complex))
    return out


def dT_dp_all(sys: DdaeSystem, psys: ParameterizedSystem, lam: complex, u, v):
    """``Re(u^* dT/dp_k v)`` for every parameter, sharing one factorization."""
    lam = complex(lam)
    cm = char_matrix(sys, lam)
    lu = _factor(cm.M, lam)
    x = scipy.linalg.lu_solve(lu, sys.B @ v)  # M^{-1} B v
    y = scipy.linalg.lu_solve(lu, sys.C.T @ u.conj(), trans=1)  # M^{-T} C^T conj(u)
    yh = y  # u^* C M^{-1} = y^T
    e = np.exp(-lam * np.asarray(sys.delays))
    g = np.empty(psys.n_p)
    for k in range(psys.n_p):
        dA = np.tensordot(e, psys.dA[k], axes=1)
        val = u.conj() @ (psys.dC[k] @ x) + yh @ (dA @ x) + yh @ (psys.dB[k] @ v)
        g[k] = val.real
    return g


def _M_batch(sys: DdaeSystem, lams):
    lams = np.asarray(lams, dtype=complex)
    M = lams[:, None, None] * sys.E
    for A, tau in zip(sys.A, sys.delays):
        M = M - np.exp(-lams * tau)[:, None, None] * A
    return M


def sigma_T_batch(sys: DdaeSystem, omegas, full=False):
    """Singular values of ``T(j omega)`` on a grid; singular points give NaN."""
    omegas = np.asarray(omegas, dtype=float)
    k = min(sys.n_z, sys.n_w)
    out = np.empty((omegas.size, k)) if full else np.empty(omegas.size)
    for s in range(0, omegas.size, _CHUNK):
        w = omegas[s : s + _CHUNK]
        M = _M_batch(sys, 1j * w)
        bad = rcond(M) < SINGULAR_RCOND if sys.n else np.zeros(w.size, bool)
        M[bad] = np.eye(sys.n)
        X = np.linalg.solve(M, np.broadcast_to(sys.B.astype(complex), (w.size,) + sys.B.shape))
        T = sys.C @ X
        if full:
            sv = np.linalg.svd(T, compute_uv=False) if k else np.zeros((w.size, 0))
            sv[bad] = np.nan
            out[s : s + _CHUNK] = sv
        else:
            sv = sigma_max(T)
            sv[bad] = np.nan
            out[s : s + _CHUNK] = sv
    return out


def sigma_Ta_batch(part: PartitionedSystem, phases):
    """Largest singular value of the asymptotic transfer for a stack of phase vectors.

    ``phases`` has shape ``(K, m)`` and holds the complex factors
    ``exp(-j theta_i)`` (or ``exp(-lam tau_i)``).  Raises
    :class:`SingularOnTorus` if any point is singular.
    """
    phases = np.asarray(phases, dtype=complex)
    K = phases.shape[0]
    if part.nu == 0 or part.C2.shape[0] == 0 or part.B2.shape[1] == 0:
        return np.zeros(K)
    out = np.empty(K)
    for s in range(0, K, _CHUNK):
        A22 = part.A22_at(phases[s : s + _CHUNK])
        r = rcond(A22)
        if np.any(r < SINGULAR_RCOND):
            idx = s + int(np.argmin(r))
            raise SingularOnTorus(
                "algebraic part singular on the torus: strong H-infinity norm is infinite",
                theta=-np.angle(phases[idx]),
            )
        X = np.linalg.solve(A22, np.broadcast_to(part.B2.astype(complex), A22.shape[:1] + part.B2.shape))
        out[s : s + _CHUNK] = sigma_max(part.C2 @ X)
    return out


def default_grid(sys: DdaeSystem, num=2000, lo=None, hi=None):
    """Logarithmic frequency grid; defaults scale with the largest delay."""
    scale = 1.0 / sys.tau_max if sys.m else 1.0
    lo = 1e-3 * min(scale, 1.0) if lo is None else lo
    hi = 1e3 * max(scale, 1.0) if hi is None else hi
    return np.logspace(np.log10(lo), np.log10(hi), num)


@dataclass(frozen=True, eq=False)
class FrequencyResponse:
    """Largest singular value of ``T(j omega)`` over a strictly increasing grid.

    Frequencies where ``T`` is undefined (characteristic roots on the axis)
    are stored as NaN gaps.
    """

    omega: np.ndarray
    sigma: np.ndarray
    full: np.ndarray | None = None

    @property
    def peak(self):
        if np.all(np.isnan(self.sigma)):
            return (np.nan, np.nan)
        i = int(np.nanargmax(self.sigma))
        return float(self.omega[i]), float(self.sigma[i])

    @property
    def gaps(self):
        return np.flatnonzero(np.isnan(self.sigma))


def sigma_sweep(sys: DdaeSystem, omega=None, full=False) -> FrequencyResponse:
    """Singular-value plot data of ``T`` on ``omega`` (default: 2000-point log grid)."""
    omega = default_grid(sys) if omega is None else np.asarray(omega, dtype=float)
    if omega.size == 0:
        raise ValueError("frequency grid is empty")
    if np.any(np.diff(omega) <= 0):
        raise ValueError("frequency grid must be strictly increasing")
    if full:
        sv = sigma_T_batch(sys, omega, full=True)
        return FrequencyResponse(omega, sv[:, 0] if sv.shape[1] else np.zeros(omega.size), sv)
    return FrequencyResponse(omega, sigma_T_batch(sys, omega))
