"""Chebyshev spectral discretization of a DDAE into a finite descriptor system."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidOrder
from .system import DdaeSystem

__all__ = ["Discretization", "discretize", "delayed_components", "cheb", "lagrange_weights"]


def cheb(N):
    """Chebyshev differentiation matrix on the extremal points ``cos(pi k / N)``."""
    x = np.cos(np.pi * np.arange(N + 1) / N)
    c = np.r_[2.0, np.ones(N - 1), 2.0] * (-1.0) ** np.arange(N + 1)
    dX = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (dX + np.eye(N + 1))
    D -= np.diag(D.sum(axis=1))
    return D, x


def lagrange_weights(nodes, t):
    """Values ``l_k(t)`` of the Lagrange basis on Chebyshev extremal nodes.

    Uses the barycentric form with weights ``(-1)^k`` (halved at the ends).
    """
    N = len(nodes) - 1
    w = np.r_[0.5, np.ones(N - 1), 0.5] * (-1.0) ** np.arange(N + 1)
    d = t - np.asarray(nodes)
    hit = np.abs(d) <= 1e-14 * max(1.0, abs(t))
    if np.any(hit):
        out = np.zeros(N + 1)
        out[np.argmax(hit)] = 1.0
        return out
    q = w / d
    return q / q.sum()


@dataclass(frozen=True, eq=False)
class Discretization:
    """Descriptor quadruple ``(E_N, A_N, B_N, C_N)`` approximating a DDAE.

    ``mesh[0] == 0`` and ``mesh[N] == -tau_max``.  The unknowns are the
    state at node 0 followed by the history components ``history`` at nodes
    ``1..N``.  In the full layout ``history`` is every state component and
    the order is ``n (N+1)``.
    """

    sys: DdaeSystem
    N: int
    mesh: np.ndarray
    history: np.ndarray
    E: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    @property
    def size(self):
        return self.E.shape[0]

    def transfer(self, lam):
        """Transfer function of the finite quadruple at ``lam``."""
        X = np.linalg.solve(complex(lam) * self.E - self.A, self.B.astype(complex))
        return self.C @ X


def delayed_components(sys: DdaeSystem):
    """State components that enter some delayed term."""
    if not sys.m:
        return np.zeros(0, dtype=int)
    used = np.any(np.abs(np.array(sys.A[1:])) > 0, axis=(0, 1))
    return np.flatnonzero(used)


def discretize(sys: DdaeSystem, N: int, reduced: bool = False) -> Discretization:
    """Spectral discretization of order ``N`` (``N + 1`` mesh points).

    With ``reduced=True`` only the components that are actually delayed
    carry a history; the dropped blocks are decoupled from the input-output
    map and from the roots of the delay system, so the transfer function
    is unchanged.
    """
    if int(N) != N or N < 2:
        raise InvalidOrder(f"discretization order must be an integer >= 2, got {N}")
    N = int(N)
    n = sys.n
    tm = sys.tau_max if sys.m else 1.0
    D, x = cheb(N)
    mesh = (x - 1.0) * tm / 2.0
    mesh[0] = 0.0
    D = D * (2.0 / tm)
    S = delayed_components(sys) if reduced else np.arange(n)
    k = S.size
    size = n + k * N
    # column index of component S[j] at node l
    cols = np.empty((N + 1, k), dtype=int)
    cols[0] = S
    cols[1:] = n + np.arange(N * k).reshape(N, k)
    E = np.eye(size)
    E[:n, :n] = sys.E
    A = np.zeros((size, size))
    A[:n, :n] += sys.A[0]
    flat = cols.ravel()
    for A_i, tau in zip(sys.A[1:], sys.delays[1:]):
        row = lagrange_weights(mesh, -tau)
        A[:n, flat] += np.kron(row[None, :], A_i[:, S])
    A[n:, flat] += np.kron(D[1:, :], np.eye(k))
    B = np.zeros((size, sys.n_w))
    B[:n] = sys.B
    C = np.zeros((sys.n_z, size))
    C[:, :n] = sys.C
    return Discretization(sys, N, mesh, S, E, A, B, C)
