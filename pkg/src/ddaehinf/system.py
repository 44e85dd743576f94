"""DDAE data model, null-space partition and closed-loop assembly.

A system is stored in the standard form

    E x'(t) = A_0 x(t) + sum_i A_i x(t - tau_i) + B w(t)
       z(t) = C x(t)

Everything here is immutable; every operation returns a new object.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._linalg import EPS, SINGULAR_RCOND, rcond
from .errors import AssumptionViolation, DimensionMismatch

__all__ = [
    "DdaeSystem",
    "PartitionedSystem",
    "PlantBlock",
    "ControllerBlock",
    "ParameterizedSystem",
    "partition",
    "interconnect",
    "eliminate_feedthrough",
    "eliminate_io_delays",
    "instantiate",
    "closed_loop_parameterization",
]


def _frozen(a, shape=None, name="matrix"):
    a = np.array(a, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(1, -1) if shape is None or shape[0] == 1 else a.reshape(-1, 1)
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be two-dimensional, got shape {a.shape}")
    if shape is not None and a.shape != tuple(shape):
        raise DimensionMismatch(f"{name} has shape {a.shape}, expected {tuple(shape)}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    a.setflags(write=False)
    return a


def _or_zeros(a, shape, name):
    if a is None:
        return _frozen(np.zeros(shape), shape, name)
    a = np.asarray(a, dtype=float)
    if a.size == 0 and a.shape != tuple(shape):
        a = np.zeros(shape)
    return _frozen(a, shape, name)


@dataclass(frozen=True, eq=False)
class DdaeSystem:
    """Delay differential algebraic system ``E x' = sum_i A_i x(t-tau_i) + B w, z = C x``.

    ``A[0]`` is the undelayed term and ``delays[0] == 0``; the remaining
    delays are strictly positive and strictly increasing.  Use
    :meth:`from_terms` to build a system from an unordered list of
    ``(A_i, tau_i)`` pairs.
    """

    E: np.ndarray
    A: tuple
    delays: tuple
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        E = _frozen(self.E, name="E")
        n = E.shape[0]
        if E.shape != (n, n):
            raise DimensionMismatch(f"E must be square, got {E.shape}")
        A = tuple(_frozen(a, (n, n), f"A[{i}]") for i, a in enumerate(self.A))
        delays = tuple(float(t) for t in self.delays)
        if not A or len(A) != len(delays):
            raise DimensionMismatch("need one delay per A-term and at least A_0")
        if delays[0] != 0.0:
            raise ValueError("the first term must be the undelayed A_0 (delay 0)")
        if any(not np.isfinite(t) for t in delays) or any(
            b <= a for a, b in zip(delays, delays[1:])
        ):
            raise ValueError("delays must be finite, positive and strictly increasing")
        B = _frozen(self.B, name="B")
        C = _frozen(self.C, name="C")
        if B.shape[0] != n:
            raise DimensionMismatch(f"B has {B.shape[0]} rows, system order is {n}")
        if C.shape[1] != n:
            raise DimensionMismatch(f"C has {C.shape[1]} columns, system order is {n}")
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @classmethod
    def from_terms(cls, E, terms: Iterable, B, C) -> "DdaeSystem":
        """Build from ``(A_i, tau_i)`` pairs; terms sharing a delay are summed."""
        E = np.asarray(E, dtype=float)
        n = E.shape[0]
        acc = {0.0: np.zeros((n, n))}
        for A_i, tau in terms:
            tau = float(tau)
            if tau < 0:
                raise ValueError(f"negative delay {tau}")
            A_i = np.asarray(A_i, dtype=float)
            if A_i.shape != (n, n):
                raise DimensionMismatch(f"A term has shape {A_i.shape}, expected {(n, n)}")
            acc[tau] = acc.get(tau, 0.0) + A_i
        delays = sorted(acc)
        return cls(E, tuple(acc[t] for t in delays), tuple(delays), B, C)

    @property
    def n(self) -> int:
        return self.E.shape[0]

    @property
    def n_w(self) -> int:
        return self.B.shape[1]

    @property
    def n_z(self) -> int:
        return self.C.shape[0]

    @property
    def m(self) -> int:
        """Number of delayed terms."""
        return len(self.delays) - 1

    @property
    def tau_max(self) -> float:
        return self.delays[-1]

    def terms(self):
        return list(zip(self.A, self.delays))

    def with_delays(self, delays: Sequence[float]) -> "DdaeSystem":
        """Same matrices with the positive delays ``tau_1..tau_m`` replaced."""
        if len(delays) != self.m:
            raise DimensionMismatch(f"expected {self.m} delays, got {len(delays)}")
        return DdaeSystem.from_terms(
            self.E, zip(self.A, (0.0, *delays)), self.B, self.C
        )

    def __repr__(self):
        return (
            f"DdaeSystem(n={self.n}, n_w={self.n_w}, n_z={self.n_z}, "
            f"delays={self.delays})"
        )


@dataclass(frozen=True, eq=False)
class PartitionedSystem:
    """Null-space bases of ``E`` and the block matrices of the coupled form."""

    sys: DdaeSystem
    U: np.ndarray
    V: np.ndarray
    U_perp: np.ndarray
    V_perp: np.ndarray
    E11: np.ndarray
    A11: tuple
    A12: tuple
    A21: tuple
    A22: tuple
    B1: np.ndarray
    B2: np.ndarray
    C1: np.ndarray
    C2: np.ndarray

    @property
    def nu(self) -> int:
        return self.U.shape[1]

    @property
    def delays(self):
        return self.sys.delays

    def A22_at(self, phases):
        """``U^T A_0 V + sum_i U^T A_i V * phases[i-1]`` for complex phase factors.

        ``phases`` may carry leading batch axes: shape ``(..., m)``.
        """
        phases = np.asarray(phases, dtype=complex)
        out = np.broadcast_to(self.A22[0], phases.shape[:-1] + self.A22[0].shape)
        out = out.astype(complex)
        for i, A in enumerate(self.A22[1:]):
            out = out + phases[..., i, None, None] * A
        return out


def partition(sys: DdaeSystem, rank_tol: float | None = None) -> PartitionedSystem:
    """Split ``sys`` into coupled delay differential and delay difference parts.

    The bases come from the SVD of ``E``.  Raises
    :class:`AssumptionViolation` when ``U^T A_0 V`` is singular.
    """
    P, s, Qh = np.linalg.svd(sys.E)
    Q = Qh.T
    if rank_tol is None:
        rank_tol = sys.n * EPS * (s[0] if s.size else 0.0)
    r = int(np.sum(s > rank_tol))
    U_perp, U = P[:, :r], P[:, r:]
    V_perp, V = Q[:, :r], Q[:, r:]
    A11 = tuple(U_perp.T @ A @ V_perp for A in sys.A)
    A12 = tuple(U_perp.T @ A @ V for A in sys.A)
    A21 = tuple(U.T @ A @ V_perp for A in sys.A)
    A22 = tuple(U.T @ A @ V for A in sys.A)
    if U.shape[1] and rcond(A22[0]) < SINGULAR_RCOND:
        raise AssumptionViolation(
            "U^T A_0 V is singular; the algebraic part is not index one "
            f"(rcond={rcond(A22[0]):.3e})"
        )
    return PartitionedSystem(
        sys=sys,
        U=U,
        V=V,
        U_perp=U_perp,
        V_perp=V_perp,
        E11=U_perp.T @ sys.E @ V_perp,
        A11=A11,
        A12=A12,
        A21=A21,
        A22=A22,
        B1=U_perp.T @ sys.B,
        B2=U.T @ sys.B,
        C1=sys.C @ V_perp,
        C2=sys.C @ V,
    )


def eliminate_feedthrough(sys: DdaeSystem, D) -> DdaeSystem:
    """Absorb a direct feedthrough ``z = C x + D w`` with a slack variable.

    The new state is ``[x; g]`` with the algebraic constraint ``0 = -g + w``.
    """
    D = _frozen(D, (sys.n_z, sys.n_w), "D")
    n, nw = sys.n, sys.n_w
    E = np.zeros((n + nw, n + nw))
    E[:n, :n] = sys.E
    terms = []
    for A, tau in sys.terms():
        Ab = np.zeros((n + nw, n + nw))
        Ab[:n, :n] = A
        if tau == 0.0:
            Ab[n:, n:] = -np.eye(nw)
        terms.append((Ab, tau))
    B = np.vstack([sys.B, np.eye(nw)])
    C = np.hstack([sys.C, D])
    return DdaeSystem.from_terms(E, terms, B, C)


def eliminate_io_delays(
    sys: DdaeSystem,
    delayed_inputs: Sequence = (),
    delayed_outputs: Sequence = (),
) -> DdaeSystem:
    """Bring delayed inputs and outputs into standard form with slack variables.

    ``delayed_inputs`` holds pairs ``(B_d, tau)`` for terms ``B_d w(t - tau)``
    in the state equation; ``delayed_outputs`` holds ``(C_d, tau)`` for terms
    ``C_d x(t - tau)`` in the output equation.  An input slack ``g_w = w``
    carries ``B`` and every ``B_d``; an output slack ``g_z`` collects the
    delayed output terms.
    """
    out = sys
    if delayed_inputs:
        n, nw = out.n, out.n_w
        N = n + nw
        E = np.zeros((N, N))
        E[:n, :n] = out.E
        terms = []
        for A, tau in out.terms():
            Ab = np.zeros((N, N))
            Ab[:n, :n] = A
            if tau == 0.0:
                Ab[:n, n:] = out.B
                Ab[n:, n:] = -np.eye(nw)
            terms.append((Ab, tau))
        for B_d, tau in delayed_inputs:
            B_d = _frozen(B_d, (n, nw), "delayed input matrix")
            if tau <= 0:
                raise ValueError("delayed input requires a positive delay")
            Ab = np.zeros((N, N))
            Ab[:n, n:] = B_d
            terms.append((Ab, tau))
        B = np.vstack([np.zeros((n, nw)), np.eye(nw)])
        C = np.hstack([out.C, np.zeros((out.n_z, nw))])
        out = DdaeSystem.from_terms(E, terms, B, C)
    if delayed_outputs:
        n0 = sys.n
        n, nz = out.n, out.n_z
        N = n + nz
        E = np.zeros((N, N))
        E[:n, :n] = out.E
        terms = []
        for A, tau in out.terms():
            Ab = np.zeros((N, N))
            Ab[:n, :n] = A
            if tau == 0.0:
                Ab[n:, n:] = -np.eye(nz)
            terms.append((Ab, tau))
        for C_d, tau in delayed_outputs:
            C_d = _frozen(C_d, (nz, n0), "delayed output matrix")
            if tau <= 0:
                raise ValueError("delayed output requires a positive delay")
            Ab = np.zeros((N, N))
            Ab[n:, :n0] = C_d
            terms.append((Ab, tau))
        B = np.vstack([out.B, np.zeros((nz, out.n_w))])
        C = np.hstack([out.C, np.eye(nz)])
        out = DdaeSystem.from_terms(E, terms, B, C)
    return out


@dataclass(frozen=True, eq=False)
class PlantBlock:
    """Generalized plant with delayed control input and measured output.

        E x' = A x + sum_i A_i x(t - tau_i) + B_w w + B_u u(t - input_delay)
           z = C_z x + D_zw w + D_zu u(t - input_delay)
           y = C_y x + D_yw w + D_yu u(t - input_delay)

    The controller sees ``y(t - output_delay)``.
    """

    A: np.ndarray
    B_w: np.ndarray
    B_u: np.ndarray
    C_z: np.ndarray
    C_y: np.ndarray
    D_zw: np.ndarray | None = None
    D_zu: np.ndarray | None = None
    D_yw: np.ndarray | None = None
    D_yu: np.ndarray | None = None
    E: np.ndarray | None = None
    state_delays: tuple = ()
    input_delay: float = 0.0
    output_delay: float = 0.0

    def __post_init__(self):
        A = _frozen(self.A, name="A")
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionMismatch(f"A must be square, got {A.shape}")
        B_w = _frozen(self.B_w, name="B_w") if np.size(self.B_w) else np.zeros((n, 0))
        B_u = _frozen(self.B_u, name="B_u") if np.size(self.B_u) else np.zeros((n, 0))
        C_z = _frozen(self.C_z, name="C_z") if np.size(self.C_z) else np.zeros((0, n))
        C_y = _frozen(self.C_y, name="C_y") if np.size(self.C_y) else np.zeros((0, n))
        for name, M, rows in (("B_w", B_w, True), ("B_u", B_u, True), ("C_z", C_z, False), ("C_y", C_y, False)):
            if (M.shape[0] if rows else M.shape[1]) != n:
                raise DimensionMismatch(f"{name} has shape {M.shape}, incompatible with n={n}")
        nw, nu, nz, ny = B_w.shape[1], B_u.shape[1], C_z.shape[0], C_y.shape[0]
        set_ = lambda k, v: object.__setattr__(self, k, v)
        set_("A", A)
        set_("B_w", B_w)
        set_("B_u", B_u)
        set_("C_z", C_z)
        set_("C_y", C_y)
        set_("D_zw", _or_zeros(self.D_zw, (nz, nw), "D_zw"))
        set_("D_zu", _or_zeros(self.D_zu, (nz, nu), "D_zu"))
        set_("D_yw", _or_zeros(self.D_yw, (ny, nw), "D_yw"))
        set_("D_yu", _or_zeros(self.D_yu, (ny, nu), "D_yu"))
        set_("E", _or_zeros(np.eye(n) if self.E is None else self.E, (n, n), "E"))
        set_(
            "state_delays",
            tuple((_frozen(Ai, (n, n), "delayed A"), float(t)) for Ai, t in self.state_delays),
        )
        if any(t <= 0 for _, t in self.state_delays):
            raise ValueError("state delays must be positive")
        if self.input_delay < 0 or self.output_delay < 0:
            raise ValueError("input/output delays must be nonnegative")
        set_("input_delay", float(self.input_delay))
        set_("output_delay", float(self.output_delay))

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def n_w(self):
        return self.B_w.shape[1]

    @property
    def n_u(self):
        return self.B_u.shape[1]

    @property
    def n_z(self):
        return self.C_z.shape[0]

    @property
    def n_y(self):
        return self.C_y.shape[0]


CONTROLLER_FIELDS = ("A_K", "B_K", "C_K", "D_K")


@dataclass(frozen=True, eq=False)
class ControllerBlock:
    """Dynamic output-feedback controller of order ``order``.

        x_c' = A_K x_c + B_K y,   u = C_K x_c + D_K y

    With ``order == 0`` only the static gain ``D_K`` remains.  ``free`` maps
    field names to boolean masks (``True`` = tunable); missing fields are
    fully free.  Fixed entries keep the values stored in the matrices.
    """

    order: int
    n_u: int
    n_y: int
    A_K: np.ndarray | None = None
    B_K: np.ndarray | None = None
    C_K: np.ndarray | None = None
    D_K: np.ndarray | None = None
    free: Mapping | None = None

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("controller order must be nonnegative")
        nc, nu, ny = self.order, self.n_u, self.n_y
        shapes = {"A_K": (nc, nc), "B_K": (nc, ny), "C_K": (nu, nc), "D_K": (nu, ny)}
        masks = {}
        free = dict(self.free or {})
        unknown = set(free) - set(CONTROLLER_FIELDS)
        if unknown:
            raise ValueError(f"unknown controller fields in mask: {sorted(unknown)}")
        for name, shape in shapes.items():
            object.__setattr__(self, name, _or_zeros(getattr(self, name), shape, name))
            mask = free.get(name)
            mask = np.ones(shape, bool) if mask is None else np.array(mask, dtype=bool).reshape(shape)
            mask.setflags(write=False)
            masks[name] = mask
        object.__setattr__(self, "free", masks)

    @classmethod
    def static(cls, D_K, free=None) -> "ControllerBlock":
        D_K = np.atleast_2d(np.asarray(D_K, dtype=float))
        return cls(0, D_K.shape[0], D_K.shape[1], D_K=D_K, free=None if free is None else {"D_K": free})

    def matrices(self):
        return {name: getattr(self, name) for name in CONTROLLER_FIELDS}

    def free_entries(self):
        """``(field, i, j)`` for every tunable entry, in parameter-vector order."""
        out = []
        for name in CONTROLLER_FIELDS:
            for i, j in zip(*np.nonzero(self.free[name])):
                out.append((name, int(i), int(j)))
        return out

    @property
    def n_p(self) -> int:
        return len(self.free_entries())

    def parameters(self) -> np.ndarray:
        return np.array([getattr(self, f)[i, j] for f, i, j in self.free_entries()])

    def with_parameters(self, p) -> "ControllerBlock":
        p = np.asarray(p, dtype=float).ravel()
        entries = self.free_entries()
        if p.size != len(entries):
            raise DimensionMismatch(f"expected {len(entries)} parameters, got {p.size}")
        mats = {k: np.array(v) for k, v in self.matrices().items()}
        for (f, i, j), val in zip(entries, p):
            mats[f][i, j] = val
        return ControllerBlock(self.order, self.n_u, self.n_y, free=self.free, **mats)


def _closed_loop(plant: PlantBlock, mats, order: int, feedback_delay: float):
    """Assemble the closed loop for the given controller matrices.

    The delay set and slack structure depend only on the plant, so the
    result is affine in ``mats`` with a fixed layout.
    """
    nx, nu, ny, nc = plant.n, plant.n_u, plant.n_y, order
    N = nx + nu + ny + nc
    ix = slice(0, nx)
    iu = slice(nx, nx + nu)
    iy = slice(nx + nu, nx + nu + ny)
    ic = slice(nx + nu + ny, N)
    # equation rows: state, measurement, control law, controller state
    rx = ix
    ry = slice(nx, nx + ny)
    ru = slice(nx + ny, nx + ny + nu)
    rc = ic
    h_u = plant.input_delay
    h_y = plant.output_delay + float(feedback_delay)
    if feedback_delay < 0:
        raise ValueError("feedback delay must be nonnegative")

    terms = defaultdict(lambda: np.zeros((N, N)))
    E = np.zeros((N, N))
    E[rx, ix] = plant.E
    E[rc, ic] = np.eye(nc)
    terms[0.0][rx, ix] += plant.A
    for A_i, tau in plant.state_delays:
        terms[tau][rx, ix] += A_i
    terms[h_u][rx, iu] += plant.B_u
    terms[0.0][ry, ix] += plant.C_y
    terms[h_u][ry, iu] += plant.D_yu
    terms[0.0][ry, iy] -= np.eye(ny)
    terms[0.0][ru, iu] += np.eye(nu)
    terms[0.0][ru, ic] -= mats["C_K"]
    terms[h_y][ru, iy] -= mats["D_K"]
    terms[0.0][rc, ic] += mats["A_K"]
    terms[h_y][rc, iy] += mats["B_K"]

    B = np.zeros((N, plant.n_w))
    B[rx] = plant.B_w
    B[ry] = plant.D_yw
    C = np.zeros((plant.n_z, N))
    C[:, ix] = plant.C_z
    delayed_out = []
    if np.any(plant.D_zu):
        if h_u == 0.0:
            C[:, iu] += plant.D_zu
        else:
            C_d = np.zeros((plant.n_z, N))
            C_d[:, iu] = plant.D_zu
            delayed_out.append((C_d, h_u))
    sys = DdaeSystem.from_terms(E, [(A, t) for t, A in terms.items()], B, C)
    if delayed_out:
        sys = eliminate_io_delays(sys, delayed_outputs=delayed_out)
    if np.any(plant.D_zw):
        sys = eliminate_feedthrough(sys, plant.D_zw)
    return sys


def interconnect(plant: PlantBlock, k: ControllerBlock, feedback_delay: float = 0.0) -> DdaeSystem:
    """Closed loop of ``plant`` and ``k`` in standard DDAE form.

    The augmented state is ``[x; u; y; x_c]`` (plus slack variables for a
    direct feedthrough or a delayed feedthrough into ``z``).  The rows are
    ordered state / measurement / control law / controller state, so for
    a static gain with a delayed measurement this reproduces the textbook
    three-block layout.
    """
    if (k.n_u, k.n_y) != (plant.n_u, plant.n_y):
        raise DimensionMismatch(
            f"controller is {k.n_u}x{k.n_y} but plant has n_u={plant.n_u}, n_y={plant.n_y}"
        )
    return _closed_loop(plant, k.matrices(), k.order, feedback_delay)


@dataclass(frozen=True, eq=False)
class ParameterizedSystem:
    """DDAE whose matrices depend affinely on a parameter vector ``p``.

    ``dA[k, i]`` is the derivative of ``A_i`` with respect to ``p_k``;
    ``dB[k]`` and ``dC[k]`` likewise.  ``E`` and the delays are fixed.
    """

    base: DdaeSystem
    dA: np.ndarray
    dB: np.ndarray
    dC: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        b = self.base
        dA = np.array(self.dA, dtype=float)
        n_p = dA.shape[0] if dA.ndim == 4 else 0
        if n_p == 0:
            dA = np.zeros((0, b.m + 1, b.n, b.n))
        dB = np.array(self.dB, dtype=float).reshape(n_p, b.n, b.n_w)
        dC = np.array(self.dC, dtype=float).reshape(n_p, b.n_z, b.n)
        if dA.shape != (n_p, b.m + 1, b.n, b.n):
            raise DimensionMismatch(f"dA has shape {dA.shape}, expected {(n_p, b.m + 1, b.n, b.n)}")
        for a in (dA, dB, dC):
            a.setflags(write=False)
        object.__setattr__(self, "dA", dA)
        object.__setattr__(self, "dB", dB)
        object.__setattr__(self, "dC", dC)
        names = tuple(self.names) or tuple(f"p{k}" for k in range(n_p))
        if len(names) != n_p:
            raise DimensionMismatch("one name per parameter required")
        object.__setattr__(self, "names", names)

    @property
    def n_p(self) -> int:
        return self.dA.shape[0]

    @classmethod
    def constant(cls, sys: DdaeSystem) -> "ParameterizedSystem":
        return cls(sys, np.zeros((0, sys.m + 1, sys.n, sys.n)), np.zeros((0, sys.n, sys.n_w)), np.zeros((0, sys.n_z, sys.n)))


def instantiate(psys: ParameterizedSystem, p) -> DdaeSystem:
    """Evaluate the affine parameterization at ``p`` (exact)."""
    p = np.asarray(p, dtype=float).ravel()
    if p.size != psys.n_p:
        raise DimensionMismatch(f"expected {psys.n_p} parameters, got {p.size}")
    b = psys.base
    A = np.array(b.A) + np.tensordot(p, psys.dA, axes=1)
    B = b.B + np.tensordot(p, psys.dB, axes=1)
    C = b.C + np.tensordot(p, psys.dC, axes=1)
    return DdaeSystem(b.E, tuple(A), b.delays, B, C)


def closed_loop_parameterization(
    plant: PlantBlock, k: ControllerBlock, feedback_delay: float = 0.0
) -> ParameterizedSystem:
    """Closed loop as an affine function of the free controller entries.

    The base system holds the fixed entries of ``k`` with every free entry
    set to zero; parameter order follows :meth:`ControllerBlock.free_entries`.
    """
    if (k.n_u, k.n_y) != (plant.n_u, plant.n_y):
        raise DimensionMismatch("controller and plant dimensions differ")
    entries = k.free_entries()
    fixed = {name: np.where(k.free[name], 0.0, getattr(k, name)) for name in CONTROLLER_FIELDS}
    base = _closed_loop(plant, fixed, k.order, feedback_delay)
    zero = _closed_loop(plant, {f: np.zeros_like(v) for f, v in fixed.items()}, k.order, feedback_delay)
    dA, dB, dC, names = [], [], [], []
    for f, i, j in entries:
        unit = {name: np.zeros_like(v) for name, v in fixed.items()}
        unit[f][i, j] = 1.0
        s = _closed_loop(plant, unit, k.order, feedback_delay)
        dA.append(np.array(s.A) - np.array(zero.A))
        dB.append(s.B - zero.B)
        dC.append(s.C - zero.C)
        names.append(f"{f}[{i},{j}]")
    n_p = len(entries)
    return ParameterizedSystem(
        base,
        np.array(dA).reshape(n_p, base.m + 1, base.n, base.n),
        np.array(dB).reshape(n_p, base.n, base.n_w),
        np.array(dC).reshape(n_p, base.n_z, base.n),
        tuple(names),
    )
