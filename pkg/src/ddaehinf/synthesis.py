"""Fixed-order controller design: stabilization by robust spectral abscissa
minimization followed by strong H-infinity norm minimization."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NoStabilizingControllerFound
from .nsopt import (
    OptimizerReport,
    grad_robust_abscissa,
    grad_strong_norm,
    minimize,
    robust_abscissa_objective,
    strong_norm_objective,
)
from .system import (
    ControllerBlock,
    ParameterizedSystem,
    PlantBlock,
    closed_loop_parameterization,
)

__all__ = [
    "SynthesisResult",
    "controller_template",
    "build_closed_loop",
    "stabilize",
    "hinf_design",
]


@dataclass(frozen=True, eq=False)
class SynthesisResult:
    """Designed controller and the achieved objective value.

    Unpacks as ``controller, value``.
    """

    controller: ControllerBlock
    value: float
    report: OptimizerReport | None = None
    initial_value: float | None = None

    def __iter__(self):
        yield self.controller
        yield self.value


def controller_template(plant: PlantBlock, n_c: int, mask=None, initial: ControllerBlock | None = None) -> ControllerBlock:
    """Controller of order ``n_c`` matching the plant; ``mask`` marks free entries."""
    if initial is not None:
        if (initial.order, initial.n_u, initial.n_y) != (n_c, plant.n_u, plant.n_y):
            raise DimensionMismatch(
                f"initial controller has order {initial.order} and shape {initial.n_u}x{initial.n_y}, "
                f"expected order {n_c} and {plant.n_u}x{plant.n_y}"
            )
        mats = initial.matrices()
        free = initial.free if mask is None else mask
    else:
        mats = {}
        free = mask
    return ControllerBlock(n_c, plant.n_u, plant.n_y, free=free, **mats)


def build_closed_loop(plant: PlantBlock, n_c: int = 0, mask=None, feedback_delay: float = 0.0, initial=None) -> ParameterizedSystem:
    """Closed loop as an affine function of the free controller entries.

    Parameters are ordered row-major over ``A_K, B_K, C_K, D_K``; masked
    entries keep their values from ``initial`` (zero by default).
    """
    if n_c < 0:
        raise ValueError("controller order must be nonnegative")
    k = controller_template(plant, n_c, mask, initial)
    return closed_loop_parameterization(plant, k, feedback_delay)


def _as_controller(template, p):
    return template.with_parameters(p)


def stabilize(
    plant: PlantBlock,
    n_c: int = 0,
    mask=None,
    p0=None,
    initial: ControllerBlock | None = None,
    feedback_delay: float = 0.0,
    r_min: float = -1.0,
    raise_on_failure: bool = True,
    **opt,
) -> SynthesisResult:
    """Minimize the robust spectral abscissa of the closed loop.

    Starts from ``p0`` (default: the free entries of ``initial``, or zero)
    with ``restarts`` seeded runs.  Raises
    :class:`NoStabilizingControllerFound` if the best value is not negative.
    """
    template = controller_template(plant, n_c, mask, initial)
    psys = closed_loop_parameterization(plant, template, feedback_delay)
    p0 = template.parameters() if p0 is None else np.asarray(p0, dtype=float)
    if psys.n_p == 0:
        ev = grad_robust_abscissa(psys, p0, r_min=r_min)
        report, p, value = None, p0, ev.value
    else:
        report = minimize(robust_abscissa_objective(psys, r_min=r_min), p0, **opt)
        p, value = report.p, report.value
    k = _as_controller(template, p)
    if raise_on_failure and not value < 0:
        raise NoStabilizingControllerFound(
            f"best robust spectral abscissa {value:.6g} is not negative", controller=k, value=value
        )
    return SynthesisResult(k, float(value), report)


def hinf_design(
    plant: PlantBlock,
    n_c: int = 0,
    initial: ControllerBlock | None = None,
    mask=None,
    feedback_delay: float = 0.0,
    norm_opts: dict | None = None,
    stabilize_opts: dict | None = None,
    **opt,
) -> SynthesisResult:
    """Minimize the strong H-infinity norm of the closed loop.

    If the initial controller does not strongly stabilize the plant, a
    stabilization phase runs first.  The returned norm never exceeds the
    value at the (stabilized) initial controller.
    """
    norm_opts = dict(norm_opts or {})
    template = controller_template(plant, n_c, mask, initial)
    psys = closed_loop_parameterization(plant, template, feedback_delay)
    p0 = template.parameters()
    ev0 = grad_strong_norm(psys, p0, **norm_opts)
    if not ev0.feasible:
        st = stabilize(plant, n_c, mask, initial=initial, feedback_delay=feedback_delay, **(stabilize_opts or {}))
        template = controller_template(plant, n_c, mask, st.controller)
        p0 = template.parameters()
        ev0 = grad_strong_norm(psys, p0, **norm_opts)
        if not ev0.feasible:
            raise NoStabilizingControllerFound(
                "stabilization phase did not reach a strongly stable closed loop",
                controller=st.controller,
                value=st.value,
            )
    if psys.n_p == 0:
        return SynthesisResult(template, float(ev0.value), None, float(ev0.value))
    report = minimize(strong_norm_objective(psys, **norm_opts), p0, **opt)
    return SynthesisResult(_as_controller(template, report.p), float(report.value), report, float(ev0.value))
