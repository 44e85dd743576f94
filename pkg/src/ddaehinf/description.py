"""System-description files (YAML) with line-numbered validation errors.

A file holds either a ``system`` block (a DDAE in standard form) or a
``plant`` block with an optional ``controller``; an ``options`` block
carries analysis settings.  Example::

    plant:
      A: [[-0.08, -0.03, 0.2], [0.2, -0.04, -0.005], [-0.06, 0.2, -0.07]]
      B_u: [[-0.1], [-0.2], [0.1]]
      B_w: [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
      C_z: [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
      C_y: [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
      input_delay: 5
    controller:
      order: 0
      D_K: [[0.4712, 0.5037, 0.6023]]
    options:
      min_real_part: -0.8
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import yaml

from .errors import DdaeError
from .system import CONTROLLER_FIELDS, ControllerBlock, DdaeSystem, PlantBlock, interconnect

__all__ = ["InputError", "Description", "parse_description", "load_description", "controller_fragment", "parse_controller"]

SYSTEM_KEYS = {"E", "A", "delays", "B", "C"}
PLANT_KEYS = {
    "A", "E", "B_w", "B_u", "C_z", "C_y", "D_zw", "D_zu", "D_yw", "D_yu",
    "state_delays", "input_delay", "output_delay",
}
CONTROLLER_KEYS = {"order", "free", *CONTROLLER_FIELDS}
OPTION_KEYS = {
    "min_real_part": float,
    "grid_density": int,
    "rel_tol": float,
    "order": int,
    "omega_max": float,
    "seed": int,
    "restarts": int,
    "maxit": int,
}
TOP_KEYS = {"system", "plant", "controller", "feedback_delay", "options"}


class InputError(DdaeError, ValueError):
    """Malformed description file; ``line`` is 1-based when known."""

    def __init__(self, msg, line=None):
        super().__init__(f"line {line}: {msg}" if line else msg)
        self.line = line


def _line(node):
    return node.start_mark.line + 1 if node is not None and node.start_mark else None


def _mapping(node, allowed, where):
    if not isinstance(node, yaml.MappingNode):
        raise InputError(f"{where} must be a mapping", _line(node))
    out = {}
    for k, v in node.value:
        key = k.value
        if key not in allowed:
            raise InputError(f"unknown key {key!r} in {where}; allowed: {', '.join(sorted(allowed))}", _line(k))
        if key in out:
            raise InputError(f"duplicate key {key!r} in {where}", _line(k))
        out[key] = v
    return out


def _number(node, name, kind=float):
    if not isinstance(node, yaml.ScalarNode):
        raise InputError(f"{name} must be a number", _line(node))
    try:
        val = float(node.value)
    except ValueError:
        raise InputError(f"{name}: cannot read {node.value!r} as a number", _line(node)) from None
    if not np.isfinite(val):
        raise InputError(f"{name} must be finite", _line(node))
    if kind is int:
        if val != int(val):
            raise InputError(f"{name} must be an integer", _line(node))
        return int(val)
    return val


def _optional_number(node, name, kind=float):
    if isinstance(node, yaml.ScalarNode) and node.tag.endswith(":null"):
        return None
    return _number(node, name, kind)


def _matrix(node, name, conv=None):
    """Dense row-major matrix; a scalar is 1x1 and a flat list is one row."""
    conv = conv or (lambda n, nm: _number(n, nm))
    if isinstance(node, yaml.ScalarNode):
        return np.array([[conv(node, name)]])
    if not isinstance(node, yaml.SequenceNode):
        raise InputError(f"{name} must be a list of rows", _line(node))
    if not node.value:
        return np.zeros((0, 0))
    if all(isinstance(r, yaml.ScalarNode) for r in node.value):
        return np.array([[conv(x, name) for x in node.value]])
    rows = []
    for r in node.value:
        if not isinstance(r, yaml.SequenceNode):
            raise InputError(f"{name}: every row must be a list", _line(r))
        rows.append([conv(x, name) for x in r.value])
    if len({len(r) for r in rows}) > 1:
        raise InputError(f"{name}: rows have different lengths", _line(node))
    return np.array(rows, dtype=object if conv is _bool else float)


def _bool(node, name):
    if not isinstance(node, yaml.ScalarNode):
        raise InputError(f"{name} must hold booleans", _line(node))
    v = node.value.lower()
    if v in ("true", "yes", "on", "1"):
        return True
    if v in ("false", "no", "off", "0"):
        return False
    raise InputError(f"{name}: {node.value!r} is not a boolean", _line(node))


@dataclass(frozen=True, eq=False)
class Description:
    system: DdaeSystem | None = None
    plant: PlantBlock | None = None
    controller: ControllerBlock | None = None
    feedback_delay: float = 0.0
    options: dict = field(default_factory=dict)

    def closed_loop(self, controller: ControllerBlock | None = None) -> DdaeSystem:
        """The DDAE to analyse: the ``system`` block, or the plant closed
        with the given (default: file, else zero static) controller."""
        if self.system is not None:
            return self.system
        k = controller or self.controller or ControllerBlock(0, self.plant.n_u, self.plant.n_y)
        return interconnect(self.plant, k, self.feedback_delay)


def _parse_system(node):
    m = _mapping(node, SYSTEM_KEYS, "system")
    for key in ("A", "B", "C"):
        if key not in m:
            raise InputError(f"system: missing required key {key!r}", _line(node))
    A_node = m["A"]
    if not isinstance(A_node, yaml.SequenceNode) or not A_node.value:
        raise InputError("system.A must be a nonempty list of matrices [A_0, A_1, ...]", _line(A_node))
    # a single matrix given directly (list of rows of numbers) is A_0
    if all(isinstance(r, yaml.SequenceNode) and all(isinstance(x, yaml.ScalarNode) for x in r.value) for r in A_node.value):
        As = [_matrix(A_node, "system.A")]
        A_lines = [_line(A_node)]
    else:
        As = [_matrix(a, f"system.A[{i}]") for i, a in enumerate(A_node.value)]
        A_lines = [_line(a) for a in A_node.value]
    n = As[0].shape[0]
    delays = []
    if "delays" in m:
        d = m["delays"]
        if not isinstance(d, yaml.SequenceNode):
            raise InputError("system.delays must be a list", _line(d))
        delays = [_number(x, "system.delays") for x in d.value]
    if len(delays) != len(As) - 1:
        raise InputError(
            f"system: {len(As)} A-matrices need {len(As) - 1} delays, got {len(delays)}",
            _line(m.get("delays", A_node)),
        )
    for a, ln in zip(As, A_lines):
        if a.shape != (n, n):
            raise InputError(f"system.A: matrix of shape {a.shape}, expected {(n, n)}", ln)
    E = _matrix(m["E"], "system.E") if "E" in m else np.eye(n)
    try:
        return DdaeSystem.from_terms(E, zip(As, [0.0, *delays]), _matrix(m["B"], "system.B"), _matrix(m["C"], "system.C"))
    except (ValueError, DdaeError) as exc:
        raise InputError(f"system: {exc}", _line(node)) from None


def _parse_plant(node):
    m = _mapping(node, PLANT_KEYS, "plant")
    if "A" not in m:
        raise InputError("plant: missing required key 'A'", _line(node))
    kw = {}
    for key in ("A", "E", "B_w", "B_u", "C_z", "C_y", "D_zw", "D_zu", "D_yw", "D_yu"):
        if key in m:
            kw[key] = _matrix(m[key], f"plant.{key}")
    for key in ("input_delay", "output_delay"):
        if key in m:
            kw[key] = _number(m[key], f"plant.{key}")
    if "state_delays" in m:
        sd = m["state_delays"]
        if not isinstance(sd, yaml.SequenceNode):
            raise InputError("plant.state_delays must be a list of {A, tau} entries", _line(sd))
        terms = []
        for item in sd.value:
            t = _mapping(item, {"A", "tau"}, "plant.state_delays entry")
            if set(t) != {"A", "tau"}:
                raise InputError("plant.state_delays entries need both 'A' and 'tau'", _line(item))
            terms.append((_matrix(t["A"], "plant.state_delays.A"), _number(t["tau"], "plant.state_delays.tau")))
        kw["state_delays"] = tuple(terms)
    try:
        return PlantBlock(**kw)
    except (ValueError, DdaeError) as exc:
        raise InputError(f"plant: {exc}", _line(node)) from None


def parse_controller(node, n_u, n_y, where="controller"):
    m = _mapping(node, CONTROLLER_KEYS, where)
    order = _number(m["order"], f"{where}.order", int) if "order" in m else 0
    mats = {k: _matrix(m[k], f"{where}.{k}") for k in CONTROLLER_FIELDS if k in m}
    free = None
    if "free" in m:
        fm = _mapping(m["free"], set(CONTROLLER_FIELDS), f"{where}.free")
        free = {k: _matrix(v, f"{where}.free.{k}", _bool).astype(bool) for k, v in fm.items()}
    try:
        return ControllerBlock(order, n_u, n_y, free=free, **mats)
    except (ValueError, DdaeError) as exc:
        raise InputError(f"{where}: {exc}", _line(node)) from None


def _compose(text):
    try:
        node = yaml.compose(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        raise InputError(f"YAML syntax error: {exc.problem}", mark.line + 1 if mark else None) from None
    except yaml.YAMLError as exc:
        raise InputError(f"YAML error: {exc}") from None
    if node is None:
        raise InputError("empty description file")
    return node


def parse_description(text: str) -> Description:
    root = _mapping(_compose(text), TOP_KEYS, "description file")
    if ("system" in root) == ("plant" in root):
        raise InputError("the file needs exactly one of 'system' or 'plant'", 1)
    system = _parse_system(root["system"]) if "system" in root else None
    plant = _parse_plant(root["plant"]) if "plant" in root else None
    controller = None
    if "controller" in root:
        if plant is None:
            raise InputError("'controller' requires a 'plant' block", _line(root["controller"]))
        controller = parse_controller(root["controller"], plant.n_u, plant.n_y)
    fb = _number(root["feedback_delay"], "feedback_delay") if "feedback_delay" in root else 0.0
    if fb < 0:
        raise InputError("feedback_delay must be nonnegative", _line(root["feedback_delay"]))
    options = {}
    if "options" in root:
        om = _mapping(root["options"], set(OPTION_KEYS), "options")
        for k, v in om.items():
            options[k] = _optional_number(v, f"options.{k}", OPTION_KEYS[k])
    return Description(system, plant, controller, fb, options)


def load_description(path) -> Description:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    return parse_description(text)


def load_controller(path, n_u, n_y) -> ControllerBlock:
    """Read a controller fragment (a file with a top-level ``controller`` key)."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    root = _mapping(_compose(text), {"controller", "objective"}, "controller file")
    if "controller" not in root:
        raise InputError("controller file needs a 'controller' key", 1)
    return parse_controller(root["controller"], n_u, n_y)


def _fmt_matrix(M):
    return "[" + ", ".join("[" + ", ".join(format(float(x), ".17g") for x in row) + "]" for row in M) + "]"


def controller_fragment(k: ControllerBlock, objective: float | None = None, label: str = "objective") -> str:
    """Description-file fragment for ``k``; numbers use 17 significant digits
    so that reparsing reproduces them exactly.  Empty fields are omitted."""
    lines = ["controller:", f"  order: {k.order}"]
    for name in CONTROLLER_FIELDS:
        M = getattr(k, name)
        if M.size:
            lines.append(f"  {name}: {_fmt_matrix(M)}")
    masks = {n: k.free[n] for n in CONTROLLER_FIELDS if k.free[n].size and not k.free[n].all()}
    if masks:
        lines.append("  free:")
        for n, mk in masks.items():
            lines.append(f"    {n}: [" + ", ".join("[" + ", ".join(str(bool(b)).lower() for b in r) + "]" for r in mk) + "]")
    if objective is not None:
        lines.append(f"# {label}: {format(float(objective), '.17g')}")
    return "\n".join(lines) + "\n"
