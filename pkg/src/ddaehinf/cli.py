"""Command-line interface: ``ddaehinf {roots,norm,sweep,stabilize,hinfsyn,info} FILE``.

Exit codes: 0 success, 1 input error, 2 synthesis failure, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys

import numpy as np

from .description import InputError, controller_fragment, load_controller, load_description
from .errors import DdaeError, DimensionMismatch, NoStabilizingControllerFound
from .norm import strong_hinf_norm
from .spectrum import char_roots, effective_delays, robust_spectral_abscissa
from .synthesis import hinf_design, stabilize
from .system import partition
from .transfer import default_grid, sigma_sweep

log = logging.getLogger("ddaehinf")

EXIT_OK, EXIT_INPUT, EXIT_SYNTHESIS, EXIT_NUMERIC = 0, 1, 2, 3


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([format(x, ".17g") if isinstance(x, float) else x for x in r])


def _opt(args, desc, name, default=None):
    v = getattr(args, name, None)
    if v is not None:
        return v
    return desc.options.get(name, default)


def cmd_roots(args, out):
    desc = load_description(args.file)
    sys_ = desc.closed_loop()
    r_min = _opt(args, desc, "min_real_part", -1.0)
    order = _opt(args, desc, "order")
    spec = char_roots(sys_, r_min, order=order, cluster_tol=args.cluster_tol)
    print(f"characteristic roots with real part >= {r_min:g} (discretization order {spec.order})", file=out)
    print(f"{'real':>16} {'imag':>16} {'residual':>10} {'mult':>5}", file=out)
    for lam, res, mu in zip(spec.roots, spec.residuals, spec.multiplicity):
        print(f"{lam.real:16.10f} {lam.imag:16.10f} {res:10.2e} {mu:5d}", file=out)
    if spec.roots.size:
        center, mult = spec.clusters()[0]
        print(f"spectral abscissa: {spec.abscissa:.10g} (rightmost cluster multiplicity {mult})", file=out)
    else:
        print("no roots in the region", file=out)
    if args.out:
        _write_csv(
            args.out,
            ["re", "im", "residual", "multiplicity"],
            [(float(l.real), float(l.imag), float(r), int(m)) for l, r, m in zip(spec.roots, spec.residuals, spec.multiplicity)],
        )
    return EXIT_OK


def cmd_norm(args, out):
    desc = load_description(args.file)
    sys_ = desc.closed_loop()
    res = strong_hinf_norm(
        sys_,
        grid_density=_opt(args, desc, "grid_density", 24),
        rel_tol=_opt(args, desc, "rel_tol", 1e-6),
        order=_opt(args, desc, "order"),
        omega_max=_opt(args, desc, "omega_max"),
    )
    print(f"strong H-infinity norm: {res.value:.10g}", file=out)
    print(f"branch: {res.branch}", file=out)
    if res.branch == "finite-frequency":
        print(f"peak frequency: {res.omega:.10g}", file=out)
    else:
        th = ", ".join(f"{t:.6g}" for t in res.theta)
        print(f"peak torus angles: [{th}]", file=out)
    print(f"asymptotic part (torus maximum): {res.asymptotic.value:.10g}", file=out)
    if res.finite.omega is not None:
        print(f"finite-frequency peak: {res.finite.value:.10g} at {res.finite.omega:.10g}", file=out)
    if res.stability is not None:
        print(f"robust spectral abscissa: {res.stability.robust_abscissa:.10g}", file=out)
    if args.sweep:
        fr = sigma_sweep(sys_, default_grid(sys_, args.points))
        if args.out:
            _write_csv(args.out, ["omega", "sigma1"], [(float(w), float(s)) for w, s in zip(fr.omega, fr.sigma)])
        else:
            for w, s in zip(fr.omega, fr.sigma):
                print(f"{w:.10g},{s:.10g}", file=out)
    return EXIT_OK


def cmd_sweep(args, out):
    desc = load_description(args.file)
    sys_ = desc.closed_loop()
    if args.linear:
        grid = np.linspace(args.wmin, args.wmax, args.points)
    else:
        grid = default_grid(sys_, args.points, args.wmin, args.wmax)
    fr = sigma_sweep(sys_, grid, full=args.full)
    w, s = fr.peak
    print(f"grid maximum of sigma_1: {s:.10g} at omega = {w:.10g} ({grid.size} points, {fr.gaps.size} gaps)", file=out)
    if args.out:
        if args.full and fr.full is not None:
            k = fr.full.shape[1]
            _write_csv(args.out, ["omega"] + [f"sigma{i + 1}" for i in range(k)],
                       [(float(om), *map(float, row)) for om, row in zip(fr.omega, fr.full)])
        else:
            _write_csv(args.out, ["omega", "sigma1"], [(float(om), float(v)) for om, v in zip(fr.omega, fr.sigma)])
    return EXIT_OK


def _synthesis_opts(args, desc):
    return dict(
        seed=_opt(args, desc, "seed", 0),
        restarts=_opt(args, desc, "restarts", 3),
        maxit=_opt(args, desc, "maxit", 200),
        jobs=args.jobs,
    )


def _need_plant(desc):
    if desc.plant is None:
        raise InputError("synthesis needs a 'plant' block")


def _emit_controller(args, out, k, value, label):
    frag = controller_fragment(k, value, label)
    print(frag, end="", file=out)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(frag)


def cmd_stabilize(args, out):
    desc = load_description(args.file)
    _need_plant(desc)
    n_c = args.order if args.order is not None else (desc.controller.order if desc.controller else 0)
    initial = desc.controller if desc.controller is not None and desc.controller.order == n_c else None
    opts = _synthesis_opts(args, desc)
    try:
        res = stabilize(
            desc.plant, n_c, initial=initial, feedback_delay=desc.feedback_delay, r_min=_opt(args, desc, "min_real_part", -1.0), **opts,
        )
    except NoStabilizingControllerFound as exc:
        print(f"no stabilizing controller found; best robust spectral abscissa {exc.value:.10g}", file=out)
        if exc.controller is not None:
            _emit_controller(args, out, exc.controller, exc.value, "robust spectral abscissa")
        return EXIT_SYNTHESIS
    print(f"robust spectral abscissa: {res.value:.10g}", file=out)
    _emit_controller(args, out, res.controller, res.value, "robust spectral abscissa")
    return EXIT_OK


def cmd_hinfsyn(args, out):
    desc = load_description(args.file)
    _need_plant(desc)
    if args.init:
        initial = load_controller(args.init, desc.plant.n_u, desc.plant.n_y)
    else:
        initial = desc.controller
    n_c = args.order if args.order is not None else (initial.order if initial is not None else 0)
    if initial is not None and initial.order != n_c:
        raise InputError(f"initial controller has order {initial.order}, but --order is {n_c}")
    opts = _synthesis_opts(args, desc)
    norm_opts = dict(grid_density=_opt(args, desc, "grid_density", 24), rel_tol=_opt(args, desc, "rel_tol", 1e-6))
    try:
        res = hinf_design(
            desc.plant, n_c, initial=initial, feedback_delay=desc.feedback_delay, norm_opts=norm_opts,
            stabilize_opts=dict(opts, r_min=_opt(args, desc, "min_real_part", -1.0)), **opts,
        )
    except NoStabilizingControllerFound as exc:
        print(f"no strongly stabilizing initial controller found (robust spectral abscissa {exc.value:.10g})", file=out)
        return EXIT_SYNTHESIS
    if res.initial_value is not None:
        print(f"initial strong H-infinity norm: {res.initial_value:.10g}", file=out)
    print(f"strong H-infinity norm: {res.value:.10g}", file=out)
    _emit_controller(args, out, res.controller, res.value, "strong H-infinity norm")
    return EXIT_OK


def cmd_info(args, out):
    desc = load_description(args.file)
    sys_ = desc.closed_loop()
    part = partition(sys_)
    print(f"state dimension: {sys_.n}  inputs: {sys_.n_w}  outputs: {sys_.n_z}", file=out)
    print(f"delays: {list(sys_.delays[1:])}", file=out)
    print(f"rank of E: {sys_.n - part.nu}  algebraic dimension: {part.nu}", file=out)
    eff = effective_delays(part)
    print(f"delays acting on the algebraic part: {[sys_.delays[i] for i in eff]}", file=out)
    rep = robust_spectral_abscissa(sys_, r_min=_opt(args, desc, "min_real_part", -1.0), part=part)
    print(f"spectral abscissa: {rep.alpha:.10g}", file=out)
    print(f"difference-part abscissa: {rep.c_D:.10g}", file=out)
    print(f"robust spectral abscissa: {rep.robust_abscissa:.10g}", file=out)
    print(f"strongly stable: {'yes' if rep.strongly_stable else 'no'}", file=out)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="ddaehinf", description="Strong H-infinity analysis and controller design for delay DAEs.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("file", help="system-description file (YAML)")
        sp.add_argument("--out", help="write CSV (or controller fragment) to this path")
        sp.add_argument("--order", type=int, default=None, help="discretization order (analysis) or controller order (synthesis)")
        return sp

    r = common(sub.add_parser("roots", help="characteristic roots"))
    r.add_argument("--min-real", dest="min_real_part", type=float, default=None)
    r.add_argument("--cluster-tol", type=float, default=1e-4)
    r.set_defaults(func=cmd_roots)

    n = common(sub.add_parser("norm", help="strong H-infinity norm"))
    n.add_argument("--grid-density", type=int, default=None)
    n.add_argument("--rel-tol", type=float, default=None)
    n.add_argument("--omega-max", type=float, default=None)
    n.add_argument("--sweep", action="store_true", help="also emit sigma_1 over a log grid")
    n.add_argument("--points", type=int, default=2000)
    n.set_defaults(func=cmd_norm)

    s = common(sub.add_parser("sweep", help="singular-value plot data"))
    s.add_argument("--wmin", type=float, default=None)
    s.add_argument("--wmax", type=float, default=None)
    s.add_argument("--points", type=int, default=2000)
    s.add_argument("--linear", action="store_true")
    s.add_argument("--full", action="store_true", help="all singular values")
    s.set_defaults(func=cmd_sweep)

    for name, fn, hlp in (("stabilize", cmd_stabilize, "minimize the robust spectral abscissa"),
                          ("hinfsyn", cmd_hinfsyn, "minimize the strong H-infinity norm")):
        c = common(sub.add_parser(name, help=hlp))
        c.add_argument("--seed", type=int, default=None)
        c.add_argument("--restarts", type=int, default=None)
        c.add_argument("--maxit", type=int, default=None)
        c.add_argument("--jobs", type=int, default=1, help="parallel optimizer restarts")
        c.add_argument("--min-real", dest="min_real_part", type=float, default=None)
        if name == "hinfsyn":
            c.add_argument("--init", help="initial controller fragment")
        c.set_defaults(func=fn)

    i = sub.add_parser("info", help="structure and stability summary")
    i.add_argument("file")
    i.add_argument("--min-real", dest="min_real_part", type=float, default=None)
    i.set_defaults(func=cmd_info)
    return p


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "sweep" and args.linear and (args.wmin is None or args.wmax is None):
        print("error: --linear needs --wmin and --wmax", file=sys.stderr)
        return EXIT_INPUT
    if args.command == "sweep" and args.wmin is not None and args.wmax is not None and args.wmin >= args.wmax:
        print("error: --wmin must be below --wmax", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args, out)
    except (InputError, DimensionMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NoStabilizingControllerFound as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SYNTHESIS
    except DdaeError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
