"""Acceptance criteria 1-9; each test records one PASS/FAIL line."""
import time

import numpy as np
import pytest

from ddaehinf import (
    ControllerBlock,
    DdaeSystem,
    ParameterizedSystem,
    PlantBlock,
    char_roots,
    discretize,
    eliminate_feedthrough,
    eliminate_io_delays,
    eval_T,
    grad_robust_abscissa,
    grad_strong_norm,
    hinf_design,
    hinf_norm_T,
    hinf_norm_Ta_at_delays,
    instantiate,
    interconnect,
    level_crossings,
    partition,
    robust_spectral_abscissa,
    spectral_abscissa,
    stabilize,
    strong_hinf_norm,
    strong_norm_Ta,
)
from ddaehinf.transfer import sigma_T_batch
from helpers import K1, K2, demo_closed_loop, demo_plant, two_delay, two_delay_T, fd_gradient, random_retarded, record


def test_criterion_1_asymptotic_norms():
    t = time.perf_counter()
    part = partition(two_delay())
    strong = strong_norm_Ta(part).value
    fixed = hinf_norm_Ta_at_delays(part, (1.0, 2.0))
    dt = time.perf_counter() - t
    ok = abs(strong - 4.0) <= 1e-6 and abs(fixed - 2.0320) <= 1e-2 and dt < 5
    assert record(1, ok, f"torus max {strong:.9f}, fixed-delay {fixed:.6f}, {dt:.2f}s")


def test_criterion_2_perturbed_delays():
    t = time.perf_counter()
    s = two_delay(0.99, 2.0)
    r = strong_hinf_norm(s)
    # the peak sits far above the band a low-order grid resolves, so fix the order
    pk = hinf_norm_T(s, order=320)
    dt = time.perf_counter() - t
    ok = (
        abs(r.value - 4.0) <= 1e-6
        and r.branch == "asymptotic"
        and abs(pk.value - 3.9993) <= 1e-4
        and abs(pk.omega - 158.6569) <= 0.5
        and dt < 30
    )
    assert record(
        2, ok, f"strong norm {r.value:.7f} ({r.branch}), plain peak {pk.value:.6f} at omega {pk.omega:.4f}, {dt:.2f}s"
    )


def test_criterion_3_discontinuity_contrast():
    w = np.linspace(0.0, 2000.0, 2_000_001)
    oracle = np.abs(two_delay_T(1j * w)).max()
    plain = hinf_norm_T(two_delay()).value
    jumped = hinf_norm_T(two_delay(0.99, 2.0), order=320).value
    s1 = strong_hinf_norm(two_delay()).value
    s2 = strong_hinf_norm(two_delay(0.99, 2.0)).value
    matches_258 = abs(oracle - 2.58) < abs(oracle - 2.6422)
    ok = (
        abs(plain - oracle) <= 1e-4
        and matches_258
        and abs(jumped - 3.9993) <= 1e-4
        and abs(s1 - 4.0) <= 1e-4
        and abs(s2 - 4.0) <= 1e-4
    )
    assert record(
        3, ok,
        f"plain peak {plain:.6f} (dense oracle {oracle:.6f}, matches 2.58 not 2.6422: {matches_258}) -> "
        f"{jumped:.6f}; strong norm {s1:.6f} / {s2:.6f}",
    )


def test_criterion_4_demo_evaluations():
    t = time.perf_counter()
    open_loop = spectral_abscissa(demo_closed_loop(np.zeros(3))).abscissa
    rep = robust_spectral_abscissa(demo_closed_loop(K1))
    mult = rep.spectrum.clusters()[0][1]
    n1 = strong_hinf_norm(demo_closed_loop(K1)).value
    n2 = strong_hinf_norm(demo_closed_loop(K2)).value
    dt = time.perf_counter() - t
    checks = {
        "open-loop": abs(open_loop - 0.1081) <= 1e-4,
        "abscissa k1": abs(rep.robust_abscissa + 0.1495) <= 1e-3,
        "multiplicity 4": mult == 4,
        "norm k1": abs(n1 - 79.5443) <= 0.01 * 79.5443,
        "norm k2": abs(n2 - 28.4167) <= 0.01 * 28.4167,
        "runtime": dt < 120,
    }
    failed = [k for k, v in checks.items() if not v]
    ok = not failed
    detail = (
        f"open loop {open_loop:.7f}, abscissa at k1 {rep.robust_abscissa:.6f} (rightmost multiplicity {mult}), "
        f"norm k1 {n1:.4f}, norm k2 {n2:.5f}, {dt:.1f}s"
    )
    if failed:
        detail += f"; failed: {', '.join(failed)} (k1 is printed to 4 digits near a 4-fold root)"
    assert record(4, ok, detail)


@pytest.mark.slow
def test_criterion_5_demo_synthesis():
    t = time.perf_counter()
    st = stabilize(demo_plant(), p0=np.zeros(3), restarts=3, seed=0)
    hs = hinf_design(demo_plant(), initial=ControllerBlock.static(K1[None, :]), restarts=3, seed=0)
    dt = time.perf_counter() - t
    ok = st.value <= -0.10 and hs.value <= 30
    assert record(
        5, ok,
        f"stabilize {st.value:.6f} at {np.round(st.controller.D_K[0], 4)}, "
        f"hinfsyn {hs.initial_value:.4f} -> {hs.value:.4f} at {np.round(hs.controller.D_K[0], 4)}, {dt:.0f}s",
    )


def test_criterion_6_dense_oracle():
    rng = np.random.default_rng(2024)
    W = np.r_[0.0, np.logspace(-3, 3, 10**6)]
    worst_norm = worst_cross = 0.0
    n_cross = 0
    for _ in range(20):
        s = random_retarded(rng)
        value = strong_hinf_norm(s).value
        sig = sigma_T_batch(s, W)
        ref = np.nanmax(sig)
        worst_norm = max(worst_norm, abs(value - ref) / ref)
        disc = discretize(s, 80, reduced=True)
        for frac in (0.5, 0.9):
            gamma = frac * value
            w = level_crossings(disc, gamma)
            k = np.flatnonzero(np.diff(np.sign(sig - gamma)) != 0)
            for x in 0.5 * (W[k] + W[k + 1]):
                err = np.min(np.abs(w - x)) / max(1.0, x) if w.size else np.inf
                worst_cross = max(worst_cross, err)
                n_cross += 1
    ok = worst_norm <= 1e-4 and worst_cross <= 1e-4
    assert record(6, ok, f"worst norm rel. error {worst_norm:.1e}, worst crossing error {worst_cross:.1e} ({n_cross} crossings)")


def _random_psys(rng):
    """Small strongly stable DDAE with one algebraic equation and three parameters."""
    n1 = int(rng.integers(1, 3))
    n, m = n1 + 1, int(rng.integers(1, 3))
    E = np.diag([1.0] * n1 + [0.0])
    c = rng.uniform(0.5, 2.0)
    S = rng.standard_normal((n1, n1))
    A0 = np.zeros((n, n))
    A0[:n1, :n1] = -c * np.eye(n1) + 0.5 * (S - S.T)
    A0[:n1, n1:] = 0.3 * rng.standard_normal((n1, 1))
    A0[n1:, :n1] = rng.standard_normal((1, n1))
    A0[n1, n1] = -1.0
    terms = [(A0, 0.0)]
    for _ in range(m):
        Ai = 0.2 * c / m * rng.standard_normal((n, n))
        Ai[n1, n1] = rng.uniform(-0.6, 0.6) / m
        terms.append((Ai, float(rng.uniform(0.3, 2.0))))
    base = DdaeSystem.from_terms(E, terms, rng.standard_normal((n, 2)), rng.standard_normal((2, n)))
    return ParameterizedSystem(
        base, 0.3 * rng.standard_normal((3, m + 1, n, n)), 0.3 * rng.standard_normal((3, n, 2)), 0.3 * rng.standard_normal((3, 2, n))
    )


def test_criterion_7_gradients():
    rng = np.random.default_rng(7)
    worst = {"norm": 0.0, "abscissa": 0.0}
    branches = set()
    done = 0
    while done < 50:
        psys = _random_psys(rng)
        p = 0.1 * rng.standard_normal(3)
        ea = grad_robust_abscissa(psys, p)
        if not (ea.value < 0 and ea.smooth):
            continue
        en = grad_strong_norm(psys, p)
        if not en.smooth:
            continue
        fa = fd_gradient(lambda q: robust_spectral_abscissa(instantiate(psys, q)).robust_abscissa, p)
        fn = fd_gradient(lambda q: strong_hinf_norm(instantiate(psys, q)).value, p)
        worst["abscissa"] = max(worst["abscissa"], np.linalg.norm(ea.gradient - fa) / np.linalg.norm(fa))
        worst["norm"] = max(worst["norm"], np.linalg.norm(en.gradient - fn) / np.linalg.norm(fn))
        branches |= {ea.info["branch"], en.info["branch"]}
        done += 1
    ok = max(worst.values()) <= 1e-4
    assert record(
        7, ok,
        f"50 points, worst rel. error: norm {worst['norm']:.1e}, abscissa {worst['abscissa']:.1e}; "
        f"branches {sorted(branches)}",
    )


def test_criterion_8_structural_invariants():
    rng = np.random.default_rng(8)
    worst = 0.0
    resid = 0.0
    rel = lambda a, b: np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)
    for _ in range(10):
        n, nw, nz = 3, 2, 2
        s = random_retarded(rng, n=n, m=2)
        s = DdaeSystem.from_terms(s.E, s.terms(), rng.standard_normal((n, nw)), rng.standard_normal((nz, n)))
        D = rng.standard_normal((nz, nw))
        Bd, Cd = rng.standard_normal((n, nw)), rng.standard_normal((nz, n))
        fe = eliminate_feedthrough(s, D)
        io = eliminate_io_delays(s, delayed_inputs=[(Bd, 0.4)], delayed_outputs=[(Cd, 0.9)])
        # plant with loop delays closed by a static gain, against the scalar loop formula
        A = rng.standard_normal((n, n)) - 3 * np.eye(n)
        Bw, Bu = rng.standard_normal((n, 1)), rng.standard_normal((n, 1))
        Cz, Cy = rng.standard_normal((1, n)), rng.standard_normal((1, n))
        kgain = 0.3 * rng.standard_normal()
        cl = interconnect(PlantBlock(A=A, B_w=Bw, B_u=Bu, C_z=Cz, C_y=Cy, input_delay=0.3, output_delay=0.5),
                          ControllerBlock.static([[kgain]]))
        cl0 = interconnect(PlantBlock(A=A, B_w=Bw, B_u=Bu, C_z=Cz, C_y=Cy), ControllerBlock.static([[kgain]]))
        for w in rng.uniform(0.0, 20.0, 5):
            lam = 1j * w
            worst = max(worst, rel(eval_T(fe, lam), eval_T(s, lam) + D))
            M = lam * s.E - sum(Ai * np.exp(-lam * tau) for Ai, tau in s.terms())
            ref = (s.C + Cd * np.exp(-0.9 * lam)) @ np.linalg.solve(M, s.B + Bd * np.exp(-0.4 * lam))
            worst = max(worst, rel(eval_T(io, lam), ref))
            R = lambda B: np.linalg.solve(lam * np.eye(n) - A, B)
            h = kgain * np.exp(-0.8 * lam)
            ref = Cz @ R(Bw) + (Cz @ R(Bu)) * h / (1 - (Cy @ R(Bu)) * h) * (Cy @ R(Bw))
            worst = max(worst, rel(eval_T(cl, lam), ref))
            ref0 = Cz @ np.linalg.solve(lam * np.eye(n) - A - kgain * Bu @ Cy, Bw)
            worst = max(worst, rel(eval_T(cl0, lam), ref0))
        for sys_ in (fe, io, cl, cl0):
            part = partition(sys_)
            if part.nu:
                resid = max(resid, np.linalg.norm(part.U.T @ sys_.E), np.linalg.norm(sys_.E @ part.V))
    ok = worst <= 1e-10 and resid <= 1e-12
    assert record(8, ok, f"worst transfer rel. error {worst:.1e}, null-space residual {resid:.1e}")


def test_criterion_9_delay_scaling():
    base = two_delay()
    rng = np.random.default_rng(9)
    systems = [base]
    for _ in range(3):
        a1, a2 = rng.uniform(-0.4, 0.4, 2)
        systems.append(DdaeSystem.from_terms(
            base.E, [(base.A[0], 0.0), (np.array([[0, 0], [0.3, a1]]), 0.7), (np.array([[0.1, 0], [0, a2]]), 1.9)], base.B, base.C
        ))
    worst = 0.0
    for s in systems:
        v0 = strong_norm_Ta(partition(s)).value
        for c in (0.5, 2.0, np.pi):
            v = strong_norm_Ta(partition(s.with_delays(c * np.asarray(s.delays[1:])))).value
            worst = max(worst, abs(v - v0))
    ok = worst <= 1e-8
    assert record(9, ok, f"worst change under delay scaling {worst:.1e} over {len(systems)} systems")
