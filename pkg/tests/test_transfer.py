import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddaehinf import (
    DdaeSystem,
    SingularAtFrequency,
    char_matrix,
    eval_dT,
    eval_dT_dp,
    eval_T,
    eval_T_blocks,
    eval_Ta_lambda,
    eval_Ta_torus,
    partition,
    sigma_sweep,
)
from ddaehinf.transfer import dT_dp_all, sigma_T_batch
from helpers import K1, demo_closed_loop, demo_psys, two_delay, two_delay_T, random_retarded


def test_two_delay_dc_gain():
    assert np.isclose(eval_T(two_delay(), 0.0)[0, 0].real, 2.1 / 1.125, rtol=1e-13)


@given(st.floats(-0.1, 0.5), st.floats(0.0, 50.0))
@settings(max_examples=50, deadline=None)
def test_two_delay_matches_closed_form(re, im):
    lam = complex(re, im)
    assert np.isclose(eval_T(two_delay(), lam)[0, 0], two_delay_T(lam), rtol=1e-10)


@given(st.integers(0, 10_000), st.floats(0.0, 30.0))
@settings(max_examples=30, deadline=None)
def test_block_form_agrees_with_direct_form(seed, w):
    rng = np.random.default_rng(seed)
    s = two_delay(*rng.uniform(0.3, 3.0, 2))
    assert np.allclose(eval_T_blocks(partition(s), 1j * w), eval_T(s, 1j * w), rtol=1e-10)


def test_char_matrix_derivative_matches_finite_difference():
    s = two_delay()
    lam, h = 0.3 + 1.1j, 1e-6
    fd = (char_matrix(s, lam + h).M - char_matrix(s, lam - h).M) / (2 * h)
    assert np.allclose(char_matrix(s, lam).M_lam, fd, atol=1e-8)


def test_dT_matches_finite_difference():
    s = two_delay()
    for lam in (0.5j, 0.2 + 3j):
        h = 1e-6
        fd = (eval_T(s, lam + h) - eval_T(s, lam - h)) / (2 * h)
        assert np.allclose(eval_dT(s, lam), fd, rtol=1e-7)


def test_dT_dp_matches_finite_difference():
    psys = demo_psys()
    lam = 0.07j
    from ddaehinf import instantiate

    for k in range(psys.n_p):
        e = np.zeros(3)
        e[k] = 1e-6
        fd = (eval_T(instantiate(psys, K1 + e), lam) - eval_T(instantiate(psys, K1 - e), lam)) / 2e-6
        assert np.allclose(eval_dT_dp(psys, K1, lam, k), fd, rtol=1e-6, atol=1e-8)
    with pytest.raises(IndexError):
        eval_dT_dp(psys, K1, lam, 3)


def test_shared_factorization_gradient_matches_single_derivatives():
    psys = demo_psys()
    sys = demo_closed_loop(K1)
    lam = 0.1j
    U, s, Vh = np.linalg.svd(eval_T(sys, lam))
    u, v = U[:, 0], Vh[0].conj()
    g = dT_dp_all(sys, psys, lam, u, v)
    ref = [np.real(u.conj() @ eval_dT_dp(psys, K1, lam, k) @ v) for k in range(3)]
    assert np.allclose(g, ref, rtol=1e-10)


def test_high_frequency_limit_tends_to_asymptotic_transfer():
    # at lam = sigma + j w with w -> inf the dynamic part vanishes
    part = partition(two_delay())
    for w in (1e3, 1e4, 1e5):
        lam = 1j * w
        err = abs(eval_T(part.sys, lam)[0, 0] - eval_Ta_lambda(part, lam)[0, 0])
        assert err < 20.0 / w


def test_torus_evaluation_at_sampled_phases():
    part = partition(two_delay())
    th = np.array([0.0, np.pi])
    # 1 / (1 - 0.25 + 0.5 e^{-j pi}) = 4
    assert np.isclose(eval_Ta_torus(part, th)[0, 0], 4.0)
    assert np.isclose(abs(eval_Ta_torus(part, [np.pi, 0.0])[0, 0]), 1 / 1.75)


def test_zero_input_matrix_gives_zero_transfer():
    s = DdaeSystem.from_terms(np.eye(2), [(-np.eye(2), 0.0), (0.1 * np.eye(2), 1.0)], np.zeros((2, 1)), np.ones((1, 2)))
    assert np.all(eval_T(s, 1j) == 0)
    assert np.all(sigma_sweep(s).sigma == 0)


def test_singular_frequency_detected():
    s = DdaeSystem.from_terms(np.eye(1), [([[0.0]], 0.0)], [[1.0]], [[1.0]])
    with pytest.raises(SingularAtFrequency):
        eval_T(s, 0.0)
    assert np.isnan(sigma_T_batch(s, [0.0, 1.0])[0])


def test_sweep_matches_pointwise():
    rng = np.random.default_rng(0)
    s = random_retarded(rng, n=3, m=2)
    w = np.logspace(-2, 2, 50)
    r = sigma_sweep(s, w, full=True)
    ref = np.array([np.linalg.svd(eval_T(s, 1j * x), compute_uv=False) for x in w])
    assert np.allclose(r.full, ref, rtol=1e-10)
    assert np.allclose(r.sigma, ref[:, 0])
    assert r.peak[1] == pytest.approx(ref[:, 0].max())


def test_sweep_grid_validation():
    s = two_delay()
    with pytest.raises(ValueError):
        sigma_sweep(s, [])
    with pytest.raises(ValueError):
        sigma_sweep(s, [1.0, 1.0])
