import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracnehari import ConfigurationError, DivergedIterateError, ProblemParams, project
from fracnehari.model import (
    NonlinearitySpec,
    coercivity_bound,
    concave_term,
    energy,
    exp_moment,
    gradient,
    grad_norm,
    hessian,
    nehari_residual,
    second_derivative,
)
from fracnehari.spectral import pair_norm_sq
from conftest import make_params
from oracles import central_gradient, decaying_pair, dense_grid, mode1_pair, positive_pair, series, trapezoid


def dense_energy(w, lam, p=0.75, q=0.75, a=1.5, b=1.5):
    x = dense_grid()
    u, v = series(w, x)
    f = np.cos(np.pi * x)
    B = trapezoid(f * np.abs(u) ** p * np.abs(v) ** q, x)
    G = trapezoid(np.abs(u) ** a * np.abs(v) ** b * np.exp(u * u + v * v), x)
    k = np.arange(1, w.shape[1] + 1) * np.pi / 2
    return 0.5 * float(np.sum(k * w * w)) - lam / (p + q) * B - G, B, G


def test_energy_of_zero_pair(basis):
    P = make_params(basis)
    z = np.zeros((2, basis.K))
    assert energy(z, P) == 0.0
    assert nehari_residual(z, P) == 0.0
    assert second_derivative(z, P) == 0.0
    assert np.all(gradient(z, P) == 0)


def test_energy_matches_dense_oracle(basis):
    P = make_params(basis, 1.0)
    w = mode1_pair(basis.K, 0.3, 0.3)
    ref, B, G = dense_energy(w, 1.0)
    assert energy(w, P) == pytest.approx(ref, abs=1e-7)
    assert concave_term(w, P) == pytest.approx(B, abs=1e-7)
    assert exp_moment(w, P) == pytest.approx(G, abs=1e-7)


def test_concave_term_oracle_and_homogeneity(basis, rng):
    P = make_params(basis)
    w = mode1_pair(basis.K)
    _, B, _ = dense_energy(w, 1.0)
    assert concave_term(w, P) == pytest.approx(B, abs=1e-6)
    assert concave_term(np.zeros((2, basis.K)), P) == 0.0
    w = decaying_pair(rng, basis.K)
    for t in (0.1, 2.0, 7.5):
        assert concave_term(t * w, P) == pytest.approx(t**1.5 * concave_term(w, P), rel=1e-9)


def test_nonlinearity_partials_by_finite_differences():
    nl = NonlinearitySpec(1.5, 1.5)
    rng = np.random.default_rng(3)
    u = rng.uniform(0.1, 1.5, 50) * rng.choice([-1, 1], 50)
    v = rng.uniform(0.1, 1.5, 50) * rng.choice([-1, 1], 50)
    h = 1e-6
    fd1 = (nl.G(u + h, v) - nl.G(u - h, v)) / (2 * h)
    fd2 = (nl.G(u, v + h) - nl.G(u, v - h)) / (2 * h)
    assert np.allclose(nl.g1(u, v), fd1, rtol=1e-6)
    assert np.allclose(nl.g2(u, v), fd2, rtol=1e-6)


@settings(max_examples=50, deadline=None)
@given(
    st.floats(1.05, 3.0), st.floats(1.05, 3.0),
    st.floats(-4.0, 4.0), st.floats(-4.0, 4.0),
)
def test_ambrosetti_rabinowitz_inequality(a, b, u, v):
    # g1 u + g2 v >= (a + b) G pointwise
    nl = NonlinearitySpec(a, b)
    u, v = np.array([u]), np.array([v])
    lhs = nl.g1(u, v) * u + nl.g2(u, v) * v
    assert lhs[0] >= (a + b) * nl.G(u, v)[0] * (1 - 1e-12)


def test_gradient_finite_differences_no_concave_term(basis, rng):
    # lam -> 0 is not allowed, so take a tiny lam and fields away from sign changes
    P = make_params(basis, 1e-12)
    w = 0.3 * decaying_pair(rng, basis.K, decay=2.0)
    g = gradient(w, P)
    fd = central_gradient(lambda z: energy(z, P), w)
    assert np.linalg.norm(fd - g) < 1e-5 * np.linalg.norm(g)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_gradient_finite_differences_positive_fields(basis, seed):
    P = make_params(basis, 0.05)
    w = 0.4 * positive_pair(np.random.default_rng(seed), basis.K)
    g = gradient(w, P)
    fd = central_gradient(lambda z: energy(z, P), w)
    assert np.linalg.norm(fd - g) < 1e-5 * np.linalg.norm(g)


def test_residual_is_gradient_against_field(basis, rng):
    P = make_params(basis, 0.7)
    for _ in range(5):
        w = 0.5 * positive_pair(rng, basis.K)
        assert np.sum(gradient(w, P) * w) == pytest.approx(nehari_residual(w, P), abs=1e-10)


def test_residual_and_second_derivative_along_ray(basis, rng):
    P = make_params(basis, 0.7)
    w = 0.5 * positive_pair(rng, basis.K)
    h = 1e-5
    phi = lambda t: energy(t * w, P)
    assert nehari_residual(w, P) == pytest.approx((phi(1 + h) - phi(1 - h)) / (2 * h), rel=1e-7)
    # the closed form of Phi''(1) assumes <I'(w), w> = 0, so compare on N
    wp = project(w, P).t_plus * w
    pp = lambda t: energy(t * wp, P)
    d2 = (pp(1 + h) - 2 * pp(1) + pp(1 - h)) / h**2
    assert second_derivative(wp, P) == pytest.approx(d2, rel=1e-4)


def test_hessian_matches_gradient_differences(basis):
    P = make_params(basis, 0.5)
    w = 0.4 * positive_pair(np.random.default_rng(7), basis.K)
    H = hessian(w, P)
    assert np.allclose(H, H.T, atol=1e-12)
    d = decaying_pair(np.random.default_rng(8), basis.K, decay=2.0)
    h = 1e-6
    fd = (gradient(w + h * d, P) - gradient(w - h * d, P)) / (2 * h)
    Hd = (H @ d.ravel()).reshape(2, -1)
    assert np.linalg.norm(Hd - fd) < 1e-5 * np.linalg.norm(fd)


def test_coercivity_bound_on_nehari_set(basis, rng):
    P = make_params(basis, 1.0)
    for _ in range(5):
        w = 0.5 * positive_pair(rng, basis.K)
        prof = project(w, P)
        for t in (prof.t_plus, prof.t_minus):
            tw = t * w
            assert energy(tw, P) >= coercivity_bound(tw, P) - 1e-12


def test_grad_norm_is_dual_norm(basis):
    g = np.zeros((2, basis.K))
    g[0, 0] = 1.0
    assert grad_norm(g, basis) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-15)


def test_overflow_is_reported(basis):
    P = make_params(basis)
    with pytest.raises(DivergedIterateError):
        energy(mode1_pair(basis.K, 40.0, 40.0), P)


@pytest.mark.parametrize(
    "kw",
    [dict(lam=0.0), dict(lam=-1.0), dict(p=0.4, q=0.5), dict(p=1.2, q=0.9),
     dict(alpha=1.0), dict(alpha=0.5, beta=3.0)],
)
def test_invalid_parameters(basis, kw):
    lam = kw.pop("lam", 1.0)
    with pytest.raises(ConfigurationError):
        make_params(basis, lam, **kw)


def test_weight_without_sign_change_warns(basis):
    with pytest.warns(UserWarning):
        ProblemParams(1.0, basis, weight_values=np.ones(basis.nodes.size))


def test_weight_shape_checked(basis):
    with pytest.raises(ConfigurationError):
        ProblemParams(1.0, basis, weight_values=np.ones(3))


def test_pair_shape_checked(basis):
    P = make_params(basis)
    with pytest.raises(ValueError):
        energy(np.zeros(basis.K), P)


def test_norm_consistency(basis):
    w = mode1_pair(basis.K, 0.3, 0.3)
    assert pair_norm_sq(w, basis) == pytest.approx(2 * 0.09 * math.pi / 2, rel=1e-15)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        make_params(basis)
