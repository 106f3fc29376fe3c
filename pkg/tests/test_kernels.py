"""Kernel evaluation, synthesis, and quadrature-oracle agreement."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erf

from funcbin import BinningKernel, ReconKernel, synthesize_kappa
from funcbin.kernels import (
    BINNING_SUPPORT,
    RECON_SUPPORT,
    eval_binning_kernel,
    eval_binning_kernel_prime,
    eval_recon_kernel,
    kappa_mass,
    kernel_mass,
    numeric_convolve_oracle,
)

ALL_PAIRS = [(k, l) for k in BinningKernel for l in ReconKernel]


def test_rect_values():
    xs = np.array([-0.6, -0.49, 0.0, 0.49, 0.6])
    np.testing.assert_allclose(
        eval_binning_kernel(BinningKernel.RECT, xs), [0, 1, 1, 1, 0]
    )


def test_linear_values():
    xs = np.array([-1.5, -0.5, 0.0, 0.25, 1.0])
    np.testing.assert_allclose(
        eval_binning_kernel(BinningKernel.LINEAR, xs), [0, 0.5, 1.0, 0.75, 0]
    )


def test_gauss_is_truncated_not_renormalized():
    # the truncated gaussian keeps the standard normal density inside |x| < 1.5
    x = np.array([0.0, 1.0, 1.49, 1.51])
    expect = np.exp(-x**2 / 2) / np.sqrt(2 * np.pi)
    expect[3] = 0.0
    np.testing.assert_allclose(eval_binning_kernel(BinningKernel.GAUSS_TRUNC, x), expect)
    mass = kernel_mass(BinningKernel.GAUSS_TRUNC)
    assert abs(mass - erf(1.5 / np.sqrt(2))) < 1e-9
    assert mass < 1.0


def test_binning_kernel_prime_matches_fd_away_from_kinks():
    rng = np.random.default_rng(3)
    for k in BinningKernel:
        xs = rng.uniform(-1.4, 1.4, 200)
        # keep a margin from the discontinuities of k and k'
        xs = xs[np.min(np.abs(xs[:, None] - np.array([-1.5, -1, -0.5, 0, 0.5, 1, 1.5])), axis=1) > 1e-3]
        h = 1e-6
        fd = (eval_binning_kernel(k, xs + h) - eval_binning_kernel(k, xs - h)) / (2 * h)
        np.testing.assert_allclose(eval_binning_kernel_prime(k, xs), fd, atol=1e-6)


def test_recon_kernels_unit_mass():
    xs = np.linspace(-2.5, 2.5, 200001)
    for l in ReconKernel:
        mass = np.trapezoid(eval_recon_kernel(l, xs), xs)
        assert abs(mass - 1.0) < 1e-6, l


def test_lanczos_raw_mass_differs():
    xs = np.linspace(-2.0, 2.0, 200001)
    raw = np.trapezoid(eval_recon_kernel(ReconKernel.LANCZOS, xs, raw_mass=True), xs)
    assert abs(raw - 1.0) > 1e-4  # the windowed sinc does not integrate to one


def test_cubic_interpolation_conditions():
    # the cubic reconstruction interpolates: 1 at 0, 0 at the other integers
    vals = eval_recon_kernel(ReconKernel.CUBIC, np.array([0.0, 1.0, 2.0, -1.0]))
    np.testing.assert_allclose(vals, [1.0, 0.0, 0.0, 0.0], atol=1e-12)


def test_kappa_rect_linear_closed_form_points():
    sk = synthesize_kappa(BinningKernel.RECT, ReconKernel.LINEAR)
    assert abs(sk.kappa(0.0) - 0.75) < 1e-12
    assert abs(sk.kappa(1.0) - 0.125) < 1e-12
    assert abs(sk.kappa(-1.0) - 0.125) < 1e-12
    assert abs(sk.kappa_prime(0.5) - (-1.0)) < 1e-12
    assert abs(sk.kappa_prime(1.0) - (-0.5)) < 1e-12


def test_kappa_linear_linear_closed_form_points():
    sk = synthesize_kappa(BinningKernel.LINEAR, ReconKernel.LINEAR)
    assert abs(sk.kappa(0.0) - 2.0 / 3.0) < 1e-12
    assert abs(sk.kappa(2.0)) < 1e-12


@pytest.mark.parametrize("k,l", ALL_PAIRS)
def test_kappa_matches_quadrature_oracle(k, l):
    xs = np.linspace(-3.0, 3.0, 301)
    sk = synthesize_kappa(k, l)
    oracle = numeric_convolve_oracle(k, l, xs)
    tol = 1e-6 if l == ReconKernel.LINEAR else 5e-5
    np.testing.assert_allclose(sk.kappa(xs), oracle, atol=tol)


@pytest.mark.parametrize("k,l", ALL_PAIRS)
def test_kappa_prime_matches_fd_of_kappa(k, l):
    sk = synthesize_kappa(k, l)
    xs = np.linspace(-sk.support_radius + 0.05, sk.support_radius - 0.05, 97)
    h = 1e-5
    fd = (sk.kappa(xs + h) - sk.kappa(xs - h)) / (2 * h)
    np.testing.assert_allclose(sk.kappa_prime(xs), fd, atol=2e-4)


@pytest.mark.parametrize("k,l", ALL_PAIRS)
def test_mass_preserved(k, l):
    sk = synthesize_kappa(k, l)
    assert abs(kappa_mass(sk) - kernel_mass(k)) < 1e-8


@pytest.mark.parametrize("k,l", ALL_PAIRS)
def test_kappa_support(k, l):
    sk = synthesize_kappa(k, l)
    assert sk.support_radius == pytest.approx(BINNING_SUPPORT[k] + RECON_SUPPORT[l])
    out = sk.kappa(np.array([-sk.support_radius - 0.01, sk.support_radius + 0.01]))
    np.testing.assert_allclose(out, 0.0, atol=1e-12)


@settings(deadline=None, max_examples=60)
@given(st.floats(-3.0, 3.0))
def test_kappa_even_symmetry(x):
    sk = synthesize_kappa(BinningKernel.RECT, ReconKernel.LINEAR)
    assert sk.kappa(x) == pytest.approx(sk.kappa(-x), abs=1e-12)
    assert sk.kappa_prime(x) == pytest.approx(-sk.kappa_prime(-x), abs=1e-12)
