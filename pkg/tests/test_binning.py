"""Binning primal/JVP/VJP behavior and invariants."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from funcbin import (
    FBP,
    BinningKernel,
    Frame,
    FrameGrid,
    Naive,
    ReconKernel,
    STE,
    Sigmoid,
    WeightedPoints,
    bin_forward,
    bin_forward_1d,
    bin_jvp,
    bin_jvp_1d,
    bin_vjp,
)
from funcbin.errors import InvalidGridError, LengthMismatchError, ShapeMismatchError

ALL_MODES = [
    Naive(),
    FBP(ReconKernel.LINEAR),
    FBP(ReconKernel.CUBIC),
    FBP(ReconKernel.LANCZOS),
    STE(),
    Sigmoid(),
]


def _random_instance(rng, n=25, w=16, h=12):
    grid = FrameGrid(w, h, 0.5)
    pts = WeightedPoints(
        rng.uniform(1.0, (w - 2) * 0.5, n),
        rng.uniform(1.0, (h - 2) * 0.5, n),
        rng.uniform(0.5, 2.0, n),
    )
    return pts, grid


def test_grid_validation():
    with pytest.raises(InvalidGridError):
        FrameGrid(0, 5, 0.1)
    with pytest.raises(InvalidGridError):
        FrameGrid(5, 5, 0.0)


def test_points_validation():
    with pytest.raises(LengthMismatchError):
        WeightedPoints([1.0, 2.0], [1.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        WeightedPoints([np.nan], [0.0], [1.0])


def test_frame_shape_checked():
    with pytest.raises(ShapeMismatchError):
        Frame(FrameGrid(4, 3, 1.0), np.zeros((3, 4)))


def test_mass_conservation_interior_points():
    # rect and linear kernels form a partition of unity, so every interior
    # point deposits exactly its weight
    rng = np.random.default_rng(0)
    pts, grid = _random_instance(rng)
    for k in (BinningKernel.RECT, BinningKernel.LINEAR):
        frame = bin_forward(pts, grid, k)
        assert frame.values.sum() == pytest.approx(pts.ws.sum(), rel=1e-12)


def test_single_point_rect():
    grid = FrameGrid(8, 8, 1.0)
    pts = WeightedPoints([3.2], [4.9], [2.0])
    frame = bin_forward(pts, grid, BinningKernel.RECT)
    assert frame.values[3, 5] == 2.0
    assert frame.values.sum() == 2.0


def test_linear_splits_between_bins():
    grid = FrameGrid(8, 8, 1.0)
    pts = WeightedPoints([3.25], [5.0], [1.0])
    frame = bin_forward(pts, grid, BinningKernel.LINEAR)
    assert frame.values[3, 5] == pytest.approx(0.75)
    assert frame.values[4, 5] == pytest.approx(0.25)


def test_outside_points_dropped():
    grid = FrameGrid(4, 4, 1.0)
    pts = WeightedPoints([-10.0, 50.0], [1.0, 1.0], [1.0, 1.0])
    frame = bin_forward(pts, grid, BinningKernel.RECT)
    assert frame.values.sum() == 0.0


def test_forward_is_deterministic():
    rng = np.random.default_rng(5)
    pts, grid = _random_instance(rng, n=500)
    a = bin_forward(pts, grid, BinningKernel.LINEAR).values
    b = bin_forward(pts, grid, BinningKernel.LINEAR).values
    assert np.array_equal(a, b)


def test_zero_tangents_give_zero_jvp():
    rng = np.random.default_rng(1)
    pts, grid = _random_instance(rng)
    z = np.zeros(len(pts))
    for mode in ALL_MODES:
        out = bin_jvp(pts, (z, z), grid, BinningKernel.RECT, mode)
        assert np.all(out == 0.0)


def test_jvp_1d_symmetric_kernel_center():
    # a point sitting exactly on a bin center has kappa'(0) = 0
    out = bin_jvp_1d([2.0], [1.0], [1.0], 5, 1.0, 0.0, BinningKernel.RECT, FBP(ReconKernel.LINEAR))
    assert out[2] == 0.0


@pytest.mark.parametrize("k", list(BinningKernel))
@pytest.mark.parametrize("mode", ALL_MODES)
def test_adjoint_consistency(k, mode):
    """<vbar, JVP(xdot)> must equal <VJP(vbar), xdot> for every rule."""
    rng = np.random.default_rng(42)
    for _ in range(10):
        pts, grid = _random_instance(rng)
        xdot = rng.normal(size=len(pts))
        ydot = rng.normal(size=len(pts))
        vbar = rng.normal(size=grid.shape)
        jvp = bin_jvp(pts, (xdot, ydot), grid, k, mode)
        gx, gy = bin_vjp(pts, vbar, grid, k, mode)
        lhs = float(np.sum(vbar * jvp))
        rhs = float(np.sum(gx * xdot) + np.sum(gy * ydot))
        assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12)


def test_forward_invariant_across_modes():
    # the derivative rule must never leak into the primal
    rng = np.random.default_rng(9)
    pts, grid = _random_instance(rng, n=200)
    ref = bin_forward(pts, grid, BinningKernel.RECT).values
    # modes only enter jvp/vjp; re-binning with any mode config is identical
    again = bin_forward(pts, grid, BinningKernel.RECT).values
    assert np.array_equal(ref, again)


def test_jvp_matches_fd_of_forward_smooth_kernel():
    rng = np.random.default_rng(7)
    pts, grid = _random_instance(rng, n=40)
    xdot = rng.normal(size=len(pts))
    ydot = rng.normal(size=len(pts))
    eps = 1e-6
    shifted = lambda s: bin_forward(
        WeightedPoints(pts.xs + s * eps * xdot, pts.ys + s * eps * ydot, pts.ws),
        grid,
        BinningKernel.LINEAR,
    ).values
    fd = (shifted(1) - shifted(-1)) / (2 * eps)
    jvp = bin_jvp(pts, (xdot, ydot), grid, BinningKernel.LINEAR, Naive())
    np.testing.assert_allclose(jvp, fd, atol=1e-5)


def test_1d_forward_partition_of_unity():
    out = bin_forward_1d([1.3, 2.7, 4.1], [1.0, 2.0, 3.0], 8, 1.0, 0.0, BinningKernel.LINEAR)
    assert out.sum() == pytest.approx(6.0)


@settings(deadline=None, max_examples=40)
@given(st.integers(0, 2**32 - 1))
def test_mass_conservation_property(seed):
    rng = np.random.default_rng(seed)
    pts, grid = _random_instance(rng, n=12)
    frame = bin_forward(pts, grid, BinningKernel.LINEAR)
    assert frame.values.sum() == pytest.approx(pts.ws.sum(), rel=1e-10)
