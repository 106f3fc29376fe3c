"""Binning primal, forward-mode tangent (JVP), and reverse-mode adjoint (VJP).

The primal scatters weighted points into a frame with a binning kernel k.
The derivative passes use a selectable rule for the per-axis derivative
factor: the pointwise kernel derivative (naive), the synthesized derivative
kappa' = (l * k)' of the convolved kernel, or a heuristic surrogate (STE /
sigmoid). The forward pass never depends on the rule.

Contributions falling outside the grid are dropped, not clamped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidGridError, LengthMismatchError, ShapeMismatchError
from .kernels import (
    BINNING_SUPPORT,
    BinningKernel,
    ReconKernel,
    eval_binning_kernel,
    eval_binning_kernel_prime,
    synthesize_kappa,
)


@dataclass(frozen=True)
class FrameGrid:
    """Uniform bin grid: ``width x height`` bins of spacing ``delta``.

    Bin (u, v) is centered at ``origin + (u, v) * delta`` in point coordinates.
    """

    width: int
    height: int
    delta: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.width < 1 or self.height < 1 or self.delta <= 0.0:
            raise InvalidGridError(
                f"need width >= 1, height >= 1, delta > 0; got {self.width}x{self.height}, delta={self.delta}"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return (self.width, self.height)


@dataclass
class WeightedPoints:
    """Parallel arrays of point coordinates and weights."""

    xs: np.ndarray
    ys: np.ndarray
    ws: np.ndarray

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=float)
        self.ys = np.asarray(self.ys, dtype=float)
        self.ws = np.asarray(self.ws, dtype=float)
        if not (len(self.xs) == len(self.ys) == len(self.ws)):
            raise LengthMismatchError(
                f"xs, ys, ws lengths differ: {len(self.xs)}, {len(self.ys)}, {len(self.ws)}"
            )
        for name, arr in (("xs", self.xs), ("ys", self.ys), ("ws", self.ws)):
            if arr.size and not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite entries in {name}")

    def __len__(self) -> int:
        return len(self.xs)


@dataclass
class Frame:
    """A binned frame: values[u, v] indexed x-major to match the grid."""

    grid: FrameGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ShapeMismatchError(f"values shape {self.values.shape} != grid {self.grid.shape}")


# --- gradient rules ---------------------------------------------------------


@dataclass(frozen=True)
class GradMode:
    """Base tag for the backward-pass derivative rule."""


@dataclass(frozen=True)
class Naive(GradMode):
    """Pointwise kernel derivative k' (zero a.e. for the rect kernel)."""


@dataclass(frozen=True)
class FBP(GradMode):
    """Synthesized derivative kappa' with kappa = l * k."""

    recon: ReconKernel = ReconKernel.LINEAR


@dataclass(frozen=True)
class STE(GradMode):
    """Straight-through estimator: kappa'(x) = -sgn(x) on |x| < 1."""


@dataclass(frozen=True)
class Sigmoid(GradMode):
    """Sigmoid surrogate: difference of sigmoid derivatives at slope-scaled edges."""

    slope: float = 10.0


def _sigma_prime(z: np.ndarray) -> np.ndarray:
    s = 1.0 / (1.0 + np.exp(-z))
    return s * (1.0 - s)


def ste_derivative(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) < 1.0, -np.sign(x), 0.0)


def sigmoid_derivative(x, slope: float = 10.0) -> np.ndarray:
    # derivative of the sigmoid-smoothed unit step pair sigma(s(x+1/2)) - sigma(s(x-1/2));
    # the slope factor comes from the chain rule
    x = np.asarray(x, dtype=float)
    return slope * (_sigma_prime(slope * (x + 0.5)) - _sigma_prime(slope * (x - 0.5)))


def _axis_rule(k: BinningKernel, mode: GradMode):
    """Resolve (g, g', loop radius) for the derivative passes.

    STE / sigmoid keep the FBP-linear kappa as the smoothing factor on the
    non-differentiated axis, so surrogate modes differ only in the 1D rule.
    """
    if isinstance(mode, Naive):
        g = lambda x: eval_binning_kernel(k, x)
        gp = lambda x: eval_binning_kernel_prime(k, x)
        return g, gp, BINNING_SUPPORT[k]
    if isinstance(mode, FBP):
        sk = synthesize_kappa(k, mode.recon)
        return sk.kappa, sk.kappa_prime, sk.support_radius
    sk = synthesize_kappa(k, ReconKernel.LINEAR)
    if isinstance(mode, STE):
        return sk.kappa, ste_derivative, sk.support_radius
    if isinstance(mode, Sigmoid):
        slope = mode.slope
        return sk.kappa, lambda x: sigmoid_derivative(x, slope), sk.support_radius
    raise ValueError(f"unknown grad mode {mode!r}")


# --- scatter/gather loops ---------------------------------------------------


def _offsets(coords: np.ndarray, radius: float):
    """Starting bin index and window size covering |coord - u| < radius."""
    u0 = np.ceil(coords - radius).astype(np.int64)
    count = int(np.floor(2.0 * radius)) + 1
    return u0, count


def bin_forward(pts: WeightedPoints, grid: FrameGrid, k: BinningKernel) -> Frame:
    """Scatter weighted points into the frame with binning kernel k."""
    W, H = grid.shape
    d = grid.delta
    xn = (pts.xs - grid.origin[0]) / d
    yn = (pts.ys - grid.origin[1]) / d
    r = BINNING_SUPPORT[k]
    u0, nu = _offsets(xn, r)
    v0, nv = _offsets(yn, r)
    flat = np.zeros(W * H)
    for du in range(nu):
        u = u0 + du
        wx = eval_binning_kernel(k, xn - u)
        for dv in range(nv):
            v = v0 + dv
            wy = eval_binning_kernel(k, yn - v)
            m = (u >= 0) & (u < W) & (v >= 0) & (v < H)
            flat += np.bincount(u[m] * H + v[m], weights=(pts.ws * wx * wy)[m], minlength=W * H)
    return Frame(grid, flat.reshape(W, H))


def bin_jvp(
    pts: WeightedPoints,
    tangents: tuple[np.ndarray, np.ndarray],
    grid: FrameGrid,
    k: BinningKernel,
    mode: GradMode,
) -> np.ndarray:
    """Frame-shaped tangent of the binning output along point tangents."""
    xdot = np.asarray(tangents[0], dtype=float)
    ydot = np.asarray(tangents[1], dtype=float)
    if len(xdot) != len(pts) or len(ydot) != len(pts):
        raise LengthMismatchError("tangents must match point count")
    W, H = grid.shape
    d = grid.delta
    xn = (pts.xs - grid.origin[0]) / d
    yn = (pts.ys - grid.origin[1]) / d
    g, gp, r = _axis_rule(k, mode)
    u0, nu = _offsets(xn, r)
    v0, nv = _offsets(yn, r)
    flat = np.zeros(W * H)
    for du in range(nu):
        u = u0 + du
        dx = xn - u
        gx, gpx = g(dx), gp(dx)
        for dv in range(nv):
            v = v0 + dv
            dy = yn - v
            gy, gpy = g(dy), gp(dy)
            vals = pts.ws * (gpx * gy * xdot + gx * gpy * ydot) / d
            m = (u >= 0) & (u < W) & (v >= 0) & (v < H)
            flat += np.bincount(u[m] * H + v[m], weights=vals[m], minlength=W * H)
    return flat.reshape(W, H)


def bin_vjp(
    pts: WeightedPoints,
    adjoint: np.ndarray,
    grid: FrameGrid,
    k: BinningKernel,
    mode: GradMode,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-point gradients (g_x, g_y); exact transpose of :func:`bin_jvp`."""
    adjoint = np.asarray(adjoint, dtype=float)
    if adjoint.shape != grid.shape:
        raise ShapeMismatchError(f"adjoint shape {adjoint.shape} != grid {grid.shape}")
    W, H = grid.shape
    d = grid.delta
    xn = (pts.xs - grid.origin[0]) / d
    yn = (pts.ys - grid.origin[1]) / d
    g, gp, r = _axis_rule(k, mode)
    u0, nu = _offsets(xn, r)
    v0, nv = _offsets(yn, r)
    n = len(pts)
    out_x = np.zeros(n)
    out_y = np.zeros(n)
    for du in range(nu):
        u = u0 + du
        dx = xn - u
        gx, gpx = g(dx), gp(dx)
        for dv in range(nv):
            v = v0 + dv
            dy = yn - v
            gy, gpy = g(dy), gp(dy)
            m = (u >= 0) & (u < W) & (v >= 0) & (v < H)
            a = np.zeros(n)
            a[m] = adjoint[u[m], v[m]]
            out_x += a * pts.ws * gpx * gy / d
            out_y += a * pts.ws * gx * gpy / d
    return out_x, out_y


# --- 1D variants ------------------------------------------------------------


def bin_forward_1d(xs, ws, width: int, delta: float, origin: float, k: BinningKernel) -> np.ndarray:
    """1D binning primal; mirrors the 2D pass on a single axis."""
    if width < 1 or delta <= 0.0:
        raise InvalidGridError(f"need width >= 1 and delta > 0; got {width}, {delta}")
    xs = np.asarray(xs, dtype=float)
    ws = np.asarray(ws, dtype=float)
    if len(xs) != len(ws):
        raise LengthMismatchError("xs and ws lengths differ")
    xn = (xs - origin) / delta
    u0, nu = _offsets(xn, BINNING_SUPPORT[k])
    out = np.zeros(width)
    for du in range(nu):
        u = u0 + du
        w = eval_binning_kernel(k, xn - u)
        m = (u >= 0) & (u < width)
        np.add.at(out, u[m], (ws * w)[m])
    return out


def bin_jvp_1d(xs, ws, xdot, width, delta, origin, k: BinningKernel, mode: GradMode) -> np.ndarray:
    """1D tangent pass."""
    xs = np.asarray(xs, dtype=float)
    ws = np.asarray(ws, dtype=float)
    xdot = np.asarray(xdot, dtype=float)
    xn = (xs - origin) / delta
    _, gp, r = _axis_rule(k, mode)
    u0, nu = _offsets(xn, r)
    out = np.zeros(width)
    for du in range(nu):
        u = u0 + du
        vals = ws * gp(xn - u) * xdot / delta
        m = (u >= 0) & (u < width)
        np.add.at(out, u[m], vals[m])
    return out


def bin_vjp_1d(xs, ws, adjoint, width, delta, origin, k: BinningKernel, mode: GradMode) -> np.ndarray:
    """1D adjoint pass; transpose of :func:`bin_jvp_1d`."""
    adjoint = np.asarray(adjoint, dtype=float)
    if adjoint.shape != (width,):
        raise ShapeMismatchError(f"adjoint shape {adjoint.shape} != ({width},)")
    xs = np.asarray(xs, dtype=float)
    ws = np.asarray(ws, dtype=float)
    xn = (xs - origin) / delta
    _, gp, r = _axis_rule(k, mode)
    u0, nu = _offsets(xn, r)
    out = np.zeros(len(xs))
    for du in range(nu):
        u = u0 + du
        m = (u >= 0) & (u < width)
        a = np.zeros(len(xs))
        a[m] = adjoint[u[m]]
        out += a * ws * gp(xn - u) / delta
    return out
