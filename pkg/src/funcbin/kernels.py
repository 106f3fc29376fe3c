"""Binning kernels, reconstruction kernels, and their convolution.

A binning kernel ``k`` spreads each weighted point over nearby bins. A
reconstruction kernel ``l`` (unit mass) encodes the smoothness prior used to
rebuild a continuous adjoint signal from per-bin values. Their convolution
``kappa = l * k`` is the kernel whose derivative replaces the (possibly
nonexistent) derivative of ``k`` in the backward pass.

All kernels here are symmetric with compact support. ``kappa`` is available
in closed form whenever ``l`` is the linear spline; every other pairing is
tabulated by numerical convolution and interpolated with a cubic spline.
"""

from __future__ import annotations

import functools
from enum import Enum

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline
from scipy.special import erf

_SQRT2 = np.sqrt(2.0)
_SQRT_2PI = np.sqrt(2.0 * np.pi)


class BinningKernel(str, Enum):
    RECT = "rect"
    LINEAR = "linear"
    GAUSS_TRUNC = "gauss"


class ReconKernel(str, Enum):
    LINEAR = "linear"
    CUBIC = "cubic"
    LANCZOS = "lanczos"


BINNING_SUPPORT = {
    BinningKernel.RECT: 0.5,
    BinningKernel.LINEAR: 1.0,
    BinningKernel.GAUSS_TRUNC: 1.5,
}

RECON_SUPPORT = {
    ReconKernel.LINEAR: 1.0,
    ReconKernel.CUBIC: 2.0,
    ReconKernel.LANCZOS: 2.0,
}

# Interior discontinuities / kinks of each binning kernel, used to split
# quadrature domains so trapezoid rules stay accurate across jumps.
_BINNING_BREAKS = {
    BinningKernel.RECT: (-0.5, 0.5),
    BinningKernel.LINEAR: (-1.0, 0.0, 1.0),
    BinningKernel.GAUSS_TRUNC: (-1.5, 1.5),
}

_RECON_BREAKS = {
    ReconKernel.LINEAR: (-1.0, 0.0, 1.0),
    ReconKernel.CUBIC: (-2.0, -1.0, 0.0, 1.0, 2.0),
    ReconKernel.LANCZOS: (-2.0, 2.0),
}


def eval_binning_kernel(kind: BinningKernel, x) -> np.ndarray:
    """Evaluate the binning kernel k at x (vectorized, exact zero outside support)."""
    x = np.asarray(x, dtype=float)
    a = np.abs(x)
    if kind == BinningKernel.RECT:
        return np.where(a < 0.5, 1.0, 0.0)
    if kind == BinningKernel.LINEAR:
        return np.where(a < 1.0, 1.0 - a, 0.0)
    if kind == BinningKernel.GAUSS_TRUNC:
        return np.where(a < 1.5, np.exp(-0.5 * x * x) / _SQRT_2PI, 0.0)
    raise ValueError(f"unknown binning kernel {kind!r}")


def eval_binning_kernel_prime(kind: BinningKernel, x) -> np.ndarray:
    """Pointwise derivative of k (the 'naive' gradient rule; zero a.e. for rect)."""
    x = np.asarray(x, dtype=float)
    a = np.abs(x)
    if kind == BinningKernel.RECT:
        return np.zeros_like(x)
    if kind == BinningKernel.LINEAR:
        return np.where(a < 1.0, -np.sign(x), 0.0)
    if kind == BinningKernel.GAUSS_TRUNC:
        return np.where(a < 1.5, -x * np.exp(-0.5 * x * x) / _SQRT_2PI, 0.0)
    raise ValueError(f"unknown binning kernel {kind!r}")


@functools.lru_cache(maxsize=None)
def _lanczos_mass() -> float:
    xs = np.linspace(-2.0, 2.0, 400001)
    return float(simpson(_lanczos_raw(xs), x=xs))


def _lanczos_raw(x: np.ndarray) -> np.ndarray:
    a = np.abs(x)
    out = np.zeros_like(x)
    inside = a <= 2.0
    xi = x[inside]
    with np.errstate(invalid="ignore", divide="ignore"):
        val = 2.0 * np.sin(np.pi * xi) * np.sin(0.5 * np.pi * xi) / (np.pi * xi) ** 2
    val = np.where(xi == 0.0, 1.0, val)
    out[inside] = val
    return out


def eval_recon_kernel(kind: ReconKernel, x, *, raw_mass: bool = False) -> np.ndarray:
    """Evaluate the reconstruction kernel l at x.

    Lanczos is renormalized to unit mass by default; pass ``raw_mass=True``
    for the unnormalized windowed sinc.
    """
    x = np.asarray(x, dtype=float)
    a = np.abs(x)
    if kind == ReconKernel.LINEAR:
        return np.maximum(1.0 - a, 0.0)
    if kind == ReconKernel.CUBIC:
        inner = 1.5 * a**3 - 2.5 * a**2 + 1.0
        outer = 2.5 * a**2 - 0.5 * a**3 - 4.0 * a + 2.0
        return np.where(a < 1.0, inner, np.where(a <= 2.0, outer, 0.0))
    if kind == ReconKernel.LANCZOS:
        out = _lanczos_raw(x)
        if not raw_mass:
            out = out / _lanczos_mass()
        return out
    raise ValueError(f"unknown reconstruction kernel {kind!r}")


# ---------------------------------------------------------------------------
# kappa = l * k
# ---------------------------------------------------------------------------


class SynthesizedKernel:
    """The convolution kappa = l * k and its derivative.

    Immutable after construction; evaluation is pure and thread-safe.
    """

    def __init__(self, k_kind: BinningKernel, l_kind: ReconKernel):
        self.k_kind = k_kind
        self.l_kind = l_kind
        self.support_radius = BINNING_SUPPORT[k_kind] + RECON_SUPPORT[l_kind]

    @property
    def is_closed_form(self) -> bool:
        return isinstance(self, _ClosedFormKernel)

    def kappa(self, x) -> np.ndarray:
        raise NotImplementedError

    def kappa_prime(self, x) -> np.ndarray:
        raise NotImplementedError


def _rect_antider(t: np.ndarray, order: int) -> np.ndarray:
    # K1 / K2: first and second antiderivatives of k_rect, vanishing at -inf.
    if order == 1:
        return np.clip(t, -0.5, 0.5) + 0.5
    lo = t <= -0.5
    hi = t >= 0.5
    mid = ~(lo | hi)
    out = np.empty_like(t)
    out[lo] = 0.0
    out[mid] = 0.5 * (t[mid] + 0.5) ** 2
    out[hi] = t[hi]  # K2(0.5) = 0.5, slope 1 beyond
    return out


def _linear_antider(t: np.ndarray, order: int) -> np.ndarray:
    a = np.abs(t)
    s = np.sign(t)
    if order == 1:
        core = 0.5 + s * (np.minimum(a, 1.0) - 0.5 * np.minimum(a, 1.0) ** 2)
        return core
    # second antiderivative of the triangle, vanishing for t <= -1
    out = np.empty_like(t)
    lo = t <= -1.0
    hi = t >= 1.0
    neg = (~lo) & (t < 0.0)
    pos = (~hi) & (t >= 0.0)
    out[lo] = 0.0
    out[neg] = (t[neg] + 1.0) ** 3 / 6.0
    tp = t[pos]
    out[pos] = 1.0 / 6.0 + 0.5 * tp + 0.5 * tp**2 - tp**3 / 6.0
    out[hi] = t[hi]  # K2(1) = 1, slope 1 beyond
    return out


def _gauss_phi(t: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * t * t) / _SQRT_2PI


def _gauss_cdf(t: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + erf(t / _SQRT2))


_GAUSS_MASS = float(erf(1.5 / _SQRT2))


def _gauss_antider(t: np.ndarray, order: int) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    lo = t <= -1.5
    hi = t >= 1.5
    mid = ~(lo | hi)
    out = np.empty_like(t)
    if order == 1:
        out[lo] = 0.0
        out[mid] = _gauss_cdf(t[mid]) - _gauss_cdf(np.full(1, -1.5))
        out[hi] = _GAUSS_MASS
        return out
    # second antiderivative: integral of the above from -1.5
    cdf_lo = _gauss_cdf(np.full(1, -1.5))[0]
    phi_lo = _gauss_phi(np.full(1, -1.5))[0]

    def inner(tt):
        return tt * _gauss_cdf(tt) + _gauss_phi(tt) - (-1.5 * cdf_lo + phi_lo) - cdf_lo * (tt + 1.5)

    out[lo] = 0.0
    out[mid] = inner(t[mid])
    k2_hi = inner(np.full(1, 1.5))[0]
    out[hi] = k2_hi + _GAUSS_MASS * (t[hi] - 1.5)
    return out


_ANTIDERS = {
    BinningKernel.RECT: _rect_antider,
    BinningKernel.LINEAR: _linear_antider,
    BinningKernel.GAUSS_TRUNC: _gauss_antider,
}


class _ClosedFormKernel(SynthesizedKernel):
    """Exact kappa for l = linear spline.

    Convolving with the triangle equals a second difference of the second
    antiderivative of k: kappa(x) = K2(x+1) - 2 K2(x) + K2(x-1), and
    kappa'(x) = K1(x+1) - 2 K1(x) + K1(x-1). This reproduces the piecewise
    polynomial / erf branch formulas exactly and is stable at branch edges.
    """

    def kappa(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        f = _ANTIDERS[self.k_kind]
        out = f(x + 1.0, 2) - 2.0 * f(x, 2) + f(x - 1.0, 2)
        return np.where(np.abs(x) >= self.support_radius, 0.0, out)

    def kappa_prime(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        f = _ANTIDERS[self.k_kind]
        out = f(x + 1.0, 1) - 2.0 * f(x, 1) + f(x - 1.0, 1)
        return np.where(np.abs(x) >= self.support_radius, 0.0, out)


class _TabulatedKernel(SynthesizedKernel):
    """kappa sampled on a uniform grid and interpolated with a cubic spline."""

    def __init__(self, k_kind, l_kind, step: float = 1e-3):
        super().__init__(k_kind, l_kind)
        self.step = step
        r = self.support_radius
        xs = np.arange(-r, r + step / 2, step)
        vals = _convolve_on_grid(k_kind, l_kind, xs)
        self._spline = CubicSpline(xs, vals, bc_type="natural")
        self._dspline = self._spline.derivative()

    def kappa(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) < self.support_radius
        out = np.zeros_like(x)
        out[inside] = self._spline(x[inside])
        return out

    def kappa_prime(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) < self.support_radius
        out = np.zeros_like(x)
        out[inside] = self._dspline(x[inside])
        return out


def _convolve_on_grid(k_kind, l_kind, xs, step: float = 1e-3) -> np.ndarray:
    """Simpson evaluation of (l * k)(xs), integrating over k's support.

    Integrating over the binning kernel's variable keeps its jump
    discontinuities at the fixed integration limits, so the integrand is
    piecewise smooth and Simpson converges fast.
    """
    rk = BINNING_SUPPORT[k_kind]
    n = int(np.ceil(2 * rk / step))
    if n % 2 == 1:
        n += 1
    ys = np.linspace(-rk, rk, n + 1)
    ky = eval_binning_kernel(k_kind, np.clip(ys, -rk + 1e-12, rk - 1e-12))
    out = np.empty(len(xs))
    block = 512
    for i in range(0, len(xs), block):
        xb = np.asarray(xs[i : i + block])
        lv = eval_recon_kernel(l_kind, xb[:, None] - ys[None, :])
        out[i : i + block] = simpson(lv * ky[None, :], x=ys, axis=1)
    return out


@functools.lru_cache(maxsize=None)
def synthesize_kappa(k_kind: BinningKernel, l_kind: ReconKernel) -> SynthesizedKernel:
    """Build kappa = l * k: closed form when l is linear, tabulated otherwise."""
    if l_kind == ReconKernel.LINEAR:
        return _ClosedFormKernel(k_kind, l_kind)
    return _TabulatedKernel(k_kind, l_kind)


def numeric_convolve_oracle(k_kind: BinningKernel, l_kind: ReconKernel, xs, step: float = 1e-4):
    """Independent trapezoid-rule evaluation of integral l(y) k(x - y) dy.

    The y-domain is split at every discontinuity of l(y) and of k(x - y) so
    the trapezoid rule sees only smooth pieces. Intended for tests.
    """
    rl = RECON_SUPPORT[l_kind]
    out = []
    for x in np.atleast_1d(np.asarray(xs, dtype=float)):
        brks = set(_RECON_BREAKS[l_kind])
        for e in _BINNING_BREAKS[k_kind]:
            y = x - e
            if -rl < y < rl:
                brks.add(y)
        brks.update((-rl, rl))
        pts = sorted(brks)
        total = 0.0
        for a, b in zip(pts[:-1], pts[1:]):
            if b - a < 1e-12:
                continue
            n = max(int(np.ceil((b - a) / step)), 2)
            ys = np.linspace(a, b, n + 1)
            # evaluate just inside the piece so jumps at the edges use limits
            ye = np.clip(ys, a + 1e-12, b - 1e-12)
            total += np.trapezoid(eval_recon_kernel(l_kind, ye) * eval_binning_kernel(k_kind, x - ye), ys)
        out.append(total)
    return np.asarray(out)


def kernel_mass(kind: BinningKernel, step: float = 1e-5) -> float:
    """Quadrature mass of the binning kernel over its support."""
    r = BINNING_SUPPORT[kind]
    n = int(np.ceil(2 * r / step))
    if n % 2 == 1:
        n += 1
    xs = np.linspace(-r, r, n + 1)
    vals = eval_binning_kernel(kind, np.clip(xs, -r + 1e-12, r - 1e-12))
    return float(simpson(vals, x=xs))


def kappa_mass(sk: SynthesizedKernel, step: float = 1e-5) -> float:
    """Quadrature mass of kappa over its support."""
    r = sk.support_radius
    n = int(np.ceil(2 * r / step))
    if n % 2 == 1:
        n += 1
    xs = np.linspace(-r, r, n + 1)
    return float(simpson(sk.kappa(xs), x=xs))
