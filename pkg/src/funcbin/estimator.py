"""Warp -> binning -> score composition and L-BFGS maximization.

The objective is a scalar function of the three motion parameters. Its
gradient flows backward through the score adjoint, the binning VJP under
the configured derivative rule, and the analytic warp Jacobians.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import line_search

from .binning import Frame, FrameGrid, GradMode, Naive, WeightedPoints, bin_forward, bin_vjp
from .errors import LengthMismatchError
from .kernels import BinningKernel
from .objectives import ScoreKind, adjoint, score
from .warp import EventPacket, WarpResult, warp


@dataclass(frozen=True)
class ObjectiveConfig:
    """Everything that fixes the objective apart from the parameters."""

    kernel: BinningKernel
    mode: GradMode
    score: ScoreKind
    grid: FrameGrid
    model: str = "rot"
    scale: float = 1.0
    weight_mode: str = "ones"
    project: bool = True


def _warp_to_grid(cfg: ObjectiveConfig, packet: EventPacket, theta) -> tuple[WeightedPoints, WarpResult]:
    res = warp(packet, cfg.model, theta, weight_mode=cfg.weight_mode, project=cfg.project)
    pts = WeightedPoints(cfg.scale * res.points.xs, cfg.scale * res.points.ys, res.points.ws)
    return pts, res


def objective_frame(cfg: ObjectiveConfig, packet: EventPacket, theta) -> Frame:
    """The binned frame at the given motion parameters."""
    pts, _ = _warp_to_grid(cfg, packet, theta)
    return bin_forward(pts, cfg.grid, cfg.kernel)


def objective_value(cfg: ObjectiveConfig, packet: EventPacket, theta) -> float:
    """score(bin(warp(packet, theta))). Independent of the gradient mode."""
    return score(objective_frame(cfg, packet, theta), cfg.score)


def objective_grad(cfg: ObjectiveConfig, packet: EventPacket, theta) -> np.ndarray:
    """Analytic d objective / d theta via the VJP chain."""
    pts, res = _warp_to_grid(cfg, packet, theta)
    frame = bin_forward(pts, cfg.grid, cfg.kernel)
    vbar = adjoint(frame, cfg.score)
    gx, gy = bin_vjp(pts, vbar, cfg.grid, cfg.kernel, cfg.mode)
    # chain through the coordinate scale and the per-event warp Jacobians
    contrib = cfg.scale * (gx[:, None] * res.jacobian[:, 0, :] + gy[:, None] * res.jacobian[:, 1, :])
    return contrib.sum(axis=0)


def objective_value_and_grad(cfg: ObjectiveConfig, packet: EventPacket, theta):
    """Evaluate value and gradient sharing the forward pass."""
    pts, res = _warp_to_grid(cfg, packet, theta)
    frame = bin_forward(pts, cfg.grid, cfg.kernel)
    val = score(frame, cfg.score)
    vbar = adjoint(frame, cfg.score)
    gx, gy = bin_vjp(pts, vbar, cfg.grid, cfg.kernel, cfg.mode)
    contrib = cfg.scale * (gx[:, None] * res.jacobian[:, 0, :] + gy[:, None] * res.jacobian[:, 1, :])
    return val, contrib.sum(axis=0)


# --- optimizer --------------------------------------------------------------


@dataclass
class OptTrace:
    """Accepted iterates of one optimization run."""

    thetas: list = field(default_factory=list)
    values: list = field(default_factory=list)
    grad_norms: list = field(default_factory=list)
    times: list = field(default_factory=list)
    converged: bool = False
    reason: str = "max_iter"

    def record(self, theta, value, gnorm, t):
        self.thetas.append(np.array(theta, dtype=float))
        self.values.append(float(value))
        self.grad_norms.append(float(gnorm))
        self.times.append(float(t))


@dataclass(frozen=True)
class LbfgsOptions:
    history: int = 10
    max_iter: int = 100
    grad_tol: float = 1e-6
    # stop after `patience` consecutive steps with relative objective change
    # below ftol (piecewise-constant forwards never reach grad_tol)
    ftol: float = 1e-10
    patience: int = 3
    c1: float = 1e-4
    c2: float = 0.9


def _lbfgs_minimize(f, g, x0, opts: LbfgsOptions) -> tuple[np.ndarray, OptTrace]:
    """Unbounded L-BFGS with a strong-Wolfe line search.

    Two-loop recursion for the search direction; the line search comes from
    scipy (strong Wolfe) with an Armijo backtracking fallback.
    """
    x = np.asarray(x0, dtype=float).copy()
    trace = OptTrace()
    t0 = time.perf_counter()
    fx = f(x)
    gx = g(x)
    trace.record(x, fx, np.linalg.norm(gx), time.perf_counter() - t0)
    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    stall = 0
    for _ in range(opts.max_iter):
        gnorm = np.linalg.norm(gx)
        if gnorm <= opts.grad_tol:
            trace.converged = True
            trace.reason = "grad_tol"
            break
        d = _two_loop_direction(gx, s_hist, y_hist)
        if np.dot(d, gx) >= 0:  # not a descent direction; restart
            d = -gx
            s_hist.clear()
            y_hist.clear()
        alpha = _wolfe_step(f, g, x, d, fx, gx, opts)
        if alpha is None:
            trace.reason = "line_search_failure"
            break
        x_new = x + alpha * d
        f_new = f(x_new)
        g_new = g(x_new)
        s = x_new - x
        yv = g_new - gx
        if np.dot(s, yv) > 1e-12 * np.linalg.norm(s) * np.linalg.norm(yv):
            s_hist.append(s)
            y_hist.append(yv)
            if len(s_hist) > opts.history:
                s_hist.pop(0)
                y_hist.pop(0)
        rel_change = abs(fx - f_new) / max(1.0, abs(fx))
        x, fx, gx = x_new, f_new, g_new
        trace.record(x, fx, np.linalg.norm(gx), time.perf_counter() - t0)
        stall = stall + 1 if rel_change <= opts.ftol else 0
        if stall >= opts.patience:
            trace.converged = True
            trace.reason = "ftol"
            break
    else:
        trace.reason = "max_iter"
    if np.linalg.norm(gx) <= opts.grad_tol:
        trace.converged = True
        trace.reason = "grad_tol"
    return x, trace


def _two_loop_direction(gx, s_hist, y_hist) -> np.ndarray:
    q = gx.copy()
    alphas = []
    for s, y in zip(reversed(s_hist), reversed(y_hist)):
        rho = 1.0 / np.dot(y, s)
        a = rho * np.dot(s, q)
        alphas.append((a, rho, s, y))
        q -= a * y
    if y_hist:
        y_last = y_hist[-1]
        s_last = s_hist[-1]
        q *= np.dot(s_last, y_last) / np.dot(y_last, y_last)
    for a, rho, s, y in reversed(alphas):
        b = rho * np.dot(y, q)
        q += (a - b) * s
    return -q


def _wolfe_step(f, g, x, d, fx, gx, opts: LbfgsOptions):
    with np.errstate(all="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = line_search(f, g, x, d, gfk=gx, old_fval=fx, c1=opts.c1, c2=opts.c2, maxiter=30)
    alpha = res[0]
    if alpha is not None and alpha > 0:
        return alpha
    # Armijo backtracking fallback
    slope = np.dot(gx, d)
    alpha = 1.0
    for _ in range(40):
        if f(x + alpha * d) <= fx + opts.c1 * alpha * slope:
            return alpha
        alpha *= 0.5
    return None


def lbfgs_maximize(
    cfg: ObjectiveConfig,
    packet: EventPacket,
    theta0,
    opts: LbfgsOptions = LbfgsOptions(),
) -> tuple[np.ndarray, OptTrace]:
    """Maximize the contrast objective; returns the best iterate and trace.

    Implemented as minimization of the negated score; the trace reports the
    un-negated (maximized) values.
    """

    def f(theta):
        return -objective_value(cfg, packet, theta)

    def g(theta):
        return -objective_grad(cfg, packet, theta)

    theta, trace = _lbfgs_minimize(f, g, theta0, opts)
    trace.values = [-v for v in trace.values]
    return theta, trace


def rms_error(estimates, truths, *, to_degrees: bool = False) -> float:
    """Root-mean-square parameter error over packets.

    With ``to_degrees=True`` the result is converted from rad/s to deg/s
    for rotational reporting.
    """
    est = np.asarray(estimates, dtype=float)
    tru = np.asarray(truths, dtype=float)
    if est.shape != tru.shape or est.ndim != 2 or est.shape[0] == 0:
        raise LengthMismatchError(f"estimate/truth shapes disagree or empty: {est.shape} vs {tru.shape}")
    rms = float(np.sqrt(np.mean(np.sum((est - tru) ** 2, axis=1))))
    if to_degrees:
        rms *= 180.0 / np.pi
    return rms
