"""Event containers and parametric warps with analytic Jacobians.

Events are lifted to homogeneous coordinates (x, y, 1), moved by a
rotational or translational model scaled by the time offset to the packet
reference time, then perspective-projected back to 2D. Jacobians of the
projected coordinates with respect to the three motion parameters are
computed by the chain rule and validated against finite differences in the
test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .binning import WeightedPoints
from .errors import LengthMismatchError

PROJECTION_GUARD = 1e-6


@dataclass(frozen=True)
class Event:
    """A single sensor spike."""

    t: float
    x: float
    y: float
    polarity: int

    def __post_init__(self):
        if self.polarity not in (-1, 1):
            raise ValueError(f"polarity must be -1 or +1, got {self.polarity}")
        if not np.isfinite(self.t):
            raise ValueError("timestamp must be finite")


class RefTimePolicy(str, Enum):
    MEAN = "mean"
    MIDPOINT = "midpoint"
    FIRST = "first"
    LAST = "last"


def reference_time(ts: np.ndarray, policy: RefTimePolicy = RefTimePolicy.MEAN) -> float:
    """Reference timestamp of a packet under the given policy."""
    ts = np.asarray(ts, dtype=float)
    if ts.size == 0:
        raise ValueError("empty timestamp array")
    if policy == RefTimePolicy.MEAN:
        return float(np.mean(ts))
    if policy == RefTimePolicy.MIDPOINT:
        return float(0.5 * (ts[0] + ts[-1]))
    if policy == RefTimePolicy.FIRST:
        return float(ts[0])
    if policy == RefTimePolicy.LAST:
        return float(ts[-1])
    raise ValueError(f"unknown policy {policy!r}")


@dataclass
class EventPacket:
    """A time-sorted batch of events with a reference time."""

    ts: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    ps: np.ndarray
    t_ref: float

    def __post_init__(self):
        self.ts = np.asarray(self.ts, dtype=float)
        self.xs = np.asarray(self.xs, dtype=float)
        self.ys = np.asarray(self.ys, dtype=float)
        self.ps = np.asarray(self.ps, dtype=int)
        n = len(self.ts)
        if n < 1:
            raise ValueError("packet must contain at least one event")
        if not (len(self.xs) == len(self.ys) == len(self.ps) == n):
            raise LengthMismatchError("event arrays disagree in length")
        if np.any(np.diff(self.ts) < 0):
            raise ValueError("timestamps must be nondecreasing")
        if not (self.ts[0] <= self.t_ref <= self.ts[-1]):
            raise ValueError(f"t_ref {self.t_ref} outside [{self.ts[0]}, {self.ts[-1]}]")

    def __len__(self) -> int:
        return len(self.ts)

    @classmethod
    def from_events(cls, events, policy: RefTimePolicy = RefTimePolicy.MEAN) -> "EventPacket":
        ts = np.array([e.t for e in events], dtype=float)
        xs = np.array([e.x for e in events], dtype=float)
        ys = np.array([e.y for e in events], dtype=float)
        ps = np.array([e.polarity for e in events], dtype=int)
        return cls(ts, xs, ys, ps, reference_time(ts, policy))


@dataclass(frozen=True)
class MotionParams:
    """Planted or estimated motion: 'rot' (rad/s) or 'trans' (units/s)."""

    model: str
    vec: tuple[float, float, float]

    def __post_init__(self):
        if self.model not in ("rot", "trans"):
            raise ValueError(f"model must be 'rot' or 'trans', got {self.model!r}")
        object.__setattr__(self, "vec", tuple(float(v) for v in self.vec))
        if not all(np.isfinite(self.vec)):
            raise ValueError("motion parameters must be finite")


@dataclass
class WarpResult:
    """Projected points, weights, per-event 2x3 Jacobians, and bookkeeping."""

    points: WeightedPoints
    jacobian: np.ndarray  # (n_kept, 2, 3)
    kept: np.ndarray  # boolean mask over the input packet
    n_excluded: int = 0


def _event_weights(packet: EventPacket, weight_mode: str) -> np.ndarray:
    if weight_mode == "ones":
        return np.ones(len(packet))
    if weight_mode == "polarity":
        return packet.ps.astype(float)
    raise ValueError(f"unknown weight mode {weight_mode!r}")


def _project(h: np.ndarray, project: bool, guard: float):
    """Perspective divide with a guard; returns (x, y, keep mask, dproj/dh)."""
    n = len(h)
    if not project:
        keep = np.ones(n, dtype=bool)
        P = np.zeros((n, 2, 3))
        P[:, 0, 0] = 1.0
        P[:, 1, 1] = 1.0
        return h[:, 0], h[:, 1], keep, P
    z = h[:, 2]
    keep = np.abs(z) >= guard
    hz = np.where(keep, z, 1.0)
    px = h[:, 0] / hz
    py = h[:, 1] / hz
    P = np.zeros((n, 2, 3))
    P[:, 0, 0] = 1.0 / hz
    P[:, 1, 1] = 1.0 / hz
    P[:, 0, 2] = -h[:, 0] / hz**2
    P[:, 1, 2] = -h[:, 1] / hz**2
    return px, py, keep, P


def warp_rotational(
    packet: EventPacket,
    omega,
    *,
    weight_mode: str = "ones",
    project: bool = True,
    guard: float = PROJECTION_GUARD,
) -> WarpResult:
    """Rotate homogeneous event coordinates by the angular-velocity model.

    Each event moves to ``(t_ref - t) * omega x X + X`` with ``X = (x, y, 1)``,
    followed by the perspective divide. Events whose projection denominator
    falls under the guard are excluded and counted.
    """
    omega = np.asarray(omega, dtype=float)
    dt = packet.t_ref - packet.ts
    X = np.stack([packet.xs, packet.ys, np.ones(len(packet))], axis=1)
    c = np.cross(np.broadcast_to(omega, X.shape), X)
    h = X + dt[:, None] * c
    px, py, keep, P = _project(h, project, guard)

    # d(omega x X)/d(omega) = -[X]_x
    n = len(packet)
    skew = np.zeros((n, 3, 3))
    skew[:, 0, 1] = -X[:, 2]
    skew[:, 0, 2] = X[:, 1]
    skew[:, 1, 0] = X[:, 2]
    skew[:, 1, 2] = -X[:, 0]
    skew[:, 2, 0] = -X[:, 1]
    skew[:, 2, 1] = X[:, 0]
    Jh = -dt[:, None, None] * skew
    J = np.einsum("nij,njk->nik", P, Jh)

    ws = _event_weights(packet, weight_mode)
    pts = WeightedPoints(px[keep], py[keep], ws[keep])
    return WarpResult(pts, J[keep], keep, int(np.count_nonzero(~keep)))


def warp_translational(
    packet: EventPacket,
    v,
    *,
    weight_mode: str = "ones",
    project: bool = True,
    guard: float = PROJECTION_GUARD,
) -> WarpResult:
    """Translate homogeneous event coordinates by the linear-velocity model."""
    v = np.asarray(v, dtype=float)
    dt = packet.t_ref - packet.ts
    X = np.stack([packet.xs, packet.ys, np.ones(len(packet))], axis=1)
    h = X + dt[:, None] * v[None, :]
    px, py, keep, P = _project(h, project, guard)
    J = dt[:, None, None] * P
    ws = _event_weights(packet, weight_mode)
    pts = WeightedPoints(px[keep], py[keep], ws[keep])
    return WarpResult(pts, J[keep], keep, int(np.count_nonzero(~keep)))


def warp(
    packet: EventPacket,
    model: str,
    theta,
    *,
    weight_mode: str = "ones",
    project: bool = True,
    guard: float = PROJECTION_GUARD,
) -> WarpResult:
    """Dispatch to the rotational or translational warp by model tag."""
    if model == "rot":
        return warp_rotational(packet, theta, weight_mode=weight_mode, project=project, guard=guard)
    if model == "trans":
        return warp_translational(packet, theta, weight_mode=weight_mode, project=project, guard=guard)
    raise ValueError(f"unknown motion model {model!r}")
