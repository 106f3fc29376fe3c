"""Contrast scores over frames and their adjoints.

Both scores are maximized: a sharper frame has higher variance and (with
suitable parameters) higher negative-binomial log-likelihood. The adjoints
are the per-bin derivatives seeding the binning VJP.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import digamma, gammaln

from .binning import Frame
from .errors import EmptyFrameError, NegativeBinValueError


@dataclass(frozen=True)
class NBParams:
    """Negative-binomial parameters.

    The pmf is gamma-extended so fractional bin values are admissible:
    log NB(h | r, p) = lnG(h+r) - lnG(h+1) - lnG(r) + r ln(1-p) + h ln(p).
    Set ``swapped=True`` for the opposite convention (p and 1-p exchanged).
    """

    r: float = 0.3
    p: float = 0.8
    swapped: bool = False

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"r must be positive, got {self.r}")
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"p must lie in (0, 1), got {self.p}")

    @property
    def _p_count(self) -> float:
        return 1.0 - self.p if self.swapped else self.p


@dataclass(frozen=True)
class ScoreKind:
    """Score selector: 'var' or 'll' (with NB parameters)."""

    tag: str
    nb: NBParams = NBParams()

    def __post_init__(self):
        if self.tag not in ("var", "ll"):
            raise ValueError(f"score tag must be 'var' or 'll', got {self.tag!r}")


def _values(frame: Frame) -> np.ndarray:
    v = frame.values
    if v.size == 0:
        raise EmptyFrameError("frame has no bins")
    return v


def score_variance(frame: Frame) -> float:
    """Population variance of the frame values."""
    return float(np.var(_values(frame)))


def adjoint_variance(frame: Frame) -> np.ndarray:
    """d Var / d values: (2 / N) (h - mean)."""
    v = _values(frame)
    return (2.0 / v.size) * (v - v.mean())


def score_loglik(frame: Frame, nb: NBParams = NBParams()) -> float:
    """Sum of per-bin negative-binomial log pmf values."""
    v = _values(frame)
    if np.any(v < 0):
        raise NegativeBinValueError("log-likelihood requires nonnegative bin values")
    pc = nb._p_count
    ll = gammaln(v + nb.r) - gammaln(v + 1.0) - gammaln(nb.r) + nb.r * np.log(1.0 - pc) + v * np.log(pc)
    return float(np.sum(ll))


def adjoint_loglik(frame: Frame, nb: NBParams = NBParams()) -> np.ndarray:
    """d LL / d values: digamma(h+r) - digamma(h+1) + ln(p)."""
    v = _values(frame)
    if np.any(v < 0):
        raise NegativeBinValueError("log-likelihood requires nonnegative bin values")
    pc = nb._p_count
    return digamma(v + nb.r) - digamma(v + 1.0) + np.log(pc)


def score(frame: Frame, kind: ScoreKind) -> float:
    """Evaluate the selected score."""
    if kind.tag == "var":
        return score_variance(frame)
    return score_loglik(frame, kind.nb)


def adjoint(frame: Frame, kind: ScoreKind) -> np.ndarray:
    """Adjoint of the selected score with respect to the frame values."""
    if kind.tag == "var":
        return adjoint_variance(frame)
    return adjoint_loglik(frame, kind.nb)
