"""Closed-form bounds on Eve's knowledge as functions of the measured error rate.

``d_m`` is always the error rate measured on deterministic (sifted)
signals. Two inversions map it to the smallest characteristic parameter
consistent with that disturbance; from there follow the Shannon bound,
the privacy-amplification shortening ``tau1`` and their delayed-measurement
variants.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

LN2 = math.log(2.0)


class Curve(str, Enum):
    SHANNON_SHARP = "shannon_sharp"
    SHANNON_LINEAR = "shannon_linear"
    TAU1 = "tau1"
    DELAYED_TAU1 = "delayed_tau1"
    TAU1_NONDELAYED = "tau1_nondelayed"


def _check_unit(d_m: float) -> float:
    d = float(d_m)
    if not 0.0 <= d <= 1.0 or math.isnan(d):
        raise ValueError(f"disturbance must lie in [0, 1], got {d_m!r}")
    return d


def _eta_bar(d: float) -> float:
    # (1 - 2 sqrt2 sqrt((1-2d)d)) / (1 - 4d), multiplied through by the conjugate:
    # no 0/0 at d = 1/4 and exact at rational points such as d = 0.01, 0.05.
    return (1.0 - 4.0 * d) / (1.0 + math.sqrt(8.0 * d * (1.0 - 2.0 * d)))


def eta_bar_shannon(d_m: float) -> float:
    """Lower bound on the characteristic parameter of a canonical attack, in [0, 1]."""
    d = _check_unit(d_m)
    return _eta_bar(d) if d < 0.25 else 0.0


def eta_bar_collision(d_m: float) -> float:
    """Lower bound on the signed characteristic parameter of a symmetric attack, in [-1, 1]."""
    d = _check_unit(d_m)
    return _eta_bar(d) if d < 0.5 else -1.0


def disturbance_floor(etas, weights=None) -> float:
    """Smallest disturbance reachable with the given characteristic parameters."""
    eta = np.atleast_1d(np.asarray(etas, dtype=float))
    w = np.full(eta.shape, 1.0 / eta.size) if weights is None else np.asarray(weights, dtype=float)
    return float(np.sum(w * 0.25 * (1.0 - eta) ** 2 / (1.0 + eta**2)))


def _shannon_of_eta(eta: float) -> float:
    e2 = eta * eta
    tail = e2 / (1.0 + e2) * math.log2(e2) if e2 > 0 else 0.0
    # cancellation near eta = 1 can leave a tiny negative residue
    return max(0.0, 0.5 * (1.0 - math.log2(1.0 + e2) + tail))


def shannon_sharp_bound(d_m: float) -> float:
    """Maximal Shannon information (bits per signal) at disturbance ``d_m``."""
    return _shannon_of_eta(eta_bar_shannon(d_m))


def shannon_linear_bound(d_m: float) -> float:
    """Linear relaxation ``2 d_m / ln 2`` of the sharp bound."""
    d = float(d_m)
    if d < 0 or math.isnan(d):
        raise ValueError(f"disturbance must be nonnegative, got {d_m!r}")
    return 2.0 * d / LN2


def _collision_ratio(eta: float) -> float:
    num = 17 + 12 * eta + 6 * eta**2 + 12 * eta**3 + 17 * eta**4
    den = (3 + 2 * eta + 3 * eta**2) ** 2
    return num / den


def collision_bound(eta: float) -> float:
    """Per-bit collision probability of the corrected key for a single-eta attack."""
    if not -1.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [-1, 1], got {eta!r}")
    return 0.5 * _collision_ratio(eta)


def tau1_bound(d_m: float) -> float:
    """Fraction of the corrected key to discard in privacy amplification."""
    d = _check_unit(d_m)
    if d >= 1.0 / 3.0:
        return 1.0
    return min(1.0, max(0.0, math.log2(_collision_ratio(eta_bar_collision(d)))))


def delayed_shannon_bound(d_m: float) -> float:
    """Crude bound allowing Eve to delay her readout: twice the sharp bound, at most 1 bit."""
    return min(1.0, 2.0 * shannon_sharp_bound(d_m))


def delayed_tau1_bound(d_m: float) -> float:
    """``tau1`` allowing delayed readout; reaches 1 at 25 % error.

    ``(1 + eta^4)/(1 + eta^2)^2`` peaks at ``eta = 0``, so every
    ``d_m >= 1/4`` (where ``eta = 0`` is reachable) gets the full value 1.
    """
    d = _check_unit(d_m)
    if d >= 0.25:
        return 1.0
    eta = eta_bar_collision(d)
    val = 1.0 + math.log2((1.0 + eta**4) / (1.0 + eta**2) ** 2)
    return min(1.0, max(0.0, val))


_CURVES = {
    Curve.SHANNON_SHARP: shannon_sharp_bound,
    Curve.SHANNON_LINEAR: shannon_linear_bound,
    Curve.TAU1: tau1_bound,
    Curve.TAU1_NONDELAYED: tau1_bound,
    Curve.DELAYED_TAU1: delayed_tau1_bound,
}


def bound_function(which):
    return _CURVES[Curve(which)]


def tabulate_curve(which, d_min: float, d_max: float, steps: int) -> list[tuple[float, float]]:
    """Evaluate a bound on an evenly spaced grid of ``steps`` points."""
    if not (0.0 <= d_min < d_max <= 1.0):
        raise ValueError(f"need 0 <= d_min < d_max <= 1, got {d_min!r}, {d_max!r}")
    if int(steps) != steps or steps < 2:
        raise ValueError(f"steps must be an integer >= 2, got {steps!r}")
    fn = bound_function(which)
    grid = np.linspace(d_min, d_max, int(steps))
    return [(float(d), fn(float(d))) for d in grid]


@dataclass(frozen=True)
class BoundReport:
    d_m: float
    eta_bar_shannon: float
    eta_bar_collision: float
    shannon_sharp: float
    shannon_linear: float
    tau1: float
    shannon_delayed: float
    tau1_delayed: float

    def as_dict(self) -> dict:
        return asdict(self)


def bound_report(d_m: float) -> BoundReport:
    d = _check_unit(d_m)
    return BoundReport(
        d_m=d,
        eta_bar_shannon=eta_bar_shannon(d),
        eta_bar_collision=eta_bar_collision(d),
        shannon_sharp=shannon_sharp_bound(d),
        shannon_linear=shannon_linear_bound(d),
        tau1=tau1_bound(d),
        shannon_delayed=delayed_shannon_bound(d),
        tau1_delayed=delayed_tau1_bound(d),
    )
