"""Explicit optimal designs on large design spaces.

For every criterion handled here the optimal design on [0, inf) is a
geometric three-point design {p/rho, p, rho*p} around the peak location p.
Two scaling factors occur: one shared by D1, E and extrapolation (the
Chebyshev points) and one for D-optimality.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .chebyshev import optimal_weights_for_c
from .design import Criterion, Design, DesignSpace
from .errors import ClosedFormMismatchWarning, UnsupportedCriterion
from .model import ModelSpec, gamma as model_gamma, gradient, peak_location, validate

SQRT2 = math.sqrt(2.0)
WEIGHT_MISMATCH_TOL = 1e-8


@dataclass(frozen=True)
class ScalingFactor:
    rho: float
    gamma: float
    delta: float | None = None


class IntervalForm(enum.Enum):
    UNCONSTRAINED = "Unconstrained"
    LOWER_PINNED = "LowerPinned"
    UPPER_PINNED = "UpperPinned"
    BOTH_PINNED = "BothPinned"

    @property
    def pins(self) -> tuple[bool, bool]:
        return {
            "Unconstrained": (False, False),
            "LowerPinned": (True, False),
            "UpperPinned": (False, True),
            "BothPinned": (True, True),
        }[self.value]


def _gamma_of(g) -> float:
    return model_gamma(g) if isinstance(g, ModelSpec) else float(g)


def scaling_factor_d1(g) -> ScalingFactor:
    """rho(gamma) = 1 + (2+gamma)/sqrt2 + sqrt(2(1+sqrt2) + (2+sqrt2)gamma + gamma^2/2).

    Accepts gamma itself or a model.
    """
    g = _gamma_of(g)
    rad = 2.0 * (1.0 + SQRT2) + (2.0 + SQRT2) * g + 0.5 * g * g
    rho = 1.0 + (2.0 + g) / SQRT2 + math.sqrt(max(rad, 0.0))
    return ScalingFactor(rho=rho, gamma=g)


def scaling_factor_d(g) -> ScalingFactor:
    """rho = (delta + sqrt(delta^2 - 4)) / 2 with delta = (gamma + 1 + sqrt(gamma^2 + 6 gamma + 33)) / 2."""
    g = _gamma_of(g)
    delta = 0.5 * (g + 1.0 + math.sqrt(g * g + 6.0 * g + 33.0))
    rho = 0.5 * (delta + math.sqrt(max(delta * delta - 4.0, 0.0)))
    return ScalingFactor(rho=rho, gamma=g, delta=delta)


def scaling_factor(model: ModelSpec, criterion: Criterion) -> ScalingFactor:
    if criterion.kind == "D":
        return scaling_factor_d(model)
    return scaling_factor_d1(model)


def geometric_support(model: ModelSpec, rho: float) -> np.ndarray:
    p = peak_location(model)
    return np.array([p / rho, p, p * rho])


def classify_interval(model: ModelSpec, criterion: Criterion, space: DesignSpace) -> IntervalForm:
    """Which boundary points of [s, t] the optimal design is pinned to.

    Ties (s == p/rho or t == rho p) count as pinned.
    """
    p = peak_location(model)
    rho = scaling_factor(model, criterion).rho
    lo_pin = space.s >= p / rho
    hi_pin = space.t <= rho * p
    if lo_pin and hi_pin:
        return IntervalForm.BOTH_PINNED
    if lo_pin:
        return IntervalForm.LOWER_PINNED
    if hi_pin:
        return IntervalForm.UPPER_PINNED
    return IntervalForm.UNCONSTRAINED


# -- printed weight formulas -------------------------------------------------


def d1_weights_printed(model: ModelSpec, rho: float) -> np.ndarray:
    t0, t1, t2 = model.theta
    r = rho
    if model.kind == "P1":
        s0, s2 = math.sqrt(t0), math.sqrt(t2)
        lam = t0 * (t0 * t2 * (1 + 6 * r**2 + r**4)
                    + 2 * t1 * r * (t1 * r + math.sqrt(t0 * t2) * (1 + r) ** 2))
        w0 = (s2 * t0 + t1 * s0 * r + s2 * t0 * r * r) ** 2 / ((1 + r) * lam)
        w1 = (2 * s2 * t0 + t1 * s0) ** 2 * r * r / lam
    else:
        q = math.sqrt(t1 * t2)
        lam = t1 * (r * (2 * r + 3 * q * (1 + r) ** 2)
                    + t1 * t2 * (1 + 2 * q * (1 + r) ** 2 * (1 + r * r)
                                 + r * (8 + r * (6 + r * (8 + r)))))
        w0 = ((math.sqrt(t2) * t1 + math.sqrt(t1) * r + math.sqrt(t2) * t1 * r * r) ** 2
              * (1 + q * (1 + r)) / ((1 + r) * lam))
        w1 = (2 * t1 + q) ** 2 * r * (r + q * (1 + r * r)) / lam
    return np.array([w0, w1, 1.0 - w0 - w1])


def ce_weights_printed(model: ModelSpec, rho: float, x_e: float) -> np.ndarray:
    t0, t1, t2 = model.theta
    r, xe = rho, x_e
    if model.kind == "P1":
        s0, s2 = math.sqrt(t0), math.sqrt(t2)
        sq = math.sqrt(t0 * t2)
        lam = t0 * (
            t0**2 * t2 * (1 + 6 * r**2 + r**4)
            + t0 * (2 * t1**2 * r**2
                    + 2 * t1 * r * (sq * (1 + r) ** 2 - 4 * xe * t2 * (1 + r * r))
                    + t2 * xe * (-2 * sq * (1 + r) ** 2 * (1 + r * r)
                                 + xe * t2 * (1 + 6 * r * r + r**4)))
            + t1 * xe * r * (2 * sq * t2 * xe * (1 + r) ** 2
                             - t1 * (sq + r * (-2 * xe * t2 + sq * (2 + r))))
        )
        w0 = ((s0 - xe * s2) * (-xe * s2 + s0 * r)
              * (t0 * s2 + t1 * s0 * r + t0 * s2 * r * r) ** 2 / ((1 + r) * lam))
        w1 = (2 * t0 * s2 + t1 * s0) ** 2 * r * (-xe * s2 + s0 * r) * (s0 - xe * s2 * r) / lam
    else:
        q = math.sqrt(t1 * t2)
        s1, s2 = math.sqrt(t1), math.sqrt(t2)
        lam = t1 * (
            t1**2 * t2 * (1 + 6 * r * r + r**4)
            + xe * r * (-q + 2 * q * t2 * xe * (1 + r) ** 2 - r * (-2 * xe * s2 + q * (2 + r)))
            + t1 * (2 * r * r + 2 * r * (q * (1 + r) ** 2 - 4 * xe * s2 * (1 + r * r))
                    + xe * (-2 * q * t2 * (1 + r) ** 2 * (1 + r * r)
                            + xe * t2**2 * (1 + 6 * r * r + r**4)))
        )
        w0 = ((s1 - xe * s2) * (-xe * s2 + s1 * r)
              * (t1 * s2 + s1 * r + t1 * s2 * r * r) ** 2 / ((1 + r) * lam))
        w1 = (2 * t1 * s2 + s1) ** 2 * r * (-xe * s2 + s1 * r) * (s1 - xe * s2 * r) / lam
    return np.array([w0, w1, 1.0 - w0 - w1])


def e_chebyshev_vector(model: ModelSpec, rho: float | None = None) -> np.ndarray:
    """Coefficient vector of the equioscillating combination on [0, inf).

    Sign convention: phi is +1 at the largest Chebyshev point.
    """
    if rho is None:
        rho = scaling_factor_d1(model).rho
    t0, t1, t2 = model.theta
    r = rho
    den = (r - 1) ** 2 * r
    if model.kind == "P1":
        s0, s2 = math.sqrt(t0), math.sqrt(t2)
        a = 2 * t1**2 * r**2 + 2 * s0 * t1 * s2 * r * (1 + r) ** 2 + t0 * t2 * (1 + 6 * r**2 + r**4)
        return np.array([
            -s0 * a / (s2 * den),
            (t1**2 * r * (1 + r) ** 2 + 8 * s0 * t1 * s2 * r * (1 + r * r)
             + 2 * t0 * t2 * (1 + r) ** 2 * (1 + r * r)) / den,
            -s2 * a / (s0 * den),
        ])
    q = math.sqrt(t1 * t2)
    b = (2 * r + q * (1 + r) ** 2) * (r + q * (1 + r * r))
    return np.array([
        -1 - 2 * q - 2 * b / den,
        -math.sqrt(t1) * (1 + 2 * q) * b / (t0 * math.sqrt(t2) * den),
        -math.sqrt(t2) * (1 + 2 * q) * b / (t0 * math.sqrt(t1) * den),
    ])


def _reconcile(printed: np.ndarray, generic: np.ndarray, what: str) -> np.ndarray:
    err = float(np.max(np.abs(printed - generic)))
    if not np.all(np.isfinite(printed)) or err > WEIGHT_MISMATCH_TOL:
        warnings.warn(
            f"{what}: closed-form weights {np.round(printed, 6)} differ from the "
            f"generic c-optimal weights {np.round(generic, 6)} (max diff {err:.2e}); "
            "using the generic weights",
            ClosedFormMismatchWarning,
            stacklevel=3,
        )
        return generic
    return printed


def unbounded_design(model: ModelSpec, criterion: Criterion) -> Design:
    """Locally optimal design on [0, inf) (or any interval containing its support).

    D uses equal weights.  D1 and extrapolation weights come from their
    closed forms, cross-checked against the generic c-optimal weight
    formula; the generic result is used (with a warning) if the two
    disagree by more than 1e-8.  E weights are the c-optimal weights for
    the Chebyshev coefficient vector.
    """
    validate(model)
    k = criterion.kind
    if k == "C":
        raise UnsupportedCriterion("general c-vectors have no closed form; use optimal_design")
    rho = scaling_factor(model, criterion).rho
    pts = geometric_support(model, rho)
    if k == "D":
        w = np.full(3, 1.0 / 3.0)
    elif k == "E":
        w = optimal_weights_for_c(pts, e_chebyshev_vector(model, rho), model)
    elif k == "D1":
        generic = optimal_weights_for_c(pts, np.array([0.0, 0.0, 1.0]), model)
        w = _reconcile(d1_weights_printed(model, rho), generic, f"{model.kind} D1")
    else:
        c = gradient(model, criterion.x_e)
        generic = optimal_weights_for_c(pts, c, model)
        w = _reconcile(ce_weights_printed(model, rho, criterion.x_e), generic,
                       f"{model.kind} extrapolation")
    w = np.asarray(w, dtype=float)
    return Design(pts, w / w.sum())
