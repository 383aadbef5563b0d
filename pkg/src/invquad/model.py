"""Inverse quadratic regression models.

Two parameterizations of the mean response are supported::

    P1:  eta(u) = u / (theta0 + theta1*u + theta2*u**2)
    P2:  eta(u) = theta0*u / (theta1 + u + theta2*u**2)

All functions accept scalar or array ``u`` and broadcast; vector-valued
results carry the parameter axis last.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import ValidationError

Kind = Literal["P1", "P2"]
KINDS = ("P1", "P2")


@dataclass(frozen=True)
class ModelSpec:
    kind: Kind
    theta: tuple[float, float, float]

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown model kind {self.kind!r}; expected P1 or P2")
        theta = tuple(float(x) for x in self.theta)
        if len(theta) != 3:
            raise ValidationError(f"theta must have 3 components, got {len(theta)}")
        object.__setattr__(self, "theta", theta)

    @property
    def th(self) -> np.ndarray:
        return np.array(self.theta)

    def rescaled(self, k: float) -> "ModelSpec":
        """Model whose response curve is stretched by ``k`` along the u axis.

        For P1 this is theta -> (k^2 theta0, k theta1, theta2); for P2
        theta -> (theta0, k theta1, theta2 / k).  Both leave gamma unchanged.
        """
        t0, t1, t2 = self.theta
        if self.kind == "P1":
            return ModelSpec("P1", (k * k * t0, k * t1, t2))
        return ModelSpec("P2", (t0, k * t1, t2 / k))


def validate(model: ModelSpec) -> None:
    """Raise ValidationError unless the denominator is positive on u > 0.

    P1 needs theta0, theta2 > 0 and theta1 > -2 sqrt(theta0 theta2), i.e.
    gamma > -2.  Positive theta1 is always admissible (the lactation-curve
    estimates have gamma ~ 2.28); see ``textbook_condition`` for the stricter
    symmetric bound |theta1| <= 2 sqrt(theta0 theta2).
    P2 needs theta0, theta1, theta2 > 0 and 2 sqrt(theta1 theta2) > 1.
    """
    t0, t1, t2 = model.theta
    if not all(math.isfinite(x) for x in model.theta):
        raise ValidationError("theta must be finite")
    if model.kind == "P1":
        if t0 <= 0:
            raise ValidationError("P1 requires theta0 > 0")
        if t2 <= 0:
            raise ValidationError("P1 requires theta2 > 0")
        bound = 2.0 * math.sqrt(t0 * t2)
        if t1 <= -bound:
            raise ValidationError(
                f"P1 requires theta1 > -2*sqrt(theta0*theta2): {t1:g} <= {-bound:g}"
            )
    else:
        if t0 <= 0 or t1 <= 0 or t2 <= 0:
            raise ValidationError("P2 requires theta0, theta1, theta2 > 0")
        if 2.0 * math.sqrt(t1 * t2) <= 1.0:
            raise ValidationError(
                f"P2 requires 2*sqrt(theta1*theta2) > 1: got {2.0 * math.sqrt(t1 * t2):g}"
            )


def textbook_condition(model: ModelSpec) -> bool:
    """The symmetric sufficient condition: |theta1| <= 2 sqrt(theta0 theta2) for P1."""
    t0, t1, t2 = model.theta
    if model.kind == "P1":
        return t0 > 0 and t2 > 0 and abs(t1) <= 2.0 * math.sqrt(t0 * t2)
    return min(t0, t1, t2) > 0 and 2.0 * math.sqrt(t1 * t2) > 1.0


def is_valid(model: ModelSpec) -> bool:
    try:
        validate(model)
    except ValidationError:
        return False
    return True


def _denominator(model: ModelSpec, u):
    t0, t1, t2 = model.theta
    if model.kind == "P1":
        return t0 + t1 * u + t2 * u * u
    return t1 + u + t2 * u * u


def eta(model: ModelSpec, u):
    """Mean response at ``u``."""
    u = np.asarray(u, dtype=float)
    q = _denominator(model, u)
    num = u if model.kind == "P1" else model.theta[0] * u
    out = num / q
    return float(out) if out.ndim == 0 else out


def gradient(model: ModelSpec, u) -> np.ndarray:
    """Partial derivatives of eta with respect to theta, shape ``u.shape + (3,)``.

    At u = 0 this is the zero vector.
    """
    u = np.asarray(u, dtype=float)
    t0 = model.theta[0]
    q = _denominator(model, u)
    if model.kind == "P1":
        g = -u / (q * q)
        return g[..., None] * np.stack([np.ones_like(u), u, u * u], axis=-1)
    a = u / q
    return np.stack([a, -t0 * a / q, -t0 * a * u * u / q], axis=-1)


def gradient_derivatives(model: ModelSpec, u) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return f(u), df/du and d2f/du2, each of shape ``u.shape + (3,)``."""
    u = np.asarray(u, dtype=float)
    t0, t1, t2 = model.theta
    one = np.ones_like(u)
    zero = np.zeros_like(u)
    q = _denominator(model, u)
    q1 = (t1 + 2 * t2 * u) if model.kind == "P1" else (1 + 2 * t2 * u)
    q2 = 2 * t2 * one
    iq = 1.0 / q

    if model.kind == "P1":
        # f = g(u) * (1, u, u^2) with g = -u / q^2
        g = -u * iq**2
        g1 = -(iq**2) + 2 * u * q1 * iq**3
        g2 = 4 * q1 * iq**3 + 2 * u * q2 * iq**3 - 6 * u * q1**2 * iq**4
        m0 = np.stack([one, u, u * u], axis=-1)
        m1 = np.stack([zero, one, 2 * u], axis=-1)
        m2 = np.stack([zero, zero, 2 * one], axis=-1)
        f0 = g[..., None] * m0
        f1 = g1[..., None] * m0 + g[..., None] * m1
        f2 = g2[..., None] * m0 + 2 * g1[..., None] * m1 + g[..., None] * m2
        return f0, f1, f2

    # f = (a, -t0 b, -t0 c) with a = u/q, b = u/q^2, c = u^3/q^2
    a = u * iq
    a1 = iq - u * q1 * iq**2
    a2 = -2 * q1 * iq**2 - u * q2 * iq**2 + 2 * u * q1**2 * iq**3
    b = u * iq**2
    b1 = iq**2 - 2 * u * q1 * iq**3
    b2 = -4 * q1 * iq**3 - 2 * u * q2 * iq**3 + 6 * u * q1**2 * iq**4
    c = u**3 * iq**2
    c1 = 3 * u**2 * iq**2 - 2 * u**3 * q1 * iq**3
    c2 = (6 * u * iq**2 - 12 * u**2 * q1 * iq**3 - 2 * u**3 * q2 * iq**3
          + 6 * u**3 * q1**2 * iq**4)
    f0 = np.stack([a, -t0 * b, -t0 * c], axis=-1)
    f1 = np.stack([a1, -t0 * b1, -t0 * c1], axis=-1)
    f2 = np.stack([a2, -t0 * b2, -t0 * c2], axis=-1)
    return f0, f1, f2


def peak_location(model: ModelSpec) -> float:
    """Location of the maximum of eta."""
    t0, t1, t2 = model.theta
    if model.kind == "P1":
        return math.sqrt(t0 / t2)
    return math.sqrt(t1 / t2)


def peak_value(model: ModelSpec) -> float:
    t0, t1, t2 = model.theta
    if model.kind == "P1":
        return 1.0 / (t1 + 2.0 * math.sqrt(t0 * t2))
    return t0 / (1.0 + 2.0 * math.sqrt(t1 * t2))


def gamma(model: ModelSpec) -> float:
    """Dimensionless shape ratio that fixes the geometric scaling factors."""
    t0, t1, t2 = model.theta
    if model.kind == "P1":
        return t1 / math.sqrt(t0 * t2)
    return 1.0 / math.sqrt(t1 * t2)
