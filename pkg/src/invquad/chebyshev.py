"""Chebyshev-system tools for the three gradient components.

The components of f(u, theta) form a Chebyshev system on (0, inf).  The
equioscillating combination phi(u) = sum_i alpha_i f_i(u) with |phi| <= 1
and phi(s_i) = (-1)^(2-i) at three points s_0 < s_1 < s_2 locates the
support of c-optimal designs for every c in the Kiefer-Wolfowitz set A*.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .design import DesignSpace
from .errors import NoConvergence, SingularSystem, ValidationError
from .model import ModelSpec, gradient, gradient_derivatives, peak_location, validate

SIGNS = np.array([1.0, -1.0, 1.0])
BOUND_TOL = 1e-8
CHECK_GRID = 10_000


@dataclass(frozen=True, eq=False)
class ChebyshevSolution:
    """Chebyshev points and the coefficients of the equioscillating combination.

    ``coefficients`` are normalized so that phi(points[2]) = +level.
    """

    points: np.ndarray
    coefficients: np.ndarray
    level: float = 1.0
    form: str = "Unconstrained"

    def phi(self, model: ModelSpec, u):
        return gradient(model, u) @ self.coefficients

    def scaled(self, level: float) -> "ChebyshevSolution":
        k = level / self.level
        return ChebyshevSolution(self.points, self.coefficients * k, level, self.form)

    def to_dict(self) -> dict:
        return {
            "points": self.points.tolist(),
            "coefficients": self.coefficients.tolist(),
            "level": self.level,
            "form": self.form,
        }


def system_determinant(model: ModelSpec, points) -> float:
    """det(f(u_0), f(u_1), f(u_2)); nonzero for distinct positive points."""
    pts = np.asarray(points, dtype=float)
    if pts.shape != (3,):
        raise ValidationError("need exactly three points")
    if np.any(pts <= 0):
        raise ValidationError("points must be positive")
    if len(set(pts.tolist())) < 3:
        raise ValidationError("points must be distinct")
    return float(np.linalg.det(gradient(model, pts).T))


def _sample_points(model: ModelSpec, space: DesignSpace, n: int) -> np.ndarray:
    from .closed_form import scaling_factor_d1

    p = peak_location(model)
    rho = scaling_factor_d1(model).rho
    lo = space.s if space.s > 0 else p / (100.0 * rho)
    hi = space.t if space.bounded else 100.0 * rho * p
    return np.geomspace(lo, hi, n)


def in_a_star(c, model: ModelSpec, space: DesignSpace, samples: int = 80) -> bool:
    """Sampled necessary check for c in A*.

    For all sampled pairs x1 < x2 the bordered determinant det(f(x1), f(x2), c)
    must be nonzero relative to the product of the column norms and keep one
    sign; a sign change means it vanishes somewhere in between.
    """
    c = np.asarray(c, dtype=float)
    if not np.any(c):
        raise ValidationError("c must be nonzero")
    xs = _sample_points(model, space, samples)
    F = gradient(model, xs)
    i, j = np.triu_indices(xs.size, k=1)
    mats = np.stack([F[i], F[j], np.broadcast_to(c, (i.size, 3))], axis=-1)
    dets = np.linalg.det(mats)
    norms = np.linalg.norm(F[i], axis=1) * np.linalg.norm(F[j], axis=1) * np.linalg.norm(c)
    rel = dets / norms
    if np.any(np.abs(rel) <= 1e-12):
        return False
    return bool(np.all(rel > 0) or np.all(rel < 0))


def optimal_weights_for_c(points, c, model: ModelSpec) -> np.ndarray:
    """Optimal c-weights on three fixed support points: w_i = |v_i| / sum |v_j|.

    v = (X X^T)^{-1} X c with rows X_i = f(s_i); for square X this is X^{-T} c,
    which is what gets solved.
    """
    X = gradient(model, np.asarray(points, dtype=float))
    c = np.asarray(c, dtype=float)
    scale = np.linalg.norm(X, axis=0)
    if np.any(scale == 0) or np.linalg.cond(X / scale) > 1e13:
        raise SingularSystem("support points give a singular gradient matrix")
    v = np.linalg.solve(X.T, c)
    a = np.abs(v)
    return a / a.sum()


def equioscillation_coefficients(model: ModelSpec, points) -> np.ndarray:
    """Coefficients of the combination interpolating (+1, -1, +1) at ``points``."""
    X = gradient(model, np.asarray(points, dtype=float))
    return np.linalg.solve(X, SIGNS)


# -- Newton solve -----------------------------------------------------------


_PINS = {
    "Unconstrained": (False, False),
    "LowerPinned": (True, False),
    "UpperPinned": (False, True),
    "BothPinned": (True, True),
}


def _seed_points(model: ModelSpec, space: DesignSpace, form: str, rho: float) -> np.ndarray:
    p = peak_location(model)
    pts = np.array([p / rho, p, p * rho])
    lo_pin, hi_pin = _PINS[form]
    if lo_pin:
        pts[0] = space.s
    if hi_pin:
        pts[2] = space.t
    return _repair(pts, space, lo_pin, hi_pin)


def _repair(pts, space, lo_pin, hi_pin):
    """Make a seed strictly increasing and inside the space, respacing if needed."""
    lo = space.s
    hi = space.t if space.bounded else max(pts[2], 10.0 * max(pts[1], 1e-300))
    inside = np.all((pts > lo) | ((np.arange(3) == 0) & lo_pin))
    inside &= np.all((pts < space.t) | ((np.arange(3) == 2) & hi_pin))
    if inside and np.all(np.diff(pts) > 0) and (lo_pin or pts[0] > lo):
        return pts
    a = lo if lo > 0 else min(pts[0], hi) * 1e-3 if pts[0] > 0 else hi * 1e-3
    a = max(a, 1e-300)
    grid = np.geomspace(a, hi, 5)
    out = pts.copy()
    if lo_pin and hi_pin:
        out[1] = math.sqrt(lo * hi) if lo > 0 else hi / 4
    elif lo_pin:
        out[1:] = grid[2], grid[3] if space.bounded else grid[2] * 4
    elif hi_pin:
        out[:2] = grid[1], grid[2]
    else:
        out[:] = grid[1:4]
    return out


def _residual(model, alpha, pts, free, scale):
    f0, f1, _ = gradient_derivatives(model, pts)
    r_val = f0 @ alpha - SIGNS
    r_stat = (f1[free] @ alpha) * scale
    return np.concatenate([r_val, r_stat])


def _newton(model, space, pts0, free, max_iter=200):
    pts = pts0.copy()
    scale = peak_location(model)
    try:
        alpha = equioscillation_coefficients(model, pts)
    except np.linalg.LinAlgError:
        return None
    nfree = int(free.sum())
    idx = np.flatnonzero(free)
    r = _residual(model, alpha, pts, free, scale)
    for _ in range(max_iter):
        f0, f1, f2 = gradient_derivatives(model, pts)
        J = np.zeros((3 + nfree, 3 + nfree))
        J[:3, :3] = f0
        J[3:, :3] = f1[free] * scale
        for k, i in enumerate(idx):
            J[i, 3 + k] = f1[i] @ alpha
            J[3 + k, 3 + k] = (f2[i] @ alpha) * scale
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            return None
        lam = 1.0
        norm0 = np.linalg.norm(r)
        while lam > 1e-10:
            a_new = alpha + lam * step[:3]
            p_new = pts.copy()
            p_new[idx] += lam * step[3:]
            ok = np.all(np.diff(p_new) > 0) and p_new[0] >= space.s and p_new[2] <= space.t
            if ok and p_new[0] > 0:
                r_new = _residual(model, a_new, p_new, free, scale)
                if np.linalg.norm(r_new) < norm0 or norm0 < 1e-13:
                    break
            lam *= 0.5
        else:
            return None
        alpha, pts, r = a_new, p_new, r_new
        dp = np.max(np.abs(lam * step[3:]) / pts[idx]) if nfree else 0.0
        if np.linalg.norm(r) < 1e-13 or (np.linalg.norm(r) < 1e-9 and dp < 1e-14):
            return pts, alpha
    if np.linalg.norm(r) < 1e-10:
        return pts, alpha
    return None


def _check_grid(model, space, rho, n=CHECK_GRID):
    p = peak_location(model)
    if space.bounded:
        lo = space.s if space.s > 0 else min(p / (100 * rho), space.t * 1e-4)
        g = np.union1d(np.linspace(space.s, space.t, n), np.geomspace(lo, space.t, n))
    else:
        lo = space.s if space.s > 0 else p / (1e3 * rho)
        g = np.geomspace(lo, 1e3 * rho * max(p, space.s), n)
        g = np.union1d(g, [space.s])
    return g


def _globally_bounded(model, space, pts, alpha, rho) -> bool:
    g = np.union1d(_check_grid(model, space, rho), pts)
    phi = gradient(model, g) @ alpha
    return bool(np.max(np.abs(phi)) <= 1.0 + BOUND_TOL)


def chebyshev_points(model: ModelSpec, space: DesignSpace = DesignSpace(),
                     restarts: int = 20, seed: int = 0) -> ChebyshevSolution:
    """Chebyshev points of the gradient system on ``space``.

    Newton's method on {phi(s_i) = (-1)^(2-i); phi'(s_i) = 0 for free s_i},
    seeded at the geometric points {p/rho, p, rho p}.  Boundary points are
    pinned according to the interval classification; the other pinning
    patterns are tried if that fails.  A candidate is accepted only if
    |phi| <= 1 holds on a dense grid.
    """
    from .closed_form import classify_interval, scaling_factor_d1
    from .design import Criterion

    validate(model)
    rho = scaling_factor_d1(model).rho
    first = classify_interval(model, Criterion.D1(), space).value
    forms = [first] + [f for f in _PINS if f != first]
    if not space.bounded:
        forms = [f for f in forms if not _PINS[f][1]]

    def attempt(form, pts0):
        lo_pin, hi_pin = _PINS[form]
        free = np.array([not lo_pin, True, not hi_pin])
        res = _newton(model, space, pts0, free)
        if res is None:
            return None
        pts, alpha = res
        if not _globally_bounded(model, space, pts, alpha, rho):
            return None
        return ChebyshevSolution(pts, alpha, 1.0, form)

    for form in forms:
        sol = attempt(form, _seed_points(model, space, form, rho))
        if sol is not None:
            return sol

    rng = np.random.default_rng(seed)
    found: list[ChebyshevSolution] = []
    for _, form in product(range(restarts), forms):
        lo_pin, hi_pin = _PINS[form]
        pts0 = _seed_points(model, space, form, rho)
        jitter = np.exp(rng.uniform(-0.5, 0.5, 3))
        jitter[0] = 1.0 if lo_pin else jitter[0]
        jitter[2] = 1.0 if hi_pin else jitter[2]
        pts0 = _repair(np.sort(pts0 * jitter), space, lo_pin, hi_pin)
        sol = attempt(form, pts0)
        if sol is not None:
            found.append(sol)
    if not found:
        raise NoConvergence(f"no equioscillating solution found on {space}")
    ref = found[0]
    for other in found[1:]:
        if np.max(np.abs(other.points - ref.points) / ref.points) > 1e-6:
            raise NoConvergence(
                f"distinct Chebyshev solutions found: {ref.points} vs {other.points}"
            )
    return ref
