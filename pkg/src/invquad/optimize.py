"""Numerical optimal designs and a brute-force grid oracle.

When the closed-form geometric design does not fit inside [s, t], the
optimal design keeps three support points but some of them move to the
boundary.  The remaining free points are found by Nelder-Mead on the
criterion (weights eliminated analytically) and polished with
coordinate-wise golden-section search; the result must then pass the
equivalence check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from ._search import golden_section_min
from .chebyshev import SIGNS, _repair
from .closed_form import (
    IntervalForm,
    classify_interval,
    geometric_support,
    scaling_factor,
    unbounded_design,
)
from .design import Criterion, Design, DesignSpace, information_matrix
from .errors import InputError, NoConvergence, NotEstimable, UnsupportedSpace, ValidationError
from .model import ModelSpec, gradient, validate
from .verify import OptimalityReport, check_optimality

RESTARTS = 10
RESTART_SCALE = 0.05


@dataclass(frozen=True)
class SolverConfig:
    grid_size: int = 2001
    point_tolerance: float = 1e-9
    weight_tolerance: float = 1e-11
    max_iterations: int = 10_000
    equivalence_tolerance: float = 1e-7
    seed: int = 20070101

    def __post_init__(self):
        if self.grid_size < 101:
            raise ValidationError("grid_size must be >= 101")
        for name in ("point_tolerance", "weight_tolerance", "max_iterations", "equivalence_tolerance"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")


def support_weights(model: ModelSpec, criterion: Criterion, points) -> np.ndarray:
    """Criterion-appropriate weights on three fixed support points.

    Equal weights for D; otherwise the optimal c-weights |v_i| / sum|v_j| with
    v = X^{-T} c, where for E the vector c is the combination of the gradient
    components interpolating (+1, -1, +1) at the points.
    """
    X = gradient(model, np.asarray(points, dtype=float))
    if criterion.kind == "D":
        return np.full(3, 1.0 / 3.0)
    if criterion.kind == "E":
        c = np.linalg.solve(X, SIGNS)
    else:
        c = criterion.c_vector(model)
    v = np.abs(np.linalg.solve(X.T, c))
    return v / v.sum()


def _loss(model: ModelSpec, criterion: Criterion, pts: np.ndarray) -> float:
    """Minimization objective on a three-point support (weights eliminated)."""
    X = gradient(model, pts)
    scale = np.linalg.norm(X, axis=0)
    if np.any(scale == 0):
        return math.inf
    detn = abs(np.linalg.det(X / scale))
    if not np.isfinite(detn) or detn < 1e-14:
        return math.inf
    k = criterion.kind
    if k == "D":
        return -(2.0 * math.log(detn) + 2.0 * float(np.sum(np.log(scale))))
    if k == "E":
        c = np.linalg.solve(X, SIGNS)
        v = np.abs(np.linalg.solve(X.T, c))
        w = v / v.sum()
        lam = np.linalg.eigvalsh((X * w[:, None]).T @ X)[0]
        return -math.log(lam) if lam > 0 else math.inf
    v = np.linalg.solve(X.T, criterion.c_vector(model))
    # min over weights of c^T M^{-1} c is (sum |v_i|)^2
    return 2.0 * math.log(np.sum(np.abs(v)))


def _bounds_for(space: DesignSpace, pts_scale: float) -> tuple[float, float]:
    hi = space.t if space.bounded else max(1e3 * pts_scale, 10 * space.s)
    return space.s, hi


def _solve_form(model, criterion, space, form: IntervalForm, seed_pts, config: SolverConfig):
    lo_pin, hi_pin = form.pins
    free = np.array([not lo_pin, True, not hi_pin])
    idx = np.flatnonzero(free)
    base = seed_pts.copy()
    lo, hi = _bounds_for(space, float(seed_pts[1]))
    width = hi - lo

    def assemble(z):
        pts = base.copy()
        pts[idx] = np.exp(z)
        return pts

    def objective(z):
        pts = assemble(z)
        if np.any(np.diff(pts) <= 1e-9 * width) or pts[0] < lo or pts[2] > hi or pts[0] <= 0:
            return math.inf
        return _loss(model, criterion, pts)

    z0 = np.log(base[idx])
    res = minimize(objective, z0, method="Nelder-Mead",
                   options={"xatol": config.point_tolerance * 1e-2, "fatol": 1e-12,
                            "maxiter": config.max_iterations, "maxfev": 4 * config.max_iterations})
    pts = assemble(res.x)

    # coordinate-wise golden-section polish
    for _ in range(50):
        before = pts.copy()
        for i in idx:
            left = pts[i - 1] if i > 0 else lo
            right = pts[i + 1] if i < 2 else hi
            if left <= 0:
                left = pts[i] * 1e-3
            a = left + 1e-9 * width
            b = right - 1e-9 * width
            if b <= a:
                continue

            def line(x, i=i):
                trial = pts.copy()
                trial[i] = x
                return _loss(model, criterion, trial)

            x, fx = golden_section_min(line, a, b, tol=config.point_tolerance * 1e-3)
            if fx <= line(pts[i]):
                pts[i] = x
        if np.max(np.abs(pts - before) / np.abs(pts)) < config.point_tolerance:
            break
    return pts


def _finish(model, criterion, space, pts, config) -> tuple[Design, OptimalityReport]:
    w = support_weights(model, criterion, pts)
    keep = w > config.weight_tolerance
    design = Design(pts[keep], w[keep] / w[keep].sum(), space)
    report = check_optimality(design, criterion, model, space, tol=config.equivalence_tolerance)
    return design, report


def optimal_design(model: ModelSpec, criterion: Criterion, space: DesignSpace = DesignSpace(),
                   config: SolverConfig = SolverConfig()) -> tuple[Design, OptimalityReport]:
    """Locally optimal three-point design for ``criterion`` on ``space``."""
    validate(model)
    criterion.check_space(space)
    if criterion.kind == "C" and not np.any(criterion.c_vector(model)):
        raise InputError("c must be nonzero")
    form = classify_interval(model, criterion, space)

    if form is IntervalForm.UNCONSTRAINED and criterion.kind != "C":
        d = unbounded_design(model, criterion)
        design = Design(d.points, d.weights, space)
        report = check_optimality(design, criterion, model, space, tol=config.equivalence_tolerance)
        if report.passed:
            return design, report

    rho = scaling_factor(model, criterion).rho
    seed = geometric_support(model, rho)
    lo_pin, hi_pin = form.pins
    if lo_pin:
        seed[0] = space.s
    if hi_pin:
        seed[2] = space.t
    seed = _repair(seed, space, lo_pin, hi_pin)

    forms = [form] + [f for f in IntervalForm if f is not form and not (f.pins[1] and not space.bounded)]
    rng = np.random.default_rng(config.seed)
    best: tuple[Design, OptimalityReport] | None = None
    attempts = [(form, seed)]
    for f in forms[1:]:
        s2 = geometric_support(model, rho)
        if f.pins[0]:
            s2[0] = space.s
        if f.pins[1]:
            s2[2] = space.t
        attempts.append((f, _repair(s2, space, *f.pins)))
    lo, hi = _bounds_for(space, float(seed[1]))
    for k in range(RESTARTS):
        f = form
        jitter = rng.uniform(-RESTART_SCALE, RESTART_SCALE, 3) * (hi - lo if space.bounded else seed)
        s2 = seed + jitter
        s2[0] = space.s if f.pins[0] else s2[0]
        s2[2] = space.t if f.pins[1] else s2[2]
        s2 = np.clip(s2, lo, hi)
        attempts.insert(1 + k, (f, _repair(np.sort(s2), space, *f.pins)))

    for f, s0 in attempts:
        try:
            pts = _solve_form(model, criterion, space, f, s0, config)
            design, report = _finish(model, criterion, space, pts, config)
        except (np.linalg.LinAlgError, NotEstimable, ValidationError):
            continue
        if report.passed:
            return design, report
        if best is None or report.violation < best[1].violation:
            best = (design, report)

    detail = f" (best violation {best[1].violation:.3e})" if best else ""
    raise NoConvergence(f"no certified {criterion.label()}-optimal design on {space}{detail}")


def grid_oracle(model: ModelSpec, criterion: Criterion, space: DesignSpace,
                grid_size: int = 201) -> Design:
    """Best three-point design with support on a uniform grid of ``space``.

    Every 3-subset is evaluated with the same weight rules as
    ``optimal_design``; ties go to the lexicographically smallest support.
    Cost is O(grid_size^3).
    """
    if not space.bounded:
        raise UnsupportedSpace("grid oracle needs a bounded design space")
    if grid_size < 3:
        raise ValidationError("grid_size must be >= 3")
    validate(model)
    grid = np.linspace(space.s, space.t, grid_size)
    F = gradient(model, grid)
    c = criterion.c_vector(model) if criterion.is_c_type else None
    best_val, best_idx = -math.inf, None
    eye = np.eye(3)

    for i in range(grid_size - 2):
        j, k = np.triu_indices(grid_size - i - 1, k=1)
        j = j + i + 1
        k = k + i + 1
        X = np.stack([np.broadcast_to(F[i], (j.size, 3)), F[j], F[k]], axis=1)
        scale = np.linalg.norm(X, axis=1, keepdims=True)
        bad = np.any(scale == 0, axis=2)[:, 0]
        Xs = np.where(bad[:, None, None], eye, X / np.where(scale == 0, 1.0, scale))
        detn = np.linalg.det(Xs)
        bad |= np.abs(detn) < 1e-14
        Xsafe = np.where(bad[:, None, None], eye, X)
        if criterion.kind == "D":
            score = np.linalg.det(Xsafe) ** 2 / 27.0
        elif criterion.kind == "E":
            alpha = np.linalg.solve(Xsafe, np.broadcast_to(SIGNS, (j.size, 3))[..., None])[..., 0]
            v = np.abs(np.linalg.solve(np.swapaxes(Xsafe, 1, 2), alpha[..., None])[..., 0])
            w = v / v.sum(axis=1, keepdims=True)
            Mw = np.einsum("nij,ni,nik->njk", Xsafe, w, Xsafe)
            score = np.linalg.eigvalsh(Mw)[:, 0]
        else:
            v = np.linalg.solve(np.swapaxes(Xsafe, 1, 2), np.broadcast_to(c, (j.size, 3))[..., None])[..., 0]
            score = -np.sum(np.abs(v), axis=1) ** 2
        score = np.where(bad, -math.inf, score)
        m = int(np.argmax(score))
        if score[m] > best_val:
            best_val, best_idx = float(score[m]), (i, int(j[m]), int(k[m]))

    if best_idx is None:
        raise NoConvergence("every grid triple is singular")
    pts = grid[list(best_idx)]
    w = support_weights(model, criterion, pts)
    return Design(pts, w / w.sum(), space)
