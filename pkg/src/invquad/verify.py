"""Equivalence-theorem certificates for candidate designs.

Each check evaluates a directional function d(u) over a dense grid of the
design space and compares its maximum with the bound that the equivalence
theorem for the criterion prescribes:

    c-optimality:  (f(u)^T G c)^2 <= c^T M^- c       (for some g-inverse G)
    D-optimality:  f(u)^T M^{-1} f(u) <= 3
    E-optimality:  (z^T f(u))^2 <= lambda_min        (z the min eigenvector)
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import linprog

from ._search import golden_section_max
from .closed_form import scaling_factor
from .design import (
    Criterion,
    Design,
    DesignSpace,
    estimable,
    ginverse_apply,
    information_matrix,
    rank,
)
from .design import _eig, _equilibrate
from .errors import MultipleMinEigenvalue, NotEstimable, SingularMatrix
from .model import ModelSpec, gradient, peak_location

GRID_SIZE = 10_000
DEFAULT_TOL = 1e-7
EIGEN_GAP = 1e-8
LP_GRID = 2000


@dataclass
class OptimalityReport:
    criterion: str
    bound: float
    max_directional: float
    argmax_u: float
    violation: float
    passed: bool
    grid_size: int
    support_gap: float = 0.0  # max |d(u_i)/bound - 1| over the support
    tail_decreasing: bool = True

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: (float(v) if isinstance(v, np.floating) else v) for k, v in d.items()}


def verification_grid(model: ModelSpec, criterion: Criterion, space: DesignSpace,
                      design: Design | None = None, n: int = GRID_SIZE) -> np.ndarray:
    """Grid over the space; log-spaced and truncated at 10*rho*peak when unbounded."""
    p = peak_location(model)
    rho = scaling_factor(model, criterion).rho
    if space.bounded:
        g = np.linspace(space.s, space.t, n)
        lo = space.s if space.s > 0 else min(p / (100 * rho), space.t * 1e-3)
        g = np.union1d(g, np.geomspace(lo, space.t, n // 2))
    else:
        hi = 10.0 * rho * max(p, space.s)
        lo = space.s if space.s > 0 else p / (100.0 * rho)
        g = np.union1d(np.geomspace(lo, hi, n), [space.s])
    if design is not None:
        g = np.union1d(g, design.points)
    return g


def _certify(name, directional, bound, model, criterion, space, design, tol, n) -> OptimalityReport:
    grid = verification_grid(model, criterion, space, design, n)
    vals = directional(grid)
    tail_ok = True
    if not space.bounded:
        # directional functions vanish like u^-2 at infinity; extend until decreasing
        for _ in range(4):
            end = grid[-1]
            if directional(np.array([end * 1.01]))[0] <= vals[-1]:
                break
            ext = np.geomspace(end, end * 1e3, n // 4)[1:]
            grid = np.concatenate([grid, ext])
            vals = np.concatenate([vals, directional(ext)])
        else:
            tail_ok = False
    i = int(np.argmax(vals))
    best_u, best = float(grid[i]), float(vals[i])
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]
    if hi > lo:
        u, v = golden_section_max(lambda x: float(directional(np.array([x]))[0]), lo, hi, tol=1e-13)
        if v > best:
            best_u, best = float(u), float(v)
    violation = max(0.0, best - bound) / abs(bound)
    on_support = directional(design.points)
    support_gap = float(np.max(np.abs(on_support / bound - 1.0)))
    passed = violation <= tol and tail_ok
    return OptimalityReport(name, float(bound), best, best_u, float(violation), bool(passed),
                            int(grid.size), support_gap, tail_ok)


def _best_null_shift(M: np.ndarray, Gc: np.ndarray, model: ModelSpec, grid: np.ndarray) -> np.ndarray:
    """Choose the generalized inverse for a singular M.

    Every g-inverse gives G c = M^+ c + n with n in the null space of M and
    the same c^T G c, and the design is optimal iff some choice satisfies
    the bound.  The n minimizing max_u |f(u)^T (M^+ c + n)| solves a small
    linear program on the grid.
    """
    lam, vec, keep, d = _eig(M)
    N = vec[:, ~keep] / d[:, None]
    F = gradient(model, grid)
    s = np.abs(F).max(axis=0)
    s = np.where(s > 0, s, 1.0)
    Fs = F / s
    a = Fs @ (Gc * s)
    B = Fs @ (N * s[:, None])
    k = B.shape[1]
    ones = np.ones((grid.size, 1))
    A_ub = np.vstack([np.hstack([B, -ones]), np.hstack([-B, -ones])])
    b_ub = np.concatenate([-a, a])
    cost = np.zeros(k + 1)
    cost[-1] = 1.0
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * k + [(0, None)], method="highs")
    if not res.success:
        return Gc
    return Gc + N @ res.x[:k]


def check_c_optimality(design: Design, c, model: ModelSpec, space: DesignSpace,
                       tol: float = DEFAULT_TOL, grid_size: int = GRID_SIZE,
                       criterion: Criterion | None = None) -> OptimalityReport:
    c = np.asarray(c, dtype=float)
    M = information_matrix(design, model)
    if not estimable(c, M):
        raise NotEstimable("c is not estimable under this design")
    Gc = ginverse_apply(M, c)
    bound = float(c @ Gc)
    if rank(M) < 3:
        crit = criterion or Criterion.C(c)
        Gc = _best_null_shift(M, Gc, model, verification_grid(model, crit, space, design, LP_GRID))

    def directional(u):
        return (gradient(model, u) @ Gc) ** 2

    crit = criterion or Criterion.C(c)
    return _certify(crit.label(), directional, bound, model, crit, space, design, tol, grid_size)


def check_d_optimality(design: Design, model: ModelSpec, space: DesignSpace,
                       tol: float = DEFAULT_TOL, grid_size: int = GRID_SIZE) -> OptimalityReport:
    M = information_matrix(design, model)
    if rank(M) < 3:
        raise SingularMatrix("D-optimality check needs a nonsingular information matrix")
    S, d = _equilibrate(M)
    L = np.linalg.cholesky(S)

    def directional(u):
        Z = np.linalg.solve(L, (gradient(model, u) / d).reshape(-1, 3).T)
        return np.sum(Z * Z, axis=0).reshape(np.shape(u))

    return _certify("D", directional, 3.0, model, Criterion.D(), space, design, tol, grid_size)


def _refine_min_eigvec(M: np.ndarray, z: np.ndarray, steps: int = 3) -> np.ndarray:
    """Inverse iteration through the equilibrated Cholesky factor.

    eigh on a badly graded M loses relative accuracy in the smallest pair;
    a few solves with the well-conditioned factor recover it.
    """
    S, d = _equilibrate(M)
    L = np.linalg.cholesky(S)
    for _ in range(steps):
        y = np.linalg.solve(L.T, np.linalg.solve(L, z / d)) / d
        z = y / np.linalg.norm(y)
    return z


def check_e_optimality(design: Design, model: ModelSpec, space: DesignSpace,
                       tol: float = DEFAULT_TOL, grid_size: int = GRID_SIZE) -> OptimalityReport:
    M = information_matrix(design, model)
    if rank(M) < 3:
        raise SingularMatrix("E-optimality check needs a nonsingular information matrix")
    lam, vec = np.linalg.eigh(M)
    if lam[1] - lam[0] <= EIGEN_GAP * lam[2]:
        raise MultipleMinEigenvalue(
            f"minimum eigenvalue is not simple (gap {lam[1] - lam[0]:.3e})"
        )
    z = _refine_min_eigvec(M, vec[:, 0])
    F = gradient(model, design.points)
    lam_min = float(design.weights @ (F @ z) ** 2)

    def directional(u):
        return (gradient(model, u) @ z) ** 2

    return _certify("E", directional, lam_min, model, Criterion.E(), space, design, tol, grid_size)


def check_optimality(design: Design, criterion: Criterion, model: ModelSpec, space: DesignSpace,
                     tol: float = DEFAULT_TOL, grid_size: int = GRID_SIZE) -> OptimalityReport:
    """Dispatch to the equivalence check matching ``criterion``."""
    if criterion.kind == "D":
        return check_d_optimality(design, model, space, tol, grid_size)
    if criterion.kind == "E":
        return check_e_optimality(design, model, space, tol, grid_size)
    return check_c_optimality(design, criterion.c_vector(model), model, space, tol, grid_size,
                              criterion=criterion)
