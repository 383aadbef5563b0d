"""Approximate designs, information matrices and design criteria."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from .errors import (
    InfeasibleApportionment,
    NotEstimable,
    SingularMatrix,
    UnsupportedCriterion,
    ValidationError,
)
from .model import ModelSpec, gradient, validate

RANK_TOL = 1e-10
ESTIMABLE_TOL = 1e-8

# Exponent applied to det ratios in D-efficiencies.  "sqrt" reproduces the
# reference efficiency table for the landete preset; the others are common
# textbook choices.
D_CONVENTIONS = {"sqrt": 0.5, "det": 1.0, "cbrt": 1.0 / 3.0}
DEFAULT_D_CONVENTION = "sqrt"


@dataclass(frozen=True)
class DesignSpace:
    s: float = 0.0
    t: float = math.inf

    def __post_init__(self):
        s, t = float(self.s), float(self.t)
        if not (math.isfinite(s) and s >= 0):
            raise ValidationError(f"design space lower bound must be finite and >= 0, got {s}")
        if not t > s:
            raise ValidationError(f"design space needs s < t, got [{s}, {t}]")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "t", t)

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.t)

    def contains(self, u, tol: float = 0.0) -> bool:
        u = np.asarray(u, dtype=float)
        return bool(np.all((u >= self.s - tol) & (u <= self.t + tol)))

    def __str__(self):
        return f"[{self.s:g}, {'inf' if not self.bounded else format(self.t, 'g')}]"


@dataclass(frozen=True, eq=False)
class Design:
    """A finitely supported probability measure on the design space."""

    points: np.ndarray
    weights: np.ndarray
    space: DesignSpace | None = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1)
        w = np.array(self.weights, dtype=float).reshape(-1)
        if pts.size == 0 or pts.size != w.size:
            raise ValidationError("points and weights must be non-empty and of equal length")
        if not np.all(np.isfinite(pts)) or not np.all(np.isfinite(w)):
            raise ValidationError("points and weights must be finite")
        if np.any(w <= 0):
            raise ValidationError("weights must be strictly positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValidationError(f"weights must sum to 1, got {w.sum():.15g}")
        if np.any(np.diff(pts) <= 0):
            raise ValidationError("support points must be strictly increasing")
        if np.any(pts < 0):
            raise ValidationError("support points must be nonnegative")
        if self.space is not None:
            sp = self.space
            if not sp.contains(pts):
                raise ValidationError(f"support points must lie in {sp}")
            scale = (sp.t - sp.s) if sp.bounded else max(1.0, float(pts.max()))
            if pts.size > 1 and np.min(np.diff(pts)) < 1e-9 * scale:
                raise ValidationError("support points are duplicates within 1e-9 of the space width")
        pts.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return self.points.size

    def __repr__(self):
        p = ", ".join(f"{x:.6g}" for x in self.points)
        w = ", ".join(f"{x:.6g}" for x in self.weights)
        return f"Design(points=[{p}], weights=[{w}])"


def uniform_design(points: Sequence[float], space: DesignSpace | None = None) -> Design:
    n = len(points)
    return Design(np.asarray(points, dtype=float), np.full(n, 1.0 / n), space)


def mixture(a: Design, b: Design, alpha: float) -> Design:
    """The measure alpha*a + (1-alpha)*b."""
    pts = np.union1d(a.points, b.points)
    w = np.zeros(pts.size)
    w[np.searchsorted(pts, a.points)] += alpha * a.weights
    w[np.searchsorted(pts, b.points)] += (1 - alpha) * b.weights
    keep = w > 0
    w = w[keep] / w[keep].sum()
    return Design(pts[keep], w)


CriterionKind = Literal["D", "E", "D1", "C", "ce"]


@dataclass(frozen=True)
class Criterion:
    """Tagged design criterion.

    ``kind`` is one of D, E, D1, C (with vector ``c``) and ce (extrapolation
    to ``x_e``).  D, E and D1 are maximized; C and ce are minimized.
    """

    kind: CriterionKind
    c: tuple[float, float, float] | None = None
    x_e: float | None = None

    def __post_init__(self):
        if self.kind not in ("D", "E", "D1", "C", "ce"):
            raise ValidationError(f"unknown criterion {self.kind!r}")
        if self.kind == "C":
            if self.c is None or len(self.c) != 3:
                raise ValidationError("criterion C needs a 3-vector c")
            c = tuple(float(x) for x in self.c)
            if not any(c):
                raise ValidationError("criterion C needs c != 0")
            object.__setattr__(self, "c", c)
        if self.kind == "ce":
            if self.x_e is None or not float(self.x_e) > 0:
                raise ValidationError("extrapolation criterion needs x_e > 0")
            object.__setattr__(self, "x_e", float(self.x_e))

    @classmethod
    def D(cls) -> "Criterion":
        return cls("D")

    @classmethod
    def E(cls) -> "Criterion":
        return cls("E")

    @classmethod
    def D1(cls) -> "Criterion":
        return cls("D1")

    @classmethod
    def C(cls, c) -> "Criterion":
        return cls("C", c=tuple(c))

    @classmethod
    def extrapolation(cls, x_e: float) -> "Criterion":
        return cls("ce", x_e=x_e)

    @property
    def maximize(self) -> bool:
        return self.kind in ("D", "E", "D1")

    @property
    def is_c_type(self) -> bool:
        return self.kind in ("D1", "C", "ce")

    def c_vector(self, model: ModelSpec) -> np.ndarray:
        if self.kind == "D1":
            return np.array([0.0, 0.0, 1.0])
        if self.kind == "C":
            return np.array(self.c)
        if self.kind == "ce":
            return gradient(model, self.x_e)
        raise UnsupportedCriterion(f"criterion {self.kind} has no c-vector")

    def check_space(self, space: DesignSpace) -> None:
        if self.kind == "ce" and space.s <= self.x_e <= space.t:
            raise ValidationError(
                f"x_e = {self.x_e:g} lies inside the design space {space}; "
                "the one-point design at x_e is trivially optimal"
            )

    def label(self) -> str:
        if self.kind == "C":
            return "C(" + ",".join(f"{x:g}" for x in self.c) + ")"
        if self.kind == "ce":
            return f"ce({self.x_e:g})"
        return self.kind

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.c is not None:
            d["c"] = list(self.c)
        if self.x_e is not None:
            d["x_e"] = self.x_e
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Criterion":
        c = d.get("c")
        return cls(d["kind"], c=tuple(c) if c is not None else None, x_e=d.get("x_e"))


def information_matrix(design: Design, model: ModelSpec) -> np.ndarray:
    """M = sum_i w_i f(u_i) f(u_i)^T."""
    F = gradient(model, design.points)
    M = (F * design.weights[:, None]).T @ F
    return 0.5 * (M + M.T)


def _equilibrate(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (S, d) with S = D^-1 M D^-1, D = diag(sqrt(diag M)).

    Gradient components differ by many orders of magnitude, so rank and
    range decisions are made on S, which has unit diagonal.  Zero diagonal
    entries (identically zero rows of a PSD matrix) keep scale 1.
    """
    d = np.sqrt(np.clip(np.diag(m), 0.0, None))
    d = np.where(d > 0, d, 1.0)
    return m / np.outer(d, d), d


def _eig(m: np.ndarray):
    s, d = _equilibrate(m)
    lam, vec = np.linalg.eigh(s)
    top = max(abs(lam[-1]), 0.0)
    keep = lam > RANK_TOL * top if top > 0 else np.zeros_like(lam, dtype=bool)
    return lam, vec, keep, d


def rank(m: np.ndarray) -> int:
    return int(_eig(m)[2].sum())


def estimable(c, m: np.ndarray) -> bool:
    """Whether c lies in the column space of M (up to the rank threshold)."""
    c = np.asarray(c, dtype=float)
    lam, vec, keep, d = _eig(m)
    ct = c / d
    if not np.any(ct):
        return True
    proj = vec[:, keep] @ (vec[:, keep].T @ ct)
    return bool(np.linalg.norm(ct - proj) <= ESTIMABLE_TOL * np.linalg.norm(ct))


def pseudo_inverse(m: np.ndarray) -> np.ndarray:
    """Moore-Penrose inverse as P G P.

    G = D^-1 S^+ D^-1 is a g-inverse of M computed in equilibrated
    coordinates and P is the orthogonal projector onto the range of M; for
    symmetric M this product equals M^+ and avoids eigh on a badly scaled M.
    """
    lam, vec, keep, d = _eig(m)
    if not keep.any():
        return np.zeros_like(m)
    V = vec[:, keep]
    G = ((V / lam[keep]) @ V.T) / np.outer(d, d)
    Q, _ = np.linalg.qr(V * d[:, None])
    P = Q @ Q.T
    out = P @ G @ P
    return 0.5 * (out + out.T)


def ginverse_apply(m: np.ndarray, c) -> np.ndarray:
    """G c for the generalized inverse G = D^-1 S^+ D^-1 (see ``_equilibrate``).

    Much better conditioned than forming the Moore-Penrose inverse of M
    directly; c^T G c and f^T G c agree with any other g-inverse whenever
    c and f are estimable.
    """
    lam, vec, keep, d = _eig(m)
    z = vec[:, keep].T @ (np.asarray(c, dtype=float) / d)
    return (vec[:, keep] @ (z / lam[keep])) / d


def generalized_c_form(c, m: np.ndarray) -> float:
    """c^T M^- c, invariant to the choice of generalized inverse when c is estimable."""
    c = np.asarray(c, dtype=float)
    if not estimable(c, m):
        raise NotEstimable("c is not in the range of the information matrix")
    lam, vec, keep, d = _eig(m)
    z = vec[:, keep].T @ (c / d)
    return float(np.sum(z * z / lam[keep]))


def d1_value(m: np.ndarray) -> float:
    """|M| / |M~| where M~ drops the last row and column."""
    s, d = _equilibrate(m)
    lam = np.linalg.eigvalsh(s[:2, :2])
    if lam[-1] <= 0 or lam[0] <= RANK_TOL * lam[-1]:
        raise SingularMatrix("leading 2x2 block of the information matrix is singular")
    sub = m[:2, :2]
    return float(np.linalg.det(m) / np.linalg.det(sub))


def criterion_value(design: Design, criterion: Criterion, model: ModelSpec) -> float:
    """Raw criterion value: det M, lambda_min, |M|/|M~| or c^T M^- c."""
    return matrix_criterion(information_matrix(design, model), criterion, model)


def matrix_criterion(m: np.ndarray, criterion: Criterion, model: ModelSpec) -> float:
    k = criterion.kind
    if k == "D":
        if rank(m) < 3:
            return 0.0
        return float(np.linalg.det(m))
    if k == "E":
        return float(np.linalg.eigvalsh(m)[0])
    if k == "D1":
        return d1_value(m)
    return generalized_c_form(criterion.c_vector(model), m)


def efficiency(
    design: Design,
    criterion: Criterion,
    reference_optimal: Design,
    model: ModelSpec,
    d_convention: str = DEFAULT_D_CONVENTION,
) -> float:
    """Efficiency of ``design`` relative to ``reference_optimal``, in percent."""
    a = criterion_value(design, criterion, model)
    b = criterion_value(reference_optimal, criterion, model)
    if criterion.maximize:
        ratio = a / b
        if criterion.kind == "D":
            ratio = max(ratio, 0.0) ** D_CONVENTIONS[d_convention]
    else:
        ratio = b / a
    return 100.0 * ratio


def apportion(design: Design, n: int) -> np.ndarray:
    """Integer run counts summing to ``n``.

    Efficient rounding (start at ceil((n - r/2) w_i), then fix the total by
    bumping the smallest n_i/w_i or trimming the largest (n_i - 1)/w_i),
    followed by a quota pass keeping each count within one of n*w_i whenever
    that is compatible with n_i >= 1.
    """
    w = design.weights
    r = w.size
    n = int(n)
    if n < r:
        raise InfeasibleApportionment(f"need n >= {r} support points, got n = {n}")
    k = np.ceil((n - r / 2.0) * w).astype(int)
    k = np.maximum(k, 1)
    k = _fix_total(k, w, n, np.ones(r, dtype=int), np.full(r, n, dtype=int))

    target = n * w
    lo = np.maximum(1, np.floor(target).astype(int))
    hi = np.maximum(1, np.ceil(target).astype(int))
    if lo.sum() <= n <= hi.sum():
        k = _fix_total(np.clip(k, lo, hi), w, n, lo, hi)
    return k


def _fix_total(k, w, n, lo, hi):
    k = k.copy()
    while k.sum() < n:
        ratio = np.where(k < hi, k / w, np.inf)
        k[int(np.argmin(ratio))] += 1
    while k.sum() > n:
        ratio = np.where(k > lo, (k - 1) / w, -np.inf)
        k[int(np.argmax(ratio))] -= 1
    return k


# -- design files ---------------------------------------------------------


def _space_to_json(space: DesignSpace) -> dict:
    return {"s": space.s, "t": space.t if space.bounded else "inf"}


def _space_from_json(d: dict) -> DesignSpace:
    t = d.get("t", "inf")
    t = math.inf if isinstance(t, str) and t.lower() in ("inf", "+inf", "infinity") else float(t)
    return DesignSpace(float(d.get("s", 0.0)), t)


@dataclass
class DesignFile:
    model: ModelSpec
    space: DesignSpace
    design: Design
    criterion: Criterion | None = None
    extra: dict = field(default_factory=dict)


def design_to_json(model: ModelSpec, space: DesignSpace, design: Design,
                   criterion: Criterion | None = None) -> dict:
    out = {
        "model": {"kind": model.kind, "theta": list(model.theta)},
        "space": _space_to_json(space),
        "points": design.points.tolist(),
        "weights": design.weights.tolist(),
    }
    if criterion is not None:
        out["criterion"] = criterion.to_dict()
    return out


def design_from_json(data: dict) -> DesignFile:
    try:
        model = ModelSpec(data["model"]["kind"], tuple(data["model"]["theta"]))
        space = _space_from_json(data.get("space", {}))
        pts = np.asarray(data["points"], dtype=float)
        w = np.asarray(data["weights"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed design file: {exc}") from exc
    validate(model)
    if abs(w.sum() - 1.0) > 1e-9:
        raise ValidationError(f"weights must sum to 1 within 1e-9, got {w.sum():.12g}")
    design = Design(pts, w / w.sum(), space)
    crit = Criterion.from_dict(data["criterion"]) if "criterion" in data else None
    return DesignFile(model, space, design, crit)


def save_design(path, model, space, design, criterion=None) -> None:
    Path(path).write_text(json.dumps(design_to_json(model, space, design, criterion), indent=2) + "\n")


def load_design(path) -> DesignFile:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from exc
    return design_from_json(data)
