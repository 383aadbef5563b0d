"""Monte Carlo check of the asymptotic covariance (sigma^2 / N) M^{-1}.

Each replicate draws Gaussian noise from a Philox stream keyed by
(seed, replicate), so results do not depend on how replicates are scheduled.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .design import Design, apportion, information_matrix, rank
from .errors import (
    InsufficientDesign,
    NotConverged,
    SingularMatrix,
    TooManyFailedFits,
    ValidationError,
)
from .model import ModelSpec, eta, gradient

MAX_FAILED_FRACTION = 0.05


@dataclass(frozen=True)
class SimConfig:
    sigma: float
    n_runs: int
    replicates: int
    seed: int
    max_fit_iterations: int = 100

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValidationError("sigma must be >= 0")
        if self.replicates < 1:
            raise ValidationError("replicates must be >= 1")
        if self.n_runs < 1:
            raise ValidationError("n_runs must be >= 1")
        if self.max_fit_iterations < 1:
            raise ValidationError("max_fit_iterations must be >= 1")


@dataclass
class SimReport:
    empirical_covariance: np.ndarray
    predicted_covariance: np.ndarray
    relative_diagonal_error: np.ndarray
    failed_fits: int
    counts: np.ndarray
    estimates: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "empirical_covariance": self.empirical_covariance.tolist(),
            "predicted_covariance": self.predicted_covariance.tolist(),
            "relative_diagonal_error": self.relative_diagonal_error.tolist(),
            "failed_fits": int(self.failed_fits),
            "counts": self.counts.tolist(),
            "replicates_used": int(self.estimates.shape[0]),
        }

    def write_estimates_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["replicate", "theta0", "theta1", "theta2"])
            for i, row in enumerate(self.estimates):
                w.writerow([i, *(repr(float(x)) for x in row)])


def fit_mle(observations, model_kind: str, seed_theta, max_iterations: int = 100,
            raise_on_failure: bool = False) -> tuple[np.ndarray, bool]:
    """Least-squares fit of theta (the Gaussian MLE) by damped Gauss-Newton.

    ``observations`` is an (n, 2) array of (u, y).  Converged when the
    gradient of the residual sum of squares has norm <= 1e-10 or the accepted
    step has norm <= 1e-12.
    """
    obs = np.asarray(observations, dtype=float)
    u, y = obs[:, 0], obs[:, 1]
    if np.unique(u[u > 0]).size < 3:
        raise InsufficientDesign("need at least three distinct positive design points")
    theta = np.array(seed_theta, dtype=float)

    def sse(th):
        r = y - eta(ModelSpec(model_kind, tuple(th)), u)
        return float(r @ r), r

    cur, r = sse(theta)
    converged = False
    for _ in range(max_iterations):
        J = gradient(ModelSpec(model_kind, tuple(theta)), u)
        g = J.T @ r
        if np.linalg.norm(g) <= 1e-10:
            converged = True
            break
        step = np.linalg.lstsq(J, r, rcond=None)[0]
        lam = 1.0
        while True:
            trial = theta + lam * step
            new, r_new = sse(trial)
            if np.isfinite(new) and new <= cur:
                break
            lam *= 0.5
            if lam < 1e-12:
                break
        if lam < 1e-12:
            # no decrease possible: already at the floating-point minimum
            converged = np.linalg.norm(step) <= 1e-8 * max(1.0, np.linalg.norm(theta))
            break
        theta, cur, r = trial, new, r_new
        if np.linalg.norm(lam * step) <= 1e-12:
            converged = True
            break
    if not converged and raise_on_failure:
        raise NotConverged(f"Gauss-Newton did not converge in {max_iterations} iterations")
    return theta, converged


def _replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, replicate])))


def run_simulation(design: Design, model: ModelSpec, config: SimConfig,
                   workers: int = 1) -> SimReport:
    """Fit ``config.replicates`` simulated data sets and compare covariances."""
    M = information_matrix(design, model)
    if rank(M) < 3:
        raise SingularMatrix("information matrix is singular; covariance is undefined")
    counts = apportion(design, config.n_runs)
    u = np.repeat(design.points, counts)
    mean = eta(model, u)
    theta = np.array(model.theta)

    def one(rep: int):
        rng = _replicate_rng(config.seed, rep)
        y = mean + config.sigma * rng.standard_normal(u.size)
        est, ok = fit_mle(np.column_stack([u, y]), model.kind, theta, config.max_fit_iterations)
        return est, ok

    reps = range(config.replicates)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, reps))
    else:
        results = [one(r) for r in reps]

    ok = np.array([r[1] for r in results])
    est = np.array([r[0] for r in results])[ok]
    failed = int((~ok).sum())
    if failed > MAX_FAILED_FRACTION * config.replicates:
        raise TooManyFailedFits(f"{failed} of {config.replicates} fits failed")

    if est.shape[0] >= 2:
        centered = est - est.mean(axis=0)
        emp = centered.T @ centered / (est.shape[0] - 1)
    else:
        emp = np.zeros((3, 3))
    pred = config.sigma**2 / config.n_runs * np.linalg.inv(M)
    pd, ed = np.diag(pred), np.diag(emp)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(pd > 0, np.abs(ed - pd) / pd, np.where(ed == 0, 0.0, np.inf))
    return SimReport(emp, pred, rel, failed, counts, est)
