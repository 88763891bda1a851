"""Damped least squares with box constraints.

A small Levenberg-Marquardt implementation on the normal equations with
Marquardt's diagonal scaling, written against callables so the residual
and Jacobian stay decoupled from any particular model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import FitError

__all__ = ["LMResult", "levenberg_marquardt", "finite_difference_jacobian"]

LAMBDA_INIT = 1e-3
LAMBDA_MAX = 1e8
LAMBDA_MIN = 1e-14
FTOL = 1e-10
XTOL = 1e-12
MAX_ITER = 200
# Accepted steps are extended by repeated doubling while the residual keeps
# improving; long flat valleys otherwise take hundreds of tiny steps.
MAX_EXTEND = 1024


@dataclass(frozen=True)
class LMResult:
    """Solution of a damped least-squares run."""

    x: np.ndarray
    rss: float
    n_iter: int
    converged: bool
    stop_reason: str


def _rss(r: np.ndarray) -> float:
    if not np.all(np.isfinite(r)):
        return float("inf")
    return float(r @ r)


def levenberg_marquardt(
    residual: Callable[[np.ndarray], np.ndarray],
    jacobian: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    max_iter: int = MAX_ITER,
    ftol: float = FTOL,
    xtol: float = XTOL,
) -> LMResult:
    """Minimize sum(residual(x)**2) subject to lower <= x <= upper.

    Trial points are projected onto the box, the damping factor is scaled
    by diag(J'J) (unit scale where a diagonal entry vanishes), and rejected
    steps raise the damping tenfold.  Stops when an accepted step reduces
    the residual sum of squares by a relative factor below ftol, or when
    the projected step is below xtol in the infinity norm.

    Raises:
        FitError: If the starting residual is not finite, or the damping
            factor exceeds 1e8 without an acceptable step.
    """
    x = np.clip(np.asarray(x0, dtype=np.float64), lower, upper)
    r = residual(x)
    rss = _rss(r)
    if not np.isfinite(rss):
        raise FitError(f"residual is not finite at the starting point {x!r}")
    lam = LAMBDA_INIT
    n_iter = 0
    converged = False
    reason = "max_iter"
    for n_iter in range(1, max_iter + 1):
        J = jacobian(x)
        A = J.T @ J
        g = J.T @ r
        diag = np.diag(A)
        scale = np.where(diag > 0, diag, 1.0)
        while True:
            try:
                step = np.linalg.solve(A + lam * np.diag(scale), -g)
            except np.linalg.LinAlgError:
                step = None
            if step is not None and np.all(np.isfinite(step)):
                x_new = np.clip(x + step, lower, upper)
                if np.max(np.abs(x_new - x)) < xtol:
                    converged = True
                    reason = "step_tolerance"
                    break
                r_new = residual(x_new)
                rss_new = _rss(r_new)
                if rss_new < rss:
                    k = 1
                    while k < MAX_EXTEND:
                        x_ext = np.clip(x + (2 * k) * step, lower, upper)
                        r_ext = residual(x_ext)
                        rss_ext = _rss(r_ext)
                        if rss_ext < rss_new:
                            x_new, r_new, rss_new = x_ext, r_ext, rss_ext
                            k *= 2
                        else:
                            break
                    reduction = (rss - rss_new) / rss if rss > 0 else 0.0
                    x, r, rss = x_new, r_new, rss_new
                    lam = max(lam / 10.0, LAMBDA_MIN)
                    if reduction < ftol:
                        converged = True
                        reason = "rss_tolerance"
                    break
            lam *= 10.0
            if lam > LAMBDA_MAX:
                raise FitError(
                    f"damping factor exceeded {LAMBDA_MAX:g} after {n_iter} "
                    f"iterations (rss={rss:.6g})"
                )
        if converged:
            break
    return LMResult(x=x, rss=rss, n_iter=n_iter, converged=converged,
                    stop_reason=reason)


def finite_difference_jacobian(
    residual: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    rel_step: float = 1e-7,
) -> np.ndarray:
    """Central-difference Jacobian, for validating analytic derivatives."""
    x = np.asarray(x, dtype=np.float64)
    r0 = residual(x)
    J = np.empty((len(r0), len(x)), dtype=np.float64)
    for j in range(len(x)):
        h = rel_step * max(abs(x[j]), 1.0)
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        J[:, j] = (residual(xp) - residual(xm)) / (2.0 * h)
    return J
