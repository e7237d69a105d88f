"""Ridge-regularized logistic regression via full-batch first-order descent.

The objective is the summed log-loss plus ridge * ||w||^2 / 2 with the
intercept unpenalized.  Steps use the Barzilai-Borwein spectral step length
safeguarded by Armijo backtracking, which keeps the solver Hessian-free while
reaching tight gradient tolerances within the iteration cap on desk-scale
problems.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _objective(theta, x, y, ridge):
    w, b = theta[:-1], theta[-1]
    z = x @ w + b
    # sum_i log(1 + exp(z_i)) - y_i z_i, computed stably
    loss = float(np.logaddexp(0.0, z).sum() - (y * z).sum())
    loss += 0.5 * ridge * float(w @ w)
    p = _sigmoid(z)
    grad = np.empty_like(theta)
    grad[:-1] = x.T @ (p - y) + ridge * w
    grad[-1] = float((p - y).sum())
    return loss, grad


def fit_logreg_ridge(x: np.ndarray, y: np.ndarray, ridge: float = 1.0,
                     tol: float = 1e-6, max_iter: int = 10000):
    """Fit weights and intercept; converged when the gradient norm is < tol.

    Raises NumericError if the iteration cap is hit first.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(x)):
        raise NumericError("features contain non-finite values")
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise ValueError("x must be (n, d) and y (n,)")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("labels must be 0/1")

    theta = np.zeros(x.shape[1] + 1)
    f, g = _objective(theta, x, y, ridge)
    # conservative first step from a Lipschitz bound of the logistic curvature
    lip = 0.25 * float((x * x).sum()) + 0.25 * x.shape[0] + ridge
    alpha = 1.0 / max(lip, 1e-12)
    for _ in range(max_iter):
        gnorm = float(np.linalg.norm(g))
        if gnorm < tol:
            return theta[:-1].copy(), float(theta[-1])
        step = alpha
        gg = gnorm * gnorm
        # near the optimum the demanded decrease falls below float resolution
        # of f, so allow that much slack instead of shrinking the step forever
        slack = 1e-14 * (1.0 + abs(f))
        for _ in range(200):
            theta_new = theta - step * g
            f_new, g_new = _objective(theta_new, x, y, ridge)
            if f_new <= f - 1e-4 * step * gg + slack:
                break
            step *= 0.5
        else:
            raise NumericError("line search failed in logistic regression solver")
        s = theta_new - theta
        dg = g_new - g
        sdg = float(s @ dg)
        alpha = float(s @ s) / sdg if sdg > 1e-18 else 1.0 / max(lip, 1e-12)
        theta, f, g = theta_new, f_new, g_new
    raise NumericError(
        f"logistic regression did not reach gradient norm {tol} in {max_iter} iterations"
    )


def predict_logreg(x: np.ndarray, w: np.ndarray, b: float) -> np.ndarray:
    """Predicted probabilities of the positive class."""
    return _sigmoid(np.asarray(x, dtype=float) @ w + b)
