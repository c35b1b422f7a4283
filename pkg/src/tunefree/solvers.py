"""Convex optimization kernels.

Exact-constraint l1 minimization (basis pursuit as a linear program), budget-constrained
l1 least squares (lasso path plus residual root-finding), budget-constrained
nuclear norm minimization (singular value shrinkage), and column-space
projection with numerical rank.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from sklearn.linear_model import Lasso


@dataclass
class SolverSettings:
    max_iterations: int = 50_000
    primal_tolerance: float = 1e-6
    dual_tolerance: float = 1e-6
    budget_root_tolerance: float = 1e-4

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        for name in ("primal_tolerance", "dual_tolerance", "budget_root_tolerance"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


class SolverError(RuntimeError):
    """Raised on non-convergence or structurally bad solver input."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass
class BasisPursuitResult:
    beta: np.ndarray
    objective: float
    dual_certificate: np.ndarray
    iterations: int


def _as_matrix(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {A.shape}")
    return A


def _as_vector(y, n, name="y"):
    y = np.asarray(y, dtype=float).ravel()
    if y.size != n:
        raise ValueError(f"{name} has length {y.size}, expected {n}")
    return y


def _soft(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def has_full_row_rank(A, tol=1e-10):
    A = _as_matrix(A)
    if A.shape[1] < A.shape[0]:
        return False
    s = np.linalg.svd(A, compute_uv=False)
    return s.size > 0 and s[-1] > tol * max(s[0], 1.0)


def basis_pursuit(A, y, settings=None):
    """Minimize the l1 norm of beta subject to A beta = y.

    Solved as the equivalent linear program over the positive/negative parts
    of beta (HiGHS backend). The equality-constraint multipliers provide the
    dual certificate v: ||A^T v||_inf <= 1 and v.y matches the optimal
    objective, witnessing optimality by LP duality.
    """
    if settings is None:
        settings = SolverSettings()
    A = _as_matrix(A)
    n, q = A.shape
    y = _as_vector(y, n)
    if not has_full_row_rank(A):
        raise SolverError("basis_pursuit requires a full-row-rank constraint matrix")

    ynorm = float(np.linalg.norm(y))
    if ynorm == 0.0:
        return BasisPursuitResult(np.zeros(q), 0.0, np.zeros(n), 0)
    b = y / ynorm

    feas_tol = min(1e-9, settings.primal_tolerance)
    res = linprog(
        np.ones(2 * q),
        A_eq=np.hstack([A, -A]),
        b_eq=b,
        bounds=(0, None),
        method="highs",
        options={
            "maxiter": settings.max_iterations,
            "primal_feasibility_tolerance": feas_tol,
            "dual_feasibility_tolerance": min(1e-9, settings.dual_tolerance),
        },
    )
    if not res.success:
        raise SolverError(
            f"basis_pursuit did not converge: {res.message}",
            status=res.status,
            iterations=int(res.nit),
        )
    beta = res.x[:q] - res.x[q:]
    objective = float(np.abs(beta).sum())
    cert = np.asarray(res.eqlin.marginals, dtype=float)
    if cert @ b < 0:
        cert = -cert
    # Guard against tiny dual-feasibility overshoot from the LP tolerances.
    cert = cert / max(1.0, float(np.linalg.norm(A.T @ cert, np.inf)))
    gap = objective - float(cert @ b)
    if gap > settings.dual_tolerance * max(1.0, objective) or float(
        np.linalg.norm(A @ beta - b)
    ) > settings.primal_tolerance:
        raise SolverError(
            "basis_pursuit certificate check failed",
            duality_gap=gap * ynorm,
            objective=objective * ynorm,
        )
    return BasisPursuitResult(beta * ynorm, objective * ynorm, cert, int(res.nit))


def _lasso_model(settings):
    return Lasso(
        alpha=1.0,
        fit_intercept=False,
        warm_start=True,
        tol=min(1e-8, settings.primal_tolerance),
        max_iter=max(10_000, settings.max_iterations),
    )


def _exact_interpolation(X, y, settings):
    # min |beta|_1 subject to X beta = y, with y in the column space of X.
    # Compress onto an orthonormal basis of the column space so the reduced
    # constraint matrix has full row rank, then run basis pursuit.
    y_prime, k = column_space_projection(X, y)
    if np.linalg.norm(y - y_prime) > 1e-8 * max(1.0, np.linalg.norm(y)):
        raise SolverError("interpolation target is not in the column space")
    U, s, _ = np.linalg.svd(X, full_matrices=False)
    Q = U[:, :k]
    return basis_pursuit(Q.T @ X, Q.T @ y, settings).beta


def l1_constrained_ls(X, y, budget, settings=None):
    """Minimize |beta|_1 subject to ||y - X beta||^2 <= budget.

    Requires y to lie in the column space of X (the constraint set is then
    nonempty for every budget >= 0). Solved by tracing the penalized lasso
    solution and root-finding the penalty at which the squared residual
    matches the budget. Penalty convention: (1/2n)||y - X b||^2 + lam*|b|_1.
    """
    if settings is None:
        settings = SolverSettings()
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    X = _as_matrix(X)
    n, p = X.shape
    y = _as_vector(y, n)

    ny2 = float(y @ y)
    if ny2 <= budget:
        return np.zeros(p)
    if budget == 0.0:
        return _exact_interpolation(X, y, settings)

    lam_max = float(np.linalg.norm(X.T @ y, np.inf)) / n
    if lam_max == 0.0:
        # X^T y = 0 with y != 0 means y is orthogonal to the column space.
        raise SolverError("constraint set unreachable: response leaves the column space")

    Xf = np.asfortranarray(X)
    model = _lasso_model(settings)

    def fit(lam):
        model.set_params(alpha=lam)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            model.fit(Xf, y)
        r = y - X @ model.coef_
        return float(r @ r), model.coef_.copy()

    # Bracket the target residual: lam_max gives beta=0 (residual ny2 > budget),
    # shrink the lower end until the residual falls below the budget.
    lo = lam_max / 2.0
    r2_lo, beta_lo = fit(lo)
    while r2_lo > budget:
        lo /= 4.0
        if lo < 1e-16 * lam_max:
            raise SolverError(
                "could not drive the residual below the budget",
                residual_sq=r2_lo,
                budget=budget,
            )
        r2_lo, beta_lo = fit(lo)

    hi = lam_max
    tol = settings.budget_root_tolerance * budget
    best_beta, best_gap = beta_lo, abs(r2_lo - budget)
    for _ in range(200):
        if best_gap <= tol:
            break
        mid = 0.5 * (lo + hi)
        r2, beta = fit(mid)
        if abs(r2 - budget) < best_gap:
            best_beta, best_gap = beta, abs(r2 - budget)
        if r2 > budget:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * lam_max:
            break
    return best_beta


def shrinkage_level(values, budget, rel_tol=1e-14):
    """Smallest theta >= 0 with sum(min(values, theta)^2) == budget.

    `values` must be nonnegative with sum(values^2) > budget. Monotone
    bisection; the target function is continuous and strictly increasing
    up to max(values).
    """
    values = np.asarray(values, dtype=float)
    lo, hi = 0.0, float(values.max())
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(np.sum(np.minimum(values, mid) ** 2)) > budget:
            hi = mid
        else:
            lo = mid
        if hi - lo <= rel_tol * max(1.0, float(values.max())):
            break
    return 0.5 * (lo + hi)


def nuclear_constrained(Y, budget):
    """Minimize the nuclear norm of A subject to ||Y - A||_HS^2 <= budget.

    Returns (Mhat, theta) where Mhat soft-thresholds the singular values of Y
    at level theta. The constraint is active whenever Mhat != 0.
    """
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    Y = _as_matrix(Y)
    if budget == 0.0:
        return Y.copy(), 0.0
    U, s, Vt = np.linalg.svd(Y, full_matrices=False)
    if float(s @ s) <= budget:
        return np.zeros_like(Y), float(s[0]) if s.size else 0.0
    theta = shrinkage_level(s, budget)
    shrunk = np.maximum(s - theta, 0.0)
    return (U * shrunk) @ Vt, theta


def column_space_projection(X, y, rank_tolerance=None):
    """Project y onto the span of the columns of X; also report numerical rank."""
    X = _as_matrix(X)
    n, p = X.shape
    y = _as_vector(y, n)
    U, s, _ = np.linalg.svd(X, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros_like(y), 0
    if rank_tolerance is None:
        rank_tolerance = 1e-10 * max(n, p)
    k = int(np.sum(s > rank_tolerance * s[0]))
    Q = U[:, :k]
    return Q @ (Q.T @ y), k


def svd(M):
    """Thin SVD M = U diag(s) V^T with s nonincreasing and V (not V^T) returned."""
    M = _as_matrix(M)
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix entries must be finite")
    try:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SolverError("SVD did not converge") from exc
    return U, s, Vt.T
