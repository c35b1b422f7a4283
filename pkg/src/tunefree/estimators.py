"""The two-norm mean estimator and its two concrete instantiations.

`abstract_fit` implements the generic recipe: estimate the noise level as a
ratio of norms of the data and of a fresh standard Gaussian vector, then
minimize the estimation norm over the Euclidean ball of squared radius
n * sigma_hat^2 around the data. `regression_fit` and `matrix_fit` are the
high dimensional regression and matrix denoising specializations, and the
risk-bound helpers evaluate the corresponding theoretical rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from tunefree import norms
from tunefree.solvers import (
    SolverError,
    SolverSettings,
    basis_pursuit,
    column_space_projection,
    l1_constrained_ls,
    nuclear_constrained,
)

SUPPORT_RELATIVE = 1e-6
SUPPORT_FLOOR = 1e-8


class GaussianSampler:
    """Reproducible N(0,1) source: counter-based Philox keyed by (seed, stream).

    Identical (seed, stream) pairs reproduce identical draws bit-for-bit;
    replaying an experiment only needs the two integers.
    """

    def __init__(self, seed, stream=0):
        self.seed = int(seed)
        self.stream = int(stream)
        key = ((self.stream & 0xFFFFFFFFFFFFFFFF) << 64) | (self.seed & 0xFFFFFFFFFFFFFFFF)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def normal(self, size):
        return self._gen.standard_normal(size)


@dataclass
class RegressionFit:
    beta_hat: np.ndarray
    sigma_hat: float
    fitted: np.ndarray
    support: np.ndarray
    gamma: float
    m1: float
    m2: float
    rank_k: int
    seed: int | None = None


@dataclass
class MatrixFit:
    m_hat: np.ndarray
    sigma_hat: float
    theta: float
    nuclear_y: float
    nuclear_z: float
    seed: int | None = None


@dataclass
class RiskBound:
    r: float | None
    s: float | None
    a: float
    m2_bound: float
    m4_bound: float
    bound_value: float
    terms: dict = field(default_factory=dict)


def support_threshold(beta):
    beta = np.asarray(beta, dtype=float)
    if beta.size == 0:
        return SUPPORT_FLOOR
    return max(SUPPORT_FLOOR, SUPPORT_RELATIVE * float(np.abs(beta).max()))


def support_set(beta):
    return np.nonzero(np.abs(beta) > support_threshold(beta))[0]


def estimate_sigma(ktilde, Y, Z):
    """sigma_hat = Ktilde(Y) / Ktilde(Z)."""
    nz = norms.norm_eval(ktilde, Z)
    if nz == 0.0:
        raise ValueError(
            "auxiliary vector has zero norm; this is a probability-zero event "
            "and signals RNG misuse"
        )
    return norms.norm_eval(ktilde, Y) / nz


def abstract_fit(pair, Y, sampler, settings=None):
    """Generic two-norm estimator.

    Draws Z through the sampler, estimates sigma with the auxiliary norm, and
    minimizes the estimation norm inside the residual ball of squared radius
    n * sigma_hat^2. When mu_hat != 0 the ball constraint is active.
    """
    if settings is None:
        settings = SolverSettings()
    Y = np.asarray(Y, dtype=float).ravel()
    n = Y.size
    dim = pair.K.ambient_dim
    if dim is not None and dim != n:
        raise ValueError(f"data length {n} does not match norm dimension {dim}")
    Z = np.asarray(sampler.normal(n), dtype=float).ravel()
    sigma_hat = estimate_sigma(pair.Ktilde, Y, Z)
    budget = n * sigma_hat**2

    kind = pair.K
    if budget == 0.0:
        return Y.copy(), sigma_hat
    if float(Y @ Y) <= budget:
        return np.zeros(n), sigma_hat
    if kind.tag == "l1":
        mu = l1_constrained_ls(np.eye(n), Y, budget, settings)
    elif kind.tag == "design":
        beta = l1_constrained_ls(kind.design, Y, budget, settings)
        mu = kind.design @ beta
    elif kind.tag == "nuclear":
        m_hat, _ = nuclear_constrained(Y.reshape(kind.shape, order="F"), budget)
        mu = m_hat.ravel(order="F")
    else:
        raise ValueError(f"no budget-constrained minimizer implemented for {kind.tag!r}")
    return mu, sigma_hat


def regression_fit(X, Y, sampler, settings=None):
    """Tuning-free sparse regression.

    Augments the design with a scaled identity so the representation norm is
    finite everywhere, estimates sigma as the ratio of the minimal l1
    representation costs of Y and of a fresh Gaussian vector, then minimizes
    |beta|_1 subject to the fitted residual matching rank * sigma_hat^2.
    """
    if settings is None:
        settings = SolverSettings()
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("design must be a 2-D array")
    n, p = X.shape
    Y = np.asarray(Y, dtype=float).ravel()
    if Y.size != n:
        raise ValueError(f"response length {Y.size} does not match {n} rows")

    col_norms = np.linalg.norm(X, axis=0)
    gamma = float(col_norms.max()) / math.sqrt(n)
    if gamma == 0.0:
        raise ValueError("design matrix is identically zero")

    Xt = np.hstack([X, math.sqrt(n) * gamma * np.eye(n)])
    Z = np.asarray(sampler.normal(n), dtype=float).ravel()

    try:
        m1 = basis_pursuit(Xt, Y, settings).objective
        m2 = basis_pursuit(Xt, Z, settings).objective
    except SolverError as exc:
        raise SolverError(f"representation-cost step failed: {exc}") from exc
    sigma_hat = m1 / m2

    y_prime, rank_k = column_space_projection(X, Y)
    try:
        beta_hat = l1_constrained_ls(X, y_prime, rank_k * sigma_hat**2, settings)
    except SolverError as exc:
        raise SolverError(f"budget-constrained fit step failed: {exc}") from exc

    return RegressionFit(
        beta_hat=beta_hat,
        sigma_hat=sigma_hat,
        fitted=X @ beta_hat,
        support=support_set(beta_hat),
        gamma=gamma,
        m1=m1,
        m2=m2,
        rank_k=rank_k,
        seed=getattr(sampler, "seed", None),
    )


def matrix_fit(Y, sampler):
    """Tuning-free matrix denoising by nuclear norm minimization."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise ValueError("input must be a 2-D array")
    l, m = Y.shape
    Z = np.asarray(sampler.normal((l, m)), dtype=float)
    nuclear_y = float(np.linalg.svd(Y, compute_uv=False).sum())
    nuclear_z = float(np.linalg.svd(Z, compute_uv=False).sum())
    if nuclear_z == 0.0:
        raise ValueError("auxiliary matrix has zero norm; signals RNG misuse")
    sigma_hat = nuclear_y / nuclear_z
    m_hat, theta = nuclear_constrained(Y, l * m * sigma_hat**2)
    return MatrixFit(
        m_hat=m_hat,
        sigma_hat=sigma_hat,
        theta=theta,
        nuclear_y=nuclear_y,
        nuclear_z=nuclear_z,
        seed=getattr(sampler, "seed", None),
    )


def regression_risk_bound(n, p, sigma, beta0_l1, gamma, constant=1.0):
    """Evaluate the regression rate r and the bound right-hand sides.

    The auxiliary-norm geometry enters through a <= 1/gamma and
    m_k <= 3 gamma sqrt(n log(p+n)); the representation cost of the true
    mean is bounded by |beta0|_1.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if beta0_l1 < 0 or gamma <= 0:
        raise ValueError("beta0_l1 must be >= 0 and gamma > 0")
    log_pn = math.log(p + n)
    r = beta0_l1 * gamma / sigma * math.sqrt(log_pn / n)
    a = 1.0 / gamma
    mk = 3.0 * gamma * math.sqrt(n * log_pn)
    terms = {
        "rate": constant * r,
        "rate_sq": constant * r**2,
        "sqrt_log_term": constant * math.sqrt(log_pn / n),
        "log_term": constant * log_pn / n,
        "sigma_rel_sq_bound": constant * r**2 + constant * log_pn / n,
        "sigma_abs_sq_bound": (
            beta0_l1**2 * mk**2 / (n - 2) ** 2
            + 32.0 * math.sqrt(2.0) * sigma**2 * a**2 * mk**2 / (n - 4) ** 2
        ),
    }
    bound_value = (
        terms["rate"] + terms["rate_sq"] + terms["sqrt_log_term"] + terms["log_term"]
    )
    return RiskBound(r=r, s=None, a=a, m2_bound=mk, m4_bound=mk,
                     bound_value=bound_value, terms=terms)


def matrix_risk_bound(l, m, sigma, nuclear_norm, constant=1.0, sampler=None,
                      mc_reps=200):
    """Evaluate the matrix rate s and the bound right-hand sides.

    a is bounded by sqrt(min(l, m)); the dual-norm moments of a Gaussian
    matrix (spectral norm moments) are estimated by Monte Carlo since the
    literature constant is not explicit.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if nuclear_norm < 0:
        raise ValueError("nuclear_norm must be nonnegative")
    if sampler is None:
        sampler = GaussianSampler(0, stream=2**32)
    s = nuclear_norm * (math.sqrt(l) + math.sqrt(m)) / (l * m * sigma)
    a = math.sqrt(min(l, m))
    spec = np.empty(mc_reps)
    for i in range(mc_reps):
        spec[i] = np.linalg.svd(sampler.normal((l, m)), compute_uv=False)[0]
    m2 = float(np.mean(spec**2)) ** 0.5
    m4 = float(np.mean(spec**4)) ** 0.25
    n = l * m
    terms = {
        "rate": constant * s,
        "rate_sq": constant * s**2,
        "dim_term": constant * math.sqrt(1.0 / (l * m)),
        "sigma_rel_sq_bound": constant * s**2 + constant / (l * m),
        "sigma_abs_sq_bound": (
            nuclear_norm**2 * m2**2 / (n - 2) ** 2
            + 32.0 * math.sqrt(2.0) * sigma**2 * a**2 * m4**2 / (n - 4) ** 2
        ),
    }
    bound_value = terms["rate"] + terms["rate_sq"] + terms["dim_term"]
    return RiskBound(r=None, s=s, a=a, m2_bound=m2, m4_bound=m4,
                     bound_value=bound_value, terms=terms)
