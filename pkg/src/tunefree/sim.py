"""Simulation harness: Gaussian designs with intercept, the proposed
tuning-free estimator against a K-fold cross-validated lasso baseline,
model-selection and prediction-error metrics, and aggregated reports."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import time
import warnings
from dataclasses import dataclass, field, asdict

import numpy as np
from sklearn.linear_model import Lasso, lasso_path
from sklearn.model_selection import KFold

from tunefree.estimators import (
    GaussianSampler,
    matrix_fit,
    matrix_risk_bound,
    regression_fit,
    support_threshold,
)
from tunefree.solvers import SolverError, SolverSettings


@dataclass(frozen=True)
class Scenario:
    n: int
    p: int
    sigma: float
    beta0: tuple  # sparse ((index, value), ...) with 1-based indices in [1, p]
    replications: int
    base_seed: int
    label: str = ""

    def __post_init__(self):
        if self.n < 1 or self.p < 1 or self.replications < 1:
            raise ValueError("n, p, replications must all be >= 1")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        for idx, _ in self.beta0:
            if not 1 <= idx <= self.p:
                raise ValueError(f"beta0 index {idx} outside [1, {self.p}]")

    def full_beta0(self):
        """Coefficient vector aligned with gen_design columns (intercept first)."""
        beta = np.zeros(self.p + 1)
        for idx, value in self.beta0:
            beta[idx] = value
        return beta


# The eight benchmark rows: (n, p, sigma, signal) with signals written as
# (index, coefficient) pairs over the non-intercept covariates.
TABLE1_ROWS = (
    Scenario(100, 1000, 2.0, ((1, 1.0), (2, 1.0)), 50, 0, "x1+x2"),
    Scenario(100, 1000, 3.0, ((1, 1.0), (2, 1.0)), 50, 0, "x1+x2"),
    Scenario(200, 1000, 2.0, ((1, 1.0), (2, 1.0), (3, -1.0)), 50, 0, "x1+x2-x3"),
    Scenario(200, 1000, 3.0, ((1, 1.0), (2, 1.0), (3, -1.0)), 50, 0, "x1+x2-x3"),
    Scenario(300, 300, 2.0, ((1, 1.0), (2, 2.0)), 50, 0, "x1+2x2"),
    Scenario(300, 300, 3.0, ((1, 1.0), (2, 2.0)), 50, 0, "x1+2x2"),
    Scenario(400, 4000, 2.0, ((1, 1.0), (2, 1.0), (3, 1.0), (4, 1.0)), 50, 0, "x1+x2+x3+x4"),
    Scenario(400, 4000, 3.0, ((1, 1.0), (2, 1.0), (3, 1.0), (4, 1.0)), 50, 0, "x1+x2+x3+x4"),
)


def derive_seed(base_seed, replication, purpose):
    """Stable 63-bit stream seed from (base seed, replication, purpose tag)."""
    digest = hashlib.blake2b(
        f"{base_seed}:{replication}:{purpose}".encode(), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little") >> 1


def gen_design(n, p, seed):
    """n x (p+1) design: all-ones intercept column first, then i.i.d. N(0,1)."""
    if n < 1 or p < 1:
        raise ValueError("n and p must be >= 1")
    gauss = GaussianSampler(seed).normal((n, p))
    return np.hstack([np.ones((n, 1)), gauss])


def gen_response(X, beta0, sigma, seed):
    X = np.asarray(X, dtype=float)
    beta0 = np.asarray(beta0, dtype=float)
    if beta0.size != X.shape[1]:
        raise ValueError("beta0 length does not match design columns")
    return X @ beta0 + sigma * GaussianSampler(seed).normal(X.shape[0])


def _center(X, y):
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    return X - x_mean, y - y_mean, x_mean, y_mean


def lasso_fit(X, y, lam, intercept_col=None, tol=1e-10):
    """Single lasso fit at penalty lam, objective (1/2n)||y - Xb||^2 + lam|b|_1.

    With intercept_col set, that column is dropped from the penalized problem
    and refit exactly via centering; the returned vector is aligned with the
    columns of X (the intercept coefficient sits at intercept_col).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n, p = X.shape
    if intercept_col is None:
        Xp, yp = X, y
    else:
        keep = [j for j in range(p) if j != intercept_col]
        Xp, yp, x_mean, y_mean = _center(X[:, keep], y)
    model = Lasso(alpha=max(lam, 0.0), fit_intercept=False, tol=tol, max_iter=100_000)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        model.fit(Xp, yp)
    if intercept_col is None:
        return model.coef_.copy()
    beta = np.zeros(p)
    beta[keep] = model.coef_
    beta[intercept_col] = y_mean - x_mean @ model.coef_
    return beta


def cv_lasso(X, Y, folds=10, grid_size=100, seed=0, intercept_col=0):
    """Lasso with K-fold cross-validation over a geometric penalty grid.

    The grid runs from lam_max (the smallest penalty nulling every penalized
    coordinate) down to 1e-4*lam_max; the minimizing lambda of the mean CV
    squared prediction error is refit on the full data. The intercept column
    is unpenalized (handled by centering).
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float).ravel()
    n, p = X.shape
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if n < folds:
        raise ValueError("need at least as many rows as folds")

    if intercept_col is None:
        keep = list(range(p))
        Xp, yp = X, Y
    else:
        keep = [j for j in range(p) if j != intercept_col]
        Xp, yp, _, _ = _center(X[:, keep], Y)

    lam_max = float(np.linalg.norm(Xp.T @ yp, np.inf)) / n
    if lam_max == 0.0:
        return np.zeros(p) if intercept_col is None else lasso_fit(X, Y, 0.0, intercept_col)
    grid = np.geomspace(lam_max, 1e-4 * lam_max, grid_size)

    cv_err = np.zeros(grid_size)
    kf = KFold(n_splits=folds, shuffle=True, random_state=seed % 2**32)
    for train, val in kf.split(X):
        Xt = X[train][:, keep]
        yt = Y[train]
        if intercept_col is not None:
            Xt, yt, xm, ym = _center(Xt, yt)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            alphas_out, coefs, _ = lasso_path(Xt, yt, alphas=grid, tol=1e-4, max_iter=50_000)
        order = np.argsort(-alphas_out)  # align with the descending grid
        coefs = coefs[:, order]
        if intercept_col is None:
            pred = X[val][:, keep] @ coefs  # (n_val, grid_size)
        else:
            pred = (X[val][:, keep] - xm) @ coefs + ym
        cv_err += ((pred - Y[val][:, None]) ** 2).sum(axis=0)
    best = int(np.argmin(cv_err / n))
    return lasso_fit(X, Y, float(grid[best]), intercept_col, tol=1e-8)


def prediction_error(X, beta_hat, beta0):
    """||X beta_hat - X beta0||^2 / n."""
    X = np.asarray(X, dtype=float)
    diff = X @ (np.asarray(beta_hat, float) - np.asarray(beta0, float))
    return float(diff @ diff) / X.shape[0]


def selection_metrics(beta_hat, beta0, threshold):
    """(true positives, false positives) of support(beta_hat) vs support(beta0)."""
    beta_hat = np.asarray(beta_hat, dtype=float)
    beta0 = np.asarray(beta0, dtype=float)
    if beta_hat.size != beta0.size:
        raise ValueError("coefficient vectors have different lengths")
    sel = np.abs(beta_hat) > threshold
    truth = beta0 != 0
    tp = int(np.sum(sel & truth))
    fp = int(np.sum(sel & ~truth))
    return tp, fp


@dataclass
class SimReport:
    scenario: Scenario
    records: list = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)
    n_failed: int = 0
    elapsed: float = 0.0

    def to_json_lines(self):
        lines = [json.dumps({"kind": "scenario", **asdict(self.scenario)}, sort_keys=True)]
        for rec in self.records:
            lines.append(json.dumps({"kind": "replication", **rec}, sort_keys=True))
        lines.append(
            json.dumps(
                {
                    "kind": "aggregate",
                    "n_failed": self.n_failed,
                    "elapsed": self.elapsed,
                    **self.aggregates,
                },
                sort_keys=True,
            )
        )
        return "\n".join(lines) + "\n"

    def to_csv(self):
        if not self.records:
            return ""
        keys = sorted(self.records[0].keys())
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(keys)
        for rec in self.records:
            row = []
            for k in keys:
                v = rec.get(k)
                row.append("" if v is None else json.dumps(v) if isinstance(v, dict) else v)
            writer.writerow(row)
        return buf.getvalue()

    def to_table(self):
        a = self.aggregates
        sc = self.scenario
        header = f"n={sc.n} p={sc.p} sigma={sc.sigma} signal={sc.label or sc.beta0}"
        rows = [header, "-" * len(header)]
        rows.append(f"{'method':<10}{'avg TP':>10}{'avg FP':>10}{'pred err':>12}{'pred/sig2':>12}")
        for method in ("proposed", "cv_lasso"):
            rows.append(
                f"{method:<10}"
                f"{a[f'{method}_avg_tp']:>10.3f}"
                f"{a[f'{method}_avg_fp']:>10.3f}"
                f"{a[f'{method}_avg_pred_err']:>12.4f}"
                f"{a[f'{method}_avg_pred_err_norm']:>12.4f}"
            )
        rows.append(f"failed replications: {self.n_failed}   elapsed: {self.elapsed:.1f}s")
        return "\n".join(rows) + "\n"


def run_scenario(scenario, settings=None, folds=10, grid_size=100):
    """Run both estimators over seeded replications and aggregate the metrics.

    Per-replication seeds are derived independently for the design, the noise,
    the proposed estimator's internal Gaussian draw, and the CV fold split, so
    streams never couple. Failed replications are recorded and excluded from
    the averages.
    """
    if settings is None:
        settings = SolverSettings()
    t_start = time.time()
    beta0 = scenario.full_beta0()
    norm_div = scenario.sigma**2 if scenario.sigma > 0 else 1.0
    records = []
    for rep in range(scenario.replications):
        seeds = {
            tag: derive_seed(scenario.base_seed, rep, tag)
            for tag in ("design", "noise", "estimator", "cv")
        }
        X = gen_design(scenario.n, scenario.p, seeds["design"])
        Y = gen_response(X, beta0, scenario.sigma, seeds["noise"])
        rec = {"replication": rep, "seeds": seeds, "error": None}
        t0 = time.time()
        try:
            fit = regression_fit(X, Y, GaussianSampler(seeds["estimator"]), settings)
            lasso_beta = cv_lasso(X, Y, folds=folds, grid_size=grid_size, seed=seeds["cv"])
        except SolverError as exc:
            rec["error"] = str(exc)
            rec["elapsed"] = time.time() - t0
            records.append(rec)
            continue
        for method, beta in (("proposed", fit.beta_hat), ("cv_lasso", lasso_beta)):
            tp, fp = selection_metrics(
                beta[1:], beta0[1:], support_threshold(beta[1:])
            )
            err = prediction_error(X, beta, beta0)
            rec[f"{method}_tp"] = tp
            rec[f"{method}_fp"] = fp
            rec[f"{method}_pred_err"] = err
            rec[f"{method}_pred_err_norm"] = err / norm_div
        rec["sigma_hat"] = fit.sigma_hat
        rec["m1"] = fit.m1
        rec["m2"] = fit.m2
        rec["gamma"] = fit.gamma
        rec["rank_k"] = fit.rank_k
        rec["elapsed"] = time.time() - t0
        records.append(rec)

    good = [r for r in records if r["error"] is None]
    aggregates = {}
    for method in ("proposed", "cv_lasso"):
        for metric in ("tp", "fp", "pred_err", "pred_err_norm"):
            key = f"{method}_{metric}"
            aggregates[f"{method}_avg_{metric}"] = (
                float(np.mean([r[key] for r in good])) if good else float("nan")
            )
    aggregates["n_replications"] = len(records)
    aggregates["n_successful"] = len(good)
    return SimReport(
        scenario=scenario,
        records=records,
        aggregates=aggregates,
        n_failed=len(records) - len(good),
        elapsed=time.time() - t_start,
    )


def gen_low_rank(l, m, rank, seed, nuclear_target=None):
    """Random rank-`rank` l x m matrix with Gaussian factors, rescaled so its
    nuclear norm equals nuclear_target (default min(l, m))."""
    if rank == 0:
        return np.zeros((l, m))
    sampler = GaussianSampler(seed)
    M = sampler.normal((l, rank)) @ sampler.normal((rank, m))
    nuc = np.linalg.svd(M, compute_uv=False).sum()
    target = min(l, m) if nuclear_target is None else nuclear_target
    return M * (target / nuc)


def run_matrix_scenario(l, m, rank, sigma, replications, seed, nuclear_target=None):
    """Monte Carlo risk of the matrix denoiser on noisy low-rank signals.

    Reports the normalized squared error ||Mhat - M||^2_HS / (l m sigma^2)
    (the naive estimator Y scores 1 in expectation), the relative sigma
    error, and the theoretical rate terms.
    """
    if not 0 <= rank <= min(l, m):
        raise ValueError("rank must lie in [0, min(l, m)]")
    if replications < 1:
        raise ValueError("replications must be >= 1")
    t_start = time.time()
    records = []
    norm_div = l * m * (sigma**2 if sigma > 0 else 1.0)
    for rep in range(replications):
        seeds = {
            tag: derive_seed(seed, rep, tag) for tag in ("signal", "noise", "estimator")
        }
        M = gen_low_rank(l, m, rank, seeds["signal"], nuclear_target)
        Y = M + sigma * GaussianSampler(seeds["noise"]).normal((l, m))
        fit = matrix_fit(Y, GaussianSampler(seeds["estimator"]))
        err = float(np.sum((fit.m_hat - M) ** 2))
        records.append(
            {
                "replication": rep,
                "seeds": seeds,
                "risk_normalized": err / norm_div,
                "sigma_hat": fit.sigma_hat,
                "sigma_rel_error": (fit.sigma_hat / sigma - 1.0) if sigma > 0 else None,
                "theta": fit.theta,
                "nuclear_m": float(np.linalg.svd(M, compute_uv=False).sum()),
                "residual_sq": float(np.sum((Y - fit.m_hat) ** 2)),
            }
        )
    nuclear_ref = float(np.mean([r["nuclear_m"] for r in records]))
    bound = (
        matrix_risk_bound(l, m, sigma, nuclear_ref, mc_reps=50) if sigma > 0 else None
    )
    return {
        "l": l,
        "m": m,
        "rank": rank,
        "sigma": sigma,
        "seed": seed,
        "records": records,
        "mean_risk_normalized": float(np.mean([r["risk_normalized"] for r in records])),
        "mean_sigma_rel_sq": (
            float(np.mean([r["sigma_rel_error"] ** 2 for r in records]))
            if sigma > 0
            else None
        ),
        "bound": bound,
        "elapsed": time.time() - t_start,
    }
