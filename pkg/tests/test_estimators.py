import math

import numpy as np
import pytest

from tunefree import norms
from tunefree.estimators import (
    GaussianSampler,
    abstract_fit,
    estimate_sigma,
    matrix_fit,
    matrix_risk_bound,
    regression_fit,
    regression_risk_bound,
    support_set,
    support_threshold,
)
from tunefree.solvers import SolverSettings

TIGHT = SolverSettings(budget_root_tolerance=1e-10)


class FixedSampler:
    """Returns one pinned array regardless of the requested size."""

    def __init__(self, z):
        self.z = np.asarray(z, dtype=float)
        self.seed = None

    def normal(self, size):
        return self.z


def test_sampler_determinism_and_streams():
    a = GaussianSampler(42).normal(16)
    b = GaussianSampler(42).normal(16)
    assert np.array_equal(a, b)
    c = GaussianSampler(42, stream=1).normal(16)
    d = GaussianSampler(43).normal(16)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_support_threshold_and_set():
    beta = np.array([1.0, 1e-9, -2e-6, 0.0])
    thr = support_threshold(beta)
    assert thr == pytest.approx(1e-6)
    assert list(support_set(beta)) == [0, 2]
    assert support_threshold(np.zeros(3)) == 1e-8
    assert support_threshold(np.array([])) == 1e-8


def test_estimate_sigma_examples():
    k = norms.l1_kind()
    z = np.array([1.0, 1.0])
    assert estimate_sigma(k, 2 * z, z) == pytest.approx(2.0)
    assert estimate_sigma(k, np.zeros(2), z) == 0.0
    assert estimate_sigma(k, np.array([3.0, 0.0]), z) == pytest.approx(1.5)
    with pytest.raises(ValueError):
        estimate_sigma(k, z, np.zeros(2))


def test_abstract_fit_zero_input():
    pair = norms.NormPair(norms.l1_kind(), norms.l1_kind())
    mu, sigma = abstract_fit(pair, np.zeros(4), GaussianSampler(0))
    assert np.array_equal(mu, np.zeros(4))
    assert sigma == 0.0


def test_abstract_fit_zero_when_ball_contains_origin():
    pair = norms.NormPair(norms.l1_kind(), norms.l1_kind())
    # sigma_hat = 2/1 = 2, budget = 2*4 = 8 > ||Y||^2 = 2.
    mu, sigma = abstract_fit(pair, [1.0, -1.0], FixedSampler([0.5, 0.5]))
    assert sigma == pytest.approx(2.0)
    assert np.array_equal(mu, np.zeros(2))


def test_abstract_fit_single_spike_soft_threshold():
    # |Y|_1 = 10, |Z|_1 = 10 -> sigma_hat = 1, budget = 4; shrinking the
    # spike until the squared residual is 4 gives (8, 0, 0, 0).
    pair = norms.NormPair(norms.l1_kind(), norms.l1_kind())
    Y = np.array([10.0, 0.0, 0.0, 0.0])
    mu, sigma = abstract_fit(pair, Y, FixedSampler([4.0, -3.0, 2.0, 1.0]), TIGHT)
    assert sigma == pytest.approx(1.0)
    assert np.allclose(mu, [8.0, 0.0, 0.0, 0.0], atol=1e-6)


def test_abstract_fit_constraint_active():
    pair = norms.NormPair(norms.l1_kind(), norms.l1_kind())
    rng = np.random.default_rng(0)
    Y = rng.normal(size=8) * 3
    mu, sigma = abstract_fit(pair, Y, GaussianSampler(5), TIGHT)
    if np.any(mu != 0):
        budget = Y.size * sigma**2
        assert float((Y - mu) @ (Y - mu)) == pytest.approx(budget, rel=1e-6)


def test_abstract_fit_design_kind():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(6, 15))
    pair = norms.NormPair(norms.design_kind(A), norms.design_kind(A))
    Y = rng.normal(size=6) * 4
    mu, sigma = abstract_fit(pair, Y, GaussianSampler(9), TIGHT)
    assert sigma > 0
    if np.any(mu != 0):
        assert float((Y - mu) @ (Y - mu)) == pytest.approx(6 * sigma**2, rel=1e-4)


def test_abstract_fit_nuclear_kind():
    pair = norms.NormPair(norms.nuclear_kind(3, 3), norms.nuclear_kind(3, 3))
    rng = np.random.default_rng(2)
    Y = (rng.normal(size=(3, 3)) * 2).ravel(order="F")
    mu, sigma = abstract_fit(pair, Y, GaussianSampler(4))
    if np.any(mu != 0):
        assert float((Y - mu) @ (Y - mu)) == pytest.approx(9 * sigma**2, rel=1e-8)


def test_abstract_fit_unsupported_kind():
    pair = norms.NormPair(norms.sup_kind(), norms.l1_kind())
    with pytest.raises(ValueError):
        abstract_fit(pair, [5.0, 5.0], FixedSampler([10.0, 10.0]))


def test_abstract_fit_dimension_mismatch():
    pair = norms.NormPair(norms.nuclear_kind(2, 2), norms.l1_kind())
    with pytest.raises(ValueError):
        abstract_fit(pair, np.ones(5), GaussianSampler(0))


def test_regression_fit_zero_response():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(10, 20))
    fit = regression_fit(X, np.zeros(10), GaussianSampler(7))
    assert fit.m1 == 0.0
    assert fit.sigma_hat == 0.0
    assert np.array_equal(fit.beta_hat, np.zeros(20))
    assert fit.support.size == 0


def test_regression_fit_rejects_zero_design():
    with pytest.raises(ValueError):
        regression_fit(np.zeros((4, 3)), np.ones(4), GaussianSampler(0))


def test_regression_fit_diagnostics_invariants():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(25, 40))
    beta0 = np.zeros(40)
    beta0[:3] = 4.0
    Y = X @ beta0 + 0.5 * rng.normal(size=25)
    fit = regression_fit(X, Y, GaussianSampler(11), TIGHT)
    assert fit.sigma_hat == fit.m1 / fit.m2
    assert fit.gamma == pytest.approx(np.linalg.norm(X, axis=0).max() / math.sqrt(25))
    assert fit.rank_k == 25
    resid = Y - fit.fitted  # Y' = Y here since X has full row rank
    budget = fit.rank_k * fit.sigma_hat**2
    assert float(resid @ resid) <= budget * (1 + 1e-6)
    if np.any(fit.beta_hat != 0):
        assert float(resid @ resid) == pytest.approx(budget, rel=1e-3)
    assert set(fit.support) == set(np.nonzero(np.abs(fit.beta_hat) > support_threshold(fit.beta_hat))[0])


def test_regression_fit_determinism():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(15, 30))
    Y = rng.normal(size=15)
    f1 = regression_fit(X, Y, GaussianSampler(21))
    f2 = regression_fit(X, Y, GaussianSampler(21))
    assert f1.m1 == f2.m1 and f1.m2 == f2.m2 and f1.sigma_hat == f2.sigma_hat
    assert np.array_equal(f1.beta_hat, f2.beta_hat)


def test_regression_fit_scale_equivariance():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(12, 24))
    Y = rng.normal(size=12) * 2
    c = 3.7
    f1 = regression_fit(X, Y, GaussianSampler(33), TIGHT)
    f2 = regression_fit(X, c * Y, GaussianSampler(33), TIGHT)
    assert f2.sigma_hat == pytest.approx(c * f1.sigma_hat, rel=1e-9)
    assert np.allclose(f2.beta_hat, c * f1.beta_hat, rtol=1e-6, atol=1e-9)


def test_regression_fit_noiseless_interpolation():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(20, 35))
    beta0 = np.zeros(35)
    beta0[0] = 2.0
    Y = X @ beta0
    fit = regression_fit(X, Y, GaussianSampler(44), TIGHT)
    resid = Y - fit.fitted
    assert float(resid @ resid) <= fit.rank_k * fit.sigma_hat**2 * (1 + 1e-6)


def test_matrix_fit_zero_input():
    fit = matrix_fit(np.zeros((3, 4)), GaussianSampler(0))
    assert fit.sigma_hat == 0.0
    assert np.array_equal(fit.m_hat, np.zeros((3, 4)))


def test_matrix_fit_diagonal_example():
    # ||Z||_* = 4 forces sigma_hat = 1 and budget 4; theta solves
    # min(3,t)^2 + min(1,t)^2 = 4, i.e. theta = sqrt(3).
    Y = np.diag([3.0, 1.0])
    fit = matrix_fit(Y, FixedSampler(np.diag([2.0, 2.0])))
    assert fit.sigma_hat == pytest.approx(1.0)
    assert fit.theta == pytest.approx(math.sqrt(3.0), abs=1e-9)
    assert np.allclose(fit.m_hat, np.diag([3.0 - math.sqrt(3.0), 0.0]), atol=1e-9)


def test_matrix_fit_budget_invariants():
    rng = np.random.default_rng(8)
    Y = rng.normal(size=(6, 7)) * 2
    fit = matrix_fit(Y, GaussianSampler(17))
    assert fit.sigma_hat == fit.nuclear_y / fit.nuclear_z
    budget = 42 * fit.sigma_hat**2
    resid = float(np.sum((Y - fit.m_hat) ** 2))
    assert resid <= budget * (1 + 1e-6)
    if np.any(fit.m_hat != 0):
        assert resid == pytest.approx(budget, rel=1e-8)


def test_matrix_fit_orthogonal_equivariance():
    rng = np.random.default_rng(9)
    Y = rng.normal(size=(5, 4)) * 2
    P = np.linalg.qr(rng.normal(size=(5, 5)))[0]
    Q = np.linalg.qr(rng.normal(size=(4, 4)))[0]
    Z = rng.normal(size=(5, 4))
    f1 = matrix_fit(Y, FixedSampler(Z))
    f2 = matrix_fit(P @ Y @ Q.T, FixedSampler(Z))
    assert f2.sigma_hat == pytest.approx(f1.sigma_hat, rel=1e-12)
    assert np.max(np.abs(f2.m_hat - P @ f1.m_hat @ Q.T)) <= 1e-8


def test_regression_risk_bound_values():
    assert regression_risk_bound(100, 1000, 2.0, 0.0, 1.0).r == 0.0
    rb = regression_risk_bound(100, 1000, 2.0, 2.0, 1.0)
    assert rb.r == pytest.approx(math.sqrt(math.log(1100)) / 10.0, rel=1e-12)
    assert rb.r == pytest.approx(0.26459, abs=5e-4)
    assert rb.a == 1.0
    assert rb.m2_bound == pytest.approx(3.0 * math.sqrt(100 * math.log(1100)))
    assert rb.bound_value > 0
    with pytest.raises(ValueError):
        regression_risk_bound(100, 1000, 0.0, 2.0, 1.0)
    with pytest.raises(ValueError):
        regression_risk_bound(100, 1000, 1.0, 2.0, 0.0)


def test_matrix_risk_bound_values():
    rb = matrix_risk_bound(50, 50, 1.0, 50.0, mc_reps=10)
    assert rb.s == pytest.approx(50 * 2 * math.sqrt(50) / 2500, rel=1e-12)
    assert rb.s == pytest.approx(0.28284, abs=1e-4)
    assert rb.a == pytest.approx(math.sqrt(50))
    assert rb.m2_bound > 0 and rb.m4_bound >= rb.m2_bound
    with pytest.raises(ValueError):
        matrix_risk_bound(50, 50, -1.0, 50.0)
    with pytest.raises(ValueError):
        matrix_risk_bound(50, 50, 1.0, -1.0)


def test_matrix_risk_bound_deterministic_default_sampler():
    a = matrix_risk_bound(10, 12, 1.0, 5.0, mc_reps=20)
    b = matrix_risk_bound(10, 12, 1.0, 5.0, mc_reps=20)
    assert a.m2_bound == b.m2_bound and a.m4_bound == b.m4_bound
