"""Regression core checks against hand-worked and dense-algebra oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cptr.errors import NumericalError, ValidationError
from cptr.statcore import (DesignMatrix, acf_pacf, default_hac_bandwidth,
                           newey_west, ols_fit, significance_stars)


def random_design(rng, nobs, ncols):
    X = rng.standard_normal((nobs, ncols))
    X[:, 0] = 1.0
    beta = rng.standard_normal(ncols)
    y = X @ beta + rng.standard_normal(nobs)
    return DesignMatrix(X, y, [f"x{j}" for j in range(ncols)])


class TestMeanRegressionHandCase:
    # Intercept-only fit of y = (3, 1, 4, 0): beta = 2, e = (1, -1, 2, -2).
    # White meat: sum e^2 = 10, bread 1/4 each side -> 10/16.
    # Bartlett L=1: w1 = 1/2, meat = 10 + 2*(1/2)*(e1 e2 + e2 e3 + e3 e4)
    #             = 10 - 7 = 3 -> 3/16.
    def setup_method(self):
        self.design = DesignMatrix(np.ones((4, 1)), [3.0, 1.0, 4.0, 0.0], ["const"])
        self.fit = ols_fit(self.design)

    def test_coefficient_is_mean(self):
        assert self.fit.coef[0] == pytest.approx(2.0, abs=1e-14)

    def test_white_sandwich(self):
        vcov = newey_west(self.fit, self.design, bandwidth=0)
        assert vcov[0, 0] == pytest.approx(10.0 / 16.0, abs=1e-13)

    def test_bartlett_lag_one(self):
        vcov = newey_west(self.fit, self.design, bandwidth=1)
        assert vcov[0, 0] == pytest.approx(3.0 / 16.0, abs=1e-13)


def test_ols_matches_normal_equations_oracle():
    rng = np.random.default_rng(42)
    for _ in range(50):
        nobs = int(rng.integers(30, 200))
        ncols = int(rng.integers(2, 12))
        design = random_design(rng, nobs, ncols)
        fit = ols_fit(design)
        oracle = np.linalg.solve(design.X.T @ design.X, design.X.T @ design.y)
        scale = max(1.0, float(np.max(np.abs(oracle))))
        assert np.max(np.abs(fit.coef - oracle)) < 1e-8 * scale


def test_residual_orthogonality():
    rng = np.random.default_rng(7)
    for _ in range(50):
        design = random_design(rng, int(rng.integers(25, 150)), int(rng.integers(2, 8)))
        fit = ols_fit(design)
        assert np.max(np.abs(design.X.T @ fit.residuals)) < 1e-10 * design.nobs


def test_classical_vcov_is_sigma2_xtx_inv():
    rng = np.random.default_rng(3)
    design = random_design(rng, 120, 5)
    fit = ols_fit(design)
    oracle = fit.sigma2 * np.linalg.inv(design.X.T @ design.X)
    assert np.allclose(fit.vcov_classical, oracle, atol=1e-12)


def test_white_equals_manual_hc0():
    rng = np.random.default_rng(11)
    design = random_design(rng, 200, 4)
    fit = ols_fit(design)
    vcov = newey_west(fit, design, bandwidth=0)
    X = design.X
    meat = (X * fit.residuals[:, None] ** 2).T @ X
    bread = np.linalg.inv(X.T @ X)
    assert np.allclose(vcov, bread @ meat @ bread, atol=1e-14)


def test_hac_bandwidth_default_rule():
    # floor(4 * (T/100)^(2/9))
    assert default_hac_bandwidth(100) == 4
    assert default_hac_bandwidth(50) == 3
    assert default_hac_bandwidth(3266) == 8
    assert default_hac_bandwidth(2000) == 7


def test_hac_close_to_classical_under_iid():
    rng = np.random.default_rng(21)
    design = random_design(rng, 5000, 4)
    fit = ols_fit(design)
    newey_west(fit, design)
    ratio = fit.se(robust=True) / fit.se(robust=False)
    assert np.all(ratio > 0.9) and np.all(ratio < 1.1)


def test_rank_deficient_design_names_column():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((50, 3))
    X[:, 2] = 2.0 * X[:, 1]
    design = DesignMatrix(X, rng.standard_normal(50), ["a", "b", "c"])
    with pytest.raises(NumericalError, match="rank deficient"):
        ols_fit(design)


def test_bandwidth_validation():
    rng = np.random.default_rng(9)
    design = random_design(rng, 40, 2)
    fit = ols_fit(design)
    with pytest.raises(ValidationError):
        newey_west(fit, design, bandwidth=-1)
    with pytest.raises(ValidationError):
        newey_west(fit, design, bandwidth=40)


def test_stars_thresholds():
    assert significance_stars(0.009) == "**"
    assert significance_stars(0.01) == "**"
    assert significance_stars(0.0101) == "*"
    assert significance_stars(0.05) == "*"
    assert significance_stars(0.0501) == ""
    assert significance_stars(0.9) == ""


def test_se_before_hac_attachment_fails():
    rng = np.random.default_rng(1)
    fit = ols_fit(random_design(rng, 60, 3))
    with pytest.raises(ValidationError, match="HAC"):
        fit.se(robust=True)


def test_design_matrix_validation():
    with pytest.raises(ValidationError, match="rows"):
        DesignMatrix(np.ones((5, 1)), np.ones(4), ["c"])
    with pytest.raises(ValidationError, match="unique"):
        DesignMatrix(np.ones((5, 2)), np.ones(5), ["a", "a"])
    with pytest.raises(ValidationError, match="non-finite"):
        DesignMatrix(np.array([[1.0], [np.nan], [1.0]]), np.ones(3), ["c"])
    with pytest.raises(ValidationError, match="more observations"):
        DesignMatrix(np.ones((3, 3)), np.ones(3), ["a", "b", "c"])


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 31 - 1), st.integers(min_value=25, max_value=90))
def test_orthogonality_property(seed, nobs):
    rng = np.random.default_rng(seed)
    design = random_design(rng, nobs, 3)
    fit = ols_fit(design)
    assert np.max(np.abs(design.X.T @ fit.residuals)) < 1e-9 * nobs
    assert np.allclose(fit.fitted + fit.residuals, design.y, atol=1e-12)


def test_acf_pacf_against_statsmodels():
    sm_stattools = pytest.importorskip("statsmodels.tsa.stattools")
    rng = np.random.default_rng(17)
    x = np.empty(600)
    x[0] = rng.standard_normal()
    for t in range(1, 600):
        x[t] = 0.6 * x[t - 1] + rng.standard_normal()
    out = acf_pacf(x, 12)
    acf_o = sm_stattools.acf(x, nlags=12, fft=False)
    pacf_o = sm_stattools.pacf(x, nlags=12, method="ldb")
    assert np.allclose(out.acf, acf_o, atol=1e-10)
    assert np.allclose(out.pacf, pacf_o, atol=1e-8)
    assert out.conf_band == pytest.approx(1.96 / np.sqrt(600))


def test_acf_pacf_validation():
    with pytest.raises(ValidationError):
        acf_pacf(np.ones(50), 0)
    with pytest.raises(ValidationError):
        acf_pacf(np.arange(5.0), 10)
    with pytest.raises(NumericalError):
        acf_pacf(np.ones(50), 3)
