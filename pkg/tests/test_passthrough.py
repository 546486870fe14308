"""Pass-through design assembly, estimation and phase reporting."""

import datetime as dt
import math

import numpy as np
import pytest

from cptr.errors import ValidationError
from cptr.passthrough import (CptrSpec, build_design, fit_baseline,
                              fit_variants, phase_cptr)
from cptr.simulate import SimTruth, simulate_daily
from cptr.statcore import ModelFit

D = dt.date


def sim_series(n_days=400, seed=42):
    # Start half a year before the phase boundary so both phases appear
    # and the interaction column is not identically zero.
    return simulate_daily(SimTruth(), n_days=n_days, seed=seed,
                          start=D(2020, 7, 1))


class TestSpec:
    def test_defaults_and_column_names(self):
        spec = CptrSpec()
        assert spec.lags == (1, 2, 3, 4, 5, 7, 14, 21)
        assert spec.column_names == (
            ["beta0"] + [f"phi_{l}" for l in spec.lags] + ["beta1", "beta2", "beta3"])
        assert CptrSpec(demand_order=2).column_names[-1] == "beta4"
        assert CptrSpec(demand_order=3).column_names[-2:] == ["beta4", "beta5"]

    def test_validation(self):
        with pytest.raises(ValidationError, match="positive"):
            CptrSpec(lags=(0, 1))
        with pytest.raises(ValidationError, match="distinct"):
            CptrSpec(lags=(1, 2, 2))
        with pytest.raises(ValidationError, match="demand_order"):
            CptrSpec(demand_order=4)
        with pytest.raises(ValidationError, match="price_basis"):
            CptrSpec(price_basis="hourly")

    def test_from_dict(self):
        spec = CptrSpec.from_dict(
            {"lags": [1, 7], "demand_order": 2, "phase4_start": "2022-06-01"})
        assert spec.lags == (1, 7)
        assert spec.phase4_start == D(2022, 6, 1)
        with pytest.raises(ValidationError, match="unknown key"):
            CptrSpec.from_dict({"lag": [1]})
        with pytest.raises(ValidationError, match="ISO date"):
            CptrSpec.from_dict({"phase4_start": "June 2022"})

    def test_from_json_missing_file(self, tmp_path):
        with pytest.raises(ValidationError, match="not found"):
            CptrSpec.from_json(tmp_path / "spec.json")


class TestBuildDesign:
    def test_shape_and_lag_columns(self):
        data = sim_series(n_days=100)
        spec = CptrSpec()
        design = build_design(data, spec)
        assert design.X.shape == (79, 12)  # 100 days minus 21 lag rows
        assert design.columns == spec.column_names

        s = data.frame["s_tilde"].to_numpy()
        assert np.array_equal(design.y, s[21:])
        for j, lag in enumerate(spec.lags, start=1):
            assert np.array_equal(design.X[:, j], s[21 - lag : 100 - lag]), lag
        c = data.frame["c_tilde"].to_numpy()[21:]
        phase = np.array(
            [d >= spec.phase4_start for d in data.frame.index[21:]], dtype=float)
        assert np.array_equal(design.X[:, 9], c)
        assert np.array_equal(design.X[:, 10], c * phase)
        assert np.array_equal(design.X[:, 11], data.frame["log_d"].to_numpy()[21:])

    def test_bad_day_knocks_out_lag_touching_rows(self):
        data = sim_series(n_days=120)
        k = 60
        data.frame.iloc[k, data.frame.columns.get_loc("s_tilde")] = np.nan
        data.frame.iloc[k, data.frame.columns.get_loc("valid")] = False
        design = build_design(data, CptrSpec())
        # Row k itself, plus every row whose lag set reaches back to k.
        lost = {k} | {k + l for l in CptrSpec().lags}
        expected = [data.frame.index[i] for i in range(21, 120) if i not in lost]
        assert list(design.dates) == expected

    def test_centered_powers_same_fitted_values(self):
        # Centering the demand powers reparameterizes the same column
        # space, so fitted values match a raw-power regression.
        data = sim_series(n_days=300, seed=3)
        design = build_design(data, CptrSpec(demand_order=3))
        log_d = design.X[:, 11]
        raw = np.column_stack([design.X[:, :12], log_d**2, log_d**3])
        fitted_raw = raw @ np.linalg.lstsq(raw, design.y, rcond=None)[0]
        fitted_cen = design.X @ np.linalg.lstsq(design.X, design.y, rcond=None)[0]
        assert np.allclose(fitted_raw, fitted_cen, atol=1e-8)

    def test_non_contiguous_calendar_rejected(self):
        data = sim_series(n_days=100)
        data.frame.drop(index=data.frame.index[50], inplace=True)
        with pytest.raises(ValidationError, match="contiguous"):
            build_design(data, CptrSpec())

    def test_max_lag_and_sample_size_limits(self):
        with pytest.raises(ValidationError, match="max lag"):
            build_design(sim_series(n_days=20), CptrSpec())
        with pytest.raises(ValidationError, match="valid rows"):
            build_design(sim_series(n_days=60), CptrSpec())  # 39 rows < 12 + 30


class TestFitBaseline:
    def test_recovers_truth_loosely(self):
        truth = SimTruth()
        fit = fit_baseline(simulate_daily(truth, n_days=3288, seed=7))
        assert fit.vcov_hac is not None
        assert fit.hac_bandwidth == 8  # floor(4 * (3267/100)^(2/9))
        i1 = fit.index_of("beta1")
        i2 = fit.index_of("beta2")
        se = fit.se()
        assert abs(fit.coef[i1] - truth.beta1) < 4 * se[i1]
        assert abs(fit.coef[i2] - truth.beta2) < 4 * se[i2]

    def test_explicit_bandwidth_respected(self):
        fit = fit_baseline(sim_series(), hac_bandwidth=4)
        assert fit.hac_bandwidth == 4


def dummy_fit(b1, b2, v11, v22, c12):
    """ModelFit carrying only what the phase report reads."""
    columns = ["beta0", "beta1", "beta2"]
    coef = np.array([0.0, b1, b2])
    vcov = np.array([[1e-6, 0.0, 0.0], [0.0, v11, c12], [0.0, c12, v22]])
    fit = ModelFit(columns=columns, coef=coef, vcov_classical=vcov,
                   residuals=np.zeros(3), fitted=np.zeros(3), adj_r2_pct=0.0,
                   nobs=3, rss=0.0, sigma2=0.0, xtx_inv=np.eye(3))
    fit.vcov_hac = vcov
    fit.hac_bandwidth = 0
    return fit


class TestPhaseReport:
    def test_hand_case(self):
        report = phase_cptr(dummy_fit(0.2, 0.1, 0.04, 0.01, 0.01), zone="Z")
        assert report.cptr_phase3 == pytest.approx(0.2)
        assert report.se_phase3 == pytest.approx(0.2)
        assert report.cptr_phase4 == pytest.approx(0.3)
        # Var(b1+b2) = 0.04 + 0.01 + 2*0.01 = 0.07
        assert report.se_phase4 == pytest.approx(math.sqrt(0.07), rel=1e-12)
        assert report.pct_variation == pytest.approx(50.0)

    def test_zero_phase3_rate(self):
        report = phase_cptr(dummy_fit(0.0, 0.1, 0.01, 0.01, 0.0))
        assert math.isnan(report.pct_variation)

    def test_requires_hac(self):
        fit = dummy_fit(0.2, 0.1, 0.04, 0.01, 0.01)
        fit.vcov_hac = None
        with pytest.raises(ValidationError, match="HAC"):
            phase_cptr(fit)

    # Published zonal estimates: (b1, b2) -> phase-4 rate, percent change.
    @pytest.mark.parametrize("b1,b2,rate4,pct", [
        (0.32, -0.03, 0.29, -9.38),
        (0.17, 0.07, 0.24, 41.18),
        (0.18, 0.06, 0.24, 33.33),
        (0.20, -0.15, 0.05, -75.00),
        (0.41, -0.21, 0.20, -51.22),
        (0.12, 0.29, 0.41, 241.67),
    ])
    def test_phase4_arithmetic_matches_published_pairs(self, b1, b2, rate4, pct):
        report = phase_cptr(dummy_fit(b1, b2, 0.01, 0.01, 0.0))
        assert round(report.cptr_phase4, 2) == pytest.approx(rate4)
        # Published percentages are rounded at 2 dp (half-width 0.005).
        assert report.pct_variation == pytest.approx(pct, abs=0.006)


class TestVariants:
    def test_all_three_variants(self):
        data = sim_series(n_days=500, seed=9)
        fits = fit_variants(data, CptrSpec(), daily_average_data=data)
        assert set(fits) == {"daily_average", "quadratic", "cubic"}
        assert "beta4" in fits["quadratic"].columns
        assert "beta5" in fits["cubic"].columns
        assert "beta4" not in fits["daily_average"].columns
        for fit in fits.values():
            assert fit.vcov_hac is not None

    def test_daily_average_requires_its_series(self):
        data = sim_series(n_days=500, seed=9)
        with pytest.raises(ValidationError, match="daily_average"):
            fit_variants(data, CptrSpec(), variants=("daily_average",))

    def test_unknown_variant(self):
        data = sim_series(n_days=500, seed=9)
        with pytest.raises(ValidationError, match="unknown variant"):
            fit_variants(data, CptrSpec(), variants=("lasso",))
