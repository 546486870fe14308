"""Synthetic data generation for estimator validation.

Two entry points share one generating process. ``simulate_daily``
produces a regression-ready daily series directly (fast path for Monte
Carlo studies); ``simulate_inputs`` realises the same series as raw
hourly/fuel/carbon CSV inputs so the whole ingest-construct-fit pipeline
can run end to end on data with known coefficients.

The process: log demand carries annual and weekly sinusoids plus noise,
the carbon-cost log-difference is Gaussian, and the spread change
follows the autoregressive pass-through equation with user-set
coefficients and Gaussian innovations, initialised by a burn-in.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .construct import DAILY_HEADER, DailySeries
from .errors import ValidationError
from .ingest import (CARBON_HEADER, DEFAULT_PHASE4_START, FUEL_HEADER,
                     HOURLY_HEADER, ParameterConfig)
from .passthrough import CptrSpec

# Coefficient defaults for the generator (aggregate-market magnitudes).
DEFAULT_PHIS = {1: -0.38, 2: -0.28, 3: -0.22, 4: -0.16, 5: -0.12,
                7: 0.04, 14: 0.05, 21: 0.09}

DEFAULT_START = dt.date(2016, 1, 1)
DEFAULT_N_DAYS = 3288
_BURN_IN = 200

# Level anchors for the simulated series.
_FUEL_COST_LEVEL = 50.0
_PRICE_LEVEL = 60.0
_CARBON_COST_LEVEL = 20.0
_LOG_DEMAND_MEAN = 10.33
_HOURLY_GAS_MWH = 10_000.0
_COAL_QUOTE = 100.0
_OIL_QUOTE = 70.0

EXAMPLE_CONFIG = {
    "_provenance": {
        "heat_rates": "six-year national average heat inputs per MWh generated, "
                      "national inventory style",
        "heat_content": "standard energy-content conversions: tonne of steam coal "
                        "~6.978 MWh thermal, barrel of crude ~1.7 MWh thermal; gas "
                        "quoted in EUR/MWh already",
        "emission_factors": "national inventory emission factors, tC per MWh generated",
        "oxidation_rates": "inventory default oxidised-carbon fractions",
        "molecular_ratio": "CO2-to-C molecular mass ratio 44/12",
        "phase4_start": "current compliance phase start date",
    },
    "heat_rates": {"coal": 2.63, "oil": 2.78, "gas": 1.96},
    "heat_content": {"coal": 6.978, "oil": 1.7, "gas": 1.0},
    "emission_factors": {"coal": 0.25, "oil": 0.20, "gas": 0.101},
    "oxidation_rates": {"coal": 0.98, "oil": 0.99, "gas": 0.995},
    "molecular_ratio": 3.6667,
    "phase4_start": "2021-01-01",
}


@dataclass(frozen=True)
class SimTruth:
    """True coefficients of the generating equation."""

    beta0: float = -1.86
    phis: dict[int, float] = field(default_factory=lambda: dict(DEFAULT_PHIS))
    beta1: float = 0.32
    beta2: float = -0.03
    beta3: float = 0.18
    noise_sd: float = 0.12

    def spec(self) -> CptrSpec:
        return CptrSpec(lags=tuple(sorted(self.phis)))

    def coefficient_vector(self) -> np.ndarray:
        """Truth in the design's column order (beta0, phis, beta1, beta2, beta3)."""
        phis = [self.phis[l] for l in sorted(self.phis)]
        return np.array([self.beta0, *phis, self.beta1, self.beta2, self.beta3])

    def to_dict(self) -> dict:
        return {
            "beta0": self.beta0,
            "phis": {str(l): v for l, v in sorted(self.phis.items())},
            "beta1": self.beta1,
            "beta2": self.beta2,
            "beta3": self.beta3,
            "noise_sd": self.noise_sd,
        }

    @classmethod
    def from_dict(cls, raw: dict, source: str = "truth") -> "SimTruth":
        known = {"beta0", "phis", "beta1", "beta2", "beta3", "noise_sd"}
        unknown = {k for k in set(raw) - known if not k.startswith("_")}
        if unknown:
            raise ValidationError(f"{source}: unknown key(s) {sorted(unknown)}")
        kwargs = {}
        for key in ("beta0", "beta1", "beta2", "beta3", "noise_sd"):
            if key in raw:
                kwargs[key] = float(raw[key])
        if "phis" in raw:
            try:
                kwargs["phis"] = {int(l): float(v) for l, v in raw["phis"].items()}
            except (TypeError, ValueError, AttributeError):
                raise ValidationError(f"{source}: phis must map lag to coefficient") from None
        truth = cls(**kwargs)
        if truth.noise_sd <= 0:
            raise ValidationError(f"{source}: noise_sd must be positive")
        if not truth.phis or any(l <= 0 for l in truth.phis):
            raise ValidationError(f"{source}: lags must be positive integers")
        return truth


def simulate_daily(truth: SimTruth, n_days: int = DEFAULT_N_DAYS, seed: int | None = None,
                   start: dt.date = DEFAULT_START,
                   phase4_start: dt.date = DEFAULT_PHASE4_START,
                   zone: str = "SIM", burn_in: int = _BURN_IN) -> DailySeries:
    """Draw one synthetic daily series with every row valid.

    The burn-in prepends extra days before ``start`` so the
    autoregression reaches its stationary regime before the kept sample
    begins.
    """
    if seed is None:
        raise ValidationError("simulation requires an explicit seed")
    if n_days < 2:
        raise ValidationError("n_days must be at least 2")
    rng = np.random.default_rng(int(seed))
    total = n_days + burn_in
    first = start - dt.timedelta(days=burn_in)
    dates = [first + dt.timedelta(days=i) for i in range(total)]

    doy = np.array([d.timetuple().tm_yday for d in dates], dtype=float)
    idx = np.arange(total, dtype=float)
    log_d = (
        _LOG_DEMAND_MEAN
        + 0.10 * np.sin(2.0 * np.pi * doy / 365.25)
        + 0.05 * np.sin(2.0 * np.pi * idx / 7.0)
        + 0.05 * rng.standard_normal(total)
    )
    c_tilde = 0.05 * rng.standard_normal(total)
    cut = phase4_start.toordinal()
    phase = np.array([1.0 if d.toordinal() >= cut else 0.0 for d in dates])
    eps = truth.noise_sd * rng.standard_normal(total)

    lags = sorted(truth.phis)
    s = np.zeros(total)
    for t in range(total):
        acc = truth.beta0 + truth.beta1 * c_tilde[t] + truth.beta2 * c_tilde[t] * phase[t]
        acc += truth.beta3 * log_d[t]
        for lag in lags:
            if t - lag >= 0:
                acc += truth.phis[lag] * s[t - lag]
        s[t] = acc + eps[t]

    keep = slice(burn_in, total)
    s_k = s[keep]
    c_k = c_tilde[keep]
    ld_k = log_d[keep]
    phase_k = phase[keep].astype(int)
    dates_k = dates[keep]

    # Levels consistent with the transforms: constant fuel cost, prices
    # and carbon costs exponentiated from the cumulated differences.
    cum_s = np.cumsum(s_k)
    pe = _PRICE_LEVEL * np.exp(cum_s - s_k[0])
    pf = np.full(n_days, _FUEL_COST_LEVEL)
    cum_c = np.cumsum(c_k)
    c_level = _CARBON_COST_LEVEL * np.exp(cum_c - c_k[0])

    frame = pd.DataFrame(
        {
            "pe": pe,
            "d": np.exp(ld_k),
            "pf": pf,
            "e": np.nan,
            "i": np.nan,
            "c": c_level,
            "s": pe - pf,
            "s_tilde": s_k,
            "c_tilde": c_k,
            "log_d": ld_k,
            "phase4": phase_k,
            "valid": True,
        },
        index=pd.Index(dates_k, name="date", dtype=object),
    )
    return DailySeries(zone=zone, frame=frame[DAILY_HEADER[1:]])


def simulate_inputs(truth: SimTruth, config: ParameterConfig, out_dir,
                    n_days: int = DEFAULT_N_DAYS, seed: int | None = None,
                    start: dt.date = DEFAULT_START, zone: str = "SIM") -> dict[str, str]:
    """Realise the synthetic series as raw pipeline input CSVs.

    Hourly prices and demand are constant within each day (so any daily
    price basis recovers them exactly) and generation is gas-only, which
    makes the carbon-cost path invertible into an allowance price.
    Returns {role: path} for hourly, fuel and carbon files.
    """
    out_dir = Path(out_dir)
    series = simulate_daily(truth, n_days=n_days, seed=seed, start=start,
                            phase4_start=config.phase4_start, zone=zone)
    frame = series.frame

    gas_quote = _FUEL_COST_LEVEL * config.heat_content["gas"] / config.heat_rates["gas"]
    intensity_gas = (config.emission_factors["gas"] * config.oxidation_rates["gas"]
                     * config.molecular_ratio)
    eua = frame["c"].to_numpy() / intensity_gas

    out = {}
    hourly_path = str(out_dir / "hourly.csv")
    with open(hourly_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(HOURLY_HEADER)
        for date, row in frame.iterrows():
            price = repr(float(row["pe"]))
            demand = repr(float(row["d"]))
            day = date.isoformat()
            for hour in range(24):
                writer.writerow([
                    zone, f"{day}T{hour:02d}:00:00+01:00", price, demand,
                    "0.0", "0.0", repr(_HOURLY_GAS_MWH),
                ])
    out["hourly"] = hourly_path

    fuel_path = str(out_dir / "fuel.csv")
    with open(fuel_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(FUEL_HEADER)
        for date in frame.index:
            writer.writerow([date.isoformat(), repr(_COAL_QUOTE), repr(_OIL_QUOTE),
                             repr(float(gas_quote))])
    out["fuel"] = fuel_path

    carbon_path = str(out_dir / "carbon.csv")
    with open(carbon_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CARBON_HEADER)
        for date, value in zip(frame.index, eua):
            writer.writerow([date.isoformat(), repr(float(value))])
    out["carbon"] = carbon_path
    return out
