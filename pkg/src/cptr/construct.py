"""Daily variable construction.

From the aligned hourly/daily inputs this module derives, per day and
zone: the volume-weighted electricity price, average demand, generation-
weighted fuel cost, carbon emissions and intensity, the per-MWh carbon
cost, the price-fuel spread, and the log-difference transforms the
regressions consume. Undefined values (zero demand, zero fossil
generation, non-positive log arguments, gap days) propagate as NaN and
are excluded through the `valid` flag, never interpolated.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import ValidationError
from .ingest import FUELS, AlignedDataset, ParameterConfig, _parse_date, _read_rows

DAILY_HEADER = [
    "date", "pe", "d", "pf", "e", "i", "c", "s",
    "s_tilde", "c_tilde", "log_d", "phase4", "valid",
]

_FLOAT_COLS = DAILY_HEADER[1:11]


def volume_weighted_price(hour_prices, hour_demand) -> float:
    """Demand-share weighted mean of the hourly prices actually present.

    Returns NaN when total demand is zero (weights undefined).
    """
    p = np.asarray(hour_prices, dtype=float)
    d = np.asarray(hour_demand, dtype=float)
    if p.size == 0 or p.shape != d.shape:
        raise ValidationError("hourly prices and demand must be equal-length and non-empty")
    total = d.sum()
    if total <= 0:
        return math.nan
    return float((d / total) @ p)


def average_demand(hour_demand) -> float:
    """Mean hourly demand; the divisor is the true hour count (23/24/25 on DST days)."""
    d = np.asarray(hour_demand, dtype=float)
    if d.size == 0:
        raise ValidationError("empty day: no hourly demand records")
    return float(d.mean())


def fuel_cost(fuel_prices_eur_mwh: dict, generation: dict, heat_rates: dict) -> float:
    """Generation-weighted fuel cost, sum_j p_j G_j eta_j / sum_j G_j.

    Prices must already be converted to EUR per thermal MWh. Zero total
    fossil generation leaves the cost undefined (NaN).
    """
    total = sum(generation.values())
    if total <= 0:
        return math.nan
    num = sum(fuel_prices_eur_mwh[j] * generation[j] * heat_rates[j] for j in generation)
    return num / total


def carbon_emissions(generation: dict, config: ParameterConfig) -> float:
    """Emission-factor method: sum_j G_j * EF_j * O_j * M, in tCO2e."""
    for j, g in generation.items():
        if g < 0:
            raise ValidationError(f"negative generation for {j!r}: {g}")
    return sum(
        g * config.emission_factors[j] * config.oxidation_rates[j] * config.molecular_ratio
        for j, g in generation.items()
    )


def carbon_intensity(emissions: float, total_generation: float) -> float:
    """tCO2e per MWh of fossil generation; undefined (NaN) at zero generation."""
    if total_generation <= 0:
        return math.nan
    return emissions / total_generation


def carbon_cost(carbon_price: float, intensity: float) -> float:
    """Permit cost of one MWh: allowance price times carbon intensity."""
    return carbon_price * intensity


def switching_price(gas_cost: float, coal_cost: float,
                    intensity_coal: float, intensity_gas: float) -> float:
    """Carbon price at which coal- and gas-fired generation cost the same.

    (p_gas - p_coal) / (I_coal - I_gas); requires coal to be the dirtier
    technology (I_coal > I_gas). Coal stays cost-competitive exactly
    while the allowance price sits below this value.
    """
    if intensity_coal <= intensity_gas:
        raise ValidationError(
            f"switching price undefined: coal intensity {intensity_coal} must exceed "
            f"gas intensity {intensity_gas}"
        )
    return (gas_cost - coal_cost) / (intensity_coal - intensity_gas)


def coal_competitive(carbon_price: float, switch_price: float) -> bool:
    return carbon_price < switch_price


@dataclass
class DescStats:
    """Moment summary of one series; kurtosis is excess (normal = 0).

    Skewness g1 = m3 / m2^1.5 and excess kurtosis g2 = m4 / m2^2 - 3 use
    the biased central moments m_k = mean((x - mean)^k); the SD is the
    sample (n-1) standard deviation. Constant series, or fewer than 3
    observations, leave skewness/kurtosis as NaN.
    """

    count: int
    mean: float
    median: float
    sd: float
    max: float
    min: float
    skewness: float
    kurtosis: float


def describe(series) -> DescStats:
    x = np.asarray(series, dtype=float).ravel()
    x = x[np.isfinite(x)]
    if x.size < 2:
        raise ValidationError(f"need at least 2 observations to describe, got {x.size}")
    m2 = float(np.mean((x - x.mean()) ** 2))
    if x.size >= 3 and m2 > 0:
        m3 = float(np.mean((x - x.mean()) ** 3))
        m4 = float(np.mean((x - x.mean()) ** 4))
        skew = m3 / m2**1.5
        kurt = m4 / m2**2 - 3.0
    else:
        skew = math.nan
        kurt = math.nan
    return DescStats(
        count=int(x.size),
        mean=float(x.mean()),
        median=float(np.median(x)),
        sd=float(np.std(x, ddof=1)),
        max=float(x.max()),
        min=float(x.min()),
        skewness=skew,
        kurtosis=kurt,
    )


@dataclass
class DailySeries:
    """Constructed daily variables for one zone, on a contiguous calendar.

    Frame columns (indexed by date): pe, d, pf, e, i, c, s, s_tilde,
    c_tilde, log_d, phase4, valid. NaN marks undefined values; `valid`
    is True exactly where the row is usable as a regression observation
    (s_tilde, c_tilde and log_d all defined).
    """

    zone: str
    frame: pd.DataFrame

    def split(self, which: str, phase4_start: dt.date) -> pd.DataFrame:
        """Rows for 'full', 'phase3' (before phase4_start) or 'phase4'."""
        if which == "full":
            return self.frame
        dates = np.array([d.toordinal() for d in self.frame.index])
        cut = phase4_start.toordinal()
        if which == "phase3":
            return self.frame.loc[dates < cut]
        if which == "phase4":
            return self.frame.loc[dates >= cut]
        raise ValidationError(f"unknown split {which!r}; use full, phase3 or phase4")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(DAILY_HEADER)
            for date, row in self.frame.iterrows():
                out = [date.isoformat()]
                for col in _FLOAT_COLS:
                    v = row[col]
                    out.append("" if not math.isfinite(v) else repr(float(v)))
                out.append(int(row["phase4"]))
                out.append(int(row["valid"]))
                writer.writerow(out)

    @classmethod
    def from_csv(cls, path, zone: str) -> "DailySeries":
        dates = []
        rows = []
        for line_no, fields in _read_rows(path, DAILY_HEADER):
            dates.append(_parse_date(fields[0], path, line_no))
            vals = [math.nan if f == "" else float(f) for f in fields[1:11]]
            rows.append(vals + [int(fields[11]), fields[12] == "1"])
        if not dates:
            raise ValidationError(f"{path}: no data rows")
        frame = pd.DataFrame(
            rows, columns=_FLOAT_COLS + ["phase4", "valid"],
            index=pd.Index(dates, name="date", dtype=object),
        )
        frame["valid"] = frame["valid"].astype(bool)
        frame["phase4"] = frame["phase4"].astype(int)
        return cls(zone=zone, frame=frame)


def _safe_log(values: np.ndarray) -> np.ndarray:
    out = np.full(values.shape, np.nan)
    ok = np.isfinite(values) & (values > 0)
    out[ok] = np.log(values[ok])
    return out


def transform(frame: pd.DataFrame, phase4_start: dt.date) -> pd.DataFrame:
    """Populate s, s_tilde, c_tilde, log_d, phase4 and valid on a level frame.

    s_tilde is the day-on-day change of log(pe) - log(pf); c_tilde the
    change of log(c). Rows where any log argument is non-positive, or
    where the previous day is undefined (including gaps), come out NaN
    and are flagged invalid.
    """
    out = frame.copy()
    out["s"] = out["pe"] - out["pf"]

    log_ratio = _safe_log(out["pe"].to_numpy()) - _safe_log(out["pf"].to_numpy())
    log_c = _safe_log(out["c"].to_numpy())
    out["s_tilde"] = log_ratio - np.concatenate([[np.nan], log_ratio[:-1]])
    out["c_tilde"] = log_c - np.concatenate([[np.nan], log_c[:-1]])
    out["log_d"] = _safe_log(out["d"].to_numpy())

    cut = phase4_start.toordinal()
    out["phase4"] = np.array([int(d.toordinal() >= cut) for d in out.index])
    out["valid"] = (
        np.isfinite(out["s_tilde"]) & np.isfinite(out["c_tilde"]) & np.isfinite(out["log_d"])
    )
    return out


PRICE_BASES = ("volume_weighted", "daily_average")


def build_daily_series(aligned: AlignedDataset, config: ParameterConfig,
                       price_basis: str = "volume_weighted") -> DailySeries:
    """Aggregate the aligned hourly panel into the daily analysis frame.

    price_basis selects the daily price: demand-weighted average of the
    hourly prices (default), or the plain mean used by the robustness
    variant.
    """
    if price_basis not in PRICE_BASES:
        raise ValidationError(
            f"unknown price basis {price_basis!r}; use one of {', '.join(PRICE_BASES)}")
    daily = aligned.daily
    hourly = aligned.hourly

    agg = pd.DataFrame(index=daily.index)
    if len(hourly):
        h = hourly.assign(pxd=hourly["price_eur_mwh"] * hourly["demand_mwh"])
        grouped = h.groupby("date", sort=False).agg(
            pxd_sum=("pxd", "sum"),
            demand_sum=("demand_mwh", "sum"),
            demand_mean=("demand_mwh", "mean"),
            price_mean=("price_eur_mwh", "mean"),
            gen_coal=("gen_coal_mwh", "sum"),
            gen_oil=("gen_oil_mwh", "sum"),
            gen_gas=("gen_gas_mwh", "sum"),
        )
        agg = grouped.reindex(daily.index)
    else:
        for col in ("pxd_sum", "demand_sum", "demand_mean", "price_mean",
                    "gen_coal", "gen_oil", "gen_gas"):
            agg[col] = np.nan

    demand_sum = agg["demand_sum"].to_numpy(dtype=float)
    if price_basis == "daily_average":
        pe = agg["price_mean"].to_numpy(dtype=float)
    else:
        with np.errstate(invalid="ignore", divide="ignore"):
            pe = np.where(
                demand_sum > 0, agg["pxd_sum"].to_numpy(dtype=float) / demand_sum, np.nan)

    gen = {j: agg[f"gen_{j}"].to_numpy(dtype=float) for j in FUELS}
    total_gen = sum(gen.values())

    # Raw quotation units to EUR per thermal MWh, per config conversion.
    price = {
        "coal": daily["coal_eur_t"].to_numpy() / config.heat_content["coal"],
        "oil": daily["oil_eur_bbl"].to_numpy() / config.heat_content["oil"],
        "gas": daily["gas_eur_mwh"].to_numpy() / config.heat_content["gas"],
    }
    numerator = sum(price[j] * gen[j] * config.heat_rates[j] for j in FUELS)
    with np.errstate(invalid="ignore", divide="ignore"):
        pf = np.where(total_gen > 0, numerator / total_gen, np.nan)

    emissions = sum(
        gen[j] * config.emission_factors[j] * config.oxidation_rates[j] * config.molecular_ratio
        for j in FUELS
    )
    with np.errstate(invalid="ignore", divide="ignore"):
        intensity = np.where(total_gen > 0, emissions / total_gen, np.nan)
    cost = daily["eua_eur_tco2e"].to_numpy() * intensity

    frame = pd.DataFrame(
        {
            "pe": pe,
            "d": agg["demand_mean"].to_numpy(dtype=float),
            "pf": pf,
            "e": emissions,
            "i": intensity,
            "c": cost,
        },
        index=daily.index,
    )
    frame = transform(frame, config.phase4_start)
    return DailySeries(zone=aligned.zone, frame=frame[DAILY_HEADER[1:]])
