"""Input loading, validation, and calendar alignment.

Three delimited inputs (hourly market panel, daily fuel prices, daily
carbon allowance prices) plus a JSON parameter config are merged onto a
gap-flagged daily calendar. Daily fuel and carbon prices are forward-
filled onto non-trading days with provenance flags; hourly data are
never interpolated, and days without usable hourly records are flagged
as gaps for downstream dropping.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import ValidationError

FUELS = ("coal", "oil", "gas")

HOURLY_HEADER = [
    "zone", "timestamp", "price_eur_mwh", "demand_mwh",
    "gen_coal_mwh", "gen_oil_mwh", "gen_gas_mwh",
]
FUEL_HEADER = ["date", "coal_eur_t", "oil_eur_bbl", "gas_eur_mwh"]
CARBON_HEADER = ["date", "eua_eur_tco2e"]
ALIGNED_HEADER = [
    "zone", "date", "timestamp", "price_eur_mwh", "demand_mwh",
    "gen_coal_mwh", "gen_oil_mwh", "gen_gas_mwh",
    "coal_eur_t", "oil_eur_bbl", "gas_eur_mwh", "eua_eur_tco2e",
    "fuel_filled", "carbon_filled", "gap",
]

# 23 and 25 arise on DST transition days; anything else marks the day
# unusable (gap) rather than an ingest failure.
VALID_HOUR_COUNTS = {23, 24, 25}

DEFAULT_FILL_LIMIT_DAYS = 7
DEFAULT_PHASE4_START = dt.date(2021, 1, 1)

_MOLECULAR_RATIO = 44.0 / 12.0

_HOURLY_COLS = ["price_eur_mwh", "demand_mwh", "gen_coal_mwh", "gen_oil_mwh", "gen_gas_mwh"]


def _read_rows(path, expected_header: list[str]):
    """Yield (line_no, fields) after checking the header row."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"{path}: file not found")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        if header != expected_header:
            raise ValidationError(
                f"{path}: header mismatch: expected {','.join(expected_header)!r}, "
                f"got {','.join(header)!r}"
            )
        for line_no, fields in enumerate(reader, start=2):
            if not fields:
                continue
            if len(fields) != len(expected_header):
                raise ValidationError(
                    f"{path}: line {line_no}: expected {len(expected_header)} fields, "
                    f"got {len(fields)}"
                )
            yield line_no, fields


def _parse_float(text: str, path, line_no: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ValidationError(
            f"{path}: line {line_no}: column {column!r}: not a number: {text!r}"
        ) from None
    if not math.isfinite(value):
        raise ValidationError(
            f"{path}: line {line_no}: column {column!r}: non-finite value {text!r}"
        )
    return value


def _parse_timestamp(text: str, path, line_no: int) -> dt.datetime:
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    try:
        ts = dt.datetime.fromisoformat(raw)
    except ValueError:
        raise ValidationError(
            f"{path}: line {line_no}: unparseable timestamp {text!r}"
        ) from None
    if ts.tzinfo is None:
        raise ValidationError(
            f"{path}: line {line_no}: timestamp {text!r} lacks an explicit UTC offset"
        )
    return ts


def _parse_date(text: str, path, line_no: int) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise ValidationError(
            f"{path}: line {line_no}: unparseable date {text!r}"
        ) from None


@dataclass
class HourlyPanel:
    """Hourly price/demand/generation records for one zone.

    ``frame`` columns: ``timestamp`` (offset-aware datetime objects,
    strictly increasing), ``date`` (local calendar day of the
    timestamp), price, demand and one generation column per fossil
    fuel. DST days keep their native 23/25 hour counts.
    """

    zone: str
    frame: pd.DataFrame

    @property
    def first_date(self) -> dt.date:
        return self.frame["date"].iloc[0]

    @property
    def last_date(self) -> dt.date:
        return self.frame["date"].iloc[-1]


def load_hourly_panel(path, zone: str) -> HourlyPanel:
    """Parse and validate the hourly CSV, keeping rows for ``zone`` only.

    Exact duplicate records collapse silently; two records for the same
    hour with different values are an error. Demand and generation must
    be non-negative (prices may be negative).
    """
    records: dict[dt.datetime, tuple] = {}
    for line_no, fields in _read_rows(path, HOURLY_HEADER):
        if fields[0] != zone:
            continue
        ts = _parse_timestamp(fields[1], path, line_no)
        values = tuple(
            _parse_float(fields[i], path, line_no, HOURLY_HEADER[i])
            for i in range(2, 7)
        )
        for col_idx, col in enumerate(HOURLY_HEADER[3:7], start=1):
            if values[col_idx] < 0:
                raise ValidationError(
                    f"{path}: line {line_no}: negative {col}: {values[col_idx]}"
                )
        if ts in records:
            if records[ts] == values:
                continue
            raise ValidationError(
                f"{path}: line {line_no}: conflicting duplicate record for "
                f"zone {zone!r} at {ts.isoformat()}"
            )
        records[ts] = values

    if not records:
        raise ValidationError(f"{path}: no rows for zone {zone!r}")

    timestamps = sorted(records)
    data = np.array([records[ts] for ts in timestamps], dtype=float)
    frame = pd.DataFrame(data, columns=_HOURLY_COLS)
    frame.insert(0, "timestamp", pd.Series(timestamps, dtype=object))
    frame.insert(1, "date", pd.Series([ts.date() for ts in timestamps], dtype=object))
    return HourlyPanel(zone=zone, frame=frame)


@dataclass
class FuelPriceSeries:
    """Daily fuel prices in raw market units (coal EUR/t, oil EUR/bbl, gas EUR/MWh)."""

    frame: pd.DataFrame  # index: date objects, strictly increasing


@dataclass
class CarbonPriceSeries:
    """Daily carbon allowance settlement prices (EUR/tCO2e)."""

    frame: pd.DataFrame


def load_daily_series(path, kind: str):
    """Load a daily fuel or carbon price CSV with positivity/uniqueness checks."""
    if kind == "fuel":
        header = FUEL_HEADER
    elif kind == "carbon":
        header = CARBON_HEADER
    else:
        raise ValidationError(f"unknown daily series kind {kind!r}; use 'fuel' or 'carbon'")

    dates: list[dt.date] = []
    rows: list[list[float]] = []
    for line_no, fields in _read_rows(path, header):
        date = _parse_date(fields[0], path, line_no)
        values = []
        for i, col in enumerate(header[1:], start=1):
            v = _parse_float(fields[i], path, line_no, col)
            if v <= 0:
                raise ValidationError(
                    f"{path}: line {line_no}: non-positive {col} on {date.isoformat()}: {v}"
                )
            values.append(v)
        dates.append(date)
        rows.append(values)

    if not dates:
        raise ValidationError(f"{path}: no data rows")

    order = np.argsort([d.toordinal() for d in dates], kind="stable")
    dates = [dates[i] for i in order]
    rows = [rows[i] for i in order]
    for a, b in zip(dates, dates[1:]):
        if a == b:
            raise ValidationError(f"{path}: duplicate date {a.isoformat()}")

    frame = pd.DataFrame(rows, columns=header[1:], index=pd.Index(dates, name="date", dtype=object))
    return FuelPriceSeries(frame) if kind == "fuel" else CarbonPriceSeries(frame)


@dataclass(frozen=True)
class ParameterConfig:
    """Engineering constants the source data do not carry.

    heat_rates: energy input per unit electricity output, per fuel.
    heat_content: MWh of thermal energy per raw price unit (tonne for
        coal, barrel for oil); converts EUR/t and EUR/bbl quotes to
        EUR/MWh by division. Gas is quoted in EUR/MWh already, so its
        entry defaults to 1.
    emission_factors: tC per MWh of generation, per fuel.
    oxidation_rates: oxidised carbon fraction, per fuel, in (0, 1].
    molecular_ratio: CO2-to-C mass ratio, 44/12.
    phase4_start: first day of the later compliance phase.
    """

    heat_rates: dict[str, float]
    heat_content: dict[str, float]
    emission_factors: dict[str, float]
    oxidation_rates: dict[str, float]
    molecular_ratio: float
    phase4_start: dt.date

    def fuel_price_eur_mwh(self, coal_eur_t: float, oil_eur_bbl: float,
                           gas_eur_mwh: float) -> dict[str, float]:
        """Convert raw fuel quotes to EUR per thermal MWh."""
        return {
            "coal": coal_eur_t / self.heat_content["coal"],
            "oil": oil_eur_bbl / self.heat_content["oil"],
            "gas": gas_eur_mwh / self.heat_content["gas"],
        }


def _check_fuel_map(name: str, mapping, required=FUELS) -> dict[str, float]:
    if not isinstance(mapping, dict):
        raise ValidationError(f"config key {name!r} must be an object mapping fuel to number")
    unknown = set(mapping) - set(FUELS)
    if unknown:
        raise ValidationError(f"config {name!r}: unknown fuel(s) {sorted(unknown)}")
    missing = set(required) - set(mapping)
    if missing:
        raise ValidationError(f"config {name!r}: missing fuel(s) {sorted(missing)}")
    out = {}
    for fuel, value in mapping.items():
        try:
            out[fuel] = float(value)
        except (TypeError, ValueError):
            raise ValidationError(f"config {name!r}[{fuel!r}]: not a number: {value!r}") from None
    return out


def load_config(path) -> ParameterConfig:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"{path}: config file not found")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ValidationError(f"{path}: config root must be a JSON object")
    return config_from_dict(raw, source=str(path))


def config_from_dict(raw: dict, source: str = "config") -> ParameterConfig:
    for key in ("heat_rates", "heat_content", "emission_factors", "oxidation_rates",
                "molecular_ratio"):
        if key not in raw:
            raise ValidationError(f"{source}: missing required key {key!r}")
    known = {"heat_rates", "heat_content", "emission_factors", "oxidation_rates",
             "molecular_ratio", "phase4_start"}
    # Keys starting with "_" are annotations (provenance notes) and are ignored.
    unknown = {k for k in set(raw) - known if not k.startswith("_")}
    if unknown:
        raise ValidationError(f"{source}: unknown key(s) {sorted(unknown)}")

    heat_rates = _check_fuel_map("heat_rates", raw["heat_rates"])
    heat_content = _check_fuel_map("heat_content", raw["heat_content"], required=("coal", "oil"))
    heat_content.setdefault("gas", 1.0)
    emission_factors = _check_fuel_map("emission_factors", raw["emission_factors"])
    oxidation_rates = _check_fuel_map("oxidation_rates", raw["oxidation_rates"])

    for fuel, v in heat_rates.items():
        if v <= 0:
            raise ValidationError(f"{source}: heat_rates[{fuel!r}] must be > 0, got {v}")
    for fuel, v in heat_content.items():
        if v <= 0:
            raise ValidationError(f"{source}: heat_content[{fuel!r}] must be > 0, got {v}")
    for fuel, v in emission_factors.items():
        if v <= 0:
            raise ValidationError(f"{source}: emission_factors[{fuel!r}] must be > 0, got {v}")
    for fuel, v in oxidation_rates.items():
        if not 0 < v <= 1:
            raise ValidationError(f"{source}: oxidation_rates[{fuel!r}] must be in (0, 1], got {v}")

    try:
        molecular_ratio = float(raw["molecular_ratio"])
    except (TypeError, ValueError):
        raise ValidationError(f"{source}: molecular_ratio is not a number") from None
    if abs(molecular_ratio - _MOLECULAR_RATIO) > 5e-5:
        raise ValidationError(
            f"{source}: molecular_ratio must equal 44/12 = 3.6667 to 4 decimals, "
            f"got {molecular_ratio}"
        )

    if "phase4_start" in raw:
        try:
            phase4_start = dt.date.fromisoformat(str(raw["phase4_start"]))
        except ValueError:
            raise ValidationError(
                f"{source}: phase4_start is not an ISO date: {raw['phase4_start']!r}"
            ) from None
    else:
        phase4_start = DEFAULT_PHASE4_START

    return ParameterConfig(
        heat_rates=heat_rates,
        heat_content=heat_content,
        emission_factors=emission_factors,
        oxidation_rates=oxidation_rates,
        molecular_ratio=molecular_ratio,
        phase4_start=phase4_start,
    )


@dataclass
class AlignedDataset:
    """One zone's inputs merged onto a contiguous daily calendar.

    ``daily`` is indexed by date and carries the forward-filled fuel and
    carbon prices, their `filled` provenance flags, and the `gap` flag
    marking days without a usable hourly record set. ``hourly`` holds
    the raw hourly rows for non-gap days only.
    """

    zone: str
    daily: pd.DataFrame
    hourly: pd.DataFrame

    @property
    def start(self) -> dt.date:
        return self.daily.index[0]

    @property
    def end(self) -> dt.date:
        return self.daily.index[-1]

    def to_csv(self, path) -> None:
        """Write the documented flat schema; see ``AlignedDataset.from_csv``.

        Non-gap days emit one row per hour; gap days emit a single row
        with the hourly fields left empty. Floats use shortest
        round-trip formatting, so load(write(x)) == x field-for-field.
        """
        hourly_by_date = {d: g for d, g in self.hourly.groupby("date", sort=False)}
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(ALIGNED_HEADER)
            for date, day in self.daily.iterrows():
                daily_part = [
                    repr(float(day["coal_eur_t"])), repr(float(day["oil_eur_bbl"])),
                    repr(float(day["gas_eur_mwh"])), repr(float(day["eua_eur_tco2e"])),
                    int(day["fuel_filled"]), int(day["carbon_filled"]),
                    int(day["gap"]),
                ]
                if day["gap"]:
                    writer.writerow([self.zone, date.isoformat(), "", "", "", "", "", ""]
                                    + daily_part)
                    continue
                block = hourly_by_date[date]
                for row in block.itertuples(index=False):
                    writer.writerow(
                        [self.zone, date.isoformat(), row.timestamp.isoformat(),
                         repr(row.price_eur_mwh), repr(row.demand_mwh),
                         repr(row.gen_coal_mwh), repr(row.gen_oil_mwh),
                         repr(row.gen_gas_mwh)]
                        + daily_part
                    )

    @classmethod
    def from_csv(cls, path) -> "AlignedDataset":
        zone = None
        daily_rows: dict[dt.date, list] = {}
        hourly_rows = []
        for line_no, fields in _read_rows(path, ALIGNED_HEADER):
            if zone is None:
                zone = fields[0]
            elif fields[0] != zone:
                raise ValidationError(
                    f"{path}: line {line_no}: multiple zones in one aligned file "
                    f"({zone!r} and {fields[0]!r})"
                )
            date = _parse_date(fields[1], path, line_no)
            daily_part = [
                _parse_float(fields[8], path, line_no, "coal_eur_t"),
                _parse_float(fields[9], path, line_no, "oil_eur_bbl"),
                _parse_float(fields[10], path, line_no, "gas_eur_mwh"),
                _parse_float(fields[11], path, line_no, "eua_eur_tco2e"),
                fields[12] == "1", fields[13] == "1", fields[14] == "1",
            ]
            if date in daily_rows:
                if daily_rows[date] != daily_part:
                    raise ValidationError(
                        f"{path}: line {line_no}: inconsistent daily fields on {date.isoformat()}"
                    )
            else:
                daily_rows[date] = daily_part
            if not daily_part[-1]:
                hourly_rows.append((
                    date,
                    _parse_timestamp(fields[2], path, line_no),
                    _parse_float(fields[3], path, line_no, "price_eur_mwh"),
                    _parse_float(fields[4], path, line_no, "demand_mwh"),
                    _parse_float(fields[5], path, line_no, "gen_coal_mwh"),
                    _parse_float(fields[6], path, line_no, "gen_oil_mwh"),
                    _parse_float(fields[7], path, line_no, "gen_gas_mwh"),
                ))
        if zone is None:
            raise ValidationError(f"{path}: no data rows")

        dates = sorted(daily_rows)
        daily = pd.DataFrame(
            [daily_rows[d] for d in dates],
            columns=["coal_eur_t", "oil_eur_bbl", "gas_eur_mwh", "eua_eur_tco2e",
                     "fuel_filled", "carbon_filled", "gap"],
            index=pd.Index(dates, name="date", dtype=object),
        )
        hourly = pd.DataFrame(
            hourly_rows,
            columns=["date", "timestamp"] + _HOURLY_COLS,
        )
        for col in ("date", "timestamp"):
            hourly[col] = hourly[col].astype(object)
        return cls(zone=zone, daily=daily, hourly=hourly)


def _forward_fill(series_frame: pd.DataFrame, days: list[dt.date], limit: int, label: str):
    """Last-observation-carried-forward with a hard gap cap."""
    obs_dates = np.array([d.toordinal() for d in series_frame.index])
    values = series_frame.to_numpy(dtype=float)
    out = np.empty((len(days), values.shape[1]))
    filled = np.zeros(len(days), dtype=bool)
    for i, day in enumerate(days):
        pos = int(np.searchsorted(obs_dates, day.toordinal(), side="right")) - 1
        if pos < 0:
            raise ValidationError(
                f"{label} series has no observation on or before {day.isoformat()}; "
                "cannot forward-fill"
            )
        age = day.toordinal() - obs_dates[pos]
        if age > limit:
            raise ValidationError(
                f"{label} forward-fill gap of {age} days ending {day.isoformat()} "
                f"exceeds the {limit}-day limit"
            )
        out[i] = values[pos]
        filled[i] = age > 0
    return out, filled


def align_calendar(panel: HourlyPanel, fuels: FuelPriceSeries, carbon: CarbonPriceSeries,
                   config: ParameterConfig, start: dt.date, end: dt.date,
                   fill_limit_days: int = DEFAULT_FILL_LIMIT_DAYS) -> AlignedDataset:
    """Merge the inputs onto the [start, end] daily calendar.

    Days whose hourly record count is not a legal 23/24/25 are flagged
    as gaps (their hourly rows are dropped); fuel and carbon prices are
    forward-filled up to ``fill_limit_days``, beyond which alignment
    fails rather than fabricating stale prices.
    """
    if start > end:
        raise ValidationError(f"window start {start} is after end {end}")
    earliest = min(panel.first_date, fuels.frame.index[0], carbon.frame.index[0])
    if start < earliest:
        raise ValidationError(
            f"window start {start.isoformat()} precedes all inputs (earliest data "
            f"{earliest.isoformat()})"
        )

    days = [start + dt.timedelta(days=i) for i in range((end - start).days + 1)]

    fuel_vals, fuel_filled = _forward_fill(fuels.frame, days, fill_limit_days, "fuel")
    carbon_vals, carbon_filled = _forward_fill(carbon.frame, days, fill_limit_days, "carbon")

    counts = panel.frame.groupby("date", sort=False).size()
    usable = {d for d, n in counts.items() if n in VALID_HOUR_COUNTS}
    gap = np.array([d not in usable for d in days], dtype=bool)

    daily = pd.DataFrame(
        np.hstack([fuel_vals, carbon_vals]),
        columns=["coal_eur_t", "oil_eur_bbl", "gas_eur_mwh", "eua_eur_tco2e"],
        index=pd.Index(days, name="date", dtype=object),
    )
    daily["fuel_filled"] = fuel_filled
    daily["carbon_filled"] = carbon_filled
    daily["gap"] = gap

    keep = panel.frame["date"].map(lambda d: d in usable and start <= d <= end)
    hourly = panel.frame.loc[keep.to_numpy()].reset_index(drop=True)
    return AlignedDataset(zone=panel.zone, daily=daily, hourly=hourly)
