"""Input parsing, validation and calendar alignment."""

import datetime as dt

import numpy as np
import pytest

from cptr.errors import ValidationError
from cptr.ingest import (AlignedDataset, align_calendar, config_from_dict,
                         load_config, load_daily_series, load_hourly_panel)
from cptr.simulate import EXAMPLE_CONFIG

D = dt.date


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def hourly_csv(tmp_path, days, zone="Z1", hours=24, name="hourly.csv"):
    lines = ["zone,timestamp,price_eur_mwh,demand_mwh,gen_coal_mwh,gen_oil_mwh,gen_gas_mwh"]
    for day in days:
        for h in range(hours):
            lines.append(f"{zone},{day.isoformat()}T{h:02d}:00:00+01:00,"
                         f"50.0,1000.0,10.0,5.0,20.0")
    return write(tmp_path / name, "\n".join(lines) + "\n")


def fuel_csv(tmp_path, days, name="fuel.csv"):
    lines = ["date,coal_eur_t,oil_eur_bbl,gas_eur_mwh"]
    for day in days:
        lines.append(f"{day.isoformat()},100.0,70.0,25.0")
    return write(tmp_path / name, "\n".join(lines) + "\n")


def carbon_csv(tmp_path, days, name="carbon.csv"):
    lines = ["date,eua_eur_tco2e"]
    for day in days:
        lines.append(f"{day.isoformat()},60.0")
    return write(tmp_path / name, "\n".join(lines) + "\n")


def example_config():
    return config_from_dict(EXAMPLE_CONFIG)


class TestHourlyPanel:
    def test_loads_and_filters_zone(self, tmp_path):
        days = [D(2021, 3, 1), D(2021, 3, 2)]
        path = hourly_csv(tmp_path, days)
        with open(path, "a", encoding="utf-8") as fh:
            fh.write("OTHER,2021-03-01T00:00:00+01:00,1.0,1.0,0.0,0.0,0.0\n")
        panel = load_hourly_panel(path, "Z1")
        assert len(panel.frame) == 48
        assert panel.first_date == days[0]
        assert panel.last_date == days[1]

    def test_exact_duplicates_collapse(self, tmp_path):
        path = hourly_csv(tmp_path, [D(2021, 3, 1)])
        line = "Z1,2021-03-01T05:00:00+01:00,50.0,1000.0,10.0,5.0,20.0\n"
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(line)
        panel = load_hourly_panel(path, "Z1")
        assert len(panel.frame) == 24

    def test_conflicting_duplicate_rejected(self, tmp_path):
        path = hourly_csv(tmp_path, [D(2021, 3, 1)])
        with open(path, "a", encoding="utf-8") as fh:
            fh.write("Z1,2021-03-01T05:00:00+01:00,51.0,1000.0,10.0,5.0,20.0\n")
        with pytest.raises(ValidationError, match="conflicting duplicate"):
            load_hourly_panel(path, "Z1")

    def test_negative_demand_rejected(self, tmp_path):
        path = write(tmp_path / "h.csv",
                     "zone,timestamp,price_eur_mwh,demand_mwh,gen_coal_mwh,"
                     "gen_oil_mwh,gen_gas_mwh\n"
                     "Z1,2021-03-01T00:00:00+01:00,50.0,-1.0,0.0,0.0,0.0\n")
        with pytest.raises(ValidationError, match="negative demand_mwh"):
            load_hourly_panel(path, "Z1")

    def test_negative_price_allowed(self, tmp_path):
        path = write(tmp_path / "h.csv",
                     "zone,timestamp,price_eur_mwh,demand_mwh,gen_coal_mwh,"
                     "gen_oil_mwh,gen_gas_mwh\n"
                     "Z1,2021-03-01T00:00:00+01:00,-12.5,10.0,0.0,0.0,0.0\n")
        panel = load_hourly_panel(path, "Z1")
        assert panel.frame["price_eur_mwh"].iloc[0] == -12.5

    def test_unknown_zone_fails(self, tmp_path):
        path = hourly_csv(tmp_path, [D(2021, 3, 1)])
        with pytest.raises(ValidationError, match="no rows"):
            load_hourly_panel(path, "NOPE")

    def test_bad_header_fails(self, tmp_path):
        path = write(tmp_path / "h.csv", "a,b\n1,2\n")
        with pytest.raises(ValidationError):
            load_hourly_panel(path, "Z1")


class TestDailySeries:
    def test_fuel_sorted_and_typed(self, tmp_path):
        path = write(tmp_path / "f.csv",
                     "date,coal_eur_t,oil_eur_bbl,gas_eur_mwh\n"
                     "2021-01-02,101.0,71.0,26.0\n"
                     "2021-01-01,100.0,70.0,25.0\n")
        series = load_daily_series(path, "fuel")
        assert list(series.frame.index) == [D(2021, 1, 1), D(2021, 1, 2)]
        assert series.frame["coal_eur_t"].tolist() == [100.0, 101.0]

    def test_duplicate_date_rejected(self, tmp_path):
        path = write(tmp_path / "c.csv",
                     "date,eua_eur_tco2e\n2021-01-01,60.0\n2021-01-01,61.0\n")
        with pytest.raises(ValidationError, match="duplicate date"):
            load_daily_series(path, "carbon")

    def test_non_positive_price_rejected(self, tmp_path):
        path = write(tmp_path / "c.csv", "date,eua_eur_tco2e\n2021-01-01,0.0\n")
        with pytest.raises(ValidationError, match="non-positive"):
            load_daily_series(path, "carbon")

    def test_unknown_kind(self, tmp_path):
        path = carbon_csv(tmp_path, [D(2021, 1, 1)])
        with pytest.raises(ValidationError, match="kind"):
            load_daily_series(path, "weather")


class TestConfig:
    def test_example_config_parses(self):
        config = example_config()
        assert config.phase4_start == D(2021, 1, 1)
        assert config.molecular_ratio == pytest.approx(44.0 / 12.0, abs=5e-5)
        # Underscore-prefixed annotation keys are ignored, not errors.
        assert "_provenance" in EXAMPLE_CONFIG

    def test_gas_heat_content_defaults_to_one(self):
        raw = {k: v for k, v in EXAMPLE_CONFIG.items() if not k.startswith("_")}
        raw["heat_content"] = {"coal": 6.978, "oil": 1.7}
        assert config_from_dict(raw).heat_content["gas"] == 1.0

    def test_fuel_price_conversion(self):
        config = example_config()
        prices = config.fuel_price_eur_mwh(coal_eur_t=69.78, oil_eur_bbl=85.0,
                                           gas_eur_mwh=30.0)
        assert prices["coal"] == pytest.approx(10.0)
        assert prices["oil"] == pytest.approx(50.0)
        assert prices["gas"] == 30.0

    def test_molecular_ratio_must_be_co2_carbon(self):
        raw = {k: v for k, v in EXAMPLE_CONFIG.items() if not k.startswith("_")}
        raw["molecular_ratio"] = 3.0
        with pytest.raises(ValidationError, match="44/12"):
            config_from_dict(raw)

    def test_missing_fuel_rejected(self):
        raw = {k: v for k, v in EXAMPLE_CONFIG.items() if not k.startswith("_")}
        raw["heat_rates"] = {"coal": 2.63, "oil": 2.78}
        with pytest.raises(ValidationError, match="missing fuel"):
            config_from_dict(raw)

    def test_oxidation_rate_range(self):
        raw = {k: v for k, v in EXAMPLE_CONFIG.items() if not k.startswith("_")}
        raw["oxidation_rates"] = {"coal": 1.5, "oil": 0.99, "gas": 0.995}
        with pytest.raises(ValidationError, match="oxidation"):
            config_from_dict(raw)

    def test_unknown_key_rejected(self):
        raw = {k: v for k, v in EXAMPLE_CONFIG.items() if not k.startswith("_")}
        raw["frobnicate"] = 1
        with pytest.raises(ValidationError, match="unknown key"):
            config_from_dict(raw)

    def test_config_file_not_found(self, tmp_path):
        with pytest.raises(ValidationError, match="not found"):
            load_config(tmp_path / "missing.json")


class TestAlignCalendar:
    def make(self, tmp_path, hourly_days, fuel_days, carbon_days, **kwargs):
        panel = load_hourly_panel(hourly_csv(tmp_path, hourly_days), "Z1")
        fuels = load_daily_series(fuel_csv(tmp_path, fuel_days), "fuel")
        carbon = load_daily_series(carbon_csv(tmp_path, carbon_days), "carbon")
        return align_calendar(panel, fuels, carbon, example_config(), **kwargs)

    def test_forward_fill_flags_and_values(self, tmp_path):
        days = [D(2021, 3, 1) + dt.timedelta(days=i) for i in range(5)]
        # Fuel quotes missing on the 3rd and 4th day: carried forward.
        aligned = self.make(tmp_path, days, [days[0], days[1], days[4]], days,
                            start=days[0], end=days[-1])
        assert aligned.daily["fuel_filled"].tolist() == [False, False, True, True, False]
        assert aligned.daily["carbon_filled"].tolist() == [False] * 5
        assert aligned.daily["coal_eur_t"].tolist() == [100.0] * 5
        assert not aligned.daily["gap"].any()

    def test_fill_limit_enforced(self, tmp_path):
        days = [D(2021, 3, 1) + dt.timedelta(days=i) for i in range(10)]
        with pytest.raises(ValidationError, match="forward-fill gap"):
            self.make(tmp_path, days, [days[0]], days,
                      start=days[0], end=days[-1], fill_limit_days=7)

    def test_no_observation_before_window(self, tmp_path):
        days = [D(2021, 3, 1), D(2021, 3, 2)]
        with pytest.raises(ValidationError, match="precedes all inputs"):
            self.make(tmp_path, days, days, days,
                      start=D(2021, 2, 1), end=days[-1])

    def test_bad_hour_count_becomes_gap(self, tmp_path):
        good = D(2021, 3, 1)
        short = D(2021, 3, 2)
        panel_path = hourly_csv(tmp_path, [good])
        with open(panel_path, "a", encoding="utf-8") as fh:
            for h in range(22):  # 22 hours is not a legal day length
                fh.write(f"Z1,{short.isoformat()}T{h:02d}:00:00+01:00,"
                         "50.0,1000.0,10.0,5.0,20.0\n")
        panel = load_hourly_panel(panel_path, "Z1")
        fuels = load_daily_series(fuel_csv(tmp_path, [good, short]), "fuel")
        carbon = load_daily_series(carbon_csv(tmp_path, [good, short]), "carbon")
        aligned = align_calendar(panel, fuels, carbon, example_config(),
                                 start=good, end=short)
        assert aligned.daily["gap"].tolist() == [False, True]
        assert set(aligned.hourly["date"]) == {good}

    def test_dst_day_lengths_accepted(self, tmp_path):
        days = [D(2021, 3, 27), D(2021, 3, 28), D(2021, 3, 29)]
        panel_path = tmp_path / "h.csv"
        lines = ["zone,timestamp,price_eur_mwh,demand_mwh,gen_coal_mwh,"
                 "gen_oil_mwh,gen_gas_mwh"]
        for day, n in zip(days, (24, 23, 25)):
            for h in range(n):
                # Synthetic offsets; only the per-day record count matters here.
                lines.append(f"Z1,{day.isoformat()}T{h % 24:02d}:"
                             f"{(h // 24) * 30:02d}:00+01:00,50.0,1000.0,10.0,5.0,20.0")
        write(panel_path, "\n".join(lines) + "\n")
        panel = load_hourly_panel(panel_path, "Z1")
        fuels = load_daily_series(fuel_csv(tmp_path, days), "fuel")
        carbon = load_daily_series(carbon_csv(tmp_path, days), "carbon")
        aligned = align_calendar(panel, fuels, carbon, example_config(),
                                 start=days[0], end=days[-1])
        assert not aligned.daily["gap"].any()

    def test_window_order_validated(self, tmp_path):
        days = [D(2021, 3, 1), D(2021, 3, 2)]
        with pytest.raises(ValidationError, match="after end"):
            self.make(tmp_path, days, days, days, start=days[1], end=days[0])

    def test_aligned_roundtrip(self, tmp_path):
        days = [D(2021, 3, 1) + dt.timedelta(days=i) for i in range(4)]
        aligned = self.make(tmp_path, days[:3], days, days,
                            start=days[0], end=days[-1])  # last day is a gap
        path = tmp_path / "aligned.csv"
        aligned.to_csv(path)
        back = AlignedDataset.from_csv(path)
        assert back.zone == aligned.zone
        assert list(back.daily.index) == list(aligned.daily.index)
        for col in aligned.daily.columns:
            assert back.daily[col].tolist() == aligned.daily[col].tolist()
        assert len(back.hourly) == len(aligned.hourly)
        for col in ("price_eur_mwh", "demand_mwh", "gen_gas_mwh"):
            assert np.array_equal(back.hourly[col].to_numpy(),
                                  aligned.hourly[col].to_numpy())
        assert list(back.hourly["timestamp"]) == list(aligned.hourly["timestamp"])
