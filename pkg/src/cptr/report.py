"""Report bundle: layout-mirroring tables and SVG figures.

Figures are rendered with the Agg backend to SVG with a fixed hash salt
and no embedded timestamps, so identical inputs yield byte-identical
files. Tables are plain CSV with fixed decimal formatting.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "cptr"

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from .construct import DailySeries, describe  # noqa: E402
from .errors import ValidationError  # noqa: E402
from .ingest import DEFAULT_PHASE4_START  # noqa: E402
from .tables import fmt, read_stat_table, write_table  # noqa: E402

_SVG_META = {"Date": None}

SPLITS = ("full", "phase3", "phase4")


def _save(fig, path) -> None:
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def plot_quantile_path(bands: pd.DataFrame, path, zone: str) -> None:
    """Three panels over tau: intercept; carbon terms; their sum, with 90% bands."""
    panels = [
        ("intercept", ["beta0"]),
        ("carbon-cost terms", ["beta1", "beta2"]),
        ("phase-4 pass-through (sum)", ["beta1_plus_beta2"]),
    ]
    fig, axes = plt.subplots(1, 3, figsize=(12.0, 3.8), sharex=True)
    for ax, (title, coefs) in zip(axes, panels):
        for coef in coefs:
            sub = bands.loc[bands["coef"] == coef].sort_values("tau")
            if sub.empty:
                continue
            ax.plot(sub["tau"], sub["estimate"], marker="o", markersize=3, label=coef)
            ax.fill_between(sub["tau"], sub["lo90"], sub["hi90"], alpha=0.25)
        ax.axhline(0.0, color="0.4", linewidth=0.6)
        ax.set_title(title, fontsize=10)
        ax.set_xlabel("tau")
        ax.legend(fontsize=8)
    axes[0].set_ylabel("coefficient")
    fig.suptitle(f"{zone}: quantile coefficient paths (shaded: 90% bands)", fontsize=11)
    fig.tight_layout()
    _save(fig, path)


def plot_quantile_sum_overview(per_zone: dict[str, pd.DataFrame], path) -> None:
    """One axes overlaying the beta1 + beta2 path of every zone."""
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    for zone in sorted(per_zone):
        sub = per_zone[zone]
        sub = sub.loc[sub["coef"] == "beta1_plus_beta2"].sort_values("tau")
        if sub.empty:
            continue
        ax.plot(sub["tau"], sub["estimate"], marker="o", markersize=3, label=zone)
        ax.fill_between(sub["tau"], sub["lo90"], sub["hi90"], alpha=0.15)
    ax.axhline(0.0, color="0.4", linewidth=0.6)
    ax.set_xlabel("tau")
    ax.set_ylabel("beta1 + beta2")
    ax.set_title("Later-phase pass-through across zones (shaded: 90% bands)", fontsize=11)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def plot_switching(frame: pd.DataFrame, path) -> None:
    """Allowance price against the coal/gas switching price over time."""
    fig, ax = plt.subplots(figsize=(8.0, 4.2))
    dates = frame["date"].tolist()
    ax.plot(dates, frame["eua_eur_tco2e"], label="allowance price", linewidth=0.9)
    ax.plot(dates, frame["switching_price"], label="switching price", linewidth=0.9)
    ax.set_ylabel("EUR/tCO2e")
    ax.set_title("Allowance price vs. coal/gas switching price", fontsize=11)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def _stack_wide(tables: dict[str, list[tuple[str, str, str, str]]]):
    """Merge per-zone coefficient tables into one wide, Table-5-like grid."""
    order: list[str] = []
    for rows in tables.values():
        for coef, *_ in rows:
            if coef not in order:
                order.append(coef)
    header = ["coef"]
    zones = sorted(tables)
    for zone in zones:
        header += [f"{zone}_estimate", f"{zone}_se", f"{zone}_stars"]
    grid = []
    for coef in order:
        row = [coef]
        for zone in zones:
            match = next((r for r in tables[zone] if r[0] == coef), ("", "", "", ""))
            row += [match[1], match[2], match[3]]
        grid.append(row)
    return header, grid


def build_report(work_dir, zones: list[str], phase4_start=DEFAULT_PHASE4_START):
    """Assemble the bundle from upstream artifacts in ``work_dir``.

    Constructed series are required per zone; fit, variant, quantile,
    smooth-model and switching artifacts are folded in when present and
    reported as notes when absent. Returns (output paths, notes,
    artifact paths read).
    """
    work_dir = Path(work_dir)
    report_dir = work_dir / "report"
    report_dir.mkdir(parents=True, exist_ok=True)
    outputs: list[Path] = []
    notes: list[str] = []
    inputs: list[Path] = []

    # Descriptive statistics (spread, per split) need the constructed series.
    desc_rows = []
    for zone in zones:
        constructed = work_dir / f"{zone}_constructed.csv"
        if not constructed.exists():
            raise ValidationError(f"missing upstream artifact: {constructed}")
        inputs.append(constructed)
        series = DailySeries.from_csv(constructed, zone)
        for split in SPLITS:
            sub = series.split(split, phase4_start)
            spread = sub["s"].to_numpy(dtype=float)
            spread = spread[np.isfinite(spread)]
            if spread.size < 2:
                notes.append(f"{zone}: split {split} empty; omitted from descriptive stats")
                continue
            st = describe(spread)
            desc_rows.append([
                zone, split, st.count, fmt(st.mean, 2), fmt(st.median, 2), fmt(st.sd, 2),
                fmt(st.max, 2), fmt(st.min, 2), fmt(st.skewness, 2), fmt(st.kurtosis, 2),
            ])
    path = report_dir / "descriptive_stats.csv"
    write_table(path, ["zone", "split", "count", "mean", "median", "sd", "max", "min",
                       "skewness", "kurtosis"], desc_rows)
    outputs.append(path)

    # Baseline coefficient and phase tables.
    fit_tables = {}
    for zone in zones:
        candidate = work_dir / f"{zone}_fit.csv"
        if candidate.exists():
            inputs.append(candidate)
            fit_tables[zone] = read_stat_table(candidate)
    if fit_tables:
        header, grid = _stack_wide(fit_tables)
        path = report_dir / "coefficients.csv"
        write_table(path, header, grid)
        outputs.append(path)
    else:
        notes.append("no fit tables found; coefficient table skipped")

    phase_rows = []
    for zone in zones:
        candidate = work_dir / f"{zone}_phase.csv"
        if not candidate.exists():
            continue
        inputs.append(candidate)
        with open(candidate, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            phase_rows.extend(reader)
    if phase_rows:
        path = report_dir / "phase_cptr.csv"
        write_table(path, header, phase_rows)
        outputs.append(path)
    else:
        notes.append("no phase tables found; phase report skipped")

    # Quantile table, per-zone path figures, cross-zone overview.
    quant_rows = []
    quant_header = None
    per_zone_bands = {}
    for zone in zones:
        table = work_dir / f"{zone}_quantile_table.csv"
        band_file = work_dir / f"{zone}_quantile_path.csv"
        if table.exists():
            inputs.append(table)
            with open(table, newline="", encoding="utf-8") as fh:
                reader = csv.reader(fh)
                quant_header = ["zone"] + next(reader)
                quant_rows.extend([zone] + row for row in reader)
        if band_file.exists():
            inputs.append(band_file)
            bands = pd.read_csv(band_file)
            per_zone_bands[zone] = bands
            fig_path = report_dir / f"quantile_path_{zone}.svg"
            plot_quantile_path(bands, fig_path, zone)
            outputs.append(fig_path)
    if quant_rows:
        path = report_dir / "quantile_estimates.csv"
        write_table(path, quant_header, quant_rows)
        outputs.append(path)
    else:
        notes.append("no quantile tables found; quantile outputs skipped")
    if per_zone_bands:
        fig_path = report_dir / "quantile_sum_overview.svg"
        plot_quantile_sum_overview(per_zone_bands, fig_path)
        outputs.append(fig_path)

    # Robustness variants: alternative price basis, demand polynomials.
    davg_tables = {}
    poly_tables = {}
    for zone in zones:
        candidate = work_dir / f"{zone}_variant_daily_average.csv"
        if candidate.exists():
            inputs.append(candidate)
            davg_tables[zone] = read_stat_table(candidate)
        for variant in ("quadratic", "cubic"):
            candidate = work_dir / f"{zone}_variant_{variant}.csv"
            if candidate.exists():
                inputs.append(candidate)
                poly_tables[f"{zone}_{variant}"] = read_stat_table(candidate)
    if davg_tables:
        header, grid = _stack_wide(davg_tables)
        path = report_dir / "variant_daily_average.csv"
        write_table(path, header, grid)
        outputs.append(path)
    else:
        notes.append("no daily-average variant tables found; skipped")
    if poly_tables:
        header, grid = _stack_wide(poly_tables)
        path = report_dir / "variant_polynomial.csv"
        write_table(path, header, grid)
        outputs.append(path)
    else:
        notes.append("no polynomial variant tables found; skipped")

    # Smooth-demand model table.
    gam_tables = {}
    for zone in zones:
        candidate = work_dir / f"{zone}_gam.csv"
        if candidate.exists():
            inputs.append(candidate)
            gam_tables[zone] = read_stat_table(candidate)
    if gam_tables:
        header, grid = _stack_wide(gam_tables)
        path = report_dir / "gam_fit.csv"
        write_table(path, header, grid)
        outputs.append(path)
    else:
        notes.append("no smooth-model tables found; skipped")

    # Switching-price overlay figure.
    switching = work_dir / "switching.csv"
    if switching.exists():
        inputs.append(switching)
        frame = pd.read_csv(switching)
        frame["date"] = [pd.Timestamp(d).date() for d in frame["date"]]
        fig_path = report_dir / "switching.svg"
        plot_switching(frame, fig_path)
        outputs.append(fig_path)
    else:
        notes.append("no switching series found; switching figure skipped")

    return outputs, notes, inputs
