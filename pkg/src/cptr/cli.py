"""Command-line pipeline.

Stages exchange CSV files inside one working directory (``--out-dir``)
under fixed naming conventions, so every stage can be run, inspected
and re-run on its own:

    simulate  -> hourly.csv, fuel.csv, carbon.csv, config.json, truth.json
    construct -> <zone>_constructed.csv  (daily-average basis: *_davg.csv)
    describe  -> describe_<split>.csv
    unitroot  -> <zone>_unitroot.csv
    fit       -> <zone>_fit.csv, <zone>_phase.csv, <zone>_variant_*.csv
    quantile  -> <zone>_quantile_table.csv, <zone>_quantile_path.csv
    gam       -> <zone>_gam.csv
    switching -> switching.csv
    report    -> report/ bundle (tables + SVG figures)

Each successful run writes ``manifest_<command>.json`` with the exact
argument vector, the seed and SHA-256 digests of all inputs and
outputs; re-invoking the recorded argv reproduces every output byte
for byte. Exit codes: 0 success, 2 validation error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import math
import sys
from pathlib import Path

import numpy as np
from scipy.stats import norm

from . import __version__
from .construct import (DAILY_HEADER, PRICE_BASES, DailySeries, build_daily_series,
                        coal_competitive, describe, switching_price)
from .errors import NumericalError, ValidationError
from .gam import DEFAULT_GCV_GAMMA, DEFAULT_K, gam_fit
from .ingest import (DEFAULT_FILL_LIMIT_DAYS, DEFAULT_PHASE4_START, _forward_fill,
                     align_calendar, config_from_dict, load_config, load_daily_series,
                     load_hourly_panel)
from .manifest import ManifestBuilder
from .passthrough import VARIANTS, CptrSpec, build_design, fit_baseline, fit_variants, phase_cptr
from .quantile import DEFAULT_BOOTSTRAP, DEFAULT_TAUS, qr_path
from .simulate import DEFAULT_N_DAYS, DEFAULT_START, EXAMPLE_CONFIG, SimTruth, simulate_inputs
from .statcore import significance_stars
from .tables import fmt, write_table
from .unitroot import adf_test, kpss_test

_FLOAT_COLUMNS = tuple(DAILY_HEADER[1:11])
SPLITS = ("full", "phase3", "phase4")


# ---------------------------------------------------------------- helpers

def _parse_date_flag(text, flag: str):
    if text is None:
        return None
    try:
        return dt.date.fromisoformat(str(text))
    except ValueError:
        raise ValidationError(f"{flag} must be YYYY-MM-DD, got {text!r}") from None


def _zones_from(args) -> list[str]:
    single = getattr(args, "zone", None)
    if single:
        return [single]
    if args.zones:
        zones = [z.strip() for z in str(args.zones).split(",") if z.strip()]
        if zones:
            return zones
    raise ValidationError("no zones selected; pass --zone or --zones")


def _find_config(args, builder: ManifestBuilder, required: bool):
    """Resolve the parameter config: --config, else <out-dir>/config.json."""
    path = args.config
    if path is None:
        fallback = Path(args.out_dir) / "config.json"
        if fallback.exists():
            path = fallback
    if path is None:
        if required:
            raise ValidationError(
                "no parameter config found; pass --config FILE "
                "(`cptr simulate` writes an example config.json)")
        return None
    config = load_config(path)
    builder.config_path = str(path)
    builder.add_input(path)
    return config


def _resolve_spec(args, config, builder: ManifestBuilder) -> CptrSpec:
    if getattr(args, "spec", None):
        builder.add_input(args.spec)
        return CptrSpec.from_json(args.spec)
    if config is not None:
        return CptrSpec(phase4_start=config.phase4_start)
    return CptrSpec()


def _load_constructed(out_dir: Path, zone: str, builder: ManifestBuilder,
                      suffix: str = "") -> DailySeries:
    path = out_dir / f"{zone}_constructed{suffix}.csv"
    if not path.exists():
        hint = ("run `cptr construct --basis daily_average`" if suffix
                else "run `cptr construct`")
        raise ValidationError(f"missing constructed series {path}; {hint} first")
    builder.add_input(path)
    return DailySeries.from_csv(path, zone)


def _load_json(path, what: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise ValidationError(f"{what} file not found: {p}")
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{p}: invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ValidationError(f"{p}: expected a JSON object")
    return raw


def _stars_from(est: float, se: float) -> str:
    if not math.isfinite(se) or se <= 0:
        return ""
    p = 2.0 * norm.sf(abs(est / se))
    return significance_stars(float(p))


def _write_fit_table(path, fit) -> None:
    """Coefficient rows with HAC SEs and stars; summary rows at the bottom."""
    rows = [
        [name, fmt(est), fmt(se), star]
        for name, est, se, star in zip(fit.columns, fit.coef,
                                       fit.se(robust=True), fit.stars(robust=True))
    ]
    rows.append(["r2_adj_pct", fmt(fit.adj_r2_pct, 2), "", ""])
    rows.append(["nobs", str(fit.nobs), "", ""])
    rows.append(["hac_bandwidth", str(fit.hac_bandwidth), "", ""])
    write_table(path, ["coef", "estimate", "hac_se", "stars"], rows)


def _write_phase_table(path, rep) -> None:
    header = ["zone", "cptr_phase3", "se_phase3", "stars_phase3",
              "cptr_phase4", "se_phase4", "stars_phase4", "pct_variation"]
    row = [
        rep.zone,
        fmt(rep.cptr_phase3), fmt(rep.se_phase3),
        _stars_from(rep.cptr_phase3, rep.se_phase3),
        fmt(rep.cptr_phase4), fmt(rep.se_phase4),
        _stars_from(rep.cptr_phase4, rep.se_phase4),
        fmt(rep.pct_variation, 2),
    ]
    write_table(path, header, [row])


def _write_quantile_table(path, qpath) -> None:
    names = list(qpath.fits[0].columns)
    has_sum = "beta1" in names and "beta2" in names
    header = ["tau"]
    for name in names + (["beta1_plus_beta2"] if has_sum else []):
        header += [name, f"{name}_se", f"{name}_stars"]
    rows = []
    for tau, fit in zip(qpath.taus, qpath.fits):
        ses = fit.se()
        stars = fit.stars()
        row = [f"{tau:g}"]
        for j in range(len(names)):
            row += [fmt(fit.coef[j]), fmt(ses[j]), stars[j]]
        if has_sum:
            est, se = fit.linear_combo(("beta1", "beta2"))
            row += [fmt(est), fmt(se), _stars_from(est, se)]
        rows.append(row)
    write_table(path, header, rows)


def _write_quantile_bands(path, bands) -> None:
    rows = [
        [repr(float(tau)), coef, repr(float(est)), repr(float(lo)), repr(float(hi))]
        for tau, coef, est, lo, hi in bands.itertuples(index=False)
    ]
    write_table(path, ["tau", "coef", "estimate", "lo90", "hi90"], rows)


def _write_gam_table(path, fit) -> None:
    rows = [
        [name, fmt(est), fmt(se), star]
        for name, est, se, star in zip(fit.param_names, fit.param_coef,
                                       fit.param_se(), fit.param_stars())
    ]
    rows.append(["edf_smooth", fmt(fit.edf_smooth, 2), "", ""])
    rows.append(["edf_total", fmt(fit.edf_total, 2), "", ""])
    rows.append(["lambda", repr(float(fit.lam)), "", ""])
    rows.append(["r2_adj_pct", fmt(fit.adj_r2_pct, 2), "", ""])
    rows.append(["nobs", str(fit.nobs), "", ""])
    write_table(path, ["coef", "estimate", "se", "stars"], rows)


def _parse_variants(text) -> list[str]:
    if not text:
        return []
    if text.strip().lower() == "all":
        return list(VARIANTS)
    chosen = [v.strip() for v in text.split(",") if v.strip()]
    for v in chosen:
        if v not in VARIANTS:
            raise ValidationError(f"unknown variant {v!r}; choose from {', '.join(VARIANTS)}")
    return chosen


def _parse_taus(text) -> tuple[float, ...]:
    if not text:
        return DEFAULT_TAUS
    try:
        taus = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ValidationError(f"--taus must be comma-separated numbers, got {text!r}") from None
    if not taus:
        raise ValidationError("--taus selects no quantiles")
    return taus


def _parse_lambda_grid(text):
    """'lo:hi:n' for a log-spaced grid, or explicit comma-separated values."""
    if not text:
        return None
    try:
        if ":" in text:
            lo_s, hi_s, n_s = text.split(":")
            lo, hi, n = float(lo_s), float(hi_s), int(n_s)
            if lo <= 0 or hi <= lo:
                raise ValueError
            return np.logspace(math.log10(lo), math.log10(hi), n)
        grid = np.array([float(v) for v in text.split(",") if v.strip()])
        if grid.size == 0 or np.any(grid <= 0):
            raise ValueError
        return grid
    except ValueError:
        raise ValidationError(
            f"--lambda-grid must be 'lo:hi:n' or comma-separated positive values, got {text!r}"
        ) from None


# ---------------------------------------------------------------- commands

def cmd_simulate(args, builder: ManifestBuilder, out_dir: Path) -> None:
    if args.seed is None:
        raise ValidationError("simulate draws random noise; --seed is required")
    builder.seed = int(args.seed)
    if args.truth:
        truth = SimTruth.from_dict(_load_json(args.truth, "truth"), source=str(args.truth))
        builder.add_input(args.truth)
    else:
        truth = SimTruth()

    if args.config:
        config = load_config(args.config)
        builder.config_path = str(args.config)
        builder.add_input(args.config)
    else:
        config = config_from_dict(EXAMPLE_CONFIG)
        config_path = out_dir / "config.json"
        config_path.write_text(
            json.dumps(EXAMPLE_CONFIG, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        builder.config_path = str(config_path)
        builder.add_output(config_path)

    start = _parse_date_flag(args.start, "--start") or DEFAULT_START
    paths = simulate_inputs(truth, config, out_dir, n_days=args.t,
                            seed=args.seed, start=start, zone=args.zone)
    truth_path = out_dir / "truth.json"
    truth_path.write_text(
        json.dumps(truth.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    for p in paths.values():
        builder.add_output(p)
    builder.add_output(truth_path)


def cmd_construct(args, builder: ManifestBuilder, out_dir: Path) -> None:
    config = _find_config(args, builder, required=True)
    zones = _zones_from(args)
    if args.out and len(zones) != 1:
        raise ValidationError("--out names a single file; use it with exactly one zone")

    hourly = Path(args.hourly) if args.hourly else out_dir / "hourly.csv"
    fuel = Path(args.fuel) if args.fuel else out_dir / "fuel.csv"
    carbon = Path(args.carbon) if args.carbon else out_dir / "carbon.csv"
    for p, what in ((hourly, "hourly panel"), (fuel, "fuel prices"), (carbon, "carbon prices")):
        if not p.exists():
            raise ValidationError(f"{what} file not found: {p}")
        builder.add_input(p)
    fuels = load_daily_series(fuel, "fuel")
    carbon_series = load_daily_series(carbon, "carbon")
    date_from = _parse_date_flag(args.date_from, "--from")
    date_to = _parse_date_flag(args.date_to, "--to")
    suffix = "_davg" if args.basis == "daily_average" else ""

    for zone in zones:
        panel = load_hourly_panel(hourly, zone)
        start = date_from or panel.first_date
        end = date_to or panel.last_date
        aligned = align_calendar(panel, fuels, carbon_series, config, start, end,
                                 fill_limit_days=args.fill_limit)
        series = build_daily_series(aligned, config, price_basis=args.basis)
        out = Path(args.out) if args.out else out_dir / f"{zone}_constructed{suffix}.csv"
        series.to_csv(out)
        builder.add_output(out)
        if args.write_aligned:
            apath = out_dir / f"{zone}_aligned.csv"
            aligned.to_csv(apath)
            builder.add_output(apath)


def cmd_describe(args, builder: ManifestBuilder, out_dir: Path) -> None:
    config = _find_config(args, builder, required=False)
    phase4_start = config.phase4_start if config else DEFAULT_PHASE4_START
    zones = _zones_from(args)
    if args.column not in _FLOAT_COLUMNS:
        raise ValidationError(
            f"unknown column {args.column!r}; choose from {', '.join(_FLOAT_COLUMNS)}")

    rows = []
    for zone in zones:
        series = _load_constructed(out_dir, zone, builder)
        sub = series.split(args.split, phase4_start)
        if not len(sub):
            raise ValidationError(f"{zone}: split {args.split!r} selects no days")
        st = describe(sub[args.column].to_numpy(dtype=float))
        rows.append([zone, args.split, st.count, fmt(st.mean), fmt(st.median), fmt(st.sd),
                     fmt(st.max), fmt(st.min), fmt(st.skewness), fmt(st.kurtosis)])
    name = (f"describe_{args.split}.csv" if args.column == "s"
            else f"describe_{args.column}_{args.split}.csv")
    path = out_dir / name
    write_table(path, ["zone", "split", "count", "mean", "median", "sd", "max", "min",
                       "skewness", "kurtosis"], rows)
    builder.add_output(path)


def cmd_unitroot(args, builder: ManifestBuilder, out_dir: Path) -> None:
    zones = _zones_from(args)
    columns = [c.strip() for c in args.columns.split(",") if c.strip()]
    if not columns:
        raise ValidationError("--columns selects no series")
    for c in columns:
        if c not in _FLOAT_COLUMNS:
            raise ValidationError(
                f"unknown column {c!r}; choose from {', '.join(_FLOAT_COLUMNS)}")
    adf_variant = "constant+trend" if args.variant == "trend" else "constant"
    kpss_variant = "trend" if args.variant == "trend" else "level"

    header = ["series", "test", "variant", "statistic", "stars",
              "crit_1pct", "crit_5pct", "crit_10pct", "lags", "nobs"]
    for zone in zones:
        series = _load_constructed(out_dir, zone, builder)
        rows = []
        for col in columns:
            x = series.frame[col].to_numpy(dtype=float)
            x = x[np.isfinite(x)]
            results = (adf_test(x, max_lag=args.max_lag, variant=adf_variant),
                       kpss_test(x, variant=kpss_variant))
            for res in results:
                rows.append([
                    col, res.test, res.variant, fmt(res.statistic),
                    "*" if res.reject_5pct else "",
                    fmt(res.crit_values["1%"]), fmt(res.crit_values["5%"]),
                    fmt(res.crit_values["10%"]), res.lags, res.nobs,
                ])
        path = out_dir / f"{zone}_unitroot.csv"
        write_table(path, header, rows)
        builder.add_output(path)


def cmd_fit(args, builder: ManifestBuilder, out_dir: Path) -> None:
    config = _find_config(args, builder, required=False)
    zones = _zones_from(args)
    if args.out_table and len(zones) != 1:
        raise ValidationError("--out-table names a single file; use it with exactly one zone")
    spec = _resolve_spec(args, config, builder)
    variants = _parse_variants(args.variants)

    for zone in zones:
        series = _load_constructed(out_dir, zone, builder)
        fit = fit_baseline(series, spec, hac_bandwidth=args.hac_lags)
        table = Path(args.out_table) if args.out_table else out_dir / f"{zone}_fit.csv"
        _write_fit_table(table, fit)
        builder.add_output(table)

        phase_path = out_dir / f"{zone}_phase.csv"
        _write_phase_table(phase_path, phase_cptr(fit, zone))
        builder.add_output(phase_path)

        if variants:
            davg = None
            if "daily_average" in variants:
                davg = _load_constructed(out_dir, zone, builder, suffix="_davg")
            vfits = fit_variants(series, spec, variants=variants,
                                 daily_average_data=davg, hac_bandwidth=args.hac_lags)
            for vname, vfit in vfits.items():
                vpath = out_dir / f"{zone}_variant_{vname}.csv"
                _write_fit_table(vpath, vfit)
                builder.add_output(vpath)


def cmd_quantile(args, builder: ManifestBuilder, out_dir: Path) -> None:
    if args.seed is None:
        raise ValidationError("bootstrap bands need --seed (no hidden entropy)")
    builder.seed = int(args.seed)
    config = _find_config(args, builder, required=False)
    zones = _zones_from(args)
    if (args.out_table or args.out_path or args.plot) and len(zones) != 1:
        raise ValidationError(
            "--out-table/--out-path/--plot name single files; use them with exactly one zone")
    spec = _resolve_spec(args, config, builder)
    taus = _parse_taus(args.taus)

    for zone in zones:
        series = _load_constructed(out_dir, zone, builder)
        design = build_design(series, spec)
        qpath = qr_path(design, taus=taus, n_boot=args.bootstrap, seed=args.seed)

        table = Path(args.out_table) if args.out_table else out_dir / f"{zone}_quantile_table.csv"
        _write_quantile_table(table, qpath)
        builder.add_output(table)

        bands_path = Path(args.out_path) if args.out_path else out_dir / f"{zone}_quantile_path.csv"
        _write_quantile_bands(bands_path, qpath.bands)
        builder.add_output(bands_path)

        if args.plot:
            from .report import plot_quantile_path  # deferred: pulls in matplotlib
            plot_quantile_path(qpath.bands, args.plot, zone)
            builder.add_output(args.plot)


def cmd_gam(args, builder: ManifestBuilder, out_dir: Path) -> None:
    config = _find_config(args, builder, required=False)
    zones = _zones_from(args)
    if args.out_table and len(zones) != 1:
        raise ValidationError("--out-table names a single file; use it with exactly one zone")
    spec = _resolve_spec(args, config, builder)
    grid = _parse_lambda_grid(args.lambda_grid)

    for zone in zones:
        series = _load_constructed(out_dir, zone, builder)
        fit = gam_fit(series, spec, K=args.k, lambda_grid=grid, gcv_gamma=args.gcv_gamma)
        table = Path(args.out_table) if args.out_table else out_dir / f"{zone}_gam.csv"
        _write_gam_table(table, fit)
        builder.add_output(table)


def cmd_switching(args, builder: ManifestBuilder, out_dir: Path) -> None:
    config = _find_config(args, builder, required=True)
    fuel = Path(args.fuel) if args.fuel else out_dir / "fuel.csv"
    carbon = Path(args.carbon) if args.carbon else out_dir / "carbon.csv"
    for p, what in ((fuel, "fuel prices"), (carbon, "carbon prices")):
        if not p.exists():
            raise ValidationError(f"{what} file not found: {p}")
        builder.add_input(p)
    fuels = load_daily_series(fuel, "fuel")
    carbon_series = load_daily_series(carbon, "carbon")

    days = list(fuels.frame.index)
    eua_vals, _ = _forward_fill(carbon_series.frame, days, args.fill_limit, "carbon")
    eua = eua_vals[:, 0]
    intensity = {
        j: config.emission_factors[j] * config.oxidation_rates[j] * config.molecular_ratio
        for j in ("coal", "gas")
    }

    rows = []
    for day, raw, price in zip(days, fuels.frame.to_numpy(dtype=float), eua):
        coal_q, _oil_q, gas_q = raw
        gas_cost = gas_q / config.heat_content["gas"] * config.heat_rates["gas"]
        coal_cost = coal_q / config.heat_content["coal"] * config.heat_rates["coal"]
        sp = switching_price(gas_cost, coal_cost, intensity["coal"], intensity["gas"])
        rows.append([day.isoformat(), repr(float(gas_cost)), repr(float(coal_cost)),
                     repr(float(sp)), repr(float(price)),
                     int(coal_competitive(price, sp))])
    path = out_dir / "switching.csv"
    write_table(path, ["date", "gas_cost", "coal_cost", "switching_price",
                       "eua_eur_tco2e", "coal_competitive"], rows)
    builder.add_output(path)


def cmd_report(args, builder: ManifestBuilder, out_dir: Path) -> None:
    config = _find_config(args, builder, required=False)
    phase4_start = config.phase4_start if config else DEFAULT_PHASE4_START
    if args.zones or getattr(args, "zone", None):
        zones = _zones_from(args)
    else:
        zones = sorted(p.name[: -len("_constructed.csv")]
                       for p in out_dir.glob("*_constructed.csv"))
        if not zones:
            raise ValidationError(
                f"no constructed series in {out_dir}; run construct or pass --zones")
    from .report import build_report  # deferred: pulls in matplotlib

    outputs, notes, inputs = build_report(out_dir, zones, phase4_start)
    for p in inputs:
        builder.add_input(p)
    for p in outputs:
        builder.add_output(p)
    for text in notes:
        builder.note(text)


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="parameter config JSON "
                                         "(default: <out-dir>/config.json when present)")
    common.add_argument("--seed", type=int, help="RNG seed; required for randomized commands")
    common.add_argument("--out-dir", default=".", help="working directory for pipeline artifacts")
    common.add_argument("--zones", help="comma-separated zone identifiers")

    parser = argparse.ArgumentParser(
        prog="cptr",
        description="Carbon-cost pass-through estimation pipeline for zonal "
                    "day-ahead electricity markets.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("simulate", parents=[common],
                       help="generate a seeded synthetic raw-input dataset")
    p.add_argument("--t", type=int, default=DEFAULT_N_DAYS, help="number of days")
    p.add_argument("--truth", help="JSON file overriding the true coefficients")
    p.add_argument("--zone", default="SIM", help="zone identifier stamped on the data")
    p.add_argument("--start", help="first day (YYYY-MM-DD)")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("construct", parents=[common],
                       help="build the daily analysis series from raw inputs")
    p.add_argument("--zone", help="single zone (alternative to --zones)")
    p.add_argument("--from", dest="date_from", help="window start (YYYY-MM-DD)")
    p.add_argument("--to", dest="date_to", help="window end (YYYY-MM-DD)")
    p.add_argument("--hourly", help="hourly panel CSV (default <out-dir>/hourly.csv)")
    p.add_argument("--fuel", help="daily fuel price CSV (default <out-dir>/fuel.csv)")
    p.add_argument("--carbon", help="daily carbon price CSV (default <out-dir>/carbon.csv)")
    p.add_argument("--basis", choices=PRICE_BASES, default="volume_weighted",
                   help="daily price aggregation")
    p.add_argument("--fill-limit", type=int, default=DEFAULT_FILL_LIMIT_DAYS,
                   help="max days of forward-filled fuel/carbon prices")
    p.add_argument("--out", help="output CSV path (single zone only)")
    p.add_argument("--write-aligned", action="store_true",
                   help="also write the aligned calendar dataset")
    p.set_defaults(handler=cmd_construct)

    p = sub.add_parser("describe", parents=[common],
                       help="descriptive statistics of a constructed column per phase split")
    p.add_argument("--zone", help="single zone (alternative to --zones)")
    p.add_argument("--split", choices=SPLITS, default="full")
    p.add_argument("--column", default="s", help="constructed column (default: spread s)")
    p.set_defaults(handler=cmd_describe)

    p = sub.add_parser("unitroot", parents=[common],
                       help="ADF and KPSS tests on constructed columns")
    p.add_argument("--zone", help="single zone (alternative to --zones)")
    p.add_argument("--columns", default="s,c,log_d,s_tilde,c_tilde")
    p.add_argument("--variant", choices=("level", "trend"), default="level",
                   help="deterministic term: constant, or constant plus trend")
    p.add_argument("--max-lag", type=int, help="cap for the AIC lag search")
    p.set_defaults(handler=cmd_unitroot)

    p = sub.add_parser("fit", parents=[common],
                       help="baseline pass-through regression with HAC inference")
    p.add_argument("--zone", help="single zone (alternative to --zones)")
    p.add_argument("--spec", help="regression spec JSON (lags, demand_order, ...)")
    p.add_argument("--variants", help=f"comma list from {{{', '.join(VARIANTS)}}} or 'all'")
    p.add_argument("--hac-lags", type=int, help="Newey-West bandwidth override")
    p.add_argument("--out-table", help="coefficient table path (single zone only)")
    p.set_defaults(handler=cmd_fit)

    p = sub.add_parser("quantile", parents=[common],
                       help="quantile-regression coefficient paths with bootstrap bands")
    p.add_argument("--zone", help="single zone (alternative to --zones)")
    p.add_argument("--spec", help="regression spec JSON")
    p.add_argument("--taus", help="comma-separated quantiles (default 0.1..0.9)")
    p.add_argument("--bootstrap", type=int, default=DEFAULT_BOOTSTRAP,
                   help="bootstrap replicates for the bands")
    p.add_argument("--out-table", help="per-tau coefficient table (single zone only)")
    p.add_argument("--out-path", help="tidy band CSV (single zone only)")
    p.add_argument("--plot", help="render the three-panel path figure to this SVG")
    p.set_defaults(handler=cmd_quantile)

    p = sub.add_parser("gam", parents=[common],
                       help="pass-through regression with a penalized demand smooth")
    p.add_argument("--zone", help="single zone (alternative to --zones)")
    p.add_argument("--spec", help="regression spec JSON")
    p.add_argument("--k", type=int, default=DEFAULT_K, help="spline basis dimension")
    p.add_argument("--lambda-grid", help="'lo:hi:n' log-spaced or comma-separated values")
    p.add_argument("--gcv-gamma", type=float, default=DEFAULT_GCV_GAMMA,
                   help="GCV df-inflation factor (1 = plain GCV)")
    p.add_argument("--out-table", help="output table path (single zone only)")
    p.set_defaults(handler=cmd_gam)

    p = sub.add_parser("switching", parents=[common],
                       help="coal/gas switching price against the allowance price")
    p.add_argument("--fuel", help="daily fuel price CSV (default <out-dir>/fuel.csv)")
    p.add_argument("--carbon", help="daily carbon price CSV (default <out-dir>/carbon.csv)")
    p.add_argument("--fill-limit", type=int, default=DEFAULT_FILL_LIMIT_DAYS,
                   help="max days of forward-filled carbon prices")
    p.set_defaults(handler=cmd_switching)

    p = sub.add_parser("report", parents=[common],
                       help="assemble the table + figure bundle from pipeline artifacts")
    p.set_defaults(handler=cmd_report)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else [str(a) for a in argv]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits itself on --help/--version/bad flags; keep main callable.
        return 0 if exc.code in (0, None) else 2
    if getattr(args, "command", None) is None:
        parser.print_help(sys.stderr)
        return 2

    builder = ManifestBuilder(command=args.command, argv=argv,
                              package_version=__version__,
                              seed=getattr(args, "seed", None))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        args.handler(args, builder, out_dir)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3

    manifest_path = builder.finish(out_dir)
    for out in builder.outputs:
        print(f"wrote {out}")
    print(f"wrote {manifest_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
