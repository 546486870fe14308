"""Pass-through estimation on the log-difference spread.

The baseline model regresses the day-on-day change of the log
price/fuel-cost ratio on its own lags at 1-5, 7, 14 and 21 calendar
days, the log-difference of the carbon cost, that term interacted with
the later-phase indicator, and log demand. The carbon coefficient is
the pass-through rate in the earlier phase; adding the interaction
coefficient gives the later-phase rate.
"""

from __future__ import annotations

import datetime as dt
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .construct import DailySeries
from .errors import ValidationError
from .ingest import DEFAULT_PHASE4_START
from .statcore import DesignMatrix, ModelFit, newey_west, ols_fit

DEFAULT_LAGS = (1, 2, 3, 4, 5, 7, 14, 21)

VARIANTS = ("daily_average", "quadratic", "cubic")

# Minimum cushion of valid rows beyond the column count.
_MIN_EXTRA_ROWS = 30


@dataclass(frozen=True)
class CptrSpec:
    """Estimation settings for the pass-through regression.

    ``demand_order`` 2 or 3 adds squared (and cubed) log-demand columns;
    ``price_basis`` records which daily price aggregation the input
    series was constructed with.
    """

    lags: tuple[int, ...] = DEFAULT_LAGS
    demand_order: int = 1
    price_basis: str = "volume_weighted"
    phase4_start: dt.date = DEFAULT_PHASE4_START

    def __post_init__(self):
        lags = tuple(int(l) for l in self.lags)
        if not lags or any(l <= 0 for l in lags):
            raise ValidationError("lags must be positive integers")
        if len(set(lags)) != len(lags):
            raise ValidationError("lags must be distinct")
        object.__setattr__(self, "lags", lags)
        if self.demand_order not in (1, 2, 3):
            raise ValidationError(f"demand_order must be 1, 2 or 3, got {self.demand_order}")
        if self.price_basis not in ("volume_weighted", "daily_average"):
            raise ValidationError(f"unknown price_basis {self.price_basis!r}")

    @property
    def column_names(self) -> list[str]:
        names = ["beta0"] + [f"phi_{l}" for l in self.lags] + ["beta1", "beta2", "beta3"]
        if self.demand_order >= 2:
            names.append("beta4")
        if self.demand_order >= 3:
            names.append("beta5")
        return names

    @classmethod
    def from_dict(cls, raw: dict, source: str = "spec") -> "CptrSpec":
        known = {"lags", "demand_order", "price_basis", "phase4_start"}
        unknown = set(raw) - known
        if unknown:
            raise ValidationError(f"{source}: unknown key(s) {sorted(unknown)}")
        kwargs = {}
        if "lags" in raw:
            kwargs["lags"] = tuple(raw["lags"])
        if "demand_order" in raw:
            kwargs["demand_order"] = int(raw["demand_order"])
        if "price_basis" in raw:
            kwargs["price_basis"] = str(raw["price_basis"])
        if "phase4_start" in raw:
            try:
                kwargs["phase4_start"] = dt.date.fromisoformat(str(raw["phase4_start"]))
            except ValueError:
                raise ValidationError(
                    f"{source}: phase4_start is not an ISO date: {raw['phase4_start']!r}"
                ) from None
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path) -> "CptrSpec":
        path = Path(path)
        if not path.exists():
            raise ValidationError(f"{path}: spec file not found")
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ValidationError(f"{path}: spec root must be a JSON object")
        return cls.from_dict(raw, source=str(path))


def _check_contiguous(index) -> np.ndarray:
    ordinals = np.array([d.toordinal() for d in index])
    if len(ordinals) > 1 and np.any(np.diff(ordinals) != 1):
        raise ValidationError("daily frame must be calendar-contiguous for lagging by day")
    return ordinals


def build_design(data: DailySeries, spec: CptrSpec) -> DesignMatrix:
    """Assemble the lagged design; lags are taken by calendar day.

    A row survives only if its own transforms are valid and the spread
    change is defined at every lag position, so one bad day knocks out
    every row whose lag set touches it.
    """
    frame = data.frame
    ordinals = _check_contiguous(frame.index)
    nobs = len(frame)
    max_lag = max(spec.lags)
    if max_lag >= nobs:
        raise ValidationError(f"max lag {max_lag} must be below the {nobs}-day sample")

    s = frame["s_tilde"].to_numpy(dtype=float)
    c = frame["c_tilde"].to_numpy(dtype=float)
    log_d = frame["log_d"].to_numpy(dtype=float)
    valid = frame["valid"].to_numpy(dtype=bool)

    # Phase indicator is recomputed from the spec, not read from the
    # frame, so one constructed file serves any phase4_start.
    phase = (ordinals >= spec.phase4_start.toordinal()).astype(float)

    keep = valid.copy()
    keep[:max_lag] = False
    for lag in spec.lags:
        keep[max_lag:] &= np.isfinite(s[max_lag - lag : nobs - lag])

    columns = [np.ones(nobs)]
    for lag in spec.lags:
        shifted = np.concatenate([np.full(lag, np.nan), s[:-lag]])
        columns.append(shifted)
    columns += [c, c * phase, log_d]
    if spec.demand_order >= 2:
        # Higher powers are taken around the kept-sample mean: raw powers
        # of a ~10-ish log demand are collinear enough to destabilize the
        # HAC sandwich, and centering changes only the parameterization
        # of the demand terms, not the column space.
        centered = log_d - np.nanmean(np.where(keep, log_d, np.nan))
        for power in range(2, spec.demand_order + 1):
            columns.append(centered**power)

    names = spec.column_names
    X = np.column_stack(columns)[keep]
    y = s[keep]
    dates = np.array([d for d, k in zip(frame.index, keep) if k], dtype=object)

    if X.shape[0] < X.shape[1] + _MIN_EXTRA_ROWS:
        raise ValidationError(
            f"only {X.shape[0]} valid rows for {X.shape[1]} columns; "
            f"need at least {X.shape[1] + _MIN_EXTRA_ROWS}"
        )
    return DesignMatrix(X=X, y=y, columns=names, dates=dates)


def fit_baseline(data: DailySeries, spec: CptrSpec | None = None,
                 hac_bandwidth: int | None = None) -> ModelFit:
    """OLS fit of the pass-through regression with Newey-West covariance attached."""
    spec = spec if spec is not None else CptrSpec()
    design = build_design(data, spec)
    fit = ols_fit(design)
    newey_west(fit, design, bandwidth=hac_bandwidth)
    return fit


@dataclass
class PhaseReport:
    """Per-phase pass-through rates derived from one fit.

    ``cptr_phase4`` is the exact coefficient sum beta1 + beta2; its
    standard error combines both variances and their covariance.
    ``pct_variation`` is 100 * beta2 / beta1, NaN when beta1 is zero.
    """

    zone: str
    cptr_phase3: float
    se_phase3: float
    cptr_phase4: float
    se_phase4: float
    pct_variation: float


def phase_cptr(fit: ModelFit, zone: str = "") -> PhaseReport:
    i1 = fit.index_of("beta1")
    i2 = fit.index_of("beta2")
    if fit.vcov_hac is None:
        raise ValidationError("phase report needs the HAC covariance; attach newey_west first")
    vcov = fit.vcov_hac
    b1 = float(fit.coef[i1])
    b2 = float(fit.coef[i2])
    var_sum = vcov[i1, i1] + vcov[i2, i2] + 2.0 * vcov[i1, i2]
    pct = 100.0 * b2 / b1 if b1 != 0.0 else math.nan
    return PhaseReport(
        zone=zone,
        cptr_phase3=b1,
        se_phase3=float(np.sqrt(vcov[i1, i1])),
        cptr_phase4=b1 + b2,
        se_phase4=float(np.sqrt(max(var_sum, 0.0))),
        pct_variation=pct,
    )


def fit_variants(data: DailySeries, base: CptrSpec,
                 variants=VARIANTS,
                 daily_average_data: DailySeries | None = None,
                 hac_bandwidth: int | None = None) -> dict[str, ModelFit]:
    """Robustness refits: alternative price basis and demand polynomials.

    The daily-average variant needs a series constructed with unweighted
    daily prices, supplied via ``daily_average_data``.
    """
    out: dict[str, ModelFit] = {}
    for variant in variants:
        if variant == "daily_average":
            if daily_average_data is None:
                raise ValidationError(
                    "daily_average variant needs a series constructed with "
                    "price_basis='daily_average'"
                )
            vspec = replace(base, price_basis="daily_average")
            out[variant] = fit_baseline(daily_average_data, vspec, hac_bandwidth)
        elif variant == "quadratic":
            out[variant] = fit_baseline(data, replace(base, demand_order=2), hac_bandwidth)
        elif variant == "cubic":
            out[variant] = fit_baseline(data, replace(base, demand_order=3), hac_bandwidth)
        else:
            raise ValidationError(f"unknown variant {variant!r}; choose from {VARIANTS}")
    return out
