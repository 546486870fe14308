"""Stationarity screening: augmented Dickey-Fuller and KPSS tests.

ADF lag order is picked by AIC over a common estimation sample (every
candidate sees the same rows, trimmed by the maximum lag), then the test
regression is re-estimated trimming only by the chosen lag. Critical
values are MacKinnon response-surface constants kept linear in 1/T, and
the standard KPSS asymptotic table.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NumericalError, ValidationError
from .statcore import DesignMatrix, ols_fit

# MacKinnon-style ADF critical values, cv = b_inf + b_1/T.
_ADF_CRIT = {
    "constant": {
        "1%": (-3.43035, -6.5393),
        "5%": (-2.86154, -2.8903),
        "10%": (-2.56677, -1.5384),
    },
    "constant+trend": {
        "1%": (-3.95877, -9.0531),
        "5%": (-3.41049, -4.3904),
        "10%": (-3.12705, -2.5856),
    },
}

# KPSS asymptotic critical values (level / trend variants).
_KPSS_CRIT = {
    "level": {"1%": 0.739, "5%": 0.463, "10%": 0.347},
    "trend": {"1%": 0.216, "5%": 0.146, "10%": 0.119},
}

_MIN_OBS = 25


@dataclass
class TestResult:
    """Unit-root test outcome.

    ``lags`` is the AR lag order for ADF and the Bartlett bandwidth for
    KPSS. ``reject_5pct`` compares the statistic against the 5% critical
    value in the test's rejection direction (ADF: left tail, rejects a
    unit root; KPSS: right tail, rejects stationarity).
    """

    test: str
    variant: str
    statistic: float
    crit_values: dict[str, float]
    reject_5pct: bool
    lags: int
    nobs: int


def default_adf_maxlag(nobs: int) -> int:
    """Schwert-style cap: floor(12 * (T/100)^(1/4))."""
    return int(np.floor(12.0 * (nobs / 100.0) ** 0.25))


def default_kpss_bandwidth(nobs: int) -> int:
    """Bartlett bandwidth: floor(4 * (T/100)^(1/4))."""
    return int(np.floor(4.0 * (nobs / 100.0) ** 0.25))


def _check_series(series) -> np.ndarray:
    x = np.asarray(series, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise ValidationError("series contains non-finite values")
    return x


def adf_test(series, max_lag: int | None = None, variant: str = "constant") -> TestResult:
    """Augmented Dickey-Fuller test; H0 is a unit root.

    Regresses dy_t on y_{t-1}, ``p`` lagged differences and the chosen
    deterministic terms. ``p`` minimises AIC over 0..max_lag, all
    candidates fitted on the max_lag-trimmed sample; the reported
    statistic is the t-ratio on y_{t-1} from a final regression trimmed
    only by the selected lag.
    """
    if variant not in _ADF_CRIT:
        raise ValidationError(f"unknown ADF variant {variant!r}; use 'constant' or 'constant+trend'")
    x = _check_series(series)
    nobs = x.size
    if nobs and np.ptp(x) == 0.0:
        raise NumericalError("constant series admits no Dickey-Fuller regression")

    if max_lag is None:
        max_lag = default_adf_maxlag(nobs)
    max_lag = int(max_lag)
    if max_lag < 0:
        raise ValidationError("max_lag must be non-negative")

    n_common = nobs - 1 - max_lag
    if n_common < _MIN_OBS:
        raise ValidationError(
            f"series too short: {n_common} usable rows after lagging, need >= {_MIN_OBS}"
        )

    dy = np.diff(x)
    ndet = 2 if variant == "constant+trend" else 1

    # Candidate scan on the common sample. Columns ordered so that the
    # model with p lags is a prefix, letting one unpivoted QR yield every
    # nested RSS via tail sums of Q'y.
    yv = dy[max_lag:]
    cols = [np.ones(n_common)]
    if ndet == 2:
        cols.append(np.arange(1.0, n_common + 1.0))
    cols.append(x[max_lag:-1])
    for j in range(1, max_lag + 1):
        cols.append(dy[max_lag - j : nobs - 1 - j])
    Xfull = np.column_stack(cols)

    q, _ = scipy.linalg.qr(Xfull, mode="economic")
    qty = q.T @ yv
    yty = float(yv @ yv)
    cum = np.cumsum(qty**2)

    aic = np.empty(max_lag + 1)
    for p in range(max_lag + 1):
        k = ndet + 1 + p
        rss = max(yty - cum[k - 1], 1e-300)
        aic[p] = n_common * np.log(rss / n_common) + 2.0 * k
    best_p = int(np.argmin(aic))

    # Final regression, trimmed by the chosen lag only.
    n_eff = nobs - 1 - best_p
    yv = dy[best_p:]
    names = ["const"]
    cols = [np.ones(n_eff)]
    if ndet == 2:
        names.append("trend")
        cols.append(np.arange(1.0, n_eff + 1.0))
    names.append("ylag")
    cols.append(x[best_p:-1])
    for j in range(1, best_p + 1):
        names.append(f"dlag{j}")
        cols.append(dy[best_p - j : nobs - 1 - j])

    fit = ols_fit(DesignMatrix(np.column_stack(cols), yv, names))
    idx = fit.index_of("ylag")
    stat = float(fit.coef[idx] / np.sqrt(fit.vcov_classical[idx, idx]))

    crit = {k: b_inf + b1 / n_eff for k, (b_inf, b1) in _ADF_CRIT[variant].items()}
    return TestResult(
        test="adf",
        variant=variant,
        statistic=stat,
        crit_values=crit,
        reject_5pct=stat < crit["5%"],
        lags=best_p,
        nobs=n_eff,
    )


def kpss_test(series, bandwidth: int | None = None, variant: str = "level") -> TestResult:
    """KPSS test; H0 is (level- or trend-) stationarity.

    Statistic: T^-2 * sum of squared partial sums of the demeaned
    (level) or detrended (trend) series, over a Bartlett long-run
    variance with bandwidth default floor(4 * (T/100)^(1/4)).
    """
    if variant not in _KPSS_CRIT:
        raise ValidationError(f"unknown KPSS variant {variant!r}; use 'level' or 'trend'")
    x = _check_series(series)
    nobs = x.size
    if nobs < _MIN_OBS:
        raise ValidationError(f"series too short: {nobs} observations, need >= {_MIN_OBS}")

    if bandwidth is None:
        bandwidth = default_kpss_bandwidth(nobs)
    bandwidth = int(bandwidth)
    if bandwidth < 0:
        raise ValidationError("bandwidth must be non-negative")
    if bandwidth >= nobs:
        raise ValidationError(f"bandwidth {bandwidth} must be < T = {nobs}")

    if variant == "level":
        resid = x - x.mean()
    else:
        t = np.arange(1.0, nobs + 1.0)
        Z = np.column_stack([np.ones(nobs), t])
        beta, *_ = np.linalg.lstsq(Z, x, rcond=None)
        resid = x - Z @ beta

    s = np.cumsum(resid)
    eta = float(s @ s) / nobs**2

    lrv = float(resid @ resid) / nobs
    for lag in range(1, bandwidth + 1):
        w = 1.0 - lag / (bandwidth + 1.0)
        lrv += 2.0 * w * float(resid[lag:] @ resid[:-lag]) / nobs
    if lrv <= 0.0:
        raise NumericalError("zero or negative long-run variance; KPSS statistic undefined")

    stat = eta / lrv
    crit = dict(_KPSS_CRIT[variant])
    return TestResult(
        test="kpss",
        variant=variant,
        statistic=stat,
        crit_values=crit,
        reject_5pct=stat > crit["5%"],
        lags=bandwidth,
        nobs=nobs,
    )
