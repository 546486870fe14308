"""Regression core: QR-based OLS, Newey-West covariance, ACF/PACF diagnostics.

Least squares is solved through a column-pivoted Householder QR rather
than the normal equations, so near-collinear designs are detected and
reported by column name instead of silently inflating coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.stats import norm

from .errors import NumericalError, ValidationError

# Relative pivot tolerance for declaring a design rank deficient.
RANK_RTOL = 1e-10


def default_hac_bandwidth(nobs: int) -> int:
    """Automatic Newey-West lag truncation: floor(4 * (T/100)^(2/9))."""
    return int(np.floor(4.0 * (nobs / 100.0) ** (2.0 / 9.0)))


@dataclass
class DesignMatrix:
    """Named regression design with response and optional per-row dates."""

    X: np.ndarray
    y: np.ndarray
    columns: list[str]
    dates: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.X.ndim != 2:
            raise ValidationError("design matrix must be two-dimensional")
        if self.X.shape[0] != self.y.shape[0]:
            raise ValidationError(
                f"design has {self.X.shape[0]} rows but response has {self.y.shape[0]}"
            )
        if len(self.columns) != self.X.shape[1]:
            raise ValidationError(
                f"{len(self.columns)} column names for {self.X.shape[1]} columns"
            )
        if len(set(self.columns)) != len(self.columns):
            raise ValidationError("column names must be unique")
        if self.X.shape[0] <= self.X.shape[1]:
            raise ValidationError(
                f"need more observations ({self.X.shape[0]}) than columns ({self.X.shape[1]})"
            )
        if not np.all(np.isfinite(self.X)) or not np.all(np.isfinite(self.y)):
            raise ValidationError("design contains non-finite values")

    @property
    def nobs(self) -> int:
        return self.X.shape[0]

    @property
    def ncols(self) -> int:
        return self.X.shape[1]


@dataclass
class ModelFit:
    """OLS fit with classical and (once attached) HAC covariance.

    ``adj_r2_pct`` is the adjusted R-squared in percent. Significance
    stars use two-sided normal p-values: '**' for p <= 0.01 and '*' for
    0.01 < p <= 0.05.
    """

    columns: list[str]
    coef: np.ndarray
    vcov_classical: np.ndarray
    residuals: np.ndarray
    fitted: np.ndarray
    adj_r2_pct: float
    nobs: int
    rss: float
    sigma2: float
    xtx_inv: np.ndarray = field(repr=False, default=None)
    vcov_hac: np.ndarray | None = None
    hac_bandwidth: int | None = None

    @property
    def ncols(self) -> int:
        return len(self.columns)

    def index_of(self, name: str) -> int:
        try:
            return self.columns.index(name)
        except ValueError:
            raise ValidationError(f"no coefficient named {name!r}") from None

    def _vcov(self, robust: bool) -> np.ndarray:
        if robust:
            if self.vcov_hac is None:
                raise ValidationError("HAC covariance has not been attached to this fit")
            return self.vcov_hac
        return self.vcov_classical

    def se(self, robust: bool = True) -> np.ndarray:
        return np.sqrt(np.diag(self._vcov(robust)))

    def tstats(self, robust: bool = True) -> np.ndarray:
        return self.coef / self.se(robust)

    def pvalues(self, robust: bool = True) -> np.ndarray:
        # Normal approximation; with thousands of daily observations the
        # t-vs-normal distinction is immaterial.
        return 2.0 * norm.sf(np.abs(self.tstats(robust)))

    def stars(self, robust: bool = True) -> list[str]:
        return [significance_stars(p) for p in self.pvalues(robust)]


def significance_stars(pvalue: float) -> str:
    """'**' if p <= 0.01, '*' if 0.01 < p <= 0.05, else ''."""
    if pvalue <= 0.01:
        return "**"
    if pvalue <= 0.05:
        return "*"
    return ""


def rank_check(X: np.ndarray, columns: list[str]) -> None:
    """Raise NumericalError naming the collinear columns if X is rank deficient."""
    _, r, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = RANK_RTOL * diag[0] if diag[0] > 0 else 0.0
    rank = int(np.sum(diag > tol))
    if rank < X.shape[1]:
        bad = sorted(columns[j] for j in piv[rank:])
        raise NumericalError(
            "design is rank deficient; collinear column(s): " + ", ".join(bad)
        )


def ols_fit(design: DesignMatrix) -> ModelFit:
    """Least-squares fit via column-pivoted QR.

    Raises NumericalError naming the offending columns when the design is
    rank deficient at relative tolerance RANK_RTOL.
    """
    X, y = design.X, design.y
    nobs, ncols = X.shape

    q, r, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = RANK_RTOL * diag[0] if diag[0] > 0 else 0.0
    rank = int(np.sum(diag > tol))
    if rank < ncols:
        bad = sorted(design.columns[j] for j in piv[rank:])
        raise NumericalError(
            "design is rank deficient; collinear column(s): " + ", ".join(bad)
        )

    qty = q.T @ y
    beta_piv = scipy.linalg.solve_triangular(r, qty)
    coef = np.empty(ncols)
    coef[piv] = beta_piv

    fitted = X @ coef
    resid = y - fitted
    rss = float(resid @ resid)
    dof = nobs - ncols
    sigma2 = rss / dof

    # (X'X)^-1 from the pivoted R factor.
    r_inv = scipy.linalg.solve_triangular(r, np.eye(ncols))
    xtx_inv_piv = r_inv @ r_inv.T
    xtx_inv = np.empty_like(xtx_inv_piv)
    xtx_inv[np.ix_(piv, piv)] = xtx_inv_piv

    tss = float(np.sum((y - y.mean()) ** 2))
    if tss > 0:
        r2 = 1.0 - rss / tss
        adj = 1.0 - (1.0 - r2) * (nobs - 1) / dof
    else:
        adj = 0.0

    return ModelFit(
        columns=list(design.columns),
        coef=coef,
        vcov_classical=sigma2 * xtx_inv,
        residuals=resid,
        fitted=fitted,
        adj_r2_pct=100.0 * adj,
        nobs=nobs,
        rss=rss,
        sigma2=sigma2,
        xtx_inv=xtx_inv,
    )


def newey_west(fit: ModelFit, design: DesignMatrix, bandwidth: int | None = None) -> np.ndarray:
    """Bartlett-kernel HAC covariance of the OLS coefficients.

    With truncation lag L the weights are w_l = 1 - l/(L+1); L = 0
    collapses to the heteroskedasticity-only (White/HC0) sandwich. The
    default L is floor(4 * (T/100)^(2/9)). No degrees-of-freedom
    correction is applied.
    """
    nobs = design.nobs
    if bandwidth is None:
        bandwidth = default_hac_bandwidth(nobs)
    if bandwidth < 0:
        raise ValidationError("bandwidth must be non-negative")
    if bandwidth >= nobs:
        raise ValidationError(f"bandwidth {bandwidth} must be < T = {nobs}")

    scores = design.X * fit.residuals[:, None]
    meat = scores.T @ scores
    for lag in range(1, bandwidth + 1):
        w = 1.0 - lag / (bandwidth + 1.0)
        gamma = scores[lag:].T @ scores[:-lag]
        meat += w * (gamma + gamma.T)

    vcov = fit.xtx_inv @ meat @ fit.xtx_inv
    vcov = 0.5 * (vcov + vcov.T)

    eigvals = np.linalg.eigvalsh(vcov)
    if eigvals.min() < -1e-10 * max(np.trace(vcov), 1e-300):
        raise NumericalError("HAC covariance failed the positive-semidefiniteness check")

    fit.vcov_hac = vcov
    fit.hac_bandwidth = bandwidth
    return vcov


@dataclass
class AcfPacf:
    """Sample autocorrelations, partial autocorrelations and the 95% band."""

    acf: np.ndarray
    pacf: np.ndarray
    conf_band: float
    nobs: int


def acf_pacf(series, max_lag: int) -> AcfPacf:
    """Sample ACF and Durbin-Levinson PACF up to ``max_lag``.

    The 95% band is +-1.96/sqrt(T). Lag 0 of both sequences is 1.
    """
    x = np.asarray(series, dtype=float).ravel()
    nobs = x.size
    if max_lag < 1:
        raise ValidationError("max_lag must be >= 1")
    if nobs <= max_lag + 1:
        raise ValidationError(f"series length {nobs} must exceed max_lag + 1 = {max_lag + 1}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("series contains non-finite values")

    xd = x - x.mean()
    denom = float(xd @ xd)
    if denom <= 0.0:
        raise NumericalError("constant series has no autocorrelation structure")

    acf = np.empty(max_lag + 1)
    acf[0] = 1.0
    for lag in range(1, max_lag + 1):
        acf[lag] = float(xd[lag:] @ xd[:-lag]) / denom

    # Durbin-Levinson recursion on the sample autocorrelations.
    pacf = np.empty(max_lag + 1)
    pacf[0] = 1.0
    prev = np.zeros(0)
    for n in range(1, max_lag + 1):
        if n == 1:
            phi_nn = acf[1]
            cur = np.array([phi_nn])
        else:
            num = acf[n] - prev @ acf[n - 1 : 0 : -1]
            den = 1.0 - prev @ acf[1:n]
            if abs(den) < 1e-14:
                raise NumericalError(f"Durbin-Levinson breakdown at lag {n}")
            phi_nn = num / den
            cur = np.empty(n)
            cur[: n - 1] = prev - phi_nn * prev[::-1]
            cur[n - 1] = phi_nn
        pacf[n] = phi_nn
        prev = cur

    return AcfPacf(acf=acf, pacf=pacf, conf_band=1.96 / np.sqrt(nobs), nobs=nobs)
