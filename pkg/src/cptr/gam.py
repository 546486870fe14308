"""Penalized-spline robustness model.

Replaces the linear log-demand term of the pass-through regression with
a cubic B-spline smooth under a second-derivative curvature penalty.
The smooth is made identifiable next to the intercept by column
centering plus dropping one basis column; the smoothing parameter is
chosen by GCV over a log-spaced grid, and the smooth's flexibility is
reported as effective degrees of freedom (hat-matrix block trace).

The GCV score carries a degrees-of-freedom inflation factor (default
1.4) because plain GCV is known to chase noise in a non-trivial share
of fits; see Kim & Gu (2004). Set ``gcv_gamma=1`` for the unmodified
criterion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd
import scipy.linalg
from scipy.interpolate import BSpline
from scipy.stats import norm

from .construct import DailySeries
from .errors import NumericalError, ValidationError
from .passthrough import CptrSpec, build_design
from .statcore import DesignMatrix, significance_stars

DEFAULT_K = 10
DEFAULT_LAMBDA_GRID = np.logspace(-4.0, 8.0, 40)
# GCV df-inflation; 1.0 is the textbook score, ~1.4 the usual guard
# against its occasional noise-chasing (Kim & Gu 2004).
DEFAULT_GCV_GAMMA = 1.4
_MIN_GRID_POINTS = 20

_DEGREE = 3
# 2-point Gauss-Legendre abscissae on (0, 1): exact for the piecewise
# quadratic integrand B_a'' * B_b'' of cubic splines.
_GL_POINTS = (0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0))


@dataclass
class SplineBasis:
    """Constrained cubic B-spline basis for one covariate.

    ``psi`` is the T x (K-1) evaluation matrix after column centering
    and dropping the last column; every kept column sums to zero over
    the sample. ``penalty`` is the matching (K-1) x (K-1) curvature
    penalty (centering shifts by constants, so second derivatives are
    untouched).
    """

    knots: np.ndarray
    K: int
    psi: np.ndarray
    penalty: np.ndarray
    col_means: np.ndarray

    def evaluate(self, x) -> np.ndarray:
        """Constrained basis at new points, using the training centering."""
        raw = BSpline.design_matrix(np.asarray(x, dtype=float), self.knots, _DEGREE,
                                    extrapolate=False).toarray()
        return (raw - self.col_means)[:, : self.K - 1]


def _raw_penalty(knots: np.ndarray, K: int) -> np.ndarray:
    spans = np.unique(knots)
    penalty = np.zeros((K, K))
    eye = np.eye(K)
    d2 = [BSpline(knots, eye[a], _DEGREE).derivative(2) for a in range(K)]
    for lo, hi in zip(spans[:-1], spans[1:]):
        width = hi - lo
        for g in _GL_POINTS:
            point = lo + width * g
            vals = np.array([float(f(point)) for f in d2])
            penalty += 0.5 * width * np.outer(vals, vals)
    return penalty


def spline_basis(x, K: int = DEFAULT_K) -> SplineBasis:
    """Quantile-knotted cubic basis with sum-to-zero constraint.

    Needs at least K distinct sample values so the K - 4 interior knots
    (placed at equally spaced sample quantiles) stay strictly inside the
    data range.
    """
    x = np.asarray(x, dtype=float).ravel()
    if K < 4:
        raise ValidationError(f"cubic basis needs K >= 4, got {K}")
    if np.unique(x).size < K:
        raise ValidationError(
            f"need at least K = {K} distinct values to build the basis, "
            f"got {np.unique(x).size}"
        )
    lo, hi = float(x.min()), float(x.max())
    n_interior = K - 4
    if n_interior > 0:
        probs = np.arange(1, n_interior + 1) / (n_interior + 1)
        interior = np.quantile(x, probs)
        if np.unique(interior).size < n_interior or interior[0] <= lo or interior[-1] >= hi:
            raise ValidationError(
                "too few distinct values: quantile knots collapse onto each other "
                "or the boundary"
            )
    else:
        interior = np.empty(0)
    knots = np.concatenate([np.full(4, lo), interior, np.full(4, hi)])

    raw = BSpline.design_matrix(x, knots, _DEGREE, extrapolate=False).toarray()
    col_means = raw.mean(axis=0)
    psi = (raw - col_means)[:, : K - 1]
    penalty = _raw_penalty(knots, K)[: K - 1, : K - 1]
    penalty = 0.5 * (penalty + penalty.T)
    return SplineBasis(knots=knots, K=K, psi=psi, penalty=penalty, col_means=col_means)


@dataclass
class GamFit:
    """Penalized fit: parametric block plus one demand smooth.

    ``edf_smooth`` is the trace of the hat-matrix block belonging to the
    spline columns at the selected lambda; adjusted R-squared (percent)
    uses the total edf as the model degrees of freedom.
    """

    param_names: list[str]
    param_coef: np.ndarray
    param_vcov: np.ndarray
    smooth_coef: np.ndarray
    basis: SplineBasis
    lam: float
    edf_smooth: float
    edf_total: float
    adj_r2_pct: float
    nobs: int
    rss: float
    gcv: float
    fitted: np.ndarray
    residuals: np.ndarray
    gcv_path: pd.DataFrame

    def param_se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.param_vcov))

    def param_stars(self) -> list[str]:
        p = 2.0 * norm.sf(np.abs(self.param_coef / self.param_se()))
        return [significance_stars(v) for v in p]

    def index_of(self, name: str) -> int:
        try:
            return self.param_names.index(name)
        except ValueError:
            raise ValidationError(f"no parametric coefficient named {name!r}") from None


def _solve_penalized(xtx: np.ndarray, xty: np.ndarray, pen: np.ndarray, lam: float):
    """theta and the hat-block diagonal for one lambda."""
    lhs = xtx + lam * pen
    try:
        cho = scipy.linalg.cho_factor(lhs)
    except scipy.linalg.LinAlgError:
        raise NumericalError(f"penalized system singular at lambda = {lam}") from None
    theta = scipy.linalg.cho_solve(cho, xty)
    # A = (X'X + lam*P)^-1 X'X; its trace by block gives edf.
    influence = scipy.linalg.cho_solve(cho, xtx)
    return theta, np.diag(influence), cho


def gam_fit_design(design: DesignMatrix, K: int = DEFAULT_K,
                   lambda_grid=None, smooth_column: str = "beta3",
                   gcv_gamma: float = DEFAULT_GCV_GAMMA) -> GamFit:
    """Fit the penalized model on an already-built design.

    The named column is removed from the parametric block and its values
    feed the spline; everything else enters linearly and unpenalized.
    """
    if lambda_grid is None:
        lambda_grid = DEFAULT_LAMBDA_GRID
    lambda_grid = np.asarray(lambda_grid, dtype=float).ravel()
    if lambda_grid.size < _MIN_GRID_POINTS:
        raise ValidationError(
            f"lambda grid needs at least {_MIN_GRID_POINTS} points, got {lambda_grid.size}"
        )
    if np.any(lambda_grid < 0) or not np.all(np.isfinite(lambda_grid)):
        raise ValidationError("lambda grid must be finite and non-negative")
    if not np.isfinite(gcv_gamma) or gcv_gamma < 1.0:
        raise ValidationError(f"gcv_gamma must be >= 1, got {gcv_gamma}")

    j_smooth = design.columns.index(smooth_column) if smooth_column in design.columns else None
    if j_smooth is None:
        raise ValidationError(f"design has no column {smooth_column!r} to smooth")

    x = design.X[:, j_smooth]
    basis = spline_basis(x, K)

    keep = [j for j in range(design.ncols) if j != j_smooth]
    param_names = [design.columns[j] for j in keep]
    Xp = design.X[:, keep]
    Xg = np.hstack([Xp, basis.psi])
    y = design.y
    nobs = Xg.shape[0]
    n_param = Xp.shape[1]
    n_smooth = basis.psi.shape[1]

    pen = np.zeros((n_param + n_smooth, n_param + n_smooth))
    pen[n_param:, n_param:] = basis.penalty

    xtx = Xg.T @ Xg
    xty = Xg.T @ y

    rows = []
    best = None
    for lam in lambda_grid:
        try:
            theta, hat_diag, _ = _solve_penalized(xtx, xty, pen, lam)
        except NumericalError:
            rows.append((lam, np.nan, np.nan, np.nan))
            continue
        resid = y - Xg @ theta
        rss = float(resid @ resid)
        edf_total = float(hat_diag.sum())
        denom = nobs - gcv_gamma * edf_total
        gcv = nobs * rss / denom**2 if denom > 0 else np.nan
        rows.append((lam, gcv, edf_total, float(hat_diag[n_param:].sum())))
        if np.isfinite(gcv) and (best is None or gcv < best[1]):
            best = (lam, gcv)
    gcv_path = pd.DataFrame(rows, columns=["lam", "gcv", "edf_total", "edf_smooth"])
    if best is None:
        raise NumericalError("GCV was non-finite across the whole lambda grid")

    lam_star, gcv_star = best
    theta, hat_diag, cho = _solve_penalized(xtx, xty, pen, lam_star)
    fitted = Xg @ theta
    resid = y - fitted
    rss = float(resid @ resid)
    edf_total = float(hat_diag.sum())
    edf_smooth = float(hat_diag[n_param:].sum())
    sigma2 = rss / (nobs - edf_total)

    # Posterior-style covariance sigma^2 (X'X + lam*P)^-1; parametric block kept.
    vcov_full = sigma2 * scipy.linalg.cho_solve(cho, np.eye(n_param + n_smooth))
    param_vcov = vcov_full[:n_param, :n_param]

    tss = float(np.sum((y - y.mean()) ** 2))
    adj = 1.0 - (rss / (nobs - edf_total)) / (tss / (nobs - 1)) if tss > 0 else 0.0

    return GamFit(
        param_names=param_names,
        param_coef=theta[:n_param],
        param_vcov=0.5 * (param_vcov + param_vcov.T),
        smooth_coef=theta[n_param:],
        basis=basis,
        lam=float(lam_star),
        edf_smooth=edf_smooth,
        edf_total=edf_total,
        adj_r2_pct=100.0 * adj,
        nobs=nobs,
        rss=rss,
        gcv=float(gcv_star),
        fitted=fitted,
        residuals=resid,
        gcv_path=gcv_path,
    )


def gam_fit(data: DailySeries, spec: CptrSpec | None = None, K: int = DEFAULT_K,
            lambda_grid=None, gcv_gamma: float = DEFAULT_GCV_GAMMA) -> GamFit:
    """Build the lagged design from a constructed series and fit the smooth model.

    The smooth replaces the linear demand term, so the spec must use
    demand_order 1.
    """
    spec = spec if spec is not None else CptrSpec()
    if spec.demand_order != 1:
        raise ValidationError("the smooth replaces the demand polynomial; use demand_order 1")
    design = build_design(data, spec)
    return gam_fit_design(design, K=K, lambda_grid=lambda_grid, gcv_gamma=gcv_gamma)
