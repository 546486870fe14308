"""Quantile regression over the pass-through design.

The check-loss problem is solved as a linear program (interior point),
then snapped to an exact vertex of the residual hyperplane arrangement
with deterministic tie handling: among equal-loss vertices reachable by
single basis swaps, the lexicographically smallest row set wins. Every
returned fit satisfies the subgradient sign-count optimality condition.

Inference is a pairs bootstrap; per-replicate seeds derive from
(root seed, tau, replicate counter) so serial and parallel runs agree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd
import scipy.optimize
import scipy.sparse
from scipy.stats import norm

from .errors import NumericalError, ValidationError
from .statcore import DesignMatrix, rank_check, significance_stars

DEFAULT_TAUS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
DEFAULT_BOOTSTRAP = 1000
MIN_BOOTSTRAP = 100

# 90% two-sided normal band for coefficient paths.
Z90 = 1.645

_LOSS_IMPROVE_RTOL = 1e-12
_LOSS_TIE_RTOL = 1e-9


def check_loss(tau: float, residuals: np.ndarray) -> float:
    """Koenker-Bassett loss: sum of r * (tau - 1[r < 0])."""
    r = np.asarray(residuals, dtype=float)
    return float(np.sum(r * (tau - (r < 0.0))))


@dataclass
class QuantileFit:
    """One quantile fit: exact vertex solution plus (optional) bootstrap vcov."""

    tau: float
    columns: list[str]
    coef: np.ndarray
    residuals: np.ndarray
    loss: float
    basis: tuple[int, ...]
    vcov: np.ndarray | None = None

    def _need_vcov(self) -> np.ndarray:
        if self.vcov is None:
            raise ValidationError("bootstrap covariance has not been attached to this fit")
        return self.vcov

    def se(self) -> np.ndarray:
        return np.sqrt(np.diag(self._need_vcov()))

    def pvalues(self) -> np.ndarray:
        return 2.0 * norm.sf(np.abs(self.coef / self.se()))

    def stars(self) -> list[str]:
        return [significance_stars(p) for p in self.pvalues()]

    def index_of(self, name: str) -> int:
        try:
            return self.columns.index(name)
        except ValueError:
            raise ValidationError(f"no coefficient named {name!r}") from None

    def linear_combo(self, names: tuple[str, ...]) -> tuple[float, float]:
        """Estimate and SE of a coefficient sum, using the full covariance."""
        idx = [self.index_of(n) for n in names]
        vcov = self._need_vcov()
        est = float(sum(self.coef[i] for i in idx))
        var = float(sum(vcov[i, j] for i in idx for j in idx))
        return est, float(np.sqrt(max(var, 0.0)))


def _solve_lp(X: np.ndarray, y: np.ndarray, tau: float) -> np.ndarray:
    """LP estimate of the check-loss minimizer.

    Solves the bounded dual (T variables in [0, 1], k equalities) rather
    than the primal split-residual form (k + 2T variables): an order of
    magnitude faster here, and the simplex route returns basic solutions
    whose equality multipliers are the primal coefficients exactly.
    """
    nobs, ncols = X.shape
    a_eq = scipy.sparse.csc_matrix(X.T)
    b_eq = (1.0 - tau) * X.sum(axis=0)
    res = scipy.optimize.linprog(
        -y, A_eq=a_eq, b_eq=b_eq, bounds=[(0.0, 1.0)] * nobs, method="highs-ds"
    )
    if not res.success:
        # Degenerate bases can stall the simplex; the interior-point
        # primal is slower but has a different failure surface.
        res = _solve_lp_primal(X, y, tau)
        return res
    return -np.asarray(res.eqlin.marginals, dtype=float)


def _solve_lp_primal(X: np.ndarray, y: np.ndarray, tau: float) -> np.ndarray:
    nobs, ncols = X.shape
    cost = np.concatenate([np.zeros(ncols), np.full(nobs, tau), np.full(nobs, 1.0 - tau)])
    eye = scipy.sparse.identity(nobs, format="csc")
    a_eq = scipy.sparse.hstack([scipy.sparse.csc_matrix(X), eye, -eye], format="csc")
    bounds = [(None, None)] * ncols + [(0.0, None)] * (2 * nobs)
    res = scipy.optimize.linprog(
        cost, A_eq=a_eq, b_eq=y, bounds=bounds, method="highs-ipm"
    )
    if not res.success:
        raise NumericalError(
            f"quantile LP failed to converge (status {res.status}): {res.message}"
        )
    return res.x[:ncols]


def _greedy_basis(X: np.ndarray, order: np.ndarray) -> list[int]:
    """First rank-maintaining row set of size k, scanning ``order``."""
    ncols = X.shape[1]
    basis: list[int] = []
    rows = np.empty((ncols, ncols))
    for i in order:
        rows[len(basis)] = X[i]
        if np.linalg.matrix_rank(rows[: len(basis) + 1]) == len(basis) + 1:
            basis.append(int(i))
            if len(basis) == ncols:
                return basis
    raise NumericalError("could not assemble a full-rank vertex basis")


def _vertex_descent(X: np.ndarray, y: np.ndarray, tau: float,
                    basis: list[int], pool: np.ndarray):
    """First-improvement swap descent over single-row basis exchanges.

    Accepts a swap when it strictly lowers the loss, or keeps the loss
    (within tolerance) while moving to a lexicographically smaller row
    set. Each accepted move decreases (loss, basis) lexicographically,
    so the walk terminates.
    """
    basis = sorted(basis)
    beta = np.linalg.solve(X[basis], y[basis])
    loss = check_loss(tau, y - X @ beta)
    scale = max(1.0, abs(loss))
    in_basis = set(basis)

    max_moves = 500 + 50 * len(basis)
    moves = 0
    improved = True
    while improved:
        improved = False
        for slot in range(len(basis)):
            for j in pool:
                j = int(j)
                if j in in_basis:
                    continue
                trial = sorted(basis[:slot] + basis[slot + 1 :] + [j])
                sub = X[trial]
                if np.linalg.matrix_rank(sub) < len(trial):
                    continue
                beta_t = np.linalg.solve(sub, y[trial])
                loss_t = check_loss(tau, y - X @ beta_t)
                better = loss_t < loss - _LOSS_IMPROVE_RTOL * scale
                tied = abs(loss_t - loss) <= _LOSS_TIE_RTOL * scale and tuple(trial) < tuple(basis)
                if better or tied:
                    basis = trial
                    in_basis = set(basis)
                    beta = beta_t
                    loss = loss_t
                    scale = max(1.0, abs(loss))
                    moves += 1
                    improved = True
                    break
            if improved:
                break
        if moves > max_moves:
            raise NumericalError("vertex descent failed to settle within the move budget")
    return basis, beta, loss


def _subgradient_ok(tau: float, residuals: np.ndarray, scale: float) -> bool:
    tol = 1e-8 * scale
    nobs = residuals.size
    n_neg = int(np.sum(residuals < -tol))
    n_pos = int(np.sum(residuals > tol))
    return n_neg <= tau * nobs + 1e-9 and n_pos <= (1.0 - tau) * nobs + 1e-9


def qr_fit(design: DesignMatrix, tau: float) -> QuantileFit:
    """Check-loss minimizer at quantile ``tau`` as an exact vertex solution."""
    if not 0.0 < tau < 1.0:
        raise ValidationError(f"tau must lie strictly between 0 and 1, got {tau}")
    X, y = design.X, design.y
    nobs, ncols = X.shape
    rank_check(X, design.columns)

    beta_ip = _solve_lp(X, y, tau)
    resid = y - X @ beta_ip

    # Vertex candidates: rows the interior point says are near-active.
    order = np.lexsort((np.arange(nobs), np.abs(resid)))
    pool_size = min(nobs, max(3 * ncols, ncols + 8))
    pool = np.sort(order[:pool_size])

    basis = _greedy_basis(X, order)
    basis, beta, loss = _vertex_descent(X, y, tau, basis, pool)

    resid = y - X @ beta
    scale = max(1.0, float(np.max(np.abs(y))))
    if not _subgradient_ok(tau, resid, scale):
        # Pool was too narrow; re-run the descent over every row.
        basis, beta, loss = _vertex_descent(X, y, tau, basis, np.arange(nobs))
        resid = y - X @ beta
        if not _subgradient_ok(tau, resid, scale):
            raise NumericalError(
                f"subgradient optimality violated at tau={tau}; solver did not reach a minimum"
            )

    return QuantileFit(
        tau=float(tau),
        columns=list(design.columns),
        coef=beta,
        residuals=resid,
        loss=loss,
        basis=tuple(basis),
    )


def qr_vcov(design: DesignMatrix, tau: float, n_boot: int = DEFAULT_BOOTSTRAP,
            seed: int | None = None) -> np.ndarray:
    """Pairs-bootstrap covariance of the quantile coefficients.

    Replicate r draws rows with replacement using a seed derived from
    (seed, tau, attempt counter); rank-deficient resamples are redrawn,
    capped at 10 * n_boot attempts in total. Each replicate uses the
    plain LP solution: the exact-vertex refinement matters for reported
    coefficients, not for covariance draws it perturbs below bootstrap
    noise.
    """
    if n_boot < MIN_BOOTSTRAP:
        raise ValidationError(f"bootstrap needs at least {MIN_BOOTSTRAP} replicates, got {n_boot}")
    if seed is None:
        raise ValidationError("bootstrap requires an explicit seed")
    X, y = design.X, design.y
    nobs, ncols = X.shape
    tau_key = int(round(tau * 1e6))

    draws = np.empty((n_boot, ncols))
    collected = 0
    attempt = 0
    max_attempts = 10 * n_boot
    while collected < n_boot:
        if attempt >= max_attempts:
            raise NumericalError(
                f"bootstrap exhausted {max_attempts} attempts at tau={tau} "
                "(resamples persistently rank-deficient)"
            )
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), tau_key, attempt]))
        attempt += 1
        idx = rng.integers(0, nobs, size=nobs)
        Xb, yb = X[idx], y[idx]
        try:
            rank_check(Xb, list(design.columns))
            draws[collected] = _solve_lp(Xb, yb, tau)
        except NumericalError:
            continue
        collected += 1

    centred = draws - draws.mean(axis=0)
    vcov = centred.T @ centred / (n_boot - 1)
    return 0.5 * (vcov + vcov.T)


@dataclass
class QuantilePath:
    """Coefficient paths over a tau grid with 90% bootstrap bands.

    ``bands`` has one row per (tau, coefficient) plus the beta1 + beta2
    sum, with columns tau, coef, estimate, lo90, hi90; the half-width is
    Z90 times the bootstrap SE (for the sum, via the covariance).
    """

    taus: list[float]
    fits: list[QuantileFit]
    bands: pd.DataFrame


def qr_path(design: DesignMatrix, taus=DEFAULT_TAUS, n_boot: int = DEFAULT_BOOTSTRAP,
            seed: int | None = None) -> QuantilePath:
    taus = [float(t) for t in taus]
    if not taus or any(not 0.0 < t < 1.0 for t in taus):
        raise ValidationError("tau grid must lie strictly inside (0, 1)")
    if sorted(taus) != taus:
        raise ValidationError("tau grid must be sorted ascending")

    fits = []
    rows = []
    has_sum = "beta1" in design.columns and "beta2" in design.columns
    for tau in taus:
        fit = qr_fit(design, tau)
        fit.vcov = qr_vcov(design, tau, n_boot=n_boot, seed=seed)
        fits.append(fit)
        ses = fit.se()
        for name, est, se in zip(fit.columns, fit.coef, ses):
            rows.append((tau, name, float(est), float(est - Z90 * se), float(est + Z90 * se)))
        if has_sum:
            est, se = fit.linear_combo(("beta1", "beta2"))
            rows.append((tau, "beta1_plus_beta2", est, est - Z90 * se, est + Z90 * se))

    bands = pd.DataFrame(rows, columns=["tau", "coef", "estimate", "lo90", "hi90"])
    return QuantilePath(taus=taus, fits=fits, bands=bands)
