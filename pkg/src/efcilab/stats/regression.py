"""Ordinary least squares with inference, diagnostics, and a Gram check."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .design import DesignMatrix
from .distributions import f_pvalue, inv_norm_cdf, student_t_pvalue
from .linalg import (
    RankDeficientError,
    hat_diagonal,
    jacobi_eigenvalues,
    least_squares,
    unscaled_covariance,
)


@dataclass
class RegressionFit:
    """OLS estimates with Student-t inference and fit statistics."""

    formula: str
    column_labels: list[str]
    beta: np.ndarray
    se: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    fitted: np.ndarray
    residuals: np.ndarray
    hat_diag: np.ndarray
    n_obs: int
    n_params: int
    df_resid: int
    ssr: float
    sst: float
    sigma2: float
    r_squared: float
    adj_r_squared: float
    aic: float
    f_stat: float
    f_pvalue: float

    def coef(self, label: str) -> tuple[float, float, float, float]:
        """(estimate, se, t, p) for one column label."""
        try:
            i = self.column_labels.index(label)
        except ValueError:
            raise KeyError(
                f"no coefficient {label!r}; columns: {self.column_labels}"
            ) from None
        return (
            float(self.beta[i]),
            float(self.se[i]),
            float(self.t_stats[i]),
            float(self.p_values[i]),
        )


def ols_fit(design: DesignMatrix) -> RegressionFit:
    """Fit by pivoted Householder QR; raise naming collinear columns."""
    x, y = design.x, design.y
    n, p = x.shape
    if n <= p:
        raise RankDeficientError(
            f"underdetermined design: {n} rows for {p} parameters", list(range(p))
        )
    try:
        beta, qrf = least_squares(x, y)
    except RankDeficientError as exc:
        names = [design.column_labels[i] for i in exc.column_indices]
        raise RankDeficientError(
            f"collinear design columns: {names}", exc.column_indices
        ) from None

    fitted = x @ beta
    residuals = y - fitted
    ssr = float(residuals @ residuals)
    sst = float(np.sum((y - y.mean()) ** 2))
    if ssr <= 1e-24 * max(sst, float(y @ y), 1e-300):
        ssr = 0.0  # numerically exact fit: keep the degenerate case consistent
    df_resid = n - p
    sigma2 = ssr / df_resid

    cov_unscaled = unscaled_covariance(qrf)
    se = np.sqrt(np.clip(sigma2 * np.diag(cov_unscaled), 0.0, None))
    t_stats = np.empty(p)
    p_values = np.empty(p)
    beta_tol = 1e-12 * max(1.0, float(np.max(np.abs(beta))))
    for i in range(p):
        if se[i] > 0:
            t_stats[i] = beta[i] / se[i]
            p_values[i] = student_t_pvalue(float(t_stats[i]), df_resid)
        else:
            # exact fit: the test degenerates to "is the coefficient zero"
            big = abs(beta[i]) > beta_tol
            t_stats[i] = math.copysign(math.inf, beta[i]) if big else 0.0
            p_values[i] = 0.0 if big else 1.0

    if sst > 0:
        r_squared = min(max(1.0 - ssr / sst, 0.0), 1.0)
    else:
        r_squared = 1.0 if ssr <= 1e-300 else 0.0
    adj_r_squared = 1.0 - (1.0 - r_squared) * (n - 1) / df_resid

    aic = -math.inf if ssr <= 0 else 2.0 * (p + 1) + n * (math.log(2.0 * math.pi * ssr / n) + 1.0)

    if p > 1 and sst > 0:
        if ssr == 0.0:
            f_stat, f_p = math.inf, 0.0
        else:
            f_stat = ((sst - ssr) / (p - 1)) / (ssr / df_resid)
            f_stat = max(f_stat, 0.0)
            f_p = f_pvalue(f_stat, p - 1, df_resid)
    else:
        f_stat, f_p = math.nan, math.nan

    return RegressionFit(
        formula=str(design.formula),
        column_labels=list(design.column_labels),
        beta=beta,
        se=se,
        t_stats=t_stats,
        p_values=p_values,
        fitted=fitted,
        residuals=residuals,
        hat_diag=hat_diagonal(qrf),
        n_obs=n,
        n_params=p,
        df_resid=df_resid,
        ssr=ssr,
        sst=sst,
        sigma2=sigma2,
        r_squared=r_squared,
        adj_r_squared=adj_r_squared,
        aic=aic,
        f_stat=f_stat,
        f_pvalue=f_p,
    )


@dataclass
class DiagnosticsBundle:
    """Point sets for the three standard residual plots."""

    qq_theoretical: np.ndarray  # normal quantiles, ascending
    qq_residuals: np.ndarray  # ordered standardized residuals
    fitted: np.ndarray
    sqrt_abs_std_residuals: np.ndarray  # scale-location ordinate, row order
    leverage: np.ndarray
    std_residuals: np.ndarray  # row order


def standardized_residuals(fit: RegressionFit) -> np.ndarray:
    """Internally studentized residuals; zero when the fit is exact."""
    sigma = math.sqrt(fit.sigma2)
    if sigma == 0.0:
        return np.zeros_like(fit.residuals)
    denom = sigma * np.sqrt(np.clip(1.0 - fit.hat_diag, 1e-12, None))
    return fit.residuals / denom


def diagnostics(fit: RegressionFit) -> DiagnosticsBundle:
    """Q-Q, scale-location, and residual-vs-leverage point sets."""
    std_resid = standardized_residuals(fit)
    n = fit.n_obs
    theoretical = np.array([inv_norm_cdf((i - 0.5) / n) for i in range(1, n + 1)])
    return DiagnosticsBundle(
        qq_theoretical=theoretical,
        qq_residuals=np.sort(std_resid),
        fitted=fit.fitted.copy(),
        sqrt_abs_std_residuals=np.sqrt(np.abs(std_resid)),
        leverage=fit.hat_diag.copy(),
        std_residuals=std_resid,
    )


@dataclass(frozen=True)
class GramDiagnostic:
    """Smallest Gram-matrix eigenvalue with a collinearity verdict."""

    min_eigenvalue: float
    max_eigenvalue: float
    threshold: float
    collinear: bool


def gram_min_eigenvalue(design: DesignMatrix, rel_threshold: float = 1e-8) -> GramDiagnostic:
    """Smallest eigenvalue of X^T X via cyclic Jacobi.

    Flags collinearity when the smallest eigenvalue falls below
    ``rel_threshold`` times the Gram matrix norm (largest eigenvalue).
    """
    gram = design.x.T @ design.x
    eigs = jacobi_eigenvalues(gram)
    smallest = float(eigs[0])
    largest = float(eigs[-1])
    threshold = rel_threshold * abs(largest)
    return GramDiagnostic(
        min_eigenvalue=smallest,
        max_eigenvalue=largest,
        threshold=threshold,
        collinear=smallest < threshold,
    )
