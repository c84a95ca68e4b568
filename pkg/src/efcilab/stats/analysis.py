"""Variance decomposition, variable screening, model selection, pairwise tests.

ANOVA uses Type-II sums of squares (each variable judged against the
model holding every term that does not contain it), which makes the
table invariant to term declaration order. Pairwise comparisons refit
the same regression once per reference level and gate significance with
a Bonferroni-corrected threshold over unordered level pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .design import DesignError, DesignMatrix, Formula, encode_design, parse_formula
from .distributions import f_pvalue
from .linalg import RankDeficientError
from .regression import ols_fit


# ---------------------------------------------------------------------------
# ANOVA


@dataclass(frozen=True)
class AnovaRow:
    variable: str
    sum_sq: float
    df: int
    f_stat: float
    p_value: float
    partial_eta_sq: float


@dataclass
class AnovaTable:
    formula: str
    rows: list[AnovaRow]
    residual_sum_sq: float
    residual_df: int
    r_squared: float

    def ranked(self) -> list[AnovaRow]:
        """Rows by decreasing partial eta squared (ties by declaration order)."""
        order = sorted(range(len(self.rows)), key=lambda i: (-self.rows[i].partial_eta_sq, i))
        return [self.rows[i] for i in order]

    def row(self, variable: str) -> AnovaRow:
        for r in self.rows:
            if r.variable == variable:
                return r
        raise KeyError(f"no ANOVA row for {variable!r}")


def _term_contains(term: str, variable: str) -> bool:
    return variable in term.split(":")


def _ssr_of_terms(design: DesignMatrix, terms: Sequence[str], context: str) -> tuple[float, int]:
    sub = design.subset(terms)
    try:
        fit = ols_fit(sub)
    except RankDeficientError as exc:
        raise DesignError(f"{context}: {exc}") from None
    return fit.ssr, fit.n_params


def anova_partial_eta2(
    records,
    formula: Formula | str,
    reference_levels: dict[str, str] | None = None,
) -> AnovaTable:
    """Type-II ANOVA with partial eta squared per variable."""
    if isinstance(formula, str):
        formula = parse_formula(formula)
    design = encode_design(records, formula, reference_levels)
    try:
        full_fit = ols_fit(design)
    except RankDeficientError as exc:
        raise DesignError(f"full model {formula}: {exc}") from None
    ss_res = full_fit.ssr
    df_res = full_fit.df_resid

    rows: list[AnovaRow] = []
    for term in formula.terms:
        base_terms = [t for t in formula.terms if t != term and not _term_contains(t, term)]
        ssr_base, p_base = _ssr_of_terms(design, base_terms, f"model without {term!r}")
        ssr_with, p_with = _ssr_of_terms(
            design, base_terms + [term], f"model testing {term!r}"
        )
        sum_sq = max(ssr_base - ssr_with, 0.0)
        df = p_with - p_base
        if ss_res > 0:
            f_stat = (sum_sq / df) / (ss_res / df_res)
            p_val = f_pvalue(f_stat, df, df_res)
        else:
            f_stat = math.inf if sum_sq > 0 else 0.0
            p_val = 0.0 if sum_sq > 0 else 1.0
        eta_sq = sum_sq / (sum_sq + ss_res) if (sum_sq + ss_res) > 0 else 0.0
        rows.append(
            AnovaRow(
                variable=term,
                sum_sq=sum_sq,
                df=df,
                f_stat=f_stat,
                p_value=p_val,
                partial_eta_sq=eta_sq,
            )
        )
    return AnovaTable(
        formula=str(formula),
        rows=rows,
        residual_sum_sq=ss_res,
        residual_df=df_res,
        r_squared=full_fit.r_squared,
    )


# ---------------------------------------------------------------------------
# Screening and model selection


@dataclass(frozen=True)
class ScreeningRow:
    variable: str
    p_value: float
    r_squared: float


def screen_variables(
    records,
    response: str,
    candidates: Sequence[str],
    alpha: float = 0.05,
) -> list[ScreeningRow]:
    """One-variable regressions; survivors sorted by R^2 descending.

    Candidates whose single-variable model cannot be fitted (constant
    column, too few rows) are silently excluded, as are those whose
    model p-value misses ``alpha``.
    """
    rows: list[ScreeningRow] = []
    for var in candidates:
        try:
            fit = ols_fit(encode_design(records, Formula(response, (var,))))
        except (DesignError, RankDeficientError):
            continue
        p_val = fit.f_pvalue
        if math.isnan(p_val) or p_val >= alpha:
            continue
        rows.append(ScreeningRow(variable=var, p_value=p_val, r_squared=fit.r_squared))
    rows.sort(key=lambda r: -r.r_squared)
    return rows


@dataclass(frozen=True)
class ModelCandidate:
    formula: str
    aic: float | None
    n_params: int | None
    error: str | None


@dataclass
class ModelSelection:
    best: Formula
    candidates: list[ModelCandidate]


def select_model_aic(
    records,
    response: str,
    candidate_formulas: Sequence[str],
) -> ModelSelection:
    """Fit every candidate and keep the smallest AIC.

    Ties (within 1e-9) prefer fewer parameters, then earlier declaration.
    Unfittable formulas are reported and skipped.
    """
    candidates: list[ModelCandidate] = []
    best: tuple[float, int, int] | None = None  # (aic, n_params, index)
    best_formula: Formula | None = None
    for idx, text in enumerate(candidate_formulas):
        formula = parse_formula(text)
        if formula.response != response:
            raise DesignError(
                f"candidate {text!r} models {formula.response!r}, expected {response!r}"
            )
        try:
            fit = ols_fit(encode_design(records, formula))
        except (DesignError, RankDeficientError) as exc:
            candidates.append(ModelCandidate(text, None, None, str(exc)))
            continue
        candidates.append(ModelCandidate(text, fit.aic, fit.n_params, None))
        key = (fit.aic, fit.n_params, idx)
        if best is None or key[0] < best[0] - 1e-9 or (
            abs(key[0] - best[0]) <= 1e-9 and key[1:] < best[1:]
        ):
            best = key
            best_formula = formula
    if best_formula is None:
        raise DesignError("no candidate formula could be fitted")
    return ModelSelection(best=best_formula, candidates=candidates)


# ---------------------------------------------------------------------------
# Pairwise comparisons


@dataclass
class PairwiseMatrix:
    """Level-by-level effect gains with Bonferroni-gated significance.

    ``gain[i, j]`` estimates the response gain of level i over level j;
    the matrix is antisymmetric by construction. ``significant`` is True
    where the pair's p-value beats ``alpha / n_tests``. Pairs that could
    not be estimated are flagged False in ``estimable`` and NaN in
    ``gain``.
    """

    variable: str
    response: str
    levels: tuple[str, ...]
    gain: np.ndarray
    p_values: np.ndarray
    significant: np.ndarray
    estimable: np.ndarray
    n_tests: int
    alpha: float
    corrected_alpha: float

    def pair(self, level_i: str, level_j: str) -> tuple[float, float, bool]:
        i, j = self.levels.index(level_i), self.levels.index(level_j)
        return float(self.gain[i, j]), float(self.p_values[i, j]), bool(self.significant[i, j])


def pairwise_comparison(
    records,
    formula: Formula | str,
    alpha: float = 0.05,
    variable: str = "train",
    reference_levels: dict[str, str] | None = None,
) -> PairwiseMatrix:
    """Refit with every reference level of ``variable`` and tabulate gains."""
    if isinstance(formula, str):
        formula = parse_formula(formula)
    if variable not in formula.terms:
        raise DesignError(f"formula {formula} does not contain {variable!r} as a term")
    base_refs = dict(reference_levels or {})

    levels = tuple(sorted({str(getattr(r, variable)) for r in records}))
    n_levels = len(levels)
    if n_levels < 2:
        raise DesignError(f"pairwise comparison needs >= 2 levels of {variable!r}")

    n_tests = n_levels * (n_levels - 1) // 2
    corrected = alpha / n_tests
    gain = np.zeros((n_levels, n_levels))
    p_values = np.full((n_levels, n_levels), np.nan)
    estimable = np.zeros((n_levels, n_levels), dtype=bool)
    np.fill_diagonal(p_values, np.nan)

    for j in range(1, n_levels):
        refs = dict(base_refs)
        refs[variable] = levels[j]
        try:
            fit = ols_fit(encode_design(records, formula, refs))
        except (DesignError, RankDeficientError):
            continue
        for i in range(j):
            try:
                est, _, _, p_val = fit.coef(f"{variable}[{levels[i]}]")
            except KeyError:
                continue
            gain[i, j] = est
            gain[j, i] = -est
            p_values[i, j] = p_values[j, i] = p_val
            estimable[i, j] = estimable[j, i] = True

    gain[~estimable] = np.nan
    np.fill_diagonal(gain, 0.0)
    with np.errstate(invalid="ignore"):
        significant = estimable & (p_values < corrected)
    return PairwiseMatrix(
        variable=variable,
        response=formula.response,
        levels=levels,
        gain=gain,
        p_values=p_values,
        significant=significant,
        estimable=estimable,
        n_tests=n_tests,
        alpha=alpha,
        corrected_alpha=corrected,
    )
