"""Builds the full analysis bundle from a results table.

The bundle is a plain JSON-serializable dict: metric correlations,
screening tables, AIC model selection, ANOVA tables with partial eta
squared, pairwise strategy comparisons (overall and per subgroup), and
regression diagnostics for the selected accuracy model.
"""

from __future__ import annotations

import math

import numpy as np

from .metrics import MetricSet, metric_correlations
from .stats.analysis import (
    AnovaTable,
    PairwiseMatrix,
    anova_partial_eta2,
    pairwise_comparison,
    screen_variables,
    select_model_aic,
)
from .stats.design import DesignError, RunRecord, encode_design, parse_formula
from .stats.linalg import RankDeficientError
from .stats.regression import diagnostics, gram_min_eigenvalue, ols_fit

_VERSION = "0.1.0"

SCREENING_CANDIDATES = (
    "acc1",
    "data",
    "train",
    "incr",
    "n_mean",
    "small",
    "width",
    "scenario_b",
    "n",
    "n1",
)

AIC_LADDERS = {
    "avg_acc": (
        "avg_acc ~ incr",
        "avg_acc ~ train",
        "avg_acc ~ data",
        "avg_acc ~ incr + train",
        "avg_acc ~ incr + data",
        "avg_acc ~ train + data",
        "avg_acc ~ incr + train + data",
        "avg_acc ~ acc1 + incr + train + data",
    ),
    "forgetting": (
        "forgetting ~ incr",
        "forgetting ~ train",
        "forgetting ~ data",
        "forgetting ~ incr + train",
        "forgetting ~ incr + data",
        "forgetting ~ train + data",
        "forgetting ~ incr + train + data",
        "forgetting ~ acc1 + incr + train + data",
    ),
}

ANOVA_MODELS = (
    "avg_acc ~ incr + train + data",
    "avg_acc ~ acc1 + incr + train + data",
    "forgetting ~ incr + train + data",
)


class AnalysisError(ValueError):
    """Raised when the results table cannot support any analysis."""


def _anova_to_dict(table: AnovaTable) -> dict:
    return {
        "formula": table.formula,
        "r_squared": table.r_squared,
        "residual_sum_sq": table.residual_sum_sq,
        "residual_df": table.residual_df,
        "rows": [
            {
                "variable": r.variable,
                "sum_sq": r.sum_sq,
                "df": r.df,
                "f_stat": r.f_stat,
                "p_value": r.p_value,
                "partial_eta_sq": r.partial_eta_sq,
            }
            for r in table.rows
        ],
    }


def _pairwise_to_dict(pw: PairwiseMatrix, title: str, slug: str) -> dict:
    return {
        "title": title,
        "slug": slug,
        "variable": pw.variable,
        "response": pw.response,
        "levels": list(pw.levels),
        "gain": pw.gain.tolist(),
        "p_values": pw.p_values.tolist(),
        "significant": pw.significant.tolist(),
        "estimable": pw.estimable.tolist(),
        "n_tests": pw.n_tests,
        "alpha": pw.alpha,
        "corrected_alpha": pw.corrected_alpha,
    }


def _drop_nan(obj):
    """NaN -> None recursively, so bundles survive a JSON round trip intact.

    Infinities are kept: the json module round-trips them and they compare
    equal, unlike NaN.
    """
    if isinstance(obj, float) and math.isnan(obj):
        return None
    if isinstance(obj, dict):
        return {k: _drop_nan(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_drop_nan(v) for v in obj]
    return obj


def _slugify(text: str) -> str:
    out = []
    for ch in text:
        if ch.isalnum():
            out.append(ch.lower())
        elif out and out[-1] != "_":
            out.append("_")
    return "".join(out).strip("_")


def _response_variance(records: list[RunRecord], response: str) -> float:
    values = np.array([getattr(r, response) for r in records], dtype=float)
    return float(values.var())


def build_report_bundle(
    records: list[RunRecord],
    alpha: float = 0.05,
    config_hash: str = "",
) -> dict:
    """Run the full analysis pipeline over the records."""
    if len(records) < 3:
        raise AnalysisError(f"need at least 3 result rows to analyze, got {len(records)}")
    warnings: list[str] = []

    metric_rows = [
        MetricSet(acc1=r.acc1, avg_acc=r.avg_acc, forgetting=r.forgetting, accK=r.accK)
        for r in records
    ]
    corr = metric_correlations(metric_rows)
    bundle: dict = {
        "version": _VERSION,
        "alpha": alpha,
        "config_hash": config_hash,
        "n_records": len(records),
        "correlations": {
            "labels": list(corr.labels),
            "values": corr.values.tolist(),
            "defined": corr.defined.tolist(),
        },
        "screening": {},
        "aic": {},
        "anova": [],
        "pairwise": [],
        "coefficients": None,
        "diagnostics": None,
        "warnings": warnings,
    }

    usable_responses = []
    for response in ("avg_acc", "forgetting"):
        if _response_variance(records, response) == 0.0:
            warnings.append(f"response {response!r} has zero variance; its models were skipped")
            continue
        usable_responses.append(response)
        bundle["screening"][response] = [
            {"variable": row.variable, "p_value": row.p_value, "r_squared": row.r_squared}
            for row in screen_variables(records, response, SCREENING_CANDIDATES, alpha)
        ]
        try:
            selection = select_model_aic(records, response, AIC_LADDERS[response])
            bundle["aic"][response] = {
                "best": str(selection.best),
                "candidates": [
                    {
                        "formula": c.formula,
                        "aic": c.aic,
                        "n_params": c.n_params,
                        "error": c.error,
                    }
                    for c in selection.candidates
                ],
            }
        except DesignError as exc:
            warnings.append(f"AIC selection for {response!r} failed: {exc}")

    for model in ANOVA_MODELS:
        response = parse_formula(model).response
        if response not in usable_responses:
            continue
        try:
            bundle["anova"].append(_anova_to_dict(anova_partial_eta2(records, model)))
        except DesignError as exc:
            warnings.append(f"ANOVA for {model!r} skipped: {exc}")

    _add_pairwise_sections(bundle, records, alpha, usable_responses)
    _add_diagnostics(bundle, records, usable_responses, warnings)
    return _drop_nan(bundle)


def _add_pairwise(bundle: dict, records, formula: str, alpha: float, title: str) -> None:
    try:
        pw = pairwise_comparison(records, formula, alpha=alpha, variable="train")
    except (DesignError, RankDeficientError) as exc:
        bundle["warnings"].append(f"pairwise {title!r} skipped: {exc}")
        return
    bundle["pairwise"].append(_pairwise_to_dict(pw, title, _slugify(title)))


def _add_pairwise_sections(bundle, records, alpha, usable_responses) -> None:
    if "avg_acc" in usable_responses:
        _add_pairwise(bundle, records, "avg_acc ~ incr + train + data", alpha, "accuracy overall")
        for lvl in sorted({r.data for r in records}):
            _add_pairwise(
                bundle,
                [r for r in records if r.data == lvl],
                "avg_acc ~ incr + train",
                alpha,
                f"accuracy on dataset {lvl}",
            )
        for lvl in sorted({r.incr for r in records}):
            _add_pairwise(
                bundle,
                [r for r in records if r.incr == lvl],
                "avg_acc ~ train + data",
                alpha,
                f"accuracy with method {lvl}",
            )
        # scenario flag encodes the initial-class share (equal vs half split)
        for lvl in sorted({r.scenario_b for r in records}):
            _add_pairwise(
                bundle,
                [r for r in records if r.scenario_b == lvl],
                "avg_acc ~ incr + train + data",
                alpha,
                f"accuracy with initial-class share {'50%' if lvl else 'equal'}",
            )
    if "forgetting" in usable_responses:
        _add_pairwise(
            bundle, records, "forgetting ~ incr + train + data", alpha, "forgetting overall"
        )


def _add_diagnostics(bundle, records, usable_responses, warnings) -> None:
    if "avg_acc" not in usable_responses:
        return
    model = bundle.get("aic", {}).get("avg_acc", {}).get("best", "avg_acc ~ incr + train + data")
    try:
        design = encode_design(records, model)
        fit = ols_fit(design)
    except (DesignError, RankDeficientError) as exc:
        warnings.append(f"diagnostics for {model!r} skipped: {exc}")
        return
    bundle["coefficients"] = {"formula": model, "rows": _coef_rows(fit)}
    diag = diagnostics(fit)
    gram = gram_min_eigenvalue(design)
    bundle["diagnostics"] = {
        "formula": model,
        "r_squared": fit.r_squared,
        "aic": fit.aic,
        "qq_theoretical": diag.qq_theoretical.tolist(),
        "qq_residuals": diag.qq_residuals.tolist(),
        "fitted": diag.fitted.tolist(),
        "sqrt_abs_std_residuals": diag.sqrt_abs_std_residuals.tolist(),
        "leverage": diag.leverage.tolist(),
        "std_residuals": diag.std_residuals.tolist(),
        "gram": {
            "min_eigenvalue": gram.min_eigenvalue,
            "max_eigenvalue": gram.max_eigenvalue,
            "threshold": gram.threshold,
            "collinear": gram.collinear,
        },
    }


def _coef_rows(fit) -> list[dict]:
    return [
        {
            "coefficient": label,
            "estimate": float(fit.beta[i]),
            "se": float(fit.se[i]),
            "t_stat": float(fit.t_stats[i]),
            "p_value": float(fit.p_values[i]),
        }
        for i, label in enumerate(fit.column_labels)
    ]


def coefficient_summary(records: list[RunRecord], formula: str) -> list[dict]:
    """Per-coefficient table (estimate, se, t, p) for one model."""
    return _coef_rows(ols_fit(encode_design(records, formula)))

