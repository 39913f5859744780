"""Stopping-step selection and p-value filtering for boosting paths."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boosting import BoostPath
from .design import TimeSeriesMatrix, build_lagged_design, regroup_by_variable
from .exceptions import DataError, NumericalError
from .inference import StepInference


@dataclass(frozen=True)
class SelectionResult:
    """A chosen stopping step with its per-step criterion values.

    ``phi`` is the coefficient stack at the chosen step (p-value filtered
    for the filtered estimators); ``model_size`` counts its nonzeros.
    """

    chosen_k: int
    criterion: np.ndarray
    phi: np.ndarray
    model_size: int


def _result(chosen_k: int, criterion: np.ndarray, phi: np.ndarray) -> SelectionResult:
    return SelectionResult(chosen_k=chosen_k, criterion=criterion, phi=phi,
                           model_size=int(np.count_nonzero(phi)))


def aicc_values(sse: np.ndarray, df: np.ndarray, n_rows: int, d: int) -> np.ndarray:
    """Corrected-AIC values for per-step SSE/df sequences.

    Pools the residual variance across the d equations and charges ``df``
    (the trace of the accumulated hat matrix) as effective degrees of
    freedom; reduces to the classical corrected AIC when d = 1. Steps with
    df >= n_rows - 2 get +inf.
    """
    sse = np.asarray(sse, dtype=float)
    df = np.asarray(df, dtype=float)
    admissible = df < n_rows - 2
    n = n_rows * d
    values = np.full(sse.shape, np.inf)
    with np.errstate(divide="ignore"):
        values[admissible] = (
            n * np.log(sse[admissible] / n)
            + n * (n_rows + df[admissible]) / (n_rows - df[admissible] - 2)
        )
    return values


def aicc(path: BoostPath, n_rows: int | None = None, d: int | None = None) -> SelectionResult:
    """Corrected-AIC stopping rule over the path. Ties pick the earliest step."""
    n_rows = path.n_rows if n_rows is None else int(n_rows)
    d = path.d if d is None else int(d)
    values = aicc_values(path.sse_path(), path.df_path(), n_rows, d)
    if not (values < np.inf).any():
        raise NumericalError("criterion undefined: no step has df < T' - 2")
    chosen = int(np.argmin(values)) + 1
    return _result(chosen, values, path.coefficients_at(chosen))


def _validation_design(path: BoostPath, val) -> tuple[np.ndarray, np.ndarray]:
    """Lagged design/response for the held-out block, in the path's coordinates."""
    values = val.values if isinstance(val, TimeSeriesMatrix) else np.asarray(val, dtype=float)
    if path.variant == "cross":
        raise DataError("validation selection applies to time-series paths")
    if path.means is not None:
        values = values - path.means
    try:
        lagged = build_lagged_design(values, path.p, demean=False)
    except DataError as exc:
        raise DataError(f"validation segment too short: {exc}") from exc
    grouped = regroup_by_variable(lagged)
    return grouped.design, lagged.response


def _mspe(err: np.ndarray) -> float:
    return float(np.einsum("ti,ti->", err, err)) / (err.shape[0] * err.shape[1])


def select_by_validation(path: BoostPath, val) -> SelectionResult:
    """Pick the step minimizing one-step-ahead MSPE on a held-out block.

    The held-out block is lagged at the path's order and, when the path was
    fit on demeaned data, centered by the training means. Ties pick the
    earliest step.
    """
    x_val, y_val = _validation_design(path, val)
    fitted = np.zeros_like(y_val)
    mspe = np.empty(path.n_steps)
    for i, record in enumerate(path.records):
        fitted += x_val[:, path.columns[record.block]] @ record.increment
        mspe[i] = _mspe(y_val - fitted)
    chosen = int(np.argmin(mspe)) + 1
    return _result(chosen, mspe, path.coefficients_at(chosen))


def filter_by_pvalue(table: StepInference, phi: np.ndarray, alpha: float = 0.05,
                     bonferroni: bool = False) -> np.ndarray:
    """Zero out coefficients whose p-value is at or above the cutoff.

    Every nonzero of ``phi`` must have an inference row. With
    ``bonferroni`` the cutoff is divided by the number of nonzeros at this
    step (off by default).
    """
    phi = np.asarray(phi, dtype=float)
    nonzero = phi != 0.0
    pmat = table.pvalue_matrix(phi.shape[0], phi.shape[1])
    uncovered = nonzero & np.isnan(pmat)
    if uncovered.any():
        r, c = np.argwhere(uncovered)[0]
        raise DataError(f"incomplete inference: no p-value for nonzero "
                        f"coefficient at row {r}, equation {c}")
    cutoff = alpha / max(1, int(nonzero.sum())) if bonferroni else alpha
    out = phi.copy()
    out[nonzero & (pmat >= cutoff)] = 0.0
    return out


def select_p_variant(path: BoostPath, val, alpha: float = 0.05,
                     bonferroni: bool = False) -> SelectionResult:
    """Filter-then-validate: p-value filter each step, pick the best on MSPE.

    The filter runs before the held-out comparison, so the selection step
    does not contaminate the p-values. Requires a path run with inference.
    """
    if path.records and path.records[0].inference is None:
        raise DataError("path was run without inference; p-value filtering needs it")
    x_val, y_val = _validation_design(path, val)
    mspe = np.empty(path.n_steps)
    for k, phi in path.iter_coefficients():
        filtered = filter_by_pvalue(path.records[k - 1].inference, phi, alpha,
                                    bonferroni=bonferroni)
        mspe[k - 1] = _mspe(y_val - x_val @ filtered)
    chosen = int(np.argmin(mspe)) + 1
    phi = filter_by_pvalue(path.records[chosen - 1].inference,
                           path.coefficients_at(chosen), alpha,
                           bonferroni=bonferroni)
    return _result(chosen, mspe, phi)
