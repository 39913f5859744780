"""Per-step standard errors, t statistics and p-values for boosting paths.

Every boosting step applies a linear map to the response, so the current
coefficients can be written as ``coef_map @ Y`` and the current residual as
``residual_op @ Y``. Maintaining those maps along the path gives the exact
finite-sample covariance structure of each coefficient block: the variance
of entry (lag s, equation i) is ``sigma2_i * [A A'][s, s]`` where ``A`` is
the block's cumulative map. Two-sided p-values follow from the asymptotic
normality of the estimates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .exceptions import DataError

SQRT2 = float(np.sqrt(2.0))


def update_annihilator(m: np.ndarray, x_sel: np.ndarray, a_sel: np.ndarray,
                       nu: float) -> np.ndarray:
    """Left-multiply the residual operator by (I - nu * H) for the selected block.

    Realized as the low-rank update ``m - nu * x_sel @ (a_sel @ m)`` which
    costs O(p * T'^2) instead of a full T' x T' product. Requires
    ``a_sel @ x_sel == I`` (a_sel is the cached pseudo-inverse of x_sel).
    """
    return m - nu * (x_sel @ (a_sel @ m))


def accumulate_map(tilde_a: np.ndarray | None, a_sel: np.ndarray,
                   m_prev: np.ndarray, nu: float) -> np.ndarray:
    """Extend a block's cumulative coefficient map after it is selected.

    ``m_prev`` must be the residual operator from *before* this step.
    Absent maps (block never selected) start from zero.
    """
    increment = nu * (a_sel @ m_prev)
    return increment if tilde_a is None else tilde_a + increment


@dataclass(frozen=True)
class SigmaEstimate:
    """Per-equation residual variances at one step, with the denominator used."""

    sigma2: np.ndarray  # (d,)
    denominator: float


def estimate_sigma(residual: np.ndarray, df: float, n_rows: int) -> SigmaEstimate:
    """Residual variance per equation with degrees-of-freedom correction.

    The denominator is ``max(n_rows - df, 1)`` where ``df`` is the trace of
    the hat matrix accumulated so far; with this choice the estimate agrees
    with the classical least-squares variance once the path has converged.
    """
    residual = np.asarray(residual, dtype=float)
    denom = max(float(n_rows) - float(df), 1.0)
    sigma2 = np.einsum("ti,ti->i", residual, residual) / denom
    return SigmaEstimate(sigma2=sigma2, denominator=denom)


def standard_errors(tilde_a: np.ndarray, sigma: SigmaEstimate) -> np.ndarray:
    """Standard errors for one block, shaped (block rows, equations).

    Only the diagonal of the map's Gram matrix enters, so the cost is one
    row-sum of squares per block row.
    """
    if tilde_a is None:
        raise DataError("variable not yet selected: no cumulative map")
    gram_diag = np.einsum("st,st->s", tilde_a, tilde_a)
    return np.sqrt(np.outer(gram_diag, sigma.sigma2))


def p_value(t):
    """Two-sided normal p-value 2 * (1 - Phi(|t|)); vectorized.

    Monotone decreasing in |t| and symmetric; underflows to exactly 0.0 for
    |t| beyond roughly 39.
    """
    t = np.asarray(t, dtype=float)
    if np.any(np.isnan(t)):
        raise DataError("t-statistic is NaN")
    p = erfc(np.abs(t) / SQRT2)
    return float(p) if p.ndim == 0 else p


class InferenceAccumulator:
    """Linear maps from the response to residuals and coefficients.

    Owned by a single path run and mutated sequentially; snapshots exported
    per step are plain arrays and safe to share. ``residual_op`` is the
    T' x T' operator sending Y to the current residual; ``coef_maps[b]``
    sends Y to the coefficient rows of block b.
    """

    def __init__(self, n_rows: int, nu: float, block_rows: list[np.ndarray],
                 labels: list[tuple[int, ...]]):
        self.n_rows = int(n_rows)
        self.nu = float(nu)
        self.block_rows = block_rows
        self.labels = labels
        self.residual_op = np.eye(self.n_rows)
        self.coef_maps: dict[int, np.ndarray] = {}
        self.df = 0.0
        self.step = 0

    def advance(self, block: int, x_sel: np.ndarray, a_sel: np.ndarray) -> None:
        """Fold one boosting step (selected block) into the maps."""
        g = a_sel @ self.residual_op
        prev = self.coef_maps.get(block)
        self.coef_maps[block] = self.nu * g if prev is None else prev + self.nu * g
        self.residual_op -= self.nu * (x_sel @ g)
        self.df = self.n_rows - float(np.trace(self.residual_op))
        self.step += 1

    def sigma(self, residual: np.ndarray) -> SigmaEstimate:
        return estimate_sigma(residual, self.df, self.n_rows)


@dataclass(frozen=True)
class StepInference:
    """Estimate, s.e., t and p-value for every estimated coefficient at one step.

    Columnar layout: entry m refers to the coefficient in grouped-stack row
    ``row[m]`` and equation ``equation[m]``; ``variable``/``lag`` carry the
    same position in (variable, lag) terms. Coefficients whose block was
    never selected carry no entry.
    """

    step: int
    row: np.ndarray
    variable: np.ndarray
    lag: np.ndarray
    equation: np.ndarray
    estimate: np.ndarray
    se: np.ndarray
    tstat: np.ndarray
    pvalue: np.ndarray

    def __len__(self) -> int:
        return self.row.shape[0]

    def pvalue_matrix(self, n_rows: int, d: int) -> np.ndarray:
        """Dense (n_rows x d) p-value matrix, NaN where no estimate exists."""
        out = np.full((n_rows, d), np.nan)
        out[self.row, self.equation] = self.pvalue
        return out

    def se_matrix(self, n_rows: int, d: int) -> np.ndarray:
        out = np.full((n_rows, d), np.nan)
        out[self.row, self.equation] = self.se
        return out


def step_inference(state, accumulator: InferenceAccumulator,
                   sigma: SigmaEstimate) -> StepInference:
    """Assemble the inference table for the current state of a path run."""
    if getattr(state, "step", None) != accumulator.step:
        raise DataError(
            f"inference out of sync: state at step {getattr(state, 'step', None)}, "
            f"maps at step {accumulator.step}"
        )
    phi = state.phi
    d = phi.shape[1]
    rows, variables, lags, equations = [], [], [], []
    estimates, ses = [], []
    for block in sorted(accumulator.coef_maps):
        block_rows = accumulator.block_rows[block]
        label = accumulator.labels[block]
        se_block = standard_errors(accumulator.coef_maps[block], sigma)
        est_block = phi[block_rows]
        n_b = block_rows.shape[0]
        var_j = label[0]
        lag_s = np.asarray(label[1:] or range(1, n_b + 1), dtype=int)
        rows.append(np.repeat(block_rows, d))
        variables.append(np.full(n_b * d, var_j, dtype=int))
        lags.append(np.repeat(lag_s, d))
        equations.append(np.tile(np.arange(d), n_b))
        estimates.append(est_block.ravel())
        ses.append(se_block.ravel())
    if rows:
        row = np.concatenate(rows)
        variable = np.concatenate(variables)
        lag = np.concatenate(lags)
        equation = np.concatenate(equations)
        estimate = np.concatenate(estimates)
        se = np.concatenate(ses)
    else:
        row = variable = lag = equation = np.empty(0, dtype=int)
        estimate = se = np.empty(0)
    tstat = np.zeros_like(estimate)
    positive = se > 0
    tstat[positive] = estimate[positive] / se[positive]
    exact = ~positive & (estimate != 0.0)
    tstat[exact] = np.sign(estimate[exact]) * np.inf
    return StepInference(step=accumulator.step, row=row, variable=variable,
                         lag=lag, equation=equation, estimate=estimate, se=se,
                         tstat=tstat, pvalue=np.atleast_1d(p_value(tstat)))
