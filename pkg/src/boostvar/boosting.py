"""Greedy least-squares boosting over grouped or single-column base learners.

Each step fits the current residual by the single best candidate block
(a variable with all its lags, one lag column, or one cross-section
regressor), adds a learning-rate-shrunk copy of that fit to the
coefficients, and subtracts it from the residual. The full solution path
is recorded; when inference is enabled the run also maintains the linear
maps needed for per-step standard errors.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Iterator, Literal

import numpy as np

from .design import (
    GroupedDesign,
    LaggedDesign,
    TimeSeriesMatrix,
    build_lagged_design,
    regroup_by_variable,
)
from .exceptions import DataError
from .inference import InferenceAccumulator, StepInference, step_inference
from .validation import as_float_matrix, check_learning_rate

# Blocks whose Gram matrix has condition number above this are treated as
# singular and skipped in selection.
CONDITION_LIMIT = 1e12

# Stop the path early once the residual SSE falls below this fraction of the
# initial SSE; later steps would be numerically meaningless.
RELATIVE_SSE_FLOOR = 1e-14

Variant = Literal["group", "lag", "cross"]


@dataclass(frozen=True)
class BoostConfig:
    """Settings for one boosting run.

    Ties in the selection objective are always broken toward the lowest
    block index (lexicographic in (variable, lag) for the single-lag
    variant); the algorithm contains no randomness.
    """

    variant: Variant = "group"
    nu: float = 0.1
    k_stop: int = 500
    compute_inference: bool = True

    def __post_init__(self):
        check_learning_rate(self.nu)
        if int(self.k_stop) != self.k_stop or self.k_stop < 1:
            raise DataError(f"k_stop must be a positive integer, got {self.k_stop!r}")
        if self.variant not in ("group", "lag", "cross"):
            raise DataError(f"unknown variant {self.variant!r}")


@dataclass(frozen=True)
class BoostState:
    """Coefficients, residual and selection history after ``step`` steps."""

    phi: np.ndarray  # (n_cols, d) coefficient stack in grouped order
    residual: np.ndarray  # (T', d)
    step: int
    history: tuple[tuple[int, ...], ...] = ()


@dataclass(frozen=True)
class PathRecord:
    """One step of a boosting path.

    ``increment`` is the shrunk update added to the coefficient rows of the
    selected block; ``df`` (trace of the accumulated hat matrix) and
    ``inference`` are filled only when the run maintains inference maps.
    """

    step: int
    block: int
    label: tuple[int, ...]
    increment: np.ndarray
    sse: float
    df: float | None
    inference: StepInference | None


class _Engine:
    """Prepared base learners for a fixed design: cached Gram inverses."""

    def __init__(self, design: np.ndarray, columns: list[np.ndarray],
                 labels: list[tuple[int, ...]]):
        self.design = design
        self.columns = columns
        self.labels = labels
        n = len(columns)
        self.x: list[np.ndarray] = []
        self.a: list[np.ndarray | None] = []
        self.gram: list[np.ndarray | None] = []
        self.valid = np.zeros(n, dtype=bool)
        self.singleton = all(c.shape[0] == 1 for c in columns)
        for b, cols in enumerate(columns):
            xb = design[:, cols]
            gram = xb.T @ xb
            cond = np.linalg.cond(gram) if gram.any() else np.inf
            if not np.isfinite(cond) or cond > CONDITION_LIMIT:
                warnings.warn(
                    f"block {labels[b]} has a numerically singular Gram matrix; "
                    "skipped in selection",
                    stacklevel=3,
                )
                self.x.append(xb)
                self.a.append(None)
                self.gram.append(None)
                continue
            self.x.append(xb)
            self.a.append(np.linalg.solve(gram, xb.T))
            self.gram.append(gram)
            self.valid[b] = True
        if not self.valid.any():
            raise DataError("degenerate design: every candidate block is singular")
        if self.singleton:
            self._colnorm2 = np.array(
                [g[0, 0] if g is not None else np.inf for g in self.gram]
            )

    def select(self, residual: np.ndarray) -> tuple[int, np.ndarray]:
        """Pick the block whose least-squares fit removes the most SSE.

        Returns the block index and the unshrunk fit (block rows x d).
        The objective compares the fitted sum of squares, which orders
        candidates identically to comparing residual SSEs.
        """
        if self.singleton:
            cross = self.design.T @ residual  # (n_cols, d)
            gains = np.einsum("cd,cd->c", cross, cross) / self._colnorm2
            gains[~self.valid] = -np.inf
            b = int(np.argmax(gains))
            return b, cross[[b]] / self._colnorm2[b]
        best, best_gain, best_beta = -1, -np.inf, None
        for b in range(len(self.columns)):
            if not self.valid[b]:
                continue
            beta = self.a[b] @ residual  # (p_b, d)
            gain = float(np.einsum("sd,sd->", beta, self.gram[b] @ beta))
            if gain > best_gain:
                best, best_gain, best_beta = b, gain, beta
        return best, best_beta


@dataclass
class BoostPath:
    """A full boosting run: per-step records plus the data they were fit on.

    Treat as immutable after the run. ``response``/``design`` are kept so
    model selection and bound checks can replay the path without refitting.
    """

    records: list[PathRecord]
    final: BoostState
    config: BoostConfig
    variant: Variant
    p: int
    d: int
    response: np.ndarray
    design: np.ndarray
    columns: list[np.ndarray]
    labels: list[tuple[int, ...]]
    means: np.ndarray | None = None
    names: tuple[str, ...] | None = None
    response_names: tuple[str, ...] | None = None
    initial_sse: float = 0.0

    @property
    def n_steps(self) -> int:
        return len(self.records)

    @property
    def n_rows(self) -> int:
        return self.response.shape[0]

    @property
    def n_coef_rows(self) -> int:
        return self.design.shape[1]

    def sse_path(self) -> np.ndarray:
        return np.array([r.sse for r in self.records])

    def df_path(self) -> np.ndarray:
        if self.records and self.records[0].df is None:
            raise DataError("path lacks degrees of freedom; rerun with inference enabled")
        return np.array([r.df for r in self.records])

    def iter_coefficients(self) -> Iterator[tuple[int, np.ndarray]]:
        """Yield (step, coefficient stack) cumulatively.

        The same buffer is yielded every time; copy it if it must outlive
        the iteration.
        """
        phi = np.zeros((self.n_coef_rows, self.response.shape[1]))
        for record in self.records:
            phi[self.columns[record.block]] += record.increment
            yield record.step, phi

    def coefficients_at(self, k: int) -> np.ndarray:
        """Coefficient stack after step k (k=0 gives the zero stack)."""
        if not 0 <= k <= self.n_steps:
            raise DataError(f"step {k} outside path of length {self.n_steps}")
        phi = np.zeros((self.n_coef_rows, self.response.shape[1]))
        for record in self.records[:k]:
            phi[self.columns[record.block]] += record.increment
        return phi

    def inference_at(self, k: int) -> StepInference:
        if not 1 <= k <= self.n_steps:
            raise DataError(f"step {k} outside path of length {self.n_steps}")
        table = self.records[k - 1].inference
        if table is None:
            raise DataError("path was run without inference")
        return table

    def pvalues_at(self, k: int) -> np.ndarray:
        """(n_coef_rows x d) p-value matrix at step k, NaN where unestimated."""
        return self.inference_at(k).pvalue_matrix(self.n_coef_rows, self.response.shape[1])


def _lag_blocks(p: int, d: int, variant: Variant):
    if variant == "group":
        columns = [np.arange(j * p, (j + 1) * p) for j in range(d)]
        labels = [(j,) for j in range(d)]
    else:
        columns = [np.array([c]) for c in range(p * d)]
        labels = [(c // p, c % p + 1) for c in range(p * d)]
    return columns, labels


def _run_blocks(response: np.ndarray, design: np.ndarray,
                columns: list[np.ndarray], labels: list[tuple[int, ...]],
                config: BoostConfig, *, variant: Variant, p: int, d: int,
                means=None, names=None) -> BoostPath:
    engine = _Engine(design, columns, labels)
    nu = config.nu
    phi = np.zeros((design.shape[1], response.shape[1]))
    residual = response.copy()
    initial_sse = float(np.einsum("ti,ti->", residual, residual))
    accumulator = None
    if config.compute_inference:
        accumulator = InferenceAccumulator(response.shape[0], nu, columns, labels)
    records: list[PathRecord] = []
    history: list[tuple[int, ...]] = []
    for k in range(1, config.k_stop + 1):
        block, beta = engine.select(residual)
        if accumulator is not None:
            accumulator.advance(block, engine.x[block], engine.a[block])
        increment = nu * beta
        phi[columns[block]] += increment
        residual -= engine.x[block] @ increment
        sse = float(np.einsum("ti,ti->", residual, residual))
        history.append(labels[block])
        df = None
        table = None
        if accumulator is not None:
            df = accumulator.df
            state = BoostState(phi=phi, residual=residual, step=k)
            table = step_inference(state, accumulator, accumulator.sigma(residual))
        records.append(PathRecord(step=k, block=block, label=labels[block],
                                  increment=increment, sse=sse, df=df,
                                  inference=table))
        if sse <= RELATIVE_SSE_FLOOR * initial_sse:
            break
    final = BoostState(phi=phi.copy(), residual=residual.copy(),
                       step=len(records), history=tuple(history))
    return BoostPath(records=records, final=final, config=config, variant=variant,
                     p=p, d=d, response=response, design=design, columns=columns,
                     labels=labels, means=means, names=names, initial_sse=initial_sse)


def run_path(y, p: int, config: BoostConfig, demean: bool = False) -> BoostPath:
    """Run a full boosting path on a raw panel.

    Parameters
    ----------
    y : array_like or TimeSeriesMatrix
        T x d panel of observations.
    p : int
        Lag order.
    config : BoostConfig
        Variant ("group" selects a variable with all its lags, "lag" a
        single lag column), learning rate, step budget, inference switch.
    demean : bool
        Center columns before building the design. Use for data carrying
        an intercept; the means are stored on the returned path.

    Returns
    -------
    BoostPath
        Deterministic given identical inputs.
    """
    if config.variant not in ("group", "lag"):
        raise DataError("run_path supports the 'group' and 'lag' variants; "
                        "use boost_ls_cross_section for cross-section data")
    names = y.names if isinstance(y, TimeSeriesMatrix) else None
    lagged = build_lagged_design(y, p, demean=demean)
    grouped = regroup_by_variable(lagged)
    columns, labels = _lag_blocks(lagged.p, lagged.d, config.variant)
    path = _run_blocks(np.ascontiguousarray(lagged.response), grouped.design,
                       columns, labels, config, variant=config.variant,
                       p=lagged.p, d=lagged.d, means=lagged.means, names=names)
    path.response_names = names
    return path


def run_path_on_design(response, design, p: int, d: int,
                       config: BoostConfig, means=None, names=None) -> BoostPath:
    """Run a path on a prebuilt grouped design (columns grouped by variable).

    Used when the caller has transformed the design (e.g. group
    normalization) and the path must be fit in those coordinates.
    """
    if config.variant not in ("group", "lag"):
        raise DataError("run_path_on_design supports 'group' and 'lag' variants")
    response = as_float_matrix(response, "response")
    design = as_float_matrix(design, "design")
    if design.shape[1] != p * d:
        raise DataError(f"design has {design.shape[1]} columns, expected p*d = {p * d}")
    columns, labels = _lag_blocks(p, d, config.variant)
    return _run_blocks(response.copy(), design, columns, labels, config,
                       variant=config.variant, p=p, d=d, means=means, names=names)


def boost_ls_cross_section(design, response, config: BoostConfig) -> BoostPath:
    """Componentwise least-squares boosting for a single-response regression.

    Runs the single-column machinery with a one-column response, so the
    whole path/inference/selection stack applies unchanged. Columns are
    used as given; standardize beforehand if desired. All-zero columns are
    skipped in selection.
    """
    design = as_float_matrix(design, "design")
    response = as_float_matrix(response, "response")
    if response.shape[1] != 1:
        raise DataError(f"response must be a single column, got shape {response.shape}")
    if design.shape[0] != response.shape[0]:
        raise DataError("design and response row counts differ")
    config = replace(config, variant="cross")
    columns = [np.array([c]) for c in range(design.shape[1])]
    labels = [(c,) for c in range(design.shape[1])]
    return _run_blocks(response.copy(), design, columns, labels, config,
                       variant="cross", p=1, d=1)


def initial_state(response: np.ndarray, n_coef_rows: int) -> BoostState:
    """Zero-coefficient state whose residual is the response itself."""
    response = as_float_matrix(response, "response")
    return BoostState(phi=np.zeros((n_coef_rows, response.shape[1])),
                      residual=response.copy(), step=0)


def boost_step(state: BoostState, design_like, config: BoostConfig) -> BoostState:
    """Advance a boosting state by one step.

    ``design_like`` is a GroupedDesign for the group variant or a
    LaggedDesign for the single-lag variant. Unselected coefficient rows
    are untouched; the residual is decremented by the shrunk fit.
    """
    if isinstance(design_like, LaggedDesign):
        grouped = regroup_by_variable(design_like)
    elif isinstance(design_like, GroupedDesign):
        grouped = design_like
    else:
        raise DataError("expected a LaggedDesign or GroupedDesign")
    variant = "group" if config.variant == "group" else "lag"
    columns, labels = _lag_blocks(grouped.p, grouped.d, variant)
    engine = _Engine(grouped.design, columns, labels)
    block, beta = engine.select(state.residual)
    increment = config.nu * beta
    phi = state.phi.copy()
    phi[columns[block]] += increment
    residual = state.residual - engine.x[block] @ increment
    return BoostState(phi=phi, residual=residual, step=state.step + 1,
                      history=state.history + (labels[block],))


def select_group(residual, grouped: GroupedDesign) -> tuple[int, np.ndarray]:
    """Best variable group for the current residual.

    Returns the 0-based variable index and its unshrunk least-squares fit
    (p x d). Ties go to the lowest index; singular groups are skipped with
    a warning.
    """
    residual = as_float_matrix(residual, "residual")
    columns, labels = _lag_blocks(grouped.p, grouped.d, "group")
    engine = _Engine(grouped.design, columns, labels)
    block, beta = engine.select(residual)
    return labels[block][0], beta


def select_single_lag(residual, lagged: LaggedDesign) -> tuple[int, int, np.ndarray]:
    """Best single (variable, lag) column for the current residual.

    Returns the 0-based variable index, the 1-based lag, and the unshrunk
    fit (length-d row). Ties break lexicographically on (variable, lag).
    """
    residual = as_float_matrix(residual, "residual")
    grouped = regroup_by_variable(lagged)
    columns, labels = _lag_blocks(grouped.p, grouped.d, "lag")
    engine = _Engine(grouped.design, columns, labels)
    block, beta = engine.select(residual)
    j, s = labels[block]
    return j, s, beta[0]
