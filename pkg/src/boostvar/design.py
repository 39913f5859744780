"""Lagged and grouped regression designs for vector autoregressions.

The estimation problem for a VAR(p) panel with T rows and d variables is
cast as a multivariate regression: the response holds rows p..T-1 and the
design holds the stacked lags. Columns can be kept in lag-major order
(all variables at lag 1, then lag 2, ...) or regrouped by variable so
that all p lags of one variable sit in a contiguous block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DataError, NumericalError
from .validation import as_float_matrix, check_lag_order, check_square


@dataclass(frozen=True)
class TimeSeriesMatrix:
    """A T x d panel of observations (rows = time, columns = variables)."""

    values: np.ndarray
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        arr = as_float_matrix(self.values, "time series")
        object.__setattr__(self, "values", arr)
        if self.names is not None:
            names = tuple(str(n) for n in self.names)
            if len(names) != arr.shape[1]:
                raise DataError(
                    f"got {len(names)} names for {arr.shape[1]} columns"
                )
            object.__setattr__(self, "names", names)

    @property
    def n_obs(self) -> int:
        return self.values.shape[0]

    @property
    def n_vars(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class LaggedDesign:
    """Response/design pair in lag-major column order.

    Row t of ``design`` is the concatenation (y_{t-1}', ..., y_{t-p}') of
    the lags aligned with row t of ``response``. When the source panel was
    demeaned, ``means`` records the subtracted column means so intercepts
    can be restored later.
    """

    response: np.ndarray  # (T - p, d)
    design: np.ndarray  # (T - p, p*d)
    p: int
    d: int
    means: np.ndarray | None = None

    @property
    def n_rows(self) -> int:
        return self.response.shape[0]


@dataclass(frozen=True)
class GroupedDesign:
    """Design with columns regrouped by variable.

    Group j occupies columns ``j*p:(j+1)*p`` in lag-ascending order.
    ``permutation`` maps grouped column g to its lag-major position, so
    ``design[:, g] == lagged.design[:, permutation[g]]``.
    """

    design: np.ndarray  # (T - p, p*d)
    p: int
    d: int
    permutation: np.ndarray

    @property
    def n_rows(self) -> int:
        return self.design.shape[0]

    def group_columns(self, j: int) -> slice:
        return slice(j * self.p, (j + 1) * self.p)

    @property
    def group_index(self) -> dict[int, np.ndarray]:
        """Map variable j to its p contiguous column indices."""
        return {j: np.arange(j * self.p, (j + 1) * self.p) for j in range(self.d)}


@dataclass(frozen=True)
class LeastSquaresFit:
    """Least-squares solution with rank diagnostics.

    ``coefficients`` is the minimum-norm solution when the design is
    rank deficient, in which case ``unique`` is False.
    """

    coefficients: np.ndarray  # (n_cols, d)
    rank: int
    unique: bool


def build_lagged_design(y, p: int, demean: bool = False) -> LaggedDesign:
    """Build the lagged regression design of order p from a raw panel.

    Parameters
    ----------
    y : array_like or TimeSeriesMatrix
        T x d panel, oldest row first.
    p : int
        Lag order, >= 1. Requires T > p.
    demean : bool
        Center each column by its sample mean before lagging. Default off;
        turn on for data generated with an intercept.

    Returns
    -------
    LaggedDesign
    """
    values = y.values if isinstance(y, TimeSeriesMatrix) else as_float_matrix(y, "y")
    p = check_lag_order(p)
    t, d = values.shape
    if t <= p:
        raise DataError(f"insufficient observations: T={t} <= p={p}")
    means = None
    if demean:
        means = values.mean(axis=0)
        values = values - means
    response = values[p:]
    design = np.concatenate([values[p - s : t - s] for s in range(1, p + 1)], axis=1)
    return LaggedDesign(response=response, design=np.ascontiguousarray(design),
                        p=p, d=d, means=means)


def grouped_permutation(p: int, d: int) -> np.ndarray:
    """Column permutation from lag-major order to by-variable groups."""
    perm = np.empty(p * d, dtype=int)
    for j in range(d):
        for s in range(p):
            perm[j * p + s] = s * d + j
    return perm


def regroup_by_variable(x: LaggedDesign) -> GroupedDesign:
    """Permute lag-major columns so each variable's p lags are contiguous."""
    perm = grouped_permutation(x.p, x.d)
    return GroupedDesign(design=np.ascontiguousarray(x.design[:, perm]),
                         p=x.p, d=x.d, permutation=perm)


def companion(phis: list[np.ndarray]) -> np.ndarray:
    """Stack VAR(p) coefficient matrices into the (pd) x (pd) companion form.

    The coefficient blocks fill the first block row and identity blocks sit
    on the block subdiagonal; for p=1 the companion is the coefficient
    matrix itself.
    """
    if not phis:
        raise DataError("need at least one coefficient matrix")
    blocks = [check_square(phi, f"phi_{i + 1}") for i, phi in enumerate(phis)]
    d = blocks[0].shape[0]
    for i, b in enumerate(blocks):
        if b.shape != (d, d):
            raise DataError(f"shape mismatch: phi_{i + 1} is {b.shape}, expected ({d}, {d})")
    p = len(blocks)
    if p == 1:
        return blocks[0].copy()
    f = np.zeros((p * d, p * d))
    f[:d] = np.concatenate(blocks, axis=1)
    f[d:, : (p - 1) * d] = np.eye((p - 1) * d)
    return f


def spectral_radius(f: np.ndarray) -> float:
    """Largest eigenvalue modulus of a square matrix."""
    f = check_square(f, "matrix")
    try:
        eigvals = np.linalg.eigvals(f)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"numerical failure in eigenvalue solver: {exc}") from exc
    return float(np.max(np.abs(eigvals))) if eigvals.size else 0.0


def least_squares_fit(design, response, rcond: float = 1e-10) -> LeastSquaresFit:
    """Solve the multivariate least-squares problem design @ phi = response.

    Rank-deficient designs are not an error: the minimum-norm solution is
    returned with ``unique=False``. Singular values below
    ``rcond * max_singular_value`` are treated as zero.
    """
    design = as_float_matrix(design, "design")
    response = as_float_matrix(response, "response")
    if design.shape[0] != response.shape[0]:
        raise DataError(
            f"design has {design.shape[0]} rows but response has {response.shape[0]}"
        )
    coef, _, rank, _ = np.linalg.lstsq(design, response, rcond=rcond)
    return LeastSquaresFit(coefficients=coef, rank=int(rank),
                           unique=bool(rank == design.shape[1]))


def grouped_to_lag_matrices(phi_g: np.ndarray, p: int, d: int) -> list[np.ndarray]:
    """Split a grouped (pd x d) coefficient stack into p d x d lag matrices.

    Entry [i, j] of lag matrix s is the effect of variable j at lag s on
    equation i, i.e. row j*p + (s-1), column i of the grouped stack.
    """
    phi_g = np.asarray(phi_g, dtype=float)
    if phi_g.shape != (p * d, d):
        raise DataError(f"coefficient stack must be {(p * d, d)}, got {phi_g.shape}")
    return [phi_g[np.arange(d) * p + (s - 1), :].T.copy() for s in range(1, p + 1)]


def lag_matrices_to_grouped(phis: list[np.ndarray]) -> np.ndarray:
    """Inverse of :func:`grouped_to_lag_matrices`."""
    p = len(phis)
    d = phis[0].shape[0]
    phi_g = np.zeros((p * d, d))
    for s, phi in enumerate(phis, start=1):
        phi = check_square(phi, f"phi_{s}")
        phi_g[np.arange(d) * p + (s - 1), :] = phi.T
    return phi_g


def support_set(phi_g: np.ndarray, p: int, d: int) -> set[tuple[int, int, int]]:
    """Exact-nonzero support as (lag s, equation i, variable j) triples, 1-based lag."""
    rows, cols = np.nonzero(np.asarray(phi_g))
    return {(int(r % p) + 1, int(c), int(r // p)) for r, c in zip(rows, cols)}
