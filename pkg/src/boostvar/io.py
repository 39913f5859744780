"""CSV panel ingestion, train/validation/test splitting, and report files.

Ingestion understands the common macro-panel layout: a header row of
variable names, an optional second row of integer transform codes, an
optional leading date column, and empty cells for missing observations.
Reports are written as CSV/JSON with floats at 17 significant digits so
re-parsing reproduces the in-memory values exactly.
"""

from __future__ import annotations

import csv
import json
import math
import re
from pathlib import Path

import numpy as np

from .boosting import BoostPath
from .design import TimeSeriesMatrix
from .exceptions import DataError
from .selection import SelectionResult

_DATE_NAMES = {"date", "sasdate"}
_TRANSFORM_LABEL = re.compile(r"^\s*transform:?\s*$", re.IGNORECASE)
_VALID_CODES = frozenset(range(1, 8))


def _fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return ""
    return format(x, ".17g")


def _parse_cell(cell: str, row_num: int, col_name: str) -> float:
    cell = cell.strip()
    if not cell:
        return math.nan
    try:
        return float(cell)
    except ValueError:
        raise DataError(
            f"parse error at row {row_num}, column {col_name}: {cell!r}"
        ) from None


def _all_codes(cells: list[str]) -> bool:
    if not cells:
        return False
    try:
        codes = [float(c) for c in cells]
    except ValueError:
        return False
    return all(c.is_integer() and int(c) in _VALID_CODES for c in codes)


def _apply_code(x: np.ndarray, code: int, name: str) -> np.ndarray:
    def diff(v):
        out = np.full_like(v, np.nan)
        out[1:] = v[1:] - v[:-1]
        return out

    def log(v):
        bad = np.isfinite(v) & (v <= 0)
        if bad.any():
            raise DataError(f"log transform on non-positive value in column {name}")
        return np.log(v)

    if code == 1:
        return x
    if code == 2:
        return diff(x)
    if code == 3:
        return diff(diff(x))
    if code == 4:
        return log(x)
    if code == 5:
        return diff(log(x))
    if code == 6:
        return diff(diff(log(x)))
    if code == 7:
        out = np.full_like(x, np.nan)
        with np.errstate(divide="ignore", invalid="ignore"):
            pct = x[1:] / x[:-1] - 1.0
        if np.isinf(pct).any():
            raise DataError(f"zero base in percent change in column {name}")
        out[1:] = pct
        return diff(out)
    raise DataError(f"unknown transform code {code} for column {name}")


def ingest(source, apply_transforms: bool = True
           ) -> tuple[TimeSeriesMatrix, list[str] | None]:
    """Read a CSV panel, optionally apply per-column transform codes.

    Parameters
    ----------
    source : path or open text file
        Header row of variable names; optional second row of integer codes
        (1 level, 2 diff, 3 double diff, 4 log, 5 diff log, 6 double diff
        log, 7 diff of percent change) marked by a leading "Transform:"
        cell; observation rows oldest first. A leading column named
        ``date``/``sasdate`` is kept out of the numerics.
    apply_transforms : bool
        Apply the code row when present. Codes are applied before rows
        with any missing value are dropped.

    Returns
    -------
    (TimeSeriesMatrix, dates)
        ``dates`` lists the surviving rows' date strings, or None when the
        file has no date column.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    else:
        rows = list(csv.reader(source))
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if len(rows) < 2:
        raise DataError("no usable rows: need a header and at least one observation")
    header = [c.strip() for c in rows[0]]
    has_date = bool(header) and header[0].lower() in _DATE_NAMES
    start = 1 if has_date else 0
    names = header[start:]
    if not names:
        raise DataError("no variable columns found")
    width = len(header)

    body = rows[1:]
    codes: list[int] | None = None
    first = body[0]
    if first and _TRANSFORM_LABEL.match(first[0]):
        code_cells = first[1:]
        if len(code_cells) != len(names) or not _all_codes(code_cells):
            raise DataError(f"transform row has {len(code_cells)} usable codes "
                            f"for {len(names)} columns")
        codes = [int(float(c)) for c in code_cells]
        body = body[1:]
    if not body:
        raise DataError("no usable rows after the header")

    first_line = 2 + (1 if codes is not None else 0)
    dates: list[str] = []
    data = np.empty((len(body), len(names)))
    for r, row in enumerate(body):
        if len(row) != width:
            raise DataError(
                f"row {r + first_line} has {len(row)} cells, expected {width}")
        if has_date:
            dates.append(row[0].strip())
        for c, cell in enumerate(row[start:]):
            data[r, c] = _parse_cell(cell, r + first_line, names[c])

    if apply_transforms and codes is not None:
        for c, code in enumerate(codes):
            data[:, c] = _apply_code(data[:, c], code, names[c])

    keep = ~np.isnan(data).any(axis=1)
    data = data[keep]
    if data.shape[0] == 0:
        raise DataError("no usable rows after removing missing observations")
    kept_dates = [d for d, k in zip(dates, keep) if k] if has_date else None
    return TimeSeriesMatrix(values=data, names=tuple(names)), kept_dates


def split(y: TimeSeriesMatrix, fractions=(0.5, 0.25, 0.25), p: int | None = None
          ) -> tuple[TimeSeriesMatrix, TimeSeriesMatrix, TimeSeriesMatrix]:
    """Partition a panel into contiguous train/validation/test segments.

    Row counts are the floor allocation of the fractions with the
    remainder assigned to training; concatenating the segments reproduces
    the input. When ``p`` is given, each segment must exceed it.
    """
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise DataError("need three positive split fractions")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise DataError(f"split fractions must sum to 1, got {sum(fractions)}")
    n = y.n_obs
    counts = [int(math.floor(f * n)) for f in fractions]
    counts[0] += n - sum(counts)
    minimum = (p if p is not None else 0) + 1
    if any(c < minimum for c in counts):
        raise DataError(f"segment too short: row counts {counts} with minimum {minimum}")
    edges = np.cumsum(counts)
    parts = (y.values[: edges[0]], y.values[edges[0] : edges[1]], y.values[edges[1] :])
    return tuple(TimeSeriesMatrix(values=part, names=y.names) for part in parts)


def _label(path: BoostPath, kind: str, index: int) -> str:
    names = path.response_names if kind == "eq" else path.names
    if names is not None and 0 <= index < len(names):
        return names[index]
    return str(index + 1)


def _jsonable(value):
    """Recursively convert numpy scalars/arrays and drop non-finite floats."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, (np.integer,)):
        return int(value)
    return value


def write_json(target: Path, payload) -> None:
    with open(target, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(payload), fh, indent=2, allow_nan=False)
        fh.write("\n")


def _coefficient_rows(path: BoostPath):
    if path.records and path.records[0].inference is not None:
        for record in path.records:
            table = record.inference
            for m in range(len(table)):
                if table.estimate[m] == 0.0:
                    continue
                yield (record.step, int(table.equation[m]), int(table.variable[m]),
                       int(table.lag[m]), table.estimate[m], table.se[m],
                       table.tstat[m], table.pvalue[m])
    else:
        p = path.p if path.variant != "cross" else 1
        for k, phi in path.iter_coefficients():
            for row, eq in zip(*np.nonzero(phi)):
                if path.variant == "cross":
                    var, lag = int(row), 1
                else:
                    var, lag = int(row // p), int(row % p) + 1
                yield (k, int(eq), var, lag, phi[row, eq], None, None, None)


def emit_reports(out_dir, path: BoostPath, selection: SelectionResult | None = None,
                 metrics: dict | None = None) -> dict[str, Path]:
    """Write the report files for a fitted path into ``out_dir``.

    Produces ``coefficients.csv`` (one row per nonzero estimate per step),
    ``path.json`` (per-step SSE/df/selection and training column means as
    the implied intercepts), ``pvalue_paths.csv`` (step-by-coefficient
    p-value matrix), and ``metrics.json`` when simulation metrics are
    passed. Floats carry 17 significant digits; files are UTF-8 with LF
    line endings.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}

    coef_file = out_dir / "coefficients.csv"
    with open(coef_file, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("step,equation,variable,lag,estimate,se,tstat,pvalue\n")
        for step, eq, var, lag, est, se, t, pv in _coefficient_rows(path):
            fh.write(f"{step},{_label(path, 'eq', eq)},{_label(path, 'var', var)},"
                     f"{lag},{_fmt(est)},{_fmt(se)},{_fmt(t)},{_fmt(pv)}\n")
    written["coefficients"] = coef_file

    payload = {
        "variant": path.variant,
        "p": path.p,
        "d": path.d,
        "nu": path.config.nu,
        "k_stop": path.config.k_stop,
        "n_steps": path.n_steps,
        "initial_sse": path.initial_sse,
        "intercepts": None if path.means is None else list(path.means),
        "names": list(path.names) if path.names is not None else None,
        "steps": [
            {
                "step": r.step,
                "selected": list(r.label),
                "sse": r.sse,
                "df": r.df,
                "criterion": (None if selection is None
                              else selection.criterion[r.step - 1]),
            }
            for r in path.records
        ],
    }
    if selection is not None:
        payload["chosen_step"] = selection.chosen_k
        payload["model_size"] = selection.model_size
    path_file = out_dir / "path.json"
    write_json(path_file, payload)
    written["path"] = path_file

    pval_file = out_dir / "pvalue_paths.csv"
    with open(pval_file, "w", encoding="utf-8", newline="\n") as fh:
        if path.records and path.records[0].inference is not None:
            last = path.records[-1].inference
            cols = list(zip(last.row.tolist(), last.equation.tolist(),
                            last.variable.tolist(), last.lag.tolist()))
            headers = [
                f"{_label(path, 'var', var)}_L{lag}_eq{_label(path, 'eq', eq)}"
                for _, eq, var, lag in cols
            ]
            fh.write(",".join(["step"] + headers) + "\n")
            d = path.response.shape[1]
            for record in path.records:
                pmat = record.inference.pvalue_matrix(path.n_coef_rows, d)
                cells = [_fmt(pmat[row, eq]) for row, eq, _, _ in cols]
                fh.write(",".join([str(record.step)] + cells) + "\n")
        else:
            fh.write("step\n")
    written["pvalue_paths"] = pval_file

    if metrics is not None:
        metrics_file = out_dir / "metrics.json"
        _write_json(metrics_file, metrics)
        written["metrics"] = metrics_file
    return written


def write_metrics(out_dir, payload: dict) -> Path:
    """Write a standalone metrics.json (simulation batches)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    target = out_dir / "metrics.json"
    write_json(target, payload)
    return target


def write_clean_csv(target, tsm: TimeSeriesMatrix, dates: list[str] | None) -> Path:
    """Write an ingested panel back out as a plain numeric CSV."""
    target = Path(target)
    with open(target, "w", encoding="utf-8", newline="\n") as fh:
        names = list(tsm.names) if tsm.names else [str(i + 1) for i in range(tsm.n_vars)]
        header = (["date"] if dates is not None else []) + names
        fh.write(",".join(header) + "\n")
        for r in range(tsm.n_obs):
            cells = [_fmt(v) for v in tsm.values[r]]
            if dates is not None:
                cells = [dates[r]] + cells
            fh.write(",".join(cells) + "\n")
    return target
