"""Sparse stationary VAR(2) ground truth, simulation, scoring and replication runs."""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import toeplitz

from .boosting import BoostConfig, run_path
from .design import (
    build_lagged_design,
    companion,
    lag_matrices_to_grouped,
    regroup_by_variable,
    spectral_radius,
)
from .exceptions import DataError
from .selection import aicc, select_by_validation, select_p_variant
from .validation import as_float_matrix

SIM_LAG_ORDER = 2


@dataclass(frozen=True)
class DgpConfig:
    """Settings for the synthetic VAR(2) data-generating process.

    ``s`` is the number of nonzero columns drawn independently for each of
    the two lag matrices; ``snr`` calibrates the noise scale against the
    process's dominant dynamics.
    """

    t: int
    d: int
    s: int
    rho: float = 0.5
    snr: float = 1.0
    shrink: float = 0.95
    burn_in: int = 200
    seed: int = 0
    n_val: int = 200
    n_test: int = 200

    def __post_init__(self):
        if self.s > self.d or self.s < 0:
            raise DataError(f"need 0 <= s <= d, got s={self.s}, d={self.d}")
        if not 0.0 <= self.rho < 1.0:
            raise DataError(f"rho must lie in [0, 1), got {self.rho}")
        if self.snr <= 0:
            raise DataError(f"snr must be positive, got {self.snr}")
        if not 0.0 < self.shrink < 1.0:
            raise DataError(f"shrink factor must lie in (0, 1), got {self.shrink}")


@dataclass(frozen=True)
class GroundTruth:
    """True coefficients and noise covariance of a simulated VAR(2)."""

    phi1: np.ndarray
    phi2: np.ndarray
    omega: np.ndarray
    support: frozenset  # (lag, equation, variable) triples of true nonzeros
    companion_form: np.ndarray

    @property
    def d(self) -> int:
        return self.phi1.shape[0]

    @property
    def phi_grouped(self) -> np.ndarray:
        """Coefficients as the (2d x d) grouped stack used by the estimators."""
        return lag_matrices_to_grouped([self.phi1, self.phi2])


@dataclass(frozen=True)
class Metrics:
    """Coefficient error, prediction error, and support-recovery scores."""

    mse: float
    mspe: float
    fpr: float
    fnr: float
    f_score: float
    model_size: float  # integer per run, fractional when averaged

    def as_dict(self) -> dict:
        return {"mse": self.mse, "mspe": self.mspe, "fpr": self.fpr,
                "fnr": self.fnr, "f_score": self.f_score,
                "model_size": self.model_size}


def gen_coefficients(d: int, s: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Draw two d x d lag matrices, each with s dense uniform columns.

    For each matrix independently, s columns are chosen uniformly without
    replacement and filled with i.i.d. Uniform[-0.5, 0.5]; everything else
    is exactly zero.
    """
    out = []
    for _ in range(2):
        phi = np.zeros((d, d))
        cols = rng.choice(d, size=s, replace=False)
        phi[:, cols] = rng.uniform(-0.5, 0.5, size=(d, s))
        out.append(phi)
    return out[0], out[1]


def enforce_stationarity(phi1: np.ndarray, phi2: np.ndarray,
                         shrink: float = 0.95) -> tuple[np.ndarray, np.ndarray]:
    """Rescale both lag matrices until the companion matrix is stable.

    Multiplies both matrices by ``shrink`` repeatedly until the companion
    spectral radius drops below 1. Zero entries stay exactly zero, so the
    sparsity pattern is preserved.
    """
    if not 0.0 < shrink < 1.0:
        raise DataError(f"shrink factor must lie in (0, 1), got {shrink}")
    phi1 = np.asarray(phi1, dtype=float).copy()
    phi2 = np.asarray(phi2, dtype=float).copy()
    while spectral_radius(companion([phi1, phi2])) >= 1.0:
        phi1 *= shrink
        phi2 *= shrink
    return phi1, phi2


def toeplitz_cov(d: int, rho: float) -> np.ndarray:
    """Toeplitz correlation matrix with entry (i, j) = rho ** |i - j|."""
    if not 0.0 <= rho < 1.0:
        raise DataError(f"rho must lie in [0, 1), got {rho}")
    return toeplitz(rho ** np.arange(d))


def calibrate_snr(f: np.ndarray, omega_tilde: np.ndarray, snr: float) -> float:
    """Noise scale sigma^2 matching a target signal-to-noise ratio.

    The ratio is radius(F) / (sigma^2 * lambda_max(omega_tilde)), with
    radius the spectral radius of the (non-symmetric) companion matrix and
    lambda_max the largest eigenvalue of the symmetric base covariance.
    """
    if snr <= 0:
        raise DataError(f"snr must be positive, got {snr}")
    radius = spectral_radius(f)
    lam = float(np.linalg.eigvalsh(np.asarray(omega_tilde, dtype=float)).max())
    if lam <= 0:
        raise DataError("base covariance has no positive eigenvalue")
    if radius == 0.0:
        warnings.warn("degenerate SNR: companion radius is zero, noise scale set to 0",
                      stacklevel=2)
        return 0.0
    return radius / (snr * lam)


def make_ground_truth(config: DgpConfig,
                      rng: np.random.Generator | None = None) -> GroundTruth:
    """Generate one sparse stationary VAR(2) truth per the config."""
    rng = np.random.default_rng(config.seed) if rng is None else rng
    phi1, phi2 = gen_coefficients(config.d, config.s, rng)
    phi1, phi2 = enforce_stationarity(phi1, phi2, config.shrink)
    f = companion([phi1, phi2])
    omega_tilde = toeplitz_cov(config.d, config.rho)
    sigma2 = calibrate_snr(f, omega_tilde, config.snr)
    omega = sigma2 * omega_tilde
    support = frozenset(
        (lag, int(i), int(j))
        for lag, phi in ((1, phi1), (2, phi2))
        for i, j in zip(*np.nonzero(phi))
    )
    return GroundTruth(phi1=phi1, phi2=phi2, omega=omega, support=support,
                       companion_form=f)


def _covariance_factor(omega: np.ndarray) -> np.ndarray:
    omega = as_float_matrix(omega, "covariance", allow_empty=False)
    if not omega.any():
        return np.zeros_like(omega)
    try:
        return np.linalg.cholesky(omega)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(omega)
        if w.min() < -1e-10 * max(w.max(), 1.0):
            raise DataError("invalid covariance: not positive semidefinite") from None
        return v * np.sqrt(np.clip(w, 0.0, None))


def simulate_var(truth: GroundTruth, t: int, burn_in: int,
                 rng: np.random.Generator,
                 intercept: np.ndarray | None = None) -> np.ndarray:
    """Simulate t rows of the VAR(2) process from zero initial conditions.

    Gaussian innovations are drawn through a symmetric factor of the
    covariance; the first ``burn_in`` generated rows are discarded.
    """
    if spectral_radius(truth.companion_form) >= 1.0:
        raise DataError("unstable truth: companion radius >= 1")
    d = truth.d
    factor = _covariance_factor(truth.omega)
    n = burn_in + t
    shocks = rng.standard_normal((n, d)) @ factor.T
    if intercept is not None:
        shocks = shocks + np.asarray(intercept, dtype=float).reshape(1, d)
    y = np.zeros((n + 2, d))
    for i in range(n):
        y[i + 2] = truth.phi1 @ y[i + 1] + truth.phi2 @ y[i] + shocks[i]
    return y[2 + burn_in :]


def score(phi_hat: np.ndarray, truth: GroundTruth, test) -> Metrics:
    """Score an estimated coefficient stack against the truth.

    Support recovery compares exact zeros against exact zeros; the
    prediction error applies the coefficient gap to the test block's
    lagged design.
    """
    phi_hat = np.asarray(phi_hat, dtype=float)
    phi_true = truth.phi_grouped
    if phi_hat.shape != phi_true.shape:
        raise DataError(f"estimate has shape {phi_hat.shape}, truth {phi_true.shape}")
    lagged = build_lagged_design(test, SIM_LAG_ORDER, demean=False)
    x_test = regroup_by_variable(lagged).design
    d = truth.d
    diff = phi_hat - phi_true
    mse = float(np.einsum("ri,ri->", diff, diff)) / (SIM_LAG_ORDER * d * d)
    pred = x_test @ diff
    mspe = float(np.einsum("ti,ti->", pred, pred)) / (pred.shape[0] * d)
    est = phi_hat != 0.0
    true = phi_true != 0.0
    tp = int(np.sum(est & true))
    fp = int(np.sum(est & ~true))
    fn = int(np.sum(~est & true))
    tn = int(np.sum(~est & ~true))
    fpr = fp / (tn + fp) if tn + fp else 0.0
    fnr = fn / (tp + fn) if tp + fn else 0.0
    f_score = 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn else 1.0
    return Metrics(mse=mse, mspe=mspe, fpr=fpr, fnr=fnr, f_score=f_score,
                   model_size=int(est.sum()))


@dataclass(frozen=True)
class ReplicationSummary:
    """Arithmetic mean and dispersion of metrics over seeded replications."""

    mean: Metrics
    std: Metrics
    per_replication: tuple[Metrics, ...]


def _summarize(per_rep: list[Metrics]) -> ReplicationSummary:
    table = np.array([[m.mse, m.mspe, m.fpr, m.fnr, m.f_score, m.model_size]
                      for m in per_rep])
    mean = table.mean(axis=0)
    std = table.std(axis=0)
    return ReplicationSummary(
        mean=Metrics(*mean[:5], model_size=float(mean[5])),
        std=Metrics(*std[:5], model_size=float(std[5])),
        per_replication=tuple(per_rep),
    )


def worker_count() -> int:
    """Parallel worker cap from BOOSTVAR_THREADS (0 or unset = auto)."""
    raw = os.environ.get("BOOSTVAR_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise DataError(f"BOOSTVAR_THREADS must be an integer, got {raw!r}") from None
    return n if n > 0 else (os.cpu_count() or 1)


def replicate_data(config: DgpConfig, rep: int):
    """Truth plus contiguous train/validation/test segments for one replication.

    One path of length t + n_val + n_test is simulated and split in time
    order; replication ``rep`` uses seed ``config.seed + rep``.
    """
    rng = np.random.default_rng(config.seed + rep)
    truth = make_ground_truth(config, rng)
    total = config.t + config.n_val + config.n_test
    y = simulate_var(truth, total, config.burn_in, rng)
    train = y[: config.t]
    val = y[config.t : config.t + config.n_val]
    test = y[config.t + config.n_val :]
    return truth, train, val, test


def run_replications(config: DgpConfig,
                     method: Callable[[np.ndarray, np.ndarray], np.ndarray],
                     n_reps: int) -> ReplicationSummary:
    """Run a fit method over seeded replications and average the metrics.

    ``method`` maps (train, validation) arrays to a grouped coefficient
    stack. A failing replication aborts the batch with its seed attached.
    """
    if n_reps < 1:
        raise DataError(f"need at least one replication, got {n_reps}")

    def one(rep: int) -> Metrics:
        try:
            truth, train, val, test = replicate_data(config, rep)
            return score(method(train, val), truth, test)
        except Exception as exc:
            raise DataError(
                f"replication {rep} (seed {config.seed + rep}) failed: {exc}"
            ) from exc

    workers = min(worker_count(), n_reps)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_rep = list(pool.map(one, range(n_reps)))
    else:
        per_rep = [one(rep) for rep in range(n_reps)]
    return _summarize(per_rep)


def boost_method(variant: str, nu: float = 0.1, k_stop: int = 500,
                 selection: str = "validation", alpha: float = 0.05):
    """Fit-method factory for the replication harness.

    ``selection`` is one of "validation" (held-out MSPE), "aicc", or
    "pfilter" (p-value filter then held-out MSPE).
    """
    needs_inference = selection in ("aicc", "pfilter")
    config = BoostConfig(variant=variant, nu=nu, k_stop=k_stop,
                         compute_inference=needs_inference)

    def fit(train: np.ndarray, val: np.ndarray) -> np.ndarray:
        path = run_path(train, SIM_LAG_ORDER, config)
        if selection == "validation":
            return select_by_validation(path, val).phi
        if selection == "aicc":
            return aicc(path).phi
        if selection == "pfilter":
            return select_p_variant(path, val, alpha).phi
        raise DataError(f"unknown selection rule {selection!r}")

    return fit


def benchmark(config: DgpConfig, n_reps: int, nu: float = 0.1,
              k_stop: int = 500, alpha: float = 0.05,
              variants: tuple[str, ...] = ("group", "lag")) -> dict[str, ReplicationSummary]:
    """Score the boosting estimators and their p-value-filtered versions.

    For each variant one inference-carrying path per replication feeds both
    the plain validation-selected estimator and the filtered one, so the
    expensive map maintenance is shared.
    """
    if n_reps < 1:
        raise DataError(f"need at least one replication, got {n_reps}")
    names = {"group": "boost-group", "lag": "boost-lag"}

    def one(rep: int) -> dict[str, Metrics]:
        truth, train, val, test = replicate_data(config, rep)
        out: dict[str, Metrics] = {}
        for variant in variants:
            cfg = BoostConfig(variant=variant, nu=nu, k_stop=k_stop,
                              compute_inference=True)
            path = run_path(train, SIM_LAG_ORDER, cfg)
            out[names[variant]] = score(select_by_validation(path, val).phi, truth, test)
            out[names[variant] + "-p"] = score(select_p_variant(path, val, alpha).phi,
                                               truth, test)
        return out

    workers = min(worker_count(), n_reps)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, range(n_reps)))
    else:
        rows = [one(rep) for rep in range(n_reps)]
    return {key: _summarize([row[key] for row in rows]) for key in rows[0]}
