"""Acceptance suite: the binding end-to-end checks, one printed line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the status lines.
Every tolerance is fixed here; the Monte Carlo checks use frozen seeds so
the suite is deterministic.
"""

import time
from pathlib import Path

import numpy as np
import pytest

from boostvar.boosting import (
    BoostConfig,
    boost_ls_cross_section,
    run_path,
    run_path_on_design,
)
from boostvar.bounds import check_bounds, normalize_groups
from boostvar.design import (
    build_lagged_design,
    grouped_to_lag_matrices,
    regroup_by_variable,
)
from boostvar.inference import accumulate_map, update_annihilator
from boostvar.selection import aicc, select_by_validation, select_p_variant
from boostvar.simulation import DgpConfig, replicate_data, score, simulate_var

from _oracles import (
    INTERCEPT,
    bivariate_truth,
    ls_fit_grouped,
    simulate_bivariate,
)

BASE_SEED = 50_000

# Reference bivariate results being reproduced (group variant, averaged
# over 100 runs with corrected-AIC stopping): lag-1 and lag-2 coefficient
# matrices and their p-values.
REF_EST_LAG1 = np.array([[0.494, 0.095], [0.403, 0.476]])
REF_EST_LAG2 = np.array([[-0.001, -0.006], [0.258, 0.009]])
REF_P_LAG1 = np.array([[0.000, 0.255], [0.000, 0.000]])
REF_P_LAG2 = np.array([[0.499, 0.553], [0.000, 0.513]])

EST_TOL = 0.05
P_TOL = 0.08


def _report(criterion: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"ACCEPTANCE {criterion}: {status}{suffix}")
    assert ok, f"{criterion} failed{suffix}"


def test_01_bivariate_reproduction():
    start = time.time()
    reps = 100
    config = BoostConfig(variant="group", nu=0.1, k_stop=500,
                         compute_inference=True)
    truth = bivariate_truth()
    est_sum = np.zeros((4, 2))
    p_sum = np.zeros((4, 2))
    ls_p_sum = np.zeros((4, 2))
    for r in range(reps):
        rng = np.random.default_rng(BASE_SEED + r)
        y = simulate_var(truth, 500, 200, rng, intercept=INTERCEPT)
        path = run_path(y, 2, config, demean=True)
        chosen = aicc(path).chosen_k
        est_sum += path.coefficients_at(chosen)
        p_sum += np.nan_to_num(path.pvalues_at(chosen), nan=1.0)
        _, _, p_ls = ls_fit_grouped(y, 2, demean=True)
        ls_p_sum += p_ls
    est1, est2 = grouped_to_lag_matrices(est_sum / reps, 2, 2)
    p1, p2 = grouped_to_lag_matrices(p_sum / reps, 2, 2)
    lsp1, lsp2 = grouped_to_lag_matrices(ls_p_sum / reps, 2, 2)
    elapsed = time.time() - start

    est_err = max(np.abs(est1 - REF_EST_LAG1).max(), np.abs(est2 - REF_EST_LAG2).max())
    p_err = max(np.abs(p1 - REF_P_LAG1).max(), np.abs(p2 - REF_P_LAG2).max())
    decisions_boost = np.concatenate([(p1 < 0.05).ravel(), (p2 < 0.05).ravel()])
    decisions_ls = np.concatenate([(lsp1 < 0.05).ravel(), (lsp2 < 0.05).ravel()])
    ok = (est_err <= EST_TOL and p_err <= P_TOL
          and np.array_equal(decisions_boost, decisions_ls)
          and elapsed < 120)
    _report("1 bivariate reproduction", ok,
            f"max est err {est_err:.3f} (tol {EST_TOL}), max p err {p_err:.3f} "
            f"(tol {P_TOL}), decisions match {np.array_equal(decisions_boost, decisions_ls)}, "
            f"{elapsed:.0f}s")


def test_02_ls_convergence():
    start = time.time()
    y = simulate_bivariate(500, seed=BASE_SEED)
    config = BoostConfig(variant="group", nu=0.1, k_stop=2000,
                         compute_inference=True)
    path = run_path(y, 2, config, demean=True)
    phi_ls, _, p_ls = ls_fit_grouped(y, 2, demean=True)
    est_gap = np.abs(path.coefficients_at(2000) - phi_ls).max()
    p_gap = np.abs(path.pvalues_at(2000) - p_ls).max()
    elapsed = time.time() - start
    ok = est_gap < 1e-3 and p_gap < 0.02 and elapsed < 10
    _report("2 LS convergence at k=2000", ok,
            f"max coef gap {est_gap:.2e} (tol 1e-3), max p gap {p_gap:.4f} "
            f"(tol 0.02), {elapsed:.1f}s")


def test_03_se_calibration():
    # the tolerance band applies to the ratio of the across-replication
    # spread of the estimates to the average reported s.e.; the full
    # learning rate keeps the selection sequence identical across draws so
    # the ratio isolates the s.e. computation itself
    start = time.time()
    reps = 1000
    config = BoostConfig(variant="group", nu=1.0, k_stop=10,
                         compute_inference=True)
    truth = bivariate_truth()
    est = np.zeros((reps, 4, 2))
    se = np.zeros((reps, 4, 2))
    for r in range(reps):
        rng = np.random.default_rng(BASE_SEED + 10_000 + r)
        y = simulate_var(truth, 500, 200, rng, intercept=INTERCEPT)
        path = run_path(y, 2, config, demean=True)
        est[r] = path.coefficients_at(10)
        se[r] = path.inference_at(10).se_matrix(4, 2)
    assert not np.isnan(se).any(), "a block was never selected in some run"
    ratio = est.std(axis=0) / se.mean(axis=0)
    elapsed = time.time() - start
    ok = bool(np.all(ratio >= 0.85) and np.all(ratio <= 1.15) and elapsed < 120)
    _report("3 standard-error calibration", ok,
            f"ratio range [{ratio.min():.3f}, {ratio.max():.3f}] "
            f"(band [0.85, 1.15]), {elapsed:.0f}s")


def test_04_structural_identities():
    nu = 0.1
    y = simulate_bivariate(17, seed=BASE_SEED + 1, with_intercept=False)
    config = BoostConfig(variant="group", nu=nu, k_stop=20,
                         compute_inference=True)
    path = run_path(y, 2, config)
    n = path.n_rows
    assert n == 15
    response = path.response

    # recursive maps (pure helpers) against fully unrolled products
    m_rec = np.eye(n)
    maps_rec: dict[int, np.ndarray] = {}
    factors = []
    recursive_ok = True
    unrolled_ok = True
    engine_ok = True
    for record in path.records:
        cols = path.columns[record.block]
        x = path.design[:, cols]
        a = np.linalg.solve(x.T @ x, x.T)
        maps_rec[record.block] = accumulate_map(maps_rec.get(record.block),
                                                a, m_rec, nu)
        m_rec = update_annihilator(m_rec, x, a, nu)
        factors.append(np.eye(n) - nu * (x @ a))
        m_unrolled = np.eye(n)
        for f in factors:
            m_unrolled = f @ m_unrolled
        recursive_ok &= bool(np.abs(m_rec - m_unrolled).max() <= 1e-10)
        phi_k = path.coefficients_at(record.step)
        resid_k = response - path.design @ phi_k
        engine_ok &= bool(np.abs(m_rec @ response - resid_k).max() <= 1e-8)
        for block, tilde in maps_rec.items():
            engine_ok &= bool(
                np.abs(tilde @ response - phi_k[path.columns[block]]).max() <= 1e-8)
        unrolled_ok &= bool(abs((n - np.trace(m_unrolled)) - record.df) <= 1e-10)

    sse = path.sse_path()
    df = path.df_path()
    monotone_ok = bool(np.all(np.diff(sse) <= 1e-12 * max(1.0, sse[0]))
                       and np.all(np.diff(df) >= -1e-10))
    ok = recursive_ok and unrolled_ok and engine_ok and monotone_ok
    _report("4 structural identities", ok,
            f"recursive=unrolled {recursive_ok}, maps reproduce engine {engine_ok}, "
            f"df matches trace {unrolled_ok}, monotonicity {monotone_ok}")


def test_05_prediction_bound():
    y = simulate_bivariate(200, seed=BASE_SEED + 2, with_intercept=False)
    lagged = build_lagged_design(y, 2)
    grouped = regroup_by_variable(lagged)
    normalized, _ = normalize_groups(grouped)
    config = BoostConfig(variant="group", nu=0.1, k_stop=200,
                         compute_inference=False)
    path = run_path_on_design(lagged.response, normalized.design, 2, 2, config)
    report = check_bounds(path, slack=1e-8)
    ok = (report.pred_violations == [] and 0.75 <= report.rate < 1.0)
    _report("5 prediction bound", ok,
            f"rate {report.rate:.6f}, violations {len(report.pred_violations)} "
            f"of {path.n_steps} steps")


def test_06_false_positive_control():
    start = time.time()
    reps = 20
    config = DgpConfig(t=100, d=20, s=3, snr=1.0, seed=BASE_SEED + 3)
    boost_cfg = BoostConfig(variant="lag", nu=0.1, k_stop=500,
                            compute_inference=True)
    plain, filtered = [], []
    for r in range(reps):
        truth, train, val, test = replicate_data(config, r)
        path = run_path(train, 2, boost_cfg)
        plain.append(score(select_by_validation(path, val).phi, truth, test))
        filtered.append(score(select_p_variant(path, val, 0.05).phi, truth, test))
    fpr_filtered = float(np.mean([m.fpr for m in filtered]))
    fpr_plain = float(np.mean([m.fpr for m in plain]))
    f_filtered = float(np.mean([m.f_score for m in filtered]))
    f_plain = float(np.mean([m.f_score for m in plain]))
    size_filtered = float(np.mean([m.model_size for m in filtered]))
    size_plain = float(np.mean([m.model_size for m in plain]))
    elapsed = time.time() - start
    ok = (fpr_filtered <= 0.10 and fpr_plain >= 0.15
          and f_filtered >= f_plain and size_filtered <= 0.5 * size_plain
          and elapsed < 300)
    _report("6 false-positive control", ok,
            f"FPR {fpr_plain:.3f}->{fpr_filtered:.3f} (cap 0.10), "
            f"F {f_plain:.3f}->{f_filtered:.3f}, "
            f"size {size_plain:.0f}->{size_filtered:.0f}, {elapsed:.0f}s")


PROSTATE_REFERENCE = {
    # column: (least-squares estimate, least-squares s.e.)
    "lcavol": (0.564, 0.088),
    "svi": (0.762, 0.241),
    "lweight": (0.622, 0.201),
    "age": (-0.021, 0.011),
    "lbph": (0.097, 0.058),
    "lcp": (-0.106, 0.090),
    "pgg45": (0.004, 0.004),
    "gleason": (0.049, 0.155),
}


def _prostate_file() -> Path | None:
    candidates = [Path(__file__).parent / "data" / "prostate.data",
                  Path(__file__).parent.parent / "data" / "prostate.data"]
    for c in candidates:
        if c.exists():
            return c
    return None


def load_whitespace_table(source: Path) -> dict[str, list[str]]:
    """Named columns from a whitespace-separated table.

    Rows may carry a leading label field not covered by the header; cells
    are kept as strings so non-numeric flag columns survive.
    """
    rows = [line.split() for line in source.read_text().splitlines() if line.strip()]
    header = rows[0]
    data: dict[str, list[str]] = {name: [] for name in header}
    for row in rows[1:]:
        offset = len(row) - len(header)
        for name, cell in zip(header, row[offset:]):
            data[name].append(cell)
    return data


def test_whitespace_table_loader(tmp_path):
    sample = tmp_path / "table.data"
    sample.write_text("\ta\tb\ttrain\n1\t0.5\t2.0\tT\n2\t1.5\t3.0\tF\n")
    data = load_whitespace_table(sample)
    assert data["a"] == ["0.5", "1.5"]
    assert data["train"] == ["T", "F"]


def test_07_cross_section_convergence():
    source = _prostate_file()
    if source is None:
        print("ACCEPTANCE 7 cross-section convergence: SKIP "
              "(prostate file not present; place it at tests/data/prostate.data)")
        pytest.skip("prostate dataset not available")
    data = load_whitespace_table(source)
    predictors = ["lcavol", "lweight", "age", "lbph", "svi", "lcp",
                  "gleason", "pgg45"]
    x = np.array([[float(v) for v in data[name]] for name in predictors]).T
    y = np.array([float(v) for v in data["lpsa"]])[:, None]
    x_c = x - x.mean(axis=0)
    y_c = y - y.mean()
    config = BoostConfig(nu=0.1, k_stop=2000, compute_inference=True)
    path = boost_ls_cross_section(x_c, y_c, config)
    table = path.inference_at(path.n_steps)
    est = path.coefficients_at(path.n_steps).ravel()
    se = table.se_matrix(8, 1).ravel()
    ok = True
    for i, name in enumerate(predictors):
        ref_est, ref_se = PROSTATE_REFERENCE[name]
        ok &= abs(est[i] - ref_est) < 0.005 + 1e-12
        ok &= abs(se[i] - ref_se) < 0.005 + 1e-12
    _report("7 cross-section convergence", ok,
            "all 8 predictors match the reference table to two decimals")


def test_08_out_of_scope_statement():
    print("ACCEPTANCE 8: full-scale competing-method tables and the "
          "macro-panel prediction exercise need external data/methods and "
          "are not reproduced here; acceptance rests on criteria 1-7 and "
          "the invariant suites.")
    assert True
