import numpy as np
import pytest

from boostvar.design import companion, spectral_radius
from boostvar.exceptions import DataError
from boostvar.simulation import (
    DgpConfig,
    GroundTruth,
    boost_method,
    calibrate_snr,
    enforce_stationarity,
    gen_coefficients,
    make_ground_truth,
    run_replications,
    score,
    simulate_var,
    toeplitz_cov,
)

from _oracles import PHI1, PHI2, INTERCEPT, bivariate_truth


class TestGenCoefficients:
    def test_empty_support(self):
        phi1, phi2 = gen_coefficients(4, 0, np.random.default_rng(0))
        assert not phi1.any() and not phi2.any()

    def test_dense_and_in_range(self):
        phi1, phi2 = gen_coefficients(4, 4, np.random.default_rng(1))
        for phi in (phi1, phi2):
            assert np.all(phi != 0)
            assert np.all(np.abs(phi) <= 0.5)

    def test_column_frequencies_uniform(self):
        d, s, draws = 10, 3, 500
        rng = np.random.default_rng(2)
        counts = np.zeros(d)
        for _ in range(draws):
            phi1, _ = gen_coefficients(d, s, rng)
            counts += (phi1 != 0).any(axis=0)
        expected = draws * s / d
        sigma = np.sqrt(draws * (s / d) * (1 - s / d))
        assert np.all(np.abs(counts - expected) <= 3 * sigma)


class TestEnforceStationarity:
    def test_stable_input_unchanged(self):
        out1, out2 = enforce_stationarity(PHI1, PHI2, 0.95)
        np.testing.assert_array_equal(out1, PHI1)
        np.testing.assert_array_equal(out2, PHI2)

    def test_zero_matrices(self):
        z = np.zeros((3, 3))
        out1, out2 = enforce_stationarity(z, z, 0.95)
        assert not out1.any() and not out2.any()

    def test_unstable_seed_scaled_support_preserved(self):
        big1, big2 = 2.0 * PHI1, 2.0 * PHI2
        out1, out2 = enforce_stationarity(big1, big2, 0.95)
        assert spectral_radius(companion([out1, out2])) < 1.0
        np.testing.assert_array_equal(out1 != 0, PHI1 != 0)
        np.testing.assert_array_equal(out2 != 0, PHI2 != 0)


class TestToeplitz:
    def test_two_by_two(self):
        np.testing.assert_array_equal(toeplitz_cov(2, 0.5),
                                      [[1.0, 0.5], [0.5, 1.0]])

    def test_zero_rho_identity(self):
        np.testing.assert_array_equal(toeplitz_cov(4, 0.0), np.eye(4))

    def test_power_decay(self):
        assert toeplitz_cov(3, 0.5)[0, 2] == pytest.approx(0.25)


class TestCalibrateSnr:
    def test_direct_formula(self):
        f = np.diag([0.9, 0.1])
        omega = np.diag([1.8, 0.2])
        assert calibrate_snr(f, omega, 0.5) == pytest.approx(1.0)

    def test_inverse_proportionality(self):
        f = np.diag([0.8, 0.3])
        omega = toeplitz_cov(2, 0.5)
        assert calibrate_snr(f, omega, 2.0) == pytest.approx(
            calibrate_snr(f, omega, 1.0) / 2.0)

    def test_round_trip(self):
        config = DgpConfig(t=50, d=8, s=3, snr=1.7, seed=3)
        truth = make_ground_truth(config)
        lam = np.linalg.eigvalsh(toeplitz_cov(8, 0.5)).max()
        sigma2 = truth.omega[0, 0]  # toeplitz diagonal is 1
        achieved = spectral_radius(truth.companion_form) / (sigma2 * lam)
        assert achieved == pytest.approx(1.7, rel=1e-10)

    def test_degenerate_radius_warns(self):
        with pytest.warns(UserWarning, match="degenerate SNR"):
            sigma2 = calibrate_snr(np.zeros((2, 2)), np.eye(2), 1.0)
        assert sigma2 == 0.0


class TestSimulateVar:
    def test_zero_covariance_stays_at_zero(self):
        truth = GroundTruth(phi1=0.5 * np.eye(2), phi2=np.zeros((2, 2)),
                            omega=np.zeros((2, 2)), support=frozenset(),
                            companion_form=companion([0.5 * np.eye(2), np.zeros((2, 2))]))
        y = simulate_var(truth, 50, 100, np.random.default_rng(4))
        np.testing.assert_array_equal(y, np.zeros((50, 2)))

    def test_white_noise_covariance(self):
        truth = GroundTruth(phi1=np.zeros((2, 2)), phi2=np.zeros((2, 2)),
                            omega=np.eye(2), support=frozenset(),
                            companion_form=np.zeros((4, 4)))
        y = simulate_var(truth, 10000, 10, np.random.default_rng(5))
        cov = y.T @ y / len(y)
        np.testing.assert_allclose(cov, np.eye(2), atol=0.05)

    def test_sample_mean_matches_implied_process_mean(self):
        truth = bivariate_truth()
        implied = np.linalg.solve(np.eye(2) - PHI1 - PHI2, INTERCEPT)
        reps = 200
        means = np.zeros((reps, 2))
        for r in range(reps):
            y = simulate_var(truth, 500, 200, np.random.default_rng(600 + r),
                             intercept=INTERCEPT)
            means[r] = y.mean(axis=0)
        mc_sigma = means.std(axis=0) / np.sqrt(reps)
        assert np.all(np.abs(means.mean(axis=0) - implied) <= 3 * mc_sigma)

    def test_unstable_truth_rejected(self):
        truth = GroundTruth(phi1=1.2 * np.eye(2), phi2=np.zeros((2, 2)),
                            omega=np.eye(2), support=frozenset(),
                            companion_form=companion([1.2 * np.eye(2), np.zeros((2, 2))]))
        with pytest.raises(DataError, match="unstable"):
            simulate_var(truth, 10, 10, np.random.default_rng(6))

    def test_invalid_covariance(self):
        bad = np.array([[1.0, 2.0], [2.0, 1.0]])  # indefinite
        truth = GroundTruth(phi1=np.zeros((2, 2)), phi2=np.zeros((2, 2)),
                            omega=bad, support=frozenset(),
                            companion_form=np.zeros((4, 4)))
        with pytest.raises(DataError, match="covariance"):
            simulate_var(truth, 10, 10, np.random.default_rng(7))


class TestScore:
    def test_perfect_recovery(self):
        config = DgpConfig(t=60, d=6, s=2, seed=8)
        truth = make_ground_truth(config)
        test = simulate_var(truth, 80, 100, np.random.default_rng(9))
        m = score(truth.phi_grouped, truth, test)
        assert m.mse == 0 and m.mspe == 0 and m.fpr == 0 and m.fnr == 0
        assert m.f_score == 1.0
        assert m.model_size == len(truth.support)

    def test_null_estimator(self):
        config = DgpConfig(t=60, d=6, s=2, seed=10)
        truth = make_ground_truth(config)
        test = simulate_var(truth, 80, 100, np.random.default_rng(11))
        m = score(np.zeros((12, 6)), truth, test)
        assert m.fnr == 1.0 and m.fpr == 0.0 and m.f_score == 0.0
        assert m.model_size == 0

    def test_parameter_accounting_model_type_1(self):
        config = DgpConfig(t=200, d=50, s=5, seed=12)
        truth = make_ground_truth(config)
        assert len(truth.support) == 500
        assert truth.phi_grouped.size == 5000

    def test_f_score_harmonic_identity(self):
        rng = np.random.default_rng(13)
        config = DgpConfig(t=60, d=8, s=3, seed=14)
        truth = make_ground_truth(config)
        test = simulate_var(truth, 80, 100, np.random.default_rng(15))
        guess = truth.phi_grouped * (rng.uniform(size=(16, 8)) < 0.7)
        guess += (rng.uniform(size=(16, 8)) < 0.1) * 0.3
        m = score(guess, truth, test)
        est = guess != 0
        true = truth.phi_grouped != 0
        tp = np.sum(est & true)
        precision = tp / est.sum()
        recall = tp / true.sum()
        expected_f = 2 * precision * recall / (precision + recall)
        assert m.f_score == pytest.approx(expected_f, rel=1e-12)


class TestReplications:
    def test_single_replication_equals_direct_run(self):
        config = DgpConfig(t=80, d=5, s=2, seed=16, n_val=60, n_test=60)
        method = boost_method("lag", nu=0.1, k_stop=50, selection="validation")
        summary = run_replications(config, method, 1)
        from boostvar.simulation import replicate_data
        truth, train, val, test = replicate_data(config, 0)
        direct = score(method(train, val), truth, test)
        assert summary.mean == direct
        assert summary.per_replication == (direct,)

    def test_seeded_determinism(self):
        config = DgpConfig(t=80, d=5, s=2, seed=17, n_val=60, n_test=60)
        method = boost_method("lag", nu=0.1, k_stop=40, selection="validation")
        a = run_replications(config, method, 3)
        b = run_replications(config, method, 3)
        assert a.mean == b.mean
        assert a.per_replication == b.per_replication

    def test_mean_is_order_invariant(self):
        config = DgpConfig(t=80, d=5, s=2, seed=18, n_val=60, n_test=60)
        method = boost_method("lag", nu=0.1, k_stop=40, selection="validation")
        summary = run_replications(config, method, 4)
        table = np.array([[m.mse, m.mspe, m.fpr, m.fnr, m.f_score, m.model_size]
                          for m in summary.per_replication])
        np.testing.assert_allclose(table[::-1].mean(axis=0), table.mean(axis=0))

    def test_every_truth_is_stationary(self):
        for seed in range(10):
            truth = make_ground_truth(DgpConfig(t=40, d=12, s=4, seed=seed))
            assert spectral_radius(truth.companion_form) < 1.0

    def test_bad_config_rejected(self):
        with pytest.raises(DataError):
            DgpConfig(t=50, d=3, s=5)
        with pytest.raises(DataError):
            DgpConfig(t=50, d=3, s=1, rho=1.0)
        with pytest.raises(DataError):
            DgpConfig(t=50, d=3, s=1, snr=0.0)

    def test_thread_count_does_not_change_results(self, monkeypatch):
        config = DgpConfig(t=80, d=5, s=2, seed=19, n_val=60, n_test=60)
        method = boost_method("lag", nu=0.1, k_stop=40, selection="validation")
        monkeypatch.setenv("BOOSTVAR_THREADS", "1")
        sequential = run_replications(config, method, 4)
        monkeypatch.setenv("BOOSTVAR_THREADS", "4")
        threaded = run_replications(config, method, 4)
        assert sequential.per_replication == threaded.per_replication

    def test_bad_thread_env(self, monkeypatch):
        from boostvar.simulation import worker_count
        monkeypatch.setenv("BOOSTVAR_THREADS", "lots")
        with pytest.raises(DataError):
            worker_count()

    def test_failing_replication_reports_seed(self):
        config = DgpConfig(t=80, d=5, s=2, seed=123, n_val=60, n_test=60)

        def broken(train, val):
            raise ValueError("boom")

        with pytest.raises(DataError, match="seed 123"):
            run_replications(config, broken, 1)
