import math

import numpy as np
import pytest

from multilogistic import (
    InputDataError,
    NumericsError,
    WalkerEnsemble,
    normalization_shift,
    scale_invariance_corr,
)

SCHEMES = ["sequential", "sweep"]


class TestNormalizationShift:
    def test_zero_when_already_normalized(self):
        u = np.log(np.array([40.0, 35.0, 25.0]))
        assert normalization_shift(u, 100.0) == pytest.approx(0.0, abs=1e-14)

    def test_double_total_gives_minus_log2(self):
        u = np.log(np.array([100.0, 100.0]))
        assert normalization_shift(u, 100.0) == pytest.approx(-math.log(2.0), rel=1e-14)

    def test_self_consistency_random(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            u = rng.normal(5.0, 3.0, size=rng.integers(2, 200))
            total = float(rng.uniform(10.0, 1e7))
            shift = normalization_shift(u, total)
            assert abs(np.exp(u + shift).sum() - total) <= 1e-12 * total


@pytest.mark.parametrize("scheme", SCHEMES)
class TestStep:
    def test_no_noise_no_drift_is_identity(self, scheme):
        ens = WalkerEnsemble.uniform(20, 2e4, 150.0, 0.03, sigma=0.0, seed=1,
                                     scheme=scheme)
        before = ens.populations
        ens.run(10)
        np.testing.assert_allclose(ens.populations, before, rtol=1e-12)

    def test_uniform_drift_cancelled_by_correction(self, scheme):
        ens = WalkerEnsemble.uniform(20, 2e4, 150.0, 0.03, sigma=0.0, drift=0.8,
                                     seed=1, scheme=scheme)
        before = ens.populations
        ens.run(10)
        np.testing.assert_allclose(ens.populations, before, rtol=1e-12)

    def test_invariants_hold_every_step(self, scheme):
        ens = WalkerEnsemble.uniform(100, 6e5, 150.0, 0.03, sigma=1.0, seed=3,
                                     scheme=scheme)
        for _ in range(300):
            ens.step()
            assert ens.total_error() <= 1e-9 * ens.total
            assert ens.populations.min() >= ens.floor

    def test_invariants_under_heavy_floor_pressure(self, scheme):
        # barely-feasible total with large kicks keeps walkers crowded onto
        # the floor, exercising the clamp/whole-move-rejection machinery
        ens = WalkerEnsemble.uniform(50, 50 * 150.0 * 1.05, 150.0, 0.5,
                                     sigma=1.0, seed=8, scheme=scheme)
        for _ in range(400):
            ens.step()
            assert ens.total_error() <= 1e-9 * ens.total
            assert ens.populations.min() >= ens.floor * (1.0 - 1e-12)

    def test_same_seed_bit_identical(self, scheme):
        a = WalkerEnsemble.uniform(50, 1e5, 150.0, 0.03, sigma=1.0, seed=11,
                                   scheme=scheme)
        b = WalkerEnsemble.uniform(50, 1e5, 150.0, 0.03, sigma=1.0, seed=11,
                                   scheme=scheme)
        a.run(500)
        b.run(500)
        assert np.array_equal(a.u, b.u)

    def test_chunking_does_not_change_stream(self, scheme):
        a = WalkerEnsemble.uniform(30, 1e5, 150.0, 0.03, sigma=1.0, seed=12,
                                   scheme=scheme)
        b = WalkerEnsemble.uniform(30, 1e5, 150.0, 0.03, sigma=1.0, seed=12,
                                   scheme=scheme)
        a.run(137)
        for n in (50, 50, 37):
            b.run(n)
        assert np.array_equal(a.u, b.u)


class TestConstruction:
    def test_floor_infeasible(self):
        with pytest.raises(InputDataError):
            WalkerEnsemble.uniform(100, 100 * 150.0, 150.0, 0.03, sigma=1.0)

    def test_single_walker_rejected(self):
        with pytest.raises(InputDataError):
            WalkerEnsemble.uniform(1, 1e4, 150.0, 0.03, sigma=1.0)

    def test_start_below_floor_rejected(self):
        with pytest.raises(InputDataError):
            WalkerEnsemble(np.array([100.0, 1e4]), 1.01e4, 150.0, 0.03, sigma=1.0)

    def test_unknown_scheme(self):
        with pytest.raises(InputDataError):
            WalkerEnsemble.uniform(10, 1e4, 150.0, 0.03, sigma=1.0, scheme="async")

    def test_from_stochastic_rates(self):
        from multilogistic import StochasticRates

        rates = StochasticRates(np.zeros(10), np.ones(10), 0.03)
        a = WalkerEnsemble.from_rates(np.full(10, 1e3), 1e4, 50.0, rates, seed=4)
        b = WalkerEnsemble.uniform(10, 1e4, 50.0, 0.03, sigma=1.0, seed=4)
        a.run(100)
        b.run(100)
        assert np.array_equal(a.x, b.x)
        with pytest.raises(InputDataError):
            WalkerEnsemble.from_rates(np.full(10, 1e3), 1e4, 50.0, "const", seed=4)


class TestRunToEquilibrium:
    def test_no_noise_keeps_flat_table(self):
        ens = WalkerEnsemble.uniform(20, 2e4, 150.0, 0.03, sigma=0.0, seed=5)
        stats = ens.run_to_equilibrium(10, 2, 3)
        np.testing.assert_allclose(stats.rank_table.populations, 1e3, rtol=1e-12)
        assert math.isnan(stats.corr_coeff)  # diagnostic undefined at sigma=0

    def test_stats_deterministic(self):
        def stats():
            ens = WalkerEnsemble.uniform(40, 4e4, 150.0, 0.03, sigma=1.0, seed=9)
            return ens.run_to_equilibrium(200, 10, 5)

        a, b = stats(), stats()
        assert np.array_equal(a.rank_table.populations, b.rank_table.populations)
        assert a.corr_coeff == b.corr_coeff
        assert a.step_count == b.step_count

    def test_rank_table_sorted_and_counts_steps(self):
        ens = WalkerEnsemble.uniform(40, 4e4, 150.0, 0.03, sigma=1.0, seed=10)
        stats = ens.run_to_equilibrium(100, 5, 4)
        assert np.all(np.diff(stats.rank_table.populations) <= 0.0)
        assert stats.step_count == 100 + 1 + 3 * 5
        assert -1.0 <= stats.corr_coeff <= 1.0


class TestScaleInvarianceCorr:
    def test_constructed_positive_control(self):
        # velocities whose squares reproduce the levels exactly: corr = 1
        rng = np.random.default_rng(2)
        z = rng.uniform(0.5, 3.0, size=500)
        dt = 0.03
        snaps = np.stack([z**2, z**2 + dt * z])
        assert scale_invariance_corr(snaps, dt) == pytest.approx(1.0, abs=1e-12)

    def test_degenerate_velocities_error(self):
        u0 = np.array([1.0, 2.0, 3.0])
        snaps = np.stack([u0, u0 + 0.5])  # identical velocity for all walkers
        with pytest.raises(NumericsError):
            scale_invariance_corr(snaps, 0.1)

    def test_needs_two_snapshots(self):
        with pytest.raises(InputDataError):
            scale_invariance_corr(np.ones((1, 5)), 0.1)

    def test_equilibrium_run_uncorrelated(self):
        ens = WalkerEnsemble.uniform(200, 1.2e6, 150.0, 0.03, sigma=1.0, seed=21)
        stats = ens.run_to_equilibrium(3000, 50, 10)
        assert abs(stats.corr_coeff) < 0.15


@pytest.mark.slow
class TestThermalization:
    def test_rank_table_converges_with_sample_count(self):
        # equal sigmas and drifts (the thermalized case): averaging more
        # snapshots pulls the rank table toward the analytic law
        from multilogistic import ks_distance, solve_lambda

        ens = WalkerEnsemble.uniform(1000, 6e6, 150.0, 0.03, sigma=1.0, seed=77)
        ens.run(100_000)
        model = solve_lambda(6e6, 1000, 150.0)
        tables = []
        for _ in range(30):
            tables.append(np.sort(ens.populations)[::-1])
            ens.run(500)
        tables = np.asarray(tables)
        ks_few = ks_distance(tables[:3].mean(axis=0), model)
        ks_many = ks_distance(tables.mean(axis=0), model)
        assert ks_many < ks_few
        assert ks_many < 0.05
