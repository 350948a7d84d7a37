import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chi_mhd.fields import RandomFieldSpec, preset_state, random_field, random_state, stress_field
from chi_mhd.norms import chi_norm, modulus, pair_norm
from chi_mhd.solver import SolverConfig, integrate
from chi_mhd.spectral import Grid, SpectralField, StatePair, VectorField, from_physical, taylor_green
from chi_mhd.trajectory import Trajectory
from chi_mhd.verification import (
    CALIBRATED,
    CheckResult,
    MARGIN,
    apriori_sides,
    blowup_integral,
    calibration_sample,
    cancellation_checks,
    check_apriori,
    check_bilinear,
    check_blowup_bound,
    check_continuum_example,
    check_energy_chi_mhalf,
    check_energy_equality,
    check_free_evolution,
    check_heat_estimate,
    check_interpolation,
    check_l2h1,
    check_majorant,
    check_product,
    frozen,
    heat_trajectory,
    limit,
    modulus_convolution,
    random_forcing,
    run_suite,
    suite_config,
    weak_strong_experiment,
)

seeds = st.integers(0, 100_000)


def tg_run(mu=0.5, T=1.0, dt=1e-3, n=16, stride=10):
    cfg = SolverConfig(n_modes=n, mu=mu, nu=mu, dt=dt, T_end=T, snapshot_stride=stride)
    g = cfg.grid
    return cfg, integrate(cfg, StatePair(taylor_green(g), VectorField.zeros(g)))


class TestLimits:
    def test_margin_applied(self):
        for name in CALIBRATED:
            assert limit(name) == pytest.approx(MARGIN * frozen(name))
            assert frozen(name) > 0


class TestStatic:
    def test_interpolation_single_mode_is_sharp(self):
        f = SpectralField.single_mode(Grid(16), (2, 1), 0.3)
        r = check_interpolation(f, -1.0, 0.0, 1.0)
        assert r.passed and r.ratio == pytest.approx(1.0, rel=1e-14)

    def test_interpolation_argument_order(self):
        f = SpectralField.single_mode(Grid(16), (2, 1), 0.3)
        with pytest.raises(ValueError):
            check_interpolation(f, 1.0, 0.0, -1.0)
        with pytest.raises(ValueError):
            check_interpolation(f, -1.0, 2.0, 1.0)

    @given(seeds, st.floats(-1.0, 1.0))
    def test_interpolation_holds(self, seed, s0):
        assert check_interpolation(stress_field(seed, 16), -1.0, s0, 1.0).passed

    def test_l2h1_single_mode_ratio(self):
        # chi^{-1/2} = |c|, L2 = H1 = 2 pi |c| at |xi| = 1
        f = SpectralField.single_mode(Grid(16), (1, 0), 0.7)
        r = check_l2h1(f)
        assert r.ratio == pytest.approx(1 / (2 * math.pi), rel=1e-14)
        assert r.empirical_constant == r.ratio
        assert check_l2h1(f, constant=0.1).passed is False

    def test_product_two_modes(self):
        g = Grid(16)
        f = SpectralField.single_mode(g, (1, 2), 0.5)
        h = SpectralField.single_mode(g, (2, -1), 2.0)
        r = check_product(f, h)
        assert r.lhs == pytest.approx(1.0) and r.ratio == pytest.approx(1.0)
        # output at zero frequency is excluded
        assert check_product(f, SpectralField.single_mode(g, (-1, -2), 2.0)).lhs == 0.0

    @given(seeds)
    def test_convolution_matches_pair_sum(self, seed):
        f, h = stress_field(seed, 8, vector=False), stress_field(seed + 1, 8, vector=False)
        conv, k = modulus_convolution(f, h)
        kint = np.fft.fftfreq(8, 1 / 8).astype(int)
        want = {}
        a, b = modulus(f.coeffs, False), modulus(h.coeffs, False)
        for i in range(8):
            for j in range(8):
                for p in range(8):
                    for q in range(8):
                        key = (kint[i] + kint[p], kint[j] + kint[q])
                        want[key] = want.get(key, 0.0) + a[i, j] * b[p, q]
        got = {(int(k[0][x, y]), int(k[1][x, y])): conv[x, y] for x in range(15) for y in range(15)}
        for key, v in want.items():
            assert got[key] == pytest.approx(v, rel=1e-12, abs=1e-14)

    @given(seeds)
    def test_product_holds(self, seed):
        assert check_product(stress_field(seed, 16), stress_field(seed + 3, 16)).passed

    def test_majorant_single_shell_equality(self):
        g = Grid(16)
        u = VectorField(g, np.stack([np.zeros((16, 16)), SpectralField.single_mode(g, (1, 0), 1.0).coeffs]))
        r = check_majorant(StatePair(u, VectorField.zeros(g)))
        assert r.passed and r.ratio == pytest.approx(1.0, rel=1e-14)

    @given(seeds)
    def test_majorant_holds(self, seed):
        assert check_majorant(StatePair(stress_field(seed, 16), stress_field(seed + 1, 16))).passed


class TestCancellations:
    @given(seeds)
    def test_divergence_free_transport_cancels(self, seed):
        f = [stress_field(seed + j, 16) for j in range(4)]
        res = cancellation_checks(*f)
        assert [r.name for r in res] == ["cancellation_v_w_w", "cancellation_v_g_g", "cancellation_h_cross"]
        assert all(r.passed for r in res), [r.meta for r in res]

    def test_compressive_transport_is_caught(self):
        # <(v.grad)w, w> = -1/2 int (div v) |w|^2, nonzero for v = (-sin x, 0), w = (0, cos x + cos 2x)
        g = Grid(16)
        x, _ = g.coordinates()
        v = from_physical(g, np.stack([-np.sin(x), 0 * x]))
        w = from_physical(g, np.stack([0 * x, np.cos(x) + np.cos(2 * x)]))
        res = cancellation_checks(v, v, w, w)
        assert not res[0].passed
        # div v = -cos x, so the value is 1/2 int cos(x) (cos x + cos 2x)^2 = 1/2 (2 pi)^2 / 2
        assert res[0].meta["value"] == pytest.approx(math.pi**2, rel=1e-12)


class TestContinuum:
    def test_both_readings(self):
        chi, l2 = check_continuum_example()
        assert chi.passed and l2.passed
        assert l2.meta["norm_reading"] == pytest.approx(math.sqrt(math.pi) / 2, abs=1e-8)


class TestSemigroupChecks:
    def test_bilinear_zero(self):
        tr = heat_trajectory(StatePair.zeros(Grid(16)), 1.0, 1.0, 1.0, 10)
        r = check_bilinear(tr, 1.0, 1.0)
        assert r.lhs == 0.0 and r.passed

    @given(seeds, st.floats(0.01, 100.0))
    def test_bilinear_ratio_scale_invariant(self, seed, lam):
        s = random_state(seed, 16, 3.0, 1.0)
        r1 = check_bilinear(heat_trajectory(s, 1.0, 1.0, 1.0, 40), 1.0, 1.0)
        r2 = check_bilinear(heat_trajectory(s * lam, 1.0, 1.0, 1.0, 40), 1.0, 1.0)
        assert r2.ratio == pytest.approx(r1.ratio, rel=1e-10)

    def test_heat_zero(self):
        g = Grid(16)
        times = np.linspace(0, 1, 5)
        zero = Trajectory.from_snapshots(list(times), [SpectralField.zeros(g)] * 5)
        r = check_heat_estimate(SpectralField.zeros(g), zero, 1.0)
        assert r.ratio == 0.0 and r.passed

    def test_heat_forcing_only(self):
        g = Grid(16)
        times = np.linspace(0, 1, 201)
        r = check_heat_estimate(SpectralField.zeros(g), random_forcing(3, g, times), 0.5)
        assert r.passed and 0 < r.ratio <= 2

    @given(seeds, st.floats(0.1, 2.0), st.floats(0.1, 2.0), st.floats(0.1, 3.0))
    def test_free_evolution_holds(self, seed, mu, nu, T):
        s = random_state(seed, 16, 2.5, 1.0)
        assert check_free_evolution(s.u, s.b, mu, nu, T).passed


class TestTrajectoryChecks:
    def test_energy_equality_taylor_green(self):
        _, tr = tg_run()
        r = check_energy_equality(tr)
        assert r.passed and r.meta["max_rel_residual"] < 1e-6

    def test_energy_equality_zero(self):
        cfg = SolverConfig(n_modes=16, T_end=0.1)
        assert check_energy_equality(integrate(cfg, StatePair.zeros(cfg.grid))).passed

    def test_energy_equality_catches_missing_dissipation(self):
        # a frozen field has constant energy but positive dissipation
        s = random_state(2, 16)
        tr = Trajectory.from_snapshots([0.0, 0.5, 1.0], [s, s, s])
        assert not check_energy_equality(tr, 1.0, 1.0).passed
        with pytest.raises(ValueError):
            check_energy_equality(tr)

    def test_apriori_taylor_green_closed_form(self):
        # chi^{-1}(t) = N0 e^{-2 mu t}, chi^1 = 2 chi^{-1} at |xi|^2 = 2
        mu, T = 0.5, 1.0
        _, tr = tg_run(mu, T, dt=1e-3)
        lhs, n0, e4 = apriori_sides(tr, mu, mu)
        assert lhs == pytest.approx(n0 * (1 + 0.5 * (1 - math.exp(-2 * mu * T))), rel=1e-6)
        r = check_apriori(tr)
        assert r.empirical_constant == pytest.approx((lhs - n0) * 2 * mu / e4, rel=1e-12)
        assert check_apriori(tr, constant=r.empirical_constant * (1 + 1e-9)).passed
        assert not check_apriori(tr, constant=0.5 * r.empirical_constant).passed

    def test_blowup_integral_taylor_green_closed_form(self):
        mu, T = 0.5, 1.0
        _, tr = tg_run(mu, T, dt=1e-3)
        c0 = pair_norm(tr.snapshots[0], 0.0, 2.0)
        want = c0**2 * (1 - math.exp(-4 * mu * T)) / (4 * mu)
        assert blowup_integral(tr) == pytest.approx(want, rel=1e-6)
        r = check_blowup_bound(tr)
        assert r.passed and r.meta["nondecreasing"]

    def test_chi_mhalf_taylor_green(self):
        _, tr = tg_run()
        r = check_energy_chi_mhalf(tr)
        assert r.passed and r.meta["middle"] <= r.meta["data_bound"] * (1 + 1e-6)

    @pytest.mark.parametrize("seed", [0, 1])
    def test_random_run_checks(self, seed):
        cfg = SolverConfig(n_modes=16, mu=0.1, nu=0.1, dt=2.5e-3, T_end=0.5)
        tr = integrate(cfg, random_state(seed, 16, 3.0, 0.5))
        assert check_apriori(tr).passed
        assert check_energy_chi_mhalf(tr).passed
        assert check_blowup_bound(tr).passed

    def test_blowup_integral_empty(self):
        tr = Trajectory(Grid(8), kind="state")
        from chi_mhd.norms import TrajectoryNorms

        tr.norms = TrajectoryNorms(Grid(8))
        with pytest.raises(ValueError):
            blowup_integral(tr)


class TestWeakStrong:
    def test_zero_perturbation(self):
        cfg = SolverConfig(n_modes=16, mu=0.1, nu=0.1, dt=2.5e-3, T_end=0.2)
        s0 = random_state(0, 16, 3.0, 0.5)
        r = weak_strong_experiment(cfg, s0, StatePair.zeros(cfg.grid))
        assert r.passed
        assert not np.any(r.envelope["lhs"])

    def test_perturbed_run_and_cancellations(self):
        cfg = SolverConfig(n_modes=16, mu=0.1, nu=0.1, dt=2.5e-3, T_end=0.5, snapshot_stride=50)
        s0 = preset_state("tg-plus-b", cfg.grid)
        d = random_state(7, 16, 3.0, 1.0)
        d = d * (1e-2 / pair_norm(d, 0.0, 2.0))
        r = weak_strong_experiment(cfg, s0, d)
        assert r.passed
        assert r.meta["lhs0"] > 0
        assert len(r.run.cancellations) == 1 + 200 // 50
        assert r.empirical_constant <= r.meta["constant"]
        env = r.envelope
        assert np.all(np.diff(env["blowup_integral"]) >= 0)


class TestSuites:
    def test_unknown_suite(self):
        with pytest.raises(ValueError):
            run_suite("nope", [0])

    def test_lemma_report_and_worker_independence(self):
        a = run_suite("lemmas", [0, 1], 16)
        b = run_suite("lemmas", [0, 1], 16, workers=2)
        assert a == b
        assert a["pass"]
        assert {"interpolation", "product", "l2_h1_embedding", "bilinear", "heat_estimate", "free_evolution", "continuum_chi_m1"} <= set(a["families"])
        json.dumps(a)

    def test_calibration_sample_shape(self):
        out = calibration_sample(0, 16)
        assert set(out["constants"]) == set(CALIBRATED)
        assert all(isinstance(c, CheckResult) for c in out["checks"])

    def test_suite_config(self):
        assert suite_config(32).mu == 0.1


class TestJson:
    def test_non_finite_serialised(self):
        r = CheckResult("x", math.inf, 0.0, math.inf, False, None, {"v": np.float64(math.nan), "a": np.arange(2)})
        d = json.loads(json.dumps(r.to_json()))
        assert d["lhs"] == "inf" and d["pass"] is False and d["meta"]["a"] == [0, 1]
