import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chi_mhd.fields import RandomFieldSpec, random_field, random_state, stress_field
from chi_mhd.norms import (
    CSV_COLUMNS,
    DivergentIntegral,
    NormReport,
    TrajectoryNorms,
    chi_norm,
    continuum_radial_chi_norm,
    h1_seminorm,
    l2_norm,
    pair_norm,
    tilde_linf_norm,
    time_lp_norm,
)
from chi_mhd.semigroup import heat_propagate
from chi_mhd.spectral import Grid, SpectralField, StatePair, VectorField

seeds = st.integers(0, 100_000)
s_values = st.sampled_from([-1.0, -0.5, 0.0, 0.5, 1.0, 2.0])


def mode(grid, k, value):
    """Real single-frequency field: value at k and its conjugate at -k."""
    c = np.zeros(grid.shape, complex)
    c[k] = value
    c[(-k[0]) % grid.n_modes, (-k[1]) % grid.n_modes] = np.conj(value)
    return SpectralField(grid, c)


class TestChiNorm:
    def test_single_mode_value(self):
        g = Grid(16)
        f = SpectralField.single_mode(g, (2, 0), 3.0)
        assert chi_norm(f, -1.0) == pytest.approx(1.5)

    def test_zero_and_additivity(self):
        g = Grid(16)
        assert chi_norm(SpectralField.zeros(g), -1.0) == 0.0
        f = SpectralField.single_mode(g, (1, 2), 0.5)
        h = SpectralField.single_mode(g, (3, -1), 2.0)
        assert chi_norm(f + h, 0.5) == pytest.approx(chi_norm(f, 0.5) + chi_norm(h, 0.5), rel=1e-15)

    def test_negative_s_needs_mean_free(self):
        g = Grid(8)
        f = SpectralField.single_mode(g, (0, 0), 1.0)
        with pytest.raises(ValueError):
            chi_norm(f, -1.0)
        assert chi_norm(f, 1.0) == 0.0

    def test_vector_uses_euclidean_magnitude(self):
        g = Grid(8)
        c = np.zeros((2, 8, 8), complex)
        c[:, 1, 0] = (3.0, 4.0j)
        assert chi_norm(VectorField(g, c), 0.0) == pytest.approx(5.0)

    @given(seeds, s_values, st.just(0.0) | st.floats(1e-8, 50) | st.floats(-50, -1e-8))
    def test_scaling(self, seed, s, lam):
        f = stress_field(seed, 16)
        assert chi_norm(f * lam, s) == pytest.approx(abs(lam) * chi_norm(f, s), rel=1e-13, abs=1e-300)

    @settings(max_examples=1000)
    @given(seeds, s_values)
    def test_triangle(self, seed, s):
        f, g = stress_field(seed, 16), stress_field(seed + 7, 16)
        assert chi_norm(f + g, s) <= (chi_norm(f, s) + chi_norm(g, s)) * (1 + 1e-13)

    @given(seeds, s_values, st.integers(0, 2**32 - 1))
    def test_truncation_never_increases(self, seed, s, mask_seed):
        f = stress_field(seed, 16)
        drop = np.random.default_rng(mask_seed).uniform(size=f.grid.shape) < 0.5
        g = VectorField(f.grid, f.coeffs * ~drop)
        assert chi_norm(g, s) <= chi_norm(f, s)


class TestPairAndL2:
    def test_pair_conventions(self):
        st_ = random_state(1, 16)
        u = st_.u
        zero = VectorField.zeros(u.grid)
        for p in (1.0, 2.0, 3.5):
            assert pair_norm(StatePair(u, zero), -1.0, p) == pytest.approx(chi_norm(u, -1.0))
        assert pair_norm(StatePair(u, u), 0.0, 2.0) == pytest.approx(math.sqrt(2) * chi_norm(u, 0.0))
        assert pair_norm(StatePair(u, u), 0.0, 1.0) == pytest.approx(2 * chi_norm(u, 0.0))
        with pytest.raises(ValueError):
            pair_norm(st_, 0.0, 0.0)

    def test_l2_h1_single_mode(self):
        g = Grid(16)
        f = SpectralField.single_mode(g, (1, 0), 1.0)
        assert l2_norm(f) == pytest.approx(2 * math.pi)
        f2 = SpectralField.single_mode(g, (2, 0), 1.0)
        assert h1_seminorm(f2) == pytest.approx(4 * math.pi)
        assert l2_norm(SpectralField.zeros(g)) == 0.0 == h1_seminorm(SpectralField.zeros(g))

    def test_report_labels(self):
        r = NormReport.from_state(random_state(2, 16))
        assert set(r.u) == {"chi_m1", "chi_mhalf", "chi0", "chi1", "l2", "h1"}
        assert all(v >= 0 for v in r.u.values())
        assert r.pair("chi0", 1.0) == pytest.approx(r.u["chi0"] + r.b["chi0"])


def trajectory_norms(grid, times, fields_at):
    tn = TrajectoryNorms(grid, ("f",), ())
    for t in times:
        tn.append(t, fields_at(t))
    return tn


class TestTimeNorms:
    def test_constant_trajectory(self):
        f = random_field(RandomFieldSpec(4, 2.5, 1.0, True, 16))
        T = 2.0
        tn = trajectory_norms(f.grid, np.linspace(0, T, 11), lambda t: f)
        for p in (1.0, 2.0, 3.0):
            assert time_lp_norm(tn, p, 0.0) == pytest.approx(T ** (1 / p) * chi_norm(f, 0.0), rel=1e-13)
        assert tilde_linf_norm(tn, -1.0) == pytest.approx(chi_norm(f, -1.0), rel=1e-14)

    def test_heat_flow(self):
        f = random_field(RandomFieldSpec(4, 2.5, 1.0, True, 16))
        tn = trajectory_norms(f.grid, np.linspace(0, 1, 21), lambda t: heat_propagate(f, 1.0, t))
        assert time_lp_norm(tn, math.inf, 0.0) == pytest.approx(chi_norm(f, 0.0))
        assert tilde_linf_norm(tn, -0.5) == pytest.approx(chi_norm(f, -0.5), rel=1e-14)

    def test_disjoint_supports_tilde_exceeds_linf(self):
        g = Grid(16)
        a, b = mode(g, (1, 0), 1.0), mode(g, (0, 2), 1.0)
        tn = TrajectoryNorms(g, ("f",))
        tn.append(0.0, a)
        tn.append(1.0, b)
        assert tilde_linf_norm(tn, 0.0) == pytest.approx(chi_norm(a, 0.0) + chi_norm(b, 0.0))
        assert tilde_linf_norm(tn, 0.0) > time_lp_norm(tn, math.inf, 0.0)

    @given(seeds, s_values)
    def test_tilde_dominates_linf(self, seed, s):
        rng = np.random.default_rng(seed)
        fields = [stress_field(seed + j, 16) for j in range(4)]
        tn = TrajectoryNorms(fields[0].grid, ("f",), (s,))
        for j, f in enumerate(fields):
            tn.append(float(j), f * rng.uniform(0.1, 2.0))
        assert tilde_linf_norm(tn, s) >= time_lp_norm(tn, math.inf, s) * (1 - 1e-14)

    def test_single_mode_heat_l2_closed_form(self):
        # int_0^inf e^{-2 kappa |xi|^2 t} |c|^2 dt = |c|^2 / (2 kappa |xi|^2), truncated at T >> 1/(kappa |xi|^2)
        g = Grid(16)
        f = SpectralField.single_mode(g, (1, 0), 1.0)
        kappa, T = 1.0, 40.0
        tn = trajectory_norms(g, np.linspace(0, T, 40_001), lambda t: heat_propagate(f, kappa, t))
        assert time_lp_norm(tn, 2.0, 0.0) == pytest.approx(math.sqrt(1 / (2 * kappa)), rel=1e-6)

    def test_trapezoid_order(self):
        g = Grid(16)
        f = mode(g, (1, 1), 0.3 + 0.1j)

        def norm_at(m):
            tn = trajectory_norms(g, np.linspace(0, 1, m + 1), lambda t: f * (1 + 0.5 * np.sin(3 * t)))
            return time_lp_norm(tn, 2.0, 0.0)

        exact = norm_at(20_000)
        errs = [abs(norm_at(m) - exact) for m in (10, 20, 40)]
        orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
        assert min(orders) >= 1.9

    def test_empty_and_bad_p(self):
        tn = TrajectoryNorms(Grid(8), ("f",))
        with pytest.raises(ValueError):
            time_lp_norm(tn, 2.0, 0.0)
        with pytest.raises(ValueError):
            tilde_linf_norm(tn, 0.0)
        tn.append(0.0, SpectralField.zeros(Grid(8)))
        with pytest.raises(ValueError):
            time_lp_norm(tn, 0.5, 0.0)

    def test_times_must_increase(self):
        tn = TrajectoryNorms(Grid(8), ("f",))
        tn.append(0.0, SpectralField.zeros(Grid(8)))
        with pytest.raises(ValueError):
            tn.append(0.0, SpectralField.zeros(Grid(8)))

    def test_csv_header(self):
        s = random_state(0, 16)
        tn = TrajectoryNorms(s.grid)
        tn.append(0.0, s)
        tn.append(0.1, s)
        lines = tn.to_csv().splitlines()
        assert lines[0].startswith("# period=")
        assert "p=1" in lines[0]
        assert lines[1].split(",") == list(CSV_COLUMNS)
        assert len(lines) == 4


class TestContinuum:
    def test_chi_m1_example_is_pi(self):
        assert continuum_radial_chi_norm(lambda r: r**-2, -1.0, 2.0) == pytest.approx(math.pi, abs=1e-8)

    def test_l2_example_is_quarter_pi(self):
        assert continuum_radial_chi_norm(lambda r: r**-4, 0.0, 2.0) == pytest.approx(math.pi / 4, abs=1e-8)

    def test_zero_profile(self):
        assert continuum_radial_chi_norm(lambda r: 0.0, -1.0, 2.0) == 0.0

    def test_finite_range(self):
        # 2 pi int_1^3 r dr = 8 pi
        assert continuum_radial_chi_norm(lambda r: 1.0, 0.0, 1.0, 3.0) == pytest.approx(8 * math.pi)

    def test_divergence_detected(self):
        with pytest.raises(DivergentIntegral):
            continuum_radial_chi_norm(lambda r: r**-2, 0.0, 2.0)
