import numpy as np
import pytest
from hypothesis import given, strategies as st

from chi_mhd.fields import RandomFieldSpec, random_field, random_state, stress_field
from chi_mhd.spectral import (
    Grid,
    SpectralField,
    StatePair,
    VectorField,
    divergence,
    from_physical,
    inner,
    leray_project,
    nonlinear_coeffs,
    nonlinear_rhs,
    taylor_green,
    to_physical,
)

from conftest import dense_nonlinear

seeds = st.integers(0, 10_000)


def raw_vector(seed, n=16):
    """Arbitrary (not divergence-free) Hermitian vector field."""
    f = random_field(RandomFieldSpec(seed, 2.0, 1.0, False, n))
    return f


class TestGrid:
    def test_rejects_small_or_odd(self):
        for n in (6, 7, 9, 0, -8):
            with pytest.raises(ValueError):
                Grid(n)
        with pytest.raises(ValueError):
            Grid(16, period=0.0)

    def test_wavenumbers(self):
        g = Grid(8, period=4 * np.pi)
        assert g.k[0].min() == -4 and g.k[0].max() == 3
        assert np.allclose(g.xi[0], 0.5 * g.k[0])
        nz = (g.k[0] != 0) | (g.k[1] != 0)
        assert np.all(g.xi_abs[nz] > 0)


class TestLeray:
    def test_gradient_is_annihilated(self):
        g = Grid(16)
        a = random_field(RandomFieldSpec(3, 2.0, 1.0, False, 16, vector=False))
        grad = VectorField(g, 1j * g.xi * a.coeffs)
        assert np.max(np.abs(leray_project(grad).coeffs)) < 1e-14

    def test_divergence_free_unchanged(self):
        f = random_field(RandomFieldSpec(5, 2.0, 1.0, True, 16))
        assert np.allclose(leray_project(f).coeffs, f.coeffs, atol=1e-15)

    def test_single_mode_example(self):
        g = Grid(16)
        c = np.zeros((2, 16, 16), complex)
        c[:, 1, 0] = (1.0, 1.0)
        c[:, -1, 0] = (1.0, 1.0)
        p = leray_project(VectorField(g, c)).coeffs
        assert np.allclose(p[:, 1, 0], (0.0, 1.0))

    @given(seeds)
    def test_idempotent_and_divergence_free(self, seed):
        v = raw_vector(seed)
        p1 = leray_project(v)
        p2 = leray_project(p1)
        assert np.max(np.abs(p2.coeffs - p1.coeffs)) <= 1e-14 * max(1.0, np.max(np.abs(p1.coeffs)))
        d = divergence(p1).coeffs
        scale = np.max(np.abs(p1.coeffs)) * np.max(v.grid.xi_abs)
        assert np.max(np.abs(d)) <= 1e-12 * scale


class TestDivergence:
    def test_gradient_mode(self):
        g = Grid(16)
        c = np.zeros((2, 16, 16), complex)
        k = (2, 1)
        a = 0.7
        c[:, k[0], k[1]] = 1j * g.xi[:, k[0], k[1]] * a
        d = divergence(VectorField(g, c)).coeffs
        assert d[k] == pytest.approx(-g.xi_sq[k] * a)

    def test_zero(self):
        g = Grid(8)
        assert not np.any(divergence(VectorField.zeros(g)).coeffs)


class TestNonlinear:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_dense_convolution_oracle(self, seed):
        g = Grid(16)
        s = random_state(seed, 16, 1.5, 1.0)
        got = nonlinear_coeffs(g, s.coeffs)
        want = dense_nonlinear(g, s.coeffs)
        band = (np.abs(g.k[0]) < 16 / 3) & (np.abs(g.k[1]) < 16 / 3)
        err = np.max(np.abs(got - want)[..., band])
        assert err <= 1e-10 * np.max(np.abs(want))
        assert np.max(np.abs(got[..., ~band])) == 0.0

    def test_taylor_green_nonlinearity_is_gradient(self):
        g = Grid(16)
        s = StatePair(taylor_green(g), VectorField.zeros(g))
        nu, nb = nonlinear_rhs(s)
        assert np.max(np.abs(nu.coeffs)) < 1e-15
        assert np.max(np.abs(nb.coeffs)) == 0.0
        # and the oracle agrees that the projected term vanishes
        assert np.max(np.abs(dense_nonlinear(g, s.coeffs))) < 1e-15

    @given(seeds)
    def test_aligned_fields_cancel(self, seed):
        u = random_field(RandomFieldSpec(seed, 2.0, 1.0, True, 16))
        nu, nb = nonlinear_rhs(StatePair(u, u))
        assert np.max(np.abs(nu.coeffs)) < 1e-14
        assert np.max(np.abs(nb.coeffs)) < 1e-14

    def test_zero_state(self):
        g = Grid(8)
        nu, nb = nonlinear_rhs(StatePair.zeros(g))
        assert not np.any(nu.coeffs) and not np.any(nb.coeffs)

    @given(seeds, st.sampled_from([16, 32]))
    def test_energy_neutral_mean_free_divergence_free(self, seed, n):
        s = StatePair(stress_field(seed, n), stress_field(seed + 1, n))
        out = nonlinear_coeffs(s.grid, s.coeffs)
        g = s.grid
        assert np.all(out[:, :, 0, 0] == 0)
        work = inner(g, out[0], s.u.coeffs) + inner(g, out[1], s.b.coeffs)
        norm = lambda c: np.sqrt(inner(g, c, c))  # noqa: E731
        scale = norm(out[0]) * norm(s.u.coeffs) + norm(out[1]) * norm(s.b.coeffs)
        assert abs(work) <= 1e-10 * max(scale, 1e-300)
        d = divergence(VectorField(g, out[0])).coeffs
        assert np.max(np.abs(d)) <= 1e-12 * max(np.max(np.abs(out[0])) * np.max(g.xi_abs), 1e-300)

    def test_grid_mismatch(self):
        with pytest.raises(ValueError):
            StatePair(VectorField.zeros(Grid(8)), VectorField.zeros(Grid(16)))


class TestTransforms:
    def test_single_mode_round_trip(self):
        g = Grid(16)
        f = SpectralField.single_mode(g, (2, -3), 0.5 - 0.25j)
        x, y = g.coordinates()
        samples = to_physical(f)
        want = (0.5 - 0.25j) * np.exp(1j * (2 * x - 3 * y))
        assert np.allclose(samples, want, atol=1e-14)
        assert np.allclose(from_physical(g, samples).coeffs, f.coeffs, atol=1e-15)

    @given(seeds)
    def test_random_round_trip(self, seed):
        f = random_field(RandomFieldSpec(seed, 2.0, 1.0, True, 32))
        back = from_physical(f.grid, to_physical(f))
        assert np.max(np.abs(back.coeffs - f.coeffs)) <= 1e-12 * np.max(np.abs(f.coeffs))

    def test_zero_and_size_mismatch(self):
        g = Grid(8)
        z = to_physical(SpectralField.zeros(g))
        assert not np.any(z)
        assert not np.any(from_physical(g, z).coeffs)
        with pytest.raises(ValueError):
            from_physical(g, np.zeros((9, 9)))


class TestFields:
    def test_hermitian_and_mean_free(self):
        f = random_field(RandomFieldSpec(1, 2.0, 1.0, True, 32))
        assert f.is_hermitian() and f.mean_free

    def test_immutable(self):
        f = random_field(RandomFieldSpec(1, 2.0, 1.0, True, 16))
        with pytest.raises(ValueError):
            f.coeffs[0, 1, 1] = 3.0
