"""Spectral Maxwell solver: exact plane-wave propagation, energy
conservation, constraints, gauge potential, flux identities, and field
snapshot round-trips."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vmlab import maxwell as mx


def _grid(n=32, box=10.0):
    return mx.Grid(n, n, box, box)


def _no_sources(grid):
    return mx.SourceDensities(grid=grid, rho=np.zeros((grid.nx, grid.ny)),
                              j=np.zeros((3, grid.nx, grid.ny)))


def _band_limited_state(grid, mode, seed=0):
    """Random field with empty mean and Nyquist rows (the subspace on which
    the propagator is exact)."""
    rng = np.random.default_rng(seed)
    st_ = mx.FieldState.zeros(mode, grid)
    for arr in (st_.E, st_.B):
        comps = range(3) if mode == "2.5d" else None
        for c in range(3):
            a = np.fft.fft2(rng.standard_normal((grid.nx, grid.ny)))
            a[0, 0] = 0.0
            a[grid.nx // 2, :] = 0.0
            a[:, grid.ny // 2] = 0.0
            arr[c] = np.fft.ifft2(a).real
    if mode == "2d":
        st_.E[2] = 0.0
        st_.B[0] = 0.0
        st_.B[1] = 0.0
    return st_


class TestGrid:
    def test_spacings(self):
        g = mx.Grid(10, 20, 5.0, 8.0)
        assert g.hx == 0.5
        assert g.hy == 0.4
        assert g.cell == pytest.approx(0.2)

    def test_gradient_wavenumbers_zero_nyquist(self):
        g = _grid(8)
        kx, ky = g.gradient_wavenumbers()
        assert kx[4, 0] == 0.0
        assert ky[0, 4] == 0.0
        kxf, _ = g.wavenumbers()
        assert kxf[4, 0] != 0.0


class TestFieldState:
    def test_planar_ansatz_enforced(self):
        g = _grid(8)
        E = np.zeros((3, 8, 8))
        B = np.zeros((3, 8, 8))
        E[2] = 1.0
        with pytest.raises(ValueError):
            mx.FieldState(mode="2d", grid=g, E=E, B=B)

    def test_unknown_mode_rejected(self):
        g = _grid(8)
        with pytest.raises(ValueError):
            mx.FieldState.zeros("3d", g)


class TestPropagator:
    def test_plane_wave_exact(self):
        # E = cos(k x1) e2, B = cos(k x1) e3 translates at speed 1
        g = _grid(64, 2.0 * np.pi)
        x, _ = g.mesh()
        k = 3.0
        st_ = mx.FieldState.zeros("2d", g)
        st_.E[1] = np.cos(k * x)
        st_.B[2] = np.cos(k * x)
        dt = 0.05
        cur = st_
        for _ in range(20):
            cur = mx.step_maxwell(cur, _no_sources(g), dt)
        t = 20 * dt
        assert np.abs(cur.E[1] - np.cos(k * (x - t))).max() < 1e-12
        assert np.abs(cur.B[2] - np.cos(k * (x - t))).max() < 1e-12

    @pytest.mark.parametrize("mode", ["2d", "2.5d"])
    def test_source_free_energy_exact(self, mode):
        g = _grid(32)
        st_ = _band_limited_state(g, mode)
        e0 = mx.field_energy(st_)
        cur = st_
        for _ in range(100):
            cur = mx.step_maxwell(cur, _no_sources(g), 0.05)
        assert abs(mx.field_energy(cur) - e0) / e0 < 1e-12

    def test_reversibility(self):
        g = _grid(32)
        st_ = _band_limited_state(g, "2.5d", seed=4)
        fwd = mx.step_maxwell(st_, _no_sources(g), 0.1)
        back = mx.step_maxwell(fwd, _no_sources(g), -0.1)
        assert np.abs(back.E - st_.E).max() < 1e-12
        assert np.abs(back.B - st_.B).max() < 1e-12

    def test_uniform_current_k0_mode(self):
        # at k = 0 the update is exactly dE/dt = -j
        g = _grid(16)
        src = _no_sources(g)
        src.j[0] += 2.0
        st_ = mx.FieldState.zeros("2.5d", g)
        out = mx.step_maxwell(st_, src, 0.25)
        assert np.allclose(out.E[0], -0.5)
        assert np.allclose(out.B, 0.0)

    def test_cfl_guard(self):
        g = _grid(16, 1.0)   # h = 1/16
        st_ = mx.FieldState.zeros("2d", g)
        with pytest.raises(ValueError):
            mx.step_maxwell(st_, _no_sources(g), 0.5)

    def test_divb_preserved(self):
        g = _grid(32)
        st_ = _band_limited_state(g, "2.5d", seed=7)
        # project B onto divergence-free fields first
        kx, ky = g.gradient_wavenumbers()
        k2 = kx * kx + ky * ky
        ks = np.where(k2 > 0, k2, 1.0)
        b1k, b2k = np.fft.fft2(st_.B[0]), np.fft.fft2(st_.B[1])
        par = np.where(k2 > 0, (kx * b1k + ky * b2k) / ks, 0.0)
        st_.B[0] = np.fft.ifft2(b1k - kx * par).real
        st_.B[1] = np.fft.ifft2(b2k - ky * par).real
        _, res0 = mx.constraint_residual(st_, np.zeros((g.nx, g.ny)))
        cur = st_
        for _ in range(50):
            cur = mx.step_maxwell(cur, _no_sources(g), 0.05)
        _, res = mx.constraint_residual(cur, np.zeros((g.nx, g.ny)))
        assert res0 < 1e-12
        assert res < 1e-12


class TestConstraints:
    def test_poisson_solution_satisfies_gauss(self):
        g = _grid(32)
        rng = np.random.default_rng(2)
        rho = rng.standard_normal((g.nx, g.ny))
        E = mx.poisson_efield(rho, g)
        st_ = mx.FieldState.zeros("2d", g)
        st_.E[0], st_.E[1] = E[0], E[1]
        resE, resB = mx.constraint_residual(st_, rho)
        assert resE < 1e-12
        assert resB == 0.0

    def test_poisson_is_curl_free(self):
        g = _grid(32)
        rng = np.random.default_rng(3)
        E = mx.poisson_efield(rng.standard_normal((g.nx, g.ny)), g)
        kx, ky = g.gradient_wavenumbers()
        curl = np.fft.ifft2(1j * (kx * np.fft.fft2(E[1])
                                  - ky * np.fft.fft2(E[0]))).real
        assert np.abs(curl).max() < 1e-12

    def test_net_charge_neutralized(self):
        # adding a constant to rho does not change the residual
        g = _grid(16)
        rng = np.random.default_rng(4)
        rho = rng.standard_normal((g.nx, g.ny))
        st_ = mx.FieldState.zeros("2d", g)
        r1, _ = mx.constraint_residual(st_, rho)
        r2, _ = mx.constraint_residual(st_, rho + 5.0)
        assert r1 == pytest.approx(r2, rel=1e-12)


class TestGauge:
    def test_a3_reproduces_inplane_b(self):
        g = _grid(32)
        x, y = g.mesh()
        a3 = (np.cos(2 * np.pi * x / g.lx) * np.sin(4 * np.pi * y / g.ly)
              + 0.3 * np.sin(6 * np.pi * (x + y) / g.lx))
        kx, ky = g.gradient_wavenumbers()
        a3k = np.fft.fft2(a3)
        st_ = mx.FieldState.zeros("2.5d", g)
        st_.B[0] = np.fft.ifft2(1j * ky * a3k).real
        st_.B[1] = -np.fft.ifft2(1j * kx * a3k).real
        gauge = mx.gauge_a3(st_)
        assert np.abs(gauge.a3 - (a3 - a3.mean())).max() < 1e-10

    def test_rejected_in_planar_mode(self):
        st_ = mx.FieldState.zeros("2d", _grid(8))
        with pytest.raises(ValueError):
            mx.gauge_a3(st_)

    def test_evolve_a3(self):
        g = _grid(8)
        gauge = mx.GaugeState(grid=g, a3=np.ones((8, 8)), time=0.0)
        out = mx.evolve_a3(gauge, np.full((8, 8), 2.0), 0.25)
        assert np.allclose(out.a3, 0.5)
        assert out.time == 0.25


vec3 = st.lists(st.floats(-100, 100, allow_nan=False), min_size=3, max_size=3)


class TestFluxIdentity:
    @given(vec3, vec3, st.floats(0, 2 * math.pi))
    @settings(max_examples=200)
    def test_pointwise_identity(self, E, B, ang):
        E = np.array(E)
        B = np.array(B)
        om = np.array([math.cos(ang), math.sin(ang)])
        lhs = mx.flux_identity_lhs(E, B, om)
        om3 = np.array([om[0], om[1], 0.0])
        rhs = 0.25 * ((E @ om3) ** 2 + (B @ om3) ** 2
                      + np.sum((E - np.cross(om3, B)) ** 2)
                      + np.sum((B + np.cross(om3, E)) ** 2))
        scale = max(1.0, abs(lhs), abs(rhs))
        assert abs(lhs - rhs) / scale < 1e-12

    @given(vec3, vec3, st.floats(0, 2 * math.pi))
    @settings(max_examples=200)
    def test_good_component_consistency(self, E, B, ang):
        # the 2.5d good square equals 2 (lhs of the flux identity restricted
        # to the outgoing combinations); the planar form matches it when the
        # field obeys the planar ansatz
        E = np.array([E[0], E[1], 0.0])
        B = np.array([0.0, 0.0, B[2]])
        om = np.array([math.cos(ang), math.sin(ang)])
        g2 = mx.good_component_sq(E[None, :], B[None, :], om[None, :], "2d")
        g3 = mx.good_component_sq(E[None, :], B[None, :], om[None, :], "2.5d")
        assert g2[0] == pytest.approx(g3[0], rel=1e-12, abs=1e-12)


class TestInterp:
    def test_exact_on_linear_data_nodes(self):
        g = _grid(8, 8.0)
        arr = np.arange(64, dtype=float).reshape(8, 8)
        pos = np.array([[2.0, 3.0], [5.0, 1.0]])
        vals = mx.interp_bilinear(g, arr, pos)
        assert vals[0] == arr[2, 3]
        assert vals[1] == arr[5, 1]

    def test_periodic_wrap(self):
        g = _grid(4, 4.0)
        arr = np.zeros((4, 4))
        arr[0, 0] = 1.0
        v = mx.interp_bilinear(g, arr, np.array([[3.5, 0.0]]))
        assert v[0] == pytest.approx(0.5)


class TestSpectralWave:
    def test_standing_wave_exact(self):
        g = _grid(64, 2.0 * np.pi)
        x, _ = g.mesh()
        k = 2.0
        wave = mx.SpectralWave(g, np.cos(k * x), np.zeros_like(x))
        dt, n = 0.02, 50
        for _ in range(n):
            wave.step(np.zeros_like(x), dt)
        assert np.abs(wave.u - np.cos(k * x) * np.cos(k * n * dt)).max() < 1e-12

    def test_constant_source_k0(self):
        # box u = 1 with zero data gives u = t^2 / 2 at k = 0
        g = _grid(8)
        wave = mx.SpectralWave(g, np.zeros((8, 8)), np.zeros((8, 8)))
        for _ in range(10):
            wave.step(np.ones((8, 8)), 0.1)
        assert np.abs(wave.u - 0.5).max() < 1e-12


class TestSnapshots:
    def test_roundtrip_byte_identical(self, tmp_path):
        g = _grid(8)
        st_ = _band_limited_state(g, "2.5d", seed=9)
        st_.time = 1.25
        f1, f2 = tmp_path / "f1.csv", tmp_path / "f2.csv"
        mx.save_field(st_, f1)
        back = mx.load_field(f1)
        assert np.array_equal(st_.E, back.E)
        assert np.array_equal(st_.B, back.B)
        assert back.time == st_.time
        assert back.mode == "2.5d"
        mx.save_field(back, f2)
        assert f1.read_bytes() == f2.read_bytes()

    def test_bad_header(self, tmp_path):
        f = tmp_path / "x.csv"
        f.write_text("nonsense\n")
        with pytest.raises(ValueError):
            mx.load_field(f)
