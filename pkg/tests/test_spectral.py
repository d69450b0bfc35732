import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import band_limited
from lpsda.errors import ConfigError, OutOfRangeError
from lpsda.spectral import (
    PeriodicGrid1D,
    TimeGrid,
    Trajectory,
    fourier_shift,
    padded_square,
    resample_linear,
    resample_trigonometric,
    spectral_antiderivative,
    spectral_derivative,
    time_interpolate,
    time_resample,
    wavenumbers,
)

TWO_PI = 2 * np.pi


def naive_interpolant(u, length, xq):
    """Direct O(N^2) evaluation of the real trigonometric interpolant."""
    n = u.size
    x = np.arange(n) * length / n
    out = np.zeros_like(xq, dtype=float)
    for m in range(n // 2 + 1):
        c = np.sum(u * np.exp(-2j * np.pi * m * x / length)) / n
        w = 1.0 if m == 0 or (n % 2 == 0 and m == n // 2) else 2.0
        term = c * np.exp(2j * np.pi * m * xq / length)
        out += w * (term.real if not (n % 2 == 0 and m == n // 2) else c.real * np.cos(2 * np.pi * m * xq / length))
    return out


class TestGrids:
    def test_sample_positions_left_endpoint(self):
        g = PeriodicGrid1D(2.0, 4)
        np.testing.assert_array_equal(g.x, [0.0, 0.5, 1.0, 1.5])
        assert g.dx == 0.5

    @pytest.mark.parametrize("length,n", [(0.0, 8), (-1.0, 8), (1.0, 3), (np.inf, 8), (1.0, 4.5)])
    def test_invalid_grid(self, length, n):
        with pytest.raises(ConfigError):
            PeriodicGrid1D(length, n)

    def test_time_grid_endpoints(self):
        tg = TimeGrid(0.3, 7)
        assert tg.times[0] == 0.0 and tg.times[-1] == 0.3
        assert np.all(np.diff(tg.times) > 0)

    def test_trajectory_rejects_nonfinite_and_bad_shape(self):
        g, tg = PeriodicGrid1D(1.0, 4), TimeGrid(1.0, 2)
        with pytest.raises(ConfigError):
            Trajectory(g, tg, np.zeros((3, 4)))
        bad = np.zeros((2, 4))
        bad[1, 2] = np.nan
        with pytest.raises(ConfigError):
            Trajectory(g, tg, bad)

    def test_window_must_fit(self):
        g = PeriodicGrid1D(1.0, 4)
        with pytest.raises(ConfigError):
            Trajectory(g, TimeGrid(1.0, 5), np.zeros((5, 4)), window=TimeGrid(2.0, 3))


class TestWavenumbers:
    def test_fft_ordering_n4(self):
        np.testing.assert_allclose(wavenumbers(PeriodicGrid1D(TWO_PI, 4)), [0, 1, -2, -1])

    def test_fft_ordering_n8(self):
        np.testing.assert_allclose(wavenumbers(PeriodicGrid1D(TWO_PI, 8)), [0, 1, 2, 3, -4, -3, -2, -1])

    def test_scaling_with_length(self):
        np.testing.assert_allclose(wavenumbers(PeriodicGrid1D(4 * np.pi, 4)), [0, 0.5, -1, -0.5])


class TestDerivative:
    def test_sine_first_derivative(self):
        g = PeriodicGrid1D(3.0, 64)
        k = TWO_PI / 3.0
        d = spectral_derivative(np.sin(k * g.x), g, 1)
        np.testing.assert_allclose(d, k * np.cos(k * g.x), atol=1e-10 * k)

    @pytest.mark.parametrize("order", [1, 2, 3, 4])
    def test_constant_has_zero_derivative(self, order):
        g = PeriodicGrid1D(5.0, 32)
        assert np.max(np.abs(spectral_derivative(np.full(32, 3.7), g, order))) < 1e-12

    def test_second_derivative_matches_fourth_order_fd(self, rng):
        # derivative of the trigonometric interpolant, FD on a refined sampling of it
        g = PeriodicGrid1D(7.0, 64)
        u = band_limited(g, rng, 16)
        d2 = spectral_derivative(u, g, 2)
        errors = []
        for refine in (8, 16):
            fine = PeriodicGrid1D(7.0, 64 * refine)
            uf = resample_trigonometric(u, g, fine.x)
            h = fine.dx
            fd = (-np.roll(uf, -2) + 16 * np.roll(uf, -1) - 30 * uf + 16 * np.roll(uf, 1) - np.roll(uf, 2)) / (12 * h**2)
            errors.append(np.max(np.abs(fd[::refine] - d2)))
        assert errors[1] < errors[0] / 12  # about 2^4
        assert errors[1] < 1e-5 * np.max(np.abs(d2))

    def test_odd_order_zeroes_nyquist(self):
        g = PeriodicGrid1D(1.0, 8)
        nyq = np.cos(np.pi * np.arange(8))
        assert np.max(np.abs(spectral_derivative(nyq, g, 1))) < 1e-12
        assert np.max(np.abs(spectral_derivative(nyq, g, 3))) < 1e-9

    def test_order_zero_is_copy(self, rng):
        g = PeriodicGrid1D(1.0, 8)
        u = rng.normal(size=8)
        out = spectral_derivative(u, g, 0)
        np.testing.assert_array_equal(out, u)
        assert out is not u

    def test_negative_order_rejected(self):
        with pytest.raises(ConfigError):
            spectral_derivative(np.zeros(8), PeriodicGrid1D(1.0, 8), -1)

    @given(st.floats(-5, 5), st.floats(-5, 5), st.integers(1, 4), st.integers(0, 2**32 - 1))
    def test_linearity(self, alpha, beta, order, seed):
        rng = np.random.default_rng(seed)
        g = PeriodicGrid1D(2.5, 32)
        f, h = rng.normal(size=32), rng.normal(size=32)
        lhs = spectral_derivative(alpha * f + beta * h, g, order)
        rhs = alpha * spectral_derivative(f, g, order) + beta * spectral_derivative(h, g, order)
        scale = max(1.0, np.max(np.abs(lhs)))
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale

    def test_antiderivative_inverts_derivative(self, rng):
        g = PeriodicGrid1D(4.0, 64)
        u = band_limited(g, rng, 10, zero_mean=True)
        np.testing.assert_allclose(spectral_derivative(spectral_antiderivative(u, g), g, 1), u, atol=1e-12)


class TestShift:
    def test_full_period_identity(self, rng):
        g = PeriodicGrid1D(3.3, 64)
        u = rng.normal(size=64)
        np.testing.assert_allclose(fourier_shift(u, g, g.length), u, atol=1e-12)

    def test_one_sample_is_roll(self, rng):
        g = PeriodicGrid1D(3.3, 64)
        u = rng.normal(size=64)
        np.testing.assert_allclose(fourier_shift(u, g, g.dx), np.roll(u, 1), atol=1e-12)

    def test_fractional_shift_matches_dense_evaluation(self, rng):
        g = PeriodicGrid1D(5.0, 32)
        u = band_limited(g, rng, 12)
        eps = 0.3 * g.dx
        np.testing.assert_allclose(fourier_shift(u, g, eps), naive_interpolant(u, g.length, g.x - eps), atol=1e-12)

    def test_half_period_of_sine(self):
        g = PeriodicGrid1D(2.0, 16)
        u = np.sin(np.pi * g.x)
        np.testing.assert_allclose(fourier_shift(u, g, 1.0), -u, atol=1e-12)

    def test_per_frame_shifts(self, rng):
        g = PeriodicGrid1D(2.0, 16)
        u = band_limited(g, rng, 5)
        stack = np.stack([u, u, u])
        out = fourier_shift(stack, g, np.array([0.0, 0.1, 0.2]))
        for row, eps in zip(out, (0.0, 0.1, 0.2)):
            np.testing.assert_allclose(row, fourier_shift(u, g, eps), atol=1e-14)

    def test_per_frame_shape_mismatch(self):
        g = PeriodicGrid1D(2.0, 16)
        with pytest.raises(ConfigError):
            fourier_shift(np.zeros((2, 16)), g, np.zeros(3))

    @given(st.floats(-50, 50), st.floats(-50, 50), st.integers(0, 2**32 - 1))
    def test_group_property(self, a, b, seed):
        rng = np.random.default_rng(seed)
        g = PeriodicGrid1D(6.0, 32)
        u = band_limited(g, rng, 15)
        lhs = fourier_shift(fourier_shift(u, g, a), g, b)
        rhs = fourier_shift(u, g, a + b)
        assert np.max(np.abs(lhs - rhs)) <= 1e-11 * np.max(np.abs(u))

    @given(st.floats(-100, 100), st.integers(0, 2**32 - 1))
    def test_mean_preserved(self, eps, seed):
        rng = np.random.default_rng(seed)
        g = PeriodicGrid1D(6.0, 32)
        u = rng.normal(size=32) + 3.0
        assert abs(fourier_shift(u, g, eps).mean() - u.mean()) < 1e-12 * max(1, abs(u.mean()))

    def test_huge_shift_reduced_modulo_length(self, rng):
        g = PeriodicGrid1D(1.0, 16)
        u = band_limited(g, rng, 6)
        np.testing.assert_allclose(fourier_shift(u, g, 1e6 + 0.25), fourier_shift(u, g, 0.25), atol=1e-9)


class TestResampling:
    def test_grid_points_identity(self, rng):
        g = PeriodicGrid1D(2.7, 33)
        u = rng.normal(size=33)
        np.testing.assert_allclose(resample_trigonometric(u, g, g.x), u, atol=1e-12)

    def test_sine_at_eighth(self):
        g = PeriodicGrid1D(2.0, 16)
        val = resample_trigonometric(np.sin(np.pi * g.x), g, [0.25])
        assert abs(val[0] - np.sin(np.pi / 4)) < 1e-10

    @pytest.mark.parametrize("n", [16, 17])
    def test_matches_dft_sum(self, rng, n):
        g = PeriodicGrid1D(3.0, n)
        u = rng.normal(size=n)
        xq = rng.uniform(-3, 6, size=25)
        np.testing.assert_allclose(resample_trigonometric(u, g, xq), naive_interpolant(u, 3.0, xq), atol=1e-12)

    def test_nonfinite_positions(self):
        g = PeriodicGrid1D(1.0, 8)
        with pytest.raises(OutOfRangeError):
            resample_trigonometric(np.zeros(8), g, [np.nan])

    def test_stack_shape(self, rng):
        g = PeriodicGrid1D(1.0, 8)
        out = resample_trigonometric(rng.normal(size=(3, 8)), g, np.zeros((2, 5)))
        assert out.shape == (3, 2, 5)

    def test_linear_grid_points_exact(self, rng):
        g = PeriodicGrid1D(2.0, 10)
        u = rng.normal(size=10)
        np.testing.assert_array_equal(resample_linear(u, g, g.x), u)

    def test_linear_midpoint(self, rng):
        g = PeriodicGrid1D(2.0, 10)
        u = rng.normal(size=10)
        assert resample_linear(u, g, [g.x[3] + g.dx / 2])[0] == pytest.approx(0.5 * (u[3] + u[4]))

    def test_linear_wraps(self, rng):
        g = PeriodicGrid1D(2.0, 10)
        u = rng.normal(size=10)
        assert resample_linear(u, g, [g.length - g.dx / 2])[0] == pytest.approx(0.5 * (u[-1] + u[0]))
        assert resample_linear(u, g, [g.length + g.x[2]])[0] == pytest.approx(u[2])


class TestPaddedSquare:
    @pytest.mark.parametrize("n", [4, 9, 16, 30, 256])
    def test_matches_fine_grid_projection(self, rng, n):
        g = PeriodicGrid1D(1.0, n)
        u = rng.normal(size=n)
        m = 8 * n
        uf = resample_trigonometric(u, g, np.arange(m) / m)
        ref = np.fft.rfft(uf**2)[: n // 2 + 1] * (n / m)
        if n % 2 == 0:
            ref[n // 2] = 2 * ref[n // 2].real
        np.testing.assert_allclose(padded_square(np.fft.rfft(u), n), ref, atol=1e-11 * n)

    def test_agrees_with_plain_square_when_resolved(self, rng):
        g = PeriodicGrid1D(1.0, 64)
        u = band_limited(g, rng, 10)
        np.testing.assert_allclose(padded_square(np.fft.rfft(u), 64), np.fft.rfft(u * u), atol=1e-11)


def _trajectory(fn, n_t=41, horizon=2.0):
    g = PeriodicGrid1D(TWO_PI, 16)
    tg = TimeGrid(horizon, n_t)
    return Trajectory(g, tg, fn(g.x[None, :], tg.times[:, None]))


class TestTimeInterpolation:
    def test_node_returns_stored_frame(self):
        traj = _trajectory(lambda x, t: np.sin(x) * np.cos(t))
        for j in (0, 7, 40):
            np.testing.assert_array_equal(time_interpolate(traj, traj.time_grid.times[j]), traj.values[j])

    def test_linear_in_time_exact(self):
        traj = _trajectory(lambda x, t: 1.5 * t + np.sin(x))
        for t in (0.013, 0.77, 1.999):
            np.testing.assert_allclose(time_interpolate(traj, t), 1.5 * t + np.sin(traj.grid.x), atol=1e-13)

    def test_cubic_in_time_exact(self):
        traj = _trajectory(lambda x, t: t**3 - t + np.cos(x))
        t = 1.2345
        np.testing.assert_allclose(time_interpolate(traj, t), t**3 - t + np.cos(traj.grid.x), atol=1e-12)

    def test_fourth_order_convergence(self):
        errs = []
        for n_t in (21, 41, 81):
            traj = _trajectory(lambda x, t: np.sin(x) * np.cos(3 * t), n_t=n_t)
            ts = np.linspace(0, 2.0, 97)
            approx = time_resample(traj, ts)
            exact = np.sin(traj.grid.x)[None, :] * np.cos(3 * ts)[:, None]
            errs.append(np.max(np.abs(approx - exact)))
        rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(rates > 3.6)

    @pytest.mark.parametrize("t", [-0.01, 2.01])
    def test_out_of_range(self, t):
        traj = _trajectory(lambda x, t: np.sin(x) + t)
        with pytest.raises(OutOfRangeError):
            time_interpolate(traj, t)

    def test_needs_four_frames(self):
        traj = _trajectory(lambda x, t: np.sin(x) + t, n_t=3)
        with pytest.raises(ConfigError):
            time_interpolate(traj, 0.5)
