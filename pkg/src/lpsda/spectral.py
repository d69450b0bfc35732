"""Periodic-domain spectral primitives.

Fields are plain ``numpy`` arrays whose last axis runs over the sample
points of a :class:`PeriodicGrid1D`; every routine here therefore works on a
single frame of shape ``(Nx,)`` as well as a stack of frames ``(Nt, Nx)``.

Conventions
-----------
* Samples sit at the left endpoints ``x_i = i * L / Nx``.
* Transforms are the unnormalised ``numpy.fft`` forward / ``1/N`` inverse pair.
* The Nyquist mode of an even-length grid is treated as the symmetric cosine
  term ``c * cos(pi * Nx * x / L)`` of the trigonometric interpolant. Odd
  derivatives of that term vanish on the grid, so odd-order derivatives zero
  it; a shift by ``eps`` multiplies it by ``cos(k_nyq * eps)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache

import numpy as np
from scipy.fft import next_fast_len

from .errors import ConfigError, OutOfRangeError

__all__ = [
    "PeriodicGrid1D",
    "TimeGrid",
    "Trajectory",
    "wavenumbers",
    "rfft_wavenumbers",
    "spectral_derivative",
    "spectral_antiderivative",
    "fourier_shift",
    "resample_trigonometric",
    "resample_linear",
    "time_interpolate",
    "time_resample",
    "dealias_mask",
    "padded_square",
]


@dataclass(frozen=True)
class PeriodicGrid1D:
    """Uniform periodic grid on ``[0, length)`` with ``n`` points."""

    length: float
    n: int

    def __post_init__(self):
        if not (np.isfinite(self.length) and self.length > 0):
            raise ConfigError(f"grid length must be positive, got {self.length}")
        if int(self.n) != self.n or self.n < 4:
            raise ConfigError(f"grid needs at least 4 integer points, got {self.n}")
        object.__setattr__(self, "length", float(self.length))
        object.__setattr__(self, "n", int(self.n))

    @property
    def dx(self) -> float:
        return self.length / self.n

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(self.n) * self.dx

    def scaled(self, factor: float) -> "PeriodicGrid1D":
        return PeriodicGrid1D(self.length * factor, self.n)


@dataclass(frozen=True)
class TimeGrid:
    """``n`` uniformly spaced times on ``[0, horizon]`` (both ends included)."""

    horizon: float
    n: int

    def __post_init__(self):
        if not (np.isfinite(self.horizon) and self.horizon > 0):
            raise ConfigError(f"time horizon must be positive, got {self.horizon}")
        if int(self.n) != self.n or self.n < 2:
            raise ConfigError(f"time grid needs at least 2 points, got {self.n}")
        object.__setattr__(self, "horizon", float(self.horizon))
        object.__setattr__(self, "n", int(self.n))

    @property
    def dt(self) -> float:
        return self.horizon / (self.n - 1)

    @cached_property
    def times(self) -> np.ndarray:
        t = np.arange(self.n) * self.dt
        t[-1] = self.horizon
        return t

    def scaled(self, factor: float) -> "TimeGrid":
        return TimeGrid(self.horizon * factor, self.n)


@dataclass(frozen=True)
class Trajectory:
    """Solution samples ``values[j, i] = u(x_i, t_j)``.

    ``time_grid`` describes the stored frames. When the trajectory was solved
    past its nominal horizon (so that it can later be time shifted),
    ``window`` is the nominal output grid on ``[0, T]`` and must lie inside
    the stored horizon; ``window=None`` means the stored frames are the output.
    """

    grid: PeriodicGrid1D
    time_grid: TimeGrid
    values: np.ndarray
    window: TimeGrid | None = field(default=None)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        expected = (self.time_grid.n, self.grid.n)
        if values.shape != expected:
            raise ConfigError(f"trajectory shape {values.shape} != {expected}")
        if not np.all(np.isfinite(values)):
            raise ConfigError("trajectory contains non-finite values")
        if self.window is not None:
            if self.window.horizon > self.time_grid.horizon * (1 + 1e-12):
                raise ConfigError("output window exceeds the stored horizon")
        object.__setattr__(self, "values", values)

    @property
    def output_grid(self) -> TimeGrid:
        return self.window if self.window is not None else self.time_grid

    @property
    def margin(self) -> float:
        """Stored time beyond the output window (0 without a window)."""
        return max(self.time_grid.horizon - self.output_grid.horizon, 0.0)

    def with_values(self, values: np.ndarray, **changes) -> "Trajectory":
        return replace(self, values=values, **changes)

    def output(self) -> "Trajectory":
        """The trajectory restricted to its output window."""
        if self.window is None:
            return self
        frames = time_resample(self, self.window.times)
        return Trajectory(self.grid, self.window, frames)


def wavenumbers(grid: PeriodicGrid1D) -> np.ndarray:
    """Angular wavenumbers ``2 pi m / L`` in FFT ordering."""
    return 2 * np.pi * np.fft.fftfreq(grid.n, d=grid.dx)


def rfft_wavenumbers(grid: PeriodicGrid1D) -> np.ndarray:
    """Non-negative angular wavenumbers matching ``numpy.fft.rfft`` output."""
    return 2 * np.pi * np.fft.rfftfreq(grid.n, d=grid.dx)


def _nyquist_index(grid: PeriodicGrid1D) -> int | None:
    return grid.n // 2 if grid.n % 2 == 0 else None


def derivative_symbol(grid: PeriodicGrid1D, order: int) -> np.ndarray:
    """``(i k)^order`` on the rfft half-spectrum, Nyquist zeroed for odd orders."""
    symbol = (1j * rfft_wavenumbers(grid)) ** order
    nyq = _nyquist_index(grid)
    if nyq is not None and order % 2 == 1:
        symbol[nyq] = 0.0
    return symbol


def dealias_mask(grid: PeriodicGrid1D) -> np.ndarray:
    """2/3-rule mask on the rfft half-spectrum (keeps ``|m| < Nx/3``)."""
    m = np.arange(grid.n // 2 + 1)
    return (m < grid.n / 3).astype(float)


@lru_cache(maxsize=None)
def _padded_length(n: int) -> int:
    m = next_fast_len(3 * n // 2 + 1, real=True)
    while m % 2:
        m = next_fast_len(m + 1, real=True)
    return m


def padded_square(u_hat: np.ndarray, n: int) -> np.ndarray:
    """rfft of ``u^2`` free of aliasing, from the rfft ``u_hat`` of ``u``.

    The product is formed on a grid of more than ``3n/2`` points (the 3/2
    rule), so every retained mode of the result is exact.
    """
    m = _padded_length(n)
    half = n // 2 + 1
    padded = np.zeros(u_hat.shape[:-1] + (m // 2 + 1,), dtype=complex)
    padded[..., :half] = u_hat * (m / n)
    if n % 2 == 0:
        # the n-point Nyquist term is a cosine; on the finer grid it is an ordinary mode
        padded[..., n // 2] *= 0.5
    v = np.fft.irfft(padded, n=m, axis=-1)
    out = np.fft.rfft(v * v, axis=-1)[..., :half] * (n / m)
    if n % 2 == 0:
        out[..., n // 2] = 2 * out[..., n // 2].real
    return out


def spectral_derivative(u: np.ndarray, grid: PeriodicGrid1D, order: int = 1) -> np.ndarray:
    """Spatial derivative of given order computed in Fourier space."""
    if order < 0 or int(order) != order:
        raise ConfigError(f"derivative order must be a non-negative integer, got {order}")
    if order == 0:
        return np.array(u, dtype=float, copy=True)
    u_hat = np.fft.rfft(u, axis=-1)
    return np.fft.irfft(u_hat * derivative_symbol(grid, order), n=grid.n, axis=-1)


def spectral_antiderivative(u: np.ndarray, grid: PeriodicGrid1D) -> np.ndarray:
    """Zero-mean periodic antiderivative; the mean of ``u`` is ignored."""
    u_hat = np.fft.rfft(u, axis=-1)
    symbol = 1j * rfft_wavenumbers(grid)
    inv = np.zeros_like(symbol)
    inv[1:] = 1.0 / symbol[1:]
    nyq = _nyquist_index(grid)
    if nyq is not None:
        inv[nyq] = 0.0
    return np.fft.irfft(u_hat * inv, n=grid.n, axis=-1)


def _shift_factor(grid: PeriodicGrid1D, shifts: np.ndarray) -> np.ndarray:
    k = rfft_wavenumbers(grid)
    # reduce mod L so huge shifts keep full phase precision
    eps = np.remainder(np.asarray(shifts, dtype=float), grid.length)
    factor = np.exp(-1j * np.multiply.outer(eps, k))
    nyq = _nyquist_index(grid)
    if nyq is not None:
        factor[..., nyq] = np.cos(eps * k[nyq])
    return factor


def fourier_shift(u: np.ndarray, grid: PeriodicGrid1D, epsilon) -> np.ndarray:
    """Translate ``u(x) -> u(x - epsilon)`` with the Fourier shift theorem.

    ``epsilon`` may be a scalar or, for a stack of frames, an array with one
    shift per frame.
    """
    u = np.asarray(u, dtype=float)
    eps = np.asarray(epsilon, dtype=float)
    if eps.ndim == 0 and eps == 0:
        return u.copy()
    factor = _shift_factor(grid, eps)
    if eps.ndim == 1:
        if u.ndim != 2 or u.shape[0] != eps.shape[0]:
            raise ConfigError("per-frame shifts need a matching (Nt, Nx) stack")
    return np.fft.irfft(np.fft.rfft(u, axis=-1) * factor, n=grid.n, axis=-1)


def resample_trigonometric(u: np.ndarray, grid: PeriodicGrid1D, positions) -> np.ndarray:
    """Evaluate the band-limited trigonometric interpolant of ``u`` at ``positions``."""
    positions = np.asarray(positions, dtype=float)
    if not np.all(np.isfinite(positions)):
        raise OutOfRangeError("query positions must be finite")
    n = grid.n
    u_hat = np.fft.rfft(u, axis=-1)
    k = rfft_wavenumbers(grid)
    # real-form weights: 1 for the mean and Nyquist, 2 for paired modes
    weights = np.full(k.shape, 2.0)
    weights[0] = 1.0
    nyq = _nyquist_index(grid)
    if nyq is not None:
        weights[nyq] = 1.0
    xq = np.remainder(positions.ravel(), grid.length)
    phase = np.outer(k, xq)
    cos_part = (weights[:, None] / n) * np.cos(phase)
    sin_part = (weights[:, None] / n) * np.sin(phase)
    if nyq is not None:
        sin_part[nyq] = 0.0
    out = u_hat.real @ cos_part - u_hat.imag @ sin_part
    return out.reshape(u.shape[:-1] + positions.shape)


def resample_linear(u: np.ndarray, grid: PeriodicGrid1D, positions) -> np.ndarray:
    """Piecewise-linear periodic interpolation at ``positions``."""
    u = np.asarray(u, dtype=float)
    positions = np.asarray(positions, dtype=float)
    s = np.remainder(positions.ravel(), grid.length) / grid.dx
    nearest = np.rint(s)
    s = np.where(np.abs(s - nearest) < 1e-9, nearest, s)
    i0 = np.floor(s).astype(np.int64)
    w = s - i0
    i0 %= grid.n
    i1 = (i0 + 1) % grid.n
    out = u[..., i0] * (1.0 - w) + u[..., i1] * w
    return out.reshape(u.shape[:-1] + positions.shape)


def _cubic_weights(times: np.ndarray, grid: TimeGrid) -> tuple[np.ndarray, np.ndarray]:
    """Stencil start indices and 4-point Lagrange weights per query time."""
    n = grid.n
    if n < 4:
        raise ConfigError("cubic time interpolation needs at least 4 stored frames")
    s = times / grid.dt
    nearest = np.rint(s)
    s = np.where(np.abs(s - nearest) < 1e-9, nearest, s)
    start = np.clip(np.floor(s).astype(np.int64) - 1, 0, n - 4)
    r = s - start
    w = np.empty(times.shape + (4,))
    w[..., 0] = -(r - 1) * (r - 2) * (r - 3) / 6
    w[..., 1] = r * (r - 2) * (r - 3) / 2
    w[..., 2] = -r * (r - 1) * (r - 3) / 2
    w[..., 3] = r * (r - 1) * (r - 2) / 6
    return start, w


def time_resample(traj: Trajectory, times) -> np.ndarray:
    """Cubic interpolation of the stored frames at several times, ``(len(times), Nx)``."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    horizon = traj.time_grid.horizon
    slack = 1e-12 * horizon
    if np.any(times < -slack) or np.any(times > horizon + slack):
        raise OutOfRangeError(f"times must lie in [0, {horizon}]")
    times = np.clip(times, 0.0, horizon)
    start, w = _cubic_weights(times, traj.time_grid)
    v = traj.values
    out = np.zeros((times.size, traj.grid.n))
    for offset in range(4):
        out += w[:, offset, None] * v[start + offset]
    # exact stencil nodes reproduce stored frames bit-for-bit
    s = times / traj.time_grid.dt
    on_node = np.abs(s - np.rint(s)) < 1e-9
    if np.any(on_node):
        out[on_node] = v[np.rint(s[on_node]).astype(np.int64)]
    return out


def time_interpolate(traj: Trajectory, t: float) -> np.ndarray:
    """Frame at time ``t`` by cubic interpolation along the time axis."""
    return time_resample(traj, [t])[0]
