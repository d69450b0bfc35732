"""Adaptive ETDRK4 time stepping for semilinear periodic problems.

Solves ``u_t = L u + N(u)`` where ``L`` is diagonal in Fourier space. The
stiff linear part is integrated exactly through the exponential
time-differencing Runge-Kutta scheme of Cox & Matthews with the coefficient
evaluation of Kassam & Trefethen (2005). Local error is estimated by step
doubling.

Output frames never perturb the main step sequence: each requested time is
reached by a dedicated side step from the last accepted state. Two runs whose
output grids share a time therefore produce identical values there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError, DivergenceError, StepSizeUnderflowError
from .spectral import PeriodicGrid1D, TimeGrid, Trajectory, rfft_wavenumbers

__all__ = ["SemilinearRHS", "SolverConfig", "etdrk4_phi_weights", "integrate"]

_CONTOUR_POINTS = 32
_SMALL = 0.5


@dataclass(frozen=True)
class SemilinearRHS:
    """Right-hand side split into a Fourier-diagonal linear part and a remainder.

    ``linear_symbol`` maps the non-negative rfft wavenumbers of a grid to the
    complex growth rates; ``nonlinear_term`` maps a physical-space field (or a
    stack of them) to its physical-space tendency.
    """

    linear_symbol: Callable[[np.ndarray], np.ndarray]
    nonlinear_term: Callable[[np.ndarray], np.ndarray] | None = None


@dataclass(frozen=True)
class SolverConfig:
    scheme: str = "etdrk4"
    rel_tol: float = 1e-8
    abs_tol: float = 0.0
    initial_dt: float = 1e-3
    max_dt: float = 1.0
    dealias: bool = True
    safety: float = 0.9
    max_growth: float = 5.0
    min_shrink: float = 0.2

    def __post_init__(self):
        if self.scheme != "etdrk4":
            raise ConfigError(f"unsupported scheme {self.scheme!r}")
        if not 0 < self.rel_tol <= 1e-2:
            raise ConfigError(f"rel_tol must be in (0, 1e-2], got {self.rel_tol}")
        if self.abs_tol < 0:
            raise ConfigError("abs_tol must be non-negative")
        if not (self.initial_dt > 0 and self.max_dt > 0):
            raise ConfigError("internal step bounds must be positive")

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "initial_dt": self.initial_dt,
            "max_dt": self.max_dt,
            "dealias": self.dealias,
        }


def _phi_closed(z: np.ndarray):
    ez = np.exp(z)
    z3 = z**3
    half = (np.exp(z / 2) - 1) / z
    f1 = (-4 - z + ez * (4 - 3 * z + z**2)) / z3
    f2 = (2 + z + ez * (z - 2)) / z3
    f3 = (-4 - 3 * z - z**2 + ez * (4 - z)) / z3
    return half, f1, f2, f3


def etdrk4_phi_weights(z) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """ETDRK4 stage weights for ``z = lambda * dt``, divided by ``dt``.

    Returns ``(half, f1, f2, f3)`` such that one step of size ``h`` reads::

        a = e^{z/2} v + h*half*N(v)
        b = e^{z/2} v + h*half*N(a)
        c = e^{z/2} a + h*half*(2 N(b) - N(v))
        v' = e^{z} v + h*(f1 N(v) + 2 f2 (N(a) + N(b)) + f3 N(c))

    Entries with ``|z| < 0.5`` are averaged over a circle of radius one
    around ``z`` to avoid cancellation; at ``z = 0`` this gives the classical
    RK4 constants (1/2, 1/6, 1/6, 1/6).
    """
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    out = [np.empty_like(flat) for _ in range(4)]
    small = np.abs(flat) < _SMALL
    if np.any(~small):
        for o, val in zip(out, _phi_closed(flat[~small])):
            o[~small] = val
    if np.any(small):
        roots = np.exp(2j * np.pi * (np.arange(1, _CONTOUR_POINTS + 1) - 0.5) / _CONTOUR_POINTS)
        contour = flat[small, None] + roots[None, :]
        for o, val in zip(out, _phi_closed(contour)):
            o[small] = val.mean(axis=1)
    return tuple(o.reshape(z.shape) for o in out)


def _quantize(h: float) -> float:
    """Round a step size down onto the ladder ``2**(j/8)`` so coefficients are reused."""
    return 2.0 ** (math.floor(8 * math.log2(h)) / 8)


class _Stepper:
    """ETDRK4 steps in rfft space with per-step-size coefficient cache."""

    def __init__(self, rhs: SemilinearRHS, grid: PeriodicGrid1D):
        self.n = grid.n
        self.lam = np.asarray(rhs.linear_symbol(rfft_wavenumbers(grid)), dtype=complex)
        if self.lam.shape != (grid.n // 2 + 1,):
            raise ConfigError("linear symbol must return one rate per rfft wavenumber")
        self.nonlinear = rhs.nonlinear_term
        self._cache: dict[float, tuple] = {}

    def _coeffs(self, h: float):
        c = self._cache.get(h)
        if c is None:
            z = self.lam * h
            half, f1, f2, f3 = etdrk4_phi_weights(z)
            c = (np.exp(z), np.exp(z / 2), h * half, h * f1, 2 * h * f2, h * f3)
            if len(self._cache) > 64:
                self._cache.clear()
            self._cache[h] = c
        return c

    def N(self, v_hat: np.ndarray) -> np.ndarray:
        u = np.fft.irfft(v_hat, n=self.n)
        return np.fft.rfft(self.nonlinear(u))

    def step(self, v: np.ndarray, h: float, nv: np.ndarray | None = None) -> np.ndarray:
        E, E2, Q, f1, f2, f3 = self._coeffs(h)
        if self.nonlinear is None:
            return E * v
        if nv is None:
            nv = self.N(v)
        a = E2 * v + Q * nv
        na = self.N(a)
        b = E2 * v + Q * na
        nb = self.N(b)
        c = E2 * a + Q * (2 * nb - nv)
        nc = self.N(c)
        return E * v + f1 * nv + f2 * (na + nb) + f3 * nc

    def double_step(self, v: np.ndarray, h: float, nv: np.ndarray | None) -> np.ndarray:
        mid = self.step(v, h / 2, nv)
        return self.step(mid, h / 2)


def integrate(
    rhs: SemilinearRHS,
    u0: np.ndarray,
    grid: PeriodicGrid1D,
    time_grid: TimeGrid,
    config: SolverConfig | None = None,
    window: TimeGrid | None = None,
) -> Trajectory:
    """Integrate from ``u0`` and return frames at every ``time_grid`` time.

    A step of size ``h`` is accepted when the max-norm difference between one
    full step and two half steps is below ``abs_tol + rel_tol * max|u|``; the
    two-half-step result is propagated.

    Raises
    ------
    DivergenceError
        If the state becomes non-finite.
    StepSizeUnderflowError
        If the step size drops below ``1e-12 * T``.
    """
    config = config or SolverConfig()
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (grid.n,):
        raise ConfigError(f"initial condition shape {u0.shape} != ({grid.n},)")
    if not np.all(np.isfinite(u0)):
        raise DivergenceError("non-finite initial condition", 0.0)

    stepper = _Stepper(rhs, grid)
    n = grid.n
    out_times = time_grid.times
    frames = np.empty((time_grid.n, n))
    frames[0] = u0
    next_out = 1
    horizon = time_grid.horizon
    h_min = 1e-12 * horizon

    t = 0.0
    v = np.fft.rfft(u0)
    h = _quantize(min(config.initial_dt, config.max_dt, horizon))
    while next_out < time_grid.n:
        nv = stepper.N(v) if stepper.nonlinear is not None else None
        full = stepper.step(v, h, nv)
        halves = stepper.double_step(v, h, nv)
        u_half = np.fft.irfft(halves, n=n)
        err = float(np.max(np.abs(np.fft.irfft(full - halves, n=n))))
        scale = config.abs_tol + config.rel_tol * float(np.max(np.abs(u_half)))
        if not (math.isfinite(err) and np.all(np.isfinite(u_half))):
            if h <= h_min:
                raise DivergenceError("state became non-finite", t)
            h *= config.min_shrink
            continue

        if err <= scale:
            t_new = t + h
            while next_out < time_grid.n and out_times[next_out] <= t_new * (1 + 1e-14):
                s = out_times[next_out] - t
                if s <= 0:
                    frames[next_out] = np.fft.irfft(v, n=n)
                else:
                    side = stepper.double_step(v, s, nv) if s != h else halves
                    frames[next_out] = np.fft.irfft(side, n=n)
                if not np.all(np.isfinite(frames[next_out])):
                    raise DivergenceError("state became non-finite", t)
                next_out += 1
            t, v = t_new, halves

        if err == 0.0:
            factor = config.max_growth
        else:
            factor = config.safety * (scale / err) ** 0.2
            factor = min(config.max_growth, max(config.min_shrink, factor))
        h = _quantize(min(h * factor, config.max_dt))
        if h < h_min:
            raise StepSizeUnderflowError("step size underflow", t)

    return Trajectory(grid, time_grid, frames, window=window)
