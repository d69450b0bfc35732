"""PDE definitions, the Cole-Hopf route for Burgers, the finite-volume
crosscheck solver and the discrete PDE residual.

Equations (periodic in x)::

    KdV      u_t + u u_x + u_xxx = 0
    KS       u_t + u_xx + u_xxxx + u u_x = 0
    Heat     u_t = nu u_xx
    Burgers  u_t + u u_x - nu u_xx = 0
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, NonPeriodicPotentialError, UnsupportedEquationError
from .integrator import SemilinearRHS, SolverConfig, integrate
from .spectral import (
    PeriodicGrid1D,
    TimeGrid,
    Trajectory,
    derivative_symbol,
    fourier_shift,
    padded_square,
    resample_trigonometric,
    rfft_wavenumbers,
    spectral_antiderivative,
    spectral_derivative,
)

__all__ = [
    "EquationKind",
    "EquationSpec",
    "make_rhs",
    "cole_hopf_forward",
    "cole_hopf_inverse",
    "solve",
    "solve_burgers",
    "fvm_solve",
    "residual_check",
    "residual_field",
    "soliton",
]


class EquationKind(str, enum.Enum):
    KDV = "kdv"
    KS = "ks"
    HEAT = "heat"
    BURGERS = "burgers"


@dataclass(frozen=True)
class EquationSpec:
    kind: EquationKind
    nu: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", EquationKind(self.kind))
        if self.nu < 0:
            raise ConfigError("viscosity must be non-negative")
        if self.kind is EquationKind.BURGERS and not self.nu > 0:
            raise ConfigError("Burgers requires nu > 0 (viscid systems only)")
        if self.kind is EquationKind.HEAT and not self.nu > 0:
            raise ConfigError("Heat requires nu > 0")

    @classmethod
    def kdv(cls) -> "EquationSpec":
        return cls(EquationKind.KDV)

    @classmethod
    def ks(cls) -> "EquationSpec":
        return cls(EquationKind.KS)

    @classmethod
    def heat(cls, nu: float) -> "EquationSpec":
        return cls(EquationKind.HEAT, nu)

    @classmethod
    def burgers(cls, nu: float = 0.01) -> "EquationSpec":
        return cls(EquationKind.BURGERS, nu)


def _square_hat(u: np.ndarray, n: int, dealias: bool) -> np.ndarray:
    if dealias:
        return padded_square(np.fft.rfft(u, axis=-1), n)
    return np.fft.rfft(u * u, axis=-1)


def _advection(grid: PeriodicGrid1D, dealias: bool):
    """``-(u^2/2)_x`` evaluated pseudospectrally."""
    symbol = -0.5 * derivative_symbol(grid, 1)
    n = grid.n

    def nonlinear(u: np.ndarray) -> np.ndarray:
        return np.fft.irfft(_square_hat(u, n, dealias) * symbol, n=n, axis=-1)

    return nonlinear


def make_rhs(spec: EquationSpec, grid: PeriodicGrid1D, dealias: bool = True) -> SemilinearRHS:
    """Semilinear split of the equation on ``grid``.

    Burgers is rejected; use :func:`solve_burgers`.
    """
    kind = spec.kind
    if kind is EquationKind.BURGERS:
        raise UnsupportedEquationError(
            "Burgers is not integrated directly; use solve_burgers (Cole-Hopf + heat)"
        )
    if kind is EquationKind.KDV:
        # -u_xxx -> -(ik)^3 = i k^3, odd so the Nyquist rate is zero
        d3 = derivative_symbol(grid, 3)
        return SemilinearRHS(lambda k: -d3[: len(k)], _advection(grid, dealias))
    if kind is EquationKind.KS:
        return SemilinearRHS(lambda k: k**2 - k**4, _advection(grid, dealias))
    nu = spec.nu
    return SemilinearRHS(lambda k: -nu * k**2, None)


def solve(
    spec: EquationSpec,
    u0: np.ndarray,
    grid: PeriodicGrid1D,
    time_grid: TimeGrid,
    config: SolverConfig | None = None,
    window: TimeGrid | None = None,
) -> Trajectory:
    """Pseudospectral solution of any supported equation."""
    config = config or SolverConfig()
    if spec.kind is EquationKind.BURGERS:
        return solve_burgers(u0, grid, spec.nu, time_grid, config, window=window)
    rhs = make_rhs(spec, grid, dealias=config.dealias)
    return integrate(rhs, u0, grid, time_grid, config, window=window)


def cole_hopf_forward(phi: np.ndarray, grid: PeriodicGrid1D, nu: float) -> np.ndarray:
    """Velocity ``u = -2 nu phi_x / phi`` of a positive heat solution ``phi``.

    Evaluated as ``-2 nu (log phi)_x``: ``log phi`` stays smooth and
    band-limited when ``phi`` itself spans many orders of magnitude.
    """
    phi = np.asarray(phi, dtype=float)
    if not np.all(phi > 0):
        raise DomainError("Cole-Hopf forward transform needs phi > 0 everywhere")
    return -2.0 * nu * spectral_derivative(np.log(phi), grid, 1)


def cole_hopf_potential(u: np.ndarray, grid: PeriodicGrid1D, nu: float) -> np.ndarray:
    """Exponent ``-U / (2 nu)`` with ``U`` the zero-mean antiderivative of ``u``."""
    u = np.asarray(u, dtype=float)
    mean = np.mean(u, axis=-1)
    scale = np.max(np.abs(u), axis=-1)
    if np.any(np.abs(mean) > 1e-8 * np.maximum(scale, 1e-300)):
        raise NonPeriodicPotentialError("Cole-Hopf potential needs a zero-mean field")
    return -spectral_antiderivative(u, grid) / (2.0 * nu)


def cole_hopf_inverse(u: np.ndarray, grid: PeriodicGrid1D, nu: float) -> np.ndarray:
    """Heat field ``phi = exp(-U / (2 nu))`` whose forward transform is ``u``."""
    return np.exp(cole_hopf_potential(u, grid, nu))


_KERNEL_RANGE = 30.0


def solve_burgers(
    u0: np.ndarray,
    grid: PeriodicGrid1D,
    nu: float,
    time_grid: TimeGrid,
    config: SolverConfig | None = None,
    window: TimeGrid | None = None,
    method: str = "auto",
) -> Trajectory:
    """Viscous Burgers via Cole-Hopf: transform, solve the heat equation, transform back.

    ``method="spectral"`` integrates the heat equation pseudospectrally.
    ``method="kernel"`` evaluates the exact periodic heat-kernel solution in
    log space, which stays finite when ``phi`` spans more than double
    precision (the exponent range exceeds ~30 for small ``nu``).
    ``"auto"`` picks the kernel route in that case or when the spectral heat
    field loses positivity.
    """
    if not nu > 0:
        raise ConfigError("Burgers requires nu > 0")
    if method not in ("auto", "spectral", "kernel"):
        raise ConfigError(f"unknown Burgers method {method!r}")
    config = config or SolverConfig()
    exponent = cole_hopf_potential(u0, grid, nu)
    spread = float(exponent.max() - exponent.min())
    if method == "kernel" or (method == "auto" and spread > _KERNEL_RANGE):
        u = _burgers_heat_kernel(u0, grid, nu, time_grid)
        return Trajectory(grid, time_grid, u, window=window)
    # phi is defined up to a constant factor; normalise its peak to one
    phi0 = np.exp(exponent - exponent.max())
    heat = integrate(make_rhs(EquationSpec.heat(nu), grid), phi0, grid, time_grid, config)
    phi = heat.values
    if not np.all(phi > 0):
        if method == "auto":
            u = _burgers_heat_kernel(u0, grid, nu, time_grid)
            return Trajectory(grid, time_grid, u, window=window)
        raise DomainError("heat solution lost positivity; the potential is under-resolved")
    u = cole_hopf_forward(phi, grid, nu)
    u[0] = u0
    return Trajectory(grid, time_grid, u, window=window)


def _burgers_heat_kernel(u0, grid, nu, time_grid) -> np.ndarray:
    """Hopf formula ``u = <(x - y) / t>`` under weights ``exp(-U0(y)/2nu - (x-y)^2/4nu t)``.

    The potential ``U0`` is a trigonometric polynomial, so it is evaluated
    exactly on a quadrature grid fine enough to resolve the narrowest weight.
    """
    L = grid.length
    U0 = spectral_antiderivative(u0, grid)
    steepest = max(float(np.max(spectral_derivative(u0, grid, 1))), 0.0)
    out = np.empty((time_grid.n, grid.n))
    out[0] = u0
    x = grid.x
    cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for j, t in enumerate(time_grid.times[1:], start=1):
        width = np.sqrt(2 * nu * t / (1 + t * steepest))
        m = int(2 ** np.ceil(np.log2(max(grid.n, 2.0 * L / width))))
        if m not in cache:
            y = np.arange(m) * (L / m)
            cache[m] = (y, resample_trigonometric(U0, grid, y))
        y, Uy = cache[m]
        images = int(np.ceil(6 * np.sqrt(2 * nu * t) / L))
        r = (x[:, None] - y[None, :] + L / 2) % L - L / 2
        r = np.concatenate([r + s * L for s in range(-images, images + 1)], axis=1)
        Uimg = np.tile(Uy, 2 * images + 1)
        logw = -Uimg[None, :] / (2 * nu) - r**2 / (4 * nu * t)
        logw -= logw.max(axis=1, keepdims=True)
        w = np.exp(logw)
        out[j] = np.sum(w * r, axis=1) / (t * np.sum(w, axis=1))
    return out


def fvm_solve(
    spec: EquationSpec,
    u0: np.ndarray,
    grid: PeriodicGrid1D,
    time_grid: TimeGrid,
    config: SolverConfig | None = None,
    window: TimeGrid | None = None,
) -> Trajectory:
    """Finite-volume crosscheck for KdV and KS in conservation form.

    The state is the vector of cell averages. Point values are reconstructed
    spectrally, the flux ``F`` is evaluated at the cell interfaces
    ``x_i + dx/2`` through trigonometric resampling, and cell averages change
    by the net flux ``-(F_{i+1/2} - F_{i-1/2}) / dx``::

        KdV  F = u^2/2 + u_xx
        KS   F = u^2/2 + u_x + u_xxx

    The returned frames are point values at the grid nodes.
    """
    if spec.kind not in (EquationKind.KDV, EquationKind.KS):
        raise UnsupportedEquationError("fvm_solve supports KdV and KS only")
    config = config or SolverConfig()
    n, dx = grid.n, grid.dx
    k = rfft_wavenumbers(grid)
    half = k * dx / 2
    # point value = average * (k dx/2) / sin(k dx/2)
    to_point = np.ones_like(k)
    to_point[1:] = half[1:] / np.sin(half[1:])
    # F(x + dx/2) - F(x - dx/2) in rfft space
    diff = 2j * np.sin(half) / dx
    if n % 2 == 0:
        diff[-1] = 0.0
    if spec.kind is EquationKind.KDV:
        linear_flux = derivative_symbol(grid, 2)
    else:
        linear_flux = derivative_symbol(grid, 1) + derivative_symbol(grid, 3)
    lam = -diff * linear_flux * to_point
    dealias = config.dealias

    def nonlinear(avg: np.ndarray) -> np.ndarray:
        point = np.fft.irfft(np.fft.rfft(avg) * to_point, n=n)
        at_faces = fourier_shift(point, grid, -dx / 2)
        flux = 0.5 * np.fft.irfft(_square_hat(at_faces, n, dealias), n=n)
        return -(flux - np.roll(flux, 1)) / dx

    avg0 = np.fft.irfft(np.fft.rfft(u0) / to_point, n=n)
    rhs = SemilinearRHS(lambda _k: lam, nonlinear)
    averages = integrate(rhs, avg0, grid, time_grid, config)
    points = np.fft.irfft(np.fft.rfft(averages.values, axis=-1) * to_point, n=n, axis=-1)
    return Trajectory(grid, time_grid, points, window=window)


def residual_field(spec: EquationSpec, traj: Trajectory) -> np.ndarray:
    """Pointwise residual on interior frames ``2 .. Nt-3``.

    Spatial derivatives are spectral; ``u_t`` uses the fourth-order central
    difference on the stored time grid.
    """
    u = traj.values
    if u.shape[0] < 5:
        raise ConfigError("residual needs at least 5 stored frames")
    grid, dt = traj.grid, traj.time_grid.dt
    u_t = (-u[4:] + 8 * u[3:-1] - 8 * u[1:-3] + u[:-4]) / (12 * dt)
    w = u[2:-2]
    kind = spec.kind
    if kind is EquationKind.HEAT:
        return u_t - spec.nu * spectral_derivative(w, grid, 2)
    advect = w * spectral_derivative(w, grid, 1)
    if kind is EquationKind.KDV:
        return u_t + advect + spectral_derivative(w, grid, 3)
    if kind is EquationKind.KS:
        return u_t + spectral_derivative(w, grid, 2) + spectral_derivative(w, grid, 4) + advect
    return u_t + advect - spec.nu * spectral_derivative(w, grid, 2)


def residual_check(spec: EquationSpec, traj: Trajectory) -> float:
    """Maximum absolute PDE residual over interior frames and all grid points."""
    return float(np.max(np.abs(residual_field(spec, traj))))


def soliton(x: np.ndarray, t, c: float, x0: float, length: float | None = None) -> np.ndarray:
    """KdV soliton ``12 c^2 sech^2(c (x - x0 - 4 c^2 t))``.

    With ``length`` the profile is wrapped to the nearest periodic image.
    """
    t = np.asarray(t, dtype=float)
    xi = np.subtract.outer(np.asarray(x), x0 + 4 * c**2 * t)
    if length is not None:
        xi = (xi + length / 2) % length - length / 2
    out = 12 * c**2 / np.cosh(c * xi) ** 2
    return np.moveaxis(out, 0, -1) if t.ndim else out
