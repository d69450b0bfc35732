"""Lie point symmetry actions on discretised trajectories.

Generators (acting on the graph ``(x, t, u)``)::

    g1  time shift      (x, t + eps, u)                      KdV, KS, Burgers
    g2  space shift     (x + eps, t, u)                      KdV, KS, Burgers
    g3  Galilean boost  (x + eps t, t, u + eps)              KdV, KS, Burgers
    g4  scaling         (e^eps x, e^{3 eps} t, e^{-2 eps} u) KdV
                        (e^eps x, e^{2 eps} t, e^{-eps} u)   Burgers
    galpha              Cole-Hopf superposition of two Burgers solutions

A composite ``[op_1, ..., op_d]`` applies ``op_1`` first.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .equations import EquationKind, cole_hopf_potential
from .errors import (
    ConfigError,
    InadmissibleGeneratorError,
    IncompatibleTrajectoriesError,
    InsufficientHorizonError,
    OutOfRangeError,
)
from .spectral import (
    PeriodicGrid1D,
    TimeGrid,
    Trajectory,
    fourier_shift,
    resample_linear,
    time_resample,
)

__all__ = [
    "Generator",
    "SymmetryOp",
    "AugmentationPolicy",
    "AugmentedLineage",
    "ADMISSIBLE",
    "default_policy",
    "check_admissible",
    "apply_time_shift",
    "apply_space_shift",
    "apply_galilean_boost",
    "apply_scaling",
    "apply_burgers_mix",
    "sample_group_element",
    "augment",
]


class Generator(str, enum.Enum):
    TIME_SHIFT = "g1"
    SPACE_SHIFT = "g2"
    GALILEAN_BOOST = "g3"
    SCALING = "g4"
    BURGERS_MIX = "galpha"


G1, G2, G3, G4, GALPHA = Generator

ADMISSIBLE: dict[EquationKind, tuple[Generator, ...]] = {
    # galpha leads for Burgers: the superposition needs zero-mean parents, which g3 breaks
    EquationKind.KDV: (G1, G2, G3, G4),
    EquationKind.KS: (G1, G2, G3),
    EquationKind.BURGERS: (GALPHA, G1, G2, G3, G4),
}

_DEFAULT_RANGES = {
    G1: (0.0, 0.25),
    G2: (0.0, 1.0),
    G3: (-0.4, 0.4),
    G4: (-0.1, 0.1),
    GALPHA: (-2.0, 2.0),
}

_MAX_SCALING = 0.5


@dataclass(frozen=True)
class SymmetryOp:
    """One group element ``g(epsilon)``.

    Units of ``epsilon``: seconds (g1), metres (g2), metres per second (g3),
    dimensionless (g4 and the galpha logistic argument).
    """

    generator: Generator
    epsilon: float

    def __post_init__(self):
        object.__setattr__(self, "generator", Generator(self.generator))
        object.__setattr__(self, "epsilon", float(self.epsilon))


@dataclass(frozen=True)
class AugmentedLineage:
    source_id: int | None
    steps: tuple[tuple[str, float], ...] = ()
    partner_id: int | None = None

    def to_dict(self) -> dict:
        return {
            "source_id": self.source_id,
            "partner_id": self.partner_id,
            "steps": [[g, eps] for g, eps in self.steps],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AugmentedLineage":
        return cls(d.get("source_id"), tuple((g, float(e)) for g, e in d["steps"]), d.get("partner_id"))


@dataclass(frozen=True)
class AugmentationPolicy:
    """Uniform sampling ranges and a fixed application order.

    The g1 range is a fraction of the source horizon ``T`` and the g2 range a
    fraction of the domain length ``L``; the others are absolute.
    """

    ranges: dict[Generator, tuple[float, float]] = field(default_factory=dict)
    order: tuple[Generator, ...] = ()
    seed: int = 0

    def __post_init__(self):
        ranges = {Generator(g): (float(lo), float(hi)) for g, (lo, hi) in self.ranges.items()}
        order = tuple(Generator(g) for g in (self.order or tuple(ranges)))
        if len(set(order)) != len(order):
            raise ConfigError("policy order lists a generator more than once")
        for g in order:
            if g not in ranges:
                raise ConfigError(f"no sampling range for {g.value}")
            lo, hi = ranges[g]
            if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
                raise ConfigError(f"invalid range for {g.value}: [{lo}, {hi}]")
        object.__setattr__(self, "ranges", ranges)
        object.__setattr__(self, "order", order)

    def check(self, kind: EquationKind) -> None:
        check_admissible(kind, self.order)

    def to_dict(self) -> dict:
        return {
            "order": [g.value for g in self.order],
            "ranges": {g.value: list(self.ranges[g]) for g in self.order},
            "seed": self.seed,
        }


def check_admissible(kind: EquationKind, generators) -> None:
    kind = EquationKind(kind)
    allowed = ADMISSIBLE.get(kind, ())
    for g in generators:
        g = Generator(g)
        if g not in allowed:
            raise InadmissibleGeneratorError(f"{g.value} is not a symmetry of {kind.value}")


def default_policy(kind: EquationKind, generators=None, seed: int = 0) -> AugmentationPolicy:
    """Default ranges for the admissible generators, in canonical order."""
    kind = EquationKind(kind)
    chosen = ADMISSIBLE[kind] if generators is None else tuple(Generator(g) for g in generators)
    check_admissible(kind, chosen)
    order = tuple(g for g in ADMISSIBLE[kind] if g in chosen)
    return AugmentationPolicy({g: _DEFAULT_RANGES[g] for g in order}, order, seed)


def apply_time_shift(traj: Trajectory, epsilon: float) -> Trajectory:
    """Window ``u(., t + epsilon)`` for ``t`` on the output grid.

    Only forward shifts within the stored margin are possible.
    """
    margin = traj.margin
    if epsilon < 0 or epsilon > margin * (1 + 1e-12) + 1e-12 * traj.time_grid.horizon:
        raise OutOfRangeError(f"time shift {epsilon} outside [0, {margin}]")
    out_grid = traj.output_grid
    frames = time_resample(traj, out_grid.times + epsilon)
    return Trajectory(traj.grid, out_grid, frames)


def _shift_frames(values, grid: PeriodicGrid1D, shifts, interpolation: str) -> np.ndarray:
    if interpolation == "fourier":
        return fourier_shift(values, grid, shifts)
    if interpolation != "linear":
        raise ConfigError(f"unknown interpolation {interpolation!r}")
    shifts = np.asarray(shifts, dtype=float)
    if shifts.ndim == 0:
        return resample_linear(values, grid, grid.x - shifts)
    out = np.empty_like(values)
    for j, s in enumerate(shifts):
        out[j] = resample_linear(values[j], grid, grid.x - s)
    return out


def apply_space_shift(traj: Trajectory, epsilon: float, interpolation: str = "fourier") -> Trajectory:
    """Every frame moved to ``u(x - epsilon, t)``."""
    if epsilon == 0:
        return traj
    return traj.with_values(_shift_frames(traj.values, traj.grid, epsilon, interpolation))


def apply_galilean_boost(
    traj: Trajectory, epsilon: float, kind: EquationKind | None = None, interpolation: str = "fourier"
) -> Trajectory:
    """``u'(x, t) = u(x - epsilon t, t) + epsilon``."""
    if kind is not None:
        check_admissible(kind, [G3])
    if epsilon == 0:
        return traj
    shifted = _shift_frames(traj.values, traj.grid, epsilon * traj.time_grid.times, interpolation)
    return traj.with_values(shifted + epsilon)


_SCALING_EXPONENTS = {
    # (time exponent, value exponent) per unit epsilon
    EquationKind.KDV: (3.0, -2.0),
    EquationKind.BURGERS: (2.0, -1.0),
}


def apply_scaling(
    traj: Trajectory,
    epsilon: float,
    kind: EquationKind,
    window_horizon: float | None = None,
) -> Trajectory:
    """Scaling symmetry; the uniform grid maps onto itself, only metadata and values change.

    With ``window_horizon`` the result is resampled in time onto the stored
    number of output frames over ``[0, window_horizon]``.
    """
    kind = EquationKind(kind)
    check_admissible(kind, [G4])
    if abs(epsilon) > _MAX_SCALING:
        raise OutOfRangeError(f"|epsilon| <= {_MAX_SCALING} required for scaling, got {epsilon}")
    t_exp, u_exp = _SCALING_EXPONENTS[kind]
    if epsilon == 0 and window_horizon is None:
        return traj
    t_factor = math.exp(t_exp * epsilon)
    scaled = Trajectory(
        traj.grid.scaled(math.exp(epsilon)),
        traj.time_grid.scaled(t_factor),
        traj.values * math.exp(u_exp * epsilon),
        window=None if traj.window is None else traj.window.scaled(t_factor),
    )
    if window_horizon is None:
        return scaled
    if window_horizon > scaled.time_grid.horizon * (1 + 1e-12):
        raise InsufficientHorizonError(
            f"scaled horizon {scaled.time_grid.horizon:.6g} shorter than window {window_horizon:.6g}"
        )
    out_grid = TimeGrid(window_horizon, traj.output_grid.n)
    return Trajectory(scaled.grid, out_grid, time_resample(scaled, out_grid.times))


def _log_potential(traj: Trajectory, nu: float) -> np.ndarray:
    """``log phi`` per frame, including the time-dependent constant.

    With ``u = -2 nu (log phi)_x`` and ``phi_t = nu phi_xx`` the spatial mean of
    ``log phi`` grows at rate ``mean(u^2) / (4 nu)``.
    """
    shape = cole_hopf_potential(traj.values, traj.grid, nu)
    rate = np.mean(traj.values**2, axis=-1) / (4 * nu)
    times = traj.time_grid.times
    if times.size >= 4:
        offset = CubicSpline(times, rate).antiderivative()(times)
    else:
        offset = np.concatenate([[0.0], np.cumsum(0.5 * (rate[1:] + rate[:-1]) * np.diff(times))])
    return shape + offset[:, None]


def _same_grid(a: PeriodicGrid1D, b: PeriodicGrid1D) -> bool:
    return a.n == b.n and math.isclose(a.length, b.length, rel_tol=1e-12)


def _align_for_mix(traj: Trajectory, other: Trajectory) -> tuple[Trajectory, Trajectory]:
    """Bring two Burgers solutions onto one grid.

    The one on the shorter domain is scaled up (which lengthens its horizon)
    and resampled onto the stored times of the other.
    """
    if traj.grid.n != other.grid.n:
        raise IncompatibleTrajectoriesError("trajectories have different grid sizes")
    if _same_grid(traj.grid, other.grid):
        if traj.time_grid != other.time_grid:
            raise IncompatibleTrajectoriesError("trajectories have different time grids")
        return traj, other
    swap = traj.grid.length > other.grid.length
    small, big = (other, traj) if swap else (traj, other)
    eps = math.log(big.grid.length / small.grid.length)
    if eps > _MAX_SCALING:
        raise IncompatibleTrajectoriesError("domain lengths differ too much to align")
    scaled = apply_scaling(small, eps, EquationKind.BURGERS)
    if scaled.time_grid.horizon < big.time_grid.horizon * (1 - 1e-12):
        raise InsufficientHorizonError("aligned partner does not cover the stored horizon")
    frames = time_resample(scaled, big.time_grid.times)
    small = Trajectory(big.grid, big.time_grid, frames, window=big.window)
    return (big, small) if swap else (small, big)


def apply_burgers_mix(traj_u: Trajectory, traj_alpha: Trajectory, epsilon: float, nu: float) -> Trajectory:
    """Superpose two Burgers solutions through their Cole-Hopf potentials.

    The heat fields combine as ``phi' = (1 - s) phi_u + s phi_alpha`` with
    ``s = 1 / (1 + e^{-epsilon})``; written in terms of the log-potentials
    this is the log-sum-exp mixture, and the velocity of the mixture is the
    pointwise convex combination ``p u + (1 - p) alpha`` with the softmax
    weight ``p``. No derivative of the mixture is needed.

    Both parents must have zero spatial mean. Parents on different domain
    lengths are aligned first with the Burgers scaling symmetry.
    """
    if not nu > 0:
        raise ConfigError("galpha needs nu > 0")
    traj_u, traj_alpha = _align_for_mix(traj_u, traj_alpha)
    # logistic in a numerically safe split
    s = 0.5 * (1.0 + math.tanh(0.5 * epsilon))
    log_s = -math.log1p(math.exp(-epsilon)) if epsilon > -700 else epsilon
    log_1ms = -math.log1p(math.exp(epsilon)) if epsilon < 700 else -epsilon
    if s == 0.0:
        return traj_u
    if s == 1.0:
        return traj_alpha.with_values(traj_alpha.values.copy(), window=traj_u.window)
    a = log_1ms + _log_potential(traj_u, nu)
    b = log_s + _log_potential(traj_alpha, nu)
    m = np.maximum(a, b)
    wa = np.exp(a - m)
    wb = np.exp(b - m)
    q = wb / (wa + wb)
    # written as a correction to u so that mixing a field with itself is exact
    mixed = traj_u.values + q * (traj_alpha.values - traj_u.values)
    return traj_u.with_values(mixed)


def sample_group_element(
    policy: AugmentationPolicy,
    rng: np.random.Generator,
    length: float = 1.0,
    horizon: float = 1.0,
) -> list[SymmetryOp]:
    """Independent uniform draws in the policy order.

    ``length`` and ``horizon`` convert the relative g2 and g1 ranges.
    """
    ops = []
    for g in policy.order:
        lo, hi = policy.ranges[g]
        eps = float(rng.uniform(lo, hi)) if hi > lo else lo
        if g is G1:
            eps *= horizon
        elif g is G2:
            eps *= length
        ops.append(SymmetryOp(g, eps))
    return ops


def augment(
    traj: Trajectory,
    ops: Sequence[SymmetryOp],
    kind: EquationKind,
    *,
    nu: float | None = None,
    partner: Trajectory | None = None,
    interpolation: str = "fourier",
    source_id: int | None = None,
    partner_id: int | None = None,
) -> tuple[Trajectory, AugmentedLineage]:
    """Apply ``ops`` left to right (the first op acts first)."""
    kind = EquationKind(kind)
    check_admissible(kind, [op.generator for op in ops])
    out = traj
    for op in ops:
        g, eps = op.generator, op.epsilon
        if g is G1:
            out = apply_time_shift(out, eps)
        elif g is G2:
            out = apply_space_shift(out, eps, interpolation)
        elif g is G3:
            out = apply_galilean_boost(out, eps, interpolation=interpolation)
        elif g is G4:
            out = apply_scaling(out, eps, kind)
        else:
            if partner is None or nu is None:
                raise ConfigError("galpha needs a partner trajectory and nu")
            out = apply_burgers_mix(out, partner, eps, nu)
    lineage = AugmentedLineage(
        source_id,
        tuple((op.generator.value, op.epsilon) for op in ops),
        partner_id if any(op.generator is GALPHA for op in ops) else None,
    )
    return out, lineage
