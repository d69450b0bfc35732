"""Metrics and verification drivers: NMSE, equivariance, solver crosscheck, benchmark."""

from __future__ import annotations

import json
import math
import statistics
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .datagen import default_generation_config, record_rng, sample_initial_condition
from .equations import EquationKind, EquationSpec, fvm_solve, solve
from .errors import ConfigError, DegenerateNormalizationError
from .integrator import SolverConfig
from .spectral import PeriodicGrid1D, TimeGrid, Trajectory, fourier_shift
from .symmetry import (
    G1,
    G2,
    G3,
    G4,
    AugmentationPolicy,
    SymmetryOp,
    augment,
    check_admissible,
    sample_group_element,
)

__all__ = [
    "MetricReport",
    "nmse",
    "mse",
    "equivariance_error",
    "autocorrelative_error",
    "equivariance_sweep",
    "crosscheck_solvers",
    "bench_augmentation",
    "time_solve",
]


@dataclass(frozen=True)
class MetricReport:
    name: str
    value: float
    breakdown: tuple[float, ...] = ()
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "breakdown": list(self.breakdown), "config": self.config}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _values(x) -> np.ndarray:
    return x.values if isinstance(x, Trajectory) else np.asarray(x, dtype=float)


def _frame_ratios(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    if pred.shape != target.shape:
        raise ConfigError(f"shape mismatch {pred.shape} vs {target.shape}")
    denom = np.sum(target**2, axis=-1)
    if np.any(denom == 0):
        raise DegenerateNormalizationError("target contains an all-zero frame")
    return np.sum((pred - target) ** 2, axis=-1) / denom


def nmse(pred, target) -> float:
    """Frame-averaged ``||pred - target||^2 / ||target||^2``."""
    p, t = _values(pred), _values(target)
    return float(np.mean(np.atleast_1d(_frame_ratios(np.atleast_2d(p), np.atleast_2d(t)))))


def mse(pred, target) -> float:
    p, t = _values(pred), _values(target)
    if p.shape != t.shape:
        raise ConfigError(f"shape mismatch {p.shape} vs {t.shape}")
    return float(np.mean((p - t) ** 2))


def _equation_spec(kind: EquationKind, nu: float | None) -> EquationSpec:
    kind = EquationKind(kind)
    if kind is EquationKind.BURGERS:
        return EquationSpec.burgers(0.01 if nu is None else nu)
    return EquationSpec(kind)


def _transformed_pair(
    kind: EquationKind,
    u0: np.ndarray,
    grid: PeriodicGrid1D,
    time_grid: TimeGrid,
    op: SymmetryOp,
    config: SolverConfig | None,
    nu: float | None,
):
    """Return ``(S(g u0), g S(u0), S(u0))`` on comparable time grids."""
    spec = _equation_spec(kind, nu)
    check_admissible(spec.kind, [op.generator])
    eps = op.epsilon
    g = op.generator
    if g is G1:
        if eps < 0:
            raise ConfigError("time shifts are one-sided (epsilon >= 0)")
        if eps == 0:
            base = solve(spec, u0, grid, time_grid, config)
            return base, base, base
        ratio = eps / time_grid.dt
        n_ext = time_grid.n + int(math.ceil(ratio - 1e-9))
        ext_grid = TimeGrid(time_grid.dt * (n_ext - 1), n_ext)
        extended = solve(spec, u0, grid, ext_grid, config, window=time_grid)
        base = extended.output()
        moved, _ = augment(extended, [op], spec.kind, nu=spec.nu)
        start = moved.values[0]
        return solve(spec, start, grid, time_grid, config), moved, base
    base = solve(spec, u0, grid, time_grid, config)
    if g is G2:
        return solve(spec, fourier_shift(u0, grid, eps), grid, time_grid, config), augment(base, [op], spec.kind)[0], base
    if g is G3:
        return solve(spec, u0 + eps, grid, time_grid, config), augment(base, [op], spec.kind)[0], base
    if g is G4:
        moved, _ = augment(base, [op], spec.kind)
        u0s = moved.values[0]
        return solve(spec, u0s, moved.grid, moved.time_grid, config), moved, base
    raise ConfigError(f"{g.value} has no single-solution equivariance test")


def equivariance_error(
    kind: EquationKind,
    u0: np.ndarray,
    grid: PeriodicGrid1D,
    time_grid: TimeGrid,
    op: SymmetryOp,
    config: SolverConfig | None = None,
    nu: float | None = None,
) -> MetricReport:
    """``||S(g u0) - g S(u0)||^2 / ||S(g u0)||^2`` at the final frame.

    The per-frame ratios are returned as the breakdown.
    """
    start = time.perf_counter()
    solved, moved, _ = _transformed_pair(kind, u0, grid, time_grid, op, config, nu)
    ratios = _frame_ratios(moved.values, solved.values)
    elapsed = time.perf_counter() - start
    cfg = {
        "equation": EquationKind(kind).value,
        "generator": op.generator.value,
        "epsilon": op.epsilon,
        "rel_tol": (config or SolverConfig()).rel_tol,
        "seconds": elapsed,
    }
    return MetricReport("equivariance_error", float(ratios[-1]), tuple(map(float, ratios)), cfg)


def autocorrelative_error(
    kind: EquationKind,
    u0: np.ndarray,
    grid: PeriodicGrid1D,
    time_grid: TimeGrid,
    op: SymmetryOp,
    config: SolverConfig | None = None,
    nu: float | None = None,
) -> MetricReport:
    """``||S(g u0) - S(u0)||^2 / ||S(u0)||^2`` at the final frame."""
    solved, _, base = _transformed_pair(kind, u0, grid, time_grid, op, config, nu)
    ratios = _frame_ratios(solved.values, base.values)
    cfg = {"equation": EquationKind(kind).value, "generator": op.generator.value, "epsilon": op.epsilon}
    return MetricReport("autocorrelative_error", float(ratios[-1]), tuple(map(float, ratios)), cfg)


def equivariance_sweep(
    kind: EquationKind,
    u0: np.ndarray,
    grid: PeriodicGrid1D,
    time_grid: TimeGrid,
    generator,
    epsilons: Sequence[float],
    tolerances: Sequence[float],
    nu: float | None = None,
) -> list[dict]:
    """Rows ``(rel_tol, epsilon, error, seconds)`` over the tolerance x epsilon grid."""
    rows = []
    for tol in tolerances:
        config = SolverConfig(rel_tol=tol)
        for eps in epsilons:
            rep = equivariance_error(kind, u0, grid, time_grid, SymmetryOp(generator, eps), config, nu)
            rows.append({"rel_tol": tol, "epsilon": float(eps), "error": rep.value, "seconds": rep.config["seconds"]})
    return rows


def crosscheck_solvers(
    kind: EquationKind,
    n_samples: int,
    seed: int = 0,
    nx: int = 256,
    nt: int = 100,
    horizon: float | None = None,
    config: SolverConfig | None = None,
) -> MetricReport:
    """Mean pointwise MSE between the pseudospectral and finite-volume solvers.

    Initial conditions and jittered domains follow the dataset defaults; the
    horizon defaults to a desk-scale 10 s (KdV) or 5 s (KS).
    """
    kind = EquationKind(kind)
    if kind not in (EquationKind.KDV, EquationKind.KS):
        raise ConfigError("crosscheck supports kdv and ks")
    if n_samples < 1:
        raise ConfigError("crosscheck needs at least one sample")
    if horizon is None:
        horizon = 10.0 if kind is EquationKind.KDV else 5.0
    gen = default_generation_config(kind, nx=nx, nt=nt, horizon=horizon)
    spec = gen.spec
    errors = []
    for i in range(n_samples):
        rng = record_rng(seed, i)
        grid = PeriodicGrid1D(gen.length * rng.uniform(*gen.length_jitter), nx)
        tg = TimeGrid(gen.horizon * rng.uniform(*gen.horizon_jitter), nt)
        u0 = sample_initial_condition(gen.ic, grid, rng)
        a = solve(spec, u0, grid, tg, config)
        b = fvm_solve(spec, u0, grid, tg, config)
        errors.append(mse(a, b))
    cfg = {"equation": kind.value, "n": n_samples, "seed": seed, "nx": nx, "nt": nt, "T": horizon}
    return MetricReport("crosscheck_mse", float(np.mean(errors)), tuple(errors), cfg)


def bench_augmentation(
    traj: Trajectory,
    policy: AugmentationPolicy,
    kind: EquationKind,
    n_repeats: int = 50,
    seed: int = 0,
    nu: float | None = None,
    partner: Trajectory | None = None,
) -> MetricReport:
    """Median wall time of one ``augment`` call; sampling is done beforehand."""
    if n_repeats < 10:
        raise ConfigError("benchmark needs at least 10 repeats")
    policy.check(kind)
    rng = record_rng(seed, 0)
    draws = [sample_group_element(policy, rng, traj.grid.length, traj.output_grid.horizon) for _ in range(n_repeats)]
    timings = []
    for ops in draws:
        start = time.perf_counter()
        augment(traj, ops, kind, nu=nu, partner=partner)
        timings.append(time.perf_counter() - start)
    cfg = {"equation": EquationKind(kind).value, "policy": policy.to_dict(), "repeats": n_repeats}
    return MetricReport("augment_seconds", statistics.median(timings), tuple(timings), cfg)


def time_solve(
    spec: EquationSpec,
    u0: np.ndarray,
    grid: PeriodicGrid1D,
    time_grid: TimeGrid,
    config: SolverConfig | None = None,
    window: TimeGrid | None = None,
    n_repeats: int = 1,
) -> tuple[Trajectory, float]:
    """Solve and return the trajectory with the median wall time."""
    timings = []
    traj = None
    for _ in range(max(1, n_repeats)):
        start = time.perf_counter()
        traj = solve(spec, u0, grid, time_grid, config, window=window)
        timings.append(time.perf_counter() - start)
    return traj, statistics.median(timings)
