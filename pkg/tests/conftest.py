import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lpsda.spectral import PeriodicGrid1D

settings.register_profile("default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def band_limited(grid: PeriodicGrid1D, rng: np.random.Generator, max_mode: int, zero_mean: bool = False) -> np.ndarray:
    """Random real trigonometric polynomial with modes up to ``max_mode``."""
    m = np.arange(1, max_mode + 1)
    a = rng.normal(size=m.size) / m
    b = rng.normal(size=m.size) / m
    arg = 2 * np.pi * np.outer(m, grid.x) / grid.length
    u = a @ np.cos(arg) + b @ np.sin(arg)
    if not zero_mean:
        u = u + rng.normal()
    return u


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def solved_source(kind, seed=0, length=None, horizon=None, nx=256, nt=100, amplitude=None, nu=None):
    """A solver-produced trajectory with the dataset time-shift margin."""
    from lpsda.datagen import InitialConditionSpec, default_generation_config, record_rng, sample_initial_condition
    from lpsda.equations import solve

    overrides = {"nx": nx, "nt": nt, "length": length, "horizon": horizon, "nu": nu}
    cfg = default_generation_config(kind, **overrides)
    if amplitude is not None:
        ic = cfg.ic
        cfg = default_generation_config(
            kind, ic=InitialConditionSpec(ic.num_terms, (-amplitude, amplitude), ic.wavenumbers), **overrides
        )
    from lpsda.spectral import TimeGrid

    grid = PeriodicGrid1D(cfg.length, nx)
    u0 = sample_initial_condition(cfg.ic, grid, record_rng(seed, 0))
    window = TimeGrid(cfg.horizon, nt)
    stored = TimeGrid(cfg.horizon * (1 + cfg.margin), cfg.stored_frames)
    return solve(cfg.spec, u0, grid, stored, cfg.solver, window=window)


# desk-scale Burgers amplitude: the dataset amplitude forms shocks narrower than dx at Nx=256
BURGERS_DESK_AMPLITUDE = 0.05


@pytest.fixture(scope="session")
def kdv_source():
    return solved_source("kdv", seed=1, horizon=10.0)


@pytest.fixture(scope="session")
def ks_source():
    return solved_source("ks", seed=2, horizon=5.0)


@pytest.fixture(scope="session")
def burgers_pair():
    a = solved_source("burgers", seed=3, amplitude=BURGERS_DESK_AMPLITUDE)
    b = solved_source("burgers", seed=4, amplitude=BURGERS_DESK_AMPLITUDE)
    return a, b


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
