"""Initial-condition sampling, batch generation/augmentation and the LPSD container.

LPSD layout (little-endian)::

    b"LPSD" | u32 version | u64 header length | UTF-8 JSON header | data

The data section is the concatenation of row-major ``(frames, Nx)`` blocks,
one per record, at the byte offsets (relative to the start of the data
section) listed in the header. See ``docs/format.md``.
"""

from __future__ import annotations

import json
import math
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .equations import EquationKind, EquationSpec, residual_check, solve
from .errors import ConfigError, SolverError
from .integrator import SolverConfig
from .spectral import PeriodicGrid1D, TimeGrid, Trajectory
from .symmetry import (
    GALPHA,
    AugmentationPolicy,
    AugmentedLineage,
    augment,
    sample_group_element,
)

__all__ = [
    "InitialConditionSpec",
    "GenerationConfig",
    "DatasetRecord",
    "DatasetFile",
    "default_generation_config",
    "sample_initial_condition",
    "generate_dataset",
    "augment_dataset",
    "write_dataset",
    "read_dataset",
    "dataset_bytes",
    "metadata_lines",
    "record_rng",
]

MAGIC = b"LPSD"
FORMAT_VERSION = 1
PRNG_NAME = "numpy.random.PCG64"
MAX_RETRIES = 5


@dataclass(frozen=True)
class InitialConditionSpec:
    """Random truncated sine series ``sum_k A_k sin(2 pi l_k x / L + phi_k)``."""

    num_terms: int = 10
    amplitude: tuple[float, float] = (-0.5, 0.5)
    wavenumbers: tuple[int, ...] = (1, 2, 3)
    phase: tuple[float, float] = (0.0, 2 * math.pi)

    def __post_init__(self):
        if int(self.num_terms) != self.num_terms or self.num_terms < 1:
            raise ConfigError("num_terms must be a positive integer")
        wn = tuple(int(w) for w in self.wavenumbers)
        if not wn or any(w < 1 for w in wn) or any(w != v for w, v in zip(wn, self.wavenumbers)):
            raise ConfigError("wavenumbers must be positive integers")
        lo, hi = self.amplitude
        if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
            raise ConfigError("invalid amplitude range")
        object.__setattr__(self, "num_terms", int(self.num_terms))
        object.__setattr__(self, "wavenumbers", wn)
        object.__setattr__(self, "amplitude", (float(lo), float(hi)))
        object.__setattr__(self, "phase", tuple(float(p) for p in self.phase))

    def to_dict(self) -> dict:
        return {
            "num_terms": self.num_terms,
            "amplitude": list(self.amplitude),
            "wavenumbers": list(self.wavenumbers),
            "phase": list(self.phase),
        }


@dataclass(frozen=True)
class GenerationConfig:
    """Everything that determines a generated dataset apart from the seed."""

    kind: EquationKind
    length: float
    horizon: float
    ic: InitialConditionSpec = field(default_factory=InitialConditionSpec)
    nu: float | None = None
    nx: int = 256
    nt: int = 100
    length_jitter: tuple[float, float] = (0.9, 1.1)
    horizon_jitter: tuple[float, float] = (0.9, 1.1)
    margin: float = 0.25
    oversample: int = 4
    solver: SolverConfig = field(default_factory=SolverConfig)
    float32: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", EquationKind(self.kind))
        if self.kind is EquationKind.HEAT:
            raise ConfigError("dataset generation supports kdv, ks and burgers")
        if self.kind is EquationKind.BURGERS and not (self.nu and self.nu > 0):
            raise ConfigError("Burgers generation needs nu > 0")
        if not (self.length > 0 and self.horizon > 0):
            raise ConfigError("L and T must be positive")
        if self.nx < 4 or self.nt < 5:
            raise ConfigError("need nx >= 4 and nt >= 5")
        if self.margin < 0 or self.oversample < 1:
            raise ConfigError("margin must be >= 0 and oversample >= 1")
        intervals = self.oversample * (self.nt - 1) * (1 + self.margin)
        if abs(intervals - round(intervals)) > 1e-9:
            raise ConfigError("margin must be a multiple of 1/(oversample*(nt-1))")
        for lo, hi in (self.length_jitter, self.horizon_jitter):
            if not 0 < lo <= hi:
                raise ConfigError("jitter ranges must be positive and ordered")

    @property
    def spec(self) -> EquationSpec:
        return EquationSpec(self.kind, self.nu or 0.0)

    @property
    def stored_frames(self) -> int:
        return int(round(self.oversample * (self.nt - 1) * (1 + self.margin))) + 1

    def to_dict(self) -> dict:
        return {
            "equation": self.kind.value,
            "L": self.length,
            "T": self.horizon,
            "nu": self.nu,
            "nx": self.nx,
            "nt": self.nt,
            "ic": self.ic.to_dict(),
            "length_jitter": list(self.length_jitter),
            "horizon_jitter": list(self.horizon_jitter),
            "margin": self.margin,
            "oversample": self.oversample,
            "solver": self.solver.to_dict(),
            "float32": self.float32,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GenerationConfig":
        ic = d["ic"]
        solver = SolverConfig(**d["solver"])
        return cls(
            kind=d["equation"],
            length=d["L"],
            horizon=d["T"],
            ic=InitialConditionSpec(ic["num_terms"], tuple(ic["amplitude"]), tuple(ic["wavenumbers"]), tuple(ic["phase"])),
            nu=d["nu"],
            nx=d["nx"],
            nt=d["nt"],
            length_jitter=tuple(d["length_jitter"]),
            horizon_jitter=tuple(d["horizon_jitter"]),
            margin=d["margin"],
            oversample=d["oversample"],
            solver=solver,
            float32=d["float32"],
        )


def default_generation_config(kind: EquationKind, **overrides) -> GenerationConfig:
    """Nominal per-equation settings (Nx=256, 100 output frames)."""
    kind = EquationKind(kind)
    if kind is EquationKind.KDV:
        base = dict(length=128.0, horizon=40.0)
    elif kind is EquationKind.KS:
        base = dict(length=64.0, horizon=20.0)
    elif kind is EquationKind.BURGERS:
        base = dict(
            length=2 * math.pi,
            horizon=10.0,
            nu=0.01,
            ic=InitialConditionSpec(20, (-0.5, 0.5), (3, 4, 5, 6)),
            horizon_jitter=(1.0, 1.0),
        )
    else:
        raise ConfigError(f"no dataset defaults for {kind.value}")
    base.update({k: v for k, v in overrides.items() if v is not None})
    return GenerationConfig(kind=kind, **base)


def record_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for record ``index`` of a run seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(index)])))


def sample_initial_condition(spec: InitialConditionSpec, grid: PeriodicGrid1D, rng: np.random.Generator) -> np.ndarray:
    k = spec.num_terms
    amps = rng.uniform(*spec.amplitude, size=k)
    ells = rng.choice(np.asarray(spec.wavenumbers), size=k)
    phases = rng.uniform(*spec.phase, size=k)
    arg = 2 * np.pi * np.outer(ells, grid.x) / grid.length + phases[:, None]
    return amps @ np.sin(arg)


@dataclass(frozen=True)
class DatasetRecord:
    """One trajectory plus provenance.

    Raw records keep the extended, oversampled solve (``trajectory.window``
    marks the nominal output); augmented records hold only their output.
    """

    id: int
    trajectory: Trajectory
    seed: tuple[int, ...] = ()
    lineage: AugmentedLineage | None = None
    attempts: int = 1

    @property
    def length(self) -> float:
        return self.trajectory.grid.length

    @property
    def horizon(self) -> float:
        return self.trajectory.output_grid.horizon

    def output(self) -> Trajectory:
        return self.trajectory.output()


@dataclass
class DatasetFile:
    kind: EquationKind
    nu: float | None
    records: list[DatasetRecord]
    seed: int
    config: dict = field(default_factory=dict)
    float32: bool = False

    def __len__(self) -> int:
        return len(self.records)

    @property
    def spec(self) -> EquationSpec:
        return EquationSpec(EquationKind(self.kind), self.nu or 0.0)


def _generate_one(config: GenerationConfig, seed: int, index: int) -> DatasetRecord:
    rng = record_rng(seed, index)
    last_error: Exception | None = None
    for attempt in range(1, MAX_RETRIES + 2):
        length = config.length * rng.uniform(*config.length_jitter)
        horizon = config.horizon * rng.uniform(*config.horizon_jitter)
        grid = PeriodicGrid1D(length, config.nx)
        u0 = sample_initial_condition(config.ic, grid, rng)
        window = TimeGrid(horizon, config.nt)
        stored = TimeGrid(horizon * (1 + config.margin), config.stored_frames)
        try:
            traj = solve(config.spec, u0, grid, stored, config.solver, window=window)
        except SolverError as exc:
            last_error = exc
            continue
        return DatasetRecord(index, traj, (int(seed), int(index)), None, attempt)
    raise SolverError(f"record {index} failed after {MAX_RETRIES} retries: {last_error}", getattr(last_error, "time", 0.0))


def _map(fn, args: Sequence[tuple], workers: int) -> list:
    if workers is None or workers <= 1 or len(args) <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=min(workers, len(args))) as pool:
        return list(pool.map(fn, *zip(*args)))


def generate_dataset(config: GenerationConfig, n_records: int, seed: int, workers: int = 1) -> DatasetFile:
    """Solve ``n_records`` random initial conditions.

    Each record is solved on ``[0, T (1 + margin)]`` with ``oversample``
    times the output frame rate so that time shifts are available later.
    A record whose solve fails is redrawn from the same stream, at most
    ``MAX_RETRIES`` times.
    """
    if n_records < 1:
        raise ConfigError("n_records must be >= 1")
    records = _map(_generate_one, [(config, seed, i) for i in range(n_records)], workers)
    return DatasetFile(config.kind, config.nu, records, int(seed), {"generate": config.to_dict()}, config.float32)


def _augment_one(
    record: DatasetRecord,
    partners: list[DatasetRecord],
    kind: EquationKind,
    nu: float | None,
    policy: AugmentationPolicy,
    copies: int,
    seed: int,
    interpolation: str,
) -> list[tuple[Trajectory, AugmentedLineage]]:
    rng = record_rng(seed, record.id)
    uses_mix = GALPHA in policy.order
    order = rng.permutation(len(partners)) if uses_mix else None
    out = []
    for c in range(copies):
        ops = sample_group_element(policy, rng, record.length, record.horizon)
        partner = partners[order[c % len(partners)]] if uses_mix else None
        traj, lineage = augment(
            record.trajectory,
            ops,
            kind,
            nu=nu,
            partner=None if partner is None else partner.trajectory,
            interpolation=interpolation,
            source_id=record.id,
            partner_id=None if partner is None else partner.id,
        )
        out.append((traj.output(), lineage))
    return out


def augment_dataset(
    dataset: DatasetFile,
    policy: AugmentationPolicy,
    copies: int,
    seed: int | None = None,
    keep_sources: bool = True,
    workers: int = 1,
    interpolation: str = "fourier",
) -> DatasetFile:
    """Draw ``copies`` group elements per source record and apply them.

    For the Burgers mixture each copy pairs the source with a different
    partner (drawn without replacement while partners remain).
    """
    kind = EquationKind(dataset.kind)
    policy.check(kind)
    if copies < 1:
        raise ConfigError("copies must be >= 1")
    seed = policy.seed if seed is None else int(seed)
    uses_mix = GALPHA in policy.order
    if uses_mix and len(dataset) < 2:
        raise ConfigError("the Burgers mixture needs at least two records")
    by_id = dataset.records
    args = []
    for rec in by_id:
        partners = [r for r in by_id if r.id != rec.id] if uses_mix else []
        args.append((rec, partners, kind, dataset.nu, policy, copies, seed, interpolation))
    results = _map(_augment_one, args, workers)

    records: list[DatasetRecord] = []
    if keep_sources:
        records.extend(by_id)
    next_id = max(r.id for r in by_id) + 1
    for rec, produced in zip(by_id, results):
        for traj, lineage in produced:
            records.append(DatasetRecord(next_id, traj, (seed, rec.id), lineage))
            next_id += 1
    config = dict(dataset.config)
    config["augment"] = {
        "policy": policy.to_dict(),
        "copies": copies,
        "seed": seed,
        "keep_sources": keep_sources,
        "interpolation": interpolation,
    }
    return DatasetFile(kind, dataset.nu, records, dataset.seed, config, dataset.float32)


def _record_meta(rec: DatasetRecord, offset: int, dtype: str) -> dict:
    traj = rec.trajectory
    meta = {
        "id": rec.id,
        "offset": offset,
        "dtype": dtype,
        "L": traj.grid.length,
        "T": rec.horizon,
        "nt": traj.output_grid.n,
        "stored_T": traj.time_grid.horizon,
        "stored_nt": traj.time_grid.n,
        "seed": list(rec.seed),
        "attempts": rec.attempts,
        "lineage": None if rec.lineage is None else rec.lineage.to_dict(),
    }
    return meta


def dataset_bytes(dataset: DatasetFile) -> bytes:
    """Serialise to the LPSD byte layout."""
    dtype = np.dtype("<f4") if dataset.float32 else np.dtype("<f8")
    blocks, metas = [], []
    offset = 0
    for rec in dataset.records:
        block = np.ascontiguousarray(rec.trajectory.values, dtype=dtype).tobytes()
        metas.append(_record_meta(rec, offset, dtype.str))
        blocks.append(block)
        offset += len(block)
    nx = {rec.trajectory.grid.n for rec in dataset.records}
    header = {
        "format_version": FORMAT_VERSION,
        "equation": EquationKind(dataset.kind).value,
        "nu": dataset.nu,
        "nx": nx.pop() if len(nx) == 1 else sorted(nx),
        "count": len(dataset.records),
        "seed": dataset.seed,
        "prng": {"name": PRNG_NAME, "numpy": np.__version__, "stream": "SeedSequence([seed, record_id])"},
        "config": dataset.config,
        "data_bytes": offset,
        "records": metas,
    }
    text = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    # pad so the data section starts on an 8-byte boundary
    text += b" " * (-(len(MAGIC) + 12 + len(text)) % 8)
    return MAGIC + struct.pack("<IQ", FORMAT_VERSION, len(text)) + text + b"".join(blocks)


def write_dataset(dataset: DatasetFile, path) -> Path:
    path = Path(path)
    path.write_bytes(dataset_bytes(dataset))
    return path


def read_header(path) -> tuple[dict, int]:
    with open(path, "rb") as fh:
        head = fh.read(16)
        if len(head) < 16 or head[:4] != MAGIC:
            raise ConfigError(f"{path}: not an LPSD file")
        version, length = struct.unpack("<IQ", head[4:])
        if version != FORMAT_VERSION:
            raise ConfigError(f"{path}: unsupported LPSD version {version}")
        header = json.loads(fh.read(length).decode("utf-8"))
    return header, 16 + length


def read_dataset(path) -> DatasetFile:
    header, start = read_header(path)
    raw = Path(path).read_bytes()[start:]
    if len(raw) != header["data_bytes"]:
        raise ConfigError(f"{path}: truncated data section")
    records = []
    for meta in header["records"]:
        dtype = np.dtype(meta["dtype"])
        nt, nx = meta["stored_nt"], header["nx"] if isinstance(header["nx"], int) else None
        count = nt * (nx or 0)
        if nx is None:
            raise ConfigError("mixed grid sizes are not supported")
        values = np.frombuffer(raw, dtype=dtype, count=count, offset=meta["offset"]).reshape(nt, nx)
        stored = TimeGrid(meta["stored_T"], nt)
        window = None
        if meta["stored_nt"] != meta["nt"] or meta["stored_T"] != meta["T"]:
            window = TimeGrid(meta["T"], meta["nt"])
        traj = Trajectory(PeriodicGrid1D(meta["L"], nx), stored, values.astype(float), window=window)
        lineage = None if meta["lineage"] is None else AugmentedLineage.from_dict(meta["lineage"])
        records.append(DatasetRecord(meta["id"], traj, tuple(meta["seed"]), lineage, meta.get("attempts", 1)))
    return DatasetFile(
        EquationKind(header["equation"]),
        header["nu"],
        records,
        header["seed"],
        header["config"],
        any(np.dtype(m["dtype"]) == np.float32 for m in header["records"]),
    )


def metadata_lines(dataset: DatasetFile) -> list[str]:
    """One JSON object per record: id, L, T, seeds and lineage."""
    lines = []
    for rec in dataset.records:
        meta = {
            "id": rec.id,
            "equation": EquationKind(dataset.kind).value,
            "L": rec.length,
            "T": rec.horizon,
            "nu": dataset.nu,
            "seed": list(rec.seed),
            "lineage": None if rec.lineage is None else rec.lineage.to_dict(),
        }
        lines.append(json.dumps(meta, sort_keys=True))
    return lines


def max_residual(dataset: DatasetFile) -> float:
    spec = dataset.spec
    return max(residual_check(spec, rec.output()) for rec in dataset.records)
