"""Command-line interface.

Exit codes: 0 success, 1 configuration or usage error, 2 solver failure,
3 validation failure. Reports go to stdout as JSON; data goes to the paths
given on the command line.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import datagen, validate
from .equations import EquationKind, residual_check
from .errors import ConfigError, LPSDAError, OutOfRangeError, SolverError
from .integrator import SolverConfig
from .spectral import PeriodicGrid1D, TimeGrid
from .symmetry import ADMISSIBLE, AugmentationPolicy, Generator, default_policy

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VALIDATION = 0, 1, 2, 3
SEED_ENV = "LPSDA_SEED"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True, default=str) + "\n")


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None or env == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _sweep(text: str) -> list[float]:
    """``min:max:count`` to ``count`` evenly spaced values (a bare number is one value)."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return [float(parts[0])]
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except (ValueError, IndexError):
        raise argparse.ArgumentTypeError(f"expected min:max:count, got {text!r}") from None
    if len(parts) != 3 or count < 1:
        raise argparse.ArgumentTypeError(f"expected min:max:count with count >= 1, got {text!r}")
    return [float(v) for v in np.linspace(lo, hi, count)]


def _range_item(text: str) -> tuple[str, tuple[float, float]]:
    try:
        name, span = text.split("=")
        lo, hi = (float(v) for v in span.split(":"))
        return Generator(name).value, (lo, hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected GEN=min:max, got {text!r}") from None


def _generators(text: str) -> list[Generator]:
    try:
        return [Generator(g.strip()) for g in text.split(",") if g.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"unknown generator in {text!r}") from None


def _solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rel-tol", type=float, default=1e-8, help="relative local error tolerance")
    p.add_argument("--abs-tol", type=float, default=0.0, help="absolute local error tolerance")


def _solver_config(args) -> SolverConfig:
    return SolverConfig(rel_tol=args.rel_tol, abs_tol=args.abs_tol)


def _write_meta(dataset, path) -> None:
    if path:
        Path(path).write_text("".join(line + "\n" for line in datagen.metadata_lines(dataset)))


def cmd_generate(args) -> int:
    if args.amplitude is not None and len(args.amplitude) != 2:
        raise ConfigError("--amplitude takes two values: min,max")
    ic_kwargs = {}
    base = datagen.default_generation_config(args.equation)
    if args.K is not None or args.amplitude is not None or args.wavenumbers is not None:
        ic_kwargs["ic"] = datagen.InitialConditionSpec(
            args.K if args.K is not None else base.ic.num_terms,
            tuple(args.amplitude) if args.amplitude is not None else base.ic.amplitude,
            tuple(args.wavenumbers) if args.wavenumbers is not None else base.ic.wavenumbers,
        )
    config = datagen.default_generation_config(
        args.equation,
        length=args.L,
        horizon=args.T,
        nu=args.nu,
        nx=args.nx,
        nt=args.nt,
        margin=args.margin,
        solver=_solver_config(args),
        float32=args.float32,
        **ic_kwargs,
    )
    seed = _seed(args)
    start = time.perf_counter()
    dataset = datagen.generate_dataset(config, args.n, seed, workers=args.workers)
    datagen.write_dataset(dataset, args.out)
    _write_meta(dataset, args.emit_meta)
    _emit(
        {
            "command": "generate",
            "out": str(args.out),
            "count": len(dataset),
            "seed": seed,
            "residual_max": datagen.max_residual(dataset),
            "wall_seconds": time.perf_counter() - start,
            "config": config.to_dict(),
        }
    )
    return EXIT_OK


def cmd_augment(args) -> int:
    dataset = datagen.read_dataset(args.input)
    kind = EquationKind(dataset.kind)
    seed = _seed(args)
    gens = args.gens if args.gens is not None else list(ADMISSIBLE[kind])
    policy = default_policy(kind, gens, seed)
    if args.range:
        ranges = dict(policy.ranges)
        for name, span in args.range:
            g = Generator(name)
            if g not in policy.order:
                raise ConfigError(f"--range given for {name}, which is not in --gens")
            ranges[g] = span
        policy = AugmentationPolicy(ranges, policy.order, seed)
    start = time.perf_counter()
    out = datagen.augment_dataset(
        dataset,
        policy,
        args.copies,
        seed,
        keep_sources=not args.drop_sources,
        workers=args.workers,
        interpolation=args.interpolation,
    )
    datagen.write_dataset(out, args.out)
    _write_meta(out, args.emit_meta)
    histograms = {}
    for g in policy.order:
        eps = [e for rec in out.records if rec.lineage for name, e in rec.lineage.steps if name == g.value]
        # g1 and g2 ranges are relative to each record's T and L, so bin the drawn values directly
        lo, hi = policy.ranges[g]
        span = (lo, hi) if g not in (Generator.TIME_SHIFT, Generator.SPACE_SHIFT) and hi > lo else None
        counts, edges = np.histogram(eps, bins=10, range=span)
        histograms[g.value] = {"counts": counts.tolist(), "edges": edges.tolist()}
    _emit(
        {
            "command": "augment",
            "out": str(args.out),
            "count": len(out),
            "sources": len(dataset),
            "seed": seed,
            "policy": policy.to_dict(),
            "epsilon_histograms": histograms,
            "wall_seconds": time.perf_counter() - start,
        }
    )
    return EXIT_OK


def cmd_validate_residual(args) -> int:
    dataset = datagen.read_dataset(args.input)
    spec = dataset.spec
    values = [residual_check(spec, rec.output()) for rec in dataset.records]
    failing = [rec.id for rec, r in zip(dataset.records, values) if not r <= args.bound]
    _emit(
        {
            "command": "validate residual",
            "in": str(args.input),
            "bound": args.bound,
            "residual_max": max(values),
            "residuals": values,
            "failing_ids": failing,
        }
    )
    return EXIT_VALIDATION if failing else EXIT_OK


def cmd_validate_crosscheck(args) -> int:
    report = validate.crosscheck_solvers(
        args.equation, args.n, _seed(args), nx=args.nx, nt=args.nt, horizon=args.T, config=_solver_config(args)
    )
    out = report.to_dict()
    out["bound"] = args.bound
    _emit(out)
    return EXIT_OK if report.value <= args.bound else EXIT_VALIDATION


def cmd_validate_equivariance(args) -> int:
    kind = EquationKind(args.equation)
    seed = _seed(args)
    gen = datagen.default_generation_config(kind, nx=args.nx, nt=args.nt)
    length = args.L if args.L is not None else gen.length
    horizon = args.T if args.T is not None else (10.0 if kind is EquationKind.KDV else gen.horizon)
    grid = PeriodicGrid1D(length, args.nx)
    tg = TimeGrid(horizon, args.nt)
    u0 = datagen.sample_initial_condition(gen.ic, grid, datagen.record_rng(seed, 0))
    rows = validate.equivariance_sweep(kind, u0, grid, tg, args.gen, args.eps, args.tols, nu=gen.nu)
    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["rel_tol", "epsilon", "error", "seconds"])
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) for k, v in row.items()})
    _emit(
        {
            "command": "validate equivariance",
            "equation": kind.value,
            "generator": Generator(args.gen).value,
            "rows": len(rows),
            "out": str(args.out),
            "max_error": max(r["error"] for r in rows),
            "seed": seed,
            "L": length,
            "T": horizon,
        }
    )
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.repeats < 10:
        raise ConfigError("--repeats must be at least 10")
    kind = EquationKind(args.equation)
    if kind is EquationKind.BURGERS:
        raise ConfigError("bench supports kdv and ks")
    seed = _seed(args)
    gen = datagen.default_generation_config(kind, nx=args.nx, nt=args.nt, horizon=args.T)
    rng = datagen.record_rng(seed, 0)
    grid = PeriodicGrid1D(gen.length, gen.nx)
    u0 = datagen.sample_initial_condition(gen.ic, grid, rng)
    window = TimeGrid(gen.horizon, gen.nt)
    stored = TimeGrid(gen.horizon * (1 + gen.margin), gen.stored_frames)
    traj, solve_seconds = validate.time_solve(gen.spec, u0, grid, stored, _solver_config(args), window=window)
    full = default_policy(kind, args.gens, seed)
    identity = AugmentationPolicy({g: (0.0, 0.0) for g in full.order}, full.order, seed)
    rep_full = validate.bench_augmentation(traj, full, kind, args.repeats, seed)
    rep_id = validate.bench_augmentation(traj, identity, kind, args.repeats, seed)
    _emit(
        {
            "command": "bench",
            "equation": kind.value,
            "shape": [gen.nt, gen.nx],
            "augment_median_seconds": rep_full.value,
            "identity_median_seconds": rep_id.value,
            "solve_seconds": solve_seconds,
            "solve_over_augment": solve_seconds / rep_full.value,
            "repeats": args.repeats,
            "policy": full.to_dict(),
            "rel_tol": args.rel_tol,
        }
    )
    return EXIT_OK


def cmd_export(args) -> int:
    dataset = datagen.read_dataset(args.input)
    if not 0 <= args.record < len(dataset):
        raise OutOfRangeError(f"record {args.record} out of range for {len(dataset)} records")
    rec = dataset.records[args.record]
    traj = rec.output()
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            if args.layout == "triples":
                writer.writerow(["t", "x", "u"])
                for t, row in zip(traj.time_grid.times, traj.values):
                    for x, u in zip(traj.grid.x, row):
                        writer.writerow([repr(float(t)), repr(float(x)), repr(float(u))])
            else:
                writer.writerow(["t"] + [repr(float(x)) for x in traj.grid.x])
                for t, row in zip(traj.time_grid.times, traj.values):
                    writer.writerow([repr(float(t))] + [repr(float(u)) for u in row])
    meta = json.loads(datagen.metadata_lines(dataset)[args.record])
    meta.update({"nt": traj.time_grid.n, "nx": traj.grid.n})
    if args.meta:
        Path(args.meta).write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    _emit({"command": "export", "record": args.record, "csv": args.csv, "layout": args.layout, "meta": meta})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lpsda", description="Generate, augment and validate symmetry-augmented PDE datasets.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    equations = [k.value for k in ADMISSIBLE]

    p = sub.add_parser("generate", help="solve random initial conditions into an LPSD file")
    p.add_argument("--equation", choices=equations, required=True)
    p.add_argument("--n", type=int, default=16, help="number of records")
    p.add_argument("--out", type=Path, default=Path("dataset.lpsd"), help="output LPSD path")
    p.add_argument("--seed", type=int, default=None, help=f"master seed (falls back to ${SEED_ENV}, then 0)")
    p.add_argument("--nx", type=int, default=256)
    p.add_argument("--nt", type=int, default=100, help="output frames per record")
    p.add_argument("--L", type=float, default=None, help="nominal domain length before jitter")
    p.add_argument("--T", type=float, default=None, help="nominal horizon before jitter")
    p.add_argument("--K", type=int, default=None, help="number of sine terms in the initial condition")
    p.add_argument("--amplitude", type=_float_list, default=None, help="amplitude range min,max")
    p.add_argument("--wavenumbers", type=_int_list, default=None, help="admissible integer wavenumbers, e.g. 1,2,3")
    p.add_argument("--nu", type=float, default=None, help="viscosity (Burgers)")
    p.add_argument("--margin", type=float, default=None, help="extra solved time as a fraction of T")
    p.add_argument("--float32", action="store_true", help="store trajectories as float32")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--emit-meta", type=Path, default=None, help="write per-record JSON lines metadata here")
    _solver_args(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("augment", help="apply random symmetry transformations to an LPSD file")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--out", type=Path, default=Path("augmented.lpsd"))
    p.add_argument("--gens", type=_generators, default=None, help="comma-separated generators, e.g. g1,g2,g3")
    p.add_argument("--range", type=_range_item, action="append", default=[], help="override a range: GEN=min:max")
    p.add_argument("--copies", type=int, default=1, help="augmented copies per source record")
    p.add_argument("--seed", type=int, default=None, help=f"master seed (falls back to ${SEED_ENV}, then 0)")
    p.add_argument("--drop-sources", action="store_true", help="do not copy source records to the output")
    p.add_argument("--interpolation", choices=["fourier", "linear"], default="fourier")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--emit-meta", type=Path, default=None, help="write per-record JSON lines metadata here")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("validate", help="residual, crosscheck and equivariance checks")
    vsub = p.add_subparsers(dest="mode", required=True, parser_class=_Parser)
    v = vsub.add_parser("residual", help="PDE residual of every record in a file")
    v.add_argument("--in", dest="input", type=Path, required=True)
    v.add_argument("--bound", type=float, default=1e-2)
    v.set_defaults(func=cmd_validate_residual)

    v = vsub.add_parser("crosscheck", help="pseudospectral vs finite-volume solver")
    v.add_argument("--equation", choices=["kdv", "ks"], required=True)
    v.add_argument("--n", type=int, default=5)
    v.add_argument("--seed", type=int, default=None, help=f"master seed (falls back to ${SEED_ENV}, then 0)")
    v.add_argument("--nx", type=int, default=256)
    v.add_argument("--nt", type=int, default=100)
    v.add_argument("--T", type=float, default=None, help="horizon (default 10 for kdv, 5 for ks)")
    v.add_argument("--bound", type=float, default=1e-4, help="maximum admissible mean MSE")
    _solver_args(v)
    v.set_defaults(func=cmd_validate_crosscheck)

    v = vsub.add_parser("equivariance", help="tolerance x epsilon equivariance grid as CSV")
    v.add_argument("--equation", choices=equations, required=True)
    v.add_argument("--gen", type=Generator, required=True, choices=list(Generator), metavar="GEN")
    v.add_argument("--eps", type=_sweep, default=[0.0], help="epsilon sweep min:max:count")
    v.add_argument("--tols", type=_float_list, default=[1e-8], help="comma-separated rel tolerances")
    v.add_argument("--out", type=Path, default=Path("equivariance.csv"), help="CSV output path")
    v.add_argument("--seed", type=int, default=None, help=f"initial-condition seed (falls back to ${SEED_ENV}, then 0)")
    v.add_argument("--nx", type=int, default=256)
    v.add_argument("--nt", type=int, default=100)
    v.add_argument("--L", type=float, default=None)
    v.add_argument("--T", type=float, default=None, help="horizon (default 10 for kdv)")
    v.set_defaults(func=cmd_validate_equivariance)

    p = sub.add_parser("bench", help="augmentation wall time against solve time")
    p.add_argument("--equation", choices=["kdv", "ks"], default="kdv")
    p.add_argument("--gens", type=_generators, default=None)
    p.add_argument("--repeats", type=int, default=50, help="timed repeats (at least 10)")
    p.add_argument("--seed", type=int, default=None, help=f"master seed (falls back to ${SEED_ENV}, then 0)")
    p.add_argument("--nx", type=int, default=256)
    p.add_argument("--nt", type=int, default=100)
    p.add_argument("--T", type=float, default=None)
    _solver_args(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("export", help="dump one record as CSV and metadata JSON")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--record", type=int, required=True)
    p.add_argument("--csv", type=Path, default=None)
    p.add_argument("--layout", choices=["triples", "matrix"], default="triples")
    p.add_argument("--meta", type=Path, default=None, help="write record metadata JSON here")
    p.set_defaults(func=cmd_export)
    return parser


_NEGATIVE_VALUE = re.compile(r"^-(\d|\.\d|inf)")


def _attach_negative_values(argv: list[str]) -> list[str]:
    """Glue ``--eps -0.4:0.4:9`` into ``--eps=-0.4:0.4:9``.

    argparse only accepts a leading minus for plain numbers, not for sweep or
    list syntax.
    """
    out: list[str] = []
    for token in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and _NEGATIVE_VALUE.match(token):
            out[-1] = f"{out[-1]}={token}"
        else:
            out.append(token)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(_attach_negative_values(list(sys.argv[1:] if argv is None else argv)))
    try:
        return args.func(args)
    except SolverError as exc:
        print(f"lpsda: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (LPSDAError, ValueError, OSError) as exc:
        print(f"lpsda: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
