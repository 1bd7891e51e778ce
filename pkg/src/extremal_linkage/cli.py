"""Command-line front end.

    extremal-linkage --cmd scan --delta 1 --n 1024 --n 4096 --n 16384 \
        --reps 200 --seed 42 --out runs/critical

Exit codes: 0 ok, 1 usage, 2 I/O, 3 verification failure, 4 censoring advisory.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .coalescence import (coalescence_time, coalescence_times, default_cap,
                          limit_walker_trajectory, write_trace_csv)
from .degree import Variant, degree_tail_curve, degrees_for_seeds, write_curve_csv
from .fitness import FieldSpec, check_delta
from .seeds import derive_seed
from .stats import InsufficientData, ScanTable, fit_distance_regime
from .verify import run_battery

log = logging.getLogger("extremal_linkage")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_VERIFY, EXIT_CENSORING = 0, 1, 2, 3, 4
CENSORING_ADVISORY = 0.01


class Command(str, Enum):
    DEGREE = "degree"
    COALESCE = "coalesce"
    SCAN = "scan"
    LIMIT_WALK = "limit-walk"
    VERIFY = "verify"


class UsageError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    command: Command
    delta: float = 1.0
    n_values: list = field(default_factory=list)
    reps: int = 100
    seed: int = 0
    cap: Optional[int] = None
    out: str = "out"
    workers: int = 1
    trace: bool = False
    variant: str = Variant.LIMIT_EXACT.value
    h_max: int = 500
    budget: float = 0.1

    def validate(self) -> None:
        try:
            self.command = Command(self.command)
        except ValueError:
            raise UsageError(f"unknown command {self.command!r}") from None
        try:
            check_delta(self.delta)
        except ValueError as e:
            raise UsageError(str(e)) from None
        if self.reps < 1:
            raise UsageError("reps must be >= 1")
        if self.workers < 1:
            raise UsageError("workers must be >= 1")
        if self.cap is not None and self.cap < 1:
            raise UsageError("cap must be >= 1")
        if any(int(n) < 1 for n in self.n_values):
            raise UsageError("torus sizes must be >= 1")
        torus = self.command in (Command.COALESCE, Command.SCAN) or (
            self.command is Command.DEGREE and self.variant == Variant.TORUS.value)
        if torus and not self.n_values:
            raise UsageError(f"{self.command.value} needs at least one --n")
        if self.command is Command.DEGREE:
            try:
                Variant(self.variant)
            except ValueError:
                raise UsageError(f"unknown variant {self.variant!r}") from None
        if self.command is Command.SCAN and self.delta == 2:
            log.warning("delta = 2 is simulated but excluded from regime fitting")

    def echo(self) -> dict:
        d = asdict(self)
        d["command"] = Command(self.command).value
        return d


@dataclass
class RunManifest:
    config: dict
    version: str
    wall_clock_seconds: float
    results: dict = field(default_factory=dict)
    censoring_rates: dict = field(default_factory=dict)
    files: list = field(default_factory=list)
    status: int = EXIT_OK

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")


# --- workers ------------------------------------------------------------------

def _coalesce_chunk(args):
    delta, n, cap, seeds = args
    h, cens = coalescence_times(delta, n, seeds, cap)
    return [(n, s, int(x), bool(c)) for s, x, c in zip(seeds, h, cens)]


def _degree_chunk(args):
    variant, delta, n, master, lo, hi = args
    seeds = [derive_seed(master, k) for k in range(lo, hi)]
    counts = degrees_for_seeds(variant, delta, seeds, n)
    return [(n, s, int(c)) for s, c in zip(seeds, counts)]


def _chunks(count: int, workers: int):
    size = max(1, math.ceil(count / (4 * workers)))
    return [(lo, min(lo + size, count)) for lo in range(0, count, size)]


def _map(fn, jobs, workers):
    if workers == 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


# --- commands -----------------------------------------------------------------

def _run_coalescence(cfg: ExperimentConfig):
    rows = []
    jobs = []
    for n in cfg.n_values:
        cap = cfg.cap if cfg.cap is not None else default_cap(cfg.delta, n)
        for lo, hi in _chunks(cfg.reps, cfg.workers):
            jobs.append((cfg.delta, int(n), cap, [derive_seed(cfg.seed, k) for k in range(lo, hi)]))
    for part in _map(_coalesce_chunk, jobs, cfg.workers):
        rows.extend(part)
    rows.sort(key=lambda r: (r[0], r[1]))
    return rows


def _censoring(rows) -> dict:
    out = {}
    for n in sorted({r[0] for r in rows}):
        sel = [r[3] for r in rows if r[0] == n]
        out[str(n)] = sum(sel) / len(sel)
    return out


def cmd_coalesce(cfg: ExperimentConfig, out: Path, manifest: RunManifest) -> None:
    rows = _run_coalescence(cfg)
    path = out / "coalescence.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["delta", "n", "seed", "h_n", "censored"])
        for n, s, h, c in rows:
            w.writerow([repr(float(cfg.delta)), n, s, "" if c else h, int(c)])
    manifest.files.append(path.name)
    if cfg.trace:
        for n in cfg.n_values:
            for k in range(cfg.reps):
                res = coalescence_time(FieldSpec(derive_seed(cfg.seed, k), cfg.delta, n),
                                       cfg.cap, trace=True)
                tp = out / f"trace_n{n}_r{k}.csv"
                write_trace_csv(tp, res)
                manifest.files.append(tp.name)
    manifest.censoring_rates = _censoring(rows)
    for n in cfg.n_values:
        h = np.array([r[2] for r in rows if r[0] == n and not r[3]], dtype=float)
        manifest.results[str(n)] = {"mean": float(h.mean()) if h.size else None,
                                    "median": float(np.median(h)) if h.size else None}


def cmd_scan(cfg: ExperimentConfig, out: Path, manifest: RunManifest) -> None:
    rows = _run_coalescence(cfg)
    table = ScanTable()
    for n, s, h, c in rows:
        table.add(cfg.delta, n, s, h, c)
    path = out / "scan.csv"
    table.write_csv(path)
    manifest.files.append(path.name)
    manifest.censoring_rates = _censoring(rows)
    try:
        fit = fit_distance_regime(table, cfg.delta)
    except (InsufficientData, ValueError) as e:
        manifest.results["fit_error"] = str(e)
        log.warning("no regime fit: %s", e)
        return
    fp = out / "fit.json"
    fp.write_text(fit.to_json() + "\n")
    manifest.files.append(fp.name)
    manifest.results["fit"] = json.loads(fit.to_json())
    print(fit.to_json())


def cmd_degree(cfg: ExperimentConfig, out: Path, manifest: RunManifest) -> None:
    variant = Variant(cfg.variant)
    ns = [int(n) for n in cfg.n_values] if variant is Variant.TORUS else [None]
    path = out / "degree_samples.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["variant", "delta", "n", "seed", "count"])
        for n in ns:
            jobs = [(variant.value, cfg.delta, n, cfg.seed, lo, hi)
                    for lo, hi in _chunks(cfg.reps, cfg.workers)]
            rows = [r for part in _map(_degree_chunk, jobs, cfg.workers) for r in part]
            counts = [c for _, _, c in rows]
            for _, s, c in rows:
                w.writerow([variant.value, repr(float(cfg.delta)), "" if n is None else n, s, c])
            key = "limit" if n is None else str(n)
            manifest.results[key] = {"mean": float(np.mean(counts)), "max": int(np.max(counts))}
            try:
                curve = degree_tail_curve(counts)
            except ValueError as e:
                manifest.results[key]["tail_curve"] = str(e)
                continue
            cp = out / f"tail_{variant.value}{'' if n is None else f'_n{n}'}.csv"
            write_curve_csv(cp, curve)
            manifest.files.append(cp.name)
    manifest.files.insert(0, path.name)


def cmd_limit_walk(cfg: ExperimentConfig, out: Path, manifest: RunManifest) -> None:
    path = out / "limit_walk.csv"
    finals = []
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed", "layer", "position", "log_fitness", "G"])
        for k in range(cfg.reps):
            s = derive_seed(cfg.seed, k)
            rec = limit_walker_trajectory(cfg.delta, s, cfg.h_max)
            for h, (p, y, g) in enumerate(zip(rec.position, rec.log_f, rec.G)):
                w.writerow([s, h, "" if np.isnan(p) else int(p), repr(float(y)), repr(float(g))])
            finals.append(rec.G[-1])
    finals = np.array(finals)
    h = cfg.h_max
    summary = {"G_final_mean": float(finals.mean())}
    if cfg.delta == 1:
        summary["mean_abs_dev_over_h23"] = float(np.mean(np.abs(finals - h)) / h ** (2 / 3))
    elif cfg.delta < 1:
        summary["median_delta_h_G"] = float(np.median(cfg.delta ** h * finals))
    manifest.results = summary
    manifest.files.append(path.name)


def cmd_verify(cfg: ExperimentConfig, out: Path, manifest: RunManifest) -> None:
    checks = run_battery(cfg.seed, cfg.budget)
    for c in checks:
        print(c.line())
    manifest.results = {c.name: {"passed": c.passed, "detail": c.detail} for c in checks}
    if not all(c.passed for c in checks):
        manifest.status = EXIT_VERIFY


COMMANDS = {
    Command.DEGREE: cmd_degree,
    Command.COALESCE: cmd_coalesce,
    Command.SCAN: cmd_scan,
    Command.LIMIT_WALK: cmd_limit_walk,
    Command.VERIFY: cmd_verify,
}


def run(cfg: ExperimentConfig) -> RunManifest:
    """Execute one experiment, writing its files and ``manifest.json`` under ``cfg.out``."""
    cfg.validate()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    manifest = RunManifest(cfg.echo(), __version__, 0.0)
    COMMANDS[cfg.command](cfg, out, manifest)
    manifest.wall_clock_seconds = time.perf_counter() - t0
    if manifest.status == EXIT_OK and any(r > CENSORING_ADVISORY for r in manifest.censoring_rates.values()):
        log.warning("censoring above %.0f%%: %s", 100 * CENSORING_ADVISORY, manifest.censoring_rates)
        manifest.status = EXIT_CENSORING
    manifest.write(out / "manifest.json")
    return manifest


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="extremal-linkage", description=__doc__.splitlines()[0])
    p.add_argument("--cmd", choices=[c.value for c in Command])
    p.add_argument("--config", help="JSON file with config fields; flags override it")
    p.add_argument("--delta", type=float)
    p.add_argument("--n", type=int, action="append", dest="n_values")
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--cap", type=int)
    p.add_argument("--out")
    p.add_argument("--workers", type=int)
    p.add_argument("--trace", action="store_true", default=None)
    p.add_argument("--variant", choices=[v.value for v in Variant])
    p.add_argument("--h-max", type=int, dest="h_max")
    p.add_argument("--budget", type=float, help="verify budget fraction (1.0 = full)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(argv=None) -> ExperimentConfig:
    args = build_parser().parse_args(argv)
    merged = {}
    if args.config:
        try:
            merged.update(json.loads(Path(args.config).read_text()))
        except OSError as e:
            raise OSError(f"cannot read config {args.config}: {e}") from e
        except json.JSONDecodeError as e:
            raise UsageError(f"bad config file: {e}") from None
    if "cmd" in merged:
        merged["command"] = merged.pop("cmd")
    for key, value in vars(args).items():
        if key in ("config", "verbose") or value is None:
            continue
        merged["command" if key == "cmd" else key] = value
    if "command" not in merged:
        raise UsageError("--cmd is required")
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(merged) - known
    if unknown:
        raise UsageError(f"unknown config fields: {sorted(unknown)}")
    return ExperimentConfig(**merged)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(argv)
        manifest = run(cfg)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    return manifest.status


if __name__ == "__main__":
    sys.exit(main())
