"""Command-line entry point.

    quasicharge run <config> [--out DIR]
    quasicharge verify [--suite NAME ...]
    quasicharge sweep <config> --param KEY --values V1,V2,... [--out DIR]

Exit status: 0 on success, 1 when a check or a propagation fails, 2 for
usage and configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .config import SUITE_NAMES, ConfigError, RunConfig, config_to_dict, load_config, with_override
from .gauge import ConfigurationError, SampledControl
from .grid import absorbing_mask
from .multimode import propagate_multimode
from .propagator import Diagnostics, InstabilityError, IntegratorMismatchError, Propagator
from .scenarios import prepare, validate_feasibility
from .snapshot import read_snapshot, write_snapshot

log = logging.getLogger("quasicharge")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _fmt(v) -> str:
    return f"{v:.17g}"


def write_diagnostics(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(Diagnostics.FIELDS)
        for d in rows:
            w.writerow([_fmt(v) for v in d.row()])


def _load_controls(cfg: RunConfig, base_dir: Path, grid):
    files = cfg.scenario.control_files
    if not files:
        return None
    legs = []
    for name in files:
        snap = read_snapshot(base_dir / name)
        if snap.grid != grid:
            raise ConfigError(f"scenario.control_files: {name} was sampled on a different grid")
        legs.append(snap.values)
    return SampledControl(grid, np.stack(legs))


def execute(cfg: RunConfig, out: Path, base_dir: Path = Path(".")) -> dict:
    """Run one configuration and write its artifacts into ``out``.

    Returns a summary mapping that also goes into the manifest.
    """
    t0 = time.perf_counter()
    out.mkdir(parents=True, exist_ok=True)
    grid = cfg.grid.build()
    sc = cfg.scenario
    controls = _load_controls(cfg, base_dir, grid)
    prep = prepare(sc, grid, controls, with_full=cfg.multimode is not None)
    mask = absorbing_mask(grid, cfg.grid.mask_width, cfg.grid.mask_strength) if cfg.grid.mask else None
    summary = {"outputs": []}

    if cfg.physical is not None:
        report = validate_feasibility(sc, cfg.physical)
        (out / "feasibility.txt").write_text("\n".join(report.lines()) + "\n")
        summary["outputs"].append("feasibility.txt")
        for c in report.checks:
            if c.status != "ok":
                log.warning("feasibility %s: ratio %.3g (%s)", c.name, c.ratio, c.status)

    if cfg.multimode is not None:
        mm = cfg.multimode
        trace = propagate_multimode(prep.gauge.full, prep.gauge, mm.gamma, prep.psi0, sc.zeta_max,
                                    samples=mm.samples, dzeta=sc.dzeta,
                                    U=0.0 if prep.U is None else prep.U)
        trace.write_csv(out / "multimode.csv")
        summary["outputs"].append("multimode.csv")
        summary["min_overlap"] = float(min(trace.overlap))
        summary["max_leakage"] = float(max(trace.leakage))
    else:
        prop = Propagator(grid, prep.gauge, prep.U, kind=cfg.integrator.kind, dzeta=sc.dzeta,
                          safety=cfg.integrator.safety, mask=mask)
        log.info("integrator %s, dzeta %.6g", prop.kind, prop.dzeta)
        traj = prop.run(prep.psi0, sc.zeta_max, every=cfg.outputs.diagnostics_every,
                        snapshot_at=cfg.outputs.snapshots)
        write_diagnostics(out / "diagnostics.csv", traj.diagnostics)
        summary["outputs"].append("diagnostics.csv")
        for i, (z, psi) in enumerate(traj.snapshots):
            name = f"snapshot_{i:03d}.qcs"
            write_snapshot(out / name, grid, psi, z, sc.kind)
            summary["outputs"].append(name)
        summary["integrator"] = prop.kind
        summary["dzeta"] = prop.dzeta

    summary["wall_time_s"] = round(time.perf_counter() - t0, 3)
    manifest = {"tool": "quasicharge", "version": __version__, "config": config_to_dict(cfg), "run": summary}
    (out / "manifest.yaml").write_text(yaml.safe_dump(manifest, sort_keys=False))
    return summary


def _output_dir(cfg: RunConfig, override, config_path: Path) -> Path:
    if override:
        return Path(override)
    d = Path(cfg.outputs.directory)
    return d if d.is_absolute() else config_path.parent / d


def cmd_verify(suites) -> int:
    from .verification import HEADER, run_suites

    rows = run_suites(suites)
    print(HEADER)
    for r in rows:
        print(r.format())
    failed = sum(not r.passed for r in rows)
    print(f"{len(rows) - failed}/{len(rows)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_FAIL


def cmd_sweep(cfg: RunConfig, config_path: Path, param: str, values, out: Path) -> int:
    status = EXIT_OK
    for raw in values:
        value = yaml.safe_load(raw) if isinstance(raw, str) else raw
        point = with_override(cfg, param, value, base_dir=config_path.parent)
        point = with_override(point, "mode", "run", base_dir=config_path.parent)
        sub = out / f"{param}={raw}"
        try:
            summary = execute(point, sub, config_path.parent)
        except (InstabilityError, IntegratorMismatchError, ConfigurationError) as exc:
            print(f"{param}={raw}: FAILED ({exc})", file=sys.stderr)
            status = EXIT_FAIL
            continue
        extra = "".join(f" {k}={summary[k]:.6g}" for k in ("min_overlap", "max_leakage") if k in summary)
        print(f"{param}={raw}: wrote {sub}{extra}")
    return status


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="quasicharge", description="Paraxial propagation with control-field induced potentials")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a configuration file")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides outputs.directory)")

    v = sub.add_parser("verify", help="run oracle checks and print a pass/fail table")
    v.add_argument("--suite", action="append", choices=SUITE_NAMES,
                   help="suite to run (repeatable; default: all)")

    s = sub.add_parser("sweep", help="run a configuration for several values of one parameter")
    s.add_argument("config")
    s.add_argument("--param", required=True, help="dotted key, e.g. scenario.F or multimode.gamma")
    s.add_argument("--values", required=True, help="comma-separated values")
    s.add_argument("--out", help="parent output directory")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "verify":
            return cmd_verify(args.suite)
        config_path = Path(args.config)
        cfg = load_config(config_path)
        out = _output_dir(cfg, args.out, config_path)
        if args.command == "sweep":
            values = [v.strip() for v in args.values.split(",") if v.strip()]
            if not values:
                raise ConfigError("--values: need at least one value")
            return cmd_sweep(cfg, config_path, args.param, values, out)
        if cfg.mode == "verify":
            return cmd_verify(cfg.verify.suites if cfg.verify else None)
        if cfg.mode == "sweep":
            return cmd_sweep(cfg, config_path, cfg.sweep.param, cfg.sweep.values, out)
        summary = execute(cfg, out, config_path.parent)
        print(f"wrote {', '.join(summary['outputs'])} to {out} in {summary['wall_time_s']:.2f} s")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InstabilityError, IntegratorMismatchError, ConfigurationError, ValueError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    raise SystemExit(main())
