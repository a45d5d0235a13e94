"""Command-line entry point.

Subcommands:
  run           one simulation run from a config (plus overrides)
  sweep         the full (cell x seed) grid of a config
  verify        built-in property suite, pass/fail table
  figures-data  regenerate the two reference experiment grids and lay
                their outputs out for the figure renderer

Exit codes: 0 success, 1 usage/config errors, 2 partial per-run failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .dynamics import run
from .harness import (
    ConfigError,
    ExperimentConfig,
    apply_overrides,
    cell_slug,
    config_from_dict,
    derive_seeds,
    load_config_file,
    run_sweep,
    write_run_json,
    write_trajectory_csv,
)
from .verify import run_verify

log = logging.getLogger("asyncavg")

# The two reference grids: rows are (q_shrink, q_flip) settings, columns
# are the ER density p.  figure renderers rely on this exact layout.
PART1_ROWS = ((0.001, 1e-6), (0.002, 1e-6), (0.003, 1e-6))
PART2_ROWS = ((0.001, 1e-6), (0.001, 2e-6), (0.001, 3e-6))
COLUMN_DENSITIES = (0.05, 0.1)
FIGURE_BASE = {"n": 100, "tolerance": 1e-3, "horizon": 10_000}


class _Parser(argparse.ArgumentParser):
    # spec'd exit code for usage errors is 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_common(sub):
    sub.add_argument("--config", required=True, help="TOML config file")
    sub.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config key (repeatable)",
    )
    sub.add_argument("--out", help="output directory (overrides output_dir)")
    sub.add_argument("--force", action="store_true", help="overwrite existing output files")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="asyncavg", description=__doc__.strip().splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_run = subs.add_parser("run", help="execute a single run")
    _add_common(p_run)
    p_run.add_argument("--seed", type=int, help="seed for this run (default: first of the batch)")

    p_sweep = subs.add_parser("sweep", help="execute the config's full sweep grid")
    _add_common(p_sweep)
    p_sweep.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    p_verify = subs.add_parser("verify", help="run the built-in property suite")
    p_verify.add_argument("--json", action="store_true", help="machine-readable output")
    p_verify.add_argument("--seed", type=int, default=2024, help="seed for the randomized corpora")

    p_fig = subs.add_parser("figures-data", help="produce data for the reference figure grids")
    p_fig.add_argument("--out", required=True, help="data directory to lay out")
    p_fig.add_argument("--seed", type=int, default=1, help="root seed for the panel runs")
    p_fig.add_argument("--force", action="store_true")
    p_fig.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override n/tolerance/horizon/sample_stride (smoke runs)",
    )
    return parser


def _load(args) -> ExperimentConfig:
    overrides = list(args.overrides)
    if args.out:
        overrides.append(("output_dir", args.out))
    return load_config_file(args.config, overrides)


def cmd_run(args) -> int:
    config = _load(args)
    seed = args.seed if args.seed is not None else config.seeds[0]
    record = run(config.base, seed, sample_stride=config.sample_stride, mode=config.mode)
    out_dir = config.output_dir if config.output_dir is not None else Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)
    slug = cell_slug(record.params)
    write_trajectory_csv(record, out_dir / f"traj_{slug}_seed{seed}.csv", args.force)
    write_run_json(record, out_dir / f"run_{slug}_seed{seed}.json", args.force)
    stop = record.t_stop if record.t_stop is not None else "none"
    print(f"run {slug} seed {seed}: t_stop={stop} drop_violations={record.drop_violation_count}")
    return 0

def cmd_sweep(args) -> int:
    config = _load(args)
    summary, _, code = run_sweep(config, jobs=args.jobs, force=args.force)
    for cell in summary.cells:
        median = "no stop" if cell.median_t_stop is None else f"{cell.median_t_stop:g}"
        print(
            f"cell p={cell.params['p_init']:g} qs={cell.params['q_shrink']:g} "
            f"qf={cell.params['q_flip']:g}: median t_stop={median} "
            f"({cell.no_stop_count} censored, {cell.failed_count} failed)"
        )
    return code


def cmd_verify(args) -> int:
    checks = run_verify(args.seed)
    if args.json:
        payload = {
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in checks],
            "passed": all(c.passed for c in checks),
        }
        print(json.dumps(payload, indent=2))
    else:
        width = max(len(c.name) for c in checks)
        for c in checks:
            status = "PASS" if c.passed else "FAIL"
            print(f"{status}  {c.name:<{width}}  {c.detail}")
    return 0 if all(c.passed for c in checks) else 1


def figure_cells(part: str) -> list[dict]:
    rows = PART1_ROWS if part == "part1" else PART2_ROWS
    return [
        {"q_shrink": qs, "q_flip": qf, "p_init": p} for qs, qf in rows for p in COLUMN_DENSITIES
    ]


def cmd_figures_data(args) -> int:
    base = dict(FIGURE_BASE)
    base.update({"p_init": 0.0, "sample_stride": 10})
    for item in args.overrides:
        doc = apply_overrides(base, [item])
        base = doc
    out_root = Path(args.out)
    seeds = derive_seeds(args.seed, 12)
    failures = 0
    k = 0
    for part in ("part1", "part2"):
        for cell in figure_cells(part):
            raw = dict(base)
            raw.update(cell)
            raw["seeds"] = [seeds[k]]
            config = config_from_dict(raw)
            slug = cell_slug(config.base)
            panel_dir = out_root / part / slug
            panel_dir.mkdir(parents=True, exist_ok=True)
            try:
                record = run(
                    config.base, seeds[k], sample_stride=config.sample_stride, mode=config.mode
                )
            except Exception as err:
                log.warning("panel %s/%s failed: %s", part, slug, err)
                failures += 1
                k += 1
                continue
            write_trajectory_csv(record, panel_dir / "trajectory.csv", args.force)
            write_run_json(record, panel_dir / "run.json", args.force)
            stop = record.t_stop if record.t_stop is not None else "none"
            print(f"{part}/{slug}: seed={seeds[k]} t_stop={stop}")
            k += 1
    return 2 if failures else 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": cmd_run,
        "sweep": cmd_sweep,
        "verify": cmd_verify,
        "figures-data": cmd_figures_data,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as err:
        print(f"asyncavg: config error: {err}", file=sys.stderr)
        return 1
    except FileNotFoundError as err:
        print(f"asyncavg: {err}", file=sys.stderr)
        return 1
    except FileExistsError as err:
        print(f"asyncavg: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
