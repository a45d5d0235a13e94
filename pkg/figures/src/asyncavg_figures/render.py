"""Render trajectory figures from asyncavg `figures-data` output.

Reads only the documented file formats (long-format trajectory CSV and
the per-run JSON summary) laid out as::

    <data-dir>/part1/<slug>/trajectory.csv
    <data-dir>/part1/<slug>/run.json
    <data-dir>/part2/...

where the twelve expected cell slugs come from the two reference grids
(three (q_shrink, q_flip) rows by two densities each).  Produces one PNG
per panel plus one composite 3x2 grid per part; every panel plots all
agent trajectories and carries the stopping time (or its absence) in the
subtitle.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

PART1_ROWS = ((0.001, 1e-6), (0.002, 1e-6), (0.003, 1e-6))
PART2_ROWS = ((0.001, 1e-6), (0.001, 2e-6), (0.001, 3e-6))
COLUMN_DENSITIES = (0.05, 0.1)

Y_LIMITS = (0.0, 1.0)  # states live in [0,1] under uniform initialization


class PanelDataError(RuntimeError):
    """Missing or inconsistent panel input files."""


@dataclass
class PanelSpec:
    part: str
    row: int  # 0-based row in the composite grid
    col: int  # 0 -> p=0.05, 1 -> p=0.1
    p_init: float
    q_shrink: float
    q_flip: float
    csv_path: Path
    json_path: Path

    @property
    def slug(self) -> str:
        return f"p{self.p_init:g}_qs{self.q_shrink:g}_qf{self.q_flip:g}"

    @property
    def subcaption(self) -> str:
        return f"p={self.p_init:g}"


@dataclass
class PanelResult:
    part: str
    slug: str
    t_stop: int | None
    subtitle: str
    image_path: Path


def expected_panels(data_dir: Path) -> list[PanelSpec]:
    specs = []
    for part, rows in (("part1", PART1_ROWS), ("part2", PART2_ROWS)):
        for r, (qs, qf) in enumerate(rows):
            for c, p in enumerate(COLUMN_DENSITIES):
                spec = PanelSpec(
                    part=part, row=r, col=c, p_init=p, q_shrink=qs, q_flip=qf,
                    csv_path=data_dir / part / f"p{p:g}_qs{qs:g}_qf{qf:g}" / "trajectory.csv",
                    json_path=data_dir / part / f"p{p:g}_qs{qs:g}_qf{qf:g}" / "run.json",
                )
                specs.append(spec)
    return specs


def check_inputs(specs: list[PanelSpec]) -> None:
    missing = [
        f"{s.part}/{s.slug}" for s in specs if not (s.csv_path.exists() and s.json_path.exists())
    ]
    if missing:
        raise PanelDataError(
            "missing panel data for expected cells: " + ", ".join(missing)
        )


def load_run_json(spec: PanelSpec) -> dict:
    payload = json.loads(spec.json_path.read_text())
    cell = payload["cell"]
    for key, want in (("p_init", spec.p_init), ("q_shrink", spec.q_shrink), ("q_flip", spec.q_flip)):
        if cell.get(key) != want:
            raise PanelDataError(
                f"{spec.json_path}: cell {key}={cell.get(key)!r} does not match expected {want!r}"
            )
    return payload


def load_trajectories(csv_path: Path) -> dict[int, tuple[list[int], list[float]]]:
    """agent id -> (sample times, states), in file order."""
    series: dict[int, tuple[list[int], list[float]]] = {}
    with csv_path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["t", "agent", "state"]:
            raise PanelDataError(f"{csv_path}: unexpected header {reader.fieldnames}")
        for row in reader:
            ts, xs = series.setdefault(int(row["agent"]), ([], []))
            ts.append(int(row["t"]))
            xs.append(float(row["state"]))
    if not series:
        raise PanelDataError(f"{csv_path}: no samples")
    return series


def subtitle_for(t_stop) -> str:
    return f"t_stop = {t_stop}" if t_stop is not None else "no stopping time"


def _draw_panel(ax, spec: PanelSpec, series, t_stop, x_max: float) -> str:
    for agent in sorted(series):
        ts, xs = series[agent]
        ax.plot(ts, xs, linewidth=0.5, alpha=0.7)
    subtitle = subtitle_for(t_stop)
    ax.set_title(
        f"p={spec.p_init:g}, q_shrink={spec.q_shrink:g}, q_flip={spec.q_flip:g}\n{subtitle}",
        fontsize=9,
    )
    ax.set_xlim(0.0, x_max)
    ax.set_ylim(*Y_LIMITS)
    ax.set_xlabel("t", fontsize=8)
    ax.set_ylabel("state", fontsize=8)
    ax.tick_params(labelsize=7)
    return subtitle


def render_figures(data_dir, out_dir) -> list[PanelResult]:
    """Render all panels plus the two composite grids; returns panel metadata."""
    data_dir, out_dir = Path(data_dir), Path(out_dir)
    specs = expected_panels(data_dir)
    check_inputs(specs)
    out_dir.mkdir(parents=True, exist_ok=True)

    loaded = []
    for spec in specs:
        payload = load_run_json(spec)
        series = load_trajectories(spec.csv_path)
        loaded.append((spec, series, payload["t_stop"]))

    # x-axis shared within a part so panels compare directly
    x_max = {
        part: max(
            max(ts[-1] for ts, _ in series.values())
            for spec, series, _ in loaded
            if spec.part == part
        )
        for part in ("part1", "part2")
    }

    results = []
    for spec, series, t_stop in loaded:
        fig, ax = plt.subplots(figsize=(4.2, 3.2))
        subtitle = _draw_panel(ax, spec, series, t_stop, x_max[spec.part])
        fig.tight_layout()
        image_path = out_dir / f"panel_{spec.part}_{spec.slug}.png"
        fig.savefig(image_path, dpi=130)
        plt.close(fig)
        results.append(
            PanelResult(
                part=spec.part, slug=spec.slug, t_stop=t_stop,
                subtitle=subtitle, image_path=image_path,
            )
        )

    for part, rows in (("part1", PART1_ROWS), ("part2", PART2_ROWS)):
        fig, axes = plt.subplots(len(rows), len(COLUMN_DENSITIES), figsize=(9.0, 10.5))
        for spec, series, t_stop in loaded:
            if spec.part == part:
                _draw_panel(axes[spec.row][spec.col], spec, series, t_stop, x_max[part])
        fig.suptitle(f"Consensus trajectories ({part}): rows = mutation setting, columns = density")
        fig.tight_layout(rect=(0, 0, 1, 0.97))
        fig.savefig(out_dir / f"figure_{part}.png", dpi=130)
        plt.close(fig)

    return results


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="asyncavg-figures", description="Render trajectory figure grids from simulation data"
    )
    parser.add_argument("--data-dir", required=True, help="directory produced by figures-data")
    parser.add_argument("--out-dir", required=True, help="where to write the PNG files")
    args = parser.parse_args(argv)
    try:
        results = render_figures(args.data_dir, args.out_dir)
    except PanelDataError as err:
        print(f"asyncavg-figures: {err}", file=sys.stderr)
        return 1
    for r in results:
        print(f"{r.part}/{r.slug}: {r.subtitle} -> {r.image_path}")
    print(f"wrote {len(results)} panels and 2 composites to {args.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
