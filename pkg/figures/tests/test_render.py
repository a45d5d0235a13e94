"""Golden tests for the figure renderer: panel count and subtitle content."""

import json
import subprocess
import sys

import pytest

from asyncavg_figures.render import (
    PanelDataError,
    expected_panels,
    render_figures,
    subtitle_for,
)


def write_panel(dir_path, p, qs, qf, t_stop, n_agents=3, samples=(0, 10, 20)):
    dir_path.mkdir(parents=True)
    rows = ["t,agent,state"]
    for k, t in enumerate(samples):
        for a in range(n_agents):
            rows.append(f"{t},{a},{0.1 * a + 0.01 * k:.17g}")
    (dir_path / "trajectory.csv").write_text("\n".join(rows) + "\n")
    payload = {
        "cell": {
            "n": n_agents, "p_init": p, "q_shrink": qs, "q_flip": qf,
            "tolerance": 1e-3, "horizon": 100,
        },
        "seed": 1,
        "t_stop": t_stop,
        "drop_violation_count": 0,
        "z_series": [[0, 1.0]],
        "diameter_series": [[0, 0.5]],
    }
    (dir_path / "run.json").write_text(json.dumps(payload))


@pytest.fixture
def synthetic_data(tmp_path):
    data = tmp_path / "data"
    stops = {}
    for spec in expected_panels(data):
        # give half the panels a stopping time, half none
        t_stop = 137 if spec.col == 1 else None
        stops[(spec.part, spec.slug)] = t_stop
        write_panel(spec.csv_path.parent, spec.p_init, spec.q_shrink, spec.q_flip, t_stop)
    return data, stops


def test_renders_twelve_panels_and_two_composites(synthetic_data, tmp_path):
    data, stops = synthetic_data
    out = tmp_path / "figs"
    results = render_figures(data, out)
    assert len(results) == 12
    assert sorted(p.name for p in out.glob("figure_*.png")) == [
        "figure_part1.png", "figure_part2.png",
    ]
    assert len(list(out.glob("panel_*.png"))) == 12
    for r in results:
        assert r.image_path.exists()
        expected = stops[(r.part, r.slug)]
        assert r.subtitle == subtitle_for(expected)
        if expected is None:
            assert r.subtitle == "no stopping time"
        else:
            assert r.subtitle == f"t_stop = {expected}"


def test_grid_structure_matches_reference_layout(synthetic_data, tmp_path):
    data, _ = synthetic_data
    results = render_figures(data, tmp_path / "figs")
    part1 = [r.slug for r in results if r.part == "part1"]
    assert part1 == [
        "p0.05_qs0.001_qf1e-06", "p0.1_qs0.001_qf1e-06",
        "p0.05_qs0.002_qf1e-06", "p0.1_qs0.002_qf1e-06",
        "p0.05_qs0.003_qf1e-06", "p0.1_qs0.003_qf1e-06",
    ]
    part2 = [r.slug for r in results if r.part == "part2"]
    assert part2 == [
        "p0.05_qs0.001_qf1e-06", "p0.1_qs0.001_qf1e-06",
        "p0.05_qs0.001_qf2e-06", "p0.1_qs0.001_qf2e-06",
        "p0.05_qs0.001_qf3e-06", "p0.1_qs0.001_qf3e-06",
    ]


def test_empty_data_dir_lists_expected_cells(tmp_path):
    with pytest.raises(PanelDataError) as err:
        render_figures(tmp_path / "empty", tmp_path / "figs")
    message = str(err.value)
    assert "part1/p0.05_qs0.001_qf1e-06" in message
    assert "part2/p0.1_qs0.001_qf3e-06" in message


def test_mismatched_cell_params_rejected(synthetic_data, tmp_path):
    data, _ = synthetic_data
    victim = data / "part1" / "p0.05_qs0.001_qf1e-06" / "run.json"
    payload = json.loads(victim.read_text())
    payload["cell"]["q_shrink"] = 0.5
    victim.write_text(json.dumps(payload))
    with pytest.raises(PanelDataError, match="q_shrink"):
        render_figures(data, tmp_path / "figs")


def test_cli_exit_codes(synthetic_data, tmp_path, capsys):
    from asyncavg_figures.render import main

    data, _ = synthetic_data
    assert main(["--data-dir", str(data), "--out-dir", str(tmp_path / "figs")]) == 0
    out = capsys.readouterr().out
    assert "wrote 12 panels" in out
    assert main(["--data-dir", str(tmp_path / "void"), "--out-dir", str(tmp_path / "f2")]) == 1


@pytest.mark.slow
def test_end_to_end_with_simulator(tmp_path):
    # secondary acceptance: figures-data (via the public CLI) + renderer;
    # short horizon keeps the smoke run fast, grid structure is unchanged
    data = tmp_path / "data"
    proc = subprocess.run(
        [sys.executable, "-m", "asyncavg.cli", "figures-data", "--out", str(data),
         "--seed", "5", "--set", "horizon=80", "--set", "sample_stride=20"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    results = render_figures(data, tmp_path / "figs")
    assert len(results) == 12
    print("ACCEPTANCE figure-reproduction: PASS")
