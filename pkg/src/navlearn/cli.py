"""Command-line interface to the workbench.

Every failure exits nonzero with a one-line machine-parsable reason on
stderr of the form `error: <slug>: <detail>`.
"""

from __future__ import annotations

import functools
import os
import sys
from pathlib import Path

import click

from .envfile import load_environment, save_environment
from .errors import NavlearnError, ValidationError
from .grids import build_stack, schema_by_name
from .learning import TrainBudget, load_model, reward_map, save_model, train
from .metrics import format_table, results_to_csv, summarize
from .planning import plan_baseline, plan_ioc, save_trajectory
from .scenarios import (generate_environment, load_report_rows, load_scenario,
                        oracle_demonstrate, run_trials, save_report)
from .workspace import demonstration_from_json, demonstration_to_json

SCHEMA_CHOICES = ("standard", "edge", "covert", "zod")


def _fail(slug: str, message: str) -> None:
    click.echo(f"error: {slug}: {message}", err=True)
    sys.exit(1)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except NavlearnError as e:
            _fail(e.slug, e.message)
        except FileNotFoundError as e:
            _fail("not-found", str(e))

    return wrapper


def _parse_point(text: str) -> tuple[float, float]:
    try:
        x, y = text.split(",")
        return (float(x), float(y))
    except ValueError:
        raise ValidationError(f"expected a point as 'x,y' meters, got {text!r}")


@click.group()
def main():
    """Learn traversal rewards from demonstrations and plan with them."""


@main.command("gen-env")
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@handle_errors
def gen_env(spec_path, out_path):
    """Rasterize a scenario spec into an environment file."""
    spec = load_scenario(spec_path)
    env = generate_environment(spec, env_id=Path(out_path).stem)
    save_environment(env, out_path)
    click.echo(f"wrote {out_path} ({env.geometry.width}x{env.geometry.height} cells)")


@main.command("demo")
@click.option("--env", "env_path", required=True, type=click.Path(exists=True))
@click.option("--oracle", "behavior", required=True,
              type=click.Choice(["edge-of-road", "covert", "zod-avoidance"]))
@click.option("--from", "start", required=True, help="start point 'x,y' in meters")
@click.option("--to", "goal", required=True, help="goal point 'x,y' in meters")
@click.option("--schema", "schema_name", default="standard",
              type=click.Choice(SCHEMA_CHOICES))
@click.option("--out", "out_path", required=True, type=click.Path())
@handle_errors
def demo(env_path, behavior, start, goal, schema_name, out_path):
    """Record a scripted oracle demonstration into a demo file."""
    env = load_environment(env_path)
    schema = schema_by_name(schema_name)
    d = oracle_demonstrate(env, behavior, _parse_point(start), _parse_point(goal),
                           schema, demo_id=Path(out_path).stem)
    Path(out_path).write_text(demonstration_to_json(d))
    click.echo(f"wrote {out_path} ({len(d.path)} cells)")


@main.command("train")
@click.option("--demos", "demo_paths", required=True, multiple=True,
              type=click.Path(exists=True))
@click.option("--schema", "schema_name", default="standard",
              type=click.Choice(SCHEMA_CHOICES))
@click.option("--init", "init_spec", default="random",
              help="'random' or 'warm:<model file>'")
@click.option("--budget-s", type=float, default=None, help="wall-clock budget")
@click.option("--max-iterations", type=int, default=500)
@click.option("--tolerance", type=float, default=1e-4)
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_path", required=True, type=click.Path())
@handle_errors
def train_cmd(demo_paths, schema_name, init_spec, budget_s, max_iterations,
              tolerance, seed, out_path):
    """Fit reward weights to one or more demonstration files."""
    demos = [demonstration_from_json(Path(p).read_text()) for p in demo_paths]
    schema = schema_by_name(schema_name)
    if init_spec == "random":
        init = "random"
    elif init_spec.startswith("warm:"):
        init = load_model(init_spec.split(":", 1)[1]).theta
    else:
        raise ValidationError(f"init must be 'random' or 'warm:<model>', got {init_spec!r}")
    budget = TrainBudget(max_iterations=max_iterations, wall_clock_s=budget_s,
                         tolerance=tolerance)
    model = train(demos, schema, init=init, budget=budget, seed=seed)
    save_model(model, out_path)
    meta = model.meta
    click.echo(f"wrote {out_path} (iterations={meta.iterations} "
               f"stop={meta.stop_reason} grad={meta.final_grad_norm:.3e} "
               f"wall={meta.wall_clock_s:.1f}s)")


@main.command("plan")
@click.option("--env", "env_path", required=True, type=click.Path(exists=True))
@click.option("--model", "model_path", default=None, type=click.Path(exists=True))
@click.option("--from", "start", required=True, help="start point 'x,y' in meters")
@click.option("--to", "goal", required=True, help="goal point 'x,y' in meters")
@click.option("--baseline", is_flag=True, default=False)
@click.option("--out", "out_path", default=None, type=click.Path())
@handle_errors
def plan(env_path, model_path, start, goal, baseline, out_path):
    """Plan a trajectory with the IOC planner or the obstacle-only baseline."""
    env = load_environment(env_path)
    start_cell = env.geometry.cell_of(_parse_point(start))
    goal_cell = env.geometry.cell_of(_parse_point(goal))
    if baseline:
        traj = plan_baseline(env.opacity, start_cell, goal_cell)
    else:
        if model_path is None:
            raise ValidationError("--model is required unless --baseline is set")
        model = load_model(model_path)
        stack = build_stack(env.layers.values(), model.schema)
        traj = plan_ioc(reward_map(model, stack), start_cell, goal_cell,
                        impassable=env.obstacle_mask())
    if out_path:
        save_trajectory(traj, out_path)
        click.echo(f"wrote {out_path} ({len(traj)} points, {traj.length:.1f} m)")
    else:
        click.echo(f"{traj.provenance} plan: {len(traj)} points, {traj.length:.1f} m")


@main.command("trial")
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@handle_errors
def trial(spec_path, model_path, out_dir):
    """Run the alternating trial protocol and write a report directory."""
    spec = load_scenario(spec_path)
    model = load_model(model_path)
    report = run_trials(spec, model)
    save_report(report, out_dir)
    n = sum(len(t.legs) for s in report.sites for t in s.trials)
    click.echo(f"wrote {out_dir} ({len(report.sites)} sites, {n} legs)")


@main.command("eval")
@click.option("--report", "report_dirs", required=True, multiple=True,
              type=click.Path(exists=True))
@click.option("--csv", "csv_path", default=None, type=click.Path())
@handle_errors
def eval_cmd(report_dirs, csv_path):
    """Summarize trial reports into the mean/median/best table."""
    rows = []
    for d in report_dirs:
        rows.extend(load_report_rows(d))
    results = summarize(rows)
    click.echo(format_table(results), nl=False)
    if csv_path:
        Path(csv_path).write_text(results_to_csv(results))
        click.echo(f"wrote {csv_path}")


@main.command("serve")
@click.option("--workspace", "workspace_root", default=None, type=click.Path())
@click.option("--port", type=int, default=8765)
@click.option("--host", default="127.0.0.1")
@handle_errors
def serve_cmd(workspace_root, port, host):
    """Run the HTTP service for the operator console."""
    root = workspace_root or os.environ.get("NAVLEARN_WORKSPACE")
    if not root:
        raise ValidationError(
            "provide --workspace or set NAVLEARN_WORKSPACE")
    from .server import serve

    click.echo(f"serving workspace {root} on {host}:{port}")
    serve(root, port=port, host=host)


@main.command("demo-import")
@click.option("--env", "env_path", required=True, type=click.Path(exists=True))
@click.option("--trajectory", "traj_path", required=True, type=click.Path(exists=True))
@click.option("--schema", "schema_name", default="standard",
              type=click.Choice(SCHEMA_CHOICES))
@click.option("--out", "out_path", required=True, type=click.Path())
@handle_errors
def demo_import(env_path, traj_path, schema_name, out_path):
    """Convert a recorded trajectory file into a demonstration."""
    from .learning import Demonstration
    from .planning import load_trajectory
    from .workspace import snap_polyline_to_cells

    env = load_environment(env_path)
    traj = load_trajectory(traj_path, "oracle")
    cells = snap_polyline_to_cells(env.geometry, [tuple(p) for p in traj.points])
    stack = build_stack(env.layers.values(), schema_by_name(schema_name))
    d = Demonstration(id=Path(out_path).stem, path=tuple(cells), stack=stack,
                      source="file")
    Path(out_path).write_text(demonstration_to_json(d))
    click.echo(f"wrote {out_path} ({len(cells)} cells)")


if __name__ == "__main__":
    main()
