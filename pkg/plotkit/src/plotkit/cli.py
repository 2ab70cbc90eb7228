"""Command line entry point: render one figure kind from a metrics CSV."""

from __future__ import annotations

import os

import click

from .figures import CurveSpec, plot_composability, plot_satisfaction


def _specs(csv_path, out, tasks, averaged):
    """One spec per requested grouping.  With several tasks the output path
    gains a per-task suffix."""
    if averaged or not tasks:
        return [CurveSpec(csv_path=csv_path, out_path=out, task=None)]
    if len(tasks) == 1:
        return [CurveSpec(csv_path=csv_path, out_path=out, task=tasks[0])]
    root, ext = os.path.splitext(out)
    return [CurveSpec(csv_path=csv_path, out_path=f"{root}-{t}{ext}", task=t)
            for t in tasks]


@click.group()
def main():
    """Render experiment metrics CSV files as learning-curve figures."""


@main.command()
@click.option("--csv", "csv_path", required=True,
              type=click.Path(exists=True), help="Metrics CSV path.")
@click.option("--out", required=True, type=click.Path(),
              help="Output image path.")
@click.option("--task", "tasks", multiple=True,
              help="Restrict to a task; repeat for one file per task.")
@click.option("--averaged", is_flag=True,
              help="Average over all tasks (the default grouping).")
def satisfaction(csv_path, out, tasks, averaged):
    """Learning curves: mean normalized return vs training steps."""
    for spec in _specs(csv_path, out, tasks, averaged):
        click.echo(plot_satisfaction(spec))


@main.command()
@click.option("--csv", "csv_path", required=True,
              type=click.Path(exists=True), help="Metrics CSV path.")
@click.option("--out", required=True, type=click.Path(),
              help="Output image path.")
@click.option("--task", "tasks", multiple=True,
              help="Restrict to a task; repeat for one file per task.")
@click.option("--averaged", is_flag=True,
              help="Average over all tasks (the default grouping).")
def composability(csv_path, out, tasks, averaged):
    """Retraining curves: mean normalized return vs retraining steps."""
    for spec in _specs(csv_path, out, tasks, averaged):
        click.echo(plot_composability(spec))


if __name__ == "__main__":
    main()
