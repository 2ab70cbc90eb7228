"""Learning-curve figures from metrics CSV files.

The input schema is the harness metrics table: one row per evaluation point
with columns method, task, seed, steps, mean_return, std_return,
satisfaction.  Rendering touches nothing but that schema, so any producer
emitting it can be plotted.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

REQUIRED_COLUMNS = ("method", "task", "seed", "steps",
                    "mean_return", "std_return", "satisfaction")

SATISFACTION_METHODS = ("lof-vi", "lof-ql", "greedy", "flat", "qrm")
COMPOSABILITY_METHODS = ("lof-vi", "lof-ql", "greedy")

# one fixed color per method so series stay recognizable across figures
METHOD_STYLE = {
    "lof-vi": ("#1f77b4", "LOF-VI"),
    "lof-ql": ("#ff7f0e", "LOF-QL"),
    "greedy": ("#2ca02c", "Greedy"),
    "flat": ("#d62728", "Flat options"),
    "qrm": ("#9467bd", "QRM"),
}


class SchemaError(ValueError):
    """The CSV is empty or missing required columns."""


@dataclass(frozen=True)
class CurveSpec:
    """What to render: input table, grouping, series, and output path.

    ``task=None`` averages over every task in the table; a task name
    restricts the figure to that task's rows.  ``methods=None`` keeps the
    table's method order for whichever methods are present.
    """

    csv_path: str
    out_path: str
    task: str | None = None
    methods: tuple | None = None
    xlabel: str = "training steps"
    ylabel: str = "mean normalized return"
    title: str | None = None


def read_rows(path) -> list:
    """Parse a metrics CSV, checking the schema before anything else."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or ()
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise SchemaError(f"missing columns: {', '.join(missing)}")
        rows = []
        for row in reader:
            rows.append({
                "method": row["method"],
                "task": row["task"],
                "seed": int(row["seed"]),
                "steps": int(row["steps"]),
                "mean_return": float(row["mean_return"]),
                "std_return": float(row["std_return"]),
                "satisfaction": float(row["satisfaction"]),
            })
    if not rows:
        raise SchemaError("no data rows")
    return rows


def _select(rows: list, spec: CurveSpec) -> list:
    if spec.task is not None:
        tasks = {r["task"] for r in rows}
        if spec.task not in tasks:
            raise SchemaError(f"task {spec.task!r} not in CSV "
                              f"(has: {', '.join(sorted(tasks))})")
        rows = [r for r in rows if r["task"] == spec.task]
    if spec.methods is not None:
        present = {r["method"] for r in rows}
        unknown = [m for m in spec.methods if m not in present]
        if unknown:
            raise SchemaError(f"methods not in CSV: {', '.join(unknown)}")
        rows = [r for r in rows if r["method"] in spec.methods]
    return rows


def _series(rows: list, spec: CurveSpec) -> dict:
    """Per-method curves: sorted x, mean y over seeds and tasks, and a band
    equal to the mean per-point standard deviation."""
    order = spec.methods
    if order is None:
        seen = []
        for r in rows:
            if r["method"] not in seen:
                seen.append(r["method"])
        order = tuple(seen)
    out = {}
    for method in order:
        by_x = defaultdict(lambda: ([], []))
        for r in rows:
            if r["method"] != method:
                continue
            ys, bands = by_x[r["steps"]]
            ys.append(r["mean_return"])
            bands.append(r["std_return"])
        xs = sorted(by_x)
        y = [sum(by_x[x][0]) / len(by_x[x][0]) for x in xs]
        band = [sum(by_x[x][1]) / len(by_x[x][1]) for x in xs]
        out[method] = (xs, y, band)
    return out


def _render(series: dict, spec: CurveSpec) -> str:
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=120)
    x_max = max((xs[-1] for xs, _, _ in series.values() if xs), default=1)
    for method, (xs, y, band) in series.items():
        color, label = METHOD_STYLE.get(method, ("#7f7f7f", method))
        if len(xs) == 1:
            # a single evaluation point (e.g. a method that never retrains)
            # reads as a horizontal reference line across the axis
            ax.axhline(y[0], color=color, label=label, linewidth=1.8)
            ax.fill_between([0, x_max], [y[0] - band[0]] * 2,
                            [y[0] + band[0]] * 2, color=color, alpha=0.2,
                            linewidth=0)
        else:
            ax.plot(xs, y, color=color, label=label, linewidth=1.8)
            ax.fill_between(xs, [a - b for a, b in zip(y, band)],
                            [a + b for a, b in zip(y, band)],
                            color=color, alpha=0.2, linewidth=0)
    ax.set_xlabel(spec.xlabel)
    ax.set_ylabel(spec.ylabel)
    if spec.title:
        ax.set_title(spec.title)
    ax.legend(loc="lower right", fontsize=9)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    # fixed metadata keeps repeated renders byte-identical
    fig.savefig(spec.out_path, metadata={"Software": "plotkit"})
    plt.close(fig)
    return spec.out_path


def plot_satisfaction(spec: CurveSpec) -> str:
    """One line per method, x = training steps, y = mean normalized return,
    shaded by the mean per-point standard deviation."""
    rows = _select(read_rows(spec.csv_path), spec)
    return _render(_series(rows, spec), spec)


def plot_composability(spec: CurveSpec) -> str:
    """Meta-policy retraining curves; x counts retraining units."""
    if spec.xlabel == CurveSpec.__dataclass_fields__["xlabel"].default:
        spec = CurveSpec(csv_path=spec.csv_path, out_path=spec.out_path,
                         task=spec.task, methods=spec.methods,
                         xlabel="retraining steps", ylabel=spec.ylabel,
                         title=spec.title)
    rows = _select(read_rows(spec.csv_path), spec)
    return _render(_series(rows, spec), spec)
