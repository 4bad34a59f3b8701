"""Benchmark harness: reproduce the iteration-count tables, the 2-D angle
example, the nonlinear-system comparisons, and the oracle suites.

Output is deterministic for a fixed experiment and seed: wall time is reported
on stderr only, never in the emitted table, so reruns are byte-identical.

Exit codes: 0 success, 1 convergence failure, 2 oracle violation,
3 usage error.
"""

import csv
import io
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import click
import numpy as np

from . import lab
from .problems import (
    circle_cosine_system,
    modified_rosenbrock_10,
    motivating_quadratic_2d,
    quadratic_weighted_50,
)
from .solvers import (
    BGM,
    Broyden,
    GeneralizedPSB,
    GradNorm,
    ImageTransform,
    IterateError,
    NormalEqWindow,
    ResidualNorm,
    SolverConfig,
    minimize,
    minimize_lbfgs,
    solve_system,
)

LAMBDAS = (50.0, 100.0, 200.0, 500.0, 1000.0, 5000.0)
EXPERIMENTS = ("table2", "table3", "example1", "systems", "lab")


@dataclass
class ResultRow:
    method: str
    params: dict
    iterations: int
    status: str
    fallbacks: int
    wall_time: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iteration count must be nonnegative")


# ---------------------------------------------------------------------------
# method labels <-> solver configs

_LABEL_RE = re.compile(r"^(?:(Im|IP)-)?(DFP|BFGS|PSB|LBFGS|BGM|Newton)(?:\(([^)]*)\))?$")


def parse_method_label(label):
    """Decode a method label like ``IP-LBFGS(N=3,d=2)`` into its parts."""
    m = _LABEL_RE.match(label)
    if m is None:
        raise ValueError(f"unrecognized method label {label!r}")
    prefix, base, args = m.groups()
    parts = {"base": base, "mode": {None: None, "Im": "im", "IP": "ip"}[prefix]}
    if args:
        for item in args.split(","):
            key, _, value = item.partition("=")
            parts[key.strip()] = int(value)
    if parts["mode"] == "ip" and "d" not in parts:
        raise ValueError(f"projection label {label!r} is missing d")
    return parts


def method_label(base, mode=None, n=None, d=None):
    args = []
    if n is not None:
        args.append(f"N={n}")
    if mode == "ip":
        args.append(f"d={d}")
    tag = {None: "", "im": "Im-", "ip": "IP-"}[mode]
    return f"{tag}{base}" + (f"({','.join(args)})" if args else "")


def config_for_label(label, lam):
    """Label + lambda -> (driver kind, SolverConfig); the inverse of
    method_label over the experiment grids."""
    parts = parse_method_label(label)
    base, mode = parts["base"], parts["mode"]
    mode_obj = {None: None, "im": ImageTransform(), "ip": None}[mode]
    if mode == "ip":
        mode_obj = NormalEqWindow(parts["d"])
    kwargs = dict(stop=IterateError(1e-7), b0=lam)
    if mode_obj is not None:
        kwargs["mode"] = mode_obj
    if base == "LBFGS":
        return "lbfgs", SolverConfig(rule=None, memory=parts["N"], max_iters=60000, **kwargs)
    rule = {"DFP": Broyden(1.0), "BFGS": Broyden(0.0), "PSB": GeneralizedPSB()}[base]
    return "dense", SolverConfig(rule=rule, max_iters=200000, **kwargs)


def table2_labels(lambdas=None, n_list=(3, 10), d_list=(1, 2)):
    labels = []
    for base in ("DFP", "BFGS", "PSB"):
        labels.append(method_label(base))
        labels.append(method_label(base, "im"))
        labels.extend(method_label(base, "ip", d=d) for d in d_list)
    for n in n_list:
        labels.append(method_label("LBFGS", n=n))
        labels.append(method_label("LBFGS", "im", n=n))
        labels.extend(method_label("LBFGS", "ip", n=n, d=d) for d in d_list if d <= n - 1)
    return labels


def table3_labels(n_list=(3, 4, 5), d_list=None):
    labels = []
    for n in n_list:
        labels.append(method_label("LBFGS", n=n))
        for d in range(1, n):
            if d_list is None or d in d_list:
                labels.append(method_label("LBFGS", "ip", n=n, d=d))
    return labels


SYSTEM_PROBLEMS = ("circle-cosine", "rosenbrock-10")
SYSTEM_LABELS = ("Newton", "BGM", "IP-BGM(d=1)")


# ---------------------------------------------------------------------------
# experiment cells (top level so the process pool can pickle them)


def _bench_cell(args):
    label, lam = args
    problem = quadratic_weighted_50()
    kind, config = config_for_label(label, lam)
    start = time.perf_counter()
    if kind == "lbfgs":
        trace = minimize_lbfgs(problem, config)
    else:
        trace = minimize(problem, config)
    wall = time.perf_counter() - start
    return ResultRow(label, {"lambda": lam}, trace.iterations, trace.status,
                     trace.fallbacks, wall)


def _system_cell(args):
    label, problem_name = args
    system = circle_cosine_system() if problem_name == "circle-cosine" else modified_rosenbrock_10()
    parts = parse_method_label(label)
    if parts["base"] == "Newton":
        rule, mode = None, None
    else:
        rule = BGM()
        mode = NormalEqWindow(parts["d"]) if parts["mode"] == "ip" else None
    kwargs = {} if mode is None else {"mode": mode}
    config = SolverConfig(rule=rule, stop=ResidualNorm(1e-7), b0=1.0,
                          max_iters=200000, **kwargs)
    start = time.perf_counter()
    trace = solve_system(system, config)
    wall = time.perf_counter() - start
    return ResultRow(label, {"problem": problem_name}, trace.iterations,
                     trace.status, trace.fallbacks, wall)


def run_example1():
    """The 2-D motivating runs; returns (summary rows, angle rows)."""
    problem, setup = motivating_quadratic_2d()
    rows, angle_rows = [], []
    for label, theta in (("DFP", 1.0), ("BFGS", 0.0)):
        config = SolverConfig(
            rule=Broyden(theta), stop=GradNorm(setup["grad_rtol"]),
            b0=setup["b0"], max_iters=60000, record_angles=True,
        )
        start = time.perf_counter()
        trace = minimize(problem, config)
        wall = time.perf_counter() - start
        angles = trace.angles
        row = ResultRow(label, {"lambda": None}, trace.iterations, trace.status,
                        trace.fallbacks, wall)
        row.mean_angle = float(np.mean(angles))
        rows.append(row)
        if label == "BFGS":
            angle_rows = [(k, a) for k, a in enumerate(angles)]
    return rows, angle_rows


# ---------------------------------------------------------------------------
# table emission


def _fmt_lambda(lam):
    return str(int(lam)) if float(lam) == int(lam) else str(lam)


def emit_table(headers, rows, fmt):
    """Render string cells as csv or a markdown pipe table.

    csv cells are minimally quoted, so method labels that contain commas
    (IP-LBFGS(N=4,d=3)) survive a parse_table round trip.
    """
    if not rows:
        raise ValueError("refusing to emit an empty table")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(headers)
        writer.writerows(rows)
        return buf.getvalue()
    if fmt == "markdown":
        lines = ["| " + " | ".join(headers) + " |",
                 "|" + "|".join(" --- " for _ in headers) + "|"]
        lines += ["| " + " | ".join(r) + " |" for r in rows]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def parse_table(text):
    """Inverse of emit_table for csv: returns (headers, rows)."""
    cells = [row for row in csv.reader(io.StringIO(text)) if row]
    return cells[0], cells[1:]


def _grid_cells(rows, lambdas):
    headers = ["method", "lambda", "iterations", "status", "fallbacks"]
    out = [[r.method, _fmt_lambda(r.params["lambda"]), str(r.iterations),
            r.status, str(r.fallbacks)] for r in rows]
    return headers, out


def _grid_markdown(rows, lambdas):
    # report-style pivot: one row per method, one column per lambda
    headers = ["Method"] + [_fmt_lambda(lam) for lam in lambdas]
    by_method = {}
    order = []
    for r in rows:
        if r.method not in by_method:
            by_method[r.method] = {}
            order.append(r.method)
        cell = str(r.iterations) if r.status == "converged" else r.status
        by_method[r.method][r.params["lambda"]] = cell
    out = [[m] + [by_method[m].get(lam, "") for lam in lambdas] for m in order]
    return headers, out


def _systems_cells(rows):
    headers = ["method", "problem", "iterations", "status", "fallbacks"]
    out = [[r.method, r.params["problem"], str(r.iterations), r.status,
            str(r.fallbacks)] for r in rows]
    return headers, out


def _systems_markdown(rows):
    headers = ["Method"] + list(SYSTEM_PROBLEMS)
    by_method = {}
    order = []
    for r in rows:
        if r.method not in by_method:
            by_method[r.method] = {}
            order.append(r.method)
        cell = str(r.iterations) if r.status == "converged" else r.status
        by_method[r.method][r.params["problem"]] = cell
    out = [[m] + [by_method[m].get(p, "") for p in SYSTEM_PROBLEMS] for m in order]
    return headers, out


def _lab_cells(rows):
    headers = ["suite", "trials", "violations", "max_residual", "skipped", "note"]
    out = [[r.name, str(r.trials), str(r.violations), f"{r.max_residual:.3e}",
            str(r.skipped), r.note] for r in rows]
    return headers, out


# ---------------------------------------------------------------------------
# the command line


def _parse_list(text, conv):
    return [conv(item) for item in text.split(",") if item.strip()]


def _read_config_file(path):
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise click.UsageError(f"malformed config line: {line!r}")
            values[key.strip()] = value.strip()
    return values


def _apply_config_file(ctx, values):
    mapping = {
        "experiment": "experiment", "methods": "methods", "lambdas": "lambdas",
        "d": "d", "N": "n", "seed": "seed", "format": "fmt", "out": "out",
        "workers": "workers", "trials": "trials",
    }
    for key, value in values.items():
        if key not in mapping:
            raise click.UsageError(f"unknown config key {key!r}")
        param = mapping[key]
        if param not in ctx.params:
            continue
        source = ctx.get_parameter_source(param)
        if source is not None and source.name == "COMMANDLINE":
            continue  # explicit flags win
        if param in ("seed", "workers", "trials"):
            ctx.params[param] = int(value)
        else:
            ctx.params[param] = value


def _split_labels(text):
    # label arguments contain commas inside parentheses (IP-LBFGS(N=4,d=3)),
    # so the list separator is only a comma at parenthesis depth zero
    items = []
    buf = []
    depth = 0
    for ch in text:
        if ch == "," and depth == 0:
            items.append("".join(buf))
            buf = []
            continue
        depth += ch == "("
        depth -= ch == ")"
        buf.append(ch)
    items.append("".join(buf))
    return [item.strip() for item in items if item.strip()]


def _filter_methods(labels, methods):
    if not methods:
        return labels
    wanted = [m.lower() for m in _split_labels(methods)]
    picked = []
    for label in labels:
        low = label.lower()
        if any(low == w or low.startswith(w + "(") for w in wanted):
            picked.append(label)
    if not picked:
        raise click.UsageError(f"no methods match {methods!r}")
    return picked


def _run_pool(cells, worker, workers):
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(worker, cells))  # map preserves order
    return [worker(c) for c in cells]


@click.group()
def cli():
    """Quasi-Newton operator benchmarks and verification suites."""


@cli.command()
@click.option("--experiment", type=click.Choice(EXPERIMENTS), default=None)
@click.option("--methods", default=None, help="comma-separated method labels")
@click.option("--lambdas", default=None, help="comma-separated B0 scales")
@click.option("--d", default=None, help="comma-separated window sizes")
@click.option("--n", "--N", "n", default=None, help="comma-separated memory sizes")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "markdown"]), default="csv",
              show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None,
              help="output path (default: stdout)")
@click.option("--workers", type=int, default=None,
              help="worker processes (default: hardware threads)")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="key=value file; flags override it")
@click.pass_context
def run(ctx, experiment, methods, lambdas, d, n, seed, fmt, out, workers, config_path):
    """Run one experiment and emit its result table."""
    if config_path:
        _apply_config_file(ctx, _read_config_file(config_path))
        experiment, methods, lambdas, d, n = (
            ctx.params["experiment"], ctx.params["methods"], ctx.params["lambdas"],
            ctx.params["d"], ctx.params["n"],
        )
        seed, fmt, out, workers = (
            ctx.params["seed"], ctx.params["fmt"], ctx.params["out"],
            ctx.params["workers"],
        )
    if experiment is None:
        raise click.UsageError("--experiment is required (flag or config file)")
    if workers is None:
        workers = os.cpu_count() or 1
    lam_list = _parse_list(lambdas, float) if lambdas else list(LAMBDAS)
    d_list = _parse_list(d, int) if d else None
    n_list = _parse_list(n, int) if n else None

    start = time.perf_counter()
    exit_code = 0
    if experiment in ("table2", "table3"):
        if experiment == "table2":
            labels = table2_labels(n_list=n_list or (3, 10), d_list=d_list or (1, 2))
        else:
            labels = table3_labels(n_list=n_list or (3, 4, 5), d_list=d_list)
        labels = _filter_methods(labels, methods)
        cells = [(label, lam) for label in labels for lam in lam_list]
        rows = _run_pool(cells, _bench_cell, workers)
        if any(r.status != "converged" for r in rows):
            exit_code = 1
        headers, body = (_grid_markdown(rows, lam_list) if fmt == "markdown"
                         else _grid_cells(rows, lam_list))
    elif experiment == "systems":
        labels = _filter_methods(list(SYSTEM_LABELS), methods)
        cells = [(label, prob) for prob in SYSTEM_PROBLEMS for label in labels]
        rows = _run_pool(cells, _system_cell, workers)
        if any(r.status != "converged" for r in rows):
            exit_code = 1
        headers, body = (_systems_markdown(rows) if fmt == "markdown"
                         else _systems_cells(rows))
    elif experiment == "example1":
        rows, angle_rows = run_example1()
        if any(r.status != "converged" for r in rows):
            exit_code = 1
        for r in rows:
            click.echo(
                f"{r.method}: {r.iterations} iterations, mean angle "
                f"{r.mean_angle:.4f} deg ({r.status})",
                err=True,
            )
        headers = ["iteration", "angle_deg"]
        body = [[str(k), f"{a:.4f}"] for k, a in angle_rows]
    else:  # lab
        suite_rows = lab.verify_all(seed=seed)
        if any(r.violations for r in suite_rows):
            exit_code = 2
        headers, body = _lab_cells(suite_rows)

    text = emit_table(headers, body, fmt)
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)
    click.echo(f"wall time: {time.perf_counter() - start:.2f}s", err=True)
    sys.exit(exit_code)


@cli.command()
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--trials", type=int, default=500, show_default=True)
def verify(seed, trials):
    """Run every oracle suite and report one line per suite."""
    start = time.perf_counter()
    rows = lab.verify_all(seed=seed, trials=trials)
    for row in rows:
        click.echo(str(row))
    bad = sum(r.violations for r in rows)
    click.echo(f"wall time: {time.perf_counter() - start:.2f}s", err=True)
    if bad:
        click.echo(f"{bad} oracle violation(s)", err=True)
        sys.exit(2)


def main(argv=None):
    """Entry point with the documented exit-code contract (usage errors -> 3)."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        sys.exit(3)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except click.exceptions.Abort:
        sys.exit(130)
    return 0


if __name__ == "__main__":
    main()
