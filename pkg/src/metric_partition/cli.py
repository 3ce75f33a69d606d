"""CLI entry point for metric-partition."""

from __future__ import annotations

import logging
import math
import sys
import time
from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import click

from metric_partition import __version__
from metric_partition._types import RunReport
from metric_partition._utils import (
    build_inputs,
    build_spec_graph,
    dump_model,
    file_digest,
    function_from_spec,
    load_function_file,
    load_measure_file,
    load_parts_file,
    load_spec,
    load_weight_file,
    measure_from_spec,
    parts_from_file,
    report_text,
    root_point,
    save_report,
    subset_to_spec,
    weight_from_spec,
    write_dot,
)
from metric_partition.approx import (
    approximate_uniform,
    build_lp_operator,
    lp_bound,
    lp_error,
    sharpness_star,
    sup_error,
    uniform_bound,
)
from metric_partition.errors import NoConvergence
from metric_partition.functionals import create_functional
from metric_partition.graph_core import Partition
from metric_partition.hardy import (
    ASYMPTOTICS_CELLS_PER_UNIT,
    BOUND_CELLS_PER_UNIT,
    RootedTree,
    check_asymptotics,
    check_bound,
)
from metric_partition.partition import partition
from metric_partition.sweep import CASES, run_sweep
from metric_partition.verifier import BOUND_RELATIVE_SLACK, verify_partition, verify_result

logger = logging.getLogger("metric_partition.cli")


class InputError(click.ClickException):
    """Malformed spec, parts file or parameters; exits with status 2."""

    exit_code = 2


@dataclass
class RunOptions:
    tol: float | None
    seed: int
    out: Path | None
    timing: bool
    started: float


@click.group()
@click.version_option(version=__version__, prog_name="metric-partition")
@click.option("--tol", type=float, default=None, help="Absolute tolerance on functional values.")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for random sweeps.")
@click.option("--out", type=click.Path(path_type=Path), default=None, help="Report file.")
@click.option("--verbose", is_flag=True, help="Log recursion details to stderr.")
@click.option("--timing", is_flag=True, help="Record elapsed time in the report.")
@click.pass_context
def main(
    ctx: click.Context, tol: float | None, seed: int, out: Path | None, verbose: bool, timing: bool
) -> None:
    """Partition metric graphs under super-additive set functions and check the bounds."""
    _configure_logging(verbose)
    ctx.obj = RunOptions(tol, seed, out, timing, time.perf_counter())


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _configure_logging(verbose: bool) -> None:
    log_level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(level=log_level, format="%(message)s", stream=sys.stderr)


@contextmanager
def _input_errors() -> Iterator[None]:
    """Turn validation errors into exit status 2 and solver failures into status 1."""
    try:
        yield
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    except NoConvergence as exc:
        click.echo(f"Error: {exc}", err=True)
        raise SystemExit(1) from exc


def _p_label(p: float) -> str | float:
    return "inf" if math.isinf(p) else p


def _within(value: float, bound: float, tol: float) -> bool:
    return value <= bound * (1.0 + BOUND_RELATIVE_SLACK) + tol


def _command(ctx: click.Context) -> list[str]:
    words = [ctx.info_name or ""]
    for name, value in sorted(ctx.params.items()):
        if value is None or value is False:
            continue
        flag = "--" + name.replace("_", "-")
        if isinstance(value, tuple):
            words.extend(f"{flag}={item}" for item in value)
        else:
            words.append(flag if value is True else f"{flag}={value}")
    return words


def _emit(ctx: click.Context, report: RunReport, out: Path | None = None) -> None:
    """Write the report (file or stdout) and exit 1 if any verdict failed."""
    opts: RunOptions = ctx.obj
    if opts.timing:
        report.elapsed_s = round(time.perf_counter() - opts.started, 6)
    target = out or opts.out
    if target is None:
        click.echo(report_text(report), nl=False)
    else:
        save_report(report, target)
        click.echo(f"Report: {target}", err=True)
    failed = [name for name, ok in report.verdicts.items() if not ok]
    click.echo(f"Result: {'PASS' if report.passed else 'FAIL ' + ', '.join(failed)}", err=True)
    if not report.passed:
        raise SystemExit(1)


def _digests(**paths: Path | None) -> dict[str, str]:
    return {name: file_digest(path) for name, path in paths.items() if path is not None}


_graph_option = click.option(
    "--graph",
    "graph_file",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Graph spec file (YAML or JSON).",
)
_out_option = click.option(
    "--out",
    type=click.Path(path_type=Path),
    default=None,
    help="Report file (overrides the global --out).",
)
_tol_option = click.option(
    "--tol",
    type=float,
    default=None,
    help="Absolute tolerance on functional values (overrides the global --tol).",
)
_input_file = click.Path(exists=True, dir_okay=False, path_type=Path)


def _tolerance(ctx: click.Context, tol: float | None) -> float | None:
    opts: RunOptions = ctx.obj
    return opts.tol if tol is None else tol


# ---------------------------------------------------------------------------
# partition
# ---------------------------------------------------------------------------


@main.command("partition")
@_graph_option
@click.option("--functional", required=True, help="Functional, e.g. length or product:0.5.")
@click.option("--n", "n", type=int, required=True, help="Maximum number of parts.")
@click.option("--dot", type=click.Path(path_type=Path), default=None, help="DOT export file.")
@_tol_option
@_out_option
@click.pass_context
def partition_cmd(
    ctx: click.Context,
    graph_file: Path,
    functional: str,
    n: int,
    dot: Path | None,
    tol: float | None,
    out: Path | None,
) -> None:
    """Split a graph into at most N connected parts with balanced Φ̃."""
    tol = _tolerance(ctx, tol)
    with _input_errors():
        spec = load_spec(graph_file)
        inputs = build_inputs(spec)
        phi = create_functional(functional, inputs)
        result = partition(inputs.graph, phi, n, tol)
        check = verify_result(result, tol)

    click.echo(f"Partition of {graph_file.name} under {functional}, n={n}", err=True)
    for index, (part, tilde) in enumerate(zip(result.parts, result.tilde, strict=True), 1):
        click.echo(f"  {index}. {part.describe()}  tilde={tilde.value:.12g}", err=True)
    click.echo(f"Max tilde {result.max_tilde:.12g} <= bound {result.bound:.12g}", err=True)
    if dot is not None:
        write_dot(result.parts, dot)
        click.echo(f"DOT: {dot}", err=True)

    report = RunReport(
        command=_command(ctx),
        inputs=_digests(graph=graph_file),
        outputs={
            "functional": functional,
            "n": n,
            "k": result.k,
            "total": result.total,
            "bound": result.bound,
            "cycle_cuts": result.cut.cycle_rank,
            "cut": {
                "tree_edges": [
                    {"id": e.id, "from": e.start, "to": e.end, "length": e.length}
                    for e in result.cut.tree.edges
                ],
                "splits": [
                    {"x1": str(s.x1), "x2": str(s.x2), "point": str(s.point)}
                    for s in result.cut.splits
                ],
            },
            "parts": [dump_model(subset_to_spec(part)) for part in result.parts],
            "tilde": [
                {"value": t.value, "point": str(x), "jump": t.jump}
                for t, x in zip(result.tilde, result.minimizers(), strict=True)
            ],
        },
        verdicts=check.verdicts(),
    )
    _emit(ctx, report, out)


# ---------------------------------------------------------------------------
# approximate
# ---------------------------------------------------------------------------


@main.command()
@_graph_option
@click.option(
    "--u", "u_file", type=_input_file, default=None, help="Function file; defaults to 'u'."
)
@click.option(
    "--a", "a_file", type=_input_file, default=None, help="Weight file; defaults to 'a' or 1."
)
@click.option(
    "--mu", "mu_file", type=_input_file, default=None, help="Measure file; defaults to 'mu'."
)
@click.option("--p", "p", type=float, default=None, help="Exponent; defaults to the file's p.")
@click.option("--n", "n", type=int, required=True, help="Maximum number of values.")
@click.option(
    "--mode",
    type=click.Choice(["uniform", "lp"]),
    default="uniform",
    show_default=True,
    help="uniform: sup-norm error; lp: weighted L^p(mu) error.",
)
@_tol_option
@_out_option
@click.pass_context
def approximate(
    ctx: click.Context,
    graph_file: Path,
    u_file: Path | None,
    a_file: Path | None,
    mu_file: Path | None,
    p: float | None,
    n: int,
    mode: str,
    tol: float | None,
    out: Path | None,
) -> None:
    """Approximate u by a step function with at most N values and check the error bound.

    u, a and mu come from their own files when given, otherwise from the
    sections of the same name in the graph file.
    """
    given_tol = _tolerance(ctx, tol)
    with _input_errors():
        spec = load_spec(graph_file)
        inputs = build_inputs(spec)
        graph = inputs.graph
        exponent = spec.p if p is None else p
        if u_file is None:
            u = inputs.function("u")
        else:
            u = function_from_spec(graph, load_function_file(u_file))
        if a_file is None:
            a = inputs.weight("a")
        else:
            a = weight_from_spec(graph, load_weight_file(a_file))
        points: list[str] = []
        if mode == "uniform":
            v = approximate_uniform(u, exponent, a, n, given_tol)
            error = sup_error(u, v)
            bound = uniform_bound(u, exponent, a, n)
        else:
            if mu_file is None:
                mu = inputs.measure("mu")
            else:
                mu = measure_from_spec(graph, load_measure_file(mu_file))
            operator = build_lp_operator(mu, a, exponent, n, given_tol)
            v = operator.apply(u)
            points = [str(x) for x in operator.points]
            error = lp_error(u, v, mu, exponent)
            bound = lp_bound(mu, a, exponent, n, u)

    scale = 1.0 + max(map(abs, u.piece_values()))
    error_tol = given_tol if given_tol is not None else 1e-12 * scale
    u_label = "u" if u_file is None else u_file.name
    click.echo(f"Approximation of {u_label} ({mode}, p={exponent:g}, n={n})", err=True)
    for index, (part, value) in enumerate(zip(v.parts, v.values, strict=True), 1):
        click.echo(f"  {index}. {part.describe()}  v={value:.12g}", err=True)
    click.echo(f"Error {error:.12g} vs bound {bound:.12g}", err=True)

    outputs: dict[str, Any] = {
        "mode": mode,
        "p": _p_label(exponent),
        "n": n,
        "k": v.k,
        "parts": [dump_model(subset_to_spec(part)) for part in v.parts],
        "values": list(v.values),
        "error": error,
        "bound": bound,
        "slack": bound - error,
    }
    if points:
        outputs["points"] = points
    report = RunReport(
        command=_command(ctx),
        inputs=_digests(graph=graph_file, u=u_file, a=a_file, mu=mu_file),
        outputs=outputs,
        verdicts={"budget": v.k <= n, "bound": _within(error, bound, error_tol)},
    )
    _emit(ctx, report, out)


# ---------------------------------------------------------------------------
# hardy
# ---------------------------------------------------------------------------


@main.command()
@_graph_option
@click.option("--root", default=None, help="Root vertex; defaults to the file's root.")
@click.option("--v", "v_file", type=_input_file, default=None, help="Weight file for v.")
@click.option("--w", "w_file", type=_input_file, default=None, help="Weight file for w.")
@click.option(
    "--mesh",
    "--cells",
    "mesh",
    type=int,
    default=None,
    help=(
        f"Cells per unit length (default: {BOUND_CELLS_PER_UNIT} for bound, "
        f"{ASYMPTOTICS_CELLS_PER_UNIT} for asymptotics)."
    ),
)
@click.option(
    "--n-max", "--n", "n_max", type=int, default=10, show_default=True, help="Largest n."
)
@click.option(
    "--check",
    type=click.Choice(["bound", "asymptotics"]),
    multiple=True,
    help="What to check; repeatable (default: bound).",
)
@_out_option
@click.pass_context
def hardy(
    ctx: click.Context,
    graph_file: Path,
    root: str | None,
    v_file: Path | None,
    w_file: Path | None,
    mesh: int | None,
    n_max: int,
    check: tuple[str, ...],
    out: Path | None,
) -> None:
    """Check s_n <= ||v||_2 ||w||_2 / n for the Hardy operator on a rooted tree.

    v and w come from their own files when given, otherwise from the graph
    file's weights of the same name (1 if absent).
    """
    checks = set(check or ("bound",))
    with _input_errors():
        spec = load_spec(graph_file)
        graph = build_spec_graph(spec)
        inputs = build_inputs(spec, graph)
        origin = graph.vertex_point(root) if root is not None else root_point(graph, spec)
        if origin is None:
            raise ValueError("A root is needed: pass --root or set 'root' in the spec file")
        v = inputs.weights.get("v")
        if v_file is not None:
            v = weight_from_spec(graph, load_weight_file(v_file))
        w = inputs.weights.get("w")
        if w_file is not None:
            w = weight_from_spec(graph, load_weight_file(w_file))
        tree = RootedTree.build(graph, origin, v, w)
        bound_report = None
        if "bound" in checks:
            bound_report = check_bound(tree, n_max, mesh or BOUND_CELLS_PER_UNIT)
        limits = None
        if "asymptotics" in checks:
            limits = check_asymptotics(tree, cells_per_unit=mesh or ASYMPTOTICS_CELLS_PER_UNIT)

    click.echo(f"Hardy operator on {graph_file.name}, root {tree.root}", err=True)
    outputs: dict[str, Any] = {"root": str(tree.root)}
    verdicts: dict[str, bool] = {}
    if bound_report is not None:
        for row in bound_report.rows:
            status = "ok" if row.passed else "VIOLATED"
            click.echo(
                f"  n={row.n}: s_n={row.value:.8g} bound={row.bound:.8g} "
                f"slack={row.slack:.2g} [{status}]",
                err=True,
            )
        outputs.update(
            {
                "cells_per_unit": bound_report.cells_per_unit,
                "norm_v": bound_report.norm_v,
                "norm_w": bound_report.norm_w,
                "rows": [
                    {"n": r.n, "s_n": r.value, "bound": r.bound, "slack": r.slack}
                    for r in bound_report.rows
                ],
            }
        )
        verdicts["bound"] = bound_report.passed
    if limits is not None:
        click.echo(
            f"  lim n·s_n ≈ {limits.limit:.6g}, predicted {limits.prediction:.6g} "
            f"(alpha {limits.alpha:.6g}, oracle {limits.oracle:.6g})",
            err=True,
        )
        outputs["asymptotics"] = {
            "alpha": limits.alpha,
            "oracle": limits.oracle,
            "integral": limits.integral,
            "limit": limits.limit,
            "relative_error": limits.relative_error,
            "alpha_error": limits.alpha_error,
        }
        verdicts["asymptotics"] = limits.passed
    report = RunReport(
        command=_command(ctx),
        inputs=_digests(graph=graph_file, v=v_file, w=w_file),
        outputs=outputs,
        verdicts=verdicts,
    )
    _emit(ctx, report, out)


# ---------------------------------------------------------------------------
# sharpness
# ---------------------------------------------------------------------------


@main.command()
@click.option("--mode", type=click.Choice(["uniform", "lp"]), default="uniform", show_default=True)
@click.option("--N", "count", type=int, required=True, help="Number of star edges.")
@click.option("--p", "p", type=float, default=2.0, show_default=True, help="Exponent (lp mode).")
@_out_option
@click.pass_context
def sharpness(ctx: click.Context, mode: str, count: int, p: float, out: Path | None) -> None:
    """Run the star-graph construction with n = N - 1 and check equality with the bound."""
    with _input_errors():
        result = sharpness_star(count, p, mode)

    click.echo(
        f"Star with {count} edges ({mode}): achieved {result.achieved:.12g}, "
        f"bound {result.expected:.12g}",
        err=True,
    )
    outputs: dict[str, Any] = {
        "mode": mode,
        "N": count,
        "n": result.n,
        "p": _p_label(result.p),
        "achieved": result.achieved,
        "expected": result.expected,
        "relative_gap": result.relative_gap,
        "tolerance": result.tolerance,
    }
    if result.error is not None:
        outputs["error"] = result.error
    if result.residuals:
        outputs["residuals"] = result.residuals
    report = RunReport(command=_command(ctx), outputs=outputs, verdicts={"equality": result.passed})
    _emit(ctx, report, out)


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


@main.command()
@click.option(
    "--graph",
    "graph_file",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Graph spec file.",
)
@click.option("--functional", default=None, help="Functional the parts are checked against.")
@click.option(
    "--parts",
    "parts_file",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Parts file, or the report of a partition run.",
)
@click.option("--n", "n", type=int, default=None, help="Part budget.")
@click.option("--sweep", type=click.Choice(list(CASES)), default=None, help="Run a random sweep.")
@click.option("--count", type=int, default=200, show_default=True, help="Sweep instances.")
@click.option("--jobs", type=int, default=1, show_default=True, help="Parallel sweep workers.")
@_tol_option
@_out_option
@click.pass_context
def verify(
    ctx: click.Context,
    graph_file: Path | None,
    functional: str | None,
    parts_file: Path | None,
    n: int | None,
    sweep: str | None,
    count: int,
    jobs: int,
    tol: float | None,
    out: Path | None,
) -> None:
    """Check a claimed partition, or run a seeded random sweep (--sweep)."""
    tol = _tolerance(ctx, tol)
    if sweep is not None:
        _verify_sweep(ctx, sweep, count, jobs, out)
        return
    if graph_file is None or functional is None or parts_file is None or n is None:
        raise click.UsageError("Provide --graph, --functional, --parts and --n, or --sweep.")

    with _input_errors():
        spec = load_spec(graph_file)
        inputs = build_inputs(spec)
        phi = create_functional(functional, inputs)
        parts = parts_from_file(inputs.graph, load_parts_file(parts_file))
        if not parts:
            raise ValueError(f"{parts_file}: no parts given")
        check = verify_partition(inputs.graph, phi, Partition(tuple(parts)), n, tol)

    click.echo(f"Verifying {len(parts)} part(s) of {graph_file.name} under {functional}", err=True)
    for row in check.parts:
        tilde = "n/a" if row.tilde is None else f"{row.tilde:.12g}"
        click.echo(f"  {row.index + 1}. {row.description}  tilde={tilde}", err=True)
    for clause, detail in check.failures:
        click.echo(f"  [{clause}] {detail}", err=True)

    report = RunReport(
        command=_command(ctx),
        inputs=_digests(graph=graph_file, parts=parts_file),
        outputs={
            "functional": functional,
            "n": n,
            "k": check.k,
            "bound": check.bound,
            "parts": [
                {
                    "description": row.description,
                    "value": row.value,
                    "tilde": row.tilde,
                    "minimizer": None if row.image is None else str(row.image),
                    "slack": row.slack,
                    "jump": row.jump,
                }
                for row in check.parts
            ],
            "failures": [{"clause": c, "detail": d} for c, d in check.failures],
        },
        verdicts=check.verdicts(),
    )
    _emit(ctx, report, out)


def _verify_sweep(ctx: click.Context, kind: str, count: int, jobs: int, out: Path | None) -> None:
    opts: RunOptions = ctx.obj
    click.echo(f"Sweep {kind}: {count} instance(s), seed {opts.seed}, {jobs} job(s)", err=True)
    with _input_errors():
        result = run_sweep(kind, count, opts.seed, jobs)
    report = RunReport(
        command=_command(ctx),
        outputs={
            "kind": kind,
            "seed": opts.seed,
            "count": count,
            "failures": [
                {"index": case.index, "detail": case.detail} for case in result.failures
            ],
            "min_margin": min((case.margin for case in result.cases), default=0.0),
        },
        verdicts={kind: result.passed},
    )
    _emit(ctx, report, out)


def run(argv: Sequence[str] | None = None) -> int:
    """Run the CLI in-process and return its exit status."""
    try:
        args = None if argv is None else list(argv)
        main.main(args=args, prog_name="metric-partition", standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.Abort:
        click.echo("Aborted!", err=True)
        return 1
    except SystemExit as exc:
        if exc.code is None:
            return 0
        return exc.code if isinstance(exc.code, int) else 1
    return 0
