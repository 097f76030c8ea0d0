"""Command-line interface.

Subcommands: ``gen`` (random instances), ``solve-single``, ``solve-match``,
``verify``, ``oracle {acceptable,stable,min-beta}``, ``bench``.

Exit codes: 0 success, 1 verification failure, 2 solver non-convergence,
3 I/O or validation error.  With --json, errors are emitted as JSON
objects on stderr.
"""

from __future__ import annotations

import json
import sys
from dataclasses import replace
from math import inf

import click

from . import bench as bench_mod
from . import oracle as oracle_mod
from .errors import (
    CommitteeMatchError,
    FormatError,
    HandoffError,
    NonConvergence,
    SizeGuard,
    ValidationError,
)
from .formats import (
    SolverOverrides,
    dump_instance,
    instance_to_dict,
    load_instance,
    load_solution,
)
from .generators import AlphaMode, generate_instance
from .model import integral_mode_warnings
from .solve import (
    match_result_to_dict,
    reverify,
    single_result_to_dict,
    solve_match,
    solve_single,
)

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_NONCONVERGENCE = 2
EXIT_BAD_INPUT = 3


class _Failure(Exception):
    def __init__(self, code: int, message: str, detail: dict | None = None):
        super().__init__(message)
        self.code = code
        self.detail = detail or {}


def _write_output(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if out is None or out == "-":
        click.echo(text, nl=False)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _merge_overrides(base: SolverOverrides, **cli_values) -> SolverOverrides:
    merged = base
    for key, value in cli_values.items():
        if value is not None:
            merged = replace(merged, **{key: value})
    return merged


_solver_options = [
    click.option("--eps", type=float, default=None, help="Budget window width."),
    click.option("--delta", type=float, default=None, help="Member price floor (markets)."),
    click.option("--damping", type=float, default=None, help="Price update damping."),
    click.option("--tol", type=float, default=None, help="Residual tolerance."),
    click.option("--max-iter", type=int, default=None, help="Iteration budget per restart."),
    click.option("--solver-seed", type=int, default=None, help="Seed for restart initializations."),
    click.option(
        "--backend",
        type=click.Choice(["auto", "compiled", "python"]),
        default="auto",
        help="Kernel backend.",
    ),
]


def _with_solver_options(cmd):
    for option in reversed(_solver_options):
        cmd = option(cmd)
    return cmd


@click.group(name="committee-match")
@click.option("--json", "json_errors", is_flag=True, help="Machine-readable errors on stderr.")
@click.pass_context
def cli(ctx, json_errors):
    """Acceptable choice sets and approximately stable matchings."""
    ctx.obj = {"json": json_errors}


@cli.command()
@click.option("--students", "-n", type=int, required=True)
@click.option("--schools", "-m", type=int, default=1, show_default=True)
@click.option("--members", "-k", type=int, default=1, show_default=True)
@click.option("--capacity", "-c", type=int, required=True)
@click.option("--alpha-mode", default="uniform", show_default=True,
              help="fixed:<k>, uniform, or percentile:<p>.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "-o", type=click.Path(dir_okay=False), default=None,
              help="Output file (default stdout).")
def gen(students, schools, members, capacity, alpha_mode, seed, out):
    """Generate a random instance."""
    instance = generate_instance(
        seed, students, schools, members, capacity, AlphaMode.parse(alpha_mode)
    )
    for warning in integral_mode_warnings(instance):
        click.echo(f"warning: {warning}", err=True)
    if out is None or out == "-":
        click.echo(json.dumps(instance_to_dict(instance), indent=2))
    else:
        dump_instance(instance, out)


@cli.command(name="solve-single")
@click.argument("instance_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--school", default=None, help="School label (required for markets).")
@click.option("--out", "-o", type=click.Path(dir_okay=False), default=None)
@_with_solver_options
def solve_single_cmd(instance_path, school, out, eps, delta, damping, tol,
                     max_iter, solver_seed, backend):
    """Compute an acceptable choice set for one school."""
    instance, overrides = load_instance(instance_path)
    overrides = _merge_overrides(
        overrides, eps=eps, delta=delta, damping=damping, tol=tol,
        max_iter=max_iter, seed=solver_seed,
    )
    result = solve_single(instance, school, overrides, backend=backend)
    _write_output(single_result_to_dict(result), out)
    if not result.verdict.ok:
        raise _Failure(EXIT_VERIFICATION, "solution failed verification")


@cli.command(name="solve-match")
@click.argument("instance_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "-o", type=click.Path(dir_okay=False), default=None)
@_with_solver_options
def solve_match_cmd(instance_path, out, eps, delta, damping, tol, max_iter,
                    solver_seed, backend):
    """Compute an approximately stable matching for a market."""
    instance, overrides = load_instance(instance_path)
    overrides = _merge_overrides(
        overrides, eps=eps, delta=delta, damping=damping, tol=tol,
        max_iter=max_iter, seed=solver_seed,
    )
    result = solve_match(instance, overrides, backend=backend)
    _write_output(match_result_to_dict(result), out)
    if not result.verdict.ok:
        raise _Failure(EXIT_VERIFICATION, "solution failed verification")


@cli.command()
@click.argument("instance_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("solution_path", type=click.Path(exists=True, dir_okay=False))
def verify(instance_path, solution_path):
    """Re-check a solution file against its instance."""
    instance, _ = load_instance(instance_path)
    solution = load_solution(solution_path)
    verdict, reproduced = reverify(instance, solution)
    payload = {
        "ok": verdict.ok,
        "certificate_reproduced": reproduced,
        "violations": [v.to_dict() for v in verdict.violations],
    }
    click.echo(json.dumps(payload, indent=2))
    if not verdict.ok or not reproduced:
        raise _Failure(
            EXIT_VERIFICATION,
            "verification failed"
            if not verdict.ok
            else "embedded certificate does not match",
        )


@cli.group()
def oracle():
    """Brute-force ground truth on small instances."""


def _resolve_pool(instance, school, applicants):
    sub_school = instance.school_by_label(school) if school else instance.schools[0]
    if applicants:
        labels = {s.label: s.id for s in instance.students}
        try:
            pool = frozenset(labels[a.strip()] for a in applicants.split(","))
        except KeyError as exc:
            raise ValidationError([f"unknown student {exc} in --applicants"]) from None
    else:
        pool = frozenset(range(instance.n_students))
    return sub_school, pool


@oracle.command()
@click.argument("instance_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--school", default=None, help="School label (default: first school).")
@click.option("--applicants", default=None, help="Comma-separated student labels.")
def acceptable(instance_path, school, applicants):
    """Enumerate acceptable sets with their threshold windows."""
    instance, _ = load_instance(instance_path)
    sub_school, pool = _resolve_pool(instance, school, applicants)
    rows = oracle_mod.enumerate_acceptable(sub_school, pool)
    for selected, window in rows:
        names = ",".join(sorted(instance.students[i].label for i in selected))
        click.echo(f"{{{names}}}\tlo={window.lo}\thi={window.hi}")
    if not rows:
        click.echo("# no acceptable set")


@oracle.command(name="min-beta")
@click.argument("instance_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--school", default=None)
@click.option("--applicants", default=None)
def min_beta_cmd(instance_path, school, applicants):
    """Smallest feasible threshold over all acceptable sets."""
    instance, _ = load_instance(instance_path)
    sub_school, pool = _resolve_pool(instance, school, applicants)
    value = oracle_mod.min_beta(sub_school, pool)
    click.echo("inf" if value == inf else str(value))


@oracle.command()
@click.argument("instance_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--betas", required=True,
              help="Comma-separated per-school thresholds, in school order.")
def stable(instance_path, betas):
    """Enumerate all stable matchings at the given thresholds."""
    instance, _ = load_instance(instance_path)
    try:
        values = [int(b) for b in betas.split(",")]
    except ValueError:
        raise FormatError(f"bad --betas {betas!r}") from None
    if len(values) != instance.n_schools:
        raise FormatError(
            f"--betas needs {instance.n_schools} values, got {len(values)}"
        )
    matchings = oracle_mod.enumerate_stable(instance, values)
    for matching in matchings:
        cells = []
        for student in instance.students:
            target = matching.assignment[student.id]
            name = "-" if target is None else instance.schools[target].label
            cells.append(f"{student.label}->{name}")
        click.echo(" ".join(cells))
    if not matchings:
        click.echo("# no stable matching")


@cli.command(name="bench")
@click.option("--trials", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--students", "-n", type=int, default=12, show_default=True)
@click.option("--schools", "-m", type=int, default=1, show_default=True)
@click.option("--members", "-k", type=int, default=3, show_default=True)
@click.option("--capacity", "-c", type=int, default=4, show_default=True)
@click.option("--alpha-mode", default="uniform", show_default=True)
@click.option("--timing", is_flag=True,
              help="Append wall-clock runtimes (report no longer byte-stable).")
@_with_solver_options
def bench_cmd(trials, seed, students, schools, members, capacity, alpha_mode,
              timing, eps, delta, damping, tol, max_iter, solver_seed, backend):
    """Random-trial benchmark: achieved values vs guarantee bounds."""
    shape = bench_mod.BenchShape(
        trials=trials,
        seed=seed,
        students=students,
        schools=schools,
        members=members,
        capacity=capacity,
        alpha_mode=alpha_mode,
    )
    overrides = _merge_overrides(
        SolverOverrides(), eps=eps, delta=delta, damping=damping, tol=tol,
        max_iter=max_iter, seed=solver_seed,
    )
    click.echo(
        bench_mod.run_bench(shape, overrides, backend=backend, timing=timing),
        nl=False,
    )


def _emit_error(code: int, kind: str, message: str, json_mode: bool) -> None:
    if json_mode:
        payload = {"error": kind, "message": message, "exit_code": code}
        print(json.dumps(payload), file=sys.stderr)
    else:
        print(f"error: {message}", file=sys.stderr)


def main(argv=None) -> int:
    args = list(sys.argv[1:] if argv is None else argv)
    json_mode = "--json" in args
    try:
        cli.main(args=args, standalone_mode=False)
        return EXIT_OK
    except _Failure as exc:
        _emit_error(exc.code, "failure", str(exc), json_mode)
        return exc.code
    except (NonConvergence, HandoffError) as exc:
        _emit_error(EXIT_NONCONVERGENCE, type(exc).__name__, str(exc), json_mode)
        return EXIT_NONCONVERGENCE
    except (FormatError, ValidationError, SizeGuard) as exc:
        _emit_error(EXIT_BAD_INPUT, type(exc).__name__, str(exc), json_mode)
        return EXIT_BAD_INPUT
    except CommitteeMatchError as exc:
        _emit_error(EXIT_BAD_INPUT, type(exc).__name__, str(exc), json_mode)
        return EXIT_BAD_INPUT
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.Abort:
        return EXIT_BAD_INPUT
    except click.ClickException as exc:
        _emit_error(EXIT_BAD_INPUT, "usage", exc.format_message(), json_mode)
        return EXIT_BAD_INPUT
    except OSError as exc:
        _emit_error(EXIT_BAD_INPUT, "io", str(exc), json_mode)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
