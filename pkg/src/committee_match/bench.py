"""Benchmark harness: bound-vs-achieved tables over random trials.

Each trial generates an instance from (seed, trial index), runs the full
pipeline, and reports the achieved threshold against its ceiling bound,
the worst rank-parameter drift against its bound (2*beta for a single
school, 2|K|+2 for markets), and the capacity drift against 2|K|+1.

Reports are deterministic byte-for-byte for a fixed seed; wall-clock
timings are therefore opt-in (``timing=True`` appends a runtime column).
Trials can run in parallel (COMMITTEE_MATCH_THREADS); the table is
assembled in trial order either way.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from .errors import CommitteeMatchError, HandoffError, NonConvergence
from .formats import SolverOverrides
from .generators import AlphaMode, generate_instance
from .solve import beta_ceiling, solve_match, solve_single


@dataclass(frozen=True)
class BenchShape:
    trials: int
    seed: int
    students: int
    schools: int
    members: int
    capacity: int
    alpha_mode: str


@dataclass(frozen=True)
class TrialRow:
    trial: int
    status: str                 # "ok" | "nonconverged" | "error:<name>"
    method: str
    beta_max: int | None
    beta_bound: int
    alpha_dev: str | None       # worst |alpha' - alpha| (exact, printed)
    alpha_bound: str
    cap_dev: int | None
    cap_bound: int
    runtime: float


def _fmt_frac(value: Fraction) -> str:
    return str(int(value)) if value.denominator == 1 else str(value)


def run_trial(
    shape: BenchShape,
    trial: int,
    overrides: SolverOverrides | None = None,
    backend: str | None = None,
) -> TrialRow:
    instance = generate_instance(
        (shape.seed, trial),
        shape.students,
        shape.schools,
        shape.members,
        shape.capacity,
        AlphaMode.parse(shape.alpha_mode),
    )
    started = time.perf_counter()
    try:
        if shape.schools == 1:
            result = solve_single(instance, overrides=overrides, backend=backend)
            school = result.instance.schools[0]
            alpha_dev = max(
                (abs(result.alpha_prime[m.label] - m.alpha) for m in school.committee),
                default=Fraction(0),
            )
            row = TrialRow(
                trial=trial,
                status="ok" if result.verdict.ok else "error:verdict",
                method=result.state.method,
                beta_max=result.beta,
                beta_bound=beta_ceiling(school),
                alpha_dev=_fmt_frac(alpha_dev),
                alpha_bound=str(2 * result.beta),
                cap_dev=0,
                cap_bound=0,
                runtime=time.perf_counter() - started,
            )
        else:
            result = solve_match(instance, overrides=overrides, backend=backend)
            alpha_dev = Fraction(0)
            cap_dev = 0
            alpha_bound = 0
            cap_bound = 0
            for school in result.instance.schools:
                k = len(school.committee)
                alpha_bound = max(alpha_bound, 2 * k + 2)
                cap_bound = max(cap_bound, 2 * k + 1)
                cap_dev = max(
                    cap_dev, abs(result.c_prime[school.label] - school.capacity)
                )
                for member in school.committee:
                    alpha_dev = max(
                        alpha_dev, abs(result.alpha_prime[member.label] - member.alpha)
                    )
            row = TrialRow(
                trial=trial,
                status="ok" if result.verdict.ok else "error:verdict",
                method=result.state.method,
                beta_max=max(result.betas),
                beta_bound=max(
                    beta_ceiling(s) for s in result.instance.schools
                ),
                alpha_dev=_fmt_frac(alpha_dev),
                alpha_bound=str(alpha_bound),
                cap_dev=cap_dev,
                cap_bound=cap_bound,
                runtime=time.perf_counter() - started,
            )
        return row
    except (NonConvergence, HandoffError):
        return TrialRow(
            trial=trial,
            status="nonconverged",
            method="-",
            beta_max=None,
            beta_bound=0,
            alpha_dev=None,
            alpha_bound="-",
            cap_dev=None,
            cap_bound=0,
            runtime=time.perf_counter() - started,
        )
    except CommitteeMatchError as exc:
        return TrialRow(
            trial=trial,
            status=f"error:{type(exc).__name__}",
            method="-",
            beta_max=None,
            beta_bound=0,
            alpha_dev=None,
            alpha_bound="-",
            cap_dev=None,
            cap_bound=0,
            runtime=time.perf_counter() - started,
        )


def _worker(args) -> TrialRow:
    shape, trial, overrides, backend = args
    return run_trial(shape, trial, overrides, backend)


def thread_budget() -> int:
    raw = os.environ.get("COMMITTEE_MATCH_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_bench(
    shape: BenchShape,
    overrides: SolverOverrides | None = None,
    backend: str | None = None,
    timing: bool = False,
) -> str:
    """Run all trials and format the report table (deterministic unless
    ``timing`` adds the wall-clock column)."""
    jobs = [(shape, t, overrides, backend) for t in range(shape.trials)]
    workers = min(thread_budget(), shape.trials or 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_worker, jobs))
    else:
        rows = [_worker(job) for job in jobs]

    header = [
        "trial", "status", "method", "beta", "beta_bound",
        "alpha_dev", "alpha_bound", "cap_dev", "cap_bound",
    ]
    if timing:
        header.append("runtime_s")
    lines = ["\t".join(header)]
    for row in rows:
        cells = [
            str(row.trial),
            row.status,
            row.method,
            "-" if row.beta_max is None else str(row.beta_max),
            str(row.beta_bound) if row.beta_max is not None else "-",
            row.alpha_dev if row.alpha_dev is not None else "-",
            row.alpha_bound,
            "-" if row.cap_dev is None else str(row.cap_dev),
            str(row.cap_bound) if row.cap_dev is not None else "-",
        ]
        if timing:
            cells.append(f"{row.runtime:.3f}")
        lines.append("\t".join(cells))

    ok = sum(1 for r in rows if r.status == "ok")
    nonconv = [r.trial for r in rows if r.status == "nonconverged"]
    errors = [r.trial for r in rows if r.status.startswith("error")]
    worst_beta = max((r.beta_max for r in rows if r.beta_max is not None), default=0)
    lines.append(
        "# summary"
        f" trials={shape.trials}"
        f" ok={ok}"
        f" nonconverged={len(nonconv)}"
        f" errors={len(errors)}"
        f" worst_beta={worst_beta}"
        f" nonconverged_trials={nonconv}"
        f" error_trials={errors}"
    )
    return "\n".join(lines) + "\n"
