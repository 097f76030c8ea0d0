"""End-to-end pipelines: equilibrium, snap, round, verify, certify.

``solve_single`` handles one school (the applicant pool is the full padded
student set); ``solve_match`` handles a market.  Both return result objects
carrying the padded instance, the adjusted parameters, the rounded output
and a verification certificate computed by the verifier alone, so results
can be re-checked from their serialized form without any solver state.

Threshold selection: the certified threshold starts from the equilibrium
extraction (supported price or utility minimum over the budget window) and
is clamped into the exact support window of the snapped fractional object.
For a state converged by plain iteration the clamp is a no-op; for
ladder-reconstructed states it absorbs the remaining slack in the
allocation-optimality direction that reconstruction does not enforce.
Every reported threshold is re-verified by the definition-level checker.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

from . import leo, meo
from .errors import HandoffError, ValidationError
from .formats import SolverOverrides
from .model import (
    FractionalAssignment,
    Instance,
    Matching,
    School,
    StudentPrefs,
    assert_matching_feasible,
    pad_with_dummies,
    validate,
)
from .rational import snap_assignment, snap_row
from .rounding import round_matching, round_single
from .verify import (
    Verdict,
    check_acceptable,
    check_frac_acceptable,
    check_frac_stable,
    check_stable,
    frac_window_single,
    frac_windows_market,
)


@dataclass(frozen=True)
class SingleResult:
    instance: Instance              # padded single-school instance
    school_label: str
    selected: tuple[int, ...]
    beta: int
    alpha_prime: dict[str, Fraction]
    verdict: Verdict
    fractional: FractionalAssignment
    state: leo.LeoState
    deletions: tuple[dict, ...]

    def selected_labels(self) -> tuple[str, ...]:
        return tuple(self.instance.students[i].label for i in self.selected)


@dataclass(frozen=True)
class MatchResult:
    instance: Instance              # padded market
    matching: Matching
    betas: list[int]
    alpha_prime: dict[str, Fraction]
    c_prime: dict[str, int]
    verdict: Verdict
    fractional: FractionalAssignment
    state: meo.MeoState
    deletions: tuple[dict, ...]


def single_school_instance(instance: Instance, school_label: str | None) -> Instance:
    """Project a (possibly multi-school) instance onto one school.

    Student preference lists collapse to just the chosen school, committee
    rankings are kept as-is, and ids are re-based so the school is index 0.
    """
    if school_label is None:
        if instance.n_schools != 1:
            raise ValidationError(
                ["a school label is required when the instance has several schools"]
            )
        school = instance.schools[0]
    else:
        school = instance.school_by_label(school_label)
    students = tuple(
        StudentPrefs(id=s.id, label=s.label, order=(0,), is_dummy=s.is_dummy)
        for s in instance.students
    )
    members = tuple(
        replace(member, id=j) for j, member in enumerate(school.committee)
    )
    return Instance(
        students=students,
        schools=(replace(school, id=0, committee=members),),
    )


def _require_valid(instance: Instance) -> None:
    violations = validate(instance)
    if violations:
        raise ValidationError(violations)


def beta_ceiling(school: School) -> int:
    """The certified threshold never exceeds ceil(alpha mass / capacity)."""
    return math.ceil(school.alpha_sum() / school.capacity)


def _certify_single(school: School, state: leo.LeoState):
    """Snap, pick the certified threshold, and verify the fractional set.

    Raises HandoffError on any gate failure so callers can try the ladder
    fallback before giving up.
    """
    if state.exact_z is not None:
        snapped = list(state.exact_z)
    else:
        snapped = snap_row(state.z.tolist(), school.capacity)
    support = [i for i, v in enumerate(snapped) if v > 0]
    _, beta0 = leo.certified_beta(
        leo.state_price_totals(state, support), state.eps, school
    )
    window = frac_window_single(school, snapped)
    if not window.feasible:
        raise HandoffError(
            "snapped equilibrium output admits no acceptance threshold",
            state=state,
        )
    beta = min(max(beta0, window.lo), window.hi)
    if beta > beta_ceiling(school):
        raise HandoffError(
            f"certified threshold {beta} exceeds the ceiling bound "
            f"{beta_ceiling(school)}",
            state=state,
        )
    frac_verdict = check_frac_acceptable(school, snapped, beta)
    if not frac_verdict.ok:
        raise HandoffError(
            "snapped equilibrium output is not an acceptable fractional set",
            verdict=frac_verdict,
            state=state,
        )
    return snapped, beta


def solve_single(
    instance: Instance,
    school_label: str | None = None,
    overrides: SolverOverrides | None = None,
    backend: str | None = None,
) -> SingleResult:
    """Full single-school pipeline.

    Equilibrium search, exact snap, fractional re-verification at the
    certified threshold, iterative rounding, and a final certificate that
    the selection is acceptable under the adjusted parameters.
    """
    _require_valid(instance)
    ov = overrides or SolverOverrides()
    sub = pad_with_dummies(single_school_instance(instance, school_label))
    school = sub.schools[0]

    state = leo.require_converged(
        leo.leo_iterate(
            school,
            sub.n_students,
            eps=ov.eps,
            gamma=ov.damping,
            tol=ov.tol if ov.tol is not None else leo.DEFAULT_TOL,
            max_iter=ov.max_iter if ov.max_iter is not None else leo.DEFAULT_MAX_ITER,
            seed=ov.seed if ov.seed is not None else 0,
            backend=backend,
        )
    )

    try:
        snapped, beta = _certify_single(school, state)
    except HandoffError:
        # A converged state can still snap onto the wrong side of a support
        # crossing (equilibrium shares like 2/3 put cumulative mass exactly
        # on a rank threshold, which no dyadic grid can express); the ladder
        # reconstruction over coarse denominators is the verified fallback.
        polished = None
        for source in (state.z, state.z_avg):
            if source is None:
                continue
            polished = leo.polish_single(school, source, state.eps)
            if polished is not None:
                break
        if polished is None:
            raise
        state = leo._ladder_state(
            school, polished, state.eps, state.gamma, state.tol,
            state.iterations, state.restarts, state.seed, backend,
        )
        snapped, beta = _certify_single(school, state)

    rounding = round_single(snapped, school, beta)
    row = rounding.values.row(0)
    selected = tuple(i for i, v in enumerate(row) if v == 1)
    adjusted = school.with_alphas(
        [rounding.alpha_prime[m.label] for m in school.committee]
    )
    verdict = check_acceptable(
        adjusted, frozenset(range(sub.n_students)), frozenset(selected), beta
    )
    return SingleResult(
        instance=sub,
        school_label=school.label,
        selected=selected,
        beta=beta,
        alpha_prime=rounding.alpha_prime,
        verdict=verdict,
        fractional=FractionalAssignment(rows=(tuple(snapped),)),
        state=state,
        deletions=rounding.deletions,
    )


def adjusted_instance(
    instance: Instance,
    alpha_prime: dict[str, Fraction],
    c_prime: dict[str, int],
) -> Instance:
    """Instance with each school's parameters replaced by the adjusted ones."""
    schools = []
    for school in instance.schools:
        adjusted = school.with_alphas(
            [alpha_prime[m.label] for m in school.committee]
        )
        schools.append(adjusted.with_capacity(c_prime[school.label]))
    return Instance(students=instance.students, schools=tuple(schools))


def _diagnostics(state) -> dict:
    out = {
        "backend": state.backend,
        "method": state.method,
        "eps": state.eps,
        "damping": state.gamma,
        "tol": state.tol,
        "residual": state.residual,
        "iterations": state.iterations,
        "restarts": state.restarts,
        "converged": state.converged,
        "seed": state.seed,
    }
    if hasattr(state, "delta"):
        out["delta"] = state.delta
    return out


def single_result_to_dict(result: SingleResult) -> dict:
    from .formats import FORMAT_VERSION, fraction_to_json

    school = result.instance.schools[0]
    return {
        "format": FORMAT_VERSION,
        "kind": "single",
        "school": result.school_label,
        "selected": sorted(result.selected_labels()),
        "betas": {result.school_label: result.beta},
        "alpha_prime": {
            m.label: fraction_to_json(result.alpha_prime[m.label])
            for m in school.committee
        },
        "c_prime": {result.school_label: school.capacity},
        "certificate": result.verdict.to_dict(),
        "diagnostics": {
            **_diagnostics(result.state),
            "padded_students": [
                s.label for s in result.instance.students if s.is_dummy
            ],
            "deletions": list(result.deletions),
        },
    }


def match_result_to_dict(result: MatchResult) -> dict:
    from .formats import FORMAT_VERSION, fraction_to_json, matching_to_dict

    return {
        "format": FORMAT_VERSION,
        "kind": "match",
        "school": None,
        "assignment": matching_to_dict(result.instance, result.matching),
        "betas": {
            s.label: result.betas[s.id] for s in result.instance.schools
        },
        "alpha_prime": {
            m.label: fraction_to_json(result.alpha_prime[m.label])
            for _, m in result.instance.members()
        },
        "c_prime": dict(result.c_prime),
        "certificate": result.verdict.to_dict(),
        "diagnostics": {
            **_diagnostics(result.state),
            "padded_students": [
                s.label for s in result.instance.students if s.is_dummy
            ],
            "deletions": list(result.deletions),
        },
    }


def reverify(instance: Instance, solution) -> tuple[Verdict, bool]:
    """Re-run verification for a solution document against an instance.

    Reconstructs the padded instance deterministically, applies the
    adjusted parameters from the document, and recomputes the certificate
    with the verifier alone (no solver state is consulted).  Returns the
    fresh verdict and whether it reproduces the embedded certificate
    exactly.
    """
    _require_valid(instance)
    if solution.kind == "single":
        sub = pad_with_dummies(single_school_instance(instance, solution.school))
        school = sub.schools[0]
        labels = {s.label: s.id for s in sub.students}
        try:
            selected = frozenset(labels[lab] for lab in solution.selected)
        except KeyError as exc:
            raise ValidationError([f"unknown student {exc} in solution"]) from None
        adjusted = school.with_alphas(
            [solution.alpha_prime[m.label] for m in school.committee]
        )
        verdict = check_acceptable(
            adjusted,
            frozenset(range(sub.n_students)),
            selected,
            solution.betas[school.label],
        )
    else:
        from .formats import matching_from_dict

        padded = pad_with_dummies(instance)
        adj = adjusted_instance(padded, solution.alpha_prime, solution.c_prime)
        matching = matching_from_dict(padded, solution.assignment)
        verdict = check_stable(
            adj,
            matching,
            [solution.betas[s.label] for s in padded.schools],
            capacities=[solution.c_prime[s.label] for s in padded.schools],
        )
    return verdict, verdict.to_dict() == solution.certificate


def _certify_match(padded: Instance, state: meo.MeoState):
    """Snap, pick certified per-school thresholds, verify stability.

    Raises HandoffError on any gate failure so callers can try the ladder
    fallback before giving up.
    """
    caps = [s.capacity for s in padded.schools]
    if state.exact_z is not None:
        snapped = state.exact_z
    else:
        snapped = snap_assignment(state.z.tolist(), caps)
    support = [
        [i for i in range(padded.n_students) if snapped.rows[h][i] > 0]
        for h in range(padded.n_schools)
    ]
    betas0 = meo.extract_betas(state, padded, support=support)
    windows = frac_windows_market(padded, snapped)
    betas = []
    for school, beta0, window in zip(padded.schools, betas0, windows):
        if not window.feasible:
            raise HandoffError(
                f"school {school.label}: snapped output admits no threshold",
                state=state,
            )
        beta = min(max(beta0, window.lo), window.hi)
        if beta > beta_ceiling(school):
            raise HandoffError(
                f"school {school.label}: certified threshold {beta} exceeds "
                f"the ceiling bound {beta_ceiling(school)}",
                state=state,
            )
        betas.append(beta)
    frac_verdict = check_frac_stable(padded, snapped, betas)
    if not frac_verdict.ok:
        raise HandoffError(
            "snapped equilibrium output is not a stable fractional matching",
            verdict=frac_verdict,
            state=state,
        )
    return snapped, betas


def solve_match(
    instance: Instance,
    overrides: SolverOverrides | None = None,
    backend: str | None = None,
) -> MatchResult:
    """Full market pipeline, mirroring ``solve_single`` per school."""
    _require_valid(instance)
    ov = overrides or SolverOverrides()
    padded = pad_with_dummies(instance)

    state = meo.require_converged(
        meo.meo_iterate(
            padded,
            eps=ov.eps,
            delta=ov.delta,
            gamma=ov.damping,
            tol=ov.tol if ov.tol is not None else leo.DEFAULT_TOL,
            max_iter=ov.max_iter if ov.max_iter is not None else leo.DEFAULT_MAX_ITER,
            seed=ov.seed if ov.seed is not None else 0,
            backend=backend,
        )
    )

    try:
        snapped, betas = _certify_match(padded, state)
    except HandoffError:
        # Same knife-edge as the single-school case: shares like 2/3 make
        # the dyadic snap land off the rank threshold; rebuild over coarse
        # denominators from the final allocation first, then the averages.
        sources = [state.z, state.x.T.copy()]
        if state.z_avg is not None:
            sources.append(state.z_avg)
        if state.x_avg is not None:
            sources.append(state.x_avg.T.copy())
        polished = meo.polish_market(padded, sources, state.eps, state.delta)
        if polished is None:
            raise
        state = meo._ladder_market_state(
            padded, polished, state.eps, state.delta, state.gamma, state.tol,
            state.iterations, state.restarts, state.seed, backend,
        )
        snapped, betas = _certify_match(padded, state)

    rounding = round_matching(snapped, padded)
    adj = adjusted_instance(padded, rounding.alpha_prime, rounding.c_prime)
    assert_matching_feasible(
        adj,
        rounding.matching,
        capacities=[rounding.c_prime[s.label] for s in padded.schools],
    )
    verdict = check_stable(
        adj,
        rounding.matching,
        betas,
        capacities=[rounding.c_prime[s.label] for s in padded.schools],
    )
    return MatchResult(
        instance=padded,
        matching=rounding.matching,
        betas=betas,
        alpha_prime=rounding.alpha_prime,
        c_prime=rounding.c_prime,
        verdict=verdict,
        fractional=snapped,
        state=state,
        deletions=rounding.deletions,
    )
