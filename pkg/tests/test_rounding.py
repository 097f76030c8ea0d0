from fractions import Fraction

import numpy as np
import pytest

from committee_match import rounding
from committee_match.errors import BoundViolation, Infeasible
from committee_match.formats import instance_from_labels
from committee_match.model import FractionalAssignment, pad_with_dummies
from committee_match.rounding import (
    LinearRow,
    LPSystem,
    lp_vertex,
    round_matching,
    round_single,
)
from committee_match.solve import solve_match, solve_single
from committee_match.verify import check_acceptable, check_stable

F = Fraction


def system(n_vars, rows, witness):
    return LPSystem(n_vars=n_vars, rows=rows, witness=[F(v) for v in witness])


class TestLpVertex:
    def test_single_point_polytope_returns_it(self):
        sys_ = system(
            1,
            [LinearRow(vars={0}, lo=F(1, 2), hi=F(1, 2), kind="capacity",
                       key="h", delete_at=None)],
            [F(1, 2)],
        )
        assert lp_vertex(sys_) == [F(1, 2)]

    def test_capacity_only_system_is_integral(self):
        sys_ = system(
            4,
            [LinearRow(vars={0, 1, 2, 3}, lo=F(2), hi=F(2), kind="capacity",
                       key="h", delete_at=None)],
            [F(1, 2)] * 4,
        )
        x = lp_vertex(sys_)
        assert sorted(x) == [0, 0, 1, 1]

    def test_three_var_interval_system(self):
        # Total mass 2 with x0 + x1 pinned to 1: vertices are (1,0,1), (0,1,1).
        sys_ = system(
            3,
            [
                LinearRow(vars={0, 1, 2}, lo=F(2), hi=F(2), kind="capacity",
                          key="h", delete_at=None),
                LinearRow(vars={0, 1}, lo=F(1), hi=F(1), kind="committee",
                          key="k", delete_at=None),
            ],
            [F(1, 2), F(1, 2), F(1)],
        )
        x = lp_vertex(sys_)
        assert x in ([F(1), F(0), F(1)], [F(0), F(1), F(1)])
        assert sum(1 for v in x if v in (0, 1)) >= 2

    def test_integral_point_round_trips(self):
        sys_ = system(
            3,
            [LinearRow(vars={0, 1, 2}, lo=F(2), hi=F(2), kind="capacity",
                       key="h", delete_at=None)],
            [F(1), F(0), F(1)],
        )
        assert lp_vertex(sys_) == [F(1), F(0), F(1)]

    def test_infeasible_witness_is_rejected(self):
        sys_ = system(
            2,
            [LinearRow(vars={0, 1}, lo=F(2), hi=F(2), kind="capacity",
                       key="h", delete_at=None)],
            [F(1, 2), F(1, 2)],
        )
        with pytest.raises(Infeasible):
            lp_vertex(sys_)

    def test_deterministic(self):
        rows = [
            LinearRow(vars={0, 1, 2, 3}, lo=F(2), hi=F(2), kind="capacity",
                      key="h", delete_at=None),
            LinearRow(vars={1, 2}, lo=F(0), hi=F(1), kind="committee",
                      key="k", delete_at=None),
        ]
        def build():
            return system(4, [LinearRow(r.vars.copy(), r.lo, r.hi, r.kind, r.key,
                                        r.delete_at) for r in rows],
                          [F(1, 2)] * 4)
        assert lp_vertex(build()) == lp_vertex(build())


class TestRoundSingle:
    def test_identity_on_integral_input(self, two_ranking_instance):
        school = two_ranking_instance.schools[0]
        result = round_single([F(1), F(1), F(0)], school, 0)
        assert result.values.row(0) == (1, 1, 0)
        assert all(v == m.alpha for m, v in
                   ((m, result.alpha_prime[m.label]) for m in school.committee))

    def test_paper_fractional_example(self, two_ranking_instance):
        school = two_ranking_instance.schools[0]
        result = round_single([F(1), F(1, 2), F(1, 2)], school, 0)
        row = result.values.row(0)
        selected = {i for i, v in enumerate(row) if v == 1}
        assert selected in ({0, 1}, {0, 2})
        for member in school.committee:
            assert result.alpha_prime[member.label] == member.alpha
        assert check_acceptable(school, {0, 1, 2}, selected, 0).ok

    def test_rejects_wrong_mass(self, two_ranking_instance):
        school = two_ranking_instance.schools[0]
        with pytest.raises(Infeasible):
            round_single([F(1), F(1, 2), F(0)], school, 0)

    def test_bound_violation_raised_when_drift_check_fails(
        self, two_ranking_instance, monkeypatch
    ):
        school = two_ranking_instance.schools[0]
        monkeypatch.setattr(
            rounding,
            "_adjusted_alphas_single",
            lambda z, zp, s: {m.label: m.alpha + 999 for m in s.committee},
        )
        with pytest.raises(BoundViolation):
            round_single([F(1), F(1, 2), F(1, 2)], school, 0)

    def test_random_instances_respect_drift_bound(self):
        # 12 students, capacity 5, three members: solver output rounds with
        # |alpha' - alpha| <= 2*beta on every seed.
        for seed in range(12):
            rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 21])))
            labs = [f"s{i}" for i in range(12)]
            committee = [
                {"id": f"k{j}", "alpha": int(rng.integers(1, 6)),
                 "ranking": list(rng.permutation(labs))}
                for j in range(3)
            ]
            inst = instance_from_labels(
                {lab: ["h"] for lab in labs},
                [{"id": "h", "capacity": 5, "committee": committee}],
            )
            result = solve_single(inst)
            school = result.instance.schools[0]
            for member in school.committee:
                drift = abs(result.alpha_prime[member.label] - member.alpha)
                assert drift <= 2 * result.beta
            assert result.verdict.ok


class TestRoundMatching:
    def test_identity_on_integral_matching(self, aligned_market_instance):
        inst = pad_with_dummies(aligned_market_instance)
        z = FractionalAssignment(rows=((F(1), F(0)), (F(0), F(1))))
        result = round_matching(z, inst)
        assert result.matching.assignment == (0, 1)
        assert result.c_prime == {"h1": 1, "h2": 1}
        for _, member in inst.members():
            assert result.alpha_prime[member.label] == member.alpha

    def test_half_split_market_rounds_to_permutation(self):
        inst = pad_with_dummies(instance_from_labels(
            {"s1": ["h1", "h2"], "s2": ["h1", "h2"]},
            [
                {"id": "h1", "capacity": 1, "committee": [
                    {"id": "a1", "alpha": 1, "ranking": ["s1", "s2"]}]},
                {"id": "h2", "capacity": 1, "committee": [
                    {"id": "a2", "alpha": 1, "ranking": ["s1", "s2"]}]},
            ],
        ))
        z = FractionalAssignment(
            rows=((F(1, 2), F(1, 2)), (F(1, 2), F(1, 2)))
        )
        result = round_matching(z, inst)
        assert sorted(v for v in result.matching.assignment) == [0, 1]
        # fully assigned students stay assigned
        assert all(h is not None for h in result.matching.assignment)
        assert check_stable(
            inst.__class__(
                students=inst.students,
                schools=tuple(
                    s.with_alphas([result.alpha_prime[m.label] for m in s.committee])
                    for s in inst.schools
                ),
            ),
            result.matching,
            [1, 1],
        ).ok

    def test_random_markets_respect_bounds(self):
        for seed in range(8):
            rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 22])))
            m = int(rng.integers(2, 4))
            n = int(rng.integers(m, 16))
            labs = [f"s{i}" for i in range(n)]
            slabs = [f"h{j}" for j in range(m)]
            students = {l: list(rng.permutation(slabs)) for l in labs}
            schools = []
            for j in range(m):
                c = int(rng.integers(1, 5))
                committee = [{"id": f"h{j}k{t}", "alpha": int(rng.integers(1, c + 1)),
                              "ranking": list(rng.permutation(labs))}
                             for t in range(int(rng.integers(1, 4)))]
                schools.append({"id": f"h{j}", "capacity": c, "committee": committee})
            inst = instance_from_labels(students, schools)
            result = solve_match(inst)
            for school in result.instance.schools:
                k = len(school.committee)
                assert abs(result.c_prime[school.label] - school.capacity) <= 2 * k + 1
                for member in school.committee:
                    drift = abs(result.alpha_prime[member.label] - member.alpha)
                    assert drift <= 2 * k + 2
            assert result.verdict.ok
            # integral entries of the fractional input survive rounding
            frac = result.fractional
            for h in range(result.instance.n_schools):
                for i in range(result.instance.n_students):
                    v = frac.rows[h][i]
                    if v in (0, 1):
                        assigned = result.matching.assignment[i] == h
                        assert assigned == (v == 1)
