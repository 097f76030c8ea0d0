"""Cross-cutting scenarios: doubled markets, projections, edge regimes."""

import numpy as np
import pytest

from committee_match import cli as cli_mod
from committee_match.formats import instance_from_labels
from committee_match.generators import AlphaMode, generate_instance
from committee_match.model import Matching
from committee_match.oracle import enumerate_stable, min_beta
from committee_match.solve import single_school_instance, solve_single
from committee_match.verify import blocking_pairs, check_stable


@pytest.fixture
def doubled_market():
    """Two copies of the two-ranking school competing over six students."""
    students = {lab: ["hA", "hB"] for lab in ["a", "b", "c"]}
    students.update({lab: ["hB", "hA"] for lab in ["d", "e", "f"]})
    order_one = ["a", "b", "c", "d", "e", "f"]
    order_two = ["a", "c", "b", "d", "f", "e"]
    mirrored_one = ["d", "e", "f", "a", "b", "c"]
    mirrored_two = ["d", "f", "e", "a", "c", "b"]
    return instance_from_labels(
        students,
        [
            {"id": "hA", "capacity": 2, "committee": [
                {"id": "A1", "alpha": 1, "ranking": order_one},
                {"id": "A2", "alpha": 1, "ranking": order_two},
            ]},
            {"id": "hB", "capacity": 2, "committee": [
                {"id": "B1", "alpha": 1, "ranking": mirrored_one},
                {"id": "B2", "alpha": 1, "ranking": mirrored_two},
            ]},
        ],
    )


class TestDoubledMarket:
    def test_misassignment_is_blocked(self, doubled_market):
        # swap the halves: each school gets the students who prefer the
        # other one and whom its committee ranks at the bottom.
        swapped = Matching(assignment=(1, 1, None, 0, 0, None))
        pairs = blocking_pairs(doubled_market, swapped, [0, 0])
        assert pairs
        verdict = check_stable(doubled_market, swapped, [0, 0])
        assert not verdict.ok

    def test_oracle_confirms_natural_split(self, doubled_market):
        stable = enumerate_stable(doubled_market, [0, 0])
        assert stable, "the doubled market should have a stable matching"
        natural = Matching(assignment=(0, 0, None, 1, 1, None))
        swapped = Matching(assignment=(1, 1, None, 0, 0, None))
        assert natural.assignment in [m.assignment for m in stable]
        assert swapped.assignment not in [m.assignment for m in stable]


class TestSingleSchoolProjection:
    def test_solve_single_on_one_school_of_a_market(self, doubled_market):
        from committee_match.oracle import enumerate_acceptable

        result = solve_single(doubled_market, "hA")
        assert result.school_label == "hA"
        assert result.verdict.ok
        # both members rank a first, so every acceptable pair contains a
        assert "a" in result.selected_labels()
        school = result.instance.schools[0]
        adjusted = school.with_alphas(
            [result.alpha_prime[m.label] for m in school.committee]
        )
        rows = enumerate_acceptable(adjusted, range(result.instance.n_students))
        match = [w for s, w in rows if s == frozenset(result.selected)]
        assert match and match[0].lo <= result.beta <= match[0].hi

    def test_projection_requires_label_on_markets(self, doubled_market):
        from committee_match.errors import ValidationError

        with pytest.raises(ValidationError, match="school label"):
            single_school_instance(doubled_market, None)

    def test_projection_keeps_student_identity(self, doubled_market):
        sub = single_school_instance(doubled_market, "hB")
        assert [s.label for s in sub.students] == [
            s.label for s in doubled_market.students
        ]
        assert sub.schools[0].label == "hB"
        assert all(s.order == (0,) for s in sub.students)


class TestSingleSeatRegime:
    def test_min_beta_below_committee_size(self):
        # With one seat and rank parameter 1, the top candidate of any
        # member's ranking is approved by everyone when selected, while
        # every rejected candidate loses at least that member: the oracle
        # minimum never reaches the committee size.
        for trial in range(25):
            rng = np.random.Generator(
                np.random.PCG64(np.random.SeedSequence([trial, 1300]))
            )
            n = int(rng.integers(2, 8))
            k = int(rng.integers(1, 6))
            inst = generate_instance((1300, trial), n, 1, k, 1, AlphaMode("fixed", 1))
            value = min_beta(inst.schools[0], range(n))
            assert value <= k - 1 if n > 1 else value == 0


class TestEdgeRegimes:
    def test_fractional_alpha_end_to_end(self):
        inst = instance_from_labels(
            {lab: ["h"] for lab in "abcde"},
            [{"id": "h", "capacity": 2, "committee": [
                {"id": "k1", "alpha": "3/2", "ranking": ["a", "b", "c", "d", "e"]},
                {"id": "k2", "alpha": "1/2", "ranking": ["e", "d", "c", "b", "a"]},
            ]}],
        )
        result = solve_single(inst)
        assert result.verdict.ok
        school = result.instance.schools[0]
        for member in school.committee:
            assert abs(result.alpha_prime[member.label] - member.alpha) \
                <= 2 * result.beta

    def test_singleton_instance(self):
        inst = instance_from_labels(
            {"only": ["h"]},
            [{"id": "h", "capacity": 1, "committee": [
                {"id": "k", "alpha": 1, "ranking": ["only"]}]}],
        )
        result = solve_single(inst)
        assert result.selected_labels() == ("only",)
        assert result.verdict.ok

    def test_dummies_fill_oversized_school(self):
        inst = instance_from_labels(
            {"a": ["h"], "b": ["h"]},
            [{"id": "h", "capacity": 4, "committee": [
                {"id": "k", "alpha": 4, "ranking": ["a", "b"]}]}],
        )
        result = solve_single(inst)
        assert result.verdict.ok
        labels = set(result.selected_labels())
        assert {"a", "b"} <= labels and len(labels) == 4

    def test_adversarial_single_seat_committees(self):
        for trial in range(10):
            inst = generate_instance((1400, trial), 12, 1, 7, 1, AlphaMode("fixed", 1))
            result = solve_single(inst)
            assert result.verdict.ok
            assert result.beta <= 7  # ceiling: committee size over one seat

    def test_market_solver_output_in_oracle_enumeration(self):
        from committee_match.solve import adjusted_instance, solve_match

        for trial in range(6):
            inst = generate_instance((1600, trial), 5, 2, 1, 2, AlphaMode("uniform"))
            result = solve_match(inst)
            assert result.verdict.ok
            adj = adjusted_instance(
                result.instance, result.alpha_prime, result.c_prime
            )
            stable = enumerate_stable(adj, result.betas)
            assert result.matching.assignment in [
                m.assignment for m in stable
            ], trial


class TestCliEdges:
    def test_bad_alpha_mode_is_exit_3(self, tmp_path):
        assert cli_mod.main(["gen", "-n", "4", "-c", "2",
                             "--alpha-mode", "nonsense"]) == 3

    def test_solve_single_school_flag(self, tmp_path):
        import json

        from committee_match.formats import instance_to_dict

        path = tmp_path / "market.json"
        inst = generate_instance(5, 8, 2, 1, 2, AlphaMode("uniform"))
        path.write_text(json.dumps(instance_to_dict(inst)))
        out = tmp_path / "sol.json"
        assert cli_mod.main([
            "solve-single", str(path), "--school", "h1", "-o", str(out)
        ]) == 0
        payload = json.loads(out.read_text())
        assert payload["school"] == "h1"
        assert cli_mod.main(["verify", str(path), str(out)]) == 0

    def test_solve_single_without_school_on_market_is_exit_3(self, tmp_path):
        import json

        from committee_match.formats import instance_to_dict

        path = tmp_path / "market.json"
        inst = generate_instance(5, 8, 2, 1, 2, AlphaMode("uniform"))
        path.write_text(json.dumps(instance_to_dict(inst)))
        assert cli_mod.main(["solve-single", str(path)]) == 3
