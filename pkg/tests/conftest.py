"""Shared fixtures: the small worked instances used throughout the suite."""

import pytest

from committee_match.formats import instance_from_labels


@pytest.fixture
def two_ranking_instance():
    """Two members, capacity 2, both ranking a first; pinned outputs
    {a,b} / {a,c} at threshold 0."""
    return instance_from_labels(
        students={"a": ["h"], "b": ["h"], "c": ["h"]},
        schools=[
            {
                "id": "h",
                "capacity": 2,
                "committee": [
                    {"id": "k1", "alpha": 1, "ranking": ["a", "b", "c"]},
                    {"id": "k2", "alpha": 1, "ranking": ["a", "c", "b"]},
                ],
            }
        ],
    )


@pytest.fixture
def complementarity_instance():
    """Five members over candidates a,b,c,d; admitting d flips c from
    rejected to selected (the complementarity fixture)."""
    return instance_from_labels(
        students={"a": ["h"], "b": ["h"], "c": ["h"], "d": ["h"]},
        schools=[
            {
                "id": "h",
                "capacity": 2,
                "committee": [
                    {"id": "k1", "alpha": 1, "ranking": ["d", "a", "b", "c"]},
                    {"id": "k2", "alpha": 1, "ranking": ["d", "a", "b", "c"]},
                    {"id": "k3", "alpha": 1, "ranking": ["d", "b", "a", "c"]},
                    {"id": "k4", "alpha": 1, "ranking": ["d", "b", "a", "c"]},
                    {"id": "k5", "alpha": 1, "ranking": ["c", "d", "a", "b"]},
                ],
            }
        ],
    )


@pytest.fixture
def complementarity_small_pool_instance():
    """Same committee restricted to the pool {a,b,c} (d removed)."""
    return instance_from_labels(
        students={"a": ["h"], "b": ["h"], "c": ["h"]},
        schools=[
            {
                "id": "h",
                "capacity": 2,
                "committee": [
                    {"id": "k1", "alpha": 1, "ranking": ["a", "b", "c"]},
                    {"id": "k2", "alpha": 1, "ranking": ["a", "b", "c"]},
                    {"id": "k3", "alpha": 1, "ranking": ["b", "a", "c"]},
                    {"id": "k4", "alpha": 1, "ranking": ["b", "a", "c"]},
                    {"id": "k5", "alpha": 1, "ranking": ["c", "a", "b"]},
                ],
            }
        ],
    )


@pytest.fixture
def condorcet_cycle_instance():
    """Three-member cycle over a,b,c with capacity 1; min feasible
    threshold is 2."""
    return instance_from_labels(
        students={"a": ["h"], "b": ["h"], "c": ["h"]},
        schools=[
            {
                "id": "h",
                "capacity": 1,
                "committee": [
                    {"id": "k1", "alpha": 1, "ranking": ["a", "b", "c"]},
                    {"id": "k2", "alpha": 1, "ranking": ["b", "c", "a"]},
                    {"id": "k3", "alpha": 1, "ranking": ["c", "a", "b"]},
                ],
            }
        ],
    )


@pytest.fixture
def aligned_market_instance():
    """2x2 market where everyone agrees; the unique stable matching is
    assortative (s1 to h1, s2 to h2)."""
    return instance_from_labels(
        students={"s1": ["h1", "h2"], "s2": ["h1", "h2"]},
        schools=[
            {
                "id": "h1",
                "capacity": 1,
                "committee": [{"id": "h1k", "alpha": 1, "ranking": ["s1", "s2"]}],
            },
            {
                "id": "h2",
                "capacity": 1,
                "committee": [{"id": "h2k", "alpha": 1, "ranking": ["s1", "s2"]}],
            },
        ],
    )
