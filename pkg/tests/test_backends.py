"""Compiled and NumPy kernels must agree on the same inputs."""

import numpy as np
import pytest

from committee_match._kernels import available_backends, get_backend

pytestmark = pytest.mark.skipif(
    "compiled" not in available_backends(),
    reason="compiled kernels not built",
)


@pytest.fixture(scope="module")
def backends():
    return get_backend("python"), get_backend("compiled")


def test_demands_bitwise_equal(backends):
    ref, fast = backends
    rng = np.random.default_rng(1)
    for _ in range(40):
        agents, n = int(rng.integers(1, 6)), int(rng.integers(2, 30))
        prices = rng.uniform(0, 1, (agents, n))
        pref = np.array([rng.permutation(n) for _ in range(agents)], dtype=np.int64)
        eps = float(rng.choice([0.5, 0.25, 0.125, 0.1]))
        floor = float(rng.choice([0.0, 0.05]))
        y1, e1 = ref.demands(prices, pref, eps, floor)
        y2, e2 = fast.demands(prices, pref, eps, floor)
        assert np.array_equal(y1, y2)
        assert np.array_equal(e1, e2)


def test_greedy_bitwise_equal(backends):
    ref, fast = backends
    rng = np.random.default_rng(2)
    for _ in range(60):
        n = int(rng.integers(1, 40))
        values = rng.uniform(0, 1, n)
        if rng.random() < 0.3:  # force exact ties
            values[rng.integers(0, n, size=min(n, 3))] = 0.5
        cap = int(rng.integers(1, n + 1))
        assert np.array_equal(ref.greedy_fill(values, cap), fast.greedy_fill(values, cap))


def test_leo_run_trajectories_agree(backends):
    ref, fast = backends
    rng = np.random.default_rng(3)
    for _ in range(8):
        K, n = int(rng.integers(1, 5)), int(rng.integers(3, 18))
        pref = np.array([rng.permutation(n) for _ in range(K)], dtype=np.int64)
        cap = int(rng.integers(1, n + 1))
        alphas = rng.integers(1, cap + 1, K).astype(float)
        p0 = np.zeros((K, n))
        o1 = ref.leo_run(pref, alphas, p0, cap, 0.25, 0.01, 1e-7, 2000)
        o2 = fast.leo_run(pref, alphas, p0, cap, 0.25, 0.01, 1e-7, 2000)
        assert o1[5] == o2[5]  # iteration count
        for a, b in zip(o1[:5], o2[:5]):
            assert np.allclose(np.asarray(a), np.asarray(b), atol=1e-12)


def test_meo_run_trajectories_agree(backends):
    ref, fast = backends
    rng = np.random.default_rng(4)
    for _ in range(5):
        m, n = int(rng.integers(2, 4)), int(rng.integers(4, 12))
        counts = rng.integers(1, 3, m)
        K = int(counts.sum())
        offsets = np.concatenate(([0], np.cumsum(counts)[:-1])).astype(np.int64)
        member_school = np.repeat(np.arange(m), counts).astype(np.int64)
        caps = rng.integers(1, 3, m).astype(np.int64)
        while caps.sum() > n:
            caps[caps.argmax()] -= 1
        stud_pref = np.array([rng.permutation(m) for _ in range(n)], dtype=np.int64)
        member_pref = np.array([rng.permutation(n) for _ in range(K)], dtype=np.int64)
        alphas = np.array([float(rng.integers(1, caps[member_school[k]] + 1))
                           for k in range(K)])
        q0 = np.zeros((n, m))
        p0 = np.full((K, n), 0.05)
        args = (stud_pref, member_pref, member_school, offsets, alphas,
                q0, p0, caps, 1 / 32, 0.05, 0.005, 1e-7, 1500)
        o1 = ref.meo_run(*args)
        o2 = fast.meo_run(*args)
        assert o1[8] == o2[8]  # iteration count
        for a, b in zip(o1[:8], o2[:8]):
            assert np.allclose(np.asarray(a), np.asarray(b), atol=1e-12)


def test_solver_results_agree_across_backends():
    from committee_match.formats import instance_from_labels
    from committee_match.solve import solve_single

    rng = np.random.default_rng(5)
    for seed in range(6):
        n = int(rng.integers(4, 14))
        c = int(rng.integers(1, min(6, n) + 1))
        labs = [f"s{i}" for i in range(n)]
        committee = [
            {"id": f"k{j}", "alpha": int(rng.integers(1, c + 1)),
             "ranking": list(rng.permutation(labs))}
            for j in range(int(rng.integers(1, 4)))
        ]
        inst = instance_from_labels(
            {lab: ["h"] for lab in labs},
            [{"id": "h", "capacity": c, "committee": committee}],
        )
        fast = solve_single(inst, backend="compiled")
        slow = solve_single(inst, backend="python")
        assert fast.selected == slow.selected
        assert fast.beta == slow.beta
        assert fast.alpha_prime == slow.alpha_prime
