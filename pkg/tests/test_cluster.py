import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from soctat.cluster import (
    INPUTS_AND_GATES,
    INPUTS_ONLY,
    SINGLETON,
    ClusterConfig,
    CoreClusterer,
    CoreProfile,
    cluster_cores,
    similar_gates,
    similar_inputs,
)

SIX = [("S344", 24, 101), ("S1196", 32, 388), ("S382", 24, 99),
       ("S713", 54, 139), ("S444", 24, 119), ("S1238", 32, 428)]


def profiles(rows):
    return [CoreProfile(cid, n, g) for cid, n, g in rows]


def by_id(rows):
    return {p.core_id: p for p in profiles(rows)}


def test_input_predicate():
    p = by_id(SIX)
    assert similar_inputs(p["S344"], p["S382"])
    assert not similar_inputs(p["S344"], p["S713"])
    assert similar_inputs(p["S713"], p["S713"], ClusterConfig(eps_inputs=0))
    assert similar_inputs(p["S344"], p["S1196"], ClusterConfig(eps_inputs=8))


def test_gate_predicate():
    p = by_id(SIX)
    assert similar_gates(p["S344"], p["S444"], ClusterConfig(eps_gates_rel=0.20))
    assert not similar_gates(CoreProfile("S1196", 32, 388), CoreProfile("S820", 51, 256))
    assert similar_gates(p["S713"], p["S713"], ClusterConfig(eps_gates_rel=0.0))


def test_six_core_clustering():
    cl = cluster_cores(profiles(SIX))
    assert cl.as_sets() == [frozenset({"S344", "S382", "S444"}), frozenset({"S1196", "S1238"}),
                            frozenset({"S713"})]
    assert [c.tier for c in cl] == [INPUTS_AND_GATES, INPUTS_AND_GATES, SINGLETON]
    assert cl.export().splitlines() == [
        "cluster 1 [inputs_and_gates] : S344,S382,S444",
        "cluster 2 [inputs_and_gates] : S1196,S1238",
        "cluster 3 [singleton] : S713",
    ]
    assert cl.cluster_of("S1238") == 1


def test_single_core_and_identical_pair():
    assert [(c.members, c.tier) for c in cluster_cores([CoreProfile("a", 5, 10)])] == [(("a",), SINGLETON)]
    cl = cluster_cores([CoreProfile("a", 5, 10), CoreProfile("b", 5, 10)])
    assert [(c.members, c.tier) for c in cl] == [(("a", "b"), INPUTS_AND_GATES)]


def test_inputs_only_tier_is_flagged():
    cl = cluster_cores([CoreProfile("a", 8, 100), CoreProfile("b", 8, 500)])
    assert [(c.members, c.tier) for c in cl] == [(("a", "b"), INPUTS_ONLY)]
    assert cl.clusters[0].flagged


def test_gate_cap_splits_clusters():
    cl = cluster_cores(profiles(SIX), ClusterConfig(max_cluster_gates=220))
    assert cl.as_sets()[:2] == [frozenset({"S344", "S382"}), frozenset({"S444"})]
    for c in cl:
        if len(c.members) > 1:
            assert sum(by_id(SIX)[m].n_gates for m in c.members) <= 220


def test_errors():
    with pytest.raises(ValueError):
        cluster_cores([])
    with pytest.raises(ValueError):
        cluster_cores([CoreProfile("a", 1, 1), CoreProfile("a", 2, 2)])
    with pytest.raises(ValueError):
        ClusterConfig(eps_gates_rel=1.5)
    with pytest.raises(ValueError):
        ClusterConfig(eps_inputs=-1)
    with pytest.raises(ValueError):
        CoreProfile("x", 0, 3)
    with pytest.raises(ValueError):
        CoreProfile("x", 24, 101, det_tests=22, clk_cycle=529)


core_rows = st.lists(st.tuples(st.integers(1, 40), st.integers(0, 400)), min_size=1, max_size=12)
configs = st.builds(ClusterConfig, st.integers(0, 5), st.floats(0, 1), st.one_of(st.none(), st.integers(1, 800)))


@settings(max_examples=200, deadline=None)
@given(core_rows, configs)
def test_partition_and_closure(rows, cfg):
    ps = [CoreProfile(f"c{i}", n, g) for i, (n, g) in enumerate(rows)]
    cl = cluster_cores(ps, cfg)
    members = [m for c in cl for m in c.members]
    assert sorted(members) == sorted(p.core_id for p in ps)
    p = {x.core_id: x for x in ps}
    for c in cl:
        for a, b in itertools.combinations(c.members, 2):
            assert similar_inputs(p[a], p[b], cfg)
            if c.tier == INPUTS_AND_GATES:
                assert similar_gates(p[a], p[b], cfg)
        if cfg.max_cluster_gates is not None and len(c.members) > 1:
            assert sum(p[m].n_gates for m in c.members) <= cfg.max_cluster_gates
        assert (c.tier == SINGLETON) == (len(c.members) == 1)


@settings(max_examples=100, deadline=None)
@given(core_rows, st.randoms(use_true_random=False))
def test_order_stability(rows, rnd):
    ps = [CoreProfile(f"c{i:02d}", n, g) for i, (n, g) in enumerate(rows)]
    shuffled = ps[:]
    rnd.shuffle(shuffled)
    restored = sorted(shuffled, key=lambda p: p.core_id)
    assert cluster_cores(restored).export() == cluster_cores(ps).export()


def test_zero_tolerance_gives_singletons():
    rng = random.Random(4)
    ps = [CoreProfile(f"c{i}", i + 1, rng.randint(1, 99)) for i in range(10)]
    cl = cluster_cores(ps, ClusterConfig(0, 0.0))
    assert all(c.tier == SINGLETON for c in cl) and len(cl) == 10


def test_estimator_matches_function():
    X = np.array([[n, g] for _, n, g in SIX])
    est = CoreClusterer().fit(X)
    assert est.get_params() == {"eps_inputs": 0, "eps_gates_rel": 0.20, "max_cluster_gates": None}
    assert est.labels_.tolist() == [0, 1, 0, 2, 0, 1]
    assert est.n_clusters_ == 3 and est.tiers_[2] == SINGLETON
    assert [c.tolist() for c in est.clusters()] == [[0, 2, 4], [1, 5], [3]]
    assert est.fit_predict(X).tolist() == est.labels_.tolist()


@pytest.mark.parametrize("bad", [[[1, 2, 3]], [[0, 5]], [[3, -1]], [[1.5, 2]], []])
def test_estimator_validates_input(bad):
    with pytest.raises(ValueError):
        CoreClusterer().fit(np.array(bad))
