"""Grouping cores whose input and gate counts are close, for shared testing.

Cores are visited in the given order.  The first unassigned core seeds a
cluster; other unassigned cores join if they are similar to every current
member in both input count and gate count.  A seed that finds no such
partner falls back to partners similar in input count only, and otherwise
stays a singleton.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_core_features, check_fraction, check_non_negative_int, check_positive_int

__all__ = [
    "INPUTS_AND_GATES",
    "INPUTS_ONLY",
    "SINGLETON",
    "CoreProfile",
    "ClusterConfig",
    "Cluster",
    "Clustering",
    "similar_inputs",
    "similar_gates",
    "cluster_cores",
    "CoreClusterer",
]

INPUTS_AND_GATES = "inputs_and_gates"
INPUTS_ONLY = "inputs_only"
SINGLETON = "singleton"


@dataclass(frozen=True)
class CoreProfile:
    core_id: str
    n_inputs: int
    n_gates: int
    n_pos: int = 0
    n_ffs: int = 0
    det_tests: int | None = None
    clk_cycle: int | None = None
    fc: float | None = None
    ud_faults: int | None = None

    def __post_init__(self):
        check_positive_int(self.n_inputs, "n_inputs")
        check_non_negative_int(self.n_gates, "n_gates")
        if self.clk_cycle is not None and self.det_tests is not None \
                and self.clk_cycle != self.n_inputs * self.det_tests:
            raise ValueError(f"{self.core_id}: clk_cycle {self.clk_cycle} != "
                             f"{self.n_inputs} x {self.det_tests}")


@dataclass(frozen=True)
class ClusterConfig:
    eps_inputs: int = 0
    eps_gates_rel: float = 0.20
    max_cluster_gates: int | None = None

    def __post_init__(self):
        check_non_negative_int(self.eps_inputs, "eps_inputs")
        check_fraction(self.eps_gates_rel, "eps_gates_rel")
        if self.max_cluster_gates is not None:
            check_positive_int(self.max_cluster_gates, "max_cluster_gates")


@dataclass(frozen=True)
class Cluster:
    members: tuple[str, ...]
    tier: str

    @property
    def flagged(self) -> bool:
        """Same inputs but dissimilar gate counts: shared testing may pay off less."""
        return self.tier == INPUTS_ONLY


@dataclass
class Clustering:
    clusters: list[Cluster] = field(default_factory=list)

    def __iter__(self):
        return iter(self.clusters)

    def __len__(self):
        return len(self.clusters)

    def cluster_of(self, core_id: str) -> int:
        for k, c in enumerate(self.clusters):
            if core_id in c.members:
                return k
        raise KeyError(core_id)

    def as_sets(self) -> list[frozenset]:
        return [frozenset(c.members) for c in self.clusters]

    def export(self) -> str:
        """``cluster <k> [tier] : core_id,core_id,...`` per line, k from 1."""
        return "".join(f"cluster {k} [{c.tier}] : {','.join(c.members)}\n"
                       for k, c in enumerate(self.clusters, start=1))


def similar_inputs(a: CoreProfile, b: CoreProfile, cfg: ClusterConfig | None = None) -> bool:
    cfg = cfg or ClusterConfig()
    return abs(a.n_inputs - b.n_inputs) <= cfg.eps_inputs


def similar_gates(a: CoreProfile, b: CoreProfile, cfg: ClusterConfig | None = None) -> bool:
    cfg = cfg or ClusterConfig()
    return abs(a.n_gates - b.n_gates) <= cfg.eps_gates_rel * max(a.n_gates, b.n_gates)


def _gather(seed: int, free: list[int], ok) -> list[int]:
    group = [seed]
    for j in free:
        if all(ok(j, m) for m in group):
            group.append(j)
    return group


def _split(group: list[int], gates: list[int], cap: int | None) -> list[list[int]]:
    if cap is None:
        return [group]
    chunks, cur, total = [], [], 0
    for i in group:
        if cur and total + gates[i] > cap:
            chunks.append(cur)
            cur, total = [], 0
        cur.append(i)
        total += gates[i]
    chunks.append(cur)
    return chunks


def _cluster_indices(n_inputs, n_gates, cfg: ClusterConfig) -> list[tuple[list[int], str]]:
    n = len(n_inputs)

    def inp(i, j):
        return abs(n_inputs[i] - n_inputs[j]) <= cfg.eps_inputs

    def gat(i, j):
        return abs(n_gates[i] - n_gates[j]) <= cfg.eps_gates_rel * max(n_gates[i], n_gates[j])

    assigned = [False] * n
    out = []
    for i in range(n):
        if assigned[i]:
            continue
        free = [j for j in range(i + 1, n) if not assigned[j]]
        group, tier = _gather(i, free, lambda a, b: inp(a, b) and gat(a, b)), INPUTS_AND_GATES
        if len(group) == 1:
            group, tier = _gather(i, free, inp), INPUTS_ONLY
        if len(group) == 1:
            tier = SINGLETON
        for j in group:
            assigned[j] = True
        for chunk in _split(group, list(n_gates), cfg.max_cluster_gates):
            out.append((chunk, tier if len(chunk) > 1 else SINGLETON))
    return out


def cluster_cores(profiles: list[CoreProfile], cfg: ClusterConfig | None = None) -> Clustering:
    """Partition ``profiles`` (visited in list order) into clusters."""
    if not profiles:
        raise ValueError("cluster_cores needs at least one profile")
    ids = [p.core_id for p in profiles]
    if len(set(ids)) != len(ids):
        raise ValueError("core ids must be unique")
    cfg = cfg or ClusterConfig()
    groups = _cluster_indices([p.n_inputs for p in profiles], [p.n_gates for p in profiles], cfg)
    return Clustering([Cluster(tuple(ids[i] for i in g), tier) for g, tier in groups])


class CoreClusterer(ClusterMixin, BaseEstimator):
    """Estimator wrapper: ``X`` is ``(n_cores, 2)`` with columns ``[n_inputs, n_gates]``.

    After ``fit``: ``labels_`` (cluster index per row), ``tiers_`` (tier per
    cluster) and ``n_clusters_``.
    """

    def __init__(self, eps_inputs=0, eps_gates_rel=0.20, max_cluster_gates=None):
        self.eps_inputs = eps_inputs
        self.eps_gates_rel = eps_gates_rel
        self.max_cluster_gates = max_cluster_gates

    def fit(self, X, y=None):
        X = check_core_features(X)
        cfg = ClusterConfig(self.eps_inputs, self.eps_gates_rel, self.max_cluster_gates)
        groups = _cluster_indices(X[:, 0].tolist(), X[:, 1].tolist(), cfg)
        labels = np.empty(X.shape[0], dtype=np.intp)
        for k, (g, _) in enumerate(groups):
            labels[g] = k
        self.labels_ = labels
        self.tiers_ = [tier for _, tier in groups]
        self.n_clusters_ = len(groups)
        self.n_features_in_ = 2
        return self

    def clusters(self) -> list[np.ndarray]:
        check_is_fitted(self, "labels_")
        return [np.flatnonzero(self.labels_ == k) for k in range(self.n_clusters_)]
