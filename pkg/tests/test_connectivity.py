"""Connectivity drivers and their subroutines: capped neighborhood expansion
against BFS-ball oracles, budgeted 2-hop expansion, inter/intra-level
contraction semantics, clique retirement, full-driver equivalence with a
union-find oracle, level/budget bookkeeping, determinism, and spanning-forest
extraction from finished contraction logs."""

import random
from math import ceil, isqrt, log2

import pytest

from mpcgraph.connectivity import (
    CERT_MIN_POOL,
    AndoniStats,
    BehnezhadStats,
    LevelState,
    connect2hops,
    connectivity_andoni,
    connectivity_behnezhad,
    expand_to_degree,
    relabel_inter_level,
    relabel_intra_level,
)
from mpcgraph.graphstore import (
    labeling_from_log,
    load_graph,
    num_edges,
    num_vertices,
    spanning_forest,
)
from mpcgraph.oracle import UnionFind, components, diameter_estimate

from corpus import (
    binary_tree,
    cycle_graph,
    disjoint_paths,
    gnm_graph,
    grid_graph,
    make_cluster,
    path_graph,
    relabel_shuffled,
    star_graph,
)

BOTH_DRIVERS = pytest.mark.parametrize(
    "driver", [connectivity_andoni, connectivity_behnezhad],
    ids=["andoni", "behnezhad"])


def driver_cluster(edges, singles=(), space_const=8, global_const=16):
    verts = set(singles) | {x for e in edges for x in e}
    return make_cluster(max(verts, default=1), max(len(edges), 1),
                        delta=1.0, space_const=space_const,
                        global_const=global_const)


def run_driver(driver, edges, singles=(), chi=4, **cfg):
    cluster = driver_cluster(edges, singles, **cfg)
    g, log = load_graph(cluster, edges, singletons=singles)
    labels, stats = driver(g, log, chi=chi)
    return labels, stats, log, cluster


def clique(ids):
    ids = sorted(ids)
    return [(u, v) for i, u in enumerate(ids) for v in ids[i + 1:]]


def flat_state(vertices, budget, cap=None):
    vs = sorted(vertices)
    return LevelState(level={v: 0 for v in vs},
                      budget={v: budget for v in vs},
                      betas=[budget], cap=cap or max(budget, 2))


def ball_sizes(edges, radius):
    """|B(v, radius)| - 1 for every vertex, by BFS."""
    adj = {}
    for u, v in edges:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    out = {}
    for s in adj:
        seen = {s}
        frontier = [s]
        for _ in range(radius):
            frontier = [w for x in frontier for w in adj[x] if w not in seen
                        or seen.add(w)]
            nxt = []
            for x in frontier:
                for w in adj[x]:
                    if w not in seen:
                        seen.add(w)
                        nxt.append(w)
            frontier = nxt
        out[s] = len(seen) - 1
    return out


def gathered_ksets(cluster, store="_kadj"):
    ks = {}
    for v, u, _eid in cluster.gather(store):
        ks.setdefault(v, set()).add(u)
    return ks


# --------------------------------------------------------------------------
# capped neighborhood expansion


def test_expand_clique_already_complete():
    edges = clique(range(1, 9))
    cluster = driver_cluster(edges)
    g, log = load_graph(cluster, edges)
    before = num_edges(g)
    squarings = expand_to_degree(g, log, b=8)
    assert squarings == 1  # a single no-growth check
    assert num_edges(g) == before


def test_expand_path9_learns_whole_component():
    edges = path_graph(9)
    cluster = driver_cluster(edges)
    g, log = load_graph(cluster, edges)
    squarings = expand_to_degree(g, log, b=8)
    # doubling reach: 2^4 > 9, so at most 4 growth rounds + 1 check
    assert squarings <= 5
    ks = gathered_ksets(cluster)
    comp = set(range(1, 10))
    for v in comp:
        assert ks[v] == comp - {v}


def test_expand_two_triangles_never_crosses():
    edges = clique([1, 2, 3]) + clique([11, 12, 13])
    cluster = driver_cluster(edges)
    g, log = load_graph(cluster, edges)
    expand_to_degree(g, log, b=5)
    ks = gathered_ksets(cluster)
    for v in (1, 2, 3):
        assert ks[v] == {1, 2, 3} - {v}
    for v in (11, 12, 13):
        assert ks[v] == {11, 12, 13} - {v}
    labels = components(edges)
    for u, v, _eid in cluster.gather(g.edges):
        assert labels[u] == labels[v]


@pytest.mark.parametrize("n,m,seed", [(24, 30, 0), (40, 44, 1), (32, 96, 2)])
def test_expand_learns_b_or_component(n, m, seed):
    edges = gnm_graph(n, m, seed=seed)
    cluster = driver_cluster(edges)
    g, log = load_graph(cluster, edges)
    b = 4
    expand_to_degree(g, log, b=b)
    labels = components(edges)
    comp_size = {}
    for v, lab in labels.items():
        comp_size[lab] = comp_size.get(lab, 0) + 1
    ks = gathered_ksets(cluster)
    for v, lab in labels.items():
        want = min(b, comp_size[lab] - 1)
        assert len(ks.get(v, ())) >= want
        assert all(labels[u] == lab for u in ks.get(v, ()))
    for u, v, _eid in cluster.gather(g.edges):
        assert labels[u] == labels[v]


def test_expand_rejects_zero_budget():
    cluster = driver_cluster([(1, 2)])
    g, log = load_graph(cluster, [(1, 2)])
    with pytest.raises(ValueError):
        expand_to_degree(g, log, b=0)


# --------------------------------------------------------------------------
# budgeted 2-hop expansion


def test_connect2hops_isolated_edge_unchanged():
    cluster = driver_cluster([(1, 2)])
    g, log = load_graph(cluster, [(1, 2)])
    added = connect2hops(g, log, flat_state([1, 2], budget=2))
    assert added == 0
    assert num_edges(g) == 1


def test_connect2hops_path3_adds_far_edge():
    cluster = driver_cluster(path_graph(3))
    g, log = load_graph(cluster, path_graph(3))
    added = connect2hops(g, log, flat_state([1, 2, 3], budget=2))
    assert added >= 1
    pairs = {(u, v) for u, v, _eid in g.cluster.gather(g.edges)}
    assert (1, 3) in pairs


def test_connect2hops_budget_one_is_noop():
    # every vertex already knows one neighbor, so nobody has room
    cluster = driver_cluster(path_graph(5))
    g, log = load_graph(cluster, path_graph(5))
    added = connect2hops(g, log, flat_state(range(1, 6), budget=1))
    assert added == 0


def test_connect2hops_squares_tree_to_clique():
    random.seed(5)
    n = 16
    edges = [(random.randrange(1, i), i) for i in range(2, n + 1)]
    d = diameter_estimate(edges)
    cluster = driver_cluster(edges, space_const=64, global_const=64)
    g, log = load_graph(cluster, edges)
    state = flat_state(range(1, n + 1), budget=n, cap=n)
    for _ in range(ceil(log2(d))):
        connect2hops(g, log, state)
    assert num_edges(g) == n * (n - 1) // 2
    labels = components(edges)
    for u, v, _eid in cluster.gather(g.edges):
        assert labels[u] == labels[v]


# --------------------------------------------------------------------------
# inter-level contraction


def test_inter_level_uniform_levels_noop():
    cluster = driver_cluster(path_graph(6))
    g, log = load_graph(cluster, path_graph(6))
    moved = relabel_inter_level(g, log, flat_state(range(1, 7), budget=2))
    assert moved == 0
    assert num_vertices(g) == 6
    assert not log.entries


def test_inter_level_single_edge():
    cluster = driver_cluster([(1, 2)])
    g, log = load_graph(cluster, [(1, 2)])
    state = flat_state([1, 2], budget=2)
    state.level[2] = 1
    moved = relabel_inter_level(g, log, state)
    assert moved == 1
    assert num_vertices(g) == 1
    assert log.entries == [(1, 2, 0)]
    assert 1 not in state.level and 2 in state.level


def test_inter_level_star_collapses_to_center():
    edges = star_graph(7)
    cluster = driver_cluster(edges)
    g, log = load_graph(cluster, edges)
    state = flat_state(range(1, 9), budget=2)
    state.level[1] = 1
    moved = relabel_inter_level(g, log, state)
    assert moved == 7
    assert num_vertices(g) == 1
    assert {c for c, _p, _w in log.entries} == set(range(2, 9))
    assert {p for _c, p, _w in log.entries} == {1}


def test_inter_level_chain_flattens():
    # levels 0 < 1 < 2 along a path; both lower vertices contract, and the
    # pointer chain 1 -> 2 -> 3 resolves within one pass
    cluster = driver_cluster(path_graph(3))
    g, log = load_graph(cluster, path_graph(3))
    state = flat_state([1, 2, 3], budget=2)
    state.level.update({2: 1, 3: 2})
    moved = relabel_inter_level(g, log, state)
    assert moved == 2
    assert num_vertices(g) == 1
    assert labeling_from_log(log) == {1: 1, 2: 1, 3: 1}


# --------------------------------------------------------------------------
# intra-level saturation and leader contraction


def test_intra_level_unsaturated_noop():
    cluster = driver_cluster(path_graph(4))
    g, log = load_graph(cluster, path_graph(4))
    state = flat_state(range(1, 5), budget=5)
    contracted, promoted = relabel_intra_level(g, log, state, chi=4)
    assert (contracted, promoted) == (0, 0)
    assert num_vertices(g) == 4
    assert state.level == {v: 0 for v in range(1, 5)}


def test_intra_level_small_clique_pointer_fallback():
    beta0 = 4
    edges = clique(range(1, 2 * beta0 + 1))
    cluster = driver_cluster(edges)
    g, log = load_graph(cluster, edges)
    state = flat_state(range(1, 2 * beta0 + 1), budget=beta0, cap=64)
    contracted, promoted = relabel_intra_level(g, log, state, chi=4)
    assert contracted + num_vertices(g) == 2 * beta0
    assert num_vertices(g) < beta0
    assert promoted >= 1
    assert all(state.level[v] == 1 for v in state.level)
    assert all(state.budget[v] == state.beta(1) for v in state.budget)


def test_intra_level_large_clique_certified_leaders():
    beta0 = 8
    assert beta0 >= CERT_MIN_POOL
    n = 2 * beta0
    edges = clique(range(1, n + 1))
    cluster = driver_cluster(edges, space_const=64)
    g, log = load_graph(cluster, edges)
    state = flat_state(range(1, n + 1), budget=beta0, cap=64)
    contracted, promoted = relabel_intra_level(g, log, state, chi=4)
    assert contracted + promoted == n
    assert num_vertices(g) < beta0
    # the certified selection keeps the leader set small
    b_eff = min(beta0, 32)
    assert promoted < 2 * n * b_eff ** (-1 / 5) + 1
    assert all(state.level[v] == 1 for v in state.level)


def test_intra_level_levels_are_independent():
    low = clique(range(1, 9))
    high = clique(range(11, 19))
    edges = low + high
    cluster = driver_cluster(edges)
    g, log = load_graph(cluster, edges)
    state = flat_state(list(range(1, 9)) + list(range(11, 19)), budget=4,
                       cap=64)
    for v in range(11, 19):
        state.level[v] = 1
    contracted, promoted = relabel_intra_level(g, log, state, chi=4)
    assert contracted == 14 and promoted == 2
    for child, parent, _w in log.entries:
        assert (child < 10) == (parent < 10)
    assert state.level_histogram() == {1: 1, 2: 1}


# --------------------------------------------------------------------------
# full drivers against the union-find oracle


def test_andoni_edgeless_zero_phases():
    labels, stats, _log, _cluster = run_driver(
        connectivity_andoni, [], singles=(3, 7, 9))
    assert labels == {3: 3, 7: 7, 9: 9}
    assert stats.phases == 0
    assert isinstance(stats, AndoniStats)


def test_behnezhad_edgeless_zero_iterations():
    labels, stats, _log, _cluster = run_driver(
        connectivity_behnezhad, [], singles=(2, 4))
    assert labels == {2: 2, 4: 4}
    assert stats.iterations == 0
    assert isinstance(stats, BehnezhadStats)


def test_andoni_long_path_matches_oracle():
    edges = path_graph(1024)
    labels, stats, _log, _cluster = run_driver(connectivity_andoni, edges)
    assert labels == components(edges)
    assert stats.rounds > 0 and stats.peak_local > 0


def test_behnezhad_long_cycle_matches_oracle():
    edges = cycle_graph(4096)
    labels, stats, _log, _cluster = run_driver(connectivity_behnezhad, edges)
    assert labels == components(edges)
    assert stats.iterations >= 1


@BOTH_DRIVERS
@pytest.mark.parametrize("edges", [
    path_graph(2),
    star_graph(12),
    grid_graph(5, 7),
    binary_tree(63),
    cycle_graph(17),
    gnm_graph(64, 64, seed=11),
    gnm_graph(64, 128, seed=12),
    gnm_graph(96, 768, seed=13),
    disjoint_paths(6, 9),
    relabel_shuffled(disjoint_paths(4, 15), seed=14),
    relabel_shuffled(gnm_graph(80, 120, seed=15), seed=16),
], ids=["path2", "star", "grid", "btree", "cycle17", "gnm-sparse",
        "gnm-mid", "gnm-dense", "unions", "shuffled-unions",
        "shuffled-gnm"])
def test_driver_matches_oracle(driver, edges):
    verts = {x for e in edges for x in e}
    labels, _stats, _log, cluster = run_driver(driver, edges)
    assert labels == components(edges, vertices=verts)
    assert cluster.peak_local <= cluster.config.local_capacity
    assert cluster.peak_global <= cluster.config.global_budget


@BOTH_DRIVERS
def test_driver_dense_graph_certificate_regime(driver):
    # m/n = 64 pushes the initial budget to 8, engaging certified leader
    # election instead of the pointer fallback
    edges = gnm_graph(128, 8192, seed=7)
    labels, _stats, _log, _cluster = run_driver(driver, edges)
    assert labels == components(edges)


@BOTH_DRIVERS
def test_driver_with_singletons(driver):
    edges = [(2, 5), (5, 9)]
    labels, _stats, _log, _cluster = run_driver(driver, edges,
                                                singles=(1, 30))
    assert labels == {1: 1, 2: 2, 5: 2, 9: 2, 30: 30}


@BOTH_DRIVERS
def test_driver_deterministic(driver):
    edges = gnm_graph(72, 200, seed=21)
    first = run_driver(driver, edges)
    second = run_driver(driver, edges)
    assert first[0] == second[0]
    assert first[1].rounds == second[1].rounds
    assert first[2].entries == second[2].entries


def test_behnezhad_retires_small_cliques():
    # an isolated edge saturates nobody (degree 1 < budget), so only the
    # clique-retirement step can resolve it
    edges = [(1, 2), (7, 8), (11, 12)]
    labels, stats, _log, _cluster = run_driver(connectivity_behnezhad, edges)
    assert labels == components(edges)
    assert stats.retired_cliques == 3


def test_behnezhad_rounds_grow_with_diameter():
    short = run_driver(connectivity_behnezhad, disjoint_paths(256, 4))
    long = run_driver(connectivity_behnezhad, disjoint_paths(8, 128))
    assert short[0] == components(disjoint_paths(256, 4))
    assert long[0] == components(disjoint_paths(8, 128))
    assert long[1].rounds >= short[1].rounds


def test_behnezhad_vertex_counts_decrease():
    edges = gnm_graph(128, 256, seed=22)
    _labels, stats, _log, _cluster = run_driver(connectivity_behnezhad, edges)
    counts = stats.vertex_counts
    assert counts[-1] == 0
    assert all(a >= b for a, b in zip(counts, counts[1:]))


# --------------------------------------------------------------------------
# level/budget bookkeeping


def test_level_state_budget_rule():
    state = LevelState.fresh(range(1, 11), m=900, cap=400)
    assert state.betas[0] == isqrt(900 // 10)  # 9
    for i in range(12):
        b = state.beta(i)
        nxt = state.beta(i + 1)
        assert nxt == min(max(b, int(b * min(b, 400) ** 0.05), 2), 400)
    assert state.betas == sorted(state.betas)


def test_level_state_budget_capped():
    state = LevelState.fresh(range(1, 3), m=10 ** 6, cap=16)
    assert state.betas[0] == 16
    assert state.beta(5) == 16


def test_level_state_promote_and_drop():
    state = LevelState.fresh(range(1, 5), m=64, cap=100)
    beta0 = state.betas[0]
    state.promote(1)
    assert state.level[1] == 1 and state.level[2] == 0
    assert state.budget[1] == state.beta(1) >= beta0
    before = state.sum_squared_budgets()
    state.drop([1])
    assert 1 not in state.level and 1 not in state.budget
    assert state.sum_squared_budgets() == before - state.beta(1) ** 2
    assert state.level_histogram() == {0: 3}


# --------------------------------------------------------------------------
# spanning forests from finished runs


@BOTH_DRIVERS
def test_forest_of_tree_is_the_tree(driver):
    edges = binary_tree(31)
    labels, _stats, log, _cluster = run_driver(driver, edges)
    forest = spanning_forest(log, labels)
    assert len(forest) == 30
    assert {tuple(sorted(e)) for e in forest} == {tuple(sorted(e))
                                                  for e in edges}
    # every pair is oriented toward the component label vertex 1
    parent = dict(forest)
    for v in range(2, 32):
        hops = 0
        while v != 1:
            v = parent[v]
            hops += 1
            assert hops <= 31


@BOTH_DRIVERS
def test_forest_single_edge(driver):
    labels, _stats, log, _cluster = run_driver(driver, [(4, 9)])
    assert spanning_forest(log, labels) == [(9, 4)]


@BOTH_DRIVERS
def test_forest_random_connected_graph(driver):
    rng = random.Random(31)
    n = 1024
    edges = [(rng.randrange(1, i), i) for i in range(2, n + 1)]
    edges += gnm_graph(n, 512, seed=32)
    edges = sorted(set(edges))
    labels, _stats, log, _cluster = run_driver(driver, edges)
    assert labels == components(edges)
    forest = spanning_forest(log, labels)
    assert len(forest) == n - 1
    uf = UnionFind()
    for u, v in forest:
        uf.add(u)
        uf.add(v)
        assert uf.find(u) != uf.find(v)  # acyclic
        uf.union(u, v)


@BOTH_DRIVERS
def test_forest_of_disjoint_unions(driver):
    edges = disjoint_paths(5, 6)
    labels, _stats, log, _cluster = run_driver(driver, edges)
    forest = spanning_forest(log, labels)
    assert len(forest) == 5 * 6
    want = {tuple(sorted(e)) for e in edges}
    assert {tuple(sorted(e)) for e in forest} == want
