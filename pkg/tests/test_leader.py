"""Leader selection: coverage and size certificates, truncation, parameter
rules, and leader-driven graph contraction against a union-find oracle."""

import random

import pytest

from mpcgraph.derand import MINIMIZE, mean_trace_monotone
from mpcgraph.errors import MissingLeader, ParamsInfeasible
from mpcgraph.graphstore import load_graph, num_edges, num_vertices
from mpcgraph.hashfam import make_kwise
from mpcgraph.leader import (
    LeaderParams,
    SetSystem,
    contract_to_leaders,
    select_leaders,
)
from mpcgraph.oracle import components
from mpcgraph.reduce import _non_isolated  # noqa: F401  (shared helper form)

from corpus import make_cluster, star_graph


def desk_params(n, b, cluster):
    return LeaderParams.from_rule(n, b, cluster.config.local_capacity,
                                  k_override=4)


def covers(system, params, leaders):
    lead = set(leaders)
    return all(set(s[:params.b_eff]) & lead for s in system.sets)


def greedy_hitting_set(sets):
    """Pick the element hitting the most remaining sets until all are hit."""
    remaining = [set(s) for s in sets]
    chosen = []
    while remaining:
        counts = {}
        for s in remaining:
            for j in s:
                counts[j] = counts.get(j, 0) + 1
        best = min(counts, key=lambda j: (-counts[j], j))
        chosen.append(best)
        remaining = [s for s in remaining if best not in s]
    return sorted(chosen)


def test_universal_sets():
    n = 12
    cluster = make_cluster(n, n * n, delta=1.0)
    system = SetSystem(n, n, [range(1, n + 1)] * n)
    params = desk_params(n, n, cluster)
    leaders = select_leaders(cluster, system, params)
    assert leaders and covers(system, params, leaders)
    assert len(leaders) < 2 * n * params.b_eff ** -0.2 + 1


def test_forced_singleton():
    cluster = make_cluster(1, 1)
    system = SetSystem(1, 1, [(1,)])
    leaders = select_leaders(cluster, system, desk_params(1, 1, cluster))
    assert leaders == [1]


def test_cyclic_16_with_oracle():
    n, b = 16, 8
    cluster = make_cluster(n, n * (b + 1), delta=1.0)
    sets = [sorted({i} | {(i + d - 1) % n + 1 for d in range(1, 9)})
            for i in range(1, n + 1)]
    system = SetSystem(n, b, sets)
    params = desk_params(n, b, cluster)
    leaders = select_leaders(cluster, system, params)
    assert covers(system, params, leaders)
    bound = 2 * n * params.b_eff ** -0.2 + 1
    greedy = greedy_hitting_set([s[:params.b_eff] for s in system.sets])
    assert len(greedy) <= len(leaders) < bound


def test_random_systems_certificates():
    rng = random.Random(42)
    for trial in range(10):
        n, b = 64, 16
        cluster = make_cluster(n * (b + 1), n * (b + 1), delta=1.0)
        sets = []
        for i in range(1, n + 1):
            extra = rng.sample([j for j in range(1, n + 1) if j != i], b + 3)
            sets.append(sorted({i} | set(extra[:b - 1 + rng.randint(0, 3)])))
        system = SetSystem(n, b, sets)
        params = desk_params(n, b, cluster)
        leaders = select_leaders(cluster, system, params)
        assert covers(system, params, leaders)
        assert len(leaders) < 2 * n * params.b_eff ** -0.2 + 1


def test_deterministic_selection():
    n, b = 32, 8
    rng = random.Random(7)
    sets = [sorted({i} | set(rng.sample(range(1, n + 1), b + 2)))
            for i in range(1, n + 1)]
    runs = []
    for _ in range(2):
        cluster = make_cluster(n, n * (b + 3), delta=1.0)
        system = SetSystem(n, b, sets)
        runs.append(select_leaders(cluster, system,
                                   desk_params(n, b, cluster)))
    assert runs[0] == runs[1]


def test_trace_sink_exposes_monotone_trace():
    n, b = 20, 5
    cluster = make_cluster(n, n * (b + 1), delta=1.0)
    rng = random.Random(8)
    sets = [sorted({i} | set(rng.sample(range(1, n + 1), b)))
            for i in range(1, n + 1)]
    system = SetSystem(n, b, sets)
    params = desk_params(n, b, cluster)
    traces: list = []
    leaders = select_leaders(cluster, system, params, trace_sink=traces)
    assert leaders and covers(system, params, leaders)
    assert len(traces) == 1
    spec = make_kwise(n=n, ell=params.ell, k=params.k)
    assert traces[0][-1].prefix_len == spec.seed_bits
    assert mean_trace_monotone(traces[0], MINIMIZE, spec.seed_bits)


def test_trace_monotone_and_assignment():
    n, b = 24, 6
    cluster = make_cluster(n, n * (b + 1), delta=1.0)
    rng = random.Random(3)
    sets = [sorted({i} | set(rng.sample(range(1, n + 1), b)))
            for i in range(1, n + 1)]
    system = SetSystem(n, b, sets)
    params = desk_params(n, b, cluster)

    from mpcgraph.derand import refine
    from mpcgraph.leader import _CoverageCostOracle
    from mpcgraph.primitives import route as route_

    members = [(i, j) for i, s in enumerate(system.sets, start=1)
               for j in s[:params.b_eff]]
    cluster.scatter_input("_lmem", members)
    route_(cluster, "_lmem", lambda r: r[0] % len(cluster.machines))
    spec = make_kwise(n=n, ell=params.ell, k=params.k)
    seed, trace = refine(cluster, spec, _CoverageCostOracle(spec, n, "_lmem"))
    assert mean_trace_monotone(trace, MINIMIZE, spec.seed_bits)
    cluster.drop_store("_lmem")

    # assignment records name the smallest covering leader of each set
    cluster2 = make_cluster(n, n * (b + 1), delta=1.0)
    leaders = select_leaders(cluster2, system, params, assign_store="assign")
    assign = dict((i, lead) for i, lead in cluster2.gather("assign"))
    lead = set(leaders)
    for i, s in enumerate(system.sets, start=1):
        want = min(j for j in s[:params.b_eff] if j in lead)
        assert assign[i] == want


def test_truncation_keeps_smallest():
    n = 40
    b = 36
    cluster = make_cluster(n * (b + 1), n * (b + 1), delta=1.0)
    sets = [sorted({i} | set(range(1, b + 1)) | {n}) for i in range(1, n + 1)]
    system = SetSystem(n, b, sets)
    params = desk_params(n, b, cluster)
    assert params.b_eff == 32
    leaders = select_leaders(cluster, system, params)
    assert covers(system, params, leaders)


def test_bad_systems_rejected():
    with pytest.raises(ValueError):
        SetSystem(2, 1, [(1,)])            # wrong count
    with pytest.raises(ValueError):
        SetSystem(2, 1, [(2,), (2,)])      # 1 not in S_1
    with pytest.raises(ValueError):
        SetSystem(2, 2, [(1, 2), (2,)])    # too small
    with pytest.raises(ValueError):
        SetSystem(2, 1, [(1, 3), (2,)])    # out of range


def test_params_rule():
    p = LeaderParams.from_rule(4096, 64, local_capacity=10_000)
    assert p.b_eff == 32 and p.ell == 1 and p.k % 2 == 0 and p.k >= 4
    # default rule: 15*log2(4096)/log2(32) = 36
    assert p.k == 36
    q = LeaderParams.from_rule(4096, 64, local_capacity=10_000, k_override=4)
    assert q.k == 4
    r = LeaderParams.from_rule(100, 100, local_capacity=40)
    assert r.b_eff == 20
    assert LeaderParams.from_rule(1, 1, local_capacity=64).ell == 1


def test_paper_rule_small_instance():
    # n=16, b_eff=8 gives k = 15*4/3 = 20, tau = 20*5 = 100 bits; the smart
    # oracle still certifies coverage
    n, b = 16, 8
    cluster = make_cluster(n, n * (b + 1), delta=1.0)
    sets = [sorted({i} | {(i + d - 1) % n + 1 for d in range(1, 9)})
            for i in range(1, n + 1)]
    system = SetSystem(n, b, sets)
    params = LeaderParams.from_rule(n, b, cluster.config.local_capacity)
    assert params.k == 20
    leaders = select_leaders(cluster, system, params)
    assert covers(system, params, leaders)


def test_infeasible_params_raise():
    # p = 1/32 on pair sets: nearly every seed leaves sets uncovered
    n = 16
    sets = [sorted({i, i % n + 1}) for i in range(1, n + 1)]
    cluster = make_cluster(n, n * 3, delta=1.0)
    system = SetSystem(n, 2, sets)
    params = LeaderParams(ell=5, k=2, b_eff=2)
    with pytest.raises(ParamsInfeasible):
        select_leaders(cluster, system, params)


def test_contract_all_leaders_identity():
    cluster = make_cluster(4, 3)
    g, log = load_graph(cluster, star_graph(3))
    cluster.scatter_input("assign", [(v, v, -1) for v in range(1, 5)])
    contract_to_leaders(g, log, "assign")
    assert num_vertices(g) == 4 and num_edges(g) == 3 and not log.entries


def test_contract_star_to_center():
    cluster = make_cluster(4, 3)
    g, log = load_graph(cluster, star_graph(3))
    # eids: (1,2)=0 (1,3)=1 (1,4)=2
    cluster.scatter_input("assign",
                          [(1, 1, -1), (2, 1, 0), (3, 1, 1), (4, 1, 2)])
    contract_to_leaders(g, log, "assign")
    assert num_vertices(g) == 1 and num_edges(g) == 0
    assert sorted(log.entries) == [(2, 1, 0), (3, 1, 1), (4, 1, 2)]


def test_contract_missing_assignment():
    cluster = make_cluster(4, 3)
    g, log = load_graph(cluster, star_graph(3))
    cluster.scatter_input("assign", [(1, 1, -1), (2, 1, 0)])
    with pytest.raises(MissingLeader):
        contract_to_leaders(g, log, "assign")


def test_contract_random_quotient():
    rng = random.Random(12)
    n = 64
    edges = sorted({tuple(sorted(rng.sample(range(1, n + 1), 2)))
                    for _ in range(90)})
    cluster = make_cluster(n, len(edges), delta=1.0, global_const=12)
    g, log = load_graph(cluster, edges)
    eid_of = {e: i for i, e in enumerate(edges)}
    # leaders: every fourth vertex plus anything with no smaller neighbor
    adj = {}
    for u, v in edges:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    assign = []
    for v in range(1, n + 1):
        nbrs = sorted(adj.get(v, ()))
        lead = next((u for u in nbrs if u % 4 == 1 and u < v), None)
        if v % 4 == 1 or lead is None:
            assign.append((v, v, -1))
        else:
            assign.append((v, lead, eid_of[tuple(sorted((v, lead)))]))
    cluster.scatter_input("assign", assign)
    contract_to_leaders(g, log, "assign")

    # quotient components must match the oracle
    from mpcgraph.oracle import UnionFind

    uf = UnionFind()
    for v in range(1, n + 1):
        uf.add(v)
    for c, p, _w in log.entries:
        uf.union(c, p)
    for u, v, _e in cluster.gather(g.edges):
        uf.union(u, v)
    want = components(edges, range(1, n + 1))
    got_groups = {}
    want_groups = {}
    for v in range(1, n + 1):
        got_groups.setdefault(uf.find(v), set()).add(v)
        want_groups.setdefault(want[v], set()).add(v)
    assert ({frozenset(s) for s in got_groups.values()}
            == {frozenset(s) for s in want_groups.values()})
