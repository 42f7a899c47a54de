"""Deterministic connectivity drivers for the simulated cluster.

Two complete drivers are provided, both built from vertex reduction,
neighborhood expansion, and deterministic leader contraction:

* ``connectivity_andoni`` — alternate capped neighborhood squaring (every
  vertex learns b same-component vertices or its whole component) with
  leader contraction over the learned sets.  Components that become fully
  known are resolved and retired on the spot.

* ``connectivity_behnezhad`` — a level/budget scheme.  Every vertex carries
  a level and a space budget; one iteration performs a budget-capped
  2-hop expansion, contracts vertices into higher-level neighbors, elects
  leaders among "saturated" vertices level by level (promoting leaders one
  level up), and resolves components that have become cliques.

Leader election over small member pools cannot be certified by the
conditional-probabilities engine (the family mean cost stays above the
certificate threshold when pools have fewer than ~8 members), so whenever
pools are small — and as a fallback when the certificate fails — vertices
contract along min-id pointer chains instead: every vertex points at the
smallest member of its pool, chains are composed host-side, and the chain
roots act as this pass's leaders.  Both mechanisms contract a constant
fraction of the participating vertices per pass.

New edges discovered by expansion get fresh via-witness ids so that every
contraction still resolves to input edges; ``spanning_forest`` (re-exported
here) turns a finished log into explicit forests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil, isqrt, log2

from .errors import NonTermination, ParamsInfeasible
from .graphstore import (ContractionLog, Graph, apply_contractions,
                         labeling_from_log, make_simple, num_edges,
                         num_vertices, retire_isolated, spanning_forest)
from .leader import LeaderParams, SetSystem, select_leaders_many
from .oracle import diameter_estimate
from .primitives import global_count, route, run_local
from .reduce import reduce_to_polylog
from .sim import MpcCluster

__all__ = [
    "LevelState", "AndoniStats", "BehnezhadStats", "expand_to_degree",
    "connect2hops", "relabel_inter_level", "relabel_intra_level",
    "connectivity_andoni", "connectivity_behnezhad", "spanning_forest",
    "labeling_from_log",
]

# below this pool size, pointer-chain contraction replaces the certificate
CERT_MIN_POOL = 8


# --------------------------------------------------------------------------
# level / budget registry


@dataclass
class LevelState:
    """Host-side registry for the level-based driver: per-vertex level and
    budget, the budget table, and the transient per-pass flags."""

    level: dict
    budget: dict
    betas: list
    cap: int                      # budgets never exceed one machine's space
    saturated: set = field(default_factory=set)
    leaders: set = field(default_factory=set)

    @classmethod
    def fresh(cls, vertices, m: int, cap: int) -> "LevelState":
        vs = list(vertices)
        n = max(1, len(vs))
        beta0 = min(max(2, isqrt(m // n)), max(2, cap))
        return cls(level={v: 0 for v in vs},
                   budget={v: beta0 for v in vs},
                   betas=[beta0], cap=max(2, cap))

    def beta(self, i: int) -> int:
        """Budget of level i: each level multiplies by (min(beta, S))^(1/20),
        floored, never below 2 and never above the machine capacity."""
        while len(self.betas) <= i:
            b = self.betas[-1]
            nxt = int(b * min(b, self.cap) ** 0.05)
            self.betas.append(min(max(b, nxt, 2), self.cap))
        return self.betas[i]

    def promote(self, v) -> None:
        lv = self.level[v] + 1
        self.level[v] = lv
        self.budget[v] = self.beta(lv)

    def drop(self, vertices) -> None:
        for v in vertices:
            self.level.pop(v, None)
            self.budget.pop(v, None)

    def sum_squared_budgets(self) -> int:
        return sum(b * b for b in self.budget.values())

    def level_histogram(self) -> dict:
        hist: dict = {}
        for lv in self.level.values():
            hist[lv] = hist.get(lv, 0) + 1
        return dict(sorted(hist.items()))


@dataclass
class AndoniStats:
    phases: int
    reduce_passes: int
    squarings: list
    vertex_counts: list
    rounds: int
    peak_local: int
    peak_global: int
    log: ContractionLog


@dataclass
class BehnezhadStats:
    iterations: int
    reduce_passes: int
    vertex_counts: list
    level_histograms: list
    retired_cliques: int
    rounds: int
    peak_local: int
    peak_global: int
    log: ContractionLog


# --------------------------------------------------------------------------
# shared plumbing


def _build_adjacency(g: Graph, store: str, cap: int | None = None) -> None:
    """Copy each edge into (v, u, eid) records at both endpoint homes; with
    cap, keep only every vertex's cap smallest neighbors."""
    cluster = g.cluster
    nmach = len(cluster.machines)

    def emit(mach):
        adj = mach.store(store)
        for u, v, eid in mach.stores.get(g.edges, ()):
            adj.append((u, v, eid))
            adj.append((v, u, eid))

    run_local(cluster, emit)
    route(cluster, store, lambda r: r[0] % nmach)
    if cap is None:
        return

    def trim(mach):
        recs = mach.stores.get(store)
        if not recs:
            return
        groups: dict = {}
        for v, u, eid in recs:
            groups.setdefault(v, []).append((u, eid))
        out = []
        for v, nbrs in sorted(groups.items()):
            out.extend((v, u, eid) for u, eid in sorted(nbrs)[:cap])
        mach.stores[store] = out

    run_local(cluster, trim)


def _materialize_new_edges(g: Graph, store: str) -> None:
    def extend(mach):
        new = mach.stores.pop(store, None)
        if new:
            mach.store(g.edges).extend(new)

    run_local(g.cluster, extend)
    make_simple(g)


def _pointer_jump_contract(g: Graph, log_: ContractionLog, triples,
                           tag: str) -> int:
    """Contract along an acyclic pointer map by in-model pointer doubling.

    triples are (child, parent, witness eid) records; parents may be
    children of further records, so chains are flattened by repeated
    jumping (each child asks its parent for the parent's own pointer and
    composes the witnesses) before one independent contraction pass."""
    cluster = g.cluster
    nmach = len(cluster.machines)
    if not triples:
        return 0
    store = f"_pjmap_{tag}"
    cluster.scatter_input(store, sorted(triples))
    route(cluster, store, lambda r: r[0] % nmach)
    bound = 3 + ceil(log2(len(triples) + 2))

    for _ in range(bound):
        def ask(mach):
            for v, p, _w in mach.stores.get(store, ()):
                mach.send(p % nmach, "_pjq", (p, v))

        cluster.run_round(ask)

        def answer(mach):
            par = {v: (p, w) for v, p, w in mach.stores.get(store, ())}
            for p, v in mach.stores.pop("_pjq", ()):
                if p in par:
                    gp, w2 = par[p]
                    mach.send(v % nmach, "_pja", (v, gp, w2))

        cluster.run_round(answer)

        def update(mach):
            ans = {v: (gp, w2) for v, gp, w2 in
                   sorted(mach.stores.pop("_pja", ()))}
            if not ans:
                return
            out = []
            moved = 0
            for v, p, w in mach.stores.get(store, ()):
                if v in ans:
                    gp, w2 = ans[v]
                    out.append((v, gp, log_.new_via_edge(w, w2)))
                    moved += 1
                else:
                    out.append((v, p, w))
            mach.stores[store] = out
            if moved:
                mach.store("_pjf").append((moved,))

        run_local(cluster, update)
        moved = global_count(cluster, "_pjf")
        cluster.drop_store("_pjf")
        if not moved:
            break
    else:
        raise NonTermination("pointer chains failed to flatten",
                             {"entries": len(triples)})

    apply_contractions(g, log_, store)
    return len(triples)


def _contract_pools(g: Graph, log_: ContractionLog, pools: dict,
                    chi: int | None, b: int, tag: str):
    """Contract every pool owner toward a leader found inside its pool.

    pools maps owner -> {member: witness}, where witness is an edge id or an
    (eid, eid) pair to compose.  With pools of at least CERT_MIN_POOL members
    the leaders come from certified hash selection; otherwise (or if the
    certificate fails) owners chase min-id pointer chains.  Returns the
    sorted list of leader vertices; pool owners that are not leaders are
    contracted, leaders and non-owners stay.
    """
    cluster = g.cluster
    owners = sorted(pools)
    if not owners:
        return []
    min_pool = min(len(pools[v]) for v in owners)

    def witness_eid(v, u) -> int:
        wit = pools[v][u]
        return wit if isinstance(wit, int) else log_.new_via_edge(*wit)

    triples = []
    leaders: list = []
    if min(min_pool + 1, b) >= CERT_MIN_POOL:
        idx = {v: i for i, v in enumerate(owners, start=1)}
        sets = []
        for v in owners:
            members = {idx[v]}
            members.update(idx[u] for u in pools[v] if u in idx)
            sets.append(sorted(members))
        n_sys = len(owners)
        b_sys = min(b, min(len(s) for s in sets))
        system = SetSystem(n_sys, b_sys, sets)
        params = LeaderParams.from_rule(n_sys, b_sys,
                                        cluster.config.local_capacity,
                                        k_override=4)
        try:
            picked = select_leaders_many(cluster, [(system, params)], chi,
                                         [f"_asn{tag}"])[0]
            assign = {r[0]: r[1] for r in cluster.gather(f"_asn{tag}")}
            cluster.drop_store(f"_asn{tag}")
            lead_set = set(picked)
            leaders = [owners[i - 1] for i in picked]
            for v in owners:
                i = idx[v]
                if i in lead_set:
                    continue
                lu = owners[assign[i] - 1]
                triples.append((v, lu, witness_eid(v, lu)))
        except ParamsInfeasible:
            triples, leaders = [], []

    if leaders:
        if triples:
            cluster.scatter_input(f"_cmap{tag}", triples)
            apply_contractions(g, log_, f"_cmap{tag}")
        return leaders

    # pointer fallback: everyone points at its smallest pool member, and
    # the chains (which always end at pool-local minima) are flattened by
    # pointer doubling; the chain ends act as this pass's leaders
    parent = {}
    for v in owners:
        m = min(pools[v], default=v)
        if m < v:
            parent[v] = m
    leaders = sorted(set(owners) - set(parent))
    triples = [(v, m, witness_eid(v, m)) for v, m in sorted(parent.items())]
    _pointer_jump_contract(g, log_, triples, tag)
    return leaders


# --------------------------------------------------------------------------
# neighborhood expansion


def expand_to_degree(g: Graph, log_: ContractionLog, b: int,
                     adj_store: str = "_kadj") -> int:
    """Capped neighborhood squaring: every vertex learns distinct vertices
    of its own component until it knows at least b of them or the whole
    component.  Discovered pairs become real edges with via witnesses.
    Leaves (v, u, eid) records in adj_store; returns squaring rounds."""
    if b < 1:
        raise ValueError("b must be >= 1")
    cluster = g.cluster
    nmach = len(cluster.machines)
    _build_adjacency(g, adj_store, cap=b)

    bound = 4 + 2 * ceil(log2(len(log_.original_vertices) + 4))
    squarings = 0
    while True:
        if squarings > bound:
            raise NonTermination("neighborhood expansion failed to stabilize",
                                 {"squarings": squarings, "b": b})

        def request(mach):
            groups: dict = {}
            for v, u, eid in mach.stores.get(adj_store, ()):
                groups.setdefault(v, []).append((u, eid))
            for v, nbrs in sorted(groups.items()):
                if len(nbrs) < b:
                    for u, eid in nbrs:
                        mach.send(u % nmach, "_kreq", (u, v, eid))

        cluster.run_round(request)

        # a popular vertex can owe replies far beyond one machine's space,
        # so replies go out in sorted-request order over as many rounds as
        # needed, each round capped at a quarter of the capacity; merging
        # between rounds keeps the receiving side drained
        reply_cap = max(1, cluster.config.local_capacity // 4)
        pending = global_count(cluster, "_kreq")
        inner = 4 + pending
        while pending:
            if inner == 0:
                raise NonTermination("expansion replies failed to drain",
                                     {"pending": pending})
            inner -= 1

            def reply(mach):
                adj: dict = {}
                for v, u, eid in mach.stores.get(adj_store, ()):
                    adj.setdefault(v, []).append((u, eid))
                queued = sorted(mach.stores.pop("_kreq", ()))
                emitted = 0
                for i, (u, v, eid_vu) in enumerate(queued):
                    if emitted and emitted + b > reply_cap:
                        mach.stores["_kreq"] = queued[i:]
                        break
                    for w, eid_uw in adj.get(u, ()):
                        if w != v:
                            mach.send(v % nmach, "_kcand",
                                      (v, w, eid_vu, eid_uw))
                            emitted += 1

            cluster.run_round(reply)

            def merge(mach):
                recs = mach.store(adj_store)
                known: dict = {}
                for v, u, _eid in recs:
                    known.setdefault(v, set()).add(u)
                cands = mach.stores.pop("_kcand", None)
                if not cands:
                    return
                new_edges = mach.store("_knew")
                added = 0
                for v, w, e1, e2 in sorted(cands):
                    ks = known.setdefault(v, set())
                    if w == v or w in ks or len(ks) >= b:
                        continue
                    eid = log_.new_via_edge(e1, e2)
                    ks.add(w)
                    recs.append((v, w, eid))
                    new_edges.append((min(v, w), max(v, w), eid))
                    added += 1
                if added:
                    mach.store("_kgrew").append((added,))

            run_local(cluster, merge)
            pending = global_count(cluster, "_kreq")

        grew = global_count(cluster, "_kgrew")
        cluster.drop_store("_kgrew")
        squarings += 1
        if not grew:
            break

    _materialize_new_edges(g, "_knew")
    return squarings


# --------------------------------------------------------------------------
# the expansion + leader-contraction driver


def _expansion_phase(g: Graph, log_: ContractionLog, b: int,
                     chi: int | None) -> None:
    """Resolve components fully learned during expansion, then contract the
    rest toward leaders elected over their learned member pools."""
    cluster = g.cluster
    ksets: dict = {}
    for v, u, eid in cluster.gather("_kadj"):
        ksets.setdefault(v, {})[u] = eid
    cluster.drop_store("_kadj")
    for (v,) in cluster.gather(g.verts):
        ksets.setdefault(v, {})

    done = {v for v, ks in ksets.items() if len(ks) < b}
    triples = []
    for v in sorted(done):
        ks = ksets[v]
        root = min(min(ks, default=v), v)
        if root != v:
            triples.append((v, root, ks[root]))
    if triples:
        cluster.scatter_input("_kdone", triples)
        apply_contractions(g, log_, "_kdone")

    pools = {v: ks for v, ks in ksets.items() if v not in done}
    _contract_pools(g, log_, pools, chi, b, tag="a")


def connectivity_andoni(g: Graph, log_: ContractionLog,
                        chi: int | None = None,
                        max_phases: int | None = None):
    """Full connectivity by repeated (expand, elect leaders, contract)
    phases after a dense-or-small vertex reduction; components whose member
    pools stop growing early are resolved immediately.  Returns the final
    component labeling and run statistics."""
    cluster = g.cluster
    rounds0 = cluster.round_counter
    n0 = num_vertices(g)
    cap = cluster.config.local_capacity
    reduce_passes = reduce_to_polylog(g, log_, stop="dense",
                                      min_vertices=max(1, cap // 4))
    if max_phases is None:
        max_phases = 4 * ceil(log2(n0 + 4)) + 16

    phases = 0
    squarings: list = []
    vertex_counts: list = []
    while True:
        retire_isolated(g, log_)
        n_t = num_vertices(g)
        vertex_counts.append(n_t)
        if n_t == 0:
            break
        if phases >= max_phases:
            raise NonTermination("connectivity phases exhausted",
                                 {"phases": phases, "vertices": n_t})
        m_t = num_edges(g)
        b_t = min(max(2, isqrt(m_t // n_t)), n_t, max(2, cap // 4))
        squarings.append(expand_to_degree(g, log_, b_t))
        _expansion_phase(g, log_, b_t, chi)
        phases += 1

    labels = labeling_from_log(log_)
    stats = AndoniStats(phases=phases, reduce_passes=reduce_passes,
                        squarings=squarings, vertex_counts=vertex_counts,
                        rounds=cluster.round_counter - rounds0,
                        peak_local=cluster.peak_local,
                        peak_global=cluster.peak_global, log=log_)
    return labels, stats


# --------------------------------------------------------------------------
# level-based subroutines


def connect2hops(g: Graph, log_: ContractionLog, state: LevelState) -> int:
    """One budget-capped expansion round: every vertex whose degree is below
    its budget gains edges to 2-hop vertices, smallest ids first, up to the
    budget; returns how many edges were added."""
    cluster = g.cluster
    nmach = len(cluster.machines)
    _build_adjacency(g, "_badj")
    budget = state.budget

    def request(mach):
        groups: dict = {}
        for v, u, eid in mach.stores.get("_badj", ()):
            groups.setdefault(v, []).append((u, eid))
        for v, nbrs in sorted(groups.items()):
            q = budget.get(v, 0)
            if len(nbrs) < q:
                for u, eid in nbrs:
                    mach.send(u % nmach, "_breq", (u, v, q, eid))

    cluster.run_round(request)

    # a popular vertex can owe replies far beyond one machine's space, so
    # replies go out in sorted-request order over as many rounds as needed,
    # each round capped at a quarter of the capacity (one request's replies
    # never exceed its budget, which the driver keeps at or below that cap);
    # merging between rounds keeps the receiving side drained
    reply_cap = max(1, cluster.config.local_capacity // 4)
    pending = global_count(cluster, "_breq")
    inner = 4 + pending
    added = 0
    while pending:
        if inner == 0:
            raise NonTermination("expansion replies failed to drain",
                                 {"pending": pending})
        inner -= 1

        def reply(mach):
            adj: dict = {}
            for v, u, eid in mach.stores.get("_badj", ()):
                adj.setdefault(v, []).append((u, eid))
            queued = sorted(mach.stores.pop("_breq", ()))
            emitted = 0
            for i, (u, v, q, eid_vu) in enumerate(queued):
                if emitted and emitted + q > reply_cap:
                    mach.stores["_breq"] = queued[i:]
                    break
                sent = 0
                for w, eid_uw in sorted(adj.get(u, ())):
                    if w == v:
                        continue
                    if sent >= q:
                        break
                    mach.send(v % nmach, "_bcand", (v, w, eid_vu, eid_uw))
                    sent += 1
                emitted += sent

        cluster.run_round(reply)

        def merge(mach):
            recs = mach.store("_badj")
            known: dict = {}
            for v, u, _eid in recs:
                known.setdefault(v, set()).add(u)
            cands = mach.stores.pop("_bcand", None)
            if not cands:
                return
            new_edges = mach.store("_bnew")
            for v, w, e1, e2 in sorted(cands):
                ks = known.setdefault(v, set())
                if w == v or w in ks or len(ks) >= budget.get(v, 0):
                    continue
                eid = log_.new_via_edge(e1, e2)
                ks.add(w)
                recs.append((v, w, eid))
                new_edges.append((min(v, w), max(v, w), eid))

        run_local(cluster, merge)
        pending = global_count(cluster, "_breq")

    cluster.drop_store("_badj")
    added = global_count(cluster, "_bnew")
    if added:
        _materialize_new_edges(g, "_bnew")
    else:
        cluster.drop_store("_bnew")
    return added


def relabel_inter_level(g: Graph, log_: ContractionLog,
                        state: LevelState) -> int:
    """Contract every vertex that has a strictly-higher-level neighbor along
    its preferred-neighbor chain (highest level first, then smallest id),
    witnessed by its own edge; returns the number of contracted vertices."""
    cluster = g.cluster
    level = state.level
    _build_adjacency(g, "_badj")

    def pick(mach):
        best: dict = {}
        for v, u, eid in mach.stores.pop("_badj", ()):
            if level.get(u, 0) > level.get(v, 0):
                key = (-level[u], u)
                if v not in best or key < best[v][0]:
                    best[v] = (key, u, eid)
        cand = mach.store("_icand")
        for v in sorted(best):
            _, u, eid = best[v]
            cand.append((v, u, eid))

    run_local(cluster, pick)
    cand = sorted(cluster.gather("_icand"))
    cluster.drop_store("_icand")
    if not cand:
        return 0
    _pointer_jump_contract(g, log_, cand, "i")
    state.drop(v for v, _u, _w in cand)
    return len(cand)


def relabel_intra_level(g: Graph, log_: ContractionLog, state: LevelState,
                        chi: int | None = None) -> tuple:
    """Saturation, per-level leader election over 2-hop member pools, leader
    promotion one level up, and contraction of the remaining saturated
    vertices into a pool leader.  Returns (contracted, promoted) counts."""
    cluster = g.cluster
    nmach = len(cluster.machines)
    level = state.level
    budget = state.budget
    _build_adjacency(g, "_badj")

    # direct saturation: at least b(v) same-level neighbors.  Each directly
    # saturated vertex announces itself to its b+1 smallest same-level
    # neighbors, so both fan-out and fan-in stay bounded by deg + b + 1.
    def direct(mach):
        groups: dict = {}
        for v, u, eid in mach.stores.get("_badj", ()):
            if level.get(u) == level.get(v):
                groups.setdefault(v, []).append((u, eid))
        sat = mach.store("_bsat")
        for v, nbrs in sorted(groups.items()):
            b = budget.get(v, 0)
            if len(nbrs) < b:
                continue
            sat.append((v,))
            for w, eid_vw in sorted(nbrs)[:b + 1]:
                mach.send(w % nmach, "_bpool", (w, v, eid_vw))

    cluster.run_round(direct)

    # assemble member pools: a directly saturated vertex owns its same-level
    # neighbors outright; an announcement target owns its announcers (each a
    # direct neighbor, so every pool entry is witnessed by a real edge)
    def assemble(mach):
        direct_set = {r[0] for r in mach.stores.pop("_bsat", ())}
        out = mach.store("_bsys")
        pools: dict = {}
        for v, u, eid in mach.stores.pop("_badj", ()):
            if v in direct_set and level.get(u) == level.get(v):
                pools.setdefault(v, {}).setdefault(u, eid)
        for w, x, eid in sorted(mach.stores.pop("_bpool", ())):
            pools.setdefault(w, {}).setdefault(x, eid)
        for v in sorted(pools):
            for x, eid in sorted(pools[v].items()):
                out.append((v, level.get(v, 0), x, eid))

    run_local(cluster, assemble)
    recs = cluster.gather("_bsys")
    cluster.drop_store("_bsys")

    by_level: dict = {}
    for v, lv, x, eid in recs:
        by_level.setdefault(lv, {}).setdefault(v, {}).setdefault(x, eid)

    contracted = 0
    promoted = 0
    state.saturated = {v for pools in by_level.values() for v in pools}
    for lv in sorted(by_level):
        pools = by_level[lv]
        before = num_vertices(g)
        leaders = _contract_pools(g, log_, pools, chi, state.beta(lv),
                                  tag=f"b{lv}")
        contracted += before - num_vertices(g)
        state.drop(v for v in pools if v not in set(leaders))
        for v in leaders:
            state.promote(v)
        state.leaders.update(leaders)
        promoted += len(leaders)

    state.saturated = set()
    state.leaders = set()
    return contracted, promoted


def _retire_cliques(g: Graph, log_: ContractionLog,
                    state: LevelState | None) -> int:
    """Resolve components that have become cliques: every vertex ships its
    closed neighborhood to its smallest known member, which verifies all
    views agree before contracting the whole component into itself.
    Returns the number of cliques resolved."""
    cluster = g.cluster
    nmach = len(cluster.machines)
    # a root receives every member's view, |C|^2 records for a clique of
    # size |C|; cap the shippable size so one machine is never flooded
    size_cap = max(3, isqrt(cluster.config.local_capacity // 2))
    _build_adjacency(g, "_badj")

    def ship(mach):
        groups: dict = {}
        for v, u, _eid in mach.stores.get("_badj", ()):
            groups.setdefault(v, []).append(u)
        for v, nbrs in sorted(groups.items()):
            if len(nbrs) + 1 > size_cap:
                continue
            root = min(v, min(nbrs))
            for u in nbrs:
                mach.send(root % nmach, "_bview", (root, v, u))

    cluster.run_round(ship)

    def verify(mach):
        adj: dict = {}
        for v, u, eid in mach.stores.pop("_badj", ()):
            adj.setdefault(v, {})[u] = eid
        views: dict = {}
        for root, v, u in mach.stores.pop("_bview", ()):
            views.setdefault(root, {}).setdefault(v, set()).add(u)
        out = mach.store("_bclq")
        for root in sorted(views):
            mine = adj.get(root)
            if mine is None:
                continue
            comp = set(mine) | {root}
            senders = views[root]
            if set(senders) != comp:
                continue
            if all(nbrs | {v} == comp for v, nbrs in senders.items()):
                for v in sorted(comp - {root}):
                    out.append((v, root, mine[v]))

    run_local(cluster, verify)
    triples = cluster.gather("_bclq")
    if not triples:
        cluster.drop_store("_bclq")
        return 0
    cliques = len({p for _c, p, _w in triples})
    if state is not None:
        state.drop(c for c, _p, _w in triples)
    apply_contractions(g, log_, "_bclq")
    return cliques


def connectivity_behnezhad(g: Graph, log_: ContractionLog,
                           chi: int | None = None,
                           max_iterations: int | None = None):
    """Full connectivity by the level/budget scheme: iterate budget-capped
    2-hop expansion, inter-level contraction, per-level leader election with
    promotion, and clique resolution, until no vertices remain.  Returns the
    final component labeling and run statistics."""
    cluster = g.cluster
    rounds0 = cluster.round_counter
    n0 = num_vertices(g)
    cap = cluster.config.local_capacity
    reduce_passes = reduce_to_polylog(g, log_, stop="dense",
                                      min_vertices=max(1, cap // 4))
    retire_isolated(g, log_)

    if max_iterations is None:
        pairs = [(u, v) for u, v, _eid in cluster.gather(g.edges)]
        d_est = diameter_estimate(pairs)
        max_iterations = ceil(8 * (log2(d_est + 2) + log2(log2(n0 + 4))
                                   + 1 / cluster.config.delta)) + 8

    m1 = num_edges(g)
    state = LevelState.fresh((r[0] for r in cluster.gather(g.verts)),
                             m1, max(2, cap // 4))
    budget_cap = cluster.config.global_budget

    iterations = 0
    retired_cliques = 0
    vertex_counts = [num_vertices(g)]
    level_histograms = [state.level_histogram()]
    while num_vertices(g) > 0:
        if iterations >= max_iterations:
            raise NonTermination("level-based driver iterations exhausted",
                                 {"iterations": iterations,
                                  "vertices": num_vertices(g),
                                  "levels": state.level_histogram()})
        connect2hops(g, log_, state)
        relabel_inter_level(g, log_, state)
        relabel_intra_level(g, log_, state, chi)
        retired_cliques += _retire_cliques(g, log_, state)
        marks = len(log_.retired)
        retire_isolated(g, log_)
        state.drop(log_.retired[marks:])
        if state.sum_squared_budgets() > budget_cap:
            raise NonTermination("budget invariant breached",
                                 {"sum_squared": state.sum_squared_budgets(),
                                  "budget": budget_cap})
        iterations += 1
        vertex_counts.append(num_vertices(g))
        level_histograms.append(state.level_histogram())

    labels = labeling_from_log(log_)
    stats = BehnezhadStats(iterations=iterations, reduce_passes=reduce_passes,
                           vertex_counts=vertex_counts,
                           level_histograms=level_histograms,
                           retired_cliques=retired_cliques,
                           rounds=cluster.round_counter - rounds0,
                           peak_local=cluster.peak_local,
                           peak_global=cluster.peak_global, log=log_)
    return labels, stats
