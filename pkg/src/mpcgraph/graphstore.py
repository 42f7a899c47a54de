"""Distributed graph state and the contraction history artifact.

Edges live on the cluster as (u, v, eid) records with u < v.  The eid names
the edge in the history table: input edges get ids 0..m-1 in sorted order, and
edges fabricated later (two-hop shortcuts) get fresh ids whose two parent ids
are recorded, forming a DAG that bottoms out at input edges.  Rewriting an
endpoint keeps the eid, and deduplication keeps the smallest eid, so every
current edge always resolves to an input edge connecting the same two vertex
clusters.

The ContractionLog accumulates (child, parent, witness eid) triples per pass.
Labels and spanning forests are extracted offline from the log: labels by
climbing the child->parent forest, forests by resolving witnesses through the
eid DAG and keeping the input edges that join distinct clusters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import IncompleteLog, NotSimple
from .primitives import mpc_sort, route, run_local
from .sim import MpcCluster


@dataclass
class Graph:
    cluster: MpcCluster
    edges: str = "edges"   # records (u, v, eid), u < v
    verts: str = "verts"   # records (v,)


@dataclass
class ContractionLog:
    original_edges: list = field(default_factory=list)       # eid -> (u, v)
    original_vertices: list = field(default_factory=list)
    via_parents: dict = field(default_factory=dict)          # eid -> (eid, eid)
    entries: list = field(default_factory=list)              # (child, parent, weid)
    pass_marks: list = field(default_factory=list)
    retired: list = field(default_factory=list)              # resolved root vertices
    next_eid: int = 0

    def begin_pass(self) -> None:
        self.pass_marks.append(len(self.entries))

    def add_entries(self, triples) -> None:
        """Record one pass's contractions; parents must not also be children
        within the same pass (contractions are independent)."""
        start = self.pass_marks[-1] if self.pass_marks else 0
        children = {c for c, _p, _w in self.entries[start:]}
        children.update(c for c, _p, _w in triples)
        for child, parent, weid in triples:
            if parent in children and parent != child:
                raise NotSimple(f"vertex {parent} is both parent and child in one pass")
        self.entries.extend(triples)

    def new_via_edge(self, parent_a: int, parent_b: int) -> int:
        eid = self.next_eid
        self.next_eid += 1
        self.via_parents[eid] = (parent_a, parent_b)
        return eid

    def resolve_witness(self, eid: int) -> list:
        """Expand a witness edge id to the input edges beneath it."""
        out, stack, seen = [], [eid], set()
        while stack:
            e = stack.pop()
            if e in seen:
                continue
            seen.add(e)
            if e in self.via_parents:
                stack.extend(self.via_parents[e])
            else:
                out.append(self.original_edges[e])
        return out


def load_graph(cluster: MpcCluster, edge_list, singletons=()) -> tuple[Graph, ContractionLog]:
    """Normalize, deduplicate, and scatter an input edge list; returns the
    distributed graph handle and a fresh contraction log."""
    norm = set()
    verts = set(singletons)
    for u, v in edge_list:
        verts.add(u)
        verts.add(v)
        if u != v:
            norm.add((min(u, v), max(u, v)))
    original = sorted(norm)
    g = Graph(cluster)
    cluster.scatter_input(g.edges, [(u, v, eid) for eid, (u, v) in enumerate(original)])
    cluster.scatter_input(g.verts, [(v,) for v in sorted(verts)])
    log = ContractionLog(original_edges=original,
                         original_vertices=sorted(verts),
                         next_eid=len(original))
    return g, log


def num_edges(g: Graph) -> int:
    return g.cluster.store_size(g.edges)


def num_vertices(g: Graph) -> int:
    return g.cluster.store_size(g.verts)


def make_simple(g: Graph) -> None:
    """Sort edges; drop self-loops; merge parallel edges keeping the smallest
    witness eid (the sort puts it first within each (u, v) group)."""
    run_local(g.cluster, lambda mach: mach.stores.__setitem__(
        g.edges, [r for r in mach.stores.get(g.edges, []) if r[0] != r[1]]))
    total = mpc_sort(g.cluster, g.edges)
    if total == 0:
        return

    # each machine learns the last record of the previous non-empty machine
    def boundary(mach):
        recs = mach.stores.get(g.edges, ())
        if recs and mach.id + 1 < len(g.cluster.machines):
            mach.send(mach.id + 1, "_prev", (recs[-1],))

    g.cluster.run_round(boundary)

    def dedupe(mach):
        prev = mach.stores.pop("_prev", None)
        prev_pair = prev[0][0][:2] if prev else None
        recs = mach.stores.get(g.edges)
        if recs:
            out = []
            for r in recs:
                if r[:2] != prev_pair:
                    out.append(r)
                prev_pair = r[:2]
            mach.stores[g.edges] = out

    run_local(g.cluster, dedupe)


def assert_simple(g: Graph) -> None:
    """Raise NotSimple if parallel edges or self-loops are present (costs a
    sort; used by operations whose preconditions require simplicity)."""
    seen = set()
    for u, v, _eid in g.cluster.gather(g.edges):
        if u == v or (u, v) in seen:
            raise NotSimple(f"edge ({u}, {v}) violates simplicity")
        seen.add((u, v))


def compute_degrees(g: Graph, out_store: str) -> None:
    """Exact degree records (v, deg) for every vertex, including isolated
    vertices at degree 0, via colored summation over endpoint pairs."""
    from .primitives import colored_summation

    def emit(mach):
        pairs = mach.store("_degpairs")
        for u, v, _eid in mach.stores.get(g.edges, ()):
            pairs.append((u, 1))
            pairs.append((v, 1))
        for (v,) in mach.stores.get(g.verts, ()):
            pairs.append((v, 0))

    run_local(g.cluster, emit)
    colored_summation(g.cluster, "_degpairs", out_store)


def retire_isolated(g: Graph, log: ContractionLog) -> int:
    """Remove degree-0 vertices from the working graph, recording them as
    resolved roots; returns how many were retired."""
    compute_degrees(g, "_deg")
    nmach = len(g.cluster.machines)

    def flag(mach):
        iso = mach.store("_iso")
        for v, d in mach.stores.pop("_deg", ()):
            if d == 0:
                iso.append((v,))

    run_local(g.cluster, flag)
    retired = sorted(r[0] for r in g.cluster.gather("_iso"))
    if not retired:
        g.cluster.drop_store("_iso")
        return 0
    route(g.cluster, "_iso", lambda r: r[0] % nmach)

    def drop(mach):
        gone = {r[0] for r in mach.stores.pop("_iso", ())}
        if gone:
            mach.stores[g.verts] = [r for r in mach.stores.get(g.verts, ())
                                    if r[0] not in gone]

    # vertices must sit at their home machines for the membership test
    route(g.cluster, g.verts, lambda r: r[0] % nmach)
    run_local(g.cluster, drop)
    log.retired.extend(retired)
    return len(retired)


def apply_contractions(g: Graph, log: ContractionLog, mapping_store: str) -> None:
    """Contract child vertices into parents per (child, parent, witness eid)
    records, log the pass, rewrite edges, and re-simplify.

    Mappings within one pass must be independent (no parent is a child).
    The rewrite joins edges to mappings at each endpoint's home machine, so
    a single vertex's incident edges must fit beside the mapping chunk on
    one machine (true whenever max degree stays below ~3/4 of S)."""
    cluster = g.cluster
    nmach = len(cluster.machines)
    triples = sorted(cluster.gather(mapping_store))
    log.begin_pass()
    log.add_entries(triples)
    if not triples:
        cluster.drop_store(mapping_store)
        return

    route(cluster, mapping_store, lambda r: r[0] % nmach)

    def build_map(mach):
        recs = mach.stores.pop(mapping_store, ())
        mach.stores["_cmap"] = [(c, p) for c, p, _w in recs]

    run_local(cluster, build_map)

    for side in (0, 1):
        route(cluster, g.edges, lambda r, side=side: r[side] % nmach)

        def rewrite(mach, side=side):
            cmap = dict(mach.stores.get("_cmap", ()))
            recs = mach.stores.get(g.edges)
            if recs and cmap:
                mach.stores[g.edges] = [
                    (cmap.get(r[0], r[0]), r[1], r[2]) if side == 0
                    else (r[0], cmap.get(r[1], r[1]), r[2])
                    for r in recs
                ]

        run_local(cluster, rewrite)

    def normalize(mach):
        recs = mach.stores.get(g.edges)
        if recs:
            mach.stores[g.edges] = [
                (r[0], r[1], r[2]) if r[0] <= r[1] else (r[1], r[0], r[2])
                for r in recs
            ]

    run_local(cluster, normalize)

    # remove contracted children from the vertex registry
    route(cluster, g.verts, lambda r: r[0] % nmach)

    def drop_children(mach):
        cmap = dict(mach.stores.pop("_cmap", ()))
        recs = mach.stores.get(g.verts)
        if recs and cmap:
            mach.stores[g.verts] = [r for r in recs if r[0] not in cmap]

    run_local(cluster, drop_children)
    make_simple(g)


def labeling_from_log(log: ContractionLog) -> dict:
    """Component label (minimum original vertex id) for every original vertex,
    by climbing the contraction forest."""
    parent = {}
    for child, par, _w in log.entries:
        parent[child] = par

    def root(v):
        seen = []
        while v in parent:
            seen.append(v)
            v = parent[v]
        for s in seen:
            parent[s] = v
        return v

    clusters: dict[int, list] = {}
    for v in log.original_vertices:
        clusters.setdefault(root(v), []).append(v)
    labels = {}
    for members in clusters.values():
        lab = min(members)
        for v in members:
            labels[v] = lab
    return labels


def spanning_forest(log: ContractionLog, labels: dict) -> list:
    """Witnessing input edges of all contractions, as a rooted forest: a list
    of (child, parent) pairs oriented toward each component's label vertex."""
    uf = {v: v for v in log.original_vertices}

    def find(x):
        while uf[x] != x:
            uf[x] = uf[uf[x]]
            x = uf[x]
        return x

    forest = []
    for _child, _parent, weid in log.entries:
        for u, v in sorted(log.resolve_witness(weid)):
            ru, rv = find(u), find(v)
            if ru != rv:
                uf[ru] = rv
                forest.append((u, v))

    by_comp: dict[int, int] = {}
    for u, v in forest:
        by_comp[labels[u]] = by_comp.get(labels[u], 0) + 1
    sizes: dict[int, int] = {}
    for v in log.original_vertices:
        sizes[labels[v]] = sizes.get(labels[v], 0) + 1
    for lab, size in sizes.items():
        if by_comp.get(lab, 0) != size - 1:
            raise IncompleteLog(
                f"component {lab}: {by_comp.get(lab, 0)} forest edges for "
                f"{size} vertices")

    # orient each tree toward the component's label vertex
    adj: dict[int, list] = {}
    for u, v in forest:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    oriented = []
    for lab in sorted(sizes):
        if sizes[lab] == 1:
            continue
        stack = [lab]
        seen = {lab}
        while stack:
            cur = stack.pop()
            for nxt in sorted(adj.get(cur, ())):
                if nxt not in seen:
                    seen.add(nxt)
                    oriented.append((nxt, cur))
                    stack.append(nxt)
    return sorted(oriented)
