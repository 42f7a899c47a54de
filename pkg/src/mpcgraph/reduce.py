"""Deterministic constant-factor vertex reduction.

One pass works purely on arcs chosen toward minimum-ID neighbors:

  1. every vertex emits an arc to its minimum-ID neighbor (arc tail
     contracts into arc head);
  2. of each mutual arc pair between u < v, the arc that would contract u
     (the smaller endpoint) is deleted, so 2-cycles disappear — and min-ID
     pointer graphs admit no longer directed cycles;
  3. vertices with arc-in-degree >= 2 delete their outgoing arc;
  4. those vertices become star centers: all their arc-children contract
     into them, and the children's remaining in-arcs are deleted;
  5. the surviving arcs have in/out degree <= 1 and form vertex-disjoint
     paths; deterministic matching selects >= 1/8 of them, and each matched
     arc's tail contracts into its head.

Every pass removes at least 1% of the vertices (for |V| >= 100) and always
makes strict progress, so repeating reaches any n/polylog(n) target in
O(log polylog n) passes; isolated vertices produced along the way are
retired as resolved component roots.
"""

from __future__ import annotations

from math import ceil, log, log2

from .errors import IsolatedVertex, NonTermination, NotSimple
from .graphstore import (
    ContractionLog,
    Graph,
    apply_contractions,
    compute_degrees,
    num_edges,
    num_vertices,
    retire_isolated,
)
from .matching import deterministic_matching
from .primitives import (
    broadcast0,
    colored_min,
    colored_summation,
    global_count,
    mpc_sort,
    route,
    run_local,
)


def _check_simple(g: Graph) -> None:
    """Detect loops and duplicate (u, v) pairs by sorting the edge store and
    comparing neighbors across machine boundaries."""
    cluster = g.cluster
    mpc_sort(cluster, g.edges)

    def boundary(mach):
        recs = mach.stores.get(g.edges, ())
        if recs and mach.id + 1 < len(cluster.machines):
            mach.send(mach.id + 1, "_prevedge", (recs[-1][0], recs[-1][1]))

    cluster.run_round(boundary)

    def scan(mach):
        prev = mach.stores.pop("_prevedge", None)
        prev_pair = (prev[0][0], prev[0][1]) if prev else None
        for u, v, _eid in mach.stores.get(g.edges, ()):
            if u == v:
                raise NotSimple(f"loop at vertex {u}")
            if (u, v) == prev_pair:
                raise NotSimple(f"duplicate edge {(u, v)}")
            prev_pair = (u, v)

    run_local(cluster, scan)


def reduce_once(g: Graph, log_: ContractionLog) -> int:
    """One contraction pass; returns the remaining vertex count.  The graph
    must be simple with minimum degree 1."""
    cluster = g.cluster
    nmach = len(cluster.machines)
    n = num_vertices(g)
    if n == 0:
        return 0
    if num_edges(g) == 0:
        raise IsolatedVertex("graph has vertices but no edges")
    _check_simple(g)

    # arcs toward minimum-ID neighbors, witnessed by the defining edge
    def emit_nbrs(mach):
        out = mach.store("_rnbr")
        for u, v, eid in mach.stores.get(g.edges, ()):
            out.append((u, v, eid))
            out.append((v, u, eid))

    run_local(cluster, emit_nbrs)
    colored_min(cluster, "_rnbr", "_rarc")
    if global_count(cluster, "_rarc") != n:
        cluster.drop_store("_rarc")
        raise IsolatedVertex("some vertex has degree 0")

    # resolve mutual pairs: group the two possible arcs of {u, v} together
    route(cluster, "_rarc", lambda r: (r[0] + r[1] + min(r[0], r[1])) % nmach)

    def resolve_mutual(mach):
        groups: dict[tuple, list] = {}
        for t, h, eid in mach.stores.pop("_rarc", ()):
            groups.setdefault((min(t, h), max(t, h)), []).append((t, h, eid))
        arcs = mach.store("_rarc2")
        for (u, _v), pair in sorted(groups.items()):
            if len(pair) == 2:
                # drop the arc contracting u, the smaller endpoint
                pair = [a for a in pair if a[0] != u]
            arcs.extend(sorted(pair))

    run_local(cluster, resolve_mutual)

    # arc in-degrees (as vertices), joined back at each tail's home machine
    def emit_heads(mach):
        out = mach.store("_rind")
        for _t, h, _eid in mach.stores.get("_rarc2", ()):
            out.append((h, 1))

    run_local(cluster, emit_heads)
    colored_summation(cluster, "_rind", "_rindeg")

    # step 3: tails with in-degree >= 2 delete their outgoing arc
    route(cluster, "_rindeg", lambda r: r[0] % nmach)
    route(cluster, "_rarc2", lambda r: r[0] % nmach)

    def drop_heavy_tails(mach):
        heavy = {v for v, d in mach.stores.pop("_rindeg", ()) if d >= 2}
        mach.stores["_rarc3"] = [a for a in mach.stores.pop("_rarc2", ())
                                 if a[0] not in heavy]

    run_local(cluster, drop_heavy_tails)

    # step 4: arcs into in-degree >= 2 vertices are star contractions.  A
    # single head may carry nearly all arcs, so its in-degree is recovered
    # from sorted run lengths (boundary runs stitched by the coordinator)
    # instead of materializing the whole group on one machine.
    mpc_sort(cluster, "_rarc3", key=lambda a: (a[1], a[0]))

    def boundary_counts(mach):
        recs = mach.stores.get("_rarc3", ())
        if recs:
            first_h, last_h = recs[0][1], recs[-1][1]
            nf = sum(1 for a in recs if a[1] == first_h)
            nl = sum(1 for a in recs if a[1] == last_h)
            mach.send(0, "_rbnd", (mach.id, first_h, nf, last_h, nl))

    cluster.run_round(boundary_counts)
    m0 = cluster.machines[0]
    totals: dict = {}
    for _i, fh, nf, lh, nl in sorted(m0.stores.pop("_rbnd", ())):
        totals[fh] = totals.get(fh, 0) + nf
        if lh != fh:
            totals[lh] = totals.get(lh, 0) + nl
    m0.store("_rbtot").extend(sorted(totals.items()))
    broadcast0(cluster, "_rbtot")

    def extract_stars(mach):
        tot = dict(mach.stores.pop("_rbtot", ()))
        recs = mach.stores.pop("_rarc3", ())
        local: dict = {}
        for _t, h, _eid in recs:
            local[h] = local.get(h, 0) + 1
        entries = mach.store("_rmap")
        children = mach.store("_rchild")
        rest = []
        for t, h, eid in recs:
            if tot.get(h, local[h]) >= 2:
                entries.append((t, h, eid))
                children.append((t,))
            else:
                rest.append((t, h, eid))
        mach.stores["_rarc4"] = rest

    run_local(cluster, extract_stars)

    # children vanish, so arcs pointing at them are deleted; the remainder
    # has in/out degree <= 1: vertex-disjoint paths.  Heads here have
    # in-degree exactly 1, so routing by head concentrates nothing.
    route(cluster, "_rarc4", lambda r: r[1] % nmach)
    route(cluster, "_rchild", lambda r: r[0] % nmach)

    def drop_child_heads(mach):
        gone = {r[0] for r in mach.stores.pop("_rchild", ())}
        mach.stores["_rpath"] = [a for a in mach.stores.pop("_rarc4", ())
                                 if a[1] not in gone]

    run_local(cluster, drop_child_heads)

    deterministic_matching(cluster, "_rpath", "_rmatched")

    def merge_entries(mach):
        mach.store("_rmap").extend(mach.stores.pop("_rmatched", ()))

    run_local(cluster, merge_entries)
    apply_contractions(g, log_, "_rmap")
    n_after = num_vertices(g)
    assert n_after < n
    return n_after


def polylog_pass_bound(n0: int, c: float) -> int:
    """Upper bound on passes needed to reach n0 / log2(n0)^c vertices."""
    target_factor = log2(n0) ** c
    if target_factor <= 1:
        return 1
    return ceil(log(target_factor) / log(100 / 99)) + 1


def _non_isolated(g: Graph) -> int:
    compute_degrees(g, "_ndeg")
    cluster = g.cluster

    def flag(mach):
        mach.stores["_nlive"] = [r for r in mach.stores.pop("_ndeg", ())
                                 if r[1] > 0]

    run_local(cluster, flag)
    count = global_count(cluster, "_nlive")
    cluster.drop_store("_nlive")
    return count


def reduce_to_polylog(g: Graph, log_: ContractionLog, c: float | None = None,
                      stop: str = "polylog", min_vertices: int = 1) -> int:
    """Repeat reduce_once, retiring isolated vertices between passes, until
    the requested stop rule holds; returns the number of passes.

    stop="polylog": non-isolated vertices n' <= n0 / log2(n0)^c.
    stop="dense":   current edges m >= n' * log2(n')^10, or n' <= min_vertices
                    (so callers can hand off once the remainder is small).
    """
    if stop == "polylog":
        if c is None:
            raise ValueError("polylog mode needs the exponent c")
        n0 = num_vertices(g)
        if n0 == 0:
            return 0
        target = n0 / (log2(n0) ** c) if n0 > 1 else n0
        bound = polylog_pass_bound(n0, c) if n0 > 1 else 1
    elif stop != "dense":
        raise ValueError(f"unknown stop rule {stop!r}")

    passes = 0
    while True:
        n_live = _non_isolated(g)
        if stop == "polylog":
            if n_live <= target:
                return passes
            if passes > bound:
                raise NonTermination(
                    f"vertex reduction exceeded {bound} passes",
                    {"passes": passes, "vertices": n_live})
        else:
            if n_live <= max(1, min_vertices):
                return passes
            if num_edges(g) >= n_live * log2(n_live) ** 10:
                return passes
        retire_isolated(g, log_)
        reduce_once(g, log_)
        passes += 1
