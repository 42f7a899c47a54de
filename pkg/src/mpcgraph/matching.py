"""Matchings in graphs of maximum degree 2.

Edges are records (a, b, eid) in a cluster store (orientation is preserved,
so path/arc inputs round-trip).  Both algorithms first sort and index the
edges 1..m; each edge then learns the indices of its at most two adjacent
edges through one endpoint-home exchange.

randomized: each edge is removed with probability 2/3 by a counter-based
coin; edges whose endpoints both end at kept-degree 1 form the matching
(expected size >= 4m/27 at degree <= 2).

deterministic: pairwise-independent indicators X_e = [h(edge index) = 0] with
Pr = 1/4; an edge is matched iff X_e = 1 and X_e' = 0 for both neighbors, so
E|M| >= m(1/4)(1 - 2/4) = m/8.  The seed search maximizes the exact count of
matched edges; per-block sums are computed in closed form by
inclusion-exclusion over at most two neighbors, each term an affine system
solution count.  The chosen seed's matching is therefore never below the
family mean: |M| >= ceil(m/8), deterministically.
"""

from __future__ import annotations

from math import ceil

from .derand import MAXIMIZE, CostOracle, count_by_block_sparse, refine
from .errors import DegreeTooHigh
from .hashfam import eval_hash, linear_rows, make_pairwise
from .primitives import (
    colored_summation,
    global_count,
    mpc_prefix_sum,
    mpc_sort,
    route,
    run_local,
)
from .rng import coin
from .sim import MpcCluster


def _index_edges(cluster: MpcCluster, store: str) -> tuple[int, int]:
    """Sort edges and append a 1-based global index; returns (m, chunk) where
    edge i lives on machine (i-1) // chunk."""
    m = mpc_sort(cluster, store)
    if m == 0:
        return 0, 1
    mpc_prefix_sum(cluster, store, lambda r: 1, lambda r, y: r + (y,))
    return m, ceil(m / len(cluster.machines))


def _exchange_neighbors(cluster: MpcCluster, store: str, chunk: int) -> None:
    """Each edge record (a, b, eid, idx) gains its adjacent edge indices:
    records become (idx, n1, n2, a, b, eid) with missing neighbors as 0."""
    nmach = len(cluster.machines)

    def emit(mach):
        inc = mach.store("_minc")
        for r in mach.stores.get(store, ()):
            inc.append((r[0], r[3]))
            inc.append((r[1], r[3]))

    run_local(cluster, emit)
    route(cluster, "_minc", lambda r: r[0] % nmach)

    def pair_up(mach):
        by_vertex: dict[int, list] = {}
        for v, idx in mach.stores.pop("_minc", ()):
            by_vertex.setdefault(v, []).append(idx)
        adj = mach.store("_madj")
        for v, idxs in sorted(by_vertex.items()):
            if len(idxs) > 2:
                raise DegreeTooHigh(f"vertex {v} has degree {len(idxs)} > 2")
            if len(idxs) == 2:
                i, j = idxs
                adj.append((i, j))
                adj.append((j, i))

    run_local(cluster, pair_up)
    route(cluster, "_madj", lambda r: (r[0] - 1) // chunk)

    def attach(mach):
        nbrs: dict[int, list] = {}
        for t, nb in mach.stores.pop("_madj", ()):
            nbrs.setdefault(t, []).append(nb)
        recs = mach.stores.get(store)
        if recs:
            out = []
            for a, b, eid, idx in recs:
                ns = sorted(nbrs.get(idx, ()))
                out.append((idx, ns[0] if ns else 0,
                            ns[1] if len(ns) > 1 else 0, a, b, eid))
            mach.stores[store] = out

    run_local(cluster, attach)


def _assert_matching(cluster: MpcCluster, out_store: str) -> None:
    def emit(mach):
        pairs = mach.store("_mck")
        for a, b, _eid in mach.stores.get(out_store, ()):
            pairs.append((a, 1))
            pairs.append((b, 1))

    run_local(cluster, emit)
    colored_summation(cluster, "_mck", "_mck_deg")
    clashes = [r for r in cluster.gather("_mck_deg") if r[1] > 1]
    cluster.drop_store("_mck_deg")
    assert not clashes, f"matching shares vertices: {clashes[:4]}"


class _MatchedCountOracle(CostOracle):
    """Exact number of matched edges under a seed: X_e on, both neighbors off.
    Inclusion-exclusion over the at-most-two neighbors gives closed-form
    per-block sums; direct evaluation remains as the slow path."""

    direction = MAXIMIZE

    def __init__(self, spec, store):
        self.spec = spec
        self.store = store

    def _matched(self, seed, idx, n1, n2):
        if eval_hash(self.spec, seed, idx) != 0:
            return 0
        for n in (n1, n2):
            if n and eval_hash(self.spec, seed, n) == 0:
                return 0
        return 1

    def cost_one(self, mach, seed):
        return sum(self._matched(seed, r[0], r[1], r[2])
                   for r in mach.stores.get(self.store, ()))

    def block_sums(self, mach, spec, prefix, prefix_len, chi):
        out = [0] * (1 << chi)
        zero_rows = {}

        def rows_of(i):
            if i not in zero_rows:
                zero_rows[i] = [(mask, 0) for mask in linear_rows(spec, i)]
            return zero_rows[i]

        for r in mach.stores.get(self.store, ()):
            idx, n1, n2 = r[0], r[1], r[2]
            nbrs = [n for n in (n1, n2) if n]
            # inclusion-exclusion over which neighbors are also on
            subsets = [((), 1)]
            if len(nbrs) >= 1:
                subsets.append(((nbrs[0],), -1))
            if len(nbrs) == 2:
                subsets.append(((nbrs[1],), -1))
                subsets.append(((nbrs[0], nbrs[1]), 1))
            for subset, sign in subsets:
                rows = list(rows_of(idx))
                for n in subset:
                    rows.extend(rows_of(n))
                base, blocks = count_by_block_sparse(
                    spec.seed_bits, prefix, prefix_len, chi, rows)
                delta = sign * base
                for b in blocks:
                    out[b] += delta
        return out


def deterministic_matching(cluster: MpcCluster, store: str, out_store: str,
                           chi: int | None = None) -> int:
    """Match >= ceil(m/8) edges of a degree-<=2 edge set, deterministically.
    Consumes `store`; matched (a, b, eid) records land in `out_store`."""
    m, chunk = _index_edges(cluster, store)
    if m == 0:
        cluster.drop_store(store)
        return 0
    _exchange_neighbors(cluster, store, chunk)
    spec = make_pairwise(n=m, ell=2)
    seed, _trace = refine(cluster, spec, _MatchedCountOracle(spec, store), chi)

    def select(mach):
        recs = mach.stores.pop(store, ())
        out = mach.store(out_store)
        for idx, n1, n2, a, b, eid in recs:
            if eval_hash(spec, seed, idx) == 0 and not any(
                    n and eval_hash(spec, seed, n) == 0 for n in (n1, n2)):
                out.append((a, b, eid))

    run_local(cluster, select)
    _assert_matching(cluster, out_store)
    size = global_count(cluster, out_store)
    assert size >= ceil(m / 8)
    return size


def randomized_matching(cluster: MpcCluster, store: str, out_store: str,
                        rng_seed: int) -> int:
    """Remove each edge with probability 2/3; keep edges whose endpoints both
    drop to kept-degree 1.  Consumes `store`."""
    m, chunk = _index_edges(cluster, store)
    if m == 0:
        cluster.drop_store(store)
        return 0
    nmach = len(cluster.machines)

    def kept(r):
        return not coin(rng_seed, r[3], 2, 3)

    # count kept-degree per endpoint, then vote for edges with two degree-1
    # endpoints; removed edges still participate in the degree precondition
    def emit(mach):
        inc = mach.store("_rinc")
        for r in mach.stores.get(store, ()):
            inc.append((r[0], r[3] if kept(r) else -r[3]))
            inc.append((r[1], r[3] if kept(r) else -r[3]))

    run_local(cluster, emit)
    route(cluster, "_rinc", lambda r: r[0] % nmach)

    def vote(mach):
        by_vertex: dict[int, list] = {}
        for v, idx in mach.stores.pop("_rinc", ()):
            by_vertex.setdefault(v, []).append(idx)
        votes = mach.store("_rvote")
        for v, idxs in sorted(by_vertex.items()):
            if len(idxs) > 2:
                raise DegreeTooHigh(f"vertex {v} has degree {len(idxs)} > 2")
            live = [i for i in idxs if i > 0]
            if len(live) == 1:
                votes.append((live[0], 1))

    run_local(cluster, vote)
    route(cluster, "_rvote", lambda r: (r[0] - 1) // chunk)

    def select(mach):
        support: dict[int, int] = {}
        for idx, _one in mach.stores.pop("_rvote", ()):
            support[idx] = support.get(idx, 0) + 1
        recs = mach.stores.pop(store, ())
        out = mach.store(out_store)
        for a, b, eid, idx in recs:
            if kept((a, b, eid, idx)) and support.get(idx, 0) == 2:
                out.append((a, b, eid))

    run_local(cluster, select)
    _assert_matching(cluster, out_store)
    return global_count(cluster, out_store)
