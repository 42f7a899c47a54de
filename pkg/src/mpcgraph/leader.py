"""Deterministic leader selection for set systems.

Input: n sets, each S_i a subset of {1..n} of size >= b.  Output: a small
leader set L hitting every S_i.  Leaders are the elements whose k-wise hash
indicator fires (probability p = 2^-ell); the seed is chosen by minimizing

    cost(h) = n * (number of sets with no leader) + (number of leaders)

with the conditional-probabilities engine.  A single uncovered set costs n,
so any seed with cost < n certifies full coverage; the chosen seed's cost is
at most the family mean, which at desk parameters (p = 1/2) is about n/2.
The same bound caps |L| below 2n * b_eff^(-1/5) + 1.

Sets are truncated to b_eff = min(b, S/2, 32) smallest members so each set
fits on its element's home machine.  The 32 cap keeps p at 1/2 (ell = 1),
which makes both cost terms affine in the seed bits: "all members off" is
the single linear system h(j) = 1 for j in S_i, so per-block sums come from
exact solution counting instead of enumeration.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, log2

from .derand import MINIMIZE, CostOracle, count_by_block_sparse, refine_many
from .errors import MissingLeader, ParamsInfeasible
from .graphstore import ContractionLog, Graph, apply_contractions
from .hashfam import eval_hash, linear_rows, make_kwise
from .primitives import global_count, route, run_local
from .sim import MpcCluster

B_EFF_CAP = 32   # largest set size with p = 1/2, the single-system regime


@dataclass(frozen=True)
class SetSystem:
    """n sets over {1..n}; set i contains i and has at least b members."""

    n: int
    b: int
    sets: tuple

    def __init__(self, n: int, b: int, sets):
        sets = tuple(tuple(sorted(set(s))) for s in sets)
        if len(sets) != n:
            raise ValueError(f"need exactly {n} sets, got {len(sets)}")
        for i, members in enumerate(sets, start=1):
            if i not in members:
                raise ValueError(f"set {i} does not contain {i}")
            if len(members) < b:
                raise ValueError(f"set {i} smaller than b={b}")
            if members[0] < 1 or members[-1] > n:
                raise ValueError(f"set {i} has out-of-range members")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "sets", sets)


@dataclass(frozen=True)
class LeaderParams:
    ell: int     # indicator probability p = 2^-ell
    k: int       # independence of the hash family (even, >= 4)
    b_eff: int   # per-set truncation size

    @property
    def p(self) -> float:
        return 2.0 ** -self.ell

    @classmethod
    def from_rule(cls, n: int, b: int, local_capacity: int,
                  k_override: int | None = None) -> "LeaderParams":
        """p = largest power of two <= b_eff^(-1/5); k = next even integer
        >= max(4, ceil(15 log n / log b_eff)) unless overridden."""
        b_eff = max(1, min(b, local_capacity // 2, B_EFF_CAP))
        ell = max(1, ceil(log2(b_eff) / 5))
        if k_override is not None:
            k = k_override
        elif b_eff <= 1 or n <= 1:
            k = 4
        else:
            k = max(4, ceil(15 * log2(n) / log2(b_eff)))
        k += k & 1
        return cls(ell=ell, k=k, b_eff=b_eff)


class _CoverageCostOracle(CostOracle):
    """cost(h) = n * #(sets with every member's indicator off) + #leaders.
    With ell = 1 both terms are exact affine solution counts."""

    direction = MINIMIZE

    def __init__(self, spec, n: int, store: str):
        self.spec = spec
        self.n = n
        self.store = store

    def _groups(self, mach):
        groups: dict[int, list] = {}
        for i, j in mach.stores.get(self.store, ()):
            groups.setdefault(i, []).append(j)
        return groups

    def cost_one(self, mach, seed):
        total = 0
        for i, members in self._groups(mach).items():
            if all(eval_hash(self.spec, seed, j) != 0 for j in members):
                total += self.n
            if eval_hash(self.spec, seed, i) == 0:
                total += 1
        return total

    def block_sums(self, mach, spec, prefix, prefix_len, chi):
        if spec.ell != 1:
            return None
        out = [0] * (1 << chi)
        tau = spec.seed_bits
        for i, members in self._groups(mach).items():
            rows = [(linear_rows(spec, j)[0], 1) for j in members]
            base, blocks = count_by_block_sparse(tau, prefix, prefix_len,
                                                 chi, rows)
            weighted = self.n * base
            for bk in blocks:
                out[bk] += weighted
            base, blocks = count_by_block_sparse(
                tau, prefix, prefix_len, chi, [(linear_rows(spec, i)[0], 0)])
            for bk in blocks:
                out[bk] += base
        return out


def select_leaders_many(cluster: MpcCluster, instances,
                        chi: int | None = None,
                        assign_stores=None,
                        trace_sink: list | None = None) -> list[list[int]]:
    """Run leader selection for several (SetSystem, LeaderParams) instances
    in shared communication rounds; returns sorted leader ids per instance.

    Raises ParamsInfeasible when any instance's chosen seed leaves a set
    uncovered or its size bound fails.  With assign_stores (one store name
    per instance), records (i, smallest leader in S_i) are left on the
    cluster for contraction.  With trace_sink, the per-instance seed-search
    phase traces are appended to it, one list of PhaseTrace per instance."""
    if not instances:
        return []
    if assign_stores is None:
        assign_stores = [None] * len(instances)
    nmach = len(cluster.machines)
    mem_stores = [f"_lmem{t}" for t in range(len(instances))]
    specs = []
    for (system, params), store in zip(instances, mem_stores):
        members = [(i, j) for i, s in enumerate(system.sets, start=1)
                   for j in s[:params.b_eff]]
        cluster.scatter_input(store, members)
        route(cluster, store, lambda r: r[0] % nmach)
        specs.append(make_kwise(n=system.n, ell=params.ell, k=params.k))

    jobs = [(spec, _CoverageCostOracle(spec, system.n, store))
            for spec, (system, _), store in zip(specs, instances, mem_stores)]
    results = refine_many(cluster, jobs, chi)
    if trace_sink is not None:
        trace_sink.extend(trace for _seed, trace in results)

    out: list[list[int]] = []
    for t, ((system, params), spec, store, assign_store) in enumerate(
            zip(instances, specs, mem_stores, assign_stores)):
        seed = results[t][0]
        n = system.n

        def scan(mach, spec=spec, seed=seed, store=store,
                 assign_store=assign_store):
            groups: dict[int, list] = {}
            for i, j in mach.stores.pop(store, ()):
                groups.setdefault(i, []).append(j)
            assign = mach.store(assign_store) if assign_store else None
            uncovered = mach.store("_luncov")
            leads = mach.store("_lead")
            for i, mem in sorted(groups.items()):
                hit = sorted(j for j in mem if eval_hash(spec, seed, j) == 0)
                if not hit:
                    uncovered.append((i,))
                elif assign is not None:
                    assign.append((i, hit[0]))
                if eval_hash(spec, seed, i) == 0:
                    leads.append((i,))

        run_local(cluster, scan)
        bad = global_count(cluster, "_luncov")
        cluster.drop_store("_luncov")
        if bad:
            if assign_store:
                cluster.drop_store(assign_store)
            cluster.drop_store("_lead")
            raise ParamsInfeasible(
                f"{bad} sets left uncovered (p={params.p}, k={params.k})")
        leaders = sorted(r[0] for r in cluster.gather("_lead"))
        cluster.drop_store("_lead")
        if not len(leaders) < 2 * n * params.b_eff ** -0.2 + 1:
            if assign_store:
                cluster.drop_store(assign_store)
            raise ParamsInfeasible(
                f"|L|={len(leaders)} breaches the size bound for b_eff="
                f"{params.b_eff}")
        out.append(leaders)
    return out


def select_leaders(cluster: MpcCluster, system: SetSystem,
                   params: LeaderParams, chi: int | None = None,
                   assign_store: str | None = None,
                   trace_sink: list | None = None) -> list[int]:
    """Choose the leader set deterministically; returns sorted leader ids.

    Raises ParamsInfeasible when the chosen seed leaves a set uncovered or
    the size bound fails — the parameters are too aggressive for this system.
    With assign_store set, records (i, smallest leader in S_i) are left on
    the cluster for contraction.  With trace_sink, the seed-search phase
    trace is appended to it."""
    stores = [assign_store] if assign_store else None
    return select_leaders_many(cluster, [(system, params)], chi, stores,
                               trace_sink)[0]


def contract_to_leaders(g: Graph, log_: ContractionLog,
                        assign_store: str) -> None:
    """Contract every non-leader to its designated leader in one pass.

    assign_store holds (vertex, leader, witness eid) records — identity
    records (leader vertices) may carry any witness and are dropped.  Every
    current vertex must appear exactly once."""
    cluster = g.cluster
    nmach = len(cluster.machines)
    route(cluster, assign_store, lambda r: r[0] % nmach)
    route(cluster, g.verts, lambda r: r[0] % nmach)

    def check(mach):
        assigned = {}
        for v, lead, eid in mach.stores.pop(assign_store, ()):
            if v in assigned:
                raise MissingLeader(f"vertex {v} assigned twice")
            assigned[v] = (lead, eid)
        entries = mach.store("_lmap")
        for (v,) in mach.stores.get(g.verts, ()):
            if v not in assigned:
                raise MissingLeader(f"vertex {v} has no leader assignment")
            lead, eid = assigned[v]
            if lead != v:
                entries.append((v, lead, eid))

    run_local(cluster, check)
    apply_contractions(g, log_, "_lmap")
