"""Method-of-conditional-probabilities seed search.

A seed of tau bits is fixed chi bits per phase, most significant block first.
In each phase every machine computes, for each candidate block value, the
exact integer sum of its partial cost over all seeds extending the current
prefix with that block; colored summation aggregates the per-block totals, and
the best block (ties to the smallest value) survives.  Averaging guarantees
the surviving sub-family's mean cost never worsens, so the final seed's cost
is at least (Maximize) or at most (Minimize) the family mean.

Cost oracles may provide `block_sums` computing the per-block totals in closed
form.  Both hash families are GF(2)-linear in the seed bits, so sums of
indicator products reduce to counting solutions of affine systems —
`count_by_block` performs that counting exactly.  Without a fast path the
engine enumerates seeds directly, guarded by a per-machine evaluation cap.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, log2

from .errors import ConfigError, CostOverflow, EnumerationCapExceeded
from .hashfam import FamilySpec, family_iter
from .primitives import broadcast0, colored_summation, route, run_local
from .sim import MpcCluster

MAXIMIZE = "max"
MINIMIZE = "min"

ENUM_CAP = 1 << 24          # seed evaluations per machine per phase
COST_LIMIT = 1 << 127       # totals must fit a signed 128-bit accumulator


class CostOracle:
    """Distributed cost function: Sum over machines of partial_cost(machine,
    seed) must equal the global cost of the seed, exactly, for every seed."""

    direction = MAXIMIZE

    def cost_one(self, mach, seed: int) -> int:
        raise NotImplementedError

    def block_sums(self, mach, spec: FamilySpec, prefix: int, prefix_len: int,
                   chi: int):
        """Optional closed form: list of 2^chi exact sums of cost_one over the
        sub-family of each block, or None to fall back to enumeration."""
        return None


@dataclass(frozen=True)
class PhaseTrace:
    chi: int                # bits fixed this phase
    block: int              # chosen block value
    block_total: int        # exact cost sum over the surviving sub-family
    family_total: int       # exact cost sum over the sub-family before choosing
    prefix_len: int         # seed bits fixed after this phase


def _parity(x: int) -> int:
    return x.bit_count() & 1


def _affine_solutions(width: int, conditions) -> list[int] | None:
    """All width-bit vectors satisfying parity(mask & x) == c for every
    (mask, c) condition, or None if inconsistent.  Row reduction plus a
    Gray-code walk over the solution space keeps this linear in the output."""
    pivots: dict[int, tuple[int, int]] = {}
    for bm, c in conditions:
        while bm:
            p = bm.bit_length() - 1
            if p in pivots:
                pm, pc = pivots[p]
                bm ^= pm
                c ^= pc
            else:
                pivots[p] = (bm, c)
                break
        else:
            if c:
                return None
    # particular solution (free bits zero), pivot bits solved low-to-high
    s0 = 0
    for p in sorted(pivots):
        mask, c = pivots[p]
        if c ^ _parity((mask ^ (1 << p)) & s0):
            s0 |= 1 << p
    basis = []
    for f in range(width):
        if f in pivots:
            continue
        v = 1 << f
        for p in sorted(pivots):
            mask, _c = pivots[p]
            if _parity((mask ^ (1 << p)) & v):
                v |= 1 << p
        basis.append(v)
    sols = [s0]
    cur = s0
    for i in range(1, 1 << len(basis)):
        cur ^= basis[(i & -i).bit_length() - 1]
        sols.append(cur)
    return sols


def count_by_block_sparse(tau: int, prefix: int, prefix_len: int, chi: int,
                          rows) -> tuple[int, list[int]]:
    """Exact per-block counts of free-bit completions satisfying every parity
    condition, as (count, consistent block values).

    `rows` is a sequence of (mask, rhs) pairs constraining parity(mask & seed)
    == rhs, with masks over seed-int bit positions (prefix in the top bits,
    then the block, then the free bits).  Gaussian elimination over the free
    columns leaves affine conditions on the block bits; each consistent block
    gets 2^(free - rank) completions.
    """
    free = tau - prefix_len - chi
    free_mask_all = (1 << free) - 1
    block_mask_all = (1 << chi) - 1
    pivots: dict[int, tuple[int, int, int]] = {}
    conditions = []
    for mask, rhs in rows:
        fm = mask & free_mask_all
        bm = (mask >> free) & block_mask_all
        const = rhs ^ _parity((mask >> (free + chi)) & prefix)
        placed = False
        while fm:
            p = fm.bit_length() - 1
            if p in pivots:
                pfm, pbm, pconst = pivots[p]
                fm ^= pfm
                bm ^= pbm
                const ^= pconst
            else:
                pivots[p] = (fm, bm, const)
                placed = True
                break
        if not placed:
            conditions.append((bm, const))
    base = 1 << (free - len(pivots))
    blocks = _affine_solutions(chi, conditions)
    return base, (blocks if blocks is not None else [])


def count_by_block(tau: int, prefix: int, prefix_len: int, chi: int,
                   rows) -> list[int]:
    """Dense form of count_by_block_sparse: a list indexed by block value."""
    base, blocks = count_by_block_sparse(tau, prefix, prefix_len, chi, rows)
    out = [0] * (1 << chi)
    for b in blocks:
        out[b] = base
    return out


def default_chi(cluster: MpcCluster) -> int:
    # half the local space must stay free for the expectation slots
    return max(1, int(log2(cluster.config.local_capacity)) - 1)


def _phase_sums(cluster: MpcCluster, instances, prefixes, chi: int) -> None:
    """One local step: every machine emits ((instance, block), partial_sum)
    records for each active instance into '_derand'."""

    def step(mach):
        out = mach.store("_derand")
        for idx, (spec, oracle) in enumerate(instances):
            prefix, prefix_len = prefixes[idx]
            tau = spec.seed_bits
            if prefix_len >= tau:
                continue
            chi_t = min(chi, tau - prefix_len)
            sums = oracle.block_sums(mach, spec, prefix, prefix_len, chi_t)
            if sums is None:
                if (1 << (tau - prefix_len)) > ENUM_CAP:
                    raise EnumerationCapExceeded(
                        f"{tau - prefix_len} free seed bits exceed the "
                        f"enumeration cap; oracle needs a block_sums fast path")
                sums = [
                    sum(oracle.cost_one(mach, seed)
                        for seed in family_iter(spec, prefix, prefix_len, b, chi_t))
                    for b in range(1 << chi_t)
                ]
            for b, s in enumerate(sums):
                if s:
                    out.append(((idx, b), s))

    run_local(cluster, step)


def refine_many(cluster: MpcCluster, instances, chi: int | None = None,
                ) -> list[tuple[int, list[PhaseTrace]]]:
    """Run seed refinement for several (FamilySpec, CostOracle) instances in
    shared communication rounds; returns (seed, trace) per instance."""
    if not instances:
        return []
    if chi is None:
        chi = default_chi(cluster)
    # all instances' block slots must fit beside resident data
    while len(instances) << chi > cluster.config.local_capacity // 2 and chi > 1:
        chi -= 1
    if chi < 1:
        raise ConfigError("chi must be >= 1")

    prefixes = [(0, 0) for _ in instances]
    traces: list[list[PhaseTrace]] = [[] for _ in instances]
    expected_family_total = [None] * len(instances)

    while any(plen < spec.seed_bits
              for (spec, _), (_, plen) in zip(instances, prefixes)):
        _phase_sums(cluster, instances, prefixes, chi)
        colored_summation(cluster, "_derand", "_derand_tot")
        route(cluster, "_derand_tot", lambda r: 0)

        m0 = cluster.machines[0]
        totals = m0.stores.pop("_derand_tot", [])
        by_instance: dict[int, dict[int, int]] = {}
        for (idx, block), total in totals:
            by_instance.setdefault(idx, {})[block] = total

        chosen = []
        for idx, (spec, oracle) in enumerate(instances):
            prefix, prefix_len = prefixes[idx]
            tau = spec.seed_bits
            if prefix_len >= tau:
                continue
            chi_t = min(chi, tau - prefix_len)
            sums = by_instance.get(idx, {})
            family_total = sum(sums.values())
            blocks = [(b, sums.get(b, 0)) for b in range(1 << chi_t)]
            if oracle.direction == MAXIMIZE:
                best_total = max(s for _, s in blocks)
            else:
                best_total = min(s for _, s in blocks)
            best_block = next(b for b, s in blocks if s == best_total)
            if abs(best_total) >= COST_LIMIT or abs(family_total) >= COST_LIMIT:
                raise CostOverflow(
                    f"cost totals exceed the 128-bit accumulator contract")
            # averaging: the best block cannot be worse than the family mean
            if oracle.direction == MAXIMIZE:
                assert best_total << chi_t >= family_total
            else:
                assert best_total << chi_t <= family_total
            # the previous phase's surviving total must reappear exactly
            if expected_family_total[idx] is not None:
                assert family_total == expected_family_total[idx]
            expected_family_total[idx] = best_total

            prefixes[idx] = ((prefix << chi_t) | best_block, prefix_len + chi_t)
            traces[idx].append(PhaseTrace(
                chi=chi_t, block=best_block, block_total=best_total,
                family_total=family_total, prefix_len=prefix_len + chi_t))
            chosen.append((idx, best_block))

        m0.store("_chosen").extend(chosen)
        broadcast0(cluster, "_chosen")
        run_local(cluster, lambda mach: mach.stores.pop("_chosen", None))

    return [(prefix, trace) for (prefix, _), trace in zip(prefixes, traces)]


def refine(cluster: MpcCluster, spec: FamilySpec, oracle: CostOracle,
           chi: int | None = None) -> tuple[int, list[PhaseTrace]]:
    """Single-instance refinement; see refine_many."""
    [(seed, trace)] = refine_many(cluster, [(spec, oracle)], chi)
    return seed, trace


def phase_count(spec: FamilySpec, chi: int) -> int:
    return ceil(spec.seed_bits / chi)


def mean_trace_monotone(trace: list[PhaseTrace], direction: str,
                        seed_bits: int) -> bool:
    """Exact check that phase means never worsen: compares block_total /
    2^(remaining bits) across phases using cross-multiplication."""
    prev_total, prev_rem = trace[0].family_total, seed_bits
    for ph in trace:
        rem = seed_bits - ph.prefix_len
        # ph.block_total / 2^rem  vs  prev_total / 2^prev_rem
        lhs = ph.block_total << prev_rem
        rhs = prev_total << rem
        if direction == MAXIMIZE and lhs < rhs:
            return False
        if direction == MINIMIZE and lhs > rhs:
            return False
        prev_total, prev_rem = ph.block_total, rem
    return True
