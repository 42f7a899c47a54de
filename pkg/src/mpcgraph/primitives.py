"""Deterministic MPC primitives: sort, prefix scan, predecessor, colored
aggregation, routing, broadcast.

Layout convention: a "sequence" store holds records ordered by (machine id,
local index), distributed contiguously.  mpc_sort ends with machine i holding
ranks [i*chunk, (i+1)*chunk) of the sorted order, chunk = ceil(R / M).

The sort is sample-based with an exact rank rebalance, so the final chunks are
perfectly balanced; intermediate bucket loads are bounded by R/M + O(t*M)
(regular sampling every t-th record) and checked by the simulator.  Round
counts depend only on the machine/space geometry, not on record values.

The coordinator regime requires M <= S/3 machines so splitter lists and
per-machine offsets fit on machine 0; configurations outside it raise
ConfigError rather than degrade.
"""

from __future__ import annotations

from bisect import bisect_right
from math import ceil

from .errors import ConfigError, SpaceExceeded
from .sim import MpcCluster

SENT_NONE = 0  # predecessor sentinel: positions are 1-based, 0 means "none"


def _check_coordinator_regime(cluster: MpcCluster) -> None:
    m = len(cluster.machines)
    s = cluster.config.local_capacity
    if m > s // 3 and m > 1:
        raise ConfigError(
            f"{m} machines with capacity {s}: primitives need M <= S/3; "
            "raise space_const or delta"
        )


def run_local(cluster: MpcCluster, fn) -> None:
    """Apply a pure-local transform on every machine.  No messages, no round;
    space is still accounted."""
    for mach in cluster.machines:
        fn(mach)
        words = mach.words()
        if words > cluster.config.local_capacity:
            raise SpaceExceeded(mach.id, words, cluster.config.local_capacity, "local compute")
        if words > cluster.peak_local:
            cluster.peak_local = words
    cluster._account_global()


def route(cluster: MpcCluster, store: str, dest_fn, out_store: str | None = None) -> None:
    """One round: move every record of `store` to machine dest_fn(record)."""
    target = out_store or store

    def step(mach):
        recs = mach.stores.pop(store, None)
        if recs:
            for r in recs:
                mach.send(dest_fn(r), target, r)

    cluster.run_round(step)


def broadcast0(cluster: MpcCluster, store: str) -> None:
    """Replicate machine 0's `store` records to every machine (tree).  All
    copies end up in sorted record order (message delivery sorts records, so
    the source copy is canonicalized the same way)."""
    m = len(cluster.machines)
    cluster.machines[0].stores.get(store, []).sort()
    if m == 1:
        return
    payload = len(cluster.machines[0].stores.get(store, ()))
    s = cluster.config.local_capacity
    # senders hold resident data besides the broadcast payload, so only a
    # quarter of the capacity is spent on outgoing copies per round
    fan = max(1, (s // 4) // max(1, payload))
    holders = 1
    while holders < m:
        new_holders = min(m, holders * (fan + 1))
        assignments: dict[int, list[int]] = {}
        nxt = holders
        for h in range(holders):
            for _ in range(fan):
                if nxt >= new_holders:
                    break
                assignments.setdefault(h, []).append(nxt)
                nxt += 1

        def step(mach, assignments=assignments):
            targets = assignments.get(mach.id)
            if targets:
                recs = mach.stores.get(store, ())
                for t in targets:
                    for r in recs:
                        mach.send(t, store, r)

        cluster.run_round(step)
        holders = new_holders


def gather0(cluster: MpcCluster, store: str) -> None:
    """One round: move all records of `store` to machine 0."""
    def step(mach):
        if mach.id != 0:
            recs = mach.stores.pop(store, None)
            if recs:
                for r in recs:
                    mach.send(0, store, r)

    cluster.run_round(step)


def _offsets_from_zero(cluster: MpcCluster, per_machine: list, store: str) -> None:
    """Machine 0 sends per_machine[i] (a record) to machine i."""
    def step(mach):
        if mach.id == 0:
            for i, rec in enumerate(per_machine):
                mach.send(i, store, rec)

    cluster.run_round(step)


def _machine_summaries_to_zero(cluster: MpcCluster, summarize, store: str) -> None:
    """One round: machine i sends (i, *summarize(machine)) to machine 0."""
    def step(mach):
        mach.send(0, store, (mach.id,) + tuple(summarize(mach)))

    cluster.run_round(step)


def global_count(cluster: MpcCluster, store: str) -> int:
    """Coordinator count of records in `store` (2 rounds)."""
    _check_coordinator_regime(cluster)
    tmp = "_count"
    _machine_summaries_to_zero(cluster, lambda m: (len(m.stores.get(store, ())),), tmp)
    m0 = cluster.machines[0]
    total = sum(r[1] for r in m0.stores.get(tmp, ()))
    m0.stores.pop(tmp, None)
    return total


def mpc_sort(cluster: MpcCluster, store: str, key=None) -> int:
    """Globally sort `store` records; returns the record count.

    Ties are broken by original (machine, index) position, so the result is a
    stable, fully deterministic order and duplicates spread evenly.
    """
    _check_coordinator_regime(cluster)
    keyf = key or (lambda r: r)
    m = len(cluster.machines)
    s = cluster.config.local_capacity

    run_local(cluster, lambda mach: mach.stores.get(store, []).sort(key=keyf))
    if m == 1:
        return len(cluster.machines[0].stores.get(store, ()))

    # record count -> coordinator, sampling stride + chunk -> everyone
    _machine_summaries_to_zero(
        cluster, lambda mach: (len(mach.stores.get(store, ())),), "_cnt")
    m0 = cluster.machines[0]
    counts = {r[0]: r[1] for r in m0.stores.pop("_cnt", ())}
    total = sum(counts.values())
    if total == 0:
        return 0
    stride = max(1, ceil(3 * total / s))
    chunk = ceil(total / m)
    m0.store("_params").append((stride, chunk))
    broadcast0(cluster, "_params")

    # regular samples -> coordinator
    def sample_step(mach):
        stride_, _ = mach.stores.pop("_params")[0]
        recs = mach.stores.get(store, ())
        for idx in range(stride_ - 1, len(recs), stride_):
            mach.send(0, "_samples", (keyf(recs[idx]), mach.id, idx))

    cluster.run_round(sample_step)

    samples = sorted(m0.stores.pop("_samples", ()))
    ns = len(samples)
    splitters = [samples[min(ns - 1, (j * ns) // m)] for j in range(1, m)]
    m0.store("_split").extend(splitters)
    broadcast0(cluster, "_split")

    # route into approximate buckets, then local sort by tagged key
    def bucket_step(mach):
        spl = mach.stores.pop("_split")
        recs = mach.stores.pop(store, None)
        if recs:
            for idx, r in enumerate(recs):
                tagged = (keyf(r), mach.id, idx)
                mach.send(bisect_right(spl, tagged), "_tagged", (tagged, r))

    cluster.run_round(bucket_step)
    run_local(cluster, lambda mach: mach.stores.get("_tagged", []).sort())

    # exact rebalance by global rank
    _machine_summaries_to_zero(
        cluster, lambda mach: (len(mach.stores.get("_tagged", ())),), "_cnt")
    counts = {r[0]: r[1] for r in m0.stores.pop("_cnt", ())}
    offsets, acc = [], 0
    for i in range(m):
        offsets.append((acc,))
        acc += counts.get(i, 0)
    _offsets_from_zero(cluster, offsets, "_off")

    def rebalance_step(mach):
        off = mach.stores.pop("_off")[0][0]
        recs = mach.stores.pop("_tagged", None)
        if recs:
            for idx, (_tag, r) in enumerate(recs):
                mach.send(min(m - 1, (off + idx) // chunk), store, r)

    cluster.run_round(rebalance_step)
    run_local(cluster, lambda mach: mach.stores.get(store, []).sort(key=keyf))
    return total


def mpc_prefix_sum(cluster: MpcCluster, store: str, value_fn, emit_fn) -> None:
    """Inclusive prefix sums over the sequence order.  Each record r at global
    position j is replaced by emit_fn(r, sum of value_fn over positions <= j)."""
    _check_coordinator_regime(cluster)
    _machine_summaries_to_zero(
        cluster,
        lambda mach: (sum(value_fn(r) for r in mach.stores.get(store, ())),),
        "_psum")
    m0 = cluster.machines[0]
    sums = {r[0]: r[1] for r in m0.stores.pop("_psum", ())}
    offsets, acc = [], 0
    for i in range(len(cluster.machines)):
        offsets.append((acc,))
        acc += sums.get(i, 0)
    _offsets_from_zero(cluster, offsets, "_poff")

    def apply(mach):
        running = mach.stores.pop("_poff")[0][0]
        recs = mach.stores.get(store)
        if recs:
            out = []
            for r in recs:
                running += value_fn(r)
                out.append(emit_fn(r, running))
            mach.stores[store] = out

    run_local(cluster, apply)


def mpc_predecessor(cluster: MpcCluster, store: str, flag_fn, value_fn, emit_fn) -> None:
    """For each record (sequence order), attach the value_fn of the closest
    earlier record with flag_fn true, or SENT_NONE if there is none.  The
    record itself is replaced by emit_fn(r, predecessor_value)."""
    _check_coordinator_regime(cluster)

    def summarize(mach):
        last = SENT_NONE
        has = 0
        for r in mach.stores.get(store, ()):
            if flag_fn(r):
                has, last = 1, value_fn(r)
        return (has, last)

    _machine_summaries_to_zero(cluster, summarize, "_pred")
    m0 = cluster.machines[0]
    summ = {r[0]: (r[1], r[2]) for r in m0.stores.pop("_pred", ())}
    carries, carry = [], SENT_NONE
    for i in range(len(cluster.machines)):
        carries.append((carry,))
        has, last = summ.get(i, (0, SENT_NONE))
        if has:
            carry = last
    _offsets_from_zero(cluster, carries, "_pcar")

    def apply(mach):
        carry_ = mach.stores.pop("_pcar")[0][0]
        recs = mach.stores.get(store)
        if recs:
            out = []
            for r in recs:
                out.append(emit_fn(r, carry_))
                if flag_fn(r):
                    carry_ = value_fn(r)
            mach.stores[store] = out

    run_local(cluster, apply)


def _boundary_prev_color(cluster: MpcCluster, store: str, color_fn) -> None:
    """Each machine learns the color of the first record on the next non-empty
    machine (stored as a single record in '_nextcol'; absent means none).
    Requires contiguously distributed records (as after mpc_sort)."""
    def step(mach):
        recs = mach.stores.get(store, ())
        if recs and mach.id > 0:
            mach.send(mach.id - 1, "_nextcol", (color_fn(recs[0]),))

    cluster.run_round(step)


def colored_summation(cluster: MpcCluster, store: str, out_store: str) -> None:
    """Exact per-color sums of (color, value) records.

    Pipeline: sort by color, inclusive prefix sums of values, flag the last
    record of every color, fetch each flagged record's predecessor-flagged
    prefix, and emit (color, prefix - predecessor_prefix).  Input records are
    consumed; output records live where they were emitted.
    """
    total = mpc_sort(cluster, store, key=lambda r: r[0])
    if total == 0:
        cluster.drop_store(store)
        return
    mpc_prefix_sum(cluster, store, lambda r: r[1], lambda r, y: (r[0], r[1], y))
    _boundary_prev_color(cluster, store, lambda r: r[0])

    def flag(mach):
        recs = mach.stores.get(store)
        if not recs:
            mach.stores.pop("_nextcol", None)
            return
        nxt = mach.stores.pop("_nextcol", None)
        next_color = nxt[0][0] if nxt else None
        out = []
        for i, (c, v, y) in enumerate(recs):
            if i + 1 < len(recs):
                z = 1 if recs[i + 1][0] != c else 0
            else:
                z = 1 if (next_color is None or next_color != c) else 0
            out.append((c, v, y, z))
        mach.stores[store] = out

    run_local(cluster, flag)
    # predecessor over flagged running totals; sentinel 0 doubles as "sum 0"
    mpc_predecessor(cluster, store,
                    flag_fn=lambda r: r[3],
                    value_fn=lambda r: r[2],
                    emit_fn=lambda r, q: r + (q,))

    def emit(mach):
        recs = mach.stores.pop(store, ())
        if recs:
            out = mach.store(out_store)
            for c, _v, y, z, q in recs:
                if z:
                    out.append((c, y - q))

    run_local(cluster, emit)


def colored_min(cluster: MpcCluster, store: str, out_store: str,
                value_key=None) -> None:
    """Per-color minimum of (color, value, ...) records, deterministic ties by
    full record.  Sort groups colors; the first record of each color group is
    the minimum and is emitted as-is."""
    vkey = value_key or (lambda r: r[1:])
    total = mpc_sort(cluster, store, key=lambda r: (r[0],) + tuple(vkey(r)))
    if total == 0:
        cluster.drop_store(store)
        return

    # each machine learns the last color on the previous non-empty machine
    def step(mach):
        recs = mach.stores.get(store, ())
        if recs and mach.id + 1 < len(cluster.machines):
            mach.send(mach.id + 1, "_prevcol", (recs[-1][0],))

    cluster.run_round(step)

    def emit(mach):
        recs = mach.stores.pop(store, ())
        prev = mach.stores.pop("_prevcol", None)
        prev_color = prev[0][0] if prev else None
        if recs:
            out = mach.store(out_store)
            for i, r in enumerate(recs):
                c = r[0]
                if (i == 0 and c != prev_color) or (i > 0 and recs[i - 1][0] != c):
                    out.append(r)

    run_local(cluster, emit)
