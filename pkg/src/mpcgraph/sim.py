"""Synchronous MPC cluster simulator with round and space accounting.

A word is one fixed-width record (a tuple of ints).  Each machine owns named
stores of records.  A round applies a local step on every machine (local
computation is unlimited and uninstrumented), then delivers all emitted
messages.  Per round and machine, resident+sent words and resident+received
words must both fit in the local capacity S; total resident words must fit in
the global budget.  Violations raise, they are never clamped.

Determinism: machines are evaluated in id order and every inbox is sorted by
(sender, store, record) before delivery, so identical inputs give identical
states, round counts, and peaks on every run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigError, GlobalSpaceExceeded, SpaceExceeded


@dataclass(frozen=True)
class MpcConfig:
    delta: float
    space_const: int = 4
    global_const: int = 4
    problem_size_n: int = 1
    problem_size_m: int = 0

    def __post_init__(self):
        if not (0.0 < self.delta <= 1.0):
            raise ConfigError(f"delta must be in (0, 1], got {self.delta}")
        if self.space_const < 1 or self.global_const < 1:
            raise ConfigError("space_const and global_const must be >= 1")
        if self.problem_size_n < 1 or self.problem_size_m < 0:
            raise ConfigError("problem sizes must be n >= 1, m >= 0")
        if self.local_capacity < 2:
            raise ConfigError("local capacity below 2 words")

    @property
    def local_capacity(self) -> int:
        """S = space_const * ceil(n^delta) words per machine."""
        return self.space_const * math.ceil(self.problem_size_n ** self.delta)

    @property
    def global_budget(self) -> int:
        """Total words allowed to reside across all machines."""
        return self.global_const * (self.problem_size_n + self.problem_size_m)

    @property
    def machine_count(self) -> int:
        return max(1, math.ceil(self.global_budget / self.local_capacity))


class MachineState:
    __slots__ = ("id", "stores", "outbox")

    def __init__(self, mid: int):
        self.id = mid
        self.stores: dict[str, list] = {}
        self.outbox: list[tuple[int, str, tuple]] = []

    def store(self, name: str) -> list:
        s = self.stores.get(name)
        if s is None:
            s = self.stores[name] = []
        return s

    def send(self, dest: int, store: str, record: tuple) -> None:
        self.outbox.append((dest, store, record))

    def words(self) -> int:
        return sum(len(v) for v in self.stores.values())


class MpcCluster:
    def __init__(self, config: MpcConfig):
        self.config = config
        self.machines = [MachineState(i) for i in range(config.machine_count)]
        self.round_counter = 0
        self.peak_local = 0
        self.peak_global = 0

    # -- input loading (round 0 state, no communication round charged) --

    def scatter_input(self, store: str, records: list) -> None:
        """Distribute records contiguously: ceil/floor split by record index,
        e.g. 7 records on 3 machines -> sizes (3, 2, 2)."""
        m = len(self.machines)
        base, extra = divmod(len(records), m)
        pos = 0
        for i, mach in enumerate(self.machines):
            take = base + (1 if i < extra else 0)
            if take:
                mach.store(store).extend(records[pos:pos + take])
                pos += take
            words = mach.words()
            if words > self.config.local_capacity:
                raise SpaceExceeded(i, words, self.config.local_capacity, "scatter_input")
        self._account_global()

    # -- the round primitive --

    def run_round(self, local_step) -> None:
        cap = self.config.local_capacity
        inboxes: dict[int, list] = {}
        nmach = len(self.machines)
        for mach in self.machines:
            mach.outbox = []
            local_step(mach)
            resident = mach.words()
            sent = len(mach.outbox)
            if resident + sent > cap:
                raise SpaceExceeded(mach.id, resident + sent, cap, "after local step")
            if resident + sent > self.peak_local:
                self.peak_local = resident + sent
            for dest, store, record in mach.outbox:
                if not 0 <= dest < nmach:
                    raise ConfigError(f"message to machine {dest} of {nmach}")
                inboxes.setdefault(dest, []).append((mach.id, store, record))
            mach.outbox = []
        for dest, incoming in inboxes.items():
            mach = self.machines[dest]
            resident = mach.words()
            if resident + len(incoming) > cap:
                raise SpaceExceeded(dest, resident + len(incoming), cap, "on receive")
            if resident + len(incoming) > self.peak_local:
                self.peak_local = resident + len(incoming)
            incoming.sort()
            for _sender, store, record in incoming:
                mach.store(store).append(record)
        self._account_global()
        self.round_counter += 1

    def _account_global(self) -> None:
        total = sum(m.words() for m in self.machines)
        if total > self.peak_global:
            self.peak_global = total
        if total > self.config.global_budget:
            raise GlobalSpaceExceeded(total, self.config.global_budget)

    # -- instrumentation helpers (state inspection, not communication) --

    def gather(self, store: str) -> list:
        out = []
        for mach in self.machines:
            out.extend(mach.stores.get(store, ()))
        return out

    def store_size(self, store: str) -> int:
        return sum(len(m.stores.get(store, ())) for m in self.machines)

    def drop_store(self, store: str) -> None:
        for mach in self.machines:
            mach.stores.pop(store, None)
