"""Single-machine reference oracles: union-find connectivity used by the
verifier and the test suites."""

from __future__ import annotations


class UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def add(self, x) -> None:
        if x not in self.parent:
            self.parent[x] = x

    def find(self, x):
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a, b) -> bool:
        self.add(a)
        self.add(b)
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


def components(edges, vertices=()) -> dict:
    """Map every vertex to the minimum vertex id of its component."""
    uf = UnionFind()
    for v in vertices:
        uf.add(v)
    for u, v in edges:
        uf.union(u, v)
    groups: dict = {}
    for v in uf.parent:
        groups.setdefault(uf.find(v), []).append(v)
    labels = {}
    for members in groups.values():
        lab = min(members)
        for v in members:
            labels[v] = lab
    return labels


def count_components(edges, vertices=()) -> int:
    labs = components(edges, vertices)
    return len(set(labs.values()))


def diameter_estimate(edges, vertices=()) -> int:
    """Lower-bound the largest component diameter by double-sweep BFS:
    from an arbitrary vertex find a farthest one, then measure the
    eccentricity from there.  Exact on trees, within 2x in general."""
    adj: dict = {}
    for v in vertices:
        adj.setdefault(v, [])
    for u, v in edges:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)

    def bfs(src):
        dist = {src: 0}
        frontier = [src]
        far, ecc = src, 0
        while frontier:
            nxt = []
            for x in frontier:
                for y in adj[x]:
                    if y not in dist:
                        dist[y] = dist[x] + 1
                        if dist[y] > ecc:
                            far, ecc = y, dist[y]
                        nxt.append(y)
            frontier = nxt
        return far, ecc, dist

    best = 0
    seen: set = set()
    for v in adj:
        if v in seen:
            continue
        far, _, dist = bfs(v)
        seen.update(dist)
        best = max(best, bfs(far)[1])
    return best
