"""Command-line harness for the connectivity library.

Reads a whitespace-separated edge list, runs a deterministic connectivity
driver under explicit space accounting, and prints one ``vertex label`` line
per vertex.  Optional modes verify the labeling against a union-find oracle,
emit the spanning forest witnessed by the contraction log, write single-line
JSON run statistics, and run the seeded cycle-reduction experiment that
measures how quickly long cycles collapse when short segments are contracted.

Exit codes: 0 success (including verification when requested), 1 input could
not be parsed or read, 2 a space budget was exceeded, 3 parameters were
infeasible, 4 an iteration guard tripped, 5 verification failed.
"""

import argparse
import json
import math
import sys
import time
from collections import Counter
from dataclasses import asdict, dataclass

from .connectivity import connectivity_andoni, connectivity_behnezhad
from .errors import (
    ConfigError,
    GlobalSpaceExceeded,
    IdOutOfRange,
    MissingVertex,
    NonTermination,
    ParamsInfeasible,
    ParseError,
    SpaceExceeded,
)
from .graphstore import load_graph, spanning_forest
from .oracle import components, count_components
from .rng import splitmix64, coin_p
from .sim import MpcConfig, MpcCluster

MAX_ID = 1 << 62

_DRIVERS = {"andoni": connectivity_andoni, "behnezhad": connectivity_behnezhad}


# --------------------------------------------------------------------------
# input parsing


def ingest_edge_list(lines):
    """Parse an iterable of text lines into a deduplicated edge list and the
    full vertex set.

    Each non-empty line is either ``u v`` (an edge) or ``v`` (declaring an
    isolated vertex); ids are decimal unsigned integers below 2**62.  Lines
    whose first non-blank character is ``#`` are comments.  Self-loops are
    dropped but still declare their endpoint; duplicate edges are merged.
    Returns ``(edges, vertices)`` as sorted lists.
    """
    edges = set()
    vertices = set()
    for line_no, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        fields = text.split()
        if len(fields) > 2:
            raise ParseError(line_no, f"expected 'u v' or 'v', got {len(fields)} fields")
        ids = []
        for field in fields:
            if not (field.isascii() and field.isdigit()):
                raise ParseError(line_no, f"{field!r} is not a decimal unsigned integer")
            value = int(field)
            if value >= MAX_ID:
                raise IdOutOfRange(line_no, f"vertex id {value} is not below 2**62")
            ids.append(value)
        vertices.update(ids)
        if len(ids) == 2 and ids[0] != ids[1]:
            edges.add((min(ids), max(ids)))
    return sorted(edges), sorted(vertices)


# --------------------------------------------------------------------------
# connectivity runs


@dataclass
class RunStats:
    """Summary of one connectivity run, serializable as one JSON line."""

    algorithm: str
    rounds: int
    phases_or_iterations: int
    peak_local_words: int
    peak_global_words: int
    num_components: int
    wall_time_ms: int

    def to_json(self) -> str:
        return json.dumps({"schema": 1, **asdict(self)})


def run(edges, vertices, algo: str, config: MpcConfig, chi: int | None = None,
        want_forest: bool = False):
    """Run one connectivity driver on a fresh cluster.

    Returns ``(labels, stats, forest)`` where ``labels`` maps every vertex to
    the smallest id in its component, ``stats`` is a :class:`RunStats`, and
    ``forest`` is a list of ``(child, parent)`` spanning-forest edges when
    requested (``None`` otherwise).
    """
    try:
        driver = _DRIVERS[algo]
    except KeyError:
        raise ConfigError(f"unknown algorithm {algo!r}") from None
    cluster = MpcCluster(config)
    g, log = load_graph(cluster, edges, singletons=vertices)
    start = time.perf_counter()
    labels, stats = driver(g, log, chi)
    wall_ms = int((time.perf_counter() - start) * 1000)
    run_stats = RunStats(algorithm=algo,
                         rounds=cluster.round_counter,
                         phases_or_iterations=(stats.phases if algo == "andoni"
                                               else stats.iterations),
                         peak_local_words=cluster.peak_local,
                         peak_global_words=cluster.peak_global,
                         num_components=len(set(labels.values())),
                         wall_time_ms=wall_ms)
    forest = spanning_forest(log, labels) if want_forest else None
    return labels, run_stats, forest


def verify_labeling(labels: dict, edges, vertices) -> list:
    """Compare a labeling against the union-find oracle.

    Returns up to ten violating vertex pairs: two vertices of one component
    labeled apart, or representatives of two components sharing a label.  An
    empty list means the labeling is correct.  Raises :class:`MissingVertex`
    if the labeling does not cover every graph vertex.
    """
    truth = components(edges, vertices)
    for v in truth:
        if v not in labels:
            raise MissingVertex(f"labeling misses vertex {v}")
    by_comp: dict = {}
    for v in sorted(truth):
        by_comp.setdefault(truth[v], []).append(v)
    violations: list = []
    label_owner: dict = {}
    for root in sorted(by_comp):
        members = by_comp[root]
        first = members[0]
        for v in members[1:]:
            if labels[v] != labels[first]:
                violations.append((first, v))
                if len(violations) >= 10:
                    return violations
        owner = label_owner.setdefault(labels[first], first)
        if truth[owner] != root:
            violations.append((owner, first))
            if len(violations) >= 10:
                return violations
    return violations


# --------------------------------------------------------------------------
# cycle-reduction experiment


@dataclass
class _PassInfo:
    removed: int
    surviving: int
    long_vertices: int
    contracted: int
    rounds: int
    peak_local: int
    peak_global: int


@dataclass
class CycleTrialReport:
    """Outcome of one seeded trial of the cycle-reduction experiment.

    The ``removed_edges`` through ``contracted_components`` fields describe
    the first reduction pass (the one the surviving-edge bound is stated
    for); the remaining fields describe the full iterated reduction.
    """

    trial: int
    seed: int
    n: int
    diameter: int
    removed_edges: int
    surviving_edges: int
    edge_bound: float
    bound_holds: bool
    long_vertex_fraction: float
    contracted_components: int
    passes: int
    total_rounds: int
    peak_local_words: int
    peak_global_words: int
    final_edges: int
    final_components: int

    def to_json(self) -> str:
        return json.dumps({"schema": 1, **asdict(self)})


def _cycle_edges(lo: int, hi: int) -> list:
    """Edges of the cycle visiting lo, lo+1, ..., hi, lo in order."""
    ring = [(v, v + 1) for v in range(lo, hi)]
    ring.append((lo, hi) if hi > lo + 1 else (lo, lo + 1))
    return ring


def _reduction_pass(edges, vertices, diameter: int, pass_seed: int,
                    algo: str, delta: float, space_const: int,
                    global_const: int, chi: int | None):
    """One pass: remove each non-loop edge with probability 1/sqrt(diameter),
    find the remaining components with the chosen driver, contract exactly
    the components whose diameter is at most the target, and restore the
    removed edges between the contracted endpoints.

    ``edges`` may contain parallel edges and self-loops from earlier passes;
    self-loops stand for fully contracted cycles and are carried through
    verbatim.  Returns ``(new_edges, new_vertices, info)``.
    """
    p = 1.0 / math.sqrt(diameter)
    loops = [e for e in edges if e[0] == e[1]]
    lottery = sorted(e for e in edges if e[0] != e[1])
    removed, kept = [], []
    for idx, edge in enumerate(lottery):
        (removed if coin_p(pass_seed, idx, p) else kept).append(edge)

    kept_simple = sorted({(min(u, v), max(u, v)) for u, v in kept})
    config = MpcConfig(delta=delta, space_const=space_const,
                       global_const=global_const,
                       problem_size_n=max(1, len(vertices)),
                       problem_size_m=len(kept_simple))
    cluster = MpcCluster(config)
    g, log = load_graph(cluster, kept_simple, singletons=vertices)
    labels, _stats = _DRIVERS[algo](g, log, chi)

    # Every component of the kept subgraph is a path or a cycle (degree <= 2
    # throughout), so its diameter follows from its vertex and edge counts.
    size = Counter(labels[v] for v in vertices)
    arcs = Counter(labels[u] for u, _v in kept)
    for v, _ in loops:
        arcs[labels[v]] += 1

    def diam(comp):
        k, a = size[comp], arcs.get(comp, 0)
        return k // 2 if a >= k else k - 1

    contracted = {comp for comp in size if diam(comp) <= diameter}
    remap = {v: labels[v] if labels[v] in contracted else v for v in vertices}

    new_edges = list(loops)
    for u, v in kept:
        if labels[u] not in contracted:
            new_edges.append((u, v))
    for u, v in removed:
        new_edges.append((remap[u], remap[v]))
    new_vertices = sorted(set(remap.values()))

    info = _PassInfo(removed=len(removed),
                     surviving=len(new_edges),
                     long_vertices=sum(size[c] for c in size
                                       if c not in contracted),
                     contracted=sum(1 for c in contracted if size[c] >= 2),
                     rounds=cluster.round_counter,
                     peak_local=cluster.peak_local,
                     peak_global=cluster.peak_global)
    return new_edges, new_vertices, info


def cycle_reduction_experiment(n: int, diameter: int, seed: int,
                               trials: int = 1, two_cycles: bool = False,
                               algo: str = "behnezhad", delta: float = 1.0,
                               space_const: int = 8, global_const: int = 16,
                               chi: int | None = None,
                               full_reduction: bool = True) -> list:
    """Run seeded trials of the cycle-reduction experiment.

    The input is one n-cycle, or two n/2-cycles when ``two_cycles`` is set.
    Each pass removes every edge independently with probability
    1/sqrt(diameter), finds the components of what remains with the chosen
    deterministic driver as a black box, contracts only the components whose
    diameter is at most ``diameter`` (longer ones are left untouched, keeping
    all their edges), and restores the removed edges between the contracted
    endpoints.  The first pass is measured against the 3N/sqrt(D)
    surviving-edge bound; with ``full_reduction`` the pass repeats until the
    surviving graph fits on one machine of a square-root-space cluster, and
    the final component count read off that machine distinguishes one
    starting cycle from two.  Returns one :class:`CycleTrialReport` per
    trial; all randomness derives from ``seed`` through a counter-based
    64-bit generator, so reports are reproducible bit for bit.
    """
    if algo not in _DRIVERS:
        raise ConfigError(f"unknown algorithm {algo!r}")
    if diameter < 1:
        raise ConfigError(f"diameter must be >= 1, got {diameter}")
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    if two_cycles:
        if n % 2 or n < 6:
            raise ConfigError(f"two cycles need an even n >= 6, got {n}")
        start_edges = _cycle_edges(1, n // 2) + _cycle_edges(n // 2 + 1, n)
    else:
        if n < 3:
            raise ConfigError(f"a cycle needs n >= 3, got {n}")
        start_edges = _cycle_edges(1, n)

    bound = 3.0 * n / math.sqrt(diameter)
    fits_one_machine = max(16, space_const * math.isqrt(n))
    max_passes = 4 * math.ceil(math.log2(n + 4)) + 16
    reports = []
    for trial in range(trials):
        trial_seed = splitmix64(seed, trial)
        edges_now = list(start_edges)
        verts_now = list(range(1, n + 1))
        total_rounds = 0
        peak_local = peak_global = 0
        passes = 0
        first = None
        while True:
            pass_seed = splitmix64(trial_seed, passes)
            edges_now, verts_now, info = _reduction_pass(
                edges_now, verts_now, diameter, pass_seed, algo,
                delta, space_const, global_const, chi)
            total_rounds += info.rounds
            peak_local = max(peak_local, info.peak_local)
            peak_global = max(peak_global, info.peak_global)
            passes += 1
            if first is None:
                first = info
            if not full_reduction or len(edges_now) <= fits_one_machine:
                break
            if passes >= max_passes:
                raise NonTermination(
                    "cycle reduction made insufficient progress",
                    {"trial": trial, "passes": passes,
                     "edges": len(edges_now), "diameter": diameter})
        reports.append(CycleTrialReport(
            trial=trial, seed=trial_seed, n=n, diameter=diameter,
            removed_edges=first.removed, surviving_edges=first.surviving,
            edge_bound=bound, bound_holds=first.surviving <= bound,
            long_vertex_fraction=first.long_vertices / n,
            contracted_components=first.contracted,
            passes=passes, total_rounds=total_rounds,
            peak_local_words=peak_local, peak_global_words=peak_global,
            final_edges=len(edges_now),
            final_components=count_components(edges_now, verts_now)))
    return reports


# --------------------------------------------------------------------------
# command-line front end


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with the infeasible-parameters
    code instead of argparse's generic 2 (reserved here for space errors)."""

    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="mpcgraph",
        description="Deterministic connectivity on a simulated "
                    "space-bounded cluster: label components, verify "
                    "against union-find, extract spanning forests, and "
                    "run the cycle-reduction experiment.")
    parser.add_argument("--algo", choices=sorted(_DRIVERS), default="behnezhad",
                        help="connectivity driver (default: behnezhad)")
    parser.add_argument("--delta", type=float, default=1.0,
                        help="machine space exponent: S = space-const * "
                             "ceil(n**delta) words (default: 1.0)")
    parser.add_argument("--space-const", type=int, default=8,
                        help="multiplier on the per-machine space (default: 8)")
    parser.add_argument("--global-const", type=int, default=16,
                        help="global budget is this times n+m words "
                             "(default: 16)")
    parser.add_argument("--chi", type=int, default=None,
                        help="seed bits fixed per derandomization phase "
                             "(default: chosen from machine space)")
    parser.add_argument("--verify", action="store_true",
                        help="check the labeling against a union-find oracle; "
                             "exit 5 listing up to ten violating pairs on "
                             "failure")
    parser.add_argument("--forest", action="store_true",
                        help="after the labeling, print '# forest' and one "
                             "'child parent' line per spanning-forest edge")
    parser.add_argument("--stats", metavar="PATH",
                        help="write single-line JSON run statistics to PATH")
    parser.add_argument("--seed", type=int, default=0,
                        help="64-bit seed for the experiment (default: 0)")
    parser.add_argument("--experiment", choices=("cycles",),
                        help="run the named experiment instead of reading a "
                             "graph")
    parser.add_argument("--n", type=int,
                        help="experiment: total number of cycle vertices")
    parser.add_argument("--diameter", type=int,
                        help="experiment: contract only components of at "
                             "most this diameter")
    parser.add_argument("--trials", type=int, default=1,
                        help="experiment: number of seeded trials "
                             "(default: 1)")
    parser.add_argument("--two-cycles", action="store_true",
                        help="experiment: start from two n/2-cycles instead "
                             "of one n-cycle")
    parser.add_argument("--input", metavar="PATH",
                        help="read the edge list from PATH instead of stdin")
    return parser


def _run_command(args) -> int:
    if args.input:
        with open(args.input, encoding="utf-8") as fh:
            edges, vertices = ingest_edge_list(fh)
    else:
        edges, vertices = ingest_edge_list(sys.stdin)
    config = MpcConfig(delta=args.delta, space_const=args.space_const,
                       global_const=args.global_const,
                       problem_size_n=max(1, len(vertices)),
                       problem_size_m=len(edges))
    labels, stats, forest = run(edges, vertices, args.algo, config,
                                chi=args.chi, want_forest=args.forest)
    for v in sorted(labels):
        print(v, labels[v])
    if forest is not None:
        print("# forest")
        for child, parent in sorted(forest):
            print(child, parent)
    if args.stats:
        with open(args.stats, "w", encoding="utf-8") as fh:
            fh.write(stats.to_json() + "\n")
    if args.verify:
        violations = verify_labeling(labels, edges, vertices)
        if violations:
            print(f"verify: FAIL, {len(violations)} violating pairs:",
                  file=sys.stderr)
            for u, v in violations:
                print(f"verify: {u} {v}", file=sys.stderr)
            return 5
        print("verify: pass", file=sys.stderr)
    return 0


def _experiment_command(args) -> int:
    if args.n is None or args.diameter is None:
        raise ConfigError("--experiment cycles requires --n and --diameter")
    reports = cycle_reduction_experiment(
        args.n, args.diameter, args.seed, trials=args.trials,
        two_cycles=args.two_cycles, algo=args.algo, delta=args.delta,
        space_const=args.space_const, global_const=args.global_const,
        chi=args.chi)
    for report in reports:
        print(report.to_json())
    if args.stats:
        expected = 2 if args.two_cycles else 1
        summary = {
            "schema": 1,
            "experiment": "cycles",
            "n": args.n,
            "diameter": args.diameter,
            "trials": args.trials,
            "two_cycles": args.two_cycles,
            "bound_holds": sum(1 for r in reports if r.bound_holds),
            "distinguished": sum(1 for r in reports
                                 if r.final_components == expected),
            "mean_surviving_edges": (sum(r.surviving_edges for r in reports)
                                     / len(reports)),
            "total_rounds": [r.total_rounds for r in reports],
        }
        with open(args.stats, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(summary) + "\n")
    return 0


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.experiment:
            return _experiment_command(args)
        return _run_command(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SpaceExceeded, GlobalSpaceExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ParamsInfeasible) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NonTermination as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
