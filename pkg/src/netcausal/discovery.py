"""Constraint-based causal discovery (the PC algorithm).

Three phases produce a CPDAG from data:

1. ``pc_skeleton`` starts from the complete undirected graph and removes
   an edge as soon as some conditioning set of growing size renders the
   pair independent, recording that separating set.
2. ``orient_v_structures`` turns every unshielded triple x - w - y with
   w outside the recorded separating set of (x, y) into x -> w <- y.
3. ``apply_meek_rules`` propagates orientations to the closure.

All iteration is ordered by variable name, so the output is invariant
under permutations of the dataset's column order (the stable skeleton
variant additionally freezes adjacencies per level, removing any
dependence on removal order). Conflicting orientation demands are never
resolved by guessing: the edge stays undirected and the conflict is
reported in the diagnostics.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from netcausal.dataset import Dataset
from netcausal.graph import Cpdag, Dag
from netcausal.independence import (
    CiTestResult,
    KernelConfig,
    _conditioner_factor,
    _kernel_residual,
    _standardize_conditioners,
    fisher_z_test,
    hsic_test,
)

TESTS = ("hsic", "kernel_ci", "fisher_z")

SepSets = dict[frozenset[str], frozenset[str]]


class IndependenceTestError(RuntimeError):
    """An independence test failed during discovery; names the query."""


@dataclass(frozen=True)
class PcConfig:
    """Discovery parameters.

    ``test`` selects the conditional independence test; ``hsic`` is
    accepted as an alias of ``kernel_ci`` (they coincide on marginal
    queries, and conditioning is always realized by kernel
    residualization). ``stable`` freezes adjacency sets within each
    conditioning-size level.
    """

    level: float = 0.05
    max_cond_size: int = 3
    test: str = "kernel_ci"
    stable: bool = True
    kernel: KernelConfig = field(default_factory=KernelConfig)

    def __post_init__(self):
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must be in (0, 1)")
        if self.max_cond_size < 0:
            raise ValueError("max_cond_size must be >= 0")
        if self.test not in TESTS:
            raise ValueError(f"unknown test {self.test!r}, expected one of {TESTS}")


@dataclass
class PcDiagnostics:
    """What happened during a discovery run."""

    tests_per_level: dict[int, int] = field(default_factory=dict)
    removals_per_level: dict[int, list[dict]] = field(default_factory=dict)
    conflicts: list[tuple[str, str]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        doc = {
            "tests_per_level": {str(k): v for k, v in sorted(self.tests_per_level.items())},
            "removals_per_level": {str(k): v for k, v in sorted(self.removals_per_level.items())},
            "conflicts": [list(c) for c in self.conflicts],
            "notes": list(self.notes),
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


class _TestRunner:
    """Runs the configured test on named columns, caching kernel pieces.

    The cached conditioner factorizations and residual vectors reproduce
    ``kernel_ci_test`` bit for bit: the same helper functions run on the
    same inputs, they are just not recomputed per pair.
    """

    _FACTOR_CACHE_SIZE = 2

    def __init__(self, d: Dataset, cfg: PcConfig):
        self.cols = {v: d.column(v) for v in d.names}
        self.cfg = cfg
        self._factors: dict[tuple[str, ...], tuple] = {}
        self._residuals: dict[tuple[str, tuple[str, ...]], np.ndarray] = {}

    def run(self, x: str, y: str, zs: tuple[str, ...]) -> CiTestResult:
        try:
            return self._run(x, y, zs)
        except IndependenceTestError:
            raise
        except Exception as err:
            raise IndependenceTestError(
                f"test {self.cfg.test!r} failed for pair ({x!r}, {y!r}) "
                f"given {list(zs)}: {err}") from err

    def _run(self, x: str, y: str, zs: tuple[str, ...]) -> CiTestResult:
        cfg = self.cfg
        if cfg.test == "fisher_z":
            return fisher_z_test(self.cols[x], self.cols[y],
                                 [self.cols[z] for z in zs], cfg.level)
        if not zs:
            return hsic_test(self.cols[x], self.cols[y], cfg.level, cfg.kernel)
        if zs not in self._factors:
            if len(self._factors) >= self._FACTOR_CACHE_SIZE:
                evicted = next(iter(self._factors))
                del self._factors[evicted]
            n = len(self.cols[x])
            zmat = _standardize_conditioners([self.cols[z] for z in zs], n)
            self._factors[zs] = _conditioner_factor(zmat, cfg.kernel.regularization)
        K, factor = self._factors[zs]
        rx = self._residual(x, zs, K, factor)
        ry = self._residual(y, zs, K, factor)
        inner = hsic_test(rx, ry, cfg.level, cfg.kernel)
        return CiTestResult(statistic=inner.statistic, p_value=inner.p_value,
                            independent=inner.independent, test_name="kernel_ci",
                            conditioning_size=len(zs))

    def _residual(self, var: str, zs: tuple[str, ...], K, factor) -> np.ndarray:
        key = (var, zs)
        if key not in self._residuals:
            self._residuals[key] = _kernel_residual(self.cols[var], K, factor)
        return self._residuals[key]


def _skeleton(d: Dataset, cfg: PcConfig, diag: PcDiagnostics) -> tuple[Cpdag, SepSets]:
    names = sorted(d.names)
    if len(names) < 2:
        raise ValueError("discovery needs at least 2 variables")
    if d.n < 10:
        raise ValueError("discovery needs at least 10 samples")
    runner = _TestRunner(d, cfg)

    adj: dict[str, set[str]] = {v: set(names) - {v} for v in names}
    sepsets: SepSets = {}
    max_level = min(cfg.max_cond_size, len(names) - 2)
    if cfg.max_cond_size > max_level:
        diag.notes.append(
            f"max_cond_size clamped to {max_level} for {len(names)} variables")

    for level in range(0, max_level + 1):
        pairs = [(x, y) for x, y in itertools.combinations(names, 2) if y in adj[x]]
        if not any(len(adj[x] - {y}) >= level or len(adj[y] - {x}) >= level
                   for x, y in pairs):
            break
        frozen = {v: sorted(adj[v]) for v in names} if cfg.stable else None
        diag.tests_per_level.setdefault(level, 0)
        removals: list[tuple[str, str]] = []
        removal_records: list[dict] = []

        for x, y in pairs:
            found = False
            tried: set[frozenset[str]] = set()
            for base in (x, y):
                other = y if base == x else x
                neighborhood = (frozen[base] if cfg.stable else sorted(adj[base]))
                candidates = [v for v in neighborhood if v != other]
                if len(candidates) < level:
                    continue
                for combo in itertools.combinations(candidates, level):
                    s = frozenset(combo)
                    if s in tried:
                        continue
                    tried.add(s)
                    result = runner.run(x, y, combo)
                    diag.tests_per_level[level] += 1
                    if result.independent:
                        sepsets[frozenset((x, y))] = s
                        removal_records.append({
                            "pair": [x, y],
                            "separating_set": sorted(combo),
                            "p_value": result.p_value,
                        })
                        if cfg.stable:
                            removals.append((x, y))
                        else:
                            adj[x].discard(y)
                            adj[y].discard(x)
                        found = True
                        break
                if found:
                    break

        if cfg.stable:
            for x, y in removals:
                adj[x].discard(y)
                adj[y].discard(x)
        if removal_records:
            diag.removals_per_level[level] = removal_records

    undirected = [(x, y) for x, y in itertools.combinations(names, 2) if y in adj[x]]
    return Cpdag(names, [], undirected), sepsets


def pc_skeleton(d: Dataset, cfg: PcConfig = PcConfig()) -> tuple[Cpdag, SepSets]:
    """Estimate the undirected skeleton and the separating sets."""
    return _skeleton(d, cfg, PcDiagnostics())


def _neighbor_map(g: Cpdag) -> dict[str, set[str]]:
    nb: dict[str, set[str]] = {v: set() for v in g.nodes}
    for a, b in g.undirected:
        nb[a].add(b)
        nb[b].add(a)
    for a, b in g.directed:
        nb[a].add(b)
        nb[b].add(a)
    return nb


def _has_directed_path(directed: set[tuple[str, str]], src: str, dst: str) -> bool:
    children: dict[str, list[str]] = {}
    for a, b in directed:
        children.setdefault(a, []).append(b)
    stack, seen = [src], {src}
    while stack:
        v = stack.pop()
        if v == dst:
            return True
        for c in children.get(v, ()):
            if c not in seen:
                seen.add(c)
                stack.append(c)
    return False


def orient_v_structures(skeleton: Cpdag, sepsets: SepSets,
                        diagnostics: PcDiagnostics | None = None) -> Cpdag:
    """Orient unshielded colliders from the separating sets.

    For every x - w - y with x, y nonadjacent and w outside the
    separating set of (x, y), demand x -> w and y -> w. Edges demanded in
    both directions stay undirected and are reported as conflicts;
    demanded edges that would close a directed cycle are likewise left
    undirected with a diagnostic note.
    """
    diag = diagnostics if diagnostics is not None else PcDiagnostics()
    order = {v: i for i, v in enumerate(skeleton.nodes)}
    nb = _neighbor_map(skeleton)

    demands: set[tuple[str, str]] = set()
    for w in skeleton.nodes:
        for x, y in itertools.combinations(sorted(nb[w], key=order.__getitem__), 2):
            if skeleton.adjacent(x, y):
                continue
            key = frozenset((x, y))
            if key not in sepsets:
                diag.notes.append(
                    f"no separating set recorded for nonadjacent pair ({x}, {y})")
                continue
            if w not in sepsets[key]:
                demands.add((x, w))
                demands.add((y, w))

    directed: set[tuple[str, str]] = set()
    for a, b in sorted(demands, key=lambda e: (order[e[0]], order[e[1]])):
        if (b, a) in demands:
            pair = tuple(sorted((a, b), key=order.__getitem__))
            if pair not in diag.conflicts:
                diag.conflicts.append(pair)
            continue
        if _has_directed_path(directed, b, a):
            diag.notes.append(f"skipped collider edge {a} -> {b}: directed cycle")
            continue
        directed.add((a, b))

    oriented_pairs = {frozenset(e) for e in directed}
    undirected = [e for e in skeleton.undirected if frozenset(e) not in oriented_pairs]
    return Cpdag(skeleton.nodes, directed, undirected)


def apply_meek_rules(g: Cpdag, diagnostics: PcDiagnostics | None = None) -> Cpdag:
    """Close a partially directed graph under the four orientation rules.

    Rules fire on an undirected edge a - b and orient it a -> b when:

    1. some c -> a exists with c, b nonadjacent;
    2. a directed path a -> k -> b exists;
    3. two chains a - c -> b and a - d -> b exist with c, d nonadjacent;
    4. a - d, d -> c, c -> b exist with a, c adjacent and d, b nonadjacent.

    Orientation demands that would close a directed cycle are skipped
    with a diagnostic; on consistent inputs this never happens. Applying
    the closure twice equals applying it once.
    """
    diag = diagnostics if diagnostics is not None else PcDiagnostics()
    order = {v: i for i, v in enumerate(g.nodes)}
    directed = set(g.directed)
    undirected = set(g.undirected)

    def adjacent(a, b):
        key = tuple(sorted((a, b), key=order.__getitem__))
        return key in undirected or (a, b) in directed or (b, a) in directed

    def orient(a, b):
        key = tuple(sorted((a, b), key=order.__getitem__))
        if _has_directed_path(directed, b, a):
            note = f"skipped orientation {a} -> {b}: directed cycle"
            if note not in diag.notes:
                diag.notes.append(note)
            return False
        undirected.discard(key)
        directed.add((a, b))
        return True

    def rule_applies(a, b) -> bool:
        parents_a = [c for c, t in directed if t == a]
        # rule 1: c -> a, a - b, c and b nonadjacent
        for c in parents_a:
            if not adjacent(c, b):
                return True
        # rule 2: a -> k -> b
        for a2, k in directed:
            if a2 == a and (k, b) in directed:
                return True
        # rule 3: a - c -> b and a - d -> b with c, d nonadjacent
        into_b = [c for c, t in directed if t == b]
        linked = [c for c in into_b
                  if tuple(sorted((a, c), key=order.__getitem__)) in undirected]
        for c, d in itertools.combinations(sorted(linked, key=order.__getitem__), 2):
            if not adjacent(c, d):
                return True
        # rule 4: a - d, d -> c, c -> b with a, c adjacent and d, b nonadjacent
        for d, c in directed:
            if (c, b) in directed and adjacent(a, c) and not adjacent(d, b):
                key = tuple(sorted((a, d), key=order.__getitem__))
                if key in undirected:
                    return True
        return False

    changed = True
    while changed:
        changed = False
        for a, b in sorted(undirected, key=lambda e: (order[e[0]], order[e[1]])):
            if rule_applies(a, b):
                if orient(a, b):
                    changed = True
                    break
            elif rule_applies(b, a):
                if orient(b, a):
                    changed = True
                    break

    return Cpdag(g.nodes, directed, undirected)


def pc(d: Dataset, cfg: PcConfig = PcConfig()) -> tuple[Cpdag, SepSets, PcDiagnostics]:
    """Full discovery pipeline: skeleton, colliders, orientation closure."""
    diag = PcDiagnostics()
    skeleton, sepsets = _skeleton(d, cfg, diag)
    oriented = orient_v_structures(skeleton, sepsets, diag)
    closed = apply_meek_rules(oriented, diag)
    return closed, sepsets, diag


def cpdag_of_dag(g: Dag) -> Cpdag:
    """Markov equivalence class of a DAG as a CPDAG.

    Keeps the skeleton, orients exactly the unshielded colliders, and
    closes under the orientation rules.
    """
    undirected = [tuple(sorted(e, key=g.index)) for e in g.edges]
    skeleton = Cpdag(g.nodes, [], undirected)
    sepsets: SepSets = {}
    # separating sets of a known DAG: parents suffice; only membership of
    # the middle node matters, so record the true parent sets
    for x, y in itertools.combinations(g.nodes, 2):
        if g.adjacent(x, y):
            continue
        middle = set()
        for w in g.nodes:
            if w in (x, y):
                continue
            if g.adjacent(x, w) and g.adjacent(y, w):
                if not (g.has_edge(x, w) and g.has_edge(y, w)):
                    middle.add(w)
        sepsets[frozenset((x, y))] = frozenset(middle)
    oriented = orient_v_structures(skeleton, sepsets)
    return apply_meek_rules(oriented)


def structural_hamming_distance(g1: Cpdag | Dag, g2: Cpdag | Dag) -> int:
    """Edge-level edit distance between two graphs on the same nodes.

    Each unordered pair contributes 1 when its edge state (absent,
    directed either way, or undirected) differs between the graphs.
    """
    if set(g1.nodes) != set(g2.nodes):
        raise ValueError("graphs must share the same node set")

    def state(g, a, b):
        directed = g.edges if isinstance(g, Dag) else g.directed
        if (a, b) in directed:
            return "ab"
        if (b, a) in directed:
            return "ba"
        if isinstance(g, Cpdag):
            if (a, b) in g.undirected or (b, a) in g.undirected:
                return "und"
        return "none"

    dist = 0
    for a, b in itertools.combinations(sorted(g1.nodes), 2):
        if state(g1, a, b) != state(g2, a, b):
            dist += 1
    return dist
