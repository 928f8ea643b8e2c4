"""DAG and CPDAG algebra: paths, d-separation, and back-door analysis.

Graphs are immutable after construction and every query is a pure
function, so instances can be shared freely across threads. Node order
is the insertion order given at construction; it drives all iteration
and output so results are reproducible.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence


class Dag:
    """Directed acyclic graph over named nodes.

    Edges are (parent, child) pairs. Construction rejects self-loops,
    duplicate node names, unknown endpoints, and directed cycles.
    """

    def __init__(self, nodes: Sequence[str], edges: Iterable[tuple[str, str]]):
        nodes = tuple(nodes)
        if len(set(nodes)) != len(nodes):
            raise ValueError("duplicate node names")
        node_set = set(nodes)
        edge_set = set()
        for a, b in edges:
            if a == b:
                raise ValueError(f"self-loop on {a!r}")
            if a not in node_set or b not in node_set:
                raise ValueError(f"edge ({a!r}, {b!r}) references unknown node")
            edge_set.add((a, b))
        self.nodes = nodes
        self.edges = frozenset(edge_set)
        self._index = {v: i for i, v in enumerate(nodes)}
        self._parents = {v: set() for v in nodes}
        self._children = {v: set() for v in nodes}
        for a, b in edge_set:
            self._children[a].add(b)
            self._parents[b].add(a)
        if self._topological_order() is None:
            raise ValueError("edge set contains a directed cycle")

    def _topological_order(self) -> list[str] | None:
        indeg = {v: len(self._parents[v]) for v in self.nodes}
        queue = [v for v in self.nodes if indeg[v] == 0]
        order = []
        while queue:
            # pop smallest index for a deterministic order
            queue.sort(key=self._index.__getitem__)
            v = queue.pop(0)
            order.append(v)
            for c in sorted(self._children[v], key=self._index.__getitem__):
                indeg[c] -= 1
                if indeg[c] == 0:
                    queue.append(c)
        return order if len(order) == len(self.nodes) else None

    def index(self, v: str) -> int:
        self._require(v)
        return self._index[v]

    def parents(self, v: str) -> set[str]:
        self._require(v)
        return set(self._parents[v])

    def children(self, v: str) -> set[str]:
        self._require(v)
        return set(self._children[v])

    def topological_order(self) -> list[str]:
        order = self._topological_order()
        assert order is not None
        return order

    def has_edge(self, a: str, b: str) -> bool:
        return (a, b) in self.edges

    def adjacent(self, a: str, b: str) -> bool:
        return (a, b) in self.edges or (b, a) in self.edges

    def remove_outgoing(self, v: str) -> "Dag":
        """Copy of the graph with all edges out of ``v`` deleted."""
        self._require(v)
        return Dag(self.nodes, [(a, b) for a, b in self.edges if a != v])

    def _require(self, *names: str) -> None:
        for v in names:
            if v not in self._index:
                raise KeyError(f"unknown node {v!r}")

    def __repr__(self):
        return f"Dag(nodes={list(self.nodes)}, edges={sorted(self.edges)})"

    def __eq__(self, other):
        return (isinstance(other, Dag) and self.nodes == other.nodes
                and self.edges == other.edges)

    def __hash__(self):
        return hash((self.nodes, self.edges))


class Cpdag:
    """Partially directed graph: directed plus undirected edges.

    Undirected edges are stored as canonical pairs ordered by node index.
    A node pair may appear in at most one of the two edge sets.
    """

    def __init__(self, nodes: Sequence[str], directed: Iterable[tuple[str, str]],
                 undirected: Iterable[tuple[str, str]]):
        nodes = tuple(nodes)
        if len(set(nodes)) != len(nodes):
            raise ValueError("duplicate node names")
        index = {v: i for i, v in enumerate(nodes)}
        directed_set = set()
        for a, b in directed:
            if a == b:
                raise ValueError(f"self-loop on {a!r}")
            if a not in index or b not in index:
                raise ValueError(f"edge ({a!r}, {b!r}) references unknown node")
            directed_set.add((a, b))
        undirected_set = set()
        for a, b in undirected:
            if a == b:
                raise ValueError(f"self-loop on {a!r}")
            if a not in index or b not in index:
                raise ValueError(f"edge ({a!r}, {b!r}) references unknown node")
            if index[a] > index[b]:
                a, b = b, a
            undirected_set.add((a, b))
        for a, b in undirected_set:
            if (a, b) in directed_set or (b, a) in directed_set:
                raise ValueError(f"pair ({a!r}, {b!r}) is both directed and undirected")
        self.nodes = nodes
        self.directed = frozenset(directed_set)
        self.undirected = frozenset(undirected_set)
        self._index = index

    def index(self, v: str) -> int:
        return self._index[v]

    def adjacent(self, a: str, b: str) -> bool:
        lo, hi = sorted((a, b), key=self._index.__getitem__)
        return ((a, b) in self.directed or (b, a) in self.directed
                or (lo, hi) in self.undirected)

    def to_dag(self) -> Dag:
        """Convert to a DAG; fails if any edge is still undirected."""
        if self.undirected:
            raise ValueError(
                f"graph has {len(self.undirected)} undirected edge(s); not a DAG")
        return Dag(self.nodes, self.directed)

    def __eq__(self, other):
        return (isinstance(other, Cpdag) and self.nodes == other.nodes
                and self.directed == other.directed
                and self.undirected == other.undirected)

    def __hash__(self):
        return hash((self.nodes, self.directed, self.undirected))

    def __repr__(self):
        return (f"Cpdag(nodes={list(self.nodes)}, directed={sorted(self.directed)}, "
                f"undirected={sorted(self.undirected)})")


@dataclass(frozen=True)
class BackdoorViolation:
    """Why an adjustment set fails: a bad descendant or an open path."""

    kind: str  # "descendant-violation" | "unblocked-path"
    node: str | None = None
    path: tuple[str, ...] | None = None


@dataclass(frozen=True)
class BackdoorCertificate:
    """Outcome of checking one adjustment set against the back-door rule."""

    treatment: str
    outcome: str
    adjustment_set: frozenset[str]
    valid: bool
    violated_condition: BackdoorViolation | None = None


def is_blocked(g: Dag, path: Sequence[str], given: Iterable[str]) -> bool:
    """Whether a path is blocked by the conditioning set.

    A path is blocked iff some interior non-collider is conditioned on,
    or some interior collider has neither itself nor any descendant in
    the conditioning set.
    """
    given = set(given)
    path = list(path)
    if len(path) < 2:
        raise ValueError("a path needs at least two nodes")
    if len(set(path)) != len(path):
        raise ValueError("node sequence revisits a node, not a path")
    for a, b in zip(path, path[1:]):
        if not g.adjacent(a, b):
            raise ValueError(f"({a!r}, {b!r}) is not an edge of the graph")
    for i in range(1, len(path) - 1):
        prev_node, node, next_node = path[i - 1], path[i], path[i + 1]
        collider = g.has_edge(prev_node, node) and g.has_edge(next_node, node)
        if collider:
            if not (({node} | descendants(g, node)) & given):
                return True
        elif node in given:
            return True
    return False


def d_separated(g: Dag, x: str, y: str, given: Iterable[str]) -> bool:
    """d-separation of ``x`` and ``y`` given a conditioning set.

    Implemented as reachability over (node, direction) states: a state is
    explored downward when entered from a parent and upward when entered
    from a child, with colliders opened only when the current node has a
    conditioned descendant.
    """
    given = set(given)
    g._require(x, y, *given)
    if x == y:
        raise ValueError("x and y must differ")
    if x in given or y in given:
        raise ValueError("x and y must not be in the conditioning set")

    # nodes that are in the conditioning set or have a descendant in it
    opening = set(given)
    stack = list(given)
    while stack:
        v = stack.pop()
        for p in g._parents[v]:
            if p not in opening:
                opening.add(p)
                stack.append(p)

    UP, DOWN = 0, 1
    visited = set()
    frontier = [(x, UP)]
    while frontier:
        node, direction = frontier.pop()
        if (node, direction) in visited:
            continue
        visited.add((node, direction))
        if node == y and node not in given:
            return False
        if direction == UP and node not in given:
            for p in g._parents[node]:
                frontier.append((p, UP))
            for c in g._children[node]:
                frontier.append((c, DOWN))
        elif direction == DOWN:
            if node not in given:
                for c in g._children[node]:
                    frontier.append((c, DOWN))
            if node in opening:
                for p in g._parents[node]:
                    frontier.append((p, UP))
    return True


def descendants(g: Dag, v: str) -> set[str]:
    """All nodes reachable from ``v`` along directed edges, excluding ``v``."""
    g._require(v)
    out = set()
    stack = [v]
    while stack:
        node = stack.pop()
        for c in g._children[node]:
            if c not in out:
                out.add(c)
                stack.append(c)
    return out


def undirected_paths(g: Dag, x: str, y: str) -> Iterator[tuple[str, ...]]:
    """Simple paths between two nodes, ignoring edge direction.

    Enumeration order is deterministic: neighbors are visited by node
    index, so the first yielded path is the same on every run.
    """
    g._require(x, y)
    neighbors = {v: sorted(g._parents[v] | g._children[v], key=g._index.__getitem__)
                 for v in g.nodes}
    path = [x]
    on_path = {x}

    def walk():
        tip = path[-1]
        if tip == y:
            yield tuple(path)
            return
        for nxt in neighbors[tip]:
            if nxt not in on_path:
                path.append(nxt)
                on_path.add(nxt)
                yield from walk()
                path.pop()
                on_path.discard(nxt)

    yield from walk()


def satisfies_backdoor(g: Dag, x: str, y: str, given: Iterable[str]) -> BackdoorCertificate:
    """Check the back-door condition for an adjustment set.

    Valid iff no conditioned node descends from the treatment, and the set
    blocks every path between treatment and outcome that starts with an
    edge into the treatment. Invalid certificates name the offending
    descendant or carry one unblocked into-treatment path.
    """
    given = frozenset(given)
    g._require(x, y, *given)
    if x == y:
        raise ValueError("treatment and outcome must differ")
    if x in given or y in given:
        raise ValueError("adjustment set must exclude treatment and outcome")

    desc_x = descendants(g, x)
    for v in sorted(given, key=g._index.__getitem__):
        if v in desc_x:
            return BackdoorCertificate(
                treatment=x, outcome=y, adjustment_set=given, valid=False,
                violated_condition=BackdoorViolation("descendant-violation", node=v))

    for path in undirected_paths(g, x, y):
        if not g.has_edge(path[1], x):
            continue  # not an into-treatment path
        if not is_blocked(g, path, given):
            return BackdoorCertificate(
                treatment=x, outcome=y, adjustment_set=given, valid=False,
                violated_condition=BackdoorViolation("unblocked-path", path=path))

    return BackdoorCertificate(treatment=x, outcome=y, adjustment_set=given, valid=True)


def find_backdoor_sets(g: Dag, x: str, y: str, max_size: int = 4) -> list[frozenset[str]]:
    """All valid adjustment sets up to ``max_size``, minimal sets first.

    Within the minimal and non-minimal groups, sets are ordered
    lexicographically by node index.
    """
    g._require(x, y)
    if x == y:
        raise ValueError("treatment and outcome must differ")
    candidates = [v for v in g.nodes if v not in (x, y)]
    valid: list[frozenset[str]] = []
    for size in range(0, max_size + 1):
        for combo in itertools.combinations(candidates, size):
            s = frozenset(combo)
            if satisfies_backdoor(g, x, y, s).valid:
                valid.append(s)
    valid_set = set(valid)

    def minimal(s):
        return not any(t < s for t in valid_set)

    def lex_key(s):
        return tuple(sorted(g._index[v] for v in s))

    return sorted(valid, key=lambda s: (0 if minimal(s) else 1, lex_key(s)))


def to_dot(g: Dag | Cpdag) -> str:
    """Render a graph in DOT format; undirected edges carry dir=none."""
    lines = ["digraph G {"]
    for v in g.nodes:
        lines.append(f'  "{v}";')
    if isinstance(g, Dag):
        directed = g.edges
        undirected: frozenset[tuple[str, str]] = frozenset()
    else:
        directed = g.directed
        undirected = g.undirected
    idx = g._index
    for a, b in sorted(directed, key=lambda e: (idx[e[0]], idx[e[1]])):
        lines.append(f'  "{a}" -> "{b}";')
    for a, b in sorted(undirected, key=lambda e: (idx[e[0]], idx[e[1]])):
        lines.append(f'  "{a}" -> "{b}" [dir=none];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_to_json(g: Dag | Cpdag) -> str:
    """Serialize a graph to the JSON wire format.

    Schema: {"nodes": [...], "directed": [[a, b], ...],
    "undirected": [[a, b], ...]} with edges sorted by node index.
    """
    idx = g._index
    if isinstance(g, Dag):
        directed = g.edges
        undirected: frozenset[tuple[str, str]] = frozenset()
    else:
        directed = g.directed
        undirected = g.undirected
    doc = {
        "nodes": list(g.nodes),
        "directed": [list(e) for e in sorted(directed, key=lambda e: (idx[e[0]], idx[e[1]]))],
        "undirected": [list(e) for e in sorted(undirected, key=lambda e: (idx[e[0]], idx[e[1]]))],
    }
    return json.dumps(doc, indent=2) + "\n"


def graph_from_json(text: str) -> Dag | Cpdag:
    """Parse the JSON wire format; returns a Dag when fully directed."""
    doc = json.loads(text)
    nodes = doc["nodes"]
    directed = [tuple(e) for e in doc.get("directed", [])]
    undirected = [tuple(e) for e in doc.get("undirected", [])]
    if undirected:
        return Cpdag(nodes, directed, undirected)
    return Dag(nodes, directed)
