"""Independent reference implementations used to check the package.

Everything in this module is deliberately written against plain data
structures (edge lists, numpy arrays) and never calls into netcausal,
so test assertions compare two unrelated code paths.
"""

from __future__ import annotations

import itertools

import numpy as np


# ---------------------------------------------------------------------------
# Graph oracles: plain edge-set representation, edges = set of (parent, child)
# ---------------------------------------------------------------------------

def oracle_descendants(nodes, edges, v):
    """Reachability by naive fixed-point iteration over the edge list."""
    reached = {v}
    changed = True
    while changed:
        changed = False
        for a, b in edges:
            if a in reached and b not in reached:
                reached.add(b)
                changed = True
    reached.discard(v)
    return reached


def oracle_all_paths(nodes, edges, x, y):
    """All simple paths between x and y, ignoring edge direction.

    Returns lists of node sequences starting at x and ending at y.
    """
    neighbors = {v: set() for v in nodes}
    for a, b in edges:
        neighbors[a].add(b)
        neighbors[b].add(a)

    paths = []

    def walk(path):
        tip = path[-1]
        if tip == y:
            paths.append(list(path))
            return
        for nxt in neighbors[tip]:
            if nxt not in path:
                path.append(nxt)
                walk(path)
                path.pop()

    walk([x])
    return paths


def oracle_path_blocked(nodes, edges, path, given):
    """Blocking rule evaluated literally on one path.

    A path is blocked by ``given`` iff some interior non-collider lies in
    ``given``, or some interior collider has neither itself nor any
    descendant in ``given``.
    """
    edge_set = set(edges)
    for i in range(1, len(path) - 1):
        prev_node, node, next_node = path[i - 1], path[i], path[i + 1]
        is_collider = (prev_node, node) in edge_set and (next_node, node) in edge_set
        if is_collider:
            closure = {node} | oracle_descendants(nodes, edges, node)
            if not (closure & set(given)):
                return True
        else:
            if node in given:
                return True
    return False


def oracle_d_separated(nodes, edges, x, y, given):
    """d-separation by exhaustive path enumeration."""
    for path in oracle_all_paths(nodes, edges, x, y):
        if not oracle_path_blocked(nodes, edges, path, given):
            return False
    return True


def enumerate_all_dags(n):
    """Yield every labeled DAG on nodes 0..n-1 as a frozenset of edges.

    Each unordered pair is assigned one of {absent, forward, backward};
    cyclic assignments are discarded.
    """
    pairs = list(itertools.combinations(range(n), 2))
    for assignment in itertools.product((0, 1, 2), repeat=len(pairs)):
        edges = set()
        for (a, b), code in zip(pairs, assignment):
            if code == 1:
                edges.add((a, b))
            elif code == 2:
                edges.add((b, a))
        if _is_acyclic(n, edges):
            yield frozenset(edges)


def _is_acyclic(n, edges):
    indeg = {v: 0 for v in range(n)}
    children = {v: [] for v in range(n)}
    for a, b in edges:
        indeg[b] += 1
        children[a].append(b)
    queue = [v for v in range(n) if indeg[v] == 0]
    seen = 0
    while queue:
        v = queue.pop()
        seen += 1
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                queue.append(c)
    return seen == n


def random_dag(n, rng, edge_prob=0.35):
    """Random DAG: random topological order, independent edge coin flips."""
    order = list(rng.permutation(n))
    rank = {v: i for i, v in enumerate(order)}
    edges = set()
    for a, b in itertools.combinations(range(n), 2):
        if rng.random() < edge_prob:
            if rank[a] < rank[b]:
                edges.add((a, b))
            else:
                edges.add((b, a))
    return edges


# ---------------------------------------------------------------------------
# Statistics oracles
# ---------------------------------------------------------------------------

def brute_force_hsic(x, y, bw_x, bw_y):
    """HSIC statistic (1/n^2) * trace(K H L H) by explicit double loops.

    The centering is applied entrywise from the definition
    Kc[i,j] = K[i,j] - rowmean_i - colmean_j + grandmean.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    K = np.empty((n, n))
    L = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            K[i, j] = np.exp(-((x[i] - x[j]) ** 2) / (2.0 * bw_x**2))
            L[i, j] = np.exp(-((y[i] - y[j]) ** 2) / (2.0 * bw_y**2))
    Kc = np.empty((n, n))
    Lc = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            Kc[i, j] = K[i, j] - K[i, :].mean() - K[:, j].mean() + K.mean()
            Lc[i, j] = L[i, j] - L[i, :].mean() - L[:, j].mean() + L.mean()
    total = 0.0
    for i in range(n):
        for j in range(n):
            total += Kc[i, j] * Lc[j, i]
    return total / n**2


def permutation_hsic_pvalue(statistic_fn, x, y, n_permutations, seed):
    """Permutation p-value for any bivariate dependence statistic."""
    rng = np.random.default_rng(seed)
    observed = statistic_fn(x, y)
    count = 0
    for _ in range(n_permutations):
        perm = rng.permutation(len(y))
        if statistic_fn(x, y[perm]) >= observed:
            count += 1
    return (1.0 + count) / (1.0 + n_permutations)


def least_squares_slope(x, y):
    """Slope of y on x with intercept, solved via the normal equations."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xc = x - x.mean()
    yc = y - y.mean()
    return float(np.dot(xc, yc) / np.dot(xc, xc))


def trapezoid_mean(grid, density):
    """Mean of a density known on a grid, via the trapezoid rule."""
    grid = np.asarray(grid, dtype=float)
    density = np.asarray(density, dtype=float)
    mass = np.trapezoid(density, grid)
    return float(np.trapezoid(grid * density, grid) / mass)


def total_variation(grid, f, g):
    """Total-variation distance between two grid densities: 0.5 * int |f-g|."""
    return float(0.5 * np.trapezoid(np.abs(np.asarray(f) - np.asarray(g)), grid))
