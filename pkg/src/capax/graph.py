"""Undirected graphs over variables, min-fill triangulation, maximal cliques
and junction-tree construction."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable

from .errors import ConfigurationError, InvalidOrderError
from .events import EMPTY_SCOPE, Scope, Variable, declare
from .setfunc import Role, SetFunction


@dataclass(frozen=True)
class Graph:
    vertices: tuple[Variable, ...]
    edges: frozenset = frozenset()

    def __post_init__(self):
        vs = tuple(sorted(self.vertices, key=lambda v: (v.order, v.name)))
        object.__setattr__(self, "vertices", vs)
        known = set(vs)
        clean = set()
        for e in self.edges:
            e = frozenset(e)
            if len(e) != 2:
                raise ConfigurationError(f"edge {set(e)!r} is a self-loop or malformed")
            if not e <= known:
                raise ConfigurationError(f"edge {set(e)!r} references an undeclared vertex")
            clean.add(e)
        object.__setattr__(self, "edges", frozenset(clean))

    @classmethod
    def from_names(cls, names: Iterable[str], edges: Iterable[tuple[str, str]], card: int = 2) -> Graph:
        """Convenience constructor with ``card``-valued variables."""
        vs = declare(*((n, [str(i) for i in range(card)]) for n in names))
        by_name = {v.name: v for v in vs}
        return cls(tuple(vs), frozenset(frozenset((by_name[a], by_name[b])) for a, b in edges))

    def adjacency(self) -> dict[Variable, set[Variable]]:
        adj = {v: set() for v in self.vertices}
        for e in self.edges:
            a, b = tuple(e)
            adj[a].add(b)
            adj[b].add(a)
        return adj

    def has_edge(self, a: Variable, b: Variable) -> bool:
        return frozenset((a, b)) in self.edges

    def edge_names(self) -> list[tuple[str, str]]:
        rank = {v: i for i, v in enumerate(self.vertices)}
        out = []
        for e in self.edges:
            a, b = sorted(e, key=rank.__getitem__)
            out.append((a.name, b.name))
        return sorted(out, key=lambda p: (rank[self.by_name(p[0])], rank[self.by_name(p[1])]))

    def by_name(self, name: str) -> Variable:
        for v in self.vertices:
            if v.name == name:
                return v
        raise KeyError(name)

    def components(self) -> list[list[Variable]]:
        adj = self.adjacency()
        seen, comps = set(), []
        for v in self.vertices:
            if v in seen:
                continue
            comp, todo = [], [v]
            seen.add(v)
            while todo:
                u = todo.pop()
                comp.append(u)
                for w in adj[u]:
                    if w not in seen:
                        seen.add(w)
                        todo.append(w)
            comps.append(comp)
        return comps


def triangulate(g: Graph) -> tuple[Graph, tuple[Variable, ...]]:
    """Min-fill elimination; ties by minimum degree, then canonical order."""
    adj = g.adjacency()
    rank = {v: i for i, v in enumerate(g.vertices)}
    remaining = set(g.vertices)
    filled = set(g.edges)
    order = []
    while remaining:
        def cost(v):
            nb = adj[v] & remaining
            fill = sum(1 for a, b in combinations(nb, 2) if b not in adj[a])
            return (fill, len(nb), rank[v])

        v = min(remaining, key=cost)
        nb = adj[v] & remaining
        for a, b in combinations(nb, 2):
            if b not in adj[a]:
                adj[a].add(b)
                adj[b].add(a)
                filled.add(frozenset((a, b)))
        order.append(v)
        remaining.remove(v)
    return Graph(g.vertices, frozenset(filled)), tuple(order)


def is_perfect_elimination_order(g: Graph, order) -> bool:
    adj = g.adjacency()
    if sorted(order, key=lambda v: (v.order, v.name)) != list(g.vertices):
        return False
    pos = {v: i for i, v in enumerate(order)}
    for v in order:
        later = [u for u in adj[v] if pos[u] > pos[v]]
        for a, b in combinations(later, 2):
            if b not in adj[a]:
                return False
    return True


def is_chordal(g: Graph) -> bool:
    """Maximum cardinality search, then a perfect-elimination check."""
    adj = g.adjacency()
    weight = {v: 0 for v in g.vertices}
    visited = []
    unvisited = set(g.vertices)
    rank = {v: i for i, v in enumerate(g.vertices)}
    while unvisited:
        v = max(unvisited, key=lambda u: (weight[u], -rank[u]))
        visited.append(v)
        unvisited.remove(v)
        for u in adj[v] & unvisited:
            weight[u] += 1
    return is_perfect_elimination_order(g, list(reversed(visited)))


def _canonical(scopes: Iterable[Scope]) -> list[Scope]:
    return sorted(scopes, key=lambda s: tuple((v.order, v.name) for v in s.variables))


def maximal_cliques(g: Graph, order) -> list[Scope]:
    if not is_perfect_elimination_order(g, order):
        raise InvalidOrderError("order is not a perfect elimination ordering of the graph")
    adj = g.adjacency()
    pos = {v: i for i, v in enumerate(order)}
    candidates = [frozenset([v, *(u for u in adj[v] if pos[u] > pos[v])]) for v in order]
    maximal = {c for c in candidates if not any(c < d for d in candidates)}
    return _canonical(Scope(tuple(c)) for c in maximal)


@dataclass
class JunctionTree:
    nodes: list[Scope]
    edges: list[tuple[int, int, Scope]] = field(default_factory=list)
    node_potentials: list[SetFunction] = field(default_factory=list)
    edge_potentials: list[SetFunction] = field(default_factory=list)

    def neighbors(self, i: int) -> list[tuple[int, int]]:
        """``(neighbor, edge index)`` pairs in edge order."""
        out = []
        for k, (a, b, _) in enumerate(self.edges):
            if a == i:
                out.append((b, k))
            elif b == i:
                out.append((a, k))
        return out

    def find_node(self, scope: Scope) -> int | None:
        """First node, in canonical order, whose scope contains ``scope``."""
        for i, node in enumerate(self.nodes):
            if scope <= node:
                return i
        return None

    def empty_node(self) -> int | None:
        for i, node in enumerate(self.nodes):
            if len(node) == 0:
                return i
        return None

    def copy(self) -> JunctionTree:
        return JunctionTree(
            list(self.nodes), list(self.edges), list(self.node_potentials), list(self.edge_potentials)
        )

    def depths(self, root: int = 0) -> tuple[dict[int, int], dict[int, tuple[int, int]]]:
        """BFS depths and ``child -> (parent, edge)`` links from ``root``."""
        depth = {root: 0}
        parent = {}
        todo = deque([root])
        while todo:
            i = todo.popleft()
            for j, k in self.neighbors(i):
                if j not in depth:
                    depth[j] = depth[i] + 1
                    parent[j] = (i, k)
                    todo.append(j)
        return depth, parent

    def path(self, i: int, j: int) -> list[int]:
        _, parent = self.depths(i)
        out = [j]
        while out[-1] != i:
            out.append(parent[out[-1]][0])
        return out[::-1]


def build_junction_tree(cliques: list[Scope]) -> JunctionTree:
    """Maximum-weight spanning tree over the clique graph.

    Edge weight is the number of shared variables; ties go to the larger
    separator state space, then to canonical clique order.  Disconnected
    clique graphs are joined through an extra node with the empty scope.
    """
    nodes = _canonical(cliques)
    if not nodes:
        nodes = [EMPTY_SCOPE]
    cand = []
    for i, j in combinations(range(len(nodes)), 2):
        sep = nodes[i] & nodes[j]
        if len(sep):
            cand.append((-len(sep), -sep.size, i, j, sep))
    cand.sort(key=lambda c: c[:4])
    parent = list(range(len(nodes)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges = []
    for _, _, i, j, sep in cand:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            edges.append((i, j, sep))
    roots = sorted({find(i) for i in range(len(nodes))})
    if len(roots) > 1:
        heads = [min(i for i in range(len(nodes)) if find(i) == r) for r in roots]
        hub = len(nodes)
        nodes.append(EMPTY_SCOPE)
        for h in sorted(heads):
            edges.append((h, hub, EMPTY_SCOPE))
    tree = JunctionTree(nodes, edges)
    tree.node_potentials = [SetFunction.constant(s, 1.0, Role.POTENTIAL) for s in nodes]
    tree.edge_potentials = [SetFunction.constant(s, 1.0, Role.POTENTIAL) for _, _, s in edges]
    return tree


def junction_tree_for(g: Graph) -> tuple[Graph, JunctionTree]:
    chordal, order = triangulate(g)
    return chordal, build_junction_tree(maximal_cliques(chordal, order))


def is_tree(t: JunctionTree) -> bool:
    if len(t.edges) != len(t.nodes) - 1:
        return False
    depth, _ = t.depths(0)
    return len(depth) == len(t.nodes)


def check_junction_property(t: JunctionTree) -> bool:
    """Every pair's scope intersection lies in each node on the path between them."""
    if not is_tree(t):
        return False
    for a, b, sep in t.edges:
        if sep != t.nodes[a] & t.nodes[b]:
            return False
    for i, j in combinations(range(len(t.nodes)), 2):
        common = t.nodes[i] & t.nodes[j]
        if not all(common <= t.nodes[k] for k in t.path(i, j)):
            return False
    return True
