"""Paired junction trees for a two-monotone lower probability: construction,
local evidence entry, collect/distribute propagation and posterior queries.

The m-tree carries Möbius potentials and is propagated with :func:`loc_m`; the
q-tree carries commonality potentials and is propagated with :func:`loc_q`.
The two propagations never interact.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    ContradictionError,
    EmptyEvidenceError,
    MalformedModelError,
    NonLocalEvidenceError,
    NonLocalQueryError,
    ScopeError,
)
from .events import Event, Scope, Variable, extend_mask, project_mask
from .graph import Graph, JunctionTree, junction_tree_for
from .setfunc import (
    TOL,
    ZERO_TOL,
    Interval,
    Role,
    SetFunction,
    Status,
    commonality_dense,
    conditional_interval,
    dual_dense,
    loc_m,
    loc_q,
    lower_at,
    restrict_to_evidence,
    upper_at,
    zeta_dense,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Finding:
    event: Event


@dataclass(frozen=True)
class QueryTarget:
    event: Event


@dataclass
class Model:
    variables: tuple[Variable, ...]
    m_graph: Graph
    q_graph: Graph
    m_tree: JunctionTree
    q_tree: JunctionTree
    evidence_log: list[Finding] = field(default_factory=list)
    m_propagated: bool = False
    q_propagated: bool = False
    vacuous: bool = False
    contradiction: bool = False

    @property
    def scope(self) -> Scope:
        return Scope(self.variables)

    def variable(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise ScopeError(f"unknown variable {name!r}")

    def copy(self) -> Model:
        return Model(
            self.variables,
            self.m_graph,
            self.q_graph,
            self.m_tree.copy(),
            self.q_tree.copy(),
            list(self.evidence_log),
            self.m_propagated,
            self.q_propagated,
            self.vacuous,
            self.contradiction,
        )

    def same_encoding(self, other: Model) -> bool:
        """Structural equality of variables, graphs, trees and potentials."""
        return (
            self.variables == other.variables
            and self.m_graph == other.m_graph
            and self.q_graph == other.q_graph
            and self.m_tree == other.m_tree
            and self.q_tree == other.q_tree
        )


# -- construction -------------------------------------------------------------


def projection_table(scope: Scope, sub: Scope) -> np.ndarray:
    """Projected mask over ``sub`` for every event mask over ``scope``."""
    from .events import projection_map

    pmap = projection_map(scope, sub)
    masks = np.arange(1 << scope.size, dtype=np.int64)
    out = np.zeros_like(masks)
    for i, j in enumerate(pmap):
        out |= ((masks >> i) & 1) << j
    return out


def _extend_m(f: SetFunction, scope: Scope) -> SetFunction:
    return SetFunction(scope, f.role, {extend_mask(k, f.scope, scope): v for k, v in f.items()})


def _extend_q(f: SetFunction, scope: Scope) -> SetFunction:
    # commonality of a vacuous extension is the original evaluated at the projection
    table = projection_table(scope, f.scope)
    small = f.dense()
    return SetFunction.from_dense(scope, f.role, small[table])


def _bind(tree: JunctionTree, potentials: Sequence[SetFunction], side: str) -> None:
    nodes = tree.nodes
    assigned: dict[int, SetFunction] = {}
    exact = [f for f in potentials if f.scope in nodes]
    loose = [f for f in potentials if f.scope not in nodes]
    for f in exact:
        i = nodes.index(f.scope)
        if i in assigned:
            raise MalformedModelError(f"two {side}-potentials bind to clique {f.scope!r}")
        assigned[i] = f
    for f in loose:
        free = [i for i, n in enumerate(nodes) if f.scope <= n and i not in assigned]
        if not free:
            if any(f.scope <= n for n in nodes):
                raise MalformedModelError(
                    f"{side}-potential over {f.scope!r} has no free containing clique"
                )
            raise MalformedModelError(
                f"{side}-potential over {f.scope!r} is not contained in any junction-tree node"
            )
        i = free[0]
        assigned[i] = _extend_m(f, nodes[i]) if side == "m" else _extend_q(f, nodes[i])
    for i, node in enumerate(nodes):
        if i in assigned:
            f = assigned[i]
            if side == "m" and abs(f.get(0)) > ZERO_TOL:
                raise MalformedModelError(f"m-potential over {node!r} assigns mass to the empty event")
            if side == "q" and 0 not in f.entries:
                f = SetFunction(f.scope, f.role, {0: 1.0, **f.entries})
            tree.node_potentials[i] = f.with_role(Role.POTENTIAL)
        elif len(node):
            raise MalformedModelError(f"no {side}-potential covers junction-tree node {node!r}")


def _bind_separators(tree: JunctionTree, seps, side: str) -> None:
    for (a, b), f in seps:
        hits = [
            k
            for k, (i, j, _) in enumerate(tree.edges)
            if {tree.nodes[i], tree.nodes[j]} == {a, b}
        ]
        if not hits:
            raise MalformedModelError(f"no {side}-tree edge between {a!r} and {b!r}")
        k = hits[0]
        sep = tree.edges[k][2]
        if f.scope != sep:
            raise MalformedModelError(f"separator potential scope {f.scope!r} != {sep!r}")
        tree.edge_potentials[k] = f.with_role(Role.POTENTIAL)


def _commonality_potential(f: SetFunction) -> SetFunction:
    q = commonality_dense(dual_dense(zeta_dense(f.dense())))
    return SetFunction.from_dense(f.scope, Role.POTENTIAL, q)


def derive_q_tree(m_tree: JunctionTree) -> JunctionTree:
    """Commonality potentials on the same tree, from the propagated m-side marginals.

    Valid when the commonality function factors on the m-graph; deep
    validation confirms it.
    """
    tmp = m_tree.copy()
    if _propagate_tree(tmp, loc_m, "m"):
        raise MalformedModelError("m-side propagation hit a division by zero")
    total = lower_at(tmp.node_potentials[0], tmp.nodes[0].full_mask)
    if abs(total - 1.0) > 1e-6:
        raise MalformedModelError(f"m-potentials encode a joint with total mass {total}, not 1")
    return JunctionTree(
        list(tmp.nodes),
        list(tmp.edges),
        [_commonality_potential(f) for f in tmp.node_potentials],
        [_commonality_potential(f) for f in tmp.edge_potentials],
    )


def build_model(
    variables: Sequence[Variable],
    m_graph: Graph,
    m_potentials: Sequence[SetFunction],
    q_graph: Graph | None = None,
    q_potentials: Sequence[SetFunction] | None = None,
    m_separators=(),
    q_separators=(),
) -> Model:
    """Triangulate, extract junction trees and bind the declared potentials.

    Declared potentials over a strict subset of a node are moved onto it by
    vacuous (cylinder) extension.  Without ``q_potentials`` the q-tree is
    derived from the m-side, which requires both graphs to share cliques.
    """
    variables = tuple(sorted(variables, key=lambda v: (v.order, v.name)))
    m_chordal, m_tree = junction_tree_for(m_graph)
    _bind(m_tree, m_potentials, "m")
    _bind_separators(m_tree, m_separators, "m")
    if len(m_tree.nodes) == 1 and abs(m_tree.node_potentials[0].total() - 1.0) > 1e-6:
        raise MalformedModelError(
            f"m-potential masses sum to {m_tree.node_potentials[0].total()}, not 1"
        )
    if q_graph is None:
        q_chordal, q_tree = m_chordal, None
    else:
        q_chordal, q_tree = junction_tree_for(q_graph)
    if q_potentials is None:
        if q_tree is not None and q_tree.nodes != m_tree.nodes:
            raise MalformedModelError("q_potentials are required when the q-graph has other cliques")
        if q_separators:
            raise MalformedModelError("q separators given without q potentials")
        q_tree = derive_q_tree(m_tree)
    else:
        if q_tree is None:
            _, q_tree = junction_tree_for(m_chordal)
        _bind(q_tree, q_potentials, "q")
        _bind_separators(q_tree, q_separators, "q")
    return Model(variables, m_chordal, q_chordal, m_tree, q_tree)


# -- evidence -----------------------------------------------------------------


def enter_evidence(model: Model, f: Finding | Event) -> Model:
    """Zero the potentials of one containing node per tree; mutates ``model``."""
    e = f.event if isinstance(f, Finding) else f
    if e.is_empty:
        raise EmptyEvidenceError(f"evidence over {e.scope!r} is the empty event")
    i = model.m_tree.find_node(e.scope)
    if i is None:
        raise NonLocalEvidenceError(f"evidence over {e.scope!r} fits no clique of the m-tree", tree="m")
    j = model.q_tree.find_node(e.scope)
    if j is None:
        raise NonLocalEvidenceError(f"evidence over {e.scope!r} fits no clique of the q-tree", tree="q")
    model.m_tree.node_potentials[i] = restrict_to_evidence(model.m_tree.node_potentials[i], e)
    model.q_tree.node_potentials[j] = restrict_to_evidence(model.q_tree.node_potentials[j], e)
    model.m_propagated = model.q_propagated = False
    model.vacuous = model.contradiction = False
    model.evidence_log.append(Finding(e))
    return model


# -- propagation --------------------------------------------------------------


def _step(tree: JunctionTree, src: int, dst: int, edge: int, loc: Callable, side: str) -> bool:
    """Pass a message from ``src`` to ``dst``; returns True on an x/0 with x != 0."""
    sep = tree.edges[edge][2]
    msg = loc(tree.node_potentials[src], sep)
    old = tree.edge_potentials[edge]
    target = tree.node_potentials[dst]
    singular = False
    ratios: dict[int, tuple[float, float]] = {}
    out = {}
    for k, v in target.items():
        s = project_mask(k, target.scope, sep)
        if s not in ratios:
            ratios[s] = (msg.get(s), old.get(s))
        num, den = ratios[s]
        if abs(den) <= ZERO_TOL:
            val = 0.0
            if abs(num * v) > ZERO_TOL:
                singular = True
        else:
            val = v * num / den
        if abs(val) > ZERO_TOL or (side == "q" and k == 0):
            out[k] = val
    tree.node_potentials[dst] = SetFunction(target.scope, target.role, out)
    tree.edge_potentials[edge] = msg
    return singular


def _propagate_tree(tree: JunctionTree, loc: Callable, side: str) -> bool:
    depth, parent = tree.depths(0)
    singular = False
    for child in sorted(parent, key=lambda i: (-depth[i], i)):
        p, k = parent[child]
        singular |= _step(tree, child, p, k, loc, side)
    for child in sorted(parent, key=lambda i: (depth[i], i)):
        p, k = parent[child]
        singular |= _step(tree, p, child, k, loc, side)
    return singular


def _totals(model: Model) -> tuple[float, float]:
    m_root = model.m_tree.node_potentials[0]
    q_root = model.q_tree.node_potentials[0]
    return lower_at(m_root, m_root.scope.full_mask), upper_at(q_root, q_root.scope.full_mask)


def propagate(model: Model) -> Model:
    """Full collect/distribute propagation of both trees; mutates ``model``.

    Raises :class:`ContradictionError` (after completing both trees) when the
    evidence has zero upper probability.  A zero lower probability of the
    evidence only marks the model as vacuous-conditioning.
    """
    m_singular = False
    if not model.m_propagated:
        m_singular = _propagate_tree(model.m_tree, loc_m, "m")
        model.m_propagated = True
    q_singular = False
    if not model.q_propagated:
        q_singular = _propagate_tree(model.q_tree, loc_q, "q")
        model.q_propagated = True
    low_E, up_E = _totals(model)
    q_empty_zero = any(abs(f.get(0)) <= ZERO_TOL for f in model.q_tree.node_potentials)
    model.contradiction = model.contradiction or q_singular or q_empty_zero or up_E <= TOL
    model.vacuous = model.vacuous or m_singular or low_E <= TOL
    if m_singular:
        log.warning("m-tree propagation hit x/0; conditioning is treated as vacuous")
    if model.contradiction:
        raise ContradictionError(
            f"evidence has zero upper probability (upper P(E) = {up_E:.3g}): logical contradiction"
        )
    return model


def _ensure_propagated(model: Model) -> None:
    if model.contradiction:
        raise ContradictionError("evidence has zero upper probability: logical contradiction")
    if not (model.m_propagated and model.q_propagated):
        propagate(model)


def total_evidence_bounds(model: Model) -> Interval:
    """``[P(E), Pu(E)]`` read off the propagated trees."""
    _ensure_propagated(model)
    low_E, up_E = _totals(model)
    status = Status.VACUOUS if model.vacuous else Status.NORMAL
    return Interval(min(max(low_E, 0.0), 1.0), min(max(up_E, 0.0), 1.0), status)


def query_posterior(model: Model, t: QueryTarget | Event) -> Interval:
    """Posterior lower/upper probability of a clique-local target event."""
    a = t.event if isinstance(t, QueryTarget) else t
    scope = a.scope
    i = model.m_tree.find_node(scope)
    j = model.q_tree.find_node(scope)
    if i is None or j is None:
        which = "m" if i is None else "q"
        raise NonLocalQueryError(f"target over {scope!r} fits no clique of the {which}-tree")
    _ensure_propagated(model)
    lm = loc_m(model.m_tree.node_potentials[i], scope)
    lq = loc_q(model.q_tree.node_potentials[j], scope)
    full = scope.full_mask
    ac = full ^ a.mask
    return conditional_interval(
        lower_at(lm, a.mask),
        upper_at(lq, ac),
        upper_at(lq, a.mask),
        lower_at(lm, ac),
        lower_at(lm, full),
        upper_at(lq, full),
    )


def marginal_lower(model: Model, node: int) -> SetFunction:
    """Lower probability of ``A & E`` for every event over an m-tree node."""
    _ensure_propagated(model)
    f = model.m_tree.node_potentials[node]
    return SetFunction.from_dense(f.scope, Role.LOWER, zeta_dense(f.dense()))


def pairwise_consistent(tree: JunctionTree, loc: Callable, tol: float = TOL) -> bool:
    for a, b, sep in tree.edges:
        if not loc(tree.node_potentials[a], sep).allclose(loc(tree.node_potentials[b], sep), tol):
            return False
    return True
