"""Flat, non-graphical reference computations used to check the engine.

Everything here enumerates the full joint event space with dense numpy arrays
indexed by event mask, so it is only usable for a handful of joint
configurations (see :func:`size_guard`).
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InconsistentPairError,
    MalformedModelError,
    PreconditionError,
    ScopeError,
    SizeGuardError,
)
from .events import EMPTY_SCOPE, Event, Scope, Variable, declare, projection_map
from .graph import Graph, JunctionTree, junction_tree_for
from .engine import Model, projection_table
from .setfunc import (
    TOL,
    ZERO_TOL,
    Interval,
    Role,
    SetFunction,
    Status,
    check_two_monotone,
    commonality_dense,
    conditional_interval,
    dual_dense,
    inv_commonality_dense,
    parity_signs,
    zeta_dense,
)

DEFAULT_GUARD = 16


def size_guard() -> int:
    """Maximum number of joint configurations the flat oracle will enumerate."""
    raw = os.environ.get("CAPAX_SIZE_GUARD")
    return int(raw) if raw else DEFAULT_GUARD


def _check_guard(scope: Scope, guard: int | None):
    guard = size_guard() if guard is None else guard
    if scope.size > guard:
        raise SizeGuardError(
            f"joint space has {scope.size} configurations, above the oracle guard of {guard}"
        )


def _extension_table(scope: Scope, sub: Scope, projected: np.ndarray) -> np.ndarray:
    """Cylinder over ``scope`` of each projected mask in ``projected``."""
    pmap = projection_map(scope, sub)
    out = np.zeros_like(projected)
    for i, j in enumerate(pmap):
        out |= ((projected >> j) & 1) << i
    return out


def rectangular_masks(scope: Scope, cliques) -> np.ndarray:
    """Rectangularization of every event mask over ``scope``."""
    masks = np.arange(1 << scope.size, dtype=np.int64)
    out = np.full_like(masks, scope.full_mask)
    for c in cliques:
        sub = c & scope
        out &= _extension_table(scope, sub, projection_table(scope, sub))
    return out


def _product_form(tree: JunctionTree, scope: Scope, at: np.ndarray) -> np.ndarray:
    """Clique-over-separator product evaluated at the projections of ``at``."""
    num = np.ones(at.shape[0])
    den = np.ones(at.shape[0])
    for node, f in zip(tree.nodes, tree.node_potentials):
        num *= f.dense()[projection_table(scope, node)[at]]
    for (_, _, sep), f in zip(tree.edges, tree.edge_potentials):
        den *= f.dense()[projection_table(scope, sep)[at]]
    out = np.zeros_like(num)
    zero_den = np.abs(den) <= ZERO_TOL
    if np.any(zero_den & (np.abs(num) > ZERO_TOL)):
        raise MalformedModelError("product form divides a nonzero clique product by a zero separator")
    ok = ~zero_den
    out[ok] = num[ok] / den[ok]
    return out


@dataclass
class FlatJoint:
    scope: Scope
    m_joint: SetFunction
    q_joint: SetFunction
    dual_error: float | None = None
    m_dense: np.ndarray = field(default=None, repr=False, compare=False)
    q_dense: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.m_dense is None:
            self.m_dense = self.m_joint.dense()
        if self.q_dense is None:
            self.q_dense = self.q_joint.dense()

    def condition(self, evidence: Event) -> FlatBounds:
        return FlatBounds(self, evidence)


def flat_joint(scope: Scope, m_dense: np.ndarray, q_dense: np.ndarray | None = None) -> FlatJoint:
    """Flat joint from a dense Möbius array; the commonality side defaults to its dual."""
    if q_dense is None:
        q_dense = commonality_dense(dual_dense(zeta_dense(m_dense)))
    return FlatJoint(
        scope,
        SetFunction.from_dense(scope, Role.MOBIUS, m_dense),
        SetFunction.from_dense(scope, Role.COMMONALITY, q_dense),
        None,
        m_dense,
        q_dense,
    )


def assemble_joint(model: Model, guard: int | None = None, check_dual: bool | None = None) -> FlatJoint:
    """Multiply out the clique and separator potentials of both trees.

    The Möbius side is evaluated only on rectangles of the m-graph and is zero
    elsewhere.  Dual consistency is checked by default when no evidence has
    been entered, since conditioned m and Q are no longer duals.
    """
    scope = model.scope
    _check_guard(scope, guard)
    masks = np.arange(1 << scope.size, dtype=np.int64)
    rect = rectangular_masks(scope, model.m_tree.nodes) == masks
    m = np.zeros(masks.shape[0])
    m[rect] = _product_form(model.m_tree, scope, masks[rect])
    q = _product_form(model.q_tree, scope, masks)
    if check_dual is None:
        check_dual = not model.evidence_log
    err = None
    if check_dual:
        total = math.fsum(m)
        if abs(total - 1.0) > 1e-6:
            raise MalformedModelError(f"assembled Möbius joint sums to {total}, not 1")
        expected = commonality_dense(dual_dense(zeta_dense(m)))
        err = float(np.max(np.abs(expected - q)))
        if err > TOL:
            raise InconsistentPairError(
                f"q-side joint differs from the dual of the m-side joint by {err:.3g}", err
            )
    return FlatJoint(
        scope,
        SetFunction.from_dense(scope, Role.MOBIUS, m),
        SetFunction.from_dense(scope, Role.COMMONALITY, q),
        err,
        m,
        q,
    )


class FlatBounds:
    """Lower/upper probabilities of every ``A & E`` for a fixed evidence event."""

    def __init__(self, joint: FlatJoint, evidence: Event):
        if evidence.scope != joint.scope:
            raise ScopeError("flat evidence must be over the full joint scope")
        self.joint = joint
        self.evidence = evidence
        masks = np.arange(joint.m_dense.shape[0], dtype=np.int64)
        inside = (masks & ~np.int64(evidence.mask)) == 0
        self.lower = zeta_dense(np.where(inside, joint.m_dense, 0.0))
        self.upper = inv_commonality_dense(np.where(inside, joint.q_dense, 0.0))

    def interval(self, target: Event) -> Interval:
        if target.scope != self.joint.scope:
            raise ScopeError("flat target must be over the full joint scope")
        full = target.scope.full_mask
        a = target.mask
        ac = full ^ a
        e = self.evidence.mask
        return conditional_interval(
            float(self.lower[a]),
            float(self.upper[ac]),
            float(self.upper[a]),
            float(self.lower[ac]),
            float(self.lower[full]),
            float(self.upper[full]),
            e_subset_a=e & ~a == 0,
            e_subset_ac=e & a == 0,
        )


def flat_posterior(j: FlatJoint, target: Event, evidence: Event) -> Interval:
    """Posterior bounds by evidence restriction on the flat joint, no junction trees."""
    return FlatBounds(j, evidence).interval(target)


# -- credal set vertices -------------------------------------------------------


def credal_vertices(p: SetFunction, cap: int = 6, tol: float = TOL) -> list[np.ndarray]:
    """Extreme points of the credal set of a two-monotone lower probability.

    One vertex per ordering of the configurations: each configuration receives
    the increase in lower probability when it joins the chain of its
    predecessors.  Every vertex is checked against ``p`` on all events.
    """
    n = p.scope.size
    if n > cap:
        raise SizeGuardError(f"{n} configurations exceed the vertex-enumeration cap of {cap}")
    report = check_two_monotone(p, cap=max(cap, n), tol=tol)
    if not report.ok:
        raise PreconditionError("lower probability is not two-monotone")
    P = p.dense()
    seen = {}
    for perm in itertools.permutations(range(n)):
        v = np.zeros(n)
        chain = 0
        for i in perm:
            nxt = chain | (1 << i)
            v[i] = P[nxt] - P[chain]
            chain = nxt
        seen.setdefault(tuple(np.round(v, 12)), v)
    vertices = list(seen.values())
    for v in vertices:
        probs = zeta_dense(_singletons(v))
        if np.any(v < -tol) or abs(v.sum() - 1.0) > tol or np.any(probs < P - tol):
            raise PreconditionError("vertex is not a distribution consistent with the lower probability")
    return vertices


def _singletons(v: np.ndarray) -> np.ndarray:
    out = np.zeros(1 << v.shape[0])
    out[1 << np.arange(v.shape[0])] = v
    return out


def _event_prob(vertices: np.ndarray, mask: int) -> np.ndarray:
    bits = np.array([(mask >> i) & 1 for i in range(vertices.shape[1])], dtype=float)
    return vertices @ bits


def oracle_conditional(p: SetFunction, target: Event, evidence: Event, cap: int = 6, tol: float = TOL) -> Interval:
    """Posterior envelope by Bayes' rule on every credal vertex with P(E) > 0."""
    if target.scope != p.scope or evidence.scope != p.scope:
        raise ScopeError("target and evidence must share the lower probability's scope")
    V = np.array(credal_vertices(p, cap, tol))
    pe = _event_prob(V, evidence.mask)
    pae = _event_prob(V, evidence.mask & target.mask)
    ok = pe > tol
    if not np.any(ok):
        return Interval(math.nan, math.nan, Status.CONTRADICTION)
    ratios = pae[ok] / pe[ok]
    status = Status.VACUOUS if np.min(pe) <= tol else Status.NORMAL
    return Interval(float(np.clip(ratios.min(), 0, 1)), float(np.clip(ratios.max(), 0, 1)), status)


# -- Markov check ------------------------------------------------------------


def _sides(tree: JunctionTree, edge: int) -> tuple[Scope, Scope]:
    a, b, _ = tree.edges[edge]
    pruned = JunctionTree(tree.nodes, [e for k, e in enumerate(tree.edges) if k != edge])
    side_a, _ = pruned.depths(a)
    side_b, _ = pruned.depths(b)
    u = EMPTY_SCOPE
    for i in side_a:
        u = u | tree.nodes[i]
    w = EMPTY_SCOPE
    for i in side_b:
        w = w | tree.nodes[i]
    return u, w


def _loc_m_dense(scope: Scope, m: np.ndarray, sub: Scope) -> tuple[np.ndarray, np.ndarray]:
    proj = projection_table(scope, sub)
    out = np.zeros(1 << sub.size)
    np.add.at(out, proj, m)
    return out, proj


def _loc_q_dense(scope: Scope, q: np.ndarray, sub: Scope) -> tuple[np.ndarray, np.ndarray]:
    proj = projection_table(scope, sub)
    out = np.zeros(1 << sub.size)
    np.add.at(out, proj, parity_signs(scope.size) * q)
    return out * parity_signs(sub.size), proj


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros_like(num)
    ok = np.abs(den) > ZERO_TOL
    out[ok] = num[ok] / den[ok]
    return out


@dataclass
class MarkovReport:
    rectangular_core_ok: bool
    factorization_ok: list[tuple[str, str, bool, float]]
    corollary1_partition_ok: list[tuple[str, bool]]

    @property
    def ok(self) -> bool:
        return self.rectangular_core_ok and all(f[2] for f in self.factorization_ok)

    def lines(self) -> list[str]:
        out = [f"rectangular core: {'ok' if self.rectangular_core_ok else 'FAIL'}"]
        for side, label, ok, err in self.factorization_ok:
            out.append(f"{side}-factorization across {label}: {'ok' if ok else 'FAIL'} (max error {err:.3g})")
        for label, ok in self.corollary1_partition_ok:
            out.append(f"separator {label} partition condition: {'holds' if ok else 'fails'}")
        return out


def partition_condition(scope: Scope, m: np.ndarray, sep: Scope, tol: float = ZERO_TOL) -> bool:
    """Do the separator projections of the focal events partition the separator space?"""
    proj = projection_table(scope, sep)
    blocks = sorted({int(b) for b in proj[np.abs(m) > tol]})
    union = 0
    for b in blocks:
        if b == 0 or union & b:
            return False
        union |= b
    return union == sep.full_mask


def check_markov(model: Model, joint: FlatJoint | None = None, tol: float = TOL) -> MarkovReport:
    """Check rectangular core and both factorizations across every tree edge."""
    if joint is None:
        joint = assemble_joint(model, check_dual=False)
    scope = joint.scope
    m, q = joint.m_dense, joint.q_dense
    masks = np.arange(m.shape[0], dtype=np.int64)
    rect_m = rectangular_masks(scope, model.m_tree.nodes)
    rect_q = rectangular_masks(scope, model.q_tree.nodes)
    off = (rect_m != masks) | (rect_q != masks)
    core_ok = bool(np.all(np.abs(m[off]) <= tol))
    factor = []
    partition = []
    for k, (_, _, sep) in enumerate(model.m_tree.edges):
        u, w = _sides(model.m_tree, k)
        lu, pu = _loc_m_dense(scope, m, u)
        lw, pw = _loc_m_dense(scope, m, w)
        ls, ps = _loc_m_dense(scope, m, sep)
        pred = _ratio(lu[pu] * lw[pw], ls[ps])
        on = rect_m == masks
        err = float(np.max(np.abs(np.where(on, pred - m, m)))) if m.size else 0.0
        label = f"{u!r}|{w!r}"
        factor.append(("m", label, err <= tol, err))
        partition.append((repr(sep), partition_condition(scope, m, sep)))
    for k, (_, _, sep) in enumerate(model.q_tree.edges):
        u, w = _sides(model.q_tree, k)
        lu, _ = _loc_q_dense(scope, q, u)
        lw, _ = _loc_q_dense(scope, q, w)
        ls, _ = _loc_q_dense(scope, q, sep)
        pred = _ratio(
            lu[projection_table(scope, u)[rect_q]] * lw[projection_table(scope, w)[rect_q]],
            ls[projection_table(scope, sep)[rect_q]],
        )
        err = float(np.max(np.abs(pred - q)))
        factor.append(("q", f"{u!r}|{w!r}", err <= tol, err))
    return MarkovReport(core_ok, factor, partition)


# -- random generators ---------------------------------------------------------


def random_two_monotone(rng: np.random.Generator, n: int, kind: str | None = None) -> SetFunction:
    """A random two-monotone lower probability over ``n`` unnamed configurations.

    ``kind`` is ``"belief"`` (nonnegative Möbius masses), ``"distortion"``
    (convex power of a probability, generally with negative masses) or
    ``"mixture"`` of the two.
    """
    scope = Scope((Variable("w", tuple(str(i) for i in range(n))),))
    kind = kind or rng.choice(["belief", "distortion", "mixture"])
    if kind == "belief":
        P = zeta_dense(_random_masses(rng, n))
    elif kind == "distortion":
        P = _distortion(rng, n)
    else:
        lam = rng.uniform(0.2, 0.8)
        P = lam * zeta_dense(_random_masses(rng, n)) + (1 - lam) * _distortion(rng, n)
    return SetFunction.from_dense(scope, Role.LOWER, P)


def _random_masses(rng, n, allowed=None):
    m = np.zeros(1 << n)
    k = int(rng.integers(1, 6))
    choices = np.arange(1, 1 << n) if allowed is None else np.asarray(allowed)
    for a in rng.choice(choices, size=min(k, len(choices)), replace=False):
        m[a] += rng.uniform(0.05, 1.0)
    return m / m.sum()


def _distortion(rng, n, weights=None):
    w = rng.dirichlet(np.ones(n)) if weights is None else weights
    power = rng.uniform(1.0, 3.0)
    return zeta_dense(_singletons(w)) ** power


def two_monotone_with_evidence(rng, n: int, regime: str) -> tuple[SetFunction, Event]:
    """A two-monotone lower probability and an evidence event in the given regime.

    ``regime`` is ``"vacuous"`` (``P(E) = 0 < Pu(E)``) or ``"contradiction"``
    (``Pu(E) = 0``).
    """
    scope = Scope((Variable("w", tuple(str(i) for i in range(n))),))
    full = (1 << n) - 1
    e = int(rng.integers(1, full))
    outside = full ^ e
    subsets = np.arange(1, 1 << n)
    if regime == "contradiction":
        allowed = [a for a in subsets if a & e == 0]
        w = np.zeros(n)
        idx = [i for i in range(n) if outside >> i & 1]
        w[idx] = rng.dirichlet(np.ones(len(idx)))
        lam = rng.uniform(0.2, 0.8)
        P = lam * zeta_dense(_random_masses(rng, n, allowed)) + (1 - lam) * _distortion(rng, n, w)
    else:
        crossing = [a for a in subsets if a & outside and a & e]
        escaping = [a for a in subsets if a & outside]
        m = _random_masses(rng, n, escaping)
        m[int(rng.choice(crossing))] += 0.3
        m /= m.sum()
        w = np.zeros(n)
        idx = [i for i in range(n) if outside >> i & 1]
        w[idx] = rng.dirichlet(np.ones(len(idx)))
        lam = rng.uniform(0.3, 0.9)
        P = lam * zeta_dense(m) + (1 - lam) * _distortion(rng, n, w)
    return SetFunction.from_dense(scope, Role.LOWER, P), Event(scope, e)


def _random_partition(rng, size: int) -> list[int]:
    labels = rng.integers(0, size, size=size)
    blocks = {}
    for i, lab in enumerate(labels):
        blocks[int(lab)] = blocks.get(int(lab), 0) | (1 << i)
    return sorted(blocks.values())


def _focal_for(rng, node: Scope, constraints: list[tuple[Scope, int]]) -> int | None:
    """A random event over ``node`` whose projection onto each scope is exactly the block."""
    from .events import project_mask

    allowed = 0
    maps = [(sub, projection_map(node, sub), block) for sub, block in constraints]
    for i in range(node.size):
        if all(block >> pmap[i] & 1 for _, pmap, block in maps):
            allowed |= 1 << i
    if not all(project_mask(allowed, node, sub) == block for sub, _, block in maps):
        return None
    x = allowed
    for i in rng.permutation(node.size):
        i = int(i)
        if not x >> i & 1 or rng.random() < 0.5:
            continue
        y = x ^ (1 << i)
        if y and all(project_mask(y, node, sub) == block for sub, _, block in maps):
            x = y
    return x


def _random_m_potentials(rng, tree: JunctionTree) -> list[SetFunction] | None:
    depth, parent = tree.depths(0)
    partitions = {k: _random_partition(rng, sep.size) for k, (_, _, sep) in enumerate(tree.edges)}
    out = []
    for i, node in enumerate(tree.nodes):
        if len(node) == 0:
            out.append(SetFunction.constant(node, 1.0, Role.POTENTIAL))
            continue
        children = [(j, k) for j, k in tree.neighbors(i) if parent.get(j, (None,))[0] == i]
        contexts = [None] if i not in parent else partitions[parent[i][1]]
        psep = None if i not in parent else tree.edges[parent[i][1]][2]
        entries: dict[int, float] = {}
        covered = {k: set() for _, k in children}
        for ctx in contexts:
            need = max([len(partitions[k]) for _, k in children] + [int(rng.integers(1, 4))])
            weights = []
            for t in range(need):
                for _attempt in range(20):
                    cons = [] if ctx is None else [(psep, ctx)]
                    picks = {}
                    for _, k in children:
                        blocks = partitions[k]
                        b = blocks[t % len(blocks)] if _attempt == 0 else blocks[int(rng.integers(len(blocks)))]
                        picks[k] = b
                        cons.append((tree.edges[k][2], b))
                    x = _focal_for(rng, node, cons)
                    if x is not None:
                        break
                else:
                    return None
                for k, b in picks.items():
                    covered[k].add(b)
                weights.append((x, rng.uniform(0.1, 1.0)))
            total = sum(w for _, w in weights)
            for x, w in weights:
                entries[x] = entries.get(x, 0.0) + w / total
        if any(len(covered[k]) != len(partitions[k]) for k in covered):
            return None
        out.append(SetFunction(node, Role.POTENTIAL, entries))
    return out


def random_markov_model(rng: np.random.Generator, max_tries: int = 200) -> Model:
    """Random Markov model on 2-4 binary/ternary variables with 1-3 cliques.

    Möbius potentials are products of nonnegative conditional masses, so the
    joint has a rectangular core and sums to 1.  The commonality side is the
    dual of the flat joint marginalized onto the same tree; models whose
    focal separator projections do not partition, or whose commonality does
    not refactor exactly, are redrawn.
    """
    for _ in range(max_tries):
        n = int(rng.integers(2, 5))
        cards = [int(c) for c in rng.integers(2, 4, size=n)]
        if math.prod(cards) > DEFAULT_GUARD:
            continue
        names = "abcd"[:n]
        variables = declare(*((names[i], [str(v) for v in range(cards[i])]) for i in range(n)))
        edges = [
            frozenset((variables[i], variables[j]))
            for i, j in itertools.combinations(range(n), 2)
            if rng.random() < 0.5
        ]
        g = Graph(tuple(variables), frozenset(edges))
        chordal, tree = junction_tree_for(g)
        if sum(1 for s in tree.nodes if len(s)) > 3:
            continue
        pots = _random_m_potentials(rng, tree)
        if pots is None:
            continue
        tree.node_potentials = pots
        scope = Scope(tuple(variables))
        masks = np.arange(1 << scope.size, dtype=np.int64)
        rect = rectangular_masks(scope, tree.nodes) == masks
        m = np.zeros(masks.shape[0])
        m[rect] = _product_form(tree, scope, masks[rect])
        if abs(m.sum() - 1.0) > 1e-9:
            continue
        if not all(partition_condition(scope, m, sep) for _, _, sep in tree.edges):
            continue
        q = commonality_dense(dual_dense(zeta_dense(m)))
        q_nodes = [
            SetFunction.from_dense(s, Role.POTENTIAL, _loc_q_dense(scope, q, s)[0]) for s in tree.nodes
        ]
        q_seps = [
            SetFunction.from_dense(s, Role.POTENTIAL, _loc_q_dense(scope, q, s)[0]) for _, _, s in tree.edges
        ]
        q_tree = JunctionTree(list(tree.nodes), list(tree.edges), q_nodes, q_seps)
        model = Model(tuple(variables), chordal, chordal, tree, q_tree)
        try:
            assemble_joint(model)
        except (InconsistentPairError, MalformedModelError):
            continue
        return model
    raise RuntimeError("could not draw a Markov model within the retry budget")
