import numpy as np
import pytest

from capax.document import parse_event, parse_model
from capax.engine import (
    Finding,
    QueryTarget,
    build_model,
    enter_evidence,
    pairwise_consistent,
    propagate,
    query_posterior,
    total_evidence_bounds,
)
from capax.errors import (
    ContradictionError,
    EmptyEvidenceError,
    MalformedModelError,
    NonLocalEvidenceError,
    NonLocalQueryError,
)
from capax.events import Event, Scope, declare, extend
from capax.graph import Graph
from capax.oracle import assemble_joint, flat_posterior, random_markov_model
from capax.setfunc import Role, SetFunction, Status, inv_commonality_dense, loc_m, loc_q, zeta_dense


def load(models_dir, name):
    return parse_model((models_dir / f"{name}.json").read_text())


def ev(model, text):
    return parse_event(text, model.variables)


def bounds(iv):
    return iv.rounded(9)


def test_vacuous_finding_only_logs(models_dir):
    m = load(models_dir, "x_copy")
    before = m.copy()
    enter_evidence(m, Finding(Event.full(m.scope)))
    assert m.m_tree == before.m_tree and m.q_tree == before.q_tree
    assert len(m.evidence_log) == 1


def test_x_copy_finding_zeroes_potential(models_dir):
    m = load(models_dir, "x_copy")
    enter_evidence(m, ev(m, "y=0"))
    pot = m.m_tree.node_potentials[0]
    assert pot.entries == {Event.of(pot.scope, [("0", "0")]).mask: 0.5}


def test_sequential_findings_equal_their_intersection(models_dir):
    a = load(models_dir, "quake_sensors")
    b = a.copy()
    e1, e2 = ev(a, "x=alarm|z=none"), ev(a, "z=quake|x=silent")
    enter_evidence(a, e1)
    enter_evidence(a, e2)
    enter_evidence(b, extend(e1, Scope(tuple(a.variables[:2]))) & extend(e2, Scope(tuple(a.variables[:2]))))
    assert a.m_tree.node_potentials == b.m_tree.node_potentials
    assert a.q_tree.node_potentials == b.q_tree.node_potentials


def test_evidence_errors(models_dir):
    m = load(models_dir, "quake_sensors")
    with pytest.raises(EmptyEvidenceError):
        enter_evidence(m, ev(m, "x=alarm&x=silent"))
    with pytest.raises(NonLocalEvidenceError) as info:
        enter_evidence(m, ev(m, "x=alarm&y=alarm"))
    assert info.value.tree == "m"
    with pytest.raises(NonLocalQueryError):
        query_posterior(m, QueryTarget(ev(m, "x=alarm|y=alarm")))


def test_all_vacuous_potentials_are_a_fixed_point():
    x, y, z = declare(("x", "01"), ("y", "01"), ("z", "012"))
    g = Graph((x, y, z), frozenset({frozenset((x, y)), frozenset((y, z))}))
    xy, yz = Scope((x, y)), Scope((y, z))
    model = build_model(
        (x, y, z),
        g,
        [SetFunction(xy, Role.POTENTIAL, {xy.full_mask: 1.0}), SetFunction(yz, Role.POTENTIAL, {yz.full_mask: 1.0})],
    )
    before = [f.dense() for f in model.m_tree.node_potentials]
    propagate(model)
    after = [f.dense() for f in model.m_tree.node_potentials]
    assert all(np.allclose(a, b) for a, b in zip(before, after))
    assert bounds(query_posterior(model, Event.of(Scope((z,)), [("2",)]))) == (0.0, 1.0, "normal")


def test_two_coins_marginals(models_dir):
    m = load(models_dir, "two_coins")
    propagate(m)
    for i, node in enumerate(m.m_tree.nodes):
        if len(node):
            low = zeta_dense(m.m_tree.node_potentials[i].dense())
            assert low[1] == pytest.approx(0.5) and low[2] == pytest.approx(0.5)
            up = inv_commonality_dense(m.q_tree.node_potentials[i].dense())
            assert up[1] == pytest.approx(0.5)


def test_query_examples(models_dir):
    one = load(models_dir, "one_variable")
    assert bounds(query_posterior(one, ev(one, "x=0"))) == (0.3, 0.8, "normal")
    xc = load(models_dir, "x_copy")
    enter_evidence(xc, ev(xc, "y=0"))
    assert bounds(query_posterior(xc, ev(xc, "x=0"))) == (1.0, 1.0, "normal")
    assert bounds(total_evidence_bounds(xc)) == (0.5, 0.5, "normal")
    vy = load(models_dir, "coin_vacuous_y")
    enter_evidence(vy, ev(vy, "y=0"))
    assert bounds(query_posterior(vy, ev(vy, "x=0"))) == (0.0, 1.0, "vacuous")
    tb = total_evidence_bounds(vy)
    assert (tb.lower, tb.upper) == (0.0, 1.0)


def test_no_evidence_total_bounds(models_dir):
    m = load(models_dir, "quake_sensors")
    assert bounds(total_evidence_bounds(m)) == (1.0, 1.0, "normal")


def test_contradiction_completes_then_raises(models_dir):
    m = load(models_dir, "precise_y_never_1")
    enter_evidence(m, ev(m, "y=1"))
    with pytest.raises(ContradictionError):
        propagate(m)
    assert m.m_propagated and m.q_propagated and m.contradiction
    with pytest.raises(ContradictionError):
        query_posterior(m, ev(m, "x=0"))
    with pytest.raises(ContradictionError):
        total_evidence_bounds(m)


def test_evidence_before_or_after_propagation(models_dir):
    a = load(models_dir, "quake_sensors")
    b = a.copy()
    enter_evidence(a, ev(a, "x=alarm"))
    propagate(b)
    enter_evidence(b, ev(b, "x=alarm"))
    for t in ("z=quake", "y=alarm", "y=silent&z=none"):
        assert bounds(query_posterior(a, ev(a, t))) == bounds(query_posterior(b, ev(b, t)))


def test_build_errors():
    x, y = declare(("x", "01"), ("y", "01"))
    g = Graph((x, y), frozenset({frozenset((x, y))}))
    sx, sxy = Scope((x,)), Scope((x, y))
    with pytest.raises(MalformedModelError, match="no m-potential covers"):
        build_model((x, y), g, [])
    with pytest.raises(MalformedModelError, match="empty event"):
        build_model((x, y), g, [SetFunction(sxy, Role.POTENTIAL, {0: 0.5, 3: 0.5})])
    with pytest.raises(MalformedModelError, match="sum to"):
        build_model((x, y), g, [SetFunction(sxy, Role.POTENTIAL, {3: 0.5})])
    two = [SetFunction(sxy, Role.POTENTIAL, {15: 1.0})] * 2
    with pytest.raises(MalformedModelError, match="two m-potentials"):
        build_model((x, y), g, two)
    edgeless = Graph((x, y), frozenset())
    with pytest.raises(MalformedModelError, match="not contained"):
        build_model((x, y), edgeless, [SetFunction(sxy, Role.POTENTIAL, {15: 1.0})])


def test_declared_subclique_is_extended():
    x, y = declare(("x", "01"), ("y", "01"))
    g = Graph((x, y), frozenset({frozenset((x, y))}))
    model = build_model((x, y), g, [SetFunction(Scope((x,)), Role.POTENTIAL, {1: 0.3, 2: 0.2, 3: 0.5})])
    pot = model.m_tree.node_potentials[0]
    assert pot.scope == Scope((x, y))
    assert bounds(query_posterior(model, Event.of(Scope((x,)), [("0",)]))) == (0.3, 0.8, "normal")
    assert bounds(query_posterior(model, Event.of(Scope((y,)), [("0",)]))) == (0.0, 1.0, "normal")


@pytest.mark.parametrize("seed", range(25))
def test_local_potentials_encode_flat_marginals(seed):
    rng = np.random.default_rng(seed)
    model = random_markov_model(rng)
    joint = assemble_joint(model)
    node = next(n for n in model.m_tree.nodes if len(n))
    e = Event(node, int(rng.integers(1, node.full_mask + 1)))
    enter_evidence(model, e)
    try:
        propagate(model)
    except ContradictionError:
        return
    assert pairwise_consistent(model.m_tree, loc_m)
    assert pairwise_consistent(model.q_tree, loc_q)
    flat = joint.condition(extend(e, model.scope))
    for i, c in enumerate(model.m_tree.nodes):
        low = zeta_dense(model.m_tree.node_potentials[i].dense())
        up = inv_commonality_dense(model.q_tree.node_potentials[i].dense())
        for a in range(1 << c.size):
            big = extend(Event(c, a), model.scope).mask
            assert low[a] == pytest.approx(flat.lower[big], abs=1e-9)
            assert up[a] == pytest.approx(flat.upper[big], abs=1e-9)
