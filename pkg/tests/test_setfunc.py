import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import brute
from conftest import flat_scope, sparse_functions
from capax.errors import InvalidCommonalityError, NumericDomainError, ScopeError, SizeGuardError
from capax.events import Event, Scope, declare
from capax.setfunc import (
    Role,
    SetFunction,
    Status,
    check_two_monotone,
    commonality,
    conditional_interval,
    dual,
    inv_commonality,
    inv_mobius,
    loc_m,
    loc_q,
    lower_at,
    mobius,
    restrict_to_evidence,
    upper_at,
)

W2 = flat_scope(2)
W3 = flat_scope(3)
A, B, C = 0b001, 0b010, 0b100


def fn(scope, role, entries):
    return SetFunction(scope, role, entries)


def close(f, expected, tol=1e-12):
    keys = set(f.entries) | set(expected)
    return all(abs(f.get(k) - expected.get(k, 0.0)) <= tol for k in keys if k or f.role is not Role.COMMONALITY)


# two-point space {0, 1}: masks 1 = {0}, 2 = {1}, 3 = Omega
LOW = {1: 0.3, 2: 0.2, 3: 1.0}


def test_mobius_two_points():
    m = mobius(fn(W2, "lower", LOW))
    assert m.role is Role.MOBIUS
    assert close(m, {1: 0.3, 2: 0.2, 3: 0.5})
    assert close(m, brute.mobius(LOW, 2))


def test_mobius_of_precise_measure_sits_on_singletons():
    w = [0.1, 0.6, 0.3]
    p = {a: sum(w[i] for i in range(3) if a >> i & 1) for a in range(8)}
    m = mobius(fn(W3, "lower", p))
    assert close(m, {A: 0.1, B: 0.6, C: 0.3})


def test_mobius_of_vacuous_prior():
    assert close(mobius(fn(W3, "lower", {7: 1.0})), {7: 1.0})


def test_inv_mobius_examples():
    p = inv_mobius(fn(W2, "mobius", {1: 0.3, 2: 0.2, 3: 0.5}))
    assert p.get(1) == pytest.approx(0.3) and p.get(3) == pytest.approx(1.0)
    v = inv_mobius(fn(W3, "mobius", {7: 1.0}))
    assert all(v.get(a) == 0.0 for a in range(7)) and v.get(7) == 1.0


def test_dual_examples():
    u = dual(fn(W2, "lower", LOW))
    assert u.role is Role.UPPER
    assert u.get(1) == pytest.approx(0.8) and u.get(2) == pytest.approx(0.7)
    assert u.get(0) == 0.0 and u.get(3) == 1.0
    w = [0.25, 0.75]
    prec = fn(W2, "lower", {1: w[0], 2: w[1], 3: 1.0})
    assert dual(prec).allclose(prec)


def test_commonality_examples():
    q = commonality(fn(W2, "upper", {1: 0.8, 2: 0.7, 3: 1.0}))
    assert close(q, {0: 1.0, 1: 0.8, 2: 0.7, 3: 0.5})
    assert close(q, brute.commonality({1: 0.8, 2: 0.7, 3: 1.0}, 2))
    vac = commonality(fn(W3, "upper", {a: 1.0 for a in range(1, 8)}))
    assert all(vac.get(a) == pytest.approx(1.0) for a in range(8))
    w = [0.1, 0.6, 0.3]
    up = {a: sum(w[i] for i in range(3) if a >> i & 1) for a in range(8)}
    assert close(commonality(fn(W3, "upper", up)), {0: 1.0, A: 0.1, B: 0.6, C: 0.3})


def test_inv_commonality_examples():
    u = inv_commonality(fn(W2, "commonality", {0: 1.0, 1: 0.8, 2: 0.7, 3: 0.5}))
    assert u.get(3) == pytest.approx(1.0)
    assert u.get(1) == pytest.approx(0.8)
    ones = inv_commonality(fn(W3, "commonality", {a: 1.0 for a in range(8)}))
    assert all(ones.get(a) == pytest.approx(1.0) for a in range(1, 8))


def test_inv_commonality_needs_unit_empty_entry():
    with pytest.raises(InvalidCommonalityError):
        inv_commonality(fn(W2, "commonality", {0: 0.5, 1: 0.2}))


def test_loc_m_example(xy):
    x, y = xy
    XY = Scope((x, y))
    m = fn(XY, "mobius", {Event.of(XY, [("0", "0")]).mask: 0.5, XY.full_mask: 0.5})
    mx = loc_m(m, Scope((x,)))
    assert close(mx, {0b01: 0.5, 0b11: 0.5})
    assert loc_m(m, XY).allclose(m)


def test_loc_q_examples(xy):
    x, y = xy
    XY = Scope((x, y))
    vac = fn(XY, "commonality", {a: 1.0 for a in range(16)})
    qx = loc_q(vac, Scope((x,)))
    assert qx.get(0b01) == pytest.approx(1.0) and qx.get(0b11) == pytest.approx(1.0)
    p = [0.1, 0.2, 0.3, 0.4]
    prec = fn(XY, "commonality", {1 << i: p[i] for i in range(4)})
    qx = loc_q(prec, Scope((x,)))
    assert qx.get(0b01) == pytest.approx(0.3) and qx.get(0b10) == pytest.approx(0.7)
    assert qx.get(0b11) == pytest.approx(0.0)
    assert qx.get(0) == 1.0


def test_loc_rejects_foreign_scope(xy):
    x, y = xy
    with pytest.raises(ScopeError):
        loc_m(fn(Scope((x,)), "mobius", {1: 1.0}), Scope((x, y)))


def test_restrict_example():
    m = fn(W2, "mobius", {1: 0.3, 2: 0.2, 3: 0.5})
    r = restrict_to_evidence(m, Event(W2, 1))
    assert close(r, {1: 0.3})
    assert lower_at(r, 1) == pytest.approx(0.3)
    assert restrict_to_evidence(m, Event.full(W2)) == m


def test_restrict_extends_evidence_to_function_scope(xy):
    x, y = xy
    XY = Scope((x, y))
    m = fn(XY, "mobius", {0b0001: 0.5, 0b1111: 0.5})
    r = restrict_to_evidence(m, Event.of(Scope((y,)), [("0",)]))
    assert close(r, {0b0001: 0.5})
    with pytest.raises(ScopeError):
        restrict_to_evidence(fn(Scope((x,)), "mobius", {1: 1.0}), Event.full(XY))


def test_conditional_three_element_example():
    # m({a}) = 0.5, m({b,c}) = 0.5, E = {a,b}, A = {a}
    m = {A: 0.5, B | C: 0.5}
    low = brute.inv_mobius(m, 3)
    up = brute.dual(low, 3)
    E, Ac = A | B, B | C
    iv = conditional_interval(low[A & E], up[Ac & E], up[A & E], low[Ac & E], low[E], up[E])
    assert (iv.lower, iv.upper, iv.status) == (pytest.approx(0.5), pytest.approx(1.0), Status.NORMAL)


def test_conditional_regimes():
    assert conditional_interval(0, 1, 1, 0, 0, 1).status is Status.VACUOUS
    iv = conditional_interval(0, 1, 1, 0, 0, 1, e_subset_a=False, e_subset_ac=False)
    assert (iv.lower, iv.upper) == (0.0, 1.0)
    assert conditional_interval(0, 0, 0.5, 0, 0, 0.5, e_subset_a=True).rounded()[:2] == (1.0, 1.0)
    assert conditional_interval(0, 0.5, 0, 0, 0, 0.5, e_subset_ac=True).rounded()[:2] == (0.0, 0.0)
    c = conditional_interval(0, 0, 0, 0, 0, 0)
    assert c.status is Status.CONTRADICTION and math.isnan(c.lower)


def test_conditional_domain_errors():
    with pytest.raises(NumericDomainError):
        conditional_interval(1.5, 0, 0, 0, 0.5, 1)
    with pytest.raises(NumericDomainError):
        conditional_interval(0.6, 0, 0, 0, 0.6, 0.5)
    with pytest.raises(NumericDomainError):
        conditional_interval(0, 0, 0, 0, 0.5, 1)


def test_two_monotone_examples():
    w = [0.2, 0.5, 0.3]
    prec = {a: sum(w[i] for i in range(3) if a >> i & 1) for a in range(8)}
    assert check_two_monotone(fn(W3, "lower", prec)).ok
    bad = check_two_monotone(fn(W3, "lower", {A: 0.6, B: 0.6, A | B: 0.7, 7: 1.0}))
    assert not bad.ok
    assert any({a.mask, b.mask} == {A, B} for a, b, *_ in bad.violations)
    assert check_two_monotone(fn(W3, "lower", {7: 1.0})).ok


def test_two_monotone_guard():
    with pytest.raises(SizeGuardError):
        check_two_monotone(fn(flat_scope(13), "lower", {}))


# -- properties ---------------------------------------------------------------


@settings(max_examples=150, deadline=None)
@given(sparse_functions())
def test_transforms_match_naive_formulas(nf):
    n, entries = nf
    s = flat_scope(n)
    f = fn(s, "lower", entries)
    assert close(mobius(f), brute.mobius(entries, n), 1e-9)
    assert close(inv_mobius(f.with_role("mobius")), brute.inv_mobius(entries, n), 1e-9)
    assert close(commonality(f.with_role("upper")), brute.commonality(entries, n), 1e-9)


@settings(max_examples=150, deadline=None)
@given(sparse_functions())
def test_round_trips(nf):
    n, entries = nf
    s = flat_scope(n)
    p = fn(s, "lower", entries)
    assert inv_mobius(mobius(p)).allclose(p, 1e-9)
    u = fn(s, "upper", {k: v for k, v in entries.items() if k})
    assert inv_commonality(commonality(u)).allclose(u, 1e-9)
    assert dual(dual(p)).allclose(p, 1e-9)


@settings(max_examples=100, deadline=None)
@given(sparse_functions(allow_empty=False))
def test_pointwise_readers_match_dense(nf):
    n, entries = nf
    s = flat_scope(n)
    m = fn(s, "mobius", entries)
    q = fn(s, "commonality", entries)
    dense_low = inv_mobius(m)
    dense_up = brute.inv_commonality(entries, n)
    for a in range(1 << n):
        assert lower_at(m, a) == pytest.approx(dense_low.get(a), abs=1e-9)
        assert upper_at(q, a) == pytest.approx(dense_up[a], abs=1e-9)


@st.composite
def product_functions(draw):
    cards = draw(st.sampled_from([(2, 2), (2, 3), (3, 2), (2, 2, 2), (3, 4), (2, 2, 3), (2, 3, 2)]))
    vs = declare(*((f"v{i}", [str(j) for j in range(c)]) for i, c in enumerate(cards)))
    scope = Scope(tuple(vs))
    keys = draw(st.lists(st.integers(1, scope.full_mask), max_size=32, unique=True))
    vals = draw(st.lists(st.floats(-1, 1, allow_nan=False), min_size=len(keys), max_size=len(keys)))
    keep = sorted(draw(st.sets(st.integers(0, len(cards) - 1))))
    return cards, vs, scope, dict(zip(keys, vals)), keep


@settings(max_examples=120, deadline=None)
@given(product_functions())
def test_loc_q_sparse_equals_dense_preimage_sum(case):
    cards, vs, scope, entries, keep = case
    sub = Scope(tuple(vs[i] for i in keep))
    pmap = brute.pmap_for(cards, keep)
    got = loc_q(fn(scope, "commonality", entries), sub)
    ref = brute.loc_q(entries, scope.size, pmap)
    for a in range(1 << sub.size):
        assert got.get(a) == pytest.approx(ref.get(a, 0.0), abs=1e-9)


@settings(max_examples=120, deadline=None)
@given(product_functions())
def test_loc_m_matches_projection_sum(case):
    cards, vs, scope, entries, keep = case
    sub = Scope(tuple(vs[i] for i in keep))
    got = loc_m(fn(scope, "mobius", entries), sub)
    ref = brute.loc_m(entries, scope.size, brute.pmap_for(cards, keep))
    for a in range(1 << sub.size):
        assert got.get(a) == pytest.approx(ref.get(a, 0.0), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(product_functions(), st.data())
def test_loc_is_transitive(case, data):
    cards, vs, scope, entries, keep = case
    mid = Scope(tuple(vs[i] for i in keep))
    inner = sorted(data.draw(st.sets(st.sampled_from(keep))) if keep else [])
    small = Scope(tuple(vs[i] for i in inner))
    m = fn(scope, "mobius", entries)
    q = fn(scope, "commonality", entries)
    assert loc_m(loc_m(m, mid), small).allclose(loc_m(m, small), 1e-9)
    assert loc_q(loc_q(q, mid), small).allclose(loc_q(q, small), 1e-9)


@settings(max_examples=100, deadline=None)
@given(sparse_functions(), st.integers(0, 63), st.integers(0, 63))
def test_restriction_composes_as_intersection(nf, e1, e2):
    n, entries = nf
    s = flat_scope(n)
    f = fn(s, "potential", entries)
    a, b = Event(s, e1 & s.full_mask), Event(s, e2 & s.full_mask)
    assert restrict_to_evidence(restrict_to_evidence(f, a), b) == restrict_to_evidence(f, a & b)
    assert restrict_to_evidence(restrict_to_evidence(f, a), b) == restrict_to_evidence(
        restrict_to_evidence(f, b), a
    )


@settings(max_examples=100, deadline=None)
@given(sparse_functions(allow_empty=False))
def test_commonality_of_dual_is_superset_sum(nf):
    n, entries = nf
    s = flat_scope(n)
    total = sum(entries.values())
    if abs(total) < 1e-3:
        return
    m = {k: v / total for k, v in entries.items()}
    q = commonality(dual(inv_mobius(fn(s, "mobius", m))))
    ref = brute.superset_sum(m, n)
    for a in range(1 << n):
        assert q.get(a) == pytest.approx(ref[a], abs=1e-9)
