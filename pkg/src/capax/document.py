"""JSON model documents and the event-expression language.

A model document looks like::

    {
      "variables": [{"name": "x", "domain": ["0", "1"]}, ...],
      "m_graph": [["x", "z"], ["y", "z"]],
      "m_potentials": [
        {"clique": ["x", "z"],
         "entries": [{"event": [{"x": "1", "z": "1"}], "value": 0.2}, ...]}
      ],
      "q_graph": [...],                  # optional, defaults to m_graph
      "q_potentials": [...],             # optional, derived from the m-side
      "m_separators": [{"between": [["x", "z"], ["y", "z"]], "entries": [...]}],
      "q_separators": [...]              # both optional, default constant 1
    }

An entry's ``event`` is a list of configurations (name -> value maps over the
clique) or the string ``"*"`` for the whole clique space.  Commonality
potentials read 1 at the empty event unless it is listed.

Event expressions are disjunctions of conjunctions of ``var=value`` atoms,
e.g. ``x=0&y=1|x=1&y=0``.
"""

from __future__ import annotations

import json
import re
from typing import Any, Sequence

import jsonschema

from .engine import Model, build_model
from .errors import ConfigurationError, ExpressionError, SchemaError
from .events import Event, Scope, Variable, declare, iter_bits
from .graph import Graph, JunctionTree
from .setfunc import Role, SetFunction

_number = {"anyOf": [{"type": "number"}, {"type": "string"}]}
_entries = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["event", "value"],
        "additionalProperties": False,
        "properties": {
            "event": {
                "anyOf": [
                    {"const": "*"},
                    {"type": "array", "items": {"type": "object", "additionalProperties": {"type": ["string", "number"]}}},
                ]
            },
            "value": _number,
        },
    },
}
_names = {"type": "array", "items": {"type": "string"}}
_potentials = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["clique", "entries"],
        "additionalProperties": False,
        "properties": {"clique": _names, "entries": _entries},
    },
}
_separators = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["between", "entries"],
        "additionalProperties": False,
        "properties": {
            "between": {"type": "array", "items": _names, "minItems": 2, "maxItems": 2},
            "entries": _entries,
        },
    },
}
_edges = {
    "type": "array",
    "items": {"type": "array", "items": {"type": "string"}, "minItems": 2, "maxItems": 2},
}

SCHEMA = {
    "type": "object",
    "required": ["variables", "m_graph", "m_potentials"],
    "additionalProperties": False,
    "properties": {
        "variables": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["name", "domain"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string", "pattern": r"^[A-Za-z_][A-Za-z0-9_.\-]*$"},
                    "domain": {"type": "array", "minItems": 1, "items": {"type": ["string", "number"]}},
                },
            },
        },
        "m_graph": _edges,
        "q_graph": _edges,
        "m_potentials": _potentials,
        "q_potentials": _potentials,
        "m_separators": _separators,
        "q_separators": _separators,
    },
}


def _path(parts) -> str:
    return "/" + "/".join(str(p) for p in parts)


def _value(v, path) -> float:
    try:
        return float(v)
    except (TypeError, ValueError):
        raise SchemaError(f"not a number: {v!r}", path) from None


def _scope(names: Sequence[str], by_name: dict[str, Variable], path: str) -> Scope:
    for n in names:
        if n not in by_name:
            raise SchemaError(f"undeclared variable {n!r}", path)
    if len(set(names)) != len(names):
        raise SchemaError("repeated variable", path)
    return Scope(tuple(by_name[n] for n in names))


def _event(raw, scope: Scope, path: str) -> Event:
    if raw == "*":
        return Event.full(scope)
    mask = 0
    for i, cfg in enumerate(raw):
        cfg = {k: str(v) for k, v in cfg.items()}
        for k in cfg:
            if k not in scope.names:
                raise SchemaError(f"variable {k!r} is not in clique {list(scope.names)}", f"{path}/{i}")
        try:
            mask |= Event.of(scope, [cfg]).mask
        except ConfigurationError as exc:
            raise SchemaError(str(exc), f"{path}/{i}") from None
    return Event(scope, mask)


def _function(raw_entries, scope: Scope, path: str) -> dict[int, float]:
    entries: dict[int, float] = {}
    for i, ent in enumerate(raw_entries):
        e = _event(ent["event"], scope, f"{path}/{i}/event")
        if e.mask in entries:
            raise SchemaError("duplicate event within one potential", f"{path}/{i}")
        entries[e.mask] = _value(ent["value"], f"{path}/{i}/value")
    return entries


def _graph(raw, variables, by_name, path) -> Graph:
    edges = []
    for i, (a, b) in enumerate(raw):
        for n in (a, b):
            if n not in by_name:
                raise SchemaError(f"undeclared variable {n!r}", f"{path}/{i}")
        if a == b:
            raise SchemaError("self-loop", f"{path}/{i}")
        edges.append(frozenset((by_name[a], by_name[b])))
    return Graph(tuple(variables), frozenset(edges))


def _potentials(raw, by_name, side, path) -> list[SetFunction]:
    out = []
    for i, pot in enumerate(raw):
        scope = _scope(pot["clique"], by_name, f"{path}/{i}/clique")
        entries = _function(pot["entries"], scope, f"{path}/{i}/entries")
        if side == "q":
            if 0 not in entries:
                entries[0] = 1.0
            elif entries[0] <= 0:
                raise SchemaError("commonality potential must be positive at the empty event", f"{path}/{i}")
        elif entries.get(0, 0.0) != 0.0:
            raise SchemaError("Möbius potential must be zero at the empty event", f"{path}/{i}")
        out.append(SetFunction(scope, Role.POTENTIAL, entries))
    return out


def _separator_list(raw, by_name, path):
    out = []
    for i, sep in enumerate(raw):
        a = _scope(sep["between"][0], by_name, f"{path}/{i}/between/0")
        b = _scope(sep["between"][1], by_name, f"{path}/{i}/between/1")
        s = a & b
        out.append(((a, b), SetFunction(s, Role.POTENTIAL, _function(sep["entries"], s, f"{path}/{i}/entries"))))
    return out


def load_document(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from None
    errors = sorted(jsonschema.Draft202012Validator(SCHEMA).iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise SchemaError(err.message, _path(err.absolute_path))
    return doc


def parse_model(text: str) -> Model:
    """Build a :class:`Model` from a JSON model document."""
    doc = load_document(text)
    names = [v["name"] for v in doc["variables"]]
    if len(set(names)) != len(names):
        raise SchemaError("variable names must be unique", "/variables")
    try:
        variables = declare(*((v["name"], [str(x) for x in v["domain"]]) for v in doc["variables"]))
    except ConfigurationError as exc:
        raise SchemaError(str(exc), "/variables") from None
    by_name = {v.name: v for v in variables}
    m_graph = _graph(doc["m_graph"], variables, by_name, "/m_graph")
    q_graph = _graph(doc["q_graph"], variables, by_name, "/q_graph") if "q_graph" in doc else None
    m_pots = _potentials(doc["m_potentials"], by_name, "m", "/m_potentials")
    q_pots = _potentials(doc["q_potentials"], by_name, "q", "/q_potentials") if "q_potentials" in doc else None
    m_seps = _separator_list(doc.get("m_separators", []), by_name, "/m_separators")
    q_seps = _separator_list(doc.get("q_separators", []), by_name, "/q_separators")
    return build_model(variables, m_graph, m_pots, q_graph, q_pots, m_seps, q_seps)


# -- canonical serialization ---------------------------------------------------


def _dump_entries(f: SetFunction) -> list[dict]:
    out = []
    for k, v in sorted(f.items()):
        configs = [dict(zip(f.scope.names, f.scope.config(i))) for i in iter_bits(k)]
        out.append({"event": configs, "value": v})
    return out


def _is_default(f: SetFunction) -> bool:
    return f.fill == 1.0 and not f.entries


def _dump_tree(tree: JunctionTree) -> tuple[list, list]:
    # constant-1 separators and the unbound empty-scope node are rebuilt on load
    pots = [
        {"clique": list(node.names), "entries": _dump_entries(f)}
        for node, f in zip(tree.nodes, tree.node_potentials)
        if len(node) or not _is_default(f)
    ]
    seps = [
        {"between": [list(tree.nodes[a].names), list(tree.nodes[b].names)], "entries": _dump_entries(f)}
        for (a, b, _), f in zip(tree.edges, tree.edge_potentials)
        if not _is_default(f)
    ]
    return pots, seps


def dump_model(model: Model) -> str:
    """Canonical JSON for ``model``; :func:`parse_model` reproduces it exactly."""
    m_pots, m_seps = _dump_tree(model.m_tree)
    q_pots, q_seps = _dump_tree(model.q_tree)
    doc: dict[str, Any] = {
        "variables": [{"name": v.name, "domain": list(v.domain)} for v in model.variables],
        "m_graph": [list(e) for e in model.m_graph.edge_names()],
        "q_graph": [list(e) for e in model.q_graph.edge_names()],
        "m_potentials": m_pots,
        "q_potentials": q_pots,
        "m_separators": m_seps,
        "q_separators": q_seps,
    }
    return json.dumps(doc, indent=1) + "\n"


# -- event expressions ---------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<op>[&|=])|(?P<word>[^\s&|=]+))")


def _tokens(text: str):
    pos = 0
    out = []
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        start = m.start(m.lastgroup)
        out.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


def parse_expression(text: str) -> list[list[tuple[str, str, int]]]:
    """Parse into a list of terms, each a list of ``(name, value, position)`` atoms."""
    toks = _tokens(text)
    i = 0

    def expect(kind, what):
        nonlocal i
        k, v, p = toks[i]
        if k != kind and not (kind == "op" and v == what):
            found = "end of input" if k == "end" else repr(v)
            raise ExpressionError(f"expected {what}, found {found}", p)
        if kind == "op" and v != what:
            raise ExpressionError(f"expected {what!r}, found {v!r}", p)
        i += 1
        return v, p

    terms = []
    while True:
        term = []
        while True:
            name, p = expect("word", "a variable name")
            expect("op", "=")
            value, _ = expect("word", "a value")
            term.append((name, value, p))
            k, v, _ = toks[i]
            if k == "op" and v == "&":
                i += 1
                continue
            break
        terms.append(term)
        k, v, p = toks[i]
        if k == "op" and v == "|":
            i += 1
            continue
        if k != "end":
            raise ExpressionError(f"unexpected {v!r}", p)
        return terms


def parse_event(text: str, variables: Sequence[Variable]) -> Event:
    """The event denoted by an expression, over the scope of the variables it mentions."""
    terms = parse_expression(text)
    by_name = {v.name: v for v in variables}
    used = []
    for term in terms:
        for name, value, pos in term:
            if name not in by_name:
                raise ExpressionError(f"unknown variable {name!r}", pos)
            if value not in by_name[name].domain:
                raise ExpressionError(f"{value!r} is not a value of {name!r}", pos)
            used.append(by_name[name])
    scope = Scope(tuple(set(used)))
    mask = 0
    for idx, cfg in enumerate(scope.configs()):
        assign = dict(zip(scope.names, cfg))
        if any(all(assign[n] == v for n, v, _ in term) for term in terms):
            mask |= 1 << idx
    return Event(scope, mask)
