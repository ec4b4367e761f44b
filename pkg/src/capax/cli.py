"""Command-line interface: ``capax validate | query | oracle``.

Exit codes: 0 success, 1 contradiction (zero upper probability of the
evidence), 2 invalid model, 3 usage or parse error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path
from typing import Sequence

from .document import parse_event, parse_model
from .engine import Model, enter_evidence, marginal_lower, propagate, query_posterior
from .errors import (
    CapaxError,
    ContradictionError,
    EmptyEvidenceError,
    ExpressionError,
    InconsistentPairError,
    MalformedModelError,
    NonLocalEvidenceError,
    NonLocalQueryError,
    SchemaError,
    ScopeError,
    SizeGuardError,
)
from .events import Event, extend
from .setfunc import Interval, Status, check_two_monotone

EXIT_OK, EXIT_CONTRADICTION, EXIT_INVALID, EXIT_USAGE = 0, 1, 2, 3
MONOTONE_CAP = 12


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="capax", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    v = sub.add_parser("validate", help="load a model and check it")
    v.add_argument("file")
    v.add_argument("--deep", action="store_true", help="assemble the joint and check the Markov property")
    q = sub.add_parser("query", help="posterior bounds by junction-tree propagation")
    q.add_argument("file")
    q.add_argument("--evidence", action="append", default=[], metavar="EXPR")
    q.add_argument("--target", action="append", default=[], metavar="EXPR")
    q.add_argument("--deep-check", action="store_true", help="deep-validate first and cross-check against the flat oracle")
    o = sub.add_parser("oracle", help="posterior bounds from the flat joint, for differential testing")
    o.add_argument("file")
    o.add_argument("--evidence", action="append", required=True, metavar="EXPR")
    o.add_argument("--target", action="append", required=True, metavar="EXPR")
    return p


def format_interval(expr: str, iv: Interval) -> str:
    lo, up, status = iv.rounded(9)
    fmt = lambda x: "nan" if math.isnan(x) else f"{x + 0.0:.9f}"
    return f"{expr} lower={fmt(lo)} upper={fmt(up)} status={status}"


def _load(path: str) -> Model:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _UsageError(f"cannot read {path}: {exc.strerror}") from None
    return parse_model(text)


def _default_targets(model: Model) -> list[str]:
    return [f"{v.name}={x}" for v in model.variables for x in v.domain]


def _deep_validate(model: Model, out) -> None:
    from .oracle import assemble_joint, check_markov

    joint = assemble_joint(model, check_dual=True)
    report = check_markov(model, joint)
    for line in report.lines():
        print(line, file=out)
    print(f"dual consistency: ok (max error {joint.dual_error:.3g})", file=out)
    if not report.ok:
        raise MalformedModelError("model is not Markov with respect to its graphs")
    probe = model.copy()
    propagate(probe)
    for i, node in enumerate(probe.m_tree.nodes):
        if len(node) and node.size <= MONOTONE_CAP:
            rep = check_two_monotone(marginal_lower(probe, i))
            if not rep.ok:
                print(f"warning: marginal on {node!r} is not 2-monotone", file=sys.stderr)


def _cmd_validate(args) -> int:
    model = _load(args.file)
    if args.deep:
        _deep_validate(model, sys.stdout)
    print(
        f"ok: {len(model.variables)} variables, "
        f"m-tree {len(model.m_tree.nodes)} nodes, q-tree {len(model.q_tree.nodes)} nodes"
    )
    return EXIT_OK


def _cmd_query(args) -> int:
    model = _load(args.file)
    if args.deep_check:
        _deep_validate(model, sys.stderr)
    pristine = model.copy()
    evidence = [parse_event(e, model.variables) for e in args.evidence]
    target_exprs = args.target or _default_targets(model)
    targets = [parse_event(t, model.variables) for t in target_exprs]
    for e in evidence:
        enter_evidence(model, e)
    propagate(model)
    results = [query_posterior(model, t) for t in targets]
    if args.deep_check:
        _cross_check(pristine, evidence, targets, results)
    for expr, iv in zip(target_exprs, results):
        print(format_interval(expr, iv))
    return EXIT_OK


def _joint_event(model: Model, events: Sequence[Event]) -> Event:
    scope = model.scope
    mask = scope.full_mask
    for e in events:
        mask &= extend(e, scope).mask
    return Event(scope, mask)


def _cross_check(pristine: Model, evidence, targets, results) -> None:
    from .oracle import assemble_joint, flat_posterior

    joint = assemble_joint(pristine, check_dual=False)
    e = _joint_event(pristine, evidence)
    for t, iv in zip(targets, results):
        ref = flat_posterior(joint, extend(t, pristine.scope), e)
        same = ref.status == iv.status and (
            iv.status == Status.CONTRADICTION
            or (abs(ref.lower - iv.lower) <= 1e-9 and abs(ref.upper - iv.upper) <= 1e-9)
        )
        if not same:
            raise MalformedModelError(f"engine and flat oracle disagree on {t!r}: {iv} vs {ref}")


def _cmd_oracle(args) -> int:
    from .oracle import assemble_joint, flat_posterior

    model = _load(args.file)
    evidence = [parse_event(e, model.variables) for e in args.evidence]
    targets = [parse_event(t, model.variables) for t in args.target]
    for e in evidence:
        if e.is_empty:
            raise EmptyEvidenceError(f"evidence over {e.scope!r} is the empty event")
    joint = assemble_joint(model, check_dual=False)
    e = _joint_event(model, evidence)
    results = [flat_posterior(joint, extend(t, model.scope), e) for t in targets]
    if any(r.status == Status.CONTRADICTION for r in results):
        raise ContradictionError("evidence has zero upper probability: logical contradiction")
    for expr, iv in zip(args.target, results):
        print(format_interval(expr, iv))
    return EXIT_OK


_COMMANDS = {"validate": _cmd_validate, "query": _cmd_query, "oracle": _cmd_oracle}


def run(argv: Sequence[str] | None = None) -> int:
    """Execute one command; returns the process exit code."""
    try:
        args = build_parser().parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ContradictionError as exc:
        print(f"contradiction: {exc}", file=sys.stderr)
        return EXIT_CONTRADICTION
    except SchemaError as exc:
        print(f"invalid model: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except InconsistentPairError as exc:
        print(f"invalid model: m- and q-sides are not duals: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except MalformedModelError as exc:
        print(f"invalid model: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ExpressionError as exc:
        print(f"expression error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EmptyEvidenceError, NonLocalEvidenceError, NonLocalQueryError, SizeGuardError, ScopeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapaxError as exc:
        print(f"invalid model: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(run())
