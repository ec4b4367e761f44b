"""Exact inference for Markov two-monotone lower probabilities on paired junction trees."""

from .engine import (
    Finding,
    Model,
    QueryTarget,
    build_model,
    enter_evidence,
    propagate,
    query_posterior,
    total_evidence_bounds,
)
from .document import dump_model, parse_event, parse_model
from .events import Event, Scope, Variable, declare
from .graph import Graph, build_junction_tree, triangulate
from .setfunc import Interval, Role, SetFunction, Status, conditional_interval

__all__ = [
    "Event",
    "Finding",
    "Graph",
    "Interval",
    "Model",
    "QueryTarget",
    "Role",
    "Scope",
    "SetFunction",
    "Status",
    "Variable",
    "build_junction_tree",
    "build_model",
    "conditional_interval",
    "declare",
    "dump_model",
    "enter_evidence",
    "parse_event",
    "parse_model",
    "propagate",
    "query_posterior",
    "total_evidence_bounds",
    "triangulate",
]
