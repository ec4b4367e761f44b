"""Sparse set functions: Möbius and commonality transforms, marginalization,
evidence restriction and two-monotone conditioning.

Entries are keyed by event bitmask (see :mod:`capax.events`).  Absent keys read
as zero, except that a commonality-role function reads 1 at the empty event
unless that entry is stored explicitly.

Dense transforms go through numpy arrays of length ``2**|Omega|`` indexed by
event mask, so they are guarded by :data:`DENSE_LIMIT`.  Pointwise readers
(:func:`lower_at`, :func:`upper_at`) work on the sparse entries directly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np

from .errors import (
    InvalidCommonalityError,
    NumericDomainError,
    ScopeError,
    SizeGuardError,
)
from .events import Event, Scope, iter_bits, popcount, project_mask, extend_mask

ZERO_TOL = 1e-12
TOL = 1e-9
DENSE_LIMIT = 20


class Role(str, enum.Enum):
    LOWER = "lower"
    UPPER = "upper"
    MOBIUS = "mobius"
    COMMONALITY = "commonality"
    POTENTIAL = "potential"


class Status(str, enum.Enum):
    NORMAL = "normal"
    VACUOUS = "vacuous"
    CONTRADICTION = "contradiction"


@dataclass(frozen=True)
class Interval:
    lower: float
    upper: float
    status: Status = Status.NORMAL

    def __post_init__(self):
        object.__setattr__(self, "lower", float(self.lower))
        object.__setattr__(self, "upper", float(self.upper))
        object.__setattr__(self, "status", Status(self.status))
        if self.status is Status.NORMAL and self.lower > self.upper + TOL:
            raise NumericDomainError(f"inverted interval [{self.lower}, {self.upper}]")

    def rounded(self, digits: int = 9) -> tuple[float, float, str]:
        return (round(self.lower, digits) + 0.0, round(self.upper, digits) + 0.0, self.status.value)


def _key(scope: Scope, event) -> int:
    if isinstance(event, Event):
        if event.scope != scope:
            raise ScopeError(f"event over {event.scope!r} used with function over {scope!r}")
        return event.mask
    return int(event)


@dataclass(frozen=True)
class SetFunction:
    scope: Scope
    role: Role
    entries: Mapping[int, float] = field(default_factory=dict)
    fill: float | None = None  # value of absent events; None means 0

    def __post_init__(self):
        object.__setattr__(self, "role", Role(self.role))
        if self.fill is not None:
            object.__setattr__(self, "fill", float(self.fill))
        limit = self.scope.full_mask
        clean = {}
        for k, v in self.entries.items():
            k = int(k)
            if k < 0 or k > limit:
                raise ScopeError(f"entry key {k} outside scope {self.scope!r}")
            v = float(v)
            if not math.isfinite(v):
                raise NumericDomainError(f"non-finite value {v} at event {k}")
            clean[k] = v
        object.__setattr__(self, "entries", clean)

    @classmethod
    def from_events(cls, scope: Scope, role, values: Mapping[Event, float]) -> SetFunction:
        entries = {}
        for e, v in values.items():
            k = _key(scope, e)
            entries[k] = entries.get(k, 0.0) + float(v)
        return cls(scope, role, entries)

    @classmethod
    def constant(cls, scope: Scope, value: float, role=Role.POTENTIAL) -> SetFunction:
        return cls(scope, role, {}, fill=value)

    def get(self, event) -> float:
        k = _key(self.scope, event)
        if k in self.entries:
            return self.entries[k]
        if self.fill is not None:
            return self.fill
        if k == 0 and self.role is Role.COMMONALITY:
            return 1.0
        return 0.0

    __getitem__ = get

    def items(self) -> Iterator[tuple[int, float]]:
        """Stored entries, plus the implicit empty-event 1 for commonalities.

        A filled function yields every event of its scope.
        """
        if self.fill is not None:
            n = _check_dense(self.scope)
            for k in range(1 << n):
                yield k, self.get(k)
            return
        if self.role is Role.COMMONALITY and 0 not in self.entries:
            yield 0, 1.0
        yield from self.entries.items()

    def event_items(self) -> Iterator[tuple[Event, float]]:
        for k, v in self.items():
            yield Event(self.scope, k), v

    def with_role(self, role) -> SetFunction:
        return SetFunction(self.scope, role, self.entries, self.fill)

    def total(self) -> float:
        return math.fsum(v for _, v in self.items())

    def dense(self) -> np.ndarray:
        n = _check_dense(self.scope)
        out = np.zeros(1 << n)
        for k, v in self.items():
            out[k] = v
        return out

    @classmethod
    def from_dense(cls, scope: Scope, role, values: np.ndarray, tol: float = ZERO_TOL) -> SetFunction:
        nz = np.flatnonzero(np.abs(values) > tol)
        return cls(scope, role, {int(k): float(values[k]) for k in nz})

    def allclose(self, other: SetFunction, tol: float = TOL) -> bool:
        if self.fill is not None or other.fill is not None:
            keys = range(1 << _check_dense(self.scope))
        else:
            keys = set(self.entries) | set(other.entries) | {0}
        return all(abs(self.get(k) - other.get(k)) <= tol for k in keys)

    def __repr__(self):
        fill = "" if self.fill is None else f", fill {self.fill}"
        return f"SetFunction({self.scope!r}, {self.role.value}, {len(self.entries)} entries{fill})"


def _check_dense(scope: Scope) -> int:
    n = scope.size
    if n > DENSE_LIMIT:
        raise SizeGuardError(
            f"dense transform over {n} configurations exceeds limit {DENSE_LIMIT}"
        )
    return n


# -- dense kernels over arrays indexed by event mask -------------------------


def _nbits(a: np.ndarray) -> int:
    n = a.shape[0].bit_length() - 1
    if a.shape[0] != 1 << n:
        raise ValueError("dense set-function arrays must have length 2**n")
    return n


def zeta_dense(a: np.ndarray) -> np.ndarray:
    """Subset sums: ``out[A] = sum_{B subset of A} a[B]``."""
    out = np.array(a, dtype=float, copy=True)
    n = _nbits(out)
    for i in range(n):
        v = out.reshape(-1, 2, 1 << i)
        v[:, 1, :] += v[:, 0, :]
    return out


def mobius_dense(a: np.ndarray) -> np.ndarray:
    """Inverse of :func:`zeta_dense` (alternating subset sums)."""
    out = np.array(a, dtype=float, copy=True)
    n = _nbits(out)
    for i in range(n):
        v = out.reshape(-1, 2, 1 << i)
        v[:, 1, :] -= v[:, 0, :]
    return out


def parity_signs(n: int) -> np.ndarray:
    """``(-1)**|A|`` for every mask ``A`` over ``n`` configurations."""
    s = np.ones(1)
    for _ in range(n):
        s = np.concatenate([s, -s])
    return s


def dual_dense(a: np.ndarray) -> np.ndarray:
    # complement of mask k is (2**n - 1) - k, i.e. the reversed array
    return 1.0 - a[::-1]


def commonality_dense(upper: np.ndarray) -> np.ndarray:
    signs = parity_signs(_nbits(upper))
    q = -zeta_dense(signs * upper)
    q[0] = 1.0
    return q


def inv_commonality_dense(q: np.ndarray) -> np.ndarray:
    signs = parity_signs(_nbits(q))
    return 1.0 - zeta_dense(signs * q)


# -- transforms on SetFunction ----------------------------------------------


def mobius(p: SetFunction) -> SetFunction:
    """Möbius transform of a lower probability (missing events read as 0)."""
    return SetFunction.from_dense(p.scope, Role.MOBIUS, mobius_dense(p.dense()))


def inv_mobius(m: SetFunction) -> SetFunction:
    return SetFunction.from_dense(m.scope, Role.LOWER, zeta_dense(m.dense()))


def dual(p: SetFunction) -> SetFunction:
    """``1 - p(complement)``; swaps the lower and upper roles."""
    role = Role.LOWER if p.role is Role.UPPER else Role.UPPER
    return SetFunction.from_dense(p.scope, role, dual_dense(p.dense()))


def commonality(u: SetFunction) -> SetFunction:
    """Commonality transform of an upper probability."""
    q = commonality_dense(u.dense())
    out = SetFunction.from_dense(u.scope, Role.COMMONALITY, q)
    return out


def inv_commonality(q: SetFunction) -> SetFunction:
    if abs(q.get(0) - 1.0) > TOL:
        raise InvalidCommonalityError(f"commonality at the empty event is {q.get(0)}, not 1")
    return SetFunction.from_dense(q.scope, Role.UPPER, inv_commonality_dense(q.dense()))


def lower_at(m: SetFunction, event) -> float:
    """Inverse Möbius transform evaluated at one event, from sparse entries."""
    a = _key(m.scope, event)
    return math.fsum(v for k, v in m.items() if k & ~a == 0)


def upper_at(q: SetFunction, event) -> float:
    """Inverse commonality transform evaluated at one event, from sparse entries."""
    a = _key(q.scope, event)
    s = math.fsum(-v if popcount(k) & 1 else v for k, v in q.items() if k & ~a == 0)
    return 1.0 - s


# -- marginalization and evidence -------------------------------------------


def _check_sub(f: SetFunction, sub: Scope):
    if not sub <= f.scope:
        raise ScopeError(f"cannot localize {f.scope!r} to {sub!r}")


def loc_m(m: SetFunction, sub: Scope) -> SetFunction:
    """Möbius marginal: mass of every event moves to its projection."""
    _check_sub(m, sub)
    acc: dict[int, list[float]] = {}
    for k, v in m.items():
        acc.setdefault(project_mask(k, m.scope, sub), []).append(v)
    entries = {k: math.fsum(vs) for k, vs in acc.items()}
    return SetFunction(sub, m.role, {k: v for k, v in entries.items() if abs(v) > ZERO_TOL})


def loc_q(q: SetFunction, sub: Scope) -> SetFunction:
    """Commonality marginal.

    Absent non-empty events carry value 0 and so contribute nothing to the
    sign-weighted preimage sum; only stored entries (and the implicit empty
    event of a commonality) are visited.
    """
    _check_sub(q, sub)
    acc: dict[int, list[float]] = {}
    for k, v in q.items():
        acc.setdefault(project_mask(k, q.scope, sub), []).append(-v if popcount(k) & 1 else v)
    entries = {}
    for a, vs in acc.items():
        total = math.fsum(vs)
        if popcount(a) & 1:
            total = -total
        if abs(total) > ZERO_TOL or a == 0:
            entries[a] = total
    return SetFunction(sub, q.role, entries)


def restrict_to_evidence(f: SetFunction, e: Event) -> SetFunction:
    """Zero every entry whose event is not contained in the cylinder of ``e``."""
    if not e.scope <= f.scope:
        raise ScopeError(f"evidence over {e.scope!r} does not fit {f.scope!r}")
    ext = extend_mask(e.mask, e.scope, f.scope)
    keep = {k: v for k, v in (f.items() if f.fill is not None else f.entries.items()) if k & ~ext == 0}
    return SetFunction(f.scope, f.role, keep)


# -- conditioning -------------------------------------------------------------


def conditional_interval(
    low_AE: float,
    up_AcE: float,
    up_AE: float,
    low_AcE: float,
    low_E: float,
    up_E: float,
    e_subset_a: bool | None = None,
    e_subset_ac: bool | None = None,
    tol: float = TOL,
) -> Interval:
    """Posterior bounds on A given E for a two-monotone lower probability.

    Inputs are ``P(A&E)``, ``Pu(~A&E)``, ``Pu(A&E)``, ``P(~A&E)``, ``P(E)`` and
    ``Pu(E)``.  When ``P(E)`` vanishes but ``Pu(E)`` does not, the bounds are
    {0, 1}-valued: E counts as inside A when it is set-contained in A or when
    the part of E outside A has zero upper probability.
    """
    vals = (low_AE, up_AcE, up_AE, low_AcE, low_E, up_E)
    for v in vals:
        if not (-tol <= v <= 1.0 + tol):
            raise NumericDomainError(f"conditioning input {v} outside [0, 1]")
    if low_E > up_E + tol:
        raise NumericDomainError(f"P(E)={low_E} exceeds upper P(E)={up_E}")
    if up_E <= tol:
        return Interval(math.nan, math.nan, Status.CONTRADICTION)
    if low_E <= tol:
        inside_a = bool(e_subset_a) or up_AcE <= tol
        inside_ac = bool(e_subset_ac) or up_AE <= tol
        if inside_a:
            return Interval(1.0, 1.0, Status.VACUOUS)
        if inside_ac:
            return Interval(0.0, 0.0, Status.VACUOUS)
        return Interval(0.0, 1.0, Status.VACUOUS)
    den_lo = low_AE + up_AcE
    den_up = up_AE + low_AcE
    if den_lo <= ZERO_TOL or den_up <= ZERO_TOL:
        raise NumericDomainError("conditioning denominator vanished with P(E) > 0")
    lower = min(max(low_AE / den_lo, 0.0), 1.0)
    upper = min(max(up_AE / den_up, 0.0), 1.0)
    return Interval(lower, upper, Status.NORMAL)


# -- validation ---------------------------------------------------------------


@dataclass
class MonotoneReport:
    ok: bool
    boundary_ok: bool
    violations: list[tuple[Event, Event, float, float]]


def check_two_monotone(p: SetFunction, cap: int = 12, tol: float = TOL, max_report: int = 50) -> MonotoneReport:
    """Check the boundary conditions and supermodularity over all event pairs."""
    n = p.scope.size
    if n > cap:
        raise SizeGuardError(f"two-monotonicity check over {n} configurations exceeds cap {cap}")
    P = p.dense()
    full = (1 << n) - 1
    boundary_ok = abs(P[0]) <= tol and abs(P[full] - 1.0) <= tol
    idx = np.arange(1 << n)
    violations = []
    for a in range(1 << n):
        gap = P[a] + P - P[a | idx] - P[a & idx]
        for b in np.flatnonzero(gap > tol):
            b = int(b)
            if b < a:
                continue
            if len(violations) < max_report:
                violations.append(
                    (Event(p.scope, a), Event(p.scope, b), float(P[a] + P[b]), float(P[a | b] + P[a & b]))
                )
            else:
                break
    return MonotoneReport(boundary_ok and not violations, boundary_ok, violations)


__all__ = [
    "Role",
    "Status",
    "Interval",
    "SetFunction",
    "mobius",
    "inv_mobius",
    "dual",
    "commonality",
    "inv_commonality",
    "lower_at",
    "upper_at",
    "loc_m",
    "loc_q",
    "restrict_to_evidence",
    "conditional_interval",
    "check_two_monotone",
    "zeta_dense",
    "mobius_dense",
    "dual_dense",
    "commonality_dense",
    "inv_commonality_dense",
    "parity_signs",
    "iter_bits",
]
