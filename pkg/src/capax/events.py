"""Finite product spaces and events as sets of joint configurations.

An :class:`Event` is stored as a Python integer used as a bitset: bit ``i``
is set when the configuration with lexicographic index ``i`` (first variable
most significant) belongs to the event.  Python integers are unbounded, so the
same representation serves small and large scopes alike.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

from .errors import ConfigurationError, ScopeError


@dataclass(frozen=True)
class Variable:
    name: str
    domain: tuple[str, ...]
    order: int = 0

    def __post_init__(self):
        domain = tuple(str(v) for v in self.domain)
        if not domain:
            raise ConfigurationError(f"variable {self.name!r} has an empty domain")
        if len(set(domain)) != len(domain):
            raise ConfigurationError(f"variable {self.name!r} has repeated domain values")
        object.__setattr__(self, "domain", domain)

    @property
    def card(self) -> int:
        return len(self.domain)

    def __repr__(self):
        return f"Variable({self.name!r})"


def declare(*specs: tuple[str, Sequence]) -> list[Variable]:
    """Build variables in declaration order from ``(name, domain)`` pairs."""
    names = [name for name, _ in specs]
    if len(set(names)) != len(names):
        raise ConfigurationError("variable names must be unique")
    return [Variable(name, tuple(domain), i) for i, (name, domain) in enumerate(specs)]


def _sort_key(v: Variable):
    return (v.order, v.name)


@dataclass(frozen=True)
class Scope:
    """An ordered set of variables, always kept in canonical order."""

    variables: tuple[Variable, ...] = ()

    def __post_init__(self):
        vs = tuple(sorted(self.variables, key=_sort_key))
        names = [v.name for v in vs]
        if len(set(names)) != len(names):
            raise ScopeError(f"duplicate variables in scope {names}")
        object.__setattr__(self, "variables", vs)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @property
    def size(self) -> int:
        """Number of joint configurations, ``|Omega_scope|``."""
        return math.prod(v.card for v in self.variables)

    @property
    def full_mask(self) -> int:
        return (1 << self.size) - 1

    def __len__(self):
        return len(self.variables)

    def __iter__(self):
        return iter(self.variables)

    def __contains__(self, item):
        if isinstance(item, Variable):
            return item in self.variables
        return item in self.names

    def __le__(self, other: Scope) -> bool:
        return set(self.variables) <= set(other.variables)

    def __or__(self, other: Scope) -> Scope:
        return Scope(tuple(set(self.variables) | set(other.variables)))

    def __and__(self, other: Scope) -> Scope:
        return Scope(tuple(set(self.variables) & set(other.variables)))

    def __sub__(self, other: Scope) -> Scope:
        return Scope(tuple(set(self.variables) - set(other.variables)))

    def __repr__(self):
        return "{" + ",".join(self.names) + "}"

    def variable(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise ScopeError(f"variable {name!r} not in scope {self!r}")

    def index(self, config: Sequence[str]) -> int:
        if len(config) != len(self.variables):
            raise ConfigurationError(f"configuration {config!r} does not match scope {self!r}")
        idx = 0
        for v, value in zip(self.variables, config):
            try:
                pos = v.domain.index(str(value))
            except ValueError:
                raise ConfigurationError(
                    f"value {value!r} not in domain of {v.name!r}"
                ) from None
            idx = idx * v.card + pos
        return idx

    def config(self, index: int) -> tuple[str, ...]:
        out = []
        for v in reversed(self.variables):
            index, pos = divmod(index, v.card)
            out.append(v.domain[pos])
        return tuple(reversed(out))

    def configs(self) -> list[tuple[str, ...]]:
        return list(itertools.product(*(v.domain for v in self.variables)))


EMPTY_SCOPE = Scope(())


@lru_cache(maxsize=4096)
def projection_map(scope: Scope, sub: Scope) -> tuple[int, ...]:
    """Index map from configurations of ``scope`` to those of ``sub``."""
    if not sub <= scope:
        raise ScopeError(f"{sub!r} is not contained in {scope!r}")
    positions = [scope.variables.index(v) for v in sub.variables]
    strides = []
    acc = 1
    for v in reversed(sub.variables):
        strides.append(acc)
        acc *= v.card
    strides.reverse()
    out = []
    for digits in itertools.product(*(range(v.card) for v in scope.variables)):
        out.append(sum(digits[p] * s for p, s in zip(positions, strides)))
    return tuple(out)


@lru_cache(maxsize=4096)
def fiber_masks(scope: Scope, sub: Scope) -> tuple[int, ...]:
    """For each configuration of ``sub``, the mask of its preimage in ``scope``."""
    fibers = [0] * sub.size
    for i, j in enumerate(projection_map(scope, sub)):
        fibers[j] |= 1 << i
    return tuple(fibers)


def iter_bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def project_mask(mask: int, scope: Scope, sub: Scope) -> int:
    if len(sub) == len(scope):
        return mask
    pmap = projection_map(scope, sub)
    out = 0
    for i in iter_bits(mask):
        out |= 1 << pmap[i]
    return out


def extend_mask(mask: int, scope: Scope, sup: Scope) -> int:
    if len(sup) == len(scope):
        return mask
    fibers = fiber_masks(sup, scope)
    out = 0
    for j in iter_bits(mask):
        out |= fibers[j]
    return out


@dataclass(frozen=True)
class Event:
    scope: Scope
    mask: int = 0

    def __post_init__(self):
        if self.mask < 0 or self.mask >> self.scope.size:
            raise ConfigurationError("event mask has bits outside its scope")

    @classmethod
    def of(cls, scope: Scope, configs: Iterable) -> Event:
        """Event from configurations given as value tuples or name->value maps."""
        mask = 0
        for c in configs:
            if isinstance(c, Mapping):
                if set(c) != set(scope.names):
                    raise ConfigurationError(
                        f"configuration {dict(c)!r} does not assign exactly {scope!r}"
                    )
                c = tuple(c[n] for n in scope.names)
            mask |= 1 << scope.index(tuple(c))
        return cls(scope, mask)

    @classmethod
    def full(cls, scope: Scope) -> Event:
        return cls(scope, scope.full_mask)

    @classmethod
    def empty(cls, scope: Scope) -> Event:
        return cls(scope, 0)

    @property
    def is_empty(self) -> bool:
        return self.mask == 0

    @property
    def is_full(self) -> bool:
        return self.mask == self.scope.full_mask

    def configs(self) -> list[tuple[str, ...]]:
        return [self.scope.config(i) for i in iter_bits(self.mask)]

    def __len__(self):
        return popcount(self.mask)

    def __contains__(self, config) -> bool:
        return bool(self.mask >> self.scope.index(tuple(config)) & 1)

    def _check(self, other: Event):
        if other.scope != self.scope:
            raise ScopeError(f"events over different scopes {self.scope!r}, {other.scope!r}")

    def __and__(self, other: Event) -> Event:
        self._check(other)
        return Event(self.scope, self.mask & other.mask)

    def __or__(self, other: Event) -> Event:
        self._check(other)
        return Event(self.scope, self.mask | other.mask)

    def __sub__(self, other: Event) -> Event:
        self._check(other)
        return Event(self.scope, self.mask & ~other.mask)

    def __invert__(self) -> Event:
        return Event(self.scope, self.scope.full_mask ^ self.mask)

    def __le__(self, other: Event) -> bool:
        self._check(other)
        return self.mask & ~other.mask == 0

    def __repr__(self):
        body = ", ".join("(" + ",".join(c) + ")" for c in self.configs())
        return f"Event({self.scope!r}: {{{body}}})"


def project(e: Event, sub: Scope) -> Event:
    """Restrictions of the configurations of ``e`` to ``sub``."""
    if not sub <= e.scope:
        raise ScopeError(f"cannot project {e.scope!r} onto {sub!r}")
    return Event(sub, project_mask(e.mask, e.scope, sub))


def extend(e: Event, sup: Scope) -> Event:
    """Cylinder extension of ``e`` to the larger scope ``sup``."""
    if not e.scope <= sup:
        raise ScopeError(f"cannot extend {e.scope!r} to {sup!r}")
    return Event(sup, extend_mask(e.mask, e.scope, sup))


def rectangularize(e: Event, cliques: Sequence[Scope]) -> Event:
    """Smallest rectangle containing ``e``: the intersection of its clique cylinders."""
    if not cliques:
        if e.is_full:
            return e
        raise ConfigurationError("rectangularization needs at least one clique")
    covered = EMPTY_SCOPE
    for c in cliques:
        covered = covered | (c & e.scope)
    if not e.scope <= covered:
        raise ScopeError(f"cliques do not cover {e.scope!r}")
    out = e.scope.full_mask
    for c in cliques:
        sub = c & e.scope
        out &= extend_mask(project_mask(e.mask, e.scope, sub), sub, e.scope)
    return Event(e.scope, out)


def is_rectangle(e: Event, cliques: Sequence[Scope]) -> bool:
    return rectangularize(e, cliques) == e
