"""Scenario model: parties, maximal contexts, and coordinate indexing.

A scenario fixes the layout of every behaviour vector: context pairs in
declaration order (first party major), outcome tuples in mixed-radix
lexicographic order with the last measurement's outcome varying fastest.
That ordering is load-bearing: behaviour tables, vertex caches and
inequality files all assume it.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Sequence


class ScenarioError(ValueError):
    """Raised when a party or scenario violates a structural invariant."""


Context = tuple[str, ...]
OutcomeTuple = tuple[str, ...]


@dataclass(frozen=True)
class Party:
    """One laboratory: measurements, their outcome labels, maximal contexts."""

    name: str
    measurements: tuple[str, ...]
    outcomes: tuple[tuple[str, ...], ...]  # aligned with measurements
    contexts: tuple[Context, ...]          # maximal contexts, declaration order

    def __post_init__(self):
        if len(set(self.measurements)) != len(self.measurements):
            raise ScenarioError(f"party {self.name}: duplicate measurement labels")
        if len(self.outcomes) != len(self.measurements):
            raise ScenarioError(f"party {self.name}: outcomes not aligned with measurements")
        for m, outs in zip(self.measurements, self.outcomes):
            if len(outs) == 0:
                raise ScenarioError(f"party {self.name}: measurement {m} has no outcomes")
            if len(set(outs)) != len(outs):
                raise ScenarioError(f"party {self.name}: measurement {m} has duplicate outcomes")
        known = set(self.measurements)
        covered = set()
        for ctx in self.contexts:
            if len(ctx) == 0:
                raise ScenarioError(f"party {self.name}: empty context")
            if len(set(ctx)) != len(ctx):
                raise ScenarioError(f"party {self.name}: context {ctx} repeats a measurement")
            for m in ctx:
                if m not in known:
                    raise ScenarioError(f"party {self.name}: context {ctx} uses unknown measurement {m}")
            covered.update(ctx)
        if covered != known:
            missing = sorted(known - covered)
            raise ScenarioError(f"party {self.name}: measurements {missing} appear in no context")
        for c1 in self.contexts:
            for c2 in self.contexts:
                if c1 != c2 and set(c1) <= set(c2):
                    raise ScenarioError(
                        f"party {self.name}: context {c1} is contained in {c2} (contexts must be maximal)")

    def outcome_labels(self, measurement: str) -> tuple[str, ...]:
        return self.outcomes[self.measurements.index(measurement)]

    def context_outcomes(self, ctx: Context) -> list[OutcomeTuple]:
        """All outcome tuples of a context, last measurement fastest."""
        return [tuple(t) for t in itertools.product(*(self.outcome_labels(m) for m in ctx))]

    def context_label(self, ctx: Context) -> str:
        return "".join(ctx)


@dataclass(frozen=True)
class Scenario:
    """An ordered collection of parties (one for pure contextuality, two for
    the bipartite case; more are rejected)."""

    parties: tuple[Party, ...]

    def __post_init__(self):
        if not 1 <= len(self.parties) <= 2:
            raise ScenarioError(
                f"{len(self.parties)} parties given; only 1- and 2-party scenarios are supported")
        names = [p.name for p in self.parties]
        if len(set(names)) != len(names):
            raise ScenarioError("duplicate party names")

    @property
    def alice(self) -> Party:
        return self.parties[0]

    @property
    def bob(self) -> Party:
        if len(self.parties) < 2:
            raise ScenarioError("single-party scenario has no second party")
        return self.parties[1]

    def party(self, name: str) -> Party:
        for p in self.parties:
            if p.name == name:
                return p
        raise ScenarioError(f"no party named {name}")

    def index(self) -> "CoordinateIndex":
        return build_index(self)

    def digest(self) -> str:
        """Stable content hash, used to key vertex caches and run directories."""
        parts = []
        for p in self.parties:
            parts.append(p.name)
            for m, outs in zip(p.measurements, p.outcomes):
                parts.append(m + "=" + ",".join(outs))
            for ctx in p.contexts:
                parts.append("|".join(ctx))
        return hashlib.sha256("\n".join(parts).encode()).hexdigest()[:16]


# A behaviour coordinate: one maximal context per party, one outcome tuple per party.
Key = tuple[tuple[Context, ...], tuple[OutcomeTuple, ...]]


@dataclass(frozen=True)
class CoordinateIndex:
    """Bijection between behaviour-vector positions and (contexts, outcomes) keys."""

    keys: tuple[Key, ...]
    position: dict[Key, int] = field(compare=False)

    @property
    def dimension(self) -> int:
        return len(self.keys)

    def key_of(self, pos: int) -> Key:
        return self.keys[pos]

    def position_of(self, key: Key) -> int:
        return self.position[key]

    def __iter__(self) -> Iterator[Key]:
        return iter(self.keys)


@lru_cache(maxsize=None)
def build_index(scenario: Scenario) -> CoordinateIndex:
    """Canonical coordinate order for behaviour vectors of a scenario."""
    keys: list[Key] = []
    context_choices = [p.contexts for p in scenario.parties]
    for ctxs in itertools.product(*context_choices):
        outcome_choices = [p.context_outcomes(c) for p, c in zip(scenario.parties, ctxs)]
        for outs in itertools.product(*outcome_choices):
            keys.append((tuple(ctxs), tuple(outs)))
    return CoordinateIndex(tuple(keys), {k: i for i, k in enumerate(keys)})


@dataclass(frozen=True)
class MarginalIndex:
    """Coordinate order for one party's marginal behaviours and response
    functions: (context, outcome tuple), contexts in declaration order."""

    keys: tuple[tuple[Context, OutcomeTuple], ...]
    position: dict[tuple[Context, OutcomeTuple], int] = field(compare=False)

    @property
    def dimension(self) -> int:
        return len(self.keys)

    def position_of(self, ctx: Context, outs: OutcomeTuple) -> int:
        return self.position[(ctx, outs)]

    def __iter__(self):
        return iter(self.keys)


@lru_cache(maxsize=None)
def marginal_index(party: Party) -> MarginalIndex:
    keys = [(ctx, outs) for ctx in party.contexts for outs in party.context_outcomes(ctx)]
    return MarginalIndex(tuple(keys), {k: i for i, k in enumerate(keys)})


def subcontexts(party: Party) -> list[tuple[Context, list[Context]]]:
    """Non-empty intersections of pairs of maximal contexts, each listed once
    with every maximal context containing it.

    These are exactly the sites where a non-disturbance equality is required:
    the marginal on the shared measurements must not depend on which parent
    context was measured.
    """
    order = {m: i for i, m in enumerate(party.measurements)}
    found: dict[Context, list[Context]] = {}
    for c1, c2 in itertools.combinations(party.contexts, 2):
        inter = set(c1) & set(c2)
        if not inter:
            continue
        sub = tuple(sorted(inter, key=order.get))
        if sub not in found:
            found[sub] = [ctx for ctx in party.contexts if inter <= set(ctx)]
    return sorted(found.items(), key=lambda kv: tuple(order[m] for m in kv[0]))
