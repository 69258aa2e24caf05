"""Extremal response functions and joint local vertices.

Three classes per party:
 - nc: one deterministic outcome per measurement (non-contextual);
 - g:  one deterministic outcome tuple per maximal context, with no
       consistency required for a measurement shared by two contexts
       (possibly disturbing);
 - nd: extreme points of the party's non-disturbing polytope, computed by
       vertex enumeration of its H-representation (never hard-coded, so
       arbitrary context hypergraphs work; known counts are test oracles).

Joint vertices are products of one response function per party and span
all nine local sets L_{I,J}.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

from . import polytope
from .behaviour import (
    Behaviour,
    marginal_check_nd,
    party_nd_equalities,
    party_normalization_equalities,
    party_positivity_inequalities,
)
from .scenario import Context, OutcomeTuple, Party, Scenario, build_index, marginal_index

CLASSES = ("nc", "nd", "g")


@dataclass(frozen=True)
class ResponseFunction:
    """One party's probability assignment over its own contexts."""

    party: Party
    values: tuple[Fraction, ...]         # aligned with marginal_index(party)
    kind: str                            # "nc" | "nd" | "g"
    # deterministic structure when available: nc maps measurement -> outcome,
    # g maps context -> outcome tuple; nd vertices from enumeration carry None
    assignment: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in CLASSES:
            raise ValueError(f"unknown response-function class {self.kind!r}")
        index = marginal_index(self.party)
        if len(self.values) != index.dimension:
            raise ValueError("response function has wrong width")
        for v in self.values:
            if v < 0:
                raise ValueError("negative response-function entry")
        for ctx in self.party.contexts:
            total = sum(self.values[index.position_of(ctx, o)]
                        for o in self.party.context_outcomes(ctx))
            if total != 1:
                raise ValueError(f"response function not normalized on {ctx}")

    def value(self, ctx: Context, outs: OutcomeTuple) -> Fraction:
        return self.values[marginal_index(self.party).position_of(ctx, outs)]

    def is_nondisturbing(self) -> bool:
        from .behaviour import MarginalBehaviour
        return not marginal_check_nd(MarginalBehaviour(self.party, self.values))

    def is_measurement_deterministic(self) -> bool:
        """True when the function factorizes as one fixed outcome per
        measurement (the nc vertex form)."""
        return self._measurement_assignment() is not None

    def _measurement_assignment(self):
        fixed: dict[str, str] = {}
        for ctx in self.party.contexts:
            hit = None
            for outs in self.party.context_outcomes(ctx):
                v = self.value(ctx, outs)
                if v == 1:
                    hit = outs
                elif v != 0:
                    return None
            if hit is None:
                return None
            for m, o in zip(ctx, hit):
                if fixed.setdefault(m, o) != o:
                    return None
        return fixed


@dataclass(frozen=True)
class JointVertex:
    """Product of one response function per party, materialized as a Behaviour."""

    factors: tuple[ResponseFunction, ...]
    behaviour: Behaviour


def deterministic_nc(party: Party, assignment: dict[str, str]) -> ResponseFunction:
    """The nc vertex fixing each measurement's outcome per `assignment`."""
    index = marginal_index(party)
    values = []
    for ctx, outs in index:
        ok = all(assignment[m] == o for m, o in zip(ctx, outs))
        values.append(Fraction(1 if ok else 0))
    return ResponseFunction(party, tuple(values), "nc",
                            tuple(sorted(assignment.items())))


def deterministic_g(party: Party, per_context: dict[Context, OutcomeTuple]) -> ResponseFunction:
    """The g vertex fixing one outcome tuple per maximal context."""
    index = marginal_index(party)
    values = []
    for ctx, outs in index:
        values.append(Fraction(1 if per_context[ctx] == outs else 0))
    return ResponseFunction(party, tuple(values), "g",
                            tuple((c, per_context[c]) for c in party.contexts))


def iter_nc_vertices(party: Party) -> Iterator[ResponseFunction]:
    """One vertex per global outcome assignment; count is the product of the
    outcome cardinalities."""
    for combo in itertools.product(*(party.outcome_labels(m) for m in party.measurements)):
        yield deterministic_nc(party, dict(zip(party.measurements, combo)))


def iter_g_vertices(party: Party) -> Iterator[ResponseFunction]:
    """One vertex per independent choice of outcome tuple per context; a
    measurement shared by two contexts may answer differently in each."""
    choices = [party.context_outcomes(ctx) for ctx in party.contexts]
    for combo in itertools.product(*choices):
        yield deterministic_g(party, dict(zip(party.contexts, combo)))


def enumerate_nc_vertices(party: Party) -> tuple[ResponseFunction, ...]:
    return _nc_cache(party)


def enumerate_g_vertices(party: Party) -> tuple[ResponseFunction, ...]:
    return _g_cache(party)


def enumerate_nd_vertices(party: Party, ray_limit: int = 200_000) -> tuple[ResponseFunction, ...]:
    """Exact vertex set of the party's non-disturbing polytope.

    Built from its H-representation (normalization, positivity,
    subcontext-marginal equalities) through the double description engine.
    Deterministic order: vertices sorted lexicographically.
    """
    return _nd_cache(party, ray_limit)


@lru_cache(maxsize=None)
def _nc_cache(party: Party) -> tuple[ResponseFunction, ...]:
    return tuple(iter_nc_vertices(party))


@lru_cache(maxsize=None)
def _g_cache(party: Party) -> tuple[ResponseFunction, ...]:
    return tuple(iter_g_vertices(party))


@lru_cache(maxsize=None)
def _nd_cache(party: Party, ray_limit: int) -> tuple[ResponseFunction, ...]:
    index = marginal_index(party)
    hrep = polytope.HRep.build(
        index.dimension,
        party_normalization_equalities(party) + party_nd_equalities(party),
        party_positivity_inequalities(party))
    vrep = polytope.facets_to_vertices(hrep, ray_limit)
    out = []
    for v in vrep.vertices:
        rf = ResponseFunction(party, v, "nd")
        out.append(rf)
    return tuple(out)


def enumerate_class(party: Party, kind: str, ray_limit: int = 200_000) -> tuple[ResponseFunction, ...]:
    if kind == "nc":
        return enumerate_nc_vertices(party)
    if kind == "nd":
        return enumerate_nd_vertices(party, ray_limit)
    if kind == "g":
        return enumerate_g_vertices(party)
    raise ValueError(f"unknown response-function class {kind!r}")


def product_behaviour(scenario: Scenario, factors: Sequence[ResponseFunction]) -> Behaviour:
    """Behaviour induced by one response function per party."""
    if tuple(rf.party for rf in factors) != scenario.parties:
        raise ValueError("factors do not match the scenario's parties")
    index = build_index(scenario)
    values = []
    for ctxs, outs in index.keys:
        v = Fraction(1)
        for rf, ctx, o in zip(factors, ctxs, outs):
            v *= rf.value(ctx, o)
        values.append(v)
    return Behaviour(scenario, tuple(values))


def iter_joint_vertices(scenario: Scenario, kinds: Sequence[str],
                        ray_limit: int = 200_000) -> Iterator[JointVertex]:
    """Cartesian product of per-party enumerations for the given classes,
    in deterministic order (first party's vertices vary slowest)."""
    if len(kinds) != len(scenario.parties):
        raise ValueError("need one response-function class per party")
    enums = [enumerate_class(p, k, ray_limit) for p, k in zip(scenario.parties, kinds)]
    for combo in itertools.product(*enums):
        yield JointVertex(tuple(combo), product_behaviour(scenario, combo))


def joint_vertices(scenario: Scenario, kinds: Sequence[str],
                   ray_limit: int = 200_000) -> tuple[JointVertex, ...]:
    return _joint_cache(scenario, tuple(kinds), ray_limit)


@lru_cache(maxsize=None)
def _joint_cache(scenario, kinds, ray_limit):
    return tuple(iter_joint_vertices(scenario, kinds, ray_limit))


def vertex_matrix(vertices: Sequence[JointVertex]) -> list[tuple[Fraction, ...]]:
    return [jv.behaviour.values for jv in vertices]
