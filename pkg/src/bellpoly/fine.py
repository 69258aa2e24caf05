"""Joint-distribution representations of local models, both directions.

Two flavours of global distribution:

 - per-measurement: one outcome for every measurement of every party.
   Marginalizing reproduces the behaviour exactly when (and only when) the
   behaviour has a local decomposition with non-contextual factors.
 - per-context: one outcome tuple for every maximal context, treating the
   same measurement in different contexts as independent variables.
   This captures local decompositions with general (possibly disturbing)
   factors.

The conversions are canonical: the hidden-variable labels are the
assignment tuples themselves, so decomposition -> distribution ->
decomposition round-trips exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .behaviour import Behaviour
from .lp import Decomposition
from .scenario import Scenario, build_index
from .vertices import JointVertex, deterministic_g, deterministic_nc, product_behaviour

# per-measurement key: tuple over parties of outcome tuples aligned with
# party.measurements; per-context key: tuple over parties of tuples of
# outcome tuples aligned with party.contexts
Assignment = tuple


@dataclass(frozen=True)
class JointDistribution:
    scenario: Scenario
    mode: str                                  # "per-measurement" | "per-context"
    support: tuple[tuple[Assignment, Fraction], ...]

    def __post_init__(self):
        if self.mode not in ("per-measurement", "per-context"):
            raise ValueError(f"unknown joint-distribution mode {self.mode!r}")
        total = Fraction(0)
        seen = set()
        for key, w in self.support:
            if w < 0:
                raise ValueError("negative weight in joint distribution")
            if key in seen:
                raise ValueError("duplicate assignment in joint distribution")
            seen.add(key)
            self._check_key(key)
            total += w
        if total != 1:
            raise ValueError(f"joint distribution sums to {total}, expected 1")

    def _check_key(self, key: Assignment) -> None:
        parties = self.scenario.parties
        if len(key) != len(parties):
            raise ValueError("assignment arity does not match party count")
        for part, p in zip(key, parties):
            if self.mode == "per-measurement":
                if len(part) != len(p.measurements):
                    raise ValueError(f"assignment for {p.name} must cover every measurement")
                for o, m in zip(part, p.measurements):
                    if o not in p.outcome_labels(m):
                        raise ValueError(f"outcome {o!r} invalid for {m}")
            else:
                if len(part) != len(p.contexts):
                    raise ValueError(f"assignment for {p.name} must cover every context")
                for outs, ctx in zip(part, p.contexts):
                    if outs not in p.context_outcomes(ctx):
                        raise ValueError(f"outcomes {outs!r} invalid for context {ctx}")

    def weights(self) -> dict:
        return dict(self.support)


def _merge(support: dict, key: Assignment, w: Fraction) -> None:
    if w == 0:
        return
    support[key] = support.get(key, Fraction(0)) + w


def behaviour_from_joint(w: JointDistribution) -> Behaviour:
    """Marginalize a joint distribution back to a behaviour (the oracle
    direction used to verify every conversion)."""
    scenario = w.scenario
    index = build_index(scenario)
    values = [Fraction(0)] * index.dimension
    for key, weight in w.support:
        for pos, (ctxs, outs) in enumerate(index.keys):
            if _consistent(w.mode, scenario, key, ctxs, outs):
                values[pos] += weight
    return Behaviour(scenario, tuple(values))


def _consistent(mode, scenario, key, ctxs, outs) -> bool:
    for pidx, party in enumerate(scenario.parties):
        ctx, out = ctxs[pidx], outs[pidx]
        if mode == "per-measurement":
            fixed = dict(zip(party.measurements, key[pidx]))
            if any(fixed[m] != o for m, o in zip(ctx, out)):
                return False
        else:
            cidx = party.contexts.index(ctx)
            if key[pidx][cidx] != out:
                return False
    return True


def _nc_assignment(rf) -> dict:
    fixed = rf._measurement_assignment()
    if fixed is None:
        raise ValueError(
            "decomposition contains a factor that is not measurement-deterministic; "
            "a per-measurement joint distribution needs non-contextual vertices")
    return fixed


def joint_from_nc_decomposition(deco: Decomposition, vertices: Sequence[JointVertex],
                                scenario: Scenario) -> JointDistribution:
    """Per-measurement joint distribution of a local decomposition with
    non-contextual deterministic factors: each vertex contributes its weight
    to the global assignment it defines."""
    support: dict = {}
    for idx, weight in zip(deco.indices, deco.weights):
        jv = vertices[idx]
        key = []
        for rf, party in zip(jv.factors, scenario.parties):
            fixed = _nc_assignment(rf)
            key.append(tuple(fixed[m] for m in party.measurements))
        _merge(support, tuple(key), weight)
    return JointDistribution(scenario, "per-measurement", tuple(sorted(support.items())))


def nc_decomposition_from_joint(w: JointDistribution, scenario: Scenario
                                ) -> tuple[Decomposition, list[JointVertex]]:
    """Each support assignment becomes one hidden variable with Kronecker
    response functions; returns the decomposition over the constructed
    vertex list."""
    if w.mode != "per-measurement":
        raise ValueError("need a per-measurement joint distribution")
    vertices = []
    weights = []
    for key, weight in w.support:
        factors = tuple(
            deterministic_nc(party, dict(zip(party.measurements, part)))
            for party, part in zip(scenario.parties, key))
        vertices.append(JointVertex(factors, product_behaviour(scenario, factors)))
        weights.append(weight)
    deco = Decomposition(
        indices=tuple(range(len(vertices))),
        weights=tuple(weights),
        points=tuple(jv.behaviour.values for jv in vertices))
    return deco, vertices


def _g_assignment(rf, party) -> tuple:
    per_ctx = []
    for ctx in party.contexts:
        hit = None
        for outs in party.context_outcomes(ctx):
            v = rf.value(ctx, outs)
            if v == 1:
                hit = outs
            elif v != 0:
                raise ValueError(
                    "decomposition contains a non-deterministic factor; a "
                    "per-context joint distribution needs context-deterministic vertices")
        if hit is None:
            raise ValueError("factor is not deterministic on context " + "".join(ctx))
        per_ctx.append(hit)
    return tuple(per_ctx)


def joint_from_g_decomposition(deco: Decomposition, vertices: Sequence[JointVertex],
                               scenario: Scenario) -> JointDistribution:
    """Per-context joint distribution of a local decomposition with
    context-deterministic factors. Disturbance survives as cross-context
    disagreement inside single support points."""
    support: dict = {}
    for idx, weight in zip(deco.indices, deco.weights):
        jv = vertices[idx]
        key = tuple(_g_assignment(rf, party)
                    for rf, party in zip(jv.factors, scenario.parties))
        _merge(support, key, weight)
    return JointDistribution(scenario, "per-context", tuple(sorted(support.items())))


def g_decomposition_from_joint(w: JointDistribution, scenario: Scenario
                               ) -> tuple[Decomposition, list[JointVertex]]:
    if w.mode != "per-context":
        raise ValueError("need a per-context joint distribution")
    vertices = []
    weights = []
    for key, weight in w.support:
        factors = tuple(
            deterministic_g(party, dict(zip(party.contexts, part)))
            for party, part in zip(scenario.parties, key))
        vertices.append(JointVertex(factors, product_behaviour(scenario, factors)))
        weights.append(weight)
    deco = Decomposition(
        indices=tuple(range(len(vertices))),
        weights=tuple(weights),
        points=tuple(jv.behaviour.values for jv in vertices))
    return deco, vertices


def assignment_is_consistent(scenario: Scenario, key: Assignment) -> bool:
    """Does a per-context assignment give every shared measurement the same
    outcome in all of its contexts?"""
    for part, party in zip(key, scenario.parties):
        fixed: dict = {}
        for ctx, outs in zip(party.contexts, part):
            for m, o in zip(ctx, outs):
                if fixed.setdefault(m, o) != o:
                    return False
    return True
