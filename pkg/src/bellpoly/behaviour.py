"""Exact behaviour vectors and the non-signaling / non-disturbance checks.

All probabilities are Fractions; checks return witness reports with exact
residuals (violations are data, not exceptions), and the same equality
families double as H-representation builders for the constraint-defined
polytopes (NS, ND, NSND).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .scenario import (
    Context,
    CoordinateIndex,
    MarginalIndex,
    OutcomeTuple,
    Party,
    Scenario,
    build_index,
    marginal_index,
    subcontexts,
)


class BehaviourError(ValueError):
    """Raised when a vector fails non-negativity or normalization."""


class SignalingError(ValueError):
    """Raised when a marginal is requested under require-ns from a signaling behaviour."""

    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness


@dataclass(frozen=True)
class Behaviour:
    """A full joint behaviour: one Fraction per (context pair, outcome tuple)."""

    scenario: Scenario
    values: tuple[Fraction, ...]

    def __post_init__(self):
        index = build_index(self.scenario)
        if len(self.values) != index.dimension:
            raise BehaviourError(
                f"expected {index.dimension} entries, got {len(self.values)}")
        for pos, v in enumerate(self.values):
            if v < 0:
                raise BehaviourError(f"negative probability at {index.key_of(pos)}: {v}")
        for ctxs, positions in _context_blocks(self.scenario).items():
            total = sum(self.values[p] for p in positions)
            if total != 1:
                raise BehaviourError(f"context block {ctxs} sums to {total}, expected 1")

    @property
    def index(self) -> CoordinateIndex:
        return build_index(self.scenario)

    def value(self, ctxs: tuple[Context, ...], outs: tuple[OutcomeTuple, ...]) -> Fraction:
        return self.values[self.index.position_of((ctxs, outs))]

    @staticmethod
    def from_function(scenario: Scenario, fn: Callable) -> "Behaviour":
        index = build_index(scenario)
        return Behaviour(scenario, tuple(Fraction(fn(*key)) for key in index.keys))


@dataclass(frozen=True)
class MarginalBehaviour:
    """One party's behaviour over its own maximal contexts."""

    party: Party
    values: tuple[Fraction, ...]

    def __post_init__(self):
        index = marginal_index(self.party)
        if len(self.values) != index.dimension:
            raise BehaviourError(
                f"expected {index.dimension} entries, got {len(self.values)}")
        for (ctx, outs), v in zip(index, self.values):
            if v < 0:
                raise BehaviourError(f"negative probability at {(ctx, outs)}: {v}")
        for ctx in self.party.contexts:
            total = sum(self.values[index.position_of(ctx, o)]
                        for o in self.party.context_outcomes(ctx))
            if total != 1:
                raise BehaviourError(f"context {ctx} sums to {total}, expected 1")

    @property
    def index(self) -> MarginalIndex:
        return marginal_index(self.party)

    def value(self, ctx: Context, outs: OutcomeTuple) -> Fraction:
        return self.values[self.index.position_of(ctx, outs)]


@dataclass(frozen=True)
class NSViolation:
    party: str
    context: Context
    outcomes: OutcomeTuple
    partner_a: Context
    partner_b: Context
    lhs: Fraction
    rhs: Fraction

    @property
    def residual(self) -> Fraction:
        return self.lhs - self.rhs


@dataclass(frozen=True)
class NDViolation:
    party: str
    subcontext: Context
    outcomes: OutcomeTuple
    parent_a: Context
    parent_b: Context
    partner_context: Context | None  # other party's context; None in single-party mode
    lhs: Fraction
    rhs: Fraction

    @property
    def residual(self) -> Fraction:
        return self.lhs - self.rhs


def _context_blocks(scenario: Scenario) -> dict:
    """Positions grouped by joint context choice."""
    index = build_index(scenario)
    blocks: dict = {}
    for pos, (ctxs, _) in enumerate(index.keys):
        blocks.setdefault(ctxs, []).append(pos)
    return blocks


def _party_marginal_sum(b: Behaviour, party_idx: int, ctx: Context,
                        restrict: dict, partner_ctx: Context | None) -> Fraction:
    """Sum of entries with this party on `ctx`, its outcomes matching `restrict`
    (measurement -> outcome), the other party on `partner_ctx` (summed out)."""
    total = Fraction(0)
    for pos, (ctxs, outs) in enumerate(b.index.keys):
        if ctxs[party_idx] != ctx:
            continue
        if partner_ctx is not None:
            other_idx = 1 - party_idx
            if ctxs[other_idx] != partner_ctx:
                continue
        own = dict(zip(ctx, outs[party_idx]))
        if all(own[m] == o for m, o in restrict.items()):
            total += b.values[pos]
    return total


def check_ns(b: Behaviour) -> list[NSViolation]:
    """Every violated non-signaling equality, with exact residuals.

    Empty report means the behaviour is non-signaling. Each party's context
    marginals are compared against the first partner context.
    """
    scenario = b.scenario
    if len(scenario.parties) == 1:
        return []
    violations = []
    for party_idx, party in enumerate(scenario.parties):
        partner = scenario.parties[1 - party_idx]
        for ctx in party.contexts:
            for outs in party.context_outcomes(ctx):
                restrict = dict(zip(ctx, outs))
                ref = _party_marginal_sum(b, party_idx, ctx, restrict, partner.contexts[0])
                for pctx in partner.contexts[1:]:
                    val = _party_marginal_sum(b, party_idx, ctx, restrict, pctx)
                    if val != ref:
                        violations.append(NSViolation(
                            party.name, ctx, outs, partner.contexts[0], pctx, ref, val))
    return violations


def check_nd(b: Behaviour, party: Party) -> list[NDViolation]:
    """Non-disturbance report for one party, in the general signaling-tolerant
    form: for every shared subcontext and every partner context separately,
    the subcontext marginal must agree across parent contexts."""
    scenario = b.scenario
    party_idx = scenario.parties.index(party)
    if len(scenario.parties) == 1:
        partner_contexts: Sequence[Context | None] = [None]
    else:
        partner_contexts = scenario.parties[1 - party_idx].contexts
    violations = []
    for sub, parents in subcontexts(party):
        sub_outcomes = [tuple(t) for t in itertools.product(
            *(party.outcome_labels(m) for m in sub))]
        for pctx in partner_contexts:
            for outs in sub_outcomes:
                restrict = dict(zip(sub, outs))
                ref = _party_marginal_sum(b, party_idx, parents[0], restrict, pctx)
                for parent in parents[1:]:
                    val = _party_marginal_sum(b, party_idx, parent, restrict, pctx)
                    if val != ref:
                        violations.append(NDViolation(
                            party.name, sub, outs, parents[0], parent, pctx, ref, val))
    return violations


def classify_nsnd(b: Behaviour) -> dict[str, bool]:
    """Membership flags for the constraint-defined sets."""
    ns = not check_ns(b)
    nd_flags = {p.name: not check_nd(b, p) for p in b.scenario.parties}
    nd = all(nd_flags.values())
    flags = {"NS": ns, "ND": nd, "NSND": ns and nd}
    for name, ok in nd_flags.items():
        flags[f"ND_{name}"] = ok
    return flags


def marginal(b: Behaviour, party: Party, policy="require-ns") -> MarginalBehaviour:
    """Marginal behaviour of one party.

    policy selects the partner context summed over: "require-ns" (default)
    checks all partner contexts agree and raises SignalingError with a witness
    otherwise; "first" uses the partner's first context; an explicit context
    tuple uses that one.
    """
    scenario = b.scenario
    party_idx = scenario.parties.index(party)
    if len(scenario.parties) == 1:
        return MarginalBehaviour(party, b.values)
    partner = scenario.parties[1 - party_idx]
    if policy == "require-ns":
        chosen = partner.contexts[0]
        for ctx in party.contexts:
            for outs in party.context_outcomes(ctx):
                restrict = dict(zip(ctx, outs))
                ref = _party_marginal_sum(b, party_idx, ctx, restrict, chosen)
                for pctx in partner.contexts[1:]:
                    val = _party_marginal_sum(b, party_idx, ctx, restrict, pctx)
                    if val != ref:
                        raise SignalingError(
                            f"marginal of {party.name} on {ctx} depends on partner context: "
                            f"{chosen} gives {ref}, {pctx} gives {val}",
                            witness=(ctx, outs, chosen, pctx, ref - val))
    elif policy == "first":
        chosen = partner.contexts[0]
    elif isinstance(policy, tuple):
        if policy not in partner.contexts:
            raise ValueError(f"{policy} is not a context of {partner.name}")
        chosen = policy
    else:
        raise ValueError(f"unknown marginal policy {policy!r}")
    values = []
    for ctx, outs in marginal_index(party):
        restrict = dict(zip(ctx, outs))
        values.append(_party_marginal_sum(b, party_idx, ctx, restrict, chosen))
    return MarginalBehaviour(party, tuple(values))


def mix(behaviours: Sequence[Behaviour], weights: Sequence[Fraction]) -> Behaviour:
    """Exact convex combination."""
    if len(behaviours) != len(weights) or not behaviours:
        raise ValueError("need equally many behaviours and weights")
    if any(w < 0 for w in weights) or sum(weights) != 1:
        raise ValueError("weights must be a probability distribution")
    scenario = behaviours[0].scenario
    dim = build_index(scenario).dimension
    values = [Fraction(0)] * dim
    for b, w in zip(behaviours, weights):
        if b.scenario != scenario:
            raise ValueError("behaviours live in different scenarios")
        for i, v in enumerate(b.values):
            values[i] += w * v
    return Behaviour(scenario, tuple(values))


# ---------------------------------------------------------------------------
# Linear constraint builders (H-representation rows over the full index).
# Each row is (coefficients, rhs) with coefficients aligned to build_index.

Row = tuple[tuple[Fraction, ...], Fraction]


def normalization_equalities(scenario: Scenario) -> list[Row]:
    dim = build_index(scenario).dimension
    rows = []
    for ctxs, positions in _context_blocks(scenario).items():
        coeffs = [Fraction(0)] * dim
        for p in positions:
            coeffs[p] = Fraction(1)
        rows.append((tuple(coeffs), Fraction(1)))
    return rows


def positivity_inequalities(scenario: Scenario) -> list[Row]:
    """Rows meaning coeff . x <= rhs, here -p_i <= 0."""
    dim = build_index(scenario).dimension
    rows = []
    for i in range(dim):
        coeffs = [Fraction(0)] * dim
        coeffs[i] = Fraction(-1)
        rows.append((tuple(coeffs), Fraction(0)))
    return rows


def _marginal_row(scenario: Scenario, party_idx: int, ctx: Context,
                  restrict: dict, partner_ctx: Context | None) -> list[Fraction]:
    index = build_index(scenario)
    coeffs = [Fraction(0)] * index.dimension
    for pos, (ctxs, outs) in enumerate(index.keys):
        if ctxs[party_idx] != ctx:
            continue
        if partner_ctx is not None and ctxs[1 - party_idx] != partner_ctx:
            continue
        own = dict(zip(ctx, outs[party_idx]))
        if all(own[m] == o for m, o in restrict.items()):
            coeffs[pos] = Fraction(1)
    return coeffs


def ns_equalities(scenario: Scenario) -> list[Row]:
    """Rows asserting each party's context marginals do not depend on the
    partner's context choice."""
    if len(scenario.parties) == 1:
        return []
    rows = []
    for party_idx, party in enumerate(scenario.parties):
        partner = scenario.parties[1 - party_idx]
        for ctx in party.contexts:
            for outs in party.context_outcomes(ctx):
                restrict = dict(zip(ctx, outs))
                ref = _marginal_row(scenario, party_idx, ctx, restrict, partner.contexts[0])
                for pctx in partner.contexts[1:]:
                    other = _marginal_row(scenario, party_idx, ctx, restrict, pctx)
                    rows.append((tuple(a - b for a, b in zip(ref, other)), Fraction(0)))
    return rows


def nd_equalities(scenario: Scenario, party: Party, assume_ns: bool = False) -> list[Row]:
    """Non-disturbance equality rows for one party.

    With assume_ns=False this is the general form (one family per partner
    context); with assume_ns=True a single partner context is used, which is
    equivalent inside NS and keeps H-representations smaller.
    """
    party_idx = scenario.parties.index(party)
    if len(scenario.parties) == 1:
        partner_contexts: Sequence[Context | None] = [None]
    else:
        partner_contexts = scenario.parties[1 - party_idx].contexts
        if assume_ns:
            partner_contexts = partner_contexts[:1]
    rows = []
    for sub, parents in subcontexts(party):
        sub_outcomes = [tuple(t) for t in itertools.product(
            *(party.outcome_labels(m) for m in sub))]
        for pctx in partner_contexts:
            for outs in sub_outcomes:
                restrict = dict(zip(sub, outs))
                ref = _marginal_row(scenario, party_idx, parents[0], restrict, pctx)
                for parent in parents[1:]:
                    other = _marginal_row(scenario, party_idx, parent, restrict, pctx)
                    rows.append((tuple(a - b for a, b in zip(ref, other)), Fraction(0)))
    return rows


# Same builders on a single party's marginal coordinate system.

def party_normalization_equalities(party: Party) -> list[Row]:
    index = marginal_index(party)
    rows = []
    for ctx in party.contexts:
        coeffs = [Fraction(0)] * index.dimension
        for outs in party.context_outcomes(ctx):
            coeffs[index.position_of(ctx, outs)] = Fraction(1)
        rows.append((tuple(coeffs), Fraction(1)))
    return rows


def party_positivity_inequalities(party: Party) -> list[Row]:
    index = marginal_index(party)
    rows = []
    for i in range(index.dimension):
        coeffs = [Fraction(0)] * index.dimension
        coeffs[i] = Fraction(-1)
        rows.append((tuple(coeffs), Fraction(0)))
    return rows


def party_nd_equalities(party: Party) -> list[Row]:
    index = marginal_index(party)
    rows = []
    for sub, parents in subcontexts(party):
        sub_outcomes = [tuple(t) for t in itertools.product(
            *(party.outcome_labels(m) for m in sub))]
        for outs in sub_outcomes:
            restrict = dict(zip(sub, outs))

            def row_for(parent: Context) -> list[Fraction]:
                coeffs = [Fraction(0)] * index.dimension
                for pouts in party.context_outcomes(parent):
                    own = dict(zip(parent, pouts))
                    if all(own[m] == o for m, o in restrict.items()):
                        coeffs[index.position_of(parent, pouts)] = Fraction(1)
                return coeffs

            ref = row_for(parents[0])
            for parent in parents[1:]:
                other = row_for(parent)
                rows.append((tuple(a - b for a, b in zip(ref, other)), Fraction(0)))
    return rows


def marginal_check_nd(mb: MarginalBehaviour) -> list[NDViolation]:
    """Single-party non-disturbance check on a marginal behaviour."""
    party = mb.party
    violations = []
    for sub, parents in subcontexts(party):
        sub_outcomes = [tuple(t) for t in itertools.product(
            *(party.outcome_labels(m) for m in sub))]
        for outs in sub_outcomes:
            restrict = dict(zip(sub, outs))

            def msum(parent: Context) -> Fraction:
                total = Fraction(0)
                for pouts in party.context_outcomes(parent):
                    own = dict(zip(parent, pouts))
                    if all(own[m] == o for m, o in restrict.items()):
                        total += mb.value(parent, pouts)
                return total

            ref = msum(parents[0])
            for parent in parents[1:]:
                val = msum(parent)
                if val != ref:
                    violations.append(NDViolation(
                        party.name, sub, outs, parents[0], parent, None, ref, val))
    return violations
