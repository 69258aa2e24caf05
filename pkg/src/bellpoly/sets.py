"""Membership classification across the whole zoo of correlation sets.

Constraint-defined sets (NS, ND, NSND) are exact equality checks; hull-defined
sets (the nine L_[i,j], per-party non-contextuality) are LP memberships with
certificates; L_ND is decided as L_[g,g] together with the observational
non-disturbance equalities, which defines the same set without a vertex
enumeration per query.

Every report is checked against the inclusion lattice before it is returned:
a verdict pattern that contradicts a known inclusion raises instead of
propagating silently.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from . import lp, polytope
from .behaviour import (
    Behaviour,
    check_nd,
    check_ns,
    marginal,
    nd_equalities,
    normalization_equalities,
    ns_equalities,
    positivity_inequalities,
)
from .scenario import Party, Scenario, build_index, marginal_index
from .vertices import enumerate_class, enumerate_nc_vertices, joint_vertices, vertex_matrix

_CLASS_ORDER = {"nc": 0, "nd": 1, "g": 2}


class HierarchyError(RuntimeError):
    """Computed verdicts contradict a known set inclusion."""


def canonical_label(label: str) -> str:
    """Normalize a set label; aliases L_nc, L_nd, L_G name the diagonal
    local sets."""
    label = label.strip()
    aliases = {"L_nc": "L[nc,nc]", "L_nd": "L[nd,nd]", "L_G": "L[g,g]", "L_g": "L[g,g]"}
    if label in aliases:
        return aliases[label]
    return label


def _local_classes(label: str) -> tuple[str, str] | None:
    if label.startswith("L[") and label.endswith("]"):
        inner = label[2:-1]
        parts = [p.strip().lower() for p in inner.split(",")]
        if len(parts) == 2 and all(p in _CLASS_ORDER for p in parts):
            return parts[0], parts[1]
    return None


def known_labels(scenario: Scenario) -> list[str]:
    labels = ["NS", "ND", "NSND", "NC"]
    for p in scenario.parties:
        labels += [f"ND_{p.name}", f"NC_{p.name}"]
    if len(scenario.parties) == 2:
        labels.append("L_ND")
        for i in ("nc", "nd", "g"):
            for j in ("nc", "nd", "g"):
                labels.append(f"L[{i},{j}]")
    return labels


@dataclass
class Verdict:
    label: str
    member: bool
    certificate: object = field(default=None)   # Decomposition/Separation or violation list

    def __bool__(self):
        return self.member


@dataclass
class MembershipReport:
    behaviour: Behaviour
    verdicts: dict[str, Verdict]

    def member(self, label: str) -> bool:
        return self.verdicts[canonical_label(label)].member

    def certificate(self, label: str):
        return self.verdicts[canonical_label(label)].certificate

    def intersection(self, labels: Sequence[str]) -> bool:
        """Composite sets (L_nd with NC, one-sided ND variants, ...) are
        conjunctions of atomic verdicts."""
        return all(self.member(lb) for lb in labels)


def classify(b: Behaviour, labels: Sequence[str] | None = None,
             ray_limit: int = 200_000) -> MembershipReport:
    scenario = b.scenario
    want = [canonical_label(lb) for lb in (labels or known_labels(scenario))]
    for lb in want:
        if lb not in known_labels(scenario) and _local_classes(lb) is None:
            raise ValueError(f"unknown set label {lb!r}")

    verdicts: dict[str, Verdict] = {}

    def get(label: str) -> Verdict:
        if label in verdicts:
            return verdicts[label]
        if label == "NSND":
            v = Verdict(label, get("NS").member and get("ND").member)
        elif label == "ND":
            parts = [get(f"ND_{p.name}") for p in scenario.parties]
            v = Verdict(label, all(x.member for x in parts))
        elif label == "NC":
            parts = [get(f"NC_{p.name}") for p in scenario.parties]
            v = Verdict(label, all(x.member for x in parts))
        elif label == "L_ND":
            lg = get("L[g,g]")
            ndv = [get(f"ND_{p.name}") for p in scenario.parties]
            v = Verdict(label, lg.member and all(x.member for x in ndv),
                        certificate=lg.certificate)
        else:
            v = _decide(b, label, ray_limit)
        verdicts[label] = v
        return v

    for lb in want:
        get(lb)

    report = MembershipReport(b, verdicts)
    _audit_inclusions(report)
    return report


def _decide(b: Behaviour, label: str, ray_limit: int) -> Verdict:
    scenario = b.scenario
    if label == "NS":
        viol = check_ns(b)
        return Verdict(label, not viol, certificate=viol or None)
    if label.startswith("ND_"):
        party = scenario.party(label[3:])
        viol = check_nd(b, party)
        return Verdict(label, not viol, certificate=viol or None)
    if label.startswith("NC_"):
        party = scenario.party(label[3:])
        cert = marginal_nc(b, party)
        return Verdict(label, isinstance(cert, lp.Decomposition), certificate=cert)
    classes = _local_classes(label)
    if classes is not None:
        verts = vertex_matrix(joint_vertices(scenario, classes, ray_limit))
        cert = lp.membership(b.values, verts)
        return Verdict(label, isinstance(cert, lp.Decomposition), certificate=cert)
    raise ValueError(f"unknown set label {label!r}")


def marginal_nc(b: Behaviour, party: Party) -> lp.Certificate:
    """Membership of the party's marginal in the hull of its nc vertices.

    Requires a non-signaling behaviour (otherwise the marginal itself is
    undefined and a SignalingError propagates)."""
    mb = marginal(b, party, policy="require-ns")
    verts = [rf.values for rf in enumerate_nc_vertices(party)]
    return lp.membership(mb.values, verts)


# Inclusion lattice: (inner, outer) pairs checked on every report.

def _inclusion_edges(scenario: Scenario) -> list[tuple[str, str]]:
    edges = []
    order = ("nc", "nd", "g")
    for i, j in itertools.product(order, repeat=2):
        for i2, j2 in itertools.product(order, repeat=2):
            if (i, j) != (i2, j2) and _CLASS_ORDER[i] <= _CLASS_ORDER[i2] \
                    and _CLASS_ORDER[j] <= _CLASS_ORDER[j2]:
                edges.append((f"L[{i},{j}]", f"L[{i2},{j2}]"))
        edges.append((f"L[{i},{j}]", "NS"))
    edges += [("NSND", "NS"), ("NSND", "ND"), ("NC", "ND"), ("L[nd,nd]", "L_ND"),
              ("L[nc,nc]", "L_ND"), ("L[nc,nc]", "NC"), ("L_ND", "L[g,g]"),
              ("L_ND", "NSND"), ("L_ND", "NS"), ("L_ND", "ND")]
    for idx, p in enumerate(scenario.parties):
        edges.append(("NC", f"NC_{p.name}"))
        edges.append(("ND", f"ND_{p.name}"))
        edges.append((f"NC_{p.name}", f"ND_{p.name}"))
        if len(scenario.parties) == 2:
            own = ("nc", "nd")
            for cls in own:
                other = "nc", "nd", "g"
                for oth in other:
                    pair = (cls, oth) if idx == 0 else (oth, cls)
                    if cls == "nc":
                        edges.append((f"L[{pair[0]},{pair[1]}]", f"NC_{p.name}"))
                    edges.append((f"L[{pair[0]},{pair[1]}]", f"ND_{p.name}"))
    return edges


def _audit_inclusions(report: MembershipReport) -> None:
    have = report.verdicts
    for inner, outer in _inclusion_edges(report.behaviour.scenario):
        if inner in have and outer in have:
            if have[inner].member and not have[outer].member:
                raise HierarchyError(
                    f"verdicts violate {inner} within {outer}: "
                    f"{inner}=yes but {outer}=no")


@dataclass
class ProperInclusion:
    inner: str
    outer: str
    witness_index: int            # position in the audited sample list
    separation: lp.Separation | None


@dataclass
class HierarchyAudit:
    reports: list[MembershipReport]
    proper: list[ProperInclusion]
    equalities_witnessed: list[tuple[str, str]]


def hierarchy_audit(scenario: Scenario, samples: Sequence[Behaviour],
                    labels: Sequence[str] | None = None) -> HierarchyAudit:
    """Classify every sample, verify the inclusion chains, and record
    properness witnesses: a sample inside the outer set carrying a
    separation from the inner set."""
    labels = [canonical_label(lb) for lb in
              (labels or ["L[nc,nc]", "L[nd,nd]", "L[g,g]", "L_ND", "NSND", "NC", "NS", "ND"])]
    reports = [classify(b, labels) for b in samples]
    proper = []
    seen_equal = set()
    edges = [(i, o) for i, o in _inclusion_edges(scenario) if i in labels and o in labels]
    for idx, rep in enumerate(reports):
        for inner, outer in edges:
            vi, vo = rep.verdicts[inner], rep.verdicts[outer]
            if vo.member and not vi.member:
                sep = vi.certificate if isinstance(vi.certificate, lp.Separation) else None
                proper.append(ProperInclusion(inner, outer, idx, sep))
            elif vo.member and vi.member:
                seen_equal.add((inner, outer))
    witnessed = {(p.inner, p.outer) for p in proper}
    equalities = sorted(e for e in seen_equal if e not in witnessed)
    return HierarchyAudit(reports, proper, equalities)


# ---------------------------------------------------------------------------
# Canonical H-representations of the named sets (facet pipelines).


def hrep_nsnd(scenario: Scenario) -> polytope.HRep:
    dim = build_index(scenario).dimension
    eqs = normalization_equalities(scenario) + ns_equalities(scenario)
    for p in scenario.parties:
        eqs += nd_equalities(scenario, p)
    return polytope.HRep.build(dim, eqs, positivity_inequalities(scenario))


def hrep_ns(scenario: Scenario) -> polytope.HRep:
    dim = build_index(scenario).dimension
    eqs = normalization_equalities(scenario) + ns_equalities(scenario)
    return polytope.HRep.build(dim, eqs, positivity_inequalities(scenario))


def hrep_local(scenario: Scenario, kinds: Sequence[str],
               ray_limit: int = 200_000) -> polytope.HRep:
    """Facets of the local polytope L_[i,j], from its joint vertices."""
    return _hrep_local_cached(scenario, tuple(kinds), ray_limit)


@lru_cache(maxsize=None)
def _hrep_local_cached(scenario, kinds, ray_limit):
    verts = vertex_matrix(joint_vertices(scenario, kinds, ray_limit))
    dim = build_index(scenario).dimension
    return polytope.vertices_to_facets(polytope.VRep.build(dim, verts), ray_limit)


def hrep_l_nd(scenario: Scenario, ray_limit: int = 200_000) -> polytope.HRep:
    """H-representation of L_ND: the facets of L_[g,g] together with both
    parties' observational non-disturbance equalities."""
    h_lg = hrep_local(scenario, ["g"] * len(scenario.parties), ray_limit)
    dim = build_index(scenario).dimension
    eqs = []
    for p in scenario.parties:
        eqs += nd_equalities(scenario, p)
    return polytope.intersect(h_lg, polytope.HRep.build(dim, eqs, []))


def lift_marginal_functional(scenario: Scenario, party: Party,
                             coeffs: Sequence[Fraction], bound: Fraction
                             ) -> tuple[tuple[Fraction, ...], Fraction]:
    """Express a functional on one party's marginal coordinates as a
    functional on the full behaviour, summing the other party out through
    its first context (equivalent to any other inside NS)."""
    party_idx = scenario.parties.index(party)
    index = build_index(scenario)
    mindex = marginal_index(party)
    out = [Fraction(0)] * index.dimension
    if len(scenario.parties) == 1:
        for pos, (ctxs, outs) in enumerate(index.keys):
            out[pos] = Fraction(coeffs[mindex.position_of(ctxs[0], outs[0])])
        return tuple(out), Fraction(bound)
    partner_first = scenario.parties[1 - party_idx].contexts[0]
    for pos, (ctxs, outs) in enumerate(index.keys):
        if ctxs[1 - party_idx] != partner_first:
            continue
        out[pos] = Fraction(coeffs[mindex.position_of(ctxs[party_idx], outs[party_idx])])
    return tuple(out), Fraction(bound)


def hrep_marginal_nc(scenario: Scenario, party: Party,
                     ray_limit: int = 200_000) -> polytope.HRep:
    """Facets of the party's non-contextual marginal polytope, lifted to the
    full coordinates. Only meaningful in conjunction with the NS equalities."""
    verts = [rf.values for rf in enumerate_nc_vertices(party)]
    mh = polytope.vertices_to_facets(
        polytope.VRep.build(marginal_index(party).dimension, verts), ray_limit)
    dim = build_index(scenario).dimension
    eqs = [lift_marginal_functional(scenario, party, c, r) for c, r in mh.equalities]
    ineqs = [lift_marginal_functional(scenario, party, c, r) for c, r in mh.inequalities]
    return polytope.HRep.build(dim, eqs, ineqs)


def hrep_set(scenario: Scenario, label: str, ray_limit: int = 200_000) -> polytope.HRep:
    """Canonical H-representation for a named set or an intersection joined
    with '&' (for example "L_nd&NC")."""
    if "&" in label:
        parts = [p.strip() for p in label.split("&")]
        h = hrep_set(scenario, parts[0], ray_limit)
        for part in parts[1:]:
            h = polytope.intersect(h, hrep_set(scenario, part, ray_limit))
        return h
    label = canonical_label(label)
    if label == "NS":
        return hrep_ns(scenario)
    if label == "NSND" or label == "ND":
        return hrep_nsnd(scenario)
    if label == "L_ND":
        return hrep_l_nd(scenario, ray_limit)
    if label == "NC":
        h = hrep_ns(scenario)
        for p in scenario.parties:
            h = polytope.intersect(h, hrep_marginal_nc(scenario, p, ray_limit))
        return h
    if label.startswith("NC_"):
        party = scenario.party(label[3:])
        return polytope.intersect(hrep_ns(scenario),
                                  hrep_marginal_nc(scenario, party, ray_limit))
    classes = _local_classes(label)
    if classes is not None:
        return hrep_local(scenario, classes, ray_limit)
    raise ValueError(f"no H-representation builder for label {label!r}")
