"""Exact polytope engine: H-representation <-> V-representation.

The core is an incremental double description method on integer vectors:
every ray is kept in primitive integer form after each combination step,
which is what keeps rational bit growth under control. Facet enumeration
is vertex enumeration of the polar dual after factoring out the affine
hull, so both conversions share one cone routine.

All polytopes here are bounded (probability regions), which makes the
homogenized cones pointed; a ray surviving at height zero is therefore
reported as an unbounded-input error.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import lp
from ._linalg import dot, nullspace, primitive_int_vector, rref, sign_normalized

IntRow = tuple[tuple[int, ...], int]   # (coefficients, rhs)


class PolytopeError(ValueError):
    pass


class EmptyPolytopeError(PolytopeError):
    def __init__(self, msg, certificate=None):
        super().__init__(msg)
        self.certificate = certificate


class UnboundedError(PolytopeError):
    pass


class RayLimitError(PolytopeError):
    def __init__(self, msg, processed, total, rays):
        super().__init__(msg)
        self.processed = processed
        self.total = total
        self.rays = rays


def canonical_equality(coeffs: Sequence[Fraction], rhs: Fraction) -> IntRow:
    vec = primitive_int_vector(list(coeffs) + [Fraction(rhs)])
    vec = sign_normalized(vec)
    return vec[:-1], vec[-1]


def canonical_inequality(coeffs: Sequence[Fraction], rhs: Fraction) -> IntRow:
    """Primitive integer form; only positive scaling, so orientation is kept."""
    vec = primitive_int_vector(list(coeffs) + [Fraction(rhs)])
    # primitive_int_vector never flips sign (its scale factor is positive)
    return vec[:-1], vec[-1]


@dataclass(frozen=True)
class HRep:
    """coeff . x = rhs for equalities, coeff . x <= rhs for inequalities."""

    dimension: int
    equalities: tuple[IntRow, ...]
    inequalities: tuple[IntRow, ...]

    @staticmethod
    def build(dimension, equalities=(), inequalities=()) -> "HRep":
        eqs = tuple(sorted(_dedup(canonical_equality(c, r) for c, r in equalities)))
        ineqs = tuple(sorted(_dedup(canonical_inequality(c, r) for c, r in inequalities)))
        for c, _ in itertools.chain(eqs, ineqs):
            if len(c) != dimension:
                raise PolytopeError("row width does not match dimension")
        return HRep(dimension, eqs, ineqs)

    def contains(self, point: Sequence[Fraction]) -> bool:
        return (all(dot(c, point) == r for c, r in self.equalities)
                and all(dot(c, point) <= r for c, r in self.inequalities))


@dataclass(frozen=True)
class VRep:
    dimension: int
    vertices: tuple[tuple[Fraction, ...], ...]

    @staticmethod
    def build(dimension, vertices) -> "VRep":
        seen = []
        out = []
        for v in vertices:
            t = tuple(Fraction(x) for x in v)
            if len(t) != dimension:
                raise PolytopeError("vertex width does not match dimension")
            if t not in seen:
                seen.append(t)
                out.append(t)
        return VRep(dimension, tuple(sorted(out)))


@dataclass(frozen=True)
class FacetInequality:
    """One facet in primitive integer form: coefficients . x <= bound."""

    coefficients: tuple[int, ...]
    bound: int
    provenance: str = field(default="", compare=False)

    def evaluate(self, values: Sequence[Fraction]) -> Fraction:
        return dot(self.coefficients, values)

    def satisfied_by(self, values: Sequence[Fraction]) -> bool:
        return self.evaluate(values) <= self.bound

    def tight_on(self, values: Sequence[Fraction]) -> bool:
        return self.evaluate(values) == self.bound


def _dedup(rows) -> tuple:
    seen = set()
    out = []
    for row in rows:
        if row not in seen:
            seen.add(row)
            out.append(row)
    return tuple(out)


# ---------------------------------------------------------------------------
# Double description core: extreme rays of {z : r . z >= 0 for every row r}.


def _initial_basis(rows: list[tuple[int, ...]], dim: int) -> list[int]:
    """Indices of rows forming a rank-dim subset, in input order."""
    chosen: list[int] = []
    basis_rows: list = []
    for i, row in enumerate(rows):
        trial = basis_rows + [list(map(Fraction, row))]
        if len(rref(trial)[0]) > len(basis_rows):
            chosen.append(i)
            basis_rows = trial
            if len(chosen) == dim:
                return chosen
    raise PolytopeError(
        "cone is not pointed (constraint normals do not span the space); "
        "the input region is unbounded or contains a line")


def _invert_rows(rows: list[tuple[int, ...]]) -> list[tuple[int, ...]]:
    """Columns of the inverse of a square integer matrix, primitive-scaled."""
    n = len(rows)
    aug = [list(map(Fraction, r)) + [Fraction(1 if i == j else 0) for j in range(n)]
           for i, r in enumerate(rows)]
    red, pivots = rref(aug)
    if pivots != list(range(n)):
        raise PolytopeError("initial basis is singular")
    cols = []
    for j in range(n):
        cols.append(primitive_int_vector([red[i][n + j] for i in range(n)]))
    return cols


def _primitive_ints(vec: Sequence[int]) -> tuple[tuple[int, ...], int]:
    """Divide an integer vector by the gcd of its entries; returns (vector, gcd)."""
    from math import gcd
    g = 0
    for x in vec:
        g = gcd(g, x)
        if g == 1:
            return tuple(vec), 1
    if g == 0:
        return tuple(vec), 1
    return tuple(x // g for x in vec), g


def dd_extreme_rays(rows: Sequence[tuple[int, ...]], ray_limit: int = 200_000
                    ) -> list[tuple[int, ...]]:
    """Extreme rays of the pointed cone {z : r . z >= 0 for all r in rows}.

    Constraints are inserted dynamically, least-violated-first with a
    lexicographic tie-break, so results and intermediate sizes are
    deterministic. Zero sets are tracked as bitmasks over processed rows;
    because new rays only combine adjacent pairs with positive weights, the
    mask of a new ray is exactly (mask+ & mask-) | bit(new row).

    Adjacency of a candidate pair is decided combinatorially (no third ray's
    zero set contains the pair's common zero set), with an exact popcount
    pre-filter: the common zero set must have rank conedim - 2, so at least
    that many members. The cone dimension is bounded from below on the fly
    through the rows that are tight on every current ray.
    """
    rows = [tuple(r) for r in rows]
    dim = len(rows[0]) if rows else 0
    basis_idx = _initial_basis(rows, dim)
    rays = _invert_rows([rows[i] for i in basis_idx])

    processed = set(basis_idx)
    masks = []
    for r in rays:
        m = 0
        for i in basis_idx:
            if dot(rows[i], r) == 0:
                m |= 1 << i
        masks.append(m)

    remaining = [i for i in range(len(rows)) if i not in processed]
    # dots[i][k] = rows[i] . rays[k], maintained incrementally
    dots = {i: [dot(rows[i], r) for r in rays] for i in remaining}

    while remaining:
        best_i = None
        best_count = None
        for i in remaining:
            count = sum(1 for d in dots[i] if d < 0)
            if best_count is None or count < best_count or (
                    count == best_count and rows[i] < rows[best_i]):
                best_i, best_count = i, count
            if count == 0:
                break
        i = best_i
        remaining.remove(i)
        drow = dots.pop(i)

        if best_count == 0:
            for k, d in enumerate(drow):
                if d == 0:
                    masks[k] |= 1 << i
            processed.add(i)
            continue

        pos = [k for k, d in enumerate(drow) if d > 0]
        zero = [k for k, d in enumerate(drow) if d == 0]
        neg = [k for k, d in enumerate(drow) if d < 0]

        # rows tight on every current ray only lower the cone dimension;
        # using the popcount bound keeps the pre-filter exact
        implicit = ~0
        for m in masks:
            implicit &= m
        min_common = dim - implicit.bit_count() - 2

        new_rays = []
        new_masks = []
        new_combos = []   # (p, n, w_neg, w_pos, gcd) for incremental dot updates
        for p in pos:
            mp = masks[p]
            for n in neg:
                common = mp & masks[n]
                if common.bit_count() < min_common:
                    continue
                adjacent = True
                for k, mk in enumerate(masks):
                    if k != p and k != n and common & ~mk == 0:
                        adjacent = False
                        break
                if not adjacent:
                    continue
                wp, wn = drow[p], -drow[n]   # both positive
                combo = [wn * a + wp * b for a, b in zip(rays[p], rays[n])]
                scaled, g = _primitive_ints(combo)
                new_rays.append(scaled)
                new_masks.append(common | (1 << i))
                new_combos.append((p, n, wn, wp, g))

        keep = pos + zero
        rays_next = [rays[k] for k in keep] + new_rays
        masks_next = [masks[k] for k in keep]
        for idx, k in enumerate(keep):
            if drow[k] == 0:
                masks_next[idx] |= 1 << i
        masks_next += new_masks

        for j in remaining:
            dj = dots[j]
            dots[j] = [dj[k] for k in keep] + [
                (wa * dj[p] + wb * dj[n]) // g for (p, n, wa, wb, g) in new_combos]

        rays, masks = rays_next, masks_next
        processed.add(i)
        if len(rays) > ray_limit:
            raise RayLimitError(
                f"double description exceeded {ray_limit} intermediate rays",
                processed=len(processed), total=len(rows), rays=len(rays))

    return rays


# ---------------------------------------------------------------------------
# H -> V


def facets_to_vertices(h: HRep, ray_limit: int = 200_000) -> VRep:
    """Exact vertex enumeration of a bounded H-representation.

    Affine-hull equalities are eliminated first (the cone runs in the reduced
    coordinates), then the reduced inequalities are homogenized and handed to
    the double description core. Emptiness is detected by the enumeration
    itself and certified through the LP module only on that error path.
    """
    eq_rows = [list(map(Fraction, c)) + [Fraction(r)] for c, r in h.equalities]
    red, pivots = rref(eq_rows) if eq_rows else ([], [])
    for row in red:
        if all(x == 0 for x in row[:-1]) and row[-1] != 0:
            raise EmptyPolytopeError("equalities are inconsistent")
    free = [j for j in range(h.dimension) if j not in pivots]
    k = len(free)

    reduced_ineqs = []
    for coeffs, rhs in h.inequalities:
        c = list(map(Fraction, coeffs))
        r = Fraction(rhs)
        for idx, pc in enumerate(pivots):
            if c[pc] != 0:
                f = c[pc]
                r -= f * red[idx][h.dimension]
                for j in free:
                    c[j] -= f * red[idx][j]
                c[pc] = Fraction(0)
        rc = [c[j] for j in free]
        if all(x == 0 for x in rc):
            if r < 0:
                raise EmptyPolytopeError("inequalities are contradictory")
            continue
        reduced_ineqs.append((rc, r))

    if k == 0:
        x = _lift_point(h.dimension, pivots, red, free, [])
        return VRep(h.dimension, (tuple(x),))

    # homogenize over (t, y): c.y <= r becomes (r, -c).(t, y) >= 0, plus t >= 0
    cone_rows = [primitive_int_vector([r] + [-x for x in c]) for c, r in reduced_ineqs]
    cone_rows.append(tuple([1] + [0] * k))
    rays = dd_extreme_rays(_dedup(cone_rows), ray_limit)

    vertices = []
    recession = False
    for ray in rays:
        t = ray[0]
        if t == 0:
            recession = True
            continue
        y = [Fraction(c, t) for c in ray[1:]]
        vertices.append(tuple(_lift_point(h.dimension, pivots, red, free, y)))
    if recession and vertices:
        raise UnboundedError("input region is unbounded (recession ray found)")
    if not vertices:
        _certify_nonempty(h)  # raises with a Farkas certificate when empty
        raise UnboundedError("input region is unbounded (no vertex at height > 0)")
    return VRep.build(h.dimension, vertices)


def _lift_point(dim, pivots, red, free, y):
    x = [Fraction(0)] * dim
    for j, yj in zip(free, y):
        x[j] = yj
    for i, pc in enumerate(pivots):
        x[pc] = red[i][dim] - sum(red[i][j] * x[j] for j in free)
    return x


def _certify_nonempty(h: HRep) -> None:
    rows = tuple(
        [(tuple(map(Fraction, c)), "=", Fraction(r)) for c, r in h.equalities]
        + [(tuple(map(Fraction, c)), "<=", Fraction(r)) for c, r in h.inequalities])
    objective = tuple([Fraction(0)] * h.dimension)
    res = lp.solve(lp.LPProblem(objective, rows, "min",
                                nonneg=tuple([False] * h.dimension)))
    if res.status == "infeasible":
        raise EmptyPolytopeError("H-representation is infeasible",
                                 certificate=res.certificate)


# ---------------------------------------------------------------------------
# V -> H


def vertices_to_facets(v: VRep, ray_limit: int = 200_000,
                       provenance: str = "") -> HRep:
    """Irredundant facet list plus affine-hull equalities of a vertex set.

    Works in the affine hull: facets of the polytope are the vertices of the
    polar dual taken around the centroid.
    """
    if not v.vertices:
        raise PolytopeError("vertex list is empty")
    verts = [tuple(map(Fraction, p)) for p in v.vertices]
    dim = v.dimension
    v0 = verts[0]

    diff_rows = [[x - y for x, y in zip(p, v0)] for p in verts[1:]]
    normals = nullspace(diff_rows) if diff_rows else [
        tuple(Fraction(1 if i == j else 0) for j in range(dim)) for i in range(dim)]
    equalities = [canonical_equality(nrm, dot(nrm, v0)) for nrm in normals]

    eq_rows = [list(map(Fraction, c)) + [Fraction(r)] for c, r in equalities]
    red, pivots = rref(eq_rows) if eq_rows else ([], [])
    free = [j for j in range(dim) if j not in pivots]
    k = len(free)
    if k == 0:
        return HRep.build(dim, equalities, [])

    reduced = [[p[j] for j in free] for p in verts]
    centroid = [sum(p[j] for p in reduced) / len(reduced) for j in range(k)]
    shifted = [[a - b for a, b in zip(p, centroid)] for p in reduced]

    polar = HRep.build(k, [], [(tuple(s), Fraction(1)) for s in shifted])
    polar_vertices = facets_to_vertices(polar, ray_limit)

    facets = []
    for u in polar_vertices.vertices:
        if all(x == 0 for x in u):
            continue
        coeffs = [Fraction(0)] * dim
        for j, uf in zip(free, u):
            coeffs[j] = uf
        rhs = Fraction(1) + dot(u, centroid)
        facets.append((coeffs, rhs))
    return HRep.build(dim, equalities, facets)


def intersect(h1: HRep, h2: HRep) -> HRep:
    """Concatenate two H-representations of the same ambient space."""
    if h1.dimension != h2.dimension:
        raise PolytopeError("dimension mismatch")
    return HRep.build(h1.dimension,
                      list(h1.equalities) + list(h2.equalities),
                      list(h1.inequalities) + list(h2.inequalities))


def canonical_form_modulo(coeffs: Sequence[Fraction], bound: Fraction,
                          equalities: Sequence[IntRow]) -> IntRow:
    """Canonical representative of an inequality modulo an equality system.

    Adding multiples of valid equalities does not change an inequality on the
    polytope; eliminating the pivot coordinates and scaling positively makes
    comparison of facets from different pipelines meaningful.
    """
    eq_rows = [list(map(Fraction, c)) + [Fraction(r)] for c, r in equalities]
    red, pivots = rref(eq_rows) if eq_rows else ([], [])
    dim = len(coeffs)
    c = list(map(Fraction, coeffs))
    b = Fraction(bound)
    for i, pc in enumerate(pivots):
        if pc < dim and c[pc] != 0:
            f = c[pc]
            b -= f * red[i][dim]
            for j in range(dim):
                c[j] -= f * red[i][j]
            c[pc] = Fraction(0)
    return canonical_inequality(c, b)


def hrep_contains_functional(h: HRep, coeffs, bound) -> bool:
    """Is the given inequality one of h's rows, up to positive scaling and
    the affine hull of h?"""
    target = canonical_form_modulo(coeffs, bound, h.equalities)
    for c, r in h.inequalities:
        if canonical_form_modulo(c, r, h.equalities) == target:
            return True
    return False
