"""Exact rational linear programming.

A dense two-phase tableau simplex over Fractions with Bland's rule, so
termination is guaranteed and every answer is exact. On top of it sit the
two certificate-producing operations everything else relies on:

 - membership: is a point in the convex hull of a vertex list? Returns a
   Decomposition (convex weights reproducing the point exactly) or a
   Separation (a linear functional valid on every vertex and violated by
   the point, i.e. a Bell-type inequality witness).
 - maximize_over_set: exact maximum of a linear functional over a bounded
   H-representation, with an attaining point.

Certificates are re-verified exactly before being returned.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from ._linalg import dot, primitive_int_vector, rref


class LPError(ValueError):
    pass


@dataclass(frozen=True)
class LPProblem:
    """min/max objective . x subject to rows (coeffs, relation, rhs).

    relation is one of "<=", "=", ">=". nonneg[j] marks x_j >= 0; free
    variables are split internally.
    """

    objective: tuple[Fraction, ...]
    rows: tuple[tuple[tuple[Fraction, ...], str, Fraction], ...]
    sense: str = "min"
    nonneg: tuple[bool, ...] | None = None

    def __post_init__(self):
        n = len(self.objective)
        for coeffs, rel, _ in self.rows:
            if len(coeffs) != n:
                raise LPError("constraint row has wrong width")
            if rel not in ("<=", "=", ">="):
                raise LPError(f"unknown relation {rel!r}")
        if self.sense not in ("min", "max"):
            raise LPError(f"unknown sense {self.sense!r}")
        if self.nonneg is not None and len(self.nonneg) != n:
            raise LPError("nonneg flags have wrong width")


@dataclass(frozen=True)
class LPResult:
    status: str                      # "optimal" | "infeasible" | "unbounded"
    value: Fraction | None
    primal: tuple[Fraction, ...] | None
    dual: tuple[Fraction, ...] | None            # one multiplier per input row
    certificate: tuple[Fraction, ...] | None     # Farkas multipliers / ray


@dataclass(frozen=True)
class Decomposition:
    """Convex weights over a vertex list reproducing a query point exactly."""

    indices: tuple[int, ...]
    weights: tuple[Fraction, ...]
    points: tuple[tuple[Fraction, ...], ...]   # the support vertices themselves

    def reconstruct(self) -> tuple[Fraction, ...]:
        dim = len(self.points[0])
        out = [Fraction(0)] * dim
        for w, v in zip(self.weights, self.points):
            for i, x in enumerate(v):
                out[i] += w * x
        return tuple(out)


@dataclass(frozen=True)
class Separation:
    """A functional with coeffs . v <= bound on every vertex and
    coeffs . query > bound, in primitive integer form."""

    coefficients: tuple[int, ...]
    bound: int
    value_at_query: Fraction

    def evaluate(self, values: Sequence[Fraction]) -> Fraction:
        return dot(self.coefficients, values)


Certificate = Decomposition | Separation


class _Tableau:
    """Standard-form tableau: min c.x, A x = b, x >= 0, b >= 0."""

    def __init__(self, a_rows, b, n_struct):
        self.m = len(a_rows)
        self.n_struct = n_struct
        # append artificial columns; they stay in the tableau so dual values
        # can be read off their reduced costs
        self.n = n_struct + self.m
        self.rows = [list(r) + [Fraction(1) if i == j else Fraction(0) for j in range(self.m)]
                     + [b[i]] for i, r in enumerate(a_rows)]
        self.basis = [n_struct + i for i in range(self.m)]

    def pivot(self, r, c):
        pr = self.rows[r]
        pv = pr[c]
        self.rows[r] = [x / pv for x in pr]
        pr = self.rows[r]
        for i in range(self.m):
            if i != r and self.rows[i][c] != 0:
                f = self.rows[i][c]
                self.rows[i] = [x - f * y for x, y in zip(self.rows[i], pr)]
        self.basis[r] = c

    def reduced_costs(self, cost):
        """cost_j - y.A_j for every column, plus the objective value."""
        cb = [cost[self.basis[i]] for i in range(self.m)]
        red = list(cost)
        obj = Fraction(0)
        for i in range(self.m):
            if cb[i] == 0:
                continue
            row = self.rows[i]
            for j in range(self.n):
                red[j] -= cb[i] * row[j]
            obj += cb[i] * row[self.n]
        return red, obj

    def run(self, cost, blocked=()):
        """Bland's rule simplex on the given cost vector.

        Returns ("optimal", value) or ("unbounded", entering column).
        Columns in `blocked` never enter.
        """
        blocked = set(blocked)
        while True:
            red, obj = self.reduced_costs(cost)
            enter = -1
            for j in range(self.n):
                if j in blocked:
                    continue
                if red[j] < 0:
                    enter = j
                    break
            if enter < 0:
                return "optimal", obj
            leave = -1
            best = None
            for i in range(self.m):
                a = self.rows[i][enter]
                if a > 0:
                    ratio = self.rows[i][self.n] / a
                    if best is None or ratio < best or (
                            ratio == best and self.basis[i] < self.basis[leave]):
                        best = ratio
                        leave = i
            if leave < 0:
                return "unbounded", enter
            self.pivot(leave, enter)

    def solution(self, width):
        x = [Fraction(0)] * width
        for i, bcol in enumerate(self.basis):
            if bcol < width:
                x[bcol] = self.rows[i][self.n]
        return x

    def duals_from_artificials(self, cost):
        red, _ = self.reduced_costs(cost)
        return [cost[self.n_struct + i] - red[self.n_struct + i] for i in range(self.m)]


def solve(problem: LPProblem) -> LPResult:
    """Two-phase exact simplex. Infeasibility and unboundedness come with
    exact certificates (Farkas multipliers over the input rows / a ray)."""
    n = len(problem.objective)
    nonneg = problem.nonneg if problem.nonneg is not None else tuple([True] * n)
    sense_factor = Fraction(1) if problem.sense == "min" else Fraction(-1)

    # split free variables: column map, entry (var, +1) or (var, -1)
    col_map: list[tuple[int, int]] = []
    for j in range(n):
        col_map.append((j, 1))
        if not nonneg[j]:
            col_map.append((j, -1))
    n_split = len(col_map)

    a_rows = []
    b = []
    flips = []
    slack_cols: dict[int, int] = {}       # input row -> standard column of its slack
    n_struct = n_split + sum(1 for _, rel, _ in problem.rows if rel != "=")
    next_slack = n_split
    for ridx, (coeffs, rel, rhs) in enumerate(problem.rows):
        row = [coeffs[v] * s for v, s in col_map]
        row += [Fraction(0)] * (n_struct - n_split)
        if rel != "=":
            row[next_slack] = Fraction(1) if rel == "<=" else Fraction(-1)
            slack_cols[ridx] = next_slack
            next_slack += 1
        if rhs < 0:
            row = [-x for x in row]
            rhs = -rhs
            flips.append(Fraction(-1))
        else:
            flips.append(Fraction(1))
        a_rows.append(row)
        b.append(Fraction(rhs))

    tab = _Tableau(a_rows, b, n_struct)
    art_cols = list(range(n_struct, n_struct + tab.m))

    # phase 1
    cost1 = [Fraction(0)] * n_struct + [Fraction(1)] * tab.m
    status, obj1 = tab.run(cost1)
    assert status == "optimal"
    if obj1 > 0:
        y_std = tab.duals_from_artificials(cost1)
        y = tuple(flips[i] * y_std[i] for i in range(tab.m))
        _verify_farkas(problem, y)
        return LPResult("infeasible", None, None, None, tuple(y))

    # drive remaining artificials out of the basis (or drop redundant rows)
    for i in range(tab.m):
        if tab.basis[i] >= n_struct:
            for j in range(n_struct):
                if tab.rows[i][j] != 0:
                    tab.pivot(i, j)
                    break

    # phase 2
    cost2 = [Fraction(0)] * (n_struct + tab.m)
    for col, (v, s) in enumerate(col_map):
        cost2[col] = sense_factor * problem.objective[v] * s
    status, obj2 = tab.run(cost2, blocked=art_cols)
    if status == "unbounded":
        ray_std = [Fraction(0)] * n_struct
        enter = obj2
        ray_std[enter] = Fraction(1)
        for i in range(tab.m):
            if tab.basis[i] < n_struct:
                ray_std[tab.basis[i]] = -tab.rows[i][enter]
        ray = [Fraction(0)] * n
        for col, (v, s) in enumerate(col_map):
            if col < n_split:
                ray[v] += s * ray_std[col]
        return LPResult("unbounded", None, None, None, tuple(ray))

    x_std = tab.solution(n_struct)
    x = [Fraction(0)] * n
    for col, (v, s) in enumerate(col_map):
        if col < n_split:
            x[v] += s * x_std[col]
    y_std = tab.duals_from_artificials(cost2)
    y = tuple(sense_factor * flips[i] * y_std[i] for i in range(tab.m))
    value = sense_factor * obj2
    return LPResult("optimal", value, tuple(x), y, None)


def _verify_farkas(problem: LPProblem, y: Sequence[Fraction]) -> None:
    """Exact check of an infeasibility certificate for the original system."""
    n = len(problem.objective)
    nonneg = problem.nonneg if problem.nonneg is not None else tuple([True] * n)
    for (_, rel, _), yi in zip(problem.rows, y):
        if rel == "<=" and yi > 0:
            raise LPError("invalid Farkas certificate: sign condition")
        if rel == ">=" and yi < 0:
            raise LPError("invalid Farkas certificate: sign condition")
    combo = [Fraction(0)] * n
    rhs = Fraction(0)
    for (coeffs, _, bnd), yi in zip(problem.rows, y):
        if yi == 0:
            continue
        for j, c in enumerate(coeffs):
            combo[j] += yi * c
        rhs += yi * bnd
    for j in range(n):
        if nonneg[j]:
            if combo[j] > 0:
                raise LPError("invalid Farkas certificate: positive combination entry")
        elif combo[j] != 0:
            raise LPError("invalid Farkas certificate: free variable not eliminated")
    if rhs <= 0:
        raise LPError("invalid Farkas certificate: nonpositive rhs")


def membership(point: Sequence[Fraction], vertices: Sequence[Sequence[Fraction]]) -> Certificate:
    """Decide point in conv(vertices), with an exact certificate either way."""
    if not vertices:
        raise LPError("empty vertex list")
    dim = len(point)
    for v in vertices:
        if len(v) != dim:
            raise LPError("vertex/point dimension mismatch")
    nv = len(vertices)
    rows = []
    for i in range(dim):
        rows.append((tuple(Fraction(v[i]) for v in vertices), "=", Fraction(point[i])))
    rows.append((tuple(Fraction(1) for _ in range(nv)), "=", Fraction(1)))
    problem = LPProblem(tuple([Fraction(0)] * nv), tuple(rows), "min")
    res = solve(problem)
    if res.status == "optimal":
        support = [(i, w) for i, w in enumerate(res.primal) if w != 0]
        deco = Decomposition(
            indices=tuple(i for i, _ in support),
            weights=tuple(w for _, w in support),
            points=tuple(tuple(Fraction(x) for x in vertices[i]) for i, _ in support))
        if any(w < 0 for w in deco.weights) or sum(deco.weights) != 1:
            raise LPError("decomposition verification failed: weights")
        if deco.reconstruct() != tuple(Fraction(x) for x in point):
            raise LPError("decomposition verification failed: reconstruction")
        return deco
    assert res.status == "infeasible"
    y = res.certificate
    g = [y[i] for i in range(dim)]
    gamma = y[dim]
    scaled = primitive_int_vector(list(g) + [-gamma])
    coeffs, bound = scaled[:dim], scaled[dim]
    sep = Separation(coeffs, bound, dot(coeffs, point))
    for v in vertices:
        if dot(sep.coefficients, v) > bound:
            raise LPError("separation verification failed: vertex above bound")
    if sep.value_at_query <= bound:
        raise LPError("separation verification failed: query not separated")
    return sep


def evaluate(coefficients: Sequence, values: Sequence[Fraction]) -> Fraction:
    """Exact value of a linear functional on a vector."""
    if len(coefficients) != len(values):
        raise LPError("functional/vector dimension mismatch")
    return dot(coefficients, values)


def maximize_over_hrep(objective: Sequence[Fraction], hrep) -> tuple[Fraction, tuple[Fraction, ...]]:
    """Exact max of objective . x over an H-representation (duck-typed:
    .dimension, .equalities, .inequalities with integer rows).

    The equalities are eliminated first and the reduced problem is solved
    through its LP dual, which keeps the tableau narrow when the H-rep has
    many inequality rows. The attaining point is recovered from the tight
    rows and re-verified against every constraint.
    """
    dim = hrep.dimension
    if len(objective) != dim:
        raise LPError("objective/hrep dimension mismatch")

    eq_rows = [list(map(Fraction, c)) + [Fraction(r)] for c, r in hrep.equalities]
    red, pivots = rref(eq_rows) if eq_rows else ([], [])
    for row in red:
        if all(x == 0 for x in row[:-1]) and row[-1] != 0:
            raise LPError("empty polytope: inconsistent equalities")
    free = [j for j in range(dim) if j not in pivots]

    def reduce_functional(coeffs, rhs):
        """Substitute pivot variables out of coeffs . x (<=,=) rhs."""
        c = list(map(Fraction, coeffs))
        r = Fraction(rhs)
        for i, pc in enumerate(pivots):
            if c[pc] != 0:
                f = c[pc]
                r -= f * red[i][dim]
                for j in range(dim):
                    c[j] -= f * red[i][j]
                c[pc] = Fraction(0)
        return [c[j] for j in free], r

    ineqs = []
    for coeffs, rhs in hrep.inequalities:
        c, r = reduce_functional(coeffs, rhs)
        if all(x == 0 for x in c):
            if r < 0:
                raise LPError("empty polytope: contradictory inequality")
            continue
        ineqs.append((c, r))
    # on the subspace, objective . x = obj_red . y - obj_shift
    obj_red, obj_shift = reduce_functional(objective, Fraction(0))
    k = len(free)

    if all(x == 0 for x in obj_red):
        y = _feasible_point(ineqs, k)
        return -obj_shift, tuple(_lift(dim, pivots, red, free, y))
    if not ineqs:
        raise LPError("unbounded: no inequality constrains the objective")

    # dual of  max obj_red.y  s.t.  C y <= d  (y free):
    #   min u.d  s.t.  C^T u = obj_red, u >= 0
    # whose row multipliers at the optimum are exactly the primal maximizer.
    nrows = len(ineqs)
    dual_rows = []
    for j in range(k):
        dual_rows.append((tuple(ineqs[i][0][j] for i in range(nrows)), "=", obj_red[j]))
    dual_obj = tuple(ineqs[i][1] for i in range(nrows))
    res = solve(LPProblem(dual_obj, tuple(dual_rows), "min"))
    if res.status == "infeasible":
        raise LPError("unbounded: objective not bounded over the H-rep")
    if res.status == "unbounded":
        raise LPError("empty polytope: dual unbounded")
    y = res.dual
    if dot(obj_red, y) != res.value:
        raise LPError("internal: duality gap")
    for c, r in ineqs:
        if dot(c, y) > r:
            raise LPError("internal: maximizer violates a constraint")
    x = _lift(dim, pivots, red, free, y)
    return res.value - obj_shift, tuple(x)


def _feasible_point(ineqs, k):
    """Any point of {y : C y <= d} with y free, or LPError if empty."""
    if not ineqs:
        return tuple([Fraction(0)] * k)
    rows = tuple((tuple(c), "<=", r) for c, r in ineqs)
    res = solve(LPProblem(tuple([Fraction(0)] * k), rows, "min",
                          nonneg=tuple([False] * k)))
    if res.status != "optimal":
        raise LPError("empty polytope")
    return res.primal


def _lift(dim, pivots, red, free, y):
    """Lift reduced coordinates back through the eliminated equalities."""
    x = [Fraction(0)] * dim
    for j, yj in zip(free, y):
        x[j] = yj
    for i, pc in enumerate(pivots):
        x[pc] = red[i][dim] - sum(red[i][j] * x[j] for j in free)
    return x
