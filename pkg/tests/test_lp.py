import random
from fractions import Fraction as F

import pytest

from bellpoly import lp, sets
from bellpoly.lp import LPError, LPProblem, solve
from bellpoly.polytope import intersect
from bellpoly.reproduce import load_inequality
from bellpoly.scenario import build_index
from bellpoly.vertices import joint_vertices, vertex_matrix


def test_basic_max():
    res = solve(LPProblem((F(1),), (((F(1),), "<=", F(1)),), "max"))
    assert res.status == "optimal"
    assert res.value == 1
    assert res.primal == (F(1),)


def test_infeasible_with_farkas():
    res = solve(LPProblem((F(0),), (
        ((F(1),), "<=", F(-1)),
    ), "min"))
    assert res.status == "infeasible"
    assert res.certificate is not None  # verified inside solve already


def test_unbounded_with_ray():
    res = solve(LPProblem((F(1),), (((F(-1),), "<=", F(0)),), "max"))
    assert res.status == "unbounded"
    ray = res.certificate
    assert ray == (F(1),)


def test_free_variables():
    # min x + y with x + y >= -3, x free, y >= 0
    res = solve(LPProblem((F(1), F(1)),
                          (((F(1), F(1)), ">=", F(-3)),),
                          "min", nonneg=(False, True)))
    assert res.status == "optimal"
    assert res.value == -3


def test_duality_on_random_lps():
    rng = random.Random(4)
    solved = 0
    while solved < 15:
        n, m = rng.randint(1, 4), rng.randint(1, 4)
        obj = tuple(F(rng.randint(-3, 3)) for _ in range(n))
        rows = []
        for _ in range(m):
            coeffs = tuple(F(rng.randint(-3, 3)) for _ in range(n))
            rel = rng.choice(["<=", "=", ">="])
            rows.append((coeffs, rel, F(rng.randint(-2, 4))))
        res = solve(LPProblem(obj, tuple(rows), rng.choice(["min", "max"])))
        if res.status != "optimal":
            continue
        # strong duality, exactly
        dual_value = sum(y * r for y, (_, _, r) in zip(res.dual, rows))
        assert dual_value == res.value
        solved += 1


def test_membership_decomposition_reconstructs():
    square = [(F(0), F(0)), (F(1), F(0)), (F(0), F(1)), (F(1), F(1))]
    cert = lp.membership((F(1, 3), F(2, 3)), square)
    assert isinstance(cert, lp.Decomposition)
    assert cert.reconstruct() == (F(1, 3), F(2, 3))
    assert sum(cert.weights) == 1
    assert len(cert.weights) <= 3  # Caratheodory in the plane


def test_membership_separation_is_valid():
    square = [(F(0), F(0)), (F(1), F(0)), (F(0), F(1)), (F(1), F(1))]
    cert = lp.membership((F(3, 2), F(1, 2)), square)
    assert isinstance(cert, lp.Separation)
    for v in square:
        assert cert.evaluate(v) <= cert.bound
    assert cert.value_at_query > cert.bound


def test_membership_dimension_mismatch():
    with pytest.raises(LPError, match="mismatch"):
        lp.membership((F(0),), [(F(0), F(0))])


def test_gap_decomposition_weights(path_scenario, path_gap):
    verts = joint_vertices(path_scenario, ("g", "g"))
    cert = lp.membership(path_gap.values, vertex_matrix(verts))
    assert isinstance(cert, lp.Decomposition)
    # a two-vertex half/half decomposition exists; the canonical one found by
    # the solver must reproduce the behaviour regardless of its support
    assert cert.reconstruct() == path_gap.values
    assert sum(cert.weights) == 1


def test_gap_not_in_nd_hull(path_scenario, path_gap):
    cert = lp.membership(path_gap.values, vertex_matrix(joint_vertices(path_scenario, ("nd", "nd"))))
    assert isinstance(cert, lp.Separation)
    assert cert.value_at_query > cert.bound


def test_evaluate_examples(path_scenario, path_gap, cycle3_scenario, cycle3_lndnc):
    a1 = load_inequality("path_lnd", path_scenario)
    assert lp.evaluate(a1.coefficients, path_gap.values) == F(3, 2)
    b1 = load_inequality("cycle3_lnc", cycle3_scenario)
    assert lp.evaluate(b1.coefficients, cycle3_lndnc.values) == F(1, 3)
    # valid on every nd,nd joint vertex of the path scenario
    for v in vertex_matrix(joint_vertices(path_scenario, ("nd", "nd"))):
        assert lp.evaluate(a1.coefficients, v) <= a1.bound


def test_maximize_lnd_facet_over_l_nd_set(path_scenario, path_gap):
    """The L_nd facet reaches exactly 3/2 over L_ND, attained by a vertex
    equivalent to the bundled gap behaviour."""
    facet = load_inequality("path_lnd", path_scenario)
    h = sets.hrep_l_nd(path_scenario)
    value, point = lp.maximize_over_hrep(
        tuple(F(c) for c in facet.coefficients), h)
    assert value == F(3, 2)
    assert lp.evaluate(facet.coefficients, point) == F(3, 2)
    from bellpoly.behaviour import Behaviour, check_nd, check_ns
    b = Behaviour(path_scenario, tuple(point))
    assert not check_ns(b)
    assert not check_nd(b, path_scenario.bob)


def test_maximize_facet_over_own_polytope_is_tight(path_scenario):
    facet = load_inequality("path_lnd", path_scenario)
    h = sets.hrep_local(path_scenario, ("nd", "nd"))
    value, _ = lp.maximize_over_hrep(tuple(F(c) for c in facet.coefficients), h)
    assert value == F(1)


def test_lgnd_inequality_valid_and_tight_on_l_nd_set(path_scenario):
    """The bundled L_ND inequality is valid with bound 1 over the whole set
    and attained, so it is a supporting Bell-like inequality there."""
    ineq = load_inequality("path_lgnd", path_scenario)
    h = sets.hrep_l_nd(path_scenario)
    value, point = lp.maximize_over_hrep(tuple(F(c) for c in ineq.coefficients), h)
    assert value == F(1)
    assert lp.evaluate(ineq.coefficients, point) == F(1)


def test_maximize_lnc_facet_over_lnd_and_nc(cycle3_scenario, cycle3_lndnc):
    """Maximizing the non-contextual-local facet subject to membership in
    L_nd and NC regenerates a behaviour at value 1/3 (the bundled one
    attains it)."""
    facet = load_inequality("cycle3_lnc", cycle3_scenario)
    h = intersect(sets.hrep_local(cycle3_scenario, ("nd", "nd")),
                  sets.hrep_set(cycle3_scenario, "NC"))
    value, point = lp.maximize_over_hrep(tuple(F(c) for c in facet.coefficients), h)
    assert value >= F(1, 3)
    assert lp.evaluate(facet.coefficients, cycle3_lndnc.values) == F(1, 3)
    from bellpoly.behaviour import Behaviour
    b = Behaviour(cycle3_scenario, tuple(point))
    rep = sets.classify(b, ["L[nd,nd]", "NC"])
    assert rep.member("L[nd,nd]") and rep.member("NC")
