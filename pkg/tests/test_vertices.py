import itertools
from fractions import Fraction as F

import pytest

from bellpoly import lp
from bellpoly.behaviour import MarginalBehaviour, marginal_check_nd
from bellpoly.scenario import Party, Scenario
from bellpoly.vertices import (
    enumerate_g_vertices,
    enumerate_nc_vertices,
    enumerate_nd_vertices,
    iter_joint_vertices,
    joint_vertices,
    product_behaviour,
    vertex_matrix,
)


def test_nc_counts(path_scenario, cycle4_scenario):
    assert len(enumerate_nc_vertices(path_scenario.alice)) == 4
    assert len(enumerate_nc_vertices(path_scenario.bob)) == 8
    assert len(enumerate_nc_vertices(cycle4_scenario.bob)) == 16


def test_g_counts(path_scenario, cycle3_scenario):
    assert len(enumerate_g_vertices(path_scenario.bob)) == 16
    assert len(enumerate_g_vertices(cycle3_scenario.bob)) == 64
    # singleton contexts: g coincides with nc
    alice = path_scenario.alice
    assert {rf.values for rf in enumerate_g_vertices(alice)} \
        == {rf.values for rf in enumerate_nc_vertices(alice)}


def test_nd_path_equals_nc(path_scenario):
    nd = enumerate_nd_vertices(path_scenario.bob)
    nc = enumerate_nc_vertices(path_scenario.bob)
    assert {rf.values for rf in nd} == {rf.values for rf in nc}


def test_nd_cycle_counts(cycle3_scenario, cycle4_scenario):
    nd3 = enumerate_nd_vertices(cycle3_scenario.bob)
    assert len(nd3) == 12  # 8 outcome-deterministic + 4 contextual (regression pin)
    det3 = [rf for rf in nd3 if rf.is_measurement_deterministic()]
    assert len(det3) == 8
    nd4 = enumerate_nd_vertices(cycle4_scenario.bob)
    assert len(nd4) == 24  # 16 deterministic + 8 PR-type boxes
    det4 = [rf for rf in nd4 if rf.is_measurement_deterministic()]
    assert len(det4) == 16
    for rf in nd4:
        if not rf.is_measurement_deterministic():
            assert all(v in (F(0), F(1, 2)) for v in rf.values)


def test_every_vertex_passes_its_class_predicate(path_scenario, cycle3_scenario):
    for party in (path_scenario.bob, cycle3_scenario.bob):
        for rf in enumerate_nc_vertices(party):
            assert rf.is_measurement_deterministic()
        for rf in enumerate_nd_vertices(party):
            assert rf.is_nondisturbing()
        for rf in enumerate_g_vertices(party):
            # deterministic per context
            for ctx in party.contexts:
                vals = [rf.value(ctx, o) for o in party.context_outcomes(ctx)]
                assert sorted(vals) == [F(0)] * (len(vals) - 1) + [F(1)]


def test_class_hierarchy_per_party(cycle3_scenario):
    bob = cycle3_scenario.bob
    nc = {rf.values for rf in enumerate_nc_vertices(bob)}
    nd = {rf.values for rf in enumerate_nd_vertices(bob)}
    g_hull = [list(rf.values) for rf in enumerate_g_vertices(bob)]
    assert nc <= nd
    for v in nd:
        cert = lp.membership(v, g_hull)
        assert isinstance(cert, lp.Decomposition)


def test_no_vertex_is_redundant(cycle3_scenario):
    bob = cycle3_scenario.bob
    nd = [rf.values for rf in enumerate_nd_vertices(bob)]
    for i, v in enumerate(nd):
        others = [w for j, w in enumerate(nd) if j != i]
        assert isinstance(lp.membership(v, others), lp.Separation)


def test_vertices_distinct(path_scenario):
    for kinds in (("nc", "nc"), ("nd", "nd"), ("g", "g")):
        mat = vertex_matrix(joint_vertices(path_scenario, kinds))
        assert len(set(mat)) == len(mat)


def test_joint_counts(path_scenario, chsh_scenario):
    assert len(joint_vertices(path_scenario, ("g", "g"))) == 64
    assert len(joint_vertices(path_scenario, ("nd", "nd"))) == 32
    assert len(joint_vertices(chsh_scenario, ("nc", "nc"))) == 16


def test_joint_vertices_are_products(path_scenario):
    for jv in joint_vertices(path_scenario, ("nd", "g"))[:8]:
        assert jv.behaviour == product_behaviour(path_scenario, jv.factors)
        aidx = jv.factors[0].party
        for (ctxs, outs), value in zip(jv.behaviour.index.keys, jv.behaviour.values):
            expected = jv.factors[0].value(ctxs[0], outs[0]) * \
                jv.factors[1].value(ctxs[1], outs[1])
            assert value == expected


def test_iterator_contract(path_scenario):
    it = iter_joint_vertices(path_scenario, ("g", "g"))
    first = next(it)
    assert first.behaviour == joint_vertices(path_scenario, ("g", "g"))[0].behaviour


def test_wrong_class_count(path_scenario):
    with pytest.raises(ValueError, match="per party"):
        joint_vertices(path_scenario, ("nc",))
    with pytest.raises(ValueError, match="class"):
        joint_vertices(path_scenario, ("nc", "weird"))
