from fractions import Fraction as F

import pytest

from bellpoly import fine, lp, sets
from bellpoly.behaviour import Behaviour
from bellpoly.reproduce import load_inequality
from bellpoly.scenario import build_index
from bellpoly.vertices import joint_vertices, vertex_matrix


def nc_decompose(b):
    verts = joint_vertices(b.scenario, ("nc", "nc"))
    cert = lp.membership(b.values, vertex_matrix(verts))
    return cert, verts


def test_point_mass_roundtrip(path_scenario):
    jv = joint_vertices(path_scenario, ("nc", "nc"))[5]
    cert, verts = nc_decompose(jv.behaviour)
    omega = fine.joint_from_nc_decomposition(cert, verts, path_scenario)
    assert len(omega.support) == 1
    assert fine.behaviour_from_joint(omega) == jv.behaviour
    deco, new_verts = fine.nc_decomposition_from_joint(omega, path_scenario)
    assert deco.reconstruct() == jv.behaviour.values


def test_two_point_mixture(path_scenario):
    verts = joint_vertices(path_scenario, ("nc", "nc"))
    b = Behaviour(path_scenario, tuple(
        (x + y) / 2 for x, y in zip(verts[3].behaviour.values, verts[12].behaviour.values)))
    cert, enum = nc_decompose(b)
    omega = fine.joint_from_nc_decomposition(cert, enum, path_scenario)
    assert fine.behaviour_from_joint(omega) == b
    assert all(w > 0 for _, w in omega.support)


def test_uniform_joint_gives_maximally_mixed(path_scenario):
    import itertools
    keys = []
    for a_outs in itertools.product("01", repeat=2):
        for b_outs in itertools.product("01", repeat=3):
            keys.append((tuple(a_outs), tuple(b_outs)))
    omega = fine.JointDistribution(
        path_scenario, "per-measurement",
        tuple((k, F(1, 32)) for k in keys))
    b = fine.behaviour_from_joint(omega)
    assert all(v == F(1, 8) for v in b.values)


def test_g_roundtrip_from_gap_behaviour(path_scenario, path_gap):
    gverts = joint_vertices(path_scenario, ("g", "g"))
    cert = lp.membership(path_gap.values, vertex_matrix(gverts))
    omega = fine.joint_from_g_decomposition(cert, gverts, path_scenario)
    assert fine.behaviour_from_joint(omega) == path_gap
    # disturbance shows up as cross-context disagreement in the support
    assert any(not fine.assignment_is_consistent(path_scenario, key)
               for key, _ in omega.support)
    deco2, verts2 = fine.g_decomposition_from_joint(omega, path_scenario)
    assert deco2.reconstruct() == path_gap.values


def test_nc_decomposition_feeds_consistent_g_joint(path_scenario):
    verts = joint_vertices(path_scenario, ("nc", "nc"))
    b = verts[9].behaviour
    cert = lp.membership(b.values, vertex_matrix(verts))
    omega = fine.joint_from_g_decomposition(cert, verts, path_scenario)
    assert all(fine.assignment_is_consistent(path_scenario, key)
               for key, _ in omega.support)


def test_point_mass_inconsistent_key_is_disturbing(path_scenario):
    key = ((("0",), ("1",)),                       # Alice's two contexts
           (("1", "0"), ("1", "0")))               # B1 answers 0 then 1
    omega = fine.JointDistribution(path_scenario, "per-context", ((key, F(1)),))
    deco, verts = fine.g_decomposition_from_joint(omega, path_scenario)
    assert not verts[0].factors[1].is_nondisturbing()
    consistent_key = ((("0",), ("1",)), (("1", "1"), ("1", "0")))
    omega2 = fine.JointDistribution(path_scenario, "per-context", ((consistent_key, F(1)),))
    deco2, verts2 = fine.g_decomposition_from_joint(omega2, path_scenario)
    assert verts2[0].factors[1].is_nondisturbing()
    assert verts2[0].factors[1].is_measurement_deterministic()


def test_nc_projection_of_cycle3_table_roundtrips(cycle3_scenario):
    """Maximize the non-contextual-local facet over L_nc itself: the
    maximizer lies in L_nc, so it admits a per-measurement distribution whose
    marginals give it back."""
    facet = load_inequality("cycle3_lnc", cycle3_scenario)
    h = sets.hrep_local(cycle3_scenario, ("nc", "nc"))
    value, point = lp.maximize_over_hrep(tuple(F(c) for c in facet.coefficients), h)
    assert value == F(0)  # the facet bound: tight on L_nc
    b = Behaviour(cycle3_scenario, tuple(point))
    cert, enum = nc_decompose(b)
    assert isinstance(cert, lp.Decomposition)
    omega = fine.joint_from_nc_decomposition(cert, enum, cycle3_scenario)
    assert fine.behaviour_from_joint(omega) == b


def test_negative_control_lgnc_table(cycle3_scenario, cycle3_lgnc):
    """Local with general factors, non-contextual for both parties, yet no
    per-measurement joint distribution exists."""
    gverts = joint_vertices(cycle3_scenario, ("g", "g"))
    deco = lp.membership(cycle3_lgnc.values, vertex_matrix(gverts))
    omega = fine.joint_from_g_decomposition(deco, gverts, cycle3_scenario)
    assert fine.behaviour_from_joint(omega) == cycle3_lgnc
    assert isinstance(sets.marginal_nc(cycle3_lgnc, cycle3_scenario.alice), lp.Decomposition)
    assert isinstance(sets.marginal_nc(cycle3_lgnc, cycle3_scenario.bob), lp.Decomposition)
    sep = lp.membership(cycle3_lgnc.values,
                        vertex_matrix(joint_vertices(cycle3_scenario, ("nc", "nc"))))
    assert isinstance(sep, lp.Separation)


def test_nc_conversion_rejects_disturbing_vertices(path_scenario, path_gap):
    gverts = joint_vertices(path_scenario, ("g", "g"))
    cert = lp.membership(path_gap.values, vertex_matrix(gverts))
    with pytest.raises(ValueError, match="measurement-deterministic"):
        fine.joint_from_nc_decomposition(cert, gverts, path_scenario)


def test_joint_distribution_validation(path_scenario):
    key = ((("0", "0"), ("0", "0", "0")),)
    with pytest.raises(ValueError, match="arity"):
        fine.JointDistribution(path_scenario, "per-measurement", ((key, F(1)),))
    good = ((("0", "0"), ("0", "0", "0")), F(1, 2))
    with pytest.raises(ValueError, match="sums"):
        fine.JointDistribution(path_scenario, "per-measurement", (good,))
