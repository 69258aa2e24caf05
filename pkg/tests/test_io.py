from fractions import Fraction as F

import numpy as np
import pytest

from bellpoly import fine, io, lp, polytope, quantum, sets
from bellpoly.reproduce import fixture_text, load_inequality
from bellpoly.vertices import joint_vertices, vertex_matrix


ALL_SCENARIOS = ["path", "cycle3", "cycle4", "chsh"]


@pytest.mark.parametrize("name", ALL_SCENARIOS)
def test_scenario_roundtrip_byte_identical(name):
    text = fixture_text(name + ".scenario")
    s = io.parse_scenario(text)
    assert io.serialize_scenario(s) == text


@pytest.mark.parametrize("name,scenario_name", [
    ("path_gap", "path"), ("cycle3_lndnc", "cycle3"), ("cycle3_lgnc", "cycle3")])
def test_behaviour_roundtrip_byte_identical(name, scenario_name):
    s = io.parse_scenario(fixture_text(scenario_name + ".scenario"))
    text = fixture_text(name + ".behaviour")
    b = io.parse_behaviour(text, s)
    assert io.serialize_behaviour(b) == text


def test_table_entries(path_scenario, cycle3_scenario):
    b1 = io.parse_behaviour(fixture_text("path_gap.behaviour"), path_scenario)
    assert b1.value((("A0",), ("B0", "B1")), (("0",), ("0", "1"))) == F(1, 2)
    b3 = io.parse_behaviour(fixture_text("cycle3_lndnc.behaviour"), cycle3_scenario)
    assert set(b3.values) == {F(0), F(1, 3)}
    b4 = io.parse_behaviour(fixture_text("cycle3_lgnc.behaviour"), cycle3_scenario)
    assert set(b4.values) == {F(0), F(1, 4), F(1, 2)}


def test_behaviour_parse_errors(path_scenario):
    good = fixture_text("path_gap.behaviour")
    with pytest.raises(io.ParseError, match="decimal"):
        io.parse_behaviour(good.replace("1/2", "0.5"), path_scenario)
    with pytest.raises(io.ParseError, match="unknown row"):
        io.parse_behaviour(good.replace("A0B0B1", "A9B0B1"), path_scenario)
    with pytest.raises(io.ParseError, match="missing rows"):
        io.parse_behaviour("\n".join(good.splitlines()[:3]) + "\n", path_scenario)
    with pytest.raises(io.ParseError, match="cells"):
        io.parse_behaviour(good.replace("0 1/2 1/2 0 0 0 0 0", "0 1/2"), path_scenario)


@pytest.mark.parametrize("name,scenario_name", [
    ("path_lnd", "path"), ("path_lgnd", "path"),
    ("cycle3_lnc", "cycle3"), ("cycle3_lnd", "cycle3")])
def test_inequality_roundtrip(name, scenario_name):
    s = io.parse_scenario(fixture_text(scenario_name + ".scenario"))
    text = fixture_text(name + ".ineq")
    ineq = io.parse_inequality(text, s)
    assert io.serialize_inequality(ineq, s) == text
    assert ineq.provenance.startswith("L_")


def test_hrep_vrep_roundtrip(path_scenario):
    h = sets.hrep_local(path_scenario, ("nd", "nd"))
    text = io.serialize_hrep(h)
    h2 = io.parse_hrep(text)
    assert h2 == h
    assert io.serialize_hrep(h2) == text
    v = polytope.facets_to_vertices(h)
    vtext = io.serialize_vrep(v)
    v2 = io.parse_vrep(vtext)
    assert v2 == v
    assert io.serialize_vrep(v2) == vtext


def test_vertex_cache_roundtrip(path_scenario, cycle3_scenario):
    mat = vertex_matrix(joint_vertices(path_scenario, ("nd", "nd")))
    text = io.serialize_vertex_cache(path_scenario, ("nd", "nd"), mat)
    kinds, mat2 = io.parse_vertex_cache(text, path_scenario)
    assert kinds == ("nd", "nd")
    assert mat2 == mat
    with pytest.raises(io.ParseError, match="built for scenario"):
        io.parse_vertex_cache(text, cycle3_scenario)


def test_certificate_roundtrip(path_scenario, path_gap):
    deco = lp.membership(path_gap.values,
                         vertex_matrix(joint_vertices(path_scenario, ("g", "g"))))
    text = io.serialize_certificate(deco, path_scenario)
    back = io.parse_certificate(text)
    assert back == deco
    sep = lp.membership(path_gap.values,
                        vertex_matrix(joint_vertices(path_scenario, ("nd", "nd"))))
    text2 = io.serialize_certificate(sep, path_scenario)
    back2 = io.parse_certificate(text2)
    assert back2 == sep


def test_joint_roundtrip_byte_identical(path_scenario):
    text = fixture_text("path_gap.joint")
    omega = io.parse_joint(text, path_scenario)
    assert io.serialize_joint(omega) == text
    # and a per-measurement one built in memory
    key = (("0", "1"), ("0", "0", "1"))
    omega2 = fine.JointDistribution(path_scenario, "per-measurement", ((key, F(1)),))
    text2 = io.serialize_joint(omega2)
    assert io.parse_joint(text2, path_scenario) == omega2


def test_model_file_roundtrip(chsh_scenario):
    res = quantum.violation_search(
        [1.0] * 16, chsh_scenario, dims_options=((2, 2),), restarts=1,
        iterations=5, seed=1)
    text = io.serialize_model(res.model)
    model2 = io.parse_model(text, chsh_scenario)
    assert model2.dims == res.model.dims
    assert np.allclose(model2.rho, res.model.rho)
    fb1 = quantum.evaluate(res.model)
    fb2 = quantum.evaluate(model2)
    assert np.allclose(fb1.values, fb2.values, atol=1e-12)


def test_rational_formatting():
    assert io.format_rational(F(1, 2)) == "1/2"
    assert io.format_rational(F(3)) == "3"
    assert io.parse_rational("-7/4") == F(-7, 4)
    with pytest.raises(io.ParseError):
        io.parse_rational("1.5")
