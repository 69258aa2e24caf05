import itertools
from fractions import Fraction as F
from math import pi, sqrt

import numpy as np
import pytest

from bellpoly import lp, quantum as qm
from bellpoly.behaviour import MarginalBehaviour, check_nd, check_ns, marginal
from bellpoly.scenario import build_index
from bellpoly.vertices import joint_vertices, vertex_matrix


def qubit_projs(theta):
    v0 = np.array([np.cos(theta / 2), np.sin(theta / 2)])
    v1 = np.array([-np.sin(theta / 2), np.cos(theta / 2)])
    return {"0": np.outer(v0, v0).astype(complex), "1": np.outer(v1, v1).astype(complex)}


def chsh_functional(scenario):
    index = build_index(scenario)
    signs = {("A0", "B0"): 1, ("A0", "B1"): 1, ("A1", "B0"): 1, ("A1", "B1"): -1}
    coeffs = [0.0] * index.dimension
    for pos, (ctxs, outs) in enumerate(index.keys):
        parity = 1 if outs[0][0] == outs[1][0] else -1
        coeffs[pos] = signs[(ctxs[0][0], ctxs[1][0])] * parity
    return coeffs


def test_maximally_mixed_uniform(chsh_scenario):
    rho = np.eye(4, dtype=complex) / 4
    fams = {"A0": qubit_projs(0.0), "A1": qubit_projs(1.0)}
    famsb = {"B0": qubit_projs(0.4), "B1": qubit_projs(2.0)}
    model = qm.QuantumModel(chsh_scenario, (2, 2), rho, {"A": fams, "B": famsb})
    fb = qm.evaluate(model)
    assert np.allclose(fb.values, 0.25, atol=1e-12)
    assert fb.ns_residual() < 1e-12 and fb.nd_residual() < 1e-12


def test_product_state_factorizes(chsh_scenario):
    va = np.array([0.6, 0.8], dtype=complex)
    vb = np.array([1 / sqrt(2), 1j / sqrt(2)])
    rho = np.outer(np.kron(va, vb), np.kron(va, vb).conj())
    fams = {"A": {"A0": qubit_projs(0.3), "A1": qubit_projs(1.2)},
            "B": {"B0": qubit_projs(0.8), "B1": qubit_projs(2.1)}}
    model = qm.QuantumModel(chsh_scenario, (2, 2), rho, fams)
    fb = qm.evaluate(model)
    alice = chsh_scenario.alice
    bob = chsh_scenario.bob
    ra = qm.party_response(np.outer(va, va.conj()), alice, fams["A"])
    rb = qm.party_response(np.outer(vb, vb.conj()), bob, fams["B"])
    index = build_index(chsh_scenario)
    from bellpoly.scenario import marginal_index
    ai, bi = marginal_index(alice), marginal_index(bob)
    for pos, (ctxs, outs) in enumerate(index.keys):
        expected = ra[ai.position_of(ctxs[0], outs[0])] * rb[bi.position_of(ctxs[1], outs[1])]
        assert abs(fb.values[pos] - expected) < 1e-12


def test_singlet_chsh_value(chsh_scenario):
    psi = np.array([0, 1, -1, 0], dtype=complex) / sqrt(2)
    rho = np.outer(psi, psi.conj())
    fams = {"A": {"A0": qubit_projs(0.0), "A1": qubit_projs(pi / 2)},
            "B": {"B0": qubit_projs(pi + pi / 4), "B1": qubit_projs(pi - pi / 4)}}
    model = qm.QuantumModel(chsh_scenario, (2, 2), rho, fams)
    fb = qm.evaluate(model)
    value = float(np.dot(chsh_functional(chsh_scenario), fb.values))
    assert abs(value - 2 * sqrt(2)) < 1e-9


def test_commutation_enforced(path_scenario):
    rho = np.eye(4, dtype=complex) / 4
    fams_a = {"A0": qubit_projs(0.0), "A1": qubit_projs(1.0)}
    fams_b = {"B0": qubit_projs(0.0), "B1": qubit_projs(0.7), "B2": qubit_projs(1.9)}
    model = qm.QuantumModel(path_scenario, (2, 2), rho, {"A": fams_a, "B": fams_b})
    with pytest.raises(qm.ModelError, match="do not commute"):
        model.validate()


def test_context_product_order_irrelevant(path_scenario):
    # B1 trivial keeps both Bob contexts commuting; reversing each context's
    # product order must not change the behaviour
    rho = np.eye(4, dtype=complex) / 4
    triv = {"0": np.eye(2, dtype=complex), "1": np.zeros((2, 2), dtype=complex)}
    fams_b = {"B0": qubit_projs(0.9), "B1": triv, "B2": qubit_projs(2.2)}
    fams_a = {"A0": qubit_projs(0.2), "A1": qubit_projs(1.4)}
    model = qm.QuantumModel(path_scenario, (2, 2), rho, {"A": fams_a, "B": fams_b})
    fb = qm.evaluate(model)
    reversed_parties = tuple(
        type(p)(p.name, p.measurements, p.outcomes,
                tuple(tuple(reversed(c)) for c in p.contexts))
        for p in path_scenario.parties)
    from bellpoly.scenario import Scenario
    s_rev = Scenario(reversed_parties)
    model_rev = qm.QuantumModel(s_rev, (2, 2), rho, {"A": fams_a, "B": fams_b})
    fb_rev = qm.evaluate(model_rev)
    index = build_index(path_scenario)
    index_rev = build_index(s_rev)
    for pos, (ctxs, outs) in enumerate(index.keys):
        rev_key = (tuple(tuple(reversed(c)) for c in ctxs),
                   tuple(tuple(reversed(o)) for o in outs))
        assert abs(fb.values[pos] - fb_rev.values[index_rev.position_of(rev_key)]) < 1e-10


def test_separable_behaviour_decomposition(path_scenario):
    rng = np.random.default_rng(1)
    from bellpoly.reproduce import _random_valid_path_model
    components, projectors = _random_valid_path_model(rng, dyadic=False)
    fb, deco = qm.separable_behaviour(components, projectors, path_scenario)
    assert fb.ns_residual() < 1e-9 and fb.nd_residual() < 1e-9
    for resp in deco.alice_responses:
        assert qm.response_nd_residual(path_scenario.alice, resp) < 1e-9
    for resp in deco.bob_responses:
        assert qm.response_nd_residual(path_scenario.bob, resp) < 1e-9
    # single product component collapses to a point decomposition
    fb1, deco1 = qm.separable_behaviour(components[:1] and
                                        [(1.0, components[0][1], components[0][2])],
                                        projectors, path_scenario)
    assert len(deco1.weights) == 1


def test_diagonal_state_rationalizes(path_scenario):
    rng = np.random.default_rng(8)
    from bellpoly.reproduce import _random_valid_path_model
    components, projectors = _random_valid_path_model(rng, dyadic=True)
    fb, _ = qm.separable_behaviour(components, projectors, path_scenario)
    exact = fb.rationalize()
    assert exact is not None
    assert not check_ns(exact)
    cert = lp.membership(exact.values,
                         vertex_matrix(joint_vertices(path_scenario, ("nd", "nd"))))
    assert isinstance(cert, lp.Decomposition)


def test_pr_product_behaviour(cycle4_scenario):
    uniform = MarginalBehaviour(cycle4_scenario.alice, (F(1, 2),) * 4)
    b = qm.pr_product_behaviour(cycle4_scenario, uniform)
    assert set(b.values) == {F(0), F(1, 4)}
    assert not check_ns(b)
    assert not check_nd(b, cycle4_scenario.bob)
    assert marginal(b, cycle4_scenario.bob) == qm.pr_box_marginal(cycle4_scenario.bob)
    # biased Alice marginal stays exact and non-disturbing
    biased = MarginalBehaviour(cycle4_scenario.alice, (F(1, 3), F(2, 3), F(1), F(0)))
    b2 = qm.pr_product_behaviour(cycle4_scenario, biased)
    assert not check_nd(b2, cycle4_scenario.bob)
    assert marginal(b2, cycle4_scenario.alice) == biased


def test_pr_product_needs_cycle(path_scenario):
    uniform = MarginalBehaviour(path_scenario.alice, (F(1, 2),) * 4)
    with pytest.raises(ValueError, match="four"):
        qm.pr_product_behaviour(path_scenario, uniform)


def test_search_report_matches_reevaluation(chsh_scenario):
    res = qm.violation_search(chsh_functional(chsh_scenario), chsh_scenario,
                              dims_options=((2, 2),), restarts=4, iterations=30, seed=5)
    fb = qm.evaluate(res.model)
    value = float(np.dot(chsh_functional(chsh_scenario), fb.values))
    assert abs(value - res.best_value) <= 1e-9
    assert res.best_value <= 2 * sqrt(2) + 1e-9


def test_search_deterministic_under_seed(chsh_scenario):
    a = qm.violation_search(chsh_functional(chsh_scenario), chsh_scenario,
                            dims_options=((2, 2),), restarts=3, iterations=20, seed=42)
    b = qm.violation_search(chsh_functional(chsh_scenario), chsh_scenario,
                            dims_options=((2, 2),), restarts=3, iterations=20, seed=42)
    assert a.best_value == b.best_value
    assert a.history == b.history


def test_search_on_path_lnd_facet_regression(path_scenario):
    """Seesaw value for the non-disturbing-local facet, recorded as a
    regression fixture (no closed-form target claimed)."""
    from bellpoly.reproduce import load_inequality
    facet = load_inequality("path_lnd", path_scenario)
    res = qm.violation_search([float(c) for c in facet.coefficients], path_scenario,
                              dims_options=((2, 2), (2, 4)), restarts=10,
                              iterations=50, seed=3)
    assert res.best_value <= 1.21  # recorded bound from the first run
    assert res.best_value >= 1.0 - 1e-9  # classical value is attainable
