"""The end-to-end reproduction suite.

Every item re-derives its claims at run time from the bundled fixtures
(the fixtures supply expected values only, never results) and raises
AssertionError with a readable message on any mismatch. The CLI
`reproduce` subcommand and the acceptance test module both run exactly
these functions.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

import numpy as np

from . import fine, io, lp, polytope, quantum, sets
from .behaviour import Behaviour, check_nd, check_ns, classify_nsnd, marginal
from .scenario import Scenario, build_index, marginal_index
from .vertices import (
    enumerate_class,
    enumerate_nc_vertices,
    joint_vertices,
    vertex_matrix,
)

# best seesaw value for the L_ND facet of the path scenario, pinned on first
# run as a regression guard; the search is deterministic under a fixed seed
PINNED_LGND_VIOLATION = 1.2071067811865
# exact violation of the L_nd facet of the 3-cycle scenario by the bundled
# L_G-and-NC behaviour, pinned on first run
PINNED_CYCLE3_LND_VIOLATION = Fraction(5, 4)


def fixture_text(name: str) -> str:
    return resources.files("bellpoly.fixtures").joinpath(name).read_text()


def load_scenario(name: str) -> Scenario:
    return io.parse_scenario(fixture_text(name + ".scenario"))


def load_behaviour(name: str, scenario: Scenario) -> Behaviour:
    return io.parse_behaviour(fixture_text(name + ".behaviour"), scenario)


def load_inequality(name: str, scenario: Scenario) -> polytope.FacetInequality:
    return io.parse_inequality(fixture_text(name + ".ineq"), scenario)


@dataclass
class ItemResult:
    name: str
    ok: bool
    elapsed: float
    details: list[str] = field(default_factory=list)
    error: str = ""

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        msg = f"[{status}] {self.name} ({self.elapsed:.1f}s)"
        if not self.ok and self.error:
            msg += f": {self.error}"
        return msg


def _chsh_functional(scenario: Scenario) -> list[float]:
    """CHSH in full probability coordinates: E00 + E01 + E10 - E11."""
    index = build_index(scenario)
    signs = {("A0", "B0"): 1, ("A0", "B1"): 1, ("A1", "B0"): 1, ("A1", "B1"): -1}
    coeffs = [0.0] * index.dimension
    for pos, (ctxs, outs) in enumerate(index.keys):
        s = signs[(ctxs[0][0], ctxs[1][0])]
        parity = 1 if outs[0][0] == outs[1][0] else -1
        coeffs[pos] = float(s * parity)
    return coeffs


def item_table1_classification(detail) -> None:
    """Gap behaviour of the path scenario: inside NSND and L_ND, outside
    L_nd with an exact separation; the bundled L_nd facet evaluates to 3/2."""
    s = load_scenario("path")
    b = load_behaviour("path_gap", s)
    report = sets.classify(b, ["NS", "ND", "NSND", "L[g,g]", "L_ND", "L[nd,nd]"])
    assert report.member("NSND"), "behaviour must be non-signaling and non-disturbing"
    assert report.member("L_ND"), "behaviour must admit a general-response local decomposition"
    assert isinstance(report.certificate("L_ND"), lp.Decomposition)
    assert not report.member("L[nd,nd]"), "behaviour must lie outside L_nd"
    sep = report.certificate("L[nd,nd]")
    assert isinstance(sep, lp.Separation)
    facet = load_inequality("path_lnd", s)
    value = lp.evaluate(facet.coefficients, b.values)
    assert value == Fraction(3, 2), f"facet value {value} != 3/2"
    detail(f"L_nd facet value on the gap behaviour: {value}")
    detail(f"L_ND decomposition support size: {len(report.certificate('L_ND').weights)}")


def item_table2_mixture(detail) -> None:
    """The bundled two-vertex disturbing decomposition reproduces the gap
    behaviour entrywise; its second vertex disturbs B1."""
    s = load_scenario("path")
    b = load_behaviour("path_gap", s)
    omega = io.parse_joint(fixture_text("path_gap.joint"), s)
    weights = [w for _, w in omega.support]
    assert weights == [Fraction(1, 2), Fraction(1, 2)], "fixture weights must be (1/2, 1/2)"
    reproduced = fine.behaviour_from_joint(omega)
    assert reproduced == b, "mixture of the two vertices must equal the behaviour exactly"
    deco, verts = fine.g_decomposition_from_joint(omega, s)
    bob_factors = [jv.factors[1] for jv in verts]
    assert not bob_factors[1].is_nondisturbing(), \
        "second vertex must disturb B1 (context-dependent outcome)"
    disturbing = sum(1 for rf in bob_factors if not rf.is_nondisturbing())
    detail(f"disturbing vertices in the decomposition: {disturbing}/2")


def item_lnd_facet_regeneration(detail) -> None:
    """Facet enumeration on the 32 (nd,nd) joint vertices of the path
    scenario recovers the bundled L_nd facet; the facet is valid on all 32
    vertices and tight on an affinely spanning set."""
    s = load_scenario("path")
    verts = vertex_matrix(joint_vertices(s, ("nd", "nd")))
    assert len(verts) == 32
    dim = build_index(s).dimension
    h = polytope.vertices_to_facets(polytope.VRep.build(dim, verts))
    facet = load_inequality("path_lnd", s)
    assert polytope.hrep_contains_functional(h, facet.coefficients, Fraction(facet.bound)), \
        "bundled facet not found in the enumerated facet list"
    values = [facet.evaluate(v) for v in verts]
    assert all(v <= facet.bound for v in values), "facet must be valid on every vertex"
    tight = [v for v, val in zip(verts, values) if val == facet.bound]
    polytope_dim = dim - len(h.equalities)
    tight_rank = _affine_rank(tight)
    assert tight_rank >= polytope_dim - 1, \
        f"tight set spans affine dimension {tight_rank}, need {polytope_dim - 1}"
    detail(f"facets: {len(h.inequalities)}, polytope dimension: {polytope_dim}, "
           f"tight vertices: {len(tight)}")


def _affine_rank(points) -> int:
    from ._linalg import rank
    if len(points) <= 1:
        return 0
    base = points[0]
    return rank([[x - y for x, y in zip(p, base)] for p in points[1:]])


def item_cycle3_separations(detail) -> None:
    """3-cycle scenario: the first bundled behaviour sits in L_nd and NC but
    violates the non-contextual-local facet at exactly 1/3; the second sits
    in L_G and NC but violates the non-disturbing-local facet at 5/4."""
    s = load_scenario("cycle3")
    b3 = load_behaviour("cycle3_lndnc", s)
    facet_nc = load_inequality("cycle3_lnc", s)
    value = lp.evaluate(facet_nc.coefficients, b3.values)
    assert value == Fraction(1, 3), f"L_nc facet value {value} != 1/3"

    cert_lnd = lp.membership(b3.values, vertex_matrix(joint_vertices(s, ("nd", "nd"))))
    assert isinstance(cert_lnd, lp.Decomposition), "behaviour must lie in L_nd"
    cert_ncb = sets.marginal_nc(b3, s.bob)
    assert isinstance(cert_ncb, lp.Decomposition), "Bob's marginal must be non-contextual"
    cert_nca = sets.marginal_nc(b3, s.alice)
    assert isinstance(cert_nca, lp.Decomposition)
    cert_lnc = lp.membership(b3.values, vertex_matrix(joint_vertices(s, ("nc", "nc"))))
    assert isinstance(cert_lnc, lp.Separation), "behaviour must lie outside L_nc"

    b4 = load_behaviour("cycle3_lgnc", s)
    cert_lg = lp.membership(b4.values, vertex_matrix(joint_vertices(s, ("g", "g"))))
    assert isinstance(cert_lg, lp.Decomposition), "behaviour must lie in L_G"
    assert isinstance(sets.marginal_nc(b4, s.bob), lp.Decomposition)
    assert isinstance(sets.marginal_nc(b4, s.alice), lp.Decomposition)
    facet_lnd = load_inequality("cycle3_lnd", s)
    violation = lp.evaluate(facet_lnd.coefficients, b4.values)
    assert violation > facet_lnd.bound, "L_nd facet must be violated"
    assert violation == PINNED_CYCLE3_LND_VIOLATION, \
        f"violation {violation} drifted from pinned {PINNED_CYCLE3_LND_VIOLATION}"
    detail(f"L_nc facet value: {value}; L_nd facet violation: {violation}")


def item_pr_product(detail) -> None:
    """PR-type box on Bob's 4-cycle times a uniform Alice marginal: inside
    L_nd with an explicit decomposition, while Bob's marginal is separated
    from his non-contextual polytope."""
    s = load_scenario("cycle4")
    alice = s.alice
    from .behaviour import MarginalBehaviour
    uniform = MarginalBehaviour(alice, tuple([Fraction(1, 2)] * 4))
    b = quantum.pr_product_behaviour(s, uniform)
    assert not check_ns(b) and not check_nd(b, s.bob), "construction must be in NSND"
    assert all(v in (Fraction(0), Fraction(1, 4)) for v in b.values), \
        "uniform-Alice PR product entries must be 0 or 1/4"
    cert = lp.membership(b.values, vertex_matrix(joint_vertices(s, ("nd", "nd"))))
    assert isinstance(cert, lp.Decomposition), "PR product must lie in L_nd"
    pr_marg = quantum.pr_box_marginal(s.bob)
    assert marginal(b, s.bob) == pr_marg
    nc_cert = lp.membership(pr_marg.values,
                            [rf.values for rf in enumerate_nc_vertices(s.bob)])
    assert isinstance(nc_cert, lp.Separation), "PR marginal must be contextual"
    detail(f"L_nd decomposition support: {len(cert.weights)}; "
           f"contextuality witness value: {nc_cert.value_at_query} > {nc_cert.bound}")


def _random_valid_path_model(rng, dyadic: bool):
    """A random separable two-qubit model for the path scenario.

    dyadic=True draws diagonal states and computational/Hadamard projectors,
    whose probabilities are exact small dyadics, so rationalization succeeds;
    dyadic=False draws Haar-random directions (B1 trivial keeps every context
    commuting while B0 and B2 stay generic)."""

    def pair_from(v):
        p = np.outer(v, v.conj())
        return {"0": np.eye(2) - p, "1": p}

    halves = np.array([1, 1]) / np.sqrt(2)
    if dyadic:
        choices = [pair_from(np.array([0.0, 1.0])), pair_from(halves),
                   {"0": np.eye(2, dtype=complex), "1": np.zeros((2, 2), dtype=complex)}]
        fams_b = {"B0": choices[rng.integers(0, 2)],
                  "B1": choices[2],
                  "B2": choices[rng.integers(0, 2)]}
        fams_a = {"A0": choices[rng.integers(0, 2)], "A1": choices[rng.integers(0, 2)]}

        def rho():
            p = rng.choice([0.0, 0.25, 0.5, 0.75, 1.0])
            return np.diag([p, 1 - p]).astype(complex)
    else:
        def hv():
            v = rng.normal(size=2) + 1j * rng.normal(size=2)
            return v / np.linalg.norm(v)
        fams_a = {"A0": pair_from(hv()), "A1": pair_from(hv())}
        fams_b = {"B0": pair_from(hv()),
                  "B1": {"0": np.eye(2, dtype=complex),
                         "1": np.zeros((2, 2), dtype=complex)},
                  "B2": pair_from(hv())}

        def rho():
            v = hv()
            return np.outer(v, v.conj())

    n_comp = int(rng.integers(1, 4))
    if dyadic:
        raw = [Fraction(1, n_comp)] * n_comp
        weights = [float(w) for w in raw]
    else:
        raw_f = rng.random(n_comp)
        weights = list(raw_f / raw_f.sum())
    components = [(w, rho(), rho()) for w in weights]
    return components, {"A": fams_a, "B": fams_b}


def item_separable_models(detail, seed: int = 2024, count: int = 20) -> None:
    """Random separable models on the path scenario: every decomposition
    factor is non-disturbing to 1e-9, and whenever the behaviour rationalizes
    it passes exact L_nd membership."""
    s = load_scenario("path")
    rng = np.random.default_rng(seed)
    lnd_verts = vertex_matrix(joint_vertices(s, ("nd", "nd")))
    rationalized = 0
    members = 0
    for i in range(count):
        components, projectors = _random_valid_path_model(rng, dyadic=(i % 2 == 0))
        fb, deco = quantum.separable_behaviour(components, projectors, s)
        for ra in deco.alice_responses:
            assert quantum.response_nd_residual(s.alice, ra) < 1e-9
        for rb in deco.bob_responses:
            assert quantum.response_nd_residual(s.bob, rb) < 1e-9
        assert fb.ns_residual() < 1e-9 and fb.nd_residual() < 1e-9
        exact = fb.rationalize()
        if exact is not None:
            rationalized += 1
            cert = lp.membership(exact.values, lnd_verts)
            assert isinstance(cert, lp.Decomposition), \
                f"model {i}: rationalized separable behaviour must lie in L_nd"
            members += 1
    assert rationalized >= 5, f"only {rationalized} models rationalized; sampler degenerate"
    detail(f"models: {count}, rationalized and L_nd-verified: {members}")


def item_fine_round_trips(detail) -> None:
    """Joint-distribution conversions both ways, exactly; the L_G-and-NC
    behaviour admits a per-context distribution and two per-party
    non-contextual models but no per-measurement distribution."""
    s = load_scenario("path")
    b = load_behaviour("path_gap", s)
    gverts = joint_vertices(s, ("g", "g"))
    deco = lp.membership(b.values, vertex_matrix(gverts))
    assert isinstance(deco, lp.Decomposition)
    omega = fine.joint_from_g_decomposition(deco, gverts, s)
    assert fine.behaviour_from_joint(omega) == b, "per-context round trip must be exact"
    deco2, verts2 = fine.g_decomposition_from_joint(omega, s)
    mixed = fine.behaviour_from_joint(fine.joint_from_g_decomposition(deco2, verts2, s))
    assert mixed == b

    # a non-contextual behaviour: round trip through a per-measurement joint
    s3 = load_scenario("cycle3")
    ncverts = joint_vertices(s3, ("nc", "nc"))
    uniform = Behaviour(s3, tuple(
        Fraction(1, 8) for _ in range(build_index(s3).dimension)))
    deco_nc = lp.membership(uniform.values, vertex_matrix(ncverts))
    assert isinstance(deco_nc, lp.Decomposition)
    w_nc = fine.joint_from_nc_decomposition(deco_nc, ncverts, s3)
    assert fine.behaviour_from_joint(w_nc) == uniform, "per-measurement round trip must be exact"
    deco_back, verts_back = fine.nc_decomposition_from_joint(w_nc, s3)
    assert fine.behaviour_from_joint(
        fine.joint_from_nc_decomposition(deco_back, verts_back, s3)) == uniform

    # negative control: local + per-party non-contextual, yet no global
    # per-measurement distribution
    b4 = load_behaviour("cycle3_lgnc", s3)
    deco_g = lp.membership(b4.values, vertex_matrix(joint_vertices(s3, ("g", "g"))))
    assert isinstance(deco_g, lp.Decomposition)
    omega4 = fine.joint_from_g_decomposition(deco_g, joint_vertices(s3, ("g", "g")), s3)
    assert fine.behaviour_from_joint(omega4) == b4
    assert isinstance(sets.marginal_nc(b4, s3.alice), lp.Decomposition)
    assert isinstance(sets.marginal_nc(b4, s3.bob), lp.Decomposition)
    sep = lp.membership(b4.values, vertex_matrix(joint_vertices(s3, ("nc", "nc"))))
    assert isinstance(sep, lp.Separation), \
        "a per-measurement joint distribution would put the behaviour in L_nc"
    detail("per-context and per-measurement round trips exact; "
           f"negative control separated at {sep.value_at_query} > {sep.bound}")


def item_quantum_violation(detail, seed: int = 11) -> None:
    """Seesaw sanity: CHSH reaches the Tsirelson value; the bundled L_ND
    facet of the path scenario is violated by a quantum model."""
    chsh = load_scenario("chsh")
    res = quantum.violation_search(_chsh_functional(chsh), chsh,
                                   dims_options=((2, 2),), restarts=8,
                                   iterations=50, seed=seed)
    assert res.best_value >= 2.828, f"CHSH seesaw reached only {res.best_value:.6f}"

    s = load_scenario("path")
    facet = load_inequality("path_lgnd", s)
    res25 = quantum.violation_search([float(c) for c in facet.coefficients], s,
                                     dims_options=((2, 2), (2, 3), (2, 4)),
                                     restarts=24, iterations=60, seed=seed)
    assert res25.best_value > 1 + 1e-6, \
        f"no quantum violation found (best {res25.best_value:.8f})"
    fb = quantum.evaluate(res25.model)
    recheck = float(np.dot([float(c) for c in facet.coefficients], fb.values))
    assert abs(recheck - res25.best_value) <= 1e-9
    assert fb.ns_residual() < 1e-9 and fb.nd_residual() < 1e-9
    assert res25.best_value >= PINNED_LGND_VIOLATION - 1e-6, \
        f"regression: best value {res25.best_value:.10f} below pinned"
    detail(f"CHSH: {res.best_value:.6f}; facet violation: {res25.best_value:.10f} "
           f"(dims {res25.model.dims})")


def item_chsh_degeneration(detail) -> None:
    """Standard scenario: all nine local sets coincide, and facet
    enumeration recovers 16 vertices plus the eight CHSH facets."""
    s = load_scenario("chsh")
    enums = {}
    for kinds in itertools.product(("nc", "nd", "g"), repeat=2):
        enums[kinds] = sorted(vertex_matrix(joint_vertices(s, kinds)))
    base = enums[("nc", "nc")]
    assert len(base) == 16
    for kinds, vs in enums.items():
        assert vs == base, f"L[{kinds}] vertices differ from L[nc,nc]"
    # spot-check mutual membership through the LP as well
    for v in base[::5]:
        assert isinstance(lp.membership(v, enums[("g", "g")]), lp.Decomposition)

    dim = build_index(s).dimension
    h = polytope.vertices_to_facets(polytope.VRep.build(dim, base))
    v_back = polytope.facets_to_vertices(h)
    assert len(v_back.vertices) == 16, "round trip must recover the 16 vertices"
    assert sorted(v_back.vertices) == base

    index = build_index(s)
    found = 0
    for signs in itertools.product((1, -1), repeat=4):
        if signs[0] * signs[1] * signs[2] * signs[3] != -1:
            continue
        coeffs = [Fraction(0)] * dim
        smap = dict(zip(itertools.product(("A0", "A1"), ("B0", "B1")), signs))
        for pos, (ctxs, outs) in enumerate(index.keys):
            parity = 1 if outs[0][0] == outs[1][0] else -1
            coeffs[pos] = Fraction(smap[(ctxs[0][0], ctxs[1][0])] * parity)
        if polytope.hrep_contains_functional(h, coeffs, Fraction(2)):
            found += 1
    assert found == 8, f"found {found} of 8 CHSH facets"
    detail(f"facets: {len(h.inequalities)} (8 CHSH forms + positivity), "
           f"equalities: {len(h.equalities)}")


def item_documented_exclusions(detail) -> None:
    """The non-quantumness of the gap behaviour (shown in the source work via
    a semidefinite hierarchy) is intentionally not reproduced; only the exact
    classification NSND and L_ND minus L_nd is asserted here."""
    s = load_scenario("path")
    b = load_behaviour("path_gap", s)
    flags = classify_nsnd(b)
    assert flags["NSND"]
    report = sets.classify(b, ["L_ND", "L[nd,nd]"])
    assert report.member("L_ND") and not report.member("L[nd,nd]")
    detail("no SDP hierarchy shipped: quantum-set non-membership of the gap "
           "behaviour is documented as out of scope, not asserted")


ITEMS = [
    ("table1-classification", item_table1_classification),
    ("table2-mixture", item_table2_mixture),
    ("lnd-facet-regeneration", item_lnd_facet_regeneration),
    ("cycle3-separations", item_cycle3_separations),
    ("pr-product", item_pr_product),
    ("separable-models", item_separable_models),
    ("fine-round-trips", item_fine_round_trips),
    ("quantum-violation", item_quantum_violation),
    ("chsh-degeneration", item_chsh_degeneration),
    ("documented-exclusions", item_documented_exclusions),
]


def run_item(name: str) -> ItemResult:
    fn = dict(ITEMS)[name]
    details: list[str] = []
    start = time.time()
    try:
        fn(details.append)
        return ItemResult(name, True, time.time() - start, details)
    except Exception as exc:  # noqa: BLE001 - report, do not crash the suite
        return ItemResult(name, False, time.time() - start, details, f"{exc}")


def run_suite(skip: tuple[str, ...] = (), workers: int = 1) -> list[ItemResult]:
    names = [n for n, _ in ITEMS if not any(n.startswith(sk) or sk in n for sk in skip)]
    if workers > 1:
        import concurrent.futures as futures
        with futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_item, names))
        return results
    return [run_item(n) for n in names]
