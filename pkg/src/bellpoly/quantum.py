"""Floating-point quantum layer.

Everything else in the package is exact; here behaviours come from density
matrices and commuting projector contexts, so values are floats with stated
tolerances (1e-10 for model invariants, 1e-9 for derived behaviour checks).
A rationalization bridge snaps float behaviours to exact rationals when the
entries are recognizably rational, re-verifying every constraint before
handing them to the exact modules.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .behaviour import Behaviour, MarginalBehaviour
from .scenario import Party, Scenario, build_index, marginal_index, subcontexts

ATOL_MODEL = 1e-10
ATOL_BEHAVIOUR = 1e-9


class ModelError(ValueError):
    pass


@dataclass
class QuantumModel:
    """Shared state plus projective measurements matching a scenario's
    compatibility structure."""

    scenario: Scenario
    dims: tuple[int, ...]                       # local dimension per party
    rho: np.ndarray                             # density matrix on the tensor product
    projectors: dict                            # party -> measurement -> outcome -> matrix

    def validate(self) -> None:
        total = int(np.prod(self.dims))
        if self.rho.shape != (total, total):
            raise ModelError(f"state must be {total}x{total}")
        if np.linalg.norm(self.rho - self.rho.conj().T) > ATOL_MODEL:
            raise ModelError("state is not Hermitian")
        if abs(np.trace(self.rho) - 1) > ATOL_MODEL:
            raise ModelError("state trace is not 1")
        eigs = np.linalg.eigvalsh(self.rho)
        if eigs.min() < -ATOL_MODEL:
            raise ModelError(f"state has negative eigenvalue {eigs.min():.3e}")
        for party, d in zip(self.scenario.parties, self.dims):
            fams = self.projectors[party.name]
            for m in party.measurements:
                if m not in fams:
                    raise ModelError(f"no projector family for measurement {m}")
                fam = fams[m]
                total_op = np.zeros((d, d), dtype=complex)
                outs = party.outcome_labels(m)
                for o in outs:
                    p = fam[o]
                    if np.linalg.norm(p - p.conj().T) > ATOL_MODEL:
                        raise ModelError(f"projector {m}|{o} not Hermitian")
                    if np.linalg.norm(p @ p - p) > ATOL_MODEL:
                        raise ModelError(f"projector {m}|{o} not idempotent")
                    total_op += p
                for o1, o2 in itertools.combinations(outs, 2):
                    if np.linalg.norm(fam[o1] @ fam[o2]) > ATOL_MODEL:
                        raise ModelError(f"projectors {m}|{o1} and {m}|{o2} not orthogonal")
                if np.linalg.norm(total_op - np.eye(d)) > ATOL_MODEL:
                    raise ModelError(f"projector family {m} not complete")
            for ctx in party.contexts:
                for m1, m2 in itertools.combinations(ctx, 2):
                    for o1 in party.outcome_labels(m1):
                        for o2 in party.outcome_labels(m2):
                            p1, p2 = fams[m1][o1], fams[m2][o2]
                            if np.linalg.norm(p1 @ p2 - p2 @ p1) > ATOL_MODEL:
                                raise ModelError(
                                    f"projectors for {m1} and {m2} do not commute "
                                    f"inside context {ctx}")


@dataclass
class FloatBehaviour:
    """Behaviour with float entries, aligned with the scenario's index."""

    scenario: Scenario
    values: np.ndarray

    def value(self, ctxs, outs) -> float:
        return float(self.values[build_index(self.scenario).position_of((ctxs, outs))])

    def ns_residual(self) -> float:
        return _max_equality_residual(self, "ns")

    def nd_residual(self) -> float:
        return _max_equality_residual(self, "nd")

    def rationalize(self, max_denominator: int = 10**6) -> Behaviour | None:
        """Snap entries to rationals and re-verify: each snapped entry must be
        within 1e-9 of the float, and normalization must come out exact.
        Returns None when the snap is not faithful."""
        snapped = []
        for x in self.values:
            f = Fraction(float(x)).limit_denominator(max_denominator)
            if abs(float(f) - float(x)) > ATOL_BEHAVIOUR:
                return None
            snapped.append(f if f > 0 else Fraction(0))
        try:
            return Behaviour(self.scenario, tuple(snapped))
        except ValueError:
            return None


def _max_equality_residual(fb: FloatBehaviour, which: str) -> float:
    from .behaviour import nd_equalities, ns_equalities
    scenario = fb.scenario
    rows = []
    if which == "ns":
        rows = ns_equalities(scenario)
    else:
        for p in scenario.parties:
            rows += nd_equalities(scenario, p)
    worst = 0.0
    for coeffs, rhs in rows:
        val = float(sum(float(c) * v for c, v in zip(coeffs, fb.values)) - float(rhs))
        worst = max(worst, abs(val))
    return worst


def _context_product(fams: dict, ctx, outs) -> np.ndarray:
    mats = [fams[m][o] for m, o in zip(ctx, outs)]
    out = mats[0]
    for m in mats[1:]:
        out = out @ m
    return out


def evaluate(model: QuantumModel) -> FloatBehaviour:
    """p = Tr[rho (prod X) x (prod Y)] on every coordinate. The model is
    validated first, so in-context products are products of commuting
    projectors and the outcome is a genuine probability."""
    model.validate()
    scenario = model.scenario
    index = build_index(scenario)
    values = np.empty(index.dimension)
    for pos, (ctxs, outs) in enumerate(index.keys):
        factor = None
        for party, ctx, o in zip(scenario.parties, ctxs, outs):
            mat = _context_product(model.projectors[party.name], ctx, o)
            factor = mat if factor is None else np.kron(factor, mat)
        values[pos] = float(np.real(np.trace(model.rho @ factor)))
    return FloatBehaviour(scenario, values)


def party_response(rho_local: np.ndarray, party: Party, fams: dict) -> np.ndarray:
    """One party's response function Tr[rho_local prod Y] over its marginal
    index, as floats."""
    mindex = marginal_index(party)
    out = np.empty(mindex.dimension)
    for pos, (ctx, outs) in enumerate(mindex):
        mat = _context_product(fams, ctx, outs)
        out[pos] = float(np.real(np.trace(rho_local @ mat)))
    return out


def response_nd_residual(party: Party, values: np.ndarray) -> float:
    """Largest non-disturbance residual of a float response function."""
    mindex = marginal_index(party)
    worst = 0.0
    for sub, parents in subcontexts(party):
        for souts in itertools.product(*(party.outcome_labels(m) for m in sub)):
            sums = []
            for parent in parents:
                total = 0.0
                for pouts in party.context_outcomes(parent):
                    own = dict(zip(parent, pouts))
                    if all(own[m] == o for m, o in zip(sub, souts)):
                        total += float(values[mindex.position_of(parent, pouts)])
                sums.append(total)
            worst = max(worst, max(sums) - min(sums))
    return worst


@dataclass
class SeparableDecomposition:
    weights: tuple[float, ...]
    alice_responses: tuple[np.ndarray, ...]
    bob_responses: tuple[np.ndarray, ...]


def separable_behaviour(components: Sequence[tuple[float, np.ndarray, np.ndarray]],
                        projectors: dict, scenario: Scenario
                        ) -> tuple[FloatBehaviour, SeparableDecomposition]:
    """Behaviour of a separable state given as a mixture of product states,
    together with the explicit local decomposition it induces: one pair of
    response functions per component, each of them non-disturbing."""
    weights = [w for w, _, _ in components]
    if any(w < -ATOL_MODEL for w in weights) or abs(sum(weights) - 1) > ATOL_MODEL:
        raise ModelError("component weights must form a probability distribution")
    alice, bob = scenario.parties
    a_resp = []
    b_resp = []
    for _, rho_a, rho_b in components:
        a_resp.append(party_response(rho_a, alice, projectors[alice.name]))
        b_resp.append(party_response(rho_b, bob, projectors[bob.name]))
    index = build_index(scenario)
    values = np.zeros(index.dimension)
    aindex = marginal_index(alice)
    bindex = marginal_index(bob)
    for w, ra, rb in zip(weights, a_resp, b_resp):
        for pos, (ctxs, outs) in enumerate(index.keys):
            values[pos] += w * ra[aindex.position_of(ctxs[0], outs[0])] \
                * rb[bindex.position_of(ctxs[1], outs[1])]
    deco = SeparableDecomposition(tuple(weights), tuple(a_resp), tuple(b_resp))
    return FloatBehaviour(scenario, values), deco


def pr_product_behaviour(scenario: Scenario, alice_marginal: MarginalBehaviour) -> Behaviour:
    """Exact product of an arbitrary Alice behaviour with a PR-type box on
    Bob's four-cycle: perfect correlation on three contexts, perfect
    anti-correlation on the one closing the cycle. The box is non-disturbing
    by construction (every shared measurement is uniform on both sides), so
    the product is already a local decomposition with non-disturbing factors.
    """
    alice, bob = scenario.parties
    if alice_marginal.party != alice:
        raise ValueError("alice_marginal must belong to the first party")
    if len(bob.contexts) != 4 or any(len(c) != 2 for c in bob.contexts):
        raise ValueError("PR-box construction needs four two-measurement contexts")
    for ctx in bob.contexts:
        for m in ctx:
            if len(bob.outcome_labels(m)) != 2:
                raise ValueError("PR-box construction needs binary outcomes")
    # the cycle must close: consecutive contexts share a measurement
    for c1, c2 in zip(bob.contexts, bob.contexts[1:] + bob.contexts[:1]):
        if not set(c1) & set(c2):
            raise ValueError("Bob's contexts do not form a cycle")

    def pr(ctx, outs) -> Fraction:
        anti = ctx == bob.contexts[-1]
        o0, o1 = bob.outcome_labels(ctx[0]).index(outs[0]), \
            bob.outcome_labels(ctx[1]).index(outs[1])
        if (o0 ^ o1) == (1 if anti else 0):
            return Fraction(1, 2)
        return Fraction(0)

    index = build_index(scenario)
    values = []
    for ctxs, outs in index.keys:
        values.append(alice_marginal.value(ctxs[0], outs[0]) * pr(ctxs[1], outs[1]))
    return Behaviour(scenario, tuple(values))


def pr_box_marginal(bob: Party) -> MarginalBehaviour:
    """The PR-type box on a four-cycle party, as an exact marginal behaviour."""
    mindex = marginal_index(bob)
    values = []
    for ctx, outs in mindex:
        anti = ctx == bob.contexts[-1]
        o0 = bob.outcome_labels(ctx[0]).index(outs[0])
        o1 = bob.outcome_labels(ctx[1]).index(outs[1])
        values.append(Fraction(1, 2) if (o0 ^ o1) == (1 if anti else 0) else Fraction(0))
    return MarginalBehaviour(bob, tuple(values))


# ---------------------------------------------------------------------------
# Seesaw search for quantum violations.


@dataclass
class SearchResult:
    best_value: float
    model: QuantumModel | None
    restarts: int
    history: list = field(default_factory=list)


def _random_unitary(rng, d):
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def _random_projector_pair(rng, d, rank=None):
    """A rank-r projector and its complement in a random basis. Defaults to a
    non-trivial rank so a fresh measurement actually measures something."""
    if rank is None:
        rank = 1 + int(rng.integers(0, max(1, d - 1)))
    u = _random_unitary(rng, d)
    p = (u[:, :rank] @ u[:, :rank].conj().T) if rank else np.zeros((d, d), dtype=complex)
    return p, np.eye(d) - p


def _positive_eigenspace(h):
    w, v = np.linalg.eigh((h + h.conj().T) / 2)
    cols = v[:, w > 0]
    if cols.shape[1] == 0:
        return np.zeros_like(h)
    return cols @ cols.conj().T


def _blockwise_positive(cols_list, h):
    """Projector onto the positive eigenspaces of h compressed to each block,
    computed in block coordinates so the result is exactly block-diagonal."""
    d = len(h)
    p = np.zeros((d, d), dtype=complex)
    for cols in cols_list:
        hb = cols.conj().T @ h @ cols
        w, v = np.linalg.eigh((hb + hb.conj().T) / 2)
        keep = v[:, w > 0]
        if keep.shape[1]:
            lifted = cols @ keep
            p += lifted @ lifted.conj().T
    return p


def _partial_trace(mat, dims, keep):
    """Trace out every subsystem except `keep` (0 or 1) for two parties."""
    d0, d1 = dims
    t = mat.reshape(d0, d1, d0, d1)
    if keep == 0:
        return np.einsum("ikjk->ij", t)
    return np.einsum("kikj->ij", t)


class _Seesaw:
    """Alternating maximization of a linear functional over quantum models.

    Binary-outcome measurements only. Bob's commutation constraints are kept
    by construction: every measurement shared between two contexts is fixed
    per restart (random rank and eigenbasis) and all other measurements are
    optimized block-diagonally in the shared eigenbasis.
    """

    def __init__(self, scenario: Scenario, coefficients: Sequence, dims, rng):
        self.scenario = scenario
        self.index = build_index(scenario)
        self.coeffs = [float(c) for c in coefficients]
        self.dims = dims
        self.rng = rng
        for party in scenario.parties:
            for m in party.measurements:
                if len(party.outcome_labels(m)) != 2:
                    raise ModelError("seesaw supports binary outcomes only")
        self.shared = []
        for party in scenario.parties:
            names = {m for sub, _ in subcontexts(party) for m in sub}
            self.shared.append(names)

    def _init_model(self):
        """Random start. All shared measurements of a party are drawn diagonal
        in one random basis (so they commute exactly with each other); free
        measurements are then optimized inside the joint eigenspace blocks."""
        d_total = int(np.prod(self.dims))
        psi = self.rng.normal(size=d_total) + 1j * self.rng.normal(size=d_total)
        psi /= np.linalg.norm(psi)
        rho = np.outer(psi, psi.conj())
        projectors = {}
        self._blocks = {}
        for pidx, (party, d) in enumerate(zip(self.scenario.parties, self.dims)):
            fams = {}
            shared = sorted(self.shared[pidx])
            basis = _random_unitary(self.rng, d)
            bits = {m: self.rng.integers(0, 2, size=d) for m in shared}
            for m in party.measurements:
                o0, o1 = party.outcome_labels(m)
                if m in shared:
                    cols = basis[:, bits[m] == 1]
                    p1 = cols @ cols.conj().T if cols.size else np.zeros((d, d), dtype=complex)
                    fams[m] = {o0: np.eye(d) - p1, o1: p1}
                else:
                    p1, p0 = _random_projector_pair(self.rng, d)
                    fams[m] = {o0: p0, o1: p1}
            projectors[party.name] = fams
            if shared:
                groups: dict[tuple, list[int]] = {}
                for col in range(d):
                    groups.setdefault(tuple(int(bits[m][col]) for m in shared), []).append(col)
                self._blocks[party.name] = [basis[:, cols] for cols in groups.values()]
            else:
                self._blocks[party.name] = []
        model = QuantumModel(self.scenario, tuple(self.dims), rho, projectors)
        for pidx, party in enumerate(self.scenario.parties):
            for m in party.measurements:
                if m not in self.shared[pidx]:
                    self._restrict_to_blocks(model, party, m)
        return model

    def _restrict_to_blocks(self, model, party, meas):
        """Replace a free measurement by its best block-diagonal approximation
        so it commutes with every shared measurement."""
        if not self._blocks[party.name]:
            return
        fams = model.projectors[party.name]
        o0, o1 = party.outcome_labels(meas)
        h = fams[meas][o1]
        d = len(h)
        p1 = _blockwise_positive(self._blocks[party.name], h - 0.5 * np.eye(d))
        fams[meas] = {o0: np.eye(d) - p1, o1: p1}

    def bell_operator(self, model):
        scenario = self.scenario
        op = np.zeros((int(np.prod(self.dims)),) * 2, dtype=complex)
        for pos, (ctxs, outs) in enumerate(self.index.keys):
            c = self.coeffs[pos]
            if c == 0:
                continue
            mats = [
                _context_product(model.projectors[party.name], ctx, o)
                for party, ctx, o in zip(scenario.parties, ctxs, outs)]
            term = mats[0]
            for m in mats[1:]:
                term = np.kron(term, m)
            op += c * term
        return op

    def value(self, model):
        return float(np.real(np.trace(model.rho @ self.bell_operator(model))))

    def _update_state(self, model):
        g = self.bell_operator(model)
        w, v = np.linalg.eigh((g + g.conj().T) / 2)
        psi = v[:, -1]
        model.rho = np.outer(psi, psi.conj())

    def _update_measurement(self, model, pidx, meas):
        """Optimal binary projective update for one measurement, restricted to
        the commutant blocks when the party has shared measurements. Shared
        measurements themselves stay fixed within a restart."""
        if meas in self.shared[pidx]:
            return
        party = self.scenario.parties[pidx]
        fams = model.projectors[party.name]
        o0, o1 = party.outcome_labels(meas)
        d = self.dims[pidx]
        gain = {o0: np.zeros((d, d), dtype=complex), o1: np.zeros((d, d), dtype=complex)}
        for pos, (ctxs, outs) in enumerate(self.index.keys):
            c = self.coeffs[pos]
            if c == 0 or meas not in ctxs[pidx]:
                continue
            if len(self.scenario.parties) == 2:
                other_pidx = 1 - pidx
                other_party = self.scenario.parties[other_pidx]
                other_mat = _context_product(
                    model.projectors[other_party.name], ctxs[other_pidx], outs[other_pidx])
                if pidx == 0:
                    big = np.kron(np.eye(d), other_mat)
                else:
                    big = np.kron(other_mat, np.eye(d))
                red = _partial_trace(big @ model.rho, (self.dims[0], self.dims[1]), pidx)
            else:
                red = model.rho
            rest = np.eye(d, dtype=complex)
            own_out = None
            for m, o in zip(ctxs[pidx], outs[pidx]):
                if m == meas:
                    own_out = o
                else:
                    rest = rest @ fams[m][o]
            gain[own_out] += c * (rest @ red)
        h = gain[o1] - gain[o0]
        h = (h + h.conj().T) / 2
        if self._blocks[party.name]:
            p1 = _blockwise_positive(self._blocks[party.name], h)
        else:
            p1 = _positive_eigenspace(h)
        fams[meas] = {o0: np.eye(d) - p1, o1: p1}

    def run_restart(self, iterations=60, tol=1e-12):
        model = self._init_model()
        last = -np.inf
        for _ in range(iterations):
            self._update_state(model)
            for pidx, party in enumerate(self.scenario.parties):
                for m in party.measurements:
                    self._update_measurement(model, pidx, m)
            cur = self.value(model)
            if cur - last < tol:
                break
            last = cur
        self._update_state(model)
        return self.value(model), model


def violation_search(coefficients: Sequence, scenario: Scenario,
                     dims_options: Sequence[tuple[int, ...]] = ((2, 2), (2, 3), (2, 4)),
                     restarts: int = 20, iterations: int = 60,
                     seed: int = 0) -> SearchResult:
    """Seesaw lower bound on the quantum maximum of a linear functional.

    Random restarts cycle through the candidate local dimensions; the best
    model is re-evaluated through `evaluate` and the reported value never
    exceeds that re-evaluation (within 1e-9).
    """
    rng = np.random.default_rng(seed)
    best = SearchResult(-np.inf, None, restarts)
    for r in range(restarts):
        dims = tuple(dims_options[r % len(dims_options)])
        engine = _Seesaw(scenario, coefficients, dims, rng)
        try:
            value, model = engine.run_restart(iterations)
        except np.linalg.LinAlgError:
            continue
        best.history.append(value)
        if value > best.best_value:
            check = evaluate(model)
            recheck = float(sum(c * v for c, v in zip(map(float, coefficients), check.values)))
            if abs(recheck - value) > ATOL_BEHAVIOUR:
                value = recheck
            if value > best.best_value:
                best.best_value = value
                best.model = model
    return best
