"""Parsers and serializers for every on-disk artifact.

All exact formats are plain structured text with rationals written as
"num/den" or integers; decimal notation is rejected everywhere except
quantum model files. Serialization is canonical (fixed ordering, single
spaces), so parse -> serialize is byte-identical on canonical files and
the outputs work as diffable regression artifacts.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Sequence

import numpy as np

from ._linalg import primitive_int_vector
from .behaviour import Behaviour, MarginalBehaviour
from .fine import JointDistribution
from .lp import Decomposition, Separation
from .polytope import FacetInequality, HRep, VRep
from .quantum import QuantumModel
from .scenario import Party, Scenario, build_index, marginal_index


class ParseError(ValueError):
    def __init__(self, msg, line=None):
        super().__init__(msg if line is None else f"line {line}: {msg}")
        self.line = line


def parse_rational(token: str, line=None) -> Fraction:
    token = token.strip()
    if "." in token or "e" in token.lower():
        raise ParseError(f"decimal notation not allowed in exact files: {token!r}", line)
    try:
        return Fraction(token)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"malformed rational {token!r}", line)


def format_rational(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _content_lines(text: str):
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if line.strip():
            yield n, line


# ---------------------------------------------------------------------------
# Scenario files


def serialize_scenario(s: Scenario) -> str:
    out = []
    for p in s.parties:
        out.append(f"party {p.name}")
        for m, outs in zip(p.measurements, p.outcomes):
            out.append(f"measurement {m} : " + " ".join(outs))
        for ctx in p.contexts:
            out.append("context " + " ".join(ctx))
        out.append("")
    return "\n".join(out)


def parse_scenario(text: str) -> Scenario:
    parties = []
    current = None  # [name, measurements, outcomes, contexts]

    def finish():
        if current is not None:
            parties.append(Party(current[0], tuple(current[1]),
                                 tuple(tuple(o) for o in current[2]),
                                 tuple(tuple(c) for c in current[3])))

    for n, line in _content_lines(text):
        words = line.split()
        if words[0] == "party":
            if len(words) != 2:
                raise ParseError("party needs exactly one name", n)
            finish()
            current = [words[1], [], [], []]
        elif words[0] == "measurement":
            if current is None:
                raise ParseError("measurement before any party", n)
            if len(words) < 4 or words[2] != ":":
                raise ParseError("expected: measurement <name> : <outcome>...", n)
            current[1].append(words[1])
            current[2].append(words[3:])
        elif words[0] == "context":
            if current is None:
                raise ParseError("context before any party", n)
            current[3].append(words[1:])
        else:
            raise ParseError(f"unknown directive {words[0]!r}", n)
    finish()
    if not parties:
        raise ParseError("no parties declared")
    return Scenario(tuple(parties))


# ---------------------------------------------------------------------------
# Behaviour tables (rows = context pairs, columns = outcome tuples)


def _row_label(s: Scenario, ctxs) -> str:
    return "".join("".join(ctx) for ctx in ctxs)


def _column_label(outs) -> str:
    return "".join("".join(o) for o in outs)


def _table_blocks(s: Scenario):
    """Index positions grouped into blocks of rows sharing one column-label
    header, in canonical order."""
    index = build_index(s)
    rows = {}
    order = []
    for pos, (ctxs, outs) in enumerate(index.keys):
        if ctxs not in rows:
            rows[ctxs] = []
            order.append(ctxs)
        rows[ctxs].append((pos, _column_label(outs)))
    blocks = []
    for ctxs in order:
        labels = tuple(lbl for _, lbl in rows[ctxs])
        if not blocks or blocks[-1][0] != labels:
            blocks.append((labels, []))
        blocks[-1][1].append((ctxs, [p for p, _ in rows[ctxs]]))
    return blocks


def serialize_behaviour(b: Behaviour) -> str:
    s = b.scenario
    out = []
    for labels, rowlist in _table_blocks(s):
        out.append("outcomes " + " ".join(labels))
        for ctxs, positions in rowlist:
            entries = " ".join(format_rational(b.values[p]) for p in positions)
            out.append(f"{_row_label(s, ctxs)} {entries}")
    out.append("")
    return "\n".join(out)


def parse_behaviour(text: str, s: Scenario) -> Behaviour:
    index = build_index(s)
    expected_rows = {}
    for pos, (ctxs, outs) in enumerate(index.keys):
        expected_rows.setdefault(_row_label(s, ctxs), {})[_column_label(outs)] = pos

    values: dict[int, Fraction] = {}
    columns: list[str] | None = None
    seen_rows = set()
    for n, line in _content_lines(text):
        words = line.split()
        if words[0] == "outcomes":
            columns = words[1:]
            continue
        label = words[0]
        if label not in expected_rows:
            raise ParseError(f"unknown row label {label!r}", n)
        if label in seen_rows:
            raise ParseError(f"duplicate row {label!r}", n)
        seen_rows.add(label)
        if columns is None:
            raise ParseError("row before any outcomes header", n)
        cells = words[1:]
        row_cols = expected_rows[label]
        if set(columns) != set(row_cols):
            raise ParseError(f"outcomes header does not match row {label!r}", n)
        if len(cells) != len(columns):
            raise ParseError(f"row {label!r} has {len(cells)} cells, expected {len(columns)}", n)
        for col, cell in zip(columns, cells):
            values[row_cols[col]] = parse_rational(cell, n)
    missing = set(expected_rows) - seen_rows
    if missing:
        raise ParseError(f"missing rows: {sorted(missing)}")
    return Behaviour(s, tuple(values[i] for i in range(index.dimension)))


def serialize_marginal(mb: MarginalBehaviour) -> str:
    party = mb.party
    mindex = marginal_index(party)
    out = []
    last_labels = None
    for ctx in party.contexts:
        outs_list = party.context_outcomes(ctx)
        labels = tuple("".join(o) for o in outs_list)
        if labels != last_labels:
            out.append("outcomes " + " ".join(labels))
            last_labels = labels
        entries = " ".join(format_rational(mb.value(ctx, o)) for o in outs_list)
        out.append("".join(ctx) + " " + entries)
    out.append("")
    return "\n".join(out)


# ---------------------------------------------------------------------------
# Inequality files: one line of terms, paper style:
#     -p(110|A0B0B1) +p(101|A0B1B2) ... <= 1


def _position_labels(s: Scenario) -> dict[str, int]:
    index = build_index(s)
    table = {}
    for pos, (ctxs, outs) in enumerate(index.keys):
        table[f"{_column_label(outs)}|{_row_label(s, ctxs)}"] = pos
    return table


def serialize_inequality(f: FacetInequality, s: Scenario) -> str:
    index = build_index(s)
    terms = []
    for pos, c in enumerate(f.coefficients):
        if c == 0:
            continue
        ctxs, outs = index.key_of(pos)
        label = f"p({_column_label(outs)}|{_row_label(s, ctxs)})"
        if c == 1:
            terms.append(f"+{label}")
        elif c == -1:
            terms.append(f"-{label}")
        else:
            terms.append(f"{c:+d}{label}")
    head = f"# set {f.provenance}\n" if f.provenance else ""
    return head + " ".join(terms) + f" <= {format_rational(Fraction(f.bound))}\n"


def parse_inequality(text: str, s: Scenario) -> FacetInequality:
    provenance = ""
    for raw in text.splitlines():
        if raw.startswith("# set "):
            provenance = raw[len("# set "):].strip()
    lines = list(_content_lines(text))
    if len(lines) != 1:
        raise ParseError("inequality file must contain exactly one expression line")
    n, line = lines[0]
    if "<=" not in line:
        raise ParseError("missing <= bound", n)
    lhs, rhs = line.rsplit("<=", 1)
    bound = parse_rational(rhs, n)
    labels = _position_labels(s)
    coeffs = [Fraction(0)] * build_index(s).dimension
    for term in lhs.split():
        if "p(" not in term or not term.endswith(")"):
            raise ParseError(f"malformed term {term!r}", n)
        coeff_str, label = term.split("p(", 1)
        label = label[:-1]
        if coeff_str in ("+", ""):
            coeff = Fraction(1)
        elif coeff_str == "-":
            coeff = Fraction(-1)
        else:
            coeff = parse_rational(coeff_str, n)
        if label not in labels:
            raise ParseError(f"unknown coordinate {label!r}", n)
        coeffs[labels[label]] += coeff
    vec = primitive_int_vector(list(coeffs) + [bound])
    return FacetInequality(vec[:-1], vec[-1], provenance)


# ---------------------------------------------------------------------------
# H-rep / V-rep files


def serialize_hrep(h: HRep) -> str:
    out = [f"hrep dimension {h.dimension} equalities {len(h.equalities)} "
           f"inequalities {len(h.inequalities)}"]
    for c, r in h.equalities:
        out.append("eq " + " ".join(str(x) for x in c) + " = " + str(r))
    for c, r in h.inequalities:
        out.append("ineq " + " ".join(str(x) for x in c) + " <= " + str(r))
    out.append("")
    return "\n".join(out)


def parse_hrep(text: str) -> HRep:
    lines = list(_content_lines(text))
    if not lines:
        raise ParseError("empty H-rep file")
    n, header = lines[0]
    words = header.split()
    if words[0] != "hrep" or len(words) != 7:
        raise ParseError("expected: hrep dimension <d> equalities <n> inequalities <m>", n)
    dim = int(words[2])
    eqs, ineqs = [], []
    for n, line in lines[1:]:
        words = line.split()
        if words[0] == "eq":
            if words[-2] != "=":
                raise ParseError("equality row must end with '= rhs'", n)
            eqs.append((tuple(parse_rational(w, n) for w in words[1:-2]),
                        parse_rational(words[-1], n)))
        elif words[0] == "ineq":
            if words[-2] != "<=":
                raise ParseError("inequality row must end with '<= rhs'", n)
            ineqs.append((tuple(parse_rational(w, n) for w in words[1:-2]),
                          parse_rational(words[-1], n)))
        else:
            raise ParseError(f"unknown row kind {words[0]!r}", n)
    return HRep.build(dim, eqs, ineqs)


def serialize_vrep(v: VRep) -> str:
    out = [f"vrep dimension {v.dimension} vertices {len(v.vertices)}"]
    for vert in v.vertices:
        out.append("vertex " + " ".join(format_rational(x) for x in vert))
    out.append("")
    return "\n".join(out)


def parse_vrep(text: str) -> VRep:
    lines = list(_content_lines(text))
    if not lines:
        raise ParseError("empty V-rep file")
    n, header = lines[0]
    words = header.split()
    if words[0] != "vrep":
        raise ParseError("expected: vrep dimension <d> vertices <n>", n)
    dim = int(words[2])
    verts = []
    for n, line in lines[1:]:
        words = line.split()
        if words[0] != "vertex":
            raise ParseError(f"unknown row kind {words[0]!r}", n)
        verts.append(tuple(parse_rational(w, n) for w in words[1:]))
    return VRep.build(dim, verts)


# ---------------------------------------------------------------------------
# Vertex cache files


def serialize_vertex_cache(s: Scenario, kinds: Sequence[str], matrix) -> str:
    out = [f"vertexcache scenario {s.digest()} classes " + " ".join(kinds)]
    for row in matrix:
        out.append("vertex " + " ".join(format_rational(x) for x in row))
    out.append("")
    return "\n".join(out)


def parse_vertex_cache(text: str, s: Scenario):
    lines = list(_content_lines(text))
    n, header = lines[0]
    words = header.split()
    if words[0] != "vertexcache" or words[1] != "scenario":
        raise ParseError("expected: vertexcache scenario <digest> classes ...", n)
    if words[2] != s.digest():
        raise ParseError(f"cache was built for scenario {words[2]}, not {s.digest()}", n)
    kinds = tuple(words[4:])
    matrix = []
    for n, line in lines[1:]:
        words = line.split()
        if words[0] != "vertex":
            raise ParseError(f"unknown row kind {words[0]!r}", n)
        matrix.append(tuple(parse_rational(w, n) for w in words[1:]))
    return kinds, matrix


# ---------------------------------------------------------------------------
# Certificates


def serialize_certificate(cert, s: Scenario | None = None) -> str:
    if isinstance(cert, Decomposition):
        out = ["certificate decomposition"]
        for idx, w, point in zip(cert.indices, cert.weights, cert.points):
            out.append(f"weight {idx} {format_rational(w)}")
            out.append("vector " + " ".join(format_rational(x) for x in point))
        out.append("")
        return "\n".join(out)
    if isinstance(cert, Separation):
        out = ["certificate separation"]
        if s is not None and len(cert.coefficients) == build_index(s).dimension:
            ineq = FacetInequality(cert.coefficients, cert.bound)
            out.append("expression " + serialize_inequality(ineq, s).strip())
        out.append("coeffs " + " ".join(str(c) for c in cert.coefficients))
        out.append(f"bound {cert.bound}")
        out.append(f"value {format_rational(cert.value_at_query)}")
        out.append("")
        return "\n".join(out)
    raise TypeError(f"cannot serialize {type(cert).__name__}")


def parse_certificate(text: str):
    lines = list(_content_lines(text))
    n, header = lines[0]
    kind = header.split()[-1]
    if kind == "decomposition":
        indices, weights, points = [], [], []
        for n, line in lines[1:]:
            words = line.split()
            if words[0] == "weight":
                indices.append(int(words[1]))
                weights.append(parse_rational(words[2], n))
            elif words[0] == "vector":
                points.append(tuple(parse_rational(w, n) for w in words[1:]))
            else:
                raise ParseError(f"unknown row {words[0]!r}", n)
        return Decomposition(tuple(indices), tuple(weights), tuple(points))
    if kind == "separation":
        coeffs = bound = value = None
        for n, line in lines[1:]:
            words = line.split()
            if words[0] == "coeffs":
                coeffs = tuple(int(w) for w in words[1:])
            elif words[0] == "bound":
                bound = int(words[1])
            elif words[0] == "value":
                value = parse_rational(words[1], n)
            elif words[0] == "expression":
                continue
            else:
                raise ParseError(f"unknown row {words[0]!r}", n)
        if coeffs is None or bound is None or value is None:
            raise ParseError("separation certificate missing fields")
        return Separation(coeffs, bound, value)
    raise ParseError(f"unknown certificate kind {kind!r}", n)


# ---------------------------------------------------------------------------
# Joint distributions (global assignment -> weight)


def serialize_joint(w: JointDistribution) -> str:
    s = w.scenario
    out = [f"joint {w.mode}"]
    for key, weight in w.support:
        cells = []
        for party, part in zip(s.parties, key):
            if w.mode == "per-measurement":
                for m, o in zip(party.measurements, part):
                    cells.append(f"{m}={o}")
            else:
                for ctx, outs in zip(party.contexts, part):
                    cells.append("".join(ctx) + "=" + "".join(outs))
        out.append(" ".join(cells) + " : " + format_rational(weight))
    out.append("")
    return "\n".join(out)


def parse_joint(text: str, s: Scenario) -> JointDistribution:
    lines = list(_content_lines(text))
    n, header = lines[0]
    words = header.split()
    if words[0] != "joint" or len(words) != 2:
        raise ParseError("expected: joint <per-measurement|per-context>", n)
    mode = words[1]
    support = []
    for n, line in lines[1:]:
        if ":" not in line:
            raise ParseError("missing ': weight'", n)
        lhs, rhs = line.rsplit(":", 1)
        weight = parse_rational(rhs, n)
        cells = dict(c.split("=", 1) for c in lhs.split())
        key = []
        for party in s.parties:
            if mode == "per-measurement":
                try:
                    part = tuple(cells[m] for m in party.measurements)
                except KeyError as e:
                    raise ParseError(f"missing assignment for measurement {e}", n)
                for m, o in zip(party.measurements, part):
                    if o not in party.outcome_labels(m):
                        raise ParseError(f"invalid outcome {o!r} for {m}", n)
            else:
                part = []
                for ctx in party.contexts:
                    label = "".join(ctx)
                    if label not in cells:
                        raise ParseError(f"missing assignment for context {label}", n)
                    text_out = cells[label]
                    matched = None
                    for outs in party.context_outcomes(ctx):
                        if "".join(outs) == text_out:
                            matched = outs
                            break
                    if matched is None:
                        raise ParseError(f"invalid outcomes {text_out!r} for context {label}", n)
                    part.append(matched)
                part = tuple(part)
            key.append(part)
        support.append((tuple(key), weight))
    return JointDistribution(s, mode, tuple(sorted(support)))


# ---------------------------------------------------------------------------
# Quantum model files (the one place decimals are allowed)


def _format_complex_row(row) -> str:
    return " ".join(f"{z.real:.17g} {z.imag:.17g}" for z in row)


def _parse_complex_row(words, n):
    if len(words) % 2:
        raise ParseError("complex rows need re/im pairs", n)
    return [complex(float(words[2 * i]), float(words[2 * i + 1]))
            for i in range(len(words) // 2)]


def serialize_model(m: QuantumModel) -> str:
    out = ["model dims " + " ".join(str(d) for d in m.dims)]
    out.append("state")
    for row in np.asarray(m.rho):
        out.append(_format_complex_row(row))
    for party in m.scenario.parties:
        for meas in party.measurements:
            for o in party.outcome_labels(meas):
                out.append(f"projector {party.name} {meas} {o}")
                for row in np.asarray(m.projectors[party.name][meas][o]):
                    out.append(_format_complex_row(row))
    out.append("")
    return "\n".join(out)


def parse_model(text: str, s: Scenario) -> QuantumModel:
    lines = list(_content_lines(text))
    n, header = lines[0]
    words = header.split()
    if words[0] != "model" or words[1] != "dims":
        raise ParseError("expected: model dims <d> <d>...", n)
    dims = tuple(int(w) for w in words[2:])
    if len(dims) != len(s.parties):
        raise ParseError("dims do not match the scenario's party count", n)
    rho_rows = []
    projmats: dict = {p.name: {} for p in s.parties}
    target = None  # (kind, party, meas, outcome, rows, expected_dim)
    pending: list = []

    def flush():
        nonlocal pending, target
        if target is None:
            return
        kind = target[0]
        if kind == "state":
            rho_rows.extend(pending)
        else:
            _, pname, meas, out, d = target
            projmats[pname].setdefault(meas, {})[out] = np.array(pending)
        pending = []

    total = int(np.prod(dims))
    for n, line in lines[1:]:
        words = line.split()
        if words[0] == "state":
            flush()
            target = ("state",)
        elif words[0] == "projector":
            flush()
            pname, meas, out = words[1], words[2], words[3]
            d = dims[[p.name for p in s.parties].index(pname)]
            target = ("projector", pname, meas, out, d)
        else:
            pending.append(_parse_complex_row(words, n))
    flush()
    rho = np.array(rho_rows)
    if rho.shape != (total, total):
        raise ParseError(f"state must be {total}x{total}")
    model = QuantumModel(s, dims, rho, projmats)
    model.validate()
    return model
