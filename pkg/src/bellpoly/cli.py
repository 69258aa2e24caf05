"""Command-line interface.

Subcommands mirror the module seams: vertices / facets / classify / fine /
quantum / reproduce. Every artifact a run claims (certificates, H/V-rep
files, models) is written under the run directory, keyed by the scenario
digest, and referenced from the run report.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 resource cap.
"""

from __future__ import annotations

import argparse
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import fine, io, lp, polytope, quantum, reproduce, sets
from .behaviour import BehaviourError, SignalingError
from .scenario import Scenario, ScenarioError, build_index
from .vertices import joint_vertices, vertex_matrix

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_INPUT = 2
EXIT_RESOURCE = 3


class _Run:
    """Collects report lines and artifact files for one invocation."""

    def __init__(self, command: str, scenario: Scenario | None, out_dir: str | None):
        self.command = command
        self.lines = [f"command {command}"]
        self.start = time.time()
        self.dir = None
        if out_dir is not None:
            digest = scenario.digest() if scenario is not None else "global"
            self.dir = Path(out_dir) / digest
            self.dir.mkdir(parents=True, exist_ok=True)
        if scenario is not None:
            self.lines.append(f"scenario {scenario.digest()}")

    def note(self, line: str):
        print(line)
        self.lines.append(line)

    def artifact(self, name: str, text: str):
        if self.dir is None:
            return
        path = self.dir / name
        path.write_text(text)
        self.lines.append(f"artifact {path}")

    def finish(self, status: int):
        self.lines.append(f"elapsed {time.time() - self.start:.2f}s")
        self.lines.append(f"exit {status}")
        if self.dir is not None:
            (self.dir / f"{self.command}.report.txt").write_text("\n".join(self.lines) + "\n")
        return status


def _load_scenario(path: str) -> Scenario:
    return io.parse_scenario(Path(path).read_text())


def _load_behaviour(path: str, scenario: Scenario):
    return io.parse_behaviour(Path(path).read_text(), scenario)


def cmd_vertices(args) -> int:
    scenario = _load_scenario(args.scenario)
    kinds = [k.strip().lower() for k in args.classes.split(",")]
    if len(kinds) == 1 and len(scenario.parties) == 2:
        kinds = kinds * 2
    run = _Run("vertices", scenario, args.out_dir)
    verts = vertex_matrix(joint_vertices(scenario, kinds, args.ray_limit))
    run.note(f"{len(verts)} joint vertices for classes {','.join(kinds)}")
    run.artifact(f"vertices_{'_'.join(kinds)}.cache",
                 io.serialize_vertex_cache(scenario, kinds, verts))
    return run.finish(EXIT_OK)


def cmd_facets(args) -> int:
    scenario = _load_scenario(args.scenario)
    run = _Run("facets", scenario, args.out_dir)
    hrep = sets.hrep_set(scenario, args.set, args.ray_limit)
    run.note(f"set {args.set}: {len(hrep.equalities)} equalities, "
             f"{len(hrep.inequalities)} inequalities")
    safe = args.set.replace("[", "_").replace("]", "").replace(",", "_").replace("&", "_and_")
    run.artifact(f"facets_{safe}.hrep", io.serialize_hrep(hrep))
    return run.finish(EXIT_OK)


def cmd_classify(args) -> int:
    scenario = _load_scenario(args.scenario)
    behaviour = _load_behaviour(args.behaviour, scenario)
    labels = [lb.strip() for lb in args.labels.split(",")] if args.labels else None
    run = _Run("classify", scenario, args.out_dir)
    composite = [lb for lb in (labels or []) if "&" in lb]
    atomic = [lb for lb in (labels or []) if "&" not in lb]
    for comp in composite:
        atomic.extend(part.strip() for part in comp.split("&"))
    report = sets.classify(behaviour, atomic or None, args.ray_limit)
    for label, verdict in report.verdicts.items():
        run.note(f"{label}: {'yes' if verdict.member else 'no'}")
        cert = verdict.certificate
        if isinstance(cert, (lp.Decomposition, lp.Separation)):
            safe = label.replace("[", "_").replace("]", "").replace(",", "_")
            run.artifact(f"certificate_{safe}.txt", io.serialize_certificate(cert, scenario))
    for comp in composite:
        parts = [p.strip() for p in comp.split("&")]
        run.note(f"{comp}: {'yes' if report.intersection(parts) else 'no'}")
    return run.finish(EXIT_OK)


def cmd_fine(args) -> int:
    scenario = _load_scenario(args.scenario)
    behaviour = _load_behaviour(args.behaviour, scenario)
    run = _Run("fine", scenario, args.out_dir)
    kinds = ("nc", "nc") if args.mode == "per-measurement" else ("g", "g")
    verts = joint_vertices(scenario, kinds, args.ray_limit)
    cert = lp.membership(behaviour.values, vertex_matrix(verts))
    if isinstance(cert, lp.Separation):
        run.note(f"no {args.mode} joint distribution exists; separation value "
                 f"{io.format_rational(cert.value_at_query)} > {cert.bound}")
        run.artifact("separation.txt", io.serialize_certificate(cert, scenario))
        return run.finish(EXIT_VERIFICATION)
    if args.mode == "per-measurement":
        omega = fine.joint_from_nc_decomposition(cert, verts, scenario)
    else:
        omega = fine.joint_from_g_decomposition(cert, verts, scenario)
    back = fine.behaviour_from_joint(omega)
    if back != behaviour:
        run.note("round trip failed to reproduce the behaviour")
        return run.finish(EXIT_VERIFICATION)
    run.note(f"{args.mode} joint distribution with {len(omega.support)} support points; "
             "marginalization reproduces the behaviour exactly")
    run.artifact(f"joint_{args.mode}.txt", io.serialize_joint(omega))
    return run.finish(EXIT_OK)


def cmd_quantum(args) -> int:
    scenario = _load_scenario(args.scenario)
    ineq = io.parse_inequality(Path(args.inequality).read_text(), scenario)
    run = _Run("quantum", scenario, args.out_dir)
    dims_options = tuple(tuple(int(x) for x in d.split("x")) for d in args.dims.split(","))
    res = quantum.violation_search([float(c) for c in ineq.coefficients], scenario,
                                   dims_options=dims_options, restarts=args.restarts,
                                   iterations=args.iterations, seed=args.seed)
    run.note(f"best value {res.best_value:.10f} (bound {ineq.bound}) over "
             f"{res.restarts} restarts, seed {args.seed}")
    if res.model is not None:
        run.artifact("model.txt", io.serialize_model(res.model))
    if res.best_value > float(ineq.bound) + 1e-6:
        run.note("quantum violation found")
        return run.finish(EXIT_OK)
    run.note("no violation above the bound at this budget")
    return run.finish(EXIT_VERIFICATION)


def cmd_reproduce(args) -> int:
    run = _Run("reproduce", None, args.out_dir)
    skip = tuple(s.strip() for s in args.skip.split(",")) if args.skip else ()
    results = reproduce.run_suite(skip=skip, workers=args.workers)
    failed = [r for r in results if not r.ok]
    for r in results:
        run.note(r.line())
        for d in r.details:
            run.note("    " + d)
    run.note(f"{len(results) - len(failed)}/{len(results)} items passed")
    return run.finish(EXIT_OK if not failed else EXIT_VERIFICATION)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bellpoly",
        description="Exact correlation polytopes for Bell scenarios with "
                    "locally compatible measurements")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario=True):
        if scenario:
            p.add_argument("--scenario", required=True, help="scenario file")
        p.add_argument("--out-dir", default=None, help="run directory for artifacts")
        p.add_argument("--ray-limit", type=int, default=200_000,
                       help="intermediate ray cap for the conversion engine")

    p = sub.add_parser("vertices", help="enumerate joint local vertices")
    common(p)
    p.add_argument("--classes", required=True,
                   help="response-function classes, e.g. nd,nd or g,g")
    p.set_defaults(fn=cmd_vertices)

    p = sub.add_parser("facets", help="H-representation of a named set")
    common(p)
    p.add_argument("--set", required=True,
                   help="set label: L_nc, L_nd, L_G, L[i,j], L_ND, NS, NSND, NC, "
                        "or intersections like 'L_nd&NC'")
    p.set_defaults(fn=cmd_facets)

    p = sub.add_parser("classify", help="set membership of a behaviour, with certificates")
    common(p)
    p.add_argument("--behaviour", required=True, help="behaviour table file")
    p.add_argument("--labels", default=None,
                   help="comma-separated labels (default: the full zoo)")
    p.set_defaults(fn=cmd_classify)

    p = sub.add_parser("fine", help="joint-distribution form of a local decomposition")
    common(p)
    p.add_argument("--behaviour", required=True)
    p.add_argument("--mode", choices=("per-measurement", "per-context"),
                   default="per-context")
    p.set_defaults(fn=cmd_fine)

    p = sub.add_parser("quantum", help="seesaw search for a quantum violation")
    common(p)
    p.add_argument("--inequality", required=True, help="inequality file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=24)
    p.add_argument("--iterations", type=int, default=60)
    p.add_argument("--dims", default="2x2,2x3,2x4",
                   help="local dimensions per restart, e.g. 2x2,2x4")
    p.set_defaults(fn=cmd_quantum)

    p = sub.add_parser("reproduce", help="run the full reproduction suite")
    p.add_argument("--out-dir", default=None)
    p.add_argument("--skip", default=None,
                   help="comma-separated item name fragments to skip, e.g. quantum")
    p.add_argument("--workers", type=int, default=1,
                   help="run suite items in this many processes")
    p.set_defaults(fn=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except polytope.RayLimitError as exc:
        print(f"resource cap: {exc} (processed {exc.processed}/{exc.total} rows, "
              f"{exc.rays} rays)", file=sys.stderr)
        return EXIT_RESOURCE
    except (io.ParseError, ScenarioError, BehaviourError, SignalingError,
            FileNotFoundError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
