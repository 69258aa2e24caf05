from pathlib import Path

import pytest

from bellpoly import cli, io
from bellpoly.reproduce import fixture_text


@pytest.fixture()
def workdir(tmp_path):
    for name in ("path.scenario", "path_gap.behaviour", "cycle4.scenario",
                 "path_lnd.ineq", "path_lgnd.ineq", "chsh.scenario",
                 "cycle3.scenario", "cycle3_lnc.ineq"):
        (tmp_path / name).write_text(fixture_text(name))
    return tmp_path


def run(args):
    return cli.main([str(a) for a in args])


def test_vertices_command(workdir, capsys):
    rc = run(["vertices", "--scenario", workdir / "path.scenario",
              "--classes", "g,g", "--out-dir", workdir / "out"])
    assert rc == 0
    assert "64 joint vertices" in capsys.readouterr().out
    rc = run(["vertices", "--scenario", workdir / "cycle4.scenario", "--classes", "nd,nd"])
    assert rc == 0
    assert "96 joint vertices" in capsys.readouterr().out  # 4 x 24


def test_facets_command_writes_diffable_file(workdir, capsys):
    out = workdir / "out"
    rc = run(["facets", "--scenario", workdir / "path.scenario",
              "--set", "L_nd", "--out-dir", out])
    assert rc == 0
    assert "48 inequalities" in capsys.readouterr().out
    files = list(out.rglob("facets_L_nd.hrep"))
    assert len(files) == 1
    first = files[0].read_text()
    # determinism: run again, byte-identical artifact
    rc = run(["facets", "--scenario", workdir / "path.scenario",
              "--set", "L_nd", "--out-dir", out])
    assert rc == 0
    assert files[0].read_text() == first
    h = io.parse_hrep(first)
    ineq = io.parse_inequality(fixture_text("path_lnd.ineq"),
                               io.parse_scenario(fixture_text("path.scenario")))
    from bellpoly.polytope import hrep_contains_functional
    from fractions import Fraction
    assert hrep_contains_functional(h, ineq.coefficients, Fraction(ineq.bound))


def test_facets_command_cycle3_lnc(workdir, capsys):
    out = workdir / "out"
    rc = run(["facets", "--scenario", workdir / "cycle3.scenario",
              "--set", "L_nc", "--out-dir", out])
    assert rc == 0
    files = list(out.rglob("facets_L_nc.hrep"))
    h = io.parse_hrep(files[0].read_text())
    ineq = io.parse_inequality(fixture_text("cycle3_lnc.ineq"),
                               io.parse_scenario(fixture_text("cycle3.scenario")))
    from bellpoly.polytope import hrep_contains_functional
    from fractions import Fraction
    assert hrep_contains_functional(h, ineq.coefficients, Fraction(ineq.bound))


def test_classify_command(workdir, capsys):
    rc = run(["classify", "--scenario", workdir / "path.scenario",
              "--behaviour", workdir / "path_gap.behaviour",
              "--labels", "NSND,L_ND,L_nd,L_nd&NC",
              "--out-dir", workdir / "out"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "NSND: yes" in out
    assert "L_ND: yes" in out
    assert "L[nd,nd]: no" in out
    assert "L_nd&NC: no" in out
    certs = list((workdir / "out").rglob("certificate_*.txt"))
    assert certs, "classify must write its certificates"


def test_fine_command(workdir, capsys):
    rc = run(["fine", "--scenario", workdir / "path.scenario",
              "--behaviour", workdir / "path_gap.behaviour",
              "--mode", "per-context", "--out-dir", workdir / "out"])
    assert rc == 0
    assert "reproduces the behaviour exactly" in capsys.readouterr().out
    rc = run(["fine", "--scenario", workdir / "path.scenario",
              "--behaviour", workdir / "path_gap.behaviour",
              "--mode", "per-measurement"])
    assert rc == 1  # no per-measurement distribution exists for this behaviour
    assert "no per-measurement joint distribution" in capsys.readouterr().out


def test_quantum_command(workdir, capsys):
    rc = run(["quantum", "--scenario", workdir / "path.scenario",
              "--inequality", workdir / "path_lgnd.ineq",
              "--restarts", "8", "--seed", "3", "--dims", "2x2,2x4",
              "--out-dir", workdir / "out"])
    assert rc == 0
    assert "quantum violation found" in capsys.readouterr().out
    assert list((workdir / "out").rglob("model.txt"))


def test_input_errors_exit_2(workdir, capsys):
    rc = run(["classify", "--scenario", workdir / "path.scenario",
              "--behaviour", workdir / "path.scenario"])
    assert rc == 2
    rc = run(["vertices", "--scenario", workdir / "missing.scenario", "--classes", "g,g"])
    assert rc == 2


def test_resource_cap_exit_3(workdir):
    rc = run(["facets", "--scenario", workdir / "path.scenario",
              "--set", "L_G", "--ray-limit", "3"])
    assert rc == 3


def test_tampered_behaviour_fails_classification(workdir, capsys):
    text = fixture_text("path_gap.behaviour").replace(
        "A0B0B1 0 1/2 1/2 0 0 0 0 0", "A0B0B1 0 0 1/2 1/2 0 0 0 0")
    (workdir / "tampered.behaviour").write_text(text)
    rc = run(["classify", "--scenario", workdir / "path.scenario",
              "--behaviour", workdir / "tampered.behaviour", "--labels", "NSND"])
    assert rc == 0
    assert "NSND: no" in capsys.readouterr().out


def test_reproduce_skip_quantum(workdir, capsys, monkeypatch):
    # restrict to the fast deterministic items for the CLI smoke path
    from bellpoly import reproduce as rep
    monkeypatch.setattr(rep, "ITEMS", [
        ("table1-classification", dict(rep.ITEMS)["table1-classification"]),
        ("table2-mixture", dict(rep.ITEMS)["table2-mixture"]),
        ("quantum-violation", dict(rep.ITEMS)["quantum-violation"]),
    ])
    rc = run(["reproduce", "--skip", "quantum", "--out-dir", workdir / "out"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "table1-classification" in out and "quantum-violation" not in out
    assert "2/2 items passed" in out
