import csv
import io
import json
import math

import numpy as np
import pytest

from tetmodal import OutOfDomain
from tetmodal.harness.artifacts import ArtifactError, load_artifact, read_values, write_artifact
from tetmodal.harness.cli import main
from tetmodal.harness.slicing import slice_at
from tetmodal.harness.solver import SolverConfig, descent_solver
from tetmodal.harness.specfile import parse_spec

STANDARD = 'schema_version: "1"\n'
NESTED = """\
schema_version: "1"
root:
  children:
  - {anchor: minor, rotation: 90, scale: 0.25}
"""


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture()
def bundle(tmp_path, capsys):
    spec = tmp_path / "spec.yaml"
    spec.write_text(STANDARD)
    code, _, _ = run(capsys, "generate", "--spec", spec, "--out", tmp_path / "art")
    assert code == 0
    return tmp_path / "art"


def test_generate_writes_the_bundle(bundle):
    assert sorted(p.name for p in bundle.iterdir()) == ["mesh_tets.csv", "mesh_vertices.csv", "metadata.json", "values.csv"]
    meta = json.loads((bundle / "metadata.json").read_text())
    assert meta["n_vertices"] == 76 and meta["n_tets"] == 192
    verts = rows((bundle / "mesh_vertices.csv").read_text())
    vals = rows((bundle / "values.csv").read_text())
    (i,) = [r["index"] for r in verts if (r["x"], r["y"], r["z"]) == ("1", "0", "0")]
    assert float(vals[int(i)]["psi2"]) == 0.0
    (j,) = [r["index"] for r in verts if (r["x"], r["y"], r["z"]) == ("3", "0", "0")]
    assert float(vals[int(j)]["psi2"]) == 0.5


def test_values_round_trip_bit_exactly(bundle):
    _, problem = load_artifact(bundle)
    stored = read_values(bundle)
    np.testing.assert_array_equal(stored[:, :2], problem.psi.values)
    np.testing.assert_array_equal(stored[:, 2:], problem.objectives.values)


def test_no_temp_files_left(bundle):
    assert not [p for p in bundle.iterdir() if p.name.startswith(".")]


def test_generate_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text('schema_version: "1"\nroot:\n  children:\n  - {scale: 0.3}\n')
    code, _, err = run(capsys, "generate", "--spec", bad, "--out", tmp_path / "x")
    assert code == 3 and "IrrationalScale" in err

    bad.write_text('schema_version: "1"\nroot:\n  children:\n  - {rotation: 45}\n')
    code, _, err = run(capsys, "generate", "--spec", bad, "--out", tmp_path / "x")
    assert code == 3 and "InvalidNesting" in err

    bad.write_text('schema_version: "1"\nbogus: 1\n')
    code, _, err = run(capsys, "generate", "--spec", bad, "--out", tmp_path / "x")
    assert code == 2 and "bad.yaml:2:1" in err

    code, _, err = run(capsys, "generate", "--spec", tmp_path / "missing.yaml", "--out", tmp_path / "x")
    assert code == 4


def test_spacing_override(tmp_path, capsys):
    spec = tmp_path / "spec.yaml"
    spec.write_text(STANDARD)
    code, _, _ = run(capsys, "generate", "--spec", spec, "--out", tmp_path / "a", "--spacing-override", "0.5,0.5,0.5")
    assert code == 0
    _, problem = load_artifact(tmp_path / "a")
    assert tuple(problem.mesh.spacing) == (0.5, 0.5, 0.5)
    code, _, err = run(capsys, "generate", "--spec", spec, "--out", tmp_path / "b", "--spacing-override", "0.3,1,1")
    assert code == 3 and "NonDivisibleExtent" in err


def test_tampered_values_are_detected(bundle):
    path = bundle / "values.csv"
    path.write_text(path.read_text().replace("\n0,0,", "\n0,1,", 1))
    with pytest.raises(ArtifactError):
        load_artifact(bundle)


def test_evaluate(bundle, tmp_path, capsys):
    pts = tmp_path / "pts.csv"
    pts.write_text("x,y,z\n1,0,0\n3,0,0.5\n5,0,0\n")
    code, out, _ = run(capsys, "evaluate", bundle, pts, "--raw-psi")
    assert code == 0
    got = rows(out)
    assert [r["status"] for r in got] == ["ok", "ok", "OutOfDomain"]
    assert float(got[0]["f1"]) == 0.0 and float(got[0]["f2"]) == 0.0
    assert float(got[1]["psi2"]) == 1.25
    assert float(got[1]["f1"]) == pytest.approx((0.5 + 1.25) / math.sqrt(2), abs=1e-12)
    assert got[2]["f1"] == ""

    code, _, err = run(capsys, "evaluate", bundle, pts, "--strict")
    assert code == 4 and "1 of 3" in err


def test_evaluate_empty_input(bundle, tmp_path, capsys):
    pts = tmp_path / "empty.csv"
    pts.write_text("")
    code, out, _ = run(capsys, "evaluate", bundle, pts)
    assert code == 0 and out == "x,y,z,f1,f2,status\n"


def test_evaluate_reproduces_vertex_values(bundle, tmp_path, capsys):
    _, problem = load_artifact(bundle)
    pts = tmp_path / "verts.csv"
    pts.write_text((bundle / "mesh_vertices.csv").read_text().replace("index,x,y,z,kind", "i,x,y,z,k"))
    # strip index and kind columns
    lines = [",".join(l.split(",")[1:4]) for l in pts.read_text().splitlines()]
    pts.write_text("\n".join(lines) + "\n")
    code, out, _ = run(capsys, "evaluate", bundle, pts, "--raw-psi")
    assert code == 0
    got = rows(out)
    stored = rows((bundle / "values.csv").read_text())
    for g, s in zip(got, stored, strict=True):
        assert (g["f1"], g["f2"], g["psi1"], g["psi2"]) == (s["f1"], s["f2"], s["psi1"], s["psi2"])


def test_slice(bundle, capsys):
    code, out, _ = run(capsys, "slice", bundle, "--z", "0")
    assert code == 0
    got = rows(out)
    at = {(r["x"], r["y"]): r for r in got}
    assert float(at[("1", "0")]["psi2"]) == 0.0
    assert float(at[("3", "0")]["psi2"]) == 0.5
    assert {r["source"] for r in got} == {"vertex"}

    code, out, _ = run(capsys, "slice", bundle, "--z", "0.5")
    got = rows(out)
    assert float({(r["x"], r["y"]): r for r in got}[("3", "0")]["psi2"]) == 1.25
    assert "edge" in {r["source"] for r in got}

    code, out, _ = run(capsys, "slice", bundle, "--z", "1")
    got = rows(out)
    low = min(float(r["psi2"]) for r in got)
    assert low == 0.0
    assert [(r["x"], r["y"]) for r in got if float(r["psi2"]) == low] == [("1", "0")]

    code, _, _ = run(capsys, "slice", bundle, "--z", "1.5")
    assert code == 4


def test_slice_points_match_interpolation(nested):
    for z in (0.0, 0.3, 0.625, 1.0):
        s = slice_at(nested, z)
        assert np.all(s.points[:, 2] == z)
        np.testing.assert_allclose(s.psi, nested.psi.evaluate(s.points), atol=1e-12)
        np.testing.assert_allclose(s.f, nested.evaluate(s.points), atol=1e-12)
    with pytest.raises(OutOfDomain):
        slice_at(nested, -0.5)


def test_analyze(bundle, tmp_path, capsys):
    code, out, _ = run(capsys, "analyze", bundle, "--out", tmp_path / "report")
    assert code == 0
    assert "modes: 2" in out and "depth: 2" in out
    sigs = rows((tmp_path / "report" / "signatures.csv").read_text())
    sizes = sorted(len(r["modes"].split()) for r in sigs)
    assert sizes == [1, 1, 2]
    assert sum(float(r["volume"]) for r in sigs) == pytest.approx(8.0)
    assert len(rows((tmp_path / "report" / "vertex_signatures.csv").read_text())) == 76
    assert len(rows((tmp_path / "report" / "inclusions.csv").read_text())) == 2


def test_analyze_single_optimum_and_nested(tmp_path, capsys):
    single = tmp_path / "single.yaml"
    single.write_text(
        'schema_version: "1"\nroot:\n  primitive:\n    optima:\n'
        "    - {position: [1, 0], base_value: 0, slope: 1, rank: 1, persists_at_top: true}\n"
    )
    nested = tmp_path / "nested.yaml"
    nested.write_text(NESTED)
    for name, spec in (("s", single), ("n", nested)):
        assert run(capsys, "generate", "--spec", spec, "--out", tmp_path / name)[0] == 0
    _, out, _ = run(capsys, "analyze", tmp_path / "s")
    assert "signatures: 1" in out
    _, out, _ = run(capsys, "analyze", tmp_path / "n")
    depth = int(next(l for l in out.splitlines() if l.startswith("depth:")).split()[1])
    assert depth >= 2


def test_solve_cli(bundle, tmp_path, capsys):
    code, out, _ = run(capsys, "solve", bundle, "--start", "2,0,0", "--runs", "30", "--out", tmp_path / "t.csv")
    assert code == 0
    assert "mode 0" in out and "mode 1" in out
    traj = rows((tmp_path / "t.csv").read_text())
    assert {r["seed"] for r in traj} == {str(s) for s in range(30)}
    code, _, err = run(capsys, "solve", bundle, "--start", "9,0,0")
    assert code == 4


def test_solver_examples(standard):
    for start in ((1, 0, 0), (3, 0, 0), (1, 0, 1)):
        tr = descent_solver(standard, start, 0)
        assert len(tr) == 1
    assert descent_solver(standard, (3, 0, 0), 0).terminal_mode.representative == int(
        standard.mesh.vertex_at(np.array([[3.0, 0, 0]]))[0]
    )
    with pytest.raises(OutOfDomain):
        descent_solver(standard, (0, 0, -1), 0)


@pytest.mark.parametrize("seed", range(10))
def test_solver_monotone_and_deterministic(nested, seed):
    start = np.random.default_rng(seed).random(3) * [4, 2, 1] - [0, 1, 0]
    a = descent_solver(nested, start, seed, SolverConfig(n_candidates=8))
    b = descent_solver(nested, start, seed, SolverConfig(n_candidates=8))
    assert a == b and a.is_monotone()
    assert np.all(np.diff(a.objectives, axis=0) <= 0)
    box = nested.mesh.box
    assert all(box.contains(p) for p in a.points)
    np.testing.assert_array_equal(nested.evaluate(a.points), a.objectives)


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(n_candidates=0)
    with pytest.raises(ValueError):
        SolverConfig(shrink=1.5)


def test_write_artifact_api(tmp_path):
    problem = write_artifact(parse_spec(NESTED), tmp_path / "n")
    spec, again = load_artifact(tmp_path / "n")
    assert spec.root == parse_spec(NESTED).root
    np.testing.assert_array_equal(problem.objectives.values, again.objectives.values)
