"""Command line entry point.

Exit codes: 0 success, 2 spec parse error, 3 spec validation error (the
violated invariant is named on stderr), 4 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from collections import Counter
from pathlib import Path

import numpy as np

from ..errors import OutOfDomain, SpecError, SpecParseError, TetmodalError
from ..mesh import fmt
from ..modes import mode_regions
from .artifacts import ArtifactError, atomic_write, csv_text, load_artifact, write_artifact
from .slicing import slice_at
from .solver import SolverConfig, descent_solver
from .specfile import load_spec

EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, EXIT_RUNTIME = 0, 2, 3, 4


class RowFailures(TetmodalError):
    pass


def _triple(text: str) -> tuple[float, float, float]:
    parts = [p for p in text.replace(",", " ").split()]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected three numbers, got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected three numbers, got {text!r}") from None


def _emit(text: str, out) -> None:
    if out is None or str(out) == "-":
        sys.stdout.write(text)
    else:
        atomic_write(out, text)


def _read_points(path) -> list[list[str]]:
    text = sys.stdin.read() if str(path) == "-" else Path(path).read_text(encoding="utf-8")
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if rows:
        try:
            [float(c) for c in rows[0]]
        except ValueError:
            rows = rows[1:]  # header
    return rows


def cmd_generate(args) -> int:
    spec = load_spec(args.spec)
    problem = write_artifact(spec, args.out, args.spacing_override)
    print(f"wrote {args.out}: {problem.mesh.n_vertices} vertices, {problem.mesh.n_tets} tets")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    _, problem = load_artifact(args.artifact)
    rows = _read_points(args.points)
    parsed = []
    for r in rows:
        try:
            p = [float(c) for c in r]
        except ValueError:
            p = None
        parsed.append(p if p is not None and len(p) == 3 and np.all(np.isfinite(p)) else None)
    good = [i for i, p in enumerate(parsed) if p is not None and problem.mesh.box.contains(p)]
    values = {}
    if good:
        pts = np.array([parsed[i] for i in good])
        f = problem.evaluate(pts, baked=args.baked)
        psi = problem.evaluate(pts, raw_psi=True)
        values = {i: (f[k], psi[k]) for k, i in enumerate(good)}
    header = ["x", "y", "z", "f1", "f2"] + (["psi1", "psi2"] if args.raw_psi else []) + ["status"]
    out, failed = [], 0
    width = len(header) - 4
    for i, (r, p) in enumerate(zip(rows, parsed)):
        if i in values:
            f, psi = values[i]
            extra = [fmt(psi[0]), fmt(psi[1])] if args.raw_psi else []
            out.append([*map(fmt, p), fmt(f[0]), fmt(f[1]), *extra, "ok"])
            continue
        failed += 1
        coords = list(map(fmt, p)) if p is not None else (list(r) + ["", "", ""])[:3]
        out.append([*coords, *[""] * width, "OutOfDomain" if p is not None else "BadRow"])
    _emit(csv_text(header, out), args.out)
    if failed and args.strict:
        raise RowFailures(f"{failed} of {len(rows)} rows could not be evaluated")
    return EXIT_OK


def cmd_slice(args) -> int:
    _, problem = load_artifact(args.artifact)
    s = slice_at(problem, args.z)
    rows = (
        [*map(fmt, p), src, fmt(psi[0]), fmt(psi[1]), fmt(f[0]), fmt(f[1])]
        for p, src, psi, f in zip(s.points, s.source, s.psi, s.f)
    )
    _emit(csv_text(["x", "y", "z", "source", "psi1", "psi2", "f1", "f2"], rows), args.out)
    return EXIT_OK


def _mode_label(modes) -> str:
    return " ".join(str(m.index) for m in sorted(modes))


def cmd_analyze(args) -> int:
    _, problem = load_artifact(args.artifact)
    h = mode_regions(problem, strict=args.strict_descent)
    counts = np.bincount(h.vertex_signature, minlength=len(h.signatures))
    summary = csv_text(
        ["signature", "modes", "volume", "vertices"],
        ([i, _mode_label(s), fmt(v), int(c)] for i, (s, v, c) in enumerate(zip(h.signatures, h.volumes, counts))),
    )
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        atomic_write(out / "vertex_signatures.csv", csv_text(["vertex", "signature"], enumerate(h.vertex_signature.tolist())))
        atomic_write(out / "signatures.csv", summary)
        atomic_write(out / "inclusions.csv", csv_text(["sub", "sup"], h.edges))
        atomic_write(
            out / "modes.csv",
            csv_text(["mode", "representative", "x", "y", "z"], ([m.index, m.representative, *map(fmt, problem.mesh.vertices[m.representative])] for m in h.modes)),
        )
    print(f"modes: {len(h.modes)}")
    print(f"signatures: {len(h.signatures)}")
    print(f"inclusion edges: {len(h.edges)}")
    print(f"depth: {h.depth}")
    sys.stdout.write(summary)
    return EXIT_OK


def cmd_solve(args) -> int:
    spec, problem = load_artifact(args.artifact)
    seed = spec.seed if args.seed is None else args.seed
    config = SolverConfig(n_candidates=args.candidates, patience=args.patience)
    rows, tally = [], Counter()
    for run in range(args.runs):
        tr = descent_solver(problem, args.start, seed + run, config)
        tally[tr.terminal_mode] += 1
        for step, (p, f) in enumerate(zip(tr.points, tr.objectives)):
            rows.append([seed + run, step, *map(fmt, p), fmt(f[0]), fmt(f[1]), tr.terminal_mode.index])
    if args.out:
        atomic_write(args.out, csv_text(["seed", "step", "x", "y", "z", "f1", "f2", "terminal_mode"], rows))
    for mode, n in sorted(tally.items()):
        print(f"mode {mode.index} (vertex {mode.representative}): {n} of {args.runs} runs")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tetmodal", description="Multimodal bi-objective benchmark problems on tet meshes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="compose a problem from a spec file and write its artifact bundle")
    p.add_argument("--spec", required=True, help="problem spec (YAML)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--spacing-override", type=_triple, default=None, metavar="HX,HY,HZ")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="evaluate objectives at points from a CSV file")
    p.add_argument("artifact")
    p.add_argument("points", help="CSV with x,y,z rows ('-' for stdin)")
    p.add_argument("--out", default=None, help="output CSV (default stdout)")
    p.add_argument("--raw-psi", action="store_true", help="also report the base map before the transform")
    p.add_argument("--baked", action="store_true", help="interpolate vertex objectives instead of transforming afterwards")
    p.add_argument("--strict", action="store_true", help="exit 4 if any row fails")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("slice", help="export the constant-z cross section")
    p.add_argument("artifact")
    p.add_argument("--z", type=float, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("analyze", help="mode sets, region volumes and the mode hierarchy")
    p.add_argument("artifact")
    p.add_argument("--out", default=None, help="directory for the CSV report")
    p.add_argument("--strict-descent", action="store_true", help="forbid equal-value steps")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("solve", help="run the seeded descent baseline")
    p.add_argument("artifact")
    p.add_argument("--start", type=_triple, required=True, metavar="X,Y,Z")
    p.add_argument("--seed", type=int, default=None, help="defaults to the seed in the problem-spec file")
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--candidates", type=int, default=SolverConfig.n_candidates)
    p.add_argument("--patience", type=int, default=SolverConfig.patience)
    p.add_argument("--out", default=None, help="trajectory CSV")
    p.set_defaults(func=cmd_solve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SpecParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SpecError as exc:
        print(f"invalid spec: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OutOfDomain, ArtifactError, RowFailures, TetmodalError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
