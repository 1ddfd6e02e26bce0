"""Command-line front end.

Exit codes
----------
0  success (valid triangulation, converged solve)
1  invalid input: parse/validation error, dimension mismatch, bad radii
2  usage error
3  solver stopped at max_iters
4  solver stopped at max_time
5  step_underflow
6  left_positive_orthant
7  boundary_stagnation
8  line_search_failed
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .curvature import as_metric, curvature_state, scalar_curvature
from .flows import FlowOptions, bounds, solve
from .triangulation import TriangulationError, load_triangulation

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_CODES = {
    "converged": EXIT_OK,
    "max_iters": 3,
    "max_time": 4,
    "step_underflow": 5,
    "left_positive_orthant": 6,
    "boundary_stagnation": 7,
    "line_search_failed": 8,
}


class InputError(Exception):
    pass


def fmt(x) -> str:
    """Shortest round-trip decimal for a float."""
    return repr(float(x))


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, np.ndarray):
        return [_jsonable(float(v)) for v in x.ravel()] if x.ndim == 1 else [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.floating):
        return _jsonable(float(x))
    if isinstance(x, np.integer):
        return int(x)
    return x


def _dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, allow_nan=False) + "\n"


def read_vector(source: str, n: int, what: str) -> np.ndarray:
    """Vector from an existing file, a comma-separated list, or one constant."""
    path = Path(source)
    if path.is_file():
        text = path.read_text(encoding="utf-8").strip()
        try:
            values = json.loads(text)
        except json.JSONDecodeError:
            values = text.replace(",", " ").split()
    else:
        values = [v for v in source.split(",") if v.strip()]
    try:
        vec = np.array([float(v) for v in np.atleast_1d(values)], dtype=float)
    except (TypeError, ValueError):
        raise InputError(f"{what}: could not parse numbers from {source!r}") from None
    if vec.size == 1:
        vec = np.full(n, vec[0])
    if vec.size != n:
        raise InputError(f"{what}: dimension mismatch, got {vec.size} values for N={n}")
    return vec


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    T = load_triangulation(args.path)
    if args.format == "json":
        _write(
            _dump_json(
                {
                    "valid": True,
                    "N": T.n_vertices,
                    "tets": T.n_tets,
                    "edges": T.n_edges,
                    "vertices": [
                        {"label": T.labels[i], "degree": T.degrees[i], "euler_char": T.euler_chars[i]}
                        for i in range(T.n_vertices)
                    ],
                }
            ),
            args.out,
        )
    else:
        lines = [T.summary()]
        lines += [
            f"vertex {T.labels[i]}: d={T.degrees[i]} χ={T.euler_chars[i]}"
            for i in range(T.n_vertices)
        ]
        _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def curvature_report(T, r, with_jacobian: bool) -> dict:
    state = curvature_state(T, r, jacobian=with_jacobian)
    report = {
        "labels": list(T.labels),
        "r": state.r,
        "K_edge_sum": state.K,
        "K_gauss_bonnet": state.K_gauss_bonnet,
        "discrepancy": state.form_discrepancy(),
        "edges": [
            {"endpoints": [T.labels[a] for a in e.endpoints], "K": float(k)}
            for e, k in zip(T.edge_classes, state.edge_K)
        ],
    }
    if with_jacobian:
        report["lambda"] = state.lambda_matrix
    return report


def curvature_csv(T, report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["quantity", "a", "b", "value"])
    for i, label in enumerate(T.labels):
        w.writerow(["K_edge_sum", label, "", fmt(report["K_edge_sum"][i])])
    for i, label in enumerate(T.labels):
        w.writerow(["K_gauss_bonnet", label, "", fmt(report["K_gauss_bonnet"][i])])
    for e, edge in enumerate(report["edges"]):
        w.writerow(["edge_K", e, "", fmt(edge["K"])])
    w.writerow(["discrepancy", "", "", fmt(report["discrepancy"])])
    if "lambda" in report:
        lam = report["lambda"]
        for a, la in enumerate(T.labels):
            for b, lb in enumerate(T.labels):
                w.writerow(["lambda", la, lb, fmt(lam[a, b])])
    return buf.getvalue()


def cmd_curvature(args) -> int:
    T = load_triangulation(args.path)
    r = read_vector(args.radii, T.n_vertices, "--radii")
    report = curvature_report(T, as_metric(T, r), args.jacobian)
    if args.format == "csv":
        _write(curvature_csv(T, report), args.out)
    else:
        _write(_dump_json(report), args.out)
    return EXIT_OK


def trace_csv(trace, sample_every: int = 1) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    n = len(trace.r)
    w.writerow(["t", "step", "residual"] + [f"r{i}" for i in range(n)])
    last = len(trace.samples) - 1
    for k, s in enumerate(trace.samples):
        if k % sample_every and k != last:
            continue
        w.writerow([fmt(s.t), fmt(s.step), fmt(s.residual)] + [fmt(v) for v in s.r])
    return buf.getvalue()


def trace_summary(trace) -> dict:
    return {
        "method": trace.method,
        "termination": trace.termination,
        "final_residual": trace.residual,
        "rate_estimate": trace.rate_estimate,
        "samples": len(trace.samples),
        "final_r": trace.r,
        "max_r": trace.r_max[-1],
        "diagnostics": trace.diagnostics,
    }


def cmd_flow(args) -> int:
    T = load_triangulation(args.path)
    n = T.n_vertices
    r0 = as_metric(T, read_vector(args.radii, n, "--radii"))
    if args.target_radii is not None:
        K_target = scalar_curvature(T, as_metric(T, read_vector(args.target_radii, n, "--target-radii")))
    elif args.target == "current":
        K_target = scalar_curvature(T, r0)
    else:
        K_target = read_vector(args.target, n, "--target")
    opts = FlowOptions(
        K_target=K_target,
        r0=r0,
        method=args.method,
        tol=args.tol,
        max_iters=args.max_iters,
        max_time=args.max_time,
    )
    trace = solve(T, opts)
    summary = trace_summary(trace)
    if args.format == "json":
        every = args.sample_every
        samples = [
            {"t": s.t, "step": s.step, "residual": s.residual, "r": s.r, "K": s.K, "energy": s.energy}
            for k, s in enumerate(trace.samples)
            if k % every == 0 or k == len(trace.samples) - 1
        ]
        _write(_dump_json({"summary": summary, "samples": samples}), args.out)
    else:
        _write(trace_csv(trace, args.sample_every), args.out)
    rate = trace.rate_estimate
    print(
        f"{trace.method}: {trace.termination} residual={fmt(trace.residual)} "
        f"rate_estimate={fmt(rate) if math.isfinite(rate) else 'nan'} steps={len(trace.samples) - 1}",
        file=sys.stderr,
    )
    return EXIT_CODES[trace.termination]


def cmd_bounds(args) -> int:
    try:
        b = bounds(args.M, args.c, args.chi, args.d)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if args.format == "json":
        _write(_dump_json(b.as_dict()), args.out)
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["quantity", "value"])
        for k, v in b.as_dict().items():
            w.writerow([k, fmt(v) if isinstance(v, float) else v])
        _write(buf.getvalue(), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperflow",
        description="Sphere packing curvature and curvature flows on ideal triangulations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, formats, default):
        p.add_argument("--format", choices=formats, default=default)
        p.add_argument("--out", help="output file (default: standard output)")

    p = sub.add_parser("validate", help="check a triangulation file")
    p.add_argument("path")
    common(p, ("text", "json"), "text")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("curvature", help="evaluate curvature at a metric")
    p.add_argument("path")
    p.add_argument("--radii", required=True, help="file, comma-separated list, or a constant")
    p.add_argument("--jacobian", action="store_true", help="include the curvature Jacobian")
    common(p, ("json", "csv"), "json")
    p.set_defaults(func=cmd_curvature)

    p = sub.add_parser("flow", help="solve for a prescribed curvature")
    p.add_argument("path")
    p.add_argument("--radii", required=True, help="initial metric: file, list, or constant")
    p.add_argument("--target", default="current", help="'current', file, list, or constant")
    p.add_argument("--target-radii", help="use the curvature of this metric as the target")
    p.add_argument("--method", choices=("ricci", "calabi", "newton"), default="ricci")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iters", type=int, default=200_000)
    p.add_argument("--max-time", type=float, default=1e6)
    p.add_argument("--sample-every", type=int, default=1)
    common(p, ("csv", "json"), "csv")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("bounds", help="curvature thresholds for radii bounded by M")
    p.add_argument("--M", type=float, required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--chi", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    common(p, ("json", "csv"), "json")
    p.set_defaults(func=cmd_bounds)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "sample_every", 1) < 1:
        print("error: --sample-every must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (TriangulationError, InputError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
