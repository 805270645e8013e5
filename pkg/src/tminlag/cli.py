"""Command-line entry point: ``tminlag <subcommand> ...``.

Exit status: 0 success, 2 invalid input or validation failure, 3 numerical
consistency failure (the failing check is named on stderr).
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

import numpy as np

from . import io as tio
from .errors import (
    ConsistencyError,
    ConstructionError,
    DegeneracyError,
    DomainError,
    InputError,
    StiffnessError,
    TminlagError,
    UnsupportedInputError,
)
from .flow import FlowOptions, integrate_mcf
from .geometry import evaluate, laplacian_gP_check, maslov_consistency
from .hsiang_lawson import GeodesicOptions, integrate_geodesic
from .polytope import COMPACT_BUILTINS, validate_delzant_2d
from .potential import (
    Potential,
    interior_lattice,
    is_positive_definite,
    random_interior_points,
)
from .prescribe import continuum_profile, prescribe_diagonal, prescribe_separable
from .solver import SolverConfig, find_minimal_fibres, guillemin_minimality_residual

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3

# tolerances of the report's residual suite
TOL = {
    "ricci_hessian": 1e-8,
    "symmetry": 1e-8,
    "trace": 1e-8,
    "block": 1e-8,
    "maslov": 1e-10,
    "laplacian": 1e-5,
    "guillemin_residual": 1e-8,
}


class ValidationFailed(TminlagError):
    """A validation report came back negative (exit 2)."""

    def __init__(self, message: str, payload=None):
        super().__init__(message)
        self.payload = payload


# --- input parsing ------------------------------------------------------------------

def parse_json(text: str, source: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(
            f"malformed JSON in {source}: {exc.msg} at line {exc.lineno} column {exc.colno}"
        ) from exc


def load_potential(arg: str) -> Potential:
    """A file path, inline JSON, or a built-in polytope name (Guillemin potential)."""
    if arg is None:
        raise InputError("--potential is required")
    path = Path(arg)
    if path.is_file():
        data = parse_json(path.read_text(encoding="utf-8"), str(path))
    elif arg.lstrip().startswith(("{", "[", '"')):
        data = parse_json(arg, "--potential")
    else:
        return Potential.from_dict(arg)
    if isinstance(data, dict) and "facets" in data and "polytope" not in data:
        data = {"polytope": data}  # bare polytope: Guillemin potential
    return Potential.from_dict(data)


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(v) for v in re.split(r"[,\s]+", text.strip()) if v]
    except ValueError as exc:
        raise InputError(f"cannot parse {what} {text!r}: {exc}") from exc


def load_points(arg: str, dim: int | None = None) -> np.ndarray:
    """Points from inline JSON (``[[x1, x2], ...]``), ``"x1,x2;..."``, or a CSV/JSON file.

    CSV files must have a header; columns named ``x1..xn`` are used when
    present, otherwise all columns.
    """
    path = Path(arg)
    if path.is_file():
        text = path.read_text(encoding="utf-8")
        if path.suffix.lower() == ".json":
            pts = parse_json(text, str(path))
        else:
            lines = [ln for ln in text.splitlines() if ln.strip()]
            if not lines:
                raise InputError(f"{path} is empty")
            header = [h.strip() for h in lines[0].split(",")]
            cols = [i for i, h in enumerate(header) if re.fullmatch(r"x\d+", h)] or list(range(len(header)))
            pts = []
            for ln in lines[1:]:
                vals = ln.split(",")
                try:
                    pts.append([float(vals[i]) for i in cols])
                except (ValueError, IndexError) as exc:
                    raise InputError(f"bad row {ln!r} in {path}") from exc
    elif arg.lstrip().startswith("["):
        pts = parse_json(arg, "point list")
    else:
        pts = [_floats(chunk, "point") for chunk in arg.split(";") if chunk.strip()]
    arr = np.asarray(pts, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise InputError("expected a non-empty list of points")
    if dim is not None and arr.shape[1] != dim:
        raise InputError(f"points have dimension {arr.shape[1]}, expected {dim}")
    return arr


def safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_") or "potential"


# --- subcommands ----------------------------------------------------------------------

def _emit(args, stem: str, obj=None, table=None) -> None:
    """Write to the output directory when one is set, else print to stdout."""
    out = tio.output_dir(args.out)
    fmt = getattr(args, "format", None) or ("csv" if table is not None else "json")
    if fmt == "csv" and table is not None:
        header, rows = table
        if out is None:
            sys.stdout.write(tio.csv_text(header, rows))
        else:
            tio.write_csv(out / f"{stem}.csv", header, rows)
    else:
        payload = obj if obj is not None else {"header": table[0], "rows": table[1]}
        if out is None:
            sys.stdout.write(tio.json_text(payload))
        else:
            tio.write_json(out / f"{stem}.json", payload)


def validation_report(pot: Potential, per_axis: int = 50) -> dict:
    P = pot.polytope
    rep: dict = {"polytope": P.to_dict(), "name": P.name, "compact": P.compact}
    ok = True
    if P.dim == 2 and P.compact:
        d = validate_delzant_2d(P)
        rep["delzant"] = d.to_dict()
        ok &= d.passed
    else:
        rep["delzant"] = {"skipped": "only compact 2D polytopes are checked"}
    # non-compact: sample a window of side 20 around the interior witness
    box = None if P.compact else (P.interior_point - 10.0, P.interior_point + 10.0)
    pd = is_positive_definite(pot, interior_lattice(P, per_axis, box=box))
    rep["positive_definite"] = pd.to_dict()
    ok &= pd.passed
    rep["passed"] = bool(ok)
    return rep


def cmd_validate(args) -> int:
    pot = load_potential(args.potential)
    rep = validation_report(pot, args.grid or 50)
    _emit(args, f"validate_{safe_name(pot.polytope.name)}", rep)
    if not rep["passed"]:
        raise ValidationFailed("validation failed", rep)
    return EXIT_OK


def curvature_rows(pot: Potential, points, check: bool):
    n = pot.dim
    header = ([f"x{i + 1}" for i in range(n)] + ["V", "s"]
              + [f"grad_logV{i + 1}" for i in range(n)] + [f"ricci_eig{i + 1}" for i in range(n)])
    if check:
        header += ["laplacian_residual", "maslov_residual"]
    rows = []
    for p in points:
        g = evaluate(pot, p)
        eig = np.linalg.eigvalsh(0.5 * (g.ricci_xx + g.ricci_xx.T))
        row = [*p, g.V, g.scalar, *g.grad_logV, *eig]
        if check:
            row += [laplacian_gP_check(pot, p).residual, maslov_consistency(pot, p)]
        rows.append(row)
    return header, rows


def cmd_curvature(args) -> int:
    pot = load_potential(args.potential)
    if not args.points:
        raise InputError("curvature needs --points")
    pts = load_points(args.points, pot.dim)
    header, rows = curvature_rows(pot, pts, args.check)
    _emit(args, f"curvature_{safe_name(pot.polytope.name)}", table=(header, rows))
    return EXIT_OK


def _solver_config(args, pot: Potential) -> SolverConfig:
    box = None
    if args.box:
        vals = _floats(args.box, "--box")
        n = pot.dim
        if len(vals) != 2 * n:
            raise InputError(f"--box needs {2 * n} numbers: lo1..lo{n} hi1..hi{n}")
        box = (np.array(vals[:n]), np.array(vals[n:]))
    kw = {"box": box}
    if args.grid:
        kw["grid"] = args.grid
    if args.tol:
        kw["tol"] = args.tol
    if args.dedup:
        kw["dedup"] = args.dedup
    return SolverConfig(**kw)


def cmd_find_minimal(args) -> int:
    pot = load_potential(args.potential)
    reports = find_minimal_fibres(pot, _solver_config(args, pot))
    _emit(args, f"minimal_{safe_name(pot.polytope.name)}", [r.to_dict() for r in reports])
    return EXIT_OK


def _seeds(args, dim) -> np.ndarray:
    if not args.seed:
        raise InputError("--seed is required")
    return np.vstack([load_points(s, dim) for s in args.seed])


def cmd_flow(args) -> int:
    pot = load_potential(args.potential)
    opts = FlowOptions(t_max=args.tmax, boundary_eps=args.boundary_eps, rtol=args.rtol,
                       direction=1.0 if args.ascent else -1.0)
    out = tio.output_dir(args.out)
    summaries = []
    for i, x0 in enumerate(_seeds(args, pot.dim)):
        try:
            traj = integrate_mcf(pot, x0, opts)
        except StiffnessError as exc:
            raise ConsistencyError(str(exc), check="flow_step_underflow") from exc
        header, rows = tio.plot_table(traj)
        s = {"seed": x0, **traj.summary()}
        if out is not None:
            path = tio.write_csv(out / f"flow_{i:03d}.csv", header, rows)
            s["csv"] = path.name
        else:
            sys.stdout.write(tio.csv_text(header, rows))
        summaries.append(s)
    if out is not None:
        tio.write_json(out / "flow_summary.json", summaries)
    return EXIT_OK


def cmd_geodesic(args) -> int:
    pot = load_potential(args.potential)
    if not args.velocity:
        raise InputError("geodesic needs --velocity")
    x0 = _seeds(args, pot.dim)
    if len(x0) != 1:
        raise InputError("geodesic takes exactly one --seed")
    v0 = load_points(args.velocity, pot.dim)[0]
    opts = GeodesicOptions(t_max=args.tmax, boundary_eps=args.boundary_eps)
    try:
        geo = integrate_geodesic(pot, x0[0], v0, args.k, opts)
    except StiffnessError as exc:
        raise ConsistencyError(str(exc), check="geodesic_step_underflow") from exc
    header, rows = tio.plot_table(geo)
    out = tio.output_dir(args.out)
    if out is None:
        sys.stdout.write(tio.csv_text(header, rows))
    else:
        tio.write_csv(out / "geodesic.csv", header, rows)
        tio.write_json(out / "geodesic_summary.json", geo.summary())
    return EXIT_OK


def cmd_prescribe(args) -> int:
    mode = args.mode
    if mode == "continuum":
        pot = continuum_profile()
        summary = {"mode": "continuum", "band": [1 / 3, 2 / 3]}
    else:
        if not args.targets:
            raise InputError(f"--targets is required for mode {mode}")
        try:
            if mode == "diagonal":
                ts = load_points(args.targets).reshape(-1)
                res = prescribe_diagonal(ts, verify=not args.no_verify, grid=args.grid)
            else:
                res = prescribe_separable(load_points(args.targets, 2), verify=not args.no_verify,
                                          grid=args.grid)
        except ConstructionError as exc:
            raise ConsistencyError(str(exc), check="construction") from exc
        pot, summary = res.potential, res.summary()
    doc = {"potential": pot.to_dict(), "report": summary}
    out = tio.output_dir(args.out)
    if out is None:
        sys.stdout.write(tio.json_text(doc))
    else:
        tio.write_json(out / "potential.json", doc["potential"])
        tio.write_json(out / "prescription.json", summary)
    return EXIT_OK


def example_report(pot: Potential, rng: np.random.Generator, samples: int = 20) -> tuple[dict, list]:
    """validate -> find-minimal -> classify -> curvature residual suite.

    Returns the report and the names of failed checks.
    """
    P = pot.polytope
    failures = []
    val = validation_report(pot, 30)
    if not val["passed"]:
        failures.append("validation")
    cfg = SolverConfig() if P.compact else SolverConfig(box=(np.full(P.dim, 1e-3), np.full(P.dim, 10.0)))
    fibres = find_minimal_fibres(pot, cfg)
    crit = []
    for r in fibres:
        g = evaluate(pot, r.point)
        entry = r.to_dict()
        entry["ricci_plus_hessian"] = float(np.abs(g.ricci_xx + g.hess_gP_logV).max())
        if entry["ricci_plus_hessian"] > TOL["ricci_hessian"]:
            failures.append("ricci_hessian")
        if pot.is_guillemin and P.dim == 2:
            entry["guillemin_residual"] = float(np.linalg.norm(guillemin_minimality_residual(P, r.point)))
            if entry["guillemin_residual"] > TOL["guillemin_residual"]:
                failures.append("guillemin_residual")
        crit.append(entry)
    if P.compact:
        margin, box = 1e-3 * P.diameter, None
    else:
        margin, box = 1e-3, (np.full(P.dim, 0.0), np.full(P.dim, 10.0))
    pts = random_interior_points(P, samples, rng, margin=margin, box=box)
    worst = {k: 0.0 for k in ("symmetry", "trace", "block", "maslov", "laplacian")}
    for p in pts:
        g = evaluate(pot, p)
        worst["symmetry"] = max(worst["symmetry"], g.symmetry_residual())
        worst["trace"] = max(worst["trace"], g.trace_identity_residual())
        worst["block"] = max(worst["block"], g.block_relation_residual())
        worst["maslov"] = max(worst["maslov"], maslov_consistency(pot, p))
        worst["laplacian"] = max(worst["laplacian"], laplacian_gP_check(pot, p).residual)
    for k, v in worst.items():
        if v > TOL[k]:
            failures.append(k)
    report = {
        "example": P.name or "inline",
        "validation": {"passed": val["passed"], "delzant": val["delzant"]},
        "critical_points": crit,
        "residuals": worst,
        "tolerances": {k: TOL[k] for k in worst},
        "samples": int(samples),
        "passed": not failures,
        "failed_checks": sorted(set(failures)),
    }
    return report, sorted(set(failures))


def cmd_report(args) -> int:
    rng = np.random.default_rng(args.rng_seed)
    pots = [load_potential(args.potential)] if args.potential else [Potential.from_dict(n) for n in COMPACT_BUILTINS]
    out = tio.output_dir(args.out)
    failed = []
    docs = []
    for pot in pots:
        rep, bad = example_report(pot, rng, args.samples)
        name = safe_name(pot.polytope.name or "inline")
        if out is not None:
            tio.write_json(out / f"report_{name}.json", rep)
        docs.append(rep)
        failed += [f"{name}:{b}" for b in bad]
    if out is None:
        sys.stdout.write(tio.json_text(docs if len(docs) > 1 else docs[0]))
    if failed:
        raise ConsistencyError("residual checks failed", check=",".join(failed))
    return EXIT_OK


# --- parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--potential", help="potential spec: JSON file, inline JSON, or built-in name")
    common.add_argument("--out", help="output directory (TMINLAG_OUT overrides)")
    common.add_argument("--format", choices=("csv", "json"), help="output format where both apply")
    common.add_argument("--rng-seed", type=int, default=0, help="seed for randomized checks")

    p = argparse.ArgumentParser(prog="tminlag", description="Minimal Lagrangian torus fibres of toric Kahler metrics.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", parents=[common], help="Delzant and positive-definiteness checks")
    s.add_argument("--grid", type=int, help="PD sampling lattice points per axis (default 50)")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("curvature", parents=[common], help="V, s, Ricci at given points")
    s.add_argument("--points", help="points: JSON list, 'x1,x2;...', or CSV/JSON file")
    s.add_argument("--check", action="store_true", help="add Laplacian and Maslov residual columns")
    s.set_defaults(func=cmd_curvature)

    s = sub.add_parser("find-minimal", parents=[common], help="locate and classify critical points of V")
    s.add_argument("--grid", type=int, help="seed points per axis")
    s.add_argument("--tol", type=float, help="Newton tolerance on |grad log V|")
    s.add_argument("--dedup", type=float, help="dedup radius as a fraction of the diameter")
    s.add_argument("--box", help="search box 'lo1,..,lon,hi1,..,hin' (required if non-compact)")
    s.set_defaults(func=cmd_find_minimal)

    s = sub.add_parser("flow", parents=[common], help="mean curvature flow of fibres")
    s.add_argument("--seed", action="append", help="start point 'x1,x2' (repeatable) or a CSV file")
    s.add_argument("--tmax", type=float, default=10.0)
    s.add_argument("--boundary-eps", type=float, default=1e-6, help="stop when min facet value <= this")
    s.add_argument("--rtol", type=float, default=1e-10)
    s.add_argument("--ascent", action="store_true", help="integrate +grad log V instead")
    s.set_defaults(func=cmd_flow)

    s = sub.add_parser("geodesic", parents=[common], help="Hsiang-Lawson geodesic")
    s.add_argument("--seed", action="append", help="start point 'x1,x2'")
    s.add_argument("--velocity", help="initial velocity 'v1,v2'")
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--tmax", type=float, default=10.0)
    s.add_argument("--boundary-eps", type=float, default=1e-6, help="stop when min facet value <= this")
    s.set_defaults(func=cmd_geodesic)

    s = sub.add_parser("prescribe", parents=[common], help="metrics with prescribed minimal fibres")
    s.add_argument("--mode", choices=("diagonal", "separable", "continuum"), required=True)
    s.add_argument("--targets", help="diagonal: 't1,t2,...'; separable: '[[x1,x2],...]' or file")
    s.add_argument("--grid", type=int, help="solver seed grid for verification")
    s.add_argument("--no-verify", action="store_true")
    s.set_defaults(func=cmd_prescribe)

    s = sub.add_parser("report", parents=[common], help="full pipeline on built-in examples")
    s.add_argument("--samples", type=int, default=20, help="random points for the residual suite")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name in ("tol", "dedup", "tmax", "rtol", "boundary_eps"):
        v = getattr(args, name, None)
        if v is not None and not v > 0:
            print(f"error: --{name.replace('_', '-')} must be positive", file=sys.stderr)
            return EXIT_INPUT
    try:
        return args.func(args)
    except ValidationFailed as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConsistencyError as exc:
        print(f"consistency check failed [{exc.check}]: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, UnsupportedInputError, DomainError, DegeneracyError, tio.OutputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ConstructionError, StiffnessError) as exc:
        print(f"consistency check failed [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
