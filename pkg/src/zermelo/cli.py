"""Command-line front end ``znav``.

Data goes to ``--out`` (default standard output); diagnostics and summaries go
to standard error. Exit codes: 0 success, 2 configuration or validation error,
3 numerical failure (or a failed verdict for ``gauss-bonnet`` and ``verify``).
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import logging
import os
import sys
import time

import numpy as np

from .config import emit_config, load_config
from .conjugate import first_conjugate_time
from .curvature import CurvatureField
from .duality import dualize, verify_duality
from .errors import ChartExitError, ValidationError, ZermeloError
from .geometry import FrameGeometry, _metric
from .hamiltonian import CoZermeloProblem, FiberPoint, integrate_extremal
from .integrals import QuadratureGrid, gauss_bonnet_report
from .verify import run_suite

log = logging.getLogger("zermelo")

LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


def _setup_logging():
    level = os.environ.get("ZNAV_LOG", "error").strip().lower()
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("zermelo")
    root.handlers[:] = [handler]
    root.setLevel(LOG_LEVELS.get(level, logging.ERROR))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dumps(obj):
    # json renders floats with repr, i.e. the shortest string that round-trips
    return json.dumps(_jsonable(obj), indent=2, allow_nan=False)


@contextlib.contextmanager
def _sink(path):
    if path in (None, "-"):
        yield sys.stdout
        sys.stdout.flush()
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _write_csv(path, header, rows):
    with _sink(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                        for v in r])


def _write_json(path, doc):
    with _sink(path) as fh:
        fh.write(dumps(doc) + "\n")


def _summary(doc):
    sys.stderr.write(dumps(doc) + "\n")


def _start(cfg, args):
    x, y, th = cfg.start
    if args.start_x is not None:
        x = args.start_x
    if args.start_y is not None:
        y = args.start_y
    if args.theta is not None:
        th = args.theta
    return FiberPoint(np.array([x, y], float), float(th))


def _format(cfg, args):
    return args.format or cfg.output_format


def _out(cfg, args):
    return args.out or cfg.output_path


def _grid(cfg, args):
    return QuadratureGrid.parse(args.grid, cfg.grid.scheme) if args.grid else cfg.grid


# subcommands -----------------------------------------------------------------


def cmd_extremal(cfg, args):
    problem = cfg.problem()
    T = args.tmax or cfg.t_max
    start = _start(cfg, args)
    flow = problem.flow() if isinstance(problem, CoZermeloProblem) else problem.canonical_flow()
    try:
        traj = integrate_extremal(flow, start, T, cfg.solver)
    except ChartExitError as exc:
        last = None if exc.last_state is None else list(map(float, exc.last_state))
        _summary({"error": str(exc), "t": exc.t, "last_state": last})
        raise
    rows = np.column_stack([traj.t, traj.wrapped(), traj.h_residual])
    if _format(cfg, args) == "csv":
        _write_csv(_out(cfg, args), ["t", "x", "y", "theta", "h_residual"], rows)
    else:
        _write_json(_out(cfg, args), {
            "columns": ["t", "x", "y", "theta", "h_residual"],
            "rows": rows,
            "hamiltonian_drift": traj.hamiltonian_drift,
            "solver_stats": traj.solver_stats,
        })
    final = traj.wrapped()[-1]
    _summary({"final": {"t": traj.t[-1], "x": final[0], "y": final[1], "theta": final[2]},
              "hamiltonian_drift": traj.hamiltonian_drift})
    return EXIT_OK


def _curvature_points(surface, nx, ny, nt, region):
    from .drift import sample_points

    if region is not None or surface.chart.pole_compactification or surface.chart.disk:
        if nx != ny:
            # sample_points is square; use the larger resolution for both
            nx = ny = max(nx, ny)
        x, y = sample_points(surface.chart, nx, region)
    else:
        x0, x1, y0, y1 = surface.chart.domain
        if not np.isfinite(surface.chart.domain).all():
            raise ValidationError("unbounded chart needs [drift] region for a curvature grid")
        x, y = np.meshgrid(x0 + (np.arange(nx) + 0.5) * (x1 - x0) / nx,
                           y0 + (np.arange(ny) + 0.5) * (y1 - y0) / ny, indexing="ij")
    th = np.arange(nt) * 2 * np.pi / nt
    X = np.broadcast_to(x[..., None], x.shape + (nt,))
    Y = np.broadcast_to(y[..., None], y.shape + (nt,))
    TH = np.broadcast_to(th, x.shape + (nt,))
    return X.ravel(), Y.ravel(), TH.ravel()


def cmd_curvature(cfg, args):
    problem = cfg.problem()
    grid = QuadratureGrid.parse(args.grid) if args.grid else QuadratureGrid(16, 16, 16)
    x, y, th = _curvature_points(problem.surface, grid.nx, grid.ny, grid.ntheta, cfg.region)
    kind = args.kind
    if kind == "magnetic" and not isinstance(problem, CoZermeloProblem):
        raise ValidationError("magnetic curvature needs a drift one-form")
    field = CurvatureField.of(problem, "cozermelo" if kind == "control" else kind)
    kappa = np.asarray(field(np.stack([x, y, th])), float)
    summary = {"kind": kind, "points": int(kappa.size), "min": kappa.min(), "max": kappa.max(),
               "mean": kappa.mean()}
    rows = np.column_stack([x, y, th, kappa])
    if _format(cfg, args) == "csv":
        _write_csv(_out(cfg, args), ["x", "y", "theta", "kappa"], rows)
        _summary(summary)
    else:
        _write_json(_out(cfg, args), {"summary": summary, "columns": ["x", "y", "theta", "kappa"],
                                      "rows": rows})
    return EXIT_OK


def cmd_conjugate(cfg, args):
    problem = cfg.problem()
    T = args.tmax or cfg.t_max
    start = _start(cfg, args)
    if args.sweep:
        what, _, n = args.sweep.partition(":")
        if what != "theta" or not n.isdigit() or int(n) < 1:
            raise ValidationError(f"--sweep expects theta:N, got {args.sweep!r}")
        rows = []
        for th in np.arange(int(n)) * 2 * np.pi / int(n):
            rep = first_conjugate_time(problem, FiberPoint(start.q, th), T, cfg.solver)
            rows.append((th, rep.first_conjugate_time))
        _write_csv(_out(cfg, args), ["theta", "t_conjugate"], rows)
        return EXIT_OK
    rep = first_conjugate_time(problem, start, T, cfg.solver)
    doc = rep.as_dict()
    doc["start"] = {"x": start.q[0], "y": start.q[1], "theta": float(start.theta)}
    _write_json(_out(cfg, args), doc)
    return EXIT_OK


def _grid_points(surface, region, n):
    from .drift import sample_points

    x, y = sample_points(surface.chart, n, region)
    return x, y


def cmd_dualize(cfg, args):
    problem = cfg.problem()
    pair = dualize(problem, cfg.region)
    rep = verify_duality(pair, 1000, 1e-9, args.seed, cfg.region)
    n = 16
    x, y = _grid_points(problem.surface, cfg.region, n)
    tilde = pair.problem
    g, _ = _metric(tilde.surface, x, y)
    d1, d2 = tilde.drift.components(x, y)
    q = np.stack([x, y])
    src_norm = problem.drift.norm(x, y)
    tilde_norm = pair.drift_norm_tilde(q)
    ell = pair.ellipse(q)
    doc = {
        "source_kind": problem.drift.kind.value,
        "dual_kind": tilde.drift.kind.value,
        "grid": {"x": x, "y": y},
        "metric": {"g11": g[..., 0, 0], "g12": g[..., 0, 1], "g22": g[..., 1, 1]},
        "drift_components": {"comp1": d1, "comp2": d2},
        "drift_norm_source": src_norm,
        "drift_norm_dual": tilde_norm,
        "norm_preservation_error": float(np.max(np.abs(src_norm - tilde_norm))),
        "diagnostics": {k: v for k, v in ell.items()},
        "verification": rep.as_dict(),
    }
    try:
        doc["config"] = emit_config(tilde.surface, tilde.drift, cfg.region,
                                    extra={"solver": {"t_max": repr(float(cfg.t_max))}})
    except ValidationError as exc:
        doc["config"] = None
        log.info("dual problem not emitted as config: %s", exc)
    _write_json(_out(cfg, args), doc)
    return EXIT_OK if rep.passed else EXIT_NUMERICAL


def cmd_gauss_bonnet(cfg, args):
    problem = cfg.problem()
    if not isinstance(problem, CoZermeloProblem):
        problem = dualize(problem, cfg.region).problem
    rep = gauss_bonnet_report(problem, _grid(cfg, args), cfg.quadrature_tol, args.threads)
    _write_json(_out(cfg, args), rep.as_dict())
    return EXIT_OK if rep.inequality_holds else EXIT_NUMERICAL


def cmd_verify(cfg, args):
    res = run_suite(cfg, seed=args.seed, grid=_grid(cfg, args), t_max=args.tmax, threads=args.threads)
    _write_json(_out(cfg, args), res.as_dict())
    fail = res.first_failure
    if fail is not None:
        log.error("check %s failed: value %s, tolerance %s", fail.name, fail.value, fail.tol)
        sys.stderr.write(f"verification failed: {fail.name}\n")
        return EXIT_NUMERICAL
    return EXIT_OK


COMMANDS = {
    "extremal": cmd_extremal,
    "curvature": cmd_curvature,
    "conjugate": cmd_conjugate,
    "dualize": cmd_dualize,
    "gauss-bonnet": cmd_gauss_bonnet,
    "verify": cmd_verify,
}


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True,
                        help="INI configuration path, or builtin:NAME for a bundled one")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--out", help="output path (default: standard output)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--grid", help="NX,NY,NT")
    common.add_argument("--tmax", type=_positive_float)
    common.add_argument("--threads", type=_positive_int)
    common.add_argument("--theta", type=float)
    common.add_argument("--start-x", type=float, dest="start_x")
    common.add_argument("--start-y", type=float, dest="start_y")

    parser = argparse.ArgumentParser(prog="znav", description="Zermelo and co-Zermelo navigation on surfaces")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "conjugate":
            p.add_argument("--sweep", help="theta:N")
        if name == "curvature":
            p.add_argument("--kind", default="control",
                           choices=("control", "gaussian", "magnetic", "oracle"))
    return parser


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads:
        os.environ.setdefault("OMP_NUM_THREADS", str(args.threads))
    t0 = time.perf_counter()
    try:
        cfg = load_config(args.config)
        code = COMMANDS[args.command](cfg, args)
    except ValidationError as exc:
        if isinstance(exc, ChartExitError):
            log.error("%s", exc)
            sys.stderr.write(f"error: {exc}\n")
            return EXIT_NUMERICAL
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION
    except ZermeloError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERICAL
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERICAL
    log.info("%s finished in %.3f s", args.command, time.perf_counter() - t0)
    return code


if __name__ == "__main__":
    sys.exit(main())
