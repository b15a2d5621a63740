"""Command-line interface: ``fvot mesh|isotropy|ot|exp ...``.

Exit codes: 0 ok, 1 I/O or validation error, 2 usage error, 3 solver failure.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from fvot import _json
from fvot.action import as_family
from fvot.continuum import (
    PiecewiseConstantDensity,
    make_pdelta,
    parse_density,
    w2_1d,
    w2_lp_oracle,
)
from fvot.errors import InvalidArgument, InvalidMesh, SolverFailure
from fvot.isotropy import (
    anisotropy_functional,
    center_of_mass_weights,
    isotropy_defect,
    macroscopic_balance_check,
)
from fvot.means import WeightFunction
from fvot.mesh import (
    build_crossed_square,
    build_periodic_1d,
    build_rectangular,
    build_triangular,
    check_admissibility,
    check_zeta_regularity,
    dirac,
    embed,
    geometry_monitors,
    load_mesh,
    project,
    project_signed,
    save_mesh,
    uniform,
)
from fvot.mesh.measures import DiscreteMeasure, as_masses
from fvot.transport import (
    DiscreteCurve,
    counterexample_gap,
    curve_action,
    save_result,
    wt_distance,
)

SCHEMA_VERSION = 1
EXIT_OK, EXIT_INVALID, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3
MESH_KINDS = ("periodic-1d", "rect", "crossed", "tri")

log = logging.getLogger(__name__)


# ---- shared helpers -----------------------------------------------------------

def build_mesh(kind, r=0.25, n=4, nx=None, ny=None):
    if kind == "periodic-1d":
        return build_periodic_1d(r, n)
    if kind == "rect":
        return build_rectangular(nx or n, ny or nx or n)
    if kind == "crossed":
        return build_crossed_square(n, r)
    if kind == "tri":
        return build_triangular(n)
    raise InvalidArgument(f"unknown mesh kind {kind!r}; expected one of {', '.join(MESH_KINDS)}")


def parse_measure(mesh, text):
    """Measure descriptor: ``uniform``, ``dirac:<cell>``, a density descriptor
    (``affine:..``, ``sine:..``, ``tent:..``; 1D), or a JSON file holding a mass
    list, ``{"mass": [...]}`` or atoms ``[[x(, y), mass], ...]``."""
    text = text.strip()
    if text == "uniform":
        return uniform(mesh)
    if text.startswith("dirac:"):
        try:
            k = int(text[6:])
        except ValueError as exc:
            raise InvalidArgument(f"bad cell index in {text!r}") from exc
        if not 0 <= k < mesh.n_cells:
            raise InvalidArgument(f"cell {k} out of range")
        return dirac(mesh, k)
    if text.endswith(".json"):
        data = json.loads(Path(text).read_text())
        if isinstance(data, dict):
            data = data["mass"]
        if data and isinstance(data[0], list):
            return project(mesh, [(tuple(a[:-1]) if len(a) > 2 else a[0], a[-1]) for a in data])
        return DiscreteMeasure(data)
    if mesh.dimension != 1:
        raise InvalidArgument("density descriptors are one-dimensional")
    return project(mesh, parse_density(text))


def _parse_vector(text, d):
    try:
        v = np.array([float(x) for x in text.split(",")])
    except ValueError as exc:
        raise click.BadParameter(f"expected {d} comma-separated numbers, got {text!r}") from exc
    if v.shape != (d,):
        raise click.BadParameter(f"expected {d} components, got {len(v)}")
    return v


def _load_weights(mesh, source):
    if source == "auto":
        return center_of_mass_weights(mesh).weights
    if source == "sym":
        return WeightFunction.constant(mesh, 0.5)
    return WeightFunction.from_json(mesh, json.loads(Path(source).read_text()))


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return _json.fmt_float(x)
    return "" if x is None else str(x)


def write_csv(path, columns, rows):
    """CSV with a header row and a leading ``schema_version`` column; floats
    at 17 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["schema_version", *columns])
    for row in rows:
        w.writerow([SCHEMA_VERSION, *(_fmt(row.get(c)) for c in columns)])
    text = buf.getvalue()
    if path is None or str(path) == "-":
        click.echo(text, nl=False)
    else:
        Path(path).write_text(text)


def _echo_json(obj):
    click.echo(_json.dumps(obj, indent=1))


# ---- command tree -------------------------------------------------------------

@click.group()
@click.option("-v", "--verbose", count=True, help="Log solver progress (-vv for debug).")
def cli(verbose):
    """Discrete dynamical optimal transport on finite-volume meshes."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@cli.group()
def mesh():
    """Generate and check meshes."""


@mesh.command("gen")
@click.option("--kind", type=click.Choice(MESH_KINDS), required=True)
@click.option("--r", "r", type=float, default=0.25, show_default=True, help="Small-cell / anchor parameter.")
@click.option("--n", "n", type=int, default=4, show_default=True, help="Resolution N.")
@click.option("--nx", type=int, default=None, help="Columns (rect).")
@click.option("--ny", type=int, default=None, help="Rows (rect).")
@click.option("-o", "--output", type=click.Path(dir_okay=False), required=True)
def mesh_gen(kind, r, n, nx, ny, output):
    """Write a generated mesh as JSON and print its summary."""
    try:
        m = build_mesh(kind, r, n, nx, ny)
    except InvalidArgument as exc:
        raise click.UsageError(str(exc)) from exc
    save_mesh(m, output)
    click.echo(f"cells {m.n_cells}")
    click.echo(f"edges {m.n_edges}")
    click.echo(f"mesh_size {_json.fmt_float(m.mesh_size)}")
    click.echo(f"zeta {_json.fmt_float(check_zeta_regularity(m))}")
    return EXIT_OK


@mesh.command("check")
@click.argument("path", type=click.Path(dir_okay=False))
@click.option("--tol", type=float, default=1e-9, show_default=True)
def mesh_check(path, tol):
    """Admissibility, zeta* and geometry monitors; exit 0 iff admissible."""
    m = load_mesh(path)
    rep = check_admissibility(m, tol)
    zeta = check_zeta_regularity(m)
    out = {
        "admissible": rep.passed,
        "worst_orthogonality_residual": rep.worst,
        "zeta": zeta,
        "zeta_regular": zeta > 0,
        "cells": m.n_cells,
        "edges": m.n_edges,
        "mesh_size": m.mesh_size,
        "monitors": geometry_monitors(m),
    }
    _echo_json(out)
    return EXIT_OK if rep.passed else EXIT_INVALID


@cli.group()
def isotropy():
    """Isotropy tensors and anisotropy diagnostics."""


@isotropy.command("report")
@click.argument("path", type=click.Path(dir_okay=False))
@click.option("--weights", default="auto", show_default=True,
              help="auto (centre of mass), sym (1/2) or a weights JSON file.")
@click.option("--direction", "direction", default=None, help="Unit vector v, e.g. 1,0.")
@click.option("--box", default=None, help="Box lo:hi, e.g. 0.25,0.25:0.75,0.75 (default: bounding box).")
@click.option("--boundary", type=click.Choice(["none", "reflect"]), default="none", show_default=True)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None,
              help="Per-cell CSV output (default: not written).")
def isotropy_report(path, weights, direction, box, boundary, csv_path):
    """Per-cell defects, anisotropy functional and macroscopic balance."""
    m = load_mesh(path)
    try:
        w = _load_weights(m, weights)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InvalidArgument(f"cannot read weights: {exc}") from exc
    d = m.dimension
    v = _parse_vector(direction, d) if direction else np.eye(d)[0]
    if box:
        lo, _, hi = box.partition(":")
        lo, hi = _parse_vector(lo, d), _parse_vector(hi, d)
    else:
        lo, hi = m.bounding_box()
    rep = isotropy_defect(m, w, boundary)
    if csv_path:
        rows = [{"cell": k, "interior": bool(rep.interior[k]), "defect": rep.defects[k],
                 "lambda_max": rep.lambda_max[k], "volume": rep.volumes[k]} for k in range(m.n_cells)]
        write_csv(csv_path, ["cell", "interior", "defect", "lambda_max", "volume"], rows)
    summary = {k: val for k, val in rep.to_dict().items() if k != "cells"}
    summary["anisotropy"] = anisotropy_functional(m, w, v, (lo, hi))
    summary["balance"] = macroscopic_balance_check(m, w, v, (lo, hi))
    summary["direction"] = v.tolist()
    summary["box"] = [np.atleast_1d(lo).tolist(), np.atleast_1d(hi).tolist()]
    _echo_json(summary)
    return EXIT_OK


@cli.group()
def ot():
    """Transport distances and curve actions."""


@ot.command("distance")
@click.argument("path", type=click.Path(dir_okay=False))
@click.option("--mean", default="log", show_default=True, help="Mean descriptor, e.g. log, arith:0.3, arith:com.")
@click.option("--m0", required=True, help="Initial measure descriptor.")
@click.option("--m1", required=True, help="Final measure descriptor.")
@click.option("-M", "--time-steps", "time_steps", type=int, default=32, show_default=True)
@click.option("--tol", type=float, default=1e-10, show_default=True)
@click.option("--max-iter", type=int, default=200, show_default=True)
@click.option("--grid", type=click.Choice(["auto", "uniform", "graded"]), default="auto", show_default=True)
@click.option("--refine/--no-refine", default=True, show_default=True)
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None, help="TransportResult JSON.")
def ot_distance(path, mean, m0, m1, time_steps, tol, max_iter, grid, refine, output):
    """W_T(m0, m1) by the time-discrete minimisation."""
    m = load_mesh(path)
    if time_steps < 2:
        raise click.BadParameter("must be at least 2", param_hint="-M")
    res = wt_distance(m, as_family(m, mean), parse_measure(m, m0), parse_measure(m, m1),
                      time_steps=time_steps, tol=tol, max_iter=max_iter, refine=refine, grid=grid)
    if output:
        save_result(res, output)
    click.echo("value " + ("+inf" if res.value == math.inf else _json.fmt_float(res.value)))
    click.echo("refinement_gap " + _json.fmt_float(res.refinement_gap))
    click.echo(f"iterations {res.iterations}")
    click.echo(f"converged {'true' if res.converged else 'false'}")
    if not res.converged:
        click.echo("solver did not converge; best iterate written", err=True)
        return EXIT_SOLVER
    return EXIT_OK


@ot.command("curve-action")
@click.argument("path", type=click.Path(dir_okay=False))
@click.argument("curve_path", type=click.Path(dir_okay=False))
@click.option("--mean", default="log", show_default=True)
def ot_curve_action(path, curve_path, mean):
    """Action of a curve given as JSON ``{"times": [...], "masses": [[...], ...]}``
    (a TransportResult file is accepted too)."""
    m = load_mesh(path)
    data = json.loads(Path(curve_path).read_text())
    data = data.get("curve", data)
    if data is None:
        raise InvalidArgument("file holds no curve")
    curve = DiscreteCurve(data["times"], data["masses"])
    value = curve_action(m, as_family(m, mean), curve)
    click.echo("action " + ("+inf" if value == math.inf else _json.fmt_float(value)))
    return EXIT_OK


# ---- experiments --------------------------------------------------------------

COLUMNS = {
    "convergence": ["kind", "status", "family", "r", "N", "M", "mean", "mu0", "mu1", "value", "w2",
                    "error", "rel_error", "iterations", "refinement_gap", "converged", "message"],
    "counterexample": ["kind", "status", "family", "r", "N", "M", "mean", "mu0", "mu1", "eta", "upper",
                       "w2", "gap", "rel_gap", "message"],
    "isotropy-sweep": ["kind", "status", "family", "r", "N", "weights", "boundary", "cells", "mesh_size",
                       "worst_defect", "worst_interior_defect", "worst_boundary_defect", "anisotropy",
                       "balance_deviation", "balance_bound", "message"],
    "epsilon-isometry": ["kind", "status", "family", "r", "N", "M", "mean", "samples", "mesh_size",
                         "max_deviation", "mean_deviation", "message"],
}
PLOT_Y = {"convergence": "rel_error", "counterexample": "gap", "isotropy-sweep": "worst_defect",
          "epsilon-isometry": "max_deviation"}

DEFAULTS = {
    "mesh": {"family": "periodic-1d", "r": 0.25, "N": [8, 16, 32]},
    "mean": "log",
    "measures": {"mu0": "sine:0.5,1", "mu1": "affine:0.6"},
    "solver": {"time_steps": 32, "tol": 1e-10, "max_iter": 200, "refine": False, "grid": "auto"},
    "eta": [0.4],
    "weights": "auto",
    "boundary": "none",
    "direction": None,
    "box": None,
    "samples": 8,
    "seed": 0,
    "output": {"csv": None, "gnuplot": None},
}


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        out[k] = _merge(out[k], v) if isinstance(v, dict) and isinstance(out.get(k), dict) else v
    return out


def _listify(x):
    return list(x) if isinstance(x, (list, tuple)) else [x]


def load_config(path, overrides=()):
    """Read an experiment config, fill defaults and apply ``key.path=value``
    overrides (values parsed as JSON, else kept as strings)."""
    cfg = json.loads(Path(path).read_text())
    if not isinstance(cfg, dict):
        raise InvalidArgument("config must be a JSON object")
    cfg = _merge(DEFAULTS, cfg)
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep:
            raise click.BadParameter(f"expected key=value, got {item!r}", param_hint="--set")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        *parents, leaf = key.split(".")
        for p in parents:
            node = node.setdefault(p, {})
        node[leaf] = value
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    kind = cfg.get("kind")
    if kind not in COLUMNS:
        raise InvalidArgument(f"unknown experiment kind {kind!r}; expected one of {', '.join(COLUMNS)}")
    if cfg["mesh"]["family"] not in MESH_KINDS:
        raise InvalidArgument(f"unknown mesh family {cfg['mesh']['family']!r}")
    for key in ("N",):
        if not _listify(cfg["mesh"][key]):
            raise InvalidArgument("mesh.N grid must be nonempty")
    if kind == "counterexample" and not _listify(cfg["eta"]):
        raise InvalidArgument("eta grid must be nonempty")
    if kind in ("convergence", "counterexample") and cfg["mesh"]["family"] != "periodic-1d":
        raise InvalidArgument(f"{kind} experiments run on periodic-1d meshes")
    # descriptors must parse before any work starts
    probe = build_mesh(cfg["mesh"]["family"], cfg["mesh"]["r"], 2)
    for spec in _listify(cfg["mean"]):
        as_family(probe, spec)
    if probe.dimension == 1:
        for d in cfg["measures"].values():
            parse_density(d)


def experiment_rows(cfg):
    """One task per grid point, in output order."""
    kind, mesh_cfg = cfg["kind"], cfg["mesh"]
    tasks = []
    for r in _listify(mesh_cfg["r"]):
        for N in _listify(mesh_cfg["N"]):
            for mean in _listify(cfg["mean"]) if kind != "isotropy-sweep" else [None]:
                etas = _listify(cfg["eta"]) if kind == "counterexample" else [None]
                for eta in etas:
                    tasks.append({"kind": kind, "family": mesh_cfg["family"], "r": r, "N": int(N),
                                  "mean": mean, "eta": eta, "index": len(tasks)})
    return tasks


def run_task(task, cfg):
    """Compute one CSV row; failures are recorded in ``status``/``message``."""
    row = {k: task[k] for k in ("kind", "family", "r", "N")}
    try:
        row.update(_RUNNERS[task["kind"]](task, cfg))
        row["status"] = "ok"
    except SolverFailure as exc:
        row.update(status="solver_failure", message=str(exc))
    except (InvalidArgument, InvalidMesh, ValueError) as exc:
        row.update(status="error", message=str(exc))
    return row


def _run_convergence(task, cfg):
    sol, meas = cfg["solver"], cfg["measures"]
    mesh = build_mesh(task["family"], task["r"], task["N"])
    mu0, mu1 = parse_density(meas["mu0"]), parse_density(meas["mu1"])
    res = wt_distance(mesh, as_family(mesh, task["mean"]), project(mesh, mu0), project(mesh, mu1),
                      time_steps=sol["time_steps"], tol=sol["tol"], max_iter=sol["max_iter"],
                      refine=sol["refine"], grid=sol["grid"])
    w2 = w2_1d(mu0, mu1)
    return {"M": sol["time_steps"], "mean": task["mean"], "mu0": meas["mu0"], "mu1": meas["mu1"],
            "value": res.value, "w2": w2, "error": res.value - w2, "rel_error": abs(res.value - w2) / w2,
            "iterations": res.iterations, "refinement_gap": res.refinement_gap, "converged": res.converged}


def _run_counterexample(task, cfg):
    meas = cfg["measures"]
    M = cfg["solver"]["time_steps"]
    d = counterexample_gap(task["r"], task["N"], task["mean"], parse_density(meas["mu0"]),
                           parse_density(meas["mu1"]), task["eta"], M=M)
    return {"M": M, "mean": task["mean"], "mu0": meas["mu0"], "mu1": meas["mu1"], "eta": task["eta"],
            "upper": d["upper"], "w2": d["w2"], "gap": d["gap"], "rel_gap": d["gap"] / d["w2"]}


def _run_isotropy(task, cfg):
    mesh = build_mesh(task["family"], task["r"], task["N"])
    w = _load_weights(mesh, cfg["weights"])
    rep = isotropy_defect(mesh, w, cfg["boundary"])
    d = mesh.dimension
    v = np.asarray(cfg["direction"] if cfg["direction"] is not None else np.eye(d)[0], float)
    lo, hi = (np.asarray(b, float) for b in cfg["box"]) if cfg["box"] is not None else mesh.bounding_box()
    bal = macroscopic_balance_check(mesh, w, v, (lo, hi))
    return {"weights": cfg["weights"], "boundary": cfg["boundary"], "cells": mesh.n_cells,
            "mesh_size": mesh.mesh_size, "worst_defect": rep.worst_defect,
            "worst_interior_defect": rep.worst_interior_defect,
            "worst_boundary_defect": rep.worst_boundary_defect,
            "anisotropy": anisotropy_functional(mesh, w, v, (lo, hi)),
            "balance_deviation": bal["lhs_deviation"], "balance_bound": bal["bound"]}


def _random_measure(mesh, rng):
    """Smooth strictly positive random measure, projected onto ``mesh``."""
    if mesh.dimension == 1:
        kind = rng.integers(3)
        if kind == 0:
            mu = make_pdelta("affine", rng.uniform(-1.5, 1.5))
        elif kind == 1:
            mu = make_pdelta("sine", rng.uniform(0.1, 0.7), int(rng.integers(1, 3)))
        else:
            w = rng.uniform(0.1, 0.4)
            mu = make_pdelta("tent", rng.uniform(w, 1 - w), w, rng.uniform(0.1, 0.7))
        return as_masses(project(mesh, mu))
    k = rng.integers(1, 3, size=2) * rng.choice([-1, 1], size=2)
    alpha, phase = rng.uniform(0.1, 0.6), rng.uniform(0, 2 * math.pi)

    def u(x):
        x = np.atleast_2d(x)
        return 1 + alpha * np.cos(2 * math.pi * (x @ k) + phase)

    mass = project_signed(mesh, u)
    return mass / mass.sum()


def _reference_w2(mesh, m0, m1):
    if mesh.dimension == 1:
        q = lambda m: PiecewiseConstantDensity.from_cells(embed(mesh, m))
        return w2_1d(q(m0), q(m1))
    atoms = lambda m: [(tuple(x), w) for x, w in zip(mesh.anchors, m)]
    return w2_lp_oracle(atoms(m0), atoms(m1))


def _run_isometry(task, cfg):
    sol = cfg["solver"]
    mesh = build_mesh(task["family"], task["r"], task["N"])
    family = as_family(mesh, task["mean"])
    rng = np.random.default_rng([int(cfg["seed"]), task["index"]])
    devs = []
    for _ in range(int(cfg["samples"])):
        m0, m1 = _random_measure(mesh, rng), _random_measure(mesh, rng)
        res = wt_distance(mesh, family, m0, m1, time_steps=sol["time_steps"], tol=sol["tol"],
                          max_iter=sol["max_iter"], refine=False, grid=sol["grid"])
        devs.append(abs(res.value - _reference_w2(mesh, m0, m1)))
    return {"M": sol["time_steps"], "mean": task["mean"], "samples": len(devs),
            "mesh_size": mesh.mesh_size, "max_deviation": max(devs), "mean_deviation": float(np.mean(devs))}


_RUNNERS = {"convergence": _run_convergence, "counterexample": _run_counterexample,
            "isotropy-sweep": _run_isotropy, "epsilon-isometry": _run_isometry}


def run_experiment(cfg, jobs=1):
    tasks = experiment_rows(cfg)
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run_task, tasks, [cfg] * len(tasks)))
    return [run_task(t, cfg) for t in tasks]


def gnuplot_script(kind, csv_path):
    cols = ["schema_version", *COLUMNS[kind]]
    x, y = cols.index("N") + 1, cols.index(PLOT_Y[kind]) + 1
    logy = "" if kind == "counterexample" else "set logscale y\n"
    return (
        "set datafile separator ','\n"
        "set key autotitle columnhead\n"
        "set logscale x\n"
        f"{logy}"
        f"set xlabel 'N'\nset ylabel '{PLOT_Y[kind]}'\n"
        f"plot '{csv_path}' using {x}:{y} with linespoints\n"
    )


@cli.group()
def exp():
    """Reproducible experiment sweeps."""


@exp.command("run")
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--jobs", type=int, default=1, show_default=True, help="Worker processes.")
@click.option("--seed", type=int, default=None, help="Overrides the config seed.")
@click.option("-o", "--out", "out", default=None, help="CSV path (overrides output.csv; '-' for stdout).")
@click.option("--gnuplot", "gnuplot", default=None, help="Write a companion gnuplot script here.")
@click.option("--set", "overrides", multiple=True, help="Override a config entry: key.path=value.")
def exp_run(config, jobs, seed, out, gnuplot, overrides):
    """Run the experiment described by CONFIG (JSON) and write its CSV table."""
    if jobs < 1:
        raise click.BadParameter("must be positive", param_hint="--jobs")
    cfg = load_config(config, overrides)
    if seed is not None:
        cfg["seed"] = seed
    csv_path = out if out is not None else cfg["output"].get("csv")
    plot_path = gnuplot if gnuplot is not None else cfg["output"].get("gnuplot")
    rows = run_experiment(cfg, jobs)
    write_csv(csv_path, COLUMNS[cfg["kind"]], rows)
    if plot_path:
        Path(plot_path).write_text(gnuplot_script(cfg["kind"], csv_path or "data.csv"))
    failed = [r for r in rows if r["status"] != "ok"]
    if failed:
        click.echo(f"{len(failed)} of {len(rows)} rows failed", err=True)
        return EXIT_SOLVER if any(r["status"] == "solver_failure" for r in failed) else EXIT_INVALID
    return EXIT_OK


def main(argv=None):
    """Entry point returning the process exit code."""
    try:
        rv = cli.main(args=argv, prog_name="fvot", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        exc.show()
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_INVALID
    except click.Abort:
        click.echo("aborted", err=True)
        return EXIT_INVALID
    except SolverFailure as exc:
        click.echo(f"solver failure: {exc}", err=True)
        return EXIT_SOLVER
    except (InvalidArgument, InvalidMesh, OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_INVALID
    return rv if isinstance(rv, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
