"""Command-line interface: data generation, graphs, solves, experiments,
validation probes, and the image pipeline.

Every subcommand writes its artifacts into ``--out`` and exits 0;
failures exit with a categorized diagnostic (2 configuration, 3 data,
4 solver). Parameters come from defaults, then an optional ``--config``
key=value file, then explicit flags, in that order. ``--threads`` (or
the PWGL_THREADS variable) caps the numeric thread pools for the run;
results are deterministic for a fixed seed regardless of the cap, and
report.json records every derived quantity as a resolved number.
"""

from __future__ import annotations

import argparse
import contextlib
import os
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .classify import one_vs_rest, prediction_summary, save_predictions_csv
from .config import (
    load_config,
    parse_bool,
    parse_int_list,
    parse_methods,
    resolve_config,
)
from .errors import ConfigError, DataError, SolverError
from .experiments import (
    SyntheticSpec,
    generate,
    run_decision_boundary,
    run_strip,
    run_two_point_box,
    two_point_labels,
    write_boundary_csv,
    write_field_csv,
    write_report_json,
)
from .geometry import load_points_csv, save_points_csv
from .graph import (
    attach_energy_weights,
    build_eps_graph,
    build_knn_graph,
    load_graph,
    restrict_to_labeled_components,
    save_graph,
)
from .kernels import (
    KernelProfile,
    WeightProfile,
    flat_profile,
    parse_zeta,
    resolve_zeta,
)
from .mnist import load_idx, run_mnist, subsample
from .probes import (
    barrier_check,
    consistency_check,
    radial_oracle_check,
    wnll_degeneracy_probe,
)
from .solve import WnllParams, solve_pw, solve_standard, solve_wnll

COMMON_DEFAULTS = {"out": ".", "seed": 0, "threads": None,
                   "deterministic": True}

COMMON_SCHEMA = {"out": str, "seed": int, "threads": int,
                 "deterministic": parse_bool}

GENERATOR_ALIASES = {
    "box1d": ("uniform_box", 1),
    "box2d": ("uniform_box", 2),
    "box3d": ("uniform_box", 3),
    "strip3d": ("strip_density", 3),
    "disc2d": ("disc_with_boundary_ring", 2),
}

STRIP_LABELS = ((np.array([0.0, 0.2, 0.2]), 0.0),
                (np.array([1.0, 0.2, 0.2]), 1.0))

EXPERIMENTS = ("two_point_box", "decision_boundary", "strip")
PROBES = ("consistency", "barrier", "radial", "wnll_degeneracy")

# flags each experiment / probe actually consumes; anything else given
# explicitly is a configuration error, mirroring strict config parsing
EXPERIMENT_PARAMS = {
    "two_point_box": ("n", "d", "alpha", "zeta", "r0", "eps", "tol",
                      "max_iter", "methods"),
    "decision_boundary": ("n", "trials", "alpha", "zeta", "r0", "eps",
                          "tol", "max_iter", "methods"),
    "strip": ("n", "trials", "alpha", "zeta", "r0", "eps",
              "density_ratio", "tol", "max_iter", "methods"),
}
PROBE_PARAMS = {
    "consistency": ("n_schedule", "d", "eps", "alpha", "r0", "zeta"),
    "barrier": ("n_schedule", "d", "alpha", "beta", "r0", "eps"),
    "radial": ("n", "d", "alpha", "zeta", "eps", "bins"),
    "wnll_degeneracy": ("n_schedule", "d", "alpha", "zeta", "r0", "tol"),
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE",
                        help="key=value config file")
    parser.add_argument("--out", metavar="DIR",
                        help="output directory (default: current)")
    parser.add_argument("--seed", type=int, help="master seed (default 0)")
    parser.add_argument("--threads", type=int,
                        help="cap numeric thread pools (or PWGL_THREADS)")
    parser.add_argument("--deterministic",
                        action=argparse.BooleanOptionalAction,
                        help="recorded in the report; computation is "
                             "deterministic for a fixed seed either way")


def _merge(args: argparse.Namespace, command: str, schema: dict,
           defaults: dict) -> dict:
    """defaults, then config file values, then explicit flags."""
    params = dict(COMMON_DEFAULTS)
    params.update(defaults)
    full_schema = dict(COMMON_SCHEMA)
    full_schema.update(schema)
    if getattr(args, "config", None):
        params.update(resolve_config(load_config(args.config), command,
                                     full_schema))
    for key in full_schema:
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    return params


def _outdir(params: dict) -> Path:
    out = Path(params["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _thread_cap(params: dict):
    n = params.get("threads")
    if n is None:
        env = os.environ.get("PWGL_THREADS")
        if env:
            try:
                n = int(env)
            except ValueError:
                raise ConfigError(
                    f"PWGL_THREADS must be an integer, got {env!r}"
                ) from None
    if n is None:
        return contextlib.nullcontext()
    if n < 1:
        raise ConfigError(f"thread cap must be >= 1, got {n}")
    return threadpool_limits(limits=int(n))


def _kernel_from(params: dict) -> KernelProfile:
    kind = params.get("kernel", "gaussian")
    if kind == "flat":
        return flat_profile()
    if kind == "gaussian":
        return KernelProfile(kind="gaussian",
                             sigma_factor=params.get("sigma_factor", 0.5))
    if kind == "indicator":
        return KernelProfile(kind="indicator")
    raise ConfigError(
        f"kernel must be gaussian, indicator, or flat; got {kind!r}"
    )


def _print_artifact(path: Path, note: str = "") -> None:
    suffix = f" ({note})" if note else ""
    print(f"wrote {path}{suffix}")


def _require_explicit(allowed: tuple, given: dict, context: str) -> None:
    extras = sorted(k for k in given if k not in allowed)
    if extras:
        raise ConfigError(
            f"{context} does not take: {', '.join(extras)}; "
            f"accepted: {', '.join(sorted(allowed))}"
        )


# ---------------------------------------------------------------------------
# generate


def cmd_generate(args) -> int:
    schema = {"spec": str, "n": int, "d": int, "density_ratio": float,
              "ring_width": float}
    defaults = {"spec": "box2d", "n": 1000, "d": None,
                "density_ratio": 0.6, "ring_width": 0.02}
    p = _merge(args, "generate", schema, defaults)
    name = p["spec"]
    if name in GENERATOR_ALIASES:
        generator, alias_d = GENERATOR_ALIASES[name]
        if p["d"] is not None and p["d"] != alias_d:
            raise ConfigError(
                f"spec {name!r} fixes d={alias_d}, got --d {p['d']}"
            )
        d = alias_d
    else:
        generator = name
        d = p["d"] if p["d"] is not None else 2
    if generator == "uniform_box":
        labels = two_point_labels(d)
    elif generator == "strip_density":
        labels = STRIP_LABELS
    elif generator == "disc_with_boundary_ring":
        labels = ((np.zeros(d), 0.0),)
    else:
        raise ConfigError(f"unknown generator spec: {name!r}")
    spec = SyntheticSpec(generator, n=p["n"], d=d, seed=p["seed"],
                         labels=labels, density_ratio=p["density_ratio"],
                         ring_width=p["ring_width"])
    cloud = generate(spec)
    with _thread_cap(p):
        out = _outdir(p)
        path = out / "points.csv"
        save_points_csv(path, cloud)
    _print_artifact(path, f"{cloud.n} nodes, d={cloud.dim}, "
                          f"{cloud.label_indices.size} labeled")
    return 0


# ---------------------------------------------------------------------------
# graph


def _graph_schema() -> dict:
    return {"points": str, "eps": float, "knn": int, "kernel": str,
            "sigma_factor": float, "sigma_neighbor": int,
            "knn_algorithm": str}


def _build_graph(cloud, p: dict):
    if p.get("eps") is not None and p.get("knn") is not None:
        raise ConfigError("give either --eps or --knn, not both")
    if p.get("eps") is not None:
        return build_eps_graph(cloud, p["eps"], _kernel_from(p))
    if p.get("knn") is not None:
        return build_knn_graph(cloud, p["knn"],
                               sigma_neighbor=p.get("sigma_neighbor"),
                               algorithm=p.get("knn_algorithm", "auto"))
    raise ConfigError("graph construction needs --eps or --knn")


def cmd_graph(args) -> int:
    schema = _graph_schema()
    p = _merge(args, "graph", schema, {"points": None, "eps": None,
                                       "knn": None, "kernel": "gaussian",
                                       "sigma_factor": 0.5,
                                       "sigma_neighbor": None,
                                       "knn_algorithm": "auto"})
    if not p["points"]:
        raise ConfigError("graph needs --points")
    cloud = load_points_csv(p["points"])
    with _thread_cap(p):
        graph = _build_graph(cloud, p)
        out = _outdir(p)
        gpath = out / "graph.csv"
        save_graph(gpath, graph)
        report = {
            "command": "graph",
            "n": graph.n,
            "dim": cloud.dim,
            "edges": int(graph.W.nnz // 2),
            "construction": graph.construction,
            "points": str(p["points"]),
        }
        rpath = out / "report.json"
        write_report_json(rpath, report)
    _print_artifact(gpath, f"{graph.n} nodes, {report['edges']} edges")
    _print_artifact(rpath)
    return 0


# ---------------------------------------------------------------------------
# solve / classify


def _solve_schema() -> dict:
    schema = _graph_schema()
    schema.update({"graph": str, "method": str, "alpha": float,
                   "r0": float, "zeta": parse_zeta, "wnll_mu": float,
                   "tol": float, "max_iter": int,
                   "largest_component": parse_bool})
    return schema


def _solve_defaults() -> dict:
    return {"points": None, "graph": None, "eps": None, "knn": None,
            "kernel": "gaussian", "sigma_factor": 0.5,
            "sigma_neighbor": None, "knn_algorithm": "auto",
            "method": "pw", "alpha": 2.0, "r0": 1.0,
            "zeta": None, "wnll_mu": None, "tol": 1e-10,
            "max_iter": None, "largest_component": False}


def _prepare_problem(p: dict):
    """Load points, obtain a graph, and resolve the weight profile."""
    if not p["points"]:
        raise ConfigError("need --points")
    cloud = load_points_csv(p["points"])
    if p.get("graph"):
        if p.get("eps") is not None or p.get("knn") is not None:
            raise ConfigError("--graph excludes --eps/--knn")
        graph = load_graph(p["graph"])
        if graph.n != cloud.n:
            raise DataError(
                f"graph has {graph.n} nodes, points file has {cloud.n}"
            )
    else:
        graph = _build_graph(cloud, p)
    dropped = 0
    if p["largest_component"]:
        before = cloud.n
        graph, cloud, kept = restrict_to_labeled_components(graph, cloud)
        dropped = before - kept.size
    eps = graph.construction.get("eps")
    zeta = p["zeta"]
    if zeta is None:
        # no eps scale exists on a knn graph, so default to a plain
        # large truncation there
        zeta = ("scaled", 50.0) if eps is not None else 1e7
    if isinstance(zeta, tuple):
        if eps is None:
            raise ConfigError(
                "scaled zeta needs an eps graph; give a plain number"
            )
        zeta_value = resolve_zeta(zeta, cloud.n, eps)
    else:
        zeta_value = float(zeta)
    wp = WeightProfile(alpha=p["alpha"], r0=p["r0"], zeta=zeta_value)
    return cloud, graph, wp, zeta_value, dropped


def _resolved_block(p: dict, cloud, graph, zeta_value: float,
                    dropped: int) -> dict:
    return {
        "n_nodes": cloud.n,
        "dim": cloud.dim,
        "edges": int(graph.W.nnz // 2),
        "construction": graph.construction,
        "method": p["method"],
        "alpha": p["alpha"],
        "r0": p["r0"],
        "zeta": float(zeta_value),
        "tol": p["tol"],
        "dropped_nodes": dropped,
        "seed": p["seed"],
        "deterministic": p["deterministic"],
    }


def cmd_solve(args) -> int:
    p = _merge(args, "solve", _solve_schema(), _solve_defaults())
    with _thread_cap(p):
        cloud, graph, wp, zeta_value, dropped = _prepare_problem(p)
        method = p["method"]
        if method == "pw":
            ew = attach_energy_weights(graph, cloud, wp)
            u, rep = solve_pw(graph, cloud, ew, tol=p["tol"],
                              max_iter=p["max_iter"])
        elif method == "standard":
            u, rep = solve_standard(graph, cloud, tol=p["tol"],
                                    max_iter=p["max_iter"])
        elif method == "wnll":
            params = (WnllParams(mu=p["wnll_mu"])
                      if p["wnll_mu"] is not None else WnllParams())
            u, rep = solve_wnll(graph, cloud, params=params, tol=p["tol"],
                                max_iter=p["max_iter"])
        else:
            raise ConfigError(
                f"method must be pw, standard, or wnll; got {method!r}"
            )
        out = _outdir(p)
        fpath = out / "field.csv"
        write_field_csv(fpath, cloud, {method: u.values})
        report = {
            "command": "solve",
            "params": _resolved_block(p, cloud, graph, zeta_value, dropped),
            "solve": {
                "iterations": rep.iterations,
                "residual": rep.residual,
                "energy": rep.energy,
            },
        }
        rpath = out / "report.json"
        write_report_json(rpath, report)
    _print_artifact(fpath, f"{cloud.n} nodes")
    _print_artifact(rpath)
    return 0


def cmd_classify(args) -> int:
    p = _merge(args, "classify", _solve_schema(), _solve_defaults())
    with _thread_cap(p):
        cloud, graph, wp, zeta_value, dropped = _prepare_problem(p)
        if cloud.label_classes is None:
            raise DataError(
                f"{p['points']}: no class ids; classify needs labeled "
                "classes in the points file"
            )
        ew = None
        if p["method"] == "pw":
            ew = attach_energy_weights(graph, cloud, wp)
        wnll_params = (WnllParams(mu=p["wnll_mu"])
                       if p["wnll_mu"] is not None else None)
        pred = one_vs_rest(graph, cloud, ew=ew, method=p["method"],
                           wnll_params=wnll_params, tol=p["tol"],
                           max_iter=p["max_iter"])
        out = _outdir(p)
        ppath = out / "predictions.csv"
        save_predictions_csv(ppath, pred)
        report = {
            "command": "classify",
            "params": _resolved_block(p, cloud, graph, zeta_value, dropped),
            "classes": int(pred.class_count),
            "summary": prediction_summary(pred),
            "iterations": int(sum(r.iterations for r in pred.reports)),
        }
        rpath = out / "report.json"
        write_report_json(rpath, report)
    _print_artifact(ppath, f"{pred.class_count} classes")
    _print_artifact(rpath)
    return 0


# ---------------------------------------------------------------------------
# experiment / validate


def _experiment_schema() -> dict:
    return {"n": int, "d": int, "trials": int, "alpha": float,
            "r0": float, "zeta": parse_zeta, "eps": float,
            "density_ratio": float, "tol": float, "max_iter": int,
            "methods": parse_methods}


def cmd_experiment(args) -> int:
    name = args.name
    if name not in EXPERIMENTS:
        raise ConfigError(
            f"unknown experiment {name!r}; choose from "
            f"{', '.join(EXPERIMENTS)}"
        )
    schema = _experiment_schema()
    p = _merge(args, "experiment", schema, {k: None for k in schema})
    allowed = EXPERIMENT_PARAMS[name]
    given = {k: v for k, v in p.items() if k in schema and v is not None}
    _require_explicit(allowed, given, f"experiment {name!r}")
    kwargs = {k: p[k] for k in allowed if p[k] is not None}
    kwargs["seed"] = p["seed"]
    with _thread_cap(p):
        if name == "two_point_box":
            result = run_two_point_box(**kwargs)
        elif name == "decision_boundary":
            result = run_decision_boundary(**kwargs)
        else:
            result = run_strip(**kwargs)
        out = _outdir(p)
        rpath = out / "report.json"
        write_report_json(rpath, result.report)
        _print_artifact(rpath)
        if result.cloud is not None and result.fields:
            fpath = out / "field.csv"
            write_field_csv(fpath, result.cloud, result.fields)
            _print_artifact(fpath)
        if getattr(result, "boundary", None):
            bpath = out / "boundary.csv"
            write_boundary_csv(bpath, result.cloud, result.boundary)
            _print_artifact(bpath)
    return 0


def _probe_schema() -> dict:
    return {"n": int, "n_schedule": parse_int_list, "d": int,
            "alpha": float, "beta": float, "r0": float, "zeta": parse_zeta,
            "eps": float, "bins": int, "tol": float}


def cmd_validate(args) -> int:
    name = args.name
    if name not in PROBES:
        raise ConfigError(
            f"unknown validation probe {name!r}; choose from "
            f"{', '.join(PROBES)}"
        )
    schema = _probe_schema()
    p = _merge(args, "validate", schema, {k: None for k in schema})
    allowed = PROBE_PARAMS[name]
    given = {k: v for k, v in p.items() if k in schema and v is not None}
    _require_explicit(allowed, given, f"validate {name!r}")
    kwargs = {k: p[k] for k in allowed if p[k] is not None}
    kwargs["seed"] = p["seed"]
    if name in ("consistency", "radial") and "zeta" in kwargs:
        if isinstance(kwargs["zeta"], tuple):
            raise ConfigError(f"probe {name!r} takes a plain zeta number")
        kwargs["zeta"] = float(kwargs["zeta"])
    with _thread_cap(p):
        if name == "consistency":
            rep = consistency_check(**kwargs)
        elif name == "barrier":
            rep = barrier_check(**kwargs)
        elif name == "radial":
            rep = radial_oracle_check(**kwargs)
        else:
            rep = wnll_degeneracy_probe(**kwargs)
        out = _outdir(p)
        rpath = out / "report.json"
        write_report_json(rpath, rep)
    _print_artifact(rpath)
    return 0


# ---------------------------------------------------------------------------
# mnist


def cmd_mnist(args) -> int:
    schema = {"images": str, "labels": str, "subsample": int,
              "labels_per_class": int, "trials": int, "k": int,
              "sigma_neighbor": int, "alpha": float, "zeta": float,
              "r0": float, "tol": float, "max_iter": int,
              "knn_algorithm": str, "methods": parse_methods}
    defaults = {"images": None, "labels": None, "subsample": None,
                "labels_per_class": 10, "trials": 10, "k": 50,
                "sigma_neighbor": None, "alpha": 2.0, "zeta": 1e7,
                "r0": 0.1, "tol": 1e-10, "max_iter": None,
                "knn_algorithm": "auto",
                "methods": ("pw", "standard", "wnll")}
    p = _merge(args, "mnist", schema, defaults)
    if not p["images"] or not p["labels"]:
        raise ConfigError("mnist needs --images and --labels")
    with _thread_cap(p):
        data = load_idx(p["images"], p["labels"])
        if p["subsample"] is not None:
            data = subsample(data, p["subsample"], seed=p["seed"])
        series = run_mnist(data, labels_per_class=p["labels_per_class"],
                           trials=p["trials"], seed=p["seed"],
                           methods=p["methods"], k=p["k"],
                           sigma_neighbor=p["sigma_neighbor"],
                           alpha=p["alpha"], zeta=p["zeta"], r0=p["r0"],
                           tol=p["tol"], max_iter=p["max_iter"],
                           algorithm=p["knn_algorithm"])
        series.report["params"]["subsample"] = p["subsample"]
        out = _outdir(p)
        rpath = out / "report.json"
        write_report_json(rpath, series.report)
    _print_artifact(rpath)
    for m, agg in sorted(series.aggregate.items()):
        print(f"{m}: accuracy {agg['mean_accuracy']:.4f} "
              f"+- {agg['std_accuracy']:.4f}")
    return 0


# ---------------------------------------------------------------------------
# parser and entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pwgl",
        description="Graph-based semi-supervised learning with singular "
                    "label weights.",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample a synthetic point cloud")
    g.add_argument("--spec", help="box1d/box2d/box3d/strip3d/disc2d or a "
                                  "generator name")
    g.add_argument("--n", type=int, help="sample size")
    g.add_argument("--d", type=int, help="dimension (generator names only)")
    g.add_argument("--density-ratio", type=float, dest="density_ratio")
    g.add_argument("--ring-width", type=float, dest="ring_width")
    _add_common(g)
    g.set_defaults(func=cmd_generate)

    def add_graph_flags(sp):
        sp.add_argument("--points", help="points.csv input")
        sp.add_argument("--eps", type=float, help="epsilon-ball radius")
        sp.add_argument("--knn", type=int, help="k for a kNN graph")
        sp.add_argument("--kernel", choices=("gaussian", "indicator",
                                             "flat"))
        sp.add_argument("--sigma-factor", type=float, dest="sigma_factor")
        sp.add_argument("--sigma-neighbor", type=int,
                        dest="sigma_neighbor")
        sp.add_argument("--knn-algorithm", dest="knn_algorithm",
                        choices=("auto", "kdtree", "brute"))

    gr = sub.add_parser("graph", help="build and save a graph")
    add_graph_flags(gr)
    _add_common(gr)
    gr.set_defaults(func=cmd_graph)

    def add_solve_flags(sp):
        add_graph_flags(sp)
        sp.add_argument("--graph", help="load a saved graph.csv instead "
                                        "of building one")
        sp.add_argument("--method", choices=("pw", "standard", "wnll"))
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--r0", type=float)
        sp.add_argument("--zeta", type=parse_zeta,
                        help="number or scaled:<c> for c*n*eps^2 "
                             "(default scaled:50, or 1e7 on knn graphs)")
        sp.add_argument("--wnll-mu", type=float, dest="wnll_mu")
        sp.add_argument("--tol", type=float)
        sp.add_argument("--max-iter", type=int, dest="max_iter")
        sp.add_argument("--largest-component", dest="largest_component",
                        action="store_const", const=True,
                        help="drop connected components without labels")

    so = sub.add_parser("solve", help="harmonic extension of the labels")
    add_solve_flags(so)
    _add_common(so)
    so.set_defaults(func=cmd_solve)

    cl = sub.add_parser("classify", help="one-vs-rest multiclass labels")
    add_solve_flags(cl)
    _add_common(cl)
    cl.set_defaults(func=cmd_classify)

    ex = sub.add_parser("experiment", help="run a reference experiment")
    ex.add_argument("name", choices=EXPERIMENTS)
    ex.add_argument("--n", type=int)
    ex.add_argument("--d", type=int)
    ex.add_argument("--trials", type=int)
    ex.add_argument("--alpha", type=float)
    ex.add_argument("--r0", type=float)
    ex.add_argument("--zeta", type=parse_zeta)
    ex.add_argument("--eps", type=float)
    ex.add_argument("--density-ratio", type=float, dest="density_ratio")
    ex.add_argument("--tol", type=float)
    ex.add_argument("--max-iter", type=int, dest="max_iter")
    ex.add_argument("--methods", type=parse_methods,
                    help="comma list from pw,standard,wnll")
    _add_common(ex)
    ex.set_defaults(func=cmd_experiment)

    va = sub.add_parser("validate", help="run a theory validation probe")
    va.add_argument("name", choices=PROBES)
    va.add_argument("--n", type=int)
    va.add_argument("--n-schedule", type=parse_int_list,
                    dest="n_schedule", help="comma list of sample sizes")
    va.add_argument("--d", type=int)
    va.add_argument("--alpha", type=float)
    va.add_argument("--beta", type=float)
    va.add_argument("--r0", type=float)
    va.add_argument("--zeta", type=parse_zeta)
    va.add_argument("--eps", type=float)
    va.add_argument("--bins", type=int)
    va.add_argument("--tol", type=float)
    _add_common(va)
    va.set_defaults(func=cmd_validate)

    mn = sub.add_parser("mnist", help="image classification pipeline on "
                                      "IDX files")
    mn.add_argument("--images", help="IDX image file (optionally .gz)")
    mn.add_argument("--labels", help="IDX label file (optionally .gz)")
    mn.add_argument("--subsample", type=int)
    mn.add_argument("--labels-per-class", type=int,
                    dest="labels_per_class")
    mn.add_argument("--trials", type=int)
    mn.add_argument("--k", type=int)
    mn.add_argument("--sigma-neighbor", type=int, dest="sigma_neighbor")
    mn.add_argument("--alpha", type=float)
    mn.add_argument("--zeta", type=float)
    mn.add_argument("--r0", type=float)
    mn.add_argument("--tol", type=float)
    mn.add_argument("--max-iter", type=int, dest="max_iter")
    mn.add_argument("--knn-algorithm", dest="knn_algorithm",
                    choices=("auto", "kdtree", "brute"))
    mn.add_argument("--methods", type=parse_methods)
    _add_common(mn)
    mn.set_defaults(func=cmd_mnist)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"pwgl: config error: {e}", file=sys.stderr)
        return 2
    except DataError as e:
        print(f"pwgl: data error: {e}", file=sys.stderr)
        return 3
    except SolverError as e:
        print(f"pwgl: solver error: {e}", file=sys.stderr)
        return 4
    except OSError as e:
        print(f"pwgl: i/o error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
