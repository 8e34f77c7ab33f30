"""Synthetic data generators and experiment drivers.

Three reference experiments on synthetic clouds: the two-point box
(degeneracy of the standard Laplacian vs the weighted method), the
decision-boundary stability study, and the strip classification task in
three dimensions. Each driver resolves its parameters to plain numbers,
runs the requested methods, and returns JSON-ready reports plus the node
fields needed for field.csv.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import ConfigError
from .geometry import PointCloud
from .graph import (
    attach_energy_weights,
    build_eps_graph,
    restrict_to_labeled_components,
)
from .kernels import KernelProfile, WeightProfile, resolve_zeta
from .solve import WnllParams, solve_pw, solve_standard, solve_wnll

DEFAULT_METHODS = ("pw", "standard", "wnll")


def experiment_rng(master_seed, trial: int = 0) -> np.random.Generator:
    """Counter-based generator: the stream is a pure function of
    (master_seed, trial), independent of execution order and threads."""
    if isinstance(master_seed, (tuple, list)):
        entropy = tuple(int(s) for s in master_seed) + (int(trial),)
    else:
        entropy = (int(master_seed), int(trial))
    return np.random.Generator(
        np.random.Philox(seed=np.random.SeedSequence(entropy))
    )


@dataclass(frozen=True)
class SyntheticSpec:
    """Declarative description of one synthetic sample.

    generator: "uniform_box" (unit box in d dims), "strip_density"
    (d = 3, density density_ratio on [strip_lo, strip_hi] x [0,1]^2 and 1
    elsewhere), or "disc_with_boundary_ring" (uniform unit ball; sampled
    nodes within ring_width of the unit sphere become labels with value
    ring_value).

    labels: tuple of (coords, value) or (coords, value, class_id); the
    coordinates are appended to the sample as extra nodes.
    """

    generator: str
    n: int
    d: int
    seed: object
    labels: tuple = ()
    density_ratio: float = 0.6
    strip_lo: float = 0.45
    strip_hi: float = 0.55
    ring_width: float = 0.01
    ring_value: float = 1.0

    def __post_init__(self):
        if self.generator not in ("uniform_box", "strip_density",
                                  "disc_with_boundary_ring"):
            raise ConfigError(f"unknown generator: {self.generator!r}")
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if self.d < 1:
            raise ConfigError(f"d must be >= 1, got {self.d}")
        if self.generator == "strip_density":
            if self.d != 3:
                raise ConfigError("strip_density is defined for d = 3")
            if not 0.0 < self.density_ratio <= 1.0:
                raise ConfigError("density_ratio must be in (0, 1]")
            if not 0.0 <= self.strip_lo < self.strip_hi <= 1.0:
                raise ConfigError("strip bounds must satisfy "
                                  "0 <= lo < hi <= 1")
        if self.generator == "disc_with_boundary_ring":
            if not 0.0 < self.ring_width < 1.0:
                raise ConfigError("ring_width must be in (0, 1)")
        for lab in self.labels:
            if len(lab) not in (2, 3):
                raise ConfigError(
                    "labels must be (coords, value) or "
                    "(coords, value, class_id)"
                )
            if len(np.atleast_1d(lab[0])) != self.d:
                raise ConfigError(
                    f"label coordinate {lab[0]!r} is not {self.d}-dimensional"
                )


def _sample_uniform_box(g: np.random.Generator, n: int, d: int) -> np.ndarray:
    return g.random((n, d))


def _sample_strip(g, n, lo, hi, ratio) -> np.ndarray:
    """Rejection from the uniform box: accept strip points with
    probability `ratio`, others always."""
    out = np.empty((n, 3))
    have = 0
    while have < n:
        cand = g.random((max(2 * (n - have), 64), 3))
        accept = g.random(cand.shape[0])
        in_strip = (cand[:, 0] >= lo) & (cand[:, 0] <= hi)
        keep = np.where(in_strip, accept < ratio, True)
        kept = cand[keep]
        take = min(n - have, kept.shape[0])
        out[have:have + take] = kept[:take]
        have += take
    return out


def _sample_unit_ball(g, n, d) -> np.ndarray:
    """Rejection from [-1, 1]^d."""
    out = np.empty((n, d))
    have = 0
    while have < n:
        cand = g.random((max(2 * (n - have), 64), d)) * 2.0 - 1.0
        keep = (cand * cand).sum(axis=1) <= 1.0
        kept = cand[keep]
        take = min(n - have, kept.shape[0])
        out[have:have + take] = kept[:take]
        have += take
    return out


def generate(spec: SyntheticSpec) -> PointCloud:
    """Draw the sample and append the declared label coordinates as extra
    nodes, so the cloud is the union of the sample and the label set."""
    g = experiment_rng(spec.seed)
    if spec.generator == "uniform_box":
        pts = _sample_uniform_box(g, spec.n, spec.d)
    elif spec.generator == "strip_density":
        pts = _sample_strip(g, spec.n, spec.strip_lo, spec.strip_hi,
                            spec.density_ratio)
    else:
        pts = _sample_unit_ball(g, spec.n, spec.d)

    label_pts = [np.atleast_1d(np.asarray(lab[0], dtype=np.float64))
                 for lab in spec.labels]
    label_vals = [float(lab[1]) for lab in spec.labels]
    label_cls = [int(lab[2]) for lab in spec.labels if len(lab) == 3]
    if label_cls and len(label_cls) != len(spec.labels):
        raise ConfigError("either all labels carry a class id or none")

    idx = list(range(spec.n, spec.n + len(label_pts)))
    vals = list(label_vals)
    classes = list(label_cls)
    if spec.generator == "disc_with_boundary_ring":
        radii = np.sqrt((pts * pts).sum(axis=1))
        ring = np.flatnonzero(radii > 1.0 - spec.ring_width)
        idx.extend(int(i) for i in ring)
        vals.extend(float(spec.ring_value) for _ in ring)
        if classes:
            classes.extend(int(spec.ring_value) for _ in ring)

    all_pts = np.vstack([pts] + [p[None, :] for p in label_pts]) \
        if label_pts else pts
    if not idx:
        raise ConfigError("spec declares no labels")
    return PointCloud(
        all_pts,
        np.asarray(idx, dtype=np.int64),
        np.asarray(vals, dtype=np.float64),
        np.asarray(classes, dtype=np.int64) if classes else None,
    )


@dataclass
class ExperimentReport:
    """One experiment run: resolved parameters, metrics, artifacts."""

    report: dict
    cloud: PointCloud | None = None
    fields: dict = field(default_factory=dict)
    boundary: dict | None = None


@dataclass
class TrialSeries:
    """Per-trial reports plus the aggregate, with trial 0 artifacts."""

    experiment: str
    master_seed: object
    seeds: list
    per_trial: list
    aggregate: dict
    report: dict
    cloud: PointCloud | None = None
    fields: dict = field(default_factory=dict)
    boundary: dict | None = None

    @property
    def trial_count(self) -> int:
        return len(self.per_trial)


def _versions() -> dict:
    import scipy

    return {"pwgl": __version__, "numpy": np.__version__,
            "scipy": scipy.__version__}


def _drop_unlabeled(graph, cloud):
    """Remove components without a label; the solver refuses them."""
    graph2, cloud2, kept = restrict_to_labeled_components(graph, cloud)
    return graph2, cloud2, cloud.n - kept.size


def _solve_methods(graph, cloud, ew, methods, tol, max_iter):
    out = {}
    for m in methods:
        if m == "pw":
            u, rep = solve_pw(graph, cloud, ew, tol=tol, max_iter=max_iter)
        elif m == "standard":
            u, rep = solve_standard(graph, cloud, tol=tol, max_iter=max_iter)
        elif m == "wnll":
            u, rep = solve_wnll(graph, cloud, tol=tol, max_iter=max_iter)
        else:
            raise ConfigError(f"unknown method: {m!r}")
        out[m] = (u, rep)
    return out


def two_point_labels(d: int) -> tuple:
    """The box experiment labels: value 0 at (0, 0.5, ..) and 1 at
    (1, 0.5, ..)."""
    a = np.full(d, 0.5)
    b = np.full(d, 0.5)
    a[0], b[0] = 0.0, 1.0
    return ((a, 0.0), (b, 1.0))


def run_two_point_box(n: int = 20_000, d: int = 2, seed: int = 0,
                      alpha: float = 2.0, zeta=("scaled", 50.0),
                      r0: float = 1.0, eps: float | None = None,
                      kernel: KernelProfile | None = None,
                      methods=DEFAULT_METHODS, tol: float = 1e-10,
                      max_iter: int | None = None) -> ExperimentReport:
    """Uniform box with one label on each face midpoint along x_1.

    Defaults follow the reference setup: eps = 2 / n^(1/d), Gaussian
    weights at sigma = eps/2, r0 = 1. Reported per method: corr(u, x_1),
    range of u, and the fraction with |u - 0.5| < 0.05, all over
    unlabeled nodes.
    """
    if d not in (2, 3):
        raise ConfigError("two_point_box is defined for d in {2, 3}")
    t0 = time.perf_counter()
    spec = SyntheticSpec("uniform_box", n=n, d=d, seed=seed,
                         labels=two_point_labels(d))
    cloud = generate(spec)
    if eps is None:
        eps = 2.0 / cloud.n ** (1.0 / d)
    kernel = kernel or KernelProfile(kind="gaussian", sigma_factor=0.5)
    zeta_value = resolve_zeta(zeta, cloud.n, eps)
    graph = build_eps_graph(cloud, eps, kernel)
    graph, cloud, dropped = _drop_unlabeled(graph, cloud)
    wp = WeightProfile(alpha=alpha, r0=r0, zeta=zeta_value)
    ew = attach_energy_weights(graph, cloud, wp)

    solved = _solve_methods(graph, cloud, ew, methods, tol, max_iter)
    free = ~cloud.labeled_mask
    x1 = cloud.points[free, 0]
    metrics = {}
    fields = {}
    for m, (u, rep) in solved.items():
        uf = u.values[free]
        spread = float(uf.std())
        corr = float(np.corrcoef(uf, x1)[0, 1]) if spread > 0 else 0.0
        metrics[m] = {
            "corr_x1": corr,
            "range": float(uf.max() - uf.min()),
            "frac_near_half": float((np.abs(uf - 0.5) < 0.05).mean()),
            "std": spread,
            "iterations": rep.iterations,
            "residual": rep.residual,
            "energy": rep.energy,
        }
        fields[m] = u.values
    report = {
        "experiment": "two_point_box",
        "params": {
            "n": int(n), "d": int(d), "n_nodes": int(cloud.n),
            "dropped_nodes": int(dropped),
            "eps": float(eps), "alpha": float(alpha),
            "zeta": float(zeta_value), "r0": float(r0),
            "kernel": kernel.kind, "sigma_factor": kernel.sigma_factor,
            "methods": list(methods), "tol": tol,
        },
        "seeds": {"master": seed},
        "metrics": metrics,
        "versions": _versions(),
        "timing_ms": (time.perf_counter() - t0) * 1e3,
    }
    return ExperimentReport(report, cloud, fields)


def boundary_adjacent_nodes(graph, u: np.ndarray,
                            level: float = 0.5) -> np.ndarray:
    """Nodes incident to an edge whose endpoint values straddle `level`."""
    import scipy.sparse as sp

    coo = sp.triu(graph.W, k=1).tocoo()
    side = u > level
    crossing = side[coo.row] != side[coo.col]
    nodes = np.union1d(coo.row[crossing], coo.col[crossing])
    return nodes.astype(np.int64)


def run_decision_boundary(n: int = 20_000, trials: int = 25, seed: int = 0,
                          alpha: float = 5.0, zeta=("scaled", 1e6),
                          r0: float = 1.0, eps: float | None = None,
                          kernel: KernelProfile | None = None,
                          methods=DEFAULT_METHODS, tol: float = 1e-10,
                          max_iter: int | None = None) -> TrialSeries:
    """Corner-labeled unit square, 25 trials by default.

    Labels sit at (0,0) with value 0 and (1,1) with value 1; the ideal
    0.5 level set is the perpendicular bisector x_1 + x_2 = 1. Per trial
    and method: mean distance |x_1 + x_2 - 1| / sqrt(2) of
    boundary-adjacent nodes to that line. The aggregate reports the mean
    and across-trial spread.
    """
    t0 = time.perf_counter()
    kernel = kernel or KernelProfile(kind="gaussian", sigma_factor=0.5)
    labels = ((np.array([0.0, 0.0]), 0.0), (np.array([1.0, 1.0]), 1.0))
    per_trial = []
    seeds = []
    first = None
    for t in range(trials):
        spec = SyntheticSpec("uniform_box", n=n, d=2, seed=(seed, t),
                             labels=labels)
        cloud = generate(spec)
        eps_t = eps if eps is not None else 3.0 / np.sqrt(cloud.n)
        zeta_value = resolve_zeta(zeta, cloud.n, eps_t)
        graph = build_eps_graph(cloud, eps_t, kernel)
        graph, cloud, dropped = _drop_unlabeled(graph, cloud)
        wp = WeightProfile(alpha=alpha, r0=r0, zeta=zeta_value)
        ew = attach_energy_weights(graph, cloud, wp)
        solved = _solve_methods(graph, cloud, ew, methods, tol, max_iter)
        row = {"trial": t, "eps": float(eps_t), "zeta": float(zeta_value),
               "dropped_nodes": int(dropped)}
        bnodes = {}
        for m, (u, rep) in solved.items():
            nodes = boundary_adjacent_nodes(graph, u.values)
            if nodes.size:
                pts = cloud.points[nodes]
                dev = float(np.abs(pts[:, 0] + pts[:, 1] - 1.0).mean()
                            / np.sqrt(2.0))
            else:
                dev = float("nan")
            row[m] = {"boundary_deviation": dev,
                      "boundary_nodes": int(nodes.size),
                      "iterations": rep.iterations}
            bnodes[m] = nodes
        per_trial.append(row)
        seeds.append([seed, t])
        if t == 0:
            first = (cloud, {m: u.values for m, (u, _) in solved.items()},
                     bnodes)
    aggregate = {}
    for m in methods:
        devs = np.array([row[m]["boundary_deviation"] for row in per_trial])
        aggregate[m] = {
            "mean_boundary_deviation": float(np.nanmean(devs)),
            "std_boundary_deviation": float(np.nanstd(devs)),
        }
    report = {
        "experiment": "decision_boundary",
        "params": {
            "n": int(n), "d": 2, "trials": int(trials),
            "alpha": float(alpha), "r0": float(r0),
            "zeta_rule": list(zeta) if isinstance(zeta, tuple) else zeta,
            "eps_rule": "3/sqrt(n)" if eps is None else float(eps),
            "kernel": kernel.kind, "sigma_factor": kernel.sigma_factor,
            "methods": list(methods), "tol": tol,
        },
        "seeds": {"master": seed, "per_trial": seeds},
        "per_trial": per_trial,
        "aggregate": aggregate,
        "versions": _versions(),
        "timing_ms": (time.perf_counter() - t0) * 1e3,
    }
    cloud0, fields0, bnodes0 = first
    return TrialSeries("decision_boundary", seed, seeds, per_trial,
                       aggregate, report, cloud0, fields0, bnodes0)


def run_strip(n: int = 20_000, trials: int = 20, seed: int = 0,
              alpha: float = 5.0, zeta=("scaled", 1e6), r0: float = 1.0,
              eps: float | None = None,
              kernel: KernelProfile | None = None,
              density_ratio: float = 0.6, methods=DEFAULT_METHODS,
              tol: float = 1e-10,
              max_iter: int | None = None) -> TrialSeries:
    """Low-density strip in the unit cube, binary classification.

    Labels at (0, 0.2, 0.2) -> 0 and (1, 0.2, 0.2) -> 1; ground truth is
    the half-space x_1 > 0.5; prediction is u > 0.5. Reports the mean
    misclassification rate per method over the trials.
    """
    t0 = time.perf_counter()
    kernel = kernel or KernelProfile(kind="gaussian", sigma_factor=0.5)
    labels = ((np.array([0.0, 0.2, 0.2]), 0.0),
              (np.array([1.0, 0.2, 0.2]), 1.0))
    per_trial = []
    seeds = []
    first = None
    for t in range(trials):
        spec = SyntheticSpec("strip_density", n=n, d=3, seed=(seed, t),
                             labels=labels, density_ratio=density_ratio)
        cloud = generate(spec)
        eps_t = eps if eps is not None else 3.0 / cloud.n ** (1.0 / 3.0)
        zeta_value = resolve_zeta(zeta, cloud.n, eps_t)
        graph = build_eps_graph(cloud, eps_t, kernel)
        graph, cloud, dropped = _drop_unlabeled(graph, cloud)
        wp = WeightProfile(alpha=alpha, r0=r0, zeta=zeta_value)
        ew = attach_energy_weights(graph, cloud, wp)
        solved = _solve_methods(graph, cloud, ew, methods, tol, max_iter)
        free = ~cloud.labeled_mask
        truth = cloud.points[free, 0] > 0.5
        row = {"trial": t, "eps": float(eps_t), "zeta": float(zeta_value),
               "dropped_nodes": int(dropped)}
        for m, (u, rep) in solved.items():
            pred = u.values[free] > 0.5
            row[m] = {"error": float((pred != truth).mean()),
                      "iterations": rep.iterations}
        per_trial.append(row)
        seeds.append([seed, t])
        if t == 0:
            first = (cloud, {m: u.values for m, (u, _) in solved.items()})
    aggregate = {}
    for m in methods:
        errs = np.array([row[m]["error"] for row in per_trial])
        aggregate[m] = {"mean_error": float(errs.mean()),
                        "std_error": float(errs.std())}
    report = {
        "experiment": "strip",
        "params": {
            "n": int(n), "d": 3, "trials": int(trials),
            "alpha": float(alpha), "r0": float(r0),
            "zeta_rule": list(zeta) if isinstance(zeta, tuple) else zeta,
            "eps_rule": "3/n^(1/3)" if eps is None else float(eps),
            "kernel": kernel.kind, "sigma_factor": kernel.sigma_factor,
            "density_ratio": float(density_ratio),
            "methods": list(methods), "tol": tol,
        },
        "seeds": {"master": seed, "per_trial": seeds},
        "per_trial": per_trial,
        "aggregate": aggregate,
        "versions": _versions(),
        "timing_ms": (time.perf_counter() - t0) * 1e3,
    }
    cloud0, fields0 = first
    return TrialSeries("strip", seed, seeds, per_trial, aggregate, report,
                       cloud0, fields0)


def write_report_json(path, report: dict) -> None:
    with open(path, "w") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")


def strip_timing(report):
    """Copy of the report with every timing field removed; rerun
    comparisons are exact on the rest."""
    if isinstance(report, dict):
        return {k: strip_timing(v) for k, v in report.items()
                if k != "timing_ms"}
    if isinstance(report, list):
        return [strip_timing(v) for v in report]
    return report


def write_field_csv(path, cloud: PointCloud, fields: dict) -> None:
    """Columns: node, x_1..x_d, then one column per method."""
    names = sorted(fields)
    d = cloud.dim
    header = ("node," + ",".join(f"x_{k + 1}" for k in range(d)) + ","
              + ",".join(names))
    cols = [fields[m] for m in names]
    with open(path, "w") as f:
        f.write(header + "\n")
        for i in range(cloud.n):
            coords = ",".join(f"{c:.17g}" for c in cloud.points[i])
            vals = ",".join(f"{col[i]:.17g}" for col in cols)
            f.write(f"{i},{coords},{vals}\n")


def write_boundary_csv(path, cloud: PointCloud, boundary: dict) -> None:
    """Columns: method, node, x_1..x_d; one row per boundary-adjacent
    node per method."""
    d = cloud.dim
    header = "method,node," + ",".join(f"x_{k + 1}" for k in range(d))
    with open(path, "w") as f:
        f.write(header + "\n")
        for m in sorted(boundary):
            for i in boundary[m]:
                coords = ",".join(f"{c:.17g}" for c in cloud.points[i])
                f.write(f"{m},{i},{coords}\n")
