"""End-to-end acceptance bars for the engine.

One test per bar, each with its own runtime budget: solver agreement
against dense oracles, the maximum principle, the two energy forms,
desk-scale reproductions of the synthetic experiments, the radial and
consistency oracles, the refinement-degeneracy contrast with thresholds
frozen from the recorded pilot, and byte-level determinism of reruns.

The digit benchmark needs IDX dataset files and is skipped unless
PWGL_MNIST_DIR points at them; the full-size variant is opt-in via
PWGL_MNIST_FULL=1.
"""

import json
import os
import time
from pathlib import Path

import numpy as np
import pytest

from pwgl.geometry import PointCloud
from pwgl.graph import (
    attach_energy_weights,
    build_eps_graph,
    build_knn_graph,
    restrict_to_labeled_components,
)
from pwgl.kernels import KernelProfile, WeightProfile
from pwgl.mnist import IdxDataset, load_idx, subsample, run_mnist
from pwgl.probes import (
    consistency_check,
    probe_x1_squared,
    radial_oracle_check,
    wnll_degeneracy_probe,
)
from pwgl.solve import (
    dirichlet_energy,
    dirichlet_energy_one_sided,
    solve_pw,
    solve_standard,
    solve_wnll,
)
from pwgl.experiments import (
    run_strip,
    run_two_point_box,
    strip_timing,
    write_field_csv,
)

from conftest import rng

FIXTURES = Path(__file__).parent / "fixtures"


def _random_problem(g, n_max=200, alpha_range=(0.0, 6.0),
                    zeta_range=(2.0, 1e6), n_min=40, value_range=(0.0, 1.0)):
    """Random cloud, eps graph, and weight profile; unlabeled components
    dropped so every solve is well posed."""
    n = int(g.integers(n_min, n_max + 1))
    d = int(g.integers(1, 4))
    k = int(g.integers(2, 9))
    pts = g.random((n, d))
    idx = g.choice(n, size=k, replace=False)
    vals = g.uniform(*value_range, size=k)
    cloud = PointCloud(pts, np.sort(idx), vals)
    kernel = KernelProfile(kind="indicator") if g.random() < 0.5 else \
        KernelProfile(kind="gaussian", sigma_factor=0.5)
    eps = float(g.uniform(1.0, 2.0)) * 1.2 / n ** (1.0 / d)
    graph = build_eps_graph(cloud, eps, kernel)
    graph, cloud, _ = restrict_to_labeled_components(graph, cloud)
    lo, hi = np.log10(zeta_range[0]), np.log10(zeta_range[1])
    wp = WeightProfile(alpha=float(g.uniform(*alpha_range)),
                       zeta=float(10.0 ** g.uniform(lo, hi)),
                       r0=float(g.uniform(0.2, 1.2)))
    ew = attach_energy_weights(graph, cloud, wp)
    return graph, cloud, ew


def test_criterion_01_cg_matches_direct_solves():
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(50):
        g = rng((101, i))
        graph, cloud, ew = _random_problem(g)
        pairs = (
            (solve_pw(graph, cloud, ew, tol=1e-12),
             solve_pw(graph, cloud, ew, method="direct")),
            (solve_standard(graph, cloud, tol=1e-12),
             solve_standard(graph, cloud, method="direct")),
            (solve_wnll(graph, cloud, tol=1e-12),
             solve_wnll(graph, cloud, method="direct")),
        )
        for (u_cg, _), (u_dx, _) in pairs:
            denom = max(float(np.abs(u_dx.values).max()), 1e-300)
            rel = float(np.abs(u_cg.values - u_dx.values).max()) / denom
            worst = max(worst, rel)
    elapsed = time.perf_counter() - t0
    assert worst < 1e-8, f"worst relative L-inf gap {worst:.3e}"
    assert elapsed < 10.0, f"took {elapsed:.1f}s, budget 10s"


def test_criterion_02_maximum_principle():
    t0 = time.perf_counter()
    margin_worst = -np.inf
    for i in range(100):
        g = rng((102, i))
        graph, cloud, ew = _random_problem(
            g, n_max=400, n_min=150, value_range=(-1.0, 2.0))
        lo, hi = cloud.label_values.min(), cloud.label_values.max()
        slack = 1e-8 * (hi - lo)
        # tight solver tolerance: the bound is a property of the exact
        # minimizer, and iteration error must not eat the slack
        for u, _ in (solve_pw(graph, cloud, ew, tol=1e-12),
                     solve_standard(graph, cloud, tol=1e-12),
                     solve_wnll(graph, cloud, tol=1e-12)):
            overshoot = max(float(lo - u.values.min()),
                            float(u.values.max() - hi))
            margin_worst = max(margin_worst, overshoot - slack)
            assert overshoot <= slack, (
                f"config {i}: bound exceeded by {overshoot:.3e} "
                f"(allowed {slack:.3e})"
            )
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0, f"took {elapsed:.1f}s, budget 60s"


def test_criterion_03_energy_forms_agree():
    t0 = time.perf_counter()
    for i in range(100):
        g = rng((103, i))
        graph, cloud, ew = _random_problem(g, n_max=150)
        if i % 3 == 0:
            graph = build_knn_graph(cloud, k=min(8, cloud.n - 1))
            ew = attach_energy_weights(
                graph, cloud, WeightProfile(alpha=2.0, zeta=100.0, r0=0.5))
        u = g.normal(size=cloud.n)
        a = dirichlet_energy(graph, ew, u)
        b = dirichlet_energy_one_sided(graph, ew, u)
        assert abs(a - b) <= 1e-12 * max(abs(a), abs(b)), (
            f"pair {i}: symmetric {a!r} vs one-sided {b!r}"
        )
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0, f"took {elapsed:.1f}s, budget 5s"


@pytest.fixture(scope="module")
def box_runs():
    """The two-point box at full scale, run twice with identical inputs;
    shared by the degeneracy-contrast and determinism bars."""
    kwargs = dict(n=20_000, d=2, seed=0, alpha=2.0, zeta=("scaled", 50.0),
                  r0=1.0, methods=("pw", "standard"))
    t0 = time.perf_counter()
    first = run_two_point_box(**kwargs)
    elapsed = time.perf_counter() - t0
    second = run_two_point_box(**kwargs)
    return first, second, elapsed


def test_criterion_04_standard_field_stays_near_half(box_runs):
    first, _, elapsed = box_runs
    frac = first.report["metrics"]["standard"]["frac_near_half"]
    assert elapsed < 120.0, f"took {elapsed:.1f}s, budget 120s"
    assert frac >= 0.90, (
        f"only {frac:.1%} of unlabeled nodes have |u - 0.5| < 0.05; the "
        "uniform-weight field does collapse at this scale, but around a "
        "sample-dependent level set by the label neighborhoods, not "
        "around 0.5"
    )


def test_criterion_04_weighted_field_is_nondegenerate(box_runs):
    first, _, elapsed = box_runs
    m = first.report["metrics"]["pw"]
    assert elapsed < 120.0, f"took {elapsed:.1f}s, budget 120s"
    assert m["corr_x1"] > 0.9, f"corr(u, x_1) = {m['corr_x1']:.4f}"
    assert m["range"] > 0.8, f"max u - min u = {m['range']:.4f}"


def test_criterion_05_strip_classification():
    t0 = time.perf_counter()
    series = run_strip(n=20_000, trials=10, seed=0,
                       methods=("pw", "standard"))
    elapsed = time.perf_counter() - t0
    pw = series.aggregate["pw"]["mean_error"]
    std = series.aggregate["standard"]["mean_error"]
    assert pw < 0.02, f"weighted mean error {pw:.4f}"
    assert std > 0.25, f"uniform-weight mean error {std:.4f}"
    assert elapsed < 900.0, f"took {elapsed:.1f}s, budget 900s"


def test_criterion_06_radial_profile_oracle():
    t0 = time.perf_counter()
    out = radial_oracle_check(n=30_000, d=2, alpha=2.0, seed=0)
    elapsed = time.perf_counter() - t0
    assert out["rel_l2"] < 0.10, (
        f"binned means deviate from r^2 by {out['rel_l2']:.4f} relative L2"
    )
    assert elapsed < 180.0, f"took {elapsed:.1f}s, budget 180s"


def test_criterion_07_pointwise_consistency():
    t0 = time.perf_counter()
    out = consistency_check(probe_x1_squared(), n_schedule=(10_000, 40_000),
                            d=2, seed=0)
    elapsed = time.perf_counter() - t0
    coarse, fine = out["rows"]
    assert fine["relative"] < 0.15, (
        f"masked deviation is {fine['relative']:.1%} of the target scale"
    )
    assert fine["max_error"] < coarse["max_error"], (
        f"deviation grew under refinement: {coarse['max_error']:.4e} -> "
        f"{fine['max_error']:.4e}"
    )
    assert elapsed < 180.0, f"took {elapsed:.1f}s, budget 180s"


def test_criterion_08_refinement_degeneracy_contrast():
    # thresholds frozen from the recorded pilot run; regenerate with
    # tests/fixtures/make_pilot_thresholds.py
    frozen = json.loads(
        (FIXTURES / "pilot_thresholds.json").read_text())["frozen"]
    t0 = time.perf_counter()
    out = wnll_degeneracy_probe(n_schedule=(5_000, 20_000), d=2, seed=0,
                                alpha=2.0, zeta=("scaled", 50.0), r0=1.0)
    elapsed = time.perf_counter() - t0
    shrink = out["shrink"]
    lo, hi = frozen["pw_shrink_band"]
    assert shrink["wnll"] >= frozen["wnll_shrink_min"], (
        f"wnll spread shrink {shrink['wnll']:.4f} under "
        f"{frozen['wnll_shrink_min']}"
    )
    assert lo <= shrink["pw"] <= hi, (
        f"weighted spread shrink {shrink['pw']:.4f} outside [{lo}, {hi}]"
    )
    assert shrink["pw"] < shrink["wnll"] < shrink["standard"], (
        f"shrink ordering violated: {shrink}"
    )
    assert elapsed < 300.0, f"took {elapsed:.1f}s, budget 300s"


MNIST_STEMS = (("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
               ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"))


def _find_idx(root: Path, stem: str):
    for suffix in ("", ".gz"):
        p = root / (stem + suffix)
        if p.exists():
            return p
    return None


def _load_digits() -> IdxDataset:
    root = os.environ.get("PWGL_MNIST_DIR")
    if not root:
        pytest.skip("digit benchmark needs PWGL_MNIST_DIR")
    root = Path(root)
    parts = []
    for img_stem, lab_stem in MNIST_STEMS:
        img, lab = _find_idx(root, img_stem), _find_idx(root, lab_stem)
        if img is not None and lab is not None:
            parts.append(load_idx(img, lab))
    if not parts:
        pytest.skip(f"no IDX file pairs under {root}")
    return IdxDataset(np.concatenate([p.images for p in parts]),
                      np.concatenate([p.labels for p in parts]))


def test_criterion_09_digit_benchmark_ordering():
    data = _load_digits()
    sub = subsample(data, min(10_000, data.n), seed=0)
    series = run_mnist(sub, labels_per_class=10, trials=3, seed=0)
    acc = {m: series.aggregate[m]["mean_accuracy"]
           for m in ("pw", "wnll", "standard")}
    assert min(acc["pw"], acc["wnll"]) > acc["standard"] + 0.10, (
        f"ordering violated: {acc}"
    )
    assert abs(acc["pw"] - acc["wnll"]) <= 0.03, (
        f"weighted and wnll accuracies should be close: {acc}"
    )


@pytest.mark.skipif(os.environ.get("PWGL_MNIST_FULL") != "1",
                    reason="full digit benchmark is opt-in (hours)")
def test_criterion_09_digit_benchmark_full():
    data = _load_digits()
    assert data.n >= 70_000, f"full benchmark needs 70k images, got {data.n}"
    hundred = run_mnist(data, labels_per_class=10, trials=10, seed=0,
                        methods=("pw",))
    pw100 = hundred.aggregate["pw"]["mean_accuracy"]
    assert abs(pw100 - 0.909) <= 0.03, f"pw at 100 labels: {pw100:.4f}"
    ten = run_mnist(data, labels_per_class=1, trials=10, seed=0,
                    methods=("pw", "standard"))
    pw10 = ten.aggregate["pw"]["mean_accuracy"]
    std10 = ten.aggregate["standard"]["mean_accuracy"]
    assert abs(pw10 - 0.68) <= 0.08, f"pw at 10 labels: {pw10:.4f}"
    assert abs(std10 - 0.142) <= 0.08, f"standard at 10 labels: {std10:.4f}"


def test_criterion_10_reruns_are_byte_identical(box_runs, tmp_path):
    first, second, _ = box_runs
    a = json.dumps(strip_timing(first.report), sort_keys=True)
    b = json.dumps(strip_timing(second.report), sort_keys=True)
    assert a.encode() == b.encode()
    write_field_csv(tmp_path / "field_a.csv", first.cloud, first.fields)
    write_field_csv(tmp_path / "field_b.csv", second.cloud, second.fields)
    assert (tmp_path / "field_a.csv").read_bytes() == \
        (tmp_path / "field_b.csv").read_bytes()
