import json

import numpy as np
import pytest

from pwgl.errors import ConfigError, DataError
from pwgl.geometry import PointCloud
from pwgl.graph import attach_energy_weights, build_eps_graph
from pwgl.kernels import KernelProfile, WeightProfile
from pwgl.classify import (
    MulticlassTask,
    Prediction,
    accuracy,
    misclassification_rate,
    one_vs_rest,
    per_class_accuracy,
    prediction_summary,
    save_predictions_csv,
    save_summary_json,
)
from pwgl.solve import solve_pw, solve_standard, solve_wnll

from conftest import rng

INDICATOR = KernelProfile(kind="indicator")


def two_cluster_cloud(seed=80, per=15, classes=(0, 1)):
    g = rng(seed)
    a = g.random((per, 2)) * 0.3
    b = g.random((per, 2)) * 0.3 + np.array([0.7, 0.7])
    pts = np.vstack([a, b])
    idx = np.array([0, per])
    values = np.array([float(classes[0]), float(classes[1])])
    return PointCloud(pts, idx, values, np.array(classes))


def grid_problem(seed=81, n=50, n_labels=4, C=3):
    g = rng(seed)
    pts = g.random((n, 2))
    idx = np.arange(n_labels)
    classes = np.arange(n_labels) % C
    cloud = PointCloud(pts, idx, classes.astype(float), classes)
    graph = build_eps_graph(cloud, 0.45, INDICATOR)
    wp = WeightProfile(alpha=2.0, r0=0.1, zeta=50.0)
    ew = attach_energy_weights(graph, cloud, wp)
    return cloud, graph, ew


def test_two_clusters_predict_their_label():
    cloud = two_cluster_cloud()
    graph = build_eps_graph(cloud, 0.35, INDICATOR)
    wp = WeightProfile(alpha=2.0, r0=0.1, zeta=50.0)
    ew = attach_energy_weights(graph, cloud, wp)
    pred = one_vs_rest(graph, cloud, ew, method="pw")
    assert np.all(pred.classes[:15] == 0)
    assert np.all(pred.classes[15:] == 1)


@pytest.mark.parametrize("method", ["pw", "standard", "wnll"])
def test_matches_per_class_binary_solves(method):
    cloud, graph, ew = grid_problem()
    pred = one_vs_rest(graph, cloud, ew, method=method)
    C = 3
    ref_scores = np.empty((cloud.n, C))
    for c in range(C):
        vals = (cloud.label_classes == c).astype(float)
        cls_cloud = PointCloud(cloud.points, cloud.label_indices, vals,
                               cloud.label_classes)
        if method == "pw":
            u, _ = solve_pw(graph, cls_cloud, ew)
        elif method == "standard":
            u, _ = solve_standard(graph, cls_cloud)
        else:
            u, _ = solve_wnll(graph, cls_cloud)
        ref_scores[:, c] = u.values
    assert np.allclose(pred.scores, ref_scores, atol=1e-9)
    expect = np.argmax(ref_scores, axis=1)
    expect[cloud.label_indices] = cloud.label_classes
    assert np.array_equal(pred.classes, expect)


def test_matches_dense_oracle_small_graph():
    # 6-node hand-built graph, 3 classes, solved densely per class
    import scipy.sparse as sp

    W = np.zeros((6, 6))
    edges = [(0, 1, 1.0), (1, 2, 0.5), (2, 3, 1.2), (3, 4, 0.8),
             (4, 5, 1.0), (5, 0, 0.3), (1, 4, 0.4)]
    for i, j, w in edges:
        W[i, j] = W[j, i] = w
    from pwgl.graph import SparseGraph, uniform_energy_weights

    graph = SparseGraph(sp.csr_matrix(W), {"kind": "loaded"})
    pts = rng(82).random((6, 2))
    classes = np.array([0, 1, 2])
    cloud = PointCloud(pts, np.array([0, 2, 4]),
                       classes.astype(float), classes)
    pred = one_vs_rest(graph, cloud, method="standard")
    # dense reference: for each class solve the harmonic system directly
    free = np.array([1, 3, 5])
    lab = np.array([0, 2, 4])
    L = np.diag(W.sum(axis=1)) - W
    ref = np.empty((6, 3))
    for c in range(3):
        g = (classes == c).astype(float)
        ref[lab, c] = g
        ref[free, c] = np.linalg.solve(
            L[np.ix_(free, free)], -L[np.ix_(free, lab)] @ g
        )
    assert np.allclose(pred.scores, ref, atol=1e-9)
    assert np.array_equal(pred.classes[lab], classes)
    assert np.array_equal(pred.classes, np.argmax(ref, axis=1))


def test_class_permutation_equivariance():
    cloud, graph, ew = grid_problem(seed=83)
    pred = one_vs_rest(graph, cloud, ew, method="pw")
    perm = np.array([2, 0, 1])  # class c becomes perm[c]
    permuted_cloud = PointCloud(cloud.points, cloud.label_indices,
                                perm[cloud.label_classes].astype(float),
                                perm[cloud.label_classes])
    pred2 = one_vs_rest(graph, permuted_cloud, ew, method="pw")
    # score column perm[c] of the permuted task equals column c
    for c in range(3):
        assert np.array_equal(pred2.scores[:, perm[c]], pred.scores[:, c])
    assert np.array_equal(pred2.classes, perm[pred.classes])


def test_argmax_tie_breaks_to_lowest_class():
    # mirror-symmetric geometry: the midpoint scores tie exactly by
    # symmetry of the reduced system
    pts = np.array([[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]])
    cloud = PointCloud(pts, np.array([0, 2]), np.array([0.0, 1.0]),
                       np.array([0, 1]))
    graph = build_eps_graph(cloud, 0.6, INDICATOR)
    pred = one_vs_rest(graph, cloud, method="standard")
    assert pred.scores[1, 0] == pred.scores[1, 1]
    assert pred.classes[1] == 0


def test_labeled_nodes_keep_their_class_even_if_scores_disagree():
    cloud, graph, ew = grid_problem(seed=84)
    pred = one_vs_rest(graph, cloud, ew, method="pw")
    assert np.array_equal(pred.classes[cloud.label_indices],
                          cloud.label_classes)


def test_binary_scores_obey_maximum_principle():
    cloud, graph, ew = grid_problem(seed=85)
    pred = one_vs_rest(graph, cloud, ew, method="pw")
    assert pred.scores.min() >= -1e-9
    assert pred.scores.max() <= 1.0 + 1e-9


def test_duplicate_label_keeps_predictions():
    cloud, graph, ew = grid_problem(seed=86)
    pred = one_vs_rest(graph, cloud, ew, method="pw")
    # duplicate the first labeled node: same point, same class, new node
    pts = np.vstack([cloud.points, cloud.points[cloud.label_indices[0]]])
    idx = np.append(cloud.label_indices, cloud.n)
    classes = np.append(cloud.label_classes, cloud.label_classes[0])
    dup = PointCloud(pts, idx, classes.astype(float), classes)
    graph2 = build_eps_graph(dup, 0.45, INDICATOR)
    wp = WeightProfile(alpha=2.0, r0=0.1, zeta=50.0)
    ew2 = attach_energy_weights(graph2, dup, wp)
    pred2 = one_vs_rest(graph2, dup, ew2, method="pw")
    # the weight field is unchanged (distances to labels are the same), and
    # predictions agree except possibly at near-ties of the original argmax
    assert np.array_equal(ew2.node_gamma[:cloud.n], ew.node_gamma)
    top2 = np.sort(pred.scores, axis=1)[:, -2:]
    margin = top2[:, 1] - top2[:, 0]
    decided = margin > 1e-6
    assert np.array_equal(pred2.classes[:cloud.n][decided],
                          pred.classes[decided])
    assert decided.mean() > 0.95  # the construction is far from ties


def test_affine_encoding_invariance():
    # relabeling the binary targets affinely (0/1 -> a/b) maps scores
    # affinely and leaves the argmax decision structure intact; verified
    # through the solver's linearity on one class column
    cloud, graph, ew = grid_problem(seed=87)
    vals = (cloud.label_classes == 1).astype(float)
    base = PointCloud(cloud.points, cloud.label_indices, vals,
                      cloud.label_classes)
    u, _ = solve_pw(graph, base, ew)
    shifted = PointCloud(cloud.points, cloud.label_indices,
                         3.0 * vals - 1.0, cloud.label_classes)
    v, _ = solve_pw(graph, shifted, ew)
    assert np.allclose(v.values, 3.0 * u.values - 1.0, atol=1e-8)


def test_task_validation():
    with pytest.raises(DataError, match="no labeled classes"):
        MulticlassTask(np.array([], dtype=int))
    with pytest.raises(DataError, match=">= 0"):
        MulticlassTask(np.array([0, -1]))
    with pytest.raises(ConfigError, match="2 classes"):
        MulticlassTask(np.array([0, 0]))
    with pytest.raises(DataError, match="outside"):
        MulticlassTask(np.array([0, 3]), class_count=2)
    with pytest.raises(DataError, match="no labeled node"):
        MulticlassTask(np.array([0, 2]), class_count=3)
    task = MulticlassTask(np.array([1, 0]))
    assert task.class_count == 2


def test_one_vs_rest_requires_weights_for_pw():
    cloud, graph, _ = grid_problem(seed=88)
    with pytest.raises(ConfigError, match="energy weights"):
        one_vs_rest(graph, cloud, method="pw")
    with pytest.raises(ConfigError, match="method"):
        one_vs_rest(graph, cloud, method="ballot")


def test_one_vs_rest_requires_class_labels():
    cloud, graph, ew = grid_problem(seed=89)
    bare = PointCloud(cloud.points, cloud.label_indices,
                      cloud.label_values)
    with pytest.raises(DataError, match="class labels"):
        one_vs_rest(graph, bare, ew, method="pw")


def test_accuracy_and_error_metrics():
    cloud, graph, ew = grid_problem(seed=90)
    pred = one_vs_rest(graph, cloud, ew, method="pw")
    truth = pred.classes.copy()
    assert accuracy(pred, truth) == 1.0
    assert misclassification_rate(pred, truth) == 0.0
    # flip every unlabeled prediction on a binary view: accuracy 0
    wrong = truth.copy()
    free = ~pred.labeled_mask
    wrong[free] = (truth[free] + 1) % 3
    assert accuracy(pred, wrong) == 0.0
    with pytest.raises(DataError, match="truth"):
        accuracy(pred, truth[:-1])


def test_accuracy_excludes_labeled_nodes():
    cloud, graph, ew = grid_problem(seed=91)
    pred = one_vs_rest(graph, cloud, ew, method="pw")
    truth = pred.classes.copy()
    # corrupt the truth only at labeled nodes: accuracy must not move
    truth[cloud.label_indices] = (truth[cloud.label_indices] + 1) % 3
    assert accuracy(pred, truth) == 1.0


def test_random_prediction_accuracy_near_uniform():
    g = rng(92)
    n, C = 10_000, 10
    truth = g.integers(0, C, size=n)
    classes = g.integers(0, C, size=n)
    labeled = np.zeros(n, dtype=bool)
    labeled[:5] = True
    pred = Prediction(classes, np.zeros((n, C)), labeled)
    acc = accuracy(pred, truth)
    assert abs(acc - 0.1) < 0.015


def test_prediction_csv_and_summary(tmp_out):
    cloud, graph, ew = grid_problem(seed=93)
    pred = one_vs_rest(graph, cloud, ew, method="pw")
    csv_path = tmp_out / "pred.csv"
    save_predictions_csv(csv_path, pred)
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "node,pred_class,score_0,score_1,score_2"
    assert len(lines) == cloud.n + 1
    first = lines[1].split(",")
    assert int(first[0]) == 0
    assert int(first[1]) == pred.classes[0]
    assert float(first[2]) == pred.scores[0, 0]

    truth = pred.classes
    summary = prediction_summary(pred, truth)
    assert summary["accuracy"] == 1.0
    assert summary["error_rate"] == 0.0
    assert set(summary["per_class_accuracy"]) <= {0, 1, 2}
    js_path = tmp_out / "summary.json"
    save_summary_json(js_path, summary)
    back = json.loads(js_path.read_text())
    assert back["accuracy"] == 1.0
    assert prediction_summary(pred)["accuracy"] is None
    pca = per_class_accuracy(pred, truth)
    assert all(v == 1.0 for v in pca.values())
