"""One-vs-rest multiclass classification and its metrics.

Each class gets a binary solve with labels encoded 0/1; the predicted
class is the argmax of the per-class scores. The reduced operator is
assembled once and shared across the class solves.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .geometry import PointCloud
from .graph import EnergyWeights, SparseGraph, uniform_energy_weights
from .solve import (
    ReducedSystem,
    SolveReport,
    WnllParams,
    WnllSystem,
    _prepare,
)


@dataclass(frozen=True)
class MulticlassTask:
    """Class ids for the labeled nodes, in label order.

    class_count fixes the id range [0, C); None infers max + 1. truth,
    when given, holds the full ground-truth class vector for scoring.
    """

    labeled_classes: np.ndarray
    class_count: int | None = None
    truth: np.ndarray | None = None

    def __post_init__(self):
        cls = np.asarray(self.labeled_classes, dtype=np.int64)
        object.__setattr__(self, "labeled_classes", cls)
        if cls.size == 0:
            raise DataError("no labeled classes")
        if cls.min() < 0:
            raise DataError("class ids must be >= 0")
        count = self.class_count
        if count is None:
            count = int(cls.max()) + 1
            object.__setattr__(self, "class_count", count)
        if count < 2:
            raise ConfigError(f"need at least 2 classes, got {count}")
        if cls.max() >= count:
            raise DataError(
                f"class id {cls.max()} outside [0, {count})"
            )
        missing = sorted(set(range(count)) - set(cls.tolist()))
        if missing:
            raise DataError(f"classes with no labeled node: {missing}")
        if self.truth is not None:
            t = np.asarray(self.truth, dtype=np.int64)
            object.__setattr__(self, "truth", t)

    @classmethod
    def from_cloud(cls, cloud: PointCloud, class_count: int | None = None,
                   truth=None) -> "MulticlassTask":
        if cloud.label_classes is None:
            raise DataError("point cloud carries no class labels")
        return cls(cloud.label_classes, class_count, truth)


@dataclass
class Prediction:
    """Per-node class ids and the score vectors they came from."""

    classes: np.ndarray        # (n,) predicted class ids
    scores: np.ndarray         # (n, C) one binary solve per column
    labeled_mask: np.ndarray   # (n,) bool
    reports: list = field(default_factory=list, repr=False)

    @property
    def class_count(self) -> int:
        return self.scores.shape[1]


def one_vs_rest(graph: SparseGraph, cloud: PointCloud,
                ew: EnergyWeights | None = None, method: str = "pw",
                task: MulticlassTask | None = None,
                wnll_params: WnllParams | None = None,
                tol: float = 1e-10, max_iter: int | None = None,
                solver: str = "cg") -> Prediction:
    """Solve one binary problem per class and predict by argmax.

    Ties go to the lowest class id; labeled nodes are predicted as their
    own class regardless of scores.
    """
    if task is None:
        task = MulticlassTask.from_cloud(cloud)
    if task.labeled_classes.shape[0] != cloud.label_indices.shape[0]:
        raise DataError(
            f"{task.labeled_classes.shape[0]} labeled classes for "
            f"{cloud.label_indices.shape[0]} labeled nodes"
        )
    pinned, _ = _prepare(graph, cloud)
    if method == "pw":
        if ew is None:
            raise ConfigError("method 'pw' requires energy weights")
        system = ReducedSystem(graph, ew, pinned)
    elif method == "standard":
        system = ReducedSystem(graph, uniform_energy_weights(graph), pinned)
    elif method == "wnll":
        params = wnll_params or WnllParams()
        mu = params.resolve(cloud.n - cloud.label_indices.size,
                            cloud.label_indices.size)
        system = WnllSystem(graph, pinned, mu)
    else:
        raise ConfigError(f"unknown method: {method!r}")

    C = task.class_count
    n = cloud.n
    scores = np.empty((n, C))
    reports = []
    for c in range(C):
        pin_values = np.zeros(n)
        pin_values[cloud.label_indices] = (
            task.labeled_classes == c
        ).astype(np.float64)
        u, iters, res = system.solve(pin_values, tol=tol,
                                     max_iter=max_iter, method=solver)
        scores[:, c] = u
        reports.append(SolveReport(f"{method}[class {c}]", iters, res,
                                   float("nan"), 0.0))
    # argmax returns the first maximal index: the lowest class id on ties
    predicted = np.argmax(scores, axis=1).astype(np.int64)
    predicted[cloud.label_indices] = task.labeled_classes
    return Prediction(predicted, scores, pinned.copy(), reports)


def accuracy(prediction: Prediction, truth) -> float:
    """Fraction of unlabeled nodes predicted correctly."""
    t = np.asarray(truth, dtype=np.int64)
    if t.shape[0] != prediction.classes.shape[0]:
        raise DataError(
            f"truth has {t.shape[0]} entries for "
            f"{prediction.classes.shape[0]} nodes"
        )
    free = ~prediction.labeled_mask
    if not free.any():
        raise DataError("no unlabeled nodes to score")
    return float((prediction.classes[free] == t[free]).mean())


def misclassification_rate(prediction: Prediction, truth) -> float:
    """1 - accuracy, same conventions."""
    return 1.0 - accuracy(prediction, truth)


def per_class_accuracy(prediction: Prediction, truth) -> dict:
    """Accuracy over unlabeled nodes split by true class."""
    t = np.asarray(truth, dtype=np.int64)
    if t.shape[0] != prediction.classes.shape[0]:
        raise DataError("truth length mismatch")
    free = ~prediction.labeled_mask
    out = {}
    for c in range(prediction.class_count):
        members = free & (t == c)
        if members.any():
            out[int(c)] = float(
                (prediction.classes[members] == c).mean()
            )
    return out


def save_predictions_csv(path, prediction: Prediction) -> None:
    """Columns: node, pred_class, score_0..score_{C-1}."""
    C = prediction.class_count
    header = "node,pred_class," + ",".join(f"score_{c}" for c in range(C))
    with open(path, "w") as f:
        f.write(header + "\n")
        for i in range(prediction.classes.shape[0]):
            scores = ",".join(f"{s:.17g}" for s in prediction.scores[i])
            f.write(f"{i},{prediction.classes[i]},{scores}\n")


def prediction_summary(prediction: Prediction, truth=None) -> dict:
    """JSON-ready summary: accuracy, error_rate, per_class_accuracy
    (null without ground truth)."""
    if truth is None:
        return {"accuracy": None, "error_rate": None,
                "per_class_accuracy": None}
    acc = accuracy(prediction, truth)
    return {
        "accuracy": acc,
        "error_rate": 1.0 - acc,
        "per_class_accuracy": per_class_accuracy(prediction, truth),
    }


def save_summary_json(path, summary: dict) -> None:
    with open(path, "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
