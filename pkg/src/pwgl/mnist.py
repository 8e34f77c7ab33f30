"""IDX dataset ingestion and the image classification pipeline.

IDX files carry big-endian headers. An image file starts with the magic
number 2051 followed by the item count, row count and column count, then
count*rows*cols unsigned bytes; a label file starts with 2049 and the
item count, then one class byte per item. Pixels map to [0, 1] by /255
and distances are raw-pixel Euclidean.

The pipeline mirrors the synthetic drivers: one kNN graph over all
images, then repeated trials that redraw the labeled set and classify
one class against the rest with each requested method.
"""

from __future__ import annotations

import gzip
import struct
import time
from dataclasses import dataclass

import numpy as np

from .classify import MulticlassTask, accuracy, one_vs_rest
from .errors import ConfigError, DataError
from .experiments import (
    DEFAULT_METHODS,
    TrialSeries,
    _versions,
    experiment_rng,
)
from .geometry import PointCloud
from .graph import (
    attach_energy_weights,
    build_knn_graph,
    restrict_to_labeled_components,
)
from .kernels import WeightProfile

IMAGE_MAGIC = 2051
LABEL_MAGIC = 2049


@dataclass(frozen=True)
class IdxDataset:
    """Flattened images with their class labels.

    images : (n, pixels) float64 array with entries in [0, 1]
    labels : (n,) int64 array of class ids in [0, 10)
    """

    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        imgs = np.asarray(self.images, dtype=np.float64)
        labs = np.asarray(self.labels, dtype=np.int64).ravel()
        if imgs.ndim != 2:
            raise DataError(f"images must be (n, pixels), got shape {imgs.shape}")
        if labs.shape[0] != imgs.shape[0]:
            raise DataError(
                f"{imgs.shape[0]} images but {labs.shape[0]} labels"
            )
        if imgs.size and (imgs.min() < 0.0 or imgs.max() > 1.0):
            raise DataError("image intensities must lie in [0, 1]")
        if labs.size and (labs.min() < 0 or labs.max() > 9):
            raise DataError(
                f"class ids must lie in [0, 10), got range "
                f"[{labs.min()}, {labs.max()}]"
            )
        object.__setattr__(self, "images", imgs)
        object.__setattr__(self, "labels", labs)

    @property
    def n(self) -> int:
        return self.images.shape[0]

    @property
    def pixels(self) -> int:
        return self.images.shape[1]

    def classes_present(self) -> np.ndarray:
        return np.unique(self.labels)


def _open_binary(path):
    # official archives ship gzipped; accept both forms transparently
    if str(path).endswith(".gz"):
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_exact(f, count: int, path, offset: int) -> bytes:
    data = f.read(count)
    if len(data) != count:
        raise DataError(
            f"{path}: expected {count} bytes at offset {offset}, "
            f"got {len(data)}; file truncated"
        )
    return data


def _read_header(f, path, magic: int, fields: int) -> tuple:
    size = 4 * (1 + fields)
    raw = _read_exact(f, size, path, 0)
    values = struct.unpack(f">{1 + fields}i", raw)
    if values[0] != magic:
        raise DataError(
            f"{path}: bad magic at offset 0, expected {magic}, "
            f"got {values[0]}"
        )
    return values[1:]


def load_idx(images_path, labels_path) -> IdxDataset:
    """Parse an IDX image/label file pair into a validated dataset."""
    with _open_binary(images_path) as f:
        count, rows, cols = _read_header(f, images_path, IMAGE_MAGIC, 3)
        if count < 0 or rows <= 0 or cols <= 0:
            raise DataError(
                f"{images_path}: nonsensical header "
                f"(count={count}, rows={rows}, cols={cols})"
            )
        payload = _read_exact(f, count * rows * cols, images_path, 16)
        images = np.frombuffer(payload, dtype=np.uint8)
        images = images.reshape(count, rows * cols) / 255.0
    with _open_binary(labels_path) as f:
        (label_count,) = _read_header(f, labels_path, LABEL_MAGIC, 1)
        payload = _read_exact(f, label_count, labels_path, 8)
        labels = np.frombuffer(payload, dtype=np.uint8).astype(np.int64)
    if label_count != count:
        raise DataError(
            f"{images_path} holds {count} images but {labels_path} "
            f"holds {label_count} labels"
        )
    return IdxDataset(images, labels)


def subsample(data: IdxDataset, size: int, seed) -> IdxDataset:
    """Uniform subsample without replacement, deterministic in the seed."""
    if not 1 <= size <= data.n:
        raise ConfigError(
            f"subsample size must be in [1, {data.n}], got {size}"
        )
    g = experiment_rng(seed)
    keep = np.sort(g.choice(data.n, size=size, replace=False))
    return IdxDataset(data.images[keep], data.labels[keep])


def draw_label_indices(labels: np.ndarray, per_class: int,
                       g: np.random.Generator) -> np.ndarray:
    """Draw `per_class` item indices from every class present, without
    replacement, in ascending class order."""
    labels = np.asarray(labels, dtype=np.int64)
    if per_class < 1:
        raise ConfigError(f"per_class must be >= 1, got {per_class}")
    picks = []
    for c in np.unique(labels):
        pool = np.flatnonzero(labels == c)
        if pool.size < per_class:
            raise DataError(
                f"class {c} has {pool.size} items, cannot draw {per_class}"
            )
        picks.append(np.sort(g.choice(pool, size=per_class, replace=False)))
    return np.concatenate(picks)


def run_mnist(data: IdxDataset, labels_per_class: int = 10, trials: int = 10,
              seed: int = 0, methods=DEFAULT_METHODS, k: int = 50,
              sigma_neighbor: int | None = None, alpha: float = 2.0,
              zeta: float = 1e7, r0: float = 0.1, tol: float = 1e-10,
              max_iter: int | None = None,
              algorithm: str = "auto") -> TrialSeries:
    """Image classification with a shared kNN graph and redrawn labels.

    The graph is built once from all images; each trial draws
    labels_per_class labeled images per class (the same set for every
    method), solves one binary problem per class, and scores argmax
    predictions on the unlabeled items.
    """
    t0 = time.perf_counter()
    classes = data.classes_present()
    if classes.size < 2:
        raise DataError(
            f"need at least 2 classes, got {classes.tolist()}"
        )
    if not np.array_equal(classes, np.arange(classes.size)):
        raise DataError(
            f"class ids present are {classes.tolist()}; argmax scoring "
            "needs contiguous ids starting at 0"
        )
    if not float(zeta) > 1.0:
        raise ConfigError(f"zeta must be > 1, got {zeta}")
    if sigma_neighbor is None:
        sigma_neighbor = min(20, k)
    # graph construction ignores labels; build once from the bare cloud
    bare = PointCloud(data.images, np.empty(0, dtype=np.int64),
                      np.empty(0))
    base_graph = build_knn_graph(bare, k=k, sigma_neighbor=sigma_neighbor,
                                 algorithm=algorithm)
    wp = WeightProfile(alpha=alpha, r0=r0, zeta=float(zeta))
    per_trial = []
    seeds = []
    for t in range(trials):
        g = experiment_rng(seed, t)
        picked = draw_label_indices(data.labels, labels_per_class, g)
        picked_classes = data.labels[picked]
        cloud = PointCloud(data.images, picked,
                           picked_classes.astype(np.float64),
                           label_classes=picked_classes)
        graph, cloud, kept = restrict_to_labeled_components(base_graph, cloud)
        truth = data.labels[kept]
        ew = attach_energy_weights(graph, cloud, wp)
        task = MulticlassTask.from_cloud(cloud, class_count=int(classes.size))
        row = {"trial": t, "label_indices": [int(i) for i in picked],
               "dropped_nodes": int(data.n - kept.size)}
        for m in methods:
            pred = one_vs_rest(graph, cloud, ew=ew, method=m, task=task,
                               tol=tol, max_iter=max_iter)
            row[m] = {
                "accuracy": accuracy(pred, truth),
                "iterations": int(sum(r.iterations for r in pred.reports)),
            }
        per_trial.append(row)
        seeds.append([seed, t])
    aggregate = {}
    for m in methods:
        acc = np.array([row[m]["accuracy"] for row in per_trial])
        aggregate[m] = {"mean_accuracy": float(acc.mean()),
                        "std_accuracy": float(acc.std())}
    report = {
        "experiment": "mnist",
        "params": {
            "n": int(data.n), "pixels": int(data.pixels),
            "labels_per_class": int(labels_per_class),
            "trials": int(trials), "k": int(k),
            "sigma_neighbor": int(sigma_neighbor),
            "alpha": float(alpha), "zeta": float(zeta), "r0": float(r0),
            "methods": list(methods), "tol": tol,
            "classes": [int(c) for c in classes],
        },
        "seeds": {"master": seed, "per_trial": seeds},
        "per_trial": per_trial,
        "aggregate": aggregate,
        "versions": _versions(),
        "timing_ms": (time.perf_counter() - t0) * 1e3,
    }
    return TrialSeries("mnist", seed, seeds, per_trial, aggregate, report)
