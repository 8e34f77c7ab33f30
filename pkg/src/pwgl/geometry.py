"""Point clouds with sparse labels and exact spatial queries.

A :class:`PointCloud` holds n points in R^d together with a small set of
labeled node indices and their label values. :class:`SpatialIndex` wraps a
kd-tree and guarantees exact, deterministic query semantics: closed balls
for range queries and (distance, index) ordering for k-nearest-neighbor
ties.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import DataError


@dataclass(frozen=True)
class PointCloud:
    """Immutable point cloud with labeled nodes.

    points        : (n, d) float64 array
    label_indices : (m,) int64 array of distinct node indices in [0, n)
    label_values  : (m,) float64 array, g at the labeled nodes
    label_classes : optional (m,) int64 array of class ids for multiclass
                    tasks; None for scalar tasks
    """

    points: np.ndarray
    label_indices: np.ndarray
    label_values: np.ndarray
    label_classes: np.ndarray | None = None

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=np.float64))
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise DataError(f"points must be (n, d) with d >= 1, got shape {pts.shape}")
        idx = np.asarray(self.label_indices, dtype=np.int64).ravel()
        vals = np.asarray(self.label_values, dtype=np.float64).ravel()
        if idx.shape != vals.shape:
            raise DataError(
                f"label_indices and label_values disagree: {idx.shape} vs {vals.shape}"
            )
        if idx.size:
            if idx.min() < 0 or idx.max() >= pts.shape[0]:
                raise DataError("label index out of range")
            if np.unique(idx).size != idx.size:
                raise DataError("label indices must be distinct")
        classes = self.label_classes
        if classes is not None:
            classes = np.asarray(classes, dtype=np.int64).ravel()
            if classes.shape != idx.shape:
                raise DataError("label_classes must match label_indices")
        for f_name, arr in (("points", pts), ("label_indices", idx),
                            ("label_values", vals), ("label_classes", classes)):
            object.__setattr__(self, f_name, arr)
            if arr is not None:
                arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def labeled_mask(self) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        mask[self.label_indices] = True
        return mask

    @property
    def unlabeled_indices(self) -> np.ndarray:
        return np.flatnonzero(~self.labeled_mask)

    def label_points(self) -> np.ndarray:
        return self.points[self.label_indices]


def dist_to_labels(cloud: PointCloud, query: np.ndarray) -> np.ndarray:
    """Euclidean distance from each query point to the nearest labeled node.

    `query` is (d,) or (q, d); returns a scalar or a (q,) array.
    """
    if cloud.label_indices.size == 0:
        raise DataError("no labeled points")
    q = np.asarray(query, dtype=np.float64)
    single = q.ndim == 1
    q2 = q[None, :] if single else q
    if q2.shape[1] != cloud.dim:
        raise DataError(f"query dimension {q2.shape[1]} != cloud dimension {cloud.dim}")
    lp = cloud.label_points()
    # label sets are small; a direct distance matrix is exact and cheap
    diff = q2[:, None, :] - lp[None, :, :]
    d = np.sqrt((diff * diff).sum(axis=2)).min(axis=1)
    return float(d[0]) if single else d


def dist_to_subset(cloud: PointCloud, node_indices: np.ndarray) -> np.ndarray:
    """Distance from every node of the cloud to the nearest of `node_indices`."""
    ref = cloud.points[np.asarray(node_indices, dtype=np.int64)]
    if ref.shape[0] == 0:
        raise DataError("no reference points")
    if ref.shape[0] > 64:
        tree = cKDTree(ref)
        d, _ = tree.query(cloud.points, k=1)
        return np.asarray(d, dtype=np.float64)
    diff = cloud.points[:, None, :] - ref[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2)).min(axis=1)


def min_label_separation(cloud: PointCloud) -> float:
    """Smallest pairwise distance between labeled nodes.

    Returns +inf for a single label. Two labels at the same coordinates are
    rejected: the singular weight is undefined for coincident labels.
    """
    lp = cloud.label_points()
    if lp.shape[0] == 0:
        raise DataError("no labeled points")
    if lp.shape[0] == 1:
        return float("inf")
    diff = lp[:, None, :] - lp[None, :, :]
    d = np.sqrt((diff * diff).sum(axis=2))
    np.fill_diagonal(d, np.inf)
    r = float(d.min())
    if r == 0.0:
        raise DataError("coincident labels")
    return r


class SpatialIndex:
    """kd-tree over a fixed point set; immutable after construction."""

    def __init__(self, points: np.ndarray, leaf_size: int = 16):
        pts = np.ascontiguousarray(np.asarray(points, dtype=np.float64))
        if pts.ndim != 2:
            raise DataError("points must be a 2-d array")
        self.points = pts
        self.tree = cKDTree(pts, leafsize=leaf_size)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def range_query(self, center: np.ndarray, radius: float) -> np.ndarray:
        """Indices of all points with |x - center| <= radius, ascending.

        Closed ball: boundary points are included. radius must be >= 0.
        """
        if radius < 0:
            raise DataError(f"radius must be >= 0, got {radius}")
        c = np.asarray(center, dtype=np.float64)
        # query slightly inflated, then filter with the exact criterion so the
        # closed-ball contract does not depend on kd-tree internals
        r_query = radius * (1.0 + 1e-12)
        cand = np.asarray(self.tree.query_ball_point(c, r_query), dtype=np.int64)
        if cand.size == 0:
            return cand
        d = np.sqrt(((self.points[cand] - c) ** 2).sum(axis=1))
        keep = cand[d <= radius]
        return np.sort(keep)

    def knn_query(self, center: np.ndarray, k: int):
        """k nearest points to center: (indices, distances), ascending distance.

        Ties at equal distance resolve to the lower index. k must be in
        [1, n].
        """
        if not 1 <= k <= self.n:
            raise DataError(f"k must be in [1, {self.n}], got {k}")
        c = np.asarray(center, dtype=np.float64)
        d_k, _ = self.tree.query(c, k=k)
        kth = float(np.atleast_1d(d_k)[-1])
        cand = np.asarray(
            self.tree.query_ball_point(c, kth * (1.0 + 1e-12) + 1e-300),
            dtype=np.int64,
        )
        d = np.sqrt(((self.points[cand] - c) ** 2).sum(axis=1))
        order = np.lexsort((cand, d))
        sel = order[:k]
        return cand[sel], d[sel]


def save_points_csv(path, cloud: PointCloud) -> None:
    """Write a cloud as CSV: x_1..x_d, label_class, label_value.

    Unlabeled rows carry label_class -1 and an empty label_value. Floats are
    written with 17 significant digits so a round trip is bit-exact.
    """
    classes = np.full(cloud.n, -1, dtype=np.int64)
    values = {}
    if cloud.label_classes is not None:
        classes[cloud.label_indices] = cloud.label_classes
    else:
        classes[cloud.label_indices] = 0
    for i, v in zip(cloud.label_indices, cloud.label_values):
        values[int(i)] = v
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow([f"x_{j + 1}" for j in range(cloud.dim)]
                   + ["label_class", "label_value"])
        for i in range(cloud.n):
            row = [format(x, ".17g") for x in cloud.points[i]]
            if i in values:
                row += [str(classes[i]), format(values[i], ".17g")]
            else:
                row += ["-1", ""]
            w.writerow(row)


def load_points_csv(path) -> PointCloud:
    """Read a cloud written by :func:`save_points_csv`."""
    with open(path, newline="") as f:
        r = csv.reader(f)
        try:
            header = next(r)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        dim = sum(1 for h in header if h.startswith("x_"))
        if dim < 1 or header[:dim] != [f"x_{j + 1}" for j in range(dim)]:
            raise DataError(f"{path}: expected columns x_1..x_d, got {header}")
        if header[dim:] != ["label_class", "label_value"]:
            raise DataError(
                f"{path}: expected trailing columns label_class,label_value"
            )
        pts, idx, vals, classes = [], [], [], []
        for ln, row in enumerate(r, start=2):
            if not row:
                continue
            if len(row) != dim + 2:
                raise DataError(f"{path}:{ln}: expected {dim + 2} fields")
            try:
                pts.append([float(x) for x in row[:dim]])
                cls = int(row[dim])
                if cls != -1:
                    idx.append(len(pts) - 1)
                    classes.append(cls)
                    vals.append(float(row[dim + 1]) if row[dim + 1] else float(cls))
            except ValueError as e:
                raise DataError(f"{path}:{ln}: {e}") from None
    has_classes = any(c != 0 for c in classes)
    return PointCloud(
        np.asarray(pts, dtype=np.float64).reshape(len(pts), dim),
        np.asarray(idx, dtype=np.int64),
        np.asarray(vals, dtype=np.float64),
        np.asarray(classes, dtype=np.int64) if has_classes else None,
    )
