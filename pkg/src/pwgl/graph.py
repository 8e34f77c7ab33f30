"""Weighted graph construction on point clouds.

Two constructions: the epsilon-ball graph with rescaled-kernel weights
(edges wherever the kernel is positive within its support), and the
symmetrized k-nearest-neighbor graph with self-tuned Gaussian weights.
Node weights gamma are attached separately so the same base graph serves
every solve method.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _cc

from .errors import ConfigError, DataError
from .geometry import PointCloud, dist_to_subset
from .kernels import KernelProfile, WeightProfile, eta, gamma_zeta

PRUNE_RTOL = 1e-12  # gaussian weights below this fraction of the row max drop

GRAPH_MAGIC = "pwgl-graph"
GRAPH_VERSION = "v1"


@dataclass
class SparseGraph:
    """Symmetric weighted graph in CSR form.

    W holds base edge weights (kernel values); no self-edges, no stored
    zeros, and W == W.T bitwise. `construction` records how it was built:
    kind "eps_ball" carries eps, kind "knn" carries k; kind "loaded" has
    neither.
    """

    W: sp.csr_matrix
    construction: dict

    def __post_init__(self):
        self.W = self.W.tocsr()
        self.W.sort_indices()

    @property
    def n(self) -> int:
        return self.W.shape[0]

    @property
    def nnz(self) -> int:
        return self.W.nnz

    def degrees(self) -> np.ndarray:
        return np.asarray(self.W.sum(axis=1)).ravel()


@dataclass
class EnergyWeights:
    """Per-node weights and normalizations for one energy functional.

    node_gamma     : (n,) truncated weight at each node
    energy_scale   : prefactor of the Dirichlet energy
                     (1 / (n^2 eps^2) for eps-ball graphs, 1 for knn)
    operator_scale : prefactor of the pointwise operator
                     (1 / (2 n eps^2) for eps-ball graphs, 1/2 for knn)
    """

    node_gamma: np.ndarray
    energy_scale: float
    operator_scale: float


def build_eps_graph(cloud: PointCloud, eps: float, kernel: KernelProfile,
                    prune: bool = True) -> SparseGraph:
    """Epsilon-ball graph: edge iff |x - y| <= support * eps and the kernel
    value is positive; weight eta_eps(x - y).

    Each unordered pair is computed once and mirrored, so symmetry is
    bitwise. Gaussian tails below PRUNE_RTOL of the row maximum are dropped
    unless prune is False (theory probes keep every edge).
    """
    if not eps > 0:
        raise ConfigError(f"eps must be > 0, got {eps}")
    from scipy.spatial import cKDTree

    n, d = cloud.n, cloud.dim
    tree = cKDTree(cloud.points)
    radius = kernel.support_factor * eps
    pairs = tree.query_pairs(radius * (1.0 + 1e-12), output_type="ndarray")
    if pairs.shape[0]:
        diff = cloud.points[pairs[:, 0]] - cloud.points[pairs[:, 1]]
        dist = np.sqrt((diff * diff).sum(axis=1))
        keep = dist <= radius
        pairs, dist = pairs[keep], dist[keep]
        w = eta(kernel, dist / eps) * float(eps) ** (-d)
        pos = w > 0
        pairs, w = pairs[pos], w[pos]
    else:
        w = np.zeros(0)
    if pairs.shape[0] == 0:
        warnings.warn("graph has no edges at this eps", stacklevel=2)
        W = sp.csr_matrix((n, n))
    else:
        rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
        cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
        vals = np.concatenate([w, w])
        W = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        if prune and kernel.kind == "gaussian":
            W = _prune_rows(W)
    return SparseGraph(W, {"kind": "eps_ball", "eps": float(eps),
                           "kernel": kernel.kind})


def _prune_rows(W: sp.csr_matrix) -> sp.csr_matrix:
    """Drop entries below PRUNE_RTOL of their row max, symmetrically: an
    edge survives only if it survives in both rows."""
    W = W.tocsr()
    if W.nnz == 0:
        return W
    row_max = np.zeros(W.shape[0])
    maxes = W.max(axis=1).toarray().ravel()
    row_max[: maxes.size] = maxes
    keep_rows = np.repeat(row_max, np.diff(W.indptr))
    mask = W.data >= PRUNE_RTOL * keep_rows
    keep = sp.csr_matrix(
        (mask.astype(np.float64), W.indices, W.indptr), shape=W.shape
    )
    both = keep.minimum(keep.T)
    out = W.multiply(both).tocsr()
    out.eliminate_zeros()
    return out


def build_knn_graph(cloud: PointCloud, k: int, sigma_neighbor: int | None = None,
                    algorithm: str = "auto", chunk: int = 512) -> SparseGraph:
    """Symmetrized kNN graph with self-tuned Gaussian weights.

    Directed weights w_xy = exp(-|x - y|^2 / sigma_x^2) for y among the k
    nearest neighbors of x (self excluded), where sigma_x is the distance
    to the sigma_neighbor-th nearest neighbor (default min(20, k)); then
    W <- (W^T + W) / 2. A node at zero distance from its sigma_neighbor-th
    neighbor (duplicate points) falls back to its smallest positive
    neighbor distance; a node whose k neighbors are all at distance zero
    is an error.

    algorithm: "kdtree" (low dimension), "brute" (chunked exact distance
    blocks, for high-dimensional data), or "auto".
    """
    n, d = cloud.n, cloud.dim
    if not 1 <= k < n:
        raise ConfigError(f"k must be in [1, n-1], got {k}")
    if sigma_neighbor is None:
        sigma_neighbor = min(20, k)
    if not 1 <= sigma_neighbor <= k:
        raise ConfigError("sigma_neighbor must be in [1, k]")
    if algorithm == "auto":
        algorithm = "brute" if d > 15 else "kdtree"

    if algorithm == "kdtree":
        from scipy.spatial import cKDTree

        tree = cKDTree(cloud.points)
        dist, idx = tree.query(cloud.points, k=k + 1)
        # first column is the point itself (distance 0); when duplicates
        # exist the self index may appear later, so drop it explicitly
        nbr_idx = np.empty((n, k), dtype=np.int64)
        nbr_dist = np.empty((n, k))
        for i in range(n):
            row_i, row_d = idx[i], dist[i]
            not_self = row_i != i
            if not_self.sum() == k + 1:  # self not returned (all-dup corner)
                not_self[-1] = False
            nbr_idx[i] = row_i[not_self][:k]
            nbr_dist[i] = row_d[not_self][:k]
    elif algorithm == "brute":
        nbr_idx, nbr_dist = _brute_knn(cloud.points, k, chunk)
    else:
        raise ConfigError(f"unknown knn algorithm: {algorithm!r}")

    sigma = nbr_dist[:, sigma_neighbor - 1].copy()
    for i in np.flatnonzero(sigma == 0.0):
        positive = nbr_dist[i][nbr_dist[i] > 0]
        if positive.size == 0:
            raise DataError(
                f"node {i}: all {k} nearest neighbors at distance zero"
            )
        sigma[i] = positive.min()

    w = np.exp(-(nbr_dist ** 2) / (sigma[:, None] ** 2))
    rows = np.repeat(np.arange(n), k)
    W = sp.coo_matrix((w.ravel(), (rows, nbr_idx.ravel())), shape=(n, n)).tocsr()
    W = (W.T + W) * 0.5
    W = W.tocsr()
    W.eliminate_zeros()
    return SparseGraph(W, {"kind": "knn", "k": int(k),
                           "sigma_neighbor": int(sigma_neighbor)})


def _brute_knn(points: np.ndarray, k: int, chunk: int):
    """Exact kNN by blocked distance computation; O(n^2 d) flops."""
    n = points.shape[0]
    sq = (points * points).sum(axis=1)
    nbr_idx = np.empty((n, k), dtype=np.int64)
    nbr_dist = np.empty((n, k))
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        block = points[start:stop]
        d2 = sq[start:stop, None] - 2.0 * (block @ points.T) + sq[None, :]
        np.maximum(d2, 0.0, out=d2)
        d2[np.arange(stop - start), np.arange(start, stop)] = np.inf
        part = np.argpartition(d2, k - 1, axis=1)[:, :k]
        pd = np.take_along_axis(d2, part, axis=1)
        order = np.lexsort((part, pd), axis=1)
        nbr_idx[start:stop] = np.take_along_axis(part, order, axis=1)
        nbr_dist[start:stop] = np.sqrt(np.take_along_axis(pd, order, axis=1))
    return nbr_idx, nbr_dist


def attach_energy_weights(graph: SparseGraph, cloud: PointCloud,
                          weights: WeightProfile,
                          reference_labels=None) -> EnergyWeights:
    """Evaluate the truncated node weight gamma_zeta at every node and fix
    the energy normalization from the graph construction.

    `reference_labels` optionally restricts the distance computation to a
    subset of the labeled nodes (positions in cloud.label_indices); the
    radial oracle uses this to anchor a pure power-law weight at one label.
    Base edge weights are untouched.
    """
    if graph.n != cloud.n:
        raise DataError(f"graph has {graph.n} nodes, cloud has {cloud.n}")
    if reference_labels is None:
        ref = cloud.label_indices
    else:
        ref = cloud.label_indices[np.asarray(reference_labels, dtype=np.int64)]
    dist = dist_to_subset(cloud, ref)
    node_gamma = np.atleast_1d(np.asarray(gamma_zeta(weights, dist),
                                          dtype=np.float64))
    kind = graph.construction.get("kind")
    if kind == "eps_ball":
        eps = graph.construction["eps"]
        energy_scale = 1.0 / (graph.n ** 2 * eps * eps)
        operator_scale = 1.0 / (2.0 * graph.n * eps * eps)
    else:
        energy_scale = 1.0
        operator_scale = 0.5
    return EnergyWeights(node_gamma, energy_scale, operator_scale)


def uniform_energy_weights(graph: SparseGraph) -> EnergyWeights:
    """gamma identically 1: the standard graph Dirichlet energy."""
    kind = graph.construction.get("kind")
    if kind == "eps_ball":
        eps = graph.construction["eps"]
        energy_scale = 1.0 / (graph.n ** 2 * eps * eps)
        operator_scale = 1.0 / (2.0 * graph.n * eps * eps)
    else:
        energy_scale = 1.0
        operator_scale = 0.5
    return EnergyWeights(np.ones(graph.n), energy_scale, operator_scale)


def connected_components(graph: SparseGraph):
    """(count, labels) with labels[i] the 0-based component id of node i."""
    count, labels = _cc(graph.W, directed=False)
    return int(count), labels


def unlabeled_components(graph: SparseGraph, cloud: PointCloud):
    """Sizes of components containing no labeled node (empty list if none)."""
    _, labels = connected_components(graph)
    labeled = np.unique(labels[cloud.label_indices])
    sizes = []
    for comp in np.unique(labels):
        if comp not in labeled:
            sizes.append(int((labels == comp).sum()))
    return sizes


def restrict_to_labeled_components(graph: SparseGraph, cloud: PointCloud):
    """Drop nodes whose component has no label.

    Returns (graph, cloud, kept_indices); the inputs come back unchanged
    when nothing needs dropping.
    """
    _, labels = connected_components(graph)
    labeled = np.unique(labels[cloud.label_indices])
    keep = np.isin(labels, labeled)
    if keep.all():
        return graph, cloud, np.arange(cloud.n)
    kept = np.flatnonzero(keep)
    remap = -np.ones(cloud.n, dtype=np.int64)
    remap[kept] = np.arange(kept.size)
    W = graph.W[kept][:, kept].tocsr()
    sub = SparseGraph(W, dict(graph.construction))
    new_cloud = PointCloud(
        cloud.points[kept],
        remap[cloud.label_indices],
        cloud.label_values,
        cloud.label_classes,
    )
    return sub, new_cloud, kept


def save_graph(path, graph: SparseGraph) -> None:
    """Text format: header `pwgl-graph v1 n=<n> sym=1`, then one line
    `i j w` per unordered edge with i < j, 17 significant digits."""
    coo = sp.triu(graph.W, k=1).tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as f:
        f.write(f"{GRAPH_MAGIC} {GRAPH_VERSION} n={graph.n} sym=1\n")
        for i, j, w in zip(coo.row[order], coo.col[order], coo.data[order]):
            f.write(f"{i} {j} {w:.17g}\n")


def load_graph(path) -> SparseGraph:
    """Read a graph written by :func:`save_graph`."""
    with open(path) as f:
        header = f.readline().split()
        if (len(header) != 4 or header[0] != GRAPH_MAGIC
                or header[1] != GRAPH_VERSION
                or not header[2].startswith("n=")
                or header[3] != "sym=1"):
            raise DataError(f"{path}: bad graph header")
        try:
            n = int(header[2][2:])
        except ValueError:
            raise DataError(f"{path}: bad node count in header") from None
        rows, cols, vals = [], [], []
        for ln, line in enumerate(f, start=2):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 3:
                raise DataError(f"{path}:{ln}: expected `i j w`")
            try:
                i, j, w = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError as e:
                raise DataError(f"{path}:{ln}: {e}") from None
            if not 0 <= i < j < n:
                raise DataError(f"{path}:{ln}: edge ({i}, {j}) out of order")
            rows.append(i)
            cols.append(j)
            vals.append(w)
    if not rows:
        return SparseGraph(sp.csr_matrix((n, n)), {"kind": "loaded"})
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.float64)
    W = sp.coo_matrix(
        (np.concatenate([vals, vals]),
         (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
        shape=(n, n),
    ).tocsr()
    return SparseGraph(W, {"kind": "loaded"})
