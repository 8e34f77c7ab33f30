"""Dirichlet energies, the weighted graph Laplacian, and constrained solves.

All three solve methods eliminate the pinned nodes and solve a symmetric
positive definite system on the rest with Jacobi-preconditioned conjugate
gradients. The weighted and standard methods minimize the node-weighted
Dirichlet energy subject to u = g on the labels; the WNLL method minimizes
its own label-emphasized objective.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import (
    ConfigError,
    DataError,
    NonConvergenceError,
    SolverError,
    UnlabeledComponentError,
)
from .geometry import PointCloud
from .graph import (
    EnergyWeights,
    SparseGraph,
    uniform_energy_weights,
    unlabeled_components,
)

DENSE_LIMIT = 2000  # direct path is an oracle for small systems only


@dataclass
class NodeFunction:
    """Function values on graph nodes with a pinned (label) mask."""

    values: np.ndarray
    pinned: np.ndarray


@dataclass
class SolveReport:
    method: str
    iterations: int
    residual: float
    energy: float
    wall_time_ms: float
    history: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "iterations": self.iterations,
            "residual": self.residual,
            "energy": self.energy,
            "wall_time_ms": self.wall_time_ms,
        }


@dataclass
class WnllParams:
    """mu weights the label-centered terms; None means unlabeled/labeled."""

    mu: float | None = None

    def resolve(self, n_unlabeled: int, n_labeled: int) -> float:
        if self.mu is None:
            if n_labeled == 0:
                raise DataError("no labeled points")
            return n_unlabeled / n_labeled
        if not self.mu > 0:
            raise ConfigError(f"mu must be > 0, got {self.mu}")
        return float(self.mu)


def _check_finite_gamma(ew: EnergyWeights, op: str) -> None:
    if np.isinf(ew.node_gamma).any():
        raise ConfigError(f"{op} requires finite node weights")


def dirichlet_energy(graph: SparseGraph, ew: EnergyWeights,
                     u: np.ndarray) -> float:
    """Energy scale * sum over ordered pairs of (gamma_i + gamma_j)/2 *
    w_ij * (u_i - u_j)^2, evaluated with sparse matrix products.

    Infinite node weights fall back to the explicit pairwise path, where
    inf * 0 counts as 0 (hard constraints satisfied by u cost nothing).
    """
    g = ew.node_gamma
    if np.isinf(g).any():
        return dirichlet_energy_pairwise(graph, ew, u)
    u = np.asarray(u, dtype=np.float64)
    W = graph.W
    deg = graph.degrees()
    u2 = u * u
    quad = deg * u2 - 2.0 * u * (W @ u) + (W @ u2)
    return float(ew.energy_scale * np.dot(g, quad))


def dirichlet_energy_one_sided(graph: SparseGraph, ew: EnergyWeights,
                               u: np.ndarray) -> float:
    """Same value through the one-sided weighting gamma_i * w_ij *
    (u_i - u_j)^2, expanded per node. Cross-checks the symmetric form."""
    _check_finite_gamma(ew, "one-sided energy")
    u = np.asarray(u, dtype=np.float64)
    W = graph.W
    g = ew.node_gamma
    per_node = (graph.degrees() * u * u - 2.0 * u * (W @ u) + W @ (u * u))
    return float(ew.energy_scale * np.dot(g, per_node))


def dirichlet_energy_pairwise(graph: SparseGraph, ew: EnergyWeights,
                              u: np.ndarray) -> float:
    """Explicit sum over stored entries of the symmetric form; the
    reference implementation for small graphs and the infinite-weight rule."""
    u = np.asarray(u, dtype=np.float64)
    coo = graph.W.tocoo()
    g = ew.node_gamma
    diff = u[coo.row] - u[coo.col]
    halfw = 0.5 * (g[coo.row] + g[coo.col])
    # inf * 0 = 0: edges with equal endpoint values cost nothing even at
    # infinite weight
    live = diff != 0.0
    terms = halfw[live] * coo.data[live] * diff[live] ** 2
    return float(ew.energy_scale * terms.sum())


def apply_laplacian(graph: SparseGraph, ew: EnergyWeights, u: np.ndarray,
                    at=None) -> np.ndarray:
    """Pointwise operator: operator_scale * sum_y (gamma_x + gamma_y)
    w_xy (u(y) - u(x)); zero at the minimizer on unpinned nodes."""
    _check_finite_gamma(ew, "apply_laplacian")
    u = np.asarray(u, dtype=np.float64)
    W = graph.W
    g = ew.node_gamma
    out = ew.operator_scale * (
        g * (W @ u) + W @ (g * u) - u * (g * graph.degrees() + W @ g)
    )
    if at is None:
        return out
    return out[np.asarray(at)]


def cg_solve(A, b: np.ndarray, tol: float = 1e-10, max_iter: int | None = None,
             preconditioner: str = "jacobi", diag: np.ndarray | None = None):
    """Preconditioned conjugate gradients for SPD systems.

    Returns (x, iterations, relative_residual, history). Convergence means
    |b - A x| / |b| <= tol on the true residual; the recursive residual
    drives the loop and a final check restarts if rounding drifted. Raises
    NonConvergenceError with the residual history when the iteration
    budget runs out.
    """
    b = np.asarray(b, dtype=np.float64)
    m = b.shape[0]
    if max_iter is None:
        max_iter = int(10.0 * math.sqrt(m)) + 1000
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0 or m == 0:
        return np.zeros(m), 0, 0.0, []
    if preconditioner == "jacobi":
        if diag is None:
            diag = A.diagonal()
        diag = np.asarray(diag, dtype=np.float64)
        if np.any(diag <= 0):
            raise SolverError("jacobi preconditioner needs a positive diagonal")
        minv = 1.0 / diag
    elif preconditioner == "none":
        minv = None
    else:
        raise ConfigError(f"unknown preconditioner: {preconditioner!r}")

    def precond(r):
        return minv * r if minv is not None else r

    x = np.zeros(m)
    r = b.copy()
    iters = 0
    history: list[float] = []
    while True:
        z = precond(r)
        p = z.copy()
        rz = float(r @ z)
        while iters < max_iter:
            Ap = A @ p
            pAp = float(p @ Ap)
            if pAp <= 0.0:
                raise SolverError("operator is not positive definite")
            alpha = rz / pAp
            x += alpha * p
            r -= alpha * Ap
            iters += 1
            rel = float(np.linalg.norm(r)) / bnorm
            history.append(rel)
            if rel <= tol:
                break
            z = precond(r)
            rz_new = float(r @ z)
            p = z + (rz_new / rz) * p
            rz = rz_new
        r_true = b - A @ x
        rel_true = float(np.linalg.norm(r_true)) / bnorm
        if rel_true <= tol:
            return x, iters, rel_true, history
        if iters >= max_iter:
            raise NonConvergenceError(iters, rel_true, history)
        r = r_true  # rounding drift: restart from the true residual


def _tilde_weights(graph: SparseGraph, node_gamma: np.ndarray) -> sp.csr_matrix:
    """Symmetrized energy weights (gamma_i + gamma_j) / 2 * w_ij as CSR."""
    W = graph.W
    col = sp.csr_matrix(
        (node_gamma[W.indices], W.indices, W.indptr), shape=W.shape
    )
    left = W.multiply(node_gamma[:, None]).tocsr()
    right = W.multiply(col)
    return ((left + right) * 0.5).tocsr()


class ReducedSystem:
    """Constrained energy minimization with the pinned block eliminated.

    Assembled once per (graph, weights, pinned set); solving for different
    pinned values reuses the same operator, which is what one-vs-rest
    classification needs. Infinite node weights (zeta = inf) force every
    graph neighbor of a pinned infinite-weight node to its value; the
    forced set is value-independent, so it is resolved at assembly and
    only consistency is checked per solve.
    """

    def __init__(self, graph: SparseGraph, ew: EnergyWeights,
                 pinned: np.ndarray):
        self.graph = graph
        self.base_pinned = np.asarray(pinned, dtype=bool)
        node_gamma = ew.node_gamma
        W = graph.W
        inf_nodes = np.flatnonzero(np.isinf(node_gamma))
        if inf_nodes.size and np.any(~self.base_pinned[inf_nodes]):
            raise ConfigError("infinite weight at an unpinned node")
        # arcs (i, j): node j must equal the pinned value at i
        self.inf_arcs = [
            (int(i), int(j))
            for i in inf_nodes
            for j in W.indices[W.indptr[i]:W.indptr[i + 1]]
        ]
        pinned_ext = self.base_pinned.copy()
        for _, j in self.inf_arcs:
            pinned_ext[j] = True
        self.pinned_ext = pinned_ext
        self.free = np.flatnonzero(~pinned_ext)
        gamma_fin = node_gamma
        if inf_nodes.size:
            gamma_fin = node_gamma.copy()
            gamma_fin[inf_nodes] = 0.0  # their edges join pinned nodes only
        Wt = _tilde_weights(graph, gamma_fin)
        d_tilde = np.asarray(Wt.sum(axis=1)).ravel()
        self.diag = d_tilde[self.free]
        self.A = sp.diags(self.diag) - Wt[self.free][:, self.free]
        self.W_fp = Wt[self.free][:, pinned_ext]

    def _extend_values(self, pin_values: np.ndarray) -> np.ndarray:
        values = np.zeros(self.graph.n)
        values[self.base_pinned] = pin_values[self.base_pinned]
        assigned = self.base_pinned.copy()
        for i, j in self.inf_arcs:
            if assigned[j]:
                if values[j] != values[i]:
                    raise SolverError(
                        "infinite-weight constraints conflict: nodes "
                        f"{i} and {j} must take different values"
                    )
            else:
                assigned[j] = True
                values[j] = values[i]
        return values

    def solve(self, pin_values: np.ndarray, tol: float = 1e-10,
              max_iter: int | None = None, method: str = "cg"):
        """Returns (u, iterations, residual) with u on all nodes."""
        u = self._extend_values(pin_values)
        if self.free.size == 0:
            return u, 0, 0.0
        b = self.W_fp @ u[self.pinned_ext]
        if method == "direct":
            if self.free.size > DENSE_LIMIT:
                raise ConfigError(
                    f"direct solve limited to {DENSE_LIMIT} unknowns"
                )
            x = np.linalg.solve(self.A.toarray(), b)
            res = float(np.linalg.norm(b - self.A @ x)
                        / max(np.linalg.norm(b), 1e-300))
            u[self.free] = x
            return u, 0, res
        if method != "cg":
            raise ConfigError(f"unknown solve method: {method!r}")
        x, iters, res, _ = cg_solve(self.A, b, tol=tol, max_iter=max_iter,
                                    preconditioner="jacobi", diag=self.diag)
        u[self.free] = x
        return u, iters, res


class WnllSystem:
    """Reduced system for the label-emphasized objective; same reuse
    pattern as ReducedSystem."""

    def __init__(self, graph: SparseGraph, pinned: np.ndarray, mu: float):
        self.graph = graph
        self.pinned = np.asarray(pinned, dtype=bool)
        self.mu = float(mu)
        self.free = np.flatnonzero(~self.pinned)
        W = graph.W
        W_uu = W[self.free][:, self.free]
        self.W_up = W[self.free][:, self.pinned]
        deg_u = np.asarray(W_uu.sum(axis=1)).ravel()
        deg_p = np.asarray(self.W_up.sum(axis=1)).ravel()
        self.diag = 2.0 * deg_u + (1.0 + mu) * deg_p
        self.A = sp.diags(self.diag) - 2.0 * W_uu

    def solve(self, pin_values: np.ndarray, tol: float = 1e-10,
              max_iter: int | None = None, method: str = "cg"):
        u = np.zeros(self.graph.n)
        u[self.pinned] = pin_values[self.pinned]
        if self.free.size == 0:
            return u, 0, 0.0
        b = (1.0 + self.mu) * (self.W_up @ u[self.pinned])
        if method == "direct":
            if self.free.size > DENSE_LIMIT:
                raise ConfigError(
                    f"direct solve limited to {DENSE_LIMIT} unknowns"
                )
            x = np.linalg.solve(self.A.toarray(), b)
            res = float(np.linalg.norm(b - self.A @ x)
                        / max(np.linalg.norm(b), 1e-300))
            u[self.free] = x
            return u, 0, res
        if method != "cg":
            raise ConfigError(f"unknown solve method: {method!r}")
        x, iters, res, _ = cg_solve(self.A, b, tol=tol, max_iter=max_iter,
                                    preconditioner="jacobi", diag=self.diag)
        u[self.free] = x
        return u, iters, res


def _prepare(graph: SparseGraph, cloud: PointCloud):
    if graph.n != cloud.n:
        raise DataError(f"graph has {graph.n} nodes, cloud has {cloud.n}")
    if cloud.label_indices.size == 0:
        raise DataError("no labeled points")
    sizes = unlabeled_components(graph, cloud)
    if sizes:
        raise UnlabeledComponentError(sizes)
    pinned = cloud.labeled_mask
    pin_values = np.zeros(cloud.n)
    pin_values[cloud.label_indices] = cloud.label_values
    return pinned, pin_values


def _solve_energy_method(name, graph, cloud, ew, tol, max_iter, method):
    t0 = time.perf_counter()
    pinned, pin_values = _prepare(graph, cloud)
    if np.ptp(cloud.label_values) == 0.0:
        u = np.full(cloud.n, cloud.label_values[0])
        report = SolveReport(name, 0, 0.0, 0.0,
                             (time.perf_counter() - t0) * 1e3)
        return NodeFunction(u, pinned), report
    system = ReducedSystem(graph, ew, pinned)
    u, iters, res = system.solve(pin_values, tol=tol, max_iter=max_iter,
                                 method=method)
    energy = dirichlet_energy(graph, ew, u)
    report = SolveReport(name, iters, res, energy,
                         (time.perf_counter() - t0) * 1e3)
    return NodeFunction(u, pinned), report


def solve_pw(graph: SparseGraph, cloud: PointCloud, ew: EnergyWeights,
             tol: float = 1e-10, max_iter: int | None = None,
             method: str = "cg"):
    """Minimizer of the weighted Dirichlet energy with u = g on labels."""
    return _solve_energy_method("pw", graph, cloud, ew, tol, max_iter,
                                method)


def solve_standard(graph: SparseGraph, cloud: PointCloud,
                   tol: float = 1e-10, max_iter: int | None = None,
                   method: str = "cg"):
    """Uniform-weight Laplacian solve: gamma identically 1."""
    return _solve_energy_method("standard", graph, cloud,
                                uniform_energy_weights(graph), tol,
                                max_iter, method)


def wnll_objective(graph: SparseGraph, cloud: PointCloud, u: np.ndarray,
                   mu: float, energy_scale: float | None = None) -> float:
    """Label-emphasized objective: sum over unlabeled x of sum_y
    w_xy (u(x) - u(y))^2 plus mu times the same sum anchored at labels."""
    W = graph.W
    u = np.asarray(u, dtype=np.float64)
    deg = graph.degrees()
    per_node = deg * u * u - 2.0 * u * (W @ u) + W @ (u * u)
    weights = np.ones(cloud.n)
    weights[cloud.label_indices] = mu
    if energy_scale is None:
        energy_scale = 1.0
    return float(energy_scale * np.dot(weights, per_node))


def solve_wnll(graph: SparseGraph, cloud: PointCloud,
               params: WnllParams | None = None, tol: float = 1e-10,
               max_iter: int | None = None, method: str = "cg"):
    """Minimizer of the WNLL objective with u = g on labels.

    Stationarity of the quadratic gives the SPD system
    [2 sum_{y unlabeled} w + (1 + mu) sum_{y labeled} w] u_z
    - 2 sum_{y unlabeled} w u_y = (1 + mu) sum_{y labeled} w g_y;
    at mu = 1 this is exactly twice the standard constrained system.
    """
    t0 = time.perf_counter()
    params = params or WnllParams()
    pinned, pin_values = _prepare(graph, cloud)
    mu = params.resolve(cloud.n - cloud.label_indices.size,
                        cloud.label_indices.size)
    if np.ptp(cloud.label_values) == 0.0:
        u = np.full(cloud.n, cloud.label_values[0])
        report = SolveReport("wnll", 0, 0.0, 0.0,
                             (time.perf_counter() - t0) * 1e3)
        return NodeFunction(u, pinned), report
    system = WnllSystem(graph, pinned, mu)
    u, iters, res = system.solve(pin_values, tol=tol, max_iter=max_iter,
                                 method=method)
    scale = uniform_energy_weights(graph).energy_scale
    energy = wnll_objective(graph, cloud, u, mu, scale)
    report = SolveReport("wnll", iters, res, energy,
                         (time.perf_counter() - t0) * 1e3)
    return NodeFunction(u, pinned), report


METHODS = {
    "pw": solve_pw,
    "standard": solve_standard,
    "wnll": solve_wnll,
}
