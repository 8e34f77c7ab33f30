"""Validation probes that compare the discrete operator to closed forms.

Each probe evaluates the graph operator directly from neighborhood sums,
without assembling a global matrix, and compares it against an analytic
target: the weighted continuum Laplacian for smooth test functions, the
sign of a power-law barrier near a label, the exact radial profile on the
disc, the growth rate of the solution near a labeled node, and the spread
of the two-point solution as the sample grows.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError, DataError
from .experiments import (
    DEFAULT_METHODS,
    SyntheticSpec,
    generate,
    run_two_point_box,
)
from .geometry import SpatialIndex, dist_to_subset
from .graph import attach_energy_weights, build_eps_graph
from .kernels import (
    KernelProfile,
    WeightProfile,
    eta,
    flat_profile,
    gamma_zeta,
    kernel_moments,
)
from .solve import solve_pw

FD_STEP = 1e-5
FD_RTOL = 1e-6


# ---------------------------------------------------------------------------
# test functions with analytic derivatives


@dataclass(frozen=True)
class ConsistencyProbe:
    """Smooth test function with its analytic gradient and Laplacian.

    phi, lap map an (m, d) array to (m,); grad maps it to (m, d). rho and
    grad_rho describe the sampling density when it is not uniform.
    """

    name: str
    phi: Callable
    grad: Callable
    lap: Callable
    rho: Callable | None = None
    grad_rho: Callable | None = None

    def verify_derivatives(self, points: np.ndarray, step: float = FD_STEP,
                           rtol: float = FD_RTOL) -> None:
        """Check grad and lap against central differences at `points`.

        Raises DataError when either disagrees beyond `rtol` relative to
        the larger of 1 and the analytic magnitude.
        """
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2:
            raise DataError("points must be (m, d)")
        m, d = pts.shape
        g = np.asarray(self.grad(pts), dtype=np.float64)
        lap = np.asarray(self.lap(pts), dtype=np.float64)
        fd_lap = np.zeros(m)
        base = np.asarray(self.phi(pts), dtype=np.float64)
        # Second differences lose twice as many digits to roundoff as first
        # differences, so the curvature check needs a coarser step.
        curv_step = max(step, 1e-4)
        for k in range(d):
            hi = pts.copy()
            lo = pts.copy()
            hi[:, k] += step
            lo[:, k] -= step
            phi_hi = np.asarray(self.phi(hi), dtype=np.float64)
            phi_lo = np.asarray(self.phi(lo), dtype=np.float64)
            fd_g = (phi_hi - phi_lo) / (2.0 * step)
            scale = max(1.0, float(np.abs(g[:, k]).max()))
            if np.abs(fd_g - g[:, k]).max() > rtol * scale:
                raise DataError(
                    f"probe {self.name!r}: gradient component {k} disagrees "
                    "with finite differences"
                )
            hi[:, k] = pts[:, k] + curv_step
            lo[:, k] = pts[:, k] - curv_step
            phi_hi = np.asarray(self.phi(hi), dtype=np.float64)
            phi_lo = np.asarray(self.phi(lo), dtype=np.float64)
            fd_lap += (phi_hi - 2.0 * base + phi_lo) / curv_step ** 2
        scale = max(1.0, float(np.abs(lap).max()))
        if np.abs(fd_lap - lap).max() > rtol * scale:
            raise DataError(
                f"probe {self.name!r}: Laplacian disagrees with finite "
                "differences"
            )


def probe_constant(c: float = 1.0) -> ConsistencyProbe:
    return ConsistencyProbe(
        name=f"constant_{c:g}",
        phi=lambda x: np.full(x.shape[0], float(c)),
        grad=lambda x: np.zeros_like(x),
        lap=lambda x: np.zeros(x.shape[0]),
    )


def probe_linear(a) -> ConsistencyProbe:
    vec = np.asarray(a, dtype=np.float64)
    return ConsistencyProbe(
        name="linear",
        phi=lambda x: x @ vec,
        grad=lambda x: np.broadcast_to(vec, x.shape).copy(),
        lap=lambda x: np.zeros(x.shape[0]),
    )


def probe_x1_squared() -> ConsistencyProbe:
    def grad(x):
        g = np.zeros_like(x)
        g[:, 0] = 2.0 * x[:, 0]
        return g

    return ConsistencyProbe(
        name="x1_squared",
        phi=lambda x: x[:, 0] ** 2,
        grad=grad,
        lap=lambda x: np.full(x.shape[0], 2.0),
    )


def probe_cosine(k: float = 1.0) -> ConsistencyProbe:
    w = np.pi * float(k)

    def grad(x):
        g = np.zeros_like(x)
        g[:, 0] = -w * np.sin(w * x[:, 0])
        return g

    return ConsistencyProbe(
        name=f"cosine_{k:g}",
        phi=lambda x: np.cos(w * x[:, 0]),
        grad=grad,
        lap=lambda x: -w * w * np.cos(w * x[:, 0]),
    )


# ---------------------------------------------------------------------------
# analytic weight field


def weight_field(profile: WeightProfile, points: np.ndarray,
                 label_points: np.ndarray):
    """Truncated node weight and its spatial gradient at `points`.

    Mirrors gamma_zeta for formula weights. The gradient is the analytic
    derivative of the active branch and 0 on capped or windowed-out
    regions; custom weight functions carry no derivative and are
    rejected.
    """
    if profile.custom_gamma is not None:
        raise ConfigError("analytic weight gradients require a formula "
                          "weight, not custom_gamma")
    pts = np.asarray(points, dtype=np.float64)
    lp = np.asarray(label_points, dtype=np.float64)
    if lp.ndim != 2 or lp.shape[0] == 0:
        raise DataError("label_points must be a nonempty (m, d) array")
    diff = pts[:, None, :] - lp[None, :, :]
    dist_all = np.sqrt((diff * diff).sum(axis=2))
    nearest = dist_all.argmin(axis=1)
    rows = np.arange(pts.shape[0])
    t = dist_all[rows, nearest]
    if np.any(t == 0.0):
        raise DataError("weight gradient is undefined at a label point")
    unit = diff[rows, nearest] / t[:, None]

    if profile.alpha == 0.0:
        raw = np.full_like(t, 2.0)
        d_raw = np.zeros_like(t)
    else:
        raw = 1.0 + (profile.r0 / t) ** profile.alpha
        d_raw = -profile.alpha * profile.r0 ** profile.alpha \
            * t ** (-profile.alpha - 1.0)
    grad = d_raw[:, None] * unit

    if not profile.global_formula:
        window = t <= profile.label_separation / 4.0
        raw = np.where(window, np.maximum(raw, 1.0), 1.0)
        grad = np.where(window[:, None], grad, 0.0)

    if profile.variant == "truncated":
        capped = raw >= profile.zeta
        value = np.minimum(raw, profile.zeta)
    else:
        capped = t <= profile.region_radius
        value = np.where(capped, profile.zeta, raw)
    grad = np.where(capped[:, None], 0.0, grad)
    return value, grad


# ---------------------------------------------------------------------------
# direct operator evaluation


def operator_at_nodes(cloud, eps: float, kernel: KernelProfile,
                      node_gamma: np.ndarray, values: np.ndarray,
                      at: np.ndarray) -> np.ndarray:
    """Graph operator at the nodes `at` by direct neighborhood sums.

    Equals apply_laplacian on the assembled graph but needs no global
    matrix, so large-radius kernels stay affordable when only a few
    nodes are evaluated.
    """
    if eps <= 0:
        raise ConfigError(f"eps must be > 0, got {eps}")
    g = np.asarray(node_gamma, dtype=np.float64)
    vals = np.asarray(values, dtype=np.float64)
    if g.shape != (cloud.n,) or vals.shape != (cloud.n,):
        raise DataError("node_gamma and values must have one entry per node")
    index = SpatialIndex(cloud.points)
    support = kernel.support_factor * eps
    scale = 1.0 / (2.0 * cloud.n * eps * eps)
    out = np.empty(len(at), dtype=np.float64)
    for k, i in enumerate(np.asarray(at, dtype=np.int64)):
        nbr = index.range_query(cloud.points[i], support)
        d = np.sqrt(((cloud.points[nbr] - cloud.points[i]) ** 2).sum(axis=1))
        w = eta(kernel, d / eps) * eps ** (-cloud.dim)
        out[k] = scale * float(
            ((g[i] + g[nbr]) * w * (vals[nbr] - vals[i])).sum()
        )
    return out


def _interior_mask(cloud, eps: float, margin: float = 2.0,
                   boundary: str = "box") -> np.ndarray:
    """Nodes at distance > margin*eps from both the labels and the
    domain boundary."""
    pts = cloud.points
    m = margin * eps
    if boundary == "box":
        inside = (pts.min(axis=1) > m) & ((1.0 - pts).min(axis=1) > m)
    elif boundary == "ball":
        inside = np.sqrt((pts * pts).sum(axis=1)) < 1.0 - m
    else:
        raise ConfigError(f"unknown boundary rule: {boundary!r}")
    far = dist_to_subset(cloud, cloud.label_indices) > m
    return inside & far


def consistency_check(probe: ConsistencyProbe | None = None,
                      n_schedule=(10_000, 40_000), d: int = 2, seed: int = 0,
                      eps: float = 0.23, kernel: KernelProfile | None = None,
                      alpha: float = 2.0, r0: float = 0.15,
                      zeta: float = 1e6, labels=None) -> dict:
    """Operator vs (sigma_eta / 2) * weighted Laplacian on interior nodes.

    Uniform box samples with labels at the corners by default; the
    evaluation mask keeps nodes farther than 2 eps from labels and
    boundary, where the expansion of the operator has no truncation
    terms. eps is held fixed across the schedule so the deviation decays
    with n alone.
    """
    probe = probe or probe_x1_squared()
    kernel = kernel or flat_profile()
    if labels is None:
        labels = ((np.zeros(d), 0.0), (np.ones(d), 1.0))
    wp = WeightProfile(alpha=alpha, r0=r0, zeta=zeta)
    moments = kernel_moments(kernel, d)
    rows = []
    for n in n_schedule:
        spec = SyntheticSpec("uniform_box", n=int(n), d=d, seed=(seed, n),
                             labels=labels)
        cloud = generate(spec)
        mask = _interior_mask(cloud, eps)
        if not mask.any():
            raise DataError(
                f"evaluation mask is empty at n={n}: eps={eps} leaves no "
                "interior nodes"
            )
        at = np.flatnonzero(mask)
        node_gamma = gamma_zeta(
            wp, dist_to_subset(cloud, cloud.label_indices))
        phi_vals = np.asarray(probe.phi(cloud.points), dtype=np.float64)
        lop = operator_at_nodes(cloud, eps, kernel, node_gamma, phi_vals, at)

        pts = cloud.points[at]
        gam, ggrad = weight_field(wp, pts, cloud.label_points())
        gphi = np.asarray(probe.grad(pts), dtype=np.float64)
        lphi = np.asarray(probe.lap(pts), dtype=np.float64)
        if probe.rho is None:
            rho = np.ones(at.size)
            grho = np.zeros_like(pts)
        else:
            rho = np.asarray(probe.rho(pts), dtype=np.float64)
            grho = np.asarray(probe.grad_rho(pts), dtype=np.float64)
        drift = rho[:, None] * ggrad + 2.0 * gam[:, None] * grho
        target = 0.5 * moments.sigma_eta * (
            gam * rho * lphi + (drift * gphi).sum(axis=1)
        )
        err = np.abs(lop - target)
        scale = float(np.abs(target).max())
        rows.append({
            "n": int(n),
            "n_nodes": int(cloud.n),
            "eps": float(eps),
            "mask_size": int(at.size),
            "max_error": float(err.max()),
            "target_scale": scale,
            "relative": float(err.max() / scale) if scale > 0 else None,
        })
    return {
        "check": "consistency",
        "probe": probe.name,
        "sigma_eta": float(moments.sigma_eta),
        "params": {
            "d": int(d), "eps": float(eps), "alpha": float(alpha),
            "r0": float(r0), "zeta": float(zeta), "kernel": kernel.kind,
            "seed": seed, "n_schedule": [int(n) for n in n_schedule],
        },
        "rows": rows,
    }


def barrier_check(n_schedule=(20_000, 40_000), d: int = 2, seed: int = 0,
                  alpha: float = 4.0, beta: float = 1.0, r0: float = 1.0,
                  eps: float = 0.04, kernel: KernelProfile | None = None,
                  inner_factor: float = 4.0, outer: float = 0.2,
                  center=None) -> dict:
    """Sign of the operator on the power barrier |x - y|^beta near a label.

    The weighted operator applied to the barrier must be strictly
    negative on the annulus inner_factor*eps < |x - y| <= outer when
    0 < beta < alpha + 2 - d; the check reports the violating fraction.
    The inner radius keeps the label itself outside every neighborhood.
    """
    if not 0.0 < beta < alpha + 2.0 - d:
        raise ConfigError(
            f"barrier exponent must satisfy 0 < beta < alpha + 2 - d, "
            f"got beta={beta} alpha={alpha} d={d}"
        )
    kernel = kernel or flat_profile()
    if inner_factor <= kernel.support_factor:
        raise ConfigError("inner_factor must exceed the kernel support so "
                          "the label is outside every neighborhood")
    y = np.full(d, 0.5) if center is None else np.asarray(center, float)
    wp = WeightProfile(alpha=alpha, r0=r0, zeta=1e12)
    rows = []
    for n in n_schedule:
        spec = SyntheticSpec("uniform_box", n=int(n), d=d, seed=(seed, n),
                             labels=((y, 0.0),))
        cloud = generate(spec)
        t = dist_to_subset(cloud, cloud.label_indices)
        annulus = (t > inner_factor * eps) & (t <= outer)
        if not annulus.any():
            raise DataError(
                f"annulus ({inner_factor}*eps, {outer}] is empty at n={n}"
            )
        node_gamma = gamma_zeta(wp, t)
        phi = t ** beta
        at = np.flatnonzero(annulus)
        lop = operator_at_nodes(cloud, eps, kernel, node_gamma, phi, at)
        violations = int((lop >= 0.0).sum())
        rows.append({
            "n": int(n),
            "n_nodes": int(cloud.n),
            "annulus_size": int(at.size),
            "violations": violations,
            "violation_fraction": float(violations / at.size),
            "min_value": float(lop.min()),
            "max_value": float(lop.max()),
        })
    return {
        "check": "barrier",
        "params": {
            "d": int(d), "eps": float(eps), "alpha": float(alpha),
            "beta": float(beta), "r0": float(r0),
            "inner_factor": float(inner_factor), "outer": float(outer),
            "kernel": kernel.kind, "seed": seed,
            "n_schedule": [int(n) for n in n_schedule],
        },
        "rows": rows,
    }


# ---------------------------------------------------------------------------
# solution-level probes


def radial_oracle_check(n: int = 30_000, d: int = 2, alpha: float = 2.0,
                        seed: int = 0, ring_width: float = 0.01,
                        zeta: float = 1e8, eps: float | None = None,
                        bins: int = 20, r_lo: float = 0.1,
                        r_hi: float = 0.9,
                        kernel: KernelProfile | None = None,
                        tol: float = 1e-10,
                        max_iter: int | None = None) -> dict:
    """Solution on the labeled disc vs the exact radial profile.

    One label with value 0 at the origin, value 1 on the sampled
    boundary ring, and the pure power weight dist^(-alpha) measured from
    the origin alone. The continuum solution is r^(alpha + 2 - d); the
    check bins unlabeled nodes by radius and reports the relative L2
    deviation of the bin means.
    """
    if alpha <= d - 2:
        raise ConfigError("radial profile requires alpha > d - 2")
    if bins < 4:
        raise ConfigError(f"need at least 4 bins, got {bins}")
    kernel = kernel or flat_profile()
    spec = SyntheticSpec("disc_with_boundary_ring", n=int(n), d=d, seed=seed,
                         ring_width=ring_width, ring_value=1.0,
                         labels=((np.zeros(d), 0.0),))
    cloud = generate(spec)
    if eps is None:
        eps = 2.5 / cloud.n ** (1.0 / d)

    def power_gamma(t):
        with np.errstate(divide="ignore"):
            return np.asarray(t, dtype=np.float64) ** (-alpha)

    wp = WeightProfile(alpha=alpha, r0=1.0, zeta=float(zeta),
                       custom_gamma=power_gamma)
    graph = build_eps_graph(cloud, eps, kernel)
    ew = attach_energy_weights(graph, cloud, wp, reference_labels=[0])
    u, rep = solve_pw(graph, cloud, ew, tol=tol, max_iter=max_iter)

    free = ~cloud.labeled_mask
    radii = np.sqrt((cloud.points[free] ** 2).sum(axis=1))
    uf = u.values[free]
    keep = (radii >= r_lo) & (radii <= r_hi)
    radii, uf = radii[keep], uf[keep]

    b = int(bins)
    while True:
        edges = np.linspace(r_lo, r_hi, b + 1)
        which = np.clip(np.digitize(radii, edges) - 1, 0, b - 1)
        counts = np.bincount(which, minlength=b)
        if counts.min() > 0:
            break
        b //= 2
        if b < 4:
            raise DataError("radial bins stay empty down to 4 bins; "
                            "not enough nodes in the radius range")
        warnings.warn(f"empty radial bin, reducing bin count to {b}")
    mean_u = np.bincount(which, weights=uf, minlength=b) / counts
    mean_r = np.bincount(which, weights=radii, minlength=b) / counts
    exponent = alpha + 2.0 - d
    ref = mean_r ** exponent
    rel_l2 = float(np.linalg.norm(mean_u - ref) / np.linalg.norm(ref))
    return {
        "check": "radial_oracle",
        "rel_l2": rel_l2,
        "exponent": float(exponent),
        "bins": b,
        "bin_radius": [float(v) for v in mean_r],
        "bin_mean": [float(v) for v in mean_u],
        "reference": [float(v) for v in ref],
        "iterations": rep.iterations,
        "params": {
            "n": int(n), "n_nodes": int(cloud.n), "d": int(d),
            "alpha": float(alpha), "eps": float(eps), "zeta": float(zeta),
            "ring_width": float(ring_width), "kernel": kernel.kind,
            "seed": seed, "r_lo": float(r_lo), "r_hi": float(r_hi),
        },
    }


def holder_probe(cloud, values: np.ndarray, eps: float, label_pos: int = 0,
                 min_count: int = 5, max_radius: float | None = None) -> dict:
    """Growth of max |u - g(z)| on dyadic balls around a labeled node.

    Radii double from 4 eps up to a quarter of the distance to the
    nearest other labeled node (or to the farthest node when the label
    is alone). Shells with fewer than min_count nodes are dropped with a
    warning; the log-log slope over the surviving radii estimates the
    growth exponent.
    """
    vals = np.asarray(values, dtype=np.float64)
    if vals.shape != (cloud.n,):
        raise DataError("values must have one entry per node")
    if not 0 <= label_pos < cloud.label_indices.size:
        raise DataError(f"label_pos {label_pos} out of range")
    z = int(cloud.label_indices[label_pos])
    gz = float(cloud.label_values[label_pos])
    dist = np.sqrt(((cloud.points - cloud.points[z]) ** 2).sum(axis=1))
    if max_radius is None:
        others = np.delete(cloud.label_indices, label_pos)
        reach = float(dist[others].min()) if others.size else float(dist.max())
        max_radius = reach / 4.0
    radii = []
    r = 4.0 * eps
    while r <= max_radius:
        radii.append(r)
        r *= 2.0
    if not radii:
        raise DataError(
            f"no dyadic radii in [4*eps, {max_radius}]; eps too large"
        )
    kept_r, kept_m = [], []
    for r in radii:
        sel = dist <= r
        count = int(sel.sum()) - 1
        if count < min_count:
            warnings.warn(f"ball of radius {r:.4g} holds {count} nodes, "
                          "dropping it")
            continue
        kept_r.append(r)
        kept_m.append(float(np.abs(vals[sel] - gz).max()))
    if not kept_r:
        raise DataError("every dyadic ball is under-populated")
    positive = [i for i, m in enumerate(kept_m) if m > 0.0]
    if len(positive) >= 2:
        lr = np.log([kept_r[i] for i in positive])
        lm = np.log([kept_m[i] for i in positive])
        slope = float(np.polyfit(lr, lm, 1)[0])
    else:
        slope = None
    return {
        "check": "holder",
        "label_node": z,
        "label_value": gz,
        "radii": kept_r,
        "m_values": kept_m,
        "slope": slope,
        "degenerate": all(m == 0.0 for m in kept_m),
        "eps": float(eps),
        "max_radius": float(max_radius),
    }


def wnll_degeneracy_probe(n_schedule=(5_000, 20_000), d: int = 2,
                          seed: int = 0, alpha: float = 2.0,
                          zeta=("scaled", 50.0), r0: float = 1.0,
                          methods=DEFAULT_METHODS,
                          tol: float = 1e-10) -> dict:
    """Spread of the two-point solution as the sample grows.

    A sharp method keeps the unlabeled spread stable under refinement;
    a degenerate one lets it collapse. Reports the per-method spread at
    each n and the shrink factor first/last.
    """
    if len(n_schedule) < 2:
        raise ConfigError("need at least two sample sizes")
    rows = []
    for n in n_schedule:
        out = run_two_point_box(n=int(n), d=d, seed=seed, alpha=alpha,
                                zeta=zeta, r0=r0, methods=methods, tol=tol)
        rows.append({
            "n": int(n),
            "n_nodes": out.report["params"]["n_nodes"],
            "eps": out.report["params"]["eps"],
            "spread": {m: out.report["metrics"][m]["std"] for m in methods},
        })
    shrink = {}
    for m in methods:
        first, last = rows[0]["spread"][m], rows[-1]["spread"][m]
        shrink[m] = float(first / last) if last > 0 else float("inf")
    return {
        "check": "wnll_degeneracy",
        "rows": rows,
        "shrink": shrink,
        "params": {
            "d": int(d), "alpha": float(alpha), "r0": float(r0),
            "seed": seed, "methods": list(methods),
            "n_schedule": [int(n) for n in n_schedule],
        },
    }
