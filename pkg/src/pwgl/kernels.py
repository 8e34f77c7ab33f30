"""Kernel profiles, rescaled kernels, moment integrals, and label weights.

A kernel profile eta lives on rescaled distance t = |x - y| / eps and
vanishes for t > 2. The weight profile gamma(dist) = 1 + (r0 / dist)^alpha
amplifies graph edges near labeled nodes; it is truncated at a level zeta
either by clipping (min) or by a two-region rule that is exactly zeta
inside a radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError, DataError

MOMENT_PANELS = 10_000          # Simpson panels per smooth piece
MOMENT_AGREEMENT_RTOL = 1e-10   # required match of the two moment routes


@dataclass(frozen=True)
class KernelProfile:
    """Radial kernel profile on [0, 2].

    kind           : "indicator", "gaussian", or "custom"
    sigma_factor   : gaussian width as a fraction of eps (sigma / eps)
    normalize      : scale so eta(1) >= 1, putting the profile in the
                     admissible class for the theory probes; experiment runs
                     leave the raw profile untouched
    custom_fn      : vectorized callable t -> eta(t) for kind "custom",
                     hard-zeroed beyond t = 2 and checked nonincreasing on a
                     grid at construction
    """

    kind: str = "gaussian"
    sigma_factor: float = 0.5
    normalize: bool = False
    custom_fn: object = None

    def __post_init__(self):
        if self.kind not in ("indicator", "gaussian", "custom"):
            raise ConfigError(f"unknown kernel kind: {self.kind!r}")
        if self.kind == "gaussian" and not self.sigma_factor > 0:
            raise ConfigError("sigma_factor must be > 0")
        if self.kind == "custom":
            if not callable(self.custom_fn):
                raise ConfigError("custom kernel requires a callable")
            t = np.linspace(0.0, 2.0, 401)
            v = self._raw(t)
            if np.any(np.diff(v) > 1e-12):
                raise ConfigError("custom kernel must be nonincreasing on [0, 2]")
            if np.any(v < 0):
                raise ConfigError("custom kernel must be nonnegative")

    @property
    def support_factor(self) -> float:
        """Largest rescaled distance with nonzero kernel value."""
        return 1.0 if self.kind == "indicator" else 2.0

    def breakpoints(self) -> tuple:
        """Radii in (0, 2] where the profile may jump; quadrature split points."""
        if self.kind == "indicator":
            return (1.0, 2.0)
        return (2.0,)

    def _raw(self, t: np.ndarray) -> np.ndarray:
        if self.kind == "indicator":
            return (t <= 1.0).astype(np.float64)
        if self.kind == "gaussian":
            s = self.sigma_factor
            return np.where(t <= 2.0, np.exp(-(t * t) / (2.0 * s * s)), 0.0)
        v = np.asarray(self.custom_fn(t), dtype=np.float64)
        return np.where(t <= 2.0, v, 0.0)

    def _norm_factor(self) -> float:
        if not self.normalize:
            return 1.0
        at_one = float(self._raw(np.asarray([1.0]))[0])
        if at_one <= 0:
            raise ConfigError("cannot normalize a kernel that vanishes at t = 1")
        return max(1.0, 1.0 / at_one)


def flat_profile() -> KernelProfile:
    """Constant profile eta = 1 on [0, 2]; a minimal member of the
    admissible class with the smallest relative sampling variance, used by
    the operator-consistency and barrier probes."""
    return KernelProfile(kind="custom", custom_fn=lambda t: np.ones_like(t))


def eta(profile: KernelProfile, t) -> np.ndarray | float:
    """Profile value at rescaled distance t (scalar or array, t >= 0)."""
    arr = np.asarray(t, dtype=np.float64)
    if np.any(arr < 0):
        raise DataError("rescaled distance must be >= 0")
    out = profile._raw(arr) * profile._norm_factor()
    return float(out) if np.isscalar(t) or arr.ndim == 0 else out


def eta_eps(profile: KernelProfile, displacement, eps: float):
    """Rescaled kernel eps^-d * eta(|displacement| / eps).

    `displacement` is (d,) for one pair or (m, d) for a batch.
    """
    if not eps > 0:
        raise ConfigError(f"eps must be > 0, got {eps}")
    disp = np.asarray(displacement, dtype=np.float64)
    single = disp.ndim == 1
    d = disp.shape[-1]
    r = np.sqrt((disp * disp).sum(axis=-1))
    out = eta(profile, np.atleast_1d(r) / eps) * eps ** (-d)
    return float(out[0]) if single else out


def _simpson(fvals: np.ndarray, h: float) -> float:
    """Composite Simpson on equally spaced samples (odd count)."""
    w = np.ones(fvals.shape[-1])
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float(np.dot(fvals, w) * h / 3.0)


def _piecewise_simpson(f, splits, panels=MOMENT_PANELS) -> float:
    total = 0.0
    for a, b in zip(splits[:-1], splits[1:]):
        if b <= a:
            continue
        m = panels + (panels % 2)
        x = np.linspace(a, b, m + 1)
        # evaluate endpoints just inside the piece: splits sit on profile
        # jumps and the integrand there must take its one-sided limit
        x[0] += (b - a) * 1e-9
        x[-1] -= (b - a) * 1e-9
        total += _simpson(f(x), (b - a) / m)
    return total


def _sphere_area(m: int) -> float:
    """Surface area of the unit sphere S^m embedded in R^(m+1)."""
    return 2.0 * math.pi ** ((m + 1) / 2.0) / math.gamma((m + 1) / 2.0)


@dataclass(frozen=True)
class KernelMoments:
    sigma_eta: float   # integral of eta(|z|) z_1^2 over the support ball
    theta_eta: float   # (1/d) integral of eta(|z|) |z|^2
    dim: int


@lru_cache(maxsize=32)
def kernel_moments(profile: KernelProfile, d: int) -> KernelMoments:
    """Second moments of the rescaled kernel in dimension d.

    theta is computed by a radial quadrature, sigma by an independent
    slice decomposition along the z_1 axis; radial symmetry forces them
    equal, and the agreement is asserted to 1e-10 relative. Both use
    composite Simpson with breakpoint-aware splits so discontinuous
    profiles keep full accuracy.
    """
    if d < 1:
        raise ConfigError(f"dimension must be >= 1, got {d}")
    ev = lambda t: profile._raw(t) * profile._norm_factor()
    radial_splits = (0.0,) + profile.breakpoints()

    theta = (_sphere_area(d - 1) / d) * _piecewise_simpson(
        lambda r: ev(r) * r ** (d + 1), radial_splits
    )

    if d == 1:
        sigma = 2.0 * _piecewise_simpson(lambda r: ev(r) * r * r, radial_splits)
    else:
        sigma = 2.0 * _slice_moment(ev, radial_splits, d)

    scale = max(abs(theta), abs(sigma), 1e-300)
    if abs(theta - sigma) > MOMENT_AGREEMENT_RTOL * scale:
        raise DataError(
            f"kernel moment routes disagree: sigma={sigma!r} theta={theta!r}"
        )
    return KernelMoments(sigma_eta=sigma, theta_eta=theta, dim=d)


def _slice_moment(ev, radial_splits, d: int, inner_panels: int = 512) -> float:
    """integral over z_1 in [0, 2] of z_1^2 * G(z_1), where G is the mass of
    eta on the slice {z_1 = const}, reduced to a radial integral in d-1
    dimensions. Inner integrals split at s = sqrt(b^2 - z_1^2) for each
    profile breakpoint b, where the slice crosses a jump."""
    area = _sphere_area(d - 2) if d > 2 else 2.0
    bounds = radial_splits  # includes 0 and the outer support radius 2
    ref = np.linspace(0.0, 1.0, inner_panels + 1)
    w = np.ones(inner_panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0

    def g_slice(z: np.ndarray) -> np.ndarray:
        g = np.zeros_like(z)
        z2 = z * z
        for b_lo, b_hi in zip(bounds[:-1], bounds[1:]):
            lo = np.sqrt(np.maximum(b_lo * b_lo - z2, 0.0))
            hi = np.sqrt(np.maximum(b_hi * b_hi - z2, 0.0))
            h = (hi - lo) / inner_panels
            s = lo[:, None] + (hi - lo)[:, None] * ref[None, :]
            r = np.sqrt(z2[:, None] + s * s)
            # the piece spans radii [b_lo, b_hi]; profile jumps sit exactly
            # on the split radii, so evaluate one-sided limits from inside
            vals = ev(np.clip(r, b_lo + 1e-9, b_hi - 1e-9))
            if d > 2:
                vals = vals * s ** (d - 2)
            g += (vals @ w) * h / 3.0
        return z2 * g * area

    # Outer integration splits at the breakpoints, where G has kinks. On
    # the piece ending at radius B the slice width sqrt(B^2 - z^2) has a
    # square-root singularity in its derivatives at z = B; substituting
    # z = B sin(u) absorbs it and restores spectral Simpson accuracy.
    total = 0.0
    panels = 2000
    for b_lo, b_hi in zip(bounds[:-1], bounds[1:]):
        if b_hi <= b_lo:
            continue
        u0 = math.asin(min(b_lo / b_hi, 1.0))
        u = np.linspace(u0, math.pi / 2.0, panels + 1)
        z = b_hi * np.sin(u)
        f = g_slice(z) * b_hi * np.cos(u)
        total += _simpson(f, (math.pi / 2.0 - u0) / panels)
    return total


@dataclass(frozen=True)
class WeightProfile:
    """Singular label weight gamma and its truncation.

    alpha            : singularity exponent (>= 0; 0 means constant weight 2)
    r0               : length scale of the singular term
    zeta             : truncation level (> 1; may be inf only for the
                       two-region variant with region_radius 0, where the
                       infinite weight sits exactly on label nodes)
    variant          : "truncated" (min with zeta) or "two_region"
                       (exactly zeta inside region_radius)
    region_radius    : radius of the constant region for "two_region"
    global_formula   : apply the formula at every distance; when False the
                       weight is max(1, formula) within label_separation / 4
                       and exactly 1 beyond
    label_separation : minimal label distance R, required when
                       global_formula is False
    custom_gamma     : optional vectorized callable dist -> gamma replacing
                       the formula (used by the radial-profile oracle, e.g.
                       a pure power law dist^-alpha)
    """

    alpha: float
    zeta: float
    r0: float = 1.0
    variant: str = "truncated"
    region_radius: float = 0.0
    global_formula: bool = True
    label_separation: float | None = None
    custom_gamma: object = None

    def __post_init__(self):
        if self.alpha < 0:
            raise ConfigError("alpha must be >= 0")
        if not self.r0 > 0:
            raise ConfigError("r0 must be > 0")
        if self.variant not in ("truncated", "two_region"):
            raise ConfigError(f"unknown weight variant: {self.variant!r}")
        if not self.zeta > 1:
            raise ConfigError(f"zeta must exceed 1, got {self.zeta}")
        if math.isinf(self.zeta) and not (
            self.variant == "two_region" and self.region_radius == 0.0
        ):
            raise ConfigError(
                "zeta = inf requires the two_region variant with radius 0"
            )
        if self.region_radius < 0:
            raise ConfigError("region_radius must be >= 0")
        if not self.global_formula and self.label_separation is None:
            raise ConfigError(
                "global_formula=False requires label_separation"
            )


def gamma(profile: WeightProfile, dist) -> np.ndarray | float:
    """Untruncated weight at distance-to-labels `dist` (scalar or array)."""
    arr = np.asarray(dist, dtype=np.float64)
    if np.any(arr < 0):
        raise DataError("distance must be >= 0")
    a = np.atleast_1d(arr)
    if profile.custom_gamma is not None:
        g = np.asarray(profile.custom_gamma(a), dtype=np.float64)
    elif profile.alpha == 0.0:
        g = np.full_like(a, 2.0)
    else:
        # inf at dist 0 (or overflow at tiny dist) is meaningful; the
        # truncation clips it
        with np.errstate(divide="ignore", over="ignore"):
            g = 1.0 + (profile.r0 / a) ** profile.alpha
    if not profile.global_formula:
        window = a <= profile.label_separation / 4.0
        g = np.where(window, np.maximum(g, 1.0), 1.0)
    if np.isscalar(dist) or arr.ndim == 0:
        return float(g[0])
    return g.reshape(arr.shape)


def gamma_zeta(profile: WeightProfile, dist) -> np.ndarray | float:
    """Truncated weight: min(gamma, zeta), or the two-region rule."""
    arr = np.asarray(dist, dtype=np.float64)
    g = np.atleast_1d(np.asarray(gamma(profile, arr), dtype=np.float64))
    a = np.atleast_1d(arr)
    if profile.variant == "truncated":
        out = np.minimum(g, profile.zeta)
    else:
        out = np.where(a <= profile.region_radius, profile.zeta, g)
    if np.isscalar(dist) or arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def crossover_radius(profile: WeightProfile) -> float:
    """Distance where the formula weight reaches zeta: r0 (zeta-1)^(-1/alpha)."""
    if profile.alpha <= 0:
        raise ConfigError("crossover radius requires alpha > 0")
    if math.isinf(profile.zeta):
        return 0.0
    return profile.r0 * (profile.zeta - 1.0) ** (-1.0 / profile.alpha)


def resolve_zeta(zeta_spec, n: int, eps: float) -> float:
    """Turn a zeta config value into a number.

    Accepts a plain number, or ("scaled", c) / {"scaled": c} meaning
    c * n * eps^2.
    """
    if isinstance(zeta_spec, dict):
        if set(zeta_spec) != {"scaled"}:
            raise ConfigError(f"bad zeta spec: {zeta_spec!r}")
        return float(zeta_spec["scaled"]) * n * eps * eps
    if isinstance(zeta_spec, tuple):
        if len(zeta_spec) != 2 or zeta_spec[0] != "scaled":
            raise ConfigError(f"bad zeta spec: {zeta_spec!r}")
        return float(zeta_spec[1]) * n * eps * eps
    return float(zeta_spec)


def parse_zeta(text: str):
    """Parse a zeta config string: a number, "inf", or "scaled:<c>"."""
    t = text.strip()
    if t.startswith("scaled:"):
        try:
            return ("scaled", float(t.split(":", 1)[1]))
        except ValueError:
            raise ConfigError(f"bad zeta value: {text!r}") from None
    try:
        return float(t)
    except ValueError:
        raise ConfigError(f"bad zeta value: {text!r}") from None


def parse_variant(text: str):
    """Parse a gamma_variant string: "truncated" or "two_region:<r>"."""
    t = text.strip()
    if t == "truncated":
        return ("truncated", 0.0)
    if t.startswith("two_region:"):
        try:
            return ("two_region", float(t.split(":", 1)[1]))
        except ValueError:
            raise ConfigError(f"bad gamma_variant: {text!r}") from None
    raise ConfigError(f"bad gamma_variant: {text!r}")
