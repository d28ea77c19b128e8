"""Normalized scattering intensities I(q) = scale * P(q) + background.

Every particle form factor satisfies P(0) = 1. Orientation averages of
anisotropic particles use Gauss-Legendre rules on [0, pi/2] with weight
sin(alpha), so isotropic integrands reproduce exactly. The base order is 76;
at large q * size the integrand oscillates faster than a fixed rule can
resolve, so each q point gets the smallest multiple of the base order with
at least 0.9 nodes per radian of phase q * size.
"""
from __future__ import annotations

import dataclasses
from functools import lru_cache

import numpy as np
from numba import njit
from scipy.special import roots_legendre

from ..special import j1_over_x, j1_over_x_scalar, lower_incomplete_gamma
from .dispersion import apply_polydispersity
from .models import (
    CylinderParams,
    DABParams,
    EllipsoidParams,
    FuzzySphereParams,
    HollowCylinderParams,
    MixtureParams,
    PolymerEVParams,
    ShapeClass,
    SphereParams,
    TeubnerStreyParams,
)

ORIENTATION_POINTS = 76
# nodes per radian of q * extent; 0.75 leaves ~1e-5 errors at the largest sizes
NODES_PER_RADIAN = 0.9


@lru_cache(maxsize=None)
def orientation_rule(n: int = ORIENTATION_POINTS) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes on [0, pi/2] and weights including sin(alpha)."""
    z, w = roots_legendre(n)
    alpha = 0.25 * np.pi * (z + 1.0)
    weights = 0.25 * np.pi * w * np.sin(alpha)
    alpha.setflags(write=False)
    weights.setflags(write=False)
    return alpha, weights


def orientation_orders(q, extent: float, base: int = ORIENTATION_POINTS) -> np.ndarray:
    """Per-q quadrature order: the smallest multiple m * base with
    m * ORIENTATION_POINTS >= NODES_PER_RADIAN * q * extent.

    Doubling ``base`` doubles every order.
    """
    if base < 1:
        raise ValueError(f"orientation order must be positive, got {base}")
    phase = np.asarray(q, dtype=float) * extent * NODES_PER_RADIAN / ORIENTATION_POINTS
    m = np.maximum(np.ceil(phase - 1e-12), 1.0).astype(np.int64)
    return base * m


def _orientation_average(kernel, q, extent, base, *args):
    orders = orientation_orders(q, extent, base)
    out = np.empty(q.shape[0])
    for n in np.unique(orders):
        sel = np.flatnonzero(orders == n)
        alpha, w = orientation_rule(int(n))
        out[sel] = kernel(np.ascontiguousarray(q[sel]), *args, alpha, w)
    return out


# Taylor coefficients of the sphere amplitude: 6 (m + 1) (-1)^m / (2m + 3)!
_SPHERE_SERIES = np.array([1.0, -1 / 10, 1 / 280, -1 / 15120, 1 / 1330560, -1 / 172972800])
# below this argument the closed form loses digits to cancellation
_SPHERE_SERIES_CUTOFF = 0.1


def sphere_amplitude(x):
    """3 (sin x - x cos x) / x^3, equal to 1 at x = 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _SPHERE_SERIES_CUTOFF
    xs = np.where(small, 1.0, x)
    full = 3.0 * (np.sin(xs) - xs * np.cos(xs)) / xs**3
    series = np.polynomial.polynomial.polyval(x * x, _SPHERE_SERIES)
    return np.where(small, series, full)


def intensity_sphere(q, p: SphereParams):
    q = np.asarray(q, dtype=float)
    return p.scale * sphere_amplitude(q * p.radius) ** 2 + p.background


def intensity_fuzzy_sphere(q, p: FuzzySphereParams):
    q = np.asarray(q, dtype=float)
    amp = sphere_amplitude(q * p.radius) * np.exp(-0.5 * (p.fuzziness * q) ** 2)
    return p.scale * amp**2 + p.background


@njit(cache=True, nogil=True)
def _sphere_amp_scalar(x):
    if abs(x) < 0.1:
        x2 = x * x
        acc = 0.0
        for k in range(_SPHERE_SERIES.shape[0] - 1, -1, -1):
            acc = acc * x2 + _SPHERE_SERIES[k]
        return acc
    return 3.0 * (np.sin(x) - x * np.cos(x)) / (x * x * x)


@njit(cache=True, nogil=True)
def _ellipsoid_average(q, r_eq, r_pol, alpha, w):
    n_a = alpha.shape[0]
    r = np.empty(n_a)
    for j in range(n_a):
        r[j] = np.sqrt((r_eq * np.sin(alpha[j])) ** 2 + (r_pol * np.cos(alpha[j])) ** 2)
    out = np.empty(q.shape[0])
    for i in range(q.shape[0]):
        acc = 0.0
        for j in range(n_a):
            a = _sphere_amp_scalar(q[i] * r[j])
            acc += w[j] * a * a
        out[i] = acc
    return out


@njit(cache=True, nogil=True)
def _sinc_scalar(x):
    if abs(x) < 1e-8:
        return 1.0 - x * x / 6.0
    return np.sin(x) / x


@njit(cache=True, nogil=True)
def _cylinder_average(q, radius, length, gamma, alpha, w):
    # gamma = core/outer radius ratio; 0 gives the solid cylinder
    n_a = alpha.shape[0]
    g2 = gamma * gamma
    norm = 1.0 / (1.0 - g2)
    rs = radius * np.sin(alpha)
    hc = 0.5 * length * np.cos(alpha)
    out = np.empty(q.shape[0])
    for i in range(q.shape[0]):
        acc = 0.0
        for j in range(n_a):
            u = q[i] * rs[j]
            if gamma > 0.0:
                rad = (j1_over_x_scalar(u) - g2 * j1_over_x_scalar(gamma * u)) * norm
            else:
                rad = j1_over_x_scalar(u)
            ax = _sinc_scalar(q[i] * hc[j])
            amp = rad * ax
            acc += w[j] * amp * amp
        out[i] = acc
    return out


def _as_grid(q):
    q = np.asarray(q, dtype=float)
    return np.ascontiguousarray(q.ravel()), q.shape


def intensity_ellipsoid(q, p: EllipsoidParams, n_orient: int = ORIENTATION_POINTS):
    qf, shape = _as_grid(q)
    r_eq, r_pol = p.radius_equatorial, p.aspect * p.radius_equatorial
    avg = _orientation_average(_ellipsoid_average, qf, max(r_eq, r_pol), n_orient, r_eq, r_pol)
    return p.scale * avg.reshape(shape) + p.background


def _cylinder_extent(p) -> float:
    return p.radius + 0.5 * p.length


def intensity_cylinder(q, p: CylinderParams, n_orient: int = ORIENTATION_POINTS):
    qf, shape = _as_grid(q)
    avg = _orientation_average(_cylinder_average, qf, _cylinder_extent(p), n_orient, p.radius,
                               p.length, 0.0)
    return p.scale * avg.reshape(shape) + p.background


def hollow_radial_amplitude(u, gamma: float):
    """Normalized radial amplitude of a cylindrical shell, 1 at u = 0."""
    u = np.asarray(u, dtype=float)
    g2 = gamma * gamma
    return (j1_over_x(u) - g2 * j1_over_x(gamma * u)) / (1.0 - g2)


def intensity_hollow_cylinder(q, p: HollowCylinderParams, n_orient: int = ORIENTATION_POINTS):
    qf, shape = _as_grid(q)
    avg = _orientation_average(_cylinder_average, qf, _cylinder_extent(p), n_orient, p.radius,
                               p.length, p.core_ratio)
    return p.scale * avg.reshape(shape) + p.background


def intensity_dab(q, p: DABParams):
    q = np.asarray(q, dtype=float)
    xi = p.xi
    return p.scale * 8.0 * np.pi * xi**3 / (1.0 + (q * xi) ** 2) ** 2 + p.background


def teubner_strey_coefficients(d: float, xi: float) -> tuple[float, float, float]:
    """(a2, c1, c2) of the denominator a2 + c1 q^2 + c2 q^4, with c2 = 1."""
    k2 = (2.0 * np.pi / d) ** 2
    inv_xi2 = 1.0 / xi**2
    return (k2 + inv_xi2) ** 2, -2.0 * k2 + 2.0 * inv_xi2, 1.0


def intensity_teubner_strey(q, p: TeubnerStreyParams):
    q = np.asarray(q, dtype=float)
    a2, c1, c2 = teubner_strey_coefficients(p.d, p.xi)
    q2 = q * q
    denom = a2 + c1 * q2 + c2 * q2 * q2
    if np.any(denom <= 0):
        raise ValueError(f"Teubner-Strey denominator non-positive for d={p.d}, xi={p.xi}")
    return p.scale / denom + p.background


_PEV_SERIES_CUTOFF = 0.5


def polymer_ev_form(q, rg: float, nu: float):
    """Normalized excluded-volume chain form factor (1 at q = 0)."""
    q = np.asarray(q, dtype=float)
    u = q * q * rg * rg * (2 * nu + 1) * (2 * nu + 2) / 6.0
    a1, a2 = 1.0 / (2 * nu), 1.0 / nu
    out = np.empty_like(u)

    small = u < _PEV_SERIES_CUTOFF
    if np.any(small):
        us = u[small]
        # termwise expansion of the gamma form; avoids cancellation near U = 0
        acc = np.zeros_like(us)
        term = np.ones_like(us)
        for n in range(40):
            acc += term * (1.0 / (a1 + n) - 1.0 / (a2 + n))
            term = term * (-us) / (n + 1)
        out[small] = acc / nu

    big = ~small
    if np.any(big):
        ub = u[big]
        g1 = lower_incomplete_gamma(a1, ub)
        g2 = lower_incomplete_gamma(a2, ub)
        out[big] = (g1 / ub**a1 - g2 / ub**a2) / nu
    return out


def intensity_polymer_ev(q, p: PolymerEVParams):
    return p.scale * polymer_ev_form(q, p.rg, p.nu) + p.background


def intensity_mixture(q, p: MixtureParams):
    """Weighted sum of a (polydisperse) sphere and cylinder; one background."""
    q = np.asarray(q, dtype=float)
    sph = model_intensity(ShapeClass.SPHERE, q, _strip(p.sphere))
    cyl = model_intensity(ShapeClass.CYLINDER_LONG, q, _strip(p.cylinder))
    return p.scale * (p.weight * sph + (1.0 - p.weight) * cyl) + p.background


def _strip(p):
    return dataclasses.replace(p, scale=1.0, background=0.0)


_KERNELS = {
    ShapeClass.SPHERE: intensity_sphere,
    ShapeClass.FUZZY_SPHERE: intensity_fuzzy_sphere,
    ShapeClass.ELLIPSOID_PROLATE: intensity_ellipsoid,
    ShapeClass.ELLIPSOID_OBLATE: intensity_ellipsoid,
    ShapeClass.CYLINDER_LONG: intensity_cylinder,
    ShapeClass.CYLINDER_HOLLOW: intensity_hollow_cylinder,
    ShapeClass.CYLINDER_LONG_HOLLOW: intensity_hollow_cylinder,
    ShapeClass.DISK: intensity_cylinder,
    ShapeClass.DAB: intensity_dab,
    ShapeClass.POLYMER_EXCLUDED_VOLUME: intensity_polymer_ev,
    ShapeClass.TEUBNER_STREY: intensity_teubner_strey,
    ShapeClass.SPHERE_CYLINDER_MIX: intensity_mixture,
}


def kernel_for(shape: ShapeClass):
    return _KERNELS[ShapeClass(shape)]


def model_intensity(shape: ShapeClass, q, p) -> np.ndarray:
    """Noiseless intensity of ``shape`` including polydispersity when ``p.pd > 0``."""
    kernel = kernel_for(shape)
    q = np.asarray(q, dtype=float)
    pd = getattr(p, "pd", 0.0)
    if pd > 0.0:
        return apply_polydispersity(kernel, q, p, pd)
    return kernel(q, p)
