"""Size polydispersity averaging and photon-counting noise."""
from __future__ import annotations

import dataclasses
import functools
import warnings
from typing import Callable

import numpy as np

PD_POINTS = 35
PD_WIDTH = 3.0


@functools.lru_cache(maxsize=8)
def _legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def with_dispersed(p, value: float):
    """Copy of ``p`` with its dispersed parameter set to ``value``.

    Hollow cylinders keep their core-to-shell ratio fixed.
    """
    name = p.dispersed
    changes = {name: value, "pd": 0.0}
    if hasattr(p, "radius_core"):
        changes["radius_core"] = p.radius_core * value / p.radius
    return dataclasses.replace(p, **changes)


def dispersion_points(mean: float, pd: float, n_points: int = PD_POINTS,
                      width: float = PD_WIDTH) -> tuple[np.ndarray, np.ndarray]:
    """Abscissae and normalized Gaussian weights over ``mean +- width*sigma``.

    Nodes are Gauss-Legendre points of the window; each weight is the
    Legendre weight times the Gaussian density, normalized to sum one.
    """
    sigma = pd * mean
    lo, hi = mean - width * sigma, mean + width * sigma
    if lo <= 0.0:
        warnings.warn(
            f"polydispersity window reaches {lo:.3g} <= 0; truncating at {1e-3 * mean:.3g}",
            RuntimeWarning,
            stacklevel=3,
        )
        lo = 1e-3 * mean
    t, gw = _legendre(n_points)
    x = 0.5 * (hi + lo) + 0.5 * (hi - lo) * t
    w = gw * np.exp(-0.5 * ((x - mean) / sigma) ** 2)
    return x, w / w.sum()


def apply_polydispersity(model_eval: Callable, q: np.ndarray, p, pd: float,
                         n_points: int = PD_POINTS) -> np.ndarray:
    """Gaussian average of ``model_eval(q, p)`` over the dispersed parameter of ``p``.

    ``pd`` is the relative width sigma/mean. The background of ``p`` is added
    once, after averaging.
    """
    if pd < 0:
        raise ValueError(f"pd must be >= 0, got {pd}")
    bare = dataclasses.replace(p, background=0.0)
    if pd == 0.0:
        return model_eval(q, dataclasses.replace(bare, pd=0.0)) + p.background
    mean = getattr(p, p.dispersed)
    xs, ws = dispersion_points(mean, pd, n_points)
    total = np.zeros_like(np.asarray(q, dtype=float))
    for x, w in zip(xs, ws):
        total += w * model_eval(q, with_dispersed(bare, float(x)))
    return total + p.background


def apply_poisson_noise(intensity: np.ndarray, exposure: float,
                        rng: np.random.Generator) -> np.ndarray:
    """Replace each point by ``Poisson(I * exposure) / exposure``.

    ``exposure=np.inf`` returns the noiseless curve unchanged.
    """
    intensity = np.asarray(intensity, dtype=float)
    if np.any(intensity < 0) or not np.all(np.isfinite(intensity)):
        raise ValueError("Poisson noise needs finite, non-negative intensities")
    if not exposure > 0:
        raise ValueError(f"exposure must be > 0, got {exposure}")
    if np.isinf(exposure):
        return intensity.copy()
    return rng.poisson(intensity * exposure) / exposure
