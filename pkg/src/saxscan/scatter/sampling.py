"""Randomized parameter draws and labeled dataset generation.

Each curve draws from its own generator seeded by ``(seed, class code,
index)``, so serial and parallel generation produce identical arrays.
"""
from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .dispersion import apply_poisson_noise
from .formfactors import model_intensity
from .models import (
    CLASS_NAMES,
    SHAPE_CLASSES,
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
    make_qgrid,
    validate_qgrid,
)

# relative background level, as a fraction of the noiseless curve maximum
BACKGROUND_RANGE = (1e-9, 1e-8)
# expected photon counts at the curve maximum
COUNTS_RANGE = (1e8, 1e10)
PD_RANGE = (0.0, 0.2)


class SimulationError(RuntimeError):
    pass


def _logu(rng: np.random.Generator, lo: float, hi: float) -> float:
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))


def _pd(rng) -> float:
    return float(rng.uniform(*PD_RANGE))


def _sphere(rng) -> SphereParams:
    return SphereParams(radius=_logu(rng, 2, 100), pd=_pd(rng))


def _cylinder_long(rng) -> CylinderParams:
    r = _logu(rng, 2, 20)
    return CylinderParams(radius=r, length=r * rng.uniform(10, 100), pd=_pd(rng))


def _hollow(rng, r_range, aspect_range) -> HollowCylinderParams:
    r = _logu(rng, *r_range)
    length = r * rng.uniform(*aspect_range)
    gamma = rng.uniform(0.3, 0.8)
    return HollowCylinderParams(radius=r, radius_core=gamma * r, length=length, pd=_pd(rng))


def _teubner_strey(rng) -> TeubnerStreyParams:
    d = _logu(rng, 10, 100)
    return TeubnerStreyParams(d=d, xi=d * rng.uniform(0.2, 2.0))


def _draw_shape(shape: ShapeClass, rng: np.random.Generator):
    if shape is ShapeClass.SPHERE:
        return _sphere(rng)
    if shape is ShapeClass.FUZZY_SPHERE:
        r = _logu(rng, 2, 100)
        return FuzzySphereParams(radius=r, fuzziness=r * rng.uniform(0.05, 0.3), pd=_pd(rng))
    if shape is ShapeClass.ELLIPSOID_PROLATE:
        return EllipsoidParams(_logu(rng, 2, 100), rng.uniform(1.5, 5.0), pd=_pd(rng))
    if shape is ShapeClass.ELLIPSOID_OBLATE:
        return EllipsoidParams(_logu(rng, 2, 100), rng.uniform(0.2, 0.67), pd=_pd(rng))
    if shape is ShapeClass.CYLINDER_LONG:
        return _cylinder_long(rng)
    if shape is ShapeClass.CYLINDER_HOLLOW:
        return _hollow(rng, (5, 50), (1, 5))
    if shape is ShapeClass.CYLINDER_LONG_HOLLOW:
        return _hollow(rng, (2, 20), (10, 100))
    if shape is ShapeClass.DISK:
        r = _logu(rng, 20, 200)
        return CylinderParams(radius=r, length=r * rng.uniform(0.02, 0.1), pd=_pd(rng))
    if shape is ShapeClass.DAB:
        return DABParams(xi=_logu(rng, 5, 100))
    if shape is ShapeClass.POLYMER_EXCLUDED_VOLUME:
        return PolymerEVParams(rg=_logu(rng, 2, 50), nu=rng.uniform(0.33, 0.60))
    if shape is ShapeClass.TEUBNER_STREY:
        return _teubner_strey(rng)
    if shape is ShapeClass.SPHERE_CYLINDER_MIX:
        return MixtureParams(sphere=_sphere(rng), cylinder=_cylinder_long(rng),
                             weight=rng.uniform(0.1, 0.9))
    raise ValueError(f"unknown shape class {shape!r}")


def _forward_scale(p) -> float:
    """Scale that puts the particle/structure term at 1 for q -> 0."""
    if isinstance(p, DABParams):
        return 1.0 / (8.0 * np.pi * p.xi**3)
    if isinstance(p, TeubnerStreyParams):
        from .formfactors import teubner_strey_coefficients

        return teubner_strey_coefficients(p.d, p.xi)[0]
    return 1.0


def sample_params(shape: ShapeClass, rng: np.random.Generator):
    """Draw random physical parameters for ``shape``.

    The returned record has its forward intensity normalized to one and zero
    background; the background level is chosen in :func:`simulate_curve`
    once the curve maximum is known.
    """
    shape = ShapeClass(shape)
    p = _draw_shape(shape, rng)
    return dataclasses.replace(p, scale=_forward_scale(p), background=0.0)


@dataclass
class Curve:
    q: np.ndarray
    intensity: np.ndarray
    label: ShapeClass | None = None
    params: object | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.intensity = np.asarray(self.intensity, dtype=float)
        if self.intensity.shape != np.shape(self.q):
            raise ValueError(
                f"curve has {self.intensity.size} points but q grid has {np.size(self.q)}"
            )
        if not np.all(np.isfinite(self.intensity)) or np.any(self.intensity < 0):
            raise ValueError("curve intensities must be finite and >= 0")


@dataclass
class Dataset:
    """Curves stored row-wise on a shared q grid.

    ``labels`` holds integer class codes, or is ``None`` for unlabeled data.
    """

    q: np.ndarray
    intensities: np.ndarray
    labels: np.ndarray | None = None
    params: list = field(default_factory=list)
    meta: list = field(default_factory=list)
    rng_seed: int | None = None

    def __post_init__(self):
        self.q = validate_qgrid(self.q)
        self.intensities = np.atleast_2d(np.asarray(self.intensities, dtype=float))
        if self.intensities.shape[1] != self.q.size:
            raise ValueError(
                f"intensity rows have {self.intensities.shape[1]} points, q grid has {self.q.size}"
            )
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (len(self.intensities),):
                raise ValueError("one label per curve required")

    def __len__(self) -> int:
        return len(self.intensities)

    @property
    def labeled(self) -> bool:
        return self.labels is not None

    @property
    def class_counts(self) -> dict[str, int]:
        if self.labels is None:
            return {}
        codes, counts = np.unique(self.labels, return_counts=True)
        return {CLASS_NAMES[c]: int(n) for c, n in zip(codes, counts)}

    def curves(self) -> Iterator[Curve]:
        for i, row in enumerate(self.intensities):
            label = None if self.labels is None else ShapeClass.from_code(self.labels[i])
            params = self.params[i] if i < len(self.params) else None
            meta = self.meta[i] if i < len(self.meta) else {}
            yield Curve(self.q, row, label, params, meta)

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        pick = lambda seq: [seq[i] for i in idx] if seq else []
        return Dataset(
            self.q,
            self.intensities[idx],
            None if self.labels is None else self.labels[idx],
            pick(self.params),
            pick(self.meta),
            self.rng_seed,
        )


def curve_rng(seed: int, shape: ShapeClass, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), shape.code, int(index)]))


def simulate_curve(shape: ShapeClass, q: np.ndarray, rng: np.random.Generator,
                   noise: bool = True, counts_range=COUNTS_RANGE,
                   background_range=BACKGROUND_RANGE) -> Curve:
    """One randomized curve: parameters, background, then Poisson counting noise.

    The background is a log-uniform fraction of the noiseless maximum; the
    exposure puts a log-uniform number of expected counts at the maximum.
    """
    shape = ShapeClass(shape)
    p = sample_params(shape, rng)
    clean = model_intensity(shape, q, p)
    peak = float(clean.max())
    background = peak * _logu(rng, *background_range)
    p = dataclasses.replace(p, background=background)
    clean = clean + background
    counts = _logu(rng, *counts_range)
    exposure = counts / float(clean.max()) if noise else np.inf
    intensity = apply_poisson_noise(clean, exposure, rng)
    return Curve(q, intensity, shape, p, {"peak_counts": counts if noise else None})


def _simulate_block(args):
    shape, start, stop, q, seed, noise, counts_range, background_range = args
    rows, params, metas = [], [], []
    for i in range(start, stop):
        try:
            c = simulate_curve(shape, q, curve_rng(seed, shape, i), noise, counts_range,
                               background_range)
        except Exception as exc:  # noqa: BLE001 - re-raised with context
            raise SimulationError(f"{shape.value} curve #{i}: {exc}") from exc
        rows.append(c.intensity)
        params.append(c.params)
        metas.append({"class": shape.value, "index": i, **c.meta})
    return rows, params, metas


def generate_dataset(classes: Sequence[ShapeClass] | None = None,
                     curves_per_class: int = 3000,
                     q: np.ndarray | None = None,
                     seed: int = 0,
                     threads: int = 1,
                     noise: bool = True,
                     counts_range=COUNTS_RANGE,
                     background_range=BACKGROUND_RANGE) -> Dataset:
    """Balanced labeled dataset, class-major row order."""
    if curves_per_class < 1:
        raise ValueError("curves_per_class must be >= 1")
    classes = list(SHAPE_CLASSES if classes is None else [ShapeClass(c) for c in classes])
    q = make_qgrid() if q is None else validate_qgrid(q)

    block = 64
    jobs = [
        (shape, start, min(start + block, curves_per_class), q, seed, noise,
         tuple(counts_range), tuple(background_range))
        for shape in classes
        for start in range(0, curves_per_class, block)
    ]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_simulate_block, jobs))
    else:
        results = [_simulate_block(j) for j in jobs]

    rows, params, metas = [], [], []
    for r, p, m in results:
        rows.extend(r)
        params.extend(p)
        metas.extend(m)
    labels = np.repeat([c.code for c in classes], curves_per_class)
    return Dataset(q, np.vstack(rows), labels, params, metas, seed)
