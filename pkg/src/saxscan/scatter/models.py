"""Shape classes, the q grid and per-model parameter records."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum

import numpy as np

Q_MIN = 1e-3
Q_MAX = 3.0
N_POINTS = 500


class ShapeClass(str, Enum):
    """Classification labels. Integer codes follow declaration order (0-11)."""

    SPHERE = "sphere"
    FUZZY_SPHERE = "fuzzy_sphere"
    ELLIPSOID_PROLATE = "ellipsoid_prolate"
    ELLIPSOID_OBLATE = "ellipsoid_oblate"
    CYLINDER_LONG = "cylinder_long"
    CYLINDER_HOLLOW = "cylinder_hollow"
    CYLINDER_LONG_HOLLOW = "cylinder_long_hollow"
    DISK = "disk"
    DAB = "dab"
    POLYMER_EXCLUDED_VOLUME = "polymer_excluded_volume"
    TEUBNER_STREY = "teubner_strey"
    SPHERE_CYLINDER_MIX = "sphere_cylinder_mix"

    @property
    def code(self) -> int:
        return SHAPE_CLASSES.index(self)

    @classmethod
    def from_code(cls, code: int) -> "ShapeClass":
        return SHAPE_CLASSES[int(code)]


SHAPE_CLASSES: tuple[ShapeClass, ...] = tuple(ShapeClass)
CLASS_NAMES: tuple[str, ...] = tuple(c.value for c in SHAPE_CLASSES)


def make_qgrid(n: int = N_POINTS, q_min: float = Q_MIN, q_max: float = Q_MAX) -> np.ndarray:
    """Log-spaced scattering-vector grid in nm^-1."""
    if n < 2 or not (0 < q_min < q_max):
        raise ValueError("q grid needs n >= 2 and 0 < q_min < q_max")
    return np.geomspace(q_min, q_max, n)


def validate_qgrid(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.ndim != 1 or q.size < 2:
        raise ValueError("q grid must be a 1-D array with at least two points")
    if not np.all(np.isfinite(q)) or np.any(q <= 0):
        raise ValueError("q grid must be finite and positive")
    if np.any(np.diff(q) <= 0):
        raise ValueError("q grid must be strictly increasing")
    return q


def _positive(**values: float) -> None:
    for name, v in values.items():
        if not (np.isfinite(v) and v > 0):
            raise ValueError(f"{name} must be > 0, got {v}")


def _check_common(p) -> None:
    if not (np.isfinite(p.scale) and p.scale > 0):
        raise ValueError(f"scale must be > 0, got {p.scale}")
    if not (np.isfinite(p.background) and p.background >= 0):
        raise ValueError(f"background must be >= 0, got {p.background}")
    pd = getattr(p, "pd", 0.0)
    if not (0.0 <= pd <= 0.3):
        raise ValueError(f"pd must lie in [0, 0.3], got {pd}")


@dataclass(frozen=True)
class SphereParams:
    radius: float
    pd: float = 0.0
    scale: float = 1.0
    background: float = 0.0
    dispersed = "radius"

    def __post_init__(self):
        _positive(radius=self.radius)
        _check_common(self)


@dataclass(frozen=True)
class FuzzySphereParams:
    radius: float
    fuzziness: float
    pd: float = 0.0
    scale: float = 1.0
    background: float = 0.0
    dispersed = "radius"

    def __post_init__(self):
        _positive(radius=self.radius)
        if not (np.isfinite(self.fuzziness) and self.fuzziness >= 0):
            raise ValueError(f"fuzziness must be >= 0, got {self.fuzziness}")
        _check_common(self)


@dataclass(frozen=True)
class EllipsoidParams:
    """Spheroid with equatorial radius ``radius_equatorial`` and polar radius
    ``aspect * radius_equatorial``."""

    radius_equatorial: float
    aspect: float
    pd: float = 0.0
    scale: float = 1.0
    background: float = 0.0
    dispersed = "aspect"

    def __post_init__(self):
        _positive(radius_equatorial=self.radius_equatorial, aspect=self.aspect)
        _check_common(self)


@dataclass(frozen=True)
class CylinderParams:
    radius: float
    length: float
    pd: float = 0.0
    scale: float = 1.0
    background: float = 0.0
    dispersed = "radius"

    def __post_init__(self):
        _positive(radius=self.radius, length=self.length)
        _check_common(self)


@dataclass(frozen=True)
class HollowCylinderParams:
    radius: float
    radius_core: float
    length: float
    pd: float = 0.0
    scale: float = 1.0
    background: float = 0.0
    dispersed = "radius"

    def __post_init__(self):
        _positive(radius=self.radius, length=self.length)
        if not (0.0 <= self.radius_core < self.radius):
            raise ValueError("hollow cylinder needs 0 <= radius_core < radius")
        _check_common(self)

    @property
    def core_ratio(self) -> float:
        return self.radius_core / self.radius


@dataclass(frozen=True)
class DABParams:
    xi: float
    scale: float = 1.0
    background: float = 0.0

    def __post_init__(self):
        _positive(xi=self.xi)
        _check_common(self)


@dataclass(frozen=True)
class PolymerEVParams:
    rg: float
    nu: float
    scale: float = 1.0
    background: float = 0.0

    def __post_init__(self):
        _positive(rg=self.rg)
        if not (0.33 <= self.nu <= 0.60):
            raise ValueError(f"excluded-volume exponent nu={self.nu} outside [0.33, 0.60]")
        _check_common(self)


@dataclass(frozen=True)
class TeubnerStreyParams:
    d: float
    xi: float
    scale: float = 1.0
    background: float = 0.0

    def __post_init__(self):
        _positive(d=self.d, xi=self.xi)
        _check_common(self)


@dataclass(frozen=True)
class MixtureParams:
    """Sphere + cylinder mixture; component backgrounds are ignored."""

    sphere: SphereParams
    cylinder: CylinderParams
    weight: float
    scale: float = 1.0
    background: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.weight <= 1.0):
            raise ValueError(f"mixture weight must lie in [0, 1], got {self.weight}")
        _check_common(self)


PARAM_TYPES = {
    ShapeClass.SPHERE: SphereParams,
    ShapeClass.FUZZY_SPHERE: FuzzySphereParams,
    ShapeClass.ELLIPSOID_PROLATE: EllipsoidParams,
    ShapeClass.ELLIPSOID_OBLATE: EllipsoidParams,
    ShapeClass.CYLINDER_LONG: CylinderParams,
    ShapeClass.CYLINDER_HOLLOW: HollowCylinderParams,
    ShapeClass.CYLINDER_LONG_HOLLOW: HollowCylinderParams,
    ShapeClass.DISK: CylinderParams,
    ShapeClass.DAB: DABParams,
    ShapeClass.POLYMER_EXCLUDED_VOLUME: PolymerEVParams,
    ShapeClass.TEUBNER_STREY: TeubnerStreyParams,
    ShapeClass.SPHERE_CYLINDER_MIX: MixtureParams,
}


def params_to_dict(p) -> dict:
    return dataclasses.asdict(p)


def params_from_dict(shape: ShapeClass, d: dict):
    cls = PARAM_TYPES[ShapeClass(shape)]
    if cls is MixtureParams:
        return MixtureParams(
            sphere=SphereParams(**d["sphere"]),
            cylinder=CylinderParams(**d["cylinder"]),
            weight=d["weight"],
            scale=d["scale"],
            background=d["background"],
        )
    return cls(**d)


def flat_params(p) -> list[float]:
    """Numeric parameters in declaration order, nested records flattened."""
    out: list[float] = []
    for f in dataclasses.fields(p):
        v = getattr(p, f.name)
        if dataclasses.is_dataclass(v):
            out.extend(flat_params(v))
        else:
            out.append(float(v))
    return out
