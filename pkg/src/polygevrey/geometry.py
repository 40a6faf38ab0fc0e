"""Plane sectors, polysectors, multidirections, and the sampling grids built on them.

Angles are stored unreduced (no mod 2*pi) so that openings close to pi stay
unambiguous; the sine and circle formulas elsewhere depend on signed angle
differences.  Membership tests pick the branch of arg(z) nearest the sector
bisector, which keeps sectors crossing the principal cut well defined.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import DimensionMismatchError, GeometryError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Sector:
    """Open sector ``0 < |z| < rho``, ``arg z`` in ``(alpha, beta)``."""

    alpha: float
    beta: float
    rho: float = math.inf

    def __post_init__(self):
        if not self.alpha < self.beta:
            raise GeometryError(f"sector needs alpha < beta, got ({self.alpha}, {self.beta})")
        if not self.rho > 0:
            raise GeometryError(f"sector radius must be positive, got {self.rho}")

    @property
    def opening(self) -> float:
        return self.beta - self.alpha

    @property
    def bisector(self) -> float:
        return 0.5 * (self.alpha + self.beta)

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.rho)

    def arg_nearest_branch(self, z: complex) -> float:
        """Branch of arg(z) closest to the bisector (z != 0)."""
        theta = cmath.phase(z)
        k = round((self.bisector - theta) / TWO_PI)
        return theta + k * TWO_PI

    def contains(self, z: complex) -> bool:
        r = abs(z)
        if not 0.0 < r < self.rho:
            return False
        theta = self.arg_nearest_branch(z)
        return self.alpha < theta < self.beta

    def boundary_distance(self, z: complex) -> float:
        """Distance from an interior point to the sector boundary."""
        r = abs(z)
        theta = self.arg_nearest_branch(z)
        dist = math.inf
        for edge in (self.alpha, self.beta):
            gap = abs(theta - edge)
            dist = min(dist, r * math.sin(gap) if gap < 0.5 * math.pi else r)
        if self.bounded:
            dist = min(dist, self.rho - r)
        return dist

    def is_subsector_of(self, other: "Sector") -> bool:
        """Bounded proper containment: closed angles inside, strictly smaller radius."""
        return (
            other.alpha < self.alpha
            and self.beta < other.beta
            and self.bounded
            and self.rho < other.rho
        )

    def shrink(self, angle_margin: float, rho: float | None = None) -> "Sector":
        """Proper subsector obtained by trimming both edges."""
        if 2 * angle_margin >= self.opening:
            raise GeometryError("angle margin swallows the sector")
        new_rho = rho if rho is not None else (self.rho if self.bounded else 1.0)
        return Sector(self.alpha + angle_margin, self.beta - angle_margin, new_rho)

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "rho": "inf" if not self.bounded else self.rho,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Sector":
        try:
            rho = obj["rho"]
            rho = math.inf if rho in ("inf", None) else float(rho)
            return cls(float(obj["alpha"]), float(obj["beta"]), rho)
        except (KeyError, TypeError) as exc:
            raise GeometryError(f"bad sector descriptor: {obj!r}") from exc


@dataclass(frozen=True)
class Polysector:
    """Cartesian product of sectors.  Dimension 0 is allowed only as the
    domain of constant family elements; JSON input requires dim >= 1."""

    sectors: tuple[Sector, ...]

    def __init__(self, sectors: Iterable[Sector]):
        object.__setattr__(self, "sectors", tuple(sectors))

    @property
    def dim(self) -> int:
        return len(self.sectors)

    @property
    def bounded(self) -> bool:
        return all(s.bounded for s in self.sectors)

    def bisector(self) -> "Multidirection":
        return Multidirection(tuple(s.bisector for s in self.sectors))

    def contains(self, zs: Sequence[complex]) -> bool:
        if len(zs) != self.dim:
            raise DimensionMismatchError(f"point has {len(zs)} coordinates, polysector {self.dim}")
        return all(s.contains(z) for s, z in zip(self.sectors, zs))

    def axes_subset(self, axes: Iterable[int]) -> "Polysector":
        return Polysector(self.sectors[j] for j in sorted(axes))

    def to_json(self) -> dict:
        return {"sectors": [s.to_json() for s in self.sectors]}

    @classmethod
    def from_json(cls, obj: dict) -> "Polysector":
        try:
            raw = obj["sectors"]
        except (KeyError, TypeError) as exc:
            raise GeometryError(f"bad polysector descriptor: {obj!r}") from exc
        if not raw:
            raise GeometryError("polysector descriptor needs at least one sector")
        return cls(Sector.from_json(s) for s in raw)


EMPTY_POLYSECTOR = Polysector(())


@dataclass(frozen=True)
class Multidirection:
    """One fixed argument per axis."""

    thetas: tuple[float, ...]

    def __init__(self, thetas: Iterable[float]):
        object.__setattr__(self, "thetas", tuple(float(t) for t in thetas))

    @property
    def dim(self) -> int:
        return len(self.thetas)

    def __iter__(self):
        return iter(self.thetas)

    def __getitem__(self, j):
        return self.thetas[j]

    def in_polysector(self, s: Polysector) -> bool:
        if self.dim != s.dim:
            raise DimensionMismatchError(f"direction dim {self.dim} != polysector dim {s.dim}")
        return all(sec.alpha < t < sec.beta for sec, t in zip(s.sectors, self.thetas))

    def to_json(self) -> list[float]:
        return list(self.thetas)

    @classmethod
    def from_json(cls, obj) -> "Multidirection":
        if not isinstance(obj, (list, tuple)) or not obj:
            raise GeometryError(f"bad multidirection descriptor: {obj!r}")
        return cls(float(t) for t in obj)


@dataclass(frozen=True)
class RayGrid:
    """Per-axis strictly decreasing radii along a fixed multidirection."""

    direction: Multidirection
    radii: tuple[tuple[float, ...], ...]

    def __init__(self, direction: Multidirection, radii: Iterable[Iterable[float]]):
        rad = tuple(tuple(float(r) for r in axis) for axis in radii)
        if len(rad) != direction.dim:
            raise DimensionMismatchError("one radius list per axis required")
        for axis in rad:
            if any(r <= 0 for r in axis):
                raise GeometryError("radii must be positive")
            if any(a <= b for a, b in zip(axis, axis[1:])):
                raise GeometryError("radii must be strictly decreasing")
        object.__setattr__(self, "direction", direction)
        object.__setattr__(self, "radii", rad)

    def points(self, host: Polysector) -> list[tuple[complex, ...]]:
        return ray_points(host, self.direction, self.radii)


def geometric_radii(r0: float, ratio: float, count: int) -> tuple[float, ...]:
    """Default grid r_k = r0 * ratio**k; type fits want log-spaced |z|."""
    if not (r0 > 0 and 0 < ratio < 1 and count >= 1):
        raise GeometryError("need r0 > 0, ratio in (0,1), count >= 1")
    return tuple(r0 * ratio**k for k in range(count))


def contains(s: Sector, z: complex) -> bool:
    """Membership with the branch of arg nearest the bisector."""
    return s.contains(z)


def is_subpolysector(t: Polysector, s: Polysector) -> bool:
    """Componentwise [alpha_T, beta_T] inside (alpha_S, beta_S) with rho_T < rho_S finite."""
    if t.dim != s.dim:
        raise DimensionMismatchError(f"dim {t.dim} vs {s.dim}")
    return all(ts.is_subsector_of(ss) for ts, ss in zip(t.sectors, s.sectors))


def ray_points(
    s: Polysector,
    d: Multidirection,
    radii: Sequence[Sequence[float]],
) -> list[tuple[complex, ...]]:
    """Cartesian product of per-axis points r * e^{i theta_j}, all inside ``s``."""
    if not d.in_polysector(s):
        raise GeometryError("direction lies outside the polysector")
    if len(radii) != s.dim:
        raise DimensionMismatchError("one radius list per axis required")
    per_axis: list[list[complex]] = []
    for sec, theta, axis in zip(s.sectors, d.thetas, radii):
        pts = []
        for r in axis:
            if not 0 < r < sec.rho:
                raise GeometryError(f"radius {r} outside (0, {sec.rho})")
            pts.append(r * cmath.exp(1j * theta))
        per_axis.append(pts)
    return [tuple(p) for p in itertools.product(*per_axis)]


def _sector_boundary_points(sec: Sector, density: int) -> list[complex]:
    if not sec.bounded:
        raise GeometryError("distinguished boundary sampling needs a bounded sector")
    if density < 1:
        raise GeometryError("density must be >= 1")
    pts: list[complex] = []
    for edge in (sec.alpha, sec.beta):
        phase = cmath.exp(1j * edge)
        for i in range(density):
            pts.append(sec.rho * (i + 1) / density * phase)
    for i in range(density):
        theta = sec.alpha + sec.opening * (i + 1) / (density + 1)
        pts.append(sec.rho * cmath.exp(1j * theta))
    return pts


def distinguished_boundary_points(s: Polysector, density: int) -> list[tuple[complex, ...]]:
    """Points with every coordinate on its sector boundary; the vertex is excluded."""
    per_axis = [_sector_boundary_points(sec, density) for sec in s.sectors]
    return [tuple(p) for p in itertools.product(*per_axis)]
