"""Planar vectors, unit bearings and counterclockwise angle arithmetic.

Angles produced here live in ``[0, 2*pi)``. The separation estimate, which
ranges over ``[-pi, 3*pi)``, is produced in :mod:`circumnav.control` and is
never wrapped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi
EPS_DIST = 1e-9
UNIT_TOL = 1e-12


class DegenerateBearing(ValueError):
    """Two points are too close for a bearing between them to be defined."""


class NonFiniteValue(ValueError):
    pass


def _check_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise NonFiniteValue(f"non-finite component {v!r}")


@dataclass(frozen=True)
class Vec2:
    x: float
    y: float

    def __post_init__(self) -> None:
        _check_finite(self.x, self.y)

    def __add__(self, other: Vec2) -> Vec2:
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: Vec2) -> Vec2:
        return Vec2(self.x - other.x, self.y - other.y)

    def __mul__(self, s: float) -> Vec2:
        return Vec2(self.x * s, self.y * s)

    __rmul__ = __mul__

    def __neg__(self) -> Vec2:
        return Vec2(-self.x, -self.y)

    def dot(self, other: Vec2) -> float:
        return self.x * other.x + self.y * other.y

    def cross(self, other: Vec2) -> float:
        return self.x * other.y - self.y * other.x

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class UnitVec2(Vec2):
    def __post_init__(self) -> None:
        super().__post_init__()
        if abs(self.x * self.x + self.y * self.y - 1.0) > UNIT_TOL:
            raise ValueError(f"({self.x}, {self.y}) is not a unit vector")

    def __neg__(self) -> UnitVec2:
        return UnitVec2(-self.x, -self.y)

    @classmethod
    def from_angle(cls, theta: float) -> UnitVec2:
        return cls(math.cos(theta), math.sin(theta))


def unit_bearing(frm: Vec2, to: Vec2, eps_dist: float = EPS_DIST) -> UnitVec2:
    """Unit vector pointing from ``frm`` toward ``to``.

    Raises :class:`DegenerateBearing` when the points are within ``eps_dist``.
    """
    dx = to.x - frm.x
    dy = to.y - frm.y
    r = math.hypot(dx, dy)
    if not r > eps_dist:
        raise DegenerateBearing(f"points {frm.as_tuple()} and {to.as_tuple()} are {r:.3g} m apart")
    return UnitVec2(dx / r, dy / r)


def rotate_cw_quarter(v: UnitVec2) -> UnitVec2:
    return UnitVec2(v.y, -v.x)


def wrap_2pi(theta: float) -> float:
    """Map a real angle into ``[0, 2*pi)``."""
    theta = math.fmod(theta, TWO_PI)
    if theta < 0.0:
        theta += TWO_PI
    # adding 2*pi to a tiny negative rounds up to exactly 2*pi
    if theta >= TWO_PI:
        theta -= TWO_PI
    return theta


def ccw_angle(a: Vec2, b: Vec2) -> float:
    """Counterclockwise rotation in ``[0, 2*pi)`` taking direction ``a`` onto ``b``."""
    return wrap_2pi(math.atan2(a.cross(b), a.dot(b)))
