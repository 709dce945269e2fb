"""Domain geometry: balls and boxes in R^n, boundary distances, samplers.

Regions are closed for membership tests and open for analysis purposes;
``boundary_distance`` is the distance to the topological boundary and is
available in closed form for both kinds.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

_CONTAIN_TOL = 1e-12


class OutsideDomainError(ValueError):
    """A point that must lie in a region does not."""


@dataclass(frozen=True)
class DomainRegion:
    """A ball {center, radius} or an axis-aligned box {low, high} in R^n, n >= 2."""

    kind: str
    n: int
    center: np.ndarray | None = None
    radius: float | None = None
    low: np.ndarray | None = None
    high: np.ndarray | None = None
    _diameter: float = field(init=False, default=0.0, repr=False)

    def __post_init__(self):
        if self.kind not in ("ball", "box"):
            raise ValueError(f"unknown region kind {self.kind!r}")
        if self.n < 2:
            raise ValueError(f"dimension must be >= 2, got {self.n}")
        if self.kind == "ball":
            if self.center is None or self.radius is None:
                raise ValueError("ball region needs center and radius")
            if not np.all(np.isfinite(self.center)) or self.center.shape != (self.n,):
                raise ValueError("ball center must be finite with matching dimension")
            if not (self.radius > 0):
                raise ValueError(f"ball radius must be positive, got {self.radius}")
            object.__setattr__(self, "_diameter", 2.0 * float(self.radius))
        else:
            if self.low is None or self.high is None:
                raise ValueError("box region needs low and high corners")
            if self.low.shape != (self.n,) or self.high.shape != (self.n,):
                raise ValueError("box corners must match the dimension")
            if not np.all(self.low < self.high):
                raise ValueError("box requires low < high componentwise")
            object.__setattr__(self, "_diameter", float(np.linalg.norm(self.high - self.low)))

    # -- queries ---------------------------------------------------------

    @property
    def diameter(self) -> float:
        return self._diameter

    @property
    def centroid(self) -> np.ndarray:
        if self.kind == "ball":
            return self.center.copy()
        return 0.5 * (self.low + self.high)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Closed-region membership; accepts (n,) or (m, n)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        tol = _CONTAIN_TOL * max(1.0, self.diameter)
        if self.kind == "ball":
            ok = np.linalg.norm(pts - self.center, axis=1) <= self.radius + tol
        else:
            ok = np.all(pts >= self.low - tol, axis=1) & np.all(pts <= self.high + tol, axis=1)
        return ok if np.asarray(points).ndim == 2 else bool(ok[0])

    def boundary_distance(self, points: np.ndarray) -> np.ndarray:
        """Distance to the boundary; raises if a point is outside the closed region."""
        single = np.asarray(points).ndim == 1
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        inside = self.contains(pts)
        if not np.all(inside):
            bad = pts[~inside][0]
            raise OutsideDomainError(f"point {bad.tolist()} lies outside the {self.kind} region")
        if self.kind == "ball":
            rho = self.radius - np.linalg.norm(pts - self.center, axis=1)
        else:
            rho = np.minimum(pts - self.low, self.high - pts).min(axis=1)
        rho = np.maximum(rho, 0.0)
        return float(rho[0]) if single else rho

    def corners(self) -> np.ndarray:
        if self.kind != "box":
            raise ValueError("corners are defined for boxes only")
        combos = np.array(list(itertools.product((0, 1), repeat=self.n)), dtype=float)
        return self.low + combos * (self.high - self.low)

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform points in the region, shape (count, n)."""
        if self.kind == "ball":
            dirs = rng.standard_normal((count, self.n))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            radii = self.radius * rng.random(count) ** (1.0 / self.n)
            return self.center + radii[:, None] * dirs
        return self.low + rng.random((count, self.n)) * (self.high - self.low)

    def to_dict(self) -> dict:
        if self.kind == "ball":
            return {"kind": "ball", "n": self.n, "center": [float(c) for c in self.center],
                    "radius": float(self.radius)}
        return {"kind": "box", "n": self.n, "low": [float(c) for c in self.low],
                "high": [float(c) for c in self.high]}


def ball(center, radius: float) -> DomainRegion:
    c = np.asarray(center, dtype=float)
    region = DomainRegion(kind="ball", n=c.size, center=c, radius=float(radius))
    region.center.setflags(write=False)
    return region


def box(low, high) -> DomainRegion:
    lo = np.asarray(low, dtype=float)
    hi = np.asarray(high, dtype=float)
    region = DomainRegion(kind="box", n=lo.size, low=lo, high=hi)
    region.low.setflags(write=False)
    region.high.setflags(write=False)
    return region


def region_from_dict(data: dict) -> DomainRegion:
    if data["kind"] == "ball":
        return ball(data["center"], data["radius"])
    return box(data["low"], data["high"])


def boundary_distance(region: DomainRegion, x) -> float | np.ndarray:
    """Functional form of :meth:`DomainRegion.boundary_distance`."""
    return region.boundary_distance(x)


def region_gap(inner: DomainRegion, outer: DomainRegion) -> float:
    """dist(inner, boundary of outer) = inf over inner of the boundary distance.

    The boundary distance is concave for both region kinds, so the infimum
    over a ball has a closed form and over a box is attained at a corner.
    """
    if inner.n != outer.n:
        raise ValueError("dimension mismatch between regions")
    if inner.kind == "ball":
        center_rho = outer.boundary_distance(inner.center)
        return float(center_rho - inner.radius)
    rho = outer.boundary_distance(inner.corners())
    return float(np.min(rho))
