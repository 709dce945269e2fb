"""Pointwise distortion inequality: verification and minimal-pair fitting.

A sample records a = |J(x,f)| and b = |Df(x)|^n at one point.  A pair
(K1, K2) is feasible for the sample set when b_i <= K1*a_i + K2 for all i;
the minimal feasible K2 as a function of K1 is the upper envelope of the
lines K1 -> b_i - K1*a_i, clamped below at zero.  Since every slope -a_i
is nonpositive the envelope is convex, piecewise linear and nonincreasing,
and a convex-hull sweep over slope-sorted lines builds it exactly.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

from . import differential
from .geometry import DomainRegion
from .seeding import rng_for

if TYPE_CHECKING:  # pragma: no cover
    from .catalog import MappingSpec


@dataclass(frozen=True)
class DistortionPair:
    """A (K1, K2) pair: 0 < K1 < inf, 0 <= K2 < inf."""

    k1: float
    k2: float

    def __post_init__(self):
        if not (0.0 < self.k1 < math.inf):
            raise ValueError(f"K1 must be in (0, inf), got {self.k1}")
        if not (0.0 <= self.k2 < math.inf):
            raise ValueError(f"K2 must be in [0, inf), got {self.k2}")

    def dominates(self, other: "DistortionPair") -> bool:
        return self.k1 >= other.k1 and self.k2 >= other.k2

    def to_dict(self) -> dict:
        return {"k1": float(self.k1), "k2": float(self.k2)}


@dataclass(frozen=True)
class DistortionSample:
    """One pointwise sample of the distortion inequality's two sides."""

    a: float  # |J(x, f)|
    b: float  # |Df(x)|^n
    point: tuple = ()
    jac_signed: float = 0.0

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise ValueError("distortion samples need a >= 0 and b >= 0")


def distortion_residual(sample: DistortionSample, pair: DistortionPair) -> float:
    """b - K1*a - K2; nonpositive means the inequality holds at the point."""
    return sample.b - pair.k1 * sample.a - pair.k2


# -- sampling from a mapping -------------------------------------------------


def draw_sample_points(
    mapping: "MappingSpec", region: DomainRegion, count: int, seed: int
) -> np.ndarray:
    """Seeded uniform points in the region, excluding singular neighborhoods."""
    rng = rng_for(seed, "distortion_points", mapping.name, count)
    out = np.empty((0, region.n))
    guard = 0
    while out.shape[0] < count:
        batch = region.sample(max(count - out.shape[0], 64), rng)
        if mapping.singular_points.size:
            d = np.linalg.norm(
                batch[:, None, :] - mapping.singular_points[None, :, :], axis=2
            ).min(axis=1)
            batch = batch[d >= differential.SINGULAR_EXCLUSION]
        out = np.vstack([out, batch])
        guard += 1
        if guard > 1000:
            raise ValueError("could not draw non-singular samples in the region")
    return out[:count]


def samples_from_mapping(
    mapping: "MappingSpec", region: DomainRegion, count: int, seed: int
) -> list[DistortionSample]:
    X = draw_sample_points(mapping, region, count, seed)
    _, opn, jac = differential.batch_differentials(mapping, X)
    n = mapping.n
    return [
        DistortionSample(
            a=float(abs(jac[i])),
            b=float(opn[i] ** n),
            point=tuple(float(c) for c in X[i]),
            jac_signed=float(jac[i]),
        )
        for i in range(count)
    ]


@dataclass(frozen=True)
class DistortionReport:
    pair: DistortionPair
    sample_count: int
    seed: int
    max_residual: float
    violation_fraction: float
    violation_tolerance: float
    sign_consistent: bool
    sign_tolerance: float
    positive_jacobians: int
    negative_jacobians: int
    passed: bool

    def to_dict(self) -> dict:
        return {
            "pair": self.pair.to_dict(),
            "sample_count": self.sample_count,
            "seed": self.seed,
            "max_residual": float(self.max_residual),
            "violation_fraction": float(self.violation_fraction),
            "violation_tolerance": float(self.violation_tolerance),
            "sign_consistent": self.sign_consistent,
            "sign_tolerance": float(self.sign_tolerance),
            "positive_jacobians": self.positive_jacobians,
            "negative_jacobians": self.negative_jacobians,
            "pass": self.passed,
        }


def verify_distortion(
    mapping: "MappingSpec",
    region: DomainRegion,
    pair: DistortionPair,
    sample_count: int = 10_000,
    seed: int = 0,
) -> DistortionReport:
    """Sampled-essential check of the inequality and the Jacobian sign condition.

    The sign tolerance is relative, tau = 1e-9 * max |J| over the sample, so
    interpolation noise around J = 0 (and an identically zero Jacobian) does
    not trip the verdict.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    X = draw_sample_points(mapping, region, sample_count, seed)
    _, opn, jac = differential.batch_differentials(mapping, X)
    b = opn ** mapping.n
    residuals = b - pair.k1 * np.abs(jac) - pair.k2
    tol = 1e-9 * max(1.0, float(b.max()))
    tau = 1e-9 * float(np.abs(jac).max())
    pos = int(np.count_nonzero(jac > tau))
    neg = int(np.count_nonzero(jac < -tau))
    sign_ok = not (pos > 0 and neg > 0)
    max_res = float(residuals.max())
    frac = float(np.count_nonzero(residuals > tol)) / sample_count
    return DistortionReport(
        pair=pair,
        sample_count=sample_count,
        seed=seed,
        max_residual=max_res,
        violation_fraction=frac,
        violation_tolerance=tol,
        sign_consistent=sign_ok,
        sign_tolerance=tau,
        positive_jacobians=pos,
        negative_jacobians=neg,
        passed=(max_res <= tol) and sign_ok,
    )


# -- minimal-pair frontier ----------------------------------------------------


@dataclass(frozen=True)
class FrontierPiece:
    k1_lo: float
    k1_hi: float  # math.inf on the last piece
    a: float  # line is K2 = b - a*K1
    b: float
    sample_index: int  # -1 for the clamped zero piece

    def value(self, k1: float) -> float:
        if self.sample_index < 0:
            return 0.0
        return self.b - self.a * k1


@dataclass
class DistortionFrontier:
    """Minimal feasible K2 as a function of K1 over a sample set."""

    pieces: list[FrontierPiece]
    breakpoints: list[tuple[float, float]]
    contributing_samples: list[int]
    _starts: list[float] = field(init=False, repr=False)

    def __post_init__(self):
        self._starts = [p.k1_lo for p in self.pieces]

    def minimal_k2(self, k1: float) -> float:
        if not (k1 > 0):
            raise ValueError("K1 must be positive")
        idx = bisect.bisect_right(self._starts, k1) - 1
        idx = max(idx, 0)
        return max(self.pieces[idx].value(k1), 0.0)

    def minimal_k1(self, k2: float) -> float:
        """Least K1 whose minimal K2 does not exceed k2; inf when infeasible.

        Binary search over the (nonincreasing) piece values locates the
        crossing segment.  Returns 0.0 when every positive K1 is already
        feasible (the infimum, which is not attained).
        """
        if k2 < 0:
            raise ValueError("K2 must be nonnegative")
        first = self.pieces[0]
        if k2 >= max(first.b if first.sample_index >= 0 else 0.0, 0.0):
            return 0.0
        last = self.pieces[-1]
        tail_value = 0.0 if last.sample_index < 0 else (last.b if last.a == 0.0 else 0.0)
        if k2 < tail_value:
            return math.inf
        lo, hi = 0, len(self.pieces) - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if self._end_value(self.pieces[mid]) <= k2:
                hi = mid
            else:
                lo = mid + 1
        piece = self.pieces[lo]
        if piece.sample_index < 0 or piece.a == 0.0:
            return piece.k1_lo
        return max((piece.b - k2) / piece.a, piece.k1_lo)

    @staticmethod
    def _end_value(piece: FrontierPiece) -> float:
        if math.isinf(piece.k1_hi):
            if piece.sample_index < 0:
                return 0.0
            return piece.b if piece.a == 0.0 else 0.0
        return max(piece.value(piece.k1_hi), 0.0)

    def envelope_values(self, k1_grid: np.ndarray) -> np.ndarray:
        return np.array([self.minimal_k2(float(k)) for k in k1_grid])

    def to_dict(self) -> dict:
        return {
            "breakpoints": [[float(x), float(y)] for x, y in self.breakpoints],
            "pieces": [
                {
                    "k1_lo": float(p.k1_lo),
                    "k1_hi": (None if math.isinf(p.k1_hi) else float(p.k1_hi)),
                    "a": float(p.a),
                    "b": float(p.b),
                    "sample_index": p.sample_index,
                }
                for p in self.pieces
            ],
            "contributing_samples": list(self.contributing_samples),
        }


def fit_minimal_distortion(samples: Sequence[DistortionSample]) -> DistortionFrontier:
    """Upper envelope of the lines K1 -> b_i - a_i*K1, clamped below at zero."""
    if len(samples) == 0:
        raise ValueError("at least one distortion sample is required")
    lines = [(-float(s.a), float(s.b), i) for i, s in enumerate(samples)]
    # sort by slope; ties keep the larger intercept (the other line is dominated)
    lines.sort(key=lambda t: (t[0], t[1]))
    dedup: list[tuple[float, float, int]] = []
    for slope, intercept, idx in lines:
        if dedup and dedup[-1][0] == slope:
            dedup[-1] = (slope, intercept, idx)  # later entry has >= intercept
        else:
            dedup.append((slope, intercept, idx))

    hull: list[tuple[float, float, int]] = []
    for line in dedup:
        while len(hull) >= 2 and _meet(hull[-1], line) <= _meet(hull[-2], hull[-1]):
            hull.pop()
        hull.append(line)

    # piece boundaries over all of R, then restrict to K1 > 0 and clamp at zero
    bounds = [-math.inf]
    for left, right in zip(hull, hull[1:]):
        bounds.append(_meet(left, right))
    bounds.append(math.inf)

    pieces: list[FrontierPiece] = []
    for (slope, intercept, idx), lo, hi in zip(hull, bounds, bounds[1:]):
        if math.isfinite(hi) and hi <= 0.0:
            continue  # piece lives entirely at K1 <= 0
        a = -slope
        lo_c = max(lo, 0.0)
        value_lo = intercept - a * lo_c
        if value_lo <= 0.0:
            pieces.append(FrontierPiece(lo_c, math.inf, 0.0, 0.0, -1))
            break
        value_hi = intercept - a * hi if math.isfinite(hi) else (
            intercept if a == 0.0 else -math.inf
        )
        if value_hi < 0.0:
            crossing = intercept / a
            pieces.append(FrontierPiece(lo_c, crossing, a, intercept, idx))
            pieces.append(FrontierPiece(crossing, math.inf, 0.0, 0.0, -1))
            break
        pieces.append(FrontierPiece(lo_c, hi, a, intercept, idx))
    if not pieces:
        # every line nonpositive on K1 > 0: the zero pair is feasible throughout
        pieces = [FrontierPiece(0.0, math.inf, 0.0, 0.0, -1)]
    elif math.isfinite(pieces[-1].k1_hi):
        # envelope touched zero exactly at the final boundary
        pieces.append(FrontierPiece(pieces[-1].k1_hi, math.inf, 0.0, 0.0, -1))

    breakpoints = []
    for piece in pieces[1:]:
        breakpoints.append((piece.k1_lo, max(piece.value(piece.k1_lo), 0.0)))
    contributing = [p.sample_index for p in pieces if p.sample_index >= 0]
    return DistortionFrontier(pieces=pieces, breakpoints=breakpoints,
                              contributing_samples=contributing)


def _meet(l1: tuple[float, float, int], l2: tuple[float, float, int]) -> float:
    (m1, c1, _), (m2, c2, _) = l1, l2
    return (c1 - c2) / (m2 - m1)
