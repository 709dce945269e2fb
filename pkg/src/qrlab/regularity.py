"""Executable regularity checks for mappings with bounded distortion.

Implements the verification chain: predicted Hölder exponent from the
distortion pair, the radius-indexed monotone combination of the ball
energy, the integral form of the distortion inequality, the four-case
growth constants with their validity radius, the power-growth (Morrey)
condition, empirical Hölder estimation from stratified point pairs,
family equicontinuity, and a pointwise differentiability probe.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import differential
from .catalog import MappingSpec
from .distortion import DistortionPair
from .geometry import DomainRegion, region_gap
from .integrals import (
    DEFAULT_CONFIG,
    QuadratureConfig,
    RadialProfile,
    _ball_radial_multi,
    _fp_floor,
    _gauss_nodes,
    unit_ball_volume,
)
from .reporting import CheckReport
from .seeding import rng_for

_MONOTONE_ABS_SLACK = 1e-9


class EnergyBoundError(ValueError):
    """A family member exceeds the shared energy bound."""


# -- exponent prediction --------------------------------------------------------


@dataclass(frozen=True)
class HolderPrediction:
    """Predicted Hölder class on compact subsets for a distortion pair."""

    kind: str  # "exact" | "any_below_one" | "one"
    value: float | None  # None for the any-below-one class
    pair: DistortionPair

    def exponent(self, fallback: float = 0.5) -> float:
        """Numeric exponent; the open class reports the supplied target."""
        return self.value if self.value is not None else fallback

    def to_dict(self) -> dict:
        return {"kind": self.kind, "value": self.value, "pair": self.pair.to_dict()}


def predicted_exponent(pair: DistortionPair) -> HolderPrediction:
    if pair.k1 > 1.0:
        return HolderPrediction("exact", 1.0 / pair.k1, pair)
    if pair.k1 == 1.0 and pair.k2 > 0.0:
        return HolderPrediction("any_below_one", None, pair)
    return HolderPrediction("one", 1.0, pair)


# -- monotone combination of the energy -------------------------------------------


@dataclass
class MonotoneProfile:
    """The energy profile combined into the radius-monotone quantity.

    For K1 != 1 the combination is w(r)/r^(n/K1) + (K2 w_n/(K1-1)) r^(n-n/K1);
    for K1 = 1 the power collapses and a logarithm takes over:
    w(r)/r^n + K2 n w_n ln r.  The same K1 != 1 formula covers K1 < 1 with a
    negative coefficient on the second term.
    """

    profile: RadialProfile
    pair: DistortionPair
    values: np.ndarray
    errors: np.ndarray
    branch: str  # "power" | "log"

    def csv_extra(self) -> dict[str, np.ndarray]:
        return {"v": self.values, "v_err": self.errors}

    def to_dict(self) -> dict:
        return {
            "pair": self.pair.to_dict(),
            "branch": self.branch,
            "radii": [float(r) for r in self.profile.radii],
            "v": [float(v) for v in self.values],
            "v_err": [float(e) for e in self.errors],
        }


def monotone_profile(profile: RadialProfile, pair: DistortionPair) -> MonotoneProfile:
    r = profile.radii
    n = profile.n
    w, w_err = profile.w(), profile.w_err()
    omega = unit_ball_volume(n)
    if pair.k1 == 1.0:
        values = w / r**n + pair.k2 * n * omega * np.log(r)
        errors = w_err / r**n
        branch = "log"
    else:
        power = n / pair.k1
        values = w / r**power + (pair.k2 * omega / (pair.k1 - 1.0)) * r ** (n - power)
        errors = w_err / r**power
        branch = "power"
    return MonotoneProfile(profile=profile, pair=pair, values=values,
                           errors=errors, branch=branch)


def check_v_monotone(mp: MonotoneProfile) -> CheckReport:
    """Nondecreasing within propagated quadrature error plus a tiny absolute slack."""
    r = mp.profile.radii
    if r.size < 2:
        raise ValueError("monotonicity needs at least two radii")
    per_radius = []
    worst = 0.0
    passed = True
    for i in range(r.size - 1):
        decrement = mp.values[i] - mp.values[i + 1]
        tol = mp.errors[i] + mp.errors[i + 1] + _MONOTONE_ABS_SLACK
        ok = decrement <= tol
        passed &= ok
        worst = max(worst, decrement)
        per_radius.append(
            {"r_lo": float(r[i]), "r_hi": float(r[i + 1]),
             "v_lo": float(mp.values[i]), "v_hi": float(mp.values[i + 1]),
             "decrement": float(decrement), "tolerance": float(tol), "pass": ok}
        )
    return CheckReport(
        check="v_monotone",
        inputs={"mapping": mp.profile.mapping_name, "pair": mp.pair.to_dict(),
                "branch": mp.branch},
        per_radius=per_radius,
        worst_slack=float(worst),
        passed=passed,
    )


def check_differential_inequality(profile: RadialProfile, pair: DistortionPair) -> CheckReport:
    """Integral form of the distortion bound: w(r) against (K1 r/n) s(r) + K2 w_n r^n."""
    n = profile.n
    omega = unit_ball_volume(n)
    per_radius = []
    worst = math.inf
    passed = True
    for r, w_res, s_res in zip(profile.radii, profile.ball_energy, profile.sphere_energy):
        rhs = (pair.k1 * r / n) * s_res.value + pair.k2 * omega * r**n
        slack = rhs - w_res.value
        tol = 3.0 * (
            (pair.k1 * r / n) * s_res.error_estimate + w_res.error_estimate
        ) + _fp_floor(rhs, w_res.value)
        ok = slack >= -tol
        passed &= ok
        worst = min(worst, slack + tol)
        per_radius.append(
            {"r": float(r), "rhs": float(rhs), "w": w_res.value,
             "slack": float(slack), "tolerance": float(tol), "pass": ok}
        )
    return CheckReport(
        check="differential_inequality",
        inputs={"mapping": profile.mapping_name, "pair": pair.to_dict()},
        per_radius=per_radius,
        worst_slack=float(worst),
        passed=passed,
    )


# -- growth constants ---------------------------------------------------------------


@dataclass(frozen=True)
class GrowthBound:
    """Power bound w(a, r) <= C r^growth_exponent valid for r <= validity_radius."""

    case: int
    constant: float
    growth_exponent: float
    holder_exponent: float
    validity_radius: float
    inputs: dict

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "constant": float(self.constant),
            "growth_exponent": float(self.growth_exponent),
            "holder_exponent": float(self.holder_exponent),
            "validity_radius": float(self.validity_radius),
            "inputs": dict(self.inputs),
        }


def growth_bound(
    pair: DistortionPair,
    energy: float,
    boundary_gap: float,
    n: int,
    alpha: float | None = None,
) -> GrowthBound:
    """Case constants for the energy growth bound.

    ``energy`` is the total n-energy over the domain (the n-th power of the
    usual constant M); ``boundary_gap`` is d = dist(V, boundary).  The flat
    case K1 = 1, K2 > 0 needs a target exponent alpha in (0, 1); its validity
    radius is the largest delta with delta^(n(1-alpha)) ln(2d/(3 delta)) <= 1
    on all of (0, delta], located by bisection and rounded down.
    """
    if energy <= 0 or boundary_gap <= 0:
        raise ValueError("energy and boundary gap must be positive")
    omega = unit_ball_volume(n)
    reach = 2.0 * boundary_gap / 3.0
    m_const = energy ** (1.0 / n)
    inputs = {"k1": pair.k1, "k2": pair.k2, "energy": float(energy),
              "m": float(m_const), "d": float(boundary_gap), "n": n}
    if pair.k1 > 1.0:
        constant = energy * reach ** (-n / pair.k1) + (
            pair.k2 * omega / (pair.k1 - 1.0)
        ) * reach ** (n - n / pair.k1)
        return GrowthBound(1, constant, n / pair.k1, 1.0 / pair.k1, reach, inputs)
    if pair.k1 == 1.0 and pair.k2 > 0.0:
        if alpha is None:
            raise ValueError("the K1 = 1, K2 > 0 case needs a target alpha in (0, 1)")
        if not (0.0 < alpha < 1.0):
            raise ValueError(f"target alpha must be in (0, 1), got {alpha}")
        constant = (1.5 * m_const) ** n * boundary_gap ** (-n * alpha) + 1.0
        delta = _case2_validity_radius(n, alpha, reach)
        inputs["alpha"] = float(alpha)
        return GrowthBound(2, constant, n * alpha, alpha, delta, inputs)
    if pair.k1 == 1.0:
        constant = energy * reach ** (-n)
        return GrowthBound(3, constant, float(n), 1.0, reach, inputs)
    # K1 < 1: compose the steep-case constant with the remaining power of r
    base = energy * reach ** (-n / pair.k1) + (
        pair.k2 * omega / (pair.k1 - 1.0)
    ) * reach ** (n - n / pair.k1)
    constant = base * reach ** (n * (1.0 - pair.k1) / pair.k1) + (
        pair.k2 * omega / (1.0 - pair.k1)
    )
    return GrowthBound(4, constant, float(n), 1.0, reach, inputs)


def _case2_validity_radius(n: int, alpha: float, reach: float) -> float:
    """Largest delta <= 2d/3 with phi(t) = t^(n(1-alpha)) ln(2d/(3t)) <= 1 on (0, delta].

    phi vanishes at both ends and peaks once at reach * exp(-1/p); if the
    peak stays below one the whole range is admissible, otherwise bisect on
    the increasing branch and round toward the smaller radius.
    """
    p = n * (1.0 - alpha)

    def phi(t: float) -> float:
        return t**p * math.log(reach / t)

    peak = reach * math.exp(-1.0 / p)
    if phi(peak) <= 1.0:
        return reach
    lo, hi = 0.0, peak
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if mid <= 0.0:
            break
        if phi(mid) <= 1.0:
            lo = mid
        else:
            hi = mid
    return lo


def check_morrey_condition(profile: RadialProfile, bound: GrowthBound) -> CheckReport:
    """w(r) <= C r^growth_exponent within 3x quadrature error, for r in the validity range."""
    per_radius = []
    worst = math.inf
    passed = True
    skipped = 0
    for r, w_res in zip(profile.radii, profile.ball_energy):
        if r > bound.validity_radius:
            skipped += 1
            per_radius.append({"r": float(r), "skipped": True})
            continue
        rhs = bound.constant * r**bound.growth_exponent
        slack = rhs - w_res.value
        tol = 3.0 * w_res.error_estimate + _fp_floor(rhs, w_res.value)
        ok = slack >= -tol
        passed &= ok
        worst = min(worst, slack + tol)
        per_radius.append(
            {"r": float(r), "bound": float(rhs), "w": w_res.value,
             "slack": float(slack), "tolerance": float(tol), "pass": ok}
        )
    report = CheckReport(
        check="morrey_growth",
        inputs={"mapping": profile.mapping_name, "bound": bound.to_dict()},
        per_radius=per_radius,
        worst_slack=float(worst if per_radius else 0.0),
        passed=passed,
    )
    if skipped:
        report.notes.append(f"{skipped} radii beyond the validity radius were skipped")
    return report


# -- empirical Hölder estimation -------------------------------------------------------


@dataclass
class HolderEstimate:
    """Empirical modulus data: sup quotient and log-log slope over pair bins."""

    alpha_used: float
    l_hat: float
    alpha_hat: float
    pair_count: int
    region: DomainRegion
    gamma: float
    bins: list[dict] = field(default_factory=list)
    flagged: bool = False

    def to_dict(self) -> dict:
        return {
            "alpha_used": float(self.alpha_used),
            "l_hat": float(self.l_hat),
            "alpha_hat": float(self.alpha_hat),
            "pair_count": self.pair_count,
            "region": self.region.to_dict(),
            "gamma": float(self.gamma),
            "bins": self.bins,
            "flagged": self.flagged,
        }


def estimate_holder(
    mapping: MappingSpec,
    region: DomainRegion,
    alpha: float | str = "auto",
    pair_count: int = 10_000,
    seed: int = 0,
    n_bins: int = 20,
) -> HolderEstimate:
    """Estimate the Hölder data of a mapping on a compact region.

    Pairs are stratified into geometric separation bins between 1e-3 d and
    the region diameter so small gaps are as visible as large ones.  A slice
    of each bin is anchored near declared singular points: the modulus of a
    map like the radial stretch is extremal only there, and uniform endpoint
    sampling would systematically miss it at small separations.

    The slope estimate regresses the log of each bin's largest oscillation
    against the log separation of the pair attaining it; the constant
    estimate is the sup of |f(x)-f(y)| / |x-y|^alpha over all pairs.
    """
    if pair_count < 100:
        raise ValueError("pair_count must be at least 100")
    gap = region_gap(region, mapping.domain)
    if gap <= 0:
        raise ValueError("the compact region must lie strictly inside the domain")
    diam = region.diameter
    if diam <= 0:
        raise ValueError("degenerate compact region")
    sep_lo = 1e-3 * gap
    sep_hi = diam * (1.0 - 1e-9)
    edges = np.geomspace(sep_lo, sep_hi, n_bins + 1)
    per_bin = max(pair_count // n_bins, 8)

    anchors = mapping.singular_points
    if anchors.size:
        anchors = anchors[region.contains(anchors)] if anchors.shape[0] else anchors

    seps_all: list[np.ndarray] = []
    oscs_all: list[np.ndarray] = []
    bins: list[dict] = []
    for b in range(n_bins):
        rng = rng_for(seed, "holder_bin", mapping.name, b)
        seps = np.exp(rng.uniform(math.log(edges[b]), math.log(edges[b + 1]), per_bin))
        X, Y, valid = _draw_pairs(mapping, region, seps, rng, anchors)
        if not np.any(valid):
            bins.append({"sep_lo": float(edges[b]), "sep_hi": float(edges[b + 1]),
                         "pairs": 0})
            continue
        X, Y = X[valid], Y[valid]
        osc = np.linalg.norm(mapping.evaluate(X) - mapping.evaluate(Y), axis=1)
        sep = np.linalg.norm(X - Y, axis=1)
        seps_all.append(sep)
        oscs_all.append(osc)
        top = int(np.argmax(osc))
        bins.append(
            {"sep_lo": float(edges[b]), "sep_hi": float(edges[b + 1]),
             "pairs": int(osc.size), "max_osc": float(osc[top]),
             "sep_at_max": float(sep[top])}
        )
    sep = np.concatenate(seps_all)
    osc = np.concatenate(oscs_all)

    # The exponent lives in the small-gap regime: above the split threshold
    # the quotient is controlled by compactness alone, and curvature of the
    # image (e.g. angle-doubling maps) bends the log-log cloud there.  The
    # regression therefore uses the bins below gamma, all bins as fallback.
    gamma = 2.0 * gap / 9.0
    usable = [b for b in bins if b.get("max_osc", 0.0) > 0.0]
    small_gap = [b for b in usable if b["sep_at_max"] <= gamma]
    fit_bins = small_gap if len(small_gap) >= 3 else usable
    fit_x = np.array([math.log(b["sep_at_max"]) for b in fit_bins])
    fit_y = np.array([math.log(b["max_osc"]) for b in fit_bins])
    if fit_x.size >= 2:
        slope, _ = np.polyfit(fit_x, fit_y, 1)
        alpha_hat = float(slope)
    else:
        alpha_hat = float("nan")

    alpha_used = alpha_hat if alpha == "auto" else float(alpha)
    with np.errstate(over="ignore"):
        quotients = osc / sep**alpha_used
    l_hat = float(np.max(quotients)) if quotients.size else 0.0
    flagged = not (0.0 < alpha_hat < 1.5) or not math.isfinite(l_hat)
    return HolderEstimate(
        alpha_used=alpha_used,
        l_hat=l_hat,
        alpha_hat=alpha_hat,
        pair_count=int(osc.size),
        region=region,
        gamma=gamma,
        bins=bins,
        flagged=flagged,
    )


def _draw_pairs(
    mapping: MappingSpec,
    region: DomainRegion,
    seps: np.ndarray,
    rng: np.random.Generator,
    anchors: np.ndarray,
    anchor_fraction: float = 1.0 / 3.0,
    max_rounds: int = 50,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Point pairs at prescribed separations, both endpoints inside the region.

    Returns (X, Y, valid).  A fixed fraction of slots put the first endpoint
    at a log-uniform radius around a singular anchor; the rest draw it
    uniformly.  Slots whose second endpoint cannot be kept inside the region
    after ``max_rounds`` redraws are reported invalid.
    """
    m = seps.size
    n = region.n
    X = np.zeros((m, n))
    Y = np.zeros((m, n))
    valid = np.zeros(m, dtype=bool)
    n_anchor = int(m * anchor_fraction) if anchors.size else 0
    anchored = np.zeros(m, dtype=bool)
    anchored[:n_anchor] = True
    for _ in range(max_rounds):
        todo = ~valid
        count = int(todo.sum())
        if count == 0:
            break
        x = np.empty((count, n))
        is_anchor = anchored[todo]
        k_anchor = int(is_anchor.sum())
        if k_anchor:
            which = rng.integers(0, anchors.shape[0], k_anchor)
            radius = seps[todo][is_anchor] * np.exp(rng.uniform(math.log(0.1), 0.0, k_anchor))
            dirs = _unit_directions(rng, k_anchor, n)
            x[is_anchor] = anchors[which] + radius[:, None] * dirs
        if count - k_anchor:
            x[~is_anchor] = region.sample(count - k_anchor, rng)
        u = _unit_directions(rng, count, n)
        y = x + seps[todo][:, None] * u
        ok = region.contains(x) & region.contains(y)
        idx = np.flatnonzero(todo)[ok]
        X[idx] = x[ok]
        Y[idx] = y[ok]
        valid[idx] = True
    return X, Y, valid


def _unit_directions(rng: np.random.Generator, count: int, n: int) -> np.ndarray:
    v = rng.standard_normal((count, n))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


# -- equicontinuity across a family ------------------------------------------------------


@dataclass
class EquicontinuityReport:
    scales: np.ndarray
    moduli: np.ndarray           # mu(r): worst sampled oscillation across the family
    ratios: np.ndarray           # mu(r) / r^alpha_min
    l_shared: float
    alpha_min: float
    member_names: list[str]
    member_energies: list[float]
    monotone_ok: bool
    bound_ok: bool
    passed: bool

    def to_dict(self) -> dict:
        return {
            "scales": [float(s) for s in self.scales],
            "moduli": [float(v) for v in self.moduli],
            "ratios": [float(v) for v in self.ratios],
            "l_shared": float(self.l_shared),
            "alpha_min": float(self.alpha_min),
            "members": self.member_names,
            "member_energies": [float(e) for e in self.member_energies],
            "monotone_ok": self.monotone_ok,
            "bound_ok": self.bound_ok,
            "pass": self.passed,
        }


def energy_over_domain(
    mapping: MappingSpec,
    config: QuadratureConfig = DEFAULT_CONFIG,
    seed: int = 0,
) -> float:
    """Total n-energy of the mapping over its own domain."""
    n = mapping.n

    def g_multi(X: np.ndarray) -> np.ndarray:
        _, opn, _ = differential.batch_differentials(mapping, X, refuse_singular=False)
        return opn[:, None] ** n

    dom = mapping.domain
    if dom.kind == "ball":
        sing = mapping.singular_points
        singular_center = bool(
            sing.size
            and np.linalg.norm(sing - dom.center, axis=1).min() <= differential.SINGULAR_EXCLUSION
        )
        vals, _, _, _ = _ball_radial_multi(
            g_multi, dom.center, dom.radius * (1.0 - 1e-12), n, 1, config, seed,
            singular_center,
        )
        return float(vals[0])
    xi, wts = _gauss_nodes(config.gauss_points)
    axes = [0.5 * (lo + hi) + 0.5 * (hi - lo) * xi for lo, hi in zip(dom.low, dom.high)]
    weights = [0.5 * (hi - lo) * wts for lo, hi in zip(dom.low, dom.high)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    wmesh = np.prod(
        np.stack(np.meshgrid(*weights, indexing="ij"), axis=-1).reshape(-1, n), axis=1
    )
    return float(wmesh @ g_multi(mesh)[:, 0])


def equicontinuity_check(
    family: Sequence[MappingSpec],
    region: DomainRegion,
    scales: Sequence[float],
    energy_bound: float,
    pairs: Sequence[DistortionPair] | None = None,
    config: QuadratureConfig = DEFAULT_CONFIG,
    seed: int = 0,
    pairs_per_scale: int = 2000,
    case2_alpha: float = 0.5,
) -> EquicontinuityReport:
    """Shared modulus of continuity across a family with one energy budget.

    Every member's energy over its domain is verified against the budget
    first (violators are refused).  The family bound combines each member's
    growth constant with the worst predicted exponent; the growth lemma's
    unspecified oscillation factor is taken as one, so the resulting
    L_shared is a calibration-free yardstick rather than a certified bound.
    """
    scales = np.asarray(sorted((float(s) for s in scales), reverse=True))
    if np.any(scales <= 0):
        raise ValueError("scales must be positive")
    member_energies = []
    alphas = []
    constants = []
    for member in family:
        energy = energy_over_domain(member, config=config, seed=seed)
        if energy > energy_bound * (1.0 + 1e-9):
            raise EnergyBoundError(
                f"member {member.name!r} energy {energy:.6g} exceeds bound {energy_bound:.6g}"
            )
        member_energies.append(energy)
        pair = member.declared_distortion
        if pairs is not None:
            pair = pairs[list(family).index(member)]
        if pair is None:
            raise ValueError(f"member {member.name!r} has no distortion pair")
        prediction = predicted_exponent(pair)
        alphas.append(prediction.exponent(fallback=case2_alpha))
        gap = region_gap(region, member.domain)
        if gap <= 0:
            raise ValueError("the compact region must lie strictly inside every domain")
        alpha_arg = case2_alpha if prediction.kind == "any_below_one" else None
        gb = growth_bound(pair, energy_bound, gap, member.n, alpha=alpha_arg)
        constants.append(gb.constant)
    alpha_min = float(min(alphas))
    l_shared = float(max(c ** (1.0 / family[0].n) for c in constants))

    moduli = []
    for i, scale in enumerate(scales):
        worst = 0.0
        for j, member in enumerate(family):
            rng = rng_for(seed, "equicontinuity", member.name, i, j)
            # oscillation grows with separation, so concentrate near the scale
            seps = scale * (0.6 + 0.4 * rng.random(pairs_per_scale))
            anchors = member.singular_points
            if anchors.size:
                anchors = anchors[region.contains(anchors)]
            X, Y, valid = _draw_pairs(member, region, seps, rng, anchors)
            if not np.any(valid):
                continue
            osc = np.linalg.norm(
                member.evaluate(X[valid]) - member.evaluate(Y[valid]), axis=1
            )
            worst = max(worst, float(osc.max()))
        moduli.append(worst)
    moduli = np.asarray(moduli)
    ratios = moduli / scales**alpha_min
    monotone_ok = bool(np.all(np.diff(moduli) <= 1e-9 + 0.02 * moduli[:-1]))
    bound_ok = bool(np.all(moduli <= l_shared * scales**alpha_min))
    return EquicontinuityReport(
        scales=scales,
        moduli=moduli,
        ratios=ratios,
        l_shared=l_shared,
        alpha_min=alpha_min,
        member_names=[m.name for m in family],
        member_energies=member_energies,
        monotone_ok=monotone_ok,
        bound_ok=bound_ok,
        passed=monotone_ok and bound_ok,
    )


# -- pointwise differentiability ------------------------------------------------------


@dataclass
class DifferentiabilityReport:
    """Linearization residuals at shrinking radii around one point."""

    point: np.ndarray
    radii: np.ndarray
    ratios: np.ndarray  # sup |f(x) - f(a) - Df(a)(x - a)| / |x - a| per radius
    op_norm: float
    threshold: float
    decreasing_ok: bool
    small_ok: bool
    passed: bool

    def to_dict(self) -> dict:
        return {
            "point": [float(c) for c in self.point],
            "radii": [float(r) for r in self.radii],
            "ratios": [float(v) for v in self.ratios],
            "op_norm": float(self.op_norm),
            "threshold": float(self.threshold),
            "decreasing_ok": self.decreasing_ok,
            "small_ok": self.small_ok,
            "pass": self.passed,
        }


def default_probe_radii(mapping: MappingSpec, point) -> list[float]:
    """Three decades below a quarter of the local safe radius."""
    point = np.asarray(point, dtype=float)
    rho = mapping.domain.boundary_distance(point)
    d_sing = math.inf
    if mapping.singular_points.size:
        d_sing = float(np.linalg.norm(mapping.singular_points - point, axis=1).min())
    safe = 0.25 * min(rho, d_sing)
    if safe <= 0:
        raise ValueError("point has no interior room for differentiability probes")
    return [safe * 1e-1, safe * 1e-2, safe * 1e-3]


def differentiability_check(
    mapping: MappingSpec,
    point,
    radii: Sequence[float] | None = None,
    samples_per_radius: int = 64,
    seed: int = 0,
) -> DifferentiabilityReport:
    """Probe whether the differential linearizes the mapping at a point.

    Passes when the worst linearization ratio drops by at least 1.5x from
    the coarsest to the finest radius (identically zero residuals, as for
    affine maps, count as passing) and the finest ratio is below
    1e-3 |Df(a)|.  Points within the singular exclusion radius are refused:
    the claim being probed is only an almost-everywhere one.
    """
    point = np.asarray(point, dtype=float)
    sample = differential.sample_differential(mapping, point)
    if radii is None:
        radii = default_probe_radii(mapping, point)
    radii = sorted((float(r) for r in radii), reverse=True)
    if radii[0] >= mapping.domain.boundary_distance(point):
        raise ValueError("largest probe radius leaves the domain")
    f_a = mapping.evaluate(point)
    ratios = []
    for i, r in enumerate(radii):
        rng = rng_for(seed, "differentiability", mapping.name, i)
        dirs = _unit_directions(rng, samples_per_radius, mapping.n)
        x = point + r * dirs
        residual = mapping.evaluate(x) - f_a - (r * dirs) @ sample.matrix.T
        ratios.append(float(np.linalg.norm(residual, axis=1).max() / r))
    ratios = np.asarray(ratios)
    # residuals below the differential's own accuracy are unresolvable: exact
    # formulas leave plain rounding, central differences leave O(h^2)
    floor = 1e-12 * max(1.0, sample.op_norm)
    if sample.provenance.kind == "finite_difference":
        floor = max(floor, 1e3 * sample.provenance.step**2 * max(1.0, sample.op_norm))
    threshold = 1e-3 * sample.op_norm
    decreasing_ok = bool(ratios[0] >= 1.5 * ratios[-1] or ratios[0] <= floor)
    small_ok = bool(ratios[-1] <= threshold)
    return DifferentiabilityReport(
        point=point,
        radii=np.asarray(radii),
        ratios=ratios,
        op_norm=sample.op_norm,
        threshold=threshold,
        decreasing_ok=decreasing_ok,
        small_ok=small_ok,
        passed=decreasing_ok and small_ok,
    )
