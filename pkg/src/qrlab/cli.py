"""Command-line front end: catalog listing, analysis runs, fitting, suites.

All output is deterministic for a fixed seed: JSON files are written with
sorted keys and shortest-round-trip floats, CSVs carry the same decimal
renderings, and ``--no-timestamp`` drops the only non-reproducible field.

Exit codes: 0 all checks passed, 1 a check failed, 2 usage or configuration
error, 3 a numerical budget was exhausted before reaching tolerance.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .catalog import (
    MappingSpec,
    catalog_entries,
    catalog_lookup,
    load_grid_mapping,
    parse_map_selector,
)
from .distortion import (
    DistortionPair,
    DistortionSample,
    fit_minimal_distortion,
    samples_from_mapping,
    verify_distortion,
)
from .geometry import DomainRegion, ball, box, region_gap
from .integrals import (
    QuadratureConfig,
    energy_profile,
    fubini_check,
    isoperimetric_check,
)
from .regularity import (
    check_differential_inequality,
    check_morrey_condition,
    check_v_monotone,
    differentiability_check,
    energy_over_domain,
    equicontinuity_check,
    estimate_holder,
    growth_bound,
    monotone_profile,
    predicted_exponent,
)
from .reporting import atomic_write_text, dumps_json, format_float, jsonify
from .suites import SUITES, SuiteOptions, run_suites

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3


class UsageError(ValueError):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qrlab",
        description="Distortion and regularity verification for mappings",
    )
    parser.add_argument("--version", action="version", version=f"qrlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    cat = sub.add_parser("catalog", help="list the mapping catalog")
    cat.add_argument("--dim", type=int, default=None, help="only maps available in this dimension")

    ana = sub.add_parser("analyze", help="run the full check battery on one mapping")
    _common_map_flags(ana)
    ana.add_argument("--center", type=str, default=None, help="profile center, e.g. 0,0")
    ana.add_argument("--compact", type=str, default=None,
                     help="compact subset V, e.g. ball:0,0,0.5")
    ana.add_argument("--radii", type=int, default=24, help="number of profile radii")
    ana.add_argument("--pairs", type=int, default=4000, help="point pairs for the Hölder fit")
    ana.add_argument("--alpha", type=str, default="auto",
                     help="Hölder exponent to test, or 'auto'")
    ana.add_argument("--out", type=str, default=None, help="write the JSON report here")
    ana.add_argument("--csv", type=str, default=None, help="write the profile CSV here")

    fit = sub.add_parser("fit", help="fit the minimal distortion frontier")
    fit.add_argument("--samples", type=str, default=None,
                     help="CSV of samples with columns a,b")
    fit.add_argument("--map", dest="map_selector", type=str, default=None,
                     help="catalog mapping, e.g. radial_stretch:alpha=0.5")
    fit.add_argument("--count", type=int, default=4000, help="samples drawn from the map")
    fit.add_argument("--seed", type=int, default=7)
    fit.add_argument("--out", type=str, default=None, help="frontier JSON path")
    fit.add_argument("--csv", type=str, default=None, help="frontier CSV path (K1, K2_min)")

    ver = sub.add_parser("verify", help="run named verification suites")
    _common_map_flags(ver)
    ver.add_argument("--suite", type=str, default="all",
                     help="'all' or comma-separated suite names")
    ver.add_argument("--radii", type=int, default=16)
    ver.add_argument("--pairs", type=int, default=4000)
    ver.add_argument("--alpha", type=str, default="auto")
    ver.add_argument("--out", type=str, default=None, help="write the JSON report here")
    return parser


def _common_map_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--map", dest="map_selector", type=str, default=None,
                     help="catalog mapping, e.g. radial_stretch:alpha=0.5")
    sub.add_argument("--grid", type=str, default=None, help="grid CSV for a sampled mapping")
    sub.add_argument("--meta", type=str, default=None, help="JSON sidecar for --grid")
    sub.add_argument("--omega", type=str, default=None,
                     help="analysis domain, e.g. ball:0,0,1 or box:-1,-1;1,1")
    sub.add_argument("--k1", type=float, default=None, help="override pair: K1")
    sub.add_argument("--k2", type=float, default=None, help="override pair: K2")
    sub.add_argument("--seed", type=int, default=7)
    sub.add_argument("--tol-rel", type=float, default=None,
                     help="relative quadrature tolerance override")
    sub.add_argument("--no-timestamp", action="store_true",
                     help="omit the timestamp so reports are byte-reproducible")


def parse_region(text: str) -> DomainRegion:
    kind, _, rest = text.partition(":")
    try:
        if kind == "ball":
            *center, radius = [float(v) for v in rest.split(",")]
            return ball(center, radius)
        if kind == "box":
            lo_text, _, hi_text = rest.partition(";")
            lo = [float(v) for v in lo_text.split(",")]
            hi = [float(v) for v in hi_text.split(",")]
            return box(lo, hi)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"cannot parse region {text!r}: {exc}") from exc
    raise UsageError(f"unknown region kind in {text!r} (expected ball: or box:)")


def _resolve_mapping(args) -> MappingSpec:
    domain = parse_region(args.omega) if getattr(args, "omega", None) else None
    if args.map_selector and args.grid:
        raise UsageError("--map and --grid are mutually exclusive")
    if args.map_selector:
        name, params = parse_map_selector(args.map_selector)
        try:
            return catalog_lookup(name, params, domain=domain)
        except (KeyError, ValueError) as exc:
            raise UsageError(str(exc)) from exc
    if args.grid:
        if not args.meta:
            raise UsageError("--grid needs --meta with the JSON sidecar")
        if domain is not None:
            raise UsageError("--omega is not supported for grid mappings (the grid box is the domain)")
        try:
            return load_grid_mapping(args.grid, args.meta)
        except (OSError, ValueError, KeyError) as exc:
            raise UsageError(f"cannot load grid mapping: {exc}") from exc
    raise UsageError("select a mapping with --map or --grid/--meta")


def _pair_override(args) -> DistortionPair | None:
    if args.k1 is None and args.k2 is None:
        return None
    if args.k1 is None:
        raise UsageError("--k2 without --k1 does not define a pair")
    try:
        return DistortionPair(args.k1, args.k2 if args.k2 is not None else 0.0)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _quadrature_config(args, mc_samples: int = 16_384) -> QuadratureConfig:
    if getattr(args, "tol_rel", None):
        return QuadratureConfig(rel_tol=args.tol_rel, mc_samples=mc_samples)
    return QuadratureConfig(mc_samples=mc_samples)


def _parse_alpha(text: str):
    if text == "auto":
        return "auto"
    try:
        value = float(text)
    except ValueError as exc:
        raise UsageError(f"--alpha must be a number or 'auto', got {text!r}") from exc
    if not (0.0 < value <= 1.0):
        raise UsageError(f"--alpha must lie in (0, 1], got {value}")
    return value


# -- subcommands ------------------------------------------------------------------


def cmd_catalog(args) -> int:
    rows = catalog_entries()
    if args.dim is not None:
        rows = [r for r in rows if _available_in_dim(r["name"], args.dim)]
    header = f"{'name':<15} {'n':>2}  {'K1':>8} {'K2':>6} {'alpha':>6}  description"
    print(header)
    print("-" * len(header))
    for row in rows:
        pair = row["declared_distortion"]
        alpha = row["declared_holder"]
        print(
            f"{row['name']:<15} {row['n']:>2}  {pair['k1']:>8.4g} {pair['k2']:>6.4g} "
            f"{alpha if alpha is not None else '-':>6}  {row['description']}"
        )
    return EXIT_OK


def _available_in_dim(name: str, dim: int) -> bool:
    try:
        catalog_lookup(name, {"n": dim} if name not in ("winding", "linear") else (
            {"k": 2, "n": dim} if name == "winding" else
            {"n": dim, **{f"a{i+1}{j+1}": float(i == j) for i in range(dim) for j in range(dim)}}
        ))
        return True
    except ValueError:
        return False


def cmd_analyze(args) -> int:
    mapping = _resolve_mapping(args)
    config = _quadrature_config(args)
    seed = args.seed
    alpha = _parse_alpha(args.alpha)

    center = (np.array([float(v) for v in args.center.split(",")])
              if args.center else mapping.domain.centroid)
    if not mapping.domain.contains(center):
        raise UsageError("--center lies outside the mapping domain")
    rho = mapping.domain.boundary_distance(center)
    if rho <= 0:
        raise UsageError("--center must be interior to the domain")
    compact = parse_region(args.compact) if args.compact else ball(center, rho / 2.0)
    gap = region_gap(compact, mapping.domain)
    if gap <= 0:
        raise UsageError("the compact set V must lie strictly inside the domain")

    override = _pair_override(args)
    samples = samples_from_mapping(mapping, compact, max(args.pairs // 2, 500), seed)
    frontier = fit_minimal_distortion(samples)
    if override is not None:
        pair = override
    elif mapping.declared_distortion is not None:
        pair = mapping.declared_distortion
    else:
        k1 = frontier.minimal_k1(0.0)
        pair = (DistortionPair(k1, 0.0) if math.isfinite(k1) and k1 > 0
                else DistortionPair(1.0, frontier.minimal_k2(1.0)))

    radii = np.geomspace(1e-3 * gap, (2.0 / 3.0) * gap * (1.0 - 1e-6), args.radii)
    profile = energy_profile(mapping, center, radii, config=config, seed=seed)
    mono = monotone_profile(profile, pair)

    checks = {}
    dist_report = verify_distortion(mapping, compact, pair,
                                    sample_count=max(args.pairs, 1000), seed=seed)
    checks["distortion"] = dist_report.to_dict()
    checks["sign"] = {
        "check": "sign",
        "pass": dist_report.sign_consistent,
        "positive": dist_report.positive_jacobians,
        "negative": dist_report.negative_jacobians,
        "tolerance": dist_report.sign_tolerance,
    }
    checks["v_monotone"] = check_v_monotone(mono).to_dict()
    checks["differential_inequality"] = check_differential_inequality(profile, pair).to_dict()
    checks["isoperimetric"] = isoperimetric_check(profile).to_dict()
    checks["fubini"] = fubini_check(profile).to_dict()

    energy = energy_over_domain(mapping, config=config, seed=seed)
    prediction = predicted_exponent(pair)
    bound_alpha = alpha if isinstance(alpha, float) else 0.5
    bound = growth_bound(pair, energy, gap, mapping.n,
                         alpha=bound_alpha if prediction.kind == "any_below_one" else None)
    checks["morrey"] = check_morrey_condition(profile, bound).to_dict()

    holder = estimate_holder(mapping, compact, alpha=alpha,
                             pair_count=args.pairs, seed=seed)
    checks["holder"] = {"check": "holder", "pass": not holder.flagged,
                        **holder.to_dict()}

    equi = equicontinuity_check(
        [mapping], compact,
        scales=[compact.diameter * f for f in (0.2, 0.1, 0.05, 0.025)],
        energy_bound=energy * (1.0 + 1e-6), pairs=[pair], config=config, seed=seed,
        pairs_per_scale=max(args.pairs // 4, 500),
    )
    checks["equicontinuity"] = equi.to_dict()
    checks["equicontinuity"]["check"] = "equicontinuity"

    probe = center
    if mapping.singular_points.size:
        d_sing = float(np.linalg.norm(mapping.singular_points - center, axis=1).min())
        if d_sing < 1e-3:
            from .distortion import draw_sample_points

            probe = draw_sample_points(mapping, compact, 1, seed)[0]
    diff_report = differentiability_check(mapping, probe, seed=seed)
    checks["differentiability"] = diff_report.to_dict()
    checks["differentiability"]["check"] = "differentiability"

    all_pass = all(
        bool(c.get("pass", True)) for c in checks.values()
    )
    budget_hit = profile.budget_exhausted

    config_echo = {
        "argv": _echo_argv(args, "analyze"),
        "map": mapping.to_dict(),
        "center": [float(c) for c in center],
        "compact": compact.to_dict(),
        "pair": pair.to_dict(),
        "alpha": alpha if alpha == "auto" else float(alpha),
        "radii": args.radii,
        "pairs": args.pairs,
        "seed": seed,
        "tol_rel": config.rel_tol,
    }
    report = {
        "schema": 1,
        "version": __version__,
        "config": config_echo,
        "profile": profile.to_dict(),
        "monotone_profile": mono.to_dict(),
        "frontier": frontier.to_dict(),
        "fitted_minimal_k1_at_zero": frontier.minimal_k1(0.0),
        "exponents": {
            "predicted": prediction.to_dict(),
            "alpha_hat": holder.alpha_hat,
            "l_hat": holder.l_hat,
        },
        "checks": checks,
        "pass": all_pass,
        "budget_exhausted": budget_hit,
    }
    if not args.no_timestamp:
        report["timestamp"] = datetime.now(timezone.utc).isoformat()

    if args.out:
        atomic_write_text(args.out, dumps_json(report))
    if args.csv:
        atomic_write_text(args.csv, _profile_csv(profile, mono))

    print(f"mapping: {mapping.name}  pair: (K1={pair.k1:g}, K2={pair.k2:g})")
    pred_text = prediction.value if prediction.value is not None else "<1"
    print(f"predicted exponent: {pred_text}  alpha_hat: {holder.alpha_hat:.4f}")
    for name, payload in checks.items():
        print(f"  {name:<24} {'PASS' if payload.get('pass', True) else 'FAIL'}")
    if budget_hit:
        print("warning: a quadrature budget was exhausted; verdicts may be loose")
        return EXIT_BUDGET
    return EXIT_OK if all_pass else EXIT_CHECK_FAILED


def _echo_argv(args, command: str) -> list[str]:
    argv = [command]
    skip = {"command"}
    for key, value in sorted(vars(args).items()):
        if key in skip or value in (None, False):
            continue
        flag = "--" + key.replace("_", "-")
        if key == "map_selector":
            flag = "--map"
        if value is True:
            argv.append(flag)
        else:
            argv.extend([flag, str(value)])
    return argv


def _profile_csv(profile, mono) -> str:
    header, rows = profile.csv_rows(extra=mono.csv_extra())
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(v) for v in row])
    return buf.getvalue()


def cmd_fit(args) -> int:
    if args.samples:
        samples = _read_sample_csv(args.samples)
    elif args.map_selector:
        name, params = parse_map_selector(args.map_selector)
        try:
            mapping = catalog_lookup(name, params)
        except (KeyError, ValueError) as exc:
            raise UsageError(str(exc)) from exc
        samples = samples_from_mapping(mapping, mapping.domain, args.count, args.seed)
    else:
        raise UsageError("fit needs --samples or --map")
    frontier = fit_minimal_distortion(samples)
    payload = {
        "schema": 1,
        "version": __version__,
        "sample_count": len(samples),
        "frontier": frontier.to_dict(),
        "minimal_k1_at_zero": frontier.minimal_k1(0.0),
    }
    if args.out:
        atomic_write_text(args.out, dumps_json(payload))
    if args.csv:
        atomic_write_text(args.csv, _frontier_csv(frontier))
    k1 = frontier.minimal_k1(0.0)
    print(f"samples: {len(samples)}  minimal K1 at K2=0: "
          f"{'inf' if math.isinf(k1) else format_float(k1)}")
    for k1_bp, k2_bp in frontier.breakpoints:
        print(f"  breakpoint: K1={format_float(k1_bp)} K2={format_float(k2_bp)}")
    return EXIT_OK


def _read_sample_csv(path) -> list[DistortionSample]:
    samples = []
    try:
        with open(path, newline="") as fh:
            for i, row in enumerate(csv.reader(fh)):
                if not row:
                    continue
                try:
                    a, b = float(row[0]), float(row[1])
                except (ValueError, IndexError):
                    if i == 0:
                        continue  # header
                    raise UsageError(f"bad sample row {i + 1} in {path}")
                samples.append(DistortionSample(a=a, b=b))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    if not samples:
        raise UsageError(f"no samples found in {path}")
    return samples


def _frontier_csv(frontier) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["K1", "K2_min"])
    k1_grid: list[float] = []
    start = frontier.pieces[0].k1_lo
    k1_grid.append(max(start, 1e-3))
    for k1_bp, _ in frontier.breakpoints:
        k1_grid.append(k1_bp)
    tail = frontier.pieces[-1].k1_lo
    k1_grid.append(tail + 1.0 if math.isfinite(tail) and tail > 0 else k1_grid[-1] + 1.0)
    for k1 in sorted(set(k1_grid)):
        if k1 <= 0:
            continue
        writer.writerow([format_float(k1), format_float(frontier.minimal_k2(k1))])
    return buf.getvalue()


def cmd_verify(args) -> int:
    names = (sorted(SUITES) if args.suite == "all"
             else [s.strip() for s in args.suite.split(",") if s.strip()])
    for name in names:
        if name not in SUITES:
            raise UsageError(f"unknown suite {name!r}; available: {', '.join(sorted(SUITES))}")
    mapping = None
    if args.map_selector or args.grid:
        mapping = _resolve_mapping(args)
    opts = SuiteOptions(
        seed=args.seed,
        mapping=mapping,
        pair=_pair_override(args),
        alpha=_parse_alpha(args.alpha),
        radii_count=args.radii,
        pair_count=args.pairs,
        config=_quadrature_config(args),
    )
    results = run_suites(names, opts)
    all_pass = all(r.passed for r in results)
    budget_hit = any(r.budget_exhausted for r in results)
    report = {
        "schema": 1,
        "version": __version__,
        "config": {"argv": _echo_argv(args, "verify"), "seed": args.seed,
                   "suites": names},
        "results": [r.to_dict() for r in results],
        "pass": all_pass,
        "budget_exhausted": budget_hit,
    }
    if not args.no_timestamp:
        report["timestamp"] = datetime.now(timezone.utc).isoformat()
    if args.out:
        atomic_write_text(args.out, dumps_json(report))
    for result in results:
        line = f"{result.name:<24} {'PASS' if result.passed else 'FAIL'}"
        if result.name == "v-monotone" and not result.passed:
            worst = max(
                (row.get("worst_decrement", 0.0) for row in result.details["per_mapping"]),
                default=0.0,
            )
            line += f"  (v decreasing, worst decrement {worst:.3e})"
        print(line)
    if budget_hit:
        print("warning: a quadrature budget was exhausted; verdicts may be loose")
        return EXIT_BUDGET
    return EXIT_OK if all_pass else EXIT_CHECK_FAILED


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        if args.command == "catalog":
            return cmd_catalog(args)
        if args.command == "analyze":
            return cmd_analyze(args)
        if args.command == "fit":
            return cmd_fit(args)
        if args.command == "verify":
            return cmd_verify(args)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
