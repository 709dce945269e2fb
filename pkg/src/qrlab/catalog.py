"""Catalog of analytic mappings with hand-coded exact differentials.

Every entry evaluates in closed form, carries its exact differential where
one exists, and declares the minimal known distortion pair and (when known)
its true Hölder exponent on compact subsets.  These serve as ground-truth
oracles for the quadrature, fitting and regularity checks.

Grid-sampled black-box mappings are ingested from a CSV of node values plus
a JSON sidecar and evaluated by multilinear interpolation.
"""
from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .distortion import DistortionPair
from .geometry import DomainRegion, ball, box


class UnknownMappingError(KeyError):
    """Catalog lookup with a name that is not registered."""


@dataclass(frozen=True)
class MappingSpec:
    """An evaluable mapping f: domain subset of R^n -> R^n.

    ``evaluate_fn`` and ``differential_fn`` take batches of shape (m, n);
    the differential returns (m, n, n) with row i of each matrix holding
    the gradient of component i.  Both are pure, so concurrent callers are
    safe.  ``singular_points`` lists where the exact differential is
    undefined; samplers stay clear of a small ball around each.
    """

    name: str
    n: int
    domain: DomainRegion
    evaluate_fn: Callable[[np.ndarray], np.ndarray]
    differential_fn: Callable[[np.ndarray], np.ndarray] | None = None
    declared_distortion: DistortionPair | None = None
    declared_holder: float | None = None
    singular_points: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))
    params: Mapping[str, float] = field(default_factory=dict)

    @property
    def has_exact_differential(self) -> bool:
        return self.differential_fn is not None

    def evaluate(self, points) -> np.ndarray:
        single = np.asarray(points).ndim == 1
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = self.evaluate_fn(pts)
        return out[0] if single else out

    def differential(self, points) -> np.ndarray:
        if self.differential_fn is None:
            raise ValueError(f"mapping {self.name!r} has no exact differential")
        single = np.asarray(points).ndim == 1
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = self.differential_fn(pts)
        return out[0] if single else out

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "domain": self.domain.to_dict(),
            "params": {k: float(v) for k, v in self.params.items()},
            "declared_distortion": (
                self.declared_distortion.to_dict() if self.declared_distortion else None
            ),
            "declared_holder": (
                float(self.declared_holder) if self.declared_holder is not None else None
            ),
            "singular_points": [[float(c) for c in p] for p in self.singular_points],
            "exact_differential": self.has_exact_differential,
        }


def _no_singular(n: int) -> np.ndarray:
    return np.empty((0, n))


# -- catalog builders --------------------------------------------------------


def _build_identity(params: dict, domain: DomainRegion | None) -> MappingSpec:
    n = int(params.pop("n", 2))
    dom = domain or ball(np.zeros(n), 1.0)
    eye = np.eye(n)
    return MappingSpec(
        name="identity",
        n=n,
        domain=dom,
        evaluate_fn=lambda X: X.copy(),
        differential_fn=lambda X: np.broadcast_to(eye, (X.shape[0], n, n)).copy(),
        declared_distortion=DistortionPair(1.0, 0.0),
        declared_holder=1.0,
        singular_points=_no_singular(n),
        params={"n": n},
    )


def _build_translate(params: dict, domain: DomainRegion | None) -> MappingSpec:
    n = int(params.pop("n", 2))
    offset = np.array([float(params.pop(f"b{i + 1}", 0.0)) for i in range(n)])
    if params:
        raise ValueError(f"unknown translate parameters: {sorted(params)}")
    dom = domain or ball(np.zeros(n), 1.0)
    eye = np.eye(n)
    return MappingSpec(
        name="translate",
        n=n,
        domain=dom,
        evaluate_fn=lambda X: X + offset,
        differential_fn=lambda X: np.broadcast_to(eye, (X.shape[0], n, n)).copy(),
        declared_distortion=DistortionPair(1.0, 0.0),
        declared_holder=1.0,
        singular_points=_no_singular(n),
        params={"n": n, **{f"b{i + 1}": float(b) for i, b in enumerate(offset)}},
    )


def _build_linear(params: dict, domain: DomainRegion | None) -> MappingSpec:
    n = int(params.pop("n", 2))
    A = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            key = f"a{i + 1}{j + 1}"
            if key not in params:
                raise ValueError(f"linear map needs entry {key}")
            A[i, j] = float(params.pop(key))
    if params:
        raise ValueError(f"unknown linear parameters: {sorted(params)}")
    if not np.all(np.isfinite(A)):
        raise ValueError("linear map entries must be finite")
    dom = domain or ball(np.zeros(n), 1.0)
    from .differential import batch_jacobian_det, batch_operator_norm

    opn = float(batch_operator_norm(A[None])[0])
    det = float(batch_jacobian_det(A[None])[0])
    if det != 0.0:
        declared = DistortionPair(opn**n / abs(det), 0.0)
    else:
        declared = DistortionPair(1.0, opn**n)
    return MappingSpec(
        name="linear",
        n=n,
        domain=dom,
        evaluate_fn=lambda X: X @ A.T,
        differential_fn=lambda X: np.broadcast_to(A, (X.shape[0], n, n)).copy(),
        declared_distortion=declared,
        declared_holder=1.0,
        singular_points=_no_singular(n),
        params={"n": n, **{f"a{i + 1}{j + 1}": float(A[i, j]) for i in range(n) for j in range(n)}},
    )


def _build_radial_stretch(params: dict, domain: DomainRegion | None) -> MappingSpec:
    if "alpha" not in params:
        raise ValueError("radial_stretch needs parameter alpha")
    alpha = float(params.pop("alpha"))
    n = int(params.pop("n", 2))
    if params:
        raise ValueError(f"unknown radial_stretch parameters: {sorted(params)}")
    # alpha = 1 is the identity limit and is accepted so stretch families
    # can include their Lipschitz endpoint
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"radial_stretch needs alpha in (0, 1], got {alpha}")
    dom = domain or ball(np.zeros(n), 1.0)

    def evaluate(X: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(X, axis=1)
        scale = np.where(r > 0.0, r ** (alpha - 1.0), 0.0)
        return X * scale[:, None]

    def diff(X: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(X, axis=1)
        unit = X / np.where(r > 0.0, r, 1.0)[:, None]
        outer = unit[:, :, None] * unit[:, None, :]
        scale = r ** (alpha - 1.0)
        eye = np.eye(n)
        return scale[:, None, None] * (eye + (alpha - 1.0) * outer)

    singular = _no_singular(n) if alpha == 1.0 else np.zeros((1, n))
    return MappingSpec(
        name="radial_stretch",
        n=n,
        domain=dom,
        evaluate_fn=evaluate,
        differential_fn=diff,
        declared_distortion=DistortionPair(1.0 / alpha, 0.0),
        declared_holder=alpha,
        singular_points=singular,
        params={"alpha": alpha, "n": n},
    )


def _build_winding(params: dict, domain: DomainRegion | None) -> MappingSpec:
    if "k" not in params:
        raise ValueError("winding needs parameter k")
    k = params.pop("k")
    n = int(params.pop("n", 2))
    if params:
        raise ValueError(f"unknown winding parameters: {sorted(params)}")
    if n != 2:
        raise ValueError("winding is defined for n = 2 only")
    if float(k) != int(k) or int(k) < 2:
        raise ValueError(f"winding needs an integer turn count k >= 2, got {k}")
    k = int(k)
    dom = domain or ball(np.zeros(2), 1.0)

    def evaluate(X: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(X, axis=1)
        theta = np.arctan2(X[:, 1], X[:, 0])
        return np.stack([r * np.cos(k * theta), r * np.sin(k * theta)], axis=1)

    def diff(X: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(X, axis=1)
        theta = np.arctan2(X[:, 1], X[:, 0])
        ck, sk = np.cos(k * theta), np.sin(k * theta)
        radial = np.stack([ck, sk], axis=1)  # d f / d r
        tangent = k * np.stack([-sk, ck], axis=1)  # (1/r) d f / d theta
        unit = X / np.where(r > 0.0, r, 1.0)[:, None]
        perp = np.stack([-unit[:, 1], unit[:, 0]], axis=1)
        return radial[:, :, None] * unit[:, None, :] + tangent[:, :, None] * perp[:, None, :]

    return MappingSpec(
        name="winding",
        n=2,
        domain=dom,
        evaluate_fn=evaluate,
        differential_fn=diff,
        declared_distortion=DistortionPair(float(k), 0.0),
        declared_holder=1.0,
        singular_points=np.zeros((1, 2)),
        params={"k": float(k), "n": 2},
    )


def _build_rank_deficient(params: dict, domain: DomainRegion | None) -> MappingSpec:
    n = int(params.pop("n", 2))
    if params:
        raise ValueError(f"unknown rank_deficient parameters: {sorted(params)}")
    if n != 2:
        raise ValueError("rank_deficient is defined for n = 2 only")
    dom = domain or box([-1.0, -1.0], [1.0, 1.0])

    def evaluate(X: np.ndarray) -> np.ndarray:
        out = np.zeros_like(X)
        out[:, 0] = np.sin(X[:, 0])
        return out

    def diff(X: np.ndarray) -> np.ndarray:
        D = np.zeros((X.shape[0], 2, 2))
        D[:, 0, 0] = np.cos(X[:, 0])
        return D

    return MappingSpec(
        name="rank_deficient",
        n=2,
        domain=dom,
        evaluate_fn=evaluate,
        differential_fn=diff,
        declared_distortion=DistortionPair(1.0, 1.0),
        declared_holder=1.0,
        singular_points=_no_singular(2),
        params={"n": 2},
    )


_BUILDERS: dict[str, Callable] = {
    "identity": _build_identity,
    "linear": _build_linear,
    "radial_stretch": _build_radial_stretch,
    "winding": _build_winding,
    "rank_deficient": _build_rank_deficient,
    "translate": _build_translate,
}

_DESCRIPTIONS = {
    "identity": "f(x) = x",
    "linear": "f(x) = A x, entries a11..ann",
    "radial_stretch": "f(x) = x |x|^(alpha-1), alpha in (0, 1]",
    "winding": "polar (r, theta) -> (r, k theta), n = 2",
    "rank_deficient": "f(x1, x2) = (sin x1, 0), n = 2",
    "translate": "f(x) = x + b, offsets b1..bn",
}


def catalog_names() -> list[str]:
    return sorted(_BUILDERS)


def catalog_lookup(
    name: str,
    params: Mapping[str, float] | None = None,
    domain: DomainRegion | None = None,
) -> MappingSpec:
    """Build a catalog mapping by name; params are copied and validated."""
    if name not in _BUILDERS:
        raise UnknownMappingError(
            f"unknown mapping {name!r}; available: {', '.join(catalog_names())}"
        )
    spec = _BUILDERS[name](dict(params or {}), domain)
    spec.singular_points.setflags(write=False)
    return spec


def catalog_entries() -> list[dict]:
    """Metadata rows for the CLI listing (defaults, declared pair and exponent)."""
    rows = []
    for name in catalog_names():
        defaults = {"radial_stretch": {"alpha": 0.5}, "winding": {"k": 2},
                    "linear": {"a11": 1.0, "a12": 0.0, "a21": 0.0, "a22": 1.0}}.get(name, {})
        spec = catalog_lookup(name, defaults)
        rows.append(
            {
                "name": name,
                "description": _DESCRIPTIONS[name],
                "n": spec.n,
                "params": dict(defaults),
                "declared_distortion": spec.declared_distortion.to_dict(),
                "declared_holder": spec.declared_holder,
            }
        )
    return rows


def parse_map_selector(selector: str) -> tuple[str, dict]:
    """Parse a CLI selector like ``radial_stretch:alpha=0.5,n=2``."""
    name, _, rest = selector.partition(":")
    params: dict[str, float] = {}
    if rest:
        for item in rest.split(","):
            key, _, value = item.partition("=")
            if not key or not value:
                raise ValueError(f"bad map parameter {item!r} in {selector!r}")
            params[key.strip()] = float(value)
    return name.strip(), params


def scaled_mapping(spec: MappingSpec, factor: float) -> MappingSpec:
    """The mapping x -> factor * f(x), keeping domain and singular set."""
    diff_fn = None
    if spec.differential_fn is not None:
        diff_fn = lambda X: factor * spec.differential_fn(X)  # noqa: E731
    return MappingSpec(
        name=f"{spec.name}_scaled",
        n=spec.n,
        domain=spec.domain,
        evaluate_fn=lambda X: factor * spec.evaluate_fn(X),
        differential_fn=diff_fn,
        declared_distortion=None,
        declared_holder=spec.declared_holder,
        singular_points=spec.singular_points,
        params=dict(spec.params),
    )


# -- grid-sampled mappings -----------------------------------------------------


def load_grid_mapping(csv_path, meta_path) -> MappingSpec:
    """Ingest a grid-sampled mapping: CSV rows x1..xn,f1..fn + JSON sidecar.

    The sidecar holds {n, grid_shape, spacing, origin}; rows run in row-major
    order over the grid indices and their coordinates are cross-checked
    against the sidecar.  Evaluation between nodes is multilinear.
    """
    meta = json.loads(Path(meta_path).read_text())
    n = int(meta["n"])
    shape = tuple(int(s) for s in meta["grid_shape"])
    spacing = np.broadcast_to(np.asarray(meta["spacing"], dtype=float), (n,)).copy()
    origin = np.asarray(meta["origin"], dtype=float)
    if len(shape) != n or origin.shape != (n,):
        raise ValueError("grid sidecar is inconsistent with its dimension")
    if any(s < 2 for s in shape):
        raise ValueError("grid needs at least 2 nodes per axis")
    if np.any(spacing <= 0):
        raise ValueError("grid spacing must be positive")

    data = _read_numeric_csv(csv_path, 2 * n)
    count = int(np.prod(shape))
    if data.shape[0] != count:
        raise ValueError(f"expected {count} grid rows, found {data.shape[0]}")
    coords, values = data[:, :n], data[:, n:]
    idx = np.stack(np.meshgrid(*[np.arange(s) for s in shape], indexing="ij"), axis=-1)
    expected = origin + idx.reshape(-1, n) * spacing
    if not np.allclose(coords, expected, atol=1e-9 * float(spacing.max()), rtol=0.0):
        raise ValueError("grid node coordinates disagree with the sidecar")
    table = values.reshape(shape + (n,))

    high = origin + (np.array(shape) - 1) * spacing
    dom = box(origin, high)
    corner_masks = np.array(list(itertools.product((0, 1), repeat=n)))

    def evaluate(X: np.ndarray) -> np.ndarray:
        U = (X - origin) / spacing
        cell = np.clip(np.floor(U).astype(int), 0, np.array(shape) - 2)
        frac = np.clip(U - cell, 0.0, 1.0)
        out = np.zeros((X.shape[0], n))
        for mask in corner_masks:
            weight = np.prod(np.where(mask, frac, 1.0 - frac), axis=1)
            flat = np.ravel_multi_index(tuple((cell + mask).T), shape)
            out += weight[:, None] * table.reshape(-1, n)[flat]
        return out

    return MappingSpec(
        name=f"grid:{Path(csv_path).stem}",
        n=n,
        domain=dom,
        evaluate_fn=evaluate,
        differential_fn=None,
        singular_points=_no_singular(n),
        params={"n": n},
    )


def save_grid_sample(mapping: MappingSpec, origin, spacing, shape, csv_path, meta_path) -> None:
    """Sample a mapping onto a regular grid and write the CSV + sidecar pair."""
    n = mapping.n
    origin = np.asarray(origin, dtype=float)
    spacing = np.broadcast_to(np.asarray(spacing, dtype=float), (n,)).copy()
    shape = tuple(int(s) for s in shape)
    idx = np.stack(np.meshgrid(*[np.arange(s) for s in shape], indexing="ij"), axis=-1)
    coords = origin + idx.reshape(-1, n) * spacing
    values = mapping.evaluate(coords)
    header = [f"x{i + 1}" for i in range(n)] + [f"f{i + 1}" for i in range(n)]
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in np.hstack([coords, values]):
            writer.writerow([repr(float(v)) for v in row])
    meta = {
        "n": n,
        "grid_shape": list(shape),
        "spacing": [float(s) for s in spacing],
        "origin": [float(o) for o in origin],
    }
    Path(meta_path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _read_numeric_csv(path, expected_cols: int) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for i, row in enumerate(reader):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                if i == 0:
                    continue  # header line
                raise ValueError(f"non-numeric CSV row {i + 1} in {path}")
    data = np.asarray(rows, dtype=float)
    if data.ndim != 2 or data.shape[1] != expected_cols:
        raise ValueError(f"expected {expected_cols} columns in {path}")
    return data
