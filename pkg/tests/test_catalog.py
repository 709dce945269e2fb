import json

import numpy as np
import pytest

from qrlab import catalog_lookup, load_grid_mapping
from qrlab.catalog import (
    UnknownMappingError,
    catalog_entries,
    parse_map_selector,
    save_grid_sample,
    scaled_mapping,
)
from qrlab.differential import batch_differentials
from qrlab.seeding import rng_for


def brute_force_singular_values(A, directions=1_000_000, seed=0):
    """Oracle: extreme |A xi| over unit vectors gives the top singular value."""
    rng = rng_for(seed, "sv_oracle")
    xi = rng.standard_normal((directions, A.shape[0]))
    xi /= np.linalg.norm(xi, axis=1, keepdims=True)
    norms = np.linalg.norm(xi @ A.T, axis=1)
    return float(norms.min()), float(norms.max())


def test_radial_stretch_value_example():
    mapping = catalog_lookup("radial_stretch", {"alpha": 0.5})
    assert mapping.evaluate([0.25, 0.0]) == pytest.approx([0.5, 0.0])


def test_radial_stretch_singular_values_against_brute_force():
    # at |x| = 0.25, alpha = 0.5: tangential |x|^(alpha-1) = 2, radial alpha*|x|^(alpha-1) = 1
    mapping = catalog_lookup("radial_stretch", {"alpha": 0.5})
    D = mapping.differential(np.array([0.25, 0.0]))
    low, high = brute_force_singular_values(D, directions=1_000_000)
    assert high == pytest.approx(2.0, abs=1e-5)
    assert low == pytest.approx(1.0, abs=1e-5)
    _, opn, jac = batch_differentials(mapping, np.array([[0.25, 0.0]]))
    assert opn[0] == pytest.approx(2.0, abs=1e-12)
    assert jac[0] == pytest.approx(2.0, abs=1e-12)
    # extremal equality in the distortion inequality: |Df|^2 = K1 |J| with K1 = 2
    assert opn[0] ** 2 == pytest.approx(2.0 * abs(jac[0]), abs=1e-12)


def test_identity_contract():
    mapping = catalog_lookup("identity")
    x = np.array([0.3, -0.2])
    assert np.array_equal(mapping.evaluate(x), x)
    assert np.array_equal(mapping.differential(x), np.eye(2))
    assert mapping.declared_distortion.k1 == 1.0
    assert mapping.declared_distortion.k2 == 0.0
    assert mapping.declared_holder == 1.0


def test_winding_contract():
    mapping = catalog_lookup("winding", {"k": 2})
    x = np.array([0.3, 0.0])
    assert mapping.evaluate(x) == pytest.approx([0.3, 0.0])
    D = mapping.differential(x)
    low, high = brute_force_singular_values(D, directions=200_000, seed=1)
    assert high == pytest.approx(2.0, abs=1e-4)
    assert low == pytest.approx(1.0, abs=1e-4)
    _, opn, jac = batch_differentials(mapping, x[None])
    assert jac[0] == pytest.approx(2.0, abs=1e-12)
    assert mapping.declared_distortion.k1 == 2.0


def test_rank_deficient_contract():
    mapping = catalog_lookup("rank_deficient")
    X = mapping.domain.sample(100, rng_for(0, "rankdef"))
    _, opn, jac = batch_differentials(mapping, X)
    assert np.abs(jac).max() == 0.0
    assert np.allclose(opn, np.abs(np.cos(X[:, 0])), atol=1e-12)
    assert mapping.declared_distortion.k1 == 1.0
    assert mapping.declared_distortion.k2 == 1.0


def test_translate_contract():
    mapping = catalog_lookup("translate", {"b1": 0.5, "b2": -0.25})
    assert mapping.evaluate([0.0, 0.0]) == pytest.approx([0.5, -0.25])
    assert np.array_equal(mapping.differential([0.1, 0.1]), np.eye(2))


def test_linear_declared_pair_minimal():
    mapping = catalog_lookup("linear", {"a11": 2.0, "a12": 0.0, "a21": 0.0, "a22": 1.0})
    # |A|^2 / |det A| = 4/2 for diag(2,1)
    assert mapping.declared_distortion.k1 == pytest.approx(2.0)
    assert mapping.declared_distortion.k2 == 0.0


def test_parameter_validation():
    with pytest.raises(UnknownMappingError):
        catalog_lookup("moebius")
    with pytest.raises(ValueError):
        catalog_lookup("radial_stretch", {"alpha": 1.5})
    with pytest.raises(ValueError):
        catalog_lookup("radial_stretch", {"alpha": 0.0})
    with pytest.raises(ValueError):
        catalog_lookup("winding", {"k": 1})
    with pytest.raises(ValueError):
        catalog_lookup("winding", {"k": 2, "n": 3})
    with pytest.raises(ValueError):
        catalog_lookup("radial_stretch", {})
    with pytest.raises(ValueError):
        catalog_lookup("linear", {"a11": 1.0})


def test_alpha_one_degenerates_to_identity():
    mapping = catalog_lookup("radial_stretch", {"alpha": 1.0})
    X = mapping.domain.sample(50, rng_for(1, "alpha1"))
    assert np.allclose(mapping.evaluate(X), X, atol=1e-14)
    assert mapping.singular_points.size == 0


def test_jacobian_sign_constancy(catalog_maps):
    for name, mapping in catalog_maps.items():
        X = mapping.domain.sample(10_000, rng_for(2, "sign", name))
        if mapping.singular_points.size:
            d = np.linalg.norm(
                X[:, None, :] - mapping.singular_points[None, :, :], axis=2
            ).min(axis=1)
            X = X[d > 1e-6]
        _, _, jac = batch_differentials(mapping, X)
        tau = 1e-9 * max(np.abs(jac).max(), 1e-300)
        assert not ((jac > tau).any() and (jac < -tau).any()), name


def test_fd_convergence_ratio_over_catalog(catalog_maps):
    # the declared differential must be the limit of central differences at
    # rate O(h^2): error ratio in [3.5, 4.5] when h halves, away from
    # singular points (skipping points where the error is already roundoff)
    for name, mapping in catalog_maps.items():
        rng = rng_for(3, "fdratio", name)
        checked = 0
        for _ in range(400):
            x = mapping.domain.sample(1, rng)[0]
            rho = mapping.domain.boundary_distance(x)
            if rho < 1e-2:
                continue
            if mapping.singular_points.size:
                if np.linalg.norm(mapping.singular_points - x, axis=1).min() < 0.05:
                    continue
            exact = mapping.differential(x)
            from qrlab.differential import finite_difference_differential

            h = min(1e-3, 0.3 * rho)
            err1 = np.abs(finite_difference_differential(mapping, x, step=h) - exact).max()
            err2 = np.abs(
                finite_difference_differential(mapping, x, step=h / 2) - exact
            ).max()
            if err2 < 1e-11:  # truncation buried in roundoff (affine maps)
                continue
            assert 3.5 <= err1 / err2 <= 4.5, (name, x)
            checked += 1
            if checked >= 100:
                break
        if name in ("radial_stretch", "winding", "rank_deficient"):
            assert checked >= 100, name


def test_scaled_mapping_scales_both_sides():
    mapping = catalog_lookup("radial_stretch", {"alpha": 0.5})
    doubled = scaled_mapping(mapping, 3.0)
    X = np.array([[0.25, 0.1], [0.4, -0.2]])
    _, opn, jac = batch_differentials(mapping, X)
    _, opn2, jac2 = batch_differentials(doubled, X)
    assert np.allclose(opn2**2, 9.0 * opn**2, rtol=1e-12)
    assert np.allclose(np.abs(jac2), 9.0 * np.abs(jac), rtol=1e-12)


def test_catalog_entries_listing():
    rows = catalog_entries()
    names = {r["name"] for r in rows}
    assert names == {"identity", "linear", "radial_stretch", "winding",
                     "rank_deficient", "translate"}
    stretch = next(r for r in rows if r["name"] == "radial_stretch")
    assert stretch["declared_distortion"]["k1"] == pytest.approx(2.0)


def test_selector_parsing():
    name, params = parse_map_selector("radial_stretch:alpha=0.5,n=2")
    assert name == "radial_stretch"
    assert params == {"alpha": 0.5, "n": 2.0}
    with pytest.raises(ValueError):
        parse_map_selector("radial_stretch:alpha")


# -- grid ingestion ----------------------------------------------------------------


def test_grid_roundtrip_identity(tmp_path):
    mapping = catalog_lookup("identity")
    csv_path = tmp_path / "grid.csv"
    meta_path = tmp_path / "grid.json"
    save_grid_sample(mapping, origin=[-1, -1], spacing=[0.1, 0.1], shape=(21, 21),
                     csv_path=csv_path, meta_path=meta_path)
    grid = load_grid_mapping(csv_path, meta_path)
    X = grid.domain.sample(300, rng_for(4, "grid"))
    assert np.abs(grid.evaluate(X) - X).max() < 1e-12
    # interpolation of an affine map is exact, so FD differentials are the identity
    _, opn, jac = batch_differentials(grid, X)
    assert np.abs(opn - 1.0).max() < 1e-6
    assert np.abs(jac - 1.0).max() < 1e-6


def test_grid_rejects_inconsistent_sidecar(tmp_path):
    mapping = catalog_lookup("identity")
    csv_path = tmp_path / "grid.csv"
    meta_path = tmp_path / "grid.json"
    save_grid_sample(mapping, origin=[-1, -1], spacing=[0.1, 0.1], shape=(11, 11),
                     csv_path=csv_path, meta_path=meta_path)
    meta = json.loads(meta_path.read_text())
    meta["origin"] = [0.0, 0.0]  # now disagrees with the stored coordinates
    meta_path.write_text(json.dumps(meta))
    with pytest.raises(ValueError):
        load_grid_mapping(csv_path, meta_path)


def test_grid_shape_mismatch(tmp_path):
    mapping = catalog_lookup("identity")
    csv_path = tmp_path / "grid.csv"
    meta_path = tmp_path / "grid.json"
    save_grid_sample(mapping, origin=[-1, -1], spacing=[0.1, 0.1], shape=(11, 11),
                     csv_path=csv_path, meta_path=meta_path)
    meta = json.loads(meta_path.read_text())
    meta["grid_shape"] = [11, 12]
    meta_path.write_text(json.dumps(meta))
    with pytest.raises(ValueError):
        load_grid_mapping(csv_path, meta_path)
