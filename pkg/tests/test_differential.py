import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrlab import catalog_lookup, jacobian_det, operator_norm, sample_differential
from qrlab.differential import (
    NonFiniteMatrixError,
    SingularPointError,
    batch_jacobian_det,
    batch_operator_norm,
    finite_difference_differential,
)
from qrlab.seeding import rng_for


def brute_force_opnorm(A, directions=100_000, seed=0):
    """Independent oracle: maximize |A xi| over random unit vectors."""
    rng = rng_for(seed, "brute_opnorm")
    xi = rng.standard_normal((directions, A.shape[0]))
    xi /= np.linalg.norm(xi, axis=1, keepdims=True)
    return float(np.linalg.norm(xi @ np.asarray(A, float).T, axis=1).max())


def gram_eigen_opnorm(A):
    """Second oracle: square root of the top eigenvalue of A^T A."""
    A = np.asarray(A, float)
    return float(np.sqrt(np.linalg.eigvalsh(A.T @ A).max()))


def test_operator_norm_diagonal():
    assert operator_norm([[3.0, 0.0], [0.0, 1.0]]) == 3.0


def test_operator_norm_identity():
    assert operator_norm(np.eye(2)) == 1.0


def test_operator_norm_shear_frozen_value():
    # sqrt((3 + sqrt 5)/2), frozen after checking both oracles below
    A = [[1.0, 1.0], [0.0, 1.0]]
    expected = 1.6180339887498949
    assert operator_norm(A) == pytest.approx(expected, abs=1e-12)
    assert gram_eigen_opnorm(A) == pytest.approx(expected, abs=1e-12)
    brute = brute_force_opnorm(np.array(A), directions=1_000_000)
    assert brute <= expected + 1e-9
    assert brute >= expected - 1e-3


@pytest.mark.parametrize("n", [2, 3])
def test_brute_force_oracle_agreement(n):
    rng = rng_for(1, "oracle_mats", n)
    for _ in range(100):
        A = rng.standard_normal((n, n))
        top = operator_norm(A)
        brute = brute_force_opnorm(A, directions=100_000, seed=3)
        assert brute <= top + 1e-9
        assert brute >= top - 1e-3
        assert top == pytest.approx(gram_eigen_opnorm(A), rel=1e-11)


@pytest.mark.parametrize("n", [4, 5])
def test_jacobi_path_against_gram_oracle(n):
    rng = rng_for(2, "jacobi_mats", n)
    for _ in range(50):
        A = rng.standard_normal((n, n))
        assert operator_norm(A) == pytest.approx(gram_eigen_opnorm(A), rel=1e-11)


def test_non_finite_refused():
    with pytest.raises(NonFiniteMatrixError):
        operator_norm([[np.nan, 0.0], [0.0, 1.0]])
    with pytest.raises(NonFiniteMatrixError):
        jacobian_det([[np.inf, 0.0], [0.0, 1.0]])


square2 = st.lists(st.floats(-10, 10, allow_nan=False), min_size=4, max_size=4)


@settings(max_examples=80, derandomize=True, deadline=None)
@given(square2)
def test_transpose_invariance(entries):
    A = np.array(entries).reshape(2, 2)
    assert operator_norm(A) == pytest.approx(operator_norm(A.T), abs=1e-10, rel=1e-10)


@settings(max_examples=80, derandomize=True, deadline=None)
@given(square2, st.floats(-4, 4, allow_nan=False))
def test_scalar_homogeneity(entries, c):
    A = np.array(entries).reshape(2, 2)
    assert operator_norm(c * A) == pytest.approx(abs(c) * operator_norm(A),
                                                 rel=1e-10, abs=1e-10)


@settings(max_examples=80, derandomize=True, deadline=None)
@given(square2)
def test_hadamard_bound(entries):
    A = np.array(entries).reshape(2, 2)
    assert abs(jacobian_det(A)) <= operator_norm(A) ** 2 * (1 + 1e-10) + 1e-12


@pytest.mark.parametrize("n", [2, 3, 4])
def test_orthogonal_matrices(n):
    rng = rng_for(3, "orthogonal", n)
    for _ in range(20):
        Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        assert operator_norm(Q) == pytest.approx(1.0, abs=1e-10)
        assert abs(jacobian_det(Q)) == pytest.approx(1.0, abs=1e-10)


def test_determinant_examples():
    assert jacobian_det(np.eye(2)) == 1.0
    assert jacobian_det([[2.0, 0.0], [0.0, 3.0]]) == 6.0


def test_determinant_matches_lu_for_larger_n():
    rng = rng_for(4, "det")
    for n in (3, 4, 5):
        A = rng.standard_normal((n, n))
        assert jacobian_det(A) == pytest.approx(float(np.linalg.det(A)), rel=1e-10)


def test_batch_shapes():
    A = rng_for(5, "batch").standard_normal((17, 3, 3))
    assert batch_operator_norm(A).shape == (17,)
    assert batch_jacobian_det(A).shape == (17,)


# -- finite differences -----------------------------------------------------------


def test_fd_exact_for_affine():
    mapping = catalog_lookup("linear", {"a11": 2.0, "a12": 0.5, "a21": 0.0, "a22": 1.0})
    A = np.array([[2.0, 0.5], [0.0, 1.0]])
    D = finite_difference_differential(mapping, [0.1, 0.2], step=1e-4)
    assert np.abs(D - A).max() < 1e-11


def test_fd_identity_small_error():
    mapping = catalog_lookup("identity")
    D = finite_difference_differential(mapping, [0.3, 0.4], step=1e-4)
    assert np.abs(D - np.eye(2)).max() < 1e-12


def test_fd_matches_exact_on_stretch():
    mapping = catalog_lookup("radial_stretch", {"alpha": 0.5})
    x = np.array([0.25, 0.0])
    D_fd = finite_difference_differential(mapping, x, step=1e-5)
    D_exact = mapping.differential(x)
    assert np.abs(D_fd - D_exact).max() < 1e-6


def test_fd_second_order_convergence():
    # halving h must shrink the error by about 4 (ratio in [3.5, 4.5])
    mapping = catalog_lookup("radial_stretch", {"alpha": 0.5})
    rng = rng_for(6, "fd_points")
    checked = 0
    for _ in range(200):
        x = mapping.domain.sample(1, rng)[0]
        r = np.linalg.norm(x)
        if r < 0.05 or r > 0.9:
            continue
        exact = mapping.differential(x)
        h = 1e-3 * r
        err_h = np.abs(finite_difference_differential(mapping, x, step=h) - exact).max()
        err_h2 = np.abs(finite_difference_differential(mapping, x, step=h / 2) - exact).max()
        if err_h2 < 1e-14:  # too close to roundoff to resolve the ratio
            continue
        assert 3.5 <= err_h / err_h2 <= 4.5
        checked += 1
        if checked >= 100:
            break
    assert checked >= 100


def test_singular_point_refused():
    mapping = catalog_lookup("radial_stretch", {"alpha": 0.5})
    with pytest.raises(SingularPointError):
        sample_differential(mapping, [0.0, 0.0])
    with pytest.raises(SingularPointError):
        finite_difference_differential(mapping, [1e-8, 0.0], step=1e-9)


def test_stencil_must_stay_inside():
    mapping = catalog_lookup("identity")
    with pytest.raises(ValueError):
        finite_difference_differential(mapping, [0.999, 0.0], step=0.1)


def test_sample_differential_provenance():
    exact = sample_differential(catalog_lookup("identity"), [0.3, 0.4])
    assert exact.provenance.kind == "exact"
    assert exact.op_norm == pytest.approx(1.0)
    assert exact.jacobian == pytest.approx(1.0)
    assert abs(exact.jacobian) <= exact.op_norm**2 + 1e-12


def test_stretch_sample_values():
    mapping = catalog_lookup("radial_stretch", {"alpha": 0.5})
    s = sample_differential(mapping, [0.25, 0.0])
    assert s.op_norm == pytest.approx(2.0, abs=1e-12)
    assert s.jacobian == pytest.approx(2.0, abs=1e-12)
