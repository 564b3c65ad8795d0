"""Root finder, eigensolver and least-squares kernels.

numpy.roots / numpy.linalg.eigvals serve only as independent oracles here.
"""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nhprobe.errors import DegenerateFitError, DegenerateInputError, EmptyRootsError, NumericalFailure
from nhprobe.model import bloch_hamiltonian, build, q_polynomial
from nhprobe.numerics import (
    balance_matrix,
    companion_matrix,
    complex_eigenvalues,
    hausdorff_distance,
    hessenberg_reduce,
    linear_fit,
    polynomial_roots,
    polyval_desc,
)

from conftest import set_distance

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)
cplx = st.builds(complex, finite, finite)


# -- polynomial_roots ------------------------------------------------------


def test_roots_factorable():
    # [TRIVIAL] beta^2 - 1
    r = polynomial_roots([1, 0, -1])
    assert set_distance(r, [1, -1]) < 1e-12


def test_roots_cubic_unit_circle():
    # [PAPER] beta^3 + 1: the cusp-chain saddle cubic at 2 t delta = -1
    r = polynomial_roots([1, 0, 0, 1])
    expect = [-1, np.exp(1j * np.pi / 3), np.exp(-1j * np.pi / 3)]
    assert set_distance(r, expect) < 1e-12
    assert np.allclose(np.abs(r), 1, atol=1e-12)


def test_roots_random_degree6_residual(rng):
    # [DERIVED] residual oracle by direct evaluation
    for _ in range(20):
        c = rng.normal(size=7) + 1j * rng.normal(size=7)
        r = polynomial_roots(c)
        assert r.size == 6
        assert np.abs(polyval_desc(c, r)).max() < 1e-9


def test_roots_match_numpy_oracle(rng):
    # [DERIVED] independent implementation
    c = rng.normal(size=6) + 1j * rng.normal(size=6)
    assert set_distance(polynomial_roots(c), np.roots(c)) < 1e-9


def test_roots_multiple_root():
    # (beta - 2)^3 (beta + 1): a triple root is found to its conditioning limit
    c = np.poly([2, 2, 2, -1])
    r = polynomial_roots(c)
    assert r.size == 4
    assert np.sort(np.abs(r - 2))[:3].max() < 1e-4


def test_roots_zero_roots_kept():
    # beta^2 (beta - 3)
    r = polynomial_roots([1, -3, 0, 0])
    assert set_distance(r, [0, 0, 3]) < 1e-12


def test_roots_widely_separated_magnitudes():
    # [DERIVED] z^2 + i z + eps i has roots near -i and -eps
    eps = 2.728094421913194e-123
    r = polynomial_roots([1, 1j, eps * 1j])
    assert set_distance(r, [-1j, -eps]) < 1e-12
    r = polynomial_roots(np.poly([1e-40, 1e-20, 1.0, 1e20]))
    assert np.allclose(np.sort(np.abs(r)), [1e-40, 1e-20, 1.0, 1e20], rtol=1e-8)


def test_roots_errors():
    with pytest.raises(DegenerateInputError):
        polynomial_roots([0, 1, 2])
    with pytest.raises(EmptyRootsError):
        polynomial_roots([5])
    with pytest.raises(DegenerateInputError):
        polynomial_roots([1, np.nan])


@given(st.lists(cplx, min_size=2, max_size=7))
def test_vieta_relations(c):
    # sum of roots = -c1/c0, product = (-1)^n c_n/c0
    c = np.array(c)
    if abs(c[0]) < 0.1:
        c[0] = 1.0
    scale = np.abs(c).max()
    r = polynomial_roots(c)
    n = c.size - 1
    assert abs(r.sum() + c[1] / c[0]) <= 1e-8 * max(1.0, abs(c[1] / c[0]), np.abs(r).sum())
    prod = (-1) ** n * c[-1] / c[0]
    assert abs(np.prod(r) - prod) <= 1e-8 * max(1.0, abs(prod), np.prod(np.maximum(np.abs(r), 1)))
    assert scale > 0


@given(st.lists(cplx, min_size=3, max_size=7))
def test_companion_eigs_equal_roots(c):
    c = np.array(c)
    if abs(c[0]) < 0.1:
        c[0] = 1.0
    r = polynomial_roots(c)
    e = complex_eigenvalues(companion_matrix(c))
    # multiple roots are ill-conditioned; compare the polynomial residual instead
    scale = np.abs(c).max() * np.maximum(1, np.abs(e)) ** (c.size - 1)
    assert np.all(np.abs(polyval_desc(c, e)) <= 1e-7 * scale)
    assert set_distance(r, e) < 1e-8 or np.abs(np.diff(np.sort_complex(r))).min() < 1e-3


# -- complex_eigenvalues ----------------------------------------------------


def test_eigs_diagonal():
    # [TRIVIAL]
    e = complex_eigenvalues(np.diag([2, -1 + 3j]))
    assert set_distance(e, [2, -1 + 3j]) < 1e-14


def test_eigs_companion_factorable():
    # [TRIVIAL]
    e = complex_eigenvalues(companion_matrix([1, 0, -1]))
    assert set_distance(e, [1, -1]) < 1e-12


def test_eigs_bloch_matrix_model_i():
    # [DERIVED] eigenvalues of H(pi/2) equal +-sqrt(Q(i))
    m = build("model_i", t=1, tp=1.5, delta=1)
    e = complex_eigenvalues(bloch_hamiltonian(m, np.pi / 2))
    s = np.sqrt(complex(q_polynomial(m)(1j)))
    assert set_distance(e, [s, -s]) < 1e-12


def test_eigs_match_numpy(rng):
    # [DERIVED] independent oracle on non-normal matrices up to order 60
    for n in (1, 2, 5, 17, 60):
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        assert set_distance(complex_eigenvalues(a), np.linalg.eigvals(a)) < 1e-9 * max(1, n)


def test_eigs_trace_and_det(rng):
    for n in (3, 8, 16):
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        e = complex_eigenvalues(a)
        assert abs(e.sum() - np.trace(a)) <= 1e-8 * max(1, abs(np.trace(a)), np.abs(a).sum())
        det = np.linalg.det(a)
        assert abs(np.prod(e) - det) <= 1e-6 * abs(det)


def test_eigs_hermitian_real(rng):
    a = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
    h = a + a.conj().T
    assert np.abs(complex_eigenvalues(h).imag).max() < 1e-10


def test_eigs_similarity_invariant(rng):
    a = rng.normal(size=(10, 10)) + 1j * rng.normal(size=(10, 10))
    s = rng.normal(size=(10, 10)) + 3 * np.eye(10)
    b = s @ a @ np.linalg.inv(s)
    assert set_distance(complex_eigenvalues(a), complex_eigenvalues(b)) < 1e-8


def test_eigs_nonnormal_toeplitz():
    # one-way hopping scaled by a gauge: balancing keeps the spectrum accurate
    n = 30
    a = np.diag(np.full(n - 1, 4.0), 1) + np.diag(np.full(n - 1, 0.25), -1)
    exact = 2 * np.sqrt(4.0 * 0.25) * np.cos(np.arange(1, n + 1) * np.pi / (n + 1))
    assert set_distance(complex_eigenvalues(a), exact) < 1e-8


def test_eigs_failure_carries_diagnostics(rng):
    a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    with pytest.raises(NumericalFailure) as info:
        complex_eigenvalues(a, max_iter_factor=0)
    assert info.value.diagnostics


def test_eigs_rejects_non_square():
    with pytest.raises(DegenerateInputError):
        complex_eigenvalues(np.ones((2, 3)))


def test_balance_and_hessenberg_preserve_spectrum(rng):
    a = rng.normal(size=(8, 8)) * np.logspace(-3, 3, 8)[:, None]
    b = balance_matrix(a)
    b = b[0] if isinstance(b, tuple) else b
    h = hessenberg_reduce(b)
    h = h[0] if isinstance(h, tuple) else h
    assert np.abs(np.tril(h, -2)).max() < 1e-12 * np.abs(h).max()
    assert set_distance(np.linalg.eigvals(h), np.linalg.eigvals(a)) < 1e-8 * np.abs(a).max()


# -- linear_fit -------------------------------------------------------------


def test_fit_two_points():
    # [TRIVIAL]
    f = linear_fit([(0, 1), (1, 3)])
    assert f.slope == pytest.approx(2)
    assert f.intercept == pytest.approx(1)
    assert f.residual_rms == pytest.approx(0, abs=1e-14)


def test_fit_affine_exact():
    # [TRIVIAL]
    t = np.linspace(0, 9, 10)
    f = linear_fit(t, -0.5 * t + 4)
    assert f.slope == pytest.approx(-0.5, abs=1e-14)
    assert f.intercept == pytest.approx(4, abs=1e-13)


def test_fit_bounded_noise(rng):
    # [DERIVED] synthetic noise oracle
    t = np.linspace(0, 10, 200)
    y = 1.3 * t - 2 + rng.uniform(-0.01, 0.01, t.size)
    assert abs(linear_fit(t, y).slope - 1.3) < 0.01


def test_fit_degenerate():
    with pytest.raises(DegenerateFitError):
        linear_fit([1, 1, 1], [0, 1, 2])
    with pytest.raises(DegenerateFitError):
        linear_fit([(0, 1)])


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_fit_recovers_line(a, b):
    t = np.linspace(-1, 2, 7)
    f = linear_fit(t, a * t + b)
    assert f.slope == pytest.approx(a, abs=1e-10)
    assert f.stderr >= 0


def test_hausdorff():
    assert hausdorff_distance([0, 1], [0, 1]) == 0
    assert hausdorff_distance([0], [0, 3j]) == pytest.approx(3)
