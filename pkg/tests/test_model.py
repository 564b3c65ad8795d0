import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nhprobe.errors import DegenerateInputError, ExceptionalPointError
from nhprobe.laurent import LaurentPolynomial as LP
from nhprobe.model import (
    BUILDERS,
    DEFAULT_PARAMS,
    TwoBandModel,
    band_energy,
    bloch_eigenvector,
    bloch_hamiltonian,
    build,
    custom,
    d_vector,
    load_model,
    model_app_c,
    model_from_dict,
    model_i,
    model_ii,
    model_iii,
    model_iv,
    model_to_dict,
    q_polynomial,
    save_model,
)
from nhprobe.numerics import complex_eigenvalues

from conftest import set_distance

par = st.floats(-2, 2, allow_nan=False)
ALL = [build(name) for name in BUILDERS]


def test_d_vector_model_i():
    # [PAPER] d = (t + t' cos k, t' sin k, i delta)
    t, tp, d = 1.0, 1.5, 1.0
    dv = d_vector(model_i(t, tp, d))
    k = np.linspace(-3, 3, 11)
    b = np.exp(1j * k)
    assert np.allclose(dv.dx(b), t + tp * np.cos(k))
    assert np.allclose(dv.dy(b), tp * np.sin(k))
    assert np.allclose(dv.dz(b), 1j * d)


def test_d_vector_model_ii(rng):
    # [PAPER] d_y = t' sin k - i delta
    k = rng.uniform(-np.pi, np.pi, 8)
    dv = d_vector(model_ii(0.6, 1.0, 1.0))
    assert np.allclose(dv.dy(np.exp(1j * k)), np.sin(k) - 1j)


def test_zero_model():
    # [TRIVIAL]
    dv = d_vector(TwoBandModel())
    assert dv.dx.is_zero() and dv.dy.is_zero() and dv.dz.is_zero()


def test_q_model_i():
    # [PAPER] Q = t^2 + t'^2 - delta^2 + t t'(beta + 1/beta)
    q = q_polynomial(model_i(1, 1.5, 1))
    assert q.allclose(LP.from_dict({-1: 1.5, 0: 2.25, 1: 1.5}))


def test_q_model_ii():
    # [PAPER] Q = 0.36 + 1.6/beta - 0.4 beta
    q = q_polynomial(model_ii(0.6, 1, 1))
    assert q.allclose(LP.from_dict({-1: 1.6, 0: 0.36, 1: -0.4}))


def test_q_model_app_c():
    # [PAPER] Q beta^2 = -2 t delta beta^3 + (sqrt2 t - delta^2) beta^2 + 1/2
    t, d = -0.5, 1.0
    q = q_polynomial(model_app_c(t, d))
    expect = LP.from_dict({1: -2 * t * d, 0: np.sqrt(2) * t - d * d, -2: 0.5})
    assert q.allclose(expect)


def test_q_model_iv_quartic():
    # [PAPER] Q beta^2 = (t2 b^2 + t1 b + t3 - delta)((t3 + delta) b^2 + t1 b + t2)
    t1, t2, t3, d = 1, 1.5, 0.2, 0.35
    q = q_polynomial(model_iv(t1, t2, t3, d))
    lhs = q.shift(2)
    rhs = LP.from_dict({2: t2, 1: t1, 0: t3 - d}) * LP.from_dict({2: t3 + d, 1: t1, 0: t2})
    assert lhs.allclose(rhs)


def test_bloch_hamiltonian_examples():
    # [TRIVIAL] on-site only
    m = custom({0: 1.0}, {}, {})
    for k in (0.0, 1.3):
        assert np.allclose(bloch_hamiltonian(m, k), np.diag([1, -1]))
    # [PAPER] model I at k = 0
    t, tp, d = 1, 1.5, 1
    h = bloch_hamiltonian(model_i(t, tp, d), 0.0)
    assert np.allclose(h, [[1j * d, t + tp], [t + tp, -1j * d]])


@pytest.mark.parametrize("model", ALL, ids=lambda m: m.label)
def test_bloch_eigs_equal_sqrt_q(model, rng):
    # [DERIVED] eigensolver versus the symbol, 16 random k
    q = q_polynomial(model)
    for k in rng.uniform(-np.pi, np.pi, 16):
        e = complex_eigenvalues(bloch_hamiltonian(model, k))
        s = np.sqrt(complex(q(np.exp(1j * k))))
        assert set_distance(e, [s, -s]) < 1e-10
        # chiral pairing of the two-band spectrum
        assert abs(e.sum()) < 1e-10


@given(par, par, par)
def test_models_ii_iii_share_q(t, tp, d):
    assert q_polynomial(model_ii(t, tp, d)).allclose(q_polynomial(model_iii(t, tp, d)), 1e-12)


@given(par, par)
def test_hermitian_limit_real_bands(t, tp):
    k = np.linspace(-np.pi, np.pi, 33)
    for fn in (model_i, model_ii, model_iii):
        m = fn(t, tp, 0.0)
        assert m.is_hermitian(1e-12)
        v = q_polynomial(m).on_circle(k)
        assert np.abs(v.imag).max() < 1e-12
        assert v.real.min() > -1e-12


def test_hermiticity_flags():
    assert not model_iii(0.6, 1, 0.3).is_hermitian()
    assert model_ii(0.6, 1, 0.0).is_hermitian()
    assert not model_i(1, 1.5, 1).is_hermitian()


def test_eigenvector_diagonal():
    # [TRIVIAL] dz only: band + is (1, 0)
    v = bloch_eigenvector(custom({0: 2.0}, {}, {}), 0.7, 1)
    assert np.allclose(np.abs(v), [1, 0])


@pytest.mark.parametrize("model", ALL, ids=lambda m: m.label)
@pytest.mark.parametrize("band", [1, -1])
def test_eigenvector_residual(model, band):
    # [DERIVED] residual oracle
    for k in (np.pi / 3, -2.1, 0.4):
        h = bloch_hamiltonian(model, k)
        e = band_energy(model, k, band)
        v = bloch_eigenvector(model, k, band)
        assert np.linalg.norm(h @ v - e * v) < 1e-10
        assert np.linalg.norm(v) == pytest.approx(1)


def test_eigenvector_exceptional_point():
    # model I with delta = t + t' has Q(-1) = (t - t')^2 - delta^2 = 0 at k = pi
    m = model_i(1.0, 1.5, 0.5)
    with pytest.raises(ExceptionalPointError):
        bloch_eigenvector(m, np.pi)
    with pytest.raises(DegenerateInputError):
        bloch_eigenvector(m, 0.2, band=0)


def test_build_defaults_and_errors():
    for name, params in DEFAULT_PARAMS.items():
        assert build(name).params == params
    assert build("model_ii", delta=0.3).params["delta"] == 0.3
    with pytest.raises(DegenerateInputError):
        build("model_v")
    with pytest.raises(DegenerateInputError):
        build("model_ii", t1=1)


@pytest.mark.parametrize("model", ALL + [custom({1: 0.2j}, {0: 1, -1: 0.3}, {0: 1, 1: 0.5}, "mine")],
                         ids=lambda m: m.label)
def test_model_roundtrip(model, tmp_path):
    again = model_from_dict(json.loads(json.dumps(model_to_dict(model))))
    assert q_polynomial(again).allclose(q_polynomial(model), 1e-14)
    path = tmp_path / "m.json"
    save_model(model, path)
    assert load_model(path).rho == model.rho


def test_model_dict_errors():
    with pytest.raises(DegenerateInputError):
        model_from_dict({"label": "x"})
    with pytest.raises(DegenerateInputError):
        model_from_dict({"rho": [[0.5, 1, 0]]})
