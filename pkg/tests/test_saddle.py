import numpy as np
import pytest
from hypothesis import given, strategies as st

from nhprobe.errors import DegenerateSymbolError
from nhprobe.laurent import LaurentPolynomial as LP
from nhprobe.model import build, model_i, model_ii, model_iii, q_polynomial
from nhprobe.numerics import directed_distance, polynomial_roots
from nhprobe.saddle import (
    Verdict,
    VerdictDetail,
    contour_bound,
    contour_minimax,
    lyapunov_predicted,
    nhse_verdict,
    saddle_equation,
    saddle_points,
)
from nhprobe.spectra import max_im_pbc, obc_spectrum

from conftest import set_distance


# -- saddle equation --------------------------------------------------------


def test_saddle_equation_model_i_coefficients():
    # [PAPER] normalized quartic: c1 = c3 = 4 v^2/(t t'), c2 = -2 + 4 v^2 (t^2 + t'^2 - delta^2)/(t^2 t'^2)
    t, tp, d, v = 1.0, 1.5, 1.0, 0.7
    c = saddle_equation(model_i(t, tp, d), v)
    c = c / c[0]
    c1 = 4 * v * v / (t * tp)
    c2 = -2 + 4 * v * v * (t * t + tp * tp - d * d) / (t * t * tp * tp)
    assert np.allclose(c, [1, c1, c2, c1, 1], atol=1e-12)


def test_saddle_equation_v0_model_iii():
    # [PAPER] beta_s = +-sqrt((t + delta)/(t - delta)) = +-sqrt(3)
    roots = polynomial_roots(saddle_equation(model_iii(0.6, 1, 0.3), 0.0))
    roots = roots[np.abs(roots) > 0]
    assert set_distance(roots, [np.sqrt(3), -np.sqrt(3)]) < 1e-9


def test_saddle_equation_cusp_chain():
    # [DERIVED] the numerator of dQ/dbeta has the cube roots of -1/(2 t delta)
    t, d = -0.8, 1.0
    roots = polynomial_roots(saddle_equation(build("model_app_c", t=t, delta=d), 0.0))
    roots = roots[np.abs(roots) > 0]
    expect = np.roots([1, 0, 0, 1 / (2 * t * d)])
    assert set_distance(roots, expect) < 1e-9


@pytest.mark.parametrize("name", ["model_i", "model_ii", "model_iii", "model_iv", "model_app_c"])
def test_v0_roots_are_stationary_points(name):
    q = q_polynomial(build(name))
    roots = polynomial_roots(saddle_equation(q, 0.0))
    roots = roots[np.abs(roots) > 0]
    dq = q.derivative()
    assert np.abs(dq(roots)).max() < 1e-9


def test_saddle_equation_constant_symbol():
    with pytest.raises(DegenerateSymbolError):
        saddle_equation(LP.monomial(0, 2.0), 0.3)


# -- saddle points ----------------------------------------------------------


def test_model_iii_closed_form_saddles():
    # [PAPER] beta_s = +-2i, tanh psi = t/delta, lambda = sqrt(delta^2 - t^2) = 0.8
    rep = saddle_points(model_iii(0.6, 1, 1.0), 0.0)
    betas = np.array([s.beta_s for s in rep.saddles])
    assert set_distance(betas, [2j, -2j]) < 1e-9
    assert rep.lambda_pred == pytest.approx(0.8, abs=1e-9)
    psi = np.arctanh(0.6)
    for s in rep.saddles:
        assert s.k_s.imag == pytest.approx(-psi, abs=1e-9)
        assert abs(abs(s.k_s.real) - np.pi / 2) < 1e-9


def test_model_i_saddles_on_circle():
    # [PAPER] beta_s = +-1
    rep = saddle_points(build("model_i"), 0.0)
    assert set_distance([s.beta_s for s in rep.saddles], [1, -1]) < 1e-9
    assert all(s.on_unit_circle for s in rep.saddles)
    # [DERIVED] lambda(0) = delta^2 - (t - t')^2 under the square root
    assert rep.lambda_pred == pytest.approx(np.sqrt(0.75), abs=1e-9)


def test_hermitian_candidates_zero():
    # [TRIVIAL] real spectrum
    rep = saddle_points(model_ii(0.6, 1, 0), 0.0)
    assert all(abs(s.lyapunov_candidate) < 1e-12 for s in rep.saddles)
    assert rep.lambda_pred == pytest.approx(0, abs=1e-12)


@pytest.mark.parametrize("v", [-1.3, -0.4, 0.0, 0.6, 1.7])
@pytest.mark.parametrize("name", ["model_i", "model_ii", "model_iii", "model_iv", "model_app_c"])
def test_saddle_invariants(name, v):
    m = build(name)
    rep = saddle_points(m, v)
    q = q_polynomial(m)
    p = q.beta_derivative()
    for s in rep.saddles:
        # residual of the saddle equation, relative to its size
        res = (1j * p(s.beta_s)) ** 2 - 4 * v * v * q(s.beta_s)
        scale = max(1.0, abs(p(s.beta_s)) ** 2, abs(q(s.beta_s)))
        assert abs(res) / scale < 1e-9
        assert s.k_s.imag == pytest.approx(-np.log(abs(s.beta_s)), abs=1e-12)
    # growth never exceeds the circle bound, nor the largest candidate
    assert rep.lambda_pred <= rep.contour_bound + 1e-6
    assert rep.lambda_pred <= rep.lambda_naive + 1e-9
    assert rep.source == "saddle"


@pytest.mark.parametrize("name", ["model_ii", "model_iii"])
def test_zero_drift_rate_at_most_pbc_maximum(name):
    m = build(name)
    assert lyapunov_predicted(m, 0.0) <= max_im_pbc(m) + 1e-9


def test_models_ii_iii_share_reports():
    a = saddle_points(model_ii(0.6, 1, 0.3), 0.5)
    b = saddle_points(model_iii(0.6, 1, 0.3), 0.5)
    assert set_distance([s.beta_s for s in a.saddles], [s.beta_s for s in b.saddles]) < 1e-12
    assert a.lambda_pred == pytest.approx(b.lambda_pred, abs=1e-12)


def test_envelope_slope_is_log_radius():
    # [DERIVED] d lambda / dv = ln |beta_dom| away from saddle switches
    m = build("model_ii")
    v, h = 0.9, 1e-4
    rep = saddle_points(m, v)
    slope = (lyapunov_predicted(m, v + h) - lyapunov_predicted(m, v - h)) / (2 * h)
    assert slope == pytest.approx(np.log(rep.dominant_saddle.radius), abs=1e-5)


def test_contour_minimax_matches_circle_bound_when_circular():
    # model III at v = 0: the optimal contour is the circle |beta| = 2
    m = model_iii(0.6, 1, 1.0)
    bound, rho = contour_bound(m, 0.0)
    assert bound == pytest.approx(0.8, abs=1e-8)
    assert np.exp(rho) == pytest.approx(2.0, rel=1e-3)
    assert contour_minimax(m, 0.0) == pytest.approx(0.8, abs=1e-4)


@pytest.mark.parametrize("name", ["model_ii", "model_iii", "model_iv"])
def test_turning_points_on_obc_spectrum(name):
    # [PAPER] every saddle energy is a turning point of the open-chain arcs
    m = build(name)
    bulk = obc_spectrum(m, 60).bulk
    e = [s.energy for s in saddle_points(m, 0.0).saddles]
    assert directed_distance(e, bulk) <= 0.02


# -- verdict ----------------------------------------------------------------


@pytest.mark.parametrize("name, expect", [
    ("model_i", Verdict.NO_NHSE),
    ("model_ii", Verdict.NHSE),
    ("model_iii", Verdict.NHSE),
    ("model_iv", Verdict.NHSE),
])
def test_verdicts(name, expect):
    assert nhse_verdict(build(name)) is expect


def test_verdict_hermitian():
    assert nhse_verdict(model_ii(0.6, 1, 0)) is Verdict.NO_NHSE


def test_verdict_cusp_chain():
    # [PAPER] 2 t delta = -1: all three saddles on the unit circle, criterion inconclusive
    m = build("model_app_c", t=-0.5, delta=1.0)
    det = nhse_verdict(m, details=True)
    assert isinstance(det, VerdictDetail)
    assert det.verdict is Verdict.EXCEPTIONAL_CUSP
    assert len(det.radii) == 3 and np.allclose(det.radii, 1, atol=1e-9)
    assert all(det.cusp)
    off = nhse_verdict(build("model_app_c", t=-1.0, delta=1.0), details=True)
    assert off.verdict is Verdict.NHSE
    assert max(abs(r - 1) for r in off.radii) > 0.01


def test_verdict_no_saddles_uses_geometry():
    # Q = beta: no stationary point, a unit loop in the energy plane
    from nhprobe.model import custom
    m = custom({}, {-1: 1.0}, {0: 1.0})
    det = nhse_verdict(m, details=True)
    assert det.verdict is Verdict.NHSE and det.radii == ()


coef = st.floats(0.2, 1.5).map(lambda x: round(x, 3))


@given(t=coef, tp=coef, d=st.floats(0.0, 1.5).map(lambda x: round(x, 3)))
def test_model_iii_radius_formula(t, tp, d):
    # [PAPER] v = 0 saddles at +-sqrt((t + delta)/(t - delta)); off the circle iff delta != 0
    if abs(t - d) < 1e-2:
        return
    rep = saddle_points(model_iii(t, tp, d), 0.0)
    r = np.sqrt(abs((t + d) / (t - d)))
    assert np.allclose(rep.radii, r, rtol=1e-8)
