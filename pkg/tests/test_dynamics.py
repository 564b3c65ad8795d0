import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nhprobe.dynamics import (
    Boundary,
    LatticeState,
    default_dt,
    evolve,
    evolve_spectral,
    hopping_norm_bound,
    lyapunov_curve,
    lyapunov_estimate,
    relative_deviation,
    run_seeded,
    sample_ray,
)
from nhprobe.errors import (
    DegenerateInputError,
    ExceptionalPointError,
    InstabilityError,
    InsufficientDataError,
)
from nhprobe.model import TwoBandModel, band_energy, bloch_eigenvector, build, custom, model_ii, model_iii
from nhprobe.spectra import max_im_pbc

NAMED = ["model_i", "model_ii", "model_iii", "model_iv", "model_app_c"]


def random_state(rng, cells):
    return LatticeState(cells, rng.normal(size=cells) + 1j * rng.normal(size=cells),
                        rng.normal(size=cells) + 1j * rng.normal(size=cells))


# -- integrator -------------------------------------------------------------


def test_zero_hamiltonian_identity(rng):
    # [TRIVIAL]
    s0 = random_state(rng, 20)
    traj = evolve(TwoBandModel(), s0, 3.0, 0.1)
    assert np.array_equal(traj.final.a, s0.a) and np.array_equal(traj.final.b, s0.b)
    assert np.all(traj.log_scale == 0)
    tr = sample_ray(evolve(TwoBandModel(), LatticeState.seed(41), 3.0, 0.1), 0.0, window="nearest")
    assert np.allclose(tr.log_abs_psi, 0)


def test_hermitian_norm_conservation():
    # [TRIVIAL] unitary evolution on the open chain
    m = model_ii(0.6, 1, 0)
    s0 = LatticeState.seed(101)
    fin = evolve(m, s0, 10.0, 0.01, Boundary.OBC).final
    n0 = np.sum(np.abs(s0.a) ** 2 + np.abs(s0.b) ** 2)
    n1 = np.sum(np.abs(fin.true_a()) ** 2 + np.abs(fin.true_b()) ** 2)
    assert abs(n1 / n0 - 1) <= 1e-8


@pytest.mark.parametrize("name", NAMED)
def test_rk4_matches_spectral_ring(name, rng):
    # [DERIVED] RK4 on a 64-cell ring against exact Bloch-mode propagation
    m = build(name)
    s0 = random_state(rng, 64)
    rk = evolve(m, s0, 5.0, 0.005, Boundary.RING, sample_dt=None).final
    ex = evolve_spectral(m, s0, 5.0)
    assert relative_deviation(rk, ex) <= 1e-6


def test_open_chain_matches_ring_far_from_edges():
    # [DERIVED] a centred seed does not feel the edges of 301 cells by t = 10
    m = build("model_ii")
    s0 = LatticeState.seed(301)
    rk = evolve(m, s0, 10.0, 0.005, Boundary.OBC, sample_dt=None).final
    assert relative_deviation(rk, evolve_spectral(m, s0, 10.0)) <= 1e-6


def test_spectral_identity_at_zero(rng):
    s0 = random_state(rng, 32)
    out = evolve_spectral(build("model_iv"), s0, 0.0)
    assert np.allclose(out.true_a(), s0.a) and np.allclose(out.true_b(), s0.b)


def test_spectral_eigenmode():
    # [TRIVIAL] a Bloch eigenmode only picks up exp(-i E t)
    m = build("model_iii")
    n, j, t = 32, 5, 2.7
    k = 2 * np.pi * j / n
    u = bloch_eigenvector(m, k, 1)
    cells = np.arange(n)
    s0 = LatticeState(n, u[0] * np.exp(1j * k * cells), u[1] * np.exp(1j * k * cells))
    out = evolve_spectral(m, s0, t)
    phase = np.exp(-1j * band_energy(m, k, 1) * t)
    assert np.allclose(out.true_a(), phase * s0.a, atol=1e-12)
    assert np.allclose(out.true_b(), phase * s0.b, atol=1e-12)


def test_spectral_rejects_exceptional_point():
    # Q = (1 + beta)(1 + 1/beta) vanishes at k = pi, which is on an even grid
    m = custom({}, {0: 1.0, 1: 1.0}, {0: 1.0, -1: 1.0})
    with pytest.raises(ExceptionalPointError):
        evolve_spectral(m, LatticeState.seed(16), 1.0)


def test_renormalization_keeps_amplitudes_bounded():
    m = model_iii(0.6, 1, 1.0)
    traj = run_seeded(m, cells=101, t_end=40)
    amp = np.maximum(np.abs(traj.a).max(axis=1), np.abs(traj.b).max(axis=1))
    assert amp.max() <= 1e8 and amp[1:].min() >= 1e-8
    assert traj.log_scale[-1] > 10


def test_snapshot_grid_independent_of_step():
    m = build("model_ii")
    s0 = LatticeState.seed(101)
    t1 = evolve(m, s0, 2.0, 0.03)
    t2 = evolve(m, s0, 2.0, 0.011)
    assert np.array_equal(t1.times, t2.times)
    assert t1.times[-1] == 2.0 and np.allclose(np.diff(t1.times), 0.05)


def test_instability_reported():
    # renormalization absorbs slow blow-up; a step large enough to overflow inside one stage is caught
    with pytest.raises(InstabilityError, match="reduce dt"):
        evolve(build("model_ii"), LatticeState.seed(101), 1e100, 1e100, sample_dt=None)


def test_evolve_input_errors():
    with pytest.raises(DegenerateInputError):
        evolve(build("model_ii"), LatticeState.seed(20), -1.0)
    with pytest.raises(DegenerateInputError):
        evolve(build("model_ii"), LatticeState.seed(20), 1.0, 0.0)
    with pytest.raises(DegenerateInputError):
        run_seeded(build("model_ii"), cells=50)
    with pytest.raises(DegenerateInputError):
        run_seeded(build("model_ii"), t_end=2)


def test_default_dt_scales_with_hopping():
    m = build("model_i")
    assert default_dt(m) == pytest.approx(0.05 / max(1.0, hopping_norm_bound(m)))
    assert default_dt(TwoBandModel()) == pytest.approx(0.05)


@settings(max_examples=15)
@given(t=st.floats(-1.5, 1.5), d=st.floats(-1.5, 1.5))
def test_linearity(t, d):
    # [TRIVIAL] the lattice equations are linear
    m = model_ii(t, 1.0, d)
    rng = np.random.default_rng(7)
    x, y = random_state(rng, 24), random_state(rng, 24)
    xy = LatticeState(24, x.a + 2 * y.a, x.b + 2 * y.b)
    fx = evolve(m, x, 1.0, 0.01, sample_dt=None).final
    fy = evolve(m, y, 1.0, 0.01, sample_dt=None).final
    fxy = evolve(m, xy, 1.0, 0.01, sample_dt=None).final
    combo = LatticeState(24, fx.true_a() + 2 * fy.true_a(), fx.true_b() + 2 * fy.true_b())
    assert relative_deviation(fxy, combo) < 1e-10


# -- rays and exponents -----------------------------------------------------


@pytest.mark.parametrize("delta, expect, tol", [(1.0, 0.8, 0.05), (0.3, 0.0, 0.02)])
def test_lambda_model_iii(delta, expect, tol):
    # [PAPER] zero-drift growth sqrt(delta^2 - t^2) above t, zero below
    est = lyapunov_estimate(model_iii(0.6, 1, delta), 0.0)
    assert est.lam == pytest.approx(expect, abs=tol)
    assert est.stderr >= 0 and est.n_points >= 5


def test_lambda_model_i():
    # [DERIVED] max_k Im E_PBC = sqrt(0.75)
    m = build("model_i")
    assert max_im_pbc(m) == pytest.approx(np.sqrt(0.75), abs=1e-6)
    assert lyapunov_estimate(m, 0.0).lam == pytest.approx(0.866, abs=0.02)


def test_lambda_hermitian():
    # [TRIVIAL]
    assert lyapunov_estimate(model_ii(0.6, 1, 0), 0.0).lam == pytest.approx(0, abs=0.02)


def test_fast_ray_decays():
    # [PAPER] beyond the largest group velocity the field decays
    est = lyapunov_curve(build("model_i"), [3.0], cells=401, t_end=20)[0]
    assert est.lam < -0.5


def test_ray_truncation_warning():
    traj = run_seeded(build("model_ii"), cells=101, t_end=20)
    with pytest.warns(RuntimeWarning, match="safe interior"):
        tr = sample_ray(traj, 3.0)
    assert tr.truncated_at is not None and tr.times[-1] <= tr.truncated_at
    assert np.all(np.diff(tr.times) > 0)


def test_insufficient_data():
    traj = run_seeded(build("model_ii"), cells=101, t_end=20)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        with pytest.raises(InsufficientDataError):
            lyapunov_curve(build("model_ii"), [10.0], trajectory=traj)


def test_nearest_site_sampling_agrees():
    m = model_iii(0.6, 1, 1.0)
    traj = run_seeded(m, cells=201, t_end=30)
    near = lyapunov_estimate(m, 0.0, trajectory=traj, window="nearest").lam
    win = lyapunov_estimate(m, 0.0, trajectory=traj).lam
    assert abs(near - win) < 0.05


def test_edge_independence():
    m = build("model_ii")
    vs = np.linspace(-2, 2, 9)
    a = lyapunov_curve(m, vs, cells=301, t_end=10)
    b = lyapunov_curve(m, vs, cells=601, t_end=10)
    assert max(abs(x.lam - y.lam) for x, y in zip(a, b)) < 1e-3


def test_step_halving_convergence():
    m = build("model_ii")
    vs = np.linspace(-2, 2, 9)
    dt = default_dt(m)
    a = lyapunov_curve(m, vs, t_end=10, dt=dt)
    b = lyapunov_curve(m, vs, t_end=10, dt=dt / 2)
    assert max(abs(x.lam - y.lam) for x, y in zip(a, b)) < 1e-4


def test_curve_shares_trajectory():
    m = build("model_ii")
    traj = run_seeded(m, cells=201, t_end=10)
    one = lyapunov_estimate(m, 0.5, trajectory=traj)
    many = lyapunov_curve(m, [0.0, 0.5], trajectory=traj)
    assert one.lam == many[1].lam
