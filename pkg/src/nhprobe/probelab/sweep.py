"""Lyapunov sweeps over drift velocity and gain/loss scans at zero drift."""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..dynamics import (
    DEFAULT_CELLS,
    DEFAULT_FIT_LO,
    DEFAULT_T_END,
    DEFAULT_WINDOW,
    default_dt,
    lyapunov_curve,
    run_seeded,
)
from ..errors import DegenerateInputError
from ..model import TwoBandModel, model_iii
from ..saddle import Verdict, nhse_verdict, saddle_points
from ..spectra import max_im_pbc

DEFAULT_V_MIN = -2.5
DEFAULT_V_MAX = 2.5
DEFAULT_DV = 0.05
KINK_TOL = 0.1
KINK_HALO = 2
DT_TOL = 1e-4
SCAN_THRESHOLD = 0.05


@dataclass(frozen=True)
class SweepOptions:
    """Numerical settings shared by sweeps and scans.

    ``check_dt`` repeats the evolution with half the step and records the
    largest change of the fitted exponents; a change above ``dt_tol`` raises
    a warning. ``workers`` bounds the thread pool used for independent jobs.
    """

    cells: int = DEFAULT_CELLS
    t_end: float = DEFAULT_T_END
    dt: float | None = None
    fit_lo_frac: float = DEFAULT_FIT_LO
    window: int | str = DEFAULT_WINDOW
    check_dt: bool = True
    dt_tol: float = DT_TOL
    kink_tol: float = KINK_TOL
    workers: int = 1

    def with_(self, **kw) -> "SweepOptions":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def _pool_map(fn, items, workers: int):
    """Order-preserving map, threaded when ``workers > 1``."""
    items = list(items)
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def velocity_grid(v_min: float, v_max: float, dv: float) -> np.ndarray:
    """Inclusive grid rounded to suppress accumulated float drift."""
    if not dv > 0:
        raise DegenerateInputError("dv must be positive")
    if v_max < v_min:
        raise DegenerateInputError("v_max must not be below v_min")
    n = int(np.floor((v_max - v_min) / dv + 1e-9)) + 1
    return np.round(v_min + dv * np.arange(n), 12)


def parabolic_peak(x: np.ndarray, y: np.ndarray) -> float:
    """Argmax of ``y`` refined by a parabola through the three points around it.

    The refinement is skipped at the grid ends and where the three points are
    not concave; the shift never exceeds half a grid step.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    i = int(np.nanargmax(y))
    if i == 0 or i == y.size - 1:
        return float(x[i])
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    curv = y0 - 2 * y1 + y2
    if not curv < 0:
        return float(x[i])
    shift = float(np.clip(0.5 * (y0 - y2) / curv, -0.5, 0.5))
    h = 0.5 * (x[i + 1] - x[i - 1])
    return float(x[i] + shift * h)


def kink_mask(v: np.ndarray, lam: np.ndarray, tol: float = KINK_TOL, halo: int = KINK_HALO) -> np.ndarray:
    """Grid points within ``halo`` steps of a slope discontinuity of ``lam(v)``.

    A kink is a jump between consecutive finite-difference slopes exceeding
    the median of its five nearest neighbours by more than ``tol``; smooth
    curvature moves slowly along the grid while a slope jump shows up as an
    isolated spike.
    """
    v = np.asarray(v, dtype=float)
    lam = np.asarray(lam, dtype=float)
    mask = np.zeros(lam.size, dtype=bool)
    if lam.size < 3:
        return mask
    d2 = np.abs(np.diff(np.diff(lam) / np.diff(v)))
    spikes = []
    for j in range(d2.size):
        lo, hi = max(0, j - 2), min(d2.size, j + 3)
        if d2[j] - np.median(d2[lo:hi]) > tol:
            spikes.append(j + 1)
    for i in spikes:
        mask[max(0, i - halo) : i + halo + 1] = True
    return mask


@dataclass(frozen=True)
class SweepResult:
    """Simulated and predicted ``lambda(v)`` on a common velocity grid."""

    label: str
    params: dict
    v_grid: np.ndarray
    lambda_sim: np.ndarray
    lambda_pred: np.ndarray
    stderr: np.ndarray
    kinks: np.ndarray
    v_m_sim: float
    v_m_pred: float
    verdict_dynamics: Verdict
    verdict_saddle: Verdict
    max_im_pbc: float
    dt: float
    dt_change: float
    meta: dict = field(default_factory=dict)

    @property
    def dv(self) -> float:
        return float(self.v_grid[1] - self.v_grid[0]) if self.v_grid.size > 1 else 0.0

    @property
    def deviation(self) -> np.ndarray:
        return self.lambda_sim - self.lambda_pred

    def max_deviation(self, exclude_kinks: bool = True) -> float:
        d = np.abs(self.deviation)
        if exclude_kinks:
            d = d[~self.kinks]
        return float(d.max()) if d.size else float("nan")


def sweep_lyapunov(
    model: TwoBandModel,
    v_min: float = DEFAULT_V_MIN,
    v_max: float = DEFAULT_V_MAX,
    dv: float = DEFAULT_DV,
    options: SweepOptions | None = None,
) -> SweepResult:
    """Simulated and saddle-point ``lambda(v)``, the peak velocity and both verdicts.

    One seeded open-chain evolution serves the whole grid. ``v_m`` is the
    argmax with parabolic refinement; the dynamics verdict is ``NHSE`` iff
    ``|v_m_sim| > dv``.
    """
    opts = options or SweepOptions()
    if v_min > -2 or v_max < 2:
        raise DegenerateInputError("the velocity grid must span at least [-2, 2]")
    v = velocity_grid(v_min, v_max, dv)
    dt = float(opts.dt) if opts.dt is not None else default_dt(model)
    kw = dict(cells=opts.cells, t_end=opts.t_end, fit_lo_frac=opts.fit_lo_frac, window=opts.window)

    def simulate(step):
        traj = run_seeded(model, cells=opts.cells, t_end=opts.t_end, dt=step)
        est = lyapunov_curve(model, v, trajectory=traj, **kw)
        return np.array([e.lam for e in est]), np.array([e.stderr for e in est])

    jobs = [dt, 0.5 * dt] if opts.check_dt else [dt]
    sims = _pool_map(simulate, jobs, opts.workers)
    lam_sim, err = sims[0]
    dt_change = float(np.abs(sims[1][0] - lam_sim).max()) if opts.check_dt else float("nan")
    if opts.check_dt and dt_change > opts.dt_tol:
        warnings.warn(
            f"halving dt changed lambda by {dt_change:.2e} (> {opts.dt_tol:g}); use a smaller dt",
            RuntimeWarning, stacklevel=2,
        )

    reports = _pool_map(lambda x: saddle_points(model, float(x)), v, opts.workers)
    lam_pred = np.array([r.lambda_pred for r in reports])
    fallback = [float(x) for x, r in zip(v, reports) if r.source != "saddle"]
    kinks = kink_mask(v, lam_pred, opts.kink_tol)

    v_m_sim = parabolic_peak(v, lam_sim)
    v_m_pred = parabolic_peak(v, lam_pred)
    verdict_dyn = Verdict.NHSE if abs(v_m_sim) > dv else Verdict.NO_NHSE
    return SweepResult(
        label=model.label, params=dict(model.params), v_grid=v, lambda_sim=lam_sim,
        lambda_pred=lam_pred, stderr=err, kinks=kinks, v_m_sim=v_m_sim, v_m_pred=v_m_pred,
        verdict_dynamics=verdict_dyn, verdict_saddle=nhse_verdict(model),
        max_im_pbc=max_im_pbc(model), dt=dt, dt_change=dt_change,
        meta={"cells": opts.cells, "t_end": opts.t_end, "fit_lo_frac": opts.fit_lo_frac,
              "window": opts.window, "minimax_fallback_v": fallback},
    )


# ---------------------------------------------------------------------------
# zero-drift scan across the non-Bloch transition


def lambda0_theory(t: float, delta) -> np.ndarray:
    """``0`` for ``|delta| < |t|`` and ``sqrt(delta^2 - t^2)`` otherwise."""
    d = np.asarray(delta, dtype=float)
    return np.where(np.abs(d) < abs(t), 0.0, np.sqrt(np.maximum(d * d - t * t, 0.0)))


@dataclass(frozen=True)
class TransitionScan:
    """Zero-drift exponent across a gain/loss scan of the dimerized chain."""

    t: float
    tp: float
    delta_grid: np.ndarray
    lambda0_sim: np.ndarray
    lambda0_theory: np.ndarray
    stderr: np.ndarray
    critical_delta: float
    threshold: float
    meta: dict = field(default_factory=dict)

    @property
    def deviation(self) -> np.ndarray:
        return self.lambda0_sim - self.lambda0_theory


def critical_delta(delta: np.ndarray, lam: np.ndarray, threshold: float = SCAN_THRESHOLD) -> float:
    """Largest ``delta`` with ``lam < threshold``, moved to the threshold crossing.

    When the next grid point is at or above the threshold, the crossing is
    located by linear interpolation between the two. Returns ``nan`` when no
    point lies below the threshold.
    """
    delta = np.asarray(delta, dtype=float)
    lam = np.asarray(lam, dtype=float)
    below = np.flatnonzero(lam < threshold)
    if below.size == 0:
        return float("nan")
    i = int(below[-1])
    if i == lam.size - 1:
        return float(delta[i])
    frac = (threshold - lam[i]) / (lam[i + 1] - lam[i])
    return float(delta[i] + frac * (delta[i + 1] - delta[i]))


def scan_delta_model3(
    t: float = 0.6,
    tp: float = 1.0,
    delta_grid=None,
    options: SweepOptions | None = None,
    threshold: float = SCAN_THRESHOLD,
) -> TransitionScan:
    """``lambda(v=0)`` of the gain/loss dimer chain for each ``delta``.

    Each grid point is an independent seeded evolution; jobs run on the
    bounded pool and are assembled in grid order.
    """
    opts = options or SweepOptions()
    grid = (np.round(np.arange(0.1, 1.2 + 1e-9, 0.05), 12) if delta_grid is None
            else np.asarray(delta_grid, dtype=float))
    if not (grid.min() < abs(t) < grid.max()):
        raise DegenerateInputError("the delta grid must straddle |t|")
    kw = dict(cells=opts.cells, t_end=opts.t_end, dt=opts.dt,
              fit_lo_frac=opts.fit_lo_frac, window=opts.window)

    def one(d):
        return lyapunov_curve(model_iii(t, tp, float(d)), [0.0], **kw)[0]

    est = _pool_map(one, grid, opts.workers)
    lam = np.array([e.lam for e in est])
    return TransitionScan(
        t=float(t), tp=float(tp), delta_grid=grid, lambda0_sim=lam,
        lambda0_theory=lambda0_theory(t, grid), stderr=np.array([e.stderr for e in est]),
        critical_delta=critical_delta(grid, lam, threshold), threshold=threshold,
        meta={"cells": opts.cells, "t_end": opts.t_end, "fit_lo_frac": opts.fit_lo_frac,
              "window": opts.window},
    )
