"""Real-space time evolution, ray sampling and Lyapunov exponent estimates.

The equations of motion are

    i da_n/dt = sum_l rho_{n-l} a_l + theta_{n-l} b_l
    i db_n/dt = sum_l phi_{n-l} a_l - rho_{n-l} b_l

integrated with fixed-step RK4. Amplitudes are kept in ``[1e-8, 1e8]`` by
rescaling, with the logarithm of the extracted factor accumulated in
``log_scale``.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateInputError,
    ExceptionalPointError,
    InstabilityError,
    InsufficientDataError,
)
from .model import TwoBandModel, phi_symbol, rho_symbol, theta_symbol
from .numerics import linear_fit

RENORM_LOW = 1e-8
RENORM_HIGH = 1e8
EDGE_MARGIN = 10
DEFAULT_CELLS = 301
DEFAULT_T_END = 40.0
DEFAULT_FIT_LO = 0.4
DEFAULT_WINDOW = 2
DEFAULT_SAMPLE_DT = 0.05


class Boundary(str, enum.Enum):
    OBC = "OBC"
    RING = "RING"


@dataclass
class LatticeState:
    """Field ``(a_n, b_n)`` on a chain; true amplitude is stored times ``exp(log_scale)``."""

    cells: int
    a: np.ndarray
    b: np.ndarray
    log_scale: float = 0.0
    time: float = 0.0

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=complex).copy()
        self.b = np.asarray(self.b, dtype=complex).copy()
        if self.a.shape != (self.cells,) or self.b.shape != (self.cells,):
            raise DegenerateInputError("a and b must have one entry per cell")

    @classmethod
    def seed(cls, cells: int, site: int | None = None, a0: complex = 1.0, b0: complex = 1.0):
        """``a_n = a0 delta_{n,site}``, ``b_n = b0 delta_{n,site}``; centre by default."""
        site = cells // 2 if site is None else site
        a = np.zeros(cells, dtype=complex)
        b = np.zeros(cells, dtype=complex)
        a[site], b[site] = a0, b0
        return cls(cells, a, b)

    @property
    def max_amplitude(self) -> float:
        return float(max(np.abs(self.a).max(), np.abs(self.b).max()))

    def true_a(self) -> np.ndarray:
        return self.a * np.exp(self.log_scale)

    def true_b(self) -> np.ndarray:
        return self.b * np.exp(self.log_scale)

    def copy(self) -> "LatticeState":
        return LatticeState(self.cells, self.a, self.b, self.log_scale, self.time)


@dataclass(frozen=True)
class Trajectory:
    """Snapshots of an evolution.

    ``a[i]``, ``b[i]`` are stored amplitudes at ``times[i]``; multiply by
    ``exp(log_scale[i])`` for the true field.
    """

    times: np.ndarray
    a: np.ndarray
    b: np.ndarray
    log_scale: np.ndarray
    boundary: Boundary
    center: int
    dt: float

    @property
    def cells(self) -> int:
        return self.a.shape[1]

    def state(self, i: int) -> LatticeState:
        return LatticeState(self.cells, self.a[i], self.b[i], float(self.log_scale[i]), float(self.times[i]))

    @property
    def final(self) -> LatticeState:
        return self.state(len(self.times) - 1)


@dataclass(frozen=True)
class RayTrace:
    """``log|psi(t)|`` along the ray ``n = center + v t``."""

    velocity: float
    times: np.ndarray
    log_abs_psi: np.ndarray
    sites_visited: np.ndarray
    dropped: int = 0
    truncated_at: float | None = None

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.times.tolist(), self.log_abs_psi.tolist()))


@dataclass(frozen=True)
class LyapunovEstimate:
    velocity: float
    lam: float
    stderr: float
    fit_window: tuple
    n_points: int
    meta: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# right-hand side


def _couplings(model: TwoBandModel):
    return [
        (m, model.rho.get(m, 0j), model.theta.get(m, 0j), model.phi.get(m, 0j))
        for m in model.offsets
    ]


def hopping_norm_bound(model: TwoBandModel) -> float:
    """Infinity-norm bound on the real-space Hamiltonian (largest absolute row sum)."""
    row_a = sum(abs(c) for c in model.rho.values()) + sum(abs(c) for c in model.theta.values())
    row_b = sum(abs(c) for c in model.phi.values()) + sum(abs(c) for c in model.rho.values())
    return float(max(row_a, row_b))


def default_dt(model: TwoBandModel) -> float:
    """``0.05 / max(1, ||H||_inf)``; the norm bounds the spectral radius."""
    return 0.05 / max(1.0, hopping_norm_bound(model))


def _make_rhs(model: TwoBandModel, cells: int, boundary: Boundary):
    coup = _couplings(model)
    if boundary is Boundary.RING:
        def rhs(a, b):
            da = np.zeros_like(a)
            db = np.zeros_like(b)
            for m, r, t, p in coup:
                am, bm = np.roll(a, m), np.roll(b, m)
                da += r * am + t * bm
                db += p * am - r * bm
            return -1j * da, -1j * db
        return rhs

    slices = []
    for m, r, t, p in coup:
        if abs(m) >= cells:
            continue
        if m >= 0:
            dst, src = slice(m, cells), slice(0, cells - m)
        else:
            dst, src = slice(0, cells + m), slice(-m, cells)
        slices.append((dst, src, r, t, p))

    def rhs(a, b):
        da = np.zeros_like(a)
        db = np.zeros_like(b)
        for dst, src, r, t, p in slices:
            as_, bs = a[src], b[src]
            da[dst] += r * as_ + t * bs
            db[dst] += p * as_ - r * bs
        return -1j * da, -1j * db

    return rhs


def evolve(
    model: TwoBandModel,
    initial: LatticeState,
    t_end: float,
    dt: float | None = None,
    boundary: Boundary | str = Boundary.OBC,
    *,
    sample_dt: float | None = DEFAULT_SAMPLE_DT,
) -> Trajectory:
    """Fixed-step RK4 integration of the lattice equations.

    Parameters
    ----------
    initial : LatticeState
        Starting field; it is copied, never modified.
    t_end : float
        Final time (``>= 0``).
    dt : float, optional
        Largest step size; :func:`default_dt` when omitted. Each interval
        between snapshots is split into equal steps no longer than ``dt``.
    boundary : {"OBC", "RING"}
        Open chain (hoppings past the ends are dropped) or periodic ring.
    sample_dt : float or None
        Snapshot spacing. Snapshot times are multiples of ``sample_dt`` plus
        ``t_end`` and do not depend on ``dt``. ``None`` keeps only the initial
        and final states.

    Raises
    ------
    InstabilityError
        NaN or Inf appeared; reduce ``dt``.
    """
    boundary = Boundary(str(getattr(boundary, "value", boundary)).upper())
    if t_end < 0:
        raise DegenerateInputError("t_end must be non-negative")
    dt = default_dt(model) if dt is None else float(dt)
    if not dt > 0:
        raise DegenerateInputError("dt must be positive")
    if sample_dt and t_end > 0:
        marks = sample_dt * np.arange(1, int(np.floor(t_end / sample_dt + 1e-9)) + 1)
        marks = marks[marks < t_end - 1e-9 * max(1.0, t_end)]
        marks = np.append(marks, t_end)
    else:
        marks = np.array([t_end]) if t_end > 0 else np.zeros(0)

    cells = initial.cells
    rhs = _make_rhs(model, cells, boundary)
    a, b = initial.a.copy(), initial.b.copy()
    ls = float(initial.log_scale)
    t0 = float(initial.time)
    times, snaps_a, snaps_b, snaps_ls = [t0], [a.copy()], [b.copy()], [ls]
    h_max, t_prev, step = 0.0, 0.0, 0
    # overflow is checked explicitly after each step
    with np.errstate(over="ignore", invalid="ignore"):
        for mark in marks:
            n_sub = int(np.ceil((mark - t_prev) / dt - 1e-9))
            h = (mark - t_prev) / n_sub
            h_max = max(h_max, h)
            for _ in range(n_sub):
                step += 1
                k1a, k1b = rhs(a, b)
                k2a, k2b = rhs(a + 0.5 * h * k1a, b + 0.5 * h * k1b)
                k3a, k3b = rhs(a + 0.5 * h * k2a, b + 0.5 * h * k2b)
                k4a, k4b = rhs(a + h * k3a, b + h * k3b)
                a = a + (h / 6.0) * (k1a + 2 * k2a + 2 * k3a + k4a)
                b = b + (h / 6.0) * (k1b + 2 * k2b + 2 * k3b + k4b)
                amp = max(np.abs(a).max(), np.abs(b).max())
                if not np.isfinite(amp):
                    raise InstabilityError(
                        f"non-finite amplitude near t={t0 + t_prev:.6g}; reduce dt", step=step, dt=h
                    )
                if amp > 0 and not (RENORM_LOW <= amp <= RENORM_HIGH):
                    a /= amp
                    b /= amp
                    ls += float(np.log(amp))
            t_prev = float(mark)
            times.append(t0 + t_prev)
            snaps_a.append(a.copy())
            snaps_b.append(b.copy())
            snaps_ls.append(ls)
    h = h_max if h_max else dt
    center = int(np.argmax(np.abs(initial.a) + np.abs(initial.b)))
    return Trajectory(
        times=np.array(times), a=np.array(snaps_a), b=np.array(snaps_b),
        log_scale=np.array(snaps_ls), boundary=boundary, center=center, dt=h,
    )


def evolve_spectral(
    model: TwoBandModel,
    initial: LatticeState,
    t: float,
    ring_cells: int | None = None,
    *,
    ep_tol: float = 1e-12,
) -> LatticeState:
    """Exact evolution on a ring through the discrete Bloch modes.

    Each mode ``k_j = 2 pi j / N`` is propagated with
    ``exp(-i H(k) t) = cos(E t) - i sin(E t)/E H(k)``, ``E^2 = Q(e^{ik})``.

    Raises
    ------
    ExceptionalPointError
        ``Q`` vanishes at a grid momentum.
    """
    n = initial.cells if ring_cells is None else int(ring_cells)
    if n != initial.cells:
        raise DegenerateInputError("ring_cells must equal the state size")
    if n < 16:
        raise DegenerateInputError("ring must have at least 16 cells")
    if n < 2 * model.reach + 1:
        raise DegenerateInputError("ring too short for the hopping range")
    beta = np.exp(2j * np.pi * np.arange(n) / n)
    dz, tt, pp = rho_symbol(model)(beta), theta_symbol(model)(beta), phi_symbol(model)(beta)
    q = tt * pp + dz * dz
    scale = max(float(np.abs(np.concatenate([dz, tt, pp])).max()), 1e-300)
    bad = np.abs(q) <= ep_tol * scale * scale
    if np.any(bad) and scale > 1e-300 and np.any(np.abs(np.stack([dz, tt, pp])[:, bad]) > 0):
        raise ExceptionalPointError("Q vanishes on the ring momentum grid", k_index=np.flatnonzero(bad).tolist())
    e = np.sqrt(q)
    c = np.cos(e * t)
    s = np.where(np.abs(e) > 0, np.sin(e * t) / np.where(np.abs(e) > 0, e, 1.0), t)
    ah, bh = np.fft.fft(initial.a), np.fft.fft(initial.b)
    a_new = c * ah - 1j * s * (dz * ah + tt * bh)
    b_new = c * bh - 1j * s * (pp * ah - dz * bh)
    return LatticeState(n, np.fft.ifft(a_new), np.fft.ifft(b_new), initial.log_scale, initial.time + t)


# ---------------------------------------------------------------------------
# rays and fits


def _ray_log_amp(field: np.ndarray, x: float, window: int) -> tuple[float, np.ndarray]:
    if window <= 0:
        n = int(np.floor(x + 0.5))
        return float(np.log(np.abs(field[n]))) if field[n] != 0 else -np.inf, np.array([n])
    base = int(np.floor(x))
    sites = np.arange(base - window + 1, base + window + 1)
    w = np.clip(1.0 - np.abs(sites - x) / window, 0.0, None)
    power = float((w * np.abs(field[sites]) ** 2).sum() / w.sum())
    return (0.5 * np.log(power) if power > 0 else -np.inf), sites


def sample_ray(
    trajectory: Trajectory,
    v: float,
    component: str = "A",
    window: int | str = DEFAULT_WINDOW,
    *,
    margin: int = EDGE_MARGIN,
) -> RayTrace:
    """Sample ``log|psi|`` along ``n = center + v t`` at every snapshot.

    Parameters
    ----------
    component : {"A", "B"}
        Sublattice to sample.
    window : int or "nearest"
        ``"nearest"`` (or 0) reads the single site ``round(center + v t)``.
        A positive integer ``w`` takes the root-mean-square amplitude over the
        ``2w`` sites around ``center + v t`` with triangular weights of
        half-width ``w``; this averages out the interference between the
        sublattice-resolved partial waves, which otherwise oscillates with the
        lattice period.

    Snapshots whose sites come within ``margin`` cells of an open edge are
    skipped and a warning names the last safe time.
    """
    comp = component.upper()
    if comp not in ("A", "B"):
        raise DegenerateInputError("component must be 'A' or 'B'")
    w = 0 if window in ("nearest", None) else int(window)
    fields = trajectory.a if comp == "A" else trajectory.b
    cells = trajectory.cells
    times, values, visited = [], [], []
    dropped = 0
    truncated = None
    last_safe = None
    for i, t in enumerate(trajectory.times):
        x = trajectory.center + v * t
        lo, hi = int(np.floor(x)) - max(w, 1), int(np.floor(x)) + max(w, 1)
        if trajectory.boundary is Boundary.OBC:
            if lo < margin or hi > cells - 1 - margin:
                truncated = last_safe if truncated is None else truncated
                continue
        else:
            x = x % cells
            if int(np.floor(x)) + max(w, 1) >= cells or int(np.floor(x)) - max(w, 1) < 0:
                # keep the window contiguous by shifting the field
                shift = cells // 2 - int(np.floor(x))
                val, sites = _ray_log_amp(np.roll(fields[i], shift), x + shift, w)
                sites = (sites - shift) % cells
                if np.isfinite(val):
                    times.append(t)
                    values.append(val + trajectory.log_scale[i])
                    visited.extend(sites.tolist())
                else:
                    dropped += 1
                continue
        val, sites = _ray_log_amp(fields[i], x, w)
        last_safe = float(t)
        if not np.isfinite(val):
            dropped += 1
            continue
        times.append(t)
        values.append(val + trajectory.log_scale[i])
        visited.extend(sites.tolist())
    if truncated is not None or (trajectory.boundary is Boundary.OBC and len(times) < len(trajectory.times) - dropped):
        warnings.warn(
            f"ray v={v:g} leaves the safe interior; last safe time {last_safe}",
            RuntimeWarning,
            stacklevel=2,
        )
    return RayTrace(
        velocity=float(v), times=np.array(times), log_abs_psi=np.array(values),
        sites_visited=np.unique(np.array(visited, dtype=int)), dropped=dropped,
        truncated_at=last_safe if truncated is not None else None,
    )


def fit_ray(trace: RayTrace, t_lo: float, t_hi: float) -> LyapunovEstimate:
    """Least-squares slope of ``log|psi|`` over ``t_lo <= t <= t_hi``."""
    sel = (trace.times >= t_lo - 1e-12) & (trace.times <= t_hi + 1e-12)
    if sel.sum() < 5:
        raise InsufficientDataError(
            f"only {int(sel.sum())} usable samples for v={trace.velocity:g}",
            n_points=int(sel.sum()), dropped=trace.dropped,
        )
    fit = linear_fit(trace.times[sel], trace.log_abs_psi[sel])
    return LyapunovEstimate(
        velocity=trace.velocity, lam=fit.slope, stderr=fit.stderr,
        fit_window=(float(t_lo), float(t_hi)), n_points=int(sel.sum()),
        meta={"residual_rms": fit.residual_rms, "dropped": trace.dropped},
    )


def run_seeded(
    model: TwoBandModel,
    *,
    cells: int = DEFAULT_CELLS,
    t_end: float = DEFAULT_T_END,
    dt: float | None = None,
    sample_dt: float = DEFAULT_SAMPLE_DT,
) -> Trajectory:
    """Open-chain evolution from ``a_0 = b_0 = 1`` at the central cell."""
    if cells < 101:
        raise DegenerateInputError("cells must be at least 101")
    if t_end < 5:
        raise DegenerateInputError("t_end must be at least 5")
    return evolve(model, LatticeState.seed(cells), t_end, dt, Boundary.OBC, sample_dt=sample_dt)


def lyapunov_curve(
    model: TwoBandModel,
    velocities,
    *,
    cells: int = DEFAULT_CELLS,
    t_end: float = DEFAULT_T_END,
    dt: float | None = None,
    fit_lo_frac: float = DEFAULT_FIT_LO,
    window: int | str = DEFAULT_WINDOW,
    component: str = "A",
    trajectory: Trajectory | None = None,
) -> list[LyapunovEstimate]:
    """Lyapunov estimates for many velocities from one seeded evolution."""
    if trajectory is None:
        trajectory = run_seeded(model, cells=cells, t_end=t_end, dt=dt)
    t_hi = float(trajectory.times[-1])
    out = []
    for v in np.atleast_1d(velocities):
        trace = sample_ray(trajectory, float(v), component, window)
        out.append(fit_ray(trace, fit_lo_frac * t_hi, t_hi))
    return out


def lyapunov_estimate(
    model: TwoBandModel,
    v: float = 0.0,
    *,
    cells: int = DEFAULT_CELLS,
    t_end: float = DEFAULT_T_END,
    dt: float | None = None,
    fit_lo_frac: float = DEFAULT_FIT_LO,
    window: int | str = DEFAULT_WINDOW,
    component: str = "A",
    trajectory: Trajectory | None = None,
) -> LyapunovEstimate:
    """Growth rate of ``|a_n|`` along ``n = v t`` from a single-cell seed.

    Evolves the open chain once, samples the ray and fits a line to
    ``log|psi|`` over ``[fit_lo_frac t_end, t_end]``.

    Raises
    ------
    InsufficientDataError
        Fewer than five usable samples in the fit window.
    """
    return lyapunov_curve(
        model, [v], cells=cells, t_end=t_end, dt=dt, fit_lo_frac=fit_lo_frac,
        window=window, component=component, trajectory=trajectory,
    )[0]


def relative_deviation(x: LatticeState, y: LatticeState) -> float:
    """``max |x - y| / max |y|`` over both sublattices, using true amplitudes."""
    dx = np.concatenate([x.true_a() - y.true_a(), x.true_b() - y.true_b()])
    ref = np.concatenate([y.true_a(), y.true_b()])
    return float(np.abs(dx).max() / np.abs(ref).max())
