"""Saddle points of the band symbol, predicted Lyapunov exponents, NHSE verdict.

Along the ray ``n = v t`` the field grows like ``exp(lambda(v) t)`` with

    lambda(v) = Im E(k_s) - v Im k_s,   dE/dk (k_s) = v,

where ``E = +-sqrt(Q)``. Squaring ``dE/dk = v`` gives the polynomial saddle
equation ``(i beta dQ/dbeta)^2 - 4 v^2 Q = 0``.

Not every root of that equation controls the dynamics. Writing
``h(beta) = |Im sqrt(Q(beta))| + v ln|beta|``, the growth rate is

    lambda(v) = min over closed contours C around 0 of max_{beta in C} h(beta),

the height of the lowest mountain pass separating ``beta = 0`` from infinity.
That minimax is attained at a root of the saddle equation (steepest-descent
admissibility). It is located on a polar grid and then snapped to the nearest
saddle candidate, which supplies the exact value.

The circle-restricted version

    B(v) = min_rho [ max_phi |Im sqrt(Q(e^{rho + i phi}))| + v rho ]

is also reported; it is an upper bound that is tight whenever the optimal
contour is a circle.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import ndimage
from scipy.optimize import minimize_scalar

from .errors import DegenerateSymbolError
from .laurent import LaurentPolynomial
from .model import TwoBandModel, q_polynomial
from .numerics import polynomial_roots
from .spectra import GeometryKind, classify_pbc_geometry

V_ZERO = 1e-12
ROOT_MERGE_RTOL = 1e-6
SNAP_TOL = 1e-2
GRID_RHO_MAX = 6.0
GRID_N_RHO = 601
GRID_N_PHI = 512


@dataclass(frozen=True)
class SaddlePoint:
    """One root of the saddle equation.

    Attributes
    ----------
    beta_s : complex
    k_s : complex
        ``-i Log(beta_s)`` on the principal branch, so ``Im k_s = -ln|beta_s|``.
    energy : complex
        Energy on the branch that satisfies ``dE/dk = v`` (for ``v = 0`` the
        branch with the larger imaginary part).
    energy_alt : complex
        The opposite branch ``-energy``.
    order : int
        ``n >= 2`` such that ``E(k) - v k`` departs from its saddle value like
        ``(k - k_s)^n``.
    lyapunov_candidate : float
        ``Im energy - v Im k_s``.
    on_unit_circle : bool
    admissible : bool
        Candidate does not exceed the contour minimax.
    """

    beta_s: complex
    k_s: complex
    energy: complex
    energy_alt: complex
    order: int
    lyapunov_candidate: float
    on_unit_circle: bool
    admissible: bool = True

    @property
    def radius(self) -> float:
        return abs(self.beta_s)


@dataclass(frozen=True)
class SaddleReport:
    """Saddle analysis at one drift velocity.

    Attributes
    ----------
    velocity : float
    saddles : list of SaddlePoint
    dominant : int or None
        Index of the saddle that realizes the contour minimax.
    lambda_pred : float
        Predicted Lyapunov exponent.
    lambda_naive : float
        Largest candidate over all saddles and both energy branches,
        regardless of admissibility.
    contour_bound : float
        ``B(v)``, the circle-restricted upper bound.
    minimax : float
        Grid estimate of the contour minimax.
    source : str
        ``"saddle"`` when ``lambda_pred`` is the dominant saddle's candidate,
        ``"minimax_grid"`` when no saddle candidate matches the grid minimax.
    """

    velocity: float
    saddles: list
    dominant: int | None
    lambda_pred: float
    lambda_naive: float
    contour_bound: float
    minimax: float
    source: str
    flags: dict = field(default_factory=dict)

    @property
    def radii(self) -> np.ndarray:
        return np.array([s.radius for s in self.saddles])

    @property
    def dominant_saddle(self) -> SaddlePoint | None:
        return None if self.dominant is None else self.saddles[self.dominant]


def _symbol(model_or_q) -> LaurentPolynomial:
    if isinstance(model_or_q, LaurentPolynomial):
        return model_or_q.trimmed()
    return q_polynomial(model_or_q).trimmed()


def _poly_desc(p: LaurentPolynomial) -> np.ndarray:
    num, _ = p.numerator()
    return num


def saddle_equation(model: TwoBandModel | LaurentPolynomial, v: float) -> np.ndarray:
    """Polynomial whose nonzero roots are the saddle points at drift velocity ``v``.

    Returns coefficients, highest degree first, of the numerator of
    ``(i beta Q')^2 - 4 v^2 Q`` with all powers of ``beta`` cleared so that the
    constant term is nonzero. For ``v = 0`` the numerator of ``beta Q'`` is
    returned instead (the squared form would double every root).

    Raises
    ------
    DegenerateSymbolError
        ``Q`` is constant.
    """
    q = _symbol(model)
    if q.is_constant():
        raise DegenerateSymbolError("Q is constant; no saddle points exist")
    p = q.beta_derivative()
    if abs(v) < V_ZERO:
        return _poly_desc(p)
    return _poly_desc((-1.0) * (p * p) - (4.0 * v * v) * q)


def _multiplicities(roots: np.ndarray, rtol: float = ROOT_MERGE_RTOL) -> np.ndarray:
    """Size of the cluster each root belongs to."""
    n = roots.size
    mult = np.ones(n, dtype=int)
    for i in range(n):
        close = np.abs(roots - roots[i]) <= rtol * max(1.0, abs(roots[i]))
        mult[i] = int(close.sum())
    return mult


# ---------------------------------------------------------------------------
# contour bound


def _coeff_key(q: LaurentPolynomial):
    return (q.n_min, tuple(complex(c) for c in q.coeffs))


@lru_cache(maxsize=64)
def _growth_profile(key, rho_max: float, n_rho: int, n_phi: int):
    n_min, coeffs = key
    q = LaurentPolynomial(n_min, np.array(coeffs))
    rho = np.linspace(-rho_max, rho_max, n_rho)
    phi = np.linspace(-np.pi, np.pi, n_phi, endpoint=False)
    prof = np.empty(n_rho)
    for i in range(0, n_rho, 64):
        blk = np.exp(rho[i : i + 64, None] + 1j * phi[None, :])
        prof[i : i + 64] = np.abs(np.sqrt(q(blk)).imag).max(axis=1)
    return rho, prof


def _max_im_on_circle(q: LaurentPolynomial, rho: float, n_phi: int) -> float:
    phi = np.linspace(-np.pi, np.pi, n_phi, endpoint=False)
    vals = np.abs(np.sqrt(q(np.exp(rho + 1j * phi))).imag)
    i = int(vals.argmax())
    # local refinement of the maximum over the angle
    f = lambda x: -abs(np.sqrt(complex(q(np.exp(rho + 1j * x)))).imag)  # noqa: E731
    h = 2 * np.pi / n_phi
    res = minimize_scalar(f, bounds=(phi[i] - h, phi[i] + h), method="bounded",
                          options={"xatol": 1e-12})
    return max(float(vals[i]), -float(res.fun))


def contour_bound(
    model: TwoBandModel | LaurentPolynomial,
    v: float,
    *,
    rho_max: float = 6.0,
    n_rho: int = 1201,
    n_phi: int = 2048,
) -> tuple[float, float]:
    """``B(v)`` and the minimizing ``rho = ln r``.

    A coarse profile over ``rho`` is cached per symbol; the minimum is then
    refined with a bounded scalar search. The ``rho`` range doubles whenever
    the minimizer sits on its boundary.
    """
    q = _symbol(model)
    key = _coeff_key(q)
    while True:
        rho, prof = _growth_profile(key, rho_max, n_rho, n_phi)
        total = prof + v * rho
        i = int(total.argmin())
        if 0 < i < rho.size - 1 or rho_max >= 48:
            break
        rho_max *= 2
        n_rho = 2 * n_rho - 1
    lo, hi = rho[max(i - 1, 0)], rho[min(i + 1, rho.size - 1)]
    g = lambda x: _max_im_on_circle(q, x, n_phi) + v * x  # noqa: E731
    res = minimize_scalar(g, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
    best_rho, best = (float(res.x), float(res.fun)) if res.fun < g(rho[i]) else (float(rho[i]), g(rho[i]))
    return best, best_rho


@lru_cache(maxsize=64)
def _height_grid(key, rho_max: float, n_rho: int, n_phi: int):
    n_min, coeffs = key
    q = LaurentPolynomial(n_min, np.array(coeffs))
    rho = np.linspace(-rho_max, rho_max, n_rho)
    phi = np.linspace(-np.pi, np.pi, n_phi, endpoint=False)
    grid = np.abs(np.sqrt(q(np.exp(rho[:, None] + 1j * phi[None, :]))).imag)
    grid.setflags(write=False)
    return rho, grid


def _spans_annulus(mask: np.ndarray) -> bool:
    """Whether ``mask`` links the innermost and outermost rows (angle is periodic)."""
    labels, n = ndimage.label(mask)
    if n == 0:
        return False
    parent = np.arange(n + 1)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for x, y in zip(labels[:, 0], labels[:, -1]):
        if x and y:
            parent[find(x)] = find(y)
    inner = {find(x) for x in np.unique(labels[0]) if x}
    outer = {find(x) for x in np.unique(labels[-1]) if x}
    return bool(inner & outer)


def contour_minimax(
    model: TwoBandModel | LaurentPolynomial,
    v: float,
    *,
    rho_max: float = GRID_RHO_MAX,
    n_rho: int = GRID_N_RHO,
    n_phi: int = GRID_N_PHI,
    xtol: float = 1e-6,
) -> float:
    """Grid estimate of ``min_C max_{beta in C} h(beta)`` over loops around 0.

    A loop at level ``L`` exists exactly when ``{h > L}`` does not connect the
    inner and outer boundary circles of the annulus, so the answer is found by
    bisection on ``L`` with connected-component labelling, stopped once the
    bracket is narrower than ``xtol * max(1, |L|)``.
    """
    q = _symbol(model)
    rho, grid = _height_grid(_coeff_key(q), rho_max, n_rho, n_phi)
    h = grid + v * rho[:, None]
    hi = float(h.max(axis=1).min())  # some full circle lies below this level
    lo = float(h.min())
    if not _spans_annulus(h > lo):
        return lo
    while hi - lo > xtol * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        if _spans_annulus(h > mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# saddle points


def saddle_points(
    model: TwoBandModel | LaurentPolynomial,
    v: float = 0.0,
    *,
    tol_radius: float = 1e-4,
    snap_tol: float = SNAP_TOL,
) -> SaddleReport:
    """Solve the saddle equation and select the saddle realizing the contour minimax.

    Parameters
    ----------
    v : float
        Drift velocity.
    tol_radius : float
        ``||beta_s| - 1| <= tol_radius`` marks a saddle as on the unit circle.
    snap_tol : float
        Largest distance, relative to ``max(1, |lambda|)``, between the grid
        minimax and the saddle candidate it is snapped to.
    """
    q = _symbol(model)
    v = 0.0 if abs(v) < V_ZERO else float(v)
    coeffs = saddle_equation(q, v)
    roots = polynomial_roots(coeffs) if coeffs.size > 1 else np.zeros(0, dtype=complex)
    roots = roots[np.abs(roots) > 0]
    mult = _multiplicities(roots)
    p = q.beta_derivative()
    bound, _ = contour_bound(q, v)
    mm = contour_minimax(q, v)
    slack = snap_tol * max(1.0, abs(mm))

    raw = []
    for beta, m in zip(roots, mult):
        beta = complex(beta)
        k_s = -1j * np.log(beta)
        if v == 0.0:
            e = complex(np.sqrt(complex(q(beta))))
            e = e if e.imag >= -e.imag else -e
        else:
            e = complex(1j * p(beta) / (2 * v))
        cand = e.imag - v * k_s.imag
        raw.append((beta, k_s, e, int(m) + 1, float(cand)))

    saddles = [
        SaddlePoint(
            beta_s=beta, k_s=k_s, energy=e, energy_alt=-e, order=order,
            lyapunov_candidate=cand,
            on_unit_circle=abs(abs(beta) - 1.0) <= tol_radius,
            admissible=cand <= mm + slack,
        )
        for beta, k_s, e, order, cand in raw
    ]
    naive = max(
        (max(s.energy.imag, s.energy_alt.imag) - v * s.k_s.imag for s in saddles),
        default=float("nan"),
    )
    near = [i for i, s in enumerate(saddles) if abs(s.lyapunov_candidate - mm) <= slack]
    dominant = min(
        near,
        key=lambda i: (abs(saddles[i].lyapunov_candidate - mm), -saddles[i].lyapunov_candidate),
        default=None,
    )
    flags = {}
    if dominant is not None:
        lam, source = saddles[dominant].lyapunov_candidate, "saddle"
    else:
        lam, source = mm, "minimax_grid"
        flags["no_matching_saddle"] = True
    if saddles and naive > lam + slack:
        flags["non_admissible_saddle"] = True
    return SaddleReport(
        velocity=v, saddles=saddles, dominant=dominant, lambda_pred=float(lam),
        lambda_naive=float(naive), contour_bound=float(bound), minimax=float(mm),
        source=source, flags=flags,
    )


def lyapunov_predicted(model: TwoBandModel | LaurentPolynomial, v: float = 0.0) -> float:
    """Predicted Lyapunov exponent ``lambda(v)`` of the dominant saddle."""
    return saddle_points(model, v).lambda_pred


# ---------------------------------------------------------------------------
# verdict


class Verdict(str, enum.Enum):
    NHSE = "NHSE"
    NO_NHSE = "NO_NHSE"
    EXCEPTIONAL_CUSP = "EXCEPTIONAL_CUSP"


@dataclass(frozen=True)
class VerdictDetail:
    verdict: Verdict
    radii: tuple
    off_circle: tuple
    cusp: tuple
    geometry: str
    reason: str


def nhse_verdict(
    model: TwoBandModel,
    tol_radius: float = 1e-4,
    num_k: int = 1024,
    *,
    details: bool = False,
    cusp_tol: float = 1e-9,
):
    """Saddle-point criterion for the non-Hermitian skin effect.

    * Some stationary point of ``Q`` off the unit circle: ``NHSE``.
    * All on the circle and the periodic spectrum is a set of open arcs:
      ``NO_NHSE``. On arcs every turning point is an on-circle saddle with
      ``Q'' != 0`` without any cusp in the curve, so the curvature test below
      would misfire.
    * All on the circle, closed loops, and ``Q''(beta_s) != 0`` at some saddle
      (a cusp of the periodic spectrum): ``EXCEPTIONAL_CUSP``; the criterion is
      inconclusive there.
    * Otherwise ``NO_NHSE``. A symbol without stationary points is judged by
      the loop geometry alone.
    """
    q = _symbol(model)
    rep = saddle_points(q, 0.0, tol_radius=tol_radius)
    geom = classify_pbc_geometry(model, num_k)
    radii = tuple(float(s.radius) for s in rep.saddles)
    off = tuple(abs(r - 1.0) > tol_radius for r in radii)
    d2 = q.derivative().derivative()
    scale = max(float(np.abs(q.coeffs).max()), 1e-300)
    cusp = tuple(bool(abs(complex(d2(s.beta_s))) > cusp_tol * scale) for s in rep.saddles)
    if any(off):
        verdict, reason = Verdict.NHSE, "saddle off the unit circle"
    elif not rep.saddles:
        loops = geom.kind is GeometryKind.CLOSED_LOOPS
        verdict = Verdict.NHSE if loops else Verdict.NO_NHSE
        reason = "no saddle points; judged by spectral geometry"
    elif geom.kind is GeometryKind.OPEN_ARCS:
        verdict, reason = Verdict.NO_NHSE, "saddles on the unit circle, open-arc spectrum"
    elif any(cusp):
        verdict, reason = Verdict.EXCEPTIONAL_CUSP, "saddles on the unit circle are cusps of a loop spectrum"
    else:
        verdict, reason = Verdict.NO_NHSE, "saddles on the unit circle, no cusps"
    if details:
        return VerdictDetail(verdict, radii, off, cusp, geom.kind.value, reason)
    return verdict
