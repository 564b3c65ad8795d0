"""Bloch (periodic) and open-chain spectra, GBZ sampling and spectral geometry."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DegenerateInputError, UnsupportedModelError
from .laurent import LaurentPolynomial
from .model import TwoBandModel, q_polynomial
from .numerics import complex_eigenvalues, directed_distance, polynomial_roots

EP_THRESHOLD = 1e-9
ISOLATION_FACTOR = 5.0


class Provenance(str, enum.Enum):
    PBC_SAMPLED = "PBC_SAMPLED"
    OBC_DENSE_FULL = "OBC_DENSE_FULL"
    OBC_DENSE_H0 = "OBC_DENSE_H0"
    OBC_CLOSED_FORM = "OBC_CLOSED_FORM"
    OBC_GBZ = "OBC_GBZ"


class ObcMethod(str, enum.Enum):
    FULL = "FULL"
    H0 = "H0"
    CLOSED_FORM = "CLOSED_FORM"


@dataclass(frozen=True)
class SpectrumSet:
    """Complex energies with their origin.

    Attributes
    ----------
    energies : ndarray of complex
    provenance : Provenance
    parameter : ndarray of float
        Wavenumber for sampled spectra, eigenvalue index otherwise.
    cells : int or None
        Chain length N for open-chain spectra.
    branch : ndarray of int
        +1 / -1 square-root branch label (0 when not tracked).
    isolated : ndarray of bool
        Eigenvalues separated from the bulk cloud (edge states).
    meta : dict
        Diagnostics such as the similarity gauge used.
    """

    energies: np.ndarray
    provenance: Provenance
    parameter: np.ndarray
    cells: int | None = None
    branch: np.ndarray | None = None
    isolated: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=complex).ravel()
        n = e.size
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "parameter", np.asarray(self.parameter, dtype=float).ravel())
        br = np.zeros(n, dtype=int) if self.branch is None else np.asarray(self.branch, dtype=int)
        iso = np.zeros(n, dtype=bool) if self.isolated is None else np.asarray(self.isolated, dtype=bool)
        object.__setattr__(self, "branch", br)
        object.__setattr__(self, "isolated", iso)
        if not (self.parameter.size == br.size == iso.size == n):
            raise DegenerateInputError("SpectrumSet arrays must be aligned")

    @property
    def energy_sq(self) -> np.ndarray:
        return self.energies**2

    @property
    def bulk(self) -> np.ndarray:
        """Energies with isolated entries removed."""
        return self.energies[~self.isolated]

    def __len__(self):
        return self.energies.size

    def chiral_defect(self) -> float:
        """Largest distance from an energy ``E`` to the nearest ``-E`` in the set."""
        return directed_distance(self.energies, -self.energies)


# ---------------------------------------------------------------------------
# periodic chain


def k_grid(num_k: int) -> np.ndarray:
    """Uniform grid ``-pi <= k < pi``."""
    return -np.pi + 2 * np.pi * np.arange(num_k) / num_k


def continuous_sqrt(values) -> np.ndarray:
    """Square roots whose sign follows the previous entry (branch by continuity)."""
    values = np.asarray(values, dtype=complex)
    out = np.sqrt(values)
    for i in range(1, out.size):
        if abs(out[i] + out[i - 1]) < abs(out[i] - out[i - 1]):
            out[i] = -out[i]
    return out


def pbc_spectrum(model: TwoBandModel, num_k: int = 512) -> SpectrumSet:
    """Both bands ``+-sqrt(Q(exp(ik)))`` on a uniform k grid.

    The first half of the output is the branch continued from the principal
    root at ``k = -pi``; the second half is its negative.
    """
    if num_k < 8:
        raise DegenerateInputError("num_k must be at least 8")
    k = k_grid(num_k)
    e = continuous_sqrt(q_polynomial(model).on_circle(k))
    return SpectrumSet(
        energies=np.concatenate([e, -e]),
        provenance=Provenance.PBC_SAMPLED,
        parameter=np.concatenate([k, k]),
        branch=np.repeat([1, -1], num_k),
    )


def separability_check(model: TwoBandModel, num_k: int = 1024) -> float:
    """Minimum of ``|Q(exp(ik))|`` on the k grid.

    Values below ``EP_THRESHOLD`` signal an exceptional point on the
    Brillouin zone.
    """
    if num_k < 64:
        raise DegenerateInputError("num_k must be at least 64")
    return float(np.abs(q_polynomial(model).on_circle(k_grid(num_k))).min())


def max_im_pbc(model: TwoBandModel, num_k: int = 4096) -> float:
    """``max_k Im E_PBC`` over both bands, i.e. ``max_k |Im sqrt(Q)|``."""
    q = q_polynomial(model).on_circle(k_grid(num_k))
    return float(np.abs(np.sqrt(q).imag).max())


# ---------------------------------------------------------------------------
# open chain


def _toeplitz(hop: dict, n: int, gauge: float) -> np.ndarray:
    """``M[i, j] = hop[i - j] * gauge**(j - i)``."""
    m = np.zeros((n, n), dtype=complex)
    for off, c in hop.items():
        if abs(off) >= n:
            continue
        idx = np.arange(max(off, 0), n + min(off, 0))
        m[idx, idx - off] = c * gauge ** (-off)
    return m


def build_obc_hamiltonian(model: TwoBandModel, cells: int, gauge: float = 1.0) -> np.ndarray:
    """Open-chain Hamiltonian ``[[A, B1], [B2, -A]]`` with Toeplitz blocks.

    ``A[n, l] = rho_{n-l}``, ``B1[n, l] = theta_{n-l}``, ``B2[n, l] = phi_{n-l}``.
    With ``gauge = r != 1`` the similar matrix ``D^-1 H D``,
    ``D = diag(r**n)``, is returned instead; its spectrum is the same.
    """
    if cells < 2:
        raise DegenerateInputError("need at least 2 cells")
    a = _toeplitz(model.rho, cells, gauge)
    b1 = _toeplitz(model.theta, cells, gauge)
    b2 = _toeplitz(model.phi, cells, gauge)
    return np.block([[a, b1], [b2, -a]])


def build_h0(model: TwoBandModel, cells: int, gauge: float = 1.0) -> np.ndarray:
    """Toeplitz matrix of the symbol ``Q``: ``H0[n, l] = sigma_{l-n} * gauge**(l-n)``.

    Built from the coefficients of ``Q`` directly; it agrees with
    ``A^2 + B1 B2`` away from the first and last few rows.
    """
    if cells < 2:
        raise DegenerateInputError("need at least 2 cells")
    q = q_polynomial(model)
    # entry sigma_p sits at l - n = p, i.e. at hopping offset n - l = -p
    return _toeplitz({-p: c for p, c in q.to_dict().items()}, cells, gauge)


def saddle_radii_v0(q: LaurentPolynomial) -> np.ndarray:
    """Moduli of the nonzero roots of ``beta dQ/dbeta``."""
    dq = q.beta_derivative().trimmed()
    if dq.is_zero():
        return np.zeros(0)
    num, _ = dq.numerator()
    if num.size < 2:
        return np.zeros(0)
    return np.abs(polynomial_roots(num))


def gauge_radius(model: TwoBandModel, rtol: float = 1e-6) -> float:
    """Similarity gauge that tames the non-normality of the open chain.

    For a tridiagonal symbol ``sigma_-1/beta + sigma_0 + sigma_1 beta`` this is
    ``sqrt|sigma_-1 / sigma_1|``. Otherwise the common modulus of the
    stationary points of ``Q`` is used when they all agree, else 1.
    """
    q = q_polynomial(model).trimmed()
    if q.is_zero():
        return 1.0
    if q.n_min >= -1 and q.n_max <= 1:
        lo, hi = q.coeff(-1), q.coeff(1)
        if lo != 0 and hi != 0:
            return float(np.sqrt(abs(lo / hi)))
        return 1.0
    radii = saddle_radii_v0(q)
    if radii.size and np.ptp(radii) <= rtol * radii.mean():
        return float(radii.mean())
    return 1.0


def isolated_mask(energies, factor: float = ISOLATION_FACTOR) -> np.ndarray:
    """Flag eigenvalues far from the rest relative to the local level spacing.

    ``e`` is isolated when its distance to the nearest other eigenvalue
    exceeds ``factor`` times that neighbour's own nearest-neighbour distance.
    The chiral partner of ``e`` (the eigenvalue closest to ``-e``) is left out
    of both distances, so a zero-energy edge pair is still recognized. The
    comparison uses the local density, so sparse but genuine bulk regions are
    not flagged.
    """
    e = np.asarray(energies, dtype=complex).ravel()
    n = e.size
    if n < 4:
        return np.zeros(n, dtype=bool)
    dist = np.abs(e[:, None] - e[None, :])
    np.fill_diagonal(dist, np.inf)
    sums = np.abs(e[:, None] + e[None, :])
    np.fill_diagonal(sums, np.inf)
    partner = sums.argmin(axis=1)
    out = np.zeros(n, dtype=bool)
    for i in range(n):
        row = dist[i].copy()
        row[partner[i]] = np.inf
        j = row.argmin()
        other = dist[j].copy()
        other[[i, partner[i]]] = np.inf
        out[i] = row[j] > factor * other.min()
    return out


def _resolve_gauge(model, gauge):
    if gauge is None or gauge == "auto":
        return gauge_radius(model)
    g = float(gauge)
    if not g > 0:
        raise DegenerateInputError("gauge radius must be positive")
    return g


def _tridiagonal_h0_eigs(model: TwoBandModel, cells: int) -> np.ndarray:
    q = q_polynomial(model).trimmed()
    if q.n_min < -1 or q.n_max > 1:
        raise UnsupportedModelError(
            "closed-form open-chain spectrum needs a symbol with powers -1, 0, 1 only"
        )
    j = np.arange(1, cells + 1)
    return q.coeff(0) + 2 * np.sqrt(complex(q.coeff(-1) * q.coeff(1))) * np.cos(j * np.pi / (cells + 1))


def obc_spectrum(
    model: TwoBandModel,
    cells: int,
    method: ObcMethod | str = ObcMethod.FULL,
    *,
    gauge="auto",
    isolation_factor: float = ISOLATION_FACTOR,
) -> SpectrumSet:
    """Open-chain spectrum.

    Parameters
    ----------
    method : {"FULL", "H0", "CLOSED_FORM"}
        ``FULL`` diagonalizes the ``2N x 2N`` Hamiltonian; ``H0`` the ``N x N``
        Toeplitz matrix of ``Q`` and unfolds ``E = +-sqrt(E^2)``;
        ``CLOSED_FORM`` uses the tridiagonal Toeplitz formula
        ``sigma_0 + 2 sqrt(sigma_1 sigma_-1) cos(j pi / (N+1))`` (symbols with
        powers -1..1 only).
    gauge : "auto" or float
        Radius of the diagonal similarity applied before diagonalizing.
    """
    method = ObcMethod(str(getattr(method, "value", method)).upper())
    meta: dict = {"method": method.value}
    if method is ObcMethod.FULL:
        r = _resolve_gauge(model, gauge)
        meta["gauge_radius"] = r
        energies = complex_eigenvalues(build_obc_hamiltonian(model, cells, r))
        prov = Provenance.OBC_DENSE_FULL
        branch = None
    else:
        if method is ObcMethod.H0:
            r = _resolve_gauge(model, gauge)
            meta["gauge_radius"] = r
            esq = complex_eigenvalues(build_h0(model, cells, r))
            prov = Provenance.OBC_DENSE_H0
        else:
            esq = _tridiagonal_h0_eigs(model, cells)
            prov = Provenance.OBC_CLOSED_FORM
        root = np.sqrt(esq)
        energies = np.concatenate([root, -root])
        branch = np.repeat([1, -1], root.size)
    order = np.lexsort((energies.imag, energies.real))
    energies = energies[order]
    if branch is not None:
        branch = branch[order]
    iso = isolated_mask(energies, isolation_factor) if method is ObcMethod.FULL else None
    spec = SpectrumSet(
        energies=energies,
        provenance=prov,
        parameter=np.arange(energies.size),
        cells=cells,
        branch=branch,
        isolated=iso,
        meta=meta,
    )
    spec.meta["chiral_defect"] = spec.chiral_defect()
    return spec


def unfold_energy_sq(esq) -> np.ndarray:
    """``E = +-sqrt(E^2)`` for every entry."""
    root = np.sqrt(np.asarray(esq, dtype=complex))
    return np.concatenate([root, -root])


# ---------------------------------------------------------------------------
# generalized Brillouin zone


class GbzSample(NamedTuple):
    beta: complex
    energy_sq: complex
    radius: float


def _segment_crossings(z: np.ndarray):
    """Self-intersections of the closed polyline through ``z``.

    Returns index pairs ``(i, j)`` and fractions ``(s, u)`` such that the
    crossing is ``z[i] + s (z[i+1]-z[i]) = z[j] + u (z[j+1]-z[j])``.
    """
    m = z.size
    p = z
    d = np.roll(z, -1) - z
    ii, jj = np.triu_indices(m, k=2)
    keep = ~((ii == 0) & (jj == m - 1))
    ii, jj = ii[keep], jj[keep]
    # bounding-box prefilter
    lo_re = np.minimum(p.real, p.real + d.real)
    hi_re = np.maximum(p.real, p.real + d.real)
    lo_im = np.minimum(p.imag, p.imag + d.imag)
    hi_im = np.maximum(p.imag, p.imag + d.imag)
    box = (
        (lo_re[ii] <= hi_re[jj]) & (lo_re[jj] <= hi_re[ii])
        & (lo_im[ii] <= hi_im[jj]) & (lo_im[jj] <= hi_im[ii])
    )
    ii, jj = ii[box], jj[box]
    if ii.size == 0:
        return ii, jj, np.zeros(0), np.zeros(0)
    di, dj = d[ii], d[jj]
    w = p[jj] - p[ii]
    cross = lambda a, b: a.real * b.imag - a.imag * b.real  # noqa: E731
    den = cross(di, dj)
    ok = np.abs(den) > 1e-300
    with np.errstate(divide="ignore", invalid="ignore"):
        s = cross(w, dj) / den
        u = cross(w, di) / den
    hit = ok & (s >= 0) & (s < 1) & (u >= 0) & (u < 1)
    return ii[hit], jj[hit], s[hit], u[hit]


def _fold_pairs(z: np.ndarray, atol: float, min_sep: int):
    """Best partner of each sample among angles at least ``min_sep`` steps away.

    Returns index pairs ``i < j`` whose values agree within ``atol``.
    """
    m = z.size
    dist = np.abs(z[:, None] - z[None, :])
    idx = np.arange(m)
    gap = np.abs(idx[:, None] - idx[None, :])
    gap = np.minimum(gap, m - gap)
    dist[gap < min_sep] = np.inf
    j = dist.argmin(axis=1)
    ok = dist[idx, j] <= atol
    pairs = {(min(i, k), max(i, k)) for i, k in zip(idx[ok], j[ok])}
    if not pairs:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    arr = np.array(sorted(pairs))
    return arr[:, 0], arr[:, 1]


def gbz_condition(q: LaurentPolynomial, energy_sq: complex):
    """Moduli of the two middle roots of ``Q(beta) = E^2``.

    For ``Q`` with a pole of order ``p`` at the origin the roots sorted by
    modulus are ``|b_1| <= ... <= |b_M|``; ``E^2`` lies on the open-chain
    spectrum when ``|b_p| = |b_{p+1}|``. Returns ``(|b_p|, |b_{p+1}|)``.
    """
    q = q.trimmed()
    p = -q.n_min
    if p <= 0 or q.n_max <= 0:
        raise DegenerateInputError("GBZ condition needs poles and zeros of Q at 0 and infinity")
    num = (q - energy_sq).shift(p)
    coeffs = np.array([num.coeff(j) for j in range(num.n_max, -1, -1)])
    roots = np.sort(np.abs(polynomial_roots(coeffs)))
    return float(roots[p - 1]), float(roots[p])


def _polish_pairs(q: LaurentPolynomial, r, phi1, alpha, vary: str = "r", iters: int = 30):
    """Newton solve of ``Q(r e^{i(phi1+alpha)}) = Q(r e^{i phi1})``.

    The unknowns are ``(r, alpha)`` with ``vary="r"`` and ``(phi1, alpha)`` with
    ``vary="phi"`` (radius held fixed).
    """
    dq = q.derivative()
    r = np.array(r, dtype=float)
    phi1 = np.array(phi1, dtype=float)
    alpha = np.array(alpha, dtype=float)
    for _ in range(iters):
        e1, e2 = np.exp(1j * phi1), np.exp(1j * (phi1 + alpha))
        b1, b2 = r * e1, r * e2
        f = q(b2) - q(b1)
        g1, g2 = dq(b1), dq(b2)
        ja = 1j * b2 * g2
        if vary == "r":
            jx = e2 * g2 - e1 * g1
        else:
            jx = 1j * (b2 * g2 - b1 * g1)
        det = jx.real * ja.imag - ja.real * jx.imag
        ok = np.abs(det) > 1e-300
        det = np.where(ok, det, 1.0)
        dx = np.where(ok, (f.real * ja.imag - ja.real * f.imag) / det, 0.0)
        da = np.where(ok, (jx.real * f.imag - f.real * jx.imag) / det, 0.0)
        da = np.clip(da, -0.5, 0.5)
        if vary == "r":
            dx = np.clip(dx, -0.5 * r, 0.5 * r)
            r = r - dx
        else:
            dx = np.clip(dx, -0.5, 0.5)
            phi1 = phi1 - dx
        alpha = alpha - da
        if np.all(np.abs(dx) <= 1e-14 * np.maximum(r, 1.0)) and np.all(np.abs(da) <= 1e-14):
            break
    b1 = r * np.exp(1j * phi1)
    b2 = r * np.exp(1j * (phi1 + alpha))
    return b1, b2, q(b1), q(b2)


def obc_spectrum_gbz(
    model: TwoBandModel,
    radius_grid,
    angle_grid=512,
    tol: float = 1e-4,
    *,
    strict: bool = True,
    strict_rtol: float = 1e-6,
    include_folds: bool = True,
) -> list[GbzSample]:
    """Sample the generalized Brillouin zone by coincidences of ``Q`` on circles.

    For each radius ``r`` the closed curve ``Q(r exp(i phi))`` is scanned for
    self-crossings and for pairs of well-separated angles whose values nearly
    agree. Every candidate pair is then polished by Newton iteration in
    ``(r, angle difference)`` and kept when the two values of ``Q`` agree
    within ``tol`` times the curve extent. Each kept coincidence yields two
    samples, one per angle, with the polished radius.

    Fold candidates are screened with a tolerance of at least the relative
    radius step, so a GBZ circle lying between two grid radii is still found.

    With ``strict`` (default) a coincidence is kept only when its radius equals
    the two middle root moduli of ``Q(beta) = E^2`` (see :func:`gbz_condition`);
    this discards curve crossings that do not belong to the open-chain
    spectrum.
    """
    q = q_polynomial(model).trimmed()
    if q.is_constant():
        raise DegenerateInputError("constant symbol has no GBZ")
    radii = np.sort(np.atleast_1d(np.asarray(radius_grid, dtype=float)))
    if not np.all(radii > 0):
        raise DegenerateInputError("radii must be positive")
    if isinstance(angle_grid, (int, np.integer)):
        phis = k_grid(int(angle_grid))
    else:
        phis = np.asarray(angle_grid, dtype=float)
    m = phis.size
    dphi = np.diff(np.concatenate([phis, [phis[0] + 2 * np.pi]]))
    min_sep = max(2, m // 64)
    min_angle = 2 * np.pi * min_sep / m
    step = float(np.diff(radii).max() / radii.min()) if radii.size > 1 else 0.0
    detect = min(max(tol, 4 * step), 0.1)
    r_lo, r_hi = radii[0] * (1 - step - 1e-9), radii[-1] * (1 + step + 1e-9)

    seen: set = set()
    out: list[GbzSample] = []
    for r in radii:
        z = q(r * np.exp(1j * phis))
        extent = float(np.abs(z - z.mean()).max()) or 1.0
        ii, jj, s, u = _segment_crossings(z)
        c1 = phis[ii] + s * dphi[ii]
        c2 = phis[jj] + u * dphi[jj]
        polished = [_polish_pairs(q, np.full(c1.size, r), c1, c2 - c1, vary="phi")]
        if include_folds:
            fi, fj = _fold_pairs(z, detect * extent, min_sep)
            polished.append(_polish_pairs(q, np.full(fi.size, r), phis[fi], phis[fj] - phis[fi]))
        b1, b2, q1, q2 = (np.concatenate(parts) for parts in zip(*polished))
        if b1.size == 0:
            continue
        rad = np.abs(b1)
        gap = np.abs(np.angle(b2 / b1))
        good = (
            (np.abs(q1 - q2) <= tol * extent)
            & (gap >= 0.5 * min_angle)
            & (rad >= r_lo) & (rad <= r_hi)
            & np.isfinite(rad)
        )
        for k in np.flatnonzero(good):
            keys = [(round(b.real, 9), round(b.imag, 9)) for b in (b1[k], b2[k])]
            if all(key in seen for key in keys):
                continue
            esq = complex(0.5 * (q1[k] + q2[k]))
            if strict:
                lo, hi = gbz_condition(q, esq)
                scale = max(lo, hi)
                if abs(hi - lo) > strict_rtol * scale or abs(rad[k] - 0.5 * (lo + hi)) > strict_rtol * scale:
                    continue
            for b, key in zip((b1[k], b2[k]), keys):
                if key in seen:
                    continue
                seen.add(key)
                out.append(GbzSample(complex(b), esq, float(abs(b))))
    return out


# ---------------------------------------------------------------------------
# geometry


class GeometryKind(str, enum.Enum):
    OPEN_ARCS = "OPEN_ARCS"
    CLOSED_LOOPS = "CLOSED_LOOPS"


class PbcGeometry(NamedTuple):
    kind: GeometryKind
    loop_area: float


def classify_pbc_geometry(model: TwoBandModel, num_k: int = 1024, area_rtol: float = 1e-6) -> PbcGeometry:
    """Arcs versus loops of the periodic spectrum in the ``E^2`` plane.

    The signed shoelace area of the k-ordered curve ``Q(exp(ik))`` is compared
    with ``area_rtol`` times the squared curve diameter.
    """
    if num_k < 256:
        raise DegenerateInputError("num_k must be at least 256")
    z = q_polynomial(model).on_circle(k_grid(num_k))
    area = 0.5 * float(np.sum(z.real * np.roll(z.imag, -1) - np.roll(z.real, -1) * z.imag))
    diam = float(np.abs(z[:, None] - z[None, :]).max()) if num_k <= 2048 else float(np.ptp(z.real) + np.ptp(z.imag))
    kind = GeometryKind.OPEN_ARCS if abs(area) <= area_rtol * diam**2 else GeometryKind.CLOSED_LOOPS
    return PbcGeometry(kind, area)


def bloch_points(model: TwoBandModel, saddle_report=None, tol: float = 1e-4, angle_grid: int = 1024) -> list[complex]:
    """Points of the unit circle where the open- and periodic-chain spectra meet.

    Combines saddles with ``||beta_s| - 1| <= tol`` (from ``saddle_report``)
    with strict GBZ coincidences found on the unit circle itself. Nearby
    duplicates are merged. When the GBZ is the whole unit circle every sample
    qualifies.
    """
    found: list[complex] = []
    if saddle_report is not None:
        found.extend(s.beta_s for s in saddle_report.saddles if abs(abs(s.beta_s) - 1.0) <= tol)
    for sample in obc_spectrum_gbz(model, [1.0], angle_grid, include_folds=False):
        found.append(sample.beta)
    merged: list[complex] = []
    sep = 4 * np.pi / angle_grid
    for b in found:
        if all(abs(b - m) > sep for m in merged):
            merged.append(b)
    return merged
