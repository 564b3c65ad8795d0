"""Complex numerical kernels: polynomial roots, dense eigenvalues, line fits.

Everything here is a pure function of its inputs.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import (
    DegenerateFitError,
    DegenerateInputError,
    EmptyRootsError,
    NumericalFailure,
)

_EPS = np.finfo(float).eps

ROOT_RESIDUAL_TOL = 1e-10


def _as_finite_complex(values, what):
    arr = np.asarray(values, dtype=complex)
    if not np.all(np.isfinite(arr)):
        raise DegenerateInputError(f"{what} contains NaN or Inf")
    return arr


# ---------------------------------------------------------------------------
# polynomial roots


def polyval_desc(coeffs, z):
    """Horner evaluation of a highest-degree-first coefficient list at ``z``."""
    z = np.asarray(z, dtype=complex)
    acc = np.zeros_like(z)
    for c in coeffs:
        acc = acc * z + c
    return acc


def _polyval_and_derivative(coeffs, z):
    p = np.zeros_like(z)
    dp = np.zeros_like(z)
    for c in coeffs:
        dp = dp * z + p
        p = p * z + c
    return p, dp


def root_residual_ok(coeffs, roots, tol=ROOT_RESIDUAL_TOL):
    """Check ``|p(r)| <= tol * max|c| * max(1, |r|)**deg`` for every root."""
    coeffs = np.asarray(coeffs, dtype=complex)
    roots = np.asarray(roots, dtype=complex)
    if roots.size == 0:
        return True
    deg = coeffs.size - 1
    bound = tol * np.abs(coeffs).max() * np.maximum(1.0, np.abs(roots)) ** deg
    return bool(np.all(np.abs(polyval_desc(coeffs, roots)) <= bound))


def _initial_guesses(monic):
    """Starting points on circles read off the Newton polygon of ``log|c_k|``.

    Each edge of the upper convex hull of ``(k, log|a_k|)`` (ascending powers)
    spanning ``m`` degrees carries ``m`` points on a circle whose radius is the
    geometric root scale of that edge, so widely separated root magnitudes
    all get a nearby start.
    """
    n = monic.size - 1
    a = np.abs(monic[::-1])
    ks = np.flatnonzero(a > 0)
    logs = np.log(a[ks])
    hull = []
    for k, y in zip(ks, logs):
        while len(hull) >= 2:
            (k1, y1), (k2, y2) = hull[-2], hull[-1]
            if (y2 - y1) * (k - k1) <= (y - y1) * (k2 - k1):
                hull.pop()
            else:
                break
        hull.append((k, y))
    z = []
    for (k1, y1), (k2, y2) in zip(hull[:-1], hull[1:]):
        m = k2 - k1
        r = np.exp((y1 - y2) / m)
        # offset angle breaks the symmetry of real-coefficient problems
        z.extend(r * np.exp(1j * (2 * np.pi * np.arange(m) / m + 0.4 + 2 * np.pi * k1 / n)))
    return np.array(z, dtype=complex)


def _coefficients_from_roots(roots):
    c = np.ones(1, dtype=complex)
    for r in roots:
        c = np.append(c, 0) - r * np.concatenate([[0], c])
    return c


def _roots_reproduce(monic, roots, tol=1e-8):
    """Backward check on the whole root set: rebuilt coefficients match ``monic``.

    Catches iterations that settled two approximations on one root, which the
    per-root residual test cannot see.
    """
    rebuilt = _coefficients_from_roots(roots)
    scale = np.prod(1.0 + np.abs(roots))
    return bool(np.abs(rebuilt - monic).max() <= tol * scale)


def _aberth(monic, max_iter):
    n = monic.size - 1
    z = _initial_guesses(monic)
    active = np.ones(n, dtype=bool)
    for it in range(1, max_iter + 1):
        p, dp = _polyval_and_derivative(monic, z)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        recip = 1.0 / diff
        np.fill_diagonal(recip, 0.0)
        s = recip.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = p / dp
            step = ratio / (1.0 - ratio * s)
        step[~np.isfinite(step)] = 0.0
        step[p == 0] = 0.0
        step[~active] = 0.0
        z = z - step
        small = np.abs(step) <= 4 * _EPS * np.abs(z)
        active &= ~small
        if not active.any():
            return z, it
    return z, max_iter


def _newton_polish(coeffs, roots, steps=3):
    roots = roots.copy()
    for _ in range(steps):
        p, dp = _polyval_and_derivative(coeffs, roots)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = p / dp
        ok = np.isfinite(step)
        trial = roots - np.where(ok, step, 0.0)
        # accept only steps that do not increase the residual
        better = np.abs(polyval_desc(coeffs, trial)) <= np.abs(p)
        roots = np.where(better, trial, roots)
    return roots


def companion_matrix(coeffs):
    """Upper-Hessenberg companion matrix of a highest-first coefficient list."""
    coeffs = _as_finite_complex(coeffs, "coefficients")
    n = coeffs.size - 1
    mat = np.zeros((n, n), dtype=complex)
    mat[0, :] = -coeffs[1:] / coeffs[0]
    mat[np.arange(1, n), np.arange(n - 1)] = 1.0
    return mat


def polynomial_roots(coeffs, *, tol=ROOT_RESIDUAL_TOL, max_iter=500):
    """Roots of a complex polynomial.

    Parameters
    ----------
    coeffs : sequence of complex
        Coefficients, highest degree first.
    tol : float
        Relative residual each root must satisfy,
        ``|p(r)| <= tol * max|c| * max(1, |r|)**degree``.
    max_iter : int
        Iteration cap of the Aberth-Ehrlich stage.

    Returns
    -------
    ndarray of complex
        Exactly ``degree`` roots, repeated according to multiplicity.

    Raises
    ------
    DegenerateInputError
        Zero leading coefficient or non-finite input.
    EmptyRootsError
        Degree-zero polynomial.
    NumericalFailure
        Neither Aberth-Ehrlich nor the companion-matrix fallback met ``tol``.
    """
    coeffs = _as_finite_complex(coeffs, "coefficients").ravel()
    if coeffs.size == 0:
        raise EmptyRootsError("no coefficients given")
    if coeffs[0] == 0:
        raise DegenerateInputError("leading coefficient is zero")
    if coeffs.size == 1:
        raise EmptyRootsError("degree-0 polynomial has no roots")

    # exact zero roots from vanishing trailing coefficients
    nz = np.flatnonzero(coeffs)
    n_zero = coeffs.size - 1 - nz[-1]
    reduced = coeffs[: nz[-1] + 1]
    zeros = np.zeros(n_zero, dtype=complex)
    if reduced.size == 1:
        return zeros
    if reduced.size == 2:
        return np.concatenate([[-reduced[1] / reduced[0]], zeros])

    monic = reduced / reduced[0]
    roots, _ = _aberth(monic, max_iter)
    roots = _newton_polish(reduced, roots)
    if not (np.all(np.isfinite(roots)) and root_residual_ok(reduced, roots, tol)
            and _roots_reproduce(monic, roots)):
        roots = complex_eigenvalues(companion_matrix(reduced), balance=True)
        roots = _newton_polish(reduced, roots)
        if not root_residual_ok(reduced, roots, tol):
            res = np.abs(polyval_desc(reduced, roots)).max()
            raise NumericalFailure(
                "polynomial root residual above tolerance", max_residual=float(res)
            )
    return np.concatenate([roots, zeros])


# ---------------------------------------------------------------------------
# dense eigenvalues


def balance_matrix(mat, radix=2.0, max_sweeps=200):
    """Diagonal similarity scaling that equalizes row and column 1-norms.

    Returns the balanced copy and the scaling vector ``d`` such that
    ``balanced = diag(d)^-1 @ mat @ diag(d)``.
    """
    a = np.array(mat, dtype=complex, copy=True)
    n = a.shape[0]
    d = np.ones(n)
    rsq = radix * radix
    for _ in range(max_sweeps):
        converged = True
        for i in range(n):
            c = np.abs(a[:, i]).sum() - abs(a[i, i])
            r = np.abs(a[i, :]).sum() - abs(a[i, i])
            if c == 0.0 or r == 0.0:
                continue
            g = r / radix
            f = 1.0
            s = c + r
            while c < g:
                f *= radix
                c *= rsq
            g = r * radix
            while c >= g:
                f /= radix
                c /= rsq
            if (c + r) / f < 0.95 * s:
                converged = False
                d[i] *= f
                a[i, :] /= f
                a[:, i] *= f
        if converged:
            break
    return a, d


def hessenberg_reduce(mat):
    """Householder reduction to upper Hessenberg form (similarity transform)."""
    h = np.array(mat, dtype=complex, copy=True)
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1 :, k]
        tail = np.linalg.norm(x[1:])
        if tail == 0.0:
            continue
        norm = np.hypot(abs(x[0]), tail)
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * norm
        v /= np.linalg.norm(v)
        h[k + 1 :, k:] -= 2.0 * np.outer(v, v.conj() @ h[k + 1 :, k:])
        h[:, k + 1 :] -= 2.0 * np.outer(h[:, k + 1 :] @ v, v.conj())
        h[k + 2 :, k] = 0.0
    return h


def _eig2(a, b, c, d):
    half = 0.5 * (a + d)
    disc = np.sqrt(0.25 * (a - d) ** 2 + b * c)
    return half + disc, half - disc


def _givens(a, b):
    """Unitary (c, s) with [[c, s], [-conj(s), c]] @ [a, b] = [r, 0]."""
    if b == 0:
        return 1.0, 0.0
    if a == 0:
        return 0.0, np.conj(b) / abs(b)
    r = np.hypot(abs(a), abs(b))
    return abs(a) / r, (a / abs(a)) * np.conj(b) / r


def _qr_sweep(blk, mu):
    """One explicitly shifted QR step, in place, on a Hessenberg block."""
    m = blk.shape[0]
    idx = np.arange(m)
    blk[idx, idx] -= mu
    rots = []
    for k in range(m - 1):
        c, s = _givens(blk[k, k], blk[k + 1, k])
        rk = blk[k, k:].copy()
        rk1 = blk[k + 1, k:]
        blk[k, k:] = c * rk + s * rk1
        blk[k + 1, k:] = -np.conj(s) * rk + c * rk1
        blk[k + 1, k] = 0.0
        rots.append((c, s))
    for k, (c, s) in enumerate(rots):
        top = min(k + 2, m)
        ck = blk[:top, k].copy()
        ck1 = blk[:top, k + 1]
        blk[:top, k] = c * ck + np.conj(s) * ck1
        blk[:top, k + 1] = -s * ck + c * ck1
    blk[idx, idx] += mu


def complex_eigenvalues(mat, *, balance=True, max_iter_factor=100):
    """Eigenvalues of a dense complex (generally non-Hermitian) matrix.

    Balancing, Householder Hessenberg reduction and Wilkinson-shifted QR
    with deflation. Only eigenvalues are computed.

    Raises
    ------
    DegenerateInputError
        Non-square, empty or non-finite input.
    NumericalFailure
        QR did not converge within ``max_iter_factor * order`` sweeps.
    """
    a = _as_finite_complex(mat, "matrix")
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise DegenerateInputError(f"expected a non-empty square matrix, got {a.shape}")
    n = a.shape[0]
    if n == 1:
        return a[0].copy()
    if balance:
        a, _ = balance_matrix(a)
    h = hessenberg_reduce(a)
    scale = np.abs(h).max()
    eig = np.empty(n, dtype=complex)
    cap = max_iter_factor * n
    total = 0
    its = 0
    hi = n - 1
    while hi >= 0:
        if hi == 0:
            eig[0] = h[0, 0]
            break
        lo = hi
        while lo > 0:
            ref = abs(h[lo, lo]) + abs(h[lo - 1, lo - 1])
            if ref == 0.0:
                ref = scale
            if abs(h[lo, lo - 1]) <= _EPS * ref:
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            eig[hi] = h[hi, hi]
            hi -= 1
            its = 0
            continue
        if lo == hi - 1:
            eig[hi], eig[hi - 1] = _eig2(h[lo, lo], h[lo, hi], h[hi, lo], h[hi, hi])
            hi -= 2
            its = 0
            continue
        total += 1
        its += 1
        if total > cap:
            raise NumericalFailure(
                "QR iteration did not converge",
                iterations=total,
                unconverged_index=hi,
                subdiagonal=float(abs(h[hi, hi - 1])),
            )
        if its % 10 == 0:
            # exceptional shift to break cycles
            mu = h[hi, hi] + 0.75 * abs(h[hi, hi - 1]) * (1 + 1j)
        else:
            l1, l2 = _eig2(h[hi - 1, hi - 1], h[hi - 1, hi], h[hi, hi - 1], h[hi, hi])
            mu = l1 if abs(l1 - h[hi, hi]) <= abs(l2 - h[hi, hi]) else l2
        _qr_sweep(h[lo : hi + 1, lo : hi + 1], mu)
    return eig


# ---------------------------------------------------------------------------
# fitting and set distances


class LinearFit(NamedTuple):
    slope: float
    intercept: float
    residual_rms: float
    stderr: float


def linear_fit(t, y=None):
    """Ordinary least-squares line through ``(t, y)`` samples.

    ``linear_fit(samples)`` with a sequence of ``(t, y)`` pairs is also
    accepted. ``stderr`` is the standard error of the slope (0 for two
    points).
    """
    if y is None:
        pairs = np.asarray(t, dtype=float).reshape(-1, 2)
        t, y = pairs[:, 0], pairs[:, 1]
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise DegenerateFitError("t and y must be 1-D arrays of equal length")
    if t.size < 2:
        raise DegenerateFitError("need at least two samples")
    tc = t - t.mean()
    sxx = float(tc @ tc)
    if sxx == 0.0:
        raise DegenerateFitError("all sample times are equal")
    slope = float(tc @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * t.mean())
    resid = y - (slope * t + intercept)
    ssr = float(resid @ resid)
    rms = float(np.sqrt(ssr / t.size))
    stderr = float(np.sqrt(ssr / (t.size - 2) / sxx)) if t.size > 2 else 0.0
    return LinearFit(slope, intercept, rms, stderr)


def hausdorff_distance(a, b):
    """Symmetric Hausdorff distance between two finite sets of complex numbers."""
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.size == 0 or b.size == 0:
        raise DegenerateInputError("Hausdorff distance of an empty set")
    return max(directed_distance(a, b), directed_distance(b, a))


def directed_distance(a, b, chunk=2048):
    """``max_{x in a} min_{y in b} |x - y|``."""
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    worst = 0.0
    for start in range(0, a.size, chunk):
        block = a[start : start + chunk]
        worst = max(worst, float(np.abs(block[:, None] - b[None, :]).min(axis=1).max()))
    return worst
