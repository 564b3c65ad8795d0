"""Finite two-sided power series in a complex variable."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import DegenerateInputError

TRIM_RTOL = 1e-14


@dataclass(frozen=True)
class LaurentPolynomial:
    """``sum_{j} coeffs[j] * beta**(n_min + j)``.

    Instances are immutable; arithmetic returns new trimmed objects. The zero
    polynomial is stored as ``n_min = 0`` with an empty coefficient array.
    """

    n_min: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).ravel()
        if not np.all(np.isfinite(c)):
            raise DegenerateInputError("Laurent coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "n_min", int(self.n_min))

    # -- construction -------------------------------------------------------

    @classmethod
    def zero(cls):
        return cls(0, np.zeros(0, dtype=complex))

    @classmethod
    def from_dict(cls, terms: Mapping[int, complex]):
        """Build from ``{power: coefficient}``; zero entries are dropped."""
        terms = {int(p): complex(c) for p, c in terms.items() if c != 0}
        if not terms:
            return cls.zero()
        lo, hi = min(terms), max(terms)
        c = np.zeros(hi - lo + 1, dtype=complex)
        for p, v in terms.items():
            c[p - lo] = v
        return cls(lo, c)

    @classmethod
    def monomial(cls, power: int, coeff: complex = 1.0):
        return cls.from_dict({power: coeff})

    # -- inspection ---------------------------------------------------------

    @property
    def n_max(self) -> int:
        return self.n_min + self.coeffs.size - 1

    def is_zero(self) -> bool:
        return self.coeffs.size == 0

    def is_constant(self) -> bool:
        t = self.trimmed()
        return t.is_zero() or (t.n_min == 0 and t.coeffs.size == 1)

    def coeff(self, power: int) -> complex:
        j = power - self.n_min
        if 0 <= j < self.coeffs.size:
            return complex(self.coeffs[j])
        return 0j

    def to_dict(self) -> dict[int, complex]:
        return {self.n_min + j: complex(c) for j, c in enumerate(self.coeffs) if c != 0}

    def trimmed(self, rtol: float = TRIM_RTOL) -> "LaurentPolynomial":
        """Drop end coefficients below ``rtol * max|c|`` (exact zeros always)."""
        c = self.coeffs
        if c.size == 0:
            return self
        scale = np.abs(c).max()
        if scale == 0:
            return LaurentPolynomial.zero()
        keep = np.flatnonzero(np.abs(c) > rtol * scale)
        lo, hi = keep[0], keep[-1]
        if lo == 0 and hi == c.size - 1:
            return self
        return LaurentPolynomial(self.n_min + lo, c[lo : hi + 1])

    def numerator(self) -> tuple[np.ndarray, int]:
        """Ordinary polynomial ``P`` and shift ``s`` with ``self = beta**s * P``.

        ``P`` is returned highest degree first with nonzero constant term.
        """
        t = self.trimmed()
        if t.is_zero():
            raise DegenerateInputError("zero Laurent polynomial has no numerator")
        return t.coeffs[::-1].copy(), t.n_min

    # -- arithmetic ---------------------------------------------------------

    def _combine(self, other, sign):
        other = _coerce(other)
        if self.is_zero():
            return other if sign > 0 else -other
        if other.is_zero():
            return self
        lo = min(self.n_min, other.n_min)
        hi = max(self.n_max, other.n_max)
        c = np.zeros(hi - lo + 1, dtype=complex)
        c[self.n_min - lo : self.n_max - lo + 1] += self.coeffs
        c[other.n_min - lo : other.n_max - lo + 1] += sign * other.coeffs
        return LaurentPolynomial(lo, c).trimmed()

    def __add__(self, other):
        return self._combine(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, -1)

    def __rsub__(self, other):
        return _coerce(other)._combine(self, -1)

    def __neg__(self):
        return LaurentPolynomial(self.n_min, -self.coeffs)

    def __mul__(self, other):
        if np.isscalar(other):
            return LaurentPolynomial(self.n_min, self.coeffs * complex(other)).trimmed()
        other = _coerce(other)
        if self.is_zero() or other.is_zero():
            return LaurentPolynomial.zero()
        c = np.convolve(self.coeffs, other.coeffs)
        return LaurentPolynomial(self.n_min + other.n_min, c).trimmed()

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise DegenerateInputError("negative powers are not Laurent polynomials")
        out = LaurentPolynomial.monomial(0)
        for _ in range(k):
            out = out * self
        return out

    def shift(self, s: int) -> "LaurentPolynomial":
        """Multiply by ``beta**s``."""
        return LaurentPolynomial(self.n_min + s, self.coeffs)

    def derivative(self) -> "LaurentPolynomial":
        """``d/d beta``."""
        if self.is_zero():
            return self
        powers = np.arange(self.n_min, self.n_max + 1)
        return LaurentPolynomial(self.n_min - 1, self.coeffs * powers).trimmed()

    def beta_derivative(self) -> "LaurentPolynomial":
        """``beta * d/d beta``; equals ``-i d/dk`` on ``beta = exp(ik)``."""
        return self.derivative().shift(1)

    def conj_reflect(self) -> "LaurentPolynomial":
        """Coefficients ``c_{-n}^*``; equals ``conj(P(beta))`` on the unit circle."""
        if self.is_zero():
            return self
        return LaurentPolynomial(-self.n_max, np.conj(self.coeffs[::-1]))

    def __call__(self, beta):
        beta = np.asarray(beta, dtype=complex)
        if self.is_zero():
            return np.zeros_like(beta)
        acc = np.zeros_like(beta)
        for c in self.coeffs[::-1]:
            acc = acc * beta + c
        return acc * beta ** self.n_min

    def on_circle(self, k, radius: float = 1.0):
        """Evaluate at ``radius * exp(i k)``."""
        return self(radius * np.exp(1j * np.asarray(k, dtype=float)))

    def __eq__(self, other):
        if not isinstance(other, LaurentPolynomial):
            return NotImplemented
        a, b = self.trimmed(0.0), other.trimmed(0.0)
        return a.n_min == b.n_min and np.array_equal(a.coeffs, b.coeffs)

    def allclose(self, other, atol: float = 1e-12) -> bool:
        diff = (self - _coerce(other)).coeffs
        return diff.size == 0 or bool(np.abs(diff).max() <= atol)

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self):
        terms = ", ".join(f"{p}: {c:.6g}" for p, c in self.to_dict().items())
        return f"LaurentPolynomial({{{terms}}})"


def _coerce(x) -> LaurentPolynomial:
    if isinstance(x, LaurentPolynomial):
        return x
    if np.isscalar(x):
        return LaurentPolynomial.from_dict({0: x})
    raise TypeError(f"cannot combine LaurentPolynomial with {type(x).__name__}")
