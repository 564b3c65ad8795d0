"""Skin-effect diagnostics for one-dimensional two-band non-Hermitian lattices.

Modules
-------
numerics   polynomial roots, dense eigenvalues, least-squares fits
laurent    two-sided polynomials in ``beta = exp(ik)``
model      hopping data, Bloch Hamiltonian, band symbol ``Q(beta)``, builders
spectra    periodic, open-chain and generalized-Brillouin-zone spectra
saddle     saddle points, predicted Lyapunov exponents, skin-effect verdict
dynamics   real-space evolution and measured Lyapunov exponents
probelab   sweeps, scans, figure data and the command line
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DegenerateInputError,
    ExceptionalPointError,
    InstabilityError,
    InsufficientDataError,
    NHProbeError,
    NumericalFailure,
    UnsupportedModelError,
)
from .laurent import LaurentPolynomial  # noqa: E402
from .model import TwoBandModel, build, q_polynomial  # noqa: E402

__all__ = [
    "__version__",
    "DegenerateInputError",
    "ExceptionalPointError",
    "InstabilityError",
    "InsufficientDataError",
    "LaurentPolynomial",
    "NHProbeError",
    "NumericalFailure",
    "TwoBandModel",
    "UnsupportedModelError",
    "build",
    "q_polynomial",
]
