"""Two-band lattice models: hopping data, Bloch Hamiltonian and band symbol.

A model is fixed by three hopping maps. In the equations of motion

    i da_n/dt = sum_l rho_{n-l} a_l + theta_{n-l} b_l
    i db_n/dt = sum_l phi_{n-l} a_l - rho_{n-l} b_l

so ``theta_m`` is the coefficient of ``beta**(-m)`` in ``d_x - i d_y`` and
``phi_m`` the coefficient of ``beta**(-m)`` in ``d_x + i d_y``, with
``beta = exp(ik)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from os import PathLike
from typing import Callable, Mapping

import numpy as np

from .errors import DegenerateInputError, ExceptionalPointError
from .laurent import LaurentPolynomial

SQRT2 = np.sqrt(2.0)


def _clean(m: Mapping[int, complex]) -> dict[int, complex]:
    out = {}
    for n, c in m.items():
        c = complex(c)
        if not np.isfinite(c):
            raise DegenerateInputError("hopping amplitudes must be finite")
        if c != 0:
            out[int(n)] = c
    return dict(sorted(out.items()))


@dataclass(frozen=True)
class TwoBandModel:
    """Hopping data of a two-band chain.

    Attributes
    ----------
    rho, theta, phi : dict[int, complex]
        Nonzero hoppings keyed by the cell offset ``n - l``.
    label : str
        Builder name or free-form tag.
    params : dict
        Builder parameters, echoed in outputs.
    """

    rho: dict = field(default_factory=dict)
    theta: dict = field(default_factory=dict)
    phi: dict = field(default_factory=dict)
    label: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "rho", _clean(self.rho))
        object.__setattr__(self, "theta", _clean(self.theta))
        object.__setattr__(self, "phi", _clean(self.phi))
        object.__setattr__(self, "params", dict(self.params))

    @property
    def offsets(self) -> list[int]:
        """All cell offsets carrying a nonzero hopping."""
        return sorted(set(self.rho) | set(self.theta) | set(self.phi))

    @property
    def reach(self) -> int:
        """Largest ``|n - l|`` coupled by the model (0 for on-site only)."""
        return max((abs(n) for n in self.offsets), default=0)

    def is_hermitian(self, tol: float = 1e-14) -> bool:
        """``rho_{-n} = conj(rho_n)`` and ``theta_{-n} = conj(phi_n)`` for all n."""
        for n in set(self.offsets) | {-n for n in self.offsets}:
            if abs(self.rho.get(-n, 0) - np.conj(self.rho.get(n, 0))) > tol:
                return False
            if abs(self.theta.get(-n, 0) - np.conj(self.phi.get(n, 0))) > tol:
                return False
        return True

    def describe(self) -> str:
        if self.params:
            inner = ", ".join(f"{k}={v:g}" for k, v in self.params.items())
            return f"{self.label}({inner})"
        return self.label


@dataclass(frozen=True)
class DVector:
    """Components of ``d(k)`` as Laurent polynomials in ``beta``."""

    dx: LaurentPolynomial
    dy: LaurentPolynomial
    dz: LaurentPolynomial

    def __call__(self, beta):
        return self.dx(beta), self.dy(beta), self.dz(beta)


def _symbol(hop: Mapping[int, complex]) -> LaurentPolynomial:
    return LaurentPolynomial.from_dict({-n: c for n, c in hop.items()})


def theta_symbol(model: TwoBandModel) -> LaurentPolynomial:
    """``d_x - i d_y = sum theta_n beta**(-n)``."""
    return _symbol(model.theta)


def phi_symbol(model: TwoBandModel) -> LaurentPolynomial:
    """``d_x + i d_y = sum phi_n beta**(-n)``."""
    return _symbol(model.phi)


def rho_symbol(model: TwoBandModel) -> LaurentPolynomial:
    """``d_z = sum rho_n beta**(-n)``."""
    return _symbol(model.rho)


def d_vector(model: TwoBandModel) -> DVector:
    """Laurent components of the Bloch vector ``d(k)``."""
    th, ph = theta_symbol(model), phi_symbol(model)
    return DVector(dx=0.5 * (th + ph), dy=(-0.5j) * (ph - th), dz=rho_symbol(model))


def q_polynomial(model: TwoBandModel) -> LaurentPolynomial:
    """Band symbol ``Q = d_x^2 + d_y^2 + d_z^2``, so that ``E^2 = Q``.

    Computed as ``(d_x - i d_y)(d_x + i d_y) + d_z^2`` which avoids the
    cancellation of the sum-of-squares form.
    """
    dz = rho_symbol(model)
    return (theta_symbol(model) * phi_symbol(model) + dz * dz).trimmed()


def bloch_hamiltonian(model: TwoBandModel, k) -> np.ndarray:
    """``[[d_z, d_x - i d_y], [d_x + i d_y, -d_z]]`` at ``beta = exp(ik)``.

    ``k`` may be complex, which evaluates the analytic continuation.
    """
    beta = np.exp(1j * complex(k))
    dz = complex(rho_symbol(model)(beta))
    return np.array(
        [[dz, complex(theta_symbol(model)(beta))], [complex(phi_symbol(model)(beta)), -dz]],
        dtype=complex,
    )


def band_energy(model: TwoBandModel, k, band: int = 1):
    """``band * sqrt(Q(exp(ik)))`` with the principal square root."""
    q = q_polynomial(model)(np.exp(1j * np.asarray(k, dtype=complex)))
    return np.sign(band) * np.sqrt(q)


def bloch_eigenvector(model: TwoBandModel, k, band: int = 1, *, ep_tol: float = 1e-12):
    """Right eigenvector of the Bloch Hamiltonian for band ``+1`` or ``-1``.

    Uses ``(d_x - i d_y, E - d_z)`` when ``E - d_z`` is well away from zero
    and ``(E + d_z, d_x + i d_y)`` otherwise; both are scaled to unit norm.

    Raises
    ------
    ExceptionalPointError
        ``|Q(exp(ik))|`` below ``ep_tol`` times the entry scale.
    """
    if band not in (1, -1):
        raise DegenerateInputError("band must be +1 or -1")
    h = bloch_hamiltonian(model, k)
    dz, t_, p_ = h[0, 0], h[0, 1], h[1, 0]
    q = t_ * p_ + dz * dz
    scale = max(abs(dz), abs(t_), abs(p_), 1e-300)
    if abs(q) <= ep_tol * scale * scale:
        raise ExceptionalPointError("Q vanishes: Bloch Hamiltonian is defective", k=k, q=q)
    e = band * np.sqrt(q)
    if abs(e - dz) >= abs(e + dz):
        vec = np.array([t_, e - dz])
    else:
        vec = np.array([e + dz, p_])
    return vec / np.linalg.norm(vec)


# ---------------------------------------------------------------------------
# builders


def from_d_components(
    dx: Mapping[int, complex],
    dy: Mapping[int, complex],
    dz: Mapping[int, complex],
    label: str = "custom",
    params: Mapping | None = None,
) -> TwoBandModel:
    """Model whose Bloch vector has the given ``{power of beta: coeff}`` components."""
    powers = set(dx) | set(dy) | set(dz)
    theta, phi, rho = {}, {}, {}
    for p in powers:
        x, y, z = dx.get(p, 0), dy.get(p, 0), dz.get(p, 0)
        theta[-p] = x - 1j * y
        phi[-p] = x + 1j * y
        rho[-p] = z
    return TwoBandModel(rho, theta, phi, label, dict(params or {}))


def _cos(a):
    """``a cos k`` as beta powers."""
    return {1: a / 2, -1: a / 2}


def _sin(a):
    """``a sin k`` as beta powers."""
    return {1: a / 2j, -1: -a / 2j}


def _add(*terms):
    out: dict[int, complex] = {}
    for t in terms:
        for p, c in t.items():
            out[p] = out.get(p, 0) + c
    return out


def model_i(t: float, tp: float, delta: float) -> TwoBandModel:
    """Balanced gain and loss: ``d = (t + t' cos k, t' sin k, i delta)``."""
    return from_d_components(
        _add({0: t}, _cos(tp)), _sin(tp), {0: 1j * delta},
        "model_i", {"t": t, "tp": tp, "delta": delta},
    )


def model_ii(t: float, tp: float, delta: float) -> TwoBandModel:
    """Asymmetric intra-dimer hopping: ``d = (t + t' cos k, t' sin k - i delta, 0)``."""
    return from_d_components(
        _add({0: t}, _cos(tp)), _add(_sin(tp), {0: -1j * delta}), {},
        "model_ii", {"t": t, "tp": tp, "delta": delta},
    )


def model_iii(t: float, tp: float, delta: float) -> TwoBandModel:
    """``d = (t + t' cos k, 0, t' sin k - i delta)``; shares ``Q`` with model II."""
    return from_d_components(
        _add({0: t}, _cos(tp)), {}, _add(_sin(tp), {0: -1j * delta}),
        "model_iii", {"t": t, "tp": tp, "delta": delta},
    )


def model_iv(t1: float, t2: float, t3: float, delta: float) -> TwoBandModel:
    """``d_x = t1 + (t2+t3) cos k + i delta sin k``, ``d_y = (t2-t3) sin k + i delta cos k``."""
    return from_d_components(
        _add({0: t1}, _cos(t2 + t3), _sin(1j * delta)),
        _add(_sin(t2 - t3), _cos(1j * delta)),
        {},
        "model_iv", {"t1": t1, "t2": t2, "t3": t3, "delta": delta},
    )


def model_app_c(t: float, delta: float) -> TwoBandModel:
    """Cusp model: ``d_x = t beta + 1/(sqrt(2) beta)``, ``d_z = i t beta + i delta``."""
    return from_d_components(
        {1: t, -1: 1 / SQRT2}, {}, {1: 1j * t, 0: 1j * delta},
        "model_app_c", {"t": t, "delta": delta},
    )


def custom(rho: Mapping, theta: Mapping, phi: Mapping, label: str = "custom") -> TwoBandModel:
    """Model from explicit hopping maps ``{offset: amplitude}``."""
    return TwoBandModel(rho, theta, phi, label)


BUILDERS: dict[str, tuple[Callable[..., TwoBandModel], tuple[str, ...]]] = {
    "model_i": (model_i, ("t", "tp", "delta")),
    "model_ii": (model_ii, ("t", "tp", "delta")),
    "model_iii": (model_iii, ("t", "tp", "delta")),
    "model_iv": (model_iv, ("t1", "t2", "t3", "delta")),
    "model_app_c": (model_app_c, ("t", "delta")),
}

# parameter values of the four lattice models in the reference figure set
DEFAULT_PARAMS: dict[str, dict[str, float]] = {
    "model_i": {"t": 1.0, "tp": 1.5, "delta": 1.0},
    "model_ii": {"t": 0.6, "tp": 1.0, "delta": 1.0},
    "model_iii": {"t": 0.6, "tp": 1.0, "delta": 0.3},
    "model_iv": {"t1": 1.0, "t2": 1.5, "t3": 0.2, "delta": 0.35},
    "model_app_c": {"t": -0.5, "delta": 1.0},
}


def build(name: str, **params: float) -> TwoBandModel:
    """Named builder with defaults filled in for missing parameters."""
    if name not in BUILDERS:
        raise DegenerateInputError(
            f"unknown model {name!r}; choose one of {', '.join(BUILDERS)}"
        )
    fn, names = BUILDERS[name]
    unknown = set(params) - set(names)
    if unknown:
        raise DegenerateInputError(f"{name} does not take parameter(s) {sorted(unknown)}")
    merged = {**DEFAULT_PARAMS[name], **params}
    return fn(*(float(merged[n]) for n in names))


# ---------------------------------------------------------------------------
# model files


def _hops_to_json(hop: Mapping[int, complex]):
    return [[n, c.real, c.imag] for n, c in sorted(hop.items())]


def _hops_from_json(rows) -> dict[int, complex]:
    out = {}
    for row in rows:
        if len(row) != 3:
            raise DegenerateInputError(f"hopping entry must be [n, re, im], got {row!r}")
        n, re, im = row
        if int(n) != n:
            raise DegenerateInputError(f"hopping offset must be an integer, got {n!r}")
        out[int(n)] = out.get(int(n), 0) + complex(float(re), float(im))
    return out


def model_to_dict(model: TwoBandModel) -> dict:
    """JSON-ready description; builder form when the label names a builder."""
    if model.label in BUILDERS and model.params:
        return {"builder": model.label, "params": dict(model.params)}
    return {
        "label": model.label,
        "rho": _hops_to_json(model.rho),
        "theta": _hops_to_json(model.theta),
        "phi": _hops_to_json(model.phi),
    }


def model_from_dict(spec: Mapping) -> TwoBandModel:
    """Inverse of :func:`model_to_dict`.

    Accepts ``{"builder": name, "params": {...}}`` or
    ``{"label": ..., "rho": [[n, re, im], ...], "theta": [...], "phi": [...]}``.
    """
    if "builder" in spec:
        return build(str(spec["builder"]), **dict(spec.get("params", {})))
    if not any(key in spec for key in ("rho", "theta", "phi")):
        raise DegenerateInputError("model file needs 'builder' or hopping tables")
    return TwoBandModel(
        _hops_from_json(spec.get("rho", [])),
        _hops_from_json(spec.get("theta", [])),
        _hops_from_json(spec.get("phi", [])),
        str(spec.get("label", "custom")),
    )


def load_model(path: str | PathLike) -> TwoBandModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))


def save_model(model: TwoBandModel, path: str | PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
        fh.write("\n")
