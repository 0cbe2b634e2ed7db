"""
Centered two-mode Gaussian sums in phase space.

Every state in this package is written as

    W(alpha, beta) = sum_k  w_k exp{-u_k |alpha|^2 - v_k |beta|^2 + t_k (alpha beta + c.c.)}

with real coefficients. The convention is alpha = x + i p, so the single-mode
vacuum is (2/pi) exp(-2|alpha|^2) and each quadrature has vacuum variance 1/4.

In real coordinates alpha = x1 + i y1, beta = x2 + i y2 the exponent splits into
two independent 2x2 blocks,

    x-block: -u x1^2 - v x2^2 + 2t x1 x2
    y-block: -u y1^2 - v y2^2 - 2t y1 y2

so a term integrates to w * pi^2 / (u v - t^2).
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import NonIntegrableTerm

VACUUM_PREFACTOR = 4.0 / math.pi**2


@dataclass(frozen=True)
class PhasePoint:
    alpha_re: float
    alpha_im: float
    beta_re: float
    beta_im: float

    def __post_init__(self):
        if not all(math.isfinite(c) for c in (self.alpha_re, self.alpha_im, self.beta_re, self.beta_im)):
            raise ValueError(f"phase-space coordinates must be finite: {self}")

    @classmethod
    def from_complex(cls, alpha: complex, beta: complex) -> "PhasePoint":
        alpha, beta = complex(alpha), complex(beta)
        return cls(alpha.real, alpha.imag, beta.real, beta.imag)

    @property
    def alpha(self) -> complex:
        return complex(self.alpha_re, self.alpha_im)

    @property
    def beta(self) -> complex:
        return complex(self.beta_re, self.beta_im)


@dataclass(frozen=True)
class GaussianTerm:
    """One term ``weight * exp{-u|a|^2 - v|b|^2 + t(ab + c.c.)}``."""

    weight: float
    u: float
    v: float
    t: float

    @property
    def det(self) -> float:
        """Block determinant ``u*v - t**2``; positive iff the term is integrable."""
        return self.u * self.v - self.t * self.t

    @property
    def integrable(self) -> bool:
        return self.u > 0 and self.v > 0 and self.det > 0

    @property
    def mass(self) -> float:
        if not self.integrable:
            raise NonIntegrableTerm(f"term is not integrable: {self}")
        return self.weight * math.pi**2 / self.det


@dataclass(frozen=True)
class TwoModeGaussianSum:
    terms: tuple[GaussianTerm, ...]
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    def __call__(self, alpha, beta):
        """Evaluate on (broadcastable arrays of) complex phase-space points."""
        alpha = np.asarray(alpha, dtype=complex)
        beta = np.asarray(beta, dtype=complex)
        a2 = alpha.real**2 + alpha.imag**2
        b2 = beta.real**2 + beta.imag**2
        # alpha*beta + conj = 2(x1 x2 - y1 y2)
        cross = 2.0 * (alpha.real * beta.real - alpha.imag * beta.imag)
        out = np.zeros(np.broadcast(alpha, beta).shape)
        for term in self.terms:
            out = out + term.weight * np.exp(-term.u * a2 - term.v * b2 + term.t * cross)
        return out if out.ndim else float(out)

    @property
    def masses(self) -> tuple[float, ...]:
        return tuple(term.mass for term in self.terms)

    @property
    def condition(self) -> float:
        """Ratio ``sum |mass_k| / |sum mass_k|``.

        Pointwise evaluation loses roughly ``log10(condition)`` digits to
        cancellation between terms of opposite sign; 1 for positive sums.
        """
        masses = self.masses
        total = sum(masses)
        if total == 0:
            return math.inf
        return sum(abs(m) for m in masses) / abs(total)

    def scaled(self, factor: float, label: str | None = None) -> "TwoModeGaussianSum":
        terms = tuple(GaussianTerm(t.weight * factor, t.u, t.v, t.t) for t in self.terms)
        return TwoModeGaussianSum(terms, self.label if label is None else label)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "terms": [{"weight": t.weight, "u": t.u, "v": t.v, "t": t.t} for t in self.terms],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TwoModeGaussianSum":
        terms = tuple(
            GaussianTerm(float(t["weight"]), float(t["u"]), float(t["v"]), float(t["t"]))
            for t in data["terms"]
        )
        return cls(terms, data.get("label", ""))

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


@dataclass(frozen=True)
class TwbParams:
    """Twin-beam squeezing parameters; ``lam``, ``big_a``, ``big_b`` are derived from ``r``."""

    r: float
    lam: float = field(init=False)
    big_a: float = field(init=False)
    big_b: float = field(init=False)

    def __post_init__(self):
        if not (math.isfinite(self.r) and self.r >= 0):
            raise ValueError(f"squeezing r must be finite and >= 0, got {self.r!r}")
        object.__setattr__(self, "lam", math.tanh(self.r))
        object.__setattr__(self, "big_a", math.cosh(2 * self.r))
        object.__setattr__(self, "big_b", math.sinh(2 * self.r))

    @property
    def one_minus_a(self) -> float:
        """``1 - cosh(2r)`` without cancellation at small r."""
        return -2.0 * math.sinh(self.r) ** 2


def vacuum_wigner() -> TwoModeGaussianSum:
    return TwoModeGaussianSum((GaussianTerm(VACUUM_PREFACTOR, 2.0, 2.0, 0.0),), "vacuum")


def twb_wigner(params: TwbParams | float) -> TwoModeGaussianSum:
    """Gaussian Wigner function of the twin beam with squeezing ``r``."""
    if not isinstance(params, TwbParams):
        params = TwbParams(float(params))
    term = GaussianTerm(VACUUM_PREFACTOR, 2 * params.big_a, 2 * params.big_a, 2 * params.big_b)
    return TwoModeGaussianSum((term,), f"twb(r={params.r!r})")


def evaluate(state: TwoModeGaussianSum, point: PhasePoint) -> float:
    return float(state(point.alpha, point.beta))


def _exact_masses(terms) -> list[Fraction]:
    """Per-term ``weight / (u v - t^2)`` in exact rational arithmetic (pi^2 omitted)."""
    out = []
    for term in terms:
        u, v, t = Fraction(term.u), Fraction(term.v), Fraction(term.t)
        det = u * v - t * t
        if not (term.u > 0 and term.v > 0 and det > 0):
            raise NonIntegrableTerm(f"term is not integrable: {term}")
        out.append(Fraction(term.weight) / det)
    return out


def total_integral(state: TwoModeGaussianSum) -> float:
    """Integral of the sum over both complex planes.

    The per-term masses are summed exactly, so the result is the integral of
    the float coefficients as stored, correctly rounded, even when the terms
    cancel heavily.

    Raises
    ------
    NonIntegrableTerm
        If any single term has ``u*v <= t**2``. Integrability is required per
        term, not only for the sum.
    """
    return float(sum(_exact_masses(state.terms), Fraction(0)) * Fraction(math.pi**2))


def normalize(state: TwoModeGaussianSum, label: str | None = None, *, ulps: int = 2) -> TwoModeGaussianSum:
    """Rescale to unit integral.

    Plain division by the mass leaves an error of about ``condition * 1e-16``
    because every weight is rounded. Each weight is therefore also tried at
    up to ``ulps`` neighbouring floats and the combination whose exact
    integral is closest to 1 is kept.
    """
    pi2 = Fraction(math.pi**2)
    unit = [m * pi2 / Fraction(term.weight) if term.weight else Fraction(0)
            for m, term in zip(_exact_masses(state.terms), state.terms)]
    total = sum((Fraction(t.weight) * k for t, k in zip(state.terms, unit)), Fraction(0))
    if not total > 0:
        raise ValueError(f"cannot normalize a sum with integral {float(total)!r}")
    base = [float(Fraction(t.weight) / total) for t in state.terms]
    residual = float(1 - sum((Fraction(w) * k for w, k in zip(base, unit)), Fraction(0)))
    options = []
    for w, k in zip(base, unit):
        row = []
        for step in range(-ulps, ulps + 1):
            cand = w
            for _ in range(abs(step)):
                cand = math.nextafter(cand, math.copysign(math.inf, step))
            row.append((float((Fraction(cand) - Fraction(w)) * k), cand))
        options.append(row)
    best = min(itertools.product(*options), key=lambda combo: abs(residual - sum(d for d, _ in combo)))
    terms = tuple(GaussianTerm(w, t.u, t.v, t.t) for (_, w), t in zip(best, state.terms))
    return TwoModeGaussianSum(terms, state.label if label is None else label)


def apply_loss(state: TwoModeGaussianSum, transmissivity: float, label: str | None = None) -> TwoModeGaussianSum:
    """Send both modes through a pure-loss channel of the given transmissivity.

    Each term's block covariance maps to ``T*cov + (1-T)/4 * I``; the mass of
    every term is preserved.
    """
    T = float(transmissivity)
    if not 0 <= T <= 1:
        raise ValueError(f"transmissivity must lie in [0, 1], got {T!r}")
    if T == 1:
        return state if label is None else TwoModeGaussianSum(state.terms, label)
    noise = (1 - T) / 4
    terms = []
    for term in state.terms:
        det = term.det
        if not term.integrable:
            raise NonIntegrableTerm(f"term is not integrable: {term}")
        # x-block covariance [[p, q], [q, s]] after loss
        p = T * term.v / (2 * det) + noise
        s = T * term.u / (2 * det) + noise
        q = T * term.t / (2 * det)
        cdet = p * s - q * q
        u, v, t = s / (2 * cdet), p / (2 * cdet), q / (2 * cdet)
        new = GaussianTerm(term.weight * (u * v - t * t) / det, u, v, t)
        terms.append(new)
    return TwoModeGaussianSum(tuple(terms), state.label if label is None else label)
