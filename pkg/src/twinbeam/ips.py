"""
Closed-form inconclusive photon subtraction (IPS) on the twin beam.

Each twin-beam mode is mixed with vacuum on a beam splitter of transmissivity
``tau`` and the reflected beams hit on/off detectors of efficiency ``eta``;
the output is kept when both detectors click. The conditional Wigner
function is a four-term Gaussian sum, one term per element of the expansion
of the double-click POVM (1 - Q)(1 - Q).

Detector inefficiency is absorbed into the effective transmissivity
``tau_eff = 1 - eta (1 - tau)``: the click probability depends on
``tau_eff`` only. The conditional *state* for ``eta < 1`` equals the
``(tau_eff, eta=1)`` state followed by an extra pure loss of transmissivity
``tau / tau_eff`` on both modes (photons that are reflected but never
detected are still removed from the signal), which is applied here as well.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DegenerateDenominator, IllConditioned, NonIntegrableTerm, ZeroClickProbability
from .phasespace import GaussianTerm, TwbParams, TwoModeGaussianSum, apply_loss, normalize, total_integral

#: Above this ratio of absolute to net term mass, float64 evaluation of the
#: four-term sum is no longer accurate to ~1e-6 and ips_wigner refuses.
MAX_CONDITION = 1e10

# (x offset, y offset, C_j) with the detector term 2/(2 - eta) at eta = 1
_TABLE = ((0.0, 0.0, 1.0), (2.0, 0.0, -2.0), (0.0, 2.0, -2.0), (2.0, 2.0, 4.0))


@dataclass(frozen=True)
class IpsParams:
    r: float
    tau: float
    eta: float = 1.0
    tau_eff: float = field(init=False)
    reflectance_eff: float = field(init=False)

    def __post_init__(self):
        if not (math.isfinite(self.r) and self.r >= 0):
            raise ValueError(f"squeezing r must be finite and >= 0, got {self.r!r}")
        if not (0 < self.tau <= 1):
            raise ValueError(f"transmissivity tau must lie in (0, 1], got {self.tau!r}")
        if not (0 <= self.eta <= 1):
            raise ValueError(f"detector efficiency eta must lie in [0, 1], got {self.eta!r}")
        eps = self.eta * (1 - self.tau)
        object.__setattr__(self, "reflectance_eff", eps)
        object.__setattr__(self, "tau_eff", self.tau if self.eta == 1 else 1 - eps)

    @classmethod
    def from_tau_eff(cls, r: float, tau_eff: float) -> "IpsParams":
        """Ideal detectors behind a beam splitter of transmissivity ``tau_eff``."""
        return cls(r, tau_eff, 1.0)

    @property
    def twb(self) -> TwbParams:
        return TwbParams(self.r)

    @property
    def big_a(self) -> float:
        return math.cosh(2 * self.r)

    @property
    def big_b(self) -> float:
        return math.sinh(2 * self.r)

    @property
    def a_coef(self) -> float:
        """|zeta|^2 coefficient of the reflected mode after the beam splitter."""
        return 2 * (self.big_a * self.reflectance_eff + self.tau_eff)

    @property
    def b_coef(self) -> float:
        """|alpha|^2 coefficient of the transmitted mode after the beam splitter."""
        return 2 * (self.big_a * self.tau_eff + self.reflectance_eff)

    @property
    def residual_loss(self) -> float:
        """Transmissivity of the signal loss left over after the tau_eff substitution."""
        if self.eta == 1:
            return 1.0
        return self.tau / self.tau_eff


@dataclass(frozen=True)
class CoefficientRow:
    j: int
    x_j: float
    y_j: float
    c_j: float
    f_j: float
    g_j: float
    h_j: float
    n_j: float
    denominator: float

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("j", "x_j", "y_j", "c_j", "f_j", "g_j", "h_j", "n_j", "denominator")}


def coefficient_table(params: IpsParams) -> list[CoefficientRow]:
    """The four coefficient rows, evaluated at ``eta = 1`` and ``tau -> tau_eff``.

    ``f_j``, ``g_j`` and ``h_j`` are the Gaussian-integral corrections to the
    ``|alpha|^2``, ``|beta|^2`` and ``(alpha beta + c.c.)`` coefficients left
    after integrating out the two reflected modes.
    """
    te, eps = params.tau_eff, params.reflectance_eff
    B = params.big_b
    one_minus_a = params.twb.one_minus_a
    a = params.a_coef
    k2 = 4 * B * B * eps * eps
    rows = []
    for j, (dx, dy, c) in enumerate(_TABLE, start=1):
        x, y = a + dx, a + dy
        denom = x * y - k2
        if not denom > 0:
            raise DegenerateDenominator(f"x_{j} y_{j} - 4B^2(1-tau_eff)^2 = {denom!r} for {params}")
        n = 4 * te * eps / denom
        cross = 4 * B * B * one_minus_a * eps
        f = n * (y * one_minus_a**2 + cross + x * B * B)
        g = n * (x * one_minus_a**2 + cross + y * B * B)
        h = n * ((x + y) * B * one_minus_a + 2 * B * (B * B + one_minus_a**2) * eps)
        rows.append(CoefficientRow(j, x, y, c, f, g, h, n, denom))
    return rows


def unnormalized_terms(params: IpsParams, rows: list[CoefficientRow] | None = None) -> TwoModeGaussianSum:
    """Double-click Wigner function before division by p11 (eta = 1, tau_eff)."""
    if rows is None:
        rows = coefficient_table(params)
    b, B, te = params.b_coef, params.big_b, params.tau_eff
    terms = []
    for row in rows:
        term = GaussianTerm(
            weight=16 * row.c_j / (math.pi**2 * row.denominator),
            u=b - row.f_j,
            v=b - row.g_j,
            t=2 * B * te + row.h_j,
        )
        if not term.integrable:
            raise NonIntegrableTerm(f"IPS term {row.j} is not integrable: {term}")
        terms.append(term)
    return TwoModeGaussianSum(tuple(terms), f"ips-unnormalized(r={params.r!r}, tau_eff={te!r})")


def click_probability(params: IpsParams) -> float:
    """Probability p11 that both on/off detectors click.

    Computed as the phase-space integral of the unnormalized four-term sum.
    """
    if params.r == 0 or params.reflectance_eff == 0:
        return 0.0
    return total_integral(unnormalized_terms(params))


def ips_wigner(params: IpsParams, rows: list[CoefficientRow] | None = None) -> TwoModeGaussianSum:
    """Normalized Wigner function of the IPS state.

    Parameters
    ----------
    params : IpsParams
    rows : list of CoefficientRow, optional
        Override the coefficient table (used by regression hooks).

    Raises
    ------
    ZeroClickProbability
        ``r == 0`` or ``tau_eff == 1``, or p11 rounds to a non-positive value.
    IllConditioned
        The four terms cancel to worse than ``1/MAX_CONDITION``.
    """
    if params.r == 0 or params.reflectance_eff == 0:
        raise ZeroClickProbability(f"double-click probability is zero for {params}")
    raw = unnormalized_terms(params, rows)
    p11 = math.fsum(raw.masses)
    if not p11 > 0:
        raise ZeroClickProbability(f"double-click probability {p11!r} is not positive for {params}")
    if raw.condition > MAX_CONDITION:
        raise IllConditioned(
            f"IPS Gaussian sum condition {raw.condition:.3g} exceeds {MAX_CONDITION:.0e} for {params}"
        )
    label = f"ips(r={params.r!r}, tau={params.tau!r}, eta={params.eta!r})"
    if params.residual_loss != 1:
        # loss preserves each term's mass, so it commutes with normalization
        raw = apply_loss(raw, params.residual_loss)
    return normalize(raw, label)
