"""
Sign-binned homodyne Bell test.

Homodyne at phase theta measures x_theta = Re(alpha e^{-i theta}). For a
Gaussian term {w, u, v, t} the joint law of (x_theta, x_phi) is a zero-mean
bivariate normal with

    var_a = v / (2D),  var_b = u / (2D),  cov = t cos(theta + phi) / (2D),  D = u v - t^2,

and mass w pi^2 / D; a Gaussian-sum Wigner function therefore gives a
(quasi-)mixture of bivariate normals. The sign correlation of each component
is (2/pi) arcsin(rho).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .bell import Family, _ordered_map
from .errors import NonIntegrableTerm, TwinBeamError
from .phasespace import TwoModeGaussianSum

HOMODYNE_FIELDS = ("family", "tau_eff", "eta_h", "tanh_r", "S")


@dataclass(frozen=True)
class HomodyneAngles:
    theta1: float
    theta2: float
    phi1: float
    phi2: float

    def __post_init__(self):
        if not all(math.isfinite(a) for a in (self.theta1, self.theta2, self.phi1, self.phi2)):
            raise ValueError(f"angles must be finite: {self}")


DEFAULT_ANGLES = HomodyneAngles(0.0, math.pi / 2, -math.pi / 4, math.pi / 4)


@dataclass(frozen=True)
class QuadratureJoint:
    """Zero-mean bivariate-normal (quasi-)mixture; rows are (weight, var_a, var_b, cov)."""

    components: tuple[tuple[float, float, float, float], ...]

    def __post_init__(self):
        comps = tuple(tuple(float(x) for x in c) for c in self.components)
        object.__setattr__(self, "components", comps)
        total = math.fsum(c[0] for c in comps)
        if abs(total - 1) > 1e-10 * max(1.0, sum(abs(c[0]) for c in comps)):
            raise ValueError(f"component weights sum to {total!r}, not 1")
        for w, va, vb, cov in comps:
            if not (va > 0 and vb > 0):
                raise ValueError(f"component variances must be positive: {(w, va, vb, cov)}")
            if w > 0 and abs(cov) > math.sqrt(va * vb) * (1 + 1e-12):
                raise ValueError(f"component covariance exceeds Cauchy-Schwarz: {(w, va, vb, cov)}")

    def density(self, xa, xb):
        xa = np.asarray(xa, dtype=float)
        xb = np.asarray(xb, dtype=float)
        out = np.zeros(np.broadcast(xa, xb).shape)
        for w, va, vb, cov in self.components:
            det = va * vb - cov * cov
            q = (vb * xa**2 - 2 * cov * xa * xb + va * xb**2) / det
            out = out + w * np.exp(-0.5 * q) / (2 * math.pi * math.sqrt(det))
        return out

    def min_density(self, extent: float | None = None, steps: int = 201) -> float:
        """Smallest density value on a square grid (default half-width: 6 largest std devs)."""
        if extent is None:
            extent = 6 * math.sqrt(max(max(c[1], c[2]) for c in self.components))
        x = np.linspace(-extent, extent, steps)
        return float(self.density(x[:, None], x[None, :]).min())

    def with_efficiency(self, eta_h: float) -> "QuadratureJoint":
        """Detector efficiency eta_h as added Gaussian noise (1 - eta_h) / (4 eta_h) per quadrature."""
        if not 0 < eta_h <= 1:
            raise ValueError(f"homodyne efficiency must lie in (0, 1], got {eta_h!r}")
        if eta_h == 1:
            return self
        noise = (1 - eta_h) / (4 * eta_h)
        return QuadratureJoint(tuple((w, va + noise, vb + noise, cov) for w, va, vb, cov in self.components))


def quadrature_joint(state: TwoModeGaussianSum, theta: float, phi: float) -> QuadratureJoint:
    """Joint distribution of (x_theta on mode a, x_phi on mode b)."""
    c = math.cos(theta + phi)
    comps = []
    for term in state.terms:
        if not term.integrable:
            raise NonIntegrableTerm(f"term is not integrable: {term}")
        d = term.det
        comps.append((term.mass, term.v / (2 * d), term.u / (2 * d), term.t * c / (2 * d)))
    total = math.fsum(w for w, *_ in comps)
    # absorb the residual normalization error of the input state
    return QuadratureJoint(tuple((w / total, va, vb, cov) for w, va, vb, cov in comps))


def sign_correlation(joint: QuadratureJoint) -> float:
    """E = <sign(x_a x_b)> via the orthant identity (2/pi) arcsin(rho) per component."""
    acc = []
    for w, va, vb, cov in joint.components:
        rho = max(-1.0, min(1.0, cov / math.sqrt(va * vb)))
        acc.append(w * 2 / math.pi * math.asin(rho))
    return math.fsum(acc)


def correlation(state: TwoModeGaussianSum, theta: float, phi: float, eta_h: float = 1.0) -> float:
    return sign_correlation(quadrature_joint(state, theta, phi).with_efficiency(eta_h))


def bell_S(state: TwoModeGaussianSum, angles: HomodyneAngles = DEFAULT_ANGLES, eta_h: float = 1.0) -> float:
    """E(t1, p1) + E(t1, p2) + E(t2, p1) - E(t2, p2) with homodyne efficiency ``eta_h``."""
    a = angles
    return (
        correlation(state, a.theta1, a.phi1, eta_h)
        + correlation(state, a.theta1, a.phi2, eta_h)
        + correlation(state, a.theta2, a.phi1, eta_h)
        - correlation(state, a.theta2, a.phi2, eta_h)
    )


@dataclass(frozen=True)
class HomodyneRecord:
    family: str
    tau_eff: float | None
    eta_h: float
    r: float
    S: float

    @property
    def tanh_r(self) -> float:
        return math.tanh(self.r)

    def row(self) -> list[str]:
        return [
            self.family,
            "" if self.tau_eff is None else format(self.tau_eff, ".12g"),
            format(self.eta_h, ".12g"),
            format(self.tanh_r, ".12g"),
            format(self.S, ".12g"),
        ]


def sweep_S(families: Iterable[Family], eta_hs: Iterable[float], rs: Iterable[float],
            angles: HomodyneAngles = DEFAULT_ANGLES, *, threads: int = 1) -> list[HomodyneRecord]:
    """S on the grid families x eta_h x r, in grid order; undefined states give NaN."""
    grid = [(fam, float(e), float(r)) for fam in families for e in eta_hs for r in rs]

    def point(item):
        fam, eta_h, r = item
        try:
            value = bell_S(fam.state(r), angles, eta_h)
        except TwinBeamError:
            value = math.nan
        return HomodyneRecord(fam.kind, fam.tau_eff, eta_h, r, value)

    return _ordered_map(point, grid, threads)


class QuadratureSampler:
    """Draws (x_a, x_b) from the joint density by gridded inverse-CDF sampling.

    The density is tabulated on a ``cells x cells`` grid whose edges include
    the axes, a cell is drawn with probability proportional to its midpoint
    density, and the point is placed uniformly inside the cell. Works for
    quasi-mixtures with negative component weights, as long as the total
    density is non-negative.
    """

    def __init__(self, joint: QuadratureJoint, *, extent: float | None = None, cells: int = 1600):
        if cells % 2:
            raise ValueError("cells must be even so that the axes are cell edges")
        if extent is None:
            extent = 8 * math.sqrt(max(max(c[1], c[2]) for c in joint.components))
        self.cells = cells
        self.edges = np.linspace(-extent, extent, cells + 1)
        self.h = self.edges[1] - self.edges[0]
        mids = 0.5 * (self.edges[1:] + self.edges[:-1])
        dens = joint.density(mids[:, None], mids[None, :])
        if dens.min() < -1e-9 * dens.max():
            raise ValueError(f"joint density is negative somewhere (min {dens.min():.3g})")
        cdf = np.cumsum(np.clip(dens, 0, None).ravel())
        self.cdf = cdf / cdf[-1]

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        idx = np.minimum(np.searchsorted(self.cdf, rng.random(n), side="right"), self.cdf.size - 1)
        ia, ib = np.divmod(idx, self.cells)
        xa = self.edges[ia] + self.h * rng.random(n)
        xb = self.edges[ib] + self.h * rng.random(n)
        return np.stack([xa, xb], axis=1)


def sample_quadratures(joint: QuadratureJoint, n: int, seed: int, **kwargs) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(seed))
    return QuadratureSampler(joint, **kwargs).draw(rng, n)


def mc_sign_correlation(joint: QuadratureJoint, n: int, seed: int, *, chunk: int = 1_000_000) -> tuple[float, float]:
    """Monte-Carlo estimate of E and its standard error; sign(0) counts as +1."""
    sampler = QuadratureSampler(joint)
    rng = np.random.Generator(np.random.PCG64(seed))
    positive = 0
    remaining = n
    while remaining:
        m = min(chunk, remaining)
        xs = sampler.draw(rng, m)
        positive += int(np.count_nonzero(xs[:, 0] * xs[:, 1] >= 0))
        remaining -= m
    p = positive / n
    mean = 2 * p - 1
    stderr = 2 * math.sqrt(p * (1 - p) / (n - 1)) if n > 1 else math.inf
    return mean, stderr
