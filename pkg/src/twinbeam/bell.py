"""
Displaced-parity Bell combinations and their maximization.

    Bell = Pi(a1, b1) + Pi(a2, b1) + Pi(a1, b2) - Pi(a2, b2)

with Pi(alpha, beta) = (pi^2 / 4) W(alpha, beta). Local models obey |Bell| <= 2.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import InvalidParity, TwinBeamError
from .ips import IpsParams, ips_wigner
from .phasespace import TwoModeGaussianSum, twb_wigner, vacuum_wigner

PARITY_TOLERANCE = 1e-9
TSIRELSON = 2 * math.sqrt(2)
PARAMETERIZATIONS = ("general", "B_of_J", "C_of_J")
SWEEP_FIELDS = ("family", "tau_eff", "J", "r", "parameterization", "value")


@dataclass(frozen=True)
class BellSettings:
    alpha1: complex
    alpha2: complex
    beta1: complex
    beta2: complex

    def __post_init__(self):
        for name in ("alpha1", "alpha2", "beta1", "beta2"):
            value = complex(getattr(self, name))
            if not (math.isfinite(value.real) and math.isfinite(value.imag)):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)

    @classmethod
    def b_of_j(cls, j: float) -> "BellSettings":
        s = math.sqrt(j)
        return cls(0.0, s, 0.0, -s)

    @classmethod
    def c_of_j(cls, j: float) -> "BellSettings":
        s = math.sqrt(j)
        return cls(s, -3 * s, -s, 3 * s)


@dataclass(frozen=True)
class BellResult:
    value: float
    settings: BellSettings
    state_params: dict = field(default_factory=dict)
    parameterization: str = "general"
    j: float | None = None

    def __post_init__(self):
        if abs(self.value) > 4 + 1e-9:
            raise InvalidParity(f"Bell value {self.value} exceeds the algebraic bound 4")

    def to_dict(self) -> dict:
        s = self.settings
        return {
            "value": self.value,
            "parameterization": self.parameterization,
            "J": self.j,
            "state": dict(self.state_params),
            "settings": {k: [getattr(s, k).real, getattr(s, k).imag] for k in ("alpha1", "alpha2", "beta1", "beta2")},
        }


def parity_expectation(state: TwoModeGaussianSum, alpha: complex, beta: complex) -> float:
    """Expectation of the two-mode displaced parity, ``(pi^2/4) W(alpha, beta)``."""
    value = math.pi**2 / 4 * float(state(alpha, beta))
    if abs(value) > 1 + PARITY_TOLERANCE:
        raise InvalidParity(f"parity {value!r} at ({alpha}, {beta}) lies outside [-1, 1] for {state.label}")
    return value


def bell_general(state: TwoModeGaussianSum, settings: BellSettings, *, parameterization: str = "general",
                 j: float | None = None, state_params: dict | None = None) -> BellResult:
    s = settings
    value = (
        parity_expectation(state, s.alpha1, s.beta1)
        + parity_expectation(state, s.alpha2, s.beta1)
        + parity_expectation(state, s.alpha1, s.beta2)
        - parity_expectation(state, s.alpha2, s.beta2)
    )
    params = {"label": state.label} if state_params is None else state_params
    return BellResult(value, settings, params, parameterization, j)


def bell_B(state: TwoModeGaussianSum, j: float, state_params: dict | None = None) -> BellResult:
    """Settings (0, 0), (sqrt J, 0), (0, -sqrt J), (sqrt J, -sqrt J)."""
    if not j >= 0:
        raise ValueError(f"J must be >= 0, got {j!r}")
    return bell_general(state, BellSettings.b_of_j(j), parameterization="B_of_J", j=j, state_params=state_params)


def bell_C(state: TwoModeGaussianSum, j: float, state_params: dict | None = None) -> BellResult:
    """Settings (sqrt J, -sqrt J), (-3 sqrt J, -sqrt J), (sqrt J, 3 sqrt J), (-3 sqrt J, 3 sqrt J)."""
    if not j >= 0:
        raise ValueError(f"J must be >= 0, got {j!r}")
    return bell_general(state, BellSettings.c_of_j(j), parameterization="C_of_J", j=j, state_params=state_params)


BELL_FUNCTIONS = {"B": bell_B, "C": bell_C}


@dataclass(frozen=True)
class Family:
    """A one-parameter (in r) family of states: ``twb``, ``ips`` at fixed tau_eff, or ``vacuum``."""

    kind: str
    tau_eff: float | None = None

    def __post_init__(self):
        if self.kind not in ("twb", "ips", "vacuum"):
            raise ValueError(f"unknown family {self.kind!r}")
        if self.kind == "ips":
            if self.tau_eff is None or not 0 < self.tau_eff < 1:
                raise ValueError(f"ips family needs tau_eff in (0, 1), got {self.tau_eff!r}")
        elif self.tau_eff is not None:
            raise ValueError(f"{self.kind} family takes no tau_eff")

    @classmethod
    def twb(cls) -> "Family":
        return cls("twb")

    @classmethod
    def ips(cls, tau_eff: float) -> "Family":
        return cls("ips", float(tau_eff))

    @classmethod
    def vacuum(cls) -> "Family":
        return cls("vacuum")

    def state(self, r: float) -> TwoModeGaussianSum:
        return _family_state(self, float(r))

    def provenance(self, r: float) -> dict:
        out = {"family": self.kind, "r": r}
        if self.kind == "ips":
            out["tau_eff"] = self.tau_eff
        return out


@lru_cache(maxsize=4096)
def _family_state(family: Family, r: float) -> TwoModeGaussianSum:
    if family.kind == "vacuum":
        return vacuum_wigner()
    if family.kind == "twb":
        return twb_wigner(r)
    return ips_wigner(IpsParams.from_tau_eff(r, family.tau_eff))


def family_bell(family: Family, parameterization: str, r: float, j: float) -> BellResult:
    """Bell value for one member of ``family``; raises TwinBeamError when the state is undefined."""
    fn = BELL_FUNCTIONS[parameterization]
    return fn(family.state(r), j, family.provenance(r))


def _safe_value(family: Family, parameterization: str, r: float, j: float) -> float:
    try:
        return family_bell(family, parameterization, r, j).value
    except TwinBeamError:
        return -math.inf


@dataclass(frozen=True)
class SweepRecord:
    family: str
    tau_eff: float | None
    J: float
    r: float
    parameterization: str
    value: float

    def row(self) -> list[str]:
        return [
            self.family,
            "" if self.tau_eff is None else format(self.tau_eff, ".12g"),
            format(self.J, ".12g"),
            format(self.r, ".12g"),
            self.parameterization,
            format(self.value, ".12g"),
        ]


def _ordered_map(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def sweep_bell(families: Iterable[Family], parameterization: str, js: Iterable[float], rs: Iterable[float],
               *, threads: int = 1) -> list[SweepRecord]:
    """Evaluate the Bell combination on the grid families x J x r.

    Points where the state is undefined (zero click probability, too
    ill-conditioned) are recorded as NaN. Output order is the grid order.
    """
    tag = {"B": "B_of_J", "C": "C_of_J"}[parameterization]
    grid = [(fam, float(j), float(r)) for fam in families for j in js for r in rs]

    def point(item):
        fam, j, r = item
        try:
            value = family_bell(fam, parameterization, r, j).value
        except TwinBeamError:
            value = math.nan
        return SweepRecord(fam.kind, fam.tau_eff, j, r, tag, value)

    return _ordered_map(point, grid, threads)


def sweep_csv(records: Sequence, fields: Sequence[str] = SWEEP_FIELDS) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for rec in records:
        writer.writerow(rec.row())
    return buf.getvalue()


def pattern_search(fn: Callable[[np.ndarray], float], x0, steps, lower, upper, *,
                   contraction: float = 0.5, min_step: float = 1e-6, max_evals: int = 20000):
    """Maximize ``fn`` by compass search inside a box.

    Each coordinate is probed at +/- its step; an improving probe is accepted
    immediately, and when no probe improves all steps are multiplied by
    ``contraction``. Stops once every step is below ``min_step``.
    """
    x = np.clip(np.asarray(x0, dtype=float), lower, upper)
    steps = np.asarray(steps, dtype=float).copy()
    best = fn(x)
    evals = 1
    while np.max(steps) >= min_step and evals < max_evals:
        improved = False
        for i in range(len(x)):
            for sign in (1.0, -1.0):
                trial = x.copy()
                trial[i] = min(max(trial[i] + sign * steps[i], lower[i]), upper[i])
                if trial[i] == x[i]:
                    continue
                value = fn(trial)
                evals += 1
                if value > best:
                    x, best, improved = trial, value, True
                    break
        if not improved:
            steps *= contraction
    return x, best


def maximize_bell(family: Family, parameterization: str, *, r_bounds=(0.0, 2.0), j_bounds=(1e-6, 1.0),
                  j: float | None = None, r_points: int = 41, j_points: int = 49, starts: int = 3) -> BellResult:
    """Global maximum of B(J) or C(J) over the (r, J) box, or over r alone if ``j`` is given.

    A coarse grid (linear in r, logarithmic in J) seeds compass searches from
    the ``starts`` best grid points; the search runs in (r, log10 J).
    Deterministic for fixed arguments.
    """
    r_lo, r_hi = map(float, r_bounds)
    if not (0 <= r_lo <= r_hi and math.isfinite(r_hi)):
        raise ValueError(f"invalid r bounds {r_bounds!r}")
    rs = np.linspace(r_lo, r_hi, r_points) if r_hi > r_lo else np.array([r_lo])
    dr = (r_hi - r_lo) / max(r_points - 1, 1)

    if j is not None:
        if not j >= 0:
            raise ValueError(f"J must be >= 0, got {j!r}")
        values = [_safe_value(family, parameterization, r, j) for r in rs]
        order = np.argsort(values)[::-1][:starts]
        best = (-math.inf, r_lo)
        for idx in order:
            if not math.isfinite(values[idx]):
                continue
            x, value = pattern_search(lambda x: _safe_value(family, parameterization, x[0], j),
                                      [rs[idx]], [dr or 1e-3], [r_lo], [r_hi])
            if value > best[0]:
                best = (value, float(x[0]))
        r_best, j_best = best[1], float(j)
    else:
        j_lo, j_hi = map(float, j_bounds)
        if not (0 < j_lo <= j_hi and math.isfinite(j_hi)):
            raise ValueError(f"invalid J bounds {j_bounds!r}; the lower bound must be > 0")
        lj = np.linspace(math.log10(j_lo), math.log10(j_hi), j_points) if j_hi > j_lo else np.array([math.log10(j_lo)])
        dlj = (lj[-1] - lj[0]) / max(j_points - 1, 1)
        grid = [(r, l) for r in rs for l in lj]
        values = [_safe_value(family, parameterization, r, 10**l) for r, l in grid]
        order = np.argsort(values, kind="stable")[::-1][:starts]
        best = (-math.inf, r_lo, lj[0])

        def objective(x):
            return _safe_value(family, parameterization, x[0], 10 ** x[1])

        for idx in order:
            if not math.isfinite(values[idx]):
                continue
            x, value = pattern_search(objective, grid[idx], [dr or 1e-3, dlj or 1e-3],
                                      [r_lo, lj[0]], [r_hi, lj[-1]])
            if value > best[0]:
                best = (value, float(x[0]), float(x[1]))
        r_best, j_best = best[1], 10 ** best[2]

    if not math.isfinite(best[0]):
        raise TwinBeamError(f"no valid state for {family} in r bounds {r_bounds!r}")
    return family_bell(family, parameterization, r_best, j_best)
