"""Phase-space and homodyne Bell tests on twin-beam and photon-subtracted states."""

__version__ = "0.1.0"

from .bell import Family, bell_B, bell_C, bell_general, maximize_bell, sweep_bell
from .errors import TwinBeamError
from .homodyne import bell_S, sweep_S
from .ips import IpsParams, click_probability, coefficient_table, ips_wigner
from .phasespace import (
    GaussianTerm,
    PhasePoint,
    TwoModeGaussianSum,
    evaluate,
    total_integral,
    twb_wigner,
    vacuum_wigner,
)

__all__ = [
    "Family", "GaussianTerm", "IpsParams", "PhasePoint", "TwinBeamError", "TwoModeGaussianSum",
    "bell_B", "bell_C", "bell_S", "bell_general", "click_probability", "coefficient_table",
    "evaluate", "ips_wigner", "maximize_bell", "sweep_S", "sweep_bell", "total_integral",
    "twb_wigner", "vacuum_wigner",
]
