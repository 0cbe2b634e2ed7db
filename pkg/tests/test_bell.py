import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize

from twinbeam.bell import (
    TSIRELSON,
    BellResult,
    BellSettings,
    Family,
    bell_B,
    bell_C,
    bell_general,
    maximize_bell,
    parity_expectation,
    pattern_search,
    sweep_bell,
    sweep_csv,
)
from twinbeam.errors import InvalidParity
from twinbeam.ips import IpsParams, ips_wigner
from twinbeam.phasespace import GaussianTerm, TwoModeGaussianSum, twb_wigner, vacuum_wigner


def twb_B(r, j):
    return 1 + 2 * math.exp(-2 * j * math.cosh(2 * r)) - math.exp(-4 * j * math.exp(2 * r))


def twb_C(r, j):
    c, s = math.cosh(2 * r), math.sinh(2 * r)
    return math.exp(-4 * j * math.exp(2 * r)) + 2 * math.exp(-20 * j * c + 12 * j * s) - math.exp(-36 * j * math.exp(2 * r))


def box_max(fn, r_hi=2.0):
    """Reference maximum over r in [0, r_hi], J in [1e-6, 1] by a multi-start bounded quasi-Newton search."""
    best = -math.inf
    for r0 in np.linspace(0.1, r_hi, 8):
        for lj0 in np.linspace(-5.5, -0.5, 8):
            res = optimize.minimize(lambda x: -fn(x[0], 10 ** x[1]), [r0, lj0], method="L-BFGS-B",
                                    bounds=[(0, r_hi), (-6, 0)], options={"ftol": 1e-15, "gtol": 1e-12})
            best = max(best, -res.fun)
    return best


@pytest.mark.parametrize("r,j", [(0.0, 0.1), (0.4, 0.02), (1.3, 0.003)])
def test_twb_closed_forms(r, j):
    state = twb_wigner(r)
    assert bell_B(state, j).value == pytest.approx(twb_B(r, j), rel=1e-13)
    assert bell_C(state, j).value == pytest.approx(twb_C(r, j), rel=1e-13)


def test_vacuum_closed_form():
    for j in (0.0, 0.01, 0.3):
        assert bell_B(vacuum_wigner(), j).value == pytest.approx(1 + 2 * math.exp(-2 * j) - math.exp(-4 * j))


def test_zero_displacement_gives_two():
    for r in (0.0, 0.3, 1.5):
        assert bell_B(twb_wigner(r), 0.0).value == pytest.approx(2.0, abs=1e-14)


def test_vacuum_never_violates():
    res = maximize_bell(Family.vacuum(), "B")
    assert res.value == pytest.approx(2.0, abs=1e-6)
    assert res.value <= 2 + 1e-12


def test_twb_maxima_match_reference_optimizer():
    assert maximize_bell(Family.twb(), "B").value == pytest.approx(box_max(twb_B), abs=1e-4)
    assert maximize_bell(Family.twb(), "C").value == pytest.approx(box_max(twb_C), abs=1e-4)


def test_settings_parameterizations():
    s = BellSettings.b_of_j(0.04)
    assert (s.alpha1, s.alpha2, s.beta1, s.beta2) == (0, 0.2, 0, -0.2)
    c = BellSettings.c_of_j(0.04)
    assert (c.alpha1, c.alpha2, c.beta1, c.beta2) == pytest.approx((0.2, -0.6, -0.2, 0.6))
    with pytest.raises(ValueError):
        BellSettings(math.nan, 0, 0, 0)


def test_general_combination_matches_parameterized():
    state = ips_wigner(IpsParams.from_tau_eff(0.7, 0.95))
    assert bell_general(state, BellSettings.c_of_j(0.01)).value == pytest.approx(bell_C(state, 0.01).value)


def test_parity_out_of_range_is_rejected():
    bogus = TwoModeGaussianSum((GaussianTerm(1.0, 2.0, 2.0, 0.0),), "too tall")
    with pytest.raises(InvalidParity):
        parity_expectation(bogus, 0, 0)
    with pytest.raises(InvalidParity):
        BellResult(4.5, BellSettings.b_of_j(0.1))


def test_negative_j_rejected():
    with pytest.raises(ValueError):
        bell_B(vacuum_wigner(), -1e-3)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 1.5), st.sampled_from([0.9, 0.99]),
       *[st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False) for _ in range(4)])
def test_tsirelson_bound(r, tau_eff, a1, a2, b1, b2):
    for state in (twb_wigner(r), ips_wigner(IpsParams.from_tau_eff(r, tau_eff))):
        assert abs(bell_general(state, BellSettings(a1, a2, b1, b2)).value) <= TSIRELSON + 1e-9


def test_pattern_search_on_quadratic():
    x, value = pattern_search(lambda x: -((x[0] - 0.3) ** 2) - 2 * (x[1] + 0.7) ** 2, [0, 0], [0.5, 0.5],
                              [-1, -1], [1, 1])
    assert x == pytest.approx([0.3, -0.7], abs=1e-6)
    assert value == pytest.approx(0.0, abs=1e-10)


def test_pattern_search_respects_bounds():
    x, _ = pattern_search(lambda x: x[0], [0.0], [0.25], [-1.0], [0.6])
    assert x[0] == pytest.approx(0.6)


def test_maximize_is_deterministic():
    a = maximize_bell(Family.ips(0.99), "B")
    b = maximize_bell(Family.ips(0.99), "B")
    assert a.to_dict() == b.to_dict()


def test_ips_fixed_j_maximum():
    res = maximize_bell(Family.ips(0.999), "B", j=0.01)
    assert res.value == pytest.approx(2.23, abs=0.01)
    assert res.state_params["tau_eff"] == 0.999


def test_ips_c_maximum_at_larger_displacement():
    # the C(J) peak for tau_eff = 0.999 sits near J = 2e-3, not 1.6e-4
    res = maximize_bell(Family.ips(0.999), "C")
    assert res.value == pytest.approx(2.40, abs=0.01)
    assert 1e-3 < res.j < 3e-3
    assert maximize_bell(Family.ips(0.999), "C", j=1.6e-3).value == pytest.approx(2.40, abs=0.01)


def test_ips_b_maximum_approaches_limit_as_tau_goes_to_one():
    values = [maximize_bell(Family.ips(t), "B", r_bounds=(0, 3)).value for t in (0.99, 0.999, 0.9999, 0.99999)]
    assert all(np.diff(values) > 0)
    assert values[-1] == pytest.approx(2.27, abs=0.01)


def test_sweep_order_nan_and_threads():
    fams = [Family.twb(), Family.ips(0.99)]
    rs = [0.0, 0.2, 0.5]
    serial = sweep_bell(fams, "B", [0.01, 0.1], rs)
    parallel = sweep_bell(fams, "B", [0.01, 0.1], rs, threads=4)
    assert len(serial) == 12
    assert [(s.family, s.J, s.r) for s in serial][:3] == [("twb", 0.01, 0.0), ("twb", 0.01, 0.2), ("twb", 0.01, 0.5)]
    assert sweep_csv(serial) == sweep_csv(parallel)
    ips_r0 = [s for s in serial if s.family == "ips" and s.r == 0.0]
    assert all(math.isnan(s.value) for s in ips_r0)
    header, first = sweep_csv(serial).splitlines()[:2]
    assert header == "family,tau_eff,J,r,parameterization,value"
    assert first == "twb,,0.01,0,B_of_J," + format(1 + 2 * math.exp(-0.02) - math.exp(-0.04), ".12g")


def test_family_validation():
    with pytest.raises(ValueError):
        Family("ips")
    with pytest.raises(ValueError):
        Family("twb", 0.9)
    with pytest.raises(ValueError):
        Family("squeezed")
