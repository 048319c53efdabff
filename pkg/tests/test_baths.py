import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from heatlab import BathSpec, bose_occupation, ohmic_spectral, sequential_rates
from heatlab.baths import BathLabel


def test_ohmic_examples():
    b = BathSpec(0.005, 10.0, 1.0)
    assert ohmic_spectral(1.0, b) == pytest.approx(0.00452419, abs=1e-8)
    assert ohmic_spectral(10.0, b) == pytest.approx(0.005 * 10 * math.exp(-1), rel=1e-15)
    assert ohmic_spectral(1.0, BathSpec(0.0, 10.0, 1.0)) == 0.0
    for w in (0.0, -1.0):
        with pytest.raises(ValueError):
            ohmic_spectral(w, b)


def test_bose_examples():
    assert bose_occupation(1.0, 0.0) == 0.0
    assert bose_occupation(1.0, 1.0) == pytest.approx(0.581977, abs=1e-6)
    assert bose_occupation(1.0, 0.5) == pytest.approx(0.156518, abs=1e-6)
    assert bose_occupation(1.0, 1e-4) == 0.0  # exp(-1e4) underflows cleanly
    # small w/T: expm1 keeps n ~ T/w - 1/2 accurate
    assert bose_occupation(1e-9, 1.0) == pytest.approx(1e9 - 0.5, rel=1e-12)
    for w in (0.0, -2.0):
        with pytest.raises(ValueError):
            bose_occupation(w, 1.0)


def test_sequential_rate_examples():
    b = BathSpec(0.005, 10.0, 1.0)
    assert sequential_rates(-0.5, b) == (0.0, 0.0)
    assert sequential_rates(0.0, b) == (0.0, 0.0)
    kp, km = sequential_rates(1.0, b)
    g = 0.005 * math.exp(-0.1)
    assert kp == pytest.approx(g * 0.581977, rel=1e-6)
    assert km == pytest.approx(g * 1.581977, rel=1e-6)


@given(st.floats(1e-3, 50), st.floats(0.05, 10))
def test_detailed_balance(w, t):
    kp, km = sequential_rates(w, BathSpec(0.01, 10.0, t))
    if kp > 0:
        assert kp / km == pytest.approx(math.exp(-w / t), rel=1e-12)


@given(st.floats(1e-2, 20), st.floats(0.05, 5), st.floats(1.01, 3))
def test_bose_monotone(w, t, f):
    assert bose_occupation(w, t * f) >= bose_occupation(w, t)
    assert bose_occupation(w * f, t) <= bose_occupation(w, t)


@given(st.floats(-100, 0))
def test_theta_gate_is_exact(w):
    assert sequential_rates(w, BathSpec(1.0, 1.0, 5.0)) == (0.0, 0.0)


@pytest.mark.parametrize("kw", [dict(alpha=-1, omega_c=1, temperature=1), dict(alpha=1, omega_c=0, temperature=1),
                                dict(alpha=1, omega_c=1, temperature=-0.1), dict(alpha=math.nan, omega_c=1, temperature=1)])
def test_bath_validation(kw):
    with pytest.raises(ValueError):
        BathSpec(**kw)


def test_labels():
    assert BathSpec(0.1, 1, 1, "a").label is BathLabel.PHONON_A
    assert BathSpec(0.1, 1, 1).with_temperature(2.0).temperature == 2.0
    with pytest.raises(ValueError):
        BathSpec(0.1, 1, 1, "c")
