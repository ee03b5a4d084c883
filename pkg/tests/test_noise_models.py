import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qauth.noise_models import (HardwareParams, LossCause, afc_efficiency, afc_efficiency_peak,
                                dark_count_prob, effective_linewidth, link_survival,
                                sample_loss, shot_survival_prob, survival_probs,
                                transmission_prob)
from qauth.timing import build_schedule

mp.mp.dps = 40

# frozen from a 40-digit evaluation of the cavity AFC expression
ETA_CAV_0 = 0.6430522094158939540842677386740510750637
EPS_BAR = 8004.669384955494


def afc_oracle(t, F=40, al=1, R1=0.96, R2=0.99, eps=3000):
    a = mp.mpf(al) / F * mp.sqrt(mp.pi / (4 * mp.log(2)))
    eb = 2 * mp.pi * eps / mp.sqrt(8 * mp.log(2))
    R1, R2 = mp.mpf(R1), mp.mpf(R2)
    num = 4 * a**2 * mp.e**(-2 * a) * (1 - R1)**2 * R2 * mp.e**(-(mp.mpf(t) * eb)**2)
    return num / (1 - mp.sqrt(R1 * R2) * mp.e**(-a))**4


def test_defaults_match_table():
    p = HardwareParams()
    assert (p.tau_db_per_km, p.v_fiber, p.f_source, p.f_dark, p.t_window, p.p_detect) == \
        (0.17, 2.08e8, 33e6, 10.0, 25e-9, 0.95)
    assert (p.T1, p.T2) == (223.44e-6, 295.35e-6)
    assert (p.comb_finesse, p.alpha_l, p.R1, p.R2, p.comb_linewidth) == (40, 1, 0.96, 0.99, 3e3)
    assert (p.t_drive_store, p.t_drive_recover) == (30e-9, 30e-9)
    assert (p.cx_error, p.czx_error, p.h_error_c, p.readout_error_c) == \
        (6e-3, 6.4e-3, 1.48e-4, 2.16e-2)


@pytest.mark.parametrize("change", [
    {"p_detect": 1.2}, {"R1": -0.1}, {"T1": 0.0}, {"f_source": -1.0},
    {"tau_db_per_km": -0.1}, {"comb_finesse": 0.5}, {"cx_error": 2.0},
])
def test_invalid_params_rejected(change):
    with pytest.raises(ValueError):
        HardwareParams(**change)


def test_transmission():
    assert transmission_prob(0, 0.17) == 1.0
    assert transmission_prob(10, 0.17) == pytest.approx(0.67608297539198177, abs=1e-15)
    assert transmission_prob(5, 0.17) == pytest.approx(0.82224264994707114, abs=1e-15)
    with pytest.raises(ValueError):
        transmission_prob(-1, 0.17)


@settings(max_examples=100, deadline=None)
@given(d1=st.floats(0, 100), d2=st.floats(0, 100), tau=st.floats(0, 1))
def test_transmission_multiplicative(d1, d2, tau):
    assert transmission_prob(d1, tau) * transmission_prob(d2, tau) == \
        pytest.approx(transmission_prob(d1 + d2, tau), abs=1e-12)


def test_transmission_strictly_decreasing():
    d = np.linspace(0, 50, 200)
    vals = [transmission_prob(x, 0.17) for x in d]
    assert np.all(np.diff(vals) < 0)


def test_dark_count():
    assert dark_count_prob(0, 10) == 0.0
    assert dark_count_prob(25e-9, 10) == pytest.approx(2.5e-7, abs=1e-13)
    assert dark_count_prob(25e-9, math.inf) == 1.0
    assert dark_count_prob(1.0, 1e6) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        dark_count_prob(-1, 10)


@settings(max_examples=100, deadline=None)
@given(t=st.floats(0, 1e-6), f=st.floats(0, 1e6), k=st.floats(1, 10))
def test_dark_count_bounds_and_monotone(t, f, k):
    p = dark_count_prob(t, f)
    assert 0 <= p < 1 or (t * f > 30)
    assert dark_count_prob(t * k, f) >= p
    assert dark_count_prob(t, f * k) >= p


def test_afc_closed_form_oracle():
    p = HardwareParams()
    assert effective_linewidth(p) == pytest.approx(EPS_BAR, rel=1e-14)
    assert afc_efficiency(0.0, p) == pytest.approx(ETA_CAV_0, rel=1e-9)
    assert float(afc_oracle(0)) == pytest.approx(ETA_CAV_0, rel=1e-15)
    for t in (1e-6, 20e-6, 100e-6):
        assert afc_efficiency(t, p) == pytest.approx(float(afc_oracle(t)), rel=1e-9)


def test_afc_zero_for_perfect_front_mirror():
    p = HardwareParams(R1=1.0)
    assert afc_efficiency(0.0, p) == 0.0
    assert np.all(afc_efficiency(np.array([0, 1e-5, 1e-4]), p) == 0.0)


def test_afc_gaussian_ratio_and_monotone():
    p = HardwareParams()
    eb = effective_linewidth(p)
    t = np.linspace(0, 300e-6, 301)
    eta = afc_efficiency(t, p)
    assert np.all(np.diff(eta) <= 0)
    t1, t2 = 5e-6, 40e-6
    assert afc_efficiency(t2, p) / afc_efficiency(t1, p) == \
        pytest.approx(math.exp(-eb**2 * (t2**2 - t1**2)), rel=1e-12)
    with pytest.raises(ValueError):
        afc_efficiency(-1e-6, p)


def test_afc_degenerate_and_clamped(caplog, monkeypatch):
    with pytest.raises(ValueError):
        afc_efficiency_peak(HardwareParams(R1=1.0, R2=1.0, alpha_l=0.0))
    # the impedance-matched optimum touches 1 from below
    assert afc_efficiency_peak(HardwareParams(R1=0.9, R2=1.0, alpha_l=0.05, comb_finesse=1)) < 1
    import qauth.noise_models as nm
    monkeypatch.setattr(nm, "afc_efficiency_peak", lambda params: 1.2)
    with caplog.at_level("WARNING"):
        assert nm.afc_efficiency(0.0, HardwareParams()) == 1.0
    assert "clamped" in caplog.text


def test_ideal_memory():
    p = HardwareParams(ideal_memory=True)
    assert afc_efficiency(1e-3, p) == 1.0
    assert np.all(afc_efficiency(np.array([0.0, 1.0]), p) == 1.0)


def test_survival_trivial_and_factorized():
    p = HardwareParams.noiseless(distance_km=0.0)
    rec = build_schedule(1, 0.0, 0.0, p).records[0]
    assert shot_survival_prob(rec, p) == 1.0
    q = HardwareParams(distance_km=3.0)
    rec = build_schedule(10, 1e-6, 3.0, q).records[4]
    factors = [transmission_prob(3.0, 0.17)] * 2 + [0.95] * 2 + \
        [afc_efficiency(rec.t_store_user, q), afc_efficiency(rec.t_store_server, q)]
    assert shot_survival_prob(rec, q) == pytest.approx(math.prod(factors), rel=1e-14)
    assert shot_survival_prob(rec, q) <= min(factors)
    assert link_survival(q) == pytest.approx(math.prod(factors[:4]), rel=1e-14)
    with pytest.raises(ValueError):
        shot_survival_prob(object(), q)


def test_survival_band_at_one_km():
    p = HardwareParams(distance_km=1.0)
    timing = build_schedule(500, 1e-6, 1.0, p)
    s = survival_probs(timing.t_store_user, timing.t_store_server, p)
    assert s.min() >= 0.3 and s.max() <= 0.5
    # late shots are stored for less time
    assert np.all(np.diff(s) > 0)


def test_survival_matches_monte_carlo():
    from qauth.protocol import Role, simulate_batch
    p = HardwareParams(distance_km=1.0)
    timing = build_schedule(500, 1e-6, 1.0, p)
    rng = np.random.default_rng(21)
    keys = rng.integers(0, 2, (400, 500), dtype=np.int8)
    _, lost, _ = simulate_batch(keys, timing, p, Role.LEGITIMATE, rng)
    s = survival_probs(timing.t_store_user, timing.t_store_server, p)
    freq = 1 - lost.mean()
    sigma = math.sqrt(np.sum(s * (1 - s))) / s.size / math.sqrt(400)
    assert abs(freq - s.mean()) <= 3 * sigma


def test_sample_loss():
    rng = np.random.default_rng(4)
    assert all(sample_loss(1.0, rng) for _ in range(100))
    assert not any(sample_loss(0.0, rng) for _ in range(100))
    draws = np.array([sample_loss(0.3, rng) for _ in range(1_000_000)])
    assert abs(draws.mean() - 0.3) <= 0.0014
    with pytest.raises(ValueError):
        sample_loss(1.5, rng)


def test_loss_causes():
    assert {c.value for c in LossCause} == {"fiber", "detector", "memory", "dark_count_substitution"}
