import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qauth.noise_models import HardwareParams
from qauth.timing import build_schedule, one_way_delay, storage_times

P = HardwareParams()


def test_shot_zero_and_spacing():
    t = build_schedule(500, 1e-6, 1.0, P)
    assert t.records[0].t_emit == 0.0
    assert t.records[1].t_emit == pytest.approx(30.303030303e-9, rel=1e-9)
    assert t.records[0].t_store_user == pytest.approx(16.15121212e-6, rel=1e-9)


def test_one_way_delay():
    assert one_way_delay(10, P) == pytest.approx(48.0769230769e-6, rel=1e-10)
    assert one_way_delay(0, P) == 0.0


def test_max_storage_at_long_wait():
    t = build_schedule(500, 15e-6, 1.0, P)
    assert t.t_store_user.max() == pytest.approx(30.1512e-6, rel=1e-5)


def test_single_shot():
    t = build_schedule(1, 2e-6, 0.0, P)
    assert storage_times(t) == [(2e-6 + 30e-9, t.records[0].t_store_server)]
    assert t.records[0].t_store_user == pytest.approx(2e-6 + 30e-9, abs=1e-21)


def test_invalid():
    with pytest.raises(ValueError):
        build_schedule(0, 0.0, 0.0, P)
    with pytest.raises(ValueError):
        build_schedule(5, -1.0, 0.0, P)
    with pytest.raises(ValueError):
        build_schedule(5, 0.0, -1.0, P)


@settings(max_examples=60, deadline=None)
@given(lam=st.integers(1, 300), T=st.floats(0, 20e-6), d=st.floats(0, 20))
def test_record_invariants(lam, T, d):
    t = build_schedule(lam, T, d, P)
    prop = d * 1e3 / P.v_fiber
    f = P.f_source
    assert len(t) == lam and [r.shot_index for r in t.records] == list(range(lam))
    for r in t.records:
        i = r.shot_index
        assert r.t_emit == pytest.approx(i / f, abs=1e-18)
        assert r.t_arrive_user == pytest.approx(r.t_emit + prop + P.t_drive_store, abs=1e-15)
        assert r.t_store_user == pytest.approx((lam - 1 - i) / f + T + P.t_drive_recover, abs=1e-15)
        assert r.t_store_server == pytest.approx(r.t_store_user + 2 * prop + P.t_drive_store,
                                                 abs=1e-14)
        assert min(r.t_emit, r.t_store_user, r.t_store_server) >= 0
    user = t.t_store_user
    assert np.all(np.diff(user) < 0)
    assert user[-1] == pytest.approx(T + P.t_drive_recover, abs=1e-15)
    expected_span = (lam - 1) / f + 2 * prop + T + P.t_drive_store + P.t_drive_recover
    assert t.span == pytest.approx(expected_span, abs=1e-14)
