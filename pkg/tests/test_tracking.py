import numpy as np
import pytest

from evasion_sim.perception import Detection
from evasion_sim.stats import RngStream, lifecycle_oracle
from evasion_sim.tracking import (EMPTY_TRACK, TrackerParams, TrackStatus, innovation_gate, is_tracked, predict,
                                  update)

HIT = Detection(True, 0, 20.0)
MISS = Detection(False, 0)


def _walk(state, params, prefix, out):
    """Depth-first over every hit/miss continuation, comparing each prefix with the oracle."""
    if prefix:
        want = lifecycle_oracle(prefix, params.hits_to_confirm, params.misses_to_delete)[-1]
        assert state.status.value == want, (prefix, params)
        out[0] += 1
    if len(prefix) == 12:
        return
    for hit in (True, False):
        _walk(update(state, HIT if hit else MISS, params), params, prefix + [hit], out)


@pytest.mark.parametrize("h", [1, 2, 3, 4])
@pytest.mark.parametrize("r", [1, 2, 3, 4])
def test_lifecycle_matches_oracle_exhaustively(h, r):
    counted = [0]
    _walk(EMPTY_TRACK, TrackerParams(h, r), [], counted)
    assert counted[0] == 2 ** 13 - 2


def test_confirm_and_delete_default_params():
    p = TrackerParams()
    s = EMPTY_TRACK
    for i in range(4):
        s = update(s, HIT, p)
    assert is_tracked(s)
    for i in range(5):
        s = update(s, MISS, p)
        assert s.status is TrackStatus.CONFIRMED
    s = update(s, MISS, p)
    assert s is EMPTY_TRACK


def test_unobservable_frames_coast():
    p = TrackerParams(1, 1)
    s = update(EMPTY_TRACK, HIT, p)
    for _ in range(20):
        s = update(predict(s, 0.05, 5.0, p), MISS, p, observable=False)
    assert is_tracked(s)
    assert s.distance == pytest.approx(20.0 - 20 * 0.05 * 5.0)


def test_gated_measurement_counts_as_miss():
    p = TrackerParams(1, 2)
    s = update(EMPTY_TRACK, HIT, p)
    far = Detection(True, 1, 40.0)
    assert innovation_gate(s, 40.0, p) > p.gate_sigma
    s = update(s, far, p)
    assert s.consecutive_misses == 1
    assert update(s, far, p) is EMPTY_TRACK


def test_predict_moves_with_ego_speed_and_grows_covariance():
    p = TrackerParams()
    s = update(EMPTY_TRACK, HIT, p)
    s2 = predict(s, 0.05, 10.0, p)
    assert s2.distance == pytest.approx(19.5)
    assert s2.p00 > s.p00
    assert predict(EMPTY_TRACK, 0.05, 10.0, p) is EMPTY_TRACK
    with pytest.raises(ValueError):
        predict(s, 0.0, 10.0, p)


def test_covariance_stays_psd_under_random_steps():
    rng = RngStream(99)
    p = TrackerParams(1, 10 ** 6, gate_sigma=1e9)
    s = update(EMPTY_TRACK, HIT, p)
    for _ in range(10_000):
        dt = rng.uniform_range(0.01, 0.2)
        s = predict(s, dt, rng.uniform_range(0, 20), p)
        if rng.uniform() < 0.7:
            s = update(s, Detection(True, 0, rng.uniform_range(1, 60)), p)
        else:
            s = update(s, MISS, p)
        cov = s.covariance
        assert np.allclose(cov, cov.T)
        assert np.linalg.eigvalsh(cov).min() >= -1e-12


def test_filter_converges_on_constant_approach():
    p = TrackerParams(1, 6)
    rng = RngStream(4)
    dt, v = 0.05, 12.0
    d = 45.0
    s = EMPTY_TRACK
    for k in range(60):
        if k:
            s = predict(s, dt, v, p)
            d -= v * dt
        s = update(s, Detection(True, k, d + rng.normal(0, 0.5)), p)
    assert s.distance == pytest.approx(d, abs=0.5)
    assert abs(s.closing_rate) < 0.5
    assert s.p00 < 0.25
