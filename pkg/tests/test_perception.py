import io
import math

import pytest
from hypothesis import given, strategies as st

from evasion_sim import fixtures
from evasion_sim.camera import CameraModel
from evasion_sim.errors import ConfigError
from evasion_sim.perception import (DetectionProfile, asr_to_profile, dump_profile, load_profile, loads_profile,
                                    sample_detection)
from evasion_sim.stats import RngStream

from conftest import flat_profile

CAM = CameraModel()


def test_rate_lookup_half_open():
    p = DetectionProfile("p", ((4, 10, 0.2), (10, 20, 0.7)))
    assert p.rate_at(4.0) == 0.2
    assert p.rate_at(9.999) == 0.2
    assert p.rate_at(10.0) == 0.7
    assert p.rate_at(20.0) == 0.0
    assert p.rate_at(3.0) == 0.0
    assert (p.lo, p.hi, p.rates) == (4, 20, (0.2, 0.7))


@pytest.mark.parametrize("ranges", [
    (),
    ((4, 10, 0.2), (11, 20, 0.5)),  # gap
    ((4, 10, 0.2), (9, 20, 0.5)),  # overlap
    ((4, 10, 1.2),),  # rate out of range
    ((10, 4, 0.5),),  # empty interval
])
def test_invalid_profiles_rejected(ranges):
    with pytest.raises((ValueError, ConfigError)):
        DetectionProfile("bad", ranges)


def test_load_profile_text():
    text = "# label: demo\nlo_m,hi_m,rate\n4,10,0.5\n10,20,0.25\n"
    p = loads_profile(text)
    assert p.label == "demo"
    assert p.ranges == ((4.0, 10.0, 0.5), (10.0, 20.0, 0.25))


def test_load_asr_column():
    p = loads_profile("# column: asr\nlo_m,hi_m,rate\n4,10,0.9\n")
    assert p.rate_at(5.0) == pytest.approx(0.1)


def test_load_errors_report_row():
    with pytest.raises(ConfigError, match="no ranges"):
        loads_profile("")
    with pytest.raises(ConfigError, match="3"):
        loads_profile("lo_m,hi_m,rate\n4,10,0.5\n10,x,0.2\n")


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        load_profile("/no/such/profile.csv")


def test_asr_conversion():
    p = asr_to_profile([(4, 10, 0.165), (10, 15, 1.0)], "a")
    assert p.ranges == ((4, 10, 0.835), (10, 15, 0.0))


@pytest.mark.parametrize("name", fixtures.names())
def test_fixture_round_trip(name):
    p = fixtures.profile(name)
    again = load_profile(io.StringIO(dump_profile(p)))
    assert again == p
    assert (p.lo, p.hi) == (4.0, 45.0)


def test_fixture_values_spot_check():
    assert fixtures.profile("table3_y5_benign").rate_at(32.0) == pytest.approx(0.523)
    assert fixtures.profile("table4_fte_y5_s1s2").rate_at(22.0) == pytest.approx(1 - 0.934)
    assert fixtures.profile("y2_rp2") == fixtures.profile("table3_y2_rp2")
    assert set(fixtures.ablation_profiles("FTE-Y5")) == {"original", "s1", "s2", "s1s2"}


def _with_rates(rates):
    return DetectionProfile("p", tuple((lo, hi, r) for (lo, hi, _), r in zip(flat_profile(0.0).ranges, rates)))


@given(st.lists(st.floats(0, 1), min_size=9, max_size=9), st.lists(st.floats(0, 1), min_size=9, max_size=9))
def test_dominance(a, b):
    lower = _with_rates([min(x, y) for x, y in zip(a, b)])
    assert lower.dominated_by(_with_rates(a))
    assert lower.dominated_by(_with_rates(b))


def test_detection_frequency_binomial():
    n, rate = 100_000, 0.904
    p = flat_profile(rate)
    rng = RngStream(11, 1)
    hits = sum(sample_detection(p, 20.0, CAM, rng).detected for _ in range(n))
    sigma = math.sqrt(n * rate * (1 - rate))
    assert abs(hits - n * rate) <= 3 * sigma


def test_detection_draw_count_fixed():
    # one uniform for keep/drop plus two for the noise, detected or not
    rng = RngStream(1)
    for d in (2.0, 20.0, 60.0):
        before = rng.drawn
        sample_detection(flat_profile(0.5), d, CAM, rng)
        assert rng.drawn - before == 3


def test_out_of_sight_never_detected(perfect):
    rng = RngStream(2)
    assert not any(sample_detection(perfect, 3.9, CAM, rng).detected for _ in range(200))
    det = sample_detection(perfect, 20.0, CAM, rng, noise_std_m=0.0, frame_index=9)
    assert det.detected and det.measured_distance_m == 20.0 and det.frame_index == 9
