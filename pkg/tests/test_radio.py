import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from radio import (
    DEFAULT_SHADOW_EXTENT_M,
    K_FACTOR_CAP_DB,
    Corridor,
    RadioGeometry,
    distance_for_power,
    fading_sample,
    far_field_power,
    link_sample,
    received_power,
    recover_signal_power,
    shadowing_at,
    to_rssi_snr,
    view_circle_radius,
)
from world import GatewayMessage


def test_far_field_power_at_reference_distance():
    g = RadioGeometry()
    assert far_field_power(1.0, g) == pytest.approx(17.0 - 40.0)


def test_far_field_power_decade_slope():
    g = RadioGeometry(path_loss_exponent=2.7)
    assert far_field_power(10.0, g) - far_field_power(100.0, g) == pytest.approx(27.0)


@pytest.mark.parametrize("d", [0.0, -5.0, 0.5])
def test_far_field_power_rejects_distances_below_reference(d):
    with pytest.raises(ValueError):
        far_field_power(d, RadioGeometry())


@given(st.floats(min_value=1.0, max_value=1e5))
def test_distance_for_power_inverts_far_field(d):
    g = RadioGeometry()
    assert distance_for_power(far_field_power(d, g), g) == pytest.approx(d, rel=1e-9)


def test_rssi_snr_round_trip_many_samples():
    g = RadioGeometry()
    powers = np.random.default_rng(0).uniform(-160.0, 20.0, 100_000)
    worst = max(abs(recover_signal_power(*to_rssi_snr(float(p), g)) - p) for p in powers)
    assert worst < 1e-9


@given(st.floats(min_value=-180.0, max_value=30.0), st.floats(min_value=-140.0, max_value=-80.0))
def test_rssi_never_below_signal_power(power, noise):
    g = RadioGeometry(noise_floor_dbm=noise)
    rssi, snr = to_rssi_snr(power, g)
    assert snr == pytest.approx(power - noise)
    assert rssi >= power


def test_link_sample_fields_are_consistent():
    sample = link_sample(-90.0, RadioGeometry())
    assert sample.signal_power_dbm == -90.0
    assert recover_signal_power(sample.rssi_dbm, sample.snr_db) == pytest.approx(-90.0, abs=1e-9)


def test_shadowing_is_fixed_by_seed():
    g = RadioGeometry(seed=3)
    points = [(0.0, 0.0), (123.4, -567.8), (1999.0, 15.0)]
    assert [shadowing_at(p, g) for p in points] == [shadowing_at(p, RadioGeometry(seed=3)) for p in points]
    assert [shadowing_at(p, g) for p in points] != [shadowing_at(p, RadioGeometry(seed=4)) for p in points]


def test_shadowing_is_continuous_in_space():
    g = RadioGeometry(seed=11)
    assert abs(shadowing_at((250.0, 250.0), g) - shadowing_at((250.001, 250.0), g)) < 1e-3


def test_shadowing_has_the_configured_spread_at_lattice_nodes():
    g = RadioGeometry(seed=21, shadow_sigma_db=4.0, shadow_extent_m=5000.0, shadow_decorrelation_m=100.0)
    values = np.array([
        shadowing_at((-5000.0 + 100.0 * i, -5000.0 + 100.0 * j), g) for i in range(100) for j in range(100)
    ])
    assert np.std(values) == pytest.approx(4.0, rel=0.15)
    assert abs(np.mean(values)) < 0.2


def test_bare_geometry_uses_the_default_lattice_extent():
    points = [(0.0, 0.0), (-1750.0, 820.0), (3000.0, 3000.0)]
    bare = RadioGeometry(seed=2)
    sized = RadioGeometry(seed=2, shadow_extent_m=DEFAULT_SHADOW_EXTENT_M)
    assert [shadowing_at(p, bare) for p in points] == [shadowing_at(p, sized) for p in points]


def test_shadowing_off_when_sigma_is_zero():
    assert shadowing_at((10.0, 20.0), RadioGeometry(shadow_sigma_db=0.0)) == 0.0


def test_fading_is_zero_db_at_capped_k_factor(rng):
    g = RadioGeometry(rician_k_db=K_FACTOR_CAP_DB)
    assert all(fading_sample(rng, g) == 0.0 for _ in range(10))


@pytest.mark.parametrize("k_db", [0.0, 3.0, 6.0, 10.0])
def test_fading_has_unit_mean_power(k_db):
    g = RadioGeometry(rician_k_db=k_db)
    rng = np.random.default_rng(5)
    linear = [10.0 ** (fading_sample(rng, g) / 10.0) for _ in range(20_000)]
    assert np.mean(linear) == pytest.approx(1.0, abs=0.05)


def test_vanishing_k_factor_gives_rayleigh_power():
    g = RadioGeometry(rician_k_db=-100.0)
    rng = np.random.default_rng(17)
    linear = np.array([10.0 ** (fading_sample(rng, g) / 10.0) for _ in range(50_000)])
    # unit-mean exponential: median at ln 2
    assert np.mean(linear <= math.log(2.0)) == pytest.approx(0.5, abs=0.01)


def test_noiseless_received_power_is_far_field(rng):
    g = RadioGeometry().noiseless()
    power = received_power((300.0, 400.0, 300.0), (0.0, 0.0), g, rng)
    assert power == pytest.approx(far_field_power(math.sqrt(300.0**2 + 400.0**2 + 300.0**2), g))


def test_received_power_averages_to_the_far_field_mean():
    g = RadioGeometry(shadow_sigma_db=0.0, rician_k_db=3.0)
    rng = np.random.default_rng(29)
    uav = (300.0, 400.0, 300.0)
    linear = [10.0 ** (received_power(uav, (0.0, 0.0), g, rng) / 10.0) for _ in range(20_000)]
    expected = far_field_power(math.sqrt(300.0**2 + 400.0**2 + 300.0**2), g)
    assert 10.0 * math.log10(np.mean(linear)) == pytest.approx(expected, abs=0.5)


def test_corridor_adds_wall_loss_only_out_of_line_of_sight(rng):
    g = RadioGeometry().noiseless()
    corridor = Corridor(-100.0, 100.0, -2000.0, 2000.0, wall_loss_db=20.0)
    node = (0.0, 0.0)
    inside = received_power((0.0, 500.0, 300.0), node, g, rng, corridor=corridor)
    outside = received_power((500.0, 0.0, 300.0), node, g, rng, corridor=corridor)
    assert inside == pytest.approx(received_power((0.0, 500.0, 300.0), node, g, rng))
    assert outside == pytest.approx(received_power((500.0, 0.0, 300.0), node, g, rng) - 20.0)


def test_corridor_never_blocks_nodes_outside_it():
    corridor = Corridor(-100.0, 100.0, -2000.0, 2000.0)
    assert not corridor.blocks((900.0, 0.0, 300.0), (500.0, 0.0))


def test_terrain_presets_and_overrides():
    canyon = RadioGeometry.for_terrain("canyon", shadow_sigma_db=6.0)
    assert canyon.path_loss_exponent == 3.5
    assert canyon.rician_k_db == 0.0
    assert canyon.shadow_sigma_db == 6.0
    assert RadioGeometry.for_terrain("plain").path_loss_exponent == 2.7
    with pytest.raises(ValueError):
        RadioGeometry.for_terrain("swamp")


@pytest.mark.parametrize(
    "field, value",
    [
        ("path_loss_exponent", 1.5),
        ("ref_distance_m", 0.0),
        ("shadow_sigma_db", -1.0),
        ("shadow_decorrelation_m", 5.0),
        ("shadow_extent_m", 0.0),
    ],
)
def test_radio_geometry_validates(field, value):
    with pytest.raises(ValueError):
        RadioGeometry(**{field: value})


def test_view_circle_radius_recovers_horizontal_distance():
    g = RadioGeometry().noiseless()
    rssi, snr = to_rssi_snr(far_field_power(math.hypot(500.0, 300.0), g), g)
    assert view_circle_radius(GatewayMessage(rssi, snr, 0.0, 0.0), g, 300.0) == pytest.approx(500.0, rel=1e-6)


def test_view_circle_radius_is_zero_above_overhead_power():
    g = RadioGeometry().noiseless()
    rssi, snr = to_rssi_snr(far_field_power(200.0, g), g)
    assert view_circle_radius(GatewayMessage(rssi, snr, 0.0, 0.0), g, 300.0) == 0.0
