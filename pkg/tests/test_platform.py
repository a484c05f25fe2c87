import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xdlvm.chemputer import (
    LiquidSample,
    Platform,
    Vessel,
    merge_samples,
    observation_space_size,
    platform_from_dict,
    platform_to_dict,
    standard_platform,
    to_microlitres,
)
from xdlvm.colour import DEFAULT_PALETTE, ColourClass, bin_channel, classify_rgb
from xdlvm.errors import (
    CapacityExceeded,
    ConfigError,
    InsufficientVolume,
    InvalidTransfer,
    MissingReading,
    UnknownVessel,
)

ORANGE_RGB = (230, 140, 30)
BLUE_RGB = (40, 80, 200)


def two_vials():
    return Platform({
        "a": Vessel("a", contents=[LiquidSample.of_ml("o", 5, ORANGE_RGB)]),
        "b": Vessel("b", contents=[LiquidSample.of_ml("b", 5, BLUE_RGB)]),
        "waste": Vessel("waste", "waste", capacity_ul=None),
    })


def test_fill_from_stock():
    p = standard_platform(8, 8)
    p.transfer("stock_orange", "tape_3", 5)
    assert p.vessel("tape_3").volume_ml == 5
    assert p.true_colour("tape_3") is ColourClass.ORANGE
    assert p.dispensed_ul == 5000


def test_mixing_is_volume_weighted():
    p = two_vials()
    p.transfer("a", "b", 5)
    mix = p.vessel("b").mixture()
    # (230+40)/2, (140+80)/2, (30+200)/2
    assert mix.rgb == (135, 110, 115)
    assert mix.volume_ul == 10_000
    assert mix.reagent == "mixture"
    assert p.vessel("a").contents == []


def test_merge_rounds_half_up():
    s = merge_samples([LiquidSample("x", 1, (0, 0, 0)), LiquidSample("y", 1, (1, 3, 255))])
    assert s.rgb == (1, 2, 128)


def test_capacity_exceeded():
    p = standard_platform(4, 4)
    p.transfer("stock_blue", "tape_1", 5)
    with pytest.raises(CapacityExceeded):
        p.transfer("stock_blue", "tape_1", 6)
    assert p.vessel("tape_1").volume_ml == 5


def test_transfer_errors_leave_platform_untouched():
    p = standard_platform(2, 2)
    before = platform_to_dict(p)
    with pytest.raises(InsufficientVolume):
        p.transfer("tape_1", "waste", 1)
    with pytest.raises(InsufficientVolume):
        p.transfer("tape_1", "waste", "all")
    with pytest.raises(UnknownVessel):
        p.transfer("tape_9", "waste", 1)
    with pytest.raises(InvalidTransfer):
        p.transfer("tape_1", "stock_blue", 1)
    with pytest.raises(InvalidTransfer):
        p.transfer("tape_1", "tape_1", 1)
    with pytest.raises(ValueError):
        p.transfer("stock_blue", "tape_1", "0.0001")
    assert platform_to_dict(p) == before


def test_transfer_all_empties_the_source():
    p = two_vials()
    p.transfer("a", "waste", "all")
    assert p.vessel("a").volume_ul == 0
    assert p.vessel("waste").volume_ul == 5000


def test_millilitres_convert_exactly():
    assert to_microlitres("0.1") == 100
    assert to_microlitres(0.1) == 100
    assert to_microlitres("2.345") == 2345


@pytest.mark.parametrize("rgb, expected", [
    (DEFAULT_PALETTE[ColourClass.WHITE], ColourClass.WHITE),
    (DEFAULT_PALETTE[ColourClass.ORANGE], ColourClass.ORANGE),
    (DEFAULT_PALETTE[ColourClass.BLUE], ColourClass.BLUE),
    (DEFAULT_PALETTE[ColourClass.GREEN], ColourClass.GREEN),
    ((245, 245, 245), ColourClass.WHITE),
    (ORANGE_RGB, ColourClass.ORANGE),
    (BLUE_RGB, ColourClass.BLUE),
    ((40, 160, 70), ColourClass.GREEN),
    ((128, 128, 128), ColourClass.UNKNOWN),
])
def test_classification(rgb, expected):
    assert classify_rgb(rgb) is expected


def test_mid_grey_is_unknown_by_hand():
    # 128 lies in bin 2 on every channel. Binned references are
    # white (4,4,4), orange (4,2,0), blue (0,0,4), green (0,4,0):
    # L1 distances 6, 4, 6, 6, all above the acceptance radius of 2.
    assert [bin_channel(v) for v in (0, 50, 51, 101, 102, 203, 204, 255)] == [0, 0, 1, 1, 2, 3, 4, 4]
    p = Platform({"g": Vessel("g", contents=[LiquidSample.of_ml("grey", 5, (128, 128, 128))]),
                  "waste": Vessel("waste", "waste")})
    assert p.observe_colour("g") is ColourClass.UNKNOWN


def test_empty_vial_observes_white():
    p = standard_platform(1, 1)
    assert p.observe_colour("tape_1") is ColourClass.WHITE
    assert p.observation_counter == 1


def test_observation_does_not_mutate_liquids():
    p = standard_platform(2, 2)
    p.transfer("stock_orange", "tape_1", 5)
    p.camera_noise_sigma = 30
    before = platform_to_dict(p)
    for _ in range(20):
        p.observe_colour("tape_1")
    assert platform_to_dict(p) == before
    assert p.observation_counter == 20


def test_noise_replays_exactly():
    def readings(seed):
        p = standard_platform(1, 1)
        p.set_contents("tape_1", [LiquidSample.of_ml("grey", 5, (150, 150, 100))])
        p.camera_noise_sigma, p.rng_seed = 40, seed
        return [p.observe_colour("tape_1") for _ in range(200)]

    assert readings(7) == readings(7)
    assert readings(7) != readings(8)


@pytest.mark.parametrize("args, expected", [((8, 10, 5), 78_125_000), ((1, 1, 1), 1), ((2, 3, 4), 128)])
def test_observation_space_size(args, expected):
    assert observation_space_size(*args) == expected


def test_observation_space_size_rejects_zero():
    with pytest.raises(ValueError):
        observation_space_size(0, 1, 1)


def test_standard_platform_layout():
    p = standard_platform(8, 8, 2)
    roles = [v.role for v in p.vessels.values()]
    assert roles.count("tape") == 8 and roles.count("head") == 8 and roles.count("state") == 2
    assert roles.count("stock") == 3 and roles.count("waste") == 1
    assert len(p.vessels) == 22
    small = standard_platform(4, 4, 2)
    assert [v.id for v in small.by_role("head")] == ["head_1", "head_2", "head_3", "head_4"]
    with pytest.raises(ValueError):
        standard_platform(1, 2, 2)


def test_platform_requires_one_waste():
    with pytest.raises(ConfigError):
        Platform({"a": Vessel("a")})
    with pytest.raises(ConfigError):
        Platform({"w1": Vessel("w1", "waste"), "w2": Vessel("w2", "waste")})


def test_duplicate_role_index_rejected():
    with pytest.raises(ConfigError):
        Platform({"t1": Vessel("t1", "tape", 1), "t2": Vessel("t2", "tape", 1),
                  "waste": Vessel("waste", "waste")})


def test_config_round_trip(quench_platform):
    data = platform_to_dict(quench_platform)
    again = platform_from_dict(json.loads(json.dumps(data)))
    assert platform_to_dict(again) == data
    assert again.reading("reactor_1", "temperature") == 49.0
    with pytest.raises(MissingReading):
        again.reading("product", "ph")


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(extra=1),
    lambda d: d["camera"].update(gain=2),
    lambda d: d["vessels"][0].update(shape="round"),
    lambda d: d["vessels"][0]["contents"][0].update(ph=7),
])
def test_config_rejects_unknown_keys(quench_platform, mutate):
    data = platform_to_dict(quench_platform)
    mutate(data)
    with pytest.raises(ConfigError):
        platform_from_dict(data)


ops = st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5), st.integers(1, 6000)), max_size=40)


@given(ops)
@settings(max_examples=100, deadline=None)
def test_volume_is_conserved(steps):
    p = standard_platform(2, 2)
    ids = list(p.vessels)
    for a, b, ul in steps:
        try:
            p.transfer(ids[a], ids[b], volume_ul=ul)
        except (CapacityExceeded, InsufficientVolume, InvalidTransfer):
            pass
        assert p.liquid_total_ul() == p.dispensed_ul
