import pytest

from pmuplan.measurements import (
    ChannelKind,
    ChannelLimitError,
    MeasurementChannel,
    PmuPlacement,
    channel_count,
    enumerate_channels,
    greedy_observable_cover,
    observability_check,
)
from pmuplan.network import Branch, Bus, NetworkCase


@pytest.fixture
def triangle():
    return NetworkCase(
        name="triangle",
        buses=(Bus(1), Bus(2), Bus(3)),
        branches=(
            Branch(1, 2, 0.0, 1.0),
            Branch(2, 3, 0.0, 1.0),
            Branch(1, 3, 0.0, 1.0),
        ),
    )


def test_placement_normalizes_and_validates():
    p = PmuPlacement.of([9, 2, 2, 7])
    assert p.buses == (2, 7, 9)
    assert p.bus_set == frozenset({2, 7, 9})
    assert len(p) == 3
    with pytest.raises(ValueError):
        PmuPlacement.of([1], channel_limit=0)


def test_channel_ordering_is_canonical(triangle):
    ms = enumerate_channels(triangle, PmuPlacement.of([1, 3]))
    kinds = [(c.kind, c.bus, c.branch_index) for c in ms.channels]
    assert kinds == [
        (ChannelKind.VR, 1, None),
        (ChannelKind.VX, 1, None),
        (ChannelKind.VR, 3, None),
        (ChannelKind.VX, 3, None),
        # branch 1-2 metered at 1, then 1-3 at its lower host, then 2-3 at 3
        (ChannelKind.IR, 1, 0),
        (ChannelKind.IX, 1, 0),
        (ChannelKind.IR, 1, 2),
        (ChannelKind.IX, 1, 2),
        (ChannelKind.IR, 3, 1),
        (ChannelKind.IX, 3, 1),
    ]


def test_dedupe_policies(triangle):
    everywhere = PmuPlacement.of([1, 2, 3])
    by_branch = enumerate_channels(triangle, everywhere, dedupe="by-branch")
    per_end = enumerate_channels(triangle, everywhere, dedupe="per-end")
    # 3 branches once vs 6 metered ends
    assert len(by_branch) == 2 * 3 + 2 * 3
    assert len(per_end) == 2 * 3 + 2 * 6
    assert channel_count(triangle, everywhere) == len(by_branch)
    assert channel_count(triangle, everywhere, dedupe="per-end") == len(per_end)
    with pytest.raises(ValueError, match="dedupe"):
        enumerate_channels(triangle, everywhere, dedupe="sometimes")


def test_by_branch_meters_at_lower_host(triangle):
    ms = enumerate_channels(triangle, PmuPlacement.of([2, 3]))
    host_of = {c.branch_index: c.bus for c in ms.channels if c.branch_index is not None}
    assert host_of == {0: 2, 1: 2, 2: 3}


def test_channel_counts_on_fixture(ieee14):
    nu = PmuPlacement.of([2, 6, 7, 9])
    assert channel_count(ieee14, nu) == 36
    degsum = sum(len(ieee14.incident_branches(b)) for b in (2, 6, 7, 9))
    assert channel_count(ieee14, nu, dedupe="per-end") == 8 + 2 * degsum


def test_channel_limit_enforced(ieee118):
    # the hub bus has more feeders than a stock device has inputs
    with pytest.raises(ChannelLimitError) as err:
        enumerate_channels(ieee118, PmuPlacement.of([49]))
    assert err.value.bus == 49
    assert err.value.incident == 12
    assert "channel limit" in str(err.value)
    wide = PmuPlacement.of([49], channel_limit=12)
    assert channel_count(ieee118, wide) == 2 + 2 * 12


def test_channel_validation():
    with pytest.raises(ValueError, match="no branch reference"):
        MeasurementChannel(ChannelKind.VR, 1, branch_index=0)
    with pytest.raises(ValueError, match="need a branch"):
        MeasurementChannel(ChannelKind.IR, 1)
    with pytest.raises(ValueError, match="variance"):
        MeasurementChannel(ChannelKind.VR, 1, variance=0.0)


def test_placement_bus_must_exist(triangle):
    with pytest.raises(KeyError, match="placement bus 9"):
        enumerate_channels(triangle, PmuPlacement.of([9]))


def test_observability_check(ieee14):
    ok, unobserved = observability_check(ieee14, PmuPlacement.of([2, 6, 7, 9]))
    assert ok and unobserved == []
    ok, unobserved = observability_check(ieee14, PmuPlacement.of([2]))
    assert not ok
    assert unobserved == [6, 7, 8, 9, 10, 11, 12, 13, 14]


def test_greedy_cover_14(ieee14):
    cover = greedy_observable_cover(ieee14)
    assert cover.buses == (1, 4, 6, 7, 9)
    ok, _ = observability_check(ieee14, cover)
    assert ok


def test_greedy_cover_respects_channel_limit(ieee118):
    cover = greedy_observable_cover(ieee118)
    assert 49 not in cover.bus_set
    ok, _ = observability_check(ieee118, cover)
    assert ok
    # the stock-device cover of this fixture lands on 37 hosts
    assert len(cover) == 37
    wide = greedy_observable_cover(ieee118, channel_limit=16)
    ok, _ = observability_check(ieee118, wide)
    assert ok
    assert len(wide) <= len(cover)


def test_cover_failure_when_nothing_can_host():
    # parallel pair pushes buses 1 and 2 over the limit, so no feasible host
    # in their neighborhood remains and the cover must report them stranded
    case = NetworkCase(
        name="stranded",
        buses=(Bus(1), Bus(2), Bus(3), Bus(4)),
        branches=(
            Branch(1, 2, 0.0, 1.0),
            Branch(1, 2, 0.0, 2.0),
            Branch(3, 4, 0.0, 1.0),
        ),
    )
    with pytest.raises(ValueError, match="cannot be observed"):
        greedy_observable_cover(case, channel_limit=1)
