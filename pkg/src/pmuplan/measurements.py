"""Measurement model: from a PMU placement to an ordered channel list.

A bus-type PMU meters its bus voltage phasor and the current phasor on every
incident branch. In rectangular coordinates each phasor contributes two real
channels, so a placement Q induces ``m = 2|Q| + 2 * (metered branch ends)``
channels. When both endpoints of a branch host PMUs the two current phasors
are redundant; the default ``by-branch`` policy keeps a single pair, metered
at the lower-numbered endpoint, while ``per-end`` keeps both.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

from .network import NetworkCase

__all__ = [
    "ChannelKind",
    "ChannelLimitError",
    "PmuPlacement",
    "MeasurementChannel",
    "MeasurementSet",
    "enumerate_channels",
    "channel_count",
    "observability_check",
    "greedy_observable_cover",
]

DEFAULT_CHANNEL_LIMIT = 8


class ChannelKind(str, Enum):
    VR = "Vr"
    VX = "Vx"
    IR = "Ir"
    IX = "Ix"


class ChannelLimitError(ValueError):
    """A PMU bus has more incident branches than its channel limit allows."""

    def __init__(self, bus: int, incident: int, limit: int):
        self.bus = bus
        self.incident = incident
        self.limit = limit
        super().__init__(
            f"bus {bus} has {incident} incident branches, exceeding the "
            f"channel limit of {limit}"
        )


@dataclass(frozen=True)
class PmuPlacement:
    """A set of PMU-hosting buses plus the per-PMU branch-input budget."""

    buses: tuple[int, ...]
    channel_limit: int = DEFAULT_CHANNEL_LIMIT

    def __post_init__(self) -> None:
        if self.channel_limit <= 0:
            raise ValueError("channel_limit must be positive")
        ordered = tuple(sorted(set(self.buses)))
        if ordered != tuple(self.buses):
            object.__setattr__(self, "buses", ordered)

    @classmethod
    def of(cls, buses: Iterable[int], channel_limit: int = DEFAULT_CHANNEL_LIMIT) -> "PmuPlacement":
        return cls(buses=tuple(sorted(set(buses))), channel_limit=channel_limit)

    @property
    def bus_set(self) -> frozenset[int]:
        return frozenset(self.buses)

    def __len__(self) -> int:
        return len(self.buses)


@dataclass(frozen=True)
class MeasurementChannel:
    """One real-valued channel.

    Voltage channels carry no branch; current channels reference the metered
    branch by its index in the case plus the endpoint the PMU meters from.
    """

    kind: ChannelKind
    bus: int
    branch_index: Optional[int] = None
    variance: float = 1.0

    def __post_init__(self) -> None:
        if self.variance <= 0.0:
            raise ValueError("channel variance must be positive")
        is_voltage = self.kind in (ChannelKind.VR, ChannelKind.VX)
        if is_voltage and self.branch_index is not None:
            raise ValueError("voltage channels carry no branch reference")
        if not is_voltage and self.branch_index is None:
            raise ValueError("current channels need a branch reference")


@dataclass(frozen=True)
class MeasurementSet:
    """Canonically ordered channels induced by a placement.

    Ordering: all voltage channels by bus id (Vr before Vx), then current
    channels by (min endpoint, max endpoint, branch position, metered bus),
    Ir before Ix. The ordering is fixed so downstream matrices and reports
    are byte-reproducible.
    """

    channels: tuple[MeasurementChannel, ...]
    placement: PmuPlacement
    dedupe: str = "by-branch"

    def __len__(self) -> int:
        return len(self.channels)


def _check_limits(case: NetworkCase, placement: PmuPlacement) -> None:
    known = set(case.bus_ids)
    for bus in placement.buses:
        if bus not in known:
            raise KeyError(f"placement bus {bus} not in case {case.name!r}")
        incident = len(case.incident_branches(bus))
        if incident > placement.channel_limit:
            raise ChannelLimitError(bus, incident, placement.channel_limit)


def enumerate_channels(
    case: NetworkCase,
    placement: PmuPlacement,
    dedupe: str = "by-branch",
) -> MeasurementSet:
    """Expand a placement into its explicit channel list.

    Parameters
    ----------
    case : NetworkCase
    placement : PmuPlacement
        Buses must exist in the case and each must satisfy the placement's
        channel limit against its incident-branch count.
    dedupe : {"by-branch", "per-end"}
        Under ``by-branch`` a branch with PMUs at both ends contributes one
        (Ir, Ix) pair, metered at the lower-numbered endpoint. Under
        ``per-end`` both ends contribute a pair.

    Raises
    ------
    ChannelLimitError
        Naming the first offending bus.
    """
    if dedupe not in ("by-branch", "per-end"):
        raise ValueError(f"unknown dedupe policy {dedupe!r}")
    _check_limits(case, placement)
    pmus = placement.bus_set

    channels: list[MeasurementChannel] = []
    for bus in placement.buses:
        channels.append(MeasurementChannel(ChannelKind.VR, bus))
        channels.append(MeasurementChannel(ChannelKind.VX, bus))

    # (min end, max end, branch position, metered bus) keeps parallel branches
    # and per-end duplicates in a stable order.
    metered: list[tuple[int, int, int, int]] = []
    for idx, br in enumerate(case.branches):
        ends = sorted((br.from_bus, br.to_bus))
        hosts = [e for e in (br.from_bus, br.to_bus) if e in pmus]
        if not hosts:
            continue
        if dedupe == "by-branch":
            metered.append((ends[0], ends[1], idx, min(hosts)))
        else:
            for host in sorted(hosts):
                metered.append((ends[0], ends[1], idx, host))
    metered.sort()
    for _, _, idx, host in metered:
        channels.append(MeasurementChannel(ChannelKind.IR, host, idx))
        channels.append(MeasurementChannel(ChannelKind.IX, host, idx))

    return MeasurementSet(channels=tuple(channels), placement=placement, dedupe=dedupe)


def channel_count(case: NetworkCase, placement: PmuPlacement, dedupe: str = "by-branch") -> int:
    """Channel total m without materializing the channel list."""
    if dedupe not in ("by-branch", "per-end"):
        raise ValueError(f"unknown dedupe policy {dedupe!r}")
    _check_limits(case, placement)
    pmus = placement.bus_set
    if dedupe == "by-branch":
        touched = {
            i
            for bus in placement.buses
            for i in case.incident_branches(bus)
        }
        ends = len(touched)
    else:
        ends = sum(len(case.incident_branches(bus)) for bus in placement.buses)
    return 2 * len(pmus) + 2 * ends


def observability_check(case: NetworkCase, placement: PmuPlacement) -> tuple[bool, list[int]]:
    """Topological observability: every bus hosts a PMU or neighbors one.

    Returns ``(fully_observable, sorted unobserved bus ids)``.
    """
    pmus = placement.bus_set
    observed = set(pmus)
    for br in case.branches:
        if br.from_bus in pmus:
            observed.add(br.to_bus)
        if br.to_bus in pmus:
            observed.add(br.from_bus)
    unobserved = sorted(set(case.bus_ids) - observed)
    return not unobserved, unobserved


def greedy_observable_cover(
    case: NetworkCase,
    channel_limit: int = DEFAULT_CHANNEL_LIMIT,
) -> PmuPlacement:
    """Build an observable placement by greedy coverage.

    Repeatedly adds the bus whose closed neighborhood covers the most still
    uncovered buses, lowest id on ties, until every bus is covered. Buses
    with more incident branches than the channel limit cannot host a device
    and are never selected. The result passes :func:`observability_check`
    but is not guaranteed to be of minimum cardinality.
    """
    closed: dict[int, set[int]] = {b: {b} for b in case.bus_ids}
    for br in case.branches:
        closed[br.from_bus].add(br.to_bus)
        closed[br.to_bus].add(br.from_bus)
    hosts = sorted(
        b for b in case.bus_ids if len(case.incident_branches(b)) <= channel_limit
    )

    uncovered = set(case.bus_ids)
    chosen: list[int] = []
    while uncovered:
        # max() keeps the first maximum, so over sorted ids the lowest wins ties
        best = max(hosts, key=lambda b: len(closed[b] & uncovered))
        if not closed[best] & uncovered:
            raise ValueError(
                f"buses {sorted(uncovered)} cannot be observed by any host "
                f"within the channel limit of {channel_limit}"
            )
        chosen.append(best)
        uncovered -= closed[best]
    return PmuPlacement.of(chosen, channel_limit=channel_limit)
