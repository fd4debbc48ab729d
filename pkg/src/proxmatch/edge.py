"""Wearable-side processing: session segmentation and per-session distance reports.

Tags broadcast an activity class with each advertisement; badges that hear a
broadcast feed its RSSI to a per-session filter and ship one compact distance
report per session, so the radio link and the server never see raw RSSI.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from . import ekf
from .ekf import EkfParams

__all__ = [
    "ACTIVE_DEFAULT",
    "Activity",
    "Advertisement",
    "DistanceReport",
    "SESSION_GAP_S",
    "Session",
    "downsample",
    "run_edge",
    "segment_sessions",
]

#: A pause longer than this splits two activity runs into separate sessions.
#: Short tool-handling pauses (re-gripping, repositioning) stay inside one
#: session; walking away for half a minute does not.
SESSION_GAP_S = 21.0


class Activity(Enum):
    """Activity class a tag attaches to its advertisements."""

    USAGE = "usage"
    TRANSPORT = "transport"
    INACTIVE = "inactive"


#: Classes that count as "the asset is being operated". Transport is excluded
#: by default: carrying a tool is not using it.
ACTIVE_DEFAULT = frozenset({Activity.USAGE})


@dataclass(frozen=True)
class Advertisement:
    """One received broadcast: reception time, both ids, RSSI, activity class."""

    ts: float
    wearable: str
    tag: str
    rssi: float
    activity: Activity

    def __post_init__(self) -> None:
        if not math.isfinite(self.ts):
            raise ValueError(f"timestamp must be finite, got {self.ts}")
        if not -127.0 <= self.rssi <= 20.0:
            raise ValueError(f"rssi outside plausible range [-127, 20] dB: {self.rssi}")
        if not isinstance(self.activity, Activity):
            raise ValueError(f"activity must be an Activity, got {self.activity!r}")


@dataclass(frozen=True)
class Session:
    """Maximal run of active broadcasts of one tag; boundaries are observed instants."""

    tag: str
    start: float
    stop: float


@dataclass(frozen=True)
class DistanceReport:
    """What a badge ships per session: final distance estimate and observation count."""

    wearable: str
    tag: str
    start: float
    stop: float
    distance: float
    n_obs: int


def _active_instants(
    ads: Sequence[Advertisement], active: frozenset[Activity]
) -> list[float]:
    """Distinct timestamps of active broadcasts; several badges hearing the
    same broadcast collapse to one instant."""
    return sorted({a.ts for a in ads if a.activity in active})


def segment_sessions(
    ads: Sequence[Advertisement],
    *,
    gap: float = SESSION_GAP_S,
    active: frozenset[Activity] = ACTIVE_DEFAULT,
) -> list[Session]:
    """Split one tag's time-sorted advertisement stream into sessions.

    A session is a maximal run of active broadcast instants in which
    consecutive instants are at most ``gap`` seconds apart; a gap of exactly
    ``gap`` does not split. Inactive broadcasts never extend a session.
    """
    if not (math.isfinite(gap) and gap > 0):
        raise ValueError(f"session gap must be finite and positive, got {gap}")
    tags = {a.tag for a in ads}
    if len(tags) > 1:
        raise ValueError(f"expected advertisements of a single tag, got {sorted(tags)}")
    for prev, cur in zip(ads, ads[1:]):
        if cur.ts < prev.ts:
            raise ValueError(f"advertisements must be time-sorted ({cur.ts} after {prev.ts})")
    instants = _active_instants(ads, active)
    if not instants:
        return []
    tag = next(iter(tags))
    sessions: list[Session] = []
    run_start = prev_t = instants[0]
    for t in instants[1:]:
        if t - prev_t > gap:
            sessions.append(Session(tag=tag, start=run_start, stop=prev_t))
            run_start = t
        prev_t = t
    sessions.append(Session(tag=tag, start=run_start, stop=prev_t))
    return sessions


def run_edge(
    ads: Iterable[Advertisement],
    params: EkfParams | None = None,
    *,
    gap: float = SESSION_GAP_S,
    active: frozenset[Activity] = ACTIVE_DEFAULT,
) -> list[DistanceReport]:
    """Replay a mixed advertisement stream into per-session distance reports.

    Sessions are cut per tag from the union of all badges' receptions, so
    every badge reports against the same session boundaries even when it
    missed the boundary broadcasts. Each (badge, session) pair runs a fresh
    filter over the active broadcasts that badge actually heard inside the
    window and yields exactly one report.
    """
    if params is None:
        params = EkfParams()
    stream = sorted(ads, key=lambda a: a.ts)
    by_tag: dict[str, list[Advertisement]] = defaultdict(list)
    for a in stream:
        by_tag[a.tag].append(a)

    reports: list[DistanceReport] = []
    for tag in sorted(by_tag):
        tag_ads = by_tag[tag]
        for session in segment_sessions(tag_ads, gap=gap, active=active):
            heard: dict[str, list[Advertisement]] = defaultdict(list)
            for a in tag_ads:
                if a.activity in active and session.start <= a.ts <= session.stop:
                    heard[a.wearable].append(a)
            for wearable in sorted(heard):
                state = None
                for a in heard[wearable]:
                    state = ekf.step(state, a.rssi, a.ts, params)
                assert state is not None
                reports.append(
                    DistanceReport(
                        wearable=wearable,
                        tag=tag,
                        start=session.start,
                        stop=session.stop,
                        distance=state.x,
                        n_obs=len(heard[wearable]),
                    )
                )
    reports.sort(key=lambda r: (r.start, r.stop, r.tag, r.wearable))
    return reports


def downsample(
    ads: Iterable[Advertisement], target_interval: float, phase: int = 0
) -> list[Advertisement]:
    """Thin a stream to a coarser broadcast interval.

    Keeps, per tag, the broadcast instants whose index is congruent to
    ``phase`` modulo k = target_interval / source_interval, where the source
    interval is inferred as the smallest positive spacing between any tag's
    consecutive instants. The outputs for phases 0..k-1 partition the input.
    """
    if not (math.isfinite(target_interval) and target_interval > 0):
        raise ValueError(f"target interval must be finite and positive, got {target_interval}")
    stream = sorted(ads, key=lambda a: a.ts)
    instants: dict[str, list[float]] = {}
    for a in stream:
        ts = instants.setdefault(a.tag, [])
        if not ts or a.ts != ts[-1]:
            ts.append(a.ts)
    source = math.inf
    for ts in instants.values():
        for prev, cur in zip(ts, ts[1:]):
            if cur - prev > 0:
                source = min(source, cur - prev)
    if not math.isfinite(source):
        # No tag broadcast twice; nothing to thin.
        if phase != 0:
            raise ValueError(f"phase must be 0 for a stream with no repeat broadcasts, got {phase}")
        return stream
    ratio = target_interval / source
    k = round(ratio)
    if k < 1 or abs(ratio - k) > 1e-6:
        raise ValueError(
            f"target interval {target_interval} is not an integer multiple "
            f"of the source interval {source}"
        )
    if not 0 <= phase < k:
        raise ValueError(f"phase must lie in [0, {k}), got {phase}")
    index = {
        (tag, ts): i for tag, tss in instants.items() for i, ts in enumerate(tss)
    }
    return [a for a in stream if index[(a.tag, a.ts)] % k == phase]
