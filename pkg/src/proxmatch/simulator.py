"""Synthetic advertisement streams with constructed ground truth.

Scenarios place workers and tagged tools on a 2-D floor, schedule active
periods for each tool, and synthesize the advertisements every badge would
hear: the path-loss mean at the true distance plus independent Gaussian noise
in dB, optionally thinned by random reception loss. The constructed truth
records who operated what and exposes true distances for error analysis.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .edge import Activity, Advertisement
from .matcher import TruthRecord
from .pathloss import DEFAULT_MODEL, PathLossModel

__all__ = [
    "ADV_INTERVAL_S",
    "GroundTruth",
    "NOISE_STD_DB",
    "OPERATING_DISTANCE_M",
    "ScenarioConfig",
    "ScheduleSegment",
    "ToolSpec",
    "Trace",
    "V_MAX_M_S",
    "WorkerSpec",
    "generate",
    "random_walk_trace",
    "scenario_static",
    "scenario_swap",
]

#: Tag broadcast period.
ADV_INTERVAL_S = 7.0
#: Measurement noise matching the calibration residual spread (sqrt(48.92) dB).
NOISE_STD_DB = 6.99
#: How far a hand-held tool sits from its operator's badge.
OPERATING_DISTANCE_M = 0.3
#: True distances below this are floored; the log model diverges at zero and
#: two real devices are never co-located.
MIN_TRUE_DISTANCE_M = 0.05
#: Walking-speed bound used for trace sanity checks.
V_MAX_M_S = 0.7

_RSSI_MIN, _RSSI_MAX = -127.0, 20.0


@dataclass(frozen=True)
class Trace:
    """Piecewise-linear 2-D path given as ((ts, x, y), ...) knots.

    Positions clamp to the first/last knot outside the knot range, so a
    single knot is a fixed position.
    """

    knots: tuple[tuple[float, float, float], ...]

    def __post_init__(self) -> None:
        if not self.knots:
            raise ValueError("a trace needs at least one knot")
        for (t0, *_), (t1, *_) in zip(self.knots, self.knots[1:]):
            if not t1 > t0:
                raise ValueError(f"trace knots must have strictly increasing timestamps ({t1} after {t0})")
        for t, x, y in self.knots:
            if not (math.isfinite(t) and math.isfinite(x) and math.isfinite(y)):
                raise ValueError(f"trace knots must be finite, got {(t, x, y)}")

    @classmethod
    def stationary(cls, x: float, y: float) -> Trace:
        return cls(((0.0, x, y),))

    def position(self, ts: float) -> tuple[float, float]:
        knots = self.knots
        if ts <= knots[0][0]:
            return knots[0][1], knots[0][2]
        if ts >= knots[-1][0]:
            return knots[-1][1], knots[-1][2]
        for (t0, x0, y0), (t1, x1, y1) in zip(knots, knots[1:]):
            if t0 <= ts <= t1:
                a = (ts - t0) / (t1 - t0)
                return x0 + a * (x1 - x0), y0 + a * (y1 - y0)
        raise AssertionError("unreachable: ts inside knot range but no segment found")

    def max_speed(self) -> float:
        """Largest segment speed in m/s; 0 for a single-knot trace."""
        best = 0.0
        for (t0, x0, y0), (t1, x1, y1) in zip(self.knots, self.knots[1:]):
            best = max(best, math.hypot(x1 - x0, y1 - y0) / (t1 - t0))
        return best


@dataclass(frozen=True)
class ScheduleSegment:
    """Active period [start, stop) of a tool, broadcast with ``activity``.

    ``operator`` names the worker actually using the tool during the segment,
    for ground truth; None infers the nearest worker over the segment.
    """

    start: float
    stop: float
    activity: Activity = Activity.USAGE
    operator: str | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.start) and math.isfinite(self.stop) and self.start <= self.stop):
            raise ValueError(f"segment needs start <= stop, got [{self.start}, {self.stop})")
        if self.activity is Activity.INACTIVE:
            raise ValueError("segments describe active periods; gaps are the inactivity")


@dataclass(frozen=True)
class WorkerSpec:
    id: str
    trace: Trace


@dataclass(frozen=True)
class ToolSpec:
    id: str
    trace: Trace
    schedule: tuple[ScheduleSegment, ...] = ()

    def __post_init__(self) -> None:
        for a, b in zip(self.schedule, self.schedule[1:]):
            if b.start < a.stop:
                raise ValueError(
                    f"schedule segments must be sorted and non-overlapping, "
                    f"got [{a.start}, {a.stop}) then [{b.start}, {b.stop})"
                )


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete description of one synthetic run."""

    seed: int
    duration: float
    workers: tuple[WorkerSpec, ...]
    tools: tuple[ToolSpec, ...]
    adv_interval: float = ADV_INTERVAL_S
    noise_std: float = NOISE_STD_DB
    drop_prob: float = 0.0
    model: PathLossModel = field(default_factory=lambda: DEFAULT_MODEL)

    def __post_init__(self) -> None:
        if not (isinstance(self.seed, int) and self.seed >= 0):
            raise ValueError(f"seed must be a nonnegative integer, got {self.seed!r}")
        if not (math.isfinite(self.duration) and self.duration >= 0):
            raise ValueError(f"duration must be finite and nonnegative, got {self.duration}")
        if not (math.isfinite(self.adv_interval) and self.adv_interval > 0):
            raise ValueError(f"broadcast interval must be finite and positive, got {self.adv_interval}")
        if not (math.isfinite(self.noise_std) and self.noise_std >= 0):
            raise ValueError(f"noise std must be finite and nonnegative, got {self.noise_std}")
        if not 0.0 <= self.drop_prob < 1.0:
            raise ValueError(f"drop probability must lie in [0, 1), got {self.drop_prob}")
        worker_ids = [w.id for w in self.workers]
        tool_ids = [t.id for t in self.tools]
        if len(set(worker_ids)) != len(worker_ids) or len(set(tool_ids)) != len(tool_ids):
            raise ValueError("worker and tool ids must be unique")
        if set(worker_ids) & set(tool_ids):
            raise ValueError("worker and tool ids must not collide")
        for t in self.tools:
            for seg in t.schedule:
                if seg.start < 0 or seg.stop > self.duration:
                    raise ValueError(
                        f"segment [{seg.start}, {seg.stop}) of tool {t.id!r} "
                        f"lies outside the scenario duration {self.duration}"
                    )
                if seg.operator is not None and seg.operator not in worker_ids:
                    raise ValueError(
                        f"segment operator {seg.operator!r} of tool {t.id!r} is not a worker id"
                    )

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "duration_s": self.duration,
            "adv_interval_s": self.adv_interval,
            "noise_std_db": self.noise_std,
            "drop_prob": self.drop_prob,
            "model": self.model.to_dict(),
            "workers": [
                {"id": w.id, "trace": [list(k) for k in w.trace.knots]} for w in self.workers
            ],
            "tools": [
                {
                    "id": t.id,
                    "trace": [list(k) for k in t.trace.knots],
                    "schedule": [
                        {
                            "start_s": s.start,
                            "stop_s": s.stop,
                            "activity": s.activity.value,
                            "operator": s.operator,
                        }
                        for s in t.schedule
                    ],
                }
                for t in self.tools
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> ScenarioConfig:
        def trace(knots: list) -> Trace:
            return Trace(tuple((float(t), float(x), float(y)) for t, x, y in knots))

        return cls(
            seed=int(d["seed"]),
            duration=float(d["duration_s"]),
            adv_interval=float(d["adv_interval_s"]),
            noise_std=float(d["noise_std_db"]),
            drop_prob=float(d["drop_prob"]),
            model=PathLossModel.from_dict(d["model"]),
            workers=tuple(
                WorkerSpec(id=str(w["id"]), trace=trace(w["trace"])) for w in d["workers"]
            ),
            tools=tuple(
                ToolSpec(
                    id=str(t["id"]),
                    trace=trace(t["trace"]),
                    schedule=tuple(
                        ScheduleSegment(
                            start=float(s["start_s"]),
                            stop=float(s["stop_s"]),
                            activity=Activity(s["activity"]),
                            operator=None if s.get("operator") is None else str(s["operator"]),
                        )
                        for s in t["schedule"]
                    ),
                )
                for t in d["tools"]
            ),
        )


@dataclass(frozen=True)
class GroundTruth:
    """Constructed truth: session operators plus true-distance lookup."""

    sessions: tuple[TruthRecord, ...]
    worker_traces: dict[str, Trace]
    tool_traces: dict[str, Trace]

    def true_distance(self, wearable: str, tag: str, ts: float) -> float:
        """Floored Euclidean distance between a badge and a tag at ``ts``."""
        wx, wy = self.worker_traces[wearable].position(ts)
        tx, ty = self.tool_traces[tag].position(ts)
        return max(math.hypot(tx - wx, ty - wy), MIN_TRUE_DISTANCE_M)


def _segment_instants(seg: ScheduleSegment, interval: float) -> list[float]:
    """Broadcast instants of one segment: multiples of the interval from its
    start, half-open so a zero-length segment broadcasts nothing."""
    out = []
    k = 0
    while True:
        t = seg.start + k * interval
        if t >= seg.stop:
            return out
        out.append(t)
        k += 1


def generate(config: ScenarioConfig) -> tuple[list[Advertisement], GroundTruth]:
    """Synthesize the advertisement stream a seeded scenario run describes.

    Every active segment broadcasts at multiples of the interval from its
    start; every worker hears every broadcast through its own independent
    noise draw, optionally dropped with the configured probability. Draws
    happen in a fixed order (tools by id, instants ascending, workers by id;
    noise before drop), so a seed pins the byte-exact stream. RSSI values are
    clamped to the plausible radio range [-127, 20] dB.
    """
    rng = np.random.default_rng(config.seed)
    workers = sorted(config.workers, key=lambda w: w.id)
    tools = sorted(config.tools, key=lambda t: t.id)

    for spec in (*workers, *tools):
        if spec.trace.max_speed() > V_MAX_M_S + 1e-9:
            warnings.warn(
                f"trace of {spec.id!r} reaches {spec.trace.max_speed():.2f} m/s, "
                f"above the walking bound {V_MAX_M_S} m/s",
                RuntimeWarning,
                stacklevel=2,
            )

    ads: list[Advertisement] = []
    truth_sessions: list[TruthRecord] = []
    floored = 0

    for tool in tools:
        for seg in tool.schedule:
            instants = _segment_instants(seg, config.adv_interval)
            if not instants:
                continue
            mean_dist = {w.id: 0.0 for w in workers}
            for ts in instants:
                tx, ty = tool.trace.position(ts)
                for w in workers:
                    wx, wy = w.trace.position(ts)
                    d = math.hypot(tx - wx, ty - wy)
                    if d < MIN_TRUE_DISTANCE_M:
                        d = MIN_TRUE_DISTANCE_M
                        floored += 1
                    mean_dist[w.id] += d
                    rssi = config.model.forward(d) + rng.normal(0.0, config.noise_std)
                    dropped = config.drop_prob > 0 and rng.uniform() < config.drop_prob
                    if not dropped:
                        ads.append(
                            Advertisement(
                                ts=ts,
                                wearable=w.id,
                                tag=tool.id,
                                rssi=min(max(rssi, _RSSI_MIN), _RSSI_MAX),
                                activity=seg.activity,
                            )
                        )
            if seg.activity is Activity.USAGE:
                operator = seg.operator
                if operator is None:
                    if not workers:
                        raise ValueError("cannot infer an operator without workers")
                    operator = min(mean_dist, key=lambda wid: (mean_dist[wid], wid))
                truth_sessions.append(
                    TruthRecord(tag=tool.id, start=instants[0], stop=instants[-1], wearable=operator)
                )

    if floored:
        warnings.warn(
            f"{floored} true distance(s) below {MIN_TRUE_DISTANCE_M} m floored",
            RuntimeWarning,
            stacklevel=2,
        )
    ads.sort(key=lambda a: (a.ts, a.tag, a.wearable))
    truth_sessions.sort(key=lambda t: (t.start, t.stop, t.tag))
    return ads, GroundTruth(
        sessions=tuple(truth_sessions),
        worker_traces={w.id: w.trace for w in workers},
        tool_traces={t.id: t.trace for t in tools},
    )


def scenario_static(
    n_workers: int,
    spacing: float,
    duration: float,
    bystanders: int = 0,
    *,
    seed: int = 0,
    adv_interval: float = ADV_INTERVAL_S,
    noise_std: float = NOISE_STD_DB,
    drop_prob: float = 0.0,
    model: PathLossModel = DEFAULT_MODEL,
    operating_distance: float = OPERATING_DISTANCE_M,
) -> ScenarioConfig:
    """A row of stationary workers, each operating their own tool throughout.

    Worker i stands at (i * spacing, 0) with tool Ti+1 a hand's reach away at
    (i * spacing, operating_distance), active for the whole duration.
    Bystanders extend the row beyond the last worker: they wear badges and
    hear every broadcast but operate nothing.
    """
    if n_workers < 1:
        raise ValueError(f"need at least one worker, got {n_workers}")
    if bystanders < 0:
        raise ValueError(f"bystander count must be nonnegative, got {bystanders}")
    if not (math.isfinite(spacing) and spacing > 0):
        raise ValueError(f"spacing must be finite and positive, got {spacing}")
    workers = [
        WorkerSpec(id=f"W{i + 1}", trace=Trace.stationary(i * spacing, 0.0))
        for i in range(n_workers)
    ]
    workers += [
        WorkerSpec(id=f"B{b + 1}", trace=Trace.stationary((n_workers + b) * spacing, 0.0))
        for b in range(bystanders)
    ]
    tools = [
        ToolSpec(
            id=f"T{i + 1}",
            trace=Trace.stationary(i * spacing, operating_distance),
            schedule=(ScheduleSegment(start=0.0, stop=duration, operator=f"W{i + 1}"),),
        )
        for i in range(n_workers)
    ]
    return ScenarioConfig(
        seed=seed,
        duration=duration,
        workers=tuple(workers),
        tools=tuple(tools),
        adv_interval=adv_interval,
        noise_std=noise_std,
        drop_prob=drop_prob,
        model=model,
    )


def scenario_swap(
    n_workers: int,
    spacing: float,
    swap_times: Sequence[float],
    *,
    duration: float = 360.0,
    gap: float = 22.0,
    seed: int = 0,
    adv_interval: float = ADV_INTERVAL_S,
    noise_std: float = NOISE_STD_DB,
    drop_prob: float = 0.0,
    model: PathLossModel = DEFAULT_MODEL,
    operating_distance: float = OPERATING_DISTANCE_M,
) -> ScenarioConfig:
    """Workers trade tools cyclically at each swap time.

    Tools sit at fixed stations spacing apart. Before every swap the tools
    pause for ``gap`` seconds while the workers walk one station to the
    right (wrapping around), so each tool's activity splits into one session
    per period and reactivates under the next operator: in period k, tool
    Tj+1 is operated by worker W((j - k) mod n + 1).

    The pause must exceed the session gap or the swap would not split
    sessions; with no swap times this reduces to the static scenario.
    """
    if n_workers < 2:
        raise ValueError(f"swapping needs at least two workers, got {n_workers}")
    if not (math.isfinite(spacing) and spacing > 0):
        raise ValueError(f"spacing must be finite and positive, got {spacing}")
    if not (math.isfinite(gap) and gap > 21.0):
        raise ValueError(f"swap pause must exceed the 21 s session gap, got {gap}")
    swaps = [float(t) for t in swap_times]
    if any(b <= a for a, b in zip(swaps, swaps[1:])):
        raise ValueError(f"swap times must be strictly increasing, got {swaps}")
    if swaps and (swaps[0] <= gap or swaps[-1] >= duration):
        raise ValueError(
            f"swap times must leave a nonempty period before and after, "
            f"got {swaps} with pause {gap} in duration {duration}"
        )
    for a, b in zip(swaps, swaps[1:]):
        if b - gap <= a:
            raise ValueError(f"swaps at {a} and {b} are closer than the {gap} s pause")

    boundaries = [0.0, *swaps, float(duration)]
    n_periods = len(boundaries) - 1

    def station(x_index: int) -> tuple[float, float]:
        return x_index * spacing, 0.0

    workers = []
    for w in range(n_workers):
        knots: list[tuple[float, float, float]] = [(0.0, *station(w))]
        for k in range(1, n_periods):
            prev = station((w + k - 1) % n_workers)
            cur = station((w + k) % n_workers)
            knots.append((boundaries[k] - gap, *prev))
            knots.append((boundaries[k], *cur))
        workers.append(WorkerSpec(id=f"W{w + 1}", trace=Trace(tuple(knots))))

    tools = []
    for j in range(n_workers):
        segments = []
        for k in range(n_periods):
            start = boundaries[k]
            stop = boundaries[k + 1] - gap if k < n_periods - 1 else boundaries[k + 1]
            segments.append(
                ScheduleSegment(
                    start=start,
                    stop=stop,
                    operator=f"W{(j - k) % n_workers + 1}",
                )
            )
        tools.append(
            ToolSpec(
                id=f"T{j + 1}",
                trace=Trace.stationary(j * spacing, operating_distance),
                schedule=tuple(segments),
            )
        )
    return ScenarioConfig(
        seed=seed,
        duration=float(duration),
        workers=tuple(workers),
        tools=tuple(tools),
        adv_interval=adv_interval,
        noise_std=noise_std,
        drop_prob=drop_prob,
        model=model,
    )


def random_walk_trace(
    rng: np.random.Generator,
    start: tuple[float, float],
    duration: float,
    *,
    step_s: float = ADV_INTERVAL_S,
    speed: float = V_MAX_M_S,
) -> Trace:
    """Bounded-speed random walk: fresh heading every ``step_s``, speed uniform in [0, speed]."""
    if not (math.isfinite(duration) and duration > 0):
        raise ValueError(f"duration must be finite and positive, got {duration}")
    knots = [(0.0, float(start[0]), float(start[1]))]
    t, x, y = knots[0]
    while t < duration:
        dt = min(step_s, duration - t)
        heading = rng.uniform(0.0, 2.0 * math.pi)
        v = rng.uniform(0.0, speed)
        t, x, y = t + dt, x + v * dt * math.cos(heading), y + v * dt * math.sin(heading)
        knots.append((t, x, y))
    return Trace(tuple(knots))
