"""Server-side matching of asset sessions to operators, and evaluation metrics.

The server sees one distance report per (badge, session) pair and must decide
who operated each asset. Assignment is event-driven: sessions are handled in
activation order, a badge stays bound to its running session, and sessions
starting together are solved jointly by exhaustive search. Each decision also
carries a trust label so downstream consumers can separate confident
assignments from coin flips between nearby workers.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .edge import DistanceReport

__all__ = [
    "EVENT_WINDOW_S",
    "EvalReport",
    "MatchProblem",
    "MatchResult",
    "SURE_MARGIN_M",
    "TagSession",
    "Trust",
    "TruthRecord",
    "brute_force_solve",
    "evaluate",
    "solve",
    "trust_classify",
]

#: Session starts within this window of an event's first start are treated as
#: simultaneous; one broadcast interval absorbs reception jitter.
EVENT_WINDOW_S = 7.0

#: A distance lead below this is within the estimator's own error, so the
#: assignment is flagged rather than trusted.
SURE_MARGIN_M = 0.75

_SOFT_LIMIT = 15
_BRUTE_FORCE_LIMIT = 6


class Trust(Enum):
    SURE = "sure"
    UNSURE = "unsure"


@dataclass(frozen=True)
class TagSession:
    """One active period of a tag with every badge's reported distance."""

    tag: str
    start: float
    stop: float
    distances: dict[str, float]


@dataclass(frozen=True)
class MatchResult:
    """Assignment decision for one session; ``wearable`` is None when no badge was free."""

    tag: str
    start: float
    stop: float
    wearable: str | None
    trust: Trust
    margin: float


@dataclass(frozen=True)
class TruthRecord:
    """Ground truth: who actually operated ``tag`` during [start, stop]."""

    tag: str
    start: float
    stop: float
    wearable: str


@dataclass(frozen=True)
class MatchProblem:
    """All reported sessions for one matching run."""

    wearables: tuple[str, ...]
    sessions: tuple[TagSession, ...]

    @property
    def tags(self) -> tuple[str, ...]:
        return tuple(sorted({s.tag for s in self.sessions}))

    @classmethod
    def from_reports(cls, reports: Iterable[DistanceReport]) -> MatchProblem:
        """Group distance reports by session; a badge absent from a session
        simply has no distance there and is never a candidate for it."""
        by_session: dict[tuple[str, float, float], dict[str, float]] = {}
        for r in reports:
            key = (r.tag, r.start, r.stop)
            dists = by_session.setdefault(key, {})
            if r.wearable in dists:
                raise ValueError(
                    f"duplicate report for wearable {r.wearable!r} in session "
                    f"{r.tag!r}@[{r.start}, {r.stop}]"
                )
            if not (math.isfinite(r.distance) and r.distance >= 0):
                raise ValueError(f"report distance must be finite and nonnegative, got {r.distance}")
            dists[r.wearable] = r.distance
        sessions = tuple(
            TagSession(tag=tag, start=start, stop=stop, distances=dists)
            for (tag, start, stop), dists in sorted(by_session.items(), key=lambda kv: (kv[0][1], kv[0][2], kv[0][0]))
        )
        wearables = tuple(sorted({w for s in sessions for w in s.distances}))
        if len(wearables) > _SOFT_LIMIT or len({s.tag for s in sessions}) > _SOFT_LIMIT:
            warnings.warn(
                f"matching {len(wearables)} wearables x {len({s.tag for s in sessions})} tags; "
                "joint events may be slow to solve exhaustively",
                RuntimeWarning,
                stacklevel=2,
            )
        return cls(wearables=wearables, sessions=sessions)


def trust_classify(
    assigned_distance: float,
    other_distances: Iterable[float],
    threshold: float = SURE_MARGIN_M,
) -> tuple[Trust, float]:
    """Margin to the nearest competing estimate and the trust class it earns.

    The margin is the smallest absolute gap between the assigned badge's
    distance and any other badge's distance for the same session, infinite
    when no other badge reported. Sure requires the margin to exceed the
    threshold strictly: a session decided by exactly the threshold, or by a
    dead tie, stays unsure.
    """
    margin = math.inf
    for d in other_distances:
        if math.isfinite(d):
            margin = min(margin, abs(assigned_distance - d))
    trust = Trust.SURE if margin > threshold else Trust.UNSURE
    return trust, margin


def _search_assignment(
    group: Sequence[TagSession], free: Sequence[str]
) -> list[str | None]:
    """Exhaustive search over injective badge assignments for one event.

    Maximizes the number of assigned sessions, then minimizes the summed
    distance; among exact ties the first assignment in candidate order wins,
    which makes ties resolve to the lexicographically smallest badge ids.
    """
    best_count = -1
    best_total = math.inf
    best: list[str | None] = [None] * len(group)
    chosen: list[str | None] = [None] * len(group)

    def rec(i: int, used: set[str], count: int, total: float) -> None:
        nonlocal best_count, best_total, best
        if i == len(group):
            if count > best_count or (count == best_count and total < best_total):
                best_count, best_total, best = count, total, chosen.copy()
            return
        # Prune: even assigning every remaining session cannot beat the best.
        if count + (len(group) - i) < best_count:
            return
        dists = group[i].distances
        for w in free:
            if w in used:
                continue
            d = dists.get(w)
            if d is None:
                continue
            used.add(w)
            chosen[i] = w
            rec(i + 1, used, count + 1, total + d)
            chosen[i] = None
            used.remove(w)
        rec(i + 1, used, count, total)

    rec(0, set(), 0, 0.0)
    return best


def _enumerate_assignment(
    group: Sequence[TagSession], free: Sequence[str]
) -> list[str | None]:
    """Reference assigner: literally try every injective assignment.

    Exponential and deliberately unclever; guarded to small events. Kept as
    an independent cross-check of the search above.
    """
    if len(group) > _BRUTE_FORCE_LIMIT or len(free) > _BRUTE_FORCE_LIMIT:
        raise ValueError(
            f"brute force capped at {_BRUTE_FORCE_LIMIT} sessions/badges per event, "
            f"got {len(group)} sessions x {len(free)} badges"
        )
    pool: list[str | None] = list(free) + [None] * len(group)
    best_count = -1
    best_total = math.inf
    best: list[str | None] = [None] * len(group)
    for combo in itertools.permutations(pool, len(group)):
        count = 0
        total = 0.0
        valid = True
        for s, w in zip(group, combo):
            if w is None:
                continue
            d = s.distances.get(w)
            if d is None:
                valid = False
                break
            count += 1
            total += d
        if not valid:
            continue
        if count > best_count or (count == best_count and total < best_total):
            best_count, best_total, best = count, total, list(combo)
    return best


def _solve_events(
    problem: MatchProblem,
    threshold: float,
    window: float,
    assigner: Callable[[Sequence[TagSession], Sequence[str]], list[str | None]],
) -> list[MatchResult]:
    sessions = sorted(problem.sessions, key=lambda s: (s.start, s.stop, s.tag))
    results: list[MatchResult] = []
    busy: list[tuple[str, float]] = []  # (wearable, bound until stop, exclusive)

    i = 0
    while i < len(sessions):
        j = i + 1
        while j < len(sessions) and sessions[j].start - sessions[i].start <= window:
            j += 1
        group = sessions[i:j]
        t0 = group[0].start
        busy = [(w, stop) for w, stop in busy if stop > t0]
        occupied = {w for w, _ in busy}
        free = [w for w in problem.wearables if w not in occupied]
        assignment = assigner(group, free)
        for s, w in zip(group, assignment):
            if w is None:
                warnings.warn(
                    f"session {s.tag!r}@[{s.start}, {s.stop}]: no free wearable "
                    "with a distance report; left unassigned",
                    RuntimeWarning,
                    stacklevel=3,
                )
                results.append(
                    MatchResult(tag=s.tag, start=s.start, stop=s.stop, wearable=None,
                                trust=Trust.UNSURE, margin=0.0)
                )
                continue
            others = [d for k, d in s.distances.items() if k != w]
            trust, margin = trust_classify(s.distances[w], others, threshold)
            results.append(
                MatchResult(tag=s.tag, start=s.start, stop=s.stop, wearable=w,
                            trust=trust, margin=margin)
            )
            busy.append((w, s.stop))
        i = j
    return results


def solve(
    problem: MatchProblem,
    *,
    threshold: float = SURE_MARGIN_M,
    window: float = EVENT_WINDOW_S,
) -> list[MatchResult]:
    """Assign an operator to every session, event by event.

    Sessions are processed in activation order. Starts within ``window``
    seconds of an event's first start are solved jointly: the search picks
    the injective badge assignment that covers the most sessions and, among
    those, has the smallest summed distance. A badge stays bound to its
    session until the session's stop and is free again from that instant on.
    """
    return _solve_events(problem, threshold, window, _search_assignment)


def brute_force_solve(
    problem: MatchProblem,
    *,
    threshold: float = SURE_MARGIN_M,
    window: float = EVENT_WINDOW_S,
) -> list[MatchResult]:
    """Reference solver for cross-checking ``solve`` on small problems."""
    return _solve_events(problem, threshold, window, _enumerate_assignment)


@dataclass(frozen=True)
class EvalReport:
    """Confusion counts of assignments split by trust, with exact metrics.

    Accuracy is the share of sessions assigned to the true operator; recall
    the share of correct assignments that were also sure; precision the share
    of sure assignments that were correct. Ratios are exact fractions, the
    derived metrics are None when their denominator is zero.
    """

    correct_sure: int
    correct_unsure: int
    wrong_sure: int
    wrong_unsure: int

    @property
    def total(self) -> int:
        return self.correct_sure + self.correct_unsure + self.wrong_sure + self.wrong_unsure

    @property
    def correct(self) -> int:
        return self.correct_sure + self.correct_unsure

    @property
    def sure_total(self) -> int:
        return self.correct_sure + self.wrong_sure

    @property
    def accuracy(self) -> Fraction | None:
        return Fraction(self.correct, self.total) if self.total else None

    @property
    def recall(self) -> Fraction | None:
        return Fraction(self.correct_sure, self.correct) if self.correct else None

    @property
    def precision(self) -> Fraction | None:
        return Fraction(self.correct_sure, self.sure_total) if self.sure_total else None

    def to_dict(self) -> dict:
        def metric(num: int, den: int) -> dict | None:
            if den == 0:
                return None
            return {"ratio": f"{num}/{den}", "percent": round(100.0 * num / den, 1)}

        return {
            "counts": {
                "correct_sure": self.correct_sure,
                "correct_unsure": self.correct_unsure,
                "wrong_sure": self.wrong_sure,
                "wrong_unsure": self.wrong_unsure,
            },
            "total": self.total,
            "accuracy": metric(self.correct, self.total),
            "recall": metric(self.correct_sure, self.correct),
            "precision": metric(self.correct_sure, self.sure_total),
        }


def _overlap(a_start: float, a_stop: float, b_start: float, b_stop: float) -> float:
    return min(a_stop, b_stop) - max(a_start, b_start)


def evaluate(results: Iterable[MatchResult], truth: Iterable[TruthRecord]) -> EvalReport:
    """Score match results against ground truth sessions.

    Each result joins to the same-tag truth record with the largest window
    overlap (touching intervals count); a result whose tag has no overlapping
    truth record is an error, since scoring it would silently misalign the
    two session sets. An unassigned result counts as wrong.
    """
    truth_by_tag: dict[str, list[TruthRecord]] = {}
    for t in truth:
        truth_by_tag.setdefault(t.tag, []).append(t)

    counts = {(True, Trust.SURE): 0, (True, Trust.UNSURE): 0,
              (False, Trust.SURE): 0, (False, Trust.UNSURE): 0}
    for r in results:
        candidates = [
            t for t in truth_by_tag.get(r.tag, ())
            if _overlap(r.start, r.stop, t.start, t.stop) >= 0
        ]
        if not candidates:
            raise ValueError(
                f"no ground-truth session overlaps result {r.tag!r}@[{r.start}, {r.stop}]"
            )
        best = max(
            candidates,
            key=lambda t: (_overlap(r.start, r.stop, t.start, t.stop), -t.start),
        )
        correct = r.wearable == best.wearable
        counts[(correct, r.trust)] += 1
    return EvalReport(
        correct_sure=counts[(True, Trust.SURE)],
        correct_unsure=counts[(True, Trust.UNSURE)],
        wrong_sure=counts[(False, Trust.SURE)],
        wrong_unsure=counts[(False, Trust.UNSURE)],
    )
