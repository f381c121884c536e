"""Per-message forwarding traces: data model, validation, JSONL ingestion.

A cascade is one original post plus its time-ordered forwards. Both the
original and the forwards count as message emissions for exposure purposes.
"""

from __future__ import annotations

import json
import logging
from bisect import bisect_left
from dataclasses import dataclass, field

log = logging.getLogger(__name__)


class CascadeValidationError(ValueError):
    """A cascade violates a structural invariant and must be skipped."""


@dataclass(frozen=True)
class ForwardEvent:
    event_id: int
    user: int
    time: int
    parent_event_id: int | None = None

    @property
    def is_root(self) -> bool:
        return self.parent_event_id is None


@dataclass
class Cascade:
    message_id: int
    has_url: bool
    is_hot_event: bool
    events: list[ForwardEvent]
    _forward_times: list[int] = field(default=None, repr=False, compare=False)
    _by_id: dict = field(default=None, repr=False, compare=False)

    @property
    def root(self) -> ForwardEvent:
        return self.events[0]

    @property
    def root_time(self) -> int:
        return self.events[0].time

    @property
    def n_forwards(self) -> int:
        return len(self.events) - 1

    def event_by_id(self, event_id: int) -> ForwardEvent:
        if self._by_id is None:
            self._by_id = {e.event_id: e for e in self.events}
        return self._by_id[event_id]

    def popularity_at(self, t: float) -> int:
        """Number of forward events strictly before time t.

        The original post never counts: popularity is forward volume.
        """
        if self._forward_times is None:
            self._forward_times = [e.time for e in self.events[1:]]
        return bisect_left(self._forward_times, t)


def validate_cascade(message_id, has_url, is_hot_event, events) -> Cascade:
    """Canonicalize and validate one cascade; raise CascadeValidationError.

    Checks: unique event ids, exactly one root, the root is the earliest
    event, every parent resolves to an earlier-or-simultaneous event, and
    each user appears at most once.
    """
    if not events:
        raise CascadeValidationError(f"message {message_id}: no events")
    events = sorted(events, key=lambda e: (e.time, e.event_id))
    ids = {}
    for e in events:
        if e.event_id in ids:
            raise CascadeValidationError(
                f"message {message_id}: duplicate event_id {e.event_id}"
            )
        ids[e.event_id] = e
    roots = [e for e in events if e.is_root]
    if len(roots) != 1:
        raise CascadeValidationError(
            f"message {message_id}: {len(roots)} root events, expected exactly 1"
        )
    if not events[0].is_root:
        raise CascadeValidationError(
            f"message {message_id}: root is not the earliest event"
        )
    users = set()
    for e in events:
        if e.user in users:
            raise CascadeValidationError(
                f"message {message_id}: duplicate user {e.user}"
            )
        users.add(e.user)
        if e.is_root:
            continue
        parent = ids.get(e.parent_event_id)
        if parent is None:
            raise CascadeValidationError(
                f"message {message_id}: dangling parent {e.parent_event_id} "
                f"for event {e.event_id}"
            )
        if parent.time > e.time:
            raise CascadeValidationError(
                f"message {message_id}: event {e.event_id} precedes its parent"
            )
    return Cascade(message_id, bool(has_url), bool(is_hot_event), events)


def _cascade_from_obj(obj: dict) -> Cascade:
    events = [
        ForwardEvent(
            event_id=int(ev["event_id"]),
            user=int(ev["user_id"]),
            time=int(ev["time"]),
            parent_event_id=None if ev["parent_event_id"] is None else int(ev["parent_event_id"]),
        )
        for ev in obj["events"]
    ]
    return validate_cascade(int(obj["message_id"]), obj["has_url"], obj["is_hot_event"], events)


def load_cascades(path, stats: dict | None = None) -> list[Cascade]:
    """Load cascade JSONL; invalid cascades are skipped and counted.

    Malformed JSON or a missing field raises ValueError with the line number.
    Cascades violating structural invariants are rejected individually; the
    reasons are logged and tallied into ``stats`` when a dict is passed.
    """
    cascades = []
    rejected = 0
    reasons = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: malformed JSON: {exc}") from None
            try:
                cascades.append(_cascade_from_obj(obj))
            except CascadeValidationError as exc:
                rejected += 1
                reasons.append(str(exc))
                log.warning("%s:%d: skipping cascade: %s", path, lineno, exc)
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad cascade object: {exc}") from None
    if stats is not None:
        stats["rejected"] = rejected
        stats["reject_reasons"] = reasons
        stats["loaded"] = len(cascades)
    log.info("loaded %s: %d cascades, %d rejected", path, len(cascades), rejected)
    return cascades


def dump_cascades(cascades, path) -> None:
    """Write cascades as the JSONL format load_cascades reads."""
    with open(path, "w", encoding="utf-8") as fh:
        for c in cascades:
            obj = {
                "message_id": c.message_id,
                "has_url": int(c.has_url),
                "is_hot_event": int(c.is_hot_event),
                "events": [
                    {
                        "event_id": e.event_id,
                        "user_id": e.user,
                        "time": e.time,
                        "parent_event_id": e.parent_event_id,
                    }
                    for e in c.events
                ],
            }
            fh.write(json.dumps(obj, separators=(",", ":")) + "\n")
