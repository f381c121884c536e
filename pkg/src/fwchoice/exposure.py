"""Exposure reconstruction and two-exposure choice-instance extraction.

A message exposes user u once each time a followee of u emits it (original
post or forward). Exposures at or after u's own emission are not counted.
"""

from __future__ import annotations

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass

from fwchoice.cascade import Cascade, ForwardEvent
from fwchoice.graph import FollowGraph

log = logging.getLogger(__name__)


@dataclass
class ExposureRecord:
    user: int
    message_id: int
    exposures: list[ForwardEvent]
    forwarded_at: ForwardEvent | None = None


@dataclass(frozen=True)
class ChoiceInstance:
    """One two-exposure forwarding decision.

    bob_event is the earlier exposure, jim_event the later one; label 1 means
    the user forwarded the later source (jim), 0 the earlier (bob). Equal
    exposure times are broken by event_id and flagged via tie_broken.
    """

    message_id: int
    allen: int
    bob_event: ForwardEvent
    jim_event: ForwardEvent
    allen_event: ForwardEvent
    label: int
    root_time: int
    tie_broken: bool = False


def compute_exposures(g: FollowGraph, c: Cascade) -> list[ExposureRecord]:
    """Exposure records for every user exposed at least once by cascade c.

    For each user u following >=1 emitting user: the (time, event_id)-ordered
    events by followees of u, truncated strictly before u's own event time if
    u appears in the cascade. Users left with zero exposures are omitted.
    Output is sorted by user id.
    """
    buckets: dict[int, list[ForwardEvent]] = defaultdict(list)
    own: dict[int, ForwardEvent] = {}
    for e in c.events:  # already sorted by (time, event_id)
        own[e.user] = e
        for follower in g.followers(e.user):
            buckets[follower].append(e)
    records = []
    for user in sorted(buckets):
        exposures = buckets[user]
        own_event = own.get(user)
        if own_event is not None:
            exposures = [e for e in exposures if e.time < own_event.time]
        if not exposures:
            continue
        forwarded_at = own_event if own_event is not None and not own_event.is_root else None
        records.append(ExposureRecord(user, c.message_id, exposures, forwarded_at))
    return records


def exposure_distribution(records) -> Counter:
    """Histogram k -> number of records with exactly k exposures."""
    return Counter(len(r.exposures) for r in records)


def extract_instances(
    g: FollowGraph, cascades, stats: dict | None = None
) -> list[ChoiceInstance]:
    """Extract every two-exposure forwarding choice across the cascades.

    One instance per (user, message) whose truncated exposure list has length
    exactly 2 and whose own forward's parent is one of the two exposure
    events. Forwards whose parent is neither exposure (e.g. forwarding a root
    whose author the user does not follow) are dropped and counted.
    """
    instances = []
    dropped = 0
    for c in cascades:
        for rec in compute_exposures(g, c):
            if rec.forwarded_at is None or len(rec.exposures) != 2:
                continue
            bob, jim = rec.exposures
            parent_id = rec.forwarded_at.parent_event_id
            if parent_id == jim.event_id:
                label = 1
            elif parent_id == bob.event_id:
                label = 0
            else:
                dropped += 1
                continue
            instances.append(
                ChoiceInstance(
                    message_id=c.message_id,
                    allen=rec.user,
                    bob_event=bob,
                    jim_event=jim,
                    allen_event=rec.forwarded_at,
                    label=label,
                    root_time=c.root_time,
                    tie_broken=bob.time == jim.time,
                )
            )
    instances.sort(key=lambda i: (i.message_id, i.allen))
    if stats is not None:
        stats["dropped_parent_mismatch"] = dropped
        stats["instances"] = len(instances)
    if dropped:
        log.info("dropped %d two-exposure forwards whose parent was neither exposure", dropped)
    return instances


def write_exposure_stats_tsv(dist: Counter, path) -> None:
    """Write the exposure-count histogram as 'k<TAB>W(k)' rows."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("k\tW(k)\n")
        for k in sorted(dist):
            fh.write(f"{k}\t{dist[k]}\n")


def write_instances_tsv(instances, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("message_id\tallen\tbob_event_id\tjim_event_id\tallen_event_id\tlabel\n")
        for i in instances:
            fh.write(
                f"{i.message_id}\t{i.allen}\t{i.bob_event.event_id}\t"
                f"{i.jim_event.event_id}\t{i.allen_event.event_id}\t{i.label}\n"
            )
