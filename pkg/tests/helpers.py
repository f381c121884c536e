"""Independent brute-force oracles shared across tests.

These deliberately avoid the library's fast paths: exposures are recomputed
by scanning every (user, event) pair, instances are re-derived from the
oracle records, and history pairs come from a flat scan of parent links.
"""

from fwchoice.exposure import ExposureRecord


def brute_force_exposures(g, c):
    """O(users x events) scan of (follower, event) pairs."""
    users = set(g.users) | {e.user for e in c.events}
    own = {e.user: e for e in c.events}
    records = []
    for u in sorted(users):
        hits = []
        for e in sorted(c.events, key=lambda e: (e.time, e.event_id)):
            if e.user != u and g.follows(u, e.user):
                hits.append(e)
        if u in own:
            hits = [e for e in hits if e.time < own[u].time]
        if not hits:
            continue
        fwd = own.get(u)
        if fwd is not None and fwd.parent_event_id is None:
            fwd = None
        records.append(ExposureRecord(u, c.message_id, hits, fwd))
    return records


def brute_force_instances(g, cascades):
    """(message_id, allen, bob_id, jim_id, allen_id, label) tuples from scratch."""
    out = []
    for c in cascades:
        for rec in brute_force_exposures(g, c):
            if rec.forwarded_at is None or len(rec.exposures) != 2:
                continue
            bob, jim = rec.exposures
            parent = rec.forwarded_at.parent_event_id
            if parent == jim.event_id:
                label = 1
            elif parent == bob.event_id:
                label = 0
            else:
                continue
            out.append(
                (c.message_id, rec.user, bob.event_id, jim.event_id,
                 rec.forwarded_at.event_id, label)
            )
    return sorted(out)


def brute_force_history_pairs(cascades, before=None):
    pairs = set()
    for c in cascades:
        if before is not None and c.events[0].time >= before:
            continue
        by_id = {e.event_id: e for e in c.events}
        for e in c.events:
            if e.parent_event_id is not None:
                pairs.add((e.user, by_id[e.parent_event_id].user))
    return pairs


def record_key(rec):
    return (rec.user, rec.message_id, [e.event_id for e in rec.exposures],
            None if rec.forwarded_at is None else rec.forwarded_at.event_id)
