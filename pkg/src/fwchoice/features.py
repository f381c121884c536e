"""16-feature scheme for two-exposure forwarding choices.

Features (1-based ids, grouped):
  content     1 message has embedded URL
              2 message relates to a hot event
              3 current popularity bucket at the later exposure time
                ([0,10)->0, [10,100)->1, [100,1000)->2, [1000,10000)->3, >=10000->4)
  structural  4 bob follows jim          5 jim follows bob
              6 bob follows allen        7 jim follows allen
              8 in_degree(jim) > in_degree(bob)
              9 in_degree(jim) > in_degree(allen)
             10 in_degree(bob) > in_degree(allen)
  temporal   11 bob is the original poster
             12 hours between the two exposures
             13 mean consecutive inter-event gap (hours) up to the later exposure
  history    14 original post falls in the active period (10am-10pm local)
             15 allen previously forwarded a message emitted by bob
             16 same for jim
"""

from __future__ import annotations

from bisect import bisect_right

import numpy as np

from fwchoice.cascade import Cascade
from fwchoice.exposure import ChoiceInstance
from fwchoice.graph import FollowGraph

FEATURE_NAMES = [
    "has_url",
    "is_hot_event",
    "popularity_bucket",
    "bob_follows_jim",
    "jim_follows_bob",
    "bob_follows_allen",
    "jim_follows_allen",
    "jim_indeg_gt_bob",
    "jim_indeg_gt_allen",
    "bob_indeg_gt_allen",
    "bob_is_original_poster",
    "exposure_gap_hours",
    "mean_prior_gap_hours",
    "root_in_active_hours",
    "allen_forwarded_bob_before",
    "allen_forwarded_jim_before",
]

CONTINUOUS_FEATURE_IDS = (12, 13)

# Grouping per the feature table's row layout.
TABLE_GROUPING = {
    "content": [1, 2, 3],
    "structural": [4, 5, 6, 7, 8, 9, 10],
    "temporal": [11, 12, 13],
    "history": [14, 15, 16],
}

# Alternate grouping per the running-text reading: "original poster" is
# structural, "active period" is temporal.
PROSE_GROUPING = {
    "content": [1, 2, 3],
    "structural": [4, 5, 6, 7, 8, 9, 10, 11],
    "temporal": [12, 13, 14],
    "history": [15, 16],
}

GROUPINGS = {"table": TABLE_GROUPING, "prose": PROSE_GROUPING}

_BUCKET_EDGES = (10, 100, 1000, 10000)


class IntegrityError(ValueError):
    """A choice instance references users/events absent from its inputs."""


def popularity_bucket(count: int) -> int:
    return bisect_right(_BUCKET_EDGES, count)


class HistoryIndex:
    """Directional (forwarder, source-user) pairs from past cascades.

    A pair (a, b) means a's forward event had a parent event emitted by b
    (original post or forward alike). Each pair remembers the earliest root
    time of a cascade containing it, so membership can be queried relative
    to any cutoff.
    """

    def __init__(self):
        self._earliest: dict[tuple[int, int], int] = {}

    def add(self, forwarder: int, source: int, root_time: int) -> None:
        key = (forwarder, source)
        prev = self._earliest.get(key)
        if prev is None or root_time < prev:
            self._earliest[key] = root_time

    def contains(self, forwarder: int, source: int, before: int | None = None) -> bool:
        t = self._earliest.get((forwarder, source))
        if t is None:
            return False
        return before is None or t < before

    def __len__(self) -> int:
        return len(self._earliest)


def build_history_index(cascades, before: int | None = None) -> HistoryIndex:
    """Index forwarder->source interactions from cascades rooted before `before`.

    With before=None all cascades are indexed; queries can still be
    restricted per lookup via HistoryIndex.contains(..., before=t).
    """
    idx = HistoryIndex()
    for c in cascades:
        if before is not None and c.root_time >= before:
            continue
        for e in c.events[1:]:
            parent = c.event_by_id(e.parent_event_id)
            idx.add(e.user, parent.user, c.root_time)
    return idx


def _local_hour(t: int, tz_offset: float) -> int:
    return int((t + round(tz_offset * 3600)) % 86400) // 3600


def featurize(
    inst: ChoiceInstance,
    g: FollowGraph,
    c: Cascade,
    history: HistoryIndex,
    tz_offset: float = 8.0,
) -> np.ndarray:
    """Compute the 16-feature vector for one choice instance."""
    if c.message_id != inst.message_id:
        raise IntegrityError(f"instance message {inst.message_id} != cascade {c.message_id}")
    for e in (inst.bob_event, inst.jim_event, inst.allen_event):
        try:
            if c.event_by_id(e.event_id) != e:
                raise IntegrityError(f"event {e.event_id} differs from cascade copy")
        except KeyError:
            raise IntegrityError(f"event {e.event_id} not in cascade {c.message_id}") from None
    bob, jim, allen = inst.bob_event.user, inst.jim_event.user, inst.allen
    if not (g.follows(allen, bob) and g.follows(allen, jim)):
        raise IntegrityError(f"user {allen} does not follow both exposure sources")

    t1, t2 = inst.bob_event.time, inst.jim_event.time
    x = np.zeros(16)
    x[0] = c.has_url
    x[1] = c.is_hot_event
    x[2] = popularity_bucket(c.popularity_at(t2))
    x[3] = g.follows(bob, jim)
    x[4] = g.follows(jim, bob)
    x[5] = g.follows(bob, allen)
    x[6] = g.follows(jim, allen)
    x[7] = g.in_degree(jim) > g.in_degree(bob)
    x[8] = g.in_degree(jim) > g.in_degree(allen)
    x[9] = g.in_degree(bob) > g.in_degree(allen)
    x[10] = inst.bob_event.is_root
    x[11] = (t2 - t1) / 3600.0
    x[12] = _mean_prior_gap_hours(c, t2)
    x[13] = 10 <= _local_hour(c.root_time, tz_offset) < 22
    x[14] = history.contains(allen, bob, before=c.root_time)
    x[15] = history.contains(allen, jim, before=c.root_time)
    return x


def _mean_prior_gap_hours(c: Cascade, t2: int) -> float:
    # Mean of consecutive gaps over events with time <= t2. Telescoping:
    # (last - first) / (count - 1). Fewer than 2 events -> 0.
    times = [e.time for e in c.events]
    k = bisect_right(times, t2)
    if k < 2:
        return 0.0
    return (times[k - 1] - times[0]) / (k - 1) / 3600.0


def featurize_instances(
    instances,
    g: FollowGraph,
    cascades,
    history: HistoryIndex | None = None,
    tz_offset: float = 8.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Featurize a batch of instances; returns (X, y) with X shape (n, 16)."""
    by_id = {c.message_id: c for c in cascades}
    if history is None:
        history = build_history_index(cascades)
    X = np.zeros((len(instances), 16))
    y = np.zeros(len(instances), dtype=np.int64)
    for i, inst in enumerate(instances):
        c = by_id.get(inst.message_id)
        if c is None:
            raise IntegrityError(f"instance references unknown message {inst.message_id}")
        X[i] = featurize(inst, g, c, history, tz_offset)
        y[i] = inst.label
    return X, y


def write_features_tsv(X: np.ndarray, y: np.ndarray, path) -> None:
    header = "label\t" + "\t".join(f"f{i}" for i in range(1, X.shape[1] + 1))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for label, row in zip(y, X):
            fh.write(str(int(label)) + "\t" + "\t".join(f"{v:.6f}" for v in row) + "\n")


def read_features_tsv(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if not header or header[0] != "label":
            raise ValueError(f"{path}: missing 'label' header")
        rows = []
        labels = []
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            labels.append(int(parts[0]))
            rows.append([float(v) for v in parts[1:]])
    X = np.array(rows) if rows else np.zeros((0, len(header) - 1))
    return X, np.array(labels, dtype=np.int64)
