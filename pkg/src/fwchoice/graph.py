"""Static directed follow graph loaded from an edge-list file.

Edge (a, b) means user a follows user b. The graph is immutable after
loading and only answers membership / adjacency / in-degree queries.
"""

from __future__ import annotations

import logging
from collections import defaultdict

log = logging.getLogger(__name__)


class EdgeListParseError(ValueError):
    """A line of the edge-list file could not be parsed."""


class FollowGraph:
    """Directed follow network with O(1) edge and in-degree lookups."""

    def __init__(self, edges=()):
        self._edges: set[tuple[int, int]] = set()
        self._out: dict[int, list[int]] = defaultdict(list)
        self._in: dict[int, list[int]] = defaultdict(list)
        self._users: set[int] = set()
        self.load_stats = {"self_loops_dropped": 0, "duplicates_dropped": 0}
        for a, b in edges:
            self._add_edge(a, b)

    def _add_edge(self, a: int, b: int) -> None:
        if a == b:
            self.load_stats["self_loops_dropped"] += 1
            return
        if (a, b) in self._edges:
            self.load_stats["duplicates_dropped"] += 1
            return
        self._edges.add((a, b))
        self._out[a].append(b)
        self._in[b].append(a)
        self._users.add(a)
        self._users.add(b)

    @property
    def edges(self) -> set[tuple[int, int]]:
        return self._edges

    @property
    def users(self) -> set[int]:
        return self._users

    @property
    def num_edges(self) -> int:
        return len(self._edges)

    @property
    def num_users(self) -> int:
        return len(self._users)

    def follows(self, a: int, b: int) -> bool:
        """True iff a follows b. Unknown users simply have no edges."""
        return (a, b) in self._edges

    def followees(self, a: int) -> list[int]:
        return self._out.get(a, [])

    def followers(self, b: int) -> list[int]:
        return self._in.get(b, [])

    def in_degree(self, u: int) -> int:
        return len(self._in.get(u, ()))

    def out_degree(self, u: int) -> int:
        return len(self._out.get(u, ()))

    def __eq__(self, other) -> bool:
        if not isinstance(other, FollowGraph):
            return NotImplemented
        return self._edges == other._edges

    def __repr__(self) -> str:
        return f"FollowGraph(users={self.num_users}, edges={self.num_edges})"


def load_edges(path) -> FollowGraph:
    """Load a follower<TAB>followee edge list.

    Lines starting with '#' and blank lines are ignored. Duplicate edges are
    stored once; self-loops are dropped. Both drops are counted in
    ``graph.load_stats``.

    Raises EdgeListParseError (with the 1-based line number) on malformed
    lines, OSError if the file cannot be read.
    """
    g = FollowGraph()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise EdgeListParseError(
                    f"{path}:{lineno}: expected 'follower<TAB>followee', got {line!r}"
                )
            try:
                a, b = int(parts[0]), int(parts[1])
            except ValueError:
                raise EdgeListParseError(
                    f"{path}:{lineno}: non-integer user id in {line!r}"
                ) from None
            if a < 0 or b < 0:
                raise EdgeListParseError(f"{path}:{lineno}: negative user id in {line!r}")
            g._add_edge(a, b)
    log.info(
        "loaded %s: %d users, %d edges (%d self-loops dropped, %d duplicates dropped)",
        path,
        g.num_users,
        g.num_edges,
        g.load_stats["self_loops_dropped"],
        g.load_stats["duplicates_dropped"],
    )
    return g


def dump_edges(g: FollowGraph, path) -> None:
    """Write the graph back out in the edge-list format load_edges reads."""
    with open(path, "w", encoding="utf-8") as fh:
        for a, b in sorted(g.edges):
            fh.write(f"{a}\t{b}\n")
