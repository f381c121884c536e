"""Seeded synthetic data: follow graphs, simulated cascades, direct samples.

The cascade simulator plants a known logistic choice rule: whenever a user
forwards after seeing a message twice, the forwarded source is drawn with
the probability the planted weights assign to the true 16 features of that
decision. Recovering the planted weights from the generated data is the
verification oracle used throughout the test suite.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from fwchoice.cascade import Cascade, ForwardEvent
from fwchoice.features import popularity_bucket
from fwchoice.graph import FollowGraph
from fwchoice.model import sigmoid


class ConfigError(ValueError):
    """Invalid synthetic-data configuration."""


@dataclass
class SynthConfig:
    seed: int = 0
    n_users: int = 1000
    graph_model: str = "uniform"  # "uniform" (directed G(n,p)) or "preferential"
    edge_prob: float = 0.01  # uniform model: P(a follows b) per ordered pair
    out_degree: int = 5  # preferential model: follow edges per arriving user
    n_cascades: int = 100
    forward_prob: float = 0.2  # chance to forward at the 1st and at the 2nd exposure
    delay_rate_per_hour: float = 2.0  # exponential forwarding delay rate
    beta0: float = 0.0
    beta: tuple = (0.0,) * 16  # planted choice weights over the 16 features
    p_url: float = 0.3
    p_hot: float = 0.2
    start_time: int = 1_300_000_000
    time_span: int = 60 * 86400  # root times drawn uniformly over this window
    max_events: int = 200  # per-cascade forward cap
    tz_offset_hours: float = 8.0

    def __post_init__(self):
        for name in ("edge_prob", "forward_prob", "p_url", "p_hot"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {v}")
        if self.graph_model not in ("uniform", "preferential"):
            raise ConfigError(f"unknown graph_model {self.graph_model!r}")
        if self.n_users < 1:
            raise ConfigError("n_users must be >= 1")
        if self.out_degree < 1:
            raise ConfigError("out_degree must be >= 1")
        if self.delay_rate_per_hour <= 0:
            raise ConfigError("delay_rate_per_hour must be > 0")
        if len(self.beta) != 16:
            raise ConfigError(f"beta must have 16 entries, got {len(self.beta)}")
        self.beta = tuple(float(b) for b in self.beta)


def generate_graph(cfg: SynthConfig) -> FollowGraph:
    """Seed-deterministic random follow graph per cfg.graph_model."""
    rng = np.random.default_rng([cfg.seed, 1])
    n = cfg.n_users
    g = FollowGraph()
    if cfg.graph_model == "uniform":
        if cfg.edge_prob > 0 and n > 1:
            for a in range(n):
                k = rng.binomial(n - 1, cfg.edge_prob)
                if k == 0:
                    continue
                targets = rng.choice(n - 1, size=k, replace=False)
                for t in targets:
                    b = int(t) + (int(t) >= a)  # skip the diagonal
                    g._add_edge(a, b)
    else:  # preferential attachment on in-degree
        indeg = np.zeros(n)
        for i in range(1, n):
            m = min(cfg.out_degree, i)
            weights = indeg[:i] + 1.0
            targets = rng.choice(i, size=m, replace=False, p=weights / weights.sum())
            for t in targets:
                g._add_edge(i, int(t))
                indeg[int(t)] += 1
    return g


@dataclass
class _PendingForward:
    user: int
    parent: ForwardEvent


def _delay_seconds(rng, cfg: SynthConfig) -> int:
    return 1 + int(rng.exponential(3600.0 / cfg.delay_rate_per_hour))


def _planted_features(cfg, g, c_events, has_url, is_hot, root_time, first, second, user, history):
    """The 16 features of a pending two-exposure decision, mirroring featurize."""
    t1, t2 = first.time, second.time
    bob, jim = first.user, second.user
    x = np.zeros(16)
    x[0] = has_url
    x[1] = is_hot
    x[2] = popularity_bucket(sum(1 for e in c_events[1:] if e.time < t2))
    x[3] = g.follows(bob, jim)
    x[4] = g.follows(jim, bob)
    x[5] = g.follows(bob, user)
    x[6] = g.follows(jim, user)
    x[7] = g.in_degree(jim) > g.in_degree(bob)
    x[8] = g.in_degree(jim) > g.in_degree(user)
    x[9] = g.in_degree(bob) > g.in_degree(user)
    x[10] = first.is_root
    x[11] = (t2 - t1) / 3600.0
    times = [e.time for e in c_events if e.time <= t2]
    x[12] = 0.0 if len(times) < 2 else (times[-1] - times[0]) / (len(times) - 1) / 3600.0
    hour = int((root_time + round(cfg.tz_offset_hours * 3600)) % 86400) // 3600
    x[13] = 10 <= hour < 22
    x[14] = (user, bob) in history
    x[15] = (user, jim) in history
    return x


def _simulate_one(g, cfg, rng, message_id, root_time, history) -> Cascade:
    n = cfg.n_users
    root_user = int(rng.integers(n))
    has_url = bool(rng.random() < cfg.p_url)
    is_hot = bool(rng.random() < cfg.p_hot)
    beta = np.asarray(cfg.beta)

    events: list[ForwardEvent] = []
    exposures: dict[int, list[ForwardEvent]] = {}
    committed: set[int] = {root_user}  # users with an event, emitted or scheduled
    scheduled = 0
    next_id = 1
    seq = 0
    # heap entries: (time, seq, payload); payload is either the root marker
    # or a _PendingForward to materialize at pop time.
    heap = [(root_time, seq, None)]

    while heap:
        time, _, pending = heapq.heappop(heap)
        if pending is None:
            event = ForwardEvent(message_id * 1_000_000 + next_id, root_user, time, None)
        else:
            event = ForwardEvent(
                message_id * 1_000_000 + next_id, pending.user, time, pending.parent.event_id
            )
        next_id += 1
        events.append(event)
        for follower in g.followers(event.user):
            seen = exposures.setdefault(follower, [])
            seen.append(event)
            if follower in committed or len(seen) > 2 or scheduled >= cfg.max_events:
                continue
            if rng.random() >= cfg.forward_prob:
                continue
            if len(seen) == 1:
                parent = event
            else:
                x = _planted_features(
                    cfg, g, events, has_url, is_hot, root_time, seen[0], seen[1],
                    follower, history,
                )
                p_second = float(sigmoid(cfg.beta0 + beta @ x))
                parent = seen[1] if rng.random() < p_second else seen[0]
            committed.add(follower)
            scheduled += 1
            seq += 1
            heapq.heappush(
                heap, (time + _delay_seconds(rng, cfg), seq, _PendingForward(follower, parent))
            )
    return Cascade(message_id, has_url, is_hot, events)


def simulate_cascades(g: FollowGraph, cfg: SynthConfig) -> list[Cascade]:
    """Simulate cfg.n_cascades forwarding traces over graph g.

    Cascades are generated in root-time order; the interaction history seen
    by a cascade's planted decisions covers exactly the earlier-rooted
    cascades. Each cascade uses an independent substream seeded by
    (cfg.seed, cascade index), so output is fully seed-deterministic.
    """
    if g.num_users == 0:
        raise ConfigError("graph has no users")
    master = np.random.default_rng([cfg.seed, 2])
    root_times = np.sort(master.integers(cfg.start_time, cfg.start_time + cfg.time_span,
                                         size=cfg.n_cascades))
    history: set[tuple[int, int]] = set()
    cascades = []
    for i in range(cfg.n_cascades):
        rng = np.random.default_rng([cfg.seed, 3, i])
        c = _simulate_one(g, cfg, rng, i + 1, int(root_times[i]), history)
        cascades.append(c)
        for e in c.events[1:]:
            history.add((e.user, c.event_by_id(e.parent_event_id).user))
    return cascades


def sample_instances(cfg: SynthConfig, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw n i.i.d. labeled feature vectors from the planted logistic rule.

    Marginals: binary features Bernoulli (content flags use p_url/p_hot,
    the rest 1/2), popularity bucket uniform on {0..4}, hour gaps
    exponential with mean 1. Labels are Bernoulli(sigmoid(beta0 + beta.x)).
    """
    if n < 1:
        raise ConfigError("n must be >= 1")
    rng = np.random.default_rng([cfg.seed, 4])
    X = np.zeros((n, 16))
    X[:, 0] = rng.random(n) < cfg.p_url
    X[:, 1] = rng.random(n) < cfg.p_hot
    X[:, 2] = rng.integers(0, 5, size=n)
    for col in (3, 4, 5, 6, 7, 8, 9, 10, 13, 14, 15):
        X[:, col] = rng.integers(0, 2, size=n)
    X[:, 11] = rng.exponential(1.0, size=n)
    X[:, 12] = rng.exponential(1.0, size=n)
    p = sigmoid(cfg.beta0 + X @ np.asarray(cfg.beta))
    y = (rng.random(n) < p).astype(np.int64)
    return X, y
