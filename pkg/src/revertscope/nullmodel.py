"""Seeded timestamp-shuffling null models.

Every strategy only permutes timestamps among events, so who reverts whom,
in which article, and the global multiset of times are preserved.

Seeds: realization ``r`` of an ensemble with root seed ``s`` draws from
``numpy.random.SeedSequence(s, spawn_key=(r,))``; results therefore do not
depend on the order or the thread in which realizations are produced.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator

import numba
import numpy as np

from .core import EventLog

WITHIN_NODE_WINDOW = "within-node-window"
GLOBAL = "global"
NODE_SWAP_EQUAL_COUNT = "node-swap-equal-count"
WITHIN_DYAD = "within-dyad"
WITHIN_IN_LINKS = "within-in-links"
WITHIN_OUT_LINKS = "within-out-links"
KINDS = (WITHIN_NODE_WINDOW, GLOBAL, NODE_SWAP_EQUAL_COUNT, WITHIN_DYAD,
         WITHIN_IN_LINKS, WITHIN_OUT_LINKS)

MIN_WINDOW_HOURS = 24.0
DEFAULT_REALIZATIONS = 20


@dataclass(frozen=True)
class ShuffleStrategy:
    kind: str = WITHIN_NODE_WINDOW
    window_hours: float = 24.0

    def __post_init__(self):
        kind = str(self.kind).lower().replace("_", "-")
        if kind not in KINDS:
            raise ValueError(f"unknown shuffle strategy {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "kind", kind)
        if kind == WITHIN_NODE_WINDOW and not self.window_hours >= MIN_WINDOW_HOURS:
            raise ValueError(f"window_hours must be >= {MIN_WINDOW_HOURS:g} for {kind}")

    @property
    def window_seconds(self) -> int:
        if np.isinf(self.window_hours):
            return np.iinfo(np.int64).max // 4
        return int(np.floor(self.window_hours * 3600))


def realization_seed(root_seed: int, r: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(root_seed), spawn_key=(int(r),))


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@numba.njit(cache=True, nogil=True)
def _swap_pass(cur, order, u, lo, hi, own, inc_ev):  # pragma: no cover - compiled
    for i in range(order.shape[0]):
        link = order[i]
        ncand = hi[link] - lo[link] - 1
        if ncand <= 0:
            continue
        r = lo[link] + int(u[i] * ncand)
        if r >= own[link]:
            r += 1
        other = inc_ev[r]
        tmp = cur[link]
        cur[link] = cur[other]
        cur[other] = tmp


class _WindowPlan:
    """Candidate ranges for the within-node window swap, from original times."""

    def __init__(self, log: EventLog, window_s: int):
        n = len(log)
        ev = np.concatenate([np.arange(n, dtype=np.int64)] * 2)
        ed = np.concatenate([log.src, log.dst]).astype(np.int64)
        order = np.argsort(ed * max(n, 1) + ev, kind="stable")
        ev, ed = ev[order], ed[order]
        t = log.ts[ev] - (log.ts.min() if n else 0)
        tmax = int(t.max()) if n else 0
        w = min(window_s, tmax + 1)
        span = tmax + 2 * w + 2
        key = ed * span + t + w
        src_pos = np.empty(n, dtype=np.int64)
        is_src = np.concatenate([np.ones(n, bool), np.zeros(n, bool)])[order]
        src_pos[ev[is_src]] = np.flatnonzero(is_src)
        own_key = key[src_pos]
        self.lo = np.searchsorted(key, own_key - w, side="left")
        self.hi = np.searchsorted(key, own_key + w, side="right")
        self.own = src_pos
        self.inc_ev = ev

    def run(self, ts: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        n = len(ts)
        order = rng.permutation(n)
        u = rng.random(n)
        cur = np.array(ts, dtype=np.int64, copy=True)
        _swap_pass(cur, order, u, self.lo, self.hi, self.own, self.inc_ev)
        return cur


def _permute_within(groups: np.ndarray, ts: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = len(ts)
    by_group = np.argsort(groups, kind="stable")
    shuffled = np.lexsort((rng.random(n), groups))
    out = np.empty(n, dtype=np.int64)
    out[by_group] = ts[shuffled]
    return out


def _node_swap(log: EventLog, rng: np.random.Generator) -> np.ndarray:
    n = len(log)
    cur = np.array(log.ts, dtype=np.int64, copy=True)
    ev = np.concatenate([np.arange(n, dtype=np.int64)] * 2)
    ed = np.concatenate([log.src, log.dst]).astype(np.int64)
    order = np.argsort(ed * max(n, 1) + ev, kind="stable")
    ev, ed = ev[order], ed[order]
    bounds = np.searchsorted(ed, np.arange(log.num_editors + 1))
    size = np.diff(bounds)
    uniq, inverse, group_sizes = np.unique(size, return_inverse=True, return_counts=True)
    eligible = np.flatnonzero(group_sizes[inverse] >= 2)
    if len(eligible) == 0:
        return cur
    members = {int(g): np.flatnonzero(inverse == g) for g in np.unique(inverse[eligible])}
    for _ in range(len(eligible)):
        x = int(eligible[rng.integers(len(eligible))])
        pool = members[int(inverse[x])]
        j = int(rng.integers(len(pool) - 1))
        if j >= int(np.searchsorted(pool, x)):
            j += 1
        y = int(pool[j])
        if x == y:
            continue
        ex = ev[bounds[x]:bounds[x + 1]]
        ey = ev[bounds[y]:bounds[y + 1]]
        if np.intersect1d(ex, ey).size:
            continue
        ex = ex[np.lexsort((ex, cur[ex]))]
        ey = ey[np.lexsort((ey, cur[ey]))]
        tx, ty = cur[ex].copy(), cur[ey].copy()
        cur[ex], cur[ey] = ty, tx
    return cur


def shuffled_timestamps(log: EventLog, strategy: ShuffleStrategy, seed,
                        plan: _WindowPlan | None = None) -> np.ndarray:
    """New timestamp per event (aligned with ``log`` order)."""
    rng = _rng(seed)
    ts = log.ts
    if len(log) < 2:
        return np.array(ts, dtype=np.int64)
    kind = strategy.kind
    if kind == WITHIN_NODE_WINDOW:
        plan = plan or _WindowPlan(log, strategy.window_seconds)
        return plan.run(ts, rng)
    if kind == GLOBAL:
        return rng.permutation(ts)
    if kind == NODE_SWAP_EQUAL_COUNT:
        return _node_swap(log, rng)
    if kind == WITHIN_DYAD:
        lo = np.minimum(log.src, log.dst).astype(np.int64)
        hi = np.maximum(log.src, log.dst).astype(np.int64)
        return _permute_within(lo * log.num_editors + hi, ts, rng)
    if kind == WITHIN_IN_LINKS:
        return _permute_within(log.dst.astype(np.int64), ts, rng)
    return _permute_within(log.src.astype(np.int64), ts, rng)


def shuffle(log: EventLog, strategy: ShuffleStrategy = ShuffleStrategy(), seed=0) -> EventLog:
    """One null realization of ``log``, re-sorted canonically."""
    return log.with_timestamps(shuffled_timestamps(log, strategy, seed))


class Ensemble:
    """R seeded realizations of a log, produced lazily.

    Realizations are regenerated on access rather than stored; iterate or
    index to obtain them, or call :meth:`map` to reduce each one in parallel.
    """

    def __init__(self, log: EventLog, strategy: ShuffleStrategy, n_realizations: int,
                 root_seed: int):
        if n_realizations < 2:
            raise ValueError("an ensemble needs at least 2 realizations")
        self.log = log
        self.strategy = strategy
        self.n_realizations = int(n_realizations)
        self.root_seed = int(root_seed)
        self._plan = None

    def _get_plan(self):
        if self.strategy.kind == WITHIN_NODE_WINDOW and self._plan is None and len(self.log) >= 2:
            self._plan = _WindowPlan(self.log, self.strategy.window_seconds)
        return self._plan

    def seed(self, r: int) -> np.random.SeedSequence:
        return realization_seed(self.root_seed, r)

    def timestamps(self, r: int) -> np.ndarray:
        if not 0 <= r < self.n_realizations:
            raise IndexError(r)
        return shuffled_timestamps(self.log, self.strategy, self.seed(r), self._get_plan())

    def __getitem__(self, r: int) -> EventLog:
        return self.log.with_timestamps(self.timestamps(r))

    def __len__(self) -> int:
        return self.n_realizations

    def __iter__(self) -> Iterator[EventLog]:
        for r in range(self.n_realizations):
            yield self[r]

    @property
    def realizations(self) -> list[EventLog]:
        return list(self)

    def map(self, func, threads: int = 1) -> list:
        """``[func(r, realization_r) for r in range(R)]``, optionally threaded."""
        self._get_plan()
        if threads <= 1:
            return [func(r, self[r]) for r in range(self.n_realizations)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(lambda k: func(k, self[k]), r)
                       for r in range(self.n_realizations)]
            return [f.result() for f in futures]


def generate_ensemble(log: EventLog, strategy: ShuffleStrategy = ShuffleStrategy(),
                      n_realizations: int = DEFAULT_REALIZATIONS, root_seed: int = 0) -> Ensemble:
    return Ensemble(log, strategy, n_realizations, root_seed)


__all__ = [
    "DEFAULT_REALIZATIONS", "Ensemble", "GLOBAL", "KINDS", "NODE_SWAP_EQUAL_COUNT",
    "ShuffleStrategy", "WITHIN_DYAD", "WITHIN_IN_LINKS", "WITHIN_NODE_WINDOW",
    "WITHIN_OUT_LINKS", "generate_ensemble", "realization_seed", "shuffle",
    "shuffled_timestamps",
]
