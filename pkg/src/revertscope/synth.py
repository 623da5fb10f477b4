"""Synthetic revert logs: a pure null and planted two-event interactions.

Null logs give every editor a homogeneous Poisson stream whose rate follows
a power law. Targets are drawn with probability proportional to their
in-strength so far plus one, which yields the fat-tailed in-degrees seen in
real revert networks.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numba
import numpy as np

from .core import EventLog
from .motifs import MotifClass

EPOCH_2010 = 1262304000
DAY = 86400


@dataclass(frozen=True)
class Plant:
    cls: MotifClass
    probability: float
    delay_mean_minutes: float = 30.0
    window_minutes: float = 1440.0
    same_article_probability: float = 0.7

    def __post_init__(self):
        object.__setattr__(self, "cls", MotifClass.parse(self.cls))
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError("plant probability must lie in [0, 1]")
        if not 0.0 <= self.same_article_probability <= 1.0:
            raise ValueError("same_article_probability must lie in [0, 1]")
        if not self.delay_mean_minutes > 0 or not self.window_minutes > 0:
            raise ValueError("delay mean and window must be positive")


@dataclass(frozen=True)
class SynthParams:
    num_editors: int = 500
    num_articles: int = 200
    duration_days: float = 30.0
    activity_exponent: float = 2.5
    mean_rate_per_day: float = 1.0
    articles_per_editor: int = 3
    start: int = EPOCH_2010
    plant: Plant | None = None

    def __post_init__(self):
        if self.num_editors < 1 or self.num_articles < 1:
            raise ValueError("num_editors and num_articles must be >= 1")
        if not self.duration_days > 0 or not self.mean_rate_per_day > 0:
            raise ValueError("duration_days and mean_rate_per_day must be positive")
        if not self.activity_exponent > 1:
            raise ValueError("activity_exponent must exceed 1")
        if self.articles_per_editor < 0:
            raise ValueError("articles_per_editor must be >= 0 (0 means uniform)")

    @property
    def expected_events(self) -> float:
        return self.num_editors * self.mean_rate_per_day * self.duration_days


@numba.njit(cache=True)
def _draw_targets(src, u, n_editors):  # pragma: no cover - compiled
    # Fenwick tree over weights (in-strength + 1); the source is excluded by
    # sampling from total - w[src] and stepping over its segment.
    tree = np.zeros(n_editors + 1, dtype=np.int64)
    weight = np.ones(n_editors, dtype=np.int64)
    for i in range(1, n_editors + 1):
        tree[i] += 1
        j = i + (i & -i)
        if j <= n_editors:
            tree[j] += tree[i]
    total = n_editors
    log2 = 1
    while log2 * 2 <= n_editors:
        log2 *= 2
    out = np.empty(src.shape[0], dtype=np.int64)
    for k in range(src.shape[0]):
        s = src[k]
        # prefix sum of weights before s
        before = 0
        i = s
        while i > 0:
            before += tree[i]
            i -= i & -i
        v = int(u[k] * (total - weight[s]))
        if v >= before:
            v += weight[s]
        pos = 0
        step = log2
        while step > 0:
            nxt = pos + step
            if nxt <= n_editors and tree[nxt] <= v:
                pos = nxt
                v -= tree[nxt]
            step //= 2
        t = pos  # zero-based editor index
        out[k] = t
        weight[t] += 1
        total += 1
        i = t + 1
        while i <= n_editors:
            tree[i] += 1
            i += i & -i
    return out


def _names(prefix: str, n: int) -> np.ndarray:
    width = len(str(max(n - 1, 0)))
    return np.array([f"{prefix}{i:0{width}d}" for i in range(n)], dtype=object)


def _assign_ordinals(art: np.ndarray, ts: np.ndarray, start: np.ndarray | None = None):
    """Fresh (restored, reverted) ordinal pairs per article in time order."""
    order = np.lexsort((np.arange(len(art)), ts, art))
    a_sorted = art[order]
    first = np.r_[True, a_sorted[1:] != a_sorted[:-1]] if len(art) else np.zeros(0, bool)
    idx = np.arange(len(art))
    run_start = np.maximum.accumulate(np.where(first, idx, 0)) if len(art) else idx
    rank = np.empty(len(art), dtype=np.int64)
    rank[order] = idx - run_start
    base = 0 if start is None else start[art]
    restored = base + 2 * rank + 1
    return restored, restored + 1


def _running_counts(src: np.ndarray, dst: np.ndarray, n_editors: int):
    """Edit counts as (events the editor took part in so far) + 1."""
    ed = np.concatenate([src, dst])
    n = len(src)
    ev = np.concatenate([np.arange(n), np.arange(n)])
    order = np.lexsort((ev, ed))
    ed_sorted = ed[order]
    first = np.r_[True, ed_sorted[1:] != ed_sorted[:-1]] if len(ed) else np.zeros(0, bool)
    idx = np.arange(len(ed))
    run_start = np.maximum.accumulate(np.where(first, idx, 0)) if len(ed) else idx
    rank = np.empty(len(ed), dtype=np.int64)
    rank[order] = idx - run_start
    return rank[:n] + 1, rank[n:] + 1


def _article_preferences(rng, n_ed: int, n_art: int, k: int) -> np.ndarray:
    """k distinct articles per editor, without an editors x articles matrix."""
    if 2 * k > n_art:
        return np.argsort(rng.random((n_ed, n_art)), axis=1)[:, :k]
    prefs = rng.integers(0, n_art, size=(n_ed, k))
    while True:
        s = np.sort(prefs, axis=1)
        dup = (s[:, 1:] == s[:, :-1]).any(axis=1)
        if not dup.any():
            return prefs
        prefs[dup] = rng.integers(0, n_art, size=(int(dup.sum()), k))


def generate_null_log(params: SynthParams, seed=0) -> EventLog:
    """Null revert log with no planted interaction."""
    if params.plant is not None:
        raise ValueError("generate_null_log expects params without a plant; "
                         "use generate_log")
    rng = np.random.default_rng(seed)
    n_ed = params.num_editors
    if n_ed < 2:
        return EventLog.empty()
    if params.expected_events < 10:
        raise ValueError(f"infeasible parameters: {params.expected_events:.1f} expected events (< 10)")
    raw = (1.0 - rng.random(n_ed)) ** (-1.0 / (params.activity_exponent - 1.0))
    rates = raw / raw.mean() * params.mean_rate_per_day
    counts = rng.poisson(rates * params.duration_days)
    n = int(counts.sum())
    horizon = int(params.duration_days * DAY)
    src = np.repeat(np.arange(n_ed), counts)
    ts = rng.integers(0, horizon, size=n)
    order = np.lexsort((src, ts))
    src, ts = src[order], ts[order]
    dst = _draw_targets(src.astype(np.int64), rng.random(n), n_ed)
    if params.articles_per_editor > 0:
        k = min(params.articles_per_editor, params.num_articles)
        prefs = _article_preferences(rng, n_ed, params.num_articles, k)
        art = prefs[src, rng.integers(0, k, size=n)]
    else:
        art = rng.integers(0, params.num_articles, size=n)
    restored, reverted = _assign_ordinals(art, ts)
    src_edits, dst_edits = _running_counts(src, dst, n_ed)
    editors = _names("editor", n_ed)
    articles = _names("article", params.num_articles)
    return EventLog.from_columns(ts + params.start, editors[src], editors[dst], articles[art],
                                 restored, reverted, src_edits, dst_edits)


_RESPONSE = {
    # (responder role, target role); "C" is a fresh third editor
    MotifClass.AB_AB: ("A", "B"),
    MotifClass.AB_BA: ("B", "A"),
    MotifClass.AB_BC: ("B", "C"),
    MotifClass.AB_CB: ("C", "B"),
    MotifClass.AB_AC: ("A", "C"),
    MotifClass.AB_CA: ("C", "A"),
}


def _truncated_exponential(rng, n, mean_s, max_s):
    u = rng.random(n)
    d = -mean_s * np.log1p(-u * (1.0 - np.exp(-max_s / mean_s)))
    return np.clip(np.ceil(d), 1, max_s).astype(np.int64)


def plant_interaction(log: EventLog, plant: Plant, seed=0) -> EventLog:
    """Insert a class-specific response after each event with probability p.

    Responses follow at an exponential delay truncated to the window and stay
    in the same article with probability ``plant.same_article_probability``.
    Original events are kept unchanged.
    """
    rng = np.random.default_rng(seed)
    n = len(log)
    n_ed = log.num_editors
    responder, target = _RESPONSE[plant.cls]
    if "C" in (responder, target) and n and n_ed < 3:
        raise ValueError(f"{plant.cls.name} needs a third editor but the log has {n_ed}")
    hit = np.flatnonzero(rng.random(n) < plant.probability)
    if len(hit) == 0:
        return log
    m = len(hit)
    a = log.src[hit].astype(np.int64)
    b = log.dst[hit].astype(np.int64)
    c = rng.integers(0, n_ed - 2, size=m) if n_ed >= 3 else np.zeros(m, np.int64)
    # map c onto editors other than a and b
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    c = c + (c >= lo)
    c = c + (c >= hi)
    roles = {"A": a, "B": b, "C": c}
    new_src, new_dst = roles[responder], roles[target]
    win_s = int(np.floor(plant.window_minutes * 60))
    new_ts = log.ts[hit] + _truncated_exponential(rng, m, plant.delay_mean_minutes * 60.0, win_s)
    n_art = len(log.articles)
    same = rng.random(m) < plant.same_article_probability
    other = rng.integers(0, max(n_art - 1, 1), size=m)
    other = other + (other >= log.art[hit])
    new_art = np.where(same | (n_art < 2), log.art[hit], other).astype(np.int64)
    max_rev = np.zeros(n_art, dtype=np.int64)
    np.maximum.at(max_rev, log.art, log.reverted_rev)
    restored, reverted = _assign_ordinals(new_art, new_ts, start=max_rev)
    # counts: the party's latest count at or before the new event, plus one
    ed = np.concatenate([log.src, log.dst]).astype(np.int64)
    cnt = np.concatenate([log.src_edits, log.dst_edits])
    t_inc = np.concatenate([log.ts, log.ts])
    span = int(max(log.ts.max(), new_ts.max())) + 1
    key = ed * span + t_inc
    order = np.argsort(key, kind="stable")
    key, ed_sorted, cnt_sorted = key[order], ed[order], cnt[order]

    def count_at(who, when):
        pos = np.searchsorted(key, who * span + when, side="right") - 1
        safe = np.maximum(pos, 0)
        valid = (pos >= 0) & (ed_sorted[safe] == who)
        return np.where(valid, cnt_sorted[safe] + 1, 1)

    src_edits = count_at(new_src, new_ts)
    dst_edits = count_at(new_dst, new_ts)
    editors = np.asarray(log.editors, dtype=object)
    articles = np.asarray(log.articles, dtype=object)
    return EventLog.from_columns(
        np.concatenate([log.ts, new_ts]),
        np.concatenate([editors[log.src], editors[new_src]]),
        np.concatenate([editors[log.dst], editors[new_dst]]),
        np.concatenate([articles[log.art], articles[new_art]]),
        np.concatenate([log.restored, restored]),
        np.concatenate([log.reverted_rev, reverted]),
        np.concatenate([log.src_edits, src_edits]),
        np.concatenate([log.dst_edits, dst_edits]))


def generate_log(params: SynthParams, seed=0) -> EventLog:
    """Null log plus the planted interaction described by ``params.plant``."""
    ss = np.random.SeedSequence(seed)
    null_seed, plant_seed = ss.spawn(2)
    base = generate_null_log(_without_plant(params), null_seed)
    if params.plant is None:
        return base
    return plant_interaction(base, params.plant, plant_seed)


def _without_plant(params: SynthParams) -> SynthParams:
    return replace(params, plant=None)


__all__ = ["Plant", "SynthParams", "generate_log", "generate_null_log", "plant_interaction"]
