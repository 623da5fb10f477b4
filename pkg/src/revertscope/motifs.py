"""Two-event temporal motifs among reverts.

For a first event ``A -> B`` a later event sharing an editor falls into
exactly one of six classes::

    AB_AB  A -> B       AB_BA  B -> A
    AB_BC  B -> C       AB_CB  C -> B
    AB_AC  A -> C       AB_CA  C -> A

Enumeration walks each editor's time-sorted incidence list, so the cost is
proportional to the number of pairs found rather than to ``n**2``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import EventLog, RevertEvent

ALL_PAIRS = "all-pairs"
FIRST_RESPONSE = "first-response"
MODES = (ALL_PAIRS, FIRST_RESPONSE)
DEFAULT_WINDOW_MINUTES = 1440

_CHUNK_PAIRS = 1 << 20


class MotifClass(enum.IntEnum):
    AB_AB = 0
    AB_BA = 1
    AB_BC = 2
    AB_CB = 3
    AB_AC = 4
    AB_CA = 5

    @property
    def label(self) -> str:
        return self.name.replace("_", "-")

    @classmethod
    def parse(cls, value) -> "MotifClass":
        if isinstance(value, cls):
            return value
        if isinstance(value, (int, np.integer)):
            return cls(int(value))
        return cls[str(value).upper().replace("-", "_")]


# display order when an event belongs to several motifs
DISPLAY_PRIORITY = (MotifClass.AB_AB, MotifClass.AB_BA, MotifClass.AB_AC,
                    MotifClass.AB_CA, MotifClass.AB_CB, MotifClass.AB_BC)


def classify_pair(e1: RevertEvent, e2: RevertEvent) -> MotifClass | None:
    a, b = e1.reverter, e1.reverted
    s, d = e2.reverter, e2.reverted
    if s == a:
        return MotifClass.AB_AB if d == b else MotifClass.AB_AC
    if s == b:
        return MotifClass.AB_BA if d == a else MotifClass.AB_BC
    if d == b:
        return MotifClass.AB_CB
    if d == a:
        return MotifClass.AB_CA
    return None


def normalize_mode(mode: str) -> str:
    m = str(mode).lower().replace("_", "-")
    if m not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    return m


def window_seconds(window_minutes: float) -> int:
    if not window_minutes > 0:
        raise ValueError("window_minutes must be positive")
    return int(np.floor(window_minutes * 60))


@dataclass(frozen=True)
class MotifInstances:
    """Column arrays describing motif instances found in one log.

    ``first``/``second`` index events of the log; ``a``, ``b``, ``c`` are
    editor codes bound to the roles (``c`` is -1 for two-editor classes).
    Rows are sorted by ``(first, second)``.
    """

    cls: np.ndarray
    first: np.ndarray
    second: np.ndarray
    delay_minutes: np.ndarray
    same_article: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    window_minutes: float = DEFAULT_WINDOW_MINUTES
    mode: str = ALL_PAIRS

    def __len__(self) -> int:
        return len(self.cls)

    def counts(self) -> np.ndarray:
        return np.bincount(self.cls, minlength=6)[:6]

    def select(self, cls) -> "MotifInstances":
        mask = self.cls == int(MotifClass.parse(cls))
        return MotifInstances(*(getattr(self, f)[mask] for f in
                                ("cls", "first", "second", "delay_minutes",
                                 "same_article", "a", "b", "c")),
                              window_minutes=self.window_minutes, mode=self.mode)

    def by_class(self) -> dict[MotifClass, "MotifInstances"]:
        return {k: self.select(k) for k in MotifClass}


def _incidence(log: EventLog):
    n = len(log)
    ev = np.concatenate([np.arange(n, dtype=np.int64)] * 2)
    ed = np.concatenate([log.src, log.dst]).astype(np.int64)
    role = np.concatenate([np.zeros(n, np.int8), np.ones(n, np.int8)])
    order = np.argsort(ed * max(n, 1) + ev, kind="stable")
    return ev[order], ed[order], role[order]


def _classify_arrays(a, b, s, d):
    cls = np.full(len(a), -1, dtype=np.int8)
    cls[(d == a) & (s != b)] = MotifClass.AB_CA
    cls[(d == b) & (s != a)] = MotifClass.AB_CB
    cls[s == b] = MotifClass.AB_BC
    cls[(s == b) & (d == a)] = MotifClass.AB_BA
    cls[s == a] = MotifClass.AB_AC
    cls[(s == a) & (d == b)] = MotifClass.AB_AB
    return cls


def _pair_chunks(log: EventLog, win_s: int):
    """Yield (e1, e2) index arrays for every ordered sharing pair in the window.

    Each pair is produced once: pairs involving the first event's reverter come
    from the reverter's incidence list; the remaining ones (touching only the
    reverted editor) from the reverted editor's list.
    """
    n = len(log)
    if n < 2:
        return
    ev, ed, role = _incidence(log)
    t = log.ts[ev] - log.ts.min()
    span = int(t.max()) + win_s + 2
    key = ed * span + t
    lo = np.searchsorted(key, key, side="right")
    hi = np.searchsorted(key, key + win_s, side="right")
    cnt = hi - lo
    cum = np.cumsum(cnt)
    start = 0
    total = int(cum[-1]) if len(cum) else 0
    if total == 0:
        return
    while start < len(cnt):
        base = int(cum[start - 1]) if start else 0
        stop = int(np.searchsorted(cum, base + _CHUNK_PAIRS, side="right"))
        stop = max(stop, start + 1)
        c = cnt[start:stop]
        m = int(c.sum())
        if m:
            offs = np.repeat(lo[start:stop] - (np.cumsum(c) - c), c)
            q = np.arange(m, dtype=np.int64) + offs
            e1 = np.repeat(ev[start:stop], c)
            e2 = ev[q]
            r = np.repeat(role[start:stop], c)
            a = log.src[e1]
            # reverted-side anchors skip pairs already seen from the reverter side
            keep = (r == 0) | ((log.src[e2] != a) & (log.dst[e2] != a))
            yield e1[keep], e2[keep]
        start = stop


def _first_response(cls, e1, e2):
    key = e1 * 6 + cls
    order = np.lexsort((e2, key))
    key_sorted = key[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = key_sorted[1:] != key_sorted[:-1]
    return order[first]


def enumerate_motifs(log: EventLog, window_minutes: float = DEFAULT_WINDOW_MINUTES,
                     mode: str = ALL_PAIRS) -> MotifInstances:
    """All motif instances with ``0 < t2 - t1 <= window``.

    ``first-response`` keeps, for every first event and class, only the
    earliest matching second event. Intermediate events never block a pair.
    """
    mode = normalize_mode(mode)
    parts = [(cls, e1, e2) for cls, e1, e2 in iter_pair_classes(log, window_minutes, mode)]
    if parts:
        cls, e1, e2 = (np.concatenate(x) for x in zip(*parts))
    else:
        cls = np.zeros(0, np.int8)
        e1 = e2 = np.zeros(0, np.int64)
    del parts
    order = np.lexsort((e2, e1))
    cls, e1, e2 = cls[order], e1[order], e2[order]
    del order
    a, b = log.src[e1], log.dst[e1]
    third_is_dst = (cls == MotifClass.AB_BC) | (cls == MotifClass.AB_AC)
    third_is_src = (cls == MotifClass.AB_CB) | (cls == MotifClass.AB_CA)
    c = np.where(third_is_dst, log.dst[e2], np.where(third_is_src, log.src[e2], -1))
    delay = (log.ts[e2] - log.ts[e1]) / 60.0
    same = log.art[e1] == log.art[e2]
    return MotifInstances(cls.astype(np.int8), e1.astype(np.int64), e2.astype(np.int64),
                          delay.astype(np.float64), same, a.astype(np.int32),
                          b.astype(np.int32), c.astype(np.int32),
                          window_minutes=window_minutes, mode=mode)


@dataclass(frozen=True)
class DelaySummary:
    """Per-class count, mean and skewness of response delays (minutes).

    ``mean``/``skew`` hold NaN where the statistic is undefined; callers
    translate that into an explicit degenerate flag.
    """

    count: np.ndarray
    mean: np.ndarray
    skew: np.ndarray


def summarize_delays(cls: np.ndarray, delay: np.ndarray) -> DelaySummary:
    cls = np.asarray(cls, dtype=np.int64)
    delay = np.asarray(delay, dtype=np.float64)
    count = np.bincount(cls, minlength=6)[:6].astype(np.int64)
    total = np.bincount(cls, weights=delay, minlength=6)[:6]
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(count > 0, total / np.maximum(count, 1), np.nan)
        dev = delay - mean[cls] if len(cls) else delay
        m2 = np.bincount(cls, weights=dev * dev, minlength=6)[:6] / np.maximum(count, 1)
        m3 = np.bincount(cls, weights=dev ** 3, minlength=6)[:6] / np.maximum(count, 1)
        # relative floor guards against round-off masquerading as spread
        ok = (count >= 3) & (m2 > 1e-24 * np.maximum(mean * mean, 1.0))
        skew = np.where(ok, m3 / np.where(ok, m2, 1.0) ** 1.5, np.nan)
    return DelaySummary(count, mean, skew)


class DelayAccumulator:
    """Streaming per-class count, mean and skewness from chunks of delays.

    Keeps power sums of ``delay - shift`` so memory does not grow with the
    number of pairs; ``shift`` (half the window) keeps the sums well scaled.
    """

    def __init__(self, shift: float = 0.0):
        self.shift = float(shift)
        self.count = np.zeros(6, dtype=np.int64)
        self.sums = np.zeros((3, 6))

    def add(self, cls: np.ndarray, delay: np.ndarray) -> None:
        cls = np.asarray(cls, dtype=np.int64)
        x = np.asarray(delay, dtype=np.float64) - self.shift
        self.count += np.bincount(cls, minlength=6)[:6]
        for p in range(3):
            self.sums[p] += np.bincount(cls, weights=x ** (p + 1), minlength=6)[:6]

    def summary(self) -> DelaySummary:
        n = self.count
        with np.errstate(invalid="ignore", divide="ignore"):
            r1, r2, r3 = (self.sums[p] / np.maximum(n, 1) for p in range(3))
            m2 = np.maximum(r2 - r1 * r1, 0.0)
            m3 = r3 - 3 * r1 * r2 + 2 * r1 ** 3
            mean = np.where(n > 0, r1 + self.shift, np.nan)
            ok = (n >= 3) & (m2 > 1e-12 * np.maximum(mean * mean, 1.0))
            skew = np.where(ok, m3 / np.where(ok, m2, 1.0) ** 1.5, np.nan)
        return DelaySummary(n.copy(), mean, skew)


def iter_pair_classes(log: EventLog, window_minutes: float = DEFAULT_WINDOW_MINUTES,
                      mode: str = ALL_PAIRS):
    """Yield ``(cls, e1, e2)`` chunks of motif pairs without building instances."""
    mode = normalize_mode(mode)
    for e1, e2 in _pair_chunks(log, window_seconds(window_minutes)):
        cls = _classify_arrays(log.src[e1], log.dst[e1], log.src[e2], log.dst[e2])
        if mode == FIRST_RESPONSE:
            sel = _first_response(cls, e1, e2)
            cls, e1, e2 = cls[sel], e1[sel], e2[sel]
        yield cls, e1, e2


def motif_delay_summary(log: EventLog, window_minutes: float = DEFAULT_WINDOW_MINUTES,
                        mode: str = ALL_PAIRS) -> DelaySummary:
    """Count/mean/skew per class, streamed over pair chunks.

    Used for null realizations, where only these statistics are needed.
    """
    acc = DelayAccumulator(shift=min(float(window_minutes), 1e9) / 2)
    for cls, e1, e2 in iter_pair_classes(log, window_minutes, mode):
        acc.add(cls, (log.ts[e2] - log.ts[e1]) / 60.0)
    return acc.summary()


def annotate_for_display(log: EventLog, window_minutes: float = DEFAULT_WINDOW_MINUTES,
                         mode: str = ALL_PAIRS,
                         instances: MotifInstances | None = None) -> list[MotifClass | None]:
    """One display tag per event: the highest-priority class it takes part in."""
    if instances is None:
        instances = enumerate_motifs(log, window_minutes, mode)
    rank_of = np.empty(6, dtype=np.int64)
    for r, k in enumerate(DISPLAY_PRIORITY):
        rank_of[int(k)] = r
    best = np.full(len(log), 6, dtype=np.int64)
    ranks = rank_of[instances.cls.astype(np.int64)]
    np.minimum.at(best, instances.first, ranks)
    np.minimum.at(best, instances.second, ranks)
    return [None if r == 6 else DISPLAY_PRIORITY[r] for r in best.tolist()]


def same_article_proportion(instances: MotifInstances) -> float:
    if len(instances) == 0:
        raise ValueError("same_article_proportion needs at least one instance")
    return float(np.mean(instances.same_article))


__all__ = [
    "ALL_PAIRS", "DEFAULT_WINDOW_MINUTES", "DISPLAY_PRIORITY", "DelayAccumulator", "DelaySummary",
    "FIRST_RESPONSE", "MODES", "MotifClass", "MotifInstances",
    "annotate_for_display", "classify_pair", "enumerate_motifs", "iter_pair_classes",
    "motif_delay_summary", "normalize_mode", "same_article_proportion",
    "summarize_delays",
]
