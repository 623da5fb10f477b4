import numpy as np
import pytest

from revertscope.core import EventLog
from revertscope.motifs import classify_pair


def random_log(seed, n_events=500, n_editors=30, n_articles=10, span_s=5 * 86400,
               coarse=1) -> EventLog:
    """Uniform random log; ``coarse`` > 1 rounds times to create ties."""
    rng = np.random.default_rng(seed)
    src = rng.integers(0, n_editors, n_events)
    dst = rng.integers(0, n_editors - 1, n_events)
    dst = dst + (dst >= src)
    ts = 1_300_000_000 + rng.integers(0, span_s, n_events) // coarse * coarse
    art = rng.integers(0, n_articles, n_events)
    names = np.array([f"ed{i}" for i in range(n_editors)], dtype=object)
    arts = np.array([f"art{i}" for i in range(n_articles)], dtype=object)
    rev = np.arange(n_events) * 2 + 1
    return EventLog.from_columns(ts, names[src], names[dst], arts[art], rev, rev + 1,
                                 rng.integers(1, 500, n_events), rng.integers(1, 500, n_events))


def brute_force_motifs(log: EventLog, window_minutes: float, first_response: bool = False):
    """O(n^2) reference: list of (cls, e1, e2, delay_minutes, same_article)."""
    events = list(log)
    win = int(np.floor(window_minutes * 60))
    out = []
    for i, e1 in enumerate(events):
        best = {}
        for j, e2 in enumerate(events):
            dt = e2.timestamp - e1.timestamp
            if not 0 < dt <= win:
                continue
            cls = classify_pair(e1, e2)
            if cls is None:
                continue
            rec = (int(cls), i, j, dt / 60.0, e1.article == e2.article)
            if first_response:
                if int(cls) not in best or j < best[int(cls)][2]:
                    best[int(cls)] = rec
            else:
                out.append(rec)
        out.extend(best.values())
    return sorted(out, key=lambda r: (r[1], r[2]))


@pytest.fixture
def small_log():
    return random_log(0, n_events=300)
