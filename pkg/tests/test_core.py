import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from revertscope.core import (EventLog, InvalidEventError, LogFormatError, RevertEvent,
                              anonymous_id, build_event_log, is_anonymous, read_event_log,
                              write_event_log)

from conftest import random_log


def ev(ts, a, b, art="x", r0=1, r1=2, ca=1, cb=1):
    return RevertEvent(ts, a, b, art, r0, r1, ca, cb)


def test_empty():
    log = build_event_log([])
    assert len(log) == 0
    assert list(log) == []


def test_tie_broken_by_article_token():
    log = build_event_log([ev(10, "a", "b", art="zeta"), ev(10, "a", "b", art="alpha")])
    assert [e.article for e in log] == ["alpha", "zeta"]


def test_order_matches_independent_sort():
    rng = np.random.default_rng(1)
    events = [ev(int(rng.integers(0, 50)), f"u{rng.integers(5)}", f"v{rng.integers(5)}",
                 f"art{rng.integers(7)}", 2 * i, 2 * i + 1, 1, 1) for i in range(1000)]
    rng.shuffle(events)
    log = build_event_log(events)
    expected = sorted(events, key=lambda e: (e.timestamp, e.article, e.reverted_rev, e.restored_rev))
    assert list(log) == expected


def test_idempotent():
    log = random_log(3)
    assert build_event_log(list(log)) == log


def test_invalid_event_reports_first_offender():
    good = ev(1, "a", "b")
    with pytest.raises(InvalidEventError) as exc:
        build_event_log([good, ev(2, "a", "a", r0=3, r1=4), ev(-1, "a", "b", r0=5, r1=6)])
    assert exc.value.index == 1
    with pytest.raises(InvalidEventError) as exc:
        build_event_log([good, ev(2, "a", "c", r0=4, r1=4)])
    assert exc.value.index == 1
    with pytest.raises(InvalidEventError):
        build_event_log([ev(2, "a", "c", ca=0)])


def test_exact_duplicates_collapse_and_conflicts_raise():
    e = ev(5, "a", "b")
    assert len(build_event_log([e, e])) == 1
    with pytest.raises(ValueError):
        build_event_log([e, ev(6, "a", "b")])


def test_vocabulary_is_compacted():
    log = random_log(4, n_events=50)
    sub = log.take(np.arange(len(log)) < 3)
    used = set(sub.src.tolist()) | set(sub.dst.tolist())
    assert used == set(range(sub.num_editors))


def test_anonymous_marker():
    assert anonymous_id("1.2.3.4") == "anon:1.2.3.4"
    assert anonymous_id("anon:1.2.3.4") == "anon:1.2.3.4"
    assert is_anonymous("anon:x") and not is_anonymous("Alice")


@pytest.mark.parametrize("fmt", ["tsv", "jsonl"])
def test_roundtrip_small(tmp_path, fmt):
    log = build_event_log([ev(1, "a", "b"), ev(2, "b", "a", r0=3, r1=4, ca=7),
                           ev(3, "c", "a", "y", 1, 5, 2, 9)])
    path = tmp_path / f"log.{fmt}"
    write_event_log(log, path, fmt)
    assert read_event_log(path, fmt) == log


@pytest.mark.parametrize("fmt", ["tsv", "jsonl"])
def test_roundtrip_10k(fmt):
    log = random_log(5, n_events=10_000, n_editors=300, n_articles=80)
    buf = io.StringIO()
    write_event_log(log, buf, fmt)
    buf.seek(0)
    back = read_event_log(buf, fmt)
    assert back == log
    for col in ("ts", "src", "dst", "art", "restored", "reverted_rev", "src_edits", "dst_edits"):
        assert np.array_equal(getattr(back, col), getattr(log, col))


def test_tsv_bad_timestamp_reports_line():
    text = ("ts\treverter\treverted\tarticle\trestored_rev\treverted_rev\treverter_edits\treverted_edits\n"
            "1\ta\tb\tx\t1\t2\t1\t1\n"
            "1.5\ta\tb\tx\t3\t4\t1\t1\n")
    with pytest.raises(LogFormatError) as exc:
        read_event_log(io.StringIO(text), "tsv")
    assert exc.value.line == 3
    assert exc.value.column == "ts"


def test_jsonl_missing_field():
    with pytest.raises(LogFormatError) as exc:
        read_event_log(io.StringIO('{"ts": 1}\n'), "jsonl")
    assert exc.value.line == 1


def test_unknown_format():
    with pytest.raises(ValueError):
        read_event_log(io.StringIO(""), "csv")


tokens = st.text(alphabet=st.characters(blacklist_categories=("Cs", "Cc", "Zl", "Zp"),
                                        blacklist_characters="\t\r\n"), min_size=1, max_size=6)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 10**6), tokens, tokens, tokens,
                          st.integers(0, 50), st.integers(1, 5), st.integers(1, 10**6),
                          st.integers(1, 10**6)), max_size=30),
       st.sampled_from(["tsv", "jsonl"]))
def test_roundtrip_property(rows, fmt):
    events, seen = [], set()
    for ts, a, b, art, r0, gap, ca, cb in rows:
        if a == b or (art, r0, r0 + gap) in seen:
            continue
        seen.add((art, r0, r0 + gap))
        events.append(RevertEvent(ts, a, b, art, r0, r0 + gap, ca, cb))
    log = build_event_log(events)
    keys = [(e.timestamp, e.article, e.reverted_rev, e.restored_rev) for e in log]
    assert keys == sorted(keys) and len(set(keys)) == len(keys)
    buf = io.StringIO()
    write_event_log(log, buf, fmt)
    buf.seek(0)
    assert read_event_log(buf, fmt) == log


class _Unseekable(io.StringIO):
    def seekable(self):
        return False


def test_columnar_and_rowwise_tsv_readers_agree():
    log = random_log(6, n_events=2000, n_editors=50)
    buf = io.StringIO()
    write_event_log(log, buf, "tsv")
    text = buf.getvalue()
    assert read_event_log(io.StringIO(text), "tsv") == log
    assert read_event_log(_Unseekable(text), "tsv") == log
    # an irregular file falls back to the row-wise reader and its line numbers
    bad = text.replace("\n", "\n+0x\t", 1)
    with pytest.raises(LogFormatError):
        read_event_log(io.StringIO(bad), "tsv")
