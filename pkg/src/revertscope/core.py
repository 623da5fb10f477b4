"""Event model for revert networks.

An :class:`EventLog` is stored column-wise (numpy arrays plus sorted
vocabularies for editor and article tokens) so that shuffling and motif
enumeration stay vectorized on logs with millions of events. Row access
through :class:`RevertEvent` is provided for convenience and for tests.
"""
from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

ANON_PREFIX = "anon:"

TSV_COLUMNS = (
    "ts",
    "reverter",
    "reverted",
    "article",
    "restored_rev",
    "reverted_rev",
    "reverter_edits",
    "reverted_edits",
)
FORMATS = ("tsv", "jsonl")


class InvalidEventError(ValueError):
    """An event violates the RevertEvent invariants."""

    def __init__(self, index: int, reason: str):
        self.index = index
        self.reason = reason
        super().__init__(f"event {index}: {reason}")


class LogFormatError(ValueError):
    """A serialized event log or revision file could not be parsed."""

    def __init__(self, line: int, column: str | int | None, reason: str):
        self.line = line
        self.column = column
        self.reason = reason
        where = f"line {line}" if column is None else f"line {line}, column {column}"
        super().__init__(f"{where}: {reason}")


def anonymous_id(address: str) -> str:
    """Normalize an unregistered contributor (usually an IP) to a reserved token."""
    if address.startswith(ANON_PREFIX):
        return address
    return ANON_PREFIX + address


def is_anonymous(editor: str) -> bool:
    return editor.startswith(ANON_PREFIX)


@dataclass(frozen=True)
class RevertEvent:
    timestamp: int
    reverter: str
    reverted: str
    article: str
    restored_rev: int
    reverted_rev: int
    reverter_edit_count: int
    reverted_edit_count: int

    def check(self) -> str | None:
        """Return a description of the first violated invariant, or None."""
        for name in ("timestamp", "restored_rev", "reverted_rev",
                     "reverter_edit_count", "reverted_edit_count"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                return f"{name} must be an integer, got {value!r}"
        for name in ("reverter", "reverted", "article"):
            value = getattr(self, name)
            if not isinstance(value, str) or not value:
                return f"{name} must be a non-empty string"
        if self.reverter == self.reverted:
            return "reverter equals reverted (self-revert)"
        if self.timestamp < 0:
            return "negative timestamp"
        if self.reverter_edit_count < 1 or self.reverted_edit_count < 1:
            return "edit counts must be >= 1"
        if self.restored_rev < 0:
            return "negative revision ordinal"
        if not self.restored_rev < self.reverted_rev:
            return "restored_rev must precede reverted_rev"
        return None


_INT_COLUMNS = ("ts", "restored", "reverted_rev", "src_edits", "dst_edits")


class EventLog:
    """Immutable, canonically ordered sequence of revert events.

    Events are ordered by ``(timestamp, article, reverted_rev, restored_rev)``.
    Editor and article tokens are held in sorted vocabularies and referenced
    by integer codes (``src``, ``dst``, ``art``), so code order equals token
    order.

    Build instances with :func:`build_event_log` or :meth:`from_columns`.
    """

    __slots__ = ("ts", "src", "dst", "art", "restored", "reverted_rev",
                 "src_edits", "dst_edits", "editors", "articles")

    def __init__(self, ts, src, dst, art, restored, reverted_rev, src_edits,
                 dst_edits, editors: Sequence[str], articles: Sequence[str]):
        # Trusted constructor: columns must already be canonical.
        self.ts = _frozen(ts, np.int64)
        self.src = _frozen(src, np.int32)
        self.dst = _frozen(dst, np.int32)
        self.art = _frozen(art, np.int32)
        self.restored = _frozen(restored, np.int64)
        self.reverted_rev = _frozen(reverted_rev, np.int64)
        self.src_edits = _frozen(src_edits, np.int64)
        self.dst_edits = _frozen(dst_edits, np.int64)
        self.editors = tuple(editors)
        self.articles = tuple(articles)

    @classmethod
    def empty(cls) -> "EventLog":
        z = np.zeros(0, dtype=np.int64)
        return cls(z, z, z, z, z, z, z, z, (), ())

    @classmethod
    def from_columns(cls, ts, reverter, reverted, article, restored_rev,
                     reverted_rev, reverter_edits, reverted_edits) -> "EventLog":
        """Validate, sort and deduplicate column data given as token arrays."""
        ts = np.asarray(ts, dtype=np.int64)
        n = len(ts)
        reverter = np.asarray(reverter, dtype=object)
        reverted = np.asarray(reverted, dtype=object)
        article = np.asarray(article, dtype=object)
        cols = [np.asarray(c, dtype=np.int64)
                for c in (restored_rev, reverted_rev, reverter_edits, reverted_edits)]
        if any(len(c) != n for c in (reverter, reverted, article, *cols)):
            raise ValueError("columns have different lengths")
        if n == 0:
            return cls.empty()
        editors, codes = np.unique(np.concatenate([reverter, reverted]), return_inverse=True)
        articles, art = np.unique(article, return_inverse=True)
        return cls._canonical(ts, codes[:n], codes[n:], art, *cols,
                              editors=[str(e) for e in editors],
                              articles=[str(a) for a in articles])

    @classmethod
    def _canonical(cls, ts, src, dst, art, restored, reverted_rev, src_edits,
                   dst_edits, editors, articles, check=True) -> "EventLog":
        if check:
            _check_columns(ts, src, dst, restored, reverted_rev, src_edits,
                           dst_edits, editors, articles)
        order = np.lexsort((restored, reverted_rev, art, ts))
        cols = [np.asarray(c)[order] for c in
                (ts, src, dst, art, restored, reverted_rev, src_edits, dst_edits)]
        cols = _dedupe(cols)
        log = cls(*cols, editors=editors, articles=articles)
        return log._compact()

    def _compact(self) -> "EventLog":
        """Drop vocabulary entries no event references (keeps codes dense)."""
        used_e = np.zeros(len(self.editors), dtype=bool)
        used_e[self.src] = True
        used_e[self.dst] = True
        used_a = np.zeros(len(self.articles), dtype=bool)
        used_a[self.art] = True
        if used_e.all() and used_a.all():
            return self
        emap = np.cumsum(used_e) - 1
        amap = np.cumsum(used_a) - 1
        return EventLog(self.ts, emap[self.src], emap[self.dst], amap[self.art],
                        self.restored, self.reverted_rev, self.src_edits,
                        self.dst_edits,
                        [e for e, u in zip(self.editors, used_e) if u],
                        [a for a, u in zip(self.articles, used_a) if u])

    def with_timestamps(self, new_ts) -> "EventLog":
        """Same events with replaced timestamps, re-sorted canonically."""
        new_ts = np.asarray(new_ts, dtype=np.int64)
        if new_ts.shape != self.ts.shape:
            raise ValueError("timestamp array has the wrong length")
        order = np.lexsort((self.restored, self.reverted_rev, self.art, new_ts))
        return EventLog(new_ts[order], self.src[order], self.dst[order],
                        self.art[order], self.restored[order],
                        self.reverted_rev[order], self.src_edits[order],
                        self.dst_edits[order], self.editors, self.articles)

    def take(self, mask_or_index) -> "EventLog":
        """Subset of events (order preserved); vocabularies are compacted."""
        idx = np.asarray(mask_or_index)
        log = EventLog(self.ts[idx], self.src[idx], self.dst[idx], self.art[idx],
                       self.restored[idx], self.reverted_rev[idx],
                       self.src_edits[idx], self.dst_edits[idx],
                       self.editors, self.articles)
        return log._compact()

    @property
    def num_editors(self) -> int:
        return len(self.editors)

    def __len__(self) -> int:
        return len(self.ts)

    def __getitem__(self, i: int) -> RevertEvent:
        return RevertEvent(
            int(self.ts[i]), self.editors[self.src[i]], self.editors[self.dst[i]],
            self.articles[self.art[i]], int(self.restored[i]),
            int(self.reverted_rev[i]), int(self.src_edits[i]), int(self.dst_edits[i]))

    def __iter__(self) -> Iterator[RevertEvent]:
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventLog):
            return NotImplemented
        if self.editors != other.editors or self.articles != other.articles:
            return False
        return all(np.array_equal(getattr(self, c), getattr(other, c))
                   for c in ("ts", "src", "dst", "art", *_INT_COLUMNS[1:]))

    __hash__ = None

    def __repr__(self) -> str:
        return (f"EventLog(n_events={len(self)}, n_editors={len(self.editors)}, "
                f"n_articles={len(self.articles)})")

    def structure_key(self) -> np.ndarray:
        """Per-event (reverter, reverted, article, restored, reverted_rev) rows,
        sorted, for structure comparisons independent of timing."""
        rows = np.stack([self.src, self.dst, self.art, self.restored,
                         self.reverted_rev], axis=1).astype(np.int64)
        return rows[np.lexsort(rows.T[::-1])]

    def to_frame(self):
        import pandas as pd
        ed = np.asarray(self.editors, dtype=object)
        ar = np.asarray(self.articles, dtype=object)
        return pd.DataFrame({
            "ts": self.ts, "reverter": ed[self.src] if len(self) else [],
            "reverted": ed[self.dst] if len(self) else [],
            "article": ar[self.art] if len(self) else [],
            "restored_rev": self.restored, "reverted_rev": self.reverted_rev,
            "reverter_edits": self.src_edits, "reverted_edits": self.dst_edits,
        })


def _frozen(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _check_columns(ts, src, dst, restored, reverted_rev, src_edits, dst_edits,
                   editors, articles):
    bad = (
        (src == dst, "reverter equals reverted (self-revert)"),
        (ts < 0, "negative timestamp"),
        ((src_edits < 1) | (dst_edits < 1), "edit counts must be >= 1"),
        (restored < 0, "negative revision ordinal"),
        (restored >= reverted_rev, "restored_rev must precede reverted_rev"),
    )
    first = None
    for mask, reason in bad:
        hits = np.flatnonzero(mask)
        if len(hits) and (first is None or hits[0] < first[0]):
            first = (int(hits[0]), reason)
    if first is not None:
        raise InvalidEventError(*first)
    for name, vocab in (("editor", editors), ("article", articles)):
        if any(not tok for tok in vocab):
            raise ValueError(f"empty {name} token")


def _dedupe(cols):
    """Drop exact duplicates; reject distinct events sharing an identity."""
    ts, src, dst, art, restored, reverted_rev, src_edits, dst_edits = cols
    n = len(ts)
    if n < 2:
        return cols
    ident = np.lexsort((restored, reverted_rev, art))
    same = ((art[ident][1:] == art[ident][:-1])
            & (reverted_rev[ident][1:] == reverted_rev[ident][:-1])
            & (restored[ident][1:] == restored[ident][:-1]))
    if not same.any():
        return cols
    drop = np.zeros(n, dtype=bool)
    for k in np.flatnonzero(same):
        a, b = ident[k], ident[k + 1]
        if all(c[a] == c[b] for c in cols):
            drop[max(a, b)] = True
        else:
            raise ValueError(
                f"conflicting events share article={int(art[a])}, "
                f"reverted_rev={int(reverted_rev[a])}, restored_rev={int(restored[a])}")
    keep = ~drop
    return [c[keep] for c in cols]


def build_event_log(events: Iterable[RevertEvent]) -> EventLog:
    """Validate a collection of events and return the canonical log.

    Raises :class:`InvalidEventError` naming the index of the first event
    that violates an invariant.
    """
    if isinstance(events, EventLog):
        return events
    events = list(events)
    for i, ev in enumerate(events):
        if not isinstance(ev, RevertEvent):
            raise InvalidEventError(i, f"expected RevertEvent, got {type(ev).__name__}")
        reason = ev.check()
        if reason:
            raise InvalidEventError(i, reason)
    if not events:
        return EventLog.empty()
    return EventLog.from_columns(
        [e.timestamp for e in events], [e.reverter for e in events],
        [e.reverted for e in events], [e.article for e in events],
        [e.restored_rev for e in events], [e.reverted_rev for e in events],
        [e.reverter_edit_count for e in events], [e.reverted_edit_count for e in events])


# --- serialization -----------------------------------------------------------

def _check_format(fmt: str) -> str:
    fmt = fmt.lower()
    if fmt not in FORMATS:
        raise ValueError(f"unknown event-log format {fmt!r}; expected one of {FORMATS}")
    return fmt


def infer_format(path) -> str:
    name = os.fspath(path).lower()
    return "jsonl" if name.endswith((".jsonl", ".json")) else "tsv"


def _parse_int(text, line: int, column: str) -> int:
    if isinstance(text, bool):
        raise LogFormatError(line, column, f"expected integer, got {text!r}")
    if isinstance(text, int):
        return text
    if isinstance(text, str):
        s = text.strip()
        if s and (s.isdigit() or (s[0] in "+-" and s[1:].isdigit())):
            return int(s)
    raise LogFormatError(line, column, f"expected integer, got {text!r}")


def _parse_token(value, line: int, column: str) -> str:
    if not isinstance(value, str) or not value:
        raise LogFormatError(line, column, "expected non-empty string")
    return value


def _rows_to_log(rows: list[tuple], first_line: int) -> EventLog:
    if not rows:
        return EventLog.empty()
    cols = list(zip(*rows))
    try:
        return EventLog.from_columns(*cols)
    except InvalidEventError as exc:
        raise LogFormatError(first_line + exc.index, None, exc.reason) from exc


def read_event_log(source, format: str | None = None) -> EventLog:
    """Read an event log from a path or a text stream (TSV or JSONL)."""
    if isinstance(source, (str, os.PathLike)):
        fmt = _check_format(format or infer_format(source))
        with open(source, encoding="utf-8", newline="") as fh:
            return read_event_log(fh, fmt)
    fmt = _check_format(format or "tsv")
    rows = []
    if fmt == "tsv":
        fast = _read_tsv_fast(source)
        if fast is not None:
            return fast
        reader = csv.reader(source, delimiter="\t", quoting=csv.QUOTE_NONE)
        header = next(reader, None)
        if header is None:
            return EventLog.empty()
        if tuple(header) != TSV_COLUMNS:
            raise LogFormatError(1, None, f"bad header {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(TSV_COLUMNS):
                raise LogFormatError(lineno, None,
                                     f"expected {len(TSV_COLUMNS)} fields, got {len(row)}")
            rows.append(_parse_row(dict(zip(TSV_COLUMNS, row)), lineno))
        return _rows_to_log(rows, 2)
    for lineno, text in enumerate(source, start=1):
        if not text.strip():
            continue
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise LogFormatError(lineno, exc.colno, exc.msg) from exc
        if not isinstance(obj, dict):
            raise LogFormatError(lineno, None, "expected a JSON object")
        missing = [c for c in TSV_COLUMNS if c not in obj]
        if missing:
            raise LogFormatError(lineno, missing[0], "missing field")
        rows.append(_parse_row(obj, lineno))
    return _rows_to_log(rows, 1)


_TSV_INT_COLUMNS = ("ts", "restored_rev", "reverted_rev", "reverter_edits", "reverted_edits")
_INT_PATTERN = r"\s*[+-]?\d+\s*"


def _read_tsv_fast(fh) -> "EventLog | None":
    """Columnar TSV parse for seekable, well-formed input.

    Returns None (with the stream rewound) whenever anything looks off, so
    the row-wise reader can report the offending line precisely.
    """
    try:
        if not fh.seekable():
            return None
        start = fh.tell()
    except (AttributeError, OSError):
        return None
    import pandas as pd

    def give_up():
        fh.seek(start)
        return None

    try:
        frame = pd.read_csv(fh, sep="\t", quoting=csv.QUOTE_NONE, dtype=str, na_filter=False,
                            engine="c")
    except Exception:
        return give_up()
    if tuple(frame.columns) != TSV_COLUMNS or len(frame) == 0 or frame.isna().any().any():
        return give_up()
    ints = {}
    for c in _TSV_INT_COLUMNS:
        col = frame[c]
        if not col.str.fullmatch(_INT_PATTERN).all():
            return give_up()
        try:
            ints[c] = col.to_numpy().astype(np.int64)
        except (ValueError, OverflowError):
            return give_up()
    names = {}
    for c in ("reverter", "reverted", "article"):
        col = frame[c]
        if (col == "").any():
            return give_up()
        names[c] = col.to_numpy(dtype=object)
    del frame
    try:
        return EventLog.from_columns(ints["ts"], names["reverter"], names["reverted"],
                                     names["article"], ints["restored_rev"], ints["reverted_rev"],
                                     ints["reverter_edits"], ints["reverted_edits"])
    except ValueError:
        return give_up()


def _parse_row(rec: dict, lineno: int) -> tuple:
    return (
        _parse_int(rec["ts"], lineno, "ts"),
        _parse_token(rec["reverter"], lineno, "reverter"),
        _parse_token(rec["reverted"], lineno, "reverted"),
        _parse_token(rec["article"], lineno, "article"),
        _parse_int(rec["restored_rev"], lineno, "restored_rev"),
        _parse_int(rec["reverted_rev"], lineno, "reverted_rev"),
        _parse_int(rec["reverter_edits"], lineno, "reverter_edits"),
        _parse_int(rec["reverted_edits"], lineno, "reverted_edits"),
    )


def _check_tsv_token(tok: str, what: str):
    if "\t" in tok or "\n" in tok or "\r" in tok:
        raise ValueError(f"{what} token {tok!r} cannot be written as TSV")


def write_event_log(log: EventLog, dest, format: str | None = None) -> None:
    """Write ``log`` to a path or text stream in TSV or JSONL."""
    if isinstance(dest, (str, os.PathLike)):
        fmt = _check_format(format or infer_format(dest))
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            write_event_log(log, fh, fmt)
        return
    fmt = _check_format(format or "tsv")
    ed, ar = log.editors, log.articles
    cols = (log.ts.tolist(), log.src.tolist(), log.dst.tolist(), log.art.tolist(),
            log.restored.tolist(), log.reverted_rev.tolist(),
            log.src_edits.tolist(), log.dst_edits.tolist())
    buf = io.StringIO()
    if fmt == "tsv":
        for tok in ed:
            _check_tsv_token(tok, "editor")
        for tok in ar:
            _check_tsv_token(tok, "article")
        buf.write("\t".join(TSV_COLUMNS) + "\n")
        for t, s, d, a, r0, r1, c0, c1 in zip(*cols):
            buf.write(f"{t}\t{ed[s]}\t{ed[d]}\t{ar[a]}\t{r0}\t{r1}\t{c0}\t{c1}\n")
            if buf.tell() > 1 << 20:
                dest.write(buf.getvalue())
                buf.seek(0)
                buf.truncate()
    else:
        for t, s, d, a, r0, r1, c0, c1 in zip(*cols):
            rec = dict(zip(TSV_COLUMNS, (t, ed[s], ed[d], ar[a], r0, r1, c0, c1)))
            buf.write(json.dumps(rec, ensure_ascii=False) + "\n")
            if buf.tell() > 1 << 20:
                dest.write(buf.getvalue())
                buf.seek(0)
                buf.truncate()
    dest.write(buf.getvalue())


__all__ = [
    "ANON_PREFIX", "EventLog", "InvalidEventError", "LogFormatError",
    "RevertEvent", "TSV_COLUMNS", "anonymous_id", "build_event_log",
    "infer_format", "is_anonymous", "read_event_log", "write_event_log",
]
