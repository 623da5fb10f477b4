"""Revision-history ingestion, identity-revert detection and pruning."""
from __future__ import annotations

import bisect
import csv
import hashlib
import io
import json
import logging
import os
from collections import defaultdict
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import IO, Iterable, Iterator
from xml.parsers import expat

import numpy as np

from .core import EventLog, LogFormatError, anonymous_id, is_anonymous

logger = logging.getLogger(__name__)

REVISION_COLUMNS = ("article", "rev", "ts", "editor", "registered", "digest")
REVISION_FORMATS = ("tsv", "jsonl", "mediawiki-xml")


class XMLDumpError(ValueError):
    def __init__(self, offset: int, reason: str):
        self.offset = offset
        super().__init__(f"malformed XML at byte {offset}: {reason}")


@dataclass(frozen=True)
class RevisionRecord:
    article: str
    rev_ordinal: int
    timestamp: int
    editor: str
    is_registered: bool
    digest: str


@dataclass(frozen=True)
class RevertCandidate:
    """A detected revert before pruning.

    Carries the reverting revision's ordinal and both parties' registration
    flags, which the event log itself does not store.
    """

    article: str
    timestamp: int
    reverter: str
    reverted: str
    restored_rev: int
    reverted_rev: int
    reverting_rev: int
    reverter_registered: bool = True
    reverted_registered: bool = True
    reverter_edit_count: int | None = None
    reverted_edit_count: int | None = None

    @property
    def self_revert(self) -> bool:
        return self.reverter == self.reverted


@dataclass(frozen=True)
class PruneConfig:
    bot_list: frozenset = frozenset()
    bot_name_patterns: tuple = ("bot",)
    drop_anonymous: bool = True
    drop_vandals: bool = True
    drop_bots: bool = True

    def __post_init__(self):
        object.__setattr__(self, "bot_list", frozenset(self.bot_list))
        object.__setattr__(self, "bot_name_patterns",
                           tuple(p.casefold() for p in self.bot_name_patterns))
        if self.drop_bots and not self.bot_name_patterns:
            raise ValueError("bot_name_patterns must be non-empty when bot pruning is on")
        if any(not p for p in self.bot_name_patterns):
            raise ValueError("empty bot name pattern")

    def is_bot(self, editor: str) -> bool:
        if editor in self.bot_list:
            return True
        name = editor.casefold()
        return any(p in name for p in self.bot_name_patterns)


@dataclass
class ParseStats:
    records: int = 0
    skipped: int = 0
    pages: int = 0


def load_bot_list(path) -> frozenset:
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip() for line in fh if line.strip())


# --- parsing -----------------------------------------------------------------

def parse_timestamp(value) -> int:
    """Epoch seconds from an integer, a float (truncated) or an ISO 8601 string."""
    if isinstance(value, bool):
        raise ValueError(f"bad timestamp {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        return int(value // 1)
    s = str(value).strip()
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return int(float(s) // 1)
    except ValueError:
        pass
    if s.endswith("Z"):
        s = s[:-1] + "+00:00"
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp() // 1)


def _parse_bool(value, line, column) -> bool:
    if isinstance(value, bool):
        return value
    s = str(value).strip().lower()
    if s in ("1", "true", "t", "yes", "y"):
        return True
    if s in ("0", "false", "f", "no", "n"):
        return False
    raise LogFormatError(line, column, f"expected boolean, got {value!r}")


def _record_from_mapping(rec: dict, line: int) -> RevisionRecord:
    for col in REVISION_COLUMNS:
        if col not in rec:
            raise LogFormatError(line, col, "missing field")
    article = str(rec["article"])
    editor = str(rec["editor"])
    digest = str(rec["digest"])
    if not article:
        raise LogFormatError(line, "article", "empty article")
    if not editor:
        raise LogFormatError(line, "editor", "empty editor")
    if not digest:
        raise LogFormatError(line, "digest", "empty digest")
    try:
        rev = int(rec["rev"])
    except (TypeError, ValueError):
        raise LogFormatError(line, "rev", f"expected integer, got {rec['rev']!r}") from None
    if rev < 1:
        raise LogFormatError(line, "rev", "revision ordinals start at 1")
    try:
        ts = parse_timestamp(rec["ts"])
    except (TypeError, ValueError):
        raise LogFormatError(line, "ts", f"bad timestamp {rec['ts']!r}") from None
    registered = _parse_bool(rec["registered"], line, "registered")
    if not registered:
        editor = anonymous_id(editor)
    return RevisionRecord(article, rev, ts, editor, registered, digest)


def _parse_tsv(fh: IO[str]) -> Iterator[RevisionRecord]:
    reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
    header = next(reader, None)
    if header is None:
        return
    if tuple(header) != REVISION_COLUMNS:
        raise LogFormatError(1, None, f"bad header {header!r}")
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(REVISION_COLUMNS):
            raise LogFormatError(lineno, None,
                                 f"expected {len(REVISION_COLUMNS)} fields, got {len(row)}")
        yield _record_from_mapping(dict(zip(REVISION_COLUMNS, row)), lineno)


def _parse_jsonl(fh: IO[str]) -> Iterator[RevisionRecord]:
    for lineno, text in enumerate(fh, start=1):
        if not text.strip():
            continue
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise LogFormatError(lineno, exc.colno, exc.msg) from exc
        if not isinstance(obj, dict):
            raise LogFormatError(lineno, None, "expected a JSON object")
        yield _record_from_mapping(obj, lineno)


class _DumpHandler:
    """Expat callbacks for pages-meta-history XML.

    Revision text is never held in memory: it is fed chunk by chunk into a
    SHA-1 hasher and only used when no ``<sha1>`` element is present.
    """

    def __init__(self, stats: ParseStats):
        self.stats = stats
        self.out: list[RevisionRecord] = []
        self.stack: list[str] = []
        self.buf: list[str] | None = None
        self.title = None
        self.ordinal = 0
        self._reset_revision()

    def _reset_revision(self):
        self.timestamp = None
        self.username = None
        self.ip = None
        self.contrib_deleted = False
        self.sha1 = None
        self.hasher = None

    def start(self, name, attrs):
        parent = self.stack[-1] if self.stack else None
        self.stack.append(name)
        if name == "page":
            self.title = None
            self.ordinal = 0
            self.stats.pages += 1
        elif name == "revision" and parent == "page":
            self._reset_revision()
        elif parent == "page" and name == "title":
            self.buf = []
        elif parent == "revision" and name in ("timestamp", "sha1"):
            self.buf = []
        elif parent == "revision" and name == "contributor":
            self.contrib_deleted = "deleted" in attrs
        elif parent == "contributor" and name in ("username", "ip"):
            self.buf = []
        elif parent == "revision" and name == "text":
            if "deleted" not in attrs:
                self.hasher = hashlib.sha1()

    def data(self, text):
        if self.buf is not None:
            self.buf.append(text)
        elif self.hasher is not None and self.stack and self.stack[-1] == "text":
            self.hasher.update(text.encode("utf-8"))

    def end(self, name):
        self.stack.pop()
        parent = self.stack[-1] if self.stack else None
        value = "".join(self.buf) if self.buf is not None else None
        self.buf = None
        if name == "title" and parent == "page":
            self.title = value
        elif parent == "revision" and name == "timestamp":
            self.timestamp = value
        elif parent == "revision" and name == "sha1":
            self.sha1 = value.strip() or None
        elif parent == "contributor" and name == "username":
            self.username = value
        elif parent == "contributor" and name == "ip":
            self.ip = value
        elif name == "revision" and parent == "page":
            self._emit()

    def _emit(self):
        self.ordinal += 1
        if self.sha1:
            digest = self.sha1
        elif self.hasher is not None:
            digest = self.hasher.hexdigest()
        else:
            self.stats.skipped += 1
            logger.warning("skipping revision %d of %r: no sha1 and no text",
                           self.ordinal, self.title)
            return
        if self.username:
            editor, registered = self.username, True
        else:
            editor = anonymous_id(self.ip or "<deleted>")
            registered = False
        if self.title is None or self.timestamp is None:
            self.stats.skipped += 1
            logger.warning("skipping revision without page title or timestamp")
            return
        self.out.append(RevisionRecord(self.title, self.ordinal,
                                       parse_timestamp(self.timestamp), editor,
                                       registered, digest))
        self.stats.records += 1


def _parse_xml(fh: IO[bytes], stats: ParseStats, chunk_size: int) -> Iterator[RevisionRecord]:
    handler = _DumpHandler(stats)
    parser = expat.ParserCreate()
    parser.buffer_text = True
    parser.StartElementHandler = handler.start
    parser.EndElementHandler = handler.end
    parser.CharacterDataHandler = handler.data
    while True:
        chunk = fh.read(chunk_size)
        final = not chunk
        if isinstance(chunk, str):
            chunk = chunk.encode("utf-8")
        try:
            parser.Parse(chunk, final)
        except expat.ExpatError as exc:
            raise XMLDumpError(parser.ErrorByteIndex, expat.errors.messages[exc.code]) from exc
        if handler.out:
            yield from handler.out
            handler.out = []
        if final:
            return


def parse_revisions(source, format: str = "tsv", stats: ParseStats | None = None,
                    chunk_size: int = 1 << 16) -> Iterator[RevisionRecord]:
    """Stream :class:`RevisionRecord` objects from a path or open file.

    ``format`` is one of ``tsv``, ``jsonl`` or ``mediawiki-xml``. XML input is
    parsed incrementally; peak memory is bounded by the parser chunk plus one
    revision's metadata. Revisions lacking both ``<sha1>`` and ``<text>`` are
    skipped and counted in ``stats.skipped``.
    """
    fmt = format.lower().replace("_", "-")
    if fmt in ("xml", "mediawiki"):
        fmt = "mediawiki-xml"
    if fmt not in REVISION_FORMATS:
        raise ValueError(f"unknown revision format {format!r}; expected one of {REVISION_FORMATS}")
    stats = stats if stats is not None else ParseStats()
    if isinstance(source, (str, os.PathLike)):
        mode = "rb" if fmt == "mediawiki-xml" else "r"
        kwargs = {} if mode == "rb" else {"encoding": "utf-8", "newline": ""}
        with open(source, mode, **kwargs) as fh:
            yield from parse_revisions(fh, fmt, stats, chunk_size)
        return
    if fmt == "mediawiki-xml":
        yield from _parse_xml(source, stats, chunk_size)
        return
    if isinstance(source, (io.BufferedIOBase, io.RawIOBase)):
        source = io.TextIOWrapper(source, encoding="utf-8", newline="")
    for rec in (_parse_tsv(source) if fmt == "tsv" else _parse_jsonl(source)):
        stats.records += 1
        yield rec


# --- revert detection --------------------------------------------------------

def _check_article(revisions: list[RevisionRecord]) -> None:
    for prev, cur in zip(revisions, revisions[1:]):
        if cur.article != prev.article:
            raise ValueError("detect_reverts expects revisions of a single article")
        if cur.rev_ordinal <= prev.rev_ordinal:
            raise ValueError(f"article {cur.article!r}: revision ordinals not increasing "
                             f"({prev.rev_ordinal} then {cur.rev_ordinal})")
        if cur.timestamp < prev.timestamp:
            raise ValueError(f"article {cur.article!r}: timestamp decreases at "
                             f"revision {cur.rev_ordinal}")


def detect_reverts(revisions: Iterable[RevisionRecord]) -> list[RevertCandidate]:
    """Identity reverts within one article's revision sequence.

    A revision whose digest repeats an earlier, non-adjacent revision restores
    that version; the latest such earlier revision is taken as the restored
    one and the editor of the revision right after it as the reverted party.
    A digest equal to the immediately preceding one is a null edit.
    """
    revs = list(revisions)
    _check_article(revs)
    last_seen: dict[str, int] = {}
    out = []
    for k, rev in enumerate(revs):
        j = last_seen.get(rev.digest)
        if j is not None and j < k - 1:
            victim = revs[j + 1]
            out.append(RevertCandidate(
                article=rev.article, timestamp=rev.timestamp,
                reverter=rev.editor, reverted=victim.editor,
                restored_rev=revs[j].rev_ordinal, reverted_rev=victim.rev_ordinal,
                reverting_rev=rev.rev_ordinal,
                reverter_registered=rev.is_registered,
                reverted_registered=victim.is_registered))
        last_seen[rev.digest] = k
    return out


def group_by_article(records: Iterable[RevisionRecord]) -> dict[str, list[RevisionRecord]]:
    groups: dict[str, list[RevisionRecord]] = defaultdict(list)
    for rec in records:
        groups[rec.article].append(rec)
    for revs in groups.values():
        revs.sort(key=lambda r: r.rev_ordinal)
    return groups


def annotate_edit_counts(revisions: Iterable[RevisionRecord],
                         reverts: Iterable[RevertCandidate]) -> list[RevertCandidate]:
    """Attach each party's running edit count at the time of the revert.

    A count is the number of the editor's revisions ordered at or before the
    reverting revision by ``(timestamp, rev_ordinal)``, so it includes the
    revert itself for the reverter.
    """
    history: dict[str, list[tuple[int, int]]] = defaultdict(list)
    for rev in revisions:
        history[rev.editor].append((rev.timestamp, rev.rev_ordinal))
    for seq in history.values():
        seq.sort()
    out = []
    for rv in reverts:
        action = (rv.timestamp, rv.reverting_rev)
        counts = []
        for who in (rv.reverter, rv.reverted):
            seq = history.get(who)
            if seq is None:
                raise ValueError(f"editor {who!r} appears in a revert but not in the revision stream")
            counts.append(bisect.bisect_right(seq, action))
        out.append(replace(rv, reverter_edit_count=max(counts[0], 1),
                           reverted_edit_count=max(counts[1], 1)))
    return out


def find_vandals(revisions: Iterable[RevisionRecord],
                 reverts: Iterable[RevertCandidate]) -> set[str]:
    """Editors every one of whose revisions was reverted by someone else."""
    hit = {(r.article, r.reverted_rev) for r in reverts if not r.self_revert}
    total: dict[str, int] = defaultdict(int)
    reverted: dict[str, int] = defaultdict(int)
    for rev in revisions:
        total[rev.editor] += 1
        if (rev.article, rev.rev_ordinal) in hit:
            reverted[rev.editor] += 1
    return {e for e, n in total.items() if reverted[e] == n}


def prune(events: Iterable[RevertCandidate], revisions: Iterable[RevisionRecord] | None,
          config: PruneConfig = PruneConfig()) -> EventLog:
    """Apply self-revert, anonymous, vandal and bot removal; return the log.

    Vandal detection needs ``revisions``; pass None to skip it.
    """
    events = list(events)
    vandals: set[str] = set()
    if config.drop_vandals and revisions is not None:
        vandals = find_vandals(revisions, events)
    kept = [e for e in events if not e.self_revert]
    if config.drop_anonymous:
        kept = [e for e in kept
                if e.reverter_registered and e.reverted_registered
                and not is_anonymous(e.reverter) and not is_anonymous(e.reverted)]
    if vandals:
        kept = [e for e in kept if e.reverter not in vandals and e.reverted not in vandals]
    if config.drop_bots:
        kept = [e for e in kept if not config.is_bot(e.reverter) and not config.is_bot(e.reverted)]
    for e in kept:
        if e.reverter_edit_count is None or e.reverted_edit_count is None:
            raise ValueError("prune expects reverts annotated with edit counts")
    if not kept:
        return EventLog.empty()
    return EventLog.from_columns(
        [e.timestamp for e in kept], [e.reverter for e in kept],
        [e.reverted for e in kept], [e.article for e in kept],
        [e.restored_rev for e in kept], [e.reverted_rev for e in kept],
        [e.reverter_edit_count for e in kept], [e.reverted_edit_count for e in kept])


def prune_event_log(log: EventLog, config: PruneConfig = PruneConfig(),
                    vandals: Iterable[str] = ()) -> EventLog:
    """Re-apply pruning to an existing event log.

    Event logs carry no registration flag, so anonymity is read from the
    ``anon:`` prefix. Vandals must be supplied (they need the revision history).
    """
    if len(log) == 0:
        return log
    names = np.asarray(log.editors, dtype=object)
    drop = np.zeros(len(names), dtype=bool)
    if config.drop_anonymous:
        drop |= np.array([is_anonymous(e) for e in names], dtype=bool)
    if config.drop_vandals:
        drop |= np.isin(names, np.array(sorted(set(vandals)), dtype=object))
    if config.drop_bots:
        drop |= np.array([config.is_bot(e) for e in names], dtype=bool)
    keep = ~drop[log.src] & ~drop[log.dst] & (log.src != log.dst)
    return log.take(keep)


@dataclass
class ExtractResult:
    log: EventLog
    n_revisions: int = 0
    n_articles: int = 0
    n_reverts: int = 0
    n_self_reverts: int = 0
    parse: ParseStats = field(default_factory=ParseStats)


def extract_event_log(records: Iterable[RevisionRecord],
                      config: PruneConfig = PruneConfig()) -> ExtractResult:
    """Full revisions-to-log pipeline: detect, count edits, prune."""
    groups = group_by_article(records)
    slim = [r for revs in groups.values() for r in revs]
    reverts = []
    for article in sorted(groups):
        reverts.extend(detect_reverts(groups[article]))
    annotated = annotate_edit_counts(slim, reverts)
    log = prune(annotated, slim, config)
    return ExtractResult(log=log, n_revisions=len(slim), n_articles=len(groups),
                         n_reverts=len(reverts),
                         n_self_reverts=sum(r.self_revert for r in reverts))
