import hashlib
import io
import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from revertscope.ingest import (ParseStats, PruneConfig, RevisionRecord, XMLDumpError,
                                annotate_edit_counts, detect_reverts, extract_event_log,
                                find_vandals, parse_revisions, prune, prune_event_log)
from revertscope.core import EventLog


def revs(digests, editors=None, article="P", registered=None):
    editors = editors or [f"e{i + 1}" for i in range(len(digests))]
    registered = registered or [True] * len(digests)
    return [RevisionRecord(article, i + 1, 100 * (i + 1), editors[i], registered[i], d)
            for i, d in enumerate(digests)]


def brute_force_reverts(records):
    """Scan all (j, k) pairs; the latest earlier match wins, and a match at
    k-1 is a null edit."""
    out = []
    for k in range(len(records)):
        matches = [j for j in range(k) if records[j].digest == records[k].digest]
        if matches and max(matches) < k - 1:
            j = max(matches)
            out.append((records[k].editor, records[j + 1].editor,
                        records[j].rev_ordinal, records[j + 1].rev_ordinal))
    return out


def as_tuples(cands):
    return [(c.reverter, c.reverted, c.restored_rev, c.reverted_rev) for c in cands]


def test_single_restore():
    out = detect_reverts(revs(["X", "Y", "X"]))
    assert as_tuples(out) == [("e3", "e2", 1, 2)]


def test_null_edit_is_not_a_revert():
    assert detect_reverts(revs(["X", "X"], editors=["e1", "e1"])) == []


def test_latest_match():
    out = as_tuples(detect_reverts(revs(list("XYZYX"))))
    assert out == [("e4", "e3", 2, 3), ("e5", "e2", 1, 2)]
    assert out == brute_force_reverts(revs(list("XYZYX")))


def test_self_revert_flag():
    out = detect_reverts(revs(["X", "Y", "X"], editors=["a", "b", "b"]))
    assert len(out) == 1 and out[0].self_revert


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from("ABCD"), min_size=1, max_size=14))
def test_matches_brute_force(digests):
    records = revs(digests)
    assert as_tuples(detect_reverts(records)) == brute_force_reverts(records)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from("ABC"), min_size=1, max_size=10), st.permutations("ABC"))
def test_digest_relabeling_invariance(digests, perm):
    relabel = dict(zip("ABC", perm))
    a = as_tuples(detect_reverts(revs(digests)))
    b = as_tuples(detect_reverts(revs([relabel[d] for d in digests])))
    assert a == b


def test_null_edit_injection_invariance():
    base = list("XYZYX")
    doubled = list(itertools.chain.from_iterable((d, d) for d in base))
    a = detect_reverts(revs(base, editors=list("abcde")))
    b = detect_reverts(revs(doubled, editors=[e for e in "abcde" for _ in range(2)]))
    assert [(c.reverter, c.reverted) for c in a] == [(c.reverter, c.reverted) for c in b]


def test_edit_counts_inclusive():
    records = revs(["X", "Y", "X"], editors=["a", "b", "c"])
    cand = annotate_edit_counts(records, detect_reverts(records))
    assert cand[0].reverter_edit_count == 1
    assert cand[0].reverted_edit_count == 1
    prior = [RevisionRecord("Q", i + 1, 10 + i, "c", True, f"q{i}") for i in range(3)]
    cand = annotate_edit_counts(prior + records, detect_reverts(records))
    assert cand[0].reverter_edit_count == 4


def test_edit_counts_brute_force():
    rng = np.random.default_rng(0)
    records = []
    for a in range(20):
        n = int(rng.integers(3, 30))
        ts = np.sort(rng.integers(0, 10_000, n))
        for i in range(n):
            records.append(RevisionRecord(f"p{a}", i + 1, int(ts[i]), f"u{rng.integers(50)}",
                                          True, f"d{rng.integers(4)}"))
    reverts = []
    for a in range(20):
        reverts.extend(detect_reverts([r for r in records if r.article == f"p{a}"]))
    out = annotate_edit_counts(records, reverts)
    assert out
    for c in out:
        act = (c.timestamp, c.reverting_rev)
        for who, got in ((c.reverter, c.reverter_edit_count), (c.reverted, c.reverted_edit_count)):
            n = sum(1 for r in records if r.editor == who and (r.timestamp, r.rev_ordinal) <= act)
            assert got == max(n, 1)


def test_edit_counts_missing_editor():
    records = revs(["X", "Y", "X"])
    with pytest.raises(ValueError, match="e2"):
        annotate_edit_counts(records[:1] + records[2:], detect_reverts(records))


def test_prune_self_revert_only_gives_empty_log():
    records = revs(["X", "Y", "X"], editors=["a", "b", "b"])
    cands = annotate_edit_counts(records, detect_reverts(records))
    assert len(prune(cands, records, PruneConfig())) == 0


def _history():
    # V makes two revisions, both reverted by others; V also reverts W elsewhere.
    p = revs(["A", "B", "A", "C", "A"], editors=["u", "V", "x", "V", "y"], article="P")
    q = revs(["M", "N", "M"], editors=["w", "W", "V"], article="Q")
    q = [RevisionRecord(r.article, r.rev_ordinal, r.timestamp + 1, r.editor, True, r.digest)
         for r in q]
    r = revs(["S", "T", "S"], editors=["z", "CleanupBOT", "t"], article="R")
    s = revs(["S", "T", "S"], editors=["g", "h", "anon:1.2.3.4"], article="S",
             registered=[True, True, False])
    return p + q + r + s


def test_vandal_rule_brute_force():
    records = _history()
    cands = []
    for art in "PQRS":
        cands.extend(detect_reverts([r for r in records if r.article == art]))
    hit = {(c.article, c.reverted_rev) for c in cands if not c.self_revert}
    expected = {e for e in {r.editor for r in records}
                if all((r.article, r.rev_ordinal) in hit for r in records if r.editor == e)}
    assert find_vandals(records, cands) == expected
    assert "V" not in expected  # V's revision in Q is not reverted


def test_vandal_reverts_are_removed():
    records = revs(["A", "B", "A", "C", "A"], editors=["u", "V", "x", "V", "y"])
    records += [RevisionRecord("Q", 1, 1000, "w", True, "m"),
                RevisionRecord("Q", 2, 1001, "W", True, "n"),
                RevisionRecord("Q", 3, 1002, "V", True, "m")]
    # V's Q revision reverts W but is itself never reverted, so add a revert of it
    records += [RevisionRecord("Q", 4, 1003, "k", True, "n")]
    res = extract_event_log(records, PruneConfig())
    names = {res.log.editors[i] for i in np.concatenate([res.log.src, res.log.dst])}
    assert "V" not in names


def test_bots_and_anonymous_removed():
    res = extract_event_log(_history(), PruneConfig())
    names = set(res.log.editors)
    assert "CleanupBOT" not in names
    assert not any(n.startswith("anon:") for n in names)
    keep = extract_event_log(_history(), PruneConfig(drop_anonymous=False, drop_bots=False,
                                                      drop_vandals=False))
    assert "CleanupBOT" in keep.log.editors
    assert "anon:1.2.3.4" in keep.log.editors


def test_bot_list_and_pattern():
    cfg = PruneConfig(bot_list={"Helper"})
    assert cfg.is_bot("Helper") and cfg.is_bot("MyBoT") and not cfg.is_bot("Robert")
    with pytest.raises(ValueError):
        PruneConfig(bot_name_patterns=())


def test_prune_event_log():
    log = EventLog.from_columns([1, 2, 3], ["a", "anon:x", "b"], ["b", "a", "SpamBot"],
                                ["p", "p", "p"], [1, 3, 5], [2, 4, 6], [1, 1, 1], [1, 1, 1])
    out = prune_event_log(log, PruneConfig())
    assert len(out) == 1 and out.editors == ("a", "b")


TSV = ("article\trev\tts\teditor\tregistered\tdigest\n"
       "P\t1\t100\ta\t1\tX\n"
       "P\t2\t200\tb\t1\tY\n"
       "P\t3\t300\tc\t1\tX\n")


def test_parse_tsv_and_jsonl():
    recs = list(parse_revisions(io.StringIO(TSV), "tsv"))
    assert [r.rev_ordinal for r in recs] == [1, 2, 3]
    jl = "\n".join('{"article":"P","rev":%d,"ts":%d,"editor":"%s","registered":true,"digest":"%s"}'
                   % (r.rev_ordinal, r.timestamp, r.editor, r.digest) for r in recs)
    assert list(parse_revisions(io.StringIO(jl), "jsonl")) == recs


def _xml(pages, with_sha1=True):
    parts = ['<mediawiki xmlns="http://www.mediawiki.org/xml/export-0.10/">']
    for title, revisions in pages:
        parts.append(f"<page><title>{title}</title><ns>0</ns><id>1</id>")
        for i, (user, text) in enumerate(revisions):
            contrib = (f"<contributor><ip>{user[5:]}</ip></contributor>" if user.startswith("anon:")
                       else f"<contributor><username>{user}</username><id>{i}</id></contributor>")
            sha = hashlib.sha1(text.encode()).hexdigest()
            sha_el = f"<sha1>{sha}</sha1>" if with_sha1 else ""
            parts.append(f"<revision><id>{i}</id><timestamp>2010-01-0{i + 1}T00:00:00Z</timestamp>"
                         f"{contrib}{sha_el}<text xml:space=\"preserve\">{text}</text></revision>")
        parts.append("</page>")
    parts.append("</mediawiki>")
    return "".join(parts).encode()


PAGES = [("Alpha", [("a", "one"), ("b", "two"), ("c", "one")]),
         ("Beta", [("anon:1.2.3.4", "x"), ("d", "y")])]


def test_xml_pages_and_records():
    stats = ParseStats()
    recs = list(parse_revisions(io.BytesIO(_xml(PAGES)), "mediawiki-xml", stats))
    assert [(r.article, r.rev_ordinal) for r in recs] == [("Alpha", 1), ("Alpha", 2), ("Alpha", 3),
                                                          ("Beta", 1), ("Beta", 2)]
    assert stats.pages == 2 and stats.records == 5
    assert recs[3].editor == "anon:1.2.3.4" and not recs[3].is_registered
    assert recs[0].timestamp == 1262304000


def test_xml_text_hash_equals_sha1_element():
    a = list(parse_revisions(io.BytesIO(_xml(PAGES, True)), "mediawiki-xml"))
    b = list(parse_revisions(io.BytesIO(_xml(PAGES, False)), "mediawiki-xml"))
    assert a == b
    # b's only revision is reverted, so b would count as a vandal
    cfg = PruneConfig(drop_vandals=False)
    ea = extract_event_log(a, cfg).log
    eb = extract_event_log(b, cfg).log
    assert ea == eb and len(ea) == 1


def test_xml_revision_without_text_or_sha1_is_skipped():
    doc = (b"<mediawiki><page><title>T</title><revision><timestamp>2010-01-01T00:00:00Z</timestamp>"
           b"<contributor><username>u</username></contributor></revision></page></mediawiki>")
    stats = ParseStats()
    assert list(parse_revisions(io.BytesIO(doc), "mediawiki-xml", stats)) == []
    assert stats.skipped == 1


def test_xml_malformed_reports_offset():
    doc = b"<mediawiki><page><title>T</title></pag></mediawiki>"
    with pytest.raises(XMLDumpError) as exc:
        list(parse_revisions(io.BytesIO(doc), "mediawiki-xml"))
    assert 0 < exc.value.offset <= len(doc)
