"""Command-line pipeline: extract, prune, stats, motifs, null, analyze, synth.

Every artifact carries a run manifest (subcommand, flags, seed, input
digests, version, start/end times). JSON outputs embed it under
``"manifest"`` next to the analytical content; TSV/CSV outputs get a
``<name>.manifest.json`` sidecar. Exit codes: 0 success, 1 input or usage
error, 2 when every statistic in a report came out degenerate.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .core import InvalidEventError, LogFormatError, read_event_log, write_event_log
from .ingest import (ParseStats, PruneConfig, XMLDumpError, detect_reverts, extract_event_log,
                     find_vandals, group_by_article, load_bot_list, parse_revisions,
                     prune_event_log)
from .motifs import DEFAULT_WINDOW_MINUTES, MODES, MotifClass, annotate_for_display, enumerate_motifs
from .netstats import degree_distributions, edit_count_distribution, summarize_network
from .nullmodel import DEFAULT_REALIZATIONS, KINDS, WITHIN_NODE_WINDOW, ShuffleStrategy, generate_ensemble
from .report import motif_report
from .synth import Plant, SynthParams, generate_log

log = logging.getLogger("revertscope")

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE = 0, 1, 2
THREADS_ENV = "REVERTSCOPE_THREADS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# --- manifest ----------------------------------------------------------------

def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return "sha256:" + h.hexdigest()


class _DigestReader(io.RawIOBase):
    def __init__(self, raw):
        self.raw = raw
        self.digest = hashlib.sha256()

    def readable(self) -> bool:
        return True

    def readinto(self, b) -> int:
        data = self.raw.read(len(b))
        n = len(data)
        b[:n] = data
        self.digest.update(data)
        return n


class RunManifest:
    def __init__(self, args: argparse.Namespace):
        self.subcommand = args.command
        self.flags = {k: v for k, v in sorted(vars(args).items())
                      if k not in ("command", "handler")}
        self.seed = getattr(args, "seed", None)
        self.inputs = {}
        for key in ("input", "bot_list", "revisions"):
            path = getattr(args, key, None)
            if path and path != "-" and os.path.isfile(path):
                self.inputs[key] = file_digest(path)
        self.started = _now()
        self.finished = None
        self._stdin = None

    def open_stdin(self, binary: bool = False):
        """stdin wrapped so its bytes are digested as they are consumed."""
        self._stdin = _DigestReader(sys.stdin.buffer)
        buf = io.BufferedReader(self._stdin)
        return buf if binary else io.TextIOWrapper(buf, encoding="utf-8", newline="")

    def as_dict(self) -> dict:
        inputs = dict(self.inputs)
        if self._stdin is not None:
            inputs["input"] = "sha256:" + self._stdin.digest.hexdigest()
        return {"subcommand": self.subcommand, "flags": _jsonable(self.flags),
                "seed": self.seed, "input_digests": inputs,
                "tool": "revertscope", "version": __version__,
                "started": self.started, "finished": self.finished or _now()}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _write_json(path: Path, content: dict, manifest: RunManifest) -> None:
    manifest.finished = _now()
    doc = dict(content)
    doc["manifest"] = manifest.as_dict()
    path.write_text(json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n")


def _sidecar(path: Path, manifest: RunManifest) -> None:
    manifest.finished = _now()
    Path(str(path) + ".manifest.json").write_text(json.dumps(manifest.as_dict(), indent=2) + "\n")


def _write_csv(path: Path, header, rows, manifest: RunManifest) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    _sidecar(path, manifest)


# --- shared helpers ----------------------------------------------------------

def _threads(args) -> int:
    if args.threads is not None:
        n = args.threads
    else:
        raw = os.environ.get(THREADS_ENV, "1")
        try:
            n = int(raw)
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    if n < 1:
        raise UsageError("--threads must be >= 1")
    return n


def _read_log(args, manifest):
    fmt = args.format
    if fmt == "mediawiki-xml":
        raise UsageError("event-log inputs are tsv or jsonl; use `extract` for dumps")
    if args.input == "-":
        return read_event_log(manifest.open_stdin(), fmt or "tsv")
    return read_event_log(args.input, fmt)


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _prune_config(args) -> PruneConfig:
    bots = load_bot_list(args.bot_list) if args.bot_list else frozenset()
    return PruneConfig(bot_list=bots, drop_anonymous=not args.keep_anonymous,
                       drop_vandals=not args.keep_vandals, drop_bots=not args.keep_bots)


def _fmt(x):
    return "" if x is None else (f"{x:.6g}" if isinstance(x, float) else x)


# --- subcommands -------------------------------------------------------------

def cmd_extract(args, manifest) -> int:
    stats = ParseStats()
    fmt = args.format or "tsv"
    source = manifest.open_stdin(binary=fmt == "mediawiki-xml") if args.input == "-" else args.input
    records = parse_revisions(source, fmt, stats)
    result = extract_event_log(records, _prune_config(args))
    out = _out_dir(args) / "events.tsv"
    write_event_log(result.log, out, "tsv")
    _sidecar(out, manifest)
    summary = {"revisions": result.n_revisions, "articles": result.n_articles,
               "reverts": result.n_reverts, "self_reverts": result.n_self_reverts,
               "events_kept": len(result.log), "skipped_revisions": stats.skipped,
               "pages": stats.pages}
    _write_json(_out_dir(args) / "extract.json", {"extract": summary}, manifest)
    log.info("extracted %d events from %d revisions", len(result.log), result.n_revisions)
    return EXIT_OK


def cmd_prune(args, manifest) -> int:
    events = _read_log(args, manifest)
    vandals = set()
    if args.revisions and not args.keep_vandals:
        groups = group_by_article(parse_revisions(args.revisions, args.revisions_format))
        revs = [r for group in groups.values() for r in group]
        reverts = [c for group in groups.values() for c in detect_reverts(group)]
        vandals = find_vandals(revs, reverts)
    pruned = prune_event_log(events, _prune_config(args), vandals)
    out = _out_dir(args) / "events.pruned.tsv"
    write_event_log(pruned, out, "tsv")
    _sidecar(out, manifest)
    log.info("kept %d of %d events", len(pruned), len(events))
    return EXIT_OK


def cmd_stats(args, manifest) -> int:
    events = _read_log(args, manifest)
    out = _out_dir(args)
    summary = summarize_network(events)
    _write_json(out / "network.json", {"network": summary.to_dict()}, manifest)
    out_h, in_h = degree_distributions(events, args.log_bins)
    for name, h in (("out_degree", out_h), ("in_degree", in_h),
                    ("edit_counts", edit_count_distribution(events, args.log_bins))):
        _write_csv(out / f"{name}.csv", ("bin_low", "bin_high", "count"), h.rows(), manifest)
    return EXIT_OK


def cmd_motifs(args, manifest) -> int:
    events = _read_log(args, manifest)
    inst = enumerate_motifs(events, args.window_min, args.mode)
    ed = events.editors
    out = _out_dir(args)
    rows = []
    for k, e1, e2, d, same, a, b, c in zip(inst.cls.tolist(), inst.first.tolist(),
                                          inst.second.tolist(), inst.delay_minutes.tolist(),
                                          inst.same_article.tolist(), inst.a.tolist(),
                                          inst.b.tolist(), inst.c.tolist()):
        rows.append((MotifClass(k).name, e1, e2, f"{d:.6f}", int(same), ed[a], ed[b],
                     ed[c] if c >= 0 else ""))
    _write_csv(out / "motifs.csv", ("class", "first", "second", "delay_minutes",
                                    "same_article", "A", "B", "C"), rows, manifest)
    tags = annotate_for_display(events, args.window_min, args.mode, instances=inst)
    ar = events.articles
    _write_csv(out / "annotated_edges.csv", ("event", "ts", "reverter", "reverted", "article", "motif"),
               [(i, int(events.ts[i]), ed[events.src[i]], ed[events.dst[i]], ar[events.art[i]],
                 t.name if t is not None else "") for i, t in enumerate(tags)], manifest)
    counts = dict(zip((k.name for k in MotifClass), inst.counts().tolist()))
    _write_json(out / "motif_counts.json", {"window_minutes": args.window_min, "mode": inst.mode,
                                            "counts": counts}, manifest)
    return EXIT_OK


def _strategy(args) -> ShuffleStrategy:
    return ShuffleStrategy(args.strategy, args.window_hours)


def cmd_null(args, manifest) -> int:
    events = _read_log(args, manifest)
    ens = generate_ensemble(events, _strategy(args), args.realizations, args.seed)
    out = _out_dir(args) / "null"
    out.mkdir(exist_ok=True)
    width = len(str(args.realizations - 1))

    def dump(r, realization):
        path = out / f"realization_{r:0{width}d}.tsv"
        write_event_log(realization, path, "tsv")
        _sidecar(path, manifest)
        return path

    ens.map(dump, threads=_threads(args))
    return EXIT_OK


S1_HEADER = ("class", "motif", "count_data", "count_null_mean", "count_null_sd", "count_z")
S2_HEADER = ("class", "motif", "mean_delay_data", "mean_delay_null", "mean_z", "skew_data",
             "skew_null", "skew_z", "ks_signed", "ks_p")
S3_HEADER = ("class", "motif", "dyad", "other", "other_se", "other_p", "motif_coef",
             "motif_se", "motif_p", "n", "reverter_clusters", "reverted_clusters",
             "variance_clipped", "degenerate")
S4_HEADER = ("class", "motif", "same_article_prop", "same_article_baseline", "same_article_z")


def cmd_analyze(args, manifest) -> int:
    events = _read_log(args, manifest)
    if len(events) == 0:
        raise ValueError("event log is empty")
    ens = generate_ensemble(events, _strategy(args), args.realizations, args.seed)
    rep = motif_report(events, ens, args.window_min, args.mode, threads=_threads(args),
                       same_article_samples=args.same_article_samples)
    out = _out_dir(args)
    _write_json(out / "report.json", {"report": rep.to_dict()}, manifest)
    s1, s2, s3, s4 = [], [], [], []
    for name, c in rep.classes.items():
        s1.append((name, c.motif, c.count_data, _fmt(c.count_null_mean),
                   _fmt(c.count_null_sd), _fmt(c.count_z)))
        s2.append((name, c.motif) + tuple(_fmt(v) for v in (
            c.mean_delay_data, c.mean_delay_null, c.mean_z, c.skew_data, c.skew_null,
            c.skew_z, c.ks_signed, c.ks_p)))
        for row in c.status:
            s3.append((name, c.motif, row.dyad) + tuple(_fmt(v) for v in (
                row.other, row.other_se, row.other_p, row.motif, row.motif_se, row.motif_p))
                + (row.n, row.n_reverter_clusters, row.n_reverted_clusters,
                   int(row.variance_clipped), row.degenerate or ""))
        s4.append((name, c.motif, _fmt(c.same_article_prop), _fmt(c.same_article_baseline),
                   _fmt(c.same_article_z)))
    _write_csv(out / "S1_counts.csv", S1_HEADER, s1, manifest)
    _write_csv(out / "S2_rates.csv", S2_HEADER, s2, manifest)
    _write_csv(out / "S3_status.csv", S3_HEADER, s3, manifest)
    _write_csv(out / "S4_same_article.csv", S4_HEADER, s4, manifest)
    if all(c.count_z is None and c.mean_z is None and c.skew_z is None
           for c in rep.classes.values()):
        print("every motif statistic is degenerate (zero null spread or no instances)",
              file=sys.stderr)
        return EXIT_DEGENERATE
    return EXIT_OK


def cmd_synth(args, manifest) -> int:
    plant = None
    if args.plant_class:
        plant = Plant(args.plant_class, args.plant_probability, args.plant_delay_mean,
                      args.window_min, args.plant_same_article)
    params = SynthParams(num_editors=args.num_editors, num_articles=args.num_articles,
                         duration_days=args.duration_days,
                         activity_exponent=args.activity_exponent,
                         mean_rate_per_day=args.mean_rate_per_day,
                         articles_per_editor=args.articles_per_editor, plant=plant)
    events = generate_log(params, args.seed)
    if args.output == "-":
        write_event_log(events, sys.stdout, "tsv")
        return EXIT_OK
    out = Path(args.output) if args.output else _out_dir(args) / "synth.tsv"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_event_log(events, out, "tsv")
    _sidecar(out, manifest)
    return EXIT_OK


# --- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="revertscope", description="Temporal motif analysis of revert networks.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    def common(sp, input_required=True, formats=("tsv", "jsonl")):
        sp.add_argument("--input", required=input_required, help="input path or '-' for stdin")
        sp.add_argument("--format", choices=formats, default=None)
        sp.add_argument("--out-dir", default=".")
        sp.add_argument("--threads", type=int, default=None,
                        help=f"worker threads (default ${THREADS_ENV} or 1)")

    def pruning(sp):
        sp.add_argument("--bot-list", default=None, help="file with one bot account per line")
        sp.add_argument("--keep-anonymous", action="store_true")
        sp.add_argument("--keep-vandals", action="store_true")
        sp.add_argument("--keep-bots", action="store_true")

    def motif_flags(sp):
        sp.add_argument("--window-min", type=float, default=float(DEFAULT_WINDOW_MINUTES))
        sp.add_argument("--mode", choices=MODES, default=MODES[0])

    def null_flags(sp):
        sp.add_argument("--strategy", choices=KINDS, default=WITHIN_NODE_WINDOW)
        sp.add_argument("--window-hours", type=float, default=24.0)
        sp.add_argument("--realizations", type=int, default=DEFAULT_REALIZATIONS)
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("extract", help="revision history -> pruned revert event log")
    common(sp, formats=("tsv", "jsonl", "mediawiki-xml"))
    pruning(sp)
    sp.set_defaults(handler=cmd_extract)

    sp = sub.add_parser("prune", help="re-apply pruning rules to an event log")
    common(sp)
    pruning(sp)
    sp.add_argument("--revisions", default=None, help="revision history for vandal detection")
    sp.add_argument("--revisions-format", choices=("tsv", "jsonl", "mediawiki-xml"), default="tsv")
    sp.set_defaults(handler=cmd_prune)

    sp = sub.add_parser("stats", help="network summary and degree distributions")
    common(sp)
    sp.add_argument("--log-bins", action="store_true")
    sp.set_defaults(handler=cmd_stats)

    sp = sub.add_parser("motifs", help="enumerate motif instances and annotate edges")
    common(sp)
    motif_flags(sp)
    sp.set_defaults(handler=cmd_motifs)

    sp = sub.add_parser("null", help="write shuffled null realizations")
    common(sp)
    null_flags(sp)
    sp.set_defaults(handler=cmd_null)

    sp = sub.add_parser("analyze", help="motif report against a null ensemble")
    common(sp)
    motif_flags(sp)
    null_flags(sp)
    sp.add_argument("--same-article-samples", type=int, default=1000)
    sp.set_defaults(handler=cmd_analyze)

    sp = sub.add_parser("synth", help="synthetic event log")
    sp.add_argument("--out-dir", default=".")
    sp.add_argument("--output", default=None, help="output path or '-' for stdout")
    sp.add_argument("--seed", type=int, default=0)
    d = SynthParams()
    sp.add_argument("--num-editors", type=int, default=d.num_editors)
    sp.add_argument("--num-articles", type=int, default=d.num_articles)
    sp.add_argument("--duration-days", type=float, default=d.duration_days)
    sp.add_argument("--activity-exponent", type=float, default=d.activity_exponent)
    sp.add_argument("--mean-rate-per-day", type=float, default=d.mean_rate_per_day)
    sp.add_argument("--articles-per-editor", type=int, default=d.articles_per_editor)
    sp.add_argument("--plant-class", choices=[k.name for k in MotifClass], default=None)
    sp.add_argument("--plant-probability", type=float, default=0.3)
    sp.add_argument("--plant-delay-mean", type=float, default=30.0, help="minutes")
    sp.add_argument("--plant-same-article", type=float, default=0.7)
    sp.add_argument("--window-min", type=float, default=float(DEFAULT_WINDOW_MINUTES))
    sp.set_defaults(handler=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_INPUT
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        manifest = RunManifest(args)
        return args.handler(args, manifest)
    except UsageError as exc:
        print(f"revertscope: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (LogFormatError, InvalidEventError, XMLDumpError, ValueError, OSError) as exc:
        print(f"revertscope: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
