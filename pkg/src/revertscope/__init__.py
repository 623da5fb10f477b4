"""Revert detection, temporal motif counting and null-model testing for
collaborative revision histories."""
from importlib.metadata import PackageNotFoundError, version as _version

try:
    __version__ = _version("artifact")
except PackageNotFoundError:  # pragma: no cover - running from a source tree
    __version__ = "0.0.0"

from .core import (EventLog, InvalidEventError, LogFormatError, RevertEvent, build_event_log,
                   read_event_log, write_event_log)
from .estimator import MotifSignificanceTest, NullModelShuffler, RevertExtractor, check_event_log
from .ingest import (PruneConfig, RevisionRecord, XMLDumpError, detect_reverts,
                     extract_event_log, parse_revisions, prune)
from .motifs import (ALL_PAIRS, FIRST_RESPONSE, MotifClass, MotifInstances, annotate_for_display,
                     classify_pair, enumerate_motifs, motif_delay_summary)
from .netstats import NetworkSummary, degree_distributions, edit_count_distribution, summarize_network
from .nullmodel import Ensemble, ShuffleStrategy, generate_ensemble, shuffle
from .report import MotifReport, motif_report, same_article_baseline, status_regression
from .stats import ols_two_way_clustered, sample_skewness, signed_ks, status_difference, z_score
from .synth import Plant, SynthParams, generate_log, generate_null_log, plant_interaction

__all__ = [
    "ALL_PAIRS", "Ensemble", "EventLog", "FIRST_RESPONSE", "InvalidEventError", "LogFormatError",
    "MotifClass", "MotifInstances", "MotifReport", "MotifSignificanceTest", "NetworkSummary",
    "NullModelShuffler", "Plant", "PruneConfig", "RevertEvent", "RevertExtractor",
    "RevisionRecord", "ShuffleStrategy", "SynthParams", "XMLDumpError", "annotate_for_display",
    "build_event_log", "check_event_log", "classify_pair", "degree_distributions",
    "detect_reverts", "edit_count_distribution", "enumerate_motifs", "extract_event_log",
    "generate_ensemble", "generate_log", "generate_null_log", "motif_delay_summary",
    "motif_report", "ols_two_way_clustered", "parse_revisions", "plant_interaction", "prune",
    "read_event_log", "sample_skewness", "same_article_baseline", "shuffle", "signed_ks",
    "status_difference", "status_regression", "summarize_network", "write_event_log", "z_score",
]
