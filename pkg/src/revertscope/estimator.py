"""scikit-learn style wrappers around the pipeline.

The estimators hold only constructor parameters (so ``get_params`` /
``set_params`` / ``clone`` work) and put fitted results on trailing-underscore
attributes. Inputs go through :func:`check_event_log`, which accepts an
:class:`EventLog`, a DataFrame with the event-log columns, or a file path.
"""
from __future__ import annotations

import os

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .core import TSV_COLUMNS, EventLog, read_event_log
from .ingest import PruneConfig, RevisionRecord, extract_event_log
from .motifs import ALL_PAIRS, DEFAULT_WINDOW_MINUTES, MotifClass, normalize_mode
from .nullmodel import DEFAULT_REALIZATIONS, WITHIN_NODE_WINDOW, ShuffleStrategy, generate_ensemble
from .report import DEFAULT_SAME_ARTICLE_SAMPLES, motif_report


def check_event_log(X, allow_empty: bool = False) -> EventLog:
    """Coerce ``X`` to an :class:`EventLog` and validate it."""
    if isinstance(X, EventLog):
        log = X
    elif isinstance(X, (str, os.PathLike)):
        log = read_event_log(X)
    elif hasattr(X, "columns"):
        missing = [c for c in TSV_COLUMNS if c not in X.columns]
        if missing:
            raise ValueError(f"DataFrame lacks event-log columns {missing}")
        log = EventLog.from_columns(*(X[c].to_numpy() for c in TSV_COLUMNS))
    else:
        raise TypeError(f"expected EventLog, DataFrame or path, got {type(X).__name__}")
    if not allow_empty and len(log) == 0:
        raise ValueError("event log is empty")
    return log


def check_random_state_seed(random_state) -> int:
    """Integer root seed; ensembles need a reproducible integer, not a Generator."""
    if random_state is None:
        return int(np.random.SeedSequence().entropy % (2 ** 63))
    if isinstance(random_state, (int, np.integer)) and random_state >= 0:
        return int(random_state)
    raise ValueError(f"random_state must be a non-negative int or None, got {random_state!r}")


class RevertExtractor(TransformerMixin, BaseEstimator):
    """Revision records -> pruned revert event log."""

    def __init__(self, bot_list=(), drop_anonymous=True, drop_vandals=True, drop_bots=True):
        self.bot_list = bot_list
        self.drop_anonymous = drop_anonymous
        self.drop_vandals = drop_vandals
        self.drop_bots = drop_bots

    def _config(self) -> PruneConfig:
        return PruneConfig(bot_list=frozenset(self.bot_list), drop_anonymous=self.drop_anonymous,
                           drop_vandals=self.drop_vandals, drop_bots=self.drop_bots)

    def fit(self, X, y=None):
        records = self._records(X)
        self.result_ = extract_event_log(records, self._config())
        return self

    def transform(self, X) -> EventLog:
        check_is_fitted(self, "result_")
        return extract_event_log(self._records(X), self._config()).log

    def fit_transform(self, X, y=None) -> EventLog:
        return self.fit(X).result_.log

    @staticmethod
    def _records(X) -> list[RevisionRecord]:
        records = list(X)
        bad = next((i for i, r in enumerate(records) if not isinstance(r, RevisionRecord)), None)
        if bad is not None:
            raise TypeError(f"item {bad} is not a RevisionRecord")
        return records


class NullModelShuffler(TransformerMixin, BaseEstimator):
    """Event log -> seeded ensemble of timestamp-shuffled realizations."""

    def __init__(self, strategy=WITHIN_NODE_WINDOW, window_hours=24.0,
                 n_realizations=DEFAULT_REALIZATIONS, random_state=0):
        self.strategy = strategy
        self.window_hours = window_hours
        self.n_realizations = n_realizations
        self.random_state = random_state

    def fit(self, X, y=None):
        self.strategy_ = ShuffleStrategy(self.strategy, self.window_hours)
        self.root_seed_ = check_random_state_seed(self.random_state)
        return self

    def transform(self, X):
        check_is_fitted(self, "strategy_")
        return generate_ensemble(check_event_log(X, allow_empty=True), self.strategy_,
                                 self.n_realizations, self.root_seed_)


class MotifSignificanceTest(BaseEstimator):
    """Observed motif statistics against a shuffled-timestamp null ensemble.

    After :meth:`fit`, ``report_`` holds the full :class:`MotifReport`;
    :meth:`transform` returns per-class count, mean-delay and skewness Z.
    """

    def __init__(self, window_minutes=DEFAULT_WINDOW_MINUTES, mode=ALL_PAIRS,
                 strategy=WITHIN_NODE_WINDOW, window_hours=24.0,
                 n_realizations=DEFAULT_REALIZATIONS, random_state=0, n_jobs=1,
                 same_article_samples=DEFAULT_SAME_ARTICLE_SAMPLES):
        self.window_minutes = window_minutes
        self.mode = mode
        self.strategy = strategy
        self.window_hours = window_hours
        self.n_realizations = n_realizations
        self.random_state = random_state
        self.n_jobs = n_jobs
        self.same_article_samples = same_article_samples

    def _validate(self):
        if not self.window_minutes > 0:
            raise ValueError("window_minutes must be positive")
        if int(self.n_jobs) < 1:
            raise ValueError("n_jobs must be >= 1")
        normalize_mode(self.mode)

    def fit(self, X, y=None):
        self._validate()
        log = check_event_log(X)
        shuffler = NullModelShuffler(self.strategy, self.window_hours, self.n_realizations,
                                     self.random_state).fit(log)
        ensemble = shuffler.transform(log)
        self.report_ = motif_report(log, ensemble, self.window_minutes, self.mode,
                                    threads=int(self.n_jobs),
                                    same_article_samples=self.same_article_samples)
        self.n_events_ = len(log)
        return self

    def transform(self, X=None) -> np.ndarray:
        """``(6, 3)`` array of count, mean-delay and skewness Z (NaN if degenerate)."""
        check_is_fitted(self, "report_")
        out = np.full((6, 3), np.nan)
        for k in MotifClass:
            row = self.report_[k]
            for j, z in enumerate((row.count_z, row.mean_z, row.skew_z)):
                if z is not None:
                    out[int(k), j] = z
        return out

    def fit_transform(self, X, y=None) -> np.ndarray:
        return self.fit(X).transform()

    def summary_frame(self):
        """Per-class report as a pandas DataFrame."""
        import pandas as pd
        check_is_fitted(self, "report_")
        rows = []
        for name, c in self.report_.classes.items():
            rows.append({"class": name, "motif": c.motif, "count": c.count_data,
                         "count_null": c.count_null_mean, "count_z": c.count_z,
                         "mean_delay": c.mean_delay_data, "mean_z": c.mean_z,
                         "skew_z": c.skew_z, "ks": c.ks_signed, "ks_p": c.ks_p,
                         "same_article_z": c.same_article_z})
        return pd.DataFrame(rows).set_index("class")


__all__ = ["MotifSignificanceTest", "NullModelShuffler", "RevertExtractor",
           "check_event_log", "check_random_state_seed"]
