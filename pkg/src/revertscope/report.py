"""Observed-vs-null motif analysis.

Seeds used here derive from the ensemble root seed with two-element spawn
keys, so they never collide with realization seeds (one-element keys):
``(ANALYSIS_KEY, 1)`` picks the KS baseline realization and
``(ANALYSIS_KEY, 2)`` drives the same-article matched-pair baseline.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import EventLog
from .motifs import (ALL_PAIRS, DEFAULT_WINDOW_MINUTES, DelayAccumulator, MotifClass,
                     MotifInstances, enumerate_motifs, iter_pair_classes, normalize_mode,
                     window_seconds)
from .nullmodel import Ensemble
from .stats import (RegressionResult, ols_two_way_clustered, signed_ks, signed_ks_counts, status,
                    z_score)

ANALYSIS_KEY = 0x5EED
DEFAULT_SAME_ARTICLE_SAMPLES = 1000

DYADS = {
    MotifClass.AB_AB: ("A_B",),
    MotifClass.AB_BA: ("A_B",),
    MotifClass.AB_BC: ("A_B", "B_C"),
    MotifClass.AB_CB: ("A_B", "C_B"),
    MotifClass.AB_AC: ("A_B", "A_C"),
    MotifClass.AB_CA: ("A_B", "C_A"),
}


def analysis_seed(root_seed: int, purpose: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(root_seed), spawn_key=(ANALYSIS_KEY, int(purpose)))


# --- same-article baseline ---------------------------------------------------

@dataclass
class SameArticleResult:
    proportion: float | None
    baseline: float | None
    z: float | None
    n_instances: int


def matched_pairs(log: EventLog, window_minutes: float, rng: np.random.Generator):
    """Pair each revert with a random other revert its reverter took part in.

    Candidates are events involving the reverter (either role) within
    ``window`` of the revert, inclusive. Returns ``(event, match)`` index
    arrays; reverts without candidates are skipped.
    """
    n = len(log)
    win = window_seconds(window_minutes)
    ev = np.concatenate([np.arange(n, dtype=np.int64)] * 2)
    ed = np.concatenate([log.src, log.dst]).astype(np.int64)
    order = np.argsort(ed * max(n, 1) + ev, kind="stable")
    ev, ed = ev[order], ed[order]
    t = log.ts[ev] - (log.ts.min() if n else 0)
    tmax = int(t.max()) if n else 0
    w = min(win, tmax + 1)
    span = tmax + 2 * w + 2
    key = ed * span + t + w
    is_src = np.concatenate([np.ones(n, bool), np.zeros(n, bool)])[order]
    own = np.empty(n, dtype=np.int64)
    own[ev[is_src]] = np.flatnonzero(is_src)
    lo = np.searchsorted(key, key[own] - w, side="left")
    hi = np.searchsorted(key, key[own] + w, side="right")
    ncand = hi - lo - 1
    u = rng.random(n)
    ok = ncand > 0
    pick = lo + np.floor(u * np.maximum(ncand, 1)).astype(np.int64)
    pick = pick + (pick >= own)
    events = np.flatnonzero(ok)
    return events, ev[pick[ok]]


def same_article_baseline(log: EventLog, instances: MotifInstances,
                          samples: int = DEFAULT_SAME_ARTICLE_SAMPLES, seed=0,
                          window_minutes: float | None = None) -> dict[MotifClass, SameArticleResult]:
    """Z of each class's same-article share against matched random pairs.

    The matched-pair set is drawn once; each of ``samples`` resamples takes
    as many pairs as the class has instances, with replacement. Because the
    resampled share is then binomial in the matched-pair share, resamples are
    drawn from that binomial directly.
    """
    if window_minutes is None:
        window_minutes = instances.window_minutes
    n_k = np.bincount(instances.cls.astype(np.int64), minlength=6)[:6]
    same_k = np.bincount(instances.cls.astype(np.int64),
                         weights=instances.same_article.astype(np.float64), minlength=6)[:6]
    return _same_article_z(log, n_k, same_k, samples, seed, window_minutes)


def _same_article_z(log, n_k, same_k, samples, seed, window_minutes):
    rng = np.random.default_rng(seed)
    e, m = matched_pairs(log, window_minutes, rng)
    if len(e) == 0:
        raise ValueError("no revert has a candidate match within the window")
    q = float(np.mean(log.art[e] == log.art[m]))
    out = {}
    for k in MotifClass:
        n = int(n_k[int(k)])
        if n == 0:
            out[k] = SameArticleResult(None, q, None, 0)
            continue
        obs = float(same_k[int(k)]) / n
        props = rng.binomial(n, q, size=samples) / n
        out[k] = SameArticleResult(obs, float(props.mean()), z_score(obs, props), n)
    return out


# --- status ------------------------------------------------------------------

def _role_events(instances: MotifInstances, cls: MotifClass, dyad: str) -> np.ndarray:
    cls = MotifClass.parse(cls)
    if dyad not in DYADS[cls]:
        raise ValueError(f"dyad {dyad!r} is not defined for {cls.name}; "
                         f"choose from {DYADS[cls]}")
    sel = instances.cls == int(cls)
    if not sel.any():
        raise ValueError(f"no {cls.name} instances")
    col = instances.first if dyad == "A_B" else instances.second
    return np.unique(col[sel])


def status_regression(log: EventLog, instances: MotifInstances, cls,
                      dyad: str = "A_B") -> RegressionResult:
    """Status difference of motif reverts against all other reverts.

    Every revert is one observation with outcome
    ``log10(reverter edits) - log10(reverted edits)``; for each dyad this is
    the status difference of the two editors forming it. The regressor flags
    reverts playing the dyad's role in at least one instance of ``cls`` (the
    first event for ``A_B``, the second event otherwise), so a revert counts
    once however many instances it belongs to. Errors are clustered on the
    reverter and the reverted editor.
    """
    cls = MotifClass.parse(cls)
    mask = np.zeros(len(log), dtype=bool)
    mask[_role_events(instances, cls, dyad)] = True
    return _status_from_mask(log, mask, cls, dyad)


def _status_from_mask(log: EventLog, mask: np.ndarray, cls: MotifClass, dyad: str):
    y = status(log.src_edits) - status(log.dst_edits)
    return ols_two_way_clustered(y, mask.astype(np.float64), log.src, log.dst,
                                 names=("Other", f"{cls.label} {dyad.replace('_', '-')}"))


def status_histogram_difference(log: EventLog, instances: MotifInstances, cls,
                                dyad: str = "A_B", bins: int = 10):
    """Normalized 2-D status histogram of the dyad's reverts minus all others.

    Axes are (status of reverter, status of reverted) of the role events.
    Returns ``(surface, edges)``; both histograms share ``edges`` on each axis.
    """
    if bins < 2:
        raise ValueError("need at least 2 bins per axis")
    if len(log) == 0:
        raise ValueError("empty log")
    role = _role_events(instances, cls, dyad)
    mask = np.zeros(len(log), dtype=bool)
    mask[role] = True
    if mask.all():
        raise ValueError("no background reverts outside the motif")
    sx, sy = status(log.src_edits), status(log.dst_edits)
    lo = float(min(sx.min(), sy.min()))
    hi = float(max(sx.max(), sy.max()))
    if hi <= lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, bins + 1)
    h_m, _, _ = np.histogram2d(sx[mask], sy[mask], bins=(edges, edges))
    h_o, _, _ = np.histogram2d(sx[~mask], sy[~mask], bins=(edges, edges))
    return h_m / h_m.sum() - h_o / h_o.sum(), edges


# --- full report -------------------------------------------------------------

@dataclass
class StatusRow:
    dyad: str
    other: float | None = None
    other_se: float | None = None
    other_p: float | None = None
    motif: float | None = None
    motif_se: float | None = None
    motif_p: float | None = None
    n: int = 0
    n_reverter_clusters: int = 0
    n_reverted_clusters: int = 0
    variance_clipped: bool = False
    degenerate: str | None = None


@dataclass
class ClassReport:
    motif: str
    count_data: int
    count_null_mean: float
    count_null_sd: float
    count_z: float | None
    mean_delay_data: float | None
    mean_delay_null: float | None
    mean_z: float | None
    skew_data: float | None
    skew_null: float | None
    skew_z: float | None
    ks_signed: float | None
    ks_p: float | None
    same_article_prop: float | None
    same_article_baseline: float | None
    same_article_z: float | None
    status: list[StatusRow] = field(default_factory=list)
    degenerate: list[str] = field(default_factory=list)


@dataclass
class MotifReport:
    classes: dict[str, ClassReport]
    metadata: dict

    def __getitem__(self, cls) -> ClassReport:
        return self.classes[MotifClass.parse(cls).name]

    def to_dict(self) -> dict:
        return {"metadata": dict(self.metadata),
                "classes": {k: asdict(v) for k, v in self.classes.items()}}


def _finite(x) -> float | None:
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


class _DelayStore:
    """Per-class response delays in whole seconds, kept for the KS test.

    Delays lie in ``[1, window]`` seconds, so for ordinary windows they are
    kept as exact per-second counts and memory does not grow with the number
    of pairs; very long windows fall back to storing the delays themselves.
    """

    MAX_BINS = 1 << 21

    def __init__(self, window_s: int):
        self.width = int(window_s) + 1
        self.binned = self.width <= self.MAX_BINS
        if self.binned:
            self.hist = np.zeros((6, self.width), dtype=np.int64)
        else:
            self.parts = [[] for _ in range(6)]

    def add(self, cls: np.ndarray, delay_s: np.ndarray) -> None:
        if self.binned:
            flat = np.bincount(cls * self.width + delay_s, minlength=6 * self.width)
            self.hist += flat.reshape(6, self.width)
            return
        for k in np.unique(cls):
            self.parts[k].append(delay_s[cls == k])

    def size(self, k: int) -> int:
        if self.binned:
            return int(self.hist[k].sum())
        return sum(len(p) for p in self.parts[k])

    def signed_ks(self, other: "_DelayStore", k: int):
        if self.binned and other.binned and self.width == other.width:
            return signed_ks_counts(self.hist[k], other.hist[k])
        return signed_ks(self.values(k), other.values(k))

    def values(self, k: int) -> np.ndarray:
        if self.binned:
            return np.repeat(np.arange(self.width), self.hist[k])
        return np.concatenate(self.parts[k]) if self.parts[k] else np.zeros(0, np.int64)


def _pair_stats(log: EventLog, e1, e2):
    delay_s = log.ts[e2] - log.ts[e1]
    return delay_s, delay_s / 60.0


class _Observed:
    """Per-class statistics of the observed log, gathered chunk by chunk.

    Holds delay counts (for KS), same-article counts, and which events play
    the first / second role of each class (for the status rows).
    """

    def __init__(self, n_events: int, window_minutes: float):
        self.acc = DelayAccumulator(shift=min(float(window_minutes), 1e9) / 2)
        self.delays = _DelayStore(window_seconds(window_minutes))
        self.same = np.zeros(6)
        self.first = np.zeros((6, n_events), dtype=bool)
        self.second = np.zeros((6, n_events), dtype=bool)

    def add(self, cls, e1, e2, delay_s, delay_min, same):
        cls = np.asarray(cls, dtype=np.int64)
        self.acc.add(cls, delay_min)
        self.delays.add(cls, delay_s)
        self.same += np.bincount(cls, weights=same.astype(np.float64), minlength=6)[:6]
        for k in np.unique(cls):
            sel = cls == k
            self.first[k, e1[sel]] = True
            self.second[k, e2[sel]] = True

    @classmethod
    def from_log(cls, log, window_minutes, mode):
        obs = cls(len(log), window_minutes)
        for c, e1, e2 in iter_pair_classes(log, window_minutes, mode):
            obs.add(c, e1, e2, *_pair_stats(log, e1, e2), log.art[e1] == log.art[e2])
        return obs

    @classmethod
    def from_instances(cls, log, inst: MotifInstances):
        obs = cls(len(log), inst.window_minutes)
        obs.add(inst.cls, inst.first, inst.second, *_pair_stats(log, inst.first, inst.second),
                inst.same_article)
        return obs

    def role_mask(self, k: int, dyad: str) -> np.ndarray:
        return self.first[k] if dyad == "A_B" else self.second[k]


def _null_stats(log: EventLog, window_minutes: float, mode: str, keep_delays: bool):
    acc = DelayAccumulator(shift=min(float(window_minutes), 1e9) / 2)
    store = _DelayStore(window_seconds(window_minutes)) if keep_delays else None
    for cls, e1, e2 in iter_pair_classes(log, window_minutes, mode):
        delay_s, delay_min = _pair_stats(log, e1, e2)
        acc.add(cls, delay_min)
        if keep_delays:
            store.add(cls.astype(np.int64), delay_s)
    return acc.summary(), store


def motif_report(log: EventLog, ensemble: Ensemble,
                 window_minutes: float = DEFAULT_WINDOW_MINUTES, mode: str = ALL_PAIRS,
                 threads: int = 1, same_article_samples: int = DEFAULT_SAME_ARTICLE_SAMPLES,
                 status_rows: bool = True, instances: MotifInstances | None = None) -> MotifReport:
    """Compare observed motif counts, delays, article overlap and status with the null.

    Observed statistics are streamed over pair chunks unless ``instances``
    (from :func:`enumerate_motifs` on ``log``) are supplied.
    """
    mode = normalize_mode(mode)
    if ensemble.log is not log and ensemble.log != log:
        raise ValueError("ensemble was generated from a different log")
    if instances is not None:
        if instances.mode != mode or instances.window_minutes != window_minutes:
            raise ValueError("instances were enumerated with a different window or mode")
        obs = _Observed.from_instances(log, instances)
    else:
        obs = _Observed.from_log(log, window_minutes, mode)
    data = obs.acc.summary()
    R = ensemble.n_realizations
    ks_index = int(np.random.default_rng(analysis_seed(ensemble.root_seed, 1)).integers(R))

    def reduce(r, realization):
        return _null_stats(realization, window_minutes, mode, keep_delays=(r == ks_index))

    results = ensemble.map(reduce, threads=threads)
    null_count = np.array([s.count for s, _ in results], dtype=np.float64)
    null_mean = np.array([s.mean for s, _ in results])
    null_skew = np.array([s.skew for s, _ in results])
    ks_delays = results[ks_index][1]
    del results

    same = {}
    if len(log):
        try:
            same = _same_article_z(log, data.count, obs.same, same_article_samples,
                                   analysis_seed(ensemble.root_seed, 2), window_minutes)
        except ValueError:
            same = {}

    classes = {}
    for k in MotifClass:
        i = int(k)
        degenerate = []
        count_z = z_score(float(data.count[i]), null_count[:, i])
        if count_z is None:
            degenerate.append("count_z")
        data_mean, data_skew = _finite(data.mean[i]), _finite(data.skew[i])
        mean_z = skew_z = None
        mean_null = skew_null = None
        if data_mean is not None and np.all(np.isfinite(null_mean[:, i])):
            mean_null = float(null_mean[:, i].mean())
            mean_z = z_score(data_mean, null_mean[:, i])
        if mean_z is None:
            degenerate.append("mean_z")
        if data_skew is not None and np.all(np.isfinite(null_skew[:, i])):
            skew_null = float(null_skew[:, i].mean())
            skew_z = z_score(data_skew, null_skew[:, i])
        if skew_z is None:
            degenerate.append("skew_z")
        ks_d = ks_p = None
        if obs.delays.size(i) and ks_delays.size(i):
            ks_d, ks_p = obs.delays.signed_ks(ks_delays, i)
        else:
            degenerate.append("ks")
        sa = same.get(k)
        if sa is None or sa.z is None:
            degenerate.append("same_article_z")
        rows = []
        if status_rows:
            for dyad in DYADS[k]:
                rows.append(_status_row(log, obs.role_mask(i, dyad), k, dyad))
        classes[k.name] = ClassReport(
            motif=k.label,
            count_data=int(data.count[i]),
            count_null_mean=float(null_count[:, i].mean()),
            count_null_sd=float(null_count[:, i].std()),
            count_z=count_z,
            mean_delay_data=data_mean, mean_delay_null=mean_null, mean_z=mean_z,
            skew_data=data_skew, skew_null=skew_null, skew_z=skew_z,
            ks_signed=ks_d, ks_p=ks_p,
            same_article_prop=sa.proportion if sa else None,
            same_article_baseline=sa.baseline if sa else None,
            same_article_z=sa.z if sa else None,
            status=rows, degenerate=degenerate)
    metadata = {
        "n_events": len(log),
        "n_editors": log.num_editors,
        "window_minutes": window_minutes,
        "mode": mode,
        "strategy": ensemble.strategy.kind,
        "strategy_window_hours": ensemble.strategy.window_hours,
        "realizations": R,
        "root_seed": ensemble.root_seed,
        "seed_derivation": "SeedSequence(root_seed, spawn_key=(r,)) per realization",
        "ks_baseline_realization": ks_index,
        "same_article_samples": same_article_samples,
        "z_sd": "population",
        "delay_unit": "minutes",
    }
    return MotifReport(classes, metadata)


def _status_row(log, mask, cls, dyad) -> StatusRow:
    row = StatusRow(dyad=dyad)
    if not mask.any():
        row.degenerate = f"no {cls.name} instances"
        return row
    try:
        res = _status_from_mask(log, mask, cls, dyad)
    except (ValueError, np.linalg.LinAlgError) as exc:
        row.degenerate = str(exc)
        return row
    row.other, row.motif = float(res.coef[0]), float(res.coef[1])
    row.other_se, row.motif_se = float(res.se[0]), float(res.se[1])
    row.other_p, row.motif_p = float(res.pvalues[0]), float(res.pvalues[1])
    row.n = res.n
    row.n_reverter_clusters, row.n_reverted_clusters = res.n_clusters
    row.variance_clipped = res.clipped
    return row


__all__ = [
    "ClassReport", "DYADS", "MotifReport", "SameArticleResult", "StatusRow",
    "analysis_seed", "matched_pairs", "motif_report", "same_article_baseline",
    "status_histogram_difference", "status_regression",
]
