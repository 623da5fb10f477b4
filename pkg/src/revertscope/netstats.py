"""Descriptive statistics of the revert network and its degree distributions."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .core import EventLog

EXACT_PATH_LIMIT = 20_000
SAMPLED_PAIRS = 100_000
MIN_SAMPLED_SOURCES = 256
PATH_SEED = 0
_BFS_BATCH = 256


@dataclass
class NetworkSummary:
    num_nodes: int
    num_multilinks: int
    reciprocity: float
    out_assortativity: float | None
    in_assortativity: float | None
    avg_path_length: float
    avg_clustering: float
    path_length_exact: bool = True
    degenerate: list[str] = field(default_factory=list)
    assortativity_estimator: str = "edge-wise Pearson, single-link directed projection"

    def to_dict(self) -> dict:
        return asdict(self)


def _single_links(log: EventLog):
    n = log.num_editors
    key = np.unique(log.src.astype(np.int64) * n + log.dst)
    return key // n, key % n, n


def reciprocity(log: EventLog) -> float:
    """Share of distinct directed links whose reverse link also exists."""
    src, dst, n = _single_links(log)
    if len(src) == 0:
        raise ValueError("empty log")
    key = src * n + dst
    return float(np.isin(dst * n + src, key).mean())


def _pearson(x: np.ndarray, y: np.ndarray) -> float | None:
    x = x.astype(np.float64)
    y = y.astype(np.float64)
    dx, dy = x - x.mean(), y - y.mean()
    sx, sy = math.sqrt(np.dot(dx, dx)), math.sqrt(np.dot(dy, dy))
    if sx == 0 or sy == 0:
        return None
    return float(np.clip(np.dot(dx, dy) / (sx * sy), -1.0, 1.0))


def assortativity(log: EventLog) -> tuple[float | None, float | None]:
    """(out-out, in-in) degree correlations over distinct directed links.

    None marks an undefined correlation (constant degrees on either end).
    """
    src, dst, n = _single_links(log)
    out_deg = np.bincount(src, minlength=n)
    in_deg = np.bincount(dst, minlength=n)
    return _pearson(out_deg[src], out_deg[dst]), _pearson(in_deg[src], in_deg[dst])


def undirected_graph(log: EventLog) -> sparse.csr_matrix:
    """Symmetric 0/1 adjacency of the simple undirected projection."""
    src, dst, n = _single_links(log)
    a = sparse.coo_matrix((np.ones(len(src)), (src, dst)), shape=(n, n)).tocsr()
    a = ((a + a.T) > 0).astype(np.float64)
    a.setdiag(0)
    a.eliminate_zeros()
    return a.tocsr()


def average_clustering(adj: sparse.csr_matrix) -> float:
    """Mean local clustering; nodes of degree < 2 contribute zero."""
    n = adj.shape[0]
    deg = np.asarray(adj.sum(axis=1)).ravel()
    tri = np.zeros(n)
    for start in range(0, n, 4096):
        rows = adj[start:start + 4096]
        tri[start:start + 4096] = np.asarray((rows @ adj).multiply(rows).sum(axis=1)).ravel() / 2
    with np.errstate(invalid="ignore", divide="ignore"):
        local = np.where(deg >= 2, 2 * tri / (deg * (deg - 1)), 0.0)
    return float(local.mean()) if n else 0.0


def average_path_length(adj: sparse.csr_matrix, exact_limit: int = EXACT_PATH_LIMIT,
                        pairs: int = SAMPLED_PAIRS, seed=PATH_SEED) -> tuple[float, bool]:
    """Mean shortest-path length within the largest connected component.

    Exact (BFS from every node) up to ``exact_limit`` nodes; beyond that,
    BFS from seeded uniformly drawn sources to all targets, with enough
    sources to cover at least ``pairs`` pairs. Returns ``(value, exact)``.
    """
    _, labels = csgraph.connected_components(adj, directed=False)
    sizes = np.bincount(labels)
    comp = np.flatnonzero(labels == int(np.argmax(sizes)))
    m = len(comp)
    if m < 2:
        raise ValueError("largest component has a single node")
    sub = adj[comp][:, comp].tocsr()
    exact = m <= exact_limit
    if exact:
        sources = np.arange(m)
    else:
        k = max(MIN_SAMPLED_SOURCES, math.ceil(pairs / (m - 1)))
        rng = np.random.default_rng(seed)
        sources = np.sort(rng.choice(m, size=min(k, m), replace=False))
    total = 0.0
    for start in range(0, len(sources), _BFS_BATCH):
        idx = sources[start:start + _BFS_BATCH]
        d = csgraph.shortest_path(sub, method="D", unweighted=True, directed=False, indices=idx)
        total += float(d.sum())
    return total / (len(sources) * (m - 1)), exact


def summarize_network(log: EventLog, exact_limit: int = EXACT_PATH_LIMIT,
                      seed=PATH_SEED) -> NetworkSummary:
    if len(log) == 0:
        raise ValueError("cannot summarize an empty log")
    out_r, in_r = assortativity(log)
    adj = undirected_graph(log)
    apl, exact = average_path_length(adj, exact_limit=exact_limit, seed=seed)
    degenerate = [name for name, v in (("out_assortativity", out_r),
                                       ("in_assortativity", in_r)) if v is None]
    return NetworkSummary(
        num_nodes=int(len(np.unique(np.concatenate([log.src, log.dst])))),
        num_multilinks=len(log),
        reciprocity=reciprocity(log),
        out_assortativity=out_r,
        in_assortativity=in_r,
        avg_path_length=apl,
        avg_clustering=average_clustering(adj),
        path_length_exact=exact,
        degenerate=degenerate,
    )


# --- distributions -----------------------------------------------------------

@dataclass
class Histogram:
    """Counts per bin; ``lower``/``upper`` are inclusive integer bounds."""

    lower: np.ndarray
    upper: np.ndarray
    count: np.ndarray

    def rows(self):
        return list(zip(self.lower.tolist(), self.upper.tolist(), self.count.tolist()))

    def as_dict(self) -> dict[int, int]:
        return {int(lo): int(c) for lo, c in zip(self.lower, self.count)}


def histogram(values, log_bins: bool = False, base: float = 2.0) -> Histogram:
    """Histogram of positive integers; exact values or logarithmic bins."""
    v = np.asarray(values, dtype=np.int64)
    v = v[v > 0]
    if len(v) == 0:
        z = np.zeros(0, dtype=np.int64)
        return Histogram(z, z, z)
    if not log_bins:
        vals, cnt = np.unique(v, return_counts=True)
        return Histogram(vals, vals, cnt)
    if base <= 1:
        raise ValueError("log-bin base must exceed 1")
    top = int(v.max())
    edges = [1]
    while edges[-1] <= top:
        edges.append(max(edges[-1] + 1, int(math.ceil(edges[-1] * base))))
    edges = np.array(edges, dtype=np.int64)
    cnt = np.bincount(np.searchsorted(edges, v, side="right") - 1, minlength=len(edges) - 1)
    keep = cnt > 0
    return Histogram(edges[:-1][keep], edges[1:][keep] - 1, cnt[keep])


def degree_distributions(log: EventLog, log_bins: bool = False) -> tuple[Histogram, Histogram]:
    """Out- and in-degree histograms of the multi-link network.

    Degree counts events; nodes with degree zero on a side are omitted, so
    ``sum(degree * count)`` equals the number of events.
    """
    n = log.num_editors
    out_deg = np.bincount(log.src, minlength=n)
    in_deg = np.bincount(log.dst, minlength=n)
    return histogram(out_deg, log_bins), histogram(in_deg, log_bins)


def edit_count_distribution(log: EventLog, log_bins: bool = False) -> Histogram:
    """Histogram over editors of their largest observed running edit count."""
    n = log.num_editors
    best = np.zeros(n, dtype=np.int64)
    np.maximum.at(best, log.src, log.src_edits)
    np.maximum.at(best, log.dst, log.dst_edits)
    present = np.zeros(n, dtype=bool)
    present[log.src] = True
    present[log.dst] = True
    return histogram(best[present], log_bins)


__all__ = [
    "Histogram", "NetworkSummary", "assortativity", "average_clustering",
    "average_path_length", "degree_distributions", "edit_count_distribution",
    "histogram", "reciprocity", "summarize_network", "undirected_graph",
]
