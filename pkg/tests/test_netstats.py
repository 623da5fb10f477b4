import numpy as np
import pytest

from revertscope.core import RevertEvent, build_event_log
from revertscope.netstats import (average_path_length, degree_distributions,
                                  edit_count_distribution, histogram, summarize_network,
                                  undirected_graph)

from conftest import random_log

nx = pytest.importorskip("networkx")


def reference(log):
    g = nx.DiGraph()
    g.add_edges_from(zip(log.src.tolist(), log.dst.tolist()))
    u = g.to_undirected()
    big = u.subgraph(max(nx.connected_components(u), key=len))
    return dict(
        num_nodes=g.number_of_nodes(),
        num_multilinks=len(log),
        reciprocity=nx.overall_reciprocity(g),
        out_assortativity=nx.degree_pearson_correlation_coefficient(g, x="out", y="out"),
        in_assortativity=nx.degree_pearson_correlation_coefficient(g, x="in", y="in"),
        avg_path_length=nx.average_shortest_path_length(big),
        avg_clustering=nx.average_clustering(u),
    )


@pytest.mark.parametrize("seed", range(4))
def test_matches_networkx(seed):
    log = random_log(seed, n_events=600, n_editors=200)
    got = summarize_network(log).to_dict()
    for key, want in reference(log).items():
        assert got[key] == pytest.approx(want, abs=1e-9), key
    assert got["path_length_exact"]


def test_small_example():
    # a<->b plus b->c: reciprocity 2/3, triangle-free, path lengths 1,1,2
    log = build_event_log([RevertEvent(1, "a", "b", "x", 1, 2, 1, 1),
                           RevertEvent(2, "b", "a", "x", 3, 4, 1, 1),
                           RevertEvent(3, "b", "c", "x", 5, 6, 1, 1),
                           RevertEvent(4, "b", "c", "x", 7, 8, 1, 1)])
    s = summarize_network(log)
    assert s.num_nodes == 3 and s.num_multilinks == 4
    assert s.reciprocity == pytest.approx(2 / 3)
    assert s.avg_clustering == 0
    assert s.avg_path_length == pytest.approx(4 / 3)


def test_degenerate_assortativity():
    # a star: every in-degree at the target end is equal
    log = build_event_log([RevertEvent(i, "hub", f"t{i}", "x", 2 * i, 2 * i + 1, 1, 1)
                           for i in range(5)])
    s = summarize_network(log)
    assert s.out_assortativity is None and s.in_assortativity is None
    assert set(s.degenerate) == {"out_assortativity", "in_assortativity"}


def test_empty_log_raises():
    with pytest.raises(ValueError):
        summarize_network(build_event_log([]))


def test_sampled_path_length_close_to_exact():
    log = random_log(9, n_events=3000, n_editors=600)
    adj = undirected_graph(log)
    exact, flag = average_path_length(adj)
    approx, flag2 = average_path_length(adj, exact_limit=100, pairs=50_000, seed=1)
    assert flag and not flag2
    assert approx == pytest.approx(exact, rel=0.02)
    assert average_path_length(adj, exact_limit=100, seed=1) == average_path_length(
        adj, exact_limit=100, seed=1)


def test_histograms():
    h = histogram([1, 1, 2, 5, 0])
    assert h.rows() == [(1, 1, 2), (2, 2, 1), (5, 5, 1)]
    lb = histogram([1, 2, 3, 4, 9], log_bins=True)
    assert lb.rows() == [(1, 1, 1), (2, 3, 2), (4, 7, 1), (8, 15, 1)]
    assert histogram([]).rows() == []
    with pytest.raises(ValueError):
        histogram([1], log_bins=True, base=1)


def test_degree_distributions_sum_to_events():
    log = random_log(2, n_events=700, n_editors=90)
    for h in degree_distributions(log):
        assert int((h.lower * h.count).sum()) == len(log)
    for h in degree_distributions(log, log_bins=True):
        assert int(h.count.sum()) <= log.num_editors


def test_edit_count_distribution_uses_max():
    log = build_event_log([RevertEvent(1, "a", "b", "x", 1, 2, 3, 1),
                           RevertEvent(2, "b", "a", "x", 3, 4, 2, 7)])
    assert edit_count_distribution(log).as_dict() == {2: 1, 7: 1}
