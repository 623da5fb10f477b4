import numpy as np
import pytest

from revertscope.motifs import MotifClass, enumerate_motifs
from revertscope.synth import Plant, SynthParams, generate_log, generate_null_log, plant_interaction

SMALL = SynthParams(num_editors=80, num_articles=30, duration_days=10)


def test_deterministic():
    assert generate_null_log(SMALL, 3) == generate_null_log(SMALL, 3)
    assert generate_null_log(SMALL, 3) != generate_null_log(SMALL, 4)
    p = SynthParams(num_editors=80, duration_days=10, plant=Plant("AB_BA", 0.3))
    assert generate_log(p, 1) == generate_log(p, 1)


def test_one_editor_is_empty():
    assert len(generate_null_log(SynthParams(num_editors=1), 0)) == 0


def test_infeasible_and_invalid():
    with pytest.raises(ValueError):
        generate_null_log(SynthParams(num_editors=2, duration_days=1), 0)
    with pytest.raises(ValueError):
        generate_null_log(SynthParams(plant=Plant("AB_AB", 0.1)), 0)
    for bad in (dict(num_editors=0), dict(duration_days=0), dict(activity_exponent=1.0)):
        with pytest.raises(ValueError):
            SynthParams(**bad)
    with pytest.raises(ValueError):
        Plant("AB_BA", 1.5)


def test_null_log_shape():
    log = generate_null_log(SMALL, 0)
    assert 300 < len(log) < 2000
    assert np.all(log.src != log.dst)
    span = log.ts.max() - log.ts.min()
    assert span <= 10 * 86400
    # running counts: an editor's incidences carry 1, 2, 3, ... in time order
    ed = np.concatenate([log.src, log.dst])
    cnt = np.concatenate([log.src_edits, log.dst_edits])
    for e in np.unique(ed)[:30]:
        assert sorted(cnt[ed == e].tolist()) == list(range(1, int((ed == e).sum()) + 1))


def test_in_degree_is_heavy_tailed():
    log = generate_null_log(SynthParams(num_editors=300, duration_days=30), 0)
    indeg = np.bincount(log.dst, minlength=log.num_editors)
    # uniform targeting would give roughly Poisson in-degrees (variance ~ mean)
    assert indeg.var() > 5 * indeg.mean()


def test_plant_zero_is_identity():
    log = generate_null_log(SMALL, 0)
    assert plant_interaction(log, Plant("AB_BA", 0.0), 1) == log


def test_plant_one_doubles_repeat_count():
    log = generate_null_log(SMALL, 0)
    out = plant_interaction(log, Plant("AB_AB", 1.0), 1)
    assert len(out) == 2 * len(log)
    before = enumerate_motifs(log).counts()[MotifClass.AB_AB]
    after = enumerate_motifs(out).counts()[MotifClass.AB_AB]
    assert after >= 2 * before and after >= len(log)


@pytest.mark.parametrize("cls", list(MotifClass))
def test_planted_count_binomial(cls):
    log = generate_null_log(SMALL, 2)
    p = 0.3
    out = plant_interaction(log, Plant(cls, p), 5)
    added = len(out) - len(log)
    n = len(log)
    assert abs(added - n * p) <= 4 * np.sqrt(n * p * (1 - p))
    assert np.all(out.src != out.dst)


def test_plant_needs_third_editor():
    from revertscope.core import RevertEvent, build_event_log
    two = build_event_log([RevertEvent(i, "a", "b", "x", 2 * i, 2 * i + 1, 1, 1) for i in range(5)])
    with pytest.raises(ValueError):
        plant_interaction(two, Plant("AB_AC", 0.5), 0)
    assert len(plant_interaction(two, Plant("AB_BA", 1.0), 0)) == 10


def test_plant_delays_and_same_article():
    log = generate_null_log(SMALL, 1)
    out = plant_interaction(log, Plant("AB_BA", 1.0, delay_mean_minutes=30), 2)
    inst = enumerate_motifs(out, 1440).select("AB_BA")
    # most planted responses are the first reply, so the median delay is short
    assert np.median(inst.delay_minutes) < 120
    assert 0.6 < np.mean(inst.same_article[inst.delay_minutes < 60]) < 1.0
