"""
Unit tests of the streaming distribution summaries
"""
import math

import numpy as np
import pytest

from covsamp.stats_utils import SKETCH_RANK_ERROR, SummaryAccumulator, digest_of, histogram, summary_stats


def test_summary_of_small_sample():
    s = summary_stats([4., 1., 3., 2.], param='RX', d1=2)
    assert (s.min, s.q25, s.median, s.q75, s.max) == (1., 1.75, 2.5, 3.25, 4.)
    assert s.mean == pytest.approx(2.5)
    assert s.sd == pytest.approx(math.sqrt(1.25))
    assert s.frac_leq_benchmark == .25
    assert s.count == 4 and s.n_ok == 4
    assert s.mode == 'exact'
    assert sum(s.histogram['counts']) == 4
    assert len(s.histogram['edges']) == 61
    assert s.to_dict()['frac_leq_1'] == .25


def test_benchmark_other_than_one():
    s = summary_stats([1., 2., 3.], benchmark=math.inf)
    assert s.frac_leq_benchmark == 1.
    assert s.to_dict()['frac_leq_1'] is None


def test_failures_and_empty_summary():
    s = summary_stats([], param='DeltaOrig', failures={'ZeroDenominator': 3})
    assert s.count == 3
    assert s.n_ok == 0
    assert s.failures == {'ZeroDenominator': 3}
    assert s.median is None and s.mean is None and s.frac_leq_benchmark is None

    s = summary_stats([.5, 2.], failures={'DegenerateIndex': 2})
    assert s.count == 4
    assert s.frac_leq_benchmark == .5


def test_constant_values():
    s = summary_stats(np.full(10, 3.))
    assert s.sd == 0.
    assert s.median == 3.
    assert sum(s.histogram['counts']) == 10


def _accumulate(chunks, **kwargs):
    acc = SummaryAccumulator('v', d1=3, **kwargs)
    for chunk in chunks:
        acc.add(chunk)
    return acc


def test_merge_is_order_free():
    rng = np.random.default_rng(20)
    a, b, c = rng.normal(size=100), rng.exponential(size=57), rng.normal(2., size=31)

    whole = _accumulate([np.concatenate([a, b, c])]).finalize().to_dict()
    left = _accumulate([a]).merge(_accumulate([b])).merge(_accumulate([c]))
    right = _accumulate([c]).merge(_accumulate([b, a]))
    assert left.finalize().to_dict() == whole
    assert right.finalize().to_dict() == whole


def test_merge_keeps_failures():
    first = _accumulate([[1., 2.]])
    first.add_failure('ZeroDenominator')
    second = SummaryAccumulator('v', d1=3)
    second.add_failure('ZeroDenominator', 2)
    second.add_failure('SingularSplit')
    s = first.merge(second).finalize()
    assert s.failures == {'SingularSplit': 1, 'ZeroDenominator': 3}
    assert s.count == 6


def test_switch_to_sketch_beyond_retention_cap():
    rng = np.random.default_rng(21)
    values = rng.uniform(size=20000)
    acc = SummaryAccumulator('v', retention_cap=1000)
    with pytest.warns(UserWarning, match='t-digest'):
        for chunk in np.array_split(values, 40):
            acc.add(chunk)
    s = acc.finalize()
    assert s.mode == 'sketch'
    assert s.count == 20000
    assert s.min == values.min() and s.max == values.max()
    assert s.mean == pytest.approx(values.mean(), rel=1e-10)
    assert s.sd == pytest.approx(values.std(), rel=1e-8)
    assert sum(s.histogram['counts']) == 20000
    assert len(s.histogram['edges']) == 61
    for q, got in ((.25, s.q25), (.5, s.median), (.75, s.q75)):
        assert abs(got - np.quantile(values, q)) < .01


def test_sketch_rank_error_at_default_compression():
    rng = np.random.default_rng(23)
    values = rng.uniform(size=200000)
    acc = SummaryAccumulator('v', retention_cap=10000)
    with pytest.warns(UserWarning):
        for chunk in np.array_split(values, 50):
            acc.merge(_accumulate([chunk]))
    s = acc.finalize()
    ordered = np.sort(values)
    for q, got in ((.25, s.q25), (.5, s.median), (.75, s.q75)):
        rank = np.searchsorted(ordered, got) / len(values)
        assert abs(rank - q) <= SKETCH_RANK_ERROR


def test_merging_sketches_with_retained_values():
    rng = np.random.default_rng(22)
    a, b = rng.normal(size=3000), rng.normal(size=1001)
    big = _accumulate([a], retention_cap=2000)
    small = _accumulate([b], retention_cap=2000)
    assert big.sketch is not None and small.sketch is None
    s = small.merge(big).finalize()
    assert s.mode == 'sketch'
    assert s.count == 4001
    assert sum(s.histogram['counts']) == 4001
    assert abs(s.median - np.median(np.concatenate([a, b]))) < .05


def test_summary_of_a_digest():
    rng = np.random.default_rng(24)
    values = rng.normal(size=4001)
    s = summary_stats(digest_of(values))
    assert s.mode == 'sketch'
    assert s.count == 4001
    assert abs(s.median - np.median(values)) < .05
    assert s.min <= s.q25 <= s.median <= s.q75 <= s.max


def test_near_constant_values_get_a_histogram():
    values = [1., 1. + 2.2e-16, 1. - 1.1e-16]
    s = summary_stats(values)
    assert s.median == 1.
    assert sum(s.histogram['counts']) == 3
    edges = s.histogram['edges']
    assert len(edges) == 61
    assert edges[0] <= s.min and edges[-1] >= s.max
    assert edges == sorted(edges)

    counts, edges = histogram(np.full(5, 1e8), 1e8, 1e8 * (1 + 1e-15), 60)
    assert counts.sum() == 5
    assert len(edges) == 61
