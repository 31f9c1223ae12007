"""
Streaming summaries of a covariate sampling distribution.

Date: October 2026

A SummaryAccumulator collects the values of one parameter over a stream of masks and is mergeable, so worker-local
accumulators over disjoint mask ranges can be combined. Values are retained in full up to a cap, which gives exact
order statistics. Beyond the cap the values move to a t-digest (pytdigest.TDigest). With the default compression of
1000 the rank error of its quartiles stays below SKETCH_RANK_ERROR (0.1%).

Quantiles use linear interpolation between order statistics (the default of numpy.quantile). Standard deviations are
population standard deviations (ddof = 0).
"""

import math
import warnings
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

import numpy as np
from pytdigest import TDigest


QUANTILE_CONVENTION = 'linear interpolation between order statistics (numpy.quantile method="linear")'
RETENTION_CAP = 10**7
SKETCH_COMPRESSION = 1000
SKETCH_RANK_ERROR = 1e-3
HISTOGRAM_BINS = 60


def digest_of(values, compression=SKETCH_COMPRESSION) -> TDigest:
    return TDigest.compute(np.asarray(values, dtype=float), compression=compression)


def digest_items(digest: TDigest):
    """
    Centroid means and weights of a t-digest, sorted by mean.
    """
    centroids = np.asarray(digest.get_centroids(), dtype=float).reshape(-1, 2)
    order = np.argsort(centroids[:, 0], kind='stable')
    return centroids[order, 0], centroids[order, 1]


def histogram(values, lo, hi, bins, weights=None):
    """
    np.histogram over [lo, hi]. A range narrower than the float resolution is widened symmetrically around its centre.
    """
    scale = max(1., abs(lo), abs(hi))
    if hi - lo <= np.finfo(float).eps * scale * bins:
        centre = lo + (hi - lo) / 2
        half = 1e-9 * scale
        lo, hi = centre - half, centre + half
    return np.histogram(values, bins=bins, range=(lo, hi), weights=weights)


@dataclass
class DistributionSummary:
    """
    Summary statistics of one parameter's sampling distribution. Statistics are None when every mask failed.
    """
    param: str
    d1: Optional[int]
    abs_applied: bool
    count: int
    failures: Dict[str, int]
    min: Optional[float]
    q25: Optional[float]
    median: Optional[float]
    q75: Optional[float]
    max: Optional[float]
    mean: Optional[float]
    sd: Optional[float]
    benchmark: float
    frac_leq_benchmark: Optional[float]
    histogram: dict = field(default_factory=dict)
    mode: str = 'exact'

    @property
    def n_ok(self):
        return self.count - sum(self.failures.values())

    def to_dict(self):
        out = asdict(self)
        out['frac_leq_1'] = self.frac_leq_benchmark if self.benchmark == 1. else None
        return out


class SummaryAccumulator:
    """
    Mergeable accumulator of the values and failure codes of one parameter.

    Parameters
    ----------
    param : str
    d1 : int
    abs_applied : bool
        Whether the values fed in are already absolute values (recorded only).
    benchmark : float
        Values <= benchmark are counted for frac_leq_benchmark.
    retention_cap : int
        Largest number of values kept in full before switching to the t-digest.
    sketch_compression : int
        Compression of the t-digest.
    bins : int
        Number of histogram bins over [min, max].
    """

    def __init__(self, param, d1=None, abs_applied=False, benchmark=1.0, retention_cap=RETENTION_CAP,
                 sketch_compression=SKETCH_COMPRESSION, bins=HISTOGRAM_BINS):
        self.param = param
        self.d1 = d1
        self.abs_applied = abs_applied
        self.benchmark = float(benchmark)
        self.retention_cap = int(retention_cap)
        self.sketch_compression = int(sketch_compression)
        self.bins = int(bins)

        self.failures = Counter()
        self.n = 0
        self.n_leq = 0
        self.min = math.inf
        self.max = -math.inf
        self._sum = 0.
        self._mean = 0.
        self._m2 = 0.
        self._chunks: List[np.ndarray] = []
        self.sketch: Optional[TDigest] = None

    @property
    def count(self):
        return self.n + sum(self.failures.values())

    def add_failure(self, code, n=1):
        self.failures[code] += n

    def add(self, values):
        values = np.asarray(values, dtype=float).ravel()
        if len(values) == 0:
            return
        n_b = len(values)
        sum_b = math.fsum(values)
        mean_b = sum_b / n_b
        m2_b = math.fsum((values - mean_b)**2)
        self._combine_moments(n_b, sum_b, mean_b, m2_b)
        self.n_leq += int(np.count_nonzero(values <= self.benchmark))
        self.min = min(self.min, float(values.min()))
        self.max = max(self.max, float(values.max()))
        if self.sketch is None:
            self._chunks.append(values)
            if self.n > self.retention_cap:
                self._start_sketch()
        else:
            self._digest(values)

    def _digest(self, values):
        self.sketch = self.sketch + digest_of(values, self.sketch_compression)

    def _combine_moments(self, n_b, sum_b, mean_b, m2_b):
        n_a = self.n
        n = n_a + n_b
        delta = mean_b - self._mean
        self._mean += delta * n_b / n
        self._m2 += m2_b + delta**2 * n_a * n_b / n
        self._sum = math.fsum([self._sum, sum_b])
        self.n = n

    def _start_sketch(self):
        warnings.warn('More than {} values for {}: quantiles and histogram now come from a t-digest.'.format(
            self.retention_cap, self.param))
        self.sketch = digest_of(np.concatenate(self._chunks), self.sketch_compression)
        self._chunks = []

    def merge(self, other: 'SummaryAccumulator') -> 'SummaryAccumulator':
        """
        Fold another accumulator into this one.
        """
        self.failures.update(other.failures)
        if other.n == 0:
            return self
        self._combine_moments(other.n, other._sum, other._mean, other._m2)
        self.n_leq += other.n_leq
        self.min = min(self.min, other.min)
        self.max = max(self.max, other.max)
        if self.sketch is None and other.sketch is None:
            self._chunks.extend(other._chunks)
            if self.n > self.retention_cap:
                self._start_sketch()
            return self
        if self.sketch is None:
            self._start_sketch()
        if other.sketch is None:
            self._digest(np.concatenate(other._chunks))
        else:
            self.sketch = self.sketch + other.sketch
        return self

    def finalize(self) -> DistributionSummary:
        failures = {str(getattr(k, 'value', k)): int(v) for k, v in sorted(self.failures.items(),
                                                                           key=lambda kv: str(kv[0]))}
        base = dict(param=self.param, d1=self.d1, abs_applied=self.abs_applied, count=self.count,
                    failures=failures, benchmark=self.benchmark)
        if self.n == 0:
            return DistributionSummary(min=None, q25=None, median=None, q75=None, max=None, mean=None, sd=None,
                                       frac_leq_benchmark=None, histogram={'edges': [], 'counts': []}, **base)

        if self.sketch is None:
            values = np.concatenate(self._chunks)
            q25, median, q75 = (float(q) for q in np.quantile(values, [0.25, 0.5, 0.75]))
            mean = math.fsum(values) / self.n
            sd = math.sqrt(math.fsum((values - mean)**2) / self.n)
            counts, edges = histogram(values, self.min, self.max, self.bins)
            mode = 'exact'
        else:
            # digest quantiles are clipped to the exact extremes
            q25, median, q75 = (min(max(float(q), self.min), self.max)
                                for q in self.sketch.inverse_cdf([0.25, 0.5, 0.75]))
            mean = self._sum / self.n
            sd = math.sqrt(max(self._m2, 0.) / self.n)
            means, weights = digest_items(self.sketch)
            counts, edges = histogram(np.clip(means, self.min, self.max), self.min, self.max, self.bins,
                                      weights=weights)
            mode = 'sketch'

        return DistributionSummary(min=float(self.min), q25=q25, median=median, q75=q75, max=float(self.max),
                                   mean=float(mean), sd=float(sd), frac_leq_benchmark=self.n_leq / self.n,
                                   histogram={'edges': [float(e) for e in edges],
                                              'counts': [int(round(c)) for c in counts]},
                                   mode=mode, **base)


def summary_stats(values, param='value', d1=None, failures=None, **kwargs) -> DistributionSummary:
    """
    Summary of an array of values, or of a TDigest, for which only the quantiles and extremes are reported.
    """
    if isinstance(values, TDigest):
        means, weights = digest_items(values)
        n = int(round(float(np.sum(weights))))
        q = [float(v) for v in values.inverse_cdf([0.25, 0.5, 0.75])] if n else [None] * 3
        return DistributionSummary(param=param, d1=d1, abs_applied=False, count=n, failures={},
                                   min=float(means[0]) if n else None, q25=q[0], median=q[1], q75=q[2],
                                   max=float(means[-1]) if n else None, mean=None, sd=None,
                                   benchmark=kwargs.get('benchmark', 1.0), frac_leq_benchmark=None, mode='sketch')
    acc = SummaryAccumulator(param, d1=d1, **kwargs)
    acc.add(values)
    for code, n in (failures or {}).items():
        acc.add_failure(code, n)
    return acc.finalize()
