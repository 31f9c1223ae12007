"""
Covariate sampling distributions: exact enumeration over every mask of a design or Monte Carlo draws of masks,
summarized per parameter; benchmark tables; convergence studies against the predicted limits.

Date: October 2026

Work is split into tasks of consecutive mask ranks (or draw indices). Tasks are handed to a multiprocessing pool and
their worker-local summaries are merged in task order, so the results do not depend on the number of workers.
"""

import math
from dataclasses import asdict, dataclass
from multiprocessing import Pool
from typing import Dict, List, Optional, Sequence

import pandas as pd
from tqdm import tqdm

from covsamp import dgp, limits
from covsamp.design import check_design, count_masks, draw_rng, enumerate_masks, sample_mask
from covsamp.errors import DegenerateIndex, EnumerationOverflow, InsufficientGrid, InvalidParameter
from covsamp.params import ABS_BY_DEFAULT, ParamId, evaluate_view, split
from covsamp.population import Population
from covsamp.projection import DEGENERATE_TOLERANCE
from covsamp.stats_utils import HISTOGRAM_BINS, RETENTION_CAP, SKETCH_COMPRESSION, DistributionSummary, \
    SummaryAccumulator


MIN_MARGIN = 0.02


@dataclass
class SamplingOptions:
    workers: int = 1
    chunk_size: int = 4096
    cap: int = 10**9
    abs: str = 'auto'
    benchmark: float = 1.0
    retention_cap: int = RETENTION_CAP
    sketch_compression: int = SKETCH_COMPRESSION
    bins: int = HISTOGRAM_BINS
    progress: bool = False
    progress_interval: float = 1.0
    audit_path: Optional[str] = None
    degenerate_tolerance: float = DEGENERATE_TOLERANCE

    @classmethod
    def from_conf(cls, conf, audit_path=None):
        engine = conf['engine']
        return cls(workers=engine['workers'], chunk_size=engine['chunk_size'], cap=engine['enumeration_cap'],
                   abs=conf['run']['abs'], benchmark=conf['run']['benchmark'],
                   retention_cap=engine['retention_cap'], sketch_compression=engine['sketch_compression'],
                   bins=engine['histogram_bins'], progress=engine['progress'],
                   progress_interval=engine['progress_interval'], audit_path=audit_path,
                   degenerate_tolerance=conf['numerics']['degenerate_tolerance'])


def abs_applied(pid: ParamId, mode: str = 'auto') -> bool:
    if mode == 'auto':
        return pid in ABS_BY_DEFAULT
    if mode in ('on', 'off'):
        return mode == 'on'
    raise InvalidParameter('abs must be "auto", "on" or "off", got "{}".'.format(mode))


# State shared by the tasks of one run. Set in each worker by the pool initializer.
_STATE = {}


def _init_worker(state):
    _STATE.clear()
    _STATE.update(state)


def _summarize_chunk(task):
    """
    Evaluate every parameter on a range of masks and return the worker-local summaries (and audit rows).
    """
    kind, k, d1, start, stop, seed = task
    pop, ids, opts = _STATE['pop'], _STATE['ids'], _STATE['opts']
    flags = [abs_applied(pid, opts.abs) for pid in ids]
    accs = [SummaryAccumulator(pid.value, d1=d1, abs_applied=flag, benchmark=opts.benchmark,
                               retention_cap=opts.retention_cap, sketch_compression=opts.sketch_compression,
                               bins=opts.bins)
            for pid, flag in zip(ids, flags)]
    values = [[] for _ in ids]
    rows = [] if opts.audit_path else None

    if kind == 'enumerate':
        masks = enumerate_masks(k, d1, start, stop, cap=math.inf)
    else:
        masks = (sample_mask(k, d1, draw_rng(seed, i)) for i in range(start, stop))

    for i, mask in zip(range(start, stop), masks):
        view = split(pop, mask, opts.degenerate_tolerance)
        row = {'index': i, 'mask': mask.to_string()} if rows is not None else None
        for j, pid in enumerate(ids):
            ev = evaluate_view(view, pid)
            if ev.ok:
                values[j].append(abs(ev.value) if flags[j] else ev.value)
            else:
                accs[j].add_failure(ev.failure.value)
            if row is not None:
                row[pid.value] = ev.value if ev.ok else ev.failure.value
        if rows is not None:
            rows.append(row)

    for acc, vals in zip(accs, values):
        acc.add(vals)
    return accs, rows


def _run(pop, ids, tasks, opts, desc):
    state = {'pop': pop, 'ids': ids, 'opts': opts}
    merged = None
    first_rows = True
    bar = dict(total=len(tasks), desc=desc, disable=not opts.progress, mininterval=opts.progress_interval)

    def consume(results):
        nonlocal merged, first_rows
        for accs, rows in tqdm(results, **bar):
            if merged is None:
                merged = accs
            else:
                for acc, other in zip(merged, accs):
                    acc.merge(other)
            if rows:
                pd.DataFrame(rows).to_csv(opts.audit_path, mode='w' if first_rows else 'a', header=first_rows,
                                          index=False)
                first_rows = False

    if opts.workers > 1 and len(tasks) > 1:
        with Pool(min(opts.workers, len(tasks)), initializer=_init_worker, initargs=(state,)) as p:
            consume(p.imap(_summarize_chunk, tasks))
    else:
        _init_worker(state)
        consume(map(_summarize_chunk, tasks))
    return [acc.finalize() for acc in merged]


def _ranges(total, chunk_size):
    return [(start, min(start + chunk_size, total)) for start in range(0, total, chunk_size)]


def exact_distribution(pop: Population, d1: int, ids: Sequence[ParamId],
                       opts: SamplingOptions = None) -> List[DistributionSummary]:
    """
    Summaries of every parameter over all C(K, d1) masks, each mask visited once.

    Parameters
    ----------
    pop : Population
    d1 : int
        Number of observed covariates.
    ids : sequence of ParamId
    opts : SamplingOptions

    Raises
    ------
    EnumerationOverflow when C(K, d1) exceeds opts.cap.
    """
    opts = opts or SamplingOptions()
    ids = list(ids)
    k = pop.k
    check_design(k, d1)
    total = count_masks(k, d1)
    if total > opts.cap:
        raise EnumerationOverflow(k, d1, total, opts.cap)
    if not ids:
        return []
    tasks = [('enumerate', k, d1, start, stop, None) for start, stop in _ranges(total, opts.chunk_size)]
    return _run(pop, ids, tasks, opts, desc='enumerate d1={}'.format(d1))


def monte_carlo_distribution(pop: Population, d1: int, ids: Sequence[ParamId], n_draws: int, seed: int,
                             opts: SamplingOptions = None) -> List[DistributionSummary]:
    """
    Summaries over n_draws uniform random masks. Draw i only depends on (seed, i).
    """
    opts = opts or SamplingOptions()
    ids = list(ids)
    check_design(pop.k, d1)
    if n_draws < 1:
        raise InvalidParameter('n_draws must be at least 1.')
    if not ids:
        return []
    tasks = [('sample', pop.k, d1, start, stop, seed) for start, stop in _ranges(n_draws, opts.chunk_size)]
    return _run(pop, ids, tasks, opts, desc='sample d1={}'.format(d1))


def benchmark_table(summaries: Sequence[DistributionSummary]) -> pd.DataFrame:
    """
    Fraction of masks at or below the benchmark, one row per parameter and one column per d1.
    """
    if not summaries:
        return pd.DataFrame()
    df = pd.DataFrame([{'param': s.param, 'd1': s.d1, 'frac_leq_benchmark': s.frac_leq_benchmark}
                       for s in summaries])
    order = list(dict.fromkeys(df['param']))
    table = df.pivot(index='param', columns='d1', values='frac_leq_benchmark').reindex(order)
    return table[sorted(table.columns, reverse=True)]


def summary_table(summaries: Sequence[DistributionSummary]) -> pd.DataFrame:
    """
    One row per (param, d1) with the summary statistics, in a stable column order.
    """
    columns = ['param', 'd1', 'abs_applied', 'count', 'failures', 'min', 'q25', 'median', 'q75', 'max', 'mean',
               'sd', 'benchmark', 'frac_leq_benchmark', 'mode']
    rows = []
    for s in summaries:
        row = {c: getattr(s, c) for c in columns if c != 'failures'}
        row['failures'] = sum(s.failures.values())
        rows.append(row)
    return pd.DataFrame(rows, columns=columns)


def predict_limit(spec: dgp.DgpSpec, k: int, r: float, pid: ParamId) -> limits.LimitPrediction:
    """
    Predicted large-K value of one parameter for a synthetic spec, using the c and d constants at finite K.
    """
    inputs = {'k': k, 'structure': spec.structure.kind}
    try:
        c_pi, c_gamma = dgp.c_constants(spec, k)
    except DegenerateIndex:
        c_pi = c_gamma = None
    inputs.update(c_pi=c_pi, c_gamma=c_gamma)
    value = None

    if pid is ParamId.RX and c_pi is not None:
        value = limits.limit_r_x(r, c_pi)
    elif pid is ParamId.RY and c_gamma is not None:
        value = limits.limit_r_y(r, c_gamma)
    elif pid is ParamId.DELTA_ORIG and c_gamma is not None:
        value = limits.limit_delta_orig(r, c_gamma)
    elif pid is ParamId.DELTA_ACET and c_gamma is not None and c_gamma > 0:
        value = limits.limit_delta_acet()
    elif pid is ParamId.KX and isinstance(spec.structure, dgp.ExchangeableShrink):
        d_pi, _ = dgp.d_constants(spec, k)
        inputs.update(alpha=spec.structure.alpha, d_ex=d_pi)
        value = limits.limit_k_x(r, spec.structure.alpha, d_pi)
    elif pid is ParamId.DELTA_RESID:
        pi = dgp.build_coefficients(spec.pi_rule, k, 'pi', spec.structure)
        gamma = dgp.build_coefficients(spec.gamma_rule, k, 'gamma', spec.structure)
        try:
            expression = limits.delta_resid_finite_k(pi, gamma, r)
        except DegenerateIndex:
            expression = None
        inputs['delta_resid_finite_k'] = expression
        if isinstance(spec.structure, dgp.Exchangeable):
            value = expression
    return limits.LimitPrediction(param=pid.value, r=float(r), inputs=inputs, value=value)


def limit_report(spec: dgp.DgpSpec, k: int, r_grid: Sequence[float], ids: Sequence[ParamId]) -> List[dict]:
    """
    Predicted limits over an r grid and the property verdicts of every predicted limit curve.
    """
    report = []
    for pid in ids:
        predictions = [predict_limit(spec, k, r, pid) for r in r_grid]
        entry = {'param': pid.value, 'predictions': [p.to_dict() for p in predictions], 'properties': None}
        if all(p.value is not None for p in predictions):
            try:
                entry['properties'] = limits.property_check(lambda r: predict_limit(spec, k, r, pid).value, r_grid)
            except InsufficientGrid:
                pass
        report.append(entry)
    return report


@dataclass
class ConvergencePoint:
    param: str
    k: int
    d1: int
    r: float
    r_realized: float
    n_ok: int
    mc_mean: Optional[float]
    mc_sd: Optional[float]
    mc_median: Optional[float]
    predicted_limit: Optional[float]
    abs_gap: Optional[float]

    def to_dict(self):
        return asdict(self)


def design_d1(k: int, r: float) -> int:
    """
    d1 = round(K / (1 + r)), kept inside [1, K - 1].
    """
    if not r > 0:
        raise InvalidParameter('The selection ratio r must be positive, got {}.'.format(r))
    return min(max(int(round(k / (1 + r))), 1), k - 1)


def convergence_study(spec: dgp.DgpSpec, k_grid: Sequence[int], r: float, ids: Sequence[ParamId], n_draws: int,
                      seed: int, opts: SamplingOptions = None) -> List[ConvergencePoint]:
    """
    Monte Carlo means along a K grid next to the predicted limits at the realized ratio d2 / d1.
    """
    opts = opts or SamplingOptions()
    ids = list(ids)
    points = []
    for k in k_grid:
        d1 = design_d1(k, r)
        r_realized = (k - d1) / d1
        pop = dgp.assemble_population(spec, k)
        summaries = monte_carlo_distribution(pop, d1, ids, n_draws, seed, opts)
        for pid, s in zip(ids, summaries):
            predicted = predict_limit(spec, k, r_realized, pid).value
            gap = abs(s.mean - predicted) if (s.mean is not None and predicted is not None) else None
            points.append(ConvergencePoint(param=pid.value, k=k, d1=d1, r=float(r), r_realized=r_realized,
                                           n_ok=s.n_ok, mc_mean=s.mean, mc_sd=s.sd, mc_median=s.median,
                                           predicted_limit=predicted, abs_gap=gap))
    return points


def empirical_property_report(points: Sequence[ConvergencePoint]) -> Dict[str, dict]:
    """
    Empirical consistency and monotonicity in selection of every parameter, judged at the largest K.

    A mean counts as different from 1 when it is more than max(3 sd / sqrt(n), 0.02) away from it.
    """
    by_param = {}
    for p in points:
        by_param.setdefault(p.param, []).append(p)

    report = {}
    for param, pts in by_param.items():
        ks = sorted({p.k for p in pts})
        if len(ks) < 2:
            raise InsufficientGrid('{} needs at least two values of K, got {}.'.format(param, ks))
        top = [p for p in pts if p.k == ks[-1] and p.mc_mean is not None]
        rs = {p.r for p in top}
        if not (any(r < 1 for r in rs) and 1. in rs and any(r > 1 for r in rs)):
            raise InsufficientGrid('{} needs points at r < 1, r = 1 and r > 1, got {}.'.format(param, sorted(rs)))

        def margin(p):
            return max(3 * p.mc_sd / math.sqrt(p.n_ok), MIN_MARGIN)

        consistent = all(abs(p.mc_mean - 1) <= margin(p) for p in top if p.r == 1.)
        monotone = all((p.mc_mean > 1 + margin(p)) if p.r > 1 else (p.mc_mean < 1 - margin(p))
                       for p in top if p.r != 1.)
        report[param] = {'k': ks[-1],
                         'consistent': bool(consistent),
                         'monotone_in_selection': bool(monotone),
                         'means': {str(p.r): p.mc_mean for p in sorted(top, key=lambda p: p.r)},
                         'margins': {str(p.r): margin(p) for p in sorted(top, key=lambda p: p.r)}}
    return report

