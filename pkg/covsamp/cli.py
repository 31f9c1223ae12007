"""
Command line front end of the covariate sampling application.

Date: October 2026

Usage
-----
covsamp enumerate    [--config FILE] [--d1 LIST] [--params LIST] ...   exact distributions over every mask
covsamp sample       [--config FILE] [--n-draws N] [--seed S] ...       Monte Carlo distributions
covsamp evaluate     MASK [--population FILE]                          every parameter on one mask
covsamp limits       [--config FILE]                                   predicted large-K limits and their properties
covsamp convergence  [--k-grid LIST] [--r-grid LIST]                   Monte Carlo means against the predicted limits
covsamp calibrate    --config FILE                                     population covariance from a CSV dataset
covsamp validate-dgp [--k-grid LIST]                                   large-K assumption diagnostics
covsamp show-config  [--full]                                          merged configuration

Exit codes: 0 success, 2 configuration or input error, 3 numerical error, 4 resource cap.
"""

import argparse
import functools
import os
import sys
import time
import warnings

import pandas as pd

from covsamp import config, data_utils, dgp, paths, sampling, utils
from covsamp.design import SelectionMask, check_design, classify_regime
from covsamp.errors import ConfigError, CovsampError
from covsamp.params import NON_CANONICAL, evaluate, parse_params
from covsamp.population import beta_medium, derive_population, ovb, population_summary


LAMBDA_NOTE = ('LambdaKrauth is defined in the literature for scalar controls; it is evaluated here with the gamma '
               'indices of the observed and unobserved covariates.')


def catch_error(f):
    """
    Turn package errors into an "error: ..." line on stderr and the mapped exit code.
    """
    @functools.wraps(f)
    def wrap(*args, **kwargs):
        try:
            f(*args, **kwargs)
        except CovsampError as e:
            print('error: {}'.format(e), file=sys.stderr)
            return e.exit_code
        return 0
    return wrap


def _list_of(item_type):
    def parse(text):
        try:
            return [item_type(v) for v in text.split(',') if v.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError('"{}" is not a comma separated list of {}.'.format(
                text, item_type.__name__))
    return parse


def build_conf(args):
    """
    Merge the schema defaults, the --config file and the command line flags (in that order of precedence).

    Returns
    -------
    Flat configuration dict {group: {key: value}}.
    """
    conf = config.CONF
    if getattr(args, 'config', None):
        conf = config.update_conf(conf, config.load_user_conf(args.config))

    overrides = {}

    def put(group, key, value):
        if value is not None:
            overrides.setdefault(group, {})[key] = value

    put('run', 'seed', getattr(args, 'seed', None))
    put('run', 'params', getattr(args, 'params', None))
    put('run', 'd1', getattr(args, 'd1', None))
    put('run', 'abs', getattr(args, 'abs', None))
    put('run', 'n_draws', getattr(args, 'n_draws', None))
    put('run', 'mask', getattr(args, 'mask', None))
    put('engine', 'workers', getattr(args, 'workers', None))
    put('engine', 'enumeration_cap', getattr(args, 'cap', None))
    put('dataset', 'population', getattr(args, 'population', None))
    put('dgp', 'k', getattr(args, 'k', None))
    if getattr(args, 'audit', False):
        put('engine', 'audit', True)
    if getattr(args, 'no_progress', False):
        put('engine', 'progress', False)
    if getattr(args, 'r_grid', None) is not None:
        put('convergence', 'r_grid', args.r_grid)
    if getattr(args, 'k_grid', None) is not None:
        put('validation' if args.command == 'validate-dgp' else 'convergence', 'k_grid', args.k_grid)

    conf = config.update_conf(conf, overrides)
    return config.conf_dict(conf)


def start_run(command, args, conf):
    """
    Point the paths module at this run and create its output directory.
    """
    paths.CONF = conf
    paths.command = command
    paths.out_dir = getattr(args, 'out', None)
    utils.create_dir_tree()
    utils.save_conf(conf)
    print('Output directories:')
    paths.print_dirs()


def load_population(conf):
    """
    The calibrated population given by dataset.population, or else the synthetic dgp population.
    """
    tol = conf['numerics']
    if conf['dataset']['population']:
        path = paths.resolve(conf['dataset']['population'])
        print('Loading population covariance from {}'.format(path))
        cov = data_utils.load_covariance(path, pd_tolerance=tol['pd_tolerance'])
        return derive_population(cov, degenerate_tolerance=tol['degenerate_tolerance'])
    spec = dgp.DgpSpec.from_conf(conf['dgp'])
    print('Building the {} population with K={}'.format(spec.structure.kind, conf['dgp']['k']))
    return dgp.assemble_population(spec, conf['dgp']['k'])


def selected_params(conf):
    ids = parse_params(conf['run']['params'])
    if not ids:
        raise ConfigError('No parameters selected.')
    if NON_CANONICAL & set(ids):
        warnings.warn(LAMBDA_NOTE)
    return ids


def d1_values(conf, k):
    values = conf['run']['d1'] or [k // 2]
    for d1 in values:
        check_design(k, d1)
    return values


def _notes(ids):
    return [LAMBDA_NOTE] if NON_CANONICAL & set(ids) else []


def _distribution_command(command, args, sampler):
    started = utils.now()
    conf = build_conf(args)
    start_run(command, args, conf)
    pop = load_population(conf)
    ids = selected_params(conf)
    d1_list = d1_values(conf, pop.k)

    summaries = []
    t0 = time.time()
    for d1 in d1_list:
        audit = os.path.join(paths.get_timestamped_dir(), 'audit_d1-{}.csv'.format(d1)) \
            if conf['engine']['audit'] else None
        opts = sampling.SamplingOptions.from_conf(conf, audit_path=audit)
        print('Processing d1={} ({}) ...'.format(d1, classify_regime(d1, pop.k - d1).value))
        summaries.extend(sampler(pop, d1, ids, conf, opts))
    print('Done in {:.1f} s'.format(time.time() - t0))

    ts_dir = paths.get_timestamped_dir()
    meta = utils.run_metadata(command, seed=conf['run']['seed'], workers=conf['engine']['workers'],
                              started=started, notes=_notes(ids))
    utils.write_summary_document(os.path.join(ts_dir, 'summaries.json'), meta, conf, summaries,
                                 population=population_summary(pop))
    utils.write_histogram_csv(os.path.join(ts_dir, 'histograms.csv'), summaries)
    utils.write_table_csv(os.path.join(ts_dir, 'summary_table.csv'), sampling.summary_table(summaries))
    utils.write_table_csv(os.path.join(ts_dir, 'benchmark_table.csv'), sampling.benchmark_table(summaries), index=True)

    print(sampling.summary_table(summaries).drop(columns=['benchmark', 'mode']).to_string(index=False))
    return summaries


@catch_error
def cmd_enumerate(args):
    def sampler(pop, d1, ids, conf, opts):
        return sampling.exact_distribution(pop, d1, ids, opts)
    _distribution_command('enumerate', args, sampler)


@catch_error
def cmd_sample(args):
    def sampler(pop, d1, ids, conf, opts):
        return sampling.monte_carlo_distribution(pop, d1, ids, conf['run']['n_draws'], conf['run']['seed'], opts)
    _distribution_command('sample', args, sampler)


@catch_error
def cmd_evaluate(args):
    conf = build_conf(args)
    if not conf['run']['mask']:
        raise ConfigError('No mask given.')
    pop = load_population(conf)
    mask = SelectionMask.from_string(conf['run']['mask'])
    ids = parse_params(['all']) if args.params is None else selected_params(conf)
    if mask.k != pop.k:
        raise ConfigError('The mask has {} entries for {} covariates.'.format(mask.k, pop.k))
    check_design(pop.k, mask.d1)

    evals = evaluate(pop, mask, ids, degenerate_tolerance=conf['numerics']['degenerate_tolerance'])
    print('{:<15}{:>20}'.format('param', 'value'))
    print('=' * 35)
    for ev in evals:
        print('{:<15}{:>20}'.format(ev.id.value, '{:.10g}'.format(ev.value) if ev.ok else ev.failure.value))
    print('-' * 35)
    print('{:<15}{:>20.10g}'.format('beta_medium', beta_medium(pop, mask)))
    print('{:<15}{:>20.10g}'.format('ovb', ovb(pop, mask)))

    if args.out:
        paths.out_dir = args.out
        paths.CONF = conf
        os.makedirs(args.out, exist_ok=True)
        doc = {'meta': utils.run_metadata('evaluate', workers=1, notes=_notes(ids)),
               'config': conf,
               'mask': mask.to_string(),
               'values': [{'param': ev.id.value, 'value': ev.value,
                           'failure': ev.failure.value if ev.failure else None} for ev in evals],
               'beta_medium': beta_medium(pop, mask),
               'ovb': ovb(pop, mask)}
        utils.write_json(doc, os.path.join(args.out, 'evaluate.json'))


@catch_error
def cmd_limits(args):
    started = utils.now()
    conf = build_conf(args)
    start_run('limits', args, conf)
    spec = dgp.DgpSpec.from_conf(conf['dgp'])
    k = conf['dgp']['k']
    ids = selected_params(conf)
    r_grid = conf['convergence']['r_grid']
    if any(r <= 0 for r in r_grid):
        raise ConfigError('Every r in the grid must be positive.')

    report = sampling.limit_report(spec, k, r_grid, ids)
    print('{:<15}{}'.format('param', ''.join('{:>12}'.format('r={:g}'.format(r)) for r in r_grid)))
    print('=' * (15 + 12 * len(r_grid)))
    for entry in report:
        cells = ['{:>12.6f}'.format(p['value']) if p['value'] is not None else '{:>12}'.format('-')
                 for p in entry['predictions']]
        props = entry['properties']
        verdict = '' if props is None else '  consistent={consistent} monotone={monotone_in_selection}'.format(**props)
        print('{:<15}{}{}'.format(entry['param'], ''.join(cells), verdict))

    try:
        c_pi, c_gamma = dgp.c_constants(spec, k)
    except CovsampError:
        c_pi = c_gamma = None
    try:
        d_pi, d_gamma = dgp.d_constants(spec, k)
    except CovsampError:
        d_pi = d_gamma = None
    constants = {'k': k, 'c_pi': c_pi, 'c_gamma': c_gamma, 'd_pi': d_pi, 'd_gamma': d_gamma}
    print('Constants at K={}: {}'.format(k, constants))

    meta = utils.run_metadata('limits', started=started, notes=_notes(ids))
    utils.write_json({'meta': meta, 'config': conf, 'dgp': spec.to_dict(), 'constants': constants,
                      'limits': report},
                     os.path.join(paths.get_timestamped_dir(), 'limits.json'))


@catch_error
def cmd_convergence(args):
    started = utils.now()
    conf = build_conf(args)
    start_run('convergence', args, conf)
    spec = dgp.DgpSpec.from_conf(conf['dgp'])
    ids = selected_params(conf)
    k_grid = sorted(conf['convergence']['k_grid'])
    r_grid = conf['convergence']['r_grid']
    if any(r <= 0 for r in r_grid):
        raise ConfigError('Every r in the grid must be positive.')
    opts = sampling.SamplingOptions.from_conf(conf)

    points = []
    for r in r_grid:
        print('Convergence study at r={} over K={}'.format(r, k_grid))
        points.extend(sampling.convergence_study(spec, k_grid, r, ids, conf['run']['n_draws'], conf['run']['seed'],
                                                 opts))
    ts_dir = paths.get_timestamped_dir()
    table = pd.DataFrame([p.to_dict() for p in points])
    utils.write_table_csv(os.path.join(ts_dir, 'convergence.csv'), table)
    print(table.to_string(index=False))

    verdicts = sampling.empirical_property_report(points)
    for param, v in verdicts.items():
        print('{:<15} consistent={} monotone={}'.format(param, v['consistent'], v['monotone_in_selection']))

    meta = utils.run_metadata('convergence', seed=conf['run']['seed'], workers=conf['engine']['workers'],
                              started=started, notes=_notes(ids))
    utils.write_json({'meta': meta, 'config': conf, 'dgp': spec.to_dict(),
                      'points': [p.to_dict() for p in points], 'verdicts': verdicts},
                     os.path.join(ts_dir, 'convergence.json'))


@catch_error
def cmd_calibrate(args):
    started = utils.now()
    conf = build_conf(args)
    start_run('calibrate', args, conf)
    spec = data_utils.DatasetSpec.from_conf(conf['dataset'], path_resolver=paths.resolve)
    cov = data_utils.calibrate(spec, pd_tolerance=conf['numerics']['pd_tolerance'])
    pop = derive_population(cov, degenerate_tolerance=conf['numerics']['degenerate_tolerance'])
    summary = population_summary(pop)
    for key, value in summary.items():
        print('{:<20}{}'.format(key, value))

    out_path = os.path.join(paths.get_timestamped_dir(), 'population.json')
    data_utils.save_covariance(cov, out_path, extra={'meta': utils.run_metadata('calibrate', started=started),
                                                     'config': conf, 'population': summary})
    print('Population written to {}. Pass it to enumerate, sample or evaluate with --population.'.format(out_path))


@catch_error
def cmd_validate_dgp(args):
    started = utils.now()
    conf = build_conf(args)
    start_run('validate-dgp', args, conf)
    spec = dgp.DgpSpec.from_conf(conf['dgp'])
    val = conf['validation']
    report = dgp.validate_assumptions(spec, val['k_grid'], var_bound=val['var_bound'], r=val['r'])
    for check, passed in report.checks.items():
        print('{:<25}{}'.format(check, 'pass' if passed else 'FAIL'))
    utils.write_json({'meta': utils.run_metadata('validate-dgp', started=started), 'config': conf,
                      'dgp': spec.to_dict(), 'report': report.to_dict()},
                     os.path.join(paths.get_timestamped_dir(), 'assumptions.json'))


@catch_error
def cmd_show_config(args):
    conf = config.CONF
    if args.config:
        conf = config.update_conf(conf, config.load_user_conf(args.config))
    if args.full:
        config.print_full_conf(conf)
    else:
        config.print_conf_table(config.conf_dict(conf))


def _add_shared(parser, distribution=False):
    parser.add_argument('--config', help='YAML file with {group: {key: value}} overrides.')
    parser.add_argument('--out', help='Output directory (defaults to a timestamped folder).')
    parser.add_argument('--params', type=_list_of(str), help='Comma separated parameter names, or "all".')
    parser.add_argument('--k', type=int, help='Number of covariates of the synthetic population.')
    parser.add_argument('--no-progress', action='store_true', help='Hide the progress bar.')
    if distribution:
        parser.add_argument('--seed', type=int, help='Seed of the Monte Carlo draws.')
        parser.add_argument('--workers', type=int, help='Number of worker processes.')
        parser.add_argument('--d1', type=_list_of(int), help='Comma separated numbers of observed covariates.')
        parser.add_argument('--abs', choices=['auto', 'on', 'off'], help='Absolute values before summarizing.')
        parser.add_argument('--cap', type=int, help='Largest number of masks an enumeration may visit.')
        parser.add_argument('--population', help='Covariance document written by covsamp calibrate.')
        parser.add_argument('--n-draws', dest='n_draws', type=int, help='Number of Monte Carlo draws.')
        parser.add_argument('--audit', action='store_true', help='Write one CSV row per mask.')


def get_parser():
    parser = argparse.ArgumentParser(prog='covsamp', description='Covariate sampling distributions of '
                                     'sensitivity parameters.')
    sub = parser.add_subparsers(dest='command', required=True)

    for name, func, text in (('enumerate', cmd_enumerate, 'Exact distributions over every mask.'),
                             ('sample', cmd_sample, 'Monte Carlo distributions.'),
                             ('convergence', cmd_convergence, 'Monte Carlo means against the predicted limits.')):
        p = sub.add_parser(name, help=text)
        _add_shared(p, distribution=True)
        p.set_defaults(func=func)
        if name == 'convergence':
            p.add_argument('--k-grid', dest='k_grid', type=_list_of(int), help='Comma separated values of K.')
            p.add_argument('--r-grid', dest='r_grid', type=_list_of(float), help='Comma separated values of r.')

    p = sub.add_parser('evaluate', help='Every parameter on one mask.')
    p.add_argument('mask', help='String of K characters 0/1, 1 = observed.')
    _add_shared(p)
    p.add_argument('--population', help='Covariance document written by covsamp calibrate.')
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser('limits', help='Predicted large-K limits and their properties.')
    _add_shared(p)
    p.add_argument('--r-grid', dest='r_grid', type=_list_of(float), help='Comma separated values of r.')
    p.set_defaults(func=cmd_limits)

    p = sub.add_parser('calibrate', help='Population covariance from a CSV dataset.')
    _add_shared(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser('validate-dgp', help='Large-K assumption diagnostics of the synthetic population.')
    _add_shared(p)
    p.add_argument('--k-grid', dest='k_grid', type=_list_of(int), help='Comma separated increasing values of K.')
    p.set_defaults(func=cmd_validate_dgp)

    p = sub.add_parser('show-config', help='Print the merged configuration.')
    p.add_argument('--config', help='YAML file with {group: {key: value}} overrides.')
    p.add_argument('--full', action='store_true', help='Print the schema with help texts.')
    p.set_defaults(func=cmd_show_config)
    return parser


def main(argv=None):
    args = get_parser().parse_args(argv)
    return args.func(args)


if __name__ == '__main__':
    sys.exit(main())
