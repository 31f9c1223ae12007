"""
Calibration of a population from a dataset: load a CSV, project fixed effects out of the role columns and treat the
sample covariance matrix as the population covariance.

Date: October 2026

Sample covariances use the n - 1 denominator, with no degrees of freedom correction for the fixed effects. Every
sensitivity parameter is a ratio, so the scale convention cancels.
"""

import json
import os
import warnings
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from covsamp import utils
from covsamp.errors import ConfigError, InvalidParameter, MissingColumn, NotPositiveDefinite, ParseError
from covsamp.projection import PD_TOLERANCE, CovarianceModel


STANDARDIZE_HINT = ('The check is relative to the largest variance, so columns on very different scales can fail '
                    'it too: consider standardizing them, which leaves every sensitivity parameter unchanged.')


@dataclass(frozen=True)
class DatasetSpec:
    path: str
    outcome: str
    treatment: str
    covariates: Tuple[str, ...]
    fixed_effects: Tuple[str, ...] = field(default=())
    weight: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, 'covariates', tuple(self.covariates))
        object.__setattr__(self, 'fixed_effects', tuple(self.fixed_effects or ()))
        if not self.covariates:
            raise InvalidParameter('The dataset needs at least one covariate column.')
        roles = [self.outcome, self.treatment, *self.covariates, *self.fixed_effects]
        if self.weight:
            roles.append(self.weight)
        if len(set(roles)) != len(roles):
            raise InvalidParameter('Outcome, treatment, covariate, fixed effect and weight columns must be distinct.')

    @property
    def role_columns(self):
        """Y, X and W columns in population order."""
        return [self.outcome, self.treatment, *self.covariates]

    @property
    def numeric_columns(self):
        return self.role_columns + ([self.weight] if self.weight else [])

    @classmethod
    def from_conf(cls, dataset_conf, path_resolver=None):
        missing = [key for key in ('path', 'outcome', 'treatment', 'covariates') if not dataset_conf.get(key)]
        if missing:
            raise ConfigError('The dataset configuration is missing {}.'.format(', '.join(missing)))
        path = dataset_conf['path']
        if path_resolver is not None:
            path = path_resolver(path)
        return cls(path=path, outcome=dataset_conf['outcome'], treatment=dataset_conf['treatment'],
                   covariates=tuple(dataset_conf['covariates']),
                   fixed_effects=tuple(dataset_conf.get('fixed_effects') or ()),
                   weight=dataset_conf.get('weight'))


def load_table(spec: DatasetSpec) -> pd.DataFrame:
    """
    Read the named columns of the dataset, keep complete rows and parse the numeric roles.

    Raises
    ------
    MissingColumn if a named column is not in the header.
    ParseError on the first non-numeric entry of a numeric role, with its 1-based data row.
    """
    if not os.path.isfile(spec.path):
        raise ConfigError('Dataset file {} does not exist.'.format(spec.path))
    try:
        df = pd.read_csv(spec.path, dtype=str, skipinitialspace=True, encoding='utf-8')
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise ConfigError('Could not read {} as CSV: {}'.format(spec.path, e))
    df.columns = [str(c).strip() for c in df.columns]

    for col in spec.numeric_columns + list(spec.fixed_effects):
        if col not in df.columns:
            raise MissingColumn(col, spec.path)
    df = df[list(spec.fixed_effects) + spec.numeric_columns].apply(lambda s: s.str.strip())
    df = df.replace('', np.nan)

    incomplete = df.isna().any(axis=1)
    if incomplete.any():
        warnings.warn('Dropped {} incomplete rows out of {} from {}.'.format(
            int(incomplete.sum()), len(df), spec.path))
    df = df.loc[~incomplete]

    for col in spec.numeric_columns:
        parsed = pd.to_numeric(df[col], errors='coerce')
        bad = parsed.isna() | ~np.isfinite(parsed.astype(float).fillna(0.))
        if bad.any():
            row = bad.idxmax()
            raise ParseError(int(row) + 1, col, df.at[row, col])
        df[col] = parsed.astype(float)

    if spec.weight and (df[spec.weight] < 0).any():
        raise InvalidParameter('Weights in column "{}" must be non-negative.'.format(spec.weight))
    df = df.reset_index(drop=True)
    print('Loaded {} complete rows from {}'.format(len(df), spec.path))
    return df


def project_out_fixed_effects(table: pd.DataFrame, fe_columns, columns=None, weight=None) -> pd.DataFrame:
    """
    Demean columns within the groups of the full interaction of the fixed effect columns.

    Parameters
    ----------
    table : pandas.DataFrame
    fe_columns : list of str
        Categorical columns. No columns leaves the table unchanged.
    columns : list of str
        Columns to demean. Defaults to every column that is not a fixed effect or the weight.
    weight : str, optional
        Weight column. Group means are then weighted means.
    """
    fe_columns = list(fe_columns or [])
    if not fe_columns:
        return table.copy()
    if columns is None:
        columns = [c for c in table.columns if c not in fe_columns and c != weight]
    columns = list(columns)

    groups = table.groupby(fe_columns, sort=False)
    sizes = groups[columns[0]].transform('size')
    n_single = int((sizes == 1).sum())
    if n_single:
        warnings.warn('{} fixed effect groups have a single row; their residualized values are exactly 0.'.format(
            n_single))

    out = table.copy()
    if weight is None:
        means = groups[columns].transform('mean')
    else:
        w = table[weight]
        weighted = table[columns].mul(w, axis=0)
        weighted[fe_columns] = table[fe_columns]
        w_sum = w.groupby([table[c] for c in fe_columns], sort=False).transform('sum')
        means = weighted.groupby(fe_columns, sort=False)[columns].transform('sum').div(w_sum, axis=0)
    out[columns] = table[columns] - means
    return out


def empirical_covariance(table: pd.DataFrame, spec: DatasetSpec, pd_tolerance: float = PD_TOLERANCE) -> CovarianceModel:
    """
    Sample covariance of (Y, X, W_1, ..., W_K) in DatasetSpec role order, checked for positive definiteness.
    """
    columns = spec.role_columns
    k = len(spec.covariates)
    if len(table) < k + 3:
        raise InvalidParameter('The covariance of {} variables needs at least {} complete rows, got {}.'.format(
            k + 2, k + 3, len(table)))
    data = table[columns].to_numpy(dtype=float)
    if spec.weight:
        weights = table[spec.weight].to_numpy(dtype=float)
        if not weights.sum() > 0:
            raise InvalidParameter('The weights sum to zero.')
        sigma = np.cov(data, rowvar=False, aweights=weights)
    else:
        sigma = np.cov(data, rowvar=False, ddof=1)
    try:
        return CovarianceModel.from_matrix(sigma, labels=columns, pd_tolerance=pd_tolerance)
    except NotPositiveDefinite as e:
        raise NotPositiveDefinite(e.min_eigenvalue, e.threshold, labels=e.labels, hint=STANDARDIZE_HINT) from e


def calibrate(spec: DatasetSpec, pd_tolerance: float = PD_TOLERANCE) -> CovarianceModel:
    """
    Full pipeline: load the table, project out the fixed effects and form the covariance model.
    """
    table = load_table(spec)
    if spec.fixed_effects:
        print('Projecting out the fixed effects {}'.format(', '.join(spec.fixed_effects)))
    table = project_out_fixed_effects(table, spec.fixed_effects, columns=spec.role_columns, weight=spec.weight)
    return empirical_covariance(table, spec, pd_tolerance=pd_tolerance)


def save_covariance(cov: CovarianceModel, path: str, extra: dict = None):
    """
    Write a covariance document ({labels, sigma} plus any extra sections) that `load_covariance` reads back.
    """
    doc = dict(extra or {})
    doc.update(labels=list(cov.labels), sigma=cov.sigma.tolist())
    utils.write_json(doc, path)


def load_covariance(path: str, pd_tolerance: float = PD_TOLERANCE) -> CovarianceModel:
    if not os.path.isfile(path):
        raise ConfigError('Population file {} does not exist.'.format(path))
    with open(path, 'r') as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError('Could not parse population file {}: {}'.format(path, e))
    if 'sigma' not in doc or 'labels' not in doc:
        raise ConfigError('Population file {} must contain "labels" and "sigma".'.format(path))
    return CovarianceModel.from_matrix(np.asarray(doc['sigma'], dtype=float), labels=doc['labels'],
                                       pd_tolerance=pd_tolerance)
