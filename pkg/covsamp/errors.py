"""
Exceptions raised by the covariate sampling package.

Date: October 2026

Every exception carries the exit code the command line front end returns
when it stops on it. Failures of a single sensitivity parameter on a single
mask are not exceptions, they are failure codes inside a ParamEval.
"""


class CovsampError(Exception):
    exit_code = 1


class ConfigError(CovsampError):
    exit_code = 2


class InvalidParameter(CovsampError, ValueError):
    exit_code = 2


class ParseError(CovsampError):
    exit_code = 2

    def __init__(self, row, column, value):
        self.row, self.column, self.value = row, column, value
        super().__init__('Could not parse value {!r} in row {} of column "{}" as a number.'.format(value, row, column))


class MissingColumn(CovsampError):
    exit_code = 2

    def __init__(self, column, path=None):
        self.column = column
        where = ' in {}'.format(path) if path else ''
        super().__init__('Column "{}" not found{}.'.format(column, where))


class InsufficientGrid(CovsampError):
    exit_code = 2


class SingularSubmatrix(CovsampError):
    exit_code = 3


class DegenerateTarget(CovsampError):
    exit_code = 3


class NotPositiveDefinite(CovsampError):
    exit_code = 3

    def __init__(self, min_eigenvalue, threshold, labels=None, hint=None):
        self.min_eigenvalue = min_eigenvalue
        self.threshold = threshold
        self.labels = labels
        msg = 'Covariance matrix is not positive definite: smallest eigenvalue {:.3e} <= {:.3e}.'.format(
            min_eigenvalue, threshold)
        if labels:
            msg += ' Check the variables {} for collinearity.'.format(', '.join(labels))
        if hint:
            msg += ' ' + hint
        super().__init__(msg)


class InternalConsistency(CovsampError):
    exit_code = 3


class EnumerationOverflow(CovsampError):
    exit_code = 4

    def __init__(self, k, d1, count, cap):
        self.k, self.d1, self.count, self.cap = k, d1, count, cap
        super().__init__('C({}, {}) = {} masks exceeds the enumeration cap of {}. '
                         'Use Monte Carlo sampling (covsamp sample) or raise the cap with --cap.'.format(k, d1, count, cap))


class DegenerateIndex(CovsampError):
    exit_code = 3
