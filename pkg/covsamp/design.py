"""
Design distribution of the observed covariates: masks, their exhaustive enumeration, uniform sampling, selection
regimes and finite population moments.

Date: October 2026

A mask is identified by the sorted tuple of its observed covariate indices. Masks with the same (K, d1) are ordered
lexicographically by that tuple, which is the order of itertools.combinations(range(K), d1). The position of a mask in
that order is its rank.
"""

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from math import comb
from typing import Iterator, Tuple

import numpy as np

from covsamp.errors import EnumerationOverflow, InvalidParameter


ENUMERATION_CAP = 10**9


class SelectionRegime(Enum):
    MORE_OBSERVED = 'MoreObserved'
    EQUAL_SELECTION = 'EqualSelection'
    MORE_UNOBSERVED = 'MoreUnobserved'


@dataclass(frozen=True)
class SelectionMask:
    """
    Observed/unobserved split of K covariates.
    """
    k: int
    observed: Tuple[int, ...]

    def __post_init__(self):
        obs = self.observed
        if any(b <= a for a, b in zip(obs, obs[1:])) or (obs and (obs[0] < 0 or obs[-1] >= self.k)):
            raise InvalidParameter('Observed indices must be sorted, distinct and within [0, {}).'.format(self.k))

    @classmethod
    def from_bits(cls, bits):
        bits = np.asarray(bits).astype(bool)
        return cls(k=len(bits), observed=tuple(int(i) for i in np.flatnonzero(bits)))

    @classmethod
    def from_string(cls, text):
        text = text.strip()
        if not text or set(text) - {'0', '1'}:
            raise InvalidParameter('A mask string must only contain the characters 0 and 1, got "{}".'.format(text))
        return cls.from_bits([c == '1' for c in text])

    @property
    def d1(self):
        return len(self.observed)

    @property
    def d2(self):
        return self.k - len(self.observed)

    @cached_property
    def bits(self):
        b = np.zeros(self.k, dtype=bool)
        b[list(self.observed)] = True
        return b

    @cached_property
    def observed_index(self):
        return np.asarray(self.observed, dtype=int)

    @cached_property
    def unobserved_index(self):
        return np.flatnonzero(~self.bits)

    def complement(self):
        return SelectionMask(k=self.k, observed=tuple(int(i) for i in self.unobserved_index))

    def to_string(self):
        return ''.join('1' if b else '0' for b in self.bits)


def check_design(k, d1):
    """
    Both sides of the split must be non-empty.
    """
    if k < 2 or not 1 <= d1 <= k - 1:
        raise InvalidParameter('The design needs 1 <= d1 <= K - 1, got K={} and d1={}.'.format(k, d1))


def count_masks(k, d1):
    return comb(k, d1)


def unrank_mask(k, d1, rank):
    """
    Mask at a given lexicographic rank among the C(k, d1) masks.
    """
    total = comb(k, d1)
    if not 0 <= rank < total:
        raise InvalidParameter('Rank {} is outside [0, {}).'.format(rank, total))
    observed = []
    x = 0
    for i in range(d1):
        remaining = d1 - i
        while True:
            block = comb(k - x - 1, remaining - 1)
            if rank < block:
                break
            rank -= block
            x += 1
        observed.append(x)
        x += 1
    return SelectionMask(k=k, observed=tuple(observed))


def rank_mask(mask):
    """
    Lexicographic rank of a mask, inverse of unrank_mask.
    """
    k, d1 = mask.k, mask.d1
    rank, prev = 0, -1
    for i, x in enumerate(mask.observed):
        remaining = d1 - i
        for y in range(prev + 1, x):
            rank += comb(k - y - 1, remaining - 1)
        prev = x
    return rank


def _advance(observed, k):
    """
    Next combination in lexicographic order, in place. Returns False after the last one.
    """
    d1 = len(observed)
    i = d1 - 1
    while i >= 0 and observed[i] == k - d1 + i:
        i -= 1
    if i < 0:
        return False
    observed[i] += 1
    for j in range(i + 1, d1):
        observed[j] = observed[j - 1] + 1
    return True


def enumerate_masks(k: int, d1: int, start: int = 0, stop: int = None,
                    cap: int = ENUMERATION_CAP) -> Iterator[SelectionMask]:
    """
    Lazily produce the masks of ranks [start, stop) in lexicographic order.

    Parameters
    ----------
    k, d1 : int
        Number of covariates and of observed covariates.
    start, stop : int
        Rank range. Defaults to every mask, so disjoint ranges can be handed to different workers.
    cap : int
        Largest C(k, d1) that may be enumerated.
    """
    check_design(k, d1)
    total = comb(k, d1)
    if total > cap:
        raise EnumerationOverflow(k, d1, total, cap)
    stop = total if stop is None else min(stop, total)
    return _walk(k, d1, start, stop)


def _walk(k, d1, start, stop):
    if start >= stop:
        return
    observed = list(unrank_mask(k, d1, start).observed)
    for _ in range(start, stop):
        yield SelectionMask(k=k, observed=tuple(observed))
        _advance(observed, k)


def draw_rng(seed, draw):
    """
    Generator of one Monte Carlo draw, derived from (seed, draw) only.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(draw,)))


def sample_mask(k: int, d1: int, rng: np.random.Generator) -> SelectionMask:
    """
    Uniform draw among the C(k, d1) masks, by a partial Fisher-Yates shuffle of the covariate indices.
    """
    check_design(k, d1)
    idx = np.arange(k)
    for i in range(d1):
        j = int(rng.integers(i, k))
        idx[i], idx[j] = idx[j], idx[i]
    return SelectionMask(k=k, observed=tuple(sorted(int(i) for i in idx[:d1])))


def inclusion_moment(k, d1, m):
    """
    P(S_i1 = ... = S_im = 1) for m distinct covariates.
    """
    if m > k:
        return 0.
    p = 1.
    for j in range(m):
        p *= (d1 - j) / (k - j)
    return max(p, 0.)


def inclusion_moments(k: int, d1: int) -> Tuple[float, float]:
    """
    E[S_i] and E[S_i S_j] (i != j).
    """
    check_design(k, d1)
    return d1 / k, d1 * (d1 - 1) / (k * (k - 1))


def finite_pop_variance(xi, d1: int) -> float:
    """
    Var_S(sum_i S_i xi_i) = d1 d2 / (K (K - 1)) sum_i (xi_i - mean(xi))^2.
    """
    xi = np.asarray(xi, dtype=float)
    k = len(xi)
    if k < 2:
        raise InvalidParameter('The finite population variance needs K >= 2.')
    if not 0 <= d1 <= k:
        raise InvalidParameter('d1 must lie in [0, K].')
    d2 = k - d1
    return float(d1 * d2 / (k * (k - 1)) * np.sum((xi - xi.mean())**2))


def double_sum_variance(a, d1):
    """
    Exact design variance of Q = sum_{i,j} S_i S_j A_ij for a symmetric matrix A.

    Q splits into the diagonal part L = sum_i S_i A_ii and the off-diagonal part M, and every moment of (L, M) is a
    combination of the inclusion moments of order one to four.
    """
    a = np.asarray(a, dtype=float)
    k = a.shape[0]
    p1, p2, p3, p4 = (inclusion_moment(k, d1, m) for m in (1, 2, 3, 4))

    diag = np.diag(a).copy()
    off = a - np.diag(diag)
    rows = off.sum(axis=1)
    s_diag, s_off = diag.sum(), off.sum()
    s_diag2 = np.sum(diag**2)
    s_ar = np.sum(diag * rows)
    s_r2 = np.sum(rows**2)
    s_b2 = np.sum(off**2)

    mean = p1 * s_diag + p2 * s_off
    e_ll = p1 * s_diag2 + p2 * (s_diag**2 - s_diag2)
    e_lm = 2 * p2 * s_ar + p3 * (s_diag * s_off - 2 * s_ar)
    e_mm = 2 * p2 * s_b2 + 4 * p3 * (s_r2 - s_b2) + p4 * (s_off**2 - 4 * s_r2 + 2 * s_b2)
    return float(max(e_ll + 2 * e_lm + e_mm - mean**2, 0.))


def classify_regime(d1: int, d2: int) -> SelectionRegime:
    if d1 < 1 or d2 < 1:
        raise InvalidParameter('Both d1 and d2 must be at least 1.')
    if d1 == d2:
        return SelectionRegime.EQUAL_SELECTION
    if d2 > d1:
        return SelectionRegime.MORE_UNOBSERVED
    return SelectionRegime.MORE_OBSERVED
