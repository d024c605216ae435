"""Finite-n moments: mean, second-moment matrix and occupation counts."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import gammaln

from ..model import DomainError, _check_dim, as_number, exact_memory, memory_to_a
from .gamma import gamma_ratio_an, rising_over_factorial, rising_over_factorial_series


@dataclass(frozen=True)
class MomentTable:
    """``E[S_n]`` and ``E[S_n S_n^T]`` for ``n = 1..N``.

    Arrays hold floats, or ``Fraction`` objects when built with ``exact=True``.
    """

    d: int
    ns: np.ndarray
    mean: np.ndarray
    second: np.ndarray
    exact: bool = False

    def row(self, n: int) -> tuple:
        i = int(n) - 1
        return self.mean[i], self.second[i]

    def __len__(self):
        return len(self.ns)


def _first_step_diag(d, q, one):
    """``E[S_1]`` along ``e_1`` and the diagonal of ``E[S_1 S_1^T]`` (= ``E[Sigma_1]``)."""
    if q is None:
        return 0 * one, [one / d] * d
    rest = (one - q) / (2 * d - 1)
    return q - rest, [q + rest] + [2 * rest] * (d - 1)


def _recurrence(n, d, p, q, one):
    """Diagonal second moments, ``E[Sigma_n]`` and mean along ``e_1``.

    Uses ``E[S_{k+1}S_{k+1}^T] = (1 + 2a/k) E[S_k S_k^T] + (a/k) E[Sigma_k]
    + (1-a)/d I`` with ``E[Sigma_{k+1}] = (1 + a/k) E[Sigma_k] + (1-a)/d I``.
    Under the uniform first step ``E[Sigma_k] = k/d I`` and the recursion
    collapses to ``(1 + 2a/k) E[S_k S_k^T] + I/d``, which is what runs then.
    """
    a = memory_to_a(d, p)
    m, diag = _first_step_diag(d, q, one)
    sigma = list(diag)
    means, seconds = [m], [list(diag)]
    inv_d = one / d
    drift = (1 - a) * inv_d
    for k in range(1, n):
        if q is None:
            diag = [(1 + 2 * a / k) * x + inv_d for x in diag]
        else:
            diag = [(1 + 2 * a / k) * x + a / k * s + drift for x, s in zip(diag, sigma)]
            sigma = [(1 + a / k) * s + drift for s in sigma]
        m = (1 + a / k) * m
        means.append(m)
        seconds.append(list(diag))
    return means, seconds


def exact_second_moment(n: int, d: int, p, q=None, exact: bool = False) -> MomentTable:
    """Moment table for steps ``1..n`` from the exact recurrence.

    With ``exact=True`` the recurrence runs in rationals (``p`` and ``q``
    are converted by :func:`merw.model.exact_memory`).
    """
    d = _check_dim(d)
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    n = int(n)
    if exact:
        one = Fraction(1)
        p = exact_memory(d, p)
        q = None if q is None else exact_memory(d, q)
        dtype = object
    else:
        one = 1.0
        p = float(as_number(p))
        q = None if q is None else float(as_number(q))
        dtype = float
    means, seconds = _recurrence(n, d, p, q, one)
    mean = np.zeros((n, d), dtype=dtype)
    second = np.zeros((n, d, d), dtype=dtype)
    if exact:
        mean[:] = Fraction(0)
        second[:] = Fraction(0)
    for i in range(n):
        mean[i, 0] = means[i]
        for j in range(d):
            second[i, j, j] = seconds[i][j]
    return MomentTable(d, np.arange(1, n + 1), mean, second, exact)


def second_moment_diag(n: int, d: int, p, q=None) -> np.ndarray:
    """Diagonal of ``E[S_n S_n^T]`` at a single ``n`` (float recurrence)."""
    _, seconds = _recurrence(int(n), _check_dim(d), float(as_number(p)),
                             None if q is None else float(as_number(q)), 1.0)
    return np.array(seconds[-1])


def closed_form_second_moment(n: int, d: int, a: float) -> float:
    """Diagonal entry of ``E[S_n S_n^T]`` under the uniform first step, ``a != 1/2``.

    ``n/(2a-1) * (Gamma(n+2a)/(Gamma(n+1)Gamma(2a)) - 1) / d``.
    """
    a = float(a)
    if a == 0.5:
        raise DomainError("closed form has a removable singularity at a = 1/2; use the recurrence")
    return n / (2 * a - 1) * (rising_over_factorial(2 * a, n) - 1) / d


def closed_form_series(N: int, d: int, a: float) -> np.ndarray:
    """:func:`closed_form_second_moment` for ``n = 1..N`` in one pass."""
    a = float(a)
    if a == 0.5:
        raise DomainError("closed form has a removable singularity at a = 1/2; use the recurrence")
    n = np.arange(1, N + 1, dtype=float)
    return n / (2 * a - 1) * (rising_over_factorial_series(2 * a, N) - 1) / d


def finite_L_second_moment(n: int, d: int, a: float) -> float:
    """Diagonal entry of ``E[L_n L_n^T]`` with ``L_n = a_n S_n / Gamma(a+1)``.

    ``n/(2a-1) (Gamma(n)/Gamma(n+a))^2 (Gamma(n+2a)/(Gamma(n+1)Gamma(2a)) - 1) / d``.
    Differs from ``E[S_n S_n^T]/n^{2a}`` by a relative ``O(1/n)``.
    """
    a = float(a)
    if a == 0.5:
        raise DomainError("a = 1/2 is excluded")
    ratio = (gamma_ratio_an(n, a) / math.exp(gammaln(a + 1))) ** 2
    return n / (2 * a - 1) * ratio * (rising_over_factorial(2 * a, n) - 1) / d


def expected_sigma(n: int, d: int, q=None) -> np.ndarray:
    """``E[Sigma_n] = (n/d) I_d`` under the uniform first step."""
    d = _check_dim(d)
    if q is not None:
        raise NotImplementedError("no occupation formula for the biased first step")
    return np.eye(d) * (n / d)


def conditional_eps_moments(state, d: int, p):
    """``E[|eps_{n+1}|^2 | F_n]`` and ``E[|eps_{n+1}|^4 | F_n]`` from a walk state.

    ``state`` needs ``position`` and ``counts`` (a :class:`DirectionCounts`).
    Rational ``p`` gives exact results.
    """
    n = state.counts.n
    if n < 1:
        raise DomainError("needs n >= 1")
    a = memory_to_a(d, p)
    g = a / n
    s2 = sum(x * x for x in state.position)
    ssig = sum(c * x * x for c, x in zip(state.counts.axis_counts(), state.position))
    m2 = 1 - g * g * s2
    m4 = (1 - 3 * g**4 * s2 * s2 - 2 * (1 - 2 * (1 - a) / d) * g * g * s2
          + 4 * a / n * g * g * ssig)
    return m2, m4
