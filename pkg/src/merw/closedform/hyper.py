"""Unit-argument value of 3F2(1,1,1; a+1,a+1; 1), the limit of ``v_n`` for a > 1/2.

The series terms are ``t_k = (Gamma(a+1) Gamma(k+1) / Gamma(a+k+1))**2``. Log
convexity of Gamma brackets each term,

    Gamma(a+1)^2 Gamma(k+1)/Gamma(k+1+2a) <= t_k <= Gamma(a+1)^2 Gamma(k+1-a)/Gamma(k+1+a),

and both sides telescope, so the tail after ``N`` terms lies in

    [G Gamma(N+1)/Gamma(N+2a), G Gamma(N+1-a)/Gamma(N+a)] / (2a-1),   G = Gamma(a+1)^2.

The width of that bracket is ``O(N^{-2a})`` while the tail itself is
``O(N^{1-2a})``. The value returned is the partial sum plus the bracket
midpoint; the certified bound is the half-width plus a rounding allowance.
The partial sum is summed exactly (``fsum``) over the floating terms, so the
allowance only covers the per-term error of ``a_k^2``.
The bracket ends are evaluated in 30-digit arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from ..model import DomainError
from .gamma import an_chunks

_EPS = np.finfo(float).eps
# relative error allowance per term a_k^2: the compensated a_k is good to a
# few ulps; this leaves two orders of magnitude of headroom
TERM_RTOL = 256 * _EPS


class DivergenceError(DomainError):
    """The series diverges for the requested parameter."""


@dataclass(frozen=True)
class Hyper3F2:
    a: float
    value: float
    bound: float
    terms: int
    partial_sum: float
    tail_low: float
    tail_high: float

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return abs(x - self.value) <= self.bound + slack


def tail_bracket(N: int, a: float) -> tuple:
    """Lower and upper bounds of ``sum_{k >= N} t_k``; needs ``N > a - 1``."""
    if not a > 0.5:
        raise DivergenceError(f"series diverges for a <= 1/2, got {a}")
    if N + 1 - a <= 0:
        raise DomainError("tail bracket needs N > a - 1")
    with mpmath.workdps(30):
        A = mpmath.mpf(a)
        g2 = 2 * mpmath.loggamma(A + 1)
        low = mpmath.exp(g2 + mpmath.loggamma(N + 1) - mpmath.loggamma(N + 2 * A)) / (2 * A - 1)
        high = mpmath.exp(g2 + mpmath.loggamma(N + 1 - A) - mpmath.loggamma(N + A)) / (2 * A - 1)
        return float(low), float(high)


def hyper3f2_unit(a: float, tol: float = 1e-10, max_terms: int = 1 << 27) -> Hyper3F2:
    """Evaluate ``3F2(1,1,1; a+1,a+1; 1)`` with a certified error bound ``<= tol``."""
    a = float(a)
    if not a > 0.5:
        raise DivergenceError(f"3F2(1,1,1; a+1,a+1; 1) diverges for a <= 1/2, got {a}")
    if not tol > 0:
        raise DomainError("tol must be positive")
    blocks = []
    n = 0
    check = max(64, int(math.ceil(a)) + 1)
    # t_k = a_{k+1}^2, so the partial sum over k < N is v_N
    for chunk in an_chunks(max_terms, a, chunk=1 << 16):
        sq = chunk * chunk
        for lo in range(0, len(sq), 64):
            block = sq[lo:lo + 64]
            blocks.append(math.fsum(block))
            n += len(block)
            if n < check:
                continue
            partial = math.fsum(blocks)
            low, high = tail_bracket(n, a)
            rounding = TERM_RTOL * partial + 4 * _EPS * high
            bound = 0.5 * (high - low) + rounding
            if bound <= tol:
                return Hyper3F2(a, partial + 0.5 * (low + high), bound, n, partial, low, high)
            check = n * 2
    raise DomainError(f"no certified value within {max_terms} terms for a={a}, tol={tol}")
