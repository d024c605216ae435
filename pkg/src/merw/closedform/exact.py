"""Exhaustive rational-arithmetic laws of the walk for small ``n``.

:func:`iter_exact_laws` runs the forward recursion on direction-count states
with :func:`merw.model.step_distribution`. :func:`full_engine_law` instead
enumerates whole step histories together with every (memory index, matrix)
pair of the history-based step rule, then projects onto counts. The two
share no transition code beyond the model primitives, so their agreement
checks the reduction of the step rule to direction counts.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from math import comb

from ..model import (
    DirectionCounts,
    DomainError,
    SignedDirection,
    _check_dim,
    apply_matrix,
    exact_memory,
    first_step_distribution,
    matrix_table,
    memory_to_a,
    step_distribution,
)

DEFAULT_MAX_N = {1: 20, 2: 12}


class BudgetExceeded(RuntimeError):
    """Enumeration would exceed its state budget."""

    def __init__(self, required: int, budget: int):
        super().__init__(f"enumeration needs {required} count states, budget is {budget}")
        self.required = required
        self.budget = budget


def state_count(n: int, d: int) -> int:
    """Number of ``2d``-compositions of ``n``."""
    return comb(n + 2 * d - 1, 2 * d - 1)


def default_budget(d: int) -> int:
    return state_count(DEFAULT_MAX_N.get(d, 6), d)


def exact_an(n: int, a: Fraction) -> Fraction:
    """``a_n`` as an exact rational for rational ``a``."""
    val = Fraction(1)
    for k in range(1, n):
        val *= Fraction(k) / (k + a)
    return val


@dataclass(frozen=True)
class ExactLaw:
    n: int
    d: int
    p: Fraction
    q: Fraction | None
    probs: dict

    def total(self) -> Fraction:
        return sum(self.probs.values(), Fraction(0))

    def mean(self) -> list:
        out = [Fraction(0)] * self.d
        for counts, pr in self.probs.items():
            for i, s in enumerate(DirectionCounts(counts).position()):
                out[i] += pr * s
        return out

    def second_moment(self) -> list:
        d = self.d
        out = [[Fraction(0)] * d for _ in range(d)]
        for counts, pr in self.probs.items():
            pos = DirectionCounts(counts).position()
            for i in range(d):
                if pos[i]:
                    for j in range(d):
                        out[i][j] += pr * pos[i] * pos[j]
        return out

    def expected_sigma(self) -> list:
        out = [Fraction(0)] * self.d
        for counts, pr in self.probs.items():
            for i, c in enumerate(DirectionCounts(counts).axis_counts()):
                out[i] += pr * c
        return out

    def expected_M_norm2(self) -> Fraction:
        a = memory_to_a(self.d, self.p)
        an = exact_an(self.n, a)
        tr = sum((self.second_moment()[i][i] for i in range(self.d)), Fraction(0))
        return an * an * tr

    def position_law(self) -> dict:
        out = defaultdict(Fraction)
        for counts, pr in self.probs.items():
            out[DirectionCounts(counts).position()] += pr
        return dict(out)


def _resolve(d, p, q):
    d = _check_dim(d)
    return d, exact_memory(d, p), None if q is None else exact_memory(d, q)


def _check_budget(n, d, budget):
    budget = default_budget(d) if budget is None else budget
    need = state_count(n, d)
    if need > budget:
        raise BudgetExceeded(need, budget)


def iter_exact_laws(n: int, d: int, p, q=None, budget: int | None = None):
    """Yield the exact law of the direction counts at steps ``1..n``."""
    d, p, q = _resolve(d, p, q)
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    _check_budget(int(n), d, budget)
    first = first_step_distribution(d, q)
    probs = {}
    for i, pr in enumerate(first):
        if pr:
            c = [0] * (2 * d)
            c[i] = 1
            probs[tuple(c)] = Fraction(pr)
    yield ExactLaw(1, d, p, q, probs)
    for level in range(1, int(n)):
        nxt = defaultdict(Fraction)
        for counts, pr in probs.items():
            dist = step_distribution(DirectionCounts(counts), p)
            for i, w in enumerate(dist):
                if w:
                    c = list(counts)
                    c[i] += 1
                    nxt[tuple(c)] += pr * w
        probs = dict(nxt)
        yield ExactLaw(level + 1, d, p, q, probs)


def enumerate_exact(n: int, d: int, p, q=None, budget: int | None = None) -> ExactLaw:
    """Exact law of the direction counts after ``n`` steps."""
    law = None
    for law in iter_exact_laws(n, d, p, q, budget):
        pass
    return law


def full_history_transitions(history: tuple, d: int, table) -> dict:
    """Next-direction law of the history engine: average over memory index and matrix."""
    n = len(history)
    out = defaultdict(Fraction)
    for k in range(n):
        recalled = SignedDirection.from_index(history[k])
        for (power, sign), pr in table:
            if pr:
                out[apply_matrix(power, sign, recalled, d).index] += pr / n
    return dict(out)


def full_engine_law(n: int, d: int, p, q=None, max_histories: int = 1 << 16) -> dict:
    """Exact law of the direction counts from enumerating step histories."""
    d, p, q = _resolve(d, p, q)
    if (2 * d) ** n > max_histories:
        raise BudgetExceeded((2 * d) ** n, max_histories)
    table = matrix_table(d, p)
    hist = {(i,): Fraction(pr) for i, pr in enumerate(first_step_distribution(d, q)) if pr}
    for _ in range(1, n):
        nxt = defaultdict(Fraction)
        for h, pr in hist.items():
            for j, w in full_history_transitions(h, d, table).items():
                nxt[h + (j,)] += pr * w
        hist = dict(nxt)
    law = defaultdict(Fraction)
    for h, pr in hist.items():
        c = [0] * (2 * d)
        for j in h:
            c[j] += 1
        law[tuple(c)] += pr
    return dict(law)


def one_step_outcomes(counts: DirectionCounts, p) -> list:
    """``(probability, next direction index)`` pairs from a count state."""
    return [(w, i) for i, w in enumerate(step_distribution(counts, p)) if w]


def innovation_mean(counts: DirectionCounts, p) -> list:
    """``E[S_{n+1} - (1 + a/n) S_n | F_n]`` by enumerating the next step."""
    d = counts.d
    a = memory_to_a(d, p)
    n = counts.n
    pos = counts.position()
    out = [Fraction(0)] * d
    for w, i in one_step_outcomes(counts, p):
        nxt = list(pos)
        nxt[i // 2] += 1 if i % 2 == 0 else -1
        for j in range(d):
            out[j] += w * (nxt[j] - (1 + a / n) * pos[j])
    return out


def martingale_increment_mean(counts: DirectionCounts, p) -> list:
    """``E[M_{n+1} - M_n | F_n]`` by enumerating the next step.

    Needs ``a > -1``; at ``a = -1`` (``d = 1, p = 0``) the normalizer is
    undefined and :func:`innovation_mean` carries the same identity.
    """
    d = counts.d
    a = memory_to_a(d, p)
    if not a > -1:
        raise DomainError("M_n is undefined for a <= -1")
    n = counts.n
    an = exact_an(n, a)
    an1 = an * n / (n + a)
    pos = counts.position()
    out = [Fraction(0)] * d
    for w, i in one_step_outcomes(counts, p):
        nxt = list(pos)
        nxt[i // 2] += 1 if i % 2 == 0 else -1
        for j in range(d):
            out[j] += w * (an1 * nxt[j] - an * pos[j])
    return out


def exact_conditional_eps(counts: DirectionCounts, p) -> tuple:
    """``E[|eps|^2 | F_n]`` and ``E[|eps|^4 | F_n]`` by enumerating the next step."""
    d = counts.d
    a = memory_to_a(d, p)
    n = counts.n
    pos = counts.position()
    m2 = m4 = Fraction(0)
    for w, i in one_step_outcomes(counts, p):
        x = [0] * d
        x[i // 2] = 1 if i % 2 == 0 else -1
        sq = sum((x[j] - a / n * pos[j]) ** 2 for j in range(d))
        m2 += w * sq
        m4 += w * sq * sq
    return m2, m4
