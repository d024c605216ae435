"""Step law, parameter algebra and regime classification.

Signed directions are indexed in the fixed order ``+e_1, -e_1, +e_2, -e_2, ...``;
index ``2*(axis-1)`` is the positive direction of ``axis`` and ``2*(axis-1)+1``
the negative one. Every vector over directions in this package uses that order.

Functions taking a memory parameter ``p`` accept floats, ints, ``Fraction`` or
decimal strings. Arithmetic follows the input type: pass a ``Fraction`` to get
exact rational results.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Union

Number = Union[int, float, Fraction]


class DomainError(ValueError):
    """Parameter outside the domain of the model."""


def _check_dim(d) -> int:
    if isinstance(d, bool) or int(d) != d or d < 1:
        raise DomainError(f"dimension must be a positive integer, got {d!r}")
    return int(d)


def as_number(p) -> Number:
    """Parse a probability-like input; decimal strings become exact fractions."""
    if isinstance(p, str):
        try:
            return Fraction(p.strip())
        except ValueError as exc:
            raise DomainError(f"cannot parse {p!r} as a number") from exc
    if isinstance(p, (int, float, Fraction)):
        return p
    raise DomainError(f"unsupported numeric type {type(p).__name__}")


def _check_prob(p, name="p") -> Number:
    p = as_number(p)
    if not 0 <= p <= 1:
        raise DomainError(f"{name} must lie in [0, 1], got {p}")
    return p


def critical_memory_exact(d: int) -> Fraction:
    return Fraction(2 * _check_dim(d) + 1, 4 * d)


def critical_memory(d: int) -> float:
    """Critical memory parameter ``(2d+1)/(4d)``, rounded to the nearest double."""
    return float(critical_memory_exact(d))


def exact_memory(d: int, p) -> Fraction:
    """Exact rational value of a memory parameter.

    Floats are read through their shortest decimal representation, so ``0.3``
    becomes ``3/10``. A float equal to the rounded critical value snaps to the
    exact critical value.
    """
    d = _check_dim(d)
    p = _check_prob(p)
    if isinstance(p, float):
        pd = critical_memory_exact(d)
        if p == float(pd):
            return pd
        return Fraction(repr(p))
    return Fraction(p)


def memory_to_a(d: int, p) -> Number:
    """The drift parameter ``a = (2dp - 1)/(2d - 1)``."""
    d = _check_dim(d)
    p = _check_prob(p)
    if isinstance(p, Rational):
        return Fraction(2 * d * p - 1, 2 * d - 1)
    return (2 * d * p - 1) / (2 * d - 1)


class RegimeKind(enum.Enum):
    DIFFUSIVE = "diffusive"
    CRITICAL = "critical"
    SUPERDIFFUSIVE = "superdiffusive"


@dataclass(frozen=True)
class Regime:
    kind: RegimeKind
    a: float
    p_d: float

    @property
    def name(self) -> str:
        return self.kind.value


def classify_regime(d: int, p) -> Regime:
    """Classify ``(d, p)`` by comparing ``p`` with the exact critical value."""
    d = _check_dim(d)
    p = _check_prob(p)
    pd = critical_memory_exact(d)
    if isinstance(p, float) and p == float(pd):
        exact = pd
    else:
        exact = Fraction(p)
    if exact < pd:
        kind = RegimeKind.DIFFUSIVE
    elif exact == pd:
        kind = RegimeKind.CRITICAL
    else:
        kind = RegimeKind.SUPERDIFFUSIVE
    return Regime(kind, float(memory_to_a(d, exact)), float(pd))


@dataclass(frozen=True, order=True)
class SignedDirection:
    """Unit step ``sign * e_axis`` with ``axis`` counted from 1."""

    axis: int
    sign: int

    def __post_init__(self):
        if self.axis < 1:
            raise DomainError(f"axis must be >= 1, got {self.axis}")
        if self.sign not in (1, -1):
            raise DomainError(f"sign must be +1 or -1, got {self.sign}")

    @property
    def index(self) -> int:
        return 2 * (self.axis - 1) + (0 if self.sign > 0 else 1)

    @classmethod
    def from_index(cls, index: int) -> "SignedDirection":
        return cls(index // 2 + 1, 1 if index % 2 == 0 else -1)

    def vector(self, d: int) -> tuple:
        if self.axis > d:
            raise DomainError(f"axis {self.axis} exceeds dimension {d}")
        v = [0] * d
        v[self.axis - 1] = self.sign
        return tuple(v)

    def __str__(self):
        return f"{'+' if self.sign > 0 else '-'}e_{self.axis}"


def all_directions(d: int) -> list:
    return [SignedDirection.from_index(i) for i in range(2 * _check_dim(d))]


def apply_matrix(power: int, sign: int, direction: SignedDirection, d: int) -> SignedDirection:
    """Image of ``direction`` under ``sign * J_d**power``.

    ``J_d`` is the cyclic permutation sending ``e_i`` to ``e_{i-1}`` (indices mod d).
    """
    d = _check_dim(d)
    if not 0 <= power < d:
        raise DomainError(f"power must lie in [0, {d - 1}], got {power}")
    if sign not in (1, -1):
        raise DomainError(f"sign must be +1 or -1, got {sign}")
    if direction.axis > d:
        raise DomainError(f"axis {direction.axis} exceeds dimension {d}")
    axis = (direction.axis - 1 - power) % d + 1
    return SignedDirection(axis, sign * direction.sign)


def matrix_table(d: int, p) -> list:
    """The ``2d`` signed matrix powers with their probabilities.

    Entries are ``((power, sign), prob)`` in the order
    ``+I, -I, +J, -J, ..., +J^{d-1}, -J^{d-1}``; this order is also the
    inverse-CDF order used by the full-history engine.
    """
    d = _check_dim(d)
    p = _check_prob(p)
    rest = (1 - p) / (2 * d - 1)
    if isinstance(p, Rational):
        rest = Fraction(1 - p, 2 * d - 1)
    table = []
    for power in range(d):
        for sign in (1, -1):
            prob = p if (power, sign) == (0, 1) else rest
            table.append(((power, sign), prob))
    return table


@dataclass(frozen=True)
class DirectionCounts:
    """Number of past steps taken in each signed direction."""

    counts: tuple
    n: int = field(init=False)

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if not counts or len(counts) % 2:
            raise DomainError("counts must have an even, positive length 2d")
        if min(counts) < 0:
            raise DomainError("counts must be nonnegative")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "n", sum(counts))

    @classmethod
    def zeros(cls, d: int) -> "DirectionCounts":
        return cls((0,) * (2 * _check_dim(d)))

    @property
    def d(self) -> int:
        return len(self.counts) // 2

    def __getitem__(self, direction: SignedDirection) -> int:
        return self.counts[direction.index]

    def axis_counts(self) -> tuple:
        """Occupation counts ``N_n(i)``: steps along axis ``i`` of either sign."""
        c = self.counts
        return tuple(c[2 * i] + c[2 * i + 1] for i in range(self.d))

    def position(self) -> tuple:
        c = self.counts
        return tuple(c[2 * i] - c[2 * i + 1] for i in range(self.d))

    def add(self, index: int) -> "DirectionCounts":
        c = list(self.counts)
        c[index] += 1
        return DirectionCounts(tuple(c))


def step_distribution(counts: DirectionCounts, p) -> list:
    """Law of the next step given the direction counts after ``n >= 1`` steps.

    ``P(next = delta) = p c_delta / n + (1-p)/(2d-1) (n - c_delta) / n``, which is
    the step law averaged over the uniformly recalled past step and the random
    signed matrix.
    """
    p = _check_prob(p)
    n = counts.n
    if n == 0:
        raise DomainError("step_distribution needs n >= 1; use the first-step law at n = 0")
    d = counts.d
    if isinstance(p, Rational):
        rest = Fraction(1 - p, 2 * d - 1)
        return [(p * c + rest * (n - c)) / n for c in counts.counts]
    rest = (1 - p) / (2 * d - 1)
    return [(p * c + rest * (n - c)) / n for c in counts.counts]


def first_step_distribution(d: int, q=None) -> list:
    """Law of the first step: uniform, or ``+e_1`` with probability ``q``."""
    d = _check_dim(d)
    if q is None:
        return [Fraction(1, 2 * d)] * (2 * d)
    q = _check_prob(q, "q")
    if isinstance(q, Rational):
        rest = Fraction(1 - q, 2 * d - 1)
    else:
        rest = (1 - q) / (2 * d - 1)
    return [q] + [rest] * (2 * d - 1)


@dataclass(frozen=True)
class WalkConfig:
    """Parameters of one walk; ``q=None`` selects the uniform first step."""

    d: int
    p: Number
    horizon: int
    seed: int = 0
    q: Number | None = None

    def __post_init__(self):
        _check_dim(self.d)
        object.__setattr__(self, "p", _check_prob(self.p))
        if self.q is not None:
            object.__setattr__(self, "q", _check_prob(self.q, "q"))
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise DomainError(f"horizon must be a positive integer, got {self.horizon}")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")

    @property
    def biased(self) -> bool:
        return self.q is not None

    @property
    def a(self) -> float:
        return float(memory_to_a(self.d, self.p))

    @property
    def regime(self) -> Regime:
        return classify_regime(self.d, self.p)

    def as_dict(self) -> dict:
        return {
            "d": self.d,
            "p": float(self.p),
            "q": None if self.q is None else float(self.q),
            "horizon": int(self.horizon),
            "seed": int(self.seed),
        }
