"""Per-trajectory martingale objects and almost-sure rate statistics.

All functions take the recorded positions ``S_1, ..., S_n`` of one trajectory
as an ``(n, d)`` integer array (or a :class:`merw.engines.Trajectory`
recorded with ``positions``). ``log`` is the natural logarithm throughout.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .closedform.gamma import an_series
from .model import DomainError, Regime, RegimeKind, first_step_distribution, memory_to_a


class DegenerateInput(ValueError):
    """Trajectory too short for the requested statistic."""


def _positions(trajectory) -> np.ndarray:
    pos = getattr(trajectory, "positions", trajectory)
    steps = getattr(trajectory, "steps", None)
    pos = np.asarray(pos)
    if pos.ndim == 1:
        pos = pos[:, None]
    if steps is not None and not np.array_equal(steps, np.arange(1, len(pos) + 1)):
        raise DomainError("trajectory must be recorded at every step")
    return pos


def _steps(pos: np.ndarray) -> np.ndarray:
    x = np.diff(pos, axis=0, prepend=np.zeros((1, pos.shape[1]), pos.dtype))
    if not np.all(np.abs(x).sum(axis=1) == 1):
        raise DomainError("positions do not form a nearest-neighbour path from the origin")
    return x


def _kind(regime) -> RegimeKind:
    if isinstance(regime, Regime):
        return regime.kind
    if isinstance(regime, RegimeKind):
        return regime
    return RegimeKind(str(regime).lower())


@dataclass(frozen=True)
class MartingaleTrack:
    """Row ``k-1`` of every array refers to step ``k``."""

    a: float
    an: np.ndarray
    M: np.ndarray
    eps: np.ndarray
    bracket: np.ndarray
    trace: np.ndarray
    v: np.ndarray

    def positions(self) -> np.ndarray:
        """``S_n`` recovered as ``M_n / a_n``, rounded to integers."""
        return np.rint(self.M / self.an[:, None]).astype(np.int64)


def track(trajectory, d: int, p, q=None) -> MartingaleTrack:
    """Martingale ``M_n = a_n S_n``, innovations and predictable quadratic variation.

    ``<M>_n`` is accumulated from the conditional covariance of the next
    innovation given the realized direction counts,

        E[eps eps^T | F_k] = (a/k) Sigma_k + (1-a)/d I - (a/k)^2 S_k S_k^T,

    starting from ``<M>_1 = E[X_1 X_1^T]``.
    """
    pos = _positions(trajectory)
    n, dd = pos.shape
    if dd != d:
        raise DomainError(f"positions have dimension {dd}, expected {d}")
    if n < 2:
        raise DegenerateInput("track needs at least two steps")
    a = float(memory_to_a(d, p))
    x = _steps(pos)
    an = an_series(n, a)
    S = pos.astype(float)
    M = an[:, None] * S
    k = np.arange(1, n, dtype=float)
    eps = S.copy()
    eps[1:] = S[1:] - (1 + a / k)[:, None] * S[:-1]

    occ = np.cumsum(np.abs(x), axis=0).astype(float)
    first = np.array(first_step_distribution(d, q), dtype=float)
    first_cov = np.diag(first[0::2] + first[1::2])
    inc = np.empty((n, d, d))
    inc[0] = first_cov
    g = (a / k)[:, None, None]
    idx = np.arange(d)
    inc[1:] = -(g**2) * S[:-1, :, None] * S[:-1, None, :]
    inc[1:, idx, idx] += g[:, :, 0] * occ[:-1] + (1 - a) / d
    inc[1:] *= (an[1:] ** 2)[:, None, None]
    bracket = np.cumsum(inc, axis=0)
    trace = np.trace(bracket, axis1=1, axis2=2)
    v = np.cumsum(an * an)
    return MartingaleTrack(a, an, M, eps, bracket, trace, v)


@dataclass(frozen=True)
class Series:
    """A statistic along a trajectory; ``values`` is NaN where undefined."""

    steps: np.ndarray
    values: np.ndarray
    defined: np.ndarray
    target: float | None = None


def qsl_statistic(trajectory, regime) -> Series:
    """Running quadratic-strong-law matrix.

    Diffusive: ``(1/log n) sum_{k=1}^n S_k S_k^T / k^2``, for ``n >= 2``.
    Critical: ``(1/log log n) sum_{k=2}^n S_k S_k^T / (k log k)^2``, for ``n >= 3``.
    """
    kind = _kind(regime)
    pos = _positions(trajectory).astype(float)
    n = len(pos)
    k = np.arange(1, n + 1, dtype=float)
    outer = pos[:, :, None] * pos[:, None, :]
    if kind is RegimeKind.DIFFUSIVE:
        w = 1.0 / k**2
        with np.errstate(divide="ignore"):
            norm = np.log(k)
        start = 2
    elif kind is RegimeKind.CRITICAL:
        w = np.zeros(n)
        w[1:] = 1.0 / (k[1:] * np.log(k[1:])) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            norm = np.log(np.log(k))
        start = 3
    else:
        raise DomainError("no quadratic strong law in the superdiffusive regime")
    if n < start:
        raise DegenerateInput(f"needs at least {start} steps")
    sums = np.cumsum(w[:, None, None] * outer, axis=0)
    return Series(k[start - 1:].astype(np.int64), sums[start - 1:] / norm[start - 1:, None, None],
                  np.ones(n - start + 1, bool))


def lil_statistic(trajectory, regime, a: float | None = None) -> Series:
    """Running iterated-logarithm ratio, a diagnostic only.

    Diffusive: ``|S_n|^2 / (2 n log log n)``, defined once ``log log n > 0``
    (``n >= 3``); its limsup target is ``1/(1-2a)``. Critical:
    ``|S_n|^2 / (2 n log n log log log n)``, defined once ``log log log n > 0``
    (``n >= 16``); target 1. Undefined entries are NaN, never clamped.
    """
    kind = _kind(regime)
    pos = _positions(trajectory).astype(float)
    n = len(pos)
    k = np.arange(1, n + 1, dtype=float)
    sq = np.sum(pos * pos, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind is RegimeKind.DIFFUSIVE:
            inner = np.log(np.log(k))
            norm = 2 * k * inner
            target = None if a is None else 1.0 / (1 - 2 * a)
        elif kind is RegimeKind.CRITICAL:
            inner = np.log(np.log(np.log(k)))
            norm = 2 * k * np.log(k) * inner
            target = 1.0
        else:
            raise DomainError("no iterated-logarithm law in the superdiffusive regime")
    defined = np.isfinite(inner) & (inner > 0)
    values = np.full(n, np.nan)
    values[defined] = sq[defined] / norm[defined]
    return Series(k.astype(np.int64), values, defined, target)


@dataclass(frozen=True)
class OccupationTrack:
    steps: np.ndarray
    fractions: np.ndarray


def occupation(trajectory) -> OccupationTrack:
    """Fraction of steps taken along each axis, ``N_n(i)/n``."""
    pos = _positions(trajectory)
    x = _steps(pos)
    n = len(pos)
    k = np.arange(1, n + 1)
    return OccupationTrack(k, np.cumsum(np.abs(x), axis=0) / k[:, None])
