"""Trajectory generators.

Two engines produce the same law:

* ``full``: keeps the whole step history. At time ``n`` it recalls a uniformly
  chosen past step ``X_k`` and applies a random signed power of ``J_d``. Each
  step consumes two uniforms, memory index first, matrix second.
* ``reduced``: keeps only the ``2d`` direction counts and samples the next
  direction from :func:`merw.model.step_distribution` by inverse CDF over the
  fixed direction order. Each step consumes one uniform.

The first step consumes one uniform in both engines. The pure-Python steppers
(:func:`first_step`, :func:`advance_full`, :func:`advance_reduced`) are the
reference; the numba kernels used by :func:`simulate` and the ensemble
runner replay them draw for draw.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .model import (
    DirectionCounts,
    DomainError,
    SignedDirection,
    WalkConfig,
    _check_prob,
)
from .rng import RngStream, nb_stream_key, nb_uniform

ENGINES = ("full", "reduced")
MAX_HORIZON = 2**62


class ContractViolation(RuntimeError):
    """A stepper was called on a state it cannot advance."""


@dataclass(frozen=True)
class WalkState:
    n: int
    position: tuple
    counts: DirectionCounts
    history: tuple | None = None

    @property
    def d(self) -> int:
        return len(self.position)


def _pick(weights, target):
    """Inverse-CDF index: first ``i`` with ``target < w_0 + ... + w_i``."""
    cum = 0.0
    for i, w in enumerate(weights):
        cum += w
        if target < cum:
            return i
    # rounding left target past the last partial sum
    for i in range(len(weights) - 1, -1, -1):
        if weights[i] > 0:
            return i
    raise ContractViolation("all weights are zero")


def _first_index(d: int, q, u: float) -> int:
    if q is None:
        return min(int(u * (2 * d)), 2 * d - 1)
    q = float(q)
    rest = (1.0 - q) / (2 * d - 1)
    return _pick([q] + [rest] * (2 * d - 1), u)


def first_step(config: WalkConfig, rng: RngStream) -> SignedDirection:
    """Draw ``X_1`` from the uniform or ``q``-biased first-step law."""
    return SignedDirection.from_index(_first_index(config.d, config.q, rng.uniform()))


def initial_state(config: WalkConfig, rng: RngStream, keep_history: bool = True) -> WalkState:
    step = first_step(config, rng)
    counts = DirectionCounts.zeros(config.d).add(step.index)
    history = (step.index,) if keep_history else None
    return WalkState(1, counts.position(), counts, history)


def _advanced(state: WalkState, index: int, keep_history: bool) -> WalkState:
    counts = state.counts.add(index)
    pos = list(state.position)
    pos[index // 2] += 1 if index % 2 == 0 else -1
    history = state.history + (index,) if keep_history else None
    return WalkState(state.n + 1, tuple(pos), counts, history)


def full_step_index(history, d: int, p: float, u_memory: float, u_matrix: float) -> int:
    """Next direction index of the full engine for given uniforms."""
    n = len(history)
    k = min(int(u_memory * n), n - 1)
    rest = (1.0 - p) / (2 * d - 1)
    m = _pick([p] + [rest] * (2 * d - 1), u_matrix)
    power, neg = divmod(m, 2)
    j = history[k]
    axis = (j // 2 - power) % d
    return 2 * axis + ((j % 2) ^ neg)


def reduced_step_index(counts, p: float, u: float) -> int:
    """Next direction index of the reduced engine for a given uniform."""
    n = sum(counts)
    d = len(counts) // 2
    rest = (1.0 - p) / (2 * d - 1)
    base = rest * n
    diff = p - rest
    return _pick([base + diff * c for c in counts], u * n)


def advance_full(state: WalkState, p, rng: RngStream) -> WalkState:
    """One step of the literal history-based walk."""
    if state.history is None:
        raise ContractViolation("advance_full needs the step history")
    if state.n < 1:
        raise ContractViolation("advance_full needs n >= 1")
    p = float(_check_prob(p))
    u_memory = rng.uniform()
    u_matrix = rng.uniform()
    index = full_step_index(state.history, state.d, p, u_memory, u_matrix)
    return _advanced(state, index, True)


def advance_reduced(state: WalkState, p, rng: RngStream) -> WalkState:
    """One step drawn from the direction-count law."""
    if state.n < 1:
        raise ContractViolation("advance_reduced needs n >= 1")
    p = float(_check_prob(p))
    index = reduced_step_index(state.counts.counts, p, rng.uniform())
    return _advanced(state, index, state.history is not None)


# numba kernels ---------------------------------------------------------------


@numba.njit(cache=True, nogil=True)
def _nb_pick_matrix(p, rest, m2, u):
    cum = p
    if u < cum:
        return 0
    for i in range(1, m2):
        cum += rest
        if u < cum:
            return i
    if rest > 0.0:
        return m2 - 1
    return 0


@numba.njit(cache=True, nogil=True)
def _nb_first(d, biased, q, state, gamma):
    state, u = nb_uniform(state, gamma)
    m2 = 2 * d
    if not biased:
        j = int(u * m2)
        if j >= m2:
            j = m2 - 1
        return state, j
    rest = (1.0 - q) / (m2 - 1)
    return state, _nb_pick_matrix(q, rest, m2, u)


@numba.njit(cache=True, nogil=True)
def _nb_reduced(counts, n, p, rest, diff, m2, state, gamma):
    state, u = nb_uniform(state, gamma)
    t = u * n
    base = rest * n
    cum = 0.0
    for i in range(m2):
        cum += base + diff * counts[i]
        if t < cum:
            return state, i
    for i in range(m2 - 1, -1, -1):
        if base + diff * counts[i] > 0.0:
            return state, i
    return state, m2 - 1


@numba.njit(cache=True, nogil=True)
def _nb_full(hist, n, d, p, rest, state, gamma):
    state, u1 = nb_uniform(state, gamma)
    k = int(u1 * n)
    if k >= n:
        k = n - 1
    state, u2 = nb_uniform(state, gamma)
    m = _nb_pick_matrix(p, rest, 2 * d, u2)
    power = m // 2
    neg = m % 2
    j = hist[k]
    axis = (j // 2 - power) % d
    return state, 2 * axis + ((j % 2) ^ neg)


@numba.njit(cache=True, nogil=True)
def run_streams(d, p, biased, q, horizon, seed, streams, checkpoints, qsl_mode, full):
    """Simulate one trajectory per entry of ``streams``.

    Returns positions and direction counts at each checkpoint step, plus the
    raw quadratic sums ``sum_k w_k S_k S_k^T`` with ``w_k = 1/k^2`` from k=1
    (``qsl_mode`` 1) or ``w_k = 1/(k log k)^2`` from k=2 (``qsl_mode`` 2).
    """
    R = streams.shape[0]
    K = checkpoints.shape[0]
    m2 = 2 * d
    rest = (1.0 - p) / (m2 - 1)
    diff = p - rest
    pos_out = np.zeros((R, K, d), np.int64)
    cnt_out = np.zeros((R, K, m2), np.int64)
    qsl_out = np.zeros((R, d, d))
    counts = np.zeros(m2, np.int64)
    pos = np.zeros(d, np.int64)
    hist = np.zeros(horizon if full else 1, np.int8)
    for r in range(R):
        state, gamma = nb_stream_key(seed, streams[r])
        counts[:] = 0
        pos[:] = 0
        state, j = _nb_first(d, biased, q, state, gamma)
        n = 0
        c = 0
        while True:
            counts[j] += 1
            if j % 2 == 0:
                pos[j // 2] += 1
            else:
                pos[j // 2] -= 1
            if full:
                hist[n] = j
            n += 1
            if qsl_mode == 1 or (qsl_mode == 2 and n >= 2):
                if qsl_mode == 1:
                    w = 1.0 / (float(n) * float(n))
                else:
                    lk = n * math.log(n)
                    w = 1.0 / (lk * lk)
                for i1 in range(d):
                    if pos[i1] != 0:
                        for i2 in range(d):
                            qsl_out[r, i1, i2] += w * pos[i1] * pos[i2]
            if c < K and checkpoints[c] == n:
                pos_out[r, c, :] = pos
                cnt_out[r, c, :] = counts
                c += 1
            if n >= horizon:
                break
            if full:
                state, j = _nb_full(hist, n, d, p, rest, state, gamma)
            else:
                state, j = _nb_reduced(counts, n, p, rest, diff, m2, state, gamma)
    return pos_out, cnt_out, qsl_out


# public simulation API --------------------------------------------------------


@dataclass(frozen=True)
class Record:
    """Which steps to keep: ``final``, ``positions`` (every step) or every ``stride``-th."""

    mode: str = "final"
    stride: int = 0

    @classmethod
    def parse(cls, text: str) -> "Record":
        text = text.strip().lower()
        if text in ("final", "finalonly"):
            return cls("final")
        if text == "positions":
            return cls("positions")
        if text.startswith("checkpoints"):
            _, _, stride = text.partition(":")
            if not stride.isdigit() or int(stride) < 1:
                raise DomainError(f"checkpoints need a positive stride, got {text!r}")
            return cls("checkpoints", int(stride))
        raise DomainError(f"unknown record policy {text!r}")

    def steps(self, horizon: int) -> np.ndarray:
        if self.mode == "final":
            return np.array([horizon], np.int64)
        if self.mode == "positions":
            return np.arange(1, horizon + 1, dtype=np.int64)
        steps = np.arange(self.stride, horizon + 1, self.stride, dtype=np.int64)
        if steps.size == 0 or steps[-1] != horizon:
            steps = np.append(steps, horizon)
        return steps

    def __str__(self):
        return f"checkpoints:{self.stride}" if self.mode == "checkpoints" else self.mode


@dataclass(frozen=True)
class Trajectory:
    config: WalkConfig
    engine: str
    stream: int
    steps: np.ndarray
    positions: np.ndarray
    counts: np.ndarray

    @property
    def final_counts(self) -> DirectionCounts:
        return DirectionCounts(tuple(self.counts[-1]))


def _check_engine(engine: str) -> str:
    if engine not in ENGINES:
        raise DomainError(f"engine must be one of {ENGINES}, got {engine!r}")
    return engine


def simulate_streams(config: WalkConfig, streams, checkpoints, engine="reduced", qsl_mode=0):
    """Low-level batch call; returns ``(positions, counts, qsl_sums)`` arrays."""
    _check_engine(engine)
    if config.horizon >= MAX_HORIZON:
        raise OverflowError("horizon would overflow 64-bit position components")
    checkpoints = np.asarray(checkpoints, np.int64)
    if checkpoints.size and (np.any(np.diff(checkpoints) <= 0) or checkpoints[0] < 1
                             or checkpoints[-1] > config.horizon):
        raise DomainError("checkpoints must be increasing steps within the horizon")
    streams = np.asarray(streams, np.uint64)
    q = 0.0 if config.q is None else float(config.q)
    return run_streams(config.d, float(config.p), config.biased, q, int(config.horizon),
                       np.uint64(config.seed), streams, checkpoints, int(qsl_mode),
                       engine == "full")


def simulate(config: WalkConfig, engine: str = "reduced", stream: int = 0,
             record: Record | str = "final") -> Trajectory:
    """Run one trajectory on stream ``stream`` and keep the requested steps.

    Deterministic in ``(config.seed, stream, engine)``; the record policy only
    selects which steps are returned.
    """
    if isinstance(record, str):
        record = Record.parse(record)
    steps = record.steps(config.horizon)
    pos, cnt, _ = simulate_streams(config, [stream], steps, engine)
    return Trajectory(config, engine, int(stream), steps, pos[0], cnt[0])


def reference_trajectory(config: WalkConfig, engine: str = "reduced", stream: int = 0):
    """Whole trajectory from the pure-Python steppers, as a list of states."""
    _check_engine(engine)
    rng = RngStream(config.seed, stream)
    state = initial_state(config, rng, keep_history=engine == "full")
    states = [state]
    advance = advance_full if engine == "full" else advance_reduced
    while state.n < config.horizon:
        state = advance(state, config.p, rng)
        states.append(state)
    return states
