from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from merw.model import (
    DirectionCounts,
    DomainError,
    RegimeKind,
    SignedDirection,
    WalkConfig,
    all_directions,
    apply_matrix,
    classify_regime,
    critical_memory,
    critical_memory_exact,
    exact_memory,
    first_step_distribution,
    matrix_table,
    memory_to_a,
    step_distribution,
)


def test_critical_memory_values():
    assert critical_memory(1) == 0.75
    assert critical_memory(2) == 0.625
    assert critical_memory(3) == pytest.approx(7 / 12, abs=0)
    assert critical_memory_exact(3) == Fraction(7, 12)
    with pytest.raises(DomainError):
        critical_memory(0)


def test_memory_to_a():
    assert memory_to_a(1, 1) == 1
    for d in range(1, 8):
        assert memory_to_a(d, Fraction(1, 2 * d)) == 0
    assert memory_to_a(2, Fraction(5, 8)) == Fraction(1, 2)
    assert memory_to_a(2, "0.9") == Fraction(13, 15)
    with pytest.raises(DomainError):
        memory_to_a(2, 1.5)
    with pytest.raises(DomainError):
        memory_to_a(2, -0.1)


@pytest.mark.parametrize("d", range(1, 65))
def test_critical_memory_is_critical(d):
    assert classify_regime(d, critical_memory(d)).kind is RegimeKind.CRITICAL
    assert classify_regime(d, critical_memory_exact(d)).kind is RegimeKind.CRITICAL
    assert abs(float(memory_to_a(d, critical_memory(d))) - 0.5) <= 1e-15


def test_classify_examples():
    assert classify_regime(2, 0.625).kind is RegimeKind.CRITICAL
    assert classify_regime(3, 0).kind is RegimeKind.DIFFUSIVE
    r = classify_regime(2, 0.9)
    assert r.kind is RegimeKind.SUPERDIFFUSIVE
    assert r.a == pytest.approx(13 / 15, rel=1e-15)
    # a float just beside the boundary is not critical
    assert classify_regime(2, 0.6250000000000001).kind is RegimeKind.SUPERDIFFUSIVE
    assert classify_regime(2, "0.6249999999").kind is RegimeKind.DIFFUSIVE


def test_exact_memory_reads_decimal():
    assert exact_memory(2, 0.9) == Fraction(9, 10)
    assert exact_memory(3, critical_memory(3)) == Fraction(7, 12)


def test_apply_matrix_examples():
    e1 = SignedDirection(1, +1)
    assert apply_matrix(0, +1, e1, 2) == e1
    assert apply_matrix(0, -1, e1, 2) == SignedDirection(1, -1)
    got = {apply_matrix(k, s, e1, 2) for k in range(2) for s in (1, -1)}
    assert got == set(all_directions(2))
    with pytest.raises(DomainError):
        apply_matrix(2, 1, e1, 2)


def _J_power(power, d):
    # J sends e_i to e_{i-1}; as a 0-based matrix J[i-1, i] = 1 (mod d)
    import numpy as np
    J = np.zeros((d, d), int)
    for i in range(d):
        J[(i - 1) % d, i] = 1
    return np.linalg.matrix_power(J, power)


@pytest.mark.parametrize("d", [1, 2, 3, 5])
def test_apply_matrix_matches_matrix_product(d):
    import numpy as np
    for direction in all_directions(d):
        seen = set()
        for k in range(d):
            for s in (1, -1):
                v = s * _J_power(k, d) @ np.array(direction.vector(d))
                got = apply_matrix(k, s, direction, d)
                assert tuple(v) == got.vector(d)
                seen.add(got)
        assert len(seen) == 2 * d


def test_step_distribution_examples():
    assert step_distribution(DirectionCounts((1, 0)), Fraction(3, 10)) == [Fraction(3, 10), Fraction(7, 10)]
    dist = step_distribution(DirectionCounts((5, 5, 5, 5)), Fraction(4, 5))
    assert dist == [Fraction(1, 4)] * 4
    dist = step_distribution(DirectionCounts((2, 1, 1, 0)), Fraction(1, 2))
    assert dist[0] == Fraction(1, 3)
    assert sum(dist) == 1
    with pytest.raises(DomainError):
        step_distribution(DirectionCounts.zeros(2), Fraction(1, 2))


counts_strategy = st.integers(1, 4).flatmap(
    lambda d: st.lists(st.integers(0, 30), min_size=2 * d, max_size=2 * d).filter(lambda c: sum(c) > 0))
p_strategy = st.fractions(0, 1, max_denominator=50)


@settings(max_examples=200, deadline=None)
@given(counts_strategy, p_strategy)
def test_step_law_identities(counts, p):
    c = DirectionCounts(tuple(counts))
    d, n = c.d, c.n
    dist = step_distribution(c, p)
    assert sum(dist) == 1 and min(dist) >= 0
    a = memory_to_a(d, p)
    axis = c.axis_counts()
    for i in range(d):
        assert dist[2 * i] + dist[2 * i + 1] == a / n * axis[i] + (1 - a) / d
    # float evaluation sums to one within 1e-15
    fdist = step_distribution(c, float(p))
    assert abs(sum(fdist) - 1) <= 1e-15


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), p_strategy)
def test_matrix_reduction(d, p):
    table = matrix_table(d, p)
    assert sum(w for _, w in table) == 1
    for direction in all_directions(d):
        law = {}
        for (k, s), w in table:
            out = apply_matrix(k, s, direction, d)
            law[out] = law.get(out, 0) + w
        for delta in all_directions(d):
            expect = p if delta == direction else (1 - p) / (2 * d - 1)
            assert law.get(delta, 0) == expect


def test_direction_counts():
    c = DirectionCounts((3, 1, 0, 2))
    assert c.n == 6 and c.d == 2
    assert c.position() == (2, -2)
    assert c.axis_counts() == (4, 2)
    assert sum(c.axis_counts()) == c.n
    assert c[SignedDirection(2, -1)] == 2
    assert c.add(2).counts == (3, 1, 1, 2)
    with pytest.raises(DomainError):
        DirectionCounts((1, -1))


def test_signed_direction_indexing():
    assert [str(s) for s in all_directions(2)] == ["+e_1", "-e_1", "+e_2", "-e_2"]
    for i in range(8):
        assert SignedDirection.from_index(i).index == i


def test_first_step_law():
    assert first_step_distribution(2) == [Fraction(1, 4)] * 4
    q = first_step_distribution(2, Fraction(1, 2))
    assert q == [Fraction(1, 2)] + [Fraction(1, 6)] * 3


def test_walk_config_validation():
    cfg = WalkConfig(2, "0.625", 10)
    assert cfg.regime.kind is RegimeKind.CRITICAL and not cfg.biased
    assert WalkConfig(2, 0.5, 10, q=1).biased
    for bad in [dict(d=0, p=0.5, horizon=1), dict(d=1, p=2, horizon=1), dict(d=1, p=0.5, horizon=0),
                dict(d=1, p=0.5, horizon=1, q=-1), dict(d=1, p=0.5, horizon=1, seed=-1)]:
        with pytest.raises(DomainError):
            WalkConfig(**bad)
