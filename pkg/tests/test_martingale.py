import math
from fractions import Fraction

import numpy as np
import pytest

from merw.closedform import enumerate_exact, exact_an, exact_second_moment, vn
from merw.engines import simulate
from merw.martingale import (
    DegenerateInput,
    lil_statistic,
    occupation,
    qsl_statistic,
    track,
)
from merw.model import (
    DirectionCounts,
    DomainError,
    RegimeKind,
    WalkConfig,
    first_step_distribution,
    memory_to_a,
    step_distribution,
)


def path_law(n, d, p, q=None):
    """All paths of length n as (positions array, exact probability)."""
    out = []

    def rec(counts, path, prob):
        if len(path) == n:
            out.append((np.array(path), prob))
            return
        if not path:
            dist = first_step_distribution(d, q)
        else:
            dist = step_distribution(DirectionCounts(tuple(counts)), p)
        last = path[-1] if path else (0,) * d
        for j, w in enumerate(dist):
            if w == 0:
                continue
            step = [0] * d
            step[j // 2] = 1 if j % 2 == 0 else -1
            c = list(counts)
            c[j] += 1
            rec(c, path + [tuple(x + s for x, s in zip(last, step))], prob * w)

    rec([0] * 2 * d, [], Fraction(1))
    return out


SAMPLES = [WalkConfig(1, 0.85, 400, seed=2), WalkConfig(2, 0.3, 400, seed=5),
           WalkConfig(3, 0.9, 300, seed=8, q=Fraction(1, 2)), WalkConfig(2, 0.0, 200, seed=1)]


def test_track_first_step():
    traj = simulate(WalkConfig(2, 0.7, 10, seed=3), record="positions")
    tr = track(traj, 2, 0.7)
    assert np.array_equal(tr.M[0], traj.positions[0])
    assert np.linalg.norm(tr.M[0]) == 1
    assert np.allclose(tr.bracket[0], np.eye(2) / 2)
    with pytest.raises(DegenerateInput):
        track(traj.positions[:1], 2, 0.7)


def test_track_all_plus_path():
    p = 0.8
    a = 2 * p - 1
    pos = np.arange(1, 51)[:, None]
    tr = track(pos, 1, p)
    assert np.allclose(tr.eps[1:, 0], 1 - a, rtol=0, atol=1e-13)
    # S_{n-1} = n - 1 with all steps on the same axis: conditional variance is 1 - a^2
    inc = np.diff(tr.bracket[:, 0, 0])
    assert np.allclose(inc / tr.an[1:] ** 2, 1 - a * a, rtol=1e-13)


def test_track_rejects_bad_input():
    with pytest.raises(DomainError):
        track(np.array([[1], [3]]), 1, 0.5)
    with pytest.raises(DomainError):
        track(np.array([[1, 0], [2, 0]]), 3, 0.5)


@pytest.mark.parametrize("cfg", SAMPLES)
def test_track_invariants(cfg):
    traj = simulate(cfg, record="positions")
    tr = track(traj, cfg.d, cfg.p, cfg.q)
    assert np.array_equal(tr.positions(), traj.positions)
    assert np.max(np.abs(tr.M / tr.an[:, None] - traj.positions)) < 1e-9
    inc = np.diff(tr.bracket, axis=0)
    assert np.max(np.abs(inc - inc.transpose(0, 2, 1))) <= 1e-15
    assert np.all(np.linalg.eigvalsh(inc) >= -1e-15)
    assert np.all(tr.trace <= tr.v * (1 + 1e-14))
    assert tr.v[-1] == pytest.approx(vn(cfg.horizon, tr.a), rel=1e-13)
    prev = np.linalg.norm(traj.positions[:-1], axis=1) / np.arange(1, cfg.horizon)
    assert np.all(np.linalg.norm(tr.eps[1:], axis=1) <= 1 + abs(tr.a) * prev + 1e-12)


@pytest.mark.parametrize("d,n,p,q", [(1, 7, Fraction(4, 5), None), (2, 4, Fraction(3, 10), None),
                                     (2, 4, Fraction(9, 10), Fraction(1, 2))])
def test_bracket_mean_equals_exact_expectation(d, n, p, q):
    a = memory_to_a(d, p)
    an = [exact_an(k, a) for k in range(1, n + 1)]
    direct = [[Fraction(0)] * d for _ in range(d)]
    mean_bracket = np.zeros((d, d))
    for pos, prob in path_law(n, d, p, q):
        prev = [0] * d
        for k in range(1, n + 1):
            s = [int(v) for v in pos[k - 1]]
            g = 1 + a / (k - 1) if k > 1 else 0
            eps = [s[i] - g * prev[i] for i in range(d)]
            for i in range(d):
                for j in range(d):
                    direct[i][j] += prob * an[k - 1] ** 2 * eps[i] * eps[j]
            prev = s
        mean_bracket += float(prob) * track(pos, d, p, q).bracket[-1]
    assert np.allclose(mean_bracket, np.array(direct, dtype=float), rtol=1e-13, atol=1e-15)


def test_qsl_examples():
    n = 100
    zero = np.zeros((n, 2), int)
    # all-zero positions are not a walk, so feed the statistic directly
    assert np.all(qsl_statistic(zero, "diffusive").values == 0)
    line = np.arange(1, n + 1)[:, None]
    s = qsl_statistic(line, RegimeKind.DIFFUSIVE)
    assert s.steps[0] == 2
    assert s.values[-1, 0, 0] == pytest.approx(n / math.log(n), rel=1e-14)
    c = qsl_statistic(line, "critical")
    assert c.steps[0] == 3
    expect = math.fsum(1 / math.log(k) ** 2 for k in range(2, n + 1)) / math.log(math.log(n))
    assert c.values[-1, 0, 0] == pytest.approx(expect, rel=1e-13)
    with pytest.raises(DomainError):
        qsl_statistic(line, "superdiffusive")
    with pytest.raises(DegenerateInput):
        qsl_statistic(line[:2], "critical")


def test_lil_examples():
    n = 50
    line = np.arange(1, n + 1)[:, None]
    s = lil_statistic(line, "diffusive", a=0.25)
    assert s.target == 2.0
    assert np.all(np.isnan(s.values[:2])) and not s.defined[1] and s.defined[2]
    k = np.arange(3, n + 1)
    assert np.allclose(s.values[2:], k / (2 * np.log(np.log(k))), rtol=1e-14)
    c = lil_statistic(line, "critical")
    assert c.target == 1.0
    assert not c.defined[14] and c.defined[15]
    assert lil_statistic(np.zeros((20, 1)), "diffusive").values[-1] == 0
    with pytest.raises(DomainError):
        lil_statistic(line, "superdiffusive")


def test_statistics_permutation_equivariance():
    traj = simulate(WalkConfig(3, 0.4, 500, seed=17), record="positions")
    perm = [2, 0, 1]
    pos = traj.positions
    for regime in ("diffusive", "critical"):
        base = qsl_statistic(pos, regime).values
        moved = qsl_statistic(pos[:, perm], regime).values
        assert np.array_equal(moved, base[:, perm][:, :, perm])
        la = lil_statistic(pos, regime).values
        lb = lil_statistic(pos[:, perm], regime).values
        assert np.array_equal(np.isnan(la), np.isnan(lb))
        assert np.allclose(la[~np.isnan(la)], lb[~np.isnan(lb)], rtol=1e-15)


def test_diffusive_qsl_ensemble_mean():
    # the limit I/(d(1-2a)) is reached at log speed; the exact finite-n mean is
    # (1/log n) sum_k E[S_k S_k^T]/k^2 from the moment recurrence
    d, p, n, R = 2, 0.0, 2000, 400
    table = exact_second_moment(n, d, p)
    k = np.arange(1, n + 1)
    expect = np.sum(table.second[:, 0, 0] / k**2) / math.log(n)
    vals = np.array([qsl_statistic(simulate(WalkConfig(d, p, n, seed=s), record="positions"),
                                   "diffusive").values[-1] for s in range(R)])
    diag = vals[:, [0, 1], [0, 1]]
    se = diag.std(axis=0, ddof=1) / math.sqrt(R)
    assert np.all(np.abs(diag.mean(axis=0) - expect) < 3 * se)
    assert abs(vals[:, 0, 1].mean()) < 3 * vals[:, 0, 1].std(ddof=1) / math.sqrt(R)


def test_occupation():
    track_ = occupation(np.arange(1, 11)[:, None] * np.array([[1, 0]]))
    assert np.all(track_.fractions[:, 0] == 1)
    traj = simulate(WalkConfig(3, 0.6, 300, seed=4), record="positions")
    fr = occupation(traj).fractions
    assert np.allclose(fr.sum(axis=1), 1, rtol=0, atol=1e-15)
    assert fr.min() >= 0 and fr.max() <= 1


def test_occupation_exact_mean():
    law = enumerate_exact(5, 2, Fraction(7, 10))
    mean = sum(prob * Fraction(c[0] + c[1], 5) for c, prob in law.probs.items())
    assert mean == Fraction(1, 2)
    total = sum(float(prob) * occupation(pos).fractions[-1] for pos, prob in path_law(5, 2, Fraction(7, 10)))
    assert np.allclose(total, 0.5, rtol=1e-14)
