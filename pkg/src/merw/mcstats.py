"""Ensembles of independent trajectories and Monte Carlo moment estimates.

Streams ``0..R-1`` are split into fixed blocks of :data:`BLOCK` streams. Each
block is summarized with two-pass statistics and the block summaries are
merged along a fixed pairwise tree, so every estimate is a deterministic
function of ``(seed, R, config, functional)`` whatever the number of workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy import stats as sps

from .closedform.moments import exact_second_moment, finite_L_second_moment
from .closedform.limits import limit_L_moments
from .engines import simulate_streams
from .model import DomainError, RegimeKind, WalkConfig, memory_to_a

BLOCK = 256
Z_THRESHOLD = 3.0


class Functional(str, Enum):
    DIFFUSIVE = "diffusive"
    CRITICAL = "critical"
    SUPERDIFFUSIVE = "superdiffusive"
    OCCUPATION = "occupation"
    QSL = "qsl"


_REGIME_OF = {
    Functional.DIFFUSIVE: {RegimeKind.DIFFUSIVE},
    Functional.CRITICAL: {RegimeKind.CRITICAL},
    Functional.SUPERDIFFUSIVE: {RegimeKind.SUPERDIFFUSIVE},
    Functional.OCCUPATION: set(RegimeKind),
    Functional.QSL: {RegimeKind.DIFFUSIVE, RegimeKind.CRITICAL},
}


def scale(functional: Functional, n, a: float):
    """Divisor applied to ``S_n`` by the position functionals."""
    n = np.asarray(n, float)
    if functional is Functional.DIFFUSIVE:
        return np.sqrt(n)
    if functional is Functional.CRITICAL:
        return np.sqrt(n * np.log(n))
    if functional is Functional.SUPERDIFFUSIVE:
        return n**a
    raise DomainError(f"{functional.value} is not a position functional")


@dataclass(frozen=True)
class EnsembleStats:
    """Mergeable moment accumulators of a vector sample ``y`` at each checkpoint.

    ``mean``/``comoment`` hold the sample mean and the centered co-moment
    ``sum (y-mean)(y-mean)^T``. ``prod_mean``/``prod_m2`` hold the mean and
    centered second moment of each product ``y_i y_j``, which give the plug-in
    standard error of the raw second moment. ``quad`` keeps ``|y|^2`` at the
    last checkpoint for every stream, in stream order.
    """

    functional: str
    d: int
    steps: np.ndarray
    count: int
    mean: np.ndarray
    comoment: np.ndarray
    prod_mean: np.ndarray
    prod_m2: np.ndarray
    quad: np.ndarray = field(repr=False)
    config: WalkConfig | None = None

    @property
    def R(self) -> int:
        return self.count

    @classmethod
    def from_samples(cls, functional, d, steps, y, config=None) -> "EnsembleStats":
        """Two-pass summary of samples ``y`` with shape ``(R, K, m)``."""
        y = np.asarray(y, float)
        R = y.shape[0]
        if R < 1:
            raise DomainError("need at least one sample")
        mean = y.mean(axis=0)
        c = y - mean
        comoment = np.einsum("rki,rkj->kij", c, c)
        z = y[:, :, :, None] * y[:, :, None, :]
        prod_mean = z.mean(axis=0)
        prod_m2 = ((z - prod_mean) ** 2).sum(axis=0)
        quad = np.sum(y[:, -1, :] ** 2, axis=1)
        return cls(str(Functional(functional).value), d, np.asarray(steps, np.int64), R, mean,
                   comoment, prod_mean, prod_m2, quad, config)

    def merge(self, other: "EnsembleStats") -> "EnsembleStats":
        """Pairwise (Chan et al.) combination; ``self`` holds the lower streams."""
        if self.functional != other.functional or not np.array_equal(self.steps, other.steps):
            raise DomainError("cannot merge accumulators of different functionals or checkpoints")
        na, nb = self.count, other.count
        n = na + nb
        delta = other.mean - self.mean
        mean = self.mean + delta * (nb / n)
        comoment = (self.comoment + other.comoment
                    + delta[:, :, None] * delta[:, None, :] * (na * nb / n))
        dz = other.prod_mean - self.prod_mean
        prod_mean = self.prod_mean + dz * (nb / n)
        prod_m2 = self.prod_m2 + other.prod_m2 + dz * dz * (na * nb / n)
        return replace(self, count=n, mean=mean, comoment=comoment, prod_mean=prod_mean,
                       prod_m2=prod_m2, quad=np.concatenate([self.quad, other.quad]))

    def covariance(self, k: int = -1) -> np.ndarray:
        return self.comoment[k] / (self.count - 1)

    def second_moment(self, k: int = -1) -> np.ndarray:
        """Raw ``E[y y^T]`` estimate."""
        return self.prod_mean[k]

    def second_moment_se(self, k: int = -1) -> np.ndarray:
        return np.sqrt(self.prod_m2[k] / (self.count - 1) / self.count)

    def mean_se(self, k: int = -1) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance(k)) / self.count)


def merge_tree(parts: list) -> EnsembleStats:
    """Merge block summaries along a fixed balanced binary tree."""
    if not parts:
        raise DomainError("nothing to merge")
    while len(parts) > 1:
        nxt = [parts[i].merge(parts[i + 1]) for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]


def _samples(functional, config, pos, cnt, qsl, steps):
    a = config.a
    if functional is Functional.OCCUPATION:
        axis = (cnt[:, :, 0::2] + cnt[:, :, 1::2]).astype(float)
        return axis / steps[None, :, None]
    if functional is Functional.QSL:
        n = float(steps[-1])
        norm = math.log(n) if config.regime.kind is RegimeKind.DIFFUSIVE else math.log(math.log(n))
        return (qsl / norm).reshape(len(qsl), 1, -1)
    return pos / scale(functional, steps, a)[None, :, None]


def _check_functional(config: WalkConfig, functional: Functional, override: bool):
    kind = config.regime.kind
    if functional is Functional.QSL and kind not in _REGIME_OF[functional]:
        raise DomainError("no quadratic strong law in the superdiffusive regime")
    if not override and kind not in _REGIME_OF[functional]:
        raise DomainError(f"functional {functional.value} does not match the "
                          f"{config.regime.name} regime (pass override=True to force it)")


def run_ensemble(config: WalkConfig, runs: int, functional="auto", workers: int = 1,
                 override: bool = False, checkpoints=None, engine: str = "reduced",
                 block: int = BLOCK) -> EnsembleStats:
    """Simulate streams ``0..runs-1`` and summarize the chosen functional.

    ``checkpoints`` defaults to the horizon alone; the QSL functional is
    always taken at the horizon. ``workers`` only changes wall time.
    """
    if functional == "auto":
        functional = config.regime.name
    functional = Functional(functional)
    if int(runs) != runs or runs < 2:
        raise DomainError(f"need at least two runs, got {runs}")
    _check_functional(config, functional, override)
    if checkpoints is None or functional is Functional.QSL:
        checkpoints = [config.horizon]
    steps = np.asarray(checkpoints, np.int64)
    qsl_mode = 0
    if functional is Functional.QSL:
        qsl_mode = 1 if config.regime.kind is RegimeKind.DIFFUSIVE else 2
        if config.horizon < (2 if qsl_mode == 1 else 3):
            raise DomainError("horizon too short for the quadratic strong law")

    def one_block(lo):
        streams = np.arange(lo, min(lo + block, runs), dtype=np.uint64)
        pos, cnt, qsl = simulate_streams(config, streams, steps, engine, qsl_mode)
        y = _samples(functional, config, pos, cnt, qsl, steps)
        return EnsembleStats.from_samples(functional, config.d, steps, y, config)

    starts = range(0, int(runs), block)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=int(workers)) as pool:
            parts = list(pool.map(one_block, starts))
    else:
        parts = [one_block(lo) for lo in starts]
    return merge_tree(parts)


# reports ----------------------------------------------------------------------


def _z(est, target, se):
    est, target, se = np.broadcast_arrays(np.asarray(est, float), np.asarray(target, float),
                                          np.asarray(se, float))
    z = np.zeros(est.shape)
    pos = se > 0
    z[pos] = (est[pos] - target[pos]) / se[pos]
    z[~pos & (est != target)] = np.inf
    return z


def target_matrix(stats: EnsembleStats, target, k: int = -1) -> np.ndarray:
    """Resolve a covariance target for checkpoint ``k`` of a position functional.

    ``target`` may be a :class:`MomentTable` (rescaled by the functional), a
    scalar ``c`` (meaning ``c I_d``) or a full matrix.
    """
    d = stats.d
    if hasattr(target, "second"):
        n = int(stats.steps[k])
        cfg = stats.config
        s = scale(Functional(stats.functional), n, cfg.a if cfg is not None else 0.0)
        return np.asarray(target.second[n - 1], float) / float(s) ** 2
    t = np.asarray(target, float)
    if t.ndim == 0:
        return float(t) * np.eye(d)
    return t


def covariance_report(stats: EnsembleStats, target, threshold: float = Z_THRESHOLD,
                      k: int = -1) -> dict:
    """Componentwise z-scores of the second-moment matrix against ``target``.

    The estimate is the raw second moment ``E[y y^T]``, which equals the
    covariance whenever the mean is zero; off-diagonal targets are whatever
    ``target`` says (zero for scalar targets).
    """
    tgt = target_matrix(stats, target, k)
    est = stats.second_moment(k)
    se = stats.second_moment_se(k)
    z = _z(est, tgt, se)
    return {
        "n": int(stats.steps[k]),
        "estimate": est,
        "target": tgt,
        "standard_error": se,
        "z_scores": z,
        "max_abs_z": float(np.max(np.abs(z))),
        "threshold": threshold,
        "pass": bool(np.all(np.abs(z) < threshold)),
    }


def ks_null_threshold(R: int, d: int, reps: int = 200, quantile: float = 0.99,
                      seed: int = 0) -> float:
    """Quantile of the KS distance between ``R`` chi-square(d) draws and their law."""
    rng = np.random.default_rng(seed)
    law = sps.chi2(d)
    dist = [sps.kstest(rng.chisquare(d, R), law.cdf).statistic for _ in range(reps)]
    return float(np.quantile(dist, quantile))


def normality_check(stats: EnsembleStats, sigma2: float, d: int | None = None,
                    reps: int = 200, quantile: float = 0.99, seed: int = 0) -> dict:
    """Kolmogorov-Smirnov distance of ``|y|^2 / sigma2`` from chi-square(d).

    The pass threshold is the ``quantile`` of the same distance over ``reps``
    exact chi-square samples of the same size.
    """
    if stats.functional not in (Functional.DIFFUSIVE.value, Functional.CRITICAL.value):
        raise DomainError("normality check applies to the diffusive and critical functionals only")
    d = stats.d if d is None else d
    if not sigma2 > 0:
        raise DomainError("sigma2 must be positive")
    x = stats.quad / sigma2
    dist = float(sps.kstest(x, sps.chi2(d).cdf).statistic)
    thr = ks_null_threshold(len(x), d, reps, quantile, seed)
    return {"sigma2": float(sigma2), "dof": d, "gof_distance": dist, "threshold": thr,
            "quantile": quantile, "reps": reps, "pass": dist < thr}


def superdiffusive_limit(stats: EnsembleStats, d: int, p, q=None,
                         threshold: float = Z_THRESHOLD) -> dict:
    """Compare estimates of ``E[L]``, ``E[L L^T]``, ``E|L|^2`` at the horizon.

    Finite-n targets are the exact moments of ``S_n / n^a``; under the
    uniform first step the finite-n ``E[L_n L_n^T]`` closed form is also
    given. The pass flag uses the finite-n targets.
    """
    if stats.functional != Functional.SUPERDIFFUSIVE.value:
        raise DomainError("superdiffusive limit needs the superdiffusive functional")
    cfg = stats.config
    if cfg is not None and cfg.regime.kind is not RegimeKind.SUPERDIFFUSIVE:
        raise DomainError("superdiffusive limit needs a superdiffusive configuration")
    mean_L, second_L, norm_L = limit_L_moments(d, p, q)
    a = float(memory_to_a(d, p))
    n = int(stats.steps[-1])
    table = exact_second_moment(n, d, p, q)
    s2 = float(n) ** (2 * a)
    fin_mean = table.mean[-1] / float(n) ** a
    fin_second = table.second[-1] / s2
    est_mean = stats.mean[-1]
    est_second = stats.second_moment()
    se_mean = stats.mean_se()
    se_second = stats.second_moment_se()
    # |y|^2 is a sum of diagonal products; its SE comes from the stored quad samples
    norm_est = float(np.mean(stats.quad))
    norm_se = float(np.std(stats.quad, ddof=1) / math.sqrt(len(stats.quad)))
    out = {
        "n": n,
        "a": a,
        "estimates": {"E_L": est_mean, "E_LLT": est_second, "E_norm_L_sq": norm_est},
        "standard_errors": {"E_L": se_mean, "E_LLT": se_second, "E_norm_L_sq": norm_se},
        "targets_finite_n": {"E_L": fin_mean, "E_LLT": fin_second,
                             "E_norm_L_sq": float(np.trace(fin_second))},
        "targets_limit": {"E_L": mean_L, "E_LLT": second_L, "E_norm_L_sq": norm_L},
    }
    if q is None:
        b14 = finite_L_second_moment(n, d, a)
        out["targets_finite_n"]["E_LnLnT_closed_form"] = b14 * np.eye(d)
    z = {
        "E_L": _z(est_mean, fin_mean, se_mean),
        "E_LLT": _z(est_second, fin_second, se_second),
        "E_norm_L_sq": _z(norm_est, np.trace(fin_second), norm_se),
    }
    out["z_scores"] = z
    out["limit_gap"] = {"E_LLT": est_second - second_L, "E_norm_L_sq": norm_est - norm_L}
    out["finite_n_gap"] = {"E_norm_L_sq": float(np.trace(fin_second)) - norm_L}
    out["threshold"] = threshold
    out["pass"] = bool(all(np.all(np.abs(v) < threshold) for v in z.values()))
    return out


def occupation_report(stats: EnsembleStats, threshold: float = Z_THRESHOLD) -> dict:
    """Ensemble mean of each axis fraction against ``1/d`` at every checkpoint."""
    if stats.functional != Functional.OCCUPATION.value:
        raise DomainError("occupation report needs the occupation functional")
    d = stats.d
    se = np.sqrt(np.einsum("kii->ki", stats.comoment) / (stats.count - 1) / stats.count)
    z = _z(stats.mean, 1.0 / d, se)
    return {"steps": stats.steps, "estimates": stats.mean, "target": 1.0 / d,
            "standard_errors": se, "z_scores": z, "max_abs_z": float(np.max(np.abs(z))),
            "threshold": threshold, "pass": bool(np.all(np.abs(z) < threshold))}


def gaussian_stats(functional, d: int, steps, cov, runs: int, seed: int = 0,
                   block: int = BLOCK) -> EnsembleStats:
    """Accumulators filled with exact Gaussian draws, for null calibration."""
    rng = np.random.default_rng(seed)
    y = rng.multivariate_normal(np.zeros(d), cov, size=(runs, len(steps)))
    parts = [EnsembleStats.from_samples(functional, d, steps, y[lo:lo + block])
             for lo in range(0, runs, block)]
    return merge_tree(parts)

