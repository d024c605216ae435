"""Limit constants of the three regimes."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from ..model import DomainError, RegimeKind, _check_dim, as_number, classify_regime
from .gamma import vn_limit_constant
from .hyper import hyper3f2_unit


@dataclass(frozen=True)
class LimitConstants:
    d: int
    p: float
    q: float | None
    regime: str
    a: float
    p_d: float
    covariance_scale: float | None
    vn_constant: float
    vn_constant_bound: float = 0.0
    mean_L: np.ndarray | None = field(default=None, repr=False)
    second_moment_L: np.ndarray | None = field(default=None, repr=False)
    mean_sq_norm_L: float | None = None

    def as_dict(self) -> dict:
        out = {
            "d": self.d,
            "p": self.p,
            "q": self.q,
            "regime": self.regime,
            "a": self.a,
            "p_d": self.p_d,
            "covariance_scale": self.covariance_scale,
            "vn_constant": self.vn_constant,
        }
        if self.regime == RegimeKind.SUPERDIFFUSIVE.value:
            out["vn_limit_bound"] = self.vn_constant_bound
            out["E_L"] = self.mean_L.tolist()
            out["E_LLT"] = self.second_moment_L.tolist()
            out["E_norm_L_sq"] = self.mean_sq_norm_L
        return out


def limit_L_moments(d: int, p, q=None) -> tuple:
    """``E[L]``, ``E[L L^T]`` and ``E[|L|^2]`` in the superdiffusive regime.

    ``L`` is the limit of ``S_n / n^a``. For the uniform first step
    ``E[L] = 0`` and ``E[L L^T] = I/(d(2a-1)Gamma(2a))``. With the first step
    biased by ``q`` and ``c = (2dq-1)/(2d-1)``:

        E[L]     = c / Gamma(a+1) e_1
        E[L L^T] = I/(d(2a-1)Gamma(2a)) + 2c/Gamma(2a+1) (e_1 e_1^T - I/d)

    The rank-one term follows from solving the second-moment recursion with
    ``E[Sigma_n] - (n/d) I = c (e_1 e_1^T - I/d) / a_n``; its factor 2 is
    confirmed by the case ``a = 1``, where ``L = X_1``.
    """
    d = _check_dim(d)
    regime = classify_regime(d, p)
    if regime.kind is not RegimeKind.SUPERDIFFUSIVE:
        raise DomainError(f"L exists only in the superdiffusive regime, got {regime.name}")
    a = regime.a
    base = 1.0 / (d * (2 * a - 1) * math.exp(gammaln(2 * a)))
    second = np.eye(d) * base
    mean = np.zeros(d)
    if q is not None:
        q = float(as_number(q))
        c = (2 * d * q - 1) / (2 * d - 1)
        mean[0] = c / math.exp(gammaln(a + 1))
        rank_one = -np.eye(d) / d
        rank_one[0, 0] += 1.0
        second = second + 2 * c / math.exp(gammaln(2 * a + 1)) * rank_one
    norm_sq = 1.0 / ((2 * a - 1) * math.exp(gammaln(2 * a)))
    return mean, second, norm_sq


def limit_constants(d: int, p, q=None, tol: float = 1e-10) -> LimitConstants:
    """Regime, scaling constants and, above criticality, the moments of ``L``."""
    d = _check_dim(d)
    regime = classify_regime(d, p)
    a = regime.a
    common = dict(d=d, p=float(as_number(p)), q=None if q is None else float(as_number(q)),
                  regime=regime.name, a=a, p_d=regime.p_d)
    if regime.kind is RegimeKind.DIFFUSIVE:
        return LimitConstants(covariance_scale=1.0 / (d * (1 - 2 * a)),
                              vn_constant=vn_limit_constant(a), **common)
    if regime.kind is RegimeKind.CRITICAL:
        return LimitConstants(covariance_scale=1.0 / d, vn_constant=math.pi / 4, **common)
    mean, second, norm_sq = limit_L_moments(d, p, q)
    h = hyper3f2_unit(a, tol)
    return LimitConstants(covariance_scale=None, vn_constant=h.value, vn_constant_bound=h.bound,
                          mean_L=mean, second_moment_L=second, mean_sq_norm_L=norm_sq, **common)
