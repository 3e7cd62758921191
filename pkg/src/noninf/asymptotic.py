"""Asymptotic confidence intervals for the difference of two binomial proportions.

Every ``*_bounds`` function is vectorized: the counts may be arrays covering a
whole sample space, which is how the rejection regions are built.  The scalar
``*_ci`` wrappers return :class:`ConfidenceInterval` objects.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .foundation import (
    TwoArmData,
    BinomialArm,
    critical_value,
    norm_cdf,
    score_statistic,
    restricted_mle_array,
)

__all__ = [
    "ConfidenceInterval",
    "WilsonLimits",
    "MethodResult",
    "wald_bounds",
    "agresti_caffo_bounds",
    "hauck_anderson_bounds",
    "wilson_bounds",
    "wilson_cc_bounds",
    "newcombe_bounds",
    "newcombe_cc_bounds",
    "fm_bounds",
    "wald_ci",
    "agresti_caffo_ci",
    "hauck_anderson_ci",
    "wilson_limits",
    "newcombe_ci",
    "newcombe_cc_ci",
    "fm_ci",
    "als_ci",
    "als_pvalue",
]


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    two_sided_level: float
    lower_degenerate: bool = False
    upper_degenerate: bool = False

    def __post_init__(self):
        if not (-1.0 <= self.lower <= self.upper <= 1.0):
            raise ValueError(f"invalid interval ({self.lower}, {self.upper})")

    def __iter__(self):
        yield self.lower
        yield self.upper

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


@dataclass(frozen=True)
class WilsonLimits:
    lower: float
    upper: float
    for_arm: str = ""


@dataclass(frozen=True)
class MethodResult:
    """Outcome of one method on one data set.

    ``reject`` is the interval rule (lower bound above ``-margin``) when an
    interval exists, otherwise the p-value rule.  ``reject_by_pvalue`` is
    reported separately for methods that produce a p-value.
    """

    method: str
    interval: ConfidenceInterval | None
    p_value: float | None
    margin: float
    alpha: float
    elapsed: float | None = None

    @property
    def reject_by_interval(self) -> bool | None:
        if self.interval is None:
            return None
        return self.interval.lower > -self.margin

    @property
    def reject_by_pvalue(self) -> bool | None:
        if self.p_value is None:
            return None
        return self.p_value <= self.alpha / 2.0

    @property
    def reject(self) -> bool:
        by_ci = self.reject_by_interval
        return by_ci if by_ci is not None else bool(self.reject_by_pvalue)

    @property
    def decision(self) -> str:
        return "reject_inferiority" if self.reject else "fail_to_reject"


def _clamp(lo, hi):
    return np.clip(lo, -1.0, 1.0), np.clip(hi, -1.0, 1.0)


def _as_float(*arrays):
    return tuple(np.asarray(a, dtype=float) for a in arrays)


def wald_bounds(xt, nt, xc, nc, alpha=0.05):
    xt, nt, xc, nc = _as_float(xt, nt, xc, nc)
    z = critical_value(alpha)
    pt, pc = xt / nt, xc / nc
    half = z * np.sqrt(pt * (1 - pt) / nt + pc * (1 - pc) / nc)
    return _clamp(pt - pc - half, pt - pc + half)


def agresti_caffo_bounds(xt, nt, xc, nc, alpha=0.05):
    xt, nt, xc, nc = _as_float(xt, nt, xc, nc)
    return wald_bounds(xt + 1, nt + 2, xc + 1, nc + 2, alpha)


def hauck_anderson_bounds(xt, nt, xc, nc, alpha=0.05, unbiased=True):
    """Wald-type interval widened by ``1/(2 min(N_T, N_C))``.

    ``unbiased=True`` (the original Hauck-Anderson form) divides each arm's
    variance by ``N - 1`` instead of ``N``; an arm with ``N = 1`` keeps ``N``.
    """
    xt, nt, xc, nc = _as_float(xt, nt, xc, nc)
    z = critical_value(alpha)
    pt, pc = xt / nt, xc / nc
    if unbiased:
        dt, dc = np.where(nt > 1, nt - 1, nt), np.where(nc > 1, nc - 1, nc)
    else:
        dt, dc = nt, nc
    half = z * np.sqrt(pt * (1 - pt) / dt + pc * (1 - pc) / dc) + 1.0 / (2.0 * np.minimum(nt, nc))
    return _clamp(pt - pc - half, pt - pc + half)


def _wilson_root(center, n, z, sign):
    # root of (center - P)^2 = z^2 P (1 - P) / n
    disc = z * z + 4.0 * n * center * (1.0 - center)
    return (2.0 * n * center + z * z + sign * z * np.sqrt(np.maximum(disc, 0.0))) / (2.0 * (n + z * z))


def wilson_bounds(x, n, alpha=0.05):
    x, n = _as_float(x, n)
    z = critical_value(alpha)
    p = x / n
    lo = np.where(x == 0, 0.0, _wilson_root(p, n, z, -1.0))
    hi = np.where(x == n, 1.0, _wilson_root(p, n, z, +1.0))
    return np.clip(lo, 0.0, p), np.clip(hi, p, 1.0)


def wilson_cc_bounds(x, n, alpha=0.05):
    """Continuity-corrected Wilson limits.

    Solves ``|P - p| - 1/(2n) = z sqrt(P(1-P)/n)`` on each side of ``p``; the
    lower branch is an ordinary Wilson root centred at ``p - 1/(2n)``, the upper
    branch one centred at ``p + 1/(2n)``.
    """
    x, n = _as_float(x, n)
    z = critical_value(alpha)
    p = x / n
    shift = 0.5 / n
    lo = np.where(x == 0, 0.0, _wilson_root(p - shift, n, z, -1.0))
    hi = np.where(x == n, 1.0, _wilson_root(p + shift, n, z, +1.0))
    return np.clip(lo, 0.0, p), np.clip(hi, p, 1.0)


def _newcombe_combine(pt, lt, ut, pc, lc, uc):
    d = pt - pc
    lower = d - np.sqrt((pt - lt) ** 2 + (uc - pc) ** 2)
    upper = d + np.sqrt((ut - pt) ** 2 + (pc - lc) ** 2)
    return _clamp(lower, upper)


def newcombe_bounds(xt, nt, xc, nc, alpha=0.05):
    xt, nt, xc, nc = _as_float(xt, nt, xc, nc)
    lt, ut = wilson_bounds(xt, nt, alpha)
    lc, uc = wilson_bounds(xc, nc, alpha)
    return _newcombe_combine(xt / nt, lt, ut, xc / nc, lc, uc)


def newcombe_cc_bounds(xt, nt, xc, nc, alpha=0.05):
    xt, nt, xc, nc = _as_float(xt, nt, xc, nc)
    lt, ut = wilson_cc_bounds(xt, nt, alpha)
    lc, uc = wilson_cc_bounds(xc, nc, alpha)
    return _newcombe_combine(xt / nt, lt, ut, xc / nc, lc, uc)


def fm_bounds(xt, nt, xc, nc, margin, alpha=0.05, p_test=None):
    """Observed difference +/- z times the SE at the null restricted MLE (constraint ``-margin``)."""
    xt, nt, xc, nc = _as_float(xt, nt, xc, nc)
    z = critical_value(alpha)
    if p_test is None:
        p_test = restricted_mle_array(xt, nt, xc, nc, -margin)
    p_control = p_test + margin
    var = p_test * (1 - p_test) / nt + p_control * (1 - p_control) / nc
    d = xt / nt - xc / nc
    half = z * np.sqrt(np.maximum(var, 0.0))
    return _clamp(d - half, d + half)


# ---------------------------------------------------------------------------
# scalar wrappers

def _level_to_alpha(level: float) -> float:
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    return 1.0 - level


def _interval(bounds_fn, data: TwoArmData, level: float, *extra, **kwargs) -> ConfidenceInterval:
    alpha = _level_to_alpha(level)
    (xt, xc), (nt, nc) = data.observed, data.shape
    lo, hi = bounds_fn(xt, nt, xc, nc, *extra, alpha, **kwargs)
    return ConfidenceInterval(float(lo), float(hi), level)


def wald_ci(data: TwoArmData, level: float = 0.95) -> ConfidenceInterval:
    return _interval(wald_bounds, data, level)


def agresti_caffo_ci(data: TwoArmData, level: float = 0.95) -> ConfidenceInterval:
    return _interval(agresti_caffo_bounds, data, level)


def hauck_anderson_ci(data: TwoArmData, level: float = 0.95, unbiased: bool = True) -> ConfidenceInterval:
    return _interval(hauck_anderson_bounds, data, level, unbiased=unbiased)


def newcombe_ci(data: TwoArmData, level: float = 0.95) -> ConfidenceInterval:
    return _interval(newcombe_bounds, data, level)


def newcombe_cc_ci(data: TwoArmData, level: float = 0.95) -> ConfidenceInterval:
    return _interval(newcombe_cc_bounds, data, level)


def fm_ci(data: TwoArmData, margin: float, level: float = 0.95) -> ConfidenceInterval:
    return _interval(fm_bounds, data, level, margin)


def wilson_limits(arm: BinomialArm, level: float = 0.95, continuity: bool = False,
                  name: str = "") -> WilsonLimits:
    fn = wilson_cc_bounds if continuity else wilson_bounds
    lo, hi = fn(arm.successes, arm.trials, _level_to_alpha(level))
    return WilsonLimits(float(lo), float(hi), name)


# ---------------------------------------------------------------------------
# asymptotic likelihood score (ALS) interval and p-value

_DELTA_EDGE = 1.0 - 1e-12


def _bracket_root(f, start: float, step: float, direction: float, limit: float):
    """Walk from ``start`` in ``direction`` with geometrically growing steps
    until ``f`` changes sign.  Returns ``(a, b)`` or ``None`` if ``limit`` is hit first."""
    fa = f(start)
    a = start
    while True:
        b = start + direction * step
        if direction * (b - limit) >= 0:
            b = limit
        fb = f(b)
        if np.sign(fb) != np.sign(fa) or fb == 0:
            return (a, b) if a < b else (b, a)
        if b == limit:
            return None
        a, fa = b, fb
        step *= 2.0


def _score_z(data: TwoArmData, delta: float, bias_correction: bool = False) -> float:
    return score_statistic(data, delta, bias_correction).z


def als_ci(data: TwoArmData, level: float = 0.95, tol: float = 1e-12,
           bias_correction: bool = False) -> ConfidenceInterval:
    """Invert the score test: the interval of ``delta`` with ``|z(delta)| <= z_crit``.

    ``bias_correction=True`` gives the Miettinen-Nurminen interval.
    """
    z_crit = critical_value(_level_to_alpha(level))
    d = min(max(data.difference, -_DELTA_EDGE), _DELTA_EDGE)

    def lower_fn(delta):
        return _score_z(data, delta, bias_correction) - z_crit

    def upper_fn(delta):
        return _score_z(data, delta, bias_correction) + z_crit

    bounds = []
    for fn, direction, edge in ((lower_fn, -1.0, -_DELTA_EDGE), (upper_fn, 1.0, _DELTA_EDGE)):
        bracket = _bracket_root(fn, d, 1e-3, direction, edge)
        if bracket is None:
            bounds.append((math.copysign(1.0, direction), True))
        else:
            root = optimize.brentq(fn, *bracket, xtol=tol, rtol=4 * np.finfo(float).eps)
            bounds.append((root, False))
    (lo, lo_deg), (hi, hi_deg) = bounds
    return ConfidenceInterval(lo, hi, level, lo_deg, hi_deg)


def als_pvalue(data: TwoArmData, margin: float, bias_correction: bool = False) -> float:
    """One-sided p-value ``1 - Phi(z)`` of the score test of ``P_T - P_C <= -margin``."""
    return float(norm_cdf(-_score_z(data, -margin, bias_correction)))
