"""Exact operating characteristics: rejection regions, type I error, power, sample size."""
from __future__ import annotations

import functools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import asymptotic as asy
from .exact import els_pvalues, lower_tail, table_grid
from .foundation import binom_pmf_rows, critical_value, norm_ppf, restricted_mle_array

__all__ = [
    "METHODS",
    "OC_METHODS",
    "OcScenario",
    "OcResult",
    "RejectionRegion",
    "SampleSizeSpec",
    "rejection_region",
    "region_probability",
    "exact_type1",
    "exact_power",
    "fm_sample_size",
    "table_sweep",
    "summarize_type1",
]

# display name for each method identifier
METHODS = {
    "wald": "Wald",
    "ac": "AC",
    "ha": "HA",
    "ncc": "NCC",
    "nc": "NC",
    "als": "ALS",
    "als_mn": "ALS-MN",
    "fm": "FM",
    "els": "ELS",
    "es": "ES",
}
# "als_mn" is ALS with the N/(N-1) variance factor; it is not part of the default set
# the seven methods compared in the type I error tables, in table order
OC_METHODS = ("wald", "ac", "ha", "ncc", "nc", "als", "els")

_INTERVAL_BOUNDS = {
    "wald": asy.wald_bounds,
    "ac": asy.agresti_caffo_bounds,
    "ha": asy.hauck_anderson_bounds,
    "nc": asy.newcombe_bounds,
    "ncc": asy.newcombe_cc_bounds,
}

PRUNE_BOUND = 1e-12


def _method_key(method: str) -> str:
    key = method.lower()
    if key not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {sorted(METHODS)}")
    return key


@dataclass(frozen=True)
class OcScenario:
    n_test: int
    n_control: int
    margin: float
    p_control: float
    alpha: float = 0.05

    def __post_init__(self):
        if self.n_test < 1 or self.n_control < 1:
            raise ValueError("arm sizes must be >= 1")
        if not 0.0 < self.margin < 1.0:
            raise ValueError(f"margin must lie in (0, 1), got {self.margin}")
        if not 0.0 <= self.p_control <= 1.0:
            raise ValueError(f"p_control must lie in [0, 1], got {self.p_control}")
        if self.p_control - self.margin < -1e-12:
            raise ValueError(
                f"null test proportion p_control - margin = {self.p_control - self.margin:.4g} is negative"
            )

    @property
    def p_test_null(self) -> float:
        return max(self.p_control - self.margin, 0.0)

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_test, self.n_control


@dataclass(frozen=True)
class OcResult:
    scenario: OcScenario
    method: str
    type1_error: float
    power: float | None = None


@dataclass(frozen=True, eq=False)
class RejectionRegion:
    """Tables of the sample space for which a method concludes non-inferiority."""

    method: str
    shape: tuple[int, int]
    margin: float
    alpha: float
    mask: np.ndarray = field(repr=False)

    def __contains__(self, table) -> bool:
        i, j = table
        return bool(self.mask[i, j])

    @property
    def size(self) -> int:
        return int(self.mask.sum())

    def row_ranges(self) -> list[tuple[int, int] | None]:
        """Per test count, the rejecting control counts as a half-open range.

        Raises ``ValueError`` if some row is not contiguous.
        """
        out = []
        for i, row in enumerate(self.mask):
            idx = np.flatnonzero(row)
            if idx.size == 0:
                out.append(None)
                continue
            if idx[-1] - idx[0] + 1 != idx.size:
                raise ValueError(f"row {i} of the region is not contiguous")
            out.append((int(idx[0]), int(idx[-1]) + 1))
        return out

    def is_prefix_shaped(self) -> bool:
        """True if every row rejects exactly the control counts below some cut."""
        m = self.mask
        return bool(np.all(m[:, 1:] <= m[:, :-1]))


# ---------------------------------------------------------------------------
# rejection regions

def _els_region_full(grid, alpha: float) -> np.ndarray:
    nt, nc = grid.shape
    ii, jj = np.meshgrid(np.arange(nt + 1), np.arange(nc + 1), indexing="ij")
    p = els_pvalues(grid, ii.ravel(), jj.ravel()).reshape(ii.shape)
    return p <= alpha / 2.0


def _els_region_boundary(grid, alpha: float, n_check: int = 16) -> np.ndarray:
    """Rejection region assuming ELS p-values rise with the control count.

    The per-row cut is found by a vectorized binary search; each row is then
    spot-checked on ``n_check`` spread-out control counts and both sides of
    the cut, and any row that contradicts the assumption is evaluated in full.
    """
    nt, nc = grid.shape
    level = alpha / 2.0
    rows = np.arange(nt + 1)
    lo = np.full(nt + 1, -1)  # last rejecting j
    hi = np.full(nt + 1, nc + 1)  # first accepting j
    while True:
        active = np.flatnonzero(hi - lo > 1)
        if active.size == 0:
            break
        mid = (lo[active] + hi[active]) // 2
        rej = els_pvalues(grid, rows[active], mid) <= level
        lo[active] = np.where(rej, mid, lo[active])
        hi[active] = np.where(rej, hi[active], mid)

    mask = np.arange(nc + 1)[None, :] <= lo[:, None]
    probe = np.unique(np.linspace(0, nc, min(n_check, nc + 1)).round().astype(int))
    cols = np.concatenate([np.broadcast_to(probe, (nt + 1, probe.size)),
                           np.clip(np.stack([lo - 1, lo, hi, hi + 1], axis=1), 0, nc)], axis=1)
    ri = np.repeat(rows, cols.shape[1])
    cj = cols.ravel()
    rej = (els_pvalues(grid, ri, cj) <= level).reshape(cols.shape)
    bad = np.flatnonzero(np.any(rej != mask[rows[:, None], cols], axis=1))
    for i in bad:
        mask[i] = els_pvalues(grid, np.full(nc + 1, i), np.arange(nc + 1)) <= level
    return mask


def _es_region(shape, margin: float, alpha: float, grid_points: int) -> np.ndarray:
    nt, nc = shape
    grid = table_grid(nt, nc, -margin)
    nuisance = np.linspace(0.0, 1.0 - margin, grid_points)
    mask = np.zeros((nt + 1, nc + 1), dtype=bool)
    for i in range(nt + 1):
        for j in range(nc + 1):
            ps = np.append(nuisance, grid.p_test[i, j])
            p = lower_tail(grid, grid.rank[i, j], ps, ps + margin).max()
            mask[i, j] = p <= alpha / 2.0
    return mask


@functools.lru_cache(maxsize=64)
def _region_mask(method: str, nt: int, nc: int, margin: float, alpha: float,
                 strategy: str, grid_points: int) -> np.ndarray:
    if alpha <= 0.0:
        return np.zeros((nt + 1, nc + 1), dtype=bool)
    i = np.arange(nt + 1, dtype=float)[:, None]
    j = np.arange(nc + 1, dtype=float)[None, :]
    if method in _INTERVAL_BOUNDS:
        lower, _ = _INTERVAL_BOUNDS[method](i, nt, j, nc, alpha)
        mask = lower > -margin
    elif method in ("als", "als_mn", "fm"):
        grid = table_grid(nt, nc, -margin)
        if method == "als":
            mask = grid.z >= critical_value(alpha)
        elif method == "als_mn":
            mask = grid.z * math.sqrt((nt + nc - 1.0) / (nt + nc)) >= critical_value(alpha)
        else:
            lower, _ = asy.fm_bounds(i, nt, j, nc, margin, alpha, p_test=grid.p_test)
            mask = lower > -margin
    elif method == "els":
        grid = table_grid(nt, nc, -margin)
        if strategy == "auto":
            strategy = "full" if grid.size <= 40_000 else "boundary"
        if strategy == "full":
            mask = _els_region_full(grid, alpha)
        elif strategy == "boundary":
            mask = _els_region_boundary(grid, alpha)
        else:
            raise ValueError(f"unknown strategy {strategy!r}")
    else:
        mask = _es_region((nt, nc), margin, alpha, grid_points)
    mask = np.broadcast_to(mask, (nt + 1, nc + 1)).copy()
    mask.setflags(write=False)
    return mask


def rejection_region(method: str, shape: tuple[int, int], margin: float, alpha: float = 0.05,
                     strategy: str = "auto", grid_points: int = 1000) -> RejectionRegion:
    """Tables where ``method`` rejects ``H0: P_T - P_C <= -margin`` at one-sided level ``alpha/2``.

    Interval methods reject when the lower bound of the two-sided ``1 - alpha``
    interval exceeds ``-margin``; ALS and ELS when the p-value is at most
    ``alpha/2``.  ``strategy`` applies to ELS only: ``"full"`` evaluates every
    table, ``"boundary"`` searches the per-row cut, ``"auto"`` picks by size.
    """
    key = _method_key(method)
    nt, nc = int(shape[0]), int(shape[1])
    if not 0.0 < margin < 1.0:
        raise ValueError(f"margin must lie in (0, 1), got {margin}")
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
    mask = _region_mask(key, nt, nc, float(margin), float(alpha), strategy, int(grid_points))
    return RejectionRegion(key, (nt, nc), float(margin), float(alpha), mask)


# ---------------------------------------------------------------------------
# probabilities of regions

def _window(n: int, p: float, width: float = 10.0) -> tuple[int, int]:
    sd = math.sqrt(n * p * (1 - p))
    lo = max(0, int(math.floor(n * p - width * sd)) - 1)
    hi = min(n, int(math.ceil(n * p + width * sd)) + 1)
    return lo, hi


def region_probability(region: RejectionRegion, p_test: float, p_control: float,
                       prune: bool = True) -> float:
    """Probability of the region when the arms have success rates ``p_test``, ``p_control``.

    With ``prune`` the sum is restricted to a box around the binomial means;
    the box grows until the probability outside it is certified below 1e-12.
    """
    nt, nc = region.shape
    a = binom_pmf_rows(nt, p_test)
    b = binom_pmf_rows(nc, p_control)
    mask = region.mask
    if prune:
        width = 10.0
        while True:
            ilo, ihi = _window(nt, p_test, width)
            jlo, jhi = _window(nc, p_control, width)
            omitted = (a[:ilo].sum() + a[ihi + 1:].sum()) + (b[:jlo].sum() + b[jhi + 1:].sum())
            if omitted <= PRUNE_BOUND or (ilo == 0 and ihi == nt and jlo == 0 and jhi == nc):
                break
            width *= 1.5
        a, b = a[ilo:ihi + 1], b[jlo:jhi + 1]
        mask = mask[ilo:ihi + 1, jlo:jhi + 1]
    inner = np.where(mask, b[None, :], 0.0).sum(axis=1)
    return float(min(np.dot(a, inner), 1.0))


def exact_type1(method: str, scenario: OcScenario, strategy: str = "auto",
                prune: bool = True) -> OcResult:
    """Exact size of ``method`` at the null boundary ``P_T = P_C - margin``."""
    region = rejection_region(method, scenario.shape, scenario.margin, scenario.alpha, strategy)
    size = region_probability(region, scenario.p_test_null, scenario.p_control, prune)
    return OcResult(scenario, region.method, size)


def exact_power(method: str, shape: tuple[int, int], margin: float, alpha: float,
                p_test: float, p_control: float, strategy: str = "auto") -> float:
    if not (0.0 <= p_test <= 1.0 and 0.0 <= p_control <= 1.0):
        raise ValueError("proportions must lie in [0, 1]")
    region = rejection_region(method, shape, margin, alpha, strategy)
    return region_probability(region, p_test, p_control)


# ---------------------------------------------------------------------------
# Farrington-Manning sample size

@dataclass(frozen=True)
class SampleSizeSpec:
    margin: float
    p_control: float
    p_test_alt: float | None = None
    power: float = 0.80
    allocation: tuple[int, int] = (1, 1)
    alpha: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.margin < 1.0:
            raise ValueError(f"margin must lie in (0, 1), got {self.margin}")
        if not 0.0 < self.power < 1.0:
            raise ValueError(f"power must lie in (0, 1), got {self.power}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        for p in (self.p_control, self.alt):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"proportions must lie in [0, 1], got {p}")
        if min(self.allocation) <= 0:
            raise ValueError("allocation ratio entries must be positive")
        if self.alt - self.p_control <= -self.margin:
            raise ValueError("the alternative P_T - P_C must exceed -margin")

    @property
    def alt(self) -> float:
        return self.p_control if self.p_test_alt is None else self.p_test_alt

    @property
    def ratio(self) -> Fraction:
        """N_C / N_T."""
        return Fraction(self.allocation[1], self.allocation[0])


def fm_sample_size(spec: SampleSizeSpec, rounding: str = "ceil") -> tuple[int, int]:
    """Farrington-Manning sample sizes ``(N_T, N_C)`` for the score test.

    The null variance uses the restricted MLE of the design proportions under
    ``P_T - P_C = -margin``; the alternative variance uses the design
    proportions themselves.

    ``rounding="ceil"`` rounds the test arm up and sets ``N_C = ceil(ratio N_T)``.
    ``rounding="nearest"`` rounds the smaller arm to the nearest integer and
    scales the other arm by the allocation ratio (rounded up if fractional).
    """
    r = float(spec.ratio)
    pt, pc = spec.alt, spec.p_control
    pt0 = float(restricted_mle_array(pt, 1.0, pc * r, r, -spec.margin))
    pc0 = pt0 + spec.margin
    var0 = pt0 * (1 - pt0) + pc0 * (1 - pc0) / r
    var1 = pt * (1 - pt) + pc * (1 - pc) / r
    z_a = critical_value(spec.alpha)
    z_b = norm_ppf(spec.power)
    n = ((z_a * math.sqrt(var0) + z_b * math.sqrt(var1)) / (pt - pc + spec.margin)) ** 2
    if rounding == "ceil":
        n_test = math.ceil(n - 1e-9)
        return n_test, math.ceil(n_test * spec.ratio)
    if rounding != "nearest":
        raise ValueError(f"rounding must be 'ceil' or 'nearest', got {rounding!r}")
    if spec.ratio >= 1:
        n_test = max(1, round(n))
        return n_test, math.ceil(n_test * spec.ratio)
    n_control = max(1, round(n * r))
    return math.ceil(n_control / spec.ratio), n_control


# ---------------------------------------------------------------------------
# sweeps

def _sweep_row(args):
    scenario, methods, strategy = args
    return {m: exact_type1(m, scenario, strategy).type1_error for m in methods}


def table_sweep(scenarios, methods=OC_METHODS, jobs: int = 1, strategy: str = "auto") -> list[dict]:
    """Exact type I errors for each scenario and method.

    Returns one dict per scenario, in input order, mapping method identifiers
    to type I errors (proportions).  ``jobs > 1`` spreads rows over processes;
    results do not depend on ``jobs``.
    """
    methods = tuple(_method_key(m) for m in methods)
    if not methods:
        raise ValueError("at least one method is required")
    work = [(s, methods, strategy) for s in scenarios]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_row, work))
    else:
        rows = [_sweep_row(w) for w in work]
    return rows


def summarize_type1(values, nominal: float = 0.025) -> dict:
    """Summary statistics of a set of type I errors (all in the same units as ``nominal``).

    Keys: ``pct_above`` (percent of entries above nominal), ``mean_distance``,
    ``range``, ``min``, ``max``, ``mean_at_or_below``, ``mean_above``; the
    last two are ``None`` when there are no such entries.
    """
    v = np.asarray(list(values), dtype=float)
    if v.size == 0:
        raise ValueError("no values to summarize")
    above = v[v > nominal]
    below = v[v <= nominal]
    return {
        "pct_above": 100.0 * above.size / v.size,
        "mean_distance": float(np.mean(np.abs(v - nominal))),
        "range": float(v.max() - v.min()),
        "min": float(v.min()),
        "max": float(v.max()),
        "mean_at_or_below": float(below.mean()) if below.size else None,
        "mean_above": float(above.mean()) if above.size else None,
    }
