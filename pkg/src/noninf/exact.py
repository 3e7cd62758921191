"""Exact likelihood score (ELS) and exact score (ES) inference by full enumeration.

All tables of the sample space ``{0..N_T} x {0..N_C}`` are ranked by their
score statistic at a fixed constraint.  Tail probabilities over "at least as
extreme" sets are then sums of binomial probabilities, which are evaluated
row by row: within a row (fixed test count) the score decreases with the
control count, so each row contributes a binomial CDF segment.  Rows where
that ordering fails are summed explicitly.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .asymptotic import ConfidenceInterval, als_ci
from .foundation import (
    TwoArmData,
    binom_pmf_rows,
    restricted_mle_scalar,
    score_z_array,
)

__all__ = [
    "TableGrid",
    "ExactCiState",
    "table_grid",
    "lower_tail",
    "upper_tail",
    "els_pvalue",
    "els_pvalues",
    "es_pvalue",
    "els_confidence_interval",
]

# score values closer than this (relative) are treated as ties
TIE_RTOL = 1e-10
_CHUNK_ELEMENTS = 4_000_000
_DELTA_EDGE = 1.0 - 1e-9


def _dense_rank_desc(values: np.ndarray) -> np.ndarray:
    flat = values.ravel()
    order = np.argsort(-flat, kind="stable")
    s = flat[order]
    a, b = s[:-1], s[1:]
    finite = np.isfinite(a) & np.isfinite(b)
    with np.errstate(invalid="ignore"):
        scale = np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
        tie = (a == b) | (finite & (a - b <= TIE_RTOL * scale))
    dense = np.concatenate(([0], np.cumsum(~tie)))
    rank = np.empty(flat.size, dtype=np.int64)
    rank[order] = dense
    return rank.reshape(values.shape)


@dataclass(frozen=True, eq=False)
class TableGrid:
    """Score statistics of every table at one constraint ``P_T - P_C = delta``.

    ``rank`` is the dense rank of ``z`` in descending order (0 is the table most
    in favour of a larger test proportion); ties share a rank.
    """

    n_test: int
    n_control: int
    delta: float
    z: np.ndarray
    p_test: np.ndarray
    rank: np.ndarray
    row_monotone: np.ndarray
    _keys: np.ndarray = field(repr=False)
    _stride: int = field(repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_test, self.n_control

    @property
    def size(self) -> int:
        return (self.n_test + 1) * (self.n_control + 1)

    @property
    def sort_order(self) -> np.ndarray:
        """Flat indices of the tables ordered by non-increasing score."""
        return np.argsort(self.rank.ravel(), kind="stable")

    def rank_of(self, i: int, j: int) -> int:
        return int(self.rank[i, j])

    def count_at_most(self, thresholds) -> np.ndarray:
        """Per row, the number of tables with rank ``<= threshold``; shape ``(m, N_T + 1)``."""
        thr = np.asarray(thresholds, dtype=np.int64).reshape(-1, 1)
        offs = np.arange(self.n_test + 1, dtype=np.int64) * self._stride
        pos = np.searchsorted(self._keys, thr + offs, side="right")
        return pos - np.arange(self.n_test + 1) * (self.n_control + 1)

    def count_below(self, thresholds) -> np.ndarray:
        """Per row, the number of tables with rank ``< threshold``."""
        thr = np.asarray(thresholds, dtype=np.int64).reshape(-1, 1)
        offs = np.arange(self.n_test + 1, dtype=np.int64) * self._stride
        pos = np.searchsorted(self._keys, thr + offs, side="left")
        return pos - np.arange(self.n_test + 1) * (self.n_control + 1)


def _build_grid(n_test: int, n_control: int, delta: float) -> TableGrid:
    i = np.arange(n_test + 1, dtype=float)[:, None]
    j = np.arange(n_control + 1, dtype=float)[None, :]
    z, p_test = score_z_array(i, n_test, j, n_control, delta)
    z = np.broadcast_to(z, (n_test + 1, n_control + 1)).copy()
    p_test = np.broadcast_to(p_test, z.shape).copy()
    rank = _dense_rank_desc(z)
    row_monotone = np.all(np.diff(rank, axis=1) >= 0, axis=1)
    stride = int(rank.max()) + 1
    # per-row sorted ranks shifted by row: one globally sorted search key
    keys = (np.sort(rank, axis=1) + np.arange(n_test + 1)[:, None] * stride).ravel()
    for arr in (z, p_test, rank, row_monotone, keys):
        arr.setflags(write=False)
    return TableGrid(n_test, n_control, float(delta), z, p_test, rank, row_monotone, keys, stride)


@functools.lru_cache(maxsize=16)
def _cached_grid(n_test: int, n_control: int, delta: float) -> TableGrid:
    return _build_grid(n_test, n_control, delta)


def table_grid(n_test: int, n_control: int, delta: float, cache: bool = True) -> TableGrid:
    """Score grid for a shape at constraint ``delta`` (cached per ``(shape, delta)``)."""
    if n_test < 1 or n_control < 1:
        raise ValueError("arm sizes must be >= 1")
    if not -1.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (-1, 1), got {delta}")
    if cache:
        return _cached_grid(int(n_test), int(n_control), float(delta))
    return _build_grid(int(n_test), int(n_control), float(delta))


# ---------------------------------------------------------------------------
# tail probabilities over rank-defined sets

def _chunks(m: int, width: int):
    step = max(1, _CHUNK_ELEMENTS // max(width, 1))
    for start in range(0, m, step):
        yield slice(start, min(m, start + step))


def _tail(grid: TableGrid, thresholds, p_test, p_control, upper: bool) -> np.ndarray:
    thr = np.atleast_1d(np.asarray(thresholds, dtype=np.int64))
    pt = np.atleast_1d(np.asarray(p_test, dtype=float))
    pc = np.atleast_1d(np.asarray(p_control, dtype=float))
    thr, pt, pc = np.broadcast_arrays(thr, pt, pc)
    out = np.empty(thr.shape[0])
    irregular = np.flatnonzero(~grid.row_monotone)
    for sl in _chunks(thr.shape[0], grid.n_test + grid.n_control + 2):
        a = binom_pmf_rows(grid.n_test, pt[sl])
        b = binom_pmf_rows(grid.n_control, pc[sl])
        m = a.shape[0]
        if upper:
            cum = np.zeros((m, grid.n_control + 2))
            cum[:, :-1] = np.cumsum(b[:, ::-1], axis=1)[:, ::-1]
            counts = grid.count_below(thr[sl])
        else:
            cum = np.zeros((m, grid.n_control + 2))
            cum[:, 1:] = np.cumsum(b, axis=1)
            counts = grid.count_at_most(thr[sl])
        inner = np.take_along_axis(cum, counts, axis=1)
        for k in irregular:
            if upper:
                mask = grid.rank[k][None, :] >= thr[sl][:, None]
            else:
                mask = grid.rank[k][None, :] <= thr[sl][:, None]
            inner[:, k] = np.sum(np.where(mask, b, 0.0), axis=1)
        out[sl] = np.sum(a * inner, axis=1)
    return np.minimum(out, 1.0)


def lower_tail(grid: TableGrid, thresholds, p_test, p_control) -> np.ndarray:
    """P(rank <= threshold), i.e. score at least as large as the threshold table's."""
    return _tail(grid, thresholds, p_test, p_control, upper=False)


def upper_tail(grid: TableGrid, thresholds, p_test, p_control) -> np.ndarray:
    """P(rank >= threshold), i.e. score at most the threshold table's."""
    return _tail(grid, thresholds, p_test, p_control, upper=True)


# ---------------------------------------------------------------------------
# p-values

def _check_margin(margin: float) -> None:
    if not 0.0 < margin < 1.0:
        raise ValueError(f"margin must lie in (0, 1), got {margin}")


def els_pvalues(grid: TableGrid, i, j) -> np.ndarray:
    """ELS p-values of the tables ``(i, j)`` against the grid's constraint.

    Each table's tail is summed at its own restricted MLE, which the grid
    already holds.
    """
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    pt = grid.p_test[i, j]
    return lower_tail(grid, grid.rank[i, j], pt, pt - grid.delta).reshape(np.shape(i))


def els_pvalue(data: TwoArmData, margin: float) -> float:
    """Exact likelihood score p-value for ``H0: P_T - P_C <= -margin``.

    Sums the null probabilities of every table whose score is at least the
    observed one, with the nuisance proportion fixed at its restricted MLE.
    """
    _check_margin(margin)
    grid = table_grid(*data.shape, -margin)
    return float(els_pvalues(grid, *data.observed))


def es_pvalue(data: TwoArmData, margin: float, grid_points: int = 1000) -> float:
    """Exact score p-value: the tail probability maximized over the nuisance domain.

    The domain ``[0, 1 - margin]`` of the test proportion is scanned on
    ``grid_points`` equally spaced values plus the restricted MLE, so the result
    is never below :func:`els_pvalue`.
    """
    _check_margin(margin)
    grid = table_grid(*data.shape, -margin)
    i, j = data.observed
    nuisance = np.append(np.linspace(0.0, 1.0 - margin, grid_points), grid.p_test[i, j])
    tails = lower_tail(grid, grid.rank[i, j], nuisance, nuisance + margin)
    return float(np.max(tails))


# ---------------------------------------------------------------------------
# ELS confidence interval

@dataclass(frozen=True, eq=False)
class ExactCiState:
    """Rejection sets frozen at the asymptotic score bounds."""

    als_lower: float
    als_upper: float
    lower_grid: TableGrid | None
    upper_grid: TableGrid | None
    observed: tuple[int, int]

    def lower_rejection_set(self) -> np.ndarray:
        g = self.lower_grid
        return g.rank <= g.rank[self.observed]

    def upper_rejection_set(self) -> np.ndarray:
        g = self.upper_grid
        return g.rank >= g.rank[self.observed]


def _root_near(f, seed: float, direction: float, lo_edge: float, hi_edge: float, tol: float):
    """Root of ``f`` reached by walking from ``seed`` along ``direction``.

    Returns ``(root, degenerate)``; a degenerate root is the edge reached
    without a sign change.
    """
    limit = hi_edge if direction > 0 else lo_edge
    a, fa = seed, f(seed)
    if fa == 0.0:
        return seed, False
    step = 1e-3
    while True:
        b = a + direction * step
        if direction * (b - limit) >= 0:
            b = limit
        fb = f(b)
        if fb == 0.0:
            return b, False
        if np.sign(fb) != np.sign(fa):
            lo, hi = (a, b) if a < b else (b, a)
            root = optimize.brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=200)
            return root, False
        if b == limit:
            return limit, True
        a, fa = b, fb
        step *= 2.0


def els_confidence_interval(
    data: TwoArmData,
    level: float = 0.95,
    nuisance: str = "reestimate",
    tol: float = 1e-10,
    return_state: bool = False,
):
    """Test-based ELS interval for ``P_T - P_C``.

    The "at least as extreme" sets are fixed at the asymptotic score bounds.
    The lower bound solves ``g_L(delta) = alpha/2`` where ``g_L`` is the null
    probability of the lower set with proportions at the restricted MLE under
    ``P_T - P_C = delta``; the upper bound likewise.  Root finding starts at
    the asymptotic bound.

    ``nuisance="fixed"`` keeps the test proportion frozen at its restricted MLE
    at the asymptotic bound instead of re-estimating it for each ``delta``.
    """
    if nuisance not in ("reestimate", "fixed"):
        raise ValueError(f"unknown nuisance mode {nuisance!r}")
    alpha = 1.0 - level
    target = alpha / 2.0
    xt, xc = data.observed
    nt, nc = data.shape
    seed_ci = als_ci(data, level)
    seeds = (seed_ci.lower, seed_ci.upper)

    def proportions(delta, frozen):
        if frozen is None:
            p = restricted_mle_scalar(xt, nt, xc, nc, delta)
        else:
            p = frozen
        return p, min(max(p - delta, 0.0), 1.0)

    bounds, grids = [], []
    for side, seed in enumerate(seeds):
        upper = side == 1
        if abs(seed) >= _DELTA_EDGE:
            bounds.append((seed, True))
            grids.append(None)
            continue
        grid = table_grid(nt, nc, seed, cache=False)
        grids.append(grid)
        thr = grid.rank[xt, xc]
        frozen = restricted_mle_scalar(xt, nt, xc, nc, seed) if nuisance == "fixed" else None
        tail = upper_tail if upper else lower_tail
        lo_edge, hi_edge = -_DELTA_EDGE, _DELTA_EDGE
        if frozen is not None:
            # P_C = P_T - delta must stay a proportion
            lo_edge, hi_edge = max(lo_edge, frozen - 1.0), min(hi_edge, frozen)

        def g(delta, tail=tail, grid=grid, thr=thr, frozen=frozen):
            pt, pc = proportions(delta, frozen)
            return float(tail(grid, thr, pt, pc)[0]) - target

        # g_L rises with delta and g_U falls, so walk toward the crossing
        g0 = g(seed)
        if upper:
            direction = 1.0 if g0 > 0 else -1.0
        else:
            direction = -1.0 if g0 > 0 else 1.0
        bounds.append(_root_near(g, seed, direction, lo_edge, hi_edge, tol))

    (lo, lo_deg), (hi, hi_deg) = bounds
    if lo_deg:
        lo = -1.0
    if hi_deg:
        hi = 1.0
    if lo > hi:
        lo, hi = hi, lo
    ci = ConfidenceInterval(lo, hi, level, lo_deg, hi_deg)
    if return_state:
        return ci, ExactCiState(seeds[0], seeds[1], grids[0], grids[1], (xt, xc))
    return ci
