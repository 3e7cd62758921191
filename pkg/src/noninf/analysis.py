"""Run every method on one observed trial."""
from __future__ import annotations

import time

from . import asymptotic as asy
from .exact import els_confidence_interval, els_pvalue, es_pvalue
from .foundation import NoninfSpec, TwoArmData
from .operating import METHODS

__all__ = ["DEFAULT_METHODS", "ES_MAX_ARM", "analyze"]

# Table-4 order; ES is opt-in
DEFAULT_METHODS = ("wald", "ac", "ha", "nc", "ncc", "als", "fm", "els")
# beyond this arm size ES needs an explicit override (cost grows with the grid search)
ES_MAX_ARM = 150

_SIMPLE = {
    "wald": asy.wald_ci,
    "ac": asy.agresti_caffo_ci,
    "ha": asy.hauck_anderson_ci,
    "nc": asy.newcombe_ci,
    "ncc": asy.newcombe_cc_ci,
}


def _run(method: str, data: TwoArmData, spec: NoninfSpec, grid_points: int):
    level, margin = spec.two_sided_level, spec.margin
    if method in _SIMPLE:
        return _SIMPLE[method](data, level), None
    if method == "fm":
        return asy.fm_ci(data, margin, level), None
    if method in ("als", "als_mn"):
        mn = method == "als_mn"
        return (asy.als_ci(data, level, bias_correction=mn),
                asy.als_pvalue(data, margin, bias_correction=mn))
    if method == "els":
        return els_confidence_interval(data, level), els_pvalue(data, margin)
    return None, es_pvalue(data, margin, grid_points)


def analyze(data: TwoArmData, margin: float, level: float = 0.95, methods=DEFAULT_METHODS,
            allow_large_es: bool = False, es_grid_points: int = 1000) -> list[asy.MethodResult]:
    """Confidence intervals, p-values and decisions for each requested method.

    Parameters
    ----------
    data : TwoArmData
        Observed successes and trials per arm.
    margin : float
        Non-inferiority margin; the null is ``P_T - P_C <= -margin``.
    level : float
        Two-sided confidence level; each test has one-sided size ``(1 - level) / 2``.
    methods : iterable of str
        Method identifiers (see ``operating.METHODS``).
    allow_large_es : bool
        ES is refused when either arm exceeds ``ES_MAX_ARM`` unless this is set.

    Returns
    -------
    list of MethodResult
        In the order requested.  ``elapsed`` holds wall-clock seconds.
    """
    spec = NoninfSpec(margin, level)
    keys = [m.lower() for m in methods]
    if not keys:
        raise ValueError("at least one method is required")
    unknown = [m for m in keys if m not in METHODS]
    if unknown:
        raise ValueError(f"unknown method(s) {unknown}; choose from {sorted(METHODS)}")
    if "es" in keys and min(data.shape) > ES_MAX_ARM and not allow_large_es:
        raise ValueError(
            f"ES with min(N_T, N_C) = {min(data.shape)} > {ES_MAX_ARM} needs the size override"
        )
    out = []
    for key in keys:
        t0 = time.perf_counter()
        interval, p = _run(key, data, spec, es_grid_points)
        out.append(asy.MethodResult(key, interval, p, margin, spec.alpha,
                                    time.perf_counter() - t0))
    return out
