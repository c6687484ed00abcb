"""Free-distance growth-rate bounds from terminated and tail-biting chains.

A terminated chain of length ``T`` bounds the free distance from above and
a tail-biting chain of length ``T`` bounds it from below, once both minimum
distance growth rates are rescaled by ``T / (m_s + 1)`` to the decoding
constraint length ``N (m_s + 1) b_v``.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .coupling import EdgeSpreading, tailbite, terminate
from .protograph import Protograph
from .spectral import GrowthRateReport, find_growth_rate

log = logging.getLogger(__name__)


def upper_bound(delta_min_terminated: float, T: int, m_s: int) -> float:
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    return delta_min_terminated * T / (m_s + 1)


def lower_bound(delta_min_tailbiting: float, T: int, m_s: int) -> float:
    if T < max(m_s, 1):
        raise ValueError(f"tail-biting length T={T} must be >= max(1, m_s={m_s})")
    return delta_min_tailbiting * T / (m_s + 1)


@dataclass
class FreeDistanceBounds:
    T: int
    m_s: int
    lower: float | None
    upper: float | None
    coincide: bool
    delta_free: float | None
    half_gap: float | None
    terminated: GrowthRateReport | None = None
    tailbiting: GrowthRateReport | None = None
    error: str | None = None


def bounds_for(s: EdgeSpreading, T: int, tolerance: float = 0.01, step: float = 0.01,
               restarts: int = 8, seed: int = 0, tol: float = 1e-4) -> FreeDistanceBounds:
    """Run both chains of length ``T`` and combine their growth rates."""
    m = s.memory
    errors = []
    upper = lower = None
    term = tb = None
    try:
        term = find_growth_rate(terminate(s, T), step=step, tol=tol, restarts=restarts, seed=seed)
        if term.delta_min is None:
            errors.append("terminated: no zero crossing")
        else:
            upper = upper_bound(term.delta_min, T, m)
    except Exception as exc:  # recorded per T, the scan goes on
        errors.append(f"terminated: {exc}")
    try:
        tb = find_growth_rate(tailbite(s, T), step=step, tol=tol, restarts=restarts, seed=seed)
        if tb.delta_min is None:
            errors.append("tailbiting: no zero crossing")
        else:
            lower = lower_bound(tb.delta_min, T, m)
    except Exception as exc:
        errors.append(f"tailbiting: {exc}")
    coincide = upper is not None and lower is not None and abs(upper - lower) <= tolerance
    delta_free = half_gap = None
    if coincide:
        delta_free = 0.5 * (upper + lower)
        half_gap = 0.5 * abs(upper - lower)
    if upper is not None and lower is not None and lower > upper + tolerance:
        errors.append(f"lower bound {lower:.4f} exceeds upper bound {upper:.4f}")
    return FreeDistanceBounds(T, m, lower, upper, coincide, delta_free, half_gap, term, tb,
                              "; ".join(errors) or None)


def _bounds_job(args):
    return bounds_for(*args)


def scan(block: Protograph, s: EdgeSpreading, T_range: Sequence[int], tolerance: float = 0.01,
         step: float = 0.01, restarts: int = 8, seed: int = 0, workers: int = 1) -> list[FreeDistanceBounds]:
    """Bounds for every ``T`` in ``T_range``; failures are recorded per ``T``."""
    T_range = [int(T) for T in T_range]
    if not T_range:
        raise ValueError("T_range is empty")
    if s.block != block:
        raise ValueError("spreading was built for a different block protograph")
    jobs = [(s, T, tolerance, step, restarts, seed) for T in T_range]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_bounds_job, jobs))
    return [_bounds_job(j) for j in jobs]
