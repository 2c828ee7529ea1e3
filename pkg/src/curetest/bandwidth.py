"""Bandwidth grids and leave-one-out cross-validation for Beran-type estimators."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AllWeightsZero, InvalidRange
from .estimators import product_limit_matrix, product_weights
from .sample import CONTINUOUS, Sample, sort_index

SURVIVAL = "survival"
CENSORING = "censoring"

# test-statistic grid constants C in h = C n^(-1/(3m))
DEFAULT_TEST_CONSTANTS = (10, 20, 30, 40, 45, 50, 60)


@dataclass(frozen=True)
class BandwidthGrid:
    values: tuple[float, ...]
    rule: dict

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if not values or any(v <= 0 for v in values):
            raise InvalidRange("bandwidth grid must be nonempty and positive")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise InvalidRange("bandwidth grid must be strictly increasing")
        object.__setattr__(self, "values", values)

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)


def make_grid(d_min: float, d_max: float, count: int, rate: float, n: int) -> BandwidthGrid:
    """Equispaced constants D_1=d_min .. D_count=d_max, scaled as D_j * n**(-rate)."""
    if count < 1 or n < 1:
        raise InvalidRange("count and n must be at least 1")
    if count == 1:
        if not d_min > 0:
            raise InvalidRange("d_min must be positive")
        d = np.array([d_min], dtype=float)
    else:
        if not 0 < d_min < d_max:
            raise InvalidRange(f"need 0 < d_min < d_max, got {d_min}, {d_max}")
        d = np.linspace(d_min, d_max, count)
    rule = {"d_min": d_min, "d_max": d_max, "count": count, "rate": rate, "n": n}
    return BandwidthGrid(tuple(d * float(n) ** (-rate)), rule)


def statistic_bandwidths(n: int, m: int = 1, constants: Sequence[float] = DEFAULT_TEST_CONSTANTS) -> tuple[float, ...]:
    """Smoothing grid h = C n^(-1/(3m)) for the Case-2/3 statistic."""
    return tuple(float(c) * float(n) ** (-1.0 / (3 * m)) for c in constants)


def cv_scores(
    time: np.ndarray,
    status: np.ndarray,
    data: np.ndarray,
    smoothed: Sequence[bool],
    grid: Sequence[float],
    target: str = SURVIVAL,
) -> np.ndarray:
    """Leave-one-out squared-error criterion for every grid value.

    For subject i and evaluation time T_j the response I(T_i <= T_j, d_i = 1)
    is compared with the Beran distribution estimate computed without
    subject i at X_i. Pairs where the response is unobservable (T_i <= T_j
    with d_i = 0) are skipped. ``target='censoring'`` swaps d for 1 - d.
    Grid values for which some subject has no neighbour score ``inf``.
    """
    if target not in (SURVIVAL, CENSORING):
        raise ValueError(f"target must be {SURVIVAL!r} or {CENSORING!r}")
    indicator = np.asarray(status) if target == SURVIVAL else 1 - np.asarray(status)
    order = sort_index(time, indicator)
    t = np.asarray(time, dtype=float)[order]
    ind = indicator[order]
    x = np.asarray(data, dtype=float).reshape(len(t), -1)[order]

    last = np.searchsorted(t, t, side="right") - 1
    event_i = (t[:, None] <= t[None, :]) & (ind[:, None] == 1)
    observable = event_i | (t[:, None] > t[None, :])
    response = event_i.astype(float)

    scores = np.empty(len(grid))
    for g, h in enumerate(grid):
        bws = [h if s else None for s in smoothed]
        w = product_weights(x, x, bws)
        np.fill_diagonal(w, 0.0)
        if not np.all(w.sum(axis=1) > 0):
            scores[g] = np.inf
            continue
        dist = 1.0 - product_limit_matrix(w, ind)[:, last]
        scores[g] = np.sum(((response - dist) ** 2)[observable])
    return scores


def select_bandwidth(scores: np.ndarray, grid: Sequence[float]) -> float:
    """Smallest grid value attaining the minimum criterion."""
    scores = np.asarray(scores)
    if not np.any(np.isfinite(scores)):
        raise AllWeightsZero("every bandwidth in the grid leaves some subject without neighbours")
    return float(grid[int(np.argmin(scores))])


def cv_bandwidth(
    sample: Sample,
    grid: BandwidthGrid | Sequence[float],
    target: str = SURVIVAL,
    covariates: Sequence[str] | None = None,
) -> float:
    """Cross-validated bandwidth for the conditional survival or censoring curve.

    ``covariates`` defaults to every covariate in the sample. Continuous ones
    share the common bandwidth under selection; discrete and nominal ones
    enter through exact matching.
    """
    values = tuple(grid)
    if len(values) == 1:
        return float(values[0])
    names = list(covariates) if covariates is not None else list(sample.spec.names)
    smoothed = [sample.spec[nm].kind == CONTINUOUS for nm in names]
    if not any(smoothed):
        raise ValueError("cross-validation needs at least one continuous covariate")
    if sample.n < 3:
        raise ValueError("cross-validation needs at least 3 observations")
    data = np.column_stack([sample.codes(nm) for nm in names])
    scores = cv_scores(sample.time, sample.status, data, smoothed, values, target)
    return select_bandwidth(scores, values)
