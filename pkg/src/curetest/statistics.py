"""Marked empirical processes of the proxy responses and their CM / KS functionals.

Case 1 (tested covariate Z only)::

    U(z) = 1/n sum_i (eta_i - mean(eta)) I(Z_i <= z)

Cases 2 and 3 (conditioning block X, tested block Z)::

    U(x, z) = 1/n sum_i f(X_i) (eta_i - m(X_i)) I((X_i, Z_i) <= (x, z))

with f and m a kernel density and Nadaraya-Watson regression (continuous X)
or level frequencies and level means (discrete X). Nominal covariates have
no order, so the statistics are maximised over every ordering of their
levels.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import MissingBandwidth, TooManyLevels, UnexpectedBandwidth
from .estimators import epanechnikov
from .sample import CONTINUOUS, NOMINAL

MAX_NOMINAL_LEVELS = 7


@dataclass(frozen=True)
class ProcessValues:
    eval_points: np.ndarray
    u: np.ndarray
    n: int


@dataclass(frozen=True)
class StatPair:
    cm: float
    k: float


def stat_pair(p: ProcessValues) -> StatPair:
    u = np.asarray(p.u, dtype=float)
    if len(u) == 0:
        return StatPair(0.0, 0.0)
    return StatPair(float(np.sum(u * u)), float(np.max(np.abs(math.sqrt(p.n) * u))))


def _values(eta) -> np.ndarray:
    return np.asarray(getattr(eta, "values", eta), dtype=float)


def _columns(a, n) -> np.ndarray:
    return np.asarray(a, dtype=float).reshape(n, -1)


def _cumulative_process(marks: np.ndarray, z: np.ndarray) -> np.ndarray:
    """(1/n) sum_i marks_i I(z_i <= z_j) at every sample point, for a single ordered column."""
    n = len(z)
    order = np.argsort(z, kind="stable")
    zs = z[order]
    cs = np.cumsum(marks[order], axis=0)
    pos = np.searchsorted(zs, z, side="right") - 1
    return cs[pos] / n


def indicator_matrix(points: np.ndarray) -> np.ndarray:
    """L[a, i] = I(point_i <= point_a) componentwise, non-strict."""
    points = np.asarray(points, dtype=float)
    n = len(points)
    points = points.reshape(n, -1)
    mat = np.ones((n, n), dtype=bool)
    for c in points.T:
        mat &= c[None, :] <= c[:, None]
    return mat


def _marked_process(marks: np.ndarray, points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=float).reshape(len(marks), -1)
    if points.shape[1] == 1:
        return _cumulative_process(marks, points[:, 0])
    return indicator_matrix(points).astype(float) @ marks / len(marks)


def u_case1(eta, z) -> ProcessValues:
    e = _values(eta)
    z = np.asarray(z, dtype=float)
    u = _cumulative_process(e - e.mean(), z)
    return ProcessValues(z, u, len(e))


def kernel_residuals(eta, x_block, h) -> np.ndarray:
    """f_h(X_i) (eta_i - m_h(X_i)) with a q-fold product Epanechnikov kernel.

    ``h`` may be a scalar or a sequence; a sequence returns one column per value.
    """
    e = _values(eta)
    n = len(e)
    x = _columns(x_block, n)
    q = x.shape[1]
    hs = np.atleast_1d(np.asarray(h, dtype=float))
    out = np.empty((n, len(hs)))
    diffs = [x[:, j, None] - x[None, :, j] for j in range(q)]
    for g, hg in enumerate(hs):
        k = np.ones((n, n))
        for d in diffs:
            k *= epanechnikov(d / hg)
        s = k.sum(axis=1)
        dens = s / (n * hg**q)
        m = (k @ e) / s
        out[:, g] = dens * (e - m)
    return out if np.ndim(h) else out[:, 0]


def frequency_residuals(eta, x) -> np.ndarray:
    """Pi(X_i) (eta_i - m(X_i)) with level frequencies and level means."""
    e = _values(eta)
    n = len(e)
    x = np.asarray(x).reshape(n, -1)
    _, groups = np.unique(x, axis=0, return_inverse=True)
    groups = groups.reshape(-1)
    counts = np.bincount(groups)
    sums = np.bincount(groups, weights=e)
    freq = counts[groups] / n
    mean = sums[groups] / counts[groups]
    return freq * (e - mean)


def u_case2(eta, x, z, h: float | None = None, x_kind: str = CONTINUOUS) -> ProcessValues:
    """Case-2 process with one conditioning covariate ``x`` and tested columns ``z``."""
    e = _values(eta)
    n = len(e)
    x = np.asarray(x, dtype=float).reshape(n, 1)
    if x_kind == CONTINUOUS:
        if h is None:
            raise MissingBandwidth("continuous x needs a bandwidth for the density and regression estimates")
        marks = kernel_residuals(e, x, float(h))
    else:
        if h is not None:
            raise UnexpectedBandwidth(f"{x_kind} x is not smoothed; do not pass a bandwidth")
        marks = frequency_residuals(e, x)
    points = np.column_stack([x, _columns(z, n)])
    return ProcessValues(points, _marked_process(marks, points), n)


def u_case3(eta, x_block, z_block, h: float) -> ProcessValues:
    """Case-3 process with a continuous q-dimensional conditioning block."""
    e = _values(eta)
    n = len(e)
    if h is None:
        raise MissingBandwidth("the continuous conditioning block needs a bandwidth")
    x = _columns(x_block, n)
    marks = kernel_residuals(e, x, float(h))
    points = np.column_stack([x, _columns(z_block, n)])
    return ProcessValues(points, _marked_process(marks, points), n)


def orderings(columns: Sequence[np.ndarray], nominal: Sequence[bool]):
    """Yield numeric versions of ``columns`` for every ordering of the nominal ones.

    Ordered columns pass through unchanged; each nominal column is relabelled
    with the rank of its level under the current permutation. Levels are the
    labels present in the column.
    """
    choices = []
    for col, is_nom in zip(columns, nominal):
        if is_nom:
            levels, inverse = np.unique(np.asarray(col).astype(str), return_inverse=True)
            k = len(levels)
            if k > MAX_NOMINAL_LEVELS:
                raise TooManyLevels(k, MAX_NOMINAL_LEVELS)
            choices.append([np.asarray(perm, dtype=float)[inverse] for perm in itertools.permutations(range(k))])
        else:
            choices.append([np.asarray(col, dtype=float)])
    for combo in itertools.product(*choices):
        yield list(combo)


def max_over_orderings(
    columns: Sequence[np.ndarray], nominal: Sequence[bool], compute: Callable[[list], StatPair]
) -> tuple[StatPair, int]:
    best_cm = best_k = -np.inf
    count = 0
    for numeric in orderings(columns, nominal):
        s = compute(numeric)
        best_cm = max(best_cm, s.cm)
        best_k = max(best_k, s.k)
        count += 1
    return StatPair(float(best_cm), float(best_k)), count


def nominal_stat(eta, z, inner: str | Callable = "case1", **kwargs) -> StatPair:
    """Component-wise maxima of (CM, K) over all k! orderings of the levels of ``z``.

    ``inner`` is ``"case1"``, ``"case2"`` (pass ``x``, ``h``, ``x_kind``), or a
    callable ``(eta, z_numeric) -> ProcessValues``.
    """
    if inner == "case1":
        fn = u_case1
    elif inner == "case2":
        def fn(e, zz):
            return u_case2(e, kwargs["x"], zz, kwargs.get("h"), kwargs.get("x_kind", CONTINUOUS))
    else:
        fn = inner
    pair, _ = max_over_orderings([np.asarray(z)], [True], lambda cols: stat_pair(fn(eta, cols[0])))
    return pair


# ---------------------------------------------------------------------------
# dispatch used by the testing engine


@dataclass(frozen=True)
class StatisticDesign:
    """Covariate columns and kinds that define the statistic for one test."""

    x_cols: tuple  # arrays; empty for Case 1
    x_kinds: tuple
    z_cols: tuple
    z_kinds: tuple

    @property
    def smoothed(self) -> bool:
        return any(k == CONTINUOUS for k in self.x_kinds)

    def n_orderings(self) -> int:
        total = 1
        for col, kind in zip(self.x_cols + self.z_cols, self.x_kinds + self.z_kinds):
            if kind == NOMINAL:
                total *= math.factorial(len(np.unique(np.asarray(col).astype(str))))
        return total

    def take(self, index) -> "StatisticDesign":
        return StatisticDesign(
            tuple(np.asarray(c)[index] for c in self.x_cols),
            self.x_kinds,
            tuple(np.asarray(c)[index] for c in self.z_cols),
            self.z_kinds,
        )


def compute_statistics(eta, design: StatisticDesign, hs: Sequence[float] | None = None) -> list[StatPair]:
    """Observed (CM, K) for each bandwidth in ``hs`` (one entry when X is not smoothed)."""
    e = _values(eta)
    n = len(e)
    if not design.x_cols:
        marks = (e - e.mean())[:, None]
    elif design.smoothed:
        if not hs:
            raise MissingBandwidth("continuous conditioning covariates need statistic bandwidths")
        if not all(k == CONTINUOUS for k in design.x_kinds):
            raise ValueError("mixed continuous / discrete conditioning blocks are not supported")
        marks = kernel_residuals(e, np.column_stack(design.x_cols), list(hs))
    else:
        if hs:
            raise UnexpectedBandwidth("discrete conditioning covariates take no statistic bandwidth")
        marks = frequency_residuals(e, np.column_stack([_codes(c, k) for c, k in zip(design.x_cols, design.x_kinds)]))[:, None]

    cols = list(design.x_cols) + list(design.z_cols)
    nominal = [k == NOMINAL for k in design.x_kinds + design.z_kinds]
    best_cm = np.full(marks.shape[1], -np.inf)
    best_k = np.full(marks.shape[1], -np.inf)
    for numeric in orderings(cols, nominal):
        u = _marked_process(marks, np.column_stack(numeric))
        best_cm = np.maximum(best_cm, np.sum(u * u, axis=0))
        best_k = np.maximum(best_k, np.max(np.abs(math.sqrt(n) * u), axis=0))
    return [StatPair(float(c), float(k)) for c, k in zip(best_cm, best_k)]


def _codes(col, kind) -> np.ndarray:
    if kind == NOMINAL:
        return np.unique(np.asarray(col).astype(str), return_inverse=True)[1].astype(float)
    return np.asarray(col, dtype=float)
