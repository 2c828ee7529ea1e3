"""Product-limit estimators: Kaplan-Meier, Beran, stratified and product-kernel
conditional curves, the censoring curve, the kernel cure-rate estimator and
the latency estimator of the mixture cure model.

Every conditional estimator here is the same weighted product-limit
recursion, driven by a different weight vector:

    S(t | w) = prod_{T_(i) <= t} (1 - d_[i] B[i](w) / sum_{r >= i} B[r](w))

Kernel weights are used for continuous covariates and exact-match
indicators for discrete or nominal ones. The ``_matrix`` helpers evaluate
many query points at once and are what the bootstrap uses.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import AllWeightsZero, CureRateOne, EmptyStratum, MissingBandwidth, NoEvents, UnexpectedBandwidth
from .sample import CONTINUOUS, NOMINAL, Sample, clean_label, sort_index


def epanechnikov(u):
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)


@dataclass(frozen=True)
class KernelConfig:
    """Kernel and bandwidth (in covariate units) for one continuous covariate."""

    bandwidth: float
    kernel: Callable = epanechnikov

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth!r}")

    def scaled(self, d):
        """Rescaled kernel K_h(d) = K(d/h)/h."""
        h = self.bandwidth
        if np.isinf(h):
            return self.kernel(np.zeros_like(np.asarray(d, dtype=float)))
        return self.kernel(np.asarray(d, dtype=float) / h) / h


@dataclass(frozen=True)
class StepCurve:
    """Right-continuous nonincreasing step function, equal to 1 before the first jump."""

    jump_times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.array(self.jump_times, dtype=float)
        v = np.array(self.values, dtype=float)
        if t.shape != v.shape:
            raise ValueError("jump_times and values must have the same length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("jump_times must be strictly increasing")
        if np.any(np.diff(v) > 1e-12) or np.any((v < 0) | (v > 1)):
            raise ValueError("values must be nonincreasing within [0, 1]")
        t.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "jump_times", t)
        object.__setattr__(self, "values", v)

    def __call__(self, t):
        idx = np.searchsorted(self.jump_times, t, side="right") - 1
        out = np.where(idx >= 0, self.values[np.maximum(idx, 0)] if len(self.values) else 1.0, 1.0)
        return out if np.ndim(out) else float(out)

    def __len__(self):
        return len(self.jump_times)

    @property
    def plateau(self) -> float:
        return float(self.values[-1]) if len(self.values) else 1.0


# ---------------------------------------------------------------------------
# array-level machinery


def product_limit_matrix(weights: np.ndarray, indicator: np.ndarray) -> np.ndarray:
    """Weighted product-limit survival after each sorted position.

    ``weights`` has shape (q, n) with columns in canonical time order;
    ``indicator`` marks the jumps (events, or censorings for the censoring
    curve). Positions whose remaining weight is zero contribute no factor.
    """
    w = np.atleast_2d(np.asarray(weights, dtype=float))
    at_risk = np.cumsum(w[:, ::-1], axis=1)[:, ::-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        hazard = np.where(at_risk > 0, w / at_risk, 0.0)
    hazard *= indicator
    return np.cumprod(np.clip(1.0 - hazard, 0.0, 1.0), axis=1)


def product_weights(query: np.ndarray, data: np.ndarray, bandwidths: Sequence, kernel=epanechnikov) -> np.ndarray:
    """(q, n) product of kernel factors (bandwidth given) and match indicators (None).

    The 1/h scale factors are dropped: they cancel in every normalized use.
    """
    query = np.atleast_2d(np.asarray(query, dtype=float))
    data = np.asarray(data, dtype=float).reshape(len(data), -1)
    w = np.ones((query.shape[0], data.shape[0]))
    for j, h in enumerate(bandwidths):
        d = query[:, j, None] - data[None, :, j]
        if h is None:
            w *= d == 0
        elif np.isinf(h):
            continue
        else:
            w *= kernel(d / h)
    return w


def curve_from_positions(time_sorted: np.ndarray, ind_sorted: np.ndarray, surv: np.ndarray) -> StepCurve:
    event_times = np.unique(time_sorted[ind_sorted == 1])
    last = np.searchsorted(time_sorted, event_times, side="right") - 1
    return StepCurve(event_times, surv[last])


def largest_event_time(time, status) -> float:
    time = np.asarray(time, dtype=float)
    status = np.asarray(status)
    if not np.any(status == 1):
        raise NoEvents("no uncensored observation; the largest event time is undefined")
    return float(time[status == 1].max())


@dataclass(frozen=True)
class Conditioning:
    """Numeric design for conditional estimators: covariate columns and their bandwidths."""

    names: tuple[str, ...]
    data: np.ndarray  # (n, p) numeric; nominal columns hold level codes
    bandwidths: tuple  # float for kernel smoothing, None for exact match

    def query(self, sample: Sample, w0: Mapping) -> np.ndarray:
        row = []
        for name in self.names:
            cov = sample.spec[name]
            value = w0[name]
            if cov.kind == NOMINAL:
                label = clean_label(value)
                row.append(cov.levels.index(label) if label in cov.levels else -1)
            else:
                row.append(float(value))
        return np.array(row, dtype=float)


def conditioning(sample: Sample, cfgs: Mapping[str, KernelConfig | None] | None) -> Conditioning:
    cfgs = dict(cfgs or {})
    names, cols, hs = [], [], []
    for name, cfg in cfgs.items():
        cov = sample.spec[name]
        if cov.kind == CONTINUOUS:
            if cfg is None:
                raise MissingBandwidth(f"continuous covariate {name!r} needs a KernelConfig")
            hs.append(float(cfg.bandwidth))
        else:
            if cfg is not None:
                raise UnexpectedBandwidth(f"{cov.kind} covariate {name!r} uses exact matching, not a kernel")
            hs.append(None)
        names.append(name)
        cols.append(sample.codes(name))
    data = np.column_stack(cols) if cols else np.empty((sample.n, 0))
    return Conditioning(tuple(names), data, tuple(hs))


def _sorted_view(sample: Sample, indicator: np.ndarray):
    order = sort_index(sample.time, indicator)
    return order, sample.time[order], indicator[order]


def _conditional_curve(sample: Sample, w0: Mapping | None, cfgs, censoring: bool) -> StepCurve:
    status = sample.status
    indicator = 1 - status if censoring else status
    order, t_sorted, ind_sorted = _sorted_view(sample, indicator)
    cond = conditioning(sample, cfgs)
    if cond.names:
        q = cond.query(sample, w0 or {})
        w = product_weights(q[None, :], cond.data[order], cond.bandwidths)[0]
        if not np.any(w > 0):
            raise AllWeightsZero(f"no observation has positive weight at {dict(w0)}")
    else:
        w = np.ones(sample.n)
    surv = product_limit_matrix(w[None, :], ind_sorted)[0]
    # zero-weight events do not move the curve; keep only real jumps
    return curve_from_positions(t_sorted, ind_sorted * (w > 0), surv)


def _single_covariate(sample: Sample, covariate: str | None) -> str:
    if covariate is not None:
        return covariate
    if len(sample.spec) != 1:
        raise ValueError("sample has several covariates; name the conditioning one")
    return sample.spec.names[0]


# ---------------------------------------------------------------------------
# public estimators


def km_survival(sample: Sample) -> StepCurve:
    """Kaplan-Meier curve, computed from event and at-risk counts."""
    time, status = sample.time, sample.status
    event_times = np.unique(time[status == 1])
    if len(event_times) == 0:
        return StepCurve([], [])
    d = np.array([np.sum((time == t) & (status == 1)) for t in event_times])
    r = np.array([np.sum(time >= t) for t in event_times])
    return StepCurve(event_times, np.cumprod(1.0 - d / r))


def nw_weights(sample: Sample, x0: float, cfg: KernelConfig, covariate: str | None = None) -> np.ndarray:
    """Nadaraya-Watson weights K_h(x0 - X_i) / sum_j K_h(x0 - X_j), in row order."""
    x = sample.column(_single_covariate(sample, covariate))
    k = cfg.scaled(x0 - x)
    total = k.sum()
    if not total > 0:
        raise AllWeightsZero(f"no covariate value within bandwidth {cfg.bandwidth} of {x0}")
    return k / total


def beran_survival(sample: Sample, x0: float, cfg: KernelConfig, covariate: str | None = None) -> StepCurve:
    """Beran conditional product-limit estimator at covariate value ``x0``."""
    name = _single_covariate(sample, covariate)
    return multivar_conditional_pl(sample, {name: x0}, {name: cfg})


def stratified_km(sample: Sample, level, covariate: str | None = None) -> StepCurve:
    """Kaplan-Meier curve on the rows whose covariate equals ``level``."""
    name = _single_covariate(sample, covariate)
    cov = sample.spec[name]
    col = sample.column(name)
    mask = col == clean_label(level) if cov.kind == NOMINAL else col == float(level)
    if not np.any(mask):
        raise EmptyStratum(f"no observation with {name} = {level!r}")
    return km_survival(sample.take(np.flatnonzero(mask)))


def multivar_conditional_pl(sample: Sample, w0: Mapping, cfgs: Mapping[str, KernelConfig | None]) -> StepCurve:
    """Product-limit curve with product-kernel / exact-match weights at ``w0``.

    ``cfgs`` maps each conditioning covariate to a :class:`KernelConfig`
    (continuous) or ``None`` (discrete and nominal, exact match).
    """
    return _conditional_curve(sample, w0, cfgs, censoring=False)


def censoring_curve(sample: Sample, w0: Mapping | None = None, cfgs=None) -> StepCurve:
    """Survival curve of the censoring time, 1 - G(t | w0).

    Roles of event and censoring are swapped; at tied times censored rows
    are processed first.
    """
    return _conditional_curve(sample, w0, cfgs, censoring=True)


def cure_rate(sample: Sample, w0: Mapping, cfgs) -> float:
    """Kernel cure-rate estimate: the conditional survival at the largest event time."""
    tmax = largest_event_time(sample.time, sample.status)
    return float(multivar_conditional_pl(sample, w0, cfgs)(tmax))


def cure_rate_at(sample: Sample, x0: float, cfg: KernelConfig, covariate: str | None = None) -> float:
    name = _single_covariate(sample, covariate)
    return cure_rate(sample, {name: x0}, {name: cfg})


def latency_from_survival(surv: StepCurve, cure: float) -> StepCurve:
    p = 1.0 - cure
    if p <= 0:
        raise CureRateOne("estimated incidence is 0; latency is undefined")
    values = np.clip((surv.values - cure) / p, 0.0, 1.0)
    return StepCurve(surv.jump_times, np.minimum.accumulate(values))


def latency_curve(sample: Sample, w0: Mapping, cfgs) -> StepCurve:
    """Latency S0(t | w0) = (S(t | w0) - (1 - p(w0))) / p(w0), projected to a proper curve."""
    tmax = largest_event_time(sample.time, sample.status)
    surv = multivar_conditional_pl(sample, w0, cfgs)
    return latency_from_survival(surv, float(surv(tmax)))


# ---------------------------------------------------------------------------
# batch evaluation used by the bootstrap


def survival_matrix(
    time: np.ndarray,
    indicator: np.ndarray,
    data: np.ndarray,
    bandwidths: Sequence,
    query: np.ndarray,
):
    """Conditional product-limit values at every sorted position for many query points.

    Returns ``(order, time_sorted, surv)`` where ``surv`` has shape (q, n).
    Rows of ``query`` with no positive weight raise :class:`AllWeightsZero`.
    """
    order = sort_index(time, indicator)
    if len(bandwidths):
        w = product_weights(query, data[order], bandwidths)
    else:
        w = np.ones((len(query), len(time)))
    if not np.all(w.sum(axis=1) > 0):
        raise AllWeightsZero("a query point has no observation inside the kernel support")
    return order, time[order], product_limit_matrix(w, indicator[order])


def latency_matrix(surv: np.ndarray, time_sorted: np.ndarray, tmax: float):
    """Latency rows from conditional survival rows; also returns the cure rates.

    Rows with zero estimated incidence are returned as NaN.
    """
    last = np.searchsorted(time_sorted, tmax, side="right") - 1
    cure = surv[:, last].copy()
    p = 1.0 - cure
    with np.errstate(divide="ignore", invalid="ignore"):
        lat = np.clip((surv - cure[:, None]) / p[:, None], 0.0, 1.0)
    lat = np.minimum.accumulate(lat, axis=1)
    lat[p <= 0] = np.nan
    return lat, cure
