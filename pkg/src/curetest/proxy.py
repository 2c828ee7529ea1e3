"""Cure threshold and the proxy response for the unobserved cure indicator.

For each subject the proxy is

    eta_i = 0                          if d_i = 1 or (d_i = 0 and T_i <= tau)
    eta_i = 1 / (1 - G(tau | W_i))     otherwise

with tau estimated by the largest uncensored time. Its conditional mean
equals the conditional cure probability, so covariate effects on the cure
rate can be tested as a regression problem without censoring.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import GSaturated
from .estimators import KernelConfig, conditioning, largest_event_time, product_limit_matrix, product_weights
from .sample import Sample, sort_index

SATURATION_EPS = 1e-6


@dataclass(frozen=True)
class EtaVector:
    tau_hat: float
    values: np.ndarray
    g_at_tau: np.ndarray
    n_capped: int = 0
    capped: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return len(self.values)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def mean(self) -> float:
        return float(np.mean(self.values))


def estimate_tau(sample: Sample) -> float:
    """Largest uncensored observed time."""
    return largest_event_time(sample.time, sample.status)


def eta_values(time, status, g_at_tau, tau_hat: float, cap: bool = True):
    """Array-level proxy computation; returns ``(eta, capped_mask)``."""
    time = np.asarray(time, dtype=float)
    status = np.asarray(status)
    g = np.asarray(g_at_tau, dtype=float)
    n = len(time)
    active = (status == 0) & (time > tau_hat)
    eta = np.zeros(n)
    g_used = g.copy()
    capped = np.zeros(n, dtype=bool)
    if cap:
        limit = 1.0 - 1.0 / n
        capped = active & (g_used > limit)
        g_used[capped] = limit
    else:
        bad = np.flatnonzero(active & (g_used >= 1.0 - SATURATION_EPS))
        if len(bad):
            raise GSaturated(int(bad[0]), float(g_used[bad[0]]))
    eta[active] = 1.0 / (1.0 - g_used[active])
    return eta, capped


def censoring_at_tau(sample: Sample, cfgs: Mapping[str, KernelConfig | None] | None, tau_hat: float) -> np.ndarray:
    """G(tau | W_i) for every subject, from the censoring product-limit curve."""
    return censoring_cdf_at(sample.time, sample.status, *_design(sample, cfgs), tau_hat)


def _design(sample: Sample, cfgs):
    cond = conditioning(sample, cfgs)
    return cond.data, cond.bandwidths


def censoring_cdf_at(time, status, data, bandwidths, tau_hat: float, query=None) -> np.ndarray:
    """Conditional censoring distribution at ``tau_hat`` for each query row.

    ``query`` defaults to the sample's own covariate rows.
    """
    time = np.asarray(time, dtype=float)
    indicator = 1 - np.asarray(status)
    order = sort_index(time, indicator)
    t = time[order]
    if query is None:
        query = data
    if len(bandwidths):
        w = product_weights(query, np.asarray(data)[order], bandwidths)
    else:
        w = np.ones((len(query), len(t)))
    k = np.searchsorted(t, tau_hat, side="right")
    surv = product_limit_matrix(w, indicator[order])
    return 1.0 - surv[:, k - 1] if k > 0 else np.zeros(len(query))


def compute_eta(
    sample: Sample,
    g_estimator: np.ndarray | Callable[[Sample, float], np.ndarray] | Mapping[str, KernelConfig | None] | None,
    tau_hat: float | None = None,
    cap: bool = True,
) -> EtaVector:
    """Proxy responses for every subject.

    ``g_estimator`` gives G(tau | W_i): either precomputed values, a callable
    ``(sample, tau) -> values``, or a mapping of conditioning configs passed
    to :func:`censoring_at_tau` (``None`` means the unconditional KM).
    With ``cap`` enabled, G values above 1 - 1/n are capped there before
    inversion and counted in ``n_capped``; without it a value within 1e-6
    of 1 raises :class:`GSaturated`.
    """
    if tau_hat is None:
        tau_hat = estimate_tau(sample)
    if callable(g_estimator):
        g = np.asarray(g_estimator(sample, tau_hat), dtype=float)
    elif g_estimator is None or isinstance(g_estimator, Mapping):
        g = censoring_at_tau(sample, g_estimator, tau_hat)
    else:
        g = np.asarray(g_estimator, dtype=float)
    eta, capped = eta_values(sample.time, sample.status, g, tau_hat, cap)
    return EtaVector(float(tau_hat), eta, g, int(capped.sum()), capped)
