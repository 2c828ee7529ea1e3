"""Sufficient follow-up test based on the right tail of the KM curve."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .estimators import largest_event_time
from .sample import Sample


@dataclass(frozen=True)
class FollowupResult:
    t_max: float
    t1_max: float
    n_tail: int
    n: int
    p_value: float

    def to_dict(self) -> dict:
        return asdict(self)


def maller_zhou(sample: Sample) -> FollowupResult:
    """Count events in (2 t1_max - t_max, t1_max] and return p = (1 - N/n)^n.

    A small p-value supports sufficient follow-up, i.e. a genuine plateau
    of the KM curve and hence a cured fraction.
    """
    time = sample.time
    status = sample.status
    t1 = largest_event_time(time, status)
    t_max = float(np.max(time))
    lower = 2.0 * t1 - t_max
    n = len(time)
    n_tail = int(np.sum((status == 1) & (time > lower) & (time <= t1)))
    p = float((1.0 - n_tail / n) ** n)
    return FollowupResult(t_max, t1, n_tail, n, p)
