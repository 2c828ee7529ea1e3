"""Right-censored samples with mixed-type covariates.

A :class:`Sample` holds rows of ``(time, status, covariates)`` together with a
:class:`CovariateSpec` that says, for every covariate, whether it is
continuous, discrete (ordered) or nominal, and whether it belongs to the
conditioning block ``X`` or the tested block ``Z``.

Rows are stored as :class:`Observation` tuples; numeric column views are
built lazily and cached, so a sample is cheap to share between estimators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

CONTINUOUS = "continuous"
DISCRETE = "discrete"
NOMINAL = "nominal"
KINDS = (CONTINUOUS, DISCRETE, NOMINAL)

X_BLOCK = "x"
Z_BLOCK = "z"


def clean_label(value) -> str:
    return str(value).strip()


@dataclass(frozen=True)
class Covariate:
    name: str
    kind: str = CONTINUOUS
    role: str = Z_BLOCK
    levels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown covariate kind {self.kind!r}")
        if self.role not in (X_BLOCK, Z_BLOCK):
            raise ValueError(f"role must be 'x' or 'z', got {self.role!r}")
        if self.kind == NOMINAL:
            if not self.levels:
                raise ValueError(f"nominal covariate {self.name!r} needs a level set")
            levels = tuple(clean_label(v) for v in self.levels)
            if len(set(levels)) != len(levels):
                raise ValueError(f"duplicate levels for {self.name!r}")
            object.__setattr__(self, "levels", levels)
        elif self.levels is not None:
            object.__setattr__(self, "levels", tuple(self.levels))


@dataclass(frozen=True)
class CovariateSpec:
    """Ordered covariate declarations; X-block is conditioned on, Z-block tested."""

    entries: tuple[Covariate, ...]

    def __post_init__(self):
        entries = tuple(self.entries)
        names = [c.name for c in entries]
        if len(set(names)) != len(names):
            raise ValueError(f"covariate names must be unique: {names}")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def build(cls, *entries: Covariate | tuple) -> "CovariateSpec":
        return cls(tuple(e if isinstance(e, Covariate) else Covariate(*e) for e in entries))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.entries)

    @property
    def x_block(self) -> tuple[Covariate, ...]:
        return tuple(c for c in self.entries if c.role == X_BLOCK)

    @property
    def z_block(self) -> tuple[Covariate, ...]:
        return tuple(c for c in self.entries if c.role == Z_BLOCK)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"no covariate named {name!r}") from None

    def __getitem__(self, name: str) -> Covariate:
        return self.entries[self.index(name)]


class Observation(NamedTuple):
    time: float
    status: int
    covariates: tuple = ()


@dataclass(frozen=True)
class Violation:
    row: int
    field: str
    message: str

    def __str__(self):
        return f"row {self.row}, {self.field}: {self.message}"


@dataclass(frozen=True)
class Sample:
    observations: tuple[Observation, ...]
    spec: CovariateSpec = field(default_factory=lambda: CovariateSpec(()))

    def __post_init__(self):
        object.__setattr__(self, "observations", tuple(Observation(*o) for o in self.observations))

    @classmethod
    def from_arrays(
        cls,
        time: Sequence[float],
        status: Sequence[int],
        columns: Mapping[str, Sequence] | Sequence[Sequence] = (),
        spec: CovariateSpec | None = None,
    ) -> "Sample":
        """Build a sample from column arrays.

        ``columns`` is either a mapping keyed by covariate name or a sequence
        aligned with ``spec.entries``. Without a spec, every column is taken
        as a continuous Z-block covariate named ``z0, z1, ...``.
        """
        time = np.asarray(time, dtype=float)
        status = np.asarray(status)
        if isinstance(columns, Mapping):
            if spec is None:
                spec = CovariateSpec(tuple(Covariate(name) for name in columns))
            cols = [np.asarray(columns[name]) for name in spec.names]
        else:
            cols = [np.asarray(c) for c in columns]
            if spec is None:
                spec = CovariateSpec(tuple(Covariate(f"z{j}") for j in range(len(cols))))
        if len(cols) != len(spec):
            raise ValueError(f"{len(cols)} columns for {len(spec)} declared covariates")
        for c in cols:
            if len(c) != len(time):
                raise ValueError("covariate column length differs from time length")
        if len(status) != len(time):
            raise ValueError("status length differs from time length")
        rows = tuple(
            Observation(float(t), int(d), tuple(c[i].item() if hasattr(c[i], "item") else c[i] for c in cols))
            for i, (t, d) in enumerate(zip(time, status))
        )
        return cls(rows, spec)

    @property
    def n(self) -> int:
        return len(self.observations)

    def __len__(self):
        return self.n

    @cached_property
    def time(self) -> np.ndarray:
        return np.array([o.time for o in self.observations], dtype=float)

    @cached_property
    def status(self) -> np.ndarray:
        return np.array([o.status for o in self.observations], dtype=int)

    def column(self, name: str) -> np.ndarray:
        """Covariate column: float array, or an object array of labels for nominal."""
        return self._columns[self.spec.index(name)]

    @cached_property
    def _columns(self) -> tuple[np.ndarray, ...]:
        cols = []
        for j, cov in enumerate(self.spec):
            values = [o.covariates[j] for o in self.observations]
            if cov.kind == NOMINAL:
                cols.append(np.array([clean_label(v) for v in values], dtype=object))
            else:
                cols.append(np.array(values, dtype=float))
        return tuple(cols)

    def codes(self, name: str) -> np.ndarray:
        """Integer codes for a column; nominal labels map to their level index."""
        cov = self.spec[name]
        col = self.column(name)
        if cov.kind == NOMINAL:
            lookup = {lab: k for k, lab in enumerate(cov.levels)}
            return np.array([lookup.get(v, -1) for v in col], dtype=float)
        return col

    def take(self, index: Iterable[int]) -> "Sample":
        obs = self.observations
        return Sample(tuple(obs[i] for i in index), self.spec)

    def with_spec(self, spec: CovariateSpec) -> "Sample":
        return Sample(self.observations, spec)


def validate(sample: Sample) -> list[Violation]:
    """List every invariant breach; an empty list means the sample is valid."""
    out: list[Violation] = []
    if sample.n == 0:
        out.append(Violation(-1, "sample", "sample is empty"))
    arity = len(sample.spec)
    for i, obs in enumerate(sample.observations):
        try:
            t = float(obs.time)
        except (TypeError, ValueError):
            out.append(Violation(i, "time", f"not a number: {obs.time!r}"))
        else:
            if not math.isfinite(t) or t < 0:
                out.append(Violation(i, "time", f"must be finite and >= 0, got {obs.time!r}"))
        if obs.status not in (0, 1):
            out.append(Violation(i, "status", f"must be 0 or 1, got {obs.status!r}"))
        if len(obs.covariates) != arity:
            out.append(Violation(i, "covariates", f"expected {arity} values, got {len(obs.covariates)}"))
            continue
        for cov, value in zip(sample.spec, obs.covariates):
            if cov.kind == NOMINAL:
                if clean_label(value) not in cov.levels:
                    out.append(Violation(i, cov.name, f"label {value!r} not in {list(cov.levels)}"))
            else:
                try:
                    v = float(value)
                except (TypeError, ValueError):
                    out.append(Violation(i, cov.name, f"not a number: {value!r}"))
                    continue
                if not math.isfinite(v):
                    out.append(Violation(i, cov.name, f"must be finite, got {value!r}"))
    return out


def sort_index(time: np.ndarray, indicator: np.ndarray) -> np.ndarray:
    """Stable ascending order by time with ``indicator == 1`` rows first at ties."""
    return np.lexsort((1 - np.asarray(indicator), np.asarray(time)))


def canonical_order(sample: Sample) -> Sample:
    """Rows sorted by time; uncensored before censored at tied times."""
    idx = sort_index(sample.time, sample.status)
    return sample.take(idx)
