"""Simulation scenarios for the cure-rate tests and a Monte Carlo driver.

Every scenario is a mixture cure model: a subject is susceptible with
probability p(w), susceptible event times follow a latency truncated at
``TAU0``, and censoring times are exponential. Rejection rates over many
simulated samples are collected in a :class:`RejectionTable`.
"""

from __future__ import annotations

import csv
import io
import json
import time as _time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bandwidth import DEFAULT_TEST_CONSTANTS
from .bootstrap import BandwidthConfig, run_tests, stream
from .errors import CureTestError, UnknownScenario
from .sample import CONTINUOUS, DISCRETE, NOMINAL, X_BLOCK, Z_BLOCK, Covariate, CovariateSpec, Sample

TAU0 = 4.605
B0, B1 = 0.476, 0.358
BETA2_H1 = 0.225
NO_CURE_ANCHOR = 20.0
LEVEL_CENSORING = (0.6, 0.45, 0.3)
NOMINAL_LABELS = ("b1", "b2", "b3")
EQUAL_MASS = (1 / 3, 1 / 3, 1 / 3)
SKEWED_MASS = (1 / 5, 1 / 5, 3 / 5)

CASE2_X = (-2.4622, -0.19702, 1.0371)
CASE2_Z = {"H0": (0.6157, 0.6157, 0.6157), "H1": (-13.123, 0.0, 4.9454)}
CASE2_SD = 5.0

H0, H1, NO_CURE = "H0", "H1", "no-cure"
STATS = ("CM", "K")


def logistic(v):
    return 1.0 / (1.0 + np.exp(-np.asarray(v, dtype=float)))


def incidence_case1(z):
    return logistic(B0 + B1 * np.asarray(z, dtype=float))


def anchor_for(p: float) -> float:
    """Covariate value z with incidence_case1(z) == p; p = 1 maps to a fixed anchor."""
    if p >= 1.0:
        return NO_CURE_ANCHOR
    if not 0.0 < p < 1.0:
        raise ValueError("incidence must be in (0, 1]")
    return (np.log(p / (1.0 - p)) - B0) / B1


def incidence_case2(x, z, beta2: float):
    x = np.asarray(x, dtype=float)
    return logistic(B0 + B1 * x * (1.0 + beta2 * np.asarray(z, dtype=float)))


def table4_incidence(hypothesis: str) -> np.ndarray:
    """p(x_i, z_j) on the discrete Case-2 design; rows index x, columns z."""
    beta2 = 0.0 if hypothesis == H0 else BETA2_H1
    x = np.asarray(CASE2_X)[:, None]
    z = np.asarray(CASE2_Z[hypothesis])[None, :]
    return incidence_case2(x, z, beta2)


def latency_rate_case1(z):
    return np.exp((np.asarray(z, dtype=float) + 20.0) / 40.0)


def censoring_rate_case1(z):
    return 0.6 / (2.0 + (np.asarray(z, dtype=float) - 20.0) / 40.0)


def censoring_rate_case2(x, z):
    return 0.6 / (2.0 + (0.5 * (np.asarray(x) + np.asarray(z)) - 20.0) / 40.0)


def latency_quantile(u, alpha, tau0: float = TAU0):
    """Inverse of the exponential latency truncated at tau0 with rate alpha."""
    return -np.log1p(u * np.expm1(-alpha * tau0)) / alpha


def _mixture(rng, incidence, alpha, cens_rate):
    n = len(incidence)
    susceptible = rng.random(n) < incidence
    y = latency_quantile(rng.random(n), alpha)
    y[~susceptible] = np.inf
    c = rng.exponential(1.0 / cens_rate)
    return np.minimum(y, c), (y <= c).astype(int), ~susceptible


def _h0_levels(hypothesis, p, levels):
    if hypothesis == H0:
        if p is None:
            raise ValueError("H0 needs a constant incidence p")
        return (p, p, p)
    if hypothesis == NO_CURE:
        return (1.0, 1.0, 1.0)
    if hypothesis == H1:
        return tuple(levels)
    raise ValueError(f"unknown hypothesis {hypothesis!r}")


def gen_case1_continuous(
    hypothesis: str, n: int, rng: np.random.Generator, p: float | None = None, latent: bool = False
) -> Sample | tuple[Sample, np.ndarray]:
    """Z ~ U(-20, 20); constant incidence under H0 (1 for no-cure), logistic in z under H1.

    With ``latent=True`` the cure indicators are returned alongside the sample.
    """
    z = rng.uniform(-20.0, 20.0, n)
    if hypothesis == H1:
        inc = incidence_case1(z)
    else:
        inc = np.full(n, _h0_levels(hypothesis, p, None)[0])
    t, d, cured = _mixture(rng, inc, latency_rate_case1(z), censoring_rate_case1(z))
    spec = CovariateSpec((Covariate("z", CONTINUOUS, Z_BLOCK),))
    sample = Sample.from_arrays(t, d, [z], spec)
    return (sample, cured) if latent else sample


def _case1_levels(hypothesis, n, mass, rng, p, levels):
    probs = _h0_levels(hypothesis, p, levels)
    anchors = np.array([anchor_for(q) for q in probs])
    k = rng.choice(3, size=n, p=np.asarray(mass) / np.sum(mass))
    t, d, _ = _mixture(rng, np.asarray(probs)[k], latency_rate_case1(anchors[k]), np.asarray(LEVEL_CENSORING)[k])
    return k, t, d


def gen_case1_discrete(
    hypothesis: str,
    n: int,
    mass: Sequence[float],
    rng: np.random.Generator,
    p: float | None = None,
    levels: Sequence[float] = (0.1, 0.5, 0.9),
) -> Sample:
    """Three ordered levels (stored as 1, 2, 3) with incidence ``levels`` under H1 or ``p`` under H0."""
    k, t, d = _case1_levels(hypothesis, n, mass, rng, p, levels)
    spec = CovariateSpec((Covariate("z", DISCRETE, Z_BLOCK),))
    return Sample.from_arrays(t, d, [k + 1.0], spec)


def gen_case1_nominal(
    hypothesis: str,
    n: int,
    mass: Sequence[float],
    rng: np.random.Generator,
    p: float | None = None,
    levels: Sequence[float] = (0.1, 0.5, 0.9),
) -> Sample:
    """As the discrete design with unordered labels b1, b2, b3."""
    k, t, d = _case1_levels(hypothesis, n, mass, rng, p, levels)
    spec = CovariateSpec((Covariate("z", NOMINAL, Z_BLOCK, NOMINAL_LABELS),))
    return Sample.from_arrays(t, d, [np.asarray(NOMINAL_LABELS, dtype=object)[k]], spec)


def gen_case2(
    hypothesis: str,
    kind: str,
    n: int,
    rng: np.random.Generator,
    mass: Sequence[float] = EQUAL_MASS,
) -> Sample:
    """Conditioning covariate X and tested covariate Z, both continuous N(0, 5^2) or both discrete."""
    if hypothesis not in (H0, H1):
        raise ValueError(f"unknown hypothesis {hypothesis!r}")
    beta2 = 0.0 if hypothesis == H0 else BETA2_H1
    if kind == CONTINUOUS:
        x = rng.normal(0.0, CASE2_SD, n)
        z = rng.normal(0.0, CASE2_SD, n)
        x_store, z_store = x, z
    elif kind == DISCRETE:
        prob = np.asarray(mass) / np.sum(mass)
        i = rng.choice(3, size=n, p=prob)
        j = rng.choice(3, size=n, p=prob)
        x = np.asarray(CASE2_X)[i]
        z = np.asarray(CASE2_Z[hypothesis])[j]
        x_store, z_store = x, j + 1.0
    else:
        raise ValueError(f"kind must be {CONTINUOUS!r} or {DISCRETE!r}")
    inc = incidence_case2(x, z, beta2)
    alpha = latency_rate_case1(z) if hypothesis == H0 else latency_rate_case1(x + z)
    t, d, _ = _mixture(rng, inc, alpha, censoring_rate_case2(x, z))
    spec = CovariateSpec((Covariate("x", kind, X_BLOCK), Covariate("z", kind, Z_BLOCK)))
    return Sample.from_arrays(t, d, [x_store, z_store], spec)


@dataclass(frozen=True)
class Scenario:
    """One data-generating design; ``generate`` draws a sample of size n."""

    name: str
    design: str  # 1-continuous, 1-discrete, 1-nominal, 2-continuous, 2-discrete
    hypothesis: str
    p: float | None = None
    levels: tuple | None = None
    mass: tuple | None = None

    def __post_init__(self):
        for q in (self.p,) + tuple(self.levels or ()):
            if q is not None and not 0.0 < q <= 1.0:
                raise ValueError("incidence values must lie in (0, 1]")
        if self.mass is not None:
            if any(m < 0 for m in self.mass) or abs(sum(self.mass) - 1.0) > 1e-9:
                raise ValueError("mass function must be nonnegative and sum to 1")

    def generate(self, n: int, rng: np.random.Generator) -> Sample:
        if self.design == "1-continuous":
            return gen_case1_continuous(self.hypothesis, n, rng, self.p)
        if self.design == "1-discrete":
            return gen_case1_discrete(self.hypothesis, n, self.mass, rng, self.p, self.levels or (0.1, 0.5, 0.9))
        if self.design == "1-nominal":
            return gen_case1_nominal(self.hypothesis, n, self.mass, rng, self.p, self.levels or (0.1, 0.5, 0.9))
        if self.design == "2-continuous":
            return gen_case2(self.hypothesis, CONTINUOUS, n, rng)
        if self.design == "2-discrete":
            return gen_case2(self.hypothesis, DISCRETE, n, rng, self.mass)
        raise ValueError(f"unknown design {self.design!r}")


def _mass_tag(mass) -> str:
    return "equal" if np.allclose(mass, EQUAL_MASS) else "skewed"


def _level_scenarios(design: str) -> list[Scenario]:
    out = []
    for mass in (EQUAL_MASS, SKEWED_MASS):
        tag = _mass_tag(mass)
        for p in (0.5, 0.6, 0.7, 0.8):
            out.append(Scenario(f"H0 p={p} {tag}", design, H0, p=p, mass=mass))
        for lv in ((0.3, 0.5, 0.7), (0.1, 0.5, 0.9)):
            out.append(Scenario(f"H1 {lv} {tag}", design, H1, levels=lv, mass=mass))
        out.append(Scenario(f"no-cure {tag}", design, NO_CURE, mass=mass))
    return out


def scenario_set(name: str) -> list[Scenario]:
    """Named groups of scenarios: table1 .. table3, table4-continuous, table4-discrete."""
    if name == "table1":
        out = [Scenario(f"H0 p={p}", "1-continuous", H0, p=p) for p in (0.5, 0.6, 0.7, 0.8)]
        return out + [Scenario("H1", "1-continuous", H1), Scenario("no-cure", "1-continuous", NO_CURE)]
    if name == "table2":
        return _level_scenarios("1-discrete")
    if name == "table3":
        return _level_scenarios("1-nominal")
    if name == "table4-continuous":
        return [Scenario("H0", "2-continuous", H0), Scenario("H1", "2-continuous", H1)]
    if name == "table4-discrete":
        return [
            Scenario(f"{h} {_mass_tag(m)}", "2-discrete", h, mass=m) for h in (H0, H1) for m in (EQUAL_MASS, SKEWED_MASS)
        ]
    raise UnknownScenario(name)


SCENARIO_SETS = ("table1", "table2", "table3", "table4-continuous", "table4-discrete")


def find_scenario(label: str) -> Scenario:
    """Look up ``"<set>/<scenario name>"``, e.g. ``"table1/H0 p=0.8"``."""
    set_name, _, name = label.partition("/")
    for sc in scenario_set(set_name):
        if sc.name == name:
            return sc
    raise UnknownScenario(label)


# ---------------------------------------------------------------------------
# Monte Carlo driver


@dataclass(frozen=True)
class RejectionRow:
    n: int
    scenario: str
    stat: str
    rejection_rate: float
    kappa_effective: int


@dataclass(frozen=True)
class RejectionTable:
    rows: tuple[RejectionRow, ...]
    kappa: int
    B: int
    alpha: float
    seed: int
    runtime: float = field(default=0.0, compare=False)

    CSV_HEADER = ("n", "scenario", "stat", "rejection_rate", "kappa_effective")

    def __post_init__(self):
        for r in self.rows:
            if r.kappa_effective and not 0.0 <= r.rejection_rate <= 1.0:
                raise ValueError("rejection rates must lie in [0, 1]")

    def rate(self, scenario: str, n: int, stat: str) -> float:
        for r in self.rows:
            if r.scenario == scenario and r.n == n and r.stat == stat:
                return r.rejection_rate
        raise KeyError((scenario, n, stat))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_HEADER)
        for r in self.rows:
            w.writerow((r.n, r.scenario, r.stat, repr(r.rejection_rate), r.kappa_effective))
        return buf.getvalue()

    def metadata(self) -> dict:
        return {"kappa": self.kappa, "B": self.B, "alpha": self.alpha, "seed": self.seed, "runtime_seconds": self.runtime}

    def to_json(self) -> str:
        body = {**self.metadata(), "rows": [r.__dict__ for r in self.rows]}
        return json.dumps(body, indent=2)


def _label_key(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


def trial_seeds(seed: int, label: str, n: int, trial: int) -> tuple[np.random.Generator, int]:
    """Data stream and bootstrap seed for one Monte Carlo trial."""
    key = (_label_key(label), n, trial)
    data_rng = stream(seed, *key, 0)
    test_seed = int(np.random.SeedSequence(seed, spawn_key=key + (1,)).generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
    return data_rng, test_seed


def run_trial(scenario: Scenario, n: int, trial: int, seed: int, B: int, alpha: float, bandwidths: BandwidthConfig):
    """Rejection flags ``[(reject_cm, reject_k), ...]`` per statistic bandwidth, or None on failure."""
    rng, test_seed = trial_seeds(seed, scenario.name, n, trial)
    sample = scenario.generate(n, rng)
    try:
        results = run_tests(sample, B=B, alpha=alpha, seed=test_seed, bandwidths=bandwidths)
    except CureTestError:
        return None
    return [(r.reject_cm, r.reject_k, r.bandwidths.get("statistic")) for r in results]


def _run_jobs(jobs):
    return [run_trial(*job) for job in jobs]


def run_monte_carlo(
    scenarios: str | Sequence[Scenario],
    ns: Sequence[int] = (100,),
    reps: int = 200,
    B: int = 500,
    alpha: float = 0.05,
    seed: int = 0,
    bandwidths: BandwidthConfig = BandwidthConfig(),
    workers: int = 1,
    progress=None,
) -> RejectionTable:
    """Rejection frequencies of CM and K over ``reps`` simulated samples per (scenario, n).

    Trials are independent jobs keyed by (seed, scenario, n, trial); the table
    does not depend on ``workers``. Failed trials are left out and counted
    in ``kappa_effective``. Case-2 continuous designs report one column per
    statistic bandwidth, labelled with its constant C.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    if isinstance(scenarios, str):
        scenarios = scenario_set(scenarios)
    start = _time.perf_counter()
    rows = []
    for sc in scenarios:
        for n in ns:
            jobs = [(sc, n, t, seed, B, alpha, bandwidths) for t in range(reps)]
            if workers <= 1:
                outcomes = _run_jobs(jobs)
            else:
                chunks = [jobs[i::workers] for i in range(workers)]
                with ProcessPoolExecutor(max_workers=workers) as pool:
                    parts = list(pool.map(_run_jobs, chunks))
                outcomes = [None] * reps
                for i, part in enumerate(parts):
                    outcomes[i::workers] = part
            rows.extend(_tabulate(sc, n, outcomes, bandwidths))
            if progress is not None:
                progress(sc, n)
    return RejectionTable(tuple(rows), reps, B, alpha, seed, _time.perf_counter() - start)


def _tabulate(sc: Scenario, n: int, outcomes, bandwidths: BandwidthConfig) -> list[RejectionRow]:
    ok = [o for o in outcomes if o is not None]
    width = len(ok[0]) if ok else 1
    constants = None
    if width > 1 or (ok and ok[0][0][2] is not None):
        constants = DEFAULT_TEST_CONSTANTS if bandwidths.statistic is None else None
    rows = []
    for g in range(width):
        if ok and ok[0][g][2] is not None:
            tag = f"C={constants[g]:g}" if constants else f"h={ok[0][g][2]:.4g}"
            label = f"{sc.name} {tag}"
        else:
            label = sc.name
        for s, stat in enumerate(STATS):
            flags = [o[g][s] for o in ok]
            rate = float(np.mean(flags)) if flags else float("nan")
            rows.append(RejectionRow(n, label, stat, rate, len(flags)))
    return rows
