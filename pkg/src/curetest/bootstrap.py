"""Bootstrap calibration of the cure-rate covariate tests.

Resamples are generated under the null hypothesis: covariates are drawn
with replacement, each bootstrap subject is cured with the null cure
probability (marginal KM plateau in Case 1, a function of X only in Cases 2
and 3), uncured times come from the conditional latency estimate and
censoring times from the conditional censoring estimate. The proxy
responses and the statistic are then recomputed on every resample.

Resample ``b`` draws from its own counter-based stream keyed by
``(seed, b)``, so serial and parallel runs give identical results.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import estimators as est
from .bandwidth import CENSORING, SURVIVAL, cv_scores, make_grid, select_bandwidth, statistic_bandwidths
from .errors import BootstrapAbort, CureTestError, NoEvents
from .proxy import EtaVector, censoring_cdf_at, eta_values
from .sample import CONTINUOUS, Sample, validate
from .statistics import StatisticDesign, compute_statistics

CASE1_CV_GRID = (4.0, 60.0, 10, 1 / 5)
CASE2_CV_GRID = (3.5, 30.0, 10, 1 / 6)
MAX_FAILURE_RATE = 0.05


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent Philox stream for ``(seed, *key)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))))


def fresh_seed() -> int:
    return int(np.random.SeedSequence().generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def draw_from_curve(curve: est.StepCurve, u: float) -> float:
    """Smallest jump time where the distribution 1 - curve reaches ``u``.

    Returns ``math.inf`` when ``u`` exceeds the total mass of a defective
    curve; callers map that to "cured" or to a fallback censoring time.
    """
    dist = 1.0 - curve.values
    hit = np.flatnonzero(dist >= u)
    return float(curve.jump_times[hit[0]]) if len(hit) else math.inf


def draw_rows(cdf: np.ndarray, grid: np.ndarray, u: np.ndarray, beyond: np.ndarray | float = math.inf) -> np.ndarray:
    """Vectorised :func:`draw_from_curve` over rows of a CDF matrix on ``grid``."""
    reached = cdf >= u[:, None]
    k = np.argmax(reached, axis=1)
    found = reached[np.arange(len(u)), k]
    return np.where(found, grid[k], beyond)


@dataclass(frozen=True)
class BandwidthConfig:
    """Smoothing choices for a test run.

    ``cv_grid`` is ``(d_min, d_max, count, rate)`` for the cross-validated
    estimators (default depends on the case). ``censoring``, ``survival``
    and ``cure`` pin those bandwidths and skip cross-validation.
    ``statistic`` lists the bandwidths of the Case-2/3 statistic; by default
    h = C n^(-1/(3m)) for C in 10, 20, 30, 40, 45, 50, 60.
    """

    cv_grid: tuple | None = None
    censoring: float | None = None
    survival: float | None = None
    cure: float | None = None
    statistic: tuple | None = None


@dataclass(frozen=True)
class ResamplePlan:
    case: int
    n: int
    tau_hat: float
    design: StatisticDesign
    g_data: np.ndarray
    g_bandwidths: tuple
    cure: np.ndarray  # null cure probability per original row
    lat_grid: np.ndarray
    lat_cdf: np.ndarray
    cens_grid: np.ndarray
    cens_cdf: np.ndarray
    cens_max: np.ndarray
    cure_model_under_h0: str
    latency_source: str
    censoring_source: str
    n_latency_fallback: int = 0
    cap: bool = True


class Resample(NamedTuple):
    index: np.ndarray
    time: np.ndarray
    status: np.ndarray
    cured: np.ndarray


@dataclass(frozen=True)
class TestResult:
    __test__ = False

    case: int
    cm_obs: float
    k_obs: float
    cm_crit: float
    k_crit: float
    p_cm: float
    p_k: float
    B: int
    B_effective: int
    alpha: float
    seed: int
    bandwidths: dict
    diagnostics: dict
    boot_cm: np.ndarray = field(default=None, repr=False, compare=False)
    boot_k: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def reject_cm(self) -> bool:
        return self.cm_obs > self.cm_crit

    @property
    def reject_k(self) -> bool:
        return self.k_obs > self.k_crit

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "cm_obs": self.cm_obs,
            "k_obs": self.k_obs,
            "cm_crit": self.cm_crit,
            "k_crit": self.k_crit,
            "p_cm": self.p_cm,
            "p_k": self.p_k,
            "reject_cm": self.reject_cm,
            "reject_k": self.reject_k,
            "B": self.B,
            "B_effective": self.B_effective,
            "alpha": self.alpha,
            "seed": self.seed,
            "bandwidths": dict(self.bandwidths),
            "diagnostics": dict(self.diagnostics),
        }

    def summary(self) -> str:
        h = self.bandwidths.get("statistic")
        tag = f" (h={h:.4g})" if h is not None else ""
        return (
            f"CM = {self.cm_obs:.6g}, p_CM = {self.p_cm:.3f}, reject = {self.reject_cm}{tag}\n"
            f"K  = {self.k_obs:.6g}, p_K  = {self.p_k:.3f}, reject = {self.reject_k}{tag}"
        )


def critical_value(boot: np.ndarray, alpha: float) -> float:
    """Element at 1-based position ceil((1 - alpha) B) of the sorted bootstrap statistics."""
    boot = np.sort(np.asarray(boot, dtype=float))
    b = len(boot)
    pos = math.ceil(round((1.0 - alpha) * b, 9))
    return float(boot[min(max(pos, 1), b) - 1])


def bootstrap_p_value(boot: np.ndarray, observed: float) -> float:
    """Share of bootstrap statistics strictly larger than the observed one."""
    return float(np.mean(np.asarray(boot) > observed))


# ---------------------------------------------------------------------------
# plan construction


def infer_case(sample: Sample) -> int:
    q = len(sample.spec.x_block)
    if not sample.spec.z_block:
        raise ValueError("no Z-block covariate to test")
    return 1 if q == 0 else 2 if q == 1 else 3


def _check_case(sample: Sample, case: int | None) -> int:
    inferred = infer_case(sample)
    if case is None:
        return inferred
    if case == 1 and inferred != 1:
        raise ValueError("Case 1 takes no X-block covariates")
    if case == 1 and len(sample.spec.z_block) != 1:
        raise ValueError("Case 1 tests a single covariate")
    if case == 2 and inferred != 2:
        raise ValueError("Case 2 needs exactly one X-block covariate")
    if case == 3 and inferred == 1:
        raise ValueError("Case 3 needs an X-block")
    return int(case)


def _cv_grid(case: int, cfg: BandwidthConfig, n: int):
    d_min, d_max, count, rate = cfg.cv_grid or (CASE1_CV_GRID if case == 1 else CASE2_CV_GRID)
    return make_grid(d_min, d_max, int(count), rate, n).values


def _select(sample: Sample, names, fixed, grid, target) -> float | None:
    kinds = [sample.spec[nm].kind for nm in names]
    if not any(k == CONTINUOUS for k in kinds):
        return None
    if fixed is not None:
        return float(fixed)
    data = np.column_stack([sample.codes(nm) for nm in names])
    scores = cv_scores(sample.time, sample.status, data, [k == CONTINUOUS for k in kinds], grid, target)
    return select_bandwidth(scores, grid)


def _bandwidths_for(sample: Sample, names, h):
    return tuple(h if sample.spec[nm].kind == CONTINUOUS else None for nm in names)


def statistic_design(sample: Sample) -> StatisticDesign:
    x = sample.spec.x_block
    z = sample.spec.z_block
    return StatisticDesign(
        tuple(sample.column(c.name) for c in x),
        tuple(c.kind for c in x),
        tuple(sample.column(c.name) for c in z),
        tuple(c.kind for c in z),
    )


@dataclass(frozen=True)
class _Setup:
    case: int
    tau_hat: float
    eta: EtaVector
    plan: ResamplePlan
    hs: tuple
    selected: dict


def _setup(sample: Sample, case: int | None, cfg: BandwidthConfig, hs, cap: bool) -> _Setup:
    problems = validate(sample)
    if problems:
        raise ValueError("invalid sample: " + "; ".join(str(p) for p in problems[:5]))
    case = _check_case(sample, case)
    n = sample.n
    time, status = sample.time, sample.status
    tau = est.largest_event_time(time, status)
    grid = _cv_grid(case, cfg, n)
    w_names = list(sample.spec.names)
    x_names = [c.name for c in sample.spec.x_block]

    h_g = _select(sample, w_names, cfg.censoring, grid, CENSORING)
    h_s = _select(sample, w_names, cfg.survival, grid, SURVIVAL)
    g_data = np.column_stack([sample.codes(nm) for nm in w_names])
    g_bw = _bandwidths_for(sample, w_names, h_g)

    g_tau = censoring_cdf_at(time, status, g_data, g_bw, tau)
    eta_v, capped = eta_values(time, status, g_tau, tau, cap)
    eta = EtaVector(tau, eta_v, g_tau, int(capped.sum()), capped)

    design = statistic_design(sample)
    if design.smoothed:
        m = len(design.z_cols)
        hs = tuple(float(h) for h in (hs or cfg.statistic or statistic_bandwidths(n, m)))
    else:
        hs = ()

    # censoring draws: 1 - G(t | W_j) rows
    s_bw = _bandwidths_for(sample, w_names, h_s)
    _, cens_grid, cens_surv = est.survival_matrix(time, 1 - status, g_data, g_bw, g_data)
    cens_cdf = 1.0 - cens_surv
    wpos = est.product_weights(g_data, g_data, g_bw) > 0 if g_bw else np.ones((n, n), bool)
    cens_max = np.where(wpos, time[None, :], -np.inf).max(axis=1)

    # latency draws: S0(t | W_j) rows, marginal latency where incidence is 0
    _, lat_grid, surv = est.survival_matrix(time, status, g_data, s_bw, g_data)
    lat, _ = est.latency_matrix(surv, lat_grid, tau)
    bad = np.isnan(lat[:, 0])
    if np.any(bad):
        _, _, km = est.survival_matrix(time, status, np.empty((n, 0)), (), np.zeros((1, 0)))
        km_lat, _ = est.latency_matrix(km, lat_grid, tau)
        lat[bad] = km_lat[0]
    lat_cdf = 1.0 - lat

    h_c = None
    if case == 1:
        km_plateau = est.km_survival(sample)(tau)
        cure = np.full(n, float(km_plateau))
        cure_model = "marginal-km"
    elif all(sample.spec[nm].kind == CONTINUOUS for nm in x_names):
        h_c = _select(sample, x_names, cfg.cure, grid, SURVIVAL)
        x_data = np.column_stack([sample.codes(nm) for nm in x_names])
        _, grid_c, surv_x = est.survival_matrix(time, status, x_data, (h_c,) * len(x_names), x_data)
        last = np.searchsorted(grid_c, tau, side="right") - 1
        cure = surv_x[:, last].copy()
        cure_model = "conditional-pl"
    else:
        x_data = np.column_stack([sample.codes(nm) for nm in x_names])
        _, groups = np.unique(x_data, axis=0, return_inverse=True)
        groups = groups.reshape(-1)
        cure = np.empty(n)
        for g in np.unique(groups):
            cure[groups == g] = min(1.0, eta_v[groups == g].mean())
        cure_model = "eta-mean"

    plan = ResamplePlan(
        case=case,
        n=n,
        tau_hat=tau,
        design=design,
        g_data=g_data,
        g_bandwidths=g_bw,
        cure=cure,
        lat_grid=lat_grid,
        lat_cdf=lat_cdf,
        cens_grid=cens_grid,
        cens_cdf=cens_cdf,
        cens_max=cens_max,
        cure_model_under_h0=cure_model,
        latency_source="conditional latency" + (f" h={h_s:.4g}" if h_s is not None else " (stratified)"),
        censoring_source="conditional censoring PL" + (f" h={h_g:.4g}" if h_g is not None else " (stratified)"),
        n_latency_fallback=int(bad.sum()),
        cap=cap,
    )
    selected = {"censoring": h_g, "survival": h_s, "cure": h_c}
    return _Setup(case, tau, eta, plan, hs, selected)


def build_plan(
    sample: Sample,
    case: int | None = None,
    bandwidths: BandwidthConfig = BandwidthConfig(),
    cap: bool = True,
) -> ResamplePlan:
    return _setup(sample, case, bandwidths, None, cap).plan


# ---------------------------------------------------------------------------
# resampling


def draw_resample(plan: ResamplePlan, rng: np.random.Generator) -> Resample:
    n = plan.n
    idx = rng.integers(0, n, size=n)
    u_cure = rng.random(n)
    u_y = rng.random(n)
    u_c = rng.random(n)
    cured = u_cure < plan.cure[idx]
    y = draw_rows(plan.lat_cdf[idx], plan.lat_grid, u_y)
    y[cured] = math.inf
    c = draw_rows(plan.cens_cdf[idx], plan.cens_grid, u_c, plan.cens_max[idx])
    status = (y <= c).astype(int)
    return Resample(idx, np.minimum(y, c), status, cured)


def _as_sample(original: Sample, r: Resample) -> Sample:
    rows = []
    for i, t, d in zip(r.index, r.time, r.status):
        rows.append((float(t), int(d), original.observations[i].covariates))
    return Sample(tuple(rows), original.spec)


def resample_case1(sample: Sample, eta=None, seed: int = 0, index: int = 0, plan: ResamplePlan | None = None, **kw) -> Sample:
    """One null bootstrap resample for Case 1 (cure probability from the KM plateau)."""
    plan = plan or build_plan(sample, 1, **kw)
    return _as_sample(sample, draw_resample(plan, stream(seed, index)))


def resample_case2(sample: Sample, eta=None, seed: int = 0, index: int = 0, plan: ResamplePlan | None = None, **kw) -> Sample:
    """One null bootstrap resample for Cases 2/3; (X, Z) pairs are kept together."""
    plan = plan or build_plan(sample, None, **kw)
    if plan.case == 1:
        raise ValueError("sample has no X-block; use resample_case1")
    return _as_sample(sample, draw_resample(plan, stream(seed, index)))


def bootstrap_statistics(plan: ResamplePlan, rng: np.random.Generator, hs: Sequence[float]):
    """Draw one resample and return ``(cm_values, k_values, n_capped)``, one entry per bandwidth."""
    r = draw_resample(plan, rng)
    if not np.any(r.status == 1):
        raise NoEvents("bootstrap resample has no events")
    tau = float(r.time[r.status == 1].max())
    data = plan.g_data[r.index]
    g = censoring_cdf_at(r.time, r.status, data, plan.g_bandwidths, tau)
    eta, capped = eta_values(r.time, r.status, g, tau, plan.cap)
    pairs = compute_statistics(eta, plan.design.take(r.index), hs)
    return [p.cm for p in pairs], [p.k for p in pairs], int(capped.sum())


def _run_block(plan: ResamplePlan, seed: int, hs: tuple, start: int, stop: int):
    width = max(len(hs), 1)
    cm = np.full((stop - start, width), np.nan)
    kk = np.full((stop - start, width), np.nan)
    capped = 0
    errors: dict[str, int] = {}
    for b in range(start, stop):
        try:
            c, k, nc = bootstrap_statistics(plan, stream(seed, b), hs)
        except CureTestError as exc:
            errors[type(exc).__name__] = errors.get(type(exc).__name__, 0) + 1
            continue
        cm[b - start] = c
        kk[b - start] = k
        capped += nc
    return cm, kk, capped, errors


def _blocks(B: int, workers: int):
    parts = max(1, min(B, workers * 4))
    edges = np.linspace(0, B, parts + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def run_bootstrap(plan: ResamplePlan, B: int, seed: int, hs: tuple = (), workers: int = 1):
    blocks = _blocks(B, workers)
    if workers <= 1:
        results = [_run_block(plan, seed, hs, a, b) for a, b in blocks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_block, plan, seed, hs, a, b) for a, b in blocks]
            results = [f.result() for f in futures]
    cm = np.concatenate([r[0] for r in results])
    kk = np.concatenate([r[1] for r in results])
    capped = sum(r[2] for r in results)
    errors: dict[str, int] = {}
    for r in results:
        for key, v in r[3].items():
            errors[key] = errors.get(key, 0) + v
    return cm, kk, capped, dict(sorted(errors.items()))


def run_tests(
    sample: Sample,
    case: int | None = None,
    B: int = 2000,
    alpha: float = 0.05,
    seed: int | None = None,
    bandwidths: BandwidthConfig = BandwidthConfig(),
    hs: Sequence[float] | None = None,
    workers: int = 1,
    cap: bool = True,
) -> list[TestResult]:
    """Run the bootstrap test; one result per statistic bandwidth.

    Cases without a smoothed conditioning block return a single result.
    All bandwidths share the same bootstrap resamples.
    """
    if B < 1:
        raise ValueError("B must be at least 1")
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    seed = fresh_seed() if seed is None else int(seed)
    workers = (os.cpu_count() or 1) if workers == 0 else int(workers)
    setup = _setup(sample, case, bandwidths, hs, cap)
    plan = setup.plan
    observed = compute_statistics(setup.eta, plan.design, setup.hs)

    cm, kk, capped, errors = run_bootstrap(plan, B, seed, setup.hs, workers)
    ok = ~np.isnan(cm[:, 0])
    failed = int(B - ok.sum())
    if failed > MAX_FAILURE_RATE * B:
        raise BootstrapAbort(f"{failed} of {B} bootstrap resamples failed ({errors})")
    cm, kk = cm[ok], kk[ok]

    results = []
    for g, obs in enumerate(observed):
        h = setup.hs[g] if setup.hs else None
        bw = {**setup.selected, "statistic": h}
        diag = {
            "tau_hat": setup.tau_hat,
            "n": plan.n,
            "n_capped": setup.eta.n_capped,
            "boot_n_capped": capped,
            "failed_resamples": failed,
            "failure_kinds": errors,
            "n_orderings": plan.design.n_orderings(),
            "cure_model_under_h0": plan.cure_model_under_h0,
            "latency_source": plan.latency_source,
            "censoring_source": plan.censoring_source,
            "latency_fallbacks": plan.n_latency_fallback,
            "mean_eta": setup.eta.mean(),
        }
        results.append(
            TestResult(
                case=setup.case,
                cm_obs=obs.cm,
                k_obs=obs.k,
                cm_crit=critical_value(cm[:, g], alpha),
                k_crit=critical_value(kk[:, g], alpha),
                p_cm=bootstrap_p_value(cm[:, g], obs.cm),
                p_k=bootstrap_p_value(kk[:, g], obs.k),
                B=B,
                B_effective=int(ok.sum()),
                alpha=alpha,
                seed=seed,
                bandwidths=bw,
                diagnostics=diag,
                boot_cm=cm[:, g].copy(),
                boot_k=kk[:, g].copy(),
            )
        )
    return results


def run_test(
    sample: Sample,
    case: int | None = None,
    B: int = 2000,
    alpha: float = 0.05,
    seed: int | None = None,
    bandwidths: BandwidthConfig = BandwidthConfig(),
    h: float | None = None,
    workers: int = 1,
    cap: bool = True,
) -> TestResult:
    """Bootstrap test at a single statistic bandwidth ``h`` (Cases 2/3 with continuous X)."""
    hs = None if h is None else (float(h),)
    results = run_tests(sample, case, B, alpha, seed, bandwidths, hs, workers, cap)
    if len(results) != 1:
        raise ValueError("several statistic bandwidths configured; use run_tests or pass h")
    return results[0]
