"""Nonparametric covariate tests for the cure probability in mixture cure models."""

from .bandwidth import BandwidthGrid, cv_bandwidth, make_grid, statistic_bandwidths
from .bootstrap import (
    BandwidthConfig,
    TestResult,
    build_plan,
    draw_from_curve,
    resample_case1,
    resample_case2,
    run_test,
    run_tests,
)
from .errors import (
    AllWeightsZero,
    BootstrapAbort,
    CureRateOne,
    CureTestError,
    EmptyStratum,
    GSaturated,
    MissingBandwidth,
    NoEvents,
    TooManyLevels,
    UnexpectedBandwidth,
    UnknownScenario,
)
from .estimators import (
    KernelConfig,
    StepCurve,
    beran_survival,
    censoring_curve,
    cure_rate,
    cure_rate_at,
    km_survival,
    latency_curve,
    multivar_conditional_pl,
    nw_weights,
    stratified_km,
)
from .followup import FollowupResult, maller_zhou
from .proxy import EtaVector, compute_eta, estimate_tau
from .sample import CONTINUOUS, DISCRETE, NOMINAL, Covariate, CovariateSpec, Observation, Sample, validate
from .simulation import RejectionTable, Scenario, run_monte_carlo, scenario_set
from .statistics import StatPair, compute_statistics, nominal_stat, stat_pair, u_case1, u_case2, u_case3

__version__ = "0.1.0"
