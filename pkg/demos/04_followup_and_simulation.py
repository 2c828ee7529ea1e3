"""
Follow-up check and a small rejection-rate table
================================================

Before testing covariate effects it is worth checking that follow-up is
long enough for the KM plateau to mean something. Then a tiny Monte Carlo
run shows how rejection rates are tabulated.
"""

import numpy as np

from curetest import maller_zhou, run_monte_carlo
from curetest.simulation import find_scenario, gen_case1_continuous

sample = gen_case1_continuous("H0", 300, np.random.default_rng(5), p=0.5)
fu = maller_zhou(sample)
print(f"largest time {fu.t_max:.2f}, largest event time {fu.t1_max:.2f}")
print(f"{fu.n_tail} events in the tail interval, p = {fu.p_value:.3g}")

# Ten trials per scenario is far too few for real estimates; the point here
# is the table layout. Raise reps and B for anything meaningful.
scenarios = [find_scenario("table1/H0 p=0.6"), find_scenario("table1/H1")]
table = run_monte_carlo(scenarios, ns=(60,), reps=10, B=99, seed=2)
print()
print(table.to_csv())
print(f"runtime {table.runtime:.1f} s")
