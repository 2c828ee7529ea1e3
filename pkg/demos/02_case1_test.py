"""
Does a single covariate change the cure probability?
====================================================

Run the bootstrap test on a sample where the cure rate is constant and on
one where it depends on the covariate, then repeat with an unordered
covariate.
"""

import numpy as np

from curetest import run_test
from curetest.simulation import EQUAL_MASS, gen_case1_continuous, gen_case1_nominal

rng = np.random.default_rng(7)

# Constant cure rate: a large p-value is expected.
null = gen_case1_continuous("H0", 150, rng, p=0.6)
res = run_test(null, B=300, seed=1)
print("constant cure rate")
print(res.summary())
print("bandwidths:", {k: v for k, v in res.bandwidths.items() if v is not None})

# Cure rate depending on z: both statistics should reject.
alt = gen_case1_continuous("H1", 150, rng)
res = run_test(alt, B=300, seed=1)
print("\ncure rate depending on z")
print(res.summary())

# A nominal covariate has no natural order, so the statistics are maximised
# over every ordering of its levels (3! = 6 here).
nom = gen_case1_nominal("H1", 150, EQUAL_MASS, rng, levels=(0.3, 0.5, 0.7))
res = run_test(nom, B=300, seed=1)
print("\nnominal covariate,", res.diagnostics["n_orderings"], "orderings")
print(res.summary())
