"""Shared constants for the test suite."""

import os

SEED = 2718

# seeds for median-of-runs acceptance checks
N_SEEDS = 10

# scaled power runs (null and alternative datasets per sweep point)
POWER_TRIALS = 100
POWER_TRIALS_QUICK = 30

PATHWAY_TRIALS = 20

# restarts for the quick estimator checks
FAST_RESTARTS = 3

GRID_DELTA = 0.05

FIXTURES = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "fixtures")
