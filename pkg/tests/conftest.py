from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tumorfront.model import ModelParams

# The four reference parameter sets exercised throughout the suite. The first
# three vary only the Allee threshold; the fourth has strong acid inhibition
# and fast tumor kinetics.
REFERENCE_SETS = {
    "set1": ModelParams(a=0.1, kappa=0.1, delta1=12.5, delta2=0.1,
                        delta3=70.0, rho=1.0, epsilon=0.0063),
    "set2": ModelParams(a=0.25, kappa=0.1, delta1=12.5, delta2=0.1,
                        delta3=70.0, rho=1.0, epsilon=0.0063),
    "set3": ModelParams(a=0.35, kappa=0.1, delta1=12.5, delta2=0.1,
                        delta3=70.0, rho=1.0, epsilon=0.0063),
    "set4": ModelParams(a=0.25, kappa=0.05, delta1=11.5, delta2=3.0,
                        delta3=1.0, rho=15.0, epsilon=0.05),
}

# Published finite-epsilon wave speeds for three of the sets.
REFERENCE_SPEEDS = {"set2": 0.2211, "set3": 0.0401, "set4": 0.3296}


@pytest.fixture(scope="session")
def reference_sets():
    return REFERENCE_SETS
