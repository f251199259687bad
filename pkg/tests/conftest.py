import pytest
from hypothesis import settings

from hamtest.instances import gen_bernoulli_family
from hamtest.strings import Instance

settings.register_profile("suite", deadline=None)
settings.load_profile("suite")

# Worked 10/30 binary example used across modules (known distances:
# HD=4 at alignment 0, single mismatch at 10 and 20, three at 19).
FIG_P = [0, 1, 0, 0, 1, 1, 1, 1, 1, 1]
FIG_T = [0, 0, 0, 0, 0, 1, 0, 1, 0, 1, 0, 1, 1, 0, 1, 1, 1, 1, 1, 1,
         1, 1, 0, 0, 1, 1, 1, 1, 1, 1]
FIG_MP = [0, 1, 3]
FIG_MT = [8, 12, 13, 15, 21]


@pytest.fixture(scope="session")
def fig2() -> Instance:
    return Instance(pattern=FIG_P, text=FIG_T, sigma=2, k=2)


@pytest.fixture(scope="session")
def bernoulli_batch():
    """Verified Ber(2k/m) random instances at n=2000, m=1000, k=64.

    Shared by the distribution-fact checks and the no-correctness runs.
    """
    return [gen_bernoulli_family("random", 2000, 1000, 64, seed=s) for s in range(210)]
