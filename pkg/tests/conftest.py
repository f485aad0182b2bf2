import random

import pytest
from hypothesis import HealthCheck, settings, strategies as st

from oddsymp.grassmann import VarContext, random_superfunction

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile("default")

seeds = st.integers(min_value=0, max_value=2**31)


def rand_sf(seed, n=2, m=1, parity=None, deg=2, odd_deg=3, bound=3):
    rng = random.Random(seed)
    ctx = VarContext.named(n, m)
    if parity is None:
        parity = rng.randint(0, 1)
    return random_superfunction(rng, ctx, parity, deg, odd_deg, bound)


@pytest.fixture
def ctx2():
    return VarContext.named(2, 1)


@pytest.fixture
def ctx3():
    return VarContext.named(3, 1)
