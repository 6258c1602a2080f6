from __future__ import annotations

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from pmsched import gen
from pmsched.fixtures import single_job_example, six_job_example, six_job_example_repr


@pytest.fixture
def six_job():
    return six_job_example()


@pytest.fixture
def six_job_repr():
    return six_job_example_repr()


@pytest.fixture
def single_job():
    return single_job_example()


def tiny_config(seed: int) -> gen.GenConfig:
    """Configurations small enough for the exhaustive oracle (V stays <= 40)."""
    n = 3 + seed % 3
    return gen.GenConfig(
        n=n,
        k=1 + seed % 2,
        s=seed % 3,
        c=(1 if n >= 4 and seed % 2 == 0 else 0),
        seed=seed,
        proc_range=(1, 5),
        setup_range=(0, 2),
        demand_range=(1, 2),
        due_slack=5,
        release_slack=5,
        downtime_count_range=(0, 1),
        horizon_factor=1.3,
    )


def tiny_instances(count: int, v_cap: int = 40):
    """Deterministic stream of tiny generated instances within oracle limits."""
    out = []
    seed = 0
    while len(out) < count and seed < count * 20:
        inst, ref = gen.generate(tiny_config(seed))
        seed += 1
        if inst.horizon <= v_cap:
            out.append((inst, ref))
    return out
