"""Shipped example instances used in docs and tests."""

from __future__ import annotations

from .core import Instance, Job, Machine, Resource, SetupTable, SolutionRepr


def six_job_example() -> Instance:
    """Two machines, two calendar resources, six jobs.

    The instance exercises every constraint family at once: a downtime on
    machine 2 that a running job pauses across, a zero-length setup between
    jobs 2 and 5, a precedence lag of one time unit between jobs 1 and 5,
    and resource calendars tight enough that jobs 5 and 6 can only coexist
    while job 5 is paused.
    """
    machines = (
        Machine(id=1),
        Machine(id=2, downtimes=((6, 8),), demands={2: 1}),
    )
    resources = (
        Resource(id=1, capacity=((0, 5, 4), (5, 6, 0), (6, 9, 2), (9, 12, 0))),
        Resource(id=2, capacity=((0, 3, 1), (3, 9, 3), (9, 12, 0))),
    )
    jobs = (
        Job(id=1, eligible=(1, 2), proc={1: 3, 2: 3}, due=4, release=0, demands={1: 2}),
        Job(id=2, eligible=(1, 2), proc={1: 2, 2: 2}, due=3, release=0, demands={1: 2}),
        Job(id=3, eligible=(1, 2), proc={1: 1, 2: 2}, due=6, release=0, preds=((1, 0),)),
        Job(id=4, eligible=(1, 2), proc={1: 2, 2: 2}, due=11, release=0, preds=((6, 0),)),
        Job(id=5, eligible=(1, 2), proc={1: 2, 2: 2}, due=9, release=0, demands={2: 2},
            preds=((1, 1),)),
        Job(id=6, eligible=(1, 2), proc={1: 1, 2: 1}, due=8, release=0, demands={2: 2}),
    )
    setup = SetupTable([m.id for m in machines], [j.id for j in jobs])
    for m in machines:
        for j in jobs:
            setup.set(m.id, None, j.id, 1)
            for p in jobs:
                if p.id != j.id:
                    setup.set(m.id, p.id, j.id, 1)
    setup.set(2, 2, 5, 0)
    return Instance(
        machines=machines,
        jobs=jobs,
        resources=resources,
        setup=setup,
        weights=(1.0, 1.0, 1.0),
        horizon=12,
        name="six-job-example",
    )


def six_job_example_repr() -> SolutionRepr:
    """A representation that decodes the example to a feasible timetable.

    Job 5 runs on machine 2, pauses across the downtime [6, 8) and resumes,
    while job 6 uses the freed resource capacity on machine 1 during the
    pause.
    """
    return SolutionRepr(
        order=[1, 2, 3, 5, 6, 4],
        assign={1: 1, 2: 2, 3: 1, 4: 1, 5: 2, 6: 1},
    )


def single_job_example() -> Instance:
    """One machine, one five-unit job, no resources, no setup."""
    machines = (Machine(id=1),)
    jobs = (Job(id=1, eligible=(1,), proc={1: 5}, due=5, release=0),)
    setup = SetupTable([1], [1])
    setup.set(1, None, 1, 0)
    return Instance(
        machines=machines,
        jobs=jobs,
        resources=(),
        setup=setup,
        weights=(1.0, 1.0, 1.0),
        horizon=20,
        name="single-job-example",
    )
