"""Shared builders for synthetic run-record tables used by the stats tests."""

import numpy as np

from efcilab.stats.design import RunRecord


def make_records(
    n,
    seed=0,
    train_levels=("byol", "dino", "scratch"),
    incr_levels=("dslda", "fetril"),
    data_levels=("d1", "d2"),
    train_effects=None,
    incr_effects=None,
    data_effects=None,
    acc1_coef=0.0,
    noise=0.05,
    response="avg_acc",
):
    """Records whose ``response`` column follows an additive factor model."""
    rng = np.random.default_rng(seed)
    train_effects = train_effects or {}
    incr_effects = incr_effects or {}
    data_effects = data_effects or {}
    records = []
    for i in range(n):
        train = train_levels[int(rng.integers(len(train_levels)))]
        incr = incr_levels[int(rng.integers(len(incr_levels)))]
        data = data_levels[int(rng.integers(len(data_levels)))]
        acc1 = float(rng.uniform(0.2, 0.9))
        y = (
            0.4
            + train_effects.get(train, 0.0)
            + incr_effects.get(incr, 0.0)
            + data_effects.get(data, 0.0)
            + acc1_coef * acc1
            + noise * float(rng.standard_normal())
        )
        other = float(rng.random())
        records.append(
            RunRecord(
                run_id=f"r{i:04d}",
                data=data,
                train=train,
                incr=incr,
                scenario_b=int(rng.integers(2)),
                n=20,
                n1=int(rng.integers(40, 400)),
                n_mean=float(rng.uniform(5, 25)),
                small=int(rng.integers(2)),
                width=float(rng.uniform(16, 96)),
                acc1=acc1,
                avg_acc=y if response == "avg_acc" else other,
                forgetting=y if response == "forgetting" else other,
                accK=float(rng.random()),
            )
        )
    return records
