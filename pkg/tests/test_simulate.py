import logging

import numpy as np
import pytest

from longcf.errors import ConfigError, SchemaMismatch
from longcf.schema import Dataset
from longcf.simulate import (SimulationConfig, adult_like_schema, make_adult_like, make_drift_pair,
                             simulate_second_timepoint)

from oracles import simulator_violations


def test_invariants_on_adult_like():
    data = make_adult_like(600, seed=4)
    config = SimulationConfig(seed=9)
    pair, donors = simulate_second_timepoint(data, config, return_donors=True)
    assert simulator_violations(data, pair, donors, config) == 0
    assert np.array_equal(pair.time1, data.X)
    imm = data.schema.immutable_mask
    assert np.array_equal(pair.time1[:, imm], pair.time2[:, imm])
    assert (donors >= 0).mean() == pytest.approx(0.3, abs=0.06)


def test_only_age_moves_without_swaps():
    data = make_adult_like(300, seed=1)
    pair = simulate_second_timepoint(data, SimulationConfig(p_swap=0.0, p_edu_bump=0.0, seed=2))
    delta = pair.time2 - pair.time1
    age = data.schema.index("age")
    assert np.all(np.delete(delta, age, axis=1) == 0)
    assert set(np.unique(delta[:, age])) <= set(range(1, 11))


def test_education_cap():
    schema = adult_like_schema()
    data = make_adult_like(50, seed=0)
    X = data.X.copy()
    edu = schema.index("education")
    top = len(schema[edu].levels) - 1
    X[:, edu] = top
    pair = simulate_second_timepoint(Dataset(schema, X), SimulationConfig(p_edu_bump=1.0, p_swap=0.0))
    assert np.all(pair.time2[:, edu] == top)


def test_donor_block_copied_and_donor_untouched():
    data = make_adult_like(200, seed=3)
    config = SimulationConfig(p_swap=1.0, p_edu_bump=0.0, seed=5)
    pair, donors = simulate_second_timepoint(data, config, return_donors=True)
    swap = [data.schema.index(n) for n in config.swap_features]
    edu = data.schema.index("education")
    for i in np.flatnonzero(donors >= 0)[:50]:
        d = donors[i]
        assert np.array_equal(pair.time2[i, swap], data.X[d, swap])
        assert data.X[d, edu] == data.X[i, edu]
        # the donor's own first reading is unchanged
        assert np.array_equal(pair.time1[d], data.X[d])


def test_replayed_donor_choice():
    data = make_adult_like(40, seed=6)
    config = SimulationConfig(seed=8)
    pair, donors = simulate_second_timepoint(data, config, return_donors=True)
    rng = np.random.default_rng(config.seed)
    edu = data.schema.index("education")
    top = len(data.schema[edu].levels) - 1
    for i in range(len(data)):
        bump = rng.random() < config.p_edu_bump
        swap = rng.random() < config.p_swap
        rng.integers(1, 11)
        level = min(data.X[i, edu] + 1, top) if bump else data.X[i, edu]
        if swap:
            pool = np.flatnonzero(data.X[:, edu] == level)
            pool = pool[pool != i]
            if len(pool):
                assert donors[i] == pool[rng.integers(0, len(pool))]
                continue
        assert donors[i] == -1


def test_lonely_education_class_is_logged(caplog):
    data = make_adult_like(300, seed=0)
    X = data.X.copy()
    edu = data.schema.index("education")
    X[:, edu] = 1
    X[0, edu] = 6
    config = SimulationConfig(p_swap=1.0, p_edu_bump=0.0)
    with caplog.at_level(logging.WARNING):
        pair, donors = simulate_second_timepoint(Dataset(data.schema, X), config, return_donors=True)
    assert donors[0] == -1
    assert "skipped 1 swaps" in caplog.text


def test_determinism():
    data = make_adult_like(200, seed=2)
    a = simulate_second_timepoint(data, SimulationConfig(seed=3))
    b = simulate_second_timepoint(data, SimulationConfig(seed=3))
    assert np.array_equal(a.time2, b.time2)
    assert not np.array_equal(a.time2, simulate_second_timepoint(data, SimulationConfig(seed=4)).time2)


def test_config_validation():
    with pytest.raises(ConfigError):
        SimulationConfig(p_swap=1.5)
    with pytest.raises(ConfigError):
        SimulationConfig(age_increment=(0, 3))
    with pytest.raises(ConfigError):
        SimulationConfig(age_increment=(5, 3))
    data = make_adult_like(20)
    with pytest.raises(ConfigError):
        simulate_second_timepoint(data, SimulationConfig(swap_features=("race",)))
    with pytest.raises(ConfigError):
        simulate_second_timepoint(data, SimulationConfig(education_feature="age", age_feature="hours_per_week"))
    with pytest.raises(SchemaMismatch):
        simulate_second_timepoint(data.subset(np.arange(0)))


def test_adult_like_population():
    data = make_adult_like(1000, seed=0)
    assert len(data) == 1000
    assert data.labels.mean() == pytest.approx(0.24, abs=0.01)
    assert data.schema.immutable_mask.sum() == 5


def test_drift_fixture():
    data, pair = make_drift_pair(100, n_vitals=4, n_static=3, seed=1)
    assert len(pair) == 100 and len(data.schema) == 7
    assert np.array_equal(pair.time1[:, 4:], pair.time2[:, 4:])
    assert not np.array_equal(pair.time1[:, :4], pair.time2[:, :4])
