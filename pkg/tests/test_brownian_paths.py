import csv
import math

import numpy as np
import pytest

from utils import BrownianPaths as paths
from utils import Statistics as stats
from utils.BrownianPaths import BrownianPath, PathConfig

CONFIG = PathConfig(dt=1e-3, horizon=1.0, seed=1234, stream=(99,))


def handmade(values, dt=1.0) -> BrownianPath:
    values = np.asarray(values, dtype=float)[None, :]
    steps = values.shape[1] - 1
    return BrownianPath(path_ids=np.array([0]), values=values, crossing_uniforms=np.ones((1, steps)),
                        zero_uniforms=np.ones((1, steps)), dt=dt, bridge_corrections=False)


def test_config_validation():
    with pytest.raises(ValueError):
        PathConfig(dt=0.0)
    with pytest.raises(ValueError):
        PathConfig(dt=2.0, horizon=1.0)
    with pytest.raises(ValueError):
        PathConfig(renewal_floor=0.5)
    assert CONFIG.steps == 1000
    assert math.isclose(CONFIG.zero_band, 2 * math.sqrt(1e-3))


def test_paths_do_not_depend_on_batching():
    batch = paths.simulate_batch(CONFIG, [3, 4, 5])
    single = paths.simulate(CONFIG, 4)
    np.testing.assert_array_equal(batch.values[1], single.values[0])
    np.testing.assert_array_equal(batch.row(1).values, single.values)
    blocks = list(paths.iterate_batches(CONFIG, 10, block=4))
    assert [len(b) for b in blocks] == [4, 4, 2]
    np.testing.assert_array_equal(blocks[1].values[0], single.values[0])


def test_longer_horizon_extends_the_path():
    short = paths.simulate(CONFIG, 7)
    long = paths.simulate(PathConfig(dt=1e-3, horizon=2.0, seed=1234, stream=(99,)), 7)
    np.testing.assert_array_equal(long.values[0, :short.steps + 1], short.values[0])


def test_streams_and_seeds_differ():
    other_stream = paths.simulate(PathConfig(dt=1e-3, seed=1234, stream=(98,)), 0)
    other_seed = paths.simulate(PathConfig(dt=1e-3, seed=1235, stream=(99,)), 0)
    base = paths.simulate(CONFIG, 0)
    assert not np.array_equal(base.values, other_stream.values)
    assert not np.array_equal(base.values, other_seed.values)


def test_antithetic_pairs():
    config = PathConfig(dt=1e-3, seed=5, antithetic=True)
    batch = paths.simulate_batch(config, [0, 1])
    np.testing.assert_array_equal(batch.values[0], -batch.values[1])


def test_grid_index():
    path = paths.simulate(CONFIG, 0)
    assert path.index(0.5) == 500
    assert path.at(0.0)[0] == 0.0
    with pytest.raises(ValueError):
        path.index(1.5)


def test_zero_location_and_local_time_on_a_handmade_path():
    path = handmade([0.0, 1.0, -1.0, -0.5])
    assert paths.last_zero_before(path, 3.0) == pytest.approx(1.5)
    assert paths.last_zero_before(path, 1.0) == 0.0
    np.testing.assert_allclose(paths.running_last_zero(path), [0.0, 0.0, 1.5, 1.5])
    np.testing.assert_allclose(paths.local_time(path), [0.0, 1.0, 3.0, 3.0])


def test_first_passage_on_a_handmade_path():
    path = handmade([0.0, 0.5, 1.5, 0.0])
    assert paths.first_passage(path, 1.0) == pytest.approx(1.5)
    assert math.isnan(paths.first_passage(path, 2.0))
    assert paths.first_passage(handmade([0.0, -0.5, -1.5]), -1.0) == pytest.approx(1.5)
    with pytest.raises(ValueError):
        paths.first_passage(path, 0.0)


def test_running_functionals_are_monotone():
    batch = paths.simulate_batch(CONFIG, range(50))
    g = paths.running_last_zero(batch)
    ell = paths.local_time(batch)
    lam = paths.lambda_process(batch)
    assert np.all(np.diff(g, axis=1) >= 0)
    assert np.all(np.diff(ell, axis=1) >= 0)
    assert np.all(np.diff(lam, axis=1) >= 0)
    gamma = paths.last_zero_before(batch, 1.0)
    assert np.all((gamma >= 0) & (gamma <= 1))


def test_lambda_needs_the_unit_interval():
    path = paths.simulate(PathConfig(dt=1e-2, horizon=2.0), 0)
    with pytest.raises(ValueError):
        paths.lambda_process(path)


def test_lambda_at_one_has_mean_one():
    terminal = np.concatenate([paths.lambda_process(batch)[:, -1]
                               for batch in paths.iterate_batches(CONFIG, 2000)])
    assert abs(terminal.mean() - 1.0) < 0.1


def test_local_time_estimators_agree():
    batch = paths.simulate_batch(CONFIG, range(500))
    assert paths.local_time_consistency(batch, tolerance=0.2) < 0.2


def test_hitting_time():
    config = PathConfig(dt=1e-2, horizon=1.0, seed=3, renewal_floor=-1.0)
    first = paths.hitting_time(config, 0)
    assert first == paths.hitting_time(config, 0)
    assert not first.censored
    assert first.time > 0
    assert first.local_time >= 0
    with pytest.raises(ValueError):
        paths.hitting_time(config, 0, level=0.0)


def test_local_time_at_hit_is_exponential_in_mean():
    config = PathConfig(dt=1e-2, horizon=1.0, seed=11, renewal_floor=-1.0)
    values, censored = paths.local_time_at_hit(config, range(400))
    assert censored == 0
    assert len(values) == 400
    # l_{T_1} / 2 is Exp(1)
    assert abs(values.mean() / 2 - 1.0) < 0.3


def test_write_samples(tmp_path):
    target = tmp_path / "samples.csv"
    paths.write_samples(target, {"b": np.array([0.5, -1.0]), "a": np.array([1.0, 2.0])})
    with open(target) as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["path_id", "functional", "value"]
    assert rows[1] == ["0", "a", "1.0"]
    assert len(rows) == 5


def first_passages(level: float, n: int = 4000) -> np.ndarray:
    return np.concatenate([np.atleast_1d(paths.first_passage(batch, level))
                           for batch in paths.iterate_batches(CONFIG, n)])


def test_first_passage_probability_before_one():
    # P(T_1 <= 1) = P(|B_1| >= 1) = 0.3173
    hits = first_passages(1.0)
    assert abs(np.mean(~np.isnan(hits)) - 0.3173) < 0.03


def test_first_passage_law_is_inverse_squared_normal():
    hits = first_passages(1.0)
    hits = hits[~np.isnan(hits)]
    reference = 1 / np.random.default_rng(17).standard_normal(200_000) ** 2
    outcome = stats.ks_test(hits, "empirical", other=reference[reference <= 1.0])
    assert outcome.p_value > 0.001


def test_last_zero_before_one_has_mean_one_half():
    gamma = np.concatenate([np.atleast_1d(paths.last_zero_before(batch, 1.0))
                            for batch in paths.iterate_batches(CONFIG, 4000)])
    assert abs(gamma.mean() - 0.5) < 0.03


def test_higher_levels_are_reached_later():
    config = PathConfig(dt=1e-2, horizon=1.0, seed=21)
    for path_id in range(200):
        low = paths.hitting_time(config, path_id, 1.0)
        high = paths.hitting_time(config, path_id, 2.0)
        assert high.time >= low.time
        if not high.censored:
            assert high.local_time >= low.local_time
    assert paths.hitting_time(config, 0, -2.0).time >= paths.hitting_time(config, 0, -1.0).time


def test_state_at_the_last_zero():
    config = PathConfig(dt=1e-2, horizon=1.0, seed=11, renewal_floor=-1.0)
    state = paths.azema_at_last_zero(config, range(300))
    local_times, censored = paths.local_time_at_hit(config, range(300))
    assert state.censored == censored == 0
    np.testing.assert_allclose(state.a, local_times / 2)
    assert np.all((state.z >= 0.0) & (state.z <= 1.0))
    # The excursion that reaches 1 starts one grid step after the last zero
    assert 0.0 < np.mean(1.0 - state.z) < 2 * math.sqrt(config.dt)
    outcome = paths.hitting_time(config, 5)
    assert 0.0 <= outcome.excursion_start < 1.0
