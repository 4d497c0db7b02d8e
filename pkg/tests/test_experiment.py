import math

import numpy as np
import pandas as pd
import pytest

from plume_app.errors import StartOffFilamentError
from plume_app.experiment import SWEEP_COLUMNS, init_trial, release_point, run_trial, sweep
from plume_app.exporters import agent_rows
from plume_app.geometry import periodic_distance
from plume_app.schemas import ScalarConfig, SpectrumConfig, SwarmConfig, SweepPlan, TrialConfig

# Reduced trial: coarse grids, a short spin-up and a release close to the source
SMALL = TrialConfig(
    swarm=SwarmConfig(n_agents=8, dt=0.002),
    flow=SpectrumConfig(modes=16, rms_velocity=0.0),
    scalar=ScalarConfig(grid_size=64),
    spin_up_time=0.3,
    max_time=0.4,
    start_distance=0.1,
    n_trials=2,
    record_interval=0.1,
)


def small_config(**changes):
    data = SMALL.model_dump()
    for section in ('swarm', 'flow', 'scalar'):
        data[section].update(changes.pop(section, {}))
    data.update(changes)
    return TrialConfig.model_validate(data)


@pytest.fixture(scope="module")
def state():
    return init_trial(SMALL, 0)


def test_release_point():
    assert release_point(SMALL) == pytest.approx([0.5, 0.2])
    assert release_point(TrialConfig()) == pytest.approx([0.5, 0.9])


def test_agents_start_in_disc_around_release_point(state):
    distance = periodic_distance(state.swarm.positions, release_point(SMALL))
    assert state.swarm.size == 8
    assert np.all(distance <= SMALL.swarm.r_attract_max + 1e-12)


def test_headings_point_upstream(state):
    along = state.swarm.headings @ np.asarray(SMALL.flow.mean_flow)
    assert np.all(along <= 1e-12)
    assert np.allclose(np.linalg.norm(state.swarm.headings, axis=1), 1.0)


def test_agent_rows_cover_active_agents():
    trial = init_trial(SMALL, 0)
    trial.swarm.active[3] = False
    rows = agent_rows(trial)
    assert [r['id'] for r in rows] == [0, 1, 2, 4, 5, 6, 7]
    agent = trial.swarm.agent(5)
    assert rows[4] == {'t': 0.0, 'id': 5, 'x': agent.position[0], 'y': agent.position[1],
                       'px': agent.heading[0], 'py': agent.heading[1], 'C_i': agent.confidence}
    assert agent.position == tuple(trial.swarm.positions[5])


def test_seed_follows_trial_index(state):
    again = init_trial(SMALL, 0)
    other = init_trial(SMALL, 1)
    assert state.seed == 0 and other.seed == 1
    assert np.array_equal(again.swarm.positions, state.swarm.positions)
    assert np.array_equal(again.swarm.headings, state.swarm.headings)
    assert np.array_equal(again.scalar.grid, state.scalar.grid)
    assert not np.array_equal(other.swarm.positions, state.swarm.positions)


def test_base_seed_offsets_trials():
    shifted = init_trial(small_config(base_seed=10), 3)
    assert shifted.seed == 13


def test_release_off_the_filament():
    with pytest.raises(StartOffFilamentError):
        init_trial(small_config(spin_up_time=0.0), 0)


def test_control_without_source_can_start():
    control = init_trial(small_config(scalar={'source_amplitude': 0.0}), 0)
    assert control.scalar.grid.max() == 0.0


def test_run_trial_records():
    result = run_trial(init_trial(SMALL, 0))
    assert result.n_agents == 8
    assert len(result.arrival_times) == 8
    assert 0 <= result.n_success <= 8
    assert result.n_success == sum(t is not None for t in result.arrival_times)
    assert result.times[0] == 0.0
    assert np.allclose(np.diff(result.times), 0.1)
    assert all(0.0 <= p <= 1.0 for p in result.polarity_series if p is not None)
    assert all(d > 0 for d in result.nnd_series if d is not None)
    assert all(t <= SMALL.max_time + 1e-12 for t in result.arrival_times if t is not None)
    assert len(result.cluster_series) == len(result.area_series) == len(result.times)


def test_agent_at_source_arrives_after_first_step():
    trial = init_trial(SMALL, 0)
    trial.swarm.positions[0] = [0.5, 0.11]
    trial.swarm.headings[0] = [0.0, -1.0]
    seen = []
    result = run_trial(trial, on_record=lambda s: seen.append(s.swarm.n_active))
    assert result.arrival_times[0] == pytest.approx(SMALL.swarm.dt)
    assert not trial.swarm.active[0]
    assert seen[0] == 8


# --- Sweeps ---
def test_sweep_table_layout_and_determinism():
    plan = SweepPlan(n_agents=[4, 6])
    first, series = sweep(plan, SMALL, workers=1)
    second, _ = sweep(plan, SMALL, workers=1)
    assert list(first.columns) == SWEEP_COLUMNS
    assert list(first['n_agents']) == [4, 6]
    assert series is None
    pd.testing.assert_frame_equal(first, second)

    row = first.iloc[1]
    assert row['effective_area'] == pytest.approx(6 * math.pi * SMALL.swarm.repulsion_radius ** 2)
    assert row['status'] == 'ok' and row['n_failed'] == 0
    assert 0.0 <= row['p_success'] <= 1.0
    assert row['ci_low'] <= row['p_success'] <= row['ci_high']
    assert row['n_trials'] == 2 and row['base_seed'] == 0


def test_sweep_is_independent_of_worker_count():
    plan = SweepPlan(alpha=[12.5e-3, 0.5e-3])
    serial, _ = sweep(plan, SMALL, workers=1)
    pooled, _ = sweep(plan, SMALL, workers=2)
    pd.testing.assert_frame_equal(serial, pooled)


def test_invalid_cell_is_flagged_not_dropped():
    table, _ = sweep(SweepPlan(repulsion_radius=[2e-3, 0.2]), SMALL, workers=1)
    assert len(table) == 2
    assert list(table['status']) == ['ok', 'failed']
    assert table.iloc[1]['n_failed'] == 2
    assert math.isnan(table.iloc[1]['p_success'])


def test_failing_trials_are_flagged():
    table, _ = sweep(SweepPlan(), small_config(spin_up_time=0.0), workers=1)
    assert list(table['status']) == ['failed']


def test_verbose_sweep_returns_series():
    table, series = sweep(SweepPlan(), SMALL, workers=1, verbose=True)
    assert len(table) == 1
    assert set(series['trial_index']) == {0, 1}
    assert series['t'].min() == 0.0
