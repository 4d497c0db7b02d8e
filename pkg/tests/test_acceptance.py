import pytest

from plume_app.experiment import develop_plume, flow_direction, sweep
from plume_app.schemas import ScalarConfig, SweepPlan, TrialConfig
from plume_app.transport import measure_filament_width, memory_timescale_for_width

pytestmark = pytest.mark.slow

# Default trial on a 256 grid, 100 trials per cell
ENSEMBLE = TrialConfig(scalar=ScalarConfig(grid_size=256), n_trials=100)


def with_scalar(cfg, **changes):
    data = cfg.model_dump()
    data['scalar'].update(changes)
    return TrialConfig.model_validate(data)


def test_group_beats_lone_agent_and_blind_control():
    table, _ = sweep(SweepPlan(n_agents=[1, 60]), ENSEMBLE)
    blind, _ = sweep(SweepPlan(), with_scalar(ENSEMBLE, source_amplitude=0.0))
    alone, group, control = table.iloc[0], table.iloc[1], blind.iloc[0]

    assert group['p_success'] >= 5 * alone['p_success']
    assert group['p_success'] >= 5 * control['p_success']
    assert group['ci_low'] > alone['ci_high']
    assert group['ci_low'] > control['ci_high']


def test_success_peaks_at_intermediate_effective_area():
    table, _ = sweep(SweepPlan(repulsion_radius=[1e-3, 2e-3, 3e-3, 4e-3, 5e-3]), ENSEMBLE)
    table = table.sort_values('effective_area', ignore_index=True)
    interior = table.iloc[1:-1]
    best = interior.loc[interior['p_success'].idxmax()]
    for end in (table.iloc[0], table.iloc[-1]):
        assert best['p_success'] - best['se_p'] > end['p_success'] + end['se_p']


def test_short_memory_lowers_success_and_polarity():
    table, _ = sweep(SweepPlan(alpha=[12.5e-3, 0.5e-3]), ENSEMBLE)
    long_memory, short_memory = table.iloc[0], table.iloc[1]
    assert long_memory['p_success'] > short_memory['p_success']
    assert short_memory['mean_polarity'] < long_memory['mean_polarity']


def test_filament_width_matches_memory_timescale():
    cfg = TrialConfig()
    _, scalar = develop_plume(cfg, cfg.base_seed)
    sigma = measure_filament_width(scalar, 10, tuple(flow_direction(cfg)))
    t_star = memory_timescale_for_width(sigma, cfg.swarm.speed)
    assert 0.0125 / 2 <= t_star <= 0.0125 * 2
