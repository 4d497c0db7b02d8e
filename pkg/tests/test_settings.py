import pytest

from plume_app.errors import ConfigParseError, ConfigValidationError, SimulationError
from plume_app.schemas import RunManifest, SimulationConfig
from plume_app.settings import emit_config, emit_manifest, load_config, read_manifest


def write(tmp_path, text, name='sim.cfg'):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_empty_file_gives_defaults(tmp_path):
    cfg = load_config(write(tmp_path, ''))
    assert cfg == SimulationConfig()
    trial = cfg.trial
    assert trial.swarm.speed == 1.6
    assert trial.swarm.turn_cap == 140
    assert trial.swarm.dt == 0.00025
    assert trial.swarm.r_orient_max == 0.075
    assert trial.swarm.r_attract_max == 0.125
    assert trial.scalar.grid_size == 512
    assert trial.flow.rms_velocity == 0.25
    assert trial.flow.mean_flow == (0.0, 0.6)
    assert trial.flow.peak_lengthscale == 0.31


def test_values_and_comments(tmp_path):
    text = """
    # reduced run
    n_agents = 20   # group size
    mean_flow_y = 0.5
    zone_response = linear
    sweep_alpha = 25e-3, 12.5e-3,2.5e-3
    """
    cfg = load_config(write(tmp_path, text))
    assert cfg.trial.swarm.n_agents == 20
    assert cfg.trial.flow.mean_flow == (0.0, 0.5)
    assert cfg.trial.swarm.zone_response == 'linear'
    assert cfg.sweep.alpha == [25e-3, 12.5e-3, 2.5e-3]


def test_negative_speed_is_rejected(tmp_path):
    with pytest.raises(ConfigValidationError) as exc:
        load_config(write(tmp_path, 'speed = -1\n'))
    assert 'speed' in exc.value.detail


def test_zone_ordering_is_enforced(tmp_path):
    with pytest.raises(ConfigValidationError) as exc:
        load_config(write(tmp_path, 'repulsion_radius = 0.2\n'))
    assert 'zone ordering' in exc.value.detail
    assert exc.value.exit_code == 2


def test_upstream_feasibility_is_enforced(tmp_path):
    with pytest.raises(ConfigValidationError) as exc:
        load_config(write(tmp_path, 'mean_flow_y = 1.7\n'))
    assert 'speed must exceed' in exc.value.detail


def test_parse_error_reports_line(tmp_path):
    with pytest.raises(ConfigParseError) as exc:
        load_config(write(tmp_path, 'n_agents = 10\n\nthis line is wrong\n'))
    assert exc.value.line_no == 3
    assert 'line 3' in exc.value.detail


def test_duplicate_and_unknown_keys(tmp_path):
    with pytest.raises(ConfigParseError) as exc:
        load_config(write(tmp_path, 'n_agents = 10\nn_agents = 20\n'))
    assert exc.value.line_no == 2
    with pytest.raises(ConfigParseError) as exc:
        load_config(write(tmp_path, 'n_agent = 10\n'))
    assert 'unknown key' in exc.value.detail


def test_overrides_win_over_file(tmp_path):
    cfg = load_config(write(tmp_path, 'n_agents = 10\nbase_seed = 3\n'), {'n_agents': '40', 'sweep_agents': ['1', '2']})
    assert cfg.trial.swarm.n_agents == 40
    assert cfg.trial.base_seed == 3
    assert cfg.sweep.n_agents == [1, 2]


def test_missing_file():
    with pytest.raises(SimulationError) as exc:
        load_config('/nonexistent/sim.cfg')
    assert exc.value.exit_code == 2


def test_emitted_config_round_trips(tmp_path):
    cfg = load_config(overrides={'memory_timescale': '0.5e-3', 'dt': '0.0001', 'source_x': '0.3',
                                 'sweep_repulsion': ['1e-3', '2e-3', '3e-3'], 'snapshots': True,
                                 'snapshot_format': 'bin', 'n_transects': '4'})
    assert cfg.output.snapshots and cfg.output.n_transects == 4
    assert load_config(write(tmp_path, emit_config(cfg))) == cfg


def test_manifest_round_trip(tmp_path):
    cfg = load_config(overrides={'base_seed': '7', 'n_agents': '60'})
    manifest = RunManifest(config=cfg, code_version='0.1.0', command='plume-sim run --seed 7',
                           base_seed=7, timestamp='2024-01-01T00:00:00+00:00', outputs=['agents.csv'])
    path = write(tmp_path, emit_manifest(manifest), 'manifest.cfg')
    assert load_config(path) == cfg
    assert read_manifest(path) == manifest
    assert '# effective_area = n_agents * pi * repulsion_radius**2' in path.read_text()


def test_output_keys(tmp_path):
    cfg = load_config(write(tmp_path, 'snapshots = true\nwrite_series = false\nsnapshot_format = bin\n'))
    assert cfg.output.snapshots is True
    assert cfg.output.write_series is False
    assert cfg.output.snapshot_format == 'bin'
    assert 'snapshots = true' in emit_config(cfg)
    with pytest.raises(ConfigValidationError) as exc:
        load_config(write(tmp_path, 'snapshot_format = png\n', 'bad.cfg'))
    assert 'snapshot_format' in exc.value.detail
