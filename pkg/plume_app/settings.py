"""Flat key-value configuration files and the run manifest."""
import logging
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple, Union

from pydantic import ValidationError

from .errors import ConfigParseError, ConfigValidationError, SimulationError
from .schemas import RunManifest, SimulationConfig

logger = logging.getLogger(__name__)

# Flat key -> location in SimulationConfig; a trailing integer indexes into a tuple field.
KEYS: Dict[str, Tuple] = {
    # trial
    'spin_up_time': ('trial', 'spin_up_time'),
    'max_time': ('trial', 'max_time'),
    'success_radius': ('trial', 'success_radius'),
    'start_distance': ('trial', 'start_distance'),
    'n_trials': ('trial', 'n_trials'),
    'base_seed': ('trial', 'base_seed'),
    'record_interval': ('trial', 'record_interval'),
    # swarm
    'n_agents': ('trial', 'swarm', 'n_agents'),
    'speed': ('trial', 'swarm', 'speed'),
    'turn_cap': ('trial', 'swarm', 'turn_cap'),
    'turn_gain': ('trial', 'swarm', 'turn_gain'),
    'repulsion_radius': ('trial', 'swarm', 'repulsion_radius'),
    'r_orient_max': ('trial', 'swarm', 'r_orient_max'),
    'r_attract_max': ('trial', 'swarm', 'r_attract_max'),
    'memory_timescale': ('trial', 'swarm', 'memory_timescale'),
    'dt': ('trial', 'swarm', 'dt'),
    'concentration_floor': ('trial', 'swarm', 'concentration_floor'),
    'zone_response': ('trial', 'swarm', 'zone_response'),
    # flow
    'peak_lengthscale': ('trial', 'flow', 'peak_lengthscale'),
    'rms_velocity': ('trial', 'flow', 'rms_velocity'),
    'mean_flow_x': ('trial', 'flow', 'mean_flow', 0),
    'mean_flow_y': ('trial', 'flow', 'mean_flow', 1),
    'correlation_time': ('trial', 'flow', 'correlation_time'),
    'modes': ('trial', 'flow', 'modes'),
    # scalar
    'grid_size': ('trial', 'scalar', 'grid_size'),
    'source_x': ('trial', 'scalar', 'source', 0),
    'source_y': ('trial', 'scalar', 'source', 1),
    'source_amplitude': ('trial', 'scalar', 'source_amplitude'),
    'decay_rate': ('trial', 'scalar', 'decay_rate'),
    'source_width': ('trial', 'scalar', 'source_width'),
    # sweep axes
    'sweep_agents': ('sweep', 'n_agents'),
    'sweep_repulsion': ('sweep', 'repulsion_radius'),
    'sweep_alpha': ('sweep', 'alpha'),
    'sweep_correlation_time': ('sweep', 'correlation_time'),
    'sweep_decay_rate': ('sweep', 'decay_rate'),
    # outputs
    'n_transects': ('output', 'n_transects'),
    'snapshot_format': ('output', 'snapshot_format'),
    'snapshots': ('output', 'snapshots'),
    'write_series': ('output', 'write_series'),
}

EFFECTIVE_AREA_CONVENTION = 'n_agents * pi * repulsion_radius**2'


def parse_flat(text: str) -> Dict[str, Tuple[str, int]]:
    """Split a flat document into {key: (raw value, line number)}; metadata comments are skipped."""
    entries: Dict[str, Tuple[str, int]] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigParseError(f"expected 'name = value', got {raw.strip()!r}", line_no)
        key, value = (part.strip() for part in line.split('=', 1))
        if not key:
            raise ConfigParseError("missing key before '='", line_no)
        if key in entries:
            raise ConfigParseError(f"duplicate key {key!r} (first set on line {entries[key][1]})", line_no)
        if key not in KEYS:
            raise ConfigParseError(f"unknown key {key!r}", line_no)
        entries[key] = (value, line_no)
    return entries


def _parse_value(key: str, value: str):
    if KEYS[key][0] == 'sweep':
        return [item.strip() for item in value.split(',') if item.strip()]
    return value


def _key_for(loc: Tuple) -> Optional[str]:
    # Longest flat path that prefixes the error location.
    best = None
    for key, path in KEYS.items():
        if tuple(loc[:len(path)]) == path and (best is None or len(path) > len(KEYS[best])):
            best = key
    return best


def _validation_message(error: ValidationError) -> str:
    first = error.errors()[0]
    loc = tuple(first['loc'])
    msg = first['msg'].removeprefix('Value error, ')
    key = _key_for(loc)
    if key is not None:
        return f"{key}: {msg}"
    section = '.'.join(str(p) for p in loc) or 'config'
    return f"{section}: {msg}"


def resolve_config(values: Mapping[str, object]) -> SimulationConfig:
    """Defaults overlaid with flat `values`, validated; unknown keys are rejected."""
    data = SimulationConfig().model_dump()
    for key, value in values.items():
        if key not in KEYS:
            raise ConfigValidationError(f"unknown key {key!r}")
        *parents, leaf = KEYS[key]
        node = data
        for part in parents:
            if isinstance(node[part], tuple):
                node[part] = list(node[part])
            node = node[part]
        node[leaf] = value
    try:
        return SimulationConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigValidationError(_validation_message(e))


def load_config(path: Optional[Union[str, Path]] = None,
                overrides: Optional[Mapping[str, object]] = None) -> SimulationConfig:
    values: Dict[str, object] = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise SimulationError(f"cannot read config {str(path)!r}: {e.strerror}", exit_code=2)
        values = {key: _parse_value(key, raw) for key, (raw, _) in parse_flat(text).items()}
    values.update(overrides or {})
    config = resolve_config(values)
    logger.debug("Resolved configuration from %s with %d overrides", path or 'defaults', len(overrides or {}))
    return config


def _format(value) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, (list, tuple)):
        return ','.join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_config(config: SimulationConfig) -> str:
    data = config.model_dump()
    lines = []
    for key, path in KEYS.items():
        value = data
        for part in path:
            value = value[part]
        lines.append(f"{key} = {_format(value)}")
    return '\n'.join(lines) + '\n'


def emit_manifest(manifest: RunManifest) -> str:
    meta = [
        ('code_version', manifest.code_version),
        ('command', manifest.command),
        ('base_seed', str(manifest.base_seed)),
        ('timestamp', manifest.timestamp),
        ('outputs', ','.join(manifest.outputs)),
        ('effective_area', EFFECTIVE_AREA_CONVENTION),
    ]
    meta += [('note', note) for note in manifest.notes]
    header = ''.join(f"# {key} = {value}\n" for key, value in meta)
    return header + emit_config(manifest.config)


def read_manifest(path: Union[str, Path]) -> RunManifest:
    text = Path(path).read_text()
    meta: Dict[str, str] = {}
    notes = []
    for line in text.splitlines():
        if line.startswith('# ') and ' = ' in line:
            key, value = line[2:].split(' = ', 1)
            if key == 'note':
                notes.append(value)
            else:
                meta[key] = value
    return RunManifest(
        config=load_config(path),
        code_version=meta.get('code_version', ''),
        command=meta.get('command', ''),
        base_seed=int(meta.get('base_seed', 0)),
        timestamp=meta.get('timestamp', ''),
        outputs=[o for o in meta.get('outputs', '').split(',') if o],
        notes=notes,
    )
