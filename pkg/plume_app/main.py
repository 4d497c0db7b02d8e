import argparse
import logging
import sys
from datetime import datetime, timezone
from typing import Dict, List, Optional

import pandas as pd

from . import __version__, config
from .errors import ConfigValidationError, SimulationError
from .experiment import develop_plume, flow_direction, init_trial, run_trial, sweep
from .exporters import (agent_rows, write_agents, write_agents_geojson, write_flow, write_scalar,
                        write_transects)
from .schemas import RunManifest, SimulationConfig
from .settings import emit_manifest, load_config
from .storage import OutputSession, get_session
from .transport import filament_transects, measure_filament_width, memory_timescale_for_width

logger = logging.getLogger(__name__)

PROG = 'plume-sim'


def _csv_list(text: str) -> List[str]:
    items = [item.strip() for item in text.split(',') if item.strip()]
    if not items:
        raise argparse.ArgumentTypeError('expected a comma separated list')
    return items


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='flat key-value configuration file')
    common.add_argument('--seed', type=int, help='base seed; all randomness flows from it')
    common.add_argument('--agents', type=_csv_list, help='group size, a list for sweep')
    common.add_argument('--alpha', type=_csv_list, help='memory timescale, a list for sweep')
    common.add_argument('--repulsion', type=_csv_list, help='repulsion radius, a list for sweep')
    common.add_argument('--trials', type=int, help='trials per sweep cell')
    common.add_argument('--out', default=config.SIM_OUTPUT_DIR, help='output directory')
    common.add_argument('--snapshots', action='store_true', default=None, help='dump fields and agent GeoJSON with each record')
    common.add_argument('--verbose', action='store_true', help='INFO logging and per-trial time series')
    common.add_argument('--format', choices=['csv', 'bin'], help='field snapshot format')

    parser = argparse.ArgumentParser(prog=PROG, description='Odor plume tracking by socially interacting swarms')
    sub = parser.add_subparsers(dest='command', required=True)
    sub.add_parser('run', parents=[common], help='one trial with agent snapshots')
    sub.add_parser('sweep', parents=[common], help='success statistics over a parameter grid')
    sub.add_parser('snapshot', parents=[common], help='write a developed plume and its flow')
    width = sub.add_parser('width', parents=[common], help='filament width and the matching memory timescale')
    width.add_argument('--transects', type=int, help='transects across the filament')
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, object]:
    values: Dict[str, object] = {}
    if args.seed is not None:
        values['base_seed'] = args.seed
    if args.trials is not None:
        values['n_trials'] = args.trials
    if args.format is not None:
        values['snapshot_format'] = args.format
    if args.snapshots:
        values['snapshots'] = True
    if args.verbose:
        values['write_series'] = True
    if getattr(args, 'transects', None) is not None:
        values['n_transects'] = args.transects
    for flag, key, sweep_key in (('agents', 'n_agents', 'sweep_agents'),
                                 ('alpha', 'memory_timescale', 'sweep_alpha'),
                                 ('repulsion', 'repulsion_radius', 'sweep_repulsion')):
        items = getattr(args, flag)
        if items is None:
            continue
        if args.command == 'sweep':
            values[sweep_key] = items
        elif len(items) != 1:
            raise ConfigValidationError(f"--{flag} takes a single value for {args.command}")
        else:
            values[key] = items[0]
    return values


def _manifest(cfg: SimulationConfig, argv: List[str], session: OutputSession) -> str:
    manifest = RunManifest(
        config=cfg,
        code_version=__version__,
        command=' '.join([PROG] + argv),
        base_seed=cfg.trial.base_seed,
        timestamp=datetime.now(timezone.utc).isoformat(),
        outputs=list(session.outputs),
    )
    return emit_manifest(manifest)


# --- Commands ---
def run_command(args: argparse.Namespace, cfg: SimulationConfig, session: OutputSession) -> None:
    out = cfg.output
    state = init_trial(cfg.trial, 0)
    rows: List[dict] = []
    n_records = 0

    def on_record(s):
        nonlocal n_records
        rows.extend(agent_rows(s))
        if out.snapshots:
            fmt = out.snapshot_format
            write_flow(session.path(f"fields/flow_{n_records:03d}.{fmt}"), s.flow, fmt)
            write_scalar(session.path(f"fields/scalar_{n_records:03d}.{fmt}"), s.scalar, fmt)
        n_records += 1

    result = run_trial(state, on_record=on_record)
    write_agents(session.path('agents.csv'), rows)
    if out.snapshots:
        write_agents_geojson(session.path('agents.geojson'), rows)
    pd.DataFrame({
        't': result.times,
        'polarity': result.polarity_series,
        'nnd': result.nnd_series,
        'clusters': result.cluster_series,
        'occupied_area': result.area_series,
    }).to_csv(session.path('series.csv'), index=False)
    pd.DataFrame({'id': range(result.n_agents), 'arrival_time': result.arrival_times}).to_csv(
        session.path('arrivals.csv'), index=False)
    print(f"{result.n_success} of {result.n_agents} agents reached the source")


def sweep_command(args: argparse.Namespace, cfg: SimulationConfig, session: OutputSession) -> None:
    table, series = sweep(cfg.sweep, cfg.trial, workers=config.SIM_THREADS, verbose=cfg.output.write_series)
    table.to_csv(session.path('sweep.csv'), index=False)
    if series is not None:
        series.to_csv(session.path('series.csv'), index=False)
    flagged = int((table['status'] != 'ok').sum())
    print(f"{len(table)} cells written, {flagged} flagged")


def snapshot_command(args: argparse.Namespace, cfg: SimulationConfig, session: OutputSession) -> None:
    out = cfg.output
    flow, scalar = develop_plume(cfg.trial, cfg.trial.base_seed)
    write_flow(session.path(f"flow.{out.snapshot_format}"), flow, out.snapshot_format)
    write_scalar(session.path(f"scalar.{out.snapshot_format}"), scalar, out.snapshot_format)


def width_command(args: argparse.Namespace, cfg: SimulationConfig, session: OutputSession) -> None:
    out = cfg.output
    _, scalar = develop_plume(cfg.trial, cfg.trial.base_seed)
    direction = tuple(flow_direction(cfg.trial))
    sigma = measure_filament_width(scalar, out.n_transects, direction)
    t_star = memory_timescale_for_width(sigma, cfg.trial.swarm.speed)
    write_transects(session.path('transects.csv'), filament_transects(scalar, out.n_transects, direction))
    pd.DataFrame([{'sigma': sigma, 'memory_timescale': t_star, 'n_transects': out.n_transects}]).to_csv(
        session.path('width.csv'), index=False)
    print(f"filament width {sigma!r}, memory timescale {t_star!r}")


COMMANDS = {
    'run': run_command,
    'sweep': sweep_command,
    'snapshot': snapshot_command,
    'width': width_command,
}


# --- Exception Handler ---
def handle_error(exc: SimulationError) -> int:
    print(f"{PROG}: error: {exc.detail}", file=sys.stderr)
    return exc.exit_code


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    logging.basicConfig(
        level=logging.INFO if args.verbose else config.SIM_LOG_LEVEL,
        format='%(asctime)s [%(levelname)s] %(name)s: %(message)s',
    )
    try:
        cfg = load_config(args.config, _overrides(args))
        with get_session(args.out) as session:
            COMMANDS[args.command](args, cfg, session)
            session.commit(_manifest(cfg, argv, session))
    except SimulationError as exc:
        return handle_error(exc)
    return 0
