"""Trial lifecycle and parameter sweeps over a process pool."""
import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import ValidationError

from .config import resolve_workers
from .errors import SimulationError, StartOffFilamentError
from .flow import build_flow, step_flow
from .geometry import periodic_distance, unit, wrap
from .metrics import cluster_count, effective_area, mean_nnd, occupied_area, polarity, standard_error, wilson_interval
from .models import FlowField, ScalarField, Swarm
from .schemas import SweepPlan, TrialConfig, TrialOutcome, TrialResult
from .swarm import step_swarm
from .transport import init_scalar, sample_signal, step_scalar

logger = logging.getLogger(__name__)

SWEEP_AXES = ('n_agents', 'repulsion_radius', 'alpha', 'correlation_time', 'decay_rate')

SWEEP_COLUMNS = [
    'n_agents', 'repulsion_radius', 'alpha', 'effective_area', 'p_success', 'se_p',
    'frac_arrived_given_success', 'mean_polarity', 'mean_nnd', 'n_trials', 'base_seed',
    'p_trial_success', 'ci_low', 'ci_high', 'mean_clusters', 'correlation_time', 'decay_rate',
    'n_failed', 'status',
]

SERIES_COLUMNS = [
    'n_agents', 'repulsion_radius', 'alpha', 'correlation_time', 'decay_rate',
    'trial_index', 'seed', 't', 'n_active', 'polarity', 'nnd', 'clusters', 'occupied_area',
]


@dataclass
class TrialState:
    cfg: TrialConfig
    trial_index: int
    seed: int
    flow: FlowField
    scalar: ScalarField
    swarm: Swarm
    # Time since release.
    t: float = 0.0


def flow_direction(cfg: TrialConfig) -> np.ndarray:
    if cfg.flow.mean_speed == 0:
        return np.array([0.0, 1.0])
    return unit(cfg.flow.mean_flow)


def release_point(cfg: TrialConfig) -> np.ndarray:
    return wrap(np.asarray(cfg.scalar.source, dtype=np.float64) + cfg.start_distance * flow_direction(cfg))


def develop_plume(cfg: TrialConfig, seed: int) -> Tuple[FlowField, ScalarField]:
    """Build the flow for `seed` and run scalar and flow together for spin_up_time with no agents."""
    dt = cfg.swarm.dt
    flow = build_flow(cfg.flow, seed)
    scalar = init_scalar(cfg.scalar)
    n_steps = int(round(cfg.spin_up_time / dt))
    report_every = max(1, n_steps // 10)
    for step in range(1, n_steps + 1):
        step_scalar(scalar, flow, dt)
        step_flow(flow, dt)
        if step % report_every == 0:
            logger.debug("Spin-up seed %d: %d/%d steps", seed, step, n_steps)
    return flow, scalar


def init_trial(cfg: TrialConfig, trial_index: int) -> TrialState:
    seed = cfg.base_seed + trial_index
    flow, scalar = develop_plume(cfg, seed)

    centre = release_point(cfg)
    # With the source switched off there is no filament to start on.
    if cfg.scalar.source_amplitude > 0:
        signal = sample_signal(scalar, centre)
        if signal < cfg.swarm.concentration_floor:
            raise StartOffFilamentError(
                f"trial {trial_index}: signal {signal!r} at the release point {tuple(centre)} "
                f"is below concentration_floor {cfg.swarm.concentration_floor!r}")

    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    n = cfg.swarm.n_agents
    radius = cfg.swarm.r_attract_max * np.sqrt(rng.random(n))
    phi = 2 * np.pi * rng.random(n)
    positions = wrap(centre + np.column_stack([radius * np.cos(phi), radius * np.sin(phi)]))

    upstream = -flow_direction(cfg)
    theta = np.arctan2(upstream[1], upstream[0]) + rng.uniform(-np.pi / 2, np.pi / 2, n)
    headings = np.column_stack([np.cos(theta), np.sin(theta)])

    swarm = Swarm.create(cfg.swarm, positions, headings)
    return TrialState(cfg=cfg, trial_index=trial_index, seed=seed, flow=flow, scalar=scalar, swarm=swarm)


def _check_arrivals(state: TrialState) -> None:
    swarm = state.swarm
    act = np.flatnonzero(swarm.active)
    if act.size == 0:
        return
    distance = periodic_distance(swarm.positions[act], np.asarray(state.cfg.scalar.source))
    arrived = act[distance <= state.cfg.success_radius]
    swarm.active[arrived] = False
    swarm.arrival_time[arrived] = state.t


def _record(state: TrialState, series: Dict[str, list]) -> None:
    swarm = state.swarm
    act = swarm.active
    n_active = int(act.sum())
    series['times'].append(state.t)
    series['polarity_series'].append(polarity(swarm.headings[act]) if n_active >= 1 else None)
    series['nnd_series'].append(mean_nnd(swarm.positions[act]) if n_active >= 2 else None)
    series['cluster_series'].append(cluster_count(swarm.positions[act], swarm.cfg.r_attract_max))
    series['area_series'].append(occupied_area(swarm.positions[act], swarm.cfg.repulsion_radius))


def run_trial(state: TrialState, on_record: Optional[Callable[[TrialState], None]] = None) -> TrialResult:
    """
    Step the trial to max_time, recording group metrics every record_interval from release.

    Agents are checked for arrival after every move and leave the active set on arrival.
    `on_record` is called with the state at every recording instant.
    """
    cfg = state.cfg
    dt = cfg.swarm.dt
    n_steps = int(round(cfg.max_time / dt))
    record_every = max(1, int(round(cfg.record_interval / dt)))
    series = {'times': [], 'polarity_series': [], 'nnd_series': [], 'cluster_series': [], 'area_series': []}

    def record():
        _record(state, series)
        if on_record is not None:
            on_record(state)

    record()
    for step in range(1, n_steps + 1):
        step_swarm(state.swarm, state.flow, state.scalar)
        step_scalar(state.scalar, state.flow, dt)
        step_flow(state.flow, dt)
        state.t = step * dt
        _check_arrivals(state)
        if step % record_every == 0:
            record()
        if state.swarm.n_active == 0:
            break

    swarm = state.swarm
    arrival_times = [swarm.arrival(i) for i in range(swarm.size)]
    n_success = sum(t is not None for t in arrival_times)
    logger.info("Trial %d (seed %d): %d of %d agents reached the source",
                state.trial_index, state.seed, n_success, swarm.size)
    return TrialResult(
        trial_index=state.trial_index,
        seed=state.seed,
        n_agents=swarm.size,
        n_success=n_success,
        arrival_times=arrival_times,
        **series,
    )


# --- Sweeps ---
def run_one(cfg: TrialConfig, cell_index: int, trial_index: int) -> TrialOutcome:
    """Worker entry point: one trial, failures reported as data."""
    try:
        result = run_trial(init_trial(cfg, trial_index))
    except SimulationError as e:
        return TrialOutcome(cell_index=cell_index, trial_index=trial_index, error=e.detail)
    return TrialOutcome(cell_index=cell_index, trial_index=trial_index, result=result)


def sweep_cells(plan: SweepPlan, cfg: TrialConfig) -> List[Dict[str, float]]:
    defaults = {
        'n_agents': [cfg.swarm.n_agents],
        'repulsion_radius': [cfg.swarm.repulsion_radius],
        'alpha': [cfg.swarm.memory_timescale],
        'correlation_time': [cfg.flow.correlation_time],
        'decay_rate': [cfg.scalar.decay_rate],
    }
    axes = [getattr(plan, name) or defaults[name] for name in SWEEP_AXES]
    return [dict(zip(SWEEP_AXES, values)) for values in itertools.product(*axes)]


def cell_config(cfg: TrialConfig, cell: Dict[str, float]) -> TrialConfig:
    data = cfg.model_dump()
    data['swarm'].update(n_agents=cell['n_agents'], repulsion_radius=cell['repulsion_radius'],
                         memory_timescale=cell['alpha'])
    data['flow']['correlation_time'] = cell['correlation_time']
    data['scalar']['decay_rate'] = cell['decay_rate']
    return TrialConfig.model_validate(data)


def _mean(values) -> float:
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else math.nan


def _reduce_cell(cell: Dict[str, float], cfg: TrialConfig, results: List[TrialResult]) -> dict:
    n_ok = len(results)
    n_failed = cfg.n_trials - n_ok
    successes = sum(r.n_success for r in results)
    n = cell['n_agents'] * n_ok
    p = successes / n if n else math.nan
    ci_low, ci_high = wilson_interval(successes, n)
    row = dict(cell)
    row.update(
        effective_area=effective_area(cell['n_agents'], cell['repulsion_radius']),
        p_success=p,
        se_p=standard_error(p, n),
        frac_arrived_given_success=_mean(r.fraction_arrived_given_success for r in results),
        mean_polarity=_mean(v for r in results for v in r.polarity_series),
        mean_nnd=_mean(v for r in results for v in r.nnd_series),
        n_trials=cfg.n_trials,
        base_seed=cfg.base_seed,
        p_trial_success=sum(r.n_success > 0 for r in results) / n_ok if n_ok else math.nan,
        ci_low=ci_low,
        ci_high=ci_high,
        mean_clusters=_mean(v for r in results for v in r.cluster_series),
        n_failed=n_failed,
        status='ok' if n_failed == 0 else ('failed' if n_ok == 0 else 'partial'),
    )
    return row


def _series_rows(cell: Dict[str, float], result: TrialResult) -> List[dict]:
    rows = []
    for k, t in enumerate(result.times):
        arrived = sum(a is not None and a <= t for a in result.arrival_times)
        rows.append(dict(cell, trial_index=result.trial_index, seed=result.seed, t=t,
                         n_active=result.n_agents - arrived,
                         polarity=result.polarity_series[k], nnd=result.nnd_series[k],
                         clusters=result.cluster_series[k], occupied_area=result.area_series[k]))
    return rows


def sweep(plan: SweepPlan, cfg: TrialConfig, workers: Optional[int] = None,
          verbose: bool = False) -> Tuple[pd.DataFrame, Optional[pd.DataFrame]]:
    """
    Run every cell of the plan and return the aggregate table, plus per-trial time series when verbose.

    Rows follow the plan's axis order (n_agents, repulsion_radius, alpha, correlation_time,
    decay_rate). Cells whose configuration is invalid or whose trials fail stay in the table,
    flagged through n_failed and status.
    """
    workers = resolve_workers() if workers is None else resolve_workers(workers)
    cells = sweep_cells(plan, cfg)

    configs: List[Optional[TrialConfig]] = []
    for cell in cells:
        try:
            configs.append(cell_config(cfg, cell))
        except ValidationError as e:
            logger.warning("Sweep cell %s is invalid: %s", cell, e.errors()[0]['msg'])
            configs.append(None)

    tasks = [(ci, ti) for ci, cell_cfg in enumerate(configs) if cell_cfg is not None for ti in range(cfg.n_trials)]
    outcomes: Dict[Tuple[int, int], TrialOutcome] = {}
    if workers == 1:
        for ci, ti in tasks:
            outcomes[(ci, ti)] = run_one(configs[ci], ci, ti)
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            fut_to_key = {executor.submit(run_one, configs[ci], ci, ti): (ci, ti) for ci, ti in tasks}
            for fut in as_completed(fut_to_key):
                outcomes[fut_to_key[fut]] = fut.result()

    rows, series = [], []
    for ci, cell in enumerate(cells):
        results = []
        for ti in range(cfg.n_trials):
            outcome = outcomes.get((ci, ti))
            if outcome is None:
                continue
            if outcome.error is not None:
                logger.warning("Sweep cell %d trial %d failed: %s", ci, ti, outcome.error)
                continue
            results.append(outcome.result)
            if verbose:
                series.extend(_series_rows(cell, outcome.result))
        rows.append(_reduce_cell(cell, cfg, results))
        logger.info("Sweep cell %d/%d done: %s", ci + 1, len(cells), cell)

    table = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
    series_table = pd.DataFrame(series, columns=SERIES_COLUMNS) if verbose else None
    return table, series_table
