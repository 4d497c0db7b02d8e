"""Self-propelled agents with confidence-scaled repulsion, orientation and attraction zones."""
import logging
from typing import Optional, Tuple

import numpy as np
from numba import njit

from .flow import sample_velocity
from .geometry import wrap
from .models import FlowField, ScalarField, Swarm
from .schemas import SwarmConfig
from .spatial import NeighborIndex, cell_coord, neighbour_cell, rebuild_index
from .transport import sample_signal

logger = logging.getLogger(__name__)

# Below this the desired vector is treated as no preference.
DIRECTION_EPS = 1e-12


def update_confidence(memory_max: np.ndarray, c_now: np.ndarray, cfg: SwarmConfig) -> Tuple[np.ndarray, np.ndarray]:
    """
    Decaying running maximum of the sensed signal and the confidence c_now / maximum.

    The current sample is part of the maximum, so confidence stays within [0, 1]. A zero
    memory timescale keeps no history at all.
    """
    c_now = np.asarray(c_now, dtype=np.float64)
    decay = np.exp(-cfg.dt / cfg.memory_timescale) if cfg.memory_timescale > 0 else 0.0
    memory = np.maximum(c_now, np.asarray(memory_max, dtype=np.float64) * decay)
    confidence = np.zeros_like(memory)
    np.divide(c_now, memory, out=confidence, where=memory > cfg.concentration_floor)
    return memory, confidence


def zone_radii(confidence, cfg: SwarmConfig) -> Tuple[np.ndarray, np.ndarray]:
    c = np.asarray(confidence, dtype=np.float64)
    if cfg.zone_response == 'linear':
        return (1.0 - c) * cfg.r_attract_max, 4.0 * c * (1.0 - c) * cfg.r_orient_max
    # sin(pi c) evaluated on the nearer half so that c = 1 gives exactly zero.
    return (1.0 - c) ** 2 * cfg.r_attract_max, np.sin(np.pi * np.minimum(c, 1.0 - c)) ** 2 * cfg.r_orient_max


@njit(cache=True)
def _desired(positions, headings, targets, r_att, r_ori, r_rep, cell_start, members, n_cells, out, keep):
    span = 3 if n_cells >= 3 else n_cells
    for t in range(targets.shape[0]):
        i = targets[t]
        x = positions[i, 0]
        y = positions[i, 1]
        rep_x = 0.0
        rep_y = 0.0
        soc_x = 0.0
        soc_y = 0.0
        n_rep = 0
        n_soc = 0
        cx = cell_coord(x, n_cells)
        cy = cell_coord(y, n_cells)
        for a in range(span):
            ix = neighbour_cell(cx, a, n_cells)
            for b in range(span):
                c = ix * n_cells + neighbour_cell(cy, b, n_cells)
                for k in range(cell_start[c], cell_start[c + 1]):
                    j = members[k]
                    if j == i:
                        continue
                    dx = positions[j, 0] - x
                    dy = positions[j, 1] - y
                    dx -= np.floor(dx + 0.5)
                    dy -= np.floor(dy + 0.5)
                    d = np.sqrt(dx * dx + dy * dy)
                    if d == 0.0:
                        continue
                    if d <= r_rep:
                        rep_x += dx / d
                        rep_y += dy / d
                        n_rep += 1
                    if d <= r_att[i]:
                        soc_x += dx / d
                        soc_y += dy / d
                        n_soc += 1
                    if d <= r_ori[i]:
                        soc_x += headings[j, 0]
                        soc_y += headings[j, 1]
                        n_soc += 1
        if n_rep > 0:
            dir_x = -rep_x
            dir_y = -rep_y
        elif n_soc > 0:
            dir_x = soc_x
            dir_y = soc_y
        else:
            keep[t] = True
            continue
        norm = np.sqrt(dir_x * dir_x + dir_y * dir_y)
        if norm < DIRECTION_EPS:
            keep[t] = True
            continue
        out[t, 0] = dir_x / norm
        out[t, 1] = dir_y / norm
        keep[t] = False


def _desired_directions(swarm: Swarm, index: NeighborIndex, radii, targets: np.ndarray):
    n = swarm.size
    r_att = np.zeros(n)
    r_ori = np.zeros(n)
    r_att[targets], r_ori[targets] = radii
    out = np.zeros((targets.shape[0], 2))
    keep = np.ones(targets.shape[0], dtype=np.bool_)
    _desired(index.positions, np.ascontiguousarray(swarm.headings), targets, r_att, r_ori,
             swarm.cfg.repulsion_radius, index.cell_start, index.members, index.n_cells, out, keep)
    return out, keep


def desired_direction(swarm: Swarm, index: NeighborIndex, agent_id: int, radii) -> Optional[np.ndarray]:
    """Unit desired direction of one agent, or None to keep its current heading."""
    r_attract, r_orient = radii
    targets = np.array([agent_id], dtype=np.int64)
    out, keep = _desired_directions(swarm, index, (np.array([r_attract]), np.array([r_orient])), targets)
    return None if keep[0] else out[0]


def steer(headings: np.ndarray, desired: np.ndarray, cfg: SwarmConfig) -> np.ndarray:
    """Rotate headings towards desired at turn_gain per radian of error, capped at turn_cap, never overshooting."""
    headings = np.atleast_2d(np.asarray(headings, dtype=np.float64))
    desired = np.atleast_2d(np.asarray(desired, dtype=np.float64))
    cross = headings[:, 0] * desired[:, 1] - headings[:, 1] * desired[:, 0]
    dot = np.sum(headings * desired, axis=1)
    dtheta = np.arctan2(cross, dot)
    dtheta = np.where(dtheta == -np.pi, np.pi, dtheta)

    rate = np.clip(cfg.turn_gain * dtheta, -cfg.turn_cap, cfg.turn_cap)
    turn = np.clip(rate * cfg.dt, -np.abs(dtheta), np.abs(dtheta))
    c, s = np.cos(turn), np.sin(turn)
    rotated = np.column_stack([c * headings[:, 0] - s * headings[:, 1],
                               s * headings[:, 0] + c * headings[:, 1]])
    return rotated / np.linalg.norm(rotated, axis=1, keepdims=True)


def step_swarm(swarm: Swarm, flow: FlowField, scalar: ScalarField) -> Swarm:
    cfg = swarm.cfg
    act = np.flatnonzero(swarm.active)
    if act.size == 0:
        return swarm
    positions = swarm.positions[act]

    c_now = sample_signal(scalar, positions)
    swarm.memory_max[act], swarm.confidence[act] = update_confidence(swarm.memory_max[act], c_now, cfg)
    radii = zone_radii(swarm.confidence[act], cfg)

    index = rebuild_index(swarm.positions, cfg, swarm.active)
    desired, keep = _desired_directions(swarm, index, radii, act)
    turning = ~keep
    if turning.any():
        ids = act[turning]
        swarm.headings[ids] = steer(swarm.headings[ids], desired[turning], cfg)

    propulsion = cfg.speed * swarm.headings[act]
    midpoint = wrap(positions + (sample_velocity(flow, positions) + propulsion) * (cfg.dt / 2))
    swarm.positions[act] = wrap(positions + (sample_velocity(flow, midpoint) + propulsion) * cfg.dt)
    return swarm
