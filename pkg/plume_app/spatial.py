"""Uniform-grid spatial hash over the periodic unit square; cells are at least R_A,max wide."""
import logging
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import QueryRadiusError
from .schemas import SwarmConfig

logger = logging.getLogger(__name__)


@dataclass
class NeighborIndex:
    cell_size: float
    n_cells: int
    positions: np.ndarray
    # Agents sorted by cell; members of cell c are members[cell_start[c]:cell_start[c + 1]].
    cell_start: np.ndarray
    members: np.ndarray
    # Cell of each agent, -1 for agents left out of the index.
    cell_of: np.ndarray


@njit(cache=True)
def cell_coord(x, n_cells):
    c = int(x * n_cells)
    if c >= n_cells:
        c = n_cells - 1
    if c < 0:
        c = 0
    return c


@njit(cache=True)
def _bin(positions, active, n_cells):
    n = positions.shape[0]
    cell_of = np.full(n, -1, dtype=np.int64)
    counts = np.zeros(n_cells * n_cells + 1, dtype=np.int64)
    for i in range(n):
        if active[i]:
            c = cell_coord(positions[i, 0], n_cells) * n_cells + cell_coord(positions[i, 1], n_cells)
            cell_of[i] = c
            counts[c + 1] += 1
    cell_start = np.cumsum(counts)
    fill = cell_start[:-1].copy()
    members = np.empty(cell_start[-1], dtype=np.int64)
    for i in range(n):
        c = cell_of[i]
        if c >= 0:
            members[fill[c]] = i
            fill[c] += 1
    return cell_of, cell_start, members


@njit(cache=True)
def neighbour_cell(c, offset, n_cells):
    # Fewer than three cells per axis: visit each cell once instead of wrapping onto duplicates.
    if n_cells >= 3:
        return (c + offset - 1) % n_cells
    return offset


@njit(cache=True)
def _query(positions, cell_start, members, n_cells, x, y, r, exclude):
    found = np.empty(members.shape[0], dtype=np.int64)
    n_found = 0
    span = 3 if n_cells >= 3 else n_cells
    cx = cell_coord(x, n_cells)
    cy = cell_coord(y, n_cells)
    for a in range(span):
        ix = neighbour_cell(cx, a, n_cells)
        for b in range(span):
            c = ix * n_cells + neighbour_cell(cy, b, n_cells)
            for k in range(cell_start[c], cell_start[c + 1]):
                j = members[k]
                if j == exclude:
                    continue
                dx = positions[j, 0] - x
                dy = positions[j, 1] - y
                dx -= np.floor(dx + 0.5)
                dy -= np.floor(dy + 0.5)
                if np.sqrt(dx * dx + dy * dy) <= r:
                    found[n_found] = j
                    n_found += 1
    return np.sort(found[:n_found])


def rebuild_index(positions: np.ndarray, cfg: SwarmConfig, active=None) -> NeighborIndex:
    positions = np.ascontiguousarray(positions, dtype=np.float64)
    if active is None:
        active = np.ones(positions.shape[0], dtype=bool)
    n_cells = max(1, int(np.floor(1.0 / cfg.r_attract_max)))
    cell_of, cell_start, members = _bin(positions, np.asarray(active, dtype=np.bool_), n_cells)
    return NeighborIndex(
        cell_size=cfg.r_attract_max,
        n_cells=n_cells,
        positions=positions,
        cell_start=cell_start,
        members=members,
        cell_of=cell_of,
    )


def query_radius(index: NeighborIndex, position, r: float, exclude: int = -1) -> np.ndarray:
    """Ids of indexed agents within periodic distance r of position, ascending."""
    if r > index.cell_size:
        raise QueryRadiusError(f"query radius {r!r} exceeds the index cell size {index.cell_size!r}")
    x, y = float(position[0]), float(position[1])
    return _query(index.positions, index.cell_start, index.members, index.n_cells, x, y, float(r), exclude)
