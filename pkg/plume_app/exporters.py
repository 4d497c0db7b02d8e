"""File writers for field snapshots, transects and agent snapshots; binary grids carry a 16-byte header."""
import json
import struct
from pathlib import Path
from typing import Iterable, List, Tuple, Union

import numpy as np
import pandas as pd
from shapely.geometry import Point, mapping

from .experiment import TrialState
from .models import FlowField, ScalarField

FLOW_MAGIC = b'KFLO'
SCALAR_MAGIC = b'CFLD'
HEADER = struct.Struct('<4sIII')

AGENT_COLUMNS = ['t', 'id', 'x', 'y', 'px', 'py', 'C_i']


def tuple_to_list(obj):
    if isinstance(obj, tuple):
        return [tuple_to_list(i) for i in obj]
    if isinstance(obj, list):
        return [tuple_to_list(i) for i in obj]
    if isinstance(obj, dict):
        return {k: tuple_to_list(v) for k, v in obj.items()}
    return obj


# --- Grids ---
def write_grid_bin(path: Union[str, Path], magic: bytes, grids: np.ndarray) -> None:
    grids = np.asarray(grids, dtype='<f8')
    if grids.ndim == 2:
        grids = grids[None]
    components, width, height = grids.shape
    with open(path, 'wb') as f:
        f.write(HEADER.pack(magic, width, height, components))
        f.write(np.ascontiguousarray(grids).tobytes())


def read_grid_bin(path: Union[str, Path]) -> Tuple[bytes, np.ndarray]:
    raw = Path(path).read_bytes()
    magic, width, height, components = HEADER.unpack_from(raw)
    data = np.frombuffer(raw, dtype='<f8', offset=HEADER.size)
    return magic, data.reshape(components, width, height)


def _node_coords(n: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes = np.arange(n) / n
    x, y = np.meshgrid(nodes, nodes, indexing='ij')
    return x.ravel(), y.ravel()


def write_flow(path: Union[str, Path], field: FlowField, fmt: str = 'csv') -> None:
    """Total velocity (mean plus fluctuation) on the spectral grid."""
    velocity = field.velocity + field.mean_flow[:, None, None]
    if fmt == 'bin':
        write_grid_bin(path, FLOW_MAGIC, velocity)
        return
    x, y = _node_coords(field.modes)
    pd.DataFrame({'x': x, 'y': y, 'u': velocity[0].ravel(), 'v': velocity[1].ravel()}).to_csv(path, index=False)


def write_scalar(path: Union[str, Path], field: ScalarField, fmt: str = 'csv') -> None:
    concentration = field.concentration
    if fmt == 'bin':
        write_grid_bin(path, SCALAR_MAGIC, concentration)
        return
    x, y = _node_coords(field.n)
    pd.DataFrame({'x': x, 'y': y, 'C': concentration.ravel()}).to_csv(path, index=False)


def write_transects(path: Union[str, Path], transects: List[Tuple[float, np.ndarray, np.ndarray]]) -> None:
    frames = [pd.DataFrame({'transect_id': k, 's': s, 'C': c, 'q': q})
              for k, (s, q, c) in enumerate(transects)]
    pd.concat(frames, ignore_index=True).to_csv(path, index=False)


# --- Agents ---
def agent_rows(state: TrialState) -> List[dict]:
    rows = []
    for i in np.flatnonzero(state.swarm.active):
        agent = state.swarm.agent(int(i))
        rows.append({'t': state.t, 'id': agent.id, 'x': agent.position[0], 'y': agent.position[1],
                     'px': agent.heading[0], 'py': agent.heading[1], 'C_i': agent.confidence})
    return rows


def write_agents(path: Union[str, Path], rows: Iterable[dict]) -> None:
    pd.DataFrame(list(rows), columns=AGENT_COLUMNS).to_csv(path, index=False)


def agent_to_feature(row: dict) -> dict:
    return {
        'type': 'Feature',
        'geometry': tuple_to_list(mapping(Point(row['x'], row['y']))),
        'properties': {'t': row['t'], 'id': row['id'], 'heading': [row['px'], row['py']], 'confidence': row['C_i']},
    }


def write_agents_geojson(path: Union[str, Path], rows: Iterable[dict]) -> None:
    collection = {'type': 'FeatureCollection', 'features': [agent_to_feature(r) for r in rows]}
    Path(path).write_text(json.dumps(collection))
