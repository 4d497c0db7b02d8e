"""Group observables over the active agents: polarity, nearest-neighbour distance, fission and footprint."""
import math
from typing import Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree
from shapely import buffer, points, union_all

from .config import DOMAIN_LENGTH
from .errors import EmptyGroupError
from .geometry import minimum_image, wrap

# Two-sided 95 % normal quantile.
Z_95 = 1.959963984540054


def polarity(headings: np.ndarray) -> float:
    headings = np.asarray(headings, dtype=np.float64).reshape(-1, 2)
    n = headings.shape[0]
    if n == 0:
        raise EmptyGroupError("polarity is undefined for an empty group")
    return min(1.0, float(np.linalg.norm(headings.sum(axis=0))) / n)


def _tree(positions: np.ndarray) -> cKDTree:
    return cKDTree(wrap(np.asarray(positions, dtype=np.float64)), boxsize=DOMAIN_LENGTH)


def mean_nnd(positions: np.ndarray) -> float:
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    if positions.shape[0] < 2:
        raise EmptyGroupError("mean nearest-neighbour distance needs at least two agents")
    dist, _ = _tree(positions).query(positions, k=2)
    return float(np.mean(dist[:, 1]))


def cluster_count(positions: np.ndarray, link_radius: float) -> int:
    """Connected groups of agents, two agents being linked when within link_radius of each other."""
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    n = positions.shape[0]
    if n == 0:
        return 0
    pairs = _tree(positions).query_pairs(r=link_radius, output_type='ndarray').reshape(-1, 2)
    graph = coo_matrix((np.ones(pairs.shape[0]), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    n_groups, _ = connected_components(graph, directed=False)
    return int(n_groups)


def occupied_area(positions: np.ndarray, radius: float) -> float:
    """Area of the union of discs of the given radius, agents unwrapped around the first one."""
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    if positions.shape[0] == 0:
        return 0.0
    unwrapped = positions[0] + minimum_image(positions - positions[0])
    return float(union_all(buffer(points(unwrapped), radius)).area)


def effective_area(n_agents: int, repulsion_radius: float) -> float:
    return n_agents * math.pi * repulsion_radius ** 2


def standard_error(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n) if n > 0 else float('nan')


def wilson_interval(successes: int, n: int, z: float = Z_95) -> Tuple[float, float]:
    if n == 0:
        return float('nan'), float('nan')
    p = successes / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)
