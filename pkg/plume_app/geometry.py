"""Helpers for the periodic unit square shared by the flow, scalar and agent code."""
import numpy as np
from numba import njit


def wrap(positions: np.ndarray) -> np.ndarray:
    """Map positions into [0, 1). np.mod can return 1.0 for tiny negatives, hence the fixup."""
    wrapped = np.mod(positions, 1.0)
    return np.where(wrapped >= 1.0, 0.0, wrapped)


def minimum_image(offsets: np.ndarray) -> np.ndarray:
    return offsets - np.round(offsets)


def periodic_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.linalg.norm(minimum_image(np.asarray(b) - np.asarray(a)), axis=-1)


def unit(vector: np.ndarray) -> np.ndarray:
    vector = np.asarray(vector, dtype=np.float64)
    return vector / np.linalg.norm(vector)


@njit(cache=True)
def bilinear(grid, x, y):
    # Node (i, j) of an n-by-n periodic grid sits at (i/n, j/n).
    n = grid.shape[0]
    gx = x * n
    gy = y * n
    fx0 = np.floor(gx)
    fy0 = np.floor(gy)
    fx = gx - fx0
    fy = gy - fy0
    i0 = int(fx0) % n
    j0 = int(fy0) % n
    i1 = (i0 + 1) % n
    j1 = (j0 + 1) % n
    return ((1.0 - fx) * (1.0 - fy) * grid[i0, j0]
            + fx * (1.0 - fy) * grid[i1, j0]
            + (1.0 - fx) * fy * grid[i0, j1]
            + fx * fy * grid[i1, j1])


@njit(cache=True)
def bilinear_many(grid, points, out):
    for k in range(points.shape[0]):
        out[k] = bilinear(grid, points[k, 0], points[k, 1])
    return out
