"""Semi-Lagrangian transport of the signal with a continuous source and linear decay."""
import logging
from typing import List, Sequence, Tuple

import numpy as np
from numba import njit, prange

from .errors import NoFilamentError
from .geometry import bilinear, bilinear_many, minimum_image
from .models import FlowField, ScalarField
from .schemas import ScalarConfig

logger = logging.getLogger(__name__)

# A transect without a filament peaks below this fraction of the steady source peak.
NO_FILAMENT_FRACTION = 1e-6
# Profile region kept around a transect's peak, as a fraction of that peak.
PROFILE_CUTOFF = 1e-3


@njit(cache=True, parallel=True)
def _advect(grid, u, v, mean_x, mean_y, dt, out):
    n = grid.shape[0]
    h = 1.0 / n
    for i in prange(n):
        x = i * h
        for j in range(n):
            y = j * h
            vx = mean_x + bilinear(u, x, y)
            vy = mean_y + bilinear(v, x, y)
            xm = x - 0.5 * dt * vx
            ym = y - 0.5 * dt * vy
            vx = mean_x + bilinear(u, xm, ym)
            vy = mean_y + bilinear(v, xm, ym)
            out[i, j] = bilinear(grid, x - dt * vx, y - dt * vy)
    return out


def _source_kernel(cfg: ScalarConfig) -> np.ndarray:
    n = cfg.grid_size
    h = 1.0 / n
    nodes = np.arange(n) * h
    dx = minimum_image(nodes - cfg.source[0])[:, None]
    dy = minimum_image(nodes - cfg.source[1])[None, :]
    sigma = cfg.source_width * h
    kernel = np.exp(-(dx ** 2 + dy ** 2) / (2 * sigma ** 2))
    return kernel / (kernel.sum() * h * h)


def init_scalar(cfg: ScalarConfig) -> ScalarField:
    n = cfg.grid_size
    return ScalarField(cfg=cfg, grid=np.zeros((n, n)), kernel=_source_kernel(cfg))


def step_scalar(field: ScalarField, flow: FlowField, dt: float) -> ScalarField:
    out = np.empty_like(field.grid)
    _advect(field.grid, flow.velocity[0], flow.velocity[1],
            float(flow.mean_flow[0]), float(flow.mean_flow[1]), dt, out)
    if field.cfg.decay_rate > 0:
        out *= np.exp(-field.cfg.decay_rate * dt)
    if field.cfg.source_amplitude > 0:
        out += dt * field.kernel
    field.grid = out
    field.time += dt
    return field


def _interpolate(field: ScalarField, position) -> np.ndarray:
    points = np.asarray(position, dtype=np.float64)
    flat = np.ascontiguousarray(points.reshape(-1, 2))
    values = bilinear_many(field.grid, flat, np.empty(flat.shape[0]))
    return values.reshape(points.shape[:-1])


def sample_concentration(field: ScalarField, position):
    values = field.scale * _interpolate(field, position)
    return float(values) if values.ndim == 0 else values


def sample_signal(field: ScalarField, position):
    """Concentration relative to the steady source peak, independent of the source amplitude."""
    values = _interpolate(field, position) / field.reference_peak
    return float(values) if values.ndim == 0 else values


def total_mass(field: ScalarField) -> float:
    return float(field.concentration.sum() * field.spacing ** 2)


# --- Filament width ---
def _edge_distance(origin: Sequence[float], direction: np.ndarray) -> float:
    exits = [((1.0 if d > 0 else 0.0) - o) / d for o, d in zip(origin, direction) if d != 0]
    return min(exits)


def filament_transects(field: ScalarField, n_transects: int,
                       direction: Tuple[float, float] = (0.0, 1.0)) -> List[Tuple[float, np.ndarray, np.ndarray]]:
    """
    Concentration profiles across the mean flow, spaced evenly between the source and the domain edge.

    Returns (along-flow distance, transverse coordinate, concentration) per transect. Transverse
    samples fall one grid spacing apart and span the full domain width.
    """
    m = np.asarray(direction, dtype=np.float64)
    m = m / np.linalg.norm(m)
    t = np.array([m[1], -m[0]])
    origin = np.asarray(field.source_position, dtype=np.float64)
    length = _edge_distance(origin, m)

    n = field.n
    q = (np.arange(n) - n // 2) * field.spacing
    transects = []
    for k in range(n_transects):
        s = length * (k + 1) / (n_transects + 1)
        points = origin + s * m + q[:, None] * t
        transects.append((s, q, field.scale * _interpolate(field, points)))
    return transects


def _profile_sigma(q: np.ndarray, c: np.ndarray) -> float:
    n = c.shape[0]
    peak_at = int(np.argmax(c))
    shift = n // 2 - peak_at
    c = np.roll(c, shift)
    centre = n // 2
    cutoff = PROFILE_CUTOFF * c[centre]
    lo = centre
    while lo > 0 and c[lo - 1] >= cutoff:
        lo -= 1
    hi = centre
    while hi < n - 1 and c[hi + 1] >= cutoff:
        hi += 1
    weights = c[lo:hi + 1]
    coords = (np.arange(lo, hi + 1) - centre) * (q[1] - q[0])
    mean = np.sum(weights * coords) / np.sum(weights)
    return float(np.sqrt(np.sum(weights * (coords - mean) ** 2) / np.sum(weights)))


def measure_filament_width(field: ScalarField, n_transects: int,
                           direction: Tuple[float, float] = (0.0, 1.0)) -> float:
    """Average standard deviation of the transverse filament profile over the transects that see one."""
    threshold = NO_FILAMENT_FRACTION * field.scale * field.reference_peak
    sigmas = [_profile_sigma(q, c) for _, q, c in filament_transects(field, n_transects, direction)
              if c.max() >= threshold]
    if not sigmas:
        raise NoFilamentError("no transect reaches the filament threshold; is the plume developed?")
    logger.info("Filament width from %d of %d transects", len(sigmas), n_transects)
    return float(np.mean(sigmas))


def memory_timescale_for_width(sigma: float, speed: float) -> float:
    """Time to cross one standard deviation of the filament moving at 45 degrees to it."""
    return sigma / (speed * np.sin(np.pi / 4))
