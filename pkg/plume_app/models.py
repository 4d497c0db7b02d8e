from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .schemas import ScalarConfig, SpectrumConfig, SwarmConfig


@dataclass
class FlowField:
    cfg: SpectrumConfig
    # Stream function coefficients in rfft2 layout (modes, modes // 2 + 1), unnormalized
    # inverse convention: psi(x) = sum_k psi_k exp(i k.x).
    stream_modes: np.ndarray
    target_mode_variance: np.ndarray
    mean_flow: np.ndarray
    rng: np.random.Generator
    # Centered-difference (modified) wavenumbers, broadcastable against stream_modes.
    kx: np.ndarray
    ky: np.ndarray
    # Fluctuating velocity on the spectral grid, shape (2, modes, modes), indexed [component, ix, iy].
    velocity: np.ndarray = field(default=None)
    time: float = 0.0

    @property
    def modes(self) -> int:
        return self.cfg.modes


@dataclass
class ScalarField:
    cfg: ScalarConfig
    # Concentration per unit source amplitude on an n-by-n periodic grid, indexed [ix, iy].
    grid: np.ndarray
    # Source kernel, normalized so that sum(kernel) * h**2 == 1.
    kernel: np.ndarray
    time: float = 0.0

    @property
    def n(self) -> int:
        return self.grid.shape[0]

    @property
    def spacing(self) -> float:
        return 1.0 / self.grid.shape[0]

    @property
    def source_position(self) -> Tuple[float, float]:
        return self.cfg.source

    @property
    def scale(self) -> float:
        # With the source off the grid holds raw concentration.
        return self.cfg.source_amplitude if self.cfg.source_amplitude > 0 else 1.0

    @property
    def concentration(self) -> np.ndarray:
        return self.scale * self.grid

    @property
    def reference_peak(self) -> float:
        """Steady peak of a unit source held in still fluid; per unit time when there is no decay."""
        peak = float(self.kernel.max())
        if self.cfg.decay_rate > 0:
            return peak / self.cfg.decay_rate
        return peak


@dataclass
class Agent:
    id: int
    position: Tuple[float, float]
    heading: Tuple[float, float]
    memory_max: float
    confidence: float


@dataclass
class Swarm:
    """Structure of arrays over all agents of a trial; arrived agents stay in place but inactive."""
    cfg: SwarmConfig
    positions: np.ndarray
    headings: np.ndarray
    memory_max: np.ndarray
    confidence: np.ndarray
    active: np.ndarray
    arrival_time: np.ndarray

    @classmethod
    def create(cls, cfg: SwarmConfig, positions, headings) -> 'Swarm':
        positions = np.array(positions, dtype=np.float64).reshape(-1, 2)
        headings = np.array(headings, dtype=np.float64).reshape(-1, 2)
        headings = headings / np.linalg.norm(headings, axis=1, keepdims=True)
        n = positions.shape[0]
        return cls(
            cfg=cfg,
            positions=positions,
            headings=headings,
            memory_max=np.zeros(n),
            confidence=np.zeros(n),
            active=np.ones(n, dtype=bool),
            arrival_time=np.full(n, np.nan),
        )

    @property
    def size(self) -> int:
        return self.positions.shape[0]

    @property
    def n_active(self) -> int:
        return int(self.active.sum())

    def agent(self, i: int) -> Agent:
        return Agent(
            id=i,
            position=(float(self.positions[i, 0]), float(self.positions[i, 1])),
            heading=(float(self.headings[i, 0]), float(self.headings[i, 1])),
            memory_max=float(self.memory_max[i]),
            confidence=float(self.confidence[i]),
        )

    def arrival(self, i: int) -> Optional[float]:
        t = self.arrival_time[i]
        return None if np.isnan(t) else float(t)
