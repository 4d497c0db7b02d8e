"""Divergence-free 2D flow: a stream function whose Fourier modes follow independent OU processes."""
import logging
from typing import Tuple

import numpy as np
import scipy.fft

from .errors import TimeStepError
from .geometry import bilinear_many
from .models import FlowField
from .schemas import SpectrumConfig

logger = logging.getLogger(__name__)


def peak_wavenumber(cfg: SpectrumConfig) -> float:
    return 2 * np.pi / cfg.peak_lengthscale


def _wavenumbers(m: int) -> Tuple[np.ndarray, np.ndarray]:
    h = 1.0 / m
    kx = 2 * np.pi * np.fft.fftfreq(m, d=h)
    ky = 2 * np.pi * np.fft.rfftfreq(m, d=h)
    return kx[:, None], ky[None, :]


def _half_plane_weights(m: int) -> np.ndarray:
    # Columns 0 and m/2 are their own mirror images; every other column stands for two modes.
    weights = np.full((1, m // 2 + 1), 2.0)
    weights[0, 0] = 1.0
    weights[0, -1] = 1.0
    return weights


def _mirror_columns(a: np.ndarray) -> np.ndarray:
    """Make the self-conjugate columns (ky = 0 and ky = Nyquist) exactly Hermitian in place."""
    m = a.shape[0]
    for col in (0, -1):
        a[m // 2 + 1:, col] = np.conj(a[1:m // 2, col][::-1])
        a[0, col] = a[0, col].real
        a[m // 2, col] = a[m // 2, col].real
    return a


def _mode_variance(cfg: SpectrumConfig, kx_mod: np.ndarray, ky_mod: np.ndarray) -> np.ndarray:
    m = cfg.modes
    kx, ky = _wavenumbers(m)
    kmag = np.sqrt(kx ** 2 + ky ** 2)
    kmod2 = kx_mod ** 2 + ky_mod ** 2

    # Per-mode kinetic energy goes as E(|k|) / |k| = A exp(-|k| / k_p).
    energy = np.exp(-kmag / peak_wavenumber(cfg))
    variance = np.zeros_like(kmag)
    np.divide(energy, kmod2, out=variance, where=kmod2 > 0)
    variance[0, 0] = 0.0
    variance[m // 2, :] = 0.0
    variance[:, -1] = 0.0
    variance[m // 2 + 1:, 0] = variance[1:m // 2, 0][::-1]

    total = float(np.sum(_half_plane_weights(m) * kmod2 * variance))
    if total == 0.0 or cfg.rms_velocity == 0.0:
        return np.zeros_like(variance)
    return variance * (cfg.rms_velocity ** 2 / total)


def _standard_noise(rng: np.random.Generator, m: int) -> np.ndarray:
    # Transforming real white noise gives E|xi_k|^2 = 1 for every k with the Hermitian structure built in.
    xi = scipy.fft.rfft2(rng.standard_normal((m, m)), norm='ortho')
    return _mirror_columns(xi)


def _update_velocity(field: FlowField) -> None:
    m = field.modes
    u = scipy.fft.irfft2(1j * field.ky * field.stream_modes, s=(m, m), norm='forward')
    v = scipy.fft.irfft2(-1j * field.kx * field.stream_modes, s=(m, m), norm='forward')
    field.velocity = np.stack([u, v])


def build_flow(cfg: SpectrumConfig, seed: int) -> FlowField:
    m = cfg.modes
    h = 1.0 / m
    kx, ky = _wavenumbers(m)
    kx_mod = np.sin(kx * h) / h
    ky_mod = np.sin(ky * h) / h
    kx_mod[m // 2, :] = 0.0
    ky_mod[:, -1] = 0.0

    variance = _mode_variance(cfg, kx_mod, ky_mod)
    rng = np.random.default_rng(seed)
    stream_modes = np.sqrt(variance) * _standard_noise(rng, m)

    field = FlowField(
        cfg=cfg,
        stream_modes=stream_modes,
        target_mode_variance=variance,
        mean_flow=np.array(cfg.mean_flow, dtype=np.float64),
        rng=rng,
        kx=kx_mod,
        ky=ky_mod,
    )
    _update_velocity(field)
    logger.debug("Built flow: modes=%d k_p=%.3f seed=%d", m, peak_wavenumber(cfg), seed)
    return field


def step_flow(field: FlowField, dt: float) -> FlowField:
    tau = field.cfg.correlation_time
    if dt <= 0 or dt > tau / 10:
        raise TimeStepError(f"flow step dt={dt!r} must lie in (0, correlation_time/10 = {tau / 10!r}]")
    a = dt / tau
    noise = _standard_noise(field.rng, field.modes)
    field.stream_modes = field.stream_modes * (1.0 - a) + np.sqrt(2.0 * field.target_mode_variance * a) * noise
    field.time += dt
    _update_velocity(field)
    return field


def sample_velocity(field: FlowField, position) -> np.ndarray:
    """Mean flow plus the bilinearly interpolated fluctuation; accepts one point or an (n, 2) array."""
    points = np.asarray(position, dtype=np.float64)
    single = points.ndim == 1
    points = np.ascontiguousarray(points.reshape(-1, 2))
    out = np.empty((points.shape[0], 2))
    out[:, 0] = bilinear_many(field.velocity[0], points, np.empty(points.shape[0]))
    out[:, 1] = bilinear_many(field.velocity[1], points, np.empty(points.shape[0]))
    out += field.mean_flow
    return out[0] if single else out


def rms_fluctuation(field: FlowField) -> float:
    return float(np.sqrt(np.mean(field.velocity[0] ** 2 + field.velocity[1] ** 2)))


def radial_energy_spectrum(field: FlowField, expected: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """
    Shell-binned energy spectrum E(k), shells of width 2*pi centred on integer multiples of 2*pi.

    Each shell's mean per-mode energy is scaled by the shell index, the lattice density of modes,
    so that lattice counting noise does not move the peak. With expected=True the target variance
    is used instead of the current mode amplitudes.
    """
    m = field.modes
    power = field.target_mode_variance if expected else np.abs(field.stream_modes) ** 2
    kx, ky = _wavenumbers(m)
    shell = np.rint(np.sqrt(kx ** 2 + ky ** 2) / (2 * np.pi)).astype(int)
    weights = np.broadcast_to(_half_plane_weights(m), shell.shape)
    energy = 0.5 * (field.kx ** 2 + field.ky ** 2) * power * weights

    n_shells = m // 2
    counts = np.bincount(shell.ravel(), weights=weights.ravel(), minlength=n_shells + 1)[1:n_shells]
    sums = np.bincount(shell.ravel(), weights=energy.ravel(), minlength=n_shells + 1)[1:n_shells]
    index = np.arange(1, n_shells)
    spectrum = np.where(counts > 0, sums / np.maximum(counts, 1) * index, 0.0)
    return 2 * np.pi * index, spectrum
