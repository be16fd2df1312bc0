"""
Demodulator front-ends.

The general bank splits a block into ``A`` contiguous intervals and
evaluates each at ``2L+1`` frequencies around every carrier.  ``A=1, L=0``
is the plain single FFT, ``L=0`` the partial FFT and ``A=1`` the fractional
FFT.  All Fourier sums use time measured from the block start and the
``1/T`` unit-gain normalisation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ConfigurationError, FramingError, OfdmConfig


@dataclass(frozen=True)
class DemodConfig:
    intervals: int = 1
    half_grid: int = 0
    fe_hz: float = 0.0

    def __post_init__(self):
        if self.intervals < 1:
            raise ConfigurationError("intervals must be >= 1")
        if self.half_grid < 0:
            raise ConfigurationError("half_grid must be >= 0")
        if self.half_grid > 0 and not self.fe_hz > 0:
            raise ConfigurationError("fe_hz must be positive when half_grid > 0")

    @property
    def width(self) -> int:
        """Length of the stacked per-carrier output vector."""
        return self.intervals * (2 * self.half_grid + 1)

    @property
    def offsets_hz(self) -> np.ndarray:
        """Frequency offsets ``l * fe / (L+1)`` for ``l = -L..L``."""
        L = self.half_grid
        return np.arange(-L, L + 1) * (self.fe_hz / (L + 1)) if L else np.zeros(1)


@dataclass(frozen=True)
class DemodBankOutput:
    """Bank outputs ``tensor[k, a, l + L]`` for one block."""

    tensor: np.ndarray

    @property
    def carriers(self) -> int:
        return self.tensor.shape[0]

    @property
    def stacked(self) -> np.ndarray:
        """``(K, A*(2L+1))`` array; interval-major, frequency offset ascending."""
        return self.tensor.reshape(self.tensor.shape[0], -1)


def _block_samples(v, cfg: OfdmConfig) -> np.ndarray:
    s = np.asarray(getattr(v, "samples", v))
    if s.shape != (cfg.samples_per_block,):
        raise FramingError(
            f"expected one block of {cfg.samples_per_block} samples, got shape {s.shape}")
    return s


def single_fft_demod(v, cfg: OfdmConfig) -> np.ndarray:
    """``x_k = (1/T) * sum_n v[n] exp(-2j*pi*k*df*n*Ts) * Ts`` for each carrier."""
    s = _block_samples(v, cfg)
    return np.fft.fft(s)[: cfg.carriers] / s.size


def partition_windows(n_samples: int, intervals: int) -> list[slice]:
    """Contiguous slices covering ``n_samples``; leftover samples go to the
    earliest intervals."""
    if intervals < 1:
        raise ConfigurationError("intervals must be >= 1")
    if intervals > n_samples:
        raise ConfigurationError(f"{intervals} intervals exceed {n_samples} samples")
    base, extra = divmod(n_samples, intervals)
    out, start = [], 0
    for a in range(intervals):
        stop = start + base + (1 if a < extra else 0)
        out.append(slice(start, stop))
        start = stop
    return out


def frequency_grid(k: int, spacing_hz: float, half_grid: int, fe_hz: float) -> np.ndarray:
    """Evaluation frequencies ``k*df + l*fe/(L+1)``, ``l = -L..L``."""
    l = np.arange(-half_grid, half_grid + 1)
    return k * spacing_hz + l * fe_hz / (half_grid + 1)


def psfft_demod(v, cfg: OfdmConfig, demod: DemodConfig) -> DemodBankOutput:
    """Compute ``z[k, a, l]`` for one baseband block.

    Each window is zero-padded to the full block and frequency shifted by
    ``-l*fe/(L+1)`` before a length-``Ns`` FFT, which evaluates the
    Fourier sum exactly at ``k*df + l*fe/(L+1)`` (not at the nearest bin).
    """
    s = _block_samples(v, cfg)
    ns = s.size
    n = np.arange(ns)
    shifts = np.exp(-2j * np.pi * np.outer(demod.offsets_hz, n) / cfg.sampling_rate_hz)
    windows = partition_windows(ns, demod.intervals)
    out = np.empty((cfg.carriers, demod.intervals, shifts.shape[0]), dtype=complex)
    for a, win in enumerate(windows):
        padded = np.zeros((shifts.shape[0], ns), dtype=complex)
        padded[:, win] = s[win] * shifts[:, win]
        out[:, a, :] = (np.fft.fft(padded, axis=1)[:, : cfg.carriers] / ns).T
    return DemodBankOutput(out)


def combine(z_k, w_k) -> complex:
    """Combined symbol ``w^H z``."""
    z_k = np.asarray(z_k)
    w_k = np.asarray(w_k)
    if z_k.shape != w_k.shape:
        raise ValueError(f"weight shape {w_k.shape} does not match outputs {z_k.shape}")
    return complex(np.vdot(w_k, z_k))
