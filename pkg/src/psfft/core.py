"""
Shared numeric types: PSK constellations, OFDM geometry and sampled blocks.

Every other module consumes :class:`OfdmConfig` for its timing and
frequency plan.  Continuous-time integrals are realised as sample sums
normalised so that an ideal channel demodulates to the transmitted symbol
(unit-gain convention).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml


class ConfigurationError(ValueError):
    """Invalid or inconsistent simulation parameters."""


class FramingError(ValueError):
    """Sample sequence does not match the expected block geometry."""


def constellation_symbol(q: int, order: int) -> complex:
    """Return the ``q``-th point ``exp(2j*pi*q/order)`` of a PSK alphabet."""
    if order < 2:
        raise ValueError(f"PSK order must be >= 2, got {order}")
    if not 0 <= q < order:
        raise ValueError(f"symbol index {q} outside [0, {order})")
    return cmath.exp(2j * math.pi * q / order)


@dataclass(frozen=True)
class PskConstellation:
    """Unit-amplitude Q-ary PSK alphabet ordered by increasing phase."""

    order: int = 4
    symbols: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.order < 2:
            raise ValueError(f"PSK order must be >= 2, got {self.order}")
        pts = np.exp(2j * np.pi * np.arange(self.order) / self.order)
        pts.flags.writeable = False
        object.__setattr__(self, "symbols", pts)

    @property
    def bits_per_symbol(self) -> float:
        return math.log2(self.order)

    def decide(self, values) -> np.ndarray:
        """Vectorised nearest-point decision, returning symbol indices.

        Ties (within 1e-12 in distance) go to the smaller index.
        """
        v = np.asarray(values, dtype=complex)
        if not np.all(np.isfinite(v)):
            raise ValueError("cannot decide on non-finite values")
        dist = np.abs(v[..., None] - self.symbols)
        near = dist <= dist.min(axis=-1, keepdims=True) + 1e-12
        return np.argmax(near, axis=-1)

    def gray(self, indices) -> np.ndarray:
        """Gray-coded bit label of each symbol index."""
        idx = np.asarray(indices)
        return idx ^ (idx >> 1)


def nearest_symbol(v: complex, constellation: PskConstellation) -> complex:
    """Map ``v`` to the closest constellation point (ties to smaller index)."""
    if not cmath.isfinite(v):
        raise ValueError(f"cannot decide on non-finite value {v!r}")
    pts = constellation.symbols
    best_q, best_d = 0, abs(v - pts[0])
    for q in range(1, constellation.order):
        d = abs(v - pts[q])
        if d < best_d - 1e-12:
            best_q, best_d = q, d
    return complex(pts[best_q])


@dataclass(frozen=True)
class ComplexBlock:
    """A finite run of samples with its sampling rate and start time."""

    samples: np.ndarray
    rate: float
    epoch: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.ndim != 1 or s.size == 0:
            raise ValueError("block must be a non-empty 1-D sequence")
        if not self.rate > 0:
            raise ValueError(f"sampling rate must be positive, got {self.rate}")
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.rate

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.samples)


@dataclass(frozen=True)
class OfdmConfig:
    """OFDM frequency/time plan.

    ``lowest_freq_hz`` defaults to ``f_c - B/2`` rounded to a multiple of the
    carrier spacing, which keeps the band centred on ``f_c`` to within one
    spacing and makes each block periodic over its own length.
    """

    carriers: int = 1024
    bandwidth_hz: float = 12e3
    center_freq_hz: float = 32e3
    sampling_rate_hz: float = 192e3
    guard_ms: float = 16.0
    blocks_per_frame: int = 8
    lowest_freq_hz: float | None = None

    def __post_init__(self):
        if self.carriers < 1:
            raise ConfigurationError("carriers must be positive")
        if self.blocks_per_frame < 1:
            raise ConfigurationError("blocks_per_frame must be positive")
        if self.bandwidth_hz <= 0 or self.sampling_rate_hz <= 0:
            raise ConfigurationError("bandwidth and sampling rate must be positive")
        if self.guard_ms < 0:
            raise ConfigurationError("guard_ms must be non-negative")
        ratio = self.sampling_rate_hz / self.bandwidth_hz
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ConfigurationError(
                f"sampling rate {self.sampling_rate_hz} is not an integer multiple "
                f"of bandwidth {self.bandwidth_hz}")
        guard = self.guard_ms * 1e-3 * self.sampling_rate_hz
        if abs(guard - round(guard)) > 1e-6:
            raise ConfigurationError("guard interval is not a whole number of samples")

    @property
    def oversampling(self) -> int:
        return int(round(self.sampling_rate_hz / self.bandwidth_hz))

    @property
    def spacing_hz(self) -> float:
        return self.bandwidth_hz / self.carriers

    @property
    def block_duration(self) -> float:
        return 1.0 / self.spacing_hz

    @property
    def sample_interval(self) -> float:
        return 1.0 / self.sampling_rate_hz

    @property
    def samples_per_block(self) -> int:
        return self.carriers * self.oversampling

    @property
    def guard_samples(self) -> int:
        return int(round(self.guard_ms * 1e-3 * self.sampling_rate_hz))

    @property
    def guard_s(self) -> float:
        return self.guard_ms * 1e-3

    @property
    def frame_samples(self) -> int:
        return self.blocks_per_frame * (self.samples_per_block + self.guard_samples)

    @property
    def f0(self) -> float:
        if self.lowest_freq_hz is not None:
            return self.lowest_freq_hz
        # snapped to the carrier grid so every block holds whole carrier cycles
        return self.spacing_hz * round((self.center_freq_hz - self.bandwidth_hz / 2)
                                       / self.spacing_hz)

    @property
    def carrier_freqs(self) -> np.ndarray:
        return self.f0 + self.spacing_hz * np.arange(self.carriers)

    def with_carriers(self, carriers: int, blocks_per_frame: int | None = None) -> "OfdmConfig":
        from dataclasses import replace
        return replace(self, carriers=carriers,
                       blocks_per_frame=blocks_per_frame or self.blocks_per_frame)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "OfdmConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown OFDM config keys: {sorted(unknown)}")
        return cls(**dict(data))


def load_yaml(path) -> dict:
    """Read a YAML mapping from ``path``."""
    with open(Path(path)) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: top level must be a mapping")
    return data


def load_ofdm_config(path) -> OfdmConfig:
    """Load :class:`OfdmConfig` from the ``ofdm`` section of a YAML file
    (or from the top level when there is no such section)."""
    data = load_yaml(path)
    return OfdmConfig.from_mapping(data.get("ofdm", data))
