"""
Underwater channel: sparse multipath, residual Doppler scaling and AWGN,
followed by the receiver's conversion to per-block baseband.

The chain order is multipath -> Doppler -> noise.  Doppler is a wideband
time compression of the passband waveform, so carrier ``f_k`` moves by
``alpha * f_k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import i0

from .core import ComplexBlock, ConfigurationError, FramingError, OfdmConfig, load_yaml

MAX_DOPPLER = 1e-2


@dataclass(frozen=True)
class PathTap:
    gain: complex
    delay_s: float


@dataclass(frozen=True)
class ChannelRealization:
    """Taps plus Doppler factor and receiver SNR.

    ``snr_db = inf`` disables noise.
    """

    taps: tuple = field(default_factory=lambda: (PathTap(1.0, 0.0),))
    doppler_factor: float = 0.0
    snr_db: float = math.inf
    noise_seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "taps", tuple(self.taps))
        validate_taps(self.taps)
        if abs(self.doppler_factor) > MAX_DOPPLER:
            raise ConfigurationError(
                f"|doppler_factor| = {abs(self.doppler_factor)} exceeds {MAX_DOPPLER}")

    @property
    def max_delay_s(self) -> float:
        return max(t.delay_s for t in self.taps)


def validate_taps(taps: Sequence[PathTap]) -> None:
    if len(taps) == 0:
        raise ConfigurationError("channel profile needs at least one tap")
    delays = [t.delay_s for t in taps]
    if delays[0] < 0 or any(b <= a for a, b in zip(delays, delays[1:])):
        raise ConfigurationError("tap delays must be non-negative and strictly increasing")


# Stand-in for the measured shallow-water profile: six arrivals over 10 ms
# with exponentially decaying magnitude.
DEFAULT_PROFILE = (
    (0.0, 1.0),
    (0.3, -0.45),
    (0.9, 0.2),
    (2.0, -0.09),
    (4.5, 0.04),
    (10.0, -0.018),
)


def default_taps() -> tuple:
    return tuple(PathTap(g, d * 1e-3) for d, g in DEFAULT_PROFILE)


def taps_from_pairs(pairs) -> tuple:
    """Build taps from ``(delay_ms, gain)`` pairs; ``gain`` may be a number,
    a complex string such as ``"0.3-0.1j"``, or a ``[re, im]`` pair."""
    taps = []
    for delay_ms, gain in pairs:
        if isinstance(gain, (list, tuple)):
            gain = complex(gain[0], gain[1])
        elif isinstance(gain, str):
            gain = complex(gain.replace(" ", ""))
        taps.append(PathTap(gain, float(delay_ms) * 1e-3))
    validate_taps(taps)
    return tuple(taps)


def load_channel_profile(path) -> dict:
    """Read a channel profile file.

    Returns a dict with ``taps`` and, when present, ``doppler_factor`` and
    ``snr_db``.  The taps may sit at top level or under a ``channel`` key.
    """
    data = load_yaml(path)
    data = data.get("channel", data)
    if "taps" not in data:
        raise ConfigurationError(f"{path}: missing 'taps'")
    out = {"taps": taps_from_pairs(data["taps"])}
    for key in ("doppler_factor", "snr_db"):
        if key in data:
            out[key] = float(data[key])
    return out


def apply_multipath(x: ComplexBlock, taps: Sequence[PathTap],
                    guard_s: float | None = None) -> ComplexBlock:
    """Sum of delayed, scaled copies; delays are rounded to whole samples.

    Complex gains on a real signal act on its analytic signal, so the output
    stays real.
    """
    validate_taps(taps)
    max_delay = max(t.delay_s for t in taps)
    if guard_s is not None and max_delay >= guard_s:
        raise ConfigurationError(
            f"max path delay {max_delay * 1e3:.3f} ms does not fit in the "
            f"{guard_s * 1e3:.3f} ms guard")
    shifts = [int(round(t.delay_s * x.rate)) for t in taps]
    gains = np.array([complex(t.gain) for t in taps])
    src = x.samples
    real_out = x.is_real
    if real_out and np.any(gains.imag != 0):
        from scipy.signal import hilbert
        src = hilbert(src)
    else:
        gains = gains.real if real_out else gains
    out = np.zeros(src.size + max(shifts), dtype=np.result_type(src, gains))
    for g, s in zip(gains, shifts):
        out[s: s + src.size] += g * src
    if real_out:
        out = np.real(out)
    return ComplexBlock(out, x.rate, x.epoch)


def _kaiser(u: np.ndarray, half_width: int, beta: float) -> np.ndarray:
    r = np.clip(u / half_width, -1.0, 1.0)
    return i0(beta * np.sqrt(1.0 - r * r)) / i0(beta)


def apply_doppler(x: ComplexBlock, alpha: float, half_width: int = 24,
                  beta: float = 9.0, chunk: int = 1 << 15) -> ComplexBlock:
    """Time-compress ``x`` by ``1 + alpha`` with Kaiser-windowed sinc interpolation.

    ``out[n] = x(n * (1 + alpha))`` and the output has
    ``floor(len(x) / (1 + alpha))`` samples; a tone at ``f`` comes out at
    ``(1 + alpha) * f``.
    """
    if abs(alpha) > MAX_DOPPLER:
        raise ConfigurationError(f"|alpha| = {abs(alpha)} exceeds {MAX_DOPPLER}")
    if alpha == 0:
        return x
    src = x.samples
    n_in = src.size
    n_out = int(math.floor(n_in / (1.0 + alpha)))
    out = np.zeros(n_out, dtype=src.dtype)
    offsets = np.arange(-half_width + 1, half_width + 1)
    for lo in range(0, n_out, chunk):
        t = np.arange(lo, min(lo + chunk, n_out)) * (1.0 + alpha)
        base = np.floor(t).astype(np.int64)
        idx = base[:, None] + offsets
        u = (t - base)[:, None] - offsets
        w = np.sinc(u) * _kaiser(u, half_width, beta)
        valid = (idx >= 0) & (idx < n_in)
        vals = src[np.clip(idx, 0, n_in - 1)]
        out[lo: lo + t.size] = np.sum(np.where(valid, vals * w, 0.0), axis=1)
    return ComplexBlock(out, x.rate, x.epoch)


def add_awgn(x: ComplexBlock, snr_db: float, seed, bandwidth_hz: float,
             active_samples: int | None = None) -> ComplexBlock:
    """Add white Gaussian noise so the in-band SNR equals ``snr_db``.

    Signal power is the total energy divided by ``active_samples`` (default:
    the whole length), which lets silent guards be excluded.  Noise is real
    for real input and circular complex otherwise; either way its power
    inside a band of ``bandwidth_hz`` is ``signal_power / 10**(snr_db/10)``.
    """
    if math.isinf(snr_db) and snr_db > 0:
        return x
    s = x.samples
    energy = float(np.sum(np.abs(s) ** 2))
    if energy == 0:
        raise ValueError("SNR is undefined for an all-zero signal")
    power = energy / (active_samples or s.size)
    noise_in_band = power / 10 ** (snr_db / 10)
    rng = np.random.default_rng(seed)
    if x.is_real:
        var = noise_in_band * x.rate / (2 * bandwidth_hz)
        noise = rng.normal(0.0, math.sqrt(var), s.size)
    else:
        var = noise_in_band * x.rate / bandwidth_hz
        noise = (rng.normal(0.0, math.sqrt(var / 2), s.size)
                 + 1j * rng.normal(0.0, math.sqrt(var / 2), s.size))
    return ComplexBlock(s + noise, x.rate, x.epoch)


def block_starts(cfg: OfdmConfig, alpha: float = 0.0, lead_samples: int = 0) -> np.ndarray:
    """Sample index where each received block begins (ideal frame sync)."""
    period = cfg.samples_per_block + cfg.guard_samples
    n = np.arange(cfg.blocks_per_frame)
    return np.round((n * period + lead_samples) / (1.0 + alpha)).astype(np.int64)


def to_baseband(r: ComplexBlock, cfg: OfdmConfig, alpha: float = 0.0,
                lead_samples: int = 0, margin_hz: float | None = None) -> np.ndarray:
    """Cut the received passband frame into baseband blocks.

    For each block: take the block and its trailing guard, mix down by
    ``f0`` (phase referenced to the block start), fold the guard back onto the
    block (overlap-add, which turns multipath within the guard into a
    circular shift), and low-pass by zeroing DFT bins outside
    ``[-margin, B + margin]``.  The filter is zero-phase so block alignment is
    exact.

    Returns an ``(N, samples_per_block)`` complex array scaled so an ideal
    channel gives ``sum_k d_k exp(2j*pi*k*df*t)``.
    """
    ns, ng = cfg.samples_per_block, cfg.guard_samples
    fs = cfg.sampling_rate_hz
    starts = block_starts(cfg, alpha, lead_samples)
    samples = r.samples
    if starts[-1] + ns > samples.size:
        raise FramingError(
            f"received {samples.size} samples, need {starts[-1] + ns} for "
            f"{cfg.blocks_per_frame} blocks")
    margin = 2 * cfg.bandwidth_hz if margin_hz is None else margin_hz
    freqs = np.fft.fftfreq(ns, 1.0 / fs)
    keep = (freqs >= -margin) & (freqs <= cfg.bandwidth_hz + margin)

    span = ns + ng
    n_chunks = -(-span // ns)
    mixer = 2.0 * np.exp(-2j * np.pi * cfg.f0 * np.arange(n_chunks * ns) / fs)
    out = np.empty((cfg.blocks_per_frame, ns), dtype=complex)
    for b, start in enumerate(starts):
        seg = np.zeros(n_chunks * ns, dtype=complex)
        piece = samples[start: start + span]
        seg[: piece.size] = piece
        folded = (seg * mixer).reshape(n_chunks, ns).sum(axis=0)
        spec = np.fft.fft(folded)
        spec[~keep] = 0.0
        out[b] = np.fft.ifft(spec)
    return out


def simulate_channel(frame: ComplexBlock, cfg: OfdmConfig,
                     realization: ChannelRealization) -> ComplexBlock:
    """Multipath, then Doppler, then noise calibrated on the active blocks."""
    y = apply_multipath(frame, realization.taps, guard_s=cfg.guard_s)
    y = apply_doppler(y, realization.doppler_factor)
    active = int(round(cfg.blocks_per_frame * cfg.samples_per_block
                       / (1.0 + realization.doppler_factor)))
    return add_awgn(y, realization.snr_db, realization.noise_seed,
                    cfg.bandwidth_hz, active_samples=active)


def receive(frame: ComplexBlock, cfg: OfdmConfig, realization: ChannelRealization) -> np.ndarray:
    """Full channel plus baseband conversion with ideal synchronisation to
    the first arrival."""
    r = simulate_channel(frame, cfg, realization)
    lead = int(round(realization.taps[0].delay_s * cfg.sampling_rate_hz))
    return to_baseband(r, cfg, alpha=realization.doppler_factor, lead_samples=lead)
