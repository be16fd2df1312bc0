"""Frequency-domain differential encoding, OFDM modulation and framing."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import ComplexBlock, OfdmConfig, PskConstellation


def differential_encode(b, a0: complex = 1.0) -> np.ndarray:
    """Encode ``K-1`` PSK symbols across carriers.

    ``d[0] = a0`` and ``d[k] = b[k] * d[k-1]``.
    """
    b = np.asarray(b, dtype=complex).ravel()
    if not np.allclose(np.abs(b), 1.0, atol=1e-9) or not np.isclose(abs(a0), 1.0):
        raise ValueError("differential encoding expects unit-magnitude symbols")
    return a0 * np.cumprod(np.concatenate(([1.0 + 0j], b)))


def traversal_events(carriers: int, blocks: int):
    """Yield ``(block, k, previous_k)`` for every detection event of a frame.

    Even blocks run upward from carrier 0, odd blocks downward from K-1; the
    first carrier of each pass only anchors the differential chain.
    """
    for n in range(blocks):
        if n % 2 == 0:
            for k in range(1, carriers):
                yield n, k, k - 1
        else:
            for k in range(carriers - 2, -1, -1):
                yield n, k, k + 1


@dataclass(frozen=True)
class FramePlan:
    """Symbols of one frame.

    ``data_idx[n]`` holds the K-1 original symbol indices of block ``n`` and
    ``encoded_idx[n]`` the K encoded ones (``encoded_idx[n, 0] == 0``).
    """

    data_idx: np.ndarray
    encoded_idx: np.ndarray
    pilot_positions: tuple
    constellation: PskConstellation

    @property
    def blocks_per_frame(self) -> int:
        return self.encoded_idx.shape[0]

    @property
    def pilot_count(self) -> int:
        return len(self.pilot_positions)

    @property
    def original(self) -> np.ndarray:
        return self.constellation.symbols[self.data_idx]

    @property
    def encoded(self) -> np.ndarray:
        return self.constellation.symbols[self.encoded_idx]


def make_frame_plan(cfg: OfdmConfig, n_pilots: int, rng: np.random.Generator,
                    constellation: PskConstellation | None = None) -> FramePlan:
    """Draw uniform data symbols and encode them block by block.

    Pilot positions are the first ``n_pilots`` detection events in the
    receiver's zigzag traversal order.
    """
    con = constellation or PskConstellation(4)
    K, N = cfg.carriers, cfg.blocks_per_frame
    data = rng.integers(0, con.order, size=(N, K - 1))
    # integer phase accumulation keeps every encoded symbol exactly on the alphabet
    encoded = np.zeros((N, K), dtype=np.int64)
    encoded[:, 1:] = np.cumsum(data, axis=1) % con.order
    pilots = []
    if n_pilots > 0:
        for n, k, _ in traversal_events(K, N):
            pilots.append((n, k))
            if len(pilots) == n_pilots:
                break
    return FramePlan(data, encoded, tuple(pilots), con)


def modulate_block(d, cfg: OfdmConfig) -> ComplexBlock:
    """Real passband samples ``Re{sum_k d_k exp(2j*pi*f_k*t)}`` over one block."""
    d = np.asarray(d, dtype=complex)
    if d.shape != (cfg.carriers,):
        raise ValueError(f"expected {cfg.carriers} symbols, got shape {d.shape}")
    ns = cfg.samples_per_block
    spectrum = np.zeros(ns, dtype=complex)
    spectrum[: cfg.carriers] = d
    n = np.arange(ns)
    baseband = np.fft.ifft(spectrum) * ns
    s = np.real(np.exp(2j * np.pi * cfg.f0 * n / cfg.sampling_rate_hz) * baseband)
    return ComplexBlock(s, cfg.sampling_rate_hz)


def assemble_frame(plan: FramePlan, cfg: OfdmConfig) -> ComplexBlock:
    """Concatenate the modulated blocks, each followed by a silent guard."""
    if plan.encoded_idx.shape != (cfg.blocks_per_frame, cfg.carriers):
        raise ValueError("frame plan does not match OFDM configuration")
    ns, ng = cfg.samples_per_block, cfg.guard_samples
    out = np.zeros(cfg.frame_samples)
    for n, d in enumerate(plan.encoded):
        start = n * (ns + ng)
        out[start: start + ns] = modulate_block(d, cfg).samples
    return ComplexBlock(out, cfg.sampling_rate_hz)


def dump_frame(path, frame: ComplexBlock, cfg: OfdmConfig, plan: FramePlan | None = None) -> Path:
    """Write samples as little-endian float64 plus a ``.json`` sidecar.

    Returns the sidecar path.
    """
    if not frame.is_real:
        raise ValueError("frame dump expects real passband samples")
    path = Path(path)
    frame.samples.astype("<f8").tofile(path)
    meta = {
        "dtype": "<f8",
        "samples": int(frame.samples.size),
        "sampling_rate_hz": cfg.sampling_rate_hz,
        "epoch_s": frame.epoch,
        "carriers": cfg.carriers,
        "bandwidth_hz": cfg.bandwidth_hz,
        "center_freq_hz": cfg.center_freq_hz,
        "lowest_freq_hz": cfg.f0,
        "guard_ms": cfg.guard_ms,
        "blocks_per_frame": cfg.blocks_per_frame,
        "samples_per_block": cfg.samples_per_block,
        "guard_samples": cfg.guard_samples,
    }
    if plan is not None:
        meta["psk_order"] = plan.constellation.order
        meta["encoded_symbol_indices"] = plan.encoded_idx.tolist()
        meta["pilot_positions"] = [list(p) for p in plan.pilot_positions]
    sidecar = path.with_name(path.name + ".json")
    sidecar.write_text(json.dumps(meta, indent=2))
    return sidecar


def load_frame(path) -> tuple[ComplexBlock, dict]:
    """Read a frame written by :func:`dump_frame`."""
    path = Path(path)
    meta = json.loads(path.with_name(path.name + ".json").read_text())
    samples = np.fromfile(path, dtype=meta["dtype"]).astype(float)
    if samples.size != meta["samples"]:
        raise ValueError(f"{path}: expected {meta['samples']} samples, found {samples.size}")
    return ComplexBlock(samples, meta["sampling_rate_hz"], meta.get("epoch_s", 0.0)), meta
