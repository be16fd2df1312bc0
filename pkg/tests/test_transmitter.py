import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from psfft.core import OfdmConfig, PskConstellation
from psfft.demod import single_fft_demod
from psfft.transmitter import (assemble_frame, differential_encode, dump_frame, load_frame,
                               make_frame_plan, modulate_block, traversal_events)

QPSK = PskConstellation(4)
a = QPSK.symbols


@pytest.mark.parametrize("b, expected", [
    ([1, 1], [1, 1, 1]),
    ([1j, 1j], [1, 1j, -1]),
    ([a[1], a[2], a[3]], [1, 1j, -1j, -1]),
])
def test_differential_encode_examples(b, expected):
    assert np.allclose(differential_encode(b), expected, atol=1e-12)


def test_differential_encode_k1():
    assert np.array_equal(differential_encode([], a0=1j), [1j])


def test_differential_encode_rejects_non_unit():
    with pytest.raises(ValueError):
        differential_encode([2.0])


@given(st.lists(st.integers(0, 3), min_size=1, max_size=64), st.integers(0, 3))
def test_encode_inverse_and_unit_magnitude(idx, q0):
    b = a[idx]
    d = differential_encode(b, a0=a[q0])
    assert d[0] == a[q0]
    assert np.allclose(np.abs(d), 1.0, atol=1e-12)
    assert np.allclose(d[1:] / d[:-1], b, atol=1e-12)


def _cfg(K=64, N=2, guard_ms=16.0):
    return OfdmConfig(carriers=K, blocks_per_frame=N, guard_ms=guard_ms)


def test_single_tone_block():
    cfg = _cfg()
    d = np.zeros(cfg.carriers, complex)
    d[0] = 1
    s = modulate_block(d, cfg).samples
    n = np.arange(s.size)
    assert s[0] == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(s, np.cos(2 * np.pi * cfg.f0 * n / cfg.sampling_rate_hz), atol=1e-10)


def test_modulate_matches_direct_sum(rng):
    cfg = _cfg(K=16)
    d = a[rng.integers(0, 4, cfg.carriers)]
    t = np.arange(cfg.samples_per_block) / cfg.sampling_rate_hz
    direct = np.real(np.exp(2j * np.pi * np.outer(t, cfg.carrier_freqs)) @ d)
    assert np.allclose(modulate_block(d, cfg).samples, direct, atol=1e-10)


def test_zero_symbols_zero_block():
    cfg = _cfg()
    assert not np.any(modulate_block(np.zeros(cfg.carriers), cfg).samples)


def test_clean_round_trip(rng):
    cfg = _cfg()
    d = a[rng.integers(0, 4, cfg.carriers)]
    s = modulate_block(d, cfg).samples
    # analytic mixing of a passband block back to baseband, no filter
    n = np.arange(s.size)
    v = 2 * s * np.exp(-2j * np.pi * cfg.f0 * n / cfg.sampling_rate_hz)
    assert np.max(np.abs(single_fft_demod(v, cfg) - d)) < 1e-9


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1))
def test_modulation_linear(seed):
    cfg = _cfg(K=16)
    r = np.random.default_rng(seed)
    d1 = r.normal(size=16) + 1j * r.normal(size=16)
    d2 = r.normal(size=16) + 1j * r.normal(size=16)
    lhs = modulate_block(d1 + d2, cfg).samples
    rhs = modulate_block(d1, cfg).samples + modulate_block(d2, cfg).samples
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_frame_lengths_and_guards(rng):
    cfg = _cfg(K=64, N=2)
    assert cfg.guard_samples == 3072
    plan = make_frame_plan(cfg, 10, rng)
    f = assemble_frame(plan, cfg).samples
    assert f.size == 2 * (1024 + 3072) == 8192
    for n in range(2):
        start = n * 4096 + 1024
        assert not np.any(f[start: start + 3072])


def test_zero_guard_back_to_back(rng):
    cfg = _cfg(K=64, N=3, guard_ms=0.0)
    plan = make_frame_plan(cfg, 0, rng)
    f = assemble_frame(plan, cfg).samples
    blocks = [modulate_block(d, cfg).samples for d in plan.encoded]
    assert np.array_equal(f, np.concatenate(blocks))


def test_frame_plan_structure(rng):
    cfg = _cfg(K=8, N=4)
    plan = make_frame_plan(cfg, 10, rng)
    assert plan.encoded.shape == (4, 8)
    assert np.all(plan.encoded_idx[:, 0] == 0)
    ratios = plan.encoded[:, 1:] / plan.encoded[:, :-1]
    assert np.allclose(ratios, plan.original, atol=1e-12)
    # first 7 events of block 0 then the downward pass of block 1
    assert plan.pilot_positions == tuple([(0, k) for k in range(1, 8)] + [(1, 6), (1, 5), (1, 4)])


def test_traversal_events_zigzag():
    ev = list(traversal_events(4, 2))
    assert ev == [(0, 1, 0), (0, 2, 1), (0, 3, 2), (1, 2, 3), (1, 1, 2), (1, 0, 1)]


def test_dump_and_load(tmp_path, rng):
    cfg = _cfg(K=64, N=2)
    plan = make_frame_plan(cfg, 5, rng)
    frame = assemble_frame(plan, cfg)
    sidecar = dump_frame(tmp_path / "f.bin", frame, cfg, plan)
    raw = (tmp_path / "f.bin").read_bytes()
    assert len(raw) == frame.samples.size * 8
    assert np.array_equal(np.frombuffer(raw, "<f8"), frame.samples)
    meta = json.loads(sidecar.read_text())
    assert meta["guard_samples"] == 3072 and meta["psk_order"] == 4
    back, meta2 = load_frame(tmp_path / "f.bin")
    assert np.array_equal(back.samples, frame.samples) and meta2 == meta
