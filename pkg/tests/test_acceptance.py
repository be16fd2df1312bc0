"""
Acceptance suite.  Each criterion prints one PASS/FAIL line with the
measured numbers.  Run directly (``python tests/test_acceptance.py``) for
the summary alone.
"""
import functools
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent))

from psfft.bench import (BASELINE, SweepSpec, linear_reduction, run_sweep)  # noqa: E402
from psfft.channel import ChannelRealization, add_awgn, apply_doppler, receive  # noqa: E402
from psfft.core import ComplexBlock, OfdmConfig, PskConstellation  # noqa: E402
from psfft.demod import DemodConfig, psfft_demod, single_fft_demod  # noqa: E402
from psfft.detector import CombinerState, initial_weights, mse_of_trace, run_frame  # noqa: E402
from psfft.transmitter import assemble_frame, make_frame_plan  # noqa: E402
from test_detector import compare_with_reference, gradient_check  # noqa: E402

FS = 192e3


def report(n, ok, detail):
    print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
    return ok


@functools.lru_cache(maxsize=None)
def snr_sweep():
    t0 = time.perf_counter()
    res = run_sweep(SweepSpec("snr", (10.0, 15.0, 20.0, 25.0, 30.0),
                              ("single", "pfft", "ffft", "psfft"), trials=8))
    return res, time.perf_counter() - t0


@functools.lru_cache(maxsize=None)
def carrier_sweep():
    t0 = time.perf_counter()
    res = run_sweep(SweepSpec("carriers", (64, 128, 256, 512, 1024, 2048),
                              ("pfft", "ffft", "psfft"), trials=8))
    return res, time.perf_counter() - t0


def criterion_1():
    t0 = time.perf_counter()
    cfg = OfdmConfig()
    r = np.random.default_rng(101)
    worst_red, worst_add = 0.0, 0.0
    for _ in range(100):
        v = r.normal(size=cfg.samples_per_block) + 1j * r.normal(size=cfg.samples_per_block)
        x = single_fft_demod(v, cfg)
        z1 = psfft_demod(v, cfg, DemodConfig()).tensor[:, 0, 0]
        z3 = psfft_demod(v, cfg, DemodConfig(3, 0)).tensor[:, :, 0].sum(axis=1)
        worst_red = max(worst_red, np.max(np.abs(z1 - x)))
        worst_add = max(worst_add, np.max(np.abs(z3 - x)))
    dt = time.perf_counter() - t0
    ok = worst_red < 1e-12 and worst_add < 1e-12 and dt < 10
    return report(1, ok, f"reduction err {worst_red:.1e}, additivity err {worst_add:.1e}, {dt:.1f} s")


def criterion_2():
    t0 = time.perf_counter()
    cfg = OfdmConfig()
    con = PskConstellation(4)
    plan = make_frame_plan(cfg, 250, np.random.default_rng(7), con)
    blocks = receive(assemble_frame(plan, cfg), cfg, ChannelRealization())
    demod = DemodConfig()
    banks = [psfft_demod(b, cfg, demod) for b in blocks]
    trace, _ = run_frame(banks, CombinerState(initial_weights(demod), mu=0.0, pilots_remaining=250),
                         plan.encoded, con)
    exact = np.allclose(trace.b_tilde, trace.truth, atol=1e-12)
    mse = mse_of_trace(trace)
    dt = time.perf_counter() - t0
    return report(2, exact and mse <= -50 and dt < 5,
                  f"all symbols recovered: {exact}, MSE {mse:.1f} dB, {dt:.1f} s")


def criterion_3():
    t0 = time.perf_counter()
    worst_sq, worst_abs = gradient_check(50)
    dt = time.perf_counter() - t0
    return report(3, worst_sq < 1e-4 and dt < 5,
                  f"complex-square denominator rel err {worst_sq:.1e}; "
                  f"|x|^2 denominator rel err {worst_abs:.1e} (rejected); {dt:.2f} s")


def criterion_4():
    t0 = time.perf_counter()
    same, tr = compare_with_reference()
    dt = time.perf_counter() - t0
    return report(4, same and dt < 1,
                  f"bit-identical {same} over {len(tr)} events "
                  f"({int(tr.updated.sum())} updates, {int((~tr.updated).sum())} skips), {dt:.3f} s")


def criterion_5():
    res, dt = snr_sweep()
    m = {k: res.point(k, 30.0).mse_db for k in ("pfft", "ffft", "psfft")}
    gap = m["ffft"] - m["psfft"]
    ok = m["psfft"] < m["ffft"] < m["pfft"] and gap >= 4.0 and dt <= 600
    return report(5, ok, f"K=1024 alpha=3e-4 30 dB: psfft {m['psfft']:.2f}, ffft {m['ffft']:.2f}, "
                         f"pfft {m['pfft']:.2f} dB; psfft gain over ffft {gap:.2f} dB (need >= 4)")


def criterion_6():
    res, dt = carrier_sweep()
    ps = res.point("psfft", 2048).mse_db
    pf = res.point("pfft", 2048).mse_db
    ff = res.point("ffft", 2048).mse_db
    _, base = res.curve(BASELINE)
    mono = bool(np.all(np.diff(base) <= 0))
    ok = ps <= -11 and pf > -5 and ff > -5 and mono and dt <= 900
    return report(6, ok, f"K=2048: psfft {ps:.2f}, pfft {pf:.2f}, ffft {ff:.2f} dB; "
                         f"alpha=0 baseline {np.round(base, 2).tolist()} monotone {mono}; {dt:.0f} s")


def criterion_7():
    res, dt = snr_sweep()
    snrs, single = res.curve("single")
    _, ff = res.curve("ffft")
    _, ps = res.curve("psfft")
    spread = float(single.max() - single.min())
    below = bool(np.all(ps < ff))
    red = [linear_reduction(f, p) for f, p in zip(ff, ps)]
    ok = spread <= 2.0 and below and min(red) >= 0.5 and dt <= 600
    return report(7, ok, f"conventional spread {spread:.2f} dB (need <= 2); psfft < ffft everywhere "
                         f"{below}; reductions {[f'{x:.0%}' for x in red]} (need >= 50%)")


def criterion_8():
    t0 = time.perf_counter()
    n = np.arange(100_000)
    x = np.sqrt(2) * np.cos(2 * np.pi * 32e3 * n / FS)
    noise = add_awgn(ComplexBlock(x, FS), 30.0, 3, 12e3).samples - x
    spec = np.fft.rfft(noise)
    f = np.fft.rfftfreq(noise.size, 1 / FS)
    band = (f >= 26e3) & (f < 38e3)
    snr = 10 * np.log10(1.0 / (2 * np.sum(np.abs(spec[band]) ** 2) / noise.size ** 2))

    tone = np.cos(2 * np.pi * 32e3 * np.arange(int(FS * 0.5)) / FS)
    y = apply_doppler(ComplexBlock(tone, FS), 3e-4).samples[200:-200]
    y = y * np.hanning(y.size)
    m = np.arange(y.size)
    grid = 32e3 + np.arange(0.0, 20.0, 0.01)
    mags = np.concatenate([np.abs(np.exp(-2j * np.pi * np.outer(g, m) / FS) @ y)
                           for g in np.split(grid, 20)])
    shift = grid[int(np.argmax(mags))] - 32e3
    dt = time.perf_counter() - t0
    ok = abs(snr - 30) <= 0.2 and abs(shift - 9.6) <= 0.1 and dt < 10
    return report(8, ok, f"measured SNR {snr:.3f} dB (target 30), tone shift {shift:.2f} Hz, {dt:.1f} s")


def criterion_9(tmp_dir):
    spec = SweepSpec("doppler", (1e-5, 3e-4), ("single", "psfft"), trials=2, seed=11)
    paths = []
    for i in range(2):
        p = Path(tmp_dir) / f"run{i}.csv"
        run_sweep(spec).write_csv(p)
        paths.append(p)
    same = paths[0].read_bytes() == paths[1].read_bytes()
    return report(9, same, f"byte-identical CSV on re-run: {same}")


def test_criterion_1_reduction_identities():
    assert criterion_1()


def test_criterion_2_round_trip():
    assert criterion_2()


def test_criterion_3_gradient_check():
    assert criterion_3()


def test_criterion_4_algorithm_conformance():
    assert criterion_4()


def test_criterion_5_doppler_ordering():
    assert criterion_5()


def test_criterion_6_carrier_trend():
    assert criterion_6()


def test_criterion_7_snr_trend():
    assert criterion_7()


def test_criterion_8_noise_and_doppler_calibration():
    assert criterion_8()


def test_criterion_9_determinism(tmp_path):
    assert criterion_9(tmp_path)


if __name__ == "__main__":
    import tempfile
    with tempfile.TemporaryDirectory() as d:
        results = [criterion_1(), criterion_2(), criterion_3(), criterion_4(), criterion_5(),
                   criterion_6(), criterion_7(), criterion_8(), criterion_9(d)]
    print(f"\n{sum(results)}/{len(results)} criteria pass")
    sys.exit(0 if all(results) else 1)
