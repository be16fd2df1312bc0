"""Command-line entry point: ``psfft sweep|point|efficiency|dump-frame``."""
from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .bench import (DEFAULT_AXES, METHODS, BenchConfig, SweepSpec,
                    bandwidth_efficiency, frame_geometry, load_bench_config, run_point, run_sweep)
from .channel import load_channel_profile
from .core import ConfigurationError, PskConstellation
from .transmitter import assemble_frame, dump_frame, make_frame_plan

log = logging.getLogger("psfft")


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def _methods(text: str) -> tuple:
    names = tuple(m.strip() for m in text.split(",") if m.strip())
    bad = [m for m in names if m not in METHODS]
    if bad or not names:
        raise argparse.ArgumentTypeError(
            f"unknown method(s) {', '.join(bad) or '(none)'}; choose from {','.join(METHODS)}")
    return names


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML with ofdm/channel/demod/combiner sections")
    p.add_argument("--channel-profile", type=Path, help="YAML tap list overriding the config")
    p.add_argument("--trials", type=int, default=8)
    p.add_argument("--seed", type=int, default=1, help="master seed")
    p.add_argument("--methods", type=_methods, default=METHODS,
                   help="comma-separated subset of " + ",".join(METHODS))
    p.add_argument("--alpha", type=float, default=3e-4, help="Doppler factor when not swept")
    p.add_argument("--snr-db", type=float, default=30.0, help="SNR when not swept")
    p.add_argument("--carriers", type=int, default=1024, help="K when not swept")
    p.add_argument("--intervals", type=int, help="A for pfft/psfft")
    p.add_argument("--half-grid", type=int, help="L for ffft/psfft")
    p.add_argument("--fe-hz", type=float, help="fractional frequency step")
    p.add_argument("--mu", type=float)
    p.add_argument("--e-th", type=float)
    p.add_argument("--g-th", type=float)
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="psfft", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="MSE sweep written as CSV")
    sw.add_argument("axis", choices=sorted(DEFAULT_AXES))
    sw.add_argument("--values", type=_floats, help="axis points (default: standard axis)")
    sw.add_argument("--out", type=Path, required=True, help="per-trial CSV path")
    sw.add_argument("--summary", type=Path, help="per-point CSV (default: <out>.summary.csv)")
    _add_common(sw)

    pt = sub.add_parser("point", help="mean MSE/BER at one operating point")
    pt.add_argument("--blocks", type=int, help="N (default 8192/K)")
    _add_common(pt)

    ef = sub.add_parser("efficiency", help="bandwidth efficiency in bits/s/Hz")
    ef.add_argument("--order", type=int, default=4)
    ef.add_argument("--guard-ms", type=float, default=16.0)
    ef.add_argument("--bandwidth-hz", type=float, default=12e3)
    ef.add_argument("--carriers", type=int, nargs="+", default=[64, 128, 256, 512, 1024, 2048])

    df = sub.add_parser("dump-frame", help="write one transmitted frame as float64 binary")
    df.add_argument("--out", type=Path, required=True)
    df.add_argument("--config", type=Path)
    df.add_argument("--seed", type=int, default=1)
    df.add_argument("--pilots", type=int, default=250)
    return ap


def _bench_from_args(args) -> BenchConfig:
    bench = load_bench_config(args.config) if args.config else BenchConfig()
    if args.channel_profile:
        bench = replace(bench, taps=load_channel_profile(args.channel_profile)["taps"])
    for attr, key in (("intervals", "intervals"), ("half_grid", "half_grid"), ("fe_hz", "fe_hz")):
        v = getattr(args, attr)
        if v is not None:
            bench = replace(bench, **{key: v})
    comb = {k: getattr(args, k) for k in ("mu", "e_th", "g_th") if getattr(args, k) is not None}
    if comb:
        bench = replace(bench, combiner=replace(bench.combiner, **comb))
    bench.demod_for("psfft")  # validates A, L and fe
    return bench


def cmd_sweep(args) -> int:
    bench = _bench_from_args(args)
    values = args.values if args.values is not None else DEFAULT_AXES[args.axis]
    if args.axis == "carriers":
        values = tuple(int(v) for v in values)
    spec = SweepSpec(args.axis, values, args.methods, args.carriers, args.snr_db, args.alpha,
                     args.trials, args.seed, args.workers, bench)
    t0 = time.perf_counter()
    result = run_sweep(spec)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    result.write_csv(args.out)
    summary = args.summary or args.out.with_suffix(".summary.csv")
    result.write_summary(summary)
    log.info("%d records in %.1f s", len(result.records), time.perf_counter() - t0)
    for p in result.summary():
        print(f"{p.method:>14s}  {p.axis:<10.6g} mse {p.mse_db:8.2f} dB  ber {p.ber:.4f}")
    print(f"wrote {args.out} and {summary}")
    return 0


def cmd_point(args) -> int:
    bench = _bench_from_args(args)
    blocks = args.blocks or frame_geometry(bench.ofdm, args.carriers).blocks_per_frame
    res = run_point(args.methods, args.carriers, blocks, args.alpha, args.snr_db,
                    trials=args.trials, seed=args.seed, bench=bench, workers=args.workers)
    for m in args.methods:
        p = res[m]
        print(f"{m:>8s}  mse {p.mse_db:8.2f} dB  ber {p.ber:.4f}")
    return 0


def cmd_efficiency(args) -> int:
    for k in args.carriers:
        eta = bandwidth_efficiency(args.order, args.guard_ms * 1e-3, args.bandwidth_hz, k)
        print(f"K={k:<5d} {eta:.4f} bits/s/Hz")
    return 0


def cmd_dump_frame(args) -> int:
    bench = load_bench_config(args.config) if args.config else BenchConfig()
    cfg = bench.ofdm
    plan = make_frame_plan(cfg, args.pilots, np.random.default_rng(args.seed),
                           PskConstellation(bench.psk_order))
    path = dump_frame(args.out, assemble_frame(plan, cfg), cfg, plan)
    print(f"wrote {path}")
    return 0


COMMANDS = {"sweep": cmd_sweep, "point": cmd_point, "efficiency": cmd_efficiency,
            "dump-frame": cmd_dump_frame}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigurationError, ValueError, KeyError, OSError) as exc:
        print(f"psfft: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
