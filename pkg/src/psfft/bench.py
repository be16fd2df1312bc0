"""
Monte-Carlo driver for the MSE sweeps over Doppler factor, carrier count
and SNR.

A trial draws one frame, passes it through the channel once and runs every
requested method on the same received signal.  Trial seeds depend only on
``(master seed, trial index)``, so all methods and all points of a sweep
share data and noise realisations (common random numbers) while the tap
profile never changes.
"""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .channel import ChannelRealization, default_taps, receive, taps_from_pairs
from .core import ConfigurationError, OfdmConfig, PskConstellation, load_yaml
from .demod import DemodConfig, psfft_demod
from .detector import CombinerState, bit_errors, initial_weights, mse_linear, run_frame, to_db
from .transmitter import assemble_frame, make_frame_plan

log = logging.getLogger(__name__)

METHODS = ("single", "pfft", "ffft", "psfft")
BASELINE = "single-alpha0"
FRAME_SYMBOLS = 8192
CARRIER_AXIS = (64, 128, 256, 512, 1024, 2048)
DOPPLER_AXIS = (1e-6, 1e-5, 5e-5, 1e-4, 2e-4, 3e-4)
SNR_AXIS = (10.0, 15.0, 20.0, 25.0, 30.0)


@dataclass(frozen=True)
class CombinerSettings:
    mu: float = 0.1
    e_th: float = 1.0
    g_th: float = 100.0
    pilots: int = 250


@dataclass(frozen=True)
class BenchConfig:
    """Everything a trial needs apart from the swept quantity."""

    ofdm: OfdmConfig = field(default_factory=OfdmConfig)
    taps: tuple = field(default_factory=default_taps)
    combiner: CombinerSettings = field(default_factory=CombinerSettings)
    intervals: int = 3
    half_grid: int = 1
    fe_hz: float | None = None
    alpha_max: float = 3e-4
    psk_order: int = 4

    @property
    def fe(self) -> float:
        if self.fe_hz is not None:
            return self.fe_hz
        return 2.0 * self.alpha_max * self.ofdm.center_freq_hz

    def demod_for(self, method: str) -> DemodConfig:
        """Bank layout of each method: single (1, 0), pfft (A, 0),
        ffft (1, L), psfft (A, L)."""
        if method not in METHODS:
            raise ConfigurationError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
        A = self.intervals if method in ("pfft", "psfft") else 1
        L = self.half_grid if method in ("ffft", "psfft") else 0
        return DemodConfig(A, L, self.fe if L else 0.0)


def frame_geometry(ofdm: OfdmConfig, carriers: int) -> OfdmConfig:
    """Config with ``carriers`` and ``blocks_per_frame = 8192 / carriers``."""
    if FRAME_SYMBOLS % carriers:
        raise ConfigurationError(f"{carriers} carriers do not divide {FRAME_SYMBOLS}")
    return replace(ofdm, carriers=carriers, blocks_per_frame=FRAME_SYMBOLS // carriers)


@dataclass(frozen=True)
class TrialResult:
    mse: float          # linear, decision-directed carriers only
    bit_errors: int
    bits: int
    detections: int

    @property
    def mse_db(self) -> float:
        return to_db(self.mse)

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else math.nan


def trial_seeds(master: int, trial: int) -> tuple[int, int]:
    """``(data seed, noise seed)`` for one trial."""
    data, noise = np.random.SeedSequence([master, trial]).generate_state(2)
    return int(data), int(noise)


def simulate_trial(ofdm: OfdmConfig, alpha: float, snr_db: float, methods: Sequence[str],
                   bench: BenchConfig, master_seed: int, trial: int) -> dict[str, TrialResult]:
    """One frame through the channel, demodulated by each method."""
    data_seed, noise_seed = trial_seeds(master_seed, trial)
    con = PskConstellation(bench.psk_order)
    cs = bench.combiner
    plan = make_frame_plan(ofdm, cs.pilots, np.random.default_rng(data_seed), con)
    frame = assemble_frame(plan, ofdm)
    chan = ChannelRealization(bench.taps, alpha, snr_db, noise_seed)
    blocks = receive(frame, ofdm, chan)
    out = {}
    for method in methods:
        demod = bench.demod_for(method)
        banks = [psfft_demod(b, ofdm, demod).stacked for b in blocks]
        # the conventional receiver has a single output per carrier and no combiner to adapt
        mu = 0.0 if method == "single" else cs.mu
        state = CombinerState(initial_weights(demod), mu, cs.e_th, cs.g_th,
                              pilots_remaining=cs.pilots)
        trace, _ = run_frame(banks, state, plan.encoded, con)
        errs, bits = bit_errors(trace, con)
        out[method] = TrialResult(mse_linear(trace), errs, bits, int((~trace.training).sum()))
    return out


@dataclass(frozen=True)
class Record:
    method: str
    axis: float
    trial: int
    result: TrialResult


@dataclass(frozen=True)
class PointSummary:
    method: str
    axis: float
    mse_db: float
    ber: float
    trials: int
    detections: int


def aggregate(records: Sequence[Record]) -> list[PointSummary]:
    """Mean of linear MSE per (method, axis) converted to dB once."""
    groups: dict[tuple, list[Record]] = {}
    for r in records:
        groups.setdefault((r.method, r.axis), []).append(r)
    out = []
    for (method, axis), rs in groups.items():
        mse = float(np.mean([r.result.mse for r in rs]))
        errs = sum(r.result.bit_errors for r in rs)
        bits = sum(r.result.bits for r in rs)
        out.append(PointSummary(method, axis, to_db(mse), errs / bits if bits else math.nan,
                                len(rs), sum(r.result.detections for r in rs)))
    return out


@dataclass
class SweepResult:
    axis_name: str
    records: list[Record]
    methods: tuple

    def summary(self) -> list[PointSummary]:
        order = {m: i for i, m in enumerate(self.methods)}
        return sorted(aggregate(self.records), key=lambda p: (order[p.method], p.axis))

    def curve(self, method: str) -> tuple[np.ndarray, np.ndarray]:
        """Axis values and mean MSE (dB) of one method."""
        pts = [p for p in self.summary() if p.method == method]
        return np.array([p.axis for p in pts]), np.array([p.mse_db for p in pts])

    def point(self, method: str, axis: float) -> PointSummary:
        for p in self.summary():
            if p.method == method and math.isclose(p.axis, axis, rel_tol=1e-12):
                return p
        raise KeyError((method, axis))

    def write_csv(self, path) -> None:
        """Per-trial rows: ``method, axis, trial, mse_db, ber``."""
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["method", "axis", "trial", "mse_db", "ber"])
            for r in self.records:
                wr.writerow([r.method, _fmt_axis(r.axis), r.trial,
                             f"{r.result.mse_db:.6f}", f"{r.result.ber:.8f}"])

    def write_summary(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["method", self.axis_name, "trials", "mse_db", "ber", "detections"])
            for p in self.summary():
                wr.writerow([p.method, _fmt_axis(p.axis), p.trials,
                             f"{p.mse_db:.6f}", f"{p.ber:.8f}", p.detections])


def _fmt_axis(v: float) -> str:
    return f"{v:.6g}"


@dataclass(frozen=True)
class SweepSpec:
    """Swept axis plus the fixed parameters of the other two."""

    axis: str
    values: tuple
    methods: tuple = METHODS
    carriers: int = 1024
    snr_db: float = 30.0
    alpha: float = 3e-4
    trials: int = 8
    seed: int = 1
    workers: int = 1
    bench: BenchConfig = field(default_factory=BenchConfig)

    def __post_init__(self):
        if self.axis not in ("doppler", "carriers", "snr"):
            raise ConfigurationError(f"unknown sweep axis {self.axis!r}")
        if len(self.values) == 0:
            raise ConfigurationError("sweep axis is empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ConfigurationError("sweep values must be strictly increasing")
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigurationError(f"unknown method {m!r}")
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "methods", tuple(self.methods))


def _run_task(task):
    ofdm, alpha, snr, methods, bench, seed, trial, axis_value, rename = task
    res = simulate_trial(ofdm, alpha, snr, methods, bench, seed, trial)
    return [Record(rename.get(m, m), axis_value, trial, r) for m, r in res.items()]


def _execute(tasks, workers: int) -> list[Record]:
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_task, tasks))
    else:
        chunks = []
        for i, t in enumerate(tasks):
            chunks.append(_run_task(t))
            log.debug("task %d/%d done", i + 1, len(tasks))
    return [r for c in chunks for r in c]


def _sorted(records, methods) -> list[Record]:
    order = {m: i for i, m in enumerate(methods)}
    return sorted(records, key=lambda r: (order[r.method], r.axis, r.trial))


def run_point(method: str | Sequence[str], carriers: int, blocks: int, alpha: float,
              snr_db: float, demod: DemodConfig | None = None, trials: int = 8,
              seed: int = 1, bench: BenchConfig | None = None,
              workers: int = 1) -> dict[str, PointSummary]:
    """Mean MSE/BER of one or more methods at a single operating point.

    ``demod`` overrides the interval count, half grid and ``fe`` used by the
    adaptive methods.
    """
    bench = bench or BenchConfig()
    if demod is not None:
        bench = replace(bench, intervals=demod.intervals, half_grid=demod.half_grid,
                        fe_hz=demod.fe_hz if demod.half_grid else bench.fe_hz)
    methods = (method,) if isinstance(method, str) else tuple(method)
    for m in methods:
        bench.demod_for(m)
    ofdm = replace(bench.ofdm, carriers=carriers, blocks_per_frame=blocks)
    tasks = [(ofdm, alpha, snr_db, methods, bench, seed, t, 0.0, {}) for t in range(trials)]
    records = _execute(tasks, workers)
    return {p.method: p for p in aggregate(records)}


def _fe_bench(spec: SweepSpec, alphas) -> BenchConfig:
    bench = spec.bench
    if bench.fe_hz is None:
        top = max(alphas)
        if top > 0:
            bench = replace(bench, alpha_max=top)
    return bench


def sweep_doppler(spec: SweepSpec) -> SweepResult:
    bench = _fe_bench(spec, spec.values)
    ofdm = frame_geometry(bench.ofdm, spec.carriers)
    tasks = [(ofdm, a, spec.snr_db, spec.methods, bench, spec.seed, t, a, {})
             for a in spec.values for t in range(spec.trials)]
    return SweepResult("alpha", _sorted(_execute(tasks, spec.workers), spec.methods), spec.methods)


def sweep_carriers(spec: SweepSpec) -> SweepResult:
    """Includes the conventional detector without Doppler as ``single-alpha0``."""
    for k in spec.values:
        if k not in CARRIER_AXIS:
            raise ConfigurationError(f"carrier count {k} not in {CARRIER_AXIS}")
    bench = _fe_bench(spec, [spec.alpha])
    tasks = []
    for k in spec.values:
        ofdm = frame_geometry(bench.ofdm, int(k))
        for t in range(spec.trials):
            tasks.append((ofdm, spec.alpha, spec.snr_db, spec.methods, bench, spec.seed, t, k, {}))
            tasks.append((ofdm, 0.0, spec.snr_db, ("single",), bench, spec.seed, t, k,
                          {"single": BASELINE}))
    methods = spec.methods + (BASELINE,)
    return SweepResult("carriers", _sorted(_execute(tasks, spec.workers), methods), methods)


def sweep_snr(spec: SweepSpec) -> SweepResult:
    bench = _fe_bench(spec, [spec.alpha])
    ofdm = frame_geometry(bench.ofdm, spec.carriers)
    tasks = [(ofdm, spec.alpha, s, spec.methods, bench, spec.seed, t, s, {})
             for s in spec.values for t in range(spec.trials)]
    return SweepResult("snr_db", _sorted(_execute(tasks, spec.workers), spec.methods), spec.methods)


SWEEPS = {"doppler": sweep_doppler, "carriers": sweep_carriers, "snr": sweep_snr}
DEFAULT_AXES = {"doppler": DOPPLER_AXIS, "carriers": CARRIER_AXIS, "snr": SNR_AXIS}


def run_sweep(spec: SweepSpec) -> SweepResult:
    return SWEEPS[spec.axis](spec)


def bandwidth_efficiency(order: int, guard_s: float, bandwidth_hz: float, carriers: float) -> float:
    """Bits/s/Hz of the guarded OFDM link: ``log2(M) / (1 + Tg*B/K)``."""
    return math.log2(order) / (1.0 + guard_s * bandwidth_hz / carriers)


def linear_reduction(mse_db_ref: float, mse_db_new: float) -> float:
    """Fractional drop in linear MSE going from ``ref`` to ``new``."""
    return 1.0 - 10 ** ((mse_db_new - mse_db_ref) / 10)



def load_bench_config(path) -> BenchConfig:
    """Build a :class:`BenchConfig` from a YAML file with optional
    ``ofdm``, ``channel``, ``demod`` and ``combiner`` sections."""
    data = load_yaml(path)
    unknown = set(data) - {"ofdm", "channel", "demod", "combiner"}
    if unknown:
        raise ConfigurationError(f"{path}: unknown sections {sorted(unknown)}")
    bench = BenchConfig()
    if "ofdm" in data:
        bench = replace(bench, ofdm=OfdmConfig.from_mapping(data["ofdm"]))
    if "channel" in data:
        bench = replace(bench, taps=taps_from_pairs(data["channel"]["taps"]))
    demod = data.get("demod", {})
    bad = set(demod) - {"intervals", "half_grid", "fe_hz", "alpha_max"}
    if bad:
        raise ConfigurationError(f"{path}: unknown demod keys {sorted(bad)}")
    bench = replace(bench, **demod)
    comb = data.get("combiner", {})
    bad = set(comb) - set(CombinerSettings.__dataclass_fields__)
    if bad:
        raise ConfigurationError(f"{path}: unknown combiner keys {sorted(bad)}")
    return replace(bench, combiner=CombinerSettings(**comb))
