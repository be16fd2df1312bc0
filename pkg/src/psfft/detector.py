"""
Differentially coherent detection with stochastic-gradient combining.

Carriers of a block are visited in one direction, the next block in the
other (zigzag), and the combiner weights are carried carrier to carrier and
block to block.  Each step forms ``b_hat = x_k / x_prev`` and, when both the
error and the gradient energy are under their thresholds, moves the weights
along the magnitude-scaled gradient.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import PskConstellation, nearest_symbol
from .demod import DemodBankOutput, DemodConfig

DEGENERATE_FLOOR = 1e-12
MSE_FLOOR_DB = -80.0


def _floored(x_prev: complex) -> complex:
    mag = abs(x_prev)
    if mag >= DEGENERATE_FLOOR:
        return x_prev
    if mag == 0:
        return complex(DEGENERATE_FLOOR)
    return x_prev * (DEGENERATE_FLOOR / mag)


def is_degenerate(x_prev: complex) -> bool:
    return abs(x_prev) < DEGENERATE_FLOOR


def differential_detect(x_k: complex, x_prev: complex) -> complex:
    """``x_k / x_prev``, with ``|x_prev|`` floored at 1e-12.

    Use :func:`is_degenerate` to decide whether the step may update weights.
    """
    return x_k / _floored(x_prev)


def sga_gradient(z_k, z_prev, x_k: complex, x_prev: complex, e_k: complex) -> np.ndarray:
    """Negative conjugate-gradient of ``|e_k|^2`` for shared weights:
    ``(z_k x_prev - x_k z_prev) conj(e_k) / x_prev**2``."""
    z_k = np.asarray(z_k)
    z_prev = np.asarray(z_prev)
    if z_k.shape != z_prev.shape:
        raise ValueError("z_k and z_prev differ in shape")
    if is_degenerate(x_prev):
        raise ZeroDivisionError("degenerate previous symbol")
    return (z_k * x_prev - x_k * z_prev) * (np.conj(e_k) / x_prev ** 2)


def scale_gradient(g_k, x_prev: complex) -> np.ndarray:
    return abs(x_prev) * np.asarray(g_k)


def update_weights(w_k, g_bar, mu: float) -> np.ndarray:
    w_k = np.asarray(w_k)
    g_bar = np.asarray(g_bar)
    if w_k.shape != g_bar.shape:
        raise ValueError("weight and gradient dimensions differ")
    return w_k + mu * g_bar


def initial_weights(demod: DemodConfig) -> np.ndarray:
    """Ones on every zero-offset slot: reproduces the single-FFT output."""
    w = np.zeros((demod.intervals, 2 * demod.half_grid + 1), dtype=complex)
    w[:, demod.half_grid] = 1.0
    return w.ravel()


@dataclass(frozen=True)
class CombinerState:
    """Weight carried between blocks plus the adaptation settings."""

    w_temp: np.ndarray
    mu: float = 0.1
    e_th: float = 1.0
    g_th: float = 100.0
    flag: int = 1
    pilots_remaining: int = 0

    def __post_init__(self):
        if self.flag not in (1, -1):
            raise ValueError("flag must be +1 or -1")
        object.__setattr__(self, "w_temp", np.array(self.w_temp, dtype=complex))

    @property
    def mode(self) -> str:
        return "training" if self.pilots_remaining > 0 else "decision-directed"


@dataclass(frozen=True)
class DetectionTrace:
    """One record per detection event, stored column-wise.

    ``truth`` is the transmitted ratio ``d_k / d_prev`` (NaN when unknown).
    """

    block: np.ndarray
    k: np.ndarray
    x: np.ndarray
    b_hat: np.ndarray
    b_tilde: np.ndarray
    err2: np.ndarray
    updated: np.ndarray
    training: np.ndarray
    degenerate: np.ndarray
    truth: np.ndarray

    def __len__(self):
        return self.k.size

    @classmethod
    def concat(cls, traces) -> "DetectionTrace":
        traces = list(traces)
        return cls(*(np.concatenate([getattr(t, f) for t in traces])
                     for f in cls.__dataclass_fields__))

    def to_csv(self, path) -> None:
        """Write ``block, k, x_re, x_im, b_hat_re, b_hat_im, b_tilde_re,
        b_tilde_im, err2, updated``."""
        import csv
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["block", "k", "x_re", "x_im", "b_hat_re", "b_hat_im",
                         "b_tilde_re", "b_tilde_im", "err2", "updated"])
            for i in range(len(self)):
                vals = (self.x[i].real, self.x[i].imag, self.b_hat[i].real, self.b_hat[i].imag,
                        self.b_tilde[i].real, self.b_tilde[i].imag, self.err2[i])
                wr.writerow([int(self.block[i]), int(self.k[i]),
                             *(repr(float(v)) for v in vals), int(self.updated[i])])


def run_block(z, state: CombinerState, reference=None,
              constellation: PskConstellation | None = None,
              block_index: int = 0) -> tuple[DetectionTrace, CombinerState]:
    """Detect one block and adapt the combiner.

    ``z`` is a :class:`DemodBankOutput` or a ``(K, D)`` stacked array.
    ``reference`` holds the block's transmitted (encoded) symbols; it is
    required while pilots remain and otherwise only fills ``truth``.
    """
    con = constellation or PskConstellation(4)
    if isinstance(z, DemodBankOutput):
        z = z.stacked
    z = np.asarray(z, dtype=complex)
    K = z.shape[0]
    if z.shape[1] != state.w_temp.size:
        raise ValueError(f"weights have length {state.w_temp.size}, outputs {z.shape[1]}")
    if state.pilots_remaining > 0 and reference is None:
        raise ValueError("pilots remain but no reference symbols were given")
    ref = None if reference is None else np.asarray(reference, dtype=complex)

    flag = state.flag
    mu, e_th, g_th = state.mu, state.e_th, state.g_th
    pilots = state.pilots_remaining
    k = 0 if flag == 1 else K - 1
    w = state.w_temp.copy()
    x_prev = complex(np.vdot(w, z[k]))
    k += flag

    n_ev = K - 1
    ks = np.empty(n_ev, dtype=np.int64)
    xs = np.empty(n_ev, dtype=complex)
    bh = np.empty(n_ev, dtype=complex)
    bt = np.empty(n_ev, dtype=complex)
    e2 = np.empty(n_ev)
    upd = np.zeros(n_ev, dtype=bool)
    trn = np.zeros(n_ev, dtype=bool)
    deg = np.zeros(n_ev, dtype=bool)
    truth = np.full(n_ev, np.nan + 0j)
    i = 0
    while 0 <= k < K:
        x = complex(np.vdot(w, z[k]))
        degenerate = abs(x_prev) < DEGENERATE_FLOOR
        b_hat = x / _floored(x_prev)
        if ref is not None:
            truth[i] = ref[k] / ref[k - flag]
        if pilots > 0:
            b_tilde = complex(truth[i])
            pilots -= 1
            trn[i] = True
        else:
            b_tilde = nearest_symbol(b_hat, con)
        e = b_tilde - b_hat
        if not degenerate:
            g = sga_gradient(z[k], z[k - flag], x, x_prev, e)
            gg = float(np.vdot(g, g).real)
            if abs(e) < e_th and gg < g_th:
                w = update_weights(w, scale_gradient(g, x_prev), mu)
                upd[i] = True
        ks[i], xs[i], bh[i], bt[i] = k, x, b_hat, b_tilde
        e2[i] = abs(e) ** 2
        deg[i] = degenerate
        x_prev = x
        k += flag
        i += 1

    trace = DetectionTrace(np.full(n_ev, block_index), ks, xs, bh, bt, e2, upd, trn, deg, truth)
    new_state = replace(state, w_temp=w, flag=-flag, pilots_remaining=pilots)
    return trace, new_state


def run_frame(banks, state: CombinerState, encoded=None,
              constellation: PskConstellation | None = None) -> tuple[DetectionTrace, CombinerState]:
    """Run :func:`run_block` over consecutive blocks of a frame."""
    traces = []
    for n, z in enumerate(banks):
        ref = None if encoded is None else encoded[n]
        tr, state = run_block(z, state, ref, constellation, block_index=n)
        traces.append(tr)
    return DetectionTrace.concat(traces), state


def _decision_directed(trace: DetectionTrace) -> np.ndarray:
    mask = ~trace.training
    if not mask.any():
        raise ValueError("trace has no decision-directed carriers")
    return mask


def mse_linear(trace: DetectionTrace) -> float:
    """Mean ``|b_tilde - b_hat|^2`` over decision-directed carriers."""
    return float(np.mean(trace.err2[_decision_directed(trace)]))


def to_db(mse: float) -> float:
    if mse <= 0:
        return MSE_FLOOR_DB
    return max(10.0 * math.log10(mse), MSE_FLOOR_DB)


def mse_of_trace(trace: DetectionTrace) -> float:
    """Decision-directed MSE in dB, floored at -80 dB."""
    return to_db(mse_linear(trace))


def bit_errors(trace: DetectionTrace, constellation: PskConstellation | None = None) -> tuple[int, int]:
    """``(bit errors, bits)`` over decision-directed carriers with known truth."""
    con = constellation or PskConstellation(4)
    mask = _decision_directed(trace) & ~np.isnan(trace.truth)
    if not mask.any():
        return 0, 0
    got = con.gray(con.decide(trace.b_hat[mask]))
    want = con.gray(con.decide(trace.truth[mask]))
    diff = np.bitwise_xor(got, want)
    nbits = int(round(con.bits_per_symbol))
    errs = sum(int(np.sum((diff >> j) & 1)) for j in range(nbits))
    return errs, nbits * int(mask.sum())
