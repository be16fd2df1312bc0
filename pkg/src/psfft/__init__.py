"""Partial-interval, fractional-frequency FFT demodulation with adaptive
combining for differentially coded OFDM over Doppler-distorted channels."""
from .core import (ComplexBlock, ConfigurationError, FramingError, OfdmConfig,
                   PskConstellation, load_ofdm_config, nearest_symbol)
from .transmitter import (FramePlan, assemble_frame, differential_encode, make_frame_plan,
                          modulate_block)
from .channel import (ChannelRealization, PathTap, add_awgn, apply_doppler, apply_multipath,
                      default_taps, receive, simulate_channel, to_baseband)
from .demod import DemodBankOutput, DemodConfig, psfft_demod, single_fft_demod
from .detector import (CombinerState, DetectionTrace, initial_weights, mse_of_trace, run_block,
                       run_frame, sga_gradient)
from .bench import (BenchConfig, SweepResult, SweepSpec, bandwidth_efficiency, run_point,
                    run_sweep)

__version__ = "0.1.0"
