"""Link-level simulator and analytic toolkit for multi-device OFDM backscatter."""

__version__ = "0.1.0"

from .config import (AlphaOutOfRange, CapacityError, ChannelProfile, ConfigError,
                     CpTooShort, SystemConfig, ValidatedConfig, load_config,
                     make_config, validate)
from .allocation import AllocationMap, DeviceBins, build_allocation
from .ofdm import OfdmSymbol, demodulate, modulate_primary
from .backscatter import (BdProfile, ImpedancePair, apply_backscatter, bd_waveform,
                          device_profiles, reflection_coefficient)
from .channel import ChannelRealization, assemble_rx, draw, inject_cfo, propagate
from .detectors import (DetectionOutcome, TestStatistics, compensate_cfo,
                        detect_mfsk, detect_ofsk, detect_primary, estimate_cfo,
                        ml_detect_bd, receive_symbol, run_sic)
from .gilpelaez import ExponentialMixtureCF, MixtureCF, cdf_gil_pelaez
from .theory import (mfsk_error_averaged, mfsk_error_point, mfsk_slice,
                     ofsk_error_point, ofsk_operating_point, ofsk_slice,
                     optimize_threshold)
from .sumrate import RateBreakdown, SchemeMismatch, sum_rate
from .harness import MetricRecord, SweepSpec, run_roc, run_sweep, wilson_ci
