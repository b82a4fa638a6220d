"""Noise-protected key distribution: channel model, bit-pool protocol,
privacy amplification and adversary analysis."""

from .adversary import (BitDensities, EveStatistics, MutualInfoTable, NumericalFailure, bayes_error_prob,
                        eve_statistics, leak_per_bit, monte_carlo_error_prob, mutual_information_table,
                        renyi_entropy_per_bit)
from .entropy import EntropySource, SeededEntropy, SystemEntropy
from .experiments import ExperimentSpec, capture_eve, run_experiment
from .noise import BasisGrid, ChannelParams, detector_counts, overlap_magnitude_sq, sample_measured_phase, sigma_phi
from .pa import (PoolStarvation, RoundDims, ToeplitzHash, build_toeplitz, dims_for_round, eve_bound_corollary5,
                 eve_entropy_gap, hash_apply, max_run_length)
from .protocol import (AuditReport, ProtocolError, SessionConfig, SessionState, alice_round, audit_pool,
                       bob_round, init_session, run_session)
from .stokes import delta_k_resolution, j_moments, stokes_from_components, tan_extrema
from .transport import (ChannelPair, FrameType, WireFrame, decode_frame, encode_frame, make_inproc_pair,
                        make_stream_pair)
from .wheel import basis_from_bits, decode_with_basis, encode

__version__ = "0.1.0"
