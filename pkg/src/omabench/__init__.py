"""Noise-robustness workbench for output-only modal identification.

Simulates transient vibration of single-span beams, corrupts the records
with RMS-scaled Gaussian noise, identifies modal parameters with peak
picking, frequency domain decomposition and stochastic subspace
identification, and benchmarks identification quality over a Monte Carlo
campaign.
"""

from .beam import (BeamModel, BeamSection, GlobalSystem, Material, ModalSolution,
                   SUPPORTS, analytical_frequencies, assemble_model,
                   characteristic_roots, modal_analysis, recording_duration,
                   transient_response)
from .dsp import (MultiChannelRecord, SpectralEstimatorOptions, SpectralMatrix,
                  band_limited_force, csd_matrix, derive_seed, psd)
from .freqdom import (AnpsdCurve, IdentifiedMode, IdentifiedModeSet, Peak,
                      PeakOptions, align_to_real, anpsd, fdd_identify,
                      pick_peaks, pp_identify, singular_value_curve,
                      unit_normalize)
from .harness import (BeamConfig, BenchmarkReport, CampaignConfig, DEFAULT_SEED,
                      ModeOutcome, MethodResult, RunResult, default_beams,
                      run_campaign, run_single, simulate_beam,
                      summarize_and_tables)
from .metrics import ModePairing, mac, pair_to_reference, relative_error
from .noise import NoiseSpec, SnrReport, corrupt, make_noise, noise_level_to_snr_db
from .ssi import (HankelOptions, StabilityTolerances, StabilizationDiagram,
                  build_hankel, realize_modes, ssi_identify, stabilization)

__version__ = "0.1.0"
