"""Capon, MMSE and shrinkage-corrected Capon+ beamformers with their
bias/variance/MSE theory, and a reproducible Monte-Carlo harness for signal
power estimation experiments."""

from ._version import __version__
from .arraymodel import (
    ArrayGeometry,
    CovarianceModel,
    SourceScene,
    SourceSpec,
    TheoryReport,
    alpha_from_kurtosis,
    bias_theory,
    build_cov_model,
    build_incm,
    capon_bias,
    capon_output_power,
    cov_model_from_parts,
    power_variance_gaussian,
    single_interferer_bias,
    steering_vector,
    theory_report,
    waveform_mse_theory,
)
from .beamformers import (
    BeamformerKind,
    BeamformerWeights,
    ShrinkageFactor,
    adaptive_capon_weights,
    apply_weights,
    capon_plus_weights,
    capon_weights,
    cb_weights,
    mmse_weights,
)
from .errors import (
    CaponPlusError,
    ConfigError,
    DegenerateDenominator,
    DegenerateSample,
    DimensionMismatch,
    DomainError,
    EmptyBatch,
    InsufficientSecondarySamples,
    InsufficientTrials,
    NonPositiveQuadraticForm,
    NotPositiveDefinite,
    ParseError,
    TrialFailureError,
    ValidationError,
)
from .estimation import (
    PowerEstimate,
    PowerEstimator,
    SampleCovariance,
    alpha_hat_scenario_a,
    alpha_hat_scenario_b,
    debiased_power,
    debiased_power_scaled,
    fourth_moment,
    kurtosis_estimate,
    negative_log_likelihood,
    power_estimate,
    scm,
)
from .linalg import (
    CholeskyFactor,
    cholesky,
    hermitian_matrix,
    quadratic_form,
    rank1_update_inverse,
    solve_hpd,
)
from .metrics import AggregateRecord, TrialRecord, aggregate, relative_bias, se_nmse, sp_nmse
from .montecarlo import (
    PskAlphaMode,
    Regime,
    ScenarioConfig,
    ScenarioReport,
    SweepSpec,
    SweepVariable,
    default_scene,
    run_scenario,
    run_trial,
    snr_to_scene,
)
from .signalsim import (
    RngStream,
    SnapshotBatch,
    StreamRole,
    TrialRngs,
    WaveformKind,
    draw_interference_noise,
    draw_waveform,
    synth_scene_secondary,
    synth_scene_snapshots,
    synth_secondary,
    synth_snapshots,
)

__all__ = [name for name in dir() if not name.startswith("_")]
