"""Monte-Carlo orchestration of the power-estimation experiments.

Five regimes are supported, each sweeping SNR or the secondary sample count:

``oracle``
    True covariances and SOI power are known; beamformers use the exact
    weights.  Methods: CB, Capon, MMSE, CaponPlus.
``a``
    INCM known, SOI power estimated by the debiased Capon estimator; the
    shrinkage factor is its adaptive plug-in.  Adds a ``Debiased`` power row.
``b``
    SOI power known, covariance estimated by the SCM of the same snapshots
    used for beamforming (requires ``T > M``).
``c``
    SOI power known, INCM estimated from an SOI-free secondary batch of
    ``T0 > M`` snapshots; weights use the estimated INCM in the Q-form.
``d``
    As ``c`` but with the SOI power estimated via the inverse-Wishart
    corrected debiased estimator (``c = T0 / (T0 - M)``).

An additional ``alpha_sweep`` mode tabulates the closed-form power NMSE and
bias of ``alpha * gamma_hat_cap`` over a grid of shrinkage factors; it needs
no Monte-Carlo trials.

Reports are a pure function of the configuration: trials are seeded by
``(master_seed, trial_index)``, run independently (optionally across
processes), and aggregated in trial-index order, so the thread count never
changes any output bit.
"""

from __future__ import annotations

import enum
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._version import __version__
from .arraymodel import (
    ArrayGeometry,
    CovarianceModel,
    SourceScene,
    SourceSpec,
    TheoryReport,
    alpha_from_kurtosis,
    build_cov_model,
    theory_report,
    waveform_mse_theory,
)
from .beamformers import (
    BeamformerWeights,
    ShrinkageFactor,
    adaptive_capon_weights,
    apply_weights,
    capon_plus_weights,
    capon_weights,
    cb_weights,
    mmse_weights,
)
from .errors import ConfigError, DomainError, NotPositiveDefinite, TrialFailureError
from .linalg import quadratic_form
from .estimation import (
    alpha_hat_scenario_a,
    alpha_hat_scenario_b,
    debiased_power,
    debiased_power_scaled,
    kurtosis_estimate,
    scm,
)
from .metrics import AggregateRecord, TrialRecord, aggregate
from .signalsim import (
    TrialRngs,
    WaveformKind,
    output_fourth_moment,
    output_kurtosis,
    synth_scene_secondary,
    synth_scene_snapshots,
)

__all__ = [
    "Regime",
    "SweepVariable",
    "PskAlphaMode",
    "SweepSpec",
    "ScenarioConfig",
    "SweepPointResult",
    "ScenarioReport",
    "default_scene",
    "snr_to_scene",
    "build_context",
    "run_trial",
    "run_scenario",
    "DEFAULT_GEOMETRY",
    "DEFAULT_SOI_DOA_DEG",
    "DEFAULT_INTERFERER_DOAS_DEG",
    "DEFAULT_INTERFERER_OFFSETS_DB",
]

# Experiment constants of the reference setup: 25-element half-wavelength ULA,
# SOI at -45.02 deg, three interferers 2/4/6 dB below the SOI, unit noise.
DEFAULT_GEOMETRY = ArrayGeometry(antennas=25, d_over_lambda=0.5)
DEFAULT_SOI_DOA_DEG = -45.02
DEFAULT_INTERFERER_DOAS_DEG = (-30.02, -20.02, -3.0)
DEFAULT_INTERFERER_OFFSETS_DB = (2.0, 4.0, 6.0)

MAX_FAILURE_SHARE = 0.01


class Regime(enum.Enum):
    ORACLE = "oracle"
    A = "a"
    B = "b"
    C = "c"
    D = "d"
    ALPHA_SWEEP = "alpha_sweep"


class SweepVariable(enum.Enum):
    SNR_DB = "snr_db"
    T0 = "t0"
    ALPHA = "alpha"


class PskAlphaMode(enum.Enum):
    """How the oracle-regime shrinkage is chosen for constant-modulus sources.

    ``kappa_minus_one`` applies the constant-modulus kurtosis shortcut
    (exact at high SNR), ``exact`` evaluates the population kurtosis of the
    Capon output, and ``measured`` estimates the kurtosis per trial from the
    beamformed samples.
    """

    KAPPA_MINUS_ONE = "kappa_minus_one"
    EXACT = "exact"
    MEASURED = "measured"


@dataclass(frozen=True)
class SweepSpec:
    variable: SweepVariable
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))


@dataclass(frozen=True)
class ScenarioConfig:
    regime: Regime
    geom: ArrayGeometry
    base_scene: SourceScene
    waveform: WaveformKind
    snapshots: int
    secondary_snapshots: int
    trials: int
    master_seed: int
    sweep: SweepSpec
    psk_alpha_mode: PskAlphaMode = PskAlphaMode.KAPPA_MINUS_ONE

    def validate(self) -> None:
        """Raise :class:`ConfigError` listing every violated invariant."""
        problems: list[str] = []
        m = self.geom.antennas
        sweep_var = self.sweep.variable
        if not self.sweep.values:
            problems.append("sweep.values must not be empty")
        if (self.regime is Regime.ALPHA_SWEEP) != (sweep_var is SweepVariable.ALPHA):
            problems.append("the alpha sweep variable pairs exclusively with the alpha_sweep regime")
        if self.snapshots < 1:
            problems.append(f"snapshots must be >= 1, got {self.snapshots}")
        if self.regime is not Regime.ALPHA_SWEEP and self.trials < 100:
            problems.append(f"trials must be >= 100, got {self.trials}")
        if sweep_var is SweepVariable.T0 and self.regime not in (Regime.C, Regime.D):
            problems.append("sweeping T0 is only meaningful in regimes c and d")
        if sweep_var is SweepVariable.SNR_DB and self.base_scene.noise_var != 1.0:
            problems.append("SNR sweeps require unit noise variance in the base scene")
        if sweep_var is SweepVariable.ALPHA and any(v < 0.0 for v in self.sweep.values):
            problems.append("alpha sweep values must be >= 0")
        if self.regime is Regime.B and self.snapshots <= m:
            problems.append(
                f"regime b needs snapshots > antennas, got T = {self.snapshots}, M = {m}"
            )
        if self.regime in (Regime.C, Regime.D):
            if sweep_var is SweepVariable.T0:
                bad = [v for v in self.sweep.values if v != int(v) or int(v) <= m]
                if bad:
                    problems.append(
                        f"every swept T0 must be an integer > M = {m}, offending values: {bad}"
                    )
            elif self.secondary_snapshots <= m:
                problems.append(
                    f"regimes c/d need secondary_snapshots (T0) > M, got "
                    f"T0 = {self.secondary_snapshots}, M = {m}"
                )
        if problems:
            raise ConfigError("; ".join(problems))


def default_scene(snr_db: float = 0.0) -> SourceScene:
    """The reference four-source scene at the given SOI SNR over unit noise."""
    soi_power = 10.0 ** (snr_db / 10.0)
    interferers = tuple(
        SourceSpec(doa, soi_power * 10.0 ** (-off / 10.0))
        for doa, off in zip(DEFAULT_INTERFERER_DOAS_DEG, DEFAULT_INTERFERER_OFFSETS_DB)
    )
    return SourceScene(
        soi=SourceSpec(DEFAULT_SOI_DOA_DEG, soi_power),
        interferers=interferers,
        noise_var=1.0,
    )


def snr_to_scene(base_scene: SourceScene, snr_db: float) -> SourceScene:
    """Rescale a unit-noise scene so the SOI sits at ``snr_db`` dB over the noise.

    Interferer powers keep their dB offsets relative to the SOI.
    """
    if base_scene.noise_var != 1.0:
        raise DomainError(
            f"SNR is defined against unit noise variance, scene has {base_scene.noise_var}"
        )
    soi_power = 10.0 ** (snr_db / 10.0)
    ratio = soi_power / base_scene.soi.power
    return SourceScene(
        soi=SourceSpec(base_scene.soi.doa_deg, soi_power),
        interferers=tuple(
            SourceSpec(s.doa_deg, s.power * ratio) for s in base_scene.interferers
        ),
        noise_var=1.0,
    )


@dataclass(frozen=True, eq=False)
class SweepContext:
    """Precomputed per-sweep-point quantities shared by all trials."""

    scene: SourceScene
    model: CovarianceModel
    theory: TheoryReport
    secondary_snapshots: int
    w_cb: BeamformerWeights
    w_cap: BeamformerWeights
    w_mmse: BeamformerWeights
    alpha_oracle: float
    w_cap_plus: BeamformerWeights


def _oracle_alpha(config: ScenarioConfig, scene: SourceScene, model: CovarianceModel,
                  theory: TheoryReport, w_cap: BeamformerWeights) -> float:
    if config.waveform is WaveformKind.CIRCULAR_GAUSSIAN:
        return theory.alpha_o
    if config.psk_alpha_mode is PskAlphaMode.EXACT:
        kurt = output_kurtosis(config.geom, scene, config.waveform, w_cap.w)
    else:
        # constant-modulus shortcut; also the placeholder in measured mode,
        # where each trial re-estimates the kurtosis from its own output.
        kurt = -1.0
    alpha, _ = alpha_from_kurtosis(model.gamma, theory.gamma_cap, config.snapshots, kurt)
    return alpha


def build_context(config: ScenarioConfig, sweep_value: float) -> SweepContext:
    """Resolve the scene at one sweep point and precompute the oracle quantities."""
    if config.sweep.variable is SweepVariable.SNR_DB:
        scene = snr_to_scene(config.base_scene, sweep_value)
        t0 = config.secondary_snapshots
    elif config.sweep.variable is SweepVariable.T0:
        scene = config.base_scene
        t0 = int(sweep_value)
    else:
        scene = config.base_scene
        t0 = config.secondary_snapshots
    model = build_cov_model(config.geom, scene)
    theory = theory_report(model, config.snapshots)
    w_cap = capon_weights(model.full, model.a)
    alpha_oracle = _oracle_alpha(config, scene, model, theory, w_cap)
    return SweepContext(
        scene=scene,
        model=model,
        theory=theory,
        secondary_snapshots=t0,
        w_cb=cb_weights(model.a),
        w_cap=w_cap,
        w_mmse=mmse_weights(model.gamma, model.full, model.a),
        alpha_oracle=alpha_oracle,
        w_cap_plus=capon_plus_weights(w_cap, ShrinkageFactor(alpha_oracle)),
    )


def _mean_abs_sq(out: np.ndarray) -> float:
    return float(np.vdot(out, out).real) / out.size


def _records_from_outputs(
    idx: int, gamma: float, truth: np.ndarray, entries
) -> list[TrialRecord]:
    """Build one record per (method, output, gamma_hat, alpha_used) entry.

    Same formulas as :mod:`caponplus.metrics` (relative bias, SE-NMSE,
    SP-NMSE), evaluated with the waveform energy shared across methods.
    """
    truth_energy = float(np.vdot(truth, truth).real)
    records = []
    for method, out, gamma_hat, alpha_used in entries:
        if gamma_hat is None:
            gamma_hat = _mean_abs_sq(out)
        rel = (gamma_hat - gamma) / gamma
        err = out - truth
        records.append(
            TrialRecord(
                method=method,
                trial_index=idx,
                rel_bias_term=rel,
                se_nmse=float(np.vdot(err, err).real) / truth_energy,
                sp_nmse=rel * rel,
                alpha_used=alpha_used,
            )
        )
    return records


def _trial_oracle(config: ScenarioConfig, ctx: SweepContext, idx: int) -> list[TrialRecord]:
    rngs = TrialRngs(config.master_seed, idx)
    batch = synth_scene_snapshots(config.geom, ctx.scene, config.waveform, config.snapshots, rngs)
    gamma = ctx.model.gamma
    out_cap = apply_weights(ctx.w_cap, batch)
    gamma_cap_hat = _mean_abs_sq(out_cap)

    alpha = ctx.alpha_oracle
    if (
        config.waveform is WaveformKind.PSK8
        and config.psk_alpha_mode is PskAlphaMode.MEASURED
    ):
        kurt = kurtosis_estimate(out_cap)
        alpha, _ = alpha_from_kurtosis(
            gamma, ctx.theory.gamma_cap, config.snapshots, kurt
        )

    return _records_from_outputs(
        idx,
        gamma,
        batch.truth,
        (
            ("CB", apply_weights(ctx.w_cb, batch), None, 1.0),
            ("Capon", out_cap, gamma_cap_hat, 1.0),
            ("MMSE", apply_weights(ctx.w_mmse, batch), None,
             (gamma / ctx.theory.gamma_cap) ** 2),
            ("CaponPlus", math.sqrt(alpha) * out_cap, alpha * gamma_cap_hat, alpha),
        ),
    )


def _trial_a(config: ScenarioConfig, ctx: SweepContext, idx: int) -> list[TrialRecord]:
    rngs = TrialRngs(config.master_seed, idx)
    batch = synth_scene_snapshots(config.geom, ctx.scene, config.waveform, config.snapshots, rngs)
    gamma = ctx.model.gamma
    q = ctx.model.ah_qinv_a()

    out_cap = apply_weights(ctx.w_cap, batch)
    abs_sq = out_cap.real**2 + out_cap.imag**2
    gamma_cap_hat = float(np.mean(abs_sq))
    m4 = float(np.mean(abs_sq**2))
    gamma_deb = debiased_power(gamma_cap_hat, q).value
    alpha = alpha_hat_scenario_a(gamma_cap_hat, m4, gamma_deb, config.snapshots).alpha
    mmse_scale = gamma_deb * q / (1.0 + gamma_deb * q)
    deb_scale = math.sqrt(gamma_deb / gamma_cap_hat) if gamma_cap_hat > 0.0 else 0.0

    return _records_from_outputs(
        idx,
        gamma,
        batch.truth,
        (
            ("Capon", out_cap, gamma_cap_hat, 1.0),
            ("MMSE", mmse_scale * out_cap, mmse_scale**2 * gamma_cap_hat, mmse_scale**2),
            ("CaponPlus", math.sqrt(alpha) * out_cap, alpha * gamma_cap_hat, alpha),
            # Power-only estimator; its waveform column reports the
            # power-matched rescaling of the Capon output.
            ("Debiased", deb_scale * out_cap, gamma_deb, deb_scale**2),
        ),
    )


def _trial_b(config: ScenarioConfig, ctx: SweepContext, idx: int) -> list[TrialRecord]:
    rngs = TrialRngs(config.master_seed, idx)
    batch = synth_scene_snapshots(config.geom, ctx.scene, config.waveform, config.snapshots, rngs)
    gamma = ctx.model.gamma

    sample_cov = scm(batch)
    w_hat, gamma_cap_hathat = adaptive_capon_weights(sample_cov.matrix, ctx.model.a)
    out_cap = apply_weights(w_hat, batch)
    abs_sq = out_cap.real**2 + out_cap.imag**2
    gamma_cap_hat = float(np.mean(abs_sq))
    m4 = float(np.mean(abs_sq**2))
    alpha = alpha_hat_scenario_b(gamma_cap_hathat, m4, gamma, config.snapshots).alpha
    mmse_scale = gamma / gamma_cap_hathat

    return _records_from_outputs(
        idx,
        gamma,
        batch.truth,
        (
            ("Capon", out_cap, gamma_cap_hat, 1.0),
            ("MMSE", mmse_scale * out_cap, mmse_scale**2 * gamma_cap_hat, mmse_scale**2),
            ("CaponPlus", math.sqrt(alpha) * out_cap, alpha * gamma_cap_hat, alpha),
        ),
    )


def _trial_cd(config: ScenarioConfig, ctx: SweepContext, idx: int) -> list[TrialRecord]:
    rngs = TrialRngs(config.master_seed, idx)
    batch = synth_scene_snapshots(config.geom, ctx.scene, config.waveform, config.snapshots, rngs)
    secondary = synth_scene_secondary(
        config.geom, ctx.scene, config.waveform, ctx.secondary_snapshots, rngs
    )
    gamma = ctx.model.gamma
    m = config.geom.antennas

    q_hat_cov = scm(secondary)
    w_hat, inv_quad = adaptive_capon_weights(q_hat_cov.matrix, ctx.model.a)
    q_hat = 1.0 / inv_quad  # a^H Qhat^{-1} a
    out_cap = apply_weights(w_hat, batch)
    abs_sq = out_cap.real**2 + out_cap.imag**2
    gamma_cap_hat = float(np.mean(abs_sq))
    m4 = float(np.mean(abs_sq**2))

    entries = []
    if config.regime is Regime.C:
        gamma_num = gamma
        alpha = alpha_hat_scenario_b(gamma_cap_hat, m4, gamma, config.snapshots).alpha
    else:
        gamma_num = debiased_power_scaled(
            gamma_cap_hat, q_hat, ctx.secondary_snapshots, m
        ).value
        alpha = alpha_hat_scenario_a(gamma_cap_hat, m4, gamma_num, config.snapshots).alpha
        deb_scale = math.sqrt(gamma_num / gamma_cap_hat) if gamma_cap_hat > 0.0 else 0.0
        entries.append(("Debiased", deb_scale * out_cap, gamma_num, deb_scale**2))
    # MMSE mirrors scenario B: gamma S_hat^{-1} a there equals the Capon weight
    # scaled by gamma over its raw output power, which is the construction that
    # carries over when the INCM estimate stands in for the SCM.
    mmse_scale = gamma_num / gamma_cap_hat if gamma_cap_hat > 0.0 else 0.0

    entries[:0] = [
        ("Capon", out_cap, gamma_cap_hat, 1.0),
        ("MMSE", mmse_scale * out_cap, mmse_scale**2 * gamma_cap_hat, mmse_scale**2),
        ("CaponPlus", math.sqrt(alpha) * out_cap, alpha * gamma_cap_hat, alpha),
    ]
    return _records_from_outputs(idx, gamma, batch.truth, entries)


_TRIAL_FUNCS = {
    Regime.ORACLE: _trial_oracle,
    Regime.A: _trial_a,
    Regime.B: _trial_b,
    Regime.C: _trial_cd,
    Regime.D: _trial_cd,
}


def run_trial(
    config: ScenarioConfig,
    sweep_value: float,
    trial_index: int,
    ctx: SweepContext | None = None,
) -> list[TrialRecord]:
    """Run one Monte-Carlo trial and return one record per method."""
    if ctx is None:
        ctx = build_context(config, sweep_value)
    return _TRIAL_FUNCS[config.regime](config, ctx, trial_index)


def _run_chunk(args) -> list[tuple[int, list[TrialRecord] | None]]:
    config, sweep_value, start, stop = args
    ctx = build_context(config, sweep_value)
    out = []
    for idx in range(start, stop):
        try:
            out.append((idx, run_trial(config, sweep_value, idx, ctx)))
        except NotPositiveDefinite:
            out.append((idx, None))
    return out


def _theory_rows(config: ScenarioConfig, ctx: SweepContext) -> list[AggregateRecord]:
    """Closed-form overlay rows (zero-stderr, zero-trial aggregates).

    The CaponPlus row reflects the configured shrinkage rule through the
    weights stored in the context.
    """
    entries = [
        ("CaponTheory", ctx.w_cap.w),
        ("MMSETheory", ctx.w_mmse.w),
        ("CaponPlusTheory", ctx.w_cap_plus.w),
    ]
    if config.regime is Regime.ORACLE:
        entries.insert(0, ("CBTheory", ctx.w_cb.w))
    return [_theory_row(config, ctx, method, w) for method, w in entries]


def _theory_row(config: ScenarioConfig, ctx: SweepContext, method: str,
                w: np.ndarray) -> AggregateRecord:
    gamma = ctx.model.gamma
    t = config.snapshots
    out_power = quadratic_form(ctx.model.full, w)
    fourth = output_fourth_moment(config.geom, ctx.scene, config.waveform, w)
    var = (fourth - out_power**2) / t
    bias = out_power - gamma
    return AggregateRecord(
        method=method,
        mean_rel_bias=bias / gamma,
        mean_se_nmse=waveform_mse_theory(ctx.model, w) / gamma,
        mean_sp_nmse=(var + bias**2) / gamma**2,
        stderr_rel_bias=0.0,
        stderr_se_nmse=0.0,
        stderr_sp_nmse=0.0,
        n_trials=0,
    )


@dataclass(frozen=True)
class SweepPointResult:
    sweep_value: float
    aggregates: list[AggregateRecord]
    n_trials: int
    n_failed: int


@dataclass(frozen=True)
class ScenarioReport:
    config: ScenarioConfig
    points: list[SweepPointResult]
    wall_time_s: float
    version: str = __version__

    @property
    def sweep_variable(self) -> SweepVariable:
        return self.config.sweep.variable


def _alpha_sweep_point(config: ScenarioConfig, alpha: float) -> SweepPointResult:
    ctx = build_context(config, alpha)
    gamma = ctx.model.gamma
    gamma_cap = ctx.theory.gamma_cap
    fourth = output_fourth_moment(config.geom, ctx.scene, config.waveform, ctx.w_cap.w)
    var_cap = (fourth - gamma_cap**2) / config.snapshots
    bias = alpha * gamma_cap - gamma
    w_alpha = math.sqrt(alpha) * ctx.w_cap.w
    row = AggregateRecord(
        method="CaponPlusTheory",
        mean_rel_bias=bias / gamma,
        mean_se_nmse=waveform_mse_theory(ctx.model, w_alpha) / gamma,
        mean_sp_nmse=(alpha**2 * var_cap + bias**2) / gamma**2,
        stderr_rel_bias=0.0,
        stderr_se_nmse=0.0,
        stderr_sp_nmse=0.0,
        n_trials=0,
    )
    return SweepPointResult(sweep_value=alpha, aggregates=[row], n_trials=0, n_failed=0)


def run_scenario(
    config: ScenarioConfig, threads: int = 1, emit_theory: bool = False
) -> ScenarioReport:
    """Run every sweep point of a scenario and aggregate the results.

    The report is deterministic for a fixed ``master_seed`` no matter how
    many worker processes execute the trials.  Trials whose sample
    covariance cannot be factored are excluded and counted; more than 1%
    failures at any sweep point raises :class:`TrialFailureError`.
    """
    config.validate()
    started = time.perf_counter()
    points: list[SweepPointResult] = []
    for sweep_value in config.sweep.values:
        if config.regime is Regime.ALPHA_SWEEP:
            points.append(_alpha_sweep_point(config, sweep_value))
            continue
        results = _point_results(config, sweep_value, threads)
        records: list[TrialRecord] = []
        n_failed = 0
        for _idx, recs in results:
            if recs is None:
                n_failed += 1
            else:
                records.extend(recs)
        if n_failed > MAX_FAILURE_SHARE * config.trials:
            raise TrialFailureError(
                f"{n_failed} of {config.trials} trials failed at sweep value "
                f"{sweep_value} (> {MAX_FAILURE_SHARE:.0%} threshold)"
            )
        aggregates = aggregate(records)
        if emit_theory:
            aggregates = aggregates + _theory_rows(
                config, build_context(config, sweep_value)
            )
        points.append(
            SweepPointResult(
                sweep_value=sweep_value,
                aggregates=aggregates,
                n_trials=config.trials - n_failed,
                n_failed=n_failed,
            )
        )
    return ScenarioReport(
        config=config, points=points, wall_time_s=time.perf_counter() - started
    )


def _point_results(config: ScenarioConfig, sweep_value: float, threads: int):
    trials = config.trials
    if threads <= 1:
        return _run_chunk((config, sweep_value, 0, trials))
    chunk = max(1, math.ceil(trials / (threads * 4)))
    bounds = [(s, min(s + chunk, trials)) for s in range(0, trials, chunk)]
    args = [(config, sweep_value, s, e) for s, e in bounds]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        chunks = list(pool.map(_run_chunk, args))
    results = []
    for part in chunks:
        results.extend(part)
    return results
