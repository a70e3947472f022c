"""Seeded generation of SOI waveforms, interference-plus-noise, and snapshot batches.

Randomness contract
-------------------
Every random draw comes from an :class:`RngStream` identified by
``(master_seed, trial_index, role)``.  The stream is realized as
``numpy.random.Generator(PCG64(SeedSequence(master_seed, spawn_key=(trial_index, role))))``,
so identical coordinates reproduce identical sample sequences regardless of
execution order, process, or thread count.  The four roles are:

=============  =====================================================
``soi``        SOI waveform draws
``interference``  interferer waveforms, drawn in interferer order
``noise``      additive white noise of the primary batch
``secondary``  everything in the SOI-free secondary batch
=============  =====================================================

The SOI and interference/noise streams never share state, which enforces the
zero-correlation model assumption by construction.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .arraymodel import (
    ArrayGeometry,
    CovarianceModel,
    SourceScene,
    _steering_cached,
    _steering_matrix_cached,
    steering_vector,
)
from .errors import DomainError
from .linalg import CholeskyFactor

__all__ = [
    "WaveformKind",
    "StreamRole",
    "RngStream",
    "TrialRngs",
    "SnapshotBatch",
    "draw_waveform",
    "draw_interference_noise",
    "synth_snapshots",
    "synth_scene_snapshots",
    "synth_secondary",
    "synth_scene_secondary",
    "output_power_components",
    "output_fourth_moment",
    "output_kurtosis",
]


class WaveformKind(enum.Enum):
    """Source waveform law: circular complex Gaussian, or constant-modulus 8-PSK."""

    CIRCULAR_GAUSSIAN = "gaussian"
    PSK8 = "psk8"


class StreamRole(enum.IntEnum):
    SOI = 0
    INTERFERENCE = 1
    NOISE = 2
    SECONDARY = 3


@dataclass(frozen=True)
class RngStream:
    """Deterministic sub-stream coordinates ``(master_seed, trial_index, role)``."""

    master_seed: int
    trial_index: int
    role: StreamRole

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(
            self.master_seed, spawn_key=(self.trial_index, int(self.role))
        )
        return np.random.Generator(np.random.PCG64(seq))


@dataclass(frozen=True)
class TrialRngs:
    """The four per-trial role streams, instantiated lazily."""

    master_seed: int
    trial_index: int

    def stream(self, role: StreamRole) -> np.random.Generator:
        return RngStream(self.master_seed, self.trial_index, role).generator()

    @property
    def soi(self) -> np.random.Generator:
        return self.stream(StreamRole.SOI)

    @property
    def interference(self) -> np.random.Generator:
        return self.stream(StreamRole.INTERFERENCE)

    @property
    def noise(self) -> np.random.Generator:
        return self.stream(StreamRole.NOISE)

    @property
    def secondary(self) -> np.random.Generator:
        return self.stream(StreamRole.SECONDARY)


@dataclass(frozen=True, eq=False)
class SnapshotBatch:
    """``T`` array snapshots (rows of ``snapshots``) plus the true SOI waveform.

    When ``contains_soi`` is false the batch holds interference-plus-noise
    only and ``truth`` is empty.
    """

    snapshots: np.ndarray
    truth: np.ndarray
    contains_soi: bool

    def __post_init__(self):
        if self.snapshots.ndim != 2 or self.snapshots.shape[0] < 1:
            raise DomainError(
                f"snapshots must be a (T, M) array with T >= 1, got {self.snapshots.shape}"
            )
        if self.contains_soi:
            if self.truth.shape != (self.snapshots.shape[0],):
                raise DomainError("truth must hold one scalar per snapshot")
        elif self.truth.size != 0:
            raise DomainError("a batch without the SOI must have empty truth")

    @property
    def num_snapshots(self) -> int:
        return self.snapshots.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.snapshots.shape[1]


def _gaussian_scalars(gamma: float, count: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal(count) + 1j * rng.standard_normal(count)
    return np.sqrt(gamma / 2.0) * z


def draw_waveform(
    kind: WaveformKind, gamma: float, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw ``count`` i.i.d. waveform samples of power ``gamma``.

    Gaussian samples are CN(0, gamma) with independent real/imaginary parts
    of variance gamma/2.  8-PSK samples are ``sqrt(gamma) exp(j 2 pi k / 8)``
    with ``k`` uniform on ``{0..7}``, hence exactly constant modulus with
    population kurtosis -1.
    """
    if not gamma > 0.0:
        raise DomainError(f"waveform power must be positive, got {gamma}")
    if count < 1:
        raise DomainError(f"sample count must be >= 1, got {count}")
    if kind is WaveformKind.CIRCULAR_GAUSSIAN:
        return _gaussian_scalars(gamma, count, rng)
    phases = rng.integers(0, 8, size=count) * (2.0 * np.pi / 8.0)
    return np.sqrt(gamma) * np.exp(1j * phases)


def draw_interference_noise(
    q_factor: CholeskyFactor, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw ``count`` Gaussian vectors ``e(t) = L z(t)`` with covariance ``Q = L L^H``."""
    if count < 1:
        raise DomainError(f"sample count must be >= 1, got {count}")
    m = q_factor.dim
    z = (rng.standard_normal((count, m)) + 1j * rng.standard_normal((count, m))) / np.sqrt(2.0)
    return z @ q_factor.lower.T


def synth_snapshots(
    model: CovarianceModel, kind: WaveformKind, count: int, rngs: TrialRngs
) -> SnapshotBatch:
    """Snapshots ``x(t) = s(t) a + e(t)`` with Gaussian interference-plus-noise.

    The SOI waveform follows ``kind``; ``e(t)`` is drawn as CN(0, Q) through
    the Cholesky factor of the model INCM (so for PSK scenes where the
    interferers themselves are PSK-modulated, use
    :func:`synth_scene_snapshots` instead).  SOI and interference use
    disjoint role streams.
    """
    s = draw_waveform(kind, model.gamma, count, rngs.soi)
    e = draw_interference_noise(model.q_factor(), count, rngs.interference)
    x = s[:, None] * model.a[None, :] + e
    return SnapshotBatch(snapshots=x, truth=s, contains_soi=True)


def _scene_interference(
    geom: ArrayGeometry,
    scene: SourceScene,
    kind: WaveformKind,
    count: int,
    wave_rng: np.random.Generator,
    noise_rng: np.random.Generator,
) -> np.ndarray:
    """Per-source interference waveforms (drawn in interferer order) plus white noise."""
    m = geom.antennas
    if scene.interferers:
        a_int = _steering_matrix_cached(geom, tuple(s.doa_deg for s in scene.interferers))
        waves = np.column_stack(
            [draw_waveform(kind, s.power, count, wave_rng) for s in scene.interferers]
        )
        e = waves @ a_int.T
    else:
        e = np.zeros((count, m), dtype=np.complex128)
    noise = noise_rng.standard_normal((count, m)) + 1j * noise_rng.standard_normal((count, m))
    e += np.sqrt(scene.noise_var / 2.0) * noise
    return e


def synth_scene_snapshots(
    geom: ArrayGeometry,
    scene: SourceScene,
    kind: WaveformKind,
    count: int,
    rngs: TrialRngs,
) -> SnapshotBatch:
    """Snapshots with every source (SOI and interferers) modulated per ``kind``.

    This is the generator used by the experiment scenarios: the scene applies
    one waveform law to all sources, while the additive noise stays white
    Gaussian.  For the Gaussian kind it is distributionally identical to
    :func:`synth_snapshots`.
    """
    s = draw_waveform(kind, scene.soi.power, count, rngs.soi)
    e = _scene_interference(geom, scene, kind, count, rngs.interference, rngs.noise)
    e += s[:, None] * _steering_cached(geom, float(scene.soi.doa_deg))[None, :]
    return SnapshotBatch(snapshots=e, truth=s, contains_soi=True)


def synth_secondary(
    q_factor: CholeskyFactor, count: int, rng: np.random.Generator
) -> SnapshotBatch:
    """SOI-free Gaussian secondary batch ``e'(t) ~ CN(0, Q)``."""
    e = draw_interference_noise(q_factor, count, rng)
    return SnapshotBatch(snapshots=e, truth=np.empty(0, dtype=np.complex128), contains_soi=False)


def synth_scene_secondary(
    geom: ArrayGeometry,
    scene: SourceScene,
    kind: WaveformKind,
    count: int,
    rngs: TrialRngs,
) -> SnapshotBatch:
    """SOI-free secondary batch with per-source interferer waveforms of ``kind``.

    All draws (interferer waveforms first, then noise) come from the single
    ``secondary`` role stream, keeping the batch independent of the primary
    data of the same trial.
    """
    rng = rngs.secondary
    e = _scene_interference(geom, scene, kind, count, rng, rng)
    return SnapshotBatch(snapshots=e, truth=np.empty(0, dtype=np.complex128), contains_soi=False)


def output_power_components(
    geom: ArrayGeometry, scene: SourceScene, w: np.ndarray
) -> np.ndarray:
    """Per-component powers of ``w^H x(t)``: SOI, each interferer, then noise."""
    powers = [
        src.power * abs(np.vdot(w, steering_vector(geom, src.doa_deg))) ** 2
        for src in scene.all_sources
    ]
    powers.append(scene.noise_var * float(np.vdot(w, w).real))
    return np.asarray(powers)


def output_fourth_moment(
    geom: ArrayGeometry, scene: SourceScene, kind: WaveformKind, w: np.ndarray
) -> float:
    """Population fourth moment ``E|w^H x(t)|^4`` of the beamformer output.

    For a sum of independent circular components with powers ``p_i`` the
    fourth moment is ``2 (sum p_i)^2 + sum (E|u_i|^4 - 2 p_i^2)``; Gaussian
    components contribute no excess, constant-modulus ones contribute
    ``-p_i^2`` each.
    """
    parts = output_power_components(geom, scene, w)
    total = parts.sum()
    fourth = 2.0 * total**2
    if kind is WaveformKind.PSK8:
        fourth -= np.sum(parts[:-1] ** 2)
    return float(fourth)


def output_kurtosis(
    geom: ArrayGeometry, scene: SourceScene, kind: WaveformKind, w: np.ndarray
) -> float:
    """Population kurtosis of ``w^H x(t)``: zero for Gaussian scenes, negative for PSK."""
    parts = output_power_components(geom, scene, w)
    total = parts.sum()
    return output_fourth_moment(geom, scene, kind, w) / total**2 - 2.0
