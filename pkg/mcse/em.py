"""
Monte-Carlo EM speech enhancement.

:func:`run_em` alternates a sampling E-step over the latent sequence with a
multiplicative NMF M-step for ``J`` iterations, then reconstructs the speech
with the Wiener gain averaged over the last retained samples::

    x_pow = |x|²
    ψ = noise_share · init_nmf(...)
    z = initial latents
    for j in 1..J:
        samples = run_sampler(target(ψ), z)
        ψ = mstep_update(ψ, x_pow, decode(samples))
        trace += log p_ψ(x | mean of samples)
        z = samples carried over
    ŝ = mean_i v_i / (v_i + WH) ⊙ x

Initialization
--------------

The noise model starts at ``noise_share`` of the mixture power; the speech
prior accounts for the rest from the first E-step on.

``z_init="warmup_ld"`` (the default) starts a single Langevin chain at the
prior mean and runs ``warmup_steps`` steps against the initial noise model.
``"zeros"`` starts at the prior mean, ``"prior_draw"`` at a draw from it.

Carrying chains between iterations
----------------------------------

The Langevin E-step jitters the starting sequence into ``M`` chains only in
the first iteration; afterwards every chain continues where it stopped. MH and
MALA restart from the mean of their retained states.

Log-likelihood trace
--------------------

After every M-step the trace records ``log p_ψ(x | z)`` summed over frames at
the latent estimate of the E-step: the mean of the retained samples, or the
last sample with ``mstep_samples="last"``.
"""

from dataclasses import dataclass, field, replace
import logging
import time
import typing as tp

import numpy as np
import numpy.typing as npt

from .errors import ConfigError, InvalidInputError, NumericalError
from .noise_nmf import (
    DEFAULT_MSTEP_EXPONENT,
    DEFAULT_NMF_RANK,
    NmfParams,
    init_nmf,
    mixture_loglik,
    mstep_update,
    noise_variance,
)
from .prior import DecoderModel, LatentSequence
from .samplers import ChainState, SamplerConfig, SpeechTarget, run_sampler, stream
from .spectral import ComplexSpectrogram, power

logger = logging.getLogger("Mcse")

ZInitPolicy = tp.Literal["zeros", "prior_draw", "warmup_ld"]
MstepSamples = tp.Literal["all", "last"]

DEFAULT_EM_ITERATIONS = 100
DEFAULT_WARMUP_STEPS = 20
DEFAULT_NOISE_SHARE = 0.1

_GAIN_FLOOR = np.finfo(np.float64).tiny
_GAIN_CEIL = np.nextafter(1.0, 0.0)

# Stream purpose of the initial prior draw; 0 to 2 belong to the kernels.
_PRIOR_DRAW = 3


class _RateLimitedLogger(object):
    def __init__(self, gap: float):
        self._last_log_time = -float("inf")
        self._gap = gap

    def info(self, *args, force: bool = False, **kwargs):
        cur_time = time.process_time()
        if force or cur_time - self._last_log_time > self._gap:
            logger.info(*args, **kwargs)
            self._last_log_time = cur_time


@dataclass(frozen=True)
class EmConfig:
    """Settings of one EM run.

    Args:
        J: number of EM iterations.
        sampler: E-step sampler.
        nmf_rank: rank ``R`` of the noise model.
        nmf_seed: seed of the NMF initialization.
        z_init: ``"zeros"``, ``"prior_draw"`` or ``"warmup_ld"``.
        warmup_steps: Langevin steps of the ``"warmup_ld"`` initialization.
        mstep_samples: ``"all"`` averages the M-step over every retained
            sample, ``"last"`` uses the last one only.
        mstep_exponent: exponent of the multiplicative updates.
        noise_share: initial noise power as a fraction of the mixture power.
    """

    J: int = DEFAULT_EM_ITERATIONS
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    nmf_rank: int = DEFAULT_NMF_RANK
    nmf_seed: int = 0
    z_init: ZInitPolicy = "warmup_ld"
    warmup_steps: int = DEFAULT_WARMUP_STEPS
    mstep_samples: MstepSamples = "all"
    mstep_exponent: float = DEFAULT_MSTEP_EXPONENT
    noise_share: float = DEFAULT_NOISE_SHARE

    def __post_init__(self):
        if self.J < 1:
            raise ConfigError(f"J must be at least 1, got {self.J}")
        if not isinstance(self.sampler, SamplerConfig):
            raise ConfigError(f"sampler must be a SamplerConfig, got {type(self.sampler).__name__}")
        if self.nmf_rank < 1:
            raise ConfigError(f"nmf_rank must be at least 1, got {self.nmf_rank}")
        if self.nmf_seed < 0:
            raise ConfigError(f"nmf_seed must be nonnegative, got {self.nmf_seed}")
        if self.z_init not in tp.get_args(ZInitPolicy):
            raise ConfigError(f"Unknown z_init {self.z_init!r}, expected one of {tp.get_args(ZInitPolicy)}")
        if self.warmup_steps < 0:
            raise ConfigError(f"warmup_steps must be nonnegative, got {self.warmup_steps}")
        if self.mstep_samples not in tp.get_args(MstepSamples):
            raise ConfigError(
                f"Unknown mstep_samples {self.mstep_samples!r}, expected one of {tp.get_args(MstepSamples)}"
            )
        if not self.mstep_exponent > 0:
            raise ConfigError(f"mstep_exponent must be positive, got {self.mstep_exponent}")
        if not 0 < self.noise_share <= 1:
            raise ConfigError(f"noise_share must lie in (0, 1], got {self.noise_share}")


@dataclass(frozen=True)
class EnhanceResult:
    """Output of :func:`run_em`.

    Args:
        s_hat: enhanced speech, same shape and metadata as the input.
        nmf: final noise model.
        loglik_trace: summed log-likelihood at the E-step latent estimate after each M-step.
        seconds: wall-clock duration of the run.
        samples: latent samples retained by the last E-step.
        acceptance_trace: mean acceptance rate of each E-step; ``None`` for
            Langevin dynamics.
    """

    s_hat: ComplexSpectrogram
    nmf: NmfParams
    loglik_trace: npt.NDArray[np.float64]
    seconds: float
    samples: npt.NDArray[np.float64]
    acceptance_trace: npt.NDArray[np.float64] | None = None

    @property
    def iterations(self) -> int:
        return self.loglik_trace.shape[0]


def _stack_variances(x: ComplexSpectrogram, v_s_samples) -> npt.NDArray[np.float64]:
    samples = np.asarray(v_s_samples, dtype=np.float64)
    if samples.ndim == 2:
        samples = samples[None]
    if samples.ndim != 3 or samples.shape[0] == 0:
        raise InvalidInputError(f"Expected at least one T×F speech variance sample, got shape {samples.shape}")
    if samples.shape[1:] != x.shape:
        raise InvalidInputError(f"Speech variances have shape {samples.shape[1:]}, expected {x.shape}")
    return samples


def wiener_gain(
    v_s_samples: tp.Sequence[npt.ArrayLike] | npt.NDArray[np.float64], p: NmfParams
) -> npt.NDArray[np.float64]:
    """``T × F`` gain ``mean_i v_i / (v_i + WH)``.

    The gain is kept inside the open interval ``(0, 1)``; where float
    rounding would give exactly 0 or 1 it is clipped to the nearest
    representable value inside.
    """
    samples = np.asarray(v_s_samples, dtype=np.float64)
    if samples.ndim == 2:
        samples = samples[None]
    noise = noise_variance(p)
    gain = np.mean(samples / (samples + noise), axis=0)
    return np.clip(gain, _GAIN_FLOOR, _GAIN_CEIL)


def wiener_estimate(
    x: ComplexSpectrogram, v_s_samples: tp.Sequence[npt.ArrayLike] | npt.NDArray[np.float64], p: NmfParams
) -> ComplexSpectrogram:
    """Posterior-mean speech estimate ``G ⊙ x``, with the gain averaged over samples."""
    samples = _stack_variances(x, v_s_samples)
    if (p.frames, p.freq_dim) != x.shape:
        raise InvalidInputError(f"NMF parameters are for {(p.frames, p.freq_dim)}, spectrogram is {x.shape}")
    return x.with_data(wiener_gain(samples, p) * x.data)


def _scaled(p: NmfParams, share: float) -> NmfParams:
    factor = np.sqrt(share)
    return NmfParams(p.W * factor, p.H * factor)


def _initial_latents(
    x_pow: npt.NDArray[np.float64], dec: DecoderModel, nmf: NmfParams, cfg: EmConfig
) -> LatentSequence:
    shape = (x_pow.shape[0], dec.latent_dim)
    if cfg.z_init == "prior_draw":
        return stream(cfg.sampler.seed, _PRIOR_DRAW).standard_normal(shape)
    z = np.zeros(shape)
    if cfg.z_init == "zeros" or cfg.warmup_steps == 0:
        return z
    warmup = replace(cfg.sampler, kind="ld", K=cfg.warmup_steps, burn_in=0, M=1)
    tg = SpeechTarget(dec, x_pow, noise_variance(nmf))
    try:
        run = run_sampler(warmup, tg, z, key=(0,))
    except NumericalError as e:
        raise e.with_context(iteration=0) from e
    logger.debug("Langevin warm-up of %d steps done", cfg.warmup_steps)
    return run.mean


def run_em(x: ComplexSpectrogram, dec: DecoderModel, cfg: EmConfig = EmConfig()) -> EnhanceResult:
    """Enhance ``x`` with the speech prior ``dec``.

    Raises:
        InvalidInputError: the decoder's frequency dimension does not match ``x``.
        NumericalError: a non-finite value appeared; the error carries the
            iteration and the log-likelihood trace recorded up to it.
    """
    if x.bins != dec.freq_dim:
        raise InvalidInputError(f"Spectrogram has {x.bins} bins, decoder produces {dec.freq_dim}")
    start = time.perf_counter()
    progress = _RateLimitedLogger(1)
    x_pow = power(x)
    nmf = _scaled(init_nmf(x.bins, x.frames, cfg.nmf_rank, cfg.nmf_seed, x_pow), cfg.noise_share)
    state: LatentSequence | ChainState = _initial_latents(x_pow, dec, nmf, cfg)

    trace: list[float] = []
    acceptance: list[float] = []
    for j in range(1, cfg.J + 1):
        try:
            tg = SpeechTarget(dec, x_pow, noise_variance(nmf))
            run = run_sampler(cfg.sampler, tg, state, key=(j,))
            v_samples = dec.decode(run.samples)
            used = v_samples if cfg.mstep_samples == "all" else v_samples[-1:]
            nmf = mstep_update(nmf, x_pow, used, cfg.mstep_exponent)
            z_hat = run.mean if cfg.mstep_samples == "all" else run.samples[-1]
            trace.append(mixture_loglik(x_pow, dec.decode(z_hat), nmf))
        except NumericalError as e:
            raise e.with_context(iteration=j, partial_trace=list(trace)) from e
        if run.acceptance_rate is not None:
            acceptance.append(run.acceptance_rate)
        state = run.final_state if run.final_state is not None else run.mean
        progress.info("EM iteration %d/%d: log-likelihood %.6g", j, cfg.J, trace[-1], force=j in (1, cfg.J))

    s_hat = wiener_estimate(x, v_samples, nmf)
    seconds = time.perf_counter() - start
    logger.info("EM with %s sampler finished in %.3f s", cfg.sampler.kind.upper(), seconds)
    return EnhanceResult(
        s_hat=s_hat,
        nmf=nmf,
        loglik_trace=np.asarray(trace),
        seconds=seconds,
        samples=run.samples,
        acceptance_trace=np.asarray(acceptance) if acceptance else None,
    )
