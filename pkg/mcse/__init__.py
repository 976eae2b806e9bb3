"""

Enhancing Speech
----------------

A noisy utterance is enhanced by fitting a noise model to it while the clean
speech is explained by a pretrained deep prior. The prior is a
:class:`~mcse.prior.DecoderModel` that maps a sequence of latent vectors ``z``
to speech variances; the noise is an NMF model whose spectral templates and
activations are learned from the noisy utterance alone::

    from mcse import EmConfig, SamplerConfig, load_decoder, read_wav, run_em, stft, istft, StftConfig

    stft_cfg = StftConfig()
    x = stft(read_wav("noisy.wav"), stft_cfg)
    result = run_em(x, load_decoder("prior.bin"), EmConfig(sampler=SamplerConfig(kind="mala")))
    enhanced = istft(result.s_hat, stft_cfg)

:func:`run_em` alternates two steps for ``J`` iterations:

1. The E-step draws latent sequences from their posterior given the noisy
   spectrogram and the current noise model. Three samplers are available:
   Langevin dynamics (``"ld"``), Metropolis-Hastings (``"mh"``) and the
   Metropolis-adjusted Langevin algorithm (``"mala"``).
2. The M-step updates the NMF factors with multiplicative updates averaged
   over the drawn samples.

The speech estimate is the Wiener-filtered noisy spectrogram, with the gain
averaged over the last samples.

Defaults
--------

The shipped defaults are ``J = 100`` EM iterations, step size
``η = 0.005``, proposal variance ``σ² = 0.02``, one Langevin step per E-step
and ten MH or MALA steps of which the first five are discarded.

Command line
------------

The same functionality is available from the shell, see :mod:`mcse.runner`::

    python -m mcse enhance --input noisy.wav --output enhanced.wav --decoder prior.bin --sampler mala

Logging
-------

The package logs to the ``"Mcse"`` logger. Set ``MCSE_LOG_LEVEL=INFO`` to see
progress, or pass ``-v`` on the command line.
"""

from . import logger as _logger  # noqa: F401
from .audio import read_wav, write_wav
from .em import EmConfig, EnhanceResult, run_em, wiener_estimate
from .errors import ConfigError, FormatError, InvalidInputError, McseError, NumericalError
from .metrics import MetricReport, evaluate, measure_rtf, si_sdr
from .noise_nmf import NmfParams, init_nmf, mixture_loglik, mstep_update
from .prior import AffineExpDecoder, DecoderModel, GruDecoder, decode, decode_vjp, load_decoder
from .samplers import SamplerConfig, ld_step, mala_step, mh_step, run_sampler, score, spawn_chains
from .spectral import ComplexSpectrogram, StftConfig, Waveform, istft, power, stft

__all__ = [
    "AffineExpDecoder",
    "ComplexSpectrogram",
    "ConfigError",
    "DecoderModel",
    "EmConfig",
    "EnhanceResult",
    "FormatError",
    "GruDecoder",
    "InvalidInputError",
    "McseError",
    "MetricReport",
    "NmfParams",
    "NumericalError",
    "SamplerConfig",
    "StftConfig",
    "Waveform",
    "decode",
    "decode_vjp",
    "evaluate",
    "init_nmf",
    "istft",
    "ld_step",
    "load_decoder",
    "mala_step",
    "measure_rtf",
    "mh_step",
    "mixture_loglik",
    "mstep_update",
    "power",
    "read_wav",
    "run_em",
    "run_sampler",
    "score",
    "si_sdr",
    "spawn_chains",
    "stft",
    "wiener_estimate",
    "write_wav",
]
