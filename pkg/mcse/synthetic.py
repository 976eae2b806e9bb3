"""
Synthetic mixtures drawn from the generative model.

Speech coefficients are circular complex Gaussian with the decoder's
variances at a latent sequence drawn from the prior; noise coefficients are
circular complex Gaussian with variance ``WH`` of a random NMF model. The
noise is rescaled so that the mixture has the requested SNR, and the scaled
NMF model is kept as the ground truth.
"""

from dataclasses import dataclass
import logging
import typing as tp

import numpy as np
import numpy.typing as npt

from .errors import InvalidInputError
from .noise_nmf import DEFAULT_NMF_RANK, NmfParams, noise_variance
from .prior import DecoderModel
from .spectral import ComplexSpectrogram, StftConfig, Waveform, istft, power

logger = logging.getLogger("Mcse")

DEFAULT_SAMPLE_RATE = 16000
DEFAULT_SNR_LADDER = (-5.0, 0.0, 5.0)

Seed = int | np.random.SeedSequence


def stft_config_for(freq_dim: int) -> StftConfig:
    """STFT geometry with ``freq_dim`` bins and 75% overlap."""
    if freq_dim < 3:
        raise InvalidInputError(f"Need at least 3 frequency bins, got {freq_dim}")
    fft_size = 2 * (freq_dim - 1)
    return StftConfig(fft_size, fft_size // 4)


def _circular(rng: np.random.Generator, variance: npt.NDArray[np.float64]) -> npt.NDArray[np.complex128]:
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(variance.shape) + 1j * rng.standard_normal(variance.shape))


@dataclass(frozen=True)
class Mixture:
    """One synthetic utterance with its ground truth."""

    mixture: ComplexSpectrogram
    clean: ComplexSpectrogram
    noise: ComplexSpectrogram
    latents: npt.NDArray[np.float64]
    nmf: NmfParams
    snr_db: float
    stft: StftConfig

    def waveform(self, s: ComplexSpectrogram | None = None) -> Waveform:
        """Time-domain signal of ``s``, by default of the mixture."""
        return istft(self.mixture if s is None else s, self.stft)

    @property
    def clean_waveform(self) -> Waveform:
        return istft(self.clean, self.stft)

    @property
    def duration(self) -> float:
        return self.clean_waveform.duration


def make_mixture(
    decoder: DecoderModel,
    frames: int,
    snr_db: float = 0.0,
    seed: Seed = 0,
    rank: int = DEFAULT_NMF_RANK,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
) -> Mixture:
    """Draw one utterance of ``frames`` frames at ``snr_db``.

    The SNR is measured on the drawn coefficients, not on their variances.
    """
    if frames < 2:
        raise InvalidInputError(f"Need at least 2 frames, got {frames}")
    if rank < 1:
        raise InvalidInputError(f"NMF rank must be at least 1, got {rank}")
    stft_cfg = stft_config_for(decoder.freq_dim)
    rng = np.random.default_rng(seed)

    latents = rng.standard_normal((frames, decoder.latent_dim))
    clean = _circular(rng, decoder.decode(latents))
    nmf = NmfParams(rng.uniform(size=(decoder.freq_dim, rank)), rng.uniform(size=(rank, frames)))
    noise = _circular(rng, noise_variance(nmf))

    gain = np.sum(power(clean)) / (np.sum(power(noise)) * 10.0 ** (snr_db / 10.0))
    noise = np.sqrt(gain) * noise
    nmf = NmfParams(nmf.W * gain, nmf.H)

    length = (frames - 1) * stft_cfg.hop_size

    def spectrogram(data):
        return ComplexSpectrogram(data, sample_rate=sample_rate, length=length)

    return Mixture(
        mixture=spectrogram(clean + noise),
        clean=spectrogram(clean),
        noise=spectrogram(noise),
        latents=latents,
        nmf=nmf,
        snr_db=float(snr_db),
        stft=stft_cfg,
    )


def make_corpus(
    decoder: DecoderModel,
    count: int,
    frames: int,
    snrs_db: tp.Sequence[float] = DEFAULT_SNR_LADDER,
    seed: int = 0,
    rank: int = DEFAULT_NMF_RANK,
) -> list[Mixture]:
    """``count`` utterances per SNR, each with its own seed stream.

    Utterance ``i`` at the ``k``-th SNR is keyed by ``(k, i)``. Raising ``count``
    leaves the existing utterances unchanged; since the key is the position of
    the SNR in ``snrs_db``, inserting or reordering SNRs reassigns the streams.
    """
    if count < 1:
        raise InvalidInputError(f"Corpus size must be at least 1, got {count}")
    corpus = [
        make_mixture(decoder, frames, snr, np.random.SeedSequence(seed, spawn_key=(k, i)), rank)
        for k, snr in enumerate(snrs_db)
        for i in range(count)
    ]
    logger.info("Generated %d synthetic utterances of %d frames", len(corpus), frames)
    return corpus
