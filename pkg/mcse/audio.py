"""WAV input and output.

Reads 16-bit PCM and 32-bit float WAV files. Multichannel input is
downmixed to mono by averaging the channels.
"""

import logging
import os
import typing as tp

import numpy as np
import soundfile as sf

from .errors import InvalidInputError
from .spectral import Waveform

logger = logging.getLogger("Mcse")

WavSubtype = tp.Literal["PCM_16", "FLOAT"]

_SUPPORTED_SUBTYPES = ("PCM_16", "FLOAT")


def wav_subtype(path: str | os.PathLike) -> WavSubtype:
    """Sample format of a WAV file, ``"PCM_16"`` or ``"FLOAT"``.

    Raises:
        InvalidInputError: the file is unreadable or uses another sample format.
    """
    try:
        info = sf.info(str(path))
    except (RuntimeError, OSError) as e:
        raise InvalidInputError(f"Cannot read audio file {path}: {e}") from e
    if info.subtype not in _SUPPORTED_SUBTYPES:
        raise InvalidInputError(f"Unsupported WAV sample format {info.subtype} in {path}")
    return tp.cast(WavSubtype, info.subtype)


def read_wav(path: str | os.PathLike) -> Waveform:
    """Read a WAV file as a mono :class:`Waveform`."""
    wav_subtype(path)
    try:
        data, sample_rate = sf.read(str(path), dtype="float64", always_2d=True)
    except (RuntimeError, OSError) as e:
        raise InvalidInputError(f"Cannot read audio file {path}: {e}") from e
    if data.shape[1] > 1:
        logger.info("Downmixing %d channels of %s to mono", data.shape[1], path)
    return Waveform(data.mean(axis=1), sample_rate)


def write_wav(path: str | os.PathLike, w: Waveform, subtype: WavSubtype = "PCM_16") -> None:
    """Write a mono WAV file.

    PCM output is clipped to ``[-1, 1]``.
    """
    if subtype not in _SUPPORTED_SUBTYPES:
        raise InvalidInputError(f"Unsupported WAV sample format {subtype}")
    samples = w.samples
    if subtype == "PCM_16":
        clipped = np.clip(samples, -1.0, 1.0)
        if not np.array_equal(clipped, samples):
            logger.warning("Clipping %s samples outside [-1, 1] in %s", np.sum(clipped != samples), path)
        samples = clipped
    sf.write(str(path), samples, w.sample_rate, subtype=subtype, format="WAV")
