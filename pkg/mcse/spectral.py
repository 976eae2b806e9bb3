"""
Time-frequency analysis and synthesis.

Spectrograms are stored frame-major, ``T × F``, with only the non-negative
frequency bins (``F = fft_size // 2 + 1``).

Padding
-------

:func:`stft` centres every frame: the waveform is reflection-padded with
``fft_size // 2`` samples on both sides before framing, so frame ``t`` is
centred on sample ``t * hop_size`` and::

    T = floor((len + 2 * (fft_size // 2) - fft_size) / hop_size) + 1

:func:`istft` overlap-adds the synthesis frames, divides by the summed
squared window and drops the padding again, which makes the round trip
exact up to the single-precision storage of the spectrogram.

Window gain
-----------

Analysis and synthesis use the same window ``w``. Summed over frames and
over the full spectrum, ``|X|²`` equals ``fft_size * Σw² / hop_size`` times
the signal energy. :func:`window_gain` returns ``Σw² / hop_size`` and
:func:`spectral_energy` divides it out.
"""

from dataclasses import dataclass, field, replace
import typing as tp

import numpy as np
import numpy.typing as npt
import scipy.signal
from typing_extensions import Self

from .errors import ConfigError, InvalidInputError

WindowName = tp.Literal["hann", "sqrt_hann"]

DEFAULT_FFT_SIZE = 1024
DEFAULT_HOP_SIZE = 256
DEFAULT_WINDOW: WindowName = "sqrt_hann"


@dataclass(frozen=True)
class Waveform:
    """A mono time-domain signal.

    Args:
        samples: amplitudes, nominally in ``[-1, 1]``.
        sample_rate: sampling rate in Hz.
    """

    samples: npt.NDArray[np.float64]
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise InvalidInputError(f"Waveform must be one-dimensional, got shape {samples.shape}")
        if samples.size == 0:
            raise InvalidInputError("Waveform is empty")
        if not np.all(np.isfinite(samples)):
            raise InvalidInputError("Waveform contains non-finite samples")
        if int(self.sample_rate) <= 0:
            raise InvalidInputError(f"Sample rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        """Duration in seconds."""
        return len(self) / self.sample_rate


@dataclass(frozen=True)
class StftConfig:
    """Frame geometry and window of the STFT.

    The defaults give ``F = 513`` frequency bins with 75% overlap.
    The squared window must satisfy the constant-overlap-add condition at the
    given hop size.
    """

    fft_size: int = DEFAULT_FFT_SIZE
    hop_size: int = DEFAULT_HOP_SIZE
    window: WindowName = DEFAULT_WINDOW

    def __post_init__(self):
        if self.fft_size <= 0 or self.hop_size <= 0:
            raise ConfigError(f"fft_size and hop_size must be positive, got {self.fft_size}, {self.hop_size}")
        if self.fft_size % 2:
            raise ConfigError(f"fft_size must be even, got {self.fft_size}")
        if self.hop_size > self.fft_size:
            raise ConfigError(f"hop_size {self.hop_size} exceeds fft_size {self.fft_size}")
        if self.window not in ("hann", "sqrt_hann"):
            raise ConfigError(f"Unknown window {self.window!r}, expected 'hann' or 'sqrt_hann'")
        window = self.analysis_window()
        if not scipy.signal.check_COLA(window * window, self.fft_size, self.fft_size - self.hop_size):
            raise ConfigError(
                f"Window {self.window!r} with fft_size {self.fft_size} and hop_size {self.hop_size} "
                "does not satisfy the constant-overlap-add condition"
            )

    @property
    def bins(self) -> int:
        return self.fft_size // 2 + 1

    @property
    def pad(self) -> int:
        return self.fft_size // 2

    def analysis_window(self) -> npt.NDArray[np.float64]:
        """The periodic analysis window, also used for synthesis."""
        hann = scipy.signal.get_window("hann", self.fft_size, fftbins=True)
        if self.window == "sqrt_hann":
            return np.sqrt(hann)
        return hann

    def frames_for(self, length: int) -> int:
        """Number of frames :func:`stft` produces for a waveform of ``length`` samples."""
        return (length + 2 * self.pad - self.fft_size) // self.hop_size + 1


@dataclass(frozen=True)
class ComplexSpectrogram:
    """``T × F`` complex STFT coefficients of one utterance.

    Args:
        data: complex matrix, frames along the first axis.
        sample_rate: sampling rate of the analysed waveform, if known.
        length: number of samples of the analysed waveform, if known.
    """

    data: npt.NDArray[np.complex64]
    sample_rate: int | None = None
    length: int | None = field(default=None)

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2 or data.shape[0] == 0 or data.shape[1] == 0:
            raise InvalidInputError(f"Spectrogram must be a non-empty T×F matrix, got shape {data.shape}")
        data = data.astype(np.complex64, copy=False)
        if not np.all(np.isfinite(data)):
            raise InvalidInputError("Spectrogram contains non-finite entries")
        object.__setattr__(self, "data", data)

    @property
    def frames(self) -> int:
        return self.data.shape[0]

    @property
    def bins(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def with_data(self, data: npt.ArrayLike) -> Self:
        """Same metadata, new coefficients of the same shape."""
        data = np.asarray(data)
        if data.shape != self.data.shape:
            raise InvalidInputError(f"Expected coefficients of shape {self.data.shape}, got {data.shape}")
        return replace(self, data=data)


def window_gain(c: StftConfig) -> float:
    """``Σw² / hop_size``, the constant the squared windows overlap-add to."""
    window = c.analysis_window()
    return float(np.sum(window * window) / c.hop_size)


def stft(w: Waveform, c: StftConfig) -> ComplexSpectrogram:
    """Short-time Fourier transform with centred, reflection-padded frames.

    Args:
        w: waveform with at least ``c.fft_size`` samples.
        c: frame geometry and window.
    Returns:
        ``T × F`` spectrogram carrying the waveform's sample rate and length.
    Raises:
        InvalidInputError: the waveform is shorter than one frame.
    """
    if len(w) < c.fft_size:
        raise InvalidInputError(f"Waveform of {len(w)} samples is shorter than one frame ({c.fft_size} samples)")
    padded = np.pad(w.samples, (c.pad, c.pad), mode="reflect")
    frames = np.lib.stride_tricks.sliding_window_view(padded, c.fft_size)[:: c.hop_size]
    coefficients = np.fft.rfft(frames * c.analysis_window(), n=c.fft_size, axis=-1)
    return ComplexSpectrogram(coefficients.astype(np.complex64), sample_rate=w.sample_rate, length=len(w))


def istft(s: ComplexSpectrogram, c: StftConfig, sample_rate: int | None = None) -> Waveform:
    """Inverse STFT by weighted overlap-add.

    Args:
        s: spectrogram produced by :func:`stft` with a compatible config.
        c: frame geometry and window.
        sample_rate: overrides the spectrogram's sample rate; required if the
            spectrogram does not carry one.
    Returns:
        The waveform, trimmed to the spectrogram's recorded length or, when no
        length is recorded, to ``(T - 1) * hop_size`` samples.
    Raises:
        InvalidInputError: the number of bins does not match ``c.fft_size``.
    """
    if s.bins != c.bins:
        raise InvalidInputError(f"Spectrogram has {s.bins} bins but fft_size {c.fft_size} implies {c.bins}")
    rate = sample_rate if sample_rate is not None else s.sample_rate
    if rate is None:
        raise InvalidInputError("Sample rate unknown: pass sample_rate or a spectrogram that records one")

    window = c.analysis_window()
    frames = np.fft.irfft(s.data.astype(np.complex128), n=c.fft_size, axis=-1) * window
    total = c.fft_size + (s.frames - 1) * c.hop_size
    signal = np.zeros(total)
    weight = np.zeros(total)
    squared = window * window
    for t in range(s.frames):
        start = t * c.hop_size
        signal[start : start + c.fft_size] += frames[t]
        weight[start : start + c.fft_size] += squared
    covered = weight > 1e-10
    signal[covered] /= weight[covered]

    length = s.length if s.length is not None else (s.frames - 1) * c.hop_size
    samples = signal[c.pad : c.pad + length]
    if samples.shape[0] < length:
        samples = np.pad(samples, (0, length - samples.shape[0]))
    return Waveform(samples, rate)


def power(s: ComplexSpectrogram | npt.NDArray[np.complexfloating]) -> npt.NDArray[np.float64]:
    """Entry-wise squared modulus ``|s|²`` in double precision."""
    data = s.data if isinstance(s, ComplexSpectrogram) else np.asarray(s)
    data = data.astype(np.complex128, copy=False)
    return data.real * data.real + data.imag * data.imag


def spectral_energy(s: ComplexSpectrogram, c: StftConfig) -> float:
    """Signal energy recovered from the spectrogram by Parseval's relation.

    Bins other than DC and Nyquist stand for two conjugate bins of the full
    spectrum and are counted twice.
    """
    weights = np.full(s.bins, 2.0)
    weights[0] = 1.0
    weights[-1] = 1.0
    total = float(np.sum(power(s) * weights))
    return total / (c.fft_size * window_gain(c))
