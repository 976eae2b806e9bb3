"""
Enhancement metrics.

SI-SDR
------

With estimate ``e`` and reference ``r``, the reference is scaled by
``α = ⟨e, r⟩ / ‖r‖²`` and::

    SI-SDR = 10 log10( ‖α r‖² / ‖α r - e‖² )

No mean is removed. When the distortion vanishes numerically the value is
capped at :data:`SI_SDR_CAP_DB`.

RTF
---

The real-time factor is processing time divided by audio duration.
"""

from dataclasses import dataclass
import time
import typing as tp

import numpy as np
import numpy.typing as npt

from .errors import InvalidInputError
from .spectral import Waveform

SI_SDR_CAP_DB = 100.0


def _samples(w: Waveform | npt.ArrayLike) -> npt.NDArray[np.float64]:
    if isinstance(w, Waveform):
        return w.samples
    return np.asarray(w, dtype=np.float64)


def si_sdr(est: Waveform | npt.ArrayLike, ref: Waveform | npt.ArrayLike) -> float:
    """Scale-invariant signal-to-distortion ratio in dB.

    Raises:
        InvalidInputError: lengths differ or the reference is all zeros.
    """
    e = _samples(est)
    r = _samples(ref)
    if e.shape != r.shape:
        raise InvalidInputError(f"Estimate has {e.shape} samples, reference has {r.shape}")
    reference_energy = float(np.dot(r, r))
    if reference_energy == 0.0:
        raise InvalidInputError("SI-SDR reference is identically zero")
    alpha = float(np.dot(e, r)) / reference_energy
    target = alpha * r
    distortion = target - e
    target_energy = float(np.dot(target, target))
    distortion_energy = float(np.dot(distortion, distortion))
    if distortion_energy <= target_energy * 10.0 ** (-SI_SDR_CAP_DB / 10.0):
        return SI_SDR_CAP_DB
    return float(10.0 * np.log10(target_energy / distortion_energy))


def measure_rtf(processing_seconds: float, audio_seconds: float) -> float:
    """Seconds of computation per second of audio."""
    if not audio_seconds > 0:
        raise InvalidInputError(f"Audio duration must be positive, got {audio_seconds}")
    return processing_seconds / audio_seconds


@dataclass(frozen=True)
class MetricReport:
    si_sdr_db: float
    rtf: float

    def __post_init__(self):
        if not (np.isfinite(self.si_sdr_db) and np.isfinite(self.rtf)):
            raise InvalidInputError(f"Metric values must be finite, got {self.si_sdr_db}, {self.rtf}")


def evaluate(est: Waveform, ref: Waveform, processing_seconds: float) -> MetricReport:
    """SI-SDR of ``est`` against ``ref`` and the RTF of producing ``est``."""
    return MetricReport(si_sdr(est, ref), measure_rtf(processing_seconds, ref.duration))


class TimingAverage(object):
    """Running mean and maximum of timings, e.g. RTFs over a corpus."""

    def __init__(self):
        self.total_time = 0.0
        self.total_count = 0
        self.max_time = 0.0

    def update(self, new_t: float):
        self.max_time = max(self.max_time, new_t)
        self.total_time += new_t
        self.total_count += 1

    def count(self) -> int:
        return self.total_count

    def mean(self) -> float:
        return self.total_time / self.total_count

    def max(self) -> float:
        return self.max_time


class Stopwatch(object):
    """Context manager measuring elapsed wall-clock seconds::

        with Stopwatch() as watch:
            run()
        watch.seconds
    """

    def __init__(self, clock: tp.Callable[[], float] = time.perf_counter):
        self._clock = clock
        self._start = 0.0
        self.seconds = 0.0

    def __enter__(self) -> "Stopwatch":
        self._start = self._clock()
        return self

    def __exit__(self, *exc_info):
        self.seconds = self._clock() - self._start
