"""
NMF noise model.

The noise STFT coefficients are circularly-symmetric complex Gaussian with
variance ``[WH]_{ft}``. Together with speech variances ``v`` the mixture has
variance ``V = v + WH`` and per-frame log-likelihood::

    ℓ_t = Σ_f ( -log π - log V_{tf} - |x_{tf}|² / V_{tf} )

Arrays indexed by frame are stored ``T × F``, matching the spectrograms;
``W`` is ``F × R`` and ``H`` is ``R × T``.

M-step
------

:func:`mstep_update` makes one multiplicative sweep over ``W`` and then ``H``.
With ``N = mean_i x/V_i²`` and ``D = mean_i 1/V_i`` over the speech variance
samples, each factor is multiplied by ``(numerator / denominator) ** γ``,
where the numerator contracts ``N`` and the denominator contracts ``D`` with
the other factor. For γ = ½ the sweep is a majorise-minimise step and never
decreases the sample-averaged log-likelihood; γ = 1 is the plain ratio rule.
"""

from dataclasses import dataclass
import logging
import typing as tp

import numpy as np
import numpy.typing as npt

from .errors import InvalidInputError, NumericalError

logger = logging.getLogger("Mcse")

EPS_NMF = 1e-8
DEFAULT_NMF_RANK = 8
DEFAULT_MSTEP_EXPONENT = 0.5

_LOG_PI = float(np.log(np.pi))


@dataclass(frozen=True)
class NmfParams:
    """Nonnegative factors of the noise variance.

    Entries below :data:`EPS_NMF` are raised to it on construction.

    Args:
        W: ``F × R`` spectral templates.
        H: ``R × T`` activations.
    """

    W: npt.NDArray[np.float64]
    H: npt.NDArray[np.float64]

    def __post_init__(self):
        W = np.asarray(self.W, dtype=np.float64)
        H = np.asarray(self.H, dtype=np.float64)
        if W.ndim != 2 or H.ndim != 2 or W.shape[1] != H.shape[0]:
            raise InvalidInputError(f"W {W.shape} and H {H.shape} are not F×R and R×T")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(H))):
            raise NumericalError("NMF factors contain non-finite values")
        object.__setattr__(self, "W", np.maximum(W, EPS_NMF))
        object.__setattr__(self, "H", np.maximum(H, EPS_NMF))

    @property
    def freq_dim(self) -> int:
        return self.W.shape[0]

    @property
    def rank(self) -> int:
        return self.W.shape[1]

    @property
    def frames(self) -> int:
        return self.H.shape[1]


def noise_variance(p: NmfParams) -> npt.NDArray[np.float64]:
    """``T × F`` noise variance ``[WH]ᵀ``, floored at :data:`EPS_NMF`."""
    return np.maximum((p.W @ p.H).T, EPS_NMF)


def _check_power(x_pow: npt.ArrayLike, frames: int, freq_dim: int) -> npt.NDArray[np.float64]:
    x_pow = np.asarray(x_pow, dtype=np.float64)
    if x_pow.shape != (frames, freq_dim):
        raise InvalidInputError(f"Power spectrogram has shape {x_pow.shape}, expected {(frames, freq_dim)}")
    return x_pow


def _stack_samples(v_s_samples: tp.Sequence[npt.ArrayLike] | npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    samples = np.asarray(v_s_samples, dtype=np.float64)
    if samples.ndim == 2:
        samples = samples[None]
    if samples.ndim != 3 or samples.shape[0] == 0:
        raise InvalidInputError(f"Expected at least one T×F speech variance sample, got shape {samples.shape}")
    return samples


def frame_loglik(
    x_pow: npt.NDArray[np.float64], v_s: npt.NDArray[np.float64], noise_var: npt.NDArray[np.float64]
) -> npt.NDArray[np.float64]:
    """Per-frame log-likelihood ``ℓ_t`` of the mixture.

    Args:
        x_pow: ``T × F`` observed power ``|x|²``.
        v_s: speech variances, ``T × F`` or with leading batch axes.
        noise_var: ``T × F`` noise variance.
    Returns:
        Log-likelihoods of shape ``v_s.shape[:-1]``.
    Raises:
        NumericalError: a mixture variance is not positive and finite.
    """
    V = v_s + noise_var
    if not np.all(V > 0) or not np.all(np.isfinite(V)):
        bad = np.argwhere(~((V > 0) & np.isfinite(V)))[0]
        raise NumericalError("Mixture variance is not positive and finite", frame=int(bad[-2]))
    return np.sum(-_LOG_PI - np.log(V) - x_pow / V, axis=-1)


def mixture_loglik(x_pow: npt.ArrayLike, v_s: npt.ArrayLike, p: NmfParams) -> float:
    """Summed log-likelihood ``Σ_t ℓ_t`` of one speech variance matrix."""
    v_s = np.asarray(v_s, dtype=np.float64)
    x_pow = _check_power(x_pow, p.frames, p.freq_dim)
    if v_s.shape != x_pow.shape:
        raise InvalidInputError(f"Speech variances have shape {v_s.shape}, expected {x_pow.shape}")
    return float(np.sum(frame_loglik(x_pow, v_s, noise_variance(p))))


def mean_mixture_loglik(
    x_pow: npt.ArrayLike, v_s_samples: tp.Sequence[npt.ArrayLike] | npt.NDArray[np.float64], p: NmfParams
) -> float:
    """:func:`mixture_loglik` averaged over speech variance samples."""
    samples = _stack_samples(v_s_samples)
    x_pow = _check_power(x_pow, p.frames, p.freq_dim)
    if samples.shape[1:] != x_pow.shape:
        raise InvalidInputError(f"Speech variances have shape {samples.shape[1:]}, expected {x_pow.shape}")
    return float(np.mean(np.sum(frame_loglik(x_pow, samples, noise_variance(p)), axis=-1)))


def _statistics(
    x_pow: npt.NDArray[np.float64],
    samples: npt.NDArray[np.float64],
    W: npt.NDArray[np.float64],
    H: npt.NDArray[np.float64],
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    V = samples + np.maximum((W @ H).T, EPS_NMF)
    inverse = 1.0 / V
    return np.mean(x_pow * inverse * inverse, axis=0), np.mean(inverse, axis=0)


def mstep_update(
    p: NmfParams,
    x_pow: npt.ArrayLike,
    v_s_samples: tp.Sequence[npt.ArrayLike] | npt.NDArray[np.float64],
    exponent: float = DEFAULT_MSTEP_EXPONENT,
) -> NmfParams:
    """One multiplicative sweep, ``W`` then ``H``, against Monte-Carlo samples.

    Args:
        p: current factors.
        x_pow: ``T × F`` observed power.
        v_s_samples: ``M`` speech variance matrices (``M × T × F`` or a list).
        exponent: γ applied to the update ratios.
    Returns:
        New factors, floored at :data:`EPS_NMF`.
    """
    samples = _stack_samples(v_s_samples)
    x_pow = _check_power(x_pow, p.frames, p.freq_dim)
    if samples.shape[1:] != x_pow.shape:
        raise InvalidInputError(f"Speech variances have shape {samples.shape[1:]}, expected {x_pow.shape}")
    if not exponent > 0:
        raise InvalidInputError(f"M-step exponent must be positive, got {exponent}")

    W, H = p.W, p.H
    N, D = _statistics(x_pow, samples, W, H)
    W = np.maximum(W * ((N.T @ H.T) / np.maximum(D.T @ H.T, EPS_NMF)) ** exponent, EPS_NMF)
    N, D = _statistics(x_pow, samples, W, H)
    H = np.maximum(H * ((W.T @ N.T) / np.maximum(W.T @ D.T, EPS_NMF)) ** exponent, EPS_NMF)
    return NmfParams(W, H)


def init_nmf(F: int, T: int, R: int, seed: int, x_pow: npt.ArrayLike) -> NmfParams:
    """Random factors scaled so that ``mean(WH)`` equals ``mean(x_pow)``.

    Entries are drawn uniformly from ``(0, 1)``; the same seed always gives the
    same factors.
    """
    if R < 1:
        raise InvalidInputError(f"NMF rank must be at least 1, got {R}")
    x_pow = _check_power(x_pow, T, F)
    rng = np.random.default_rng(seed)
    W = rng.uniform(size=(F, R))
    H = rng.uniform(size=(R, T))
    target = max(float(np.mean(x_pow)), EPS_NMF)
    scale = np.sqrt(target / float(np.mean(W @ H)))
    logger.debug("NMF init: rank %d, mean power %.3g", R, target)
    return NmfParams(W * scale, H * scale)
