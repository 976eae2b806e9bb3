"""
Sampling targets.

A target is the unnormalised posterior over latent sequences ``z``::

    log p(z | x) = Σ_t [ ℓ_t(z) + log N(z_t; 0, I) ] + const

where the per-frame log-likelihood ``ℓ_t`` may depend on the whole sequence.
Targets accept a single sequence (``T × L``) or a batch of chains
(``M × T × L``) and return per-frame values with the batch axes kept.
"""

import typing as tp

import numpy as np
import numpy.typing as npt

from ..errors import InvalidInputError, NumericalError
from ..noise_nmf import frame_loglik
from ..prior import DecoderModel, LatentSequence, check_latents

_LOG_2PI = float(np.log(2.0 * np.pi))


class Evaluation(tp.NamedTuple):
    """Target values at one state."""

    frame_loglik: npt.NDArray[np.float64]
    frame_logprior: npt.NDArray[np.float64]
    score: npt.NDArray[np.float64] | None

    @property
    def frame_logdensity(self) -> npt.NDArray[np.float64]:
        return self.frame_loglik + self.frame_logprior

    @property
    def logdensity(self) -> npt.NDArray[np.float64] | float:
        """Summed over frames; one value per chain for batched states."""
        return np.sum(self.frame_logdensity, axis=-1)


def log_prior_frames(z: LatentSequence) -> npt.NDArray[np.float64]:
    """Standard-normal log-density of every frame ``z_t``."""
    return -0.5 * np.sum(z * z, axis=-1) - 0.5 * z.shape[-1] * _LOG_2PI


def check_score(score: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    """Raise :class:`NumericalError` naming the first frame with a non-finite gradient."""
    finite = np.isfinite(score)
    if not np.all(finite):
        frame = int(np.argwhere(~finite)[0][-2])
        raise NumericalError("Non-finite score", frame=frame)
    return score


@tp.runtime_checkable
class Target(tp.Protocol):
    @property
    def latent_dim(self) -> int: ...

    @property
    def frames(self) -> int: ...

    def frame_loglik(self, z: LatentSequence) -> npt.NDArray[np.float64]:
        """``ℓ_t(z)`` for every frame, given the full sequence."""
        ...

    def score(self, z: LatentSequence) -> LatentSequence:
        """Gradient of the summed log-density, same shape as ``z``."""
        ...

    def evaluate(self, z: LatentSequence, with_score: bool = True) -> Evaluation: ...


class _TargetBase(object):
    _latent_dim: int
    _frames: int

    @property
    def latent_dim(self) -> int:
        return self._latent_dim

    @property
    def frames(self) -> int:
        return self._frames

    def _check(self, z: npt.ArrayLike) -> LatentSequence:
        z = check_latents(z, self._latent_dim)
        if z.shape[-2] != self._frames:
            raise InvalidInputError(f"Latent sequence has {z.shape[-2]} frames, target has {self._frames}")
        return z

    def frame_loglik(self, z: LatentSequence) -> npt.NDArray[np.float64]:
        return self.evaluate(z, with_score=False).frame_loglik

    def score(self, z: LatentSequence) -> LatentSequence:
        score = self.evaluate(z, with_score=True).score
        assert score is not None
        return score

    def evaluate(self, z: LatentSequence, with_score: bool = True) -> Evaluation:
        raise NotImplementedError

    def logdensity(self, z: LatentSequence) -> npt.NDArray[np.float64] | float:
        """Summed log-density ``Σ_t ℓ_t(z) + log p(z_t)``."""
        return self.evaluate(z, with_score=False).logdensity


class SpeechTarget(_TargetBase):
    """Posterior of the latents given a noisy power spectrogram.

    The likelihood of frame ``t`` is the circular complex Gaussian with variance
    ``v_t(z) + [WH]_t``, where ``v(z)`` comes from the decoder. Its gradient
    reaches ``z`` through the decoder's vector-Jacobian product with cotangent
    ``(|x|² - V) / V²``.

    Args:
        decoder: speech prior.
        x_pow: ``T × F`` observed power.
        noise_var: ``T × F`` noise variance of the current NMF parameters.
    """

    def __init__(self, decoder: DecoderModel, x_pow: npt.ArrayLike, noise_var: npt.ArrayLike):
        x_pow = np.asarray(x_pow, dtype=np.float64)
        noise_var = np.asarray(noise_var, dtype=np.float64)
        if x_pow.ndim != 2 or x_pow.shape[1] != decoder.freq_dim:
            raise InvalidInputError(
                f"Power spectrogram has shape {x_pow.shape}, decoder expects {decoder.freq_dim} frequency bins"
            )
        if noise_var.shape != x_pow.shape:
            raise InvalidInputError(f"Noise variance has shape {noise_var.shape}, expected {x_pow.shape}")
        self.decoder = decoder
        self.x_pow = x_pow
        self.noise_var = noise_var
        self._latent_dim = decoder.latent_dim
        self._frames = x_pow.shape[0]

    def evaluate(self, z: LatentSequence, with_score: bool = True) -> Evaluation:
        z = self._check(z)
        v = self.decoder.decode(z)
        loglik = frame_loglik(self.x_pow, v, self.noise_var)
        score = None
        if with_score:
            V = v + self.noise_var
            cotangent = (self.x_pow - V) / (V * V)
            score = check_score(self.decoder.decode_vjp(z, cotangent) - z)
        return Evaluation(loglik, log_prior_frames(z), score)


class GaussianTarget(_TargetBase):
    """Frame-independent quadratic likelihood ``ℓ_t(z) = -½ z_tᵀ P z_t + b_tᵀ z_t``.

    With the standard-normal prior the posterior of every frame is Gaussian with
    precision ``P + I`` and mean ``(P + I)⁻¹ b_t``. ``P`` need not be positive
    definite, only ``P + I``.

    Args:
        precision: ``L × L`` symmetric matrix ``P``.
        shift: ``T × L`` linear terms ``b``.
    """

    def __init__(self, precision: npt.ArrayLike, shift: npt.ArrayLike):
        precision = np.atleast_2d(np.asarray(precision, dtype=np.float64))
        shift = np.asarray(shift, dtype=np.float64)
        latent_dim = precision.shape[0]
        if precision.shape != (latent_dim, latent_dim) or not np.allclose(precision, precision.T):
            raise InvalidInputError(f"Precision must be a symmetric L×L matrix, got shape {precision.shape}")
        if shift.ndim != 2 or shift.shape[1] != latent_dim:
            raise InvalidInputError(f"Shift must be T×{latent_dim}, got shape {shift.shape}")
        if np.any(np.linalg.eigvalsh(precision + np.eye(latent_dim)) <= 0):
            raise InvalidInputError("Posterior precision P + I is not positive definite")
        self.precision = precision
        self.shift = shift
        self._latent_dim = latent_dim
        self._frames = shift.shape[0]

    @classmethod
    def from_posterior(cls, mean: npt.ArrayLike, cov: npt.ArrayLike, frames: int = 1) -> "GaussianTarget":
        """Target whose posterior is ``N(mean, cov)`` in every frame.

        Args:
            mean: length-``L`` vector or ``T × L`` per-frame means.
            cov: ``L × L`` posterior covariance.
            frames: number of frames when ``mean`` is a vector.
        """
        cov = np.atleast_2d(np.asarray(cov, dtype=np.float64))
        mean = np.asarray(mean, dtype=np.float64)
        if mean.ndim == 1:
            mean = np.tile(mean, (frames, 1))
        posterior_precision = np.linalg.inv(cov)
        posterior_precision = 0.5 * (posterior_precision + posterior_precision.T)
        return cls(posterior_precision - np.eye(cov.shape[0]), mean @ posterior_precision)

    @property
    def posterior_cov(self) -> npt.NDArray[np.float64]:
        return np.linalg.inv(self.precision + np.eye(self._latent_dim))

    @property
    def posterior_mean(self) -> npt.NDArray[np.float64]:
        return self.shift @ self.posterior_cov

    def evaluate(self, z: LatentSequence, with_score: bool = True) -> Evaluation:
        z = self._check(z)
        zp = z @ self.precision
        loglik = -0.5 * np.sum(zp * z, axis=-1) + np.sum(self.shift * z, axis=-1)
        score = check_score(self.shift - zp - z) if with_score else None
        return Evaluation(loglik, log_prior_frames(z), score)
