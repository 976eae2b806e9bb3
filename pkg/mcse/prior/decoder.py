"""Decoder interface and the frame-wise affine-exp decoder."""

import typing as tp

import numpy as np
import numpy.typing as npt
from typing_extensions import Self

from ..errors import InvalidInputError

LatentSequence: tp.TypeAlias = npt.NDArray[np.float64]
"""``T × L`` latent trajectory, or ``M × T × L`` for a batch of chains."""

SpeechVariances: tp.TypeAlias = npt.NDArray[np.float64]
"""``T × F`` strictly positive spectral variances, or ``M × T × F``."""

PREACTIVATION_CLAMP = 30.0


@tp.runtime_checkable
class DecoderModel(tp.Protocol):
    """A differentiable map from latents ``z`` to speech variances ``v(z)``.

    Implementations are immutable after construction and accept either a single
    sequence (``T × L``) or a batch of chains (``M × T × L``); the batch axis is
    carried through to the output.
    """

    arch: tp.ClassVar[str]

    @property
    def latent_dim(self) -> int: ...

    @property
    def freq_dim(self) -> int: ...

    @property
    def hidden_size(self) -> int: ...

    def decode(self, z: LatentSequence) -> SpeechVariances:
        """Speech variances for every frame, strictly positive."""
        ...

    def decode_vjp(self, z: LatentSequence, cot: npt.NDArray[np.float64]) -> LatentSequence:
        """Exact vector-Jacobian product ``Jᵀ cot`` of :meth:`decode` at ``z``."""
        ...

    def tensors(self) -> dict[str, npt.NDArray[np.float64]]:
        """Named parameter tensors in storage order."""
        ...


def check_latents(z: npt.ArrayLike, latent_dim: int) -> LatentSequence:
    """Validate a latent sequence or batch and return it as float64."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim not in (2, 3):
        raise InvalidInputError(f"Latents must be T×L or M×T×L, got shape {z.shape}")
    if z.shape[-1] != latent_dim:
        raise InvalidInputError(f"Latent width {z.shape[-1]} does not match the decoder's latent_dim {latent_dim}")
    if z.shape[-2] == 0:
        raise InvalidInputError("Latent sequence has no frames")
    if not np.all(np.isfinite(z)):
        raise InvalidInputError("Latents contain non-finite values")
    return z


def check_cotangent(z: LatentSequence, cot: npt.ArrayLike, freq_dim: int) -> npt.NDArray[np.float64]:
    cot = np.asarray(cot, dtype=np.float64)
    expected = z.shape[:-1] + (freq_dim,)
    if cot.shape != expected:
        raise InvalidInputError(f"Cotangent has shape {cot.shape}, expected {expected}")
    return cot


def exp_output(pre: npt.NDArray[np.float64]) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.bool_]]:
    """Clamped exponential output layer.

    Returns:
        The variances and the mask of pre-activations inside the clamp range,
        where the derivative of the clamp is one.
    """
    inside = np.abs(pre) <= PREACTIVATION_CLAMP
    return np.exp(np.clip(pre, -PREACTIVATION_CLAMP, PREACTIVATION_CLAMP)), inside


def frozen(array: npt.ArrayLike, shape: tuple[int, ...], name: str) -> npt.NDArray[np.float64]:
    array = np.array(array, dtype=np.float64)
    if array.shape != shape:
        raise InvalidInputError(f"Parameter {name} has shape {array.shape}, expected {shape}")
    if not np.all(np.isfinite(array)):
        raise InvalidInputError(f"Parameter {name} contains non-finite values")
    array.flags.writeable = False
    return array


def float32_exact(array: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    """Round to the nearest float32 so that saved weights reload bit-for-bit."""
    return array.astype(np.float32).astype(np.float64)


class AffineExpDecoder(object):
    """Frame-wise decoder ``v_t = exp(A z_t + b)``.

    There is no coupling between frames, so its Jacobian is block diagonal and
    ``Jᵀ cot`` has the closed form ``(v ⊙ cot) A`` per frame.

    Args:
        weight: ``F × L`` matrix ``A``.
        bias: length-``F`` vector ``b``.
    """

    arch: tp.ClassVar[str] = "affine_exp"

    def __init__(self, weight: npt.ArrayLike, bias: npt.ArrayLike):
        weight = np.asarray(weight, dtype=np.float64)
        if weight.ndim != 2:
            raise InvalidInputError(f"weight must be F×L, got shape {weight.shape}")
        self._weight = frozen(weight, weight.shape, "out.weight")
        self._bias = frozen(bias, (weight.shape[0],), "out.bias")

    @property
    def latent_dim(self) -> int:
        return self._weight.shape[1]

    @property
    def freq_dim(self) -> int:
        return self._weight.shape[0]

    @property
    def hidden_size(self) -> int:
        return 0

    def __repr__(self):
        return f"AffineExpDecoder(latent_dim={self.latent_dim}, freq_dim={self.freq_dim})"

    def decode(self, z: LatentSequence) -> SpeechVariances:
        z = check_latents(z, self.latent_dim)
        v, _ = exp_output(z @ self._weight.T + self._bias)
        return v

    def decode_vjp(self, z: LatentSequence, cot: npt.NDArray[np.float64]) -> LatentSequence:
        z = check_latents(z, self.latent_dim)
        cot = check_cotangent(z, cot, self.freq_dim)
        v, inside = exp_output(z @ self._weight.T + self._bias)
        return (cot * v * inside) @ self._weight

    def tensors(self) -> dict[str, npt.NDArray[np.float64]]:
        return {"out.weight": self._weight, "out.bias": self._bias}

    @classmethod
    def tensor_shapes(cls, latent_dim: int, freq_dim: int, hidden_size: int) -> dict[str, tuple[int, ...]]:
        return {"out.weight": (freq_dim, latent_dim), "out.bias": (freq_dim,)}

    @classmethod
    def from_tensors(
        cls, latent_dim: int, freq_dim: int, hidden_size: int, tensors: tp.Mapping[str, npt.NDArray[np.float64]]
    ) -> Self:
        return cls(tensors["out.weight"], tensors["out.bias"])

    @classmethod
    def random(
        cls,
        latent_dim: int,
        freq_dim: int,
        hidden_size: int = 0,
        seed: int = 0,
        scale: float = 1.0,
        offset: float = -2.0,
    ) -> Self:
        """Seeded random decoder with float32-representable parameters.

        Args:
            scale: standard deviation of the entries of ``A``, divided by ``sqrt(L)``.
            offset: mean of the bias, the log of the typical variance.
        """
        rng = np.random.default_rng(seed)
        weight = rng.normal(0.0, scale / np.sqrt(latent_dim), size=(freq_dim, latent_dim))
        bias = offset + 0.5 * rng.normal(size=freq_dim)
        return cls(float32_exact(weight), float32_exact(bias))
