"""
Deep speech priors.

A decoder maps a latent sequence ``z`` (``T × L``) to speech variances
``v(z)`` (``T × F``) and provides the exact vector-Jacobian product needed
by the samplers' score function. Two architectures ship:

* :class:`AffineExpDecoder`, frame-wise ``v_t = exp(A z_t + b)``, whose
  Jacobian has a closed form.
* :class:`GruDecoder`, a gated recurrent network in which every output frame
  depends on all earlier latent frames.

Both accept a batch of chains (``M × T × L``) in a single call.
"""

from .decoder import AffineExpDecoder, DecoderModel, LatentSequence, SpeechVariances, check_latents
from .gru import DEFAULT_HIDDEN_SIZE, GruDecoder
from .weights import (
    ARCHITECTURES,
    MAGIC,
    dump_decoder,
    generate_decoder_file,
    load_decoder,
    parse_decoder,
    random_decoder,
    save_decoder,
)


def decode(m: DecoderModel, z: LatentSequence) -> SpeechVariances:
    """Speech variances ``v(z)`` of decoder ``m``."""
    return m.decode(z)


def decode_vjp(m: DecoderModel, z: LatentSequence, cot) -> LatentSequence:
    """Vector-Jacobian product ``Jᵀ cot`` of decoder ``m`` at ``z``."""
    return m.decode_vjp(z, cot)


__all__ = [
    "ARCHITECTURES",
    "AffineExpDecoder",
    "DEFAULT_HIDDEN_SIZE",
    "DecoderModel",
    "GruDecoder",
    "LatentSequence",
    "MAGIC",
    "SpeechVariances",
    "check_latents",
    "decode",
    "decode_vjp",
    "dump_decoder",
    "generate_decoder_file",
    "load_decoder",
    "parse_decoder",
    "random_decoder",
    "save_decoder",
]
