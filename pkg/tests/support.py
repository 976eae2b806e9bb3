import os

import numpy as np
import scipy.signal

from mcse.prior import AffineExpDecoder, GruDecoder

FULL_SCALE = os.environ.get("MCSE_TEST_SCALE", "quick") == "full"


def scale(quick, full):
    """The quick value, or the full one under ``MCSE_TEST_SCALE=full``."""
    return full if FULL_SCALE else quick


def affine_decoder(latent_dim=4, freq_dim=9, seed=0, **kwargs) -> AffineExpDecoder:
    return AffineExpDecoder.random(latent_dim, freq_dim, seed=seed, **kwargs)


def gru_decoder(latent_dim=4, freq_dim=9, hidden_size=6, seed=0, **kwargs) -> GruDecoder:
    return GruDecoder.random(latent_dim, freq_dim, hidden_size, seed=seed, **kwargs)


def ar_signal(length, seed=0, coefficients=(0.9, -0.5)):
    """Speech-shaped AR(2) noise."""
    noise = np.random.default_rng(seed).standard_normal(length)
    return 0.1 * scipy.signal.lfilter([1.0], [1.0, -coefficients[0], -coefficients[1]], noise)
