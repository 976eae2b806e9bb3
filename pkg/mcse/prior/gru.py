"""
Gated recurrent decoder with hand-written backpropagation through time.

Recurrence, for frames ``t = 1..T`` with ``h_0 = 0``::

    r_t = σ(W_r z_t + U_r h_{t-1} + b_r)
    u_t = σ(W_u z_t + U_u h_{t-1} + b_u)
    c_t = tanh(W_c z_t + U_c (r_t ⊙ h_{t-1}) + b_c)
    h_t = (1 - u_t) ⊙ h_{t-1} + u_t ⊙ c_t
    v_t = exp(clamp(A h_t + a))

Every ``v_t`` depends on ``z_1..z_t``; the recurrence is unidirectional.
"""

import typing as tp

import numpy as np
import numpy.typing as npt
from scipy.special import expit
from typing_extensions import Self

from ..errors import InvalidInputError
from .decoder import (
    LatentSequence,
    SpeechVariances,
    check_cotangent,
    check_latents,
    exp_output,
    float32_exact,
    frozen,
)

DEFAULT_HIDDEN_SIZE = 32

_GATES = ("reset", "update", "candidate")


class _Cache(tp.NamedTuple):
    h_prev: npt.NDArray[np.float64]  # B × T × H, state entering each frame
    reset: npt.NDArray[np.float64]
    update: npt.NDArray[np.float64]
    candidate: npt.NDArray[np.float64]
    hidden: npt.NDArray[np.float64]  # B × T × H, state leaving each frame


class GruDecoder(object):
    """Single-layer GRU followed by an affine map and a clamped exponential.

    Tensors are named ``gru.w_<gate>`` (``H × L``), ``gru.u_<gate>`` (``H × H``)
    and ``gru.b_<gate>`` (``H``) for the gates ``reset``, ``update`` and
    ``candidate``, plus ``out.weight`` (``F × H``) and ``out.bias`` (``F``).
    """

    arch: tp.ClassVar[str] = "gru"

    def __init__(self, tensors: tp.Mapping[str, npt.ArrayLike]):
        out_weight = np.asarray(tensors["out.weight"], dtype=np.float64)
        w_reset = np.asarray(tensors["gru.w_reset"], dtype=np.float64)
        if out_weight.ndim != 2 or w_reset.ndim != 2:
            raise InvalidInputError("out.weight and gru.w_reset must be matrices")
        freq_dim, hidden_size = out_weight.shape
        latent_dim = w_reset.shape[1]
        shapes = self.tensor_shapes(latent_dim, freq_dim, hidden_size)
        self._params = {name: frozen(tensors[name], shape, name) for name, shape in shapes.items()}

    @property
    def latent_dim(self) -> int:
        return self._params["gru.w_reset"].shape[1]

    @property
    def freq_dim(self) -> int:
        return self._params["out.weight"].shape[0]

    @property
    def hidden_size(self) -> int:
        return self._params["out.weight"].shape[1]

    def __repr__(self):
        return f"GruDecoder(latent_dim={self.latent_dim}, freq_dim={self.freq_dim}, hidden_size={self.hidden_size})"

    def _forward(self, z: LatentSequence) -> tuple[npt.NDArray[np.float64], _Cache]:
        p = self._params
        batch, frames, _ = z.shape
        h = np.zeros((batch, self.hidden_size))
        projected = {gate: z @ p[f"gru.w_{gate}"].T + p[f"gru.b_{gate}"] for gate in _GATES}
        cache = _Cache(*(np.empty((batch, frames, self.hidden_size)) for _ in _Cache._fields))
        for t in range(frames):
            r = expit(projected["reset"][:, t] + h @ p["gru.u_reset"].T)
            u = expit(projected["update"][:, t] + h @ p["gru.u_update"].T)
            c = np.tanh(projected["candidate"][:, t] + (r * h) @ p["gru.u_candidate"].T)
            cache.h_prev[:, t] = h
            cache.reset[:, t] = r
            cache.update[:, t] = u
            cache.candidate[:, t] = c
            h = (1.0 - u) * h + u * c
            cache.hidden[:, t] = h
        pre = cache.hidden @ p["out.weight"].T + p["out.bias"]
        return pre, cache

    def decode(self, z: LatentSequence) -> SpeechVariances:
        z = check_latents(z, self.latent_dim)
        batched = z if z.ndim == 3 else z[None]
        pre, _ = self._forward(batched)
        v, _ = exp_output(pre)
        return v if z.ndim == 3 else v[0]

    def decode_vjp(self, z: LatentSequence, cot: npt.NDArray[np.float64]) -> LatentSequence:
        z = check_latents(z, self.latent_dim)
        cot = check_cotangent(z, cot, self.freq_dim)
        batched = z if z.ndim == 3 else z[None]
        cot = cot if z.ndim == 3 else cot[None]

        p = self._params
        pre, cache = self._forward(batched)
        v, inside = exp_output(pre)
        d_hidden = (cot * v * inside) @ p["out.weight"]

        dz = np.zeros_like(batched)
        dh_next = np.zeros((batched.shape[0], self.hidden_size))
        for t in range(batched.shape[1] - 1, -1, -1):
            h_prev = cache.h_prev[:, t]
            r = cache.reset[:, t]
            u = cache.update[:, t]
            c = cache.candidate[:, t]
            dh = d_hidden[:, t] + dh_next

            dc_pre = dh * u * (1.0 - c * c)
            du_pre = dh * (c - h_prev) * u * (1.0 - u)
            d_gated = dc_pre @ p["gru.u_candidate"]
            dr_pre = d_gated * h_prev * r * (1.0 - r)

            dh_next = (
                dh * (1.0 - u)
                + d_gated * r
                + du_pre @ p["gru.u_update"]
                + dr_pre @ p["gru.u_reset"]
            )
            dz[:, t] = dr_pre @ p["gru.w_reset"] + du_pre @ p["gru.w_update"] + dc_pre @ p["gru.w_candidate"]
        return dz if z.ndim == 3 else dz[0]

    def tensors(self) -> dict[str, npt.NDArray[np.float64]]:
        return dict(self._params)

    @classmethod
    def tensor_shapes(cls, latent_dim: int, freq_dim: int, hidden_size: int) -> dict[str, tuple[int, ...]]:
        shapes: dict[str, tuple[int, ...]] = {}
        for gate in _GATES:
            shapes[f"gru.w_{gate}"] = (hidden_size, latent_dim)
            shapes[f"gru.u_{gate}"] = (hidden_size, hidden_size)
            shapes[f"gru.b_{gate}"] = (hidden_size,)
        shapes["out.weight"] = (freq_dim, hidden_size)
        shapes["out.bias"] = (freq_dim,)
        return shapes

    @classmethod
    def from_tensors(
        cls, latent_dim: int, freq_dim: int, hidden_size: int, tensors: tp.Mapping[str, npt.NDArray[np.float64]]
    ) -> Self:
        return cls(tensors)

    @classmethod
    def random(
        cls,
        latent_dim: int,
        freq_dim: int,
        hidden_size: int = DEFAULT_HIDDEN_SIZE,
        seed: int = 0,
        scale: float = 1.0,
        offset: float = -2.0,
    ) -> Self:
        """Seeded random decoder with float32-representable parameters.

        Weights are Gaussian with standard deviation ``scale / sqrt(fan_in)``;
        the output bias is centred on ``offset``.
        """
        rng = np.random.default_rng(seed)
        tensors = {}
        for name, shape in cls.tensor_shapes(latent_dim, freq_dim, hidden_size).items():
            if name == "out.bias":
                tensors[name] = offset + 0.5 * rng.normal(size=shape)
            elif name.startswith("gru.b_"):
                tensors[name] = 0.1 * rng.normal(size=shape)
            else:
                tensors[name] = rng.normal(0.0, scale / np.sqrt(shape[1]), size=shape)
        return cls({name: float32_exact(value) for name, value in tensors.items()})
