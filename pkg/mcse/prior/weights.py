"""
Decoder weight files.

Layout, all integers unsigned 32-bit little-endian::

    b"MCEMDEC1"                      magic and format version
    tag length, tag bytes (UTF-8)    architecture tag
    L, F, H                          latent, frequency and hidden sizes
    then, until end of file, one record per tensor:
        name length, name bytes (UTF-8)
        rank, rank × dimension
        float32 little-endian payload, row-major

The architecture tag selects the decoder class. ``"blstm"`` is reserved for
weights ported from bidirectional LSTM decoders and is not loadable yet.
"""

import logging
import os
import struct
import typing as tp

import numpy as np
import numpy.typing as npt

from ..errors import FormatError, InvalidInputError
from .decoder import AffineExpDecoder, DecoderModel
from .gru import DEFAULT_HIDDEN_SIZE, GruDecoder

logger = logging.getLogger("Mcse")

MAGIC = b"MCEMDEC1"

ARCHITECTURES: dict[str, type[AffineExpDecoder] | type[GruDecoder]] = {
    AffineExpDecoder.arch: AffineExpDecoder,
    GruDecoder.arch: GruDecoder,
}
RESERVED_ARCHITECTURES = ("blstm",)

_U32 = struct.Struct("<I")


class _Reader(object):
    def __init__(self, payload: bytes):
        self._payload = payload
        self._offset = 0

    def at_end(self) -> bool:
        return self._offset >= len(self._payload)

    def take(self, count: int, what: str) -> bytes:
        if self._offset + count > len(self._payload):
            raise FormatError(
                f"Truncated decoder file: needed {count} bytes at offset {self._offset}, "
                f"{len(self._payload) - self._offset} left",
                tensor_name=what,
            )
        chunk = self._payload[self._offset : self._offset + count]
        self._offset += count
        return chunk

    def u32(self, what: str) -> int:
        return _U32.unpack(self.take(4, what))[0]

    def text(self, what: str) -> str:
        length = self.u32(what)
        try:
            return self.take(length, what).decode("utf-8")
        except UnicodeDecodeError as e:
            raise FormatError("Name is not valid UTF-8", tensor_name=what) from e


def _write_text(out: list[bytes], text: str) -> None:
    encoded = text.encode("utf-8")
    out.append(_U32.pack(len(encoded)))
    out.append(encoded)


def dump_decoder(m: DecoderModel) -> bytes:
    """Serialize a decoder to the weight file layout."""
    out = [MAGIC]
    _write_text(out, m.arch)
    out.extend(_U32.pack(n) for n in (m.latent_dim, m.freq_dim, m.hidden_size))
    for name, tensor in m.tensors().items():
        _write_text(out, name)
        out.append(_U32.pack(tensor.ndim))
        out.extend(_U32.pack(n) for n in tensor.shape)
        out.append(np.ascontiguousarray(tensor, dtype="<f4").tobytes())
    return b"".join(out)


def parse_decoder(payload: bytes) -> DecoderModel:
    """Deserialize a decoder from the weight file layout.

    Raises:
        FormatError: bad magic, unknown architecture, truncated data,
            missing, unexpected or misshapen tensors.
    """
    reader = _Reader(payload)
    magic = reader.take(len(MAGIC), "header")
    if magic != MAGIC:
        raise FormatError(f"Bad magic {magic!r}, expected {MAGIC!r}", tensor_name="header")
    arch = reader.text("architecture")
    if arch in RESERVED_ARCHITECTURES:
        raise FormatError(f"Architecture {arch!r} is reserved but not supported", tensor_name="architecture")
    if arch not in ARCHITECTURES:
        raise FormatError(f"Unknown architecture {arch!r}", tensor_name="architecture")
    latent_dim, freq_dim, hidden_size = (reader.u32(field) for field in ("latent_dim", "freq_dim", "hidden_size"))
    if latent_dim == 0 or freq_dim == 0:
        raise FormatError("latent_dim and freq_dim must be positive", tensor_name="header")

    cls = ARCHITECTURES[arch]
    expected = cls.tensor_shapes(latent_dim, freq_dim, hidden_size)
    tensors: dict[str, npt.NDArray[np.float64]] = {}
    while not reader.at_end():
        name = reader.text("tensor name")
        if name not in expected:
            raise FormatError(f"Unexpected tensor for architecture {arch!r}", tensor_name=name)
        if name in tensors:
            raise FormatError("Duplicate tensor", tensor_name=name)
        rank = reader.u32(name)
        shape = tuple(reader.u32(name) for _ in range(rank))
        if shape != expected[name]:
            raise FormatError(f"Shape {shape} does not match expected {expected[name]}", tensor_name=name)
        count = int(np.prod(shape, dtype=np.int64))
        data = np.frombuffer(reader.take(4 * count, name), dtype="<f4")
        tensors[name] = data.reshape(shape).astype(np.float64)

    missing = [name for name in expected if name not in tensors]
    if missing:
        raise FormatError("Missing tensor", tensor_name=missing[0])
    try:
        return cls.from_tensors(latent_dim, freq_dim, hidden_size, tensors)
    except InvalidInputError as e:
        raise FormatError(str(e)) from e


def load_decoder(path: str | os.PathLike) -> DecoderModel:
    """Load a decoder weight file.

    Raises:
        InvalidInputError: the file cannot be read.
        FormatError: the file content is malformed.
    """
    try:
        with open(path, "rb") as f:
            payload = f.read()
    except OSError as e:
        raise InvalidInputError(f"Cannot read decoder file {path}: {e}") from e
    model = parse_decoder(payload)
    logger.info("Loaded %r from %s", model, path)
    return model


def save_decoder(m: DecoderModel, path: str | os.PathLike) -> None:
    """Write a decoder weight file. Parameters are stored as float32."""
    with open(path, "wb") as f:
        f.write(dump_decoder(m))


def random_decoder(
    arch: str,
    latent_dim: int,
    freq_dim: int,
    hidden_size: int = DEFAULT_HIDDEN_SIZE,
    seed: int = 0,
    **kwargs: tp.Any,
) -> DecoderModel:
    """Seeded random decoder of the given architecture."""
    if arch not in ARCHITECTURES:
        raise InvalidInputError(f"Unknown architecture {arch!r}, expected one of {sorted(ARCHITECTURES)}")
    if arch == AffineExpDecoder.arch:
        hidden_size = 0
    return ARCHITECTURES[arch].random(latent_dim, freq_dim, hidden_size, seed=seed, **kwargs)


def generate_decoder_file(
    path: str | os.PathLike,
    arch: str = GruDecoder.arch,
    latent_dim: int = 16,
    freq_dim: int = 513,
    hidden_size: int = DEFAULT_HIDDEN_SIZE,
    seed: int = 0,
) -> DecoderModel:
    """Write a seeded random decoder to ``path`` and return it."""
    model = random_decoder(arch, latent_dim, freq_dim, hidden_size, seed=seed)
    save_decoder(model, path)
    logger.info("Wrote random %r to %s", model, path)
    return model
