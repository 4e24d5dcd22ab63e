"""Versioned binary checkpoints for trained network pairs.

Layout (all integers little-endian unsigned 32-bit, floats little-endian
IEEE-754 doubles):

    bytes 0..3   magic  b"CPNN"
    u32          format version (currently 1)
    u32 + bytes  UTF-8 JSON metadata blob (family tag, material
                 parameters, seed, training-config echo, free-form notes)
    u32          number of networks
    per network:
        u32 + bytes  output-variable name (UTF-8)
        u32 + bytes  hidden activation name (UTF-8)
        f64          swish sharpness (unused unless activation is swish)
        u32          number of layer sizes
        u32[]        layer sizes
        per layer:   f64[rows*cols] weight matrix, row-major,
                     then f64[rows] bias vector

Weights are stored exactly (64-bit), so a loaded network reproduces
bit-identical forward outputs.  Loading validates magic, version and
every declared shape before building anything; a truncated or
inconsistent file never yields a partial network.
"""

import json
import struct
from dataclasses import dataclass
from typing import Dict

import numpy as np

from .errors import (
    BadMagicError,
    IoFailureError,
    ShapeMismatchError,
    UnsupportedVersionError,
)
from .network import Network

__all__ = ["MAGIC", "FORMAT_VERSION", "Checkpoint", "save_checkpoint", "load_checkpoint"]

MAGIC = b"CPNN"
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    """Metadata plus the named networks restored from a file."""

    meta: dict
    nets: Dict[str, Network]

    @property
    def net_pair(self):
        return tuple(self.nets.values())


def save_checkpoint(nets, meta, path):
    """Write named networks and metadata to ``path``.

    ``nets`` maps output-variable names to networks (insertion order is
    preserved in the file).
    """
    chunks = [MAGIC, struct.pack("<I", FORMAT_VERSION)]
    meta_blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    chunks.append(struct.pack("<I", len(meta_blob)))
    chunks.append(meta_blob)
    chunks.append(struct.pack("<I", len(nets)))
    for name, net in nets.items():
        for text in (name, net.hidden_activation):
            blob = text.encode("utf-8")
            chunks.append(struct.pack("<I", len(blob)))
            chunks.append(blob)
        chunks.append(struct.pack("<d", float(net.swish_r)))
        chunks.append(struct.pack("<I", len(net.layer_sizes)))
        chunks.append(struct.pack(f"<{len(net.layer_sizes)}I", *net.layer_sizes))
        for w, b in zip(net.weights, net.biases):
            chunks.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
            chunks.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    try:
        with open(path, "wb") as fh:
            fh.write(b"".join(chunks))
    except OSError as exc:
        raise IoFailureError(f"cannot write checkpoint {path}: {exc}") from exc


class _Reader:
    def __init__(self, blob):
        self.blob = blob
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.blob):
            raise IoFailureError("checkpoint file is truncated")
        out = self.blob[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self):
        return struct.unpack("<I", self.take(4))[0]

    def f64(self):
        return struct.unpack("<d", self.take(8))[0]

    def text(self):
        return self.take(self.u32()).decode("utf-8")

    def doubles(self, count):
        return np.frombuffer(self.take(8 * count), dtype="<f8").astype(float)


def load_checkpoint(path):
    """Read a checkpoint; returns a :class:`Checkpoint`.

    Raises BadMagicError / UnsupportedVersionError / ShapeMismatchError /
    IoFailureError; never returns a partially restored network.
    """
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoFailureError(f"cannot read checkpoint {path}: {exc}") from exc
    rd = _Reader(blob)
    if rd.take(4) != MAGIC:
        raise BadMagicError(f"{path} is not a network checkpoint (bad magic)")
    version = rd.u32()
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"{path} has format version {version}, this build reads {FORMAT_VERSION}")
    try:
        meta = json.loads(rd.text())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ShapeMismatchError(f"corrupt metadata block in {path}: {exc}") from exc

    n_nets = rd.u32()
    if n_nets > 64:
        raise ShapeMismatchError(f"implausible network count {n_nets} in {path}")
    nets = {}
    for _ in range(n_nets):
        name = rd.text()
        act = rd.text()
        swish_r = rd.f64()
        n_sizes = rd.u32()
        if n_sizes < 2 or n_sizes > 256:
            raise ShapeMismatchError(f"bad layer count {n_sizes} in {path}")
        sizes = list(struct.unpack(f"<{n_sizes}I", rd.take(4 * n_sizes)))
        if any(s < 1 for s in sizes):
            raise ShapeMismatchError(f"zero-width layer in {path}")
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            weights.append(rd.doubles(fan_out * fan_in).reshape(fan_out, fan_in))
            biases.append(rd.doubles(fan_out))
        if not all(np.all(np.isfinite(w)) for w in weights):
            raise ShapeMismatchError(f"non-finite weights in {path}")
        nets[name] = Network(layer_sizes=sizes, weights=weights, biases=biases,
                             hidden_activation=act, swish_r=swish_r)
    if rd.pos != len(blob):
        raise ShapeMismatchError(
            f"{len(blob) - rd.pos} unexpected trailing bytes in {path}")
    return Checkpoint(meta=meta, nets=nets)
