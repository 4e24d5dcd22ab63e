"""Checkpoint binary format: round trips and corruption handling."""

import numpy as np
import pytest

from conlab.checkpoint import (
    FORMAT_VERSION,
    MAGIC,
    load_checkpoint,
    save_checkpoint,
)
from conlab.errors import (
    BadMagicError,
    IoFailureError,
    ShapeMismatchError,
    UnsupportedVersionError,
)
from conlab.network import forward, init_network

SHAPES = [
    [3, 100, 100, 100, 100, 100, 1],   # reference damage setup
    [3, 80, 80, 80, 80, 80, 1],        # reference plasticity setup
    [5, 100, 100, 100, 100, 100, 1],   # 3D cohesive zone
    [5, 40, 40, 40, 1],                # benchmark shapes
    [5, 8, 8, 1],
    [5, 10, 10, 1],
]


def make_pair(shape, seed=0):
    return {
        "a": init_network(shape, "relu", seed=seed),
        "b": init_network(shape, "tanh", seed=seed + 1),
    }


class TestRoundTrip:
    @pytest.mark.parametrize("shape", SHAPES)
    def test_bitwise_forward_outputs(self, shape, tmp_path):
        nets = make_pair(shape)
        meta = {"family": "damage", "seed": 3}
        path = tmp_path / "pair.cpnn"
        save_checkpoint(nets, meta, path)
        ck = load_checkpoint(path)
        assert ck.meta == meta
        rng = np.random.default_rng(9)
        for name, net in nets.items():
            restored = ck.nets[name]
            for _ in range(100):
                x = rng.uniform(-1.0, 1.0, size=shape[0])
                assert np.array_equal(forward(net, x), forward(restored, x))

    def test_swish_metadata_preserved(self, tmp_path):
        net = init_network([3, 10, 1], "swish", seed=1, swish_r=300.0)
        path = tmp_path / "s.cpnn"
        save_checkpoint({"x": net}, {"family": "plasticity"}, path)
        restored = load_checkpoint(path).nets["x"]
        assert restored.hidden_activation == "swish"
        assert restored.swish_r == 300.0


class TestCorruption:
    def _valid_blob(self, tmp_path):
        path = tmp_path / "ok.cpnn"
        save_checkpoint(make_pair([3, 8, 1]), {"family": "damage"}, path)
        return path.read_bytes()

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.cpnn"
        path.write_bytes(b"NOPE" + self._valid_blob(tmp_path)[4:])
        with pytest.raises(BadMagicError):
            load_checkpoint(path)

    def test_unsupported_version(self, tmp_path):
        blob = bytearray(self._valid_blob(tmp_path))
        blob[4:8] = (FORMAT_VERSION + 1).to_bytes(4, "little")
        path = tmp_path / "v2.cpnn"
        path.write_bytes(bytes(blob))
        with pytest.raises(UnsupportedVersionError):
            load_checkpoint(path)

    @pytest.mark.parametrize("cut", [6, 30, -17, -1])
    def test_truncation_never_partial(self, tmp_path, cut):
        blob = self._valid_blob(tmp_path)
        path = tmp_path / "trunc.cpnn"
        path.write_bytes(blob[:cut])
        with pytest.raises((IoFailureError, ShapeMismatchError)):
            load_checkpoint(path)

    def test_trailing_garbage(self, tmp_path):
        path = tmp_path / "g.cpnn"
        path.write_bytes(self._valid_blob(tmp_path) + b"xx")
        with pytest.raises(ShapeMismatchError):
            load_checkpoint(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(IoFailureError):
            load_checkpoint(tmp_path / "nope.cpnn")

    def test_magic_constant(self):
        assert MAGIC == b"CPNN"
