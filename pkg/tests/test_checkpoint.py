import numpy as np
import pytest

from vransplit.errors import CheckpointFormatError, MissingCheckpoint
from vransplit.nn import checkpoint


def tensors():
    rng = np.random.default_rng(3)
    return {"a": rng.normal(size=(3, 4)), "b": np.arange(5.0), "scalar": np.array(2.5)}


def test_round_trip(tmp_path):
    p = tmp_path / "m.ckpt"
    checkpoint.save(p, tensors(), {"epoch": 7})
    back, meta = checkpoint.load(p)
    assert meta == {"epoch": 7}
    for k, v in tensors().items():
        np.testing.assert_array_equal(back[k], v)
        assert back[k].shape == v.shape


def test_bytes_are_deterministic():
    assert checkpoint.encode(tensors(), {"x": 1}) == checkpoint.encode(tensors(), {"x": 1})


def test_layout_prefix():
    blob = checkpoint.encode({"w": np.ones(2)})
    assert blob[:8] == b"VRANCKPT"
    assert int.from_bytes(blob[8:12], "little") == 1
    assert blob[-16:] == np.ones(2).astype("<f8").tobytes()


def test_digest_tracks_content():
    t = tensors()
    d = checkpoint.digest(t)
    t["b"][0] += 1e-12
    assert checkpoint.digest(t) != d


@pytest.mark.parametrize("blob", [b"", b"NOTACKPT" + bytes(8), checkpoint.encode({"w": np.ones(4)})[:-3],
                                  b"VRANCKPT" + (9).to_bytes(4, "little") + bytes(4)])
def test_corrupt(blob):
    with pytest.raises(CheckpointFormatError):
        checkpoint.decode(blob)


def test_missing(tmp_path):
    with pytest.raises(MissingCheckpoint):
        checkpoint.load(tmp_path / "nope.ckpt")
