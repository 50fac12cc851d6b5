import struct

import numpy as np
import pytest

from srzoo.encoder import (
    DefaultEncoder,
    EMBED_MAGIC,
    ImportedEmbeddings,
    cosine_similarity,
    export_embeddings,
    import_embeddings,
    unit,
)
from srzoo.errors import FormatError
from srzoo.pixels import PatchView


def patch_of(array, frame_index=0, row=0, col=0):
    arr = np.asarray(array, dtype=np.uint8)
    return PatchView(frame_index=frame_index, grid_row=row, grid_col=col,
                     size=arr.shape[0], pixels=arr)


def test_encode_deterministic_bitwise():
    gen = np.random.default_rng(0)
    enc = DefaultEncoder()
    p = patch_of(gen.integers(0, 256, (32, 32), dtype=np.uint8))
    a = enc.encode(p)
    b = enc.encode(patch_of(p.pixels.copy()))
    assert a.tobytes() == b.tobytes()


def test_encode_unit_norm_and_dimension():
    gen = np.random.default_rng(1)
    enc = DefaultEncoder()
    for _ in range(10):
        p = patch_of(gen.integers(0, 256, (16, 16), dtype=np.uint8))
        e = enc.encode(p)
        assert e.shape == (enc.dimension,)
        assert abs(np.linalg.norm(e) - 1.0) < 1e-6
        assert np.all(np.isfinite(e))


def test_constant_extremes_distinguishable():
    enc = DefaultEncoder()
    black = enc.encode(patch_of(np.zeros((16, 16))))
    white = enc.encode(patch_of(np.full((16, 16), 255)))
    assert cosine_similarity(black, white) < 0.9


def test_tiny_perturbation_keeps_high_similarity():
    gen = np.random.default_rng(2)
    enc = DefaultEncoder()
    base = gen.integers(1, 255, (32, 32), dtype=np.uint8)
    wobble = np.clip(base.astype(int) + gen.choice([-1, 1], size=base.shape), 0, 255)
    sim = cosine_similarity(
        enc.encode(patch_of(base)), enc.encode(patch_of(wobble.astype(np.uint8)))
    )
    assert sim > 0.99


def test_small_patch_rejected():
    enc = DefaultEncoder()
    with pytest.raises(ValueError):
        enc.encode(patch_of(np.zeros((7, 7))))


def test_builtin_similarities_non_negative():
    gen = np.random.default_rng(3)
    enc = DefaultEncoder()
    embs = [
        enc.encode(patch_of(gen.integers(0, 256, (16, 16), dtype=np.uint8)))
        for _ in range(8)
    ]
    for a in embs:
        assert np.all(a >= 0.0)
        for b in embs:
            assert 0.0 <= cosine_similarity(a, b) <= 1.0


def test_cosine_self_orthogonal_and_sixty_degrees():
    e0 = np.zeros(4)
    e0[0] = 1.0
    e1 = np.zeros(4)
    e1[1] = 1.0
    assert cosine_similarity(e0, e0) == 1.0
    assert cosine_similarity(e0, e1) == 0.0
    at60 = np.array([0.5, np.sqrt(3.0) / 2.0, 0.0, 0.0])
    assert abs(cosine_similarity(e0, at60) - 0.5) < 1e-9


def test_cosine_symmetry_and_bounds_random():
    gen = np.random.default_rng(4)
    for _ in range(50):
        a = unit(gen.normal(size=12))
        b = unit(gen.normal(size=12))
        assert cosine_similarity(a, b) == cosine_similarity(b, a)
        assert -1.0 <= cosine_similarity(a, b) <= 1.0


def test_cosine_dimension_mismatch():
    with pytest.raises(ValueError):
        cosine_similarity(np.ones(3), np.ones(4))


def test_zero_vector_guard_maps_to_first_basis():
    e = unit(np.zeros(5))
    assert e[0] == 1.0 and np.all(e[1:] == 0.0)


def test_embedding_file_round_trip(tmp_path):
    gen = np.random.default_rng(5)
    table = {
        (0, 0, 0): unit(gen.normal(size=512)),
        (3, 1, 2): unit(gen.normal(size=512)),
    }
    path = tmp_path / "emb.bin"
    export_embeddings(table, 512, path)
    loaded, dim = import_embeddings(path)
    assert dim == 512 and len(loaded) == 2
    for key in table:
        assert abs(np.linalg.norm(loaded[key]) - 1.0) < 1e-6
        assert cosine_similarity(loaded[key], unit(table[key])) > 1.0 - 1e-6


def test_import_renormalizes_scaled_vectors(tmp_path):
    vec = np.zeros(4, dtype=np.float64)
    vec[2] = 2.0  # norm 2, must come back with norm 1
    payload = EMBED_MAGIC + struct.pack("<IQ", 4, 1)
    payload += struct.pack("<IHH", 0, 0, 0) + vec.astype("<f4").tobytes()
    path = tmp_path / "scaled.bin"
    path.write_bytes(payload)
    loaded, _ = import_embeddings(path)
    assert abs(np.linalg.norm(loaded[(0, 0, 0)]) - 1.0) < 1e-9


def test_import_rejects_non_finite(tmp_path):
    vec = np.array([np.nan, 0, 0, 0], dtype="<f4")
    payload = EMBED_MAGIC + struct.pack("<IQ", 4, 1)
    payload += struct.pack("<IHH", 0, 0, 0) + vec.tobytes()
    path = tmp_path / "nan.bin"
    path.write_bytes(payload)
    with pytest.raises(FormatError, match="non-finite"):
        import_embeddings(path)


def test_import_rejects_count_mismatch(tmp_path):
    payload = EMBED_MAGIC + struct.pack("<IQ", 4, 2)
    payload += struct.pack("<IHH", 0, 0, 0) + np.ones(4, dtype="<f4").tobytes()
    path = tmp_path / "short.bin"
    path.write_bytes(payload)
    with pytest.raises(FormatError, match="count"):
        import_embeddings(path)


def test_import_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOTMAGIC" + bytes(12))
    with pytest.raises(FormatError, match="magic"):
        import_embeddings(path)


def test_imported_encoder_lookup():
    vec = unit(np.arange(1.0, 89.0))
    enc = ImportedEmbeddings({(2, 0, 1): vec}, dimension=88)
    p = patch_of(np.zeros((8, 8)), frame_index=2, row=0, col=1)
    assert np.array_equal(enc.encode(p), vec)
    with pytest.raises(KeyError, match="no imported embedding"):
        enc.encode(patch_of(np.zeros((8, 8)), frame_index=9))
