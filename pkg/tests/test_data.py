import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coronet.data import (ClassLabel, DatasetManifest, Record, decode_image, encode_pgm,
                          kfold_split, load_images, load_manifest, merge_labels, resize_bilinear,
                          undersample, write_manifest)
from coronet.errors import FormatError, InputError, ParseError

C, N, B, V = (ClassLabel.COVID19, ClassLabel.NORMAL, ClassLabel.PNEUMONIA_BACTERIAL,
              ClassLabel.PNEUMONIA_VIRAL)
TABLE_I = {N: 310, B: 330, V: 327, C: 284}
KAGGLE_SOURCE = {N: 1203, B: 660, V: 931, C: 284}


def synthetic(counts):
    return DatasetManifest(tuple(
        Record(f"{label.value}/{i:04d}.pgm", label)
        for label, n in counts.items() for i in range(n)))


def write_csv(tmp_path, text, name="m.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_manifest_one_per_class(tmp_path):
    p = write_csv(tmp_path, "path,label\na.pgm,COVID-19\nb.pgm,Normal\n"
                            "c.pgm,PneumoniaBacterial\nd.pgm,PneumoniaViral\n")
    m = load_manifest(p)
    assert list(m.counts().values()) == [1, 1, 1, 1]
    assert [r.path for r in m.records] == [str(tmp_path / x) for x in ("a.pgm", "b.pgm", "c.pgm", "d.pgm")]


@pytest.mark.parametrize("body,line", [
    ("a.pgm,COVID-19\nb.pgm,covid19\n", 3),
    ("a.pgm,Normal\na.pgm,Normal\n", 3),
    ("a.pgm,Normal,extra\n", 2),
])
def test_manifest_errors_carry_line(tmp_path, body, line):
    p = write_csv(tmp_path, "path,label\n" + body)
    with pytest.raises(ParseError) as exc:
        load_manifest(p)
    assert exc.value.line == line


def test_manifest_header_required(tmp_path):
    with pytest.raises(ParseError):
        load_manifest(write_csv(tmp_path, "file,class\na,Normal\n"))


def test_manifest_table_i_counts(tmp_path):
    m = synthetic(TABLE_I)
    path = tmp_path / "t.csv"
    write_manifest(m, path)
    counts = load_manifest(path).counts()
    assert counts == {C: 284, N: 310, B: 330, V: 327}
    assert sum(counts.values()) == 1251


# -- images ------------------------------------------------------------------

def test_decode_pgm_by_hand():
    px = decode_image(b"P5\n2 2\n255\n" + bytes([0, 255, 128, 64]))
    assert px.shape == (2, 2, 3)
    expected = np.array([[0, 1.0], [128 / 255, 64 / 255]], dtype=np.float32)
    for ch in range(3):
        np.testing.assert_allclose(px[:, :, ch], expected, rtol=1e-7)


def test_decode_header_comments_and_ppm():
    px = decode_image(b"P5 # comment\n# another\n1 1 255\n" + bytes([51]))
    assert px[0, 0].tolist() == pytest.approx([0.2] * 3)
    rgb = decode_image(b"P6\n1 1\n255\n" + bytes([255, 0, 51]))
    assert rgb[0, 0].tolist() == pytest.approx([1.0, 0.0, 0.2])


@pytest.mark.parametrize("blob", [
    b"P4\n2 2\n255\n" + bytes(4),
    b"P5\n2 2\n255\n" + bytes(3),
    b"P5\n2 2\n65535\n" + bytes(8),
    b"P5\n2\n",
])
def test_decode_errors(blob):
    with pytest.raises(FormatError):
        decode_image(blob)


@settings(max_examples=30)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_decode_range(h, w, seed):
    gray = np.random.default_rng(seed).integers(0, 256, (h, w), dtype=np.uint8)
    px = decode_image(encode_pgm(gray))
    assert px.min() >= 0 and px.max() <= 1
    np.testing.assert_array_equal(np.round(px[:, :, 0] * 255).astype(np.uint8), gray)


def test_resize_examples():
    img = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert resize_bilinear(img, 1, 1).item() == pytest.approx(0.5)
    x = np.random.default_rng(0).random((5, 7, 3)).astype(np.float32)
    np.testing.assert_allclose(resize_bilinear(x, 5, 7), x, atol=1e-6)
    with pytest.raises(InputError):
        resize_bilinear(x, 0, 3)


def test_resize_upsample_half_pixel():
    # 1x2 -> 1x4: sample centres at -0.25, 0.25, 0.75, 1.25 (clamped)
    out = resize_bilinear(np.array([[0.0, 1.0]]), 1, 4)
    np.testing.assert_allclose(out[0], [0.0, 0.25, 0.75, 1.0])


@settings(max_examples=30)
@given(st.integers(1, 9), st.integers(1, 9), st.integers(1, 12), st.integers(1, 12), st.floats(0, 1))
def test_resize_constant(h, w, th, tw, value):
    out = resize_bilinear(np.full((h, w, 3), value), th, tw)
    assert out.shape == (th, tw, 3)
    np.testing.assert_allclose(out, value, atol=1e-12)


def test_load_images(tmp_path):
    for i, v in enumerate((0, 255)):
        (tmp_path / f"{i}.pgm").write_bytes(encode_pgm(np.full((4, 6), v, np.uint8)))
    m = DatasetManifest((Record(str(tmp_path / "0.pgm"), N), Record(str(tmp_path / "1.pgm"), C)))
    x, y = load_images(m, 3, (C, N))
    assert x.shape == (2, 3, 3, 3) and y.tolist() == [1, 0]
    assert x[0].max() == 0 and x[1].min() == 1


# -- manifest operations -----------------------------------------------------

def test_undersample_to_table_i():
    src = synthetic(KAGGLE_SOURCE)
    out = undersample(src, TABLE_I, seed=1)
    assert out.counts() == {C: 284, N: 310, B: 330, V: 327}
    order = {r.path: i for i, r in enumerate(src.records)}
    idx = [order[r.path] for r in out.records]
    assert idx == sorted(idx)


def test_undersample_min_and_determinism():
    src = synthetic(KAGGLE_SOURCE)
    assert set(undersample(src, "min", 0).counts().values()) == {284}
    a = {r.path for r in undersample(src, TABLE_I, 7).records}
    b = {r.path for r in undersample(src, TABLE_I, 7).records}
    c = {r.path for r in undersample(src, TABLE_I, 8).records}
    assert a == b and a != c


def test_undersample_too_many():
    with pytest.raises(InputError):
        undersample(synthetic({C: 3}), {C: 4}, 0)


def test_kfold_small():
    m = synthetic({C: 2, N: 2, B: 2, V: 2})
    with pytest.raises(InputError):
        kfold_split(m, 4, seed=0)
    folds = kfold_split(m, 4, seed=0, strict=False)
    assert [len(f) for f in folds] == [2, 2, 2, 2]
    for label in (C, N, B, V):
        assert sum(label in f.counts() for f in folds) == 2


def test_kfold_table_i_sizes():
    total = sum(TABLE_I.values())
    q, r = divmod(total, 4)
    expected = sorted([q + 1] * r + [q] * (4 - r), reverse=True)
    assert expected == [313, 313, 313, 312]
    folds = kfold_split(synthetic(TABLE_I), 4, seed=3)
    assert sorted((len(f) for f in folds), reverse=True) == expected


def test_kfold_errors():
    with pytest.raises(InputError):
        kfold_split(synthetic({C: 3, N: 8}), 4, 0)
    with pytest.raises(InputError):
        kfold_split(synthetic({C: 3}), 1, 0)
    with pytest.raises(InputError):
        kfold_split(synthetic({C: 3}), 4, 0, strict=False)


@settings(max_examples=40, deadline=None)
@given(st.dictionaries(st.sampled_from([C, N, B, V]), st.integers(4, 40), min_size=1),
       st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_kfold_partition_properties(counts, k, seed):
    m = synthetic(counts)
    folds = kfold_split(m, k, seed)
    paths = [r.path for f in folds for r in f.records]
    assert sorted(paths) == sorted(r.path for r in m.records)
    assert len(paths) == len(set(paths))
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 1
    for label in counts:
        per = [f.counts().get(label, 0) for f in folds]
        assert max(per) - min(per) <= 1
    again = kfold_split(m, k, seed)
    assert [f.records for f in folds] == [f.records for f in again]


def test_merge_labels():
    m = synthetic(TABLE_I)
    three = merge_labels(m, "three").counts()
    assert three == {C: 284, N: 310, ClassLabel.PNEUMONIA: 657}
    two = merge_labels(m, "two").counts()
    assert two == {C: 284, ClassLabel.NON_COVID: 967}
    assert merge_labels(m, "four") == m
    for scheme in ("four", "three", "two"):
        merged = merge_labels(m, scheme)
        assert [r.path for r in merged.records if r.label is C] == \
               [r.path for r in m.records if r.label is C]
