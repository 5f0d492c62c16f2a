"""Dataset manifests, PGM/PPM decoding, resizing, under-sampling and folds."""

from __future__ import annotations

import csv
import enum
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Union

import numpy as np

from .errors import FormatError, InputError, ParseError


class ClassLabel(str, enum.Enum):
    COVID19 = "COVID-19"
    NORMAL = "Normal"
    PNEUMONIA_BACTERIAL = "PneumoniaBacterial"
    PNEUMONIA_VIRAL = "PneumoniaViral"
    PNEUMONIA = "Pneumonia"
    NON_COVID = "NonCOVID"

    def __str__(self):
        return self.value


SCHEME_CLASSES = {
    "four": (ClassLabel.COVID19, ClassLabel.NORMAL,
             ClassLabel.PNEUMONIA_BACTERIAL, ClassLabel.PNEUMONIA_VIRAL),
    "three": (ClassLabel.COVID19, ClassLabel.NORMAL, ClassLabel.PNEUMONIA),
    "two": (ClassLabel.COVID19, ClassLabel.NON_COVID),
}
SCHEME_BY_ARITY = {4: "four", 3: "three", 2: "two"}

_MERGES = {
    "four": {},
    "three": {ClassLabel.PNEUMONIA_BACTERIAL: ClassLabel.PNEUMONIA,
              ClassLabel.PNEUMONIA_VIRAL: ClassLabel.PNEUMONIA},
    "two": {label: ClassLabel.NON_COVID for label in ClassLabel if label is not ClassLabel.COVID19},
}


@dataclass(frozen=True)
class Record:
    path: str
    label: ClassLabel


@dataclass(frozen=True)
class DatasetManifest:
    records: tuple[Record, ...]

    def __post_init__(self):
        seen = set()
        for r in self.records:
            if r.path in seen:
                raise InputError(f"duplicate path {r.path!r} in manifest")
            seen.add(r.path)

    def __len__(self):
        return len(self.records)

    def counts(self) -> dict[ClassLabel, int]:
        c = Counter(r.label for r in self.records)
        return {label: c[label] for label in ClassLabel if c[label]}

    def by_class(self) -> dict[ClassLabel, list[Record]]:
        groups: dict[ClassLabel, list[Record]] = {}
        for label in ClassLabel:
            members = [r for r in self.records if r.label is label]
            if members:
                groups[label] = members
        return groups


def load_manifest(path) -> DatasetManifest:
    """Read a ``path,label`` CSV.  Relative image paths resolve against the
    manifest's own directory."""
    base = Path(path).parent
    records, seen = [], {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["path", "label"]:
            raise ParseError("manifest must start with header 'path,label'", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ParseError(f"expected 2 columns, got {len(row)}", lineno)
            raw_path, raw_label = row[0].strip(), row[1].strip()
            if not raw_path:
                raise ParseError("empty image path", lineno)
            try:
                label = ClassLabel(raw_label)
            except ValueError:
                raise ParseError(f"unknown label {raw_label!r}", lineno) from None
            full = raw_path if Path(raw_path).is_absolute() else str(base / raw_path)
            if full in seen:
                raise ParseError(f"duplicate path {raw_path!r} (first seen on line {seen[full]})",
                                 lineno)
            seen[full] = lineno
            records.append(Record(full, label))
    return DatasetManifest(tuple(records))


def write_manifest(manifest: DatasetManifest, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "label"])
        for r in manifest.records:
            w.writerow([r.path, r.label.value])


# ---------------------------------------------------------------------------
# images


def _read_header(data: bytes, count: int):
    """Parse ``count`` whitespace-separated header tokens after the magic."""
    tokens, pos = [], 2
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise FormatError("truncated header")
        tok = data[start:pos]
        if not tok.isdigit():
            raise FormatError(f"bad header token {tok!r}")
        tokens.append(int(tok))
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise FormatError("header must end with a single whitespace byte")
    return tokens, pos + 1


def decode_image(data: bytes) -> np.ndarray:
    """Decode binary PGM (P5) or PPM (P6) with maxval 255 into an H x W x 3
    float32 array in [0, 1].  Grayscale is replicated to three channels."""
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise FormatError(f"unsupported image magic {magic!r}")
    (width, height, maxval), offset = _read_header(data, 3)
    if maxval != 255:
        raise FormatError(f"only maxval 255 is supported, got {maxval}")
    channels = 1 if magic == b"P5" else 3
    need = width * height * channels
    payload = data[offset:offset + need]
    if len(payload) < need:
        raise FormatError(f"truncated pixel payload: {len(payload)} of {need} bytes")
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, channels)
    pixels = pixels.astype(np.float32) / np.float32(255)
    if channels == 1:
        pixels = np.repeat(pixels, 3, axis=2)
    return pixels


def encode_pgm(gray: np.ndarray) -> bytes:
    """8-bit P5 bytes for an H x W uint8 array."""
    gray = np.asarray(gray, dtype=np.uint8)
    h, w = gray.shape
    return f"P5\n{w} {h}\n255\n".encode() + gray.tobytes()


def resize_bilinear(pixels: np.ndarray, target_h: int, target_w: int) -> np.ndarray:
    """Bilinear resampling with half-pixel centres and edge clamping."""
    if target_h < 1 or target_w < 1:
        raise InputError(f"target size must be positive, got {target_h}x{target_w}")
    src = np.asarray(pixels)
    squeeze = src.ndim == 2
    if squeeze:
        src = src[:, :, None]
    h, w = src.shape[:2]
    if h < 1 or w < 1:
        raise InputError("cannot resize an empty image")

    def axis(n_out, n_in):
        pos = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
        pos = np.clip(pos, 0, n_in - 1)
        lo = np.floor(pos).astype(np.int64)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, pos - lo

    y0, y1, fy = axis(target_h, h)
    x0, x1, fx = axis(target_w, w)
    s = src.astype(np.float64)
    top = s[y0][:, x0] * (1 - fx)[None, :, None] + s[y0][:, x1] * fx[None, :, None]
    bot = s[y1][:, x0] * (1 - fx)[None, :, None] + s[y1][:, x1] * fx[None, :, None]
    out = top * (1 - fy)[:, None, None] + bot * fy[:, None, None]
    out = out.astype(src.dtype if np.issubdtype(src.dtype, np.floating) else np.float32)
    return out[:, :, 0] if squeeze else out


def load_images(manifest: DatasetManifest, size: int, classes) -> tuple[np.ndarray, np.ndarray]:
    """Decode and resize every record; labels become indices into ``classes``."""
    index = {label: i for i, label in enumerate(classes)}
    x = np.empty((len(manifest), size, size, 3), dtype=np.float32)
    y = np.empty(len(manifest), dtype=np.int64)
    for i, rec in enumerate(manifest.records):
        if rec.label not in index:
            raise InputError(f"label {rec.label.value!r} is not one of the model's classes")
        try:
            data = Path(rec.path).read_bytes()
        except OSError as exc:
            raise InputError(f"cannot read image {rec.path}: {exc.strerror}") from None
        try:
            img = decode_image(data)
        except FormatError as exc:
            raise FormatError(f"{rec.path}: {exc}") from None
        x[i] = resize_bilinear(img, size, size)
        y[i] = index[rec.label]
    return x, y


# ---------------------------------------------------------------------------
# manifest-level operations


def undersample(manifest: DatasetManifest,
                targets: Union[str, Mapping[ClassLabel, int]], seed: int) -> DatasetManifest:
    """Keep a seeded uniform subset of each class; ``"min"`` balances every
    class down to the smallest class count.  File order is preserved."""
    groups = manifest.by_class()
    if isinstance(targets, str):
        if targets != "min":
            raise InputError(f"unknown under-sampling mode {targets!r}")
        lowest = min((len(v) for v in groups.values()), default=0)
        targets = {label: lowest for label in groups}
    targets = {ClassLabel(k): int(v) for k, v in targets.items()}
    for label, want in targets.items():
        have = len(groups.get(label, []))
        if want < 0 or want > have:
            raise InputError(f"cannot keep {want} {label.value} records, only {have} available")
    rng = np.random.default_rng(seed)
    keep = set()
    for label, members in groups.items():
        want = targets.get(label, len(members))
        chosen = rng.choice(len(members), size=want, replace=False)
        keep.update(members[i].path for i in chosen)
    return DatasetManifest(tuple(r for r in manifest.records if r.path in keep))


def kfold_split(manifest: DatasetManifest, k: int = 4, seed: int = 0,
                strict: bool = True) -> list[DatasetManifest]:
    """Stratified k folds.

    Each class is shuffled with a seeded generator and dealt round-robin;
    the dealing position carries over from one class to the next so overall
    fold sizes also differ by at most one.  With ``strict`` every class must
    have at least ``k`` members so that it appears in every fold; otherwise
    only an empty fold is an error.
    """
    if k < 2:
        raise InputError("k must be at least 2")
    groups = manifest.by_class()
    if len(manifest) < k:
        raise InputError(f"{len(manifest)} records cannot fill {k} folds")
    for label, members in groups.items():
        if strict and len(members) < k:
            raise InputError(f"class {label.value} has {len(members)} records, fewer than k={k}")
    rng = np.random.default_rng(seed)
    folds: list[list[Record]] = [[] for _ in range(k)]
    pos = 0
    for members in groups.values():
        for i in rng.permutation(len(members)):
            folds[pos % k].append(members[i])
            pos += 1
    order = {r.path: i for i, r in enumerate(manifest.records)}
    return [DatasetManifest(tuple(sorted(f, key=lambda r: order[r.path]))) for f in folds]


def merge_labels(manifest: DatasetManifest, scheme: str) -> DatasetManifest:
    if scheme not in _MERGES:
        raise InputError(f"unknown class scheme {scheme!r}")
    m = _MERGES[scheme]
    return DatasetManifest(tuple(Record(r.path, m.get(r.label, r.label)) for r in manifest.records))


def concat(manifests) -> DatasetManifest:
    return DatasetManifest(tuple(r for m in manifests for r in m.records))
