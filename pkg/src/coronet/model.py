"""CoroNet: an Xception backbone with a dropout + dense(256) + dense(n) head.

The backbone follows the reference Xception block grammar:

* entry flow: two 3x3 stem convolutions (the first strided), then three
  downsampling blocks of two separable convolutions + strided max pooling,
  each with a strided 1x1 projection on the skip path;
* middle flow: residual blocks of three 728-channel separable convolutions;
* exit flow: one more downsampling block (728 -> 1024) followed by
  separable convolutions to 1536 and 2048 channels.

Every convolution is bias-free and followed by batch normalization.  The
``mini`` variant keeps the grammar but divides channel widths by 8 and uses
two middle blocks.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import layers as L
from .errors import ConfigError, FormatError, InputError, ShapeError
from .graph import BACKBONE, ComputeGraph, ParameterStore
from .train import predict_proba

FULL_WIDTHS = {"stem1": 32, "stem2": 64, "entry": (128, 256, 728), "middle": 728,
               "exit": (728, 1024), "tail": (1536, 2048)}
FULL_MIDDLE_BLOCKS = 8
MINI_DIVISOR = 8
MINI_MIDDLE_BLOCKS = 2


@dataclass(frozen=True)
class ArchitectureConfig:
    variant: str = "full"
    input_height: int = 224
    input_width: int = 224
    input_channels: int = 3
    num_classes: int = 4
    head_dropout_rate: float = 0.5
    head_dense_width: int = 256

    def __post_init__(self):
        if self.variant not in ("full", "mini"):
            raise ConfigError(f"variant must be 'full' or 'mini', got {self.variant!r}")
        if self.num_classes < 2:
            raise ConfigError("num_classes must be at least 2")
        if min(self.input_height, self.input_width, self.input_channels, self.head_dense_width) < 1:
            raise ConfigError("input extents and head width must be positive")


@dataclass(frozen=True)
class ParameterCount:
    total: int
    trainable: int
    non_trainable: int


@dataclass(frozen=True)
class LayerCount:
    name: str
    kind: str
    output_shape: tuple
    total: int
    trainable: int


@dataclass(frozen=True)
class CountReport:
    totals: ParameterCount
    layers: list[LayerCount] = field(default_factory=list)

    def summary_rows(self) -> list[LayerCount]:
        """Backbone layers folded into one row, head layers listed one by one."""
        rows, backbone = [], None
        for row in self.layers:
            if row.kind.startswith(BACKBONE + "/"):
                if backbone is None:
                    backbone = [0, 0, row.output_shape]
                    rows.append(None)
                backbone[0] += row.total
                backbone[1] += row.trainable
                backbone[2] = row.output_shape
            elif row.kind not in ("ReLU", "Softmax"):
                rows.append(row)
        if backbone is not None:
            i = rows.index(None)
            rows[i] = LayerCount(BACKBONE, "Model", backbone[2], backbone[0], backbone[1])
        return rows


def _widths(variant):
    if variant == "full":
        return FULL_WIDTHS, FULL_MIDDLE_BLOCKS

    def div(w):
        return tuple(math.ceil(v / MINI_DIVISOR) for v in w) if isinstance(w, tuple) \
            else math.ceil(w / MINI_DIVISOR)

    return {k: div(v) for k, v in FULL_WIDTHS.items()}, MINI_MIDDLE_BLOCKS


def _conv_bn(g, name, cin, cout, k, stride, padding, src=None):
    g.add(name, L.Conv2D(cin, cout, k, k, stride, padding, use_bias=False), src, BACKBONE)
    return g.add(name + "_bn", L.BatchNorm(cout), None, BACKBONE)


def _sep_bn(g, name, cin, cout, src=None):
    g.add(name, L.SeparableConv2D(cin, cout, 3, 3, 1, "same", use_bias=False), src, BACKBONE)
    return g.add(name + "_bn", L.BatchNorm(cout), None, BACKBONE)


def _relu(g, name, src=None):
    return g.add(name, L.ReLU(), src, BACKBONE)


def _down_block(g, block, src, cin, widths, relu_first):
    """Two separable convs + strided pool, plus a strided 1x1 projection skip."""
    skip = _conv_bn(g, f"block{block}_residual", cin, widths[-1], 1, 2, "same", src)
    x = src
    if relu_first:
        x = _relu(g, f"block{block}_sepconv1_act", src)
    x = _sep_bn(g, f"block{block}_sepconv1", cin, widths[0], x)
    _relu(g, f"block{block}_sepconv2_act")
    _sep_bn(g, f"block{block}_sepconv2", widths[0], widths[1])
    g.add(f"block{block}_pool", L.MaxPool2D(3, 3, 2, "same"), None, BACKBONE)
    return g.add(f"block{block}_add", L.ResidualAdd(), (f"block{block}_pool", skip), BACKBONE)


def build_backbone(g: ComputeGraph, variant: str) -> str:
    w, n_middle = _widths(variant)
    cin = g.input_shape[2]
    _conv_bn(g, "block1_conv1", cin, w["stem1"], 3, 2, "valid", "input")
    _relu(g, "block1_conv1_act")
    _conv_bn(g, "block1_conv2", w["stem1"], w["stem2"], 3, 1, "valid")
    x = _relu(g, "block1_conv2_act")
    ch = w["stem2"]
    for i, width in enumerate(w["entry"]):
        x = _down_block(g, 2 + i, x, ch, (width, width), relu_first=i > 0)
        ch = width
    for b in range(5, 5 + n_middle):
        y = x
        for j in range(1, 4):
            _relu(g, f"block{b}_sepconv{j}_act", y)
            y = _sep_bn(g, f"block{b}_sepconv{j}", ch, w["middle"])
            ch = w["middle"]
        x = g.add(f"block{b}_add", L.ResidualAdd(), (y, x), BACKBONE)
    exit_block = 5 + n_middle
    x = _down_block(g, exit_block, x, ch, w["exit"], relu_first=True)
    ch = w["exit"][1]
    last = exit_block + 1
    _sep_bn(g, f"block{last}_sepconv1", ch, w["tail"][0], x)
    _relu(g, f"block{last}_sepconv1_act")
    _sep_bn(g, f"block{last}_sepconv2", w["tail"][0], w["tail"][1])
    return _relu(g, f"block{last}_sepconv2_act")


def build_coronet(config: ArchitectureConfig, seed: int | None = 0, dtype=np.float32):
    """Return ``(graph, params)``; ``params`` is None when ``seed`` is None."""
    g = ComputeGraph((config.input_height, config.input_width, config.input_channels))
    try:
        build_backbone(g, config.variant)
    except ShapeError as exc:
        raise ConfigError(
            f"input {config.input_height}x{config.input_width} too small for the "
            f"backbone stride chain: {exc}") from None
    g.add("flatten", L.Flatten())
    width = g.shape_of("flatten")[0]
    g.add("dropout", L.Dropout(config.head_dropout_rate))
    g.add("dense", L.Dense(width, config.head_dense_width))
    g.add("dense_act", L.ReLU())
    g.add("dense_1", L.Dense(config.head_dense_width, config.num_classes))
    g.add("softmax", L.Softmax())
    params = None if seed is None else g.init_params(seed, dtype)
    return g, params


def count_parameters(graph: ComputeGraph, params: ParameterStore | None = None) -> CountReport:
    """Exact integer counts from tensor shapes and trainable flags.

    Without ``params`` the shapes and default flags implied by each layer
    spec are used, so nothing is allocated.
    """
    rows = []
    total = trainable = 0
    for node in graph.nodes:
        if params is not None:
            items = [(p.value.shape, p.trainable) for p in params.layer(node.name).values()]
        else:
            items = list(L.param_shapes(node.spec).values())
        n = sum(math.prod(s) for s, _ in items)
        t = sum(math.prod(s) for s, tr in items if tr)
        kind = type(node.spec).__name__
        if node.group:
            kind = f"{node.group}/{kind}"
        rows.append(LayerCount(node.name, kind, graph.shape_of(node.name), n, t))
        total += n
        trainable += t
    return CountReport(ParameterCount(total, trainable, total - trainable), rows)


def render_count_table(report: CountReport) -> str:
    lines = [f"{'Layer (type)':<28}{'Output Shape':<20}{'Param #':>12}", "=" * 60]
    for row in report.summary_rows():
        shape = " x ".join(str(d) for d in row.output_shape)
        kind = row.kind.split("/")[-1]
        lines.append(f"{row.name + ' (' + kind + ')':<28}{shape:<20}{row.total:>12}")
    t = report.totals
    lines += ["=" * 60,
              f"Total Parameters: {t.total:,}",
              f"Trainable Parameters: {t.trainable:,}",
              f"Non-trainable Parameters: {t.non_trainable:,}"]
    return "\n".join(lines)


def predict(graph: ComputeGraph, params: ParameterStore, images, batch_size=10):
    """Class probabilities (inference mode) and their argmax labels."""
    images = np.asarray(images)
    if images.ndim != 4 or tuple(images.shape[1:]) != graph.input_shape:
        raise InputError(f"images must have shape N x {graph.input_shape}, got {images.shape}")
    probs = predict_proba(graph, params, images, batch_size)
    return probs, probs.argmax(axis=1)


# ---------------------------------------------------------------------------
# weights file: b"CORONET1", u32 LE manifest length, JSON manifest, then
# little-endian float32 payloads in manifest order

MAGIC = b"CORONET1"


def save_weights(graph: ComputeGraph, params: ParameterStore, path, group=None):
    """Write every tensor (or only those of nodes in ``group``) to ``path``."""
    manifest, blobs = [], []
    for node in graph.nodes:
        if group is not None and node.group != group:
            continue
        for name, p in params.layer(node.name).items():
            manifest.append({"layer": node.name, "tensor": name,
                             "shape": list(p.value.shape), "trainable": bool(p.trainable)})
            blobs.append(np.ascontiguousarray(p.value, dtype="<f4").tobytes())
    header = json.dumps({"tensors": manifest}, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for blob in blobs:
            fh.write(blob)


def read_weights_file(path) -> list[tuple[dict, np.ndarray]]:
    data = Path(path).read_bytes()
    if data[:8] != MAGIC:
        raise FormatError(f"{path}: not a CORONET1 weights file")
    if len(data) < 12:
        raise FormatError(f"{path}: truncated header")
    (hlen,) = struct.unpack("<I", data[8:12])
    try:
        manifest = json.loads(data[12:12 + hlen].decode())["tensors"]
    except (ValueError, KeyError, UnicodeDecodeError) as exc:
        raise FormatError(f"{path}: unreadable manifest ({exc})") from None
    offset = 12 + hlen
    out = []
    for entry in manifest:
        n = math.prod(entry["shape"]) * 4
        if offset + n > len(data):
            raise FormatError(f"{path}: payload truncated at layer {entry['layer']!r}")
        arr = np.frombuffer(data, dtype="<f4", count=n // 4, offset=offset)
        out.append((entry, arr.reshape(entry["shape"]).astype(np.float32)))
        offset += n
    if offset != len(data):
        raise FormatError(f"{path}: {len(data) - offset} trailing bytes after payload")
    return out


def load_weights(graph: ComputeGraph, path, params: ParameterStore | None = None, seed=0):
    """Load ``path`` into ``params`` (or a fresh init from ``seed``).

    Every tensor in the file must exist in the graph with the same shape;
    graph tensors absent from the file keep their current values.
    """
    entries = read_weights_file(path)
    for entry, _ in entries:
        layer, tensor = entry["layer"], entry["tensor"]
        if layer not in graph:
            raise FormatError(f"layer {layer!r} in weights file does not exist in the graph")
        expected = L.param_shapes(graph.node(layer).spec).get(tensor)
        if expected is None:
            raise FormatError(f"layer {layer!r} has no tensor {tensor!r}")
        if tuple(entry["shape"]) != expected[0]:
            raise FormatError(f"layer {layer!r} tensor {tensor!r}: file shape "
                              f"{tuple(entry['shape'])} != graph shape {expected[0]}")
    params = graph.init_params(seed) if params is None else params.copy()
    for entry, value in entries:
        p = params.layer(entry["layer"])[entry["tensor"]]
        p.value = value.astype(p.value.dtype)
    return params


def head_arity_in_file(path) -> int:
    """Number of classes of the final dense layer stored in a weights file."""
    dense = [e for e, _ in read_weights_file(path) if e["tensor"] == "weight"]
    if not dense:
        raise FormatError(f"{path}: no dense layer in weights file")
    return dense[-1]["shape"][1]
