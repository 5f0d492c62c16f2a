"""Layer graphs with skip edges and the parameter store they read from."""

from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from . import layers as L
from .errors import ShapeError, StateError

INPUT = "input"
BACKBONE = "xception"  # group tag of every backbone node


@dataclass(frozen=True)
class Node:
    name: str
    spec: object
    inputs: tuple[str, ...]
    group: Optional[str] = None  # e.g. "xception" for every backbone layer


@dataclass
class Parameter:
    value: np.ndarray
    trainable: bool


class ParameterStore:
    """Per-layer named tensors, each tagged trainable or not."""

    def __init__(self):
        self._layers: dict[str, dict[str, Parameter]] = {}

    def add(self, layer: str, name: str, value: np.ndarray, trainable: bool):
        self._layers.setdefault(layer, {})[name] = Parameter(value, trainable)

    def __contains__(self, layer):
        return layer in self._layers

    def layer(self, layer: str) -> dict[str, Parameter]:
        return self._layers.get(layer, {})

    def arrays(self, layer: str) -> dict[str, np.ndarray]:
        return {k: p.value for k, p in self.layer(layer).items()}

    def layers(self) -> list[str]:
        return list(self._layers)

    def drop_layer(self, layer: str):
        self._layers.pop(layer, None)

    def __iter__(self) -> Iterator[tuple[str, str, Parameter]]:
        for layer, tensors in self._layers.items():
            for name, p in tensors.items():
                yield layer, name, p

    def copy(self) -> "ParameterStore":
        return copy.deepcopy(self)

    def __eq__(self, other):
        if not isinstance(other, ParameterStore):
            return NotImplemented
        mine, theirs = list(self), list(other)
        if [(a, b, p.trainable) for a, b, p in mine] != [(a, b, p.trainable) for a, b, p in theirs]:
            return False
        return all(
            p.value.dtype == q.value.dtype and p.value.tobytes() == q.value.tobytes()
            for (_, _, p), (_, _, q) in zip(mine, theirs)
        )


class ComputeGraph:
    """Topologically ordered layer list.  A node reads from the graph input
    (``"input"``) or from earlier nodes; the last node is the output.

    ``forward(..., record=True)`` caches every node's inputs and output so that
    ``backward`` can run; backward visits each node once, in reverse order.
    """

    def __init__(self, input_shape: Sequence[int]):
        self.input_shape = tuple(int(d) for d in input_shape)
        self.nodes: list[Node] = []
        self._index: dict[str, int] = {}
        self._shapes: dict[str, tuple] = {INPUT: (1,) + self.input_shape}
        self._cache = None

    # -- construction -----------------------------------------------------

    def add(self, name, spec, inputs=None, group=None) -> str:
        if name in self._index or name == INPUT:
            raise ValueError(f"duplicate node name {name!r}")
        if inputs is None:
            inputs = (self.nodes[-1].name if self.nodes else INPUT,)
        elif isinstance(inputs, str):
            inputs = (inputs,)
        inputs = tuple(inputs)
        for src in inputs:
            if src not in self._shapes:
                raise ValueError(f"node {name!r} reads unknown node {src!r}")
        expected = 2 if isinstance(spec, L.ResidualAdd) else 1
        if len(inputs) != expected:
            raise ValueError(f"{type(spec).__name__} takes {expected} input(s), got {len(inputs)}")
        self._shapes[name] = L.output_shape(spec, [self._shapes[s] for s in inputs])
        self._index[name] = len(self.nodes)
        self.nodes.append(Node(name, spec, inputs, group))
        self._cache = None
        return name

    def replace(self, name, spec):
        """Swap the spec of an existing node; downstream shapes must still fit."""
        i = self._index[name]
        old = self.nodes[i]
        self.nodes[i] = Node(name, spec, old.inputs, old.group)
        for node in self.nodes[i:]:
            self._shapes[node.name] = L.output_shape(
                node.spec, [self._shapes[s] for s in node.inputs])
        self._cache = None

    def node(self, name) -> Node:
        return self.nodes[self._index[name]]

    def __contains__(self, name):
        return name in self._index

    @property
    def output(self) -> str:
        return self.nodes[-1].name

    def shape_of(self, name) -> tuple:
        """Static output shape of ``name`` without the batch axis."""
        return self._shapes[name][1:]

    def init_params(self, seed: int, dtype=np.float32) -> ParameterStore:
        """Fresh parameters, drawn in node order from one seeded stream."""
        rng = np.random.default_rng(seed)
        store = ParameterStore()
        for node in self.nodes:
            self.init_node(store, node.name, rng, dtype)
        return store

    def init_node(self, store: ParameterStore, name: str, rng, dtype=np.float32):
        spec = self.node(name).spec
        values = L.init_params(spec, rng, dtype)
        for pname, (_, trainable) in L.param_shapes(spec).items():
            store.add(name, pname, values[pname], trainable)

    # -- execution --------------------------------------------------------

    def _dropout_seed(self, seed, index):
        return int(np.random.SeedSequence([int(seed), index]).generate_state(1, np.uint64)[0])

    def _node_mode(self, node, params, mode):
        # frozen batch-norm layers keep using their moving statistics
        if mode == L.TRAIN and isinstance(node.spec, L.BatchNorm):
            if not params.layer(node.name)["gamma"].trainable:
                return L.INFER
        return mode

    def forward(self, params: ParameterStore, x, mode=L.INFER, seed=0, record=False,
                update_stats=True):
        if tuple(x.shape[1:]) != self.input_shape:
            raise ShapeError(f"graph expects inputs of shape N x {self.input_shape}, got {x.shape}")
        values = {INPUT: x}
        modes = {}
        remaining = self._consumer_counts()
        for i, node in enumerate(self.nodes):
            node_mode = self._node_mode(node, params, mode)
            modes[node.name] = node_mode
            arrays = params.arrays(node.name)
            ins = [values[s] for s in node.inputs]
            seed_i = self._dropout_seed(seed, i) if isinstance(node.spec, L.Dropout) else None
            values[node.name] = L.forward(node.spec, ins, arrays, node_mode, seed_i)
            if node_mode == L.TRAIN and isinstance(node.spec, L.BatchNorm) and update_stats:
                for k, v in L.batchnorm_moving_update(ins[0], node.spec, arrays).items():
                    params.layer(node.name)[k].value = v
            if not record:
                for s in node.inputs:
                    remaining[s] -= 1
                    if remaining[s] == 0:
                        del values[s]
        out = values[self.output]
        self._cache = (values, modes, seed) if record else None
        return out

    def _consumer_counts(self):
        counts = {INPUT: 0}
        for node in self.nodes:
            counts[node.name] = 0
            for s in node.inputs:
                counts[s] += 1
        counts[self.output] += 1  # keep the output alive
        return counts

    def _needs_grad(self, params):
        """Nodes whose output gradient matters for some trainable parameter."""
        upstream = {INPUT: False}
        for node in self.nodes:
            own = any(p.trainable for p in params.layer(node.name).values())
            upstream[node.name] = own or any(upstream[s] for s in node.inputs)
        return upstream

    def backward(self, params: ParameterStore, grad_output=None, seeds=None):
        """Reverse pass over the last recorded forward.

        Either ``grad_output`` (gradient w.r.t. the graph output) or ``seeds``
        (node name -> gradient of that node's output) starts the pass.
        Returns {(layer, tensor): gradient} for trainable tensors only.
        """
        if self._cache is None:
            raise StateError("backward called without a recorded forward pass")
        values, modes, seed = self._cache
        grads_out = dict(seeds or {})
        if grad_output is not None:
            grads_out[self.output] = grad_output
        needs = self._needs_grad(params)
        param_grads = {}
        for i in range(len(self.nodes) - 1, -1, -1):
            node = self.nodes[i]
            g = grads_out.pop(node.name, None)
            if g is None or not needs[node.name]:
                continue
            ins = [values[s] for s in node.inputs]
            seed_i = self._dropout_seed(seed, i) if isinstance(node.spec, L.Dropout) else None
            dins, dparams = L.backward(node.spec, ins, values[node.name], g,
                                       params.arrays(node.name), modes[node.name], seed_i)
            for pname, dp in dparams.items():
                if params.layer(node.name)[pname].trainable:
                    param_grads[(node.name, pname)] = dp
            for src, d in zip(node.inputs, dins):
                if src == INPUT or not needs[src]:
                    continue
                grads_out[src] = d if src not in grads_out else grads_out[src] + d
        return param_grads

    def clear(self):
        self._cache = None
