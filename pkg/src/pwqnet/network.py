"""Feed-forward ReLU networks with optional quadratic feature lifts.

Networks are affine layers with elementwise max{0, .} between them (none
after the last layer).  Each network declares a feature map that turns the
raw input -- a state x, or a state/input pair (x, u) -- into the network's
actual input vector:

* ``identity``: the raw input itself (x, or x stacked with u),
* ``hv``: x extended by all degree-2 monomials of its entries,
* ``hq_prime``: x and u extended by all degree-2 monomials over the joint
  (x, u) vector, ordered (x block, x-quadratics, u block, u-quadratics,
  cross x*u terms).

The quadratic lifts are what let one-hidden-layer ReLU networks reproduce
piecewise quadratic functions exactly.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeMismatch

#: Significant digits used when printing floats in interchange documents.
#: 17 significant decimal digits round-trip an IEEE double bit-exactly.
_FLOAT_DIGITS = 17


def _quad_upper(v: np.ndarray) -> np.ndarray:
    """All products v_i * v_j for i <= j, row-major over the upper triangle."""
    d = v.shape[0]
    return np.concatenate([v[i] * v[i:] for i in range(d)]) if d else v


def feature_hv(x) -> np.ndarray:
    """Lift a state vector to (x, all products of two entries of x).

    For n = 1 this is (x, x^2); for n = 2 it is (x1, x2, x1^2, x1*x2, x2^2).
    Output length n*(n+3)/2.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return np.concatenate([x, _quad_upper(x)])


def feature_hq_prime(x, u) -> np.ndarray:
    """Lift a state/input pair to the joint degree-2 monomial vector.

    Ordered as (x, x-quadratics, u, u-quadratics, x_i*u_j cross terms with
    i-major ordering); for n = m = 1 this is (x, x^2, u, u^2, x*u).
    Output length (n+m)*(n+m+3)/2.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    return np.concatenate([x, _quad_upper(x), u, _quad_upper(u), np.outer(x, u).ravel()])


@dataclass(frozen=True)
class FeatureMap:
    """Declared input transformation of a network.

    kind ``identity`` uses n as the raw input width (x alone, or x stacked
    with u); ``hv`` takes a state of dimension n; ``hq_prime`` takes a state
    of dimension n and an input of dimension m.
    """

    kind: str
    n: int
    m: int = 0

    _KINDS = ("identity", "hv", "hq_prime")

    def __post_init__(self) -> None:
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown feature map kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("feature map needs n >= 1")
        if self.kind == "hq_prime" and self.m < 1:
            raise ValueError("hq_prime needs m >= 1")
        if self.kind != "hq_prime" and self.m != 0:
            raise ValueError(f"{self.kind} does not take an input dimension m")

    @classmethod
    def identity(cls, n: int) -> "FeatureMap":
        return cls("identity", n)

    @classmethod
    def hv(cls, n: int) -> "FeatureMap":
        return cls("hv", n)

    @classmethod
    def hq_prime(cls, n: int, m: int) -> "FeatureMap":
        return cls("hq_prime", n, m)

    @property
    def width(self) -> int:
        """Output width, i.e. the network's first-layer input dimension."""
        if self.kind == "identity":
            return self.n
        if self.kind == "hv":
            return self.n * (self.n + 3) // 2
        nm = self.n + self.m
        return nm * (nm + 3) // 2

    def apply(self, x, u=None) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.kind == "identity":
            raw = x if u is None else np.concatenate([x, np.atleast_1d(np.asarray(u, dtype=float))])
            if raw.shape[0] != self.n:
                raise ShapeMismatch(f"identity({self.n}) got raw input of length {raw.shape[0]}")
            return raw
        if self.kind == "hv":
            if u is not None:
                raise ShapeMismatch("hv feature map takes a state only")
            if x.shape[0] != self.n:
                raise ShapeMismatch(f"hv(n={self.n}) got state of length {x.shape[0]}")
            return feature_hv(x)
        if u is None:
            raise ShapeMismatch("hq_prime feature map needs both x and u")
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if x.shape[0] != self.n or u.shape[0] != self.m:
            raise ShapeMismatch(
                f"hq_prime(n={self.n},m={self.m}) got lengths ({x.shape[0]}, {u.shape[0]})"
            )
        return feature_hq_prime(x, u)

    def tag(self) -> str:
        if self.kind == "hq_prime":
            return f"hq_prime(n={self.n},m={self.m})"
        return f"{self.kind}(n={self.n})"

    @classmethod
    def from_tag(cls, tag: str) -> "FeatureMap":
        match = re.fullmatch(r"(\w+)\(n=(\d+)(?:,m=(\d+))?\)", tag.strip())
        if not match:
            raise ValueError(f"malformed feature map tag {tag!r}")
        kind, n, m = match.group(1), int(match.group(2)), match.group(3)
        return cls(kind, n, int(m) if m is not None else 0)


def _frozen_array(values, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"expected {ndim}-D array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Layer:
    """One affine layer y = W @ x + a (W is out x in, a has length out)."""

    W: np.ndarray
    a: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "W", _frozen_array(self.W, 2))
        object.__setattr__(self, "a", _frozen_array(self.a, 1))
        if self.W.shape[0] != self.a.shape[0]:
            raise ValueError(f"bias length {self.a.shape[0]} != rows {self.W.shape[0]}")

    @property
    def in_width(self) -> int:
        return self.W.shape[1]

    @property
    def out_width(self) -> int:
        return self.W.shape[0]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Layer)
            and self.W.shape == other.W.shape
            and np.array_equal(self.W, other.W)
            and np.array_equal(self.a, other.a)
        )


@dataclass(frozen=True, eq=False)
class ReluNetwork:
    """Immutable feed-forward ReLU network with a declared feature map."""

    layers: tuple[Layer, ...]
    feature_map: FeatureMap

    def __post_init__(self) -> None:
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        if not layers:
            raise ValueError("network needs at least one layer")
        if layers[0].in_width != self.feature_map.width:
            raise ShapeMismatch(
                f"first layer takes {layers[0].in_width} inputs but feature map "
                f"{self.feature_map.tag()} produces {self.feature_map.width}"
            )
        for i, (a, b) in enumerate(zip(layers, layers[1:])):
            if a.out_width != b.in_width:
                raise ShapeMismatch(f"layer {i} outputs {a.out_width}, layer {i + 1} takes {b.in_width}")

    @property
    def input_width(self) -> int:
        return self.layers[0].in_width

    @property
    def hidden_widths(self) -> tuple[int, ...]:
        return tuple(layer.out_width for layer in self.layers[:-1])

    @property
    def output_width(self) -> int:
        return self.layers[-1].out_width

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ReluNetwork)
            and self.feature_map == other.feature_map
            and self.layers == other.layers
        )


def forward(net: ReluNetwork, x, u=None) -> np.ndarray:
    """Evaluate the network at a single raw input.

    The feature map is applied first, then alternating affine maps and
    elementwise max{0, .}; no activation follows the final affine map.
    """
    y = net.feature_map.apply(x, u)
    last = len(net.layers) - 1
    for i, layer in enumerate(net.layers):
        y = layer.W @ y + layer.a
        if i < last:
            y = np.maximum(0.0, y)
    return y


def forward_scalar(net: ReluNetwork, x, u=None) -> float:
    """Forward pass for scalar-output networks, returned as a float."""
    out = forward(net, x, u)
    if out.shape != (1,):
        raise ShapeMismatch(f"expected scalar output, got shape {out.shape}")
    return float(out[0])


def hidden_preactivations(net: ReluNetwork, x, u=None) -> np.ndarray:
    """First-layer pre-activations W1 @ features + a1 (sign pattern probe)."""
    return net.layers[0].W @ net.feature_map.apply(x, u) + net.layers[0].a


# --- interchange documents -------------------------------------------------

def _fmt(value: float) -> str:
    return format(float(value), f".{_FLOAT_DIGITS}g")


def _emit(obj, out: list, indent: int) -> None:
    pad = "  " * indent
    if isinstance(obj, dict):
        out.append("{\n")
        for i, (key, val) in enumerate(obj.items()):
            out.append(f"{pad}  {json.dumps(key)}: ")
            _emit(val, out, indent + 1)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, val in enumerate(obj):
            _emit(val, out, indent)
            if i < len(obj) - 1:
                out.append(", ")
        out.append("]")
    elif isinstance(obj, bool) or obj is None:
        out.append(json.dumps(obj))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt(obj))
    else:
        out.append(json.dumps(obj))


def dump_document(doc: dict) -> str:
    """Serialize a document dict as JSON with 17-significant-digit floats."""
    out: list[str] = []
    _emit(doc, out, 0)
    out.append("\n")
    return "".join(out)


def network_to_dict(net: ReluNetwork, meta: dict | None = None) -> dict:
    return {
        "kind": "relu_network",
        "feature_map": net.feature_map.tag(),
        "layers": [
            {"W": [list(row) for row in layer.W], "a": list(layer.a)}
            for layer in net.layers
        ],
        "meta": dict(meta) if meta else {},
    }


def network_from_dict(doc: dict) -> ReluNetwork:
    if doc.get("kind") != "relu_network":
        raise ValueError(f"not a network document (kind={doc.get('kind')!r})")
    layers = tuple(Layer(entry["W"], entry["a"]) for entry in doc["layers"])
    return ReluNetwork(layers, FeatureMap.from_tag(doc["feature_map"]))


def serialize_network(net: ReluNetwork, meta: dict | None = None) -> str:
    """Render a network as a deterministic, bit-round-trippable text document."""
    return dump_document(network_to_dict(net, meta))


def deserialize_network(text: str) -> ReluNetwork:
    return network_from_dict(json.loads(text))


def read_network_document(text: str) -> tuple[ReluNetwork, dict]:
    """Parse a network document, returning the network and its meta block."""
    doc = json.loads(text)
    return network_from_dict(doc), doc.get("meta", {})
