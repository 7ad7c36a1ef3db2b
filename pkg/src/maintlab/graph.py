"""Group-derived device graph and the layered graph-convolution embedding.

Devices in the same group are connected by unweighted, undirected edges.
The adjacency is symmetrically normalized (self-loops added by default so
isolated nodes keep their own features and no degree is zero) and each
layer aggregates neighbor features through a learnable, bias-free linear
map: hidden layers use ReLU, the output layer is linear to preserve the
embedding's full range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import autodiff as ad
from .numerics.optim import Parameter
from .numerics.rng import RngStream
from .serialize import load_arrays, save_arrays

__all__ = ["DeviceGraph", "GcnConfig", "GcnParams", "build_graph", "normalize",
           "gcn_forward", "save_gcn", "load_gcn"]


@dataclass(frozen=True)
class GcnConfig:
    layers: int = 3
    hidden_dim: int = 64
    output_dim: int = 32
    self_loops: bool = True

    def __post_init__(self):
        if self.layers < 1:
            raise ValueError("layers must be >= 1")
        if self.hidden_dim < 1 or self.output_dim < 1:
            raise ValueError("dims must be >= 1")


@dataclass
class DeviceGraph:
    """Adjacency from group membership plus its symmetric normalization."""

    n_nodes: int
    groups: np.ndarray
    adjacency: np.ndarray
    normalized: np.ndarray


def build_graph(groups) -> np.ndarray:
    """0/1 adjacency: an edge joins two distinct nodes of the same group."""
    groups = np.asarray(groups)
    same = groups[:, None] == groups[None, :]
    adjacency = same.astype(np.float64)
    np.fill_diagonal(adjacency, 0.0)
    return adjacency


def normalize(adjacency, self_loops: bool = True) -> np.ndarray:
    """Symmetric degree normalization D^(-1/2) (A [+ I]) D^(-1/2).

    With self-loops off (the literal formula) a zero-degree node would
    divide by zero; such rows are guarded to all-zero instead.
    """
    a = np.asarray(adjacency, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("adjacency must be square")
    if not np.allclose(a, a.T):
        raise ValueError("adjacency must be symmetric")
    if self_loops:
        a = a + np.eye(a.shape[0])
    degree = a.sum(axis=1)
    inv_sqrt = np.where(degree > 0.0, 1.0 / np.sqrt(np.where(degree > 0.0, degree, 1.0)), 0.0)
    return inv_sqrt[:, None] * a * inv_sqrt[None, :]


def device_graph(groups, self_loops: bool = True) -> DeviceGraph:
    groups = np.asarray(groups)
    adjacency = build_graph(groups)
    return DeviceGraph(len(groups), groups, adjacency, normalize(adjacency, self_loops))


class GcnParams:
    """Bias-free weight chain: input -> hidden x (layers-1) -> output."""

    def __init__(self, cfg: GcnConfig, input_dim: int, rng: RngStream):
        dims = [input_dim] + [cfg.hidden_dim] * (cfg.layers - 1) + [cfg.output_dim]
        self.weights = []
        for l, (d_in, d_out) in enumerate(zip(dims[:-1], dims[1:])):
            bound = 1.0 / np.sqrt(d_in)
            self.weights.append(Parameter(rng.uniform(-bound, bound, size=(d_in, d_out)), f"gcn_w{l}"))
        self.input_dim = input_dim
        self.cfg = cfg

    def parameters(self):
        return list(self.weights)

    def arrays(self):
        return {p.name: p.value for p in self.weights}

    @classmethod
    def from_arrays(cls, arrays, cfg: GcnConfig, input_dim: int):
        params = cls(cfg, input_dim, RngStream(0, "gcn-placeholder"))
        for p in params.weights:
            p.value = np.array(arrays[p.name])
        return params


def gcn_forward(x, a_norm, params: GcnParams):
    """Node features (N, D) + normalized adjacency -> embeddings (N, d_out).

    Hidden layers: ReLU(A_norm @ H @ W); output layer has no activation.
    """
    val = x.value if isinstance(x, ad.Var) else np.asarray(x, dtype=np.float64)
    if val.ndim != 2:
        raise ValueError("node features must be a 2-D (nodes, features) array")
    if val.shape[-1] != params.input_dim:
        raise ValueError(f"expected {params.input_dim} input features, got {val.shape[-1]}")
    if np.asarray(a_norm).shape != (val.shape[0], val.shape[0]):
        raise ValueError("adjacency shape does not match node count")
    h = x
    last = len(params.weights) - 1
    for l, w in enumerate(params.weights):
        agg = ad.matmul(a_norm, ad.matmul(h, _wv(w, h, x)))
        h = agg if l == last else ad.relu(agg)
    return h


def _wv(param, like, root):
    anchor = like if isinstance(like, ad.Var) else root
    return anchor.tape.watch(param) if isinstance(anchor, ad.Var) else param.value


def save_gcn(params: GcnParams, path) -> None:
    save_arrays(path, params.arrays())


def load_gcn(path, cfg: GcnConfig, input_dim: int) -> GcnParams:
    return GcnParams.from_arrays(load_arrays(path), cfg, input_dim)
