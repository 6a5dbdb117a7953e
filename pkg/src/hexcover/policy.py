"""Transformer pointer policy over the AOI graph.

A neighbor-masked self-attention encoder produces static node embeddings;
an autoregressive decoder folds the current node, the start node, the graph
mean, and a small set of environmental signals into a query; glimpse rounds
refine it; an additive tanh pointer scores every node.  Masked, clipped
softmax turns scores into a feasible action distribution.

All tensors are float64 on CPU.  Gradients come from reverse-mode autodiff
on the cached forward graph and are exposed as one flat vector in declared
parameter order, which is also the checkpoint layout.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
import torch

from .aoi_graph import AOIGraph, features
from .environment import EnvState, action_mask, deadend_check
from .errors import FormatVersionError, SchemaError

torch.set_default_dtype(torch.float64)

CHECKPOINT_VERSION = "1"
_FEATURE_DIM = 4
_SIGNAL_DIM = 6


@dataclass(frozen=True)
class PolicyDims:
    d: int = 32
    layers: int = 2
    heads: int = 4
    glimpses: int = 2
    ff_mult: int = 4
    k_hop: int = 1
    clip_c: float = 10.0

    def __post_init__(self):
        if self.d % self.heads != 0:
            raise ValueError("model dim must divide evenly into heads")


def _spec(dims: PolicyDims) -> list:
    """Declared (name, shape) order; the flat vector and checkpoints follow it."""
    d, dff = dims.d, dims.d * dims.ff_mult
    out = [("embed_w", (_FEATURE_DIM, d)), ("embed_b", (d,))]
    for l in range(dims.layers):
        out += [
            (f"enc{l}_ln1_g", (d,)), (f"enc{l}_ln1_b", (d,)),
            (f"enc{l}_wq", (d, d)), (f"enc{l}_wk", (d, d)),
            (f"enc{l}_wv", (d, d)), (f"enc{l}_wo", (d, d)),
            (f"enc{l}_ln2_g", (d,)), (f"enc{l}_ln2_b", (d,)),
            (f"enc{l}_ff1_w", (d, dff)), (f"enc{l}_ff1_b", (dff,)),
            (f"enc{l}_ff2_w", (dff, d)), (f"enc{l}_ff2_b", (d,)),
        ]
    out += [("sig_w", (_SIGNAL_DIM, d)), ("sig_b", (d,)),
            ("ctx_in_w", (4 * d, d)), ("ctx_in_b", (d,)),
            ("ctx_ff1_w", (d, d)), ("ctx_ff1_b", (d,)),
            ("ctx_ff2_w", (d, d)), ("ctx_ff2_b", (d,))]
    for g in range(dims.glimpses):
        out += [(f"glm{g}_wq", (d, d)), (f"glm{g}_wk", (d, d)), (f"glm{g}_wv", (d, d))]
    out += [("ptr_wq", (d, d)), ("ptr_wk", (d, d)), ("ptr_wb", (d, d)),
            ("ptr_v", (d,)), ("ptr_alpha", ())]
    return out


class PolicyParams:
    """All learnable weights, flat-indexable in declared order."""

    def __init__(self, dims: PolicyDims, tensors: dict):
        self.dims = dims
        self.tensors = tensors

    @classmethod
    def init(cls, dims: PolicyDims = PolicyDims(), seed: int = 0) -> "PolicyParams":
        gen = torch.Generator(device="cpu").manual_seed(int(seed))
        tensors = {}
        for name, shape in _spec(dims):
            fan_in = shape[0] if len(shape) >= 1 else 1
            bound = 1.0 / math.sqrt(max(fan_in, 1))
            if name.endswith(("_b", "_g")) and len(shape) == 1:
                t = torch.ones(shape) if name.endswith("_g") else torch.zeros(shape)
            elif name == "ptr_alpha":
                t = torch.ones(())
            else:
                t = torch.empty(shape).uniform_(-bound, bound, generator=gen)
            t.requires_grad_(True)
            tensors[name] = t
        return cls(dims, tensors)

    def __getitem__(self, name: str) -> torch.Tensor:
        return self.tensors[name]

    @property
    def n_params(self) -> int:
        return sum(t.numel() for t in self.tensors.values())

    def flat(self) -> np.ndarray:
        with torch.no_grad():
            return torch.cat([t.reshape(-1) for t in self.tensors.values()]).numpy().copy()

    def load_flat(self, vec: np.ndarray) -> None:
        vec = np.asarray(vec, dtype=np.float64)
        if vec.size != self.n_params:
            raise ValueError(f"expected {self.n_params} values, got {vec.size}")
        pos = 0
        with torch.no_grad():
            for t in self.tensors.values():
                k = t.numel()
                t.copy_(torch.from_numpy(vec[pos:pos + k].reshape(t.shape)))
                pos += k

    def zero_grad(self) -> None:
        for t in self.tensors.values():
            if t.grad is not None:
                t.grad.detach_()
                t.grad.zero_()

    def flat_grad(self) -> np.ndarray:
        parts = []
        for t in self.tensors.values():
            g = t.grad if t.grad is not None else torch.zeros_like(t)
            parts.append(g.reshape(-1))
        return torch.cat(parts).detach().numpy().copy()

    def clone(self) -> "PolicyParams":
        fresh = {n: t.detach().clone().requires_grad_(True)
                 for n, t in self.tensors.items()}
        return PolicyParams(self.dims, fresh)


# ---------------------------------------------------------------------------
# Forward passes
# ---------------------------------------------------------------------------

def _khop_mask(graph: AOIGraph, k: int) -> torch.Tensor:
    n = graph.n_nodes
    adj = torch.zeros((n, n), dtype=torch.bool)
    for i in range(n):
        adj[i, i] = True
        for j in graph.adjacency[i]:
            adj[i, j] = True
    reach = adj
    for _ in range(k - 1):
        reach = (reach.double() @ adj.double()) > 0
    return reach


def encode(feats: np.ndarray, graph: AOIGraph, params: PolicyParams):
    """Static node embeddings and the graph mean embedding.

    Self-attention is restricted to each node's k-hop neighborhood plus
    itself, so information flows only along the hex topology.
    """
    dims = params.dims
    d, H = dims.d, dims.heads
    dh = d // H
    mask = _khop_mask(graph, dims.k_hop)
    x = torch.as_tensor(np.asarray(feats)) @ params["embed_w"] + params["embed_b"]
    n = x.shape[0]
    neg = torch.tensor(float("-inf"))
    for l in range(dims.layers):
        y = torch.nn.functional.layer_norm(
            x, (d,), params[f"enc{l}_ln1_g"], params[f"enc{l}_ln1_b"])
        q = (y @ params[f"enc{l}_wq"]).reshape(n, H, dh).transpose(0, 1)
        k = (y @ params[f"enc{l}_wk"]).reshape(n, H, dh).transpose(0, 1)
        v = (y @ params[f"enc{l}_wv"]).reshape(n, H, dh).transpose(0, 1)
        scores = q @ k.transpose(1, 2) / math.sqrt(dh)
        scores = torch.where(mask.unsqueeze(0), scores, neg)
        att = torch.softmax(scores, dim=-1)
        x = x + (att @ v).transpose(0, 1).reshape(n, d) @ params[f"enc{l}_wo"]
        y = torch.nn.functional.layer_norm(
            x, (d,), params[f"enc{l}_ln2_g"], params[f"enc{l}_ln2_b"])
        h = torch.relu(y @ params[f"enc{l}_ff1_w"] + params[f"enc{l}_ff1_b"])
        x = x + h @ params[f"enc{l}_ff2_w"] + params[f"enc{l}_ff2_b"]
    return x, x.mean(dim=0)


@dataclass
class DecoderContext:
    current_embedding: torch.Tensor
    first_embedding: torch.Tensor
    graph_embedding: torch.Tensor
    signals: np.ndarray


def decoder_signals(state: EnvState, graph: AOIGraph) -> np.ndarray:
    """Environmental signals: coverage progress, heading, frontier
    statistics, and the reachability status of the remaining cells."""
    n = graph.n_cells
    coverage = state.visited_count() / n
    heading = state.heading if state.heading is not None else (0.0, 0.0)
    if state.current == graph.base:
        near = graph.cell_neighbors(graph.base)
    else:
        near = graph.cell_neighbors(state.current)
    frontier_local = sum(1 for j in near if not state.is_visited(j)) / 6.0
    scarce = sum(
        1 for i in range(n)
        if not state.is_visited(i)
        and sum(1 for j in graph.cell_neighbors(i) if not state.is_visited(j)) <= 1
    ) / n
    reachable = 1.0 if deadend_check(state, graph).ok else 0.0
    return np.array([coverage, heading[0], heading[1],
                     frontier_local, scarce, reachable])


def build_context(state: EnvState, graph: AOIGraph, embeddings: torch.Tensor,
                  graph_embedding: torch.Tensor) -> DecoderContext:
    return DecoderContext(
        current_embedding=embeddings[state.current],
        first_embedding=embeddings[graph.base],
        graph_embedding=graph_embedding,
        signals=decoder_signals(state, graph),
    )


def _visit_vector(state: EnvState, graph: AOIGraph) -> torch.Tensor:
    vis = torch.zeros(graph.n_nodes)
    for i in range(graph.n_cells):
        if state.is_visited(i):
            vis[i] = 1.0
    vis[graph.base] = 1.0
    return vis


def decode_step(embeddings: torch.Tensor, graph_embedding: torch.Tensor,
                state: EnvState, graph: AOIGraph, params: PolicyParams,
                mask: np.ndarray = None) -> torch.Tensor:
    """Raw pointer logits over all nodes for the current state."""
    ctx = build_context(state, graph, embeddings, graph_embedding)
    if mask is None:
        mask = action_mask(state, graph)
    mask_t = torch.as_tensor(mask)
    d = params.dims.d

    sig = torch.as_tensor(ctx.signals) @ params["sig_w"] + params["sig_b"]
    cat = torch.cat([ctx.current_embedding, ctx.first_embedding,
                     ctx.graph_embedding, sig])
    z = cat @ params["ctx_in_w"] + params["ctx_in_b"]
    h = torch.relu(z @ params["ctx_ff1_w"] + params["ctx_ff1_b"])
    q = z + h @ params["ctx_ff2_w"] + params["ctx_ff2_b"]

    neg = torch.tensor(float("-inf"))
    for g in range(params.dims.glimpses):
        gq = q @ params[f"glm{g}_wq"]
        gk = embeddings @ params[f"glm{g}_wk"]
        gv = embeddings @ params[f"glm{g}_wv"]
        sc = gk @ gq / math.sqrt(d)
        sc = torch.where(mask_t, sc, neg)
        q = q + torch.softmax(sc, dim=0) @ gv

    vis = _visit_vector(state, graph)
    pre = (q @ params["ptr_wq"]).unsqueeze(0) + embeddings @ params["ptr_wk"] \
        + params["ptr_alpha"] * vis.unsqueeze(1) * params["ptr_wb"][:, 0].unsqueeze(0)
    return torch.tanh(pre / math.sqrt(d)) @ params["ptr_v"]


def clip_logits(logits: torch.Tensor, clip_c: float) -> torch.Tensor:
    """Smooth clip bounding magnitudes strictly below clip_c."""
    return clip_c * torch.tanh(logits / clip_c)


def masked_policy(logits: torch.Tensor, mask: np.ndarray, temperature: float = 1.0,
                  clip_c: float = 10.0) -> torch.Tensor:
    """Feasible action distribution: softmax((clip(logits) + mask) / T).

    Forbidden entries receive exactly zero probability.
    """
    mask_t = torch.as_tensor(np.asarray(mask, dtype=bool))
    if not bool(mask_t.any()):
        raise ValueError("mask allows no actions; the episode should have ended")
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    clipped = clip_logits(logits, clip_c)
    masked = torch.where(mask_t, clipped, torch.tensor(float("-inf")))
    return torch.softmax(masked / temperature, dim=0)


def masked_log_policy(logits: torch.Tensor, mask: np.ndarray, temperature: float = 1.0,
                      clip_c: float = 10.0) -> torch.Tensor:
    mask_t = torch.as_tensor(np.asarray(mask, dtype=bool))
    if not bool(mask_t.any()):
        raise ValueError("mask allows no actions; the episode should have ended")
    clipped = clip_logits(logits, clip_c)
    masked = torch.where(mask_t, clipped, torch.tensor(float("-inf")))
    return torch.log_softmax(masked / temperature, dim=0)


def policy_distribution(graph: AOIGraph, state: EnvState, embeddings, graph_embedding,
                        params: PolicyParams, temperature: float = 1.0):
    """Convenience: (probs, mask) for the current state."""
    mask = action_mask(state, graph)
    logits = decode_step(embeddings, graph_embedding, state, graph, params, mask)
    return masked_policy(logits, mask, temperature, params.dims.clip_c), mask


def encode_instance(instance, params: PolicyParams):
    """Encoder pass over an instance's features; cached per episode group."""
    feats = features(instance.graph)
    return encode(feats, instance.graph, params)


def backward(loss: torch.Tensor, params: PolicyParams) -> np.ndarray:
    """Reverse-mode gradient of `loss` for every parameter, flat-ordered."""
    params.zero_grad()
    loss.backward()
    return params.flat_grad()


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

def save_checkpoint(params: PolicyParams, path, seed: int = 0, epoch: int = 0) -> None:
    header = {
        "format_version": CHECKPOINT_VERSION,
        "dims": asdict(params.dims),
        "seed": int(seed),
        "epoch": int(epoch),
        "n_params": params.n_params,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, ensure_ascii=False).encode("utf-8"))
        fh.write(b"\n")
        fh.write(params.flat().astype("<f8").tobytes())


def load_checkpoint(path):
    """Returns (params, header); byte-exact inverse of save_checkpoint."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        blob = fh.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaError(f"unreadable checkpoint header: {exc}") from exc
    if header.get("format_version") != CHECKPOINT_VERSION:
        raise FormatVersionError(
            f"unsupported checkpoint version {header.get('format_version')!r}")
    dims = PolicyDims(**header["dims"])
    params = PolicyParams.init(dims, seed=header.get("seed", 0))
    vec = np.frombuffer(blob, dtype="<f8")
    if vec.size != header["n_params"]:
        raise SchemaError("checkpoint payload size disagrees with header")
    params.load_flat(vec)
    return params, header
