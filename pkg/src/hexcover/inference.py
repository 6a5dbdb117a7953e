"""Test-time decoding: greedy argmax, best-of-K sampling, 2-opt refinement.

Best-of-K seeds the greedy rollout as candidate 0, so its corpus-level
success rate can never fall below greedy's.  The 2-opt pass reverses tour
segments only when both new junctions exist in the sparse graph and the
blended distance+turn cost strictly decreases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch

from .aoi_graph import AOIGraph, AOIInstance
from .environment import (OUTCOME_COMPLETED, RewardConfig, reset, step,
                          turn_penalty)
from .heuristics import Route, validate_route
from .policy import (PolicyParams, clip_logits, decode_step, encode_instance,
                     masked_log_policy)

MODES = ("greedy", "bok", "bok_2opt")


@dataclass(frozen=True)
class InferenceConfig:
    mode: str = "greedy"
    k: int = 16
    temperature: float = 1.0
    two_opt_max_passes: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")


@dataclass
class _Episode:
    route: Route
    total_return: float
    covered: int
    distance_nm: float


def _route_from_nodes(nodes: list, graph: AOIGraph, method: str) -> Route:
    covered = {v for v in nodes if v < graph.n_cells}
    complete = len(covered) == graph.n_cells and nodes[-1] == graph.terminal
    route = Route(nodes=nodes, revisit_count=0, complete=complete,
                  hamiltonian=complete, method=method)
    validate_route(route, graph)
    return route


def _rollout(instance: AOIInstance, params: PolicyParams, embeddings,
             graph_embedding, method: str, sample: bool,
             temperature: float = 1.0, gen: torch.Generator = None,
             reward_cfg: RewardConfig = RewardConfig()) -> _Episode:
    graph = instance.graph
    state, mask = reset(instance)
    nodes = [graph.base]
    total = 0.0
    distance = 0.0
    with torch.no_grad():
        while not state.done:
            logits = decode_step(embeddings, graph_embedding, state, graph,
                                 params, mask)
            if sample:
                logp = masked_log_policy(logits, mask, temperature,
                                         params.dims.clip_c)
                action = int(torch.multinomial(torch.exp(logp), 1,
                                               generator=gen).item())
            else:
                clipped = clip_logits(logits, params.dims.clip_c).numpy()
                clipped[~mask] = -np.inf
                action = int(np.argmax(clipped))  # ties: lowest node index
            seg = graph.coords_nm[action] - graph.coords_nm[state.current]
            distance += float(np.hypot(*seg))
            state, out = step(state, action, graph, reward_cfg)
            nodes.append(action)
            total += out.reward
            mask = out.mask_next
    covered = sum(1 for v in set(nodes) if v < graph.n_cells)
    route = _route_from_nodes(nodes, graph, method)
    return _Episode(route=route, total_return=total, covered=covered,
                    distance_nm=distance)


def greedy(instance: AOIInstance, params: PolicyParams) -> Route:
    """Deterministic argmax decoding, lowest node index on ties."""
    embeddings, graph_embedding = encode_instance(instance, params)
    return _rollout(instance, params, embeddings, graph_embedding,
                    "rl_greedy", sample=False).route


def best_of_k(instance: AOIInstance, params: PolicyParams,
              cfg: InferenceConfig = InferenceConfig(mode="bok")) -> Route:
    """Best of K rollouts: greedy as candidate 0, K-1 stochastic samples.

    Among full-coverage candidates the one with the highest episodic return
    wins; if none completes, the fallback keeps the candidate covering the
    most cells, breaking ties by minimum traveled distance.
    """
    embeddings, graph_embedding = encode_instance(instance, params)
    episodes = [_rollout(instance, params, embeddings, graph_embedding,
                         "rl_bok", sample=False)]
    gen = torch.Generator(device="cpu")
    gen.manual_seed((int(cfg.seed) * 1_000_003 + instance.seed) % (2 ** 63 - 1))
    for _ in range(cfg.k - 1):
        episodes.append(_rollout(instance, params, embeddings, graph_embedding,
                                 "rl_bok", sample=True,
                                 temperature=cfg.temperature, gen=gen))
    solved = [e for e in episodes if e.route.hamiltonian]
    if solved:
        return max(solved, key=lambda e: e.total_return).route
    best = episodes[0]
    for e in episodes[1:]:
        if (e.covered, -e.distance_nm) > (best.covered, -best.distance_nm):
            best = e
    return best.route


# ---------------------------------------------------------------------------
# 2-opt refinement
# ---------------------------------------------------------------------------

def route_cost(nodes: list, graph: AOIGraph,
               reward_cfg: RewardConfig = RewardConfig()) -> float:
    """Blended tour cost: normalized distance plus reward-weighted turns.

    Uses the same relative weighting as the reward's cost terms, so the
    refinement optimizes exactly what training penalized.  The first
    transition carries no turn cost, mirroring the episode semantics.
    """
    rel = graph.coords_nm - graph.coords_nm[graph.base]
    scale = float(np.hypot(rel[:, 0], rel[:, 1]).max())
    root_n = math.sqrt(graph.n_cells)
    w_turn = abs(reward_cfg.turn_coeff) / abs(reward_cfg.dist_coeff)
    cost = 0.0
    heading = None
    for a, b in zip(nodes, nodes[1:]):
        seg = graph.coords_nm[b] - graph.coords_nm[a]
        norm = float(np.hypot(*seg))
        cost += norm / scale * root_n
        direction = seg / norm
        if heading is not None:
            cos_t = min(1.0, max(-1.0, float(heading @ direction)))
            theta = math.acos(cos_t)
            if theta < 1e-6:
                theta = 0.0
            cost += w_turn * turn_penalty(theta, reward_cfg.c_base)
        heading = direction
    return cost


def two_opt(route: Route, graph: AOIGraph,
            cfg: InferenceConfig = InferenceConfig(mode="bok_2opt"),
            reward_cfg: RewardConfig = RewardConfig()) -> Route:
    """First-improvement segment reversals under graph feasibility.

    A reversal is accepted only when both new junctions are edges of the
    graph and the total cost strictly decreases; the output is therefore
    always a valid Hamiltonian route with cost <= the input's.
    """
    if not route.hamiltonian:
        raise ValueError("2-opt refines Hamiltonian routes only")
    nodes = list(route.nodes)
    n = len(nodes) - 2  # cell count
    cost = route_cost(nodes, graph, reward_cfg)
    for _ in range(cfg.two_opt_max_passes):
        improved = False
        for i in range(1, n):
            for j in range(i + 1, n + 1):
                left, right = nodes[i - 1], nodes[j + 1]
                if nodes[j] not in graph.adjacency[left]:
                    continue
                if nodes[i] not in graph.adjacency[right]:
                    continue
                candidate = nodes[:i] + nodes[i:j + 1][::-1] + nodes[j + 1:]
                cand_cost = route_cost(candidate, graph, reward_cfg)
                if cand_cost < cost - 1e-12:
                    nodes = candidate
                    cost = cand_cost
                    improved = True
                    break
            if improved:
                break
        if not improved:
            break
    refined = Route(nodes=nodes, revisit_count=0, complete=True,
                    hamiltonian=True, method=route.method)
    validate_route(refined, graph)
    return refined


def solve_mode(mode: str, instance: AOIInstance, params: PolicyParams,
               cfg: InferenceConfig = None) -> Route:
    """Dispatch one of the three decoding modes; names match route docs."""
    cfg = cfg or InferenceConfig(mode=mode)
    if mode == "greedy":
        return greedy(instance, params)
    if mode == "bok":
        return best_of_k(instance, params, cfg)
    if mode == "bok_2opt":
        route = best_of_k(instance, params, cfg)
        if route.hamiltonian:
            route = two_opt(route, instance.graph, cfg)
        route.method = "rl_bok_2opt"
        return route
    raise ValueError(f"unknown mode {mode!r}")


MODE_METHOD_NAMES = {"greedy": "rl_greedy", "bok": "rl_bok",
                     "bok_2opt": "rl_bok_2opt"}
