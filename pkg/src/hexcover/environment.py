"""The coverage MDP: masked actions, dense and episodic rewards, dead ends.

States are immutable snapshots; `step` returns a fresh state plus a fully
decomposed reward so every transition can be audited term by term.  After
each move a breadth-first reachability check fires the death penalty at the
first step where completion has become impossible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .aoi_graph import AOIGraph, AOIInstance

OUTCOME_RUNNING = "running"
OUTCOME_COMPLETED = "completed"
OUTCOME_DEAD_END = "dead_end"

# Heading changes below this are collinear-motion float noise, not turns.
_ANGLE_SNAP = 1e-6


@dataclass(frozen=True)
class RewardConfig:
    r_step: float = 2.0
    hex_coeff: float = 0.5
    dist_coeff: float = -1.0
    turn_coeff: float = -0.25
    r_complete: float = 100.0
    r_death: float = -40.0
    c_base: float = 1.0 / 12.0

    def __post_init__(self):
        if self.c_base <= 0:
            raise ValueError("c_base must be positive")


@dataclass(frozen=True)
class EnvState:
    current: int
    visited: int  # bitmask over cell nodes
    heading: Optional[tuple]  # unit vector of the last move, None before it
    step: int
    done: bool = False
    outcome: str = OUTCOME_RUNNING

    def visited_count(self) -> int:
        return bin(self.visited).count("1")

    def is_visited(self, cell: int) -> bool:
        return bool((self.visited >> cell) & 1)


@dataclass
class StepOutcome:
    reward: float
    components: dict
    mask_next: np.ndarray
    done: bool


@dataclass
class Trajectory:
    """Ordered node sequence with per-step reward decompositions."""

    nodes: list
    rewards: list = field(default_factory=list)
    components: list = field(default_factory=list)
    mask_sizes: list = field(default_factory=list)
    outcome: str = OUTCOME_RUNNING

    @property
    def total_return(self) -> float:
        return float(sum(self.rewards))

    def log_rows(self) -> list:
        rows = []
        for k in range(len(self.rewards)):
            rows.append({
                "from": self.nodes[k],
                "to": self.nodes[k + 1],
                "reward": self.rewards[k],
                "components": dict(self.components[k]),
                "mask_size": self.mask_sizes[k],
                "outcome": self.outcome if k == len(self.rewards) - 1 else OUTCOME_RUNNING,
            })
        return rows


def turn_penalty(theta: float, c_base: float = 1.0 / 12.0) -> float:
    """Kinematic turn cost: 0 at zero heading change, else 2[(theta/pi)^2 + c_base]."""
    if theta < -1e-9 or theta > math.pi + 1e-9:
        raise ValueError(f"heading change {theta} outside [0, pi]")
    theta = min(max(theta, 0.0), math.pi)
    if theta == 0.0:
        return 0.0
    return 2.0 * ((theta / math.pi) ** 2 + c_base)


def _norm_scale(graph: AOIGraph) -> float:
    rel = graph.coords_nm - graph.coords_nm[graph.base]
    return float(np.hypot(rel[:, 0], rel[:, 1]).max())


def _full_mask(graph: AOIGraph) -> int:
    return (1 << graph.n_cells) - 1


def action_mask(state: EnvState, graph: AOIGraph) -> np.ndarray:
    """Allowed next nodes: unvisited cell neighbors; the terminal unlocks
    only once every cell is visited; the departure base is never allowed."""
    mask = np.zeros(graph.n_nodes, dtype=bool)
    if state.done:
        return mask
    all_visited = state.visited == _full_mask(graph)
    for j in graph.adjacency[state.current]:
        if j < graph.n_cells:
            mask[j] = not state.is_visited(j)
        elif j == graph.terminal:
            mask[j] = all_visited
    return mask


def reset(instance: AOIInstance):
    graph = instance.graph
    state = EnvState(current=graph.base, visited=0, heading=None, step=0)
    return state, action_mask(state, graph)


@dataclass(frozen=True)
class DeadendResult:
    ok: bool
    cause: Optional[str] = None


def deadend_check(state: EnvState, graph: AOIGraph) -> DeadendResult:
    """BFS over unvisited cells from the current node.

    Dead end iff some unvisited cell is unreachable, or the terminal cannot
    be reached through the remaining unvisited cells.
    """
    n = graph.n_cells
    unvisited = [i for i in range(n) if not state.is_visited(i)]
    terminal_adjacent = set(graph.cell_neighbors(graph.terminal))
    if not unvisited:
        if state.current in terminal_adjacent or state.current == graph.base:
            # A base start with zero cells cannot happen on audited instances.
            return DeadendResult(True)
        return DeadendResult(False, "terminal_unreachable")
    stack = [j for j in graph.cell_neighbors(state.current) if not state.is_visited(j)]
    seen = set(stack)
    end_ok = False
    while stack:
        i = stack.pop()
        if i in terminal_adjacent:
            end_ok = True
        for j in graph.cell_neighbors(i):
            if not state.is_visited(j) and j not in seen:
                seen.add(j)
                stack.append(j)
    if len(seen) != len(unvisited):
        return DeadendResult(False, "unreachable_cells")
    if not end_ok:
        return DeadendResult(False, "terminal_unreachable")
    return DeadendResult(True)


def _heading_angle(prev: tuple, disp: np.ndarray) -> float:
    u = np.asarray(prev)
    norm = float(np.hypot(disp[0], disp[1]))
    v = disp / norm
    cos_t = min(1.0, max(-1.0, float(u @ v)))
    theta = math.acos(cos_t)
    return 0.0 if theta < _ANGLE_SNAP else theta


def step(state: EnvState, action: int, graph: AOIGraph,
         cfg: RewardConfig = RewardConfig()):
    """Apply one transition; returns (new_state, StepOutcome).

    The reward is the exact sum of its logged components.  The first move of
    an episode carries no turn cost; the completion bonus fires on the move
    onto the terminal, and the death penalty is folded into the episodic
    component of the step that made completion impossible.
    """
    if state.done:
        raise ValueError("episode already terminated")
    mask = action_mask(state, graph)
    if not mask[action]:
        raise ValueError(f"action {action} is not allowed in this state")

    n = graph.n_cells
    disp = graph.coords_nm[action] - graph.coords_nm[state.current]
    d_norm = float(np.hypot(disp[0], disp[1])) / _norm_scale(graph)
    d_bar = d_norm * math.sqrt(n)

    comp = {
        "step": cfg.r_step if action < n else 0.0,
        "hex": 0.0,
        "dist": cfg.dist_coeff * d_bar,
        "turn": 0.0,
        "episodic": 0.0,
    }
    if action < n:
        decay = 1.0 - state.step / n
        comp["hex"] = cfg.hex_coeff * float(graph.hexscore[action]) * decay
    if state.heading is not None:
        theta = _heading_angle(state.heading, disp)
        comp["turn"] = cfg.turn_coeff * turn_penalty(theta, cfg.c_base)

    norm = float(np.hypot(disp[0], disp[1]))
    heading = (float(disp[0] / norm), float(disp[1] / norm))

    if action == graph.terminal:
        comp["episodic"] = cfg.r_complete
        new_state = EnvState(current=action, visited=state.visited, heading=heading,
                             step=state.step + 1, done=True, outcome=OUTCOME_COMPLETED)
    else:
        new_state = EnvState(current=action, visited=state.visited | (1 << action),
                             heading=heading, step=state.step + 1)
        check = deadend_check(new_state, graph)
        if not check.ok:
            comp["episodic"] = cfg.r_death
            new_state = EnvState(current=action, visited=new_state.visited,
                                 heading=heading, step=new_state.step,
                                 done=True, outcome=OUTCOME_DEAD_END)

    reward = comp["step"] + comp["hex"] + comp["dist"] + comp["turn"] + comp["episodic"]
    mask_next = action_mask(new_state, graph)
    return new_state, StepOutcome(reward=reward, components=comp,
                                  mask_next=mask_next, done=new_state.done)


def random_rollout(instance: AOIInstance, rng: np.random.Generator,
                   cfg: RewardConfig = RewardConfig()) -> Trajectory:
    """Roll an episode with uniform sampling over allowed actions."""
    graph = instance.graph
    state, mask = reset(instance)
    traj = Trajectory(nodes=[graph.base])
    while not state.done:
        allowed = np.flatnonzero(mask)
        action = int(allowed[rng.integers(0, len(allowed))])
        state, out = step(state, action, graph, cfg)
        traj.nodes.append(action)
        traj.rewards.append(out.reward)
        traj.components.append(out.components)
        traj.mask_sizes.append(len(allowed))
        mask = out.mask_next
    traj.outcome = state.outcome
    return traj
