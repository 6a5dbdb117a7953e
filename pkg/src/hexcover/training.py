"""Critic-free group-relative policy optimization.

For each instance a group of G trajectories is sampled from the current
policy; advantages are the group-standardized episodic returns, so a
trajectory is judged only against its peers on the same map.  The policy
then takes K clipped-surrogate epochs over shuffled trajectory minibatches
with an entropy bonus, a global gradient-norm cap, Adam moments, and
linearly annealed learning rate and sampling temperature.

Epoch randomness is derived statelessly from (seed, epoch), so a run
resumed from a checkpoint replays the remaining epochs bit-exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import torch

from .aoi_graph import AOIGraph, AOIInstance
from .environment import (OUTCOME_COMPLETED, RewardConfig, action_mask, reset,
                          step)
from .policy import (PolicyParams, decode_step, encode_instance,
                     masked_log_policy)


@dataclass(frozen=True)
class TrainConfig:
    rollouts_per_instance: int = 16     # G
    inner_epochs: int = 4               # K
    clip_eps: float = 0.2
    entropy_beta: float = 0.02
    lr: float = 3e-5
    batch_instances: int = 32           # B
    minibatch_traj: int = 8             # B_mb
    grad_norm_cap: float = 0.5
    max_epochs: int = 300
    patience: int = 4
    p_aug: float = 0.9
    t_init: float = 1.5
    t_final: float = 1.0
    t_anneal_epochs: int = 10
    adv_eps: float = 1e-8
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.rollouts_per_instance < 2:
            raise ValueError("need at least 2 rollouts per instance for a baseline")


def temperature_schedule(epoch: int, cfg: TrainConfig) -> float:
    frac = min(epoch, cfg.t_anneal_epochs) / cfg.t_anneal_epochs
    return cfg.t_init + (cfg.t_final - cfg.t_init) * frac


def lr_schedule(epoch: int, cfg: TrainConfig) -> float:
    return cfg.lr * max(0.0, 1.0 - epoch / cfg.max_epochs)


# ---------------------------------------------------------------------------
# Rollout collection
# ---------------------------------------------------------------------------

@dataclass
class RolloutTrajectory:
    instance: AOIInstance
    actions: list
    old_logps: np.ndarray
    total_return: float
    outcome: str
    advantage: float = 0.0


@dataclass
class RolloutGroup:
    instance_id: str
    instance: AOIInstance
    trajectories: list
    returns: np.ndarray
    advantages: np.ndarray = field(default=None)


def advantages(returns, eps: float = 1e-8) -> np.ndarray:
    """Group-standardized returns with the population standard deviation.

    All-equal returns give all-zero advantages; adding a constant to every
    return leaves the advantages unchanged.
    """
    r = np.asarray(returns, dtype=float)
    mu = r.mean()
    sigma = math.sqrt(float(((r - mu) ** 2).mean()))
    return (r - mu) / (sigma + eps)


def _sample_trajectory(instance: AOIInstance, params: PolicyParams,
                       embeddings, graph_embedding, temperature: float,
                       gen: torch.Generator,
                       reward_cfg: RewardConfig) -> RolloutTrajectory:
    graph = instance.graph
    state, mask = reset(instance)
    actions, logps = [], []
    total = 0.0
    with torch.no_grad():
        while not state.done:
            logits = decode_step(embeddings, graph_embedding, state, graph, params, mask)
            logp = masked_log_policy(logits, mask, temperature, params.dims.clip_c)
            probs = torch.exp(logp)
            action = int(torch.multinomial(probs, 1, generator=gen).item())
            actions.append(action)
            logps.append(float(logp[action]))
            state, out = step(state, action, graph, reward_cfg)
            total += out.reward
            mask = out.mask_next
    return RolloutTrajectory(instance=instance, actions=actions,
                             old_logps=np.array(logps), total_return=total,
                             outcome=state.outcome)


def collect_group(instance: AOIInstance, params: PolicyParams, temperature: float,
                  group_size: int, gen: torch.Generator,
                  reward_cfg: RewardConfig = RewardConfig(),
                  adv_eps: float = 1e-8) -> RolloutGroup:
    """Sample G trajectories from one instance and standardize their returns."""
    embeddings, graph_embedding = encode_instance(instance, params)
    trajs = [_sample_trajectory(instance, params, embeddings, graph_embedding,
                                temperature, gen, reward_cfg)
             for _ in range(group_size)]
    returns = np.array([t.total_return for t in trajs])
    advs = advantages(returns, adv_eps)
    for t, a in zip(trajs, advs):
        t.advantage = float(a)
    return RolloutGroup(instance_id=instance.id, instance=instance,
                        trajectories=trajs, returns=returns, advantages=advs)


# ---------------------------------------------------------------------------
# GRPO loss
# ---------------------------------------------------------------------------

def clipped_surrogate(ratio: float, advantage: float, eps: float) -> float:
    """Per-step pessimistic surrogate: min(rA, clip(r, 1-eps, 1+eps) A)."""
    clipped = min(max(ratio, 1.0 - eps), 1.0 + eps)
    return min(ratio * advantage, clipped * advantage)


def grpo_loss(trajectories: list, params: PolicyParams, cfg: TrainConfig,
              temperature: float):
    """Clipped per-step surrogate with entropy bonus over valid steps only.

    Trajectories are replayed against the current parameters to obtain
    fresh log-probabilities; variable lengths are handled by flattening, so
    no padding token ever enters a mean.  Returns (loss tensor, stats).
    """
    surrogates = []
    entropies = []
    reward_cfg = RewardConfig()
    for traj in trajectories:
        graph = traj.instance.graph
        embeddings, graph_embedding = encode_instance(traj.instance, params)
        state, mask = reset(traj.instance)
        for k, action in enumerate(traj.actions):
            logits = decode_step(embeddings, graph_embedding, state, graph, params, mask)
            logp_vec = masked_log_policy(logits, mask, temperature, params.dims.clip_c)
            # Entropy over allowed actions only; forbidden entries carry
            # -inf log-probabilities that would poison gradients through 0*inf.
            allowed = torch.as_tensor(np.flatnonzero(mask))
            lp_allowed = logp_vec[allowed]
            entropies.append(-torch.sum(torch.exp(lp_allowed) * lp_allowed))
            ratio = torch.exp(logp_vec[action] - float(traj.old_logps[k]))
            if not bool(torch.isfinite(ratio)):
                raise FloatingPointError("non-finite importance ratio; aborting epoch")
            adv = traj.advantage
            clipped = torch.clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps)
            surrogates.append(torch.minimum(ratio * adv, clipped * adv))
            state, out = step(state, action, graph, reward_cfg)
            mask = out.mask_next
    surr = torch.stack(surrogates)
    ent = torch.stack(entropies)
    loss = -surr.mean() - cfg.entropy_beta * ent.mean()
    stats = {"surrogate": surr.mean().item(), "entropy": ent.mean().item(),
             "steps": len(surrogates)}
    return loss, stats


# ---------------------------------------------------------------------------
# Optimizer
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    m: dict
    v: dict
    step: int = 0

    @classmethod
    def init(cls, params: PolicyParams) -> "AdamState":
        return cls(m={n: torch.zeros_like(t) for n, t in params.tensors.items()},
                   v={n: torch.zeros_like(t) for n, t in params.tensors.items()})


def clip_global_norm(params: PolicyParams, cap: float) -> float:
    """Scale all gradients by cap/norm when the global norm exceeds cap."""
    total = 0.0
    for t in params.tensors.values():
        if t.grad is not None:
            total += float((t.grad ** 2).sum())
    norm = math.sqrt(total)
    if norm > cap and norm > 0:
        scale = cap / norm
        with torch.no_grad():
            for t in params.tensors.values():
                if t.grad is not None:
                    t.grad.mul_(scale)
    return norm


def adam_step(params: PolicyParams, state: AdamState, lr: float,
              cfg: TrainConfig) -> None:
    state.step += 1
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    bias1 = 1.0 - b1 ** state.step
    bias2 = 1.0 - b2 ** state.step
    with torch.no_grad():
        for name, t in params.tensors.items():
            if t.grad is None:
                continue
            g = t.grad
            state.m[name].mul_(b1).add_(g, alpha=1.0 - b1)
            state.v[name].mul_(b2).addcmul_(g, g, value=1.0 - b2)
            m_hat = state.m[name] / bias1
            v_hat = state.v[name] / bias2
            t.addcdiv_(m_hat, v_hat.sqrt() + cfg.adam_eps, value=-lr)


# ---------------------------------------------------------------------------
# Geometric augmentation
# ---------------------------------------------------------------------------

def _axial_rot60(q: int, r: int):
    return -r, q + r


def _axial_mirror(q: int, r: int):
    return q + r, -r


def augment(instance: AOIInstance, rng: np.random.Generator = None,
            element=None) -> AOIInstance:
    """Apply a random element of the hex grid's dihedral symmetry group.

    Rotations by multiples of 60 degrees about the lattice origin, with an
    optional reflection across the row axis first.  Node indices,
    adjacency, base wiring, and the audit status are untouched; coordinates
    and axial labels transform consistently so the result is the same graph
    embedded differently.
    """
    if element is None:
        k = int(rng.integers(0, 6))
        mirror = bool(rng.integers(0, 2))
    else:
        k, mirror = int(element[0]) % 6, bool(element[1])
    g = instance.graph
    rh = g.rs_nm
    theta = g.frame_angle
    c, s = math.cos(theta), math.sin(theta)
    u = np.array([c, s])
    v = np.array([-s, c])
    q0, r0 = g.axial[0]
    origin = g.coords_nm[0] - (math.sqrt(3.0) * rh * (q0 + 0.5 * r0) * u
                               + 1.5 * rh * r0 * v)

    def world(points: np.ndarray) -> np.ndarray:
        rel = points - origin
        local = np.stack([rel @ u, rel @ v], axis=-1)
        if mirror:
            local[..., 1] = -local[..., 1]
        ang = k * math.pi / 3.0
        ca, sa = math.cos(ang), math.sin(ang)
        rot = np.stack([local[..., 0] * ca - local[..., 1] * sa,
                        local[..., 0] * sa + local[..., 1] * ca], axis=-1)
        return origin + rot[..., 0:1] * u + rot[..., 1:2] * v

    axial = []
    for q, r in g.axial:
        if mirror:
            q, r = _axial_mirror(q, r)
        for _ in range(k):
            q, r = _axial_rot60(q, r)
        axial.append((q, r))

    graph = AOIGraph(
        n_cells=g.n_cells,
        coords_nm=world(g.coords_nm),
        axial=axial,
        adjacency=[list(a) for a in g.adjacency],
        base=g.base,
        terminal=g.terminal,
        cell_spacing=g.cell_spacing,
        rs_nm=g.rs_nm,
        frame_angle=g.frame_angle,
        hexscore=g.hexscore.copy(),
    )
    polygon = replace(instance.polygon, outer=world(instance.polygon.outer),
                      holes=[world(h) for h in instance.polygon.holes])
    return replace(instance, graph=graph, polygon=polygon)


# ---------------------------------------------------------------------------
# Epoch loop
# ---------------------------------------------------------------------------

def _chunks(seq, size):
    for k in range(0, len(seq), size):
        yield seq[k:k + size]


def train_epoch(instances: list, params: PolicyParams, cfg: TrainConfig,
                epoch: int, adam_state: AdamState,
                reward_cfg: RewardConfig = RewardConfig()) -> dict:
    """One pass over the training split: collect grouped rollouts per batch,
    freeze them, then run K clipped-surrogate epochs over minibatches."""
    rng = np.random.default_rng([cfg.seed, epoch])
    gen = torch.Generator(device="cpu").manual_seed(cfg.seed * 1_000_003 + epoch)
    temperature = temperature_schedule(epoch, cfg)
    lr = lr_schedule(epoch, cfg)

    order = rng.permutation(len(instances))
    completed = 0
    total_rollouts = 0
    returns_sum = 0.0
    entropy_last = 0.0
    for batch_idx in _chunks(list(order), cfg.batch_instances):
        groups = []
        for i in batch_idx:
            inst = instances[int(i)]
            if rng.uniform() < cfg.p_aug:
                inst = augment(inst, rng)
            group = collect_group(inst, params, temperature,
                                  cfg.rollouts_per_instance, gen,
                                  reward_cfg, cfg.adv_eps)
            groups.append(group)
            completed += sum(1 for t in group.trajectories
                             if t.outcome == OUTCOME_COMPLETED)
            total_rollouts += len(group.trajectories)
            returns_sum += float(group.returns.sum())
        trajs = [t for g in groups for t in g.trajectories]
        for _ in range(cfg.inner_epochs):
            perm = rng.permutation(len(trajs))
            for mb in _chunks(list(perm), cfg.minibatch_traj):
                batch = [trajs[int(j)] for j in mb]
                loss, stats = grpo_loss(batch, params, cfg, temperature)
                params.zero_grad()
                loss.backward()
                clip_global_norm(params, cfg.grad_norm_cap)
                adam_step(params, adam_state, lr, cfg)
                entropy_last = stats["entropy"]
        for t in params.tensors.values():
            if not bool(torch.isfinite(t).all()):
                raise FloatingPointError("non-finite parameters after update")
    return {
        "epoch": epoch,
        "train_sr": completed / max(total_rollouts, 1),
        "mean_return": returns_sum / max(total_rollouts, 1),
        "entropy": entropy_last,
        "lr": lr,
        "temperature": temperature,
    }


def greedy_success_rate(instances: list, params: PolicyParams) -> float:
    from .inference import greedy
    solved = sum(1 for inst in instances if greedy(inst, params).hamiltonian)
    return solved / max(len(instances), 1)


@dataclass
class TrainerState:
    """Everything needed to resume training bit-exactly after a checkpoint."""

    epoch_next: int
    adam: AdamState
    best_val_sr: float
    best_epoch: int
    since_best: int
    best_flat: np.ndarray


@dataclass
class TrainResult:
    params: PolicyParams        # loaded with the best-validation weights
    final_flat: np.ndarray      # weights at the last executed epoch
    state: TrainerState
    best_epoch: int
    best_val_sr: float
    log: list
    stopped_early: bool


def train(train_split: list, val_split: list, params: PolicyParams,
          cfg: TrainConfig, max_epochs: int = None, on_epoch=None,
          state: TrainerState = None) -> TrainResult:
    """Full training loop with greedy-decoding validation and early stopping.

    Validation monitors greedy success rate exclusively; the checkpoint with
    the best validation score is the one retained.  Training halts when
    validation fails to improve for `cfg.patience` consecutive epochs.
    Passing a TrainerState resumes from its next epoch with the same
    statelessly-derived per-epoch randomness, so a split run matches an
    uninterrupted one bit for bit.
    """
    if state is None:
        state = TrainerState(epoch_next=0, adam=AdamState.init(params),
                             best_val_sr=-1.0, best_epoch=-1, since_best=0,
                             best_flat=params.flat())
    epochs = cfg.max_epochs if max_epochs is None else max_epochs
    log = []
    stopped_early = False
    for epoch in range(state.epoch_next, epochs):
        stats = train_epoch(train_split, params, cfg, epoch, state.adam)
        val_sr = greedy_success_rate(val_split, params) if val_split else 0.0
        stats["val_sr"] = val_sr
        log.append(stats)
        if on_epoch is not None:
            on_epoch(stats)
        state.epoch_next = epoch + 1
        if val_sr > state.best_val_sr:
            state.best_val_sr = val_sr
            state.best_epoch = epoch
            state.since_best = 0
            state.best_flat = params.flat()
        else:
            state.since_best += 1
            if state.since_best >= cfg.patience:
                stopped_early = True
                break
    final_flat = params.flat()
    params.load_flat(state.best_flat)
    return TrainResult(params=params, final_flat=final_flat, state=state,
                       best_epoch=state.best_epoch, best_val_sr=state.best_val_sr,
                       log=log, stopped_early=stopped_early)


def save_trainer_state(state: TrainerState, params_final_flat: np.ndarray,
                       path) -> None:
    """Binary sidecar enabling bit-exact resumes: header + flat arrays."""
    import json as _json
    m_flat = torch.cat([t.reshape(-1) for t in state.adam.m.values()]).numpy()
    v_flat = torch.cat([t.reshape(-1) for t in state.adam.v.values()]).numpy()
    header = {
        "format_version": "1",
        "epoch_next": state.epoch_next,
        "adam_step": state.adam.step,
        "best_val_sr": state.best_val_sr,
        "best_epoch": state.best_epoch,
        "since_best": state.since_best,
        "n_params": int(params_final_flat.size),
    }
    with open(path, "wb") as fh:
        fh.write(_json.dumps(header).encode("utf-8"))
        fh.write(b"\n")
        for arr in (params_final_flat, m_flat, v_flat, state.best_flat):
            fh.write(np.asarray(arr, dtype="<f8").tobytes())


def load_trainer_state(path, params: PolicyParams) -> TrainerState:
    """Restore the sidecar; loads the final weights into `params`."""
    import json as _json
    with open(path, "rb") as fh:
        header = _json.loads(fh.readline().decode("utf-8"))
        blob = np.frombuffer(fh.read(), dtype="<f8")
    n = header["n_params"]
    if blob.size != 4 * n:
        raise ValueError("trainer state payload size mismatch")
    params.load_flat(blob[:n])
    adam = AdamState.init(params)
    adam.step = header["adam_step"]
    pos = n
    for store in (adam.m, adam.v):
        for name, t in store.items():
            k = t.numel()
            with torch.no_grad():
                t.copy_(torch.from_numpy(blob[pos:pos + k].reshape(t.shape).copy()))
            pos += k
    return TrainerState(
        epoch_next=header["epoch_next"], adam=adam,
        best_val_sr=header["best_val_sr"], best_epoch=header["best_epoch"],
        since_best=header["since_best"], best_flat=blob[pos:pos + n].copy(),
    )
