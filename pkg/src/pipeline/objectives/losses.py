"""
Training objectives over a ToyPolicy, each returning a minimization loss and
its analytic gradient with respect to the policy logits.

- ``sft_loss``:   negative log-likelihood of labeled trajectories
- ``dpo_loss``:   -log σ(β·margin) on policy/reference log-ratios
- ``grpo_objective``: clipped-ratio surrogate minus β·k3 KL, negated
- ``dss_loss``:   convex mixture of path and rationale SFT losses

Reference and old policies are frozen; gradients flow only into ``policy``.
Sums run in index-ascending order.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from ..eval.metrics import normalize_answer
from .policy import Group, HyperParams, LossValue, ToyPolicy, Trajectory, group_advantages

__all__ = [
    "clipped_surrogate",
    "dpo_loss",
    "dss_loss",
    "exact_kl",
    "group_advantages",
    "grpo_objective",
    "k3_estimator",
    "rm_r1_reward",
    "rule_reward",
    "sft_loss",
]


def sft_loss(policy: ToyPolicy, batch: Sequence[Trajectory], *, mean: bool = False) -> LossValue:
    """-Σ log π(y | x) over the batch; ``mean`` divides by the batch size."""
    if not batch:
        raise ValueError("sft_loss needs a non-empty batch")
    value = 0.0
    grad = np.zeros_like(policy.logits)
    for traj in batch:
        traj.check(policy)
        value -= policy.log_prob(traj)
        grad -= policy.grad_log_prob(traj)
    if mean:
        value /= len(batch)
        grad /= len(batch)
    return LossValue(value + 0.0, grad.ravel())


def dpo_loss(
    policy: ToyPolicy,
    ref_policy: ToyPolicy,
    chosen: Trajectory,
    rejected: Trajectory,
    beta: float,
) -> LossValue:
    """Standard DPO on one preference pair.

    margin = β[(log πθ(y_w) - log π_ref(y_w)) - (log πθ(y_l) - log π_ref(y_l))]
    """
    if beta < 0:
        raise ValueError(f"beta must be non-negative, got {beta}")
    if chosen.same_tokens(rejected):
        raise ValueError("chosen and rejected trajectories are identical")
    for traj in (chosen, rejected):
        traj.check(policy)
        traj.check(ref_policy)

    log_ratio_w = policy.log_prob(chosen) - ref_policy.log_prob(chosen)
    log_ratio_l = policy.log_prob(rejected) - ref_policy.log_prob(rejected)
    margin = beta * (log_ratio_w - log_ratio_l)

    value = float(np.logaddexp(0.0, -margin))
    # d/dm of -log σ(m) is -σ(-m)
    weight = -float(np.exp(-np.logaddexp(0.0, margin))) * beta
    grad = weight * (policy.grad_log_prob(chosen) - policy.grad_log_prob(rejected))
    return LossValue(value, grad.ravel() + 0.0)


def clipped_surrogate(
    ratio: np.ndarray | float, advantage: np.ndarray | float, epsilon: float
) -> np.ndarray:
    """min(r·A, clip(r, 1-ε, 1+ε)·A), elementwise."""
    ratio = np.asarray(ratio, dtype=np.float64)
    advantage = np.asarray(advantage, dtype=np.float64)
    return np.minimum(ratio * advantage, np.clip(ratio, 1 - epsilon, 1 + epsilon) * advantage)


def k3_estimator(logp_theta: np.ndarray | float, logp_ref: np.ndarray | float) -> np.ndarray:
    """ρ - log ρ - 1 with ρ = π_ref/π_θ; non-negative, zero iff the two agree."""
    d = np.asarray(logp_ref, dtype=np.float64) - np.asarray(logp_theta, dtype=np.float64)
    return np.expm1(d) - d


def exact_kl(policy: ToyPolicy, ref_policy: ToyPolicy) -> np.ndarray:
    """KL(π_θ ‖ π_ref) of every context row."""
    lp, lq = policy.log_probs(), ref_policy.log_probs()
    return np.sum(np.exp(lp) * (lp - lq), axis=1)


def grpo_objective(
    policy: ToyPolicy,
    old_policy: ToyPolicy,
    ref_policy: ToyPolicy,
    groups: Sequence[Group],
    hp: HyperParams,
) -> LossValue:
    """Negated GRPO objective.

    J = mean_groups (1/G) Σ_i (1/|o_i|) Σ_t [clipped surrogate - β·k3].
    Groups without advantages are scored from their trajectories' rewards.
    """
    if not groups:
        raise ValueError("grpo_objective needs at least one group")

    lp_theta_all = policy.log_probs()
    lp_old_all = old_policy.log_probs()
    lp_ref_all = ref_policy.log_probs()
    probs = np.exp(lp_theta_all)

    objective = 0.0
    grad = np.zeros_like(policy.logits)
    for group in groups:
        if group.size < 2:
            raise ValueError(f"each group needs at least 2 trajectories, got {group.size}")
        if group.advantages is None:
            group = group.scored()
        advantages = group.advantages or []

        group_obj = 0.0
        group_grad = np.zeros_like(policy.logits)
        for traj, adv in zip(group.trajectories, advantages, strict=True):
            traj.check(policy)
            traj_obj = 0.0
            traj_grad = np.zeros_like(policy.logits)
            for c, y in zip(traj.context_ids, traj.token_ids, strict=True):
                lp_theta = lp_theta_all[c, y]
                ratio = float(np.exp(lp_theta - lp_old_all[c, y]))
                clipped = float(np.clip(ratio, 1 - hp.epsilon, 1 + hp.epsilon))
                rho = float(np.exp(lp_ref_all[c, y] - lp_theta))

                traj_obj += float(clipped_surrogate(ratio, adv, hp.epsilon))
                traj_obj -= hp.beta * float(k3_estimator(lp_theta, lp_ref_all[c, y]))

                g = policy.token_grad(c, y, probs)
                # unclipped branch is the active one of the min()
                if ratio * adv <= clipped * adv:
                    traj_grad += adv * ratio * g
                traj_grad -= hp.beta * (1.0 - rho) * g
            group_obj += traj_obj / len(traj)
            group_grad += traj_grad / len(traj)
        objective += group_obj / group.size
        grad += group_grad / group.size

    objective /= len(groups)
    grad /= len(groups)
    return LossValue(-objective + 0.0, -grad.ravel() + 0.0)


def rule_reward(prediction: str, gold: str) -> int:
    """1 for the correct label, else 0."""
    return int(normalize_answer(prediction) == normalize_answer(gold))


def rm_r1_reward(predicted_label: str, gold_label: str) -> int:
    """+1 for the correct label, else -1."""
    return 1 if normalize_answer(predicted_label) == normalize_answer(gold_label) else -1


def dss_loss(
    policy: ToyPolicy,
    path_batch: Sequence[Trajectory],
    rationale_batch: Sequence[Trajectory],
    hp: HyperParams = HyperParams(),
    *,
    mean: bool = False,
) -> LossValue:
    """α_path·SFT(path) + α_rationale·SFT(rationale)."""
    path = sft_loss(policy, path_batch, mean=mean)
    rationale = sft_loss(policy, rationale_batch, mean=mean)
    return LossValue(
        hp.alpha_path * path.value + hp.alpha_rationale * rationale.value,
        hp.alpha_path * path.gradient + hp.alpha_rationale * rationale.gradient,
    )
