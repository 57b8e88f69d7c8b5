"""
Toy categorical sequence policy and the records the objectives consume.

A policy is a ``[contexts, vocab]`` logit matrix. Step t of a trajectory
emits ``token_ids[t]`` from the softmax of row ``context_ids[t]``; the
sequence log-probability is the sum over steps.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from ..io.tensor_store import TensorBundle

LOGITS_TENSOR = "logits"
ADVANTAGE_EPS = 1e-8


@dataclass
class ToyPolicy:
    logits: np.ndarray

    def __post_init__(self) -> None:
        self.logits = np.array(self.logits, dtype=np.float64)
        if self.logits.ndim != 2 or 0 in self.logits.shape:
            raise ValueError(f"logits must be a non-empty 2-D matrix, got {self.logits.shape}")

    @classmethod
    def uniform(cls, contexts: int, vocab_size: int) -> ToyPolicy:
        return cls(np.zeros((contexts, vocab_size)))

    @classmethod
    def random(
        cls, rng: np.random.Generator, contexts: int, vocab_size: int, scale: float = 1.0
    ) -> ToyPolicy:
        return cls(rng.normal(0.0, scale, size=(contexts, vocab_size)))

    @property
    def contexts(self) -> int:
        return int(self.logits.shape[0])

    @property
    def vocab_size(self) -> int:
        return int(self.logits.shape[1])

    @property
    def num_params(self) -> int:
        return self.logits.size

    def log_probs(self) -> np.ndarray:
        """Row-wise log-softmax."""
        shifted = self.logits - self.logits.max(axis=1, keepdims=True)
        return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))

    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs())

    def token_log_probs(self, traj: Trajectory) -> np.ndarray:
        return self.log_probs()[list(traj.context_ids), list(traj.token_ids)]

    def log_prob(self, traj: Trajectory) -> float:
        return float(np.sum(self.token_log_probs(traj)))

    def token_grad(self, context: int, token: int, probs: np.ndarray | None = None) -> np.ndarray:
        """d log π(token | context) / d logits, as a ``[contexts, vocab]`` matrix."""
        p = self.probs() if probs is None else probs
        grad = np.zeros_like(self.logits)
        grad[context] -= p[context]
        grad[context, token] += 1.0
        return grad

    def grad_log_prob(self, traj: Trajectory) -> np.ndarray:
        p = self.probs()
        grad = np.zeros_like(self.logits)
        for c, y in zip(traj.context_ids, traj.token_ids, strict=True):
            grad[c] -= p[c]
            grad[c, y] += 1.0
        return grad

    def with_flat(self, flat: np.ndarray) -> ToyPolicy:
        return ToyPolicy(np.asarray(flat, dtype=np.float64).reshape(self.logits.shape))

    def to_bundle(self) -> TensorBundle:
        return TensorBundle(
            tensors={LOGITS_TENSOR: self.logits},
            metadata={"contexts": str(self.contexts), "vocab_size": str(self.vocab_size)},
        )

    @classmethod
    def from_bundle(cls, bundle: TensorBundle) -> ToyPolicy:
        return cls(bundle[LOGITS_TENSOR])


@dataclass(frozen=True)
class Trajectory:
    context_ids: tuple[int, ...]
    token_ids: tuple[int, ...]
    reward: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "context_ids", tuple(int(c) for c in self.context_ids))
        object.__setattr__(self, "token_ids", tuple(int(t) for t in self.token_ids))
        if not self.token_ids:
            raise ValueError("trajectory must have at least one step")
        if len(self.context_ids) != len(self.token_ids):
            raise ValueError("context_ids and token_ids differ in length")

    def __len__(self) -> int:
        return len(self.token_ids)

    def check(self, policy: ToyPolicy) -> None:
        if not all(0 <= c < policy.contexts for c in self.context_ids):
            raise ValueError(f"context index out of range for {policy.contexts} contexts")
        if not all(0 <= t < policy.vocab_size for t in self.token_ids):
            raise ValueError(f"token index out of range for vocab {policy.vocab_size}")

    def same_tokens(self, other: Trajectory) -> bool:
        return self.context_ids == other.context_ids and self.token_ids == other.token_ids


@dataclass
class Group:
    """G sampled completions of one prompt with their advantages."""

    trajectories: list[Trajectory]
    advantages: list[float] | None = None

    @property
    def size(self) -> int:
        return len(self.trajectories)

    def scored(self) -> Group:
        """Copy with advantages computed from the trajectories' rewards."""
        rewards: list[float] = []
        for traj in self.trajectories:
            if traj.reward is None:
                raise ValueError("every trajectory needs a reward to compute advantages")
            rewards.append(float(traj.reward))
        return Group(list(self.trajectories), group_advantages(rewards))


@dataclass
class LossValue:
    value: float
    gradient: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class HyperParams:
    beta: float = 0.1
    epsilon: float = 0.2
    alpha_path: float = 0.5
    alpha_rationale: float = 0.5

    def __post_init__(self) -> None:
        if self.beta < 0:
            raise ValueError(f"beta must be non-negative, got {self.beta}")
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if self.alpha_path < 0 or self.alpha_rationale < 0:
            raise ValueError("mixture weights must be non-negative")
        if abs(self.alpha_path + self.alpha_rationale - 1.0) > 1e-12:
            raise ValueError("alpha_path and alpha_rationale must sum to 1")


def group_advantages(rewards: Sequence[float]) -> list[float]:
    """(r - mean) / max(std, 1e-8) with the population std."""
    if len(rewards) < 2:
        raise ValueError(f"a group needs at least 2 rewards, got {len(rewards)}")
    r = np.asarray(rewards, dtype=np.float64)
    std = max(float(r.std()), ADVANTAGE_EPS)
    return ((r - r.mean()) / std).tolist()
