"""
Central finite-difference verification of analytic loss gradients.

Relative error per logit is ``|a - n| / max(|a|, |n|)``; when both
magnitudes are below 1e-8 the absolute difference is used instead.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
from typing import Any

import numpy as np

from .losses import dpo_loss, dss_loss, grpo_objective, sft_loss
from .policy import Group, HyperParams, LossValue, ToyPolicy, Trajectory

LossFn = Callable[[ToyPolicy], LossValue]

GRADCHECK_OPS = ("sft", "dpo", "grpo", "dss")
DEFAULT_STEP = 1e-5
DEFAULT_TOL = 1e-4
ABS_FALLBACK = 1e-8


@dataclass
class GradCheckReport:
    op: str
    max_rel_err: float
    worst_index: tuple[int, int] | None
    passed: bool
    message: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "op": self.op,
            "max_rel_err": self.max_rel_err,
            "worst_index": list(self.worst_index) if self.worst_index is not None else None,
            "pass": self.passed,
        }


def finite_diff_gradcheck(
    loss_fn: LossFn,
    policy: ToyPolicy,
    h: float = DEFAULT_STEP,
    tol: float = DEFAULT_TOL,
    *,
    op: str = "loss",
) -> GradCheckReport:
    """Compare ``loss_fn(policy).gradient`` with central differences on every logit."""
    if h <= 0:
        raise ValueError(f"step h must be positive, got {h}")

    base = loss_fn(policy)
    if not np.isfinite(base.value):
        return GradCheckReport(op, float("inf"), None, False, "non-finite loss at base point")
    analytic = np.asarray(base.gradient, dtype=np.float64).ravel()
    if analytic.size != policy.num_params:
        raise ValueError(f"gradient has {analytic.size} entries, policy has {policy.num_params}")

    flat = policy.logits.ravel().copy()
    worst_err, worst_flat = 0.0, 0
    for k in range(flat.size):
        bumped = flat.copy()
        bumped[k] = flat[k] + h
        plus = loss_fn(policy.with_flat(bumped)).value
        bumped[k] = flat[k] - h
        minus = loss_fn(policy.with_flat(bumped)).value
        location = _unravel(policy, k)
        if not (np.isfinite(plus) and np.isfinite(minus)):
            return GradCheckReport(
                op, float("inf"), location, False, f"non-finite loss perturbing logit {location}"
            )

        numeric = (plus - minus) / (2.0 * h)
        scale = max(abs(analytic[k]), abs(numeric))
        diff = abs(analytic[k] - numeric)
        err = diff if scale < ABS_FALLBACK else diff / scale
        if err > worst_err:
            worst_err, worst_flat = err, k

    passed = worst_err <= tol
    location = _unravel(policy, worst_flat)
    message = "" if passed else f"gradient mismatch at logit {location}: rel err {worst_err:.3e}"
    return GradCheckReport(op, float(worst_err), location, passed, message)


def _unravel(policy: ToyPolicy, k: int) -> tuple[int, int]:
    c, v = np.unravel_index(k, policy.logits.shape)
    return int(c), int(v)


# ---------------------------------------------------------------------------
# Random problems for the sweep
# ---------------------------------------------------------------------------


@dataclass
class LossProblem:
    op: str
    policy: ToyPolicy
    loss_fn: LossFn


def random_trajectory(
    rng: np.random.Generator, contexts: int, vocab: int, max_len: int = 4
) -> Trajectory:
    n = int(rng.integers(1, max_len + 1))
    return Trajectory(
        context_ids=tuple(rng.integers(contexts, size=n).tolist()),
        token_ids=tuple(rng.integers(vocab, size=n).tolist()),
        reward=float(rng.normal()),
    )


def make_loss_problem(
    op: str,
    rng: np.random.Generator,
    vocab: int,
    contexts: int,
    beta: float = 0.1,
) -> LossProblem:
    """Random policy plus a batch wired into the named loss."""
    if op not in GRADCHECK_OPS:
        raise ValueError(f"unknown op '{op}' (expected one of {', '.join(GRADCHECK_OPS)})")
    policy = ToyPolicy.random(rng, contexts, vocab)

    def batch(n: int) -> list[Trajectory]:
        return [random_trajectory(rng, contexts, vocab) for _ in range(n)]

    loss_fn: LossFn
    if op == "sft":
        data = batch(3)
        loss_fn = lambda p: sft_loss(p, data)  # noqa: E731
    elif op == "dpo":
        ref = ToyPolicy.random(rng, contexts, vocab)
        chosen = random_trajectory(rng, contexts, vocab)
        rejected = random_trajectory(rng, contexts, vocab)
        while rejected.same_tokens(chosen):
            rejected = random_trajectory(rng, contexts, vocab)
        loss_fn = lambda p: dpo_loss(p, ref, chosen, rejected, beta)  # noqa: E731
    elif op == "grpo":
        # old policy close to the current one keeps ratios away from the clip kinks
        old = ToyPolicy(policy.logits + rng.normal(0.0, 0.02, size=policy.logits.shape))
        ref = ToyPolicy.random(rng, contexts, vocab)
        groups = [Group(batch(3)).scored() for _ in range(2)]
        hp = HyperParams(beta=beta)
        loss_fn = lambda p: grpo_objective(p, old, ref, groups, hp)  # noqa: E731
    else:
        paths, rationales = batch(2), batch(3)
        loss_fn = lambda p: dss_loss(p, paths, rationales)  # noqa: E731
    return LossProblem(op=op, policy=policy, loss_fn=loss_fn)
