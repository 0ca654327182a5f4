"""Group-relative policy optimization numerics as pure functions.

Covers advantage normalization within a rollout group, the clipped surrogate
objective, and the nonnegative KL approximation, over plain reward and
probability arrays. No gradients, rollouts, or model code live here; the
functions exist for external trainers and desk-scale verification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import fmean, pstdev, stdev

_DEGENERATE_STD = 1e-12


class GrpoError(ValueError):
    pass


def normalize_advantages(
    rewards: list[float], sample_std: bool = False
) -> list[float]:
    """Normalize a rollout group's rewards to zero mean and unit deviation.

    Uses the population standard deviation by default (``sample_std=True``
    switches to the n-1 estimator). A zero-variance group yields all-zero
    advantages rather than dividing by zero.
    """
    if len(rewards) < 2:
        raise GrpoError(f"need at least 2 rewards, got {len(rewards)}")
    for value in rewards:
        if not math.isfinite(value):
            raise GrpoError(f"non-finite reward {value!r}")
    mean = fmean(rewards)
    std = stdev(rewards) if sample_std else pstdev(rewards)
    if std < _DEGENERATE_STD:
        return [0.0] * len(rewards)
    return [(r - mean) / std for r in rewards]


def kl_approx(p_theta: float, p_ref: float, log_domain: bool = False) -> float:
    """Nonnegative estimator of KL(policy || reference) from a probability pair.

    Evaluates x - log(x) - 1 with x = p_ref / p_theta, which is zero exactly
    when the probabilities agree. With ``log_domain=True`` the inputs are
    log-probabilities and the ratio is formed in log space to avoid underflow.
    """
    if log_domain:
        log_x = p_ref - p_theta
        return math.exp(log_x) - log_x - 1.0
    if p_theta <= 0.0 or p_ref <= 0.0:
        raise GrpoError("probabilities must be strictly positive")
    x = p_ref / p_theta
    return x - math.log(x) - 1.0


@dataclass(frozen=True)
class PolicyEvalBatch:
    """Per-sample probability triples with advantages and objective knobs.

    ``kl_coefficient`` is the KL penalty scale (kept distinct from the reward
    combination's beta weight). With ``log_domain=True`` the probability
    fields hold log-probabilities (<= 0) instead of probabilities in (0, 1].
    """

    p_theta: tuple[float, ...]
    p_old: tuple[float, ...]
    p_ref: tuple[float, ...]
    advantages: tuple[float, ...]
    clip_epsilon: float = 0.2
    kl_coefficient: float = 0.0
    log_domain: bool = field(default=False)

    def __post_init__(self) -> None:
        lengths = {
            len(self.p_theta),
            len(self.p_old),
            len(self.p_ref),
            len(self.advantages),
        }
        if lengths != {len(self.p_theta)} or len(self.p_theta) == 0:
            raise GrpoError("probability and advantage lists must share a non-zero length")
        if not (0.0 < self.clip_epsilon < 1.0):
            raise GrpoError(f"clip_epsilon must be in (0, 1), got {self.clip_epsilon!r}")
        if not math.isfinite(self.kl_coefficient) or self.kl_coefficient < 0:
            raise GrpoError("kl_coefficient must be finite and >= 0")
        for probs in (self.p_theta, self.p_old, self.p_ref):
            for p in probs:
                if not math.isfinite(p):
                    raise GrpoError(f"non-finite probability {p!r}")
                if self.log_domain:
                    if p > 0.0:
                        raise GrpoError(f"log-probability {p!r} exceeds 0")
                elif not (0.0 < p <= 1.0):
                    raise GrpoError(f"probability {p!r} outside (0, 1]")
        for a in self.advantages:
            if not math.isfinite(a):
                raise GrpoError(f"non-finite advantage {a!r}")

    def __len__(self) -> int:
        return len(self.p_theta)


def _clip(value: float, low: float, high: float) -> float:
    return min(max(value, low), high)


def grpo_objective(batch: PolicyEvalBatch) -> float:
    """Mean clipped surrogate minus the scaled mean KL approximation.

    Per sample the surrogate is min(ratio * A, clip(ratio, 1-eps, 1+eps) * A)
    with ratio = p_theta / p_old; the KL term compares p_theta against p_ref.
    """
    group = len(batch)
    surrogate = 0.0
    kl_total = 0.0
    for i in range(group):
        if batch.log_domain:
            ratio = math.exp(batch.p_theta[i] - batch.p_old[i])
        else:
            ratio = batch.p_theta[i] / batch.p_old[i]
        advantage = batch.advantages[i]
        clipped = _clip(ratio, 1.0 - batch.clip_epsilon, 1.0 + batch.clip_epsilon)
        surrogate += min(ratio * advantage, clipped * advantage)
        kl_total += kl_approx(batch.p_theta[i], batch.p_ref[i], batch.log_domain)
    return surrogate / group - batch.kl_coefficient * (kl_total / group)
