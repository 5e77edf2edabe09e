"""Dense pixel-level group-relative policy objectives on a toy flow policy.

The toy policy generates an image by a T-step reverse-time Gaussian walk:
x_T ~ N(0, I) and x_{t-1}(h,w) ~ N(x_t(h,w) + mu(t,h,w), sigma^2), with the
drift grid mu as the only learned parameters. The per-pixel likelihood of a
step factorizes exactly, which is what the pixel-level surrogate needs.

Two objectives are implemented, both returning (value, analytic gradient):

* flow_grpo_objective: image-level clipped surrogate over the per-step
  likelihood ratio, with an optional closed-form Gaussian KL penalty against
  a reference policy. Its value is a plain function of the policy, so
  central finite differences on the value check the gradient directly.

* denseflow_objective: pixel-level surrogate. The per-pixel factor
  s(h,w) = detach(r) * p(h,w) / detach(p(h,w)) is numerically equal to the
  full step ratio r at the evaluation point, but its parameter sensitivity
  flows only through the local pixel's log-likelihood. Finite-difference
  checks must therefore difference `denseflow_objective_at`, which evaluates
  the surrogate at one policy while the detached factors stay pinned to
  another (the linearization point).

Clip-branch selection always uses the numeric surrogate value; at the clip
boundary the unclipped branch carries the (sub)gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .grpo import DEFAULT_SIGMA_FLOOR, group_advantages


class ToyFlowPolicy:
    """Gaussian drift policy with parameter grid mu of shape (T, H, W)."""

    __slots__ = ("mu", "sigma")

    def __init__(self, mu, sigma: float):
        arr = np.array(mu, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[0] < 1:
            raise ValueError(f"mu must have shape (T, H, W) with T >= 1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("mu must be finite")
        if not (math.isfinite(sigma) and sigma > 0.0):
            raise ValueError(f"sigma must be positive, got {sigma!r}")
        arr.flags.writeable = False
        self.mu = arr
        self.sigma = float(sigma)

    @classmethod
    def zeros(cls, num_steps: int, height: int, width: int, sigma: float) -> "ToyFlowPolicy":
        return cls(np.zeros((num_steps, height, width)), sigma)

    @property
    def num_steps(self) -> int:
        return self.mu.shape[0]

    @property
    def height(self) -> int:
        return self.mu.shape[1]

    @property
    def width(self) -> int:
        return self.mu.shape[2]

    def with_mu(self, mu) -> "ToyFlowPolicy":
        return ToyFlowPolicy(mu, self.sigma)

    @property
    def mean_map(self) -> np.ndarray:
        """Noise-free rollout mean of x_0 (sum of drifts; E[x_T] = 0)."""
        return self.mu.sum(axis=0)

    def step_log_density(self, states: np.ndarray) -> np.ndarray:
        """Per-step per-pixel Gaussian log-density of a (T+1, H, W) trajectory."""
        if states.shape != (self.num_steps + 1, self.height, self.width):
            raise ValueError(
                f"states shape {states.shape} does not match policy "
                f"({self.num_steps + 1}, {self.height}, {self.width})"
            )
        residual = states[1:] - states[:-1] - self.mu
        return -0.5 * (residual / self.sigma) ** 2 - math.log(
            self.sigma * math.sqrt(2.0 * math.pi)
        )

    def score_residuals(self, states: np.ndarray) -> np.ndarray:
        """d log p / d mu per step and pixel: (x_next - x_prev - mu) / sigma^2."""
        residual = states[1:] - states[:-1] - self.mu
        return residual / (self.sigma**2)


@dataclass
class Trajectory:
    """Reverse-time state sequence with per-step per-pixel log-likelihoods
    under the policy that generated it."""

    states: np.ndarray      # (T+1, H, W); states[0] is the initial noise
    condition: str
    log_probs: np.ndarray   # (T, H, W)

    @property
    def x0(self) -> np.ndarray:
        return self.states[-1]


@dataclass(frozen=True)
class DenseRewardField:
    """Image-level reward plus a per-pixel reward grid for one sample."""

    image_reward: float
    pixel_rewards: np.ndarray  # (H, W)

    def dense(self) -> np.ndarray:
        return self.image_reward + self.pixel_rewards


def sample_group(
    policy: ToyFlowPolicy, condition: str, group_size: int, seed: int
) -> list[Trajectory]:
    """Sample a group of trajectories; deterministic for a given seed."""
    if group_size < 2:
        raise ValueError(f"group_size must be >= 2, got {group_size}")
    rng = np.random.default_rng(seed)
    shape = (policy.height, policy.width)
    trajectories = []
    for _ in range(group_size):
        states = np.empty((policy.num_steps + 1, *shape))
        states[0] = rng.standard_normal(shape)
        for k in range(policy.num_steps):
            noise = rng.standard_normal(shape) * policy.sigma
            states[k + 1] = states[k] + policy.mu[k] + noise
        states.flags.writeable = False
        trajectories.append(
            Trajectory(states=states, condition=condition, log_probs=policy.step_log_density(states))
        )
    return trajectories


def image_ratio(
    policy_new: ToyFlowPolicy, policy_old: ToyFlowPolicy, traj: Trajectory, step: int
) -> float:
    """Step likelihood ratio: the product of per-pixel density ratios."""
    diff = policy_new.step_log_density(traj.states)[step] - policy_old.step_log_density(
        traj.states
    )[step]
    value = float(np.exp(np.sum(diff)))
    if not math.isfinite(value) or value <= 0.0:
        raise ValueError(f"non-finite likelihood ratio at step {step}")
    return value


def surrogate_grid(
    policy_eval: ToyFlowPolicy,
    policy_frozen: ToyFlowPolicy,
    policy_old: ToyFlowPolicy,
    traj: Trajectory,
    step: int,
) -> np.ndarray:
    """Pixel surrogate evaluated at policy_eval with detached factors pinned
    to policy_frozen: s(h,w) = r_frozen * p_eval(h,w) / p_frozen(h,w).

    At policy_eval == policy_frozen every entry equals the step ratio.
    """
    l_eval = policy_eval.step_log_density(traj.states)[step]
    l_frozen = policy_frozen.step_log_density(traj.states)[step]
    l_old = policy_old.step_log_density(traj.states)[step]
    r_frozen = np.exp(np.sum(l_frozen - l_old))
    return r_frozen * np.exp(l_eval - l_frozen)


def pixel_surrogate_value(
    policy_new: ToyFlowPolicy, policy_old: ToyFlowPolicy, traj: Trajectory, step: int
) -> np.ndarray:
    """The (H, W) surrogate grid at the current policy; numerically every
    entry equals image_ratio for the same step."""
    return surrogate_grid(policy_new, policy_new, policy_old, traj, step)


def dense_advantages(
    fields: Sequence[DenseRewardField], sigma_floor: float = DEFAULT_SIGMA_FLOOR
) -> np.ndarray:
    """Per-pixel group normalization of the dense rewards, shape (G, H, W).

    Pixels whose dense reward is identical across the whole group get an
    advantage of exactly zero (matching group_advantages elementwise).
    """
    if len(fields) < 2:
        raise ValueError(f"dense_advantages requires a group of >= 2, got {len(fields)}")
    dense = np.stack([f.dense() for f in fields])
    if dense.ndim != 3:
        raise ValueError("pixel reward grids must be 2-D")
    if not np.all(np.isfinite(dense)):
        raise ValueError("dense rewards must be finite")
    centered = dense - dense.mean(axis=0)
    std = np.sqrt(np.mean(centered**2, axis=0))
    adv = centered / np.maximum(std, sigma_floor)
    adv[:, dense.max(axis=0) == dense.min(axis=0)] = 0.0
    return adv


def _check_group(policy: ToyFlowPolicy, trajs: Sequence[Trajectory], epsilon: float):
    if not trajs:
        raise ValueError("need at least one trajectory")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    expected = (policy.num_steps + 1, policy.height, policy.width)
    for traj in trajs:
        if traj.states.shape != expected:
            raise ValueError(
                f"trajectory shape {traj.states.shape} does not match policy {expected}"
            )


def denseflow_objective_at(
    policy_eval: ToyFlowPolicy,
    policy_frozen: ToyFlowPolicy,
    policy_old: ToyFlowPolicy,
    trajs: Sequence[Trajectory],
    advantage_grids: np.ndarray,
    epsilon: float,
) -> float:
    """Dense objective value with detached factors pinned to policy_frozen.

    This is the two-point form used by finite-difference gradient checks;
    the reported objective value is the diagonal policy_eval == policy_frozen.
    """
    _check_group(policy_eval, trajs, epsilon)
    group_size = len(trajs)
    num_steps, height, width = policy_eval.mu.shape
    total = 0.0
    for traj, adv in zip(trajs, advantage_grids):
        l_eval = policy_eval.step_log_density(traj.states)
        l_frozen = policy_frozen.step_log_density(traj.states)
        l_old = policy_old.step_log_density(traj.states)
        r_frozen = np.exp((l_frozen - l_old).sum(axis=(1, 2)))  # (T,)
        s = r_frozen[:, None, None] * np.exp(l_eval - l_frozen)
        unclipped = s * adv[None, :, :]
        clipped = np.clip(s, 1.0 - epsilon, 1.0 + epsilon) * adv[None, :, :]
        total += float(np.sum(np.minimum(unclipped, clipped)))
    return total / (group_size * num_steps * height * width)


def denseflow_objective(
    policy_new: ToyFlowPolicy,
    policy_old: ToyFlowPolicy,
    trajs: Sequence[Trajectory],
    advantage_grids: np.ndarray,
    epsilon: float,
) -> tuple[float, np.ndarray]:
    """Dense pixel-level clipped objective and its analytic gradient in mu.

    The gradient applies the detach semantics: each pixel's term moves the
    policy only through that pixel's log-likelihood, scaled by the numeric
    step ratio.
    """
    _check_group(policy_new, trajs, epsilon)
    if len(advantage_grids) != len(trajs):
        raise ValueError("one advantage grid per trajectory required")
    group_size = len(trajs)
    num_steps, height, width = policy_new.mu.shape
    total = 0.0
    grad = np.zeros_like(policy_new.mu)
    for traj, adv in zip(trajs, advantage_grids):
        l_new = policy_new.step_log_density(traj.states)
        l_old = policy_old.step_log_density(traj.states)
        ratios = np.exp((l_new - l_old).sum(axis=(1, 2)))  # (T,), s is constant per step
        if not np.all(np.isfinite(ratios)):
            raise ValueError("non-finite likelihood ratio")
        s = ratios[:, None, None]
        unclipped = s * adv[None, :, :]
        clipped = np.clip(s, 1.0 - epsilon, 1.0 + epsilon) * adv[None, :, :]
        total += float(np.sum(np.minimum(unclipped, clipped)))
        select_unclipped = unclipped <= clipped
        coef = np.where(select_unclipped, s * adv[None, :, :], 0.0)
        grad += coef * policy_new.score_residuals(traj.states)
    scale = group_size * num_steps * height * width
    grad /= scale
    if not np.all(np.isfinite(grad)):
        raise ValueError("non-finite gradient")
    return total / scale, grad


def gaussian_step_kl(policy_new: ToyFlowPolicy, policy_ref: ToyFlowPolicy) -> np.ndarray:
    """Closed-form per-step KL between the step kernels, averaged over pixels."""
    if policy_new.mu.shape != policy_ref.mu.shape:
        raise ValueError("policy parameter shapes differ")
    sn, sr = policy_new.sigma, policy_ref.sigma
    diff = policy_new.mu - policy_ref.mu
    kl = math.log(sr / sn) + (sn**2 + diff**2) / (2.0 * sr**2) - 0.5
    return kl.mean(axis=(1, 2))


def kl_penalty(policy_new: ToyFlowPolicy, policy_ref: ToyFlowPolicy) -> tuple[float, np.ndarray]:
    """Mean-over-steps KL penalty value and its gradient in mu."""
    num_steps, height, width = policy_new.mu.shape
    value = float(gaussian_step_kl(policy_new, policy_ref).mean())
    grad = (policy_new.mu - policy_ref.mu) / (
        policy_ref.sigma**2 * num_steps * height * width
    )
    return value, grad


def flow_grpo_objective(
    policy_new: ToyFlowPolicy,
    policy_old: ToyFlowPolicy,
    trajs: Sequence[Trajectory],
    image_advantages: Sequence[float],
    epsilon: float,
    beta: float = 0.0,
    ref_policy: ToyFlowPolicy | None = None,
) -> tuple[float, np.ndarray]:
    """Image-level clipped objective (optionally KL-regularized) and gradient."""
    _check_group(policy_new, trajs, epsilon)
    advantages = np.asarray(image_advantages, dtype=np.float64)
    if advantages.shape != (len(trajs),):
        raise ValueError("one image advantage per trajectory required")
    if beta != 0.0 and ref_policy is None:
        raise ValueError("beta != 0 requires a reference policy")
    group_size = len(trajs)
    num_steps = policy_new.num_steps
    total = 0.0
    grad = np.zeros_like(policy_new.mu)
    for traj, advantage in zip(trajs, advantages):
        l_new = policy_new.step_log_density(traj.states)
        l_old = policy_old.step_log_density(traj.states)
        ratios = np.exp((l_new - l_old).sum(axis=(1, 2)))  # (T,)
        if not np.all(np.isfinite(ratios)):
            raise ValueError("non-finite likelihood ratio")
        unclipped = ratios * advantage
        clipped = np.clip(ratios, 1.0 - epsilon, 1.0 + epsilon) * advantage
        total += float(np.sum(np.minimum(unclipped, clipped)))
        select_unclipped = unclipped <= clipped
        coef = np.where(select_unclipped, ratios * advantage, 0.0)
        grad += coef[:, None, None] * policy_new.score_residuals(traj.states)
    value = total / (group_size * num_steps)
    grad /= group_size * num_steps
    if beta != 0.0:
        kl_value, kl_grad = kl_penalty(policy_new, ref_policy)
        value -= beta * kl_value
        grad -= beta * kl_grad
    if not np.all(np.isfinite(grad)):
        raise ValueError("non-finite gradient")
    return value, grad


def flow_grpo_value(
    policy_new: ToyFlowPolicy,
    policy_old: ToyFlowPolicy,
    trajs: Sequence[Trajectory],
    image_advantages: Sequence[float],
    epsilon: float,
    beta: float = 0.0,
    ref_policy: ToyFlowPolicy | None = None,
) -> float:
    """Value of the image-level objective (a plain function of policy_new,
    so finite differences apply to it directly)."""
    return flow_grpo_objective(
        policy_new, policy_old, trajs, image_advantages, epsilon, beta, ref_policy
    )[0]


@dataclass(frozen=True)
class RewardField:
    """Target pattern selected by a condition identifier.

    The image-level reward tracks the global mean intensity of the target;
    the pixel-level reward tracks per-pixel closeness inside the mask.
    """

    name: str
    target: np.ndarray  # (H, W)
    mask: np.ndarray    # (H, W) in {0, 1}

    @property
    def target_mean(self) -> float:
        return float(self.target.mean())

    def image_reward(self, x0: np.ndarray) -> float:
        return 1.0 - abs(float(x0.mean()) - self.target_mean)

    def pixel_rewards(self, x0: np.ndarray) -> np.ndarray:
        return (1.0 - np.abs(x0 - self.target)) * self.mask

    def evaluate(self, x0: np.ndarray) -> DenseRewardField:
        return DenseRewardField(self.image_reward(x0), self.pixel_rewards(x0))

    @property
    def region(self) -> np.ndarray:
        """Pixels reported by region_mse: the mask, or everything if no mask."""
        if self.mask.any():
            return self.mask > 0.0
        return np.ones_like(self.mask, dtype=bool)

    def region_mse(self, grid: np.ndarray) -> float:
        diff = (grid - self.target)[self.region]
        return float(np.mean(diff * diff))


CONDITIONS = ("region", "uniform")


def reward_field_for(condition: str, height: int, width: int) -> RewardField:
    """Build the reward field a condition identifier selects.

    "region": low background with a bright centered block covering about a
    quarter of the grid; the block is the masked detail region.
    "uniform": flat 0.8 target with no masked region (pixel rewards vanish).
    """
    if condition == "region":
        target = np.full((height, width), 0.1)
        mask = np.zeros((height, width))
        h0, w0 = height // 4, width // 4
        h1, w1 = h0 + height // 2, w0 + width // 2
        target[h0:h1, w0:w1] = 0.9
        mask[h0:h1, w0:w1] = 1.0
        return RewardField("region", target, mask)
    if condition == "uniform":
        return RewardField(
            "uniform", np.full((height, width), 0.8), np.zeros((height, width))
        )
    raise ValueError(f"unknown condition {condition!r} (expected one of {CONDITIONS})")


@dataclass
class TrainConfig:
    width: int = 16
    height: int = 16
    num_steps: int = 2          # T, reverse-time steps
    group_size: int = 8         # G, trajectories per iteration
    iterations: int = 300       # K, optimizer steps
    learning_rate: float = 8.0
    epsilon: float = 0.2
    sigma: float = 0.4
    sigma_floor: float = DEFAULT_SIGMA_FLOOR
    seed: int = 0
    condition: str = "region"
    mode: str = "dense"         # "dense" or "image_only"
    kl_beta: float = 0.0        # optional image-level KL pull toward the start

    def validate(self):
        if self.mode not in ("dense", "image_only"):
            raise ValueError(f"mode must be 'dense' or 'image_only', got {self.mode!r}")
        if self.width < 1 or self.height < 1 or self.num_steps < 1:
            raise ValueError("grid dimensions and num_steps must be positive")
        if self.group_size < 2:
            raise ValueError("group_size must be >= 2")
        if self.iterations < 0:
            raise ValueError("iterations must be nonnegative")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.sigma <= 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.kl_beta < 0.0:
            raise ValueError("kl_beta must be nonnegative")


@dataclass
class TrainResult:
    curve: list[dict] = field(default_factory=list)
    final_policy: ToyFlowPolicy | None = None
    region_mse: float = math.nan
    condition: str = ""
    mode: str = ""

    @property
    def final_mean_map(self) -> np.ndarray:
        return self.final_policy.mean_map


def train_toy(config: TrainConfig) -> TrainResult:
    """Train the toy policy by on-policy gradient ascent on the chosen
    objective, one step per sampled group; deterministic per seed.

    The two objectives normalize by G*T and G*T*H*W respectively, so their
    gradients differ by a factor of H*W even when the pixel rewards vanish.
    image_only mode therefore scales the learning rate by 1/(H*W), making a
    given learning_rate produce comparable parameter steps in both modes.

    region_mse is measured on the policy's noise-free mean rollout, which
    isolates the learned structure from the unit initial-state noise.
    """
    config.validate()
    reward_field = reward_field_for(config.condition, config.height, config.width)
    policy = ToyFlowPolicy.zeros(config.num_steps, config.height, config.width, config.sigma)
    initial_policy = policy
    rng = np.random.default_rng(config.seed)
    learning_rate = config.learning_rate
    if config.mode == "image_only":
        learning_rate /= config.height * config.width
    curve = []
    for iteration in range(config.iterations):
        step_seed = int(rng.integers(0, 2**63 - 1))
        try:
            trajs = sample_group(policy, config.condition, config.group_size, step_seed)
            fields = [reward_field.evaluate(traj.x0) for traj in trajs]
            if config.mode == "dense":
                advantages = dense_advantages(fields, config.sigma_floor)
                value, grad = denseflow_objective(
                    policy, policy, trajs, advantages, config.epsilon
                )
                if config.kl_beta > 0.0:
                    kl_value, kl_grad = kl_penalty(policy, initial_policy)
                    value -= config.kl_beta * kl_value
                    grad = grad - config.kl_beta * kl_grad
            else:
                image_adv = group_advantages(
                    [f.image_reward for f in fields], config.sigma_floor
                )
                value, grad = flow_grpo_objective(
                    policy,
                    policy,
                    trajs,
                    image_adv,
                    config.epsilon,
                    beta=config.kl_beta,
                    ref_policy=initial_policy if config.kl_beta > 0.0 else None,
                )
        except ValueError as exc:
            # a valid config only hits this when the numerics blew up
            raise RuntimeError(
                f"training diverged at iteration {iteration}: {exc} "
                f"(lr={config.learning_rate}, sigma={config.sigma})"
            ) from exc
        mu = policy.mu + learning_rate * grad
        if not np.all(np.isfinite(mu)):
            raise RuntimeError(
                f"training diverged at iteration {iteration}: non-finite parameters "
                f"(lr={config.learning_rate}, sigma={config.sigma})"
            )
        policy = policy.with_mu(mu)
        curve.append(
            {
                "iteration": iteration,
                "objective": value,
                "mean_image_reward": float(np.mean([f.image_reward for f in fields])),
                "mean_intensity": float(np.mean([traj.x0.mean() for traj in trajs])),
                "region_mse": reward_field.region_mse(policy.mean_map),
            }
        )
    return TrainResult(
        curve=curve,
        final_policy=policy,
        region_mse=reward_field.region_mse(policy.mean_map),
        condition=config.condition,
        mode=config.mode,
    )
