"""Policy-search update rules over the clipped linear output map.

Six learners share one data model: episodes of (basis, action, clip-mask,
reward) records collected under either parameter-space exploration (a single
Gaussian perturbation of the weight matrix per episode) or action-space
exploration (per-step Gaussian noise on the commands).

* ``pg_update`` / ``ppo_update`` — likelihood-ratio methods over action noise.
* ``pgpe_update`` / ``pibb_update`` — parameter-space search (score ascent /
  reward-weighted averaging).
* ``agol_update`` — parameter-space score ascent where each parameter's
  contribution is gated by the magnitude of the action gradient, so weights
  whose basis never fired (or whose output was saturated) receive no update;
  ``agol_sigma_update`` adapts the per-parameter exploration rates the same
  way. The batch-scheduled variant of this learner is conventionally labeled
  ``agl`` by the experiment layer; the update rule is identical.

All updates are pure functions (inputs -> new arrays); nothing here mutates
shared state, so independent repetitions can run concurrently.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    DataError,
    ExplorationModeError,
    InsufficientDataError,
)
from .sme import ALPHA_MAX

PARAMETER = "parameter"
ACTION = "action"

SIGMA_MIN = 1e-3
SIGMA_MAX = 1.0
ADV_EPS = 1e-8

# action-space exploration noise: ~17% of the actuator limit, visible but
# bounded jitter
DEFAULT_SIGMA_ACTION = 0.05


# ---------------------------------------------------------------------------
# data model
# ---------------------------------------------------------------------------

@dataclass
class StepRecord:
    """One timestep of collected experience."""

    basis: np.ndarray          # basis activations b[t], shape (n_basis,)
    action: np.ndarray         # commanded (exploring) action, shape (n_out,)
    clipped_mask: np.ndarray   # True where the output clip saturated
    reward: float

    def __post_init__(self):
        if not np.isfinite(self.reward):
            raise DataError(f"non-finite reward {self.reward!r} in step record")


@dataclass
class Episode:
    """One episode of experience plus its exploration bookkeeping.

    ``perturbation`` holds theta_tilde - theta and ``sigma`` the exploration
    rates in effect when the episode was collected (parameter mode only;
    both None in action mode).
    """

    basis: np.ndarray                    # (T, n_basis)
    actions: np.ndarray                  # (T, n_out)
    clipped: np.ndarray                  # (T, n_out) bool
    rewards: np.ndarray                  # (T,)
    mode: str = PARAMETER
    perturbation: np.ndarray | None = None
    sigma: np.ndarray | None = None

    def __post_init__(self):
        if self.mode not in (PARAMETER, ACTION):
            raise ConfigError(f"unknown exploration mode {self.mode!r}")
        if self.mode == PARAMETER and (
            self.perturbation is None or self.sigma is None
        ):
            raise ConfigError(
                "parameter-mode episodes must carry perturbation and sigma"
            )
        if not (
            len(self.basis) == len(self.actions) == len(self.clipped)
            == len(self.rewards)
        ):
            raise DataError("episode arrays have mismatched lengths")
        if not np.all(np.isfinite(self.rewards)):
            raise DataError("episode has non-finite rewards")

    @classmethod
    def from_steps(
        cls,
        steps: list[StepRecord],
        mode: str = PARAMETER,
        perturbation: np.ndarray | None = None,
        sigma: np.ndarray | None = None,
    ) -> "Episode":
        return cls(
            basis=np.array([s.basis for s in steps], dtype=float),
            actions=np.array([s.action for s in steps], dtype=float),
            clipped=np.array([s.clipped_mask for s in steps], dtype=bool),
            rewards=np.array([s.reward for s in steps], dtype=float),
            mode=mode,
            perturbation=perturbation,
            sigma=sigma,
        )

    def __len__(self) -> int:
        return len(self.rewards)


@dataclass
class EpisodeBatch:
    """FIFO window of recent episodes (default capacity 8)."""

    window: int = 8
    episodes: list[Episode] = field(default_factory=list)

    def add(self, episode: Episode) -> None:
        self.episodes.append(episode)
        while len(self.episodes) > self.window:
            self.episodes.pop(0)

    def clear(self) -> None:
        self.episodes.clear()

    def __len__(self) -> int:
        return len(self.episodes)


@dataclass
class BaselineMap:
    """Linear state-value baseline over the basis activations."""

    weights: np.ndarray  # (n_basis,)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or not np.all(np.isfinite(w)):
            raise ConfigError("baseline weights must be a finite vector")
        object.__setattr__(self, "weights", w)

    def predict(self, basis: np.ndarray) -> np.ndarray:
        return np.asarray(basis, dtype=float) @ self.weights


def _require_mode(batch: EpisodeBatch, mode: str, op: str) -> None:
    for ep in batch.episodes:
        if ep.mode != mode:
            raise ExplorationModeError(
                f"{op} needs a batch collected under {mode}-space exploration,"
                f" got an episode in {ep.mode} mode"
            )


# ---------------------------------------------------------------------------
# returns, advantages, baseline
# ---------------------------------------------------------------------------

def returns(rewards: np.ndarray) -> np.ndarray:
    """Suffix sums: the return at t is the total reward from t onward."""
    r = np.asarray(rewards, dtype=float)
    if r.ndim != 1 or len(r) < 1:
        raise DataError("returns need a non-empty reward vector")
    return np.cumsum(r[::-1])[::-1]


def advantage_sim(batch: EpisodeBatch) -> np.ndarray:
    """Across-episode standardization of returns at each fixed timestep.

    Returns an (episodes, T) matrix: A[e, t] = (R[e, t] - mean_e) /
    (population std_e + 1e-8). Needs at least two episodes of equal length.
    """
    eps = batch.episodes
    if len(eps) < 2:
        raise InsufficientDataError(
            "across-episode advantages need >= 2 episodes in the batch"
        )
    lengths = {len(ep) for ep in eps}
    if len(lengths) != 1:
        raise DataError(f"episodes have unequal lengths: {sorted(lengths)}")
    ret = np.stack([returns(ep.rewards) for ep in eps])   # (E, T)
    mu = ret.mean(axis=0)
    sd = ret.std(axis=0)                                  # population std
    return (ret - mu) / (sd + ADV_EPS)


def advantage_warmup(episode: Episode) -> np.ndarray:
    """Degenerate-window advantage for the very first online episode:
    returns centered within the episode, not normalized."""
    ret = returns(episode.rewards)
    return ret - ret.mean()


def advantage_real(episode: Episode, baseline: BaselineMap) -> np.ndarray:
    """Baseline-residual advantage, scaled by the residual RMS over the
    trajectory: A_t = (R_t - v(b_t)) / (RMS(R - v) + 1e-8)."""
    ret = returns(episode.rewards)
    resid = ret - baseline.predict(episode.basis)
    rms = float(np.sqrt(np.mean(resid**2)))
    return resid / (rms + ADV_EPS)


def baseline_update(
    episode: Episode, baseline: BaselineMap, lr: float = 0.05
) -> BaselineMap:
    """One gradient-descent step on the mean squared residual."""
    if not lr > 0:
        raise ConfigError(f"baseline learning rate must be positive, got {lr}")
    ret = returns(episode.rewards)
    resid = ret - baseline.predict(episode.basis)
    grad = (2.0 / len(ret)) * (resid @ episode.basis)
    return BaselineMap(baseline.weights + lr * grad)


def baseline_residuals(
    batch: EpisodeBatch, baseline: BaselineMap
) -> list[np.ndarray]:
    """Per-episode return residuals against the learned baseline:
    returns(rewards) - v(basis), one vector per episode in the batch."""
    if len(batch) < 1:
        raise InsufficientDataError("residuals need at least one episode")
    return [
        returns(ep.rewards) - baseline.predict(ep.basis)
        for ep in batch.episodes
    ]


def advantage_continual(
    batch: EpisodeBatch, baseline: BaselineMap
) -> np.ndarray:
    """Buffer-wide RMS-normalized baseline residuals for the no-reset
    protocol.

    The rolling buffer is one continuing trajectory cut into fixed-length
    windows; normalizing every residual by the root-mean-square over the
    WHOLE buffer (rather than per episode) keeps windows comparable to each
    other, which is what lets the learner prefer better windows.  Requires
    equal-length episodes; returns an (episodes, T) matrix.
    """
    lengths = {len(ep) for ep in batch.episodes}
    if len(lengths) > 1:
        raise DataError(f"episodes have unequal lengths: {sorted(lengths)}")
    resids = baseline_residuals(batch, baseline)
    flat = np.concatenate(resids)
    rms = float(np.sqrt(np.mean(flat**2)))
    return np.stack(resids) / (rms + ADV_EPS)


# ---------------------------------------------------------------------------
# exploration
# ---------------------------------------------------------------------------

def explore_parameters(
    theta: np.ndarray, sigma: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """One Gaussian parameter draw, used for a whole episode."""
    if not np.all(sigma > 0):
        raise ConfigError("exploration rates must be positive")
    return theta + sigma * rng.standard_normal(theta.shape)


def explore_actions(
    action: np.ndarray, sigma_action: float, rng: np.random.Generator
) -> np.ndarray:
    """Per-step Gaussian action noise."""
    return action + sigma_action * rng.standard_normal(action.shape)


def action_gradient_weight(record: StepRecord) -> np.ndarray:
    """|d action_j / d theta_jk| for the clipped linear map: |b_k| where
    output j is unsaturated, 0 where the clip absorbed the gradient."""
    open_rows = (~np.asarray(record.clipped_mask, dtype=bool)).astype(float)
    return np.outer(open_rows, np.abs(np.asarray(record.basis, dtype=float)))


def _episode_grad_weight_sum(
    episode: Episode, advantages: np.ndarray, action_gradient: bool
) -> np.ndarray:
    """sum_t A_t * W_grad(t), shape (n_out, n_basis)."""
    T = len(episode)
    if action_gradient:
        open_rows = (~episode.clipped).astype(float)        # (T, n_out)
        mags = np.abs(episode.basis)                        # (T, n_basis)
    else:
        open_rows = np.ones(episode.clipped.shape)
        mags = np.ones(episode.basis.shape)
    return np.einsum("t,tj,tk->jk", advantages[:T], open_rows, mags)


def _param_space_theta_update(
    batch: EpisodeBatch,
    theta: np.ndarray,
    advantages: np.ndarray,
    lr: float,
    action_gradient: bool,
) -> np.ndarray:
    delta = np.zeros_like(theta)
    for ep, adv in zip(batch.episodes, advantages):
        w = _episode_grad_weight_sum(ep, adv, action_gradient)
        delta += w * ep.perturbation / ep.sigma**2
    return theta + lr * delta


def agol_update(
    batch: EpisodeBatch,
    theta: np.ndarray,
    sigma: np.ndarray,
    advantages: np.ndarray,
    lr_theta: float,
) -> np.ndarray:
    """Gradient-gated parameter-space update."""
    _require_mode(batch, PARAMETER, "agol_update")
    return _param_space_theta_update(
        batch, theta, advantages, lr_theta, action_gradient=True
    )


def pgpe_update(
    batch: EpisodeBatch,
    theta: np.ndarray,
    sigma: np.ndarray,
    advantages: np.ndarray,
    lr: float,
) -> np.ndarray:
    """Plain parameter-space score ascent (gate constant at one)."""
    _require_mode(batch, PARAMETER, "pgpe_update")
    return _param_space_theta_update(
        batch, theta, advantages, lr, action_gradient=False
    )


def agol_sigma_update(
    batch: EpisodeBatch,
    theta: np.ndarray,
    sigma: np.ndarray,
    advantages: np.ndarray,
    lr_sigma: float,
) -> np.ndarray:
    """Adapt per-parameter exploration rates, clamped to [1e-3, 1.0]."""
    _require_mode(batch, PARAMETER, "agol_sigma_update")
    delta = np.zeros_like(sigma)
    for ep, adv in zip(batch.episodes, advantages):
        w = _episode_grad_weight_sum(ep, adv, action_gradient=True)
        delta += w * (ep.perturbation**2 - ep.sigma**2) / ep.sigma**3
    return np.clip(sigma + lr_sigma * delta, SIGMA_MIN, SIGMA_MAX)


def pibb_update(
    batch: EpisodeBatch, theta: np.ndarray, episode_returns: np.ndarray, h: float = 10.0
) -> np.ndarray:
    """Reward-weighted averaging of the explored parameter draws.

    Episode weights are exponentiated min-max-normalized total returns with
    temperature ``h``; the new parameters are the weighted mean of the
    explored theta_tilde values (shift-invariant in the returns).
    """
    _require_mode(batch, PARAMETER, "pibb_update")
    if len(batch) < 2:
        raise InsufficientDataError("pibb needs >= 2 episodes to rank")
    r = np.asarray(episode_returns, dtype=float)
    if r.shape != (len(batch),):
        raise DataError(
            f"need one return per episode: got {r.shape}, {len(batch)} episodes"
        )
    r_max, r_min = float(np.max(r)), float(np.min(r))
    s = np.exp(h * (r - r_max) / (r_max - r_min + ADV_EPS))
    s = s / np.sum(s)
    new_theta = np.zeros_like(theta)
    for weight, ep in zip(s, batch.episodes):
        new_theta += weight * (theta + ep.perturbation)
    return new_theta


def _clip_open_rows(
    theta: np.ndarray, basis: np.ndarray, alpha_max: float
) -> tuple[np.ndarray, np.ndarray]:
    """Pre-clip activations and the not-saturated mask at the CURRENT theta."""
    pre = basis @ theta.T                                   # (T, n_out)
    return np.clip(pre, -alpha_max, alpha_max), np.abs(pre) < alpha_max


def pg_update(
    batch: EpisodeBatch,
    theta: np.ndarray,
    sigma_action: float,
    advantages: np.ndarray,
    lr: float,
    alpha_max: float = ALPHA_MAX,
) -> np.ndarray:
    """Likelihood-ratio ascent over Gaussian action noise.

    The score of the recorded action under the current policy is computed
    analytically through the clipped linear map: rows whose pre-clip output
    saturates contribute nothing.
    """
    _require_mode(batch, ACTION, "pg_update")
    delta = np.zeros_like(theta)
    for ep, adv in zip(batch.episodes, advantages):
        a, open_rows = _clip_open_rows(theta, ep.basis, alpha_max)
        score = (ep.actions - a) / sigma_action**2          # (T, n_out)
        weighted = adv[: len(ep), None] * score * open_rows
        delta += np.einsum("tj,tk->jk", weighted, ep.basis)
    return theta + lr * delta


def _joint_logp(
    theta: np.ndarray,
    episode: Episode,
    sigma_action: float,
    alpha_max: float,
) -> np.ndarray:
    """Per-timestep Gaussian log-likelihood of the recorded actions (up to
    the additive constant, which cancels in likelihood ratios)."""
    a, _ = _clip_open_rows(theta, episode.basis, alpha_max)
    return -0.5 * np.sum(((episode.actions - a) / sigma_action) ** 2, axis=1)


def ppo_update(
    batch: EpisodeBatch,
    theta: np.ndarray,
    sigma_action: float,
    advantages: np.ndarray,
    lr: float,
    clip_ratio: float = 0.2,
    epochs: int = 4,
    alpha_max: float = ALPHA_MAX,
) -> np.ndarray:
    """Clipped-surrogate ascent: ``epochs`` full-batch gradient steps on
    sum_episodes sum_t min(rho_t A_t, clip(rho_t) A_t), with rho_t the
    per-timestep likelihood ratio against the policy at entry."""
    _require_mode(batch, ACTION, "ppo_update")
    old_logp = [
        _joint_logp(theta, ep, sigma_action, alpha_max) for ep in batch.episodes
    ]
    for _ in range(epochs):
        grad = np.zeros_like(theta)
        for ep, adv, logp0 in zip(batch.episodes, advantages, old_logp):
            a, open_rows = _clip_open_rows(theta, ep.basis, alpha_max)
            logp = -0.5 * np.sum(((ep.actions - a) / sigma_action) ** 2, axis=1)
            rho = np.exp(logp - logp0)                      # (T,)
            adv_t = adv[: len(ep)]
            unclipped_term = rho * adv_t
            clipped_term = np.clip(rho, 1 - clip_ratio, 1 + clip_ratio) * adv_t
            active = unclipped_term <= clipped_term          # min() branch
            score = (ep.actions - a) / sigma_action**2
            weighted = (active * rho * adv_t)[:, None] * score * open_rows
            grad += np.einsum("tj,tk->jk", weighted, ep.basis)
        theta = theta + lr * grad
    return theta


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

def _format_matrix(name: str, arr: np.ndarray) -> str:
    arr = np.atleast_2d(np.asarray(arr, dtype=float))
    lines = [f"{name} {arr.shape[0]} {arr.shape[1]}"]
    for row in arr:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    return "\n".join(lines)


def save_checkpoint(
    path,
    theta: np.ndarray,
    sigma: np.ndarray,
    baseline: BaselineMap,
    episode: int,
) -> None:
    """Plain-text checkpoint: one 'name rows cols' header per matrix followed
    by whitespace-separated rows at 17 significant digits, then the episode
    counter. Round-trips exactly for doubles."""
    parts = [
        _format_matrix("theta", theta),
        _format_matrix("sigma", sigma),
        _format_matrix("baseline", baseline.weights),
        f"episode {int(episode)}",
    ]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")


def load_checkpoint(path) -> tuple[np.ndarray, np.ndarray, BaselineMap, int]:
    with open(path) as fh:
        tokens = fh.read().split("\n")
    mats: dict[str, np.ndarray] = {}
    episode = None
    i = 0
    try:
        while i < len(tokens):
            line = tokens[i].strip()
            i += 1
            if not line:
                continue
            head = line.split()
            if head[0] == "episode":
                episode = int(head[1])
                continue
            name, rows, cols = head[0], int(head[1]), int(head[2])
            data = []
            for _ in range(rows):
                data.append([float(v) for v in tokens[i].split()])
                i += 1
            arr = np.array(data, dtype=float)
            if arr.shape != (rows, cols):
                raise DataError(
                    f"checkpoint matrix {name!r} has shape {arr.shape}, "
                    f"header says ({rows}, {cols})"
                )
            mats[name] = arr
    except (ValueError, IndexError) as exc:
        raise DataError(f"malformed checkpoint file {path}: {exc}") from exc
    for required in ("theta", "sigma", "baseline"):
        if required not in mats:
            raise DataError(f"checkpoint file {path} is missing {required!r}")
    if episode is None:
        raise DataError(f"checkpoint file {path} is missing the episode counter")
    return (
        mats["theta"],
        mats["sigma"],
        BaselineMap(mats["baseline"][0]),
        episode,
    )
