"""Controller and learning analysis: activation-interference metrics,
trace period measurement, reward-landscape scans and figure/CSV exports."""
from __future__ import annotations

import numpy as np

from . import learners as ln
from .errors import ConfigError, DataError, InsufficientDataError


# Co-activation fraction measured on a fully connected end-to-end policy
# network's activity trace in the source experiments.  Kept as a fixed
# documented reference point for comparisons; this package never trains
# such a network.
DENSE_NETWORK_INTERFERENCE_REFERENCE = 0.17


def ring_neighbor_map(n_channels: int) -> dict[int, frozenset[int]]:
    """Neighbor map for channels arranged on a ring (channel order = pose
    order): each channel's neighbors are the two adjacent ring positions."""
    if n_channels < 2:
        raise InsufficientDataError("a ring needs at least 2 channels")
    return {
        i: frozenset({(i - 1) % n_channels, (i + 1) % n_channels}) - {i}
        for i in range(n_channels)
    }


def _cycle_window(a: np.ndarray) -> np.ndarray:
    """Truncate a trace to an integer number of activation cycles.

    Cycle boundaries are detected by recurrence of the initially dominant
    channel in the per-row argmax sequence.  If the dominant channel never
    changes (e.g. constant activations) the whole window already repeats
    trivially and is used as-is.  Otherwise at least two recurrence onsets
    are required so the span between the first and last onset is a verified
    whole number of cycles; traces too short for that raise an
    insufficient-data error.
    """
    am = np.argmax(a, axis=1)
    first = am[0]
    if np.all(am == first):
        return a
    changed = am[1:] != am[:-1]
    onsets = np.nonzero((am[1:] == first) & changed)[0] + 1
    if len(onsets) < 2:
        raise InsufficientDataError(
            "trace does not cover a verifiable whole number of activation "
            "cycles; record at least two full rotations"
        )
    return a[onsets[0] : onsets[-1]]


def interference_fraction(
    activations: np.ndarray,
    neighbor_map: dict[int, frozenset[int]] | None = None,
    threshold_frac: float = 0.01,
) -> float:
    """Fraction of timesteps where any two NON-neighbor channels are
    simultaneously active.

    The trace is first truncated to an integer number of activation cycles
    (see ``_cycle_window``) so partial cycles cannot bias the fraction.  A
    channel counts as active when it exceeds ``threshold_frac`` of its own
    maximum over that window, making the metric invariant to per-channel
    positive rescaling.  ``neighbor_map`` maps each channel index to the
    channel indices considered its neighbors (exempt from the metric); by
    default channels are treated as a ring in order.  The metric applies
    unchanged to triangular bases, radial kernels, or any other activity
    trace.
    """
    a = np.asarray(activations, dtype=float)
    if a.ndim != 2 or a.shape[0] < 2:
        raise InsufficientDataError(
            "interference needs a (timesteps, channels) trace with >= 2 rows"
        )
    n = a.shape[1]
    if neighbor_map is None:
        neighbor_map = ring_neighbor_map(n)
    neighbors = {i: set() for i in range(n)}
    for i, js in neighbor_map.items():
        for j in js:
            if not (0 <= i < n and 0 <= j < n):
                raise InsufficientDataError(
                    f"neighbor map entry ({i}, {j}) outside 0..{n - 1}"
                )
            neighbors[i].add(j)
            neighbors[j].add(i)
    pairs = [
        (i, j)
        for i in range(n)
        for j in range(i + 1, n)
        if j not in neighbors[i]
    ]
    if not pairs:
        # no non-neighbor pairs exist, so the fraction is identically zero
        # for every window; cycle truncation cannot change it.
        return 0.0
    w = _cycle_window(a)
    peaks = w.max(axis=0)
    peaks = np.where(peaks > 0, peaks, 1.0)
    active = w > threshold_frac * peaks[None, :]
    hit = np.zeros(w.shape[0], dtype=bool)
    for i, j in pairs:
        hit |= active[:, i] & active[:, j]
    return float(np.mean(hit))


def activation_period(activations: np.ndarray, warmup: int = 0) -> float:
    """Mean steps per full rotation of the channel-activation pattern.

    Works on any trace where exactly one channel dominates at a time
    (triangular bases, radial kernels, or ring states): measures the mean
    interval between onsets of channel 0 winning the argmax.
    """
    a = np.asarray(activations, dtype=float)[warmup:]
    if a.ndim != 2 or a.shape[0] < 3:
        raise InsufficientDataError("period needs a (timesteps, channels) trace")
    am = np.argmax(a, axis=1)
    onsets = [t for t in range(1, len(am)) if am[t] == 0 and am[t - 1] != 0]
    if len(onsets) < 3:
        raise InsufficientDataError(
            "trace too short (or not cycling) for a period measurement"
        )
    return float(np.mean(np.diff(onsets)))


# ---------------------------------------------------------------------------
# reward landscape along an update direction
# ---------------------------------------------------------------------------

def reward_landscape(
    theta: np.ndarray,
    direction: np.ndarray,
    scales,
    controller: str = "sme",
    geometry=None,
    episode_steps: int = 70,
    reward_mode: str = "sim",
) -> np.ndarray:
    """Episodic reward of the mean policy at ``theta + s * d`` for each step
    scale ``s``, where ``d`` is ``direction`` normalized to unit max-norm.

    Every point is one deterministic, noise-free rollout from a full reset,
    so the scan is a pure function of its inputs; at ``s = 0`` it equals a
    direct evaluation at ``theta`` exactly.  A zero direction yields a flat
    landscape.  Returns an array of (scale, reward) rows.
    """
    from . import experiment as ex

    theta = np.asarray(theta, dtype=float)
    direction = np.asarray(direction, dtype=float)
    if direction.shape != theta.shape:
        raise DataError(
            f"direction shape {direction.shape} != theta shape {theta.shape}"
        )
    scales = np.asarray(scales, dtype=float)
    if scales.ndim != 1 or not np.all(np.isfinite(scales)):
        raise DataError("scales must be a finite 1-D grid")
    peak = np.max(np.abs(direction))
    unit = direction / peak if peak > 0 else np.zeros_like(direction)
    out = np.empty((scales.size, 2))
    for i, s in enumerate(scales):
        reward = ex.evaluate_policy(
            controller,
            theta + s * unit,
            geometry=geometry,
            steps=episode_steps,
            reward_mode=reward_mode,
        )
        out[i] = (s, reward)
    return out


def update_direction(
    batch: ln.EpisodeBatch,
    theta: np.ndarray,
    sigma: np.ndarray,
    learner: str = "agol",
    advantages: np.ndarray | None = None,
) -> np.ndarray:
    """Raw (unit-learning-rate) parameter update each learner would take
    from the same recorded batch; used to compare landscape argmax scales.

    By default the batch is scored with the across-episode standardized
    advantages; pass ``advantages`` to score it differently (e.g. with the
    no-reset protocol's buffer-wide baseline residuals), so both learners'
    directions can be compared on identical inputs.
    """
    adv = ln.advantage_sim(batch) if advantages is None else advantages
    if learner == "agol":
        moved = ln.agol_update(batch, theta, sigma, adv, 1.0)
    elif learner == "pgpe":
        moved = ln.pgpe_update(batch, theta, sigma, adv, 1.0)
    else:
        raise ConfigError(
            f"update directions are defined for agol/pgpe, not {learner!r}"
        )
    return moved - theta


def probe_batch(
    controller: str,
    theta: np.ndarray,
    sigma: np.ndarray,
    seed: int,
    episodes: int = 8,
    steps: int = 70,
) -> ln.EpisodeBatch:
    """Collect a window of parameter-space exploration episodes at fixed
    center parameters (full reset each episode), deterministically.

    Every episode draws its perturbed parameters around the same ``theta``
    from the stream ``default_rng([seed, 0])``, so the recorded batch is a
    pure function of its arguments — the measurement counterpart of a
    learning run's rolling window, for landscape scans at a checkpoint.
    """
    from . import experiment as ex
    from . import sme
    from . import surrogate as sg

    rng = np.random.default_rng([seed, 0])
    geometry = sg.RobotGeometry(n_legs=theta.shape[0] // 3)
    gen = ex.build_basis_generator(controller, geometry.n_joints)
    _, basis = gen.trace(gen.initial_state(), steps)
    batch = ln.EpisodeBatch(window=episodes)
    for _ in range(episodes):
        theta_ep = ln.explore_parameters(theta, sigma, rng)
        world = sg.reset(geometry)
        steps_rec = []
        for t in range(steps):
            pre = theta_ep @ basis[t]
            act = np.clip(pre, -sme.ALPHA_MAX, sme.ALPHA_MAX)
            world, r = sg.env_step(world, act, geometry)
            steps_rec.append(ln.StepRecord(
                basis=basis[t], action=act,
                clipped_mask=np.abs(pre) >= sme.ALPHA_MAX, reward=r,
            ))
        batch.add(ln.Episode.from_steps(
            steps_rec, mode=ln.PARAMETER,
            perturbation=theta_ep - theta, sigma=sigma.copy(),
        ))
    return batch


# ---------------------------------------------------------------------------
# run-artifact exports
# ---------------------------------------------------------------------------

def _trailing_mean(values: np.ndarray, window: int) -> np.ndarray:
    """Moving average over the trailing `window` samples (shorter prefix
    windows early on); window 1 returns the raw series."""
    out = np.empty_like(values, dtype=float)
    for i in range(len(values)):
        out[i] = values[max(0, i - window + 1) : i + 1].mean()
    return out


def export_exploration_trace(record, path, window: int = 10) -> None:
    """CSV of per-episode exploration rates averaged within the two joint
    groups the gait preset drives (swing joints, lift joints), smoothed by
    a trailing moving average.

    ``record`` must come from a run that kept per-episode exploration-rate
    snapshots (``keep_artifacts=True`` on a parameter-space config).
    """
    if getattr(record, "sigma_trace", None) is None:
        raise DataError(
            "run record has no exploration-rate snapshots; "
            "re-run with keep_artifacts=True"
        )
    if window < 1:
        raise ConfigError("window must be at least 1")
    trace = np.asarray(record.sigma_trace, dtype=float)  # (eps, n_out, n_basis)
    swing = trace[:, 0::3, :].mean(axis=(1, 2))
    lift = trace[:, 1::3, :].mean(axis=(1, 2))
    swing_ma = _trailing_mean(swing, window)
    lift_ma = _trailing_mean(lift, window)
    with open(path, "w", newline="\n") as fh:
        fh.write("episode,sigma_swing,sigma_lift\n")
        for ep in range(len(swing_ma)):
            fh.write(
                "%d,%s,%s\n"
                % (ep, "%.9g" % swing_ma[ep], "%.9g" % lift_ma[ep])
            )


def export_explored_joint_trajectories(batch: ln.EpisodeBatch, path) -> None:
    """CSV of every commanded joint value in a recorded batch
    (episode, t, joint, command) for overlay plotting of exploration."""
    with open(path, "w", newline="\n") as fh:
        fh.write("episode,t,joint,command\n")
        for e, ep in enumerate(batch.episodes):
            T, n_out = ep.actions.shape
            for t in range(T):
                for j in range(n_out):
                    fh.write(
                        "%d,%d,%d,%s\n"
                        % (e, t, j, "%.9g" % ep.actions[t, j])
                    )


# ---------------------------------------------------------------------------
# figures (SVG, self-contained)
# ---------------------------------------------------------------------------

def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt


def plot_learning_curve(curve, path, title: str = "learning curve") -> None:
    """Episode vs reward: per-repetition min/max band plus mean and median."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    eps = np.arange(curve.episodes)
    ax.fill_between(
        eps, curve.min_curve(), curve.max_curve(),
        alpha=0.25, linewidth=0, label="min-max over repetitions",
    )
    ax.plot(eps, curve.mean_curve(), label="mean")
    ax.plot(eps, curve.median_curve(), linestyle="--", label="median")
    ax.set_xlabel("episode")
    ax.set_ylabel("episodic reward")
    ax.set_xlim(0, max(1, curve.episodes - 1))
    ax.set_title(title)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def plot_reward_landscape(pairs, path, title: str = "reward landscape") -> None:
    """Step scale vs episodic reward along one update direction."""
    plt = _pyplot()
    pairs = np.asarray(pairs, dtype=float)
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.plot(pairs[:, 0], pairs[:, 1], marker="o", markersize=2.5)
    best = pairs[np.argmax(pairs[:, 1])]
    ax.axvline(best[0], color="gray", linestyle=":", linewidth=1)
    ax.set_xlabel("update step scale")
    ax.set_ylabel("episodic reward")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def plot_exploration_trace(
    episodes, sigma_swing, sigma_lift, path,
    title: str = "exploration rates",
) -> None:
    """Per-group exploration-rate evolution over a run."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.plot(episodes, sigma_swing, label="swing joints")
    ax.plot(episodes, sigma_lift, label="lift joints")
    ax.set_xlabel("episode")
    ax.set_ylabel("exploration rate (moving average)")
    ax.set_ylim(bottom=0)
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
