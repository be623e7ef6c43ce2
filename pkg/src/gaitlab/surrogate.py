"""Deterministic kinematic walking surrogate.

Maps joint-command trajectories for a hexapod (or quadruped) to body
displacement (x, y, yaw) and reward through a closed-form leg-kinematics
and ground-contact model.  The model is deliberately simple — rate-limited
joints, stance detection by foot height, stance-foot mean propulsion — so
that every rollout is exactly reproducible and bilaterally symmetric
command patterns provably produce straight-line motion.

Conventions:
  * body frame: +x forward, +y left, +z up, origin at body center;
  * legs are ordered right side front-to-back, then left side front-to-back
    (hexapod: RF, RM, RH, LF, LM, LH);
  * each leg has three joints: a swing joint rotating the leg about the
    vertical axis at the hip, then two pitch joints (femur, tibia) moving
    the foot in the leg's vertical plane.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DataError
from .sme import ALPHA_MAX

JOINTS_PER_LEG = 3


@dataclass(frozen=True)
class RobotGeometry:
    """Planar body layout and leg segment lengths (meters).

    The default hexapod has hips at x = +0.15 / 0 / -0.15 on each side
    (body length 0.30) offset 0.06 m laterally, and legs whose three
    segments sum to the fully extended length 0.25 m.  ``n_legs=4`` drops
    the middle hip pair.
    """

    n_legs: int = 6
    coxa: float = 0.05
    femur: float = 0.10
    tibia: float = 0.10
    body_length: float = 0.30
    hip_lateral: float = 0.06

    LEG_LENGTH = 0.25
    BODY_LENGTH = 0.30

    def __post_init__(self) -> None:
        if self.n_legs not in (4, 6):
            raise ConfigError("n_legs must be 4 or 6")
        total = self.coxa + self.femur + self.tibia
        if abs(total - self.LEG_LENGTH) > 1e-9:
            raise ConfigError(
                f"segment lengths must sum to the fully extended leg "
                f"length {self.LEG_LENGTH} m (got {total})"
            )
        if abs(self.body_length - self.BODY_LENGTH) > 1e-9:
            raise ConfigError(
                f"body length must be {self.BODY_LENGTH} m (got "
                f"{self.body_length})"
            )
        if self.hip_lateral <= 0:
            raise ConfigError("hip_lateral must be positive")

    @property
    def n_joints(self) -> int:
        return self.n_legs * JOINTS_PER_LEG

    def hip_positions(self) -> list[tuple[float, float, float]]:
        """(hip_x, hip_y, side) per leg; side is +1 left / -1 right."""
        half = self.body_length / 2.0
        xs = [half, 0.0, -half] if self.n_legs == 6 else [half, -half]
        legs = []
        for side in (-1.0, 1.0):  # right side first, then left
            for x in xs:
                legs.append((x, side * self.hip_lateral, side))
        return legs


@dataclass(frozen=True)
class ContactModel:
    """Named constants of the ground-contact and propulsion model.

    * ``rate_limit``: max joint change per step (rad);
    * ``stance_margin``: tolerance added to the h-th lowest foot height
      (h = n_legs/2) when deciding which feet are on the ground (m);
    * ``slip_factor``: displacement multiplier when fewer than
      ``min_stance`` feet are grounded;
    * ``min_stance``: stance-foot count below which the body slips.
    """

    rate_limit: float = 0.2
    stance_margin: float = 0.001
    slip_factor: float = 0.1
    min_stance: int = 2

    def __post_init__(self) -> None:
        if self.rate_limit <= 0:
            raise ConfigError("rate_limit must be positive")
        if self.stance_margin < 0:
            raise ConfigError("stance_margin must be non-negative")
        if not 0.0 <= self.slip_factor <= 1.0:
            raise ConfigError("slip_factor must lie in [0, 1]")
        if self.min_stance < 0:
            raise ConfigError("min_stance must be non-negative")


DEFAULT_CONTACT = ContactModel()


@dataclass(frozen=True, eq=False)
class WorldState:
    """Pose, joints, and foot-contact snapshot of the walking surrogate."""

    x: float
    y: float
    psi: float
    joints: np.ndarray  # (n_legs, 3) radians
    feet: np.ndarray  # (n_legs, 3) world-frame foot positions
    contacts: np.ndarray  # (n_legs,) bool
    # cached body-frame foot positions; recomputed from the joints when a
    # state is constructed without it
    feet_body: np.ndarray | None = None


def forward_kinematics(
    joints: np.ndarray, geometry: RobotGeometry
) -> np.ndarray:
    """Body-frame foot positions for all legs, shape (n_legs, 3).

    Per leg (swing, femur pitch, tibia pitch) = (t1, t2, t3):
      radius r = coxa + femur*cos(t2) + tibia*cos(t2 + t3 - pi/2)
      height z = femur*sin(t2) + tibia*sin(t2 + t3 - pi/2)
      foot = (hip_x + r*sin(t1), side*(hip_lateral + r*cos(t1)), z)

    so all joints at zero place each foot at (hip_x, +/-0.21, -0.10) with
    the default segments, and +t1 swings the foot forward on both sides.
    The lateral coordinate is computed as side * (single expression) so
    mirrored joint values yield exactly negated y.
    """
    j = np.asarray(joints, dtype=float)
    if j.shape != (geometry.n_legs, JOINTS_PER_LEG):
        raise DataError(
            f"joints must have shape ({geometry.n_legs}, {JOINTS_PER_LEG})"
        )
    if not np.all(np.isfinite(j)):
        raise DataError("joints must be finite")
    feet = np.empty((geometry.n_legs, 3))
    for i, (hip_x, _hip_y, side) in enumerate(geometry.hip_positions()):
        t1, t2, t3 = j[i]
        ankle = t2 + t3 - math.pi / 2.0
        r = (
            geometry.coxa
            + geometry.femur * math.cos(t2)
            + geometry.tibia * math.cos(ankle)
        )
        feet[i, 0] = hip_x + r * math.sin(t1)
        feet[i, 1] = side * (geometry.hip_lateral + r * math.cos(t1))
        feet[i, 2] = geometry.femur * math.sin(t2) + geometry.tibia * math.sin(
            ankle
        )
    return feet


def _world_feet(
    feet_body: np.ndarray, x: float, y: float, psi: float
) -> np.ndarray:
    c, s = math.cos(psi), math.sin(psi)
    out = np.empty_like(feet_body)
    out[:, 0] = x + c * feet_body[:, 0] - s * feet_body[:, 1]
    out[:, 1] = y + s * feet_body[:, 0] + c * feet_body[:, 1]
    out[:, 2] = feet_body[:, 2]
    return out


def _stance_flags(
    heights: np.ndarray, n_legs: int, margin: float
) -> np.ndarray:
    """Feet at or below the (n_legs/2)-th lowest height plus the margin."""
    h = n_legs // 2
    threshold = np.sort(heights)[h - 1] + margin
    return heights <= threshold


def reset(
    geometry: RobotGeometry,
    mode: str = "full",
    state: WorldState | None = None,
    contact: ContactModel = DEFAULT_CONTACT,
) -> WorldState:
    """Build or re-initialize a world state.

    ``full`` zeroes pose and joints; ``pose_only`` zeroes pose but keeps
    the current joints; ``none`` returns the state unchanged.  The two
    partial modes require an existing state.
    """
    if mode not in ("full", "pose_only", "none"):
        raise ConfigError(f"unknown reset mode: {mode!r}")
    if mode == "none":
        if state is None:
            raise ConfigError("reset mode 'none' needs an existing state")
        return state
    if mode == "pose_only":
        if state is None:
            raise ConfigError("reset mode 'pose_only' needs an existing state")
        joints = state.joints.copy()
    else:
        joints = np.zeros((geometry.n_legs, JOINTS_PER_LEG))
    feet_body = forward_kinematics(joints, geometry)
    return WorldState(
        x=0.0,
        y=0.0,
        psi=0.0,
        joints=joints,
        feet=_world_feet(feet_body, 0.0, 0.0, 0.0),
        contacts=_stance_flags(
            feet_body[:, 2], geometry.n_legs, contact.stance_margin
        ),
        feet_body=feet_body,
    )


def env_step(
    world: WorldState,
    commands: np.ndarray,
    geometry: RobotGeometry | None = None,
    contact: ContactModel = DEFAULT_CONTACT,
    reward_mode: str = "sim",
) -> tuple[WorldState, float]:
    """Advance the surrogate one control step.

    1. joint targets are clipped to the output range (+/- alpha_max) and
       joints move toward them under the per-step rate limit;
    2. feet whose new body-frame height is within ``stance_margin`` of the
       (n_legs/2)-th lowest foot are in stance;
    3. the body's planar displacement is the negative mean of the stance
       feet's horizontal displacements, and its yaw change is the negative
       mean of their angular sweeps about the body center (ground reaction:
       feet sweeping backward push the body forward);
    4. with fewer than ``min_stance`` grounded feet the whole displacement
       (translation and yaw) is scaled by ``slip_factor``;
    5. the world pose integrates the body-frame displacement rotated by the
       pre-step heading.

    Means use exactly-rounded summation so bilaterally mirrored commands
    cancel sideways drift and yaw exactly.
    """
    if geometry is None:
        geometry = RobotGeometry(n_legs=world.joints.shape[0])
    cmd = np.asarray(commands, dtype=float).reshape(-1)
    if cmd.size != geometry.n_joints:
        raise DataError(
            f"command vector must have length {geometry.n_joints}"
        )
    cmd = np.clip(cmd, -ALPHA_MAX, ALPHA_MAX).reshape(
        geometry.n_legs, JOINTS_PER_LEG
    )

    old_joints = world.joints
    step = np.clip(cmd - old_joints, -contact.rate_limit, contact.rate_limit)
    new_joints = old_joints + step

    feet_old = (
        world.feet_body
        if world.feet_body is not None
        else forward_kinematics(old_joints, geometry)
    )
    feet_new = forward_kinematics(new_joints, geometry)
    stance = _stance_flags(
        feet_new[:, 2], geometry.n_legs, contact.stance_margin
    )

    n_stance = int(np.count_nonzero(stance))
    if n_stance == 0:
        dx = dy = dpsi = 0.0
    else:
        idx = np.nonzero(stance)[0]
        delta = feet_new[idx, :2] - feet_old[idx, :2]
        dx = -math.fsum(delta[:, 0]) / n_stance
        dy = -math.fsum(delta[:, 1]) / n_stance
        sweeps = []
        for k, leg in enumerate(idx):
            px, py = feet_old[leg, 0], feet_old[leg, 1]
            rr = px * px + py * py
            sweeps.append((px * delta[k, 1] - py * delta[k, 0]) / rr)
        dpsi = -math.fsum(sweeps) / n_stance
    if n_stance < contact.min_stance:
        dx *= contact.slip_factor
        dy *= contact.slip_factor
        dpsi *= contact.slip_factor

    c, s = math.cos(world.psi), math.sin(world.psi)
    new_x = world.x + c * dx - s * dy
    new_y = world.y + s * dx + c * dy
    new_psi = world.psi + dpsi

    new_world = WorldState(
        x=new_x,
        y=new_y,
        psi=new_psi,
        joints=new_joints,
        feet=_world_feet(feet_new, new_x, new_y, new_psi),
        contacts=stance,
        feet_body=feet_new,
    )
    if reward_mode == "sim":
        r = reward_sim(world, new_world)
    elif reward_mode == "heading":
        r = reward_heading(world, new_world)
    else:
        raise ConfigError(f"unknown reward mode: {reward_mode!r}")
    return new_world, r


def reward_sim(prev: WorldState, next_state: WorldState) -> float:
    """Forward progress penalized by sideways drift: dx - dy."""
    return (next_state.x - prev.x) - (next_state.y - prev.y)


def reward_heading(prev: WorldState, next_state: WorldState) -> float:
    """Displacement projected onto the step's own heading change:
    dx*cos(dpsi) + dy*sin(dpsi)."""
    dpsi = next_state.psi - prev.psi
    return (next_state.x - prev.x) * math.cos(dpsi) + (
        next_state.y - prev.y
    ) * math.sin(dpsi)


def rollout(
    world: WorldState,
    command_seq: np.ndarray,
    geometry: RobotGeometry | None = None,
    contact: ContactModel = DEFAULT_CONTACT,
    reward_mode: str = "sim",
) -> tuple[list[WorldState], np.ndarray]:
    """Apply a (T, n_joints) command sequence; returns the T+1 states
    (including the start state) and the T per-step rewards."""
    seq = np.asarray(command_seq, dtype=float)
    if seq.ndim != 2:
        raise DataError("command sequence must be 2-D (steps, joints)")
    states = [world]
    rewards = np.empty(len(seq))
    for t, cmd in enumerate(seq):
        world, rewards[t] = env_step(
            world, cmd, geometry, contact, reward_mode
        )
        states.append(world)
    return states, rewards


def write_rollout_csv(path, states: list[WorldState], rewards) -> None:
    """Write a rollout as CSV: t, pose, per-step reward, contact flags,
    joint angles.  Row t holds the state after step t (t = 0 is the start
    state with reward 0)."""
    rewards = np.asarray(rewards, dtype=float)
    if len(states) != len(rewards) + 1:
        raise DataError("need exactly one more state than rewards")
    n_legs = states[0].joints.shape[0]
    cols = (
        ["t", "x", "y", "psi", "r"]
        + [f"contact_{i + 1}" for i in range(n_legs)]
        + [
            f"joint_{i + 1}"
            for i in range(n_legs * JOINTS_PER_LEG)
        ]
    )
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for t, st in enumerate(states):
            r = 0.0 if t == 0 else rewards[t - 1]
            row = [str(t)]
            row += ["%.9g" % v for v in (st.x, st.y, st.psi, r)]
            row += ["1" if f else "0" for f in st.contacts]
            row += ["%.9g" % v for v in st.joints.reshape(-1)]
            fh.write(",".join(row) + "\n")


def mirror_commands(commands: np.ndarray, n_legs: int) -> np.ndarray:
    """Swap the command triples of each left leg with its right twin.

    Because the two sides are geometric mirror images, a command sequence
    and its mirror produce trajectories with exactly negated y and yaw.
    """
    cmd = np.asarray(commands, dtype=float)
    flat = cmd.reshape(cmd.shape[:-1] + (n_legs, JOINTS_PER_LEG))
    half = n_legs // 2
    order = list(range(half, n_legs)) + list(range(half))
    return flat[..., order, :].reshape(cmd.shape)
