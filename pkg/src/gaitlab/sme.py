"""Three-layer rhythm network controller (`sme`).

A ring of saturating state neurons activates strictly one-at-a-time and hands
activity to its ring successor; each state neuron drives a low-pass rectified
basis neuron whose rise and decay produce a triangular activation; a clipped
linear map translates the basis vector into joint commands.  The ring's
connection weights are not learned: they are derived analytically from a
five-condition boundary system over two design activity levels (fully excited
and fully inhibited), a hand-off pre-activation target, and a saturation
drive.

Only the output map is trainable; everything else is fixed structure.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError

# Actuator limit for every output channel, radians.
ALPHA_MAX = 0.3

# Hand-rounded integer weights for the default configuration.  These are the
# network default so that generated traces match the reference figures; the
# exact algebraic solution is available through derive_cpg_weights().
DEFAULT_WEIGHTS = None  # assigned below, after CpgWeights is defined


@dataclass(frozen=True)
class CpgConfig:
    """Design parameters of the state ring.

    handoff_target   pre-activation a neuron receives when its predecessor
                     state and predecessor basis are both active (the moment
                     activity should begin to transfer).
    saturation_drive pre-activation magnitude used to pin every other
                     boundary condition deep into sigmoid saturation.
    excited          activity level of a fully excited state neuron.
    inhibited        activity level of a fully inhibited state neuron.
    n_states         number of neurons in the ring (one per key pose).
    """

    handoff_target: float = 0.5
    saturation_drive: float = 8.0
    excited: float = 0.95
    inhibited: float = 0.01
    n_states: int = 4

    def __post_init__(self):
        if not (0.0 <= self.inhibited < self.excited <= 1.0):
            raise ConfigError(
                "activity levels must satisfy 0 <= inhibited < excited <= 1, "
                f"got inhibited={self.inhibited}, excited={self.excited}"
            )
        if not self.saturation_drive > 0.0:
            raise ConfigError(
                f"saturation_drive must be positive, got {self.saturation_drive}"
            )
        if self.n_states < 2:
            raise ConfigError(f"n_states must be >= 2, got {self.n_states}")


@dataclass(frozen=True)
class CpgWeights:
    """Connection weights of one ring neuron (shared by all of them).

    w_prev    excitation from the previous state in the ring
    w_self    self-excitation
    w_next    suppression from the next state in the ring
    w_basis   drive from the previous state's basis neuron
    bias      constant bias
    """

    w_prev: float
    w_self: float
    w_next: float
    w_basis: float
    bias: float

    def as_vector(self) -> np.ndarray:
        return np.array(
            [self.w_prev, self.w_self, self.w_next, self.w_basis, self.bias]
        )


DEFAULT_WEIGHTS = CpgWeights(
    w_prev=8.0, w_self=25.0, w_next=-32.0, w_basis=8.0, bias=-15.0
)


@dataclass(frozen=True)
class BasisConfig:
    """Basis-layer parameters.

    transition_rate  low-pass rate (diagonal drive w_tau); 0.05 yields a
                     0.3 Hz gait at 20 Hz stepping.
    shape_next       suppression coefficient on the next-in-ring state
                     (default 0.5 * transition_rate).
    shape_second     suppression coefficient on the second-next state
                     (default 0.25 * transition_rate).
    """

    transition_rate: float = 0.05
    shape_next: float | None = None
    shape_second: float | None = None

    def __post_init__(self):
        if not (0.0 < self.transition_rate < 1.0):
            raise ConfigError(
                f"transition_rate must be in (0, 1), got {self.transition_rate}"
            )
        if self.shape_next is None:
            object.__setattr__(self, "shape_next", 0.5 * self.transition_rate)
        if self.shape_second is None:
            object.__setattr__(self, "shape_second", 0.25 * self.transition_rate)


@dataclass(frozen=True)
class OutputMap:
    """Trainable linear read-out: one column per key pose."""

    weights: np.ndarray  # (n_outputs, n_states)
    alpha_max: float = ALPHA_MAX

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2:
            raise ConfigError(f"output weights must be a matrix, got ndim={w.ndim}")
        if not np.all(np.isfinite(w)):
            raise ConfigError("output weights must be finite")
        object.__setattr__(self, "weights", w)

    @classmethod
    def zeros(cls, n_outputs: int = 18, n_states: int = 4) -> "OutputMap":
        return cls(np.zeros((n_outputs, n_states)))


@dataclass
class NetworkState:
    """Activities of the three layers at one timestep."""

    c: np.ndarray  # state-ring activations, each in (0, 1)
    b: np.ndarray  # basis activations, each >= 0
    o: np.ndarray  # motor commands, each |o| <= alpha_max

    def copy(self) -> "NetworkState":
        return NetworkState(self.c.copy(), self.b.copy(), self.o.copy())


def boundary_system(cfg: CpgConfig) -> tuple[np.ndarray, np.ndarray]:
    """Build the 5x5 boundary-condition system.

    Unknowns are (w_prev, w_self, w_next, w_basis, bias).  Each row states a
    pre-activation target for one prototype situation of a ring neuron:

      1. predecessor state and predecessor basis active  -> handoff_target
      2. predecessor state active, basis quiet           -> -saturation_drive
      3. predecessor basis active, states quiet          -> -saturation_drive
      4. the neuron itself active                        -> +saturation_drive
      5. every state and basis active                    -> -saturation_drive
    """
    hi, lo = cfg.excited, cfg.inhibited
    m = np.array(
        [
            [hi, lo, lo, hi, 1.0],
            [hi, lo, lo, lo, 1.0],
            [lo, lo, lo, hi, 1.0],
            [lo, hi, lo, lo, 1.0],
            [hi, hi, hi, hi, 1.0],
        ]
    )
    drive = cfg.saturation_drive
    rhs = np.array([cfg.handoff_target, -drive, -drive, drive, -drive])
    return m, rhs


def derive_cpg_weights(cfg: CpgConfig) -> CpgWeights:
    """Solve the boundary system exactly (residual <= 1e-9 in max-norm)."""
    m, rhs = boundary_system(cfg)
    if abs(cfg.excited - cfg.inhibited) < 1e-12:
        raise ConfigError(
            "boundary system is singular when excited == inhibited"
        )
    sol = np.linalg.solve(m, rhs)
    residual = float(np.max(np.abs(m @ sol - rhs)))
    if residual > 1e-9:
        raise ConfigError(f"boundary solve residual too large: {residual:g}")
    return CpgWeights(*sol)


def ring_matrices(
    weights: CpgWeights, basis_cfg: BasisConfig, n_states: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Assemble the circulant connection matrices of the two recurrent layers.

    Returns (state_from_state, state_from_basis, basis_from_state,
    basis_from_basis).  Ring wrap-around is additive: for n_states = 2 the
    previous and next neighbor coincide and their weights superpose.
    """
    n = n_states
    ss = np.zeros((n, n))
    sb = np.zeros((n, n))
    bs = np.zeros((n, n))
    bb = np.zeros((n, n))
    rate = basis_cfg.transition_rate
    for i in range(n):
        ss[i, (i - 1) % n] += weights.w_prev
        ss[i, i] += weights.w_self
        ss[i, (i + 1) % n] += weights.w_next
        sb[i, (i - 1) % n] += weights.w_basis
        bs[i, i] += rate
        bs[i, (i + 1) % n] += -basis_cfg.shape_next
        bs[i, (i + 2) % n] += -basis_cfg.shape_second
        bb[i, i] = 1.0 - rate
    return ss, sb, bs, bb


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -500.0, 500.0)))


@dataclass(frozen=True)
class SmeParams:
    """Precomputed matrices for fast stepping."""

    cpg_cfg: CpgConfig
    basis_cfg: BasisConfig
    weights: CpgWeights
    output: OutputMap
    state_from_state: np.ndarray = field(repr=False, default=None)
    state_from_basis: np.ndarray = field(repr=False, default=None)
    basis_from_state: np.ndarray = field(repr=False, default=None)
    basis_from_basis: np.ndarray = field(repr=False, default=None)

    @classmethod
    def build(
        cls,
        cpg_cfg: CpgConfig | None = None,
        basis_cfg: BasisConfig | None = None,
        weights: CpgWeights | None = None,
        output: OutputMap | None = None,
        n_outputs: int = 18,
    ) -> "SmeParams":
        cpg_cfg = cpg_cfg or CpgConfig()
        basis_cfg = basis_cfg or BasisConfig()
        weights = weights or DEFAULT_WEIGHTS
        output = output or OutputMap.zeros(n_outputs, cpg_cfg.n_states)
        if output.weights.shape[1] != cpg_cfg.n_states:
            raise ConfigError(
                "output map has "
                f"{output.weights.shape[1]} columns, expected {cpg_cfg.n_states}"
            )
        ss, sb, bs, bb = ring_matrices(weights, basis_cfg, cpg_cfg.n_states)
        return cls(cpg_cfg, basis_cfg, weights, output, ss, sb, bs, bb)

    def with_output(self, output: OutputMap) -> "SmeParams":
        if output.weights.shape[1] != self.cpg_cfg.n_states:
            raise ConfigError(
                "output map has "
                f"{output.weights.shape[1]} columns, expected {self.cpg_cfg.n_states}"
            )
        return replace(self, output=output)


def cpg_step(
    c: np.ndarray, b: np.ndarray, params: SmeParams
) -> np.ndarray:
    """Advance the state ring one step.

    The sigmoid image is clamped to [inhibited, excited]: those two levels are
    the design activities of a fully inhibited and fully excited neuron, and
    holding saturated neurons exactly at them keeps the hand-off timing at the
    boundary-system design point.  With levels 0/1 the clamp is a no-op.
    """
    c = np.asarray(c, dtype=float)
    b = np.asarray(b, dtype=float)
    n = params.cpg_cfg.n_states
    if c.shape != (n,) or b.shape != (n,):
        raise ValueError(
            f"state/basis dimension mismatch: expected ({n},), "
            f"got {c.shape} and {b.shape}"
        )
    pre = params.state_from_state @ c + params.state_from_basis @ b + params.weights.bias
    return np.clip(sigmoid(pre), params.cpg_cfg.inhibited, params.cpg_cfg.excited)


def cpg_preactivation(
    c: np.ndarray, b: np.ndarray, params: SmeParams
) -> np.ndarray:
    """Pre-sigmoid drive of the state ring (useful for boundary checks)."""
    return (
        params.state_from_state @ np.asarray(c, dtype=float)
        + params.state_from_basis @ np.asarray(b, dtype=float)
        + params.weights.bias
    )


def basis_step(c: np.ndarray, b: np.ndarray, params: SmeParams) -> np.ndarray:
    """Advance the basis layer one step (rectified low-pass of the states)."""
    c = np.asarray(c, dtype=float)
    b = np.asarray(b, dtype=float)
    n = params.cpg_cfg.n_states
    if c.shape != (n,) or b.shape != (n,):
        raise ValueError(
            f"state/basis dimension mismatch: expected ({n},), "
            f"got {c.shape} and {b.shape}"
        )
    pre = params.basis_from_state @ c + params.basis_from_basis @ b
    return np.maximum(0.0, pre)


def output_step(b: np.ndarray, output: OutputMap) -> np.ndarray:
    """Translate a basis vector into clipped joint commands."""
    b = np.asarray(b, dtype=float)
    if b.shape != (output.weights.shape[1],):
        raise ValueError(
            f"basis dimension mismatch: expected ({output.weights.shape[1]},), "
            f"got {b.shape}"
        )
    return np.clip(output.weights @ b, -output.alpha_max, output.alpha_max)


def initial_state(params: SmeParams) -> NetworkState:
    """Documented reset state: the first ring neuron and its basis start at
    the excited level (the basis fixed point under a constantly excited
    state), everything else at the inhibited level, outputs at zero."""
    cfg = params.cpg_cfg
    c = np.full(cfg.n_states, cfg.inhibited)
    c[0] = cfg.excited
    b = np.full(cfg.n_states, cfg.inhibited)
    b[0] = cfg.excited
    o = np.zeros(params.output.weights.shape[0])
    return NetworkState(c=c, b=b, o=o)


def network_step(state: NetworkState, params: SmeParams) -> NetworkState:
    """Synchronous update: every layer reads the previous timestep's values."""
    c_new = cpg_step(state.c, state.b, params)
    b_new = basis_step(state.c, state.b, params)
    o_new = output_step(state.b, params.output)
    return NetworkState(c=c_new, b=b_new, o=o_new)


def simulate(
    params: SmeParams, n_steps: int, state: NetworkState | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Roll the network forward and record (c, b, o) arrays of shape (T, n)."""
    st = state.copy() if state is not None else initial_state(params)
    n = params.cpg_cfg.n_states
    m = params.output.weights.shape[0]
    cs = np.empty((n_steps, n))
    bs = np.empty((n_steps, n))
    os_ = np.empty((n_steps, m))
    for t in range(n_steps):
        st = network_step(st, params)
        cs[t] = st.c
        bs[t] = st.b
        os_[t] = st.o
    return cs, bs, os_


def write_trace_csv(path, c: np.ndarray, b: np.ndarray, o: np.ndarray) -> None:
    """Write a simulation trace as CSV: t, c_1..c_n, b_1..b_n, o_1..o_m.

    LF line endings, '.' decimal separator, 9 significant digits.
    """
    c = np.asarray(c)
    b = np.asarray(b)
    o = np.asarray(o)
    header = (
        ["t"]
        + [f"c_{i + 1}" for i in range(c.shape[1])]
        + [f"b_{i + 1}" for i in range(b.shape[1])]
        + [f"o_{j + 1}" for j in range(o.shape[1])]
    )
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for t in range(c.shape[0]):
            row = [str(t)]
            row += [f"{v:.9g}" for v in c[t]]
            row += [f"{v:.9g}" for v in b[t]]
            row += [f"{v:.9g}" for v in o[t]]
            fh.write(",".join(row) + "\n")
