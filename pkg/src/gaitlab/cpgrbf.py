"""Baseline controller (`cpgrbf`): a two-neuron oscillator feeding a
radial-basis-function output map.

The oscillator is a saturating linear rotation; its limit cycle is measured
once, Gaussian kernels are pinned to equally spaced points along that cycle,
and a clipped linear map over the kernel activations produces joint commands.
The map has the same learnable parameter count (18 x 4 = 72) as the rhythm
network in :mod:`gaitlab.sme`, which is what makes the two comparable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, InsufficientDataError
from .sme import ALPHA_MAX

# Frequency scalar calibrated by bisection (see calibrate_phi) so the default
# oscillator period matches the rhythm network's 0.3 Hz gait at 20 Hz
# stepping; kept as a constant so default construction needs no search.
DEFAULT_PHI = 0.3662109375


@dataclass(frozen=True)
class So2Config:
    """Oscillator coefficients.

    The update is state <- tanh(W state) with

        W = [[w_self, w_cross + phi],
             [w_cross - phi, w_self]]

    i.e. a self-excited pair with an antisymmetric (rotation-like) coupling
    whose strength phi sets the cycle frequency.
    """

    w_self: float = 1.4
    w_cross: float = 0.18
    phi: float = DEFAULT_PHI

    def matrix(self) -> np.ndarray:
        return np.array(
            [
                [self.w_self, self.w_cross + self.phi],
                [self.w_cross - self.phi, self.w_self],
            ]
        )


def so2_step(state: np.ndarray, cfg: So2Config) -> np.ndarray:
    """Advance the oscillator one step; image stays inside (-1, 1)^2."""
    state = np.asarray(state, dtype=float)
    if state.shape != (2,):
        raise ValueError(f"oscillator state must be a 2-vector, got {state.shape}")
    if not np.all(np.isfinite(state)):
        raise ValueError("oscillator state must be finite")
    return np.tanh(cfg.matrix() @ state)


def oscillator_trace(
    cfg: So2Config, n_steps: int, state: tuple[float, float] = (0.2, 0.0)
) -> np.ndarray:
    """Roll the oscillator forward; returns an (n_steps, 2) array."""
    w = cfg.matrix()
    s = np.asarray(state, dtype=float)
    out = np.empty((n_steps, 2))
    for t in range(n_steps):
        s = np.tanh(w @ s)
        out[t] = s
    return out


@dataclass(frozen=True)
class CycleMeasurement:
    """Measured limit-cycle geometry of an oscillator configuration."""

    period: float            # mean steps per cycle (interpolated crossings)
    jitter: float            # max - min of integer crossing intervals
    anchor: np.ndarray       # state at the first post-warmup upward crossing
    points: np.ndarray       # (m, 2) one full cycle of states, from anchor


def measure_cycle(
    cfg: So2Config,
    warmup: int = 2000,
    n_cycles: int = 100,
    state: tuple[float, float] = (0.2, 0.0),
) -> CycleMeasurement:
    """Measure period and one cycle of the limit cycle.

    The cycle is anchored at the upward zero crossing of the first channel.
    Period is the mean interval between linearly interpolated crossings over
    ``n_cycles`` cycles.
    """
    horizon = warmup + int(n_cycles * 80) + 200
    trace = oscillator_trace(cfg, horizon, state)
    x = trace[warmup:, 0]
    crossings = []
    for t in range(1, len(x)):
        if x[t - 1] < 0.0 <= x[t]:
            frac = -x[t - 1] / (x[t] - x[t - 1])
            crossings.append(t - 1 + frac)
            if len(crossings) > n_cycles:
                break
    if len(crossings) < 3:
        raise InsufficientDataError(
            "oscillator does not cross zero often enough to measure a period "
            "(it may have converged to a fixed point)"
        )
    intervals = np.diff(crossings)
    int_steps = np.diff([int(math.ceil(c)) for c in crossings])
    first = int(math.ceil(crossings[0]))
    cycle_len = int(round(float(np.mean(intervals))))
    points = trace[warmup + first : warmup + first + cycle_len]
    return CycleMeasurement(
        period=float(np.mean(intervals)),
        jitter=float(np.max(int_steps) - np.min(int_steps)),
        anchor=trace[warmup + first].copy(),
        points=points.copy(),
    )


def calibrate_phi(
    target_period: float = 200.0 / 3.0,
    lo: float = 0.32,
    hi: float = 0.80,
    iters: int = 40,
    w_self: float = 1.4,
    w_cross: float = 0.18,
) -> float:
    """Bisect phi until the measured period hits the target.

    Larger phi spins the cycle faster (shorter period). Below phi ~ 0.3 the
    saturating map collapses to a corner fixed point instead of oscillating,
    so the lower bracket must stay above that.
    """
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        period = measure_cycle(
            So2Config(w_self=w_self, w_cross=w_cross, phi=mid), n_cycles=30
        ).period
        if period > target_period:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# radial-basis map
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RbfMap:
    """Gaussian kernels on the oscillator cycle plus a linear read-out.

    ``centers``/``width`` are produced by calibration against the measured
    limit cycle; a map constructed without them can hold weights but cannot
    compute activations yet.
    """

    weights: np.ndarray                 # (n_outputs, n_kernels)
    centers: np.ndarray | None = None   # (n_kernels, 2)
    width: float | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2:
            raise ConfigError(f"rbf weights must be a matrix, got ndim={w.ndim}")
        if not np.all(np.isfinite(w)):
            raise ConfigError("rbf weights must be finite")
        object.__setattr__(self, "weights", w)
        if self.centers is not None:
            c = np.asarray(self.centers, dtype=float)
            if c.shape != (w.shape[1], 2):
                raise ConfigError(
                    f"centers shape {c.shape} does not match "
                    f"{w.shape[1]} kernels"
                )
            object.__setattr__(self, "centers", c)
            if self.width is None or not self.width > 0:
                raise ConfigError("calibrated map needs a positive width")


def _arc_positions(points: np.ndarray) -> tuple[np.ndarray, float]:
    """Cumulative arc length along the closed polyline of cycle points."""
    closed = np.vstack([points, points[:1]])
    seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    return cum, float(cum[-1])


def _point_at_arc(points: np.ndarray, cum: np.ndarray, s: float) -> np.ndarray:
    """Linear interpolation along the closed cycle polyline."""
    total = cum[-1]
    s = s % total
    idx = int(np.searchsorted(cum, s, side="right") - 1)
    a = points[idx]
    b = points[(idx + 1) % len(points)]
    seg = cum[idx + 1] - cum[idx]
    frac = 0.0 if seg == 0 else (s - cum[idx]) / seg
    return a + frac * (b - a)


def place_centers(points: np.ndarray, n_kernels: int = 4) -> np.ndarray:
    """Kernel centers at equally spaced positions along the measured cycle.

    Spacing is by arc length (geometric phase): the saturating oscillator
    moves at very uneven speed around its near-square cycle, and time-equal
    placement would bunch the centers so much that parts of the cycle fall
    below the half-activation coverage requirement.
    """
    cum, total = _arc_positions(points)
    return np.array(
        [_point_at_arc(points, cum, k * total / n_kernels) for k in range(n_kernels)]
    )


def kernel_width(points: np.ndarray, centers: np.ndarray) -> float:
    """Width making adjacent kernels intersect at 0.5 activation.

    Adjacent kernels meet mid-way (by arc length) between their centers; the
    width that puts that crossing at activation 0.5 is d / sqrt(2 ln 2) with
    d the midpoint-to-center distance. A 2% margin keeps the coverage
    strictly above one half at the dip.
    """
    n = len(centers)
    cum, total = _arc_positions(points)
    d = []
    for k in range(n):
        mid = _point_at_arc(points, cum, (k + 0.5) * total / n)
        d.append(np.linalg.norm(mid - centers[k]))
        d.append(np.linalg.norm(mid - centers[(k + 1) % n]))
    return float(np.mean(d)) / math.sqrt(2.0 * math.log(2.0)) * 1.02


def rbf_activations(state: np.ndarray, rbf: RbfMap) -> np.ndarray:
    """Gaussian kernel activations, each in (0, 1]."""
    if rbf.centers is None:
        raise ConfigError("rbf map has no calibrated centers")
    state = np.asarray(state, dtype=float)
    if state.shape != (2,):
        raise ValueError(f"oscillator state must be a 2-vector, got {state.shape}")
    d2 = np.sum((rbf.centers - state) ** 2, axis=1)
    return np.exp(-d2 / (2.0 * rbf.width**2))


def cpgrbf_output(
    activations: np.ndarray, rbf: RbfMap, alpha_max: float = ALPHA_MAX
) -> np.ndarray:
    """Clipped linear read-out of the kernel activations."""
    activations = np.asarray(activations, dtype=float)
    if activations.shape != (rbf.weights.shape[1],):
        raise ValueError(
            f"activation dimension mismatch: expected "
            f"({rbf.weights.shape[1]},), got {activations.shape}"
        )
    return np.clip(rbf.weights @ activations, -alpha_max, alpha_max)


# ---------------------------------------------------------------------------
# assembled controller parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CpgRbfParams:
    """Calibrated oscillator + kernel map, ready to step."""

    so2: So2Config
    rbf: RbfMap
    reset_state: np.ndarray   # anchor point of the measured cycle
    period: float
    alpha_max: float = ALPHA_MAX

    @classmethod
    def build(
        cls,
        so2: So2Config | None = None,
        weights: np.ndarray | None = None,
        n_kernels: int = 4,
        n_outputs: int = 18,
    ) -> "CpgRbfParams":
        so2 = so2 or So2Config()
        if weights is None:
            weights = np.zeros((n_outputs, n_kernels))
        weights = np.asarray(weights, dtype=float)
        if weights.shape[1] != n_kernels:
            raise ConfigError(
                f"weights have {weights.shape[1]} columns, expected {n_kernels}"
            )
        cyc = measure_cycle(so2)
        centers = place_centers(cyc.points, n_kernels)
        width = kernel_width(cyc.points, centers)
        rbf = RbfMap(weights=weights, centers=centers, width=width)
        return cls(so2=so2, rbf=rbf, reset_state=cyc.anchor, period=cyc.period)

    def with_weights(self, weights: np.ndarray) -> "CpgRbfParams":
        weights = np.asarray(weights, dtype=float)
        if weights.shape != self.rbf.weights.shape:
            raise ConfigError(
                f"weights shape {weights.shape} does not match "
                f"{self.rbf.weights.shape}"
            )
        return replace(self, rbf=replace(self.rbf, weights=weights))


def simulate(
    params: CpgRbfParams, n_steps: int, state: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Roll the controller forward; returns (states, kernels, outputs)."""
    s = (state if state is not None else params.reset_state).astype(float).copy()
    n_k = params.rbf.weights.shape[1]
    n_o = params.rbf.weights.shape[0]
    states = np.empty((n_steps, 2))
    kernels = np.empty((n_steps, n_k))
    outputs = np.empty((n_steps, n_o))
    for t in range(n_steps):
        s = so2_step(s, params.so2)
        k = rbf_activations(s, params.rbf)
        states[t] = s
        kernels[t] = k
        outputs[t] = cpgrbf_output(k, params.rbf, params.alpha_max)
    return states, kernels, outputs
