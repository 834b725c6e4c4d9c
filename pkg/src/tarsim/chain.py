"""Tendon-driven tarsal chain: string-pull kinematics, inverse solve, forces.

Models an insect-style tarsus as five tarsomeres linked by ball-and-socket
joints and actuated by a single string running along the underside of the
chain.  Bending a joint shortens the string span across it; the pull the
actuator must reel in is the sum of the per-joint shortenings plus any
axial compression (and, optionally, socket-deformation slack) of the
segments.  Releasing the string lets the return springs straighten the
chain, so the whole structure switches between a flexible and a rigid,
bent-down state.

Planar convention (sagittal plane, x forward along the chain, z up):

* joint centre at the origin,
* the distal guide hole sits at radius ``radius`` straight below the joint,
* the proximal guide hole sits ``anchor_long`` behind and ``anchor_trans``
  above the distal one; the rest span ``rest_span`` is measured guide hole
  to guide hole and defaults to ``hypot(anchor_long, anchor_trans)``,
* bending rotates the distal segment clockwise (downward) about the joint.

All angles are radians internally; degrees appear only at I/O boundaries.
Lengths are mm, forces N.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

DEFAULT_SPRING_N_PER_MM = 0.54
DEFAULT_K_FLEX_N_PER_MM = 0.054
DEFAULT_K_RIGID_N_PER_MM = 0.54
DEFAULT_VERTICAL_CAP_N = 2.46
DEFAULT_CLAW_THRESHOLD = 0.8
DEFAULT_CLAW_MAX_OPENING = math.radians(60.0)

NUM_TARSOMERES = 5


@dataclass(frozen=True)
class SegmentGeometry:
    """Geometry of one tarsomere joint as seen by the actuation string.

    radius       rotation radius of the distal guide hole (mm)
    anchor_long  longitudinal offset of the proximal guide hole (mm)
    anchor_trans transverse offset of the proximal guide hole (mm)
    max_bend     bend limit of this joint (rad)
    rest_span    guide-hole-to-guide-hole span at rest (mm); derived from
                 the anchor offsets when not given
    axial_cap    maximum axial compression of the segment (mm)
    """

    radius: float
    anchor_long: float
    anchor_trans: float
    max_bend: float
    rest_span: float | None = None
    axial_cap: float = 0.0

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"radius must be > 0, got {self.radius}")
        if self.anchor_long <= 0:
            raise ValueError(f"anchor_long must be > 0, got {self.anchor_long}")
        if self.anchor_trans < 0:
            raise ValueError(f"anchor_trans must be >= 0, got {self.anchor_trans}")
        if not 0 < self.max_bend < math.pi / 2:
            raise ValueError(f"max_bend must be in (0, pi/2), got {self.max_bend}")
        if self.rest_span is None:
            object.__setattr__(
                self, "rest_span", math.hypot(self.anchor_long, self.anchor_trans)
            )
        if self.rest_span <= 0:
            raise ValueError(f"rest_span must be > 0, got {self.rest_span}")
        if self.axial_cap < 0:
            raise ValueError(f"axial_cap must be >= 0, got {self.axial_cap}")


@dataclass(frozen=True)
class ChainGeometry:
    """Full tarsal chain: five joints, body lengths, spring and stiffness data.

    ``socket_slack`` is an extra per-segment displacement capacity that
    absorbs string pull once bending and axial compression are exhausted
    (used to reproduce measured over-travel caused by joint-socket
    deformation).  Zero by default.
    """

    segments: tuple[SegmentGeometry, ...]
    k_spring: float = DEFAULT_SPRING_N_PER_MM
    segment_lengths: tuple[float, ...] = (18.0, 16.0, 14.0, 12.0, 10.0)
    socket_slack: tuple[float, ...] = (0.0,) * NUM_TARSOMERES
    k_flex: float = DEFAULT_K_FLEX_N_PER_MM
    k_rigid: float = DEFAULT_K_RIGID_N_PER_MM
    vertical_cap: float = DEFAULT_VERTICAL_CAP_N

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        object.__setattr__(self, "segment_lengths", tuple(self.segment_lengths))
        object.__setattr__(self, "socket_slack", tuple(self.socket_slack))
        if len(self.segments) != NUM_TARSOMERES:
            raise ValueError(f"a tarsus has {NUM_TARSOMERES} tarsomeres, "
                             f"got {len(self.segments)}")
        if len(self.segment_lengths) != NUM_TARSOMERES:
            raise ValueError("segment_lengths must have one entry per tarsomere")
        if len(self.socket_slack) != NUM_TARSOMERES:
            raise ValueError("socket_slack must have one entry per tarsomere")
        if self.k_spring <= 0:
            raise ValueError(f"k_spring must be > 0, got {self.k_spring}")
        if any(s <= 0 for s in self.segment_lengths):
            raise ValueError("segment_lengths must be positive")
        if any(s < 0 for s in self.socket_slack):
            raise ValueError("socket_slack must be nonnegative")
        if self.k_flex <= 0 or self.k_rigid <= 0:
            raise ValueError("stiffness slopes must be positive")
        if not self.k_rigid > self.k_flex:
            raise ValueError(f"rigid slope must exceed flexible slope "
                             f"({self.k_rigid} <= {self.k_flex})")
        if self.vertical_cap <= 0:
            raise ValueError("vertical_cap must be positive")

    @property
    def max_bend(self) -> np.ndarray:
        return np.array([s.max_bend for s in self.segments])

    @property
    def axial_caps(self) -> np.ndarray:
        return np.array([s.axial_cap for s in self.segments])


@dataclass(frozen=True)
class ChainState:
    """Per-segment bend angles (rad), axial compressions and slack (mm)."""

    theta: np.ndarray
    compression: np.ndarray
    slack: np.ndarray | None = None

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        comp = np.asarray(self.compression, dtype=float)
        slack = (np.zeros_like(comp) if self.slack is None
                 else np.asarray(self.slack, dtype=float))
        if not (theta.shape == comp.shape == slack.shape):
            raise ValueError("theta, compression and slack must match in shape")
        if np.any(theta < 0) or np.any(comp < 0) or np.any(slack < 0):
            raise ValueError("bend angles, compressions and slack are nonnegative")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "compression", comp)
        object.__setattr__(self, "slack", slack)


@dataclass(frozen=True)
class ClawState:
    """Claw articulation: opening angle (rad) and whether it is engaged."""

    opening_angle: float
    engaged: bool

    def __post_init__(self):
        if self.opening_angle < 0:
            raise ValueError("opening_angle must be >= 0")


def chord_length(radius: float, alpha):
    """Chord travelled by a point at ``radius`` when rotated by ``alpha``.

    sqrt(2 R^2 (1 - cos alpha)); zero at alpha = 0 and monotone increasing
    on [0, pi).
    """
    alpha = np.asarray(alpha, dtype=float)
    if np.any(np.asarray(radius) < 0):
        raise ValueError("radius must be nonnegative")
    if np.any(alpha < 0) or np.any(alpha >= math.pi):
        raise ValueError("alpha must lie in [0, pi)")
    out = np.sqrt(2.0 * radius * radius * (1.0 - np.cos(alpha)))
    return float(out) if out.ndim == 0 else out


def pull_angle(alpha, anchor_long: float, anchor_trans: float):
    """Angle between the guide-hole chord and the rest string direction.

    alpha/2 - atan(anchor_trans / anchor_long); may be negative for small
    bends (only its cosine enters the span computation).
    """
    if np.any(np.asarray(anchor_long) <= 0):
        raise ValueError("anchor_long must be > 0")
    alpha = np.asarray(alpha, dtype=float)
    out = alpha / 2.0 - np.arctan2(anchor_trans, anchor_long)
    return float(out) if out.ndim == 0 else out


def segment_string_span(geom: SegmentGeometry, alpha):
    """String span across one joint bent by ``alpha`` (law of cosines)."""
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha < 0) or np.any(alpha > geom.max_bend + 1e-12):
        raise ValueError("alpha outside [0, max_bend]")
    l = chord_length(geom.radius, alpha)
    beta = pull_angle(alpha, geom.anchor_long, geom.anchor_trans)
    d1 = geom.rest_span
    sq = d1 * d1 + l * l - 2.0 * d1 * l * np.cos(beta)
    # the discriminant is >= (d1 - l)^2 analytically; clip rounding dust
    d2 = np.sqrt(np.clip(sq, 0.0, None))
    # exactness at rest: l == 0 collapses the triangle to the rest span
    d2 = np.where(l == 0.0, d1, d2)
    return float(d2) if d2.ndim == 0 else d2


def segment_pull(geom: SegmentGeometry, alpha):
    """String length reeled in across one joint bent by ``alpha`` (mm)."""
    d2 = segment_string_span(geom, alpha)
    out = geom.rest_span - np.asarray(d2)
    out = np.where(np.asarray(alpha, dtype=float) == 0.0, 0.0, out)
    return float(out) if out.ndim == 0 else out


def validate_state(chain: ChainGeometry, state: ChainState) -> None:
    """Raise if ``state`` does not fit ``chain`` (shape or range)."""
    if state.theta.shape != (len(chain.segments),):
        raise ValueError(
            f"state has {state.theta.shape[0] if state.theta.ndim else 0} "
            f"segments, chain has {len(chain.segments)}")
    if np.any(state.theta > chain.max_bend + 1e-9):
        raise ValueError("bend angle exceeds max_bend")
    if np.any(state.compression > chain.axial_caps + 1e-9):
        raise ValueError("compression exceeds axial_cap")
    if np.any(state.slack > np.asarray(chain.socket_slack) + 1e-9):
        raise ValueError("slack exceeds socket_slack capacity")


def rest_state(chain: ChainGeometry) -> ChainState:
    n = len(chain.segments)
    return ChainState(np.zeros(n), np.zeros(n), np.zeros(n))


def chain_pull(chain: ChainGeometry, state: ChainState) -> float:
    """Total string pull for a chain configuration (mm).

    Sum of per-joint string shortenings plus axial compressions plus
    socket slack; exactly zero at the rest state.
    """
    validate_state(chain, state)
    bend = sum(
        segment_pull(seg, th) for seg, th in zip(chain.segments, state.theta)
    )
    return float(bend + state.compression.sum() + state.slack.sum())


def full_bend_pull(chain: ChainGeometry) -> float:
    """String pull with every joint at its bend limit, no compression."""
    return float(sum(segment_pull(s, s.max_bend) for s in chain.segments))


def max_chain_pull(chain: ChainGeometry) -> float:
    """Pull capacity: full bend plus all compression and slack absorbed."""
    return full_bend_pull(chain) + float(chain.axial_caps.sum()) \
        + float(sum(chain.socket_slack))


def solve_bend_from_pull(chain: ChainGeometry, pull: float,
                         tol: float = 1e-9, max_iter: int = 200) -> ChainState:
    """Invert the pull map: distribute a commanded string pull over the chain.

    All joints bend together, theta_i = s * max_bend_i for a shared
    saturation parameter s in [0, 1] found by bisection.  Pull beyond the
    all-saturated point goes into axial compressions proportional to their
    caps, then into socket slack proportional to its capacities.  Excess
    beyond the total capacity is clamped (with a warning).

    Args:
        chain: chain geometry.
        pull: commanded string pull, mm (>= 0).
        tol: bisection tolerance on the pull residual, mm.
        max_iter: bisection iteration cap.

    Returns:
        ChainState whose chain_pull matches min(pull, capacity) within tol.
    """
    if pull < 0:
        raise ValueError("pull must be >= 0")
    n = len(chain.segments)
    alpha_max = chain.max_bend
    caps = chain.axial_caps
    slack_caps = np.asarray(chain.socket_slack, dtype=float)

    bend_max = full_bend_pull(chain)
    capacity = bend_max + caps.sum() + slack_caps.sum()
    if pull > capacity + tol:
        warnings.warn(
            f"commanded pull {pull:.6g} mm exceeds chain capacity "
            f"{capacity:.6g} mm; clamping", stacklevel=2)
    target = min(pull, capacity)

    def bend_pull(s: float) -> float:
        return sum(
            segment_pull(seg, s * am)
            for seg, am in zip(chain.segments, alpha_max)
        )

    if target >= bend_max:
        s = 1.0
    elif target <= 0.0:
        s = 0.0
    else:
        lo, hi = 0.0, 1.0
        s = 0.5
        for _ in range(max_iter):
            s = 0.5 * (lo + hi)
            err = bend_pull(s) - target
            if abs(err) < tol:
                break
            if err > 0:
                hi = s
            else:
                lo = s

    theta = s * alpha_max
    remainder = target - bend_pull(s) if s >= 1.0 else 0.0

    compression = np.zeros(n)
    slack = np.zeros(n)
    if remainder > 0 and caps.sum() > 0:
        frac = min(remainder / caps.sum(), 1.0)
        compression = frac * caps
        remainder -= compression.sum()
    if remainder > tol and slack_caps.sum() > 0:
        frac = min(remainder / slack_caps.sum(), 1.0)
        slack = frac * slack_caps

    return ChainState(theta, compression, slack)


def total_bend_angle(state: ChainState) -> float:
    """Summed bend of all joints, in degrees."""
    return float(np.degrees(state.theta.sum()))


def restoring_force(chain: ChainGeometry, state: ChainState) -> float:
    """Return-spring force opposing the string pull (N): k_spring * pull."""
    return chain.k_spring * chain_pull(chain, state)


def stiffness_curve(chain: ChainGeometry, mode: str, displacements) -> np.ndarray:
    """Vertical force vs pressed displacement for one actuation mode.

    Piecewise linear: slope k_rigid (string tight) or k_flex (string
    relaxed); the rigid curve saturates at the vertical force cap.
    """
    d = np.asarray(displacements, dtype=float)
    if np.any(d < 0):
        raise ValueError("displacements must be nonnegative")
    if np.any(np.diff(d) < 0):
        raise ValueError("displacements must be sorted ascending")
    if mode == "rigid":
        return np.minimum(chain.k_rigid * d, chain.vertical_cap)
    if mode == "flexible":
        return chain.k_flex * d
    raise ValueError(f"mode must be 'rigid' or 'flexible', got {mode!r}")


def claw_actuation(pull_fraction: float,
                   threshold: float = DEFAULT_CLAW_THRESHOLD,
                   max_opening: float = DEFAULT_CLAW_MAX_OPENING) -> ClawState:
    """Claw response to normalized string pull.

    The claws stay closed below ``threshold``; past it the opening angle
    ramps linearly from 0 to ``max_opening`` at full pull.
    """
    if not 0.0 <= pull_fraction <= 1.0:
        raise ValueError("pull_fraction must lie in [0, 1]")
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    engaged = pull_fraction >= threshold
    if not engaged:
        return ClawState(0.0, False)
    if threshold >= 1.0:
        return ClawState(max_opening, True)
    ramp = (pull_fraction - threshold) / (1.0 - threshold)
    return ClawState(max_opening * ramp, True)


def chain_pose(chain: ChainGeometry, state: ChainState) -> np.ndarray:
    """Sagittal-plane tarsomere end positions, (5, 2) array of (x, z) mm.

    Segment lengths shrink by the compression and slack of the segment;
    cumulative joint bends rotate the chain downward (negative z).
    """
    validate_state(chain, state)
    lengths = np.asarray(chain.segment_lengths) - state.compression - state.slack
    if np.any(lengths <= 0):
        raise ValueError("compression/slack exceed a segment body length")
    heading = -np.cumsum(state.theta)
    steps = lengths[:, None] * np.column_stack([np.cos(heading), np.sin(heading)])
    return np.cumsum(steps, axis=0)


# Default calibrated geometry.  Shapes follow a plausible distally
# shrinking tarsomere profile; all lengths are then scaled uniformly so the
# full-bend string pull lands exactly on the design target (pull is exactly
# linear under uniform scaling of radius/anchor offsets/rest span).
_BASE_RADIUS = (2.5, 2.3, 2.1, 1.9, 1.7)
_BASE_ANCHOR_LONG = (3.2, 3.0, 2.8, 2.6, 2.4)
_BASE_ANCHOR_TRANS = (0.5, 0.45, 0.4, 0.35, 0.3)
_MAX_BEND_DEG = (10.575, 10.575, 10.575, 10.575, 23.5)
_AXIAL_CAP_MM = (1.07, 0.74, 1.9, 0.31, 0.68)
_SEGMENT_LENGTH_MM = (18.0, 16.0, 14.0, 12.0, 10.0)

FULL_BEND_PULL_MM = 5.5
TOTAL_BEND_DEG = 65.8
MEASURED_FULL_PULL_MM = 13.1


def default_chain_geometry(socket_slack: bool = False) -> ChainGeometry:
    """Calibrated five-segment chain.

    Full-bend pull is 5.5 mm and the summed bend limit 65.8 deg.  With
    ``socket_slack=True`` an extra slack capacity on segment 2 brings the
    total pull capacity (bend + compression + slack) to 13.1 mm, matching
    bench measurements dominated by socket deformation at that joint.
    """
    base = [
        SegmentGeometry(r, h1, h2, math.radians(am))
        for r, h1, h2, am in zip(_BASE_RADIUS, _BASE_ANCHOR_LONG,
                                 _BASE_ANCHOR_TRANS, _MAX_BEND_DEG)
    ]
    unscaled = sum(segment_pull(s, s.max_bend) for s in base)
    scale = FULL_BEND_PULL_MM / unscaled
    segments = tuple(
        SegmentGeometry(
            radius=scale * s.radius,
            anchor_long=scale * s.anchor_long,
            anchor_trans=scale * s.anchor_trans,
            max_bend=s.max_bend,
            rest_span=scale * s.rest_span,
            axial_cap=cap,
        )
        for s, cap in zip(base, _AXIAL_CAP_MM)
    )
    slack = [0.0] * NUM_TARSOMERES
    if socket_slack:
        slack[1] = MEASURED_FULL_PULL_MM - FULL_BEND_PULL_MM - sum(_AXIAL_CAP_MM)
    return ChainGeometry(
        segments=segments,
        segment_lengths=_SEGMENT_LENGTH_MM,
        socket_slack=tuple(slack),
    )
