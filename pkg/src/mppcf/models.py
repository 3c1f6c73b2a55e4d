"""Control laws of the multi-phase projection-based car-following model."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .core import COMFORT_BRAKING, ModelParams, PairState, Phase, PhaseKind
from .phase import classify_vz, newell_target_speed, phi_prime

__all__ = [
    "ControlDecision",
    "newell_target_speed",
    "newell_accel",
    "bda_newell_accel",
    "projected_braking_distance",
    "projected_braking_distance_simplified",
    "comfort_braking_accel",
    "mpp_accel",
    "CONTROLLERS",
]


@dataclass(frozen=True)
class ControlDecision:
    a: float
    phase: Phase
    b_tilde: Optional[float] = None
    violation: bool = False


def _bda_newell(v: float, z: float, p: ModelParams) -> float:
    relax = (newell_target_speed(z, p) - v) / p.dt
    return max(-p.beta, min(p.alpha * (1.0 - v / p.mu), relax))


def bda_newell_accel(st: PairState, p: ModelParams) -> float:
    """Newell relaxation toward the target speed, clamped to ``[-beta, alpha(1 - v/mu)]``."""
    return _bda_newell(st.v, st.z, p)


def newell_accel(st: PairState, p: ModelParams) -> float:
    """Unbounded Newell law: jump to the target speed within one step."""
    return (newell_target_speed(st.z, p) - st.v) / p.dt


def _b_tilde(v: float, v_leader: float, z: float, p: ModelParams) -> float:
    return z - phi_prime(v, v_leader, p) + v * v / (2.0 * p.beta)


def projected_braking_distance(st: PairState, p: ModelParams) -> float:
    """Room left for the follower to stop at the minimum jam spacing."""
    return _b_tilde(st.v, st.v_leader, st.z, p)


def projected_braking_distance_simplified(st: PairState, p: ModelParams) -> float:
    """Closed form valid only for ``tau_react2 == tau_react / 2``."""
    return st.z - 0.5 * st.v * p.tau_react - p.zeta_min + st.v_leader**2 / (2.0 * p.beta_leader)


def _comfort_braking(v: float, b_tilde: float, beta: float) -> float:
    if b_tilde < 0:
        raise ArithmeticError(f"negative projected braking distance {b_tilde!r}: state is not in comfort braking")
    if v == 0.0:
        # the stopped follower holds, including the b_tilde == 0 case
        return 0.0
    if b_tilde == 0.0:
        # v*v underflowed on the z = phi_prime boundary, where the law equals -beta
        return -beta
    return -v * v / (2.0 * b_tilde)


def comfort_braking_accel(st: PairState, p: ModelParams) -> float:
    return _comfort_braking(st.v, projected_braking_distance(st, p), p.beta)


def _mpp(v: float, v_leader: float, z: float, p: ModelParams) -> ControlDecision:
    phase = classify_vz(v, v_leader, z, p)
    if phase.kind is PhaseKind.NOMINAL:
        return ControlDecision(_bda_newell(v, z, p), phase)
    if phase is COMFORT_BRAKING:
        b = _b_tilde(v, v_leader, z, p)
        return ControlDecision(_comfort_braking(v, b, p.beta), phase, b)
    # no law is defined outside the two safe phases: brake fully and flag it
    return ControlDecision(-p.beta, phase, violation=True)


def mpp_accel(st: PairState, p: ModelParams) -> ControlDecision:
    return _mpp(st.v, st.v_leader, st.z, p)


def _as_decision(law):
    def decide(v, v_leader, z, p):
        st = PairState.from_spacing(v, v_leader, z)
        return ControlDecision(law(st, p), classify_vz(v, v_leader, z, p))

    return decide


# Scalar decision functions keyed by controller name: (v, v_leader, z, params) -> ControlDecision.
CONTROLLERS = {
    "mpp": _mpp,
    "bda_newell": _as_decision(bda_newell_accel),
    "newell": _as_decision(newell_accel),
}
