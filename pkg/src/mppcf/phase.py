"""Speed-spacing phase boundaries and classification.

The plane of (follower speed, spacing) for a given leader speed is split into
nominal driving, comfort braking, emergency braking and collision by the two
quadratic boundary curves :func:`phi` and :func:`phi_prime`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    COLLISION,
    COMFORT_BRAKING,
    EMERGENCY_BRAKING,
    NOMINAL,
    ModelParams,
    NominalSubPhase,
    Phase,
)


@dataclass(frozen=True)
class PhasePoint:
    v: float
    v_leader: float
    z: float

    def __post_init__(self):
        if not (self.v >= 0 and self.v_leader >= 0):
            raise ValueError("speeds must be non-negative")


def projected_jam_spacing(v_leader, jam: float, p: ModelParams):
    """``jam`` reduced by the projected stopping distance of the leader (may be negative)."""
    return jam - v_leader**2 / (2.0 * p.beta_leader)


def phi(v, v_leader, p: ModelParams):
    """Spacing needed to stop at the comfort jam spacing behind a braking leader."""
    return projected_jam_spacing(v_leader, p.zeta, p) + v * p.tau_react + v**2 / (2.0 * p.beta)


def phi_prime(v, v_leader, p: ModelParams):
    """Spacing needed to stop at the minimum jam spacing behind a braking leader."""
    return projected_jam_spacing(v_leader, p.zeta_min, p) + v * p.tau_react2 + v**2 / (2.0 * p.beta)


def newell_target_speed(z: float, p: ModelParams) -> float:
    """Planned speed ``min(mu, (z - zeta)/tau)``; negative inside the comfort jam spacing."""
    return min(p.mu, (z - p.zeta) / p.tau)


def nominal_sub_phase(v: float, z: float, p: ModelParams) -> NominalSubPhase:
    """Which term of the bounded Newell law is active.

    Ties between the acceleration cap and the Newell relaxation term go to the
    equilibrium sub-phase; a relaxation term at or below ``-beta`` is bounded
    deceleration.
    """
    accel_cap = p.alpha * (1.0 - v / p.mu)
    target = newell_target_speed(z, p)
    relax = (target - v) / p.dt
    if min(accel_cap, relax) <= -p.beta:
        return NominalSubPhase.BOUNDED_DECEL
    if accel_cap < relax:
        return NominalSubPhase.BOUNDED_ACCEL
    if target > v:
        return NominalSubPhase.EQUILIBRIUM_ACCEL
    if target < v:
        return NominalSubPhase.EQUILIBRIUM_DECEL
    return NominalSubPhase.EQUILIBRIUM_CRUISE


def classify_vz(v: float, v_leader: float, z: float, p: ModelParams) -> Phase:
    """:func:`classify` on bare floats (the simulator hot path)."""
    if z < p.zeta_min:
        return COLLISION
    if z >= max(p.zeta, phi(v, v_leader, p)):
        return NOMINAL[nominal_sub_phase(v, z, p)]
    if z >= phi_prime(v, v_leader, p):
        return COMFORT_BRAKING
    return EMERGENCY_BRAKING


def classify(pt: PhasePoint, p: ModelParams) -> Phase:
    return classify_vz(pt.v, pt.v_leader, pt.z, p)


@dataclass
class PhaseMap:
    """Row-major grid of phases: ``phases[i][j]`` is at ``(v[i], z[j])``."""

    v: np.ndarray
    z: np.ndarray
    v_leader: float
    phases: list

    def to_rows(self):
        for i, v in enumerate(self.v):
            for j, z in enumerate(self.z):
                yield float(v), float(z), self.v_leader, self.phases[i][j].name

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["v", "z", "v_leader", "phase"])
        for v, z, vl, name in self.to_rows():
            w.writerow([repr(v), repr(z), repr(float(vl)), name])


def _axis(bounds: Sequence[float], n: int) -> np.ndarray:
    lo, hi = float(bounds[0]), float(bounds[1])
    if n < 1:
        raise ValueError("grid needs at least one point per axis")
    if n == 1:
        return np.array([lo])
    if not hi > lo:
        raise ValueError("range must be non-degenerate")
    return np.linspace(lo, hi, n)


def phase_map(v_range, z_range, nv: int, nz: int, v_leader: float, p: ModelParams) -> PhaseMap:
    vs = _axis(v_range, nv)
    zs = _axis(z_range, nz)
    phases = [[classify_vz(float(v), v_leader, float(z), p) for z in zs] for v in vs]
    return PhaseMap(vs, zs, float(v_leader), phases)
