"""Projected braking trajectories of a leader/follower pair.

At time ``t`` the leader is projected to brake at a constant rate ``beta_leader``
until it stops, and the follower to hold its speed for ``tau_react`` and then
brake at ``beta``. All position functions accept a scalar or an array of
projected times ``t_prime`` (``math.inf`` gives the stopping position).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import ModelParams, PairState

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class LemmaCase(str, enum.Enum):
    COND1 = "cond1"
    COND2 = "cond2"
    COND3 = "cond3"
    OPPOSITE1 = "opposite1"
    OPPOSITE2 = "opposite2"
    UNCLASSIFIED = "unclassified"

    @property
    def predicts_min_at_ends(self) -> bool:
        return self in (LemmaCase.COND1, LemmaCase.COND2, LemmaCase.COND3)


@dataclass(frozen=True)
class ProjectionInputs:
    v: float
    v_leader: float
    z: float
    beta: float
    beta_leader: float
    tau_react: float

    def __post_init__(self):
        if not (self.v >= 0 and self.v_leader >= 0):
            raise ValueError("speeds must be non-negative")
        if not (self.beta > 0 and self.beta_leader > 0):
            raise ValueError("beta and beta_leader must be positive")
        if not self.tau_react >= 0:
            raise ValueError("tau_react must be non-negative")

    @classmethod
    def from_state(cls, st: PairState, p: ModelParams) -> "ProjectionInputs":
        return cls(st.v, st.v_leader, st.z, p.beta, p.beta_leader, p.tau_react)

    @property
    def leader_stop_time(self) -> float:
        return self.v_leader / self.beta_leader

    @property
    def follower_stop_time(self) -> float:
        return self.tau_react + self.v / self.beta

    @property
    def horizon(self) -> float:
        """Elapsed time after which both projected vehicles are at rest."""
        return max(self.follower_stop_time, self.leader_stop_time)


def _elapsed(origin: PairState, t_prime):
    dt = np.asarray(t_prime, dtype=float) - origin.t
    if np.any(dt < 0):
        raise ValueError("t_prime must not precede the origin time")
    return dt


def _leader_travel(s: ProjectionInputs, dt):
    # clip(.., 0, stop) makes the parabola continue as a constant after the stop
    u = np.minimum(dt, s.leader_stop_time)
    return s.v_leader * u - 0.5 * s.beta_leader * u * u


def _follower_travel(s: ProjectionInputs, dt):
    u1 = np.minimum(dt, s.tau_react)
    u2 = np.clip(dt - s.tau_react, 0.0, s.v / s.beta)
    return s.v * (u1 + u2) - 0.5 * s.beta * u2 * u2


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def projected_leader_pos(s: ProjectionInputs, origin: PairState, t_prime):
    """Projected leader position; speeds come from ``s``, time and position from ``origin``."""
    return _scalar(origin.x_leader + _leader_travel(s, _elapsed(origin, t_prime)))


def projected_follower_pos(s: ProjectionInputs, origin: PairState, t_prime):
    return _scalar(origin.x_follower + _follower_travel(s, _elapsed(origin, t_prime)))


def projected_spacing(s: ProjectionInputs, origin: PairState, t_prime):
    dt = _elapsed(origin, t_prime)
    return _scalar(s.z + _leader_travel(s, dt) - _follower_travel(s, dt))


def projected_stop_spacing(s: ProjectionInputs, z: float = None) -> float:
    """Spacing once both projected vehicles are at rest."""
    z = s.z if z is None else z
    return (
        z
        - s.v * s.tau_react
        + s.v_leader**2 / (2.0 * s.beta_leader)
        - s.v**2 / (2.0 * s.beta)
    )


def classify_lemma_case(s: ProjectionInputs) -> LemmaCase:
    """Which projected-spacing case applies, checked in the order of :class:`LemmaCase`.

    The third case requires the follower to be no faster than the leader once its
    reaction time has elapsed, ``v <= v_leader - beta_leader * tau_react``.
    """
    if s.beta <= s.beta_leader:
        return LemmaCase.COND1
    stops_later = s.follower_stop_time >= s.leader_stop_time
    if stops_later:
        return LemmaCase.COND2
    if s.v < s.v_leader and s.tau_react + s.v / s.beta_leader <= s.leader_stop_time:
        return LemmaCase.COND3
    if s.v >= s.v_leader:
        return LemmaCase.OPPOSITE1
    if s.v > s.v_leader - s.beta_leader * s.tau_react:
        return LemmaCase.OPPOSITE2
    return LemmaCase.UNCLASSIFIED


def _golden_min(f, lo: float, hi: float, tol: float = 1e-12, max_iter: int = 200):
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol * max(1.0, abs(a)):
            break
        # ties can only occur on the flat tail after both stops: the minimum lies left
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def min_projected_spacing_bruteforce(s: ProjectionInputs, origin: PairState, grid_dt: float = 0.01):
    """Minimum of the projected spacing over all future projected times.

    Samples ``[t, t + horizon + grid_dt]`` on a uniform grid, then refines once by
    golden-section search on the two cells around the best grid point.
    Returns ``(min_value, argmin_t_prime)``.
    """
    if not grid_dt > 0:
        raise ValueError("grid_dt must be positive")
    end = s.horizon + grid_dt
    n = int(math.ceil(end / grid_dt)) + 1
    elapsed = np.arange(n) * grid_dt
    values = s.z + _leader_travel(s, elapsed) - _follower_travel(s, elapsed)
    k = int(np.argmin(values))
    best_dt, best = float(elapsed[k]), float(values[k])

    lo = elapsed[max(k - 1, 0)]
    hi = elapsed[min(k + 1, n - 1)]
    if hi > lo:
        vl, bl, tl = s.v_leader, s.beta_leader, s.leader_stop_time
        v, b, tr, tf = s.v, s.beta, s.tau_react, s.v / s.beta

        def f(u):
            ul = min(u, tl)
            u1 = min(u, tr)
            u2 = min(max(u - tr, 0.0), tf)
            return s.z + (vl * ul - 0.5 * bl * ul * ul) - (v * (u1 + u2) - 0.5 * b * u2 * u2)

        u, fu = _golden_min(f, float(lo), float(hi))
        if fu < best:
            best_dt, best = u, fu
    return best, origin.t + best_dt
