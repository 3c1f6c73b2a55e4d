"""Fixed-step integration of leader/follower pairs and platoons.

The update is ``v+ = v + dt*a`` followed by ``x+ = x + dt*v+`` (position from the
*new* speed). Speeds are clipped at zero as a simulator guard; the clip is
recorded so monitors can report when it fires.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import (
    ALL_PHASES,
    COMFORT_BRAKING,
    PHASE_CODES,
    ModelParams,
    PairState,
    PhaseKind,
    Trajectory,
    validate_params,
)
from .models import CONTROLLERS
from .phase import phi, phi_prime

STOP_SPEED = 1e-6
STOP_HOLD = 1.0

SAFE_CODES = np.array([PHASE_CODES[ph] for ph in ALL_PHASES if ph.is_safe])
NOMINAL_CODES = np.array([PHASE_CODES[ph] for ph in ALL_PHASES if ph.kind is PhaseKind.NOMINAL])

MONITORS = ("safety", "forward", "bounded", "fd_consistency", "transition", "clip")


class SimulationAbort(RuntimeError):
    """Non-finite state encountered; ``step`` is the offending step index."""

    def __init__(self, step: int, t: float, detail: str):
        super().__init__(f"non-finite state at step {step} (t={t!r}): {detail}")
        self.step = step
        self.t = t


# Leader profiles ----------------------------------------------------------------


@dataclass(frozen=True)
class Stationary:
    compliant: bool = True

    def initial_speed(self, v: float) -> float:
        return 0.0

    def accel(self, t: float, v_leader: float, p: ModelParams) -> float:
        return 0.0


@dataclass(frozen=True)
class ConstantSpeed:
    v: float
    compliant: bool = True

    def __post_init__(self):
        if not self.v >= 0:
            raise ValueError("leader speed must be non-negative")

    def initial_speed(self, v: float) -> float:
        return self.v

    def accel(self, t: float, v_leader: float, p: ModelParams) -> float:
        return 0.0


@dataclass(frozen=True)
class PiecewiseBraking:
    """Piecewise-constant leader deceleration.

    ``segments`` is a list of ``(t_start, decel)``; a positive ``decel`` brakes,
    a negative one accelerates. Before the first ``t_start`` the leader cruises.
    A compliant profile never brakes harder than ``beta_leader``.
    """

    segments: tuple
    compliant: bool = True

    def __post_init__(self):
        segs = tuple((float(t0), float(d)) for t0, d in self.segments)
        if any(b[0] < a[0] for a, b in zip(segs, segs[1:])):
            raise ValueError("segment start times must be non-decreasing")
        object.__setattr__(self, "segments", segs)

    def initial_speed(self, v: float) -> float:
        return v

    def accel(self, t: float, v_leader: float, p: ModelParams) -> float:
        decel = 0.0
        for t0, d in self.segments:
            if t + 1e-12 >= t0:
                decel = d
            else:
                break
        if self.compliant:
            decel = min(decel, p.beta_leader)
        return -decel


@dataclass(frozen=True)
class Recorded:
    """Leader tracks a recorded speed series (linear interpolation, held at the ends)."""

    times: tuple
    speeds: tuple
    compliant: bool = True

    def __post_init__(self):
        if len(self.times) != len(self.speeds) or len(self.times) < 1:
            raise ValueError("times and speeds must be non-empty and of equal length")
        if any(s < 0 for s in self.speeds):
            raise ValueError("recorded speeds must be non-negative")
        object.__setattr__(self, "times", tuple(float(x) for x in self.times))
        object.__setattr__(self, "speeds", tuple(float(x) for x in self.speeds))

    def initial_speed(self, v: float) -> float:
        return self.speeds[0]

    def accel(self, t: float, v_leader: float, p: ModelParams) -> float:
        target = float(np.interp(t + p.dt, self.times, self.speeds))
        a = (target - v_leader) / p.dt
        if self.compliant:
            a = max(a, -p.beta_leader)
        return a


LeaderProfile = object  # any of the profile classes above


@dataclass(frozen=True)
class ScenarioConfig:
    params: ModelParams = field(default_factory=ModelParams)
    initial: PairState = field(default_factory=lambda: PairState(0.0, 0.0, 2500.0, 0.0, 0.0))
    leader: LeaderProfile = field(default_factory=Stationary)
    duration: float = 140.0
    controller: str = "mpp"
    monitors: tuple = MONITORS
    stride: int = 1
    stop_detection: bool = True

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if not (isinstance(self.stride, int) and self.stride >= 1):
            raise ValueError("stride must be an integer >= 1")
        if self.controller not in CONTROLLERS:
            raise ValueError(f"unknown controller {self.controller!r}; expected one of {sorted(CONTROLLERS)}")
        unknown = set(self.monitors) - set(MONITORS)
        if unknown:
            raise ValueError(f"unknown monitors {sorted(unknown)}")


@dataclass(frozen=True)
class MonitorResult:
    passed: bool
    first_violation_t: Optional[float]
    worst_margin: float
    applicable: bool = True


@dataclass(frozen=True)
class MonitorReport:
    results: dict

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    def __getitem__(self, name: str) -> MonitorResult:
        return self.results[name]

    def to_dict(self) -> dict:
        return {
            name: {
                "passed": r.passed,
                "first_violation_t": r.first_violation_t,
                "worst_margin": r.worst_margin,
                "applicable": r.applicable,
            }
            for name, r in self.results.items()
        }


# Integration --------------------------------------------------------------------


def step(st: PairState, a: float, a_leader: float, p: ModelParams) -> PairState:
    v = max(0.0, st.v + p.dt * a)
    vl = max(0.0, st.v_leader + p.dt * a_leader)
    return PairState(
        t=st.t + p.dt,
        x_follower=st.x_follower + p.dt * v,
        x_leader=st.x_leader + p.dt * vl,
        v=v,
        v_leader=vl,
    )


@dataclass
class _ChainRecord:
    t: list
    x: list  # per vehicle lists
    v: list
    a: list  # per follower
    phase: list
    violation: list
    pre_clip: list


def _simulate_chain(p, controller, leader, t0, x0, v0, n_steps, stop_detection):
    """Integrate a head vehicle driven by ``leader`` and ``len(x0) - 1`` followers."""
    decide = CONTROLLERS[controller]
    dt = p.dt
    n = len(x0)
    x = [float(xi) for xi in x0]
    v = [float(vi) for vi in v0]
    rec = _ChainRecord(
        t=[], x=[[] for _ in range(n)], v=[[] for _ in range(n)],
        a=[[] for _ in range(n - 1)], phase=[[] for _ in range(n - 1)],
        violation=[[] for _ in range(n - 1)], pre_clip=[[] for _ in range(n - 1)],
    )
    hold_steps = int(round(STOP_HOLD / dt))
    still = 0
    for k in range(n_steps + 1):
        t = t0 + k * dt
        rec.t.append(t)
        accel = []
        for i in range(n):
            rec.x[i].append(x[i])
            rec.v[i].append(v[i])
        for i in range(1, n):
            try:
                d = decide(v[i], v[i - 1], x[i - 1] - x[i], p)
            except OverflowError as exc:
                raise SimulationAbort(k, t, f"vehicle {i}: controller overflow ({exc})") from exc
            if not math.isfinite(d.a):
                raise SimulationAbort(k, t, f"vehicle {i}: acceleration {d.a!r}")
            accel.append(d.a)
            rec.a[i - 1].append(d.a)
            rec.phase[i - 1].append(PHASE_CODES[d.phase])
            rec.violation[i - 1].append(d.violation)
        if k == n_steps:
            break
        a_head = leader.accel(t, v[0], p)
        v[0] = max(0.0, v[0] + dt * a_head)
        x[0] += dt * v[0]
        for i in range(1, n):
            vn = v[i] + dt * accel[i - 1]
            rec.pre_clip[i - 1].append(vn)
            v[i] = vn if vn > 0.0 else 0.0
            x[i] += dt * v[i]
        for i in range(n):
            if not (math.isfinite(x[i]) and math.isfinite(v[i])):
                raise SimulationAbort(k + 1, t + dt, f"vehicle {i}: x={x[i]!r}, v={v[i]!r}")
        if stop_detection:
            still = still + 1 if max(v) < STOP_SPEED else 0
            if still >= hold_steps:
                # record the final state and stop
                stop_detection = False
                n_steps = k + 1
    return rec


def _pair_trajectory(p, rec, i):
    """Pair trajectory of follower ``i`` (1-based) behind vehicle ``i - 1``."""
    pre = np.array(rec.pre_clip[i - 1] + [np.nan])
    traj = Trajectory(
        params=p,
        t=np.array(rec.t),
        x_follower=np.array(rec.x[i]),
        x_leader=np.array(rec.x[i - 1]),
        v=np.array(rec.v[i]),
        v_leader=np.array(rec.v[i - 1]),
        a=np.array(rec.a[i - 1]),
        phase=np.array(rec.phase[i - 1], dtype=np.int8),
        violation=np.array(rec.violation[i - 1], dtype=bool),
        clipped=pre < 0,
    )
    return traj, pre


def _first_t(t, bad):
    idx = np.flatnonzero(bad)
    return float(t[idx[0]]) if idx.size else None


def evaluate_monitors(traj: Trajectory, pre_clip: np.ndarray, names: Sequence[str],
                      leader_compliant: bool = True) -> MonitorReport:
    """Evaluate invariant monitors on a full-resolution trajectory.

    ``pre_clip[k]`` is the follower speed after step ``k`` before the zero clip
    (NaN for the last sample).
    """
    p = traj.params
    t, v, vl, z, a = traj.t, traj.v, traj.v_leader, traj.z, traj.a
    out = {}
    safe_start = z[0] >= max(p.zeta_min, phi_prime(v[0], vl[0], p))
    phase_safe = np.isin(traj.phase, SAFE_CODES)
    for name in names:
        if name == "safety":
            tol = 10.0 * p.dt * p.mu
            margin = np.minimum(z - p.zeta_min, z - phi_prime(v, vl, p))
            applicable = bool(safe_start and leader_compliant)
            bad = margin < -tol
            worst = float(margin.min())
            out[name] = MonitorResult(not (applicable and bad.any()), _first_t(t, bad), worst, applicable)
        elif name == "forward":
            pre = pre_clip[:-1]
            margin = np.minimum(v, np.append(pre + p.dt * p.beta, np.inf))
            bad = margin < 0
            out[name] = MonitorResult(not bad.any(), _first_t(t, bad), float(margin.min()))
        elif name == "bounded":
            ok = ~traj.violation
            margin = np.minimum(a + p.beta + 1e-12, p.alpha + 1e-12 - a)
            margin = np.where(ok, margin, np.inf)
            bad = margin < 0
            out[name] = MonitorResult(not bad.any(), _first_t(t, bad), float(margin.min()))
        elif name == "fd_consistency":
            if len(t) < 2:
                out[name] = MonitorResult(True, None, math.inf)
                continue
            fd = np.diff(v) / p.dt
            err = np.abs(fd - a[:-1])
            err = np.where(traj.clipped[:-1], 0.0, err)
            tol = 1e-9 * np.maximum(1.0, np.abs(a[:-1]))
            margin = tol - err
            bad = np.append(margin < 0, False)
            out[name] = MonitorResult(not bad.any(), _first_t(t, bad), float(margin.min()))
        elif name == "transition":
            applicable = leader_compliant
            if len(t) < 2:
                out[name] = MonitorResult(True, None, math.inf, applicable)
                continue
            into_unsafe = phase_safe[:-1] & ~phase_safe[1:]
            margin_next = np.minimum(z[1:] - p.zeta_min, z[1:] - phi_prime(v[1:], vl[1:], p))
            margin = np.where(phase_safe[:-1], margin_next, np.inf)
            bad = np.append(False, into_unsafe)
            out[name] = MonitorResult(not (applicable and bad.any()), _first_t(t, bad),
                                      float(margin.min()), applicable)
        elif name == "clip":
            applicable = bool(safe_start)
            pre = pre_clip[:-1]
            bad = np.append(pre < 0, False)
            worst = float(pre.min()) if pre.size else math.inf
            out[name] = MonitorResult(not (applicable and bad.any()), _first_t(t, bad), worst, applicable)
    return MonitorReport(out)


def _n_steps(duration: float, dt: float) -> int:
    return max(1, int(round(duration / dt)))


def run(cfg: ScenarioConfig):
    """Run a single pair; returns ``(Trajectory, MonitorReport)``."""
    p = validate_params(cfg.params)
    st = cfg.initial
    vl0 = cfg.leader.initial_speed(st.v_leader)
    rec = _simulate_chain(p, cfg.controller, cfg.leader, st.t, [st.x_leader, st.x_follower],
                          [vl0, st.v], _n_steps(cfg.duration, p.dt), cfg.stop_detection)
    traj, pre = _pair_trajectory(p, rec, 1)
    report = evaluate_monitors(traj, pre, cfg.monitors, cfg.leader.compliant)
    return traj.slice(slice(None, None, cfg.stride)), report


def run_platoon(n: int, cfg: ScenarioConfig, spacing_init: float, with_reports: bool = False):
    """Run ``n`` vehicles: vehicle 0 follows the leader profile, vehicle ``i`` follows ``i - 1``.

    Every initial gap equals ``spacing_init``; the head starts at
    ``cfg.initial.x_leader`` with the profile's initial speed and all followers at
    ``cfg.initial.v``. Returns the ``n - 1`` pair trajectories, front to back (and
    their monitor reports when ``with_reports`` is set).
    """
    if n < 2:
        raise ValueError("a platoon needs at least two vehicles")
    p = validate_params(cfg.params)
    st = cfg.initial
    x0 = [st.x_leader - i * spacing_init for i in range(n)]
    v0 = [cfg.leader.initial_speed(st.v_leader)] + [st.v] * (n - 1)
    rec = _simulate_chain(p, cfg.controller, cfg.leader, st.t, x0, v0,
                          _n_steps(cfg.duration, p.dt), cfg.stop_detection)
    trajs, reports = [], []
    for i in range(1, n):
        traj, pre = _pair_trajectory(p, rec, i)
        if with_reports:
            reports.append(evaluate_monitors(traj, pre, cfg.monitors, cfg.leader.compliant))
        trajs.append(traj.slice(slice(None, None, cfg.stride)))
    return (trajs, reports) if with_reports else trajs


def braking_entry(traj: Trajectory) -> Optional[int]:
    """Index of the first comfort-braking sample that directly follows a nominal one."""
    nominal = np.isin(traj.phase, NOMINAL_CODES)
    braking = traj.phase == PHASE_CODES[COMFORT_BRAKING]
    idx = np.flatnonzero(nominal[:-1] & braking[1:])
    return int(idx[0]) + 1 if idx.size else None


def braking_entry_state(traj: Trajectory) -> Optional[PairState]:
    """State at the nominal-to-comfort-braking switch.

    The boundary ``z = max(zeta, phi)`` is crossed between two samples; the
    crossing is located by linear interpolation of ``z - max(zeta, phi)``.
    """
    i = braking_entry(traj)
    if i is None:
        return None
    p = traj.params
    gap = traj.z[i - 1:i + 1] - np.maximum(p.zeta, phi(traj.v[i - 1:i + 1], traj.v_leader[i - 1:i + 1], p))
    w = float(gap[0] / (gap[0] - gap[1]))

    def lerp(arr):
        return float(arr[i - 1] + w * (arr[i] - arr[i - 1]))

    return PairState(lerp(traj.t), lerp(traj.x_follower), lerp(traj.x_leader), lerp(traj.v), lerp(traj.v_leader))


TRAJECTORY_HEADER = ["t", "x_follower", "x_leader", "v", "v_leader", "z", "a", "phase"]


def write_trajectory_csv(traj: Trajectory, fh) -> None:
    """CSV with shortest round-trip float formatting."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TRAJECTORY_HEADER)
    z = traj.z
    names = traj.phase_names()
    for i in range(len(traj)):
        w.writerow([
            repr(float(traj.t[i])), repr(float(traj.x_follower[i])), repr(float(traj.x_leader[i])),
            repr(float(traj.v[i])), repr(float(traj.v_leader[i])), repr(float(z[i])),
            repr(float(traj.a[i])), names[i],
        ])


# Vectorized batch of independent pairs -------------------------------------------


@dataclass
class BatchStats:
    """Aggregates of a batch run of the projection-based law (one entry per pair)."""

    min_accel: np.ndarray
    max_accel: np.ndarray
    min_speed: np.ndarray
    min_safety_margin: np.ndarray
    unsafe_transitions: np.ndarray
    fallback_steps: np.ndarray
    clip_steps: np.ndarray
    final_v: np.ndarray
    final_v_leader: np.ndarray
    final_z: np.ndarray


def mpp_accel_batch(v, vl, z, p: ModelParams):
    """Vectorized projection-based law; returns ``(a, phase_kind_code, violation)``.

    Phase kind codes: 0 nominal, 1 comfort braking, 2 emergency braking, 3 collision.
    """
    vl_stop = vl * vl / (2.0 * p.beta_leader)
    brake = v * v / (2.0 * p.beta)
    big_phi = p.zeta - vl_stop + v * p.tau_react + brake
    small_phi = p.zeta_min - vl_stop + v * p.tau_react2 + brake
    nominal = z >= np.maximum(p.zeta, big_phi)
    collision = z < p.zeta_min
    comfort = ~nominal & ~collision & (z >= small_phi)
    target = np.minimum(p.mu, (z - p.zeta) / p.tau)
    a_nom = np.maximum(-p.beta, np.minimum(p.alpha * (1.0 - v / p.mu), (target - v) / p.dt))
    b_tilde = z - small_phi + brake
    safe_b = np.where(comfort & (v > 0) & (b_tilde > 0), b_tilde, 1.0)
    a_cb = np.where(v > 0, np.where(b_tilde > 0, -v * v / (2.0 * safe_b), -p.beta), 0.0)
    a = np.where(nominal, a_nom, np.where(comfort, a_cb, -p.beta))
    kind = np.where(nominal, 0, np.where(comfort, 1, np.where(collision, 3, 2)))
    return a, kind, kind >= 2


def run_batch(p: ModelParams, v, v_leader, z, leader_accel: Callable, n_steps: int) -> BatchStats:
    """Integrate many independent pairs of the projection-based law in lock-step.

    ``leader_accel(k, t, v_leader)`` returns the leader accelerations for step
    ``k`` as an array. Uses the same update order as :func:`run`.
    """
    v = np.array(v, dtype=float)
    vl = np.array(v_leader, dtype=float)
    z = np.array(z, dtype=float)
    n = v.size
    dt = p.dt
    inf = np.full(n, np.inf)
    stats = dict(
        min_accel=inf.copy(), max_accel=-inf.copy(), min_speed=v.copy(),
        min_safety_margin=inf.copy(), unsafe_transitions=np.zeros(n, dtype=np.int64),
        fallback_steps=np.zeros(n, dtype=np.int64), clip_steps=np.zeros(n, dtype=np.int64),
    )

    def margin(v, vl, z):
        return np.minimum(z - p.zeta_min, z - (p.zeta_min - vl * vl / (2.0 * p.beta_leader)
                                              + v * p.tau_react2 + v * v / (2.0 * p.beta)))

    stats["min_safety_margin"] = margin(v, vl, z)
    a, kind, viol = mpp_accel_batch(v, vl, z, p)
    for k in range(n_steps):
        ok = ~viol
        stats["min_accel"] = np.where(ok, np.minimum(stats["min_accel"], a), stats["min_accel"])
        stats["max_accel"] = np.where(ok, np.maximum(stats["max_accel"], a), stats["max_accel"])
        stats["fallback_steps"] += viol
        al = leader_accel(k, k * dt, vl)
        vl = np.maximum(0.0, vl + dt * al)
        vn = v + dt * a
        stats["clip_steps"] += vn < 0
        v = np.maximum(0.0, vn)
        z = z + dt * (vl - v)
        was_safe = kind <= 1
        a, kind, viol = mpp_accel_batch(v, vl, z, p)
        stats["unsafe_transitions"] += was_safe & (kind >= 2)
        stats["min_speed"] = np.minimum(stats["min_speed"], v)
        stats["min_safety_margin"] = np.minimum(stats["min_safety_margin"], margin(v, vl, z))
    ok = ~viol
    stats["min_accel"] = np.where(ok, np.minimum(stats["min_accel"], a), stats["min_accel"])
    stats["max_accel"] = np.where(ok, np.maximum(stats["max_accel"], a), stats["max_accel"])
    return BatchStats(final_v=v, final_v_leader=vl, final_z=z, **stats)
