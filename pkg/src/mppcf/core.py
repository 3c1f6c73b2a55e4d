"""Shared domain types, parameter validation and unit helpers.

Everything inside the package works in SI units (m, s, m/s, m/s^2).
Speeds given in km/h are converted at the boundary with :func:`kmh_to_ms`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np


KMH_PER_MS = 3.6


def kmh_to_ms(speed_kmh: float) -> float:
    return speed_kmh / KMH_PER_MS


def ms_to_kmh(speed_ms: float) -> float:
    return speed_ms * KMH_PER_MS


class ParamError(ValueError):
    """A model parameter violates one of its invariants.

    ``invariant`` holds the violated relation, e.g. ``"zeta > zeta_min"``.
    """

    def __init__(self, invariant: str):
        super().__init__(f"{invariant} violated")
        self.invariant = invariant


@dataclass(frozen=True)
class ModelParams:
    """Behavioral parameters of the follower plus the projected leader braking rate.

    Attributes:
        zeta: comfort jam spacing [m].
        zeta_min: minimum jam spacing (vehicle length plus cushion) [m].
        tau: minimum time gap of the nominal (Newell) law [s].
        tau_react: reaction time used in projected braking [s].
        mu: speed limit [m/s].
        alpha: comfort acceleration bound [m/s^2].
        beta: comfort deceleration bound, as a positive magnitude [m/s^2].
        beta_leader: projected deceleration of the leader [m/s^2].
        dt: simulation step; also the small step of the Newell relaxation term [s].
        tau_react2: reaction time inside the minimum-spacing boundary; ``None``
            resolves to ``tau_react / 2``.
    """

    zeta: float = 7.0
    zeta_min: float = 5.0
    tau: float = 1.6
    tau_react: float = 1.0
    mu: float = 120.0 / KMH_PER_MS
    alpha: float = 0.73
    beta: float = 1.67
    beta_leader: float = 1.67
    dt: float = 0.001
    tau_react2: Optional[float] = None

    def __post_init__(self):
        if self.tau_react2 is None:
            object.__setattr__(self, "tau_react2", 0.5 * self.tau_react)

    @property
    def jam_density(self) -> float:
        """Jam density 1/zeta [veh/m]."""
        return 1.0 / self.zeta

    @property
    def critical_spacing(self) -> float:
        return self.tau * self.mu + self.zeta

    def to_dict(self) -> dict:
        return {
            "zeta": self.zeta,
            "zeta_min": self.zeta_min,
            "tau": self.tau,
            "tau_react": self.tau_react,
            "tau_react2": self.tau_react2,
            "mu": self.mu,
            "alpha": self.alpha,
            "beta": self.beta,
            "beta_leader": self.beta_leader,
            "dt": self.dt,
        }


# Default parameter set of the stationary-leader replication run.
REFERENCE_PRESET = ModelParams()
PRESETS = {"paper-5.2": REFERENCE_PRESET}


def validate_params(p: ModelParams, require_beta_order: bool = True) -> ModelParams:
    """Return ``p`` unchanged if every invariant holds, else raise :class:`ParamError`.

    The check order is fixed so the first violated invariant is reported.
    ``require_beta_order`` switches off the ``beta >= beta_leader`` assumption,
    which the projection routines do not need.
    """
    values = p.to_dict()
    for name, value in values.items():
        if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
            raise ParamError(f"{name} is finite")
    checks = [
        ("zeta > zeta_min", p.zeta > p.zeta_min),
        ("zeta_min > 0", p.zeta_min > 0),
        ("tau > 0", p.tau > 0),
        ("tau_react >= 0", p.tau_react >= 0),
        ("tau_react2 >= 0", p.tau_react2 >= 0),
        ("tau_react2 <= tau_react/2", p.tau_react2 <= 0.5 * p.tau_react),
        ("mu > 0", p.mu > 0),
        ("alpha > 0", p.alpha > 0),
        ("beta > 0", p.beta > 0),
        ("beta_leader > 0", p.beta_leader > 0),
        ("dt > 0", p.dt > 0),
    ]
    if require_beta_order:
        checks.append(("beta >= beta_leader", p.beta >= p.beta_leader))
    for invariant, ok in checks:
        if not ok:
            raise ParamError(invariant)
    return p


@dataclass(frozen=True)
class PairState:
    """Follower/leader pair at one instant."""

    t: float
    x_follower: float
    x_leader: float
    v: float
    v_leader: float

    def __post_init__(self):
        if not (self.v >= 0 and self.v_leader >= 0):
            raise ValueError(f"speeds must be non-negative, got v={self.v}, v_leader={self.v_leader}")
        if not math.isfinite(self.x_leader - self.x_follower):
            raise ValueError("spacing must be finite")

    @property
    def z(self) -> float:
        return self.x_leader - self.x_follower

    @classmethod
    def from_spacing(cls, v: float, v_leader: float, z: float, t: float = 0.0) -> "PairState":
        """Follower at the origin, leader ``z`` ahead (keeps ``z`` bit-exact)."""
        return cls(t=t, x_follower=0.0, x_leader=z, v=v, v_leader=v_leader)


class PhaseKind(str, enum.Enum):
    NOMINAL = "nominal"
    COMFORT_BRAKING = "comfort_braking"
    EMERGENCY_BRAKING = "emergency_braking"
    COLLISION = "collision"


class NominalSubPhase(str, enum.Enum):
    BOUNDED_ACCEL = "bounded_accel"
    EQUILIBRIUM_ACCEL = "equilibrium_accel"
    EQUILIBRIUM_CRUISE = "equilibrium_cruise"
    EQUILIBRIUM_DECEL = "equilibrium_decel"
    BOUNDED_DECEL = "bounded_decel"


@dataclass(frozen=True)
class Phase:
    kind: PhaseKind
    sub: Optional[NominalSubPhase] = None

    def __post_init__(self):
        if (self.kind is PhaseKind.NOMINAL) != (self.sub is not None):
            raise ValueError("a nominal sub-phase is required exactly for the nominal phase")

    @property
    def name(self) -> str:
        if self.sub is None:
            return self.kind.value
        return f"{self.kind.value}:{self.sub.value}"

    @property
    def is_safe(self) -> bool:
        """True inside the two phases for which the control law is defined."""
        return self.kind in (PhaseKind.NOMINAL, PhaseKind.COMFORT_BRAKING)

    @classmethod
    def from_name(cls, name: str) -> "Phase":
        kind, _, sub = name.partition(":")
        return cls(PhaseKind(kind), NominalSubPhase(sub) if sub else None)

    def __str__(self) -> str:
        return self.name


COMFORT_BRAKING = Phase(PhaseKind.COMFORT_BRAKING)
EMERGENCY_BRAKING = Phase(PhaseKind.EMERGENCY_BRAKING)
COLLISION = Phase(PhaseKind.COLLISION)
NOMINAL = {sub: Phase(PhaseKind.NOMINAL, sub) for sub in NominalSubPhase}
ALL_PHASES = tuple(NOMINAL.values()) + (COMFORT_BRAKING, EMERGENCY_BRAKING, COLLISION)
PHASE_CODES = {ph: i for i, ph in enumerate(ALL_PHASES)}


@dataclass(frozen=True)
class Sample:
    state: PairState
    a: float
    phase: Phase


@dataclass
class Trajectory:
    """Time-indexed record of a pair run, stored column-wise.

    ``phase`` holds integer codes into :data:`ALL_PHASES`; ``violation`` marks
    steps where the fallback law was applied; ``clipped`` marks steps where the
    follower speed update was clipped at zero.
    """

    params: ModelParams
    t: np.ndarray
    x_follower: np.ndarray
    x_leader: np.ndarray
    v: np.ndarray
    v_leader: np.ndarray
    a: np.ndarray
    phase: np.ndarray
    violation: np.ndarray = field(default=None)
    clipped: np.ndarray = field(default=None)

    def __post_init__(self):
        n = len(self.t)
        if self.violation is None:
            self.violation = np.zeros(n, dtype=bool)
        if self.clipped is None:
            self.clipped = np.zeros(n, dtype=bool)

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, i: int) -> Sample:
        state = PairState(
            t=float(self.t[i]),
            x_follower=float(self.x_follower[i]),
            x_leader=float(self.x_leader[i]),
            v=float(self.v[i]),
            v_leader=float(self.v_leader[i]),
        )
        return Sample(state, float(self.a[i]), ALL_PHASES[int(self.phase[i])])

    def __iter__(self) -> Iterator[Sample]:
        for i in range(len(self)):
            yield self[i]

    @property
    def z(self) -> np.ndarray:
        return self.x_leader - self.x_follower

    @property
    def samples(self) -> list:
        return list(self)

    def phase_names(self) -> list:
        return [ALL_PHASES[c].name for c in self.phase]

    def kind_mask(self, kind: PhaseKind) -> np.ndarray:
        codes = [PHASE_CODES[ph] for ph in ALL_PHASES if ph.kind is kind]
        return np.isin(self.phase, codes)

    def slice(self, sl) -> "Trajectory":
        return Trajectory(
            params=self.params,
            t=self.t[sl],
            x_follower=self.x_follower[sl],
            x_leader=self.x_leader[sl],
            v=self.v[sl],
            v_leader=self.v_leader[sl],
            a=self.a[sl],
            phase=self.phase[sl],
            violation=self.violation[sl],
            clipped=self.clipped[sl],
        )
