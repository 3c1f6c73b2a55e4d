"""Closed-form oracles.

* The braking profile behind a stationary leader, parametrized by the speed
  ``v0`` at which comfort braking begins.
* The extended triangular fundamental diagram of homogeneous steady states.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .core import ModelParams, PairState


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class SlvpSolution:
    """Stationary-leader braking profile entered at speed ``v0`` on the comfort boundary."""

    v0: float
    params: ModelParams

    def __post_init__(self):
        if not self.v0 > 0:
            raise DomainError("v0 must be positive")

    @property
    def c(self) -> float:
        p = self.params
        return 2.0 * (p.zeta - p.zeta_min) / self.v0**2 + 1.0 / p.beta

    @property
    def quad_coeff(self) -> float:
        """Coefficient of ``v**2`` in the spacing and braking-distance profiles."""
        p = self.params
        return (p.zeta - p.zeta_min) / self.v0**2 + 1.0 / (2.0 * p.beta)

    @classmethod
    def from_entry(cls, st: PairState, p: ModelParams) -> "SlvpSolution":
        return cls(st.v, p)

    def _check(self, v):
        v = np.asarray(v, dtype=float)
        # tolerate rounding at the entry speed
        if np.any(v < 0) or np.any(v > self.v0 * (1 + 1e-12)):
            raise DomainError(f"speed outside [0, {self.v0}]")
        return v


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def slvp_accel(sol: SlvpSolution, v):
    v = sol._check(v)
    return _out(-v / (sol.params.tau_react + sol.c * v))


def slvp_jerk(sol: SlvpSolution, v):
    v = sol._check(v)
    tr = sol.params.tau_react
    return _out(tr * v / (tr + sol.c * v) ** 3)


def slvp_braking_distance(sol: SlvpSolution, v):
    v = sol._check(v)
    return _out(0.5 * sol.params.tau_react * v + sol.quad_coeff * v * v)


def slvp_spacing(sol: SlvpSolution, v):
    v = sol._check(v)
    p = sol.params
    return _out(p.zeta_min + p.tau_react * v + sol.quad_coeff * v * v)


def write_slvp_csv(sol: SlvpSolution, fh, points: int = 101) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["v", "a", "jerk", "b_tilde", "z"])
    for v in np.linspace(0.0, sol.v0, points):
        w.writerow([repr(float(x)) for x in (
            v, slvp_accel(sol, v), slvp_jerk(sol, v), slvp_braking_distance(sol, v), slvp_spacing(sol, v))])


@dataclass(frozen=True)
class FdPoint:
    k: float
    v: float
    q: float


def _check_density(k, p: ModelParams, allow_zero: bool):
    k = np.asarray(k, dtype=float)
    k_max = 1.0 / p.zeta_min
    low_ok = (k >= 0) if allow_zero else (k > 0)
    if not np.all(low_ok & (k <= k_max * (1 + 1e-12))):
        raise DomainError(f"density outside {'[' if allow_zero else '('}0, {k_max}]")
    return k


def fd_speed(k, p: ModelParams):
    k = _check_density(k, p, allow_zero=False)
    return _out(np.maximum(0.0, np.minimum(p.mu, (1.0 / k - p.zeta) / p.tau)))


def fd_flow(k, p: ModelParams):
    k = _check_density(k, p, allow_zero=True)
    return _out(np.maximum(0.0, np.minimum(p.mu * k, (1.0 - k * p.zeta) / p.tau)))


def fd_capacity(p: ModelParams) -> FdPoint:
    """Intersection of the free-flow and congested branches."""
    k = 1.0 / (p.zeta + p.tau * p.mu)
    return FdPoint(k, p.mu, p.mu * k)


def fd_table(p: ModelParams, points: int) -> list:
    """``points`` densities evenly spread over ``(0, 1/zeta_min]``."""
    k_max = 1.0 / p.zeta_min
    ks = np.arange(1, points + 1) * (k_max / points)
    ks[-1] = k_max
    return [FdPoint(float(k), float(fd_speed(k, p)), float(fd_flow(k, p))) for k in ks]


def write_fd_csv(table, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["k", "v", "q"])
    for pt in table:
        w.writerow([repr(pt.k), repr(pt.v), repr(pt.q)])
