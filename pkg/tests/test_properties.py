"""Randomized invariants of the projection, phase and closed-form layers."""

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from mppcf import REFERENCE_PRESET as P
from mppcf import PairState, PhaseKind
from mppcf.analytic import SlvpSolution, slvp_accel, slvp_jerk
from mppcf.models import (
    comfort_braking_accel,
    mpp_accel,
    projected_braking_distance,
    projected_braking_distance_simplified,
)
from mppcf.phase import classify_vz, phi, phi_prime
from mppcf.projection import (
    ProjectionInputs,
    classify_lemma_case,
    min_projected_spacing_bruteforce,
    projected_follower_pos,
    projected_leader_pos,
    projected_spacing,
    projected_stop_spacing,
)
from mppcf.simulator import step

ORIGIN = PairState(0.0, 0.0, 0.0, 0.0, 0.0)
speed = st.floats(0.0, 40.0)
spacing = st.floats(0.0, 400.0)
rate = st.floats(0.5, 6.0)
react = st.floats(0.0, 2.0)


@st.composite
def projections(draw):
    return ProjectionInputs(draw(speed), draw(speed), draw(spacing), draw(rate), draw(rate), draw(react))


@given(speed, speed, spacing)
def test_phases_partition_plane(v, vl, z):
    ph = classify_vz(v, vl, z, P)
    nominal = z >= max(P.zeta, phi(v, vl, P))
    collision = z < P.zeta_min
    comfort = not nominal and not collision and z >= phi_prime(v, vl, P)
    emergency = not (nominal or collision or comfort)
    assert [nominal, comfort, emergency, collision].count(True) == 1
    expected = [PhaseKind.NOMINAL, PhaseKind.COMFORT_BRAKING, PhaseKind.EMERGENCY_BRAKING, PhaseKind.COLLISION]
    assert ph.kind is expected[[nominal, comfort, emergency, collision].index(True)]


@given(speed, speed)
def test_boundary_gap(v, vl):
    gap = phi(v, vl, P) - phi_prime(v, vl, P)
    assert gap == pytest.approx((P.zeta - P.zeta_min) + v * (P.tau_react - P.tau_react2), abs=1e-12)
    assert gap > 0


@given(speed, speed, spacing, st.floats(0.0, 50.0))
def test_more_room_is_never_less_safe(v, vl, z, extra):
    order = {PhaseKind.COLLISION: 0, PhaseKind.EMERGENCY_BRAKING: 1, PhaseKind.COMFORT_BRAKING: 2,
             PhaseKind.NOMINAL: 3}
    assert order[classify_vz(v, vl, z + extra, P).kind] >= order[classify_vz(v, vl, z, P).kind]


@given(speed, speed, st.floats(0.0, 10.0))
def test_boundaries_grow_with_speed(v, vl, dv):
    assert phi(v + dv, vl, P) >= phi(v, vl, P)
    assert phi_prime(v + dv, vl, P) >= phi_prime(v, vl, P)
    assert phi(v, vl + dv, P) <= phi(v, vl, P)


@given(speed, speed, spacing)
def test_braking_distance_forms_agree(v, vl, z):
    s = PairState.from_spacing(v, vl, z)
    assert projected_braking_distance(s, P) == pytest.approx(projected_braking_distance_simplified(s, P), abs=1e-9)


@given(st.floats(0.01, 40.0), speed, st.floats(0.0, 200.0))
def test_comfort_braking_within_bounds(v, vl, extra):
    z = max(P.zeta_min, phi_prime(v, vl, P)) + extra
    assume(classify_vz(v, vl, z, P).kind is PhaseKind.COMFORT_BRAKING)
    a = comfort_braking_accel(PairState.from_spacing(v, vl, z), P)
    assert -P.beta - 1e-12 <= a <= 0.0


@given(speed, speed, spacing)
def test_applied_accel_bounded(v, vl, z):
    d = mpp_accel(PairState.from_spacing(v, vl, z), P)
    assert -P.beta - 1e-12 <= d.a <= P.alpha + 1e-12
    assert d.violation == (not d.phase.is_safe)


@given(projections(), st.lists(st.floats(0.0, 100.0), min_size=2, max_size=6))
def test_projected_positions_monotone(s, times):
    ts = np.sort(np.array(times))
    xl = projected_leader_pos(s, ORIGIN, ts)
    xf = projected_follower_pos(s, ORIGIN, ts)
    assert np.all(np.diff(xl) >= -1e-9)
    assert np.all(np.diff(xf) >= -1e-9)


@given(projections(), st.floats(0.0, 50.0), st.floats(1e-3, 1.0))
def test_projected_speeds_never_increase(s, t, h):
    def spd(f, u):
        return (f(s, ORIGIN, u + h) - f(s, ORIGIN, u)) / h

    for f in (projected_leader_pos, projected_follower_pos):
        assert spd(f, t + h) <= spd(f, t) + 1e-6


@given(projections())
def test_spacing_limit_is_stop_spacing(s):
    assert projected_spacing(s, ORIGIN, math.inf) == pytest.approx(projected_stop_spacing(s), abs=1e-9)
    assert projected_spacing(s, ORIGIN, s.horizon + 5.0) == pytest.approx(projected_stop_spacing(s), abs=1e-9)
    assert projected_spacing(s, ORIGIN, 0.0) == s.z


@settings(max_examples=60, deadline=None)
@given(projections())
def test_lemma_end_cases(s):
    m, _ = min_projected_spacing_bruteforce(s, ORIGIN)
    ends = min(s.z, projected_stop_spacing(s))
    assert m <= ends + 1e-9
    if classify_lemma_case(s).predicts_min_at_ends:
        assert m >= ends - 1e-6


@given(st.floats(1.0, 40.0), st.floats(0.01, 0.999))
def test_jerk_matches_chain_rule(v0, frac):
    sol = SlvpSolution(v0, P)
    v = frac * v0
    h = 1e-4
    dadv = (slvp_accel(sol, v + h) - slvp_accel(sol, v - h)) / (2 * h)
    expected = dadv * slvp_accel(sol, v)
    assert slvp_jerk(sol, v) == pytest.approx(expected, rel=1e-6)


@given(st.floats(0.01, 40.0))
def test_slvp_decel_below_beta(v0):
    sol = SlvpSolution(v0, P)
    v = np.linspace(0.0, v0, 1001)
    assert np.all(-slvp_accel(sol, v) < P.beta)


@settings(max_examples=300)
@given(speed, speed, st.floats(0.0, 150.0), st.floats(-1.0, 1.0))
def test_one_step_stays_safe(v, vl, extra, leader_frac):
    # a compliant leader cannot push a safe pair into emergency braking or collision in one step
    v, vl = min(v, P.mu), min(vl, P.mu)
    z = max(P.zeta_min, phi_prime(v, vl, P)) + extra
    s = PairState.from_spacing(v, vl, z)
    d = mpp_accel(s, P)
    assert d.phase.is_safe
    a_l = -P.beta_leader if leader_frac < 0 else leader_frac
    n = step(s, d.a, a_l, P)
    assert n.z >= max(P.zeta_min, phi_prime(n.v, n.v_leader, P)) - 10 * P.dt * P.mu
