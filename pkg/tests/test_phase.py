import io

import numpy as np
import pytest

from mppcf import NominalSubPhase, PhaseKind
from mppcf.core import COLLISION, COMFORT_BRAKING, EMERGENCY_BRAKING, NOMINAL
from mppcf.phase import (
    PhasePoint,
    classify,
    classify_vz,
    newell_target_speed,
    nominal_sub_phase,
    phase_map,
    phi,
    phi_prime,
    projected_jam_spacing,
)


def test_phi_examples(p):
    assert phi(0.0, 0.0, p) == 7.0
    assert phi(30.0, 0.0, p) == pytest.approx(306.461, abs=1e-3)
    assert phi(0.0, 30.0, p) == pytest.approx(-262.461, abs=1e-3)
    assert phi_prime(0.0, 0.0, p) == 5.0
    assert phi_prime(30.0, 0.0, p) == pytest.approx(289.461, abs=1e-3)


def test_projected_jam_spacing(p):
    assert projected_jam_spacing(0.0, p.zeta, p) == p.zeta
    assert projected_jam_spacing(30.0, p.zeta, p) == pytest.approx(7.0 - 900 / 3.34)


def test_phi_vectorized(p):
    v = np.array([0.0, 30.0])
    assert np.allclose(phi(v, 0.0, p), [7.0, 306.46107784])


@pytest.mark.parametrize("v, z, phase", [
    (30.0, 2500.0, PhaseKind.NOMINAL),
    (30.0, 300.0, PhaseKind.COMFORT_BRAKING),
    (30.0, 200.0, PhaseKind.EMERGENCY_BRAKING),
    (0.0, 4.0, PhaseKind.COLLISION),
])
def test_classify_examples(p, v, z, phase):
    assert classify_vz(v, 0.0, z, p).kind is phase
    assert classify(PhasePoint(v, 0.0, z), p).kind is phase


def test_boundaries_belong_upward(p):
    assert classify_vz(0.0, 0.0, p.zeta, p).kind is PhaseKind.NOMINAL
    z = phi(30.0, 0.0, p)
    assert classify_vz(30.0, 0.0, z, p).kind is PhaseKind.NOMINAL
    assert classify_vz(30.0, 0.0, phi_prime(30.0, 0.0, p), p) == COMFORT_BRAKING
    assert classify_vz(0.0, 0.0, p.zeta_min, p) == COMFORT_BRAKING
    assert classify_vz(0.0, 0.0, np.nextafter(p.zeta_min, 0), p) == COLLISION


def test_collision_wins_below_zeta_min(p):
    # a fast leader drives phi_prime far negative; z < zeta_min is still a collision
    assert classify_vz(0.0, 33.0, 4.9, p) == COLLISION
    assert classify_vz(0.0, 33.0, 6.0, p) == COMFORT_BRAKING


def test_emergency(p):
    assert classify_vz(30.0, 0.0, 200.0, p) == EMERGENCY_BRAKING


def test_target_speed(p):
    assert newell_target_speed(7.0, p) == 0.0
    assert newell_target_speed(10.0, p) == pytest.approx(1.875)
    assert newell_target_speed(2500.0, p) == p.mu


def test_sub_phases(p):
    assert nominal_sub_phase(0.0, 2500.0, p) is NominalSubPhase.BOUNDED_ACCEL
    assert nominal_sub_phase(p.mu, 2500.0, p) is NominalSubPhase.EQUILIBRIUM_CRUISE
    assert nominal_sub_phase(30.0, 7.0, p) is NominalSubPhase.BOUNDED_DECEL
    # target speed within one step of an accessible change
    z = p.zeta + p.tau * 10.0
    assert nominal_sub_phase(10.0 - 1e-4, z, p) is NominalSubPhase.EQUILIBRIUM_ACCEL
    assert nominal_sub_phase(10.0 + 1e-4, z, p) is NominalSubPhase.EQUILIBRIUM_DECEL
    assert nominal_sub_phase(10.0, z, p) is NominalSubPhase.EQUILIBRIUM_CRUISE


def test_phase_map_single_cell(p):
    grid = phase_map([0.0, 0.0], [p.zeta, p.zeta], 1, 1, 0.0, p)
    assert len(grid.phases) == 1 and len(grid.phases[0]) == 1
    assert grid.phases[0][0].kind is PhaseKind.NOMINAL


def test_phase_map_grid_and_csv(p):
    grid = phase_map([0.0, 30.0], [0.0, 400.0], 3, 5, 0.0, p)
    assert [len(row) for row in grid.phases] == [5, 5, 5]
    rows = list(grid.to_rows())
    assert len(rows) == 15
    buf = io.StringIO()
    grid.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "v,z,v_leader,phase"
    assert lines[1] == "0.0,0.0,0.0,collision"
    with pytest.raises(ValueError):
        phase_map([1.0, 0.0], [0.0, 1.0], 2, 2, 0.0, p)
    with pytest.raises(ValueError):
        phase_map([0.0, 1.0], [0.0, 1.0], 0, 2, 0.0, p)


def test_nominal_dict_is_complete():
    assert set(NOMINAL) == set(NominalSubPhase)
