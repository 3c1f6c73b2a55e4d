import io
import math
from dataclasses import replace

import numpy as np
import pytest

from mppcf import PairState, PhaseKind
from mppcf.analytic import fd_speed
from mppcf.core import COMFORT_BRAKING, PHASE_CODES
from mppcf.phase import phi
from mppcf.simulator import (
    TRAJECTORY_HEADER,
    ConstantSpeed,
    PiecewiseBraking,
    Recorded,
    ScenarioConfig,
    SimulationAbort,
    Stationary,
    braking_entry,
    braking_entry_state,
    run,
    run_platoon,
    step,
    write_trajectory_csv,
)


def test_step_examples(p):
    s = PairState(0.0, 3.0, 10.0, 0.0, 0.0)
    n = step(s, 0.0, 0.0, p)
    assert (n.x_follower, n.x_leader, n.v) == (3.0, 10.0, 0.0)
    n = step(PairState(0.0, 0.0, 10.0, 10.0, 0.0), -1.67, 0.0, p)
    assert n.v == pytest.approx(9.99833, abs=1e-12)
    assert n.x_follower == pytest.approx(0.00999833, abs=1e-15)
    assert step(PairState(0.0, 0.0, 10.0, 0.001, 0.0), -1.67, 0.0, p).v == 0.0


def test_single_step_duration(p):
    traj, _ = run(ScenarioConfig(duration=p.dt))
    assert len(traj) == 2
    assert np.allclose(np.diff(traj.t), p.dt)


def test_uniform_time_grid(p):
    traj, _ = run(ScenarioConfig(duration=2.0))
    assert len(traj) == 2001
    assert np.all(np.diff(traj.t) > 0)
    assert np.allclose(np.diff(traj.t), p.dt, rtol=0, atol=1e-12)


def test_config_validation():
    with pytest.raises(ValueError):
        ScenarioConfig(duration=0.0)
    with pytest.raises(ValueError):
        ScenarioConfig(controller="idm")
    with pytest.raises(ValueError):
        ScenarioConfig(monitors=("nope",))


def test_leader_profiles(p):
    assert Stationary().accel(3.0, 0.0, p) == 0.0
    assert ConstantSpeed(12.0).initial_speed(0.0) == 12.0
    pb = PiecewiseBraking(((1.0, 3.0), (2.0, -0.5)))
    assert pb.accel(0.5, 10.0, p) == 0.0
    assert pb.accel(1.5, 10.0, p) == -p.beta_leader
    assert pb.accel(2.5, 10.0, p) == 0.5
    assert PiecewiseBraking(((0.0, 3.0),), compliant=False).accel(0.0, 10.0, p) == -3.0
    rec = Recorded((0.0, 20.0), (20.0, 0.0))
    assert rec.initial_speed(0.0) == 20.0
    assert rec.accel(0.0, 20.0, p) == pytest.approx(-1.0)
    assert Recorded((0.0, 1.0), (20.0, 0.0)).accel(0.0, 20.0, p) == -p.beta_leader


def test_replication_summary_head(p):
    traj, report = run(ScenarioConfig())
    assert report.passed, report.to_dict()
    assert traj.v.max() == pytest.approx(30.0, abs=0.6)
    assert traj.z[-1] == pytest.approx(5.0, abs=0.05)
    assert traj.t[-1] < 140.0 + 1e-9


def test_braking_entry_on_boundary(p):
    traj, _ = run(ScenarioConfig())
    i = braking_entry(traj)
    assert traj.phase[i] == PHASE_CODES[COMFORT_BRAKING]
    assert traj.phase_names()[i - 1].startswith("nominal")
    e = braking_entry_state(traj)
    assert traj.t[i - 1] <= e.t <= traj.t[i]
    assert e.z == pytest.approx(phi(e.v, 0.0, p), abs=1e-6)
    assert e.z == pytest.approx(p.zeta + e.v * p.tau_react + e.v**2 / (2 * p.beta), abs=0.01)


def test_no_braking_entry_when_cruising(p):
    traj, _ = run(ScenarioConfig(duration=1.0))
    assert braking_entry(traj) is None
    assert braking_entry_state(traj) is None


def test_stop_detection_and_stride(p):
    cfg = ScenarioConfig(initial=PairState(0.0, 0.0, 6.0, 0.0, 0.0), duration=10.0)
    traj, _ = run(cfg)
    assert traj.t[-1] == pytest.approx(1.0)
    full, _ = run(replace(cfg, stop_detection=False))
    assert full.t[-1] == pytest.approx(10.0)
    strided, _ = run(replace(cfg, stop_detection=False, stride=1000))
    assert list(strided.t) == pytest.approx([float(i) for i in range(11)])


def test_emergency_start_sets_violation(p):
    cfg = ScenarioConfig(initial=PairState(0.0, 0.0, 200.0, 30.0, 0.0), duration=1.0)
    traj, report = run(cfg)
    assert traj.violation[0]
    assert not report["safety"].applicable
    assert report["bounded"].passed


def test_noncompliant_leader_flags(p):
    cfg = ScenarioConfig(initial=PairState(0.0, 0.0, 60.0, 15.0, 15.0),
                         leader=PiecewiseBraking(((0.0, 8.0),), compliant=False), duration=20.0)
    traj, report = run(cfg)
    assert not report["safety"].applicable
    assert np.any(traj.kind_mask(PhaseKind.EMERGENCY_BRAKING) | traj.kind_mask(PhaseKind.COLLISION))


def test_abort_on_non_finite(p):
    cfg = ScenarioConfig(params=replace(p, dt=1e-3), initial=PairState(0.0, 0.0, 1e308, 0.0, 0.0),
                         leader=ConstantSpeed(1e308), duration=0.01)
    with pytest.raises(SimulationAbort) as exc:
        run(cfg)
    assert exc.value.step == 0 and "overflow" in str(exc.value)


def test_platoon_of_two_equals_run(p):
    cfg = ScenarioConfig(initial=PairState(0.0, 0.0, 80.0, 10.0, 0.0), duration=5.0)
    single, _ = run(cfg)
    (pair,) = run_platoon(2, cfg, 80.0)
    for name in ("t", "x_follower", "x_leader", "v", "v_leader", "a", "phase"):
        assert np.array_equal(getattr(single, name), getattr(pair, name))
    with pytest.raises(ValueError):
        run_platoon(1, cfg, 80.0)


def test_platoon_equilibrium_holds(p):
    k = 0.05
    v = float(fd_speed(k, p))
    cfg = ScenarioConfig(initial=PairState(0.0, -20.0, 0.0, v, v), leader=ConstantSpeed(v), duration=5.0,
                         stop_detection=False)
    for tr in run_platoon(10, cfg, 1 / k):
        assert np.max(np.abs(tr.v - v)) <= 1e-6


def test_platoon_braking_leader_is_safe(p):
    v = 25.0
    gap = float(phi(v, v, p)) + 5.0
    cfg = ScenarioConfig(initial=PairState(0.0, -gap, 0.0, v, v),
                         leader=PiecewiseBraking(((2.0, p.beta_leader), (12.0, -0.5))), duration=30.0)
    trajs, reports = run_platoon(10, cfg, gap, with_reports=True)
    for tr, rep in zip(trajs, reports):
        assert tr.z.min() >= p.zeta_min
        assert rep.passed, rep.to_dict()


def test_csv_header_and_determinism():
    cfg = ScenarioConfig(duration=1.0)
    outs = []
    for _ in range(2):
        buf = io.StringIO()
        write_trajectory_csv(run(cfg)[0], buf)
        outs.append(buf.getvalue())
    assert outs[0] == outs[1]
    lines = outs[0].splitlines()
    assert lines[0] == ",".join(TRAJECTORY_HEADER)
    row = lines[1].split(",")
    assert row[-1] == "nominal:bounded_accel"
    assert float(row[5]) == 2500.0
    # shortest round-trip floats
    assert all(repr(float(x)) == x for x in row[:-1])


def test_monitor_report_dict():
    _, report = run(ScenarioConfig(duration=1.0))
    d = report.to_dict()
    assert set(d) == {"safety", "forward", "bounded", "fd_consistency", "transition", "clip"}
    assert all(r["passed"] for r in d.values())
    assert math.isfinite(d["safety"]["worst_margin"])
