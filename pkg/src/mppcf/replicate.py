"""Data series for the six-panel stationary-leader figure."""

from __future__ import annotations

import csv
import json
import os

from .core import ms_to_kmh
from .simulator import ScenarioConfig, run, write_trajectory_csv
from .verify import slvp_summary

LAST_WINDOW = 20.0


def _series(path, header, columns):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([repr(float(x)) for x in row])


def replicate_fig(out_dir, cfg: ScenarioConfig = None) -> dict:
    """Run the stationary-leader scenario and write every panel's series plus ``summary.json``."""
    cfg = cfg or ScenarioConfig()
    os.makedirs(out_dir, exist_ok=True)
    traj, monitors = run(cfg)
    with open(os.path.join(out_dir, "run.csv"), "w", newline="") as fh:
        write_trajectory_csv(traj, fh)

    v_kmh = [ms_to_kmh(float(v)) for v in traj.v]
    z = traj.z
    _series(os.path.join(out_dir, "speed_time.csv"), ["t", "v_kmh"], [traj.t, v_kmh])
    _series(os.path.join(out_dir, "speed_spacing.csv"), ["z", "v_kmh"], [z, v_kmh])
    _series(os.path.join(out_dir, "accel_time.csv"), ["t", "a"], [traj.t, traj.a])
    _series(os.path.join(out_dir, "accel_spacing.csv"), ["z", "a"], [z, traj.a])
    _series(os.path.join(out_dir, "phase_full.csv"), ["v", "z"], [traj.v, z])
    last = traj.t >= traj.t[-1] - LAST_WINDOW
    _series(os.path.join(out_dir, "phase_last20.csv"), ["v", "z"], [traj.v[last], z[last]])

    summary = slvp_summary(traj)
    summary["monitors"] = monitors.to_dict()
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary
