"""Executable property suites behind ``mppcf verify``.

Every suite returns a JSON-serializable report that depends only on its
arguments and seed. Random cases are drawn in fixed-size chunks, each with its
own child seed, so the report does not depend on the number of worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from .analytic import SlvpSolution, fd_capacity, fd_flow, fd_speed, slvp_accel, slvp_spacing
from .core import REFERENCE_PRESET, ModelParams, PairState, ms_to_kmh, validate_params
from .models import comfort_braking_accel
from .phase import phi, phi_prime
from .projection import (
    LemmaCase,
    ProjectionInputs,
    classify_lemma_case,
    min_projected_spacing_bruteforce,
    projected_stop_spacing,
)
from .simulator import (
    ConstantSpeed,
    ScenarioConfig,
    braking_entry,
    braking_entry_state,
    run,
    run_batch,
    run_platoon,
)

THREADS_ENV = "MPPCF_THREADS"
CHUNK = 2000


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _check(name, passed, value, bound):
    return {"name": name, "passed": bool(passed), "value": value, "bound": bound}


def _report(suite, seed, cases, checks, **details):
    return {
        "suite": suite,
        "seed": seed,
        "cases": cases,
        "passed": all(c["passed"] for c in checks),
        "checks": checks,
        "details": details,
    }


def _chunked(cases: int, seed: int, threads: int, work):
    """Run ``work(n, rng)`` over fixed-size chunks and return results in chunk order."""
    sizes = [CHUNK] * (cases // CHUNK) + ([cases % CHUNK] if cases % CHUNK else [])
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(n, np.random.default_rng(s)) for n, s in zip(sizes, seqs)]
    if threads <= 1 or len(jobs) <= 1:
        return [work(n, rng) for n, rng in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: work(*job), jobs))


# Lemma on projected spacing ------------------------------------------------------

ORIGIN = PairState(0.0, 0.0, 0.0, 0.0, 0.0)


def _draw_projection(rng, n):
    return zip(
        rng.uniform(0.0, 40.0, n), rng.uniform(0.0, 40.0, n), rng.uniform(0.0, 150.0, n),
        rng.uniform(0.5, 6.0, n), rng.uniform(0.5, 6.0, n), rng.uniform(0.1, 2.0, n),
    )


def _opposite1_margin(s: ProjectionInputs) -> float:
    return min(s.beta - s.beta_leader, s.leader_stop_time - s.follower_stop_time)


def sample_lemma_case(case: LemmaCase, n: int, rng, margin: float = 1e-6) -> list:
    """Rejection-sample ``n`` projection inputs that classify as ``case``."""
    out = []
    while len(out) < n:
        for v, vl, z, b, bl, tr in _draw_projection(rng, 4 * n):
            s = ProjectionInputs(float(v), float(vl), float(z), float(b), float(bl), float(tr))
            if classify_lemma_case(s) is not case:
                continue
            if case is LemmaCase.OPPOSITE1 and _opposite1_margin(s) <= margin:
                continue
            out.append(s)
            if len(out) == n:
                break
    return out


def _lemma_chunk(case):
    def work(n, rng):
        worst = math.inf
        violations = 0
        holds = 0
        for s in sample_lemma_case(case, n, rng):
            m, _ = min_projected_spacing_bruteforce(s, ORIGIN)
            ref = min(s.z, projected_stop_spacing(s))
            if case.predicts_min_at_ends:
                gap = m - ref
                violations += gap < -1e-6
            else:
                gap = ref - m
                if case is LemmaCase.OPPOSITE1:
                    violations += not m < ref - 1e-9
            holds += m >= ref - 1e-6
            worst = min(worst, gap)
        return worst, violations, holds

    return work


def lemma31(cases: int = 10_000, seed: int = 42, threads: int = 1) -> dict:
    checks = []
    measured = {}
    for i, case in enumerate([LemmaCase.COND1, LemmaCase.COND2, LemmaCase.COND3,
                              LemmaCase.OPPOSITE1, LemmaCase.OPPOSITE2]):
        parts = _chunked(cases, seed * 16 + i, threads, _lemma_chunk(case))
        worst = min(p[0] for p in parts)
        violations = sum(p[1] for p in parts)
        holds = sum(p[2] for p in parts)
        if case.predicts_min_at_ends:
            checks.append(_check(f"{case.value}: min >= min(z, z_stop) - 1e-6", violations == 0, worst, -1e-6))
        elif case is LemmaCase.OPPOSITE1:
            checks.append(_check(f"{case.value}: min < min(z, z_stop) - 1e-9", violations == 0, worst, 1e-9))
        else:
            measured[case.value] = {"relation_holds_fraction": holds / cases, "worst_gap": worst}
    return _report("lemma31", seed, cases, checks, measured=measured)


def theorem32(cases: int = 10_000, seed: int = 42, threads: int = 1) -> dict:
    """Safety over all projected times equals safety now plus safety at the projected stop."""

    def work(n, rng):
        mismatches = 0
        ends = [LemmaCase.COND1, LemmaCase.COND2, LemmaCase.COND3]
        per = [n // 3 + (1 if j < n % 3 else 0) for j in range(3)]
        for case, k in zip(ends, per):
            for s in sample_lemma_case(case, k, rng):
                m, _ = min_projected_spacing_bruteforce(s, ORIGIN)
                z_stop = projected_stop_spacing(s)
                for jam in (REFERENCE_PRESET.zeta, REFERENCE_PRESET.zeta_min):
                    lhs = m >= jam - 1e-9
                    rhs = s.z >= jam and z_stop >= jam
                    mismatches += lhs != rhs
        return mismatches

    mism = sum(_chunked(cases, seed, threads, work))
    return _report("theorem32", seed, cases, [_check("equivalence mismatches", mism == 0, mism, 0)])


# Safety of the closed loop ---------------------------------------------------------


def safety(cases: int = 100_000, seed: int = 42, threads: int = 1, params: ModelParams = None,
           horizon: float = 20.0, dt: float = 0.01, segment: float = 2.0) -> dict:
    """Random safe initial states and compliant leaders through the projection-based law."""
    p = validate_params(replace(params or REFERENCE_PRESET, dt=dt))
    n_steps = int(round(horizon / dt))
    n_seg = int(math.ceil(horizon / segment))
    tol = 10.0 * p.dt * p.mu

    def work(n, rng):
        v = rng.uniform(0.0, p.mu, n)
        vl = rng.uniform(0.0, p.mu, n)
        floor = np.maximum(p.zeta_min, phi_prime(v, vl, p))
        extra = np.where(rng.random(n) < 0.2, 0.0, rng.uniform(0.0, 150.0, n))
        z = floor + extra
        accel = rng.uniform(-p.beta_leader, 1.0, (n_seg, n))
        full_brake = rng.random((n_seg, n)) < 0.3
        accel = np.where(full_brake, -p.beta_leader, accel)
        steps_per_seg = int(round(segment / dt))

        def leader(k, t, vl_now):
            return accel[min(k // steps_per_seg, n_seg - 1)]

        st = run_batch(p, v, vl, z, leader, n_steps)
        return {
            "min_accel": float(st.min_accel.min()),
            "max_accel": float(st.max_accel.max()),
            "min_speed": float(st.min_speed.min()),
            "min_margin": float(st.min_safety_margin.min()),
            "unsafe_transitions": int(st.unsafe_transitions.sum()),
            "fallback_steps": int(st.fallback_steps.sum()),
            "clip_steps": int(st.clip_steps.sum()),
        }

    parts = _chunked(cases, seed, threads, work)
    agg = {
        "min_accel": min(q["min_accel"] for q in parts),
        "max_accel": max(q["max_accel"] for q in parts),
        "min_speed": min(q["min_speed"] for q in parts),
        "min_margin": min(q["min_margin"] for q in parts),
        "unsafe_transitions": sum(q["unsafe_transitions"] for q in parts),
        "fallback_steps": sum(q["fallback_steps"] for q in parts),
        "clip_steps": sum(q["clip_steps"] for q in parts),
    }
    checks = [
        _check("a >= -beta", agg["min_accel"] >= -p.beta - 1e-12, agg["min_accel"], -p.beta),
        _check("a <= alpha", agg["max_accel"] <= p.alpha + 1e-12, agg["max_accel"], p.alpha),
        _check("v >= 0", agg["min_speed"] >= 0.0, agg["min_speed"], 0.0),
        _check("min(z - zeta_min, z - phi_prime) >= -10 dt mu", agg["min_margin"] >= -tol, agg["min_margin"], -tol),
        _check("no step from a safe phase into emergency or collision", agg["unsafe_transitions"] == 0,
               agg["unsafe_transitions"], 0),
        _check("no fallback steps", agg["fallback_steps"] == 0, agg["fallback_steps"], 0),
        _check("speed clip never fires", agg["clip_steps"] == 0, agg["clip_steps"], 0),
    ]
    return _report("safety", seed, cases, checks, measured=agg, dt=dt, horizon=horizon)


def boundary(cases: int = 1000, seed: int = 42, threads: int = 1, params: ModelParams = None) -> dict:
    """Braking law on the minimum-spacing boundary and the gap between the two boundaries."""
    p = params or REFERENCE_PRESET
    rng = np.random.default_rng(seed)
    v = rng.uniform(0.0, p.mu, cases)
    v[v == 0.0] = p.mu
    vl = rng.uniform(0.0, p.mu, cases)
    worst_a = 0.0
    worst_gap = 0.0
    for vi, vli in zip(v, vl):
        vi, vli = float(vi), float(vli)
        st = PairState.from_spacing(vi, vli, phi_prime(vi, vli, p))
        worst_a = max(worst_a, abs(comfort_braking_accel(st, p) + p.beta))
        gap = phi(vi, vli, p) - phi_prime(vi, vli, p)
        worst_gap = max(worst_gap, abs(gap - ((p.zeta - p.zeta_min) + vi * (p.tau_react - p.tau_react2))))
    checks = [
        _check("comfort braking accel == -beta on z = phi_prime", worst_a <= 1e-12, worst_a, 1e-12),
        _check("phi - phi_prime == (zeta - zeta_min) + v (tau_react - tau_react2)", worst_gap <= 1e-12,
               worst_gap, 1e-12),
    ]
    return _report("boundary", seed, cases, checks)


# Stationary leader replication -----------------------------------------------------


def slvp_summary(traj) -> dict:
    """Headline numbers of a stationary-leader run."""
    p = traj.params
    i = braking_entry(traj)
    out = {
        "peak_speed_ms": float(traj.v.max()),
        "peak_speed_kmh": ms_to_kmh(float(traj.v.max())),
        "min_accel": float(traj.a.min()),
        "final_spacing_m": float(traj.z[-1]),
        "final_time_s": float(traj.t[-1]),
        "braking_entry": None,
        "stopping_distance_m": None,
    }
    if i is None:
        return out
    entry = braking_entry_state(traj)
    safe_stop = entry.v * p.tau_react + entry.v**2 / (2.0 * p.beta)

    def residual(k):
        vk, zk = float(traj.v[k]), float(traj.z[k])
        return zk - p.zeta - (vk * p.tau_react + vk**2 / (2.0 * p.beta))

    sol = SlvpSolution(float(traj.v[i]), p)
    seg = slice(i, None)
    out["braking_entry"] = {
        "t": entry.t,
        "v": entry.v,
        "z": entry.z,
        "safe_stop_residual_m": entry.z - p.zeta - safe_stop,
        "last_nominal_residual_m": residual(i - 1),
        "first_braking_residual_m": residual(i),
        "first_braking_index": i,
    }
    out["stopping_distance_m"] = float(traj.x_follower[-1] - entry.x_follower)
    out["oracle_max_accel_error"] = float(np.max(np.abs(traj.a[seg] - slvp_accel(sol, traj.v[seg]))))
    out["oracle_max_spacing_error"] = float(np.max(np.abs(traj.z[seg] - slvp_spacing(sol, traj.v[seg]))))
    return out


def slvp(cases: int = 0, seed: int = 0, threads: int = 1, cfg: ScenarioConfig = None) -> dict:
    traj, monitors = run(cfg or ScenarioConfig())
    s = slvp_summary(traj)
    checks = [
        _check("peak speed 108 +- 2 km/h", abs(s["peak_speed_kmh"] - 108.0) <= 2.0, s["peak_speed_kmh"], [106, 110]),
        _check("stopping distance 302 +- 5 m", s["stopping_distance_m"] is not None
               and abs(s["stopping_distance_m"] - 302.0) <= 5.0, s["stopping_distance_m"], [297, 307]),
        _check("min accel in [-1.67, -1.5]", -1.67 <= s["min_accel"] <= -1.5, s["min_accel"], [-1.67, -1.5]),
        _check("final spacing |z - 5| <= 0.05", abs(s["final_spacing_m"] - 5.0) <= 0.05, s["final_spacing_m"], 0.05),
    ]
    if s["braking_entry"] is not None:
        r = s["braking_entry"]["safe_stop_residual_m"]
        checks += [
            _check("entry safe-stopping identity", abs(r) <= 0.01, r, 0.01),
            _check("oracle accel error", s["oracle_max_accel_error"] <= 1e-3, s["oracle_max_accel_error"], 1e-3),
            _check("oracle spacing error", s["oracle_max_spacing_error"] <= 0.05, s["oracle_max_spacing_error"],
                   0.05),
        ]
    else:
        checks.append(_check("comfort braking entered", False, None, None))
    return _report("slvp", seed, cases, checks, summary=s, monitors=monitors.to_dict())


# Fundamental diagram -------------------------------------------------------------


def fd(cases: int = 20, seed: int = 0, threads: int = 1, params: ModelParams = None,
       vehicles: int = 10, duration: float = 10.0) -> dict:
    """Platoons started at equilibrium reproduce the extended triangular diagram."""
    p = params or REFERENCE_PRESET
    k_max = 1.0 / p.zeta_min
    rows = []
    worst_q = 0.0
    worst_v = 0.0
    for j in range(1, cases + 1):
        k = k_max * j / cases if j < cases else k_max
        spacing = 1.0 / k
        v_eq = float(fd_speed(k, p))
        cfg = ScenarioConfig(
            params=p,
            initial=PairState(0.0, -spacing, 0.0, v_eq, v_eq),
            leader=ConstantSpeed(v_eq),
            duration=duration,
            monitors=(),
            stop_detection=False,
        )
        trajs = run_platoon(vehicles, cfg, spacing)
        z_end = np.array([float(tr.z[-1]) for tr in trajs])
        v_end = np.array([float(tr.v[-1]) for tr in trajs])
        k_sim = 1.0 / float(z_end.mean())
        q_sim = k_sim * float(v_end.mean())
        dq = abs(q_sim - float(fd_flow(min(k_sim, k_max), p)))
        dv = max(float(np.max(np.abs(tr.v - v_eq))) for tr in trajs)
        worst_q = max(worst_q, dq)
        worst_v = max(worst_v, dv)
        rows.append({"k": k, "k_sim": k_sim, "q_sim": q_sim, "q_fd": float(fd_flow(k, p)), "dq": dq, "dv": dv})
    cap = fd_capacity(p)
    cap_err = max(abs(float(fd_flow(cap.k, p)) - cap.q), abs(p.mu * cap.k - (1.0 - cap.k * p.zeta) / p.tau))
    checks = [
        _check("|q_sim - q_fd| <= 1e-3", worst_q <= 1e-3, worst_q, 1e-3),
        _check("capacity point", cap_err <= 1e-6, cap_err, 1e-6),
    ]
    return _report("fd", seed, cases, checks, rows=rows, max_speed_drift=worst_v,
                   capacity={"k": cap.k, "q": cap.q})


SUITES = {
    "lemma31": lemma31,
    "theorem32": theorem32,
    "safety": safety,
    "boundary": boundary,
    "slvp": slvp,
    "fd": fd,
}

DEFAULT_CASES = {"lemma31": 10_000, "theorem32": 10_000, "safety": 100_000, "boundary": 1000, "slvp": 0, "fd": 20}


def run_suite(name: str, cases: int = None, seed: int = 42, threads: int = None) -> dict:
    if name not in SUITES:
        raise KeyError(name)
    cases = DEFAULT_CASES[name] if cases is None else cases
    threads = default_threads() if threads is None else threads
    return SUITES[name](cases=cases, seed=seed, threads=threads)
