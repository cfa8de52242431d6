"""Run summaries and the invariant check suite behind ``circumnav verify``."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from circumnav import analysis as an
from circumnav.control import control_input, separation_estimate
from circumnav.geom import TWO_PI, UnitVec2, ccw_angle, unit_bearing, Vec2
from circumnav.model import RingTopology, algebraic_connectivity, ring_connectivity, ring_laplacian
from circumnav.sim import ScenarioConfig, TrajectoryLog

#: final-state thresholds for a converged run
FINAL_XTILDE = 1e-3
FINAL_DELTA = 1e-3
FINAL_BTILDE = 1e-2
SETTLE_BTILDE = 1e-2
PE_WINDOW = 10.0
PE_DIRECTIONS = 16


@dataclass
class Check:
    name: str
    status: str  # pass | fail | skipped | warn
    margin: float | None = None
    detail: str = ""


@dataclass
class RunSummary:
    scenario_id: str
    backend: str
    controller: str
    n: int
    samples: int
    t_end: float
    final_xtilde_max: float
    final_delta_max: float
    final_btilde_max: float
    settling_xtilde: float
    settling_delta: float
    settling_btilde: float
    kappa_alpha: float
    lambda2: float
    varpi_apriori: float
    varpi_realized: float
    max_g_norm: float
    ordering_maintained: bool
    checks: list[Check] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ok"] = self.ok
        return _jsonable(d)


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return _jsonable(obj.item())
    return obj


def _check(name: str, ok: bool, margin: float | None, detail: str) -> Check:
    return Check(name, "pass" if ok else "fail", None if margin is None else float(margin), detail)


def invariant_checks(log: TrajectoryLog, errors: an.ErrorSeries | None = None, seed: int = 0) -> list[Check]:
    """Evaluate every invariant the run should satisfy.

    Margins are positive when a check passes.
    """
    cfg = log.config
    errors = errors or an.compute_errors(log)
    checks: list[Check] = []
    n = cfg.n
    h = float(np.median(np.diff(log.times))) if len(log) > 1 else cfg.dt

    L = ring_laplacian(RingTopology(n))
    sums = max(np.abs(L.sum(axis=0)).max(), np.abs(L.sum(axis=1)).max())
    checks.append(_check("laplacian_zero_sums", sums == 0.0, 0.0 - sums if sums else 0.0, "row and column sums of the ring Laplacian"))
    lam_err = abs(algebraic_connectivity(L) - ring_connectivity(n))
    checks.append(_check("algebraic_connectivity", lam_err <= 1e-9, 1e-9 - lam_err, "eigensolve vs 1 - cos(2pi/n)"))

    ident = float(np.max(np.abs(errors.beta_tilde - (errors.btilde - errors.vartheta))))
    checks.append(_check("separation_error_identity", ident <= 1e-12, 1e-12 - ident,
                         "beta_tilde = btilde - vartheta"))

    x0 = errors.xtilde_norm[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(x0 > 0, errors.xtilde_norm / np.where(x0 > 0, x0, 1.0), 1.0)
    worst = float(ratio.max()) - 1.0
    steps_up = float(np.max(np.diff(errors.xtilde_norm, axis=0), initial=0.0))
    tol_int = 1e-6 * cfg.d_star
    checks.append(_check("xtilde_bounded", worst <= 1e-6 and steps_up <= tol_int, 1e-6 - worst,
                         f"max ||xtilde(t)||/||xtilde(0)|| - 1 = {worst:.3g}, largest step increase {steps_up:.3g}"))

    d_min = an.corridor_radii(cfg)
    if an.corridor_hypothesis(cfg):
        gap = float(np.min(errors.d - d_min) + tol_int)
        checks.append(_check("distance_corridor", gap >= 0, gap, f"d_i(t) >= d_min - {tol_int:.1g}"))
        pert = an.perturbation_decompose(errors, cfg)
        checks.append(_check("perturbation_bound", pert.g_norm.max() < pert.varpi_apriori,
                             pert.varpi_apriori - pert.g_norm.max(),
                             f"max ||g|| = {pert.g_norm.max():.4g} < varpi = {pert.varpi_apriori:.4g}"))
    else:
        pert = an.perturbation_decompose(errors, cfg)
        checks.append(Check("distance_corridor", "skipped", None, "hypothesis not met, skipped"))
        checks.append(Check("perturbation_bound", "skipped", None, "hypothesis not met, skipped"))

    kappa = cfg.kappa_alpha()
    if len(log) > 1 and kappa > 0:
        rates = an.rotation_rates(log)
        bound = cfg.gains.k_omega * kappa / float(errors.d.max())
        margin = float(rates.min() - bound * (1 - 1e-3))
        checks.append(_check("rotation_monotone", margin >= 0, margin,
                             f"min bearing rate {rates.min():.4g} vs k_omega*kappa/d_max = {bound:.4g}"))
    else:
        checks.append(Check("rotation_monotone", "skipped", None, "kappa_alpha <= 0 or no steps"))

    span = log.times[-1] - log.times[0]
    window = min(PE_WINDOW, 0.5 * span)
    if window > 2 * h:
        cert = float(an.pe_certificate(log, window, PE_DIRECTIONS).min())
        checks.append(_check("pe_certificate", cert > 0, cert, f"window {window:g} s, min over agents {cert:.4g}"))
    else:
        checks.append(Check("pe_certificate", "skipped", None, "log too short"))

    if cfg.controller == "proposed" and len(log) > 2:
        resid, skipped = an.separation_rate_residual(errors, pert)
        tol = 10.0 * h
        checks.append(_check("separation_rate_identity", resid <= tol, tol - resid,
                             f"central-difference residual {resid:.3g} rad/s, {skipped} samples skipped"))
    else:
        checks.append(Check("separation_rate_identity", "skipped", None, "baseline controller or log too short"))

    ordered = errors.ordered
    if ordered.any():
        zs = float(np.abs(errors.btilde[ordered].sum(axis=1)).max())
        checks.append(_check("zero_sum_separation", zs <= 1e-8, 1e-8 - zs, "sum of btilde on ordered samples"))
    else:
        checks.append(Check("zero_sum_separation", "skipped", None, "no angularly ordered samples"))
    checks.append(Check("ordering_maintained", "pass" if ordered.all() else "warn", None,
                        "agents keep their order around the target" if ordered.all()
                        else f"ordering lost at t = {log.times[np.argmin(ordered)]:.4g} s"))

    fx = float(errors.xtilde_norm[-1].max())
    fd = float(np.abs(errors.delta[-1]).max())
    fb = float(np.abs(errors.btilde[-1]).max())
    conv = fx < FINAL_XTILDE and fd < FINAL_DELTA and fb < FINAL_BTILDE
    checks.append(_check("converged", conv, min(FINAL_XTILDE - fx, FINAL_DELTA - fd, FINAL_BTILDE - fb),
                         f"final ||xtilde|| {fx:.3g}, |delta| {fd:.3g}, |btilde| {fb:.3g}"))

    slope = an.decay_slope(log.times, errors.xtilde_norm.max(axis=1))
    checks.append(_check("xtilde_exponential_decay", slope < 0, -slope, f"log-linear tail slope {slope:.4g} 1/s"))

    if cfg.gains.k_c == 1.0:
        dev = float(np.max(np.abs(an.delta_oracle(errors, cfg) - errors.delta)))
        checks.append(_check("delta_explicit_solution", dev <= 1e-6, 1e-6 - dev,
                             f"max |delta - quadrature| = {dev:.3g} m"))
    else:
        checks.append(Check("delta_explicit_solution", "skipped", None, "requires k_c = 1"))

    exact = on_circle_estimator_error(cfg.d_star, cfg.target, samples=200, seed=seed)
    checks.append(_check("on_circle_estimator_exact", exact <= 1e-9, 1e-9 - exact,
                         "separation_estimate(psi) = beta for agents on the d* circle"))
    eq = rotation_equivariance_error(cfg, samples=50, seed=seed)
    checks.append(_check("control_rotation_equivariance", eq <= 1e-12, 1e-12 - eq,
                         "rotating the bearing rotates the control input"))
    return checks


def on_circle_estimator_error(d_star: float, target, samples: int, seed: int = 0) -> float:
    """Worst ``|separation_estimate(psi_ij) - beta_ij|`` over random pairs on
    the circle of radius ``d_star`` around ``target``."""
    rng = np.random.default_rng(seed)
    x = Vec2(*target)
    worst = 0.0
    for a, b in rng.uniform(0, TWO_PI, (samples, 2)):
        p_i = x + UnitVec2.from_angle(a) * d_star
        p_j = x + UnitVec2.from_angle(b) * d_star
        beta = ccw_angle(unit_bearing(x, p_i), unit_bearing(x, p_j))
        psi = ccw_angle(unit_bearing(p_i, x), unit_bearing(p_i, p_j))
        worst = max(worst, abs(separation_estimate(psi) - beta))
    return worst


def rotation_equivariance_error(cfg: ScenarioConfig, samples: int, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for theta, rot, dhat, bhat, bstar in zip(
        rng.uniform(0, TWO_PI, samples), rng.uniform(0, TWO_PI, samples),
        rng.uniform(0.1, 3.0, samples), rng.uniform(-math.pi, 3 * math.pi, samples),
        rng.uniform(0, TWO_PI, samples),
    ):
        phi = UnitVec2.from_angle(theta)
        u = control_input(phi, dhat, bhat, cfg.d_star, bstar, cfg.gains)
        u_rot = control_input(UnitVec2.from_angle(theta + rot), dhat, bhat, cfg.d_star, bstar, cfg.gains)
        c, s = math.cos(rot), math.sin(rot)
        ref = Vec2(c * u.x - s * u.y, s * u.x + c * u.y)
        worst = max(worst, (u_rot - ref).norm() / max(1.0, u.norm()))
    return worst


def summarize(log: TrajectoryLog, checks: list[Check] | None = None) -> RunSummary:
    cfg = log.config
    errors = an.compute_errors(log)
    pert = an.perturbation_decompose(errors, cfg)
    t = log.times
    return RunSummary(
        scenario_id=cfg.scenario_id,
        backend=log.backend,
        controller=cfg.controller,
        n=cfg.n,
        samples=len(log),
        t_end=float(t[-1]),
        final_xtilde_max=float(errors.xtilde_norm[-1].max()),
        final_delta_max=float(np.abs(errors.delta[-1]).max()),
        final_btilde_max=float(np.abs(errors.btilde[-1]).max()),
        settling_xtilde=an.settling_time(t, errors.xtilde_norm, FINAL_XTILDE),
        settling_delta=an.settling_time(t, errors.delta, FINAL_DELTA),
        settling_btilde=an.settling_time(t, errors.btilde, SETTLE_BTILDE),
        kappa_alpha=cfg.kappa_alpha(),
        lambda2=algebraic_connectivity(ring_laplacian(RingTopology(cfg.n))),
        varpi_apriori=pert.varpi_apriori,
        varpi_realized=pert.varpi_realized,
        max_g_norm=float(pert.g_norm.max()),
        ordering_maintained=bool(errors.ordered.all()),
        checks=list(checks or []),
    )
