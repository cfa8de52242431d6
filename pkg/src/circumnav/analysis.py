"""Ground-truth error signals and numerical checks of the convergence argument.

Analysis has omniscient access to the target and every agent. Nothing in
:mod:`circumnav.control` depends on this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from circumnav import _pykernel
from circumnav.geom import TWO_PI
from circumnav.model import RingTopology, ring_laplacian
from circumnav.sim import ScenarioConfig, TrajectoryLog


class SumNotZero(ValueError):
    pass


class WrongGain(ValueError):
    pass


@dataclass
class ErrorSeries:
    """Per-sample, per-agent error signals on the log's time grid.

    ``beta_tilde == btilde - vartheta`` holds by construction.
    """

    times: np.ndarray
    d: np.ndarray
    xtilde_norm: np.ndarray
    delta: np.ndarray
    rho: np.ndarray
    beta: np.ndarray
    btilde: np.ndarray
    vartheta: np.ndarray
    beta_tilde: np.ndarray
    ordered: np.ndarray


@dataclass
class PerturbationSeries:
    q: np.ndarray
    g: np.ndarray
    g_norm: np.ndarray
    varpi_apriori: float
    varpi_realized: float


def compute_errors(log: TrajectoryLog, config: ScenarioConfig | None = None) -> ErrorSeries:
    config = config or log.config
    target = np.array(config.target)
    rel = log.positions - target
    d = np.hypot(rel[..., 0], rel[..., 1])
    xt = log.estimates - target
    xtilde_norm = np.hypot(xt[..., 0], xt[..., 1])
    beta = _pykernel.true_separations(log.positions, target)
    beta_star = np.array(config.beta_star)
    btilde = beta - beta_star
    vartheta = beta - log.betahat
    return ErrorSeries(
        times=log.times,
        d=d,
        xtilde_norm=xtilde_norm,
        delta=d - config.d_star,
        rho=d - log.dhat,
        beta=beta,
        btilde=btilde,
        vartheta=vartheta,
        beta_tilde=log.betahat - beta_star,
        ordered=np.abs(beta.sum(axis=1) - TWO_PI) <= 1e-9,
    )


# -- corridor radii ----------------------------------------------------------

def corridor_radii(config: ScenarioConfig) -> np.ndarray:
    """Per-agent lower distance bound ``d_i^min``.

    The configured ``d_min`` if set, else the largest value the initial
    conditions admit: ``min(d_i(0), d* - ||xtilde_i(0)||)``.
    """
    target = np.array(config.target)
    d0 = np.hypot(*(np.array(config.initial_positions) - target).T)
    e0 = np.hypot(*(np.array(config.initial_estimates) - target).T)
    if config.d_min is not None:
        return np.full(config.n, config.d_min)
    return np.minimum(d0, config.d_star - e0)


def corridor_hypothesis(config: ScenarioConfig, d_min=None) -> bool:
    """Whether ``d_i(0) >= d_i^min`` and ``||xtilde_i(0)|| <= d* - d_i^min``
    hold with ``0 < d_i^min < d*`` for every agent."""
    d_min = corridor_radii(config) if d_min is None else np.broadcast_to(d_min, (config.n,))
    target = np.array(config.target)
    d0 = np.hypot(*(np.array(config.initial_positions) - target).T)
    e0 = np.hypot(*(np.array(config.initial_estimates) - target).T)
    return bool(
        np.all(d_min > 0) and np.all(d_min < config.d_star)
        and np.all(d0 >= d_min) and np.all(e0 <= config.d_star - d_min + 1e-12)
    )


# -- persistence of excitation ----------------------------------------------

def _tangent_bearings(log: TrajectoryLog) -> np.ndarray:
    rel = log.target - log.positions
    d = np.hypot(rel[..., 0], rel[..., 1])[..., None]
    phi = rel / d
    return np.stack((phi[..., 1], -phi[..., 0]), axis=-1)


def _window_integrals(times: np.ndarray, f: np.ndarray, window_T: float) -> np.ndarray:
    """Trapezoidal integrals of ``f`` (time on axis 0) over every window of
    length ``window_T`` that starts on a sample."""
    h = np.diff(times)
    cum = np.concatenate(
        (np.zeros((1,) + f.shape[1:]), np.cumsum(0.5 * h.reshape((-1,) + (1,) * (f.ndim - 1)) * (f[1:] + f[:-1]), axis=0))
    )
    dt = float(np.median(h))
    w = int(round(window_T / dt))
    if w < 1 or w >= len(times):
        raise ValueError("window must span at least one step and fit inside the log")
    return cum[w:] - cum[:-w]


def pe_certificate(log: TrajectoryLog, window_T: float, directions: int = 16) -> np.ndarray:
    """Per-agent lower PE level of the tangent bearing.

    Minimum over ``directions`` unit vectors evenly spaced on ``[0, pi)`` and
    over all window start times of the windowed integral of
    ``(U . phibar_iT)^2``.
    """
    if directions < 4:
        raise ValueError("need at least 4 probe directions")
    if window_T > log.times[-1] - log.times[0]:
        raise ValueError("window longer than the log")
    bar = _tangent_bearings(log)
    theta = np.arange(directions) * math.pi / directions
    U = np.stack((np.cos(theta), np.sin(theta)), axis=-1)
    proj = np.einsum("tnc,kc->tnk", bar, U) ** 2
    win = _window_integrals(log.times, proj, window_T)
    return win.min(axis=(0, 2))


def pe_gram_minimum(log: TrajectoryLog, window_T: float) -> np.ndarray:
    """Exact minimum over all unit directions: the smallest eigenvalue of the
    windowed Gram matrix of the tangent bearing."""
    bar = _tangent_bearings(log)
    gram = np.stack((bar[..., 0] ** 2, bar[..., 0] * bar[..., 1], bar[..., 1] ** 2), axis=-1)
    w = _window_integrals(log.times, gram, window_T)
    a, b, c = w[..., 0], w[..., 1], w[..., 2]
    lam_min = 0.5 * (a + c) - np.sqrt(0.25 * (a - c) ** 2 + b * b)
    return lam_min.min(axis=0)


def rotation_rates(log: TrajectoryLog) -> np.ndarray:
    """Finite-difference rate of the unwrapped target-bearing angle."""
    rel = log.target - log.positions
    gamma = np.unwrap(np.arctan2(rel[..., 1], rel[..., 0]), axis=0)
    return np.diff(gamma, axis=0) / np.diff(log.times)[:, None]


# -- perturbation decomposition ---------------------------------------------

def varpi(n: int, k_omega: float, alpha: float, d_min: float) -> float:
    return math.sqrt(n) * k_omega * (alpha + 14.0 * math.pi) / d_min


def perturbation_decompose(errors: ErrorSeries, config: ScenarioConfig) -> PerturbationSeries:
    """Nominal consensus part ``q`` and perturbation ``g`` of the separation
    error dynamics, with the a-priori and realized bounds on ``||g||``."""
    k_w, alpha, d_star = config.gains.k_omega, config.gains.alpha, config.d_star
    b = errors.btilde
    # the baseline controller acts on the true separation
    vt = np.zeros_like(b) if config.controller == "baseline" else errors.vartheta
    dd = errors.delta + d_star
    bj, vj, ddj = (np.roll(a, -1, axis=1) for a in (b, vt, dd))
    q = (k_w / d_star) * (bj - b)
    g = (
        alpha * k_w * (1.0 / ddj - 1.0 / dd)
        - (k_w / d_star) * (bj - b)
        + k_w * ((bj - vj) / ddj - (b - vt) / dd)
    )
    n = b.shape[1]
    apriori = corridor_radii(config)
    return PerturbationSeries(
        q=q,
        g=g,
        g_norm=np.linalg.norm(g, axis=1),
        varpi_apriori=varpi(n, k_w, alpha, float(apriori.min())) if apriori.min() > 0 else math.inf,
        varpi_realized=varpi(n, k_w, alpha, float(errors.d.min())),
    )


def separation_rate_residual(errors: ErrorSeries, pert: PerturbationSeries) -> tuple[float, int]:
    """Max ``|central difference of btilde - (q + g)|``.

    The identity only holds while the agents stay in ring order, so stencils
    touching an unordered sample or a jump of the true separation (a
    neighbour crossing the 0/2pi cut) are skipped. Returns the residual and
    the skipped count.
    """
    t, b = errors.times, errors.btilde
    if len(t) < 3:
        return 0.0, 0
    fd = (b[2:] - b[:-2]) / (t[2:] - t[:-2])[:, None]
    jump = (np.abs(b[2:] - b[1:-1]) > math.pi) | (np.abs(b[1:-1] - b[:-2]) > math.pi)
    ok = errors.ordered
    keep = ~jump.any(axis=1) & ok[2:] & ok[1:-1] & ok[:-2]
    r = np.abs(fd - (pert.q + pert.g)[1:-1])[keep]
    return (float(r.max()) if r.size else 0.0), int((~keep).sum())


# -- nominal consensus system -----------------------------------------------

def nominal_reference(b0, times, k_omega: float = 1.0, d_star: float = 1.0) -> np.ndarray:
    """Solution of ``db/dt = -(k_omega/d_star) L b`` on the ring, at ``times``."""
    b0 = np.asarray(b0, dtype=float)
    if abs(b0.sum()) > 1e-9:
        raise SumNotZero(f"initial separation errors sum to {b0.sum():.3g}, expected 0")
    times = np.asarray(times, dtype=float)
    A = -(k_omega / d_star) * ring_laplacian(RingTopology(len(b0)))
    return np.array([expm(A * t) @ b0 for t in times])


# -- distance tracking error oracle ------------------------------------------

def delta_oracle(errors: ErrorSeries, config: ScenarioConfig) -> np.ndarray:
    """``delta`` rebuilt from the logged ``rho`` through the explicit
    solution ``delta(t) = delta(0) e^{-t} + int_0^t e^{-(t-s)} rho(s) ds``.

    The convolution uses the trapezoidal rule on the log grid. Only valid for
    ``k_c == 1``.
    """
    if config.gains.k_c != 1.0:
        raise WrongGain(f"the explicit solution assumes k_c = 1, got {config.gains.k_c}")
    t, rho = errors.times, errors.rho
    out = np.empty_like(rho)
    conv = np.zeros(rho.shape[1])
    out[0] = errors.delta[0]
    for k in range(1, len(t)):
        decay = math.exp(-(t[k] - t[k - 1]))
        conv = decay * conv + 0.5 * (t[k] - t[k - 1]) * (decay * rho[k - 1] + rho[k])
        out[k] = errors.delta[0] * math.exp(-t[k]) + conv
    return out


# -- scalar summaries ---------------------------------------------------------

def settling_time(times, series, tolerance: float) -> float:
    """First time after which ``|series|`` (max over trailing axes) stays
    below ``tolerance`` up to the last sample; ``inf`` if it never does."""
    if not tolerance > 0:
        raise ValueError("tolerance must be > 0")
    a = np.abs(np.asarray(series, dtype=float))
    if a.ndim > 1:
        a = a.reshape(len(a), -1).max(axis=1)
    above = np.nonzero(a >= tolerance)[0]
    if above.size == 0:
        return float(times[0])
    last = above[-1]
    if last == len(a) - 1:
        return math.inf
    return float(times[last + 1])


def decay_slope(times, values, floor_ratio: float = 1e-10) -> float:
    """Least-squares slope of ``log(values)`` over the later half of the
    stretch where ``values`` is still above ``floor_ratio * max``."""
    values = np.asarray(values, dtype=float)
    above = np.nonzero(values > floor_ratio * values.max())[0]
    if above.size < 4:
        return -math.inf
    end = above[-1] + 1
    start = end // 2
    t, v = np.asarray(times)[start:end], values[start:end]
    mask = v > 0
    return float(np.polyfit(t[mask], np.log(v[mask]), 1)[0])


def observed_order(finals: list[np.ndarray], ratio: float = 2.0) -> float:
    """Richardson estimate of the convergence order from three solutions at
    step sizes ``h, h/ratio, h/ratio^2`` (coarsest first)."""
    coarse, mid, fine = (np.asarray(f, dtype=float) for f in finals)
    e1 = np.max(np.abs(coarse - mid))
    e2 = np.max(np.abs(mid - fine))
    return math.log(e1 / e2) / math.log(ratio)
