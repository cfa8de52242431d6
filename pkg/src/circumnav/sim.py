"""Scenario configuration and fixed-step simulation of the closed loop."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from circumnav import _pykernel, kernel as _kernel
from circumnav.control import (
    ControlGains,
    baseline_control_input,
    check_separation_target,
    control_input,
    estimator_rate,
    separation_estimate,
    validate_alpha,
)
from circumnav.geom import EPS_DIST, TWO_PI, DegenerateBearing, Vec2, unit_bearing
from circumnav.model import RingTopology, WorldState, measured_psi, true_separation

INTEGRATORS = ("euler", "rk4")
CONTROLLERS = ("proposed", "baseline")

REFERENCE_BETA_STAR = (5 * math.pi / 18, math.pi / 9, 5 * math.pi / 18, 5 * math.pi / 18, 19 * math.pi / 18)
REFERENCE_GAINS = ControlGains(k_est=5.0, k_c=1.5, k_omega=1.0, alpha=3.5 * math.pi)


class ConfigError(ValueError):
    pass


class SimulationError(RuntimeError):
    def __init__(self, message: str, time: float, agent: int | None = None):
        super().__init__(message)
        self.time = time
        self.agent = agent


class DegenerateBearingError(SimulationError, DegenerateBearing):
    """A bearing became undefined during a run (agent collision)."""


class NonFiniteState(SimulationError):
    """The integrated state blew up; usually ``dt`` is too large."""


Pair = tuple[float, float]


@dataclass(frozen=True)
class ScenarioConfig:
    target: Pair
    d_star: float
    beta_star: tuple[float, ...]
    gains: ControlGains
    initial_positions: tuple[Pair, ...]
    initial_estimates: tuple[Pair, ...]
    dt: float = 1e-3
    t_end: float = 60.0
    integrator: str = "rk4"
    seed: int = 0
    log_stride: int = 1
    controller: str = "proposed"
    d_min: float | None = None
    allow_unsafe_alpha: bool = False
    eps_dist: float = EPS_DIST
    scenario_id: str = "scenario"
    description: str = ""

    def __post_init__(self) -> None:
        as_pair = lambda p: (float(p[0]), float(p[1]))  # noqa: E731
        object.__setattr__(self, "target", as_pair(self.target))
        object.__setattr__(self, "beta_star", tuple(float(b) for b in self.beta_star))
        object.__setattr__(self, "initial_positions", tuple(as_pair(p) for p in self.initial_positions))
        object.__setattr__(self, "initial_estimates", tuple(as_pair(p) for p in self.initial_estimates))

    @property
    def n(self) -> int:
        return len(self.initial_positions)

    @property
    def n_steps(self) -> int:
        ratio = self.t_end / self.dt
        nearest = round(ratio)
        if abs(ratio - nearest) <= 1e-9 * max(1.0, ratio):
            return int(nearest)
        return math.ceil(ratio)

    def replace(self, **changes) -> ScenarioConfig:
        return replace(self, **changes)

    def kappa_alpha(self) -> float:
        return self.gains.alpha - 3.0 * math.pi

    def validate(self) -> None:
        """Raise :class:`ConfigError` (or ``AlphaTooSmall``) on any violation."""
        n = self.n
        if n < 2:
            raise ConfigError("need at least two agents")
        if len(self.initial_estimates) != n or len(self.beta_star) != n:
            raise ConfigError(
                f"list lengths differ: {n} positions, {len(self.initial_estimates)} estimates, "
                f"{len(self.beta_star)} beta_star entries"
            )
        values = [*self.target, self.d_star, *self.beta_star, self.dt, self.t_end]
        values += [c for p in self.initial_positions + self.initial_estimates for c in p]
        if not all(math.isfinite(v) for v in values):
            raise ConfigError("non-finite value in scenario")
        if not self.d_star > 0:
            raise ConfigError("d_star must be > 0")
        if not self.dt > 0:
            raise ConfigError("dt must be > 0")
        if self.t_end < 0:
            raise ConfigError("t_end must be >= 0")
        if self.integrator not in INTEGRATORS:
            raise ConfigError(f"integrator must be one of {INTEGRATORS}")
        if self.controller not in CONTROLLERS:
            raise ConfigError(f"controller must be one of {CONTROLLERS}")
        if self.log_stride < 1:
            raise ConfigError("log_stride must be >= 1")
        if self.d_min is not None and not 0 < self.d_min < self.d_star:
            raise ConfigError("d_min must lie in (0, d_star)")
        try:
            check_separation_target(self.beta_star)
            self.gains.check_positive()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not self.allow_unsafe_alpha:
            validate_alpha(self.gains.alpha, self.beta_star)
        pts = np.array(self.initial_positions)
        to_target = np.hypot(*(pts - np.array(self.target)).T)
        if np.any(to_target <= self.eps_dist):
            raise ConfigError(f"agent {int(np.argmin(to_target)) + 1} starts on the target")
        for i in range(n):
            for j in range(i + 1, n):
                if math.dist(self.initial_positions[i], self.initial_positions[j]) <= self.eps_dist:
                    raise ConfigError(f"agents {i + 1} and {j + 1} start at the same point")

    def initial_world(self) -> WorldState:
        return WorldState.from_arrays(0.0, self.target, self.initial_positions, self.initial_estimates)


@dataclass(frozen=True)
class StateDerivative:
    position_rates: tuple[Vec2, ...]
    estimate_rates: tuple[Vec2, ...]

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return (
            np.array([v.as_tuple() for v in self.position_rates]),
            np.array([v.as_tuple() for v in self.estimate_rates]),
        )


@dataclass
class TrajectoryLog:
    """Sampled run. Arrays are indexed ``[sample, agent, ...]``."""

    config: ScenarioConfig
    times: np.ndarray
    positions: np.ndarray
    estimates: np.ndarray
    controls: np.ndarray
    psi: np.ndarray
    betahat: np.ndarray
    dhat: np.ndarray
    backend: str = field(default="python", compare=False)

    @property
    def n(self) -> int:
        return self.positions.shape[1]

    @property
    def target(self) -> np.ndarray:
        return np.array(self.config.target)

    def __len__(self) -> int:
        return len(self.times)

    def world(self, k: int) -> WorldState:
        return WorldState.from_arrays(self.times[k], self.config.target, self.positions[k], self.estimates[k])


def derivative(world: WorldState, config: ScenarioConfig) -> StateDerivative:
    """Closed-loop rates composed per agent from the control-module operations.

    Each agent only uses its own bearings; the baseline controller is the one
    exception and reads the true separation.
    """
    topo = RingTopology(world.n)
    eps = config.eps_dist
    u, xdot = [], []
    for i, agent in enumerate(world.agents):
        j = topo.neighbor(i)
        try:
            phi_iT = unit_bearing(agent.position, world.target, eps)
            psi = measured_psi(world, i, j, eps)
        except DegenerateBearing as exc:
            raise DegenerateBearingError(f"t={world.time:.6g}: agent {i + 1}: {exc}", world.time, i + 1) from None
        dhat = (agent.position - agent.estimate).norm()
        if config.controller == "baseline":
            beta = true_separation(world, i, j, eps)
            u_i = baseline_control_input(phi_iT, dhat, beta, config.d_star, config.beta_star[i], config.gains)
        else:
            beta_hat = separation_estimate(psi)
            u_i = control_input(phi_iT, dhat, beta_hat, config.d_star, config.beta_star[i], config.gains)
        u.append(u_i)
        xdot.append(estimator_rate(agent.position, agent.estimate, phi_iT, config.gains.k_est))
    return StateDerivative(tuple(u), tuple(xdot))


def _kernel_args(config: ScenarioConfig):
    g = config.gains
    return (
        np.array(config.target), config.d_star, np.array(config.beta_star),
        g.k_est, g.k_c, g.k_omega, g.alpha,
    )


def _raise_for_status(status: int, t: float, agent: int) -> None:
    who = f"agent {agent + 1}"
    if status == _pykernel.TARGET_DEGENERATE:
        raise DegenerateBearingError(f"t={t:.6g}: {who} reached the target", t, agent + 1)
    if status == _pykernel.NEIGHBOR_DEGENERATE:
        raise DegenerateBearingError(f"t={t:.6g}: {who} collided with its neighbour", t, agent + 1)
    if status == _pykernel.NON_FINITE:
        raise NonFiniteState(f"t={t:.6g}: {who} state is not finite (dt too large?)", t, agent + 1)


def _integrate(pos, est, config: ScenarioConfig, n_steps: int, stride: int, kern):
    method = _pykernel.RK4 if config.integrator == "rk4" else _pykernel.EULER
    out = kern.integrate(
        pos, est, *_kernel_args(config), config.dt, n_steps, stride, method,
        config.controller == "baseline", config.eps_dist,
    )
    pos_log, est_log, steps, status, fail_step, agent = out
    if status != _pykernel.OK:
        _raise_for_status(status, fail_step * config.dt, agent)
    return pos_log, est_log, steps


def step(world: WorldState, config: ScenarioConfig, backend: str | None = None) -> WorldState:
    """Advance every agent by one ``dt`` from the same snapshot."""
    kern = _kernel.get_kernel(backend)
    pos_log, est_log, _ = _integrate(world.positions(), world.estimates(), config, 1, 1, kern)
    return WorldState.from_arrays(world.time + config.dt, world.target.as_tuple(), pos_log[-1], est_log[-1])


def observe(config: ScenarioConfig, positions: np.ndarray, estimates: np.ndarray):
    """Controls and local measurements for stacked states ``(..., n, 2)``."""
    target = np.array(config.target)
    m, _, _ = _pykernel.measurements(positions, estimates, target, config.eps_dist)
    u, _, _, _ = _pykernel.rates(
        positions, estimates, *_kernel_args(config), config.controller == "baseline", config.eps_dist
    )
    return u, m["psi"], m["betahat"], m["dhat"]


def run(config: ScenarioConfig, backend: str | None = None, validate: bool = True) -> TrajectoryLog:
    """Integrate ``config`` from t=0 to ``t_end``.

    Deterministic: the same config and backend give a bit-identical log.
    """
    if validate:
        config.validate()
    kern = _kernel.get_kernel(backend)
    pos_log, est_log, steps = _integrate(
        np.array(config.initial_positions), np.array(config.initial_estimates),
        config, config.n_steps, config.log_stride, kern,
    )
    u, psi, betahat, dhat = observe(config, pos_log, est_log)
    return TrajectoryLog(
        config=config, times=steps * config.dt, positions=pos_log, estimates=est_log,
        controls=u, psi=psi, betahat=betahat, dhat=dhat, backend=_kernel.kernel_name(kern),
    )


def random_scenario(
    n: int,
    seed: int,
    *,
    d_star: float = 1.2,
    gains: ControlGains = REFERENCE_GAINS,
    uniform_spacing: bool = False,
    t_end: float = 20.0,
    dt: float = 1e-3,
    integrator: str = "rk4",
    d_min_fraction: float = 0.5,
) -> ScenarioConfig:
    """Randomised scenario that is angularly ordered and meets the distance
    corridor hypothesis with ``d_min = d_min_fraction * d_star``."""
    rng = np.random.default_rng(seed)
    if uniform_spacing:
        beta_star = np.full(n, TWO_PI / n)
    else:
        # gaps bounded away from 0 and 2pi
        w = rng.uniform(0.5, 1.5, n)
        beta_star = TWO_PI * w / w.sum()
    beta_star[-1] = TWO_PI - math.fsum(beta_star[:-1])
    target = rng.uniform(-2.0, 2.0, 2)
    slots = np.concatenate(([0.0], np.cumsum(beta_star)[:-1]))
    jitter = rng.uniform(-0.3, 0.3, n) * np.minimum(beta_star, np.roll(beta_star, 1))
    angles = rng.uniform(0, TWO_PI) + slots + jitter
    radii = d_star * rng.uniform(0.85, 1.25, n)
    positions = target + np.stack((radii * np.cos(angles), radii * np.sin(angles)), axis=1)
    err = d_star * rng.uniform(0.0, 0.8 * (1.0 - d_min_fraction), n)
    err_dir = rng.uniform(0, TWO_PI, n)
    estimates = target + np.stack((err * np.cos(err_dir), err * np.sin(err_dir)), axis=1)
    return ScenarioConfig(
        target=tuple(target), d_star=d_star, beta_star=tuple(beta_star), gains=gains,
        initial_positions=tuple(map(tuple, positions)), initial_estimates=tuple(map(tuple, estimates)),
        dt=dt, t_end=t_end, integrator=integrator, seed=seed, d_min=d_min_fraction * d_star,
        scenario_id=f"random_n{n}_s{seed}",
    )

