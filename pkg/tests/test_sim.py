import math

import numpy as np
import pytest

from circumnav import analysis as an
from circumnav.control import AlphaTooSmall, ControlGains
from circumnav.model import WorldState, is_angularly_ordered, ring_separations
from circumnav.sim import (
    ConfigError, DegenerateBearingError, NonFiniteState, ScenarioConfig, derivative, random_scenario, run, step,
)

PI = math.pi


def circle_config(n=4, d_star=1.3, target=(0.5, -1.0), offset=0.2, **kw):
    beta = [2 * PI / n] * n
    pos = [(target[0] + d_star * math.cos(offset + i * 2 * PI / n), target[1] + d_star * math.sin(offset + i * 2 * PI / n))
           for i in range(n)]
    gains = kw.pop("gains", ControlGains(4.0, 1.0, 1.0, 3.5 * PI))
    return ScenarioConfig(target=target, d_star=d_star, beta_star=beta, gains=gains,
                          initial_positions=pos, initial_estimates=[target] * n, **kw)


def test_equilibrium_derivative_is_tangential():
    cfg = circle_config()
    d = derivative(cfg.initial_world(), cfg)
    for (u, xdot, p) in zip(d.position_rates, d.estimate_rates, cfg.initial_positions):
        radial = np.subtract(p, cfg.target) / cfg.d_star
        assert abs(u.x * radial[0] + u.y * radial[1]) <= 1e-12
        assert u.norm() == pytest.approx(cfg.gains.k_omega * cfg.gains.alpha, rel=1e-12)
        assert xdot.norm() <= 1e-12


def test_two_antipodal_agents_move_symmetrically():
    cfg = ScenarioConfig(target=(0, 0), d_star=1.0, beta_star=[PI, PI], gains=ControlGains(1, 1, 1, 3.5 * PI),
                         initial_positions=[(1, 0), (-1, 0)], initial_estimates=[(0, 0), (0, 0)])
    u0, u1 = derivative(cfg.initial_world(), cfg).position_rates
    assert u0.norm() == pytest.approx(u1.norm(), rel=1e-12)
    assert u0.x == pytest.approx(-u1.x, abs=1e-12) and u0.y == pytest.approx(-u1.y, abs=1e-12)


def _complex_oracle(cfg):
    """Closed-loop rates written with complex numbers, independent of the
    vector helpers."""
    x = complex(*cfg.target)
    p = np.array([complex(*q) for q in cfg.initial_positions])
    e = np.array([complex(*q) for q in cfg.initial_estimates])
    g = cfg.gains
    phi = (x - p) / abs(x - p)
    pj = np.roll(p, -1)
    phij = (pj - p) / abs(pj - p)
    psi = np.mod(np.angle(phij / phi), 2 * PI)
    bhat = np.where(psi >= PI, 2 * psi - 3 * PI, 2 * psi + PI)
    bar = phi * -1j
    u = g.k_c * (abs(p - e) - cfg.d_star) * phi + g.k_omega * (g.alpha + bhat - np.array(cfg.beta_star)) * bar
    r = p - e
    xdot = g.k_est * (r - (r.real * phi.real + r.imag * phi.imag) * phi)
    return u, xdot


def test_section5_initial_derivative_matches_oracle(section5_config):
    d = derivative(section5_config.initial_world(), section5_config)
    u_ref, x_ref = _complex_oracle(section5_config)
    u, x = d.as_arrays()
    np.testing.assert_allclose(u[:, 0] + 1j * u[:, 1], u_ref, atol=1e-12)
    np.testing.assert_allclose(x[:, 0] + 1j * x[:, 1], x_ref, atol=1e-12)


def test_zero_derivative_state_only_advances_time():
    cfg = circle_config(gains=ControlGains(4.0, 1.0, 1.0, 0.0), allow_unsafe_alpha=True)
    w = step(cfg.initial_world(), cfg)
    assert w.time == pytest.approx(cfg.dt)
    np.testing.assert_allclose(w.positions(), cfg.initial_world().positions(), atol=1e-15)


@pytest.mark.parametrize("integrator", ["euler", "rk4"])
def test_step_matches_hand_update(section5_config, integrator):
    cfg = section5_config.replace(integrator=integrator, dt=1e-3)
    w0 = cfg.initial_world()

    def f(pos, est):
        return derivative(WorldState.from_arrays(0.0, cfg.target, pos, est), cfg).as_arrays()

    p, e = w0.positions(), w0.estimates()
    h = cfg.dt
    k1 = f(p, e)
    if integrator == "euler":
        p1, e1 = p + h * k1[0], e + h * k1[1]
    else:
        k2 = f(p + h / 2 * k1[0], e + h / 2 * k1[1])
        k3 = f(p + h / 2 * k2[0], e + h / 2 * k2[1])
        k4 = f(p + h * k3[0], e + h * k3[1])
        p1 = p + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        e1 = e + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    w1 = step(w0, cfg)
    np.testing.assert_allclose(w1.positions(), p1, atol=1e-13)
    np.testing.assert_allclose(w1.estimates(), e1, atol=1e-13)
    # Taylor: displacement is dt * u(0) up to O(dt^2)
    assert np.abs(w1.positions() - p - h * k1[0]).max() <= 100 * h * h


def test_run_zero_duration_gives_initial_state(section5_config):
    log = run(section5_config.replace(t_end=0.0))
    assert len(log) == 1
    np.testing.assert_array_equal(log.positions[0], section5_config.initial_positions)


@pytest.mark.parametrize("t_end, dt, samples", [(1.0, 1e-3, 1001), (0.1, 0.03, 5), (0.3, 0.1, 4)])
def test_run_sample_count_is_ceiling(section5_config, t_end, dt, samples):
    log = run(section5_config.replace(t_end=t_end, dt=dt))
    assert len(log) == samples
    assert np.all(np.diff(log.times) > 0)


def test_run_is_deterministic(section5_config):
    cfg = section5_config.replace(t_end=2.0)
    a, b = run(cfg), run(cfg)
    for name in ("times", "positions", "estimates", "controls", "psi", "betahat", "dhat"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))


def test_log_stride(section5_config):
    full = run(section5_config.replace(t_end=1.0))
    thin = run(section5_config.replace(t_end=1.0, log_stride=10))
    np.testing.assert_array_equal(thin.positions, full.positions[::10])


def test_backends_agree(section5_config):
    cfg = section5_config.replace(t_end=1.0)
    py = run(cfg, backend="python")
    auto = run(cfg)
    np.testing.assert_allclose(auto.positions, py.positions, atol=1e-12)


def test_euler_converges_to_rk4_at_first_order(section5_config):
    cfg = section5_config.replace(t_end=1.0)
    ref = run(cfg.replace(dt=2.5e-4)).positions[-1]
    errs = [np.abs(run(cfg.replace(integrator="euler", dt=h)).positions[-1] - ref).max() for h in (2e-3, 1e-3)]
    assert errs[1] < errs[0]
    assert 0.9 < math.log2(errs[0] / errs[1]) < 1.1


def test_rk4_self_convergence(section5_config):
    finals = [run(section5_config.replace(t_end=2.0, dt=h)).positions[-1] for h in (4e-3, 2e-3, 1e-3)]
    assert an.observed_order(finals) > 3.8


def test_config_validation_errors(section5_config):
    bad_sum = section5_config.replace(beta_star=[PI / 2] * 5)
    with pytest.raises(ConfigError):
        bad_sum.validate()
    with pytest.raises(ConfigError):
        section5_config.replace(initial_estimates=section5_config.initial_estimates[:4]).validate()
    with pytest.raises(ConfigError):
        section5_config.replace(dt=0.0).validate()
    with pytest.raises(ConfigError):
        section5_config.replace(integrator="leapfrog").validate()
    with pytest.raises(AlphaTooSmall):
        section5_config.replace(gains=ControlGains(5, 1.5, 1, 2 * PI)).validate()
    section5_config.replace(gains=ControlGains(5, 1.5, 1, 2 * PI), allow_unsafe_alpha=True).validate()
    pos = list(section5_config.initial_positions)
    pos[2] = pos[1]
    with pytest.raises(ConfigError):
        section5_config.replace(initial_positions=pos).validate()
    pos[2] = section5_config.target
    with pytest.raises(ConfigError):
        section5_config.replace(initial_positions=pos).validate()


def test_collision_aborts_with_time_and_agent():
    # one Euler step carries agent 2 exactly onto the target
    cfg = ScenarioConfig(target=(0, 0), d_star=1.0, beta_star=[PI, PI], gains=ControlGains(1, 5.0, 0.0, 0.0),
                         initial_positions=[(1, 0), (0, 0.5)], initial_estimates=[(0, 0), (0, 2.5)],
                         dt=0.1, t_end=1.0, integrator="euler")
    with pytest.raises(DegenerateBearingError) as info:
        run(cfg, validate=False)
    assert info.value.agent == 2
    assert info.value.time == pytest.approx(0.1)


def test_huge_step_reports_non_finite(section5_config):
    cfg = section5_config.replace(dt=5.0, t_end=2000.0, integrator="euler",
                                  gains=ControlGains(1e3, 1e3, 1e3, 3.5 * PI))
    with pytest.raises((NonFiniteState, DegenerateBearingError)):
        run(cfg)


@pytest.mark.parametrize("n", range(2, 9))
def test_random_scenarios_are_valid(n):
    for seed in range(5):
        cfg = random_scenario(n, seed)
        cfg.validate()
        assert an.corridor_hypothesis(cfg)
        assert is_angularly_ordered(ring_separations(cfg.initial_world()))


def test_log_world_snapshot(section5_log):
    w = section5_log.world(10)
    assert w.time == pytest.approx(0.01)
    np.testing.assert_array_equal(w.positions(), section5_log.positions[10])
