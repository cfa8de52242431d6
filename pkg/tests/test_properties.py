"""Closed-loop invariants on randomised scenarios."""

import numpy as np
from hypothesis import HealthCheck, given, settings, strategies as st

from circumnav import analysis as an
from circumnav.sim import random_scenario, run

scenarios = st.builds(
    lambda n, seed, uniform: random_scenario(n, seed, t_end=4.0, uniform_spacing=uniform),
    st.integers(2, 8), st.integers(0, 2**31 - 1), st.booleans(),
)
SETTINGS = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@SETTINGS
@given(scenarios)
def test_closed_loop_invariants(cfg):
    log = run(cfg)
    e = an.compute_errors(log)
    tol_int = 1e-6 * cfg.d_star

    # estimation error never grows
    assert np.all(np.diff(e.xtilde_norm, axis=0) <= tol_int)
    # distance corridor
    assert an.corridor_hypothesis(cfg)
    assert np.all(e.d >= an.corridor_radii(cfg) - tol_int)
    # every target bearing turns counterclockwise at least at the guaranteed rate
    bound = cfg.gains.k_omega * cfg.kappa_alpha() / e.d.max()
    assert an.rotation_rates(log).min() >= bound * (1 - 1e-3)
    # error identity and zero-sum separation error
    assert np.abs(e.beta_tilde - (e.btilde - e.vartheta)).max() <= 1e-12
    if e.ordered.any():
        assert np.abs(e.btilde[e.ordered].sum(axis=1)).max() <= 1e-8
    # perturbation bound
    pert = an.perturbation_decompose(e, cfg)
    assert pert.g_norm.max() < pert.varpi_apriori
    assert pert.varpi_apriori >= pert.varpi_realized


@SETTINGS
@given(scenarios)
def test_tangential_coefficient_stays_positive(cfg):
    log = run(cfg.replace(t_end=1.0))
    rel = log.target - log.positions
    phi = rel / np.linalg.norm(rel, axis=-1, keepdims=True)
    bar = np.stack((phi[..., 1], -phi[..., 0]), axis=-1)
    coef = np.einsum("tnc,tnc->tn", log.controls, bar)
    assert coef.min() >= cfg.gains.k_omega * cfg.kappa_alpha() - 1e-9
