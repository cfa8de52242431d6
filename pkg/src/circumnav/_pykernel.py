"""Pure-Python (numpy) integration kernel.

Mirrors ``circumnav._ckernel`` operation for operation. The compiled kernel is
preferred when it is importable; this one is the fallback and the reference
the compiled code is tested against.

Status codes shared with the compiled kernel:
``0`` ok, ``1`` agent on the target, ``2`` agent on its neighbour,
``3`` non-finite state.
"""

from __future__ import annotations

import math

import numpy as np

OK = 0
TARGET_DEGENERATE = 1
NEIGHBOR_DEGENERATE = 2
NON_FINITE = 3

EULER = 0
RK4 = 1

_TWO_PI = 2.0 * math.pi


def measurements(pos, est, target, eps_dist):
    """Bearings, psi, separation estimates and distance estimates.

    Works on arrays shaped ``(..., n, 2)``. Returns a dict of arrays plus the
    status and the first offending agent (``-1`` when fine).
    """
    rel = target - pos
    d = np.hypot(rel[..., 0], rel[..., 1])
    rij = np.roll(pos, -1, axis=-2) - pos
    dij = np.hypot(rij[..., 0], rij[..., 1])
    status, agent = OK, -1
    bad = ~(d > eps_dist)
    if bad.any():
        status, agent = TARGET_DEGENERATE, int(np.argwhere(bad)[0][-1])
    else:
        bad = ~(dij > eps_dist)
        if bad.any():
            status, agent = NEIGHBOR_DEGENERATE, int(np.argwhere(bad)[0][-1])
    with np.errstate(divide="ignore", invalid="ignore"):
        phx = rel[..., 0] / d
        phy = rel[..., 1] / d
        pjx = rij[..., 0] / dij
        pjy = rij[..., 1] / dij
    psi = np.arctan2(phx * pjy - phy * pjx, phx * pjx + phy * pjy)
    psi = np.where(psi < 0.0, psi + _TWO_PI, psi)
    psi = np.where(psi >= _TWO_PI, psi - _TWO_PI, psi)
    betahat = np.where(psi >= math.pi, 2.0 * psi - 3.0 * math.pi, 2.0 * psi + math.pi)
    r = pos - est
    dhat = np.hypot(r[..., 0], r[..., 1])
    return {
        "d": d, "phx": phx, "phy": phy, "psi": psi, "betahat": betahat,
        "dhat": dhat, "rx": r[..., 0], "ry": r[..., 1],
    }, status, agent


def true_separations(pos, target):
    """CCW angle at the target from each agent to its ring neighbour."""
    a = pos - target
    b = np.roll(a, -1, axis=-2)
    ang = np.arctan2(a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0],
                     a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1])
    ang = np.where(ang < 0.0, ang + _TWO_PI, ang)
    return np.where(ang >= _TWO_PI, ang - _TWO_PI, ang)


def rates(pos, est, target, d_star, beta_star, k_est, k_c, k_omega, alpha,
          baseline=False, eps_dist=1e-9):
    """Position and estimate rates of every agent.

    Returns ``(dpos, dest, status, agent)``.
    """
    m, status, agent = measurements(pos, est, target, eps_dist)
    beta = true_separations(pos, target) if baseline else m["betahat"]
    radial = k_c * (m["dhat"] - d_star)
    tang = k_omega * (alpha + (beta - beta_star))
    phx, phy = m["phx"], m["phy"]
    dpos = np.stack((radial * phx + tang * phy, radial * phy - tang * phx), axis=-1)
    along = m["rx"] * phx + m["ry"] * phy
    dest = np.stack((k_est * (m["rx"] - along * phx), k_est * (m["ry"] - along * phy)), axis=-1)
    return dpos, dest, status, agent


# blow-ups are detected and reported through the status code
@np.errstate(over="ignore", invalid="ignore")
def integrate(pos0, est0, target, d_star, beta_star, k_est, k_c, k_omega, alpha,
              dt, n_steps, stride, method, baseline=False, eps_dist=1e-9):
    """Fixed-step integration with all agents advanced from one snapshot.

    Samples every ``stride`` steps and always the final step. Returns
    ``(pos_log, est_log, steps, status, fail_step, fail_agent)`` where
    ``steps`` holds the step index of each sample. On failure the logs are
    truncated to the samples reached and ``fail_step`` is the index of the
    state at which the problem was detected.
    """
    pos = np.array(pos0, dtype=float)
    est = np.array(est0, dtype=float)
    target = np.asarray(target, dtype=float)
    beta_star = np.asarray(beta_star, dtype=float)
    n_samples = n_steps // stride + 1 + (1 if n_steps % stride else 0)
    n = pos.shape[0]
    pos_log = np.empty((n_samples, n, 2))
    est_log = np.empty((n_samples, n, 2))
    steps = np.empty(n_samples, dtype=np.int64)
    args = (target, d_star, beta_star, k_est, k_c, k_omega, alpha, baseline, eps_dist)

    pos_log[0], est_log[0], steps[0] = pos, est, 0
    k_log = 1
    _, _, status, agent = rates(pos, est, *args)
    if status != OK:
        return pos_log[:1], est_log[:1], steps[:1], status, 0, agent

    for k in range(n_steps):
        k1p, k1e, status, agent = rates(pos, est, *args)
        if status == OK and method == RK4:
            h = 0.5 * dt
            k2p, k2e, status, agent = rates(pos + h * k1p, est + h * k1e, *args)
            if status == OK:
                k3p, k3e, status, agent = rates(pos + h * k2p, est + h * k2e, *args)
            if status == OK:
                k4p, k4e, status, agent = rates(pos + dt * k3p, est + dt * k3e, *args)
            if status == OK:
                pos = pos + (dt / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
                est = est + (dt / 6.0) * (k1e + 2.0 * k2e + 2.0 * k3e + k4e)
        elif status == OK:
            pos = pos + dt * k1p
            est = est + dt * k1e
        if status != OK:
            return pos_log[:k_log], est_log[:k_log], steps[:k_log], status, k, agent
        if not (np.isfinite(pos).all() and np.isfinite(est).all()):
            agent = int(np.argwhere(~(np.isfinite(pos) & np.isfinite(est)).all(axis=1))[0][0])
            return pos_log[:k_log], est_log[:k_log], steps[:k_log], NON_FINITE, k + 1, agent
        if (k + 1) % stride == 0 or k + 1 == n_steps:
            pos_log[k_log], est_log[k_log], steps[k_log] = pos, est, k + 1
            k_log += 1
    return pos_log, est_log, steps, OK, -1, -1
