"""Per-agent estimator, separation estimate and control law.

Everything here is a pure function of a single agent's own measurements; the
module deliberately knows nothing about other agents or about the analysis
code, which has ground-truth access.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from circumnav.geom import TWO_PI, UnitVec2, Vec2, rotate_cw_quarter

#: a-priori bound on |betahat - beta_star| from the estimate and target ranges
BETA_TILDE_SUP = 3.0 * math.pi


class AlphaTooSmall(ValueError):
    """The tangential bias cannot keep every agent rotating counterclockwise."""


@dataclass(frozen=True)
class ControlGains:
    k_est: float
    k_c: float
    k_omega: float
    alpha: float

    def __post_init__(self) -> None:
        for name in ("k_est", "k_c", "k_omega", "alpha"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def check_positive(self) -> None:
        for name in ("k_est", "k_c", "k_omega"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")


def check_separation_target(beta_star, tol: float = 1e-9) -> None:
    if len(beta_star) < 2:
        raise ValueError("beta_star needs one entry per agent, n >= 2")
    for b in beta_star:
        if not 0.0 <= b < TWO_PI:
            raise ValueError(f"beta_star entry {b} outside [0, 2pi)")
    total = math.fsum(beta_star)
    if abs(total - TWO_PI) > tol:
        raise ValueError(f"beta_star sums to {total}, expected 2pi")


def estimator_rate(p_i: Vec2, xhat_i: Vec2, phi_iT: UnitVec2, k_est: float) -> Vec2:
    """Rate of agent i's target estimate: the displacement ``p_i - xhat_i``
    projected off the target bearing and scaled by ``k_est``."""
    r = p_i - xhat_i
    along = r.dot(phi_iT)
    return Vec2(k_est * (r.x - along * phi_iT.x), k_est * (r.y - along * phi_iT.y))


def separation_estimate(psi_ij: float) -> float:
    """Map the measured angle ``psi_ij`` in ``[0, 2pi)`` to a separation
    estimate in ``[-pi, 3pi)``. Exact when both agents sit on one circle
    centred at the target."""
    if psi_ij >= math.pi:
        return 2.0 * psi_ij - 3.0 * math.pi
    return 2.0 * psi_ij + math.pi


def control_input(
    phi_iT: UnitVec2,
    dhat_i: float,
    beta_hat_ij: float,
    d_star: float,
    beta_star_ij: float,
    gains: ControlGains,
) -> Vec2:
    # beta_tilde is a plain difference: wrapping it breaks the alpha margin
    beta_tilde = beta_hat_ij - beta_star_ij
    radial = gains.k_c * (dhat_i - d_star)
    tangential = gains.k_omega * (gains.alpha + beta_tilde)
    bar = rotate_cw_quarter(phi_iT)
    return Vec2(radial * phi_iT.x + tangential * bar.x, radial * phi_iT.y + tangential * bar.y)


def baseline_control_input(
    phi_iT: UnitVec2,
    dhat_i: float,
    beta_ij: float,
    d_star: float,
    beta_star_ij: float,
    gains: ControlGains,
) -> Vec2:
    """Same law driven by the true separation ``beta_ij``.

    Real agents cannot measure ``beta_ij`` without communicating; this is a
    comparison oracle only.
    """
    return control_input(phi_iT, dhat_i, beta_ij, d_star, beta_star_ij, gains)


def validate_alpha(alpha: float, beta_star) -> float:
    """Return the rotation margin ``kappa_alpha = alpha - 3pi``.

    Raises :class:`AlphaTooSmall` if the margin is not strictly positive.
    """
    check_separation_target(beta_star)
    kappa = alpha - BETA_TILDE_SUP
    if not kappa > 0.0:
        raise AlphaTooSmall(f"alpha={alpha:.6g} must exceed 3pi={BETA_TILDE_SUP:.6g}")
    return kappa


def tight_alpha_margin(alpha: float, beta_star) -> float:
    """Margin against the beta_star-dependent bound ``max(pi + b, 3pi - b)``.

    Informational; :func:`validate_alpha` keeps the conservative rule.
    """
    sup = max(max(math.pi + b, 3.0 * math.pi - b) for b in beta_star)
    return alpha - sup
