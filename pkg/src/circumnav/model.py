"""World state, the directed ring topology and ground-truth angular geometry.

Agent indices in this Python API are 0-based; everything written to disk or
shown to a user is 1-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from circumnav.geom import EPS_DIST, TWO_PI, Vec2, ccw_angle, unit_bearing


class NotBalanced(ValueError):
    pass


@dataclass(frozen=True)
class AgentState:
    position: Vec2
    estimate: Vec2


@dataclass(frozen=True)
class WorldState:
    time: float
    target: Vec2
    agents: tuple[AgentState, ...]

    def __post_init__(self) -> None:
        if len(self.agents) < 2:
            raise ValueError("need at least two agents")

    @property
    def n(self) -> int:
        return len(self.agents)

    @classmethod
    def from_arrays(cls, time: float, target, positions, estimates) -> WorldState:
        agents = tuple(
            AgentState(Vec2(float(p[0]), float(p[1])), Vec2(float(e[0]), float(e[1])))
            for p, e in zip(positions, estimates)
        )
        return cls(float(time), Vec2(float(target[0]), float(target[1])), agents)

    def positions(self) -> np.ndarray:
        return np.array([a.position.as_tuple() for a in self.agents])

    def estimates(self) -> np.ndarray:
        return np.array([a.estimate.as_tuple() for a in self.agents])


@dataclass(frozen=True)
class RingTopology:
    n: int

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError("a ring needs n >= 2")

    def neighbor(self, i: int) -> int:
        return (i + 1) % self.n

    def edges(self) -> list[tuple[int, int]]:
        return [(i, self.neighbor(i)) for i in range(self.n)]


def ring_laplacian(topology: RingTopology) -> np.ndarray:
    n = topology.n
    L = np.eye(n)
    for i, j in topology.edges():
        L[i, j] -= 1.0
    return L


def algebraic_connectivity(L: np.ndarray, tol: float = 1e-9) -> float:
    """Second-smallest eigenvalue of the symmetric part of a balanced Laplacian.

    For a balanced digraph this equals the minimum of the Rayleigh quotient
    ``x^T L x / x^T x`` over nonzero ``x`` orthogonal to the ones vector.
    """
    L = np.asarray(L, dtype=float)
    if np.max(np.abs(L.sum(axis=0))) > tol:
        raise NotBalanced("Laplacian column sums are nonzero")
    sym = 0.5 * (L + L.T)
    return float(np.linalg.eigvalsh(sym)[1])


def ring_connectivity(n: int) -> float:
    """Closed form of :func:`algebraic_connectivity` on the ``n``-ring."""
    return 1.0 - math.cos(TWO_PI / n)


def true_separation(world: WorldState, i: int, j: int, eps_dist: float = EPS_DIST) -> float:
    """CCW angle subtended at the target from agent ``i`` to agent ``j``."""
    x = world.target
    a = unit_bearing(x, world.agents[i].position, eps_dist)
    b = unit_bearing(x, world.agents[j].position, eps_dist)
    return ccw_angle(a, b)


def measured_psi(world: WorldState, i: int, j: int, eps_dist: float = EPS_DIST) -> float:
    """Angle agent ``i`` measures from its target bearing to its bearing toward ``j``."""
    p_i = world.agents[i].position
    phi_iT = unit_bearing(p_i, world.target, eps_dist)
    phi_ij = unit_bearing(p_i, world.agents[j].position, eps_dist)
    return ccw_angle(phi_iT, phi_ij)


def ring_separations(world: WorldState) -> np.ndarray:
    topo = RingTopology(world.n)
    return np.array([true_separation(world, i, j) for i, j in topo.edges()])


def is_angularly_ordered(separations, tol: float = 1e-9) -> bool:
    """Ring separations wind exactly once around the target."""
    return abs(float(np.sum(separations)) - TWO_PI) <= tol
