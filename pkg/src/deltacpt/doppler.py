"""
Maxwell-Boltzmann averaging over the longitudinal velocity.

The weight is exp(-(v / v_mp)^2). Two quadrature backends are provided:
Gauss-Hermite in u = v / v_mp (default) and a uniform trapezoid on
[-cutoff v_mp, cutoff v_mp] kept for validation.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_hermite

from .atomic_params import DEFAULT_ATOM, K_B
from .bloch import liouvillian_stack, steady_state_for, steady_states
from .errors import EvaluationError

CONVENTIONS = ("paper_sqrt3", "conventional_sqrt2")


@dataclass(frozen=True)
class ThermalSpec:
    """Vapour temperature and quadrature settings.

    ``convention="paper_sqrt3"`` uses v_mp = sqrt(3 k_B T / m);
    ``"conventional_sqrt2"`` the textbook most-probable speed sqrt(2 k_B T / m).
    """

    temperature: float = 330.0
    mass: float = DEFAULT_ATOM.mass
    quadrature_nodes: int = 64
    velocity_cutoff: float = 5.0
    convention: str = "paper_sqrt3"
    backend: str = "gauss_hermite"

    def __post_init__(self):
        if self.quadrature_nodes < 3:
            raise ValueError("quadrature_nodes must be >= 3")
        if self.velocity_cutoff < 3:
            raise ValueError("velocity_cutoff must be >= 3")
        if self.convention not in CONVENTIONS:
            raise ValueError(f"convention must be one of {CONVENTIONS}")
        if self.backend not in ("gauss_hermite", "trapezoid"):
            raise ValueError("backend must be 'gauss_hermite' or 'trapezoid'")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")

    @property
    def v_mp(self):
        factor = 3.0 if self.convention == "paper_sqrt3" else 2.0
        return float(np.sqrt(factor * K_B * self.temperature / self.mass))

    def nodes(self):
        """Velocities and normalised weights (weights sum to 1)."""
        u, w = _unit_nodes(self.backend, self.quadrature_nodes, self.velocity_cutoff)
        return self.v_mp * u, w


@lru_cache(maxsize=64)
def _unit_nodes(backend, n, cutoff):
    if backend == "gauss_hermite":
        u, w = roots_hermite(n)
    else:
        u = np.linspace(-cutoff, cutoff, n)
        w = np.exp(-u ** 2)
        w[[0, -1]] *= 0.5
    w = w / w.sum()
    u.setflags(write=False)
    w.setflags(write=False)
    return u, w


def weighted_sum(values, weights):
    """Deterministic weighted reduction over the leading axis."""
    values = np.asarray(values)
    w = np.asarray(weights).reshape((-1,) + (1,) * (values.ndim - 1))
    return np.sum(values * w, axis=0)


def doppler_average(evaluate, thermal, vectorized=False):
    """Thermal average of ``evaluate(v)``.

    ``evaluate`` maps a velocity (m/s) to a complex number or array. With
    ``vectorized=True`` it is called once with the whole node array and must
    return values stacked along the first axis.
    """
    v, w = thermal.nodes()
    if vectorized:
        values = np.asarray(evaluate(v))
    else:
        values = np.array([evaluate(float(vi)) for vi in v])
    finite = np.isfinite(values).reshape(len(v), -1).all(axis=1)
    if not finite.all():
        bad = float(v[np.argmin(finite)])
        raise EvaluationError(f"non-finite integrand at v = {bad:.6g} m/s", velocity=bad)
    return weighted_sum(values, w)


def doppler_averaged_steady_state(fields, decays, thermal):
    """Velocity-averaged steady-state density matrix (3x3)."""
    if thermal.v_mp == 0.0:
        return steady_state_for(fields, decays, 0.0)
    v, w = thermal.nodes()
    rhos = steady_states(liouvillian_stack(fields, decays, v))
    return weighted_sum(rhos, w)
