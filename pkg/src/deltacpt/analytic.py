"""
Closed-form weak-probe coherence, susceptibility and cell propagation.

The coherence is

    rho_ba = (i G_bc Omega_p - Omega_c Omega_mu e^{i(dk z + k_mu x + phi_mu)})
             / (G_bc G_ba + |Omega_c|^2)

with G_bc = gamma_bc/2 + 2 gamma_c - i delta_mu and
G_ba = gamma_c/2 + gamma_ba - i delta_p. The absorption coefficient carries
the propagation prefactor eta * omega_probe N d^2 / (2 eps0 c hbar) so that
alpha is in 1/m.
"""

from dataclasses import dataclass, replace

import numpy as np

from .atomic_params import C_LIGHT, DEFAULT_ATOM, EPS_0, HBAR
from .errors import SingularityError


@dataclass(frozen=True)
class AnalyticParams:
    omega_p0: complex = 0.0
    omega_c: complex = 0.0
    omega_mu: complex = 0.0
    delta_p: float = 0.0
    delta_mu: float = 0.0
    gamma_bc: float = 0.0
    gamma_ba: float = 0.0
    gamma_c: float = 0.0
    delta_k: float = 0.0
    k_mu: float = 0.0
    phi_mu: float = 0.0
    eta: float = 1.0
    density: float = 0.0
    length: float = 0.03
    z0: float = 0.0
    x: float = 0.0
    probe_frequency: float = DEFAULT_ATOM.optical_frequency
    dipole_moment: float = DEFAULT_ATOM.dipole_moment

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")

    @property
    def gamma0_bc(self):
        return 0.5 * self.gamma_bc + 2 * self.gamma_c - 1j * self.delta_mu

    @property
    def gamma0_ba(self):
        return 0.5 * self.gamma_c + self.gamma_ba - 1j * self.delta_p

    @property
    def denominator(self):
        return self.gamma0_bc * self.gamma0_ba + abs(self.omega_c) ** 2

    @property
    def coupling_constant(self):
        """eta * omega N d^2 / (2 eps0 c hbar), in 1/(m s)."""
        return (self.eta * self.probe_frequency * self.density * self.dipole_moment ** 2
                / (2 * EPS_0 * C_LIGHT * HBAR))

    def with_(self, **changes):
        return replace(self, **changes)


def _check_denominator(p):
    den = p.denominator
    if np.any(den == 0):
        raise SingularityError(
            "G_bc G_ba + |Omega_c|^2 = 0 "
            f"(delta_p={p.delta_p!r}, delta_mu={p.delta_mu!r}, gamma_bc={p.gamma_bc!r}, "
            f"gamma_ba={p.gamma_ba!r}, gamma_c={p.gamma_c!r}, omega_c={p.omega_c!r})")
    return den


def coherence_rho_ba(p, z=0.0, omega_p=None):
    """Probe coherence at position ``z``; ``omega_p`` overrides ``p.omega_p0``."""
    den = _check_denominator(p)
    wp = p.omega_p0 if omega_p is None else omega_p
    phase = p.delta_k * z + p.k_mu * p.x + p.phi_mu
    num = 1j * p.gamma0_bc * wp - p.omega_c * p.omega_mu * np.exp(1j * phase)
    return num / den


def susceptibility(rho_ab, p):
    """chi = -N d^2 <rho_ab> / (hbar eps0 Omega_p)."""
    if p.omega_p0 == 0:
        raise SingularityError("susceptibility undefined for Omega_p = 0")
    return -p.density * p.dipole_moment ** 2 * rho_ab / (HBAR * EPS_0 * p.omega_p0)


def absorption_alpha(p):
    """Complex absorption coefficient (1/m)."""
    den = _check_denominator(p)
    return p.coupling_constant * p.gamma0_bc / den


def _expm1_ratio(s, length):
    """(e^{s L} - 1) / s with the s -> 0 limit."""
    if abs(s * length) < 1e-8:
        return length * (1 + 0.5 * s * length)
    return np.expm1(s * length) / s


def _exit_field(p, alpha, beta):
    """Exit field for dOmega/dz = -alpha Omega - i beta Omega_c Omega_mu e^{i phi(z)}."""
    wp0 = p.omega_p0
    if p.omega_mu == 0 or p.omega_c == 0:
        return np.exp(-alpha * p.length) * wp0
    s = alpha + 1j * p.delta_k
    source = (beta * p.omega_c * p.omega_mu * np.exp(1j * p.delta_k * p.z0)
              * np.exp(1j * (p.k_mu * p.x + p.phi_mu)))
    return np.exp(-alpha * p.length) * (wp0 - 1j * source * _expm1_ratio(s, p.length))


def propagate_closed_form(p):
    """Probe Rabi frequency at the cell exit z0 + L."""
    alpha = absorption_alpha(p)
    if p.omega_mu != 0 and p.omega_c != 0 and p.gamma0_bc == 0:
        raise SingularityError("G_bc = 0 with a microwave source term")
    beta = alpha / p.gamma0_bc if p.gamma0_bc != 0 else 0.0
    return _exit_field(p, alpha, beta)


def analytic_params_from(fields, decays, *, density=0.0, length=0.03, z0=0.0, eta=1.0,
                         atom=DEFAULT_ATOM, velocity=0.0):
    """Map a Lindblad-model configuration onto the closed-form parameters.

    The ground-coherence detuning in the loop frame is
    Delta_c(v) + delta_mu - Delta_p(v), with delta_mu dropped when there is
    no microwave; the probe detuning enters with the opposite sign convention. Rates are matched so that both models damp
    rho_bc and rho_ab identically.
    """
    dp = fields.delta_p - fields.k_p * velocity
    dc = fields.delta_c - fields.k_c * velocity
    return AnalyticParams(
        omega_p0=fields.omega_p,
        omega_c=fields.omega_c,
        omega_mu=fields.omega_mu,
        delta_p=-dp,
        delta_mu=dc + fields.ground_offset - dp,
        gamma_bc=decays.gamma_bc + decays.gamma_cb,
        gamma_ba=0.5 * (decays.gamma_ab + decays.gamma_ac + decays.gamma_cb),
        gamma_c=decays.gamma_c,
        delta_k=fields.delta_k,
        k_mu=fields.k_mu,
        phi_mu=fields.phi_mu,
        eta=eta,
        density=density,
        length=length,
        z0=z0,
        x=fields.x,
        probe_frequency=atom.optical_frequency,
        dipole_moment=atom.dipole_moment,
    )


def coherence_from_fields(fields, decays, velocities=0.0):
    """Closed-form rho_ba for a Lindblad-model configuration.

    Vectorised over ``velocities``; the loop phase is taken at ``fields.z``.
    """
    v = np.asarray(velocities, dtype=float)
    return coherence_rho_ba(analytic_params_from(fields, decays, velocity=v), z=fields.z)


def _velocity_params(fields, decays, thermal, cell=None, atom=DEFAULT_ATOM):
    v, w = thermal.nodes() if thermal.v_mp > 0 else (np.zeros(1), np.ones(1))
    kw = {}
    if cell is not None:
        kw = dict(density=cell.density, length=cell.length, z0=cell.z0, eta=cell.eta)
        fields = fields.with_(x=cell.x)
    return analytic_params_from(fields, decays, atom=atom, velocity=v, **kw), w


def doppler_averaged_coherence(fields, decays, thermal):
    """Thermal average of the closed-form rho_ba at ``fields.z``."""
    p, w = _velocity_params(fields, decays, thermal)
    return complex(np.sum(w * coherence_rho_ba(p, z=fields.z)))


def doppler_averaged_coherence_probe_axis(fields, decays, thermal, delta_p):
    """Velocity-averaged closed-form rho_ba over an array of probe detunings.

    The coupling detuning follows as -delta_p (two-photon configuration).
    """
    dp = np.asarray(delta_p, dtype=float)
    v, w = thermal.nodes() if thermal.v_mp > 0 else (np.zeros(1), np.ones(1))
    f = fields.with_(delta_p=dp[None, :], delta_c=-dp[None, :], two_photon=False)
    p = analytic_params_from(f, decays, velocity=v[:, None])
    return np.sum(w[:, None] * coherence_rho_ba(p, z=fields.z), axis=0)


def doppler_averaged_exit_field(fields, decays, cell, thermal, atom=DEFAULT_ATOM):
    """Closed-form exit field with velocity-averaged coefficients.

    Averaging the weak-probe coherence over velocities keeps the envelope
    equation linear, with alpha = kappa <G_bc/D> and source weight
    kappa <1/D>, so the exit field has the same closed form.
    """
    p, w = _velocity_params(fields, decays, thermal, cell, atom)
    den = _check_denominator(p)
    kappa = p.coupling_constant
    alpha = kappa * np.sum(w * p.gamma0_bc / den)
    beta = kappa * np.sum(w / den)
    scalar = replace(p, delta_p=0.0, delta_mu=0.0)
    return complex(_exit_field(scalar, alpha, beta))
