"""
Rotating-frame Hamiltonian, Lindblad superoperator and steady state of the
closed Delta system.

Basis ordering is (|a>, |b>, |c>): |a> excited, |b> and |c> the two ground
hyperfine levels. Density matrices are vectorised by column stacking,
``vec(rho) = rho.ravel(order="F")``, so ``vec(A rho B) = (B.T kron A) vec(rho)``.
Frequencies are angular and hbar = 1 throughout.
"""

import warnings
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

from .errors import DegenerateSteadyStateError, IntegrationError

A, B, C = 0, 1, 2
DIM = 3
_EYE = np.eye(DIM)


@dataclass(frozen=True)
class FieldConfig:
    """Probe, coupling and microwave fields in the closed-loop frame.

    ``delta_p``/``delta_c`` are the optical detunings at rest; the Doppler
    shift ``-k v`` is added per velocity class. ``delta_mu`` offsets the
    ground coherence |b><c| in the loop frame; with ``omega_mu == 0`` there
    is no loop and it has no effect. ``x``/``z`` locate the atom for
    the closed-loop phase ``(k_p - k_c) z + k_mu x + phi_mu``.
    """

    omega_p: complex = 0.0
    omega_c: complex = 0.0
    omega_mu: float = 0.0
    delta_p: float = 0.0
    delta_c: float = 0.0
    delta_mu: float = 0.0
    phi_mu: float = 0.0
    k_p: float = 0.0
    k_c: float = 0.0
    k_mu: float = 0.0
    x: float = 0.0
    z: float = 0.0
    two_photon: bool = False

    def __post_init__(self):
        if min(self.k_p, self.k_c, self.k_mu) < 0:
            raise ValueError("wave numbers must be non-negative")
        if self.two_photon:
            object.__setattr__(self, "delta_c", -self.delta_p)

    @property
    def ground_offset(self):
        """Loop-frame offset of |c>; zero when there is no microwave field."""
        return self.delta_mu if self.omega_mu != 0 else 0.0

    @property
    def delta_k(self):
        return self.k_p - self.k_c

    def loop_phase(self, z=None):
        """Closed-loop phase at position ``z`` (defaults to ``self.z``)."""
        z = self.z if z is None else z
        return self.delta_k * z + self.k_mu * self.x + self.phi_mu

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class DecayRates:
    """Relaxation rates (rad/s) of the five Lindblad channels.

    gamma_ab, gamma_ac: spontaneous decay |a> -> |b>, |a> -> |c>.
    gamma_bc: ground relaxation |c> -> |b>; gamma_cb: |b> -> |c>.
    gamma_c: pure dephasing of the ground coherence (operator |b><b| - |c><c|).
    """

    gamma_ab: float = 0.0
    gamma_ac: float = 0.0
    gamma_bc: float = 0.0
    gamma_cb: float = 0.0
    gamma_c: float = 0.0

    def __post_init__(self):
        if min(self.as_tuple()) < 0:
            raise ValueError("decay rates must be non-negative")

    def as_tuple(self):
        return (self.gamma_ab, self.gamma_ac, self.gamma_bc, self.gamma_cb, self.gamma_c)

    def nonzero_min(self):
        rates = [r for r in self.as_tuple() if r > 0]
        return min(rates) if rates else 0.0

    @classmethod
    def from_excited_linewidth(cls, linewidth, gamma_bc, gamma_cb=None, gamma_c=0.0,
                               split=True):
        """Rates from a total excited-state linewidth.

        ``split=True`` shares ``linewidth`` equally over the two decay
        channels; ``split=False`` gives each channel the full linewidth.
        """
        g = 0.5 * linewidth if split else linewidth
        return cls(gamma_ab=g, gamma_ac=g, gamma_bc=gamma_bc,
                   gamma_cb=gamma_bc if gamma_cb is None else gamma_cb, gamma_c=gamma_c)


def doppler_detunings(fields, velocity):
    """Doppler-shifted (delta_p, delta_c) for longitudinal velocity(ies)."""
    v = np.asarray(velocity, dtype=float)
    return fields.delta_p - fields.k_p * v, fields.delta_c - fields.k_c * v


def build_hamiltonian(fields, velocity=0.0):
    """3x3 rotating-frame Hamiltonian for one velocity class.

    Diagonal (0, Delta_p(v), Delta_c(v) + ground_offset); Omega_p on |b><a|,
    Omega_c on |c><a| and Omega_mu e^{i phi(z)} on |b><c|, plus conjugates.
    """
    dp, dc = doppler_detunings(fields, velocity)
    mw = fields.omega_mu * np.exp(1j * fields.loop_phase())
    h = np.zeros((DIM, DIM), dtype=complex)
    h[B, B] = dp
    h[C, C] = dc + fields.ground_offset
    h[B, A] = fields.omega_p
    h[C, A] = fields.omega_c
    h[B, C] = mw
    h[A, B] = np.conj(h[B, A])
    h[A, C] = np.conj(h[C, A])
    h[C, B] = np.conj(mw)
    return h


def _ket_bra(i, j):
    m = np.zeros((DIM, DIM))
    m[i, j] = 1.0
    return m


def collapse_operators(decays):
    """The five jump operators, rates folded in."""
    g = decays
    return [
        np.sqrt(g.gamma_bc) * _ket_bra(B, C),
        np.sqrt(g.gamma_cb) * _ket_bra(C, B),
        np.sqrt(g.gamma_ab) * _ket_bra(B, A),
        np.sqrt(g.gamma_ac) * _ket_bra(C, A),
        np.sqrt(g.gamma_c) * (_ket_bra(B, B) - _ket_bra(C, C)),
    ]


def hamiltonian_superop(h):
    return -1j * (np.kron(_EYE, h) - np.kron(h.T, _EYE))


def dissipator(c):
    """Column-stacked superoperator of c rho c^+ - {c^+ c, rho}/2."""
    cdc = c.conj().T @ c
    return (np.kron(c.conj(), c)
            - 0.5 * (np.kron(_EYE, cdc) + np.kron(cdc.T, _EYE)))


def dissipator_superop(decays):
    return sum(dissipator(c) for c in collapse_operators(decays))


def build_liouvillian(h, decays):
    """9x9 generator L with vec(drho/dt) = L vec(rho)."""
    return hamiltonian_superop(np.asarray(h, dtype=complex)) + dissipator_superop(decays)


def vec(rho):
    return np.asarray(rho, dtype=complex).ravel(order="F")


def unvec(v):
    return np.asarray(v).reshape((DIM, DIM), order="F")


# indices of the populations in the column-stacked vector
_POP = [i * DIM + i for i in range(DIM)]


def _trace_system(lv):
    """Replace the |a><a| row by the trace constraint. Works on stacks."""
    m = np.array(lv, dtype=complex, copy=True)
    m[..., _POP[0], :] = 0.0
    m[..., _POP[0], _POP] = 1.0
    rhs = np.zeros(m.shape[:-1], dtype=complex)
    rhs[..., _POP[0]] = 1.0
    return m, rhs


def hermitize(rho):
    return 0.5 * (rho + np.conj(np.swapaxes(rho, -1, -2)))


def steady_state(lv, residual_tol=1e-8):
    """Unique trace-one fixed point of the Liouvillian ``lv``.

    Solved densely after replacing one population row with the trace
    condition; raises DegenerateSteadyStateError if the kernel is not
    one-dimensional.
    """
    lv = np.asarray(lv, dtype=complex)
    m, rhs = _trace_system(lv)
    try:
        with warnings.catch_warnings():
            # singularity is reported below as DegenerateSteadyStateError
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu = scipy.linalg.lu_factor(m, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise DegenerateSteadyStateError(str(exc)) from exc
    if np.any(np.abs(np.diag(lu[0])) <= 1e-14 * max(np.abs(m).max(), 1.0)):
        raise DegenerateSteadyStateError("Liouvillian kernel is not one-dimensional")
    x = scipy.linalg.lu_solve(lu, rhs)
    scale = max(np.abs(lv).max(), 1e-300)
    residual = np.abs(lv @ x).max() / scale
    if not np.isfinite(residual) or residual > residual_tol:
        raise DegenerateSteadyStateError(
            f"steady-state residual {residual:.3e} exceeds {residual_tol:.0e}")
    return hermitize(unvec(x))


def steady_states(lvs):
    """Batched :func:`steady_state` for a stack of shape (n, 9, 9)."""
    lvs = np.asarray(lvs, dtype=complex)
    m, rhs = _trace_system(lvs)
    try:
        x = np.linalg.solve(m, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise DegenerateSteadyStateError(str(exc)) from exc
    scale = np.abs(lvs).max(axis=(-1, -2))
    residual = np.abs(np.einsum("nij,nj->ni", lvs, x)).max(axis=-1) / scale
    bad = ~np.isfinite(residual) | (residual > 1e-8)
    if np.any(bad):
        raise DegenerateSteadyStateError(
            f"{bad.sum()} of {len(bad)} Liouvillians have no unique steady state")
    rhos = x.reshape((-1, DIM, DIM)).transpose(0, 2, 1)
    return hermitize(rhos)


def time_evolve(rho0, lv, t, method="expm", rtol=1e-10, atol=1e-12):
    """Propagate rho0 for a time ``t`` under the constant generator ``lv``.

    ``method="expm"`` uses scipy's scaling-and-squaring exponential;
    ``method="ode"`` integrates adaptively with an implicit solver.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    rho0 = np.asarray(rho0, dtype=complex)
    if t == 0:
        return rho0.copy()
    lv = np.asarray(lv, dtype=complex)
    if method == "expm":
        out = scipy.linalg.expm(lv * t) @ vec(rho0)
    elif method == "ode":
        sol = solve_ivp(lambda _t, y: lv @ y, (0.0, t), vec(rho0), method="DOP853",
                        rtol=rtol, atol=atol)
        if not sol.success:
            raise IntegrationError(sol.message)
        out = sol.y[:, -1]
    else:
        raise ValueError(f"unknown method {method!r}")
    if not np.all(np.isfinite(out)):
        raise IntegrationError("non-finite state during time evolution")
    return unvec(out)


def bloch_rhs(rho, fields, decays, phi_r=None, velocity=0.0):
    """drho/dt written out component by component.

    An independent evaluation of the same master equation as
    ``build_liouvillian``; ``phi_r`` overrides the closed-loop phase. Valid
    for any 3x3 matrix, Hermitian or not.
    """
    r = np.asarray(rho, dtype=complex)
    g = decays
    dp, dc = doppler_detunings(fields, velocity)
    db = float(dp)
    dcc = float(dc) + fields.ground_offset
    phi = fields.loop_phase() if phi_r is None else phi_r
    wp, wc = fields.omega_p, fields.omega_c
    wpc, wcc = np.conj(wp), np.conj(wc)
    m = fields.omega_mu * np.exp(1j * phi)
    mc = np.conj(m)

    raa, rab, rac = r[A]
    rba, rbb, rbc = r[B]
    rca, rcb, rcc = r[C]

    g_a = g.gamma_ab + g.gamma_ac
    # coherence damping rates
    g_ab = 0.5 * (g_a + g.gamma_cb + g.gamma_c)
    g_ac = 0.5 * (g_a + g.gamma_bc + g.gamma_c)
    g_bc = 0.5 * (g.gamma_bc + g.gamma_cb) + 2 * g.gamma_c

    out = np.empty((DIM, DIM), dtype=complex)
    out[A, A] = -g_a * raa - 1j * (wpc * rba - wp * rab + wcc * rca - wc * rac)
    out[B, B] = (g.gamma_ab * raa + g.gamma_bc * rcc - g.gamma_cb * rbb
                 - 1j * (wp * rab - wpc * rba + m * rcb - mc * rbc))
    out[C, C] = (g.gamma_ac * raa + g.gamma_cb * rbb - g.gamma_bc * rcc
                 - 1j * (wc * rac - wcc * rca + mc * rbc - m * rcb))

    out[A, B] = -g_ab * rab - 1j * (wpc * (rbb - raa) + wcc * rcb - db * rab - mc * rac)
    out[B, A] = -g_ab * rba - 1j * (wp * (raa - rbb) + db * rba + m * rca - wc * rbc)
    out[A, C] = -g_ac * rac - 1j * (wpc * rbc + wcc * (rcc - raa) - dcc * rac - m * rab)
    out[C, A] = -g_ac * rca - 1j * (wc * (raa - rcc) + mc * rba + dcc * rca - wp * rcb)
    out[B, C] = -g_bc * rbc - 1j * (wp * rac + (db - dcc) * rbc + m * (rcc - rbb) - wcc * rba)
    out[C, B] = -g_bc * rcb - 1j * (wc * rab + mc * (rbb - rcc) + (dcc - db) * rcb - wpc * rca)
    return out


def steady_state_for(fields, decays, velocity=0.0):
    """Convenience: steady state of one velocity class."""
    return steady_state(build_liouvillian(build_hamiltonian(fields, velocity), decays))


def liouvillian_stack(fields, decays, velocities):
    """Liouvillians for an array of velocities, shape (n, 9, 9)."""
    v = np.atleast_1d(np.asarray(velocities, dtype=float))
    base = build_liouvillian(build_hamiltonian(fields, 0.0), decays)
    # Only the two diagonal detunings depend on v: H(v) = H(0) - v diag(0, k_p, k_c)
    kdiag = np.diag([0.0, fields.k_p, fields.k_c]).astype(complex)
    dk = hamiltonian_superop(kdiag)
    return base[None, :, :] - v[:, None, None] * dk[None, :, :]
