"""
Atomic data for 85Rb, angular-momentum algebra and the microwave coupling.

All frequencies are angular (rad/s) unless a name says otherwise.
"""

from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import factorial, sqrt

import numpy as np
import scipy.constants as sc

from .errors import DomainError

TWO_PI = 2 * np.pi
HBAR = sc.hbar
MU_B = sc.physical_constants["Bohr magneton"][0]
MU_0 = sc.mu_0
EPS_0 = sc.epsilon_0
C_LIGHT = sc.c
K_B = sc.k
AMU = sc.physical_constants["atomic mass constant"][0]

#: 2 mu_B / hbar, the electron-spin gyromagnetic prefactor of the MW coupling (rad s^-1 T^-1)
MW_PREFACTOR = 2 * MU_B / HBAR


@dataclass(frozen=True)
class AtomSpec:
    """Effective three-level atom.

    The excited level is a single effective state; the two ground levels are
    the hyperfine manifolds F = I - J and F = I + J.
    """

    name: str
    mass: float  # kg
    ground_hyperfine_splitting: float  # rad/s
    nuclear_spin: Fraction
    electron_spin: Fraction
    dipole_moment: float  # C m
    optical_wavelength: float  # m
    natural_linewidth: float  # rad/s

    @property
    def f_values(self):
        """Allowed total angular momenta F = |I-J| .. I+J."""
        i, j = self.nuclear_spin, self.electron_spin
        lo = abs(i - j)
        return tuple(lo + n for n in range(int(i + j - lo) + 1))

    @property
    def optical_frequency(self):
        return TWO_PI * C_LIGHT / self.optical_wavelength

    @property
    def k_optical(self):
        return TWO_PI / self.optical_wavelength

    @property
    def k_microwave(self):
        return self.ground_hyperfine_splitting / C_LIGHT


_RB85_MASS = 84.911789738 * AMU
# Hyperfine splitting rounded to the 3.03574 GHz quoted for the MW drive.
_RB85_HFS = TWO_PI * 3.03574e9

RB85_D1 = AtomSpec(
    name="rb85_d1",
    mass=_RB85_MASS,
    ground_hyperfine_splitting=_RB85_HFS,
    nuclear_spin=Fraction(5, 2),
    electron_spin=Fraction(1, 2),
    dipole_moment=2.5377e-29,
    optical_wavelength=794.979e-9,
    natural_linewidth=TWO_PI * 5.746e6,
)

RB85_D2 = replace(
    RB85_D1,
    name="rb85_d2",
    dipole_moment=3.5842e-29,
    optical_wavelength=780.241e-9,
    natural_linewidth=TWO_PI * 6.0666e6,
)

ATOM_PRESETS = {a.name: a for a in (RB85_D1, RB85_D2)}
DEFAULT_ATOM = RB85_D1


def vapor_density(temperature):
    """Rb number density (m^-3) from the liquid-phase vapour-pressure curve.

    Valid above the 312.46 K melting point; below it the solid-phase curve
    is used.
    """
    t = float(temperature)
    if t <= 0:
        raise DomainError("temperature must be positive")
    if t > 312.46:
        log_p = 15.88253 - 4529.635 / t + 0.00058663 * t - 2.99138 * np.log10(t)
    else:
        log_p = (-94.04826 - 1961.258 / t - 0.03771687 * t
                 + 42.57526 * np.log10(t))
    pressure = 10 ** log_p * 133.322368  # torr -> Pa
    return pressure / (K_B * t)


# --- angular momentum --------------------------------------------------------

def _half(x, name):
    two = Fraction(x) * 2
    if two.denominator != 1:
        raise DomainError(f"{name}={x} is not a multiple of 1/2")
    return int(two)


def _check_jm(j2, m2, label):
    if j2 < 0:
        raise DomainError(f"{label}: j must be non-negative")
    if (j2 - m2) % 2:
        raise DomainError(f"{label}: j and m parity mismatch")
    if abs(m2) > j2:
        raise DomainError(f"{label}: |m| exceeds j")


def cg_coefficient(j1, m1, j2, m2, J, M):
    """Clebsch-Gordan coefficient <j1 m1; j2 m2 | J M> (Condon-Shortley).

    The Racah sum is evaluated in exact rational arithmetic and converted to
    float only at the end. Arguments may be ints, floats or Fractions that
    are multiples of 1/2.
    """
    tj1, tm1 = _half(j1, "j1"), _half(m1, "m1")
    tj2, tm2 = _half(j2, "j2"), _half(m2, "m2")
    tJ, tM = _half(J, "J"), _half(M, "M")
    _check_jm(tj1, tm1, "(j1, m1)")
    _check_jm(tj2, tm2, "(j2, m2)")
    _check_jm(tJ, tM, "(J, M)")
    if (tj1 + tj2 + tJ) % 2:
        raise DomainError("j1 + j2 + J must be an integer")
    if tM != tm1 + tm2:
        return 0.0
    if tJ < abs(tj1 - tj2) or tJ > tj1 + tj2:
        return 0.0

    # every combination below is an integer once halved
    a = (tj1 + tj2 - tJ) // 2
    b = (tj1 - tj2 + tJ) // 2
    c = (-tj1 + tj2 + tJ) // 2
    d = (tj1 + tj2 + tJ) // 2 + 1
    pre = Fraction((tJ + 1) * factorial(a) * factorial(b) * factorial(c), factorial(d))
    pre *= (factorial((tJ + tM) // 2) * factorial((tJ - tM) // 2)
            * factorial((tj1 - tm1) // 2) * factorial((tj1 + tm1) // 2)
            * factorial((tj2 - tm2) // 2) * factorial((tj2 + tm2) // 2))

    e = (tj1 - tm1) // 2
    f = (tj2 + tm2) // 2
    g = (tJ - tj2 + tm1) // 2
    h = (tJ - tj1 - tm2) // 2
    total = Fraction(0)
    for k in range(max(0, -g, -h), min(a, e, f) + 1):
        denom = (factorial(k) * factorial(a - k) * factorial(e - k)
                 * factorial(f - k) * factorial(g + k) * factorial(h + k))
        total += Fraction((-1) ** k, denom)
    if total == 0:
        return 0.0
    sign = 1.0 if total > 0 else -1.0
    return sign * sqrt(pre * total * total)


def _spin_element(op, j, mj_out, mj_in):
    """<j mj_out| op |j mj_in> for op in {J+, J-, Jz}."""
    if op == "Jz":
        return float(mj_in) if mj_out == mj_in else 0.0
    if op == "J+":
        return sqrt(j * (j + 1) - mj_in * (mj_in + 1)) if mj_out == mj_in + 1 else 0.0
    if op == "J-":
        return sqrt(j * (j + 1) - mj_in * (mj_in - 1)) if mj_out == mj_in - 1 else 0.0
    raise DomainError(f"unknown operator {op!r}; expected 'J+', 'J-' or 'Jz'")


def _mvals(j):
    return [Fraction(-j) + n for n in range(int(2 * j) + 1)]


def hyperfine_matrix_element(F1, m1, F2, m2, op, atom=DEFAULT_ATOM):
    """<F2 m2| op |F1 m1> with op acting on the electron angular momentum J.

    Both hyperfine states are expanded in the uncoupled |m_I, m_J> basis
    with Clebsch-Gordan coefficients; the nuclear moment is not coupled.
    """
    i, j = atom.nuclear_spin, atom.electron_spin
    allowed = {i - j, i + j}
    F1, F2 = Fraction(F1), Fraction(F2)
    m1, m2 = Fraction(m1), Fraction(m2)
    for F, m in ((F1, m1), (F2, m2)):
        if F not in allowed:
            raise DomainError(f"F={F} is not one of the ground hyperfine levels {sorted(allowed)}")
        if abs(m) > F or (F - m).denominator != 1:
            raise DomainError(f"m={m} invalid for F={F}")
    if op not in ("J+", "J-", "Jz"):
        raise DomainError(f"unknown operator {op!r}")

    total = 0.0
    for mj_in in _mvals(j):
        mi = m1 - mj_in
        if abs(mi) > i:
            continue
        c_in = cg_coefficient(i, mi, j, mj_in, F1, m1)
        if c_in == 0.0:
            continue
        for mj_out in _mvals(j):
            # nuclear projection untouched by the electron operator
            if mi + mj_out != m2:
                continue
            elem = _spin_element(op, j, mj_out, mj_in)
            if elem == 0.0:
                continue
            total += cg_coefficient(i, mi, j, mj_out, F2, m2) * elem * c_in
    return total


# --- microwave field -----------------------------------------------------------

@dataclass(frozen=True)
class MwFieldLab:
    """Laboratory microwave field at the cell.

    ``amplitudes`` are (B_x', B_y', B_z') in tesla and ``phases`` the
    matching (phi_x', phi_y', phi_z') in radians.
    """

    power_dbm: float = 0.0
    distance: float = 1.0
    antenna_gain: float = 1.0
    amplitudes: tuple = (0.0, 0.0, 0.0)
    phases: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if any(b < 0 for b in self.amplitudes):
            raise DomainError("field amplitudes must be non-negative")
        if any(not 0 <= p < TWO_PI for p in self.phases):
            raise DomainError("phases must lie in [0, 2pi)")


def mw_rabi_frequencies(field, atom=DEFAULT_ATOM, literal_eq7=False):
    """Rabi frequencies (Omega_-, Omega_pi, Omega_+) out of |F_low, 0>.

    With ``literal_eq7`` the pi component drops the <F_up 0|Jz|F_low 0>
    matrix element (set to 1), i.e. Omega_pi = (2 mu_B / hbar) B_z.
    """
    bx, by, bz = field.amplitudes
    px, py, pz = field.phases
    ex = bx * np.exp(-1j * px)
    ey = by * np.exp(-1j * py)
    ez = bz * np.exp(-1j * pz)
    i, j = atom.nuclear_spin, atom.electron_spin
    f_lo, f_up = i - j, i + j

    el_minus = hyperfine_matrix_element(f_lo, 0, f_up, -1, "J-", atom)
    el_plus = hyperfine_matrix_element(f_lo, 0, f_up, 1, "J+", atom)
    el_pi = 1.0 if literal_eq7 else hyperfine_matrix_element(f_lo, 0, f_up, 0, "Jz", atom)

    om_minus = MW_PREFACTOR * 0.5 * (ex + 1j * ey) * el_minus
    om_pi = MW_PREFACTOR * ez * el_pi
    om_plus = MW_PREFACTOR * 0.5 * (ex - 1j * ey) * el_plus
    return complex(om_minus), complex(om_pi), complex(om_plus)


def field_amplitude_from_power(power_dbm, distance, gain=1.0):
    """Far-field magnetic amplitude (T) of an isotropic-with-gain antenna."""
    if distance <= 0:
        raise DomainError("distance must be positive")
    watts = 1e-3 * 10 ** (power_dbm / 10)
    intensity = gain * watts / (4 * np.pi * distance ** 2)
    return np.sqrt(2 * MU_0 * intensity / C_LIGHT)


def dbm_to_rabi(power_dbm, distance=1.0, gain=1.0, atom=DEFAULT_ATOM, literal_eq7=False):
    """Magnitude of the pi-transition Rabi frequency (rad/s) for a power in dBm."""
    b = field_amplitude_from_power(power_dbm, distance, gain)
    lab = MwFieldLab(power_dbm=power_dbm, distance=distance, antenna_gain=gain,
                     amplitudes=(0.0, 0.0, float(b)))
    return abs(mw_rabi_frequencies(lab, atom, literal_eq7)[1])


def rabi_to_dbm(rabi, distance=1.0, gain=1.0, atom=DEFAULT_ATOM, literal_eq7=False):
    """Inverse of :func:`dbm_to_rabi`."""
    if rabi <= 0:
        return -np.inf
    ref = dbm_to_rabi(0.0, distance, gain, atom, literal_eq7)
    return 20 * np.log10(rabi / ref)
