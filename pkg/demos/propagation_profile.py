"""Probe field through a 30 mm cell: numeric SVEA against the closed form.

A weak probe (Omega_p = Omega_c / 100) on a cold ensemble, so the
closed-form envelope solution is the exact limit of the Lindblad model
when the b -> c ground repumping is switched off. Prints the exit
transmission from both and the |Omega_p| profile along the cell. With
the microwave on, the closed loop also writes probe light into the cell,
so the transmission can exceed one.

Run: python demos/propagation_profile.py
"""
import numpy as np

from deltacpt.analytic import analytic_params_from, propagate_closed_form
from deltacpt.atomic_params import TWO_PI
from deltacpt.bloch import DecayRates
from deltacpt.config import load_config
from deltacpt.doppler import ThermalSpec
from deltacpt.propagation import CellSpec, propagate_svea, transmission


def main():
    cfg = load_config(preset="fig3")
    d0 = cfg.decays
    decays = DecayRates(d0.gamma_ab, d0.gamma_ac, d0.gamma_bc)  # gamma_cb = 0
    cell = CellSpec(length=0.03, density=cfg.sweep.cell.density, slice_count=1600)
    cold = ThermalSpec(temperature=0.0)
    print(f"density {cell.density:.3e} m^-3, L = {cell.length * 1e3:.0f} mm")
    print(f"{'delta_p [MHz]':>14} {'Omega_mu [kHz]':>15} {'T svea':>10} {'T closed':>10}")
    for dp_mhz, mu_khz in ((0.0, 0.0), (1.0, 0.0), (1.0, 2.0), (-0.5, 5.0)):
        dp = TWO_PI * dp_mhz * 1e6
        f = cfg.fields.with_(omega_p=cfg.fields.omega_c / 100, omega_mu=TWO_PI * mu_khz * 1e3,
                             delta_p=dp, delta_c=-dp)
        out, prof = propagate_svea(f.omega_p, cell, f, decays, cold)
        cf = propagate_closed_form(analytic_params_from(f, decays, density=cell.density))
        print(f"{dp_mhz:14.2f} {mu_khz:15.1f} {transmission(out, f.omega_p):10.5f} "
              f"{transmission(cf, f.omega_p):10.5f}")

    z = np.array([p[0] for p in prof])
    amp = np.abs([p[1] for p in prof]) / abs(f.omega_p)
    print("\n|Omega_p(z)| / |Omega_p(0)| for the last row")
    for k in range(0, len(z), len(z) // 6):
        print(f"  z = {z[k] * 1e3:5.1f} mm: {amp[k]:.5f}")


if __name__ == "__main__":
    main()
