"""Closed-loop CPT dip versus microwave power in the fig3 regime.

Sweeps the probe two-photon detuning at a ladder of microwave powers and
prints contrast, width and centre of the Im(rho_ba) dip. The microwave
closes the loop, so the dark state degrades (contrast falls) and the
resonance is pulled off zero as the power rises.

Run: python demos/fig3_power_family.py
"""
import numpy as np

from deltacpt.atomic_params import TWO_PI
from deltacpt.config import load_config
from deltacpt.spectra import lineshape_metrics, sweep


def main():
    cfg = load_config(preset="fig3")
    spec = cfg.sweep
    print(f"fig3 preset: Omega_p = Omega_c = {abs(cfg.fields.omega_p) / TWO_PI / 1e6:.0f} MHz, "
          f"T = {spec.thermal.temperature:.0f} K, {spec.thermal.quadrature_nodes} velocity nodes")
    print(f"{'P [dBm]':>8} {'Omega_mu [Hz]':>14} {'contrast':>10} {'FWHM [MHz]':>11} "
          f"{'centre [Hz]':>12}")
    for p in np.arange(-22.0, 2.1, 4.0):
        om = spec.mw_rabi(p)
        m = lineshape_metrics(sweep(spec.with_(fields=cfg.fields.with_(omega_mu=om))), "dip")
        print(f"{p:8.0f} {om / TWO_PI:14.1f} {m.contrast:10.6f} {m.fwhm / TWO_PI / 1e6:11.3f} "
              f"{m.center / TWO_PI:12.1f}")

    # a stronger drive makes the same trends obvious
    print("\nstronger microwave drive")
    for khz in (0.0, 2.0, 5.0, 10.0, 20.0):
        f = cfg.fields.with_(omega_mu=TWO_PI * khz * 1e3)
        m = lineshape_metrics(sweep(spec.with_(fields=f)), "dip")
        print(f"  Omega_mu = {khz:4.0f} kHz: contrast {m.contrast:.4f}, "
              f"centre {m.center / TWO_PI:8.1f} Hz")


if __name__ == "__main__":
    main()
