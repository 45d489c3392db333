"""Red and blue microwave detuning shift the CPT centre unequally.

Builds the shift table (centre minus the open-loop Lambda reference) for
a few microwave detunings and powers. Negative delta_mu pulls the line
blue, positive delta_mu pulls it red, and the blue shift is the larger
one because the loop phase adds its own offset.

Run: python demos/shift_asymmetry.py
"""
from deltacpt.atomic_params import TWO_PI
from deltacpt.config import load_config
from deltacpt.spectra import shift_vs_power


def main():
    cfg = load_config(preset="fig3")
    detunings = [TWO_PI * d for d in (-1000.0, -500.0, 500.0, 1000.0)]
    rows = shift_vs_power(detunings, [None, -10.0, 0.0, 2.0], cfg.sweep)
    print(f"{'delta_mu [Hz]':>14} {'P [dBm]':>8} {'shift [Hz]':>11}  direction")
    for r in rows:
        p = "off" if r.power_dbm is None else f"{r.power_dbm:.0f}"
        if not r.valid:
            print(f"{r.delta_mu / TWO_PI:14.0f} {p:>8} {'-':>11}  {r.error}")
            continue
        s = r.shift / TWO_PI
        way = "none" if s == 0 else ("red" if s > 0 else "blue")
        print(f"{r.delta_mu / TWO_PI:14.0f} {p:>8} {s:11.2f}  {way}")


if __name__ == "__main__":
    main()
