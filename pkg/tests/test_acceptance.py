"""Acceptance suite: one test per criterion, each reporting a pass/fail line.

Every test computes its figures first, records them through the ``record``
fixture (printed in the terminal summary), and only then asserts.
"""
import itertools
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from deltacpt.analytic import (absorption_alpha, analytic_params_from, coherence_rho_ba,
                               propagate_closed_form)
from deltacpt.atomic_params import RB85_D1, TWO_PI, cg_coefficient, hyperfine_matrix_element
from deltacpt.bloch import (DecayRates, FieldConfig, bloch_rhs, build_hamiltonian,
                            build_liouvillian, steady_state, steady_state_for, time_evolve,
                            unvec, vec)
from deltacpt.cli import main
from deltacpt.doppler import ThermalSpec, doppler_average, doppler_averaged_steady_state
from deltacpt.propagation import integrate_ode
from deltacpt.sensing import FitProblem, fit
from deltacpt.spectra import FEATURE_KIND, lineshape_metrics, shift_vs_power, sweep
from conftest import SENSING_BOUNDS, SENSING_TRUTH, random_decays, random_fields, synthetic
from oracles import hyperfine_bruteforce

KHZ, MHZ = TWO_PI * 1e3, TWO_PI * 1e6


def test_criterion_01_cptp_structure(record):
    rng = np.random.default_rng(101)
    herm = trace = 0.0
    eig = np.inf
    for k in range(200):
        f, d = random_fields(rng, two_photon=bool(k % 2)), random_decays(rng)
        rho = steady_state_for(f, d, rng.normal(0, 300))
        herm = max(herm, np.abs(rho - rho.conj().T).max())
        trace = max(trace, abs(np.trace(rho) - 1))
        eig = min(eig, np.linalg.eigvalsh(rho).min())
    ok = herm <= 1e-12 and trace <= 1e-10 and eig >= -1e-9
    record(1, ok, f"hermiticity {herm:.1e}, trace {trace:.1e}, min eigenvalue {eig:.1e}")
    assert ok


def test_criterion_02_rhs_paths(record):
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(100):
        f, d = random_fields(rng), random_decays(rng)
        v = rng.normal(0, 300)
        rho = steady_state_for(f, d, v)
        # also a generic (non-stationary, non-physical) matrix
        x = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        lv = build_liouvillian(build_hamiltonian(f, v), d)
        scale = np.abs(lv).max()
        for r in (rho, x):
            diff = np.abs(unvec(lv @ vec(r)) - bloch_rhs(r, f, d, velocity=v)).max()
            worst = max(worst, diff / scale)
    ok = worst <= 1e-10
    record(2, ok, f"max elementwise difference {worst:.1e} (relative to max |L|)")
    assert ok


def test_criterion_03_steady_state_vs_evolution(record):
    rng = np.random.default_rng(103)
    worst = 0.0
    for _ in range(20):
        f, d = random_fields(rng), random_decays(rng)
        lv = build_liouvillian(build_hamiltonian(f), d)
        t = 50.0 / d.nonzero_min()
        rho_t = time_evolve(np.diag([0.0, 0.5, 0.5]).astype(complex), lv, t)
        worst = max(worst, np.abs(steady_state(lv) - rho_t).max())
    ok = worst <= 1e-6
    record(3, ok, f"max |rho_ss - rho(t)| = {worst:.1e}")
    assert ok


def test_criterion_04_dark_state(record, fig3):
    worst_aa = worst_im = 0.0
    d = DecayRates(gamma_ab=fig3.decays.gamma_ab, gamma_ac=fig3.decays.gamma_ac)
    for op, oc, dp in [(20, 20, 0.0), (3, 5, 2.0), (0.5, 12, -7.0)]:
        # Raman resonance: the two ground-state energies in the rotating frame coincide
        f = FieldConfig(omega_p=TWO_PI * op * 1e6, omega_c=TWO_PI * oc * 1e6, delta_p=MHZ * dp,
                        delta_c=MHZ * dp, phi_mu=1.1)
        rho = steady_state_for(f, d)
        worst_aa = max(worst_aa, abs(rho[0, 0]))
        worst_im = max(worst_im, abs(rho[1, 0].imag))
    ok = worst_aa <= 1e-8 and worst_im <= 1e-8
    record(4, ok, f"rho_aa {worst_aa:.1e}, |Im rho_ba| {worst_im:.1e}")
    assert ok


def _fig3_family(fig3, rabis):
    out = []
    for om in rabis:
        s = sweep(fig3.sweep.with_(fields=fig3.fields.with_(omega_mu=om)))
        out.append(lineshape_metrics(s, "dip"))
    return out


def _monotone(x):
    d = np.diff(x)
    return bool(np.all(d > 0) or np.all(d < 0))


def test_criterion_05_fig3_trend(record, fig3):
    powers = np.arange(-18.0, 2.0 + 1e-9, 4.0)  # 20 dB
    assert fig3.sweep.thermal.quadrature_nodes == 64 and fig3.sweep.points == 201
    m = _fig3_family(fig3, [fig3.sweep.mw_rabi(p) for p in powers])
    c = np.array([x.contrast for x in m])
    x0 = np.array([x.center for x in m])
    # the same trends over a stronger Rabi-frequency family, 1-10 kHz
    m2 = _fig3_family(fig3, TWO_PI * np.array([1e3, 2e3, 4e3, 7e3, 10e3]))
    c2 = np.array([x.contrast for x in m2])
    x2 = np.array([x.center for x in m2])
    ok = (np.all(np.diff(c) < 0) and _monotone(x0)
          and np.all(np.diff(c2) < 0) and _monotone(x2))
    record(5, ok, f"contrast {c[0]:.6f}->{c[-1]:.6f} over {powers[0]:g}..{powers[-1]:g} dBm, "
                  f"centre {x0[0] / TWO_PI:.1f}->{x0[-1] / TWO_PI:.1f} Hz; "
                  f"1-10 kHz family contrast {c2[0]:.4f}->{c2[-1]:.4f}")
    assert ok


@pytest.fixture(scope="module")
def shift_rows(fig3):
    return shift_vs_power([-TWO_PI * 500.0, TWO_PI * 500.0], [0.0], fig3.sweep)


def test_criterion_06_shift_sign_asymmetry(record, shift_rows):
    blue, red = shift_rows  # delta_mu < 0 first
    ok = blue.valid and red.valid and blue.shift * red.shift < 0
    record(6, ok, f"shift at delta_mu = -500 Hz: {blue.shift / TWO_PI:+.2f} Hz, "
                  f"+500 Hz: {red.shift / TWO_PI:+.2f} Hz (0 dBm)")
    assert ok


def test_criterion_07_shift_magnitude_asymmetry(record, shift_rows):
    blue, red = shift_rows
    ok = blue.valid and red.valid and abs(blue.shift) > abs(red.shift)
    record(7, ok, f"|blue| {abs(blue.shift) / TWO_PI:.2f} Hz vs |red| "
                  f"{abs(red.shift) / TWO_PI:.2f} Hz")
    assert ok


def test_criterion_08_analytic_vs_numeric(record, weak_probe):
    res = {}
    for backend in ("analytic", "full_numeric"):
        s = sweep(weak_probe.with_(backend=backend,
                                   fields=weak_probe.fields.with_(omega_mu=TWO_PI * 5e3)))
        res[backend] = (s, lineshape_metrics(s, FEATURE_KIND[s.observable]))
    (sa, a), (_, n) = res["analytic"], res["full_numeric"]
    dc = abs(a.center - n.center)
    rc = abs(a.contrast - n.contrast) / n.contrast
    ok = dc <= sa.step and rc <= 0.10
    record(8, ok, f"centre difference {dc / TWO_PI:.1f} Hz (step {sa.step / TWO_PI:.0f} Hz), "
                  f"contrast difference {100 * rc:.2f}%")
    assert ok


def _params(fig3, **kw):
    f = fig3.fields.with_(omega_p=TWO_PI * 2e6)
    p = analytic_params_from(f, fig3.decays, density=fig3.sweep.cell.density)
    return p.with_(**kw)


def test_criterion_09_closed_form_propagation(record, fig3):
    worst = 0.0
    cases = [dict(), dict(omega_mu=TWO_PI * 5e3, delta_p=0.5 * MHZ, delta_mu=2 * KHZ),
             dict(omega_mu=TWO_PI * 20e3, phi_mu=0.3, x=0.004),
             dict(omega_mu=TWO_PI * 2e3, delta_p=-0.2 * MHZ, density=5e16)]
    for kw in cases:
        p = _params(fig3, length=0.03, **kw)

        def source(z, omega, p=p):
            return 1j * p.coupling_constant * coherence_rho_ba(p, z=z, omega_p=omega)

        ref = integrate_ode(source, p.omega_p0, p.z0, p.length)[-1]
        worst = max(worst, abs(propagate_closed_form(p) - ref) / abs(ref))
    p0 = _params(fig3, length=0.03, omega_mu=0.0, delta_p=0.3 * MHZ)
    beer = np.exp(-absorption_alpha(p0) * 0.03) * p0.omega_p0
    cf = abs(propagate_closed_form(p0) - beer) / abs(beer)
    ode = integrate_ode(lambda z, om: 1j * p0.coupling_constant
                        * coherence_rho_ba(p0, z=z, omega_p=om), p0.omega_p0, 0.0, 0.03)[-1]
    od = abs(ode - beer) / abs(beer)
    ok = worst <= 1e-3 and cf <= 1e-14 and od <= 1e-6
    record(9, ok, f"closed form vs ODE {worst:.1e}; omega_mu = 0: closed form {cf:.1e}, "
                  f"ODE {od:.1e} from exp(-alpha L)")
    assert ok


def test_criterion_10_doppler_quadrature(record, fig3):
    t = ThermalSpec(temperature=330.0, quadrature_nodes=64)
    t2 = ThermalSpec(temperature=330.0, quadrature_nodes=128)
    const = abs(doppler_average(lambda v: 1.0, t) - 1.0)
    m2 = abs(doppler_average(lambda v: v ** 2, t) / (t.v_mp ** 2 / 2) - 1.0)

    def doubling(dp):
        f = fig3.fields.with_(delta_p=dp, delta_c=-dp)
        return np.abs(doppler_averaged_steady_state(f, fig3.decays, t)
                      - doppler_averaged_steady_state(f, fig3.decays, t2)).max()

    # the fig3 default parameter set and points near two-photon resonance
    conv = max(doubling(dp) for dp in (0.0, 2 * KHZ, -50 * KHZ, 0.3 * MHZ))
    wing = doubling(5 * MHZ)  # reported only: 64 nodes do not resolve the far wing
    ok = const <= 1e-15 and m2 <= 1e-10 and conv < 1e-6
    record(10, ok, f"constant {const:.1e}, <v^2> {m2:.1e}, 64->128 nodes {conv:.1e} "
                   f"near resonance ({wing:.1e} at 5 MHz, not asserted)")
    assert ok


def _ms(j):
    return [-j + k for k in range(int(2 * j) + 1)]


def test_criterion_11_angular_momentum(record):
    spins = [Fraction(k, 2) for k in range(8)]  # 0 .. 7/2
    orth = 0.0
    for j1, j2 in itertools.product(spins, spins):
        Js = [abs(j1 - j2) + k for k in range(int(j1 + j2 - abs(j1 - j2)) + 1)]
        for J, Jp in itertools.product(Js, Js):
            for M in _ms(J):
                if abs(M) > Jp:
                    continue
                s = sum(cg_coefficient(j1, m1, j2, M - m1, J, M)
                        * cg_coefficient(j1, m1, j2, M - m1, Jp, M)
                        for m1 in _ms(j1) if abs(M - m1) <= j2)
                orth = max(orth, abs(s - (J == Jp)))
    hf = 0.0
    exact_zero = True
    i, j = float(RB85_D1.nuclear_spin), float(RB85_D1.electron_spin)
    Fs = (2, 3)
    for F1, F2, op in itertools.product(Fs, Fs, ("Jz", "J+", "J-")):
        dm = {"Jz": 0, "J+": 1, "J-": -1}[op]
        for m1, m2 in itertools.product(_ms(F1), _ms(F2)):
            val = hyperfine_matrix_element(F1, m1, F2, m2, op)
            hf = max(hf, abs(val - hyperfine_bruteforce(i, j, F1, m1, F2, m2, op)))
            if m2 != m1 + dm:  # op acts on |F1 m1>
                exact_zero &= val == 0.0
    ok = orth <= 1e-12 and hf <= 1e-12 and exact_zero
    record(11, ok, f"CG orthogonality {orth:.1e}, hyperfine vs oracle {hf:.1e}, "
                   f"selection-rule zeros exact: {exact_zero}")
    assert ok


def test_criterion_12_sensing_round_trip(record, sensing_forward):
    bounds = {k: SENSING_BOUNDS[k] for k in ("omega_mu", "delta_mu")}

    def run(obs):
        r = fit(FitProblem(obs, ("omega_mu", "delta_mu"), bounds, sensing_forward))
        e_om = abs(r.estimates["omega_mu"] / SENSING_TRUTH["omega_mu"] - 1)
        e_dm = abs(r.estimates["delta_mu"] - SENSING_TRUTH["delta_mu"]) / obs.step
        return r.converged, e_om, e_dm

    conv0, e_om0, e_dm0 = run(synthetic(sensing_forward, SENSING_TRUTH))
    clean = conv0 and e_om0 <= 0.01 and e_dm0 <= 1.0
    good, worst = 0, 0.0
    for seed in range(20):
        obs = synthetic(sensing_forward, SENSING_TRUTH, 0.01, np.random.default_rng(seed))
        conv, e_om, e_dm = run(obs)
        worst = max(worst, e_om)
        good += conv and e_om <= 0.05 and e_dm <= 3.0
    ok = clean and good >= 18
    record(12, ok, f"noiseless omega_mu error {e_om0:.1e}, delta_mu {e_dm0:.1e} steps; "
                   f"1% noise: {good}/20 within 5%/3 steps (worst omega_mu {100 * worst:.1f}%)")
    assert ok


WEAK = """\
[run]
backend = analytic
[fields]
omega_p = 0.2 MHz
omega_c = 20 MHz
omega_mu = 5 kHz
delta_mu = 2 kHz
[sweep]
start = -3 MHz
stop = 3 MHz
points = 101
noise = 0.01
[power_map]
powers = 2, -22, -10 dBm
"""


def _data_lines(path):
    return [ln for ln in path.read_bytes().split(b"\n") if b"timestamp" not in ln]


def test_criterion_13_cli_determinism(record, tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text(WEAK)
    base = ["--config", str(cfg), "--preset", "fig3", "--seed", "7"]
    commands = {
        "spectrum": ["spectrum", *base],
        "spectrum-numeric": ["spectrum", "--preset", "fig3", "--seed", "7"],
        "power-map": ["power-map", *base, "--backend", "numeric"],
        "shift-table": ["shift-table", *base],
    }
    failures = []
    for name, argv in commands.items():
        files = []
        for run in ("a", "b"):
            out = tmp_path / name / run
            assert main([*argv, "--out", str(out)]) == 0
            files.append(sorted(Path(out).iterdir()))
        for fa, fb in zip(*files):
            if _data_lines(fa) != _data_lines(fb):
                failures.append(f"{name}:{fa.name}")
    spec = tmp_path / "spectrum" / "a" / "spectrum.csv"
    fits = []
    for run in ("a", "b"):
        out = tmp_path / "fit" / run
        assert main(["fit", *base, str(spec), "--out", str(out)]) == 0
        fits.append(_data_lines(out / "fit_report.json"))
    if fits[0] != fits[1]:
        failures.append("fit")
    capsys.readouterr()
    main(["presets", "lab"])
    p1 = capsys.readouterr().out
    main(["presets", "lab"])
    if capsys.readouterr().out != p1:
        failures.append("presets")
    ok = not failures
    record(13, ok, "all commands byte-identical modulo timestamp" if ok
           else f"differs: {', '.join(failures)}")
    assert ok
