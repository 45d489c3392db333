"""
Run configuration: an INI file in which every physical quantity carries a
unit, layered over an optional preset.

Frequencies given in Hz/kHz/MHz/GHz are cyclic and multiplied by 2 pi;
``rad/s`` is taken as is. ``omega_mu`` accepts either a frequency or a
power in dBm, the latter mapped through the far-field antenna model.
"""

import configparser
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .atomic_params import ATOM_PRESETS, C_LIGHT, vapor_density
from .bloch import DecayRates, FieldConfig
from .doppler import ThermalSpec
from .errors import ConfigError
from .propagation import CellSpec
from .spectra import AXES, OBSERVABLES, SweepSpec, mw_rabi

TWO_PI = 2 * np.pi

UNITS = {
    "freq": {"Hz": TWO_PI, "kHz": TWO_PI * 1e3, "MHz": TWO_PI * 1e6, "GHz": TWO_PI * 1e9,
             "rad/s": 1.0},
    "power": {"dBm": 1.0},
    "length": {"m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6},
    "angle": {"rad": 1.0, "deg": np.pi / 180},
    "density": {"m^-3": 1.0, "cm^-3": 1e6},
    "wavenumber": {"rad/m": 1.0, "1/m": 1.0},
}

# section -> key -> kind
SCHEMA = {
    "run": {"preset": "str", "atom": "str", "seed": "int", "threads": "int", "backend": "str"},
    "fields": {"omega_p": "freq", "omega_c": "freq", "omega_mu": "freq|power",
               "delta_p": "freq", "delta_mu": "freq", "mw_frequency": "freq",
               "phi_mu": "angle", "x": "length", "z": "length", "k_p": "wavenumber",
               "k_c": "wavenumber", "k_mu": "wavenumber", "mw_distance": "length",
               "mw_gain": "float"},
    "decays": {"excited_linewidth": "freq", "split": "bool", "gamma_ab": "freq",
               "gamma_ac": "freq", "gamma_bc": "freq", "gamma_cb": "freq", "gamma_c": "freq"},
    "thermal": {"temperature": "temp", "nodes": "int", "cutoff": "float",
                "convention": "str", "quadrature": "str"},
    "cell": {"length": "length", "z0": "length", "slices": "int", "density": "density",
             "eta": "float"},
    "sweep": {"parameter": "str", "start": "freq|power", "stop": "freq|power", "points": "int",
              "observable": "str", "noise": "float"},
    "power_map": {"powers": "power_list"},
    "shift_table": {"detunings": "freq_list", "powers": "power_list"},
    "fit": {"free": "str_list", "omega_mu": "freq_pair", "delta_mu": "freq_pair",
            "gamma_bc": "freq_pair", "amplitude_scale": "float_pair",
            "baseline_offset": "float_pair", "grid_points": "int", "max_iter": "int",
            "starts": "int", "rel_tol": "float"},
}

_COMMON = """\
[run]
atom = rb85_d1
seed = 0
threads = 1
backend = numeric

[fields]
omega_p = 20 MHz
omega_c = 20 MHz
omega_mu = 0 dBm
delta_p = 0 Hz
delta_mu = 0 Hz
phi_mu = 225 deg
x = 0 m
z = 0 m
mw_distance = 1 m
# linear gain of a ~20 dBi horn
mw_gain = 100

[decays]
excited_linewidth = 6.06 MHz
split = true
# 30 Torr N2 buffer gas; no pressure-to-rate model is applied
gamma_bc = 15 kHz
gamma_c = 0 Hz

[thermal]
temperature = 330 K
nodes = 64
cutoff = 5
convention = paper_sqrt3
quadrature = gauss_hermite

[cell]
length = 30 mm
z0 = 0 m
slices = 100
density = auto
eta = 1

[sweep]
parameter = probe_two_photon_detuning
start = -20 MHz
stop = 20 MHz
points = 201
observable = im_rho_ba
noise = 0

[power_map]
powers = -22, -18, -14, -10, -6, -2, 2 dBm

[shift_table]
detunings = -1000, -500, 500, 1000 Hz
powers = off, -22, -10, 2 dBm

[fit]
free = omega_mu, delta_mu
omega_mu = 0 Hz, 20 kHz
delta_mu = -10 kHz, 10 kHz
amplitude_scale = 0.5, 2
baseline_offset = -0.001, 0.001
gamma_bc = 1 kHz, 50 kHz
grid_points = 8
max_iter = 500
rel_tol = 1e-8
starts = 1
"""

PRESETS = {
    "fig3": _COMMON,
    "lab": _COMMON.replace("temperature = 330 K", "temperature = 57 C")
    .replace("delta_mu = 0 Hz\n", "mw_frequency = 3.03574 GHz\n")
    .replace("observable = im_rho_ba", "observable = transmission")
    .replace("points = 201", "points = 101")
    .replace("backend = numeric", "backend = analytic")
    .replace("powers = -22, -18, -14, -10, -6, -2, 2 dBm",
             "powers = -22, -20, -18, -16, -14, -12, -10, -8, -6, -4, -2, 0, 2 dBm"),
}

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?inf"


def _split_units(text, where):
    """Split 'a, b unit' or 'a unit, b unit' into [(token, unit), ...].

    Items without their own unit take the last unit given.
    """
    items = []
    for part in text.split(","):
        m = re.fullmatch(rf"\s*({_NUM}|off)\s*([A-Za-z/^\-0-9]*)\s*", part)
        if not m:
            raise ConfigError(f"{where}: cannot parse {text!r}")
        items.append([m.group(1), m.group(2)])
    last = ""
    for item in reversed(items):
        if item[1]:
            last = item[1]
        else:
            item[1] = last
    return [tuple(i) for i in items]


def _quantity(token, unit, kind, where):
    for k in kind.split("|"):
        if k == "temp":
            if unit in ("K", "C"):
                return float(token) + (273.15 if unit == "C" else 0.0), "temp"
            continue
        if unit in UNITS[k]:
            if token == "off":
                if k != "power":
                    break
                return -math.inf, k
            return float(token) * UNITS[k][unit], k
    expected = sorted(u for k in kind.split("|") for u in UNITS.get(k, {"K": 0, "C": 0}))
    raise ConfigError(f"{where}: unit {unit or '(none)'!r} not accepted; "
                      f"expected one of {', '.join(expected)}")


def parse_value(text, kind, where="value"):
    """Convert one config value to internal units according to ``kind``."""
    text = text.strip()
    if kind == "str":
        return text
    if kind == "str_list":
        return [t.strip() for t in text.split(",") if t.strip()]
    if kind == "bool":
        low = text.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{where}: expected a boolean, got {text!r}")
    if kind in ("int", "float", "float_pair"):
        try:
            vals = [float(t) for t in text.split(",")]
        except ValueError:
            raise ConfigError(f"{where}: expected a plain number, got {text!r}") from None
        if kind == "int":
            if len(vals) != 1 or vals[0] != int(vals[0]):
                raise ConfigError(f"{where}: expected an integer, got {text!r}")
            return int(vals[0])
        if kind == "float":
            if len(vals) != 1:
                raise ConfigError(f"{where}: expected one number")
            return vals[0]
        if len(vals) != 2:
            raise ConfigError(f"{where}: expected 'lower, upper'")
        return tuple(vals)
    if kind.endswith("_list") and not text:
        return []
    if kind == "density" and text == "auto":
        return "auto"
    base = kind.replace("_list", "").replace("_pair", "")
    values = [_quantity(t, unit, base, where) for t, unit in _split_units(text, where)]
    if kind.endswith("_list"):
        return [v for v, _ in values]
    if kind.endswith("_pair"):
        if len(values) != 2:
            raise ConfigError(f"{where}: expected 'lower, upper unit'")
        return (values[0][0], values[1][0])
    if len(values) != 1:
        raise ConfigError(f"{where}: expected a single value")
    return values[0] if "|" in kind else values[0][0]


def _line_of(text, section, key=None):
    """1-based line of ``key`` in ``section`` (of the header if key is None)."""
    current = None
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip()
            if key is None and current == section:
                return n
        elif key is not None and current == section and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return n
    return None


def _parser():
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"),
                                   inline_comment_prefixes=(";",))
    cp.optionxform = str
    return cp


def _read(text, origin):
    cp = _parser()
    try:
        cp.read_string(text, source=origin)
    except configparser.Error as exc:
        raise ConfigError(f"{origin}: {exc}") from exc
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"{origin}:{_line_of(text, sec) or '?'}: unknown section [{sec}]")
        for key in cp[sec]:
            if key not in SCHEMA[sec]:
                raise ConfigError(f"{origin}:{_line_of(text, sec, key) or '?'}: "
                                  f"unknown key {key!r} in section [{sec}]")
    return cp


@dataclass(frozen=True)
class RunConfig:
    atom: object
    sweep: SweepSpec
    seed: int = 0
    threads: int = 1
    noise: float = 0.0
    power_map_powers: tuple = ()
    shift_detunings: tuple = ()
    shift_powers: tuple = ()
    fit_free: tuple = ()
    fit_bounds: dict = field(default_factory=dict)
    fit_grid_points: int = 8
    fit_max_iter: int = 500
    fit_rel_tol: float = 1e-8
    fit_starts: int = 1
    canonical: str = ""

    @property
    def fields(self):
        return self.sweep.fields

    @property
    def decays(self):
        return self.sweep.decays


def load_config(text=None, origin="<config>", preset=None, overrides=None):
    """Parse ``text`` layered over ``preset`` and return a RunConfig.

    ``overrides`` maps (section, key) to raw string values applied last
    (used for command-line flags). Raises ConfigError on any problem.
    """
    merged = _parser()
    user = _read(text or "", origin)
    preset_name = preset
    if user.has_section("run") and "preset" in user["run"]:
        preset_name = user["run"]["preset"]
    if preset_name is not None:
        if preset_name not in PRESETS:
            raise ConfigError(f"unknown preset {preset_name!r}; choose from {sorted(PRESETS)}")
        merged.read_string(PRESETS[preset_name])
    # a user-supplied MW detuning replaces a preset MW frequency and vice versa
    for a, b in (("delta_mu", "mw_frequency"), ("mw_frequency", "delta_mu")):
        if user.has_option("fields", a) and merged.has_option("fields", b):
            merged.remove_option("fields", b)
    for sec in user.sections():
        if not merged.has_section(sec):
            merged.add_section(sec)
        for k, v in user[sec].items():
            merged[sec][k] = v
    for (sec, key), v in (overrides or {}).items():
        if not merged.has_section(sec):
            merged.add_section(sec)
        merged[sec][key] = str(v)

    canonical = "\n".join(f"[{s}] {k} = {' '.join(merged[s][k].split())}"
                          for s in sorted(merged.sections()) for k in sorted(merged[s]))

    def get(sec, key, default=None):
        if merged.has_option(sec, key):
            return parse_value(merged[sec][key], SCHEMA[sec][key], f"[{sec}] {key}")
        return default

    def need(sec, key):
        v = get(sec, key)
        if v is None:
            raise ConfigError(f"missing required key {key!r} in section [{sec}]")
        return v

    atom_name = get("run", "atom", "rb85_d1")
    if atom_name not in ATOM_PRESETS:
        raise ConfigError(f"[run] atom: unknown atom {atom_name!r}; choose from {sorted(ATOM_PRESETS)}")
    atom = ATOM_PRESETS[atom_name]

    backend = get("run", "backend", "numeric")
    backend = {"numeric": "full_numeric", "full_numeric": "full_numeric",
               "analytic": "analytic"}.get(backend)
    if backend is None:
        raise ConfigError("[run] backend: expected 'analytic' or 'numeric'")

    if get("fields", "delta_mu") is not None and get("fields", "mw_frequency") is not None:
        raise ConfigError("[fields] give either delta_mu or mw_frequency, not both")
    f_mw = get("fields", "mw_frequency")
    delta_mu = (atom.ground_hyperfine_splitting - f_mw) if f_mw is not None \
        else get("fields", "delta_mu", 0.0)

    half = atom.ground_hyperfine_splitting / (2 * C_LIGHT)
    mw_distance = get("fields", "mw_distance", 1.0)
    mw_gain = get("fields", "mw_gain", 1.0)
    try:
        fields = FieldConfig(
            omega_p=need("fields", "omega_p"), omega_c=need("fields", "omega_c"),
            delta_p=get("fields", "delta_p", 0.0), delta_mu=delta_mu,
            phi_mu=get("fields", "phi_mu", 0.0), x=get("fields", "x", 0.0),
            z=get("fields", "z", 0.0),
            k_p=get("fields", "k_p", atom.k_optical + half),
            k_c=get("fields", "k_c", atom.k_optical - half),
            k_mu=get("fields", "k_mu", atom.k_microwave))
        gamma_bc = need("decays", "gamma_bc")
        decays = DecayRates.from_excited_linewidth(
            need("decays", "excited_linewidth"), gamma_bc,
            gamma_cb=get("decays", "gamma_cb", gamma_bc), gamma_c=get("decays", "gamma_c", 0.0),
            split=get("decays", "split", True))
        overrides_g = {k: get("decays", k) for k in ("gamma_ab", "gamma_ac")
                       if get("decays", k) is not None}
        if overrides_g:
            decays = DecayRates(**{**decays.__dict__, **overrides_g})
        thermal = ThermalSpec(
            temperature=get("thermal", "temperature", 330.0), mass=atom.mass,
            quadrature_nodes=get("thermal", "nodes", 64),
            velocity_cutoff=get("thermal", "cutoff", 5.0),
            convention=get("thermal", "convention", "paper_sqrt3"),
            backend=get("thermal", "quadrature", "gauss_hermite"))
        density = get("cell", "density", "auto")
        if density == "auto":
            density = vapor_density(thermal.temperature) if thermal.temperature > 0 else 0.0
        cell = CellSpec(length=get("cell", "length", 0.03), z0=get("cell", "z0", 0.0),
                        slice_count=get("cell", "slices", 100), density=density,
                        x=fields.x, eta=get("cell", "eta", 1.0))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    mw, kind = get("fields", "omega_mu", (0.0, "freq"))
    omega_mu = mw_rabi(mw, mw_distance, mw_gain, atom) if kind == "power" else mw
    fields = fields.with_(omega_mu=omega_mu)

    parameter = get("sweep", "parameter", "probe_two_photon_detuning")
    if parameter not in AXES:
        raise ConfigError(f"[sweep] parameter: expected one of {', '.join(AXES)}")
    observable = get("sweep", "observable", "im_rho_ba")
    if observable not in OBSERVABLES:
        raise ConfigError(f"[sweep] observable: expected one of {', '.join(OBSERVABLES)}")
    want = "power" if parameter == "mw_power_dBm" else "freq"
    ends = []
    for key in ("start", "stop"):
        v, k = need("sweep", key)
        if k != want:
            raise ConfigError(f"[sweep] {key}: a {parameter} sweep needs a "
                              f"{'dBm' if want == 'power' else 'frequency'} value")
        ends.append(v)
    try:
        sweep = SweepSpec(parameter, ends[0], ends[1], need("sweep", "points"), fields, decays,
                          thermal, cell, backend, observable, atom, mw_distance, mw_gain)
    except ValueError as exc:
        raise ConfigError(f"[sweep] {exc}") from exc

    free = tuple(get("fit", "free", []))
    bounds = {}
    for name in free:
        b = get("fit", name)
        if b is None:
            raise ConfigError(f"[fit] free parameter {name!r} has no bounds entry")
        bounds[name] = b
    threads = get("run", "threads", 1)
    if threads < 1:
        raise ConfigError("[run] threads must be >= 1")
    noise = get("sweep", "noise", 0.0)
    if noise < 0:
        raise ConfigError("[sweep] noise must be non-negative")
    return RunConfig(
        atom=atom, sweep=sweep, seed=get("run", "seed", 0), threads=threads, noise=noise,
        power_map_powers=tuple(get("power_map", "powers", [])),
        shift_detunings=tuple(get("shift_table", "detunings", [])),
        shift_powers=tuple(get("shift_table", "powers", [])),
        fit_free=free, fit_bounds=bounds,
        fit_grid_points=get("fit", "grid_points", 8), fit_max_iter=get("fit", "max_iter", 500),
        fit_rel_tol=get("fit", "rel_tol", 1e-8), fit_starts=get("fit", "starts", 1),
        canonical=canonical)
