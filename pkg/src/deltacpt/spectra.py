"""
Sweep engine and lineshape analysis.

A sweep evaluates one observable (``im_rho_ba`` or ``transmission``) over
one swept parameter with either the closed-form weak-probe model
(``analytic``, velocity-averaged) or the Lindblad steady state
(``full_numeric``). The probe detuning axis keeps the two optical
detunings equal and opposite, Delta_c = -Delta_p.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields as dc_fields, is_dataclass, replace

import numpy as np
from scipy.signal import find_peaks

from . import analytic
from .atomic_params import DEFAULT_ATOM, dbm_to_rabi
from .bloch import DecayRates, FieldConfig
from .doppler import ThermalSpec, doppler_averaged_steady_state
from .errors import AmbiguousPeakError, DeltaCPTError, NoPeakError, SweepError
from .propagation import CellSpec, propagate_svea, transmission

AXES = ("probe_two_photon_detuning", "mw_power_dBm", "mw_detuning")
OBSERVABLES = ("im_rho_ba", "transmission")
BACKENDS = ("analytic", "full_numeric")
AXIS_UNITS = {"probe_two_photon_detuning": "rad/s", "mw_power_dBm": "dBm",
              "mw_detuning": "rad/s"}
OBSERVABLE_UNITS = {"im_rho_ba": "1", "transmission": "1"}
# the CPT feature is a transparency: a dip in absorption, a peak in transmission
FEATURE_KIND = {"im_rho_ba": "dip", "transmission": "peak"}


@dataclass(frozen=True)
class SweepSpec:
    """One-dimensional sweep over ``swept_parameter``.

    Powers on the ``mw_power_dBm`` axis are converted to Omega_mu with the
    far-field map at ``mw_distance`` and ``mw_gain``.
    """

    swept_parameter: str
    start: float
    stop: float
    points: int
    fields: FieldConfig
    decays: DecayRates
    thermal: ThermalSpec = field(default_factory=ThermalSpec)
    cell: CellSpec = field(default_factory=CellSpec)
    backend: str = "full_numeric"
    observable: str = "im_rho_ba"
    atom: object = DEFAULT_ATOM
    mw_distance: float = 1.0
    mw_gain: float = 1.0

    def __post_init__(self):
        if self.swept_parameter not in AXES:
            raise ValueError(f"swept_parameter must be one of {AXES}")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")
        if self.observable not in OBSERVABLES:
            raise ValueError(f"observable must be one of {OBSERVABLES}")
        if self.points < 5:
            raise ValueError("a sweep needs at least 5 points")
        if not self.start < self.stop:
            raise ValueError("sweep requires start < stop")

    def axis(self):
        return np.linspace(self.start, self.stop, self.points)

    def fields_at(self, value):
        f = self.fields
        if self.swept_parameter == "probe_two_photon_detuning":
            return f.with_(delta_p=float(value), delta_c=-float(value), two_photon=True)
        if self.swept_parameter == "mw_detuning":
            return f.with_(delta_mu=float(value))
        return f.with_(omega_mu=self.mw_rabi(value))

    def mw_rabi(self, power_dbm):
        return mw_rabi(power_dbm, self.mw_distance, self.mw_gain, self.atom)

    def with_(self, **changes):
        return replace(self, **changes)


def mw_rabi(power_dbm, distance=1.0, gain=1.0, atom=DEFAULT_ATOM):
    """Omega_mu for a power in dBm; None or -inf switches the microwave off."""
    if power_dbm is None or power_dbm == -math.inf:
        return 0.0
    return dbm_to_rabi(power_dbm, distance, gain, atom)


def _provenance_value(v):
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if hasattr(v, "numerator") and not isinstance(v, (int, float)):
        return str(v)
    return v


def provenance(spec):
    """Flat, JSON-friendly record of every fixed parameter of ``spec``."""
    out = {}
    for f in dc_fields(spec):
        v = getattr(spec, f.name)
        if is_dataclass(v):
            for k, x in asdict(v).items():
                out[f"{f.name}.{k}"] = _provenance_value(x)
        else:
            out[f.name] = _provenance_value(v)
    return out


@dataclass(frozen=True)
class Spectrum:
    axis: np.ndarray
    values: np.ndarray
    axis_name: str = "probe_two_photon_detuning"
    observable: str = "im_rho_ba"
    backend: str = "analytic"
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if axis.ndim != 1 or axis.shape != values.shape:
            raise ValueError("axis and values must be 1-D arrays of equal length")
        if np.any(np.diff(axis) <= 0):
            raise ValueError("spectrum axis must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ValueError("spectrum values must be finite")
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "values", values)

    @property
    def step(self):
        return float(np.min(np.diff(self.axis)))


def evaluate_point(spec, value):
    """Observable at one axis value."""
    f = spec.fields_at(value)
    if spec.observable == "im_rho_ba":
        if spec.backend == "analytic":
            return analytic.doppler_averaged_coherence(f, spec.decays, spec.thermal).imag
        return float(doppler_averaged_steady_state(f, spec.decays, spec.thermal)[1, 0].imag)
    if spec.backend == "analytic":
        out = analytic.doppler_averaged_exit_field(f, spec.decays, spec.cell, spec.thermal,
                                                   spec.atom)
    else:
        out, _ = propagate_svea(f.omega_p, spec.cell, f, spec.decays, spec.thermal, spec.atom)
    return transmission(out, f.omega_p)


def sweep(spec, threads=1):
    """Evaluate ``spec`` at every axis point, in axis order.

    Points are independent, so ``threads > 1`` spreads them over a thread
    pool; the result does not depend on the thread count.
    """
    axis = spec.axis()

    def one(value):
        try:
            y = evaluate_point(spec, value)
        except (DeltaCPTError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            raise SweepError(f"{spec.backend} backend failed at "
                             f"{spec.swept_parameter} = {value!r}: {exc}", axis_value=value) from exc
        if not np.isfinite(y):
            raise SweepError(f"non-finite observable at {spec.swept_parameter} = {value!r}",
                             axis_value=value)
        return float(y)

    if (spec.backend == "analytic" and spec.observable == "im_rho_ba"
            and spec.swept_parameter == "probe_two_photon_detuning"):
        try:
            values = analytic.doppler_averaged_coherence_probe_axis(
                spec.fields, spec.decays, spec.thermal, axis).imag
        except DeltaCPTError:
            values = None  # fall back to the point loop for the failing value
        if values is not None and np.all(np.isfinite(values)):
            return Spectrum(axis, values, spec.swept_parameter, spec.observable,
                            spec.backend, provenance(spec))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(one, axis))
    else:
        values = [one(v) for v in axis]
    return Spectrum(axis, np.array(values), spec.swept_parameter, spec.observable,
                    spec.backend, provenance(spec))


# --- lineshape metrics ---------------------------------------------------------

@dataclass(frozen=True)
class LineshapeMetrics:
    """Contrast, width and position of the dominant feature.

    ``polarity`` is +1 for a peak and -1 for a dip; ``peak`` is the
    interpolated extremum and ``left``/``right`` the half-maximum crossings.
    """

    contrast: float
    fwhm: float
    center: float
    baseline: float
    peak: float
    polarity: int
    left: float
    right: float


def _outer_window(n):
    return max(1, int(round(0.1 * n)))


def spectrum_baseline(values):
    """Median of the outer 10 % of points on each side."""
    k = _outer_window(len(values))
    return float(np.median(np.concatenate([values[:k], values[-k:]])))


def _noise_floor(values):
    # second differences of the outer windows; ~0 for smooth model output
    k = _outer_window(len(values))
    tails = [values[:k], values[-k:]]
    d2 = np.concatenate([np.diff(t, 2) for t in tails if len(t) >= 3] or [np.zeros(1)])
    scale = max(np.max(np.abs(values)), np.finfo(float).tiny)
    return max(float(np.median(np.abs(d2))) / 0.6745 if d2.size else 0.0,
               64 * np.finfo(float).eps * scale)


def _crossing(x, y, i, step, level):
    j = i
    while 0 <= j + step < len(y):
        a, b = y[j] - level, y[j + step] - level
        if a == 0:
            return float(x[j])
        if a * b <= 0:
            return float(x[j] + (x[j + step] - x[j]) * a / (a - b))
        j += step
    raise NoPeakError("half-maximum crossing lies outside the sweep range")


def lineshape_metrics(s, kind="auto", comparable=0.8):
    """Metrics of the single dominant extremum of spectrum ``s``.

    ``kind`` is ``"peak"``, ``"dip"`` or ``"auto"`` (the larger excursion
    from the baseline wins). Secondary extrema whose prominence reaches
    ``comparable`` times the main one make the spectrum ambiguous.
    """
    x, y = s.axis, s.values
    base = spectrum_baseline(y)
    dev = y - base
    noise = _noise_floor(y)
    if kind == "auto":
        polarity = 1 if dev.max() >= -dev.min() else -1
    elif kind in ("peak", "dip"):
        polarity = 1 if kind == "peak" else -1
    else:
        raise ValueError("kind must be 'peak', 'dip' or 'auto'")
    signed = polarity * dev
    height = float(signed.max())
    if not height > 3 * noise:
        raise NoPeakError(f"no extremum above 3x the noise floor ({noise:.3g})")

    idx, props = find_peaks(signed, prominence=3 * noise)
    if idx.size == 0:
        raise NoPeakError("extremum sits on the sweep boundary")
    order = np.argsort(props["prominences"])[::-1]
    main = int(idx[order[0]])
    prom = props["prominences"][order]
    if idx.size > 1 and prom[1] >= comparable * prom[0]:
        cands = [float(x[i]) for i, pr in zip(idx[order], prom) if pr >= comparable * prom[0]]
        raise AmbiguousPeakError(f"{len(cands)} comparable extrema", candidates=cands)

    # parabola through the three extremal samples, in coordinates about x1
    x1 = x[main]
    a, b, c = np.polyfit(x[main - 1:main + 2] - x1, y[main - 1:main + 2], 2)
    t = -b / (2 * a) if a != 0 else 0.0
    t = min(max(t, x[main - 1] - x1), x[main + 1] - x1)
    center, peak = x1 + t, c + b * t + a * t * t

    level = base + 0.5 * (peak - base)
    left = _crossing(x, y, main, -1, level)
    right = _crossing(x, y, main, 1, level)
    excursion = abs(peak - base)
    contrast = excursion / abs(base) if base != 0 else excursion
    return LineshapeMetrics(float(contrast), float(right - left), float(center), base,
                            float(peak), polarity, left, right)


# --- shift tables --------------------------------------------------------------

@dataclass(frozen=True)
class ShiftRow:
    delta_mu: float
    power_dbm: float
    omega_mu: float
    center: float
    shift: float
    contrast: float
    valid: bool
    error: str = ""


def reference_spec(base):
    """Lambda reference: microwave off, no microwave detuning."""
    return base.with_(fields=base.fields.with_(omega_mu=0.0, delta_mu=0.0))


def shift_vs_power(detunings, powers, base, threads=1, kind=None):
    """Centre shift of the two-photon resonance per (delta_mu, power) cell.

    ``base`` must sweep ``probe_two_photon_detuning``. Shifts are measured
    against the Lambda reference (Omega_mu = 0). A power of None or -inf
    switches the microwave off. Failing cells are returned with
    ``valid=False`` and the error text.
    """
    if base.swept_parameter != "probe_two_photon_detuning":
        raise ValueError("shift_vs_power needs a probe_two_photon_detuning sweep")
    kind = kind or FEATURE_KIND[base.observable]
    ref = lineshape_metrics(sweep(reference_spec(base), threads), kind)
    rows = []
    for dmu in detunings:
        for p in powers:
            om = base.mw_rabi(p)
            spec = base.with_(fields=base.fields.with_(omega_mu=om, delta_mu=float(dmu)))
            pw = -math.inf if p is None else float(p)
            try:
                m = lineshape_metrics(sweep(spec, threads), kind)
            except DeltaCPTError as exc:
                rows.append(ShiftRow(float(dmu), pw, om, math.nan, math.nan, math.nan,
                                     False, f"{type(exc).__name__}: {exc}"))
                continue
            rows.append(ShiftRow(float(dmu), pw, om, m.center, m.center - ref.center,
                                 m.contrast, True))
    return rows
