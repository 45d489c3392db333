"""
Microwave sensing: inversion of CPT spectra and the discriminator gain.

The fit is a two-stage search in coordinates scaled to the unit box: a
coarse grid seeds a Nelder-Mead refinement. Uncertainties follow from the
local quadratic approximation of the residual surface.
"""

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize

from .errors import DeltaCPTError
from .spectra import (FEATURE_KIND, Spectrum, SweepSpec, evaluate_point, lineshape_metrics,
                      sweep)

PARAMETERS = ("omega_mu", "delta_mu", "gamma_bc", "amplitude_scale", "baseline_offset")
UNITS = {"omega_mu": "rad/s", "delta_mu": "rad/s", "gamma_bc": "rad/s",
         "amplitude_scale": "1", "baseline_offset": "observable"}


@dataclass(frozen=True)
class FitProblem:
    """Observed spectrum, free parameters with their bounds, forward model.

    ``forward`` supplies every fixed parameter; its axis settings are
    replaced by the observed axis. Parameters not listed as free keep the
    value in ``forward`` (amplitude scale 1, baseline offset 0).
    """

    observed: Spectrum
    free_parameters: tuple
    bounds: dict
    forward: SweepSpec
    grid_points: int = 8
    max_iter: int = 500
    rel_tol: float = 1e-8
    threads: int = 1
    starts: int = 1

    def __post_init__(self):
        free = tuple(self.free_parameters)
        object.__setattr__(self, "free_parameters", free)
        if not free:
            raise ValueError("at least one free parameter is required")
        for name in free:
            if name not in PARAMETERS:
                raise ValueError(f"unknown fit parameter {name!r}; expected {PARAMETERS}")
            lo, hi = self.bounds.get(name, (math.nan, math.nan))
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ValueError(f"bounds for {name!r} must be finite with lower < upper")
        if len(set(free)) != len(free):
            raise ValueError("free parameters must be distinct")
        if len(self.observed.axis) < 5 * len(free):
            raise ValueError("need at least 5 observed points per free parameter")
        if self.grid_points < 2:
            raise ValueError("grid_points must be >= 2")
        if self.starts < 1:
            raise ValueError("starts must be >= 1")


@dataclass(frozen=True)
class FitResult:
    estimates: dict
    uncertainties: dict
    residual: float
    converged: bool
    iterations: int
    grid_residual: float
    units: dict = field(default_factory=dict)
    message: str = ""

    def to_dict(self):
        return {"estimates": self.estimates, "uncertainties": self.uncertainties,
                "units": self.units, "residual": self.residual, "converged": self.converged,
                "iterations": self.iterations, "grid_residual": self.grid_residual,
                "message": self.message}

    def report(self):
        lines = [f"converged: {'yes' if self.converged else 'NO'} "
                 f"({self.iterations} iterations; {self.message})",
                 f"residual sum of squares: {self.residual:.6e} "
                 f"(grid seed {self.grid_residual:.6e})"]
        for k, v in self.estimates.items():
            u = self.uncertainties[k]
            lines.append(f"  {k} = {v:.9g} +/- {u:.3g} {self.units.get(k, '')}")
        return "\n".join(lines)


class _Model:
    """Forward model on the observed axis, indexed by unit-box coordinates."""

    def __init__(self, problem):
        self.p = problem
        self.lo = np.array([problem.bounds[n][0] for n in problem.free_parameters], float)
        self.hi = np.array([problem.bounds[n][1] for n in problem.free_parameters], float)
        self.y = problem.observed.values
        self.axis = problem.observed.axis
        self.norm = max(float(np.sum(self.y ** 2)), np.finfo(float).tiny)

    def params(self, u):
        return dict(zip(self.p.free_parameters, self.lo + np.asarray(u) * (self.hi - self.lo)))

    def predict(self, values):
        spec = self.p.forward
        f, d = spec.fields, spec.decays
        if "omega_mu" in values:
            f = f.with_(omega_mu=float(values["omega_mu"]))
        if "delta_mu" in values:
            f = f.with_(delta_mu=float(values["delta_mu"]))
        if "gamma_bc" in values:
            g = float(values["gamma_bc"])
            tied = d.gamma_cb == d.gamma_bc
            d = type(d)(d.gamma_ab, d.gamma_ac, g, g if tied else d.gamma_cb, d.gamma_c)
        spec = spec.with_(fields=f, decays=d)
        uniform = np.allclose(np.diff(self.axis), self.axis[1] - self.axis[0], rtol=1e-9)
        if uniform:
            model = sweep(spec.with_(start=float(self.axis[0]), stop=float(self.axis[-1]),
                                     points=len(self.axis))).values
        else:
            model = np.array([evaluate_point(spec, x) for x in self.axis])
        return (values.get("amplitude_scale", 1.0) * model
                + values.get("baseline_offset", 0.0))

    def rss(self, u):
        try:
            r = self.y - self.predict(self.params(u))
        except (DeltaCPTError, ArithmeticError, ValueError, np.linalg.LinAlgError):
            return math.inf
        s = float(np.sum(r * r))
        return s if np.isfinite(s) else math.inf

    def objective(self, u):
        return self.rss(u) / self.norm


def _hessian(fun, u, h=1e-3):
    n = len(u)
    c = np.clip(u, h, 1 - h)
    f0 = fun(c)
    hess = np.empty((n, n))
    for i in range(n):
        ei = np.eye(n)[i] * h
        hess[i, i] = (fun(c + ei) - 2 * f0 + fun(c - ei)) / h ** 2
        for j in range(i):
            ej = np.eye(n)[j] * h
            hess[i, j] = hess[j, i] = (fun(c + ei + ej) - fun(c + ei - ej)
                                       - fun(c - ei + ej) + fun(c - ei - ej)) / (4 * h * h)
    return hess


def fit(problem):
    """Estimate the free parameters of ``problem``.

    Stage one scans ``grid_points`` per dimension over the bound box; stage
    two runs a bounded Nelder-Mead from each of the ``starts`` best grid
    nodes until the relative residual change drops below ``rel_tol`` or
    ``max_iter`` is reached, and keeps the lowest residual. Extra starts
    help when a nuisance parameter (amplitude scale, baseline) makes a
    weakly constrained one such as delta_mu settle on a bound. A
    refinement that cannot improve on a non-zero grid residual is reported
    as not converged.
    """
    m = _Model(problem)
    n = len(problem.free_parameters)
    ticks = np.linspace(0.0, 1.0, problem.grid_points)
    nodes = [np.array(c) for c in itertools.product(ticks, repeat=n)]
    if problem.threads > 1:
        with ThreadPoolExecutor(max_workers=problem.threads) as pool:
            grid = list(pool.map(m.objective, nodes))
    else:
        grid = [m.objective(u) for u in nodes]
    order = np.argsort(grid, kind="stable")
    seed_val = grid[order[0]]
    if not np.isfinite(seed_val):
        raise DeltaCPTError("forward model failed on every grid node")

    step = 0.5 / (problem.grid_points - 1)
    best = None
    for k in order[:problem.starts]:
        seed, start_val = nodes[k], grid[k]
        if not np.isfinite(start_val):
            break
        res = minimize(m.objective, seed, method="Nelder-Mead", bounds=[(0.0, 1.0)] * n,
                       options={"maxiter": problem.max_iter, "xatol": problem.rel_tol,
                                "fatol": problem.rel_tol * max(start_val, 1e-300),
                                "initial_simplex": _initial_simplex(seed, step)})
        u, val = (res.x, res.fun) if res.fun <= start_val else (seed, start_val)
        if best is None or val < best[1]:
            best = (u, val, res)
    u, val, res = best
    exact_seed = seed_val <= problem.rel_tol ** 2
    converged = bool(res.success and (val < seed_val or exact_seed))

    rss = val * m.norm
    dof = max(len(m.y) - n, 1)
    hess = _hessian(m.rss, u)
    sigma = np.full(n, math.nan)
    try:
        cov = 2 * (rss / dof) * np.linalg.inv(hess)
        if np.all(np.isfinite(cov)) and np.all(np.diag(cov) >= 0):
            sigma = np.sqrt(np.diag(cov)) * (m.hi - m.lo)
    except np.linalg.LinAlgError:
        pass

    est = {k: float(v) for k, v in m.params(u).items()}
    return FitResult(
        estimates=est,
        uncertainties={k: float(s) for k, s in zip(problem.free_parameters, sigma)},
        residual=float(rss),
        converged=converged,
        iterations=int(res.nit),
        grid_residual=float(seed_val * m.norm),
        units={k: UNITS[k] for k in problem.free_parameters},
        message=str(res.message),
    )


def _initial_simplex(seed, size):
    n = len(seed)
    pts = [np.array(seed, float)]
    for i in range(n):
        p = np.array(seed, float)
        p[i] = p[i] + size if p[i] + size <= 1 else p[i] - size
        pts.append(p)
    return np.array(pts)


# --- discriminator -------------------------------------------------------------

def asymmetry(spec, delta_mu, shoulders, excursion):
    """Normalised shoulder-height difference at fixed probe detunings.

    ``shoulders`` are the half-maximum crossings (left, right) of the
    spectrum at delta_mu = 0 and ``excursion`` its |peak - baseline|; the
    metric is (y(right) - y(left)) / excursion, zero at delta_mu = 0.
    """
    s = spec.with_(fields=spec.fields.with_(delta_mu=float(delta_mu)))
    left, right = shoulders
    return (evaluate_point(s, right) - evaluate_point(s, left)) / excursion


def _refine_crossing(spec, guess, level, width):
    """Root of observable(x) = level near ``guess``; falls back to ``guess``."""
    g = lambda x: evaluate_point(spec, x) - level  # noqa: E731
    a, b = guess - width, guess + width
    try:
        ga, gb = g(a), g(b)
        if ga * gb > 0:
            return guess
        return brentq(g, a, b, xtol=1e-9 * width, rtol=4 * np.finfo(float).eps)
    except (DeltaCPTError, ArithmeticError, ValueError):
        return guess


def discriminator_slope(spec, power_dbm, step=2 * np.pi * 10.0, kind=None):
    """Small-signal gain d(asymmetry)/d(delta_mu) at delta_mu = 0, in 1/(rad/s).

    ``spec`` is a probe-detuning sweep; ``power_dbm`` sets Omega_mu through
    the far-field map (None or -inf turns the microwave off). The shoulders
    are the half-maximum crossings of the delta_mu = 0 spectrum, refined by
    root finding on the model. Central differences with ``step`` (rad/s).
    """
    if spec.swept_parameter != "probe_two_photon_detuning":
        raise ValueError("discriminator_slope needs a probe_two_photon_detuning sweep")
    s0 = spec.with_(fields=spec.fields.with_(omega_mu=spec.mw_rabi(power_dbm), delta_mu=0.0))
    sp = sweep(s0)
    m0 = lineshape_metrics(sp, kind or FEATURE_KIND[spec.observable])
    level = m0.baseline + 0.5 * (m0.peak - m0.baseline)
    shoulders = tuple(_refine_crossing(s0, x, level, sp.step) for x in (m0.left, m0.right))
    excursion = abs(m0.peak - m0.baseline)
    return (asymmetry(s0, step, shoulders, excursion)
            - asymmetry(s0, -step, shoulders, excursion)) / (2 * step)
