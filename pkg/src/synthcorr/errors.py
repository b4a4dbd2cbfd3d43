"""Error mechanisms, deviation metrics and the total-error model.

The total relative error of a signal extracted at order Theta is modelled as

    D_tot(dt) = (dt^(Theta+2) |C_next| + |E_r|) / (dt^Theta |A C|) + D_pulse + D_evo

where C_next is the next-order expansion coefficient on the sampling grid,
A C the target coefficient times correlation, E_r the readout-noise vector,
D_pulse the relative pulse-angle error and D_evo the relative loss from
amplitude decay during the free-evolution delays.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
import scipy.optimize

from . import catalog
from .synthesis import SynthesizedChannel

# Per-point readout noise presets for the reference experiment, in the signal
# units used by this package (see README, "Error budget").
READOUT_SIGMA_SECOND = 1.344e-3
READOUT_SIGMA_FOURTH = 3.21e-5


@dataclass(frozen=True)
class ErrorParams:
    delta_theta: float = 0.04
    k_decay: float = 2.76e3
    readout_sigma: float = 0.0
    gaussian_s: float = 5e3
    seed: int = 0

    def __post_init__(self):
        if self.k_decay < 0:
            raise ValueError("k_decay must be >= 0")
        if self.readout_sigma < 0:
            raise ValueError("readout_sigma must be >= 0")
        if self.gaussian_s < 0:
            raise ValueError("gaussian_s must be >= 0")

    def as_dict(self) -> dict:
        return asdict(self)


# ------------------------------------------------------------ pulse errors

@dataclass(frozen=True)
class InjectionReport:
    rotated: int
    passed_through: int


def _perturb(op, delta_theta):
    if op.kind == catalog.ROTATION and np.isclose(abs(op.angle), np.pi / 2, atol=1e-12, rtol=0):
        return catalog.rotation(np.sign(op.angle) * (np.pi / 2 + delta_theta), op.axis), True
    return op, False


def inject_pulse_error(channels, delta_theta: float, report: bool = False):
    """Replace every +/- pi/2 rotation by +/- (pi/2 + delta_theta); weights unchanged.

    Operations that are not pi/2 rotations pass through unchanged and are
    counted in the optional report.
    """
    single = isinstance(channels, SynthesizedChannel)
    chans = [channels] if single else list(channels)
    rotated = passed = 0
    out = []
    for ch in chans:
        terms = []
        for w, ops in ch.terms:
            new = []
            for op in ops:
                o, hit = _perturb(op, delta_theta)
                rotated += hit
                passed += not hit
                new.append(o)
            terms.append((w, tuple(new)))
        out.append(SynthesizedChannel(tuple(terms), ch.name))
    result = out[0] if single else type(channels)(out) if isinstance(channels, tuple) else out
    return (result, InjectionReport(rotated, passed)) if report else result


# ------------------------------------------------------- decay and dephasing

def apply_amplitude_decay(values, times, k: float) -> np.ndarray:
    """values * exp(-k t)."""
    v = np.asarray(values, dtype=float)
    t = np.asarray(times, dtype=float)
    if v.shape != t.shape:
        raise ValueError("values and times must have equal lengths")
    if np.any(t < 0):
        raise ValueError("times must be >= 0")
    return v * np.exp(-k * t)


def fit_decay(times, values, freq_guess: float) -> tuple:
    """Fit A exp(-k t) sin(2 pi f t + phi); returns (k, f)."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)

    def model(t, A, k, f, phi):
        return A * np.exp(-k * t) * np.sin(2 * np.pi * f * t + phi)

    p0 = (np.max(np.abs(y)), 1.0 / max(t.max(), 1e-300), freq_guess, 0.0)
    popt, _ = scipy.optimize.curve_fit(model, t, y, p0=p0, maxfev=20000)
    return float(popt[1]), float(popt[2])


def gaussian_dephasing(rho, lam: float, s: float, t: float, exact: bool = False) -> np.ndarray:
    """Ensemble average of y-rotations by angle w t with w ~ Normal(lam, s).

    The default reproduces the closed form used for the nutation analysis:
    the x-z Bloch components are rotated by lam t and damped by exp(-s t / 2);
    the y component and the trace are unchanged.  With ``exact=True`` the
    damping is exp(-s t^2 / 2), the true Gaussian average for phase w t.
    """
    if s < 0:
        raise ValueError("s must be >= 0")
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError("gaussian_dephasing acts on a single qubit")
    from .liouville import unvectorize, vectorize

    v = vectorize(rho)
    damp = np.exp(-s * t * t / 2) if exact else np.exp(-s * t / 2)
    a = lam * t
    c, sn = np.cos(a), np.sin(a)
    x, z = v[1], v[3]
    v = v.copy()
    v[1] = damp * (c * x + sn * z)
    v[3] = damp * (-sn * x + c * z)
    return unvectorize(v)


def add_readout_noise(values, sigma: float, seed) -> np.ndarray:
    """values + N(0, sigma^2) noise from ``numpy.random.default_rng(seed)``."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    v = np.asarray(values, dtype=float)
    if sigma == 0:
        return v.copy()
    rng = np.random.default_rng(seed)
    return v + rng.normal(0.0, sigma, size=v.shape)


# ----------------------------------------------------------------- metrics

def deviation_metrics(x, y) -> tuple:
    """(E, Delta) with E = |x - y| and Delta = |E|_2 / |y|_2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size == 0:
        raise ValueError("x and y must be nonempty with equal lengths")
    ny = np.linalg.norm(y)
    if ny == 0:
        raise ValueError("reference norm is zero")
    E = np.abs(x - y)
    return E, float(np.linalg.norm(E) / ny)


def pulse_relative_error(theta: int, delta_theta: float, p_C: float = 1.0) -> float:
    """delta_theta^2 for Theta = 2, p_C [1 - (1 - delta_theta^2/2)^3] for Theta = 4."""
    if theta == 2:
        return delta_theta ** 2
    if theta == 4:
        return p_C * (1 - (1 - delta_theta ** 2 / 2) ** 3)
    raise ValueError("theta must be 2 or 4")


def evolution_relative_error(taus, correlations, k: float) -> float:
    """|(1 - exp(-k tau)) C| / |C| over the sampling delays."""
    taus = np.asarray(taus, dtype=float)
    C = np.asarray(correlations, dtype=float)
    nc = np.linalg.norm(C)
    if nc == 0:
        raise ValueError("correlation norm is zero")
    return float(np.linalg.norm((1 - np.exp(-k * taus)) * C) / nc)


@dataclass(frozen=True)
class BudgetNorms:
    """Grid norms feeding the total-error model."""

    theta: int
    norm_target: float      # |A C^Theta| over the grid
    norm_next: float        # |C^(Theta+2)| over the grid
    norm_readout: float     # |E_r| over the grid
    delta_pulse: float
    delta_evo: float


def total_error(dt, norms: BudgetNorms) -> np.ndarray:
    """Approximate total relative error at coupling window(s) ``dt``."""
    if norms.norm_target <= 0:
        raise ValueError("target norm must be positive")
    dt = np.asarray(dt, dtype=float)
    th = norms.theta
    approx = dt ** 2 * norms.norm_next / norms.norm_target
    readout = norms.norm_readout / (dt ** th * norms.norm_target)
    return approx + readout + norms.delta_pulse + norms.delta_evo


def error_components(dt, norms: BudgetNorms) -> dict:
    dt = np.asarray(dt, dtype=float)
    th = norms.theta
    ones = np.ones_like(dt)
    return {
        "delta_th": dt ** 2 * norms.norm_next / norms.norm_target,
        "delta_pulse": norms.delta_pulse * ones,
        "delta_evo": norms.delta_evo * ones,
        "delta_r": norms.norm_readout / (dt ** th * norms.norm_target),
        "delta_tot": total_error(dt, norms),
    }


def optimal_dt(theta: int, norm_C_next: float, norm_E_r: float) -> float:
    """Stationary point (Theta |E_r| / (2 |C_next|))^(1/(Theta+2)) of the two-term model."""
    if norm_C_next <= 0 or norm_E_r <= 0:
        raise ValueError("norms must be positive")
    return float((theta * norm_E_r / (2 * norm_C_next)) ** (1.0 / (theta + 2)))


def leakage_margin(delta_theta: float, dt: float, n: int, J: float) -> float:
    """(1/4)(1 - dth^2/2)^3 (J dt)^2 / |dth|^n; > 1 means leakage is suppressed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    lhs = 0.25 * (1 - delta_theta ** 2 / 2) ** 3 * (J * dt) ** 2
    rhs = abs(delta_theta) ** n
    return float("inf") if rhs == 0 else float(lhs / rhs)


def preset_readout_sigma(theta: int) -> float:
    """Per-point readout noise preset for second (Theta=2) or fourth (Theta=4) order."""
    if theta == 2:
        return READOUT_SIGMA_SECOND
    if theta == 4:
        return READOUT_SIGMA_FOURTH
    raise ValueError("theta must be 2 or 4")


def budget_norms(theta: int, params, eparams: ErrorParams, tau21_grid, tau32: float = 10e-6,
                 tau43: float = 10e-6, readout_sigma: float | None = None) -> BudgetNorms:
    """Evaluate the grid norms of the total-error model from the correlation oracle.

    The sampling grid runs over tau21; the fourth-order delays tau32 and tau43
    are held fixed.  The decay loss uses the delay between the first and the
    last coupling window of each point, which does not depend on dt.
    """
    from .model import build
    from .oracle import correlation, next_order_coefficient

    model = build(params)
    g = np.asarray(tau21_grid, dtype=float)
    if theta == 2:
        times = [(0.0, t) for t in g]
        eta, amp = "+-", 1.0
    elif theta == 4:
        times = [(0.0, t, t + tau32, t + tau32 + tau43) for t in g]
        eta, amp = "+--+", params.p_C
    else:
        raise ValueError("theta must be 2 or 4")
    C = np.array([correlation(eta, ts, model) for ts in times])
    nxt = np.array([next_order_coefficient(theta, ts, model) for ts in times])
    sigma = preset_readout_sigma(theta) if readout_sigma is None else readout_sigma
    elapsed = np.array([ts[-1] - ts[0] for ts in times])
    return BudgetNorms(
        theta=theta,
        norm_target=float(np.linalg.norm(amp * C)),
        norm_next=float(np.linalg.norm(nxt)),
        norm_readout=float(sigma * np.sqrt(len(g))),
        delta_pulse=pulse_relative_error(theta, eparams.delta_theta, params.p_C),
        delta_evo=evolution_relative_error(elapsed, C, eparams.k_decay),
    )


def minimize_total_error(norms: BudgetNorms, bounds=(1e-6, 1e-2)) -> float:
    """Numerical minimizer of :func:`total_error` in log(dt)."""
    res = scipy.optimize.minimize_scalar(
        lambda x: float(total_error(np.exp(x), norms)),
        bounds=(np.log(bounds[0]), np.log(bounds[1])), method="bounded",
        options={"xatol": 1e-12},
    )
    return float(np.exp(res.x))
