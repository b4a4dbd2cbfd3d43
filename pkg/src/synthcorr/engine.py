"""Protocol simulation: channels, coupling windows and free bath evolution.

Each slot applies a synthesized channel to the sensor, then the coupled
evolution exp(-i H_window dt), then free bath evolution exp(-i 1 (x) H_B tau).
With ``method="phase-cycle"`` every combination of channel terms is propagated
as its own experiment and the signals are combined with the term weights.
``method="liouville"`` applies each slot's summed map once; the two agree by
linearity and serve as cross-checks of each other.

Correlation times follow t_1 = 0 and t_{k+1} = t_k + tau_k in coupling-only
mode (the bath is frozen during the windows), and t_{k+1} = t_k + dt + tau_k
when the bath drive also acts during the windows.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .liouville import I2, SY, DimensionError, expm, kron
from .model import ExperimentParams, SystemModel, build
from .synthesis import (
    SynthesizedChannel,
    fourth_order_channels,
    robust_repeat,
    second_order_channels,
)

COUPLING_ONLY = "coupling-only"
COUPLING_DRIVE = "coupling-plus-bath-drive"
MODES = (COUPLING_ONLY, COUPLING_DRIVE)
METHODS = ("phase-cycle", "liouville")


@dataclass(frozen=True)
class Slot:
    channel: SynthesizedChannel
    dt: float
    tau: float = 0.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("coupling window must be positive")
        if self.tau < 0:
            raise ValueError("free-evolution interval must be >= 0")


@dataclass(frozen=True, eq=False)
class ProtocolSpec:
    model: SystemModel
    slots: tuple
    observable: np.ndarray = field(default_factory=lambda: SY.copy())
    coupling_mode: str = COUPLING_ONLY

    def __post_init__(self):
        if not self.slots:
            raise ValueError("a protocol needs at least one slot")
        object.__setattr__(self, "slots", tuple(self.slots))
        if self.coupling_mode not in MODES:
            raise ValueError(f"coupling_mode must be one of {MODES}")
        obs = np.asarray(self.observable, dtype=complex)
        if obs.shape != (2, 2):
            raise DimensionError("observable must act on the sensor qubit")
        for s in self.slots:
            if s.channel.matrix.shape != (4, 4):
                raise DimensionError("channel does not act on the sensor qubit")

    @property
    def channels(self) -> list:
        return [s.channel for s in self.slots]

    def correlation_times(self) -> list:
        t, out = 0.0, []
        for s in self.slots:
            out.append(t)
            t += s.tau + (s.dt if self.coupling_mode == COUPLING_DRIVE else 0.0)
        return out


# ------------------------------------------------------------ propagation

class _UnitaryCache:
    """Per-call cache of window and free-evolution unitaries."""

    def __init__(self, model: SystemModel, mode: str):
        self.model = model
        self.mode = mode
        self._win: dict = {}
        self._free: dict = {}

    def window(self, dt: float) -> np.ndarray:
        U = self._win.get(dt)
        if U is None:
            H = self.model.V
            if self.mode == COUPLING_DRIVE:
                H = H + kron(I2, self.model.H_B)
            U = expm(H, -1j * dt)
            self._win[dt] = U
        return U

    def free(self, tau: float) -> np.ndarray:
        U = self._free.get(tau)
        if U is None:
            U = kron(I2, self.model.bath_propagator(tau))
            self._free[tau] = U
        return U

    def slot(self, s: Slot) -> np.ndarray:
        return self.free(s.tau) @ self.window(s.dt)


def _slot_data(spec: ProtocolSpec, method: str):
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    maps, weights, ptr = [], [], [0]
    for s in spec.slots:
        nat = s.channel.term_natural_maps()
        if method == "phase-cycle":
            maps.extend(nat)
            weights.extend(s.channel.weights)
        else:
            maps.append(np.tensordot(s.channel.weights, nat, axes=(0, 0)))
            weights.append(1.0)
        ptr.append(len(maps))
    return np.array(maps), np.array(weights, dtype=float), np.array(ptr, dtype=np.int64)


def _structure_key(spec: ProtocolSpec, method: str):
    maps, weights, ptr = _slot_data(spec, method)
    return (maps.tobytes(), weights.tobytes(), ptr.tobytes(), spec.observable.tobytes(),
            spec.coupling_mode, id(spec.model)), (maps, weights, ptr)


def run_batch(specs: Sequence[ProtocolSpec], method: str = "phase-cycle", backend: str | None = None) -> np.ndarray:
    """Signals for several specs that share model, channels and observable."""
    if not specs:
        raise ValueError("no specs given")
    key0, (maps, weights, ptr) = _structure_key(specs[0], method)
    for sp in specs[1:]:
        if len(sp.slots) != len(specs[0].slots) or _structure_key(sp, method)[0] != key0:
            raise ValueError("run_batch needs specs with identical channel structure")
    model = specs[0].model
    cache = _UnitaryCache(model, specs[0].coupling_mode)
    W = np.array([[cache.slot(s) for s in sp.slots] for sp in specs])
    obs = kron(specs[0].observable, np.eye(model.bath_dim))
    return _kernels.propagate(model.rho0, maps, weights, ptr, W, obs, backend=backend)


def run(spec: ProtocolSpec, method: str = "phase-cycle", backend: str | None = None) -> float:
    """Measured signal Tr[(O (x) 1) rho_final] of one protocol."""
    return float(run_batch([spec], method, backend)[0])


def propagate_states(spec: ProtocolSpec, term_choice: Sequence[int]) -> list:
    """Joint states after each slot for one phase-cycle branch (diagnostics)."""
    cache = _UnitaryCache(spec.model, spec.coupling_mode)
    rho = spec.model.rho0
    out = []
    for s, j in zip(spec.slots, term_choice):
        nat = s.channel.term_natural_maps()[j]
        rho = _kernels._apply_sensor_map_np(rho, nat)
        W = cache.slot(s)
        rho = W @ rho @ W.conj().T
        out.append(rho)
    return out


# ------------------------------------------------------- protocol builders

def second_order_protocol(params: ExperimentParams, tau21: float, model: SystemModel | None = None,
                          coupling_mode: str = COUPLING_ONLY, delta_theta: float = 0.0) -> ProtocolSpec:
    """Two slots that extract C^{+-}(tau21)."""
    if tau21 < 0:
        raise ValueError("tau21 must be >= 0")
    model = model or build(params)
    chans = second_order_channels()
    if delta_theta:
        from .errors import inject_pulse_error

        chans = inject_pulse_error(chans, delta_theta)
    dt = params.delta_t
    return ProtocolSpec(model, (Slot(chans[0], dt, tau21), Slot(chans[1], dt, 0.0)), coupling_mode=coupling_mode)


def fourth_order_protocol(params: ExperimentParams, tau21: float, tau32: float, tau43: float,
                          n: int | None = None, delta_theta: float = 0.0, model: SystemModel | None = None,
                          coupling_mode: str = COUPLING_ONLY) -> ProtocolSpec:
    """Four slots that extract C^{+--+}(tau21, tau43).

    The third channel is repeated ``n`` times (default ``params.n_repeat``);
    a nonzero ``delta_theta`` perturbs every pi/2 turn in all channels.
    """
    if min(tau21, tau32, tau43) < 0:
        raise ValueError("times must be >= 0")
    n = params.n_repeat if n is None else n
    model = model or build(params)
    p1, p2, p3, p4 = fourth_order_channels()
    if n > 1:
        p3 = robust_repeat(0.0, n)
    chans = [p1, p2, p3, p4]
    if delta_theta:
        from .errors import inject_pulse_error

        chans = inject_pulse_error(chans, delta_theta)
    dt = params.delta_t
    taus = (tau21, tau32, tau43, 0.0)
    return ProtocolSpec(model, tuple(Slot(c, dt, t) for c, t in zip(chans, taus)), coupling_mode=coupling_mode)


# ------------------------------------------------------------------ sweeps

@dataclass
class SweepResult:
    axis: np.ndarray
    signals: np.ndarray
    sigma: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)
    axis_name: str = "axis_value"

    def __post_init__(self):
        self.axis = np.asarray(self.axis, dtype=float)
        self.signals = np.asarray(self.signals, dtype=float)
        if self.sigma is None:
            self.sigma = np.zeros_like(self.signals)
        self.sigma = np.asarray(self.sigma, dtype=float)
        if not (self.axis.shape == self.signals.shape == self.sigma.shape):
            raise ValueError("axis, signals and sigma must have equal lengths")

    def to_csv(self, path, extra_columns: dict | None = None):
        from .io import write_csv

        cols = {self.axis_name: self.axis, "signal": self.signals, "sigma": self.sigma}
        cols.update(extra_columns or {})
        write_csv(path, cols, self.metadata)


class SweepError(RuntimeError):
    def __init__(self, index, value, cause):
        super().__init__(f"sweep failed at grid index {index} (value {value!r}): {cause}")
        self.index = index
        self.value = value


def sweep(builder: Callable[[float], ProtocolSpec], grid, method: str = "phase-cycle",
          backend: str | None = None, workers: int = 1, metadata: dict | None = None,
          axis_name: str = "axis_value") -> SweepResult:
    """Run ``builder(x)`` for every grid value; results keep grid order."""
    grid = list(np.atleast_1d(np.asarray(grid, dtype=float)))
    if not grid:
        raise ValueError("empty grid")
    specs = []
    for i, x in enumerate(grid):
        try:
            specs.append(builder(x))
        except Exception as exc:  # noqa: BLE001 - re-raised with the grid index
            raise SweepError(i, x, exc) from exc
    out = np.empty(len(specs))

    def _chunk(idx):
        try:
            out[idx] = run_batch([specs[i] for i in idx], method, backend)
        except ValueError:
            for i in idx:
                try:
                    out[i] = run(specs[i], method, backend)
                except Exception as exc:  # noqa: BLE001
                    raise SweepError(i, grid[i], exc) from exc

    chunks = np.array_split(np.arange(len(specs)), max(1, min(workers, len(specs))))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(_chunk, chunks))
    else:
        for c in chunks:
            _chunk(c)
    meta = {"method": method, "backend": backend or _kernels.BACKEND}
    meta.update(metadata or {})
    return SweepResult(np.array(grid), out, None, meta, axis_name)


@dataclass(frozen=True)
class PowerLawFit:
    k: float
    log_prefactor: float
    residual: float
    n_used: int
    n_excluded: int


def fit_power_law(dts, signals, J: float = 1.0) -> PowerLawFit:
    """Least-squares slope of log|signal| against log(J dt)."""
    x = np.asarray(dts, dtype=float)
    y = np.abs(np.asarray(signals, dtype=float))
    if x.shape != y.shape:
        raise ValueError("dts and signals must have equal lengths")
    ok = (x > 0) & (y > 0) & np.isfinite(y)
    excluded = int((~ok).sum())
    if excluded:
        warnings.warn(f"{excluded} non-positive points excluded from the power-law fit", RuntimeWarning)
    if ok.sum() < 3:
        raise ValueError("need at least 3 positive points")
    lx, ly = np.log(J * x[ok]), np.log(y[ok])
    A = np.vstack([lx, np.ones_like(lx)]).T
    (k, c), res, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = float(np.sqrt(res[0] / ok.sum())) if res.size else 0.0
    return PowerLawFit(float(k), float(c), resid, int(ok.sum()), excluded)


def _check_uniform(grid, name):
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size < 2:
        raise ValueError(f"{name} must have at least two points")
    d = np.diff(g)
    if np.any(np.abs(d - d[0]) > 1e-9 * max(abs(d[0]), 1e-300)) or d[0] <= 0:
        raise ValueError(f"{name} is not a uniform increasing grid")
    return g, float(d[0])


def sweep_2d(params: ExperimentParams, tau21_grid, tau43_grid, tau32: float = 10e-6, n: int | None = None,
             delta_theta: float = 0.0, method: str = "phase-cycle", backend: str | None = None,
             coupling_mode: str = COUPLING_ONLY) -> np.ndarray:
    """S4 on the tau21 x tau43 grid (rows: tau21, columns: tau43)."""
    g21, _ = _check_uniform(tau21_grid, "tau21 grid")
    g43, _ = _check_uniform(tau43_grid, "tau43 grid")
    model = build(params)
    specs = [fourth_order_protocol(params, a, tau32, b, n, delta_theta, model, coupling_mode)
             for a in g21 for b in g43]
    return run_batch(specs, method, backend).reshape(len(g21), len(g43))


@dataclass(frozen=True)
class SpectralDensity:
    freq_rows: np.ndarray
    freq_cols: np.ndarray
    magnitude: np.ndarray   # fftshift-ed |DFT|
    peaks: tuple            # ((f_row, f_col, magnitude), ...) sorted by magnitude

    @property
    def bin_rows(self) -> float:
        return float(self.freq_rows[1] - self.freq_rows[0])

    @property
    def bin_cols(self) -> float:
        return float(self.freq_cols[1] - self.freq_cols[0])


def find_peaks_2d(mag: np.ndarray, rel_threshold: float = 0.5) -> list:
    """Indices of periodic local maxima at or above ``rel_threshold * max``."""
    top = mag.max()
    if top <= 0:
        return []
    nb = [np.roll(np.roll(mag, i, 0), j, 1) for i in (-1, 0, 1) for j in (-1, 0, 1) if (i, j) != (0, 0)]
    is_max = np.all([mag >= x for x in nb], axis=0) & (mag >= rel_threshold * top)
    idx = np.argwhere(is_max)
    return sorted(map(tuple, idx), key=lambda ij: -mag[ij])


def spectral_density(matrix, step_rows: float, step_cols: float, rel_threshold: float = 0.5) -> SpectralDensity:
    """2D DFT magnitude with frequency axes in Hz and detected peaks."""
    x = np.asarray(matrix, dtype=float)
    if x.ndim != 2:
        raise ValueError("matrix must be 2D")
    if not (step_rows > 0 and step_cols > 0):
        raise ValueError("sample steps must be positive")
    X = np.fft.fftshift(np.abs(np.fft.fft2(x)))
    fr = np.fft.fftshift(np.fft.fftfreq(x.shape[0], d=step_rows))
    fc = np.fft.fftshift(np.fft.fftfreq(x.shape[1], d=step_cols))
    peaks = tuple((float(fr[i]), float(fc[j]), float(X[i, j])) for i, j in find_peaks_2d(X, rel_threshold))
    return SpectralDensity(fr, fc, X, peaks)


def tau_grid(start: float = 0.0, step: float = 2e-6, count: int = 40) -> np.ndarray:
    """Uniform delay grid; the default is 0 to 78 us in 2 us steps."""
    return start + step * np.arange(count)
