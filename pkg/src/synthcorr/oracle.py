"""Reference values: bath correlations, closed forms, sensor coefficients and
exact second- and fourth-order signals.

Correlations are C^{eta_N...eta_1} = Tr_B(B_N^{eta_N} ... B_1^{eta_1} rho_B) with
B^+ X = (B X + X B)/2 and B^- X = -i (B X - X B)/2, B_k = B(t_k).  Orderings
follow :class:`~synthcorr.ordering.OrderingSequence`; ``times`` are listed
earliest first, aligned with ``OrderingSequence.entries``.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from .liouville import (
    PHYS_TOL,
    SY,
    SZ,
    anticomm_superop,
    comm_superop,
    hermitian_function,
    pauli_basis,
    vectorize,
)
from .model import ExperimentParams, SystemModel
from .ordering import OrderingSequence, vanishing_correlation_filter

MAX_PREDICT_SLOTS = 6

__all__ = [
    "OrderingSequence",
    "vanishing_correlation_filter",
    "correlation",
    "analytic_C_plus_minus",
    "analytic_C_pmmp",
    "analytic_C_p00p",
    "sensor_superops",
    "coefficient_A",
    "exact_S2",
    "exact_S4",
    "next_order_coefficient",
    "predicted_signal",
    "leakage_signal",
]


def _apply(eta: str, Bt: np.ndarray, X: np.ndarray) -> np.ndarray:
    if eta == "0":
        return X
    if eta == "+":
        return 0.5 * (Bt @ X + X @ Bt)
    return -0.5j * (Bt @ X - X @ Bt)


def correlation(eta, times, model: SystemModel, imag_tol: float | None = None) -> float:
    """Time-ordered bath correlation, evaluated by direct operator products.

    Returns the real part.  If ``imag_tol`` is given, a ValueError is raised
    when the imaginary residue exceeds it.
    """
    seq = OrderingSequence.coerce(eta)
    times = [float(t) for t in times]
    if len(times) != len(seq):
        raise ValueError(f"need {len(seq)} times, got {len(times)}")
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("times must be nondecreasing")
    X = model.rho_B.astype(complex)
    for e, t in zip(seq.entries, times):
        if e != "0":
            X = _apply(e, model.bath_operator_at(t), X)
    val = np.trace(X)
    if imag_tol is not None and abs(val.imag) > imag_tol * max(1.0, abs(val.real)):
        raise ValueError(f"correlation has imaginary part {val.imag:.3e}")
    return float(val.real)


def _need_three(params: ExperimentParams):
    if params.bath_spins != 3:
        raise ValueError("closed forms assume a three-spin bath")


def analytic_C_plus_minus(tau21: float, params: ExperimentParams) -> float:
    """C^{+-} = (3/4) J^2 p_H sin(2 pi nu tau21)."""
    _need_three(params)
    return 0.75 * params.J ** 2 * params.p_H * np.sin(2 * np.pi * params.nu * tau21)


def analytic_C_pmmp(tau21: float, tau43: float, params: ExperimentParams) -> float:
    """C^{+--+} = (3/16) J^4 sin(2 pi nu tau21) sin(2 pi nu tau43); no p_H factor."""
    _need_three(params)
    w = 2 * np.pi * params.nu
    return 3.0 / 16.0 * params.J ** 4 * np.sin(w * tau21) * np.sin(w * tau43)


def analytic_C_p00p(tau41: float, params: ExperimentParams) -> float:
    """C^{+00+} = (3/4) J^2 cos(2 pi nu tau41)."""
    _need_three(params)
    return 0.75 * params.J ** 2 * np.cos(2 * np.pi * params.nu * tau41)


# ------------------------------------------------------------ sensor side

def sensor_superops(S=SZ / 2) -> dict:
    """Real Pauli-basis matrices of S^+ and S^- for a sensor coupling operator."""
    sp = anticomm_superop(S).matrix
    sm = comm_superop(S).matrix
    return {"+": np.real_if_close(sp, tol=1000), "-": np.real_if_close(sm, tol=1000), "0": np.eye(4)}


def _channel_matrix(ch) -> np.ndarray:
    m = ch.matrix if hasattr(ch, "matrix") else np.asarray(ch)
    if m.shape != (4, 4):
        raise ValueError("channels must be 4x4 sensor Liouville matrices")
    return m


def coefficient_A(channels, eta, rho_S=None, O=None, S=SZ / 2) -> float:
    """A = 2^Theta Tr_S[O (S^{etabar_N} P_N) ... (S^{etabar_1} P_1) rho_S].

    ``eta`` is the bath-side ordering; the sensor uses the conjugate entries.
    """
    seq = OrderingSequence.coerce(eta)
    if len(channels) != len(seq):
        raise ValueError("channels and eta must have the same length")
    rho_S = np.diag([1.0, 0.0]) if rho_S is None else rho_S
    O = SY if O is None else O
    sup = sensor_superops(S)
    v = vectorize(rho_S)
    for e, ch in zip(seq.sensor_side().entries, channels):
        v = sup[e] @ (_channel_matrix(ch) @ v)
    o = np.array([np.trace(O @ b) for b in pauli_basis(1).elements])
    val = 2 ** seq.theta * (o @ v)
    return float(np.real(val))


# --------------------------------------------------------------- exact S

def _bath_liouville(model: SystemModel, t: float):
    """(B^+, i B^-) at time t as Hermitian Pauli-basis matrices."""
    Bt = model.bath_operator_at(t)
    basis = pauli_basis(model.bath_spins)
    plus = anticomm_superop(Bt, basis).matrix
    iminus = 1j * comm_superop(Bt, basis).matrix
    return plus, iminus


def _sin(H: np.ndarray, dt: float) -> np.ndarray:
    return hermitian_function(H, lambda w: np.sin(dt * w))


def _trace_of_vec(v: np.ndarray, model: SystemModel) -> complex:
    return v[0] * model.bath_dim


def exact_S2(dt: float, t1: float, t2: float, model: SystemModel) -> float:
    """S2 = -i Tr_B{ sin[dt B^+(t2)] sin[i dt B^-(t1)] rho_B } (no truncation)."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    p2, _ = _bath_liouville(model, t2)
    _, m1 = _bath_liouville(model, t1)
    v = vectorize(model.rho_B, pauli_basis(model.bath_spins))
    v = _sin(p2, dt) @ (_sin(m1, dt) @ v)
    val = -1j * _trace_of_vec(v, model)
    _check_real(val)
    return float(val.real)


def exact_S4(dt: float, t1: float, t2: float, t3: float, t4: float, model: SystemModel,
             p_C: float | None = None) -> float:
    """S4 = -p_C Tr_B{ sin[dt B4^+] sin[i dt B3^-] sin[i dt B2^-] sin[dt B1^+] rho_B }."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    p_C = model.params.p_C if p_C is None else p_C
    v = vectorize(model.rho_B, pauli_basis(model.bath_spins))
    for t, which in ((t1, 0), (t2, 1), (t3, 1), (t4, 0)):
        H = _bath_liouville(model, t)[which]
        v = _sin(H, dt) @ v
    val = -p_C * _trace_of_vec(v, model)
    _check_real(val)
    return float(val.real)


def _check_real(val, tol=PHYS_TOL):
    if abs(val.imag) > tol * max(1.0, abs(val.real)):
        raise ValueError(f"exact signal has imaginary part {val.imag:.3e}")


def next_order_coefficient(order: int, times, model: SystemModel) -> float:
    """Coefficient of dt^(order+2) in the exact signal (order 2 or 4).

    Obtained from the cubic term of each sine in the exact expressions.
    """
    Bs = [model.bath_operator_at(t) for t in times]
    rho = model.rho_B.astype(complex)

    def tr(*ops):  # ops given latest first, each (eta, power, index)
        X = rho
        for e, pw, k in reversed(ops):
            for _ in range(pw):
                X = _apply(e, Bs[k], X)
        return np.trace(X).real

    if order == 2:
        if len(times) != 2:
            raise ValueError("order 2 needs two times")
        return (tr(("+", 1, 1), ("-", 3, 0)) - tr(("+", 3, 1), ("-", 1, 0))) / 6.0
    if order == 4:
        if len(times) != 4:
            raise ValueError("order 4 needs four times")
        p = model.params.p_C
        T4 = tr(("+", 3, 3), ("-", 1, 2), ("-", 1, 1), ("+", 1, 0))
        T3 = tr(("+", 1, 3), ("-", 3, 2), ("-", 1, 1), ("+", 1, 0))
        T2 = tr(("+", 1, 3), ("-", 1, 2), ("-", 3, 1), ("+", 1, 0))
        T1 = tr(("+", 1, 3), ("-", 1, 2), ("-", 1, 1), ("+", 3, 0))
        return p * (-T4 + T3 + T2 - T1) / 6.0
    raise ValueError("order must be 2 or 4")


# ------------------------------------------------------------- prediction

def predicted_signal(channels, model: SystemModel, times, dt: float, max_order: int,
                     observable=None) -> float:
    """Truncated expansion sum_{Theta <= max_order} dt^Theta A C over all orderings."""
    N = len(channels)
    if N > MAX_PREDICT_SLOTS:
        raise ValueError(f"at most {MAX_PREDICT_SLOTS} slots (3^N orderings)")
    if max_order > 2 * N:
        raise ValueError("max_order must be <= 2N")
    if len(times) != N:
        raise ValueError("need one time per channel")
    total = 0.0
    for ent in itertools.product("+-0", repeat=N):
        seq = OrderingSequence(ent)
        if seq.theta > max_order:
            continue
        A = coefficient_A(channels, seq, model.rho_S, observable, model.S)
        if A == 0.0:
            continue
        total += dt ** seq.theta * A * correlation(seq, times, model)
    return total


def leakage_signal(delta_theta: float, n: int, dt: float, times, params: ExperimentParams,
                   exact_angles: bool = False) -> tuple:
    """(main, leakage) terms of the fourth-order signal with pulse-angle error.

    main    = p_C (1 - dth^2/2)^3 dt^4 C^{+--+}
    leakage = p_C (-dth)^n dt^2 C^{+00+}
    With ``exact_angles`` the trigonometric factors cos^3(dth) and
    (-sin dth)^n replace their small-angle forms.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    t1, t2, t3, t4 = times
    if exact_angles:
        amp, leak = np.cos(delta_theta) ** 3, np.cos(delta_theta) ** 3 * (-np.sin(delta_theta)) ** n
    else:
        amp, leak = (1 - delta_theta ** 2 / 2) ** 3, (-delta_theta) ** n
    main = params.p_C * amp * dt ** 4 * analytic_C_pmmp(t2 - t1, t4 - t3, params)
    lk = params.p_C * leak * dt ** 2 * analytic_C_p00p(t4 - t1, params)
    return float(main), float(lk)
