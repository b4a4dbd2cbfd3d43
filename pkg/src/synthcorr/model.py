"""Sensor and bath model: one qubit sensor coupled to a small spin bath.

Units: Hamiltonians are angular frequencies (rad/s) and times are seconds.
The joint Hilbert space is ordered sensor (x) bath.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .liouville import I2, PHYS_TOL, SX, SZ, is_hermitian, kron

MAX_BATH_SPINS = 4


@dataclass(frozen=True)
class ExperimentParams:
    """Physical parameters.

    J_CH and nu are in Hz; J = 2 pi J_CH (rad/s) is derived.  p_C and p_H are
    the sensor and bath polarizations; signals are linear in each, and both
    default to 1 so that results are reported per unit polarization.
    """

    J_CH: float = 129.6
    nu: float = 24000.0
    p_C: float = 1.0
    p_H: float = 1.0
    delta_t: float = 0.5e-3
    n_repeat: int = 1
    bath_spins: int = 3

    def __post_init__(self):
        if not (self.J_CH > 0 and self.nu > 0):
            raise ValueError("J_CH and nu must be positive")
        if not self.delta_t > 0:
            raise ValueError("delta_t must be positive")
        if self.n_repeat < 1:
            raise ValueError("n_repeat must be >= 1")
        if not 1 <= self.bath_spins <= MAX_BATH_SPINS:
            raise ValueError(f"bath_spins must be in 1..{MAX_BATH_SPINS}")

    @property
    def J(self) -> float:
        return 2 * np.pi * self.J_CH

    def as_dict(self) -> dict:
        return asdict(self)


def _embed(op, i: int, n: int) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for k in range(n):
        out = np.kron(out, op if k == i else I2)
    return out


@dataclass(frozen=True, eq=False)
class SystemModel:
    params: ExperimentParams
    H_B: np.ndarray
    B: np.ndarray
    V: np.ndarray
    rho_S: np.ndarray
    rho_B: np.ndarray
    S: np.ndarray
    _bath_eig: tuple = field(repr=False, default=None)

    sensor_dim = 2

    @property
    def bath_spins(self) -> int:
        return self.params.bath_spins

    @property
    def bath_dim(self) -> int:
        return self.B.shape[0]

    @property
    def joint_dim(self) -> int:
        return 2 * self.bath_dim

    @property
    def rho0(self) -> np.ndarray:
        return kron(self.rho_S, self.rho_B)

    def bath_propagator(self, t: float) -> np.ndarray:
        """exp(-i H_B t)."""
        w, v = self._bath_eig
        return (v * np.exp(-1j * w * t)) @ v.conj().T

    def bath_operator_at(self, t: float) -> np.ndarray:
        """Interaction-picture coupling operator B(t) = e^{i H_B t} B e^{-i H_B t}."""
        if t < 0:
            raise ValueError("t must be >= 0")
        U = self.bath_propagator(t)
        return U.conj().T @ self.B @ U


def build(params: ExperimentParams | None = None) -> SystemModel:
    """Construct all operators of the model for ``params``."""
    params = params or ExperimentParams()
    n = params.bath_spins
    sx_sum = sum(_embed(SX, i, n) for i in range(n))
    sz_sum = sum(_embed(SZ, i, n) for i in range(n))
    H_B = np.pi * params.nu * sx_sum
    B = 0.5 * params.J * sz_sum
    S = SZ / 2
    V = kron(S, B)
    rho_S = (I2 + params.p_C * SZ) / 2
    db = 2 ** n
    rho_B = (np.eye(db) + params.p_H * sx_sum) / db
    for name, m in (("H_B", H_B), ("B", B), ("V", V), ("rho_S", rho_S), ("rho_B", rho_B)):
        if not is_hermitian(m, PHYS_TOL):
            raise ValueError(f"{name} is not Hermitian")
    eig = np.linalg.eigh(H_B)
    return SystemModel(params, H_B, B, V, rho_S, rho_B, S, eig)
