"""The sixteen single-qubit operations and the sixteen generator maps.

Conventions
-----------
* Rotations are active: R(theta, n) rho = U rho U^dag with
  U = exp(-i theta n.sigma / 2).  In Bloch coordinates this is the usual
  right-handed rotation, R_ij = d_ij cos(t) + n_i n_j (1 - cos(t)) - sin(t) e_ijk n_k,
  so a +pi/2 turn about y carries +z to +x.
* |+z> is the sigma_z eigenvector with eigenvalue +1 (index 0 of the
  computational basis) and |-z> the one with eigenvalue -1 (index 1).
  Polarization maps drive the qubit into the ``-`` eigenstate of their axis.

Every operation is stored as a list of signed Kraus pieces
``[(sign, K), ...]`` with Phi(rho) = sum sign * K rho K^dag.  Measurement maps
are the only ones with a negative sign: they are differences of outcome
branches and are realized by post-processing.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

from .liouville import (
    I2,
    PAULIS,
    STRUCT_TOL,
    SuperOperator,
    pauli_basis,
    sandwich_superop,
)

AXES = {"x": 1, "y": 2, "z": 3}
_UNIT = {
    "x": (1.0, 0.0, 0.0),
    "y": (0.0, 1.0, 0.0),
    "z": (0.0, 0.0, 1.0),
    "xy": (2 ** -0.5, 2 ** -0.5, 0.0),
    "yz": (0.0, 2 ** -0.5, 2 ** -0.5),
    "zx": (2 ** -0.5, 0.0, 2 ** -0.5),
}

IDENTITY = "identity"
ROTATION = "rotation"
MEASUREMENT = "measurement"
POLARIZATION = "polarization"

CPTP = "cptp"
SIGNED = "signed-postprocessed"


def _check_axis(axis) -> tuple:
    if isinstance(axis, str):
        if axis not in _UNIT:
            raise ValueError(f"unknown axis name {axis!r}")
        return _UNIT[axis]
    n = np.asarray(axis, dtype=float)
    if n.shape != (3,) or not np.all(np.isfinite(n)):
        raise ValueError(f"axis must be a finite 3-vector, got {axis!r}")
    if abs(np.linalg.norm(n) - 1.0) > STRUCT_TOL:
        raise ValueError(f"axis {axis!r} is not a unit vector")
    return tuple(float(c) for c in n)


def _axis_name(axis: tuple) -> str | None:
    for name, u in _UNIT.items():
        if np.allclose(axis, u, atol=STRUCT_TOL, rtol=0):
            return name
    return None


@dataclass(frozen=True)
class CatalogOperation:
    """A physical operation on the sensor qubit."""

    kind: str
    label: str
    angle: float = 0.0
    axis: tuple = (0.0, 0.0, 1.0)
    axis_name: str = ""

    @property
    def physical(self) -> str:
        return SIGNED if self.kind == MEASUREMENT else CPTP

    @property
    def matrix(self) -> np.ndarray:
        return superop(self).matrix

    def __str__(self):
        return self.label


def identity_op() -> CatalogOperation:
    return CatalogOperation(IDENTITY, "R0")


def rotation(angle: float, axis) -> CatalogOperation:
    """Rotation about ``axis`` (a unit vector or one of x, y, z, xy, yz, zx)."""
    if isinstance(axis, str):
        if axis not in _UNIT:
            raise ValueError(f"unknown axis name {axis!r}")
        axis = _UNIT[axis]
    axis = _check_axis(axis)
    angle = float(angle)
    name = _axis_name(axis)
    return CatalogOperation(ROTATION, _rotation_label(angle, axis, name), angle, axis, name or "")


def _rotation_label(angle: float, axis: tuple, name: str | None) -> str:
    if angle == 0.0:
        return "R0"
    deg = np.degrees(angle)
    if name in ("x", "y", "z") and np.isclose(abs(deg), 90.0, atol=1e-9, rtol=0):
        return f"R{name}{'+' if deg > 0 else '-'}90"
    if name in ("xy", "yz", "zx") and np.isclose(deg, 180.0, atol=1e-9, rtol=0):
        return f"R{name}180"
    ax = name if name else ",".join(repr(c) for c in axis)
    return f"R{ax}:{angle!r}"


def measurement(axis: str) -> CatalogOperation:
    if axis not in AXES:
        raise ValueError(f"measurement axis must be one of x, y, z, got {axis!r}")
    return CatalogOperation(MEASUREMENT, f"M{axis}", axis=_UNIT[axis], axis_name=axis)


def polarization(axis: str) -> CatalogOperation:
    if axis not in AXES:
        raise ValueError(f"polarization axis must be one of x, y, z, got {axis!r}")
    return CatalogOperation(POLARIZATION, f"P{axis}", axis=_UNIT[axis], axis_name=axis)


def _build_catalog() -> tuple:
    h = np.pi / 2
    ops = [identity_op()]
    ops += [rotation(h, a) for a in "xyz"]
    ops += [rotation(-h, a) for a in "xyz"]
    ops += [rotation(np.pi, a) for a in ("xy", "yz", "zx")]
    ops += [measurement(a) for a in "xyz"]
    ops += [polarization(a) for a in "xyz"]
    return tuple(ops)


CATALOG = _build_catalog()
LABELS = tuple(op.label for op in CATALOG)
_BY_LABEL = {op.label: op for op in CATALOG}

_GENERIC_ROT = re.compile(r"^R(?P<axis>[^:]+):(?P<angle>.+)$")


def parse_label(label: str) -> CatalogOperation:
    """Parse a canonical label (``R0``, ``Rx+90``, ``Mz``...) or ``R<axis>:<rad>``."""
    label = label.strip()
    if label in _BY_LABEL:
        return _BY_LABEL[label]
    m = _GENERIC_ROT.match(label)
    if m:
        ax = m.group("axis")
        try:
            angle = float(m.group("angle"))
            axis = ax if ax in _UNIT else tuple(float(c) for c in ax.split(","))
            return rotation(angle, axis)
        except ValueError as exc:
            raise ValueError(f"cannot parse operation label {label!r}: {exc}") from None
    raise ValueError(f"unknown operation label {label!r}")


# ---------------------------------------------------------------- Kraus forms

def rotation_unitary(angle: float, axis) -> np.ndarray:
    n = np.asarray(axis, dtype=float)
    ns = n[0] * PAULIS[1] + n[1] * PAULIS[2] + n[2] * PAULIS[3]
    return np.cos(angle / 2) * I2 - 1j * np.sin(angle / 2) * ns


def _eigenprojectors(axis: str):
    s = PAULIS[AXES[axis]]
    return (I2 + s) / 2, (I2 - s) / 2


_KET_UP = np.array([1, 0], dtype=complex)   # |+z>
_KET_DN = np.array([0, 1], dtype=complex)   # |-z>
_PZ_KRAUS = (np.outer(_KET_DN, _KET_DN.conj()), np.outer(_KET_DN, _KET_UP.conj()))


def kraus(op: CatalogOperation) -> list:
    """Signed Kraus pieces [(sign, K)] with Phi(rho) = sum sign K rho K^dag."""
    if op.kind == IDENTITY:
        return [(1.0, I2.copy())]
    if op.kind == ROTATION:
        return [(1.0, rotation_unitary(op.angle, op.axis))]
    if op.kind == MEASUREMENT:
        pp, pm = _eigenprojectors(op.axis_name)
        return [(1.0, pp), (-1.0, pm)]
    if op.kind == POLARIZATION:
        if op.axis_name == "z":
            pre = post = I2
        elif op.axis_name == "x":
            # P_x = R_y(+pi/2) P_z R_y(-pi/2)
            post, pre = rotation_unitary(np.pi / 2, _UNIT["y"]), rotation_unitary(-np.pi / 2, _UNIT["y"])
        else:
            # P_y = R_x(-pi/2) P_z R_x(+pi/2)
            post, pre = rotation_unitary(-np.pi / 2, _UNIT["x"]), rotation_unitary(np.pi / 2, _UNIT["x"])
        return [(1.0, post @ K @ pre) for K in _PZ_KRAUS]
    raise ValueError(f"unknown operation kind {op.kind!r}")


def kraus_sequence(ops) -> list:
    """Signed Kraus pieces of the composition of ``ops`` (applied in order)."""
    pieces = [(1.0, I2.copy())]
    for op in ops:
        pieces = [(s1 * s2, K2 @ K1) for s1, K1 in pieces for s2, K2 in kraus(op)]
    return pieces


def superop_from_kraus(pieces) -> SuperOperator:
    basis = pauli_basis(1)
    m = sum(s * sandwich_superop(K, K, basis).matrix for s, K in pieces)
    return SuperOperator(m.real if np.max(np.abs(np.imag(m))) < STRUCT_TOL else m, basis)


@lru_cache(maxsize=4096)
def superop(op: CatalogOperation) -> SuperOperator:
    """Liouville (Pauli-basis) matrix of a catalog operation."""
    return superop_from_kraus(kraus(op))


# ------------------------------------------------------ closed-form builders

def bloch_rotation_matrix(angle: float, axis) -> np.ndarray:
    n = np.asarray(_check_axis(axis))
    c, s = np.cos(angle), np.sin(angle)
    eps = np.zeros((3, 3, 3))
    eps[0, 1, 2] = eps[1, 2, 0] = eps[2, 0, 1] = 1.0
    eps[0, 2, 1] = eps[2, 1, 0] = eps[1, 0, 2] = -1.0
    return c * np.eye(3) + (1 - c) * np.outer(n, n) - s * np.einsum("ijk,k->ij", eps, n)


def rotation_superop(angle: float, axis) -> SuperOperator:
    """Block form diag(1, R(angle, axis)) in the Pauli basis."""
    m = np.eye(4)
    m[1:, 1:] = bloch_rotation_matrix(angle, axis)
    return SuperOperator(m, pauli_basis(1))


def measurement_superop(axis: str) -> SuperOperator:
    return superop(measurement(axis))


def polarization_superop(axis: str) -> SuperOperator:
    return superop(polarization(axis))


# ----------------------------------------------------------------- generators

@dataclass(frozen=True)
class GeneratorIndex:
    """Index of a generator map.

    ``axes`` is () for J_0, (a,) for J_a^sign and (a, b) for J_ab^sign.
    Pairs may be given in either order; J_ab^+ = J_ba^+ and J_ab^- = -J_ba^-.
    """

    axes: tuple = ()
    sign: str = "+"

    def __post_init__(self):
        if len(self.axes) > 2 or any(a not in AXES for a in self.axes):
            raise ValueError(f"invalid generator axes {self.axes!r}")
        if self.sign not in "+-" or len(self.sign) != 1:
            raise ValueError(f"invalid generator sign {self.sign!r}")


def generator_superop(g: GeneratorIndex) -> SuperOperator:
    basis = pauli_basis(1)
    if not g.axes:
        return SuperOperator(np.eye(4), basis)
    if len(g.axes) == 1:
        left, right = PAULIS[AXES[g.axes[0]]], I2
    else:
        left, right = PAULIS[AXES[g.axes[0]]], PAULIS[AXES[g.axes[1]]]
    # sandwich(A, B) is rho -> A rho B^dag; Paulis are Hermitian.
    ab = sandwich_superop(left, right, basis).matrix
    ba = sandwich_superop(right, left, basis).matrix
    m = (ab + ba) / 2 if g.sign == "+" else -0.5j * (ab - ba)
    return SuperOperator(m, basis)


def J(*axes, sign: str = "+") -> np.ndarray:
    """Shorthand for ``generator_superop(GeneratorIndex(axes, sign)).matrix``."""
    return generator_superop(GeneratorIndex(tuple(axes), sign)).matrix


def unitary_generator_expansion(angle: float, axis) -> np.ndarray:
    """Rotation map written as cos^2 J_0 + 2 cos sin n_a J_a^- + sin^2 n_a n_b J_ab^+.

    The trigonometric argument is half the rotation angle.
    """
    n = _check_axis(axis)
    h = angle / 2
    m = np.cos(h) ** 2 * J()
    for a, na in zip("xyz", n):
        m = m + 2 * np.cos(h) * np.sin(h) * na * J(a, sign="-")
    for (a, na), (b, nb) in product(zip("xyz", n), repeat=2):
        m = m + np.sin(h) ** 2 * na * nb * J(a, b, sign="+")
    return m


def unitary_generator_expansion_check(angle: float, axis) -> float:
    """Frobenius residual between the rotation matrix and its generator expansion."""
    return float(np.linalg.norm(rotation_superop(angle, axis).matrix - unitary_generator_expansion(angle, axis)))


def polarization_generator_expansion(axis: str) -> np.ndarray:
    """Generator form 1/4 [J_0 - 2 J_a^+ + sum_b J_bb^+ - 2 J_(cyclic pair)^-]."""
    pair = {"z": ("x", "y"), "x": ("y", "z"), "y": ("z", "x")}[axis]
    diag = J("x", "x") + J("y", "y") + J("z", "z")
    return 0.25 * (J() - 2 * J(axis, sign="+") + diag - 2 * J(*pair, sign="-"))


def transfer_matrix() -> np.ndarray:
    """16x16 matrix whose column i is the flattened Liouville matrix of CATALOG[i]."""
    return np.array([superop(op).matrix.real.ravel() for op in CATALOG]).T
