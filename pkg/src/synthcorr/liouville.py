"""Dense linear algebra on Hilbert and Liouville spaces.

Operators are plain complex numpy arrays.  Superoperators are expressed in an
orthogonal operator basis {A_n} with Tr(A_m^dag A_n) = c * delta_mn.  For
qubit systems the basis is the unnormalized Pauli set {1, sx, sy, sz} (c = 2)
and its tensor products (c = D).  The coefficient vector of an operator X is
v_n = Tr(A_n^dag X) / c, so a density matrix rho = (1 + r.sigma)/2 has
coefficients (1, r_x, r_y, r_z)/2.  A superoperator matrix acts on these
coefficient columns: M_mn = Tr(A_m^dag Phi(A_n)) / c.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

# Tolerances used throughout the package.
STRUCT_TOL = 1e-12
PHYS_TOL = 1e-10

MAX_EXPM_DIM = 256

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, SX, SY, SZ)


class DimensionError(ValueError):
    """Raised when operand dimensions do not agree."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def as_operator(op, dim: int | None = None) -> np.ndarray:
    """Return ``op`` as a square complex array, optionally checking its size."""
    a = np.asarray(op, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"operator must be square, got shape {a.shape}")
    if dim is not None and a.shape[0] != dim:
        raise DimensionError(f"operator dimension {a.shape[0]} != {dim}")
    return a


def is_hermitian(op, tol: float = STRUCT_TOL) -> bool:
    a = as_operator(op)
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= tol)


def has_unit_trace(op, tol: float = STRUCT_TOL) -> bool:
    return bool(abs(np.trace(as_operator(op)) - 1.0) <= tol)


@dataclass(frozen=True)
class OperatorBasis:
    """Ordered orthogonal operator basis with Tr(A_m^dag A_n) = norm * delta_mn."""

    dim: int
    elements: tuple
    norm: float
    labels: tuple = ()

    def __post_init__(self):
        if len(self.elements) != self.dim ** 2:
            raise DimensionError("basis must contain dim**2 elements")
        st = np.array(self.elements, dtype=complex)
        st.setflags(write=False)
        object.__setattr__(self, "_stack", st)

    @property
    def stack(self) -> np.ndarray:
        """Basis elements as an array of shape (D**2, D, D)."""
        return self._stack

    def __hash__(self):
        return hash((self.dim, self.norm, self.labels))

    def __eq__(self, other):
        if not isinstance(other, OperatorBasis):
            return NotImplemented
        return self.dim == other.dim and self.labels == other.labels and self.norm == other.norm


@lru_cache(maxsize=None)
def pauli_basis(n_qubits: int = 1) -> OperatorBasis:
    """Tensor-product Pauli basis on ``n_qubits`` qubits (lexicographic order)."""
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    names = "Ixyz"
    elems, labels = [], []
    for idx in itertools.product(range(4), repeat=n_qubits):
        m = np.array([[1.0 + 0j]])
        for i in idx:
            m = np.kron(m, PAULIS[i])
        m.setflags(write=False)
        elems.append(m)
        labels.append("".join(names[i] for i in idx))
    return OperatorBasis(2 ** n_qubits, tuple(elems), float(2 ** n_qubits), tuple(labels))


def basis_for_dim(dim: int) -> OperatorBasis:
    n = int(round(np.log2(dim)))
    if 2 ** n != dim:
        raise DimensionError(f"no Pauli basis for dimension {dim}")
    return pauli_basis(n)


def vectorize(op, basis: OperatorBasis | None = None) -> np.ndarray:
    """Coefficients v_n = Tr(A_n^dag op)/c of ``op`` in ``basis``."""
    a = as_operator(op)
    basis = basis or basis_for_dim(a.shape[0])
    if a.shape[0] != basis.dim:
        raise DimensionError(f"operator dimension {a.shape[0]} != basis dimension {basis.dim}")
    # Tr(A^dag X) = sum_ij conj(A_ij) X_ij
    return np.einsum("nij,ij->n", basis.stack.conj(), a) / basis.norm


def unvectorize(v, basis: OperatorBasis | None = None) -> np.ndarray:
    """Inverse of :func:`vectorize`: sum_n v_n A_n."""
    v = np.asarray(v, dtype=complex)
    if basis is None:
        basis = basis_for_dim(int(round(np.sqrt(v.shape[0]))))
    if v.ndim != 1 or v.shape[0] != basis.dim ** 2:
        raise DimensionError(f"vector length {v.shape} does not match basis with {basis.dim ** 2} elements")
    return np.einsum("n,nij->ij", v, basis.stack)


@dataclass(frozen=True, eq=False)
class SuperOperator:
    """Linear map on operators, stored as a matrix over ``basis`` coefficients."""

    matrix: np.ndarray
    basis: OperatorBasis

    def __post_init__(self):
        m = _freeze(self.matrix)
        n = self.basis.dim ** 2
        if m.shape != (n, n):
            raise DimensionError(f"superoperator must be {n}x{n}, got {m.shape}")
        object.__setattr__(self, "matrix", m)

    @property
    def hilbert_dim(self) -> int:
        return self.basis.dim

    def apply(self, op) -> np.ndarray:
        return unvectorize(self.matrix @ vectorize(op, self.basis), self.basis)

    def __matmul__(self, other: "SuperOperator") -> "SuperOperator":
        _check_same_basis(self, other)
        return SuperOperator(self.matrix @ other.matrix, self.basis)

    def __add__(self, other: "SuperOperator") -> "SuperOperator":
        _check_same_basis(self, other)
        return SuperOperator(self.matrix + other.matrix, self.basis)

    def __sub__(self, other: "SuperOperator") -> "SuperOperator":
        _check_same_basis(self, other)
        return SuperOperator(self.matrix - other.matrix, self.basis)

    def __mul__(self, scalar) -> "SuperOperator":
        return SuperOperator(scalar * self.matrix, self.basis)

    __rmul__ = __mul__

    def __neg__(self) -> "SuperOperator":
        return SuperOperator(-self.matrix, self.basis)

    def allclose(self, other, tol: float = STRUCT_TOL) -> bool:
        m = other.matrix if isinstance(other, SuperOperator) else np.asarray(other)
        return bool(np.max(np.abs(self.matrix - m)) <= tol)


def _check_same_basis(a: SuperOperator, b: SuperOperator):
    if a.basis.dim != b.basis.dim:
        raise DimensionError("superoperators act on different spaces")


def superop_from_map(fn, basis: OperatorBasis) -> SuperOperator:
    """Build the matrix of a linear map given as a Python callable on operators."""
    cols = [vectorize(fn(a), basis) for a in basis.elements]
    return SuperOperator(np.array(cols).T, basis)


def _natural_to_basis(basis: OperatorBasis) -> np.ndarray:
    # Columns: row-major flattened basis elements.  vec(X) = V @ coeffs.
    return basis.stack.reshape(basis.dim ** 2, -1).T


def natural_superop(matrix_in_basis: np.ndarray, basis: OperatorBasis) -> np.ndarray:
    """Convert a basis-coefficient superoperator to row-major vec(X) form."""
    V = _natural_to_basis(basis)
    Vinv = V.conj().T / basis.norm
    return V @ np.asarray(matrix_in_basis) @ Vinv


def from_natural_superop(nat: np.ndarray, basis: OperatorBasis) -> SuperOperator:
    V = _natural_to_basis(basis)
    Vinv = V.conj().T / basis.norm
    return SuperOperator(Vinv @ np.asarray(nat) @ V, basis)


def sandwich_superop(A, B, basis: OperatorBasis | None = None) -> SuperOperator:
    """Superoperator of rho -> A rho B^dag."""
    A = as_operator(A)
    B = as_operator(B, A.shape[0])
    basis = basis or basis_for_dim(A.shape[0])
    if basis.dim != A.shape[0]:
        raise DimensionError("operator and basis dimensions differ")
    # Row-major vec(A X B^dag) = (A kron conj(B)) vec(X)
    return from_natural_superop(np.kron(A, B.conj()), basis)


def left_superop(A, basis: OperatorBasis | None = None) -> SuperOperator:
    A = as_operator(A)
    return sandwich_superop(A, np.eye(A.shape[0]), basis)


def right_superop(A, basis: OperatorBasis | None = None) -> SuperOperator:
    """rho -> rho A."""
    A = as_operator(A)
    return sandwich_superop(np.eye(A.shape[0]), A.conj().T, basis)


def _warn_non_hermitian(B):
    if not is_hermitian(B, 1e-10):
        warnings.warn("coupling operator is not Hermitian", RuntimeWarning, stacklevel=3)


def comm_superop(B, basis: OperatorBasis | None = None) -> SuperOperator:
    """B^- rho = -i (B rho - rho B) / 2."""
    B = as_operator(B)
    _warn_non_hermitian(B)
    L, R = left_superop(B, basis), right_superop(B, basis)
    return SuperOperator(-0.5j * (L.matrix - R.matrix), L.basis)


def anticomm_superop(B, basis: OperatorBasis | None = None) -> SuperOperator:
    """B^+ rho = (B rho + rho B) / 2."""
    B = as_operator(B)
    _warn_non_hermitian(B)
    L, R = left_superop(B, basis), right_superop(B, basis)
    return SuperOperator(0.5 * (L.matrix + R.matrix), L.basis)


def kron(a, b):
    """Tensor product of two operators or two superoperators.

    For superoperators the product basis is the lexicographic tensor basis,
    which coincides with the multi-qubit Pauli ordering.
    """
    if isinstance(a, SuperOperator) and isinstance(b, SuperOperator):
        basis = basis_for_dim(a.basis.dim * b.basis.dim)
        return SuperOperator(np.kron(a.matrix, b.matrix), basis)
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def expm(M, scale: complex = 1.0) -> np.ndarray:
    """exp(scale * M).

    Hermitian and anti-Hermitian arguments use an eigendecomposition; all
    other matrices go through scipy's scaling-and-squaring Pade routine.
    """
    A = as_operator(M) * scale
    if A.shape[0] > MAX_EXPM_DIM:
        raise DimensionError(f"dimension {A.shape[0]} exceeds {MAX_EXPM_DIM}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    scl = max(1.0, float(np.max(np.abs(A))))
    if np.max(np.abs(A - A.conj().T)) <= STRUCT_TOL * scl:
        w, v = np.linalg.eigh(0.5 * (A + A.conj().T))
        return (v * np.exp(w)) @ v.conj().T
    if np.max(np.abs(A + A.conj().T)) <= STRUCT_TOL * scl:
        H = 0.5j * (A - A.conj().T)  # A = -iH with H Hermitian
        w, v = np.linalg.eigh(H)
        return (v * np.exp(-1j * w)) @ v.conj().T
    return scipy.linalg.expm(A)


def hermitian_function(H, fn) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix via its eigendecomposition."""
    H = as_operator(H)
    w, v = np.linalg.eigh(0.5 * (H + H.conj().T))
    return (v * fn(w)) @ v.conj().T
