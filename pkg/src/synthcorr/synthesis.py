"""Channel synthesis: catalog decomposition, CPTP checks and channel builders.

A synthesized channel is a weighted sum of operation sequences.  Each term
is ``(weight, (op_1, op_2, ...))`` where the operations are applied in order.
Signed weights are realized experimentally by repeating the sequence with
different operations and combining the recorded signals.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from . import catalog
from .catalog import CATALOG, LABELS, CatalogOperation, parse_label
from .liouville import (
    PHYS_TOL,
    STRUCT_TOL,
    SuperOperator,
    natural_superop,
    pauli_basis,
)

MAX_ROBUST_REPEAT = 12


# ------------------------------------------------------------ channel values

def _as_sequence(ops) -> tuple:
    if isinstance(ops, CatalogOperation):
        return (ops,)
    return tuple(parse_label(o) if isinstance(o, str) else o for o in ops)


def sequence_matrix(ops: Sequence[CatalogOperation]) -> np.ndarray:
    m = np.eye(4)
    for op in ops:
        m = catalog.superop(op).matrix @ m
    return m


@dataclass(frozen=True, eq=False)
class SynthesizedChannel:
    """Weighted sum of catalog operation sequences acting on the sensor."""

    terms: tuple
    name: str = ""

    def __post_init__(self):
        terms = tuple((float(w), _as_sequence(ops)) for w, ops in self.terms)
        if not terms:
            raise ValueError("a channel needs at least one term")
        object.__setattr__(self, "terms", terms)
        m = sum(w * sequence_matrix(ops) for w, ops in terms)
        m = np.array(np.real_if_close(m, tol=1000))
        m.setflags(write=False)
        object.__setattr__(self, "_matrix", m)

    @property
    def matrix(self) -> np.ndarray:
        """Pauli-basis Liouville matrix of the weighted sum."""
        return self._matrix

    @property
    def superoperator(self) -> SuperOperator:
        return SuperOperator(self._matrix, pauli_basis(1))

    @property
    def physical(self) -> str:
        return catalog.CPTP if cptp_check(self._matrix).is_cptp else catalog.SIGNED

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.terms])

    def term_natural_maps(self) -> np.ndarray:
        """Row-major vec form (T, 4, 4) of each term's sequence map."""
        basis = pauli_basis(1)
        return np.array([natural_superop(sequence_matrix(ops), basis) for _, ops in self.terms])

    def with_weights(self, weights) -> "SynthesizedChannel":
        return SynthesizedChannel(tuple((w, ops) for w, (_, ops) in zip(weights, self.terms)), self.name)

    def then(self, other: "SynthesizedChannel") -> "SynthesizedChannel":
        """Composition: apply ``self`` first, then ``other``."""
        terms = tuple((w1 * w2, o1 + o2) for w1, o1 in self.terms for w2, o2 in other.terms)
        return SynthesizedChannel(terms, self.name)

    def __repr__(self):
        body = " + ".join(f"{w:g}*[{' '.join(o.label for o in ops)}]" for w, ops in self.terms)
        return f"SynthesizedChannel({self.name or ''}{': ' if self.name else ''}{body})"


def channel(*terms, name: str = "") -> SynthesizedChannel:
    """Convenience builder: ``channel((0.5, "Ry+90"), (0.5, "Ry-90"))``."""
    out = []
    for w, ops in terms:
        if isinstance(ops, str):
            ops = ops.split()
        out.append((w, ops))
    return SynthesizedChannel(tuple(out), name)


def identity_channel() -> SynthesizedChannel:
    return channel((1.0, "R0"), name="identity")


# ---------------------------------------------------------------- text format

def format_channel(ch: SynthesizedChannel) -> str:
    """One ``weight label [label ...]`` line per term."""
    return "".join(f"{w!r} {' '.join(o.label for o in ops)}\n" for w, ops in ch.terms)


def format_channels(chs: Iterable[SynthesizedChannel]) -> str:
    return "---\n".join(format_channel(c) for c in chs)


def parse_channels(text: str) -> list:
    """Parse channel text: terms as ``weight label...`` lines, channels separated by ``---``.

    Blank lines and ``#`` comments are ignored.
    """
    chans, cur = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "---":
            if cur:
                chans.append(SynthesizedChannel(tuple(cur)))
            cur = []
            continue
        parts = line.split()
        if len(parts) < 2:
            raise ValueError(f"line {lineno}: expected 'weight label...', got {raw!r}")
        try:
            w = float(parts[0])
        except ValueError:
            raise ValueError(f"line {lineno}: bad weight {parts[0]!r}") from None
        try:
            ops = tuple(parse_label(p) for p in parts[1:])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        cur.append((w, ops))
    if cur:
        chans.append(SynthesizedChannel(tuple(cur)))
    if not chans:
        raise ValueError("no channel terms found")
    return chans


def parse_channel(text: str) -> SynthesizedChannel:
    chans = parse_channels(text)
    if len(chans) != 1:
        raise ValueError(f"expected one channel, found {len(chans)}")
    return chans[0]


# ----------------------------------------------------------------- decompose

@dataclass(frozen=True)
class WeightSolution:
    weights: dict
    residual: float
    method: str = "solve"

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.weights[l] for l in LABELS])

    def to_channel(self, tol: float = 0.0) -> SynthesizedChannel:
        terms = tuple((w, (op,)) for op, w in zip(CATALOG, self.vector) if abs(w) > tol)
        return SynthesizedChannel(terms or ((0.0, (CATALOG[0],)),))


@lru_cache(maxsize=1)
def _transfer_factorization():
    T = catalog.transfer_matrix()
    cond = np.linalg.cond(T)
    inv = np.linalg.inv(T) if cond < 1e10 else np.linalg.pinv(T)
    inv.setflags(write=False)
    return T, inv, cond


SPARSE_NAMES = tuple(f"P{a}{b}" for a in "0xyz" for b in "0xyz")


def sparse_element(name: str) -> np.ndarray:
    """Matrix unit P_ab: a single 1 at Liouville row a, column b (a, b in 0xyz)."""
    idx = {"0": 0, "x": 1, "y": 2, "z": 3}
    if len(name) != 3 or name[0] != "P" or name[1] not in idx or name[2] not in idx:
        raise ValueError(f"unknown sparse element {name!r}; expected e.g. 'Pxy'")
    m = np.zeros((4, 4))
    m[idx[name[1]], idx[name[2]]] = 1.0
    return m


def decompose(target) -> WeightSolution:
    """Weights p on the sixteen catalog operations with sum p_i G'_i = target."""
    m = target.matrix if hasattr(target, "matrix") else np.asarray(target)
    if m.shape != (4, 4):
        raise ValueError(f"target must be a 4x4 Liouville matrix, got {m.shape}")
    T, inv, cond = _transfer_factorization()
    rhs = m.ravel()
    if np.iscomplexobj(rhs):
        p = inv @ rhs
        p = np.real_if_close(p, tol=1000)
    else:
        p = inv @ rhs
    method = "solve" if cond < 1e10 else "pinv"
    resid = float(np.linalg.norm(T @ p - rhs))
    return WeightSolution(dict(zip(LABELS, p.tolist())), resid, method)


def reconstruct(weights) -> np.ndarray:
    p = weights.vector if isinstance(weights, WeightSolution) else np.asarray(weights)
    T, _, _ = _transfer_factorization()
    return (T @ p).reshape(4, 4)


# ---------------------------------------------------------------- CPTP check

@dataclass(frozen=True)
class CPTPReport:
    hermitian_C: bool
    positive_C: bool
    trace_preserving: bool
    min_choi_eigenvalue: float
    tp_defect: float
    choi: np.ndarray = field(repr=False, compare=False, default=None)

    @property
    def is_cptp(self) -> bool:
        return self.hermitian_C and self.positive_C and self.trace_preserving


def choi_matrix(liouville) -> np.ndarray:
    """Choi matrix sum_ij Phi(|i><j|) (x) |i><j| of a Pauli-basis Liouville matrix."""
    m = liouville.matrix if hasattr(liouville, "matrix") else np.asarray(liouville)
    basis = pauli_basis(int(round(np.log2(np.sqrt(m.shape[0])))))
    D = basis.dim
    nat = natural_superop(m, basis)
    # nat[(k,l),(i,j)] = Phi(|i><j|)[k,l]; Choi[(k,i),(l,j)]
    return nat.reshape(D, D, D, D).transpose(0, 2, 1, 3).reshape(D * D, D * D)


def cptp_check(liouville, tol: float = PHYS_TOL) -> CPTPReport:
    m = liouville.matrix if hasattr(liouville, "matrix") else np.asarray(liouville)
    C = choi_matrix(m)
    D = int(round(np.sqrt(C.shape[0])))
    herm = bool(np.max(np.abs(C - C.conj().T)) <= tol)
    ev = np.linalg.eigvalsh(0.5 * (C + C.conj().T))
    # Tr_out: sum_k Choi[(k,i),(k,j)] must equal delta_ij
    partial = np.einsum("kikj->ij", C.reshape(D, D, D, D))
    defect = float(np.linalg.norm(partial - np.eye(D)))
    return CPTPReport(herm, bool(ev.min() >= -tol), defect <= tol, float(ev.min()), defect, C)


# ------------------------------------------------ reference protocol channels

def _r(label):
    return parse_label(label)


def second_order_channels() -> tuple:
    """(P1, P2): P1 averages +/- pi/2 turns about y, P2 is a pi/2 turn about y."""
    p1 = channel((0.5, "Ry+90"), (0.5, "Ry-90"), name="P1")
    p2 = channel((1.0, "Ry+90"), name="P2")
    return p1, p2


def fourth_order_channels() -> tuple:
    """(P1, P2, P3, P4) for the C^{+--+} extraction."""
    p1 = channel((0.5, "Ry+90"), (-0.5, "Ry-90"), name="P1")
    p2 = channel((0.5, "Rx+90"), (-0.5, "Rx-90"), name="P2")
    p3 = channel((0.5, "Rx+90"), (0.5, "Rx-90"), name="P3")
    p4 = channel((0.5, "Ry+90"), (-0.5, "Ry-90"), name="P4")
    return p1, p2, p3, p4


def robust_repeat(delta_theta: float, n: int) -> SynthesizedChannel:
    """n-fold repetition of the averaged x-rotation pair with angle error delta_theta."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > MAX_ROBUST_REPEAT:
        raise ValueError(f"n must be <= {MAX_ROBUST_REPEAT} (2**n phase-cycle terms)")
    a = np.pi / 2 + delta_theta
    one = SynthesizedChannel(((0.5, (catalog.rotation(a, "x"),)), (0.5, (catalog.rotation(-a, "x"),))), "P3")
    out = one
    for _ in range(n - 1):
        out = out.then(one)
    return SynthesizedChannel(out.terms, f"P3^{n}")


def robust_repeat_closed_form(delta_theta: float, n: int) -> np.ndarray:
    """diag(1, 1, (-sin dtheta)^n, (-sin dtheta)^n)."""
    e = (-np.sin(delta_theta)) ** n
    return np.diag([1.0, 1.0, e, e])


# ------------------------------------------------------ general weight solver

class InfeasibleError(ValueError):
    def __init__(self, message, rows=()):
        super().__init__(message)
        self.rows = tuple(rows)


@dataclass(frozen=True)
class GeneralWeightProblem:
    """Isolate one (eta, alpha) coefficient out of all non-vanishing ones.

    ``target_eta`` uses printed notation (latest first); ``target_alpha``
    lists the coupling-term index for each non-zero entry of ``target_eta``,
    also latest first.  ``coupling_ops`` are the sensor operators S_alpha;
    by default sigma_z/2 for d = 1 and (sigma_x, sigma_y, sigma_z)/2 otherwise.
    """

    N: int
    d: int
    target_eta: str
    target_alpha: tuple = ()
    D: int = 2
    coupling_ops: tuple | None = None
    rho_S: np.ndarray | None = None
    observable: np.ndarray | None = None

    def sensor_ops(self) -> list:
        from .liouville import SX, SY, SZ

        if self.coupling_ops is not None:
            ops = [np.asarray(o, dtype=complex) for o in self.coupling_ops]
            if len(ops) != self.d:
                raise ValueError("coupling_ops must have d entries")
            return ops
        if self.d == 1:
            return [SZ / 2]
        return [SX / 2, SY / 2, SZ / 2][: self.d]

    @property
    def feasible(self) -> bool:
        return self.D ** 4 >= 2 * self.d + 1


@dataclass(frozen=True)
class GeneralWeightSolution:
    weights: np.ndarray          # shape (16,) * N, slot index latest first
    rows: tuple                  # (eta notation, alpha tuple) for each retained row
    coefficients: np.ndarray     # induced coefficient per retained row
    target_index: int
    max_off_target: float
    excluded: int


def excluded_coefficient_count(d: int, N: int) -> int:
    """Geometric sum d (2d)^(N-1) + ... + d = d ((2d)^N - 1) / (2d - 1)."""
    return sum(d * (2 * d) ** j for j in range(N))


def _rows(N: int, d: int):
    from .ordering import vanishing_correlation_filter

    kept, excluded = [], 0
    for eta in itertools.product("+-0", repeat=N):  # printed order, latest first
        theta = sum(e != "0" for e in eta)
        for alpha in itertools.product(range(d), repeat=theta):
            if vanishing_correlation_filter("".join(eta)):
                excluded += 1
            else:
                kept.append(("".join(eta), alpha))
    return kept, excluded


def _row_factors(problem: GeneralWeightProblem, rows):
    """Local factors of each coefficient row for matrix-unit channel bases.

    With C_beta = E_(a,b) the coefficient  2^Theta o^T S_N E S_(N-1) ... S_1 E r
    factorizes into (o^T S_N)[a_N], S_(N-1)[b_N, a_(N-1)], ..., S_1[b_2, a_1], r[b_1].
    The weight tensor index order (a_N, b_N, ..., a_1, b_1) groups exactly into
    these factors.
    """
    from .liouville import SY, vectorize
    from .oracle import sensor_superops

    N = problem.N
    rho = problem.rho_S if problem.rho_S is not None else np.diag([1.0, 0.0]).astype(complex)
    obs = problem.observable if problem.observable is not None else SY
    o = np.array([np.trace(obs @ b).real for b in pauli_basis(1).elements])
    r = vectorize(rho).real
    sup = [sensor_superops(S) for S in problem.sensor_ops()]
    F = [np.empty((len(rows), 4))] + [np.empty((len(rows), 16)) for _ in range(N - 1)] + [np.empty((len(rows), 4))]
    for i, (eta, alpha) in enumerate(rows):
        mats, ai = [], 0
        for e in eta:  # latest first
            if e == "0":
                mats.append(np.eye(4))
            else:
                # bath +  pairs with sensor -, and vice versa; factor 2 per slot
                mats.append(2 * sup[alpha[ai]]["-" if e == "+" else "+"])
                ai += 1
        F[0][i] = o @ mats[0]
        for k in range(1, N):
            F[k][i] = mats[k].ravel()  # [b_(k), a_(k-1)] row-major
        F[N][i] = r
    return F


def general_weight_solver(problem: GeneralWeightProblem, backend: str | None = None,
                          tol: float = 1e-8) -> GeneralWeightSolution:
    """Minimum-norm slot-basis weights that isolate the target coefficient."""
    from ._kernels import expand_rows

    if not problem.feasible:
        raise InfeasibleError(f"D^4 = {problem.D ** 4} < 2d+1 = {2 * problem.d + 1}")
    if problem.D != 2:
        raise NotImplementedError("only qubit sensors are supported")
    if len(problem.target_eta) != problem.N:
        raise ValueError("target_eta must have N entries")
    rows, excluded = _rows(problem.N, problem.d)
    tgt = (problem.target_eta, tuple(problem.target_alpha))
    if tgt not in rows:
        raise InfeasibleError(f"target {tgt} is not a retained coefficient", [tgt])
    ti = rows.index(tgt)
    F = _row_factors(problem, rows)
    gram = np.ones((len(rows), len(rows)))
    for f in F:
        gram *= f @ f.T
    e = np.zeros(len(rows))
    e[ti] = 1.0
    c = np.linalg.lstsq(gram, e, rcond=1e-13)[0]
    p = expand_rows(c, F, backend=backend)
    coeffs = evaluate_rows(F, p)
    off = np.delete(coeffs, ti)
    max_off = float(np.max(np.abs(off), initial=0.0))
    if abs(coeffs[ti] - 1.0) > tol or max_off > tol:
        bad = [rows[i] for i in np.flatnonzero(np.abs(coeffs - e) > tol)]
        raise InfeasibleError("target coefficient cannot be isolated", bad)
    return GeneralWeightSolution(p.reshape((16,) * problem.N), tuple(rows), coeffs, ti, max_off, excluded)


def evaluate_rows(F, p) -> np.ndarray:
    """Contract factorized rows against a flat weight vector."""
    sizes = [f.shape[1] for f in F]
    x = np.asarray(p).reshape(sizes)
    x = np.tensordot(F[0], x, axes=(1, 0))
    for f in F[1:]:
        x = np.einsum("ij,ij...->i...", f, x)
    return x


def slot_weights_to_catalog(p: np.ndarray) -> np.ndarray:
    """Map matrix-unit slot weights to catalog-operation weights, slot by slot."""
    _, inv, _ = _transfer_factorization()
    q = np.asarray(p)
    for axis in range(q.ndim):
        q = np.moveaxis(np.tensordot(inv, q, axes=(1, axis)), 0, axis)
    return q


def product_weights(channels) -> np.ndarray:
    """Matrix-unit weight tensor of a sequence of fixed channels (given earliest first)."""
    p = np.ones(())
    for ch in reversed(list(channels)):
        m = ch.matrix if hasattr(ch, "matrix") else np.asarray(ch)
        p = np.multiply.outer(p, np.real(m).ravel())
    return p


def induced_coefficients(problem: GeneralWeightProblem, weights) -> tuple:
    """(rows, coefficients) produced by slot weights on every retained row."""
    rows, _ = _rows(problem.N, problem.d)
    F = _row_factors(problem, rows)
    return tuple(rows), evaluate_rows(F, np.asarray(weights).ravel())
