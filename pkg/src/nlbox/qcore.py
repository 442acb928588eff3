"""Dense finite-dimensional states, measurements, and channels.

Everything here is a small complex numpy array wrapped in a frozen
dataclass that validates its invariants on construction. Operations are
pure functions; values are safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, ShapeError, ValidationError
from .tolerances import ATOL, BORN_CLAMP, MAX_TENSOR_DIM, PURITY_MIN


def _freeze(obj, name, arr):
    arr = np.array(arr, dtype=complex)
    arr.setflags(write=False)
    object.__setattr__(obj, name, arr)
    return arr


@dataclass(frozen=True)
class KetVector:
    """A normalized pure state: complex amplitudes of unit norm."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amp = _freeze(self, "amplitudes", self.amplitudes)
        if amp.ndim != 1 or amp.size < 1:
            raise ShapeError("ket amplitudes must be a nonempty 1-D vector")
        norm2 = float(np.vdot(amp, amp).real)
        if abs(norm2 - 1.0) > ATOL:
            raise ValidationError(f"ket squared norm {norm2} deviates from 1 beyond {ATOL}")

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def overlap(self, other: "KetVector") -> complex:
        """Inner product <self|other>."""
        if self.dim != other.dim:
            raise ShapeError(f"ket dims differ: {self.dim} vs {other.dim}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "KetVector") -> float:
        """|<self|other>|^2."""
        return abs(self.overlap(other)) ** 2

    def projector(self) -> "DensityOperator":
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityOperator:
    """Trace-one positive-semidefinite Hermitian matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _freeze(self, "matrix", self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ShapeError("density matrix must be square")
        herm_gap = float(np.max(np.abs(m - m.conj().T)))
        if herm_gap > ATOL:
            raise ValidationError(f"density matrix not Hermitian: max |M - M^dag| = {herm_gap}")
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > ATOL:
            raise ValidationError(f"density matrix trace {tr} deviates from 1 beyond {ATOL}")
        min_eig = float(np.linalg.eigvalsh(m)[0])
        if min_eig < -ATOL:
            raise ValidationError(f"density matrix has eigenvalue {min_eig} < -{ATOL}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        """Tr(rho^2), real."""
        return float(np.trace(self.matrix @ self.matrix).real)

    def is_pure(self) -> bool:
        return self.purity() >= PURITY_MIN

    def principal_ket(self) -> KetVector:
        """Eigenvector of the largest eigenvalue, phase-fixed.

        Meaningful as "the" state only when the operator is (nearly) pure.
        """
        _, vecs = np.linalg.eigh(self.matrix)
        v = vecs[:, -1]
        return KetVector(_phase_fix(v))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


@dataclass(frozen=True)
class Povm:
    """A finite measurement: PSD effects summing to the identity."""

    effects: tuple

    def __post_init__(self):
        if len(self.effects) < 1:
            raise ValidationError("POVM needs at least one effect")
        mats = []
        dim = None
        for e in self.effects:
            e = np.array(e, dtype=complex)
            if e.ndim != 2 or e.shape[0] != e.shape[1]:
                raise ShapeError("POVM effects must be square matrices")
            if dim is None:
                dim = e.shape[0]
            elif e.shape[0] != dim:
                raise ShapeError("POVM effects have mixed dimensions")
            if float(np.max(np.abs(e - e.conj().T))) > ATOL:
                raise ValidationError("POVM effect not Hermitian")
            if float(np.linalg.eigvalsh(e)[0]) < -ATOL:
                raise ValidationError("POVM effect not positive semidefinite")
            e.setflags(write=False)
            mats.append(e)
        total = sum(mats)
        if float(np.max(np.abs(total - np.eye(dim)))) > ATOL:
            raise ValidationError("POVM effects do not sum to the identity")
        object.__setattr__(self, "effects", tuple(mats))

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    @property
    def n_outcomes(self) -> int:
        return len(self.effects)


@dataclass(frozen=True)
class Unitary:
    matrix: np.ndarray

    def __post_init__(self):
        m = _freeze(self, "matrix", self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ShapeError("unitary must be square")
        gap = float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))
        if gap > ATOL:
            raise ValidationError(f"matrix is not unitary: max |U^dag U - I| = {gap}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _phase_fix(v: np.ndarray) -> np.ndarray:
    """Rotate a global phase so the first nonzero amplitude is real positive."""
    v = np.array(v, dtype=complex)
    for a in v:
        if abs(a) > 1e-12:
            return v * (abs(a) / a)
    return v


def tensor(a, b):
    """Kronecker product of two kets or two density operators."""
    if isinstance(a, KetVector) and isinstance(b, KetVector):
        if a.dim * b.dim > MAX_TENSOR_DIM:
            raise CapacityError(
                f"tensor dimension {a.dim * b.dim} exceeds the cap {MAX_TENSOR_DIM}")
        return KetVector(np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, DensityOperator) and isinstance(b, DensityOperator):
        if a.dim * b.dim > MAX_TENSOR_DIM:
            raise CapacityError(
                f"tensor dimension {a.dim * b.dim} exceeds the cap {MAX_TENSOR_DIM}")
        return DensityOperator(np.kron(a.matrix, b.matrix))
    raise ShapeError("tensor expects two kets or two density operators")


def partial_trace(rho: DensityOperator, dims, keep) -> DensityOperator:
    """Trace out all factors not listed in `keep`.

    `dims` are the factor dimensions (their product must equal rho.dim);
    `keep` is an iterable of factor indices to retain, in ascending order.
    """
    dims = tuple(int(d) for d in dims)
    if int(np.prod(dims)) != rho.dim:
        raise ShapeError(f"factor dims {dims} do not multiply to {rho.dim}")
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if not keep or any(k < 0 or k >= n for k in keep):
        raise ShapeError(f"keep indices {keep} out of range for {n} factors")
    reduced = _partial_trace_raw(rho.matrix, dims, keep)
    return DensityOperator(reduced)


def _partial_trace_raw(mat: np.ndarray, dims, keep) -> np.ndarray:
    n = len(dims)
    t = mat.reshape(dims + tuple(dims))
    row = list(range(n))
    col = list(range(n, 2 * n))
    for i in range(n):
        if i not in keep:
            col[i] = row[i]
    out = [row[i] for i in keep] + [col[i] for i in keep]
    reduced = np.einsum(t, row + col, out)
    dk = int(np.prod([dims[i] for i in keep]))
    return reduced.reshape(dk, dk)


def born_probabilities(rho: DensityOperator, m: Povm) -> np.ndarray:
    """Outcome distribution Tr(E_k rho), tiny negatives clamped to zero."""
    if rho.dim != m.dim:
        raise ShapeError(f"state dim {rho.dim} vs POVM dim {m.dim}")
    probs = np.array([float(np.trace(e @ rho.matrix).real) for e in m.effects])
    if np.min(probs) < -BORN_CLAMP:
        raise ValidationError(f"Born probability {np.min(probs)} below clamp threshold")
    probs = np.clip(probs, 0.0, None)
    if abs(float(np.sum(probs)) - 1.0) > ATOL:
        raise ValidationError("Born probabilities do not sum to 1")
    return probs


def trace_distance(a: DensityOperator, b: DensityOperator) -> float:
    """(1/2) ||a - b||_1 via the eigenvalues of the difference."""
    if a.dim != b.dim:
        raise ShapeError(f"dims differ: {a.dim} vs {b.dim}")
    eigs = np.linalg.eigvalsh(a.matrix - b.matrix)
    return 0.5 * float(np.sum(np.abs(eigs)))


def trace_norm(mat: np.ndarray) -> float:
    """||M||_1 for a Hermitian matrix."""
    return float(np.sum(np.abs(np.linalg.eigvalsh(mat))))


# Common single-qubit states and bases.

def ket(*amplitudes) -> KetVector:
    return KetVector(np.array(amplitudes, dtype=complex))


KET0 = ket(1, 0)
KET1 = ket(0, 1)
KET_PLUS = ket(1 / np.sqrt(2), 1 / np.sqrt(2))
KET_MINUS = ket(1 / np.sqrt(2), -1 / np.sqrt(2))

COMPUTATIONAL_BASIS = (KET0, KET1)
HADAMARD_BASIS = (KET_PLUS, KET_MINUS)


def maximally_mixed(dim: int) -> DensityOperator:
    return DensityOperator(np.eye(dim) / dim)


def basis_povm(kets) -> Povm:
    """Projective measurement onto an orthonormal set of kets."""
    return Povm(tuple(np.outer(k.amplitudes, k.amplitudes.conj()) for k in kets))


def computational_povm(dim: int) -> Povm:
    effects = []
    for i in range(dim):
        e = np.zeros((dim, dim), dtype=complex)
        e[i, i] = 1.0
        effects.append(e)
    return Povm(tuple(effects))
